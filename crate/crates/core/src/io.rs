//! File formats: vectors (fvecs), attributes (JSON lines), schema (JSON),
//! queries (JSON lines), and ground truth (binary).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Number, Value};

use crate::error::{format, Error, Result};
use crate::filter::{Filter, Query};
use crate::model::{AttributeKind, AttributeSchema, AttributeValue, ColumnDef, Dataset, OrderedValue, VectorMatrix};
use crate::oracle::{KnnResult, Neighbor};

pub const VECTORS_FILE: &str = "vectors.fvecs";
pub const ATTRIBUTES_FILE: &str = "attributes.jsonl";
pub const SCHEMA_FILE: &str = "schema.json";

/// Largest dimension accepted when decoding.
pub const MAX_DIM: usize = 1 << 16;

fn read_i32_or_eof<R: Read>(r: &mut R) -> Result<Option<i32>> {
    let mut buf = [0u8; 4];
    let mut got = 0;
    while got < 4 {
        match r.read(&mut buf[got..])? {
            0 if got == 0 => return Ok(None),
            0 => return Err(format("truncated record header")),
            n => got += n,
        }
    }
    Ok(Some(i32::from_le_bytes(buf)))
}

fn truncated(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        format("truncated record")
    } else {
        Error::Io(e)
    }
}

/// Reads `[i32 d][d × f32]` records; every record must share one `d`.
pub fn read_fvecs<R: Read>(mut r: R) -> Result<VectorMatrix> {
    let mut dim = None;
    let mut data = Vec::new();
    while let Some(d) = read_i32_or_eof(&mut r)? {
        if d <= 0 || d as usize > MAX_DIM {
            return Err(format(format!("invalid record dimension {d}")));
        }
        let d = d as usize;
        if *dim.get_or_insert(d) != d {
            return Err(Error::DimensionMismatch {
                expected: dim.unwrap_or(d),
                actual: d,
            });
        }
        let start = data.len();
        data.resize(start + d, 0.0);
        r.read_f32_into::<LittleEndian>(&mut data[start..]).map_err(truncated)?;
    }
    match dim {
        Some(d) => VectorMatrix::new(d, data),
        None => Err(Error::EmptyDataset),
    }
}

pub fn decode_fvecs(bytes: &[u8]) -> Result<VectorMatrix> {
    read_fvecs(bytes)
}

pub fn write_fvecs<W: Write>(mut w: W, vectors: &VectorMatrix) -> Result<()> {
    for i in 0..vectors.len() {
        w.write_i32::<LittleEndian>(vectors.dim() as i32)?;
        for &x in vectors.row(i) {
            w.write_f32::<LittleEndian>(x)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Parses a JSON list of `{name, kind}` column definitions.
pub fn parse_schema(text: &str) -> Result<AttributeSchema> {
    let cols: Vec<ColumnDef> = serde_json::from_str(text)?;
    AttributeSchema::new(cols)
}

pub fn schema_to_json(schema: &AttributeSchema) -> String {
    serde_json::to_string_pretty(schema.columns()).expect("schema serializes")
}

fn ordered_from_json(n: &Number) -> Result<OrderedValue> {
    if let Some(i) = n.as_i64() {
        Ok(OrderedValue::Int(i))
    } else {
        n.as_f64()
            .map(OrderedValue::Real)
            .ok_or_else(|| format(format!("number {n} out of range")))
    }
}

/// Parses one attribute line against the schema.
pub fn parse_attribute_line(schema: &AttributeSchema, line: &str) -> Result<Vec<AttributeValue>> {
    let obj: Map<String, Value> = serde_json::from_str(line)?;
    if obj.len() != schema.len() {
        return Err(format(format!("expected {} keys, found {}", schema.len(), obj.len())));
    }
    schema
        .columns()
        .iter()
        .map(|col| {
            let v = obj
                .get(&col.name)
                .ok_or_else(|| format(format!("missing key `{}`", col.name)))?;
            let bad = || format(format!("value for `{}` is not {}", col.name, col.kind));
            Ok(match (col.kind, v) {
                (AttributeKind::Unordered, Value::String(s)) => AttributeValue::Unordered(s.clone()),
                (AttributeKind::Ordered, Value::Number(n)) => AttributeValue::Ordered(ordered_from_json(n)?),
                (AttributeKind::Set, Value::Array(xs)) => {
                    let tokens = xs
                        .iter()
                        .map(|x| x.as_str().map(str::to_string).ok_or_else(bad))
                        .collect::<Result<Vec<_>>>()?;
                    AttributeValue::Set(tokens)
                }
                _ => return Err(bad()),
            })
        })
        .collect()
}

pub fn attribute_line(schema: &AttributeSchema, row: &[AttributeValue]) -> String {
    let mut obj = Map::new();
    for (col, v) in schema.columns().iter().zip(row) {
        let json = match v {
            AttributeValue::Unordered(s) => Value::String(s.clone()),
            AttributeValue::Ordered(OrderedValue::Int(i)) => Value::from(*i),
            AttributeValue::Ordered(OrderedValue::Real(x)) => Number::from_f64(*x).map_or(Value::Null, Value::Number),
            AttributeValue::Set(ts) => Value::Array(ts.iter().cloned().map(Value::String).collect()),
        };
        obj.insert(col.name.clone(), json);
    }
    Value::Object(obj).to_string()
}

/// Reads attribute rows, one per non-empty line; line `i` is item `i`.
pub fn read_attributes<R: BufRead>(schema: &AttributeSchema, r: R) -> Result<Vec<Vec<AttributeValue>>> {
    let mut rows = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        rows.push(parse_attribute_line(schema, &line).map_err(|e| format(format!("line {}: {e}", i + 1)))?);
    }
    Ok(rows)
}

pub fn save_dataset(dir: &Path, dataset: &Dataset) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(SCHEMA_FILE), schema_to_json(dataset.schema()))?;
    write_fvecs(BufWriter::new(File::create(dir.join(VECTORS_FILE))?), dataset.vectors())?;
    let mut w = BufWriter::new(File::create(dir.join(ATTRIBUTES_FILE))?);
    for id in 0..dataset.len() as u32 {
        writeln!(w, "{}", attribute_line(dataset.schema(), dataset.attributes(id)))?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let schema = parse_schema(&std::fs::read_to_string(dir.join(SCHEMA_FILE))?)?;
    let vectors = read_fvecs(BufReader::new(File::open(dir.join(VECTORS_FILE))?))?;
    let attrs = read_attributes(&schema, BufReader::new(File::open(dir.join(ATTRIBUTES_FILE))?))?;
    Dataset::from_parts(schema, vectors, attrs)
}

/// One line of a query file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vector_id: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vector: Option<Vec<f32>>,
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filter: Option<Filter>,
}

impl QueryRecord {
    /// Resolves the vector (inline or by dataset id) and checks the query
    /// against the dataset.
    pub fn resolve(&self, dataset: &Dataset) -> Result<Query> {
        let vector = match (&self.vector, self.vector_id) {
            (Some(v), None) => v.clone(),
            (None, Some(id)) if (id as usize) < dataset.len() => dataset.vector(id).to_vec(),
            (None, Some(id)) => return Err(format(format!("vector_id {id} outside the dataset"))),
            _ => return Err(format("exactly one of `vector` and `vector_id` is required")),
        };
        let q = Query::new(vector, self.k, self.filter.clone())?;
        q.validate(dataset)?;
        Ok(q)
    }
}

pub fn parse_query_line(line: &str) -> Result<QueryRecord> {
    let r: QueryRecord = serde_json::from_str(line)?;
    if r.vector.is_some() == r.vector_id.is_some() {
        return Err(format("exactly one of `vector` and `vector_id` is required"));
    }
    Ok(r)
}

pub fn read_query_records<R: BufRead>(r: R) -> Result<Vec<QueryRecord>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(parse_query_line(&line).map_err(|e| format(format!("line {}: {e}", i + 1)))?);
    }
    Ok(out)
}

pub fn write_query_records<W: Write>(mut w: W, records: &[QueryRecord]) -> Result<()> {
    for r in records {
        writeln!(w, "{}", serde_json::to_string(r)?)?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_queries(path: &Path, dataset: &Dataset) -> Result<Vec<Query>> {
    read_query_records(BufReader::new(File::open(path)?))?
        .iter()
        .map(|r| r.resolve(dataset))
        .collect()
}

/// Writes `[i32 c][c × i32 ids][c × f32 distances]` per query.
pub fn write_ground_truth<W: Write>(mut w: W, results: &[KnnResult]) -> Result<()> {
    for r in results {
        w.write_i32::<LittleEndian>(r.len() as i32)?;
        for n in &r.entries {
            w.write_i32::<LittleEndian>(n.id as i32)?;
        }
        for n in &r.entries {
            w.write_f32::<LittleEndian>(n.distance as f32)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Inverse of [`write_ground_truth`]. Distances come back at `f32`
/// precision.
pub fn read_ground_truth<R: Read>(mut r: R) -> Result<Vec<KnnResult>> {
    let mut out = Vec::new();
    while let Some(c) = read_i32_or_eof(&mut r)? {
        if c < 0 {
            return Err(format(format!("negative result count {c}")));
        }
        let c = c as usize;
        let mut ids = Vec::with_capacity(c.min(1 << 16));
        for _ in 0..c {
            let id = r.read_i32::<LittleEndian>().map_err(truncated)?;
            if id < 0 {
                return Err(format(format!("negative id {id}")));
            }
            ids.push(id as u32);
        }
        let mut entries = Vec::with_capacity(ids.len());
        for id in ids {
            let d = r.read_f32::<LittleEndian>().map_err(truncated)?;
            if !d.is_finite() || d < 0.0 {
                return Err(format(format!("invalid distance {d}")));
            }
            entries.push(Neighbor::new(id, d as f64));
        }
        out.push(KnnResult { entries });
    }
    Ok(out)
}

pub fn decode_ground_truth(bytes: &[u8]) -> Result<Vec<KnnResult>> {
    read_ground_truth(bytes)
}
