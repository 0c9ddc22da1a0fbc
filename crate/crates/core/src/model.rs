//! Items, attributes, and datasets.
//!
//! A [`Dataset`] is the validated, read-only form: vectors live in one flat
//! row-major [`VectorMatrix`] shared (by reference count) with every index
//! built over it, and item ids are implicit row positions `0..n`. The owned
//! [`Item`] type is the interchange form used before validation.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Declared type of an attribute column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttributeKind {
    Unordered,
    Ordered,
    Set,
}

impl fmt::Display for AttributeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AttributeKind::Unordered => "unordered",
            AttributeKind::Ordered => "ordered",
            AttributeKind::Set => "set",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnDef {
    pub name: String,
    pub kind: AttributeKind,
}

/// Ordered list of attribute columns.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AttributeSchema {
    columns: Vec<ColumnDef>,
}

impl AttributeSchema {
    pub fn new(columns: Vec<ColumnDef>) -> Result<Self> {
        let mut seen = HashSet::new();
        for c in &columns {
            if !seen.insert(c.name.as_str()) {
                return Err(invalid(format!("duplicate column name `{}`", c.name)));
            }
        }
        Ok(Self { columns })
    }

    pub fn columns(&self) -> &[ColumnDef] {
        &self.columns
    }

    /// Number of attribute columns (m).
    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c.name == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    pub fn kind(&self, index: usize) -> AttributeKind {
        self.columns[index].kind
    }

    /// First column of the given kind, if any.
    pub fn first_of(&self, kind: AttributeKind) -> Option<&ColumnDef> {
        self.columns.iter().find(|c| c.kind == kind)
    }
}

/// Value of an ordered attribute.
///
/// Values compare by exact numeric order, so `Int(2) == Real(2.0)`. Datasets
/// reject non-finite reals; filter bounds may use the infinities as
/// "unbounded" sentinels.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OrderedValue {
    Int(i64),
    Real(f64),
}

impl OrderedValue {
    /// Smallest representable value; encodes "no lower limit".
    pub const MIN: OrderedValue = OrderedValue::Real(f64::NEG_INFINITY);
    /// Largest representable value; encodes "no upper limit".
    pub const MAX: OrderedValue = OrderedValue::Real(f64::INFINITY);

    pub fn as_f64(self) -> f64 {
        match self {
            OrderedValue::Int(v) => v as f64,
            OrderedValue::Real(v) => v,
        }
    }

    pub fn is_finite(self) -> bool {
        match self {
            OrderedValue::Int(_) => true,
            OrderedValue::Real(v) => v.is_finite(),
        }
    }

    pub fn is_nan(self) -> bool {
        matches!(self, OrderedValue::Real(v) if v.is_nan())
    }
}

impl Ord for OrderedValue {
    fn cmp(&self, other: &Self) -> Ordering {
        match (*self, *other) {
            (OrderedValue::Int(a), OrderedValue::Int(b)) => a.cmp(&b),
            (OrderedValue::Real(a), OrderedValue::Real(b)) => a.partial_cmp(&b).unwrap_or_else(|| a.total_cmp(&b)),
            (OrderedValue::Int(a), OrderedValue::Real(b)) => cmp_int_real(a, b),
            (OrderedValue::Real(a), OrderedValue::Int(b)) => cmp_int_real(b, a).reverse(),
        }
    }
}

/// Exact numeric comparison of an integer with a real.
fn cmp_int_real(a: i64, b: f64) -> Ordering {
    const TWO_63: f64 = 9_223_372_036_854_775_808.0;
    if b.is_nan() {
        return Ordering::Less;
    }
    if b >= TWO_63 {
        return Ordering::Less;
    }
    if b < -TWO_63 {
        return Ordering::Greater;
    }
    let t = b.trunc();
    match a.cmp(&(t as i64)) {
        Ordering::Equal => {
            let frac = b - t;
            if frac > 0.0 {
                Ordering::Less
            } else if frac < 0.0 {
                Ordering::Greater
            } else {
                Ordering::Equal
            }
        }
        o => o,
    }
}

impl PartialOrd for OrderedValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for OrderedValue {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for OrderedValue {}

impl From<i64> for OrderedValue {
    fn from(v: i64) -> Self {
        OrderedValue::Int(v)
    }
}

impl From<f64> for OrderedValue {
    fn from(v: f64) -> Self {
        OrderedValue::Real(v)
    }
}

impl fmt::Display for OrderedValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OrderedValue::Int(v) => write!(f, "{v}"),
            OrderedValue::Real(v) => write!(f, "{v}"),
        }
    }
}

/// One attribute value of an item.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AttributeValue {
    Unordered(String),
    Ordered(OrderedValue),
    /// Tokens kept sorted and duplicate-free inside a [`Dataset`].
    Set(Vec<String>),
}

impl AttributeValue {
    pub fn kind(&self) -> AttributeKind {
        match self {
            AttributeValue::Unordered(_) => AttributeKind::Unordered,
            AttributeValue::Ordered(_) => AttributeKind::Ordered,
            AttributeValue::Set(_) => AttributeKind::Set,
        }
    }

    /// Builds a set value, sorting and removing duplicate tokens.
    pub fn set<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut v: Vec<String> = tokens.into_iter().map(Into::into).collect();
        v.sort();
        v.dedup();
        AttributeValue::Set(v)
    }

    pub fn as_token(&self) -> Option<&str> {
        match self {
            AttributeValue::Unordered(t) => Some(t),
            _ => None,
        }
    }

    pub fn as_ordered(&self) -> Option<OrderedValue> {
        match self {
            AttributeValue::Ordered(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_set(&self) -> Option<&[String]> {
        match self {
            AttributeValue::Set(v) => Some(v),
            _ => None,
        }
    }

    /// Whether a set value contains `token`. Sets inside a dataset are sorted.
    pub fn set_contains(&self, token: &str) -> bool {
        match self {
            AttributeValue::Set(v) => v.binary_search_by(|t| t.as_str().cmp(token)).is_ok(),
            _ => false,
        }
    }
}

/// A d-dimensional embedding with finite coordinates.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EmbeddingVector(Vec<f32>);

impl EmbeddingVector {
    pub fn new(values: Vec<f32>) -> Result<Self> {
        if values.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self(values))
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f32> {
        self.0
    }
}

impl AsRef<[f32]> for EmbeddingVector {
    fn as_ref(&self) -> &[f32] {
        &self.0
    }
}

/// Row-major matrix of `f32` vectors, cheap to clone.
#[derive(Clone)]
pub struct VectorMatrix {
    dim: usize,
    data: Arc<[f32]>,
}

impl VectorMatrix {
    pub fn new(dim: usize, data: Vec<f32>) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dimension must be positive"));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: data.len() % dim,
            });
        }
        Ok(Self { dim, data: data.into() })
    }

    pub fn from_rows<R: AsRef<[f32]>>(dim: usize, rows: &[R]) -> Result<Self> {
        let mut data = Vec::with_capacity(dim * rows.len());
        for r in rows {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Self::new(dim, data)
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_flat(&self) -> &[f32] {
        &self.data
    }

    /// Copies the given rows, in order, into a new matrix.
    pub fn gather(&self, ids: &[u32]) -> VectorMatrix {
        let mut data = Vec::with_capacity(ids.len() * self.dim);
        for &i in ids {
            data.extend_from_slice(self.row(i as usize));
        }
        VectorMatrix {
            dim: self.dim,
            data: data.into(),
        }
    }
}

impl fmt::Debug for VectorMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VectorMatrix")
            .field("dim", &self.dim)
            .field("rows", &self.len())
            .finish()
    }
}

/// Owned item: the unvalidated interchange form.
#[derive(Debug, Clone, PartialEq)]
pub struct Item {
    pub id: u32,
    pub vector: Vec<f32>,
    pub attributes: Vec<AttributeValue>,
}

/// Borrowed view of one dataset item.
#[derive(Debug, Clone, Copy)]
pub struct ItemRef<'a> {
    pub id: u32,
    pub vector: &'a [f32],
    pub attributes: &'a [AttributeValue],
}

/// A dataset invariant violation reported by [`validate_dataset`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    DuplicateId(u32),
    MissingId(u32),
    IdOutOfRange(u32),
    Dimension {
        id: u32,
        expected: usize,
        actual: usize,
    },
    NonFiniteVector(u32),
    AttributeCount {
        id: u32,
        expected: usize,
        actual: usize,
    },
    AttributeKind {
        id: u32,
        column: String,
        expected: AttributeKind,
    },
    DuplicateSetToken {
        id: u32,
        column: String,
        token: String,
    },
    NonFiniteOrdered {
        id: u32,
        column: String,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateId(id) => write!(f, "item {id}: duplicate id"),
            Violation::MissingId(id) => write!(f, "id {id} missing (gap in id sequence)"),
            Violation::IdOutOfRange(id) => write!(f, "item {id}: id outside 0..n"),
            Violation::Dimension { id, expected, actual } => {
                write!(f, "item {id}: vector has {actual} coordinates, expected {expected}")
            }
            Violation::NonFiniteVector(id) => write!(f, "item {id}: non-finite coordinate"),
            Violation::AttributeCount { id, expected, actual } => {
                write!(f, "item {id}: {actual} attributes, schema has {expected}")
            }
            Violation::AttributeKind { id, column, expected } => {
                write!(f, "item {id}: column `{column}` expects a {expected} value")
            }
            Violation::DuplicateSetToken { id, column, token } => {
                write!(f, "item {id}: set column `{column}` repeats token `{token}`")
            }
            Violation::NonFiniteOrdered { id, column } => {
                write!(f, "item {id}: column `{column}` holds a non-finite value")
            }
        }
    }
}

/// Reports every invariant violation among `items`.
pub fn validate_dataset(
    schema: &AttributeSchema,
    dim: usize,
    items: &[Item],
) -> std::result::Result<(), Vec<Violation>> {
    let n = items.len();
    let mut out = Vec::new();
    let mut seen = vec![false; n];
    for item in items {
        let id = item.id;
        if (id as usize) < n {
            if seen[id as usize] {
                out.push(Violation::DuplicateId(id));
            }
            seen[id as usize] = true;
        } else {
            out.push(Violation::IdOutOfRange(id));
        }
        if item.vector.len() != dim {
            out.push(Violation::Dimension {
                id,
                expected: dim,
                actual: item.vector.len(),
            });
        }
        if item.vector.iter().any(|x| !x.is_finite()) {
            out.push(Violation::NonFiniteVector(id));
        }
        if item.attributes.len() != schema.len() {
            out.push(Violation::AttributeCount {
                id,
                expected: schema.len(),
                actual: item.attributes.len(),
            });
            continue;
        }
        for (col, value) in schema.columns().iter().zip(&item.attributes) {
            if value.kind() != col.kind {
                out.push(Violation::AttributeKind {
                    id,
                    column: col.name.clone(),
                    expected: col.kind,
                });
                continue;
            }
            match value {
                AttributeValue::Ordered(v) if !v.is_finite() => {
                    out.push(Violation::NonFiniteOrdered {
                        id,
                        column: col.name.clone(),
                    });
                }
                AttributeValue::Set(tokens) => {
                    let mut uniq = HashSet::new();
                    for t in tokens {
                        if !uniq.insert(t.as_str()) {
                            out.push(Violation::DuplicateSetToken {
                                id,
                                column: col.name.clone(),
                                token: t.clone(),
                            });
                        }
                    }
                }
                _ => {}
            }
        }
    }
    for (id, present) in seen.iter().enumerate() {
        if !present {
            out.push(Violation::MissingId(id as u32));
        }
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

/// Validated, immutable collection of n items with m typed attributes.
#[derive(Debug, Clone)]
pub struct Dataset {
    schema: AttributeSchema,
    vectors: VectorMatrix,
    attributes: Arc<[Vec<AttributeValue>]>,
}

impl Dataset {
    /// Validates `items` and assembles a dataset ordered by id.
    pub fn from_items(schema: AttributeSchema, dim: usize, mut items: Vec<Item>) -> Result<Self> {
        validate_dataset(&schema, dim, &items).map_err(Error::InvalidDataset)?;
        items.sort_by_key(|it| it.id);
        let mut data = Vec::with_capacity(items.len() * dim);
        let mut attributes = Vec::with_capacity(items.len());
        for item in items {
            data.extend_from_slice(&item.vector);
            attributes.push(item.attributes);
        }
        Self::from_parts(schema, VectorMatrix::new(dim, data)?, attributes)
    }

    /// Assembles a dataset from columnar parts; row i is item i.
    pub fn from_parts(
        schema: AttributeSchema,
        vectors: VectorMatrix,
        attributes: Vec<Vec<AttributeValue>>,
    ) -> Result<Self> {
        if attributes.len() != vectors.len() {
            return Err(invalid(format!(
                "{} vectors but {} attribute rows",
                vectors.len(),
                attributes.len()
            )));
        }
        let mut violations = Vec::new();
        for (i, v) in vectors.as_flat().chunks(vectors.dim()).enumerate() {
            if v.iter().any(|x| !x.is_finite()) {
                violations.push(Violation::NonFiniteVector(i as u32));
            }
        }
        let mut attributes = attributes;
        for (i, row) in attributes.iter_mut().enumerate() {
            let id = i as u32;
            if row.len() != schema.len() {
                violations.push(Violation::AttributeCount {
                    id,
                    expected: schema.len(),
                    actual: row.len(),
                });
                continue;
            }
            for (col, value) in schema.columns().iter().zip(row.iter_mut()) {
                if value.kind() != col.kind {
                    violations.push(Violation::AttributeKind {
                        id,
                        column: col.name.clone(),
                        expected: col.kind,
                    });
                }
                match value {
                    AttributeValue::Ordered(v) if !v.is_finite() => violations.push(Violation::NonFiniteOrdered {
                        id,
                        column: col.name.clone(),
                    }),
                    AttributeValue::Set(tokens) => {
                        let before = tokens.len();
                        tokens.sort();
                        tokens.dedup();
                        if tokens.len() != before {
                            violations.push(Violation::DuplicateSetToken {
                                id,
                                column: col.name.clone(),
                                token: String::new(),
                            });
                        }
                    }
                    _ => {}
                }
            }
        }
        if !violations.is_empty() {
            return Err(Error::InvalidDataset(violations));
        }
        Ok(Self {
            schema,
            vectors,
            attributes: attributes.into(),
        })
    }

    pub fn schema(&self) -> &AttributeSchema {
        &self.schema
    }

    pub fn vectors(&self) -> &VectorMatrix {
        &self.vectors
    }

    /// Number of items (n).
    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    /// Dimensionality (d).
    pub fn dim(&self) -> usize {
        self.vectors.dim()
    }

    #[inline]
    pub fn vector(&self, id: u32) -> &[f32] {
        self.vectors.row(id as usize)
    }

    #[inline]
    pub fn attributes(&self, id: u32) -> &[AttributeValue] {
        &self.attributes[id as usize]
    }

    pub fn item(&self, id: u32) -> ItemRef<'_> {
        ItemRef {
            id,
            vector: self.vector(id),
            attributes: self.attributes(id),
        }
    }

    pub fn items(&self) -> impl Iterator<Item = ItemRef<'_>> + '_ {
        (0..self.len() as u32).map(move |id| self.item(id))
    }

    pub fn to_items(&self) -> Vec<Item> {
        self.items()
            .map(|it| Item {
                id: it.id,
                vector: it.vector.to_vec(),
                attributes: it.attributes.to_vec(),
            })
            .collect()
    }
}
