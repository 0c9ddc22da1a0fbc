//! Versioned binary snapshots of built indexes.
//!
//! Snapshots hold graph structure, codebooks and codes but not the raw
//! vectors; decoding takes the dataset the index was built over. The byte
//! layout is documented in `FORMATS.md`.

use std::sync::Arc;

use crate::error::{format, Result};
use crate::hnsw::graph::GraphLayer;
use crate::hnsw::{HnswIndex, HnswParams, NodeVectors};
use crate::label::{LabelGraphIndex, LabelGraphParams};
use crate::model::Dataset;
use crate::quant::{IvfIndex, KMeansModel, PqCodebook};
use crate::range::{SegmentGraphIndex, SegmentLayer, SortedColumn};

pub const MAGIC: &[u8; 8] = b"FANNSNAP";
pub const VERSION: u32 = 1;

/// Largest layer count accepted when decoding.
const MAX_LAYERS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u32)]
pub enum SnapshotKind {
    Hnsw = 1,
    SegmentGraph = 2,
    LabelGraph = 3,
    Ivf = 4,
}

impl SnapshotKind {
    fn from_u32(v: u32) -> Result<Self> {
        Ok(match v {
            1 => Self::Hnsw,
            2 => Self::SegmentGraph,
            3 => Self::LabelGraph,
            4 => Self::Ivf,
            _ => return Err(format(format!("unknown snapshot kind {v}"))),
        })
    }
}

#[derive(Default)]
struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn header(kind: SnapshotKind, n: usize, dim: usize) -> Self {
        let mut w = Self::default();
        w.buf.extend_from_slice(MAGIC);
        w.u32(VERSION);
        w.u32(kind as u32);
        w.u32(n as u32);
        w.u32(dim as u32);
        w
    }

    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn u32s(&mut self, vs: &[u32]) {
        self.u32(vs.len() as u32);
        vs.iter().for_each(|&v| self.u32(v));
    }

    fn bytes(&mut self, vs: &[u8]) {
        self.u32(vs.len() as u32);
        self.buf.extend_from_slice(vs);
    }

    fn str(&mut self, s: &str) {
        self.bytes(s.as_bytes());
    }

    fn hnsw_params(&mut self, p: &HnswParams) {
        self.u32(p.m as u32);
        self.u32(p.ef_construction as u32);
        self.u32(p.gamma as u32);
        self.u32(p.m_beta.unwrap_or(0) as u32);
        self.u64(p.seed);
    }

    fn layer(&mut self, l: &GraphLayer) {
        match &l.nodes {
            None => self.u8(0),
            Some(ns) => {
                self.u8(1);
                self.u32s(ns);
            }
        }
        self.u32s(&l.offsets);
        self.u32s(&l.targets);
    }
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if n > self.buf.len() {
            return Err(format("snapshot truncated"));
        }
        let (a, b) = self.buf.split_at(n);
        self.buf = b;
        Ok(a)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    /// Length prefix for elements of `width` bytes, checked against the
    /// remaining input before anything is allocated.
    fn len(&mut self, width: usize) -> Result<usize> {
        let n = self.u32()? as usize;
        if n.saturating_mul(width) > self.buf.len() {
            return Err(format("length prefix exceeds snapshot size"));
        }
        Ok(n)
    }

    fn u32s(&mut self) -> Result<Vec<u32>> {
        let n = self.len(4)?;
        (0..n).map(|_| self.u32()).collect()
    }

    fn bytes(&mut self) -> Result<&'a [u8]> {
        let n = self.len(1)?;
        self.take(n)
    }

    fn str(&mut self) -> Result<String> {
        String::from_utf8(self.bytes()?.to_vec()).map_err(|_| format("string is not UTF-8"))
    }

    fn hnsw_params(&mut self) -> Result<HnswParams> {
        let m = self.u32()? as usize;
        let ef_construction = self.u32()? as usize;
        let gamma = self.u32()? as usize;
        let mb = self.u32()? as usize;
        let seed = self.u64()?;
        let p = HnswParams {
            m,
            ef_construction,
            gamma,
            m_beta: (mb > 0).then_some(mb),
            seed,
        };
        p.validate().map_err(|e| format(e.to_string()))?;
        Ok(p)
    }

    fn layer(&mut self, node_count: usize) -> Result<GraphLayer> {
        let nodes = match self.u8()? {
            0 => None,
            1 => Some(self.u32s()?),
            t => return Err(format(format!("bad layer tag {t}"))),
        };
        let l = GraphLayer {
            nodes,
            offsets: self.u32s()?,
            targets: self.u32s()?,
        };
        l.check(node_count)?;
        Ok(l)
    }

    fn finish(&self) -> Result<()> {
        if self.buf.is_empty() {
            Ok(())
        } else {
            Err(format("trailing bytes after snapshot"))
        }
    }
}

/// Parses the common header and checks it against the dataset.
fn open<'a>(bytes: &'a [u8], kind: SnapshotKind, dataset: &Dataset) -> Result<(Reader<'a>, usize)> {
    let mut r = Reader { buf: bytes };
    if r.take(8)? != MAGIC {
        return Err(format("not a snapshot (bad magic)"));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(format(format!("unsupported snapshot version {version}")));
    }
    let found = SnapshotKind::from_u32(r.u32()?)?;
    if found != kind {
        return Err(format(format!("expected a {kind:?} snapshot, found {found:?}")));
    }
    let n = r.u32()? as usize;
    let dim = r.u32()? as usize;
    if dim != dataset.dim() {
        return Err(format(format!(
            "snapshot dimension {dim} does not match dataset {}",
            dataset.dim()
        )));
    }
    Ok((r, n))
}

/// Kind recorded in a snapshot header.
pub fn snapshot_kind(bytes: &[u8]) -> Result<SnapshotKind> {
    if bytes.len() < 16 || &bytes[..8] != MAGIC {
        return Err(format("not a snapshot (bad magic)"));
    }
    SnapshotKind::from_u32(u32::from_le_bytes(bytes[12..16].try_into().expect("4 bytes")))
}

/// Levels must stay below the layer count, the entry must sit on the top
/// layer, and layer `l` must hold exactly the nodes of level `>= l`.
fn check_levels(levels: &[u8], layers: &[&GraphLayer], entry: Option<u32>) -> Result<()> {
    if layers.is_empty() || layers.len() > MAX_LAYERS {
        return Err(format("bad layer count"));
    }
    if levels.iter().any(|&l| l as usize >= layers.len()) {
        return Err(format("node level above the top layer"));
    }
    if let Some(e) = entry {
        match levels.get(e as usize) {
            Some(&l) if l as usize + 1 == layers.len() => {}
            _ => return Err(format("entry point is not on the top layer")),
        }
    }
    if layers[0].nodes.is_some() {
        return Err(format("base layer must list every node"));
    }
    for (l, layer) in layers.iter().enumerate().skip(1) {
        let want = levels
            .iter()
            .enumerate()
            .filter(|(_, &v)| v as usize >= l)
            .map(|(i, _)| i as u32);
        let ns = layer.nodes.as_deref().unwrap_or(&[]);
        if layer.nodes.is_none() || !ns.iter().copied().eq(want) {
            return Err(format(format!("layer {l} membership disagrees with levels")));
        }
    }
    Ok(())
}

fn read_levels(r: &mut Reader<'_>, n: usize) -> Result<Vec<u8>> {
    let levels = r.bytes()?.to_vec();
    if levels.len() != n {
        return Err(format("level array length differs from node count"));
    }
    Ok(levels)
}

pub fn encode_hnsw(index: &HnswIndex) -> Vec<u8> {
    let mut w = Writer::header(SnapshotKind::Hnsw, index.levels.len(), index.store.vectors().dim());
    w.hnsw_params(&index.params);
    match index.store.members() {
        None => w.u8(0),
        Some(ms) => {
            w.u8(1);
            w.u32s(ms);
        }
    }
    w.bytes(&index.levels);
    w.u32(index.entry);
    w.u32(index.layers.len() as u32);
    index.layers.iter().for_each(|l| w.layer(l));
    w.buf
}

pub fn decode_hnsw(bytes: &[u8], dataset: &Dataset) -> Result<HnswIndex> {
    let (mut r, n) = open(bytes, SnapshotKind::Hnsw, dataset)?;
    let params = r.hnsw_params()?;
    let members = match r.u8()? {
        0 => {
            if n != dataset.len() {
                return Err(format("snapshot node count differs from dataset size"));
            }
            None
        }
        1 => {
            let ms = r.u32s()?;
            if ms.len() != n || ms.iter().any(|&m| m as usize >= dataset.len()) {
                return Err(format("member list does not fit the dataset"));
            }
            Some(Arc::from(ms))
        }
        t => return Err(format(format!("bad member tag {t}"))),
    };
    if n == 0 {
        return Err(format("empty graph"));
    }
    let levels = read_levels(&mut r, n)?;
    let entry = r.u32()?;
    let count = r.len(1)?.min(MAX_LAYERS + 1);
    let layers = (0..count).map(|_| r.layer(n)).collect::<Result<Vec<_>>>()?;
    r.finish()?;
    check_levels(&levels, &layers.iter().collect::<Vec<_>>(), Some(entry))?;
    Ok(HnswIndex {
        params,
        store: NodeVectors::new(dataset.vectors().clone(), members),
        levels,
        layers,
        entry,
    })
}

pub fn encode_segment_graph(index: &SegmentGraphIndex) -> Vec<u8> {
    let mut w = Writer::header(
        SnapshotKind::SegmentGraph,
        index.levels.len(),
        index.store.vectors().dim(),
    );
    w.str(&index.column.name);
    w.hnsw_params(&index.params);
    w.u32s(&index.column.order);
    w.bytes(&index.levels);
    w.u32(index.entries.len() as u32);
    for &(rank, node) in &index.entries {
        w.u32(rank);
        w.u32(node);
    }
    w.u32(index.layers.len() as u32);
    for l in &index.layers {
        w.layer(&l.graph);
        w.u32s(&l.birth);
        w.u32s(&l.death);
    }
    w.buf
}

pub fn decode_segment_graph(bytes: &[u8], dataset: &Dataset) -> Result<SegmentGraphIndex> {
    let (mut r, n) = open(bytes, SnapshotKind::SegmentGraph, dataset)?;
    let name = r.str()?;
    let params = r.hnsw_params()?;
    let order = r.u32s()?;
    if n == 0 || n != dataset.len() {
        return Err(format("snapshot node count differs from dataset size"));
    }
    let column = SortedColumn::new(dataset, &name).map_err(|e| format(e.to_string()))?;
    if column.order != order {
        return Err(format("stored sort order differs from the dataset column"));
    }
    let levels = read_levels(&mut r, n)?;
    let ecount = r.len(8)?;
    let mut entries = Vec::with_capacity(ecount);
    for _ in 0..ecount {
        let (rank, node) = (r.u32()?, r.u32()?);
        if node as usize >= n || rank != node + 1 {
            return Err(format("bad entry record"));
        }
        entries.push((rank, node));
    }
    if entries.first().map(|e| e.0) != Some(1) || entries.windows(2).any(|w| w[0].0 >= w[1].0) {
        return Err(format("entry records must start at rank 1 and increase"));
    }
    let count = r.len(1)?.min(MAX_LAYERS + 1);
    let mut layers = Vec::with_capacity(count);
    for _ in 0..count {
        let graph = r.layer(n)?;
        let birth = r.u32s()?;
        let death = r.u32s()?;
        if birth.len() != graph.targets.len() || death.len() != graph.targets.len() {
            return Err(format("validity arrays differ from edge count"));
        }
        for slot in 0..graph.len() {
            let from = graph.node_at(slot);
            for e in graph.offsets[slot] as usize..graph.offsets[slot + 1] as usize {
                let (b, d, t) = (birth[e], death[e], graph.targets[e]);
                if b <= from || b <= t || b >= d || d as usize > n + 1 {
                    return Err(format("edge validity out of range"));
                }
            }
        }
        layers.push(SegmentLayer { graph, birth, death });
    }
    r.finish()?;
    check_levels(&levels, &layers.iter().map(|l| &l.graph).collect::<Vec<_>>(), None)?;
    if entries
        .iter()
        .any(|&(_, v)| levels[v as usize] as usize >= layers.len())
    {
        return Err(format("entry above the top layer"));
    }
    Ok(SegmentGraphIndex {
        store: NodeVectors::new(dataset.vectors().clone(), Some(Arc::from(order))),
        column,
        params,
        levels,
        layers,
        entries,
    })
}

pub fn encode_label_graph(index: &LabelGraphIndex) -> Vec<u8> {
    let mut w = Writer::header(SnapshotKind::LabelGraph, index.vectors.len(), index.vectors.dim());
    w.str(&index.column);
    w.u32(index.params.r as u32);
    w.u32(index.params.l_build as u32);
    w.f64(index.params.alpha);
    w.u32(index.labels.len() as u32);
    index.labels.iter().for_each(|l| w.str(l));
    w.u32s(&index.label_offsets);
    w.u32s(&index.label_ids);
    w.u32s(&index.entries);
    w.layer(&index.graph);
    w.buf
}

pub fn decode_label_graph(bytes: &[u8], dataset: &Dataset) -> Result<LabelGraphIndex> {
    let (mut r, n) = open(bytes, SnapshotKind::LabelGraph, dataset)?;
    if n == 0 || n != dataset.len() {
        return Err(format("snapshot node count differs from dataset size"));
    }
    let column = r.str()?;
    dataset.schema().index_of(&column).map_err(|e| format(e.to_string()))?;
    let params = LabelGraphParams {
        r: r.u32()? as usize,
        l_build: r.u32()? as usize,
        alpha: r.f64()?,
    };
    params.validate().map_err(|e| format(e.to_string()))?;
    let nl = r.len(4)?;
    let labels = (0..nl).map(|_| r.str()).collect::<Result<Vec<_>>>()?;
    if labels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(format("label dictionary must be strictly sorted"));
    }
    let label_offsets = r.u32s()?;
    let label_ids = r.u32s()?;
    if label_offsets.len() != n + 1
        || label_offsets[0] != 0
        || label_offsets.windows(2).any(|w| w[0] > w[1])
        || label_offsets[n] as usize != label_ids.len()
    {
        return Err(format("bad item label table"));
    }
    for v in 0..n {
        let ids = &label_ids[label_offsets[v] as usize..label_offsets[v + 1] as usize];
        if ids.windows(2).any(|w| w[0] >= w[1]) || ids.iter().any(|&l| l as usize >= nl) {
            return Err(format("bad item label list"));
        }
    }
    let entries = r.u32s()?;
    if entries.len() != nl {
        return Err(format("one entry point per label is required"));
    }
    for (l, &e) in entries.iter().enumerate() {
        let carries = (e as usize) < n
            && label_ids[label_offsets[e as usize] as usize..label_offsets[e as usize + 1] as usize]
                .binary_search(&(l as u32))
                .is_ok();
        if !carries {
            return Err(format("label entry point does not carry its label"));
        }
    }
    let graph = r.layer(n)?;
    if graph.nodes.is_some() {
        return Err(format("label graph layer must list every node"));
    }
    r.finish()?;
    Ok(LabelGraphIndex {
        column,
        params,
        vectors: dataset.vectors().clone(),
        graph,
        labels,
        label_offsets,
        label_ids,
        entries,
    })
}

pub fn encode_ivf(index: &IvfIndex) -> Vec<u8> {
    let m = &index.model;
    let mut w = Writer::header(SnapshotKind::Ivf, index.len(), index.dim());
    w.u32(m.len() as u32);
    w.u32(m.iterations as u32);
    w.u64(m.seed);
    m.centroids.iter().for_each(|&x| w.f64(x));
    w.u32(m.objective.len() as u32);
    m.objective.iter().for_each(|&x| w.f64(x));
    w.u32s(&index.assignments);
    match &index.pq {
        None => w.u8(0),
        Some(pq) => {
            w.u8(1);
            w.u32(pq.s as u32);
            w.u32(pq.c_sub as u32);
            w.u64(pq.seed);
            pq.codewords
                .iter()
                .for_each(|&x| w.buf.extend_from_slice(&x.to_le_bytes()));
            w.bytes(&index.codes);
        }
    }
    w.buf
}

pub fn decode_ivf(bytes: &[u8], dataset: &Dataset) -> Result<IvfIndex> {
    let (mut r, n) = open(bytes, SnapshotKind::Ivf, dataset)?;
    if n == 0 || n != dataset.len() {
        return Err(format("snapshot item count differs from dataset size"));
    }
    let dim = dataset.dim();
    let c = r.u32()? as usize;
    let iterations = r.u32()? as usize;
    let seed = r.u64()?;
    if c == 0 || c > n || c.saturating_mul(dim).saturating_mul(8) > r.buf.len() {
        return Err(format("bad cluster count"));
    }
    let centroids = (0..c * dim).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
    if centroids.iter().any(|x| !x.is_finite()) {
        return Err(format("non-finite centroid"));
    }
    let no = r.len(8)?;
    let objective = (0..no).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
    let assignments = r.u32s()?;
    if assignments.len() != n || assignments.iter().any(|&a| a as usize >= c) {
        return Err(format("bad assignment array"));
    }
    let (pq, codes) = match r.u8()? {
        0 => (None, Vec::new()),
        1 => {
            let s = r.u32()? as usize;
            let c_sub = r.u32()? as usize;
            let pseed = r.u64()?;
            if s == 0 || !dim.is_multiple_of(s) || c_sub == 0 || c_sub > 256 {
                return Err(format("bad quantizer shape"));
            }
            let words = c_sub * dim;
            if words.saturating_mul(4) > r.buf.len() {
                return Err(format("snapshot truncated"));
            }
            let codewords = (0..words)
                .map(|_| r.u32().map(f32::from_bits))
                .collect::<Result<Vec<_>>>()?;
            if codewords.iter().any(|x| !x.is_finite()) {
                return Err(format("non-finite codeword"));
            }
            let codes = r.bytes()?.to_vec();
            if codes.len() != n * s || codes.iter().any(|&b| b as usize >= c_sub) {
                return Err(format("bad code array"));
            }
            let cb = PqCodebook {
                dim,
                s,
                c_sub,
                seed: pseed,
                codewords,
            };
            (Some(cb), codes)
        }
        t => return Err(format(format!("bad quantizer tag {t}"))),
    };
    r.finish()?;
    let mut lists = vec![Vec::new(); c];
    for (i, &a) in assignments.iter().enumerate() {
        lists[a as usize].push(i as u32);
    }
    Ok(IvfIndex {
        model: KMeansModel {
            dim,
            centroids,
            iterations,
            seed,
            objective,
        },
        lists,
        assignments,
        vectors: dataset.vectors().clone(),
        pq,
        codes,
    })
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::quant::{build_ivf, PqSpec};
    use crate::testutil::{random_dataset, random_vector};

    fn params() -> HnswParams {
        HnswParams {
            m: 6,
            ef_construction: 24,
            ..HnswParams::default()
        }
    }

    #[test]
    fn hnsw_round_trip() {
        let ds = random_dataset(300, 4, 1);
        let g = HnswIndex::build(&ds, params()).unwrap();
        let bytes = encode_hnsw(&g);
        assert_eq!(snapshot_kind(&bytes).unwrap(), SnapshotKind::Hnsw);
        let back = decode_hnsw(&bytes, &ds).unwrap();
        assert_eq!(back.levels, g.levels);
        assert_eq!(back.layers, g.layers);
        assert_eq!(back.entry, g.entry);
        assert_eq!(back.params, g.params);
        assert_eq!(encode_hnsw(&back), bytes);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let q = random_vector(&mut rng, 4);
            assert_eq!(back.search(&q, 5, 20).unwrap(), g.search(&q, 5, 20).unwrap());
        }
        let sub = HnswIndex::build_subset(&ds, (0..300).step_by(7).collect(), params()).unwrap();
        let sb = encode_hnsw(&sub);
        assert_eq!(encode_hnsw(&decode_hnsw(&sb, &ds).unwrap()), sb);
    }

    #[test]
    fn other_kinds_round_trip() {
        let ds = random_dataset(200, 4, 3);
        let sg = SegmentGraphIndex::build(&ds, "year", params()).unwrap();
        let b = encode_segment_graph(&sg);
        let back = decode_segment_graph(&b, &ds).unwrap();
        assert_eq!(back.layers, sg.layers);
        assert_eq!(encode_segment_graph(&back), b);

        let lg = LabelGraphIndex::build(
            &ds,
            "tags",
            LabelGraphParams {
                r: 8,
                l_build: 16,
                alpha: 1.2,
            },
        )
        .unwrap();
        let b = encode_label_graph(&lg);
        assert_eq!(encode_label_graph(&decode_label_graph(&b, &ds).unwrap()), b);

        let ivf = build_ivf(
            &ds,
            8,
            10,
            4,
            Some(PqSpec {
                s: 2,
                c_sub: 16,
                iters: 5,
                seed: 5,
            }),
        )
        .unwrap();
        let b = encode_ivf(&ivf);
        let back = decode_ivf(&b, &ds).unwrap();
        assert_eq!(back.lists, ivf.lists);
        assert_eq!(back.codes, ivf.codes);
        assert_eq!(back.model, ivf.model);
        assert_eq!(encode_ivf(&back), b);
    }

    #[test]
    fn rejects_mismatches() {
        let ds = random_dataset(100, 4, 6);
        let g = HnswIndex::build(&ds, params()).unwrap();
        let bytes = encode_hnsw(&g);
        assert!(decode_hnsw(&bytes, &random_dataset(99, 4, 6)).is_err());
        assert!(decode_hnsw(&bytes, &random_dataset(100, 5, 6)).is_err());
        assert!(decode_ivf(&bytes, &ds).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode_hnsw(&bad, &ds).is_err());
        let mut v2 = bytes.clone();
        v2[8] = 2;
        assert!(decode_hnsw(&v2, &ds).is_err());
        let mut long = bytes.clone();
        long.push(0);
        assert!(decode_hnsw(&long, &ds).is_err());
        let sg = encode_segment_graph(&SegmentGraphIndex::build(&ds, "year", params()).unwrap());
        let other = random_dataset(100, 4, 7);
        assert!(decode_segment_graph(&sg, &other).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn corrupted_snapshots_never_panic(pos in any::<prop::sample::Index>(), byte in any::<u8>(), cut in any::<prop::sample::Index>()) {
            let ds = random_dataset(40, 4, 8);
            let encoded = [
                encode_hnsw(&HnswIndex::build(&ds, params()).unwrap()),
                encode_segment_graph(&SegmentGraphIndex::build(&ds, "year", params()).unwrap()),
                encode_label_graph(&LabelGraphIndex::build(&ds, "tags", LabelGraphParams { r: 4, l_build: 8, alpha: 1.2 }).unwrap()),
                encode_ivf(&build_ivf(&ds, 4, 5, 1, Some(PqSpec { s: 2, c_sub: 4, iters: 3, seed: 1 })).unwrap()),
            ];
            for bytes in encoded {
                let mut b = bytes.clone();
                let i = pos.index(b.len());
                b[i] = byte;
                b.truncate(cut.index(b.len() + 1).max(i + 1));
                let q = [0.1f32; 4];
                if let Ok(g) = decode_hnsw(&b, &ds) { let _ = g.search(&q, 3, 10); }
                if let Ok(g) = decode_segment_graph(&b, &ds) { let _ = g.search_prefix(&q, 3, 10, 20); }
                if let Ok(g) = decode_label_graph(&b, &ds) { let _ = g.label_query(&q, 3, 10, "t0"); }
                if let Ok(g) = decode_ivf(&b, &ds) { let _ = g.search(&q, 3, 2); }
            }
        }
    }
}
