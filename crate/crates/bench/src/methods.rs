//! Uniform query interface over every index, and the method registry.

use anyhow::{anyhow, bail, Context, Result};
use fanns_core::hnsw::HnswIndex;
use fanns_core::label::{LabelGraphIndex, LabelGraphParams};
use fanns_core::quant::{CapsIndex, CapsParams, IvfIndex, Matching, PqSpec, Rerank, RiiParams, DEFAULT_ITERATIONS};
use fanns_core::range::{SegmentGraphIndex, SegmentTreeIndex};
use fanns_core::strategies::{
    afanns_query_fused, post_filter_query, pre_filter_query, route_and_query, AttributeIndexes, RouterConfig,
};
use fanns_core::{AttributeKind, Dataset, FilterPredicate, HnswParams, KnnResult, MatchAll, Query};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{Map, Value};

/// A built index answering filtered queries at a given search width.
pub trait FilteredIndex: Send + Sync {
    fn method(&self) -> &'static str;

    /// `width` is the beam width (graphs) or probed clusters (IVF family);
    /// exact methods ignore it.
    fn query(&self, query: &Query, width: usize) -> Result<KnnResult>;

    /// Width at which the index searches exhaustively.
    fn max_width(&self) -> usize;

    fn index_bytes(&self) -> usize;

    /// True when `width` is a beam width, which may not be below `k`.
    fn beam_width(&self) -> bool {
        true
    }
}

/// Registered method names.
pub const METHODS: &[&str] = &[
    "pre-filter",
    "post-filter",
    "router",
    "hnsw-visit-all",
    "hnsw-induced",
    "segment-tree",
    "segment-graph",
    "label-graph",
    "ivf",
    "rii",
    "caps",
    "fused",
];

/// Whether a method's results always satisfy the filter.
pub fn is_exact_filtering(method: &str) -> bool {
    method != "fused"
}

fn object(params: &Value) -> Result<Map<String, Value>> {
    match params {
        Value::Null => Ok(Map::new()),
        Value::Object(m) => Ok(m.clone()),
        _ => bail!("method parameters must be a JSON object"),
    }
}

fn take<T: DeserializeOwned>(obj: &mut Map<String, Value>, key: &str) -> Result<Option<T>> {
    obj.remove(key)
        .map(|v| serde_json::from_value(v).with_context(|| format!("parameter `{key}`")))
        .transpose()
}

fn rest<T: DeserializeOwned>(obj: Map<String, Value>) -> Result<T> {
    Ok(serde_json::from_value(Value::Object(obj))?)
}

fn column_of(dataset: &Dataset, requested: Option<String>, kind: AttributeKind) -> Result<String> {
    match requested {
        Some(c) => Ok(c),
        None => dataset
            .schema()
            .columns()
            .iter()
            .find(|c| c.kind == kind)
            .map(|c| c.name.clone())
            .ok_or_else(|| anyhow!("dataset has no {kind} column")),
    }
}

struct PreFilter {
    dataset: Dataset,
    attrs: AttributeIndexes,
}

impl FilteredIndex for PreFilter {
    fn method(&self) -> &'static str {
        "pre-filter"
    }

    fn query(&self, q: &Query, _width: usize) -> Result<KnnResult> {
        Ok(pre_filter_query(&self.dataset, &self.attrs, q)?)
    }

    fn max_width(&self) -> usize {
        self.dataset.len()
    }

    fn index_bytes(&self) -> usize {
        self.attrs.heap_bytes()
    }
}

#[derive(Clone, Copy)]
enum HnswMode {
    Post(usize),
    VisitAll,
    Induced,
}

struct Hnsw {
    dataset: Dataset,
    index: HnswIndex,
    mode: HnswMode,
}

impl FilteredIndex for Hnsw {
    fn method(&self) -> &'static str {
        match self.mode {
            HnswMode::Post(_) => "post-filter",
            HnswMode::VisitAll => "hnsw-visit-all",
            HnswMode::Induced => "hnsw-induced",
        }
    }

    fn query(&self, q: &Query, ef: usize) -> Result<KnnResult> {
        let v = q.vector.as_slice();
        if let HnswMode::Post(mult) = self.mode {
            return Ok(post_filter_query(&self.index, &self.dataset, q, ef, mult)?);
        }
        let compiled = q.validate(&self.dataset)?;
        let r = match (&compiled, self.mode) {
            (None, _) => self.index.search_visit_all(v, q.k, ef, &MatchAll)?,
            (Some(f), HnswMode::VisitAll) => {
                self.index
                    .search_visit_all(v, q.k, ef, &FilterPredicate::new(&self.dataset, f))?
            }
            (Some(f), _) => self
                .index
                .search_induced(v, q.k, ef, &FilterPredicate::new(&self.dataset, f))?,
        };
        Ok(r)
    }

    fn max_width(&self) -> usize {
        self.dataset.len()
    }

    fn index_bytes(&self) -> usize {
        self.index.graph_bytes()
    }
}

struct Router {
    dataset: Dataset,
    attrs: AttributeIndexes,
    index: HnswIndex,
    config: RouterConfig,
}

impl FilteredIndex for Router {
    fn method(&self) -> &'static str {
        "router"
    }

    fn query(&self, q: &Query, ef: usize) -> Result<KnnResult> {
        Ok(route_and_query(&self.dataset, &self.attrs, &self.index, q, ef, &self.config)?.0)
    }

    fn max_width(&self) -> usize {
        self.dataset.len()
    }

    fn index_bytes(&self) -> usize {
        self.index.graph_bytes() + self.attrs.heap_bytes()
    }
}

struct Tree {
    dataset: Dataset,
    index: SegmentTreeIndex,
}

impl FilteredIndex for Tree {
    fn method(&self) -> &'static str {
        "segment-tree"
    }

    fn query(&self, q: &Query, ef: usize) -> Result<KnnResult> {
        Ok(fanns_core::range::segment_tree_query(
            &self.index,
            &self.dataset,
            q,
            ef,
        )?)
    }

    fn max_width(&self) -> usize {
        self.dataset.len()
    }

    fn index_bytes(&self) -> usize {
        self.index.graph_bytes()
    }
}

struct SegGraph {
    dataset: Dataset,
    index: SegmentGraphIndex,
}

impl FilteredIndex for SegGraph {
    fn method(&self) -> &'static str {
        "segment-graph"
    }

    fn query(&self, q: &Query, ef: usize) -> Result<KnnResult> {
        Ok(self.index.query(&self.dataset, q, ef)?)
    }

    fn max_width(&self) -> usize {
        self.dataset.len()
    }

    fn index_bytes(&self) -> usize {
        self.index.graph_bytes()
    }
}

struct Label {
    dataset: Dataset,
    index: LabelGraphIndex,
}

impl FilteredIndex for Label {
    fn method(&self) -> &'static str {
        "label-graph"
    }

    fn query(&self, q: &Query, ef: usize) -> Result<KnnResult> {
        Ok(self.index.query(&self.dataset, q, ef)?)
    }

    fn max_width(&self) -> usize {
        self.dataset.len()
    }

    fn index_bytes(&self) -> usize {
        self.index.graph_bytes()
    }
}

struct Ivf {
    dataset: Dataset,
    index: IvfIndex,
}

impl FilteredIndex for Ivf {
    fn beam_width(&self) -> bool {
        false
    }

    fn method(&self) -> &'static str {
        "ivf"
    }

    fn query(&self, q: &Query, w: usize) -> Result<KnnResult> {
        let v = q.vector.as_slice();
        Ok(match q.validate(&self.dataset)? {
            Some(f) => self
                .index
                .search_filtered(v, q.k, w, &FilterPredicate::new(&self.dataset, &f))?,
            None => self.index.search(v, q.k, w)?,
        })
    }

    fn max_width(&self) -> usize {
        self.index.clusters()
    }

    fn index_bytes(&self) -> usize {
        self.index.index_bytes()
    }
}

struct Rii {
    dataset: Dataset,
    attrs: AttributeIndexes,
    index: IvfIndex,
    params: RiiParams,
}

impl FilteredIndex for Rii {
    fn beam_width(&self) -> bool {
        false
    }

    fn method(&self) -> &'static str {
        "rii"
    }

    fn query(&self, q: &Query, w: usize) -> Result<KnnResult> {
        let ids = match q.validate(&self.dataset)? {
            Some(f) => self.attrs.matching_compiled(&f),
            None => (0..self.dataset.len() as u32).collect(),
        };
        let matching = Matching::from_ids(self.dataset.len(), ids)?;
        let params = RiiParams { w, ..self.params };
        Ok(fanns_core::quant::rii_query(&self.index, q.vector.as_slice(), q.k, &matching, &params)?.0)
    }

    fn max_width(&self) -> usize {
        self.index.clusters()
    }

    fn index_bytes(&self) -> usize {
        self.index.index_bytes() + self.attrs.heap_bytes()
    }
}

struct Caps {
    dataset: Dataset,
    index: CapsIndex,
}

impl FilteredIndex for Caps {
    fn beam_width(&self) -> bool {
        false
    }

    fn method(&self) -> &'static str {
        "caps"
    }

    fn query(&self, q: &Query, w: usize) -> Result<KnnResult> {
        Ok(fanns_core::quant::caps_query(&self.index, &self.dataset, q, w)?)
    }

    fn max_width(&self) -> usize {
        self.index.clusters()
    }

    fn index_bytes(&self) -> usize {
        self.index.index_bytes()
    }
}

struct Fused {
    dataset: Dataset,
    weight: f64,
}

impl FilteredIndex for Fused {
    fn method(&self) -> &'static str {
        "fused"
    }

    fn query(&self, q: &Query, _width: usize) -> Result<KnnResult> {
        Ok(afanns_query_fused(&self.dataset, q, self.weight)?)
    }

    fn max_width(&self) -> usize {
        self.dataset.len()
    }

    fn index_bytes(&self) -> usize {
        0
    }
}

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct IvfParams {
    c: usize,
    iters: usize,
    seed: u64,
}

impl Default for IvfParams {
    fn default() -> Self {
        Self {
            c: 64,
            iters: DEFAULT_ITERATIONS,
            seed: 42,
        }
    }
}

/// Wraps a built HNSW graph as `post-filter`, `hnsw-visit-all` or
/// `hnsw-induced`. `post_multiplier` is the initial candidate multiplier of
/// `post-filter`.
pub fn from_hnsw(
    method: &str,
    dataset: &Dataset,
    index: HnswIndex,
    post_multiplier: usize,
) -> Result<Box<dyn FilteredIndex>> {
    let mode = match method {
        "post-filter" => {
            if post_multiplier == 0 {
                bail!("initial_multiplier must be at least 1");
            }
            HnswMode::Post(post_multiplier)
        }
        "hnsw-visit-all" => HnswMode::VisitAll,
        "hnsw-induced" => HnswMode::Induced,
        _ => bail!("`{method}` is not an HNSW traversal mode"),
    };
    Ok(Box::new(Hnsw {
        dataset: dataset.clone(),
        index,
        mode,
    }))
}

/// Builds `method` over `dataset`. `params` is a JSON object of
/// method-specific settings; unknown keys are rejected.
pub fn build_method(method: &str, dataset: &Dataset, params: &Value) -> Result<Box<dyn FilteredIndex>> {
    let mut obj = object(params)?;
    let ds = dataset.clone();
    let idx: Box<dyn FilteredIndex> = match method {
        "pre-filter" => {
            if let Some(k) = obj.keys().next() {
                bail!("pre-filter takes no parameters (got `{k}`)");
            }
            Box::new(PreFilter {
                attrs: AttributeIndexes::build(dataset),
                dataset: ds,
            })
        }
        "post-filter" | "hnsw-visit-all" | "hnsw-induced" => {
            let mult = if method == "post-filter" {
                take::<usize>(&mut obj, "initial_multiplier")?.unwrap_or(1)
            } else {
                1
            };
            let p: HnswParams = rest(obj)?;
            return from_hnsw(method, dataset, HnswIndex::build(dataset, p)?, mult);
        }
        "router" => {
            let defaults = RouterConfig::default();
            let config = RouterConfig {
                low_threshold: take(&mut obj, "low_threshold")?.unwrap_or(defaults.low_threshold),
                high_threshold: take(&mut obj, "high_threshold")?.unwrap_or(defaults.high_threshold),
                post_initial_multiplier: take(&mut obj, "post_initial_multiplier")?
                    .unwrap_or(defaults.post_initial_multiplier),
            };
            config.validate()?;
            let p: HnswParams = rest(obj)?;
            Box::new(Router {
                attrs: AttributeIndexes::build(dataset),
                index: HnswIndex::build(dataset, p)?,
                dataset: ds,
                config,
            })
        }
        "segment-tree" => {
            let column = column_of(dataset, take(&mut obj, "column")?, AttributeKind::Ordered)?;
            let beta = take(&mut obj, "beta")?.unwrap_or(4);
            let p: HnswParams = rest(obj)?;
            Box::new(Tree {
                index: SegmentTreeIndex::build(dataset, &column, beta, p)?,
                dataset: ds,
            })
        }
        "segment-graph" => {
            let column = column_of(dataset, take(&mut obj, "column")?, AttributeKind::Ordered)?;
            let p: HnswParams = rest(obj)?;
            Box::new(SegGraph {
                index: SegmentGraphIndex::build(dataset, &column, p)?,
                dataset: ds,
            })
        }
        "label-graph" => {
            let column = column_of(dataset, take(&mut obj, "column")?, AttributeKind::Set)?;
            let p: LabelGraphParams = rest(obj)?;
            Box::new(Label {
                index: LabelGraphIndex::build(dataset, &column, p)?,
                dataset: ds,
            })
        }
        "ivf" => {
            let p: IvfParams = rest(obj)?;
            Box::new(Ivf {
                index: IvfIndex::build(dataset, p.c, p.iters, p.seed, None)?,
                dataset: ds,
            })
        }
        "rii" => {
            let pq = take::<PqSpec>(&mut obj, "pq")?.unwrap_or_default();
            let threshold = take::<f64>(&mut obj, "threshold")?;
            let rerank = take::<Rerank>(&mut obj, "rerank")?.unwrap_or_default();
            let p: IvfParams = rest(obj)?;
            Box::new(Rii {
                attrs: AttributeIndexes::build(dataset),
                index: IvfIndex::build(dataset, p.c, p.iters, p.seed, Some(pq))?,
                dataset: ds,
                params: RiiParams {
                    w: 1,
                    threshold,
                    rerank,
                    force: None,
                },
            })
        }
        "caps" => {
            let column = column_of(dataset, take(&mut obj, "column")?, AttributeKind::Unordered)?;
            let p: CapsParams = rest(obj)?;
            Box::new(Caps {
                index: CapsIndex::build(dataset, &column, p)?,
                dataset: ds,
            })
        }
        "fused" => {
            let weight = take(&mut obj, "weight")?.unwrap_or(1.0);
            if let Some(k) = obj.keys().next() {
                bail!("unknown fused parameter `{k}`");
            }
            Box::new(Fused { dataset: ds, weight })
        }
        _ => bail!("unknown method `{method}`; known: {}", METHODS.join(", ")),
    };
    Ok(idx)
}
