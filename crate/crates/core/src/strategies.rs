//! Pre-filtering, post-filtering, selectivity routing, and the fused
//! (approximately filtered) distance mode.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::distance::l2;
use crate::error::{invalid, Error, Result};
use crate::filter::{CompiledFilter, Filter, FilterValue, Query};
use crate::hnsw::HnswIndex;
use crate::model::{AttributeKind, AttributeSchema, AttributeValue, Dataset, OrderedValue};
use crate::oracle::{exact_knn_compiled, exact_knn_over, KnnResult, Neighbor, TopK};
use crate::predicate::{FilterPredicate, IdBitmap, MatchAll, Predicate};

/// Attribute-only index for one column.
#[derive(Debug, Clone, PartialEq)]
pub enum ColumnIndex {
    /// Token to sorted id list (unordered and set columns).
    Postings(BTreeMap<String, Vec<u32>>),
    /// Ids sorted by `(value, id)` with the matching value array.
    Sorted { values: Vec<OrderedValue>, ids: Vec<u32> },
}

/// Attribute indexes over every column of a dataset.
#[derive(Debug, Clone)]
pub struct AttributeIndexes {
    schema: AttributeSchema,
    n: usize,
    columns: Vec<ColumnIndex>,
}

impl AttributeIndexes {
    pub fn build(dataset: &Dataset) -> Self {
        let schema = dataset.schema().clone();
        let columns = (0..schema.len())
            .map(|col| match schema.kind(col) {
                AttributeKind::Unordered | AttributeKind::Set => {
                    let mut map: BTreeMap<String, Vec<u32>> = BTreeMap::new();
                    for it in dataset.items() {
                        match &it.attributes[col] {
                            AttributeValue::Unordered(t) => map.entry(t.clone()).or_default().push(it.id),
                            AttributeValue::Set(ts) => {
                                for t in ts {
                                    map.entry(t.clone()).or_default().push(it.id);
                                }
                            }
                            AttributeValue::Ordered(_) => unreachable!("kind checked at ingest"),
                        }
                    }
                    ColumnIndex::Postings(map)
                }
                AttributeKind::Ordered => {
                    let mut pairs: Vec<(OrderedValue, u32)> = dataset
                        .items()
                        .map(|it| (it.attributes[col].as_ordered().expect("ordered"), it.id))
                        .collect();
                    pairs.sort();
                    let (values, ids) = pairs.into_iter().unzip();
                    ColumnIndex::Sorted { values, ids }
                }
            })
            .collect();
        Self {
            schema,
            n: dataset.len(),
            columns,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn column(&self, name: &str) -> Result<&ColumnIndex> {
        Ok(&self.columns[self.schema.index_of(name)?])
    }

    /// Sorted ids of the items satisfying `filter`.
    pub fn matching_ids(&self, filter: &Filter) -> Result<Vec<u32>> {
        Ok(self.matching_compiled(&filter.compile(&self.schema)?))
    }

    pub fn matching_compiled(&self, f: &CompiledFilter) -> Vec<u32> {
        match f {
            CompiledFilter::Token { col, token } | CompiledFilter::SetContains { col, token } => {
                match &self.columns[*col] {
                    ColumnIndex::Postings(map) => map.get(token).cloned().unwrap_or_default(),
                    ColumnIndex::Sorted { .. } => Vec::new(),
                }
            }
            CompiledFilter::Range { col, low, high } => match &self.columns[*col] {
                ColumnIndex::Sorted { values, ids } => {
                    let (a, b) = rank_bounds(values, *low, *high);
                    let mut out = ids[a..b].to_vec();
                    out.sort_unstable();
                    out
                }
                ColumnIndex::Postings(_) => Vec::new(),
            },
            CompiledFilter::And(children) => {
                let mut lists: Vec<Vec<u32>> = children.iter().map(|c| self.matching_compiled(c)).collect();
                lists.sort_by_key(Vec::len);
                let mut it = lists.into_iter();
                match it.next() {
                    None => (0..self.n as u32).collect(),
                    Some(first) => it.fold(first, |acc, l| intersect(&acc, &l)),
                }
            }
            CompiledFilter::Or(children) => children
                .iter()
                .map(|c| self.matching_compiled(c))
                .fold(Vec::new(), |acc, l| union(&acc, &l)),
            CompiledFilter::Not(inner) => complement(&self.matching_compiled(inner), self.n),
        }
    }

    pub fn heap_bytes(&self) -> usize {
        self.columns
            .iter()
            .map(|c| match c {
                ColumnIndex::Postings(map) => map.iter().map(|(k, v)| k.len() + 4 * v.len() + 48).sum::<usize>(),
                ColumnIndex::Sorted { values, ids } => 16 * values.len() + 4 * ids.len(),
            })
            .sum()
    }
}

/// Half-open index range of `values` (sorted) lying in `[low, high]`.
pub(crate) fn rank_bounds(values: &[OrderedValue], low: OrderedValue, high: OrderedValue) -> (usize, usize) {
    let a = values.partition_point(|v| *v < low);
    let b = values.partition_point(|v| *v <= high);
    (a, b.max(a))
}

fn intersect(a: &[u32], b: &[u32]) -> Vec<u32> {
    let (mut i, mut j, mut out) = (0, 0, Vec::new());
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

fn union(a: &[u32], b: &[u32]) -> Vec<u32> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::with_capacity(a.len() + b.len());
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

fn complement(a: &[u32], n: usize) -> Vec<u32> {
    let mut out = Vec::with_capacity(n - a.len());
    let mut it = a.iter().peekable();
    for id in 0..n as u32 {
        if it.peek() == Some(&&id) {
            it.next();
        } else {
            out.push(id);
        }
    }
    out
}

pub fn build_attribute_indexes(dataset: &Dataset) -> AttributeIndexes {
    AttributeIndexes::build(dataset)
}

pub fn matching_ids(indexes: &AttributeIndexes, filter: &Filter) -> Result<Vec<u32>> {
    indexes.matching_ids(filter)
}

/// Exact search over the ids the attribute indexes report as matching.
pub fn pre_filter_query(dataset: &Dataset, indexes: &AttributeIndexes, query: &Query) -> Result<KnnResult> {
    let q = query.vector.as_slice();
    Ok(match query.validate(dataset)? {
        Some(f) => exact_knn_over(dataset, q, query.k, &indexes.matching_compiled(&f)),
        None => exact_knn_compiled(dataset, q, query.k, None),
    })
}

/// Unfiltered search for `k' = initial_multiplier * k` candidates, then
/// filtering; `k'` doubles until `k` matches survive or it reaches the
/// index size.
pub fn post_filter_search<P: Predicate + ?Sized>(
    index: &HnswIndex,
    q: &[f32],
    k: usize,
    ef: usize,
    initial_multiplier: usize,
    pred: &P,
) -> Result<KnnResult> {
    if ef < k {
        return Err(Error::WidthBelowK { width: ef, k });
    }
    let n = index.len();
    let mut k_prime = k.saturating_mul(initial_multiplier.max(1)).min(n).max(1);
    loop {
        let r = index.search(q, k_prime, ef.max(k_prime))?;
        let kept: Vec<Neighbor> = r.entries.into_iter().filter(|nb| pred.matches(nb.id)).take(k).collect();
        if kept.len() >= k || k_prime >= n {
            return Ok(KnnResult { entries: kept });
        }
        k_prime = (k_prime * 2).min(n);
    }
}

pub fn post_filter_query(
    index: &HnswIndex,
    dataset: &Dataset,
    query: &Query,
    ef: usize,
    initial_multiplier: usize,
) -> Result<KnnResult> {
    let q = query.vector.as_slice();
    match query.validate(dataset)? {
        Some(f) => post_filter_search(
            index,
            q,
            query.k,
            ef,
            initial_multiplier,
            &FilterPredicate::new(dataset, &f),
        ),
        None => post_filter_search(index, q, query.k, ef, initial_multiplier, &MatchAll),
    }
}

/// Filtering regime chosen by the router.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Pre,
    In,
    Post,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Pre => "pre",
            Strategy::In => "in",
            Strategy::Post => "post",
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Selectivity bands: below `low_threshold` pre-filter, above
/// `high_threshold` post-filter, in-filter otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RouterConfig {
    pub low_threshold: f64,
    pub high_threshold: f64,
    pub post_initial_multiplier: usize,
}

impl Default for RouterConfig {
    fn default() -> Self {
        Self {
            low_threshold: 0.01,
            high_threshold: 0.5,
            post_initial_multiplier: 1,
        }
    }
}

impl RouterConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = (0.0..=1.0).contains(&self.low_threshold)
            && (0.0..=1.0).contains(&self.high_threshold)
            && self.low_threshold <= self.high_threshold;
        if !ok {
            return Err(invalid("router thresholds must satisfy 0 <= low <= high <= 1"));
        }
        Ok(())
    }

    pub fn route(&self, selectivity: f64) -> Strategy {
        if selectivity < self.low_threshold {
            Strategy::Pre
        } else if selectivity > self.high_threshold {
            Strategy::Post
        } else {
            Strategy::In
        }
    }
}

/// Routes by exact selectivity (from the attribute indexes) and answers
/// the query with the chosen strategy.
pub fn route_and_query(
    dataset: &Dataset,
    indexes: &AttributeIndexes,
    index: &HnswIndex,
    query: &Query,
    ef: usize,
    config: &RouterConfig,
) -> Result<(KnnResult, Strategy)> {
    config.validate()?;
    let q = query.vector.as_slice();
    let Some(f) = query.validate(dataset)? else {
        let r = post_filter_search(index, q, query.k, ef, 1, &MatchAll)?;
        return Ok((r, config.route(1.0)));
    };
    let ids = indexes.matching_compiled(&f);
    let strategy = config.route(ids.len() as f64 / dataset.len().max(1) as f64);
    let result = match strategy {
        Strategy::Pre => exact_knn_over(dataset, q, query.k, &ids),
        Strategy::In => {
            let bitmap = IdBitmap::from_ids(dataset.len(), &ids);
            index.search_induced(q, query.k, ef, &bitmap)?
        }
        Strategy::Post => {
            let bitmap = IdBitmap::from_ids(dataset.len(), &ids);
            post_filter_search(index, q, query.k, ef, config.post_initial_multiplier, &bitmap)?
        }
    };
    Ok((result, strategy))
}

/// Euclidean distance plus `weight` times the fraction of positionally
/// unequal attribute values.
pub fn fused_distance(
    u: &[f32],
    v: &[f32],
    attr_a: &[AttributeValue],
    attr_b: &[AttributeValue],
    weight: f64,
) -> Result<f64> {
    if attr_a.len() != attr_b.len() {
        return Err(invalid("attribute lists are not aligned"));
    }
    let base = crate::distance::distance_euclidean(u, v)?;
    if attr_a.is_empty() {
        return Ok(base);
    }
    let unequal = attr_a.iter().zip(attr_b).filter(|(a, b)| a != b).count();
    Ok(base + weight * unequal as f64 / attr_a.len() as f64)
}

/// Column targets of a conjunction of exact-match leaves.
fn em_targets(filter: &Filter, schema: &AttributeSchema, out: &mut Vec<(usize, AttributeValue)>) -> Result<()> {
    match filter {
        Filter::Em(l) => {
            let col = schema.index_of(&l.column)?;
            let value = match (schema.kind(col), &l.value) {
                (AttributeKind::Unordered, FilterValue::Token(t)) => AttributeValue::Unordered(t.clone()),
                (AttributeKind::Ordered, FilterValue::Ordered(v)) => AttributeValue::Ordered(*v),
                _ => {
                    // Reuse the compiler's diagnostics for kind errors.
                    filter.compile(schema)?;
                    return Err(Error::UnsupportedFilter("em leaf value type".into()));
                }
            };
            if out.iter().any(|(c, _)| *c == col) {
                return Err(Error::UnsupportedFilter(format!(
                    "column `{}` targeted twice in fused query",
                    l.column
                )));
            }
            out.push((col, value));
            Ok(())
        }
        Filter::And(children) => children.iter().try_for_each(|c| em_targets(c, schema, out)),
        _ => Err(Error::UnsupportedFilter(
            "fused queries take a conjunction of exact-match leaves".into(),
        )),
    }
}

/// Brute-force top-k under the fused distance: Euclidean distance plus
/// `weight` times the fraction of targeted columns where the item differs
/// from the query's target. Results may violate the filter.
pub fn afanns_query_fused(dataset: &Dataset, query: &Query, weight: f64) -> Result<KnnResult> {
    if !weight.is_finite() || weight < 0.0 {
        return Err(invalid("fused weight must be finite and non-negative"));
    }
    let q = query.vector.as_slice();
    let Some(filter) = &query.filter else {
        query.validate(dataset)?;
        return Ok(exact_knn_compiled(dataset, q, query.k, None));
    };
    query.validate(dataset)?;
    let mut targets = Vec::new();
    em_targets(filter, dataset.schema(), &mut targets)?;
    let o = targets.len().max(1) as f64;
    let mut top = TopK::new(query.k);
    for it in dataset.items() {
        let unequal = targets.iter().filter(|(col, v)| it.attributes[*col] != *v).count();
        let d = l2(q, it.vector) + weight * unequal as f64 / o;
        top.push(Neighbor::new(it.id, d));
    }
    Ok(top.into_result())
}
