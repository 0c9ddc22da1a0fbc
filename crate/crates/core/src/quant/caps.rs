use serde::{Deserialize, Serialize};

use super::ivf::IvfIndex;
use super::kmeans::DEFAULT_ITERATIONS;
use crate::distance::l2;
use crate::error::{invalid, Error, Result};
use crate::filter::{CompiledFilter, Query};
use crate::model::{AttributeKind, AttributeValue, Dataset};
use crate::oracle::{KnnResult, Neighbor, TopK};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CapsParams {
    /// Number of clusters.
    pub b: usize,
    /// Levels per tree before the terminal bucket.
    pub max_depth: usize,
    pub iters: usize,
    pub seed: u64,
}

impl Default for CapsParams {
    fn default() -> Self {
        Self {
            b: 64,
            max_depth: 8,
            iters: DEFAULT_ITERATIONS,
            seed: 42,
        }
    }
}

/// One tree level: the most frequent token among the ids left at this
/// level, and the ids carrying it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AftLevel {
    pub token: String,
    pub bucket: Vec<u32>,
}

/// Chain of levels over one cluster; ids not split off by any level land
/// in the terminal bucket.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributeFrequencyTree {
    pub(crate) levels: Vec<AftLevel>,
    pub(crate) terminal: Vec<u32>,
}

impl AttributeFrequencyTree {
    /// `token_of` gives each id's token. Frequency ties go to the
    /// lexicographically smaller token.
    pub fn build<'a>(ids: &[u32], max_depth: usize, token_of: impl Fn(u32) -> &'a str) -> Self {
        let mut rest: Vec<u32> = ids.to_vec();
        rest.sort_unstable();
        let mut levels = Vec::new();
        while levels.len() < max_depth && !rest.is_empty() {
            let mut counts: std::collections::BTreeMap<&str, usize> = Default::default();
            for &id in &rest {
                *counts.entry(token_of(id)).or_default() += 1;
            }
            let (token, _) = counts
                .iter()
                .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
                .map(|(t, c)| (t.to_string(), *c))
                .expect("rest is non-empty");
            let (bucket, next): (Vec<u32>, Vec<u32>) = rest.iter().partition(|&&id| token_of(id) == token);
            levels.push(AftLevel { token, bucket });
            rest = next;
        }
        Self { levels, terminal: rest }
    }

    pub fn levels(&self) -> &[AftLevel] {
        &self.levels
    }

    pub fn terminal(&self) -> &[u32] {
        &self.terminal
    }

    /// Ids carrying `token`: a level's bucket, or a filtered scan of the
    /// terminal bucket.
    pub fn extract<'a>(&self, token: &str, token_of: impl Fn(u32) -> &'a str, out: &mut Vec<u32>) {
        for level in &self.levels {
            if level.token == token {
                out.extend_from_slice(&level.bucket);
                return;
            }
        }
        out.extend(self.terminal.iter().copied().filter(|&id| token_of(id) == token));
    }
}

/// Clusters plus one attribute frequency tree per cluster over an
/// unordered column.
#[derive(Debug, Clone)]
pub struct CapsIndex {
    pub(crate) column: String,
    pub(crate) col: usize,
    pub(crate) params: CapsParams,
    pub(crate) ivf: IvfIndex,
    pub(crate) trees: Vec<AttributeFrequencyTree>,
}

fn token(dataset: &Dataset, col: usize, id: u32) -> &str {
    match &dataset.attributes(id)[col] {
        AttributeValue::Unordered(t) => t,
        _ => "",
    }
}

impl CapsIndex {
    pub fn build(dataset: &Dataset, column: &str, params: CapsParams) -> Result<Self> {
        let col = dataset.schema().index_of(column)?;
        let kind = dataset.schema().kind(col);
        if kind != AttributeKind::Unordered {
            return Err(Error::KindMismatch {
                column: column.into(),
                expected: "unordered",
                actual: kind,
            });
        }
        if params.b == 0 {
            return Err(invalid("B must be at least 1"));
        }
        let ivf = IvfIndex::build(dataset, params.b, params.iters, params.seed, None)?;
        let trees = (0..ivf.clusters())
            .map(|c| AttributeFrequencyTree::build(ivf.list(c), params.max_depth, |id| token(dataset, col, id)))
            .collect();
        Ok(Self {
            column: column.into(),
            col,
            params,
            ivf,
            trees,
        })
    }

    pub fn column(&self) -> &str {
        &self.column
    }

    pub fn params(&self) -> &CapsParams {
        &self.params
    }

    pub fn clusters(&self) -> usize {
        self.ivf.clusters()
    }

    pub fn tree(&self, cluster: usize) -> &AttributeFrequencyTree {
        &self.trees[cluster]
    }

    pub fn ivf(&self) -> &IvfIndex {
        &self.ivf
    }

    pub fn index_bytes(&self) -> usize {
        self.ivf.index_bytes()
            + self
                .trees
                .iter()
                .map(|t| {
                    t.terminal.len() * 4
                        + t.levels
                            .iter()
                            .map(|l| l.bucket.len() * 4 + l.token.len() + 32)
                            .sum::<usize>()
                })
                .sum::<usize>()
    }

    /// Exact top-k among items of the `w` nearest clusters whose column
    /// equals `value`.
    pub fn search(&self, dataset: &Dataset, q: &[f32], k: usize, w: usize, value: &str) -> Result<KnnResult> {
        self.ivf.check_query(q, k, w)?;
        if dataset.len() != self.ivf.len() {
            return Err(invalid("dataset does not match the index"));
        }
        let mut ids = Vec::new();
        for c in self.ivf.probe(q, w) {
            self.trees[c].extract(value, |id| token(dataset, self.col, id), &mut ids);
        }
        let mut top = TopK::new(k);
        for id in ids {
            top.push(Neighbor::new(id, l2(q, dataset.vector(id))));
        }
        Ok(top.into_result())
    }
}

pub fn build_caps(dataset: &Dataset, column: &str, b: usize, max_depth: usize) -> Result<CapsIndex> {
    CapsIndex::build(
        dataset,
        column,
        CapsParams {
            b,
            max_depth,
            ..CapsParams::default()
        },
    )
}

/// The query's filter must be a single exact-match leaf on the index column.
pub fn caps_query(index: &CapsIndex, dataset: &Dataset, query: &Query, w: usize) -> Result<KnnResult> {
    match query.validate(dataset)? {
        Some(CompiledFilter::Token { col, token }) if col == index.col => {
            index.search(dataset, query.vector.as_slice(), query.k, w, &token)
        }
        _ => Err(Error::UnsupportedFilter(format!(
            "expected one exact-match leaf on `{}`",
            index.column
        ))),
    }
}
