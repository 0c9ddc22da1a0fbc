//! Synthetic datasets: Gaussian-mixture unit vectors plus typed attributes.

use anyhow::{ensure, Result};
use fanns_core::distance::normalize;
use fanns_core::{AttributeKind, AttributeSchema, AttributeValue, ColumnDef, Dataset, OrderedValue, VectorMatrix};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Normal, Poisson};
use serde::{Deserialize, Serialize};

/// One generated column. Unset fields take kind-specific defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: AttributeKind,
    /// Distinct tokens of an unordered column.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cardinality: Option<usize>,
    /// Zipf exponent of the token weights of an unordered column.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zipf: Option<f64>,
    /// Inclusive integer range of an ordered column.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<i64>,
    /// Token pool size of a set column.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pool: Option<usize>,
    /// Mean set size (Poisson) of a set column.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_size: Option<f64>,
}

impl ColumnSpec {
    pub fn new(name: &str, kind: AttributeKind) -> Self {
        Self {
            name: name.into(),
            kind,
            cardinality: None,
            zipf: None,
            min: None,
            max: None,
            pool: None,
            mean_size: None,
        }
    }

    pub fn cardinality(&self) -> usize {
        self.cardinality.unwrap_or(20)
    }

    pub fn zipf(&self) -> f64 {
        self.zipf.unwrap_or(1.0)
    }

    pub fn bounds(&self) -> (i64, i64) {
        (self.min.unwrap_or(0), self.max.unwrap_or(9999))
    }

    pub fn pool(&self) -> usize {
        self.pool.unwrap_or(32)
    }

    pub fn mean_size(&self) -> f64 {
        self.mean_size.unwrap_or(3.0)
    }

    /// Normalized token weights `w_i ∝ (i + 1)^-zipf` of an unordered column.
    pub fn token_weights(&self) -> Vec<f64> {
        let raw: Vec<f64> = (0..self.cardinality())
            .map(|i| ((i + 1) as f64).powf(-self.zipf()))
            .collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|w| w / total).collect()
    }

    fn validate(&self) -> Result<()> {
        match self.kind {
            AttributeKind::Unordered => {
                ensure!(
                    self.cardinality() >= 1,
                    "column `{}`: cardinality must be positive",
                    self.name
                );
                ensure!(
                    self.zipf().is_finite() && self.zipf() >= 0.0,
                    "column `{}`: bad zipf exponent",
                    self.name
                );
            }
            AttributeKind::Ordered => {
                let (lo, hi) = self.bounds();
                ensure!(lo <= hi, "column `{}`: min exceeds max", self.name);
            }
            AttributeKind::Set => {
                ensure!(self.pool() >= 1, "column `{}`: pool must be positive", self.name);
                ensure!(
                    self.mean_size().is_finite() && self.mean_size() > 0.0,
                    "column `{}`: mean_size must be positive",
                    self.name
                );
            }
        }
        Ok(())
    }
}

pub fn token_name(i: usize) -> String {
    format!("v{i}")
}

pub fn set_token_name(i: usize) -> String {
    format!("t{i}")
}

/// Parameters of a generated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    pub n: usize,
    pub d: usize,
    pub seed: u64,
    /// Mixture components.
    #[serde(default = "default_components")]
    pub components: usize,
    /// Per-coordinate standard deviation around a component center (centers
    /// have unit per-coordinate deviation).
    #[serde(default = "default_spread")]
    pub spread: f64,
    pub columns: Vec<ColumnSpec>,
}

fn default_components() -> usize {
    16
}

fn default_spread() -> f64 {
    0.75
}

impl DatasetSpec {
    pub fn new(n: usize, d: usize, seed: u64, columns: Vec<ColumnSpec>) -> Self {
        Self {
            n,
            d,
            seed,
            components: default_components(),
            spread: default_spread(),
            columns,
        }
    }

    /// Three columns: `category` (unordered), `year` (ordered), `tags` (set).
    pub fn standard(n: usize, d: usize, seed: u64) -> Self {
        Self::new(n, d, seed, standard_columns())
    }

    pub fn schema(&self) -> Result<AttributeSchema> {
        Ok(AttributeSchema::new(
            self.columns
                .iter()
                .map(|c| ColumnDef {
                    name: c.name.clone(),
                    kind: c.kind,
                })
                .collect(),
        )?)
    }
}

pub fn standard_columns() -> Vec<ColumnSpec> {
    vec![
        ColumnSpec::new("category", AttributeKind::Unordered),
        ColumnSpec::new("year", AttributeKind::Ordered),
        ColumnSpec::new("tags", AttributeKind::Set),
    ]
}

/// Parses a JSON list of column specs; a plain `{name, kind}` schema file
/// is accepted and takes the defaults.
pub fn parse_column_specs(text: &str) -> Result<Vec<ColumnSpec>> {
    Ok(serde_json::from_str(text)?)
}

/// Deterministic under `spec.seed`. Vectors are unit length.
pub fn gen_dataset(spec: &DatasetSpec) -> Result<Dataset> {
    ensure!(spec.n >= 1 && spec.d >= 1, "n and d must be at least 1");
    ensure!(spec.components >= 1, "components must be at least 1");
    ensure!(
        !spec.columns.is_empty(),
        "the attribute spec must declare at least one column"
    );
    ensure!(spec.spread.is_finite() && spec.spread > 0.0, "spread must be positive");
    for c in &spec.columns {
        c.validate()?;
    }
    let schema = spec.schema()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let unit = Normal::new(0.0f64, 1.0).expect("valid normal");
    let centers: Vec<Vec<f64>> = (0..spec.components)
        .map(|_| (0..spec.d).map(|_| unit.sample(&mut rng)).collect())
        .collect();
    let mut data = Vec::with_capacity(spec.n * spec.d);
    for _ in 0..spec.n {
        let c = &centers[rng.random_range(0..spec.components)];
        let mut v: Vec<f32> = c
            .iter()
            .map(|&x| (x + spec.spread * unit.sample(&mut rng)) as f32)
            .collect();
        if v.iter().all(|&x| x == 0.0) {
            v[0] = 1.0;
        }
        normalize(&mut v);
        data.extend_from_slice(&v);
    }
    let vectors = VectorMatrix::new(spec.d, data)?;

    let mut columns: Vec<Vec<AttributeValue>> = Vec::with_capacity(spec.columns.len());
    for (ci, col) in spec.columns.iter().enumerate() {
        let mut crng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x9e37_79b9_7f4a_7c15u64.wrapping_mul(ci as u64 + 1));
        let values = match col.kind {
            AttributeKind::Unordered => {
                let dist = WeightedIndex::new(col.token_weights())?;
                (0..spec.n)
                    .map(|_| AttributeValue::Unordered(token_name(dist.sample(&mut crng))))
                    .collect()
            }
            AttributeKind::Ordered => {
                let (lo, hi) = col.bounds();
                (0..spec.n)
                    .map(|_| AttributeValue::Ordered(OrderedValue::Int(crng.random_range(lo..=hi))))
                    .collect()
            }
            AttributeKind::Set => {
                let pois = Poisson::new(col.mean_size())?;
                (0..spec.n)
                    .map(|_| {
                        let size = (pois.sample(&mut crng) as usize).min(col.pool());
                        let mut picked: Vec<usize> = sample(&mut crng, col.pool(), size).into_vec();
                        picked.sort_unstable();
                        AttributeValue::set(picked.into_iter().map(set_token_name))
                    })
                    .collect()
            }
        };
        columns.push(values);
    }
    let attributes: Vec<Vec<AttributeValue>> = (0..spec.n)
        .map(|i| columns.iter().map(|c| c[i].clone()).collect())
        .collect();
    Ok(Dataset::from_parts(schema, vectors, attributes)?)
}
