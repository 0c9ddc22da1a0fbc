//! Query-set generation for one filter family.

use std::fmt;
use std::str::FromStr;

use anyhow::{anyhow, bail, ensure, Result};
use fanns_core::distance::normalize;
use fanns_core::io::QueryRecord;
use fanns_core::strategies::AttributeIndexes;
use fanns_core::{AttributeKind, Dataset, Filter, OrderedValue, Query};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

/// Filter family of a query set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Em,
    R,
    Emis,
    None,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::Em => "em",
            Family::R => "r",
            Family::Emis => "emis",
            Family::None => "none",
        }
    }

    /// Attribute kind the family filters on.
    pub fn kind(self) -> Option<AttributeKind> {
        match self {
            Family::Em => Some(AttributeKind::Unordered),
            Family::R => Some(AttributeKind::Ordered),
            Family::Emis => Some(AttributeKind::Set),
            Family::None => None,
        }
    }

    /// Family of a filter, when it is a single leaf.
    pub fn of(filter: Option<&Filter>) -> Option<Family> {
        match filter {
            None => Some(Family::None),
            Some(Filter::Em(_)) => Some(Family::Em),
            Some(Filter::Range(_)) => Some(Family::R),
            Some(Filter::Emis(_)) => Some(Family::Emis),
            Some(_) => None,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "em" => Family::Em,
            "r" | "range" => Family::R,
            "emis" => Family::Emis,
            "none" => Family::None,
            _ => bail!("unknown filter family `{s}` (expected em, r, emis or none)"),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuerySpec {
    pub family: Family,
    /// Number of queries.
    pub p: usize,
    pub k: usize,
    pub seed: u64,
    /// Inclusive selectivity band every filter must fall in.
    pub band: [f64; 2],
    /// Filtered column; defaults to the first column of the family's kind.
    pub column: Option<String>,
    /// Norm of the perturbation added to the sampled base vector.
    pub noise: f64,
    /// Range filters get only an upper bound.
    pub half_bounded: bool,
    /// Resampling budget per query.
    pub max_attempts: usize,
}

impl Default for QuerySpec {
    fn default() -> Self {
        Self {
            family: Family::None,
            p: 100,
            k: 10,
            seed: 1,
            band: [0.0, 1.0],
            column: None,
            noise: 0.1,
            half_bounded: false,
            max_attempts: 1000,
        }
    }
}

/// Generated queries with their realized selectivities.
#[derive(Debug, Clone)]
pub struct QuerySet {
    pub family: Family,
    pub seed: u64,
    pub records: Vec<QueryRecord>,
    pub queries: Vec<Query>,
    pub selectivities: Vec<f64>,
}

impl QuerySet {
    /// Wraps records loaded from a file; selectivities are recomputed.
    pub fn from_records(dataset: &Dataset, records: Vec<QueryRecord>) -> Result<Self> {
        ensure!(!records.is_empty(), "query file is empty");
        let queries = records
            .iter()
            .map(|r| r.resolve(dataset))
            .collect::<fanns_core::Result<Vec<_>>>()?;
        let family = Family::of(queries[0].filter.as_ref()).unwrap_or(Family::None);
        let idx = AttributeIndexes::build(dataset);
        let selectivities = queries
            .iter()
            .map(|q| match &q.filter {
                Some(f) => Ok(idx.matching_ids(f)?.len() as f64 / dataset.len() as f64),
                None => Ok(1.0),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            family,
            seed: 0,
            records,
            queries,
            selectivities,
        })
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    /// A subset of `count` queries drawn without replacement under `seed`.
    pub fn sample(&self, count: usize, seed: u64) -> QuerySet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut picked = rand::seq::index::sample(&mut rng, self.len(), count.min(self.len())).into_vec();
        picked.sort_unstable();
        QuerySet {
            family: self.family,
            seed,
            records: picked.iter().map(|&i| self.records[i].clone()).collect(),
            queries: picked.iter().map(|&i| self.queries[i].clone()).collect(),
            selectivities: picked.iter().map(|&i| self.selectivities[i]).collect(),
        }
    }
}

fn column_for(dataset: &Dataset, spec: &QuerySpec) -> Result<Option<(usize, String)>> {
    let Some(kind) = spec.family.kind() else {
        return Ok(None);
    };
    let schema = dataset.schema();
    let col = match &spec.column {
        Some(name) => {
            let i = schema.index_of(name)?;
            ensure!(
                schema.kind(i) == kind,
                "column `{name}` is {}, the {} family needs {kind}",
                schema.kind(i),
                spec.family
            );
            i
        }
        None => schema
            .columns()
            .iter()
            .position(|c| c.kind == kind)
            .ok_or_else(|| anyhow!("no {kind} column for the {} family", spec.family))?,
    };
    Ok(Some((col, schema.columns()[col].name.clone())))
}

/// Deterministic under `spec.seed`. Every filter matches at least `k`
/// items and has selectivity inside `spec.band`.
pub fn gen_queries(dataset: &Dataset, spec: &QuerySpec) -> Result<QuerySet> {
    ensure!(spec.p >= 1, "p must be at least 1");
    ensure!(spec.k >= 1, "k must be at least 1");
    let [lo, hi] = spec.band;
    ensure!(
        (0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi) && lo <= hi,
        "band must satisfy 0 <= low <= high <= 1"
    );
    ensure!(
        spec.noise.is_finite() && spec.noise >= 0.0,
        "noise must be non-negative"
    );
    let column = column_for(dataset, spec)?;
    let idx = AttributeIndexes::build(dataset);
    let n = dataset.len();
    let d = dataset.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let gauss = Normal::new(0.0f64, spec.noise / (d as f64).sqrt()).expect("valid normal");

    let sorted: Vec<OrderedValue> = match (&column, spec.family) {
        (Some((c, _)), Family::R) => {
            let mut v: Vec<OrderedValue> = (0..n as u32)
                .map(|i| dataset.attributes(i)[*c].as_ordered().expect("ordered column"))
                .collect();
            v.sort();
            v
        }
        _ => Vec::new(),
    };

    let mut set = QuerySet {
        family: spec.family,
        seed: spec.seed,
        records: Vec::with_capacity(spec.p),
        queries: Vec::with_capacity(spec.p),
        selectivities: Vec::with_capacity(spec.p),
    };
    for qi in 0..spec.p {
        let base = rng.random_range(0..n as u32);
        let mut vector: Vec<f32> = dataset
            .vector(base)
            .iter()
            .map(|&x| (x as f64 + gauss.sample(&mut rng)) as f32)
            .collect();
        normalize(&mut vector);

        let mut chosen = None;
        for _ in 0..spec.max_attempts.max(1) {
            let filter = match (&column, spec.family) {
                (None, _) => None,
                (Some((c, name)), Family::Em) => {
                    let item = rng.random_range(0..n as u32);
                    let token = dataset.attributes(item)[*c].as_token().expect("unordered column");
                    Some(Filter::em(name, token))
                }
                (Some((c, name)), Family::Emis) => {
                    let item = rng.random_range(0..n as u32);
                    let tokens = dataset.attributes(item)[*c].as_set().expect("set column");
                    if tokens.is_empty() {
                        continue;
                    }
                    Some(Filter::emis(name, &tokens[rng.random_range(0..tokens.len())]))
                }
                (Some((_, name)), Family::R) => {
                    let target = if hi > lo { rng.random_range(lo..=hi) } else { lo };
                    let count = ((target * n as f64).round() as usize).clamp(spec.k.min(n), n).max(1);
                    if spec.half_bounded {
                        Some(Filter::at_most(name, sorted[count - 1]))
                    } else {
                        let start = rng.random_range(0..=n - count);
                        Some(Filter::range(name, sorted[start], sorted[start + count - 1]))
                    }
                }
                (Some(_), Family::None) => unreachable!("the none family has no column"),
            };
            let matched = match &filter {
                Some(f) => idx.matching_ids(f)?.len(),
                None => n,
            };
            let sel = matched as f64 / n as f64;
            if matched >= spec.k.min(n) && lo <= sel && sel <= hi {
                chosen = Some((filter, sel));
                break;
            }
        }
        let Some((filter, sel)) = chosen else {
            bail!(
                "query {qi}: no {} filter with selectivity in [{lo}, {hi}] after {} attempts",
                spec.family,
                spec.max_attempts
            );
        };
        let record = QueryRecord {
            vector_id: None,
            vector: Some(vector),
            k: spec.k,
            filter,
        };
        set.queries.push(record.resolve(dataset)?);
        set.records.push(record);
        set.selectivities.push(sel);
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::{gen_dataset, DatasetSpec};
    use fanns_core::selectivity;

    fn data() -> Dataset {
        gen_dataset(&DatasetSpec::standard(2000, 8, 3)).unwrap()
    }

    #[test]
    fn filters_fall_in_band() {
        let ds = data();
        for family in [Family::Em, Family::R, Family::Emis] {
            for half in [false, true] {
                let spec = QuerySpec {
                    family,
                    p: 40,
                    k: 10,
                    seed: 4,
                    band: [0.02, 0.3],
                    half_bounded: half,
                    ..QuerySpec::default()
                };
                let qs = gen_queries(&ds, &spec).unwrap();
                assert_eq!(qs.len(), 40);
                for (q, &s) in qs.queries.iter().zip(&qs.selectivities) {
                    let f = q.filter.as_ref().unwrap();
                    assert_eq!(Family::of(Some(f)), Some(family));
                    let real = selectivity(f, &ds).unwrap();
                    assert_eq!(real, s);
                    assert!((0.02..=0.3).contains(&real));
                    assert!(real * 2000.0 >= 10.0);
                    if family == Family::R && half {
                        assert!(matches!(f, Filter::Range(r) if r.is_half_bounded()));
                    }
                }
            }
        }
    }

    #[test]
    fn full_band_and_unfiltered() {
        let ds = data();
        let spec = QuerySpec {
            family: Family::R,
            p: 5,
            band: [1.0, 1.0],
            ..QuerySpec::default()
        };
        let qs = gen_queries(&ds, &spec).unwrap();
        assert!(qs.selectivities.iter().all(|&s| s == 1.0));
        let none = gen_queries(
            &ds,
            &QuerySpec {
                p: 5,
                ..QuerySpec::default()
            },
        )
        .unwrap();
        assert!(none.queries.iter().all(|q| q.filter.is_none()));
    }

    #[test]
    fn unreachable_band_fails() {
        let ds = data();
        let spec = QuerySpec {
            family: Family::Em,
            p: 1,
            band: [0.9, 1.0],
            max_attempts: 50,
            ..QuerySpec::default()
        };
        assert!(gen_queries(&ds, &spec).is_err());
        let wrong = QuerySpec {
            family: Family::Em,
            column: Some("year".into()),
            ..QuerySpec::default()
        };
        assert!(gen_queries(&ds, &wrong).is_err());
    }

    #[test]
    fn vectors_are_unit_and_seeded() {
        let ds = data();
        let spec = QuerySpec {
            family: Family::Emis,
            p: 20,
            ..QuerySpec::default()
        };
        let a = gen_queries(&ds, &spec).unwrap();
        let b = gen_queries(&ds, &spec).unwrap();
        assert_eq!(a.records, b.records);
        for q in &a.queries {
            let n: f64 = q
                .vector
                .as_slice()
                .iter()
                .map(|&x| (x as f64).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!((n - 1.0).abs() < 1e-6);
        }
        let s = a.sample(5, 9);
        assert_eq!(s.len(), 5);
        assert_eq!(s.records, a.sample(5, 9).records);
    }
}
