use serde::{Deserialize, Serialize};

use super::ivf::IvfIndex;
use crate::distance::l2;
use crate::error::{invalid, Result};
use crate::oracle::{KnnResult, Neighbor, TopK};
use crate::predicate::IdBitmap;

/// Exact re-scoring of ADC candidates against the raw vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rerank {
    /// Return ADC distances as-is.
    #[default]
    None,
    /// Re-score the best `n` ADC candidates (at least `k`).
    Top(usize),
    /// Score every candidate exactly.
    All,
}

/// Which scan answered a query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RiiBranch {
    /// Linear scan over the matching ids' codes.
    Pre,
    /// Probe of the nearest clusters, skipping non-matching ids.
    In,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RiiParams {
    /// Clusters probed by the in-filter branch.
    pub w: usize,
    /// Selectivity below which the pre-filter branch runs; `None` means
    /// `1 / c`.
    pub threshold: Option<f64>,
    pub rerank: Rerank,
    /// Overrides the selectivity switch.
    pub force: Option<RiiBranch>,
}

impl Default for RiiParams {
    fn default() -> Self {
        Self {
            w: 8,
            threshold: None,
            rerank: Rerank::None,
            force: None,
        }
    }
}

/// A matching set held both as a sorted id list and as a bitmap.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matching {
    ids: Vec<u32>,
    bitmap: IdBitmap,
}

impl Matching {
    /// Sorts and dedups `ids`; ids `>= n` are rejected.
    pub fn from_ids(n: usize, mut ids: Vec<u32>) -> Result<Self> {
        ids.sort_unstable();
        ids.dedup();
        if ids.last().is_some_and(|&id| id as usize >= n) {
            return Err(invalid("matching id outside the dataset"));
        }
        let bitmap = IdBitmap::from_ids(n, &ids);
        Ok(Self { ids, bitmap })
    }

    pub fn from_bitmap(bitmap: IdBitmap) -> Self {
        Self {
            ids: bitmap.iter().collect(),
            bitmap,
        }
    }

    pub fn ids(&self) -> &[u32] {
        &self.ids
    }

    pub fn bitmap(&self) -> &IdBitmap {
        &self.bitmap
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// The branch the selectivity switch picks for `matching`.
pub fn rii_branch(index: &IvfIndex, matching: &Matching, params: &RiiParams) -> RiiBranch {
    if let Some(b) = params.force {
        return b;
    }
    let threshold = params.threshold.unwrap_or(1.0 / index.clusters() as f64);
    if (matching.len() as f64) < threshold * index.len() as f64 {
        RiiBranch::Pre
    } else {
        RiiBranch::In
    }
}

/// Filtered top-k over PQ codes. Every result id is in `matching`.
pub fn rii_query(
    index: &IvfIndex,
    q: &[f32],
    k: usize,
    matching: &Matching,
    params: &RiiParams,
) -> Result<(KnnResult, RiiBranch)> {
    index.check_query(q, k, params.w)?;
    if matching.bitmap.universe() != index.len() {
        return Err(invalid("matching set built for a different dataset size"));
    }
    let table = index.adc_table(q)?;
    let branch = rii_branch(index, matching, params);
    if matching.is_empty() {
        return Ok((KnnResult::empty(), branch));
    }
    let keep = match params.rerank {
        Rerank::None => k,
        Rerank::Top(n) => n.max(k),
        Rerank::All => usize::MAX,
    };
    let s = index.codebook().map_or(0, |p| p.subspaces());
    let score = |id: u32| -> Neighbor {
        if params.rerank == Rerank::All {
            Neighbor::new(id, l2(q, index.vectors.row(id as usize)))
        } else {
            Neighbor::new(id, table.distance(&index.codes[id as usize * s..(id as usize + 1) * s]))
        }
    };
    let mut top = TopK::new(keep.min(index.len()));
    match branch {
        RiiBranch::Pre => {
            for &id in &matching.ids {
                top.push(score(id));
            }
        }
        RiiBranch::In => {
            for c in index.probe(q, params.w) {
                for &id in index.list(c) {
                    if matching.bitmap.contains(id) {
                        top.push(score(id));
                    }
                }
            }
        }
    }
    let candidates = top.into_result();
    let out = match params.rerank {
        Rerank::Top(_) => KnnResult::from_unsorted(
            candidates
                .entries
                .iter()
                .map(|n| Neighbor::new(n.id, l2(q, index.vectors.row(n.id as usize))))
                .collect(),
            k,
        ),
        _ => KnnResult::from_unsorted(candidates.entries, k),
    };
    Ok((out, branch))
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::filter::Query;
    use crate::oracle::exact_filtered_knn;
    use crate::quant::ivf::build_ivf;
    use crate::quant::pq::PqSpec;
    use crate::testutil::{random_dataset, random_filter, random_vector};
    use crate::Dataset;

    fn index(ds: &Dataset) -> IvfIndex {
        build_ivf(
            ds,
            8,
            25,
            1,
            Some(PqSpec {
                s: 4,
                c_sub: 32,
                iters: 15,
                seed: 2,
            }),
        )
        .unwrap()
    }

    fn matching(ds: &Dataset, q: &Query) -> Matching {
        let f = q.validate(ds).unwrap().unwrap();
        Matching::from_bitmap(IdBitmap::from_filter(ds, &f))
    }

    #[test]
    fn forced_pre_with_full_rerank_is_exact() {
        let ds = random_dataset(1000, 8, 3);
        let ivf = index(&ds);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = RiiParams {
            w: 1,
            threshold: Some(1.0),
            rerank: Rerank::All,
            force: Some(RiiBranch::Pre),
        };
        for _ in 0..30 {
            let q = Query::new(random_vector(&mut rng, 8), 10, Some(random_filter(&mut rng))).unwrap();
            let (got, branch) = rii_query(&ivf, q.vector.as_slice(), 10, &matching(&ds, &q), &p).unwrap();
            assert_eq!(branch, RiiBranch::Pre);
            assert_eq!(got, exact_filtered_knn(&ds, &q).unwrap());
        }
    }

    #[test]
    fn branches_agree_at_full_probe() {
        let ds = random_dataset(1000, 8, 5);
        let ivf = index(&ds);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..30 {
            let q = Query::new(random_vector(&mut rng, 8), 10, Some(random_filter(&mut rng))).unwrap();
            let m = matching(&ds, &q);
            let run = |b| {
                let p = RiiParams {
                    w: 8,
                    threshold: None,
                    rerank: Rerank::All,
                    force: Some(b),
                };
                rii_query(&ivf, q.vector.as_slice(), 10, &m, &p).unwrap().0
            };
            assert_eq!(run(RiiBranch::Pre), run(RiiBranch::In));
        }
    }

    #[test]
    fn default_switch_and_empty_set() {
        let ds = random_dataset(800, 8, 7);
        let ivf = index(&ds);
        let p = RiiParams::default();
        let few = Matching::from_ids(800, (0..99).collect()).unwrap();
        let many = Matching::from_ids(800, (0..100).collect()).unwrap();
        assert_eq!(rii_branch(&ivf, &few, &p), RiiBranch::Pre);
        assert_eq!(rii_branch(&ivf, &many, &p), RiiBranch::In);
        let none = Matching::from_ids(800, vec![]).unwrap();
        assert!(rii_query(&ivf, &[0.0; 8], 10, &none, &p).unwrap().0.is_empty());
        assert!(Matching::from_ids(800, vec![800]).is_err());
        let plain = build_ivf(&ds, 8, 5, 1, None).unwrap();
        assert!(rii_query(&plain, &[0.0; 8], 10, &few, &p).is_err());
    }

    #[test]
    fn partial_rerank_uses_exact_distances() {
        let ds = random_dataset(500, 8, 8);
        let ivf = index(&ds);
        let m = Matching::from_ids(500, (0..500).step_by(3).collect()).unwrap();
        let q = vec![0.1f32; 8];
        let p = RiiParams {
            w: 8,
            rerank: Rerank::Top(50),
            ..RiiParams::default()
        };
        let (got, _) = rii_query(&ivf, &q, 10, &m, &p).unwrap();
        for n in &got.entries {
            assert_eq!(n.distance, l2(&q, ds.vector(n.id)));
        }
        assert!(got.is_strictly_sorted());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn results_stay_in_matching_set(seed in 0u64..500, w in 1usize..=8, pre in any::<bool>()) {
            let ds = random_dataset(300, 8, 9);
            let ivf = index(&ds);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let q = Query::new(random_vector(&mut rng, 8), 10, Some(random_filter(&mut rng))).unwrap();
            let m = matching(&ds, &q);
            let force = Some(if pre { RiiBranch::Pre } else { RiiBranch::In });
            let p = RiiParams { w, threshold: None, rerank: Rerank::None, force };
            let (got, _) = rii_query(&ivf, q.vector.as_slice(), 10, &m, &p).unwrap();
            for n in &got.entries {
                prop_assert!(m.bitmap().contains(n.id));
            }
        }
    }
}
