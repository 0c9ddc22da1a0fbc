use rayon::prelude::*;

use super::kmeans::{kmeans_train, KMeansModel};
use super::pq::{AdcTable, PqCodebook, PqSpec};
use crate::distance::l2;
use crate::error::{invalid, Error, Result};
use crate::model::{Dataset, VectorMatrix};
use crate::oracle::{KnnResult, Neighbor, TopK};
use crate::predicate::Predicate;

/// Inverted file over a k-means partition, with optional PQ codes.
#[derive(Debug, Clone)]
pub struct IvfIndex {
    pub(crate) model: KMeansModel,
    pub(crate) lists: Vec<Vec<u32>>,
    pub(crate) assignments: Vec<u32>,
    pub(crate) vectors: VectorMatrix,
    pub(crate) pq: Option<PqCodebook>,
    /// `n × s` bytes, item `i` at `i*s..(i+1)*s`.
    pub(crate) codes: Vec<u8>,
}

impl IvfIndex {
    pub fn build(dataset: &Dataset, c: usize, iters: usize, seed: u64, pq: Option<PqSpec>) -> Result<Self> {
        if dataset.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let vectors = dataset.vectors().clone();
        let model = kmeans_train(&vectors, c, iters, seed)?;
        let assignments: Vec<u32> = (0..vectors.len())
            .into_par_iter()
            .map(|i| model.nearest(vectors.row(i)).0 as u32)
            .collect();
        let mut lists = vec![Vec::new(); model.len()];
        for (i, &a) in assignments.iter().enumerate() {
            lists[a as usize].push(i as u32);
        }
        let (pq, codes) = match pq {
            Some(spec) => {
                let cb = PqCodebook::train(&vectors, spec)?;
                let s = cb.subspaces();
                let codes: Vec<u8> = (0..vectors.len())
                    .into_par_iter()
                    .flat_map_iter(|i| {
                        let mut out = Vec::with_capacity(s);
                        cb.encode_into(vectors.row(i), &mut out);
                        out
                    })
                    .collect();
                (Some(cb), codes)
            }
            None => (None, Vec::new()),
        };
        Ok(Self {
            model,
            lists,
            assignments,
            vectors,
            pq,
            codes,
        })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors.dim()
    }

    /// Number of clusters.
    pub fn clusters(&self) -> usize {
        self.lists.len()
    }

    pub fn model(&self) -> &KMeansModel {
        &self.model
    }

    /// Sorted member ids of one cluster.
    pub fn list(&self, cluster: usize) -> &[u32] {
        &self.lists[cluster]
    }

    pub fn assignment(&self, id: u32) -> usize {
        self.assignments[id as usize] as usize
    }

    pub fn codebook(&self) -> Option<&PqCodebook> {
        self.pq.as_ref()
    }

    pub fn code(&self, id: u32) -> Option<&[u8]> {
        let s = self.pq.as_ref()?.subspaces();
        Some(&self.codes[id as usize * s..(id as usize + 1) * s])
    }

    pub fn index_bytes(&self) -> usize {
        self.model.centroids.len() * 8
            + self.assignments.len() * 8
            + self.codes.len()
            + self.pq.as_ref().map_or(0, |p| p.codewords.len() * 4)
    }

    pub(crate) fn check_query(&self, q: &[f32], k: usize, w: usize) -> Result<()> {
        if q.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: q.len(),
            });
        }
        if k == 0 {
            return Err(invalid("k must be at least 1"));
        }
        if w == 0 || w > self.clusters() {
            return Err(invalid(format!("w = {w} outside 1..={}", self.clusters())));
        }
        Ok(())
    }

    /// The `w` clusters nearest to `q`.
    pub fn probe(&self, q: &[f32], w: usize) -> Vec<usize> {
        let mut ranked = self.model.ranked(q);
        ranked.truncate(w);
        ranked
    }

    pub(crate) fn adc_table(&self, q: &[f32]) -> Result<AdcTable> {
        self.pq
            .as_ref()
            .ok_or_else(|| invalid("index was built without product quantization"))?
            .adc_table(q)
    }

    /// Exact top-k over members of the `w` nearest clusters passing `pred`.
    pub fn search_filtered<P: Predicate + ?Sized>(&self, q: &[f32], k: usize, w: usize, pred: &P) -> Result<KnnResult> {
        self.check_query(q, k, w)?;
        if pred.known_empty() {
            return Ok(KnnResult::empty());
        }
        let mut top = TopK::new(k);
        for c in self.probe(q, w) {
            for &id in &self.lists[c] {
                if pred.matches(id) {
                    top.push(Neighbor::new(id, l2(q, self.vectors.row(id as usize))));
                }
            }
        }
        Ok(top.into_result())
    }

    pub fn search(&self, q: &[f32], k: usize, w: usize) -> Result<KnnResult> {
        self.search_filtered(q, k, w, &crate::predicate::MatchAll)
    }

    /// Like [`search_filtered`](Self::search_filtered) but scored with ADC
    /// over the PQ codes.
    pub fn search_adc<P: Predicate + ?Sized>(&self, q: &[f32], k: usize, w: usize, pred: &P) -> Result<KnnResult> {
        self.check_query(q, k, w)?;
        let table = self.adc_table(q)?;
        if pred.known_empty() {
            return Ok(KnnResult::empty());
        }
        let s = self.pq.as_ref().map_or(0, |p| p.subspaces());
        let mut top = TopK::new(k);
        for c in self.probe(q, w) {
            for &id in &self.lists[c] {
                if pred.matches(id) {
                    let code = &self.codes[id as usize * s..(id as usize + 1) * s];
                    top.push(Neighbor::new(id, table.distance(code)));
                }
            }
        }
        Ok(top.into_result())
    }
}

pub fn build_ivf(dataset: &Dataset, c: usize, iters: usize, seed: u64, with_pq: Option<PqSpec>) -> Result<IvfIndex> {
    IvfIndex::build(dataset, c, iters, seed, with_pq)
}

/// Exact top-k over the members of the `w` nearest clusters.
pub fn ivf_query(index: &IvfIndex, q: &[f32], k: usize, w: usize) -> Result<KnnResult> {
    index.search(q, k, w)
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::oracle::exact_knn_compiled;
    use crate::testutil::{random_dataset, random_vector};

    #[test]
    fn single_cluster_holds_everything() {
        let ds = random_dataset(50, 4, 1);
        let ivf = build_ivf(&ds, 1, 10, 2, None).unwrap();
        assert_eq!(ivf.list(0), (0..50).collect::<Vec<u32>>().as_slice());
    }

    #[test]
    fn assignments_are_argmin_and_partition() {
        let ds = random_dataset(500, 6, 3);
        let ivf = build_ivf(&ds, 16, 25, 4, None).unwrap();
        let mut seen = vec![0; 500];
        for c in 0..ivf.clusters() {
            assert!(ivf.list(c).windows(2).all(|w| w[0] < w[1]));
            for &id in ivf.list(c) {
                seen[id as usize] += 1;
                assert_eq!(ivf.assignment(id), c);
                let v = ds.vector(id);
                let mine = l2(
                    v,
                    &ivf.model().centroid(c).iter().map(|&x| x as f32).collect::<Vec<_>>(),
                );
                for o in 0..ivf.clusters() {
                    let other = l2(
                        v,
                        &ivf.model().centroid(o).iter().map(|&x| x as f32).collect::<Vec<_>>(),
                    );
                    assert!(mine <= other + 1e-6);
                }
            }
        }
        assert!(seen.iter().all(|&s| s == 1));
    }

    #[test]
    fn full_probe_is_exact() {
        let ds = random_dataset(400, 8, 5);
        let ivf = build_ivf(&ds, 10, 25, 6, None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let q = random_vector(&mut rng, 8);
            assert_eq!(
                ivf_query(&ivf, &q, 10, 10).unwrap(),
                exact_knn_compiled(&ds, &q, 10, None)
            );
        }
        assert_eq!(ivf_query(&ivf, &[0.0; 8], 1000, 10).unwrap().len(), 400);
        assert!(ivf_query(&ivf, &[0.0; 8], 10, 0).is_err());
        assert!(ivf_query(&ivf, &[0.0; 8], 10, 11).is_err());
        assert!(ivf_query(&ivf, &[0.0; 7], 10, 1).is_err());
    }

    #[test]
    fn one_probe_stays_in_blob() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let base = random_dataset(300, 2, 9);
        let rows: Vec<Vec<f32>> = (0..300)
            .map(|i| {
                let off = (i % 3) as f32 * 100.0;
                vec![off + rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]
            })
            .collect();
        let ds = Dataset::from_parts(
            base.schema().clone(),
            VectorMatrix::from_rows(2, &rows).unwrap(),
            (0..300).map(|i| base.attributes(i).to_vec()).collect(),
        )
        .unwrap();
        let ivf = build_ivf(&ds, 3, 25, 10, None).unwrap();
        let q = [100.3f32, 0.1];
        let blob: Vec<u32> = (0..300).filter(|i| i % 3 == 1).collect();
        let want = crate::oracle::exact_knn_over(&ds, &q, 5, &blob);
        assert_eq!(ivf_query(&ivf, &q, 5, 1).unwrap(), want);
    }

    #[test]
    fn codes_are_contiguous_and_adc_needs_pq() {
        let ds = random_dataset(200, 8, 11);
        let spec = PqSpec {
            s: 4,
            c_sub: 16,
            iters: 10,
            seed: 1,
        };
        let ivf = build_ivf(&ds, 4, 10, 12, Some(spec)).unwrap();
        assert_eq!(ivf.codes.len(), 200 * 4);
        for id in [0u32, 57, 199] {
            assert_eq!(
                ivf.code(id).unwrap(),
                ivf.codebook().unwrap().encode(ds.vector(id)).unwrap()
            );
        }
        let plain = build_ivf(&ds, 4, 10, 12, None).unwrap();
        assert!(plain.search_adc(&[0.0; 8], 5, 4, &crate::predicate::MatchAll).is_err());
        let r = ivf.search_adc(&[0.0; 8], 5, 4, &crate::predicate::MatchAll).unwrap();
        assert_eq!(r.len(), 5);
    }
}
