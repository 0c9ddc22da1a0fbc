use serde::{Deserialize, Serialize};

use super::kmeans::{train_flat, DEFAULT_ITERATIONS};
use crate::error::{invalid, Error, Result};
use crate::model::{EmbeddingVector, VectorMatrix};

/// Training settings for a product quantizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PqSpec {
    /// Number of subspaces.
    pub s: usize,
    /// Codewords per subspace (at most 256).
    pub c_sub: usize,
    pub iters: usize,
    pub seed: u64,
}

impl Default for PqSpec {
    fn default() -> Self {
        Self {
            s: 8,
            c_sub: 256,
            iters: DEFAULT_ITERATIONS,
            seed: 42,
        }
    }
}

/// Per-subspace codebooks; codes are one byte per subspace.
#[derive(Debug, Clone, PartialEq)]
pub struct PqCodebook {
    pub(crate) dim: usize,
    pub(crate) s: usize,
    pub(crate) c_sub: usize,
    pub(crate) seed: u64,
    /// `s × c_sub × (dim / s)` codeword coordinates.
    pub(crate) codewords: Vec<f32>,
}

/// Squared sub-distances from one query to every codeword.
#[derive(Debug, Clone, PartialEq)]
pub struct AdcTable {
    c_sub: usize,
    table: Vec<f64>,
}

impl PqCodebook {
    pub fn train(vectors: &VectorMatrix, spec: PqSpec) -> Result<Self> {
        let d = vectors.dim();
        if spec.s == 0 || !d.is_multiple_of(spec.s) {
            return Err(invalid(format!("{} subspaces do not divide dimension {d}", spec.s)));
        }
        if spec.c_sub == 0 || spec.c_sub > 256 {
            return Err(invalid("c_sub must lie in 1..=256"));
        }
        let sub = d / spec.s;
        let mut codewords = Vec::with_capacity(spec.s * spec.c_sub * sub);
        for j in 0..spec.s {
            let part: Vec<f32> = (0..vectors.len())
                .flat_map(|i| vectors.row(i)[j * sub..(j + 1) * sub].iter().copied())
                .collect();
            let model = train_flat(&part, sub, spec.c_sub, spec.iters, spec.seed.wrapping_add(j as u64))?;
            codewords.extend(model.centroids.iter().map(|&x| x as f32));
        }
        Ok(Self {
            dim: d,
            s: spec.s,
            c_sub: spec.c_sub,
            seed: spec.seed,
            codewords,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn subspaces(&self) -> usize {
        self.s
    }

    pub fn codewords_per_subspace(&self) -> usize {
        self.c_sub
    }

    pub fn sub_dim(&self) -> usize {
        self.dim / self.s
    }

    pub fn codeword(&self, subspace: usize, code: usize) -> &[f32] {
        let sub = self.sub_dim();
        let at = (subspace * self.c_sub + code) * sub;
        &self.codewords[at..at + sub]
    }

    fn check(&self, v: &[f32]) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: v.len(),
            });
        }
        Ok(())
    }

    /// Nearest codeword per subspace; ties go to the lower code.
    pub fn encode(&self, v: &[f32]) -> Result<Vec<u8>> {
        self.check(v)?;
        let mut out = Vec::with_capacity(self.s);
        self.encode_into(v, &mut out);
        Ok(out)
    }

    pub(crate) fn encode_into(&self, v: &[f32], out: &mut Vec<u8>) {
        let sub = self.sub_dim();
        for j in 0..self.s {
            let part = &v[j * sub..(j + 1) * sub];
            let mut best = (0usize, f64::INFINITY);
            for c in 0..self.c_sub {
                let d = crate::distance::squared_euclidean(part, self.codeword(j, c));
                if d < best.1 {
                    best = (c, d);
                }
            }
            out.push(best.0 as u8);
        }
    }

    pub fn decode(&self, code: &[u8]) -> Result<EmbeddingVector> {
        if code.len() != self.s || code.iter().any(|&c| c as usize >= self.c_sub) {
            return Err(invalid("code does not fit the codebook"));
        }
        let mut v = Vec::with_capacity(self.dim);
        for (j, &c) in code.iter().enumerate() {
            v.extend_from_slice(self.codeword(j, c as usize));
        }
        EmbeddingVector::new(v)
    }

    pub fn adc_table(&self, q: &[f32]) -> Result<AdcTable> {
        self.check(q)?;
        let sub = self.sub_dim();
        let mut table = Vec::with_capacity(self.s * self.c_sub);
        for j in 0..self.s {
            let part = &q[j * sub..(j + 1) * sub];
            for c in 0..self.c_sub {
                table.push(crate::distance::squared_euclidean(part, self.codeword(j, c)));
            }
        }
        Ok(AdcTable {
            c_sub: self.c_sub,
            table,
        })
    }
}

impl AdcTable {
    /// Approximate distance between the table's query and a code.
    #[inline]
    pub fn distance(&self, code: &[u8]) -> f64 {
        code.iter()
            .enumerate()
            .map(|(j, &c)| self.table[j * self.c_sub + c as usize])
            .sum::<f64>()
            .sqrt()
    }
}

pub fn pq_train(vectors: &VectorMatrix, s: usize, c_sub: usize, iters: usize, seed: u64) -> Result<PqCodebook> {
    PqCodebook::train(vectors, PqSpec { s, c_sub, iters, seed })
}

pub fn pq_encode(codebook: &PqCodebook, vector: &[f32]) -> Result<Vec<u8>> {
    codebook.encode(vector)
}

pub fn pq_decode(codebook: &PqCodebook, code: &[u8]) -> Result<EmbeddingVector> {
    codebook.decode(code)
}

pub fn adc_distance(table: &AdcTable, code: &[u8]) -> f64 {
    table.distance(code)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::distance::l2;

    fn random_matrix(n: usize, d: usize, seed: u64) -> VectorMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f32>> = (0..n)
            .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        VectorMatrix::from_rows(d, &rows).unwrap()
    }

    #[test]
    fn codeword_concatenation_round_trips() {
        let cb = pq_train(&random_matrix(300, 8, 1), 4, 16, 10, 2).unwrap();
        let code = vec![3u8, 0, 15, 7];
        let v = cb.decode(&code).unwrap();
        assert_eq!(cb.encode(v.as_slice()).unwrap(), code);
        assert_eq!(cb.decode(&cb.encode(v.as_slice()).unwrap()).unwrap(), v);
    }

    #[test]
    fn enough_codewords_is_lossless() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let palette: Vec<[f32; 2]> = (0..5).map(|_| [rng.random(), rng.random()]).collect();
        let rows: Vec<Vec<f32>> = (0..100)
            .map(|i| {
                let (a, b) = (palette[i % 5], palette[(i / 5) % 5]);
                vec![a[0], a[1], b[0], b[1]]
            })
            .collect();
        let m = VectorMatrix::from_rows(4, &rows).unwrap();
        let cb = pq_train(&m, 2, 5, 25, 4).unwrap();
        for r in &rows {
            assert_eq!(cb.decode(&cb.encode(r).unwrap()).unwrap().as_slice(), &r[..]);
        }
    }

    #[test]
    fn bad_shapes() {
        let m = random_matrix(50, 6, 5);
        assert!(pq_train(&m, 4, 8, 5, 0).is_err());
        assert!(pq_train(&m, 3, 300, 5, 0).is_err());
        let cb = pq_train(&m, 3, 8, 5, 0).unwrap();
        assert!(cb.encode(&[0.0; 5]).is_err());
        assert!(cb.decode(&[0, 1]).is_err());
        assert!(cb.decode(&[0, 1, 9]).is_err());
    }

    #[test]
    fn quantization_error_bounded_by_cell_radius() {
        let m = random_matrix(400, 8, 6);
        let cb = pq_train(&m, 4, 16, 25, 7).unwrap();
        let sub = cb.sub_dim();
        let mut radius = vec![vec![0.0f64; 16]; 4];
        let codes: Vec<Vec<u8>> = (0..m.len()).map(|i| cb.encode(m.row(i)).unwrap()).collect();
        for (i, code) in codes.iter().enumerate() {
            for j in 0..4 {
                let c = code[j] as usize;
                let d = l2(&m.row(i)[j * sub..(j + 1) * sub], cb.codeword(j, c));
                radius[j][c] = radius[j][c].max(d);
            }
        }
        let bound = radius
            .iter()
            .map(|r| r.iter().map(|x| x * x).sum::<f64>())
            .fold(0.0, f64::max);
        let per_item_bound = |code: &[u8]| {
            code.iter()
                .enumerate()
                .map(|(j, &c)| radius[j][c as usize].powi(2))
                .sum::<f64>()
                .sqrt()
        };
        for (i, code) in codes.iter().enumerate() {
            let err = l2(m.row(i), cb.decode(code).unwrap().as_slice());
            assert!(err <= per_item_bound(code) + 1e-9);
            assert!(err * err <= bound + 1e-9);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn adc_equals_decode_then_distance(seed in 0u64..1000, code in proptest::collection::vec(0u8..16, 4)) {
            let m = random_matrix(64, 8, seed);
            let cb = pq_train(&m, 4, 16, 5, seed).unwrap();
            let q = m.row((seed % 64) as usize);
            let table = cb.adc_table(q).unwrap();
            let direct = l2(q, cb.decode(&code).unwrap().as_slice());
            let adc = adc_distance(&table, &code);
            prop_assert!((adc - direct).abs() <= 1e-5 * direct.max(1e-12));
            prop_assert_eq!(adc, table.distance(&code));
        }
    }

    #[test]
    fn code_of_query_itself_is_zero() {
        let m = random_matrix(100, 4, 8);
        let cb = pq_train(&m, 2, 8, 5, 9).unwrap();
        let v = cb.decode(&[2, 5]).unwrap();
        let t = cb.adc_table(v.as_slice()).unwrap();
        assert_eq!(t.distance(&[2, 5]), 0.0);
    }
}
