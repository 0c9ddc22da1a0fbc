//! Distance kernels. Coordinates are stored as `f32`; every kernel
//! accumulates in `f64` with a fixed summation order.

use crate::error::{Error, Result};

/// Squared Euclidean distance without length checks.
#[inline]
pub fn squared_euclidean(a: &[f32], b: &[f32]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = c * 4;
        for lane in 0..4 {
            let d = a[i + lane] as f64 - b[i + lane] as f64;
            acc[lane] += d * d;
        }
    }
    let mut tail = 0.0f64;
    for i in chunks * 4..a.len() {
        let d = a[i] as f64 - b[i] as f64;
        tail += d * d;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Euclidean distance without length checks; used on validated data.
#[inline]
pub fn l2(a: &[f32], b: &[f32]) -> f64 {
    squared_euclidean(a, b).sqrt()
}

/// Euclidean distance between `f32` and `f64` vectors (centroids).
#[inline]
pub fn l2_mixed(a: &[f32], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = x as f64 - y;
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

fn check_len(u: &[f32], v: &[f32]) -> Result<()> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            actual: v.len(),
        });
    }
    Ok(())
}

pub fn distance_euclidean(u: &[f32], v: &[f32]) -> Result<f64> {
    check_len(u, v)?;
    Ok(l2(u, v))
}

/// Cosine distance `1 - cos(u, v)`, in `[0, 2]`.
pub fn distance_cosine(u: &[f32], v: &[f32]) -> Result<f64> {
    check_len(u, v)?;
    let (mut dot, mut nu, mut nv) = (0.0f64, 0.0f64, 0.0f64);
    for (&a, &b) in u.iter().zip(v) {
        let (a, b) = (a as f64, b as f64);
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let cos = (dot / (nu.sqrt() * nv.sqrt())).clamp(-1.0, 1.0);
    Ok(1.0 - cos)
}

/// Scales `v` to unit length in place. Zero vectors are left unchanged.
pub fn normalize(v: &mut [f32]) {
    let norm = v.iter().map(|&x| (x as f64) * (x as f64)).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in v.iter_mut() {
            *x = (*x as f64 / norm) as f32;
        }
    }
}
