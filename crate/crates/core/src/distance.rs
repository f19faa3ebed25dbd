use crate::error::{Error, Result};

/// Dot product accumulated in `f64`.
#[inline]
pub fn dot_f64(u: &[f32], v: &[f32]) -> f64 {
    debug_assert_eq!(u.len(), v.len());
    // Four independent accumulators so the loop vectorizes without
    // reassociating a single running sum.
    let mut acc = [0.0f64; 4];
    let mut cu = u.chunks_exact(4);
    let mut cv = v.chunks_exact(4);
    for (a, b) in (&mut cu).zip(&mut cv) {
        for k in 0..4 {
            acc[k] += f64::from(a[k]) * f64::from(b[k]);
        }
    }
    let mut tail = 0.0;
    for (a, b) in cu.remainder().iter().zip(cv.remainder()) {
        tail += f64::from(*a) * f64::from(*b);
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
pub fn norm_f64(u: &[f32]) -> f64 {
    dot_f64(u, u).sqrt()
}

/// Cosine similarity `dot(u, v) / (|u| |v|)`, clamped to `[-1, 1]`.
pub fn cosine_similarity(u: &[f32], v: &[f32]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            found: v.len(),
        });
    }
    let nu = norm_f64(u);
    let nv = norm_f64(v);
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::DegenerateInput("cosine similarity of a zero-norm vector".into()));
    }
    Ok((dot_f64(u, v) / (nu * nv)).clamp(-1.0, 1.0))
}
