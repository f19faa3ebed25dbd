//! PCA binarizer: center, project onto the top principal axes, take the sign.
//!
//! The principal axes are the leading left singular vectors of the centered
//! data matrix. When there are more samples than dimensions they are computed
//! as eigenvectors of the `L x L` scatter matrix `Hᵀ H`; otherwise from the
//! `N x N` Gram matrix `H Hᵀ`, mapping each eigenvector `v` back through
//! `u = Hᵀ v / sqrt(λ)`. Both routes give the same axes and eigenvalues.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::Binarizer;
use crate::codes::set_bit;
use crate::error::{Error, Result};
use crate::{BinaryCodeSet, EmbeddingMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub input_dim: usize,
    pub bits: usize,
    /// Training-set mean, length `input_dim`.
    pub mean: Vec<f64>,
    /// Row-major `bits x input_dim`; row `i` is the `i`-th principal axis.
    pub components: Vec<f64>,
    /// Scatter (unnormalized variance) captured by each axis, descending.
    pub eigenvalues: Vec<f64>,
}

impl PcaModel {
    pub fn component(&self, i: usize) -> &[f64] {
        &self.components[i * self.input_dim..(i + 1) * self.input_dim]
    }

    /// `W (h - mean)`.
    pub fn project(&self, h: &[f32]) -> Vec<f64> {
        let centered: Vec<f64> = h.iter().zip(&self.mean).map(|(&x, m)| f64::from(x) - m).collect();
        (0..self.bits).map(|i| dot(self.component(i), &centered)).collect()
    }

    /// `Wᵀ W (h - mean) + mean`.
    pub fn reconstruct(&self, h: &[f32]) -> Vec<f64> {
        let coords = self.project(h);
        let mut out = self.mean.clone();
        for (i, c) in coords.iter().enumerate() {
            for (o, w) in out.iter_mut().zip(self.component(i)) {
                *o += c * w;
            }
        }
        out
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn pca_fit(h: &EmbeddingMatrix, bits: usize) -> Result<PcaModel> {
    let (n, l) = (h.rows(), h.dim());
    if n < 2 {
        return Err(Error::InvalidArgument(format!("PCA needs at least two rows, got {n}")));
    }
    if bits == 0 {
        return Err(Error::InvalidArgument("PCA needs at least one component".into()));
    }
    if bits > l.min(n) {
        return Err(Error::Rank {
            requested: bits,
            max: l.min(n),
        });
    }

    let mut mean = vec![0.0f64; l];
    for row in h.iter_rows() {
        for (m, &x) in mean.iter_mut().zip(row) {
            *m += f64::from(x);
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);

    let centered = DMatrix::from_fn(n, l, |i, j| f64::from(h.row(i)[j]) - mean[j]);
    let total: f64 = centered.iter().map(|v| v * v).sum();
    if total == 0.0 {
        return Err(Error::DegenerateInput("PCA input has zero variance".into()));
    }

    let (eigenvalues, mut components) = if n > l {
        let scatter = centered.tr_mul(&centered);
        let (values, vectors) = sorted_eigen(scatter);
        let mut comps = Vec::with_capacity(bits * l);
        for i in 0..bits {
            comps.extend(vectors.column(i).iter());
        }
        (values[..bits].to_vec(), comps)
    } else {
        let gram = &centered * centered.transpose();
        let (values, vectors) = sorted_eigen(gram);
        // Eigenvalues below this are numerically zero; their axes are
        // undefined through the Gram route.
        let floor = values[0] * (n as f64) * f64::EPSILON * 16.0;
        let rank = values.iter().take_while(|&&v| v > floor).count();
        if bits > rank {
            return Err(Error::Rank {
                requested: bits,
                max: rank,
            });
        }
        let mut comps = Vec::with_capacity(bits * l);
        for (i, value) in values.iter().take(bits).enumerate() {
            let axis = centered.tr_mul(&vectors.column(i).into_owned()) / value.sqrt();
            comps.extend(axis.iter());
        }
        (values[..bits].to_vec(), comps)
    };

    for axis in components.chunks_exact_mut(l) {
        fix_sign(axis);
    }

    Ok(PcaModel {
        input_dim: l,
        bits,
        mean,
        components,
        eigenvalues: eigenvalues.into_iter().map(|v| v.max(0.0)).collect(),
    })
}

/// Eigen-decomposition with eigenvalues sorted in descending order; columns
/// of the returned matrix follow the same order.
fn sorted_eigen(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |r, c| {
        eig.eigenvectors[(r, order[c])]
    });
    (values, vectors)
}

/// Flips `axis` so its largest-magnitude entry is positive (first one wins
/// on ties).
fn fix_sign(axis: &mut [f64]) {
    let mut best = 0;
    for (i, v) in axis.iter().enumerate() {
        if v.abs() > axis[best].abs() {
            best = i;
        }
    }
    if axis[best] < 0.0 {
        axis.iter_mut().for_each(|v| *v = -*v);
    }
}

/// Bit `i` is set iff `(W (h - mean))[i] > 0`.
pub fn pca_binarize(model: &PcaModel, h: &EmbeddingMatrix) -> Result<BinaryCodeSet> {
    h.check_dim(model.input_dim)?;
    BinaryCodeSet::build_rows(h.rows(), model.bits, |r, out| {
        for (i, v) in model.project(h.row(r)).into_iter().enumerate() {
            if v > 0.0 {
                set_bit(out, i);
            }
        }
    })
}

impl Binarizer for PcaModel {
    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn bits(&self) -> usize {
        self.bits
    }

    fn binarize(&self, h: &EmbeddingMatrix) -> Result<BinaryCodeSet> {
        pca_binarize(self, h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::SeededRng;
    use proptest::prelude::*;
    use rand_distr::{Distribution, StandardNormal};

    fn line() -> EmbeddingMatrix {
        EmbeddingMatrix::from_rows(&[[1.0, 1.0], [2.0, 2.0], [-1.0, -1.0], [-2.0, -2.0]]).unwrap()
    }

    fn gaussian(n: usize, l: usize, seed: u64, scales: &[f64]) -> EmbeddingMatrix {
        let mut rng = SeededRng::new(seed);
        let data = (0..n * l)
            .map(|k| {
                let z: f64 = StandardNormal.sample(&mut rng);
                (z * scales[k % l]) as f32
            })
            .collect();
        EmbeddingMatrix::new(n, l, data).unwrap()
    }

    #[test]
    fn line_axis_and_codes() {
        let m = pca_fit(&line(), 1).unwrap();
        let s = 1.0 / 2f64.sqrt();
        assert!((m.component(0)[0] - s).abs() < 1e-12);
        assert!((m.component(0)[1] - s).abs() < 1e-12);
        let codes = pca_binarize(&m, &line()).unwrap();
        let bits: Vec<bool> = (0..4).map(|i| codes.bit(i, 0)).collect();
        assert_eq!(bits, vec![true, true, false, false]);
    }

    #[test]
    fn errors() {
        assert!(matches!(pca_fit(&line(), 3), Err(Error::Rank { requested: 3, max: 2 })));
        let one = EmbeddingMatrix::from_rows(&[[1.0, 2.0]]).unwrap();
        assert!(matches!(pca_fit(&one, 1), Err(Error::InvalidArgument(_))));
        let flat = EmbeddingMatrix::from_rows(&[[1.0, 2.0], [1.0, 2.0], [1.0, 2.0]]).unwrap();
        assert!(matches!(pca_fit(&flat, 1), Err(Error::DegenerateInput(_))));
        let m = pca_fit(&line(), 1).unwrap();
        let wrong = EmbeddingMatrix::from_rows(&[[1.0, 2.0, 3.0]]).unwrap();
        assert!(matches!(pca_binarize(&m, &wrong), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn gram_route_rank_deficient() {
        // Three points span a 2-d affine subspace of R^5, so only two
        // centered components exist.
        let h = EmbeddingMatrix::from_rows(&[
            [1.0, 0.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0, 0.0],
        ])
        .unwrap();
        assert!(pca_fit(&h, 2).is_ok());
        assert!(matches!(pca_fit(&h, 3), Err(Error::Rank { .. })));
    }

    #[test]
    fn both_routes_agree() {
        // Same data fitted through the scatter route (n > l) and, after
        // dropping to n <= l rows, through the Gram route.
        let wide = gaussian(12, 12, 5, &[3.0, 2.5, 2.0, 1.5, 1.2, 1.0, 0.9, 0.8, 0.7, 0.6, 0.5, 0.4]);
        let gram = pca_fit(&wide, 4).unwrap();
        let mut rows: Vec<Vec<f32>> = wide.iter_rows().map(|r| r.to_vec()).collect();
        rows.push(gram.mean.iter().map(|&m| m as f32).collect());
        // Appending the mean as an extra row leaves both the mean and the
        // centered scatter unchanged but forces n > l.
        let tall = EmbeddingMatrix::from_rows(&rows).unwrap();
        let scatter = pca_fit(&tall, 4).unwrap();
        for i in 0..4 {
            let c: f64 = dot(gram.component(i), scatter.component(i));
            assert!(c > 0.999, "axis {i} cos {c}");
        }
    }

    #[test]
    fn fit_set_bits_straddle_zero() {
        let h = gaussian(400, 6, 11, &[1.0; 6]);
        let m = pca_fit(&h, 6).unwrap();
        let codes = pca_binarize(&m, &h).unwrap();
        for j in 0..6 {
            let f = codes.bit_frequency(j);
            assert!(f > 0.0 && f < 1.0);
        }
    }

    #[test]
    fn shift_invariance_after_refit() {
        let h = gaussian(50, 4, 2, &[2.0, 1.0, 0.5, 0.25]);
        let shifted: Vec<Vec<f32>> = h
            .iter_rows()
            .map(|r| r.iter().zip([3.0, -1.0, 0.5, 8.0]).map(|(a, b)| a + b).collect())
            .collect();
        let shifted = EmbeddingMatrix::from_rows(&shifted).unwrap();
        let a = pca_binarize(&pca_fit(&h, 3).unwrap(), &h).unwrap();
        let b = pca_binarize(&pca_fit(&shifted, 3).unwrap(), &shifted).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn isotropic_eigenvalues_close() {
        let h = gaussian(100_000, 8, 13, &[1.0; 8]);
        let m = pca_fit(&h, 8).unwrap();
        let (hi, lo) = (m.eigenvalues[0], m.eigenvalues[7]);
        assert!((hi - lo) / hi < 0.05, "{:?}", m.eigenvalues);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn orthonormal_and_descending(seed in any::<u64>(), n in 3usize..40, l in 2usize..10) {
            let h = gaussian(n, l, seed, &[1.0, 2.0, 0.5, 3.0, 1.5, 0.7, 2.2, 0.9, 1.1, 0.3]);
            let d = l.min(n - 1);
            let m = pca_fit(&h, d).unwrap();
            for i in 0..d {
                for j in 0..d {
                    let c = dot(m.component(i), m.component(j));
                    let want = if i == j { 1.0 } else { 0.0 };
                    prop_assert!((c - want).abs() < 1e-5, "W{i}.W{j} = {c}");
                }
            }
            for w in m.eigenvalues.windows(2) {
                prop_assert!(w[0] >= w[1]);
            }
        }

        #[test]
        fn reconstruction_error_monotone(seed in any::<u64>(), n in 8usize..30) {
            let l = 6;
            let h = gaussian(n, l, seed, &[3.0, 2.0, 1.5, 1.0, 0.5, 0.2]);
            let mut prev = vec![f64::INFINITY; n];
            for d in 1..=l {
                let m = pca_fit(&h, d).unwrap();
                for (r, p) in prev.iter_mut().enumerate() {
                    let rec = m.reconstruct(h.row(r));
                    let err: f64 = rec
                        .iter()
                        .zip(h.row(r))
                        .map(|(a, &b)| (a - f64::from(b)).powi(2))
                        .sum();
                    prop_assert!(err <= *p + 1e-9, "row {r} d {d}: {err} > {p}");
                    *p = err;
                }
            }
        }
    }
}
