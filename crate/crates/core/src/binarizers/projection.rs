use rand::distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use super::Binarizer;
use crate::codes::set_bit;
use crate::distance::dot_f64;
use crate::error::{Error, Result};
use crate::{BinaryCodeSet, EmbeddingMatrix, SeededRng};

/// `bits x input_dim` random matrix with i.i.d. entries in `±1/sqrt(bits)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomProjectionModel {
    pub input_dim: usize,
    pub bits: usize,
    pub seed: u64,
    /// Row-major, one row per output bit.
    pub weights: Vec<f32>,
}

impl RandomProjectionModel {
    /// Half-width of the uniform initialization interval.
    pub fn bound(&self) -> f64 {
        init_bound(self.bits)
    }

    pub fn weight_row(&self, i: usize) -> &[f32] {
        &self.weights[i * self.input_dim..(i + 1) * self.input_dim]
    }

    /// `W h` in `f64`.
    pub fn project(&self, h: &[f32]) -> Vec<f64> {
        (0..self.bits).map(|i| dot_f64(self.weight_row(i), h)).collect()
    }
}

pub(crate) fn init_bound(fan: usize) -> f64 {
    1.0 / (fan as f64).sqrt()
}

/// Fills a `rows x cols` buffer with samples from `Uniform(-bound, bound)`.
pub(crate) fn uniform_matrix(rows: usize, cols: usize, bound: f64, rng: &mut SeededRng) -> Vec<f32> {
    let dist = Uniform::new(-bound as f32, bound as f32).expect("positive bound");
    (0..rows * cols).map(|_| dist.sample(rng)).collect()
}

pub fn random_projection_fit(input_dim: usize, bits: usize, rng: &mut SeededRng) -> Result<RandomProjectionModel> {
    if input_dim == 0 || bits == 0 {
        return Err(Error::InvalidArgument(format!(
            "random projection needs positive sizes, got L={input_dim} D={bits}"
        )));
    }
    let weights = uniform_matrix(bits, input_dim, init_bound(bits), rng);
    Ok(RandomProjectionModel {
        input_dim,
        bits,
        seed: rng.seed(),
        weights,
    })
}

/// Bit `i` is set iff `(W h)[i] > 0`.
pub fn random_projection_binarize(model: &RandomProjectionModel, h: &EmbeddingMatrix) -> Result<BinaryCodeSet> {
    h.check_dim(model.input_dim)?;
    BinaryCodeSet::build_rows(h.rows(), model.bits, |r, out| {
        let row = h.row(r);
        for i in 0..model.bits {
            if dot_f64(model.weight_row(i), row) > 0.0 {
                set_bit(out, i);
            }
        }
    })
}

impl Binarizer for RandomProjectionModel {
    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn bits(&self) -> usize {
        self.bits
    }

    fn binarize(&self, h: &EmbeddingMatrix) -> Result<BinaryCodeSet> {
        random_projection_binarize(self, h)
    }
}
