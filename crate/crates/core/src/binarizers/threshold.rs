use serde::{Deserialize, Serialize};

use super::Binarizer;
use crate::codes::set_bit;
use crate::error::{Error, Result};
use crate::{BinaryCodeSet, EmbeddingMatrix};

/// Thresholds tried when tuning `s` on validation data.
pub const THRESHOLD_CANDIDATES: [f32; 3] = [0.0, 0.01, 0.1];

/// One global threshold applied to every dimension; output width equals the
/// input width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HardThresholdModel {
    pub threshold: f32,
    pub dim: usize,
}

impl HardThresholdModel {
    pub fn new(threshold: f32, dim: usize) -> Result<Self> {
        if !threshold.is_finite() {
            return Err(Error::NonFinite("hard threshold".into()));
        }
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        Ok(Self { threshold, dim })
    }
}

impl Binarizer for HardThresholdModel {
    fn input_dim(&self) -> usize {
        self.dim
    }

    fn bits(&self) -> usize {
        self.dim
    }

    fn binarize(&self, h: &EmbeddingMatrix) -> Result<BinaryCodeSet> {
        h.check_dim(self.dim)?;
        hard_threshold_binarize(h, self.threshold)
    }
}

/// Bit `i` of each row is set iff `h[i] > s`. Ties map to 0.
pub fn hard_threshold_binarize(h: &EmbeddingMatrix, s: f32) -> Result<BinaryCodeSet> {
    if !s.is_finite() {
        return Err(Error::NonFinite("hard threshold".into()));
    }
    BinaryCodeSet::build_rows(h.rows(), h.dim(), |i, out| {
        for (j, &v) in h.row(i).iter().enumerate() {
            if v > s {
                set_bit(out, j);
            }
        }
    })
}
