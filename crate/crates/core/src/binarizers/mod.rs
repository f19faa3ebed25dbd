//! Training-free binarizers: hard threshold, random projection and PCA.

mod pca;
mod projection;
mod threshold;

pub use pca::{pca_binarize, pca_fit, PcaModel};
pub use projection::{random_projection_binarize, random_projection_fit, RandomProjectionModel};
pub use threshold::{hard_threshold_binarize, HardThresholdModel, THRESHOLD_CANDIDATES};

use crate::{BinaryCodeSet, EmbeddingMatrix, Result};

/// A fitted mapping from `input_dim`-wide embeddings to `bits`-wide codes.
pub trait Binarizer {
    fn input_dim(&self) -> usize;

    fn bits(&self) -> usize;

    /// Deterministic inference-time encoding of every row of `h`.
    fn binarize(&self, h: &EmbeddingMatrix) -> Result<BinaryCodeSet>;
}
