//! # binemb
//!
//! Converts pre-trained continuous sentence embeddings into compact binary
//! codes and evaluates those codes with Hamming-distance retrieval.
//!
//! Four families of binarizers are provided:
//!
//! - **Hard threshold**: bit `i` is set iff `h[i] > s`. Output width equals the
//!   embedding width.
//! - **Random projection**: `W` with entries uniform in `±1/sqrt(D)`, then the
//!   sign of `W h`.
//! - **PCA**: project the centered embedding onto the top-`D` principal axes,
//!   then take the sign.
//! - **Autoencoder**: a sigmoid encoder thresholded into bits, a linear
//!   decoder trained with a reconstruction loss, optionally regularized by a
//!   triplet hinge that keeps Hamming orderings consistent with cosine
//!   orderings of the source embeddings.
//!
//! Codes are stored LSB-first in `u64` words, so distances are computed with
//! XOR and popcount.

pub mod autoencoder;
pub mod binarizers;
pub mod codes;
pub mod distance;
pub mod error;
pub mod evaluation;
pub mod matrix;
pub mod model;
pub mod retrieval;
pub mod rng;
pub mod storage;

pub use codes::{hamming_distance, pack_bits, unpack_bits, BinaryCodeSet};
pub use distance::{cosine_similarity, dot_f64, norm_f64};
pub use error::{Error, FormatError, Result};
pub use matrix::EmbeddingMatrix;
pub use model::{BinarizerModel, Method};
pub use rng::SeededRng;
