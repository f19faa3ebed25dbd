//! Binary autoencoder.
//!
//! The encoder is `b = 1{σ(W h + k) > s}` with `s = 0.5` (deterministic) or
//! `s ~ Uniform(0, 1)` per bit (stochastic, training only). The decoder is
//! linear, `ĥ = W' b + k'`, trained with a mean-squared reconstruction loss
//! and an optional triplet hinge term weighted by `lambda_sp`.
//!
//! Gradients cross the thresholding step with the straight-through rule
//! `∂b/∂a = 1`, keeping the sigmoid derivative, so `∂b/∂(W h + k) = σ'`.

mod adam;
mod backward;
mod loss;
mod model;
mod train;
mod triplet;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use backward::{backward_st, Gradients};
pub use loss::{batch_loss, reconstruction_loss, relaxed_hamming, semantic_preserving_loss, total_loss, LossBreakdown};
pub use model::{decode, encode, sigmoid, AutoencoderModel, BinarizeMode, EncoderOutput, Forward};
pub use train::{train, StepLoss, TrainConfig, TrainReport, DEFAULT_BIT_WIDTHS, LAMBDA_SP_GRID};
pub use triplet::{sample_triplets, TripletBatch};
