use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamConfig, AdamState};
use super::backward::backward_st;
use super::loss::{batch_loss, LossBreakdown};
use super::model::{AutoencoderModel, BinarizeMode};
use super::triplet::TripletBatch;
use crate::distance::norm_f64;
use crate::error::{Error, Result};
use crate::{EmbeddingMatrix, SeededRng};

/// Code widths explored by default.
pub const DEFAULT_BIT_WIDTHS: [usize; 4] = [512, 1024, 2048, 4096];

/// `lambda_sp` values explored by the ablation sweep (0 is plain AE-binary).
pub const LAMBDA_SP_GRID: [f64; 5] = [0.0, 0.2, 0.5, 0.8, 1.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub bits: usize,
    pub lambda_sp: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub mode: BinarizeMode,
    pub adam: AdamConfig,
    /// Triples sampled per minibatch; defaults to the batch size.
    pub triplets_per_batch: Option<usize>,
    /// Stop once the epoch-mean loss improves by less than this fraction.
    /// `None` always runs every epoch.
    pub early_stop: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            bits: 2048,
            lambda_sp: 0.8,
            batch_size: 64,
            epochs: 10,
            mode: BinarizeMode::Deterministic,
            adam: AdamConfig::default(),
            triplets_per_batch: None,
            early_stop: Some(1e-3),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if !(self.lambda_sp.is_finite() && self.lambda_sp >= 0.0) {
            return bad(format!("lambda_sp must be >= 0, got {}", self.lambda_sp));
        }
        if !(self.adam.learning_rate.is_finite() && self.adam.learning_rate > 0.0) {
            return bad(format!("learning rate must be > 0, got {}", self.adam.learning_rate));
        }
        if !(0.0..1.0).contains(&self.adam.beta1) || !(0.0..1.0).contains(&self.adam.beta2) {
            return bad("Adam betas must lie in [0, 1)".into());
        }
        if !self.adam.epsilon.is_finite() || self.adam.epsilon <= 0.0 {
            return bad("Adam epsilon must be > 0".into());
        }
        if self.bits == 0 || self.batch_size == 0 || self.epochs == 0 {
            return bad("bits, batch size and epochs must be positive".into());
        }
        Ok(())
    }
}

/// Loss of one optimizer step, measured before the update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepLoss {
    pub epoch: usize,
    pub step: usize,
    #[serde(flatten)]
    pub loss: LossBreakdown,
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub model: AutoencoderModel,
    pub history: Vec<StepLoss>,
    /// Mean total loss per completed epoch.
    pub epoch_means: Vec<f64>,
    /// Mean reconstruction loss per completed epoch.
    pub epoch_rec_means: Vec<f64>,
}

impl TrainReport {
    pub fn epochs_run(&self) -> usize {
        self.epoch_means.len()
    }

    pub fn final_loss(&self) -> Option<f64> {
        self.epoch_means.last().copied()
    }
}

/// Trains an autoencoder on the rows of `h` with shuffled minibatches.
///
/// Each epoch runs `floor(rows / batch_size)` steps; the remainder rows of the
/// shuffle are dropped for that epoch.
pub fn train(h: &EmbeddingMatrix, cfg: &TrainConfig, rng: &mut SeededRng) -> Result<TrainReport> {
    cfg.validate()?;
    if h.rows() < cfg.batch_size {
        return Err(Error::InvalidArgument(format!(
            "{} rows is fewer than the batch size {}",
            h.rows(),
            cfg.batch_size
        )));
    }
    let use_sp = cfg.lambda_sp > 0.0 && cfg.batch_size >= 3;
    if cfg.lambda_sp > 0.0 && !use_sp {
        log::warn!(
            "batch size {} is too small for triplets; training without the semantic-preserving term",
            cfg.batch_size
        );
    }
    if use_sp {
        if let Some(r) = (0..h.rows()).find(|&r| norm_f64(h.row(r)) == 0.0) {
            return Err(Error::DegenerateInput(format!(
                "row {r} has zero norm; cosine labels are undefined"
            )));
        }
    }

    let mut model = AutoencoderModel::init(h.dim(), cfg.bits, cfg.mode, rng)?;
    let mut states = [
        AdamState::new(model.enc_weights.len()),
        AdamState::new(model.enc_bias.len()),
        AdamState::new(model.dec_weights.len()),
        AdamState::new(model.dec_bias.len()),
    ];
    let n_triples = cfg.triplets_per_batch.unwrap_or(cfg.batch_size);
    let steps_per_epoch = h.rows() / cfg.batch_size;

    let mut order: Vec<usize> = (0..h.rows()).collect();
    let mut history = Vec::with_capacity(cfg.epochs * steps_per_epoch);
    let mut epoch_means = Vec::with_capacity(cfg.epochs);
    let mut epoch_rec_means = Vec::with_capacity(cfg.epochs);
    let mut global_step = 0;

    for epoch in 0..cfg.epochs {
        order.shuffle(rng);
        let (mut total, mut rec) = (0.0, 0.0);
        for (step, rows) in order.chunks_exact(cfg.batch_size).enumerate() {
            let forward = model.forward(h, rows, cfg.mode, rng)?;
            let triplets = if use_sp {
                let batch_rows: Vec<&[f32]> = rows.iter().map(|&r| h.row(r)).collect();
                TripletBatch::sample(&batch_rows, n_triples, rng)?
            } else {
                None
            };
            let loss = batch_loss(&forward, triplets.as_ref(), cfg.lambda_sp);
            if !loss.total.is_finite() {
                return Err(Error::Divergence {
                    step: global_step,
                    detail: format!("loss is {} (rec {}, sp {})", loss.total, loss.rec, loss.sp),
                });
            }
            let grads = backward_st(&model, &forward, triplets.as_ref(), cfg.lambda_sp);
            if !grads.is_finite() {
                return Err(Error::Divergence {
                    step: global_step,
                    detail: "non-finite gradient".into(),
                });
            }
            adam_step(&mut model.enc_weights, &grads.enc_weights, &mut states[0], &cfg.adam);
            adam_step(&mut model.enc_bias, &grads.enc_bias, &mut states[1], &cfg.adam);
            adam_step(&mut model.dec_weights, &grads.dec_weights, &mut states[2], &cfg.adam);
            adam_step(&mut model.dec_bias, &grads.dec_bias, &mut states[3], &cfg.adam);
            if !model.is_finite() {
                return Err(Error::Divergence {
                    step: global_step,
                    detail: "non-finite parameter after update".into(),
                });
            }

            total += loss.total;
            rec += loss.rec;
            history.push(StepLoss { epoch, step, loss });
            global_step += 1;
        }
        let mean = total / steps_per_epoch as f64;
        epoch_means.push(mean);
        epoch_rec_means.push(rec / steps_per_epoch as f64);
        log::debug!("epoch {epoch}: mean loss {mean:.6}");

        if let (Some(tol), [.., prev, _]) = (cfg.early_stop, epoch_means.as_slice()) {
            if prev - mean < tol * prev.abs() {
                log::info!("early stop after epoch {epoch}: loss {prev:.6} -> {mean:.6}");
                break;
            }
        }
    }

    Ok(TrainReport {
        model,
        history,
        epoch_means,
        epoch_rec_means,
    })
}
