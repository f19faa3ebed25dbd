use rayon::prelude::*;

use super::model::{AutoencoderModel, Forward};
use super::triplet::TripletBatch;

/// Gradients with the same shapes as the model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub enc_weights: Vec<f64>,
    pub enc_bias: Vec<f64>,
    pub dec_weights: Vec<f64>,
    pub dec_bias: Vec<f64>,
}

impl Gradients {
    pub fn is_finite(&self) -> bool {
        self.enc_weights
            .iter()
            .chain(&self.enc_bias)
            .chain(&self.dec_weights)
            .chain(&self.dec_bias)
            .all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.enc_weights
            .iter()
            .chain(&self.enc_bias)
            .chain(&self.dec_weights)
            .chain(&self.dec_bias)
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Gradients of `rec + lambda_sp * sp` for the batch in `forward`.
///
/// Decoder gradients are exact given the codes. Encoder gradients pass
/// through the thresholding step unchanged and keep the sigmoid derivative:
/// `∂L/∂z_i = ∂L/∂b_i · σ(z_i)(1 - σ(z_i))`.
///
/// Every reduction runs in a fixed order, so results are bit-identical
/// regardless of the rayon thread count.
pub fn backward_st(
    model: &AutoencoderModel,
    forward: &Forward,
    triplets: Option<&TripletBatch>,
    lambda_sp: f64,
) -> Gradients {
    let n = forward.len();
    let (l, d) = (model.input_dim, model.bits);

    // ∂L/∂ĥ for each example; rec is averaged over the batch and over L.
    let scale = 2.0 / (l as f64 * n as f64);
    let g_hat: Vec<Vec<f64>> = forward
        .inputs
        .iter()
        .zip(&forward.reconstructions)
        .map(|(h, r)| r.iter().zip(h).map(|(a, b)| scale * (a - b)).collect())
        .collect();

    // ∂L/∂b from the decoder path: W'ᵀ g.
    let mut g_code: Vec<Vec<f64>> = g_hat
        .par_iter()
        .map(|g| {
            let mut out = vec![0.0; d];
            for (j, &gj) in g.iter().enumerate() {
                for (o, w) in out.iter_mut().zip(model.dec_row(j)) {
                    *o += w * gj;
                }
            }
            out
        })
        .collect();

    if let Some(t) = triplets.filter(|_| lambda_sp != 0.0) {
        let codes = forward.codes();
        for (&[a, b, c], &label) in t.triples.iter().zip(&t.labels) {
            let (ca, cb, cc) = (codes[a], codes[b], codes[c]);
            let diff: f64 = ca
                .iter()
                .zip(cb)
                .zip(cc)
                .map(|((x, y), z)| (x - y).powi(2) - (y - z).powi(2))
                .sum();
            let l = f64::from(label);
            if l * diff <= 0.0 {
                continue;
            }
            let w = lambda_sp * l * 2.0;
            for i in 0..d {
                g_code[a][i] += w * (ca[i] - cb[i]);
                g_code[b][i] += w * (cc[i] - ca[i]);
                g_code[c][i] += w * (cb[i] - cc[i]);
            }
        }
    }

    // Straight-through: ∂L/∂z = ∂L/∂b · σ'(z).
    let g_logit: Vec<Vec<f64>> = g_code
        .iter()
        .zip(&forward.encoded)
        .map(|(g, e)| g.iter().zip(&e.activations).map(|(gi, a)| gi * a * (1.0 - a)).collect())
        .collect();

    let mut dec_weights = vec![0.0; l * d];
    dec_weights.par_chunks_mut(d).enumerate().for_each(|(j, row)| {
        for (g, e) in g_hat.iter().zip(&forward.encoded) {
            let gj = g[j];
            for (r, c) in row.iter_mut().zip(&e.code) {
                *r += gj * c;
            }
        }
    });
    let dec_bias = (0..l).map(|j| g_hat.iter().map(|g| g[j]).sum()).collect();

    let mut enc_weights = vec![0.0; d * l];
    enc_weights.par_chunks_mut(l).enumerate().for_each(|(i, row)| {
        for (g, h) in g_logit.iter().zip(&forward.inputs) {
            let gi = g[i];
            if gi == 0.0 {
                continue;
            }
            for (r, x) in row.iter_mut().zip(h) {
                *r += gi * x;
            }
        }
    });
    let enc_bias = (0..d).map(|i| g_logit.iter().map(|g| g[i]).sum()).collect();

    Gradients {
        enc_weights,
        enc_bias,
        dec_weights,
        dec_bias,
    }
}
