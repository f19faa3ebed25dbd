use rand::distr::{Distribution, Uniform};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::binarizers::Binarizer;
use crate::codes::set_bit;
use crate::error::{Error, Result};
use crate::{BinaryCodeSet, EmbeddingMatrix, SeededRng};

/// How the sigmoid activations are thresholded during training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BinarizeMode {
    /// Fixed threshold 0.5.
    #[default]
    Deterministic,
    /// Threshold drawn from `Uniform(0, 1)` per bit, per example, per pass.
    Stochastic,
}

impl BinarizeMode {
    pub fn as_str(self) -> &'static str {
        match self {
            BinarizeMode::Deterministic => "deterministic",
            BinarizeMode::Stochastic => "stochastic",
        }
    }
}

impl std::str::FromStr for BinarizeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "deterministic" => Ok(BinarizeMode::Deterministic),
            "stochastic" => Ok(BinarizeMode::Stochastic),
            other => Err(Error::InvalidArgument(format!("unknown binarize mode {other:?}"))),
        }
    }
}

/// Encoder `(W, k)` and decoder `(W', k')` parameters.
///
/// `mode` records how the model was trained. Inference always thresholds at
/// 0.5 regardless.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutoencoderModel {
    pub input_dim: usize,
    pub bits: usize,
    /// `bits x input_dim`, row-major.
    pub enc_weights: Vec<f64>,
    pub enc_bias: Vec<f64>,
    /// `input_dim x bits`, row-major.
    pub dec_weights: Vec<f64>,
    pub dec_bias: Vec<f64>,
    pub mode: BinarizeMode,
}

/// Encoder pass for one input.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderOutput {
    /// `W h + k`.
    pub logits: Vec<f64>,
    /// `σ(W h + k)`.
    pub activations: Vec<f64>,
    /// The code as 0.0 / 1.0 values.
    pub code: Vec<f64>,
}

impl EncoderOutput {
    pub fn bits(&self) -> Vec<bool> {
        self.code.iter().map(|&c| c > 0.5).collect()
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl AutoencoderModel {
    /// Encoder weights uniform in `±1/sqrt(bits)`, decoder weights uniform in
    /// `±1/sqrt(input_dim)`, zero biases.
    pub fn init(input_dim: usize, bits: usize, mode: BinarizeMode, rng: &mut SeededRng) -> Result<Self> {
        if input_dim == 0 || bits == 0 {
            return Err(Error::InvalidArgument(format!(
                "autoencoder needs positive sizes, got L={input_dim} D={bits}"
            )));
        }
        let enc = Uniform::new(-1.0 / (bits as f64).sqrt(), 1.0 / (bits as f64).sqrt()).expect("positive bound");
        let dec =
            Uniform::new(-1.0 / (input_dim as f64).sqrt(), 1.0 / (input_dim as f64).sqrt()).expect("positive bound");
        let enc_weights = (0..bits * input_dim).map(|_| enc.sample(rng)).collect();
        let dec_weights = (0..input_dim * bits).map(|_| dec.sample(rng)).collect();
        Ok(Self {
            input_dim,
            bits,
            enc_weights,
            enc_bias: vec![0.0; bits],
            dec_weights,
            dec_bias: vec![0.0; input_dim],
            mode,
        })
    }

    pub fn enc_row(&self, i: usize) -> &[f64] {
        &self.enc_weights[i * self.input_dim..(i + 1) * self.input_dim]
    }

    pub fn dec_row(&self, j: usize) -> &[f64] {
        &self.dec_weights[j * self.bits..(j + 1) * self.bits]
    }

    pub fn is_finite(&self) -> bool {
        self.enc_weights
            .iter()
            .chain(&self.enc_bias)
            .chain(&self.dec_weights)
            .chain(&self.dec_bias)
            .all(|v| v.is_finite())
    }

    pub(crate) fn logits(&self, h: &[f64]) -> Vec<f64> {
        (0..self.bits)
            .map(|i| dot(self.enc_row(i), h) + self.enc_bias[i])
            .collect()
    }

    /// Inference-time code: bit `i` set iff `σ(W_i h + k_i) > 0.5`.
    pub fn infer(&self, h: &[f32]) -> Result<Vec<bool>> {
        self.check_input(h.len())?;
        let h: Vec<f64> = h.iter().map(|&x| f64::from(x)).collect();
        Ok(self.logits(&h).into_iter().map(|z| sigmoid(z) > 0.5).collect())
    }

    fn check_input(&self, len: usize) -> Result<()> {
        if len != self.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim,
                found: len,
            });
        }
        Ok(())
    }

    /// Batched forward pass over `rows` of `h`.
    ///
    /// Stochastic thresholds are drawn serially from `rng` in row order
    /// before the (parallel) encoder pass, so the result does not depend on
    /// thread scheduling.
    pub fn forward(
        &self,
        h: &EmbeddingMatrix,
        rows: &[usize],
        mode: BinarizeMode,
        rng: &mut SeededRng,
    ) -> Result<Forward> {
        h.check_dim(self.input_dim)?;
        let thresholds: Option<Vec<f64>> = match mode {
            BinarizeMode::Deterministic => None,
            BinarizeMode::Stochastic => Some((0..rows.len() * self.bits).map(|_| rng.random::<f64>()).collect()),
        };
        let inputs: Vec<Vec<f64>> = rows
            .iter()
            .map(|&r| h.row(r).iter().map(|&x| f64::from(x)).collect())
            .collect();
        let encoded: Vec<EncoderOutput> = inputs
            .par_iter()
            .enumerate()
            .map(|(n, x)| {
                let logits = self.logits(x);
                let activations: Vec<f64> = logits.iter().map(|&z| sigmoid(z)).collect();
                let code = activations
                    .iter()
                    .enumerate()
                    .map(|(i, &a)| {
                        let s = thresholds.as_ref().map_or(0.5, |t| t[n * self.bits + i]);
                        if a > s {
                            1.0
                        } else {
                            0.0
                        }
                    })
                    .collect();
                EncoderOutput {
                    logits,
                    activations,
                    code,
                }
            })
            .collect();
        let mut out = Forward {
            inputs,
            encoded,
            reconstructions: Vec::new(),
        };
        out.reconstruct(self);
        Ok(out)
    }

    pub fn parameter_count(&self) -> usize {
        2 * self.bits * self.input_dim + self.bits + self.input_dim
    }
}

/// Activations and reconstructions for one minibatch.
#[derive(Debug, Clone)]
pub struct Forward {
    pub inputs: Vec<Vec<f64>>,
    pub encoded: Vec<EncoderOutput>,
    pub reconstructions: Vec<Vec<f64>>,
}

impl Forward {
    fn reconstruct(&mut self, model: &AutoencoderModel) {
        self.reconstructions = self.encoded.par_iter().map(|e| decode(model, &e.code)).collect();
    }

    /// Replaces the binary codes with the sigmoid activations, giving the
    /// smooth surrogate network whose exact gradient the straight-through
    /// rule mirrors.
    pub fn relaxed(mut self, model: &AutoencoderModel) -> Self {
        for e in &mut self.encoded {
            e.code = e.activations.clone();
        }
        self.reconstruct(model);
        self
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn codes(&self) -> Vec<&[f64]> {
        self.encoded.iter().map(|e| e.code.as_slice()).collect()
    }
}

/// Encodes one input. Stochastic mode draws one threshold per bit from `rng`.
pub fn encode(model: &AutoencoderModel, h: &[f32], mode: BinarizeMode, rng: &mut SeededRng) -> Result<EncoderOutput> {
    model.check_input(h.len())?;
    let x: Vec<f64> = h.iter().map(|&v| f64::from(v)).collect();
    let logits = model.logits(&x);
    let activations: Vec<f64> = logits.iter().map(|&z| sigmoid(z)).collect();
    let code = activations
        .iter()
        .map(|&a| {
            let s = match mode {
                BinarizeMode::Deterministic => 0.5,
                BinarizeMode::Stochastic => rng.random::<f64>(),
            };
            if a > s {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    Ok(EncoderOutput {
        logits,
        activations,
        code,
    })
}

/// `ĥ = W' b + k'`.
pub fn decode(model: &AutoencoderModel, code: &[f64]) -> Vec<f64> {
    debug_assert_eq!(code.len(), model.bits);
    (0..model.input_dim)
        .map(|j| dot(model.dec_row(j), code) + model.dec_bias[j])
        .collect()
}

impl Binarizer for AutoencoderModel {
    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn bits(&self) -> usize {
        self.bits
    }

    fn binarize(&self, h: &EmbeddingMatrix) -> Result<BinaryCodeSet> {
        h.check_dim(self.input_dim)?;
        BinaryCodeSet::build_rows(h.rows(), self.bits, |r, out| {
            let x: Vec<f64> = h.row(r).iter().map(|&v| f64::from(v)).collect();
            for (i, z) in self.logits(&x).into_iter().enumerate() {
                if sigmoid(z) > 0.5 {
                    set_bit(out, i);
                }
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(weights: Vec<f64>, bias: Vec<f64>) -> AutoencoderModel {
        let bits = bias.len();
        let input_dim = weights.len() / bits;
        AutoencoderModel {
            input_dim,
            bits,
            enc_weights: weights,
            enc_bias: bias,
            dec_weights: vec![0.0; input_dim * bits],
            dec_bias: vec![0.0; input_dim],
            mode: BinarizeMode::Deterministic,
        }
    }

    #[test]
    fn zero_logit_maps_to_zero() {
        let m = toy(vec![1.0, -1.0], vec![0.0]);
        let out = encode(&m, &[0.5, 0.5], BinarizeMode::Deterministic, &mut SeededRng::new(0)).unwrap();
        assert_eq!(out.activations[0], 0.5);
        assert_eq!(out.code, vec![0.0]);
    }

    #[test]
    fn logit_two() {
        let m = toy(vec![1.0, 0.0], vec![0.0]);
        let out = encode(&m, &[2.0, 0.0], BinarizeMode::Deterministic, &mut SeededRng::new(0)).unwrap();
        assert!((out.activations[0] - 0.880797077977882).abs() < 1e-12);
        assert_eq!(out.code, vec![1.0]);
    }

    #[test]
    fn stochastic_frequency_matches_activation() {
        let m = toy(vec![1.0], vec![0.0]);
        let mut rng = SeededRng::new(17);
        let n = 10_000;
        let ones = (0..n)
            .filter(|_| encode(&m, &[2.0], BinarizeMode::Stochastic, &mut rng).unwrap().code[0] == 1.0)
            .count();
        let freq = ones as f64 / n as f64;
        assert!((freq - sigmoid(2.0)).abs() < 0.01, "{freq}");
    }

    #[test]
    fn decode_examples() {
        let mut m = toy(vec![0.0; 4], vec![0.0; 2]);
        m.dec_weights = vec![0.5, -0.2, 0.1, 0.3];
        m.dec_bias = vec![0.1, -0.1];
        assert_eq!(decode(&m, &[0.0, 0.0]), vec![0.1, -0.1]);
        let h = decode(&m, &[1.0, 0.0]);
        assert!((h[0] - 0.6).abs() < 1e-12 && h[1].abs() < 1e-12);
        // one-hot e_1 selects column 1 of W'
        let h = decode(&m, &[0.0, 1.0]);
        assert!((h[0] - (-0.2 + 0.1)).abs() < 1e-12 && (h[1] - (0.3 - 0.1)).abs() < 1e-12);
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(-800.0).is_finite());
        assert_eq!(sigmoid(800.0), 1.0);
    }

    #[test]
    fn inference_ignores_training_mode() {
        let mut rng = SeededRng::new(4);
        let mut m = AutoencoderModel::init(6, 10, BinarizeMode::Stochastic, &mut rng).unwrap();
        let h = EmbeddingMatrix::from_rows(&[[0.3, -1.0, 2.0, 0.1, 0.0, 0.7]]).unwrap();
        let a = m.binarize(&h).unwrap();
        m.mode = BinarizeMode::Deterministic;
        assert_eq!(a, m.binarize(&h).unwrap());
        assert_eq!(a.row_bits(0), m.infer(h.row(0)).unwrap());
    }

    #[test]
    fn init_bounds() {
        let m = AutoencoderModel::init(16, 4, BinarizeMode::Deterministic, &mut SeededRng::new(1)).unwrap();
        assert!(m.enc_weights.iter().all(|w| w.abs() <= 0.5));
        assert!(m.dec_weights.iter().all(|w| w.abs() <= 0.25));
        assert!(m.enc_bias.iter().chain(&m.dec_bias).all(|&b| b == 0.0));
        assert_eq!(m.parameter_count(), 2 * 64 + 4 + 16);
    }
}
