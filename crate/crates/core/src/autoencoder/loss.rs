use super::model::Forward;
use super::triplet::TripletBatch;

/// Mean squared error over the reconstruction's length.
pub fn reconstruction_loss(h: &[f64], h_hat: &[f64]) -> f64 {
    debug_assert_eq!(h.len(), h_hat.len());
    let sum: f64 = h.iter().zip(h_hat).map(|(a, b)| (a - b).powi(2)).sum();
    sum / h.len() as f64
}

/// `Σ (x_i - y_i)²`: the Hamming distance on 0/1 vectors, differentiable on
/// relaxed codes.
pub fn relaxed_hamming(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum()
}

/// Triplet hinge `Σ max(0, l · [d(b_α, b_β) - d(b_β, b_γ)])` over the batch.
pub fn semantic_preserving_loss(codes: &[&[f64]], triplets: &TripletBatch) -> f64 {
    triplets
        .triples
        .iter()
        .zip(&triplets.labels)
        .map(|(&[a, b, c], &l)| {
            let diff = relaxed_hamming(codes[a], codes[b]) - relaxed_hamming(codes[b], codes[c]);
            (f64::from(l) * diff).max(0.0)
        })
        .sum()
}

pub fn total_loss(rec: f64, sp: f64, lambda_sp: f64) -> f64 {
    rec + lambda_sp * sp
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LossBreakdown {
    /// Batch mean of the per-example reconstruction loss.
    pub rec: f64,
    /// Summed triplet hinge (0 when no triplets were used).
    pub sp: f64,
    pub total: f64,
}

pub fn batch_loss(forward: &Forward, triplets: Option<&TripletBatch>, lambda_sp: f64) -> LossBreakdown {
    let rec = forward
        .inputs
        .iter()
        .zip(&forward.reconstructions)
        .map(|(h, r)| reconstruction_loss(h, r))
        .sum::<f64>()
        / forward.len() as f64;
    let sp = triplets.map_or(0.0, |t| semantic_preserving_loss(&forward.codes(), t));
    LossBreakdown {
        rec,
        sp,
        total: total_loss(rec, sp, lambda_sp),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{hamming_distance, pack_bits};
    use proptest::prelude::*;

    fn code_with_distance(base: &[f64], flips: usize) -> Vec<f64> {
        base.iter()
            .enumerate()
            .map(|(i, &b)| if i < flips { 1.0 - b } else { b })
            .collect()
    }

    #[test]
    fn reconstruction_examples() {
        assert_eq!(reconstruction_loss(&[1.0, 2.0], &[1.0, 2.0]), 0.0);
        assert_eq!(reconstruction_loss(&[1.0, 0.0], &[0.0, 0.0]), 0.5);
    }

    #[test]
    fn hinge_examples() {
        // b = 0 vector; α differs from b in the first k bits, γ in the last m.
        let beta = vec![0.0; 8];
        let make = |ab: usize, bc: usize| {
            let alpha = code_with_distance(&beta, ab);
            let gamma: Vec<f64> = (0..8).map(|i| if i >= 8 - bc { 1.0 } else { 0.0 }).collect();
            (alpha, gamma)
        };
        let t = TripletBatch {
            triples: vec![[0, 1, 2]],
            labels: vec![1],
        };
        let (a, g) = make(3, 5);
        assert_eq!(semantic_preserving_loss(&[&a, &beta, &g], &t), 0.0);
        let (a, g) = make(5, 3);
        assert_eq!(semantic_preserving_loss(&[&a, &beta, &g], &t), 2.0);
        for l in [1, -1] {
            let t = TripletBatch {
                triples: vec![[0, 1, 2]],
                labels: vec![l],
            };
            assert_eq!(semantic_preserving_loss(&[&beta, &beta, &beta], &t), 0.0);
        }
    }

    #[test]
    fn total_examples() {
        assert!((total_loss(0.4, 2.0, 0.8) - 2.0).abs() < 1e-12);
        assert_eq!(total_loss(0.4, 2.0, 0.0), 0.4);
    }

    proptest! {
        #[test]
        fn relaxed_matches_hamming_on_binary(
            (a, b) in (1usize..=128).prop_flat_map(|n| (
                prop::collection::vec(any::<bool>(), n),
                prop::collection::vec(any::<bool>(), n),
            ))
        ) {
            let fa: Vec<f64> = a.iter().map(|&x| f64::from(u8::from(x))).collect();
            let fb: Vec<f64> = b.iter().map(|&x| f64::from(u8::from(x))).collect();
            let h = hamming_distance(&pack_bits(&a).unwrap(), &pack_bits(&b).unwrap(), a.len()).unwrap();
            prop_assert_eq!(relaxed_hamming(&fa, &fb), f64::from(h));
        }

        #[test]
        fn hinge_nonnegative_and_zero_when_ordered(
            codes in prop::collection::vec(prop::collection::vec(0u8..2, 16), 6),
            triples in prop::collection::vec((0usize..6, 0usize..6, 0usize..6), 1..10),
        ) {
            let codes: Vec<Vec<f64>> = codes.iter().map(|c| c.iter().map(|&x| f64::from(x)).collect()).collect();
            let refs: Vec<&[f64]> = codes.iter().map(|c| c.as_slice()).collect();
            let triples: Vec<[usize; 3]> = triples
                .into_iter()
                .filter(|(a, b, c)| a != b && b != c && a != c)
                .map(|(a, b, c)| [a, b, c])
                .collect();
            prop_assume!(!triples.is_empty());
            // Labels that agree with the Hamming ordering give zero loss.
            let agreeing: Vec<i8> = triples
                .iter()
                .map(|&[a, b, c]| if relaxed_hamming(refs[a], refs[b]) <= relaxed_hamming(refs[b], refs[c]) { 1 } else { -1 })
                .collect();
            let t = TripletBatch { triples: triples.clone(), labels: agreeing };
            prop_assert_eq!(semantic_preserving_loss(&refs, &t), 0.0);
            let flipped = TripletBatch { triples, labels: t.labels.iter().map(|l| -l).collect() };
            prop_assert!(semantic_preserving_loss(&refs, &flipped) >= 0.0);
        }
    }
}
