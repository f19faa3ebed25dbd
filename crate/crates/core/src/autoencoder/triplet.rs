use rand::Rng;

use crate::distance::cosine_similarity;
use crate::error::{Error, Result};
use crate::SeededRng;

/// Index triples `(α, β, γ)` into a minibatch with their cosine-order labels.
///
/// `labels[t]` is `+1` iff `cos(h_α, h_β) >= cos(h_β, h_γ)`, else `-1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TripletBatch {
    pub triples: Vec<[usize; 3]>,
    pub labels: Vec<i8>,
}

impl TripletBatch {
    /// Labels `triples` from the cosine similarities of `rows`.
    pub fn label<R: AsRef<[f32]>>(triples: Vec<[usize; 3]>, rows: &[R]) -> Result<Self> {
        let mut labels = Vec::with_capacity(triples.len());
        for &[a, b, c] in &triples {
            if a == b || b == c || a == c {
                return Err(Error::InvalidArgument(format!(
                    "triple ({a}, {b}, {c}) has repeated indices"
                )));
            }
            if a.max(b).max(c) >= rows.len() {
                return Err(Error::InvalidArgument(format!(
                    "triple ({a}, {b}, {c}) out of range for {} rows",
                    rows.len()
                )));
            }
            let ab = cosine_similarity(rows[a].as_ref(), rows[b].as_ref())?;
            let bc = cosine_similarity(rows[b].as_ref(), rows[c].as_ref())?;
            labels.push(if ab >= bc { 1 } else { -1 });
        }
        Ok(Self { triples, labels })
    }

    /// Samples `n_triples` triples over `rows` and labels them. Returns
    /// `None`, with a warning, when fewer than three rows are available.
    pub fn sample<R: AsRef<[f32]>>(rows: &[R], n_triples: usize, rng: &mut SeededRng) -> Result<Option<Self>> {
        match sample_triplets(rows.len(), n_triples, rng) {
            Some(triples) => Self::label(triples, rows).map(Some),
            None => Ok(None),
        }
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }
}

/// Draws `n_triples` ordered triples of pairwise-distinct indices below
/// `batch_size`, uniformly. Returns `None` (and logs a warning) when
/// `batch_size < 3`.
pub fn sample_triplets(batch_size: usize, n_triples: usize, rng: &mut SeededRng) -> Option<Vec<[usize; 3]>> {
    if batch_size < 3 {
        log::warn!("batch of {batch_size} rows is too small for triplets; skipping the semantic-preserving term");
        return None;
    }
    let triples = (0..n_triples)
        .map(|_| {
            let a = rng.random_range(0..batch_size);
            let mut b = rng.random_range(0..batch_size - 1);
            if b >= a {
                b += 1;
            }
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let mut c = rng.random_range(0..batch_size - 2);
            if c >= lo {
                c += 1;
            }
            if c >= hi {
                c += 1;
            }
            [a, b, c]
        })
        .collect();
    Some(triples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    #[test]
    fn batch_of_three() {
        let mut rng = SeededRng::new(0);
        for t in sample_triplets(3, 50, &mut rng).unwrap() {
            let mut s = t;
            s.sort();
            assert_eq!(s, [0, 1, 2]);
        }
    }

    #[test]
    fn too_small() {
        assert!(sample_triplets(2, 4, &mut SeededRng::new(0)).is_none());
        let rows = [[1.0f32, 0.0], [0.0, 1.0]];
        assert!(TripletBatch::sample(&rows, 4, &mut SeededRng::new(0))
            .unwrap()
            .is_none());
    }

    #[test]
    fn deterministic() {
        let a = sample_triplets(64, 64, &mut SeededRng::new(5)).unwrap();
        let b = sample_triplets(64, 64, &mut SeededRng::new(5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn uniform_over_ordered_triples() {
        // 5 rows -> 60 ordered triples; each should appear ~1/60 of the time.
        let mut rng = SeededRng::new(9);
        let n = 120_000;
        let mut counts: HashMap<[usize; 3], usize> = HashMap::new();
        for t in sample_triplets(5, n, &mut rng).unwrap() {
            assert!(t[0] != t[1] && t[1] != t[2] && t[0] != t[2]);
            *counts.entry(t).or_default() += 1;
        }
        assert_eq!(counts.len(), 60);
        let expected = n as f64 / 60.0;
        // sd of a count is about sqrt(2000) ~ 45; 5 sd tolerance
        for c in counts.values() {
            assert!((*c as f64 - expected).abs() < 5.0 * expected.sqrt(), "{c}");
        }
    }

    #[test]
    fn labels_follow_cosine_order() {
        // cos(a, b) = 0.9 and cos(b, c) = 0.2 with unit vectors in the plane.
        let ang_ab = 0.9f64.acos();
        let ang_bc = 0.2f64.acos();
        let b = [1.0f32, 0.0];
        let a = [ang_ab.cos() as f32, ang_ab.sin() as f32];
        let c = [ang_bc.cos() as f32, -(ang_bc.sin() as f32)];
        let rows = [a, b, c];
        let batch = TripletBatch::label(vec![[0, 1, 2], [2, 1, 0]], &rows).unwrap();
        assert_eq!(batch.labels, vec![1, -1]);
        assert!(TripletBatch::label(vec![[0, 0, 1]], &rows).is_err());
    }
}
