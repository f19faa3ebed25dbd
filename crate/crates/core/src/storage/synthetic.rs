//! Clustered Gaussian corpus used as a stand-in for sentence embeddings.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::distance::cosine_similarity;
use crate::error::{Error, Result};
use crate::evaluation::{ScoredPair, ScoredPairSet};
use crate::{EmbeddingMatrix, SeededRng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticCorpusSpec {
    pub n_points: usize,
    pub dim: usize,
    pub n_clusters: usize,
    /// Standard deviation of the per-coordinate noise around each center.
    pub spread: f64,
    pub seed: u64,
}

impl Default for SyntheticCorpusSpec {
    fn default() -> Self {
        Self {
            n_points: 10_000,
            dim: 512,
            n_clusters: 50,
            spread: 0.3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub embeddings: EmbeddingMatrix,
    /// Cluster index of every point.
    pub clusters: Vec<usize>,
    /// Cluster centers, `n_clusters x dim`.
    pub centers: EmbeddingMatrix,
}

/// Draws `n_clusters` centers with unit Gaussian coordinates and places each
/// point at its center plus `spread`-scaled Gaussian noise. Clusters are
/// balanced (sizes differ by at most one) and assigned in shuffled order.
pub fn generate_synthetic_corpus(spec: &SyntheticCorpusSpec) -> Result<SyntheticCorpus> {
    let SyntheticCorpusSpec {
        n_points,
        dim,
        n_clusters,
        spread,
        seed,
    } = *spec;
    if n_points == 0 || dim == 0 || n_clusters == 0 {
        return Err(Error::InvalidArgument(format!(
            "corpus needs positive sizes, got {n_points} points, dim {dim}, {n_clusters} clusters"
        )));
    }
    if n_clusters > n_points {
        return Err(Error::InvalidArgument(format!(
            "{n_clusters} clusters cannot be filled by {n_points} points"
        )));
    }
    if !spread.is_finite() || spread <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "spread must be finite and > 0, got {spread}"
        )));
    }

    let mut rng = SeededRng::new(seed);
    let centers: Vec<f64> = (0..n_clusters * dim).map(|_| rng.sample(StandardNormal)).collect();
    let mut clusters: Vec<usize> = (0..n_points).map(|i| i % n_clusters).collect();
    clusters.shuffle(&mut rng);

    let mut data = Vec::with_capacity(n_points * dim);
    for &c in &clusters {
        let center = &centers[c * dim..(c + 1) * dim];
        for &x in center {
            let noise: f64 = rng.sample(StandardNormal);
            data.push((x + spread * noise) as f32);
        }
    }
    let centers = EmbeddingMatrix::new(n_clusters, dim, centers.into_iter().map(|x| x as f32).collect())?;
    Ok(SyntheticCorpus {
        embeddings: EmbeddingMatrix::new(n_points, dim, data)?,
        clusters,
        centers,
    })
}

impl SyntheticCorpus {
    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn same_cluster(&self, i: usize, j: usize) -> bool {
        self.clusters[i] == self.clusters[j]
    }

    /// Graded gold relatedness of two points: cosine of their centers.
    pub fn gold_score(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.clusters[i], self.clusters[j]);
        if a == b {
            return 1.0;
        }
        cosine_similarity(self.centers.row(a), self.centers.row(b)).expect("centers are nonzero")
    }

    /// Samples `n` pairs of distinct points, each same-cluster with
    /// probability `same_fraction`, scored by [`Self::gold_score`].
    pub fn sample_pairs(&self, n: usize, same_fraction: f64, rng: &mut SeededRng) -> Result<ScoredPairSet> {
        if !(0.0..=1.0).contains(&same_fraction) {
            return Err(Error::InvalidArgument(format!(
                "same-cluster fraction must be in [0, 1], got {same_fraction}"
            )));
        }
        let k = self.centers.rows();
        let mut members = vec![Vec::new(); k];
        for (i, &c) in self.clusters.iter().enumerate() {
            members[c].push(i);
        }
        let can_same = members.iter().any(|m| m.len() >= 2);
        if (same_fraction > 0.0 && !can_same) || (same_fraction < 1.0 && k < 2) {
            return Err(Error::InvalidArgument(format!(
                "corpus with {k} clusters cannot supply the requested pair mix"
            )));
        }
        let mut pairs = Vec::with_capacity(n);
        while pairs.len() < n {
            let a = rng.random_range(0..self.len());
            let same = rng.random_bool(same_fraction);
            let pool = &members[self.clusters[a]];
            let b = if same {
                if pool.len() < 2 {
                    continue;
                }
                let b = pool[rng.random_range(0..pool.len())];
                if b == a {
                    continue;
                }
                b
            } else {
                let b = rng.random_range(0..self.len());
                if self.same_cluster(a, b) {
                    continue;
                }
                b
            };
            pairs.push(ScoredPair {
                a,
                b,
                gold: self.gold_score(a, b),
            });
        }
        ScoredPairSet::new(pairs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(n: usize, dim: usize, k: usize, spread: f64) -> SyntheticCorpusSpec {
        SyntheticCorpusSpec {
            n_points: n,
            dim,
            n_clusters: k,
            spread,
            seed: 3,
        }
    }

    #[test]
    fn deterministic_and_balanced() {
        let a = generate_synthetic_corpus(&spec(103, 16, 10, 0.3)).unwrap();
        let b = generate_synthetic_corpus(&spec(103, 16, 10, 0.3)).unwrap();
        assert_eq!(a, b);
        let mut counts = [0usize; 10];
        for &c in &a.clusters {
            counts[c] += 1;
        }
        assert!(counts.iter().all(|&c| c == 10 || c == 11));
        let other = generate_synthetic_corpus(&SyntheticCorpusSpec {
            seed: 4,
            ..spec(103, 16, 10, 0.3)
        })
        .unwrap();
        assert_ne!(a.embeddings, other.embeddings);
    }

    #[test]
    fn tiny_spread_collapses_clusters() {
        let c = generate_synthetic_corpus(&spec(200, 32, 5, 1e-6)).unwrap();
        for i in 0..c.len() {
            for j in 0..c.len() {
                if c.same_cluster(i, j) {
                    let s = cosine_similarity(c.embeddings.row(i), c.embeddings.row(j)).unwrap();
                    assert!(s > 1.0 - 1e-6, "{s}");
                }
            }
        }
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(generate_synthetic_corpus(&spec(5, 4, 6, 0.3)).is_err());
        assert!(generate_synthetic_corpus(&spec(5, 0, 2, 0.3)).is_err());
        assert!(generate_synthetic_corpus(&spec(5, 4, 2, -1.0)).is_err());
        assert!(generate_synthetic_corpus(&spec(5, 4, 2, 0.0)).is_err());
    }

    #[test]
    fn pair_mix() {
        let c = generate_synthetic_corpus(&spec(500, 8, 10, 0.3)).unwrap();
        let mut rng = SeededRng::new(9);
        let pairs = c.sample_pairs(4000, 0.25, &mut rng).unwrap();
        assert_eq!(pairs.len(), 4000);
        let same = pairs.pairs.iter().filter(|p| c.same_cluster(p.a, p.b)).count();
        assert!((same as f64 / 4000.0 - 0.25).abs() < 0.03, "{same}");
        assert!(pairs.pairs.iter().all(|p| p.a != p.b));
        assert!(pairs.pairs.iter().all(|p| (p.gold == 1.0) == c.same_cluster(p.a, p.b)));

        let single = generate_synthetic_corpus(&spec(10, 4, 1, 0.3)).unwrap();
        assert!(single.sample_pairs(5, 0.5, &mut rng).is_err());
        assert!(single.sample_pairs(5, 1.0, &mut rng).is_ok());
    }
}
