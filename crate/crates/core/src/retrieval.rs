//! Exact brute-force k-nearest-neighbor search over binary codes (Hamming)
//! and continuous embeddings (cosine), plus a pair-scoring microbenchmark.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::hint::black_box;
use std::time::Instant;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::binarizers::hard_threshold_binarize;
use crate::codes::hamming_words;
use crate::distance::{dot_f64, norm_f64};
use crate::error::{Error, Result};
use crate::{BinaryCodeSet, EmbeddingMatrix, SeededRng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Neighbor<S> {
    pub index: usize,
    /// Hamming distance, or cosine similarity.
    pub score: S,
}

/// The `k` best database rows for one query, best first. Ties are broken by
/// ascending database index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborList<S> {
    pub query: usize,
    pub neighbors: Vec<Neighbor<S>>,
}

impl<S> NeighborList<S> {
    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.neighbors.iter().map(|n| n.index)
    }
}

/// Whether a query may match the database row with the same index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SelfMask {
    /// Keep every database row.
    #[default]
    None,
    /// Skip database row `i` for query `i` (queries and database are the
    /// same set).
    SameIndex,
}

impl SelfMask {
    fn skips(self, query: usize, db: usize) -> bool {
        matches!(self, SelfMask::SameIndex) && query == db
    }

    fn available(self, rows: usize) -> usize {
        match self {
            SelfMask::None => rows,
            SelfMask::SameIndex => rows.saturating_sub(1),
        }
    }
}

fn check_k(k: usize, rows: usize, mask: SelfMask) -> Result<()> {
    let available = mask.available(rows);
    if k == 0 || k > available {
        return Err(Error::InvalidArgument(format!(
            "k = {k} must be in 1..={available} for {rows} database rows"
        )));
    }
    Ok(())
}

/// Keeps the `k` smallest keys seen so far. The heap top is the worst kept
/// key, so each candidate costs `O(log k)`.
struct TopK<K: Ord> {
    k: usize,
    heap: BinaryHeap<K>,
}

impl<K: Ord> TopK<K> {
    fn new(k: usize) -> Self {
        Self {
            k,
            heap: BinaryHeap::with_capacity(k + 1),
        }
    }

    #[inline]
    fn offer(&mut self, key: K) {
        if self.heap.len() < self.k {
            self.heap.push(key);
        } else if let Some(mut top) = self.heap.peek_mut() {
            if key < *top {
                *top = key;
            }
        }
    }

    fn into_sorted(self) -> Vec<K> {
        self.heap.into_sorted_vec()
    }
}

/// Orders cosine candidates so that "less" means "better": higher similarity
/// first, then lower index.
#[derive(Debug, Clone, Copy, PartialEq)]
struct CosineKey {
    sim: f64,
    index: usize,
}

impl Eq for CosineKey {}

impl Ord for CosineKey {
    fn cmp(&self, other: &Self) -> Ordering {
        other.sim.total_cmp(&self.sim).then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for CosineKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub fn knn_hamming(
    queries: &BinaryCodeSet,
    database: &BinaryCodeSet,
    k: usize,
    mask: SelfMask,
) -> Result<Vec<NeighborList<u32>>> {
    if queries.bits() != database.bits() {
        return Err(Error::DimensionMismatch {
            expected: database.bits(),
            found: queries.bits(),
        });
    }
    check_k(k, database.rows(), mask)?;
    Ok((0..queries.rows())
        .into_par_iter()
        .map(|q| {
            let query = queries.row(q);
            let mut top = TopK::new(k);
            for d in 0..database.rows() {
                if !mask.skips(q, d) {
                    top.offer((hamming_words(query, database.row(d)), d));
                }
            }
            NeighborList {
                query: q,
                neighbors: top
                    .into_sorted()
                    .into_iter()
                    .map(|(score, index)| Neighbor { index, score })
                    .collect(),
            }
        })
        .collect())
}

fn row_norms(m: &EmbeddingMatrix, what: &str) -> Result<Vec<f64>> {
    m.iter_rows()
        .enumerate()
        .map(|(i, r)| {
            let n = norm_f64(r);
            if n == 0.0 {
                Err(Error::DegenerateInput(format!("{what} row {i} has zero norm")))
            } else {
                Ok(n)
            }
        })
        .collect()
}

pub fn knn_cosine(
    queries: &EmbeddingMatrix,
    database: &EmbeddingMatrix,
    k: usize,
    mask: SelfMask,
) -> Result<Vec<NeighborList<f64>>> {
    database.check_dim(queries.dim())?;
    check_k(k, database.rows(), mask)?;
    let q_norms = row_norms(queries, "query")?;
    let d_norms = row_norms(database, "database")?;
    Ok((0..queries.rows())
        .into_par_iter()
        .map(|q| {
            let query = queries.row(q);
            let mut top = TopK::new(k);
            for (d, row) in database.iter_rows().enumerate() {
                if !mask.skips(q, d) {
                    let sim = (dot_f64(query, row) / (q_norms[q] * d_norms[d])).clamp(-1.0, 1.0);
                    top.offer(CosineKey { sim, index: d });
                }
            }
            NeighborList {
                query: q,
                neighbors: top
                    .into_sorted()
                    .into_iter()
                    .map(|c| Neighbor {
                        index: c.index,
                        score: c.sim,
                    })
                    .collect(),
            }
        })
        .collect())
}

/// Timing of Hamming versus cosine pair scoring on the same data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    pub mean_ns_per_pair_hamming: f64,
    pub mean_ns_per_pair_cosine: f64,
    /// `mean_ns_per_pair_cosine / mean_ns_per_pair_hamming`.
    pub speedup: f64,
    pub bits: usize,
    pub n_pairs: usize,
    pub repetitions: usize,
}

impl BenchResult {
    pub fn new(hamming_ns: f64, cosine_ns: f64, bits: usize, n_pairs: usize, repetitions: usize) -> Self {
        Self {
            mean_ns_per_pair_hamming: hamming_ns,
            mean_ns_per_pair_cosine: cosine_ns,
            speedup: cosine_ns / hamming_ns,
            bits,
            n_pairs,
            repetitions,
        }
    }
}

/// Largest number of distinct vectors the benchmark draws pairs from.
const BENCH_POOL: usize = 2048;

/// Scores `n_pairs` random pairs with cosine similarity on `bits`-dimensional
/// Gaussian vectors and with Hamming distance on their sign codes.
///
/// Each metric gets one warm-up pass, then `repetitions` timed passes; the
/// reported per-pair time is the median over passes. Runs on the calling
/// thread only.
pub fn bench_pair_scoring(n_pairs: usize, bits: usize, repetitions: usize, rng: &mut SeededRng) -> Result<BenchResult> {
    if n_pairs == 0 || bits == 0 || repetitions == 0 {
        return Err(Error::InvalidArgument("benchmark sizes must be positive".into()));
    }
    let pool = (2 * n_pairs).clamp(2, BENCH_POOL);
    let data = (0..pool * bits)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            z as f32
        })
        .collect();
    let vectors = EmbeddingMatrix::new(pool, bits, data)?;
    let codes = hard_threshold_binarize(&vectors, 0.0)?;
    let pairs: Vec<(usize, usize)> = (0..n_pairs)
        .map(|_| (rng.random_range(0..pool), rng.random_range(0..pool)))
        .collect();

    let cosine_pass = || {
        let mut acc = 0.0;
        for &(a, b) in &pairs {
            let (u, v) = (black_box(vectors.row(a)), black_box(vectors.row(b)));
            acc += dot_f64(u, v) / (norm_f64(u) * norm_f64(v));
        }
        black_box(acc);
    };
    let hamming_pass = || {
        let mut acc = 0u64;
        for &(a, b) in &pairs {
            acc += u64::from(hamming_words(black_box(codes.row(a)), black_box(codes.row(b))));
        }
        black_box(acc);
    };

    let cosine_ns = median_ns_per_pair(cosine_pass, repetitions, n_pairs);
    let hamming_ns = median_ns_per_pair(hamming_pass, repetitions, n_pairs);
    Ok(BenchResult::new(hamming_ns, cosine_ns, bits, n_pairs, repetitions))
}

fn median_ns_per_pair(pass: impl Fn(), repetitions: usize, n_pairs: usize) -> f64 {
    pass();
    let mut samples: Vec<f64> = (0..repetitions)
        .map(|_| {
            let start = Instant::now();
            pass();
            start.elapsed().as_nanos() as f64 / n_pairs as f64
        })
        .collect();
    samples.sort_by(f64::total_cmp);
    let mid = samples.len() / 2;
    if samples.len() % 2 == 1 {
        samples[mid]
    } else {
        0.5 * (samples[mid - 1] + samples[mid])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn codes(rows: &[&[bool]]) -> BinaryCodeSet {
        BinaryCodeSet::from_bit_rows(rows).unwrap()
    }

    #[test]
    fn exact_copy_ranks_first() {
        let db = codes(&[&[true, false, true], &[false, false, true], &[true, true, true]]);
        let q = codes(&[&[false, false, true]]);
        let nn = knn_hamming(&q, &db, 1, SelfMask::None).unwrap();
        assert_eq!(nn[0].neighbors, vec![Neighbor { index: 1, score: 0 }]);
    }

    #[test]
    fn full_permutation_with_ties() {
        let db = codes(&[&[true, true], &[false, false], &[true, false], &[false, true]]);
        let q = codes(&[&[true, false]]);
        let nn = knn_hamming(&q, &db, 4, SelfMask::None).unwrap();
        let got: Vec<(usize, u32)> = nn[0].neighbors.iter().map(|n| (n.index, n.score)).collect();
        assert_eq!(got, vec![(2, 0), (0, 1), (1, 1), (3, 2)]);
    }

    #[test]
    fn self_mask() {
        let db = codes(&[&[true, true], &[true, true], &[false, false]]);
        let nn = knn_hamming(&db, &db, 2, SelfMask::SameIndex).unwrap();
        assert_eq!(nn[0].indices().collect::<Vec<_>>(), vec![1, 2]);
        assert_eq!(nn[1].indices().collect::<Vec<_>>(), vec![0, 2]);
        assert!(knn_hamming(&db, &db, 3, SelfMask::SameIndex).is_err());
    }

    #[test]
    fn argument_errors() {
        let db = codes(&[&[true, true]]);
        let q = codes(&[&[true, true, false]]);
        assert!(matches!(
            knn_hamming(&q, &db, 1, SelfMask::None),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            knn_hamming(&db, &db, 2, SelfMask::None),
            Err(Error::InvalidArgument(_))
        ));
        assert!(knn_hamming(&db, &db, 0, SelfMask::None).is_err());
    }

    #[test]
    fn cosine_examples() {
        let db = EmbeddingMatrix::from_rows(&[[1.0, 0.0], [0.0, 1.0]]).unwrap();
        let q = EmbeddingMatrix::from_rows(&[[0.0, 3.0]]).unwrap();
        let nn = knn_cosine(&q, &db, 2, SelfMask::None).unwrap();
        assert_eq!(nn[0].neighbors[0].index, 1);
        assert!((nn[0].neighbors[0].score - 1.0).abs() < 1e-12);
        assert_eq!(nn[0].neighbors[1].score, 0.0);
    }

    #[test]
    fn cosine_zero_row_is_named() {
        let db = EmbeddingMatrix::from_rows(&[[1.0, 0.0], [0.0, 0.0]]).unwrap();
        let err = knn_cosine(&db, &db, 1, SelfMask::None).unwrap_err();
        assert!(err.to_string().contains("row 1"), "{err}");
    }

    #[test]
    fn bench_bookkeeping() {
        let r = bench_pair_scoring(200, 256, 3, &mut SeededRng::new(0)).unwrap();
        assert_eq!(r.speedup, r.mean_ns_per_pair_cosine / r.mean_ns_per_pair_hamming);
        assert_eq!((r.bits, r.n_pairs, r.repetitions), (256, 200, 3));
        let json = serde_json::to_value(&r).unwrap();
        for key in [
            "mean_ns_per_pair_hamming",
            "mean_ns_per_pair_cosine",
            "speedup",
            "bits",
            "n_pairs",
            "repetitions",
        ] {
            assert!(json.get(key).is_some(), "{key}");
        }
    }
}
