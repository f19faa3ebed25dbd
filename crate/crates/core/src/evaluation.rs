//! Sentence-matching metrics: correlation of pair scores with gold scores,
//! mean-threshold pair classification, and recall of binary neighbors
//! against the cosine oracle.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::binarizers::{hard_threshold_binarize, THRESHOLD_CANDIDATES};
use crate::distance::cosine_similarity;
use crate::error::{Error, Result};
use crate::retrieval::{Neighbor, NeighborList, SelfMask};
use crate::{BinaryCodeSet, EmbeddingMatrix, SeededRng};

fn check_pair_lengths(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "correlation needs at least two points, got {}",
            x.len()
        )));
    }
    if let Some(i) = x.iter().chain(y).position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("correlation input element {i}")));
    }
    Ok(())
}

/// Sample Pearson correlation coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair_lengths(x, y)?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::DegenerateInput("correlation of a constant sequence".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// 1-based ranks; tied values share the average of their positions.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && x[order[end]] == x[order[start]] {
            end += 1;
        }
        // positions start..end (0-based) -> mean 1-based rank
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

/// Spearman rank correlation: Pearson on average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair_lengths(x, y)?;
    pearson(&average_ranks(x), &average_ranks(y))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredPair {
    pub a: usize,
    pub b: usize,
    pub gold: f64,
}

/// Sentence pairs (as row indices) with gold relatedness scores.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ScoredPairSet {
    pub pairs: Vec<ScoredPair>,
}

impl ScoredPairSet {
    pub fn new(pairs: Vec<ScoredPair>) -> Result<Self> {
        if let Some(i) = pairs.iter().position(|p| !p.gold.is_finite()) {
            return Err(Error::NonFinite(format!("gold score of pair {i}")));
        }
        Ok(Self { pairs })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn gold(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.gold).collect()
    }

    pub fn check_indices(&self, rows: usize) -> Result<()> {
        match self.pairs.iter().position(|p| p.a >= rows || p.b >= rows) {
            Some(i) => Err(Error::InvalidArgument(format!(
                "pair {i} ({}, {}) out of range for {rows} rows",
                self.pairs[i].a, self.pairs[i].b
            ))),
            None => Ok(()),
        }
    }

    /// Binary gold labels by the same mean-threshold rule used for
    /// predictions (for 0/1 gold scores this is the gold label itself).
    pub fn gold_labels(&self) -> Vec<bool> {
        classify_pairs_mean_threshold(&self.gold())
    }
}

/// Per-pair negated Hamming distance, so larger means more similar.
pub fn score_pairs_hamming(codes: &BinaryCodeSet, pairs: &ScoredPairSet) -> Result<Vec<f64>> {
    pairs.check_indices(codes.rows())?;
    pairs
        .pairs
        .iter()
        .map(|p| Ok(-f64::from(codes.distance_to(p.a, codes, p.b)?)))
        .collect()
}

/// Per-pair cosine similarity of the continuous embeddings.
pub fn score_pairs_cosine(h: &EmbeddingMatrix, pairs: &ScoredPairSet) -> Result<Vec<f64>> {
    pairs.check_indices(h.rows())?;
    pairs
        .pairs
        .iter()
        .map(|p| cosine_similarity(h.row(p.a), h.row(p.b)))
        .collect()
}

/// Label a pair positive iff its score exceeds the mean score of the set.
pub fn classify_pairs_mean_threshold(scores: &[f64]) -> Vec<bool> {
    if scores.is_empty() {
        return Vec::new();
    }
    let mean = scores.iter().sum::<f64>() / scores.len() as f64;
    scores.iter().map(|&s| s > mean).collect()
}

pub fn accuracy(predicted: &[bool], gold: &[bool]) -> Result<f64> {
    if predicted.len() != gold.len() || predicted.is_empty() {
        return Err(Error::DimensionMismatch {
            expected: gold.len(),
            found: predicted.len(),
        });
    }
    let hits = predicted.iter().zip(gold).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / gold.len() as f64)
}

/// Mean over queries of `|top-k(binary) ∩ top-k(oracle)| / k`.
pub fn recall_at_k<A, B>(binary: &[NeighborList<A>], oracle: &[NeighborList<B>], k: usize) -> Result<f64> {
    if binary.len() != oracle.len() || binary.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "query sets differ: {} binary lists vs {} oracle lists",
            binary.len(),
            oracle.len()
        )));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("k must be positive".into()));
    }
    let mut total = 0.0;
    for (b, o) in binary.iter().zip(oracle) {
        if b.query != o.query {
            return Err(Error::InvalidArgument(format!(
                "query mismatch: {} vs {}",
                b.query, o.query
            )));
        }
        if b.neighbors.len() < k || o.neighbors.len() < k {
            return Err(Error::InvalidArgument(format!(
                "query {} has fewer than {k} neighbors",
                b.query
            )));
        }
        let truth: HashSet<usize> = o.indices().take(k).collect();
        let hits = b.indices().take(k).filter(|i| truth.contains(i)).count();
        total += hits as f64 / k as f64;
    }
    Ok(total / binary.len() as f64)
}

/// Neighbor lists drawn uniformly at random without replacement; the
/// chance-level reference for [`recall_at_k`].
pub fn random_neighbor_lists(
    queries: usize,
    database: usize,
    k: usize,
    mask: SelfMask,
    rng: &mut SeededRng,
) -> Result<Vec<NeighborList<()>>> {
    let pool = match mask {
        SelfMask::None => database,
        SelfMask::SameIndex => database.saturating_sub(1),
    };
    if k == 0 || k > pool {
        return Err(Error::InvalidArgument(format!("k = {k} exceeds {pool} candidates")));
    }
    Ok((0..queries)
        .map(|q| {
            let neighbors = sample(rng, pool, k)
                .into_iter()
                .map(|i| {
                    let index = if mask == SelfMask::SameIndex && i >= q {
                        i + 1
                    } else {
                        i
                    };
                    Neighbor { index, score: () }
                })
                .collect();
            NeighborList { query: q, neighbors }
        })
        .collect())
}

/// Picks the hard threshold whose codes give the highest Spearman
/// correlation with the gold scores of a validation pair set.
pub fn select_threshold(h: &EmbeddingMatrix, pairs: &ScoredPairSet, candidates: &[f32]) -> Result<f32> {
    let candidates = if candidates.is_empty() {
        &THRESHOLD_CANDIDATES[..]
    } else {
        candidates
    };
    let gold = pairs.gold();
    let mut best: Option<(f32, f64)> = None;
    for &s in candidates {
        let codes = hard_threshold_binarize(h, s)?;
        let rho = match spearman(&score_pairs_hamming(&codes, pairs)?, &gold) {
            Ok(r) => r,
            Err(Error::DegenerateInput(_)) => continue,
            Err(e) => return Err(e),
        };
        if best.is_none_or(|(_, b)| rho > b) {
            best = Some((s, rho));
        }
    }
    best.map(|(s, _)| s)
        .ok_or_else(|| Error::DegenerateInput("no threshold produced varying scores".into()))
}

/// Correlations and accuracy of one scoring function on a pair set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairMetrics {
    pub pearson: f64,
    pub spearman: f64,
    pub accuracy: f64,
}

impl PairMetrics {
    pub fn compute(scores: &[f64], pairs: &ScoredPairSet) -> Result<Self> {
        let gold = pairs.gold();
        Ok(Self {
            pearson: pearson(scores, &gold)?,
            spearman: spearman(scores, &gold)?,
            accuracy: accuracy(&classify_pairs_mean_threshold(scores), &pairs.gold_labels())?,
        })
    }
}

/// Everything measured for one configuration.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EvalReport {
    pub method: Option<String>,
    pub bits: usize,
    pub seed: Option<u64>,
    pub lambda_sp: Option<f64>,
    pub pearson: Option<f64>,
    pub spearman: Option<f64>,
    pub accuracy: Option<f64>,
    /// Keys are `k`.
    pub recall_at_k: BTreeMap<usize, f64>,
    /// The same pair metrics computed with cosine similarity on the
    /// continuous embeddings, when available.
    pub cosine_baseline: Option<PairMetrics>,
    /// Recall of uniformly random neighbor lists, per `k`.
    pub random_recall_at_k: BTreeMap<usize, f64>,
}

impl EvalReport {
    pub fn set_pair_metrics(&mut self, m: PairMetrics) {
        self.pearson = Some(m.pearson);
        self.spearman = Some(m.spearman);
        self.accuracy = Some(m.accuracy);
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"))
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "method {}  bits {}  seed {}  lambda_sp {}",
            self.method.as_deref().unwrap_or("-"),
            self.bits,
            self.seed.map_or_else(|| "-".into(), |s| s.to_string()),
            opt(self.lambda_sp),
        )?;
        let row = |f: &mut fmt::Formatter<'_>, name: &str, a: Option<f64>, b: Option<f64>, c: Option<f64>| {
            writeln!(f, "{:<12}{:>10}{:>10}{:>10}", name, opt(a), opt(b), opt(c))
        };
        writeln!(f, "{:<12}{:>10}{:>10}{:>10}", "metric", "hamming", "cosine", "random")?;
        let base = self.cosine_baseline;
        row(f, "pearson", self.pearson, base.map(|b| b.pearson), None)?;
        row(f, "spearman", self.spearman, base.map(|b| b.spearman), None)?;
        row(f, "accuracy", self.accuracy, base.map(|b| b.accuracy), None)?;
        for (k, r) in &self.recall_at_k {
            row(
                f,
                &format!("recall@{k}"),
                Some(*r),
                None,
                self.random_recall_at_k.get(k).copied(),
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pearson_examples() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 3.0).collect();
        assert!((pearson(&x, &y).unwrap() - 1.0).abs() < 1e-12);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson(&x, &neg).unwrap() + 1.0).abs() < 1e-12);
        // x = [1,2,3], y = [1,3,2]: cov = 0.5 * 2 / 2... computed by hand:
        // dx = [-1,0,1], dy = [-1,1,0]; sxy = 1, sxx = syy = 2 -> 0.5
        assert!((pearson(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn pearson_errors() {
        assert!(matches!(
            pearson(&[1.0, 1.0], &[1.0, 2.0]),
            Err(Error::DegenerateInput(_))
        ));
        assert!(pearson(&[1.0], &[1.0]).is_err());
        assert!(pearson(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn spearman_examples() {
        let x = [0.1, 0.5, 0.7, 2.0, 3.5];
        let y: Vec<f64> = x.iter().map(|v: &f64| v.exp() * 10.0).collect();
        assert!((spearman(&x, &y).unwrap() - 1.0).abs() < 1e-12);
        let rev: Vec<f64> = x.iter().rev().copied().collect();
        assert!((spearman(&x, &rev).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn spearman_with_ties_matches_rank_oracle() {
        // Oracle by hand: ranks of [1,1,2] are [1.5,1.5,3]; of [1,2,3] are
        // [1,2,3]. dx = [-0.5,-0.5,1], dy = [-1,0,1]; sxy = 1.5,
        // sxx = 1.5, syy = 2 -> 1.5 / sqrt(3) = 0.8660254037844387.
        let rho = spearman(&[1.0, 1.0, 2.0], &[1.0, 2.0, 3.0]).unwrap();
        assert!((rho - 0.866_025_403_784_438_6).abs() < 1e-12, "{rho}");
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn hamming_scores() {
        let codes = BinaryCodeSet::from_bit_rows(&[
            vec![true, false, true],
            vec![true, false, true],
            vec![false, true, false],
        ])
        .unwrap();
        let pairs = ScoredPairSet::new(vec![
            ScoredPair { a: 0, b: 1, gold: 5.0 },
            ScoredPair { a: 0, b: 2, gold: 0.0 },
        ])
        .unwrap();
        assert_eq!(score_pairs_hamming(&codes, &pairs).unwrap(), vec![0.0, -3.0]);
        let bad = ScoredPairSet::new(vec![ScoredPair { a: 0, b: 3, gold: 1.0 }]).unwrap();
        assert!(score_pairs_hamming(&codes, &bad).is_err());
    }

    #[test]
    fn mean_threshold_examples() {
        assert_eq!(classify_pairs_mean_threshold(&[1.0, 3.0]), vec![false, true]);
        assert_eq!(classify_pairs_mean_threshold(&[2.0, 2.0, 2.0]), vec![false; 3]);
    }

    #[test]
    fn recall_examples() {
        let list = |q: usize, idx: &[usize]| NeighborList {
            query: q,
            neighbors: idx.iter().map(|&index| Neighbor { index, score: 0u32 }).collect(),
        };
        let a = vec![list(0, &[1, 2, 3]), list(1, &[0, 2, 3])];
        assert_eq!(recall_at_k(&a, &a, 3).unwrap(), 1.0);
        let b = vec![list(0, &[4, 5, 6]), list(1, &[4, 5, 6])];
        assert_eq!(recall_at_k(&a, &b, 3).unwrap(), 0.0);
        let c = vec![list(0, &[3, 9, 1]), list(1, &[7, 8, 9])];
        assert!((recall_at_k(&c, &a, 3).unwrap() - (2.0 / 3.0) / 2.0).abs() < 1e-12);
        assert!(recall_at_k(&a, &b[..1], 3).is_err());
        assert!(recall_at_k(&a, &a, 4).is_err());
    }

    #[test]
    fn random_lists_skip_self() {
        let lists = random_neighbor_lists(20, 20, 19, SelfMask::SameIndex, &mut SeededRng::new(2)).unwrap();
        for l in &lists {
            let mut idx: Vec<usize> = l.indices().collect();
            idx.sort();
            let expected: Vec<usize> = (0..20).filter(|&i| i != l.query).collect();
            assert_eq!(idx, expected);
        }
    }

    #[test]
    fn report_json_has_stable_keys() {
        let mut r = EvalReport {
            method: Some("pca".into()),
            bits: 64,
            ..Default::default()
        };
        r.recall_at_k.insert(10, 0.5);
        let v = serde_json::to_value(&r).unwrap();
        for key in [
            "method",
            "bits",
            "seed",
            "lambda_sp",
            "pearson",
            "spearman",
            "accuracy",
            "recall_at_k",
        ] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["recall_at_k"]["10"], 0.5);
        assert!(r.to_string().contains("recall@10"));
    }

    proptest! {
        #[test]
        fn correlations_affine_invariant(
            xs in prop::collection::vec(-100.0f64..100.0, 3..40),
            noise in prop::collection::vec(-10.0f64..10.0, 40),
            scale in 0.01f64..100.0,
            shift in -50.0f64..50.0,
        ) {
            let ys: Vec<f64> = xs.iter().zip(&noise).map(|(x, n)| x + n).collect();
            let p = pearson(&xs, &ys);
            prop_assume!(p.is_ok());
            let tx: Vec<f64> = xs.iter().map(|x| scale * x + shift).collect();
            prop_assert!((pearson(&tx, &ys).unwrap() - p.unwrap()).abs() < 1e-9);
            let s = spearman(&xs, &ys).unwrap();
            let cubed: Vec<f64> = xs.iter().map(|x| x.powi(3) + shift).collect();
            prop_assert!((spearman(&cubed, &ys).unwrap() - s).abs() < 1e-12);
        }

        #[test]
        fn mean_threshold_affine_invariant(
            scores in prop::collection::vec(-1000i32..1000, 1..50),
            scale in 1i32..16,
            shift in -1000i32..1000,
        ) {
            // Integer scores: any score that differs from the mean differs by
            // at least 1/n, far above rounding error.
            let s: Vec<f64> = scores.iter().map(|&v| f64::from(v)).collect();
            let t: Vec<f64> = scores.iter().map(|&v| f64::from(v * scale + shift)).collect();
            prop_assert_eq!(classify_pairs_mean_threshold(&s), classify_pairs_mean_threshold(&t));
        }
    }
}
