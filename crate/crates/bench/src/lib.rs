//! Fixtures shared by the benchmarks.

use binemb_core::binarizers::hard_threshold_binarize;
use binemb_core::storage::{generate_synthetic_corpus, SyntheticCorpusSpec};
use binemb_core::{BinaryCodeSet, EmbeddingMatrix};

/// `rows` independent zero-mean Gaussian vectors.
pub fn gaussian_rows(rows: usize, dim: usize, seed: u64) -> EmbeddingMatrix {
    // One cluster per point: each row is its own Gaussian center plus noise.
    generate_synthetic_corpus(&SyntheticCorpusSpec {
        n_points: rows,
        dim,
        n_clusters: rows,
        spread: 1.0,
        seed,
    })
    .expect("valid fixture spec")
    .embeddings
}

/// Sign codes of [`gaussian_rows`]; each bit is set with probability 1/2.
pub fn random_codes(rows: usize, bits: usize, seed: u64) -> BinaryCodeSet {
    hard_threshold_binarize(&gaussian_rows(rows, bits, seed), 0.0).expect("valid fixture")
}
