use std::io::Write;
use std::path::{Path, PathBuf};

use binemb_core::autoencoder::{train, AdamConfig, StepLoss, TrainConfig};
use binemb_core::binarizers::{pca_fit, random_projection_fit, Binarizer, HardThresholdModel};
use binemb_core::evaluation::{
    random_neighbor_lists, recall_at_k, score_pairs_cosine, score_pairs_hamming, select_threshold, EvalReport,
    PairMetrics, ScoredPairSet,
};
use binemb_core::retrieval::{bench_pair_scoring, knn_cosine, knn_hamming, Neighbor, NeighborList, SelfMask};
use binemb_core::storage::{self, FileKind, SyntheticCorpusSpec};
use binemb_core::{BinarizerModel, BinaryCodeSet, EmbeddingMatrix, Method, SeededRng};
use serde::Serialize;

use crate::args::{BenchArgs, Cli, Command, EncodeArgs, EvalArgs, EvalOptions, FitArgs, KnnArgs, SynthArgs, TrainArgs};
use crate::error::{CliError, CliResult};

/// Default code width for methods that do not fix it.
const DEFAULT_BITS: usize = 2048;
const DEFAULT_LAMBDA_SP: f64 = 0.8;

/// Independent random streams derived from the one user seed.
pub const STREAM_PAIRS: u64 = 1;
pub const STREAM_RANDOM_BASELINE: u64 = 2;
pub const STREAM_BENCH: u64 = 3;

pub fn run(cli: Cli) -> CliResult<()> {
    let seed = cli.seed;
    match cli.command {
        Command::Synth(a) => synth(&a, seed),
        Command::Fit(a) => fit(&a, seed),
        Command::Encode(a) => encode(&a),
        Command::Knn(a) => knn(&a),
        Command::Eval(a) => eval(&a, seed),
        Command::Bench(a) => bench(&a, seed),
        Command::Sweep(a) => crate::sweep::run(&a, seed),
    }
}

/// Prints `value` to stdout. A reader that closed the pipe early is not an
/// error.
pub fn print_json<T: Serialize>(value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::io("<stdout>", e)),
        _ => Ok(()),
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn synth(a: &SynthArgs, seed: u64) -> CliResult<()> {
    let spec = SyntheticCorpusSpec {
        n_points: a.points,
        dim: a.dim,
        n_clusters: a.clusters,
        spread: a.spread,
        seed,
    };
    let corpus = storage::generate_synthetic_corpus(&spec)?;
    storage::save_embeddings(&a.output, &corpus.embeddings)?;
    if let Some(path) = &a.pairs {
        let mut rng = SeededRng::with_stream(seed, STREAM_PAIRS);
        let pairs = corpus.sample_pairs(a.n_pairs, a.same_fraction, &mut rng)?;
        storage::save_pairs(path, &pairs)?;
    }
    if let Some(path) = &a.labels {
        let text: String = corpus.clusters.iter().map(|c| format!("{c}\n")).collect();
        std::fs::write(path, text).map_err(|e| CliError::io(path, e))?;
    }

    #[derive(Serialize)]
    struct Summary<'a> {
        #[serde(flatten)]
        spec: SyntheticCorpusSpec,
        embeddings: &'a Path,
        pairs: Option<&'a Path>,
        n_pairs: Option<usize>,
        labels: Option<&'a Path>,
    }
    print_json(&Summary {
        spec,
        embeddings: &a.output,
        pairs: a.pairs.as_deref(),
        n_pairs: a.pairs.as_ref().map(|_| a.n_pairs),
        labels: a.labels.as_deref(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct FitSummary {
    pub method: Method,
    pub bits: usize,
    pub input_dim: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_sp: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_loss: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epochs_run: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<PathBuf>,
}

pub struct Fitted {
    pub model: BinarizerModel,
    pub summary: FitSummary,
    pub history: Vec<StepLoss>,
}

/// Fits `method` on `h`. `lambda_override` replaces `--lambda-sp` (used by
/// sweeps).
pub fn fit_model(
    h: &EmbeddingMatrix,
    method: Method,
    bits: Option<usize>,
    lambda_override: Option<f64>,
    t: &TrainArgs,
    seed: u64,
) -> CliResult<Fitted> {
    let mut rng = SeededRng::new(seed);
    let mut summary = FitSummary {
        method,
        bits: 0,
        input_dim: h.dim(),
        seed,
        lambda_sp: None,
        threshold: None,
        final_loss: None,
        epochs_run: None,
        model: None,
    };
    let mut history = Vec::new();
    let lambda = lambda_override.or(t.lambda_sp);
    if lambda.is_some() && !matches!(method, Method::Autoencoder | Method::AutoencoderSp) {
        return Err(CliError::Usage(format!(
            "--lambda-sp does not apply to method {method}"
        )));
    }
    let model: BinarizerModel = match method {
        Method::HardThreshold => {
            if let Some(b) = bits.filter(|&b| b != h.dim()) {
                return Err(CliError::Usage(format!(
                    "ht codes have one bit per input dimension ({}), got --bits {b}",
                    h.dim()
                )));
            }
            let s = match &t.validation_pairs {
                Some(path) => {
                    let pairs = storage::load_pairs(path)?;
                    pairs.check_indices(h.rows())?;
                    select_threshold(h, &pairs, &[])?
                }
                None => t.threshold,
            };
            summary.threshold = Some(s);
            HardThresholdModel::new(s, h.dim())?.into()
        }
        Method::RandomProjection => random_projection_fit(h.dim(), bits.unwrap_or(DEFAULT_BITS), &mut rng)?.into(),
        Method::Pca => pca_fit(h, bits.unwrap_or(DEFAULT_BITS))?.into(),
        Method::Autoencoder | Method::AutoencoderSp => {
            let lambda_sp = match method {
                Method::Autoencoder => match lambda {
                    None | Some(0.0) => 0.0,
                    Some(x) => {
                        return Err(CliError::Usage(format!(
                            "method ae trains without the semantic term; use ae-sp for --lambda-sp {x}"
                        )))
                    }
                },
                _ => lambda.unwrap_or(DEFAULT_LAMBDA_SP),
            };
            let cfg = TrainConfig {
                bits: bits.unwrap_or(DEFAULT_BITS),
                lambda_sp,
                batch_size: t.batch_size,
                epochs: t.epochs,
                mode: t.mode.into(),
                adam: AdamConfig {
                    learning_rate: t.lr,
                    ..AdamConfig::default()
                },
                triplets_per_batch: None,
                early_stop: (!t.no_early_stop).then_some(t.early_stop),
            };
            let report = train(h, &cfg, &mut rng)?;
            summary.lambda_sp = Some(lambda_sp);
            summary.final_loss = report.final_loss();
            summary.epochs_run = Some(report.epochs_run());
            history = report.history;
            report.model.into()
        }
    };
    summary.bits = model.bits();
    Ok(Fitted {
        model,
        summary,
        history,
    })
}

fn fit(a: &FitArgs, seed: u64) -> CliResult<()> {
    let h = storage::load_embeddings(&a.input)?;
    let fitted = fit_model(&h, a.method, a.bits, None, &a.train, seed)?;
    storage::save_model(&a.output, &fitted.model)?;
    if let Some(path) = &a.history {
        let mut text = String::new();
        for step in &fitted.history {
            text.push_str(&serde_json::to_string(step)?);
            text.push('\n');
        }
        std::fs::write(path, text).map_err(|e| CliError::io(path, e))?;
    }
    let mut summary = fitted.summary;
    summary.model = Some(a.output.clone());
    print_json(&summary)
}

fn encode(a: &EncodeArgs) -> CliResult<()> {
    let model = storage::load_model(&a.model)?;
    let h = storage::load_embeddings(&a.input)?;
    let codes = model.binarize(&h)?;
    storage::save_codes(&a.output, &codes)?;

    let source = h.rows() * h.dim() * std::mem::size_of::<f32>();
    print_json(&serde_json::json!({
        "method": model.kind(),
        "rows": codes.rows(),
        "bits": codes.bits(),
        "codes": a.output,
        "payload_bytes": codes.payload_bytes(),
        "source_payload_bytes": source,
        "payload_ratio": codes.payload_bytes() as f64 / source as f64,
    }))
}

/// Nearest-neighbor reference for recall.
pub enum Oracle {
    Cosine(EmbeddingMatrix),
    Hamming(BinaryCodeSet),
}

impl Oracle {
    pub fn load(path: &Path) -> CliResult<Self> {
        match storage::peek_kind(path)? {
            FileKind::Embeddings => Ok(Oracle::Cosine(storage::load_embeddings(path)?)),
            FileKind::Codes => Ok(Oracle::Hamming(storage::load_codes(path)?)),
            FileKind::Model => Err(CliError::Usage(format!(
                "{} is a model file, not embeddings or codes",
                path.display()
            ))),
        }
    }

    fn rows(&self) -> usize {
        match self {
            Oracle::Cosine(m) => m.rows(),
            Oracle::Hamming(c) => c.rows(),
        }
    }

    fn neighbors(&self, queries: &[usize], k: usize) -> CliResult<Vec<NeighborList<()>>> {
        let lists = match self {
            Oracle::Cosine(m) => strip(knn_cosine(&m.select_rows(queries)?, m, k, SelfMask::SameIndex)?),
            Oracle::Hamming(c) => strip(knn_hamming(&c.select_rows(queries)?, c, k, SelfMask::SameIndex)?),
        };
        Ok(lists)
    }
}

fn strip<S>(lists: Vec<NeighborList<S>>) -> Vec<NeighborList<()>> {
    lists
        .into_iter()
        .map(|l| NeighborList {
            query: l.query,
            neighbors: l
                .neighbors
                .into_iter()
                .map(|n| Neighbor {
                    index: n.index,
                    score: (),
                })
                .collect(),
        })
        .collect()
}

/// Pair metrics and recall for one code set.
pub fn evaluate(
    codes: &BinaryCodeSet,
    embeddings: Option<&EmbeddingMatrix>,
    oracle: Option<&Oracle>,
    pairs: Option<&ScoredPairSet>,
    opts: &EvalOptions,
    seed: u64,
) -> CliResult<EvalReport> {
    if pairs.is_none() && oracle.is_none() {
        return Err(CliError::Usage(
            "nothing to evaluate: give --pairs and/or an oracle".into(),
        ));
    }
    let mut report = EvalReport {
        bits: codes.bits(),
        seed: Some(seed),
        ..EvalReport::default()
    };

    if let Some(pairs) = pairs {
        pairs.check_indices(codes.rows())?;
        report.set_pair_metrics(PairMetrics::compute(&score_pairs_hamming(codes, pairs)?, pairs)?);
        if let Some(h) = embeddings {
            pairs.check_indices(h.rows())?;
            report.cosine_baseline = Some(PairMetrics::compute(&score_pairs_cosine(h, pairs)?, pairs)?);
        }
    }

    if let Some(oracle) = oracle {
        if oracle.rows() != codes.rows() {
            return Err(CliError::Usage(format!(
                "oracle has {} rows but the codes have {}",
                oracle.rows(),
                codes.rows()
            )));
        }
        let k_max = *opts
            .k
            .iter()
            .max()
            .ok_or_else(|| CliError::Usage("at least one --k is required".into()))?;
        let n_queries = opts.max_queries.unwrap_or(codes.rows()).min(codes.rows());
        let queries: Vec<usize> = (0..n_queries).collect();
        let binary = knn_hamming(&codes.select_rows(&queries)?, codes, k_max, SelfMask::SameIndex)?;
        let truth = oracle.neighbors(&queries, k_max)?;
        let mut rng = SeededRng::with_stream(seed, STREAM_RANDOM_BASELINE);
        let random = random_neighbor_lists(n_queries, codes.rows(), k_max, SelfMask::SameIndex, &mut rng)?;
        for &k in &opts.k {
            report.recall_at_k.insert(k, recall_at_k(&binary, &truth, k)?);
            report.random_recall_at_k.insert(k, recall_at_k(&random, &truth, k)?);
        }
    }
    Ok(report)
}

fn eval(a: &EvalArgs, seed: u64) -> CliResult<()> {
    let codes = storage::load_codes(&a.codes)?;
    let embeddings = a.embeddings.as_deref().map(storage::load_embeddings).transpose()?;
    let oracle = match (&a.oracle, &embeddings) {
        (Some(path), _) => Some(Oracle::load(path)?),
        (None, Some(h)) => Some(Oracle::Cosine(h.clone())),
        (None, None) => None,
    };
    let pairs = a.eval.pairs.as_deref().map(storage::load_pairs).transpose()?;
    let mut report = evaluate(
        &codes,
        embeddings.as_ref(),
        oracle.as_ref(),
        pairs.as_ref(),
        &a.eval,
        seed,
    )?;
    report.method = a.method.map(|m| m.to_string());
    report.lambda_sp = a.lambda_sp;
    if let Some(path) = &a.output {
        write_json(path, &report)?;
    }
    if a.table {
        print!("{report}");
        Ok(())
    } else {
        print_json(&report)
    }
}

fn knn(a: &KnnArgs) -> CliResult<()> {
    let kind = storage::peek_kind(&a.database)?;
    if let Some(q) = &a.queries {
        let qk = storage::peek_kind(q)?;
        if qk != kind {
            return Err(CliError::Usage(format!(
                "queries ({qk:?}) and database ({kind:?}) must be the same kind of file"
            )));
        }
    }
    let mask = if a.queries.is_none() && !a.include_self {
        SelfMask::SameIndex
    } else {
        SelfMask::None
    };

    #[derive(Serialize)]
    struct Output<S> {
        metric: &'static str,
        k: usize,
        lists: Vec<NeighborList<S>>,
    }
    let value = match kind {
        FileKind::Codes => {
            let db = storage::load_codes(&a.database)?;
            let q = a.queries.as_deref().map(storage::load_codes).transpose()?;
            let lists = knn_hamming(q.as_ref().unwrap_or(&db), &db, a.k, mask)?;
            serde_json::to_value(Output {
                metric: "hamming",
                k: a.k,
                lists,
            })?
        }
        FileKind::Embeddings => {
            let db = storage::load_embeddings(&a.database)?;
            let q = a.queries.as_deref().map(storage::load_embeddings).transpose()?;
            let lists = knn_cosine(q.as_ref().unwrap_or(&db), &db, a.k, mask)?;
            serde_json::to_value(Output {
                metric: "cosine",
                k: a.k,
                lists,
            })?
        }
        FileKind::Model => {
            return Err(CliError::Usage(format!(
                "{} is a model file; search needs codes or embeddings",
                a.database.display()
            )))
        }
    };
    match &a.output {
        Some(path) => write_json(path, &value),
        None => print_json(&value),
    }
}

fn bench(a: &BenchArgs, seed: u64) -> CliResult<()> {
    let mut rng = SeededRng::with_stream(seed, STREAM_BENCH);
    let result = bench_pair_scoring(a.n_pairs, a.bits, a.repetitions, &mut rng)?;
    print_json(&result)
}
