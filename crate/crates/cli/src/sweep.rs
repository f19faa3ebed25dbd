//! Grid runs over methods, code widths and `lambda_sp`. Each finished cell is
//! saved as its own report, so an interrupted sweep resumes where it stopped.

use std::path::{Path, PathBuf};

use binemb_core::evaluation::EvalReport;
use binemb_core::{storage, EmbeddingMatrix, Method};
use serde::Serialize;

use crate::args::SweepArgs;
use crate::commands::{evaluate, fit_model, print_json, Oracle};
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy)]
struct Cell {
    method: Method,
    bits: usize,
    lambda_sp: Option<f64>,
}

impl Cell {
    fn name(&self) -> String {
        match self.lambda_sp {
            Some(l) if self.method == Method::AutoencoderSp => format!("{}-b{}-l{l}", self.method, self.bits),
            _ => format!("{}-b{}", self.method, self.bits),
        }
    }
}

fn cells(a: &SweepArgs, input_dim: usize) -> Vec<Cell> {
    let mut out = Vec::new();
    for &method in &a.methods {
        match method {
            Method::HardThreshold => out.push(Cell {
                method,
                bits: input_dim,
                lambda_sp: None,
            }),
            Method::AutoencoderSp => {
                for &bits in &a.bits {
                    for &l in &a.lambda_grid {
                        out.push(Cell {
                            method,
                            bits,
                            lambda_sp: Some(l),
                        });
                    }
                }
            }
            Method::Autoencoder => out.extend(a.bits.iter().map(|&bits| Cell {
                method,
                bits,
                lambda_sp: Some(0.0),
            })),
            _ => out.extend(a.bits.iter().map(|&bits| Cell {
                method,
                bits,
                lambda_sp: None,
            })),
        }
    }
    out
}

#[derive(Debug, Serialize)]
struct CellStatus {
    name: String,
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

fn run_cell(
    cell: &Cell,
    h: &EmbeddingMatrix,
    oracle: &Oracle,
    pairs: Option<&binemb_core::evaluation::ScoredPairSet>,
    a: &SweepArgs,
    seed: u64,
) -> CliResult<EvalReport> {
    // ae cells never take the lambda override; their lambda is fixed at 0.
    let lambda = match cell.method {
        Method::AutoencoderSp => cell.lambda_sp,
        _ => None,
    };
    let fitted = fit_model(h, cell.method, Some(cell.bits), lambda, &a.train, seed)?;
    let codes = binemb_core::binarizers::Binarizer::binarize(&fitted.model, h)?;
    let mut report = evaluate(&codes, Some(h), Some(oracle), pairs, &a.eval, seed)?;
    report.method = Some(cell.method.to_string());
    report.lambda_sp = cell.lambda_sp;
    Ok(report)
}

fn write_atomic(path: &Path, text: &str) -> CliResult<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, text).map_err(|e| CliError::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn run(a: &SweepArgs, seed: u64) -> CliResult<()> {
    if a.train.lambda_sp.is_some() {
        return Err(CliError::Usage("sweep takes --lambda-grid, not --lambda-sp".into()));
    }
    let h = storage::load_embeddings(&a.input)?;
    let pairs = a.eval.pairs.as_deref().map(storage::load_pairs).transpose()?;
    let oracle = Oracle::Cosine(h.clone());
    let cell_dir = a.out_dir.join("cells");
    std::fs::create_dir_all(&cell_dir).map_err(|e| CliError::io(&cell_dir, e))?;

    let csv_path = a.out_dir.join("sweep.csv");
    let mut csv = csv::Writer::from_path(&csv_path)?;
    let mut header: Vec<String> = [
        "method",
        "bits",
        "lambda_sp",
        "seed",
        "status",
        "pearson",
        "spearman",
        "accuracy",
    ]
    .map(String::from)
    .to_vec();
    header.extend(["cosine_pearson", "cosine_spearman", "cosine_accuracy"].map(String::from));
    header.extend(a.eval.k.iter().map(|k| format!("recall@{k}")));
    header.extend(a.eval.k.iter().map(|k| format!("random_recall@{k}")));
    header.push("error".into());
    csv.write_record(&header)?;

    let mut statuses = Vec::new();
    for cell in cells(a, h.dim()) {
        let name = cell.name();
        let path: PathBuf = cell_dir.join(format!("{name}.json"));
        let (report, status) = if path.exists() {
            let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
            (Ok(serde_json::from_str::<EvalReport>(&text)?), "resumed")
        } else {
            log::info!("sweep cell {name}");
            let r = run_cell(&cell, &h, &oracle, pairs.as_ref(), a, seed);
            if let Ok(report) = &r {
                write_atomic(&path, &(serde_json::to_string_pretty(report)? + "\n"))?;
            }
            (r, "ok")
        };

        let mut row = vec![
            cell.method.to_string(),
            cell.bits.to_string(),
            fmt_opt(cell.lambda_sp),
            seed.to_string(),
        ];
        match &report {
            Ok(r) => {
                row.push("ok".into());
                row.extend([r.pearson, r.spearman, r.accuracy].map(fmt_opt));
                let base = r.cosine_baseline;
                row.extend(
                    [
                        base.map(|b| b.pearson),
                        base.map(|b| b.spearman),
                        base.map(|b| b.accuracy),
                    ]
                    .map(fmt_opt),
                );
                row.extend(a.eval.k.iter().map(|k| fmt_opt(r.recall_at_k.get(k).copied())));
                row.extend(a.eval.k.iter().map(|k| fmt_opt(r.random_recall_at_k.get(k).copied())));
                row.push(String::new());
            }
            Err(e) => {
                log::warn!("sweep cell {name} failed: {e}");
                row.push("failed".into());
                row.extend(std::iter::repeat_n(String::new(), 6 + 2 * a.eval.k.len()));
                row.push(format!("{}: {e}", e.kind()));
            }
        }
        csv.write_record(&row)?;
        csv.flush().map_err(|e| CliError::io(&csv_path, e))?;
        statuses.push(CellStatus {
            name,
            status: if report.is_ok() { status } else { "failed" },
            error: report.err().map(|e| e.to_string()),
        });
    }
    csv.flush().map_err(|e| CliError::io(&csv_path, e))?;

    let count = |s: &str| statuses.iter().filter(|c| c.status == s).count();
    print_json(&serde_json::json!({
        "csv": csv_path,
        "cells": statuses.len(),
        "ok": count("ok"),
        "resumed": count("resumed"),
        "failed": count("failed"),
        "results": statuses,
    }))
}
