//! On-disk formats and the synthetic corpus generator.
//!
//! All three binary formats share a 20-byte little-endian header:
//!
//! | offset | size | field                                   |
//! |-------:|-----:|-----------------------------------------|
//! | 0      | 4    | magic: `BEMB`, `BCOD` or `BMDL`         |
//! | 4      | 4    | version (`u32`, currently 1)            |
//! | 8      | 8    | rows (`u64`)                            |
//! | 16     | 4    | dim or bits (`u32`)                     |
//!
//! * `BEMB`: `rows x dim` `f32` values, row-major.
//! * `BCOD`: `rows x ceil(bits / 64)` `u64` words, row-major, LSB-first bit
//!   order, pad bits zero.
//! * `BMDL`: `rows` holds the model's input width and `dim_or_bits` its code
//!   width, followed by a `u32` method tag and the method's parameters (see
//!   [`format::save_model`]).
//!
//! The file length must match the header exactly.

pub mod format;
mod pairs;
mod synthetic;

pub use format::{
    codes_from_bytes, codes_to_bytes, embeddings_from_bytes, embeddings_to_bytes, load_codes, load_embeddings,
    load_model, model_from_bytes, model_to_bytes, peek_kind, save_codes, save_embeddings, save_model, FileKind,
    HEADER_LEN, VERSION,
};
pub use pairs::{load_pairs, parse_pairs, save_pairs, write_pairs};
pub use synthetic::{generate_synthetic_corpus, SyntheticCorpus, SyntheticCorpusSpec};

use std::path::Path;

use crate::error::{Error, Result};

pub(crate) fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

/// Writes through a temporary sibling and renames, so a failed write never
/// leaves a partial file at `path`.
pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("")
    ));
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}
