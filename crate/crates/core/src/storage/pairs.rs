//! Scored pair files: one `index_a<TAB>index_b<TAB>score` line per pair.
//! Blank lines and lines starting with `#` are ignored.

use std::io::Write;
use std::path::Path;

use super::{read_file, write_file};
use crate::error::{Error, FormatError, Result};
use crate::evaluation::{ScoredPair, ScoredPairSet};

pub fn parse_pairs(text: &str) -> Result<ScoredPairSet> {
    let mut pairs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parse_err = |detail: String| FormatError::Parse { line: line_no, detail };
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(parse_err(format!("expected 3 tab-separated fields, found {}", fields.len())).into());
        }
        let index = |s: &str| {
            s.trim()
                .parse::<usize>()
                .map_err(|e| parse_err(format!("bad index {s:?}: {e}")))
        };
        let a = index(fields[0])?;
        let b = index(fields[1])?;
        let gold: f64 = fields[2]
            .trim()
            .parse()
            .map_err(|e| parse_err(format!("bad score {:?}: {e}", fields[2])))?;
        if !gold.is_finite() {
            return Err(parse_err(format!("non-finite score {gold}")).into());
        }
        pairs.push(ScoredPair { a, b, gold });
    }
    ScoredPairSet::new(pairs)
}

pub fn write_pairs<W: Write>(mut w: W, pairs: &ScoredPairSet) -> std::io::Result<()> {
    for p in &pairs.pairs {
        writeln!(w, "{}\t{}\t{}", p.a, p.b, p.gold)?;
    }
    Ok(())
}

pub fn load_pairs(path: impl AsRef<Path>) -> Result<ScoredPairSet> {
    let path = path.as_ref();
    let bytes = read_file(path)?;
    let text = String::from_utf8(bytes)
        .map_err(|e| Error::Format(FormatError::Header(format!("{}: not UTF-8: {e}", path.display()))))?;
    parse_pairs(&text)
}

pub fn save_pairs(path: impl AsRef<Path>, pairs: &ScoredPairSet) -> Result<()> {
    let mut buf = Vec::new();
    write_pairs(&mut buf, pairs).expect("writing to a Vec cannot fail");
    write_file(path.as_ref(), &buf)
}
