use std::path::Path;

use super::{read_file, write_file};
use crate::autoencoder::{AutoencoderModel, BinarizeMode};
use crate::binarizers::{HardThresholdModel, PcaModel, RandomProjectionModel};
use crate::codes::words_for_bits;
use crate::error::{Error, FormatError, Result};
use crate::{BinarizerModel, BinaryCodeSet, EmbeddingMatrix};

pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 20;

const MAGIC_EMBEDDINGS: [u8; 4] = *b"BEMB";
const MAGIC_CODES: [u8; 4] = *b"BCOD";
const MAGIC_MODEL: [u8; 4] = *b"BMDL";

const TAG_HARD_THRESHOLD: u32 = 1;
const TAG_RANDOM_PROJECTION: u32 = 2;
const TAG_PCA: u32 = 3;
const TAG_AUTOENCODER: u32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileKind {
    Embeddings,
    Codes,
    Model,
}

impl FileKind {
    fn magic(self) -> [u8; 4] {
        match self {
            FileKind::Embeddings => MAGIC_EMBEDDINGS,
            FileKind::Codes => MAGIC_CODES,
            FileKind::Model => MAGIC_MODEL,
        }
    }

    fn from_magic(magic: &[u8]) -> Option<Self> {
        [FileKind::Embeddings, FileKind::Codes, FileKind::Model]
            .into_iter()
            .find(|k| k.magic() == magic)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Header {
    rows: u64,
    dim: u32,
}

fn push_header(out: &mut Vec<u8>, kind: FileKind, rows: usize, dim: usize) {
    out.extend_from_slice(&kind.magic());
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(rows as u64).to_le_bytes());
    out.extend_from_slice(&u32::try_from(dim).expect("dimension fits in u32").to_le_bytes());
}

fn magic_str(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

/// Little-endian cursor over a byte slice.
struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    fn take(&mut self, n: usize) -> &'a [u8] {
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        s
    }

    fn u32(&mut self) -> u32 {
        u32::from_le_bytes(self.take(4).try_into().unwrap())
    }

    fn u64(&mut self) -> u64 {
        u64::from_le_bytes(self.take(8).try_into().unwrap())
    }

    fn f32s(&mut self, n: usize) -> Vec<f32> {
        self.take(n * 4)
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect()
    }

    fn f64s(&mut self, n: usize) -> Vec<f64> {
        self.take(n * 8)
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect()
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    /// Checks that exactly `expected` bytes remain.
    fn expect_remaining(&self, expected: u64) -> Result<(), FormatError> {
        let expected = expected + self.pos as u64;
        let actual = self.bytes.len() as u64;
        match actual.cmp(&expected) {
            std::cmp::Ordering::Less => Err(FormatError::Truncated { expected, actual }),
            std::cmp::Ordering::Greater => Err(FormatError::TrailingBytes { expected, actual }),
            std::cmp::Ordering::Equal => Ok(()),
        }
    }
}

fn read_header(r: &mut Reader<'_>, kind: FileKind) -> Result<Header, FormatError> {
    if r.remaining() < HEADER_LEN {
        if r.remaining() >= 4 && &r.bytes[..4] != kind.magic().as_slice() {
            return Err(FormatError::BadMagic {
                expected: magic_str(&kind.magic()),
                found: magic_str(&r.bytes[..4]),
            });
        }
        return Err(FormatError::Truncated {
            expected: HEADER_LEN as u64,
            actual: r.remaining() as u64,
        });
    }
    let magic = r.take(4);
    if magic != kind.magic() {
        return Err(FormatError::BadMagic {
            expected: magic_str(&kind.magic()),
            found: magic_str(magic),
        });
    }
    let version = r.u32();
    if version != VERSION {
        return Err(FormatError::Version {
            found: version,
            supported: VERSION,
        });
    }
    let rows = r.u64();
    let dim = r.u32();
    if rows == 0 || dim == 0 {
        return Err(FormatError::Header(format!("empty shape {rows}x{dim}")));
    }
    Ok(Header { rows, dim })
}

fn checked_len(parts: &[u64]) -> Result<u64, FormatError> {
    parts
        .iter()
        .try_fold(1u64, |acc, &p| acc.checked_mul(p))
        .ok_or_else(|| FormatError::Header("declared size overflows".into()))
}

fn first_non_finite<T: Copy + Into<f64>>(values: &[T]) -> Option<usize> {
    values.iter().position(|&v| !v.into().is_finite())
}

pub fn embeddings_to_bytes(m: &EmbeddingMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + m.as_slice().len() * 4);
    push_header(&mut out, FileKind::Embeddings, m.rows(), m.dim());
    for v in m.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn embeddings_from_bytes(bytes: &[u8]) -> Result<EmbeddingMatrix> {
    let mut r = Reader::new(bytes);
    let h = read_header(&mut r, FileKind::Embeddings)?;
    r.expect_remaining(checked_len(&[h.rows, u64::from(h.dim), 4])?)?;
    let data = r.f32s(h.rows as usize * h.dim as usize);
    if let Some(i) = first_non_finite(&data) {
        return Err(FormatError::NonFinite(i).into());
    }
    EmbeddingMatrix::new(h.rows as usize, h.dim as usize, data)
}

pub fn codes_to_bytes(c: &BinaryCodeSet) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + c.payload_bytes());
    push_header(&mut out, FileKind::Codes, c.rows(), c.bits());
    for w in c.words() {
        out.extend_from_slice(&w.to_le_bytes());
    }
    out
}

pub fn codes_from_bytes(bytes: &[u8]) -> Result<BinaryCodeSet> {
    let mut r = Reader::new(bytes);
    let h = read_header(&mut r, FileKind::Codes)?;
    let wpr = words_for_bits(h.dim as usize) as u64;
    r.expect_remaining(checked_len(&[h.rows, wpr, 8])?)?;
    let words = (0..h.rows * wpr).map(|_| r.u64()).collect();
    BinaryCodeSet::from_words(h.rows as usize, h.dim as usize, words)
}

fn push_f32s(out: &mut Vec<u8>, values: &[f32]) {
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

fn push_f64s(out: &mut Vec<u8>, values: &[f64]) {
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

/// Serializes a fitted model. After the header comes a `u32` tag and then:
///
/// * `1` hard threshold: threshold `f32`.
/// * `2` random projection: seed `u64`, `D x L` weights `f32`.
/// * `3` PCA: mean `L x f64`, `D x L` components `f64`, `D` eigenvalues `f64`.
/// * `4` autoencoder: training mode `u32` (0 deterministic, 1 stochastic),
///   encoder `D x L` + `D`, decoder `L x D` + `L`, all `f64`.
pub fn model_to_bytes(model: &BinarizerModel) -> Vec<u8> {
    use crate::binarizers::Binarizer;
    let mut out = Vec::with_capacity(HEADER_LEN + 4);
    push_header(&mut out, FileKind::Model, model.input_dim(), model.bits());
    match model {
        BinarizerModel::HardThreshold(m) => {
            out.extend_from_slice(&TAG_HARD_THRESHOLD.to_le_bytes());
            out.extend_from_slice(&m.threshold.to_le_bytes());
        }
        BinarizerModel::RandomProjection(m) => {
            out.extend_from_slice(&TAG_RANDOM_PROJECTION.to_le_bytes());
            out.extend_from_slice(&m.seed.to_le_bytes());
            push_f32s(&mut out, &m.weights);
        }
        BinarizerModel::Pca(m) => {
            out.extend_from_slice(&TAG_PCA.to_le_bytes());
            push_f64s(&mut out, &m.mean);
            push_f64s(&mut out, &m.components);
            push_f64s(&mut out, &m.eigenvalues);
        }
        BinarizerModel::Autoencoder(m) => {
            out.extend_from_slice(&TAG_AUTOENCODER.to_le_bytes());
            let mode: u32 = match m.mode {
                BinarizeMode::Deterministic => 0,
                BinarizeMode::Stochastic => 1,
            };
            out.extend_from_slice(&mode.to_le_bytes());
            push_f64s(&mut out, &m.enc_weights);
            push_f64s(&mut out, &m.enc_bias);
            push_f64s(&mut out, &m.dec_weights);
            push_f64s(&mut out, &m.dec_bias);
        }
    }
    out
}

pub fn model_from_bytes(bytes: &[u8]) -> Result<BinarizerModel> {
    let mut r = Reader::new(bytes);
    let h = read_header(&mut r, FileKind::Model)?;
    let (l, d) = (h.rows, u64::from(h.dim));
    if l > u64::from(u32::MAX) {
        return Err(FormatError::Header(format!("input width {l} too large")).into());
    }
    r.expect_remaining(4).or_else(|e| match e {
        FormatError::TrailingBytes { .. } => Ok(()),
        e => Err(e),
    })?;
    let tag = r.u32();
    let (lu, du) = (l as usize, d as usize);
    let model: BinarizerModel = match tag {
        TAG_HARD_THRESHOLD => {
            if l != d {
                return Err(FormatError::Header(format!(
                    "hard-threshold model must have equal widths, got {l} and {d}"
                ))
                .into());
            }
            r.expect_remaining(4)?;
            let threshold = r.f32s(1)[0];
            HardThresholdModel::new(threshold, lu)?.into()
        }
        TAG_RANDOM_PROJECTION => {
            r.expect_remaining(8 + checked_len(&[d, l, 4])?)?;
            let seed = r.u64();
            let weights = r.f32s(du * lu);
            if let Some(i) = first_non_finite(&weights) {
                return Err(FormatError::NonFinite(i).into());
            }
            RandomProjectionModel {
                input_dim: lu,
                bits: du,
                seed,
                weights,
            }
            .into()
        }
        TAG_PCA => {
            let n = l + checked_len(&[d, l])? + d;
            r.expect_remaining(checked_len(&[n, 8])?)?;
            let mean = r.f64s(lu);
            let components = r.f64s(du * lu);
            let eigenvalues = r.f64s(du);
            for values in [&mean, &components, &eigenvalues] {
                if let Some(i) = first_non_finite(values) {
                    return Err(FormatError::NonFinite(i).into());
                }
            }
            PcaModel {
                input_dim: lu,
                bits: du,
                mean,
                components,
                eigenvalues,
            }
            .into()
        }
        TAG_AUTOENCODER => {
            let n = 2 * checked_len(&[d, l])? + d + l;
            r.expect_remaining(4 + checked_len(&[n, 8])?)?;
            let mode = match r.u32() {
                0 => BinarizeMode::Deterministic,
                1 => BinarizeMode::Stochastic,
                other => return Err(FormatError::Header(format!("unknown binarize mode {other}")).into()),
            };
            let model = AutoencoderModel {
                input_dim: lu,
                bits: du,
                enc_weights: r.f64s(du * lu),
                enc_bias: r.f64s(du),
                dec_weights: r.f64s(lu * du),
                dec_bias: r.f64s(lu),
                mode,
            };
            if !model.is_finite() {
                return Err(Error::NonFinite("autoencoder parameters".into()));
            }
            model.into()
        }
        other => return Err(FormatError::UnknownMethod(other).into()),
    };
    Ok(model)
}

pub fn save_embeddings(path: impl AsRef<Path>, m: &EmbeddingMatrix) -> Result<()> {
    write_file(path.as_ref(), &embeddings_to_bytes(m))
}

pub fn load_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingMatrix> {
    embeddings_from_bytes(&read_file(path.as_ref())?)
}

pub fn save_codes(path: impl AsRef<Path>, c: &BinaryCodeSet) -> Result<()> {
    write_file(path.as_ref(), &codes_to_bytes(c))
}

pub fn load_codes(path: impl AsRef<Path>) -> Result<BinaryCodeSet> {
    codes_from_bytes(&read_file(path.as_ref())?)
}

pub fn save_model(path: impl AsRef<Path>, model: &BinarizerModel) -> Result<()> {
    write_file(path.as_ref(), &model_to_bytes(model))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<BinarizerModel> {
    model_from_bytes(&read_file(path.as_ref())?)
}

/// Identifies a file by its magic bytes.
pub fn peek_kind(path: impl AsRef<Path>) -> Result<FileKind> {
    use std::io::Read;
    let path = path.as_ref();
    let mut magic = [0u8; 4];
    std::fs::File::open(path)
        .and_then(|mut f| f.read_exact(&mut magic))
        .map_err(|e| Error::io(path, e))?;
    FileKind::from_magic(&magic).ok_or_else(|| {
        FormatError::BadMagic {
            expected: "BEMB, BCOD or BMDL".into(),
            found: magic_str(&magic),
        }
        .into()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::binarizers::{pca_fit, random_projection_fit, Binarizer};
    use crate::SeededRng;

    fn fmt_err(r: Result<impl std::fmt::Debug>) -> FormatError {
        match r.unwrap_err() {
            Error::Format(e) => e,
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn embedding_file_layout() {
        let m = EmbeddingMatrix::from_rows(&[[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]).unwrap();
        let bytes = embeddings_to_bytes(&m);
        assert_eq!(bytes.len(), HEADER_LEN + 24);
        assert_eq!(&bytes[..4], b"BEMB");
        assert_eq!(&bytes[4..8], &1u32.to_le_bytes());
        assert_eq!(&bytes[8..16], &2u64.to_le_bytes());
        assert_eq!(&bytes[16..20], &3u32.to_le_bytes());
        assert_eq!(&bytes[20..24], &1.0f32.to_le_bytes());
        assert_eq!(embeddings_from_bytes(&bytes).unwrap(), m);
    }

    #[test]
    fn truncated_and_trailing() {
        let m = EmbeddingMatrix::from_rows(&[[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]).unwrap();
        let bytes = embeddings_to_bytes(&m);
        assert_eq!(
            fmt_err(embeddings_from_bytes(&bytes[..bytes.len() - 1])),
            FormatError::Truncated {
                expected: 44,
                actual: 43
            }
        );
        let mut long = bytes.clone();
        long.push(0);
        assert_eq!(
            fmt_err(embeddings_from_bytes(&long)),
            FormatError::TrailingBytes {
                expected: 44,
                actual: 45
            }
        );
        assert!(matches!(
            fmt_err(embeddings_from_bytes(&bytes[..10])),
            FormatError::Truncated {
                expected: 20,
                actual: 10
            }
        ));
    }

    #[test]
    fn magic_and_version() {
        let m = EmbeddingMatrix::from_rows(&[[1.0]]).unwrap();
        let bytes = embeddings_to_bytes(&m);
        assert!(matches!(
            fmt_err(codes_from_bytes(&bytes)),
            FormatError::BadMagic { .. }
        ));
        assert!(matches!(
            fmt_err(model_from_bytes(&bytes)),
            FormatError::BadMagic { .. }
        ));
        let mut v2 = bytes.clone();
        v2[4] = 2;
        assert_eq!(
            fmt_err(embeddings_from_bytes(&v2)),
            FormatError::Version { found: 2, supported: 1 }
        );
    }

    #[test]
    fn non_finite_payload_rejected() {
        let m = EmbeddingMatrix::from_rows(&[[1.0, 2.0]]).unwrap();
        let mut bytes = embeddings_to_bytes(&m);
        bytes[24..28].copy_from_slice(&f32::NAN.to_le_bytes());
        assert_eq!(fmt_err(embeddings_from_bytes(&bytes)), FormatError::NonFinite(1));
    }

    #[test]
    fn code_file_layout() {
        let c = BinaryCodeSet::from_bit_rows(&[[true, false, true]]).unwrap();
        let bytes = codes_to_bytes(&c);
        assert_eq!(bytes.len(), HEADER_LEN + 8);
        assert_eq!(&bytes[20..], &5u64.to_le_bytes());
        assert_eq!(codes_from_bytes(&bytes).unwrap(), c);

        let mut corrupt = bytes.clone();
        corrupt[20] |= 0x08;
        assert_eq!(fmt_err(codes_from_bytes(&corrupt)), FormatError::PadBits { row: 0 });
    }

    #[test]
    fn wide_code_row_is_512_bytes() {
        let c = BinaryCodeSet::zeros(1, 4096).unwrap();
        assert_eq!(codes_to_bytes(&c).len() - HEADER_LEN, 512);
    }

    #[test]
    fn model_round_trips_reproduce_codes() {
        let h = EmbeddingMatrix::from_rows(&[
            [0.3f32, -1.0, 2.0, 0.5],
            [1.0, 0.2, -0.4, 0.9],
            [-0.7, 0.1, 0.0, -2.0],
            [0.2, 0.2, 0.3, 0.1],
        ])
        .unwrap();
        let mut rng = SeededRng::new(1);
        let models: Vec<BinarizerModel> = vec![
            HardThresholdModel::new(0.1, 4).unwrap().into(),
            random_projection_fit(4, 7, &mut rng).unwrap().into(),
            pca_fit(&h, 3).unwrap().into(),
            AutoencoderModel::init(4, 9, BinarizeMode::Stochastic, &mut rng)
                .unwrap()
                .into(),
        ];
        for m in models {
            let back = model_from_bytes(&model_to_bytes(&m)).unwrap();
            assert_eq!(back, m);
            assert_eq!(back.binarize(&h).unwrap(), m.binarize(&h).unwrap());
        }
    }

    #[test]
    fn model_errors() {
        let m: BinarizerModel = HardThresholdModel::new(0.0, 2).unwrap().into();
        let mut bytes = model_to_bytes(&m);
        bytes[20..24].copy_from_slice(&99u32.to_le_bytes());
        assert_eq!(fmt_err(model_from_bytes(&bytes)), FormatError::UnknownMethod(99));
        let bytes = model_to_bytes(&m);
        assert!(matches!(
            fmt_err(model_from_bytes(&bytes[..bytes.len() - 2])),
            FormatError::Truncated { .. }
        ));
    }
}
