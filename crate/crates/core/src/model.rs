use serde::{Deserialize, Serialize};

use crate::autoencoder::AutoencoderModel;
use crate::binarizers::{Binarizer, HardThresholdModel, PcaModel, RandomProjectionModel};
use crate::error::{Error, Result};
use crate::{BinaryCodeSet, EmbeddingMatrix};

/// Binarization strategy, as named on the command line and in reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "ht")]
    HardThreshold,
    #[serde(rename = "randproj")]
    RandomProjection,
    #[serde(rename = "pca")]
    Pca,
    /// Autoencoder with reconstruction loss only.
    #[serde(rename = "ae")]
    Autoencoder,
    /// Autoencoder with the semantic-preserving triplet term.
    #[serde(rename = "ae-sp")]
    AutoencoderSp,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::HardThreshold,
        Method::RandomProjection,
        Method::Pca,
        Method::Autoencoder,
        Method::AutoencoderSp,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::HardThreshold => "ht",
            Method::RandomProjection => "randproj",
            Method::Pca => "pca",
            Method::Autoencoder => "ae",
            Method::AutoencoderSp => "ae-sp",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown method {s:?}")))
    }
}

/// Any fitted binarizer.
#[derive(Debug, Clone, PartialEq)]
pub enum BinarizerModel {
    HardThreshold(HardThresholdModel),
    RandomProjection(RandomProjectionModel),
    Pca(PcaModel),
    Autoencoder(AutoencoderModel),
}

impl BinarizerModel {
    fn inner(&self) -> &dyn Binarizer {
        match self {
            BinarizerModel::HardThreshold(m) => m,
            BinarizerModel::RandomProjection(m) => m,
            BinarizerModel::Pca(m) => m,
            BinarizerModel::Autoencoder(m) => m,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            BinarizerModel::HardThreshold(_) => "ht",
            BinarizerModel::RandomProjection(_) => "randproj",
            BinarizerModel::Pca(_) => "pca",
            BinarizerModel::Autoencoder(_) => "ae",
        }
    }
}

impl Binarizer for BinarizerModel {
    fn input_dim(&self) -> usize {
        self.inner().input_dim()
    }

    fn bits(&self) -> usize {
        self.inner().bits()
    }

    fn binarize(&self, h: &EmbeddingMatrix) -> Result<BinaryCodeSet> {
        self.inner().binarize(h)
    }
}

impl From<HardThresholdModel> for BinarizerModel {
    fn from(m: HardThresholdModel) -> Self {
        BinarizerModel::HardThreshold(m)
    }
}

impl From<RandomProjectionModel> for BinarizerModel {
    fn from(m: RandomProjectionModel) -> Self {
        BinarizerModel::RandomProjection(m)
    }
}

impl From<PcaModel> for BinarizerModel {
    fn from(m: PcaModel) -> Self {
        BinarizerModel::Pca(m)
    }
}

impl From<AutoencoderModel> for BinarizerModel {
    fn from(m: AutoencoderModel) -> Self {
        BinarizerModel::Autoencoder(m)
    }
}
