use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kv::{KvDoc, KvError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VariantKind {
    Mamba1,
    Mamba2,
    Mamba3,
}

impl VariantKind {
    pub const ALL: [VariantKind; 3] = [Self::Mamba1, Self::Mamba2, Self::Mamba3];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Mamba1 => "mamba1",
            Self::Mamba2 => "mamba2",
            Self::Mamba3 => "mamba3",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::Mamba1 => "Mamba-1",
            Self::Mamba2 => "Mamba-2",
            Self::Mamba3 => "Mamba-3",
        }
    }
}

impl fmt::Display for VariantKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for VariantKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "mamba1" => Ok(Self::Mamba1),
            "mamba2" => Ok(Self::Mamba2),
            "mamba3" => Ok(Self::Mamba3),
            _ => Err(format!("unknown variant {s:?} (expected mamba1, mamba2 or mamba3)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Formulation {
    Sequential,
    PScan,
    Ssd,
}

impl Formulation {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Sequential => "sequential",
            Self::PScan => "pscan",
            Self::Ssd => "ssd",
        }
    }

    /// PScan belongs to Mamba-1, SSD to Mamba-2/3.
    pub fn valid_for(self, variant: VariantKind) -> bool {
        match self {
            Self::Sequential => true,
            Self::PScan => variant == VariantKind::Mamba1,
            Self::Ssd => variant != VariantKind::Mamba1,
        }
    }

    /// The parallel prefill formulation of a variant.
    pub fn parallel_for(variant: VariantKind) -> Self {
        match variant {
            VariantKind::Mamba1 => Self::PScan,
            _ => Self::Ssd,
        }
    }
}

impl fmt::Display for Formulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Formulation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sequential" | "seq" => Ok(Self::Sequential),
            "pscan" => Ok(Self::PScan),
            "ssd" => Ok(Self::Ssd),
            _ => Err(format!("unknown formulation {s:?} (expected sequential, pscan or ssd)")),
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid config: {field}: {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error(transparent)]
    Kv(#[from] KvError),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field,
        reason: reason.into(),
    }
}

/// Full hyperparameter record of one variant instance.
///
/// `n_layers = 0` is accepted and denotes an empty model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub variant: VariantKind,
    pub d_model: u64,
    pub n_layers: u64,
    pub d_state: u64,
    pub expand: f64,
    pub d_conv: u64,
    /// Only read for Mamba-1.
    pub dt_rank: u64,
    pub n_heads: u64,
    pub head_dim: u64,
    pub mimo_rank: u64,
    pub vocab_size: u64,
}

pub const CONFIG_KEYS: [&str; 11] = [
    "variant",
    "d_model",
    "n_layers",
    "d_state",
    "expand",
    "d_conv",
    "dt_rank",
    "n_heads",
    "head_dim",
    "mimo_rank",
    "vocab_size",
];

/// Calibrated defaults of the 880M reference family.
pub mod defaults {
    pub const EXPAND: f64 = 2.0;
    pub const D_CONV: u64 = 4;
    pub const MAMBA1_D_STATE: u64 = 56;
    pub const MAMBA2_D_STATE: u64 = 64;
    pub const MAMBA3_D_STATE: u64 = 72;
    pub const HEAD_DIM: u64 = 64;
    pub const MAMBA3_MIMO_RANK: u64 = 4;
    pub const VOCAB_SIZE: u64 = 48_000;
}

impl ModelConfig {
    /// Mamba-1 with the conventional `dt_rank = ceil(d_model/16)`.
    pub fn mamba1(d_model: u64, n_layers: u64, d_state: u64) -> Self {
        let mut cfg = Self {
            variant: VariantKind::Mamba1,
            d_model,
            n_layers,
            d_state,
            expand: defaults::EXPAND,
            d_conv: defaults::D_CONV,
            dt_rank: 1,
            n_heads: 1,
            head_dim: 1,
            mimo_rank: 1,
            vocab_size: 0,
        };
        cfg.rederive();
        cfg
    }

    pub fn mamba2(d_model: u64, n_layers: u64, d_state: u64, head_dim: u64) -> Self {
        let mut cfg = Self {
            variant: VariantKind::Mamba2,
            d_model,
            n_layers,
            d_state,
            expand: defaults::EXPAND,
            d_conv: defaults::D_CONV,
            dt_rank: 1,
            n_heads: 1,
            head_dim,
            mimo_rank: 1,
            vocab_size: 0,
        };
        cfg.rederive();
        cfg
    }

    pub fn mamba3(d_model: u64, n_layers: u64, d_state: u64, head_dim: u64, mimo_rank: u64) -> Self {
        let mut cfg = Self::mamba2(d_model, n_layers, d_state, head_dim);
        cfg.variant = VariantKind::Mamba3;
        cfg.mimo_rank = mimo_rank;
        cfg
    }

    /// Calibrated hyperparameters for `variant` at a given shape.
    pub fn template(variant: VariantKind, d_model: u64, n_layers: u64) -> Self {
        let cfg = match variant {
            VariantKind::Mamba1 => Self::mamba1(d_model, n_layers, defaults::MAMBA1_D_STATE),
            VariantKind::Mamba2 => {
                Self::mamba2(d_model, n_layers, defaults::MAMBA2_D_STATE, defaults::HEAD_DIM)
            }
            VariantKind::Mamba3 => Self::mamba3(
                d_model,
                n_layers,
                defaults::MAMBA3_D_STATE,
                defaults::HEAD_DIM,
                defaults::MAMBA3_MIMO_RANK,
            ),
        };
        cfg.with_vocab(defaults::VOCAB_SIZE)
    }

    pub fn with_vocab(mut self, vocab_size: u64) -> Self {
        self.vocab_size = vocab_size;
        self
    }

    pub fn with_layers(mut self, n_layers: u64) -> Self {
        self.n_layers = n_layers;
        self
    }

    pub fn with_state(mut self, d_state: u64) -> Self {
        self.d_state = d_state;
        self
    }

    /// Same hyperparameters at a new width; width-derived fields follow.
    pub fn with_width(mut self, d_model: u64) -> Self {
        self.d_model = d_model;
        self.rederive();
        self
    }

    fn rederive(&mut self) {
        let di = (self.expand * self.d_model as f64).round() as u64;
        match self.variant {
            VariantKind::Mamba1 => {
                self.dt_rank = self.d_model.div_ceil(16).max(1);
                self.n_heads = 1;
                self.head_dim = di.max(1);
            }
            VariantKind::Mamba2 | VariantKind::Mamba3 => {
                self.n_heads = (di / self.head_dim.max(1)).max(1);
            }
        }
    }

    /// `D_i = E · d_model`.
    pub fn d_inner(&self) -> u64 {
        (self.expand * self.d_model as f64).round() as u64
    }

    /// Width of the x/z/y streams: `D_i · R`.
    pub fn x_width(&self) -> u64 {
        self.d_inner() * self.mimo_rank
    }

    /// Recurrent state elements per layer, `D_i · N`.
    pub fn state_elems(&self) -> u64 {
        self.d_inner() * self.d_state
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = [
            ("d_model", self.d_model),
            ("d_state", self.d_state),
            ("d_conv", self.d_conv),
            ("dt_rank", self.dt_rank),
            ("n_heads", self.n_heads),
            ("head_dim", self.head_dim),
            ("mimo_rank", self.mimo_rank),
        ];
        for (field, v) in positive {
            if v == 0 {
                return Err(invalid(field, "must be at least 1"));
            }
        }
        if !(self.expand.is_finite() && self.expand > 0.0) {
            return Err(invalid("expand", "must be a positive number"));
        }
        let di = self.expand * self.d_model as f64;
        if (di - di.round()).abs() > 1e-9 {
            return Err(invalid(
                "expand",
                format!("expand * d_model = {di} is not an integer"),
            ));
        }
        if self.n_heads * self.head_dim != self.d_inner() {
            return Err(invalid(
                "n_heads",
                format!(
                    "n_heads * head_dim = {} must equal expand * d_model = {}",
                    self.n_heads * self.head_dim,
                    self.d_inner()
                ),
            ));
        }
        if self.variant == VariantKind::Mamba1 && self.n_heads != 1 {
            return Err(invalid("n_heads", "Mamba-1 has a single head"));
        }
        if self.variant != VariantKind::Mamba3 && self.mimo_rank != 1 {
            return Err(invalid("mimo_rank", "only Mamba-3 has a MIMO rank above 1"));
        }
        Ok(())
    }

    pub fn from_kv_str(text: &str) -> Result<Self, ConfigError> {
        let doc = KvDoc::parse(text)?;
        doc.check_keys(&CONFIG_KEYS)?;
        let expand_raw = doc.raw("expand")?.0.to_string();
        let expand = parse_rational(&expand_raw).ok_or_else(|| {
            doc.invalid("expand", "expected a positive number or fraction like 3/2")
        })?;
        let cfg = Self {
            variant: doc.get("variant")?,
            d_model: doc.get("d_model")?,
            n_layers: doc.get("n_layers")?,
            d_state: doc.get("d_state")?,
            expand,
            d_conv: doc.get("d_conv")?,
            dt_rank: doc.get("dt_rank")?,
            n_heads: doc.get("n_heads")?,
            head_dim: doc.get("head_dim")?,
            mimo_rank: doc.get("mimo_rank")?,
            vocab_size: doc.get("vocab_size")?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_kv_str(&text)
    }

    pub fn to_kv_string(&self) -> String {
        format!(
            "variant = {}\nd_model = {}\nn_layers = {}\nd_state = {}\nexpand = {}\nd_conv = {}\n\
             dt_rank = {}\nn_heads = {}\nhead_dim = {}\nmimo_rank = {}\nvocab_size = {}\n",
            self.variant,
            self.d_model,
            self.n_layers,
            self.d_state,
            self.expand,
            self.d_conv,
            self.dt_rank,
            self.n_heads,
            self.head_dim,
            self.mimo_rank,
            self.vocab_size
        )
    }
}

fn parse_rational(s: &str) -> Option<f64> {
    let v = match s.split_once('/') {
        Some((n, d)) => {
            let n: f64 = n.trim().parse().ok()?;
            let d: f64 = d.trim().parse().ok()?;
            if d == 0.0 {
                return None;
            }
            n / d
        }
        None => s.parse().ok()?,
    };
    (v.is_finite() && v > 0.0).then_some(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kv_round_trip() {
        let cfg = ModelConfig::template(VariantKind::Mamba3, 768, 52);
        let back = ModelConfig::from_kv_str(&cfg.to_kv_string()).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn fractional_expand() {
        let text = ModelConfig::mamba1(64, 2, 4)
            .to_kv_string()
            .replace("expand = 2", "expand = 3/2")
            .replace("head_dim = 128", "head_dim = 96");
        let cfg = ModelConfig::from_kv_str(&text).unwrap();
        assert_eq!(cfg.d_inner(), 96);
    }

    #[test]
    fn invariants_rejected() {
        let mut cfg = ModelConfig::mamba2(128, 2, 16, 64);
        cfg.mimo_rank = 2;
        assert!(matches!(
            cfg.validate(),
            Err(ConfigError::Invalid { field: "mimo_rank", .. })
        ));
        let mut cfg = ModelConfig::mamba2(128, 2, 16, 64);
        cfg.head_dim = 48;
        assert!(cfg.validate().is_err());
        let mut cfg = ModelConfig::mamba1(128, 2, 16);
        cfg.d_state = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn missing_key_is_named() {
        let text = ModelConfig::mamba1(64, 2, 4)
            .to_kv_string()
            .replace("d_state = 4\n", "");
        let err = ModelConfig::from_kv_str(&text).unwrap_err();
        assert!(err.to_string().contains("d_state"), "{err}");
    }

    #[test]
    fn formulation_validity() {
        assert!(Formulation::PScan.valid_for(VariantKind::Mamba1));
        assert!(!Formulation::PScan.valid_for(VariantKind::Mamba2));
        assert!(!Formulation::Ssd.valid_for(VariantKind::Mamba1));
        assert!(Formulation::Ssd.valid_for(VariantKind::Mamba3));
        assert!(VariantKind::ALL
            .iter()
            .all(|&v| Formulation::Sequential.valid_for(v)));
    }
}
