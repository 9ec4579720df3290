use std::fmt;
use std::str::FromStr;

use archspec::{Formulation, ModelConfig};
use serde::{Deserialize, Serialize};

use crate::GraphError;

/// Prefill length of the 880M reference rows.
pub const DEFAULT_SEQ_LEN: u64 = 2048;
/// SSD chunk size at MIMO rank 1.
pub const DEFAULT_CHUNK: u64 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Prefill,
    Decode,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Prefill => "prefill",
            Phase::Decode => "decode",
        })
    }
}

impl FromStr for Phase {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "prefill" => Ok(Phase::Prefill),
            "decode" => Ok(Phase::Decode),
            _ => Err(format!("unknown phase {s:?} (expected prefill or decode)")),
        }
    }
}

/// Execution regime of one evaluation.
///
/// For decode, `seq_len` is the context length and only informs traffic
/// accounting; every step processes one position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorkloadSpec {
    pub phase: Phase,
    pub batch: u64,
    pub seq_len: u64,
    pub formulation: Formulation,
    pub chunk_size: u64,
}

/// Chunk size that keeps the `(Q·R) × (Q·R)` score block at 64×64.
pub fn default_chunk_size(cfg: &ModelConfig) -> u64 {
    (DEFAULT_CHUNK / cfg.mimo_rank.max(1)).max(1)
}

impl WorkloadSpec {
    pub fn prefill(formulation: Formulation, seq_len: u64) -> Self {
        Self {
            phase: Phase::Prefill,
            batch: 1,
            seq_len,
            formulation,
            chunk_size: DEFAULT_CHUNK,
        }
    }

    /// Prefill with the config's default chunk size.
    pub fn prefill_for(cfg: &ModelConfig, formulation: Formulation, seq_len: u64) -> Self {
        Self::prefill(formulation, seq_len).with_chunk(default_chunk_size(cfg))
    }

    pub fn decode(batch: u64, context: u64) -> Self {
        Self {
            phase: Phase::Decode,
            batch,
            seq_len: context,
            formulation: Formulation::Sequential,
            chunk_size: DEFAULT_CHUNK,
        }
    }

    pub fn with_chunk(mut self, chunk_size: u64) -> Self {
        self.chunk_size = chunk_size;
        self
    }

    pub fn with_batch(mut self, batch: u64) -> Self {
        self.batch = batch;
        self
    }

    pub fn validate(&self, cfg: &ModelConfig) -> Result<(), GraphError> {
        if self.batch == 0 || self.seq_len == 0 || self.chunk_size == 0 {
            return Err(GraphError::Workload(
                "batch, seq_len and chunk_size must be at least 1".into(),
            ));
        }
        if !self.formulation.valid_for(cfg.variant) {
            return Err(GraphError::Incompatible {
                variant: cfg.variant,
                formulation: self.formulation,
                reason: "formulation does not exist for this variant",
            });
        }
        if self.phase == Phase::Decode && self.formulation != Formulation::Sequential {
            return Err(GraphError::Incompatible {
                variant: cfg.variant,
                formulation: self.formulation,
                reason: "decode is step-by-step and only has the sequential form",
            });
        }
        Ok(())
    }
}
