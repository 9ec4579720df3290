//! Mamba-1/2/3 model configurations.
//!
//! Provides the [`ModelConfig`] record with its flat key/value file format,
//! exact parameter counts ([`param_count`]), cross-variant parameter
//! matching ([`match_param_count`]) and the SSM-vs-attention crossover rule.
//!
//! # Config file schema
//!
//! One `key = value` per line, `#` starts a comment. All eleven keys are
//! required and no others are accepted:
//!
//! ```text
//! variant    = mamba1 | mamba2 | mamba3
//! d_model    = <int>        # embedding width D
//! n_layers   = <int>        # 0 means an empty model
//! d_state    = <int>        # N
//! expand     = <num|p/q>    # E, D_i = E * d_model
//! d_conv     = <int>        # depthwise kernel length
//! dt_rank    = <int>        # Mamba-1 delta rank (ignored otherwise)
//! n_heads    = <int>        # H, n_heads * head_dim == D_i
//! head_dim   = <int>        # P
//! mimo_rank  = <int>        # R, 1 unless mamba3
//! vocab_size = <int>        # 0 drops embedding and LM head
//! ```
//!
//! # Calibrated defaults
//!
//! The 880M reference configurations are not published. The defaults in
//! [`config::defaults`] reproduce the reference op counts under the
//! inventory in the `opgraph` crate: `d_state` 56/64/72 for Mamba-1/2/3,
//! `head_dim = 64`, `R = 4`, and an untied 48k vocabulary. The Mamba-3
//! state size and head dimension are calibration results.

pub mod config;
pub mod kv;
pub mod matching;
pub mod params;

pub use config::{defaults, ConfigError, Formulation, ModelConfig, VariantKind, CONFIG_KEYS};
pub use kv::{KvDoc, KvError};
pub use matching::{
    attention_crossover, match_param_count, match_param_count_with, round_to_unit, width_unit,
    MatchError, MATCH_TOLERANCE, WIDTH_GRANULARITY,
};
pub use params::{param_count, param_inventory, ParamInventory};
