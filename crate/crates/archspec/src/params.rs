//! Parameter inventory.
//!
//! Per layer, with `D = d_model`, `D_i = E·D`, `N = d_state`, `K = d_conv`:
//!
//! | tensor      | Mamba-1                | Mamba-2 / Mamba-3                 |
//! |-------------|------------------------|-----------------------------------|
//! | norm        | `D`                    | `D`                               |
//! | in_proj     | `D · 2D_i`             | `D · (2X + 2NR + H)`              |
//! | conv        | `D_i · (K+1)`          | `(X + 2NR) · (K+1)`               |
//! | x_proj      | `D_i · (dt_rank + 2N)` | none                              |
//! | dt_proj     | `dt_rank·D_i + D_i`    | none                              |
//! | dt_bias     | none                   | `H`                               |
//! | A           | `D_i · N`              | `H`                               |
//! | D (skip)    | `D_i`                  | `X`                               |
//! | gated norm  | none                   | `X`                               |
//! | out_proj    | `D_i · D`              | `X · D`                           |
//!
//! where `X = D_i·R` is the MIMO-expanded stream width (`R = 1` for Mamba-2)
//! and `H = D_i / head_dim`. Conv counts include the bias.
//!
//! Model level: a final norm (`D`) and, iff `vocab_size > 0`, an untied
//! embedding and LM head (`V·D` each). A config with `n_layers = 0` is an
//! empty model and counts zero.

use crate::config::{ConfigError, ModelConfig, VariantKind};

#[derive(Debug, Clone, PartialEq)]
pub struct ParamInventory {
    pub per_layer: Vec<(&'static str, u64)>,
    pub model: Vec<(&'static str, u64)>,
    pub n_layers: u64,
}

impl ParamInventory {
    pub fn per_layer_total(&self) -> u64 {
        self.per_layer.iter().map(|(_, n)| n).sum()
    }

    pub fn total(&self) -> u64 {
        self.n_layers * self.per_layer_total() + self.model.iter().map(|(_, n)| n).sum::<u64>()
    }
}

pub fn param_inventory(cfg: &ModelConfig) -> Result<ParamInventory, ConfigError> {
    cfg.validate()?;
    let d = cfg.d_model;
    let di = cfg.d_inner();
    let n = cfg.d_state;
    let k = cfg.d_conv;
    let per_layer = match cfg.variant {
        VariantKind::Mamba1 => {
            let r = cfg.dt_rank;
            vec![
                ("norm", d),
                ("in_proj", d * 2 * di),
                ("conv1d", di * (k + 1)),
                ("x_proj", di * (r + 2 * n)),
                ("dt_proj", r * di + di),
                ("A", di * n),
                ("D", di),
                ("out_proj", di * d),
            ]
        }
        VariantKind::Mamba2 | VariantKind::Mamba3 => {
            let rank = cfg.mimo_rank;
            let x = cfg.x_width();
            let h = cfg.n_heads;
            vec![
                ("norm", d),
                ("in_proj", d * (2 * x + 2 * n * rank + h)),
                ("conv1d", (x + 2 * n * rank) * (k + 1)),
                ("dt_bias", h),
                ("A", h),
                ("D", x),
                ("gated_norm", x),
                ("out_proj", x * d),
            ]
        }
    };
    let mut model = Vec::new();
    if cfg.n_layers > 0 {
        model.push(("final_norm", d));
        if cfg.vocab_size > 0 {
            model.push(("embedding", cfg.vocab_size * d));
            model.push(("lm_head", cfg.vocab_size * d));
        }
    }
    Ok(ParamInventory {
        per_layer,
        model,
        n_layers: cfg.n_layers,
    })
}

pub fn param_count(cfg: &ModelConfig) -> Result<u64, ConfigError> {
    Ok(param_inventory(cfg)?.total())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_model_counts_zero() {
        let cfg = ModelConfig::mamba1(1536, 0, 16);
        assert_eq!(param_count(&cfg).unwrap(), 0);
        let cfg = ModelConfig::mamba3(768, 0, 64, 64, 4).with_vocab(50_000);
        assert_eq!(param_count(&cfg).unwrap(), 0);
    }

    #[test]
    fn vocab_adds_untied_tables() {
        let cfg = ModelConfig::mamba2(256, 4, 16, 64);
        let base = param_count(&cfg).unwrap();
        let with = param_count(&cfg.clone().with_vocab(1000)).unwrap();
        assert_eq!(with - base, 2 * 1000 * 256);
    }
}
