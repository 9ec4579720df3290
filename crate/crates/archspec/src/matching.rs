//! Parameter matching across variants.
//!
//! Mamba-3 follows the fixed width rule `d = round(d_ref / √R)` and matches
//! the count through depth. The other variants keep the reference depth and
//! search over width, falling back to a depth adjustment only when the
//! width grid is too coarse to land inside the tolerance.

use thiserror::Error;

use crate::config::{ConfigError, ModelConfig, VariantKind};
use crate::params::param_count;

/// Width rounding granularity in channels.
pub const WIDTH_GRANULARITY: u64 = 8;
/// Relative tolerance of a parameter match.
pub const MATCH_TOLERANCE: f64 = 0.02;
/// Search bounds, in width units and layers.
pub const MAX_WIDTH_UNITS: u64 = 4096;
pub const MAX_LAYERS: u64 = 4096;

#[derive(Debug, Error)]
pub enum MatchError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(
        "cannot match {variant} to {target} parameters within {tol}%: nearest is {best} \
         (searched d_model {d_lo}..={d_hi} and n_layers 1..={l_hi})",
        tol = MATCH_TOLERANCE * 100.0
    )]
    Unattainable {
        variant: VariantKind,
        target: u64,
        best: u64,
        d_lo: u64,
        d_hi: u64,
        l_hi: u64,
    },
}

/// Smallest width step that keeps `E·d` integral and divisible by `head_dim`
/// (Mamba-2/3), in multiples of [`WIDTH_GRANULARITY`].
pub fn width_unit(template: &ModelConfig) -> u64 {
    let heads_matter = template.variant != VariantKind::Mamba1;
    (1..=MAX_WIDTH_UNITS)
        .map(|k| k * WIDTH_GRANULARITY)
        .find(|&u| {
            let di = template.expand * u as f64;
            let integral = (di - di.round()).abs() < 1e-9;
            integral && (!heads_matter || (di.round() as u64).is_multiple_of(template.head_dim))
        })
        .unwrap_or(WIDTH_GRANULARITY)
}

/// Nearest multiple of `unit`, ties upward, never below one unit.
pub fn round_to_unit(x: f64, unit: u64) -> u64 {
    let k = (x / unit as f64 + 0.5).floor().max(1.0) as u64;
    k * unit
}

fn rel_err(p: u64, target: u64) -> f64 {
    if target == 0 {
        if p == 0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (p as f64 - target as f64).abs() / target as f64
    }
}

/// Depth with the count nearest to `target` at fixed width (ties to fewer layers).
fn nearest_depth(cfg: &ModelConfig, target: u64) -> Result<ModelConfig, ConfigError> {
    let one = param_count(&cfg.clone().with_layers(1))?;
    let two = param_count(&cfg.clone().with_layers(2))?;
    let per_layer = two - one;
    let fixed = one - per_layer;
    let guess = if target > fixed {
        ((target - fixed) as f64 / per_layer as f64).round() as u64
    } else {
        1
    };
    let mut best: Option<(u64, u64)> = None;
    for l in guess.saturating_sub(1).max(1)..=(guess + 1).min(MAX_LAYERS) {
        let p = fixed + l * per_layer;
        let dist = p.abs_diff(target);
        if best.is_none_or(|(_, b)| dist < b) {
            best = Some((l, dist));
        }
    }
    Ok(cfg.clone().with_layers(best.map_or(1, |(l, _)| l)))
}

/// Matches `reference` using the calibrated hyperparameters of `variant`.
pub fn match_param_count(
    variant: VariantKind,
    reference: &ModelConfig,
) -> Result<ModelConfig, MatchError> {
    let template = ModelConfig::template(variant, reference.d_model, reference.n_layers)
        .with_vocab(reference.vocab_size);
    match_param_count_with(&template, reference)
}

/// Matches `reference` keeping every hyperparameter of `template` except
/// width and depth.
pub fn match_param_count_with(
    template: &ModelConfig,
    reference: &ModelConfig,
) -> Result<ModelConfig, MatchError> {
    reference.validate()?;
    let target = param_count(reference)?;
    let unit = width_unit(template);
    let tpl = template.clone().with_layers(reference.n_layers.max(1));

    if target == 0 {
        return Ok(tpl.with_width(round_to_unit(reference.d_model as f64, unit)).with_layers(0));
    }

    let unattainable = |best: u64| MatchError::Unattainable {
        variant: template.variant,
        target,
        best,
        d_lo: unit,
        d_hi: unit * MAX_WIDTH_UNITS,
        l_hi: MAX_LAYERS,
    };

    if template.variant == VariantKind::Mamba3 {
        let scaled = reference.d_model as f64 / (template.mimo_rank as f64).sqrt();
        let cfg = nearest_depth(&tpl.with_width(round_to_unit(scaled, unit)), target)?;
        let p = param_count(&cfg)?;
        return if rel_err(p, target) <= MATCH_TOLERANCE {
            Ok(cfg)
        } else {
            Err(unattainable(p))
        };
    }

    // param_count is monotone in width, so bisect for the first width at or
    // above the target and compare with its lower neighbour.
    let count_at = |k: u64| param_count(&tpl.clone().with_width(k * unit));
    let (mut lo, mut hi) = (1u64, MAX_WIDTH_UNITS);
    if count_at(hi)? < target {
        lo = hi;
    } else {
        while lo < hi {
            let mid = (lo + hi) / 2;
            if count_at(mid)? >= target {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
    }
    let mut candidates = vec![lo];
    if lo > 1 {
        candidates.push(lo - 1);
    }
    let mut best: Option<(ModelConfig, f64)> = None;
    for &k in &candidates {
        let cfg = tpl.clone().with_width(k * unit);
        let e = rel_err(param_count(&cfg)?, target);
        if best.as_ref().is_none_or(|(_, b)| e < *b) {
            best = Some((cfg, e));
        }
    }
    if let Some((cfg, e)) = &best {
        if *e <= MATCH_TOLERANCE {
            return Ok(cfg.clone());
        }
    }
    for &k in &candidates {
        let cfg = nearest_depth(&tpl.clone().with_width(k * unit), target)?;
        let e = rel_err(param_count(&cfg)?, target);
        if best.as_ref().is_none_or(|(_, b)| e < *b) {
            best = Some((cfg, e));
        }
    }
    let (cfg, e) = best.expect("at least one candidate");
    if e <= MATCH_TOLERANCE {
        Ok(cfg)
    } else {
        Err(unattainable(param_count(&cfg)?))
    }
}

/// Sequence length above which linear-time SSM arithmetic beats attention.
pub fn attention_crossover(d_model: u64) -> u64 {
    6 * d_model
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crossover_examples() {
        assert_eq!(attention_crossover(768), 4608);
        assert_eq!(attention_crossover(1), 6);
        assert_eq!(attention_crossover(1536), 9216);
    }

    #[test]
    fn units() {
        assert_eq!(width_unit(&ModelConfig::mamba1(64, 1, 4)), 8);
        assert_eq!(width_unit(&ModelConfig::mamba2(64, 1, 4, 64)), 32);
        assert_eq!(round_to_unit(768.0, 32), 768);
        assert_eq!(round_to_unit(3.0, 32), 32);
        assert_eq!(round_to_unit(48.0, 32), 64);
    }

    #[test]
    fn mamba3_width_rule() {
        let reference = ModelConfig::template(VariantKind::Mamba2, 1536, 48);
        let m3 = match_param_count(VariantKind::Mamba3, &reference).unwrap();
        assert_eq!(m3.d_model, 768);

        let reference = ModelConfig::template(VariantKind::Mamba2, 1024, 24);
        let tpl = ModelConfig::mamba3(1024, 24, 64, 64, 1).with_vocab(reference.vocab_size);
        assert_eq!(match_param_count_with(&tpl, &reference).unwrap().d_model, 1024);
    }

    #[test]
    fn unattainable_lists_bounds() {
        let tiny = ModelConfig::mamba2(32, 1, 1, 64);
        let tpl = ModelConfig::mamba3(32, 1, 512, 64, 4).with_vocab(1_000_000);
        let err = match_param_count_with(&tpl, &tiny).unwrap_err();
        assert!(err.to_string().contains("searched d_model"), "{err}");
    }
}
