use archspec::{match_param_count, param_count, Formulation, ModelConfig, VariantKind};
use opgraph::{WorkloadSpec, DEFAULT_SEQ_LEN};
use serde::{Deserialize, Serialize};

use crate::hardware::HardwareConfig;
use crate::roofline::{evaluate, PerfEstimate, RooflineOptions};
use crate::PerfError;

/// Depth of the size-sweep family, held fixed while width scales.
pub const SWEEP_DEPTH: u64 = 48;
/// Base widths step in this many channels so that the Mamba-3 width
/// `d/√R = d/2` stays on the head-dimension grid.
pub const SWEEP_WIDTH_STEP: u64 = 64;
pub const SWEEP_MAX_WIDTH: u64 = 64 * 256;
/// Smallest accepted target size.
pub const MIN_SWEEP_PARAMS: f64 = 1e6;
/// Largest accepted relative miss of the nearest family member.
pub const SWEEP_SIZE_TOLERANCE: f64 = 0.5;

/// Which estimate produced the sweep numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    /// The analytic roofline with no mapping-efficiency correction.
    PureRoofline,
}

impl SweepMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepMode::PureRoofline => "pure roofline",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Latency ratio to the baseline.
    Raw,
    /// Latency per parameter relative to the baseline, which cancels the
    /// residual mismatch left by discrete width and depth.
    PerParameter,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub baseline: VariantKind,
    pub normalization: Normalization,
    pub roofline: RooflineOptions,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            baseline: VariantKind::Mamba2,
            normalization: Normalization::PerParameter,
            roofline: RooflineOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizePoint {
    pub variant: VariantKind,
    pub config: ModelConfig,
    pub params: u64,
    pub estimate: PerfEstimate,
    pub normalized_latency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeRow {
    pub target_params: f64,
    pub points: Vec<SizePoint>,
}

impl SizeRow {
    pub fn point(&self, v: VariantKind) -> Option<&SizePoint> {
        self.points.iter().find(|p| p.variant == v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeSweep {
    pub mode: SweepMode,
    pub baseline: VariantKind,
    pub normalization: Normalization,
    pub rows: Vec<SizeRow>,
}

/// `n` log-spaced sizes from `from` to `to`, both included.
pub fn log_sizes(from: f64, to: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![from],
        _ => (0..n)
            .map(|i| from * (to / from).powf(i as f64 / (n - 1) as f64))
            .collect(),
    }
}

/// Mamba-2 member of the sweep family nearest to `params`: fixed depth and
/// vocabulary, width on a 64-channel grid. Vocabulary dominates the small
/// end, so the nearest member can miss the target by a wide margin; the
/// actual count is reported next to the target.
pub fn base_config_for_size(params: f64) -> Result<ModelConfig, PerfError> {
    let out_of_range = || PerfError::SizeOutOfRange {
        params,
        min_params: MIN_SWEEP_PARAMS,
        d_lo: SWEEP_WIDTH_STEP,
        d_hi: SWEEP_MAX_WIDTH,
        n_layers: SWEEP_DEPTH,
    };
    if !params.is_finite() || params < MIN_SWEEP_PARAMS {
        return Err(out_of_range());
    }
    let mut best: Option<(ModelConfig, f64)> = None;
    for d in (SWEEP_WIDTH_STEP..=SWEEP_MAX_WIDTH).step_by(SWEEP_WIDTH_STEP as usize) {
        let cfg = ModelConfig::template(VariantKind::Mamba2, d, SWEEP_DEPTH);
        let p = param_count(&cfg)? as f64;
        let dist = (p - params).abs();
        if best.as_ref().is_none_or(|(_, b)| dist < *b) {
            best = Some((cfg, dist));
        }
        if p > params {
            break;
        }
    }
    match best {
        Some((cfg, dist)) if dist / params <= SWEEP_SIZE_TOLERANCE => Ok(cfg),
        _ => Err(out_of_range()),
    }
}

fn sweep_workload() -> WorkloadSpec {
    WorkloadSpec::prefill(Formulation::Sequential, DEFAULT_SEQ_LEN)
}

/// Parameter-matched prefill latency per variant and size, normalized to
/// the baseline variant at each size (or the first listed variant when the
/// baseline is absent).
pub fn sweep_model_size(
    sizes: &[f64],
    variants: &[VariantKind],
    hw: &HardwareConfig,
    opts: &SweepOptions,
) -> Result<SizeSweep, PerfError> {
    let reference = if variants.contains(&opts.baseline) {
        Some(opts.baseline)
    } else {
        variants.first().copied()
    };
    let mut rows = Vec::with_capacity(sizes.len());
    for &size in sizes {
        let base = base_config_for_size(size)?;
        let mut points = Vec::with_capacity(variants.len());
        for &v in variants {
            let cfg = if v == VariantKind::Mamba2 {
                base.clone()
            } else {
                match_param_count(v, &base)?
            };
            let estimate = evaluate(&cfg, &sweep_workload(), hw, &opts.roofline)?;
            points.push(SizePoint {
                variant: v,
                params: param_count(&cfg)?,
                config: cfg,
                estimate,
                normalized_latency: 1.0,
            });
        }
        let per_param = |p: &SizePoint| match opts.normalization {
            Normalization::Raw => p.estimate.latency_s_per_token,
            Normalization::PerParameter => p.estimate.latency_s_per_token / p.params as f64,
        };
        if let Some(r) = reference.and_then(|r| points.iter().find(|p| p.variant == r)) {
            let denom = per_param(r);
            let values: Vec<f64> = points.iter().map(per_param).collect();
            for (p, v) in points.iter_mut().zip(values) {
                p.normalized_latency = v / denom;
            }
        }
        rows.push(SizeRow {
            target_params: size,
            points,
        });
    }
    Ok(SizeSweep {
        mode: SweepMode::PureRoofline,
        baseline: reference.unwrap_or(opts.baseline),
        normalization: opts.normalization,
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchPoint {
    pub batch: u64,
    pub estimate: PerfEstimate,
}

/// Decode estimates over batch sizes at a fixed context length.
pub fn sweep_batch(
    cfg: &ModelConfig,
    batches: &[u64],
    hw: &HardwareConfig,
    opts: &RooflineOptions,
) -> Result<Vec<BatchPoint>, PerfError> {
    batches
        .iter()
        .map(|&b| {
            let wl = WorkloadSpec::decode(b, DEFAULT_SEQ_LEN);
            Ok(BatchPoint {
                batch: b,
                estimate: evaluate(cfg, &wl, hw, opts)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_sizes_hit_endpoints() {
        let s = log_sizes(15e6, 880e6, 5);
        assert_eq!(s.len(), 5);
        assert_eq!(s[0], 15e6);
        assert!((s[4] / 880e6 - 1.0).abs() < 1e-12);
        assert!(log_sizes(1.0, 2.0, 0).is_empty());
    }

    #[test]
    fn tiny_sizes_are_rejected_with_bounds() {
        let err = base_config_for_size(5e5).unwrap_err().to_string();
        assert!(err.contains("d_model 64..=16384"), "{err}");
        assert!(base_config_for_size(f64::NAN).is_err());
    }

    #[test]
    fn single_variant_normalizes_to_one() {
        let s = sweep_model_size(
            &[50e6],
            &[VariantKind::Mamba3],
            &HardwareConfig::default(),
            &SweepOptions::default(),
        )
        .unwrap();
        assert_eq!(s.rows[0].points[0].normalized_latency, 1.0);
    }
}
