//! Reference performance table and the search that produced the shipped
//! 880M configurations.
//!
//! Every row is a B=1 prefill of `L = 2048` under the unified mapping and
//! whole-model composition. A row's margin is `1 − |error|/tolerance` for its
//! worst metric, so a positive margin means every metric is in band.

use archspec::{
    match_param_count_with, param_count, Formulation, ModelConfig, VariantKind,
};
use opgraph::{WorkloadSpec, DEFAULT_SEQ_LEN};
use serde::{Deserialize, Serialize};

use crate::hardware::HardwareConfig;
use crate::roofline::{evaluate, PerfEstimate, RooflineOptions};
use crate::PerfError;

pub const TOTAL_TOL: f64 = 0.02;
pub const STATE_UPDATE_TOL: f64 = 0.05;
pub const OI_TOL: f64 = 0.10;
pub const THROUGHPUT_TOL: f64 = 0.02;
/// Mamba-3 over Mamba-2 total ops, sequential form.
pub const TOTAL_DELTA: f64 = 0.13;
pub const TOTAL_DELTA_TOL: f64 = 0.02;
/// Mamba-3 over Mamba-2 state-update ops, sequential form.
pub const STATE_UPDATE_RATIO: f64 = 2.0;
pub const STATE_UPDATE_RATIO_TOL: f64 = 0.1;
/// Mamba-3 over Mamba-2 energy per token, sequential form.
pub const ENERGY_RATIO: f64 = 1.13;
pub const ENERGY_RATIO_BAND: (f64, f64) = (1.05, 1.25);
/// Parameter budget of the reference models.
pub const TARGET_PARAMS: f64 = 880e6;
pub const PARAMS_TOL: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub variant: VariantKind,
    pub formulation: Formulation,
    /// GOps per token.
    pub total: f64,
    /// GOps per token.
    pub state_update: f64,
    /// State-update ops per byte.
    pub oi: f64,
    /// Tokens per second.
    pub throughput: f64,
}

const fn target(
    variant: VariantKind,
    formulation: Formulation,
    total: f64,
    state_update: f64,
    oi: f64,
    throughput: f64,
) -> Target {
    Target {
        variant,
        formulation,
        total,
        state_update,
        oi,
        throughput,
    }
}

pub const REFERENCE_ROWS: [Target; 6] = [
    target(VariantKind::Mamba1, Formulation::Sequential, 1.52, 0.066, 53.2, 336.7),
    target(VariantKind::Mamba1, Formulation::PScan, 1.56, 0.104, 76.7, 328.5),
    target(VariantKind::Mamba2, Formulation::Sequential, 1.43, 0.048, 50.8, 357.1),
    target(VariantKind::Mamba2, Formulation::Ssd, 1.46, 0.075, 31.7, 350.3),
    target(VariantKind::Mamba3, Formulation::Sequential, 1.62, 0.098, 49.2, 317.0),
    target(VariantKind::Mamba3, Formulation::Ssd, 1.71, 0.189, 37.0, 300.2),
];

pub fn target_for(variant: VariantKind, formulation: Formulation) -> Option<&'static Target> {
    REFERENCE_ROWS
        .iter()
        .find(|t| t.variant == variant && t.formulation == formulation)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRow {
    pub variant: VariantKind,
    pub formulation: Formulation,
    pub params: u64,
    pub estimate: PerfEstimate,
}

impl ReferenceRow {
    /// Worst normalized margin against the reference row, if there is one.
    pub fn margin(&self) -> Option<f64> {
        let t = target_for(self.variant, self.formulation)?;
        let e = &self.estimate;
        let oi = e.state_update_oi.unwrap_or(0.0);
        Some(
            [
                margin(e.ops_per_token, t.total, TOTAL_TOL),
                margin(e.state_update_ops, t.state_update, STATE_UPDATE_TOL),
                margin(oi, t.oi, OI_TOL),
                margin(e.throughput_tok_per_s, t.throughput, THROUGHPUT_TOL),
            ]
            .into_iter()
            .fold(f64::INFINITY, f64::min),
        )
    }
}

fn margin(value: f64, target: f64, tol: f64) -> f64 {
    1.0 - (value / target - 1.0).abs() / tol
}

fn abs_margin(value: f64, target: f64, tol: f64) -> f64 {
    1.0 - (value - target).abs() / tol
}

/// Options used for every reference row.
pub fn reference_options() -> RooflineOptions {
    RooflineOptions::default()
}

pub fn reference_workload(cfg: &ModelConfig, formulation: Formulation) -> WorkloadSpec {
    WorkloadSpec::prefill_for(cfg, formulation, DEFAULT_SEQ_LEN)
}

/// Sequential and parallel rows for each config, in input order.
pub fn reference_rows(configs: &[ModelConfig], hw: &HardwareConfig) -> Result<Vec<ReferenceRow>, PerfError> {
    let mut rows = Vec::with_capacity(2 * configs.len());
    for cfg in configs {
        let params = param_count(cfg)?;
        for f in [Formulation::Sequential, Formulation::parallel_for(cfg.variant)] {
            rows.push(ReferenceRow {
                variant: cfg.variant,
                formulation: f,
                params,
                estimate: evaluate(cfg, &reference_workload(cfg, f), hw, &reference_options())?,
            });
        }
    }
    Ok(rows)
}

/// Cross-variant deltas between the sequential Mamba-2 and Mamba-3 rows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Deltas {
    pub total_delta: f64,
    pub state_update_ratio: f64,
    pub throughput_delta: f64,
    pub energy_ratio: f64,
}

pub fn deltas(rows: &[ReferenceRow]) -> Option<Deltas> {
    let seq = |v| {
        rows.iter()
            .find(|r| r.variant == v && r.formulation == Formulation::Sequential)
    };
    let (m2, m3) = (&seq(VariantKind::Mamba2)?.estimate, &seq(VariantKind::Mamba3)?.estimate);
    Some(Deltas {
        total_delta: m3.ops_per_token / m2.ops_per_token - 1.0,
        state_update_ratio: m3.state_update_ops / m2.state_update_ops,
        throughput_delta: m3.throughput_tok_per_s / m2.throughput_tok_per_s - 1.0,
        energy_ratio: m3.energy_mj_per_token / m2.energy_mj_per_token,
    })
}

impl Deltas {
    pub fn margin(&self) -> f64 {
        abs_margin(self.total_delta, TOTAL_DELTA, TOTAL_DELTA_TOL).min(abs_margin(
            self.state_update_ratio,
            STATE_UPDATE_RATIO,
            STATE_UPDATE_RATIO_TOL,
        ))
    }
}

/// Candidate grid of the calibration search.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationGrid {
    pub mamba1_widths: Vec<u64>,
    pub mamba1_layers: Vec<u64>,
    pub mamba1_states: Vec<u64>,
    pub mamba2_widths: Vec<u64>,
    pub mamba2_layers: Vec<u64>,
    pub mamba2_states: Vec<u64>,
    pub mamba3_states: Vec<u64>,
}

impl Default for CalibrationGrid {
    fn default() -> Self {
        Self {
            mamba1_widths: (1280..=1792).step_by(32).collect(),
            mamba1_layers: (40..=56).collect(),
            mamba1_states: vec![48, 56, 64],
            mamba2_widths: (1280..=1792).step_by(64).collect(),
            mamba2_layers: (40..=56).collect(),
            mamba2_states: vec![56, 64, 72],
            mamba3_states: vec![64, 72, 80],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub configs: [ModelConfig; 3],
    pub mamba1_margin: f64,
    pub mamba23_margin: f64,
}

/// Grid search for the configs that best fit [`REFERENCE_ROWS`].
///
/// Mamba-1 is fitted on its two rows and the 880M budget. Mamba-2 and
/// Mamba-3 are fitted jointly on their four rows and the two deltas, with
/// Mamba-3 parameter-matched to Mamba-2; the parameter budget is left out
/// because it cannot hold together with the op counts.
pub fn calibrate(hw: &HardwareConfig, grid: &CalibrationGrid) -> Result<Calibration, PerfError> {
    let mut best1: Option<(ModelConfig, f64)> = None;
    for &n in &grid.mamba1_states {
        for &d in &grid.mamba1_widths {
            for &l in &grid.mamba1_layers {
                let cfg = ModelConfig::template(VariantKind::Mamba1, d, l).with_state(n);
                let rows = reference_rows(std::slice::from_ref(&cfg), hw)?;
                let p = margin(param_count(&cfg)? as f64, TARGET_PARAMS, PARAMS_TOL);
                let m = rows.iter().filter_map(ReferenceRow::margin).fold(p, f64::min);
                if best1.as_ref().is_none_or(|(_, b)| m > *b) {
                    best1 = Some((cfg, m));
                }
            }
        }
    }

    let mut best23: Option<(ModelConfig, ModelConfig, f64)> = None;
    for &n2 in &grid.mamba2_states {
        for &d in &grid.mamba2_widths {
            for &l in &grid.mamba2_layers {
                let m2 = ModelConfig::template(VariantKind::Mamba2, d, l).with_state(n2);
                let rows2 = reference_rows(std::slice::from_ref(&m2), hw)?;
                for &n3 in &grid.mamba3_states {
                    let tpl = ModelConfig::template(VariantKind::Mamba3, d, l).with_state(n3);
                    let Ok(m3) = match_param_count_with(&tpl, &m2) else {
                        continue;
                    };
                    let mut rows = rows2.clone();
                    rows.extend(reference_rows(std::slice::from_ref(&m3), hw)?);
                    let dm = deltas(&rows).map_or(f64::NEG_INFINITY, |x| x.margin());
                    let m = rows.iter().filter_map(ReferenceRow::margin).fold(dm, f64::min);
                    if best23.as_ref().is_none_or(|(_, _, b)| m > *b) {
                        best23 = Some((m2.clone(), m3, m));
                    }
                }
            }
        }
    }

    match (best1, best23) {
        (Some((m1, a)), Some((m2, m3, b))) => Ok(Calibration {
            configs: [m1, m2, m3],
            mamba1_margin: a,
            mamba23_margin: b,
        }),
        _ => Err(PerfError::EmptyGrid),
    }
}
