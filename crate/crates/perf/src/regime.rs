use archspec::{Formulation, ModelConfig, VariantKind};
use opgraph::{KindOps, WorkloadSpec, DEFAULT_SEQ_LEN};
use serde::{Deserialize, Serialize};

use crate::hardware::HardwareConfig;
use crate::roofline::{compute_time, state_update_bytes, ComputeMapping};
use crate::PerfError;

/// Batch used for the datacenter decode regime.
pub const HYPERSCALE_BATCH: u64 = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Single-stream prefill with the state on chip.
    EdgePrefill,
    /// Large-batch decode streaming the state from DRAM every step.
    HyperscaleDecode,
}

impl Scenario {
    pub const ALL: [Scenario; 2] = [Scenario::EdgePrefill, Scenario::HyperscaleDecode];

    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::EdgePrefill => "edge_prefill",
            Scenario::HyperscaleDecode => "hyperscale_decode",
        }
    }

    /// Edge prefill runs each variant in its deployed form: the recurrence
    /// for Mamba-1, SSD for Mamba-2/3. Decode is always step-by-step.
    pub fn workload(self, cfg: &ModelConfig) -> WorkloadSpec {
        match self {
            Scenario::EdgePrefill => {
                let f = match cfg.variant {
                    VariantKind::Mamba1 => Formulation::Sequential,
                    _ => Formulation::Ssd,
                };
                WorkloadSpec::prefill_for(cfg, f, DEFAULT_SEQ_LEN)
            }
            Scenario::HyperscaleDecode => WorkloadSpec::decode(HYPERSCALE_BATCH, DEFAULT_SEQ_LEN),
        }
    }

    /// Edge ASICs are modeled with one compute ceiling; the datacenter
    /// regime separates the matrix units from the vector units.
    pub fn mapping(self) -> ComputeMapping {
        match self {
            Scenario::EdgePrefill => ComputeMapping::Unified,
            Scenario::HyperscaleDecode => ComputeMapping::PerArray,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimePoint {
    pub variant: VariantKind,
    pub scenario: Scenario,
    pub formulation: Formulation,
    /// State-update ops per token.
    pub ops: f64,
    /// State-update bytes per token.
    pub bytes: f64,
    pub oi: f64,
    pub throughput_tok_per_s: f64,
    /// Throughput relative to the Mamba-1 entry of the same scenario.
    pub normalized: f64,
}

/// Roofline throughput of the state-update block alone.
pub fn state_update_regime_throughput(
    cfg: &ModelConfig,
    scenario: Scenario,
    hw: &HardwareConfig,
) -> Result<RegimePoint, PerfError> {
    let wl = scenario.workload(cfg);
    let graph = opgraph::build_layer_graph_with(cfg, &wl, &hw.convention())?;
    let totals = opgraph::count_ops(&graph);
    let by_kind = totals
        .kernels
        .iter()
        .filter(|k| k.state_update)
        .fold(KindOps::default(), |mut acc, k| {
            acc.matmul += k.state_update_by_kind.matmul;
            acc.conv += k.state_update_by_kind.conv;
            acc.elementwise += k.state_update_by_kind.elementwise;
            acc.nonlinearity += k.state_update_by_kind.nonlinearity;
            acc.scan_combine += k.state_update_by_kind.scan_combine;
            acc
        });
    let ops = totals.state_update_ops_per_token;
    let bytes = state_update_bytes(&totals);
    if ops == 0.0 {
        return Err(PerfError::EmptyWorkload);
    }
    let latency = compute_time(&by_kind, hw, scenario.mapping()).max(bytes / hw.dram_bw_bytes_per_s);
    Ok(RegimePoint {
        variant: cfg.variant,
        scenario,
        formulation: wl.formulation,
        ops,
        bytes,
        oi: if bytes > 0.0 { ops / bytes } else { f64::INFINITY },
        throughput_tok_per_s: 1.0 / latency,
        normalized: 1.0,
    })
}

/// One scenario over several configs, normalized to the first Mamba-1
/// entry (or the first entry when no Mamba-1 config is given).
pub fn regime_series(
    configs: &[ModelConfig],
    scenario: Scenario,
    hw: &HardwareConfig,
) -> Result<Vec<RegimePoint>, PerfError> {
    let mut points = configs
        .iter()
        .map(|c| state_update_regime_throughput(c, scenario, hw))
        .collect::<Result<Vec<_>, _>>()?;
    let reference = points
        .iter()
        .find(|p| p.variant == VariantKind::Mamba1)
        .or(points.first())
        .map(|p| p.throughput_tok_per_s);
    if let Some(r) = reference {
        for p in &mut points {
            p.normalized = p.throughput_tok_per_s / r;
        }
    }
    Ok(points)
}
