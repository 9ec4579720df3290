use archspec::ModelConfig;
use opgraph::{KernelTotals, KindOps, OpKind, OpTotals, Phase, WorkloadSpec};
use serde::{Deserialize, Serialize};

use crate::hardware::{peak_compute, HardwareConfig};
use crate::PerfError;

/// How operator kinds map onto the two compute arrays.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComputeMapping {
    /// Every op runs at the MAC-array peak. This is the single-ceiling
    /// roofline behind the reference throughput numbers.
    #[default]
    Unified,
    /// MatMul/Conv on the MAC array, everything else on the SIMD lanes,
    /// never overlapped.
    PerArray,
}

/// How per-kernel times combine into a per-token latency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Composition {
    /// `max(total compute, total memory)`.
    #[default]
    WholeModel,
    /// Sum over kernels of `max(compute, memory)`.
    Serial,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RooflineOptions {
    pub mapping: ComputeMapping,
    pub composition: Composition,
    /// Fraction of SRAM held back from activation buffering.
    pub sram_reserve: f64,
}

impl Default for RooflineOptions {
    fn default() -> Self {
        Self {
            mapping: ComputeMapping::Unified,
            composition: Composition::WholeModel,
            sram_reserve: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Bound {
    ComputeBound,
    MemoryBound,
}

/// DRAM bytes per token, split by tensor class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Traffic {
    pub weights: f64,
    pub activations: f64,
    pub state: f64,
}

impl Traffic {
    pub fn total(&self) -> f64 {
        self.weights + self.activations + self.state
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerfEstimate {
    /// GOps per token.
    pub ops_per_token: f64,
    /// GOps per token inside the state-update block.
    pub state_update_ops: f64,
    /// Whole-model ops per DRAM byte.
    pub oi_ops_per_byte: f64,
    /// State-update ops per byte crossing the scan kernel boundary;
    /// `None` when the block moves no bytes.
    pub state_update_oi: Option<f64>,
    pub traffic: Traffic,
    pub throughput_tok_per_s: f64,
    pub latency_s_per_token: f64,
    pub energy_mj_per_token: f64,
    pub compute_s: f64,
    pub memory_s: f64,
    /// Effective ridge point: `(ops / compute_s) / bandwidth`. Equals
    /// [`HardwareConfig::ridge_point`] under the unified mapping.
    pub ridge_point: f64,
    pub bound: Bound,
}

fn amortization(wl: &WorkloadSpec) -> f64 {
    match wl.phase {
        Phase::Prefill => (wl.seq_len * wl.batch) as f64,
        Phase::Decode => wl.batch as f64,
    }
}

fn spills(k: &KernelTotals, hw: &HardwareConfig, opts: &RooflineOptions) -> bool {
    k.live_set_bytes > hw.sram_bytes as f64 * (1.0 - opts.sram_reserve)
}

fn kernel_traffic(
    k: &KernelTotals,
    wl: &WorkloadSpec,
    hw: &HardwareConfig,
    opts: &RooflineOptions,
) -> Traffic {
    let weights = k.weight_bytes / amortization(wl);
    match wl.phase {
        Phase::Prefill => Traffic {
            weights,
            activations: if spills(k, hw, opts) {
                k.act_bytes_per_token
            } else {
                0.0
            },
            state: 0.0,
        },
        Phase::Decode => Traffic {
            weights,
            activations: 0.0,
            state: k.state_bytes_per_token,
        },
    }
}

/// DRAM traffic per token.
///
/// Prefill streams weights once per pass of `L·B` tokens, keeps each layer's
/// recurrent state on chip and spills a kernel's activations only when its
/// live set exceeds the usable SRAM. Decode amortizes weights over the
/// batch, streams the recurrent state every step and keeps activations on
/// chip.
pub fn traffic_per_token(
    totals: &OpTotals,
    hw: &HardwareConfig,
    opts: &RooflineOptions,
) -> Traffic {
    let wl = &totals.workload;
    totals
        .kernels
        .iter()
        .map(|k| kernel_traffic(k, wl, hw, opts))
        .fold(Traffic::default(), |a, t| Traffic {
            weights: a.weights + t.weights,
            activations: a.activations + t.activations,
            state: a.state + t.state,
        })
}

/// Seconds to execute `ops` under `mapping`.
pub fn compute_time(ops: &KindOps, hw: &HardwareConfig, mapping: ComputeMapping) -> f64 {
    match mapping {
        ComputeMapping::Unified => ops.total() / hw.matmul_peak(),
        ComputeMapping::PerArray => OpKind::ALL
            .iter()
            .map(|&k| ops.get(k) / peak_compute(hw, k))
            .sum(),
    }
}

/// Bytes crossing the state-update kernel boundary per token: boundary
/// activations in prefill, recurrent state in decode.
pub fn state_update_bytes(totals: &OpTotals) -> f64 {
    totals
        .kernels
        .iter()
        .filter(|k| k.state_update)
        .map(|k| match totals.workload.phase {
            Phase::Prefill => k.act_bytes_per_token,
            Phase::Decode => k.state_bytes_per_token,
        })
        .sum()
}

pub fn energy_mj(ops: f64, bytes: f64, hw: &HardwareConfig) -> f64 {
    (ops * hw.e_op_pj + bytes * 8.0 * hw.e_mem_pj_per_bit) * 1e-9
}

pub fn roofline_estimate(
    totals: &OpTotals,
    hw: &HardwareConfig,
    opts: &RooflineOptions,
) -> Result<PerfEstimate, PerfError> {
    let ops = totals.total_ops_per_token;
    let traffic = traffic_per_token(totals, hw, opts);
    let bytes = traffic.total();
    if ops == 0.0 && bytes == 0.0 {
        return Err(PerfError::EmptyWorkload);
    }
    let compute_s = compute_time(&totals.ops_by_kind, hw, opts.mapping);
    let memory_s = bytes / hw.dram_bw_bytes_per_s;
    let latency = match opts.composition {
        Composition::WholeModel => compute_s.max(memory_s),
        Composition::Serial => totals
            .kernels
            .iter()
            .map(|k| {
                let c = compute_time(&k.ops, hw, opts.mapping);
                let m = kernel_traffic(k, &totals.workload, hw, opts).total()
                    / hw.dram_bw_bytes_per_s;
                c.max(m)
            })
            .sum(),
    };
    let su_bytes = state_update_bytes(totals);
    let ridge = if compute_s > 0.0 {
        ops / compute_s / hw.dram_bw_bytes_per_s
    } else {
        hw.ridge_point()
    };
    let oi = if bytes > 0.0 { ops / bytes } else { f64::INFINITY };
    Ok(PerfEstimate {
        ops_per_token: ops / 1e9,
        state_update_ops: totals.state_update_ops_per_token / 1e9,
        oi_ops_per_byte: oi,
        state_update_oi: (su_bytes > 0.0).then(|| totals.state_update_ops_per_token / su_bytes),
        traffic,
        throughput_tok_per_s: 1.0 / latency,
        latency_s_per_token: latency,
        energy_mj_per_token: energy_mj(ops, bytes, hw),
        compute_s,
        memory_s,
        ridge_point: ridge,
        bound: if compute_s >= memory_s {
            Bound::ComputeBound
        } else {
            Bound::MemoryBound
        },
    })
}

/// Builds the graph with the hardware's datatypes and runs the roofline.
pub fn evaluate(
    cfg: &ModelConfig,
    wl: &WorkloadSpec,
    hw: &HardwareConfig,
    opts: &RooflineOptions,
) -> Result<PerfEstimate, PerfError> {
    let graph = opgraph::build_layer_graph_with(cfg, wl, &hw.convention())?;
    roofline_estimate(&opgraph::count_ops(&graph), hw, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use archspec::{Formulation, VariantKind};

    fn small() -> ModelConfig {
        ModelConfig::template(VariantKind::Mamba2, 256, 4)
    }

    #[test]
    fn empty_model_is_an_error() {
        let cfg = small().with_layers(0);
        let wl = WorkloadSpec::prefill(Formulation::Sequential, 64);
        let err = evaluate(&cfg, &wl, &HardwareConfig::default(), &RooflineOptions::default());
        assert!(matches!(err, Err(PerfError::EmptyWorkload)));
    }

    #[test]
    fn prefill_at_length_one_streams_all_weights() {
        let cfg = small();
        let wl = WorkloadSpec::prefill(Formulation::Sequential, 1);
        let t = opgraph::totals(&cfg, &wl).unwrap();
        let tr = traffic_per_token(&t, &HardwareConfig::default(), &RooflineOptions::default());
        assert_eq!(tr.weights, t.weight_bytes_total);
    }

    #[test]
    fn large_sram_removes_activation_traffic() {
        let cfg = small();
        let wl = WorkloadSpec::prefill(Formulation::Sequential, 2048);
        let t = opgraph::totals(&cfg, &wl).unwrap();
        let opts = RooflineOptions::default();
        let tiny = traffic_per_token(&t, &HardwareConfig::default(), &opts);
        assert!(tiny.activations > 0.0);
        let hw = HardwareConfig {
            sram_bytes: 1 << 40,
            ..HardwareConfig::default()
        };
        assert_eq!(traffic_per_token(&t, &hw, &opts).activations, 0.0);
        let reserve = RooflineOptions {
            sram_reserve: 1.0,
            ..opts
        };
        assert_eq!(
            traffic_per_token(&t, &hw, &reserve).activations,
            t.act_bytes_per_token
        );
    }

    #[test]
    fn serial_is_never_faster() {
        let cfg = small();
        let hw = HardwareConfig::default();
        for wl in [
            WorkloadSpec::prefill(Formulation::Ssd, 512),
            WorkloadSpec::decode(16, 512),
        ] {
            let whole = evaluate(&cfg, &wl, &hw, &RooflineOptions::default()).unwrap();
            let serial = RooflineOptions {
                composition: Composition::Serial,
                ..RooflineOptions::default()
            };
            let s = evaluate(&cfg, &wl, &hw, &serial).unwrap();
            assert!(s.latency_s_per_token >= whole.latency_s_per_token * (1.0 - 1e-12));
        }
    }
}
