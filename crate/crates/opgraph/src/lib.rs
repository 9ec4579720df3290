//! Operator-level workload descriptions for Mamba-1/2/3.
//!
//! [`build_layer_graph`] returns the per-layer operator inventory for a
//! (config, workload) pair, every node tagged with a [`Role`] so the
//! state-update block can be isolated. [`count_ops`] folds a graph into
//! model-wide per-token totals. The inventory itself is documented in
//! [`inventory`].

pub mod inventory;
mod workload;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use archspec::{ConfigError, Formulation, ModelConfig, VariantKind};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use inventory::Convention;
pub use workload::{default_chunk_size, Phase, WorkloadSpec, DEFAULT_CHUNK, DEFAULT_SEQ_LEN};

#[derive(Debug, Error)]
pub enum GraphError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{formulation} is not valid for {variant}: {reason}")]
    Incompatible {
        variant: VariantKind,
        formulation: Formulation,
        reason: &'static str,
    },
    #[error("invalid workload: {0}")]
    Workload(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpKind {
    MatMul,
    Conv,
    Elementwise,
    Nonlinearity,
    ScanCombine,
}

impl OpKind {
    pub const ALL: [OpKind; 5] = [
        Self::MatMul,
        Self::Conv,
        Self::Elementwise,
        Self::Nonlinearity,
        Self::ScanCombine,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::MatMul => "matmul",
            Self::Conv => "conv",
            Self::Elementwise => "elementwise",
            Self::Nonlinearity => "nonlinearity",
            Self::ScanCombine => "scan_combine",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    StateUpdate,
    Projection,
    Other,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::StateUpdate => "state_update",
            Self::Projection => "projection",
            Self::Other => "other",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorNode {
    pub name: String,
    pub kind: OpKind,
    pub role: Role,
    /// Fusion group; activation traffic is decided per group.
    pub group: String,
    pub ops_per_token: f64,
    pub weight_params: u64,
    pub weight_bytes: u64,
    pub act_in_bytes: f64,
    pub act_out_bytes: f64,
    /// Recurrent state read plus written per token when the state is not
    /// resident on chip.
    pub state_bytes: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerGraph {
    pub variant: VariantKind,
    pub workload: WorkloadSpec,
    pub n_layers: u64,
    /// One layer, in execution order; replicated `n_layers` times.
    pub layer: Vec<OperatorNode>,
    /// Embedding, final norm and LM head.
    pub model: Vec<OperatorNode>,
}

impl LayerGraph {
    pub fn is_empty(&self) -> bool {
        self.layer.is_empty() && self.model.is_empty()
    }

    /// Line-oriented listing, one node per line, tab separated:
    /// `scope name kind role group ops weight_bytes act_in act_out state`.
    pub fn dump(&self) -> String {
        let mut out = format!(
            "# {} {} {} L={} B={} Q={} layers={}\n",
            self.variant,
            self.workload.phase,
            self.workload.formulation,
            self.workload.seq_len,
            self.workload.batch,
            self.workload.chunk_size,
            self.n_layers
        );
        let scopes = [("layer", &self.layer), ("model", &self.model)];
        for (scope, nodes) in scopes {
            for n in nodes {
                let _ = writeln!(
                    out,
                    "{scope}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                    n.name,
                    n.kind.as_str(),
                    n.role.as_str(),
                    n.group,
                    fmt_num(n.ops_per_token),
                    n.weight_bytes,
                    fmt_num(n.act_in_bytes),
                    fmt_num(n.act_out_bytes),
                    fmt_num(n.state_bytes)
                );
            }
        }
        out
    }
}

fn fmt_num(x: f64) -> String {
    if x.fract() == 0.0 {
        format!("{x:.0}")
    } else {
        format!("{x:.6}")
    }
}

/// Ops split by operator kind.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct KindOps {
    pub matmul: f64,
    pub conv: f64,
    pub elementwise: f64,
    pub nonlinearity: f64,
    pub scan_combine: f64,
}

impl KindOps {
    pub fn get(&self, kind: OpKind) -> f64 {
        match kind {
            OpKind::MatMul => self.matmul,
            OpKind::Conv => self.conv,
            OpKind::Elementwise => self.elementwise,
            OpKind::Nonlinearity => self.nonlinearity,
            OpKind::ScanCombine => self.scan_combine,
        }
    }

    fn slot(&mut self, kind: OpKind) -> &mut f64 {
        match kind {
            OpKind::MatMul => &mut self.matmul,
            OpKind::Conv => &mut self.conv,
            OpKind::Elementwise => &mut self.elementwise,
            OpKind::Nonlinearity => &mut self.nonlinearity,
            OpKind::ScanCombine => &mut self.scan_combine,
        }
    }

    pub fn total(&self) -> f64 {
        OpKind::ALL.iter().map(|&k| self.get(k)).sum()
    }
}

/// Model-wide totals of one fusion group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelTotals {
    pub name: String,
    /// Contains at least one state-update node.
    pub state_update: bool,
    pub ops: KindOps,
    pub state_update_ops: f64,
    pub state_update_by_kind: KindOps,
    pub weight_bytes: f64,
    pub act_bytes_per_token: f64,
    pub state_bytes_per_token: f64,
    /// Activation bytes live across one instance's full pass (one layer,
    /// whole prefill or one decode step over the batch).
    pub live_set_bytes: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpTotals {
    pub total_ops_per_token: f64,
    pub state_update_ops_per_token: f64,
    pub projection_ops_per_token: f64,
    pub ops_by_kind: KindOps,
    pub weight_bytes_total: f64,
    pub act_bytes_per_token: f64,
    pub state_bytes_per_token: f64,
    pub kernels: Vec<KernelTotals>,
    pub workload: WorkloadSpec,
}

pub fn build_layer_graph(cfg: &ModelConfig, wl: &WorkloadSpec) -> Result<LayerGraph, GraphError> {
    build_layer_graph_with(cfg, wl, &Convention::default())
}

pub fn build_layer_graph_with(
    cfg: &ModelConfig,
    wl: &WorkloadSpec,
    conv: &Convention,
) -> Result<LayerGraph, GraphError> {
    cfg.validate()?;
    wl.validate(cfg)?;
    let (layer, model) = if cfg.n_layers == 0 {
        (Vec::new(), Vec::new())
    } else {
        (
            inventory::layer_nodes(cfg, wl, conv),
            inventory::model_nodes(cfg, wl, conv),
        )
    };
    Ok(LayerGraph {
        variant: cfg.variant,
        workload: *wl,
        n_layers: cfg.n_layers,
        layer,
        model,
    })
}

pub fn count_ops(graph: &LayerGraph) -> OpTotals {
    let wl = &graph.workload;
    let tokens_live = match wl.phase {
        Phase::Prefill => (wl.seq_len * wl.batch) as f64,
        Phase::Decode => wl.batch as f64,
    };
    let mut kernels: BTreeMap<(usize, String), KernelTotals> = BTreeMap::new();
    let mut order: BTreeMap<String, usize> = BTreeMap::new();
    let scopes = [(graph.n_layers as f64, &graph.layer), (1.0, &graph.model)];
    for (reps, nodes) in scopes {
        for n in nodes {
            let next = order.len();
            let idx = *order.entry(n.group.clone()).or_insert(next);
            let k = kernels
                .entry((idx, n.group.clone()))
                .or_insert_with(|| KernelTotals {
                    name: n.group.clone(),
                    state_update: false,
                    ops: KindOps::default(),
                    state_update_ops: 0.0,
                    state_update_by_kind: KindOps::default(),
                    weight_bytes: 0.0,
                    act_bytes_per_token: 0.0,
                    state_bytes_per_token: 0.0,
                    live_set_bytes: 0.0,
                });
            *k.ops.slot(n.kind) += reps * n.ops_per_token;
            if n.role == Role::StateUpdate {
                k.state_update = true;
                k.state_update_ops += reps * n.ops_per_token;
                *k.state_update_by_kind.slot(n.kind) += reps * n.ops_per_token;
            }
            let act = n.act_in_bytes + n.act_out_bytes;
            k.weight_bytes += reps * n.weight_bytes as f64;
            k.act_bytes_per_token += reps * act;
            k.state_bytes_per_token += reps * n.state_bytes;
            k.live_set_bytes += tokens_live * act;
        }
    }
    let kernels: Vec<KernelTotals> = kernels.into_values().collect();

    let mut ops_by_kind = KindOps::default();
    let mut projection = 0.0;
    for (reps, nodes) in scopes {
        for n in nodes {
            *ops_by_kind.slot(n.kind) += reps * n.ops_per_token;
            if n.role == Role::Projection {
                projection += reps * n.ops_per_token;
            }
        }
    }
    OpTotals {
        total_ops_per_token: ops_by_kind.total(),
        state_update_ops_per_token: kernels.iter().map(|k| k.state_update_ops).sum(),
        projection_ops_per_token: projection,
        ops_by_kind,
        weight_bytes_total: kernels.iter().map(|k| k.weight_bytes).sum(),
        act_bytes_per_token: kernels.iter().map(|k| k.act_bytes_per_token).sum(),
        state_bytes_per_token: kernels.iter().map(|k| k.state_bytes_per_token).sum(),
        kernels,
        workload: *wl,
    }
}

/// Builds and counts in one step.
pub fn totals(cfg: &ModelConfig, wl: &WorkloadSpec) -> Result<OpTotals, GraphError> {
    Ok(count_ops(&build_layer_graph(cfg, wl)?))
}

/// State-update ops of the variant's parallel prefill formulation relative
/// to the sequential one, at sequence length `l` and chunk size `q`.
pub fn formulation_overhead(cfg: &ModelConfig, l: u64, q: u64) -> Result<f64, GraphError> {
    let par = Formulation::parallel_for(cfg.variant);
    let seq = totals(cfg, &WorkloadSpec::prefill(Formulation::Sequential, l).with_chunk(q))?;
    let alt = totals(cfg, &WorkloadSpec::prefill(par, l).with_chunk(q))?;
    if seq.state_update_ops_per_token == 0.0 {
        return Ok(1.0);
    }
    Ok(alt.state_update_ops_per_token / seq.state_update_ops_per_token)
}
