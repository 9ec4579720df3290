//! Operator inventories per (variant, formulation).
//!
//! Symbols: `D = d_model`, `D_i = E·D`, `N = d_state`, `K = d_conv`,
//! `r = dt_rank`, `H` heads of width `P`, MIMO rank `R`, `X = D_i·R`,
//! `S = D_i·N` state elements, `W` ops per transcendental. Counts are per
//! layer per token; one multiply-accumulate is two ops.
//!
//! Mamba-1:
//!
//! | node          | kind      | role        | ops                  |
//! |---------------|-----------|-------------|----------------------|
//! | norm          | elementw. | other       | `D`                  |
//! | in_proj       | matmul    | projection  | `2·D·2D_i`           |
//! | conv1d        | conv      | other       | `2K·D_i`             |
//! | silu          | nonlin.   | other       | `W·D_i`              |
//! | x_proj        | matmul    | projection  | `2·D_i·(r+2N)`       |
//! | dt_proj       | matmul    | projection  | `2·r·D_i + D_i`      |
//! | softplus      | nonlin.   | other       | `W·D_i`              |
//! | discretize    | nonlin.   | state upd.  | `(3+W)·S`            |
//! | state_update  | elementw. | state upd.  | `2·S`                |
//! | readout       | elementw. | state upd.  | `2·S`                |
//! | skip          | elementw. | other       | `2·D_i`              |
//! | gate          | elementw. | other       | `(W+1)·D_i`          |
//! | out_proj      | matmul    | projection  | `2·D_i·D`            |
//! | residual      | elementw. | other       | `D`                  |
//!
//! With `W = 1` the state-update block is exactly `8·D_i·N`: `Ā = exp(Δ·A)`
//! and `B̄x = Δ·B·x` take three multiplies and one exp per element.
//!
//! Mamba-2/3 replace the Δ path with a fused in-projection of width
//! `2X + 2NR + H`, a conv over `X + 2NR` channels and per-head scalars:
//! `dt_softplus` (`(1+W)·H`, other), `decay` (`(1+W)·H`), `x_dt` (`X`),
//! `state_update` (`S·(1+2R)`) and `readout` (`2·S·R`), then `skip`, `gate`,
//! `gated_norm` (`X`) and `out_proj` (`2·X·D`). For `R > 1` the update and
//! readout are rank-R matrix products and carry kind `MatMul`.
//!
//! PScan (Mamba-1 prefill) swaps `state_update` for a Blelloch scan over
//! `P = next_pow2(L)` padded elements: the initial state is folded into the
//! first element (`2·S`), then `P−1` up-sweep and `P−1` down-sweep combines
//! at `3·S` each, amortized over `L`.
//!
//! SSD (Mamba-2/3 prefill) swaps `state_update` and `readout` for chunked
//! block products. Per head per chunk of `Q`, with full (unmasked) blocks:
//! segment decays `Q(Q−1)/2 + (Q−1)`, scores `2Q²R²N`, mask `Q²R²`, intra
//! output `2Q²PR²`, input scaling `QPR`, chunk state `2QPNR`, state passing
//! `2PN`, state output `Q·2PNR`, output combine `Q·2PR`. The sequence is
//! padded to whole chunks with identity steps.
//!
//! # Traffic attribution
//!
//! Every node belongs to a fusion group (a kernel). The whole state-update
//! block runs as one `selective_scan` kernel whose boundary tensors are
//! x, Δ (or dt), B, C and z in, y out; softplus, skip and gate are fused
//! inside it and move no bytes of their own. SSD additionally re-reads the
//! `D_i`-wide x, one of B/C and dt in its chunk-state pass, and writes and
//! reads chunk states twice (state computation, then state passing).

use archspec::{Formulation, ModelConfig, VariantKind};

use crate::workload::{Phase, WorkloadSpec};
use crate::{OpKind, OperatorNode, Role};

/// Counting and datatype convention.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Convention {
    /// Ops charged per exp/softplus/SiLU evaluation.
    pub transcendental_ops: u64,
    pub weight_bits: u32,
    pub act_bits: u32,
    pub state_bits: u32,
}

impl Default for Convention {
    fn default() -> Self {
        Self {
            transcendental_ops: 1,
            weight_bits: 16,
            act_bits: 16,
            state_bits: 16,
        }
    }
}

pub(crate) const SCAN_GROUP: &str = "selective_scan";

struct Builder<'a> {
    conv: &'a Convention,
    nodes: Vec<OperatorNode>,
}

#[derive(Default, Clone, Copy)]
struct Io {
    act_in: f64,
    act_out: f64,
    /// Elements of recurrent state read and written per token.
    state_rw: f64,
    /// Activations that are state-typed (chunk states).
    state_act: bool,
}

impl Builder<'_> {
    #[allow(clippy::too_many_arguments)]
    fn push(
        &mut self,
        name: &str,
        kind: OpKind,
        role: Role,
        group: &str,
        ops: f64,
        params: u64,
        io: Io,
    ) {
        let act_w = if io.state_act {
            self.conv.state_bits
        } else {
            self.conv.act_bits
        } as f64
            / 8.0;
        self.nodes.push(OperatorNode {
            name: name.to_string(),
            kind,
            role,
            group: group.to_string(),
            ops_per_token: ops,
            weight_params: params,
            weight_bytes: params * self.conv.weight_bits as u64 / 8,
            act_in_bytes: io.act_in * act_w,
            act_out_bytes: io.act_out * act_w,
            state_bytes: io.state_rw * self.conv.state_bits as f64 / 8.0,
        });
    }
}

fn io(act_in: u64, act_out: u64) -> Io {
    Io {
        act_in: act_in as f64,
        act_out: act_out as f64,
        ..Io::default()
    }
}

pub(crate) fn layer_nodes(
    cfg: &ModelConfig,
    wl: &WorkloadSpec,
    conv: &Convention,
) -> Vec<OperatorNode> {
    let mut b = Builder {
        conv,
        nodes: Vec::new(),
    };
    let w = conv.transcendental_ops;
    let d = cfg.d_model;
    let di = cfg.d_inner();
    let n = cfg.d_state;
    let k = cfg.d_conv;
    let s = cfg.state_elems();
    let (ew, nl, mm) = (OpKind::Elementwise, OpKind::Nonlinearity, OpKind::MatMul);
    let (su, proj, other) = (Role::StateUpdate, Role::Projection, Role::Other);

    b.push("norm", ew, other, "norm", d as f64, d, io(d, d));
    match cfg.variant {
        VariantKind::Mamba1 => {
            let r = cfg.dt_rank;
            b.push("in_proj", mm, proj, "in_proj", (4 * d * di) as f64, 2 * d * di, io(d, 2 * di));
            b.push("conv1d", OpKind::Conv, other, "conv", (2 * k * di) as f64, di * (k + 1), io(di, di));
            b.push("silu", nl, other, "conv", (w * di) as f64, 0, Io::default());
            b.push(
                "x_proj",
                mm,
                proj,
                "x_proj",
                (2 * di * (r + 2 * n)) as f64,
                di * (r + 2 * n),
                io(di, r + 2 * n),
            );
            b.push(
                "dt_proj",
                mm,
                proj,
                "dt_proj",
                (2 * r * di + di) as f64,
                r * di + di,
                io(r, di),
            );
            b.push("softplus", nl, other, SCAN_GROUP, (w * di) as f64, 0, Io::default());
            b.push(
                "discretize",
                nl,
                su,
                SCAN_GROUP,
                ((3 + w) * s) as f64,
                di * n,
                io(2 * di + n, 0),
            );
            match wl.formulation {
                Formulation::PScan => {
                    let l = wl.seq_len;
                    let p = l.next_power_of_two();
                    let ops = (2 * s + 6 * s * (p - 1)) as f64 / l as f64;
                    b.push("pscan_combine", OpKind::ScanCombine, su, SCAN_GROUP, ops, 0, Io::default());
                }
                _ => b.push(
                    "state_update",
                    ew,
                    su,
                    SCAN_GROUP,
                    (2 * s) as f64,
                    0,
                    Io {
                        state_rw: (2 * s) as f64,
                        ..Io::default()
                    },
                ),
            }
            b.push("readout", ew, su, SCAN_GROUP, (2 * s) as f64, 0, io(n + di, di));
            b.push("skip", ew, other, SCAN_GROUP, (2 * di) as f64, di, Io::default());
            b.push("gate", ew, other, SCAN_GROUP, ((w + 1) * di) as f64, 0, Io::default());
            b.push("out_proj", mm, proj, "out_proj", (2 * di * d) as f64, di * d, io(di, d));
        }
        VariantKind::Mamba2 | VariantKind::Mamba3 => {
            let rk = cfg.mimo_rank;
            let x = cfg.x_width();
            let h = cfg.n_heads;
            let p = cfg.head_dim;
            let ow = 2 * x + 2 * n * rk + h;
            let ch = x + 2 * n * rk;
            let upd_kind = if rk > 1 { mm } else { ew };
            b.push("in_proj", mm, proj, "in_proj", (2 * d * ow) as f64, d * ow, io(d, ow));
            b.push("conv1d", OpKind::Conv, other, "conv", (2 * k * ch) as f64, ch * (k + 1), io(ch, ch));
            b.push("silu", nl, other, "conv", (w * ch) as f64, 0, Io::default());
            b.push("dt_softplus", nl, other, SCAN_GROUP, ((1 + w) * h) as f64, h, Io::default());
            b.push("decay", nl, su, SCAN_GROUP, ((1 + w) * h) as f64, h, Io::default());
            b.push("x_dt", ew, su, SCAN_GROUP, x as f64, 0, io(x + h, 0));
            match wl.formulation {
                Formulation::Ssd => {
                    let q = wl.chunk_size;
                    let l = wl.seq_len;
                    let chunks = l.div_ceil(q);
                    let f = (h * chunks) as f64 / l as f64;
                    let per = |c: u64| c as f64 * f;
                    b.push(
                        "ssd_segment_decay",
                        ew,
                        su,
                        SCAN_GROUP,
                        per(q * (q - 1) / 2 + (q - 1)),
                        0,
                        Io::default(),
                    );
                    b.push(
                        "ssd_scores",
                        mm,
                        su,
                        SCAN_GROUP,
                        per(2 * q * q * rk * rk * n),
                        0,
                        io(2 * n * rk, 0),
                    );
                    b.push("ssd_mask", ew, su, SCAN_GROUP, per(q * q * rk * rk), 0, Io::default());
                    b.push("ssd_intra", mm, su, SCAN_GROUP, per(2 * q * q * p * rk * rk), 0, Io::default());
                    b.push("ssd_input_scale", ew, su, SCAN_GROUP, per(q * p * rk), 0, Io::default());
                    b.push(
                        "ssd_chunk_state",
                        mm,
                        su,
                        SCAN_GROUP,
                        per(2 * q * p * n * rk),
                        0,
                        io(di + n * rk + h, 0),
                    );
                    let states = (2 * h * p * n * chunks) as f64 / l as f64;
                    b.push(
                        "ssd_state_passing",
                        ew,
                        su,
                        SCAN_GROUP,
                        per(2 * p * n),
                        0,
                        Io {
                            act_in: states,
                            act_out: states,
                            state_act: true,
                            ..Io::default()
                        },
                    );
                    b.push(
                        "ssd_state_output",
                        mm,
                        su,
                        SCAN_GROUP,
                        per(q * 2 * p * n * rk),
                        0,
                        Io::default(),
                    );
                    b.push(
                        "ssd_output_combine",
                        ew,
                        su,
                        SCAN_GROUP,
                        per(q * 2 * p * rk),
                        0,
                        io(x, x),
                    );
                }
                _ => {
                    b.push(
                        "state_update",
                        upd_kind,
                        su,
                        SCAN_GROUP,
                        (s * (1 + 2 * rk)) as f64,
                        0,
                        Io {
                            act_in: (n * rk) as f64,
                            state_rw: (2 * s) as f64,
                            ..Io::default()
                        },
                    );
                    b.push(
                        "readout",
                        upd_kind,
                        su,
                        SCAN_GROUP,
                        (2 * s * rk) as f64,
                        0,
                        io(n * rk + x, x),
                    );
                }
            }
            b.push("skip", ew, other, SCAN_GROUP, (2 * x) as f64, x, Io::default());
            b.push("gate", ew, other, SCAN_GROUP, ((w + 1) * x) as f64, 0, Io::default());
            b.push("gated_norm", ew, other, "gated_norm", x as f64, x, io(x, x));
            b.push("out_proj", mm, proj, "out_proj", (2 * x * d) as f64, x * d, io(x, d));
        }
    }
    b.push("residual", ew, other, "residual", d as f64, 0, io(2 * d, d));
    b.nodes
}

/// Nodes outside the layer stack: embedding, final norm and LM head.
///
/// During prefill only the last position's logits are produced, so the head
/// is amortized over `L`.
pub(crate) fn model_nodes(
    cfg: &ModelConfig,
    wl: &WorkloadSpec,
    conv: &Convention,
) -> Vec<OperatorNode> {
    let mut b = Builder {
        conv,
        nodes: Vec::new(),
    };
    let d = cfg.d_model;
    let v = cfg.vocab_size;
    if v > 0 {
        b.push("embedding", OpKind::Elementwise, Role::Other, "embedding", d as f64, v * d, io(0, d));
    }
    b.push("final_norm", OpKind::Elementwise, Role::Other, "final_norm", d as f64, d, io(d, d));
    if v > 0 {
        let frac = match wl.phase {
            Phase::Prefill => 1.0 / wl.seq_len as f64,
            Phase::Decode => 1.0,
        };
        b.push(
            "lm_head",
            OpKind::MatMul,
            Role::Projection,
            "lm_head",
            (2 * v * d) as f64 * frac,
            v * d,
            Io {
                act_in: d as f64 * frac,
                act_out: v as f64 * frac,
                ..Io::default()
            },
        );
    }
    b.nodes
}
