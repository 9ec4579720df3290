//! Roofline performance and energy model of an edge accelerator.
//!
//! [`roofline::evaluate`] turns a (config, workload) pair into a
//! [`PerfEstimate`]; [`regime`] isolates the state-update block in the edge
//! and datacenter regimes; [`sweep`] runs parameter-matched size and batch
//! sweeps; [`calibration`] holds the reference table and the config search.

pub mod calibration;
pub mod hardware;
pub mod regime;
pub mod roofline;
pub mod sweep;

use archspec::{ConfigError, MatchError};
use opgraph::GraphError;
use thiserror::Error;

pub use hardware::{peak_compute, HardwareConfig, HW_KEYS};
pub use regime::{
    regime_series, state_update_regime_throughput, RegimePoint, Scenario, HYPERSCALE_BATCH,
};
pub use roofline::{
    compute_time, energy_mj, evaluate, roofline_estimate, state_update_bytes, traffic_per_token,
    Bound, Composition, ComputeMapping, PerfEstimate, RooflineOptions, Traffic,
};
pub use sweep::{
    base_config_for_size, log_sizes, sweep_batch, sweep_model_size, BatchPoint, Normalization,
    SizePoint, SizeRow, SizeSweep, SweepMode, SweepOptions,
};

#[derive(Debug, Error)]
pub enum PerfError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Match(#[from] MatchError),
    #[error("empty workload: the model performs no operations and moves no bytes")]
    EmptyWorkload,
    #[error("calibration grid is empty")]
    EmptyGrid,
    #[error(
        "no sweep config near {params:.3e} parameters (minimum {min_params:.0e}; \
         searched d_model {d_lo}..={d_hi} at n_layers {n_layers})"
    )]
    SizeOutOfRange {
        params: f64,
        min_params: f64,
        d_lo: u64,
        d_hi: u64,
        n_layers: u64,
    },
}
