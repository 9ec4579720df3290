//! Equivalence and count-fidelity suites shared by the tests and the CLI.

use std::fmt;
use std::str::FromStr;

use archspec::{Formulation, ModelConfig, VariantKind};
use opgraph::WorkloadSpec;
use rand::Rng;

use crate::corpus;
use crate::scan::{blelloch_pscan, sequential_scan};
use crate::selective::{selective_scan, ScanMethod};
use crate::ssd::{chunked_ssd, mimo_scan, mimo_sequential, HeadShape, MimoMethod};
use crate::{OpCounter, OracleError};

pub const PSCAN_TOL: f64 = 1e-12;
pub const SSD_TOL: f64 = 1e-10;
/// Relative tolerance of parallel-formulation op counts.
pub const PARALLEL_COUNT_TOL: f64 = 0.01;
pub const DEFAULT_INSTANCES: usize = 1000;
pub const DEFAULT_MAX_LEN: usize = 256;
/// Ops per transcendental, matching the analytic convention.
pub const TRANSCENDENTAL_OPS: u64 = 1;

/// Deliberate corruption used to prove the harness can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    Pscan,
    Ssd,
    Count,
}

impl FromStr for Fault {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pscan" => Ok(Fault::Pscan),
            "ssd" => Ok(Fault::Ssd),
            "count" => Ok(Fault::Count),
            _ => Err(format!("unknown fault {s:?} (expected pscan, ssd or count)")),
        }
    }
}

/// Normwise deviation: `max |x − y| / max |reference|`.
pub fn deviation(x: &[f64], reference: &[f64]) -> f64 {
    let diff = x
        .iter()
        .zip(reference)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let scale = reference.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if x.len() != reference.len() {
        f64::INFINITY
    } else if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub shape: String,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Family {
    /// Formulation and chunking, e.g. `ssd q=8`.
    pub name: String,
    pub tolerance: f64,
    pub cases: usize,
    pub worst: f64,
    pub worst_shape: String,
    pub failures: Vec<Failure>,
}

impl Family {
    fn new(name: &str, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            tolerance,
            cases: 0,
            worst: 0.0,
            worst_shape: String::new(),
            failures: Vec::new(),
        }
    }

    fn record(&mut self, shape: String, dev: f64) {
        self.cases += 1;
        if dev > self.worst || self.cases == 1 {
            self.worst = dev;
            self.worst_shape = shape.clone();
        }
        if dev.is_nan() || dev > self.tolerance {
            self.failures.push(Failure {
                shape,
                deviation: dev,
            });
        }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceOptions {
    pub seed: u64,
    pub instances: usize,
    /// Lengths to draw from; empty means uniform over `1..=DEFAULT_MAX_LEN`.
    pub lengths: Vec<usize>,
    pub fault: Option<Fault>,
}

impl Default for EquivalenceOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            instances: DEFAULT_INSTANCES,
            lengths: Vec::new(),
            fault: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceReport {
    pub instances: usize,
    pub families: Vec<Family>,
}

impl EquivalenceReport {
    pub fn passed(&self) -> bool {
        self.families.iter().all(Family::passed)
    }
}

/// Each instance runs the diagonal scan both ways and the scalar-decay
/// recurrence sequentially and chunked at `Q ∈ {1, 8, L}`.
pub fn run_equivalence(opts: &EquivalenceOptions) -> EquivalenceReport {
    let mut rng = corpus::rng(opts.seed);
    let mut fams = vec![
        Family::new("pscan", PSCAN_TOL),
        Family::new("ssd q=1", SSD_TOL),
        Family::new("ssd q=8", SSD_TOL),
        Family::new("ssd q=L", SSD_TOL),
    ];
    for _ in 0..opts.instances {
        let len = if opts.lengths.is_empty() {
            rng.gen_range(1..=DEFAULT_MAX_LEN)
        } else {
            opts.lengths[rng.gen_range(0..opts.lengths.len())]
        };
        let width = rng.gen_range(1..=8);
        let scan = corpus::scan_input(&mut rng, len, width);
        let mut c = OpCounter::new();
        let seq = sequential_scan(&scan, &mut c);
        let mut par = blelloch_pscan(&scan, &mut c);
        if opts.fault == Some(Fault::Pscan) {
            par[0] += 1e-6 * (1.0 + par[0].abs());
        }
        fams[0].record(format!("L={len} width={width}"), deviation(&par, &seq));

        let shape = corpus::head_shape(&mut rng);
        let inp = corpus::ssd_input(&mut rng, len, shape);
        let reference = mimo_sequential(&inp, &mut c).expect("generated input is valid");
        for (k, q) in [1, 8, len].into_iter().enumerate() {
            let mut out = chunked_ssd(&inp, q, &mut c).expect("generated input is valid");
            if opts.fault == Some(Fault::Ssd) {
                out[0] += 1e-6 * (1.0 + out[0].abs());
            }
            let label = format!(
                "L={len} Q={q} H={} P={} N={} R={}",
                shape.heads, shape.head_dim, shape.d_state, shape.rank
            );
            fams[1 + k].record(label, deviation(&out, &reference));
        }
    }
    EquivalenceReport {
        instances: opts.instances,
        families: fams,
    }
}

/// Toy configs spanning the three variants (single layer, no vocabulary).
pub fn toy_configs() -> Vec<ModelConfig> {
    let mut out = Vec::new();
    for (d, n) in [(1, 1), (2, 3), (3, 4), (4, 2), (5, 8), (8, 5), (6, 16), (16, 4)] {
        out.push(ModelConfig::mamba1(d, 1, n));
    }
    for (d, n, p) in [(1, 1, 1), (2, 3, 2), (4, 4, 4), (3, 2, 3), (6, 5, 4), (8, 8, 8), (4, 16, 2), (2, 2, 4)] {
        out.push(ModelConfig::mamba2(d, 1, n, p));
    }
    for (d, n, p, r) in [(4, 8, 4, 4), (1, 1, 1, 2), (2, 3, 2, 4), (3, 4, 3, 2), (4, 2, 8, 3), (6, 5, 4, 2), (8, 4, 4, 4), (2, 8, 2, 1)] {
        out.push(ModelConfig::mamba3(d, 1, n, p, r));
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct FidelityCase {
    pub label: String,
    pub variant: VariantKind,
    pub formulation: Formulation,
    pub len: usize,
    pub chunk: usize,
    /// State-update ops over the whole sequence.
    pub analytic: f64,
    pub instrumented: u64,
    pub tolerance: f64,
}

impl FidelityCase {
    pub fn rel_err(&self) -> f64 {
        if self.analytic == 0.0 {
            self.instrumented as f64
        } else {
            (self.instrumented as f64 - self.analytic).abs() / self.analytic
        }
    }

    /// Sequential counts must match exactly (up to the float accumulation
    /// of the analytic total).
    pub fn passed(&self) -> bool {
        self.rel_err() <= self.tolerance
    }
}

fn shape_of(cfg: &ModelConfig) -> HeadShape {
    HeadShape {
        heads: cfg.n_heads as usize,
        head_dim: cfg.head_dim as usize,
        d_state: cfg.d_state as usize,
        rank: cfg.mimo_rank as usize,
    }
}

/// Instrumented state-update ops of one layer over `len` tokens.
pub fn instrumented_ops(
    cfg: &ModelConfig,
    formulation: Formulation,
    len: usize,
    chunk: usize,
    seed: u64,
) -> Result<u64, OracleError> {
    let mut rng = corpus::rng(seed);
    let mut c = OpCounter::new();
    match cfg.variant {
        VariantKind::Mamba1 => {
            let inp = corpus::selective_input(&mut rng, len, cfg.d_inner() as usize, cfg.d_state as usize);
            let method = match formulation {
                Formulation::PScan => ScanMethod::Blelloch,
                _ => ScanMethod::Sequential,
            };
            selective_scan(&inp, method, &mut c)?;
        }
        VariantKind::Mamba2 | VariantKind::Mamba3 => {
            let inp = corpus::mimo_input(&mut rng, len, shape_of(cfg));
            let method = match formulation {
                Formulation::Ssd => MimoMethod::Chunked(chunk),
                _ => MimoMethod::Sequential,
            };
            mimo_scan(&inp, method, &mut c)?;
        }
    }
    Ok(c.weighted(TRANSCENDENTAL_OPS))
}

/// Analytic state-update ops of one layer over `len` tokens.
pub fn analytic_ops(
    cfg: &ModelConfig,
    formulation: Formulation,
    len: usize,
    chunk: usize,
) -> Result<f64, OracleError> {
    let wl = WorkloadSpec::prefill(formulation, len as u64).with_chunk(chunk.max(1) as u64);
    let t = opgraph::totals(&cfg.clone().with_layers(1), &wl)
        .map_err(|e| OracleError::Shape(e.to_string()))?;
    Ok(t.state_update_ops_per_token * len as f64)
}

/// Every toy config in its sequential form and its parallel form.
pub fn run_fidelity(seed: u64, lengths: &[usize], fault: Option<Fault>) -> Result<Vec<FidelityCase>, OracleError> {
    let mut rng = corpus::rng(seed ^ 0x5eed);
    let mut out = Vec::new();
    for cfg in toy_configs() {
        for f in [Formulation::Sequential, Formulation::parallel_for(cfg.variant)] {
            let len = if lengths.is_empty() {
                rng.gen_range(1..=24)
            } else {
                lengths[rng.gen_range(0..lengths.len())]
            };
            let chunk = [1, 4, len][rng.gen_range(0..3)];
            let mut instrumented = instrumented_ops(&cfg, f, len, chunk, rng.gen())?;
            if fault == Some(Fault::Count) && f == Formulation::Sequential {
                instrumented += 1;
            }
            let tolerance = if f == Formulation::Sequential { 1e-12 } else { PARALLEL_COUNT_TOL };
            out.push(FidelityCase {
                label: format!(
                    "{} d={} N={} P={} R={}",
                    cfg.variant, cfg.d_model, cfg.d_state, cfg.head_dim, cfg.mimo_rank
                ),
                variant: cfg.variant,
                formulation: f,
                len,
                chunk,
                analytic: analytic_ops(&cfg, f, len, chunk)?,
                instrumented,
                tolerance,
            });
        }
    }
    Ok(out)
}

impl fmt::Display for FidelityCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} L={} Q={}: analytic {} instrumented {}",
            self.label, self.formulation, self.len, self.chunk, self.analytic, self.instrumented
        )
    }
}
