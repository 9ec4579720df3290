//! Report rows, metadata and the three output formats.
//!
//! CSV columns, in order:
//!
//! ```text
//! variant,formulation,phase,batch,seq_len,params,total_gops_per_tok,
//! state_update_gops_per_tok,state_update_oi,roofline_tok_per_s,
//! energy_mj_per_tok,bound
//! ```
//!
//! Empty cells mean "not applicable" (an empty workload has no throughput).
//! JSON is one object with `tool`, `version`, `title`, `configs`, `hardware`,
//! `notes`, `rows` (one object per row, keys as the CSV header) and
//! `derived` (deltas recomputed from `rows` at render time).

use std::fmt::Write as _;

use archspec::{Formulation, ModelConfig, VariantKind};
use opgraph::{Phase, WorkloadSpec};
use perf::{Bound, HardwareConfig, PerfError, PerfEstimate, RooflineOptions};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const TOOL: &str = "mamba-edge";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const CSV_HEADER: &str = "variant,formulation,phase,batch,seq_len,params,total_gops_per_tok,\
state_update_gops_per_tok,state_update_oi,roofline_tok_per_s,energy_mj_per_tok,bound";

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Md,
    Csv,
    Json,
}

/// A named input and the SHA-256 of its canonical key/value form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputRef {
    pub name: String,
    pub sha256: String,
}

pub fn sha256_hex(text: &str) -> String {
    Sha256::digest(text.as_bytes())
        .iter()
        .fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

impl InputRef {
    pub fn config(name: &str, cfg: &ModelConfig) -> Self {
        Self {
            name: name.to_string(),
            sha256: sha256_hex(&cfg.to_kv_string()),
        }
    }

    pub fn hardware(name: &str, hw: &HardwareConfig) -> Self {
        Self {
            name: name.to_string(),
            sha256: sha256_hex(&hw.to_kv_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub variant: VariantKind,
    pub formulation: Formulation,
    pub phase: Phase,
    pub batch: u64,
    pub seq_len: u64,
    pub params: u64,
    pub total_gops_per_tok: f64,
    pub state_update_gops_per_tok: f64,
    pub state_update_oi: Option<f64>,
    pub roofline_tok_per_s: Option<f64>,
    pub energy_mj_per_tok: f64,
    /// `compute`, `memory` or `empty`.
    pub bound: String,
}

impl Row {
    pub fn evaluate(
        cfg: &ModelConfig,
        wl: &WorkloadSpec,
        hw: &HardwareConfig,
        opts: &RooflineOptions,
    ) -> Result<Self, PerfError> {
        let params = archspec::param_count(cfg)?;
        let base = Row {
            variant: cfg.variant,
            formulation: wl.formulation,
            phase: wl.phase,
            batch: wl.batch,
            seq_len: wl.seq_len,
            params,
            total_gops_per_tok: 0.0,
            state_update_gops_per_tok: 0.0,
            state_update_oi: None,
            roofline_tok_per_s: None,
            energy_mj_per_tok: 0.0,
            bound: "empty".into(),
        };
        match perf::evaluate(cfg, wl, hw, opts) {
            Ok(e) => Ok(Row::from_estimate(base, &e)),
            Err(PerfError::EmptyWorkload) => Ok(base),
            Err(e) => Err(e),
        }
    }

    fn from_estimate(base: Row, e: &PerfEstimate) -> Row {
        Row {
            total_gops_per_tok: e.ops_per_token,
            state_update_gops_per_tok: e.state_update_ops,
            state_update_oi: e.state_update_oi,
            roofline_tok_per_s: Some(e.throughput_tok_per_s),
            energy_mj_per_tok: e.energy_mj_per_token,
            bound: match e.bound {
                Bound::ComputeBound => "compute",
                Bound::MemoryBound => "memory",
            }
            .into(),
            ..base
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub title: String,
    pub configs: Vec<InputRef>,
    pub hardware: InputRef,
    pub notes: Vec<String>,
    pub rows: Vec<Row>,
}

/// Mamba-3 against Mamba-2, both sequential, from the rows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Derived {
    pub mamba3_vs_mamba2_total_pct: f64,
    pub mamba3_vs_mamba2_state_update_ratio: f64,
    pub mamba3_vs_mamba2_throughput_pct: Option<f64>,
    pub mamba3_vs_mamba2_energy_pct: f64,
}

impl Report {
    pub fn new(title: &str, configs: Vec<InputRef>, hardware: InputRef, rows: Vec<Row>) -> Self {
        Self {
            tool: TOOL.into(),
            version: VERSION.into(),
            title: title.into(),
            configs,
            hardware,
            notes: Vec::new(),
            rows,
        }
    }

    pub fn derived(&self) -> Option<Derived> {
        let seq = |v| {
            self.rows
                .iter()
                .find(|r| r.variant == v && r.formulation == Formulation::Sequential)
        };
        let (a, b) = (seq(VariantKind::Mamba2)?, seq(VariantKind::Mamba3)?);
        if a.total_gops_per_tok == 0.0 || a.state_update_gops_per_tok == 0.0 {
            return None;
        }
        Some(Derived {
            mamba3_vs_mamba2_total_pct: 100.0 * (b.total_gops_per_tok / a.total_gops_per_tok - 1.0),
            mamba3_vs_mamba2_state_update_ratio: b.state_update_gops_per_tok
                / a.state_update_gops_per_tok,
            mamba3_vs_mamba2_throughput_pct: match (a.roofline_tok_per_s, b.roofline_tok_per_s) {
                (Some(x), Some(y)) => Some(100.0 * (y / x - 1.0)),
                _ => None,
            },
            mamba3_vs_mamba2_energy_pct: 100.0 * (b.energy_mj_per_tok / a.energy_mj_per_tok - 1.0),
        })
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Md => self.markdown(),
            Format::Csv => self.csv(),
            Format::Json => self.json(),
        }
    }

    fn markdown(&self) -> String {
        let mut s = format!("# {}\n\n", self.title);
        s += "| Variant | Form | Phase | B | Params (M) | Total GOps/tok | State-update GOps/tok | OI [ops/B] | Roofline tok/s | Energy mJ/tok | Bound |\n";
        s += "|---|---|---|---:|---:|---:|---:|---:|---:|---:|---|\n";
        for r in &self.rows {
            let _ = writeln!(
                s,
                "| {} | {} | {} | {} | {:.1} | {:.3} | {:.4} | {} | {} | {:.3} | {} |",
                r.variant.label(),
                r.formulation,
                r.phase,
                r.batch,
                r.params as f64 / 1e6,
                r.total_gops_per_tok,
                r.state_update_gops_per_tok,
                r.state_update_oi.map_or("n/a".into(), |v| format!("{v:.1}")),
                r.roofline_tok_per_s
                    .map_or("empty workload".into(), |v| format!("{v:.1}")),
                r.energy_mj_per_tok,
                r.bound
            );
        }
        if let Some(d) = self.derived() {
            s += "\nMamba-3 vs Mamba-2 (sequential):\n\n";
            let _ = writeln!(s, "- total ops: {:+.1}%", d.mamba3_vs_mamba2_total_pct);
            let _ = writeln!(
                s,
                "- state-update ops: x{:.2}",
                d.mamba3_vs_mamba2_state_update_ratio
            );
            if let Some(t) = d.mamba3_vs_mamba2_throughput_pct {
                let _ = writeln!(s, "- roofline throughput: {t:+.1}%");
            }
            let _ = writeln!(s, "- energy: {:+.1}%", d.mamba3_vs_mamba2_energy_pct);
        }
        if !self.notes.is_empty() {
            s += "\n";
            for n in &self.notes {
                let _ = writeln!(s, "{n}");
            }
        }
        s += "\n";
        s += &self.provenance();
        s
    }

    fn provenance(&self) -> String {
        let mut s = format!("{} {}; hardware {} sha256 {}", self.tool, self.version, self.hardware.name, self.hardware.sha256);
        for c in &self.configs {
            let _ = write!(s, "; {} sha256 {}", c.name, c.sha256);
        }
        s + "\n"
    }

    fn csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                r.variant.as_str(),
                r.formulation,
                r.phase,
                r.batch,
                r.seq_len,
                r.params,
                r.total_gops_per_tok,
                r.state_update_gops_per_tok,
                opt(r.state_update_oi),
                opt(r.roofline_tok_per_s),
                r.energy_mj_per_tok,
                r.bound
            );
        }
        s
    }

    fn json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        v["derived"] = serde_json::to_value(self.derived()).expect("derived serializes");
        serde_json::to_string_pretty(&v).expect("value serializes") + "\n"
    }
}
