//! `mamba-edge`: reports, sweeps and oracle checks from the command line.
//!
//! Exit codes: 0 success, 1 check failure, 2 usage or config error.

pub mod report;
pub mod svg;
pub mod table;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use archspec::{Formulation, ModelConfig, VariantKind};
use clap::{Args, Parser, Subcommand, ValueEnum};
use opgraph::{default_chunk_size, Phase, WorkloadSpec, DEFAULT_SEQ_LEN};
use oracle::check::{run_equivalence, run_fidelity, EquivalenceOptions, Fault};
use perf::calibration::{reference_options, reference_workload};
use perf::{
    regime_series, sweep_batch, sweep_model_size, Composition, ComputeMapping, HardwareConfig,
    Normalization, RooflineOptions, Scenario, SweepOptions,
};

pub use report::{Format, InputRef, Report, Row};
use table::{Cell, Table};

pub const DEFAULT_HW: &str = "edge-asic-default";
pub const DEFAULT_MODELS: [&str; 3] = ["mamba1-880m", "mamba2-880m", "mamba3-880m"];

#[derive(Debug, Parser)]
#[command(name = "mamba-edge", version, about = "Edge-accelerator cost model for Mamba-1/2/3")]
pub struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Md)]
    pub format: Format,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for every random corpus.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// One config under one workload.
    Analyze(AnalyzeArgs),
    /// The six variant/formulation rows, deltas and state-update regimes.
    Compare(CompareArgs),
    /// Size or batch sweep with optional SVG plot.
    Sweep {
        #[command(subcommand)]
        kind: SweepKind,
    },
    /// Oracle equivalence and op-count fidelity checks.
    OracleCheck(OracleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mapping {
    Unified,
    PerArray,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Compose {
    Whole,
    Serial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Baseline {
    Mamba1,
    Mamba2,
}

#[derive(Debug, Args)]
pub struct ModelOpts {
    #[arg(long, value_enum, default_value_t = Mapping::Unified)]
    pub mapping: Mapping,
    #[arg(long, value_enum, default_value_t = Compose::Whole)]
    pub composition: Compose,
    /// Fraction of SRAM unavailable for activations.
    #[arg(long, default_value_t = 0.0)]
    pub sram_reserve: f64,
}

impl ModelOpts {
    fn roofline(&self) -> Result<RooflineOptions, CliError> {
        if !(0.0..=1.0).contains(&self.sram_reserve) {
            return Err(CliError::Usage("--sram-reserve must lie in [0, 1]".into()));
        }
        Ok(RooflineOptions {
            mapping: match self.mapping {
                Mapping::Unified => ComputeMapping::Unified,
                Mapping::PerArray => ComputeMapping::PerArray,
            },
            composition: match self.composition {
                Compose::Whole => Composition::WholeModel,
                Compose::Serial => Composition::Serial,
            },
            sram_reserve: self.sram_reserve,
        })
    }
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Model config path or name under configs/.
    pub model: String,
    /// Hardware config path or name under hw/.
    pub hw: Option<String>,
    #[arg(long, default_value_t = Phase::Prefill)]
    pub phase: Phase,
    #[arg(long, default_value_t = 1)]
    pub batch: u64,
    /// sequential, pscan or ssd.
    #[arg(long, default_value_t = Formulation::Sequential)]
    pub formulation: Formulation,
    /// Override the layer count.
    #[arg(long)]
    pub layers: Option<u64>,
    /// Prefill length, or decode context.
    #[arg(long, default_value_t = DEFAULT_SEQ_LEN)]
    pub seq_len: u64,
    /// SSD chunk size (default 64/R).
    #[arg(long)]
    pub chunk: Option<u64>,
    #[command(flatten)]
    pub model_opts: ModelOpts,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Mamba-1, Mamba-2 and Mamba-3 configs, in that order.
    #[arg(long, num_args = 3, value_names = ["M1", "M2", "M3"])]
    pub models: Option<Vec<String>>,
    #[arg(long)]
    pub hw: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum SweepKind {
    /// Parameter-matched prefill latency over model sizes.
    Size(SizeArgs),
    /// Decode throughput over batch sizes.
    Batch(BatchArgs),
}

#[derive(Debug, Args)]
pub struct SizeArgs {
    #[arg(long, default_value_t = 15e6)]
    pub from: f64,
    #[arg(long, default_value_t = 880e6)]
    pub to: f64,
    #[arg(long, default_value_t = 8)]
    pub points: usize,
    #[arg(long, value_enum, default_value_t = Baseline::Mamba2)]
    pub normalize_to: Baseline,
    /// Plain latency ratio instead of latency per parameter.
    #[arg(long)]
    pub raw: bool,
    #[arg(long)]
    pub hw: Option<String>,
    /// Also write an SVG plot here.
    #[arg(long)]
    pub svg: Option<PathBuf>,
    #[command(flatten)]
    pub model_opts: ModelOpts,
}

#[derive(Debug, Args)]
pub struct BatchArgs {
    #[arg(long, default_value = "mamba3-880m")]
    pub config: String,
    /// Comma-separated batch sizes (default powers of two up to 4096).
    #[arg(long, value_delimiter = ',')]
    pub batches: Option<Vec<u64>>,
    #[arg(long)]
    pub hw: Option<String>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
    #[command(flatten)]
    pub model_opts: ModelOpts,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long, default_value_t = oracle::check::DEFAULT_INSTANCES)]
    pub instances: usize,
    /// Restrict lengths, e.g. `L=1,L=16`.
    #[arg(long, value_delimiter = ',', value_parser = parse_len)]
    pub sizes: Vec<usize>,
    #[arg(long, hide = true)]
    pub inject_fault: Option<FaultArg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FaultArg {
    Pscan,
    Ssd,
    Count,
}

fn parse_len(s: &str) -> Result<usize, String> {
    let v = s.trim().strip_prefix("L=").unwrap_or(s.trim());
    match v.parse::<usize>() {
        Ok(n) if n > 0 => Ok(n),
        _ => Err(format!("expected L=<positive int>, got {s:?}")),
    }
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Config(String),
    Check(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Check(_) => 1,
            CliError::Usage(_) | CliError::Config(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Check(m) => write!(f, "check failed: {m}"),
        }
    }
}

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

/// Resolves `name` as a path, then under `<cwd>/<dir>/`, then under the
/// source tree's `<dir>/`.
pub fn resolve(name: &str, dir: &str) -> Result<PathBuf, CliError> {
    let direct = PathBuf::from(name);
    let candidates = [
        direct.clone(),
        Path::new(dir).join(name),
        Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(dir).join(name),
    ];
    candidates
        .iter()
        .find(|p| p.is_file())
        .cloned()
        .ok_or_else(|| CliError::Config(format!("cannot find {name:?} (as a path or under {dir}/)")))
}

fn display_name(name: &str) -> String {
    Path::new(name)
        .file_name()
        .map_or(name.to_string(), |s| s.to_string_lossy().into_owned())
}

pub fn load_model(name: &str) -> Result<(String, ModelConfig), CliError> {
    let path = resolve(name, "configs")?;
    let cfg = ModelConfig::load(&path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    Ok((display_name(name), cfg))
}

pub fn load_hw(name: Option<&str>) -> Result<(String, HardwareConfig), CliError> {
    let name = name.unwrap_or(DEFAULT_HW);
    let path = resolve(name, "hw")?;
    let hw = HardwareConfig::load(&path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    Ok((display_name(name), hw))
}

/// Output of one command.
pub struct Output {
    pub text: String,
    pub svg: Option<(PathBuf, String)>,
}

pub fn analyze(a: &AnalyzeArgs, format: Format) -> Result<Output, CliError> {
    let (mname, mut cfg) = load_model(&a.model)?;
    let (hname, hw) = load_hw(a.hw.as_deref())?;
    if let Some(l) = a.layers {
        cfg = cfg.with_layers(l);
    }
    let wl = WorkloadSpec {
        phase: a.phase,
        batch: a.batch,
        seq_len: a.seq_len,
        formulation: a.formulation,
        chunk_size: a.chunk.unwrap_or_else(|| default_chunk_size(&cfg)),
    };
    let row = Row::evaluate(&cfg, &wl, &hw, &a.model_opts.roofline()?).map_err(config_err)?;
    let rep = Report::new(
        &format!("{} on {}", mname, hname),
        vec![InputRef::config(&mname, &cfg)],
        InputRef::hardware(&hname, &hw),
        vec![row],
    );
    Ok(Output {
        text: rep.render(format),
        svg: None,
    })
}

/// Builds the six-row comparison report.
pub fn compare_report(models: &[String], hw: Option<&str>) -> Result<Report, CliError> {
    let (hname, hw) = load_hw(hw)?;
    let mut refs = Vec::new();
    let mut cfgs = Vec::new();
    let mut rows = Vec::new();
    for (name, expect) in models.iter().zip(VariantKind::ALL) {
        let (n, cfg) = load_model(name)?;
        if cfg.variant != expect {
            return Err(CliError::Usage(format!("{n} is {}, expected {expect}", cfg.variant)));
        }
        for f in [Formulation::Sequential, Formulation::parallel_for(cfg.variant)] {
            rows.push(Row::evaluate(&cfg, &reference_workload(&cfg, f), &hw, &reference_options()).map_err(config_err)?);
        }
        refs.push(InputRef::config(&n, &cfg));
        cfgs.push(cfg);
    }
    let mut rep = Report::new(
        "Mamba variants on the edge accelerator (B=1 prefill, L=2048)",
        refs,
        InputRef::hardware(&hname, &hw),
        rows,
    );
    rep.notes.push("State-update block only, throughput normalized to Mamba-1:".into());
    for sc in Scenario::ALL {
        let pts = regime_series(&cfgs, sc, &hw).map_err(config_err)?;
        let parts: Vec<String> = pts
            .iter()
            .map(|p| format!("{} {} {:.3}", p.variant.label(), p.formulation, p.normalized))
            .collect();
        rep.notes.push(format!("- {}: {}", sc.as_str(), parts.join(", ")));
        if sc == Scenario::HyperscaleDecode {
            let oi = |v| pts.iter().find(|p| p.variant == v).map(|p| p.oi);
            if let (Some(a), Some(b)) = (oi(VariantKind::Mamba2), oi(VariantKind::Mamba3)) {
                rep.notes.push(format!("- decode OI Mamba-3/Mamba-2: x{:.2}", b / a));
            }
        }
    }
    Ok(rep)
}

pub fn compare(a: &CompareArgs, format: Format) -> Result<Output, CliError> {
    let models: Vec<String> = match &a.models {
        Some(m) => m.clone(),
        None => DEFAULT_MODELS.iter().map(|s| s.to_string()).collect(),
    };
    Ok(Output {
        text: compare_report(&models, a.hw.as_deref())?.render(format),
        svg: None,
    })
}

pub fn sweep_size(a: &SizeArgs, format: Format) -> Result<Output, CliError> {
    let (_, hw) = load_hw(a.hw.as_deref())?;
    let sizes = if a.points == 0 || a.from > a.to {
        eprintln!("warning: empty size range");
        Vec::new()
    } else {
        perf::log_sizes(a.from, a.to, a.points)
    };
    let opts = SweepOptions {
        baseline: match a.normalize_to {
            Baseline::Mamba1 => VariantKind::Mamba1,
            Baseline::Mamba2 => VariantKind::Mamba2,
        },
        normalization: if a.raw {
            Normalization::Raw
        } else {
            Normalization::PerParameter
        },
        roofline: a.model_opts.roofline()?,
    };
    let sweep = sweep_model_size(&sizes, &VariantKind::ALL, &hw, &opts).map_err(config_err)?;
    let mut cols = vec!["target_params".to_string()];
    for v in VariantKind::ALL {
        for c in ["params", "latency_s", "normalized"] {
            cols.push(format!("{}_{c}", v.as_str()));
        }
    }
    let col_refs: Vec<&str> = cols.iter().map(String::as_str).collect();
    let mut t = Table::new("Normalized latency over model size", &col_refs);
    t.notes.push(format!("mode: {}", sweep.mode.as_str()));
    t.notes.push(format!(
        "baseline: {}; normalization: {}",
        sweep.baseline,
        match sweep.normalization {
            Normalization::Raw => "latency ratio",
            Normalization::PerParameter => "latency per parameter",
        }
    ));
    for r in &sweep.rows {
        let mut row = vec![Cell::Num(r.target_params)];
        for p in &r.points {
            row.push(Cell::Num(p.params as f64));
            row.push(Cell::Num(p.estimate.latency_s_per_token));
            row.push(Cell::Num(p.normalized_latency));
        }
        t.rows.push(row);
    }
    if let Some(first) = sweep.rows.first() {
        if let Some(p) = first.point(VariantKind::Mamba3) {
            t.notes.push(format!(
                "Mamba-3 penalty at {:.3e} parameters: {:+.1}%",
                first.target_params,
                100.0 * (p.normalized_latency - 1.0)
            ));
        }
    }
    let svg = a.svg.clone().map(|path| {
        let chart = svg::Chart {
            title: format!("Normalized latency vs size ({})", sweep.mode.as_str()),
            x_label: "parameters".into(),
            y_label: format!("latency relative to {}", sweep.baseline.label()),
            log_x: true,
            series: VariantKind::ALL
                .iter()
                .map(|&v| svg::Series {
                    name: v.label().into(),
                    points: sweep
                        .rows
                        .iter()
                        .filter_map(|r| r.point(v).map(|p| (r.target_params, p.normalized_latency)))
                        .collect(),
                })
                .collect(),
        };
        (path, chart.render())
    });
    Ok(Output {
        text: t.render(format),
        svg,
    })
}

pub fn sweep_batches(a: &BatchArgs, format: Format) -> Result<Output, CliError> {
    let (name, cfg) = load_model(&a.config)?;
    let (_, hw) = load_hw(a.hw.as_deref())?;
    let batches = a
        .batches
        .clone()
        .unwrap_or_else(|| (0..=12).map(|k| 1u64 << k).collect());
    if batches.is_empty() {
        eprintln!("warning: empty batch list");
    }
    if batches.contains(&0) {
        return Err(CliError::Usage("batch sizes must be positive".into()));
    }
    let pts = sweep_batch(&cfg, &batches, &hw, &a.model_opts.roofline()?).map_err(config_err)?;
    let mut t = Table::new(
        &format!("Decode throughput over batch size, {name}"),
        &["batch", "throughput_tok_per_s", "latency_s", "traffic_bytes_per_tok", "oi_ops_per_byte", "energy_mj_per_tok", "bound"],
    );
    t.notes.push(format!("context length {DEFAULT_SEQ_LEN}"));
    for p in &pts {
        let e = &p.estimate;
        t.rows.push(vec![
            Cell::Num(p.batch as f64),
            Cell::Num(e.throughput_tok_per_s),
            Cell::Num(e.latency_s_per_token),
            Cell::Num(e.traffic.total()),
            Cell::Num(e.oi_ops_per_byte),
            Cell::Num(e.energy_mj_per_token),
            Cell::Text(match e.bound {
                perf::Bound::ComputeBound => "compute",
                perf::Bound::MemoryBound => "memory",
            }
            .into()),
        ]);
    }
    let svg = a.svg.clone().map(|path| {
        let chart = svg::Chart {
            title: format!("Decode throughput, {name}"),
            x_label: "batch".into(),
            y_label: "tokens/s".into(),
            log_x: true,
            series: vec![svg::Series {
                name: cfg.variant.label().into(),
                points: pts
                    .iter()
                    .map(|p| (p.batch as f64, p.estimate.throughput_tok_per_s))
                    .collect(),
            }],
        };
        (path, chart.render())
    });
    Ok(Output {
        text: t.render(format),
        svg,
    })
}

pub fn oracle_check(a: &OracleArgs, seed: u64, format: Format) -> Result<Output, CliError> {
    let fault = a.inject_fault.map(|f| match f {
        FaultArg::Pscan => Fault::Pscan,
        FaultArg::Ssd => Fault::Ssd,
        FaultArg::Count => Fault::Count,
    });
    let eq = run_equivalence(&EquivalenceOptions {
        seed,
        instances: a.instances,
        lengths: a.sizes.clone(),
        fault,
    });
    let fid = run_fidelity(seed, &a.sizes, fault).map_err(config_err)?;
    let mut t = Table::new(
        "Oracle checks",
        &["check", "cases", "worst", "tolerance", "worst_case", "status"],
    );
    let mut failures = Vec::new();
    for f in &eq.families {
        t.rows.push(vec![
            Cell::Text(format!("equivalence {}", f.name)),
            Cell::Num(f.cases as f64),
            Cell::Num(f.worst),
            Cell::Num(f.tolerance),
            Cell::Text(f.worst_shape.clone()),
            Cell::Text(if f.passed() { "PASS" } else { "FAIL" }.into()),
        ]);
        for x in &f.failures {
            failures.push(format!("({}, {}, deviation {:e})", f.name, x.shape, x.deviation));
        }
    }
    for form in [Formulation::Sequential, Formulation::PScan, Formulation::Ssd] {
        let cases: Vec<_> = fid.iter().filter(|c| c.formulation == form).collect();
        let worst = cases.iter().map(|c| c.rel_err()).fold(0.0, f64::max);
        let worst_case = cases
            .iter()
            .max_by(|x, y| x.rel_err().total_cmp(&y.rel_err()))
            .map_or(String::new(), |c| c.to_string());
        let ok = cases.iter().all(|c| c.passed());
        t.rows.push(vec![
            Cell::Text(format!("op count {form}")),
            Cell::Num(cases.len() as f64),
            Cell::Num(worst),
            Cell::Num(cases.first().map_or(0.0, |c| c.tolerance)),
            Cell::Text(worst_case),
            Cell::Text(if ok { "PASS" } else { "FAIL" }.into()),
        ]);
        for c in cases.iter().filter(|c| !c.passed()) {
            failures.push(format!("(op count {form}, {c}, relative error {:e})", c.rel_err()));
        }
    }
    t.notes.push(format!("seed {seed}, {} instances", eq.instances));
    let text = t.render(format);
    if failures.is_empty() {
        Ok(Output { text, svg: None })
    } else {
        print!("{text}");
        Err(CliError::Check(failures.join("\n")))
    }
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Config(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    let out = match &cli.command {
        Command::Analyze(a) => analyze(a, cli.format)?,
        Command::Compare(a) => compare(a, cli.format)?,
        Command::Sweep { kind: SweepKind::Size(a) } => sweep_size(a, cli.format)?,
        Command::Sweep { kind: SweepKind::Batch(a) } => sweep_batches(a, cli.format)?,
        Command::OracleCheck(a) => oracle_check(a, cli.seed, cli.format)?,
    };
    write_out(cli.out.as_deref(), &out.text)?;
    if let Some((path, svg)) = out.svg {
        write_out(Some(&path), &svg)?;
    }
    Ok(())
}

/// Parses `args` and runs; clap handles `--help` and `--version` itself.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
