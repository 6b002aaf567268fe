//! Command-line interface. Exit codes: 0 success, 1 semantic problem in the
//! input, 2 parse or usage error, 3 computation failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use covert_core::awgn::{dpc_auxiliary, evaluate, AwgnSpec};
use covert_core::capacity::{brute_force_oracle, capacity, capacity_surface, AuxBound, AuxDistribution};
use covert_core::channel::q0;
use covert_core::sim::{run_experiment, ExactCaps, SimConfig};
use covert_core::{CapacitySolution, Mode, SolverOptions, StateDmc};
use serde::Serialize;

use crate::channel_file::{check_raw, load_channel, parse_raw, LoadedChannel};
use crate::error::{CliError, CliResult};
use crate::manifest::{sidecar, RunManifest};
use crate::report::{sim_csv_string, write_surface_csv, SimReportDoc, SweepDoc, DECODER_NOTE};
use crate::solution::{load_solution, mode_name, save_solution, SolutionDoc};

/// Environment variable holding the worker-thread count.
pub const WORKERS_ENV: &str = "COVERT_WORKERS";

#[derive(Debug, Parser)]
#[command(
    name = "covert",
    version,
    about = "Covert communication over state-dependent channels with state known at the transmitter",
    after_help = "Rates are in bits per channel use. Divergence budgets (--A-grid) are in nats.\n\
                  Set COVERT_WORKERS to bound the number of solver threads."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a channel file: row sums, support of Q0, forbidden inputs.
    Validate { channel: PathBuf },
    /// Maximum covert rate for a channel file.
    Capacity(CapacityArgs),
    /// Closed forms for the Gaussian channel with interference known at the
    /// transmitter (receiver noise variance 1; rescale P, T, sigma2 by the
    /// receiver noise variance otherwise).
    Awgn(AwgnArgs),
    /// Random-coding experiment over a list of blocklengths.
    Simulate(SimulateArgs),
    /// Rate over a grid of divergence budgets A (nats) and cost budgets B.
    Surface(SurfaceArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Causal,
    Noncausal,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Causal => Mode::Causal,
            ModeArg::Noncausal => Mode::Noncausal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundArg {
    /// Cardinality bound of the achievability proofs.
    #[value(name = "achiev")]
    Achiev,
    /// Larger cardinality bound of the converse proofs.
    Converse,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SolverArgs {
    #[arg(long, value_enum, default_value = "causal")]
    pub mode: ModeArg,
    #[arg(long = "aux-bound", value_enum, default_value = "achiev")]
    pub aux_bound: BoundArg,
    /// Fixed auxiliary alphabet size; overrides --aux-bound.
    #[arg(long = "aux-size")]
    pub aux_size: Option<usize>,
    /// Random starts per strategy map (noncausal solver).
    #[arg(long, default_value_t = 32)]
    pub restarts: usize,
    /// Master seed for solver restarts and simulation.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl SolverArgs {
    pub fn options(&self) -> SolverOptions {
        let aux_bound = match (self.aux_size, self.aux_bound) {
            (Some(n), _) => AuxBound::Fixed(n),
            (None, BoundArg::Achiev) => AuxBound::Achievability,
            (None, BoundArg::Converse) => AuxBound::Converse,
        };
        SolverOptions { aux_bound, restarts: self.restarts, seed: self.seed, ..SolverOptions::default() }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CapacityArgs {
    pub channel: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Also run the brute-force grid oracle and report the gap.
    #[arg(long)]
    pub oracle: bool,
    #[arg(long = "oracle-resolution", default_value_t = 200)]
    pub oracle_resolution: usize,
    /// Maximum number of oracle candidates.
    #[arg(long = "oracle-budget", default_value_t = 1_000_000_000)]
    pub oracle_budget: u64,
    /// Write the solution as JSON (usable by `simulate --solution`).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AwgnArgs {
    /// Transmit power budget.
    #[arg(long = "P", allow_negative_numbers = true)]
    pub p: f64,
    /// Interference variance.
    #[arg(long = "T", allow_negative_numbers = true)]
    pub t: f64,
    /// Warden noise variance.
    #[arg(long = "sigma2", allow_negative_numbers = true)]
    pub sigma2: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    pub channel: PathBuf,
    /// Comma-separated blocklengths.
    #[arg(long = "n-list", value_delimiter = ',', required = true)]
    pub n_list: Vec<usize>,
    /// Message rate.
    #[arg(long = "R")]
    pub rate: f64,
    /// Key rate; defaults to the channel file's key_rate_bits.
    #[arg(long = "RK")]
    pub key_rate: Option<f64>,
    /// Multicoding rate (noncausal schemes).
    #[arg(long = "Rprime", default_value_t = 0.0)]
    pub rate_prime: f64,
    /// Decoding trials per codebook.
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    /// Independent codebook draws per blocklength.
    #[arg(long, default_value_t = 5)]
    pub codebooks: usize,
    /// Solution file from `capacity --out`; solved on the fly when absent.
    #[arg(long)]
    pub solution: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Warden samples when exact enumeration is over the caps.
    #[arg(long = "mc-samples", default_value_t = 1_000_000)]
    pub mc_samples: usize,
    /// CSV output; a JSON report and a manifest are written beside it. CSV
    /// goes to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SurfaceArgs {
    pub channel: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Comma-separated divergence budgets, nats.
    #[arg(long = "A-grid", value_delimiter = ',', required = true, allow_negative_numbers = true)]
    pub a_grid: Vec<f64>,
    /// Comma-separated cost budgets.
    #[arg(long = "B-grid", value_delimiter = ',', required = true, allow_negative_numbers = true)]
    pub b_grid: Vec<f64>,
    /// CSV output (stdout when absent); a manifest is written beside it.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` (program name first), runs the command and returns the
/// exit code. Human-readable output goes to `out`, diagnostics to stderr.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let argv: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let command: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let result = configure_workers().and_then(|_| dispatch(cli.command, command, out));
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Applies `COVERT_WORKERS` to the global thread pool. A pool that already
/// exists is left alone.
pub fn configure_workers() -> CliResult<Option<usize>> {
    let Ok(value) = std::env::var(WORKERS_ENV) else { return Ok(None) };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Parse(format!("{WORKERS_ENV} must be a positive integer, got `{value}`")))?;
    #[cfg(feature = "parallel")]
    {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(Some(n))
}

fn dispatch(command: Command, argv: Vec<String>, out: &mut dyn Write) -> CliResult<i32> {
    let started = Instant::now();
    let mut manifest = RunManifest {
        command: argv,
        channel_sha256: None,
        config: serde_json::Value::Null,
        version: env!("CARGO_PKG_VERSION"),
        seed: None,
        duration_secs: 0.0,
        outputs: Vec::new(),
    };
    match command {
        Command::Validate { channel } => cmd_validate(&channel, out),
        Command::Capacity(args) => cmd_capacity(&args, &mut manifest, started, out),
        Command::Awgn(args) => cmd_awgn(&args, out),
        Command::Simulate(args) => cmd_simulate(&args, &mut manifest, started, out),
        Command::Surface(args) => cmd_surface(&args, &mut manifest, started, out),
    }
}

fn io_err(e: std::io::Error) -> CliError {
    CliError::Compute(format!("cannot write output: {e}"))
}

macro_rules! line {
    ($out:expr, $key:expr, $($arg:tt)*) => {
        writeln!($out, "{:<26}{}", $key, format!($($arg)*)).map_err(io_err)?
    };
}

fn finish_manifest(
    manifest: &mut RunManifest,
    started: Instant,
    config: &impl Serialize,
    seed: Option<u64>,
    outputs: &[&Path],
) -> CliResult<()> {
    let Some(primary) = outputs.first() else { return Ok(()) };
    manifest.config = serde_json::to_value(config).map_err(|e| CliError::Compute(e.to_string()))?;
    manifest.seed = seed;
    manifest.outputs = outputs.iter().map(|p| p.display().to_string()).collect();
    manifest.duration_secs = started.elapsed().as_secs_f64();
    manifest.write_beside(primary)?;
    Ok(())
}

fn cmd_validate(path: &Path, out: &mut dyn Write) -> CliResult<i32> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::read(path, e))?;
    let raw = parse_raw(&text)?;
    let report = check_raw(&raw)?;
    line!(out, "channel", "{}", path.display());
    line!(out, "alphabets", "|X|={} |S|={} |Y|={} |Z|={}, x0={}", raw.nx, raw.ns, raw.ny, raw.nz, raw.x0);
    for l in report.lines() {
        writeln!(out, "{l}").map_err(io_err)?;
    }
    if report.has_semantic_errors() {
        writeln!(out, "INVALID").map_err(io_err)?;
        return Ok(1);
    }
    let (ch, _) = StateDmc::from_raw(&raw).map_err(|e| CliError::Semantic(e.to_string()))?;
    line!(out, "Q0", "{:?}", q0(&ch).probs());
    line!(out, "forbidden inputs", "{:?}", report.forbidden_inputs);
    let idle_cost = ch.cost()[ch.x0()];
    if idle_cost > 0.0 {
        line!(out, "note", "idle input has cost {idle_cost} (budget {})", ch.budget());
    }
    if report.is_valid() {
        writeln!(out, "VALID").map_err(io_err)?;
        Ok(0)
    } else {
        writeln!(out, "INVALID").map_err(io_err)?;
        Ok(1)
    }
}

fn print_solution(out: &mut dyn Write, sol: &CapacitySolution, ch: &StateDmc) -> CliResult<()> {
    line!(out, "mode", "{}", mode_name(sol.mode));
    line!(out, "aux alphabet", "|{}| = {}", sol.aux_label(), sol.map.aux_size());
    line!(out, "rate_bits", "{:.6}", sol.rate_bits);
    line!(out, "key_deficit_bits", "{:.6}", sol.key_deficit_bits);
    line!(out, "key_rate_bits", "{}", ch.key_rate_bits());
    line!(out, "key_feasible", "{}", if sol.key_feasible { "yes" } else { "no" });
    line!(out, "cost_used", "{:.6} (budget {})", sol.cost_used, ch.budget());
    line!(out, "covert_residual_nats", "{:.3e}", sol.covert_residual_nats);
    match &sol.aux {
        AuxDistribution::Causal(p) => line!(out, "P_V", "{:?}", p.probs()),
        AuxDistribution::Noncausal(q) => {
            for s in 0..q.rows() {
                line!(out, format!("P_U|S=s{s}"), "{:?}", q.row(s));
            }
        }
    }
    for a in 0..sol.map.aux_size() {
        line!(out, format!("x({a}, s)"), "{:?}", sol.map.row(a));
    }
    let d = &sol.diagnostics;
    line!(out, "maps enumerated/feasible", "{}/{}", d.maps_enumerated, d.maps_feasible);
    line!(out, "fw_gap_nats", "{:.3e}", d.fw_gap_nats);
    if sol.mode == Mode::Noncausal {
        line!(
            out,
            "restarts",
            "{} (best from start {:?}, {} not converged)",
            d.restarts,
            d.restarts_to_best,
            d.nonconverged_runs
        );
    }
    Ok(())
}

fn cmd_capacity(
    args: &CapacityArgs,
    manifest: &mut RunManifest,
    started: Instant,
    out: &mut dyn Write,
) -> CliResult<i32> {
    let LoadedChannel { channel: ch, sha256, .. } = load_channel(&args.channel)?;
    manifest.channel_sha256 = Some(sha256.clone());
    let mode: Mode = args.solver.mode.into();
    let mut sol = capacity(&ch, mode, &args.solver.options())?;
    print_solution(out, &sol, &ch)?;
    if args.oracle {
        let oracle =
            brute_force_oracle(&ch, mode, sol.map.aux_size(), args.oracle_resolution, u128::from(args.oracle_budget))?;
        let gap = sol.rate_bits - oracle;
        sol.diagnostics.oracle_gap_bits = Some(gap);
        line!(out, "oracle_bits", "{oracle:.6} (resolution {})", args.oracle_resolution);
        line!(out, "oracle_gap_bits", "{gap:.3e}");
    }
    if let Some(path) = &args.out {
        save_solution(&SolutionDoc::new(&sol, &ch, &sha256), path)?;
        finish_manifest(manifest, started, args, Some(args.solver.seed), &[path.as_path()])?;
    }
    Ok(0)
}

fn cmd_awgn(args: &AwgnArgs, out: &mut dyn Write) -> CliResult<i32> {
    let spec = AwgnSpec::new(args.p, args.t, args.sigma2)?;
    let r = evaluate(&spec);
    let dpc = dpc_auxiliary(&spec);
    line!(out, "gamma_star", "{}", r.gamma_star);
    line!(out, "T_star", "{}", r.t_star);
    line!(out, "P_star", "{}", r.p_star);
    line!(out, "rate_noncausal_bits", "{:.6}", r.rate_noncausal_bits);
    line!(out, "rate_causal_lb_bits", "{:.6}", r.rate_causal_lb_bits);
    line!(out, "key_threshold_causal", "{:.6}", r.key_threshold_causal_bits);
    line!(out, "key_threshold_noncausal", "{:.6}", r.key_threshold_noncausal_bits);
    line!(out, "dpc_alpha", "{}", r.dpc_alpha);
    line!(out, "U", "{} X* {:+} S", dpc.u_xstar, dpc.u_s);
    line!(out, "X", "{} X* {:+} S  (E[X^2] = {})", dpc.x_xstar, dpc.x_s, dpc.power);
    let (kc, kn) = (r.key_threshold_causal_bits, r.key_threshold_noncausal_bits);
    if kc < 0.0 && kn < 0.0 {
        writeln!(out, "no key needed").map_err(io_err)?;
    } else if kc <= 0.0 && kn <= 0.0 {
        writeln!(out, "any positive key rate suffices").map_err(io_err)?;
    } else {
        writeln!(out, "key needed: rate above {:.6} (causal), {:.6} (noncausal)", kc.max(0.0), kn.max(0.0))
            .map_err(io_err)?;
    }
    Ok(0)
}

fn cmd_simulate(
    args: &SimulateArgs,
    manifest: &mut RunManifest,
    started: Instant,
    out: &mut dyn Write,
) -> CliResult<i32> {
    let LoadedChannel { channel: ch, sha256, .. } = load_channel(&args.channel)?;
    manifest.channel_sha256 = Some(sha256.clone());
    if args.n_list.is_empty() || args.n_list.contains(&0) {
        return Err(CliError::Parse("--n-list needs positive blocklengths".into()));
    }
    let sol = match &args.solution {
        Some(path) => {
            let doc = load_solution(path)?;
            if doc.channel_sha256 != sha256 {
                eprintln!("warning: {} was computed for a different channel file", path.display());
            }
            doc.to_solution(&ch)?
        }
        None => capacity(&ch, args.solver.mode.into(), &args.solver.options())?,
    };
    let cfg = SimConfig {
        rate: args.rate,
        key_rate: args.key_rate.unwrap_or(ch.key_rate_bits()),
        rate_prime: args.rate_prime,
        seed: args.solver.seed,
        trials: args.trials,
        codebooks: args.codebooks,
        exact_caps: ExactCaps::default(),
        mc_samples: args.mc_samples,
        ..SimConfig::default()
    };
    let reports = run_experiment(&ch, &sol, &cfg, &args.n_list)?;
    let csv = sim_csv_string(&reports)?;
    let Some(path) = &args.out else {
        out.write_all(csv.as_bytes()).map_err(io_err)?;
        return Ok(0);
    };
    std::fs::write(path, &csv).map_err(|e| CliError::write(path, e))?;
    let sweep = SweepDoc {
        mode: mode_name(sol.mode),
        decoder: DECODER_NOTE,
        reports: reports.iter().map(SimReportDoc::from).collect(),
    };
    let report_path = sidecar(path, "report.json");
    let text = serde_json::to_string_pretty(&sweep).map_err(|e| CliError::write(&report_path, e))? + "\n";
    std::fs::write(&report_path, text).map_err(|e| CliError::write(&report_path, e))?;
    finish_manifest(manifest, started, args, Some(cfg.seed), &[path.as_path(), report_path.as_path()])?;

    writeln!(out, "{:>3} {:>8} {:>8} {:>8} {:>9} {:>12} {:>8}  flag", "n", "R", "R_K", "R'", "p_err", "kl_nats", "tv")
        .map_err(io_err)?;
    for r in &reports {
        let p = r.p_err.map_or_else(|| "NA".to_string(), |p| format!("{p:.4}"));
        writeln!(
            out,
            "{:>3} {:>8.4} {:>8.4} {:>8.4} {:>9} {:>12.6} {:>8.4}  {}",
            r.n,
            r.realized.rate,
            r.realized.key_rate,
            r.realized.rate_prime,
            p,
            r.kl_nats,
            r.tv,
            crate::report::exactness_flag(r)
        )
        .map_err(io_err)?;
    }
    line!(out, "csv", "{}", path.display());
    line!(out, "report", "{}", report_path.display());
    Ok(0)
}

fn cmd_surface(
    args: &SurfaceArgs,
    manifest: &mut RunManifest,
    started: Instant,
    out: &mut dyn Write,
) -> CliResult<i32> {
    let LoadedChannel { channel: ch, sha256, .. } = load_channel(&args.channel)?;
    manifest.channel_sha256 = Some(sha256);
    let points = capacity_surface(&ch, args.solver.mode.into(), &args.a_grid, &args.b_grid, &args.solver.options())?;
    match &args.out {
        Some(path) => {
            let file = std::fs::File::create(path).map_err(|e| CliError::write(path, e))?;
            write_surface_csv(&points, file)?;
            finish_manifest(manifest, started, args, Some(args.solver.seed), &[path.as_path()])?;
            line!(out, "csv", "{}", path.display());
        }
        None => write_surface_csv(&points, &mut *out)?,
    }
    Ok(0)
}
