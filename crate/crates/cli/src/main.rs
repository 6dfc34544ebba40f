//! `capdist` command-line front end.
//!
//! Results go to stdout (one JSON document, or CSV). A run manifest and any
//! diagnostics go to stderr. Exit codes: 0 success, 2 invalid input,
//! 3 infeasible distortion, 4 resource cap.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use capdist::channel::SpecFile;
use capdist::gaussian::{gaussian_breakpoints, gaussian_capdist_in, GaussianParams, Units};
use capdist::oracle::{brute_force_point, OracleOptions};
use capdist::sim::{derive_code_rates, run_block_markov, Engine, SimConfig};
use capdist::solver::{Mode, Solver};
use capdist::{ChannelSpec, Error, Policy, SolveOptions};

/// Grids longer than this are refused as a resource cap.
const GRID_CAP: usize = 1_000_000;

/// Tolerance for including the stop value of a grid.
const GRID_STOP_TOL: f64 = 1e-12;

#[derive(Parser, Debug, Serialize)]
#[command(
    name = "capdist",
    version,
    about = "Capacity-distortion curves for channels with action-dependent states"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
enum Command {
    /// One capacity-distortion point as JSON.
    Compute(ComputeArgs),
    /// A curve over a "start:stop:step" grid as CSV.
    Sweep(SweepArgs),
    /// Closed-form Gaussian values.
    Gaussian(GaussianArgs),
    /// Block-Markov random-coding simulation.
    Simulate(SimulateArgs),
    /// Brute-force lattice reference value.
    Oracle(OracleArgs),
    /// Checks a channel (and optionally a policy) file.
    Validate(ValidateArgs),
}

#[derive(Args, Debug, Serialize)]
struct SolverFlags {
    /// Auxiliary alphabet size (default: the channel's bound).
    #[arg(long)]
    u_card: Option<usize>,
    #[arg(long, default_value_t = 9)]
    grid_resolution: usize,
    #[arg(long, default_value_t = 200)]
    iterations: usize,
    #[arg(long, default_value_t = 4)]
    restarts: usize,
    #[arg(long, default_value_t = 1e-3)]
    tolerance: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl SolverFlags {
    fn options(&self, mode: Mode) -> SolveOptions {
        SolveOptions {
            mode,
            u_cardinality: self.u_card,
            grid_resolution: self.grid_resolution,
            refinement_iterations: self.iterations,
            restarts: self.restarts,
            seed: self.seed,
            tolerance: self.tolerance,
        }
    }
}

#[derive(Args, Debug, Serialize)]
struct ComputeArgs {
    #[arg(long)]
    channel: PathBuf,
    #[arg(long, allow_negative_numbers = true)]
    distortion: f64,
    #[arg(long, default_value = "nonadaptive")]
    mode: String,
    /// Include the optimizing policy in the output.
    #[arg(long)]
    emit_policy: bool,
    #[command(flatten)]
    solver: SolverFlags,
}

#[derive(Args, Debug, Serialize)]
struct SweepArgs {
    #[arg(long)]
    channel: PathBuf,
    /// "start:stop:step", stop included within 1e-12.
    #[arg(long, allow_hyphen_values = true)]
    grid: String,
    /// One mode or a comma-separated list.
    #[arg(long, default_value = "nonadaptive")]
    mode: String,
    /// Write the CSV here (with a manifest next to it) instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverFlags,
}

#[derive(Args, Debug, Serialize)]
struct GaussianArgs {
    #[arg(long)]
    px: f64,
    #[arg(long)]
    pa: f64,
    #[arg(long)]
    q: f64,
    /// Noise variance.
    #[arg(long = "n")]
    n0: f64,
    /// Single budget; JSON output.
    #[arg(
        long,
        allow_negative_numbers = true,
        conflicts_with = "grid",
        required_unless_present = "grid"
    )]
    distortion: Option<f64>,
    /// "start:stop:step"; CSV output.
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,
    #[arg(long, default_value = "nonadaptive")]
    mode: String,
    #[arg(long, default_value = "bits")]
    units: String,
}

#[derive(Args, Debug, Serialize)]
struct SimulateArgs {
    #[arg(long)]
    channel: PathBuf,
    #[arg(long)]
    policy: PathBuf,
    #[arg(long = "n", default_value_t = 512)]
    n: usize,
    #[arg(long = "b", default_value_t = 8)]
    b: usize,
    #[arg(long, default_value_t = 0.0)]
    rate: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.01)]
    delta: f64,
    #[arg(long, default_value_t = 0.1)]
    eps_enc: f64,
    #[arg(long, default_value_t = 0.2)]
    eps_dec: f64,
    /// auto, explicit or implicit.
    #[arg(long, default_value = "auto")]
    engine: String,
    /// Proceed (with a warning) when the rate exceeds R_max.
    #[arg(long)]
    allow_rate_above_max: bool,
    /// Per-block log file (tab-separated, with a manifest next to it).
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct OracleArgs {
    #[arg(long)]
    channel: PathBuf,
    #[arg(long, allow_negative_numbers = true)]
    distortion: f64,
    #[arg(long, default_value = "nonadaptive")]
    mode: String,
    #[arg(long, default_value_t = 9)]
    resolution: usize,
    #[arg(long, default_value_t = 2)]
    u_card: usize,
    /// Search all estimators instead of the Bayes rule.
    #[arg(long)]
    exhaustive_estimators: bool,
}

#[derive(Args, Debug, Serialize)]
struct ValidateArgs {
    #[arg(long)]
    channel: PathBuf,
    #[arg(long)]
    policy: Option<PathBuf>,
}

/// Failure carrying its exit code.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn invalid(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::CapExceeded { .. } => 4,
            _ => 2,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

type Outcome = Result<u8, Failure>;

/// Provenance of one invocation, written as a single JSON line.
#[derive(Debug, Serialize)]
struct RunManifest {
    command: &'static str,
    input_sha256: Vec<(String, String)>,
    options: Value,
    tool_version: &'static str,
    seed: Option<u64>,
    wall_clock_seconds: f64,
}

struct Run {
    command: &'static str,
    inputs: Vec<(String, String)>,
    options: Value,
    seed: Option<u64>,
    started: Instant,
}

impl Run {
    fn read(&mut self, path: &Path) -> Result<String, Failure> {
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::invalid(format!("cannot read {}: {e}", path.display())))?;
        let digest: String = Sha256::digest(text.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect();
        self.inputs.push((path.display().to_string(), digest));
        Ok(text)
    }

    fn manifest(&self) -> RunManifest {
        RunManifest {
            command: self.command,
            input_sha256: self.inputs.clone(),
            options: self.options.clone(),
            tool_version: env!("CARGO_PKG_VERSION"),
            seed: self.seed,
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
        }
    }

    /// Writes an output file and its manifest at `<path>.manifest.json`.
    fn write_with_manifest(&self, path: &Path, contents: &str) -> Result<(), Failure> {
        let io =
            |e: std::io::Error| Failure::invalid(format!("cannot write {}: {e}", path.display()));
        fs::write(path, contents).map_err(io)?;
        let mut side = path.as_os_str().to_owned();
        side.push(".manifest.json");
        let text = serde_json::to_string_pretty(&self.manifest()).expect("manifest serializes");
        fs::write(PathBuf::from(side), text + "\n").map_err(io)
    }
}

fn parse_mode(s: &str) -> Result<Mode, Failure> {
    s.trim().parse::<Mode>().map_err(Failure::from)
}

fn parse_modes(s: &str) -> Result<Vec<Mode>, Failure> {
    let modes: Vec<Mode> = s.split(',').map(parse_mode).collect::<Result<_, _>>()?;
    if modes.is_empty() {
        return Err(Failure::invalid("no mode given"));
    }
    Ok(modes)
}

/// Points of `start:stop:step`, including `stop` when within 1e-12.
fn parse_grid(spec: &str) -> Result<Vec<f64>, Failure> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || Failure::invalid(format!("grid must be \"start:stop:step\", got {spec:?}"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let v: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_, _>>()?;
    let (start, stop, step) = (v[0], v[1], v[2]);
    if !(start.is_finite() && stop.is_finite() && step.is_finite()) {
        return Err(bad());
    }
    if step <= 0.0 {
        return Err(Failure::invalid("grid step must be positive"));
    }
    if start > stop + GRID_STOP_TOL {
        return Err(Failure::invalid(format!(
            "empty grid: start {start} exceeds stop {stop}"
        )));
    }
    let count = ((stop - start + GRID_STOP_TOL) / step).floor() + 1.0;
    if count > GRID_CAP as f64 {
        return Err(Failure {
            code: 4,
            message: format!("grid has {count:.0} points, cap is {GRID_CAP}"),
        });
    }
    Ok((0..count as usize)
        .map(|k| {
            let d = start + k as f64 * step;
            if (d - stop).abs() <= GRID_STOP_TOL {
                stop
            } else {
                d
            }
        })
        .collect())
}

fn load_channel(run: &mut Run, path: &Path) -> Result<ChannelSpec, Failure> {
    let text = run.read(path)?;
    let file = SpecFile::parse(&text)?;
    let violations = file.validate();
    if !violations.is_empty() {
        let msg: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        return Err(Failure::invalid(format!(
            "invalid channel specification: {}",
            msg.join("; ")
        )));
    }
    Ok(file.into_channel())
}

fn check_distortion(d: f64) -> Result<(), Failure> {
    if !d.is_finite() || d < 0.0 {
        return Err(Failure::invalid(format!("distortion must be ≥ 0, got {d}")));
    }
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

fn print_json(v: &Value) {
    println!(
        "{}",
        serde_json::to_string_pretty(v).expect("json serializes")
    );
}

fn compute(run: &mut Run, args: &ComputeArgs) -> Outcome {
    check_distortion(args.distortion)?;
    let mode = parse_mode(&args.mode)?;
    let spec = load_channel(run, &args.channel)?;
    let solver = Solver::new(&spec, &args.solver.options(mode))?;
    let point = solver.solve(args.distortion, mode)?;
    let mut out = json!({
        "D": args.distortion,
        "rate_bits": point.rate,
        "mode": mode.as_str(),
        "feasibility_gap": point.feasibility_gap_at_opt,
        "achieved_distortion": point.achieved_distortion,
    });
    if args.emit_policy {
        out["policy"] = serde_json::to_value(&point.policy).expect("policy serializes");
    }
    print_json(&out);
    if point.rate.is_none() {
        eprintln!(
            "infeasible: no policy meets distortion {} in mode {mode}",
            args.distortion
        );
        return Ok(3);
    }
    Ok(0)
}

fn sweep(run: &mut Run, args: &SweepArgs) -> Outcome {
    let grid = parse_grid(&args.grid)?;
    let modes = parse_modes(&args.mode)?;
    let spec = load_channel(run, &args.channel)?;
    let solver = Solver::new(&spec, &args.solver.options(modes[0]))?;
    let mut csv = String::from("D,rate_bits,mode,feasibility_gap\n");
    let mut feasible = 0;
    for &mode in &modes {
        let curve = solver.sweep(&grid, mode)?;
        for p in &curve.points {
            feasible += usize::from(p.rate.is_some());
            csv.push_str(&format!(
                "{},{},{},{}\n",
                p.distortion_budget,
                fmt_opt(p.rate),
                mode.as_str(),
                fmt_opt(p.feasibility_gap_at_opt)
            ));
        }
    }
    match &args.out {
        Some(path) => run.write_with_manifest(path, &csv)?,
        None => print!("{csv}"),
    }
    if feasible == 0 {
        eprintln!("infeasible: every grid point lies below the minimum distortion");
        return Ok(3);
    }
    Ok(0)
}

fn gaussian(_run: &mut Run, args: &GaussianArgs) -> Outcome {
    let params = GaussianParams::new(args.px, args.pa, args.q, args.n0)?;
    let modes = parse_modes(&args.mode)?;
    let units = match args.units.as_str() {
        "bits" => Units::Bits,
        "nats" => Units::Nats,
        other => {
            return Err(Failure::invalid(format!(
                "unknown units {other:?} (bits or nats)"
            )))
        }
    };
    let bp = gaussian_breakpoints(&params);
    let d_min = |m: Mode| match m {
        Mode::Adaptive => bp.d_min_adaptive,
        _ => bp.d_min_nonadaptive,
    };
    if let Some(d) = args.distortion {
        if !(d.is_finite() && d > 0.0) {
            return Err(Failure::invalid(format!("distortion must be > 0, got {d}")));
        }
        let mut values = serde_json::Map::new();
        for &m in &modes {
            values.insert(
                m.as_str().into(),
                json!(gaussian_capdist_in(&params, d, m, units)?),
            );
        }
        let mut out = json!({
            "D": d,
            "units": args.units,
            "breakpoints": bp,
        });
        if modes.len() == 1 {
            out["mode"] = json!(modes[0].as_str());
            out["rate"] = values[modes[0].as_str()].clone();
        } else {
            out["rate"] = Value::Object(values);
        }
        print_json(&out);
        return Ok(0);
    }
    let grid = parse_grid(
        args.grid
            .as_deref()
            .expect("clap requires distortion or grid"),
    )?;
    if grid.first().is_some_and(|&d| d <= 0.0) {
        return Err(Failure::invalid(
            "Gaussian distortion grid must be positive",
        ));
    }
    let mut csv = String::from("D,rate,mode,d_min,d_max\n");
    for &m in &modes {
        for &d in &grid {
            let r = gaussian_capdist_in(&params, d, m, units)?;
            csv.push_str(&format!(
                "{d},{r},{},{},{}\n",
                m.as_str(),
                d_min(m),
                bp.d_max
            ));
        }
    }
    print!("{csv}");
    Ok(0)
}

fn simulate(run: &mut Run, args: &SimulateArgs) -> Outcome {
    let spec = load_channel(run, &args.channel)?;
    let policy_text = run.read(&args.policy)?;
    let policy = Policy::from_json_str(&spec, &policy_text)?;
    let engine: Engine = args.engine.parse()?;
    let config = SimConfig {
        n: args.n,
        b: args.b,
        rate_r: args.rate,
        delta: args.delta,
        epsilon_enc: args.eps_enc,
        epsilon_dec: args.eps_dec,
        seed: args.seed,
        engine,
        allow_rate_above_max: args.allow_rate_above_max,
    };
    config.validate()?;
    let rates = derive_code_rates(&spec, &policy, args.delta)?;
    if args.rate > rates.r_max {
        if !args.allow_rate_above_max {
            return Err(Failure::invalid(format!(
                "rate {} exceeds R_max = {:.6} for this policy (pass --allow-rate-above-max to run anyway)",
                args.rate, rates.r_max
            )));
        }
        eprintln!(
            "warning: rate {} exceeds R_max = {:.6}; proceeding",
            args.rate, rates.r_max
        );
    }
    let result = run_block_markov(&spec, &policy, &config)?;
    let out = json!({
        "empirical_message_error": result.empirical_message_error,
        "empirical_distortion": result.empirical_distortion,
        "encoder_covering_failures": result.encoder_covering_failures,
        "description_errors": result.description_errors,
        "engine": result.engine,
        "rates": result.rates,
        "exponents": result.exponents,
        "config": result.config,
    });
    if let Some(path) = &args.log {
        run.write_with_manifest(path, &result.log_lines())?;
    }
    print_json(&out);
    Ok(0)
}

fn oracle(run: &mut Run, args: &OracleArgs) -> Outcome {
    check_distortion(args.distortion)?;
    let mode = parse_mode(&args.mode)?;
    let spec = load_channel(run, &args.channel)?;
    let opts = OracleOptions {
        resolution: args.resolution,
        u_cardinality: args.u_card,
        exhaustive_estimators: args.exhaustive_estimators,
    };
    let r = brute_force_point(&spec, args.distortion, mode, &opts)?;
    print_json(&json!({
        "D": args.distortion,
        "mode": mode.as_str(),
        "rate_bits": r.rate,
        "achieved_distortion": r.distortion,
        "resolution": args.resolution,
        "u_cardinality": args.u_card,
        "lattice_size": r.lattice_size,
        "evaluated": r.evaluated,
    }));
    if r.rate.is_none() {
        eprintln!(
            "infeasible: no lattice policy meets distortion {}",
            args.distortion
        );
        return Ok(3);
    }
    Ok(0)
}

fn validate(run: &mut Run, args: &ValidateArgs) -> Outcome {
    let text = run.read(&args.channel)?;
    let file = match SpecFile::parse(&text) {
        Ok(f) => f,
        Err(e) => {
            print_json(&json!({ "valid": false, "violations": [e.to_string()] }));
            return Ok(2);
        }
    };
    let mut violations: Vec<String> = file.validate().iter().map(|v| v.to_string()).collect();
    let kind = match &file {
        SpecFile::Channel(_) => "channel",
        SpecFile::Mac(_) => "mac",
    };
    if violations.is_empty() {
        if let Some(path) = &args.policy {
            let spec = file.into_channel();
            let text = run.read(path)?;
            if let Err(e) = Policy::from_json_str(&spec, &text) {
                violations.push(e.to_string());
            }
        }
    }
    let valid = violations.is_empty();
    print_json(&json!({ "valid": valid, "kind": kind, "violations": violations }));
    Ok(if valid { 0 } else { 2 })
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("CAPDIST_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().map_err(|_| {
        Failure::invalid(format!(
            "CAPDIST_THREADS must be a nonnegative integer, got {raw:?}"
        ))
    })?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::invalid(format!("cannot size the thread pool: {e}")))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, seed) = match &cli.command {
        Command::Compute(a) => ("compute", Some(a.solver.seed)),
        Command::Sweep(a) => ("sweep", Some(a.solver.seed)),
        Command::Gaussian(_) => ("gaussian", None),
        Command::Simulate(a) => ("simulate", Some(a.seed)),
        Command::Oracle(_) => ("oracle", None),
        Command::Validate(_) => ("validate", None),
    };
    let mut run = Run {
        command,
        inputs: Vec::new(),
        options: serde_json::to_value(&cli.command).expect("options serialize"),
        seed,
        started: Instant::now(),
    };
    let outcome = configure_threads().and_then(|()| match &cli.command {
        Command::Compute(a) => compute(&mut run, a),
        Command::Sweep(a) => sweep(&mut run, a),
        Command::Gaussian(a) => gaussian(&mut run, a),
        Command::Simulate(a) => simulate(&mut run, a),
        Command::Oracle(a) => oracle(&mut run, a),
        Command::Validate(a) => validate(&mut run, a),
    });
    let code = match outcome {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    };
    eprintln!(
        "{}",
        serde_json::to_string(&run.manifest()).expect("manifest serializes")
    );
    ExitCode::from(code)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_includes_stop_within_tolerance() {
        assert_eq!(
            parse_grid("0:1:0.25").unwrap(),
            vec![0.0, 0.25, 0.5, 0.75, 1.0]
        );
        let g = parse_grid("0:0.3:0.1").unwrap();
        assert_eq!(g.len(), 4);
        assert_eq!(*g.last().unwrap(), 0.3);
        assert_eq!(parse_grid("0.5:0.5:0.1").unwrap(), vec![0.5]);
        assert_eq!(parse_grid("0:0.95:0.5").unwrap(), vec![0.0, 0.5]);
    }

    #[test]
    fn bad_grids_are_refused() {
        for g in ["1:0:0.1", "0:1:0", "0:1:-1", "0:1", "a:1:0.1", "0:inf:1"] {
            assert_eq!(parse_grid(g).unwrap_err().code, 2, "{g}");
        }
        assert_eq!(parse_grid("0:1:1e-9").unwrap_err().code, 4);
    }

    #[test]
    fn modes_parse_as_lists() {
        assert_eq!(
            parse_modes("nonadaptive,adaptive").unwrap(),
            vec![Mode::Nonadaptive, Mode::Adaptive]
        );
        assert!(parse_modes("sideways").is_err());
    }
}
