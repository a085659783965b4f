//! Command-line front end: solves the priced single-stage problem, runs the
//! hard-budget dynamic program, simulates the pipeline, evaluates the
//! uniform-source rearrangement gap, and tabulates budget sweeps as
//! figure-ready CSV.
//!
//! Exit codes: 0 success, 2 invalid parameters (with a diagnostic naming the
//! violated precondition), 3 internal invariant violation.  Outputs are
//! byte-identical for identical inputs and seeds; floats print with 12
//! significant digits.  Relative output paths resolve under `REMEST_OUT_DIR`
//! when that variable is set.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use remest_core::codec::{ChannelSpec, NoiseKind};
use remest_core::counterexample::CounterexampleSetup;
use remest_core::dp::{solve, DpConfig, DpTable};
use remest_core::error::Error as CoreError;
use remest_core::fmt::sig12;
use remest_core::sim::{episode_seed, monte_carlo, run_episode, write_trace_csv};
use remest_core::sources::SourceModel;
use remest_core::stage::{foc_residuals, solve_thresholds_laplace, stage_cost, CostPair};

#[derive(Parser)]
#[command(name = "remest", version, about = "Two-channel remote estimation: solvers and simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Axis {
    N1,
    N2,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Noise {
    Gaussian,
    Laplace,
    Uniform,
}

impl From<Noise> for NoiseKind {
    fn from(n: Noise) -> NoiseKind {
        match n {
            Noise::Gaussian => NoiseKind::Gaussian,
            Noise::Laplace => NoiseKind::Laplace,
            Noise::Uniform => NoiseKind::Uniform,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve the priced single-stage problem for a Laplace source.
    Stage {
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        lambda: f64,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        gamma: f64,
        #[arg(long, allow_negative_numbers = true)]
        c1: f64,
        #[arg(long, allow_negative_numbers = true)]
        c2: f64,
        /// Emit JSON instead of the text report.
        #[arg(long)]
        json: bool,
    },
    /// Solve the hard-budget dynamic program and write the value table.
    Dp {
        /// Horizon length (number of stages).
        #[arg(long = "T")]
        horizon: usize,
        /// Noisy-channel budget.
        #[arg(long)]
        n1: usize,
        /// Perfect-channel budget.
        #[arg(long)]
        n2: usize,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        lambda: f64,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        gamma: f64,
        /// Output path for the table JSON.
        #[arg(long)]
        out: PathBuf,
        /// Also write the budget lattice at this stage as CSV.
        #[arg(long)]
        slice_t: Option<usize>,
        /// Path for the CSV slice (required with --slice-t).
        #[arg(long)]
        slice_csv: Option<PathBuf>,
        /// Re-read the written table and re-check its invariants.
        #[arg(long)]
        verify: bool,
    },
    /// Simulate the pipeline under a solved table.
    Simulate {
        /// Table JSON produced by `dp`; alternatively give the parameters.
        #[arg(long, conflicts_with_all = ["horizon", "n1", "n2"])]
        table: Option<PathBuf>,
        #[arg(long = "T", required_unless_present = "table")]
        horizon: Option<usize>,
        #[arg(long, required_unless_present = "table")]
        n1: Option<usize>,
        #[arg(long, required_unless_present = "table")]
        n2: Option<usize>,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        lambda: f64,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        gamma: f64,
        #[arg(long, default_value_t = 1000)]
        episodes: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Transmit power budget; defaults to gamma so the noise variance is 1.
        #[arg(long, allow_negative_numbers = true)]
        power: Option<f64>,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        noise_var: f64,
        #[arg(long, value_enum, default_value_t = Noise::Gaussian)]
        noise: Noise,
        /// Output path for the summary JSON (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the first episode's trace as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Re-read written files and re-check their invariants.
        #[arg(long)]
        verify: bool,
    },
    /// Quantify the cost drop from connecting the noisy region of the
    /// symmetric policy (uniform source, no side channel).
    Counterexample {
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        gamma: f64,
        #[arg(long, allow_negative_numbers = true)]
        c1: f64,
        #[arg(long, allow_negative_numbers = true)]
        c2: f64,
        /// Half-width of the uniform source support.
        #[arg(long = "L", default_value_t = 1.0, allow_negative_numbers = true)]
        half_width: f64,
        /// Monte Carlo replay steps (0 disables the replay).
        #[arg(long, default_value_t = 0)]
        steps: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        json: bool,
    },
    /// Tabulate the optimal total error against one budget axis.
    Sweep {
        /// Which budget to sweep.
        #[arg(long, value_enum)]
        axis: Axis,
        #[arg(long = "T")]
        horizon: usize,
        /// Fixed noisy budgets (used when sweeping n2).
        #[arg(long, value_delimiter = ',', default_value = "0")]
        n1: Vec<usize>,
        /// Fixed perfect budgets (used when sweeping n1).
        #[arg(long, value_delimiter = ',', default_value = "0")]
        n2: Vec<usize>,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        lambda: f64,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        gamma: f64,
        /// Upper end of the swept axis (defaults to the horizon).
        #[arg(long)]
        max: Option<usize>,
        #[arg(long)]
        out: PathBuf,
        /// Re-read the written file and re-check monotonicity.
        #[arg(long)]
        verify: bool,
    },
}

enum Failure {
    Invalid(String),
    Internal(String),
}

impl From<CoreError> for Failure {
    fn from(e: CoreError) -> Failure {
        match e {
            CoreError::NonConvergence(_) | CoreError::Partition(_) => {
                Failure::Internal(e.to_string())
            }
            other => Failure::Invalid(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Failure {
        Failure::Invalid(format!("i/o error: {e}"))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = std::panic::catch_unwind(|| dispatch(cli.command));
    match outcome {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(Failure::Invalid(msg))) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Ok(Err(Failure::Internal(msg))) => {
            eprintln!("internal invariant violation: {msg}");
            ExitCode::from(3)
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<String>()
                .map(String::as_str)
                .or_else(|| panic.downcast_ref::<&str>().copied())
                .unwrap_or("panic");
            eprintln!("internal invariant violation: {msg}");
            ExitCode::from(3)
        }
    }
}

fn dispatch(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Stage { lambda, gamma, c1, c2, json } => cmd_stage(lambda, gamma, c1, c2, json),
        Command::Dp { horizon, n1, n2, lambda, gamma, out, slice_t, slice_csv, verify } => {
            cmd_dp(horizon, n1, n2, lambda, gamma, out, slice_t, slice_csv, verify)
        }
        Command::Simulate {
            table,
            horizon,
            n1,
            n2,
            lambda,
            gamma,
            episodes,
            seed,
            power,
            noise_var,
            noise,
            out,
            trace,
            verify,
        } => cmd_simulate(
            table, horizon, n1, n2, lambda, gamma, episodes, seed, power, noise_var, noise, out,
            trace, verify,
        ),
        Command::Counterexample { gamma, c1, c2, half_width, steps, seed, json } => {
            cmd_counterexample(gamma, c1, c2, half_width, steps, seed, json)
        }
        Command::Sweep { axis, horizon, n1, n2, lambda, gamma, max, out, verify } => {
            cmd_sweep(axis, horizon, n1, n2, lambda, gamma, max, out, verify)
        }
    }
}

fn require_positive(name: &str, v: f64) -> Result<(), Failure> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(Failure::Invalid(format!("{name} must be positive and finite, got {v}")));
    }
    Ok(())
}

/// Relative output paths land in `REMEST_OUT_DIR` when it is set.
fn resolve_out(path: &Path) -> PathBuf {
    if path.is_absolute() {
        return path.to_path_buf();
    }
    match std::env::var_os("REMEST_OUT_DIR") {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir).join(path),
        _ => path.to_path_buf(),
    }
}

fn create_out(path: &Path) -> Result<BufWriter<File>, Failure> {
    let resolved = resolve_out(path);
    if let Some(parent) = resolved.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    Ok(BufWriter::new(File::create(&resolved)?))
}

fn cmd_stage(lambda: f64, gamma: f64, c1: f64, c2: f64, json: bool) -> Result<(), Failure> {
    require_positive("lambda", lambda)?;
    require_positive("gamma", gamma)?;
    let costs = CostPair::new(c1, c2)?;
    let policy = solve_thresholds_laplace(lambda, gamma, &costs);
    let model = SourceModel::Laplace { lambda };
    let solution = stage_cost(&model, gamma, &costs, &policy);
    let collapsed = costs.c1 >= costs.c2;
    let residuals = foc_residuals(&model, gamma, &costs, &policy).ok();

    if json {
        let val = serde_json::json!({
            "meta": {"artifact": "remest", "version": env!("CARGO_PKG_VERSION")},
            "params": {"lambda": lambda, "gamma": gamma, "c1": c1, "c2": c2},
            "branch": if collapsed { "collapsed" } else { "interior" },
            "beta1": policy.beta1(),
            "beta2": num_or_null(policy.beta2()),
            "width": policy.width(),
            "cost": solution.cost,
            "distortion": solution.distortion_part,
            "communication": solution.comm_part,
            "foc_residuals": residuals.map(|(a, b)| vec![a, b]),
        });
        println!("{val}");
        return Ok(());
    }

    if collapsed {
        println!("branch: collapsed (noisy channel dominated: c1 >= c2, perfect-only thresholds)");
    } else {
        println!("branch: interior");
    }
    println!("beta1: {}", sig12(policy.beta1()));
    println!("beta2: {}", sig12(policy.beta2()));
    println!("width: {}", sig12(policy.width()));
    println!("cost: {}", sig12(solution.cost));
    println!("distortion: {}", sig12(solution.distortion_part));
    println!("communication: {}", sig12(solution.comm_part));
    if let Some((r1, r2)) = residuals {
        println!("foc_residual_1: {}", sig12(r1));
        println!("foc_residual_2: {}", sig12(r2));
    }
    Ok(())
}

fn num_or_null(x: f64) -> serde_json::Value {
    if x.is_finite() {
        serde_json::json!(x)
    } else {
        serde_json::Value::Null
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_dp(
    horizon: usize,
    n1: usize,
    n2: usize,
    lambda: f64,
    gamma: f64,
    out: PathBuf,
    slice_t: Option<usize>,
    slice_csv: Option<PathBuf>,
    verify: bool,
) -> Result<(), Failure> {
    let config = DpConfig::new(horizon, n1, n2, lambda, gamma)?;
    let table = solve(&config);
    let mut w = create_out(&out)?;
    table.write_json(&mut w)?;
    w.flush()?;

    match (slice_t, slice_csv) {
        (Some(t), Some(path)) => {
            let mut w = create_out(&path)?;
            table.write_stage_slice_csv(&mut w, t)?;
            w.flush()?;
        }
        (Some(_), None) | (None, Some(_)) => {
            return Err(Failure::Invalid("--slice-t and --slice-csv must be given together".into()));
        }
        (None, None) => {}
    }

    if verify {
        let file = File::open(resolve_out(&out))?;
        let back = DpTable::read_json(BufReader::new(file))?;
        verify_table(&back).map_err(Failure::Internal)?;
        if let (Some(t), Some(path)) = (slice_t, &slice_csv) {
            verify_slice_file(&resolve_out(path), &back, t).map_err(Failure::Internal)?;
        }
        println!("verify: ok");
    }
    println!(
        "dp: horizon {horizon}, budgets ({n1}, {n2}), J(1, {n1}, {n2}) = {}",
        sig12(table.value(1, n1, n2)?)
    );
    Ok(())
}

/// Re-reads a stage-slice CSV and checks every row against the re-read table
/// at the printed precision.
fn verify_slice_file(path: &Path, table: &DpTable, t: usize) -> Result<(), String> {
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|e| e.to_string())?;
    let c = table.config();
    let mut rows = 0usize;
    for line in text.lines().filter(|l| !l.starts_with('#')).skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(format!("bad slice row: {line}"));
        }
        let en: usize = fields[0].parse().map_err(|_| "bad e_n".to_string())?;
        let ep: usize = fields[1].parse().map_err(|_| "bad e_p".to_string())?;
        let value: f64 = fields[2].parse().map_err(|_| "bad value".to_string())?;
        let expect = table.value(t, en, ep).map_err(|e| e.to_string())?;
        if (value - expect).abs() > 1e-10 * (1.0 + expect.abs()) {
            return Err(format!("slice value {value} disagrees with table {expect} at ({en},{ep})"));
        }
        rows += 1;
    }
    let expect_rows = (c.noisy_budget + 1) * (c.perfect_budget + 1);
    if rows != expect_rows {
        return Err(format!("slice has {rows} rows, expected {expect_rows}"));
    }
    Ok(())
}

fn verify_table(table: &DpTable) -> Result<(), String> {
    let c = table.config();
    let check = |t: usize, en: usize, ep: usize| table.value(t, en, ep).map_err(|e| e.to_string());
    for en in 0..=c.noisy_budget {
        for ep in 0..=c.perfect_budget {
            if check(c.horizon + 1, en, ep)? != 0.0 {
                return Err(format!("nonzero boundary value at ({en}, {ep})"));
            }
        }
    }
    for t in 1..=c.horizon {
        for en in 0..=c.noisy_budget {
            for ep in 0..=c.perfect_budget {
                let v = check(t, en, ep)?;
                if !(v >= 0.0) {
                    return Err(format!("negative value at ({t}, {en}, {ep})"));
                }
                if en > 0 && v > check(t, en - 1, ep)? + 1e-9 {
                    return Err(format!("value rises in e_n at ({t}, {en}, {ep})"));
                }
                if ep > 0 && v > check(t, en, ep - 1)? + 1e-9 {
                    return Err(format!("value rises in e_p at ({t}, {en}, {ep})"));
                }
                if v > check(t + 1, en, ep)? + {
                    let model = SourceModel::Laplace { lambda: c.lambda };
                    model.variance() + 1e-9
                } {
                    return Err(format!("stage increment exceeds the source variance at ({t}, {en}, {ep})"));
                }
            }
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    table_path: Option<PathBuf>,
    horizon: Option<usize>,
    n1: Option<usize>,
    n2: Option<usize>,
    lambda: f64,
    gamma: f64,
    episodes: usize,
    seed: u64,
    power: Option<f64>,
    noise_var: f64,
    noise: Noise,
    out: Option<PathBuf>,
    trace_path: Option<PathBuf>,
    verify: bool,
) -> Result<(), Failure> {
    let table = match table_path {
        Some(path) => {
            let file = File::open(&path)?;
            DpTable::read_json(BufReader::new(file))?
        }
        None => {
            let config = DpConfig::new(
                horizon.expect("clap enforces presence"),
                n1.expect("clap enforces presence"),
                n2.expect("clap enforces presence"),
                lambda,
                gamma,
            )?;
            solve(&config)
        }
    };
    let config = *table.config();
    let power = power.unwrap_or(config.gamma * noise_var);
    let chan = ChannelSpec::new(power, noise_var, noise.into())?;
    if episodes == 0 {
        return Err(Failure::Invalid("episodes must be at least 1".into()));
    }

    let summary = monte_carlo(&table, &chan, episodes, seed)?;
    let dp_value = table.value(1, config.noisy_budget, config.perfect_budget)?;
    let report = serde_json::json!({
        "meta": {"artifact": "remest", "version": env!("CARGO_PKG_VERSION")},
        "config": config,
        "channel": {"power": power, "noise_var": noise_var, "noise": format!("{:?}", chan.noise_kind())},
        "seed": seed,
        "dp_value": dp_value,
        "summary": summary,
    });
    match &out {
        Some(path) => {
            let mut w = create_out(path)?;
            writeln!(w, "{report}")?;
            w.flush()?;
        }
        None => println!("{report}"),
    }

    if let Some(path) = &trace_path {
        let trace = run_episode(&table, &chan, episode_seed(seed, 0))?;
        let mut w = create_out(path)?;
        write_trace_csv(&mut w, &trace, &config, &chan, seed)?;
        w.flush()?;
    }

    if verify {
        if summary.mean_noisy_uses > config.noisy_budget as f64 + 1e-12
            || summary.mean_perfect_uses > config.perfect_budget as f64 + 1e-12
        {
            return Err(Failure::Internal("summary exceeds a hard budget".into()));
        }
        if let Some(path) = &trace_path {
            verify_trace_file(&resolve_out(path), &config).map_err(Failure::Internal)?;
        }
        println!("verify: ok");
    }
    Ok(())
}

/// Re-reads a trace CSV and re-checks the budget staircase.
fn verify_trace_file(path: &Path, config: &DpConfig) -> Result<(), String> {
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|e| e.to_string())?;
    let mut prev = (config.noisy_budget, config.perfect_budget);
    let mut rows = 0usize;
    for line in text.lines().filter(|l| !l.starts_with('#')).skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 10 {
            return Err(format!("bad trace row: {line}"));
        }
        let u: u8 = fields[2].parse().map_err(|_| "bad u field".to_string())?;
        let e_n: usize = fields[8].parse().map_err(|_| "bad e_n field".to_string())?;
        let e_p: usize = fields[9].parse().map_err(|_| "bad e_p field".to_string())?;
        let expect = match u {
            1 => (prev.0 - 1, prev.1),
            2 => (prev.0, prev.1 - 1),
            _ => prev,
        };
        if (e_n, e_p) != expect {
            return Err(format!("budget staircase broken at row: {line}"));
        }
        prev = (e_n, e_p);
        rows += 1;
    }
    if rows != config.horizon {
        return Err(format!("trace has {rows} rows, expected {}", config.horizon));
    }
    Ok(())
}

fn cmd_counterexample(
    gamma: f64,
    c1: f64,
    c2: f64,
    half_width: f64,
    steps: usize,
    seed: u64,
    json: bool,
) -> Result<(), Failure> {
    let costs = CostPair::new(c1, c2)?;
    let setup = CounterexampleSetup::new(half_width, gamma, costs)?;
    let gap = setup.cost_gap();
    let replay = if steps > 0 {
        let chan = ChannelSpec::new(gamma, 1.0, NoiseKind::Gaussian)?;
        Some(setup.simulate_gap(&chan, steps.max(2), seed)?)
    } else {
        None
    };

    if json {
        let val = serde_json::json!({
            "meta": {"artifact": "remest", "version": env!("CARGO_PKG_VERSION")},
            "params": {"half_width": half_width, "gamma": gamma, "c1": c1, "c2": c2},
            "beta1": setup.policy.beta1(),
            "beta2": setup.policy.beta2(),
            "cost_symmetric": setup.cost_star(),
            "cost_rearranged": setup.cost_prime(),
            "gap": gap,
            "gap_variance_identity": setup.gap_from_variances(),
            "replay": replay.map(|(m, s)| serde_json::json!({"steps": steps, "seed": seed, "mean": m, "std_err": s})),
        });
        println!("{val}");
        return Ok(());
    }

    println!("beta1: {}", sig12(setup.policy.beta1()));
    println!("beta2: {}", sig12(setup.policy.beta2()));
    println!("cost_symmetric: {}", sig12(setup.cost_star()));
    println!("cost_rearranged: {}", sig12(setup.cost_prime()));
    println!("gap: {}", sig12(gap));
    println!("gap_variance_identity: {}", sig12(setup.gap_from_variances()));
    if let Some((mean, se)) = replay {
        println!("replay_gap: {} (std_err {}, steps {steps}, seed {seed})", sig12(mean), sig12(se));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    axis: Axis,
    horizon: usize,
    n1: Vec<usize>,
    n2: Vec<usize>,
    lambda: f64,
    gamma: f64,
    max: Option<usize>,
    out: PathBuf,
    verify: bool,
) -> Result<(), Failure> {
    let sweep_max = max.unwrap_or(horizon);
    let fixed = match axis {
        Axis::N1 => &n2,
        Axis::N2 => &n1,
    };
    if fixed.is_empty() {
        return Err(Failure::Invalid("the fixed-budget list must not be empty".into()));
    }
    let fixed_max = *fixed.iter().max().expect("non-empty");
    let config = match axis {
        Axis::N1 => DpConfig::new(horizon, sweep_max, fixed_max, lambda, gamma)?,
        Axis::N2 => DpConfig::new(horizon, fixed_max, sweep_max, lambda, gamma)?,
    };
    let table = solve(&config);

    let (axis_name, fixed_name) = match axis {
        Axis::N1 => ("n1", "n2"),
        Axis::N2 => ("n2", "n1"),
    };
    let mut w = create_out(&out)?;
    writeln!(w, "# artifact=remest version={}", env!("CARGO_PKG_VERSION"))?;
    writeln!(
        w,
        "# kind=sweep axis={axis_name} T={horizon} lambda={} gamma={} fixed_{fixed_name}={}",
        sig12(lambda),
        sig12(gamma),
        fixed.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(";"),
    )?;
    let header: Vec<String> = std::iter::once(axis_name.to_string())
        .chain(fixed.iter().map(|v| format!("j_{fixed_name}_{v}")))
        .collect();
    writeln!(w, "{}", header.join(","))?;
    for b in 0..=sweep_max {
        let mut row = vec![b.to_string()];
        for &f in fixed {
            let v = match axis {
                Axis::N1 => table.value(1, b, f)?,
                Axis::N2 => table.value(1, f, b)?,
            };
            row.push(sig12(v));
        }
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;

    if verify {
        verify_sweep_file(&resolve_out(&out), axis, horizon, sweep_max).map_err(Failure::Internal)?;
        println!("verify: ok");
    }
    println!("sweep: wrote {} rows to {}", sweep_max + 1, out.display());
    Ok(())
}

/// Re-reads a sweep CSV and re-checks that every value column is
/// non-increasing, and that sweeping the perfect budget up to the horizon
/// ends at exactly zero.
fn verify_sweep_file(path: &Path, axis: Axis, horizon: usize, sweep_max: usize) -> Result<(), String> {
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|e| e.to_string())?;
    let rows: Vec<Vec<f64>> = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|line| {
            line.split(',')
                .map(|f| f.parse::<f64>().map_err(|_| format!("bad float {f}")))
                .collect::<Result<Vec<f64>, String>>()
        })
        .collect::<Result<Vec<_>, String>>()?;
    if rows.len() != sweep_max + 1 {
        return Err(format!("expected {} rows, found {}", sweep_max + 1, rows.len()));
    }
    let cols = rows[0].len();
    for c in 1..cols {
        for r in 1..rows.len() {
            if rows[r][c] > rows[r - 1][c] + 1e-12 {
                return Err(format!("column {c} increases at row {r}"));
            }
        }
    }
    if axis == Axis::N2 && sweep_max >= horizon {
        let last = rows.last().expect("non-empty");
        for c in 1..cols {
            if last[c] != 0.0 {
                return Err(format!("full perfect coverage must be exactly zero, column {c} is {}", last[c]));
            }
        }
    }
    Ok(())
}
