use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use mra_core::experiments::{
    chart_from_aggregates, read_aggregates, read_rows, run_length_sweep, run_noise_sweep, write_outputs, aggregate,
    Execution, ObjectiveKind, SweepSpec, TruthMode,
};
use mra_core::recovery::{
    best_of, dihedral_sign_search, frequency_marching_cyclic, init_seed, recover_multistart, RecoveryConfig,
    DEFAULT_SIGN_SEARCH_MAX,
};
use mra_core::rng::derive_seed;
use mra_core::signal::{random_unit_signal, read_signal_csv, write_signal_csv};
use mra_core::sim::{estimate_moments, sample_observations, Sampling};
use mra_core::theory::verify_theory;
use mra_core::{Error, Group, InvariantMoments64, Signal64};

/// Exit 1: the invocation or an input file is unusable. Exit 2: the work
/// itself failed.
enum Failure {
    Invalid(String),
    Runtime(String),
}

type CliResult<T = ()> = Result<T, Failure>;

fn invalid(ctx: impl Display, e: impl Display) -> Failure {
    Failure::Invalid(format!("{ctx}: {e}"))
}

fn runtime(ctx: impl Display, e: impl Display) -> Failure {
    Failure::Runtime(format!("{ctx}: {e}"))
}

#[derive(Parser)]
#[command(name = "mra", version = concat!(env!("CARGO_PKG_VERSION"), " (mra-core)"), about = "Orbit recovery for cyclic and dihedral multi-reference alignment")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum GroupArg {
    Cyclic,
    Dihedral,
}

impl From<GroupArg> for Group {
    fn from(g: GroupArg) -> Group {
        match g {
            GroupArg::Cyclic => Group::Cyclic,
            GroupArg::Dihedral => Group::Dihedral,
        }
    }
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum Report {
    Best,
    Mean,
}

#[derive(Clone, Copy, ValueEnum)]
enum ObjectiveArg {
    Full,
    ThirdOnly,
}

#[derive(Subcommand)]
enum Command {
    /// Draw noisy, randomly transformed copies of a signal.
    Simulate(SimulateArgs),
    /// Compute the exact invariant moments of a signal.
    Invariants(InvariantsArgs),
    /// Fit a signal to invariant moments by quasi-Newton least squares.
    Recover(RecoverArgs),
    /// Recover a signal from cyclic moments by frequency marching.
    March(MarchArgs),
    /// Enumerate all signals consistent with dihedral moments.
    SignSearch(SignSearchArgs),
    /// Run a seeded experiment sweep.
    #[command(subcommand)]
    Experiment(ExperimentCommand),
    /// Check the rank and spanning identities and the known counterexamples exactly.
    VerifyTheory(VerifyArgs),
    /// Render aggregates (or rows) CSV as an SVG line chart.
    Plot(PlotArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Signal length; required with `--signal random`.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    #[arg(long)]
    samples: usize,
    #[arg(long, value_enum, default_value = "dihedral")]
    group: GroupArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Path to a signal CSV, or `random` for a seeded unit-norm Gaussian signal.
    #[arg(long, default_value = "random")]
    signal: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct InvariantsArgs {
    #[arg(long)]
    signal: PathBuf,
    #[arg(long, value_enum)]
    group: GroupArg,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RecoverArgs {
    #[arg(long)]
    moments: PathBuf,
    /// Must match the group recorded in the moments file when given.
    #[arg(long, value_enum)]
    group: Option<GroupArg>,
    #[arg(long, default_value_t = 1)]
    inits: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fit the third moment only.
    #[arg(long)]
    third_only: bool,
    #[arg(long, value_enum, default_value = "best")]
    report: Report,
    /// Ground-truth signal CSV for aligned errors; required for `--report mean`.
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long, default_value_t = 5000)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-10)]
    grad_tol: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MarchArgs {
    #[arg(long)]
    moments: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SignSearchArgs {
    #[arg(long)]
    moments: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SIGN_SEARCH_MAX)]
    n_max: usize,
    /// Also write the report here; it is always printed.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum ExperimentCommand {
    /// Mean aligned error against signal length, from exact moments.
    LengthSweep(LengthSweepArgs),
    /// Recovery from simulated data and estimator spread against noise.
    NoiseSweep(NoiseSweepArgs),
}

#[derive(Args)]
struct CommonSweep {
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "cyclic,dihedral")]
    groups: Vec<GroupArg>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "third-only")]
    objective: ObjectiveArg,
    #[arg(long, default_value_t = 5000)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-10)]
    grad_tol: f64,
    /// Run trials on the current thread only.
    #[arg(long)]
    serial: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct LengthSweepArgs {
    #[arg(long, default_value_t = 5)]
    n_min: usize,
    #[arg(long, default_value_t = 120)]
    n_max: usize,
    #[arg(long, default_value_t = 5)]
    step: usize,
    /// Use one ground truth per length; also reports the error of the
    /// aligned average.
    #[arg(long)]
    shared_truth: bool,
    #[command(flatten)]
    common: CommonSweep,
}

#[derive(Args)]
struct NoiseSweepArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, value_delimiter = ',', required = true)]
    sigmas: Vec<f64>,
    #[arg(long, value_delimiter = ',', required = true)]
    samples: Vec<usize>,
    #[command(flatten)]
    common: CommonSweep,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 30)]
    k_max: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

fn load_signal(path: &Path, flag: &str) -> CliResult<Signal64> {
    read_signal_csv(path).map_err(|e| invalid(format!("{flag} {}", path.display()), e))
}

fn load_moments(path: &Path) -> CliResult<InvariantMoments64> {
    InvariantMoments64::read_json(path).map_err(|e| invalid(format!("--moments {}", path.display()), e))
}

fn write_json(path: &Path, value: &serde_json::Value) -> CliResult {
    let text = serde_json::to_string_pretty(value).map_err(|e| runtime(path.display(), e))?;
    std::fs::write(path, text + "\n").map_err(|e| runtime(path.display(), e))
}

fn print_json(value: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("serializable"));
}

/// Errors about the input itself are validation failures; anything else
/// counts as a runtime failure.
fn classify(ctx: impl Display, e: Error) -> Failure {
    match e {
        Error::Io { .. } => runtime(ctx, e),
        _ => invalid(ctx, e),
    }
}

fn simulate(a: SimulateArgs) -> CliResult {
    let group: Group = a.group.into();
    let truth = if a.signal == "random" {
        let n = a.n.ok_or_else(|| invalid("--n", "required with --signal random"))?;
        random_unit_signal(n, derive_seed(a.seed, &[0])).map_err(|e| invalid("--n", e))?
    } else {
        let x = load_signal(Path::new(&a.signal), "--signal")?;
        if let Some(n) = a.n {
            if n != x.len() {
                return Err(invalid("--n", format!("{n} does not match the signal length {}", x.len())));
            }
        }
        x
    };
    let obs = sample_observations(&truth, a.sigma, a.samples, group, derive_seed(a.seed, &[1]), Sampling::Uniform)
        .map_err(|e| invalid("--sigma/--samples", e))?;
    let out = &a.out;
    obs.write(out).map_err(|e| runtime(out.display(), e))?;
    write_signal_csv(out.join("truth.csv"), &truth).map_err(|e| runtime(out.display(), e))?;
    let moments = estimate_moments(&obs).map_err(|e| runtime("estimate", e))?;
    moments.write_json(out.join("moments.json")).map_err(|e| runtime(out.display(), e))?;
    write_json(
        &out.join("manifest.json"),
        &json!({
            "command": "simulate",
            "version": env!("CARGO_PKG_VERSION"),
            "n": truth.len(),
            "sigma": a.sigma,
            "samples": a.samples,
            "group": group,
            "seed": a.seed,
            "signal": a.signal,
        }),
    )?;
    println!("wrote {} observations of length {} to {}", a.samples, truth.len(), out.display());
    Ok(())
}

fn invariants(a: InvariantsArgs) -> CliResult {
    let x = load_signal(&a.signal, "--signal")?;
    let m = InvariantMoments64::of_signal(&x, a.group.into());
    m.write_json(&a.out).map_err(|e| runtime(a.out.display(), e))?;
    println!("{} {} invariants of a length-{} signal written to {}", m.third.len() + m.n + 1, m.group, m.n, a.out.display());
    Ok(())
}

fn recover(a: RecoverArgs) -> CliResult {
    let m = load_moments(&a.moments)?;
    if let Some(g) = a.group {
        let g: Group = g.into();
        if g != m.group {
            return Err(invalid("--group", Error::GroupMismatch { expected: g, found: m.group }));
        }
    }
    let truth = a.truth.as_deref().map(|p| load_signal(p, "--truth")).transpose()?;
    if let Some(t) = &truth {
        if t.len() != m.n {
            return Err(invalid("--truth", Error::DimensionMismatch { expected: m.n, got: t.len() }));
        }
    }
    if a.report == Report::Mean && truth.is_none() {
        return Err(invalid("--report mean", "requires --truth"));
    }
    let mut cfg = RecoveryConfig::default().with_seed(a.seed);
    if a.third_only {
        cfg = cfg.third_only();
    }
    cfg.optimizer.max_iters = a.max_iters;
    cfg.optimizer.grad_tol = a.grad_tol;
    cfg.validate().map_err(|e| invalid("--grad-tol/--max-iters", e))?;
    if a.inits == 0 {
        return Err(invalid("--inits", "must be at least 1"));
    }

    let mut runs = recover_multistart(&m, &cfg, a.inits).map_err(|e| runtime("recover", e))?;
    if let Some(t) = &truth {
        for r in runs.iter_mut().filter(|r| !r.failed()) {
            r.score(t, m.group).map_err(|e| classify("--truth", e))?;
        }
    }
    let failed = runs.iter().filter(|r| r.failed()).count();
    let errors: Vec<f64> = runs.iter().filter_map(|r| r.aligned_error).collect();
    let mean_error = (!errors.is_empty()).then(|| errors.iter().sum::<f64>() / errors.len() as f64);
    let best = best_of(runs).expect("at least one run");
    if best.failed() {
        return Err(runtime("recover", "every initialization diverged"));
    }
    let mut value = serde_json::to_value(best.to_record()).map_err(|e| runtime("recover", e))?;
    value["report"] = json!(if a.report == Report::Best { "best" } else { "mean" });
    value["inits"] = json!(a.inits);
    value["failed_inits"] = json!(failed);
    value["init_seed"] = json!(init_seed(a.seed, 0));
    if a.report == Report::Mean {
        value["mean_aligned_error"] = json!(mean_error);
    }
    write_json(&a.out, &value)?;
    match (a.report, mean_error, best.aligned_error) {
        (Report::Mean, Some(e), _) => println!("mean aligned error over {} inits: {e:.3e}", errors.len()),
        (_, _, Some(e)) => println!("best loss {:.3e}, aligned error {e:.3e}", best.loss),
        _ => println!("best loss {:.3e} after {} iterations", best.loss, best.iterations),
    }
    Ok(())
}

fn march(a: MarchArgs) -> CliResult {
    let m = load_moments(&a.moments)?;
    let x = frequency_marching_cyclic(&m).map_err(|e| invalid(format!("--moments {}", a.moments.display()), e))?;
    write_json(&a.out, &json!({ "estimate": x.values() }))?;
    println!("recovered a length-{} signal by frequency marching", x.len());
    Ok(())
}

fn sign_search(a: SignSearchArgs) -> CliResult {
    let m = load_moments(&a.moments)?;
    let out = match dihedral_sign_search(&m, a.n_max) {
        Ok(o) => o,
        Err(e @ Error::SearchTooLarge { .. }) => return Err(invalid("--n-max", e)),
        Err(e) => return Err(invalid(format!("--moments {}", a.moments.display()), e)),
    };
    let mut value = out.to_json();
    value["n"] = json!(m.n);
    if let Some(p) = &a.out {
        write_json(p, &value)?;
    }
    print_json(&value);
    eprintln!("{} consistent orbit(s) from {} sign assignments", out.orbits.len(), out.assignments);
    Ok(())
}

fn sweep_spec(mut spec: SweepSpec, c: &CommonSweep) -> SweepSpec {
    spec.objective = match c.objective {
        ObjectiveArg::Full => ObjectiveKind::Full,
        ObjectiveArg::ThirdOnly => ObjectiveKind::ThirdOnly,
    };
    spec.max_iters = c.max_iters;
    spec.grad_tol = c.grad_tol;
    spec
}

fn experiment(cmd: ExperimentCommand) -> CliResult {
    let (spec, common) = match &cmd {
        ExperimentCommand::LengthSweep(a) => {
            let c = &a.common;
            let groups = c.groups.iter().map(|&g| g.into()).collect();
            let mut spec = SweepSpec::length_sweep(a.n_min, a.n_max, a.step, c.trials, groups, c.seed);
            if a.shared_truth {
                spec.truth = TruthMode::Shared;
            }
            (sweep_spec(spec, c), c)
        }
        ExperimentCommand::NoiseSweep(a) => {
            let c = &a.common;
            let groups = c.groups.iter().map(|&g| g.into()).collect();
            let spec = SweepSpec::noise_sweep(a.n, a.sigmas.clone(), a.samples.clone(), c.trials, groups, c.seed);
            (sweep_spec(spec, c), c)
        }
    };
    spec.validate().map_err(|e| invalid("experiment", e))?;
    let exec = if common.serial { Execution::Serial } else { Execution::Parallel };
    let result = match cmd {
        ExperimentCommand::LengthSweep(_) => run_length_sweep(&spec, exec),
        ExperimentCommand::NoiseSweep(_) => run_noise_sweep(&spec, exec),
    }
    .map_err(|e| runtime("experiment", e))?;
    write_outputs(&result, &common.out).map_err(|e| runtime(common.out.display(), e))?;
    for a in &result.aggregates {
        println!("{:<8} n={:<4} mean={:.6} std={:.6} failed={}", a.group, a.n, a.mean_error, a.std_error, a.failed_trials);
    }
    if let Some(noise) = &result.noise {
        for a in &noise.aggregates {
            println!("{:<8} sigma={} N={} mean={:.6} failed={}", a.group, a.sigma, a.samples, a.mean_error, a.failed_trials);
        }
        if let Some(s) = noise.scaling_slope {
            println!("third-moment estimator std slope vs sigma: {s:.3}");
        }
    }
    println!("results in {}", common.out.display());
    Ok(())
}

fn verify(a: VerifyArgs) -> CliResult {
    let report = verify_theory(a.k_max).map_err(|e| invalid("--k-max", e))?;
    if let Some(p) = &a.out {
        report.write_json(p).map_err(|e| runtime(p.display(), e))?;
    }
    let failed: Vec<_> = report.checks.iter().filter(|c| !c.pass).collect();
    println!("{} checks, {} failed", report.checks.len(), failed.len());
    for c in &failed {
        println!("FAIL {} k={:?} {}", c.name, c.k, c.witness);
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Runtime(format!("{} theory check(s) failed", failed.len())))
    }
}

fn plot(a: PlotArgs) -> CliResult {
    let ctx = format!("--in {}", a.input.display());
    let aggregates = match read_aggregates(&a.input) {
        Ok(ag) => ag,
        Err(Error::Malformed(_)) => aggregate(&read_rows(&a.input).map_err(|e| invalid(&ctx, e))?),
        Err(e) => return Err(invalid(&ctx, e)),
    };
    chart_from_aggregates(&aggregates).write(&a.out).map_err(|e| match e {
        Error::EmptyPlot => invalid(&ctx, e),
        e => runtime(a.out.display(), e),
    })?;
    println!("wrote {}", a.out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    ExitCode::SUCCESS
                }
                _ => {
                    let text = e.render().to_string();
                    let line = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("invalid arguments");
                    eprintln!("{line}");
                    ExitCode::from(1)
                }
            };
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Invariants(a) => invariants(a),
        Command::Recover(a) => recover(a),
        Command::March(a) => march(a),
        Command::SignSearch(a) => sign_search(a),
        Command::Experiment(c) => experiment(c),
        Command::VerifyTheory(a) => verify(a),
        Command::Plot(a) => plot(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
