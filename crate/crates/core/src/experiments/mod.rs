//! Seeded recovery experiments: error versus signal length from exact
//! moments, and error and estimator spread versus noise from simulated data.

mod io;
pub mod svg;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::Group;
use crate::invariants::InvariantMoments;
use crate::recovery::{aligned_average, recover, RecoveryConfig, Weights};
use crate::rng::derive_seed;
use crate::signal::{random_unit_signal, Signal};
use crate::sim::{estimate_moments, estimator_noise_scaling, sample_observations, Sampling};

pub use io::{read_aggregates, read_noise_rows, read_rows, write_outputs};
pub use svg::{Chart, Series};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    LengthSweep,
    NoiseSweep,
}

/// Which residuals the recovery objective includes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveKind {
    /// Mean, power spectrum and third moment.
    Full,
    /// Third moment only.
    #[default]
    ThirdOnly,
}

/// Whether every trial draws its own ground truth or all trials at a given
/// length share one (and differ only in initialization).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruthMode {
    #[default]
    PerTrial,
    Shared,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    Serial,
    #[default]
    Parallel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub kind: SweepKind,
    pub n_min: usize,
    pub n_max: usize,
    pub step: usize,
    pub trials: usize,
    pub groups: Vec<Group>,
    #[serde(default)]
    pub sigmas: Vec<f64>,
    /// Observation counts for the noise sweep.
    #[serde(default)]
    pub samples: Vec<usize>,
    pub master_seed: u64,
    #[serde(default)]
    pub objective: ObjectiveKind,
    #[serde(default)]
    pub truth: TruthMode,
    pub max_iters: usize,
    pub grad_tol: f64,
}

impl SweepSpec {
    pub fn length_sweep(n_min: usize, n_max: usize, step: usize, trials: usize, groups: Vec<Group>, seed: u64) -> Self {
        SweepSpec {
            kind: SweepKind::LengthSweep,
            n_min,
            n_max,
            step,
            trials,
            groups,
            sigmas: Vec::new(),
            samples: Vec::new(),
            master_seed: seed,
            objective: ObjectiveKind::default(),
            truth: TruthMode::default(),
            max_iters: 5000,
            grad_tol: 1e-10,
        }
    }

    pub fn noise_sweep(n: usize, sigmas: Vec<f64>, samples: Vec<usize>, trials: usize, groups: Vec<Group>, seed: u64) -> Self {
        SweepSpec { kind: SweepKind::NoiseSweep, sigmas, samples, ..Self::length_sweep(n, n, 1, trials, groups, seed) }
    }

    pub fn lengths(&self) -> Vec<usize> {
        (self.n_min..=self.n_max).step_by(self.step.max(1)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.n_min < 2 {
            return bad(format!("n-min must be at least 2, got {}", self.n_min));
        }
        if self.n_max < self.n_min {
            return bad(format!("n-max {} is below n-min {}", self.n_max, self.n_min));
        }
        if self.step < 1 {
            return bad("step must be at least 1".into());
        }
        if self.trials < 1 {
            return bad("trials must be at least 1".into());
        }
        if self.groups.is_empty() {
            return bad("at least one group is required".into());
        }
        if !(self.grad_tol > 0.0) || self.max_iters == 0 {
            return bad("grad-tol must be positive and max-iters at least 1".into());
        }
        if self.kind == SweepKind::NoiseSweep {
            if self.sigmas.is_empty() || self.samples.is_empty() {
                return bad("noise sweep needs at least one sigma and one sample count".into());
            }
            if self.sigmas.iter().any(|s| !s.is_finite() || *s < 0.0) {
                return bad("sigmas must be finite and non-negative".into());
            }
            if self.samples.contains(&0) {
                return bad("sample counts must be positive".into());
            }
        }
        Ok(())
    }

    fn recovery_config(&self, init_seed: u64) -> RecoveryConfig<f64> {
        let mut cfg = RecoveryConfig::default().with_seed(init_seed);
        cfg.weights = match self.objective {
            ObjectiveKind::Full => Weights::all(),
            ObjectiveKind::ThirdOnly => Weights::third_only(),
        };
        cfg.optimizer.max_iters = self.max_iters;
        cfg.optimizer.grad_tol = self.grad_tol;
        cfg
    }

    fn truth_seed(&self, n: usize, trial: usize) -> u64 {
        match self.truth {
            TruthMode::PerTrial => derive_seed(self.master_seed, &[n as u64, trial as u64, 0]),
            TruthMode::Shared => derive_seed(self.master_seed, &[n as u64]),
        }
    }

    fn init_seed(&self, n: usize, trial: usize) -> u64 {
        derive_seed(self.master_seed, &[n as u64, trial as u64, 1])
    }

    fn observation_seed(&self, n: usize, trial: usize, si: usize, ni: usize) -> u64 {
        derive_seed(self.master_seed, &[n as u64, trial as u64, 2, si as u64, ni as u64])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub group: Group,
    pub n: usize,
    pub trial: usize,
    pub seed: u64,
    /// NaN marks a diverged trial.
    pub aligned_error: f64,
    pub iterations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub group: Group,
    pub n: usize,
    pub mean_error: f64,
    pub std_error: f64,
    pub failed_trials: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseRow {
    pub group: Group,
    pub n: usize,
    pub sigma: f64,
    pub samples: usize,
    pub trial: usize,
    pub seed: u64,
    pub aligned_error: f64,
    pub iterations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseAggregate {
    pub group: Group,
    pub sigma: f64,
    pub samples: usize,
    pub mean_error: f64,
    pub std_error: f64,
    pub failed_trials: usize,
}

/// Pooled standard deviation of the third-moment estimator at one noise level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub sigma: f64,
    pub third_moment_std: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlignedAverage {
    pub group: Group,
    pub n: usize,
    /// Relative error of the average of all aligned estimates.
    pub error: f64,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct NoiseData {
    pub rows: Vec<NoiseRow>,
    pub aggregates: Vec<NoiseAggregate>,
    pub scaling: Vec<ScalingPoint>,
    /// Least-squares slope of log std against log sigma.
    pub scaling_slope: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub spec: SweepSpec,
    pub rows: Vec<Row>,
    pub aggregates: Vec<Aggregate>,
    /// Filled only when trials share a ground truth.
    pub aligned_averages: Vec<AlignedAverage>,
    pub noise: Option<NoiseData>,
}

/// Mean and sample standard deviation of the finite entries, and the count
/// of non-finite ones.
pub fn summarize(errors: &[f64]) -> (f64, f64, usize) {
    let ok: Vec<f64> = errors.iter().copied().filter(|e| e.is_finite()).collect();
    let failed = errors.len() - ok.len();
    if ok.is_empty() {
        return (f64::NAN, f64::NAN, failed);
    }
    let k = ok.len() as f64;
    let mean = ok.iter().sum::<f64>() / k;
    let std = if ok.len() < 2 {
        0.0
    } else {
        (ok.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / (k - 1.0)).sqrt()
    };
    (mean, std, failed)
}

/// Aggregates by `(group, n)`, in order of first appearance.
pub fn aggregate(rows: &[Row]) -> Vec<Aggregate> {
    let mut keys: Vec<(Group, usize)> = Vec::new();
    for r in rows {
        if !keys.contains(&(r.group, r.n)) {
            keys.push((r.group, r.n));
        }
    }
    keys.into_iter()
        .map(|(group, n)| {
            let errs: Vec<f64> = rows.iter().filter(|r| r.group == group && r.n == n).map(|r| r.aligned_error).collect();
            let (mean_error, std_error, failed_trials) = summarize(&errs);
            Aggregate { group, n, mean_error, std_error, failed_trials }
        })
        .collect()
}

/// Aggregates by `(group, sigma, samples)`, in order of first appearance.
pub fn aggregate_noise(rows: &[NoiseRow]) -> Vec<NoiseAggregate> {
    let mut keys: Vec<(Group, u64, usize)> = Vec::new();
    for r in rows {
        let key = (r.group, r.sigma.to_bits(), r.samples);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(group, sb, samples)| {
            let errs: Vec<f64> = rows
                .iter()
                .filter(|r| r.group == group && r.sigma.to_bits() == sb && r.samples == samples)
                .map(|r| r.aligned_error)
                .collect();
            let (mean_error, std_error, failed_trials) = summarize(&errs);
            NoiseAggregate { group, sigma: f64::from_bits(sb), samples, mean_error, std_error, failed_trials }
        })
        .collect()
}

/// Least-squares slope of `log y` against `log x` over positive points.
pub fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> =
        points.iter().filter(|(x, y)| *x > 0.0 && *y > 0.0).map(|(x, y)| (x.ln(), y.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Run `f` over `jobs` keeping input order; serial mode uses a one-thread
/// pool so nested parallel code runs serially as well.
fn run_jobs<J, R, F>(jobs: Vec<J>, exec: Execution, f: F) -> Result<Vec<R>>
where
    J: Send + Sync,
    R: Send,
    F: Fn(&J) -> Result<R> + Send + Sync,
{
    match exec {
        Execution::Parallel => jobs.par_iter().map(&f).collect(),
        Execution::Serial => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(1)
                .build()
                .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
            pool.install(|| jobs.iter().map(&f).collect())
        }
    }
}

struct Trial {
    row: Row,
    estimate: Option<Signal<f64>>,
    truth: Signal<f64>,
}

fn run_trial(spec: &SweepSpec, group: Group, n: usize, trial: usize, target: Option<InvariantMoments<f64>>) -> Result<Trial> {
    let seed = spec.truth_seed(n, trial);
    let truth = random_unit_signal::<f64>(n, seed)?;
    let target = target.unwrap_or_else(|| InvariantMoments::of_signal(&truth, group));
    let mut r = recover(&target, &spec.recovery_config(spec.init_seed(n, trial)))?;
    let (aligned_error, estimate) = if r.failed() {
        (f64::NAN, None)
    } else {
        r.score(&truth, group)?;
        (r.aligned_error.unwrap_or(f64::NAN), Some(r.estimate))
    };
    Ok(Trial { row: Row { group, n, trial, seed, aligned_error, iterations: r.iterations }, estimate, truth })
}

/// Error versus length from exact moments. Each `(group, n, trial)` has its
/// own seeds, so results do not depend on execution order.
pub fn run_length_sweep(spec: &SweepSpec, exec: Execution) -> Result<SweepResult> {
    spec.validate()?;
    let mut jobs = Vec::new();
    for &group in &spec.groups {
        for n in spec.lengths() {
            for trial in 0..spec.trials {
                jobs.push((group, n, trial));
            }
        }
    }
    let trials = run_jobs(jobs, exec, |&(group, n, trial)| run_trial(spec, group, n, trial, None))?;

    let mut aligned_averages = Vec::new();
    if spec.truth == TruthMode::Shared {
        for &group in &spec.groups {
            for n in spec.lengths() {
                let these: Vec<&Trial> = trials.iter().filter(|t| t.row.group == group && t.row.n == n).collect();
                let ests: Vec<Signal<f64>> = these.iter().filter_map(|t| t.estimate.clone()).collect();
                let error = match (these.first(), ests.is_empty()) {
                    (Some(t), false) => {
                        let avg = aligned_average(&t.truth, &ests, group)?;
                        avg.distance(&t.truth) / t.truth.norm()
                    }
                    _ => f64::NAN,
                };
                aligned_averages.push(AlignedAverage { group, n, error });
            }
        }
    }
    let rows: Vec<Row> = trials.into_iter().map(|t| t.row).collect();
    let aggregates = aggregate(&rows);
    Ok(SweepResult { spec: spec.clone(), rows, aggregates, aligned_averages, noise: None })
}

/// Recovery from debiased moment estimates at every `(sigma, samples)` pair,
/// plus the spread of the third-moment estimator against sigma. At `sigma =
/// 0` exact moments are used, which reproduces the length-sweep trial with
/// the same seeds.
pub fn run_noise_sweep(spec: &SweepSpec, exec: Execution) -> Result<SweepResult> {
    spec.validate()?;
    if spec.kind != SweepKind::NoiseSweep {
        return Err(Error::InvalidConfig("spec is not a noise sweep".into()));
    }
    let n = spec.n_min;
    let mut jobs = Vec::new();
    for &group in &spec.groups {
        for (si, &sigma) in spec.sigmas.iter().enumerate() {
            for (ni, &count) in spec.samples.iter().enumerate() {
                for trial in 0..spec.trials {
                    jobs.push((group, si, sigma, ni, count, trial));
                }
            }
        }
    }
    let rows = run_jobs(jobs, exec, |&(group, si, sigma, ni, count, trial)| {
        let target = if sigma == 0.0 {
            None
        } else {
            let truth = random_unit_signal::<f64>(n, spec.truth_seed(n, trial))?;
            let obs = sample_observations(&truth, sigma, count, group, spec.observation_seed(n, trial, si, ni), Sampling::Uniform)?;
            Some(estimate_moments(&obs)?)
        };
        let t = run_trial(spec, group, n, trial, target)?;
        Ok(NoiseRow {
            group,
            n,
            sigma,
            samples: count,
            trial,
            seed: t.row.seed,
            aligned_error: t.row.aligned_error,
            iterations: t.row.iterations,
        })
    })?;

    let positive: Vec<f64> = spec.sigmas.iter().copied().filter(|&s| s > 0.0).collect();
    let mut scaling = Vec::new();
    if !positive.is_empty() && spec.trials >= 2 {
        let truth = random_unit_signal::<f64>(n, spec.truth_seed(n, 0))?;
        let count = *spec.samples.iter().max().expect("validated");
        let seed = derive_seed(spec.master_seed, &[n as u64, 3]);
        scaling = estimator_noise_scaling(&truth, &positive, count, spec.trials, spec.groups[0], seed)?
            .into_iter()
            .map(|(sigma, third_moment_std)| ScalingPoint { sigma, third_moment_std })
            .collect();
    }
    let scaling_slope = log_log_slope(&scaling.iter().map(|p| (p.sigma, p.third_moment_std)).collect::<Vec<_>>());
    let aggregates = aggregate_noise(&rows);
    Ok(SweepResult {
        spec: spec.clone(),
        rows: Vec::new(),
        aggregates: Vec::new(),
        aligned_averages: Vec::new(),
        noise: Some(NoiseData { rows, aggregates, scaling, scaling_slope }),
    })
}

/// Dispatch on the spec's kind.
pub fn run_sweep(spec: &SweepSpec, exec: Execution) -> Result<SweepResult> {
    match spec.kind {
        SweepKind::LengthSweep => run_length_sweep(spec, exec),
        SweepKind::NoiseSweep => run_noise_sweep(spec, exec),
    }
}

impl SweepResult {
    /// Chart of mean error against length (length sweep) or of estimator
    /// spread against sigma on log-log axes (noise sweep).
    pub fn chart(&self) -> Chart {
        match &self.noise {
            None => chart_from_aggregates(&self.aggregates),
            Some(noise) if !noise.scaling.is_empty() => Chart {
                title: "Third-moment estimator spread".into(),
                x_label: "sigma".into(),
                y_label: "std".into(),
                series: vec![Series {
                    name: "third moment".into(),
                    points: noise.scaling.iter().map(|p| (p.sigma, p.third_moment_std)).collect(),
                }],
                log_x: true,
                log_y: true,
            },
            Some(noise) => {
                let mut series: Vec<Series> = Vec::new();
                for a in &noise.aggregates {
                    let name = format!("{} sigma={}", a.group, a.sigma);
                    match series.iter_mut().find(|s| s.name == name) {
                        Some(s) => s.points.push((a.samples as f64, a.mean_error)),
                        None => series.push(Series { name, points: vec![(a.samples as f64, a.mean_error)] }),
                    }
                }
                Chart {
                    title: "Recovery error from estimated moments".into(),
                    x_label: "samples".into(),
                    y_label: "mean aligned error".into(),
                    series,
                    log_x: true,
                    log_y: false,
                }
            }
        }
    }
}

/// One series per group: mean aligned error against length.
pub fn chart_from_aggregates(aggregates: &[Aggregate]) -> Chart {
    let mut series: Vec<Series> = Vec::new();
    for a in aggregates {
        let name = a.group.to_string();
        match series.iter_mut().find(|s| s.name == name) {
            Some(s) => s.points.push((a.n as f64, a.mean_error)),
            None => series.push(Series { name, points: vec![(a.n as f64, a.mean_error)] }),
        }
    }
    Chart {
        title: "Error for different signal lengths".into(),
        x_label: "signal length n".into(),
        y_label: "mean aligned error".into(),
        series,
        log_x: false,
        log_y: false,
    }
}
