//! Signal recovery from invariant moments: least-squares fitting with
//! L-BFGS, frequency marching for cyclic moments, and an exhaustive sign
//! search for dihedral moments.

mod align;
pub mod lbfgs;
mod marching;
mod objective;
mod sign_search;

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{Group, GroupElement};
use crate::invariants::InvariantMoments;
use crate::rng::derive_seed;
use crate::scalar::Scalar;
use crate::signal::{random_unit_signal, Signal};

pub use align::{align_and_error, aligned_average};
pub use lbfgs::{LbfgsParams, Status};
pub use marching::{frequency_marching_cyclic, MIN_POWER};
pub use objective::{loss_and_gradient, Objective, Weights};
pub use sign_search::{dihedral_sign_search, SignSearchOutcome, CONSISTENCY_TOL, DEFAULT_SIGN_SEARCH_MAX};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RecoveryConfig<T> {
    pub weights: Weights<T>,
    pub optimizer: LbfgsParams<T>,
    pub init_seed: u64,
}

impl<T: Scalar> Default for RecoveryConfig<T> {
    fn default() -> Self {
        RecoveryConfig { weights: Weights::all(), optimizer: LbfgsParams::default(), init_seed: 0 }
    }
}

impl<T: Scalar> RecoveryConfig<T> {
    pub fn third_only(mut self) -> Self {
        self.weights = Weights::third_only();
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.init_seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let w = self.weights;
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.into()));
        if [w.m1, w.power, w.third].iter().any(|v| !v.is_finite() || *v < T::zero()) {
            return bad("weights must be finite and nonnegative");
        }
        if !(w.third > T::zero()) {
            return bad("the third-order weight must be positive");
        }
        let o = &self.optimizer;
        if o.memory == 0 {
            return bad("L-BFGS memory must be at least 1");
        }
        if !(o.grad_tol > T::zero()) {
            return bad("gradient tolerance must be positive");
        }
        if !(o.armijo > T::zero() && o.armijo < T::one()) {
            return bad("Armijo constant must lie in (0, 1)");
        }
        if !(o.contraction > T::zero() && o.contraction < T::one()) {
            return bad("step contraction must lie in (0, 1)");
        }
        if !(o.initial_step > T::zero()) || !o.initial_step.is_finite() {
            return bad("initial step must be positive");
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct RecoveryResult<T> {
    pub estimate: Signal<T>,
    pub loss: T,
    pub loss_trace: Vec<T>,
    pub iterations: usize,
    pub grad_norm: T,
    pub status: Status,
    pub aligned_error: Option<T>,
    pub group_element: Option<GroupElement>,
}

/// JSON form of [`RecoveryResult`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveryRecord {
    pub estimate: Vec<f64>,
    pub loss: f64,
    pub loss_trace: Vec<f64>,
    pub iterations: usize,
    pub grad_norm: f64,
    pub status: Status,
    pub aligned_error: Option<f64>,
    pub group_element: Option<GroupElement>,
}

impl<T: Scalar> RecoveryResult<T> {
    /// A diverged run yields no usable estimate.
    pub fn failed(&self) -> bool {
        self.status == Status::Diverged || !self.loss.is_finite()
    }

    /// Fill in the aligned error against a known ground truth.
    pub fn score(&mut self, truth: &Signal<T>, group: Group) -> Result<()> {
        let (g, e) = align_and_error(truth, &self.estimate, group)?;
        self.group_element = Some(g);
        self.aligned_error = Some(e);
        Ok(())
    }

    pub fn to_record(&self) -> RecoveryRecord {
        RecoveryRecord {
            estimate: self.estimate.values().iter().map(|v| v.as_f64()).collect(),
            loss: self.loss.as_f64(),
            loss_trace: self.loss_trace.iter().map(|v| v.as_f64()).collect(),
            iterations: self.iterations,
            grad_norm: self.grad_norm.as_f64(),
            status: self.status,
            aligned_error: self.aligned_error.map(|v| v.as_f64()),
            group_element: self.group_element,
        }
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(&self.to_record()).map_err(|e| Error::json(path, e))?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

/// Fit a signal to `target` starting from `random_unit_signal(n, init_seed)`.
///
/// A non-finite loss is reported through [`RecoveryResult::failed`], never as
/// an error; errors are reserved for invalid inputs.
pub fn recover<T: Scalar>(target: &InvariantMoments<T>, config: &RecoveryConfig<T>) -> Result<RecoveryResult<T>> {
    config.validate()?;
    target.validate()?;
    let x0 = random_unit_signal::<T>(target.n, config.init_seed)?;
    recover_from(target, config, x0)
}

/// As [`recover`], from a caller-supplied starting point.
pub fn recover_from<T: Scalar>(
    target: &InvariantMoments<T>,
    config: &RecoveryConfig<T>,
    x0: Signal<T>,
) -> Result<RecoveryResult<T>> {
    if x0.len() != target.n {
        return Err(Error::DimensionMismatch { expected: target.n, got: x0.len() });
    }
    let obj = Objective::new(target, config.weights);
    let out = lbfgs::minimize(|x, g| obj.eval(x, g), x0.into_values(), &config.optimizer);
    let estimate = if out.x.iter().all(|v| v.is_finite()) {
        Signal::new(out.x)?
    } else {
        Signal::zeros(target.n)?
    };
    Ok(RecoveryResult {
        estimate,
        loss: out.loss,
        loss_trace: out.loss_trace,
        iterations: out.iterations,
        grad_norm: out.grad_norm,
        status: out.status,
        aligned_error: None,
        group_element: None,
    })
}

/// Seed of the `i`-th random start below `seed`.
pub fn init_seed(seed: u64, i: usize) -> u64 {
    derive_seed(seed, &[i as u64])
}

/// Run `inits` independent starts in parallel. Results come back in start
/// order regardless of scheduling.
pub fn recover_multistart<T: Scalar>(
    target: &InvariantMoments<T>,
    config: &RecoveryConfig<T>,
    inits: usize,
) -> Result<Vec<RecoveryResult<T>>> {
    if inits == 0 {
        return Err(Error::InvalidConfig("at least one initialization is required".into()));
    }
    config.validate()?;
    target.validate()?;
    (0..inits)
        .into_par_iter()
        .map(|i| recover(target, &config.with_seed(init_seed(config.init_seed, i))))
        .collect()
}

/// The run with the smallest final loss; failed runs rank last.
pub fn best_of<T: Scalar>(runs: Vec<RecoveryResult<T>>) -> Option<RecoveryResult<T>> {
    runs.into_iter().min_by(|a, b| {
        let key = |r: &RecoveryResult<T>| if r.failed() { T::infinity() } else { r.loss };
        key(a).partial_cmp(&key(b)).unwrap_or(std::cmp::Ordering::Equal)
    })
}
