//! Limited-memory BFGS with backtracking Armijo line search.

use std::collections::VecDeque;

use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LbfgsParams<T> {
    pub memory: usize,
    pub max_iters: usize,
    pub grad_tol: T,
    /// Sufficient-decrease constant `c` in `f(x + αd) ≤ f(x) + c α ∇f·d`.
    pub armijo: T,
    pub contraction: T,
    pub initial_step: T,
    pub max_backtracks: usize,
}

impl<T: Scalar> Default for LbfgsParams<T> {
    fn default() -> Self {
        LbfgsParams {
            memory: 10,
            max_iters: 5000,
            grad_tol: T::of(1e-10),
            armijo: T::of(1e-4),
            contraction: T::of(0.5),
            initial_step: T::one(),
            max_backtracks: 60,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    MaxIterations,
    /// No step along the search direction satisfied the Armijo condition.
    Stalled,
    /// The objective produced a non-finite value at the starting point.
    Diverged,
}

#[derive(Clone, Debug)]
pub struct Outcome<T> {
    pub x: Vec<T>,
    pub loss: T,
    pub grad_norm: T,
    pub iterations: usize,
    /// Loss at the start and after every accepted step.
    pub loss_trace: Vec<T>,
    pub status: Status,
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Minimize `f`, which returns the value at its first argument and writes the
/// gradient into the second.
pub fn minimize<T, F>(mut f: F, x0: Vec<T>, params: &LbfgsParams<T>) -> Outcome<T>
where
    T: Scalar,
    F: FnMut(&[T], &mut [T]) -> T,
{
    let dim = x0.len();
    let mut x = x0;
    let mut g = vec![T::zero(); dim];
    let mut fx = f(&x, &mut g);
    let mut trace = vec![fx];
    if !fx.is_finite() || g.iter().any(|v| !v.is_finite()) {
        let grad_norm = dot(&g, &g).sqrt();
        return Outcome { x, loss: fx, grad_norm, iterations: 0, loss_trace: trace, status: Status::Diverged };
    }

    // (s, y, 1/(s·y))
    let mut history: VecDeque<(Vec<T>, Vec<T>, T)> = VecDeque::with_capacity(params.memory);
    let mut alpha = vec![T::zero(); params.memory];
    let mut d = vec![T::zero(); dim];
    let mut x_new = vec![T::zero(); dim];
    let mut g_new = vec![T::zero(); dim];
    let mut status = Status::MaxIterations;
    let mut iterations = 0;

    while iterations < params.max_iters {
        let gnorm = dot(&g, &g).sqrt();
        if gnorm < params.grad_tol {
            status = Status::Converged;
            break;
        }

        // two-loop recursion: d = -H g
        d.copy_from_slice(&g);
        for (i, (s, y, rho)) in history.iter().enumerate().rev() {
            alpha[i] = *rho * dot(s, &d);
            for (dj, &yj) in d.iter_mut().zip(y) {
                *dj -= alpha[i] * yj;
            }
        }
        if let Some((s, y, _)) = history.back() {
            let gamma = dot(s, y) / dot(y, y);
            for dj in d.iter_mut() {
                *dj *= gamma;
            }
        }
        for (i, (s, y, rho)) in history.iter().enumerate() {
            let beta = *rho * dot(y, &d);
            for (dj, &sj) in d.iter_mut().zip(s) {
                *dj += (alpha[i] - beta) * sj;
            }
        }
        for dj in d.iter_mut() {
            *dj = -*dj;
        }
        let mut slope = dot(&g, &d);
        if !(slope < T::zero()) {
            history.clear();
            for (dj, &gj) in d.iter_mut().zip(&g) {
                *dj = -gj;
            }
            slope = -gnorm * gnorm;
        }

        let mut step = if history.is_empty() {
            params.initial_step.min(T::one() / gnorm)
        } else {
            params.initial_step
        };
        let mut accepted = false;
        for _ in 0..=params.max_backtracks {
            for ((xn, &xi), &di) in x_new.iter_mut().zip(&x).zip(&d) {
                *xn = xi + step * di;
            }
            let f_new = f(&x_new, &mut g_new);
            if f_new.is_finite() && f_new <= fx + params.armijo * step * slope {
                accepted = true;
                let s: Vec<T> = x_new.iter().zip(&x).map(|(&a, &b)| a - b).collect();
                let y: Vec<T> = g_new.iter().zip(&g).map(|(&a, &b)| a - b).collect();
                let sy = dot(&s, &y);
                if sy > T::epsilon() * dot(&y, &y) {
                    if history.len() == params.memory {
                        history.pop_front();
                    }
                    history.push_back((s, y, T::one() / sy));
                }
                std::mem::swap(&mut x, &mut x_new);
                std::mem::swap(&mut g, &mut g_new);
                fx = f_new;
                trace.push(fx);
                break;
            }
            step *= params.contraction;
        }
        iterations += 1;
        if !accepted {
            status = Status::Stalled;
            break;
        }
    }
    if status == Status::MaxIterations && dot(&g, &g).sqrt() < params.grad_tol {
        status = Status::Converged;
    }
    let grad_norm = dot(&g, &g).sqrt();
    Outcome { x, loss: fx, grad_norm, iterations, loss_trace: trace, status }
}
