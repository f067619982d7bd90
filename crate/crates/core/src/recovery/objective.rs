use num_complex::Complex;

use crate::error::{Error, Result};
use crate::group::Group;
use crate::invariants::InvariantMoments;
use crate::scalar::Scalar;
use crate::signal::{Dft, Signal};

/// Nonnegative weights of the degree 1, 2 and 3 residuals.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Weights<T> {
    pub m1: T,
    pub power: T,
    pub third: T,
}

impl<T: Scalar> Weights<T> {
    pub fn all() -> Self {
        Weights { m1: T::one(), power: T::one(), third: T::one() }
    }

    pub fn third_only() -> Self {
        Weights { m1: T::zero(), power: T::zero(), third: T::one() }
    }
}

/// Least-squares misfit between the invariants of a candidate signal and a
/// target, differentiable in the time-domain samples.
///
/// All residuals are written as holomorphic polynomials in the Fourier
/// coefficients (or `|f|²`), so with `G[ℓ] = ∂L/∂f[ℓ]` (Wirtinger) the
/// gradient for real `x` is `2 Re(F G)` with `F` the unitary DFT.
pub struct Objective<'a, T: Scalar> {
    target: &'a InvariantMoments<T>,
    weights: Weights<T>,
    dft: Dft<T>,
    triples: Vec<(usize, usize, usize)>,
}

impl<'a, T: Scalar> Objective<'a, T> {
    pub fn new(target: &'a InvariantMoments<T>, weights: Weights<T>) -> Self {
        let n = target.n;
        let triples = target
            .third
            .iter()
            .map(|e| (e.k1, e.k2, (2 * n - e.k1 - e.k2) % n))
            .collect();
        Objective { target, weights, dft: Dft::new(n), triples }
    }

    pub fn len(&self) -> usize {
        self.target.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Loss at `x`; the gradient is written into `grad`.
    pub fn eval(&self, x: &[T], grad: &mut [T]) -> T {
        let n = self.target.n;
        let f = self.dft.forward_real(x);
        let zero = Complex::new(T::zero(), T::zero());
        let mut g = vec![zero; n];
        let w = self.weights;
        let two = T::of(2.0);
        let mut loss = T::zero();

        if w.m1 > T::zero() {
            let r = f[0] - Complex::new(self.target.m1, T::zero());
            loss += w.m1 * r.norm_sqr();
            g[0] += r.conj() * w.m1;
        }
        if w.power > T::zero() {
            for (l, (c, &p)) in f.iter().zip(&self.target.power).enumerate() {
                let rho = c.norm_sqr() - p;
                loss += w.power * rho * rho;
                g[l] += c.conj() * (w.power * two * rho);
            }
        }
        if w.third > T::zero() {
            let half = T::of(0.5);
            for (&(a, b, c), e) in self.triples.iter().zip(&self.target.third) {
                match self.target.group {
                    Group::Cyclic => {
                        let r = f[a] * f[b] * f[c] - e.value;
                        loss += w.third * r.norm_sqr();
                        let rc = r.conj() * w.third;
                        g[a] += rc * f[b] * f[c];
                        g[b] += rc * f[a] * f[c];
                        g[c] += rc * f[a] * f[b];
                    }
                    Group::Dihedral => {
                        let (na, nb, nc) = ((n - a) % n, (n - b) % n, (n - c) % n);
                        let r = (f[a] * f[b] * f[c] + f[na] * f[nb] * f[nc]) * half - e.value;
                        loss += w.third * r.norm_sqr();
                        let rc = r.conj() * (w.third * half);
                        g[a] += rc * f[b] * f[c];
                        g[b] += rc * f[a] * f[c];
                        g[c] += rc * f[a] * f[b];
                        g[na] += rc * f[nb] * f[nc];
                        g[nb] += rc * f[na] * f[nc];
                        g[nc] += rc * f[na] * f[nb];
                    }
                }
            }
        }
        self.dft.forward_in_place(&mut g);
        for (out, v) in grad.iter_mut().zip(&g) {
            *out = two * v.re;
        }
        loss
    }
}

/// Loss and gradient of the weighted moment misfit at `x`.
pub fn loss_and_gradient<T: Scalar>(
    x: &Signal<T>,
    target: &InvariantMoments<T>,
    weights: Weights<T>,
) -> Result<(T, Vec<T>)> {
    if x.len() != target.n {
        return Err(Error::DimensionMismatch { expected: target.n, got: x.len() });
    }
    let obj = Objective::new(target, weights);
    let mut grad = vec![T::zero(); x.len()];
    let loss = obj.eval(x.values(), &mut grad);
    Ok((loss, grad))
}
