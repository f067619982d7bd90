//! Dense group-averaged moment tensors. Cost is O(|G|·n^d), so these are
//! oracles for tests and small demonstrations only.

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::group::Group;
use crate::scalar::Scalar;
use crate::signal::{unit_phase, Signal};

/// Largest signal length the dense oracles accept.
pub const MAX_ORACLE_N: usize = 64;

/// Dense order-`d` tensor over `n` coordinates, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<S> {
    pub n: usize,
    pub order: usize,
    pub data: Vec<S>,
}

impl<S: Copy> Tensor<S> {
    fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.order);
        idx.iter().fold(0, |acc, &i| acc * self.n + i)
    }

    pub fn get(&self, idx: &[usize]) -> S {
        self.data[self.offset(idx)]
    }

    pub fn map<U>(&self, f: impl Fn(S) -> U) -> Tensor<U> {
        Tensor { n: self.n, order: self.order, data: self.data.iter().map(|&v| f(v)).collect() }
    }
}

fn check(n: usize, d: usize) -> Result<()> {
    if !(1..=3).contains(&d) {
        return Err(Error::BadOrder(d));
    }
    if n > MAX_ORACLE_N {
        return Err(Error::OracleTooLarge { n, max: MAX_ORACLE_N });
    }
    Ok(())
}

fn group_average<T: Scalar>(
    x: &[Complex<T>],
    d: usize,
    group: Group,
    conjugate_last: bool,
) -> Result<Tensor<Complex<T>>> {
    let n = x.len();
    check(n, d)?;
    let mut data = vec![Complex::zero(); n.pow(d as u32)];
    let mut gx = vec![Complex::zero(); n];
    for g in group.elements(n) {
        for (i, v) in gx.iter_mut().enumerate() {
            *v = x[g.source_index(i, n)];
        }
        let last = |k: usize| if conjugate_last { gx[k].conj() } else { gx[k] };
        match d {
            1 => {
                for (k, slot) in data.iter_mut().enumerate() {
                    *slot += last(k);
                }
            }
            2 => {
                for i in 0..n {
                    for k in 0..n {
                        data[i * n + k] += gx[i] * last(k);
                    }
                }
            }
            _ => {
                for i in 0..n {
                    for j in 0..n {
                        let ij = gx[i] * gx[j];
                        let row = (i * n + j) * n;
                        for k in 0..n {
                            data[row + k] += ij * last(k);
                        }
                    }
                }
            }
        }
    }
    let scale = T::one() / T::of_usize(group.order(n));
    for v in data.iter_mut() {
        *v *= scale;
    }
    Ok(Tensor { n, order: d, data })
}

/// `T_d(x) = (1/|G|) Σ_g (g·x)^{⊗d}` for complex `x`.
pub fn brute_force_moment_complex<T: Scalar>(
    x: &[Complex<T>],
    d: usize,
    group: Group,
) -> Result<Tensor<Complex<T>>> {
    group_average(x, d, group, false)
}

/// `M_d(x) = (1/|G|) Σ_g (g·x)^{⊗(d-1)} ⊗ conj(g·x)` for complex `x`.
pub fn unitary_moment_complex<T: Scalar>(
    x: &[Complex<T>],
    d: usize,
    group: Group,
) -> Result<Tensor<Complex<T>>> {
    group_average(x, d, group, true)
}

fn complexify<T: Scalar>(x: &Signal<T>) -> Vec<Complex<T>> {
    x.values().iter().map(|&v| Complex::new(v, T::zero())).collect()
}

/// Polynomial invariant tensor of degree `d ≤ 3` in time coordinates.
pub fn brute_force_moment<T: Scalar>(x: &Signal<T>, d: usize, group: Group) -> Result<Tensor<T>> {
    Ok(brute_force_moment_complex(&complexify(x), d, group)?.map(|c| c.re))
}

/// Unitary invariant tensor of degree `d ≤ 3`; equal to
/// [`brute_force_moment`] on real signals.
pub fn unitary_moment<T: Scalar>(x: &Signal<T>, d: usize, group: Group) -> Result<Tensor<T>> {
    Ok(unitary_moment_complex(&complexify(x), d, group)?.map(|c| c.re))
}

/// Change of basis to Fourier coordinates: the unitary DFT matrix is applied
/// along every mode, `Tf[a,b,..] = Σ T[i,j,..] F[a,i] F[b,j] ..`.
pub fn fourier_coefficients<T: Scalar>(t: &Tensor<Complex<T>>) -> Tensor<Complex<T>> {
    let n = t.n;
    let scale = T::one() / T::of_usize(n).sqrt();
    let dft: Vec<Complex<T>> = (0..n * n)
        .map(|ai| unit_phase::<T>(n - (ai / n * (ai % n)) % n, n) * scale)
        .collect();
    let mut data = t.data.clone();
    let total = data.len();
    // mode m has stride n^(order-1-m)
    for m in 0..t.order {
        let stride = n.pow((t.order - 1 - m) as u32);
        let mut out = vec![Complex::zero(); total];
        for (pos, slot) in out.iter_mut().enumerate() {
            let a = (pos / stride) % n;
            let base = pos - a * stride;
            let mut acc = Complex::zero();
            for i in 0..n {
                acc += data[base + i * stride] * dft[a * n + i];
            }
            *slot = acc;
        }
        data = out;
    }
    Tensor { n, order: t.order, data }
}
