use num_complex::Complex;

use crate::error::{Error, Result};
use crate::group::Group;
use crate::invariants::InvariantMoments;
use crate::scalar::Scalar;
use crate::signal::{idft, FourierSignal, Signal};

/// Smallest power-spectrum entry the phase chase accepts.
pub const MIN_POWER: f64 = 1e-9;

pub(crate) fn check_power<T: Scalar>(m: &InvariantMoments<T>) -> Result<()> {
    for l in 1..=m.n / 2 {
        if !(m.power[l] > T::of(MIN_POWER)) {
            return Err(Error::VanishingCoefficient(l));
        }
    }
    Ok(())
}

pub(crate) fn unit<T: Scalar>(z: Complex<T>) -> Complex<T> {
    let r = z.norm();
    if r > T::zero() {
        z / r
    } else {
        Complex::new(T::one(), T::zero())
    }
}

/// Indices `(p, q, r)` with `p + q + r = n`, all in `1..=n/2`, whose product
/// fixes the remaining shift freedom `f[ℓ] ↦ f[ℓ] e^{iℓφ}` up to an n-th root
/// of unity.
pub(crate) fn gauge_triple(n: usize) -> (usize, usize, usize) {
    let q = (n - 1) / 2;
    (1, q, n - 1 - q)
}

/// Assemble a real signal from half-spectrum phases and the target moduli.
pub(crate) fn assemble<T: Scalar>(m: &InvariantMoments<T>, half: &[Complex<T>]) -> Result<Signal<T>> {
    idft(&FourierSignal::from_half_spectrum(m.n, half)?)
}

/// Recover a signal from exact (or estimated) cyclic moments by chasing
/// phases `f[ℓ] = conj(B(1, ℓ-1) / (f[1] f[ℓ-1]))` up from `arg f[1] = 0`,
/// then rotating the result onto the orbit with a wrap-around triple.
///
/// The output equals the truth up to a cyclic shift when the moments are
/// exact and no coefficient with `1 ≤ ℓ ≤ n/2` vanishes.
pub fn frequency_marching_cyclic<T: Scalar>(m: &InvariantMoments<T>) -> Result<Signal<T>> {
    if m.group != Group::Cyclic {
        return Err(Error::GroupMismatch { expected: Group::Cyclic, found: m.group });
    }
    m.validate()?;
    check_power(m)?;
    let n = m.n;
    let k = n / 2;
    let mag = m.magnitudes();
    let zero = Complex::new(T::zero(), T::zero());
    let mut half = vec![zero; k + 1];
    half[0] = Complex::new(m.m1, T::zero());
    half[1] = Complex::new(mag[1], T::zero());
    for l in 2..=k {
        // B(1, l-1) = f1 f_{l-1} conj(f_l)
        let b = m.third_at(1, l - 1);
        half[l] = unit(b.conj() * half[1] * half[l - 1]) * mag[l];
    }
    if n >= 3 {
        let (p, q, r) = gauge_triple(n);
        let target = m.third_at(p, q);
        let model = half[p] * half[q] * half[r];
        let phi = (target * model.conj()).arg() / T::of_usize(n);
        for (l, c) in half.iter_mut().enumerate().skip(1) {
            *c *= Complex::from_polar(T::one(), phi * T::of_usize(l));
        }
    }
    if n.is_multiple_of(2) {
        // the Nyquist coefficient of a real signal is real
        half[k] = Complex::new(half[k].re.signum() * mag[k], T::zero());
    }
    assemble(m, &half)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::recovery::align_and_error;
    use crate::signal::random_unit_signal;

    #[test]
    fn exact_moments_give_a_shift_of_the_truth() {
        for n in 2..40 {
            let x = random_unit_signal::<f64>(n, n as u64).unwrap();
            let m = InvariantMoments::of_signal(&x, Group::Cyclic);
            let est = frequency_marching_cyclic(&m).unwrap();
            let (_, err) = align_and_error(&x, &est, Group::Cyclic).unwrap();
            assert!(err < 1e-9, "n={n} err={err}");
        }
    }

    #[test]
    fn vanishing_coefficient_is_reported() {
        let n = 8;
        let x = Signal::new((0..n).map(|i| (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos()).collect())
            .unwrap();
        let m = InvariantMoments::of_signal(&x, Group::Cyclic);
        let err = frequency_marching_cyclic(&m).unwrap_err();
        assert!(matches!(err, Error::VanishingCoefficient(2)));
        assert_eq!(err.to_string(), "vanishing Fourier coefficient at ℓ=2");
    }

    #[test]
    fn rejects_dihedral_moments() {
        let x = random_unit_signal::<f64>(6, 1).unwrap();
        let m = InvariantMoments::of_signal(&x, Group::Dihedral);
        assert!(matches!(frequency_marching_cyclic(&m), Err(Error::GroupMismatch { .. })));
    }
}
