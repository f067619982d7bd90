//! Real signals, their unitary DFT, and the group action in both domains.
//!
//! Conventions used throughout the crate:
//!
//! * `f[ℓ] = n^{-1/2} Σ_j x[j] exp(-2πi jℓ/n)` (unitary, so Parseval is exact
//!   and white noise of variance σ² stays white with variance σ² per coefficient);
//! * the rotation `r` is a left shift, `(r·x)[i] = x[i+1]`, which multiplies
//!   `f[ℓ]` by `exp(+2πiℓ/n)`;
//! * the reflection `s` maps `x[i] ↦ x[-i]` and `f[ℓ] ↦ f[-ℓ]`.

use std::path::Path;
use std::sync::Arc;

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::GroupElement;
use crate::scalar::Scalar;

/// A real signal of fixed length `n ≥ 2` with finite samples.
#[derive(Clone, Debug, PartialEq)]
pub struct Signal<T> {
    values: Vec<T>,
}

impl<T: Scalar> Signal<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::TooShort(values.len()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Signal { values })
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Signal::new(vec![T::zero(); n])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn norm(&self) -> T {
        self.values.iter().map(|&v| v * v).sum::<T>().sqrt()
    }

    pub fn mean(&self) -> T {
        self.values.iter().copied().sum::<T>() / T::of_usize(self.len())
    }

    pub fn scaled(&self, factor: T) -> Self {
        Signal { values: self.values.iter().map(|&v| v * factor).collect() }
    }

    /// Euclidean distance to another signal of the same length.
    pub fn distance(&self, other: &Signal<T>) -> T {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum::<T>()
            .sqrt()
    }

    pub fn cast<U: Scalar>(&self) -> Signal<U> {
        Signal { values: self.values.iter().map(|v| U::of(v.as_f64())).collect() }
    }
}

/// Fourier coefficients `f[0..n]`, optionally certified as the transform of a
/// real signal (`f[n-ℓ] = conj(f[ℓ])`).
#[derive(Clone, Debug, PartialEq)]
pub struct FourierSignal<T> {
    coeffs: Vec<Complex<T>>,
    real_origin: bool,
}

fn symmetry_tolerance<T: Scalar>() -> T {
    T::epsilon() * T::of(4096.0)
}

impl<T: Scalar> FourierSignal<T> {
    /// Arbitrary complex coefficients with no symmetry claim.
    pub fn new(coeffs: Vec<Complex<T>>) -> Result<Self> {
        if coeffs.len() < 2 {
            return Err(Error::TooShort(coeffs.len()));
        }
        Ok(FourierSignal { coeffs, real_origin: false })
    }

    /// Coefficients of a real signal; conjugate symmetry is checked to a
    /// relative tolerance of about 1e-12 (for `f64`).
    pub fn real_origin(coeffs: Vec<Complex<T>>) -> Result<Self> {
        let n = coeffs.len();
        if n < 2 {
            return Err(Error::TooShort(n));
        }
        let scale = coeffs.iter().map(|c| c.norm()).fold(T::zero(), T::max).max(T::one());
        let tol = symmetry_tolerance::<T>() * scale;
        for l in 0..n {
            let mirror = coeffs[(n - l) % n].conj();
            if (coeffs[l] - mirror).norm() > tol {
                return Err(Error::NotConjugateSymmetric(l));
            }
        }
        Ok(FourierSignal { coeffs, real_origin: true })
    }

    /// Build from coefficients for ℓ = 0..=⌊n/2⌋, filling the rest by
    /// conjugate symmetry. The DC (and, for even n, Nyquist) imaginary parts
    /// are dropped.
    pub fn from_half_spectrum(n: usize, half: &[Complex<T>]) -> Result<Self> {
        if n < 2 {
            return Err(Error::TooShort(n));
        }
        if half.len() != n / 2 + 1 {
            return Err(Error::DimensionMismatch { expected: n / 2 + 1, got: half.len() });
        }
        let mut coeffs = vec![Complex::new(T::zero(), T::zero()); n];
        for (l, &c) in half.iter().enumerate() {
            coeffs[l] = c;
            coeffs[(n - l) % n] = c.conj();
        }
        coeffs[0].im = T::zero();
        if n.is_multiple_of(2) {
            coeffs[n / 2].im = T::zero();
        }
        Ok(FourierSignal { coeffs, real_origin: true })
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn coeffs(&self) -> &[Complex<T>] {
        &self.coeffs
    }

    pub fn is_real_origin(&self) -> bool {
        self.real_origin
    }

    /// `f[ℓ]` with ℓ taken modulo n, so negative frequencies can be passed
    /// as `n - ℓ`.
    #[inline]
    pub fn at(&self, l: usize) -> Complex<T> {
        self.coeffs[l % self.coeffs.len()]
    }

    pub fn norm(&self) -> T {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<T>().sqrt()
    }

    /// Largest elementwise modulus of the difference.
    pub fn max_abs_diff(&self, other: &FourierSignal<T>) -> T {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).norm())
            .fold(T::zero(), T::max)
    }
}

/// A planned unitary DFT of a fixed length.
///
/// Construct once and reuse in loops; [`dft`] and [`idft`] plan on every call.
#[derive(Clone)]
pub struct Dft<T: Scalar> {
    n: usize,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
    scale: T,
}

impl<T: Scalar> Dft<T> {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Dft {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            scale: T::one() / T::of_usize(n).sqrt(),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Unitary forward transform of a real vector.
    pub fn forward_real(&self, x: &[T]) -> Vec<Complex<T>> {
        let mut buf: Vec<Complex<T>> = x.iter().map(|&v| Complex::new(v, T::zero())).collect();
        self.forward_in_place(&mut buf);
        buf
    }

    pub fn forward_in_place(&self, buf: &mut [Complex<T>]) {
        debug_assert_eq!(buf.len(), self.n);
        self.forward.process(buf);
        for c in buf.iter_mut() {
            *c *= self.scale;
        }
    }

    pub fn inverse_in_place(&self, buf: &mut [Complex<T>]) {
        debug_assert_eq!(buf.len(), self.n);
        self.inverse.process(buf);
        for c in buf.iter_mut() {
            *c *= self.scale;
        }
    }

    pub fn transform(&self, x: &Signal<T>) -> FourierSignal<T> {
        FourierSignal { coeffs: self.forward_real(x.values()), real_origin: true }
    }

    /// Inverse transform, keeping the real part.
    pub fn invert(&self, f: &FourierSignal<T>) -> Result<Signal<T>> {
        let mut buf = f.coeffs.clone();
        self.inverse_in_place(&mut buf);
        Signal::new(buf.into_iter().map(|c| c.re).collect())
    }
}

/// Unitary DFT of a real signal.
pub fn dft<T: Scalar>(x: &Signal<T>) -> FourierSignal<T> {
    Dft::new(x.len()).transform(x)
}

/// Inverse unitary DFT; the imaginary part of the result is discarded, which
/// is exact for real-origin input.
pub fn idft<T: Scalar>(f: &FourierSignal<T>) -> Result<Signal<T>> {
    Dft::new(f.len()).invert(f)
}

/// Inverse unitary DFT of arbitrary complex coefficients.
pub fn idft_complex<T: Scalar>(f: &[Complex<T>]) -> Vec<Complex<T>> {
    let mut buf = f.to_vec();
    Dft::new(f.len()).inverse_in_place(&mut buf);
    buf
}

/// `g·x`: reflect first (if set), then rotate left by `g.rot`.
pub fn apply_group<T: Scalar>(g: GroupElement, x: &Signal<T>) -> Signal<T> {
    let n = x.len();
    let v = x.values();
    Signal { values: (0..n).map(|i| v[g.source_index(i, n)]).collect() }
}

/// `g·f` in Fourier coordinates: `ℓ ↦ -ℓ` for the reflection, then
/// multiplication by `exp(2πi·rot·ℓ/n)`.
pub fn apply_group_fourier<T: Scalar>(g: GroupElement, f: &FourierSignal<T>) -> FourierSignal<T> {
    let n = f.len();
    let coeffs = (0..n)
        .map(|l| {
            let src = if g.refl { (n - l) % n } else { l };
            f.coeffs[src] * unit_phase::<T>(g.rot * l, n)
        })
        .collect();
    FourierSignal { coeffs, real_origin: f.real_origin }
}

/// `exp(2πi k/n)` with the exponent reduced modulo n first.
#[inline]
pub(crate) fn unit_phase<T: Scalar>(k: usize, n: usize) -> Complex<T> {
    let angle = T::TAU() * T::of_usize(k % n) / T::of_usize(n);
    Complex::new(angle.cos(), angle.sin())
}

/// Gaussian vector scaled to unit norm, deterministic in `seed`.
///
/// Samples are drawn in `f64` regardless of `T`, so every scalar type sees the
/// same stream.
pub fn random_unit_signal<T: Scalar>(n: usize, seed: u64) -> Result<Signal<T>> {
    if n < 2 {
        return Err(Error::TooShort(n));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let draw: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let norm = draw.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            return Signal::new(draw.into_iter().map(|v| T::of(v / norm)).collect());
        }
    }
}

#[derive(Serialize, Deserialize)]
struct SampleRow {
    index: usize,
    value: f64,
}

#[derive(Serialize, Deserialize)]
struct CoeffRow {
    index: usize,
    re: f64,
    im: f64,
}

fn check_indices(path: &Path, indices: impl Iterator<Item = usize>) -> Result<()> {
    for (expected, got) in indices.enumerate() {
        if expected != got {
            return Err(Error::Malformed(format!(
                "{}: row {expected} has index {got}",
                path.display()
            )));
        }
    }
    Ok(())
}

/// Read a signal from CSV with header `index,value`.
pub fn read_signal_csv<T: Scalar>(path: impl AsRef<Path>) -> Result<Signal<T>> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let rows: Vec<SampleRow> = reader
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::csv(path, e))?;
    check_indices(path, rows.iter().map(|r| r.index))?;
    Signal::new(rows.into_iter().map(|r| T::of(r.value)).collect())
}

pub fn write_signal_csv<T: Scalar>(path: impl AsRef<Path>, x: &Signal<T>) -> Result<()> {
    let path = path.as_ref();
    let mut writer = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    for (index, v) in x.values().iter().enumerate() {
        writer
            .serialize(SampleRow { index, value: v.as_f64() })
            .map_err(|e| Error::csv(path, e))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

/// Read Fourier coefficients from CSV with header `index,re,im`. The result
/// is certified real-origin only if the coefficients are conjugate symmetric.
pub fn read_fourier_csv<T: Scalar>(path: impl AsRef<Path>) -> Result<FourierSignal<T>> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let rows: Vec<CoeffRow> = reader
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::csv(path, e))?;
    check_indices(path, rows.iter().map(|r| r.index))?;
    let coeffs: Vec<_> = rows.into_iter().map(|r| Complex::new(T::of(r.re), T::of(r.im))).collect();
    FourierSignal::real_origin(coeffs.clone()).or_else(|_| FourierSignal::new(coeffs))
}

pub fn write_fourier_csv<T: Scalar>(path: impl AsRef<Path>, f: &FourierSignal<T>) -> Result<()> {
    let path = path.as_ref();
    let mut writer = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    for (index, c) in f.coeffs().iter().enumerate() {
        writer
            .serialize(CoeffRow { index, re: c.re.as_f64(), im: c.im.as_f64() })
            .map_err(|e| Error::csv(path, e))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::Group;
    use proptest::prelude::*;

    /// O(n²) direct summation, independent of rustfft.
    fn direct_dft(x: &[f64]) -> Vec<Complex<f64>> {
        let n = x.len();
        (0..n)
            .map(|l| {
                let mut acc = Complex::new(0.0, 0.0);
                for (j, &v) in x.iter().enumerate() {
                    let a = -std::f64::consts::TAU * ((j * l) % n) as f64 / n as f64;
                    acc += Complex::new(a.cos(), a.sin()) * v;
                }
                acc / (n as f64).sqrt()
            })
            .collect()
    }

    fn sig(v: &[f64]) -> Signal<f64> {
        Signal::new(v.to_vec()).unwrap()
    }

    #[test]
    fn delta_has_flat_spectrum() {
        let f = dft(&sig(&[1.0, 0.0, 0.0, 0.0]));
        for c in f.coeffs() {
            assert!((c - Complex::new(0.5, 0.0)).norm() < 1e-15);
        }
        assert!(f.is_real_origin());
    }

    #[test]
    fn constant_signal_is_dc_only() {
        let c = 0.7;
        let f = dft(&sig(&[c; 4]));
        assert!((f.at(0) - Complex::new(2.0 * c, 0.0)).norm() < 1e-15);
        for l in 1..4 {
            assert!(f.at(l).norm() < 1e-15);
        }
    }

    #[test]
    fn matches_direct_summation() {
        let x = random_unit_signal::<f64>(17, 3).unwrap();
        let fast = dft(&x);
        let slow = direct_dft(x.values());
        let err: f64 = fast.coeffs().iter().zip(&slow).map(|(a, b)| (a - b).norm_sqr()).sum();
        let scale: f64 = slow.iter().map(|c| c.norm_sqr()).sum();
        assert!((err / scale).sqrt() < 1e-12);
    }

    #[test]
    fn left_rotation_and_reflection() {
        let x = sig(&[1.0, 2.0, 3.0, 4.0]);
        let r = apply_group(GroupElement { rot: 1, refl: false }, &x);
        assert_eq!(r.values(), &[2.0, 3.0, 4.0, 1.0]);
        let s = apply_group(GroupElement::reflection(), &x);
        assert_eq!(s.values(), &[1.0, 4.0, 3.0, 2.0]);
        let rs = apply_group(GroupElement { rot: 1, refl: true }, &x);
        assert_eq!(rs.values(), apply_group(GroupElement::rotation(1, 4), &s).values());
    }

    #[test]
    fn rotation_phase_on_single_frequency() {
        let n = 6;
        let mut coeffs = vec![Complex::new(0.0, 0.0); n];
        coeffs[1] = Complex::new(0.3, -0.4);
        let f = FourierSignal::new(coeffs).unwrap();
        for m in 0..n {
            let g = apply_group_fourier(GroupElement::rotation(m, n), &f);
            let expected = f.at(1) * unit_phase::<f64>(m, n);
            assert!((g.at(1) - expected).norm() < 1e-15);
            assert!((g.at(1).norm() - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn reflection_conjugates_real_origin() {
        let f = dft(&random_unit_signal::<f64>(9, 1).unwrap());
        let g = apply_group_fourier(GroupElement::reflection(), &f);
        for l in 0..9 {
            assert!((g.at(l) - f.at(l).conj()).norm() < 1e-15);
        }
        assert!(g.is_real_origin());
    }

    #[test]
    fn srs_is_inverse_rotation_in_fourier_domain() {
        let n = 11;
        let f = FourierSignal::new(
            (0..n).map(|l| Complex::new((l as f64).sin(), (3.0 * l as f64).cos())).collect(),
        )
        .unwrap();
        let s = GroupElement::reflection();
        let r = GroupElement::rotation(1, n);
        let srs = apply_group_fourier(s, &apply_group_fourier(r, &apply_group_fourier(s, &f)));
        let rinv = apply_group_fourier(r.inverse(n), &f);
        assert!(srs.max_abs_diff(&rinv) / f.norm() < 1e-12);
    }

    #[test]
    fn random_unit_signal_properties() {
        let a = random_unit_signal::<f64>(33, 10).unwrap();
        let b = random_unit_signal::<f64>(33, 10).unwrap();
        let c = random_unit_signal::<f64>(33, 11).unwrap();
        assert!((a.norm() - 1.0).abs() < 1e-12);
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(random_unit_signal::<f64>(1, 0).is_err());
    }

    #[test]
    fn single_precision_round_trip() {
        let x = random_unit_signal::<f32>(16, 5).unwrap();
        let back = idft(&dft(&x)).unwrap();
        assert!(x.distance(&back) < 1e-6);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(Signal::<f64>::new(vec![1.0]), Err(Error::TooShort(1))));
        assert!(matches!(Signal::new(vec![1.0, f64::NAN]), Err(Error::NonFinite(1))));
        let asym = vec![Complex::new(1.0, 0.0), Complex::new(1.0, 1.0), Complex::new(1.0, 1.0)];
        assert!(FourierSignal::real_origin(asym).is_err());
    }

    #[test]
    fn half_spectrum_is_conjugate_symmetric() {
        let half = [Complex::new(1.0, 0.5), Complex::new(0.0, 1.0), Complex::new(2.0, -1.0)];
        let f = FourierSignal::from_half_spectrum(4, &half).unwrap();
        assert!(FourierSignal::real_origin(f.coeffs().to_vec()).is_ok());
        assert_eq!(f.at(3), Complex::new(0.0, -1.0));
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let x = random_unit_signal::<f64>(12, 4).unwrap();
        let p = dir.path().join("x.csv");
        write_signal_csv(&p, &x).unwrap();
        assert_eq!(read_signal_csv::<f64>(&p).unwrap(), x);
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("index,value\n0,"));

        let f = dft(&x);
        let q = dir.path().join("f.csv");
        write_fourier_csv(&q, &f).unwrap();
        let back = read_fourier_csv::<f64>(&q).unwrap();
        assert!(back.is_real_origin());
        assert_eq!(back.coeffs(), f.coeffs());
    }

    #[test]
    fn csv_rejects_gaps() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        std::fs::write(&p, "index,value\n0,1.0\n2,3.0\n").unwrap();
        assert!(matches!(read_signal_csv::<f64>(&p), Err(Error::Malformed(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn round_trip_and_parseval(n in 2usize..=256, seed in any::<u64>()) {
            let x = random_unit_signal::<f64>(n, seed).unwrap().scaled(3.0);
            let f = dft(&x);
            prop_assert!((x.norm() - f.norm()).abs() < 1e-12 * x.norm());
            let back = idft(&f).unwrap();
            prop_assert!(x.distance(&back) < 1e-12 * x.norm());
        }

        #[test]
        fn action_is_a_homomorphism(n in 2usize..40, a in 0usize..80, b in 0usize..80,
                                    ra in any::<bool>(), rb in any::<bool>(), seed in any::<u64>()) {
            let g = GroupElement { rot: a % n, refl: ra };
            let h = GroupElement { rot: b % n, refl: rb };
            let x = random_unit_signal::<f64>(n, seed).unwrap();
            let lhs = apply_group(g.compose(h, n), &x);
            let rhs = apply_group(g, &apply_group(h, &x));
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn time_and_fourier_actions_commute_with_dft(n in 3usize..=64, seed in any::<u64>()) {
            let x = random_unit_signal::<f64>(n, seed).unwrap();
            let f = dft(&x);
            for g in Group::Dihedral.elements(n) {
                let lhs = dft(&apply_group(g, &x));
                let rhs = apply_group_fourier(g, &f);
                prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
            }
        }
    }
}
