//! Degree 1, 2 and 3 invariants of Z_n and D_n in Fourier coordinates.
//!
//! Every third-order entry is attached to a triple `(k1, k2, k3)` with
//! `k1 + k2 + k3 ≡ 0 (mod n)`. Permuting the triple never changes the value for
//! a real signal, and for the dihedral group neither does negating it, so each
//! group gets a canonical list of representatives (see [`distinct_indices`]).

mod tensor;

use std::path::Path;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

pub use tensor::{
    brute_force_moment, brute_force_moment_complex, fourier_coefficients, unitary_moment,
    unitary_moment_complex, Tensor, MAX_ORACLE_N,
};

use crate::error::{Error, Result};
use crate::group::Group;
use crate::scalar::Scalar;
use crate::signal::{Dft, FourierSignal, Signal};

/// Moduli at or below this are treated as zero by the phase accessors.
pub const ZERO_MODULUS: f64 = 1e-9;

fn sorted3(a: usize, b: usize, c: usize) -> [usize; 3] {
    let mut t = [a, b, c];
    t.sort_unstable();
    t
}

/// Canonical sorted triple for the entry containing `(a, b, -(a+b))`.
pub fn canonical_triple(group: Group, n: usize, a: usize, b: usize) -> [usize; 3] {
    let (a, b) = (a % n, b % n);
    let c = (2 * n - a - b) % n;
    let t = sorted3(a, b, c);
    match group {
        Group::Cyclic => t,
        Group::Dihedral => {
            let neg = sorted3((n - a) % n, (n - b) % n, (n - c) % n);
            t.min(neg)
        }
    }
}

/// Canonical `(k1, k2)` key of the entry containing `(a, b, -(a+b))`.
pub fn canonical_key(group: Group, n: usize, a: usize, b: usize) -> (usize, usize) {
    let t = canonical_triple(group, n, a, b);
    (t[0], t[1])
}

/// One `(k1, k2)` per distinct third-order equation, lexicographically sorted.
///
/// Cyclic: one sorted triple `k1 ≤ k2 ≤ k3` per multiset with zero sum.
/// Dihedral: additionally one per pair `{t, -t}`, keeping the smaller sorted
/// triple. The third index is always `k3 = -(k1 + k2) mod n`.
pub fn distinct_indices(group: Group, n: usize) -> Result<Vec<(usize, usize)>> {
    if n < 2 {
        return Err(Error::TooShort(n));
    }
    let mut out = Vec::new();
    for k1 in 0..n {
        for k2 in k1..n {
            let k3 = (2 * n - k1 - k2) % n;
            if k3 < k2 {
                continue;
            }
            if canonical_triple(group, n, k1, k2) == [k1, k2, k3] {
                out.push((k1, k2));
            }
        }
    }
    Ok(out)
}

/// `|f[ℓ]|²` for every ℓ.
pub fn power_spectrum<T: Scalar>(f: &FourierSignal<T>) -> Vec<T> {
    f.coeffs().iter().map(|c| c.norm_sqr()).collect()
}

fn third_index(n: usize, k1: usize, k2: usize) -> usize {
    (2 * n - k1 - k2) % n
}

/// Cyclic bispectrum `f[k1] f[k2] conj(f[k1+k2])` over the canonical cyclic set.
pub fn cyclic_bispectrum<T: Scalar>(f: &FourierSignal<T>) -> Vec<ThirdEntry<T>> {
    let n = f.len();
    distinct_indices(Group::Cyclic, n)
        .expect("FourierSignal has length ≥ 2")
        .into_iter()
        .map(|(k1, k2)| ThirdEntry { k1, k2, value: f.at(k1) * f.at(k2) * f.at(k1 + k2).conj() })
        .collect()
}

/// Dihedral third moment `½ (f[k1]f[k2]f[k3] + f[-k1]f[-k2]f[-k3])` over the
/// canonical dihedral set. This is the exact group average, so it is half the
/// binomial `P + conj(P)` for real signals.
pub fn dihedral_third_moment<T: Scalar>(f: &FourierSignal<T>) -> Vec<ThirdEntry<T>> {
    let n = f.len();
    let half = T::of(0.5);
    distinct_indices(Group::Dihedral, n)
        .expect("FourierSignal has length ≥ 2")
        .into_iter()
        .map(|(k1, k2)| {
            let k3 = third_index(n, k1, k2);
            let p = f.at(k1) * f.at(k2) * f.at(k3);
            let q = f.at(n - k1) * f.at(n - k2) * f.at(n - k3);
            ThirdEntry { k1, k2, value: (p + q) * half }
        })
        .collect()
}

/// `a_{i,j} = exp(ι(θ_i + θ_j − θ_{i+j}))`, or `None` if one of the three
/// moduli is at most [`ZERO_MODULUS`].
pub fn phase_triple<T: Scalar>(f: &FourierSignal<T>, i: usize, j: usize) -> Option<Complex<T>> {
    let p = f.at(i) * f.at(j) * f.at(i + j).conj();
    let tol = T::of(ZERO_MODULUS);
    let nonzero = [i, j, i + j].iter().all(|&l| f.at(l).norm() > tol);
    nonzero.then(|| p / p.norm())
}

/// `α_{i,j} = cos(θ_i + θ_j − θ_{i+j})`.
pub fn phase_cosine<T: Scalar>(f: &FourierSignal<T>, i: usize, j: usize) -> Option<T> {
    phase_triple(f, i, j).map(|a| a.re)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThirdEntry<T> {
    pub k1: usize,
    pub k2: usize,
    pub value: Complex<T>,
}

/// Low-degree invariants of a real signal for one group.
///
/// `m1` is `f[0]` (√n times the sample mean), `power[ℓ] = |f[ℓ]|²`, and
/// `third` follows the order of [`distinct_indices`]. `sigma_used` records the
/// noise level the estimates were debiased for; exact moments carry 0.
#[derive(Clone, Debug, PartialEq)]
pub struct InvariantMoments<T> {
    pub group: Group,
    pub n: usize,
    pub sigma_used: T,
    pub m1: T,
    pub power: Vec<T>,
    pub third: Vec<ThirdEntry<T>>,
}

impl<T: Scalar> InvariantMoments<T> {
    pub fn from_fourier(f: &FourierSignal<T>, group: Group) -> Self {
        let third = match group {
            Group::Cyclic => cyclic_bispectrum(f),
            Group::Dihedral => dihedral_third_moment(f),
        };
        InvariantMoments {
            group,
            n: f.len(),
            sigma_used: T::zero(),
            m1: f.at(0).re,
            power: power_spectrum(f),
            third,
        }
    }

    /// Exact invariants of `x`.
    pub fn of_signal(x: &Signal<T>, group: Group) -> Self {
        Self::from_fourier(&Dft::new(x.len()).transform(x), group)
    }

    /// Position of the entry holding `(a, b, -(a+b))`.
    pub fn position(&self, a: usize, b: usize) -> Option<usize> {
        let key = canonical_key(self.group, self.n, a, b);
        self.third.binary_search_by(|e| (e.k1, e.k2).cmp(&key)).ok()
    }

    /// Value attached to `(a, b, -(a+b))`. For cyclic moments this is
    /// `f[a] f[b] f[-(a+b)]`; for dihedral ones its real part.
    pub fn third_at(&self, a: usize, b: usize) -> Complex<T> {
        let i = self.position(a, b).expect("complete canonical index set");
        self.third[i].value
    }

    /// Coefficient moduli `sqrt(power)`.
    pub fn magnitudes(&self) -> Vec<T> {
        self.power.iter().map(|&p| p.max(T::zero()).sqrt()).collect()
    }

    /// Check internal consistency: lengths and the canonical key set.
    pub fn validate(&self) -> Result<()> {
        if self.power.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: self.power.len() });
        }
        let keys = distinct_indices(self.group, self.n)?;
        if keys.len() != self.third.len() {
            return Err(Error::Malformed(format!(
                "expected {} third-order entries for {} n={}, found {}",
                keys.len(),
                self.group,
                self.n,
                self.third.len()
            )));
        }
        for (k, e) in keys.iter().zip(&self.third) {
            if *k != (e.k1, e.k2) {
                return Err(Error::Malformed(format!(
                    "third-order entry ({}, {}) is not canonical (expected {:?})",
                    e.k1, e.k2, k
                )));
            }
        }
        let finite = self.m1.is_finite()
            && self.power.iter().all(|p| p.is_finite())
            && self.third.iter().all(|e| e.value.re.is_finite() && e.value.im.is_finite());
        if !finite {
            return Err(Error::Malformed("non-finite moment".into()));
        }
        Ok(())
    }

    /// Largest absolute difference over all entries.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!((self.group, self.n), (other.group, other.n));
        let mut d = (self.m1 - other.m1).abs();
        for (a, b) in self.power.iter().zip(&other.power) {
            d = d.max((*a - *b).abs());
        }
        for (a, b) in self.third.iter().zip(&other.third) {
            d = d.max((a.value - b.value).norm());
        }
        d
    }

    pub fn to_record(&self) -> MomentsRecord {
        MomentsRecord {
            group: self.group,
            n: self.n,
            sigma_used: self.sigma_used.as_f64(),
            m1: self.m1.as_f64(),
            power: self.power.iter().map(|p| p.as_f64()).collect(),
            third: self
                .third
                .iter()
                .map(|e| ThirdRecord {
                    k1: e.k1,
                    k2: e.k2,
                    re: e.value.re.as_f64(),
                    im: e.value.im.as_f64(),
                })
                .collect(),
        }
    }

    pub fn from_record(r: &MomentsRecord) -> Result<Self> {
        let m = InvariantMoments {
            group: r.group,
            n: r.n,
            sigma_used: T::of(r.sigma_used),
            m1: T::of(r.m1),
            power: r.power.iter().map(|&p| T::of(p)).collect(),
            third: r
                .third
                .iter()
                .map(|e| ThirdEntry { k1: e.k1, k2: e.k2, value: Complex::new(T::of(e.re), T::of(e.im)) })
                .collect(),
        };
        m.validate()?;
        Ok(m)
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(&self.to_record()).map_err(|e| Error::json(path, e))?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let record: MomentsRecord = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        Self::from_record(&record)
            .map_err(|e| Error::Malformed(format!("{}: {e}", path.display())))
    }
}

/// On-disk form of [`InvariantMoments`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentsRecord {
    pub group: Group,
    pub n: usize,
    pub sigma_used: f64,
    pub m1: f64,
    pub power: Vec<f64>,
    pub third: Vec<ThirdRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThirdRecord {
    pub k1: usize,
    pub k2: usize,
    pub re: f64,
    pub im: f64,
}

/// Polynomial invariants of arbitrary (not necessarily real-origin) Fourier
/// coefficients: `f[0]`, `f[ℓ] f[-ℓ]`, and the product form of the third
/// moment. For real signals these agree with [`InvariantMoments`].
#[derive(Clone, Debug, PartialEq)]
pub struct PolynomialInvariants<T> {
    pub group: Group,
    pub degree1: Complex<T>,
    pub degree2: Vec<Complex<T>>,
    pub degree3: Vec<ThirdEntry<T>>,
}

impl<T: Scalar> PolynomialInvariants<T> {
    pub fn of(f: &FourierSignal<T>, group: Group) -> Self {
        let n = f.len();
        let half = T::of(0.5);
        let degree3 = distinct_indices(group, n)
            .expect("FourierSignal has length ≥ 2")
            .into_iter()
            .map(|(k1, k2)| {
                let k3 = third_index(n, k1, k2);
                let p = f.at(k1) * f.at(k2) * f.at(k3);
                let value = match group {
                    Group::Cyclic => p,
                    Group::Dihedral => (p + f.at(n - k1) * f.at(n - k2) * f.at(n - k3)) * half,
                };
                ThirdEntry { k1, k2, value }
            })
            .collect();
        PolynomialInvariants {
            group,
            degree1: f.at(0),
            degree2: (0..n).map(|l| f.at(l) * f.at(n - l)).collect(),
            degree3,
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        let mut d = (self.degree1 - other.degree1).norm();
        for (a, b) in self.degree2.iter().zip(&other.degree2) {
            d = d.max((a - b).norm());
        }
        for (a, b) in self.degree3.iter().zip(&other.degree3) {
            d = d.max((a.value - b.value).norm());
        }
        d
    }
}
