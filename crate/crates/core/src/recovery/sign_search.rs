use num_complex::Complex;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::Group;
use crate::invariants::InvariantMoments;
use crate::scalar::Scalar;
use crate::signal::Signal;

use super::align::align_and_error;
use super::marching::{assemble, check_power, gauge_triple, unit};

/// Default cap on the signal length, since the search costs `2^(n/2)`.
pub const DEFAULT_SIGN_SEARCH_MAX: usize = 14;

/// Largest moment mismatch a candidate may have and still be accepted.
pub const CONSISTENCY_TOL: f64 = 1e-8;

/// Candidates closer than this (aligned relative error) share an orbit.
const SAME_ORBIT_TOL: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct SignSearchOutcome<T> {
    /// Number of sign assignments enumerated along the phase chain.
    pub assignments: usize,
    /// Every candidate whose dihedral moments match the target.
    pub consistent: Vec<Signal<T>>,
    /// One representative per dihedral orbit among the consistent candidates.
    pub orbits: Vec<Signal<T>>,
}

#[derive(Serialize)]
struct OutcomeRecord {
    n: usize,
    assignments: usize,
    consistent: usize,
    orbits: Vec<Vec<f64>>,
}

impl<T: Scalar> SignSearchOutcome<T> {
    pub fn to_json(&self) -> serde_json::Value {
        let rec = OutcomeRecord {
            n: self.orbits.first().map_or(0, |s| s.len()),
            assignments: self.assignments,
            consistent: self.consistent.len(),
            orbits: self.orbits.iter().map(|s| s.values().iter().map(|v| v.as_f64()).collect()).collect(),
        };
        serde_json::to_value(rec).expect("plain record")
    }
}

/// Enumerate every signal consistent with dihedral moments.
///
/// The dihedral moments fix only `cos` of each phase triple, so the chain
/// `(1, ℓ-1, -ℓ)` for `ℓ = 2..=n/2` leaves one sign per link, and the
/// wrap-around triple that pins the shift leaves one more. All `2^(n/2)`
/// combinations are built, checked against the full moment set, and grouped
/// into dihedral orbits.
pub fn dihedral_sign_search<T: Scalar>(m: &InvariantMoments<T>, n_max: usize) -> Result<SignSearchOutcome<T>> {
    if m.group != Group::Dihedral {
        return Err(Error::GroupMismatch { expected: Group::Dihedral, found: m.group });
    }
    let n = m.n;
    if n > n_max {
        return Err(Error::SearchTooLarge { n, n_max });
    }
    m.validate()?;
    check_power(m)?;
    let k = n / 2;
    let mag = m.magnitudes();
    let zero = Complex::new(T::zero(), T::zero());

    // cos of the chain triples
    let cosines: Vec<T> = (2..=k)
        .map(|l| {
            let c = m.third_at(1, l - 1).re / (mag[1] * mag[l - 1] * mag[l]);
            c.max(-T::one()).min(T::one())
        })
        .collect();
    let assignments = 1usize << cosines.len();

    let mut consistent = Vec::new();
    for mask in 0..assignments {
        let mut half = vec![zero; k + 1];
        half[0] = Complex::new(m.m1, T::zero());
        half[1] = Complex::new(mag[1], T::zero());
        for l in 2..=k {
            let c = cosines[l - 2];
            let s = (T::one() - c * c).max(T::zero()).sqrt();
            let s = if mask >> (l - 2) & 1 == 1 { -s } else { s };
            // a = f1 f_{l-1} conj(f_l) / |..| = c + i s
            let a = Complex::new(c, s);
            half[l] = unit(a.conj() * half[1] * half[l - 1]) * mag[l];
        }
        let gauges: Vec<T> = if n >= 3 {
            let (p, q, r) = gauge_triple(n);
            let model = half[p] * half[q] * half[r];
            let rho = model.norm();
            let c = (m.third_at(p, q).re / rho).max(-T::one()).min(T::one());
            let base = c.acos();
            let psi = model.arg();
            let nn = T::of_usize(n);
            vec![(base - psi) / nn, (-base - psi) / nn]
        } else {
            vec![T::zero()]
        };
        for phi in gauges {
            let mut cand = half.clone();
            for (l, c) in cand.iter_mut().enumerate().skip(1) {
                *c *= Complex::from_polar(T::one(), phi * T::of_usize(l));
            }
            if n.is_multiple_of(2) {
                cand[k] = Complex::new(cand[k].re.signum() * mag[k], T::zero());
            }
            let x = assemble(m, &cand)?;
            let resid = InvariantMoments::of_signal(&x, Group::Dihedral).max_abs_diff(m);
            if resid < T::of(CONSISTENCY_TOL) {
                consistent.push(x);
            }
        }
    }

    let mut orbits: Vec<Signal<T>> = Vec::new();
    for x in &consistent {
        let known = orbits
            .iter()
            .any(|o| align_and_error(o, x, Group::Dihedral).is_ok_and(|(_, e)| e < T::of(SAME_ORBIT_TOL)));
        if !known {
            orbits.push(x.clone());
        }
    }
    Ok(SignSearchOutcome { assignments, consistent, orbits })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{dft, random_unit_signal, FourierSignal};

    #[test]
    fn generic_signal_has_one_orbit() {
        for n in [3, 4, 7, 9, 10, 13] {
            let x = random_unit_signal::<f64>(n, 40 + n as u64).unwrap();
            let m = InvariantMoments::of_signal(&x, Group::Dihedral);
            let out = dihedral_sign_search(&m, DEFAULT_SIGN_SEARCH_MAX).unwrap();
            assert_eq!(out.orbits.len(), 1, "n={n}");
            assert!(align_and_error(&x, &out.orbits[0], Group::Dihedral).unwrap().1 < 1e-8);
        }
    }

    #[test]
    fn enumeration_size() {
        let x = random_unit_signal::<f64>(13, 1).unwrap();
        let m = InvariantMoments::of_signal(&x, Group::Dihedral);
        assert_eq!(dihedral_sign_search(&m, 13).unwrap().assignments, 32);
        assert!(matches!(dihedral_sign_search(&m, 12), Err(Error::SearchTooLarge { n: 13, n_max: 12 })));
    }

    #[test]
    fn degenerate_instance_has_two_orbits() {
        let i = Complex::new(0.0, 1.0);
        let one = Complex::new(1.0, 0.0);
        let f = FourierSignal::real_origin(vec![one, i, -i, i, -i]).unwrap();
        let x = crate::signal::idft(&f).unwrap();
        let m = InvariantMoments::of_signal(&x, Group::Dihedral);
        let out = dihedral_sign_search(&m, DEFAULT_SIGN_SEARCH_MAX).unwrap();
        assert_eq!(out.orbits.len(), 2);
        let g = FourierSignal::real_origin(vec![one, -i, -i, i, i]).unwrap();
        let y = crate::signal::idft(&g).unwrap();
        assert!(out.orbits.iter().any(|o| align_and_error(&y, o, Group::Dihedral).unwrap().1 < 1e-9));
        assert!(out.orbits.iter().any(|o| align_and_error(&x, o, Group::Dihedral).unwrap().1 < 1e-9));
        assert!(dft(&out.orbits[0]).is_real_origin());
    }
}
