//! Exact checks of the combinatorial facts behind dihedral orbit recovery:
//! the forms `x_i + x_j − x_{i+j}` span the hyperplane orthogonal to
//! `(1, 2, …, k)`, do so excessively for `k ≥ 4`, and admit an integer
//! annihilator with no zero entry. All linear algebra is exact.

use std::f64::consts::PI;
use std::ops::{Div, Mul, Sub};

use num_bigint::BigInt;
use num_complex::Complex;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::group::Group;
use crate::invariants::{InvariantMoments, PolynomialInvariants};
use crate::signal::{apply_group_fourier, FourierSignal};

/// Rows `x_i + x_j − x_{i+j}` for `1 ≤ i ≤ j`, `i + j ≤ k`, in the basis
/// `x_1..x_k`, ordered by `(i, j)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FormMatrix {
    pub k: usize,
    pub pairs: Vec<(usize, usize)>,
    pub rows: Vec<Vec<i64>>,
}

impl FormMatrix {
    pub fn new(k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidConfig(format!("form matrix needs k >= 2, got {k}")));
        }
        let mut pairs = Vec::new();
        let mut rows = Vec::new();
        for i in 1..=k {
            for j in i..=k - i {
                let mut row = vec![0i64; k];
                row[i - 1] += 1;
                row[j - 1] += 1;
                row[i + j - 1] -= 1;
                pairs.push((i, j));
                rows.push(row);
            }
        }
        Ok(FormMatrix { k, pairs, rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Every row is orthogonal to `(1, 2, …, k)`.
    pub fn orthogonal_to_weights(&self) -> bool {
        self.rows
            .iter()
            .all(|r| r.iter().enumerate().map(|(c, &v)| v * (c as i64 + 1)).sum::<i64>() == 0)
    }

    fn big_rows(&self, skip: Option<usize>) -> Vec<Vec<BigInt>> {
        self.rows
            .iter()
            .enumerate()
            .filter(|(i, _)| Some(*i) != skip)
            .map(|(_, r)| r.iter().map(|&v| BigInt::from(v)).collect())
            .collect()
    }

    /// `Σ m_r · row_r`, exactly.
    pub fn combine(&self, m: &[BigInt]) -> Vec<BigInt> {
        let mut acc = vec![BigInt::zero(); self.k];
        for (coef, row) in m.iter().zip(&self.rows) {
            for (a, &v) in acc.iter_mut().zip(row) {
                if v != 0 {
                    *a += coef * v;
                }
            }
        }
        acc
    }
}

/// Rank by fraction-free (Bareiss) elimination. `R` must be an integral
/// domain in which the Bareiss divisions are exact.
pub fn bareiss_rank<R>(mut a: Vec<Vec<R>>) -> usize
where
    R: Clone + Zero + One + PartialEq,
    for<'x> &'x R: Mul<&'x R, Output = R> + Sub<&'x R, Output = R> + Div<&'x R, Output = R>,
{
    let m = a.len();
    let cols = a.first().map_or(0, |r| r.len());
    let mut prev = R::one();
    let mut rank = 0;
    for c in 0..cols {
        if rank == m {
            break;
        }
        let Some(p) = (rank..m).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(rank, p);
        let (top, rest) = a.split_at_mut(rank + 1);
        let pivot_row = &top[rank];
        let pivot = &pivot_row[c];
        for row in rest.iter_mut() {
            let lead = row[c].clone();
            for j in c + 1..cols {
                let v = &(&(pivot * &row[j]) - &(&lead * &pivot_row[j])) / &prev;
                row[j] = v;
            }
            row[c] = R::zero();
        }
        prev = pivot.clone();
        rank += 1;
    }
    rank
}

/// Exact rank of the form matrix and whether it reaches `k − 1`.
pub fn xij_rank(k: usize) -> Result<(usize, bool)> {
    let fm = FormMatrix::new(k)?;
    let rank = bareiss_rank(fm.big_rows(None));
    Ok((rank, rank == k - 1))
}

/// Whether the forms still span after deleting any single one, tested by
/// literally recomputing the rank for every deletion.
pub fn is_excessive(k: usize) -> Result<bool> {
    let fm = FormMatrix::new(k)?;
    let full = bareiss_rank(fm.big_rows(None));
    Ok((0..fm.len()).into_par_iter().all(|r| bareiss_rank(fm.big_rows(Some(r))) == full))
}

/// Basis of `{w : A w = 0}` over the rationals, one vector per free column.
pub fn rational_nullspace(a: &[Vec<BigRational>]) -> Vec<Vec<BigRational>> {
    let mut a = a.to_vec();
    let m = a.len();
    let cols = a.first().map_or(0, |r| r.len());
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == m {
            break;
        }
        let Some(p) = (r..m).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, p);
        let inv = a[r][c].recip();
        for v in a[r].iter_mut() {
            *v = &*v * &inv;
        }
        let pivot_row = a[r].clone();
        for (i, row) in a.iter_mut().enumerate() {
            if i != r && !row[c].is_zero() {
                let factor = row[c].clone();
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v = &*v - &(&factor * pv);
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![BigRational::zero(); cols];
            v[f] = BigRational::one();
            for (row, &pc) in pivots.iter().enumerate() {
                v[pc] = -a[row][f].clone();
            }
            v
        })
        .collect()
}

fn primes(count: usize) -> Vec<i64> {
    let mut out = Vec::with_capacity(count);
    let mut c = 2i64;
    while out.len() < count {
        if out.iter().take_while(|&&p| p * p <= c).all(|&p| c % p != 0) {
            out.push(c);
        }
        c += 1;
    }
    out
}

/// Integer weights `m_ij`, all nonzero, with `Σ m_ij (x_i + x_j − x_{i+j}) = 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Annihilator {
    pub k: usize,
    pub pairs: Vec<(usize, usize)>,
    pub coefficients: Vec<BigInt>,
}

impl Annihilator {
    /// Exact re-check against a freshly built form matrix.
    pub fn verify(&self) -> bool {
        let Ok(fm) = FormMatrix::new(self.k) else {
            return false;
        };
        fm.pairs == self.pairs
            && self.coefficients.len() == fm.len()
            && self.coefficients.iter().all(|c| !c.is_zero())
            && fm.combine(&self.coefficients).iter().all(Zero::is_zero)
    }
}

/// Combine a rational basis of the left nullspace of the form matrix with
/// coefficients taken from a shifting window of primes until no coordinate
/// vanishes, then clear denominators.
pub fn find_nonzero_annihilator(k: usize) -> Result<Annihilator> {
    if k < 4 {
        return Err(Error::NoAnnihilator(k));
    }
    let fm = FormMatrix::new(k)?;
    let transpose: Vec<Vec<BigRational>> = (0..k)
        .map(|c| fm.rows.iter().map(|r| BigRational::from_integer(r[c].into())).collect())
        .collect();
    let basis = rational_nullspace(&transpose);
    if basis.is_empty() {
        return Err(Error::NoAnnihilator(k));
    }
    let ps = primes(basis.len() + 256);
    for shift in 0..256 {
        let mut w = vec![BigRational::zero(); fm.len()];
        for (b, &p) in basis.iter().zip(&ps[shift..]) {
            let p = BigRational::from_integer(p.into());
            for (wi, bi) in w.iter_mut().zip(b) {
                *wi = &*wi + &(bi * &p);
            }
        }
        if w.iter().any(Zero::is_zero) {
            continue;
        }
        let denom = w.iter().fold(BigInt::one(), |acc, q| acc.lcm(q.denom()));
        let ints: Vec<BigInt> = w.iter().map(|q| (q * BigRational::from_integer(denom.clone())).to_integer()).collect();
        let g = ints.iter().fold(BigInt::zero(), |acc, v| acc.gcd(v));
        let mut coefficients: Vec<BigInt> = ints.into_iter().map(|v| v / &g).collect();
        if coefficients[0].is_negative() {
            coefficients.iter_mut().for_each(|v| *v = -v.clone());
        }
        let ann = Annihilator { k, pairs: fm.pairs.clone(), coefficients };
        if ann.verify() {
            return Ok(ann);
        }
    }
    Err(Error::NoAnnihilator(k))
}

/// A multiplicative relation `Π ā_ij^{n_ij} = Π a_ij^{n_ij}` among phase
/// triples.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PhaseRelation {
    pub pairs: Vec<(usize, usize)>,
    pub exponents: Vec<i64>,
}

/// Tolerance on the wrapped phase sum for a relation to count as exact.
pub const RELATION_TOL: f64 = 1e-9;

fn wrap(angle: f64) -> f64 {
    let t = angle.rem_euclid(2.0 * PI);
    if t > PI {
        t - 2.0 * PI
    } else {
        t
    }
}

/// Bounded search for relations `2 Σ n_ij φ_ij ≡ 0 (mod 2π)`, with
/// `φ_ij = θ_i + θ_j − θ_{i+j}`, over subsets of at most `subset_bound`
/// pairs with `i + j ≤ ⌊(n−1)/2⌋` and exponents in `[−B, B] \ {0}`.
///
/// Relations that hold for every signal (those with
/// `Σ n_ij (x_i + x_j − x_{i+j}) = 0`) are skipped. An empty result means
/// nothing was found within the bounds; it is not a proof of genericity.
pub fn condition_star_probe(
    f: &FourierSignal<f64>,
    exp_bound: usize,
    subset_bound: usize,
) -> Result<Vec<PhaseRelation>> {
    let n = f.len();
    let k = (n - 1) / 2;
    for l in 1..=k {
        if f.at(l).norm() <= 1e-9 {
            return Err(Error::VanishingCoefficient(l));
        }
    }
    if k < 2 || exp_bound == 0 || subset_bound == 0 {
        return Ok(Vec::new());
    }
    let fm = FormMatrix::new(k)?;
    let phases: Vec<f64> = fm
        .pairs
        .iter()
        .map(|&(i, j)| (f.at(i) * f.at(j) * f.at(i + j).conj()).arg())
        .collect();
    let b = exp_bound as i64;
    let values: Vec<i64> = (-b..=b).filter(|&v| v != 0).collect();
    let mut found = Vec::new();
    let mut subset = Vec::new();
    search_subsets(&fm, &phases, &values, subset_bound, 0, &mut subset, &mut found);
    Ok(found)
}

fn search_subsets(
    fm: &FormMatrix,
    phases: &[f64],
    values: &[i64],
    max_size: usize,
    start: usize,
    subset: &mut Vec<usize>,
    found: &mut Vec<PhaseRelation>,
) {
    for idx in start..fm.len() {
        subset.push(idx);
        search_exponents(fm, phases, values, subset, &mut Vec::new(), found);
        if subset.len() < max_size {
            search_subsets(fm, phases, values, max_size, idx + 1, subset, found);
        }
        subset.pop();
    }
}

fn search_exponents(
    fm: &FormMatrix,
    phases: &[f64],
    values: &[i64],
    subset: &[usize],
    exps: &mut Vec<i64>,
    found: &mut Vec<PhaseRelation>,
) {
    if exps.len() == subset.len() {
        let total: f64 = subset.iter().zip(exps.iter()).map(|(&s, &e)| e as f64 * phases[s]).sum();
        if wrap(2.0 * total).abs() >= RELATION_TOL {
            return;
        }
        let mut form = vec![0i64; fm.k];
        for (&s, &e) in subset.iter().zip(exps.iter()) {
            for (acc, &v) in form.iter_mut().zip(&fm.rows[s]) {
                *acc += e * v;
            }
        }
        if form.iter().any(|&v| v != 0) {
            found.push(PhaseRelation {
                pairs: subset.iter().map(|&s| fm.pairs[s]).collect(),
                exponents: exps.clone(),
            });
        }
        return;
    }
    for &v in values {
        // a relation and its negation are the same; keep the first exponent positive
        if exps.is_empty() && v < 0 {
            continue;
        }
        exps.push(v);
        search_exponents(fm, phases, values, subset, exps, found);
        exps.pop();
    }
}

/// Outcome of one named check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pair: Option<String>,
    pub pass: bool,
    pub witness: serde_json::Value,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TheoryReport {
    pub checks: Vec<Check>,
}

impl TheoryReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn write_json(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::json(path, e))?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

fn c64(re: f64, im: f64) -> Complex<f64> {
    Complex::new(re, im)
}

/// Smallest `‖a − g·b‖` over the dihedral group, on Fourier coefficients.
fn dihedral_orbit_distance(a: &FourierSignal<f64>, b: &FourierSignal<f64>) -> f64 {
    Group::Dihedral
        .elements(a.len())
        .map(|g| {
            let gb = apply_group_fourier(g, b);
            a.coeffs().iter().zip(gb.coeffs()).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
        })
        .fold(f64::INFINITY, f64::min)
}

/// The two known pairs of distinct dihedral orbits with equal invariants of
/// degree at most three.
pub fn verify_counterexamples() -> Vec<Check> {
    let mut checks = Vec::new();
    let i = c64(0.0, 1.0);
    let one = c64(1.0, 0.0);
    let zero = c64(0.0, 0.0);

    // complex pair: Fourier vectors of a real and a complex signal
    let f1 = FourierSignal::new(vec![one, one, zero, zero, one]).expect("length 5");
    let f2 = FourierSignal::new(vec![one, c64(0.5, 0.0), zero, zero, c64(2.0, 0.0)]).expect("length 5");
    let diff = PolynomialInvariants::of(&f1, Group::Dihedral).max_abs_diff(&PolynomialInvariants::of(&f2, Group::Dihedral));
    let dist = dihedral_orbit_distance(&f1, &f2);
    let pair_a = "(1,1,0,0,1) vs (1,1/2,0,0,2)".to_string();
    checks.push(Check {
        name: "counterexample_a_equal_invariants".into(),
        k: None,
        pair: Some(pair_a.clone()),
        pass: diff < 1e-12,
        witness: json!({ "max_abs_diff": diff }),
    });
    checks.push(Check {
        name: "counterexample_a_distinct_orbits".into(),
        k: None,
        pair: Some(pair_a),
        pass: dist > 0.1,
        witness: json!({ "orbit_distance": dist }),
    });

    // real pair, degenerate for the sign search
    let g1 = FourierSignal::real_origin(vec![one, i, -i, i, -i]).expect("conjugate symmetric");
    let g2 = FourierSignal::real_origin(vec![one, -i, -i, i, i]).expect("conjugate symmetric");
    let d1 = InvariantMoments::from_fourier(&g1, Group::Dihedral);
    let d2 = InvariantMoments::from_fourier(&g2, Group::Dihedral);
    let diff = d1.max_abs_diff(&d2);
    let dist = dihedral_orbit_distance(&g1, &g2);
    let c1 = InvariantMoments::from_fourier(&g1, Group::Cyclic).third_at(1, 2);
    let c2 = InvariantMoments::from_fourier(&g2, Group::Cyclic).third_at(1, 2);
    let low_degree = d1.m1.abs().min(d1.power.iter().cloned().fold(f64::INFINITY, f64::min));
    let pair_b = "(1,i,-i,i,-i) vs (1,-i,-i,i,i)".to_string();
    checks.push(Check {
        name: "counterexample_b_equal_invariants".into(),
        k: None,
        pair: Some(pair_b.clone()),
        pass: diff < 1e-12,
        witness: json!({ "max_abs_diff": diff }),
    });
    checks.push(Check {
        name: "counterexample_b_distinct_orbits".into(),
        k: None,
        pair: Some(pair_b.clone()),
        pass: dist > 0.1,
        witness: json!({ "orbit_distance": dist }),
    });
    checks.push(Check {
        name: "counterexample_b_cyclic_bispectra_differ".into(),
        k: None,
        pair: Some(pair_b.clone()),
        pass: (c1 - c2).norm() > 0.1,
        witness: json!({ "entry": [1, 2], "first": [c1.re, c1.im], "second": [c2.re, c2.im] }),
    });
    checks.push(Check {
        name: "counterexample_b_low_degree_nonvanishing".into(),
        k: None,
        pair: Some(pair_b),
        pass: low_degree > 1e-9,
        witness: json!({ "min_abs_degree_one_two": low_degree }),
    });
    checks
}

/// Rank, excessiveness and annihilator checks for `2 ≤ k ≤ k_max`, followed
/// by the counterexample checks.
pub fn verify_theory(k_max: usize) -> Result<TheoryReport> {
    if k_max < 2 {
        return Err(Error::InvalidConfig(format!("k-max must be at least 2, got {k_max}")));
    }
    let per_k: Vec<Vec<Check>> = (2..=k_max)
        .into_par_iter()
        .map(|k| -> Result<Vec<Check>> {
            let fm = FormMatrix::new(k)?;
            let (rank, spans) = xij_rank(k)?;
            let orth = fm.orthogonal_to_weights();
            let mut out = vec![Check {
                name: "forms_span_hyperplane".into(),
                k: Some(k),
                pair: None,
                pass: spans && orth,
                witness: json!({ "rank": rank, "rows": fm.len(), "orthogonal": orth }),
            }];
            let excessive = is_excessive(k)?;
            out.push(Check {
                name: "excessive_spanning_set".into(),
                k: Some(k),
                pair: None,
                pass: excessive == (k >= 4),
                witness: json!({ "excessive": excessive, "expected": k >= 4 }),
            });
            let ann = find_nonzero_annihilator(k);
            out.push(match ann {
                Ok(a) => Check {
                    name: "nonzero_annihilator".into(),
                    k: Some(k),
                    pair: None,
                    pass: k >= 4 && a.verify(),
                    witness: json!({
                        "pairs": a.pairs,
                        "m": a.coefficients.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
                    }),
                },
                Err(e) => Check {
                    name: "nonzero_annihilator".into(),
                    k: Some(k),
                    pair: None,
                    pass: k < 4,
                    witness: json!({ "error": e.to_string() }),
                },
            });
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut checks: Vec<Check> = per_k.into_iter().flatten().collect();
    checks.extend(verify_counterexamples());
    Ok(TheoryReport { checks })
}
