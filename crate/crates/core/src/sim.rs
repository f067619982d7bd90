//! Noisy observations `y_i = g_i·x + ε_i` and debiased moment estimates.
//!
//! Noise bias, with `ŷ` the unitary DFT of an observation and `E[ε̂_a ε̂_b] =
//! σ² [a + b ≡ 0]`:
//!
//! * `E|ŷ[ℓ]|² = |f[ℓ]|² + σ²`;
//! * a third-order product over `(k1, k2, k3)` picks up `σ² f[0]` for every
//!   pair of indices summing to zero, i.e. once when exactly one index is zero
//!   and three times for `(0, 0, 0)`. Odd Gaussian moments vanish.

use std::path::Path;

use num_complex::Complex;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::Group;
use crate::invariants::{distinct_indices, InvariantMoments, ThirdEntry};
use crate::rng::{derive_seed, stream_rng};
use crate::scalar::Scalar;
use crate::signal::{Dft, Signal};

/// How group elements are assigned to samples.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sampling {
    /// Uniform draws from the group.
    #[default]
    Uniform,
    /// Sample `i` uses element `i mod |G|` in canonical order.
    Enumerate,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObservationSet<T> {
    pub n: usize,
    pub group: Group,
    pub sigma: T,
    pub master_seed: u64,
    pub sampling: Sampling,
    pub samples: Vec<Vec<T>>,
}

/// Metadata stored next to the sample CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservationMeta {
    pub n: usize,
    pub group: Group,
    pub sigma: f64,
    #[serde(rename = "N")]
    pub samples: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub sampling: Sampling,
}

/// Draw `count` observations of `x`. Sample `i` takes its group element and
/// noise from stream `i` of the generator keyed by `master_seed`.
pub fn sample_observations<T: Scalar>(
    x: &Signal<T>,
    sigma: T,
    count: usize,
    group: Group,
    master_seed: u64,
    sampling: Sampling,
) -> Result<ObservationSet<T>> {
    if count == 0 {
        return Err(Error::InvalidConfig("sample count must be at least 1".into()));
    }
    if !(sigma >= T::zero()) || !sigma.is_finite() {
        return Err(Error::InvalidConfig(format!("sigma must be finite and non-negative, got {sigma}")));
    }
    let n = x.len();
    let order = group.order(n);
    let samples = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(master_seed, i as u64);
            let idx = match sampling {
                Sampling::Uniform => rng.random_range(0..order),
                Sampling::Enumerate => i % order,
            };
            let g = group.element(n, idx);
            (0..n)
                .map(|j| {
                    let eps: f64 = StandardNormal.sample(&mut rng);
                    x.values()[g.source_index(j, n)] + sigma * T::of(eps)
                })
                .collect()
        })
        .collect();
    Ok(ObservationSet { n, group, sigma, master_seed, sampling, samples })
}

/// Standard errors of the per-sample debiased contributions, matching the
/// layout of [`InvariantMoments`]. Complex entries carry the real and
/// imaginary standard errors in `re` and `im`.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentStderr<T> {
    pub m1: T,
    pub power: Vec<T>,
    pub third: Vec<Complex<T>>,
}

struct Layout {
    keys: Vec<(usize, usize, usize)>,
    zero_count: Vec<usize>,
}

impl Layout {
    fn new(group: Group, n: usize) -> Result<Self> {
        let keys: Vec<_> = distinct_indices(group, n)?
            .into_iter()
            .map(|(a, b)| (a, b, (2 * n - a - b) % n))
            .collect();
        let zero_count = keys
            .iter()
            .map(|&(a, b, c)| [a, b, c].iter().filter(|&&k| k == 0).count())
            .collect();
        Ok(Layout { keys, zero_count })
    }
}

/// Running sums of per-sample debiased contributions and their squares.
#[derive(Clone)]
struct Sums<T> {
    count: usize,
    m1: (T, T),
    power: Vec<(T, T)>,
    third: Vec<(Complex<T>, Complex<T>)>,
}

impl<T: Scalar> Sums<T> {
    fn zero(n: usize, entries: usize) -> Self {
        let z = Complex::new(T::zero(), T::zero());
        Sums {
            count: 0,
            m1: (T::zero(), T::zero()),
            power: vec![(T::zero(), T::zero()); n],
            third: vec![(z, z); entries],
        }
    }

    fn add(&mut self, other: &Sums<T>) {
        self.count += other.count;
        self.m1.0 += other.m1.0;
        self.m1.1 += other.m1.1;
        for (a, b) in self.power.iter_mut().zip(&other.power) {
            a.0 += b.0;
            a.1 += b.1;
        }
        for (a, b) in self.third.iter_mut().zip(&other.third) {
            a.0 += b.0;
            a.1 += b.1;
        }
    }
}

const CHUNK: usize = 512;

fn accumulate<T: Scalar>(obs: &ObservationSet<T>) -> Result<(Layout, Sums<T>)> {
    if obs.samples.is_empty() {
        return Err(Error::EmptyObservations);
    }
    let n = obs.n;
    if let Some(bad) = obs.samples.iter().find(|s| s.len() != n) {
        return Err(Error::DimensionMismatch { expected: n, got: bad.len() });
    }
    let layout = Layout::new(obs.group, n)?;
    let dft = Dft::<T>::new(n);
    let s2 = obs.sigma * obs.sigma;
    let half = T::of(0.5);
    let entries = layout.keys.len();

    // Fixed chunking, summed in chunk order: bit-identical for any thread count.
    let partials: Vec<Sums<T>> = obs
        .samples
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut acc = Sums::zero(n, entries);
            for y in chunk {
                let f = dft.forward_real(y);
                let y0 = f[0].re;
                acc.count += 1;
                acc.m1.0 += y0;
                acc.m1.1 += y0 * y0;
                for (slot, c) in acc.power.iter_mut().zip(&f) {
                    let p = c.norm_sqr() - s2;
                    slot.0 += p;
                    slot.1 += p * p;
                }
                for (e, (&(a, b, c), &zeros)) in layout.keys.iter().zip(&layout.zero_count).enumerate() {
                    let raw = match obs.group {
                        Group::Cyclic => f[a] * f[b] * f[(a + b) % n].conj(),
                        Group::Dihedral => {
                            (f[a] * f[b] * f[c] + f[(n - a) % n] * f[(n - b) % n] * f[(n - c) % n]) * half
                        }
                    };
                    let bias = match zeros {
                        1 => s2 * y0,
                        3 => T::of(3.0) * s2 * y0,
                        _ => T::zero(),
                    };
                    let v = Complex::new(raw.re - bias, raw.im);
                    let slot = &mut acc.third[e];
                    slot.0 += v;
                    slot.1 += Complex::new(v.re * v.re, v.im * v.im);
                }
            }
            acc
        })
        .collect();
    let mut total = Sums::zero(n, entries);
    for p in &partials {
        total.add(p);
    }
    Ok((layout, total))
}

/// Debiased estimates of the invariants, assuming the noise level recorded in
/// the observation set.
pub fn estimate_moments<T: Scalar>(obs: &ObservationSet<T>) -> Result<InvariantMoments<T>> {
    estimate_moments_with_stderr(obs).map(|(m, _)| m)
}

/// As [`estimate_moments`], plus the standard error of every entry computed
/// from the per-sample spread.
pub fn estimate_moments_with_stderr<T: Scalar>(
    obs: &ObservationSet<T>,
) -> Result<(InvariantMoments<T>, MomentStderr<T>)> {
    let (layout, sums) = accumulate(obs)?;
    let count = T::of_usize(sums.count);
    let mean = |s: T| s / count;
    // standard error of the mean from E[v²] − E[v]²
    let stderr = |s: T, sq: T| {
        if sums.count < 2 {
            return T::zero();
        }
        let m = s / count;
        let var = (sq / count - m * m).max(T::zero()) * count / (count - T::one());
        (var / count).sqrt()
    };
    let moments = InvariantMoments {
        group: obs.group,
        n: obs.n,
        sigma_used: obs.sigma,
        m1: mean(sums.m1.0),
        power: sums.power.iter().map(|p| mean(p.0)).collect(),
        third: layout
            .keys
            .iter()
            .zip(&sums.third)
            .map(|(&(k1, k2, _), t)| ThirdEntry { k1, k2, value: t.0 / count })
            .collect(),
    };
    let errors = MomentStderr {
        m1: stderr(sums.m1.0, sums.m1.1),
        power: sums.power.iter().map(|p| stderr(p.0, p.1)).collect(),
        third: sums
            .third
            .iter()
            .map(|t| Complex::new(stderr(t.0.re, t.1.re), stderr(t.0.im, t.1.im)))
            .collect(),
    };
    Ok((moments, errors))
}

/// Pooled standard deviation of the debiased third-order entries at each
/// noise level: for every σ, `trials` independent observation sets of size
/// `count` are drawn and the per-entry variance across trials is averaged.
pub fn estimator_noise_scaling<T: Scalar>(
    x: &Signal<T>,
    sigmas: &[T],
    count: usize,
    trials: usize,
    group: Group,
    seed: u64,
) -> Result<Vec<(T, T)>> {
    if trials < 2 {
        return Err(Error::InvalidConfig("need at least two trials to measure spread".into()));
    }
    sigmas
        .iter()
        .enumerate()
        .map(|(si, &sigma)| {
            let estimates = (0..trials)
                .map(|t| {
                    let s = derive_seed(seed, &[si as u64, t as u64]);
                    let obs = sample_observations(x, sigma, count, group, s, Sampling::Uniform)?;
                    Ok(estimate_moments(&obs)?.third)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((sigma, pooled_std(&estimates)))
        })
        .collect()
}

fn pooled_std<T: Scalar>(estimates: &[Vec<ThirdEntry<T>>]) -> T {
    let trials = T::of_usize(estimates.len());
    let entries = estimates[0].len();
    let mut total = T::zero();
    for e in 0..entries {
        let mean = estimates.iter().map(|t| t[e].value).fold(Complex::new(T::zero(), T::zero()), |a, b| a + b) / trials;
        let var = estimates.iter().map(|t| (t[e].value - mean).norm_sqr()).sum::<T>() / (trials - T::one());
        total += var;
    }
    (total / T::of_usize(entries)).sqrt()
}

impl<T: Scalar> ObservationSet<T> {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn meta(&self) -> ObservationMeta {
        ObservationMeta {
            n: self.n,
            group: self.group,
            sigma: self.sigma.as_f64(),
            samples: self.samples.len(),
            master_seed: self.master_seed,
            sampling: self.sampling,
        }
    }

    /// Write `samples.csv` (one observation per row) and `samples.json`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let csv_path = dir.join("samples.csv");
        let mut w = csv::Writer::from_path(&csv_path).map_err(|e| Error::csv(&csv_path, e))?;
        w.write_record((0..self.n).map(|j| format!("y{j}"))).map_err(|e| Error::csv(&csv_path, e))?;
        for s in &self.samples {
            w.write_record(s.iter().map(|v| format!("{}", v.as_f64())))
                .map_err(|e| Error::csv(&csv_path, e))?;
        }
        w.flush().map_err(|e| Error::io(&csv_path, e))?;
        let meta_path = dir.join("samples.json");
        let text = serde_json::to_string_pretty(&self.meta()).map_err(|e| Error::json(&meta_path, e))?;
        std::fs::write(&meta_path, text + "\n").map_err(|e| Error::io(&meta_path, e))
    }

    pub fn read(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let meta_path = dir.join("samples.json");
        let text = std::fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
        let meta: ObservationMeta = serde_json::from_str(&text).map_err(|e| Error::json(&meta_path, e))?;
        let csv_path = dir.join("samples.csv");
        let mut r = csv::Reader::from_path(&csv_path).map_err(|e| Error::csv(&csv_path, e))?;
        let mut samples = Vec::with_capacity(meta.samples);
        for rec in r.deserialize::<Vec<f64>>() {
            let row = rec.map_err(|e| Error::csv(&csv_path, e))?;
            if row.len() != meta.n {
                return Err(Error::DimensionMismatch { expected: meta.n, got: row.len() });
            }
            samples.push(row.into_iter().map(T::of).collect());
        }
        if samples.len() != meta.samples {
            return Err(Error::Malformed(format!(
                "{}: expected {} samples, found {}",
                csv_path.display(),
                meta.samples,
                samples.len()
            )));
        }
        Ok(ObservationSet {
            n: meta.n,
            group: meta.group,
            sigma: T::of(meta.sigma),
            master_seed: meta.master_seed,
            sampling: meta.sampling,
            samples,
        })
    }
}
