use crate::error::{Error, Result};
use crate::group::{Group, GroupElement};
use crate::scalar::Scalar;
use crate::signal::{apply_group, Signal};

/// Group element `g` minimizing `‖truth − g·estimate‖` and the relative error
/// `‖truth − g·estimate‖ / ‖truth‖`. Ties go to the first element in
/// canonical order.
pub fn align_and_error<T: Scalar>(
    truth: &Signal<T>,
    estimate: &Signal<T>,
    group: Group,
) -> Result<(GroupElement, T)> {
    let n = truth.len();
    if estimate.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: estimate.len() });
    }
    let scale = truth.norm();
    if scale == T::zero() {
        return Err(Error::ZeroReference);
    }
    let (t, e) = (truth.values(), estimate.values());
    let mut best = (GroupElement::IDENTITY, T::infinity());
    for g in group.elements(n) {
        let d: T = (0..n)
            .map(|i| {
                let r = t[i] - e[g.source_index(i, n)];
                r * r
            })
            .sum();
        if d < best.1 {
            best = (g, d);
        }
    }
    Ok((best.0, best.1.sqrt() / scale))
}

/// Align every estimate to `truth` and average the aligned copies.
pub fn aligned_average<T: Scalar>(
    truth: &Signal<T>,
    estimates: &[Signal<T>],
    group: Group,
) -> Result<Signal<T>> {
    if estimates.is_empty() {
        return Err(Error::EmptyObservations);
    }
    let n = truth.len();
    let mut acc = vec![T::zero(); n];
    for est in estimates {
        let (g, _) = align_and_error(truth, est, group)?;
        for (a, v) in acc.iter_mut().zip(apply_group(g, est).values()) {
            *a += *v;
        }
    }
    let k = T::of_usize(estimates.len());
    Signal::new(acc.into_iter().map(|v| v / k).collect())
}
