use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Per-sample clipped surrogate `min(ρA, clip(ρ, 1−ε, 1+ε)A)`.
pub fn clipped_objective<T: Scalar>(ratio: T, advantage: T, eps: T) -> T {
    let clipped = ratio.max(T::one() - eps).min(T::one() + eps);
    (ratio * advantage).min(clipped * advantage)
}

/// `∂/∂ log π` of [`clipped_objective`]: `ρA` where the unclipped branch is
/// the minimum, zero inside the clipping dead zone.
pub fn clipped_objective_grad<T: Scalar>(ratio: T, advantage: T, eps: T) -> T {
    let clipped = ratio.max(T::one() - eps).min(T::one() + eps);
    if ratio * advantage <= clipped * advantage {
        ratio * advantage
    } else {
        T::zero()
    }
}

/// True when the sample sits in the clipping dead zone.
pub fn is_clipped<T: Scalar>(ratio: T, advantage: T, eps: T) -> bool {
    let clipped = ratio.max(T::one() - eps).min(T::one() + eps);
    ratio * advantage > clipped * advantage
}

/// Negated mean clipped objective.
pub fn clipped_policy_loss<T: Scalar>(ratios: &[T], advantages: &[T], eps: T) -> Result<T> {
    if ratios.is_empty() {
        return Err(Error::EmptyBuffer);
    }
    if let Some(&bad) = ratios.iter().find(|r| !r.is_finite()) {
        return Err(Error::NonFinite { what: "probability ratio", value: bad.as_f64() });
    }
    let s: T = ratios.iter().zip(advantages).map(|(&r, &a)| clipped_objective(r, a, eps)).sum();
    Ok(-s / T::from_count(ratios.len()))
}

/// Mean squared error between critic outputs and return targets.
pub fn value_loss<T: Scalar>(values: &[T], returns: &[T]) -> T {
    let s: T = values.iter().zip(returns).map(|(&v, &r)| (v - r) * (v - r)).sum();
    s / T::from_count(values.len().max(1))
}
