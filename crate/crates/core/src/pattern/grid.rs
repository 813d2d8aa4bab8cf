use crate::error::{Error, Result};
use crate::geometry::{SwarmState, Vec3};
use crate::scalar::Scalar;

use super::{radiated_power, CarrierConfig, Elements};

/// Radiated power sampled on a uniform (θ, φ) grid. θ spans `[0, π]` and φ
/// spans `[-π, π]`, both endpoints included; the last φ column duplicates the
/// first.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternGrid<T> {
    pub theta_samples: usize,
    pub phi_samples: usize,
    pub thetas: Vec<T>,
    pub phis: Vec<T>,
    /// Row-major: `power[i * phi_samples + j]` is `P(θ_i, φ_j)`.
    pub power: Vec<T>,
}

pub(crate) fn theta_at<T: Scalar>(i: usize, n: usize) -> T {
    T::PI() * (T::from_count(i) / T::from_count(n - 1))
}

pub(crate) fn phi_at<T: Scalar>(j: usize, n: usize) -> T {
    -T::PI() + T::TAU() * (T::from_count(j) / T::from_count(n - 1))
}

impl<T: Scalar> PatternGrid<T> {
    #[inline]
    pub fn at(&self, i: usize, j: usize) -> T {
        self.power[i * self.phi_samples + j]
    }

    pub fn theta_step(&self) -> T {
        T::PI() / T::from_count(self.theta_samples - 1)
    }

    pub fn phi_step(&self) -> T {
        T::TAU() / T::from_count(self.phi_samples - 1)
    }

    /// `∬ P sinθ dθ dφ` by the composite trapezoid rule. P is interpolated
    /// linearly between θ samples and the `sinθ` factor is integrated exactly
    /// against each hat function, so constant patterns integrate to 4π·P.
    pub fn power_integral(&self) -> T {
        let (h, dp) = (self.theta_step(), self.phi_step());
        let half = T::lit(0.5);
        let interior = T::lit(2.0) * (T::one() - h.cos()) / h;
        let pole = T::one() - h.sin() / h;
        let mut total = T::zero();
        for (i, &theta) in self.thetas.iter().enumerate() {
            let wt = if i == 0 || i + 1 == self.theta_samples { pole } else { interior * theta.sin() };
            let mut row = T::zero();
            for j in 0..self.phi_samples {
                let wp = if j == 0 || j + 1 == self.phi_samples { half } else { T::one() };
                row += wp * self.at(i, j);
            }
            total += wt * row;
        }
        total * dp
    }

    pub fn max_power(&self) -> T {
        self.power.iter().copied().fold(T::zero(), T::max)
    }

    /// First grid direction attaining the maximum power.
    pub fn peak_direction(&self) -> (T, T) {
        let mut best = 0;
        for (idx, &p) in self.power.iter().enumerate() {
            if p > self.power[best] {
                best = idx;
            }
        }
        (self.thetas[best / self.phi_samples], self.phis[best % self.phi_samples])
    }
}

/// Samples `|AF|²` on the grid. Each cell uses the same arithmetic as
/// [`super::array_factor`], so grid values equal pointwise evaluation exactly.
pub fn pattern_grid<T: Scalar>(
    swarm: &SwarmState<T>,
    carrier: &CarrierConfig<T>,
    theta_samples: usize,
    phi_samples: usize,
) -> Result<PatternGrid<T>> {
    if theta_samples < 3 || phi_samples < 4 {
        return Err(Error::InvalidGrid(format!(
            "need at least 3 θ and 4 φ samples, got {theta_samples}×{phi_samples}"
        )));
    }
    let elements = Elements::new(swarm, carrier);
    let thetas: Vec<T> = (0..theta_samples).map(|i| theta_at(i, theta_samples)).collect();
    let phis: Vec<T> = (0..phi_samples).map(|j| phi_at(j, phi_samples)).collect();
    let mut power = Vec::with_capacity(theta_samples * phi_samples);
    for &theta in &thetas {
        for &phi in &phis {
            power.push(radiated_power(elements.factor(Vec3::from_spherical(theta, phi))));
        }
    }
    Ok(PatternGrid { theta_samples, phi_samples, thetas, phis, power })
}

/// `4π P(target) / ∬ P sinθ dθ dφ`, with `target_power` evaluated exactly.
pub fn directivity<T: Scalar>(grid: &PatternGrid<T>, target_power: T) -> Result<T> {
    let integral = grid.power_integral();
    if !(integral > T::zero()) {
        return Err(Error::ZeroPowerPattern);
    }
    Ok(T::lit(4.0) * T::PI() * target_power / integral)
}
