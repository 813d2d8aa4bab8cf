//! Array factor, radiated power and the two pattern metrics: directivity
//! toward the receiver and maximum sidelobe level.

mod grid;
mod mainlobe;

pub use grid::{directivity, pattern_grid, PatternGrid};
pub use mainlobe::{mainlobe_region, max_sidelobe_level, MainlobeRegion};

use num_complex::Complex;

use crate::error::Result;
use crate::geometry::{SwarmState, Vec3};
use crate::scalar::{to_db, Scalar};

/// Carrier parameters. `wavelength` and `wavenumber` are derived.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CarrierConfig<T> {
    pub frequency: T,
    pub speed_of_light: T,
    pub wavelength: T,
    pub wavenumber: T,
}

impl<T: Scalar> CarrierConfig<T> {
    pub fn new(frequency: T, speed_of_light: T) -> Self {
        let wavelength = speed_of_light / frequency;
        Self { frequency, speed_of_light, wavelength, wavenumber: T::TAU() / wavelength }
    }

    /// 3 GHz with `c = 3e8` m/s, giving λ = 0.1 m.
    pub fn paper_default() -> Self {
        Self::new(T::lit(3.0e9), T::lit(3.0e8))
    }
}

/// Angular sampling density for pattern evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Resolution {
    pub theta_samples: usize,
    pub phi_samples: usize,
}

impl Resolution {
    /// 1° grid used during training.
    pub const TRAIN: Resolution = Resolution { theta_samples: 181, phi_samples: 361 };
    /// 0.25° grid used for acceptance checks.
    pub const ACCEPTANCE: Resolution = Resolution { theta_samples: 721, phi_samples: 1441 };
}

/// Weighted element positions with the wavenumber folded in.
pub(crate) struct Elements<T> {
    k_pos: Vec<Vec3<T>>,
    weights: Vec<T>,
}

impl<T: Scalar> Elements<T> {
    pub(crate) fn new(swarm: &SwarmState<T>, carrier: &CarrierConfig<T>) -> Self {
        Self {
            k_pos: swarm.positions().map(|p| p * carrier.wavenumber).collect(),
            weights: swarm.weights(),
        }
    }

    #[inline]
    pub(crate) fn factor(&self, u: Vec3<T>) -> Complex<T> {
        let mut re = T::zero();
        let mut im = T::zero();
        for (kp, &w) in self.k_pos.iter().zip(&self.weights) {
            let (s, c) = kp.dot(u).sin_cos();
            re += w * c;
            im += w * s;
        }
        Complex::new(re, im)
    }
}

/// `Σ ω_i exp[j k (x_i sinθ cosφ + y_i sinθ sinφ + z_i cosθ)]`.
pub fn array_factor<T: Scalar>(swarm: &SwarmState<T>, carrier: &CarrierConfig<T>, theta: T, phi: T) -> Complex<T> {
    Elements::new(swarm, carrier).factor(Vec3::from_spherical(theta, phi))
}

/// `|AF|²`.
#[inline]
pub fn radiated_power<T: Scalar>(af: Complex<T>) -> T {
    af.norm_sqr()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatternMetrics<T> {
    pub directivity_linear: T,
    pub directivity_db: T,
    /// `None` when the mainlobe covers the whole sphere.
    pub msll_db: Option<T>,
    pub msll_linear: Option<T>,
    /// Grid direction of maximum power, radians.
    pub peak_direction: (T, T),
}

/// Evaluates one grid and derives both metrics from it. The directivity
/// numerator is the exact power toward `target`.
pub fn metrics<T: Scalar>(
    swarm: &SwarmState<T>,
    carrier: &CarrierConfig<T>,
    target: (T, T),
    resolution: Resolution,
) -> Result<PatternMetrics<T>> {
    let grid = pattern_grid(swarm, carrier, resolution.theta_samples, resolution.phi_samples)?;
    let target_power = radiated_power(array_factor(swarm, carrier, target.0, target.1));
    let d = directivity(&grid, target_power)?;
    let region = mainlobe_region(&grid, target);
    let msll = max_sidelobe_level(&grid, &region);
    Ok(PatternMetrics {
        directivity_linear: d,
        directivity_db: to_db(d),
        msll_db: msll.map(|m| m.0),
        msll_linear: msll.map(|m| m.1),
        peak_direction: grid.peak_direction(),
    })
}
