//! Horizontal wind disturbance models and the per-timeslot displacement they
//! induce on the swarm.
//!
//! Each variant exposes a closed-form cumulative drift `Δχ(t)`; per-step
//! deltas are differences of that closed form so that a whole episode
//! telescopes back onto `Δχ(T)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{SwarmState, Vec3};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantWindParams<T> {
    /// `V_c`, m/s.
    pub speed: T,
    /// `θ_c`, radians in the horizontal plane.
    pub direction: T,
}

/// Linear shear `V_w(z) = V_0 + k_w z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShearWindParams<T> {
    pub ground_speed: T,
    /// (m/s)/m
    pub gradient: T,
    pub direction: T,
}

/// Sinusoidal turbulence surrogate `V(t) = V̄ + σ_V sin(ω t + φ)` plus the
/// logarithmic profile constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TurbulentWindParams<T> {
    pub mean_speed: T,
    pub intensity: T,
    /// rad/s
    pub frequency: T,
    /// Per-episode random phase, radians.
    pub phase: T,
    pub direction: T,
    pub reference_speed: T,
    /// Surface roughness length, meters.
    pub roughness: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WindModel<T> {
    Constant(ConstantWindParams<T>),
    Shear(ShearWindParams<T>),
    Turbulent(TurbulentWindParams<T>),
}

impl<T: Scalar> WindModel<T> {
    pub fn calm() -> Self {
        WindModel::Constant(ConstantWindParams { speed: T::zero(), direction: T::zero() })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            WindModel::Constant(_) => "constant",
            WindModel::Shear(_) => "shear",
            WindModel::Turbulent(_) => "turbulent",
        }
    }

    pub fn direction(&self) -> T {
        match self {
            WindModel::Constant(p) => p.direction,
            WindModel::Shear(p) => p.direction,
            WindModel::Turbulent(p) => p.direction,
        }
    }
}

impl<T: Scalar> ShearWindParams<T> {
    pub fn speed_at(&self, z: T) -> T {
        self.ground_speed + self.gradient * z
    }
}

impl<T: Scalar> TurbulentWindParams<T> {
    /// Logarithmic-profile speed `V_ref / ln(z / z_0)`, defined for `z > z_0`.
    pub fn profile_speed(&self, z: T) -> Option<T> {
        (z > self.roughness).then(|| self.reference_speed / (z / self.roughness).ln())
    }

    fn magnitude(&self, t: T) -> T {
        let oscillation = if self.frequency == T::zero() {
            self.intensity * self.phase.sin() * t
        } else {
            (self.intensity / self.frequency) * (self.phase.cos() - (self.frequency * t + self.phase).cos())
        };
        self.mean_speed * t + oscillation
    }
}

/// Uniform phase in `[0, 2π)` derived from an episode seed.
pub fn episode_phase(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x005E_ED0F_7DB0);
    rng.gen_range(0.0..std::f64::consts::TAU)
}

fn along<T: Scalar>(direction: T, magnitude: T) -> [T; 2] {
    let (s, c) = direction.sin_cos();
    [magnitude * c, magnitude * s]
}

/// Cumulative drift `V_c t (cos θ_c, sin θ_c)`.
pub fn constant_displacement<T: Scalar>(p: &ConstantWindParams<T>, t: T) -> [T; 2] {
    along(p.direction, p.speed * t)
}

/// Cumulative shear drift at a fixed altitude `z`.
pub fn shear_displacement<T: Scalar>(p: &ShearWindParams<T>, z: T, t: T) -> Result<[T; 2]> {
    Ok(along(p.direction, shear_speed(p, z)? * t))
}

fn shear_speed<T: Scalar>(p: &ShearWindParams<T>, z: T) -> Result<T> {
    let v = p.speed_at(z);
    if v < T::zero() {
        return Err(Error::NegativeSpeed { speed: v.as_f64(), altitude: z.as_f64() });
    }
    Ok(v)
}

/// Instantaneous turbulent speed.
pub fn turbulent_speed<T: Scalar>(p: &TurbulentWindParams<T>, t: T) -> T {
    p.mean_speed + p.intensity * (p.frequency * t + p.phase).sin()
}

/// Closed-form integral of [`turbulent_speed`] over `[0, t]` along `θ_t`.
/// At zero frequency the `ω → 0` limit is used.
pub fn turbulent_displacement<T: Scalar>(p: &TurbulentWindParams<T>, t: T) -> [T; 2] {
    along(p.direction, p.magnitude(t))
}

/// Per-UAV incremental drift `Δχ(t + dt) − Δχ(t)`; the z component is zero.
/// Shear is evaluated at each UAV's current altitude.
pub fn wind_deltas<T: Scalar>(model: &WindModel<T>, swarm: &SwarmState<T>, t: T, dt: T) -> Result<Vec<Vec3<T>>> {
    let t1 = t + dt;
    let planar = |dir: T, m0: T, m1: T| {
        let d = along(dir, m1 - m0);
        Vec3::new(d[0], d[1], T::zero())
    };
    match model {
        WindModel::Constant(p) => {
            let d = planar(p.direction, p.speed * t, p.speed * t1);
            Ok(vec![d; swarm.len()])
        }
        WindModel::Turbulent(p) => {
            let d = planar(p.direction, p.magnitude(t), p.magnitude(t1));
            Ok(vec![d; swarm.len()])
        }
        WindModel::Shear(p) => swarm
            .positions()
            .map(|pos| {
                let v = shear_speed(p, pos.z)?;
                Ok(planar(p.direction, v * t, v * t1))
            })
            .collect(),
    }
}

/// Scalar wind observation `(V_t, θ_t)` exposed to the controller. Shear
/// reports the speed at the swarm centroid altitude.
pub fn wind_observation<T: Scalar>(model: &WindModel<T>, swarm: &SwarmState<T>, t: T) -> (T, T) {
    match model {
        WindModel::Constant(p) => (p.speed, p.direction),
        WindModel::Shear(p) => (p.speed_at(swarm.centroid().z), p.direction),
        WindModel::Turbulent(p) => (turbulent_speed(p, t), p.direction),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn turb(mean: f64, sigma: f64, omega: f64, phase: f64) -> TurbulentWindParams<f64> {
        TurbulentWindParams {
            mean_speed: mean,
            intensity: sigma,
            frequency: omega,
            phase,
            direction: 0.3,
            reference_speed: 5.0,
            roughness: 0.1,
        }
    }

    fn two_uavs(z0: f64, z1: f64) -> SwarmState<f64> {
        SwarmState::from_positions(&[Vec3::new(0.0, 0.0, z0), Vec3::new(3.0, 1.0, z1)], 1.0)
    }

    #[test]
    fn constant_examples() {
        let p = ConstantWindParams { speed: 2.0, direction: 0.0 };
        assert_eq!(constant_displacement(&p, 3.0), [6.0, 0.0]);
        let calm = ConstantWindParams { speed: 0.0, direction: 1.2 };
        assert_eq!(constant_displacement(&calm, 7.0), [0.0, 0.0]);
        let north = ConstantWindParams { speed: 1.0, direction: FRAC_PI_2 };
        let d = constant_displacement(&north, 10.0);
        assert!(d[0].abs() < 1e-12 && (d[1] - 10.0).abs() < 1e-12);
    }

    #[test]
    fn constant_is_linear_in_time() {
        let p = ConstantWindParams { speed: 2.7, direction: 0.9 };
        let a = constant_displacement(&p, 1.25);
        let b = constant_displacement(&p, 2.5);
        assert_eq!(b, [2.0 * a[0], 2.0 * a[1]]);
    }

    #[test]
    fn shear_examples() {
        let p = ShearWindParams { ground_speed: 1.0, gradient: 0.1, direction: 0.0 };
        let d: [f64; 2] = shear_displacement(&p, 30.0, 2.0).unwrap();
        assert!((d[0] - 8.0).abs() < 1e-12 && d[1] == 0.0);
        let flat = ShearWindParams { ground_speed: 1.5, gradient: 0.0, direction: 0.4 };
        let c = ConstantWindParams { speed: 1.5, direction: 0.4 };
        assert_eq!(shear_displacement(&flat, 42.0, 3.0).unwrap(), constant_displacement(&c, 3.0));
        let bad = ShearWindParams { ground_speed: 1.0, gradient: -0.1, direction: 0.0 };
        assert!(matches!(shear_displacement(&bad, 40.0, 1.0), Err(Error::NegativeSpeed { .. })));
    }

    #[test]
    fn turbulent_examples() {
        assert_eq!(turbulent_speed(&turb(2.0, 0.0, 3.0, 1.0), 17.0), 2.0);
        assert!((turbulent_speed(&turb(2.0, 1.0, PI, 0.0), 0.5) - 3.0).abs() < 1e-15);
        let p = TurbulentWindParams { direction: 0.0, ..turb(0.0, 1.0, 1.0, 0.0) };
        assert!((turbulent_displacement(&p, PI)[0] - 2.0).abs() < 1e-15);
        let still = TurbulentWindParams { direction: 0.0, ..turb(1.5, 0.0, 2.0, 0.7) };
        assert_eq!(turbulent_displacement(&still, 4.0), [6.0, 0.0]);
    }

    #[test]
    fn turbulent_period_average_is_mean_speed() {
        // Composite Simpson over one period.
        let p = turb(2.0, 0.8, 1.3, 0.4);
        let period = 2.0 * PI / p.frequency;
        let n = 20_000;
        let h = period / n as f64;
        let mut acc = turbulent_speed(&p, 0.0) + turbulent_speed(&p, period);
        for i in 1..n {
            acc += if i % 2 == 1 { 4.0 } else { 2.0 } * turbulent_speed(&p, i as f64 * h);
        }
        assert!((acc * h / 3.0 / period - 2.0).abs() < 1e-9);
    }

    #[test]
    fn turbulent_closed_form_matches_fine_quadrature() {
        for &(mean, sigma, omega, phase, t) in
            &[(1.0f64, 0.5, 0.7, 0.2, 13.0f64), (3.0, 2.0, 2.5, 4.0, 9.5), (0.0, 1.0, 0.05, 1.0, 100.0)]
        {
            let p = TurbulentWindParams { direction: 0.0, ..turb(mean, sigma, omega, phase) };
            let n = (t / 1e-4).round() as usize;
            let h = t / n as f64;
            let mut acc = 0.5 * (turbulent_speed(&p, 0.0) + turbulent_speed(&p, t));
            for i in 1..n {
                acc += turbulent_speed(&p, i as f64 * h);
            }
            let oracle = acc * h;
            assert!((turbulent_displacement(&p, t)[0] - oracle).abs() < 1e-6);
        }
    }

    #[test]
    fn zero_frequency_uses_limit() {
        let p = TurbulentWindParams { direction: 0.0, ..turb(1.0, 0.5, 0.0, 0.6) };
        let d = turbulent_displacement(&p, 4.0)[0];
        assert!((d - (4.0 + 0.5 * 0.6f64.sin() * 4.0)).abs() < 1e-12);
        let near = TurbulentWindParams { direction: 0.0, ..turb(1.0, 0.5, 1e-7, 0.6) };
        assert!((turbulent_displacement(&near, 4.0)[0] - d).abs() < 1e-5);
    }

    #[test]
    fn deltas_examples() {
        let s = two_uavs(30.0, 50.0);
        let c = WindModel::Constant(ConstantWindParams { speed: 2.0, direction: 0.0 });
        let d = wind_deltas(&c, &s, 3.0, 0.5).unwrap();
        assert!(d.iter().all(|v| *v == Vec3::new(1.0, 0.0, 0.0)));
        let sh = WindModel::Shear(ShearWindParams { ground_speed: 1.0, gradient: 0.1, direction: 0.0 });
        let d = wind_deltas(&sh, &s, 0.0, 1.0).unwrap();
        assert!((d[0].norm() - 4.0).abs() < 1e-12 && (d[1].norm() - 6.0).abs() < 1e-12);
        assert!(d.iter().all(|v| v.z == 0.0));
    }

    #[test]
    fn turbulent_episode_telescopes() {
        let p = turb(1.2, 0.9, 0.8, 2.2);
        let m = WindModel::Turbulent(p);
        let s = two_uavs(35.0, 45.0);
        let (dt, steps) = (0.5, 200);
        let mut sum = [0.0, 0.0];
        for k in 0..steps {
            let d = wind_deltas(&m, &s, k as f64 * dt, dt).unwrap()[0];
            sum[0] += d.x;
            sum[1] += d.y;
        }
        let exact = turbulent_displacement(&p, steps as f64 * dt);
        assert!((sum[0] - exact[0]).abs() < 1e-9 && (sum[1] - exact[1]).abs() < 1e-9);
    }

    #[test]
    fn stepwise_altitude_matches_fine_integration() {
        // Altitude schedule held piecewise constant within each step.
        let p = ShearWindParams { ground_speed: 0.5, gradient: 0.05, direction: 1.0 };
        let m = WindModel::Shear(p);
        let dt = 0.5;
        let alts = [30.0, 32.5, 31.0, 45.0, 49.0, 40.0];
        let mut sum = 0.0;
        let mut oracle = 0.0;
        for (k, &z) in alts.iter().enumerate() {
            let s = SwarmState::from_positions(&[Vec3::new(0.0, 0.0, z)], 1.0);
            sum += wind_deltas(&m, &s, k as f64 * dt, dt).unwrap()[0].norm();
            let h = dt / 100.0;
            for i in 0..100 {
                let tau0 = k as f64 * dt + i as f64 * h;
                let z_at = |tau: f64| alts[((tau / dt).floor() as usize).min(k)];
                oracle += 0.5 * h * (p.speed_at(z_at(tau0)) + p.speed_at(z_at(tau0 + h * 0.999_999)));
            }
        }
        assert!((sum - oracle).abs() < 1e-9 * alts.len() as f64 * dt * 100.0);
    }

    #[test]
    fn observation_examples() {
        let s = two_uavs(30.0, 50.0);
        let c = WindModel::Constant(ConstantWindParams { speed: 2.0, direction: PI });
        assert_eq!(wind_observation(&c, &s, 5.0), (2.0, PI));
        let sh = WindModel::Shear(ShearWindParams { ground_speed: 1.0, gradient: 0.1, direction: 0.2 });
        let (v, th) = wind_observation(&sh, &s, 5.0);
        assert!((v - 5.0).abs() < 1e-12 && th == 0.2);
        let t = WindModel::Turbulent(turb(2.5, 1.0, 1.0, 0.0));
        assert_eq!(wind_observation(&t, &s, 0.0), (2.5, 0.3));
    }

    #[test]
    fn profile_speed_is_reciprocal_log() {
        let p = turb(1.0, 0.0, 1.0, 0.0);
        let v = p.profile_speed(10.0).unwrap();
        assert!((v - 5.0 / (100.0f64).ln()).abs() < 1e-12);
        assert!(p.profile_speed(0.1).is_none());
    }

    #[test]
    fn episode_phase_is_seeded() {
        assert_eq!(episode_phase(9), episode_phase(9));
        assert_ne!(episode_phase(9), episode_phase(10));
        assert!((0.0..std::f64::consts::TAU).contains(&episode_phase(123)));
    }
}
