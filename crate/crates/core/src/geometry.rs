//! Swarm spatial state: placement, displacement, bound and separation
//! diagnostics, and the steering direction toward the base station.

use std::fmt::Write as _;
use std::ops::{Add, Mul, Neg, Sub};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::fmt_num;
use crate::scalar::Scalar;

/// Rejection-sampling budget per UAV.
pub const PLACEMENT_ATTEMPTS: usize = 10_000;

/// Cartesian 3-vector in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Scalar> Vec3<T> {
    pub fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    pub fn dot(self, other: Self) -> T {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm(self) -> T {
        self.dot(self).sqrt()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Unit vector for elevation `theta` (from +z) and azimuth `phi`.
    pub fn from_spherical(theta: T, phi: T) -> Self {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        Self::new(st * cp, st * sp, ct)
    }
}

impl<T: Scalar> Add for Vec3<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Scalar> Sub for Vec3<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Scalar> Neg for Vec3<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

impl<T: Scalar> Mul<T> for Vec3<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }
}

/// Operating airspace. Horizontal extents are centered on the origin:
/// `x ∈ [-x_extent/2, x_extent/2]`, likewise for `y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArenaConfig<T> {
    pub x_extent: T,
    pub y_extent: T,
    pub z_min: T,
    pub z_max: T,
    pub d_min: T,
}

impl<T: Scalar> ArenaConfig<T> {
    /// 50 × 50 m footprint, 30–50 m altitude band, 0.5 m separation.
    pub fn paper_default() -> Self {
        Self {
            x_extent: T::lit(50.0),
            y_extent: T::lit(50.0),
            z_min: T::lit(30.0),
            z_max: T::lit(50.0),
            d_min: T::lit(0.5),
        }
    }

    /// Invariant violations as `(field, message)` pairs.
    pub fn issues(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        if !(self.x_extent > T::zero()) {
            out.push(("x_extent", format!("must be > 0, got {}", self.x_extent)));
        }
        if !(self.y_extent > T::zero()) {
            out.push(("y_extent", format!("must be > 0, got {}", self.y_extent)));
        }
        if !(self.z_min < self.z_max) {
            out.push(("z_max", format!("z_min ({}) must be < z_max ({})", self.z_min, self.z_max)));
        }
        if !(self.d_min > T::zero()) {
            out.push(("d_min", format!("must be > 0, got {}", self.d_min)));
        }
        out
    }

    pub fn half_x(&self) -> T {
        self.x_extent / T::lit(2.0)
    }

    pub fn half_y(&self) -> T {
        self.y_extent / T::lit(2.0)
    }

    pub fn z_mid(&self) -> T {
        (self.z_min + self.z_max) / T::lit(2.0)
    }

    pub fn z_half(&self) -> T {
        (self.z_max - self.z_min) / T::lit(2.0)
    }

    pub fn contains(&self, p: Vec3<T>) -> bool {
        p.z >= self.z_min
            && p.z <= self.z_max
            && p.x.abs() <= self.half_x()
            && p.y.abs() <= self.half_y()
    }

    /// Upper bound on how many points with pairwise spacing `d_min` fit in
    /// the box (densest sphere packing over the inflated volume).
    fn packing_capacity(&self) -> f64 {
        let r = self.d_min.as_f64() / 2.0;
        let vol = (self.x_extent.as_f64() + 2.0 * r)
            * (self.y_extent.as_f64() + 2.0 * r)
            * (self.z_max.as_f64() - self.z_min.as_f64() + 2.0 * r);
        let ball = 4.0 / 3.0 * std::f64::consts::PI * r.powi(3);
        vol / ball * (std::f64::consts::PI / 18f64.sqrt())
    }
}

/// One array element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UavState<T> {
    pub position: Vec3<T>,
    /// Excitation current weight in `[0, 1]`.
    pub weight: T,
}

/// Ordered swarm at a timeslot. UAV identity is its index.
#[derive(Debug, Clone, PartialEq)]
pub struct SwarmState<T> {
    pub uavs: Vec<UavState<T>>,
    pub timeslot: usize,
}

impl<T: Scalar> SwarmState<T> {
    pub fn from_positions(positions: &[Vec3<T>], weight: T) -> Self {
        let uavs = positions.iter().map(|&position| UavState { position, weight }).collect();
        Self { uavs, timeslot: 0 }
    }

    pub fn len(&self) -> usize {
        self.uavs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.uavs.is_empty()
    }

    pub fn positions(&self) -> impl Iterator<Item = Vec3<T>> + '_ {
        self.uavs.iter().map(|u| u.position)
    }

    pub fn weights(&self) -> Vec<T> {
        self.uavs.iter().map(|u| u.weight).collect()
    }

    pub fn centroid(&self) -> Vec3<T> {
        let n = T::from_count(self.len());
        let sum = self.positions().fold(Vec3::zero(), |acc, p| acc + p);
        sum * (T::one() / n)
    }

    /// Assigns weights clamped to `[0, 1]`.
    pub fn set_weights(&mut self, weights: &[T]) -> Result<()> {
        if weights.len() != self.len() {
            return Err(Error::LengthMismatch { expected: self.len(), actual: weights.len() });
        }
        for (u, &w) in self.uavs.iter_mut().zip(weights) {
            u.weight = w.max(T::zero()).min(T::one());
        }
        Ok(())
    }
}

/// Ground (or otherwise out-of-band) receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaseStation<T> {
    pub position: Vec3<T>,
}

impl<T: Scalar> BaseStation<T> {
    pub fn is_valid_for(&self, arena: &ArenaConfig<T>) -> bool {
        let p = self.position;
        p.is_finite() && (p.z < arena.z_min || p.z > arena.z_max)
    }
}

/// Places `n` UAVs uniformly inside the arena with pairwise spacing of at
/// least `d_min`; every weight starts at 1.
pub fn build_swarm<T: Scalar>(arena: &ArenaConfig<T>, n: usize, seed: u64) -> Result<SwarmState<T>> {
    if n as f64 > arena.packing_capacity() {
        return Err(Error::PlacementFailure {
            index: arena.packing_capacity().floor() as usize,
            d_min: arena.d_min.as_f64(),
            attempts: 0,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (hx, hy) = (arena.half_x().as_f64(), arena.half_y().as_f64());
    let (z0, z1) = (arena.z_min.as_f64(), arena.z_max.as_f64());
    let d_min = arena.d_min;
    let mut positions: Vec<Vec3<T>> = Vec::with_capacity(n);
    for index in 0..n {
        let placed = (0..PLACEMENT_ATTEMPTS).find_map(|_| {
            let p = Vec3::new(
                T::lit(rng.gen_range(-hx..hx)),
                T::lit(rng.gen_range(-hy..hy)),
                T::lit(rng.gen_range(z0..z1)),
            );
            positions.iter().all(|&q| (p - q).norm() >= d_min).then_some(p)
        });
        match placed {
            Some(p) => positions.push(p),
            None => {
                return Err(Error::PlacementFailure {
                    index,
                    d_min: d_min.as_f64(),
                    attempts: PLACEMENT_ATTEMPTS,
                })
            }
        }
    }
    Ok(SwarmState::from_positions(&positions, T::one()))
}

/// Nudges every UAV along the centroid→BS direction by less than one
/// wavelength so that all elements arrive in phase at the base station.
///
/// The per-UAV shifts are re-centered to zero mean, so the centroid (and with
/// it the steering direction) is unchanged.
pub fn phase_align<T: Scalar>(
    swarm: &SwarmState<T>,
    bs: &BaseStation<T>,
    wavelength: T,
) -> Result<SwarmState<T>> {
    let (theta, phi) = steering_direction(swarm, bs)?;
    let u = Vec3::from_spherical(theta, phi);
    let shifts: Vec<T> = swarm
        .positions()
        .map(|p| {
            let proj = p.dot(u);
            let r = proj - (proj / wavelength).floor() * wavelength;
            if r > T::zero() {
                wavelength - r
            } else {
                T::zero()
            }
        })
        .collect();
    let mean = shifts.iter().copied().sum::<T>() / T::from_count(shifts.len());
    let mut out = swarm.clone();
    for (uav, s) in out.uavs.iter_mut().zip(shifts) {
        uav.position = uav.position + u * (s - mean);
    }
    Ok(out)
}

/// Translates each UAV by its delta. Weights and timeslot are untouched.
pub fn apply_displacement<T: Scalar>(swarm: &SwarmState<T>, deltas: &[Vec3<T>]) -> Result<SwarmState<T>> {
    if deltas.len() != swarm.len() {
        return Err(Error::LengthMismatch { expected: swarm.len(), actual: deltas.len() });
    }
    let mut out = swarm.clone();
    for (uav, &d) in out.uavs.iter_mut().zip(deltas) {
        uav.position = uav.position + d;
    }
    Ok(out)
}

/// Per-UAV flag: altitude outside `[z_min, z_max]` or footprint outside the
/// horizontal extents.
pub fn check_bounds<T: Scalar>(swarm: &SwarmState<T>, arena: &ArenaConfig<T>) -> Vec<bool> {
    swarm.positions().map(|p| !arena.contains(p)).collect()
}

/// Unordered pairs closer than `d_min` (strict), lexicographically sorted.
pub fn check_collisions<T: Scalar>(swarm: &SwarmState<T>, d_min: T) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for i in 0..swarm.len() {
        for j in (i + 1)..swarm.len() {
            if (swarm.uavs[i].position - swarm.uavs[j].position).norm() < d_min {
                pairs.push((i, j));
            }
        }
    }
    pairs
}

/// Elevation `θ ∈ [0, π]` from +z and azimuth `φ ∈ (-π, π]` of the
/// centroid→BS vector.
pub fn steering_direction<T: Scalar>(swarm: &SwarmState<T>, bs: &BaseStation<T>) -> Result<(T, T)> {
    let d = bs.position - swarm.centroid();
    let r = d.norm();
    if !(r > T::zero()) {
        return Err(Error::DegenerateDirection);
    }
    let theta = (d.z / r).max(-T::one()).min(T::one()).acos();
    let mut phi = d.y.atan2(d.x);
    if phi <= -T::PI() {
        phi = T::PI();
    }
    Ok((theta, phi))
}

/// Writes `index,x,y,z,weight` rows with a header.
pub fn write_snapshot<T: Scalar>(swarm: &SwarmState<T>) -> String {
    let mut s = String::from("index,x,y,z,weight\n");
    for (i, u) in swarm.uavs.iter().enumerate() {
        let p = u.position;
        let _ = writeln!(
            s,
            "{i},{},{},{},{}",
            fmt_num(p.x),
            fmt_num(p.y),
            fmt_num(p.z),
            fmt_num(u.weight)
        );
    }
    s
}

/// Parses the snapshot format produced by [`write_snapshot`].
pub fn read_snapshot<T: Scalar>(text: &str) -> Result<SwarmState<T>> {
    let parse_err = |line: usize, message: String| Error::Parse {
        what: format!("swarm snapshot line {line}"),
        message,
    };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, header)) if header.trim() == "index,x,y,z,weight" => {}
        Some((n, other)) => return Err(parse_err(n + 1, format!("unexpected header {other:?}"))),
        None => return Err(parse_err(1, "empty snapshot".into())),
    }
    let mut uavs = Vec::new();
    for (n, line) in lines {
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 5 {
            return Err(parse_err(n + 1, format!("expected 5 columns, got {}", cols.len())));
        }
        let index: usize = cols[0].parse().map_err(|e| parse_err(n + 1, format!("{e}")))?;
        if index != uavs.len() {
            return Err(parse_err(n + 1, format!("index {index} out of order")));
        }
        let mut v = [0.0f64; 4];
        for (slot, col) in v.iter_mut().zip(&cols[1..]) {
            *slot = col.parse().map_err(|e| parse_err(n + 1, format!("{e}")))?;
        }
        uavs.push(UavState {
            position: Vec3::new(T::lit(v[0]), T::lit(v[1]), T::lit(v[2])),
            weight: T::lit(v[3]),
        });
    }
    if uavs.is_empty() {
        return Err(parse_err(2, "no UAV rows".into()));
    }
    Ok(SwarmState { uavs, timeslot: 0 })
}
