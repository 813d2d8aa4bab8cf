use std::collections::VecDeque;

use crate::scalar::{to_db, Scalar};

use super::grid::PatternGrid;

/// Cells belonging to the mainlobe around the target direction.
#[derive(Debug, Clone, PartialEq)]
pub struct MainlobeRegion {
    theta_samples: usize,
    phi_samples: usize,
    mask: Vec<bool>,
    /// Local maximum the region was grown from, as `(θ-index, φ-index)`.
    pub peak: (usize, usize),
}

impl MainlobeRegion {
    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.mask[i * self.phi_samples + j]
    }

    pub fn cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let np = self.phi_samples;
        self.mask.iter().enumerate().filter(|(_, &m)| m).map(move |(k, _)| (k / np, k % np))
    }

    pub fn len(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn covers_all(&self) -> bool {
        self.mask.iter().all(|&m| m)
    }

    /// Inclusive θ-index range spanned by the region.
    pub fn theta_extent(&self) -> (usize, usize) {
        self.cells().fold((usize::MAX, 0), |(lo, hi), (i, _)| (lo.min(i), hi.max(i)))
    }

    pub fn grid_shape(&self) -> (usize, usize) {
        (self.theta_samples, self.phi_samples)
    }
}

/// Logical sphere topology over the grid: each pole row is one cell and the
/// duplicated φ = π column folds onto φ = -π.
struct Sphere {
    nt: usize,
    /// Distinct φ columns.
    m: usize,
}

const NORTH: usize = 0;
const SOUTH: usize = 1;

impl Sphere {
    fn new(nt: usize, np: usize) -> Self {
        Self { nt, m: np - 1 }
    }

    fn count(&self) -> usize {
        2 + (self.nt - 2) * self.m
    }

    fn id(&self, i: usize, j: usize) -> usize {
        if i == 0 {
            NORTH
        } else if i + 1 == self.nt {
            SOUTH
        } else {
            2 + (i - 1) * self.m + j % self.m
        }
    }

    /// Representative grid index of a logical cell.
    fn cell(&self, id: usize) -> (usize, usize) {
        match id {
            NORTH => (0, 0),
            SOUTH => (self.nt - 1, 0),
            _ => (1 + (id - 2) / self.m, (id - 2) % self.m),
        }
    }

    fn neighbors(&self, id: usize, out: &mut Vec<usize>) {
        out.clear();
        match id {
            NORTH => out.extend((0..self.m).map(|j| self.id(1, j))),
            SOUTH => out.extend((0..self.m).map(|j| self.id(self.nt - 2, j))),
            _ => {
                let (i, j) = self.cell(id);
                out.push(self.id(i - 1, j));
                out.push(self.id(i + 1, j));
                out.push(self.id(i, (j + 1) % self.m));
                out.push(self.id(i, (j + self.m - 1) % self.m));
            }
        }
    }
}

/// Grows the mainlobe by monotone descent from the local maximum nearest the
/// target: a neighbor joins when its power does not exceed the power of the
/// cell it was reached from (up to a relative rounding slack of 1e-12). The
/// region therefore stops at the first nulls.
pub fn mainlobe_region<T: Scalar>(grid: &PatternGrid<T>, target: (T, T)) -> MainlobeRegion {
    let sphere = Sphere::new(grid.theta_samples, grid.phi_samples);
    let power = |id: usize| {
        let (i, j) = sphere.cell(id);
        grid.at(i, j)
    };

    let i0 = (target.0 / grid.theta_step()).round().to_usize().unwrap_or(0).min(grid.theta_samples - 1);
    let j0 = ((target.1 + T::PI()) / grid.phi_step()).round().to_usize().unwrap_or(0);
    let mut peak = sphere.id(i0, j0);
    let mut nbrs = Vec::with_capacity(sphere.m.max(4));
    loop {
        sphere.neighbors(peak, &mut nbrs);
        let mut best = peak;
        for &n in &nbrs {
            if power(n) > power(best) {
                best = n;
            }
        }
        if best == peak {
            break;
        }
        peak = best;
    }

    // Rounding noise in |AF|² must not split a flat plateau.
    let slack = grid.max_power() * T::lit(1e-12);
    let mut inside = vec![false; sphere.count()];
    inside[peak] = true;
    let mut queue = VecDeque::from([peak]);
    while let Some(c) = queue.pop_front() {
        let pc = power(c);
        sphere.neighbors(c, &mut nbrs);
        for &n in &nbrs {
            if !inside[n] && power(n) <= pc + slack {
                inside[n] = true;
                queue.push_back(n);
            }
        }
    }

    let (nt, np) = (grid.theta_samples, grid.phi_samples);
    let mut mask = vec![false; nt * np];
    for i in 0..nt {
        for j in 0..np {
            mask[i * np + j] = inside[sphere.id(i, j)];
        }
    }
    MainlobeRegion { theta_samples: nt, phi_samples: np, mask, peak: sphere.cell(peak) }
}

/// `(10 log10 r, r)` with `r = max_{∉ψ} P / max P`, or `None` when the
/// mainlobe covers every cell.
pub fn max_sidelobe_level<T: Scalar>(grid: &PatternGrid<T>, region: &MainlobeRegion) -> Option<(T, T)> {
    let np = grid.phi_samples;
    let outside = grid
        .power
        .iter()
        .enumerate()
        .filter(|(k, _)| !region.contains(k / np, k % np))
        .map(|(_, &p)| p)
        .fold(None, |acc: Option<T>, p| Some(acc.map_or(p, |a| a.max(p))))?;
    let peak = grid.max_power();
    if !(peak > T::zero()) || !(outside > T::zero()) {
        return None;
    }
    let ratio = outside / peak;
    Some((to_db(ratio), ratio))
}
