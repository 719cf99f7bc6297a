//! Unit-cube geometry: transmission range, the small-cube grid used by the
//! TDMA schedule and routing, and the ground lattice of base stations.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::NetworkConfig;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dist2(&self, other: &Point3) -> f64 {
        let (dx, dy, dz) = (self.x - other.x, self.y - other.y, self.z - other.z);
        dx * dx + dy * dy + dz * dz
    }

    pub fn dist(&self, other: &Point3) -> f64 {
        self.dist2(other).sqrt()
    }

    pub fn check_in_unit_cube(&self) -> Result<()> {
        for (axis, value) in [('x', self.x), ('y', self.y), ('z', self.z)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::OutOfDomain { axis, value });
            }
        }
        Ok(())
    }
}

/// Integer cube coordinates `(i, j, k)`.
pub type CubeIdx = [u32; 3];

/// Transmission range `c_r * (ln n / n)^(1/3)`.
///
/// `n` is real-valued so the formula can be evaluated off the integers.
pub fn transmission_range(n: f64, c_r: f64) -> Result<f64> {
    if !(n >= 2.0) {
        return Err(Error::InvalidConfig(format!("transmission range needs n >= 2, got {n}")));
    }
    if !(c_r > 0.0) {
        return Err(Error::InvalidConfig(format!("c_r must be > 0, got {c_r}")));
    }
    Ok(c_r * (n.ln() / n).cbrt())
}

/// Partition of the unit cube into `K^3` small cubes of side `s = c1 r(n)`.
/// The last layer on each axis is truncated by the cube boundary.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CubeGrid {
    pub side: f64,
    pub k: u32,
    /// Set when `s >= 1` and the grid collapsed to a single cube.
    pub degenerate: bool,
}

impl CubeGrid {
    pub fn from_side(side: f64) -> Self {
        if side >= 1.0 {
            return Self { side, k: 1, degenerate: true };
        }
        let k = (1.0 / side).ceil() as u32;
        Self { side, k: k.max(1), degenerate: false }
    }

    pub fn cube_count(&self) -> usize {
        (self.k as usize).pow(3)
    }

    /// Largest cube-grid L1 distance, `3 (K - 1)`.
    pub fn max_hops(&self) -> u32 {
        3 * (self.k - 1)
    }

    /// Cube of `p`; coordinates equal to 1 fold into the last cube.
    pub fn cube_index(&self, p: &Point3) -> Result<CubeIdx> {
        p.check_in_unit_cube()?;
        Ok(self.cube_index_unchecked(p))
    }

    pub(crate) fn cube_index_unchecked(&self, p: &Point3) -> CubeIdx {
        let last = self.k - 1;
        let axis = |v: f64| ((v / self.side).floor() as u32).min(last);
        [axis(p.x), axis(p.y), axis(p.z)]
    }

    pub fn linear(&self, c: CubeIdx) -> usize {
        let k = self.k as usize;
        (c[2] as usize * k + c[1] as usize) * k + c[0] as usize
    }
}

pub fn build_cube_grid(config: &NetworkConfig) -> Result<CubeGrid> {
    config.validate()?;
    let r = transmission_range(config.n as f64, config.c_r)?;
    Ok(CubeGrid::from_side(config.c1 * r))
}

pub fn cube_l1_distance(a: CubeIdx, b: CubeIdx) -> u32 {
    a.iter().zip(b.iter()).map(|(x, y)| x.abs_diff(*y)).sum()
}

/// `n` i.i.d. uniform points in the unit cube.
pub fn place_nodes<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<Point3> {
    (0..n).map(|_| Point3::new(rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>())).collect()
}

/// Square lattice of base stations on the ground, one at the centre of each
/// of the `m = side^2` cells.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaseStationGrid {
    pub side: u32,
    pub centers: Vec<(f64, f64)>,
}

impl BaseStationGrid {
    pub fn with_side(side: u32) -> Self {
        let side = side.max(1);
        let step = 1.0 / side as f64;
        let mut centers = Vec::with_capacity((side * side) as usize);
        for row in 0..side {
            for col in 0..side {
                centers.push(((col as f64 + 0.5) * step, (row as f64 + 0.5) * step));
            }
        }
        Self { side, centers }
    }

    pub fn m(&self) -> usize {
        self.centers.len()
    }

    /// Index of the nearest BS to the ground projection of `p`; ties go to the
    /// lowest index.
    pub fn associate(&self, p: &Point3) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, &(cx, cy)) in self.centers.iter().enumerate() {
            let d = (p.x - cx).powi(2) + (p.y - cy).powi(2);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }
}

/// BS lattice with `round(1/r(n))` cells per side.
pub fn place_base_stations(n: usize, c_r: f64) -> Result<BaseStationGrid> {
    let r = transmission_range(n as f64, c_r)?;
    Ok(BaseStationGrid::with_side((1.0 / r).round() as u32))
}

pub fn associate_bs(p: &Point3, bs: &BaseStationGrid) -> usize {
    bs.associate(p)
}
