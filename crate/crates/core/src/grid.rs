//! Finite lattice `a·[-L, L]^d` standing in for `R^d`.
//!
//! Sites are stored row-major with the last axis varying fastest. Site
//! coordinates are signed integers in `[-L, L]`; the physical position of a
//! site is its coordinate vector times the spacing.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    /// Mass leaving the lattice is folded back inside (mirror about the edge site).
    Reflecting,
    /// Mass leaving the lattice is dropped.
    Absorbing,
}

impl std::str::FromStr for Boundary {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "reflecting" => Ok(Boundary::Reflecting),
            "absorbing" => Ok(Boundary::Absorbing),
            other => Err(format!("unknown boundary '{other}'")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub dimension: usize,
    pub half_width: usize,
    pub spacing: f64,
    pub boundary: Boundary,
}

impl Grid {
    pub fn new(dimension: usize, half_width: usize, spacing: f64, boundary: Boundary) -> Result<Self> {
        if dimension == 0 {
            return Err(invalid("grid dimension must be at least 1"));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(invalid(format!("grid spacing must be positive, got {spacing}")));
        }
        Ok(Grid { dimension, half_width, spacing, boundary })
    }

    /// Sites per axis, `2L + 1`.
    pub fn side(&self) -> usize {
        2 * self.half_width + 1
    }

    /// Total number of sites.
    pub fn len(&self) -> usize {
        self.side().pow(self.dimension as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn half_width_i(&self) -> i64 {
        self.half_width as i64
    }

    /// Flat index of the site at coordinates `coords`, or `None` outside the lattice.
    pub fn flat(&self, coords: &[i64]) -> Option<usize> {
        if coords.len() != self.dimension {
            return None;
        }
        let l = self.half_width_i();
        let side = self.side();
        let mut idx = 0usize;
        for &c in coords {
            if c < -l || c > l {
                return None;
            }
            idx = idx * side + (c + l) as usize;
        }
        Some(idx)
    }

    pub fn coords(&self, flat: usize) -> Vec<i64> {
        let mut out = vec![0i64; self.dimension];
        self.coords_into(flat, &mut out);
        out
    }

    pub fn coords_into(&self, mut flat: usize, out: &mut [i64]) {
        let side = self.side();
        let l = self.half_width_i();
        for slot in out.iter_mut().rev() {
            *slot = (flat % side) as i64 - l;
            flat /= side;
        }
    }

    pub fn position(&self, flat: usize) -> Vec<f64> {
        self.coords(flat).into_iter().map(|c| c as f64 * self.spacing).collect()
    }

    pub fn origin(&self) -> usize {
        self.len() / 2
    }

    /// True when any coordinate sits on the outermost layer.
    pub fn is_boundary(&self, flat: usize) -> bool {
        let l = self.half_width_i();
        self.coords(flat).iter().any(|c| c.abs() == l)
    }

    /// `‖x‖_∞` of a site in physical units.
    pub fn sup_norm(&self, flat: usize) -> f64 {
        let side = self.side();
        let l = self.half_width_i();
        let mut f = flat;
        let mut m = 0i64;
        for _ in 0..self.dimension {
            let c = (f % side) as i64 - l;
            m = m.max(c.abs());
            f /= side;
        }
        m as f64 * self.spacing
    }

    /// Physical extent of the lattice from the origin, `L·a`.
    pub fn extent(&self) -> f64 {
        self.half_width as f64 * self.spacing
    }
}

/// Axis-aligned box of sites, inclusive bounds in site coordinates.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiteBox {
    pub lo: Vec<i64>,
    pub hi: Vec<i64>,
}

impl SiteBox {
    pub fn new(lo: Vec<i64>, hi: Vec<i64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(invalid("site box bounds must have equal, nonzero length"));
        }
        if lo.iter().zip(&hi).any(|(a, b)| a > b) {
            return Err(invalid("site box is empty"));
        }
        Ok(SiteBox { lo, hi })
    }

    /// Cube `[-r, r]^d` around the origin.
    pub fn centered(dimension: usize, radius: i64) -> Self {
        SiteBox { lo: vec![-radius; dimension], hi: vec![radius; dimension] }
    }

    /// Whole lattice.
    pub fn full(grid: &Grid) -> Self {
        Self::centered(grid.dimension, grid.half_width_i())
    }

    pub fn contains(&self, coords: &[i64]) -> bool {
        coords.iter().zip(self.lo.iter().zip(&self.hi)).all(|(c, (lo, hi))| c >= lo && c <= hi)
    }

    pub fn fits(&self, grid: &Grid) -> bool {
        let l = grid.half_width_i();
        self.lo.len() == grid.dimension && self.lo.iter().all(|&c| c >= -l) && self.hi.iter().all(|&c| c <= l)
    }

    /// Flat indices of the sites in the box, in lattice order.
    pub fn sites(&self, grid: &Grid) -> Vec<usize> {
        (0..grid.len()).filter(|&i| self.contains(&grid.coords(i))).collect()
    }

    pub fn count(&self) -> usize {
        self.lo.iter().zip(&self.hi).map(|(a, b)| (b - a + 1) as usize).product()
    }

    /// Mask over the lattice, true inside the box.
    pub fn mask(&self, grid: &Grid) -> Vec<bool> {
        let mut c = vec![0i64; grid.dimension];
        (0..grid.len())
            .map(|i| {
                grid.coords_into(i, &mut c);
                self.contains(&c)
            })
            .collect()
    }
}
