//! Spatial covariance functions `Q` with power-law tails.
//!
//! The environment is white in time and correlated in space by `Q`, with the
//! normalization `Q(0) = 1`. The canonical family is the generalized Cauchy
//! covariance `Q(x) = (1 + |x|²/ℓ²)^(-θ/2)`, a scale mixture of Gaussians and
//! therefore positive semidefinite in every dimension, with `Q(x)·(|x|/ℓ)^θ → 1`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::Grid;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Family {
    GeneralizedCauchy,
    /// `1{|x| ≤ ℓ}`. Only valid as a pinning potential, never as a field covariance.
    IndicatorBall,
    /// Radial profile sampled at `r = k·step`, linearly interpolated, zero past the end.
    /// Positive semidefiniteness is not checked here.
    Tabulated { step: f64, values: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CovarianceSpec {
    pub family: Family,
    /// Tail exponent θ (nominal for tabulated profiles).
    pub theta: f64,
    pub dimension: usize,
    pub length_scale: f64,
}

impl CovarianceSpec {
    pub fn generalized_cauchy(theta: f64, dimension: usize) -> Result<Self> {
        Self::new(Family::GeneralizedCauchy, theta, dimension, 1.0)
    }

    pub fn indicator_ball(radius: f64, dimension: usize) -> Result<Self> {
        Self::new(Family::IndicatorBall, f64::INFINITY, dimension, radius)
    }

    pub fn tabulated(step: f64, values: Vec<f64>, theta: f64, dimension: usize) -> Result<Self> {
        if !(step > 0.0) {
            return Err(invalid("tabulated step must be positive"));
        }
        if values.first() != Some(&1.0) {
            return Err(invalid("tabulated profile must start at exactly 1"));
        }
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(invalid("tabulated values must lie in [0, 1]"));
        }
        Self::new(Family::Tabulated { step, values }, theta, dimension, 1.0)
    }

    pub fn new(family: Family, theta: f64, dimension: usize, length_scale: f64) -> Result<Self> {
        if !(theta > 0.0) {
            return Err(invalid(format!("theta must be positive, got {theta}")));
        }
        if dimension == 0 {
            return Err(invalid("dimension must be at least 1"));
        }
        if !(length_scale > 0.0 && length_scale.is_finite()) {
            return Err(invalid(format!("length scale must be positive, got {length_scale}")));
        }
        Ok(CovarianceSpec { family, theta, dimension, length_scale })
    }

    pub fn with_length_scale(mut self, length_scale: f64) -> Result<Self> {
        if !(length_scale > 0.0 && length_scale.is_finite()) {
            return Err(invalid(format!("length scale must be positive, got {length_scale}")));
        }
        self.length_scale = length_scale;
        Ok(self)
    }

    /// Whether the family may be used to synthesize a Gaussian field.
    pub fn usable_as_covariance(&self) -> bool {
        !matches!(self.family, Family::IndicatorBall)
    }

    /// `Q` as a function of the Euclidean distance.
    pub fn eval_radius(&self, r: f64) -> f64 {
        match &self.family {
            Family::GeneralizedCauchy => {
                let s = r / self.length_scale;
                (1.0 + s * s).powf(-0.5 * self.theta)
            }
            Family::IndicatorBall => {
                if r <= self.length_scale {
                    1.0
                } else {
                    0.0
                }
            }
            Family::Tabulated { step, values } => {
                let u = r / step;
                let k = u.floor() as usize;
                if k + 1 >= values.len() {
                    if k + 1 == values.len() && u == k as f64 {
                        values[k]
                    } else {
                        0.0
                    }
                } else {
                    let frac = u - k as f64;
                    values[k] * (1.0 - frac) + values[k + 1] * frac
                }
            }
        }
    }

    /// `Q(displacement)`.
    pub fn eval(&self, displacement: &[f64]) -> Result<f64> {
        if displacement.len() != self.dimension {
            return Err(Error::DimensionMismatch { expected: self.dimension, got: displacement.len() });
        }
        let r2: f64 = displacement.iter().map(|x| x * x).sum();
        Ok(self.eval_radius(r2.sqrt()))
    }
}

pub fn eval_covariance(spec: &CovarianceSpec, displacement: &[f64]) -> Result<f64> {
    spec.eval(displacement)
}

/// Signed torus displacement of index `j` on a ring of `m` sites.
pub(crate) fn wrap(j: usize, m: usize) -> i64 {
    if 2 * j <= m {
        j as i64
    } else {
        j as i64 - m as i64
    }
}

/// Covariance of every site of a `sides[0] × … × sides[d-1]` torus with the
/// torus origin, wrapping displacements to the nearest image. Row-major.
pub(crate) fn torus_row(spec: &CovarianceSpec, sides: &[usize], spacing: f64) -> Vec<f64> {
    let total: usize = sides.iter().product();
    let mut row = Vec::with_capacity(total);
    let mut idx = vec![0usize; sides.len()];
    for _ in 0..total {
        let r2: f64 = idx
            .iter()
            .zip(sides)
            .map(|(&j, &m)| {
                let x = wrap(j, m) as f64 * spacing;
                x * x
            })
            .sum();
        row.push(spec.eval_radius(r2.sqrt()));
        for axis in (0..sides.len()).rev() {
            idx[axis] += 1;
            if idx[axis] < sides[axis] {
                break;
            }
            idx[axis] = 0;
        }
    }
    row
}

/// Covariance between the torus origin and every grid site, with the grid
/// viewed as a periodic torus of `2L+1` sites per axis.
pub fn covariance_row(spec: &CovarianceSpec, grid: &Grid) -> Result<Vec<f64>> {
    if grid.dimension != spec.dimension {
        return Err(Error::DimensionMismatch { expected: spec.dimension, got: grid.dimension });
    }
    Ok(torus_row(spec, &vec![grid.side(); grid.dimension], grid.spacing))
}

/// Dense matrix `M[i][j] = Q(p_i - p_j)`.
pub fn covariance_matrix(spec: &CovarianceSpec, points: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    for p in points {
        if p.len() != spec.dimension {
            return Err(Error::DimensionMismatch { expected: spec.dimension, got: p.len() });
        }
    }
    let n = points.len();
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n {
        m[i][i] = 1.0;
        for j in 0..i {
            let d: Vec<f64> = points[i].iter().zip(&points[j]).map(|(a, b)| a - b).collect();
            let q = spec.eval(&d)?;
            m[i][j] = q;
            m[j][i] = q;
        }
    }
    Ok(m)
}
