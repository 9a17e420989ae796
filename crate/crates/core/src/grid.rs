//! Uniform grids on [-pi, pi], complex grid functions and composite Simpson quadrature.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default number of grid nodes.
pub const DEFAULT_NODES: usize = 4097;

/// Smallest accepted node count.
pub const MIN_NODES: usize = 257;

/// Uniform grid `x_j = -pi + j * 2pi / (n - 1)` with an odd node count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    n_nodes: usize,
}

impl Grid {
    pub fn new(n_nodes: usize) -> Result<Self> {
        if n_nodes < MIN_NODES || n_nodes % 2 == 0 {
            return Err(Error::InvalidArgument(format!(
                "n_nodes must be odd and >= {MIN_NODES}, got {n_nodes}"
            )));
        }
        Ok(Grid { n_nodes })
    }

    pub fn len(&self) -> usize {
        self.n_nodes
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cells(&self) -> usize {
        self.n_nodes - 1
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.cells() as f64
    }

    /// Node `j`; the endpoints are exactly `-pi` and `pi`.
    pub fn x(&self, j: usize) -> f64 {
        if j == self.cells() {
            PI
        } else {
            -PI + 2.0 * PI * (j as f64) / (self.cells() as f64)
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_nodes).map(|j| self.x(j)).collect()
    }

    /// Samples a closure at every node.
    pub fn sample<F: Fn(f64) -> Complex64>(&self, f: F) -> GridFunction {
        GridFunction {
            grid: *self,
            values: (0..self.n_nodes).map(|j| f(self.x(j))).collect(),
        }
    }

    pub fn simpson_weight(&self, j: usize) -> f64 {
        let h = self.spacing();
        let w = if j == 0 || j == self.cells() {
            1.0
        } else if j % 2 == 1 {
            4.0
        } else {
            2.0
        };
        w * h / 3.0
    }

    /// Composite Simpson rule over the whole interval.
    pub fn integrate<I>(&self, values: I) -> Complex64
    where
        I: IntoIterator<Item = Complex64>,
    {
        values
            .into_iter()
            .enumerate()
            .map(|(j, v)| v * self.simpson_weight(j))
            .sum()
    }

    pub fn integrate_real<I>(&self, values: I) -> f64
    where
        I: IntoIterator<Item = f64>,
    {
        values
            .into_iter()
            .enumerate()
            .map(|(j, v)| v * self.simpson_weight(j))
            .sum()
    }
}

/// Complex values sampled on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub grid: Grid,
    pub values: Vec<Complex64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch {
                left: grid.len(),
                right: values.len(),
            });
        }
        Ok(GridFunction { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        GridFunction {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn check_same_grid(&self, other: &GridFunction) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch {
                left: self.grid.len(),
                right: other.grid.len(),
            });
        }
        Ok(())
    }

    pub fn scale(&self, c: Complex64) -> GridFunction {
        GridFunction {
            grid: self.grid,
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: Complex64, other: &GridFunction, b: Complex64) -> Result<GridFunction> {
        self.check_same_grid(other)?;
        Ok(GridFunction {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(u, v)| a * u + b * v)
                .collect(),
        })
    }

    /// In-place `self += c * other`.
    pub fn axpy(&mut self, c: Complex64, other: &GridFunction) -> Result<()> {
        self.check_same_grid(other)?;
        for (u, v) in self.values.iter_mut().zip(&other.values) {
            *u += c * v;
        }
        Ok(())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `int |f|^2 dx` by Simpson.
    pub fn norm_sqr(&self) -> f64 {
        self.grid.integrate_real(self.values.iter().map(|v| v.norm_sqr()))
    }

    pub fn l2_norm(&self) -> f64 {
        self.norm_sqr().max(0.0).sqrt()
    }

    /// Hermitian `int conj(self) * other dx`.
    pub fn l2_inner(&self, other: &GridFunction) -> Result<Complex64> {
        self.check_same_grid(other)?;
        Ok(self
            .grid
            .integrate(self.values.iter().zip(&other.values).map(|(u, v)| u.conj() * v)))
    }

    /// Relative L2 distance `||self - reference|| / ||reference||`.
    pub fn relative_l2_distance(&self, reference: &GridFunction) -> Result<f64> {
        let diff = self.combine(Complex64::new(1.0, 0.0), reference, Complex64::new(-1.0, 0.0))?;
        let denom = reference.l2_norm();
        if denom == 0.0 {
            return Err(Error::ZeroFunction);
        }
        Ok(diff.l2_norm() / denom)
    }

    /// Fourth-order central second derivative on interior nodes `2..n-2`,
    /// evaluated with node spacing `stride * h`. Nodes closer than
    /// `2 * stride` to either end are left at zero.
    pub fn second_derivative(&self, stride: usize) -> GridFunction {
        let n = self.values.len();
        let s = stride.max(1);
        let h = self.grid.spacing() * s as f64;
        let denom = 12.0 * h * h;
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        let f = &self.values;
        for j in 2 * s..n.saturating_sub(2 * s) {
            out[j] = (-f[j - 2 * s] + 16.0 * f[j - s] - 30.0 * f[j] + 16.0 * f[j + s]
                - f[j + 2 * s])
                / denom;
        }
        GridFunction {
            grid: self.grid,
            values: out,
        }
    }
}

/// Least-squares fit `target ~ c * basis`, returning `(c, relative residual)`.
pub fn fit_scalar(target: &GridFunction, basis: &GridFunction) -> Result<(Complex64, f64)> {
    let bb = basis.l2_inner(basis)?;
    if bb.norm() == 0.0 {
        return Err(Error::ZeroFunction);
    }
    let c = basis.l2_inner(target)? / bb;
    let fitted = basis.scale(c);
    let residual = fitted.relative_l2_distance(target)?;
    Ok((c, residual))
}

/// Least-squares projection of `target` onto `span{a, b}`, returning the coefficients and
/// the relative residual.
pub fn fit_pair(
    target: &GridFunction,
    a: &GridFunction,
    b: &GridFunction,
) -> Result<([Complex64; 2], f64)> {
    let aa = a.l2_inner(a)?;
    let ab = a.l2_inner(b)?;
    let bb = b.l2_inner(b)?;
    let at = a.l2_inner(target)?;
    let bt = b.l2_inner(target)?;
    // normal equations [[aa, ab], [conj(ab), bb]] c = [at, bt]
    let ba = ab.conj();
    let det = aa * bb - ab * ba;
    if det.norm() <= 1e-14 * (aa.norm() * bb.norm()) {
        return Err(Error::DegenerateGram("fit basis is linearly dependent".into()));
    }
    let c0 = (at * bb - ab * bt) / det;
    let c1 = (aa * bt - ba * at) / det;
    let fitted = a.combine(c0, b, c1)?;
    let residual = fitted.relative_l2_distance(target)?;
    Ok(([c0, c1], residual))
}
