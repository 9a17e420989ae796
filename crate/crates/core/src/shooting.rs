//! The characteristic function `D(k) = psi(pi, k)` of the solution with
//! `psi(-pi) = 0`, `psi'(-pi) = 1`, together with `dD/dk` from the variational system.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::DEFAULT_NODES;
use crate::ode::{Integrator, Trajectory};
use crate::potential::Potential;

/// `D` and `dD/dk` at one real `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharValue {
    pub d: Complex64,
    pub dprime: Complex64,
}

/// A characteristic function sampled along the real k axis.
pub trait Characteristic: Sync {
    fn value(&self, k: f64) -> Result<CharValue>;
}

impl<F> Characteristic for F
where
    F: Fn(f64) -> Result<CharValue> + Sync,
{
    fn value(&self, k: f64) -> Result<CharValue> {
        self(k)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShootingResult {
    pub k: Complex64,
    pub d: Complex64,
    pub dprime: Complex64,
    /// `psi'(pi, k)`.
    pub endpoint_slope: Complex64,
    pub trajectory: Trajectory,
}

/// One scan sample; integration failures are kept per point.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanPoint {
    pub k: f64,
    pub value: std::result::Result<CharValue, Error>,
}

impl ScanPoint {
    pub fn d(&self) -> Option<Complex64> {
        self.value.as_ref().ok().map(|v| v.d)
    }
}

/// Shooting from `x = -pi` for a fixed potential, tolerance and grid.
pub struct Shooter<'p> {
    integrator: Integrator<'p>,
}

impl<'p> Shooter<'p> {
    pub fn new(potential: &'p (dyn Potential + 'p), tol: f64, n_nodes: usize) -> Result<Self> {
        Ok(Shooter {
            integrator: Integrator::new(potential, tol, n_nodes)?,
        })
    }

    pub fn integrator(&self) -> &Integrator<'p> {
        &self.integrator
    }

    pub fn shoot(&self, k: Complex64) -> Result<ShootingResult> {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let trajectory = self
            .integrator
            .integrate_with_variation(k, (zero, one), (zero, zero))?;
        let n = trajectory.psi.len() - 1;
        let d = trajectory.psi[n];
        let endpoint_slope = trajectory.dpsi[n];
        let dprime = trajectory.psik.as_ref().map(|v| v[n]).unwrap_or(zero);
        Ok(ShootingResult {
            k,
            d,
            dprime,
            endpoint_slope,
            trajectory,
        })
    }

    /// Shoots at `n` uniformly spaced real `k` in `[kmin, kmax]`, in parallel.
    pub fn scan(&self, kmin: f64, kmax: f64, n: usize) -> Result<Vec<ScanPoint>> {
        check_scan_args(kmin, kmax, n)?;
        Ok(scan_ks(kmin, kmax, n)
            .into_par_iter()
            .map(|k| ScanPoint {
                k,
                value: self.value(k),
            })
            .collect())
    }
}

impl Characteristic for Shooter<'_> {
    fn value(&self, k: f64) -> Result<CharValue> {
        let r = self.shoot(Complex64::new(k, 0.0))?;
        Ok(CharValue {
            d: r.d,
            dprime: r.dprime,
        })
    }
}

fn check_scan_args(kmin: f64, kmax: f64, n: usize) -> Result<()> {
    if !(kmin.is_finite() && kmax.is_finite()) || kmin < 0.0 || kmin >= kmax {
        return Err(Error::InvalidArgument(format!(
            "scan window must satisfy 0 <= kmin < kmax, got [{kmin}, {kmax}]"
        )));
    }
    if n < 16 {
        return Err(Error::InvalidArgument(format!(
            "scan needs at least 16 points, got {n}"
        )));
    }
    Ok(())
}

pub(crate) fn scan_ks(kmin: f64, kmax: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            if i == n - 1 {
                kmax
            } else {
                kmin + (kmax - kmin) * i as f64 / (n - 1) as f64
            }
        })
        .collect()
}

/// Scans any characteristic function on the same uniform k grid as [`Shooter::scan`].
pub fn scan_characteristic<C: Characteristic + ?Sized>(
    ch: &C,
    kmin: f64,
    kmax: f64,
    n: usize,
) -> Result<Vec<ScanPoint>> {
    check_scan_args(kmin, kmax, n)?;
    Ok(scan_ks(kmin, kmax, n)
        .into_par_iter()
        .map(|k| ScanPoint {
            k,
            value: ch.value(k),
        })
        .collect())
}

/// Shoots once on the default grid.
pub fn shoot<P: Potential>(v: &P, k: Complex64, tol: f64) -> Result<ShootingResult> {
    Shooter::new(v, tol, DEFAULT_NODES)?.shoot(k)
}

pub fn characteristic_scan<P: Potential>(
    v: &P,
    kmin: f64,
    kmax: f64,
    n: usize,
    tol: f64,
) -> Result<Vec<ScanPoint>> {
    check_scan_args(kmin, kmax, n)?;
    Shooter::new(v, tol, DEFAULT_NODES)?.scan(kmin, kmax, n)
}
