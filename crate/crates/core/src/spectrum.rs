//! Real roots of the characteristic function: bracketing, Newton refinement,
//! multiplicity classification and the diagonalizability verdict.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::shooting::{scan_characteristic, CharValue, Characteristic, ScanPoint};

/// Relative threshold for "this derivative vanishes".
pub const EPS_MULT: f64 = 1e-5;
pub const MAX_ITERATIONS: usize = 50;
/// Step of the central difference of `dD/dk` used for `d2D/dk2`.
pub const FD_STEP: f64 = 1e-4;
/// Step for the third and fourth derivatives, where `1e-4` amplifies noise too much.
pub const FD_STEP_HIGH: f64 = 1e-3;
pub const MAX_ORDER: usize = 4;
/// Local minima of `|D|` below this fraction of the scan maximum become seeds.
pub const MINIMUM_SEED_FRACTION: f64 = 0.05;
/// A root is accepted when `|D(k*)| < ROOT_RESIDUAL * scale`.
pub const ROOT_RESIDUAL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedKind {
    SignChange,
    LocalMinimum,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Seed {
    pub k0: f64,
    pub bracket: (f64, f64),
    pub kind: SeedKind,
}

/// Seeds from sign changes of `Re D` plus small local minima of `|D|`
/// (tangential zeros never change sign).
pub fn bracket_roots(scan: &[ScanPoint]) -> Vec<Seed> {
    let vals: Vec<Option<CharValue>> = scan.iter().map(|p| p.value.as_ref().ok().copied()).collect();
    let max_abs = vals
        .iter()
        .flatten()
        .map(|v| v.d.norm())
        .fold(0.0, f64::max);
    let mut seeds = Vec::new();
    let mut sign_intervals: Vec<(f64, f64)> = Vec::new();

    for i in 0..scan.len().saturating_sub(1) {
        let (Some(a), Some(b)) = (vals[i], vals[i + 1]) else {
            continue;
        };
        let (ka, kb) = (scan[i].k, scan[i + 1].k);
        let (fa, fb) = (a.d.re, b.d.re);
        if fa == 0.0 {
            // exact hit at a scan point
            if i == 0 || vals[i - 1].is_some_and(|p| p.d.re != 0.0) {
                seeds.push(Seed {
                    k0: ka,
                    bracket: (ka, ka),
                    kind: SeedKind::SignChange,
                });
                sign_intervals.push((ka, ka));
            }
            continue;
        }
        if fa * fb < 0.0 {
            let k0 = ka + (kb - ka) * fa / (fa - fb);
            seeds.push(Seed {
                k0,
                bracket: (ka, kb),
                kind: SeedKind::SignChange,
            });
            sign_intervals.push((ka, kb));
        }
    }

    for i in 1..scan.len().saturating_sub(1) {
        let (Some(prev), Some(cur), Some(next)) = (vals[i - 1], vals[i], vals[i + 1]) else {
            continue;
        };
        let m = cur.d.norm();
        if !(m < prev.d.norm() && m <= next.d.norm() && m < MINIMUM_SEED_FRACTION * max_abs) {
            continue;
        }
        let (lo, hi) = (scan[i - 1].k, scan[i + 1].k);
        if sign_intervals.iter().any(|&(a, b)| a <= hi && b >= lo) {
            continue;
        }
        seeds.push(Seed {
            k0: scan[i].k,
            bracket: (lo, hi),
            kind: SeedKind::LocalMinimum,
        });
    }
    seeds.sort_by(|a, b| a.k0.total_cmp(&b.k0));
    seeds
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootOptions {
    /// Convergence threshold on the Newton update.
    pub tol: f64,
    pub eps_mult: f64,
    /// Magnitude scale of `D` (maximum over the scan).
    pub scale: f64,
    pub window: (f64, f64),
    pub max_iterations: usize,
}

impl RootOptions {
    pub fn new(tol: f64, scale: f64, window: (f64, f64)) -> Self {
        RootOptions {
            tol,
            eps_mult: EPS_MULT,
            scale,
            window,
            max_iterations: MAX_ITERATIONS,
        }
    }

    fn degenerate(&self) -> f64 {
        self.eps_mult * self.scale
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RefinedRoot {
    pub k: f64,
    pub d_abs: f64,
    pub dprime_abs: f64,
    pub iterations: usize,
    /// Newton ran on `dD/dk` (the derivative vanished near the root).
    pub derivative_newton: bool,
}

fn second_derivative<C: Characteristic + ?Sized>(ch: &C, k: f64) -> Result<num_complex::Complex64> {
    let plus = ch.value(k + FD_STEP)?.dprime;
    let minus = ch.value(k - FD_STEP)?.dprime;
    Ok((plus - minus) / (2.0 * FD_STEP))
}

/// Newton iteration on `D`, switching to Newton on `dD/dk` once the derivative
/// becomes degenerate. `bracket`, when given, safeguards the `D` phase by bisection.
pub fn refine_root<C: Characteristic + ?Sized>(
    ch: &C,
    k0: f64,
    bracket: Option<(f64, f64)>,
    opts: &RootOptions,
) -> Result<RefinedRoot> {
    let (wlo, whi) = opts.window;
    let margin = 0.05 * (whi - wlo);
    let mut k = k0;
    let mut on_derivative = false;
    let mut bracket = bracket.filter(|(a, b)| b > a);
    let bracket_sign = match bracket {
        Some((a, _)) => Some(ch.value(a)?.d.re.signum()),
        None => None,
    };

    for it in 1..=opts.max_iterations {
        let v = ch.value(k)?;
        if !on_derivative && v.dprime.norm() < opts.degenerate() {
            on_derivative = true;
        }
        let mut next = if on_derivative {
            let d2 = second_derivative(ch, k)?;
            if d2.norm() == 0.0 {
                return Err(Error::NoConvergence {
                    k0,
                    iterations: it,
                });
            }
            k - (v.dprime / d2).re
        } else {
            k - (v.d / v.dprime).re
        };

        if !on_derivative {
            if let (Some((a, b)), Some(sa)) = (bracket, bracket_sign) {
                let (a, b) = if k > a && k < b {
                    if v.d.re.signum() == sa {
                        (k, b)
                    } else {
                        (a, k)
                    }
                } else {
                    (a, b)
                };
                bracket = Some((a, b));
                if !(next > a && next < b) {
                    next = 0.5 * (a + b);
                }
            }
        }

        if !next.is_finite() || next < wlo - margin || next > whi + margin {
            return Err(Error::DivergedOutOfWindow { k: next });
        }
        if (next - k).abs() < opts.tol {
            let fin = ch.value(next)?;
            if next < wlo || next > whi {
                return Err(Error::DivergedOutOfWindow { k: next });
            }
            return Ok(RefinedRoot {
                k: next,
                d_abs: fin.d.norm(),
                dprime_abs: fin.dprime.norm(),
                iterations: it,
                derivative_newton: on_derivative,
            });
        }
        k = next;
    }
    Err(Error::NoConvergence {
        k0,
        iterations: opts.max_iterations,
    })
}

/// Order of the zero of `D` at `kstar` from successive derivatives of `dD/dk`.
pub fn classify_multiplicity<C: Characteristic + ?Sized>(
    ch: &C,
    kstar: f64,
    opts: &RootOptions,
) -> Result<usize> {
    let v = ch.value(kstar)?;
    let threshold = opts.degenerate();
    if v.d.norm() >= ROOT_RESIDUAL * opts.scale {
        return Err(Error::NotARoot {
            k: kstar,
            residual: v.d.norm() / opts.scale,
        });
    }
    if v.dprime.norm() >= threshold {
        return Ok(1);
    }
    if second_derivative(ch, kstar)?.norm() >= threshold {
        return Ok(2);
    }
    let h = FD_STEP_HIGH;
    let dp = |k: f64| ch.value(k).map(|v| v.dprime);
    let (m2, m1, p1, p2) = (dp(kstar - 2.0 * h)?, dp(kstar - h)?, dp(kstar + h)?, dp(kstar + 2.0 * h)?);
    let d3 = (p1 - 2.0 * v.dprime + m1) / (h * h);
    if d3.norm() >= threshold {
        return Ok(3);
    }
    let d4 = (p2 - 2.0 * p1 + 2.0 * m1 - m2) / (2.0 * h * h * h);
    if d4.norm() >= threshold {
        return Ok(4);
    }
    Err(Error::OrderTooHigh {
        k: kstar,
        max_order: MAX_ORDER,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Residuals {
    pub d_abs: f64,
    pub dprime_abs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralRoot {
    pub k: f64,
    pub energy: f64,
    pub multiplicity: usize,
    pub residuals: Residuals,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumReport {
    pub roots: Vec<SpectralRoot>,
    pub scan_window: (f64, f64),
    pub n_scan: usize,
    pub tol: f64,
    pub eps_mult: f64,
    pub merge_tol: f64,
    /// `max |D|` over the scan.
    pub scale: f64,
    pub diagonalizable: bool,
    /// Scan points where integration failed.
    pub scan_failures: usize,
    /// Scan points with `|Im D| > 1e-6 max(1, |D|)`; nonzero for potentials whose
    /// characteristic function is not real on the real axis.
    pub imaginary_anomalies: usize,
    pub warnings: Vec<String>,
}

impl SpectrumReport {
    pub fn multiple_roots(&self) -> impl Iterator<Item = &SpectralRoot> {
        self.roots.iter().filter(|r| r.multiplicity > 1)
    }
}

/// scan -> bracket -> refine -> deduplicate -> classify.
pub fn find_spectrum<C: Characteristic + ?Sized>(
    ch: &C,
    kmin: f64,
    kmax: f64,
    n_scan: usize,
    tol: f64,
) -> Result<SpectrumReport> {
    let scan = scan_characteristic(ch, kmin, kmax, n_scan)?;
    Ok(spectrum_from_scan(ch, &scan, kmin, kmax, tol))
}

pub fn spectrum_from_scan<C: Characteristic + ?Sized>(
    ch: &C,
    scan: &[ScanPoint],
    kmin: f64,
    kmax: f64,
    tol: f64,
) -> SpectrumReport {
    let mut warnings = Vec::new();
    let scan_failures = scan.iter().filter(|p| p.value.is_err()).count();
    for p in scan {
        if let Err(e) = &p.value {
            warnings.push(format!("scan point k = {}: {e}", p.k));
        }
    }
    let imaginary_anomalies = scan
        .iter()
        .filter_map(|p| p.d())
        .filter(|d| d.im.abs() > 1e-6 * d.norm().max(1.0))
        .count();
    let scale = scan
        .iter()
        .filter_map(|p| p.d())
        .map(|d| d.norm())
        .fold(0.0, f64::max);
    let scale = if scale > 0.0 { scale } else { 1.0 };
    let opts = RootOptions::new(tol, scale, (kmin, kmax));
    let merge_tol = 10.0 * tol;

    let seeds = bracket_roots(scan);
    let refined: Vec<(Seed, Result<RefinedRoot>)> = seeds
        .par_iter()
        .map(|s| {
            let bracket = (s.kind == SeedKind::SignChange).then_some(s.bracket);
            (*s, refine_root(ch, s.k0, bracket, &opts))
        })
        .collect();

    let mut found: Vec<RefinedRoot> = Vec::new();
    for (seed, r) in refined {
        match r {
            Ok(root) => {
                if root.d_abs < ROOT_RESIDUAL * scale {
                    found.push(root);
                } else {
                    warnings.push(format!(
                        "seed k0 = {}: residual |D| = {:e} above acceptance",
                        seed.k0, root.d_abs
                    ));
                }
            }
            Err(e) => warnings.push(format!("seed k0 = {}: {e}", seed.k0)),
        }
    }
    found.sort_by(|a, b| a.k.total_cmp(&b.k));
    let mut merged: Vec<RefinedRoot> = Vec::new();
    for r in found {
        match merged.last_mut() {
            Some(last) if (r.k - last.k).abs() <= merge_tol => {
                if r.d_abs < last.d_abs {
                    *last = r;
                }
            }
            _ => merged.push(r),
        }
    }

    let classified: Vec<(RefinedRoot, Result<usize>)> = merged
        .par_iter()
        .map(|r| (*r, classify_multiplicity(ch, r.k, &opts)))
        .collect();
    let mut roots = Vec::new();
    for (r, m) in classified {
        match m {
            Ok(multiplicity) => {
                if multiplicity > 1 && r.dprime_abs >= ROOT_RESIDUAL * scale {
                    warnings.push(format!(
                        "root k = {}: multiplicity {multiplicity} but |dD/dk| = {:e}",
                        r.k, r.dprime_abs
                    ));
                }
                roots.push(SpectralRoot {
                    k: r.k,
                    energy: r.k * r.k,
                    multiplicity,
                    residuals: Residuals {
                        d_abs: r.d_abs,
                        dprime_abs: r.dprime_abs,
                    },
                });
            }
            Err(e) => warnings.push(format!("root k = {}: {e}", r.k)),
        }
    }
    let diagonalizable = roots.iter().all(|r| r.multiplicity == 1);
    SpectrumReport {
        roots,
        scan_window: (kmin, kmax),
        n_scan: scan.len(),
        tol,
        eps_mult: EPS_MULT,
        merge_tol,
        scale,
        diagonalizable,
        scan_failures,
        imaginary_anomalies,
        warnings,
    }
}
