//! Expansion over a bilinear-orthonormal basis and the positive inner product
//! it induces on coefficient space.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::modes::{bilinear, Basis, BasisAnomaly};
use crate::spectrum::SpectrumReport;

/// `a_n = (f, xi_n)` for every basis member, in basis (label) order.
pub fn expand(f: &GridFunction, basis: &Basis) -> Result<Vec<Complex64>> {
    basis
        .members
        .iter()
        .map(|m| bilinear(f, &m.function))
        .collect()
}

/// `sum_{n < N} a_n xi_n`, with `N = coeffs.len()`.
pub fn reconstruct(coeffs: &[Complex64], basis: &Basis) -> Result<GridFunction> {
    if coeffs.len() > basis.len() {
        return Err(Error::InvalidArgument(format!(
            "{} coefficients for a basis of {} members",
            coeffs.len(),
            basis.len()
        )));
    }
    let grid = basis_grid(basis)?;
    let mut sum = GridFunction::zeros(grid);
    for (c, m) in coeffs.iter().zip(&basis.members) {
        sum.axpy(*c, &m.function)?;
    }
    Ok(sum)
}

/// Relative L2 error of the partial sum over the first `n_terms` members.
pub fn reconstruction_error(f: &GridFunction, basis: &Basis, n_terms: usize) -> Result<f64> {
    Ok(*reconstruction_curve(f, basis)?
        .get(n_terms.checked_sub(1).ok_or_else(|| {
            Error::InvalidArgument("at least one term is needed".into())
        })?)
        .ok_or_else(|| {
            Error::InvalidArgument(format!(
                "{n_terms} terms requested from a basis of {}",
                basis.len()
            ))
        })?)
}

/// Errors for `N = 1..=len` members in label order.
pub fn reconstruction_curve(f: &GridFunction, basis: &Basis) -> Result<Vec<f64>> {
    let coeffs = expand(f, basis)?;
    let mut sum = GridFunction::zeros(f.grid);
    let mut out = Vec::with_capacity(basis.len());
    for (c, m) in coeffs.iter().zip(&basis.members) {
        sum.axpy(*c, &m.function)?;
        out.push(sum.relative_l2_distance(f)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubspacePoint {
    /// Largest `k` included.
    pub k: f64,
    pub members: usize,
    pub error: f64,
}

/// Errors of partial sums that add whole root subspaces in increasing `k`.
/// A partial sum holding half of a root subspace is not a projection, so this
/// is the curve on which monotone decay is meaningful.
pub fn subspace_curve(f: &GridFunction, basis: &Basis) -> Result<Vec<SubspacePoint>> {
    let coeffs = expand(f, basis)?;
    let mut order: Vec<usize> = (0..basis.len()).collect();
    order.sort_by(|&i, &j| {
        let (a, b) = (&basis.members[i], &basis.members[j]);
        a.k.total_cmp(&b.k).then(a.chain_index.cmp(&b.chain_index))
    });
    let mut sum = GridFunction::zeros(f.grid);
    let mut out = Vec::new();
    for (pos, &i) in order.iter().enumerate() {
        let m = &basis.members[i];
        sum.axpy(coeffs[i], &m.function)?;
        let closes = order
            .get(pos + 1)
            .is_none_or(|&j| basis.members[j].k != m.k);
        if closes {
            out.push(SubspacePoint {
                k: m.k,
                members: pos + 1,
                error: sum.relative_l2_distance(f)?,
            });
        }
    }
    Ok(out)
}

/// `sum conj(a_n) b_n`.
pub fn coefficient_inner_product(a: &[Complex64], b: &[Complex64]) -> Result<Complex64> {
    if a.len() != b.len() {
        return Err(Error::InvalidArgument(format!(
            "coefficient vectors of length {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(a.iter().zip(b).map(|(x, y)| x.conj() * y).sum())
}

/// `(f, g) = <f~|g>` with `f~` obtained by conjugating basis members.
pub fn dynamical_inner_product(f: &GridFunction, g: &GridFunction, basis: &Basis) -> Result<Complex64> {
    f.check_same_grid(g)?;
    coefficient_inner_product(&expand(f, basis)?, &expand(g, basis)?)
}

/// A basis truncated to its first `n_terms` members, with the inner product
/// it defines.
#[derive(Debug, Clone)]
pub struct MetricSpace {
    pub basis: Basis,
    pub n_terms: usize,
}

impl MetricSpace {
    pub fn new(basis: Basis) -> Self {
        let n_terms = basis.len();
        MetricSpace { basis, n_terms }
    }

    pub fn truncated(basis: Basis, n_terms: usize) -> Result<Self> {
        if n_terms > basis.len() {
            return Err(Error::InvalidArgument(format!(
                "truncation {n_terms} exceeds basis size {}",
                basis.len()
            )));
        }
        Ok(MetricSpace { basis, n_terms })
    }

    pub fn expand(&self, f: &GridFunction) -> Result<Vec<Complex64>> {
        let mut a = expand(f, &self.basis)?;
        a.truncate(self.n_terms);
        Ok(a)
    }

    pub fn inner_product(&self, f: &GridFunction, g: &GridFunction) -> Result<Complex64> {
        f.check_same_grid(g)?;
        coefficient_inner_product(&self.expand(f)?, &self.expand(g)?)
    }

    pub fn norm_sqr(&self, f: &GridFunction) -> Result<f64> {
        Ok(self.expand(f)?.iter().map(|a| a.norm_sqr()).sum())
    }

    /// `sum c_n xi_n` over the truncated basis.
    pub fn combination(&self, c: &[Complex64]) -> Result<GridFunction> {
        if c.len() > self.n_terms {
            return Err(Error::InvalidArgument(format!(
                "{} coefficients for {} terms",
                c.len(),
                self.n_terms
            )));
        }
        reconstruct(c, &self.basis)
    }
}

fn basis_grid(basis: &Basis) -> Result<Grid> {
    basis
        .members
        .first()
        .map(|m| m.function.grid)
        .ok_or_else(|| Error::InvalidArgument("empty basis".into()))
}

/// Dirichlet-compatible smooth test functions:
/// `sin(m (x + pi) / 2)` for `m = 1..4` and `(pi^2 - x^2) e^{x/pi}`.
pub fn test_functions(grid: Grid) -> Vec<(String, GridFunction)> {
    let mut out: Vec<(String, GridFunction)> = (1..=4)
        .map(|m| {
            let m = m as f64;
            (
                format!("sin({m}(x+pi)/2)"),
                grid.sample(|x| Complex64::new((m * (x + PI) / 2.0).sin(), 0.0)),
            )
        })
        .collect();
    out.push((
        "(pi^2-x^2)exp(x/pi)".into(),
        grid.sample(|x| Complex64::new((PI * PI - x * x) * (x / PI).exp(), 0.0)),
    ));
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelRow {
    pub name: String,
    /// Relative L2 error of `int K_N(x, y) g(y) dy` against `g`, for `N = 1..=n_terms`.
    pub errors: Vec<f64>,
}

/// Weak test of `K_N(x, y) = sum_{n <= N} xi_n(x) xi_n(y)` against test functions.
pub fn delta_kernel_test(
    basis: &Basis,
    tests: &[(String, GridFunction)],
    n_terms: usize,
) -> Result<Vec<KernelRow>> {
    if n_terms > basis.len() {
        return Err(Error::InvalidArgument(format!(
            "{n_terms} terms requested from a basis of {}",
            basis.len()
        )));
    }
    tests
        .iter()
        .map(|(name, g)| {
            let mut errors = reconstruction_curve(g, basis)?;
            errors.truncate(n_terms);
            Ok(KernelRow {
                name: name.clone(),
                errors,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagonalizabilityReport {
    pub verdict: String,
    pub diagonalizable: bool,
    pub roots: Vec<f64>,
    pub multiple_roots: Vec<(f64, usize)>,
    /// Roots whose eigenfunction has vanishing bilinear norm.
    pub zero_norm_roots: Vec<f64>,
    pub associated_functions: usize,
    pub complete: bool,
    pub warnings: Vec<String>,
}

fn short(k: f64) -> String {
    format!("{}", (k * 1e8).round() / 1e8)
}

pub fn diagonalizability_report(spectrum: &SpectrumReport, basis: &Basis) -> DiagonalizabilityReport {
    let multiple_roots: Vec<(f64, usize)> = spectrum
        .multiple_roots()
        .map(|r| (r.k, r.multiplicity))
        .collect();
    let associated_functions = basis.members.iter().filter(|m| m.chain_index > 0).count();
    let mut zero_norm_roots: Vec<f64> = basis
        .members
        .iter()
        .filter(|m| m.chain_index > 0)
        .map(|m| m.k)
        .collect();
    let mut complete = true;
    let mut warnings = spectrum.warnings.clone();
    for a in &basis.anomalies {
        match a {
            BasisAnomaly::ZeroNormWithoutChain { k } => {
                zero_norm_roots.push(*k);
                complete = false;
            }
            other => {
                complete = false;
                warnings.push(format!("{other:?}"));
            }
        }
    }
    zero_norm_roots.sort_by(f64::total_cmp);
    zero_norm_roots.dedup();

    let diagonalizable = multiple_roots.is_empty() && zero_norm_roots.is_empty();
    let verdict = if diagonalizable {
        "diagonalizable".to_string()
    } else {
        let mut parts = Vec::new();
        if !multiple_roots.is_empty() {
            let ks: Vec<String> = multiple_roots.iter().map(|(k, _)| short(*k)).collect();
            let kind = if multiple_roots.iter().all(|(_, m)| *m == 2) {
                "double"
            } else {
                "multiple"
            };
            let plural = if ks.len() > 1 { "s" } else { "" };
            parts.push(format!("{kind} root{plural} at k={}", ks.join(", ")));
        } else {
            let ks: Vec<String> = zero_norm_roots.iter().map(|k| short(*k)).collect();
            parts.push(format!("zero-norm eigenfunction at k={}", ks.join(", ")));
        }
        if complete {
            let plural = if associated_functions == 1 { "" } else { "s" };
            parts.push(format!(
                "basis completed with {associated_functions} associated function{plural}"
            ));
        } else {
            parts.push("basis incomplete".into());
        }
        format!("non-diagonalizable: {}", parts.join("; "))
    };
    DiagonalizabilityReport {
        verdict,
        diagonalizable,
        roots: spectrum.roots.iter().map(|r| r.k).collect(),
        multiple_roots,
        zero_norm_roots,
        associated_functions,
        complete,
        warnings,
    }
}
