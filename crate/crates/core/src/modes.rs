//! Eigenfunctions, associated functions, the bilinear (PT) form and the
//! orthonormalised basis built from root subspaces.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::shooting::Shooter;
use crate::spectrum::SpectrumReport;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Endpoint residual bound for eigenfunctions, relative to `max |psi|`.
pub const EIGEN_ENDPOINT_TOL: f64 = 1e-7;
/// Endpoint residual bound for associated functions, relative to `max |psi_k|`.
pub const ASSOCIATED_ENDPOINT_TOL: f64 = 1e-6;
/// `|(psi, psi)| < ZERO_NORM_TOL * int |psi|^2` counts as a vanishing bilinear norm.
pub const ZERO_NORM_TOL: f64 = 1e-8;
/// Difference stride for the squared operator.
pub const SQUARED_STRIDE: usize = 4;
/// Parity eigenvalues within this distance of +-1 are treated as exact.
const PARITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// `psi(-pi) = 0`, `psi'(-pi) = 1`.
    Shooting,
    /// Closed-form normalisation of the model's eigenfunctions.
    ClosedForm,
    /// Unit bilinear norm, `(xi, xi) = 1`.
    UnitBilinear,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mode {
    pub k: f64,
    pub energy: f64,
    pub multiplicity: usize,
    /// 0 for an eigenfunction, 1 for the first associated function.
    pub chain_index: usize,
    pub function: GridFunction,
    pub normalization: Normalization,
}

impl Mode {
    pub fn values(&self) -> &[Complex64] {
        &self.function.values
    }

    /// `max |(-d2 + V - E) f| / max |f|` over interior nodes.
    pub fn eigen_residual(&self, potential: &GridFunction) -> Result<f64> {
        let r = apply_operator(&self.function, potential, self.energy, 1)?;
        Ok(interior_max(&r, 2) / self.function.max_abs())
    }

    /// `max |(-d2 + V - E) f - 2k psi| / max |psi|` for an associated function `f`.
    pub fn chain_residual(&self, eigen: &GridFunction, potential: &GridFunction) -> Result<f64> {
        let r = apply_operator(&self.function, potential, self.energy, 1)?;
        let r = r.combine(Complex64::new(1.0, 0.0), eigen, Complex64::new(-2.0 * self.k, 0.0))?;
        Ok(interior_max(&r, 2) / eigen.max_abs())
    }

    /// `max |(-d2 + V - E)^2 f| / max |f|`. Nesting two differences amplifies
    /// rounding by `h^-4`, so both use a coarser stride.
    pub fn squared_residual(&self, potential: &GridFunction) -> Result<f64> {
        self.squared_residual_with_stride(potential, SQUARED_STRIDE)
    }

    pub fn squared_residual_with_stride(&self, potential: &GridFunction, stride: usize) -> Result<f64> {
        let once = apply_operator(&self.function, potential, self.energy, stride)?;
        let twice = apply_operator(&once, potential, self.energy, stride)?;
        Ok(interior_max(&twice, 4 * stride) / self.function.max_abs())
    }

    pub fn endpoint_residual(&self) -> f64 {
        let v = &self.function.values;
        v[0].norm().max(v[v.len() - 1].norm()) / self.function.max_abs()
    }
}

/// `-f'' + (V - E) f` with a fourth-order second difference over `stride`
/// cells; nodes within `2 * stride` of either end are zero.
pub fn apply_operator(
    f: &GridFunction,
    potential: &GridFunction,
    energy: f64,
    stride: usize,
) -> Result<GridFunction> {
    f.check_same_grid(potential)?;
    let d2 = f.second_derivative(stride);
    let n = f.values.len();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for j in 2 * stride..n - 2 * stride {
        out[j] = -d2.values[j] + (potential.values[j] - energy) * f.values[j];
    }
    Ok(GridFunction {
        grid: f.grid,
        values: out,
    })
}

fn interior_max(f: &GridFunction, margin: usize) -> f64 {
    let n = f.values.len();
    f.values[margin..n - margin]
        .iter()
        .map(|v| v.norm())
        .fold(0.0, f64::max)
}

/// `int f g dx` (no conjugation) by composite Simpson.
pub fn bilinear(f: &GridFunction, g: &GridFunction) -> Result<Complex64> {
    f.check_same_grid(g)?;
    Ok(f
        .grid
        .integrate(f.values.iter().zip(&g.values).map(|(a, b)| a * b)))
}

/// `(PT f)(x) = conj(f(-x))`.
pub fn pt_apply(f: &GridFunction) -> GridFunction {
    GridFunction {
        grid: f.grid,
        values: f.values.iter().rev().map(|v| v.conj()).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PtParity {
    pub lambda: Complex64,
    /// `||PT f - lambda f|| / ||f||`.
    pub residual: f64,
}

impl PtParity {
    /// `+1` or `-1` when the parity is definite and real.
    pub fn sign(&self) -> Option<i32> {
        if self.residual > PARITY_TOL {
            return None;
        }
        if (self.lambda - 1.0).norm() < PARITY_TOL {
            Some(1)
        } else if (self.lambda + 1.0).norm() < PARITY_TOL {
            Some(-1)
        } else {
            None
        }
    }
}

/// Least-squares `lambda` in `PT f ~ lambda f`.
pub fn pt_parity(f: &GridFunction) -> Result<PtParity> {
    let ff = f.l2_inner(f)?.re;
    if ff == 0.0 {
        return Err(Error::ZeroFunction);
    }
    let ptf = pt_apply(f);
    let lambda = f.l2_inner(&ptf)? / ff;
    let diff = ptf.combine(Complex64::new(1.0, 0.0), f, -lambda)?;
    Ok(PtParity {
        lambda,
        residual: diff.l2_norm() / ff.sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PtNorm {
    /// `int f (PT f) dx`.
    pub pt: Complex64,
    /// `int f^2 dx`.
    pub bilinear: Complex64,
    /// `int |f|^2 dx`, the scale for zero-norm decisions.
    pub l2_sqr: f64,
}

impl PtNorm {
    pub fn is_zero(&self) -> bool {
        self.bilinear.norm() < ZERO_NORM_TOL * self.l2_sqr
    }
}

pub fn pt_norm(f: &GridFunction) -> Result<PtNorm> {
    Ok(PtNorm {
        pt: bilinear(f, &pt_apply(f))?,
        bilinear: bilinear(f, f)?,
        l2_sqr: f.norm_sqr(),
    })
}

fn shoot_root(shooter: &Shooter<'_>, k: f64) -> Result<(Mode, GridFunction)> {
    let r = shooter.shoot(Complex64::new(k, 0.0))?;
    let psi = r.trajectory.psi_function();
    let residual = r.d.norm() / psi.max_abs();
    if !(residual < EIGEN_ENDPOINT_TOL) {
        return Err(Error::NotARoot { k, residual });
    }
    let psik = r
        .trajectory
        .psik_function()
        .expect("shooting integrates the variational system");
    let double = psik.values[psik.values.len() - 1].norm() < ASSOCIATED_ENDPOINT_TOL * psik.max_abs();
    Ok((
        Mode {
            k,
            energy: k * k,
            multiplicity: if double { 2 } else { 1 },
            chain_index: 0,
            function: psi,
            normalization: Normalization::Shooting,
        },
        psik,
    ))
}

/// The shooting-normalised eigenfunction at a validated root.
pub fn eigenmode(shooter: &Shooter<'_>, k: f64) -> Result<Mode> {
    Ok(shoot_root(shooter, k)?.0)
}

/// `d psi / dk` at a double root, from the variational system.
pub fn associated_mode(shooter: &Shooter<'_>, k: f64) -> Result<Mode> {
    let (eigen, psik) = shoot_root(shooter, k)?;
    if eigen.multiplicity < 2 {
        return Err(Error::NotDoubleRoot { k });
    }
    Ok(Mode {
        k,
        energy: k * k,
        multiplicity: 2,
        chain_index: 1,
        function: psik,
        normalization: Normalization::Shooting,
    })
}

/// Orthonormal pair `(xi_a, xi_b)` spanning the root subspace of a zero-norm
/// eigenfunction `psi` and a partner `phi`:
/// `xi_b = phi / sqrt((phi, phi))`,
/// `xi_a = i psi sqrt((phi, phi)) / (phi, psi) - i phi / sqrt((phi, phi))`.
pub fn root_subspace_orthonormalize(psi: &Mode, phi: &Mode) -> Result<(Mode, Mode)> {
    let (a, b) = orthonormal_pair(&psi.function, &phi.function)?;
    let make = |function: GridFunction, chain_index: usize| Mode {
        k: psi.k,
        energy: psi.energy,
        multiplicity: psi.multiplicity.max(2),
        chain_index,
        function,
        normalization: Normalization::UnitBilinear,
    };
    Ok((make(a, 0), make(b, 1)))
}

fn orthonormal_pair(psi: &GridFunction, phi: &GridFunction) -> Result<(GridFunction, GridFunction)> {
    let psi_scale = psi.norm_sqr();
    let phi_scale = phi.norm_sqr();
    let pp = bilinear(psi, psi)?;
    if pp.norm() >= ZERO_NORM_TOL * psi_scale {
        return Err(Error::DegenerateGram(format!(
            "eigenfunction bilinear norm {pp} is not zero"
        )));
    }
    let ff = bilinear(phi, phi)?;
    let fp = bilinear(phi, psi)?;
    if fp.norm() < ZERO_NORM_TOL * (psi_scale * phi_scale).sqrt() {
        return Err(Error::DegenerateGram(format!("(phi, psi) = {fp} vanishes")));
    }
    if ff.norm() < ZERO_NORM_TOL * phi_scale {
        return Err(Error::DegenerateGram(format!("(phi, phi) = {ff} vanishes")));
    }
    let s = ff.sqrt();
    let xi_b = phi.scale(1.0 / s);
    let xi_a = psi.combine(I * s / fp, phi, -I / s)?;
    Ok((xi_a, xi_b))
}

/// A PT-invariant element of `span{psi, phi}` that is not a multiple of `psi`,
/// built as `e^{ia} phi + e^{-ia} PT phi`. `None` if the span is not PT-invariant.
fn pt_definite_partner(psi: &GridFunction, phi: &GridFunction) -> Result<Option<GridFunction>> {
    let pt_phi = pt_apply(phi);
    let mut best: Option<(f64, GridFunction)> = None;
    for phase in [Complex64::new(1.0, 0.0), I] {
        let w = phi.combine(phase, &pt_phi, phase.conj())?;
        // component of w outside span{psi}
        let c = psi.l2_inner(&w)? / psi.l2_inner(psi)?;
        let outside = w.combine(Complex64::new(1.0, 0.0), psi, -c)?.l2_norm() / phi.l2_norm();
        if best.as_ref().is_none_or(|(o, _)| outside > *o) {
            best = Some((outside, w));
        }
    }
    let Some((outside, w)) = best else {
        return Ok(None);
    };
    if outside < 1e-3 {
        return Ok(None);
    }
    // w must stay inside the root subspace
    let (_, fit) = crate::grid::fit_pair(&w, psi, phi)?;
    if fit > 1e-8 {
        return Ok(None);
    }
    Ok(Some(w))
}

/// Input for one root of the basis: the eigenfunction and, for a double root,
/// an associated function.
#[derive(Debug, Clone)]
pub struct RootData {
    pub k: f64,
    pub eigen: GridFunction,
    pub associated: Option<GridFunction>,
    pub normalization: Normalization,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BasisAnomaly {
    ZeroNormWithoutChain { k: f64 },
    UnsupportedChain { k: f64, multiplicity: usize },
    Failed { k: f64, message: String },
}

/// Basis orthonormal with respect to the bilinear form, sorted by label.
#[derive(Debug, Clone)]
pub struct Basis {
    pub members: Vec<Mode>,
    /// Labels `n` such that `PT xi_n = (-1)^(n-1) xi_n` where parities allow it.
    pub labels: Vec<usize>,
    pub parities: Vec<PtParity>,
    /// `gram[i][j] = (xi_i, xi_j)`.
    pub gram: Vec<Vec<Complex64>>,
    pub anomalies: Vec<BasisAnomaly>,
}

impl Basis {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn require_complete(&self) -> Result<()> {
        for a in &self.anomalies {
            if let BasisAnomaly::ZeroNormWithoutChain { k } = a {
                return Err(Error::ZeroNormWithoutChain { k: *k });
            }
        }
        Ok(())
    }

    pub fn gram_max_offdiag(&self) -> f64 {
        let mut m = 0.0f64;
        for (i, row) in self.gram.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if i != j {
                    m = m.max(v.norm());
                }
            }
        }
        m
    }

    pub fn gram_max_identity_deviation(&self) -> f64 {
        let mut m = 0.0f64;
        for (i, row) in self.gram.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let id = if i == j { 1.0 } else { 0.0 };
                m = m.max((v - id).norm());
            }
        }
        m
    }

    /// Copy without the members derived from associated functions.
    pub fn without_associated(&self) -> Basis {
        let keep: Vec<usize> = (0..self.len())
            .filter(|&i| self.members[i].chain_index == 0)
            .collect();
        Basis {
            members: keep.iter().map(|&i| self.members[i].clone()).collect(),
            labels: keep.iter().map(|&i| self.labels[i]).collect(),
            parities: keep.iter().map(|&i| self.parities[i]).collect(),
            gram: keep
                .iter()
                .map(|&i| keep.iter().map(|&j| self.gram[i][j]).collect())
                .collect(),
            anomalies: self.anomalies.clone(),
        }
    }
}

/// Builds the basis from per-root data, stopping once `n_max` members exist.
pub fn xi_basis_from_roots(roots: &[RootData], n_max: usize) -> Result<Basis> {
    let mut members: Vec<Mode> = Vec::new();
    let mut anomalies = Vec::new();
    let mut sorted: Vec<&RootData> = roots.iter().collect();
    sorted.sort_by(|a, b| a.k.total_cmp(&b.k));

    for root in sorted {
        if members.len() >= n_max {
            break;
        }
        let energy = root.k * root.k;
        let norm = pt_norm(&root.eigen)?;
        match &root.associated {
            None => {
                if norm.is_zero() {
                    anomalies.push(BasisAnomaly::ZeroNormWithoutChain { k: root.k });
                    continue;
                }
                members.push(Mode {
                    k: root.k,
                    energy,
                    multiplicity: 1,
                    chain_index: 0,
                    function: root.eigen.scale(1.0 / norm.bilinear.sqrt()),
                    normalization: Normalization::UnitBilinear,
                });
            }
            Some(assoc) => {
                let partner = match pt_definite_partner(&root.eigen, assoc)? {
                    Some(w) => w,
                    None => assoc.clone(),
                };
                match orthonormal_pair(&root.eigen, &partner) {
                    Ok((a, b)) => {
                        for (function, chain_index) in [(a, 0), (b, 1)] {
                            members.push(Mode {
                                k: root.k,
                                energy,
                                multiplicity: 2,
                                chain_index,
                                function,
                                normalization: Normalization::UnitBilinear,
                            });
                        }
                    }
                    Err(e) => anomalies.push(BasisAnomaly::Failed {
                        k: root.k,
                        message: e.to_string(),
                    }),
                }
            }
        }
    }

    let parities = members
        .iter()
        .map(|m| pt_parity(&m.function))
        .collect::<Result<Vec<_>>>()?;
    let labels = assign_labels(&members, &parities);
    let mut order: Vec<usize> = (0..members.len()).collect();
    order.sort_by_key(|&i| labels[i]);
    let members: Vec<Mode> = order.iter().map(|&i| members[i].clone()).collect();
    let parities: Vec<PtParity> = order.iter().map(|&i| parities[i]).collect();
    let labels: Vec<usize> = order.iter().map(|&i| labels[i]).collect();
    let gram = members
        .iter()
        .map(|a| members.iter().map(|b| bilinear(&a.function, &b.function)).collect())
        .collect::<Result<Vec<Vec<_>>>>()?;
    Ok(Basis {
        members,
        labels,
        parities,
        gram,
        anomalies,
    })
}

/// Labels `n >= 1` with `PT xi_n = (-1)^(n-1) xi_n`.
///
/// A simple root at `k = n/2` keeps `n` when its parity fits; root-subspace
/// members then take the smallest free label of matching parity, followed by
/// the remaining simple members. Without definite parities the labels are the
/// positions in k order.
fn assign_labels(members: &[Mode], parities: &[PtParity]) -> Vec<usize> {
    let signs: Option<Vec<i32>> = parities.iter().map(|p| p.sign()).collect();
    let Some(signs) = signs else {
        return (1..=members.len()).collect();
    };
    let fits = |n: usize, s: i32| (if n % 2 == 1 { 1 } else { -1 }) == s;
    let mut labels = vec![0usize; members.len()];
    let mut used = std::collections::BTreeSet::new();

    for (i, m) in members.iter().enumerate() {
        if m.multiplicity != 1 {
            continue;
        }
        let twice = 2.0 * m.k;
        let n = twice.round();
        if n >= 1.0 && (twice - n).abs() < 1e-6 {
            let n = n as usize;
            if fits(n, signs[i]) && !used.contains(&n) {
                labels[i] = n;
                used.insert(n);
            }
        }
    }
    let mut fill = |i: usize, labels: &mut Vec<usize>| {
        let n = (1..)
            .find(|&n| fits(n, signs[i]) && !used.contains(&n))
            .expect("labels are unbounded");
        labels[i] = n;
        used.insert(n);
    };
    for i in 0..members.len() {
        if members[i].multiplicity > 1 {
            fill(i, &mut labels);
        }
    }
    for i in 0..members.len() {
        if labels[i] == 0 {
            fill(i, &mut labels);
        }
    }
    labels
}

/// Numerical basis from a computed spectrum.
pub fn build_xi_basis(shooter: &Shooter<'_>, spectrum: &SpectrumReport, n_max: usize) -> Result<Basis> {
    let mut roots = Vec::new();
    let mut failures = Vec::new();
    let mut count = 0;
    for r in &spectrum.roots {
        if count >= n_max {
            break;
        }
        match r.multiplicity {
            1 => match eigenmode(shooter, r.k) {
                Ok(m) => {
                    count += 1;
                    roots.push(RootData {
                        k: r.k,
                        eigen: m.function,
                        associated: None,
                        normalization: Normalization::Shooting,
                    });
                }
                Err(e) => failures.push(BasisAnomaly::Failed {
                    k: r.k,
                    message: e.to_string(),
                }),
            },
            2 => match (eigenmode(shooter, r.k), associated_mode(shooter, r.k)) {
                (Ok(e), Ok(a)) => {
                    count += 2;
                    roots.push(RootData {
                        k: r.k,
                        eigen: e.function,
                        associated: Some(a.function),
                        normalization: Normalization::Shooting,
                    });
                }
                (Err(e), _) | (_, Err(e)) => failures.push(BasisAnomaly::Failed {
                    k: r.k,
                    message: e.to_string(),
                }),
            },
            m => failures.push(BasisAnomaly::UnsupportedChain {
                k: r.k,
                multiplicity: m,
            }),
        }
    }
    let mut basis = xi_basis_from_roots(&roots, n_max)?;
    basis.anomalies.extend(failures);
    Ok(basis)
}
