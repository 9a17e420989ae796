//! Integration of `psi'' = (V(x) - k^2) psi` and its first variation in `k`.
//!
//! The stepper is the Dormand-Prince 5(4) embedded pair. Every grid cell is a
//! macro step: the controller first tries the whole cell and, when the embedded
//! error estimate exceeds the tolerance, subdivides it adaptively. Grid values
//! are therefore step endpoints rather than interpolants, which keeps finite
//! differences of the result free of interpolation noise.
//!
//! The potential is sampled once per integrator at all stage abscissae of the
//! cell steps, so repeated integrations at different `k` (scans, Newton
//! iterations) only pay for the arithmetic.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::potential::Potential;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const MIN_TOL: f64 = 1e-14;
pub const MAX_TOL: f64 = 1e-4;

const MIN_STEP: f64 = 1e-12;
const MAX_SUBSTEPS_PER_CELL: usize = 200_000;

// Dormand-Prince 5(4) tableau.
const C: [f64; 5] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0];
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

type State<const N: usize> = [Complex64; N];

/// First-order form of the Schrodinger-type equation, optionally augmented with
/// the k-variation `psi_k'' = (V - k^2) psi_k - 2k psi`.
trait Rhs<const N: usize>: Sync {
    /// `q = V(x) - k^2`.
    fn eval(&self, q: Complex64, y: &State<N>) -> State<N>;
}

struct Plain;

impl Rhs<2> for Plain {
    #[inline]
    fn eval(&self, q: Complex64, y: &State<2>) -> State<2> {
        [y[1], q * y[0]]
    }
}

struct Variational {
    two_k: Complex64,
}

impl Rhs<4> for Variational {
    #[inline]
    fn eval(&self, q: Complex64, y: &State<4>) -> State<4> {
        [y[1], q * y[0], y[3], q * y[2] - self.two_k * y[0]]
    }
}

#[inline]
fn lin<const N: usize>(y: &State<N>, h: f64, terms: &[(f64, &State<N>)]) -> State<N> {
    let mut out = *y;
    for (c, k) in terms {
        if *c == 0.0 {
            continue;
        }
        let ch = c * h;
        for i in 0..N {
            out[i] += k[i] * ch;
        }
    }
    out
}

struct StepOutcome<const N: usize> {
    y: State<N>,
    k7: State<N>,
    /// Error estimate divided by the admissible error.
    err: f64,
}

/// One Dormand-Prince step; `q` holds `V - k^2` at the five new abscissae.
#[inline]
fn dopri_step<const N: usize, R: Rhs<N>>(
    rhs: &R,
    y: &State<N>,
    k1: &State<N>,
    q: &[Complex64; 5],
    h: f64,
    tol: f64,
) -> StepOutcome<N> {
    let k2 = rhs.eval(q[0], &lin(y, h, &[(A21, k1)]));
    let k3 = rhs.eval(q[1], &lin(y, h, &[(A31, k1), (A32, &k2)]));
    let k4 = rhs.eval(q[2], &lin(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]));
    let k5 = rhs.eval(
        q[3],
        &lin(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
    );
    let k6 = rhs.eval(
        q[4],
        &lin(y, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
    );
    let y_new = lin(y, h, &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
    let k7 = rhs.eval(q[4], &y_new);

    let mut err_max = 0.0f64;
    let mut scale = 0.0f64;
    for i in 0..N {
        let e = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * h;
        err_max = err_max.max(e.norm());
        scale = scale.max(y[i].norm()).max(y_new[i].norm());
    }
    let err = err_max / (tol * scale.max(f64::MIN_POSITIVE));
    StepOutcome { y: y_new, k7, err }
}

/// Dense solution of the ODE on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub grid: Grid,
    pub k: Complex64,
    pub tol: f64,
    pub psi: Vec<Complex64>,
    pub dpsi: Vec<Complex64>,
    pub psik: Option<Vec<Complex64>>,
    pub dpsik: Option<Vec<Complex64>>,
    /// Number of grid cells that needed adaptive subdivision.
    pub subdivided_cells: usize,
}

impl Trajectory {
    pub fn psi_function(&self) -> GridFunction {
        GridFunction {
            grid: self.grid,
            values: self.psi.clone(),
        }
    }

    pub fn psik_function(&self) -> Option<GridFunction> {
        self.psik.as_ref().map(|v| GridFunction {
            grid: self.grid,
            values: v.clone(),
        })
    }

    /// Pointwise `u v' - u' v` against another trajectory on the same grid.
    pub fn wronskian(&self, other: &Trajectory) -> Result<Vec<Complex64>> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch {
                left: self.grid.len(),
                right: other.grid.len(),
            });
        }
        Ok((0..self.grid.len())
            .map(|j| self.psi[j] * other.dpsi[j] - self.dpsi[j] * other.psi[j])
            .collect())
    }

    pub fn end(&self) -> (Complex64, Complex64) {
        let n = self.psi.len() - 1;
        (self.psi[n], self.dpsi[n])
    }
}

/// Relative spread `max |W_j - W_0| / |W_0|` of a Wronskian along the grid.
pub fn wronskian_drift(w: &[Complex64]) -> f64 {
    let w0 = w[0];
    let scale = w0.norm().max(f64::MIN_POSITIVE);
    w.iter().map(|v| (v - w0).norm()).fold(0.0, f64::max) / scale
}

fn check_tol(tol: f64) -> Result<()> {
    if !(MIN_TOL..=MAX_TOL).contains(&tol) {
        return Err(Error::InvalidArgument(format!(
            "tol must lie in [{MIN_TOL:e}, {MAX_TOL:e}], got {tol:e}"
        )));
    }
    Ok(())
}

fn sample<P: Potential + ?Sized>(p: &P, x: f64) -> Result<Complex64> {
    match p.eval(x) {
        Ok(v) if v.re.is_finite() && v.im.is_finite() => Ok(v),
        Ok(_) => Err(Error::StepFailure {
            x,
            reason: "potential is not finite".into(),
        }),
        Err(Error::Pole { x }) => Err(Error::StepFailure {
            x,
            reason: "potential has a pole".into(),
        }),
        Err(e) => Err(e),
    }
}

/// Integrator bound to one potential, grid and tolerance.
pub struct Integrator<'p> {
    potential: &'p (dyn Potential + 'p),
    grid: Grid,
    tol: f64,
    /// `V` at the grid nodes.
    nodes: Vec<Complex64>,
    /// `V` at `x_j + c h` for the four interior stage abscissae of cell `j`.
    interior: Vec<[Complex64; 4]>,
}

impl<'p> Integrator<'p> {
    pub fn new(potential: &'p (dyn Potential + 'p), tol: f64, n_nodes: usize) -> Result<Self> {
        check_tol(tol)?;
        let grid = Grid::new(n_nodes)?;
        let h = grid.spacing();
        let nodes = (0..grid.len())
            .map(|j| sample(potential, grid.x(j)))
            .collect::<Result<Vec<_>>>()?;
        let interior = (0..grid.cells())
            .map(|j| {
                let x = grid.x(j);
                Ok([
                    sample(potential, x + C[0] * h)?,
                    sample(potential, x + C[1] * h)?,
                    sample(potential, x + C[2] * h)?,
                    sample(potential, x + C[3] * h)?,
                ])
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Integrator {
            potential,
            grid,
            tol,
            nodes,
            interior,
        })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// The potential sampled at the grid nodes.
    pub fn potential_on_grid(&self) -> GridFunction {
        GridFunction {
            grid: self.grid,
            values: self.nodes.clone(),
        }
    }

    pub fn integrate(&self, k: Complex64, y0: (Complex64, Complex64)) -> Result<Trajectory> {
        let (states, subdivided) = self.run(k * k, &Plain, [y0.0, y0.1])?;
        let mut psi = Vec::with_capacity(states.len());
        let mut dpsi = Vec::with_capacity(states.len());
        for s in states {
            psi.push(s[0]);
            dpsi.push(s[1]);
        }
        Ok(Trajectory {
            grid: self.grid,
            k,
            tol: self.tol,
            psi,
            dpsi,
            psik: None,
            dpsik: None,
            subdivided_cells: subdivided,
        })
    }

    pub fn integrate_with_variation(
        &self,
        k: Complex64,
        y0: (Complex64, Complex64),
        yk0: (Complex64, Complex64),
    ) -> Result<Trajectory> {
        let rhs = Variational { two_k: 2.0 * k };
        let (states, subdivided) = self.run(k * k, &rhs, [y0.0, y0.1, yk0.0, yk0.1])?;
        let n = states.len();
        let (mut psi, mut dpsi, mut psik, mut dpsik) = (
            Vec::with_capacity(n),
            Vec::with_capacity(n),
            Vec::with_capacity(n),
            Vec::with_capacity(n),
        );
        for s in states {
            psi.push(s[0]);
            dpsi.push(s[1]);
            psik.push(s[2]);
            dpsik.push(s[3]);
        }
        Ok(Trajectory {
            grid: self.grid,
            k,
            tol: self.tol,
            psi,
            dpsi,
            psik: Some(psik),
            dpsik: Some(dpsik),
            subdivided_cells: subdivided,
        })
    }

    fn run<const N: usize, R: Rhs<N>>(
        &self,
        k2: Complex64,
        rhs: &R,
        y0: State<N>,
    ) -> Result<(Vec<State<N>>, usize)> {
        let h = self.grid.spacing();
        let mut out = Vec::with_capacity(self.grid.len());
        let mut y = y0;
        let mut k1 = rhs.eval(self.nodes[0] - k2, &y);
        out.push(y);
        let mut subdivided = 0;
        for j in 0..self.grid.cells() {
            let x0 = self.grid.x(j);
            let x1 = self.grid.x(j + 1);
            let iv = &self.interior[j];
            let q = [
                iv[0] - k2,
                iv[1] - k2,
                iv[2] - k2,
                iv[3] - k2,
                self.nodes[j + 1] - k2,
            ];
            let step = dopri_step(rhs, &y, &k1, &q, x1 - x0, self.tol);
            if step.err <= 1.0 {
                y = step.y;
                k1 = step.k7;
            } else {
                subdivided += 1;
                let first = h * (0.9 * step.err.powf(-0.2)).clamp(0.05, 0.5);
                (y, k1) = self.subdivide(k2, rhs, x0, x1, y, k1, first)?;
            }
            if y.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
                return Err(Error::StepFailure {
                    x: x1,
                    reason: "solution is not finite".into(),
                });
            }
            out.push(y);
        }
        Ok((out, subdivided))
    }

    /// Adaptive stepping across `[x0, x1]` with direct potential evaluation.
    #[allow(clippy::too_many_arguments)]
    fn subdivide<const N: usize, R: Rhs<N>>(
        &self,
        k2: Complex64,
        rhs: &R,
        x0: f64,
        x1: f64,
        mut y: State<N>,
        mut k1: State<N>,
        mut h: f64,
    ) -> Result<(State<N>, State<N>)> {
        let mut x = x0;
        let mut steps = 0;
        while x < x1 {
            let last = x + 1.0001 * h >= x1;
            let hh = if last { x1 - x } else { h };
            if hh < MIN_STEP {
                return Err(Error::StepFailure {
                    x,
                    reason: format!("step size underflow (h = {hh:e})"),
                });
            }
            steps += 1;
            if steps > MAX_SUBSTEPS_PER_CELL {
                return Err(Error::StepFailure {
                    x,
                    reason: "too many substeps".into(),
                });
            }
            let mut q = [Complex64::new(0.0, 0.0); 5];
            for (qi, c) in q.iter_mut().zip(C) {
                let xs = if c == 1.0 && last { x1 } else { x + c * hh };
                *qi = sample(self.potential, xs)? - k2;
            }
            let step = dopri_step(rhs, &y, &k1, &q, hh, self.tol);
            let factor = if step.err == 0.0 {
                5.0
            } else {
                (0.9 * step.err.powf(-0.2)).clamp(0.2, 5.0)
            };
            if step.err <= 1.0 && step.err.is_finite() {
                y = step.y;
                k1 = step.k7;
                x = if last { x1 } else { x + hh };
                h = hh * factor.min(if last { 1.0 } else { 5.0 });
            } else {
                h = hh * factor.min(0.5);
            }
        }
        Ok((y, k1))
    }
}

/// Integrates `(psi, psi')` from `x = -pi` with initial data `y0`.
pub fn integrate<P: Potential>(
    v: &P,
    k: Complex64,
    y0: (Complex64, Complex64),
    tol: f64,
    n_nodes: usize,
) -> Result<Trajectory> {
    Integrator::new(v, tol, n_nodes)?.integrate(k, y0)
}

/// Integrates `(psi, psi', psi_k, psi_k')` from `x = -pi`.
pub fn integrate_with_variation<P: Potential>(
    v: &P,
    k: Complex64,
    y0: (Complex64, Complex64),
    yk0: (Complex64, Complex64),
    tol: f64,
    n_nodes: usize,
) -> Result<Trajectory> {
    Integrator::new(v, tol, n_nodes)?.integrate_with_variation(k, y0, yk0)
}
