//! Complex potentials `V(x)` on `[-pi, pi]`: parsing, evaluation and PT-symmetry checks.

mod expr;
mod parser;

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub use expr::{BinOp, Expr, Func, POLE_THRESHOLD};

/// Source text of the exactly solvable PT-symmetric model.
pub const MODEL_POTENTIAL: &str = "-6/(cos(x)+2i*sin(x))^2";

/// Anything that can be sampled as a potential along the real segment.
pub trait Potential: Sync {
    fn eval(&self, x: f64) -> Result<Complex64>;
}

/// A parsed, immutable potential expression.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialExpr {
    ast: Expr,
    source: String,
}

impl PotentialExpr {
    pub fn ast(&self) -> &Expr {
        &self.ast
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn eval(&self, x: f64) -> Result<Complex64> {
        self.ast.eval(x)
    }

    /// True when the expression is the literal `0`.
    pub fn is_zero_literal(&self) -> bool {
        matches!(self.ast, Expr::Real(v) if v == 0.0)
    }
}

impl Potential for PotentialExpr {
    fn eval(&self, x: f64) -> Result<Complex64> {
        self.ast.eval(x)
    }
}

impl<F> Potential for F
where
    F: Fn(f64) -> Complex64 + Sync,
{
    fn eval(&self, x: f64) -> Result<Complex64> {
        Ok(self(x))
    }
}

/// Canonical, fully parenthesised text.
impl fmt::Display for PotentialExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.ast.fmt(f)
    }
}

pub fn parse_potential(src: &str) -> Result<PotentialExpr> {
    Ok(PotentialExpr {
        ast: parser::parse(src)?,
        source: src.to_string(),
    })
}

pub fn eval_potential(p: &PotentialExpr, x: f64) -> Result<Complex64> {
    p.eval(x)
}

pub fn builtin_potential(name: &str) -> Result<PotentialExpr> {
    match name {
        "paper" => parse_potential(MODEL_POTENTIAL),
        "zero" => parse_potential("0"),
        _ => Err(Error::UnknownName(name.to_string())),
    }
}

/// Builtin name if `spec` names one, otherwise parsed as an expression.
pub fn resolve_potential(spec: &str) -> Result<PotentialExpr> {
    match builtin_potential(spec.trim()) {
        Err(Error::UnknownName(_)) => parse_potential(spec),
        other => other,
    }
}

/// `max |conj(V(-x)) - V(x)|` over `n_samples` uniform points of `[-pi, pi]`.
pub fn pt_symmetry_defect<P: Potential + ?Sized>(p: &P, n_samples: usize) -> Result<f64> {
    if n_samples < 2 {
        return Err(Error::InvalidArgument(format!(
            "n_samples must be >= 2, got {n_samples}"
        )));
    }
    let mut defect = 0.0f64;
    for j in 0..n_samples {
        let x = -PI + 2.0 * PI * j as f64 / (n_samples - 1) as f64;
        let d = (p.eval(-x)?.conj() - p.eval(x)?).norm();
        defect = defect.max(d);
    }
    Ok(defect)
}
