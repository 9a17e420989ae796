use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Division by a value smaller than this in magnitude is reported as a pole.
pub const POLE_THRESHOLD: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Abs,
}

impl Func {
    pub(crate) const ALL: [Func; 7] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Exp,
        Func::Log,
        Func::Sqrt,
        Func::Abs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

/// Expression tree of a potential `V(x)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Real(f64),
    /// `c i`, with `i` alone stored as `Imag(1.0)`.
    Imag(f64),
    X,
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn eval(&self, x: f64) -> Result<Complex64> {
        Ok(match self {
            Expr::Real(v) => Complex64::new(*v, 0.0),
            Expr::Imag(v) => Complex64::new(0.0, *v),
            Expr::X => Complex64::new(x, 0.0),
            // 0 - z keeps +0 imaginary parts, so sqrt(-4) lands on 2i
            Expr::Neg(e) => Complex64::new(0.0, 0.0) - e.eval(x)?,
            Expr::Binary(op, a, b) => {
                let a = a.eval(x)?;
                let b = b.eval(x)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b.norm() < POLE_THRESHOLD {
                            return Err(Error::Pole { x });
                        }
                        a / b
                    }
                    BinOp::Pow => power(a, b, x)?,
                }
            }
            Expr::Call(f, arg) => {
                let z = arg.eval(x)?;
                match f {
                    Func::Sin => z.sin(),
                    Func::Cos => z.cos(),
                    Func::Tan => {
                        let c = z.cos();
                        if c.norm() < POLE_THRESHOLD {
                            return Err(Error::Pole { x });
                        }
                        z.sin() / c
                    }
                    Func::Exp => z.exp(),
                    Func::Log => {
                        if z.norm() < POLE_THRESHOLD {
                            return Err(Error::Pole { x });
                        }
                        z.ln()
                    }
                    Func::Sqrt => z.sqrt(),
                    Func::Abs => Complex64::new(z.norm(), 0.0),
                }
            }
        })
    }
}

fn power(base: Complex64, exponent: Complex64, x: f64) -> Result<Complex64> {
    // small integer exponents by repeated multiplication; everything else on the principal branch
    if exponent.im == 0.0 && exponent.re.fract() == 0.0 && exponent.re.abs() <= 64.0 {
        let n = exponent.re as i32;
        if n < 0 && base.norm() < POLE_THRESHOLD {
            return Err(Error::Pole { x });
        }
        return Ok(base.powi(n));
    }
    if base.norm() == 0.0 {
        if exponent.re > 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        return Err(Error::Pole { x });
    }
    Ok((exponent * base.ln()).exp())
}

/// Fully parenthesised form that parses back to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Real(v) => write!(f, "{v:?}"),
            Expr::Imag(v) => write!(f, "{v:?}i"),
            Expr::X => write!(f, "x"),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Binary(op, a, b) => write!(f, "({a}{}{b})", op.symbol()),
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}
