//! Closed forms for the model potential `V(x) = -6 / (cos x + 2i sin x)^2`.
//!
//! Everything here is an independent oracle for the numerical pipeline: none of
//! it touches the integrator.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// `cos x + 2i sin x`; never smaller than 1 in modulus on the real line.
pub fn denominator(x: f64) -> Complex64 {
    Complex64::new(x.cos(), 2.0 * x.sin())
}

fn denominator_prime(x: f64) -> Complex64 {
    Complex64::new(-x.sin(), 2.0 * x.cos())
}

pub fn potential(x: f64) -> Complex64 {
    let d = denominator(x);
    c(-6.0) / (d * d)
}

/// `sin x / (cos x + 2i sin x)`, i.e. `1 / (2i + cot x)` without the poles of `cot`.
fn g(x: f64) -> Complex64 {
    c(x.sin()) / denominator(x)
}

fn g_prime(x: f64) -> Complex64 {
    let d = denominator(x);
    c(1.0) / (d * d)
}

fn check_k(k: Complex64) -> Result<()> {
    if (k - c(1.0)).norm() == 0.0 {
        return Err(Error::InvalidArgument(
            "the plane-wave solutions degenerate at k = 1; use psi1_k1/psi2_k1".into(),
        ));
    }
    Ok(())
}

/// `e^{ikx} [2i - ki + 3/(2i + cot x)]`.
pub fn psi1(x: f64, k: Complex64) -> Result<Complex64> {
    check_k(k)?;
    Ok((I * k * x).exp() * (I * (c(2.0) - k) + 3.0 * g(x)))
}

pub fn psi1_prime(x: f64, k: Complex64) -> Result<Complex64> {
    check_k(k)?;
    let e = (I * k * x).exp();
    Ok(e * (I * k * (I * (c(2.0) - k) + 3.0 * g(x)) + 3.0 * g_prime(x)))
}

/// `e^{-ikx} [2i + ki + 3/(2i + cot x)]`.
pub fn psi2(x: f64, k: Complex64) -> Result<Complex64> {
    check_k(k)?;
    Ok((-I * k * x).exp() * (I * (c(2.0) + k) + 3.0 * g(x)))
}

pub fn psi2_prime(x: f64, k: Complex64) -> Result<Complex64> {
    check_k(k)?;
    let e = (-I * k * x).exp();
    Ok(e * (-I * k * (I * (c(2.0) + k) + 3.0 * g(x)) + 3.0 * g_prime(x)))
}

/// `1 / (cos x + 2i sin x)`.
pub fn psi1_k1(x: f64) -> Complex64 {
    c(1.0) / denominator(x)
}

pub fn psi1_k1_prime(x: f64) -> Complex64 {
    let d = denominator(x);
    -denominator_prime(x) / (d * d)
}

fn psi2_k1_numerator(x: f64) -> Complex64 {
    Complex64::new(5.0 * (2.0 * x).sin() - 6.0 * x, -4.0 * (2.0 * x).cos())
}

/// `(5 sin 2x - 4i cos 2x - 6x) / (cos x + 2i sin x)`.
pub fn psi2_k1(x: f64) -> Complex64 {
    psi2_k1_numerator(x) / denominator(x)
}

pub fn psi2_k1_prime(x: f64) -> Complex64 {
    let d = denominator(x);
    let n_prime = Complex64::new(10.0 * (2.0 * x).cos() - 6.0, 8.0 * (2.0 * x).sin());
    n_prime / d - psi2_k1_numerator(x) * denominator_prime(x) / (d * d)
}

/// `u v' - u' v`.
pub fn wronskian(u: Complex64, du: Complex64, v: Complex64, dv: Complex64) -> Complex64 {
    u * dv - du * v
}

/// `sin(t) / t`, continuous at 0.
fn sinc(t: f64) -> f64 {
    if t.abs() < 1e-4 {
        let t2 = t * t;
        1.0 - t2 / 6.0 + t2 * t2 / 120.0
    } else {
        t.sin() / t
    }
}

/// `psi(pi, k) = (k^2 - 4) sin(2 pi k) / (k (k^2 - 1))` for the shooting solution,
/// continued through the removable singularities at `k = 0, +-1`.
pub fn characteristic(k: f64) -> f64 {
    let n = k.round();
    // exact: period-1 reduction of sin(2 pi k)
    let r = k - n;
    let q = k * k - 4.0;
    if n == 1.0 {
        q * 2.0 * PI * sinc(2.0 * PI * r) / (k * (k + 1.0))
    } else if n == 0.0 {
        q * 2.0 * PI * sinc(2.0 * PI * r) / (k * k - 1.0)
    } else if n == -1.0 {
        q * 2.0 * PI * sinc(2.0 * PI * r) / (k * (k - 1.0))
    } else {
        q * (2.0 * PI * r).sin() / (k * (k * k - 1.0))
    }
}

/// Free-particle characteristic function `sin(2 pi k) / k`.
pub fn characteristic_free(k: f64) -> f64 {
    let n = k.round();
    let r = k - n;
    if n == 0.0 {
        2.0 * PI * sinc(2.0 * PI * r)
    } else {
        (2.0 * PI * r).sin() / k
    }
}

/// Closed-form eigenfunction `psi_n` at `k = n/2` (`n >= 1`, `n != 2`).
pub fn eigenfunction_n(n: u32, x: f64) -> Result<Complex64> {
    if n == 0 || n == 2 {
        return Err(Error::InvalidArgument(format!(
            "no eigenfunction for n = {n} (n = 2 is not a spectral point)"
        )));
    }
    let nf = n as f64;
    let n2 = nf * nf;
    let phase = 0.5 * nf * (PI + x);
    let bracket = Complex64::new((16.0 - n2) * x.cos(), -2.0 * (n2 - 4.0) * x.sin());
    let num = bracket * phase.sin() - c(6.0 * nf * x.sin() * phase.cos());
    Ok(num / denominator(x))
}

/// `-24 e^{2ix} sin x / (cos x + 2i sin x)`, the zero-norm eigenfunction at `k = 2`.
pub fn psi4(x: f64) -> Complex64 {
    c(-24.0 * x.sin()) * (2.0 * I * x).exp() / denominator(x)
}

/// `(12ix e^{2ix} - e^{-2ix} + 8) sin x / (cos x + 2i sin x)`.
pub fn phi4(x: f64) -> Complex64 {
    let num = 12.0 * I * x * (2.0 * I * x).exp() - (-2.0 * I * x).exp() + c(8.0);
    num * x.sin() / denominator(x)
}

/// The shooting solution `psi(x, 2)` (`psi(-pi) = 0`, `psi'(-pi) = 1`), equal to `psi4 / (-24)`.
pub fn shooting_psi_k2(x: f64) -> Complex64 {
    psi4(x) / -24.0
}

/// `d psi(x, k)/dk` at `k = 2`:
/// `(1/12) [12 i pi - 7 + 12 i x + 8 e^{-2ix} - e^{-4ix}] psi(x, 2)`.
pub fn assoc_psi_dot(x: f64) -> Complex64 {
    let bracket = 12.0 * I * PI - c(7.0) + 12.0 * I * x + 8.0 * (-2.0 * I * x).exp()
        - (-4.0 * I * x).exp();
    bracket * shooting_psi_k2(x) / 12.0
}

/// Closed-form bilinear norm `int psi_n^2 dx = pi (n^2 - 4)(n^2 - 16)`.
pub fn eigenfunction_bilinear_norm(n: u32) -> f64 {
    let n2 = (n * n) as f64;
    PI * (n2 - 4.0) * (n2 - 16.0)
}

/// PT parity `(-1)^(n-1)` of the closed-form `psi_n`.
pub fn eigenfunction_parity(n: u32) -> f64 {
    if n % 2 == 1 {
        1.0
    } else {
        -1.0
    }
}
