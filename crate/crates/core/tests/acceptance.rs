//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::f64::consts::PI;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::time::Instant;

use num_complex::Complex64;
use pt_spectral::analytic;
use pt_spectral::grid::{fit_scalar, Grid};
use pt_spectral::hilbert::{dynamical_inner_product, reconstruction_curve, subspace_curve, MetricSpace};
use pt_spectral::modes::{associated_mode, bilinear, build_xi_basis, eigenmode, pt_norm, Basis};
use pt_spectral::ode::{wronskian_drift, Integrator};
use pt_spectral::potential::{builtin_potential, parse_potential, PotentialExpr};
use pt_spectral::shooting::Shooter;
use pt_spectral::spectrum::{find_spectrum, SpectrumReport};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const TOL: f64 = 1e-10;
const NODES: usize = 4097;

type Outcome = Result<String, String>;
type Check<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn ok<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

struct Fixture {
    paper: PotentialExpr,
    spectrum: SpectrumReport,
    spectrum_secs: f64,
    basis: Basis,
}

impl Fixture {
    fn new() -> Self {
        let paper = builtin_potential("paper").unwrap();
        let start = Instant::now();
        let sh = Shooter::new(&paper, TOL, NODES).unwrap();
        let spectrum = find_spectrum(&sh, 0.1, 6.1, 601, TOL).unwrap();
        let spectrum_secs = start.elapsed().as_secs_f64();
        let basis = build_xi_basis(&sh, &spectrum, 100).unwrap();
        Fixture { paper, spectrum, spectrum_secs, basis }
    }

    fn shooter(&self) -> Shooter<'_> {
        Shooter::new(&self.paper, TOL, NODES).unwrap()
    }
}

fn spectrum_roots(f: &Fixture) -> Outcome {
    let roots = &f.spectrum.roots;
    let mut expected: Vec<f64> = (1..=12).filter(|&n| n != 2).map(|n| n as f64 / 2.0).collect();
    expected.sort_by(f64::total_cmp);
    ensure(roots.len() == expected.len(), format!("found {} roots, want {}", roots.len(), expected.len()))?;
    let mut worst: f64 = 0.0;
    for (r, k) in roots.iter().zip(&expected) {
        worst = worst.max((r.k - k).abs());
    }
    ensure(worst < 1e-8, format!("max root error {worst:e}"))?;
    ensure(roots.iter().all(|r| (r.k - 1.0).abs() > 0.05), "root near k = 1")?;
    let double: Vec<_> = roots.iter().filter(|r| r.multiplicity == 2).collect();
    ensure(
        double.len() == 1 && (double[0].k - 2.0).abs() < 1e-8,
        format!("multiple roots {:?}", double.iter().map(|r| (r.k, r.multiplicity)).collect::<Vec<_>>()),
    )?;
    ensure(roots.iter().all(|r| r.multiplicity <= 2), "multiplicity above 2")?;
    ensure(f.spectrum_secs < 30.0, format!("{:.2} s", f.spectrum_secs))?;
    Ok(format!("11 roots, max error {worst:.1e}, double root at k=2, {:.2} s", f.spectrum_secs))
}

fn characteristic_oracle(f: &Fixture) -> Outcome {
    let scan = ok(f.shooter().scan(0.1, 6.1, 601))?;
    let mut worst: f64 = 0.0;
    for p in &scan {
        let d = p.d().ok_or(format!("scan failed at k = {}", p.k))?;
        worst = worst.max((d - c(analytic::characteristic(p.k))).norm());
    }
    ensure(scan.len() == 601 && worst < 1e-8, format!("max |D - D_exact| = {worst:e}"))?;
    Ok(format!("601 points, max |D - D_exact| = {worst:.1e}"))
}

fn zero_norm(f: &Fixture) -> Outcome {
    let sh = f.shooter();
    let mut min_simple = f64::INFINITY;
    let mut zero = f64::NAN;
    for r in &f.spectrum.roots {
        let n = ok(pt_norm(&ok(eigenmode(&sh, r.k))?.function))?;
        let rel = n.bilinear.norm() / n.l2_sqr;
        if r.multiplicity == 2 {
            zero = rel;
        } else {
            min_simple = min_simple.min(rel);
        }
    }
    ensure(zero < 1e-8, format!("k=2 relative norm {zero:e}"))?;
    ensure(min_simple > 1e-3, format!("smallest simple-root relative norm {min_simple:e}"))?;
    Ok(format!("k=2 relative norm {zero:.1e}, simple roots >= {min_simple:.3}"))
}

fn closed_form_gram() -> Outcome {
    let g = Grid::new(NODES).unwrap();
    let psi = |n: u32| g.sample(|x| analytic::eigenfunction_n(n, x).unwrap());
    let phi = g.sample(analytic::phi4);
    let psi4 = g.sample(analytic::psi4);
    let checks = [
        ("(phi4, phi4)", ok(bilinear(&phi, &phi))?, -44.0 * PI),
        ("(phi4, psi4)", ok(bilinear(&phi, &psi4))?, -96.0 * PI),
        ("(psi1, PT psi1)", ok(pt_norm(&psi(1)))?.pt, 45.0 * PI),
        ("(psi3, PT psi3)", ok(pt_norm(&psi(3)))?.pt, -35.0 * PI),
    ];
    for (name, got, want) in checks {
        let rel = (got - want).norm() / want.abs();
        ensure(rel < 1e-6, format!("{name} = {got}, want {want}"))?;
    }
    Ok("-44pi, -96pi, 45pi, -35pi reproduced to 1e-6".into())
}

fn associated_function(f: &Fixture) -> Outcome {
    let sh = f.shooter();
    let vg = sh.integrator().potential_on_grid();
    let eigen = ok(eigenmode(&sh, 2.0))?;
    let assoc = ok(associated_mode(&sh, 2.0))?;
    let end = assoc.endpoint_residual();
    let chain = ok(assoc.chain_residual(&eigen.function, &vg))?;
    let closed = eigen.function.grid.sample(analytic::assoc_psi_dot);
    let (coef, fit) = ok(fit_scalar(&assoc.function, &closed))?;
    ensure(end < 1e-6, format!("endpoint {end:e}"))?;
    ensure(chain < 1e-4, format!("chain residual {chain:e}"))?;
    ensure(fit < 1e-6, format!("closed-form fit residual {fit:e} (c = {coef})"))?;
    Ok(format!("endpoint {end:.1e}, chain residual {chain:.1e}, fit {fit:.1e}"))
}

fn truncated_gram() -> Outcome {
    let v = builtin_potential("paper").unwrap();
    let sh = ok(Shooter::new(&v, TOL, NODES))?;
    let s = ok(find_spectrum(&sh, 0.1, 3.6, 351, TOL))?;
    let b = ok(build_xi_basis(&sh, &s, 100))?;
    ok(b.require_complete())?;
    ensure(b.len() == 7, format!("{} members", b.len()))?;
    let off = b.gram_max_offdiag();
    let dev = b.gram_max_identity_deviation();
    ensure(off < 1e-6 && dev < 1e-6, format!("off-diagonal {off:e}, identity deviation {dev:e}"))?;
    Ok(format!("7 members, off-diagonal {off:.1e}, identity deviation {dev:.1e}"))
}

fn completeness(f: &Fixture) -> Outcome {
    let b = &f.basis;
    let sine = b.members[0].function.grid.sample(|x| c((x + PI).sin()));
    let full = *ok(reconstruction_curve(&sine, b))?.last().unwrap();
    let reduced = *ok(reconstruction_curve(&sine, &b.without_associated()))?.last().unwrap();
    ensure(reduced >= 10.0 * full, format!("full {full:e}, reduced {reduced:e}"))?;
    let curve = ok(subspace_curve(&sine, b))?;
    let errors: Vec<f64> = curve.iter().map(|p| p.error).collect();
    for w in errors.windows(2) {
        ensure(w[1] <= w[0] * (1.0 + 1e-12), format!("not monotone: {errors:?}"))?;
    }
    let labels = ok(reconstruction_curve(&sine, b))?;
    println!(
        "      by label: {}",
        labels.iter().map(|e| format!("{e:.3e}")).collect::<Vec<_>>().join(" ")
    );
    println!(
        "      by subspace: {}",
        errors.iter().map(|e| format!("{e:.3e}")).collect::<Vec<_>>().join(" ")
    );
    Ok(format!("full {full:.2e}, reduced {reduced:.2e} ({:.0}x), subspace curve monotone", reduced / full))
}

fn metric_positivity(f: &Fixture) -> Outcome {
    let space = MetricSpace::new(f.basis.clone());
    let mut rng = StdRng::seed_from_u64(20261015);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let cs: Vec<Complex64> = (0..space.basis.len())
            .map(|_| Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)))
            .collect();
        let v = ok(space.combination(&cs))?;
        let want: f64 = cs.iter().map(|z| z.norm_sqr()).sum();
        let got = ok(space.inner_product(&v, &v))?;
        ensure(got.re > 0.0, format!("non-positive norm {got}"))?;
        worst = worst.max((got - want).norm() / want);
    }
    ensure(worst < 1e-5, format!("max relative deviation {worst:e}"))?;
    let psi = ok(eigenmode(&f.shooter(), 2.0))?.function;
    let n = ok(dynamical_inner_product(&psi, &psi, &f.basis))?;
    ensure(n.re > 0.0, format!("psi4 dynamical norm {n}"))?;
    Ok(format!("100 vectors, max relative deviation {worst:.1e}; psi4 norm {:.3e} > 0", n.re))
}

fn boundary_identity(f: &Fixture) -> Outcome {
    let sh = f.shooter();
    let mut worst: f64 = 0.0;
    let mut slope_err: f64 = 0.0;
    for n in [1u32, 3, 5] {
        let kn = n as f64 / 2.0;
        let root = ok(sh.shoot(c(kn)))?;
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        slope_err = slope_err.max((root.endpoint_slope - sign).norm());
        let psi_n = root.trajectory.psi_function();
        for k in [0.7, 1.3, 2.2] {
            let r = ok(sh.shoot(c(k)))?;
            let lhs = ok(bilinear(&r.trajectory.psi_function(), &psi_n))?;
            let rhs = root.endpoint_slope * r.d / (k * k - kn * kn);
            worst = worst.max((lhs - rhs).norm() / rhs.norm());
        }
    }
    ensure(slope_err < 1e-8, format!("psi'(pi, n/2) off by {slope_err:e}"))?;
    ensure(worst < 1e-6, format!("max relative error {worst:e}"))?;
    Ok(format!("max relative error {worst:.1e}; psi'(pi, n/2) = (-1)^n to {slope_err:.1e}"))
}

fn random_expr(rng: &mut StdRng, depth: u32) -> String {
    if depth == 0 || rng.gen_bool(0.3) {
        return match rng.gen_range(0..4) {
            0 => "x".into(),
            1 => "i".into(),
            2 => format!("{}", rng.gen_range(0.0..50.0)),
            _ => format!("{}i", rng.gen_range(0.0..5.0)),
        };
    }
    let a = random_expr(rng, depth - 1);
    match rng.gen_range(0..3) {
        0 => {
            let op = ["+", "-", "*", "/", "^"][rng.gen_range(0..5)];
            format!("{a} {op} ({})", random_expr(rng, depth - 1))
        }
        1 => format!("-({a})"),
        _ => format!("{}({a})", ["sin", "cos", "tan", "exp", "log", "sqrt", "abs"][rng.gen_range(0..7)]),
    }
}

fn same_bits(a: &Complex64, b: &Complex64) -> bool {
    let eq = |u: f64, v: f64| u.to_bits() == v.to_bits() || (u.is_nan() && v.is_nan());
    eq(a.re, b.re) && eq(a.im, b.im)
}

fn property_suites(f: &Fixture) -> Outcome {
    let mut rng = StdRng::seed_from_u64(7);

    // Wronskian conservation
    let free = builtin_potential("zero").unwrap();
    let mut drift: f64 = 0.0;
    for _ in 0..20 {
        let k = rng.gen_range(0.3..6.0);
        for v in [&f.paper, &free] {
            let it = ok(Integrator::new(v, TOL, 1025))?;
            let u = ok(it.integrate(c(k), (c(0.0), c(1.0))))?;
            let w = ok(it.integrate(c(k), (c(1.0), c(0.0))))?;
            drift = drift.max(wronskian_drift(&ok(u.wronskian(&w))?));
        }
    }
    ensure(drift <= 100.0 * TOL, format!("Wronskian drift {drift:e}"))?;

    // bilinear symmetry
    let g = Grid::new(513).unwrap();
    let mut asym: f64 = 0.0;
    for _ in 0..50 {
        let a: Vec<f64> = (0..4).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let u = g.sample(|x| Complex64::new(a[0] * x.sin() + a[1] * x * x, a[2] * (a[3] * x).cos()));
        let w = g.sample(|x| Complex64::new(a[3] * x.exp(), a[0] * x + a[1]));
        let (uw, wu) = (ok(bilinear(&u, &w))?, ok(bilinear(&w, &u))?);
        asym = asym.max((uw - wu).norm() / uw.norm().max(1e-300));
    }
    ensure(asym <= 1e-12, format!("bilinear asymmetry {asym:e}"))?;

    // parse / print round trip
    let xs: Vec<f64> = (0..200).map(|_| rng.gen_range(-PI..PI)).collect();
    for _ in 0..200 {
        let src = random_expr(&mut rng, 4);
        let p = ok(parse_potential(&src))?;
        let q = ok(parse_potential(&p.to_string()))?;
        ensure(p.ast() == q.ast(), format!("round trip changed {src}"))?;
        for &x in &xs {
            let same = match (p.eval(x), q.eval(x)) {
                (Ok(u), Ok(v)) => same_bits(&u, &v),
                (Err(e), Err(h)) => e == h,
                _ => false,
            };
            ensure(same, format!("round trip changed the value of {src} at x = {x}"))?;
        }
    }

    // deterministic CLI output
    let dirs = [ok(tempfile::tempdir())?, ok(tempfile::tempdir())?];
    for d in &dirs {
        let status = ok(Command::new(env!("CARGO_BIN_EXE_pt-spectral"))
            .args(["report", "--kmax", "3.6", "--n", "351", "--out"])
            .arg(d.path())
            .status())?;
        ensure(status.success(), format!("report exited with {status}"))?;
    }
    let mut names: Vec<_> = ok(fs::read_dir(dirs[0].path()))?
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    for n in &names {
        let a = ok(fs::read(dirs[0].path().join(n)))?;
        let b = ok(fs::read(dirs[1].path().join(n)))?;
        ensure(a == b, format!("{n:?} differs between runs"))?;
    }
    Ok(format!(
        "Wronskian drift {drift:.1e}, bilinear asymmetry {asym:.1e}, 200 round trips, {} identical files",
        names.len()
    ))
}

fn main() -> ExitCode {
    panic::set_hook(Box::new(|_| {}));
    let fixture = Fixture::new();
    let f = &fixture;
    let checks: Vec<Check> = vec![
        ("AC1 spectrum roots and multiplicities", Box::new(|| spectrum_roots(f))),
        ("AC2 characteristic function vs closed form", Box::new(|| characteristic_oracle(f))),
        ("AC3 zero bilinear norm only at the double root", Box::new(|| zero_norm(f))),
        ("AC4 closed-form Gram and PT norms", Box::new(closed_form_gram)),
        ("AC5 associated function at k=2", Box::new(|| associated_function(f))),
        ("AC6 orthonormal basis up to k=3.5", Box::new(truncated_gram)),
        ("AC7 completeness needs the associated member", Box::new(|| completeness(f))),
        ("AC8 dynamical metric is positive", Box::new(|| metric_positivity(f))),
        ("AC9 boundary integral identity", Box::new(|| boundary_identity(f))),
        ("AC10 property suites", Box::new(|| property_suites(f))),
    ];
    let mut failed = 0;
    for (name, check) in &checks {
        let result = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        match result {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    println!("{} of {} criteria passed", checks.len() - failed, checks.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
