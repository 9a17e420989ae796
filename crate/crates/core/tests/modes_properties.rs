use num_complex::Complex64;
use proptest::prelude::*;
use pt_spectral::analytic;
use pt_spectral::grid::{fit_scalar, Grid};
use pt_spectral::modes::{
    associated_mode, bilinear, build_xi_basis, eigenmode, pt_norm, pt_parity,
};
use pt_spectral::potential::{builtin_potential, PotentialExpr};
use pt_spectral::shooting::Shooter;
use pt_spectral::spectrum::find_spectrum;
use pt_spectral::Error;

fn paper() -> PotentialExpr {
    builtin_potential("paper").unwrap()
}

proptest! {
    #[test]
    fn bilinear_form_is_symmetric(
        a in prop::collection::vec(-3.0f64..3.0, 6),
        b in prop::collection::vec(-3.0f64..3.0, 6),
    ) {
        let g = Grid::new(513).unwrap();
        let f = g.sample(|x| Complex64::new(a[0] * x.sin() + a[1] * x * x, a[2] * (a[3] * x).cos()));
        let h = g.sample(|x| Complex64::new(b[0] * (b[1] * x).exp().min(1e3), b[2] * x + b[3]));
        let fg = bilinear(&f, &h).unwrap();
        let gf = bilinear(&h, &f).unwrap();
        prop_assert!((fg - gf).norm() <= 1e-12 * fg.norm().max(1e-300));
    }
}

#[test]
fn eigenfunctions_of_distinct_roots_are_biorthogonal() {
    let v = paper();
    let sh = Shooter::new(&v, 1e-10, 4097).unwrap();
    let ks = [0.5, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0];
    let modes: Vec<_> = ks.iter().map(|&k| eigenmode(&sh, k).unwrap()).collect();
    for i in 0..modes.len() {
        for j in i + 1..modes.len() {
            let (a, b) = (&modes[i].function, &modes[j].function);
            let s = bilinear(a, b).unwrap();
            assert!(s.norm() < 1e-6 * a.l2_norm() * b.l2_norm(), "k = {}, {}", ks[i], ks[j]);
        }
    }
}

#[test]
fn boundary_integral_identity() {
    let v = paper();
    let sh = Shooter::new(&v, 1e-10, 4097).unwrap();
    for n in [1u32, 3, 5] {
        let kn = n as f64 / 2.0;
        let root = sh.shoot(Complex64::new(kn, 0.0)).unwrap();
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        assert!((root.endpoint_slope - sign).norm() < 1e-8, "n = {n}");
        let psi_n = root.trajectory.psi_function();
        for k in [0.7, 1.3, 2.2] {
            let r = sh.shoot(Complex64::new(k, 0.0)).unwrap();
            let lhs = bilinear(&r.trajectory.psi_function(), &psi_n).unwrap();
            // Green's identity: d/dx [psi' psi~ - psi psi~'] = (k~^2 - k^2) psi psi~
            let rhs = root.endpoint_slope * r.d / (k * k - kn * kn);
            assert!((lhs - rhs).norm() < 1e-6 * rhs.norm(), "n = {n}, k = {k}: {lhs} vs {rhs}");
        }
    }
}

#[test]
fn boundary_identity_sign_on_free_closed_form() {
    // psi(x, k) = sin(k (x + pi)) / k; integrate the product exactly
    use std::f64::consts::PI;
    let g = Grid::new(4097).unwrap();
    for n in [1u32, 2, 3] {
        let kn = n as f64 / 2.0;
        for k in [0.7, 1.3, 2.2] {
            let u = g.sample(|x| Complex64::new((k * (x + PI)).sin() / k, 0.0));
            let w = g.sample(|x| Complex64::new((kn * (x + PI)).sin() / kn, 0.0));
            let exact = {
                let s = |a: f64| if a == 0.0 { 2.0 * PI } else { (2.0 * PI * a).sin() / a };
                0.5 * (s(k - kn) - s(k + kn)) / (k * kn)
            };
            let slope = (2.0 * PI * kn).cos();
            let d = (2.0 * PI * k).sin() / k;
            assert!((bilinear(&u, &w).unwrap().re - exact).abs() < 1e-10);
            assert!((exact - slope * d / (k * k - kn * kn)).abs() < 1e-12);
        }
    }
}

#[test]
fn bilinear_norm_vanishes_exactly_at_the_double_root() {
    let v = paper();
    let sh = Shooter::new(&v, 1e-10, 4097).unwrap();
    let s = find_spectrum(&sh, 0.1, 6.1, 601, 1e-10).unwrap();
    for r in &s.roots {
        let m = eigenmode(&sh, r.k).unwrap();
        assert_eq!(m.multiplicity, r.multiplicity);
        let n = pt_norm(&m.function).unwrap();
        assert_eq!(n.is_zero(), r.multiplicity == 2, "k = {}", r.k);
        if r.multiplicity == 1 {
            assert!(n.bilinear.norm() > 1e-3 * n.l2_sqr);
        }
    }
}

#[test]
fn shooting_modes_have_real_parity() {
    let v = paper();
    let sh = Shooter::new(&v, 1e-10, 4097).unwrap();
    for k in [0.5, 1.5, 2.0, 2.5, 3.0] {
        let p = pt_parity(&eigenmode(&sh, k).unwrap().function).unwrap();
        assert!(p.sign().is_some(), "k = {k}: {}", p.lambda);
    }
}

#[test]
fn associated_function_at_the_double_root() {
    let v = paper();
    let sh = Shooter::new(&v, 1e-10, 4097).unwrap();
    let vg = sh.integrator().potential_on_grid();
    let eigen = eigenmode(&sh, 2.0).unwrap();
    let assoc = associated_mode(&sh, 2.0).unwrap();
    assert_eq!(assoc.chain_index, 1);
    assert!(assoc.endpoint_residual() < 1e-6);
    assert!(assoc.chain_residual(&eigen.function, &vg).unwrap() < 1e-4);
    assert!(eigen.eigen_residual(&vg).unwrap() < 1e-4);

    let closed = eigen.function.grid.sample(analytic::assoc_psi_dot);
    let (c, r) = fit_scalar(&assoc.function, &closed).unwrap();
    assert!(r < 1e-6);
    assert!((c - 1.0).norm() < 1e-6, "{c}");

    let psi = eigen.function.grid.sample(analytic::shooting_psi_k2);
    assert!(eigen.function.relative_l2_distance(&psi).unwrap() < 1e-8);
}

#[test]
fn root_checks_reject_wrong_points() {
    let v = paper();
    let sh = Shooter::new(&v, 1e-10, 4097).unwrap();
    assert!(matches!(eigenmode(&sh, 1.0), Err(Error::NotARoot { .. })));
    assert!(matches!(eigenmode(&sh, 1.75), Err(Error::NotARoot { .. })));
    assert!(matches!(associated_mode(&sh, 1.5), Err(Error::NotDoubleRoot { .. })));
}

#[test]
fn double_root_pair_members_are_not_eigenfunctions() {
    let v = paper();
    let sh = Shooter::new(&v, 1e-10, 4097).unwrap();
    let vg = sh.integrator().potential_on_grid();
    let s = find_spectrum(&sh, 0.1, 3.6, 351, 1e-10).unwrap();
    let basis = build_xi_basis(&sh, &s, 100).unwrap();
    let pair: Vec<_> = basis.members.iter().filter(|m| m.multiplicity == 2).collect();
    assert_eq!(pair.len(), 2);
    for m in &pair {
        assert!(m.eigen_residual(&vg).unwrap() > 1e-2);
        assert!(m.squared_residual(&vg).unwrap() < 1e-3);
    }
    let assoc = associated_mode(&sh, 2.0).unwrap();
    assert!(assoc.squared_residual(&vg).unwrap() < 1e-3);
    for m in basis.members.iter().filter(|m| m.multiplicity == 1) {
        assert!(m.eigen_residual(&vg).unwrap() < 1e-4);
    }
}

#[test]
fn numerical_basis_is_orthonormal_with_reference_labels() {
    let v = paper();
    let sh = Shooter::new(&v, 1e-10, 4097).unwrap();
    let s = find_spectrum(&sh, 0.1, 6.1, 601, 1e-10).unwrap();
    let basis = build_xi_basis(&sh, &s, 100).unwrap();
    basis.require_complete().unwrap();
    assert_eq!(basis.labels, (1..=12).collect::<Vec<_>>());
    assert!(basis.gram_max_identity_deviation() < 1e-6);
    for (label, p) in basis.labels.iter().zip(&basis.parities) {
        let want = if label % 2 == 1 { 1 } else { -1 };
        assert_eq!(p.sign(), Some(want), "label {label}");
    }
    // the eigenfunction at k = 3/2 carries label 4
    assert!((basis.members[3].k - 1.5).abs() < 1e-8);
}

#[test]
fn free_basis_is_orthonormal() {
    let v = builtin_potential("zero").unwrap();
    let sh = Shooter::new(&v, 1e-10, 2049).unwrap();
    let s = find_spectrum(&sh, 0.1, 3.1, 301, 1e-10).unwrap();
    let basis = build_xi_basis(&sh, &s, 100).unwrap();
    assert_eq!(basis.labels, vec![1, 2, 3, 4, 5, 6]);
    assert!(basis.gram_max_identity_deviation() < 1e-6);
    assert!(basis.anomalies.is_empty());
}
