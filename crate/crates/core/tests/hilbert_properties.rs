use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;
use proptest::prelude::*;
use pt_spectral::grid::GridFunction;
use pt_spectral::hilbert::{
    delta_kernel_test, diagonalizability_report, dynamical_inner_product, expand, subspace_curve,
    reconstruction_curve, test_functions, MetricSpace,
};
use pt_spectral::modes::{bilinear, build_xi_basis, eigenmode, Basis};
use pt_spectral::potential::{builtin_potential, parse_potential};
use pt_spectral::shooting::Shooter;
use pt_spectral::spectrum::find_spectrum;

fn paper_basis() -> &'static Basis {
    static B: OnceLock<Basis> = OnceLock::new();
    B.get_or_init(|| {
        let v = builtin_potential("paper").unwrap();
        let sh = Shooter::new(&v, 1e-10, 4097).unwrap();
        let s = find_spectrum(&sh, 0.1, 6.1, 601, 1e-10).unwrap();
        build_xi_basis(&sh, &s, 100).unwrap()
    })
}

fn random_function(c: &[f64]) -> GridFunction {
    let g = paper_basis().members[0].function.grid;
    g.sample(|x| {
        let s = x + PI;
        let bump = s * (2.0 * PI - s);
        Complex64::new(c[0] * bump + c[1] * (2.0 * s).sin(), c[2] * bump * (c[3] * x).cos())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn dynamical_norm_is_coefficient_norm(
        re in prop::collection::vec(-2.0f64..2.0, 12),
        im in prop::collection::vec(-2.0f64..2.0, 12),
    ) {
        let space = MetricSpace::new(paper_basis().clone());
        let c: Vec<Complex64> = re.iter().zip(&im).map(|(a, b)| Complex64::new(*a, *b)).collect();
        let f = space.combination(&c).unwrap();
        let want: f64 = c.iter().map(|z| z.norm_sqr()).sum();
        let got = space.inner_product(&f, &f).unwrap();
        prop_assert!((got - want).norm() <= 1e-5 * want);
        prop_assert!(got.re >= 0.0);
    }

    #[test]
    fn expansion_is_linear(
        cf in prop::collection::vec(-2.0f64..2.0, 4),
        cg in prop::collection::vec(-2.0f64..2.0, 4),
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
        bi in -3.0f64..3.0,
    ) {
        let basis = paper_basis();
        let (f, g) = (random_function(&cf), random_function(&cg));
        let (a, b) = (Complex64::new(a, 0.0), Complex64::new(b, bi));
        let mix = f.combine(a, &g, b).unwrap();
        let (ef, eg, em) = (expand(&f, basis).unwrap(), expand(&g, basis).unwrap(), expand(&mix, basis).unwrap());
        let scale = ef.iter().chain(&eg).map(|z| z.norm()).fold(1.0, f64::max) * (a.norm() + b.norm()).max(1.0);
        for i in 0..em.len() {
            prop_assert!((em[i] - (a * ef[i] + b * eg[i])).norm() <= 1e-10 * scale);
        }
    }
}

#[test]
fn basis_is_orthonormal_in_the_dynamical_product() {
    let b = paper_basis();
    for (i, xi) in b.members.iter().enumerate() {
        for (j, xj) in b.members.iter().enumerate() {
            let v = dynamical_inner_product(&xi.function, &xj.function, b).unwrap();
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((v - want).norm() < 1e-6);
        }
    }
}

#[test]
fn zero_norm_eigenfunction_has_positive_dynamical_norm() {
    let v = builtin_potential("paper").unwrap();
    let sh = Shooter::new(&v, 1e-10, 4097).unwrap();
    let psi = eigenmode(&sh, 2.0).unwrap().function;
    let b = paper_basis();
    assert!(bilinear(&psi, &psi).unwrap().norm() < 1e-8 * psi.norm_sqr());
    let n = dynamical_inner_product(&psi, &psi, b).unwrap();
    assert!(n.re > 1e-3 * psi.norm_sqr(), "{n}");
    assert!(n.im.abs() < 1e-9 * n.re);
}

#[test]
fn reconstruction_needs_the_associated_member() {
    let b = paper_basis();
    let reduced = b.without_associated();
    assert_eq!(reduced.len(), b.len() - 1);
    for (name, f) in test_functions(b.members[0].function.grid) {
        let full = *reconstruction_curve(&f, b).unwrap().last().unwrap();
        let red = *reconstruction_curve(&f, &reduced).unwrap().last().unwrap();
        assert!(full < 2e-2, "{name}: {full:e}");
        assert!(red > 10.0 * full, "{name}: {red:e} vs {full:e}");
    }
    let sine = b.members[0].function.grid.sample(|x| Complex64::new((x + PI).sin(), 0.0));
    let curve = subspace_curve(&sine, b).unwrap();
    assert!(curve.last().unwrap().error < 1e-2);
    for w in curve.windows(2) {
        assert!(w[1].error <= w[0].error * (1.0 + 1e-12));
    }
}

#[test]
fn free_kernel_reproduces_sines() {
    let v = builtin_potential("zero").unwrap();
    let sh = Shooter::new(&v, 1e-10, 4097).unwrap();
    let s = find_spectrum(&sh, 0.1, 3.1, 301, 1e-10).unwrap();
    let b = build_xi_basis(&sh, &s, 100).unwrap();
    let tests = test_functions(b.members[0].function.grid);
    let rows = delta_kernel_test(&b, &tests[1..2], b.len()).unwrap();
    assert_eq!(rows[0].name, "sin(2(x+pi)/2)");
    for e in &rows[0].errors[1..] {
        assert!(*e < 1e-8, "{:?}", rows[0].errors);
    }
}

#[test]
fn verdicts() {
    let v = builtin_potential("paper").unwrap();
    let sh = Shooter::new(&v, 1e-10, 4097).unwrap();
    let s = find_spectrum(&sh, 0.1, 3.6, 351, 1e-10).unwrap();
    let b = build_xi_basis(&sh, &s, 100).unwrap();
    let r = diagonalizability_report(&s, &b);
    assert_eq!(
        r.verdict,
        "non-diagonalizable: double root at k=2; basis completed with 1 associated function"
    );
    assert!(r.complete && !r.diagonalizable);

    let v = builtin_potential("zero").unwrap();
    let sh = Shooter::new(&v, 1e-10, 2049).unwrap();
    let s = find_spectrum(&sh, 0.1, 3.1, 301, 1e-10).unwrap();
    let b = build_xi_basis(&sh, &s, 100).unwrap();
    assert_eq!(diagonalizability_report(&s, &b).verdict, "diagonalizable");
}

#[test]
fn scan_failures_give_a_partial_report() {
    // singular between grid nodes: integration fails at every k
    let v = parse_potential("1/(x - 0.0001)").unwrap();
    let sh = Shooter::new(&v, 1e-10, 257).unwrap();
    let s = find_spectrum(&sh, 0.5, 1.5, 32, 1e-10).unwrap();
    assert!(s.scan_failures > 0);
    let b = build_xi_basis(&sh, &s, 100).unwrap();
    let r = diagonalizability_report(&s, &b);
    assert!(!r.warnings.is_empty());
}
