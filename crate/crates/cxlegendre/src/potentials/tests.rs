use super::*;
use crate::domain::ChartedDomain;
use approx::assert_relative_eq;
use num_complex::Complex64;
use proptest::prelude::*;
use std::collections::BTreeMap;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn euclid(n: usize) -> AnalyticPotential {
    AnalyticPotential::euclidean(n)
}

fn fs() -> AnalyticPotential {
    AnalyticPotential::fubini_study()
}

fn single_term_series(coeff: f64) -> AnalyticPotential {
    AnalyticPotential::Series(
        HermitianSeries::new(
            1,
            2,
            [(MultiIndex(vec![1]), MultiIndex(vec![1]), c(coeff, 0.0))],
        )
        .unwrap(),
    )
}

#[test]
fn evaluate_builtins() {
    assert_relative_eq!(euclid(1).evaluate(&[c(1.0, 1.0)]).unwrap(), 2.0);
    assert_relative_eq!(fs().evaluate(&[c(0.0, 0.0)]).unwrap(), 0.0);
    assert_relative_eq!(single_term_series(2.0).evaluate(&[c(1.0, 0.0)]).unwrap(), 2.0);
}

#[test]
fn polarize_euclidean_is_z_dot_wbar() {
    let v = euclid(1).polarize(&[c(1.0, 1.0)], &[c(1.0, 0.0)]).unwrap();
    assert_relative_eq!(v.re, 1.0, max_relative = 1e-14);
    assert_relative_eq!(v.im, 1.0, max_relative = 1e-14);
}

#[test]
fn polarize_fubini_study_diagonal_matches_evaluate() {
    let z = [c(1.0, 0.0)];
    let v = fs().polarize(&z, &z).unwrap();
    assert_relative_eq!(v.re, 2.0f64.ln(), max_relative = 1e-14);
    assert!(v.im.abs() < 1e-14);
    assert_relative_eq!(v.re, fs().evaluate(&z).unwrap(), max_relative = 1e-14);
}

#[test]
fn polarize_fubini_study_rejects_antipodal_pairs() {
    // 1 + z·w̄ = 0 at w = -1/z̄.
    let err = fs().polarize(&[c(1.0, 0.0)], &[c(-1.0, 0.0)]).unwrap_err();
    assert!(matches!(err, Error::PolarizationDomain { .. }));
}

#[test]
fn diastasis_euclidean_is_squared_distance() {
    let p = euclid(2);
    let z = [c(0.3, -0.4), c(1.0, 0.2)];
    let w = [c(-0.1, 0.6), c(0.5, -0.5)];
    let expect: f64 = z.iter().zip(&w).map(|(a, b)| (a - b).norm_sqr()).sum();
    assert_relative_eq!(p.diastasis(&z, &w).unwrap(), expect, max_relative = 1e-13);
}

#[test]
fn diastasis_fubini_study_closed_form() {
    // Two routes: the defining combination and the closed-form quotient.
    let z = [c(1.0, 0.0)];
    let w = [c(0.0, 0.0)];
    let via_definition = fs().diastasis(&z, &w).unwrap();
    let closed = ((1.0 + 1.0) * (1.0 + 0.0) / (1.0f64)).ln();
    assert_relative_eq!(via_definition, closed, max_relative = 1e-13);
    assert_relative_eq!(via_definition, 2.0f64.ln(), max_relative = 1e-13);
}

#[test]
fn diastasis_vanishes_on_diagonal() {
    let z = [c(0.7, -0.3)];
    assert!(fs().diastasis(&z, &z).unwrap().abs() < 1e-14);
    assert!(euclid(1).diastasis(&z, &z).unwrap().abs() < 1e-14);
}

#[test]
fn complex_derivatives_euclidean() {
    let z = [c(0.3, 0.5), c(-0.2, 0.1)];
    let (dz, dzbar, h) = euclid(2).complex_derivatives(&z).unwrap();
    for j in 0..2 {
        assert_relative_eq!(dzbar[j].re, z[j].re, max_relative = 1e-14);
        assert_relative_eq!(dzbar[j].im, z[j].im, max_relative = 1e-14);
        assert_relative_eq!(dz[j].re, z[j].conj().re, max_relative = 1e-14);
        for k in 0..2 {
            let expect = if j == k { 1.0 } else { 0.0 };
            assert_relative_eq!(h[j][k].re, expect, max_relative = 1e-14);
            assert!(h[j][k].im.abs() < 1e-14);
        }
    }
}

#[test]
fn fubini_study_hessian_at_origin_matches_finite_differences() {
    let (_, _, h) = fs().complex_derivatives(&[c(0.0, 0.0)]).unwrap();
    assert_relative_eq!(h[0][0].re, 1.0, max_relative = 1e-12);

    // Central finite differences of φ at step 1e-4, tolerance 1e-6:
    // ∂∂̄φ = (φ_xx + φ_yy)/4.
    let step = 1e-4;
    let f = |x: f64, y: f64| fs().evaluate(&[c(x, y)]).unwrap();
    for &(x, y) in &[(0.0, 0.0), (0.4, -0.3), (0.9, 0.7)] {
        let fxx = (f(x + step, y) - 2.0 * f(x, y) + f(x - step, y)) / (step * step);
        let fyy = (f(x, y + step) - 2.0 * f(x, y) + f(x, y - step)) / (step * step);
        let fd = 0.25 * (fxx + fyy);
        let h = fs().mixed_hessian(&[c(x, y)]).unwrap()[0][0].re;
        assert!((fd - h).abs() < 1e-6, "fd {fd} vs exact {h}");
    }
}

#[test]
fn series_single_diagonal_term_matches_euclidean_derivatives() {
    let s = single_term_series(1.0);
    let e = euclid(1);
    let z = [c(0.6, -0.8)];
    assert_relative_eq!(s.evaluate(&z).unwrap(), e.evaluate(&z).unwrap());
    let (ds, _, hs) = s.complex_derivatives(&z).unwrap();
    let (de, _, he) = e.complex_derivatives(&z).unwrap();
    assert!((ds[0] - de[0]).norm() < 1e-14);
    assert!((hs[0][0] - he[0][0]).norm() < 1e-14);
}

#[test]
fn real_derivative_assembly_matches_finite_differences() {
    // Generic Hermitian series in dimension 1 with off-diagonal terms.
    let series = AnalyticPotential::Series(
        HermitianSeries::new(
            1,
            4,
            [
                (MultiIndex(vec![1]), MultiIndex(vec![1]), c(1.0, 0.0)),
                (MultiIndex(vec![2]), MultiIndex(vec![1]), c(0.1, 0.05)),
                (MultiIndex(vec![1]), MultiIndex(vec![2]), c(0.1, -0.05)),
                (MultiIndex(vec![2]), MultiIndex(vec![2]), c(0.2, 0.0)),
            ],
        )
        .unwrap(),
    );
    let step = 1e-4;
    let z = [c(0.35, -0.45)];
    let f = |x: f64, y: f64| series.evaluate(&[c(x, y)]).unwrap();
    let (x, y) = (z[0].re, z[0].im);

    let grad = series.real_grad(&z).unwrap();
    let gx = (f(x + step, y) - f(x - step, y)) / (2.0 * step);
    let gy = (f(x, y + step) - f(x, y - step)) / (2.0 * step);
    assert!((grad[0] - gx).abs() < 1e-6);
    assert!((grad[1] - gy).abs() < 1e-6);

    let hess = series.real_hessian(&z).unwrap();
    let hxx = (f(x + step, y) - 2.0 * f(x, y) + f(x - step, y)) / (step * step);
    let hyy = (f(x, y + step) - 2.0 * f(x, y) + f(x, y - step)) / (step * step);
    let hxy = (f(x + step, y + step) - f(x + step, y - step) - f(x - step, y + step)
        + f(x - step, y - step))
        / (4.0 * step * step);
    assert!((hess[(0, 0)] - hxx).abs() < 1e-6);
    assert!((hess[(1, 1)] - hyy).abs() < 1e-6);
    assert!((hess[(0, 1)] - hxy).abs() < 1e-6);
}

#[test]
fn diastasis_partial_derivatives_match_finite_differences() {
    let pot = fs();
    let step = 1e-4;
    let z = [c(0.3, 0.2)];
    let q = [c(0.1, -0.4)];
    let d = |zx: f64, zy: f64, qx: f64, qy: f64| {
        pot.diastasis(&[c(zx, zy)], &[c(qx, qy)]).unwrap()
    };
    let (zx, zy, qx, qy) = (z[0].re, z[0].im, q[0].re, q[0].im);

    let gz = pot.diastasis_grad_z(&z, &q).unwrap();
    assert!((gz[0] - (d(zx + step, zy, qx, qy) - d(zx - step, zy, qx, qy)) / (2.0 * step)).abs() < 1e-6);
    assert!((gz[1] - (d(zx, zy + step, qx, qy) - d(zx, zy - step, qx, qy)) / (2.0 * step)).abs() < 1e-6);

    let gq = pot.diastasis_grad_q(&z, &q).unwrap();
    assert!((gq[0] - (d(zx, zy, qx + step, qy) - d(zx, zy, qx - step, qy)) / (2.0 * step)).abs() < 1e-6);
    assert!((gq[1] - (d(zx, zy, qx, qy + step) - d(zx, zy, qx, qy - step)) / (2.0 * step)).abs() < 1e-6);

    let hz = pot.diastasis_hess_z(&z, &q).unwrap();
    let fd_zz = (d(zx + step, zy, qx, qy) - 2.0 * d(zx, zy, qx, qy) + d(zx - step, zy, qx, qy))
        / (step * step);
    assert!((hz[(0, 0)] - fd_zz).abs() < 1e-6);

    let cross = pot.diastasis_cross_zq(&z, &q).unwrap();
    let fd_cross = (d(zx + step, zy, qx + step, qy) - d(zx + step, zy, qx - step, qy)
        - d(zx - step, zy, qx + step, qy)
        + d(zx - step, zy, qx - step, qy))
        / (4.0 * step * step);
    assert!((cross[(0, 0)] - fd_cross).abs() < 1e-6, "{} vs {}", cross[(0, 0)], fd_cross);

    let hq = pot.diastasis_hess_q(&z, &q).unwrap();
    let fd_qq = (d(zx, zy, qx + step, qy) - 2.0 * d(zx, zy, qx, qy) + d(zx, zy, qx - step, qy))
        / (step * step);
    assert!((hq[(0, 0)] - fd_qq).abs() < 1e-6);
}

#[test]
fn cauchy_riemann_residual_of_polarization() {
    // z ↦ φ_ℂ(z, w) must be holomorphic: ∂̄ residual below 1e-6 at step 1e-4.
    let pot = fs();
    let w = [c(0.2, 0.4)];
    let step = 1e-4;
    let f = |x: f64, y: f64| pot.polarize(&[c(x, y)], &w).unwrap();
    for &(x, y) in &[(0.1, 0.3), (-0.5, 0.2)] {
        let fx = (f(x + step, y) - f(x - step, y)) / (2.0 * step);
        let fy = (f(x, y + step) - f(x, y - step)) / (2.0 * step);
        let dbar = 0.5 * (fx + Complex64::i() * fy);
        assert!(dbar.norm() < 1e-6, "CR residual {}", dbar.norm());
    }
}

#[test]
fn strong_psh_euclidean_is_one() {
    let domain = ChartedDomain::flat_box(vec![c(0.0, 0.0)], vec![1.0], 9).unwrap();
    assert_relative_eq!(check_strong_psh(&euclid(1), &domain).unwrap(), 1.0);
}

#[test]
fn strong_psh_fubini_study_quarter_on_unit_modulus_box() {
    // Box whose corners sit at |z| = 1: min of 1/(1+|z|²)² over the grid is
    // attained there. Grid-sweep oracle equals the closed form 1/4.
    let hw = 0.5f64.sqrt();
    let domain = ChartedDomain::flat_box(vec![c(0.0, 0.0)], vec![hw], 17).unwrap();
    let got = check_strong_psh(&fs(), &domain).unwrap();
    assert_relative_eq!(got, 0.25, max_relative = 1e-12);
}

#[test]
fn strong_psh_ignores_pluriharmonic_part() {
    // |z|² + 0.1·Re(z²) encoded Hermitianly: the pluriharmonic part has zero
    // mixed Hessian, so the minimum eigenvalue stays 1.
    let series = AnalyticPotential::Series(
        HermitianSeries::new(
            1,
            2,
            [
                (MultiIndex(vec![1]), MultiIndex(vec![1]), c(1.0, 0.0)),
                (MultiIndex(vec![2]), MultiIndex(vec![0]), c(0.05, 0.0)),
                (MultiIndex(vec![0]), MultiIndex(vec![2]), c(0.05, 0.0)),
            ],
        )
        .unwrap(),
    );
    let domain = ChartedDomain::flat_box(vec![c(0.0, 0.0)], vec![1.0], 9).unwrap();
    let got = check_strong_psh(&series, &domain).unwrap();
    assert!(got >= 0.9, "min eigenvalue {got}");
}

#[test]
fn neighborhood_euclidean_unit_box() {
    let domain = ChartedDomain::flat_box(vec![c(0.0, 0.0)], vec![1.0], 9).unwrap();
    let est = estimate_neighborhood(&euclid(1), &domain).unwrap();
    // D = |z−q|² globally: the ratio is identically 1, the sweep accepts the
    // full diameter immediately, and the halving rule gives C = 1/2.
    assert_relative_eq!(est.radius_delta, 8.0f64.sqrt(), max_relative = 1e-12);
    assert_relative_eq!(est.convexity_constant, 0.5, max_relative = 1e-9);
    assert!(est.convexity_constant <= 1.0);
}

#[test]
fn neighborhood_fubini_study_unit_chart() {
    let hw = 0.5f64.sqrt();
    let domain = ChartedDomain::flat_box(vec![c(0.0, 0.0)], vec![hw], 9).unwrap();
    let est = estimate_neighborhood(&fs(), &domain).unwrap();
    assert!(est.radius_delta > 0.5, "delta = {}", est.radius_delta);
    assert!(est.convexity_constant > 0.0);
}

#[test]
fn neighborhood_series_equals_euclidean() {
    let domain = ChartedDomain::flat_box(vec![c(0.0, 0.0)], vec![1.0], 9).unwrap();
    let e = estimate_neighborhood(&euclid(1), &domain).unwrap();
    let s = estimate_neighborhood(&single_term_series(1.0), &domain).unwrap();
    assert_relative_eq!(e.radius_delta, s.radius_delta, max_relative = 1e-12);
    assert_relative_eq!(e.convexity_constant, s.convexity_constant, max_relative = 1e-9);
}

#[test]
fn concavity_margin_euclidean_is_two() {
    let domain = ChartedDomain::flat_box(vec![c(0.0, 0.0)], vec![1.0], 9).unwrap();
    let m = concavity_margin(&euclid(1), &domain, 1.0).unwrap();
    assert_relative_eq!(m, 2.0, max_relative = 1e-12);
}

// Random Hermitian series built by mirroring raw terms.
fn hermitian_from_raw(
    dim: usize,
    raw: Vec<(Vec<usize>, Vec<usize>, f64, f64)>,
) -> Option<HermitianSeries> {
    let mut table: BTreeMap<(MultiIndex, MultiIndex), Complex64> = BTreeMap::new();
    for (a, b, re, im) in raw {
        let alpha = MultiIndex(a);
        let beta = MultiIndex(b);
        let coeff = c(re, im);
        *table.entry((alpha.clone(), beta.clone())).or_default() += coeff;
        *table.entry((beta, alpha)).or_default() += coeff.conj();
    }
    HermitianSeries::new(dim, 6, table.into_iter().map(|((a, b), v)| (a, b, v))).ok()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hermitian_series_evaluates_real(
        raw in proptest::collection::vec(
            (
                proptest::collection::vec(0usize..3, 1),
                proptest::collection::vec(0usize..3, 1),
                -1.0f64..1.0,
                -1.0f64..1.0,
            ),
            1..5,
        ),
        zx in -2.0f64..2.0,
        zy in -2.0f64..2.0,
    ) {
        if let Some(series) = hermitian_from_raw(1, raw) {
            let raw_sum = series.polar(&[c(zx, zy)], &[c(zx, zy)]);
            prop_assert!(raw_sum.im.abs() < 1e-10 * (1.0 + raw_sum.norm()));
        }
    }

    #[test]
    fn polarization_conjugate_symmetry(
        raw in proptest::collection::vec(
            (
                proptest::collection::vec(0usize..3, 1),
                proptest::collection::vec(0usize..3, 1),
                -1.0f64..1.0,
                -1.0f64..1.0,
            ),
            1..5,
        ),
        zx in -1.0f64..1.0, zy in -1.0f64..1.0,
        wx in -1.0f64..1.0, wy in -1.0f64..1.0,
    ) {
        if let Some(series) = hermitian_from_raw(1, raw) {
            let pot = AnalyticPotential::Series(series);
            let z = [c(zx, zy)];
            let w = [c(wx, wy)];
            let a = pot.polarize(&z, &w).unwrap();
            let b = pot.polarize(&w, &z).unwrap();
            prop_assert!((a - b.conj()).norm() < 1e-12 * (1.0 + a.norm()));
            // Diagonal restriction agrees with evaluation.
            let diag = pot.polarize(&z, &z).unwrap();
            let eval = pot.evaluate(&z).unwrap();
            prop_assert!((diag.re - eval).abs() <= 1e-12 * (1.0 + eval.abs()));
        }
    }

    #[test]
    fn diastasis_symmetry_and_diagonal(
        zx in -0.9f64..0.9, zy in -0.9f64..0.9,
        wx in -0.9f64..0.9, wy in -0.9f64..0.9,
    ) {
        let pot = fs();
        let z = [c(zx, zy)];
        let w = [c(wx, wy)];
        let a = pot.diastasis(&z, &w).unwrap();
        let b = pot.diastasis(&w, &z).unwrap();
        prop_assert!((a - b).abs() < 1e-12 * (1.0 + a.abs()));
        prop_assert!(pot.diastasis(&z, &z).unwrap().abs() < 1e-13);
    }
}
