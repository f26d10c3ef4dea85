use super::*;
use crate::fields::{Perturbation, RecipeTerm, ZeroField};
use approx::assert_relative_eq;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn box_domain(points: usize) -> ChartedDomain {
    ChartedDomain::flat_box(vec![c(0.0, 0.0)], vec![1.0], points).unwrap()
}

fn zero_sampled(domain: &ChartedDomain) -> SampledFunction {
    SampledFunction::sample(domain, &ZeroField { dimension: domain.dim() }).unwrap()
}

#[test]
fn form_conversion_round_trip_and_sign() {
    // n = 1, h = λ: Ω = [[0, 2λ], [−2λ, 0]].
    let h = vec![vec![c(0.7, 0.0)]];
    let m = complex_form_to_real(&h);
    assert_relative_eq!(m[(0, 1)], 1.4);
    assert_relative_eq!(m[(1, 0)], -1.4);
    let back = real_form_to_complex(&m);
    assert!((back[0][0] - h[0][0]).norm() < 1e-15);

    // Generic Hermitian 2×2 round-trips and the real form is antisymmetric.
    let h2 = vec![
        vec![c(1.0, 0.0), c(0.3, 0.4)],
        vec![c(0.3, -0.4), c(2.0, 0.0)],
    ];
    let m2 = complex_form_to_real(&h2);
    assert!((&m2 + m2.transpose()).abs().max() < 1e-15);
    let back2 = real_form_to_complex(&m2);
    for j in 0..2 {
        for k in 0..2 {
            assert!((back2[j][k] - h2[j][k]).norm() < 1e-15);
        }
    }
}

#[test]
fn kahler_form_of_zero_perturbation() {
    let domain = box_domain(9);
    let psi = zero_sampled(&domain);
    let e = AnalyticPotential::euclidean(1);
    let h = kahler_form(&psi, &e, 0, &[4, 4]).unwrap();
    assert!((h[0][0] - c(1.0, 0.0)).norm() < 1e-12);

    let fs = AnalyticPotential::fubini_study();
    let h = kahler_form(&psi, &fs, 0, &[4, 4]).unwrap();
    assert!((h[0][0] - c(1.0, 0.0)).norm() < 1e-12, "FS at origin is 1");
}

#[test]
fn kahler_form_rejects_boundary_stencils() {
    let domain = box_domain(9);
    let psi = zero_sampled(&domain);
    let e = AnalyticPotential::euclidean(1);
    assert!(kahler_form(&psi, &e, 0, &[0, 4]).is_err());
}

#[test]
fn kahler_form_of_small_quadratic() {
    // ψ = ε|z|²: central differences are exact on quadratics, so the form
    // is (1 + ε)·I to rounding.
    let domain = box_domain(17);
    let eps = 0.125;
    let recipe = Perturbation::new(
        vec![RecipeTerm::Quadratic { amplitude: eps, center: vec![c(0.0, 0.0)] }],
        &domain,
    )
    .unwrap();
    let psi = SampledFunction::sample(&domain, &recipe).unwrap();
    let e = AnalyticPotential::euclidean(1);
    let h = kahler_form(&psi, &e, 0, &[8, 8]).unwrap();
    assert!((h[0][0] - c(1.0 + eps, 0.0)).norm() < 1e-8);
}

#[test]
fn monge_ampere_examples() {
    // Euclidean, ψ ≡ 0, n = 1 → 1.
    let domain = box_domain(9);
    let psi = zero_sampled(&domain);
    let e1 = AnalyticPotential::euclidean(1);
    assert_relative_eq!(monge_ampere(&psi, &e1, 0, &[4, 4]).unwrap(), 1.0, epsilon = 1e-12);

    // Euclidean, ψ = ε|z|², n = 2 → (1+ε)²/2!.
    let domain2 = ChartedDomain::flat_box(vec![c(0.0, 0.0), c(0.0, 0.0)], vec![1.0, 1.0], 7).unwrap();
    let eps = 0.25;
    let recipe = Perturbation::new(
        vec![RecipeTerm::Quadratic {
            amplitude: eps,
            center: vec![c(0.0, 0.0), c(0.0, 0.0)],
        }],
        &domain2,
    )
    .unwrap();
    let psi2 = SampledFunction::sample(&domain2, &recipe).unwrap();
    let e2 = AnalyticPotential::euclidean(2);
    let got = monge_ampere(&psi2, &e2, 0, &[3, 3, 3, 3]).unwrap();
    assert_relative_eq!(got, (1.0 + eps) * (1.0 + eps) / 2.0, epsilon = 1e-8);

    // Fubini–Study, ψ ≡ 0 at z = 1 → 1/4.
    let fs_domain = ChartedDomain::flat_box(vec![c(0.0, 0.0)], vec![1.25], 11).unwrap();
    let psi_fs = zero_sampled(&fs_domain);
    let fs = AnalyticPotential::fubini_study();
    // Node [9, 5] has coordinates (1.0, 0.0).
    let idx = [9usize, 5usize];
    let p = fs_domain.node(0, &idx);
    assert!((p.z[0] - c(1.0, 0.0)).norm() < 1e-12);
    assert_relative_eq!(monge_ampere(&psi_fs, &fs, 0, &idx).unwrap(), 0.25, epsilon = 1e-12);
}

#[test]
fn pullback_through_identity_and_translation() {
    let pot = AnalyticPotential::euclidean(1);
    let domain = box_domain(17);
    let ctx = TransformContext::prepare(&pot, &domain).unwrap();

    // η ≡ 0: identity map pulls the form back to itself.
    let zero = ZeroField { dimension: 1 };
    let eta0 = EtaContext::prepare(&zero, &ctx).unwrap();
    let r0 = transform_field(&ctx, &eta0).unwrap();
    let map0 = gradient_map_from(&ctx, &r0).unwrap();
    let psi = zero_sampled(&domain);
    let form = kahler_form_field(&psi, &pot).unwrap();
    form.validate().unwrap();
    let pulled = pullback_form(&map0, &form, 0, &[8, 8]).unwrap();
    assert!((pulled - form.real_at(0, &[8, 8])).abs().max() < 1e-7);

    // Rigid translation: identity Jacobian, form translated. For the flat
    // form (constant in space) the pullback is unchanged.
    let eps = 0.01;
    let lin = Perturbation::new(
        vec![RecipeTerm::Linear { amplitude: eps, direction: vec![c(1.0, 0.0)] }],
        &domain,
    )
    .unwrap();
    let eta1 = EtaContext::prepare(&lin, &ctx).unwrap();
    let r1 = transform_field(&ctx, &eta1).unwrap();
    let map1 = gradient_map_from(&ctx, &r1).unwrap();
    let pulled = pullback_form(&map1, &form, 0, &[8, 8]).unwrap();
    assert!((pulled - form.real_at(0, &[8, 8])).abs().max() < 1e-7);
}

#[test]
fn mabuchi_inner_is_box_volume_for_units() {
    // ν = χ = 1, ψ ≡ 0, Euclidean on [−1,1]²: density 1, volume 4.
    let domain = box_domain(33);
    let ones = SampledFunction::from_values(
        domain.clone(),
        vec![vec![1.0; domain.chart(0).grid().len()]],
    )
    .unwrap();
    let psi = zero_sampled(&domain);
    let e = AnalyticPotential::euclidean(1);
    let v = mabuchi_inner(&ones, &ones, &psi, &e).unwrap();
    assert_relative_eq!(v, 4.0, max_relative = 1e-12);
}

#[test]
fn mabuchi_inner_sphere_volume_is_pi() {
    let domain = ChartedDomain::sphere(33).unwrap();
    let len = domain.chart(0).grid().len();
    let ones =
        SampledFunction::from_values(domain.clone(), vec![vec![1.0; len], vec![1.0; len]]).unwrap();
    let psi = zero_sampled(&domain);
    let fs = AnalyticPotential::fubini_study();
    let v = mabuchi_inner(&ones, &ones, &psi, &fs).unwrap();
    assert!(
        (v - std::f64::consts::PI).abs() < 1e-3 * std::f64::consts::PI,
        "sphere volume {v}"
    );
}

#[test]
fn mabuchi_inner_odd_even_orthogonality() {
    // ν odd, χ even on a symmetric grid with radial density: exact
    // cancellation up to rounding.
    let domain = box_domain(17);
    let grid = domain.chart(0).grid();
    let mut odd = Vec::with_capacity(grid.len());
    let mut even = Vec::with_capacity(grid.len());
    for idx in grid.iter_indices() {
        let p = domain.node(0, &idx);
        odd.push(p.z[0].re);
        even.push(p.z[0].norm_sqr());
    }
    let nu = SampledFunction::from_values(domain.clone(), vec![odd]).unwrap();
    let chi = SampledFunction::from_values(domain.clone(), vec![even]).unwrap();
    let psi = zero_sampled(&domain);
    let e = AnalyticPotential::euclidean(1);
    let v = mabuchi_inner(&nu, &chi, &psi, &e).unwrap();
    assert!(v.abs() < 1e-12, "odd/even inner product {v}");
}

#[test]
fn mabuchi_inner_rejects_nonpositive_density() {
    // ψ = −|z|² kills the Euclidean form.
    let domain = box_domain(9);
    let recipe = Perturbation::new(
        vec![RecipeTerm::Quadratic { amplitude: -1.0, center: vec![c(0.0, 0.0)] }],
        &domain,
    )
    .unwrap();
    let psi = SampledFunction::sample(&domain, &recipe).unwrap();
    let ones = SampledFunction::from_values(
        domain.clone(),
        vec![vec![1.0; domain.chart(0).grid().len()]],
    )
    .unwrap();
    let e = AnalyticPotential::euclidean(1);
    assert!(matches!(
        mabuchi_inner(&ones, &ones, &psi, &e),
        Err(Error::AdmissibilityViolation { .. })
    ));
}

#[test]
fn differential_of_transform_at_zero_negates() {
    let pot = AnalyticPotential::euclidean(1);
    let domain = box_domain(9);
    let ctx = TransformContext::prepare(&pot, &domain).unwrap();
    let zero = ZeroField { dimension: 1 };
    let eta = EtaContext::prepare(&zero, &ctx).unwrap();
    let r = transform_field(&ctx, &eta).unwrap();
    let map = gradient_map_from(&ctx, &r).unwrap();
    let chi = Perturbation::new(
        vec![RecipeTerm::CompactBump {
            amplitude: 0.4,
            center: vec![c(0.1, 0.0)],
            radius: 0.5,
        }],
        &domain,
    )
    .unwrap();
    let d = differential_transform(&chi, &map).unwrap();
    let grid = domain.chart(0).grid();
    for idx in grid.iter_indices() {
        let p = domain.node(0, &idx);
        let expected = -chi.value(&p).unwrap();
        assert!(
            (d.value_at_node(0, &idx) - expected).abs() < 1e-8,
            "dL(0).χ must be −χ"
        );
    }
}

#[test]
fn isometry_exact_for_rigid_translations() {
    let pot = AnalyticPotential::euclidean(1);
    let domain = box_domain(33);
    let ctx = TransformContext::prepare(&pot, &domain).unwrap();
    let eps = 0.005;
    let lin = Perturbation::new(
        vec![RecipeTerm::Linear { amplitude: eps, direction: vec![c(1.0, 0.0)] }],
        &domain,
    )
    .unwrap();
    let eta = EtaContext::prepare(&lin, &ctx).unwrap();
    let chi = Perturbation::new(
        vec![RecipeTerm::CompactBump {
            amplitude: 0.3,
            center: vec![c(0.1, 0.1)],
            radius: 0.45,
        }],
        &domain,
    )
    .unwrap();
    let nu = Perturbation::new(
        vec![RecipeTerm::CompactBump {
            amplitude: 0.25,
            center: vec![c(-0.15, 0.05)],
            radius: 0.5,
        }],
        &domain,
    )
    .unwrap();
    let defect = verify_isometry(&ctx, &eta, &chi, &nu).unwrap();
    assert!(defect < 1e-8, "translation isometry defect {defect}");
}

#[test]
fn pullback_identity_defect_shrinks_with_the_grid() {
    let pot = AnalyticPotential::euclidean(1);
    let mut defects = Vec::new();
    for points in [17usize, 33] {
        let domain = ChartedDomain::flat_box(vec![c(0.0, 0.0)], vec![1.0], points).unwrap();
        let ctx = TransformContext::prepare(&pot, &domain).unwrap();
        let recipe = Perturbation::new(
            vec![RecipeTerm::Gaussian {
                amplitude: 0.05,
                center: vec![c(0.2, 0.1)],
                width: 1.0,
            }],
            &domain,
        )
        .unwrap();
        let eta = EtaContext::prepare(&recipe, &ctx).unwrap();
        let d = pullback_identity_defect(&ctx, &eta).unwrap();
        defects.push(d.max_defect);
    }
    // Halving the step should cut the defect by roughly 4; demand at least 3.
    assert!(
        defects[0] / defects[1] > 3.0,
        "defects {defects:?} do not contract at second order"
    );
}
