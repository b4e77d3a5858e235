use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use renormgb::curvature::{boundary_data, check_einstein_relations, geometry_at, interior_checks};
use renormgb::domains::{
    boundary_along_ray, make_builtin, parse_domain_spec, random_unit_vector, DefiningFunction,
    DomainKind, DomainParams,
};
use renormgb::frames::random_unitary;
use renormgb::monge_ampere::{
    fefferman_iterate, monge_ampere_at, ApproxSolution, FeffermanOptions,
};
use renormgb::{Complex64, Error};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn ellipsoid(n: usize, t: f64) -> renormgb::domains::DomainSpec {
    make_builtin(
        DomainKind::RealEllipsoid,
        n,
        DomainParams {
            t: Some(t),
            ..DomainParams::default()
        },
    )
    .unwrap()
}

fn boundary_point(f: &dyn DefiningFunction, m: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dir = random_unit_vector(&mut rng, m);
    boundary_along_ray(f, &vec![c(0.0, 0.0); m], &dir, 1e-14, 50)
        .unwrap()
        .0
}

#[test]
fn malformed_domain_reports_position() {
    let err =
        parse_domain_spec("{\n  \"n\": 1,\n  \"kind\": \"polynomial\",\n  \"monomials\": [\n")
            .unwrap_err();
    match err {
        Error::Parse { line, .. } => assert!(line >= 4),
        other => panic!("expected a parse error, got {other:?}"),
    }
}

#[test]
fn polynomial_file_round_trips() {
    let text = r#"{
        "n": 1,
        "kind": "polynomial",
        "monomials": [
            {"a": [0, 0], "b": [0, 0], "re": -1.0, "im": 0.0},
            {"a": [1, 0], "b": [1, 0], "re": 1.0, "im": 0.0},
            {"a": [0, 1], "b": [0, 1], "re": 1.0, "im": 0.0}
        ]
    }"#;
    let spec = parse_domain_spec(text).unwrap();
    let again = parse_domain_spec(&spec.to_json()).unwrap();
    assert_eq!(spec.monomials, again.monomials);
    let f = spec.evaluator().unwrap();
    assert!((f.value(&[c(0.6, 0.0), c(0.0, 0.8)]).unwrap()).abs() < 1e-15);
}

#[test]
fn non_pseudoconvex_domain_is_rejected() {
    // |z1|^2 - |z2|^2 < 1 is not bounded; its Levi form is indefinite.
    let text = r#"{
        "n": 1,
        "kind": "polynomial",
        "monomials": [
            {"a": [0, 0], "b": [0, 0], "re": -1.0, "im": 0.0},
            {"a": [1, 0], "b": [1, 0], "re": 1.0, "im": 0.0},
            {"a": [0, 1], "b": [0, 1], "re": -1.0, "im": 0.0}
        ]
    }"#;
    assert!(parse_domain_spec(text).is_err());
}

#[test]
fn tube_monge_ampere_is_minus_zeta_squared() {
    let f = make_builtin(DomainKind::TubeDisc, 1, DomainParams::default())
        .unwrap()
        .evaluator()
        .unwrap();
    for z in renormgb::domains::tube_chart_points(20, 3, (1.0, 2.0)) {
        let j = monge_ampere_at(f.as_ref(), &z, 0).unwrap().value();
        assert!((j + z[1].norm_sqr()).norm() < 1e-10);
    }
}

#[test]
fn fefferman_stage_is_bounded_by_n_plus_2() {
    let spec = ellipsoid(1, 0.1);
    let base: Arc<dyn DefiningFunction> = spec.evaluator().unwrap();
    assert!(ApproxSolution::new(base.clone(), spec.center().unwrap(), 4).is_err());
    let sol = fefferman_iterate(
        base,
        spec.center().unwrap(),
        3,
        &FeffermanOptions::default(),
    )
    .unwrap();
    assert_eq!(sol.stage(), 3);
    assert!(sol
        .reports()
        .iter()
        .all(|r| r.slope.unwrap() >= r.stage as f64 - 0.2));
}

#[test]
fn sphere_has_constant_pseudohermitian_curvature() {
    for n in [1, 2] {
        let f = make_builtin(DomainKind::Ball, n, DomainParams::default())
            .unwrap()
            .evaluator()
            .unwrap();
        let z = boundary_point(f.as_ref(), n + 1, 5);
        let data = boundary_data(f.as_ref(), &z, None).unwrap();
        let nf = n as f64;
        assert!((data.scal - nf * (nf + 1.0)).abs() < 1e-10);
        assert!((data.curvature_norm_sq() - 2.0 * nf * (nf + 1.0)).abs() < 1e-10);
        assert!(data.torsion_norm_sq() < 1e-20);
        assert!((data.r_normal + 1.0).abs() < 1e-10);
    }
}

#[test]
fn pseudohermitian_tensors_ignore_the_frame_gauge() {
    let spec = ellipsoid(2, 0.2);
    let base = spec.evaluator().unwrap();
    let sol = ApproxSolution::new(base.clone(), spec.center().unwrap(), 4).unwrap();
    let z = boundary_point(base.as_ref(), 3, 9);
    let plain = boundary_data(&sol, &z, None).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let gauge = random_unitary(&mut rng, 2);
    let mixed = boundary_data(&sol, &z, Some(&gauge)).unwrap();
    assert!((plain.scal - mixed.scal).abs() < 1e-12);
    assert!((plain.torsion_norm_sq() - mixed.torsion_norm_sq()).abs() < 1e-12);
    assert!((plain.curvature_norm_sq() - mixed.curvature_norm_sq()).abs() < 1e-12);
    assert!(mixed.curvature_symmetry_residual() < 1e-12);
    assert!(mixed.torsion_symmetry_residual() < 1e-12);
}

#[test]
fn einstein_relations_need_stage_two() {
    let spec = ellipsoid(1, 0.1);
    let base = spec.evaluator().unwrap();
    let z = boundary_point(base.as_ref(), 2, 2);
    let data = boundary_data(base.as_ref(), &z, None).unwrap();
    assert!(matches!(
        check_einstein_relations(&data, Some(1)),
        Err(Error::StageTooLow {
            stage: 1,
            required: 2
        })
    ));
    let sol = ApproxSolution::new(base, spec.center().unwrap(), 3).unwrap();
    let report =
        check_einstein_relations(&boundary_data(&sol, &z, None).unwrap(), Some(3)).unwrap();
    assert!(report.ricci < 1e-6 && report.transverse < 1e-6);
}

#[test]
fn interior_routes_agree() {
    let spec = ellipsoid(2, 0.1);
    let f = spec.evaluator().unwrap();
    let z = [c(0.3, 0.1), c(-0.2, 0.25), c(0.1, -0.3)];
    let (point, frame, bundle) = geometry_at(f.as_ref(), &z, 4, None).unwrap();
    let checks = interior_checks(&point, &frame, &bundle).unwrap();
    for residual in [
        checks.connection_routes,
        checks.curvature_routes,
        checks.u_contraction,
        checks.trace,
        checks.displays,
        checks.metric_block,
    ] {
        assert!(residual < 1e-10, "{checks:?}");
    }
}

#[test]
fn boundary_extraction_rejects_interior_points() {
    let f = make_builtin(DomainKind::Ball, 1, DomainParams::default())
        .unwrap()
        .evaluator()
        .unwrap();
    assert!(matches!(
        boundary_data(f.as_ref(), &[c(0.5, 0.0), c(0.0, 0.0)], None),
        Err(Error::NotOnBoundary { .. })
    ));
}
