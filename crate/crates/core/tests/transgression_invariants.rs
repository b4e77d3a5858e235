use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use renormgb::curvature::{geometry_at, PseudoHermitianData};
use renormgb::domains::{make_builtin, DomainKind, DomainParams};
use renormgb::forms::Form;
use renormgb::invariants::{
    dim5_density, gauss_bonnet_report, ke_tensor_oracle, random_ke_tensor, ReportConfig,
};
use renormgb::jets::Jet;
use renormgb::monge_ampere::ApproxSolution;
use renormgb::quadrature::{
    boundary_chart, deterministic_sum, integrate_form, sphere_grid, sphere_volume, with_workers,
};
use renormgb::transgression::{
    d_pi_residual, index_integral, pi_form, IndexConnection, IndexField, PiFormula, Variant,
};
use renormgb::verify::{stokes_row, tube_volume_rows, VerifyConfig};
use renormgb::{Complex64, Error};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

proptest! {
    #[test]
    fn reduction_ignores_worker_count(values in prop::collection::vec(-1e3f64..1e3, 1..3000), workers in 1usize..5) {
        let xs: Vec<Complex64> = values.iter().map(|&v| c(v, -v)).collect();
        let serial = deterministic_sum(&xs);
        let pooled = with_workers(workers, || deterministic_sum(&xs)).unwrap();
        prop_assert_eq!(serial.re.to_bits(), pooled.re.to_bits());
    }
}

#[test]
fn grids_integrate_one_to_the_sphere_volume() {
    for (n, res) in [(1, 8), (1, 48), (2, 8), (2, 16)] {
        let grid = sphere_grid(n, res).unwrap();
        let vol = grid.integrate_function(|_| c(1.0, 0.0)).re;
        assert!(
            (vol - sphere_volume(n)).abs() < 1e-12,
            "n = {n}, res = {res}: {vol}"
        );
    }
    assert!(sphere_grid(1, 4).is_err());
    assert!(sphere_grid(3, 16).is_err());
    assert!(matches!(
        with_workers(0, || ()),
        Err(Error::InvalidParams(_))
    ));
}

#[test]
fn binomial_display_matches_the_tilde_homotopy() {
    let spec = make_builtin(
        DomainKind::RealEllipsoid,
        2,
        DomainParams {
            t: Some(0.2),
            ..DomainParams::default()
        },
    )
    .unwrap();
    let sol = ApproxSolution::new(spec.evaluator().unwrap(), spec.center().unwrap(), 4).unwrap();
    let z = [c(0.4, 0.2), c(-0.3, 0.1), c(0.2, 0.5)];
    let (_, _, bundle) = geometry_at(&sol, &z, 4, None).unwrap();
    let theta = bundle.theta_values();
    let curvature = bundle.curvature_values();
    let binomial = pi_form(&theta, &curvature, PiFormula::Binomial);
    let tilde = pi_form(&theta, &curvature, PiFormula::Homotopy(Variant::Tilde));
    assert!(binomial.sub(&tilde).max_abs() < 1e-14 * binomial.max_abs().max(1.0));
}

#[test]
fn transgression_is_exact_for_every_variant() {
    let spec = make_builtin(
        DomainKind::RealEllipsoid,
        1,
        DomainParams {
            t: Some(0.1),
            ..DomainParams::default()
        },
    )
    .unwrap();
    let sol = ApproxSolution::new(spec.evaluator().unwrap(), spec.center().unwrap(), 3).unwrap();
    let (_, _, bundle) = geometry_at(&sol, &[c(0.5, -0.2), c(0.3, 0.55)], 5, None).unwrap();
    for formula in [
        PiFormula::Binomial,
        PiFormula::Homotopy(Variant::Tilde),
        PiFormula::Homotopy(Variant::Prime),
        PiFormula::Homotopy(Variant::DoublePrime),
    ] {
        assert!(
            d_pi_residual(&bundle, formula).unwrap() < 1e-10,
            "{formula:?}"
        );
    }
    let (_, _, shallow) = geometry_at(&sol, &[c(0.5, -0.2), c(0.3, 0.55)], 4, None).unwrap();
    assert!(matches!(
        d_pi_residual(&shallow, PiFormula::Binomial),
        Err(Error::OrderExceeded { .. })
    ));
}

#[test]
fn reflection_has_index_minus_one() {
    let l = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-1.0, 1.0, 1.0, 1.0]));
    for conn in [IndexConnection::Trivial, IndexConnection::Metric] {
        let est =
            index_integral(&IndexField::Real(l.clone()), conn, &[0.2, 0.1, 0.05], 16).unwrap();
        assert_eq!(est.index, -1);
        assert!((est.value + 1.0).abs() < 1e-2);
    }
}

#[test]
fn ke_identities_hold() {
    let report = ke_tensor_oracle(200, 3);
    assert!(report.weyl < 1e-10);
    assert!(report.rearrangement < 1e-10);
    assert!(report.density < 1e-10);
    assert!(report.traces < 1e-10);
}

/// The `n = 2` density only sees `scal`, `|R|^2` and the `R A A` contraction, so
/// rotating `R` by a unitary change of frame, which preserves all three, leaves it fixed.
#[test]
fn dim5_density_depends_on_invariant_contractions_only() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let t = random_ke_tensor(&mut rng);
    let torsion = vec![
        vec![c(0.3, 0.1), c(-0.2, 0.05)],
        vec![c(-0.2, 0.05), c(0.1, -0.4)],
    ];
    let base =
        PseudoHermitianData::from_tensors(2, torsion.clone(), t.curvature.clone(), -1.0, 0.0);
    let u = renormgb::frames::random_unitary(&mut rng, 2);
    let idx = |a: usize, b: usize, cc: usize, d: usize| ((a * 2 + b) * 2 + cc) * 2 + d;
    let mut rotated = vec![c(0.0, 0.0); 16];
    let mut rotated_torsion = vec![vec![c(0.0, 0.0); 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            for cc in 0..2 {
                for d in 0..2 {
                    let mut s = c(0.0, 0.0);
                    for p in 0..2 {
                        for q in 0..2 {
                            for r in 0..2 {
                                for w in 0..2 {
                                    s += u[(a, p)]
                                        * u[(b, q)].conj()
                                        * u[(cc, r)]
                                        * u[(d, w)].conj()
                                        * t.curvature[idx(p, q, r, w)];
                                }
                            }
                        }
                    }
                    rotated[idx(a, b, cc, d)] = s;
                }
            }
            let mut s = c(0.0, 0.0);
            for p in 0..2 {
                for q in 0..2 {
                    s += u[(a, p)] * u[(b, q)] * torsion[p][q];
                }
            }
            rotated_torsion[a][b] = s;
        }
    }
    let moved = PseudoHermitianData::from_tensors(2, rotated_torsion, rotated, -1.0, 0.0);
    let d0 = dim5_density(&base).unwrap();
    let d1 = dim5_density(&moved).unwrap();
    assert!((d0.density - d1.density).abs() < 1e-14);
    assert!(d0.agreement() < 1e-14 && d1.agreement() < 1e-14);
}

#[test]
fn report_stage_must_reach_n_plus_2() {
    let spec = make_builtin(
        DomainKind::RealEllipsoid,
        1,
        DomainParams {
            t: Some(0.1),
            ..DomainParams::default()
        },
    )
    .unwrap();
    let config = ReportConfig {
        resolution: 8,
        stage: Some(2),
        ..ReportConfig::default()
    };
    assert!(matches!(
        gauss_bonnet_report(&spec, &config),
        Err(Error::StageTooLow {
            stage: 2,
            required: 3
        })
    ));
}

#[test]
fn ellipsoid_report_is_deterministic_and_unflagged() {
    let spec = make_builtin(
        DomainKind::RealEllipsoid,
        1,
        DomainParams {
            t: Some(0.2),
            ..DomainParams::default()
        },
    )
    .unwrap();
    let config = ReportConfig {
        resolution: 16,
        ..ReportConfig::default()
    };
    let one = with_workers(1, || gauss_bonnet_report(&spec, &config))
        .unwrap()
        .unwrap();
    let two = with_workers(2, || gauss_bonnet_report(&spec, &config))
        .unwrap()
        .unwrap();
    assert_eq!(
        one.integral_transgression.to_bits(),
        two.integral_transgression.to_bits()
    );
    assert!(!one.flagged);
    assert!(one.euler_side.is_none());
    assert_eq!(one.stage, Some(3));
}

#[test]
fn variants_integrate_to_the_ball_value() {
    for (n, resolution) in [(1, 16), (2, 8)] {
        let spec = make_builtin(DomainKind::Ball, n, DomainParams::default()).unwrap();
        let config = ReportConfig {
            resolution,
            variants: true,
            euler_side: false,
            ..ReportConfig::default()
        };
        let report = gauss_bonnet_report(&spec, &config).unwrap();
        assert_eq!(report.variants.len(), 3);
        for v in &report.variants {
            assert!(
                (v.integral - report.integral_transgression).abs() < 1e-6,
                "{v:?}"
            );
        }
    }
}

#[test]
fn contact_volume_matches_stokes_on_the_sphere_and_the_tube() {
    let config = VerifyConfig::default();
    for (n, resolution) in [(1, 16), (2, 8)] {
        let row = stokes_row(n, resolution, &config).unwrap();
        assert!(row.pass, "{row}");
    }
    for row in tube_volume_rows(&config).unwrap() {
        assert!(row.pass, "{row}");
    }
}

#[test]
fn exact_forms_integrate_to_zero() {
    let spec = make_builtin(DomainKind::Ball, 1, DomainParams::default()).unwrap();
    let f = spec.evaluator().unwrap();
    let chart = boundary_chart(
        f.as_ref(),
        &spec.center().unwrap(),
        &sphere_grid(1, 16).unwrap(),
    )
    .unwrap();
    let integral = integrate_form(&chart, |node| {
        let z = &node.point;
        let var = |k: usize| {
            let value = if k < 2 { z[k] } else { z[k - 2].conj() };
            Jet::variable(4, 1, k, value)
        };
        // eta = zbar1 z2^2 dz1 ^ dzbar2 + z1 zbar2 dz2 ^ dzbar1
        let first = Form::basis(4, 0, var(2) * var(1) * var(1)).wedge(&Form::basis(
            4,
            3,
            Jet::constant(4, 1, c(1.0, 0.0)),
        ));
        let second = Form::basis(4, 1, var(0) * var(3)).wedge(&Form::basis(
            4,
            2,
            Jet::constant(4, 1, c(1.0, 0.0)),
        ));
        Ok(first.add(&second).d()?.value())
    })
    .unwrap();
    assert!(integral.norm() < 1e-10, "{integral}");
}
