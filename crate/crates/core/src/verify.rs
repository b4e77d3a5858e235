//! Check suites shared by the `verify` command and the acceptance harness.
//!
//! Each check is a row with a measured value, a target and a tolerance.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::curvature::{boundary_data, check_einstein_relations, geometry_at};
use crate::domains::{
    boundary_along_ray, make_builtin, random_unit_vector, tube_chart_points, DefiningFunction,
    DomainKind, DomainParams, DomainSpec,
};
use crate::error::{Error, Result};
use crate::forms::Form;
use crate::frames::random_unitary;
use crate::invariants::{
    gauss_bonnet_report, geometric_defining_function, ke_tensor_oracle, volume_form,
    InvariantReport, ReportConfig, Tolerances,
};
use crate::monge_ampere::{
    fefferman_iterate, monge_ampere_at, stage_slope, verify_vanishing_order, FeffermanOptions,
};
use crate::quadrature::{boundary_chart, integrate_form, sphere_grid, with_workers};
use crate::transgression::{
    d_pi_residual, index_integral, transgression_form, IndexConnection, IndexField, PiFormula,
    Variant,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// `|measured - target| <= tolerance`.
    Near,
    /// `measured >= target - tolerance`.
    AtLeast,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckRow {
    pub name: String,
    pub measured: f64,
    pub target: f64,
    pub tolerance: f64,
    pub comparison: Comparison,
    pub pass: bool,
}

impl CheckRow {
    pub fn near(name: impl Into<String>, measured: f64, target: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            target,
            tolerance,
            comparison: Comparison::Near,
            pass: (measured - target).abs() <= tolerance,
        }
    }

    /// A residual that must not exceed `tolerance`.
    pub fn residual(name: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        Self::near(name, measured, 0.0, tolerance)
    }

    pub fn at_least(name: impl Into<String>, measured: f64, target: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            target,
            tolerance,
            comparison: Comparison::AtLeast,
            pass: measured >= target - tolerance,
        }
    }
}

impl fmt::Display for CheckRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self.comparison {
            Comparison::Near => "~",
            Comparison::AtLeast => ">=",
        };
        write!(
            f,
            "{:<48} {:>14.6e} {op} {:<12.6e} tol {:<8.1e} {}",
            self.name,
            self.measured,
            self.target,
            self.tolerance,
            if self.pass { "pass" } else { "FAIL" }
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Ball,
    Tube,
    Identities,
    FeffermanOrder,
    Index,
    Gauge,
    All,
}

impl Suite {
    pub const NAMES: [&'static str; 7] = [
        "ball",
        "tube",
        "identities",
        "fefferman-order",
        "index",
        "gauge",
        "all",
    ];
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "ball" => Suite::Ball,
            "tube" => Suite::Tube,
            "identities" => Suite::Identities,
            "fefferman-order" => Suite::FeffermanOrder,
            "index" => Suite::Index,
            "gauge" => Suite::Gauge,
            "all" => Suite::All,
            other => {
                return Err(Error::InvalidParams(format!(
                    "unknown suite {other:?}; expected one of {}",
                    Suite::NAMES.join(", ")
                )))
            }
        })
    }
}

#[derive(Clone, Debug)]
pub struct VerifyConfig {
    pub resolution_n1: usize,
    pub resolution_n2: usize,
    /// Resolutions for the stage-`(n+2)` ellipsoid integrals.
    pub ellipsoid_resolution_n1: usize,
    pub ellipsoid_resolution_n2: usize,
    pub collar_points: usize,
    pub chart_points: usize,
    pub oracle_samples: usize,
    pub index_resolution: usize,
    pub index_eps: Vec<f64>,
    pub ellipsoid_t: Vec<f64>,
    /// Möbius centers for `n = 1`, as `(re, im)` pairs.
    pub mobius_centers: Vec<Vec<f64>>,
    pub seed: u64,
    pub tolerances: Tolerances,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            resolution_n1: 48,
            resolution_n2: 16,
            ellipsoid_resolution_n1: 32,
            ellipsoid_resolution_n2: 12,
            collar_points: 100,
            chart_points: 100,
            oracle_samples: 1000,
            index_resolution: 16,
            index_eps: vec![0.2, 0.1, 0.05],
            ellipsoid_t: vec![0.1, 0.2],
            mobius_centers: vec![
                vec![0.3, 0.0, 0.1, 0.0],
                vec![-0.2, 0.15, 0.0, -0.25],
                vec![0.0, -0.1, 0.3, 0.2],
            ],
            seed: 7,
            tolerances: Tolerances::default(),
        }
    }
}

impl VerifyConfig {
    pub fn resolution(&self, n: usize) -> usize {
        if n == 1 {
            self.resolution_n1
        } else {
            self.resolution_n2
        }
    }

    fn report_config(&self, resolution: usize) -> ReportConfig {
        ReportConfig {
            resolution,
            tolerances: self.tolerances.clone(),
            seed: self.seed,
            ..ReportConfig::default()
        }
    }
}

pub fn ball(n: usize) -> Result<DomainSpec> {
    make_builtin(DomainKind::Ball, n, DomainParams::default())
}

pub fn mobius_ball(n: usize, a: &[f64]) -> Result<DomainSpec> {
    make_builtin(
        DomainKind::MobiusBall,
        n,
        DomainParams {
            a: Some(a.to_vec()),
            jacobian_rescale: Some(true),
            ..DomainParams::default()
        },
    )
}

pub fn ellipsoid(n: usize, t: f64) -> Result<DomainSpec> {
    make_builtin(
        DomainKind::RealEllipsoid,
        n,
        DomainParams {
            t: Some(t),
            ..DomainParams::default()
        },
    )
}

/// Rows shared by every Gauss-Bonnet report: the integral, the two routes and the Euler side.
pub fn report_rows(report: &InvariantReport, tol: &Tolerances) -> Vec<CheckRow> {
    let id = &report.domain_id;
    let n = report.n;
    let mut rows = vec![CheckRow::residual(
        format!("{id} two-route discrepancy"),
        report.discrepancy,
        tol.two_route(n),
    )];
    if let Some(euler) = &report.euler_side {
        rows.push(CheckRow::near(
            format!("{id} transgression integral"),
            report.integral_transgression,
            -(euler.euler_characteristic as f64),
            tol.ball(n),
        ));
        rows.push(CheckRow::residual(
            format!("{id} interior c_{} samples", n + 1),
            euler.interior_chern_max,
            tol.interior_chern,
        ));
        rows.push(CheckRow::near(
            format!("{id} residue index"),
            euler.index,
            euler.euler_characteristic as f64,
            tol.index,
        ));
    }
    let einstein = if report.stage.is_some() {
        tol.einstein_stage
    } else {
        tol.einstein_exact
    };
    let diag = &report.per_node_diagnostics;
    rows.push(CheckRow::residual(
        format!("{id} Ricci relation"),
        diag.max_ricci_residual,
        einstein,
    ));
    rows.push(CheckRow::residual(
        format!("{id} transverse curvature relation"),
        diag.max_transverse_residual,
        einstein,
    ));
    rows
}

/// Interior points in a collar of width about `0.15` around the boundary.
pub fn collar_points(spec: &DomainSpec, count: usize, seed: u64) -> Result<Vec<Vec<Complex64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if spec.kind == DomainKind::TubeDisc {
        return Ok(tube_chart_points(count, seed, (1.02, 1.3)));
    }
    let base = spec.evaluator()?;
    let center = spec.center()?;
    let m = spec.m();
    (0..count)
        .map(|i| {
            let dir = random_unit_vector(&mut rng, m);
            let (p, _) = boundary_along_ray(base.as_ref(), &center, &dir, 1e-13, 50)
                .ok_or(Error::NewtonDiverged { node: i })?;
            let s = rng.gen_range(0.85..0.98);
            Ok(center
                .iter()
                .zip(&p)
                .map(|(c, q)| c + (q - c) * s)
                .collect())
        })
        .collect()
}

/// Largest relative `d Pi - c_{n+1}` residual over collar points, across every `Pi` formula.
pub fn d_pi_row(spec: &DomainSpec, config: &VerifyConfig) -> Result<CheckRow> {
    let f = geometric_defining_function(spec, None)?.function;
    let mut worst: f64 = 0.0;
    let formulas = [
        PiFormula::Binomial,
        PiFormula::Homotopy(Variant::Tilde),
        PiFormula::Homotopy(Variant::Prime),
        PiFormula::Homotopy(Variant::DoublePrime),
    ];
    for z in collar_points(spec, config.collar_points, config.seed)? {
        let (_, _, bundle) = geometry_at(f.as_ref(), &z, 5, None)?;
        for formula in formulas {
            worst = worst.max(d_pi_residual(&bundle, formula)?);
        }
    }
    Ok(CheckRow::residual(
        format!(
            "{} d Pi - c_{} (collar)",
            crate::invariants::domain_id(spec),
            spec.n + 1
        ),
        worst,
        config.tolerances.d_pi,
    ))
}

fn boundary_points(
    f: &dyn DefiningFunction,
    center: &[Complex64],
    count: usize,
    seed: u64,
) -> Result<Vec<Vec<Complex64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let dir = random_unit_vector(&mut rng, center.len());
            boundary_along_ray(f, center, &dir, 1e-14, 50)
                .map(|(p, _)| p)
                .ok_or(Error::NewtonDiverged { node: i })
        })
        .collect()
}

/// `r_N = -1` on the sphere.
pub fn ball_normal_row(n: usize, config: &VerifyConfig) -> Result<CheckRow> {
    let spec = ball(n)?;
    let f = spec.evaluator()?;
    let mut worst: f64 = 0.0;
    for p in boundary_points(f.as_ref(), &spec.center()?, 8, config.seed)? {
        worst = worst.max((boundary_data(f.as_ref(), &p, None)?.r_normal + 1.0).abs());
    }
    Ok(CheckRow::residual(
        format!("ball_n{n} r_N + 1"),
        worst,
        config.tolerances.einstein_exact,
    ))
}

/// `int theta ^ (d theta)^n` over the sphere against the Stokes value `n! 2^n pi^{n+1}`.
///
/// The value is positive, which pins the chart orientation.
pub fn stokes_row(n: usize, resolution: usize, config: &VerifyConfig) -> Result<CheckRow> {
    let spec = ball(n)?;
    let f = spec.evaluator()?;
    let chart = boundary_chart(f.as_ref(), &spec.center()?, &sphere_grid(n, resolution)?)?;
    let integral = integrate_form(&chart, |node| volume_form(f.as_ref(), &node.point))?;
    let target = if n == 1 {
        4.0 * PI * PI
    } else {
        8.0 * PI.powi(3)
    };
    Ok(CheckRow::near(
        format!("ball_n{n} int theta ^ (d theta)^{n}"),
        integral.re,
        target,
        config.tolerances.stokes(n),
    ))
}

/// On the tube, `theta ^ d theta = -dt ^ vol_g` on `M` with `zeta = R e^{it}`, and is positively oriented.
///
/// Both sides are wedged with `d rho`. The orientation row is the smallest ratio of
/// `d rho ^ theta ^ d theta` to the Euclidean volume form.
pub fn tube_volume_rows(config: &VerifyConfig) -> Result<Vec<CheckRow>> {
    let spec = make_builtin(DomainKind::TubeDisc, 1, DomainParams::default())?;
    let f = spec.evaluator()?;
    let i = Complex64::i();
    let one = Complex64::new(1.0, 0.0);
    let mut residual: f64 = 0.0;
    let mut orientation = f64::INFINITY;
    for z in tube_chart_points(config.chart_points, config.seed + 2, (1.0, 1.0)) {
        let (w, zeta) = (z[0], z[1]);
        let h = 1.0 - w.norm_sqr();
        let covector = |k: usize, c: Complex64| Form::basis(4, k, c);
        // d rho for rho = 1 - |zeta|^2 h.
        let del_rho = covector(0, zeta.norm_sqr() * w.conj()).add(&covector(1, -zeta.conj() * h));
        let d_rho = del_rho.add(&del_rho.conj());
        let dt = covector(1, one / zeta)
            .sub(&covector(3, one / zeta.conj()))
            .scale(-0.5 * i);
        let vol_g = covector(0, one).wedge(&covector(2, one)).scale(i / (h * h));
        let theta_dtheta = volume_form(f.as_ref(), &z)?;
        let lhs = theta_dtheta.wedge(&d_rho);
        let rhs = dt.neg().wedge(&vol_g).wedge(&d_rho);
        residual = residual.max(lhs.sub(&rhs).max_abs() / lhs.max_abs());
        // dx^1 dy^1 dx^2 dy^2 = (i/2)^2 dw dwbar dzeta dzetabar.
        let euclidean = covector(0, one)
            .wedge(&covector(2, one))
            .wedge(&covector(1, one))
            .wedge(&covector(3, one))
            .scale(-0.25 * one);
        let top = |form: &Form<Complex64>| form.coefficient(0b1111).copied().unwrap_or_default();
        let ratio = (top(&d_rho.wedge(&theta_dtheta)) / top(&euclidean)).re;
        orientation = orientation.min(ratio);
    }
    Ok(vec![
        CheckRow::residual(
            "tube theta ^ d theta + dt ^ vol_g",
            residual,
            config.tolerances.identities,
        ),
        CheckRow::at_least("tube theta ^ d theta orientation", orientation, 0.0, 0.0),
    ])
}

pub fn ball_suite(config: &VerifyConfig) -> Result<Vec<CheckRow>> {
    let mut rows = Vec::new();
    for n in [1, 2] {
        let report = gauss_bonnet_report(&ball(n)?, &config.report_config(config.resolution(n)))?;
        rows.extend(report_rows(&report, &config.tolerances));
        rows.push(ball_normal_row(n, config)?);
        rows.push(stokes_row(n, config.resolution(n), config)?);
        rows.push(d_pi_row(&ball(n)?, config)?);
    }
    rows.extend(mobius_rows(config)?);
    Ok(rows)
}

/// The Möbius balls against `-1` and against each other.
pub fn mobius_rows(config: &VerifyConfig) -> Result<Vec<CheckRow>> {
    let tol = &config.tolerances;
    let mut rows = Vec::new();
    let mut values = Vec::new();
    for a in &config.mobius_centers {
        let spec = mobius_ball(1, a)?;
        let report = gauss_bonnet_report(&spec, &config.report_config(config.resolution_n1))?;
        rows.extend(report_rows(&report, tol));
        rows.push(CheckRow::near(
            format!("{} invariance", report.domain_id),
            report.integral_transgression,
            -1.0,
            tol.invariance,
        ));
        values.push(report.integral_transgression);
    }
    if let Some(a) = config.mobius_centers.first() {
        rows.push(d_pi_row(&mobius_ball(1, a)?, config)?);
        let n2_center: Vec<f64> = a.iter().chain(&[0.0, 0.0]).copied().collect();
        rows.push(d_pi_row(&mobius_ball(2, &n2_center)?, config)?);
    }
    let reference = gauss_bonnet_report(
        &ball(1)?,
        &ReportConfig {
            euler_side: false,
            ..config.report_config(config.resolution_n1)
        },
    )?;
    values.push(reference.integral_transgression);
    let spread = values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - values.iter().copied().fold(f64::INFINITY, f64::min);
    rows.push(CheckRow::residual(
        "mobius and ball spread",
        spread,
        tol.invariance,
    ));
    Ok(rows)
}

pub fn tube_suite(config: &VerifyConfig) -> Result<Vec<CheckRow>> {
    let spec = make_builtin(DomainKind::TubeDisc, 1, DomainParams::default())?;
    let f = spec.evaluator()?;
    let mut j_worst: f64 = 0.0;
    for z in tube_chart_points(config.chart_points, config.seed, (1.0, 2.0)) {
        let j = monge_ampere_at(f.as_ref(), &z, 0)?.value();
        j_worst = j_worst.max((j + Complex64::new(z[1].norm_sqr(), 0.0)).norm());
    }
    let mut torsion: f64 = 0.0;
    let mut einstein: f64 = 0.0;
    for z in tube_chart_points(config.chart_points, config.seed + 1, (1.0, 1.0)) {
        let data = boundary_data(f.as_ref(), &z, None)?;
        torsion = torsion.max(data.torsion_norm_sq().sqrt());
        let e = check_einstein_relations(&data, None)?;
        einstein = einstein.max(e.ricci).max(e.transverse).max(e.normal);
    }
    let mut rows = vec![
        CheckRow::residual(
            "tube J[rho] + |zeta|^2",
            j_worst,
            config.tolerances.identities,
        ),
        CheckRow::residual("tube |A|", torsion, config.tolerances.tube_torsion),
        CheckRow::residual(
            "tube Einstein relations",
            einstein,
            config.tolerances.einstein_exact,
        ),
    ];
    rows.extend(tube_volume_rows(config)?);
    rows.push(d_pi_row(&spec, config)?);
    Ok(rows)
}

pub fn identities_suite(config: &VerifyConfig) -> Result<Vec<CheckRow>> {
    let oracle = ke_tensor_oracle(config.oracle_samples, config.seed);
    let tol = config.tolerances.identities;
    Ok(vec![
        CheckRow::residual("|Weyl|^2 - 4|S|^2 - 72", oracle.weyl, tol),
        CheckRow::residual(
            "Weyl rearrangement of the density",
            oracle.rearrangement,
            tol,
        ),
        CheckRow::residual("KE density against |S|^2", oracle.density, tol),
        CheckRow::residual("KE trace constraints", oracle.traces, tol),
    ])
}

pub fn fefferman_suite(config: &VerifyConfig) -> Result<Vec<CheckRow>> {
    let tol = &config.tolerances;
    let options = FeffermanOptions::default();
    let mut rows = Vec::new();
    for n in [1, 2] {
        for &t in &config.ellipsoid_t {
            let spec = ellipsoid(n, t)?;
            let base: Arc<dyn DefiningFunction> = spec.evaluator()?;
            let sol = fefferman_iterate(base, spec.center()?, n + 2, &options)?;
            for report in sol.reports() {
                rows.push(CheckRow::at_least(
                    format!("ellipsoid n{n} t{t} stage {} slope", report.stage),
                    report.slope.unwrap_or(f64::INFINITY),
                    report.stage as f64,
                    tol.fefferman_slope,
                ));
            }
            let fresh = FeffermanOptions {
                seed: options.seed + 1000,
                ..options.clone()
            };
            let fits = verify_vanishing_order(&sol, &fresh)?;
            if let Some(slope) = stage_slope(&fits) {
                rows.push(CheckRow::at_least(
                    format!("ellipsoid n{n} t{t} final slope (fresh rays)"),
                    slope,
                    (n + 2) as f64,
                    tol.fefferman_slope,
                ));
            }
            let resolution = if n == 1 {
                config.ellipsoid_resolution_n1
            } else {
                config.ellipsoid_resolution_n2
            };
            let report = gauss_bonnet_report(&spec, &config.report_config(resolution))?;
            rows.extend(report_rows(&report, tol));
        }
        if let Some(&t) = config.ellipsoid_t.first() {
            rows.push(d_pi_row(&ellipsoid(n, t)?, config)?);
        }
    }
    Ok(rows)
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Linear fields with nondegenerate zeros and their expected indices.
pub fn index_fields() -> Vec<(&'static str, IndexField, i64)> {
    let flip4 = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 1.0, 1.0, -1.0]));
    let flip6 = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
        1.0, -1.0, 1.0, 1.0, 1.0, 1.0,
    ]));
    let generic4 = DMatrix::from_row_slice(
        4,
        4,
        &[
            1.0, 0.3, 0.0, 0.2, -0.1, 1.2, 0.4, 0.0, 0.0, 0.2, 0.9, -0.3, 0.1, 0.0, 0.5, 1.1,
        ],
    );
    let complex2 =
        DMatrix::from_row_slice(2, 2, &[c(1.0, 0.2), c(0.3, 0.0), c(0.0, -0.4), c(0.8, 0.1)]);
    let complex3 = DMatrix::from_row_slice(
        3,
        3,
        &[
            c(1.0, 0.2),
            c(0.3, 0.0),
            c(0.0, 0.1),
            c(0.0, -0.4),
            c(0.8, 0.1),
            c(0.2, 0.0),
            c(0.1, 0.0),
            c(0.0, 0.3),
            c(1.1, -0.2),
        ],
    );
    vec![
        (
            "real R^4 identity",
            IndexField::Real(DMatrix::identity(4, 4)),
            1,
        ),
        ("real R^4 reflection", IndexField::Real(flip4), -1),
        ("real R^4 generic", IndexField::Real(generic4), 1),
        ("real R^6 reflection", IndexField::Real(flip6), -1),
        (
            "complex C^2 identity",
            IndexField::Complex(DMatrix::identity(2, 2)),
            1,
        ),
        ("complex C^2 generic", IndexField::Complex(complex2), 1),
        ("complex C^3 generic", IndexField::Complex(complex3), 1),
    ]
}

pub fn index_suite(config: &VerifyConfig) -> Result<Vec<CheckRow>> {
    let tol = config.tolerances.index;
    let mut rows = Vec::new();
    for (name, field, index) in index_fields() {
        let trivial = index_integral(
            &field,
            IndexConnection::Trivial,
            &config.index_eps,
            config.index_resolution,
        )?;
        let metric = index_integral(
            &field,
            IndexConnection::Metric,
            &config.index_eps,
            config.index_resolution,
        )?;
        rows.push(CheckRow::near(
            format!("index {name} trivial"),
            trivial.value,
            index as f64,
            tol,
        ));
        rows.push(CheckRow::near(
            format!("index {name} metric"),
            metric.value,
            index as f64,
            tol,
        ));
        rows.push(CheckRow::residual(
            format!("index {name} trivial vs metric"),
            (trivial.value - metric.value).abs(),
            tol,
        ));
    }
    Ok(rows)
}

/// Largest relative change of `Pi` under random unitary frame gauges.
pub fn gauge_row(spec: &DomainSpec, points: usize, config: &VerifyConfig) -> Result<CheckRow> {
    let f = geometric_defining_function(spec, None)?.function;
    let base = spec.evaluator()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut worst: f64 = 0.0;
    for z in boundary_points(base.as_ref(), &spec.center()?, points, config.seed)? {
        let (_, _, plain) = geometry_at(f.as_ref(), &z, 4, None)?;
        let reference = transgression_form(&plain, PiFormula::Binomial).pi;
        for _ in 0..3 {
            let gauge = random_unitary(&mut rng, spec.n);
            let (_, _, mixed) = geometry_at(f.as_ref(), &z, 4, Some(&gauge))?;
            let pi = transgression_form(&mixed, PiFormula::Binomial).pi;
            let scale = reference.max_abs().max(1e-300);
            worst = worst.max(pi.sub(&reference).max_abs() / scale);
        }
    }
    Ok(CheckRow::residual(
        format!(
            "{} Pi under frame reseeding",
            crate::invariants::domain_id(spec)
        ),
        worst,
        config.tolerances.gauge,
    ))
}

/// Runs one report on one and on several workers; `1` when every node value and integral match bitwise.
pub fn determinism_row(
    spec: &DomainSpec,
    resolution: usize,
    config: &VerifyConfig,
) -> Result<CheckRow> {
    let rc = config.report_config(resolution);
    let one = with_workers(1, || gauss_bonnet_report(spec, &rc))??;
    let many = with_workers(3, || gauss_bonnet_report(spec, &rc))??;
    let same = one.integral_transgression.to_bits() == many.integral_transgression.to_bits()
        && one.integral_density.to_bits() == many.integral_density.to_bits()
        && one.nodes.len() == many.nodes.len()
        && one.nodes.iter().zip(&many.nodes).all(|(a, b)| {
            a.pi.to_bits() == b.pi.to_bits() && a.density.to_bits() == b.density.to_bits()
        });
    Ok(CheckRow::near(
        format!(
            "{} bitwise identical on 1 and 3 workers",
            crate::invariants::domain_id(spec)
        ),
        if same { 1.0 } else { 0.0 },
        1.0,
        0.0,
    ))
}

pub fn gauge_suite(config: &VerifyConfig) -> Result<Vec<CheckRow>> {
    let t = config.ellipsoid_t.first().copied().unwrap_or(0.1);
    Ok(vec![
        gauge_row(&ellipsoid(1, t)?, 10, config)?,
        gauge_row(&ellipsoid(2, t)?, 5, config)?,
        gauge_row(&mobius_ball(1, &config.mobius_centers[0])?, 10, config)?,
        determinism_row(&ellipsoid(1, t)?, 16, config)?,
    ])
}

pub fn run_suite(suite: Suite, config: &VerifyConfig) -> Result<Vec<CheckRow>> {
    match suite {
        Suite::Ball => ball_suite(config),
        Suite::Tube => tube_suite(config),
        Suite::Identities => identities_suite(config),
        Suite::FeffermanOrder => fefferman_suite(config),
        Suite::Index => index_suite(config),
        Suite::Gauge => gauge_suite(config),
        Suite::All => {
            let mut rows = Vec::new();
            for s in [
                Suite::Ball,
                Suite::Tube,
                Suite::Identities,
                Suite::FeffermanOrder,
                Suite::Index,
                Suite::Gauge,
            ] {
                rows.extend(run_suite(s, config)?);
            }
            Ok(rows)
        }
    }
}
