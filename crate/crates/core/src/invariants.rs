//! Closed-form boundary densities, the Kähler-Einstein tensor identities, and
//! the end-to-end Gauss-Bonnet report.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::curvature::{
    check_einstein_relations, extract_pseudohermitian, geometry_at, PseudoHermitianData,
};
use crate::domains::{random_unit_vector, DefiningFunction, DomainKind, DomainSpec};
use crate::error::{Error, Result};
use crate::forms::Form;
use crate::monge_ampere::{fefferman_iterate, FeffermanOptions, StageReport};
use crate::quadrature::{
    boundary_chart, deterministic_sum, node_values, par_map, residue_sphere, sphere_grid,
    ChartNode, QuadratureChart,
};
use crate::transgression::{
    chern_top, extrapolate_to_zero, pi_form, transgression_form, PiFormula, Variant,
};

fn require_dimension(data: &PseudoHermitianData, n: usize) -> Result<()> {
    if data.n != n {
        return Err(Error::WrongDimension {
            expected: n,
            got: data.n,
        });
    }
    Ok(())
}

/// `(1/4pi^2)(|A|^2 - scal^2/4)`, the coefficient of `theta ^ d theta` for `n = 1`.
pub fn burns_epstein_density(data: &PseudoHermitianData) -> Result<f64> {
    require_dimension(data, 1)?;
    Ok((data.torsion_norm_sq() - data.scal * data.scal / 4.0) / (4.0 * PI * PI))
}

/// The `n = 2` density, computed from `R` and from its trace-free part `S`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Dim5Density {
    /// Coefficient of `theta ^ (d theta)^2`.
    pub density: f64,
    pub trace_free_form: f64,
}

impl Dim5Density {
    pub fn agreement(&self) -> f64 {
        (self.density - self.trace_free_form).abs()
    }
}

/// `Re sum T_{a bbar c dbar} conj(A_{ac}) A_{bd}`.
fn torsion_contraction(
    n: usize,
    tensor: impl Fn(usize, usize, usize, usize) -> Complex64,
    torsion: &[Vec<Complex64>],
) -> f64 {
    let mut s = Complex64::new(0.0, 0.0);
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    s += tensor(a, b, c, d) * torsion[a][c].conj() * torsion[b][d];
                }
            }
        }
    }
    s.re
}

fn delta(a: usize, b: usize) -> f64 {
    if a == b {
        1.0
    } else {
        0.0
    }
}

/// `h_{a bbar} h_{c dbar} + h_{a dbar} h_{c bbar}` in a unitary frame.
fn identity_pair(a: usize, b: usize, c: usize, d: usize) -> f64 {
    delta(a, b) * delta(c, d) + delta(a, d) * delta(c, b)
}

/// `(1/16pi^3)(scal^3/54 - |R|^2 scal/12 + Re R A A)`; the trace-free route uses
/// `-scal^3/108 + |A|^2 scal/3 - |S|^2 scal/12 + Re S A A`.
pub fn dim5_density(data: &PseudoHermitianData) -> Result<Dim5Density> {
    require_dimension(data, 2)?;
    let n = 2;
    let scal = data.scal;
    let norm = 16.0 * PI.powi(3);
    let raa = torsion_contraction(n, |a, b, c, d| data.component(a, b, c, d), &data.torsion);
    let density = (scal.powi(3) / 54.0 - data.curvature_norm_sq() * scal / 12.0 + raa) / norm;
    let trace_free = |a: usize, b: usize, c: usize, d: usize| {
        data.component(a, b, c, d) - scal / 6.0 * identity_pair(a, b, c, d)
    };
    let mut s_sq = 0.0;
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    s_sq += trace_free(a, b, c, d).norm_sqr();
                }
            }
        }
    }
    let saa = torsion_contraction(n, trace_free, &data.torsion);
    let trace_free_form =
        (-scal.powi(3) / 108.0 + data.torsion_norm_sq() * scal / 3.0 - s_sq * scal / 12.0 + saa)
            / norm;
    Ok(Dim5Density {
        density,
        trace_free_form,
    })
}

/// Density coefficient multiplying `theta ^ (d theta)^n`.
pub fn boundary_density(data: &PseudoHermitianData) -> Result<f64> {
    match data.n {
        1 => burns_epstein_density(data),
        2 => dim5_density(data).map(|d| d.density),
        n => Err(Error::WrongDimension {
            expected: 2,
            got: n,
        }),
    }
}

/// A curvature tensor in dimension `n = 2` with `Ric = -3 h`.
#[derive(Clone, Debug, Serialize)]
pub struct KeTensor {
    /// `R_{a bbar c dbar}` flattened in index order.
    pub curvature: Vec<Complex64>,
    /// Trace-free part `S`.
    pub trace_free: Vec<Complex64>,
    pub weyl_sq: f64,
}

const KE_N: usize = 2;

fn flat(a: usize, b: usize, c: usize, d: usize) -> usize {
    ((a * KE_N + b) * KE_N + c) * KE_N + d
}

/// Averages `t` over the symmetries `(a,c)` swap, `(b,d)` swap and `R_{a bbar c dbar} = conj R_{b abar d cbar}`.
pub fn symmetrize(t: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); t.len()];
    for a in 0..KE_N {
        for b in 0..KE_N {
            for c in 0..KE_N {
                for d in 0..KE_N {
                    let mut s = Complex64::new(0.0, 0.0);
                    for (p, q, r, u) in [(a, b, c, d), (c, b, a, d), (a, d, c, b), (c, d, a, b)] {
                        s += t[flat(p, q, r, u)] + t[flat(q, p, u, r)].conj();
                    }
                    out[flat(a, b, c, d)] = s / 8.0;
                }
            }
        }
    }
    out
}

/// `Ric_{c dbar} = sum_a T_{a abar c dbar}`.
pub fn ricci_of(t: &[Complex64]) -> Vec<Vec<Complex64>> {
    (0..KE_N)
        .map(|c| {
            (0..KE_N)
                .map(|d| (0..KE_N).map(|a| t[flat(a, a, c, d)]).sum())
                .collect()
        })
        .collect()
}

/// Removes every trace from a symmetric tensor.
pub fn trace_free_part(t: &[Complex64]) -> Vec<Complex64> {
    let nf = KE_N as f64;
    let ric = ricci_of(t);
    let scal: Complex64 = (0..KE_N).map(|a| ric[a][a]).sum();
    let mut out = t.to_vec();
    for a in 0..KE_N {
        for b in 0..KE_N {
            for c in 0..KE_N {
                for d in 0..KE_N {
                    let ric_part = ric[a][b] * delta(c, d)
                        + ric[c][b] * delta(a, d)
                        + ric[a][d] * delta(c, b)
                        + ric[c][d] * delta(a, b);
                    out[flat(a, b, c, d)] += -ric_part / (nf + 2.0)
                        + scal * identity_pair(a, b, c, d) / ((nf + 1.0) * (nf + 2.0));
                }
            }
        }
    }
    out
}

/// `|Weyl|^2 = 4 |W_{a bbar c dbar}|^2 + 2 |W_{a b cbar dbar}|^2` with
/// `W_{a bbar c dbar} = R_{a bbar c dbar} + h_{a dbar} h_{c bbar} - h_{a bbar} h_{c dbar}` and
/// `W_{a b cbar dbar} = h_{a cbar} h_{b dbar} - h_{a dbar} h_{b cbar}`.
pub fn weyl_norm_sq(curvature: &[Complex64]) -> f64 {
    let mut mixed = 0.0;
    let mut pure = 0.0;
    for a in 0..KE_N {
        for b in 0..KE_N {
            for c in 0..KE_N {
                for d in 0..KE_N {
                    let w = curvature[flat(a, b, c, d)] + delta(a, d) * delta(c, b)
                        - delta(a, b) * delta(c, d);
                    mixed += w.norm_sqr();
                    let v = delta(a, c) * delta(b, d) - delta(a, d) * delta(b, c);
                    pure += v * v;
                }
            }
        }
    }
    4.0 * mixed + 2.0 * pure
}

/// A random constrained tensor: free entries, group average, trace removal, then `- (h h + h h)`.
pub fn random_ke_tensor(rng: &mut impl Rng) -> KeTensor {
    let raw: Vec<Complex64> = (0..KE_N.pow(4))
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let trace_free = trace_free_part(&symmetrize(&raw));
    let curvature: Vec<Complex64> = (0..KE_N.pow(4))
        .map(|i| {
            let (a, b, c, d) = (i / 8, (i / 4) % 2, (i / 2) % 2, i % 2);
            trace_free[i] - identity_pair(a, b, c, d)
        })
        .collect();
    let weyl_sq = weyl_norm_sq(&curvature);
    KeTensor {
        curvature,
        trace_free,
        weyl_sq,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleReport {
    pub samples: usize,
    /// `max | |Weyl|^2 - 4|S|^2 - 72 |`.
    pub weyl: f64,
    /// `max | (1/8pi^3)(|S|^2/2 + 2) - (1/8pi^3){-(7/6)(|Weyl|^2/4 + 6) + (5/12)|Weyl|^2} |`.
    pub rearrangement: f64,
    /// `max | dim5 density(R, A = 0) - (1/16pi^3)(|S|^2/2 + 2) |`.
    pub density: f64,
    /// Largest trace of `S` and largest deviation of `Ric` from `-3 h`.
    pub traces: f64,
}

/// Checks the Kähler-Einstein curvature identities on `samples` seeded random tensors.
pub fn ke_tensor_oracle(samples: usize, seed: u64) -> OracleReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = OracleReport {
        samples,
        weyl: 0.0,
        rearrangement: 0.0,
        density: 0.0,
        traces: 0.0,
    };
    let c8 = 1.0 / (8.0 * PI.powi(3));
    for _ in 0..samples {
        let t = random_ke_tensor(&mut rng);
        let s_sq: f64 = t.trace_free.iter().map(|x| x.norm_sqr()).sum();
        report.weyl = report.weyl.max((t.weyl_sq - 4.0 * s_sq - 72.0).abs());
        let lhs = c8 * (0.5 * s_sq + 2.0);
        let rhs = c8 * (-(7.0 / 6.0) * (0.25 * t.weyl_sq + 6.0) + (5.0 / 12.0) * t.weyl_sq);
        report.rearrangement = report.rearrangement.max((lhs - rhs).abs());
        let data = PseudoHermitianData::from_tensors(
            KE_N,
            vec![vec![Complex64::new(0.0, 0.0); KE_N]; KE_N],
            t.curvature.clone(),
            -1.0,
            0.0,
        );
        let dens = dim5_density(&data).expect("n = 2 tensor");
        report.density = report
            .density
            .max((dens.density - 0.5 * c8 * (0.5 * s_sq + 2.0)).abs())
            .max(dens.agreement());
        let ric_s = ricci_of(&t.trace_free);
        let ric_r = ricci_of(&t.curvature);
        for a in 0..KE_N {
            for b in 0..KE_N {
                report.traces = report
                    .traces
                    .max(ric_s[a][b].norm())
                    .max((ric_r[a][b] + 3.0 * delta(a, b)).norm());
            }
        }
    }
    report
}

/// Acceptance tolerances, overridable from the command line.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Tolerances {
    /// Transgression vs density integrals, `n = 1`.
    pub two_route_n1: f64,
    pub two_route_n2: f64,
    /// Ball integrals against `-1`, `n = 1`.
    pub ball_n1: f64,
    pub ball_n2: f64,
    /// Möbius balls against `-1` and against each other.
    pub invariance: f64,
    pub d_pi: f64,
    pub einstein_exact: f64,
    pub einstein_stage: f64,
    pub identities: f64,
    pub tube_torsion: f64,
    pub index: f64,
    pub gauge: f64,
    pub interior_chern: f64,
    pub variants: f64,
    pub fefferman_slope: f64,
    /// `int theta ^ (d theta)^n` over the sphere against its Stokes value, `n = 1`.
    pub stokes_n1: f64,
    pub stokes_n2: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            two_route_n1: 1e-6,
            two_route_n2: 1e-4,
            ball_n1: 1e-6,
            ball_n2: 1e-4,
            invariance: 1e-5,
            d_pi: 1e-7,
            einstein_exact: 1e-8,
            einstein_stage: 1e-6,
            identities: 1e-10,
            tube_torsion: 1e-9,
            index: 1e-2,
            gauge: 1e-10,
            interior_chern: 1e-9,
            variants: 1e-6,
            fefferman_slope: 0.2,
            stokes_n1: 1e-10,
            stokes_n2: 1e-8,
        }
    }
}

impl Tolerances {
    pub fn two_route(&self, n: usize) -> f64 {
        if n == 1 {
            self.two_route_n1
        } else {
            self.two_route_n2
        }
    }

    pub fn ball(&self, n: usize) -> f64 {
        if n == 1 {
            self.ball_n1
        } else {
            self.ball_n2
        }
    }

    pub fn stokes(&self, n: usize) -> f64 {
        if n == 1 {
            self.stokes_n1
        } else {
            self.stokes_n2
        }
    }

    /// Sets a field by name; returns `false` for unknown names.
    pub fn set(&mut self, name: &str, value: f64) -> bool {
        let mut json = serde_json::to_value(&*self).expect("tolerances serialize");
        let key = name.replace('-', "_");
        match json.get_mut(&key) {
            Some(slot) => {
                *slot = serde_json::json!(value);
                *self = serde_json::from_value(json).expect("same shape");
                true
            }
            None => false,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct Stats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

impl Stats {
    fn of(values: impl Iterator<Item = f64>) -> Self {
        let mut count = 0usize;
        let mut s = Stats {
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
            mean: 0.0,
        };
        for v in values {
            s.min = s.min.min(v);
            s.max = s.max.max(v);
            s.mean += v;
            count += 1;
        }
        if count > 0 {
            s.mean /= count as f64;
        }
        s
    }
}

/// Per-node quantities on the boundary.
#[derive(Clone, Debug, Serialize)]
pub struct NodeRecord {
    pub node: usize,
    pub point: Vec<f64>,
    pub scal: f64,
    pub torsion_sq: f64,
    pub curvature_sq: f64,
    pub transverse_residual: f64,
    pub ricci_residual: f64,
    /// Weighted contribution of `Pi`.
    pub pi: f64,
    /// Weighted contribution of the closed-form density.
    pub density: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct NodeDiagnostics {
    pub nodes: usize,
    pub scal: Stats,
    pub torsion_sq: Stats,
    pub curvature_sq: Stats,
    pub max_transverse_residual: f64,
    pub max_ricci_residual: f64,
}

/// Interior side of the Gauss-Bonnet formula for domains whose metric is complex hyperbolic.
#[derive(Clone, Debug, Serialize)]
pub struct EulerSide {
    pub euler_characteristic: i64,
    /// Zero of `del rho`, where the frame is singular.
    pub critical_point: Vec<f64>,
    /// Largest `|c_{n+1}(Theta)|` coefficient at sampled interior points.
    pub interior_chern_max: f64,
    /// `(eps, -int_{|z - p| = eps} Pi)`.
    pub residues: Vec<(f64, f64)>,
    /// Extrapolated residue index.
    pub index: f64,
    /// `|0 - (index + int_M Pi)|`.
    pub closure: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct VariantIntegral {
    pub variant: Variant,
    pub integral: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct InvariantReport {
    pub domain_id: String,
    pub n: usize,
    pub resolution: usize,
    /// Fefferman stage used; `None` for exact solutions.
    pub stage: Option<usize>,
    /// Per-stage Fefferman constants and slopes; `calibrated` marks a constant that
    /// replaced the classical one.
    pub fefferman: Vec<StageReport>,
    pub integral_transgression: f64,
    pub integral_density: f64,
    pub discrepancy: f64,
    pub tolerance: f64,
    /// Set when the two routes disagree beyond `tolerance`.
    pub flagged: bool,
    pub euler_side: Option<EulerSide>,
    pub variants: Vec<VariantIntegral>,
    pub per_node_diagnostics: NodeDiagnostics,
    #[serde(skip)]
    pub nodes: Vec<NodeRecord>,
}

#[derive(Clone, Debug)]
pub struct ReportConfig {
    pub resolution: usize,
    /// Fefferman stage for non-exact domains; defaults to `n + 2`.
    pub stage: Option<usize>,
    pub tolerances: Tolerances,
    pub euler_side: bool,
    pub variants: bool,
    pub residue_eps: Vec<f64>,
    /// Grid resolution on the small residue spheres.
    pub residue_resolution: usize,
    pub seed: u64,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self {
            resolution: 32,
            stage: None,
            tolerances: Tolerances::default(),
            euler_side: true,
            variants: false,
            residue_eps: vec![0.2, 0.1, 0.05],
            residue_resolution: 12,
            seed: 7,
        }
    }
}

/// Jet order used for boundary geometry.
const BOUNDARY_ORDER: usize = 4;

/// `theta ^ (d theta)^n` at a point.
pub fn volume_form(f: &dyn DefiningFunction, z: &[Complex64]) -> Result<Form<Complex64>> {
    let (_, frame, _) = geometry_at(f, z, BOUNDARY_ORDER, None)?;
    let theta = frame.contact.value();
    let dtheta = frame.contact.d()?.value();
    let mut out = theta;
    for _ in 0..frame.n() {
        out = out.wedge(&dtheta);
    }
    Ok(out)
}

/// Human-readable identifier of a domain.
pub fn domain_id(spec: &DomainSpec) -> String {
    let kind = serde_json::to_value(spec.kind)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_default();
    let mut id = format!("{kind}_n{}", spec.n);
    if let Some(t) = spec.params.t {
        id.push_str(&format!("_t{t}"));
    }
    if let Some(a) = &spec.params.a {
        let parts: Vec<String> = a.iter().map(|x| format!("{x}")).collect();
        id.push_str(&format!("_a{}", parts.join(",")));
    }
    id
}

/// The defining function the geometry is computed from.
pub struct GeometricFunction {
    pub function: Arc<dyn DefiningFunction>,
    /// Fefferman stage; `None` when `rho` is already an exact solution.
    pub stage: Option<usize>,
    pub fefferman: Vec<StageReport>,
}

/// `rho` itself for exact solutions, otherwise the Fefferman approximation of the requested stage.
pub fn geometric_defining_function(
    spec: &DomainSpec,
    stage: Option<usize>,
) -> Result<GeometricFunction> {
    let base = spec.evaluator()?;
    if spec.is_exact_solution() {
        return Ok(GeometricFunction {
            function: base,
            stage: None,
            fefferman: Vec::new(),
        });
    }
    let n = spec.n;
    let stage = stage.unwrap_or(n + 2);
    if stage < n + 2 {
        return Err(Error::StageTooLow {
            stage,
            required: n + 2,
        });
    }
    let solution = fefferman_iterate(base, spec.center()?, stage, &FeffermanOptions::default())?;
    Ok(GeometricFunction {
        fefferman: solution.reports().to_vec(),
        function: Arc::new(solution),
        stage: Some(stage),
    })
}

/// Newton iteration for the zero of `del rho`.
pub fn critical_point(f: &dyn DefiningFunction, start: &[Complex64]) -> Result<Vec<Complex64>> {
    let m = start.len();
    let mut z = start.to_vec();
    for _ in 0..50 {
        let jet = f.jet(&z, 2)?;
        let grad: Vec<crate::jets::Jet> =
            (0..m).map(|i| jet.derivative(i)).collect::<Result<_>>()?;
        let residual: Vec<f64> = grad
            .iter()
            .flat_map(|g| [g.value().re, g.value().im])
            .collect();
        if residual.iter().map(|x| x.abs()).fold(0.0, f64::max) < 1e-14 {
            return Ok(z);
        }
        let mut cols = Vec::with_capacity(2 * m);
        for j in 0..m {
            let mut dre = Vec::with_capacity(2 * m);
            let mut dim = Vec::with_capacity(2 * m);
            for g in &grad {
                let holo = g.derivative(j)?.value();
                let anti = g.derivative(m + j)?.value();
                let a = holo + anti;
                let b = (holo - anti) * Complex64::i();
                dre.extend([a.re, a.im]);
                dim.extend([b.re, b.im]);
            }
            cols.push(DVector::from_vec(dre));
            cols.push(DVector::from_vec(dim));
        }
        let step = DMatrix::from_columns(&cols)
            .lu()
            .solve(&DVector::from_vec(residual))
            .ok_or(Error::SingularSystem {
                condition: f64::INFINITY,
            })?;
        for j in 0..m {
            z[j] -= Complex64::new(step[2 * j], step[2 * j + 1]);
        }
    }
    Err(Error::NewtonDiverged { node: 0 })
}

fn pi_at(
    f: &dyn DefiningFunction,
    node: &ChartNode,
    formula: PiFormula,
) -> Result<Form<Complex64>> {
    let (_, _, bundle) = geometry_at(f, &node.point, BOUNDARY_ORDER, None)?;
    Ok(transgression_form(&bundle, formula).pi)
}

/// `int_M Pi` on a prepared chart.
pub fn integrate_pi(
    f: &dyn DefiningFunction,
    chart: &QuadratureChart,
    formula: PiFormula,
) -> Result<f64> {
    Ok(deterministic_sum(&node_values(chart, |node| pi_at(f, node, formula))?).re)
}

fn euler_side(
    spec: &DomainSpec,
    f: &dyn DefiningFunction,
    integral: f64,
    config: &ReportConfig,
) -> Result<Option<EulerSide>> {
    if !matches!(spec.kind, DomainKind::Ball | DomainKind::MobiusBall) {
        return Ok(None);
    }
    let chi = spec.euler_characteristic().unwrap_or(1);
    let center = critical_point(f, &spec.center()?)?;
    let m = spec.m();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut chern_max: f64 = 0.0;
    for _ in 0..8 {
        let dir = random_unit_vector(&mut rng, m);
        let scale = rng.gen_range(0.15..0.5);
        let z: Vec<Complex64> = center
            .iter()
            .zip(&dir)
            .map(|(c, d)| c + d * scale)
            .collect();
        if f.value(&z)? >= 0.0 {
            continue;
        }
        let (_, _, bundle) = geometry_at(f, &z, BOUNDARY_ORDER, None)?;
        chern_max = chern_max.max(chern_top(&bundle.curvature_values()).max_abs());
    }
    let grid = sphere_grid(spec.n, config.residue_resolution)?;
    let mut residues = Vec::new();
    for &eps in &config.residue_eps {
        let r = residue_sphere(&center, eps, &grid, |node| {
            pi_at(f, node, PiFormula::Binomial)
        })?;
        residues.push((eps, -r.re));
    }
    let index = extrapolate_to_zero(&residues);
    Ok(Some(EulerSide {
        euler_characteristic: chi,
        critical_point: center.iter().flat_map(|c| [c.re, c.im]).collect(),
        interior_chern_max: chern_max,
        residues,
        index,
        closure: (index + integral).abs(),
    }))
}

/// Runs the boundary pipeline: chart, frames, connection, `int_M Pi` and the density integral.
pub fn gauss_bonnet_report(spec: &DomainSpec, config: &ReportConfig) -> Result<InvariantReport> {
    let n = spec.n;
    let GeometricFunction {
        function: geom,
        stage,
        fefferman,
    } = geometric_defining_function(spec, config.stage)?;
    let base = spec.evaluator()?;
    let grid = sphere_grid(n, config.resolution)?;
    let chart = boundary_chart(base.as_ref(), &spec.center()?, &grid)?;
    let records: Vec<Result<NodeRecord>> = par_map(chart.nodes.len(), |i| {
        let node = &chart.nodes[i];
        let run = || -> Result<NodeRecord> {
            let (point, frame, bundle) =
                geometry_at(geom.as_ref(), &node.point, BOUNDARY_ORDER, None)?;
            let data = extract_pseudohermitian(&point, &frame, &bundle)?;
            let einstein = check_einstein_relations(&data, stage.or(Some(n + 2)))?;
            let pi = node
                .pair(&transgression_form(&bundle, PiFormula::Binomial).pi)
                .re;
            let theta = frame.contact.value();
            let dtheta = frame.contact.d()?.value();
            let mut vol = theta;
            for _ in 0..n {
                vol = vol.wedge(&dtheta);
            }
            let density = boundary_density(&data)? * node.pair(&vol).re;
            Ok(NodeRecord {
                node: i,
                point: node.point.iter().flat_map(|c| [c.re, c.im]).collect(),
                scal: data.scal,
                torsion_sq: data.torsion_norm_sq(),
                curvature_sq: data.curvature_norm_sq(),
                transverse_residual: einstein.transverse,
                ricci_residual: einstein.ricci,
                pi,
                density,
            })
        };
        run().map_err(|e| Error::Node {
            node: i,
            source: Box::new(e),
        })
    });
    let nodes: Vec<NodeRecord> = records.into_iter().collect::<Result<_>>()?;
    let sum = |get: fn(&NodeRecord) -> f64| {
        let vals: Vec<Complex64> = nodes.iter().map(|r| Complex64::new(get(r), 0.0)).collect();
        deterministic_sum(&vals).re
    };
    let integral_transgression = sum(|r| r.pi);
    let integral_density = sum(|r| r.density);
    let discrepancy = (integral_transgression - integral_density).abs();
    let tolerance = config.tolerances.two_route(n);
    let variants = if config.variants {
        Variant::ALL
            .iter()
            .map(|&v| {
                let vals = node_values(&chart, |node| {
                    let (_, _, bundle) =
                        geometry_at(geom.as_ref(), &node.point, BOUNDARY_ORDER, None)?;
                    Ok(pi_form(
                        &bundle.theta_values(),
                        &bundle.curvature_values(),
                        PiFormula::Homotopy(v),
                    ))
                })?;
                Ok(VariantIntegral {
                    variant: v,
                    integral: deterministic_sum(&vals).re,
                })
            })
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    let euler = if config.euler_side {
        euler_side(spec, geom.as_ref(), integral_transgression, config)?
    } else {
        None
    };
    let per_node_diagnostics = NodeDiagnostics {
        nodes: nodes.len(),
        scal: Stats::of(nodes.iter().map(|r| r.scal)),
        torsion_sq: Stats::of(nodes.iter().map(|r| r.torsion_sq)),
        curvature_sq: Stats::of(nodes.iter().map(|r| r.curvature_sq)),
        max_transverse_residual: nodes
            .iter()
            .map(|r| r.transverse_residual)
            .fold(0.0, f64::max),
        max_ricci_residual: nodes.iter().map(|r| r.ricci_residual).fold(0.0, f64::max),
    };
    Ok(InvariantReport {
        domain_id: domain_id(spec),
        n,
        resolution: config.resolution,
        stage,
        fefferman,
        integral_transgression,
        integral_density,
        discrepancy,
        tolerance,
        flagged: discrepancy > tolerance,
        euler_side: euler,
        variants,
        per_node_diagnostics,
        nodes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere_data(n: usize) -> PseudoHermitianData {
        let nf = n as f64;
        let mut curvature = Vec::new();
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let v = if n == 1 {
                            2.0
                        } else {
                            identity_pair(a, b, c, d)
                        };
                        curvature.push(Complex64::new(v, 0.0));
                    }
                }
            }
        }
        let _ = nf;
        PseudoHermitianData::from_tensors(
            n,
            vec![vec![Complex64::new(0.0, 0.0); n]; n],
            curvature,
            1.0,
            -1.0,
        )
    }

    #[test]
    fn sphere_densities() {
        let d1 = burns_epstein_density(&sphere_data(1)).unwrap();
        assert!((d1 + 1.0 / (4.0 * PI * PI)).abs() < 1e-15);
        let d2 = dim5_density(&sphere_data(2)).unwrap();
        assert!((d2.density + 2.0 / (16.0 * PI.powi(3))).abs() < 1e-15);
        assert!(d2.agreement() < 1e-15);
    }

    #[test]
    fn wrong_dimension_is_rejected() {
        assert!(matches!(
            burns_epstein_density(&sphere_data(2)),
            Err(Error::WrongDimension { .. })
        ));
    }

    #[test]
    fn tolerance_override_by_name() {
        let mut t = Tolerances::default();
        assert!(t.set("two-route-n2", 3e-4));
        assert_eq!(t.two_route_n2, 3e-4);
        assert!(!t.set("nonsense", 1.0));
    }
}
