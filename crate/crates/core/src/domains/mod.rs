//! Defining functions: built-in model domains, user polynomials and their file format.
//!
//! A domain file is JSON:
//!
//! ```json
//! {
//!   "n": 1,
//!   "kind": "polynomial",
//!   "monomials": [
//!     {"a": [1, 0], "b": [1, 0], "re": 1.0, "im": 0.0},
//!     {"a": [0, 1], "b": [0, 1], "re": 1.0},
//!     {"a": [0, 0], "b": [0, 0], "re": -1.0}
//!   ],
//!   "params": {},
//!   "star_center": [0.0, 0.0, 0.0, 0.0]
//! }
//! ```
//!
//! Each monomial contributes `(re + i im) z^a zbar^b`. `kind` is one of
//! `polynomial`, `ball`, `real_ellipsoid`, `tube_disc`, `mobius_ball`; built-in
//! kinds may omit `monomials` and take their parameters from `params`
//! (`t` for the ellipsoid, `a` as `[re, im, ...]` pairs and the boolean
//! `jacobian_rescale` for the Mobius ball). Missing conjugate partners are added
//! automatically. `euler_characteristic` may be given as metadata; star-shaped
//! domains default to 1.

mod mobius;
mod polynomial;
mod rescaled;

use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use mobius::MobiusPullback;
pub use polynomial::PolynomialDefiningFunction;
pub use rescaled::PluriharmonicRescale;

use crate::error::{Error, Result};
use crate::jets::Jet;

/// A real defining function `rho` on `C^{n+1}` with `X = {rho < 0}`.
pub trait DefiningFunction: Send + Sync {
    /// CR dimension of the boundary.
    fn n(&self) -> usize;

    /// Taylor jet of `rho` about `z` in the variables `(z, zbar)`.
    fn jet(&self, z: &[Complex64], order: usize) -> Result<Jet>;

    fn value(&self, z: &[Complex64]) -> Result<f64> {
        Ok(self.jet(z, 0)?.value().re)
    }

    /// A cheaper function with the same zero set, used for boundary root finding.
    fn root_proxy(&self) -> Option<&dyn DefiningFunction> {
        None
    }
}

#[derive(Serialize, Deserialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    Polynomial,
    Ball,
    RealEllipsoid,
    TubeDisc,
    MobiusBall,
}

impl std::str::FromStr for DomainKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| Error::InvalidParams(format!("unknown domain kind {s}")))
    }
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
pub struct Monomial {
    pub a: Vec<u8>,
    pub b: Vec<u8>,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq, Default)]
pub struct DomainParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jacobian_rescale: Option<bool>,
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
pub struct DomainSpec {
    pub n: usize,
    pub kind: DomainKind,
    #[serde(default)]
    pub monomials: Vec<Monomial>,
    #[serde(default)]
    pub params: DomainParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub star_center: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub euler_characteristic: Option<i64>,
    /// Set when parsing had to add missing conjugate monomials.
    #[serde(skip)]
    pub symmetry_completed: bool,
}

fn complex_pairs(values: &[f64]) -> Result<Vec<Complex64>> {
    if !values.len().is_multiple_of(2) {
        return Err(Error::InvalidParams(
            "complex vectors are given as [re, im, ...] pairs".into(),
        ));
    }
    Ok(values
        .chunks(2)
        .map(|p| Complex64::new(p[0], p[1]))
        .collect())
}

fn unit(m: usize, i: usize) -> Vec<u8> {
    let mut e = vec![0; m];
    e[i] = 1;
    e
}

fn ball_monomials(m: usize) -> Vec<Monomial> {
    let mut out: Vec<Monomial> = (0..m)
        .map(|i| Monomial {
            a: unit(m, i),
            b: unit(m, i),
            re: 1.0,
            im: 0.0,
        })
        .collect();
    out.push(Monomial {
        a: vec![0; m],
        b: vec![0; m],
        re: -1.0,
        im: 0.0,
    });
    out
}

impl DomainSpec {
    pub fn m(&self) -> usize {
        self.n + 1
    }

    /// Anchor of the ray search; the origin unless declared.
    pub fn center(&self) -> Result<Vec<Complex64>> {
        match &self.star_center {
            Some(c) => {
                let c = complex_pairs(c)?;
                if c.len() != self.m() {
                    return Err(Error::InvalidParams("star_center has wrong length".into()));
                }
                Ok(c)
            }
            None => Ok(vec![Complex64::new(0.0, 0.0); self.m()]),
        }
    }

    pub fn is_star_shaped(&self) -> bool {
        self.kind != DomainKind::TubeDisc
    }

    /// Whether `J[rho] = -|holomorphic|^2` holds identically, so no Fefferman stage is needed.
    pub fn is_exact_solution(&self) -> bool {
        matches!(
            self.kind,
            DomainKind::Ball | DomainKind::MobiusBall | DomainKind::TubeDisc
        )
    }

    /// Euler characteristic of the closure, from metadata.
    pub fn euler_characteristic(&self) -> Option<i64> {
        self.euler_characteristic
            .or(if self.is_star_shaped() { Some(1) } else { None })
    }

    pub fn mobius_center(&self) -> Result<Vec<Complex64>> {
        let a = self
            .params
            .a
            .as_ref()
            .ok_or_else(|| Error::InvalidParams("mobius_ball needs params.a".into()))?;
        complex_pairs(a)
    }

    pub fn evaluator(&self) -> Result<Arc<dyn DefiningFunction>> {
        match self.kind {
            DomainKind::MobiusBall => Ok(Arc::new(MobiusPullback::new(
                self.n,
                self.mobius_center()?,
                self.params.jacobian_rescale.unwrap_or(true),
            )?)),
            _ => Ok(Arc::new(PolynomialDefiningFunction::new(
                self.n,
                &self.monomials,
            ))),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("domain spec serializes")
    }
}

fn check_n(n: usize) -> Result<()> {
    if n == 1 || n == 2 {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!("n must be 1 or 2, got {n}")))
    }
}

/// Builds one of the model domains.
pub fn make_builtin(kind: DomainKind, n: usize, params: DomainParams) -> Result<DomainSpec> {
    check_n(n)?;
    let m = n + 1;
    let monomials = match kind {
        DomainKind::Ball => ball_monomials(m),
        DomainKind::RealEllipsoid => {
            let t = params
                .t
                .ok_or_else(|| Error::InvalidParams("real_ellipsoid needs params.t".into()))?;
            if !t.is_finite() || t.abs() >= 1.0 {
                return Err(Error::InvalidParams(format!(
                    "ellipsoid deformation t = {t} must satisfy |t| < 1"
                )));
            }
            let mut out = ball_monomials(m);
            if t != 0.0 {
                let mut sq = vec![0; m];
                sq[0] = 2;
                out.push(Monomial {
                    a: sq.clone(),
                    b: vec![0; m],
                    re: t / 2.0,
                    im: 0.0,
                });
                out.push(Monomial {
                    a: vec![0; m],
                    b: sq,
                    re: t / 2.0,
                    im: 0.0,
                });
            }
            out
        }
        DomainKind::TubeDisc => {
            if n != 1 {
                return Err(Error::InvalidParams(
                    "tube_disc is defined for n = 1".into(),
                ));
            }
            vec![
                Monomial {
                    a: vec![0, 0],
                    b: vec![0, 0],
                    re: 1.0,
                    im: 0.0,
                },
                Monomial {
                    a: vec![0, 1],
                    b: vec![0, 1],
                    re: -1.0,
                    im: 0.0,
                },
                Monomial {
                    a: vec![1, 1],
                    b: vec![1, 1],
                    re: 1.0,
                    im: 0.0,
                },
            ]
        }
        DomainKind::MobiusBall => {
            let spec = DomainSpec {
                n,
                kind,
                monomials: Vec::new(),
                params: params.clone(),
                star_center: None,
                euler_characteristic: None,
                symmetry_completed: false,
            };
            MobiusPullback::new(n, spec.mobius_center()?, true)?;
            return Ok(spec);
        }
        DomainKind::Polynomial => {
            return Err(Error::InvalidParams(
                "polynomial domains are read from a domain file".into(),
            ))
        }
    };
    let spec = DomainSpec {
        n,
        kind,
        monomials,
        params,
        star_center: None,
        euler_characteristic: None,
        symmetry_completed: false,
    };
    if kind == DomainKind::RealEllipsoid {
        check_pseudoconvex(&spec)?;
    }
    Ok(spec)
}

/// Convenience constructor for the Mobius ball with the Jacobian rescale.
pub fn mobius_pullback(n: usize, a: &[Complex64]) -> Result<DomainSpec> {
    let flat = a.iter().flat_map(|c| [c.re, c.im]).collect();
    make_builtin(
        DomainKind::MobiusBall,
        n,
        DomainParams {
            a: Some(flat),
            ..Default::default()
        },
    )
}

fn complete_symmetry(n: usize, monomials: &[Monomial]) -> Result<(Vec<Monomial>, bool)> {
    let m = n + 1;
    let mut merged: Vec<Monomial> = Vec::new();
    for mono in monomials {
        if mono.a.len() != m || mono.b.len() != m {
            return Err(Error::InvalidParams(format!(
                "monomial exponents must have length {m}"
            )));
        }
        match merged.iter_mut().find(|x| x.a == mono.a && x.b == mono.b) {
            Some(x) => {
                x.re += mono.re;
                x.im += mono.im;
            }
            None => merged.push(mono.clone()),
        }
    }
    let mut completed = false;
    let mut out = merged.clone();
    for mono in &merged {
        let scale = 1e-12 * (mono.re.abs() + mono.im.abs()).max(1.0);
        if mono.a == mono.b {
            if mono.im.abs() > scale {
                return Err(Error::SymmetryConflict {
                    a: mono.a.clone(),
                    b: mono.b.clone(),
                });
            }
            continue;
        }
        match merged.iter().find(|x| x.a == mono.b && x.b == mono.a) {
            Some(partner) => {
                if (partner.re - mono.re).abs() > scale || (partner.im + mono.im).abs() > scale {
                    return Err(Error::SymmetryConflict {
                        a: mono.a.clone(),
                        b: mono.b.clone(),
                    });
                }
            }
            None => {
                completed = true;
                out.push(Monomial {
                    a: mono.b.clone(),
                    b: mono.a.clone(),
                    re: mono.re,
                    im: -mono.im,
                });
            }
        }
    }
    Ok((out, completed))
}

/// Parses and validates a domain file.
pub fn parse_domain_spec(text: &str) -> Result<DomainSpec> {
    let mut spec: DomainSpec = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    check_n(spec.n)?;
    if spec.monomials.is_empty() && spec.kind != DomainKind::Polynomial {
        let built = make_builtin(spec.kind, spec.n, spec.params.clone())?;
        spec.monomials = built.monomials;
    } else {
        if spec.kind == DomainKind::MobiusBall {
            return Err(Error::InvalidParams(
                "mobius_ball is parametrized by params.a, not monomials".into(),
            ));
        }
        let (monomials, completed) = complete_symmetry(spec.n, &spec.monomials)?;
        spec.monomials = monomials;
        spec.symmetry_completed = completed;
    }
    spec.center()?;
    if spec.is_star_shaped() {
        let f = spec.evaluator()?;
        let rho = f.value(&spec.center()?)?;
        if rho >= 0.0 {
            return Err(Error::InvalidParams(format!(
                "star center is not interior (rho = {rho})"
            )));
        }
        check_pseudoconvex(&spec)?;
    }
    Ok(spec)
}

/// Point where the ray `center + t * direction` (t > 0) meets the boundary, with `t`.
pub fn boundary_along_ray(
    f: &dyn DefiningFunction,
    center: &[Complex64],
    direction: &[Complex64],
    tol: f64,
    max_iter: usize,
) -> Option<(Vec<Complex64>, f64)> {
    let at = |t: f64| -> Vec<Complex64> {
        center
            .iter()
            .zip(direction)
            .map(|(c, d)| c + d * t)
            .collect()
    };
    let eval = |t: f64| -> Option<(f64, f64)> {
        let jet = f.jet(&at(t), 1).ok()?;
        let m = center.len();
        let mut slope = Complex64::new(0.0, 0.0);
        for (i, d) in direction.iter().enumerate() {
            let mut e = vec![0u8; 2 * m];
            e[i] = 1;
            let idx = jet.space().index_of(&e)?;
            slope += jet.coeffs()[idx] * d;
        }
        Some((jet.value().re, 2.0 * slope.re))
    };
    let (f0, _) = eval(0.0)?;
    if f0 >= 0.0 {
        return None;
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut grow = 0;
    while eval(hi)?.0 < 0.0 {
        lo = hi;
        hi *= 2.0;
        grow += 1;
        if grow > 60 {
            return None;
        }
    }
    let mut t = 0.5 * (lo + hi);
    for _ in 0..max_iter.max(1) * 4 {
        let (v, dv) = eval(t)?;
        if v < 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        let newton = if dv != 0.0 { t - v / dv } else { f64::NAN };
        let next = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let step = (next - t).abs();
        t = next;
        if step <= tol * t.max(1.0) {
            let (v, _) = eval(t)?;
            if v.abs() <= 1e2 * tol {
                return Some((at(t), t));
            }
        }
        if hi - lo <= f64::EPSILON * hi {
            return Some((at(t), t));
        }
    }
    None
}

/// Smallest eigenvalue of the Levi form on `ker del rho`, normalized by `|del rho|`.
pub fn levi_min_eigenvalue(f: &dyn DefiningFunction, z: &[Complex64]) -> Result<f64> {
    let m = z.len();
    let jet = f.jet(z, 2)?;
    let grad: Vec<Complex64> = (0..m)
        .map(|i| jet.derivative(i).map(|d| d.value()))
        .collect::<Result<_>>()?;
    let hess = DMatrix::from_fn(m, m, |i, j| {
        let mut e = vec![0u8; 2 * m];
        e[i] += 1;
        e[m + j] += 1;
        let idx = jet.space().index_of(&e).expect("second-order monomial");
        jet.coeffs()[idx]
    });
    let gnorm = grad.iter().map(|g| g.norm_sqr()).sum::<f64>().sqrt();
    if gnorm == 0.0 {
        return Err(Error::PseudoconvexityLost {
            location: format!("{z:?}"),
            eigenvalue: 0.0,
        });
    }
    // orthonormal basis of ker del rho = {v : sum rho_i v^i = 0}
    let normal: Vec<Complex64> = grad.iter().map(|g| g.conj() / gnorm).collect();
    let mut basis: Vec<Vec<Complex64>> = Vec::new();
    for k in 0..m {
        let mut v: Vec<Complex64> = (0..m)
            .map(|i| {
                if i == k {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        for b in std::iter::once(&normal).chain(basis.iter()) {
            let dot: Complex64 = v.iter().zip(b).map(|(x, y)| x * y.conj()).sum();
            for (x, y) in v.iter_mut().zip(b) {
                *x -= dot * y;
            }
        }
        let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-8 && basis.len() < m - 1 {
            basis.push(v.iter().map(|x| x / norm).collect());
        }
    }
    let q = DMatrix::from_fn(m, m - 1, |i, a| basis[a][i]);
    // h(X, Y) = rho_{i jbar} X^i conj(Y^j)
    let levi = q.transpose() * hess * q.map(|c| c.conj());
    let levi = (&levi + levi.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(levi);
    Ok(eig
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
        / gnorm)
}

/// Probes boundary points along seeded rays and checks Levi positivity.
pub fn check_pseudoconvex(spec: &DomainSpec) -> Result<()> {
    let f = spec.evaluator()?;
    let center = spec.center()?;
    let m = spec.m();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for _ in 0..32 {
        let dir = random_unit_vector(&mut rng, m);
        let Some((p, _)) = boundary_along_ray(f.as_ref(), &center, &dir, 1e-13, 50) else {
            return Err(Error::InvalidParams(
                "boundary ray search failed; domain may not be star-shaped".into(),
            ));
        };
        let eig = levi_min_eigenvalue(f.as_ref(), &p)?;
        if eig <= 1e-8 {
            return Err(Error::PseudoconvexityLost {
                location: format!("{p:?}"),
                eigenvalue: eig,
            });
        }
    }
    Ok(())
}

/// A uniformly distributed unit vector in `C^m`.
pub fn random_unit_vector(rng: &mut impl Rng, m: usize) -> Vec<Complex64> {
    loop {
        let v: Vec<Complex64> = (0..m)
            .map(|_| {
                let (u1, u2): (f64, f64) = (rng.gen_range(1e-12..1.0), rng.gen());
                let r = (-2.0 * u1.ln()).sqrt();
                let (u3, u4): (f64, f64) = (rng.gen_range(1e-12..1.0), rng.gen());
                let s = (-2.0 * u3.ln()).sqrt();
                Complex64::new(
                    r * (std::f64::consts::TAU * u2).cos(),
                    s * (std::f64::consts::TAU * u4).cos(),
                )
            })
            .collect();
        let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-6 {
            return v.iter().map(|c| c / norm).collect();
        }
    }
}

/// Points of the tube chart: `w` in the disc of radius 0.6 and `|zeta|^2 = scale / (1 - |w|^2)`.
///
/// `scale = 1` gives boundary points; `scale > 1` gives points of `X = {rho < 0}`.
pub fn tube_chart_points(count: usize, seed: u64, scale_range: (f64, f64)) -> Vec<Vec<Complex64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let r = 0.6 * rng.gen::<f64>().sqrt();
            let w = Complex64::from_polar(r, rng.gen_range(0.0..std::f64::consts::TAU));
            let scale = if scale_range.0 == scale_range.1 {
                scale_range.0
            } else {
                rng.gen_range(scale_range.0..scale_range.1)
            };
            let modulus = (scale / (1.0 - r * r)).sqrt();
            let zeta = Complex64::from_polar(modulus, rng.gen_range(0.0..std::f64::consts::TAU));
            vec![w, zeta]
        })
        .collect()
}

/// The holomorphic gradient `(rho_1, ..., rho_m)` at the base point of a jet.
pub fn gradient(jet: &Jet, m: usize) -> Result<Vec<Complex64>> {
    (0..m)
        .map(|i| jet.derivative(i).map(|d| d.value()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn ball_boundary_point_and_gradient() {
        let spec = make_builtin(DomainKind::Ball, 1, DomainParams::default()).unwrap();
        let f = spec.evaluator().unwrap();
        let z = [c(1.0, 0.0), c(0.0, 0.0)];
        assert_eq!(f.value(&z).unwrap(), 0.0);
        let g = gradient(&f.jet(&z, 1).unwrap(), 2).unwrap();
        assert_eq!(g, vec![c(1.0, 0.0), c(0.0, 0.0)]);
    }

    #[test]
    fn tube_value_matches_closed_form() {
        let spec = make_builtin(DomainKind::TubeDisc, 1, DomainParams::default()).unwrap();
        let f = spec.evaluator().unwrap();
        assert!((f.value(&[c(0.0, 0.0), c(0.5, 0.0)]).unwrap() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn ellipsoid_zero_deformation_matches_ball() {
        let ball = make_builtin(DomainKind::Ball, 2, DomainParams::default())
            .unwrap()
            .evaluator()
            .unwrap();
        let ell = make_builtin(
            DomainKind::RealEllipsoid,
            2,
            DomainParams {
                t: Some(0.0),
                ..Default::default()
            },
        )
        .unwrap()
        .evaluator()
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let z = random_unit_vector(&mut rng, 3);
            let z: Vec<_> = z.iter().map(|x| x * 0.7).collect();
            assert_eq!(ball.value(&z).unwrap(), ell.value(&z).unwrap());
        }
    }

    #[test]
    fn polynomial_jet_matches_value_and_is_real() {
        let spec = make_builtin(
            DomainKind::RealEllipsoid,
            1,
            DomainParams {
                t: Some(0.3),
                ..Default::default()
            },
        )
        .unwrap();
        let f = spec.evaluator().unwrap();
        let z = [c(0.2, -0.4), c(0.5, 0.1)];
        let jet = f.jet(&z, 3).unwrap();
        assert!((jet.value().re - f.value(&z).unwrap()).abs() < 1e-15);
        assert_eq!(jet.reality_defect(), 0.0);
    }

    #[test]
    fn parse_ball_document() {
        let doc = r#"{"n": 1, "kind": "polynomial", "monomials": [
            {"a": [1, 0], "b": [1, 0], "re": 1.0, "im": 0.0},
            {"a": [0, 1], "b": [0, 1], "re": 1.0, "im": 0.0},
            {"a": [0, 0], "b": [0, 0], "re": -1.0, "im": 0.0}]}"#;
        let spec = parse_domain_spec(doc).unwrap();
        let f = spec.evaluator().unwrap();
        assert!(
            (f.value(&[c(0.3, 0.2), c(0.1, 0.0)]).unwrap() - (0.13 + 0.01 - 1.0)).abs() < 1e-15
        );
        assert!(!spec.symmetry_completed);
    }

    #[test]
    fn parse_reports_conflicts_and_positions() {
        let doc = r#"{"n": 1, "kind": "polynomial", "monomials": [
            {"a": [2, 0], "b": [0, 0], "re": 0.1, "im": 0.0},
            {"a": [0, 0], "b": [2, 0], "re": 0.2, "im": 0.0},
            {"a": [1, 0], "b": [1, 0], "re": 1.0},
            {"a": [0, 1], "b": [0, 1], "re": 1.0},
            {"a": [0, 0], "b": [0, 0], "re": -1.0}]}"#;
        assert!(matches!(
            parse_domain_spec(doc),
            Err(Error::SymmetryConflict { .. })
        ));
        let broken = "{\"n\": 1,\n \"kind\": }";
        match parse_domain_spec(broken) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn parse_completes_missing_conjugates() {
        let doc = r#"{"n": 1, "kind": "polynomial", "monomials": [
            {"a": [2, 0], "b": [0, 0], "re": 0.05, "im": 0.0},
            {"a": [1, 0], "b": [1, 0], "re": 1.0},
            {"a": [0, 1], "b": [0, 1], "re": 1.0},
            {"a": [0, 0], "b": [0, 0], "re": -1.0}]}"#;
        let spec = parse_domain_spec(doc).unwrap();
        assert!(spec.symmetry_completed);
        let f = spec.evaluator().unwrap();
        assert!((f.value(&[c(1.0, 0.0), c(0.0, 0.0)]).unwrap() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn ellipsoid_document_evaluates() {
        let doc = r#"{"n": 1, "kind": "real_ellipsoid", "params": {"t": 0.1}}"#;
        let spec = parse_domain_spec(doc).unwrap();
        let f = spec.evaluator().unwrap();
        assert!((f.value(&[c(1.0, 0.0), c(0.0, 0.0)]).unwrap() - 0.1).abs() < 1e-15);
        let round = parse_domain_spec(&spec.to_json()).unwrap();
        assert_eq!(round, spec);
    }

    #[test]
    fn ray_search_lands_on_boundary() {
        let spec = make_builtin(
            DomainKind::RealEllipsoid,
            1,
            DomainParams {
                t: Some(0.2),
                ..Default::default()
            },
        )
        .unwrap();
        let f = spec.evaluator().unwrap();
        let (p, t) = boundary_along_ray(
            f.as_ref(),
            &[c(0.0, 0.0); 2],
            &[c(1.0, 0.0), c(0.0, 0.0)],
            1e-13,
            50,
        )
        .unwrap();
        assert!((t - 1.0 / 1.2f64.sqrt()).abs() < 1e-13);
        assert!(f.value(&p).unwrap().abs() <= 1e-12);
    }

    #[test]
    fn mobius_closed_form() {
        let a = [c(0.3, 0.1), c(-0.2, 0.15)];
        let raw = MobiusPullback::new(1, a.to_vec(), false).unwrap();
        let rescaled = MobiusPullback::new(1, a.to_vec(), true).unwrap();
        let z = [c(0.1, -0.3), c(0.4, 0.2)];
        let a2: f64 = a.iter().map(|x| x.norm_sqr()).sum();
        let z2: f64 = z.iter().map(|x| x.norm_sqr()).sum();
        let inner: Complex64 = z.iter().zip(&a).map(|(zi, ai)| zi * ai.conj()).sum();
        let expect = -(1.0 - a2) * (1.0 - z2) / (Complex64::new(1.0, 0.0) - inner).norm_sqr();
        assert!((raw.value(&z).unwrap() - expect).abs() < 1e-14);
        assert!((rescaled.value(&z).unwrap() - (z2 - 1.0)).abs() < 1e-13);
        let zero = MobiusPullback::new(1, vec![c(0.0, 0.0); 2], true).unwrap();
        assert!((zero.value(&z).unwrap() - (z2 - 1.0)).abs() < 1e-15);
    }
}
