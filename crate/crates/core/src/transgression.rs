//! The transgression form `Pi` with `d Pi = c_{n+1}(Theta)` and the top Chern form.
//!
//! `Pi` comes from the homotopy `theta_t = t theta + (1 - t) theta_ref` between the
//! renormalized connection and a reference connection whose top Chern form
//! vanishes identically:
//!
//! ```text
//! Pi = (1/n!) (i/2pi)^{n+1} int_0^1 P(theta - theta_ref, Theta_t, ..., Theta_t) dt
//! ```
//!
//! with `P` the polarized determinant. The integrand is a polynomial of degree
//! `2n` in `t`, so `n + 1` Gauss-Legendre nodes integrate it exactly. The
//! closed-form permutation sums `Phi_k` are provided as well.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use nalgebra::{DMatrix, DVector};

use crate::curvature::{coordinate_chern_connection, coordinate_metric, ConnectionBundle};
use crate::error::{Error, Result};
use crate::forms::{matrix_map, matrix_wedge, Coeff, Form, FormMatrix};
use crate::jets::{Jet, DEFAULT_SINGULAR_EPS};
use crate::quadrature::{
    deterministic_sum, gauss_legendre_unit, par_map, small_sphere, sphere_grid, sphere_volume,
    to_real, ChartNode,
};

/// All permutations of `0..k` with their signs.
pub fn permutations(k: usize) -> Vec<(Vec<usize>, f64)> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                rec(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; k], &mut out);
    out.into_iter()
        .map(|p| {
            let mut inversions = 0;
            for i in 0..k {
                for j in i + 1..k {
                    if p[i] > p[j] {
                        inversions += 1;
                    }
                }
            }
            let sign = if inversions % 2 == 0 { 1.0 } else { -1.0 };
            (p, sign)
        })
        .collect()
}

fn product<T: Coeff>(nbasis: usize, factors: &[&Form<T>]) -> Form<T> {
    let mut acc: Option<Form<T>> = None;
    for f in factors {
        acc = Some(match acc {
            None => (*f).clone(),
            Some(a) => a.wedge(f),
        });
        if acc.as_ref().is_some_and(Form::is_empty) {
            return Form::zero(nbasis);
        }
    }
    acc.unwrap_or_else(|| Form::zero(nbasis))
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// `(1/n!) (i/2pi)^{n+1}`.
fn prefactor(n: usize) -> Complex64 {
    Complex64::new(0.0, 1.0 / (2.0 * PI)).powu(n as u32 + 1) / factorial(n)
}

/// The permutation sums `Phi_k^(0)` and `Phi_k^(1)` for `k = 0..n`; `Phi_n^(1) = 0`.
pub fn phi_terms<T: Coeff>(
    theta: &FormMatrix<T>,
    curvature: &FormMatrix<T>,
) -> (Vec<Form<T>>, Vec<Form<T>>) {
    let n = theta.len() - 1;
    let nb = theta[0][0].nbasis();
    let perms = permutations(n);
    let mut phi0 = Vec::with_capacity(n + 1);
    let mut phi1 = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let mut s0 = Form::zero(nb);
        let mut s1 = Form::zero(nb);
        for (sigma, ssign) in &perms {
            for (tau, tsign) in &perms {
                let sign = Complex64::new(ssign * tsign, 0.0);
                let (sg, tg) = (|i: usize| sigma[i] + 1, |i: usize| tau[i] + 1);
                let mut f0: Vec<&Form<T>> = vec![&theta[0][0]];
                for i in 0..k {
                    f0.push(&curvature[sg(i)][tg(i)]);
                }
                for i in k..n {
                    f0.push(&theta[sg(i)][0]);
                    f0.push(&theta[0][tg(i)]);
                }
                s0 = s0.add(&product(nb, &f0).scale(sign));
                if k < n {
                    let mut f1: Vec<&Form<T>> = vec![&curvature[sg(0)][0], &theta[0][tg(0)]];
                    for i in 1..=k {
                        f1.push(&curvature[sg(i)][tg(i)]);
                    }
                    for i in k + 1..n {
                        f1.push(&theta[sg(i)][0]);
                        f1.push(&theta[0][tg(i)]);
                    }
                    s1 = s1.add(&product(nb, &f1).scale(sign));
                }
            }
        }
        phi0.push(s0);
        phi1.push(s1);
    }
    (phi0, phi1)
}

/// `(1/n!) (i/2pi)^{n+1} sum_k C(n,k) (Phi_k^(0) - Phi_k^(1))`.
pub fn binomial_pi<T: Coeff>(phi0: &[Form<T>], phi1: &[Form<T>]) -> Form<T> {
    let n = phi0.len() - 1;
    let nb = phi0[0].nbasis();
    let sum = (0..=n).fold(Form::zero(nb), |acc, k| {
        acc.add(
            &phi0[k]
                .sub(&phi1[k])
                .scale(Complex64::new(binomial(n, k), 0.0)),
        )
    });
    sum.scale(prefactor(n))
}

/// `P(A_0, ..., A_n) = sum_{sigma, tau} sgn(sigma tau) (A_0)_{sigma 0}^{tau 0} ... (A_n)_{sigma n}^{tau n}`.
pub fn polarized_determinant<T: Coeff>(args: &[&FormMatrix<T>]) -> Form<T> {
    let m = args.len();
    let nb = args[0][0][0].nbasis();
    let perms = permutations(m);
    let mut out = Form::zero(nb);
    for (sigma, ssign) in &perms {
        for (tau, tsign) in &perms {
            let factors: Vec<&Form<T>> = (0..m).map(|k| &args[k][sigma[k]][tau[k]]).collect();
            out = out.add(&product(nb, &factors).scale(Complex64::new(ssign * tsign, 0.0)));
        }
    }
    out
}

/// `det((i/2pi) Theta)` by the Leibniz expansion (curvature entries are even forms).
pub fn chern_top<T: Coeff>(curvature: &FormMatrix<T>) -> Form<T> {
    let m = curvature.len();
    let nb = curvature[0][0].nbasis();
    let mut out = Form::zero(nb);
    for (sigma, sign) in permutations(m) {
        let factors: Vec<&Form<T>> = (0..m).map(|k| &curvature[k][sigma[k]]).collect();
        out = out.add(&product(nb, &factors).scale(Complex64::new(sign, 0.0)));
    }
    out.scale(Complex64::new(0.0, 1.0 / (2.0 * PI)).powu(m as u32))
}

/// Reference connection for the homotopy construction of `Pi`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// `xi` parallel: the first row of the connection is dropped.
    Tilde,
    /// Only `theta_0^a` and `theta_b^a` kept.
    Prime,
    /// Only `theta_b^a` kept.
    DoublePrime,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Tilde, Variant::Prime, Variant::DoublePrime];

    fn keeps(self, a: usize, b: usize) -> bool {
        match self {
            Variant::Tilde => a > 0,
            Variant::Prime => b > 0,
            Variant::DoublePrime => a > 0 && b > 0,
        }
    }
}

/// `Pi` for the homotopy to `variant`, integrated exactly in `t`.
pub fn homotopy_pi<T: Coeff>(
    theta: &FormMatrix<T>,
    curvature: &FormMatrix<T>,
    variant: Variant,
) -> Form<T> {
    let m = theta.len();
    let n = m - 1;
    let nb = theta[0][0].nbasis();
    let sq = matrix_wedge(theta, theta);
    let dtheta: FormMatrix<T> = curvature
        .iter()
        .zip(&sq)
        .map(|(r, s)| r.iter().zip(s).map(|(a, b)| a.add(b)).collect())
        .collect();
    let masked = |mat: &FormMatrix<T>| -> FormMatrix<T> {
        (0..m)
            .map(|a| {
                (0..m)
                    .map(|b| {
                        if variant.keeps(a, b) {
                            mat[a][b].clone()
                        } else {
                            Form::zero(nb)
                        }
                    })
                    .collect()
            })
            .collect()
    };
    let theta_ref = masked(theta);
    let dtheta_ref = masked(&dtheta);
    let velocity: FormMatrix<T> = (0..m)
        .map(|a| (0..m).map(|b| theta[a][b].sub(&theta_ref[a][b])).collect())
        .collect();
    let (ts, ws) = gauss_legendre_unit(n + 1);
    let mut total = Form::zero(nb);
    for (t, w) in ts.iter().zip(&ws) {
        let (ct, cs) = (Complex64::new(*t, 0.0), Complex64::new(1.0 - t, 0.0));
        let theta_t: FormMatrix<T> = (0..m)
            .map(|a| {
                (0..m)
                    .map(|b| theta[a][b].scale(ct).add(&theta_ref[a][b].scale(cs)))
                    .collect()
            })
            .collect();
        let sq_t = matrix_wedge(&theta_t, &theta_t);
        let curv_t: FormMatrix<T> = (0..m)
            .map(|a| {
                (0..m)
                    .map(|b| {
                        dtheta[a][b]
                            .scale(ct)
                            .add(&dtheta_ref[a][b].scale(cs))
                            .sub(&sq_t[a][b])
                    })
                    .collect()
            })
            .collect();
        let mut args: Vec<&FormMatrix<T>> = vec![&velocity];
        args.extend(std::iter::repeat_n(&curv_t, n));
        total = total.add(&polarized_determinant(&args).scale(Complex64::new(*w, 0.0)));
    }
    total.scale(prefactor(n))
}

/// Which expression is used for `Pi`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PiFormula {
    /// The closed-form binomial combination of the `Phi_k` sums.
    Binomial,
    /// Exact homotopy integral towards the given reference connection.
    Homotopy(Variant),
}

impl Default for PiFormula {
    fn default() -> Self {
        PiFormula::Homotopy(Variant::Tilde)
    }
}

pub fn pi_form<T: Coeff>(
    theta: &FormMatrix<T>,
    curvature: &FormMatrix<T>,
    formula: PiFormula,
) -> Form<T> {
    match formula {
        PiFormula::Binomial => {
            let (phi0, phi1) = phi_terms(theta, curvature);
            binomial_pi(&phi0, &phi1)
        }
        PiFormula::Homotopy(v) => homotopy_pi(theta, curvature, v),
    }
}

/// `Pi`, its ingredients and the Chern form at one point.
#[derive(Clone, Debug)]
pub struct TransgressionValue<T> {
    pub pi: Form<T>,
    pub phi0: Vec<Form<T>>,
    pub phi1: Vec<Form<T>>,
    pub chern: Form<T>,
}

/// Pointwise values of `Pi`, `Phi_k` and `c_{n+1}(Theta)` from a connection bundle.
pub fn transgression_form(
    bundle: &ConnectionBundle,
    formula: PiFormula,
) -> TransgressionValue<Complex64> {
    let theta = bundle.theta_values();
    let curvature = bundle.curvature_values();
    let (phi0, phi1) = phi_terms(&theta, &curvature);
    let pi = match formula {
        PiFormula::Binomial => binomial_pi(&phi0, &phi1),
        PiFormula::Homotopy(v) => homotopy_pi(&theta, &curvature, v),
    };
    TransgressionValue {
        pi,
        phi0,
        phi1,
        chern: chern_top(&curvature),
    }
}

/// Relative size of `d Pi - c_{n+1}(Theta)`; needs the bundle built from jets of order at least 5.
///
/// The maximum coefficient of the difference is divided by `max(1, |c|, |d Pi|)`.
pub fn d_pi_residual(bundle: &ConnectionBundle, formula: PiFormula) -> Result<f64> {
    let order = bundle.collar_factor.order().saturating_sub(1);
    if order < 1 {
        return Err(Error::OrderExceeded {
            requested: 1,
            available: order,
        });
    }
    let cut = |mat: &FormMatrix<Jet>| matrix_map(mat, |f| f.truncate(1));
    let theta = cut(&bundle.theta);
    let curvature = cut(&bundle.curvature);
    let pi = pi_form(&theta, &curvature, formula);
    let dpi = pi.d()?.value();
    let chern = chern_top(&curvature).value();
    let scale = 1.0f64.max(chern.max_abs()).max(dpi.max_abs());
    Ok(dpi.sub(&chern).max_abs() / scale)
}

/// A linear vector field `x -> L x` with a nondegenerate zero at the origin.
#[derive(Clone, Debug)]
pub enum IndexField {
    /// Real field on `R^{2m}`, coordinates ordered `(x1, y1, x2, y2, ...)`.
    Real(DMatrix<f64>),
    /// Holomorphic field `z -> L z` on `C^m`.
    Complex(DMatrix<Complex64>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexConnection {
    /// Flat Euclidean connection.
    Trivial,
    /// A non-flat metric connection: `d + A` with constant skew `A` in the real
    /// case, the Chern connection of the ball's Kähler metric in the complex case.
    Metric,
}

#[derive(Clone, Debug, Serialize)]
pub struct IndexEstimate {
    pub index: i64,
    /// Extrapolated value before rounding.
    pub value: f64,
    /// `(eps, normalized sphere integral)` pairs.
    pub estimates: Vec<(f64, f64)>,
}

/// Maximum allowed change in the extrapolated value when the coarsest radius is dropped.
pub const EXTRAPOLATION_JUMP: f64 = 0.1;

/// Constant skew-symmetric matrices `A_l`, one per real coordinate direction.
fn skew_generators(dim: usize) -> Vec<DMatrix<f64>> {
    (0..dim)
        .map(|l| {
            DMatrix::from_fn(dim, dim, |i, j| {
                let a = ((l + 2 * i + 3 * j) as f64).sin();
                let b = ((l + 2 * j + 3 * i) as f64).sin();
                0.5 * (a - b)
            })
        })
        .collect()
}

fn real_index_integrand(
    field: &DMatrix<f64>,
    generators: Option<&[DMatrix<f64>]>,
    node: &ChartNode,
) -> f64 {
    let x = DVector::from_vec(to_real(&node.point));
    let v = field * &x;
    let norm = v.norm();
    let e0 = &v / norm;
    let mut cols = vec![e0.clone()];
    for t in &node.tangents {
        let t = DVector::from_vec(to_real(t));
        let lt = field * &t;
        let mut col = (&lt - &e0 * e0.dot(&lt)) / norm;
        if let Some(gens) = generators {
            for (l, a) in gens.iter().enumerate() {
                col += a * &e0 * t[l];
            }
        }
        cols.push(col);
    }
    DMatrix::from_columns(&cols).determinant() * node.weight
}

/// Kähler metric `d dbar (-log(1 - |z|^2))` and its Chern connection at `z`.
fn ball_metric(z: &[Complex64]) -> Result<(Vec<Vec<Complex64>>, FormMatrix<Complex64>)> {
    let m = z.len();
    let nv = 2 * m;
    let mut rho = Jet::constant(nv, 3, Complex64::new(-1.0, 0.0));
    for (i, zi) in z.iter().enumerate() {
        let a = Jet::variable(nv, 3, i, *zi);
        let b = Jet::variable(nv, 3, m + i, zi.conj());
        rho = &rho + &a.mul_jet(&b);
    }
    let g = coordinate_metric(&rho, m)?;
    let omega = coordinate_chern_connection(&g)?;
    let values = g
        .iter()
        .map(|r| r.iter().map(Jet::value).collect())
        .collect();
    Ok((values, matrix_map(&omega, Form::value)))
}

fn hermitian(h: &[Vec<Complex64>], v: &[Complex64], w: &[Complex64]) -> Complex64 {
    let mut s = Complex64::new(0.0, 0.0);
    for i in 0..v.len() {
        for j in 0..w.len() {
            s += h[i][j] * v[i] * w[j].conj();
        }
    }
    s
}

fn complex_index_integrand(
    field: &DMatrix<Complex64>,
    connection: IndexConnection,
    node: &ChartNode,
) -> Result<f64> {
    let z = &node.point;
    let m = z.len();
    let n = m - 1;
    let nv = 2 * m;
    let (h, omega) = match connection {
        IndexConnection::Trivial => (
            (0..m)
                .map(|i| {
                    (0..m)
                        .map(|j| Complex64::new(if i == j { 1.0 } else { 0.0 }, 0.0))
                        .collect()
                })
                .collect::<Vec<Vec<Complex64>>>(),
            None,
        ),
        IndexConnection::Metric => {
            let (h, omega) = ball_metric(z)?;
            (h, Some(omega))
        }
    };
    let vars: Vec<Jet> = (0..m).map(|i| Jet::variable(nv, 1, i, z[i])).collect();
    let v: Vec<Jet> = (0..m)
        .map(|i| {
            (0..m).fold(Jet::zero(nv, 1), |acc, j| {
                &acc + &vars[j].scale(field[(i, j)])
            })
        })
        .collect();
    let mut norm_sq = Jet::zero(nv, 1);
    for i in 0..m {
        for j in 0..m {
            norm_sq = &norm_sq + &v[i].mul_jet(&v[j].conj()).scale(h[i][j]);
        }
    }
    let inv_norm = norm_sq.powf(-0.5, DEFAULT_SINGULAR_EPS)?;
    let e0: Vec<Jet> = v.iter().map(|x| x.mul_jet(&inv_norm)).collect();
    let e0_val: Vec<Complex64> = e0.iter().map(Jet::value).collect();
    let mut nabla: Vec<Form<Complex64>> = e0
        .iter()
        .map(|x| Form::differential(x, nv).map(|f| f.value()))
        .collect::<Result<_>>()?;
    if let Some(om) = &omega {
        for j in 0..m {
            for i in 0..m {
                nabla[j] = nabla[j].add(&om[i][j].scale(e0_val[i]));
            }
        }
    }
    // Unitary completion of e0 from the coordinate directions.
    let mut frame = vec![e0_val.clone()];
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| e0_val[a].norm().total_cmp(&e0_val[b].norm()));
    for &k in order.iter().take(n) {
        let mut w = vec![Complex64::new(0.0, 0.0); m];
        w[k] = Complex64::new(1.0, 0.0);
        for f in &frame {
            let c = hermitian(&h, &w, f);
            for i in 0..m {
                w[i] -= c * f[i];
            }
        }
        let len = hermitian(&h, &w, &w).re.sqrt();
        frame.push(w.iter().map(|x| x / len).collect());
    }
    let pair = |b: usize| -> Form<Complex64> {
        let mut s = Form::zero(nv);
        for j in 0..m {
            for k in 0..m {
                s = s.add(&nabla[j].scale(h[j][k] * frame[b][k].conj()));
            }
        }
        s
    };
    let mut form = pair(0);
    for b in 1..m {
        let down = pair(b);
        form = form.wedge(&down.conj().neg()).wedge(&down);
    }
    let scale = Complex64::i().powu(n as u32 - 1) / 2f64.powi(n as i32);
    let value = node.pair(&form.scale(scale));
    Ok(value.re)
}

/// Index of a linear field from connection-form integrals over shrinking spheres.
pub fn index_integral(
    field: &IndexField,
    connection: IndexConnection,
    eps_list: &[f64],
    resolution: usize,
) -> Result<IndexEstimate> {
    let dim = match field {
        IndexField::Real(l) => l.nrows(),
        IndexField::Complex(l) => 2 * l.nrows(),
    };
    if dim % 2 != 0 || !(4..=6).contains(&dim) {
        return Err(Error::InvalidParams(format!(
            "index integrals are implemented on R^4 and R^6, got dimension {dim}"
        )));
    }
    let grid = sphere_grid(dim / 2 - 1, resolution)?;
    let volume = sphere_volume(dim / 2 - 1);
    let generators = skew_generators(dim);
    let mut estimates = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let chart = small_sphere(&vec![Complex64::new(0.0, 0.0); dim / 2], eps, &grid);
        let values: Vec<Result<f64>> = par_map(chart.nodes.len(), |i| {
            let node = &chart.nodes[i];
            match field {
                IndexField::Real(l) => Ok(real_index_integrand(
                    l,
                    (connection == IndexConnection::Metric).then_some(&generators[..]),
                    node,
                )),
                IndexField::Complex(l) => complex_index_integrand(l, connection, node),
            }
            .map_err(|e| Error::Node {
                node: i,
                source: Box::new(e),
            })
        });
        let values: Vec<Complex64> = values
            .into_iter()
            .map(|r| r.map(|v| Complex64::new(v, 0.0)))
            .collect::<Result<_>>()?;
        estimates.push((eps, deterministic_sum(&values).re / volume));
    }
    estimates.sort_by(|a, b| b.0.total_cmp(&a.0));
    let value = extrapolate_to_zero(&estimates);
    if estimates.len() > 1 {
        let finer = extrapolate_to_zero(&estimates[1..]);
        if (value - finer).abs() > EXTRAPOLATION_JUMP {
            return Err(Error::ExtrapolationUnstable {
                first: finer,
                second: value,
            });
        }
    }
    Ok(IndexEstimate {
        index: value.round() as i64,
        value,
        estimates,
    })
}

/// Value at `eps = 0` of the interpolating polynomial through `(eps, value)` pairs.
pub fn extrapolate_to_zero(points: &[(f64, f64)]) -> f64 {
    let mut total = 0.0;
    for (i, &(xi, yi)) in points.iter().enumerate() {
        let mut basis = 1.0;
        for (j, &(xj, _)) in points.iter().enumerate() {
            if i != j {
                basis *= xj / (xj - xi);
            }
        }
        total += yi * basis;
    }
    total
}
