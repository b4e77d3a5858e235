//! Tensor quadrature on `S^{2n+1}`, star-shaped boundary charts, and
//! deterministic parallel integration of `(2n+1)`-forms.
//!
//! The sphere is parametrized in Hopf style, `z_j = sqrt(s_j) e^{i phi_j}` with
//! `(s_j)` on the standard simplex. Phases use the trapezoidal rule, the
//! simplex coordinates Gauss-Legendre (with a Duffy map for `n = 2`). Forms are
//! paired with the parameter tangent vectors and weighted by parameter weights
//! only, so no metric enters the pairing.

use std::f64::consts::{PI, TAU};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::domains::{boundary_along_ray, gradient, DefiningFunction};
use crate::error::{Error, Result};
use crate::forms::{real_vector, Form};

/// Newton tolerance on `rho` for boundary nodes.
pub const NEWTON_TOL: f64 = 1e-13;
pub const NEWTON_MAX_ITER: usize = 50;

/// Values per block of the two-level compensated sum.
const CHUNK: usize = 256;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(k: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; k];
    let mut weights = vec![0.0; k];
    for i in 0..k.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (k as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=k {
                let jf = j as f64;
                let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
                p0 = p1;
                p1 = p2;
            }
            dp = k as f64 * (x * p1 - p0) / (x * x - 1.0);
            let step = p1 / dp;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[k - 1 - i] = x;
        weights[i] = w;
        weights[k - 1 - i] = w;
    }
    (nodes, weights)
}

/// Gauss-Legendre rule mapped to `[0, 1]`.
pub fn gauss_legendre_unit(k: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(k);
    (
        x.iter().map(|t| 0.5 * (t + 1.0)).collect(),
        w.iter().map(|t| 0.5 * t).collect(),
    )
}

/// Two-level Kahan sum over fixed blocks; the result depends only on the order of `values`.
pub fn deterministic_sum(values: &[Complex64]) -> Complex64 {
    fn kahan(it: impl Iterator<Item = Complex64>) -> Complex64 {
        let mut sum = Complex64::new(0.0, 0.0);
        let mut comp = Complex64::new(0.0, 0.0);
        for v in it {
            let y = v - comp;
            let t = sum + y;
            comp = (t - sum) - y;
            sum = t;
        }
        sum
    }
    kahan(values.chunks(CHUNK).map(|c| kahan(c.iter().copied())))
}

/// Order-preserving map over `0..count`, parallel when the `parallel` feature is on.
pub fn par_map<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..count).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..count).map(f).collect()
    }
}

/// Runs `f` on a pool of `workers` threads (sequentially without the `parallel` feature).
pub fn with_workers<R, F>(workers: usize, f: F) -> Result<R>
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    if workers == 0 {
        return Err(Error::InvalidParams(
            "worker count must be at least 1".into(),
        ));
    }
    #[cfg(feature = "parallel")]
    {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::InvalidParams(format!("thread pool: {e}")))?;
        Ok(pool.install(f))
    }
    #[cfg(not(feature = "parallel"))]
    {
        Ok(f())
    }
}

/// Components of `v` in `R^{2m}` ordered `(x1, y1, x2, y2, ...)`.
pub fn to_real(v: &[Complex64]) -> Vec<f64> {
    v.iter().flat_map(|c| [c.re, c.im]).collect()
}

/// `det[first, rest...]` as real vectors in `R^{2m}`.
pub fn real_determinant(first: &[f64], rest: &[Vec<Complex64>]) -> f64 {
    let dim = first.len();
    let mut cols = vec![first.to_vec()];
    cols.extend(rest.iter().map(|t| to_real(t)));
    DMatrix::from_fn(dim, dim, |i, j| cols[j][i]).determinant()
}

#[derive(Clone, Debug)]
pub struct GridNode {
    pub params: Vec<f64>,
    /// Point on the unit sphere.
    pub point: Vec<Complex64>,
    /// `d point / d param_k`.
    pub tangents: Vec<Vec<Complex64>>,
    /// Product-rule weight in the grid parameters.
    pub weight: f64,
}

#[derive(Clone, Debug)]
pub struct SphereGrid {
    pub n: usize,
    pub resolution: usize,
    pub nodes: Vec<GridNode>,
    /// Sign of `det[outward normal, tangents]`, constant over the grid.
    pub orientation: f64,
}

/// Trapezoidal nodes per phase angle.
pub fn phase_count(resolution: usize) -> usize {
    resolution / 2
}

/// Gauss-Legendre nodes per simplex coordinate.
pub fn latitude_count(resolution: usize) -> usize {
    (resolution / 4).max(4)
}

fn hopf_node(s: &[f64], phases: &[f64], ds: &[Vec<f64>], weight: f64) -> GridNode {
    let m = s.len();
    let point: Vec<Complex64> = (0..m)
        .map(|j| Complex64::from_polar(s[j].sqrt(), phases[j]))
        .collect();
    let mut tangents = Vec::with_capacity(2 * m - 1);
    for d in ds {
        tangents.push((0..m).map(|j| point[j] * (0.5 * d[j] / s[j])).collect());
    }
    for k in 0..m {
        let mut t = vec![Complex64::new(0.0, 0.0); m];
        t[k] = point[k] * Complex64::i();
        tangents.push(t);
    }
    let mut params = Vec::new();
    params.extend_from_slice(s);
    params.extend_from_slice(phases);
    GridNode {
        params,
        point,
        tangents,
        weight,
    }
}

/// Tensor grid on the unit sphere `S^{2n+1}`, `n` in `{1, 2}`.
pub fn sphere_grid(n: usize, resolution: usize) -> Result<SphereGrid> {
    if !(1..=2).contains(&n) {
        return Err(Error::InvalidParams(format!(
            "sphere grids exist for n = 1, 2, got {n}"
        )));
    }
    if resolution < 8 {
        return Err(Error::InvalidParams(format!(
            "resolution must be at least 8, got {resolution}"
        )));
    }
    let np = phase_count(resolution);
    let nl = latitude_count(resolution);
    let (lx, lw) = gauss_legendre_unit(nl);
    let phase_w = TAU / np as f64;
    let m = n + 1;
    let mut simplex: Vec<(Vec<f64>, Vec<Vec<f64>>, f64)> = Vec::new();
    if n == 1 {
        for (u, w) in lx.iter().zip(&lw) {
            simplex.push((vec![*u, 1.0 - u], vec![vec![1.0, -1.0]], *w));
        }
    } else {
        for (u, wu) in lx.iter().zip(&lw) {
            for (v, wv) in lx.iter().zip(&lw) {
                let s = vec![*u, (1.0 - u) * v, (1.0 - u) * (1.0 - v)];
                let ds = vec![vec![1.0, -v, -(1.0 - v)], vec![0.0, 1.0 - u, -(1.0 - u)]];
                simplex.push((s, ds, wu * wv));
            }
        }
    }
    let mut nodes = Vec::with_capacity(simplex.len() * np.pow(m as u32));
    for (s, ds, w) in &simplex {
        for flat in 0..np.pow(m as u32) {
            let mut rest = flat;
            let phases: Vec<f64> = (0..m)
                .map(|_| {
                    let k = rest % np;
                    rest /= np;
                    (k as f64 + 0.5) * phase_w
                })
                .collect();
            nodes.push(hopf_node(s, &phases, ds, w * phase_w.powi(m as i32)));
        }
    }
    let orientation = orientation_sign(&nodes, |node| to_real(&node.point))?;
    Ok(SphereGrid {
        n,
        resolution,
        nodes,
        orientation,
    })
}

fn orientation_sign(nodes: &[GridNode], normal: impl Fn(&GridNode) -> Vec<f64>) -> Result<f64> {
    let mut sign = 0.0;
    for node in nodes {
        let s = real_determinant(&normal(node), &node.tangents).signum();
        if sign == 0.0 {
            sign = s;
        } else if s != sign {
            return Err(Error::InvalidParams(
                "chart orientation changes between nodes".into(),
            ));
        }
    }
    Ok(sign)
}

impl SphereGrid {
    /// `int_{S^{2n+1}} f dvol`.
    pub fn integrate_function(
        &self,
        f: impl Fn(&[Complex64]) -> Complex64 + Sync + Send,
    ) -> Complex64 {
        let vals = par_map(self.nodes.len(), |i| {
            let node = &self.nodes[i];
            let jac = real_determinant(&to_real(&node.point), &node.tangents).abs();
            f(&node.point) * (node.weight * jac)
        });
        deterministic_sum(&vals)
    }
}

/// A boundary node: a point of `M` with its oriented tangent frame.
#[derive(Clone, Debug, Serialize)]
pub struct ChartNode {
    pub point: Vec<Complex64>,
    pub radius: f64,
    pub tangents: Vec<Vec<Complex64>>,
    /// Parameter weight times the orientation sign.
    pub weight: f64,
}

impl ChartNode {
    /// `weight * form(tangents)`.
    pub fn pair(&self, form: &Form<Complex64>) -> Complex64 {
        let vectors: Vec<Vec<Complex64>> = self.tangents.iter().map(|t| real_vector(t)).collect();
        form.eval(&vectors) * self.weight
    }
}

#[derive(Clone, Debug)]
pub struct QuadratureChart {
    pub n: usize,
    pub center: Vec<Complex64>,
    pub nodes: Vec<ChartNode>,
}

/// Boundary chart `p = center + R(w) w` over a sphere grid.
pub fn boundary_chart(
    f: &dyn DefiningFunction,
    center: &[Complex64],
    grid: &SphereGrid,
) -> Result<QuadratureChart> {
    let m = grid.n + 1;
    if center.len() != m {
        return Err(Error::WrongDimension {
            expected: m,
            got: center.len(),
        });
    }
    let solver = f.root_proxy().unwrap_or(f);
    let nodes = par_map(grid.nodes.len(), |i| -> Result<(ChartNode, f64)> {
        let node = &grid.nodes[i];
        let (point, radius) =
            boundary_along_ray(solver, center, &node.point, NEWTON_TOL, NEWTON_MAX_ITER)
                .ok_or(Error::NewtonDiverged { node: i })?;
        let jet = f.jet(&point, 1).map_err(|e| Error::Node {
            node: i,
            source: Box::new(e),
        })?;
        let grad = gradient(&jet, m)?;
        let radial: f64 = grad.iter().zip(&node.point).map(|(g, w)| (g * w).re).sum();
        let tangents: Vec<Vec<Complex64>> = node
            .tangents
            .iter()
            .map(|dw| {
                let along: f64 = grad.iter().zip(dw).map(|(g, d)| (g * d).re).sum();
                let dr = -radius * along / radial;
                dw.iter()
                    .zip(&node.point)
                    .map(|(d, w)| d * radius + w * dr)
                    .collect()
            })
            .collect();
        let normal: Vec<f64> = grad
            .iter()
            .flat_map(|g| [2.0 * g.re, -2.0 * g.im])
            .collect();
        let sign = real_determinant(&normal, &tangents).signum();
        Ok((
            ChartNode {
                point,
                radius,
                tangents,
                weight: node.weight * sign,
            },
            sign,
        ))
    });
    let mut out = Vec::with_capacity(nodes.len());
    let mut sign = 0.0;
    for r in nodes {
        let (node, s) = r?;
        if sign == 0.0 {
            sign = s;
        } else if s != sign {
            return Err(Error::InvalidParams(
                "chart orientation changes between nodes".into(),
            ));
        }
        out.push(node);
    }
    Ok(QuadratureChart {
        n: grid.n,
        center: center.to_vec(),
        nodes: out,
    })
}

/// Euclidean sphere `|z - center| = eps`, oriented as the boundary of the ball it encloses.
pub fn small_sphere(center: &[Complex64], eps: f64, grid: &SphereGrid) -> QuadratureChart {
    let nodes = grid
        .nodes
        .iter()
        .map(|node| ChartNode {
            point: center
                .iter()
                .zip(&node.point)
                .map(|(c, w)| c + w * eps)
                .collect(),
            radius: eps,
            tangents: node
                .tangents
                .iter()
                .map(|t| t.iter().map(|x| x * eps).collect())
                .collect(),
            weight: node.weight * grid.orientation,
        })
        .collect();
    QuadratureChart {
        n: grid.n,
        center: center.to_vec(),
        nodes,
    }
}

/// Per-node values `weight * form(tangents)` in node order.
pub fn node_values<F>(chart: &QuadratureChart, form_at: F) -> Result<Vec<Complex64>>
where
    F: Fn(&ChartNode) -> Result<Form<Complex64>> + Sync + Send,
{
    par_map(chart.nodes.len(), |i| {
        let node = &chart.nodes[i];
        form_at(node)
            .map(|f| node.pair(&f))
            .map_err(|e| Error::Node {
                node: i,
                source: Box::new(e),
            })
    })
    .into_iter()
    .collect()
}

/// `int_M form`, summed in a fixed order independent of the worker count.
pub fn integrate_form<F>(chart: &QuadratureChart, form_at: F) -> Result<Complex64>
where
    F: Fn(&ChartNode) -> Result<Form<Complex64>> + Sync + Send,
{
    Ok(deterministic_sum(&node_values(chart, form_at)?))
}

/// `int_{|z - center| = eps} form` over `grid`.
pub fn residue_sphere<F>(
    center: &[Complex64],
    eps: f64,
    grid: &SphereGrid,
    form_at: F,
) -> Result<Complex64>
where
    F: Fn(&ChartNode) -> Result<Form<Complex64>> + Sync + Send,
{
    integrate_form(&small_sphere(center, eps, grid), form_at)
}

/// `vol(S^{2n+1}) = 2 pi^{n+1} / n!`.
pub fn sphere_volume(n: usize) -> f64 {
    let fact: f64 = (1..=n).map(|k| k as f64).product();
    2.0 * PI.powi(n as i32 + 1) / fact
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_rule_is_exact_for_polynomials() {
        let (x, w) = gauss_legendre(5);
        for p in 0..10 {
            let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p)).sum();
            let exact = if p % 2 == 1 {
                0.0
            } else {
                2.0 / (p as f64 + 1.0)
            };
            assert!((s - exact).abs() < 1e-14, "degree {p}: {s}");
        }
        let (x, w) = gauss_legendre(1);
        assert_eq!((x[0], w[0]), (0.0, 2.0));
    }

    #[test]
    fn sphere_volumes() {
        for n in [1, 2] {
            let grid = sphere_grid(n, 16).unwrap();
            let v = grid.integrate_function(|_| Complex64::new(1.0, 0.0));
            assert!((v.re - sphere_volume(n)).abs() < 1e-12, "{v}");
        }
    }

    #[test]
    fn kahan_sum_is_order_fixed() {
        let vals: Vec<Complex64> = (0..1000)
            .map(|k| Complex64::new(1.0 / (k as f64 + 1.0), 0.0))
            .collect();
        assert_eq!(deterministic_sum(&vals), deterministic_sum(&vals.clone()));
    }
}
