//! The ambient Kähler metric `g = d dbar log(-1/rho)`, its renormalized
//! connection and curvature in the Graham-Lee frame, and extraction of the
//! boundary pseudohermitian tensors.
//!
//! The connection is assembled from the `(0,1)` parts `B = dbar W . C` of the
//! frame derivatives, where `C` is the coframe matrix. Metric compatibility with
//! the block metric `diag((1 - r rho)/rho^2, 1/(-rho))` fixes the `(1,0)` parts;
//! after subtracting the universal singular part every entry is regular at
//! `rho = 0`:
//!
//! ```text
//! theta_0^0 = del log(1 - r rho) + B_0^0 - conj(B_0^0)
//! theta_0^b = r theta^b + B_0^b
//! theta_a^0 = B_a^0 + rho / (1 - r rho) conj(B_0^a)
//! theta_a^b = B_a^b - conj(B_b^a)
//! ```
//!
//! The coordinate Chern connection minus the singular part gives the same
//! forms in the interior; [`interior_checks`] compares the two.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::domains::DefiningFunction;
use crate::error::{Error, Result};
use crate::forms::{
    antiholomorphic_vector, holomorphic_vector, matrix_max_abs, matrix_wedge, Form, FormMatrix,
};
use crate::frames::{frame_at, AmbientPoint, FrameData};
use crate::jets::{jet_inverse, Jet, DEFAULT_SINGULAR_EPS};

/// Largest `|rho|` accepted as a boundary point.
pub const BOUNDARY_TOL: f64 = 1e-12;

fn matrix_sub(a: &FormMatrix<Jet>, b: &FormMatrix<Jet>) -> FormMatrix<Jet> {
    a.iter()
        .zip(b)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x.sub(y)).collect())
        .collect()
}

fn matrix_add(a: &FormMatrix<Jet>, b: &FormMatrix<Jet>) -> FormMatrix<Jet> {
    a.iter()
        .zip(b)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x.add(y)).collect())
        .collect()
}

/// `Theta = d theta - theta ^ theta`.
pub fn curvature_of(theta: &FormMatrix<Jet>) -> Result<FormMatrix<Jet>> {
    let sq = matrix_wedge(theta, theta);
    theta
        .iter()
        .zip(&sq)
        .map(|(row, sq_row)| {
            row.iter()
                .zip(sq_row)
                .map(|(t, s)| Ok(t.d()?.sub(s)))
                .collect::<Result<Vec<_>>>()
        })
        .collect()
}

/// The metric in coordinates and in the Graham-Lee frame.
#[derive(Clone, Debug)]
pub struct MetricData {
    /// `g_{i jbar}` in the coordinate frame.
    pub coordinate: Vec<Vec<Jet>>,
    /// `g(W_a, conj W_b)` computed from the coordinate metric.
    pub frame: Vec<Vec<Jet>>,
    /// The predicted diagonal `((1 - r rho)/rho^2, 1/(-rho), ...)`.
    pub block: Vec<Jet>,
}

impl MetricData {
    /// Largest coefficient of `frame - diag(block)`, relative to the largest block entry.
    pub fn block_residual(&self) -> f64 {
        let scale = self.block.iter().map(Jet::max_abs).fold(1.0, f64::max);
        let mut worst: f64 = 0.0;
        for (a, row) in self.frame.iter().enumerate() {
            for (b, g) in row.iter().enumerate() {
                let d = if a == b {
                    g - &self.block[a]
                } else {
                    g.clone()
                };
                worst = worst.max(d.max_abs());
            }
        }
        worst / scale
    }
}

/// `d dbar` of `-log(-rho)`; defined where `rho < 0`.
pub fn coordinate_metric(rho: &Jet, m: usize) -> Result<Vec<Vec<Jet>>> {
    if rho.value().re >= 0.0 {
        return Err(Error::NotInterior {
            rho: rho.value().re,
        });
    }
    let potential = -&(-rho).ln(DEFAULT_SINGULAR_EPS)?;
    (0..m)
        .map(|i| {
            let gi = potential.derivative(i)?;
            (0..m).map(|j| gi.derivative(m + j)).collect()
        })
        .collect()
}

/// The Kähler metric of `rho` in coordinates and in the frame of `frame`.
pub fn ambient_metric(point: &AmbientPoint, frame: &FrameData) -> Result<MetricData> {
    let m = point.m();
    let order = frame.order();
    let coordinate = coordinate_metric(point.rho(), m)?;
    let frame_metric = (0..m)
        .map(|a| {
            (0..m)
                .map(|b| {
                    let mut s = Jet::zero(2 * m, order);
                    for i in 0..m {
                        for j in 0..m {
                            let t = coordinate[i][j]
                                .mul_jet(&frame.vectors[a][i])
                                .mul_jet(&frame.vectors[b][j].conj());
                            s = &s + &t;
                        }
                    }
                    s
                })
                .collect()
        })
        .collect();
    let rho = point.rho().truncate(order);
    let q = (-&frame.r.mul_jet(&rho)).add_scalar(Complex64::new(1.0, 0.0));
    let inv_rho = rho.recip(DEFAULT_SINGULAR_EPS)?;
    let mut block = vec![q.mul_jet(&inv_rho).mul_jet(&inv_rho)];
    for _ in 1..m {
        block.push(-&inv_rho);
    }
    Ok(MetricData {
        coordinate,
        frame: frame_metric,
        block,
    })
}

/// Chern connection of a Kähler metric in coordinates, `omega = del g . g^{-1}`.
pub fn coordinate_chern_connection(g: &[Vec<Jet>]) -> Result<FormMatrix<Jet>> {
    let m = g.len();
    let nv = 2 * m;
    let ginv = jet_inverse(g)?;
    let del: Vec<Vec<Form<Jet>>> = g
        .iter()
        .map(|row| {
            row.iter()
                .map(|x| Form::del(x, nv))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    Ok((0..m)
        .map(|i| {
            (0..m)
                .map(|j| {
                    (0..m).fold(Form::zero(nv), |acc, k| {
                        acc.add(&del[i][k].mul_coeff(&ginv[k][j]))
                    })
                })
                .collect()
        })
        .collect())
}

/// Renormalized connection and curvature at a point of the collar or the boundary.
#[derive(Clone, Debug)]
pub struct ConnectionBundle {
    pub n: usize,
    /// `theta^a`, with `theta^0 = del rho`.
    pub coframe: Vec<Form<Jet>>,
    /// `B_a^b = dbar W_a^i C_i^b`.
    pub antiholomorphic: FormMatrix<Jet>,
    /// Renormalized connection `theta_a^b`.
    pub theta: FormMatrix<Jet>,
    /// Renormalized curvature `Theta_a^b`.
    pub curvature: FormMatrix<Jet>,
    /// `1 - r rho`.
    pub collar_factor: Jet,
}

impl ConnectionBundle {
    pub fn theta_values(&self) -> FormMatrix<Complex64> {
        self.theta
            .iter()
            .map(|row| row.iter().map(Form::value).collect())
            .collect()
    }

    pub fn curvature_values(&self) -> FormMatrix<Complex64> {
        self.curvature
            .iter()
            .map(|row| row.iter().map(Form::value).collect())
            .collect()
    }
}

/// Builds `theta_a^b` and `Theta_a^b` from the closed-form regular expressions.
pub fn renormalized_connection(
    point: &AmbientPoint,
    frame: &FrameData,
) -> Result<ConnectionBundle> {
    let m = point.m();
    let nv = 2 * m;
    if frame.order() < 2 {
        return Err(Error::OrderExceeded {
            requested: 2,
            available: frame.order(),
        });
    }
    let order = frame.order() - 1;
    let coframe: Vec<Form<Jet>> = (0..m)
        .map(|a| frame.coframe_form(a).truncate(order))
        .collect();
    let delbar_w: Vec<Vec<Form<Jet>>> = frame
        .vectors
        .iter()
        .map(|row| {
            row.iter()
                .map(|w| Form::delbar(w, nv))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let b: FormMatrix<Jet> = (0..m)
        .map(|a| {
            (0..m)
                .map(|c| {
                    (0..m).fold(Form::zero(nv), |acc, i| {
                        acc.add(&delbar_w[a][i].mul_coeff(&frame.coframe[c][i]))
                    })
                })
                .collect()
        })
        .collect();
    let rho = point.rho().truncate(order);
    let r = frame.r.truncate(order);
    let q = (-&r.mul_jet(&rho)).add_scalar(Complex64::new(1.0, 0.0));
    let q_full = (-&frame.r.mul_jet(&point.rho().truncate(frame.order())))
        .add_scalar(Complex64::new(1.0, 0.0));
    let q_inv = q.recip(DEFAULT_SINGULAR_EPS)?;
    let dlog_q = Form::del(&q_full, nv)?.mul_coeff(&q_inv);
    let ratio = rho.mul_jet(&q_inv);
    let mut theta: FormMatrix<Jet> = vec![vec![Form::zero(nv); m]; m];
    theta[0][0] = dlog_q.add(&b[0][0]).sub(&b[0][0].conj());
    for c in 1..m {
        theta[0][c] = coframe[c].mul_coeff(&r).add(&b[0][c]);
        theta[c][0] = b[c][0].add(&b[0][c].conj().mul_coeff(&ratio));
        for d in 1..m {
            theta[c][d] = b[c][d].sub(&b[d][c].conj());
        }
    }
    let curvature = curvature_of(&theta)?;
    Ok(ConnectionBundle {
        n: m - 1,
        coframe,
        antiholomorphic: b,
        theta,
        curvature,
        collar_factor: q,
    })
}

/// Point, frame and renormalized connection in one call.
pub fn geometry_at(
    f: &dyn DefiningFunction,
    z: &[Complex64],
    order: usize,
    gauge: Option<&DMatrix<Complex64>>,
) -> Result<(AmbientPoint, FrameData, ConnectionBundle)> {
    let point = AmbientPoint::new(f, z, order)?;
    let frame = frame_at(&point, gauge)?;
    let bundle = renormalized_connection(&point, &frame)?;
    Ok((point, frame, bundle))
}

/// Pairs a one-form value with a `(0,1)` vector given by its conjugated `(1,0)` components.
fn pair_antiholomorphic(form: &Form<Complex64>, w: &[Complex64]) -> Complex64 {
    form.eval(&[antiholomorphic_vector(w)])
}

/// Jet-valued interior torsion `A_{bc} = -i conj(theta_0^b(conj W_c))` and `r_b = W_b r`.
fn interior_torsion(
    frame: &FrameData,
    bundle: &ConnectionBundle,
) -> Result<(Vec<Vec<Jet>>, Vec<Jet>)> {
    let m = frame.m();
    let order = bundle.collar_factor.order();
    let torsion = (1..m)
        .map(|b| {
            (1..m)
                .map(|c| {
                    let mut s = Jet::zero(2 * m, order);
                    for j in 0..m {
                        if let Some(coef) = bundle.theta[0][b].coefficient(1u8 << (m + j)) {
                            s = &s + &coef.mul_jet(&frame.vectors[c][j].conj());
                        }
                    }
                    s.conj().scale(Complex64::new(0.0, -1.0))
                })
                .collect()
        })
        .collect();
    let dr: Vec<Jet> = (0..m)
        .map(|i| frame.r.derivative(i))
        .collect::<Result<_>>()?;
    let r_frame = (1..m)
        .map(|b| {
            (0..m).fold(Jet::zero(2 * m, order), |acc, i| {
                &acc + &dr[i].mul_jet(&frame.vectors[b][i])
            })
        })
        .collect();
    Ok((torsion, r_frame))
}

/// Residuals of the interior consistency identities.
#[derive(Clone, Debug, Serialize)]
pub struct InteriorChecks {
    /// `theta` against the coordinate Chern connection minus the singular part.
    pub connection_routes: f64,
    /// `Psi + K` against `Theta - u ^ theta`.
    pub curvature_routes: f64,
    /// `sum_i u_i ^ theta^i`.
    pub u_contraction: f64,
    /// `tr Theta - tr W`.
    pub trace: f64,
    /// Closed-form displays for `theta_0^0`, `theta_0^a`, `theta_a^0`.
    pub displays: f64,
    pub metric_block: f64,
}

/// Cross-checks the regular connection against the coordinate route at an interior point.
pub fn interior_checks(
    point: &AmbientPoint,
    frame: &FrameData,
    bundle: &ConnectionBundle,
) -> Result<InteriorChecks> {
    let m = point.m();
    let nv = 2 * m;
    let order = bundle.collar_factor.order();
    let metric = ambient_metric(point, frame)?;
    let omega = coordinate_chern_connection(&metric.coordinate)?;
    let dw: Vec<Vec<Form<Jet>>> = frame
        .vectors
        .iter()
        .map(|row| {
            row.iter()
                .map(|w| Form::differential(w, nv))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let rho = point.rho().truncate(order);
    let inv_rho = rho.recip(DEFAULT_SINGULAR_EPS)?;
    let coframe = &bundle.coframe;

    // psi_a^b = (dW_a^j + W_a^i omega_i^j) C_j^b
    let transform =
        |a: usize, b: usize, mat: &FormMatrix<Jet>, extra: Option<&Vec<Vec<Form<Jet>>>>| {
            let mut s = Form::zero(nv);
            for j in 0..m {
                let mut inner = extra.map_or(Form::zero(nv), |e| e[a][j].clone());
                for i in 0..m {
                    inner = inner.add(&mat[i][j].mul_coeff(&frame.vectors[a][i]));
                }
                s = s.add(&inner.mul_coeff(&frame.coframe[b][j]));
            }
            s
        };
    let mut route = 0.0f64;
    for a in 0..m {
        for b in 0..m {
            let psi = transform(a, b, &omega, Some(&dw));
            let mut y = Form::zero(nv);
            if a == b {
                y = y.add(&coframe[0]);
            }
            if a == 0 {
                y = y.add(&coframe[b]);
            }
            let y = y.mul_coeff(&inv_rho).neg();
            let diff = psi.sub(&y).sub(&bundle.theta[a][b]);
            route = route.max(diff.max_abs());
        }
    }

    let chern_curv = curvature_of(&omega)?;
    let corder = order - 1;
    let mut curvature_frame: FormMatrix<Jet> = vec![vec![Form::zero(nv); m]; m];
    for a in 0..m {
        for b in 0..m {
            curvature_frame[a][b] = transform(a, b, &chern_curv, None).truncate(corder);
        }
    }
    let bars: Vec<Form<Jet>> = coframe.iter().map(Form::conj).collect();
    let mut k_form: FormMatrix<Jet> = vec![vec![Form::zero(nv); m]; m];
    let mut hermitian = Form::zero(nv);
    for k in 0..m {
        for l in 0..m {
            hermitian = hermitian.add(&coframe[k].wedge(&bars[l]).mul_coeff(&metric.frame[k][l]));
        }
    }
    for a in 0..m {
        for b in 0..m {
            let mut s = if a == b {
                hermitian.clone()
            } else {
                Form::zero(nv)
            };
            for l in 0..m {
                s = s.add(&coframe[b].wedge(&bars[l]).mul_coeff(&metric.frame[a][l]));
            }
            k_form[a][b] = s.truncate(corder);
        }
    }
    let w_def = matrix_add(&curvature_frame, &k_form);

    let (torsion, r_frame) = interior_torsion(frame, bundle)?;
    let q_inv = bundle.collar_factor.recip(DEFAULT_SINGULAR_EPS)?;
    let r = frame.r.truncate(order);
    let del_r = Form::del(&frame.r, nv)?;
    let mut u = vec![coframe[0]
        .mul_coeff(&r.mul_jet(&r))
        .add(&del_r)
        .mul_coeff(&q_inv)];
    for b in 1..m {
        let mut s = coframe[0].mul_coeff(&r_frame[b - 1]);
        for c in 1..m {
            s = s.add(
                &coframe[c]
                    .mul_coeff(&torsion[b - 1][c - 1])
                    .scale(Complex64::new(0.0, -1.0)),
            );
        }
        u.push(s.mul_coeff(&q_inv));
    }
    let u_theta: FormMatrix<Jet> = (0..m)
        .map(|a| (0..m).map(|b| u[a].wedge(&coframe[b])).collect())
        .collect();
    let w_th = matrix_sub(&bundle.curvature, &u_theta);
    let curvature_routes = matrix_max_abs(&matrix_sub(&w_def, &w_th));
    let contraction = (0..m)
        .fold(Form::zero(nv), |acc, a| acc.add(&u_theta[a][a]))
        .max_abs();
    let trace = (0..m)
        .fold(Form::zero(nv), |acc, a| {
            acc.add(&bundle.curvature[a][a]).sub(&w_def[a][a])
        })
        .max_abs();

    let delbar_rho = Form::delbar(point.rho(), nv)?.truncate(order);
    let ratio = rho.mul_jet(&q_inv);
    let mut displays = 0.0f64;
    let expected00 = delbar_rho
        .mul_coeff(&r)
        .add(
            &coframe[0]
                .mul_coeff(&r.mul_jet(&r))
                .add(&del_r)
                .mul_coeff(&ratio),
        )
        .neg();
    displays = displays.max(bundle.theta[0][0].sub(&expected00).max_abs());
    for a in 1..m {
        let mut e0a = coframe[a]
            .mul_coeff(&r)
            .sub(&delbar_rho.mul_coeff(&r_frame[a - 1].conj()));
        let mut ea0 = bars[a]
            .neg()
            .sub(&coframe[0].mul_coeff(&ratio.mul_jet(&r_frame[a - 1])));
        for c in 1..m {
            e0a = e0a.sub(
                &bars[c]
                    .mul_coeff(&torsion[a - 1][c - 1].conj())
                    .scale(Complex64::new(0.0, 1.0)),
            );
            ea0 = ea0.add(
                &coframe[c]
                    .mul_coeff(&ratio.mul_jet(&torsion[a - 1][c - 1]))
                    .scale(Complex64::new(0.0, 1.0)),
            );
        }
        displays = displays.max(bundle.theta[0][a].sub(&e0a).max_abs());
        displays = displays.max(bundle.theta[a][0].sub(&ea0).max_abs());
    }
    Ok(InteriorChecks {
        connection_routes: route,
        curvature_routes,
        u_contraction: contraction,
        trace,
        displays,
        metric_block: metric.block_residual(),
    })
}

/// Tanaka-Webster data of the boundary at a point, in an `h`-orthonormal frame.
#[derive(Clone, Debug, Serialize)]
pub struct PseudoHermitianData {
    pub n: usize,
    /// `A_{alpha beta}`.
    pub torsion: Vec<Vec<Complex64>>,
    /// `R_{alpha betabar gamma deltabar}`, flattened in index order.
    pub curvature: Vec<Complex64>,
    pub ricci: Vec<Vec<Complex64>>,
    pub scal: f64,
    /// Transverse curvature on the boundary.
    pub r: f64,
    /// `N r`.
    pub r_normal: f64,
}

impl PseudoHermitianData {
    pub fn from_tensors(
        n: usize,
        torsion: Vec<Vec<Complex64>>,
        curvature: Vec<Complex64>,
        r: f64,
        r_normal: f64,
    ) -> Self {
        let mut ricci = vec![vec![Complex64::new(0.0, 0.0); n]; n];
        for g in 0..n {
            for d in 0..n {
                for a in 0..n {
                    ricci[g][d] += curvature[((a * n + a) * n + g) * n + d];
                }
            }
        }
        let scal = (0..n).map(|g| ricci[g][g].re).sum();
        Self {
            n,
            torsion,
            curvature,
            ricci,
            scal,
            r,
            r_normal,
        }
    }

    pub fn component(&self, a: usize, b: usize, c: usize, d: usize) -> Complex64 {
        let n = self.n;
        self.curvature[((a * n + b) * n + c) * n + d]
    }

    pub fn torsion_norm_sq(&self) -> f64 {
        self.torsion.iter().flatten().map(|a| a.norm_sqr()).sum()
    }

    pub fn curvature_norm_sq(&self) -> f64 {
        self.curvature.iter().map(|r| r.norm_sqr()).sum()
    }

    pub fn torsion_symmetry_residual(&self) -> f64 {
        let n = self.n;
        let mut worst: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                worst = worst.max((self.torsion[a][b] - self.torsion[b][a]).norm());
            }
        }
        worst
    }

    /// Largest violation of the three index symmetries of the curvature tensor.
    pub fn curvature_symmetry_residual(&self) -> f64 {
        let n = self.n;
        let mut worst: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let x = self.component(a, b, c, d);
                        worst = worst
                            .max((x - self.component(c, b, a, d)).norm())
                            .max((x - self.component(a, d, c, b)).norm())
                            .max((x - self.component(b, a, d, c).conj()).norm());
                    }
                }
            }
        }
        worst
    }
}

/// Reads `A`, `R`, `Ric` and `scal` off the renormalized connection at a boundary point.
pub fn extract_pseudohermitian(
    point: &AmbientPoint,
    frame: &FrameData,
    bundle: &ConnectionBundle,
) -> Result<PseudoHermitianData> {
    let rho0 = point.rho().value().re;
    if rho0.abs() > BOUNDARY_TOL {
        return Err(Error::NotOnBoundary { rho: rho0 });
    }
    let m = point.m();
    let n = m - 1;
    let nv = 2 * m;
    let w: Vec<Vec<Complex64>> = (0..m).map(|a| frame.vector_value(a)).collect();
    let theta_values = bundle.theta_values();
    let torsion: Vec<Vec<Complex64>> = (1..m)
        .map(|a| {
            (1..m)
                .map(|c| -Complex64::i() * pair_antiholomorphic(&theta_values[0][a], &w[c]).conj())
                .collect()
        })
        .collect();
    let order = bundle.collar_factor.order();
    let contact = frame.contact.truncate(order);
    let r = frame.r.truncate(order);
    let phi: FormMatrix<Jet> = (1..m)
        .map(|a| {
            (1..m)
                .map(|b| {
                    let t = bundle.theta[a][b].clone();
                    if a == b {
                        t.sub(&contact.mul_coeff(&r).scale(Complex64::i()))
                    } else {
                        t
                    }
                })
                .collect()
        })
        .collect();
    let omega = curvature_of(&phi)?;
    let mut curvature = Vec::with_capacity(n * n * n * n);
    for a in 0..n {
        for b in 0..n {
            let om = omega[a][b].value();
            for c in 0..n {
                for d in 0..n {
                    curvature.push(om.eval(&[
                        holomorphic_vector(&w[c + 1]),
                        antiholomorphic_vector(&w[d + 1]),
                    ]));
                }
            }
        }
    }
    let dr = Form::del(&frame.r, nv)?.value();
    let r_normal = dr.eval(&[holomorphic_vector(&w[0])]).re;
    Ok(PseudoHermitianData::from_tensors(
        n,
        torsion,
        curvature,
        frame.r.value().re,
        r_normal,
    ))
}

/// Residuals of the boundary Einstein relations.
#[derive(Clone, Debug, Serialize)]
pub struct EinsteinReport {
    /// `max |Ric - (n+1) r h|`.
    pub ricci: f64,
    /// `|r - scal / (n(n+1))|`.
    pub transverse: f64,
    /// `|r_N - (-r^2 - |A|^2 / n)|`, the normal-derivative relation when `Delta_b r = 0`.
    pub normal: f64,
}

/// Checks the boundary Einstein relations; `stage` is `None` for exact solutions.
pub fn check_einstein_relations(
    data: &PseudoHermitianData,
    stage: Option<usize>,
) -> Result<EinsteinReport> {
    if let Some(s) = stage {
        if s < 2 {
            return Err(Error::StageTooLow {
                stage: s,
                required: 2,
            });
        }
    }
    let n = data.n;
    let nf = n as f64;
    let mut ricci: f64 = 0.0;
    for a in 0..n {
        for b in 0..n {
            let target = if a == b { (nf + 1.0) * data.r } else { 0.0 };
            ricci = ricci.max((data.ricci[a][b] - target).norm());
        }
    }
    let transverse = (data.r - data.scal / (nf * (nf + 1.0))).abs();
    let normal = (data.r_normal + data.r * data.r + data.torsion_norm_sq() / nf).abs();
    Ok(EinsteinReport {
        ricci,
        transverse,
        normal,
    })
}

/// Pseudohermitian data at a boundary point of `f`.
pub fn boundary_data(
    f: &dyn DefiningFunction,
    z: &[Complex64],
    gauge: Option<&DMatrix<Complex64>>,
) -> Result<PseudoHermitianData> {
    let (point, frame, bundle) = geometry_at(f, z, 4, gauge)?;
    extract_pseudohermitian(&point, &frame, &bundle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::{make_builtin, DomainKind, DomainParams};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn ball_metric_at_center_is_identity() {
        let f = make_builtin(DomainKind::Ball, 1, DomainParams::default())
            .unwrap()
            .evaluator()
            .unwrap();
        let rho = f.jet(&[c(0.0, 0.0), c(0.0, 0.0)], 3).unwrap();
        let g = coordinate_metric(&rho, 2).unwrap();
        assert!((g[0][0].value() - 1.0).norm() < 1e-15);
        assert!(g[0][1].value().norm() < 1e-15);
    }

    #[test]
    fn interior_routes_agree_on_ellipsoid() {
        let f = make_builtin(
            DomainKind::RealEllipsoid,
            1,
            DomainParams {
                t: Some(0.2),
                ..Default::default()
            },
        )
        .unwrap()
        .evaluator()
        .unwrap();
        let (point, frame, bundle) =
            geometry_at(f.as_ref(), &[c(0.4, 0.1), c(-0.2, 0.5)], 5, None).unwrap();
        let checks = interior_checks(&point, &frame, &bundle).unwrap();
        assert!(checks.connection_routes < 1e-9, "{checks:?}");
        assert!(checks.curvature_routes < 1e-9, "{checks:?}");
        assert!(checks.u_contraction < 1e-11, "{checks:?}");
        assert!(checks.trace < 1e-9, "{checks:?}");
        assert!(checks.displays < 1e-9, "{checks:?}");
        assert!(checks.metric_block < 1e-9, "{checks:?}");
    }

    #[test]
    fn sphere_tensors() {
        for n in [1usize, 2] {
            let f = make_builtin(DomainKind::Ball, n, DomainParams::default())
                .unwrap()
                .evaluator()
                .unwrap();
            let mut z = vec![c(0.0, 0.0); n + 1];
            z[0] = c(0.6, 0.0);
            z[n] = c(0.0, 0.8);
            let data = boundary_data(f.as_ref(), &z, None).unwrap();
            let nf = n as f64;
            assert!((data.scal - nf * (nf + 1.0)).abs() < 1e-10, "{data:?}");
            assert!(data.torsion_norm_sq() < 1e-20);
            assert!((data.curvature_norm_sq() - 2.0 * nf * (nf + 1.0)).abs() < 1e-9);
            assert!((data.r - 1.0).abs() < 1e-12);
            assert!((data.r_normal + 1.0).abs() < 1e-10);
        }
    }
}
