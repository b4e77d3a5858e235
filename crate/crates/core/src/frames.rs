//! Graham-Lee data at a point: the field `xi`, the transverse curvature `r`,
//! an adapted `(1,0)`-frame `{xi, W_alpha}` with its dual coframe, and the
//! contact form.
//!
//! Everything is jet-valued, so derivatives of the frame are available to the
//! connection and curvature code downstream.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::domains::DefiningFunction;
use crate::error::{Error, Result};
use crate::forms::Form;
use crate::jets::{jet_inverse, jet_linear_solve, Jet, DEFAULT_SINGULAR_EPS};

/// Smallest admissible Gram-Schmidt pivot (squared Levi norm).
pub const PIVOT_EPS: f64 = 1e-12;

/// `(rho_i, rho_ibar, rho_{i jbar})` as jets.
pub type FirstAndMixed = (Vec<Jet>, Vec<Jet>, Vec<Vec<Jet>>);

/// A point of `C^{n+1}` together with the jet of the defining function there.
#[derive(Clone, Debug)]
pub struct AmbientPoint {
    z: Vec<Complex64>,
    rho: Jet,
}

impl AmbientPoint {
    pub fn new(f: &dyn DefiningFunction, z: &[Complex64], order: usize) -> Result<Self> {
        Ok(Self {
            z: z.to_vec(),
            rho: f.jet(z, order)?,
        })
    }

    pub fn from_jet(z: Vec<Complex64>, rho: Jet) -> Self {
        Self { z, rho }
    }

    pub fn z(&self) -> &[Complex64] {
        &self.z
    }

    pub fn rho(&self) -> &Jet {
        &self.rho
    }

    pub fn m(&self) -> usize {
        self.z.len()
    }

    pub fn n(&self) -> usize {
        self.z.len() - 1
    }

    pub fn order(&self) -> usize {
        self.rho.order()
    }

    /// `rho_i`, `rho_ibar` and `rho_{i jbar}`.
    pub fn derivatives(&self) -> Result<FirstAndMixed> {
        let m = self.m();
        let holo: Vec<Jet> = (0..m)
            .map(|i| self.rho.derivative(i))
            .collect::<Result<_>>()?;
        let anti: Vec<Jet> = (0..m)
            .map(|i| self.rho.derivative(m + i))
            .collect::<Result<_>>()?;
        let hess = holo
            .iter()
            .map(|ri| {
                (0..m)
                    .map(|j| ri.derivative(m + j))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        Ok((holo, anti, hess))
    }
}

/// The Graham-Lee frame package at a point.
#[derive(Clone, Debug)]
pub struct FrameData {
    /// Components `xi^i`.
    pub xi: Vec<Jet>,
    pub r: Jet,
    /// Row `a` holds the components of `W_a`; `W_0 = xi`.
    pub vectors: Vec<Vec<Jet>>,
    /// Row `a` holds the `dz^i` coefficients of `theta^a`; `theta^0 = del rho`.
    pub coframe: Vec<Vec<Jet>>,
    /// Levi form `h_{alpha betabar}` recomputed in the final frame.
    pub levi: Vec<Vec<Jet>>,
    /// `theta = (i/2)(delbar rho - del rho)`.
    pub contact: Form<Jet>,
    /// Coordinate directions used as Gram-Schmidt seeds.
    pub seeds: Vec<usize>,
}

impl FrameData {
    pub fn n(&self) -> usize {
        self.xi.len() - 1
    }

    pub fn m(&self) -> usize {
        self.xi.len()
    }

    pub fn order(&self) -> usize {
        self.r.order()
    }

    /// `theta^a` as a one-form.
    pub fn coframe_form(&self, a: usize) -> Form<Jet> {
        let m = self.m();
        Form::from_terms(
            2 * m,
            self.coframe[a]
                .iter()
                .enumerate()
                .map(|(i, c)| (1u8 << i, c.clone()))
                .collect(),
        )
    }

    /// Components of `W_a` at the base point.
    pub fn vector_value(&self, a: usize) -> Vec<Complex64> {
        self.vectors[a].iter().map(Jet::value).collect()
    }

    /// Largest deviation of `theta^a(W_b)` from `delta_ab` over all jet coefficients.
    pub fn duality_residual(&self) -> f64 {
        let m = self.m();
        let mut worst: f64 = 0.0;
        for a in 0..m {
            for b in 0..m {
                let mut s = Jet::zero(2 * m, self.order());
                for i in 0..m {
                    s = &s + &self.coframe[a][i].mul_jet(&self.vectors[b][i]);
                }
                if a == b {
                    s = s.add_scalar(Complex64::new(-1.0, 0.0));
                }
                worst = worst.max(s.max_abs());
            }
        }
        worst
    }

    /// Largest deviation of the Levi form from the identity.
    pub fn levi_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (a, row) in self.levi.iter().enumerate() {
            for (b, h) in row.iter().enumerate() {
                let h = if a == b {
                    h.add_scalar(Complex64::new(-1.0, 0.0))
                } else {
                    h.clone()
                };
                worst = worst.max(h.max_abs());
            }
        }
        worst
    }
}

/// `sum_ij rho_{i jbar} v^i conj(w^j)`.
pub fn levi_pairing(hess: &[Vec<Jet>], v: &[Jet], w: &[Jet]) -> Jet {
    let m = v.len();
    let wbar: Vec<Jet> = w.iter().map(Jet::conj).collect();
    let mut acc: Option<Jet> = None;
    for i in 0..m {
        for j in 0..m {
            let t = hess[i][j].mul_jet(&v[i]).mul_jet(&wbar[j]);
            acc = Some(match acc {
                None => t,
                Some(a) => &a + &t,
            });
        }
    }
    acc.expect("at least one variable")
}

/// Solves `rho_i xi^i = 1`, `rho_{i jbar} xibar^j = r rho_i` for `(xi, r)`.
pub fn solve_xi(point: &AmbientPoint) -> Result<(Vec<Jet>, Jet)> {
    let m = point.m();
    if point.order() < 2 {
        return Err(Error::OrderExceeded {
            requested: 2,
            available: point.order(),
        });
    }
    let order = point.order() - 2;
    let (holo, anti, hess) = point.derivatives()?;
    let zero = Jet::zero(2 * m, order);
    let one = Jet::constant(2 * m, order, Complex64::new(1.0, 0.0));
    // Conjugated form of the second equation: rho_{j ibar} xi^j - r rho_ibar = 0.
    let mut a = Vec::with_capacity(m + 1);
    let mut b = Vec::with_capacity(m + 1);
    for i in 0..m {
        let mut row: Vec<Jet> = (0..m).map(|j| hess[j][i].clone()).collect();
        row.push(-&anti[i].truncate(order));
        a.push(row);
        b.push(zero.clone());
    }
    let mut last: Vec<Jet> = holo.iter().map(|h| h.truncate(order)).collect();
    last.push(zero.clone());
    a.push(last);
    b.push(one);
    let mut x = jet_linear_solve(&a, &b)?;
    let r = x.pop().expect("nonempty solution").real_part();
    Ok((x, r))
}

/// Builds the `h`-orthonormal frame `{xi, W_alpha}` and its dual coframe.
///
/// Seeds are the projections `e_k - rho_k xi` onto `Ker del rho` with the
/// largest Levi norms. An optional unitary `gauge` mixes the seeds before
/// orthonormalization.
pub fn build_coframe(
    point: &AmbientPoint,
    xi: &[Jet],
    r: &Jet,
    gauge: Option<&DMatrix<Complex64>>,
) -> Result<FrameData> {
    let m = point.m();
    let n = m - 1;
    let order = r.order();
    let nv = 2 * m;
    let (holo, anti, hess) = point.derivatives()?;
    let holo: Vec<Jet> = holo.iter().map(|h| h.truncate(order)).collect();
    let projected: Vec<Vec<Jet>> = (0..m)
        .map(|k| {
            (0..m)
                .map(|i| {
                    let mut c = -&holo[k].mul_jet(&xi[i]);
                    if i == k {
                        c = c.add_scalar(Complex64::new(1.0, 0.0));
                    }
                    c
                })
                .collect()
        })
        .collect();
    let mut norms: Vec<(usize, f64)> = projected
        .iter()
        .enumerate()
        .map(|(k, v)| (k, levi_pairing(&hess, v, v).value().re))
        .collect();
    norms.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut seeds: Vec<usize> = norms[..n].iter().map(|p| p.0).collect();
    seeds.sort_unstable();
    let mut basis: Vec<Vec<Jet>> = seeds.iter().map(|&k| projected[k].clone()).collect();
    if let Some(u) = gauge {
        if u.nrows() != n || u.ncols() != n {
            return Err(Error::WrongDimension {
                expected: n,
                got: u.nrows(),
            });
        }
        basis = (0..n)
            .map(|a| {
                (0..m)
                    .map(|i| {
                        let mut c = Jet::zero(nv, order);
                        for b in 0..n {
                            c.axpy(u[(a, b)], &basis[b][i]);
                        }
                        c
                    })
                    .collect()
            })
            .collect();
    }
    let mut frame: Vec<Vec<Jet>> = Vec::with_capacity(n);
    for mut v in basis {
        for w in &frame {
            let c = levi_pairing(&hess, &v, w);
            for i in 0..m {
                v[i] = &v[i] - &c.mul_jet(&w[i]);
            }
        }
        let norm2 = levi_pairing(&hess, &v, &v).real_part();
        if norm2.value().re < PIVOT_EPS {
            return Err(Error::DegenerateFrame {
                pivot: norm2.value().re,
            });
        }
        let inv = norm2.powf(-0.5, DEFAULT_SINGULAR_EPS)?;
        frame.push(v.iter().map(|c| c.mul_jet(&inv)).collect());
    }
    let mut vectors = vec![xi.to_vec()];
    vectors.extend(frame);
    let inverse = jet_inverse(&vectors)?;
    let coframe: Vec<Vec<Jet>> = (0..m)
        .map(|a| (0..m).map(|i| inverse[i][a].clone()).collect())
        .collect();
    let levi = (1..m)
        .map(|a| {
            (1..m)
                .map(|b| levi_pairing(&hess, &vectors[a], &vectors[b]))
                .collect()
        })
        .collect();
    let del = Form::from_terms(nv, (0..m).map(|i| (1u8 << i, holo[i].clone())).collect());
    let delbar = Form::from_terms(
        nv,
        (0..m)
            .map(|i| (1u8 << (m + i), anti[i].truncate(order)))
            .collect(),
    );
    let contact = delbar.sub(&del).scale(Complex64::new(0.0, 0.5));
    Ok(FrameData {
        xi: xi.to_vec(),
        r: r.clone(),
        vectors,
        coframe,
        levi,
        contact,
        seeds,
    })
}

/// A unitary `n x n` gauge from the QR factorization of a Gaussian-like matrix.
pub fn random_unitary(rng: &mut impl rand::Rng, n: usize) -> DMatrix<Complex64> {
    let raw = DMatrix::from_fn(n, n, |_, _| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    raw.qr().q()
}

/// `solve_xi` followed by `build_coframe`.
pub fn frame_at(point: &AmbientPoint, gauge: Option<&DMatrix<Complex64>>) -> Result<FrameData> {
    let (xi, r) = solve_xi(point)?;
    build_coframe(point, &xi, &r, gauge)
}

/// Real fields `N`, `T` with `xi = N - (i/2) T`, as `(1,0)`-components.
///
/// A real vector is determined by its `(1,0)` part; `N` has `(1,0)` part
/// `xi / 2` and `T` has `i xi`.
pub fn split_nt(xi: &[Jet]) -> (Vec<Jet>, Vec<Jet>) {
    let normal = xi.iter().map(|x| x.scale_re(0.5)).collect();
    let characteristic = xi
        .iter()
        .map(|x| x.scale(Complex64::new(0.0, 1.0)))
        .collect();
    (normal, characteristic)
}

/// Residual of `rho_i xi^i = 1` and `rho_{i jbar} xibar^j = r rho_i` over all coefficients.
pub fn xi_residual(point: &AmbientPoint, frame: &FrameData) -> Result<f64> {
    let m = point.m();
    let order = frame.order();
    let (holo, _, hess) = point.derivatives()?;
    let mut s = Jet::constant(2 * m, order, Complex64::new(-1.0, 0.0));
    for i in 0..m {
        s = &s + &holo[i].mul_jet(&frame.xi[i]);
    }
    let mut worst = s.max_abs();
    for i in 0..m {
        let mut t = -&frame.r.mul_jet(&holo[i]);
        for j in 0..m {
            t = &t + &hess[i][j].mul_jet(&frame.xi[j].conj());
        }
        worst = worst.max(t.max_abs());
    }
    Ok(worst)
}

/// Coefficientwise residual of `del delbar rho = h theta^a ^ thetabar^b + r del rho ^ delbar rho`.
pub fn ambient_identity_residual(point: &AmbientPoint, frame: &FrameData) -> Result<f64> {
    let m = point.m();
    let nv = 2 * m;
    let order = frame.order();
    let (_, _, hess) = point.derivatives()?;
    let mut lhs = Vec::new();
    for i in 0..m {
        for j in 0..m {
            lhs.push(((1u8 << i) | (1u8 << (m + j)), hess[i][j].truncate(order)));
        }
    }
    let lhs = Form::from_terms(nv, lhs);
    let theta: Vec<Form<Jet>> = (0..m).map(|a| frame.coframe_form(a)).collect();
    let mut rhs = theta[0].wedge(&theta[0].conj()).mul_coeff(&frame.r);
    for a in 1..m {
        for b in 1..m {
            rhs = rhs.add(
                &theta[a]
                    .wedge(&theta[b].conj())
                    .mul_coeff(&frame.levi[a - 1][b - 1]),
            );
        }
    }
    Ok(lhs.sub(&rhs).max_abs())
}
