use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use super::space::JetSpace;
use crate::error::{Error, Result};

/// Truncated Taylor expansion in `nvars` independent variables about a base point.
///
/// For functions on `C^m` the variables are `(z^1..z^m, zbar^1..zbar^m)`, so a
/// coefficient at exponents `(a, b)` equals `d^a dbar^b f / (a! b!)`.
#[derive(Clone)]
pub struct Jet {
    space: &'static JetSpace,
    order: usize,
    coeffs: Vec<Complex64>,
}

/// Exponent pair `(a, b)` addressing holomorphic and antiholomorphic variables.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MultiIndex {
    pub holo: Vec<u8>,
    pub anti: Vec<u8>,
}

impl MultiIndex {
    pub fn new(holo: &[u8], anti: &[u8]) -> Self {
        Self {
            holo: holo.to_vec(),
            anti: anti.to_vec(),
        }
    }

    fn flat(&self) -> Vec<u8> {
        let mut v = self.holo.clone();
        v.extend_from_slice(&self.anti);
        v
    }
}

/// Univariate analytic functions that can be composed with a jet.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum JetOp {
    Recip,
    Log,
    Exp,
    Sqrt,
    Pow(f64),
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("nvars", &self.space.nvars())
            .field("order", &self.order)
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

/// Smallest constant-term magnitude accepted by reciprocals and logarithms.
pub const DEFAULT_SINGULAR_EPS: f64 = 1e-14;

impl Jet {
    pub fn zero(nvars: usize, order: usize) -> Self {
        let space = JetSpace::get(nvars, order);
        Self {
            space,
            order,
            coeffs: vec![Complex64::new(0.0, 0.0); space.count(order)],
        }
    }

    pub fn constant(nvars: usize, order: usize, value: Complex64) -> Self {
        let mut j = Self::zero(nvars, order);
        j.coeffs[0] = value;
        j
    }

    /// The coordinate function `x_var` expanded about a point where it equals `value`.
    pub fn variable(nvars: usize, order: usize, var: usize, value: Complex64) -> Self {
        let mut j = Self::constant(nvars, order, value);
        if order >= 1 {
            let mut e = vec![0u8; nvars];
            e[var] = 1;
            let idx = j.space.index_of(&e).expect("linear monomial");
            j.coeffs[idx] = Complex64::new(1.0, 0.0);
        }
        j
    }

    /// Builds a jet from raw graded coefficients. Missing trailing entries are zero.
    pub fn from_coeffs(nvars: usize, order: usize, coeffs: &[Complex64]) -> Self {
        let mut j = Self::zero(nvars, order);
        let len = j.coeffs.len().min(coeffs.len());
        j.coeffs[..len].copy_from_slice(&coeffs[..len]);
        j
    }

    pub fn nvars(&self) -> usize {
        self.space.nvars()
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn space(&self) -> &'static JetSpace {
        self.space
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn value(&self) -> Complex64 {
        self.coeffs[0]
    }

    pub fn coeff(&self, index: &MultiIndex) -> Complex64 {
        self.space
            .index_of(&index.flat())
            .filter(|&i| i < self.coeffs.len())
            .map_or(Complex64::new(0.0, 0.0), |i| self.coeffs[i])
    }

    /// The partial derivative `d^a dbar^b f` at the base point.
    pub fn extract(&self, index: &MultiIndex) -> Result<Complex64> {
        let flat = index.flat();
        let degree: usize = flat.iter().map(|&e| e as usize).sum();
        if degree > self.order {
            return Err(Error::OrderExceeded {
                requested: degree,
                available: self.order,
            });
        }
        let i = self.space.index_of(&flat).ok_or(Error::OrderExceeded {
            requested: degree,
            available: self.order,
        })?;
        Ok(self.coeffs[i] * self.space.factorial_weight(i))
    }

    pub fn truncate(&self, order: usize) -> Self {
        let order = order.min(self.order);
        Self {
            space: self.space,
            order,
            coeffs: self.coeffs[..self.space.count(order)].to_vec(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    fn wider(&self, other: &Jet) -> &'static JetSpace {
        assert_eq!(
            self.space.nvars(),
            other.space.nvars(),
            "jets over different variable counts"
        );
        if self.space.kmax() >= other.space.kmax() {
            self.space
        } else {
            other.space
        }
    }

    fn zip_with(&self, other: &Jet, f: impl Fn(Complex64, Complex64) -> Complex64) -> Jet {
        let space = self.wider(other);
        let order = self.order.min(other.order);
        let len = space.count(order);
        let coeffs = self.coeffs[..len]
            .iter()
            .zip(&other.coeffs[..len])
            .map(|(&a, &b)| f(a, b))
            .collect();
        Jet {
            space,
            order,
            coeffs,
        }
    }

    pub fn scale(&self, c: Complex64) -> Jet {
        Jet {
            space: self.space,
            order: self.order,
            coeffs: self.coeffs.iter().map(|&a| a * c).collect(),
        }
    }

    pub fn scale_re(&self, c: f64) -> Jet {
        self.scale(Complex64::new(c, 0.0))
    }

    pub fn add_scalar(&self, c: Complex64) -> Jet {
        let mut j = self.clone();
        j.coeffs[0] += c;
        j
    }

    /// Accumulates `c * other` into `self`, truncating to the common order.
    pub fn axpy(&mut self, c: Complex64, other: &Jet) {
        if other.order < self.order {
            *self = self.truncate(other.order);
        }
        for (a, &b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += c * b;
        }
    }

    pub fn mul_jet(&self, other: &Jet) -> Jet {
        let space = self.wider(other);
        let order = self.order.min(other.order);
        let mut out = vec![Complex64::new(0.0, 0.0); space.count(order)];
        for i in 0..space.count(order) {
            let a = self.coeffs[i];
            if a.re == 0.0 && a.im == 0.0 {
                continue;
            }
            let len = space.count(order - space.degree(i));
            let row = &space.mul_row(i)[..len];
            for (&t, &b) in row.iter().zip(&other.coeffs[..len]) {
                out[t as usize] += a * b;
            }
        }
        Jet {
            space,
            order,
            coeffs: out,
        }
    }

    /// Partial derivative with respect to variable `var`; the order drops by one.
    pub fn derivative(&self, var: usize) -> Result<Jet> {
        if self.order == 0 {
            return Err(Error::OrderExceeded {
                requested: 1,
                available: 0,
            });
        }
        let order = self.order - 1;
        let len = self.space.count(order);
        let targets = &self.space.deriv_targets(var)[..len];
        let coeffs = targets
            .iter()
            .enumerate()
            .map(|(beta, &t)| {
                let factor = f64::from(self.space.exponents(beta)[var]) + 1.0;
                self.coeffs[t as usize] * factor
            })
            .collect();
        Ok(Jet {
            space: self.space,
            order,
            coeffs,
        })
    }

    /// Complex conjugate of the underlying function, `conj(f)(z, zbar) = conj(f(zbar, z))`.
    pub fn conj(&self) -> Jet {
        let map = self.space.conj_map();
        assert!(!map.is_empty(), "conjugation needs paired variables");
        let mut coeffs = vec![Complex64::new(0.0, 0.0); self.coeffs.len()];
        for (i, &c) in self.coeffs.iter().enumerate() {
            coeffs[map[i] as usize] = c.conj();
        }
        Jet {
            space: self.space,
            order: self.order,
            coeffs,
        }
    }

    /// Symmetrizes to the jet of a real-valued function.
    pub fn real_part(&self) -> Jet {
        let c = self.conj();
        self.zip_with(&c, |a, b| (a + b) * 0.5)
    }

    /// Largest violation of the reality condition `c(a,b) = conj(c(b,a))`.
    pub fn reality_defect(&self) -> f64 {
        let map = self.space.conj_map();
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| (c.conj() - self.coeffs[map[i] as usize]).norm())
            .fold(0.0, f64::max)
    }

    /// Composes `op` with this jet using the principal branch.
    pub fn compose(&self, op: JetOp, eps: f64) -> Result<Jet> {
        let c = self.coeffs[0];
        let needs_nonzero = !matches!(op, JetOp::Exp)
            && !matches!(op, JetOp::Pow(p) if p >= 0.0 && p.fract() == 0.0);
        if needs_nonzero && c.norm() < eps {
            return Err(Error::DivisionBySingular {
                value: c.norm(),
                eps,
            });
        }
        let on_cut = c.im == 0.0 && c.re < 0.0;
        let name = match op {
            JetOp::Log => Some("log"),
            JetOp::Sqrt => Some("sqrt"),
            JetOp::Pow(p) if p.fract() != 0.0 => Some("pow"),
            _ => None,
        };
        if let (Some(name), true) = (name, on_cut) {
            return Err(Error::BranchViolation {
                op: name,
                re: c.re,
                im: c.im,
            });
        }
        let k = self.order;
        let taylor: Vec<Complex64> = match op {
            JetOp::Recip => (0..=k)
                .map(|j| {
                    let s = if j % 2 == 0 { 1.0 } else { -1.0 };
                    s / c.powi(j as i32 + 1)
                })
                .collect(),
            JetOp::Log => (0..=k)
                .map(|j| {
                    if j == 0 {
                        c.ln()
                    } else {
                        let s = if j % 2 == 1 { 1.0 } else { -1.0 };
                        s / (j as f64 * c.powi(j as i32))
                    }
                })
                .collect(),
            JetOp::Exp => {
                let e = c.exp();
                let mut fact = 1.0;
                (0..=k)
                    .map(|j| {
                        if j > 0 {
                            fact *= j as f64;
                        }
                        e / fact
                    })
                    .collect()
            }
            JetOp::Sqrt => binomial_series(c, 0.5, k),
            JetOp::Pow(p) => binomial_series(c, p, k),
        };
        let mut g = self.clone();
        g.coeffs[0] = Complex64::new(0.0, 0.0);
        // Horner evaluation of sum taylor[j] * g^j
        let mut acc = Jet::constant(self.nvars(), k, taylor[k]);
        for j in (0..k).rev() {
            acc = g.mul_jet(&acc).add_scalar(taylor[j]);
        }
        Ok(acc)
    }

    pub fn recip(&self, eps: f64) -> Result<Jet> {
        self.compose(JetOp::Recip, eps)
    }

    pub fn div(&self, other: &Jet, eps: f64) -> Result<Jet> {
        Ok(self.mul_jet(&other.recip(eps)?))
    }

    pub fn ln(&self, eps: f64) -> Result<Jet> {
        self.compose(JetOp::Log, eps)
    }

    pub fn exp(&self) -> Jet {
        self.compose(JetOp::Exp, 0.0).expect("exp is entire")
    }

    pub fn sqrt(&self, eps: f64) -> Result<Jet> {
        self.compose(JetOp::Sqrt, eps)
    }

    pub fn powf(&self, p: f64, eps: f64) -> Result<Jet> {
        self.compose(JetOp::Pow(p), eps)
    }
}

fn binomial_series(c: Complex64, p: f64, k: usize) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(k + 1);
    let mut binom = 1.0;
    for j in 0..=k {
        if j > 0 {
            binom *= (p - (j as f64 - 1.0)) / j as f64;
        }
        let power = if c.im == 0.0 && c.re > 0.0 {
            Complex64::new(c.re.powf(p - j as f64), 0.0)
        } else {
            c.powf(p - j as f64)
        };
        out.push(power * binom);
    }
    out
}

/// Free-function form of [`Jet::compose`].
pub fn jet_compose(f: &Jet, op: JetOp, eps: f64) -> Result<Jet> {
    f.compose(op, eps)
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        self.mul_jet(rhs)
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        Jet {
            space: self.space,
            order: self.order,
            coeffs: self.coeffs.iter().map(|&a| -a).collect(),
        }
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        &self + &rhs
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        &self - &rhs
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        self.mul_jet(&rhs)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        -&self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn product_of_variables() {
        let x = Jet::variable(2, 3, 0, c(2.0, 0.0));
        let y = Jet::variable(2, 3, 1, c(-1.0, 0.5));
        let p = &x * &y;
        assert_eq!(p.value(), c(-2.0, 1.0));
        assert_eq!(p.coeff(&MultiIndex::new(&[1], &[1])), c(1.0, 0.0));
        assert_eq!(p.coeff(&MultiIndex::new(&[1], &[0])), c(-1.0, 0.5));
    }

    #[test]
    fn log_of_exp_roundtrip() {
        let x = Jet::variable(2, 5, 0, c(0.3, 0.1));
        let y = Jet::variable(2, 5, 1, c(0.2, -0.4));
        let f = &(&x * &y) + &x.scale_re(0.5);
        let back = f.exp().ln(1e-14).unwrap();
        for (a, b) in back.coeffs().iter().zip(f.coeffs()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn sqrt_squares_back() {
        let x = Jet::variable(4, 4, 2, c(1.5, 0.0));
        let f = (&x * &x).add_scalar(c(0.25, 0.0));
        let s = f.sqrt(1e-14).unwrap();
        let back = &s * &s;
        for (a, b) in back.coeffs().iter().zip(f.coeffs()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn branch_cut_and_singular_errors() {
        let neg = Jet::constant(2, 2, c(-1.0, 0.0));
        assert!(matches!(neg.ln(1e-14), Err(Error::BranchViolation { .. })));
        assert!(matches!(
            neg.sqrt(1e-14),
            Err(Error::BranchViolation { .. })
        ));
        let zero = Jet::zero(2, 2);
        assert!(matches!(
            zero.recip(1e-14),
            Err(Error::DivisionBySingular { .. })
        ));
    }

    #[test]
    fn derivative_drops_order() {
        // f = x^2 y at (1, 2): d/dx = 2xy
        let x = Jet::variable(2, 3, 0, c(1.0, 0.0));
        let y = Jet::variable(2, 3, 1, c(2.0, 0.0));
        let f = &(&x * &x) * &y;
        let fx = f.derivative(0).unwrap();
        assert_eq!(fx.order(), 2);
        assert!((fx.value() - c(4.0, 0.0)).norm() < 1e-15);
        assert!((fx.extract(&MultiIndex::new(&[1], &[1])).unwrap() - c(2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn extract_uses_factorials() {
        let x = Jet::variable(2, 4, 0, c(0.0, 0.0));
        let f = &(&x * &x) * &x;
        assert_eq!(
            f.extract(&MultiIndex::new(&[3], &[0])).unwrap(),
            c(6.0, 0.0)
        );
        assert!(matches!(
            f.extract(&MultiIndex::new(&[5], &[0])),
            Err(Error::OrderExceeded { .. })
        ));
    }

    #[test]
    fn conj_of_holomorphic_is_antiholomorphic() {
        let z = Jet::variable(2, 2, 0, c(0.5, 0.5));
        let zb = z.conj();
        assert_eq!(zb.value(), c(0.5, -0.5));
        assert_eq!(zb.coeff(&MultiIndex::new(&[0], &[1])), c(1.0, 0.0));
        let modulus = &z * &zb;
        assert!(modulus.reality_defect() < 1e-16);
    }
}
