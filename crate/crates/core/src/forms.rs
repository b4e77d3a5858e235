//! Differential forms on `C^m` in the basis `dz^1..dz^m, dzbar^1..dzbar^m`.
//!
//! A form is a sparse list of `(mask, coefficient)` pairs where bit `v` of the
//! mask selects basis covector `v`; covectors inside a monomial are ordered by
//! increasing index. Coefficients are either plain numbers (values at a point)
//! or jets (so that exterior derivatives are available).

use num_complex::Complex64;

use crate::error::Result;
use crate::jets::Jet;

pub trait Coeff: Clone + Send + Sync + std::fmt::Debug {
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn neg(&self) -> Self;
    fn scale(&self, c: Complex64) -> Self;
    fn conj(&self) -> Self;
    fn magnitude(&self) -> f64;
}

impl Coeff for Complex64 {
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn neg(&self) -> Self {
        -self
    }
    fn scale(&self, c: Complex64) -> Self {
        self * c
    }
    fn conj(&self) -> Self {
        Complex64::conj(self)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

impl Coeff for Jet {
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self.mul_jet(other)
    }
    fn neg(&self) -> Self {
        -self
    }
    fn scale(&self, c: Complex64) -> Self {
        Jet::scale(self, c)
    }
    fn conj(&self) -> Self {
        Jet::conj(self)
    }
    fn magnitude(&self) -> f64 {
        self.max_abs()
    }
}

#[derive(Clone, Debug)]
pub struct Form<T> {
    nbasis: usize,
    terms: Vec<(u8, T)>,
}

pub type FormMatrix<T> = Vec<Vec<Form<T>>>;

/// Sign of `e^a ^ e^b` relative to the sorted monomial `e^(a|b)`.
fn merge_sign(a: u8, b: u8) -> f64 {
    let mut swaps = 0u32;
    let mut rest = b;
    while rest != 0 {
        let j = rest.trailing_zeros();
        swaps += (a >> (j + 1)).count_ones();
        rest &= rest - 1;
    }
    if swaps.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

impl<T: Coeff> Form<T> {
    pub fn zero(nbasis: usize) -> Self {
        assert!(nbasis <= 8);
        Self {
            nbasis,
            terms: Vec::new(),
        }
    }

    pub fn from_terms(nbasis: usize, mut terms: Vec<(u8, T)>) -> Self {
        terms.sort_by_key(|t| t.0);
        let mut merged: Vec<(u8, T)> = Vec::with_capacity(terms.len());
        for (mask, c) in terms {
            match merged.last_mut() {
                Some(last) if last.0 == mask => last.1 = last.1.add(&c),
                _ => merged.push((mask, c)),
            }
        }
        Self {
            nbasis,
            terms: merged,
        }
    }

    /// The one-form `coeff * e^index`.
    pub fn basis(nbasis: usize, index: usize, coeff: T) -> Self {
        Self {
            nbasis,
            terms: vec![(1u8 << index, coeff)],
        }
    }

    /// A zero-form.
    pub fn scalar(nbasis: usize, coeff: T) -> Self {
        Self {
            nbasis,
            terms: vec![(0, coeff)],
        }
    }

    pub fn nbasis(&self) -> usize {
        self.nbasis
    }

    pub fn terms(&self) -> &[(u8, T)] {
        &self.terms
    }

    pub fn coefficient(&self, mask: u8) -> Option<&T> {
        self.terms
            .binary_search_by_key(&mask, |t| t.0)
            .ok()
            .map(|i| &self.terms[i].1)
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = Vec::with_capacity(self.terms.len() + other.terms.len());
        let (mut i, mut j) = (0, 0);
        while i < self.terms.len() || j < other.terms.len() {
            let a = self.terms.get(i);
            let b = other.terms.get(j);
            match (a, b) {
                (Some(x), Some(y)) if x.0 == y.0 => {
                    out.push((x.0, x.1.add(&y.1)));
                    i += 1;
                    j += 1;
                }
                (Some(x), Some(y)) if x.0 < y.0 => {
                    out.push(x.clone());
                    i += 1;
                }
                (Some(_), Some(y)) => {
                    out.push(y.clone());
                    j += 1;
                }
                (Some(x), None) => {
                    out.push(x.clone());
                    i += 1;
                }
                (None, Some(y)) => {
                    out.push(y.clone());
                    j += 1;
                }
                (None, None) => break,
            }
        }
        Self {
            nbasis: self.nbasis,
            terms: out,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.map(|c| c.neg())
    }

    pub fn scale(&self, c: Complex64) -> Self {
        self.map(|x| x.scale(c))
    }

    /// Multiplication by a function.
    pub fn mul_coeff(&self, f: &T) -> Self {
        self.map(|x| f.mul(x))
    }

    pub fn map<U: Coeff>(&self, f: impl Fn(&T) -> U) -> Form<U> {
        Form {
            nbasis: self.nbasis,
            terms: self.terms.iter().map(|(m, c)| (*m, f(c))).collect(),
        }
    }

    pub fn wedge(&self, other: &Self) -> Self {
        let mut out = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                if ma & mb != 0 {
                    continue;
                }
                let prod = ca.mul(cb);
                let prod = if merge_sign(*ma, *mb) < 0.0 {
                    prod.neg()
                } else {
                    prod
                };
                out.push((ma | mb, prod));
            }
        }
        Self::from_terms(self.nbasis, out)
    }

    /// Complex conjugate, exchanging `dz^i` and `dzbar^i`.
    pub fn conj(&self) -> Self {
        let m = self.nbasis / 2;
        let terms = self
            .terms
            .iter()
            .map(|(mask, c)| {
                let images: Vec<usize> = (0..self.nbasis)
                    .filter(|v| mask & (1 << v) != 0)
                    .map(|v| (v + m) % self.nbasis)
                    .collect();
                let mut inversions = 0;
                for i in 0..images.len() {
                    for j in i + 1..images.len() {
                        if images[i] > images[j] {
                            inversions += 1;
                        }
                    }
                }
                let new_mask = images.iter().fold(0u8, |acc, &v| acc | (1 << v));
                let c = c.conj();
                (new_mask, if inversions % 2 == 0 { c } else { c.neg() })
            })
            .collect();
        Self::from_terms(self.nbasis, terms)
    }

    /// Keeps the monomials with `p` holomorphic and `q` antiholomorphic covectors.
    pub fn project_type(&self, p: u32, q: u32) -> Self {
        let m = self.nbasis / 2;
        let holo = (1u8 << m) - 1;
        Self {
            nbasis: self.nbasis,
            terms: self
                .terms
                .iter()
                .filter(|(mask, _)| {
                    (mask & holo).count_ones() == p && (mask >> m).count_ones() == q
                })
                .cloned()
                .collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.1.magnitude())
            .fold(0.0, f64::max)
    }
}

impl Form<Jet> {
    /// Exterior derivative; coefficient orders drop by one.
    pub fn d(&self) -> Result<Self> {
        let mut out = Vec::new();
        for (mask, f) in &self.terms {
            for v in 0..self.nbasis {
                let bit = 1u8 << v;
                if mask & bit != 0 {
                    continue;
                }
                let df = f.derivative(v)?;
                let sign = if (mask & (bit - 1)).count_ones().is_multiple_of(2) {
                    df
                } else {
                    -&df
                };
                out.push((mask | bit, sign));
            }
        }
        Ok(Self::from_terms(self.nbasis, out))
    }

    /// Values of the coefficients at the base point.
    pub fn value(&self) -> Form<Complex64> {
        self.map(|j| j.value())
    }

    pub fn truncate(&self, order: usize) -> Self {
        self.map(|j| j.truncate(order))
    }

    /// The differential of a function as a one-form.
    pub fn differential(f: &Jet, nbasis: usize) -> Result<Self> {
        Form::scalar(nbasis, f.clone()).d()
    }

    /// The holomorphic differential `del f`.
    pub fn del(f: &Jet, nbasis: usize) -> Result<Self> {
        let m = nbasis / 2;
        let terms = (0..m)
            .map(|v| Ok((1u8 << v, f.derivative(v)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_terms(nbasis, terms))
    }

    /// The antiholomorphic differential `delbar f`.
    pub fn delbar(f: &Jet, nbasis: usize) -> Result<Self> {
        let m = nbasis / 2;
        let terms = (m..nbasis)
            .map(|v| Ok((1u8 << v, f.derivative(v)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_terms(nbasis, terms))
    }
}

impl Form<Complex64> {
    /// Evaluates the form on vectors given by their pairings with the basis covectors.
    pub fn eval(&self, vectors: &[Vec<Complex64>]) -> Complex64 {
        let k = vectors.len();
        let mut total = Complex64::new(0.0, 0.0);
        let mut rows: Vec<usize> = Vec::with_capacity(k);
        for (mask, c) in &self.terms {
            if mask.count_ones() as usize != k {
                continue;
            }
            rows.clear();
            rows.extend((0..self.nbasis).filter(|v| mask & (1 << v) != 0));
            let mut mat: Vec<Complex64> = Vec::with_capacity(k * k);
            for &r in &rows {
                for vec in vectors {
                    mat.push(vec[r]);
                }
            }
            total += c * small_det(&mut mat, k);
        }
        total
    }
}

/// Pairings of a real tangent vector with `(dz, dzbar)`, from its complex components.
pub fn real_vector(components: &[Complex64]) -> Vec<Complex64> {
    components
        .iter()
        .copied()
        .chain(components.iter().map(|c| c.conj()))
        .collect()
}

/// Pairings of a `(1,0)` vector.
pub fn holomorphic_vector(components: &[Complex64]) -> Vec<Complex64> {
    components
        .iter()
        .copied()
        .chain(components.iter().map(|_| Complex64::new(0.0, 0.0)))
        .collect()
}

/// Pairings of the `(0,1)` vector conjugate to the given `(1,0)` vector.
pub fn antiholomorphic_vector(components: &[Complex64]) -> Vec<Complex64> {
    components
        .iter()
        .map(|_| Complex64::new(0.0, 0.0))
        .chain(components.iter().map(|c| c.conj()))
        .collect()
}

/// Determinant of a row-major `k x k` matrix by partial-pivot elimination.
pub fn small_det(mat: &mut [Complex64], k: usize) -> Complex64 {
    let mut det = Complex64::new(1.0, 0.0);
    for col in 0..k {
        let pivot = (col..k)
            .max_by(|&a, &b| {
                mat[a * k + col]
                    .norm()
                    .partial_cmp(&mat[b * k + col].norm())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap_or(col);
        let p = mat[pivot * k + col];
        if p.norm() == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        if pivot != col {
            for j in 0..k {
                mat.swap(col * k + j, pivot * k + j);
            }
            det = -det;
        }
        det *= p;
        for row in col + 1..k {
            let factor = mat[row * k + col] / p;
            for j in col..k {
                let v = mat[col * k + j];
                mat[row * k + j] -= factor * v;
            }
        }
    }
    det
}

/// Matrix product of form-valued matrices, `(A ^ B)_i^k = sum_j A_i^j ^ B_j^k`.
pub fn matrix_wedge<T: Coeff>(a: &FormMatrix<T>, b: &FormMatrix<T>) -> FormMatrix<T> {
    let nbasis = a[0][0].nbasis();
    (0..a.len())
        .map(|i| {
            (0..b[0].len())
                .map(|k| {
                    a[i].iter()
                        .zip(b.iter())
                        .fold(Form::zero(nbasis), |acc, (aij, bj)| {
                            acc.add(&aij.wedge(&bj[k]))
                        })
                })
                .collect()
        })
        .collect()
}

pub fn matrix_map<T: Coeff, U: Coeff>(
    a: &FormMatrix<T>,
    f: impl Fn(&Form<T>) -> Form<U>,
) -> FormMatrix<U> {
    a.iter().map(|row| row.iter().map(&f).collect()).collect()
}

/// Largest coefficient over a form-valued matrix.
pub fn matrix_max_abs<T: Coeff>(a: &FormMatrix<T>) -> f64 {
    a.iter().flatten().map(Form::max_abs).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn wedge_is_graded_commutative_for_one_forms() {
        let a = Form::basis(4, 0, c(1.0, 0.0)).add(&Form::basis(4, 2, c(0.0, 2.0)));
        let b = Form::basis(4, 1, c(3.0, 0.0)).add(&Form::basis(4, 2, c(1.0, -1.0)));
        let ab = a.wedge(&b);
        let ba = b.wedge(&a);
        assert!(ab.add(&ba).max_abs() < 1e-15);
        assert!(a.wedge(&a).max_abs() < 1e-15);
    }

    #[test]
    fn dz_wedge_dzbar_pairs_to_minus_two_i() {
        // dz ^ dzbar = -2i dx ^ dy on C
        let w = Form::basis(2, 0, c(1.0, 0.0)).wedge(&Form::basis(2, 1, c(1.0, 0.0)));
        let ex = real_vector(&[c(1.0, 0.0)]);
        let ey = real_vector(&[c(0.0, 1.0)]);
        assert!((w.eval(&[ex, ey]) - c(0.0, -2.0)).norm() < 1e-15);
    }

    #[test]
    fn conj_swaps_types() {
        let w = Form::basis(4, 0, c(1.0, 1.0)).wedge(&Form::basis(4, 3, c(1.0, 0.0)));
        let wc = w.conj();
        // conj(dz1 ^ dzbar2) = dzbar1 ^ dz2 = -dz2 ^ dzbar1
        let coeff = wc.coefficient(0b0110).unwrap();
        assert!((coeff - c(-1.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn d_squared_vanishes() {
        let z = Jet::variable(4, 4, 0, c(0.3, 0.1));
        let w = Jet::variable(4, 4, 3, c(0.2, -0.5));
        let f = &(&z * &w) * &w;
        let df = Form::differential(&f, 4).unwrap();
        let ddf = df.d().unwrap();
        assert!(ddf.max_abs() < 1e-14);
    }
}
