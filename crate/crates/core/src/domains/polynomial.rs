use num_complex::Complex64;

use super::{DefiningFunction, Monomial};
use crate::error::Result;
use crate::jets::{Jet, JetSpace};

/// A real polynomial `sum c z^a zbar^b` with Hermitian-symmetric coefficients.
#[derive(Clone, Debug)]
pub struct PolynomialDefiningFunction {
    n: usize,
    terms: Vec<(Vec<u8>, Vec<u8>, Complex64)>,
    /// One representative per conjugate pair, with weight 2 off the diagonal.
    real_terms: Vec<(Vec<u8>, Vec<u8>, Complex64, f64)>,
}

impl PolynomialDefiningFunction {
    /// Assumes `monomials` is already Hermitian-symmetric.
    pub fn new(n: usize, monomials: &[Monomial]) -> Self {
        let terms: Vec<_> = monomials
            .iter()
            .map(|m| (m.a.clone(), m.b.clone(), Complex64::new(m.re, m.im)))
            .collect();
        let real_terms = terms
            .iter()
            .filter_map(|(a, b, c)| match a.cmp(b) {
                std::cmp::Ordering::Less => Some((a.clone(), b.clone(), *c, 2.0)),
                std::cmp::Ordering::Equal => Some((a.clone(), b.clone(), *c, 1.0)),
                std::cmp::Ordering::Greater => None,
            })
            .collect();
        Self {
            n,
            terms,
            real_terms,
        }
    }
}

fn binomial(n: u8, k: u8) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

/// Accumulates the Taylor expansion of `c z^a zbar^b` about `z` into `out`.
fn expand_monomial(
    space: &JetSpace,
    order: usize,
    z: &[Complex64],
    a: &[u8],
    b: &[u8],
    c: Complex64,
    out: &mut [Complex64],
) {
    let m = z.len();
    let exps: Vec<u8> = a.iter().chain(b).copied().collect();
    let bases: Vec<Complex64> = z
        .iter()
        .copied()
        .chain(z.iter().map(|w| w.conj()))
        .collect();
    let mut shift = vec![0u8; 2 * m];
    loop {
        let degree: usize = shift.iter().map(|&s| s as usize).sum();
        if degree <= order {
            let mut coeff = c;
            for v in 0..2 * m {
                coeff *= binomial(exps[v], shift[v]) * bases[v].powi(i32::from(exps[v] - shift[v]));
            }
            let idx = space.index_of(&shift).expect("shift within order");
            out[idx] += coeff;
        }
        // odometer over 0..=exps[v]
        let mut v = 0;
        loop {
            if v == 2 * m {
                return;
            }
            if shift[v] < exps[v] {
                shift[v] += 1;
                break;
            }
            shift[v] = 0;
            v += 1;
        }
    }
}

impl DefiningFunction for PolynomialDefiningFunction {
    fn n(&self) -> usize {
        self.n
    }

    fn jet(&self, z: &[Complex64], order: usize) -> Result<Jet> {
        let m = self.n + 1;
        let mut jet = Jet::zero(2 * m, order);
        let space = jet.space();
        for (a, b, c) in &self.terms {
            expand_monomial(space, order, z, a, b, *c, jet.coeffs_mut());
        }
        Ok(jet.real_part())
    }

    fn value(&self, z: &[Complex64]) -> Result<f64> {
        let mut total = 0.0;
        for (a, b, c, weight) in &self.real_terms {
            let mut term = *c;
            for (i, zi) in z.iter().enumerate() {
                term *= zi.powi(i32::from(a[i])) * zi.conj().powi(i32::from(b[i]));
            }
            total += weight * term.re;
        }
        Ok(total)
    }
}
