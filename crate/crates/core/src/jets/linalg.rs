//! Small dense linear algebra over jets.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::jet::Jet;
use crate::error::{Error, Result};

/// Condition estimate above which a constant-term system is treated as singular.
pub const DEFAULT_CONDITION_LIMIT: f64 = 1e12;

fn one_norm(m: &DMatrix<Complex64>) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|c| c.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Inverse of the constant-term matrix with a 1-norm condition estimate.
fn constant_inverse(a: &[Vec<Jet>], limit: f64) -> Result<DMatrix<Complex64>> {
    let n = a.len();
    let a0 = DMatrix::from_fn(n, n, |i, j| a[i][j].value());
    let inv = a0.clone().try_inverse().ok_or(Error::SingularSystem {
        condition: f64::INFINITY,
    })?;
    let condition = one_norm(&a0) * one_norm(&inv);
    if !condition.is_finite() || condition > limit {
        return Err(Error::SingularSystem { condition });
    }
    Ok(inv)
}

/// Solves `A x = b` with jet entries.
///
/// The constant-term system is solved once; higher orders follow from the
/// fixed-point iteration `x <- A0^{-1} (b - (A - A0) x)`, which gains one order
/// per sweep because `A - A0` vanishes at the base point.
pub fn jet_linear_solve(a: &[Vec<Jet>], b: &[Jet]) -> Result<Vec<Jet>> {
    let rhs: Vec<Vec<Jet>> = b.iter().map(|bi| vec![bi.clone()]).collect();
    let x = jet_solve_many(a, &rhs, DEFAULT_CONDITION_LIMIT)?;
    Ok(x.into_iter().map(|mut row| row.remove(0)).collect())
}

/// Inverse of a square jet matrix.
pub fn jet_inverse(a: &[Vec<Jet>]) -> Result<Vec<Vec<Jet>>> {
    let n = a.len();
    let nvars = a[0][0].nvars();
    let order = a.iter().flatten().map(Jet::order).min().unwrap_or(0);
    let identity: Vec<Vec<Jet>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let v = if i == j { 1.0 } else { 0.0 };
                    Jet::constant(nvars, order, Complex64::new(v, 0.0))
                })
                .collect()
        })
        .collect();
    jet_solve_many(a, &identity, DEFAULT_CONDITION_LIMIT)
}

/// Solves `A X = B` for a matrix right-hand side.
pub fn jet_solve_many(a: &[Vec<Jet>], b: &[Vec<Jet>], limit: f64) -> Result<Vec<Vec<Jet>>> {
    let n = a.len();
    if n == 0 || a.iter().any(|row| row.len() != n) || b.len() != n {
        return Err(Error::InvalidParams("jet system must be square".into()));
    }
    let inv = constant_inverse(a, limit)?;
    let order = a
        .iter()
        .flatten()
        .chain(b.iter().flatten())
        .map(Jet::order)
        .min()
        .unwrap_or(0);
    let cols = b[0].len();
    let varying: Vec<Vec<Jet>> = a
        .iter()
        .map(|row| {
            row.iter()
                .map(|e| {
                    let mut e = e.truncate(order);
                    e.coeffs_mut()[0] = Complex64::new(0.0, 0.0);
                    e
                })
                .collect()
        })
        .collect();
    let apply_inv = |v: &[Jet]| -> Vec<Jet> {
        (0..n)
            .map(|i| {
                let mut acc = Jet::zero(v[0].nvars(), order);
                for (j, vj) in v.iter().enumerate() {
                    acc.axpy(inv[(i, j)], vj);
                }
                acc
            })
            .collect()
    };
    let mut out = vec![Vec::with_capacity(cols); n];
    for c in 0..cols {
        let rhs: Vec<Jet> = (0..n).map(|i| b[i][c].truncate(order)).collect();
        let mut x = apply_inv(&rhs);
        for _ in 0..order {
            let residual: Vec<Jet> = (0..n)
                .map(|i| {
                    let mut r = rhs[i].clone();
                    for j in 0..n {
                        r = &r - &varying[i][j].mul_jet(&x[j]);
                    }
                    r
                })
                .collect();
            x = apply_inv(&residual);
        }
        for (i, xi) in x.into_iter().enumerate() {
            out[i].push(xi);
        }
    }
    Ok(out)
}

/// Determinant by cofactor expansion along the first row.
pub fn jet_determinant(a: &[Vec<Jet>]) -> Jet {
    let n = a.len();
    match n {
        0 => panic!("determinant of an empty matrix"),
        1 => a[0][0].clone(),
        2 => &a[0][0].mul_jet(&a[1][1]) - &a[0][1].mul_jet(&a[1][0]),
        _ => {
            let mut acc: Option<Jet> = None;
            for col in 0..n {
                let minor: Vec<Vec<Jet>> = a[1..]
                    .iter()
                    .map(|row| {
                        row.iter()
                            .enumerate()
                            .filter(|&(j, _)| j != col)
                            .map(|(_, e)| e.clone())
                            .collect()
                    })
                    .collect();
                let term = a[0][col].mul_jet(&jet_determinant(&minor));
                acc = Some(match acc {
                    None => term,
                    Some(s) if col % 2 == 0 => &s + &term,
                    Some(s) => &s - &term,
                });
            }
            acc.expect("nonempty")
        }
    }
}

/// Largest coefficient of `A x - b` over all entries.
pub fn solve_residual(a: &[Vec<Jet>], x: &[Jet], b: &[Jet]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r = -bi;
            for (aij, xj) in row.iter().zip(x) {
                r = &r + &aij.mul_jet(xj);
            }
            r.max_abs()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn solve_two_by_two() {
        let x = Jet::variable(2, 4, 0, c(0.1, 0.0));
        let y = Jet::variable(2, 4, 1, c(-0.2, 0.3));
        let one = Jet::constant(2, 4, c(1.0, 0.0));
        let a = vec![
            vec![one.add_scalar(c(1.0, 0.0)), x.clone()],
            vec![y.clone(), (&x * &y).add_scalar(c(3.0, 0.0))],
        ];
        let b = vec![x.clone(), one.clone()];
        let sol = jet_linear_solve(&a, &b).unwrap();
        assert!(solve_residual(&a, &sol, &b) < 1e-14);
    }

    #[test]
    fn determinant_matches_product_for_triangular() {
        let x = Jet::variable(2, 3, 0, c(0.5, 0.0));
        let z = Jet::zero(2, 3);
        let a = vec![
            vec![x.clone(), x.clone(), x.clone()],
            vec![z.clone(), x.add_scalar(c(1.0, 0.0)), x.clone()],
            vec![z.clone(), z.clone(), x.add_scalar(c(2.0, 0.0))],
        ];
        let det = jet_determinant(&a);
        let expect = &(&x * &x.add_scalar(c(1.0, 0.0))) * &x.add_scalar(c(2.0, 0.0));
        assert!((&det - &expect).max_abs() < 1e-14);
    }

    #[test]
    fn singular_constant_system_is_reported() {
        let x = Jet::variable(2, 2, 0, c(0.0, 0.0));
        let a = vec![vec![x.clone(), x.clone()], vec![x.clone(), x.clone()]];
        let b = vec![x.clone(), x.clone()];
        assert!(matches!(
            jet_linear_solve(&a, &b),
            Err(Error::SingularSystem { .. })
        ));
    }
}
