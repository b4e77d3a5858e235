//! The complex Monge-Ampere operator and Fefferman's approximate solutions.

mod fefferman;

pub use fefferman::{
    fefferman_iterate, stage_slope, verify_vanishing_order, ApproxSolution, FeffermanOptions,
    RayFit, StageReport,
};

use num_complex::Complex64;

use crate::domains::{DefiningFunction, PluriharmonicRescale};
use crate::error::{Error, Result};
use crate::frames::FirstAndMixed;
use crate::jets::{jet_determinant, Jet, DEFAULT_SINGULAR_EPS};

fn second_derivatives(rho: &Jet, m: usize) -> Result<FirstAndMixed> {
    let holo: Vec<Jet> = (0..m).map(|i| rho.derivative(i)).collect::<Result<_>>()?;
    let anti: Vec<Jet> = (0..m)
        .map(|j| rho.derivative(m + j))
        .collect::<Result<_>>()?;
    let mixed = holo
        .iter()
        .map(|ri| {
            (0..m)
                .map(|j| ri.derivative(m + j))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    Ok((holo, anti, mixed))
}

/// `J[rho] = det [[rho, rho_jbar], [rho_i, rho_{i jbar}]]`; the result has order `K - 2`.
pub fn monge_ampere_j(rho: &Jet, m: usize) -> Result<Jet> {
    if rho.order() < 2 {
        return Err(Error::OrderExceeded {
            requested: 2,
            available: rho.order(),
        });
    }
    let (holo, anti, mixed) = second_derivatives(rho, m)?;
    let order = rho.order() - 2;
    let mut rows = Vec::with_capacity(m + 1);
    let mut first = vec![rho.truncate(order)];
    first.extend(anti.iter().map(|a| a.truncate(order)));
    rows.push(first);
    for i in 0..m {
        let mut row = vec![holo[i].truncate(order)];
        row.extend(mixed[i].iter().cloned());
        rows.push(row);
    }
    Ok(jet_determinant(&rows))
}

/// The same operator through `-(-rho)^{n+2} det(d dbar log(1/(-rho)))`; needs `rho < 0`.
pub fn monge_ampere_j_log(rho: &Jet, m: usize) -> Result<Jet> {
    if rho.value().re >= 0.0 {
        return Err(Error::NotInterior {
            rho: rho.value().re,
        });
    }
    let neg = -rho;
    let potential = -&neg.ln(DEFAULT_SINGULAR_EPS)?;
    let (_, _, mixed) = second_derivatives(&potential, m)?;
    let det = jet_determinant(&mixed);
    let power = neg.powf(m as f64 + 1.0, DEFAULT_SINGULAR_EPS)?;
    Ok(-&power.mul_jet(&det))
}

/// `J` at a point, evaluated from a defining function.
pub fn monge_ampere_at(f: &dyn DefiningFunction, z: &[Complex64], order: usize) -> Result<Jet> {
    let rho = f.jet(z, order + 2)?;
    monge_ampere_j(&rho, z.len())
}

/// `|J[e^f rho](z) - e^{(n+2) f(z)} J[rho](z)|` relative to the second term.
pub fn check_invariance_law(
    rescaled: &PluriharmonicRescale,
    base: &dyn DefiningFunction,
    z: &[Complex64],
) -> Result<f64> {
    let n = base.n();
    let lhs = monge_ampere_at(rescaled, z, 0)?.value();
    let f = rescaled.exponent_jet(z, 0).value().re;
    let rhs = monge_ampere_at(base, z, 0)?.value() * ((n as f64 + 2.0) * f).exp();
    Ok((lhs - rhs).norm() / rhs.norm().max(f64::MIN_POSITIVE))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::{make_builtin, DomainKind, DomainParams};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn ball_is_an_exact_solution() {
        for n in [1, 2] {
            let f = make_builtin(DomainKind::Ball, n, DomainParams::default())
                .unwrap()
                .evaluator()
                .unwrap();
            let z: Vec<Complex64> = (0..=n).map(|i| c(0.1 * i as f64, -0.2)).collect();
            let j = monge_ampere_at(f.as_ref(), &z, 2).unwrap();
            assert!((j.value() + 1.0).norm() < 1e-14);
            assert!(j.coeffs()[1..].iter().all(|x| x.norm() < 1e-14));
        }
    }

    #[test]
    fn two_routes_agree_inside() {
        let f = make_builtin(
            DomainKind::RealEllipsoid,
            2,
            DomainParams {
                t: Some(0.3),
                ..Default::default()
            },
        )
        .unwrap()
        .evaluator()
        .unwrap();
        let z = [c(0.2, 0.1), c(-0.3, 0.2), c(0.1, 0.4)];
        let rho = f.jet(&z, 4).unwrap();
        let a = monge_ampere_j(&rho, 3).unwrap();
        let b = monge_ampere_j_log(&rho, 3).unwrap();
        assert!((&a - &b).max_abs() < 1e-12);
    }

    #[test]
    fn tube_operator_is_minus_zeta_squared() {
        let f = make_builtin(DomainKind::TubeDisc, 1, DomainParams::default())
            .unwrap()
            .evaluator()
            .unwrap();
        let j = monge_ampere_at(f.as_ref(), &[c(0.0, 0.0), c(0.5, 0.0)], 0).unwrap();
        assert!((j.value() + 0.25).norm() < 1e-15);
    }
}
