use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::monge_ampere_j;
use crate::domains::{boundary_along_ray, gradient, random_unit_vector, DefiningFunction};
use crate::error::{Error, Result};
use crate::jets::{Jet, DEFAULT_SINGULAR_EPS};

/// Fefferman's approximate solution `rho_s` with `J[rho_s] = -1 + O(rho^s)`.
///
/// Stage 1 is `rho (-J[rho])^{-1/(n+2)}`; stage `s + 1` multiplies stage `s` by
/// `1 + (1 + J[rho_s]) / c_s`. Every stage costs two extra jet orders of the
/// underlying defining function.
#[derive(Clone)]
pub struct ApproxSolution {
    base: Arc<dyn DefiningFunction>,
    center: Vec<Complex64>,
    constants: Vec<f64>,
    stage: usize,
    reports: Vec<StageReport>,
}

#[derive(Clone, Debug, Serialize)]
pub struct StageReport {
    pub stage: usize,
    pub constant: Option<f64>,
    pub calibrated: bool,
    /// Median fitted slope over the probe rays; `None` when every ray is exact.
    pub slope: Option<f64>,
    pub min_slope: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RayFit {
    pub ray_id: usize,
    pub stage: usize,
    /// `None` marks an exact solution along the ray (residual below `1e-12`).
    pub slope: Option<f64>,
    pub fit_residual: f64,
    pub max_residual: f64,
}

#[derive(Clone, Debug)]
pub struct FeffermanOptions {
    pub rays: usize,
    pub depths: Vec<f64>,
    pub seed: u64,
    pub slope_margin: f64,
    pub min_improvement: f64,
}

impl Default for FeffermanOptions {
    fn default() -> Self {
        Self {
            rays: 6,
            depths: (0..8)
                .map(|k| COLLAR * 10f64.powf(-1.0 - 2.0 * k as f64 / 7.0))
                .collect(),
            seed: 11,
            slope_margin: 0.2,
            min_improvement: 0.8,
        }
    }
}

const EXACT_THRESHOLD: f64 = 1e-12;

/// Residuals below this are rounding noise and are left out of the fit.
const NOISE_FLOOR: f64 = 1e-13;

/// Width of the boundary collar probed by the rays.
const COLLAR: f64 = 0.1;

/// Multipliers tried when a stage constant fails to raise the order.
const CALIBRATION_GRID: [f64; 12] = [
    0.25,
    1.0 / 3.0,
    0.5,
    2.0 / 3.0,
    0.75,
    0.8,
    1.25,
    4.0 / 3.0,
    1.5,
    2.0,
    3.0,
    4.0,
];

impl ApproxSolution {
    /// The classical constant `c_s = (s + 1)(n + 2 - s)`.
    pub fn classical_constant(n: usize, s: usize) -> f64 {
        ((s + 1) * (n + 2 - s)) as f64
    }

    /// Stage `stage` with the classical constants.
    pub fn new(
        base: Arc<dyn DefiningFunction>,
        center: Vec<Complex64>,
        stage: usize,
    ) -> Result<Self> {
        let n = base.n();
        if stage > n + 2 {
            return Err(Error::InvalidParams(format!(
                "Fefferman stages stop at n + 2 = {}",
                n + 2
            )));
        }
        let constants = (1..stage).map(|s| Self::classical_constant(n, s)).collect();
        Ok(Self::with_constants(base, center, stage, constants))
    }

    pub fn with_constants(
        base: Arc<dyn DefiningFunction>,
        center: Vec<Complex64>,
        stage: usize,
        constants: Vec<f64>,
    ) -> Self {
        Self {
            base,
            center,
            constants,
            stage,
            reports: Vec::new(),
        }
    }

    pub fn stage(&self) -> usize {
        self.stage
    }

    pub fn constants(&self) -> &[f64] {
        &self.constants
    }

    pub fn reports(&self) -> &[StageReport] {
        &self.reports
    }

    pub fn center(&self) -> &[Complex64] {
        &self.center
    }

    pub fn base(&self) -> &Arc<dyn DefiningFunction> {
        &self.base
    }

    fn stage_jet(&self, stage: usize, z: &[Complex64], order: usize) -> Result<Jet> {
        let m = z.len();
        if stage == 0 {
            return self.base.jet(z, order);
        }
        let prev = self.stage_jet(stage - 1, z, order + 2)?;
        let j = monge_ampere_j(&prev, m)?;
        let prev = prev.truncate(order);
        let factor = if stage == 1 {
            let neg = -&j;
            if neg.value().re <= 0.0 {
                return Err(Error::PseudoconvexityLost {
                    location: format!("{z:?}"),
                    eigenvalue: neg.value().re,
                });
            }
            neg.powf(-1.0 / (self.base.n() as f64 + 2.0), DEFAULT_SINGULAR_EPS)?
        } else {
            let c = self.constants[stage - 2];
            j.add_scalar(Complex64::new(1.0, 0.0))
                .scale_re(1.0 / c)
                .add_scalar(Complex64::new(1.0, 0.0))
        };
        Ok(prev.mul_jet(&factor).real_part())
    }
}

impl DefiningFunction for ApproxSolution {
    fn n(&self) -> usize {
        self.base.n()
    }

    fn jet(&self, z: &[Complex64], order: usize) -> Result<Jet> {
        self.stage_jet(self.stage, z, order)
    }

    fn root_proxy(&self) -> Option<&dyn DefiningFunction> {
        Some(self.base.as_ref())
    }
}

fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    (slope, rms)
}

/// Log-log slopes of `|J[rho_s] + 1|` against `|rho_s|` along inward normal rays.
pub fn verify_vanishing_order(
    sol: &ApproxSolution,
    options: &FeffermanOptions,
) -> Result<Vec<RayFit>> {
    let base = sol.base.as_ref();
    let m = sol.center.len();
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut fits = Vec::with_capacity(options.rays);
    for ray in 0..options.rays {
        let dir = random_unit_vector(&mut rng, m);
        let (p, _) = boundary_along_ray(base, &sol.center, &dir, 1e-13, 50)
            .ok_or(Error::NewtonDiverged { node: ray })?;
        let grad = gradient(&base.jet(&p, 1)?, m)?;
        let norm = grad.iter().map(|g| g.norm_sqr()).sum::<f64>().sqrt();
        let normal: Vec<Complex64> = grad.iter().map(|g| g.conj() / norm).collect();
        let mut xs = Vec::with_capacity(options.depths.len());
        let mut ys = Vec::with_capacity(options.depths.len());
        let mut max_residual: f64 = 0.0;
        for &depth in &options.depths {
            let q: Vec<Complex64> = p.iter().zip(&normal).map(|(a, b)| a - b * depth).collect();
            if base.value(&q)? >= 0.0 {
                return Err(Error::CollarTooThin { ray, depth });
            }
            let rho = sol.jet(&q, 2)?;
            let residual = (monge_ampere_j(&rho, m)?.value() + 1.0).norm();
            max_residual = max_residual.max(residual);
            if residual > NOISE_FLOOR {
                xs.push(rho.value().re.abs().ln());
                ys.push(residual.ln());
            }
        }
        let (slope, fit_residual) = if max_residual < EXACT_THRESHOLD {
            (None, 0.0)
        } else if xs.len() < 3 {
            return Err(Error::CollarTooThin {
                ray,
                depth: options.depths[0],
            });
        } else {
            let (s, r) = least_squares(&xs, &ys);
            (Some(s), r)
        };
        fits.push(RayFit {
            ray_id: ray,
            stage: sol.stage,
            slope,
            fit_residual,
            max_residual,
        });
    }
    Ok(fits)
}

/// Median of the fitted ray slopes, `None` when every ray is exact.
///
/// A ray where the leading coefficient of `J + 1` nearly vanishes stays
/// pre-asymptotic over the whole depth window, so the minimum is not a
/// reliable order estimate; the median is.
pub fn stage_slope(fits: &[RayFit]) -> Option<f64> {
    let mut slopes: Vec<f64> = fits.iter().filter_map(|f| f.slope).collect();
    if slopes.is_empty() {
        return None;
    }
    slopes.sort_by(f64::total_cmp);
    let k = slopes.len();
    Some(if k % 2 == 1 {
        slopes[k / 2]
    } else {
        0.5 * (slopes[k / 2 - 1] + slopes[k / 2])
    })
}

fn min_slope(fits: &[RayFit]) -> Option<f64> {
    fits.iter()
        .filter_map(|f| f.slope)
        .fold(None, |acc: Option<f64>, s| {
            Some(acc.map_or(s, |a| a.min(s)))
        })
}

/// Builds stages `1..=target`, checking the vanishing order after each and
/// recalibrating a stage constant when the order fails to rise.
pub fn fefferman_iterate(
    base: Arc<dyn DefiningFunction>,
    center: Vec<Complex64>,
    target: usize,
    options: &FeffermanOptions,
) -> Result<ApproxSolution> {
    let n = base.n();
    if target == 0 || target > n + 2 {
        return Err(Error::InvalidParams(format!(
            "target stage must lie in 1..={}",
            n + 2
        )));
    }
    let accept = |stage: usize, slope: Option<f64>, prev: Option<f64>| match slope {
        None => true,
        Some(s) => {
            s >= stage as f64 - options.slope_margin
                && prev.is_none_or(|p| s >= p + options.min_improvement)
        }
    };
    let mut sol = ApproxSolution::with_constants(base.clone(), center.clone(), 1, Vec::new());
    let fits = verify_vanishing_order(&sol, options)?;
    let first = stage_slope(&fits);
    if !accept(1, first, None) {
        return Err(Error::OrderStall {
            stage: 1,
            slope: first.unwrap_or(f64::NAN),
        });
    }
    let mut reports = vec![StageReport {
        stage: 1,
        constant: None,
        calibrated: false,
        slope: first,
        min_slope: min_slope(&fits),
    }];
    let mut prev = first;
    for s in 1..target {
        let classical = ApproxSolution::classical_constant(n, s);
        let try_constant = |c: f64| -> Result<(ApproxSolution, Option<f64>, Option<f64>)> {
            let mut constants = sol.constants.clone();
            constants.push(c);
            let cand =
                ApproxSolution::with_constants(base.clone(), center.clone(), s + 1, constants);
            let fits = verify_vanishing_order(&cand, options)?;
            Ok((cand, stage_slope(&fits), min_slope(&fits)))
        };
        let (cand, slope, lowest) = try_constant(classical)?;
        let (chosen, slope, lowest, constant, calibrated) = if accept(s + 1, slope, prev) {
            (cand, slope, lowest, classical, false)
        } else {
            let mut best: Option<(ApproxSolution, Option<f64>, Option<f64>, f64)> = None;
            for mult in CALIBRATION_GRID {
                let c = classical * mult;
                let (cand, slope, lowest) = try_constant(c)?;
                let better = match (&best, slope) {
                    (None, _) => true,
                    (Some((_, None, _, _)), _) => false,
                    (Some(_), None) => true,
                    (Some((_, Some(b), _, _)), Some(s)) => s > *b,
                };
                if better {
                    best = Some((cand, slope, lowest, c));
                }
            }
            let (cand, slope, lowest, c) = best.expect("calibration grid is nonempty");
            if !accept(s + 1, slope, prev) {
                return Err(Error::OrderStall {
                    stage: s + 1,
                    slope: slope.unwrap_or(f64::NAN),
                });
            }
            (cand, slope, lowest, c, true)
        };
        reports.push(StageReport {
            stage: s + 1,
            constant: Some(constant),
            calibrated,
            slope,
            min_slope: lowest,
        });
        sol = chosen;
        prev = slope;
    }
    sol.reports = reports;
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::{make_builtin, DomainKind, DomainParams};

    #[test]
    fn ball_stages_are_exact() {
        let f = make_builtin(DomainKind::Ball, 1, DomainParams::default())
            .unwrap()
            .evaluator()
            .unwrap();
        let sol = ApproxSolution::new(f, vec![Complex64::new(0.0, 0.0); 2], 3).unwrap();
        let fits = verify_vanishing_order(&sol, &FeffermanOptions::default()).unwrap();
        assert!(fits.iter().all(|f| f.slope.is_none()));
    }

    #[test]
    fn classical_constants() {
        assert_eq!(ApproxSolution::classical_constant(1, 1), 4.0);
        assert_eq!(ApproxSolution::classical_constant(1, 2), 3.0);
        assert_eq!(ApproxSolution::classical_constant(2, 3), 4.0);
    }
}
