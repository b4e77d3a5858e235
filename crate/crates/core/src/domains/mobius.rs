use num_complex::Complex64;

use super::DefiningFunction;
use crate::error::{Error, Result};
use crate::jets::{jet_determinant, Jet, DEFAULT_SINGULAR_EPS};

/// Pullback of the unit ball `|w|^2 - 1` under the automorphism sending `a` to 0.
///
/// With `jacobian_rescale` the pullback is multiplied by `|det F'|^{-2/(n+2)}`,
/// which keeps the Monge-Ampere operator equal to `-1`. Without it the result
/// is `e^f (|z|^2 - 1)` for a pluriharmonic `f`, a genuinely different
/// pseudo-Einstein defining function of the same ball.
#[derive(Clone, Debug)]
pub struct MobiusPullback {
    n: usize,
    center: Vec<Complex64>,
    jacobian_rescale: bool,
}

impl MobiusPullback {
    pub fn new(n: usize, center: Vec<Complex64>, jacobian_rescale: bool) -> Result<Self> {
        if center.len() != n + 1 {
            return Err(Error::InvalidParams(format!(
                "Mobius center needs {} complex entries",
                n + 1
            )));
        }
        let norm2: f64 = center.iter().map(|c| c.norm_sqr()).sum();
        if norm2 >= 1.0 {
            return Err(Error::InvalidParams(
                "Mobius center must satisfy |a| < 1".into(),
            ));
        }
        Ok(Self {
            n,
            center,
            jacobian_rescale,
        })
    }

    pub fn center(&self) -> &[Complex64] {
        &self.center
    }

    /// The automorphism `F` as holomorphic jets.
    pub fn automorphism_jets(&self, z: &[Complex64], order: usize) -> Result<Vec<Jet>> {
        let m = self.n + 1;
        let nv = 2 * m;
        let vars: Vec<Jet> = (0..m).map(|i| Jet::variable(nv, order, i, z[i])).collect();
        let a = &self.center;
        let a2: f64 = a.iter().map(|c| c.norm_sqr()).sum();
        let s = (1.0 - a2).sqrt();
        if a2 == 0.0 {
            return Ok(vars.iter().map(|v| -v).collect());
        }
        let mut inner = Jet::zero(nv, order);
        for (v, ai) in vars.iter().zip(a) {
            inner.axpy(ai.conj(), v);
        }
        let denom = (-&inner).add_scalar(Complex64::new(1.0, 0.0));
        let denom_inv = denom.recip(DEFAULT_SINGULAR_EPS)?;
        Ok((0..m)
            .map(|k| {
                // a - P_a z - s Q_a z = a - (1 - s) P_a z - s z
                let mut num = Jet::constant(nv, order, a[k]);
                num.axpy(-a[k] * ((1.0 - s) / a2), &inner);
                num.axpy(Complex64::new(-s, 0.0), &vars[k]);
                num.mul_jet(&denom_inv)
            })
            .collect())
    }
}

impl DefiningFunction for MobiusPullback {
    fn n(&self) -> usize {
        self.n
    }

    fn jet(&self, z: &[Complex64], order: usize) -> Result<Jet> {
        let m = self.n + 1;
        let f = self.automorphism_jets(z, order + 1)?;
        let mut rho = Jet::constant(2 * m, order, Complex64::new(-1.0, 0.0));
        for fk in &f {
            rho = &rho + &fk.mul_jet(&fk.conj());
        }
        if !self.jacobian_rescale {
            return Ok(rho.truncate(order).real_part());
        }
        let jac: Vec<Vec<Jet>> = f
            .iter()
            .map(|fk| (0..m).map(|j| fk.derivative(j)).collect::<Result<Vec<_>>>())
            .collect::<Result<_>>()?;
        let det = jet_determinant(&jac);
        let modulus = det.mul_jet(&det.conj()).real_part();
        let factor = modulus.powf(-1.0 / (self.n as f64 + 2.0), DEFAULT_SINGULAR_EPS)?;
        Ok(factor.mul_jet(&rho).real_part())
    }
}
