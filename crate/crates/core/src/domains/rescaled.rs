use std::sync::Arc;

use num_complex::Complex64;

use super::DefiningFunction;
use crate::error::Result;
use crate::jets::Jet;

/// `e^f rho` with `f = Re h` for a holomorphic polynomial `h`.
///
/// Rescaling by `e^f` with `f` pluriharmonic preserves the pseudo-Einstein
/// condition and multiplies the Monge-Ampere operator by `e^{(n+2) f}`.
#[derive(Clone)]
pub struct PluriharmonicRescale {
    base: Arc<dyn DefiningFunction>,
    /// Terms `c z^a` of `h`.
    holomorphic: Vec<(Vec<u8>, Complex64)>,
}

impl PluriharmonicRescale {
    pub fn new(base: Arc<dyn DefiningFunction>, holomorphic: Vec<(Vec<u8>, Complex64)>) -> Self {
        Self { base, holomorphic }
    }

    /// Jet of `f = Re h` about `z`.
    pub fn exponent_jet(&self, z: &[Complex64], order: usize) -> Jet {
        let m = z.len();
        let vars: Vec<Jet> = (0..m)
            .map(|i| Jet::variable(2 * m, order, i, z[i]))
            .collect();
        let mut h = Jet::zero(2 * m, order);
        for (a, c) in &self.holomorphic {
            let mut term = Jet::constant(2 * m, order, *c);
            for (i, &e) in a.iter().enumerate() {
                for _ in 0..e {
                    term = term.mul_jet(&vars[i]);
                }
            }
            h = &h + &term;
        }
        h.real_part()
    }
}

impl DefiningFunction for PluriharmonicRescale {
    fn n(&self) -> usize {
        self.base.n()
    }

    fn jet(&self, z: &[Complex64], order: usize) -> Result<Jet> {
        let f = self.exponent_jet(z, order);
        Ok(f.exp().mul_jet(&self.base.jet(z, order)?).real_part())
    }

    fn root_proxy(&self) -> Option<&dyn DefiningFunction> {
        Some(self.base.as_ref())
    }
}
