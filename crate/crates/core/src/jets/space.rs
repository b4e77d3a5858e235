//! Monomial bookkeeping shared by all jets with the same number of variables.
//!
//! Monomials are stored in graded order, so the monomials of degree `<= k`
//! always form a prefix of length `count(k)`. The layout of that prefix does
//! not depend on the largest order a space was built for, which lets jets from
//! spaces built at different orders interoperate.

use std::collections::HashMap;
use std::sync::Mutex;

pub struct JetSpace {
    nvars: usize,
    kmax: usize,
    exps: Vec<u8>,
    degree: Vec<u8>,
    counts: Vec<usize>,
    mul_offsets: Vec<usize>,
    mul_targets: Vec<u32>,
    deriv: Vec<Vec<u32>>,
    conj: Vec<u32>,
    factorials: Vec<f64>,
    lookup: HashMap<u64, u32>,
}

static REGISTRY: Mutex<Vec<Option<&'static JetSpace>>> = Mutex::new(Vec::new());

const MIN_KMAX: usize = 6;

fn pack(exps: &[u8]) -> u64 {
    exps.iter()
        .enumerate()
        .fold(0u64, |acc, (i, &e)| acc | (u64::from(e) << (8 * i)))
}

fn compositions(nvars: usize, degree: usize, out: &mut Vec<Vec<u8>>) {
    fn rec(prefix: &mut Vec<u8>, left: usize, slots: usize, out: &mut Vec<Vec<u8>>) {
        if slots == 1 {
            prefix.push(left as u8);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for e in (0..=left).rev() {
            prefix.push(e as u8);
            rec(prefix, left - e, slots - 1, out);
            prefix.pop();
        }
    }
    if nvars == 0 {
        if degree == 0 {
            out.push(Vec::new());
        }
        return;
    }
    rec(&mut Vec::with_capacity(nvars), degree, nvars, out);
}

impl JetSpace {
    /// Returns a shared space for `nvars` variables covering at least `order`.
    pub fn get(nvars: usize, order: usize) -> &'static JetSpace {
        assert!(nvars <= 8, "at most 8 jet variables are supported");
        let mut reg = REGISTRY.lock().unwrap_or_else(|e| e.into_inner());
        if reg.len() <= nvars {
            reg.resize(nvars + 1, None);
        }
        if let Some(space) = reg[nvars] {
            if space.kmax >= order {
                return space;
            }
        }
        let previous = reg[nvars].map_or(0, |s| s.kmax);
        let kmax = order.max(previous).max(MIN_KMAX);
        let space: &'static JetSpace = Box::leak(Box::new(JetSpace::build(nvars, kmax)));
        reg[nvars] = Some(space);
        space
    }

    fn build(nvars: usize, kmax: usize) -> JetSpace {
        let mut monomials = Vec::new();
        let mut counts = Vec::with_capacity(kmax + 1);
        for d in 0..=kmax {
            compositions(nvars, d, &mut monomials);
            counts.push(monomials.len());
        }
        let len = monomials.len();
        let mut lookup = HashMap::with_capacity(len);
        let mut exps = Vec::with_capacity(len * nvars);
        let mut degree = Vec::with_capacity(len);
        let mut factorials = Vec::with_capacity(len);
        for (i, m) in monomials.iter().enumerate() {
            lookup.insert(pack(m), i as u32);
            exps.extend_from_slice(m);
            degree.push(m.iter().map(|&e| e as usize).sum::<usize>() as u8);
            factorials.push(m.iter().map(|&e| factorial(e as usize)).product());
        }
        let keys: Vec<u64> = monomials.iter().map(|m| pack(m)).collect();

        let mut mul_offsets = Vec::with_capacity(len + 1);
        let mut mul_targets = Vec::new();
        mul_offsets.push(0);
        for i in 0..len {
            let row = counts[kmax - degree[i] as usize];
            for &key in &keys[..row] {
                mul_targets.push(lookup[&(keys[i] + key)]);
            }
            mul_offsets.push(mul_targets.len());
        }

        let below = if kmax == 0 { 0 } else { counts[kmax - 1] };
        let deriv = (0..nvars)
            .map(|v| {
                let unit = 1u64 << (8 * v);
                keys[..below].iter().map(|k| lookup[&(k + unit)]).collect()
            })
            .collect();

        let conj = if nvars.is_multiple_of(2) {
            let half = nvars / 2;
            monomials
                .iter()
                .map(|m| {
                    let mut s = m[half..].to_vec();
                    s.extend_from_slice(&m[..half]);
                    lookup[&pack(&s)]
                })
                .collect()
        } else {
            Vec::new()
        };

        JetSpace {
            nvars,
            kmax,
            exps,
            degree,
            counts,
            mul_offsets,
            mul_targets,
            deriv,
            conj,
            factorials,
            lookup,
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn kmax(&self) -> usize {
        self.kmax
    }

    /// Number of monomials of degree at most `order`.
    pub fn count(&self, order: usize) -> usize {
        self.counts[order]
    }

    pub fn exponents(&self, index: usize) -> &[u8] {
        &self.exps[index * self.nvars..(index + 1) * self.nvars]
    }

    pub fn degree(&self, index: usize) -> usize {
        self.degree[index] as usize
    }

    /// Product of the factorials of the exponents of monomial `index`.
    pub fn factorial_weight(&self, index: usize) -> f64 {
        self.factorials[index]
    }

    pub fn index_of(&self, exps: &[u8]) -> Option<usize> {
        if exps.len() != self.nvars {
            return None;
        }
        self.lookup.get(&pack(exps)).map(|&i| i as usize)
    }

    pub(crate) fn mul_row(&self, index: usize) -> &[u32] {
        &self.mul_targets[self.mul_offsets[index]..self.mul_offsets[index + 1]]
    }

    pub(crate) fn deriv_targets(&self, var: usize) -> &[u32] {
        &self.deriv[var]
    }

    pub(crate) fn conj_map(&self) -> &[u32] {
        &self.conj
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}
