use super::Polynomial;
use crate::Scalar;

/// Flat evaluation plan for a polynomial, used in integrator hot loops.
#[derive(Clone, Debug)]
pub struct CompiledPoly<T: Scalar> {
    coefs: Vec<T>,
    // (var, exponent) factors per term, stored contiguously
    offsets: Vec<u32>,
    factors: Vec<(u32, u8)>,
}

impl<T: Scalar> CompiledPoly<T> {
    pub fn new(p: &Polynomial<T>) -> Self {
        let mut coefs = Vec::with_capacity(p.len());
        let mut offsets = Vec::with_capacity(p.len() + 1);
        let mut factors = Vec::new();
        offsets.push(0);
        for (m, c) in p.terms() {
            coefs.push(*c);
            for (v, &e) in m.exponents().iter().enumerate() {
                if e != 0 {
                    factors.push((v as u32, e));
                }
            }
            offsets.push(factors.len() as u32);
        }
        Self {
            coefs,
            offsets,
            factors,
        }
    }

    #[inline]
    pub fn eval(&self, x: &[T]) -> T {
        let mut acc = T::zero();
        for (t, &c) in self.coefs.iter().enumerate() {
            let mut v = c;
            let (lo, hi) = (self.offsets[t] as usize, self.offsets[t + 1] as usize);
            for &(var, e) in &self.factors[lo..hi] {
                let xv = x[var as usize];
                v = v * match e {
                    1 => xv,
                    2 => xv * xv,
                    3 => xv * xv * xv,
                    _ => xv.powi(i32::from(e)),
                };
            }
            acc = acc + v;
        }
        acc
    }
}
