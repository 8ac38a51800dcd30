//! Sparse complex polynomials in the Cartesian coordinates of R^D.
//!
//! Every tensorial object in the crate is stored through its generating
//! polynomial, so this module is the arithmetic backbone: products,
//! derivatives, the Laplacian and multiplication by r^2 are all that the
//! projector calculus needs.

use crate::C64;
use std::collections::BTreeMap;

/// Exponent vector of one monomial, length = ambient dimension.
pub type Exps = Vec<u8>;

/// Sparse polynomial with complex coefficients, keyed by exponent vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    pub dim: usize,
    terms: BTreeMap<Exps, C64>,
}

/// Coefficients below this magnitude are dropped on insertion.
const DROP: f64 = 0.0;

impl Poly {
    pub fn zero(dim: usize) -> Self {
        Poly {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, c: C64) -> Self {
        let mut p = Poly::zero(dim);
        p.add_term(vec![0; dim], c);
        p
    }

    /// The monomial with the given exponent vector.
    pub fn monomial(dim: usize, exps: Exps, c: C64) -> Self {
        assert_eq!(exps.len(), dim);
        let mut p = Poly::zero(dim);
        p.add_term(exps, c);
        p
    }

    /// The coordinate x_i (1-based).
    pub fn var(dim: usize, i: usize) -> Self {
        assert!((1..=dim).contains(&i));
        let mut e = vec![0u8; dim];
        e[i - 1] = 1;
        Poly::monomial(dim, e, C64::new(1.0, 0.0))
    }

    pub fn add_term(&mut self, exps: Exps, c: C64) {
        if c.norm_sqr() == 0.0 {
            return;
        }
        let entry = self.terms.entry(exps).or_insert(C64::new(0.0, 0.0));
        *entry += c;
        if entry.norm() <= DROP {
            // keep exact zeros out of the map
            if entry.re == 0.0 && entry.im == 0.0 {
                let key = self
                    .terms
                    .iter()
                    .find(|(_, v)| v.re == 0.0 && v.im == 0.0)
                    .map(|(k, _)| k.clone());
                if let Some(k) = key {
                    self.terms.remove(&k);
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exps, &C64)> {
        self.terms.iter()
    }

    pub fn coeff(&self, exps: &[u8]) -> C64 {
        self.terms.get(exps).copied().unwrap_or(C64::new(0.0, 0.0))
    }

    pub fn add(&self, other: &Poly) -> Poly {
        assert_eq!(self.dim, other.dim);
        let mut out = self.clone();
        for (e, c) in other.terms.iter() {
            out.add_term(e.clone(), *c);
        }
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: C64) -> Poly {
        let mut out = Poly::zero(self.dim);
        if c.re == 0.0 && c.im == 0.0 {
            return out;
        }
        for (e, v) in self.terms.iter() {
            out.terms.insert(e.clone(), *v * c);
        }
        out
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        assert_eq!(self.dim, other.dim);
        let mut out = Poly::zero(self.dim);
        for (ea, ca) in self.terms.iter() {
            for (eb, cb) in other.terms.iter() {
                let e: Exps = ea.iter().zip(eb.iter()).map(|(a, b)| a + b).collect();
                out.add_term(e, *ca * *cb);
            }
        }
        out
    }

    /// Multiply by the coordinate x_i (1-based).
    pub fn mul_var(&self, i: usize) -> Poly {
        let mut out = Poly::zero(self.dim);
        for (e, c) in self.terms.iter() {
            let mut e2 = e.clone();
            e2[i - 1] += 1;
            out.terms.insert(e2, *c);
        }
        out
    }

    /// Partial derivative with respect to x_i (1-based).
    pub fn diff(&self, i: usize) -> Poly {
        let mut out = Poly::zero(self.dim);
        for (e, c) in self.terms.iter() {
            let k = e[i - 1];
            if k > 0 {
                let mut e2 = e.clone();
                e2[i - 1] -= 1;
                out.add_term(e2, *c * C64::new(k as f64, 0.0));
            }
        }
        out
    }

    pub fn laplacian(&self) -> Poly {
        let mut out = Poly::zero(self.dim);
        for i in 1..=self.dim {
            out = out.add(&self.diff(i).diff(i));
        }
        out
    }

    /// Multiply by r^2 = sum_i x_i^2.
    pub fn mul_r2(&self) -> Poly {
        let mut out = Poly::zero(self.dim);
        for i in 1..=self.dim {
            out = out.add(&self.mul_var(i).mul_var(i));
        }
        out
    }

    pub fn degree(&self) -> usize {
        self.terms
            .keys()
            .map(|e| e.iter().map(|&k| k as usize).sum())
            .max()
            .unwrap_or(0)
    }

    /// Split into homogeneous components keyed by degree.
    pub fn homogeneous_parts(&self) -> BTreeMap<usize, Poly> {
        let mut out: BTreeMap<usize, Poly> = BTreeMap::new();
        for (e, c) in self.terms.iter() {
            let deg: usize = e.iter().map(|&k| k as usize).sum();
            out.entry(deg)
                .or_insert_with(|| Poly::zero(self.dim))
                .add_term(e.clone(), *c);
        }
        out
    }

    pub fn eval(&self, x: &[f64]) -> C64 {
        assert_eq!(x.len(), self.dim);
        let mut acc = C64::new(0.0, 0.0);
        for (e, c) in self.terms.iter() {
            let mut m = 1.0;
            for (xi, &k) in x.iter().zip(e.iter()) {
                m *= xi.powi(k as i32);
            }
            acc += *c * C64::new(m, 0.0);
        }
        acc
    }

    /// Apply a signed permutation of the variables: x_i -> sign[i] * x_{perm[i]}
    /// (both arrays 0-based over variables). Returns p(Q x) for the map Q so
    /// defined.
    pub fn substitute_signed_permutation(&self, perm: &[usize], sign: &[f64]) -> Poly {
        assert_eq!(perm.len(), self.dim);
        let mut out = Poly::zero(self.dim);
        for (e, c) in self.terms.iter() {
            let mut e2 = vec![0u8; self.dim];
            let mut s = 1.0;
            for (i, &k) in e.iter().enumerate() {
                e2[perm[i]] += k;
                if k % 2 == 1 && sign[i] < 0.0 {
                    s = -s;
                }
            }
            out.add_term(e2, *c * C64::new(s, 0.0));
        }
        out
    }

    /// Embed into a larger ambient dimension (extra trailing variables).
    pub fn embed(&self, dim: usize) -> Poly {
        assert!(dim >= self.dim);
        let mut out = Poly::zero(dim);
        for (e, c) in self.terms.iter() {
            let mut e2 = e.clone();
            e2.resize(dim, 0);
            out.terms.insert(e2, *c);
        }
        out
    }

    /// Largest coefficient magnitude.
    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Largest imaginary part magnitude over the coefficients.
    pub fn max_imag(&self) -> f64 {
        self.terms
            .values()
            .map(|c| c.im.abs())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn arithmetic_round_trip() {
        let x1 = Poly::var(3, 1);
        let x2 = Poly::var(3, 2);
        let p = x1.mul(&x2).add(&Poly::constant(3, c(2.0)));
        assert_eq!(p.eval(&[1.0, 3.0, 0.0]), c(5.0));
        assert_eq!(p.diff(1), x2);
        assert!(p.diff(3).is_zero());
    }

    #[test]
    fn laplacian_of_r2() {
        let p = Poly::constant(4, c(1.0)).mul_r2();
        let lap = p.laplacian();
        assert_eq!(lap.coeff(&[0, 0, 0, 0]), c(8.0));
        assert_eq!(lap.num_terms(), 1);
    }

    #[test]
    fn signed_permutation() {
        // x1 -> -x2, x2 -> x1
        let p = Poly::var(2, 1).mul(&Poly::var(2, 2)); // x1 x2
        let q = p.substitute_signed_permutation(&[1, 0], &[-1.0, 1.0]);
        // becomes (-x2) * x1
        assert_eq!(q.coeff(&[1, 1]), c(-1.0));
    }
}
