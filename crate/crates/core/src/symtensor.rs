//! Compressed symmetric tensors and the trace-free symmetric projector calculus.
//!
//! A totally symmetric rank-l tensor over indices 1..D is stored as a map
//! from sorted multi-indices to components; equivalently (and internally)
//! as the degree-l polynomial `p(x) = sum_m mult(m) S_m x^m`, where `mult`
//! is the number of distinct permutations of the multi-index. Under this
//! correspondence
//!
//! * full symmetrization is the identity,
//! * a trace over any index pair is `lap(p) / (l (l-1))`,
//! * inserting a symmetrized metric factor is multiplication by `r^2`,
//!
//! so the projector to the trace-free symmetric part acts as the projection
//! of `p` onto its harmonic component. The production implementation builds
//! that action level by level through the two-slot recursion with
//! `M(l+1) = (1 + l P - (2Dl/(D+2l-2)) Pt) / (l+1)`; the closed-form
//! iterated-detracing formula is kept as an independent oracle for tests,
//! and a dense slot-explicit evaluation lives in [`dense`] for
//! cross-validation.

use crate::error::{Error, Result};
use crate::gammafn::{double_factorial, factorial, sphere_measure};
use crate::poly::{Exps, Poly};
use crate::C64;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};

/// Sorted multi-index: non-decreasing list of indices in 1..=D.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiIndex(pub Vec<u8>);

impl MultiIndex {
    /// Sorts the given indices; validates the range 1..=dim.
    pub fn new(mut idx: Vec<u8>, dim: usize) -> Result<Self> {
        if idx.iter().any(|&i| i == 0 || i as usize > dim) {
            return Err(Error::Argument(format!(
                "multi-index {idx:?} out of range 1..={dim}"
            )));
        }
        idx.sort_unstable();
        Ok(MultiIndex(idx))
    }

    pub fn rank(&self) -> usize {
        self.0.len()
    }

    /// Exponent vector of the associated monomial.
    pub fn to_exps(&self, dim: usize) -> Exps {
        let mut e = vec![0u8; dim];
        for &i in &self.0 {
            e[i as usize - 1] += 1;
        }
        e
    }

    pub fn from_exps(e: &[u8]) -> Self {
        let mut idx = Vec::new();
        for (i, &k) in e.iter().enumerate() {
            for _ in 0..k {
                idx.push(i as u8 + 1);
            }
        }
        MultiIndex(idx)
    }

    /// Number of distinct permutations of the entries.
    pub fn multiplicity(&self) -> f64 {
        let mut counts: BTreeMap<u8, u64> = BTreeMap::new();
        for &i in &self.0 {
            *counts.entry(i).or_insert(0) += 1;
        }
        let mut m = factorial(self.0.len() as u64);
        for c in counts.values() {
            m /= factorial(*c);
        }
        m
    }
}

/// All sorted multi-indices of the given rank, in lexicographic order.
pub fn sorted_multi_indices(dim: usize, rank: usize) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(rank);
    fn rec(dim: usize, rank: usize, start: u8, cur: &mut Vec<u8>, out: &mut Vec<MultiIndex>) {
        if cur.len() == rank {
            out.push(MultiIndex(cur.clone()));
            return;
        }
        for i in start..=dim as u8 {
            cur.push(i);
            rec(dim, rank, i, cur, out);
            cur.pop();
        }
    }
    rec(dim, rank, 1, &mut cur, &mut out);
    out
}

/// Totally symmetric tensor in compressed (multiset-index) storage.
///
/// A stored sorted index carries no combinatorial weight: the logical
/// component at any permutation of the index equals the stored value, and
/// contraction routines account for expansion multiplicities explicitly.
#[derive(Clone, Debug, PartialEq)]
pub struct SymTensor {
    pub dim: usize,
    pub rank: usize,
    coeffs: BTreeMap<MultiIndex, C64>,
}

impl SymTensor {
    pub fn zero(dim: usize, rank: usize) -> Self {
        SymTensor {
            dim,
            rank,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn set(&mut self, idx: MultiIndex, value: C64) {
        assert_eq!(idx.rank(), self.rank);
        if value.re == 0.0 && value.im == 0.0 {
            self.coeffs.remove(&idx);
        } else {
            self.coeffs.insert(idx, value);
        }
    }

    pub fn get(&self, idx: &MultiIndex) -> C64 {
        self.coeffs.get(idx).copied().unwrap_or(C64::new(0.0, 0.0))
    }

    pub fn entries(&self) -> impl Iterator<Item = (&MultiIndex, &C64)> {
        self.coeffs.iter()
    }

    pub fn num_entries(&self) -> usize {
        self.coeffs.len()
    }

    /// Generating polynomial `sum_m mult(m) S_m x^m`.
    pub fn to_poly(&self) -> Poly {
        let mut p = Poly::zero(self.dim);
        for (m, c) in self.coeffs.iter() {
            p.add_term(m.to_exps(self.dim), *c * C64::new(m.multiplicity(), 0.0));
        }
        p
    }

    /// Inverse of [`SymTensor::to_poly`]; `p` must be homogeneous of the
    /// given rank (zero polynomial allowed).
    pub fn from_poly(p: &Poly, rank: usize) -> Self {
        let mut t = SymTensor::zero(p.dim, rank);
        for (e, c) in p.terms() {
            let deg: usize = e.iter().map(|&k| k as usize).sum();
            assert_eq!(deg, rank, "inhomogeneous polynomial for rank-{rank} tensor");
            let m = MultiIndex::from_exps(e);
            let mult = m.multiplicity();
            t.set(m, *c / C64::new(mult, 0.0));
        }
        t
    }

    pub fn scale(&self, c: C64) -> SymTensor {
        let mut out = SymTensor::zero(self.dim, self.rank);
        for (m, v) in self.coeffs.iter() {
            out.set(m.clone(), *v * c);
        }
        out
    }

    pub fn add(&self, other: &SymTensor) -> SymTensor {
        assert_eq!((self.dim, self.rank), (other.dim, other.rank));
        let mut out = self.clone();
        for (m, v) in other.coeffs.iter() {
            out.set(m.clone(), out.get(m) + *v);
        }
        out
    }

    pub fn sub(&self, other: &SymTensor) -> SymTensor {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    /// Max-abs over stored components.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Sum over all D^l index tuples of conj(self) * other.
    pub fn dot_full(&self, other: &SymTensor) -> C64 {
        assert_eq!((self.dim, self.rank), (other.dim, other.rank));
        let mut acc = C64::new(0.0, 0.0);
        for (m, v) in self.coeffs.iter() {
            let w = other.get(m);
            acc += v.conj() * w * C64::new(m.multiplicity(), 0.0);
        }
        acc
    }
}

/// Serialized form: `{dim, rank, entries: [{idx, re, im}]}`.
#[derive(Serialize, Deserialize)]
struct SymTensorRepr {
    dim: usize,
    rank: usize,
    entries: Vec<SymTensorEntry>,
}

#[derive(Serialize, Deserialize)]
struct SymTensorEntry {
    idx: Vec<u8>,
    re: f64,
    im: f64,
}

impl Serialize for SymTensor {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let repr = SymTensorRepr {
            dim: self.dim,
            rank: self.rank,
            entries: self
                .coeffs
                .iter()
                .map(|(m, c)| SymTensorEntry {
                    idx: m.0.clone(),
                    re: c.re,
                    im: c.im,
                })
                .collect(),
        };
        repr.serialize(s)
    }
}

impl<'de> Deserialize<'de> for SymTensor {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = SymTensorRepr::deserialize(d)?;
        let mut t = SymTensor::zero(repr.dim, repr.rank);
        for e in repr.entries {
            let m = MultiIndex::new(e.idx, repr.dim).map_err(serde::de::Error::custom)?;
            t.set(m, C64::new(e.re, e.im));
        }
        Ok(t)
    }
}

/// Cached action of the trace-free symmetric projectors P^0 .. P^lmax for a
/// fixed ambient dimension.
///
/// Immutable after construction; all apply methods are pure.
pub struct ProjectorOracle {
    pub dim: usize,
    pub max_rank: usize,
    tables: Vec<ProjTable>,
}

struct ProjTable {
    basis: Vec<Exps>,
    index: HashMap<Exps, usize>,
    /// `cols[j][i]` = coefficient of `basis[i]` in P^r x^{basis[j]}.
    cols: Vec<Vec<f64>>,
}

impl ProjTable {
    fn apply_poly(&self, p: &Poly, dim: usize) -> Poly {
        let mut out = Poly::zero(dim);
        for (e, c) in p.terms() {
            let j = *self
                .index
                .get(e)
                .unwrap_or_else(|| panic!("monomial {e:?} outside projector table"));
            for (i, w) in self.cols[j].iter().enumerate() {
                if *w != 0.0 {
                    out.add_term(self.basis[i].clone(), *c * C64::new(*w, 0.0));
                }
            }
        }
        out
    }
}

impl ProjectorOracle {
    /// Builds the projector tables for ranks 0..=max_rank via the two-slot
    /// recursion; cost is polynomial in the compressed basis sizes.
    pub fn new(dim: usize, max_rank: usize) -> Self {
        assert!(dim >= 2, "ambient dimension must be at least 2");
        let mut tables: Vec<ProjTable> = Vec::with_capacity(max_rank + 1);
        for r in 0..=max_rank {
            let basis: Vec<Exps> = sorted_multi_indices(dim, r)
                .iter()
                .map(|m| m.to_exps(dim))
                .collect();
            let index: HashMap<Exps, usize> = basis
                .iter()
                .enumerate()
                .map(|(i, e)| (e.clone(), i))
                .collect();
            let n = basis.len();
            let mut cols = vec![vec![0.0; n]; n];
            if r <= 1 {
                for (j, col) in cols.iter_mut().enumerate() {
                    col[j] = 1.0;
                }
            } else {
                let lm1 = r - 1;
                let trace_coef = 2.0 / (dim + 2 * lm1 - 2) as f64;
                let prev = &tables[r - 1];
                for j in 0..n {
                    let p = Poly::monomial(dim, basis[j].clone(), C64::new(1.0, 0.0));
                    // slot split: t_i = d_i p / r
                    let t: Vec<Poly> = (1..=dim)
                        .map(|i| p.diff(i).scale(C64::new(1.0 / r as f64, 0.0)))
                        .collect();
                    let u: Vec<Poly> = t.iter().map(|q| prev.apply_poly(q, dim)).collect();
                    // v_i = (u_i + sum_j x^j d_i u_j - trace_coef x^i sum_h d_h u_h) / r
                    let mut s = Poly::zero(dim);
                    for (h, uh) in u.iter().enumerate() {
                        s = s.add(&uh.diff(h + 1));
                    }
                    let out_cols: Vec<Poly> = (1..=dim)
                        .map(|i| {
                            let mut v = u[i - 1].clone();
                            for (jj, uj) in u.iter().enumerate() {
                                v = v.add(&uj.diff(i).mul_var(jj + 1));
                            }
                            v = v.sub(&s.mul_var(i).scale(C64::new(trace_coef, 0.0)));
                            v = v.scale(C64::new(1.0 / r as f64, 0.0));
                            prev.apply_poly(&v, dim)
                        })
                        .collect();
                    let mut result = Poly::zero(dim);
                    for (i, w) in out_cols.iter().enumerate() {
                        result = result.add(&w.mul_var(i + 1));
                    }
                    for (e, c) in result.terms() {
                        cols[j][*index.get(e).expect("projected monomial in basis")] = c.re;
                    }
                }
            }
            tables.push(ProjTable { basis, index, cols });
        }
        ProjectorOracle {
            dim,
            max_rank,
            tables,
        }
    }

    fn table(&self, rank: usize) -> Result<&ProjTable> {
        self.tables.get(rank).ok_or_else(|| {
            Error::Config(format!(
                "projector oracle caches ranks 0..={}, got {rank}",
                self.max_rank
            ))
        })
    }

    /// P^r applied to a homogeneous degree-r polynomial (its harmonic part).
    pub fn project_poly(&self, p: &Poly, rank: usize) -> Result<Poly> {
        if p.dim != self.dim {
            return Err(Error::Config(format!(
                "oracle dimension {} does not match input dimension {}",
                self.dim, p.dim
            )));
        }
        Ok(self.table(rank)?.apply_poly(p, self.dim))
    }

    /// P^l t for a symmetric tensor t; the result is symmetric and every
    /// single-trace contraction of it vanishes.
    pub fn project_trace_free(&self, t: &SymTensor) -> Result<SymTensor> {
        if t.dim != self.dim {
            return Err(Error::Config(format!(
                "oracle dimension {} does not match tensor dimension {}",
                self.dim, t.dim
            )));
        }
        let p = self.project_poly(&t.to_poly(), t.rank)?;
        Ok(SymTensor::from_poly(&p, t.rank))
    }

    /// Row of P^l with upper multi-index `m`: the coefficient tensor of the
    /// generator T_l^m. Equals the projection of the plain monomial x^m.
    pub fn projector_row(&self, m: &MultiIndex) -> Result<SymTensor> {
        let p = Poly::monomial(self.dim, m.to_exps(self.dim), C64::new(1.0, 0.0));
        let q = self.project_poly(&p, m.rank())?;
        Ok(SymTensor::from_poly(&q, m.rank()))
    }
}

/// M(l+1) applied to a rank-2 (pair-slot) tensor given as a D x D matrix:
/// `(1 + l P - (2Dl/(D+2l-2)) Pt) / (l+1)`.
pub fn apply_m(l: usize, dim: usize, a: &nalgebra::DMatrix<C64>) -> nalgebra::DMatrix<C64> {
    assert_eq!(a.nrows(), dim);
    assert_eq!(a.ncols(), dim);
    let lp1 = (l + 1) as f64;
    let trace_coef = if l == 0 {
        0.0
    } else {
        2.0 * dim as f64 * l as f64 / (dim + 2 * l - 2) as f64
    };
    let tr: C64 = (0..dim).map(|i| a[(i, i)]).sum();
    let mut out = a.clone();
    out += a.transpose().scale(l as f64);
    let diag = tr * C64::new(trace_coef / dim as f64, 0.0);
    for i in 0..dim {
        out[(i, i)] -= diag;
    }
    out.unscale(lp1)
}

/// Contraction of one index pair of a symmetric tensor; the slot labels only
/// need to be distinct and in range (all pairs of a symmetric tensor agree).
pub fn contract_pair(t: &SymTensor, slots: (usize, usize)) -> Result<SymTensor> {
    if t.rank < 2 {
        return Err(Error::Argument(format!(
            "contraction needs rank >= 2, got {}",
            t.rank
        )));
    }
    let (a, b) = slots;
    if a == b || a >= t.rank || b >= t.rank {
        return Err(Error::Argument(format!(
            "invalid slot pair ({a},{b}) for rank {}",
            t.rank
        )));
    }
    let denom = (t.rank * (t.rank - 1)) as f64;
    let p = t.to_poly().laplacian().scale(C64::new(1.0 / denom, 0.0));
    Ok(SymTensor::from_poly(&p, t.rank - 2))
}

/// Closed-form iterated detracing, kept as an independent oracle for the
/// recursion-based projector: harm(p) = sum_j c_j r^{2j} lap^j p with
/// c_j = (-1)^j (D+2l-2j-4)!! / ((2j)!! (D+2l-4)!!).
pub fn detrace_closed_form(p: &Poly, rank: usize) -> Poly {
    let dim = p.dim as i64;
    let l = rank as i64;
    let mut out = Poly::zero(p.dim);
    let mut lap = p.clone();
    for j in 0..=(rank / 2) as i64 {
        let cj = if j == 0 {
            1.0
        } else {
            let num = double_factorial(dim + 2 * l - 2 * j - 4);
            let den = double_factorial(2 * j) * double_factorial(dim + 2 * l - 4);
            (if j % 2 == 0 { 1.0 } else { -1.0 }) * num / den
        };
        let mut term = lap.scale(C64::new(cj, 0.0));
        for _ in 0..j {
            term = term.mul_r2();
        }
        out = out.add(&term);
        lap = lap.laplacian();
    }
    out
}

/// Component-wise evaluator for the completely symmetric isotropic tensors
/// G_N of even rank N: the sum over all N! products of Kronecker pairings.
pub struct PairingSum {
    pub n_bar: usize,
}

impl PairingSum {
    pub fn new(n_bar: usize) -> Result<Self> {
        if n_bar % 2 != 0 {
            return Err(Error::Argument(format!(
                "isotropic pairing sums need an even rank, got {n_bar}"
            )));
        }
        Ok(PairingSum { n_bar })
    }

    /// G_N at a concrete index tuple. Each of the (N-1)!! distinct perfect
    /// pairings contributes 2^{N/2} (N/2)! equal terms, and a pairing
    /// survives iff it matches equal indices, so the value is
    /// 2^{N/2} (N/2)! prod_i (count_i - 1)!! when all counts are even.
    pub fn component(&self, idx: &[u8]) -> f64 {
        assert_eq!(idx.len(), self.n_bar);
        if self.n_bar == 0 {
            return 1.0;
        }
        let mut counts: BTreeMap<u8, u64> = BTreeMap::new();
        for &i in idx {
            *counts.entry(i).or_insert(0) += 1;
        }
        if counts.values().any(|c| c % 2 == 1) {
            return 0.0;
        }
        let s = (self.n_bar / 2) as u64;
        let mut v = 2f64.powi(s as i32) * factorial(s);
        for c in counts.values() {
            v *= double_factorial(*c as i64 - 1);
        }
        v
    }

    /// Same component by explicit enumeration of perfect pairings; O((N-1)!!),
    /// used to cross-check [`PairingSum::component`].
    pub fn component_bruteforce(&self, idx: &[u8]) -> f64 {
        assert_eq!(idx.len(), self.n_bar);
        if self.n_bar == 0 {
            return 1.0;
        }
        fn count_pairings(remaining: &mut Vec<u8>) -> f64 {
            if remaining.is_empty() {
                return 1.0;
            }
            let first = remaining.remove(0);
            let mut acc = 0.0;
            for j in 0..remaining.len() {
                if remaining[j] == first {
                    let v = remaining.remove(j);
                    acc += count_pairings(remaining);
                    remaining.insert(j, v);
                }
            }
            remaining.insert(0, first);
            acc
        }
        let mut v = idx.to_vec();
        let s = (self.n_bar / 2) as u64;
        count_pairings(&mut v) * 2f64.powi(s as i32) * factorial(s)
    }

    /// Closed-form full trace: N!! D (D+2) ... (D+N-2).
    pub fn trace(&self, dim: usize) -> f64 {
        let mut v = double_factorial(self.n_bar as i64);
        for i in 0..self.n_bar / 2 {
            v *= (dim + 2 * i) as f64;
        }
        v
    }

    /// Full trace by summing components over all pairing tuples; oracle for
    /// [`PairingSum::trace`].
    pub fn trace_by_components(&self, dim: usize) -> f64 {
        let half = self.n_bar / 2;
        let mut acc = 0.0;
        let mut tuple = vec![1u8; half];
        loop {
            let mut idx = Vec::with_capacity(self.n_bar);
            for &t in &tuple {
                idx.push(t);
                idx.push(t);
            }
            acc += self.component(&idx);
            // increment the tuple in base `dim`
            let mut pos = 0;
            loop {
                if pos == half {
                    return acc;
                }
                if (tuple[pos] as usize) < dim {
                    tuple[pos] += 1;
                    break;
                }
                tuple[pos] = 1;
                pos += 1;
            }
        }
    }
}

/// Moment of a monomial over the unit sphere in `dim` variables:
/// integral of prod_i t_i^{e_i} d alpha. Zero for odd total degree.
pub fn moment(dim: usize, exps: &[u8]) -> f64 {
    assert_eq!(exps.len(), dim);
    let n_bar: usize = exps.iter().map(|&k| k as usize).sum();
    if n_bar % 2 == 1 {
        return 0.0;
    }
    if exps.iter().any(|&k| k % 2 == 1) {
        return 0.0;
    }
    // mis(S^d) prod_i (e_i - 1)!! / [D (D+2) ... (D+N-2)]
    let mut v = sphere_measure(dim as u32 - 1);
    for &k in exps {
        v *= double_factorial(k as i64 - 1);
    }
    for i in 0..n_bar / 2 {
        v /= (dim + 2 * i) as f64;
    }
    v
}

/// O(D)-invariant moment of rank N at a multi-index: C_N G_N^{i1..iN}.
/// Odd ranks integrate to zero.
pub fn sphere_moment_integral(dim: usize, idx: &MultiIndex) -> f64 {
    moment(dim, &idx.to_exps(dim))
}

/// Exact L^2(S^d) inner product of two polynomials (antilinear in the first
/// argument), via the isotropic moments.
pub fn sphere_inner_product(p: &Poly, q: &Poly) -> C64 {
    assert_eq!(p.dim, q.dim);
    let mut acc = C64::new(0.0, 0.0);
    for (ea, ca) in p.terms() {
        for (eb, cb) in q.terms() {
            let e: Vec<u8> = ea.iter().zip(eb.iter()).map(|(a, b)| a + b).collect();
            let m = moment(p.dim, &e);
            if m != 0.0 {
                acc += ca.conj() * *cb * C64::new(m, 0.0);
            }
        }
    }
    acc
}

pub mod dense;

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn mi(v: &[u8]) -> MultiIndex {
        MultiIndex(v.to_vec())
    }

    #[test]
    fn multiplicities() {
        assert_eq!(mi(&[1, 1]).multiplicity(), 1.0);
        assert_eq!(mi(&[1, 2]).multiplicity(), 2.0);
        assert_eq!(mi(&[1, 2, 3]).multiplicity(), 6.0);
        assert_eq!(mi(&[1, 1, 2]).multiplicity(), 3.0);
    }

    #[test]
    fn rank_zero_and_one_projectors_are_identities() {
        let oracle = ProjectorOracle::new(3, 2);
        let mut t = SymTensor::zero(3, 1);
        t.set(mi(&[2]), c(1.5));
        assert_eq!(oracle.project_trace_free(&t).unwrap(), t);
        let s = SymTensor::from_poly(&Poly::constant(3, c(2.0)), 0);
        assert_eq!(oracle.project_trace_free(&s).unwrap(), s);
    }

    #[test]
    fn project_e1_e1_in_d3() {
        // P (e1 x e1) = diag(2/3, -1/3, -1/3)
        let oracle = ProjectorOracle::new(3, 2);
        let mut t = SymTensor::zero(3, 2);
        t.set(mi(&[1, 1]), c(1.0));
        let p = oracle.project_trace_free(&t).unwrap();
        assert!((p.get(&mi(&[1, 1])) - c(2.0 / 3.0)).norm() < 1e-15);
        assert!((p.get(&mi(&[2, 2])) - c(-1.0 / 3.0)).norm() < 1e-15);
        assert!((p.get(&mi(&[3, 3])) - c(-1.0 / 3.0)).norm() < 1e-15);
        assert!((p.get(&mi(&[1, 2]))).norm() < 1e-15);
    }

    #[test]
    fn monomial_x1x2x3_already_trace_free() {
        let oracle = ProjectorOracle::new(3, 3);
        let mut t = SymTensor::zero(3, 3);
        t.set(mi(&[1, 2, 3]), c(1.0));
        let p = oracle.project_trace_free(&t).unwrap();
        assert!((p.get(&mi(&[1, 2, 3])) - c(1.0)).norm() < 1e-14);
        assert_eq!(p.num_entries(), 1);
    }

    #[test]
    fn recursion_matches_detracing_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for dim in 2..=4usize {
            let oracle = ProjectorOracle::new(dim, 5);
            for rank in 2..=5usize {
                let mut p = Poly::zero(dim);
                for m in sorted_multi_indices(dim, rank) {
                    p.add_term(
                        m.to_exps(dim),
                        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                    );
                }
                let a = oracle.project_poly(&p, rank).unwrap();
                let b = detrace_closed_form(&p, rank);
                assert!(a.sub(&b).max_abs() < 1e-12 * p.max_abs().max(1.0));
            }
        }
    }

    #[test]
    fn apply_m_examples() {
        use nalgebra::DMatrix;
        // l=1, D=3, e1 x e2 -> symmetrized pair
        let mut a = DMatrix::from_element(3, 3, c(0.0));
        a[(0, 1)] = c(1.0);
        let out = apply_m(1, 3, &a);
        assert!((out[(0, 1)] - c(0.5)).norm() < 1e-15);
        assert!((out[(1, 0)] - c(0.5)).norm() < 1e-15);
        assert!(out[(0, 0)].norm() < 1e-15);
        // pure trace input dies for l=1, any D
        for dim in 2..=5 {
            let eye = DMatrix::from_diagonal_element(dim, dim, c(1.0));
            let out = apply_m(1, dim, &eye);
            assert!(out.iter().all(|z| z.norm() < 1e-15));
        }
        // M(1) is the identity
        let mut b = DMatrix::from_element(2, 2, c(0.0));
        b[(1, 0)] = c(3.0);
        assert_eq!(apply_m(0, 2, &b), b);
    }

    #[test]
    fn contraction_examples() {
        let oracle = ProjectorOracle::new(3, 2);
        let mut t = SymTensor::zero(3, 2);
        t.set(mi(&[1, 1]), c(1.0));
        let p = oracle.project_trace_free(&t).unwrap();
        let tr = contract_pair(&p, (0, 1)).unwrap();
        assert!(tr.max_abs() < 1e-15);

        let mut id = SymTensor::zero(3, 2);
        for i in 1..=3 {
            id.set(mi(&[i, i]), c(1.0));
        }
        let tr = contract_pair(&id, (0, 1)).unwrap();
        assert!((tr.get(&MultiIndex(vec![])) - c(3.0)).norm() < 1e-15);

        assert!(contract_pair(&tr, (0, 1)).is_err());
    }

    #[test]
    fn partial_trace_scalar_of_projector() {
        // sum_h P^{l+1}[h, m; h, n] = (D + l - 2l/(D+2l-2)) / (l+1) * P^l[m; n]
        for (dim, l) in [(3usize, 1usize), (3, 2), (4, 2), (2, 3)] {
            let oracle = ProjectorOracle::new(dim, l + 1);
            let expected = (dim as f64 + l as f64
                - 2.0 * l as f64 / (dim + 2 * l - 2) as f64)
                / (l + 1) as f64;
            for m in sorted_multi_indices(dim, l) {
                let pm = oracle
                    .project_poly(
                        &Poly::monomial(dim, m.to_exps(dim), c(1.0)),
                        l,
                    )
                    .unwrap();
                // lhs = sum_h (slot-restriction to h of P^{l+1}(x^h x^m))
                let mut lhs = Poly::zero(dim);
                for h in 1..=dim {
                    let q = oracle
                        .project_poly(
                            &Poly::monomial(dim, m.to_exps(dim), c(1.0)).mul_var(h),
                            l + 1,
                        )
                        .unwrap();
                    lhs = lhs.add(&q.diff(h).scale(c(1.0 / (l as f64 + 1.0))));
                }
                let resid = lhs.sub(&pm.scale(c(expected))).max_abs();
                assert!(resid < 1e-12, "dim={dim} l={l} residual {resid}");
            }
        }
        // frozen value: D=3, l=1 gives (1/2)(3 + 1 - 2/3) = 5/3
        let v = (3.0f64 + 1.0 - 2.0 / 3.0) / 2.0;
        assert!((v - 5.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn pairing_sums() {
        let g2 = PairingSum::new(2).unwrap();
        assert_eq!(g2.component(&[1, 1]), 2.0);
        assert_eq!(g2.component(&[1, 2]), 0.0);
        for dim in 2..=5 {
            assert_eq!(g2.trace(dim), 2.0 * dim as f64);
            assert_eq!(g2.trace_by_components(dim), g2.trace(dim));
        }
        let g4 = PairingSum::new(4).unwrap();
        assert_eq!(g4.trace(3), 120.0); // 4!! * 3 * 5
        let g0 = PairingSum::new(0).unwrap();
        assert_eq!(g0.component(&[]), 1.0);
        assert_eq!(g0.trace(4), 1.0);
        assert!(PairingSum::new(3).is_err());

        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for n_bar in [2usize, 4, 6, 8] {
            let g = PairingSum::new(n_bar).unwrap();
            for dim in 2..=5u8 {
                assert!((g.trace_by_components(dim as usize) - g.trace(dim as usize)).abs() < 1e-9);
                for _ in 0..4 {
                    let idx: Vec<u8> = (0..n_bar).map(|_| rng.gen_range(1..=dim)).collect();
                    assert_eq!(g.component(&idx), g.component_bruteforce(&idx));
                }
            }
        }
    }

    #[test]
    fn sphere_moments() {
        // D=3: int t1 t1 = 4 pi / 3
        let v = sphere_moment_integral(3, &mi(&[1, 1]));
        assert!((v - 4.0 * std::f64::consts::PI / 3.0).abs() < 1e-12);
        // odd rank vanishes
        assert_eq!(sphere_moment_integral(3, &mi(&[1, 1, 2])), 0.0);
        // D=2: the empty moment is the circle length
        let v = moment(2, &[0, 0]);
        assert!((v - 2.0 * std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn sym_tensor_json_round_trip() {
        let mut t = SymTensor::zero(3, 2);
        t.set(mi(&[1, 2]), C64::new(0.5, -1.5));
        t.set(mi(&[3, 3]), c(2.0));
        let s = serde_json::to_string(&t).unwrap();
        assert!(s.contains("\"idx\""));
        let back: SymTensor = serde_json::from_str(&s).unwrap();
        assert_eq!(back, t);
    }
}
