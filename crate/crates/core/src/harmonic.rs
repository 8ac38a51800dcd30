//! The harmonic spaces V_D^l and their truncated direct sum.
//!
//! V_D^l is realized as the span of the complete set T_l^m = P^l t^{m},
//! one generator per sorted multi-index m; the set is overcomplete (its
//! linear relations are the vanishing traces), so an orthonormal basis is
//! extracted from the exact Gram matrix by pivoted Cholesky with a
//! deterministic lexicographic tie-break. All angular-momentum and
//! coordinate actions are computed by polynomial calculus on the basis
//! elements, never through spherical-harmonic tables.

use crate::error::{Error, Result};
use crate::gammafn::{binomial, double_factorial, factorial, sphere_measure};
use crate::linalg::orthonormal_coefficients;
use crate::poly::Poly;
use crate::symtensor::{sorted_multi_indices, MultiIndex, ProjectorOracle, SymTensor};
use crate::C64;
use nalgebra::{DMatrix, DVector};
use std::collections::BTreeMap;

/// dim V_D^l = dim W_D^l - dim W_D^{l-2} (binomial difference form, valid
/// for every D >= 2 including the D = 2 edge).
pub fn dim_v(dim: usize, l: usize) -> usize {
    let d = dim as i64;
    let l = l as i64;
    let w1 = binomial(d + l - 1, l);
    let w2 = if l >= 2 { binomial(d + l - 3, l - 2) } else { 0.0 };
    (w1 - w2).round() as usize
}

/// dim Pol_D^Lambda = dim W_D^Lambda + dim W_D^{Lambda-1}; equals
/// dim V_{D+1}^Lambda.
pub fn dim_truncated(dim: usize, lambda: usize) -> usize {
    let d = dim as i64;
    let lam = lambda as i64;
    let w1 = binomial(d + lam - 1, lam);
    let w2 = if lam >= 1 { binomial(d + lam - 2, lam - 1) } else { 0.0 };
    (w1 + w2).round() as usize
}

/// Q_l = mis(S^d) l! (D-2)!! / (D+2l-2)!!, the Gram normalization of the
/// trace-free coefficient pairing.
pub fn q_l(dim: usize, l: usize) -> f64 {
    sphere_measure(dim as u32 - 1) * factorial(l as u64) * double_factorial(dim as i64 - 2)
        / double_factorial(dim as i64 + 2 * l as i64 - 2)
}

/// Exact L^2(S^d) inner product of two harmonic polynomials of the same
/// degree l, through their trace-free coefficient tensors (antilinear on
/// the left).
pub fn harmonic_inner(dim: usize, l: usize, p: &Poly, q: &Poly) -> C64 {
    let ql = q_l(dim, l);
    let mut acc = C64::new(0.0, 0.0);
    for (e, cp) in p.terms() {
        let cq = q.coeff(e);
        if cq.re != 0.0 || cq.im != 0.0 {
            let mult = MultiIndex::from_exps(e).multiplicity();
            acc += cp.conj() * cq / C64::new(mult, 0.0);
        }
    }
    acc * C64::new(ql, 0.0)
}

/// iL_{hk} p = (x^h d_k - x^k d_h) p, the rotation generator as a
/// differential operator (1-based axes).
pub fn il_poly(p: &Poly, h: usize, k: usize) -> Poly {
    p.diff(k).mul_var(h).sub(&p.diff(h).mul_var(k))
}

/// One harmonic level: generators, Gram data and an orthonormal basis.
pub struct HarmonicSpace {
    pub dim: usize,
    pub l: usize,
    /// Sorted multi-index labels of the generators T_l^m, lexicographic.
    pub labels: Vec<MultiIndex>,
    /// Generator polynomials (restrictions to the sphere of the harmonic
    /// homogeneous polynomials).
    pub generators: Vec<Poly>,
    /// gram[a][b] = <T^a, T^b> = Q_l P^l{}^a_b.
    pub gram: DMatrix<C64>,
    /// labels.len() x dim coefficients of the orthonormal basis in the
    /// generator set, from pivoted Cholesky of `gram`.
    pub ortho_coeffs: DMatrix<C64>,
    pub pivots: Vec<usize>,
    /// Orthonormal basis polynomials.
    pub basis: Vec<Poly>,
    pub q_l: f64,
}

impl HarmonicSpace {
    pub fn build(oracle: &ProjectorOracle, l: usize) -> Result<Self> {
        let dim = oracle.dim;
        let labels = sorted_multi_indices(dim, l);
        let n = labels.len();
        let rows: Vec<SymTensor> = labels
            .iter()
            .map(|m| oracle.projector_row(m))
            .collect::<Result<_>>()?;
        let generators: Vec<Poly> = rows.iter().map(|t| t.to_poly()).collect();
        let ql = q_l(dim, l);
        let mut gram = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
        for (a, row) in rows.iter().enumerate() {
            for (b, mb) in labels.iter().enumerate() {
                gram[(a, b)] = row.get(mb) * C64::new(ql, 0.0);
            }
        }
        let (pivots, ortho_coeffs) = orthonormal_coefficients(&gram, 1e-9)?;
        let expected = dim_v(dim, l);
        if pivots.len() != expected {
            return Err(Error::Numerical(format!(
                "gram rank {} != dim V_{}^{} = {}",
                pivots.len(),
                dim,
                l,
                expected
            )));
        }
        let basis: Vec<Poly> = (0..pivots.len())
            .map(|k| {
                let mut p = Poly::zero(dim);
                for (a, g) in generators.iter().enumerate() {
                    let c = ortho_coeffs[(a, k)];
                    if c.re != 0.0 || c.im != 0.0 {
                        p = p.add(&g.scale(c));
                    }
                }
                p
            })
            .collect();
        Ok(HarmonicSpace {
            dim,
            l,
            labels,
            generators,
            gram,
            ortho_coeffs,
            pivots,
            basis,
            q_l: ql,
        })
    }

    pub fn dim_space(&self) -> usize {
        self.basis.len()
    }

    /// Coordinates of a degree-l harmonic polynomial in the orthonormal basis.
    pub fn coords(&self, p: &Poly) -> DVector<C64> {
        DVector::from_iterator(
            self.basis.len(),
            self.basis
                .iter()
                .map(|b| harmonic_inner(self.dim, self.l, b, p)),
        )
    }

    /// Matrix of iL_{hk} on the orthonormal basis.
    pub fn action_il(&self, h: usize, k: usize) -> Result<DMatrix<C64>> {
        if h == k || h == 0 || k == 0 || h > self.dim || k > self.dim {
            return Err(Error::Argument(format!(
                "rotation plane ({h},{k}) invalid for dimension {}",
                self.dim
            )));
        }
        let n = self.basis.len();
        let mut m = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
        for (j, b) in self.basis.iter().enumerate() {
            let col = self.coords(&il_poly(b, h, k));
            m.set_column(j, &col);
        }
        Ok(m)
    }

    /// Matrix of the self-adjoint L_{hk} on the orthonormal basis.
    pub fn action_l(&self, h: usize, k: usize) -> Result<DMatrix<C64>> {
        Ok(scale_complex(self.action_il(h, k)?, C64::new(0.0, -1.0)))
    }

    /// Unitary induced on the orthonormal basis by x_i -> sign[i] x_{perm[i]}.
    pub fn signed_permutation_matrix(&self, perm: &[usize], sign: &[f64]) -> DMatrix<C64> {
        let n = self.basis.len();
        let mut m = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
        for (j, b) in self.basis.iter().enumerate() {
            let col = self.coords(&b.substitute_signed_permutation(perm, sign));
            m.set_column(j, &col);
        }
        m
    }
}

fn scale_complex(mut m: DMatrix<C64>, c: C64) -> DMatrix<C64> {
    for v in m.iter_mut() {
        *v *= c;
    }
    m
}

/// The truncated function space Pol_D^Lambda = V^0 + ... + V^Lambda.
pub struct TruncatedSpace {
    pub dim: usize,
    pub lambda: usize,
    pub oracle: ProjectorOracle,
    pub spaces: Vec<HarmonicSpace>,
    pub n_total: usize,
}

impl TruncatedSpace {
    pub fn build(dim: usize, lambda: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::Config(format!("dimension must be >= 2, got {dim}")));
        }
        // rank lambda+1 is cached so the uncut coordinate action off the top
        // level stays expressible
        let oracle = ProjectorOracle::new(dim, lambda + 1);
        let spaces: Vec<HarmonicSpace> = (0..=lambda)
            .map(|l| HarmonicSpace::build(&oracle, l))
            .collect::<Result<_>>()?;
        let n_total = spaces.iter().map(|s| s.dim_space()).sum();
        let expected = dim_truncated(dim, lambda);
        if n_total != expected {
            return Err(Error::Numerical(format!(
                "total dimension {n_total} != {expected}"
            )));
        }
        Ok(TruncatedSpace {
            dim,
            lambda,
            oracle,
            spaces,
            n_total,
        })
    }

    /// Harmonic components of x^h * p for p harmonic of degree l:
    /// the degree-(l+1) part and the degree-(l-1) part (on the sphere).
    pub fn coordinate_split(&self, p: &Poly, l: usize, h: usize) -> (Poly, Poly) {
        let denom = (self.dim + 2 * l) as f64 - 2.0;
        let lower = p.diff(h).scale(C64::new(1.0 / denom, 0.0));
        let upper = p.mul_var(h).sub(&lower.mul_r2());
        (upper, lower)
    }

    /// Block map V^l -> V^{l+1} of multiplication by t^h.
    pub fn raise_block(&self, l: usize, h: usize) -> DMatrix<C64> {
        assert!(l < self.lambda);
        let src = &self.spaces[l];
        let dst = &self.spaces[l + 1];
        let mut m = DMatrix::from_element(dst.dim_space(), src.dim_space(), C64::new(0.0, 0.0));
        for (j, b) in src.basis.iter().enumerate() {
            let (up, _) = self.coordinate_split(b, l, h);
            m.set_column(j, &dst.coords(&up));
        }
        m
    }

    /// Block map V^l -> V^{l-1} of multiplication by t^h.
    pub fn lower_block(&self, l: usize, h: usize) -> DMatrix<C64> {
        assert!(l >= 1 && l <= self.lambda);
        let src = &self.spaces[l];
        let dst = &self.spaces[l - 1];
        let mut m = DMatrix::from_element(dst.dim_space(), src.dim_space(), C64::new(0.0, 0.0));
        for (j, b) in src.basis.iter().enumerate() {
            let (_, low) = self.coordinate_split(b, l, h);
            m.set_column(j, &dst.coords(&low));
        }
        m
    }
}

/// A function on the sphere as trace-free symmetric coefficient tensors per
/// harmonic level.
#[derive(Clone, Debug)]
pub struct SphereFunction {
    pub dim: usize,
    pub components: BTreeMap<usize, SymTensor>,
}

impl SphereFunction {
    pub fn zero(dim: usize) -> Self {
        SphereFunction {
            dim,
            components: BTreeMap::new(),
        }
    }

    pub fn add_component(&mut self, l: usize, t: SymTensor) {
        if t.max_abs() == 0.0 {
            return;
        }
        match self.components.remove(&l) {
            Some(prev) => {
                let sum = prev.add(&t);
                if sum.max_abs() > 0.0 {
                    self.components.insert(l, sum);
                }
            }
            None => {
                self.components.insert(l, t);
            }
        }
    }

    /// Canonical polynomial representative (sum of harmonic pieces).
    pub fn to_poly(&self) -> Poly {
        let mut p = Poly::zero(self.dim);
        for t in self.components.values() {
            p = p.add(&t.to_poly());
        }
        p
    }

    /// Exact L^2(S^d) norm from the Gram data.
    pub fn norm(&self) -> f64 {
        let mut acc = 0.0;
        for (l, t) in &self.components {
            acc += q_l(self.dim, *l) * t.dot_full(t).re;
        }
        acc.max(0.0).sqrt()
    }

    pub fn max_level(&self) -> usize {
        self.components.keys().copied().max().unwrap_or(0)
    }

    /// Drop components above the given level (the sharp truncation).
    pub fn truncate(&self, level: usize) -> SphereFunction {
        SphereFunction {
            dim: self.dim,
            components: self
                .components
                .iter()
                .filter(|(l, _)| **l <= level)
                .map(|(l, t)| (*l, t.clone()))
                .collect(),
        }
    }
}

/// Decomposition of an arbitrary polynomial in the ambient coordinates into
/// trace-free components on the sphere (reduction by t.t = 1).
///
/// Each homogeneous piece q of degree n splits as q = sum_j r^{2j} h_{n-2j}
/// with h_{n-2j} = harm(lap^j q) / prod_{s=1..j} 2s (D + 2(n-2j) + 2s - 2);
/// setting r = 1 merges the components across degrees.
pub fn decompose_polynomial(oracle: &ProjectorOracle, p: &Poly) -> Result<SphereFunction> {
    if p.degree() > oracle.max_rank {
        return Err(Error::Argument(format!(
            "polynomial degree {} exceeds supported level {}",
            p.degree(),
            oracle.max_rank
        )));
    }
    let dim = oracle.dim;
    let scale = p.max_abs();
    let mut out = SphereFunction::zero(dim);
    for (n, q) in p.homogeneous_parts() {
        let mut lap = q.clone();
        for j in 0..=(n / 2) {
            let target = n - 2 * j;
            let mut denom = 1.0;
            for s in 1..=j {
                denom *= 2.0 * s as f64 * (dim + 2 * target + 2 * s - 2) as f64;
            }
            let h = oracle
                .project_poly(&lap, target)?
                .scale(C64::new(1.0 / denom, 0.0));
            if h.max_abs() > 1e-13 * scale {
                out.add_component(target, SymTensor::from_poly(&h, target));
            }
            if target >= 2 {
                lap = lap.laplacian();
            }
        }
    }
    Ok(out)
}
