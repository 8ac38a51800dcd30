//! The truncated space as the top-degree harmonic irrep one dimension up.
//!
//! The carrier space is spanned, block by block, by
//! F^m = p_{Lambda,l}(x^{D+1}, r) X_l^m with X_l^m the D-dimensional
//! trace-free harmonics and p a polynomial fixed by harmonicity in D+1
//! variables. On that basis all rotation generators L_{IJ} are assembled,
//! and the identification of the cutoff coordinate algebra goes through the
//! block-diagonal sandwich x^i = m(lambda) L_{(D+1) i} m(lambda), with the
//! adjacent-block products mu(l) = m(l) m(l+1) carrying all of the content.

use crate::error::{Error, Result};
use crate::fuzzy::{coef_c, FuzzyAlgebra, ModelParams};
use crate::gammafn::ln_gamma_complex;
use crate::harmonic::{dim_v, harmonic_inner, il_poly};
use crate::linalg::{inf_norm, orthonormal_coefficients};
use crate::poly::Poly;
use crate::symtensor::{sorted_multi_indices, MultiIndex, ProjectorOracle};
use crate::C64;
use nalgebra::DMatrix;

/// Branching data of the top-degree irrep one dimension up: the radial
/// profile coefficients b, the block phases a, and the sandwich weights.
pub struct BranchingData {
    pub dim: usize,
    pub lambda: usize,
    /// b[l][k] = coefficient of (x^{D+1})^{Lambda-l-2k} r^{2k} in p_{Lambda,l};
    /// b[l][0] = 1.
    pub b: Vec<Vec<f64>>,
    /// a[l] with a[0] = 1 and |a_{l+1}/a_l| = sqrt((Lambda-l)/(Lambda+l+D-1)).
    pub a: Vec<C64>,
}

impl BranchingData {
    pub fn new(dim: usize, lambda: usize) -> Self {
        let bdim = dim + 1;
        let mut b = Vec::with_capacity(lambda + 1);
        for l in 0..=lambda {
            let kmax = (lambda - l) / 2;
            let mut row = vec![1.0];
            for k in 0..kmax {
                let lp = (lambda - l - 2 * k) as f64;
                let next = -row[k] * lp * (lp - 1.0)
                    / ((2 * k + 2) as f64 * (2.0 * lambda as f64 - 4.0 - 2.0 * k as f64 + bdim as f64));
                row.push(next);
            }
            b.push(row);
        }
        let mut a = vec![C64::new(1.0, 0.0)];
        for l in 0..lambda {
            let ratio = ((lambda - l) as f64 / (lambda + l + dim - 1) as f64).sqrt();
            a.push(a[l] * C64::new(0.0, ratio));
        }
        BranchingData { dim, lambda, a, b }
    }

    /// Closed form b_{Lambda, l+2k} =
    /// (-1)^k (Lambda-l)! (2 Lambda - 4 - 2k + D + 1)!! /
    /// [(Lambda-l-2k)! (2k)!! (2 Lambda - 4 + D + 1)!!], the cross-check for
    /// the recursion.
    pub fn b_closed_form(&self, l: usize, k: usize) -> f64 {
        use crate::gammafn::{double_factorial, factorial};
        let bd = (self.dim + 1) as i64;
        let lp = (self.lambda - l) as i64;
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sign * factorial(lp as u64) * double_factorial(2 * self.lambda as i64 - 4 - 2 * k as i64 + bd)
            / (factorial((lp - 2 * k as i64) as u64)
                * double_factorial(2 * k as i64)
                * double_factorial(2 * self.lambda as i64 - 4 + bd))
    }

    /// The radial profile p_{Lambda,l} as a polynomial in D+1 variables,
    /// homogenized with r^2 = sum x_I^2.
    pub fn p_poly_homogeneous(&self, l: usize) -> Poly {
        let bdim = self.dim + 1;
        let mut out = Poly::zero(bdim);
        for (k, &coef) in self.b[l].iter().enumerate() {
            let mut e = vec![0u8; bdim];
            e[bdim - 1] = (self.lambda - l - 2 * k) as u8;
            let mut term = Poly::monomial(bdim, e, C64::new(coef, 0.0));
            for _ in 0..k {
                term = term.mul_r2();
            }
            out = out.add(&term);
        }
        out
    }
}

/// mu(l) = c_{l+1} / sqrt((Lambda - l)(Lambda + l + D - 1)), defined for
/// l < Lambda.
pub fn mu_map(params: &ModelParams, l: usize) -> Result<f64> {
    if l >= params.lambda {
        return Err(Error::Argument(format!(
            "mu is defined for levels below the cutoff, got l = {l} at Lambda = {}",
            params.lambda
        )));
    }
    let lam = params.lambda as f64;
    let lf = l as f64;
    let d = params.dim as f64;
    Ok(coef_c(params, l + 1) / ((lam - lf) * (lam + lf + d - 1.0)).sqrt())
}

/// Block weight from the Gamma-function formula, positive on 0 <= s <= Lambda:
/// m(s)^2 = G((L+s+d)/2) G((L-s+1)/2) |G((s+1+d/2+iA)/2)|^2 /
///          [G((L+s+D)/2) G((L-s)/2+1) |G((s+d/2+iA)/2)|^2 sqrt(k)]
/// with d = D-1 and A = sqrt(k + 3(D-1)(D-3)/4).
pub fn m_map(params: &ModelParams, s: usize) -> f64 {
    let d = (params.dim - 1) as f64;
    let lam = params.lambda as f64;
    let sf = s as f64;
    let a = (params.k + 3.0 * (params.dim as f64 - 1.0) * (params.dim as f64 - 3.0) / 4.0).sqrt();
    let g = |x: f64, y: f64| ln_gamma_complex(C64::new(x, y));
    let mut ln = C64::new(0.0, 0.0);
    ln += g((lam + sf + d) / 2.0, 0.0);
    ln += g((lam - sf + 1.0) / 2.0, 0.0);
    ln += g((sf + 1.0 + d / 2.0) / 2.0, a / 2.0) + g((sf + 1.0 + d / 2.0) / 2.0, -a / 2.0);
    ln -= g((lam + sf + params.dim as f64) / 2.0, 0.0);
    ln -= g((lam - sf) / 2.0 + 1.0, 0.0);
    ln -= g((sf + d / 2.0) / 2.0, a / 2.0) + g((sf + d / 2.0) / 2.0, -a / 2.0);
    (ln.re.exp() / params.k.sqrt()).sqrt()
}

/// The k -> infinity limit of the block weight (confinement dropped):
/// m_hat(s)^2 = G((L+s+d)/2) G((L-s+1)/2) / [2 G((L+s+D)/2) G((L-s)/2+1)].
pub fn m_hat(dim: usize, lambda: usize, s: usize) -> f64 {
    let d = (dim - 1) as f64;
    let lam = lambda as f64;
    let sf = s as f64;
    let g = |x: f64| ln_gamma_complex(C64::new(x, 0.0)).re;
    let ln = g((lam + sf + d) / 2.0) + g((lam - sf + 1.0) / 2.0)
        - g((lam + sf + dim as f64) / 2.0)
        - g((lam - sf) / 2.0 + 1.0);
    (ln.exp() / 2.0).sqrt()
}

/// One branching block of the lifted irrep.
pub struct LiftBlock {
    pub l: usize,
    pub labels: Vec<MultiIndex>,
    /// Homogenized degree-Lambda harmonics F^m in D+1 variables.
    pub f_polys: Vec<Poly>,
    pub ortho_coeffs: DMatrix<C64>,
    pub basis: Vec<Poly>,
}

/// The irrep of so(D+1) on harmonic polynomials of degree Lambda, in a basis
/// organized by the so(D) branching.
pub struct LiftedIrrep {
    pub dim: usize,
    pub bdim: usize,
    pub lambda: usize,
    pub branching: BranchingData,
    pub blocks: Vec<LiftBlock>,
    pub offsets: Vec<usize>,
    pub n: usize,
}

impl LiftedIrrep {
    pub fn build(dim: usize, lambda: usize) -> Result<Self> {
        let bdim = dim + 1;
        let branching = BranchingData::new(dim, lambda);
        let oracle_d = ProjectorOracle::new(dim, lambda);
        let mut blocks = Vec::with_capacity(lambda + 1);
        let mut offsets = Vec::with_capacity(lambda + 1);
        let mut n = 0usize;
        for l in 0..=lambda {
            let labels = sorted_multi_indices(dim, l);
            let p_prof = branching.p_poly_homogeneous(l);
            let f_polys: Vec<Poly> = labels
                .iter()
                .map(|m| {
                    let x = oracle_d.projector_row(m)?.to_poly().embed(bdim);
                    Ok(p_prof.mul(&x))
                })
                .collect::<Result<_>>()?;
            let nl = labels.len();
            let mut gram = DMatrix::from_element(nl, nl, C64::new(0.0, 0.0));
            for (a, pa) in f_polys.iter().enumerate() {
                for (b, pb) in f_polys.iter().enumerate() {
                    gram[(a, b)] = harmonic_inner(bdim, lambda, pa, pb);
                }
            }
            let (pivots, ortho_coeffs) = orthonormal_coefficients(&gram, 1e-9)?;
            if pivots.len() != dim_v(dim, l) {
                return Err(Error::Numerical(format!(
                    "branching block l={l} has rank {} instead of {}",
                    pivots.len(),
                    dim_v(dim, l)
                )));
            }
            let basis: Vec<Poly> = (0..pivots.len())
                .map(|kcol| {
                    let mut p = Poly::zero(bdim);
                    for (a, fp) in f_polys.iter().enumerate() {
                        let cc = ortho_coeffs[(a, kcol)];
                        if cc.re != 0.0 || cc.im != 0.0 {
                            p = p.add(&fp.scale(cc));
                        }
                    }
                    p
                })
                .collect();
            offsets.push(n);
            n += basis.len();
            blocks.push(LiftBlock {
                l,
                labels,
                f_polys,
                ortho_coeffs,
                basis,
            });
        }
        Ok(LiftedIrrep {
            dim,
            bdim,
            lambda,
            branching,
            blocks,
            offsets,
            n,
        })
    }

    /// Coordinates of a degree-Lambda harmonic polynomial (D+1 variables) in
    /// the full orthonormal basis.
    pub fn coords(&self, p: &Poly) -> Vec<C64> {
        let mut out = Vec::with_capacity(self.n);
        for blk in &self.blocks {
            for b in &blk.basis {
                out.push(harmonic_inner(self.bdim, self.lambda, b, p));
            }
        }
        out
    }

    /// Matrix of the self-adjoint L_{IJ}, 1-based axes up to D+1.
    pub fn l_mat(&self, i: usize, j: usize) -> Result<DMatrix<C64>> {
        if i == j || i == 0 || j == 0 || i > self.bdim || j > self.bdim {
            return Err(Error::Argument(format!(
                "rotation plane ({i},{j}) invalid for ambient dimension {}",
                self.bdim
            )));
        }
        let mut m = DMatrix::from_element(self.n, self.n, C64::new(0.0, 0.0));
        let mut col = 0usize;
        for blk in &self.blocks {
            for b in &blk.basis {
                let image = il_poly(b, i, j);
                for (row, v) in self.coords(&image).into_iter().enumerate() {
                    m[(row, col)] = v * C64::new(0.0, -1.0);
                }
                col += 1;
            }
        }
        Ok(m)
    }

    /// X^i = L_{(D+1) i}, the lifted coordinate direction.
    pub fn x_mat(&self, i: usize) -> Result<DMatrix<C64>> {
        self.l_mat(self.bdim, i)
    }

    /// Quadratic Casimir of the full so(D+1).
    pub fn casimir(&self) -> Result<DMatrix<C64>> {
        let mut acc = DMatrix::from_element(self.n, self.n, C64::new(0.0, 0.0));
        for i in 1..=self.bdim {
            for j in (i + 1)..=self.bdim {
                let m = self.l_mat(i, j)?;
                acc += &m * &m;
            }
        }
        Ok(acc)
    }

    /// Sub-Casimir of the embedded so(D).
    pub fn sub_casimir(&self) -> Result<DMatrix<C64>> {
        let mut acc = DMatrix::from_element(self.n, self.n, C64::new(0.0, 0.0));
        for i in 1..=self.dim {
            for j in (i + 1)..=self.dim {
                let m = self.l_mat(i, j)?;
                acc += &m * &m;
            }
        }
        Ok(acc)
    }

    /// Unitary induced by a signed permutation of the D+1 axes.
    pub fn signed_permutation_matrix(&self, perm: &[usize], sign: &[f64]) -> DMatrix<C64> {
        let mut m = DMatrix::from_element(self.n, self.n, C64::new(0.0, 0.0));
        let mut col = 0usize;
        for blk in &self.blocks {
            for b in &blk.basis {
                let image = b.substitute_signed_permutation(perm, sign);
                for (row, v) in self.coords(&image).into_iter().enumerate() {
                    m[(row, col)] = v;
                }
                col += 1;
            }
        }
        m
    }
}

/// Residual of the two-term block action of L_{h(D+1)} on the branching
/// vectors, checked directly in function space:
/// i L_{h(D+1)} F_l^m = (Lambda - l) F_{l+1}^{(h,m)}
///   - l (Lambda + l + D - 2)/(D + 2l - 2) sum P^l{}^m_{(h,n)} F_{l-1}^n.
pub fn verify_lifted_l_action(lifted: &LiftedIrrep) -> Result<f64> {
    let dim = lifted.dim;
    let bdim = lifted.bdim;
    let oracle_d = ProjectorOracle::new(dim, lifted.lambda);
    let mut worst = 0.0f64;
    for blk in &lifted.blocks {
        let l = blk.l;
        for (pos, m) in blk.labels.iter().enumerate() {
            for h in 1..=dim {
                let lhs = il_poly(&blk.f_polys[pos], h, bdim);
                let mut rhs = Poly::zero(bdim);
                if l < lifted.lambda {
                    let up = &lifted.blocks[l + 1];
                    let mut idx = m.0.clone();
                    idx.push(h as u8);
                    let target = MultiIndex::new(idx, dim)?;
                    let pos_up = up.labels.iter().position(|x| *x == target).unwrap();
                    rhs = rhs.add(
                        &up.f_polys[pos_up].scale(C64::new((lifted.lambda - l) as f64, 0.0)),
                    );
                }
                if l >= 1 {
                    let down = &lifted.blocks[l - 1];
                    let row = oracle_d.projector_row(m)?;
                    let coef = -(l as f64) * (lifted.lambda + l + dim - 2) as f64
                        / (dim + 2 * l - 2) as f64;
                    for (pn, nlab) in down.labels.iter().enumerate() {
                        let mut idx = nlab.0.clone();
                        idx.push(h as u8);
                        let comp = row.get(&MultiIndex::new(idx, dim)?);
                        if comp.norm() > 0.0 {
                            let w = comp * C64::new(coef * nlab.multiplicity(), 0.0);
                            rhs = rhs.add(&down.f_polys[pn].scale(w));
                        }
                    }
                }
                let resid = lhs.sub(&rhs).max_abs();
                worst = worst.max(resid);
            }
        }
    }
    Ok(worst)
}

/// Report of the identification of the cutoff algebra with the lifted irrep.
pub struct IsomorphismReport {
    /// Deviation of U^H U from a multiple of the identity before rescaling.
    pub unitarity_residual: f64,
    /// max_i |U x^i U^H - mu-sandwiched X^i|.
    pub x_residual: f64,
    /// max_{h<k} |U L_{hk} U^H - L_{hk}|.
    pub l_residual: f64,
}

/// Builds the intertwiner from the block correspondence psi_l -> a_l F_l and
/// compares both generator families.
pub fn verify_isomorphism(alg: &FuzzyAlgebra, lifted: &LiftedIrrep) -> Result<IsomorphismReport> {
    let params = &alg.params;
    if params.dim != lifted.dim || params.lambda != lifted.lambda {
        return Err(Error::Config(
            "fuzzy algebra and lifted irrep parameters differ".into(),
        ));
    }
    let n = alg.n;
    if n != lifted.n {
        return Err(Error::Config(format!(
            "dimension mismatch {} vs {}",
            n, lifted.n
        )));
    }
    // kappa matrix: fuzzy onb vector (l, j) -> a_l sum_m beta_{mj} F_l^m
    let mut u_raw = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
    for (l, blk) in lifted.blocks.iter().enumerate() {
        let h_space = &alg.space.spaces[l];
        let a_l = lifted.branching.a[l];
        for j in 0..h_space.dim_space() {
            let mut image = Poly::zero(lifted.bdim);
            for (mpos, fp) in blk.f_polys.iter().enumerate() {
                let beta = h_space.ortho_coeffs[(mpos, j)];
                if beta.re != 0.0 || beta.im != 0.0 {
                    image = image.add(&fp.scale(beta * a_l));
                }
            }
            let col = alg.offsets[l] + j;
            for (row, v) in lifted.coords(&image).into_iter().enumerate() {
                u_raw[(row, col)] = v;
            }
        }
    }
    // the correspondence is unitary up to one overall scale
    let gram = u_raw.adjoint() * &u_raw;
    let scale = (0..n).map(|i| gram[(i, i)].re).sum::<f64>() / n as f64;
    if scale <= 0.0 {
        return Err(Error::Numerical("degenerate intertwiner".into()));
    }
    let mut unit = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let expect = if i == j { scale } else { 0.0 };
            unit = unit.max((gram[(i, j)] - C64::new(expect, 0.0)).norm());
        }
    }
    let unitarity_residual = unit / scale;
    if unitarity_residual > 1e-8 {
        return Err(Error::Numerical(format!(
            "block correspondence is not unitary: residual {unitarity_residual:.3e} \
             (wrong phases or Gram alignment)"
        )));
    }
    let u = u_raw.map(|z| z / C64::new(scale.sqrt(), 0.0));

    // mu-sandwiched X^i: only adjacent blocks of L_{(D+1) i} enter
    let mut x_residual = 0.0f64;
    for i in 1..=params.dim {
        let xm = lifted.x_mat(i)?;
        let mut rhs = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
        for l in 0..params.lambda {
            let mu = mu_map(params, l)?;
            let (o_lo, d_lo) = (lifted.offsets[l], lifted.blocks[l].basis.len());
            let (o_hi, d_hi) = (lifted.offsets[l + 1], lifted.blocks[l + 1].basis.len());
            for a in 0..d_hi {
                for b in 0..d_lo {
                    rhs[(o_hi + a, o_lo + b)] = xm[(o_hi + a, o_lo + b)] * C64::new(mu, 0.0);
                    rhs[(o_lo + b, o_hi + a)] = xm[(o_lo + b, o_hi + a)] * C64::new(mu, 0.0);
                }
            }
        }
        let lhs = &u * &alg.x[i - 1] * u.adjoint();
        x_residual = x_residual.max(inf_norm(&(lhs - rhs)));
    }

    let mut l_residual = 0.0f64;
    for ((h, k), m) in alg.upper_l_planes() {
        let lhs = &u * m * u.adjoint();
        let rhs = lifted.l_mat(*h, *k)?;
        l_residual = l_residual.max(inf_norm(&(lhs - rhs)));
    }

    Ok(IsomorphismReport {
        unitarity_residual,
        x_residual,
        l_residual,
    })
}

/// Axis reflections as rotations one dimension up.
///
/// Conjugating the sandwiched coordinates by pi(R), for R the block rotation
/// diag(g, det g) with g a signed permutation of the first D axes, realizes
/// x^i -> det(g) g^i_j x^j: rotating the extra axis along with g trades a
/// reflection for the complementary one. The checks below exercise the two
/// faces of that law. Returns the worst residual.
pub fn reflection_rotation_residual(lifted: &LiftedIrrep, params: &ModelParams) -> Result<f64> {
    let bdim = lifted.bdim;
    let dim = lifted.dim;
    let n = lifted.n;
    let sandwich = |i: usize| -> Result<DMatrix<C64>> {
        let xm = lifted.x_mat(i)?;
        let mut rhs = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
        for l in 0..lifted.lambda {
            let mu = mu_map(params, l)?;
            let (o_lo, d_lo) = (lifted.offsets[l], lifted.blocks[l].basis.len());
            let (o_hi, d_hi) = (lifted.offsets[l + 1], lifted.blocks[l + 1].basis.len());
            for a in 0..d_hi {
                for b in 0..d_lo {
                    rhs[(o_hi + a, o_lo + b)] = xm[(o_hi + a, o_lo + b)] * C64::new(mu, 0.0);
                    rhs[(o_lo + b, o_hi + a)] = xm[(o_lo + b, o_hi + a)] * C64::new(mu, 0.0);
                }
            }
        }
        Ok(rhs)
    };
    let sandwiches: Vec<DMatrix<C64>> = (1..=dim).map(sandwich).collect::<Result<_>>()?;
    let mut worst = 0.0f64;

    // the pi-rotation in the (1, D+1) plane fixes x^1 and negates the rest
    let perm: Vec<usize> = (0..bdim).collect();
    let mut sign = vec![-1.0; bdim];
    sign[0] = -1.0;
    sign[bdim - 1] = -1.0;
    for s in sign.iter_mut().take(bdim - 1).skip(1) {
        *s = 1.0;
    }
    let w = lifted.signed_permutation_matrix(&perm, &sign);
    for (i, s) in sandwiches.iter().enumerate() {
        let conj = &w * s * w.adjoint();
        let target = if i == 0 { s.clone() } else { -s.clone() };
        worst = worst.max(inf_norm(&(conj - target)));
    }

    // for even D the single reflection x^1 -> -x^1 itself is realized by the
    // rotation that flips all the other axes together with the extra one
    if dim % 2 == 0 {
        let mut sign = vec![-1.0; bdim];
        sign[0] = 1.0;
        let w = lifted.signed_permutation_matrix(&perm, &sign);
        for (i, s) in sandwiches.iter().enumerate() {
            let conj = &w * s * w.adjoint();
            let target = if i == 0 { -s.clone() } else { s.clone() };
            worst = worst.max(inf_norm(&(conj - target)));
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fuzzy::KRule;
    use crate::linalg::hermitian_eigenvalues;

    #[test]
    fn branching_coefficients_examples() {
        // Lambda=2, l=0, D=3 (ambient 4): b_{2,2} = -(2)(1)/(2(2*2-4+4)) = -1/4
        let br = BranchingData::new(3, 2);
        assert!((br.b[0][1] + 0.25).abs() < 1e-14);
        // harmonicity of (x^4)^2 - r^2/4 in four variables
        let p = br.p_poly_homogeneous(0);
        assert!(p.laplacian().max_abs() < 1e-13);
        // a-ratio at Lambda=2, l=0, D=3: sqrt(2/4)
        assert!((br.a[1].norm() - (2.0f64 / 4.0).sqrt()).abs() < 1e-14);
        // recursion vs closed form across a sweep
        for (dim, lambda) in [(2usize, 4usize), (3, 5), (4, 4)] {
            let br = BranchingData::new(dim, lambda);
            for l in 0..=lambda {
                for k in 0..br.b[l].len() {
                    let cf = br.b_closed_form(l, k);
                    assert!(
                        (br.b[l][k] - cf).abs() < 1e-12 * cf.abs().max(1.0),
                        "D={dim} Lambda={lambda} l={l} k={k}: {} vs {cf}",
                        br.b[l][k]
                    );
                }
            }
            // top block has the trivial profile
            assert_eq!(br.b[lambda].len(), 1);
        }
    }

    #[test]
    fn lifted_blocks_are_harmonic_and_orthogonal() {
        let lifted = LiftedIrrep::build(3, 3).unwrap();
        assert_eq!(lifted.n, crate::harmonic::dim_truncated(3, 3));
        for blk in &lifted.blocks {
            for p in &blk.f_polys {
                assert!(p.laplacian().max_abs() < 1e-11);
            }
        }
        // cross-block orthogonality of the orthonormal bases
        for (la, blka) in lifted.blocks.iter().enumerate() {
            for (lb, blkb) in lifted.blocks.iter().enumerate() {
                for (i, pa) in blka.basis.iter().enumerate() {
                    for (j, pb) in blkb.basis.iter().enumerate() {
                        let ip = harmonic_inner(4, 3, pa, pb);
                        let expect = if (la, i) == (lb, j) { 1.0 } else { 0.0 };
                        assert!((ip - C64::new(expect, 0.0)).norm() < 1e-11);
                    }
                }
            }
        }
    }

    #[test]
    fn vector_irrep_weights() {
        // D=2, Lambda=1: the three-dimensional rotation irrep; L12 has
        // eigenvalues -1, 0, 1
        let lifted = LiftedIrrep::build(2, 1).unwrap();
        assert_eq!(lifted.n, 3);
        let l12 = lifted.l_mat(1, 2).unwrap();
        let vals = hermitian_eigenvalues(&l12).unwrap();
        for (v, e) in vals.iter().zip([-1.0, 0.0, 1.0]) {
            assert!((v - e).abs() < 1e-12);
        }
    }

    #[test]
    fn casimir_values() {
        // full Casimir = Lambda (Lambda + D - 1) identically; D=3, Lambda=2 -> 8
        let lifted = LiftedIrrep::build(3, 2).unwrap();
        let cas = lifted.casimir().unwrap();
        let expect = 2.0 * (2.0 + 4.0 - 2.0);
        for i in 0..lifted.n {
            for j in 0..lifted.n {
                let want = if i == j { expect } else { 0.0 };
                assert!((cas[(i, j)] - C64::new(want, 0.0)).norm() < 1e-10);
            }
        }
        // sub-Casimir spectrum = {E_l with multiplicity dim V_D^l}
        let sub = lifted.sub_casimir().unwrap();
        let vals = hermitian_eigenvalues(&sub).unwrap();
        let mut expected = Vec::new();
        for l in 0..=2usize {
            for _ in 0..dim_v(3, l) {
                expected.push((l * (l + 1)) as f64);
            }
        }
        expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (v, e) in vals.iter().zip(expected.iter()) {
            assert!((v - e).abs() < 1e-10);
        }
    }

    #[test]
    fn lifted_block_action() {
        for (dim, lambda) in [(2usize, 2usize), (3, 2), (3, 3)] {
            let lifted = LiftedIrrep::build(dim, lambda).unwrap();
            let worst = verify_lifted_l_action(&lifted).unwrap();
            assert!(worst < 1e-10, "D={dim} Lambda={lambda}: {worst}");
        }
    }

    #[test]
    fn mu_and_m_consistency() {
        for dim in [3usize, 4] {
            for lambda in [1usize, 3, 5] {
                for &k in &[1e2, 1e4] {
                    // combinations violating the cutoff inequality are not
                    // constructible and are skipped
                    let Ok(params) = ModelParams::new(dim, lambda, KRule::Explicit(k)) else {
                        continue;
                    };
                    for l in 0..lambda {
                        let mu = mu_map(&params, l).unwrap();
                        let mm = m_map(&params, l) * m_map(&params, l + 1);
                        assert!(
                            (mu - mm).abs() < 1e-10 * mu.abs().max(1.0),
                            "D={dim} L={lambda} l={l} k={k}: mu {mu} vs m.m {mm}"
                        );
                        // the exact square identity behind mu
                        let c = coef_c(&params, l + 1);
                        let lhs = mu * mu
                            * (lambda - l) as f64
                            * (lambda + l + dim - 1) as f64;
                        assert!((lhs - c * c).abs() < 1e-12 * c * c);
                    }
                }
            }
        }
        // frozen: D=3, Lambda=1, l=0, k=16 gives mu = sqrt(1+1/16)/sqrt(3)
        let params = ModelParams::new(3, 1, KRule::Explicit(16.0)).unwrap();
        let expect = (1.0f64 + 1.0 / 16.0).sqrt() / 3.0f64.sqrt();
        assert!((mu_map(&params, 0).unwrap() - expect).abs() < 1e-14);
        // at D=3 the shift under the square root vanishes: A^2 = k
        let a2: f64 = 16.0 + 3.0 * (3.0 - 1.0) * (3.0 - 3.0) / 4.0;
        assert!((a2 - 16.0).abs() < 1e-15);
        // mu is undefined at the top level
        assert!(mu_map(&params, 1).is_err());
    }

    #[test]
    fn m_limit_matches_confinement_free_weight() {
        // k -> infinity at fixed Lambda: m m -> m_hat m_hat at rate 1/k
        for dim in [2usize, 3] {
            let lambda = 3;
            for l in 0..lambda {
                let target = m_hat(dim, lambda, l) * m_hat(dim, lambda, l + 1);
                let mut prev_err = f64::INFINITY;
                for &k in &[1e4, 1e6, 1e8] {
                    let params = ModelParams::new(dim, lambda, KRule::Explicit(k)).unwrap();
                    let mm = m_map(&params, l) * m_map(&params, l + 1);
                    let err = (mm - target).abs();
                    assert!(err < prev_err.max(1e-12));
                    prev_err = err;
                }
                assert!(prev_err < 1e-7, "limit not reached: {prev_err}");
            }
        }
    }

    #[test]
    fn isomorphism_small() {
        // D=2, Lambda=1, k=4: hand-sized three by three check
        let params = ModelParams::new(2, 1, KRule::Explicit(4.0)).unwrap();
        let alg = FuzzyAlgebra::build(params).unwrap();
        let lifted = LiftedIrrep::build(2, 1).unwrap();
        let rep = verify_isomorphism(&alg, &lifted).unwrap();
        assert!(rep.unitarity_residual < 1e-12);
        assert!(rep.x_residual < 1e-11, "x residual {}", rep.x_residual);
        assert!(rep.l_residual < 1e-12, "L residual {}", rep.l_residual);
    }

    #[test]
    fn isomorphism_d3() {
        let params = ModelParams::new(3, 3, KRule::Explicit(144.0)).unwrap();
        let alg = FuzzyAlgebra::build(params).unwrap();
        let lifted = LiftedIrrep::build(3, 3).unwrap();
        let rep = verify_isomorphism(&alg, &lifted).unwrap();
        assert!(rep.x_residual < 1e-9, "x residual {}", rep.x_residual);
        assert!(rep.l_residual < 1e-10, "L residual {}", rep.l_residual);
    }

    #[test]
    fn reflections_as_rotations() {
        for (dim, lambda) in [(3usize, 2usize), (2, 2), (4, 2)] {
            let params = ModelParams::new(dim, lambda, KRule::Default).unwrap();
            let lifted = LiftedIrrep::build(dim, lambda).unwrap();
            let worst = reflection_rotation_residual(&lifted, &params).unwrap();
            assert!(worst < 1e-10, "D={dim}: reflection residual {worst}");
        }
    }
}
