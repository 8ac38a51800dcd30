//! The cutoff coordinate algebra on the truncated harmonic space.
//!
//! With the level-l orthonormal bases of [`crate::harmonic`] in place, the
//! projected coordinates act by
//! `x^i psi_l = c_{l+1} (raise) + c_l (lower)` with the radial overlap
//! coefficients `c_l`, and the angular momenta act block-diagonally. Both
//! actions are adopted as exact definitions, so every relation verified
//! here (vector transformation, so(D) brackets, the Snyder-type
//! commutator, the square-distance polynomial, nilpotency, generation) is
//! expected to hold to numerical precision rather than asymptotically.

use crate::error::{Error, Result};
use crate::harmonic::{dim_v, TruncatedSpace};
use crate::linalg::{gram_schmidt_rank, hermitian_eigenvalues, hermitian_op_norm, inf_norm};
use crate::C64;
use nalgebra::DMatrix;

/// Construction parameters of one fuzzy sphere.
#[derive(Clone, Debug)]
pub struct ModelParams {
    pub dim: usize,
    pub lambda: usize,
    /// Confinement strength k = V''(1)/4 (dimensionless).
    pub k: f64,
    pub tolerance: f64,
}

/// How the confinement strength is tied to the cutoff.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KRule {
    /// k = [Lambda (Lambda + D - 2)]^2 / 4, clamped below by 1 so the
    /// degenerate Lambda = 0 sphere stays definable.
    Default,
    Explicit(f64),
}

impl ModelParams {
    pub fn default_k(dim: usize, lambda: usize) -> f64 {
        let e = (lambda * (lambda + dim - 2)) as f64;
        (e * e / 4.0).max(1.0)
    }

    pub fn new(dim: usize, lambda: usize, rule: KRule) -> Result<Self> {
        if dim < 2 {
            return Err(Error::Config(format!("dimension must be >= 2, got {dim}")));
        }
        let k = match rule {
            KRule::Default => Self::default_k(dim, lambda),
            KRule::Explicit(k) => k,
        };
        if !(k > 0.0) || !k.is_finite() {
            return Err(Error::Config(format!("k must be positive, got {k}")));
        }
        let params = ModelParams {
            dim,
            lambda,
            k,
            tolerance: 1e-10,
        };
        if params.energy_cutoff() >= 2.0 * (2.0 * k).sqrt() {
            return Err(Error::Config(format!(
                "cutoff inequality violated: Lambda(Lambda+D-2) = {} >= 2 sqrt(2k) = {}",
                params.energy_cutoff(),
                2.0 * (2.0 * k).sqrt()
            )));
        }
        Ok(params)
    }

    /// Energy cutoff E(Lambda) = Lambda (Lambda + D - 2).
    pub fn energy_cutoff(&self) -> f64 {
        (self.lambda * (self.lambda + self.dim - 2)) as f64
    }

    /// B = (2D - 5)(D - 1)/2.
    pub fn b_const(&self) -> f64 {
        (2.0 * self.dim as f64 - 5.0) * (self.dim as f64 - 1.0) / 2.0
    }

    /// epsilon = [B + (Lambda-1)(Lambda+D-3)] / 2k, the operator-norm slack.
    pub fn epsilon(&self) -> f64 {
        let lam = self.lambda as f64;
        let d = self.dim as f64;
        (self.b_const() + (lam - 1.0) * (lam + d - 3.0)) / (2.0 * self.k)
    }

    /// E_l = l (l + D - 2).
    pub fn e_level(&self, l: usize) -> f64 {
        (l * (l + self.dim - 2)) as f64
    }
}

/// Radial overlap coefficient
/// c_l = sqrt(1 + (2D-5)(D-1)/2k + (l-1)(l+D-2)/k) for 1 <= l <= Lambda,
/// zero otherwise (in particular at l = 0 and l = Lambda + 1).
pub fn coef_c(params: &ModelParams, l: usize) -> f64 {
    if l == 0 || l > params.lambda {
        return 0.0;
    }
    let d = params.dim as f64;
    let lf = l as f64;
    (1.0 + params.b_const() / params.k + (lf - 1.0) * (lf + d - 2.0) / params.k).sqrt()
}

/// The assembled fuzzy sphere: coordinate and angular-momentum matrices on
/// the N-dimensional truncated space, with level projectors and the two
/// Casimir-type squares. Immutable once built.
pub struct FuzzyAlgebra {
    pub params: ModelParams,
    pub space: TruncatedSpace,
    pub n: usize,
    /// Row/column offset of each level block.
    pub offsets: Vec<usize>,
    /// x[i-1] is the matrix of the projected coordinate, i = 1..D.
    pub x: Vec<DMatrix<C64>>,
    /// Angular momenta for h < k (1-based axes).
    l_upper: Vec<((usize, usize), DMatrix<C64>)>,
    pub lsq: DMatrix<C64>,
    pub xsq: DMatrix<C64>,
    pub block_proj: Vec<DMatrix<C64>>,
}

impl FuzzyAlgebra {
    pub fn build(params: ModelParams) -> Result<Self> {
        let space = TruncatedSpace::build(params.dim, params.lambda)?;
        let n = space.n_total;
        let dim = params.dim;
        let lambda = params.lambda;
        let mut offsets = Vec::with_capacity(lambda + 1);
        let mut acc = 0;
        for s in &space.spaces {
            offsets.push(acc);
            acc += s.dim_space();
        }

        let zero = || DMatrix::from_element(n, n, C64::new(0.0, 0.0));

        // coordinates: raise and lower blocks are assembled independently so
        // Hermiticity is a check, not an input
        let mut x = Vec::with_capacity(dim);
        for i in 1..=dim {
            let mut m = zero();
            for l in 0..=lambda {
                let src = offsets[l];
                if l < lambda {
                    let c = coef_c(&params, l + 1);
                    let r = space.raise_block(l, i);
                    let dst = offsets[l + 1];
                    for a in 0..r.nrows() {
                        for b in 0..r.ncols() {
                            m[(dst + a, src + b)] = r[(a, b)] * C64::new(c, 0.0);
                        }
                    }
                }
                if l >= 1 {
                    let c = coef_c(&params, l);
                    let w = space.lower_block(l, i);
                    let dst = offsets[l - 1];
                    for a in 0..w.nrows() {
                        for b in 0..w.ncols() {
                            m[(dst + a, src + b)] = w[(a, b)] * C64::new(c, 0.0);
                        }
                    }
                }
            }
            let herm = inf_norm(&(&m - &m.adjoint()));
            if herm > params.tolerance {
                return Err(Error::Numerical(format!(
                    "coordinate matrix x^{i} fails Hermiticity by {herm:.3e}"
                )));
            }
            x.push(m);
        }

        let mut l_upper = Vec::new();
        for h in 1..=dim {
            for k in (h + 1)..=dim {
                let mut m = zero();
                for l in 0..=lambda {
                    let off = offsets[l];
                    let blk = space.spaces[l].action_l(h, k)?;
                    for a in 0..blk.nrows() {
                        for b in 0..blk.ncols() {
                            m[(off + a, off + b)] = blk[(a, b)];
                        }
                    }
                }
                l_upper.push(((h, k), m));
            }
        }

        let mut lsq = zero();
        for (_, m) in &l_upper {
            lsq += m * m;
        }
        let mut xsq = zero();
        for m in &x {
            xsq += m * m;
        }
        let mut block_proj = Vec::with_capacity(lambda + 1);
        for l in 0..=lambda {
            let mut p = zero();
            for a in 0..space.spaces[l].dim_space() {
                p[(offsets[l] + a, offsets[l] + a)] = C64::new(1.0, 0.0);
            }
            block_proj.push(p);
        }

        Ok(FuzzyAlgebra {
            params,
            space,
            n,
            offsets,
            x,
            l_upper,
            lsq,
            xsq,
            block_proj,
        })
    }

    /// Matrix of L_{hk} for any h != k (antisymmetric in the plane labels).
    pub fn l_mat(&self, h: usize, k: usize) -> Result<DMatrix<C64>> {
        if h == k || h == 0 || k == 0 || h > self.params.dim || k > self.params.dim {
            return Err(Error::Argument(format!(
                "rotation plane ({h},{k}) invalid for dimension {}",
                self.params.dim
            )));
        }
        for ((a, b), m) in &self.l_upper {
            if (*a, *b) == (h, k) {
                return Ok(m.clone());
            }
            if (*a, *b) == (k, h) {
                return Ok(-m.clone());
            }
        }
        unreachable!()
    }

    pub fn upper_l_planes(&self) -> impl Iterator<Item = (&(usize, usize), &DMatrix<C64>)> {
        self.l_upper.iter().map(|(p, m)| (p, m))
    }

    /// Worst deviation of the Casimir spectrum from {E_l with multiplicity
    /// dim V_D^l}.
    pub fn lsq_spectrum_residual(&self) -> Result<f64> {
        let vals = hermitian_eigenvalues(&self.lsq)?;
        let mut expected = Vec::new();
        for l in 0..=self.params.lambda {
            let e = self.params.e_level(l);
            for _ in 0..dim_v(self.params.dim, l) {
                expected.push(e);
            }
        }
        expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut worst = 0.0f64;
        for (v, e) in vals.iter().zip(expected.iter()) {
            worst = worst.max((v - e).abs());
        }
        Ok(worst)
    }
}

/// Result of one relation check: the max-abs residual and the tolerance it
/// was held to.
#[derive(Clone, Debug)]
pub struct RelationResidual {
    pub relation: String,
    pub residual: f64,
    pub tolerance: f64,
}

impl RelationResidual {
    pub fn pass(&self) -> bool {
        self.residual.is_finite() && self.residual <= self.tolerance
    }
}

/// K = 1/k + c_Lambda^2 / (D + 2 Lambda - 2), the top-level Snyder constant.
pub fn snyder_k_constant(params: &ModelParams) -> f64 {
    if params.lambda == 0 {
        return 1.0 / params.k;
    }
    let c = coef_c(params, params.lambda);
    1.0 / params.k + c * c / (params.dim as f64 + 2.0 * params.lambda as f64 - 2.0)
}

/// [x^i, x^j] = (-1/k + K P^Lambda) i L_{ij}.
pub fn verify_snyder(alg: &FuzzyAlgebra) -> Result<RelationResidual> {
    let params = &alg.params;
    let kc = snyder_k_constant(params);
    let top = &alg.block_proj[params.lambda];
    let mut worst = 0.0f64;
    for h in 1..=params.dim {
        for k in (h + 1)..=params.dim {
            let lm = alg.l_mat(h, k)?;
            let il = lm.map(|z| z * C64::new(0.0, 1.0));
            let comm = &alg.x[h - 1] * &alg.x[k - 1] - &alg.x[k - 1] * &alg.x[h - 1];
            let target =
                il.map(|z| z * C64::new(-1.0 / params.k, 0.0)) + top * il.scale(kc);
            worst = worst.max(inf_norm(&(comm - target)));
        }
    }
    Ok(RelationResidual {
        relation: "snyder-commutator".into(),
        residual: worst,
        tolerance: 1e-10,
    })
}

/// Expected eigenvalue of the square distance on level l.
pub fn xsq_eigenvalue(params: &ModelParams, l: usize) -> f64 {
    if l < params.lambda {
        1.0 + (params.e_level(l) + params.b_const()) / params.k
    } else {
        let c = coef_c(params, params.lambda);
        params.lambda as f64 / (params.dim as f64 + 2.0 * params.lambda as f64 - 2.0) * c * c
    }
}

/// x^2 as the polynomial chi(L^2): matrix residual plus per-level eigenvalue
/// deviations.
pub struct XsqReport {
    pub matrix_residual: f64,
    /// (level, expected eigenvalue, worst block deviation).
    pub level_values: Vec<(usize, f64, f64)>,
    pub tolerance: f64,
}

pub fn verify_xsq(alg: &FuzzyAlgebra) -> XsqReport {
    let params = &alg.params;
    let (d, lam, k, b) = (
        params.dim as f64,
        params.lambda as f64,
        params.k,
        params.b_const(),
    );
    let n = alg.n;
    let mut chi = DMatrix::from_diagonal_element(n, n, C64::new(1.0 + b / k, 0.0));
    chi += alg.lsq.map(|z| z / C64::new(k, 0.0));
    let top_coef =
        (lam + d - 2.0) / (2.0 * lam + d - 2.0) * (1.0 + b / k + lam * (lam + d - 1.0) / k);
    chi -= alg.block_proj[params.lambda].scale(top_coef);
    let matrix_residual = inf_norm(&(&alg.xsq - chi));

    let mut level_values = Vec::new();
    for l in 0..=params.lambda {
        let expected = xsq_eigenvalue(params, l);
        let off = alg.offsets[l];
        let dim_l = alg.space.spaces[l].dim_space();
        let mut dev = 0.0f64;
        for a in 0..dim_l {
            for bcol in 0..dim_l {
                let got = alg.xsq[(off + a, off + bcol)];
                let want = if a == bcol { expected } else { 0.0 };
                dev = dev.max((got - C64::new(want, 0.0)).norm());
            }
        }
        level_values.push((l, expected, dev));
    }
    XsqReport {
        matrix_residual,
        level_values,
        tolerance: 1e-10,
    }
}

/// Residuals of the auxiliary relation families.
pub struct AuxReport {
    pub vector_transform: RelationResidual,
    pub so_brackets: RelationResidual,
    /// Levi-Civita contraction (defined for D >= 3).
    pub epsilon_contraction: Option<RelationResidual>,
    pub nilpotency_x: RelationResidual,
    /// Angular-momentum nilpotency (needs a triple h != j != k != h, D >= 3).
    pub nilpotency_l: Option<RelationResidual>,
    /// (measured operator norm, bound) per coordinate.
    pub op_norms: Vec<(f64, f64)>,
}

fn permutation_sign(perm: &[usize]) -> f64 {
    let mut p = perm.to_vec();
    let mut sign = 1.0;
    for i in 0..p.len() {
        while p[i] != i {
            let j = p[i];
            p.swap(i, j);
            sign = -sign;
        }
    }
    sign
}

fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

pub fn verify_aux_relations(alg: &FuzzyAlgebra) -> Result<AuxReport> {
    let params = &alg.params;
    let dim = params.dim;
    let n = alg.n;
    let zero = || DMatrix::from_element(n, n, C64::new(0.0, 0.0));

    // vector transformation [iL_{ij}, x^h] = x^i delta_{hj} - x^j delta_{hi}
    let mut vt = 0.0f64;
    for i in 1..=dim {
        for j in (i + 1)..=dim {
            let il = alg.l_mat(i, j)?.map(|z| z * C64::new(0.0, 1.0));
            for h in 1..=dim {
                let comm = &il * &alg.x[h - 1] - &alg.x[h - 1] * &il;
                let mut target = zero();
                if h == j {
                    target += &alg.x[i - 1];
                }
                if h == i {
                    target -= &alg.x[j - 1];
                }
                vt = vt.max(inf_norm(&(comm - target)));
            }
        }
    }

    // so(D) brackets
    let mut sb = 0.0f64;
    for i in 1..=dim {
        for j in (i + 1)..=dim {
            let il_ij = alg.l_mat(i, j)?.map(|z| z * C64::new(0.0, 1.0));
            for h in 1..=dim {
                for k in 1..=dim {
                    if h == k {
                        continue;
                    }
                    let il_hk = alg.l_mat(h, k)?.map(|z| z * C64::new(0.0, 1.0));
                    let comm = &il_ij * &il_hk - &il_hk * &il_ij;
                    let mut target = zero();
                    // L_{aa} = 0, so coincident-plane terms drop out
                    if h == j && i != k {
                        target += alg.l_mat(i, k)?.map(|z| z * C64::new(0.0, 1.0));
                    }
                    if h == i && j != k {
                        target -= alg.l_mat(j, k)?.map(|z| z * C64::new(0.0, 1.0));
                    }
                    if k == j && i != h {
                        target -= alg.l_mat(i, h)?.map(|z| z * C64::new(0.0, 1.0));
                    }
                    if k == i && j != h {
                        target += alg.l_mat(j, h)?.map(|z| z * C64::new(0.0, 1.0));
                    }
                    sb = sb.max(inf_norm(&(comm - target)));
                }
            }
        }
    }

    // epsilon^{i1 i2 i3 ...} x^{i1} L_{i2 i3} = 0 per free index tuple
    let epsilon_contraction = if dim >= 3 {
        let mut worst = 0.0f64;
        let mut perm: Vec<usize> = (0..dim).collect();
        let mut sums: std::collections::BTreeMap<Vec<usize>, DMatrix<C64>> =
            std::collections::BTreeMap::new();
        loop {
            let sign = permutation_sign(&perm);
            let term = (&alg.x[perm[0]] * alg.l_mat(perm[1] + 1, perm[2] + 1)?).scale(sign);
            let free: Vec<usize> = perm[3..].to_vec();
            match sums.get_mut(&free) {
                Some(m) => *m += term,
                None => {
                    sums.insert(free, term);
                }
            }
            if !next_permutation(&mut perm) {
                break;
            }
        }
        for m in sums.values() {
            worst = worst.max(inf_norm(m));
        }
        Some(RelationResidual {
            relation: "epsilon-contraction".into(),
            residual: worst,
            tolerance: 1e-10,
        })
    } else {
        None
    };

    // nilpotency of raising combinations
    let power = 2 * params.lambda + 1;
    let nil_tol = 1e-8 * (1.0 + params.epsilon()).powi(power as i32);
    let mut nx = 0.0f64;
    for h in 1..=dim {
        for k in 1..=dim {
            if h == k {
                continue;
            }
            let a = &alg.x[h - 1] + alg.x[k - 1].map(|z| z * C64::new(0.0, 1.0));
            let mut p = DMatrix::from_diagonal_element(n, n, C64::new(1.0, 0.0));
            for _ in 0..power {
                p = &p * &a;
            }
            nx = nx.max(inf_norm(&p));
        }
    }
    let nilpotency_x = RelationResidual {
        relation: "coordinate-nilpotency".into(),
        residual: nx,
        tolerance: nil_tol,
    };

    let nilpotency_l = if dim >= 3 {
        let mut nl = 0.0f64;
        for h in 1..=dim {
            for k in 1..=dim {
                for j in 1..=dim {
                    if h == j || k == j || h == k {
                        continue;
                    }
                    let a =
                        alg.l_mat(h, j)? + alg.l_mat(k, j)?.map(|z| z * C64::new(0.0, 1.0));
                    let mut p = DMatrix::from_diagonal_element(n, n, C64::new(1.0, 0.0));
                    for _ in 0..power {
                        p = &p * &a;
                    }
                    nl = nl.max(inf_norm(&p));
                }
            }
        }
        // angular momenta carry eigenvalues up to Lambda, so their powers and
        // the roundoff allowance grow with the same factor
        let scale = (2.0 * params.lambda as f64).max(1.0).powi(power as i32);
        Some(RelationResidual {
            relation: "angular-momentum-nilpotency".into(),
            residual: nl,
            tolerance: 1e-8 * scale,
        })
    } else {
        None
    };

    let bound = (1.0
        + (params.b_const()
            + (params.lambda as f64 - 1.0) * (params.lambda as f64 + dim as f64 - 3.0))
            / params.k)
        .max(0.0)
        .sqrt();
    let mut op_norms = Vec::new();
    for m in &alg.x {
        op_norms.push((hermitian_op_norm(m)?, bound));
    }

    Ok(AuxReport {
        vector_transform: RelationResidual {
            relation: "vector-transformation".into(),
            residual: vt,
            tolerance: 1e-10,
        },
        so_brackets: RelationResidual {
            relation: "so-brackets".into(),
            residual: sb,
            tolerance: 1e-10,
        },
        epsilon_contraction,
        nilpotency_x,
        nilpotency_l,
        op_norms,
    })
}

/// Dimension of the span of words in the coordinates up to the given length
/// (identity included), by incremental orthogonalization of the vectorized
/// word matrices with early stop at saturation. Returns the rank and the
/// rejected-candidate residuals.
pub fn generate_algebra_dimension(
    alg: &FuzzyAlgebra,
    max_len: usize,
) -> Result<(usize, Vec<f64>)> {
    let n = alg.n;
    let target = n * n;
    let mut basis: Vec<Vec<C64>> = Vec::new();
    let mut rejected: Vec<f64> = Vec::new();
    let mut absorb = |mat: &DMatrix<C64>, basis: &mut Vec<Vec<C64>>| {
        let norm0 = mat.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm0 == 0.0 {
            return;
        }
        let mut w: Vec<C64> = mat.iter().map(|z| z / C64::new(norm0, 0.0)).collect();
        for _ in 0..2 {
            for b in basis.iter() {
                let ip: C64 = b
                    .iter()
                    .zip(w.iter())
                    .map(|(bi, wi)| bi.conj() * *wi)
                    .sum();
                for (wi, bi) in w.iter_mut().zip(b.iter()) {
                    *wi -= ip * *bi;
                }
            }
        }
        let norm = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-8 {
            for wi in w.iter_mut() {
                *wi /= C64::new(norm, 0.0);
            }
            basis.push(w);
        } else {
            rejected.push(norm);
        }
    };
    let mut words: Vec<DMatrix<C64>> =
        vec![DMatrix::from_diagonal_element(n, n, C64::new(1.0, 0.0))];
    absorb(&words[0], &mut basis);
    for _ in 0..max_len {
        if basis.len() >= target {
            break;
        }
        let mut next = Vec::new();
        for w in &words {
            for xm in &alg.x {
                let prod = xm * w;
                absorb(&prod, &mut basis);
                next.push(prod);
            }
        }
        words = next;
    }
    let ambiguous = rejected
        .iter()
        .filter(|r| **r > 1e-11 && **r < 1e-5)
        .count();
    if ambiguous > 0 {
        return Err(Error::Numerical(format!(
            "generation rank ill-conditioned: {ambiguous} candidates near the drop threshold"
        )));
    }
    Ok((basis.len(), rejected))
}

/// Off-pattern leakage: coordinates must couple only adjacent levels and the
/// angular momenta must stay block-diagonal.
pub fn block_selection_residual(alg: &FuzzyAlgebra) -> f64 {
    let lambda = alg.params.lambda;
    let mut worst = 0.0f64;
    let block = |m: &DMatrix<C64>, la: usize, lb: usize| -> f64 {
        let (oa, ob) = (alg.offsets[la], alg.offsets[lb]);
        let (da, db) = (
            alg.space.spaces[la].dim_space(),
            alg.space.spaces[lb].dim_space(),
        );
        let mut v = 0.0f64;
        for a in 0..da {
            for b in 0..db {
                v = v.max(m[(oa + a, ob + b)].norm());
            }
        }
        v
    };
    for la in 0..=lambda {
        for lb in 0..=lambda {
            if la.abs_diff(lb) != 1 {
                for m in &alg.x {
                    worst = worst.max(block(m, la, lb));
                }
            }
            if la != lb {
                for (_, m) in &alg.l_upper {
                    worst = worst.max(block(m, la, lb));
                }
            }
        }
    }
    worst
}

/// Residual of the Lagrange-polynomial form of the level projectors:
/// prod_{m != l} (L^2 - E_m)/(E_l - E_m) = P^l.
pub fn block_projector_lagrange_residual(alg: &FuzzyAlgebra) -> f64 {
    let params = &alg.params;
    let n = alg.n;
    let mut worst = 0.0f64;
    for l in 0..=params.lambda {
        let mut p = DMatrix::from_diagonal_element(n, n, C64::new(1.0, 0.0));
        for m in 0..=params.lambda {
            if m == l {
                continue;
            }
            let em = params.e_level(m);
            let el = params.e_level(l);
            let num = &alg.lsq - DMatrix::from_diagonal_element(n, n, C64::new(em, 0.0));
            p = &p * num.map(|z| z / C64::new(el - em, 0.0));
        }
        worst = worst.max(inf_norm(&(p - &alg.block_proj[l])));
    }
    worst
}

/// Covariance of the coordinates under a signed permutation of the axes
/// (including parity): conjugation by the induced block unitary sends x^h to
/// sign_h x^{perm(h)} and L_{hk} to sign_h sign_k L_{perm(h) perm(k)}.
pub fn equivariance_residual(alg: &FuzzyAlgebra, perm: &[usize], sign: &[f64]) -> Result<f64> {
    let n = alg.n;
    let mut w = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
    for (l, s) in alg.space.spaces.iter().enumerate() {
        let blk = s.signed_permutation_matrix(perm, sign);
        let off = alg.offsets[l];
        for a in 0..blk.nrows() {
            for b in 0..blk.ncols() {
                w[(off + a, off + b)] = blk[(a, b)];
            }
        }
    }
    let unit = inf_norm(
        &(&w * w.adjoint() - DMatrix::from_diagonal_element(n, n, C64::new(1.0, 0.0))),
    );
    let mut worst = unit;
    for h in 1..=alg.params.dim {
        let target = alg.x[perm[h - 1]].scale(sign[h - 1]);
        let conj = &w * &alg.x[h - 1] * w.adjoint();
        worst = worst.max(inf_norm(&(conj - target)));
    }
    for ((h, k), m) in &alg.l_upper {
        let (ph, pk) = (perm[h - 1] + 1, perm[k - 1] + 1);
        let target = alg.l_mat(ph, pk)?.scale(sign[h - 1] * sign[k - 1]);
        let conj = &w * m * w.adjoint();
        worst = worst.max(inf_norm(&(conj - target)));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coefficient_examples() {
        let p = ModelParams::new(3, 2, KRule::Explicit(100.0)).unwrap();
        assert!((coef_c(&p, 1) - 1.01f64.sqrt()).abs() < 1e-14);
        assert_eq!(coef_c(&p, 0), 0.0);
        assert_eq!(coef_c(&p, 3), 0.0); // l = Lambda + 1
    }

    #[test]
    fn cutoff_validation() {
        // D=3, Lambda=2, k=1: 6 < 2 sqrt(2) is false
        assert!(ModelParams::new(3, 2, KRule::Explicit(1.0)).is_err());
        assert!(ModelParams::new(3, 2, KRule::Default).is_ok());
    }

    #[test]
    fn smallest_algebra_structure() {
        // D=2, Lambda=1: N=3, x^1 couples levels 0 and 1 only; the coupling
        // column carries total mass c_1/sqrt(2)
        let params = ModelParams::new(2, 1, KRule::Default).unwrap();
        let c1 = coef_c(&params, 1);
        let alg = FuzzyAlgebra::build(params).unwrap();
        assert_eq!(alg.n, 3);
        assert!(block_selection_residual(&alg) < 1e-13);
        let col0: f64 = (0..3)
            .map(|a| alg.x[0][(a, 0)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!((col0 - c1 / 2f64.sqrt()).abs() < 1e-12);
        // Lambda=0: a single state, vanishing coordinates
        let p0 = ModelParams::new(2, 0, KRule::Default).unwrap();
        let alg0 = FuzzyAlgebra::build(p0).unwrap();
        assert_eq!(alg0.n, 1);
        assert!(inf_norm(&alg0.x[0]) < 1e-15);
    }

    #[test]
    fn casimir_spectrum() {
        let params = ModelParams::new(3, 2, KRule::Default).unwrap();
        let alg = FuzzyAlgebra::build(params).unwrap();
        assert!(alg.lsq_spectrum_residual().unwrap() < 1e-10);
    }

    #[test]
    fn snyder_and_xsq() {
        for (d, lam) in [(2usize, 1usize), (3, 2), (2, 3)] {
            // exercise both the default rule and the undivided square rule
            let k = ((lam * (lam + d - 2)).pow(2) as f64).max(1.0);
            let params = ModelParams::new(d, lam, KRule::Explicit(k)).unwrap();
            let alg = FuzzyAlgebra::build(params).unwrap();
            let sn = verify_snyder(&alg).unwrap();
            assert!(sn.pass(), "snyder {d},{lam}: {}", sn.residual);
            let xr = verify_xsq(&alg);
            assert!(xr.matrix_residual < 1e-10, "xsq {d},{lam}");
            for (_, _, dev) in &xr.level_values {
                assert!(*dev < 1e-10);
            }
        }
        // frozen eigenvalues at D=3, Lambda=2, k=100: B = 1
        let params = ModelParams::new(3, 2, KRule::Explicit(100.0)).unwrap();
        assert!((xsq_eigenvalue(&params, 0) - 1.01).abs() < 1e-14);
        assert!((xsq_eigenvalue(&params, 1) - 1.03).abs() < 1e-14);
        // top level sits below 1
        assert!(xsq_eigenvalue(&params, 2) < 1.0);
    }

    #[test]
    fn xsq_shrinks_to_unity_along_the_default_rule() {
        // every level below the top collapses to radius 1; the top level
        // stays below 1 by construction
        let mut prev = f64::INFINITY;
        for lam in 2..=6usize {
            let params = ModelParams::new(3, lam, KRule::Default).unwrap();
            let mut dev = 0.0f64;
            for l in 0..lam {
                dev = dev.max((xsq_eigenvalue(&params, l) - 1.0).abs());
            }
            assert!(dev < prev, "max deviation not decreasing at Lambda={lam}");
            assert!(xsq_eigenvalue(&params, lam) < 1.0);
            prev = dev;
        }
    }

    #[test]
    fn aux_relations_small() {
        let params = ModelParams::new(3, 2, KRule::Explicit(36.0)).unwrap();
        let alg = FuzzyAlgebra::build(params).unwrap();
        let aux = verify_aux_relations(&alg).unwrap();
        assert!(aux.vector_transform.pass());
        assert!(aux.so_brackets.pass());
        assert!(aux.epsilon_contraction.unwrap().pass());
        assert!(aux.nilpotency_x.pass());
        assert!(aux.nilpotency_l.unwrap().pass());
        for (norm, bound) in &aux.op_norms {
            assert!(*norm <= bound + 1e-10);
        }
        // D=2 has no epsilon identity or angular-momentum triple
        let params = ModelParams::new(2, 1, KRule::Default).unwrap();
        let alg = FuzzyAlgebra::build(params).unwrap();
        let aux = verify_aux_relations(&alg).unwrap();
        assert!(aux.epsilon_contraction.is_none());
        assert!(aux.nilpotency_l.is_none());
        assert!(aux.nilpotency_x.pass());
    }

    #[test]
    fn generation_ranks() {
        for (d, lam, expect) in [(2usize, 1usize, 9usize), (3, 1, 16), (2, 0, 1)] {
            let params = ModelParams::new(d, lam, KRule::Default).unwrap();
            let alg = FuzzyAlgebra::build(params).unwrap();
            let (rank, _) = generate_algebra_dimension(&alg, 2 * lam + 2).unwrap();
            assert_eq!(rank, expect, "D={d} Lambda={lam}");
        }
    }

    #[test]
    fn lagrange_projectors() {
        let params = ModelParams::new(3, 2, KRule::Default).unwrap();
        let alg = FuzzyAlgebra::build(params).unwrap();
        assert!(block_projector_lagrange_residual(&alg) < 1e-10);
    }

    #[test]
    fn signed_permutation_covariance() {
        let params = ModelParams::new(3, 2, KRule::Default).unwrap();
        let alg = FuzzyAlgebra::build(params).unwrap();
        // swap axes 1,2 with a sign flip on axis 3; also full parity
        let r1 = equivariance_residual(&alg, &[1, 0, 2], &[1.0, 1.0, -1.0]).unwrap();
        assert!(r1 < 1e-10, "signed permutation residual {r1}");
        let r2 = equivariance_residual(&alg, &[0, 1, 2], &[-1.0, -1.0, -1.0]).unwrap();
        assert!(r2 < 1e-10, "parity residual {r2}");
    }
}
