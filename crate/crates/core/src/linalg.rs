//! Small dense linear-algebra helpers shared by the construction modules.

use crate::error::{Error, Result};
use crate::C64;
use nalgebra::DMatrix;

/// Eigenvalues of a Hermitian matrix, ascending. The Hermitian residual is
/// checked first so silent misuse cannot slip through.
pub fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Result<Vec<f64>> {
    let h_resid = (m - m.adjoint()).iter().map(|c| c.norm()).fold(0.0, f64::max);
    let scale = m.iter().map(|c| c.norm()).fold(0.0, f64::max).max(1.0);
    if h_resid > 1e-10 * scale {
        return Err(Error::Numerical(format!(
            "matrix is not Hermitian (residual {h_resid:.3e})"
        )));
    }
    let sym = m.clone().symmetric_eigen();
    let mut vals: Vec<f64> = sym.eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(vals)
}

/// Spectral norm of a Hermitian matrix (largest |eigenvalue|).
pub fn hermitian_op_norm(m: &DMatrix<C64>) -> Result<f64> {
    let vals = hermitian_eigenvalues(m)?;
    Ok(vals.iter().map(|v| v.abs()).fold(0.0, f64::max))
}

/// Max-abs entry.
pub fn inf_norm(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// Pivoted Cholesky of a Hermitian PSD matrix.
///
/// Returns the pivot order and the lower-triangular factor columns, stopping
/// when the largest residual diagonal falls below `drop_tol * max(diag)`.
/// Ties in the pivot choice resolve to the smallest index, which keeps the
/// factorization deterministic for the lexicographically ordered bases used
/// throughout the crate.
pub struct PivotedCholesky {
    pub pivots: Vec<usize>,
    /// n x r factor; `gram[p_i][p_j]` is reproduced by `sum_k L[i,k] conj(L[j,k])`
    /// after permutation.
    pub factor: DMatrix<C64>,
}

pub fn pivoted_cholesky(gram: &DMatrix<C64>, drop_tol: f64) -> Result<PivotedCholesky> {
    let n = gram.nrows();
    assert_eq!(n, gram.ncols());
    let mut diag: Vec<f64> = (0..n).map(|i| gram[(i, i)].re).collect();
    let max_diag0 = diag.iter().cloned().fold(0.0, f64::max);
    if diag.iter().any(|&d| d < -drop_tol * max_diag0.max(1.0)) {
        return Err(Error::Numerical(
            "gram matrix has a negative diagonal".into(),
        ));
    }
    let threshold = drop_tol * max_diag0;
    let mut pivots: Vec<usize> = Vec::new();
    let mut cols: Vec<Vec<C64>> = Vec::new();
    let mut used = vec![false; n];
    loop {
        let mut best = None;
        let mut best_val = threshold;
        for i in 0..n {
            if !used[i] && diag[i] > best_val {
                best = Some(i);
                best_val = diag[i];
            }
        }
        let Some(p) = best else { break };
        let d = diag[p].sqrt();
        let mut col = vec![C64::new(0.0, 0.0); n];
        for i in 0..n {
            if used[i] {
                continue;
            }
            let mut v = gram[(i, p)];
            for (k, c) in cols.iter().enumerate() {
                let _ = k;
                v -= c[i] * c[p].conj();
            }
            col[i] = v / C64::new(d, 0.0);
        }
        for i in 0..n {
            if !used[i] {
                diag[i] -= col[i].norm_sqr();
            }
        }
        used[p] = true;
        pivots.push(p);
        cols.push(col);
    }
    let r = pivots.len();
    let mut factor = DMatrix::from_element(n, r, C64::new(0.0, 0.0));
    for (k, c) in cols.iter().enumerate() {
        for i in 0..n {
            factor[(i, k)] = c[i];
        }
    }
    Ok(PivotedCholesky { pivots, factor })
}

/// Coefficient matrix B (n x r) with B^H G B = I, from a pivoted Cholesky of
/// G: columns combine the pivot basis vectors through the inverse adjoint of
/// the leading triangular block.
pub fn orthonormal_coefficients(gram: &DMatrix<C64>, drop_tol: f64) -> Result<(Vec<usize>, DMatrix<C64>)> {
    let n = gram.nrows();
    let pc = pivoted_cholesky(gram, drop_tol)?;
    let r = pc.pivots.len();
    // leading r x r lower-triangular block in pivot order
    let mut lr = DMatrix::from_element(r, r, C64::new(0.0, 0.0));
    for k in 0..r {
        for i in 0..r {
            lr[(i, k)] = pc.factor[(pc.pivots[i], k)];
        }
    }
    // solve L^H X = I  =>  X = L^{-H}, upper triangular
    let mut x = DMatrix::from_element(r, r, C64::new(0.0, 0.0));
    for col in 0..r {
        // back substitution on the adjoint (upper triangular with conj diagonal)
        let mut rhs = vec![C64::new(0.0, 0.0); r];
        rhs[col] = C64::new(1.0, 0.0);
        for i in (0..r).rev() {
            let mut v = rhs[i];
            for j in (i + 1)..r {
                v -= lr[(j, i)].conj() * x[(j, col)];
            }
            x[(i, col)] = v / lr[(i, i)].conj();
        }
    }
    let mut b = DMatrix::from_element(n, r, C64::new(0.0, 0.0));
    for k in 0..r {
        for i in 0..r {
            b[(pc.pivots[i], k)] = x[(i, k)];
        }
    }
    Ok((pc.pivots, b))
}

/// Rank of a set of complex vectors by modified Gram-Schmidt with a relative
/// drop tolerance. Returns the rank; `residuals` collects the norm of each
/// rejected candidate relative to its original norm (ill-conditioning
/// diagnostics).
pub fn gram_schmidt_rank(
    vectors: impl Iterator<Item = Vec<C64>>,
    rel_tol: f64,
    max_rank: usize,
) -> (usize, Vec<f64>) {
    let mut basis: Vec<Vec<C64>> = Vec::new();
    let mut rejected = Vec::new();
    for v in vectors {
        if basis.len() >= max_rank {
            break;
        }
        let norm0 = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if norm0 == 0.0 {
            continue;
        }
        let mut w = v;
        for b in &basis {
            let ip: C64 = b
                .iter()
                .zip(w.iter())
                .map(|(bi, wi)| bi.conj() * *wi)
                .sum();
            for (wi, bi) in w.iter_mut().zip(b.iter()) {
                *wi -= ip * *bi;
            }
        }
        // one re-orthogonalization pass for stability
        for b in &basis {
            let ip: C64 = b
                .iter()
                .zip(w.iter())
                .map(|(bi, wi)| bi.conj() * *wi)
                .sum();
            for (wi, bi) in w.iter_mut().zip(b.iter()) {
                *wi -= ip * *bi;
            }
        }
        let norm = w.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if norm > rel_tol * norm0 {
            for wi in w.iter_mut() {
                *wi /= C64::new(norm, 0.0);
            }
            basis.push(w);
        } else {
            rejected.push(norm / norm0);
        }
    }
    (basis.len(), rejected)
}
