//! Channel coefficients for products of (fuzzy) harmonics, and the strong
//! convergence experiment.
//!
//! A product T_l T_m decomposes over the levels n in {|l-m|, |l-m|+2, ..,
//! l+m}; the channel map pairs r = (l+m-n)/2 slots and projects the rest.
//! The classical coefficients N^{lm}_n are pinned by the closed form below
//! (validated against raw moment integrals; the pairing count behind it is
//! l! m! n! / [r! (l-r)! (m-r)!] per 2^s s! multiplicity). The deformed
//! coefficients are defined by the coordinate-action recursion, with the
//! direct operator construction of the fuzzy harmonics as their oracle.

use crate::error::{Error, Result};
use crate::fuzzy::{coef_c, FuzzyAlgebra, ModelParams};
use crate::gammafn::{double_factorial, factorial};
use crate::harmonic::{decompose_polynomial, q_l, SphereFunction};
use crate::poly::Poly;
use crate::symtensor::{sorted_multi_indices, MultiIndex, ProjectorOracle, SymTensor};
use crate::C64;
use nalgebra::DMatrix;
use std::collections::BTreeMap;

/// Allowed product channels L^{lm} = {|l-m|, |l-m|+2, ..., l+m}.
pub fn allowed_channels(l: usize, m: usize) -> Vec<usize> {
    let lo = l.abs_diff(m);
    (lo..=l + m).step_by(2).collect()
}

/// Classical channel coefficient
/// N^{lm}_n = (D+2n-2)!! l! m! / [(D+2s-2)!! (l-r)! (m-r)! r!]
/// with r = (l+m-n)/2 and s = n+r.
pub fn classical_n(dim: usize, l: usize, m: usize, n: usize) -> Result<f64> {
    if !allowed_channels(l, m).contains(&n) {
        return Err(Error::Argument(format!(
            "channel {n} not in the allowed list for levels ({l},{m})"
        )));
    }
    let r = (l + m - n) / 2;
    let s = n + r;
    let d = dim as i64;
    Ok(
        double_factorial(d + 2 * n as i64 - 2) * factorial(l as u64) * factorial(m as u64)
            / (double_factorial(d + 2 * s as i64 - 2)
                * factorial((l - r) as u64)
                * factorial((m - r) as u64)
                * factorial(r as u64)),
    )
}

/// The r-fold slot pairing of two trace-free symmetric tensors, followed by
/// the trace-free projection on the remaining n = l + m - 2r slots. This is
/// the contraction tensor of the product decomposition applied to concrete
/// coefficient tensors; it is built by sequential derivative contractions,
/// never as a dense multi-slot object.
pub fn channel_map(
    oracle: &ProjectorOracle,
    f: &SymTensor,
    g: &SymTensor,
    n: usize,
) -> Result<SymTensor> {
    let (l, m) = (f.rank, g.rank);
    if !allowed_channels(l, m).contains(&n) {
        return Err(Error::Argument(format!(
            "channel {n} not allowed for ranks ({l},{m})"
        )));
    }
    let r = (l + m - n) / 2;
    let dim = oracle.dim;
    let pf = f.to_poly();
    let pg = g.to_poly();
    // sum over ordered r-tuples of paired axes via multi-derivatives:
    // sum_alpha (r!/alpha!) d^alpha p_f d^alpha p_g, then the tuple-count
    // normalizations (l-r)!/l! and (m-r)!/m!
    let mut acc = Poly::zero(dim);
    let mut alpha = vec![0u8; dim];
    loop {
        // next composition of r into dim parts (including the initial zero
        // vector only when r = 0)
        let total: usize = alpha.iter().map(|&a| a as usize).sum();
        if total == r {
            let mut wf = pf.clone();
            let mut wg = pg.clone();
            for (i, &a) in alpha.iter().enumerate() {
                for _ in 0..a {
                    wf = wf.diff(i + 1);
                    wg = wg.diff(i + 1);
                }
            }
            if !wf.is_zero() && !wg.is_zero() {
                let mut ways = factorial(r as u64);
                for &a in alpha.iter() {
                    ways /= factorial(a as u64);
                }
                acc = acc.add(&wf.mul(&wg).scale(C64::new(ways, 0.0)));
            }
        }
        // odometer over alpha with entries summing to <= r
        let mut pos = 0;
        loop {
            if pos == dim {
                let norm = factorial((l - r) as u64) / factorial(l as u64)
                    * (factorial((m - r) as u64) / factorial(m as u64));
                let projected = oracle.project_poly(&acc.scale(C64::new(norm, 0.0)), n)?;
                return Ok(SymTensor::from_poly(&projected, n));
            }
            if (alpha[pos] as usize) < r {
                alpha[pos] += 1;
                break;
            }
            alpha[pos] = 0;
            pos += 1;
        }
    }
}

/// Classical product channels: n -> N^{lm}_n * channel_map(f, g, n), given
/// the trace-free coefficient tensors of one level-l and one level-m factor.
pub fn product_channels_classical(
    oracle: &ProjectorOracle,
    f: &SymTensor,
    g: &SymTensor,
) -> Result<BTreeMap<usize, SymTensor>> {
    let mut out = BTreeMap::new();
    for n in allowed_channels(f.rank, g.rank) {
        let coef = classical_n(oracle.dim, f.rank, g.rank, n)?;
        let t = channel_map(oracle, f, g, n)?.scale(C64::new(coef, 0.0));
        if t.max_abs() > 0.0 {
            out.insert(n, t);
        }
    }
    Ok(out)
}

/// Pointwise product of two functions on the sphere through the classical
/// channel maps.
pub fn multiply_functions(
    oracle: &ProjectorOracle,
    a: &SphereFunction,
    b: &SphereFunction,
) -> Result<SphereFunction> {
    let mut out = SphereFunction::zero(oracle.dim);
    for (_, fa) in a.components.iter() {
        for (_, gb) in b.components.iter() {
            for (n, t) in product_channels_classical(oracle, fa, gb)? {
                out.add_component(n, t);
            }
        }
    }
    Ok(out)
}

/// Deformed channel coefficients from the coordinate-action recursion,
/// starting at the identity level:
/// N^{(l+1)m}_n = c_n N^{lm}_{n-1}
///              + c_{n+1} N^{lm}_{n+1} (n-l+m+1)(D+n-l+m-3) / [2(D+2n)(D+2n-2)],
/// with all coefficients beyond the cutoff killed by c = 0. Returns the map
/// n -> deformed coefficient for the requested (l, m).
pub fn fuzzy_n(params: &ModelParams, l: usize, m: usize) -> BTreeMap<usize, f64> {
    fuzzy_n_with_c(params.dim, l, m, |h| coef_c(params, h))
}

/// Same recursion with an arbitrary c-sequence (c == 1 degenerates to the
/// classical coefficients).
pub fn fuzzy_n_with_c(
    dim: usize,
    l: usize,
    m: usize,
    c: impl Fn(usize) -> f64,
) -> BTreeMap<usize, f64> {
    let mut table: BTreeMap<usize, f64> = BTreeMap::new();
    table.insert(m, 1.0);
    for lcur in 0..l {
        let mut next: BTreeMap<usize, f64> = BTreeMap::new();
        for n in allowed_channels(lcur + 1, m) {
            let mut v = 0.0;
            if n >= 1 {
                if let Some(&prev) = table.get(&(n - 1)) {
                    v += c(n) * prev;
                }
            }
            if let Some(&prev) = table.get(&(n + 1)) {
                let num1 = (n + m + 1) as f64 - lcur as f64;
                let d = dim as f64;
                let factor = if dim == 2 && n == 0 {
                    // the (D+n-l+m-3)/(D+2n-2) pair degenerates to 1 here
                    num1 / (2.0 * (d + 2.0 * n as f64))
                } else {
                    let num2 = d + n as f64 - lcur as f64 + m as f64 - 3.0;
                    num1 * num2
                        / (2.0 * (d + 2.0 * n as f64) * (d + 2.0 * n as f64 - 2.0))
                };
                v += c(n + 1) * prev * factor;
            }
            if v != 0.0 {
                next.insert(n, v);
            }
        }
        table = next;
    }
    table
}

/// One fuzzy harmonic: the operator P^l x^{j_1} .. x^{j_l} at a fixed upper
/// multi-index.
pub struct FuzzyHarmonic {
    pub l: usize,
    pub label: MultiIndex,
    pub matrix: DMatrix<C64>,
}

/// All fuzzy harmonics up to `lmax` (default interest: 2 Lambda, beyond
/// which they annihilate the truncated space), built by the level-up
/// recursion T^{l+1} = P^{l+1} (T^l tensor x).
pub fn build_fuzzy_harmonics(
    alg: &FuzzyAlgebra,
    lmax: usize,
) -> Result<Vec<Vec<FuzzyHarmonic>>> {
    let dim = alg.params.dim;
    let n = alg.n;
    let oracle = ProjectorOracle::new(dim, lmax.max(1));
    let eye = DMatrix::from_diagonal_element(n, n, C64::new(1.0, 0.0));
    let mut levels: Vec<Vec<FuzzyHarmonic>> = vec![vec![FuzzyHarmonic {
        l: 0,
        label: MultiIndex(vec![]),
        matrix: eye,
    }]];
    for l in 0..lmax {
        let prev = &levels[l];
        let labels_prev = sorted_multi_indices(dim, l);
        let mut level = Vec::new();
        for target in sorted_multi_indices(dim, l + 1) {
            let row = oracle.projector_row(&target)?;
            let mut mat = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
            for b in 1..=dim as u8 {
                for (pos, i) in labels_prev.iter().enumerate() {
                    let mut idx = i.0.clone();
                    idx.push(b);
                    let entry = row.get(&MultiIndex::new(idx, dim)?);
                    if entry.norm() > 0.0 {
                        let w = entry * C64::new(i.multiplicity(), 0.0);
                        mat += (&prev[pos].matrix * &alg.x[b as usize - 1]).map(|z| z * w);
                    }
                }
            }
            level.push(FuzzyHarmonic {
                l: l + 1,
                label: target,
                matrix: mat,
            });
        }
        levels.push(level);
    }
    Ok(levels)
}

/// Worst deviation between the fuzzy-harmonic operator action on the basis
/// and its channel expansion with the recursion coefficients.
pub fn fuzzy_harmonics_vs_recursion(
    alg: &FuzzyAlgebra,
    harmonics: &[Vec<FuzzyHarmonic>],
) -> Result<f64> {
    let params = &alg.params;
    let dim = params.dim;
    let lambda = params.lambda;
    let lmax = harmonics.len() - 1;
    let oracle = ProjectorOracle::new(dim, lmax + lambda);
    let mut worst = 0.0f64;
    for level in harmonics.iter().skip(1) {
        for fh in level {
            let l = fh.l;
            let phi = oracle.projector_row(&fh.label)?;
            for m in 0..=lambda {
                let table = fuzzy_n(params, l, m);
                let src = &alg.space.spaces[m];
                for (j, bpoly) in src.basis.iter().enumerate() {
                    let psi = SymTensor::from_poly(bpoly, m);
                    // predicted image as a function on the sphere
                    let mut pred = SphereFunction::zero(dim);
                    for (n_ch, coef) in &table {
                        if *n_ch > lambda {
                            continue;
                        }
                        let t = channel_map(&oracle, &phi, &psi, *n_ch)?
                            .scale(C64::new(*coef, 0.0));
                        pred.add_component(*n_ch, t);
                    }
                    // actual column of the operator in the orthonormal basis
                    let col = j + alg.offsets[m];
                    for n_ch in 0..=lambda {
                        let dst = &alg.space.spaces[n_ch];
                        let pred_coords = match pred.components.get(&n_ch) {
                            Some(t) => dst.coords(&t.to_poly()),
                            None => nalgebra::DVector::from_element(
                                dst.dim_space(),
                                C64::new(0.0, 0.0),
                            ),
                        };
                        for a in 0..dst.dim_space() {
                            let got = fh.matrix[(alg.offsets[n_ch] + a, col)];
                            worst = worst.max((got - pred_coords[a]).norm());
                        }
                    }
                }
            }
        }
    }
    Ok(worst)
}

/// The action of a band-limited fuzzy multiplication operator on a state of
/// the truncated space, entirely in coefficient space.
pub fn apply_fuzzy_function(
    params: &ModelParams,
    oracle: &ProjectorOracle,
    f: &SphereFunction,
    state: &SphereFunction,
) -> Result<SphereFunction> {
    let mut out = SphereFunction::zero(params.dim);
    for (l, fl) in f.components.iter() {
        for (m, sm) in state.components.iter() {
            if *m > params.lambda {
                return Err(Error::Argument(format!(
                    "state has a component at level {m} beyond the cutoff {}",
                    params.lambda
                )));
            }
            let table = fuzzy_n(params, *l, *m);
            for (n, coef) in table {
                if coef == 0.0 {
                    continue;
                }
                let t = channel_map(oracle, fl, sm, n)?.scale(C64::new(coef, 0.0));
                out.add_component(n, t);
            }
        }
    }
    Ok(out)
}

/// (hat f_{2 Lambda} - f . ) phi in coefficient space, for band-limited f
/// and phi (deg f <= 2 Lambda, deg phi <= Lambda): the channel-wise
/// difference of deformed and classical coefficients.
pub fn hat_minus_classical(
    params: &ModelParams,
    oracle: &ProjectorOracle,
    f: &SphereFunction,
    phi: &SphereFunction,
) -> Result<SphereFunction> {
    let mut out = SphereFunction::zero(params.dim);
    for (l, fl) in f.components.iter() {
        for (m, pm) in phi.components.iter() {
            let table = fuzzy_n(params, *l, *m);
            for n in allowed_channels(*l, *m) {
                let hat = table.get(&n).copied().unwrap_or(0.0);
                let cls = classical_n(params.dim, *l, *m, n)?;
                let dif = hat - cls;
                if dif == 0.0 {
                    continue;
                }
                let t = channel_map(oracle, fl, pm, n)?.scale(C64::new(dif, 0.0));
                out.add_component(n, t);
            }
        }
    }
    Ok(out)
}

/// Deterministic estimate of sup |f| over the sphere (max over a seeded
/// sample of directions plus the coordinate axes).
pub fn sup_norm_estimate(f: &SphereFunction, samples: usize) -> f64 {
    use rand::{Rng, SeedableRng};
    let dim = f.dim;
    let p = f.to_poly();
    let mut best = 0.0f64;
    let mut eval = |x: &[f64]| {
        best = best.max(p.eval(x).norm());
    };
    for i in 0..dim {
        let mut x = vec![0.0; dim];
        x[i] = 1.0;
        eval(&x);
        x[i] = -1.0;
        eval(&x);
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
    for _ in 0..samples {
        let mut x: Vec<f64> = (0..dim)
            .map(|_| {
                // Box-Muller from uniform pairs keeps the dependency surface rand-only
                let u: f64 = rng.gen_range(1e-12..1.0);
                let v: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                (-2.0 * u.ln()).sqrt() * v.cos()
            })
            .collect();
        let norm = x.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 0.0 {
            for a in x.iter_mut() {
                *a /= norm;
            }
            eval(&x);
        }
    }
    best
}

/// One row of the strong-convergence table.
#[derive(Clone, Debug, serde::Serialize)]
pub struct ConvergenceRow {
    pub lambda: usize,
    pub k: f64,
    pub norm: f64,
    pub bound: f64,
    pub epsilon: f64,
    pub f_op_norm: f64,
    pub eta: f64,
}

/// The strong-convergence experiment: for each cutoff in `lambdas`, the
/// exact Hilbert-space norm of (hat f_{2 Lambda} - f .) phi together with
/// the analytic envelope (e^{Lambda eps} - 1)(|f|_op + eta) |phi|.
pub fn convergence_experiment(
    dim: usize,
    f: &Poly,
    phi: &Poly,
    lambdas: &[usize],
    k_of_lambda: impl Fn(usize) -> crate::fuzzy::KRule,
) -> Result<Vec<ConvergenceRow>> {
    let deg_cap = f.degree() + phi.degree() + 2;
    let oracle = ProjectorOracle::new(dim, deg_cap);
    let f_full = decompose_polynomial(&oracle, f)?;
    let phi_full = decompose_polynomial(&oracle, phi)?;
    let mut rows = Vec::new();
    for &lam in lambdas {
        let params = ModelParams::new(dim, lam, k_of_lambda(lam))?;
        if phi_full.max_level() > lam {
            return Err(Error::Argument(format!(
                "test state has level {} above the cutoff {lam}",
                phi_full.max_level()
            )));
        }
        let f_band = f_full.truncate(2 * lam);
        let diff = hat_minus_classical(&params, &oracle, &f_band, &phi_full)?;
        let norm = diff.norm();
        let eps = params.epsilon();
        let f_op = sup_norm_estimate(&f_full, 4096);
        // eta bounds |f - f_{2 Lambda}|_op; zero once the band covers f
        let mut dropped = f_full.clone();
        dropped.components.retain(|l, _| *l > 2 * lam);
        let eta = if dropped.components.is_empty() {
            0.0
        } else {
            sup_norm_estimate(&dropped, 4096)
        };
        let bound = ((lam as f64 * eps).exp() - 1.0) * (f_op + eta) * phi_full.norm();
        rows.push(ConvergenceRow {
            lambda: lam,
            k: params.k,
            norm,
            bound,
            epsilon: eps,
            f_op_norm: f_op,
            eta,
        });
    }
    Ok(rows)
}

/// Classical coefficient against the raw moment-integral oracle:
/// N = <T_n, T_l T_m> / (Q_n V) at concrete index tuples where the
/// contraction V does not vanish. Returns (closed form, measured) pairs.
pub fn classical_n_vs_moment_oracle(
    dim: usize,
    l: usize,
    m: usize,
    n: usize,
) -> Result<Vec<(f64, f64)>> {
    let oracle = ProjectorOracle::new(dim, l.max(m).max(n));
    let closed = classical_n(dim, l, m, n)?;
    let qn = q_l(dim, n);
    let labels_l = sorted_multi_indices(dim, l);
    let labels_m = sorted_multi_indices(dim, m);
    let labels_n = sorted_multi_indices(dim, n);
    let mut found = Vec::new();
    'outer: for a in &labels_l {
        for b in &labels_m {
            let fa = oracle.projector_row(a)?;
            let gb = oracle.projector_row(b)?;
            let v = channel_map(&oracle, &fa, &gb, n)?;
            let scale = v.max_abs();
            if scale < 1e-8 {
                continue;
            }
            let prod = fa.to_poly().mul(&gb.to_poly());
            for g in &labels_n {
                let vg = v.get(g);
                if vg.norm() < 0.3 * scale {
                    continue;
                }
                let tn = oracle.projector_row(g)?.to_poly();
                let ip = crate::symtensor::sphere_inner_product(&tn, &prod);
                let measured = (ip / (vg * C64::new(qn, 0.0))).re;
                found.push((closed, measured));
                if found.len() >= 3 {
                    break 'outer;
                }
            }
        }
    }
    Ok(found)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fuzzy::KRule;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn classical_coefficients() {
        // top channel is 1
        for (dim, l, m) in [(3usize, 2usize, 2usize), (4, 3, 1), (2, 2, 1)] {
            assert!((classical_n(dim, l, m, l + m).unwrap() - 1.0).abs() < 1e-14);
        }
        // m=1, n=l-1 must match the lowering coefficient l/(D+2l-2)
        assert!((classical_n(3, 2, 1, 1).unwrap() - 2.0 / 5.0).abs() < 1e-14);
        // scalar channel of two vectors: 1/D
        assert!((classical_n(3, 1, 1, 0).unwrap() - 1.0 / 3.0).abs() < 1e-14);
        // invalid channel
        assert!(classical_n(3, 1, 1, 1).is_err());
    }

    #[test]
    fn classical_vs_moment_oracle() {
        for dim in 2..=4usize {
            for l in 0..=3usize {
                for m in 0..=l {
                    for n in allowed_channels(l, m) {
                        if l + m + n > 8 {
                            continue;
                        }
                        let pairs = classical_n_vs_moment_oracle(dim, l, m, n).unwrap();
                        for (closed, measured) in pairs {
                            assert!(
                                (closed - measured).abs() <= 1e-10 * closed.abs().max(1.0),
                                "dim={dim} ({l},{m})->{n}: closed {closed} vs {measured}"
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn product_reconstruction() {
        // channel expansion equals the plain polynomial product on the sphere
        let oracle = ProjectorOracle::new(3, 6);
        for (la, lb, ia, ib) in [(1usize, 1usize, 0usize, 0usize), (2, 1, 1, 2), (2, 2, 3, 1)] {
            let a = &sorted_multi_indices(3, la)[ia];
            let b = &sorted_multi_indices(3, lb)[ib];
            let fa = oracle.projector_row(a).unwrap();
            let gb = oracle.projector_row(b).unwrap();
            let channels = product_channels_classical(&oracle, &fa, &gb).unwrap();
            let mut sum = SphereFunction::zero(3);
            for (n, t) in channels {
                sum.add_component(n, t);
            }
            let direct =
                decompose_polynomial(&oracle, &fa.to_poly().mul(&gb.to_poly())).unwrap();
            let resid = sum.to_poly().sub(&direct.to_poly()).max_abs();
            assert!(resid < 1e-10, "({la},{lb}) labels ({ia},{ib}): {resid}");
        }
        // T1^1 T1^1 = T2^{11} + (1/3) T0 frozen check
        let a = MultiIndex(vec![1]);
        let fa = oracle.projector_row(&a).unwrap();
        let ch = product_channels_classical(&oracle, &fa, &fa).unwrap();
        assert!((ch[&0].get(&MultiIndex(vec![])) - c(1.0 / 3.0)).norm() < 1e-14);
        assert!((ch[&2].get(&MultiIndex(vec![1, 1])) - c(2.0 / 3.0)).norm() < 1e-14);
        // D=2: t1 t2 has only the top channel
        let oracle2 = ProjectorOracle::new(2, 3);
        let f1 = oracle2.projector_row(&MultiIndex(vec![1])).unwrap();
        let f2 = oracle2.projector_row(&MultiIndex(vec![2])).unwrap();
        let ch = product_channels_classical(&oracle2, &f1, &f2).unwrap();
        assert!(!ch.contains_key(&0));
        assert!((ch[&2].get(&MultiIndex(vec![1, 2])) - c(0.5)).norm() < 1e-14);
    }

    #[test]
    fn recursion_degenerates_to_classical() {
        for dim in 2..=4usize {
            for l in 0..=4usize {
                for m in 0..=4usize {
                    let table = fuzzy_n_with_c(dim, l, m, |_| 1.0);
                    for n in allowed_channels(l, m) {
                        let cls = classical_n(dim, l, m, n).unwrap();
                        let rec = table.get(&n).copied().unwrap_or(0.0);
                        assert!(
                            (cls - rec).abs() < 1e-12 * cls.max(1.0),
                            "dim={dim} ({l},{m})->{n}: {cls} vs {rec}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn fuzzy_first_step_and_bounds() {
        let params = ModelParams::new(3, 4, KRule::Default).unwrap();
        // one step: raising c_{m+1}, lowering c_m m/(D+2m-2)
        for m in 1..=3usize {
            let t = fuzzy_n(&params, 1, m);
            assert!((t[&(m + 1)] - coef_c(&params, m + 1)).abs() < 1e-14);
            let expect = coef_c(&params, m) * m as f64 / (3 + 2 * m - 2) as f64;
            assert!((t[&(m - 1)] - expect).abs() < 1e-14);
        }
        // sandwich bounds on unclipped channels (s = (l+m+n)/2 <= Lambda)
        let clam = coef_c(&params, 4);
        for l in 0..=4usize {
            for m in 0..=4usize {
                let table = fuzzy_n(&params, l, m);
                for n in allowed_channels(l, m) {
                    let s = (l + m + n) / 2;
                    let hat = table.get(&n).copied().unwrap_or(0.0);
                    let cls = classical_n(3, l, m, n).unwrap();
                    if s <= 4 {
                        assert!(
                            cls <= hat + 1e-12 && hat <= cls * clam.powi(l as i32) + 1e-12,
                            "({l},{m})->{n}: {cls} <= {hat} <= {}",
                            cls * clam.powi(l as i32)
                        );
                    } else {
                        // clipped channels only ever lose weight
                        assert!(hat <= cls * clam.powi(l as i32) + 1e-12);
                    }
                }
            }
        }
        // beyond-reach coefficients vanish: l - m > Lambda
        let t = fuzzy_n(&params, 6, 1);
        assert!(t.values().all(|v| *v == 0.0) || t.is_empty());
    }

    #[test]
    fn fuzzy_tends_to_classical_at_large_k() {
        for k in [1e3, 1e6] {
            let params = ModelParams::new(3, 3, KRule::Explicit(k)).unwrap();
            let mut worst = 0.0f64;
            for l in 0..=3usize {
                for m in 0..=3usize {
                    let table = fuzzy_n(&params, l, m);
                    for n in allowed_channels(l, m) {
                        if (l + m + n) / 2 > 3 {
                            continue;
                        }
                        let cls = classical_n(3, l, m, n).unwrap();
                        let hat = table.get(&n).copied().unwrap_or(0.0);
                        worst = worst.max((hat - cls).abs() / cls);
                    }
                }
            }
            // deviation scales like 1/k
            assert!(worst < 20.0 / k, "k={k}: worst {worst}");
        }
    }

    #[test]
    fn fuzzy_harmonic_matrices() {
        let params = ModelParams::new(3, 2, KRule::Default).unwrap();
        let alg = FuzzyAlgebra::build(params).unwrap();
        let lmax = 2 * alg.params.lambda + 1;
        let harmonics = build_fuzzy_harmonics(&alg, lmax).unwrap();
        // level 1 reproduces the coordinates
        for (i, fh) in harmonics[1].iter().enumerate() {
            let d = crate::linalg::inf_norm(&(&fh.matrix - &alg.x[i]));
            assert!(d < 1e-13);
        }
        // level 2, label (1,1): x1 x1 - (1/3) sum_j x^j x^j
        let mut expect = &alg.x[0] * &alg.x[0];
        for j in 0..3 {
            expect -= (&alg.x[j] * &alg.x[j]).map(|z| z / c(3.0));
        }
        let d = crate::linalg::inf_norm(&(&harmonics[2][0].matrix - expect));
        assert!(d < 1e-13);
        // level 2 Lambda + 1 annihilates the space
        for fh in harmonics.last().unwrap() {
            assert!(crate::linalg::inf_norm(&fh.matrix) < 1e-10);
        }
        // operator action equals the recursion prediction
        let worst = fuzzy_harmonics_vs_recursion(&alg, &harmonics[..=4]).unwrap();
        assert!(worst < 1e-9, "channel prediction residual {worst}");
    }

    #[test]
    fn convergence_trend() {
        // f = t1 t2, phi = t3, D = 3: strictly decreasing and under the bound
        let f = Poly::monomial(3, vec![1, 1, 0], c(1.0));
        let phi = Poly::var(3, 3);
        let rows = convergence_experiment(3, &f, &phi, &[2, 3, 4, 5], |_| KRule::Default)
            .unwrap();
        for w in rows.windows(2) {
            assert!(w[1].norm < w[0].norm, "not decreasing: {rows:?}");
        }
        for r in &rows {
            assert!(r.norm <= r.bound, "bound violated at {r:?}");
            assert!(r.eta == 0.0);
        }
        // constant f commutes with everything
        let rows = convergence_experiment(
            3,
            &Poly::constant(3, c(2.0)),
            &phi,
            &[2, 3],
            |_| KRule::Default,
        )
        .unwrap();
        for r in rows {
            assert!(r.norm < 1e-14);
        }
        // f = t1 on the ground state: |c_1 - 1| |T_1|
        let rows =
            convergence_experiment(3, &Poly::var(3, 1), &Poly::constant(3, c(1.0)), &[3], |_| {
                KRule::Default
            })
            .unwrap();
        let params = ModelParams::new(3, 3, KRule::Default).unwrap();
        let expect = (coef_c(&params, 1) - 1.0).abs() * q_l(3, 1).sqrt();
        assert!((rows[0].norm - expect).abs() < 1e-12);
    }

    #[test]
    fn fuzzy_product_converges() {
        // |(hat f hat g - (f g) .) phi| decreases along the cutoff sequence
        let dim = 3;
        let oracle = ProjectorOracle::new(dim, 8);
        let f = decompose_polynomial(&oracle, &Poly::var(dim, 1)).unwrap();
        let g = decompose_polynomial(&oracle, &Poly::var(dim, 2)).unwrap();
        let phi = decompose_polynomial(&oracle, &Poly::var(dim, 3)).unwrap();
        let fg = multiply_functions(&oracle, &f, &g).unwrap();
        let mut prev = f64::INFINITY;
        for lam in 2..=5usize {
            let params = ModelParams::new(dim, lam, KRule::Default).unwrap();
            let ghat_phi = apply_fuzzy_function(&params, &oracle, &g, &phi).unwrap();
            let fg_hat_phi = apply_fuzzy_function(&params, &oracle, &f, &ghat_phi).unwrap();
            let classical = multiply_functions(&oracle, &fg, &phi).unwrap();
            let mut diff = SphereFunction::zero(dim);
            for (l, t) in fg_hat_phi.components.iter() {
                diff.add_component(*l, t.clone());
            }
            for (l, t) in classical.components.iter() {
                diff.add_component(*l, t.scale(c(-1.0)));
            }
            let norm = diff.norm();
            assert!(norm < prev, "product convergence broken at Lambda={lam}");
            prev = norm;
        }
    }
}
