//! The confining-well model behind the cutoff construction.
//!
//! The radial problem -g'' + [b(l,D)/r^2 + V(r)] g = E g with a sharp well
//! at r = 1 is treated twice: through the harmonic-approximation closed
//! formulas (with V_0 fixed so the ground energy vanishes), and through an
//! independent second-order finite-difference eigensolver with grid-doubling
//! acceptance. The asymptotic radial overlaps evaluated here share their
//! closed form with the coordinate coefficients of [`crate::fuzzy`].

use crate::error::{Error, Result};
use crate::fuzzy::ModelParams;
use crate::gammafn::double_factorial;

/// Well parameters bound to one (D, Lambda, k) triple.
#[derive(Clone, Debug)]
pub struct ConfinementModel {
    pub dim: usize,
    pub lambda: usize,
    pub k: f64,
}

impl ConfinementModel {
    pub fn new(params: &ModelParams) -> Self {
        ConfinementModel {
            dim: params.dim,
            lambda: params.lambda,
            k: params.k,
        }
    }

    /// Centrifugal strength b(l, D) = [D^2 - 4D + 3 + 4 l (l + D - 2)] / 4.
    pub fn b(&self, l: usize) -> f64 {
        let d = self.dim as f64;
        let lf = l as f64;
        (d * d - 4.0 * d + 3.0 + 4.0 * lf * (lf + d - 2.0)) / 4.0
    }

    /// Effective curvature k_l = 2k + 3 b(l, D).
    pub fn k_l(&self, l: usize) -> f64 {
        2.0 * self.k + 3.0 * self.b(l)
    }

    /// Well minimum r~_l = 1 + b / (3b + 2k).
    pub fn r_tilde(&self, l: usize) -> f64 {
        let b = self.b(l);
        1.0 + b / (3.0 * b + 2.0 * self.k)
    }

    /// V_0 fixed by a vanishing ground energy.
    pub fn v0(&self) -> f64 {
        let b0 = self.b(0);
        -self.k_l(0).sqrt() - 2.0 * b0 * (self.k + b0) / (3.0 * b0 + 2.0 * self.k)
    }

    /// Exact harmonic-approximation energy
    /// E_{n,l} = (2n+1) sqrt(k_l) + V_0 + 2 b (k + b) / (3b + 2k).
    pub fn energy(&self, n: usize, l: usize) -> f64 {
        let b = self.b(l);
        (2.0 * n as f64 + 1.0) * self.k_l(l).sqrt()
            + self.v0()
            + 2.0 * b * (self.k + b) / (3.0 * b + 2.0 * self.k)
    }

    /// Leading-order energy E_{n,l} = l (l + D - 2) + 2 n sqrt(2k); the
    /// cutoff comparison below is made at this order, where the selection
    /// {E <= cutoff} = {n = 0, l <= Lambda} is sharp.
    pub fn energy_leading(&self, n: usize, l: usize) -> f64 {
        (l * (l + self.dim - 2)) as f64 + 2.0 * n as f64 * (2.0 * self.k).sqrt()
    }

    pub fn energy_cutoff(&self) -> f64 {
        (self.lambda * (self.lambda + self.dim - 2)) as f64
    }

    /// The default validation potential: the quadratic well plus a smoothly
    /// joined repulsive core with r^2 V -> 1 as r -> 0.
    pub fn default_potential(&self) -> impl Fn(f64) -> f64 {
        let v0 = self.v0();
        let k = self.k;
        move |r: f64| v0 + 2.0 * k * (r - 1.0) * (r - 1.0) + (-20.0 * r).exp() / (r * r)
    }
}

/// One row of the harmonic spectrum table.
#[derive(Clone, Debug, serde::Serialize)]
pub struct SpectrumEntry {
    pub n: usize,
    pub l: usize,
    pub exact: f64,
    pub leading: f64,
    pub survives: bool,
}

/// Harmonic energies for n <= 2, l <= Lambda + 2, with the cutoff flags.
pub fn spectrum_harmonic(model: &ConfinementModel) -> Vec<SpectrumEntry> {
    let cutoff = model.energy_cutoff();
    let mut out = Vec::new();
    for n in 0..=2usize {
        for l in 0..=model.lambda + 2 {
            let leading = model.energy_leading(n, l);
            out.push(SpectrumEntry {
                n,
                l,
                exact: model.energy(n, l),
                leading,
                survives: leading <= cutoff + 1e-9,
            });
        }
    }
    out
}

/// True when the survivor set is exactly {(0, l) : l <= Lambda}.
pub fn cutoff_selection_is_sharp(model: &ConfinementModel) -> bool {
    spectrum_harmonic(model)
        .iter()
        .all(|e| e.survives == (e.n == 0 && e.l <= model.lambda))
}

/// Polynomial in r with ascending coefficients; the shape `h` of the radial
/// integrands.
#[derive(Clone, Debug)]
pub struct RadialShape(pub Vec<f64>);

impl RadialShape {
    pub fn eval(&self, r: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * r + c)
    }

    pub fn derivative(&self) -> RadialShape {
        RadialShape(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| i as f64 * c)
                .collect(),
        )
    }
}

/// Asymptotic radial overlap integral of g_l g_L h(r): the Gaussian-center
/// series truncated at its second even derivative, with the exponential
/// center-mismatch prefactor retained. The truncation error budget is
/// O(k^{-3/2}).
pub fn radial_integral_asymptotic(
    model: &ConfinementModel,
    l: usize,
    big_l: usize,
    h: &RadialShape,
) -> f64 {
    let (kl, kll) = (model.k_l(l), model.k_l(big_l));
    let (sl, sll) = (kl.sqrt(), kll.sqrt());
    let (rl, rll) = (model.r_tilde(l), model.r_tilde(big_l));
    let r_hat = (sl * rl + sll * rll) / (sl + sll);
    let prefactor = (-(sl * sll).sqrt() * (rl - rll) * (rl - rll) / (2.0 * (sl + sll))).exp();
    let mut acc = 0.0;
    let mut shape = h.clone();
    for n in 0..=2usize {
        acc += shape.eval(r_hat) / (double_factorial(2 * n as i64) * (sl + sll).powi(n as i32));
        shape = shape.derivative().derivative();
        if shape.0.is_empty() {
            break;
        }
    }
    prefactor * acc
}

/// Center of the two-level Gaussian product, 1 + [b(l)+b(L)]/4k + O(k^-2).
pub fn r_hat(model: &ConfinementModel, l: usize, big_l: usize) -> f64 {
    let (sl, sll) = (model.k_l(l).sqrt(), model.k_l(big_l).sqrt());
    (sl * model.r_tilde(l) + sll * model.r_tilde(big_l)) / (sl + sll)
}

/// Result of one finite-difference eigensolve.
pub struct OdeSolution {
    /// Richardson-extrapolated eigenvalue.
    pub energy: f64,
    pub grid_points: usize,
    /// Change of the extrapolated eigenvalue at acceptance.
    pub richardson_change: f64,
    /// Probability mass outside |r - 1| <= 3 k^{-1/4}.
    pub tail_mass: f64,
    /// Uniform grid and normalized wavefunction samples.
    pub grid: Vec<f64>,
    pub wavefunction: Vec<f64>,
}

const R_MIN: f64 = 1e-4;
const R_MAX: f64 = 3.0;

/// Counts eigenvalues of the tridiagonal (diag, off) below x via the Sturm
/// sequence of the shifted LDL^T factorization.
fn sturm_count(diag: &[f64], off: f64, x: f64) -> usize {
    let mut count = 0usize;
    let mut q = diag[0] - x;
    if q < 0.0 {
        count += 1;
    }
    for d in diag.iter().skip(1) {
        if q.abs() < 1e-300 {
            q = 1e-300;
        }
        q = (d - x) - off * off / q;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// The m-th smallest eigenvalue (0-based) by bisection.
fn tridiag_eigenvalue(diag: &[f64], off: f64, m: usize) -> f64 {
    // Gershgorin bounds
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for d in diag {
        lo = lo.min(d - 2.0 * off.abs());
        hi = hi.max(d + 2.0 * off.abs());
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if sturm_count(diag, off, mid) > m {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-12 * hi.abs().max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Inverse iteration on the shifted tridiagonal system with partial
/// pivoting.
fn tridiag_eigenvector(diag: &[f64], off: f64, sigma: f64) -> Vec<f64> {
    let n = diag.len();
    let mut v = vec![1.0f64; n];
    for _ in 0..3 {
        // LU with partial pivoting for [off, diag - sigma, off]
        let mut a: Vec<f64> = diag.iter().map(|d| d - sigma).collect();
        let mut b = vec![off; n - 1];
        let mut c = vec![0.0f64; n.saturating_sub(2)];
        let mut low = vec![0.0f64; n - 1];
        let mut swapped = vec![false; n - 1];
        let mut rhs = v.clone();
        for i in 0..n - 1 {
            let mut sub = off;
            if sub.abs() > a[i].abs() {
                // swap rows i and i+1
                std::mem::swap(&mut a[i], &mut sub);
                let tmp = a[i + 1];
                a[i + 1] = b[i];
                b[i] = tmp;
                if i + 2 < n {
                    c[i] = b[i + 1];
                    b[i + 1] = 0.0;
                }
                rhs.swap(i, i + 1);
                swapped[i] = true;
            }
            let factor = sub / a[i];
            low[i] = factor;
            a[i + 1] -= factor * b[i];
            if i + 2 < n && swapped[i] {
                b[i + 1] -= factor * c[i];
            }
            rhs[i + 1] -= factor * rhs[i];
        }
        // back substitution
        let mut x = vec![0.0f64; n];
        x[n - 1] = rhs[n - 1] / a[n - 1];
        if n >= 2 {
            x[n - 2] = (rhs[n - 2] - b[n - 2] * x[n - 1]) / a[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            let mut val = rhs[i] - b[i] * x[i + 1];
            if swapped[i] {
                val -= c[i] * x[i + 2];
            }
            x[i] = val / a[i];
        }
        let norm = x.iter().map(|t| t * t).sum::<f64>().sqrt();
        for (vi, xi) in v.iter_mut().zip(x.iter()) {
            *vi = xi / norm;
        }
    }
    v
}

/// Finite-difference eigensolve of the radial problem in the l-sector for
/// the `n_state`-th level, with Dirichlet walls at both ends.
///
/// The second-order eigenvalues E(h), E(h/2) at successive grid doublings
/// are Richardson-combined to (4 E(h/2) - E(h))/3; the run is accepted once
/// the extrapolated value changes by at most 1e-6 (relative), which keeps
/// the acceptance above the f64 pivot-cancellation floor of the stiff
/// 2/h^2 diagonal.
pub fn ode_validate(
    model: &ConfinementModel,
    potential: impl Fn(f64) -> f64,
    l: usize,
    n_state: usize,
) -> Result<OdeSolution> {
    let b = model.b(l);
    let solve = |points: usize| -> (f64, Vec<f64>, Vec<f64>) {
        let h = (R_MAX - R_MIN) / (points as f64 + 1.0);
        let grid: Vec<f64> = (1..=points).map(|i| R_MIN + i as f64 * h).collect();
        let diag: Vec<f64> = grid
            .iter()
            .map(|&r| 2.0 / (h * h) + b / (r * r) + potential(r))
            .collect();
        let off = -1.0 / (h * h);
        let e = tridiag_eigenvalue(&diag, off, n_state);
        let sigma = e - 1e-6 * e.abs().max(1.0);
        let mut g = tridiag_eigenvector(&diag, off, sigma);
        // normalize as a continuum density
        let mass: f64 = g.iter().map(|t| t * t).sum::<f64>() * h;
        let scale = mass.sqrt();
        for gi in g.iter_mut() {
            *gi /= scale;
        }
        (e, grid, g)
    };
    let mut points = 20_000usize;
    let (mut e_coarse, _, _) = solve(points);
    let (mut e_fine, mut grid, mut g) = solve(points * 2);
    let mut extrap_prev = (4.0 * e_fine - e_coarse) / 3.0;
    loop {
        points *= 2;
        if points > 400_000 {
            return Err(Error::Numerical(format!(
                "grid-doubling did not converge for l = {l}, state {n_state}"
            )));
        }
        e_coarse = e_fine;
        let (e2, grid2, g2) = solve(points * 2);
        e_fine = e2;
        grid = grid2;
        g = g2;
        let extrap = (4.0 * e_fine - e_coarse) / 3.0;
        let change = (extrap - extrap_prev).abs();
        if change <= 1e-6 * extrap.abs().max(1.0) {
            let h = (R_MAX - R_MIN) / (2.0 * points as f64 + 1.0);
            let window = 3.0 * model.k.powf(-0.25);
            let tail: f64 = grid
                .iter()
                .zip(g.iter())
                .filter(|(r, _)| (**r - 1.0).abs() > window)
                .map(|(_, t)| t * t)
                .sum::<f64>()
                * h;
            // subsample the wavefunction for export
            let stride = (grid.len() / 2000).max(1);
            let grid_out: Vec<f64> = grid.iter().step_by(stride).copied().collect();
            let wf_out: Vec<f64> = g.iter().step_by(stride).copied().collect();
            return Ok(OdeSolution {
                energy: extrap,
                grid_points: 2 * points,
                richardson_change: change,
                tail_mass: tail,
                grid: grid_out,
                wavefunction: wf_out,
            });
        }
        extrap_prev = extrap;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fuzzy::{coef_c, KRule};

    fn model(dim: usize, lambda: usize, k: f64) -> ConfinementModel {
        ConfinementModel::new(&ModelParams::new(dim, lambda, KRule::Explicit(k)).unwrap())
    }

    #[test]
    fn ground_energy_vanishes() {
        for dim in 2..=5usize {
            let m = model(dim, 2, 1e4);
            assert!(m.energy(0, 0).abs() < 1e-9);
        }
    }

    #[test]
    fn first_level_energy() {
        let m = model(3, 2, 1e4);
        assert!((m.energy(0, 1) - 2.0).abs() <= 5.0 / 1e4f64.sqrt());
        // radially excited levels sit far above the cutoff
        let margin = m.energy(1, 0) - m.energy_cutoff();
        assert!(margin > 0.0);
    }

    #[test]
    fn cutoff_selection() {
        for dim in 2..=5usize {
            for lambda in 1..=8usize {
                let params = ModelParams::new(dim, lambda, KRule::Default).unwrap();
                let m = ConfinementModel::new(&params);
                assert!(
                    cutoff_selection_is_sharp(&m),
                    "selection not sharp at D={dim}, Lambda={lambda}"
                );
            }
        }
    }

    #[test]
    fn well_center_expansion() {
        // r~_l - 1 = b/2k + O(k^-2)
        for dim in 2..=4usize {
            for l in 0..=3usize {
                for k in [1e3, 1e6] {
                    let m = model(dim, 3, k);
                    let lhs = m.r_tilde(l) - 1.0;
                    let lead = m.b(l) / (2.0 * k);
                    assert!((lhs - lead).abs() < 10.0 * m.b(l).abs().powi(2) / (k * k) + 1e-18);
                }
            }
        }
    }

    #[test]
    fn asymptotic_overlaps() {
        let m = model(3, 3, 1e4);
        // normalization: h = 1, same level
        let one = radial_integral_asymptotic(&m, 2, 2, &RadialShape(vec![1.0]));
        assert!((one - 1.0).abs() < 1e-12);
        // center expansion r_hat = 1 + (b_l + b_L)/4k + O(k^-2)
        for (l, ll) in [(0usize, 1usize), (1, 2), (2, 3)] {
            let got = r_hat(&m, l, ll);
            let lead = 1.0 + (m.b(l) + m.b(ll)) / (4.0 * m.k);
            let scale = (1.0 + m.b(l).abs() + m.b(ll).abs()).powi(2);
            assert!((got - lead).abs() < 10.0 * scale / (m.k * m.k));
        }
        // the overlap with h = r reproduces the coordinate coefficient at D=3
        let params = ModelParams::new(3, 3, KRule::Explicit(1e4)).unwrap();
        for l in 1..=3usize {
            let rho = radial_integral_asymptotic(&m, l - 1, l, &RadialShape(vec![0.0, 1.0]));
            let c = coef_c(&params, l);
            assert!(
                (rho - c).abs() < 5.0 * m.k.powf(-1.5),
                "l={l}: rho {rho} vs c {c}"
            );
        }
    }

    #[test]
    fn ode_matches_harmonic_formula() {
        let m = model(3, 2, 1e4);
        let pot = m.default_potential();
        for l in 0..=2usize {
            let sol = ode_validate(&m, &pot, l, 0).unwrap();
            let target = m.energy(0, l);
            let dev = (sol.energy - target).abs();
            assert!(
                dev <= 10.0 * m.k.powf(-0.5),
                "l={l}: FD {} vs formula {target} (dev {dev})",
                sol.energy
            );
            assert!(sol.tail_mass <= 1e-3, "l={l}: tail {}", sol.tail_mass);
        }
    }
}
