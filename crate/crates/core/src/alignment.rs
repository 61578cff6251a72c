//! Diagnostics of vorticity-direction alignment.
//!
//! The vorticity is split smoothly at magnitude `Λ` into a bounded part and a
//! large part, `ω = ω^(<) + ω^(>)` with `ω^(<) = χ(|ω|/Λ) ω`. The stretching
//! integrand `K = |ω|^{q-2} S:(ω⊗ω)` then splits as `X + Y + Z`:
//!
//! * `X` collects every term with at least one `ω^(<)` factor,
//! * `Y = |ω|^{q-2} S^(<):(ω^(>)⊗ω^(>))`,
//! * `Z = |ω|^{q-2} S^(>):(ω^(>)⊗ω^(>))`,
//!
//! where `S^(i)` is the strain induced by `ω^(i)` alone. `Z` is controlled by
//! the angle between vorticity directions at nearby intense points, measured
//! here by Monte Carlo pair sampling and a Hölder fit, and by the Riesz
//! potential `I(x) = ∫ |ω(y)| / |x−y|^λ dy`.

use std::f64::consts::PI;
use std::sync::Arc;

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::field::{norm3, PhysicalVector, VectorField};
use crate::grid::{min_image_steps, Grid};
use crate::strain::{operator_norm, strain_of_vorticity, strain_spectral, frobenius};

#[inline]
fn bump(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

/// Smooth cutoff: 1 on `[0, 1]`, 0 on `[2, ∞)`, monotone in between.
pub fn chi(s: f64) -> f64 {
    if s <= 1.0 {
        1.0
    } else if s >= 2.0 {
        0.0
    } else {
        let a = bump(2.0 - s);
        a / (a + bump(s - 1.0))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CutoffParams {
    lambda_threshold: f64,
}

impl CutoffParams {
    pub fn new(lambda_threshold: f64) -> Result<Self> {
        if !(lambda_threshold > 0.0) || !lambda_threshold.is_finite() {
            return Err(invalid(
                "lambda_threshold",
                format!("must be positive and finite, got {lambda_threshold}"),
            ));
        }
        Ok(CutoffParams { lambda_threshold })
    }

    pub fn lambda_threshold(&self) -> f64 {
        self.lambda_threshold
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HolderParams {
    pub rho: f64,
    pub beta: f64,
}

impl HolderParams {
    pub fn new(rho: f64, beta: f64) -> Result<Self> {
        if !(rho > 0.0) {
            return Err(invalid("rho", format!("must be positive, got {rho}")));
        }
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(invalid("beta", format!("must lie in (0, 1], got {beta}")));
        }
        Ok(HolderParams { rho, beta })
    }
}

/// Splits `ω` into `(ω^(<), ω^(>))`; the parts add up to `ω` exactly in
/// floating point.
pub fn decompose(omega: &PhysicalVector, params: &CutoffParams) -> (PhysicalVector, PhysicalVector) {
    let grid = omega.grid();
    let mut small = PhysicalVector::zeros(grid);
    let mut big = PhysicalVector::zeros(grid);
    let lam = params.lambda_threshold;
    for idx in 0..grid.len() {
        let w = omega.at(idx);
        let c = chi(norm3(w) / lam);
        // b = fl(ω − cω) lies within a factor two of ω whenever c < 1/2, so
        // ω − b is exact and the two parts sum back to ω without rounding
        let b: [f64; 3] = std::array::from_fn(|a| w[a] - c * w[a]);
        small.set(idx, std::array::from_fn(|a| w[a] - b[a]));
        big.set(idx, b);
    }
    (small, big)
}

/// One sampled pair of super-threshold grid points.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnglePairSample {
    pub x: [usize; 3],
    pub y: [usize; 3],
    /// Minimum-image distance.
    pub distance: f64,
    pub sin_phi: f64,
    pub mag_x: f64,
    pub mag_y: f64,
}

fn pair_sample(omega: &PhysicalVector, a: usize, b: usize) -> AnglePairSample {
    let grid = omega.grid();
    let (wa, wb) = (omega.at(a), omega.at(b));
    let (ma, mb) = (norm3(wa), norm3(wb));
    let (pa, pb) = (grid.unravel(a), grid.unravel(b));
    let h = grid.spacing();
    let d: [f64; 3] = std::array::from_fn(|k| min_image_steps(pa[k], pb[k], grid.n()) as f64 * h);
    let ea = wa.map(|v| v / ma);
    let eb = wb.map(|v| v / mb);
    let sin_phi = norm3(crate::field::cross3(ea, eb)).min(1.0);
    AnglePairSample {
        x: pa,
        y: pb,
        distance: norm3(d),
        sin_phi,
        mag_x: ma,
        mag_y: mb,
    }
}

fn super_threshold_points(omega: &PhysicalVector, lambda: f64) -> Result<Vec<usize>> {
    if !(lambda > 0.0) {
        return Err(invalid("lambda_threshold", format!("must be positive, got {lambda}")));
    }
    Ok((0..omega.grid().len())
        .filter(|&i| norm3(omega.at(i)) >= lambda)
        .collect())
}

/// `n_pairs` uniformly drawn pairs of distinct grid points with `|ω| ≥ Λ`.
///
/// Pairs come from a ChaCha8 stream seeded with `seed`. Fewer than two
/// eligible points give an empty list and a logged warning.
pub fn sample_angles(omega: &PhysicalVector, n_pairs: usize, lambda: f64, seed: u64) -> Result<Vec<AnglePairSample>> {
    let pts = super_threshold_points(omega, lambda)?;
    if pts.len() < 2 {
        warn!("only {} points reach |ω| >= {lambda}; no angle pairs sampled", pts.len());
        return Ok(Vec::new());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n_pairs);
    while out.len() < n_pairs {
        let a = rng.random_range(0..pts.len());
        let b = rng.random_range(0..pts.len());
        if a != b {
            out.push(pair_sample(omega, pts[a], pts[b]));
        }
    }
    Ok(out)
}

/// Every unordered pair of super-threshold points; quadratic, meant for
/// small grids.
pub fn all_angle_pairs(omega: &PhysicalVector, lambda: f64) -> Result<Vec<AnglePairSample>> {
    let pts = super_threshold_points(omega, lambda)?;
    let mut out = Vec::new();
    for (i, &a) in pts.iter().enumerate() {
        for &b in &pts[i + 1..] {
            out.push(pair_sample(omega, a, b));
        }
    }
    Ok(out)
}

/// Largest `ρ` with `sin φ ≤ d^β / ρ` on every sampled pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HolderFit {
    pub beta: f64,
    /// `+∞` when no pair has a measurable angle.
    pub rho_hat: f64,
    pub used: usize,
    pub skipped: usize,
}

pub fn holder_fit(samples: &[AnglePairSample], beta: f64) -> HolderFit {
    let mut rho: f64 = f64::INFINITY;
    let mut used = 0;
    for s in samples {
        if s.sin_phi <= 1e-14 {
            continue;
        }
        used += 1;
        rho = rho.min(s.distance.powf(beta) / s.sin_phi);
    }
    if used == 0 {
        warn!("no sampled pair has sin φ > 1e-14; reporting ρ̂ = +∞");
    }
    HolderFit {
        beta,
        rho_hat: rho,
        used,
        skipped: samples.len() - used,
    }
}

/// Pointwise `K`, `X`, `Y`, `Z` and their integrals.
#[derive(Clone, Debug)]
pub struct XyzBudget {
    pub q: f64,
    pub lambda_threshold: f64,
    pub k: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub k_int: f64,
    pub x_int: f64,
    pub y_int: f64,
    pub z_int: f64,
    pub abs_x_int: f64,
    pub abs_y_int: f64,
    pub abs_z_int: f64,
    /// `max |K − X − Y − Z| / max |K|`.
    pub identity_residual: f64,
    /// `2Λ ∫ |ω|^{q-1} |S|_op`, a pointwise majorant of `∫|X|`.
    pub x_bound_op: f64,
    /// `Λ ∫ |ω|^{q-1} |S|_F`.
    pub x_bound_frobenius: f64,
    pub super_threshold_points: usize,
}

/// Builds the `X + Y + Z` splitting of `K` for `q > 1`.
///
/// `K` uses the strain of the full velocity; `X, Y, Z` use the strains of
/// `ω^(<)` and `ω^(>)` computed separately, so the identity `K = X + Y + Z`
/// is a genuine cross-check.
pub fn xyz_budget(u_hat: &VectorField, params: &CutoffParams, q: f64) -> Result<XyzBudget> {
    if !(q > 1.0) {
        return Err(invalid("q", format!("must exceed 1, got {q}")));
    }
    let grid = u_hat.grid().clone();
    let omega = u_hat.curl().to_physical();
    let s_full = strain_spectral(u_hat).to_physical();
    let (small, big) = decompose(&omega, params);
    let s_small = strain_of_vorticity(&VectorField::from_physical(&small)).to_physical();
    let s_big = strain_of_vorticity(&VectorField::from_physical(&big)).to_physical();
    let lam = params.lambda_threshold;
    let h3 = grid.cell_volume();

    let len = grid.len();
    let (mut k, mut x, mut y, mut z) = (vec![0.0; len], vec![0.0; len], vec![0.0; len], vec![0.0; len]);
    let (mut xb_op, mut xb_f) = (0.0, 0.0);
    let mut count = 0;
    for idx in 0..len {
        let w = omega.at(idx);
        let m = norm3(w);
        if m >= lam {
            count += 1;
        }
        if m == 0.0 {
            continue;
        }
        let weight = m.powf(q - 2.0);
        let (ws, wb) = (small.at(idx), big.at(idx));
        let sf = s_full.at(idx);
        k[idx] = weight * crate::strain::bilinear(&sf, w, w);
        let ss = s_small.at(idx);
        let sb = s_big.at(idx);
        let small_terms = crate::strain::bilinear(&ss, ws, ws)
            + 2.0 * crate::strain::bilinear(&ss, ws, wb)
            + crate::strain::bilinear(&sb, ws, ws)
            + 2.0 * crate::strain::bilinear(&sb, ws, wb);
        x[idx] = weight * small_terms;
        y[idx] = weight * crate::strain::bilinear(&ss, wb, wb);
        z[idx] = weight * crate::strain::bilinear(&sb, wb, wb);
        let wq1 = m.powf(q - 1.0);
        xb_op += 2.0 * lam * wq1 * operator_norm(&sf);
        xb_f += lam * wq1 * frobenius(&sf);
    }
    let sum = |v: &[f64]| v.iter().sum::<f64>() * h3;
    let abs_sum = |v: &[f64]| v.iter().map(|a| a.abs()).sum::<f64>() * h3;
    let kmax = k.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let resid = (0..len)
        .map(|i| (k[i] - x[i] - y[i] - z[i]).abs())
        .fold(0.0, f64::max);
    Ok(XyzBudget {
        q,
        lambda_threshold: lam,
        k_int: sum(&k),
        x_int: sum(&x),
        y_int: sum(&y),
        z_int: sum(&z),
        abs_x_int: abs_sum(&x),
        abs_y_int: abs_sum(&y),
        abs_z_int: abs_sum(&z),
        identity_residual: if kmax > 0.0 { resid / kmax } else { resid },
        x_bound_op: xb_op * h3,
        x_bound_frobenius: xb_f * h3,
        super_threshold_points: count,
        k,
        x,
        y,
        z,
    })
}

fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    // Newton iteration on P_m from Chebyshev initial guesses
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=m {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (mut p0, mut p1) = (1.0, x);
        for k in 2..=m {
            let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
            p0 = p1;
            p1 = p2;
        }
        let dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// `∫∫_{[-1,1]^2} (a² + b² + 1)^{-μ/2} da db` (smooth integrand).
fn face_integral(mu: f64) -> f64 {
    let (x, w) = gauss_legendre(48);
    // split each axis at 0 to keep the peak at a node boundary
    let mut acc = 0.0;
    for (xa, wa) in x.iter().zip(&w) {
        let a = 0.5 * (xa + 1.0);
        for (xb, wb) in x.iter().zip(&w) {
            let b = 0.5 * (xb + 1.0);
            acc += wa * wb * 0.25 * (a * a + b * b + 1.0).powf(-0.5 * mu);
        }
    }
    4.0 * acc
}

/// `∫_{[-L,L]^3} |z|^{-λ} dz` for `λ < 3`, via the scaling identity
/// `F(L) = L F'(L) / (3 − λ)`.
fn cube_integral(lambda: f64, half_side: f64) -> f64 {
    let l = half_side;
    // surface integral over the six faces, each scaled to [-1,1]^2
    let surface = 6.0 * l.powf(2.0 - lambda) * face_integral(lambda);
    l * surface / (3.0 - lambda)
}

/// Lattice-corrected weight of the singular cell for the kernel `|z|^{-λ}` on
/// the unit lattice:
///
/// ```text
/// c*(λ) = ∫_{cell 0} |z|^{-λ} + Σ_{m ≠ 0} ( ∫_{cell m} |z|^{-λ} − |m|^{-λ} ).
/// ```
///
/// With centre weight `h^{3-λ} c*(λ)` the lattice sum of the kernel reproduces
/// its integral, so the midpoint-rule error of the near cells is absorbed
/// along with the singular cell itself.
pub fn lattice_center_weight(lambda: f64) -> f64 {
    const M: i64 = 20;
    const INNER: i64 = 4;
    let (x8, w8) = gauss_legendre(8);
    let (x4, w4) = gauss_legendre(4);
    let mut total = cube_integral(lambda, 0.5);
    for a in -M..=M {
        for b in -M..=M {
            for c in -M..=M {
                if a == 0 && b == 0 && c == 0 {
                    continue;
                }
                let inf = a.abs().max(b.abs()).max(c.abs());
                let (x, w) = if inf <= INNER { (&x8, &w8) } else { (&x4, &w4) };
                let (fa, fb, fc) = (a as f64, b as f64, c as f64);
                let mut cell = 0.0;
                for (xi, wi) in x.iter().zip(w) {
                    let p = fa + 0.5 * xi;
                    for (xj, wj) in x.iter().zip(w) {
                        let q = fb + 0.5 * xj;
                        let pq = p * p + q * q;
                        for (xk, wk) in x.iter().zip(w) {
                            let r = fc + 0.5 * xk;
                            cell += wi * wj * wk * (pq + r * r).powf(-0.5 * lambda);
                        }
                    }
                }
                cell *= 0.125;
                total += cell - (fa * fa + fb * fb + fc * fc).powf(-0.5 * lambda);
            }
        }
    }
    // midpoint-rule error of the cells beyond the cube, to leading order
    let mu = lambda + 2.0;
    let l = M as f64 + 0.5;
    let tail = lambda * (lambda - 1.0) / 24.0 * 6.0 * face_integral(mu) * l.powf(3.0 - mu) / (mu - 3.0);
    total + tail
}

/// Periodic Riesz potential `I = |ω| ∗ |·|^{-λ}` evaluated by FFT convolution
/// with the minimum-image kernel, for `λ ∈ [2, 3)`.
pub struct RieszKernel {
    grid: Arc<Grid>,
    lambda: f64,
    kernel_hat: Vec<Complex64>,
}

impl RieszKernel {
    pub fn new(grid: &Arc<Grid>, lambda: f64) -> Result<Self> {
        if !(2.0..3.0).contains(&lambda) {
            return Err(invalid("lambda_exp", format!("must lie in [2, 3), got {lambda}")));
        }
        let n = grid.n();
        let h = grid.spacing();
        let mut k: Vec<Complex64> = (0..grid.len())
            .map(|idx| {
                let d = grid.unravel(idx).map(|i| min_image_steps(0, i, n) as f64 * h);
                let r = norm3(d);
                if r == 0.0 {
                    Complex64::new(h.powf(-lambda) * lattice_center_weight(lambda), 0.0)
                } else {
                    Complex64::new(r.powf(-lambda), 0.0)
                }
            })
            .collect();
        grid.forward(&mut k);
        Ok(RieszKernel {
            grid: grid.clone(),
            lambda,
            kernel_hat: k,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn apply(&self, values: &[f64]) -> Result<Vec<f64>> {
        let grid = &self.grid;
        if values.len() != grid.len() {
            return Err(crate::error::Error::DimensionMismatch {
                expected: grid.len(),
                actual: values.len(),
            });
        }
        let mut f: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        grid.forward(&mut f);
        let scale = grid.len() as f64 * grid.cell_volume();
        for (a, b) in f.iter_mut().zip(&self.kernel_hat) {
            *a *= b * scale;
        }
        grid.inverse(&mut f);
        Ok(f.into_iter().map(|c| c.re).collect())
    }
}

/// `I(x) = ∫ f(y) |x − y|^{-λ} dy` on the grid.
pub fn riesz_potential(grid: &Arc<Grid>, values: &[f64], lambda: f64) -> Result<Vec<f64>> {
    RieszKernel::new(grid, lambda)?.apply(values)
}

/// `J = ρ^{-1} ∫ |ω|^q I dx` with `I` the Riesz potential of `|ω|`.
pub fn j_quantity(omega: &PhysicalVector, q: f64, rho: f64, lambda: f64) -> Result<f64> {
    let kernel = RieszKernel::new(omega.grid(), lambda)?;
    j_quantity_with(&kernel, omega, q, rho)
}

pub fn j_quantity_with(kernel: &RieszKernel, omega: &PhysicalVector, q: f64, rho: f64) -> Result<f64> {
    if !(rho > 0.0) {
        return Err(invalid("rho", format!("must be positive, got {rho}")));
    }
    let mags = omega.magnitude();
    let pot = kernel.apply(&mags)?;
    let h3 = omega.grid().cell_volume();
    let s: f64 = mags.iter().zip(&pot).map(|(m, i)| m.powf(q) * i).sum();
    Ok(s * h3 / rho)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chi_plateaus_and_monotonicity() {
        assert_eq!(chi(0.0), 1.0);
        assert_eq!(chi(1.0), 1.0);
        assert_eq!(chi(2.0), 0.0);
        assert_eq!(chi(7.0), 0.0);
        assert!((chi(1.5) - 0.5).abs() < 1e-15);
        let mut prev = 1.0;
        for i in 0..=1000 {
            let v = chi(1.0 + i as f64 / 1000.0);
            assert!(v <= prev && (0.0..=1.0).contains(&v));
            prev = v;
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(8);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert!((s - 2.0 / 15.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn cube_integral_of_constant_kernel() {
        // λ = 0 gives the cube volume
        assert!((cube_integral(0.0, 0.5) - 1.0).abs() < 1e-12);
        assert!((cube_integral(0.0, 2.0) - 64.0).abs() < 1e-10);
    }

    #[test]
    fn lattice_weight_regression() {
        // direct cell sums out to |m| = 30 plus the asymptotic tail
        assert!((lattice_center_weight(2.0) - 8.9136).abs() < 2e-3);
        assert!((lattice_center_weight(2.5) - 21.3915).abs() < 5e-3);
    }

    #[test]
    fn holder_fit_arithmetic() {
        let s = AnglePairSample {
            x: [0; 3],
            y: [1, 0, 0],
            distance: 1.0,
            sin_phi: 0.5,
            mag_x: 1.0,
            mag_y: 1.0,
        };
        let fit = holder_fit(&[s], 1.0);
        assert_eq!(fit.rho_hat, 2.0);
        let aligned = AnglePairSample { sin_phi: 0.0, ..s };
        let fit = holder_fit(&[aligned], 1.0);
        assert!(fit.rho_hat.is_infinite());
        assert_eq!(fit.skipped, 1);
    }

    #[test]
    fn riesz_rejects_bad_exponent() {
        let g = Grid::new(8).unwrap();
        assert!(RieszKernel::new(&g, 3.0).is_err());
        assert!(RieszKernel::new(&g, 1.9).is_err());
    }

    #[test]
    fn cutoff_params_validate() {
        assert!(CutoffParams::new(0.0).is_err());
        assert!(CutoffParams::new(-1.0).is_err());
        assert!(HolderParams::new(1.0, 1.5).is_err());
        assert!(HolderParams::new(1.0, 0.5).is_ok());
    }
}
