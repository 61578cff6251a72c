//! Rate-of-strain tensor and the geometry of vortex stretching.
//!
//! The strain `S = (∇u + ∇uᵀ)/2` is available by two independent routes:
//! spectral differentiation of the velocity, and direct quadrature of the
//! singular integral
//!
//! ```text
//! S(x) = (3/8π) p.v.∫ [ r̂ ⊗ (r̂ × ω(y)) + (r̂ × ω(y)) ⊗ r̂ ] / |r|^3 dy,   r = x − y,
//! ```
//!
//! which expresses the strain through the vorticity alone. Contracting with
//! `ξ = ω/|ω|` gives the stretching density
//!
//! ```text
//! S:(ξ ⊗ ξ)(x) = (3/4π) p.v.∫ D(r̂, ω̂(y), ξ(x)) |ω(y)| / |r|^3 dy,
//! D(e1, e2, e3) = (e1 · e3) det[e1, e2, e3].
//! ```
//!
//! On the torus the kernel is summed over periodic images of `r` inside a
//! smooth radial window (see [`Periodization`]). The singular cell is left
//! out: the kernel integrates to zero over spheres, so the omitted piece is
//! `O(h)` in the vorticity gradient.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;

use crate::alignment::chi;
use crate::error::{invalid, Error, Result};
use crate::field::{cross3, dot3, norm3, PhysicalVector, SpectralField, VectorField};
use crate::grid::Grid;

/// Symmetric 3×3 matrix stored as a full array.
pub type Sym3 = [[f64; 3]; 3];

/// Storage order of the six independent tensor entries.
pub const PAIRS: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)];

#[inline]
fn slot(i: usize, j: usize) -> usize {
    match (i.min(j), i.max(j)) {
        (0, 0) => 0,
        (1, 1) => 1,
        (2, 2) => 2,
        (0, 1) => 3,
        (0, 2) => 4,
        _ => 5,
    }
}

/// Strain tensor in spectral space; symmetric by construction.
#[derive(Clone, Debug)]
pub struct StrainField {
    comps: [SpectralField; 6],
}

impl StrainField {
    pub fn grid(&self) -> &Arc<Grid> {
        self.comps[0].grid()
    }

    pub fn component(&self, i: usize, j: usize) -> &SpectralField {
        &self.comps[slot(i, j)]
    }

    pub fn trace(&self) -> SpectralField {
        let mut t = self.comps[0].clone();
        for c in 1..3 {
            for (a, b) in t.coeffs_mut().iter_mut().zip(self.comps[c].coeffs()) {
                *a += b;
            }
        }
        t
    }

    /// `‖tr S‖ / ‖S‖` in `L²`.
    pub fn trace_ratio(&self) -> f64 {
        let norm: f64 = PAIRS
            .iter()
            .enumerate()
            .map(|(s, &(i, j))| if i == j { 1.0 } else { 2.0 } * self.comps[s].l2_norm_sq())
            .sum();
        if norm == 0.0 {
            0.0
        } else {
            (self.trace().l2_norm_sq() / norm).sqrt()
        }
    }

    pub fn to_physical(&self) -> PhysicalTensor {
        PhysicalTensor {
            grid: self.grid().clone(),
            comps: std::array::from_fn(|s| self.comps[s].to_physical()),
        }
    }
}

/// Symmetric tensor field sampled on the grid.
#[derive(Clone, Debug)]
pub struct PhysicalTensor {
    grid: Arc<Grid>,
    comps: [Vec<f64>; 6],
}

impl PhysicalTensor {
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn at(&self, idx: usize) -> Sym3 {
        let mut m = [[0.0; 3]; 3];
        for (s, &(i, j)) in PAIRS.iter().enumerate() {
            m[i][j] = self.comps[s][idx];
            m[j][i] = self.comps[s][idx];
        }
        m
    }

    /// `aᵀ S b` at `idx`.
    pub fn contract(&self, idx: usize, a: [f64; 3], b: [f64; 3]) -> f64 {
        bilinear(&self.at(idx), a, b)
    }

    pub fn frobenius(&self) -> Vec<f64> {
        (0..self.grid.len()).map(|idx| frobenius(&self.at(idx))).collect()
    }

    pub fn max_frobenius(&self) -> f64 {
        self.frobenius().into_iter().fold(0.0, f64::max)
    }
}

pub fn bilinear(m: &Sym3, a: [f64; 3], b: [f64; 3]) -> f64 {
    let mut s = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            s += a[i] * m[i][j] * b[j];
        }
    }
    s
}

pub fn frobenius(m: &Sym3) -> f64 {
    m.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
}

/// Largest absolute eigenvalue of a symmetric matrix (Jacobi sweeps).
pub fn operator_norm(m: &Sym3) -> f64 {
    let mut a = *m;
    for _ in 0..50 {
        let off = a[0][1].abs() + a[0][2].abs() + a[1][2].abs();
        if off <= 1e-15 * frobenius(&a).max(f64::MIN_POSITIVE) {
            break;
        }
        for &(p, q) in &[(0usize, 1usize), (0, 2), (1, 2)] {
            if a[p][q] == 0.0 {
                continue;
            }
            let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let t = if theta == 0.0 { 1.0 } else { t };
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            let mut r = a;
            for k in 0..3 {
                r[k][p] = c * a[k][p] - s * a[k][q];
                r[k][q] = s * a[k][p] + c * a[k][q];
            }
            let mut out = r;
            for k in 0..3 {
                out[p][k] = c * r[p][k] - s * r[q][k];
                out[q][k] = s * r[p][k] + c * r[q][k];
            }
            a = out;
        }
    }
    a[0][0].abs().max(a[1][1].abs()).max(a[2][2].abs())
}

/// `Ŝ_ij(k) = i (k_i û_j + k_j û_i) / 2`.
pub fn strain_spectral(u_hat: &VectorField) -> StrainField {
    let grid = u_hat.grid();
    let comps = PAIRS.map(|(i, j)| {
        let ui = u_hat.component(i).coeffs();
        let uj = u_hat.component(j).coeffs();
        let coeffs = (0..grid.len())
            .map(|idx| {
                let k = grid.kvec(idx);
                Complex64::new(0.0, 0.5) * (uj[idx] * k[i] + ui[idx] * k[j])
            })
            .collect();
        SpectralField::from_coeffs(grid, coeffs).expect("grid-sized buffer")
    });
    StrainField { comps }
}

/// `û = i k × ω̂ / |k|^2` with the mean mode dropped; no input checks.
fn biot_savart_raw(omega_hat: &VectorField) -> VectorField {
    let grid = omega_hat.grid();
    let mut u = VectorField::zeros(grid);
    let i = Complex64::new(0.0, 1.0);
    for idx in 1..grid.len() {
        let k = grid.kvec(idx);
        let k2 = dot3(k, k);
        if k2 == 0.0 {
            continue;
        }
        let w = omega_hat.coeff(idx);
        let c = [
            (w[2] * k[1] - w[1] * k[2]) * i / k2,
            (w[0] * k[2] - w[2] * k[0]) * i / k2,
            (w[1] * k[0] - w[0] * k[1]) * i / k2,
        ];
        u.set_coeff(idx, c);
    }
    u
}

/// Velocity of a mean-free vorticity field.
pub fn biot_savart(omega_hat: &VectorField) -> Result<VectorField> {
    let mean = omega_hat.mean().iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let scale = omega_hat.max_abs_coeff();
    if mean > 1e-12 * scale.max(1e-300) && mean > 0.0 {
        return Err(Error::NonMeanFree(mean));
    }
    Ok(biot_savart_raw(omega_hat))
}

/// Strain of the singular integral applied to an arbitrary vector field `w`,
/// i.e. `sym ∇ (i k × ŵ / |k|^2)`. For solenoidal mean-free `w` this is the
/// strain of the velocity whose vorticity is `w`; it is also how the strain of
/// each cutoff piece of the vorticity is defined.
pub fn strain_of_vorticity(w_hat: &VectorField) -> StrainField {
    strain_spectral(&biot_savart_raw(w_hat))
}

/// `(e1 · e3) det[e1, e2, e3]`; inputs must be unit vectors to `1e-8`.
pub fn d_factor(e1: [f64; 3], e2: [f64; 3], e3: [f64; 3]) -> Result<f64> {
    for e in [e1, e2, e3] {
        if (norm3(e) - 1.0).abs() > 1e-8 {
            return Err(Error::NonUnitVector(e));
        }
    }
    Ok(d_factor_unchecked(e1, e2, e3))
}

#[inline]
pub fn d_factor_unchecked(e1: [f64; 3], e2: [f64; 3], e3: [f64; 3]) -> f64 {
    dot3(e1, e3) * dot3(e1, cross3(e2, e3))
}

/// `|sin ∠(a, b)|` for nonzero vectors.
#[inline]
pub fn sin_angle(a: [f64; 3], b: [f64; 3]) -> f64 {
    let s = norm3(cross3(a, b)) / (norm3(a) * norm3(b));
    s.min(1.0)
}

/// How the kernel sum is continued periodically.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Periodization {
    /// Principal cell only, with minimum-image displacements. Cheap but the
    /// truncated far field leaves an `O(1)` bias.
    MinimumImage,
    /// All periodic images with `|r| < radius`, weighted by the smooth window
    /// `χ(2|r|/radius)`. The truncation error decays faster than any power
    /// of `radius` for smooth mean-free vorticity.
    Images { radius: f64 },
}

impl Default for Periodization {
    fn default() -> Self {
        Periodization::Images { radius: 8.0 * PI }
    }
}

fn window(p: Periodization, r: f64) -> f64 {
    match p {
        Periodization::MinimumImage => 1.0,
        Periodization::Images { radius } => chi(2.0 * r / radius),
    }
}

/// Lattice shifts `2π m` that can bring a principal-cell displacement inside
/// the window.
fn image_shifts(p: Periodization) -> Vec<[f64; 3]> {
    match p {
        Periodization::MinimumImage => vec![[0.0; 3]],
        Periodization::Images { radius } => {
            let l = 2.0 * PI;
            let reach = radius + 3f64.sqrt() * PI;
            let m = (reach / l).ceil() as i64;
            let mut out = Vec::new();
            for a in -m..=m {
                for b in -m..=m {
                    for c in -m..=m {
                        let s = [a as f64 * l, b as f64 * l, c as f64 * l];
                        if norm3(s) <= reach {
                            out.push(s);
                        }
                    }
                }
            }
            out
        }
    }
}

fn check_samples(grid: &Grid, samples: &[[usize; 3]]) -> Result<()> {
    for s in samples {
        if s.iter().any(|&i| i >= grid.n()) {
            return Err(Error::SampleOffGrid(*s, grid.n()));
        }
    }
    Ok(())
}

/// Grid indices of points given on a coarser `coarse_n` lattice; fails with
/// [`Error::SampleOffGrid`] unless `grid.n()` is a multiple of `coarse_n`.
pub fn refine_samples(grid: &Grid, coarse: &[[usize; 3]], coarse_n: usize) -> Result<Vec<[usize; 3]>> {
    coarse
        .iter()
        .map(|p| {
            if coarse_n == 0 || !grid.n().is_multiple_of(coarse_n) || p.iter().any(|&i| i >= coarse_n) {
                Err(Error::SampleOffGrid(*p, grid.n()))
            } else {
                Ok(p.map(|i| i * grid.n() / coarse_n))
            }
        })
        .collect()
}

/// Direct quadrature of the strain singular integral.
///
/// Building the operator precomputes the periodised tensor
/// `P_ik(d) = Σ_m ψ(|r|) r̂_i r̂_k / |r|^3`, `r = d h + 2π m`, for every grid
/// offset `d`; each sample then costs one pass over the grid.
pub struct SingularIntegral {
    grid: Arc<Grid>,
    periodization: Periodization,
    kernel: Vec<[f64; 6]>,
}

impl SingularIntegral {
    pub fn new(grid: &Arc<Grid>, periodization: Periodization) -> Result<Self> {
        if let Periodization::Images { radius } = periodization {
            if !(radius >= grid.length()) {
                return Err(invalid("radius", format!("window radius {radius} is smaller than the box")));
            }
        }
        let n = grid.n();
        let h = grid.spacing();
        let shifts = image_shifts(periodization);
        let mut kernel = vec![[0.0; 6]; grid.len()];
        for (off, slot_val) in kernel.iter_mut().enumerate() {
            let d = grid.unravel(off).map(|i| {
                let s = if i >= n / 2 { i as i64 - n as i64 } else { i as i64 };
                s as f64 * h
            });
            let mut acc = [0.0; 6];
            for s in &shifts {
                let r = [d[0] + s[0], d[1] + s[1], d[2] + s[2]];
                let rn = norm3(r);
                if rn == 0.0 {
                    continue;
                }
                let w = window(periodization, rn);
                if w == 0.0 {
                    continue;
                }
                let f = w / (rn * rn * rn * rn * rn);
                for (t, &(i, k)) in PAIRS.iter().enumerate() {
                    acc[t] += f * r[i] * r[k];
                }
            }
            *slot_val = acc;
        }
        Ok(SingularIntegral {
            grid: grid.clone(),
            periodization,
            kernel,
        })
    }

    pub fn periodization(&self) -> Periodization {
        self.periodization
    }

    /// Strain tensor at each sample point.
    pub fn strain_at(&self, omega: &PhysicalVector, samples: &[[usize; 3]]) -> Result<Vec<Sym3>> {
        let grid = &self.grid;
        if omega.grid().n() != grid.n() {
            return Err(Error::GridMismatch(omega.grid().n(), grid.n()));
        }
        check_samples(grid, samples)?;
        let n = grid.n();
        let h3 = grid.cell_volume();
        let [wx, wy, wz] = omega.components();
        let mut out = Vec::with_capacity(samples.len());
        for x in samples {
            // m[t][l] = Σ_y P_t(y - x) ω_l(y)
            let mut m = [[0.0; 3]; 6];
            for i in 0..n {
                let di = (i + n - x[0]) % n;
                for j in 0..n {
                    let dj = (j + n - x[1]) % n;
                    let row = (i * n + j) * n;
                    let krow = (di * n + dj) * n;
                    for l in 0..n {
                        let dl = (l + n - x[2]) % n;
                        let p = &self.kernel[krow + dl];
                        let w = [wx[row + l], wy[row + l], wz[row + l]];
                        for t in 0..6 {
                            m[t][0] += p[t] * w[0];
                            m[t][1] += p[t] * w[1];
                            m[t][2] += p[t] * w[2];
                        }
                    }
                }
            }
            // A_ij = Σ_kl ε_jkl P_ik ω_l,  S = (3/8π)(A + Aᵀ) h^3
            let p = |i: usize, k: usize, l: usize| m[slot(i, k)][l];
            let mut a = [[0.0; 3]; 3];
            for (i, row) in a.iter_mut().enumerate() {
                row[0] = p(i, 1, 2) - p(i, 2, 1);
                row[1] = p(i, 2, 0) - p(i, 0, 2);
                row[2] = p(i, 0, 1) - p(i, 1, 0);
            }
            let c = 3.0 / (8.0 * PI) * h3;
            let mut s = [[0.0; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    s[i][j] = c * (a[i][j] + a[j][i]);
                }
            }
            out.push(s);
        }
        Ok(out)
    }

    /// Stretching density `S:(ξ⊗ξ)` at each sample by literal quadrature of
    /// `(3/4π) Σ_y D(r̂, ω̂(y), ξ(x)) |ω(y)| ψ(|r|) / |r|^3 h^3`.
    ///
    /// Fails with [`Error::BelowThreshold`] if `|ω(x)|` is below
    /// `1e-8 max|ω|` at a sample.
    pub fn stretching_at(&self, omega: &PhysicalVector, samples: &[[usize; 3]]) -> Result<Vec<f64>> {
        let grid = &self.grid;
        if omega.grid().n() != grid.n() {
            return Err(Error::GridMismatch(omega.grid().n(), grid.n()));
        }
        check_samples(grid, samples)?;
        let n = grid.n();
        let h = grid.spacing();
        let threshold = direction_threshold(omega);
        let shifts = image_shifts(self.periodization);
        let mut out = Vec::with_capacity(samples.len());
        for x in samples {
            let wx = omega.at(grid.index(x[0], x[1], x[2]));
            let mag = norm3(wx);
            if !(mag > threshold) {
                return Err(Error::BelowThreshold {
                    point: *x,
                    magnitude: mag,
                    threshold,
                });
            }
            let xi = wx.map(|c| c / mag);
            let mut acc = 0.0;
            for y in 0..grid.len() {
                let wy = omega.at(y);
                let my = norm3(wy);
                if my == 0.0 {
                    continue;
                }
                let ey = wy.map(|c| c / my);
                let yi = grid.unravel(y);
                let d: [f64; 3] = std::array::from_fn(|a| {
                    let s = crate::grid::min_image_steps(yi[a], x[a], n);
                    s as f64 * h
                });
                for s in &shifts {
                    let r = [d[0] + s[0], d[1] + s[1], d[2] + s[2]];
                    let rn = norm3(r);
                    if rn == 0.0 {
                        continue;
                    }
                    let w = window(self.periodization, rn);
                    if w == 0.0 {
                        continue;
                    }
                    let e1 = r.map(|c| c / rn);
                    acc += d_factor_unchecked(e1, ey, xi) * my * w / (rn * rn * rn);
                }
            }
            out.push(3.0 / (4.0 * PI) * acc * grid.cell_volume());
        }
        Ok(out)
    }
}

/// Direct-quadrature strain at `samples` with the given periodisation.
pub fn strain_singular_integral(
    omega: &PhysicalVector,
    samples: &[[usize; 3]],
    periodization: Periodization,
) -> Result<Vec<Sym3>> {
    SingularIntegral::new(omega.grid(), periodization)?.strain_at(omega, samples)
}

/// Magnitude below which the vorticity direction is treated as undefined.
pub fn direction_threshold(omega: &PhysicalVector) -> f64 {
    1e-8 * omega.max_magnitude()
}

/// Stretching density `S:(ξ⊗ξ)` on the whole grid from the spectral strain;
/// zero where `|ω|` is below [`direction_threshold`].
pub fn stretching_field(u_hat: &VectorField) -> Vec<f64> {
    let s = strain_spectral(u_hat).to_physical();
    let omega = u_hat.curl().to_physical();
    let threshold = direction_threshold(&omega);
    (0..omega.grid().len())
        .map(|idx| {
            let w = omega.at(idx);
            let m = norm3(w);
            if m > threshold {
                s.contract(idx, w, w) / (m * m)
            } else {
                0.0
            }
        })
        .collect()
}

/// The two routes to the stretching density at the same sample points.
#[derive(Clone, Debug)]
pub struct StretchingSamples {
    pub samples: Vec<[usize; 3]>,
    pub spectral: Vec<f64>,
    pub quadrature: Vec<f64>,
}

impl StretchingSamples {
    /// `max |a − b| / max |a|` with the spectral route as reference scale.
    pub fn relative_error(&self, scale: f64) -> f64 {
        let diff = self
            .spectral
            .iter()
            .zip(&self.quadrature)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if scale == 0.0 {
            diff
        } else {
            diff / scale
        }
    }
}

/// Stretching density by contraction of the spectral strain (route a) and by
/// the D-factor quadrature (route b).
pub fn stretching_density(
    u_hat: &VectorField,
    samples: &[[usize; 3]],
    periodization: Periodization,
) -> Result<StretchingSamples> {
    let grid = u_hat.grid();
    check_samples(grid, samples)?;
    let omega = u_hat.curl().to_physical();
    let threshold = direction_threshold(&omega);
    let s = strain_spectral(u_hat).to_physical();
    let mut spectral = Vec::with_capacity(samples.len());
    for x in samples {
        let idx = grid.index(x[0], x[1], x[2]);
        let w = omega.at(idx);
        let m = norm3(w);
        if !(m > threshold) {
            return Err(Error::BelowThreshold {
                point: *x,
                magnitude: m,
                threshold,
            });
        }
        spectral.push(s.contract(idx, w, w) / (m * m));
    }
    let quadrature = SingularIntegral::new(grid, periodization)?.stretching_at(&omega, samples)?;
    Ok(StretchingSamples {
        samples: samples.to_vec(),
        spectral,
        quadrature,
    })
}

/// `max_samples ‖S_a − S_b‖_F / max_x ‖S_ref(x)‖_F`.
pub fn relative_strain_error(reference: &PhysicalTensor, samples: &[[usize; 3]], values: &[Sym3]) -> f64 {
    let grid = reference.grid();
    let scale = reference.max_frobenius();
    let mut worst: f64 = 0.0;
    for (x, v) in samples.iter().zip(values) {
        let r = reference.at(grid.index(x[0], x[1], x[2]));
        let mut d = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                d[i][j] = v[i][j] - r[i][j];
            }
        }
        worst = worst.max(frobenius(&d));
    }
    if scale == 0.0 {
        worst
    } else {
        worst / scale
    }
}
