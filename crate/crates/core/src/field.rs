//! Scalar and vector fields on the periodic grid, the spectral differential
//! operators acting on them, and midpoint-rule norms.

use std::sync::Arc;

use rustfft::num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::grid::Grid;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

fn check_same(a: &Grid, b: &Grid) -> Result<()> {
    if a.n() != b.n() {
        return Err(Error::GridMismatch(a.n(), b.n()));
    }
    Ok(())
}

/// Fourier coefficients of a real scalar field.
#[derive(Clone, Debug)]
pub struct SpectralField {
    grid: Arc<Grid>,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: &Arc<Grid>) -> Self {
        SpectralField {
            grid: grid.clone(),
            coeffs: vec![ZERO; grid.len()],
        }
    }

    pub fn from_coeffs(grid: &Arc<Grid>, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                actual: coeffs.len(),
            });
        }
        Ok(SpectralField {
            grid: grid.clone(),
            coeffs,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Physical values on the collocation grid.
    pub fn to_physical(&self) -> Vec<f64> {
        let mut buf = self.coeffs.clone();
        self.grid.inverse(&mut buf);
        buf.into_iter().map(|c| c.re).collect()
    }

    pub fn mean(&self) -> Complex64 {
        self.coeffs[0]
    }

    /// `∫ f^2` by Parseval: `(2π)^3 Σ |f̂(k)|^2`.
    pub fn l2_norm_sq(&self) -> f64 {
        self.grid.volume() * self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>()
    }

    /// Largest `|f̂(-k) - conj(f̂(k))|`; zero for a real field.
    pub fn hermitian_defect(&self) -> f64 {
        (0..self.coeffs.len())
            .map(|idx| {
                let c = self.grid.conjugate_index(idx);
                (self.coeffs[c] - self.coeffs[idx].conj()).norm()
            })
            .fold(0.0, f64::max)
    }

    /// Zero every mode outside the two-thirds band.
    pub fn dealias(&mut self) {
        for (idx, c) in self.coeffs.iter_mut().enumerate() {
            if !self.grid.is_retained(idx) {
                *c = ZERO;
            }
        }
    }

    pub fn gradient(&self) -> VectorField {
        let mut out = VectorField::zeros(&self.grid);
        for idx in 0..self.coeffs.len() {
            let k = self.grid.kvec(idx);
            let ic = I * self.coeffs[idx];
            for a in 0..3 {
                out.comps[a].coeffs[idx] = ic * k[a];
            }
        }
        out
    }

    /// `∫ |∇f|^2` evaluated spectrally.
    pub fn gradient_norm_sq(&self) -> f64 {
        let s: f64 = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(idx, c)| {
                let k = self.grid.kvec(idx);
                (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) * c.norm_sqr()
            })
            .sum();
        self.grid.volume() * s
    }
}

/// Forward transform of a real array sampled on `grid`.
pub fn transform_forward(grid: &Arc<Grid>, physical: &[f64]) -> Result<SpectralField> {
    if physical.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            actual: physical.len(),
        });
    }
    let mut buf: Vec<Complex64> = physical.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    grid.forward(&mut buf);
    Ok(SpectralField {
        grid: grid.clone(),
        coeffs: buf,
    })
}

pub fn transform_inverse(field: &SpectralField) -> Vec<f64> {
    field.to_physical()
}

/// Vector field in spectral space.
#[derive(Clone, Debug)]
pub struct VectorField {
    comps: [SpectralField; 3],
}

impl VectorField {
    pub fn zeros(grid: &Arc<Grid>) -> Self {
        VectorField {
            comps: [
                SpectralField::zeros(grid),
                SpectralField::zeros(grid),
                SpectralField::zeros(grid),
            ],
        }
    }

    pub fn from_components(comps: [SpectralField; 3]) -> Result<Self> {
        check_same(comps[0].grid(), comps[1].grid())?;
        check_same(comps[0].grid(), comps[2].grid())?;
        Ok(VectorField { comps })
    }

    pub fn from_physical(v: &PhysicalVector) -> Self {
        let g = v.grid();
        let c = |a: usize| transform_forward(g, &v.comps[a]).expect("sized by grid");
        VectorField {
            comps: [c(0), c(1), c(2)],
        }
    }

    pub fn to_physical(&self) -> PhysicalVector {
        PhysicalVector {
            grid: self.grid().clone(),
            comps: [
                self.comps[0].to_physical(),
                self.comps[1].to_physical(),
                self.comps[2].to_physical(),
            ],
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.comps[0].grid()
    }

    pub fn component(&self, a: usize) -> &SpectralField {
        &self.comps[a]
    }

    pub fn component_mut(&mut self, a: usize) -> &mut SpectralField {
        &mut self.comps[a]
    }

    pub fn components(&self) -> &[SpectralField; 3] {
        &self.comps
    }

    #[inline]
    pub fn coeff(&self, idx: usize) -> [Complex64; 3] {
        [
            self.comps[0].coeffs[idx],
            self.comps[1].coeffs[idx],
            self.comps[2].coeffs[idx],
        ]
    }

    #[inline]
    pub fn set_coeff(&mut self, idx: usize, v: [Complex64; 3]) {
        for a in 0..3 {
            self.comps[a].coeffs[idx] = v[a];
        }
    }

    pub fn dealias(&mut self) {
        for c in self.comps.iter_mut() {
            c.dealias();
        }
    }

    pub fn mean(&self) -> [Complex64; 3] {
        self.coeff(0)
    }

    /// `∫ |v|^2` by Parseval.
    pub fn l2_norm_sq(&self) -> f64 {
        self.comps.iter().map(SpectralField::l2_norm_sq).sum()
    }

    /// `(curl v)^(k) = i k × v̂(k)`.
    pub fn curl(&self) -> VectorField {
        let g = self.grid();
        let mut out = VectorField::zeros(g);
        for idx in 0..g.len() {
            let k = g.kvec(idx);
            let v = self.coeff(idx);
            out.set_coeff(
                idx,
                [
                    I * (v[2] * k[1] - v[1] * k[2]),
                    I * (v[0] * k[2] - v[2] * k[0]),
                    I * (v[1] * k[0] - v[0] * k[1]),
                ],
            );
        }
        out
    }

    /// `(div v)^(k) = i k · v̂(k)`.
    pub fn divergence(&self) -> SpectralField {
        let g = self.grid();
        let mut out = SpectralField::zeros(g);
        for idx in 0..g.len() {
            let k = g.kvec(idx);
            let v = self.coeff(idx);
            out.coeffs[idx] = I * (v[0] * k[0] + v[1] * k[1] + v[2] * k[2]);
        }
        out
    }

    /// Leray projection `(I - k⊗k/|k|^2) v̂(k)`; the mean mode passes through.
    pub fn leray_project(&self) -> VectorField {
        let mut out = self.clone();
        out.leray_project_in_place();
        out
    }

    pub fn leray_project_in_place(&mut self) {
        let g = self.grid().clone();
        for idx in 0..g.len() {
            let k = g.kvec(idx);
            let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
            if k2 == 0.0 {
                continue;
            }
            let v = self.coeff(idx);
            let kv = (v[0] * k[0] + v[1] * k[1] + v[2] * k[2]) / k2;
            self.set_coeff(idx, [v[0] - kv * k[0], v[1] - kv * k[1], v[2] - kv * k[2]]);
        }
    }

    /// `max_k |k·v̂(k)| / ‖v̂‖`, the scale-free divergence measure.
    pub fn divergence_ratio(&self) -> f64 {
        let g = self.grid();
        let mut norm2 = 0.0;
        let mut worst: f64 = 0.0;
        for idx in 0..g.len() {
            let k = g.kvec(idx);
            let v = self.coeff(idx);
            norm2 += v.iter().map(|c| c.norm_sqr()).sum::<f64>();
            worst = worst.max((v[0] * k[0] + v[1] * k[1] + v[2] * k[2]).norm());
        }
        if norm2 == 0.0 {
            0.0
        } else {
            worst / norm2.sqrt()
        }
    }

    pub fn is_divergence_free(&self, tol: f64) -> bool {
        self.divergence_ratio() <= tol
    }

    /// Largest coefficient-wise difference, for comparisons in tests.
    pub fn max_abs_diff(&self, other: &VectorField) -> f64 {
        let mut worst: f64 = 0.0;
        for a in 0..3 {
            for (x, y) in self.comps[a].coeffs.iter().zip(&other.comps[a].coeffs) {
                worst = worst.max((x - y).norm());
            }
        }
        worst
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.comps
            .iter()
            .flat_map(|c| c.coeffs.iter())
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }

    pub fn scaled(&self, s: f64) -> VectorField {
        let mut out = self.clone();
        for c in out.comps.iter_mut() {
            for x in c.coeffs.iter_mut() {
                *x *= s;
            }
        }
        out
    }
}

/// Vector field sampled on the collocation grid.
#[derive(Clone, Debug)]
pub struct PhysicalVector {
    grid: Arc<Grid>,
    comps: [Vec<f64>; 3],
}

impl PhysicalVector {
    pub fn zeros(grid: &Arc<Grid>) -> Self {
        let n = grid.len();
        PhysicalVector {
            grid: grid.clone(),
            comps: [vec![0.0; n], vec![0.0; n], vec![0.0; n]],
        }
    }

    pub fn from_components(grid: &Arc<Grid>, comps: [Vec<f64>; 3]) -> Result<Self> {
        for c in &comps {
            if c.len() != grid.len() {
                return Err(Error::DimensionMismatch {
                    expected: grid.len(),
                    actual: c.len(),
                });
            }
        }
        Ok(PhysicalVector {
            grid: grid.clone(),
            comps,
        })
    }

    /// Samples `f(x, y, z)` at every collocation point.
    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(f64, f64, f64) -> [f64; 3]) -> Self {
        let mut out = PhysicalVector::zeros(grid);
        let n = grid.n();
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    let v = f(grid.coord(i), grid.coord(j), grid.coord(l));
                    out.set(grid.index(i, j, l), v);
                }
            }
        }
        out
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn components(&self) -> &[Vec<f64>; 3] {
        &self.comps
    }

    pub fn component(&self, a: usize) -> &[f64] {
        &self.comps[a]
    }

    #[inline]
    pub fn at(&self, idx: usize) -> [f64; 3] {
        [self.comps[0][idx], self.comps[1][idx], self.comps[2][idx]]
    }

    #[inline]
    pub fn set(&mut self, idx: usize, v: [f64; 3]) {
        for a in 0..3 {
            self.comps[a][idx] = v[a];
        }
    }

    pub fn magnitude(&self) -> Vec<f64> {
        (0..self.grid.len()).map(|i| norm3(self.at(i))).collect()
    }

    pub fn max_magnitude(&self) -> f64 {
        (0..self.grid.len())
            .map(|i| norm3(self.at(i)))
            .fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &PhysicalVector) -> f64 {
        let mut worst: f64 = 0.0;
        for a in 0..3 {
            for (x, y) in self.comps[a].iter().zip(&other.comps[a]) {
                worst = worst.max((x - y).abs());
            }
        }
        worst
    }
}

#[inline]
pub fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

#[inline]
pub fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Midpoint-rule `L^q` norm `(Σ |f|^q h^3)^{1/q}` of pointwise magnitudes.
pub fn lq_norm(grid: &Grid, values: &[f64], q: f64) -> Result<f64> {
    if !(q >= 1.0) {
        return Err(invalid("q", format!("L^q norm needs q >= 1, got {q}")));
    }
    if values.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            actual: values.len(),
        });
    }
    let s: f64 = values.iter().map(|v| v.abs().powf(q)).sum();
    Ok((s * grid.cell_volume()).powf(1.0 / q))
}

/// `∫ |f|^q` by the midpoint rule.
pub fn lq_integral(grid: &Grid, values: &[f64], q: f64) -> f64 {
    values.iter().map(|v| v.abs().powf(q)).sum::<f64>() * grid.cell_volume()
}

/// `∫ |∇(|ω|^{q/2})|^2`, with `|ω|^{q/2}` regularised as `(|ω|^2 + ε^2)^{q/4}`
/// and `ε = 1e-14 max|ω|`.
pub fn grad_pow_norm(omega: &PhysicalVector, q: f64) -> Result<f64> {
    if !(q >= 1.0) {
        return Err(invalid("q", format!("need q >= 1, got {q}")));
    }
    let grid = omega.grid();
    let max = omega.max_magnitude();
    if max == 0.0 {
        return Ok(0.0);
    }
    let eps2 = (1e-14 * max).powi(2);
    let g: Vec<f64> = (0..grid.len())
        .map(|i| {
            let w = omega.at(i);
            (dot3(w, w) + eps2).powf(q / 4.0)
        })
        .collect();
    Ok(transform_forward(grid, &g)?.gradient_norm_sq())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn smooth_scalar(grid: &Arc<Grid>) -> Vec<f64> {
        let n = grid.n();
        let mut out = vec![0.0; grid.len()];
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    let (x, y, z) = (grid.coord(i), grid.coord(j), grid.coord(l));
                    out[grid.index(i, j, l)] =
                        (x.sin() + 0.3 * (2.0 * y).cos()).exp() * (1.0 + 0.2 * (x + z).sin());
                }
            }
        }
        out
    }

    #[test]
    fn constant_field_has_only_mean_mode() {
        let g = Grid::new(8).unwrap();
        let f = transform_forward(&g, &vec![2.5; g.len()]).unwrap();
        assert!((f.coeffs()[0] - Complex64::new(2.5, 0.0)).norm() < 1e-14);
        assert!(f.coeffs()[1..].iter().all(|c| c.norm() < 1e-14));
    }

    #[test]
    fn sine_mode_coefficients() {
        let g = Grid::new(8).unwrap();
        let v = PhysicalVector::from_fn(&g, |x, _, _| [x.sin(), 0.0, 0.0]);
        let f = transform_forward(&g, v.component(0)).unwrap();
        let plus = g.index_of_wavevector([1, 0, 0]).unwrap();
        let minus = g.index_of_wavevector([-1, 0, 0]).unwrap();
        assert!((f.coeffs()[plus] - Complex64::new(0.0, -0.5)).norm() < 1e-14);
        assert!((f.coeffs()[minus] - Complex64::new(0.0, 0.5)).norm() < 1e-14);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let g = Grid::new(8).unwrap();
        assert!(matches!(
            transform_forward(&g, &[0.0; 10]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn round_trip_smooth_field() {
        let g = Grid::new(16).unwrap();
        let f = smooth_scalar(&g);
        let back = transform_forward(&g, &f).unwrap().to_physical();
        let scale = f.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let err = f.iter().zip(&back).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err / scale < 1e-12, "round trip error {err}");
    }

    #[test]
    fn real_field_is_hermitian() {
        let g = Grid::new(16).unwrap();
        let f = transform_forward(&g, &smooth_scalar(&g)).unwrap();
        assert!(f.hermitian_defect() < 1e-14);
    }

    #[test]
    fn lq_norm_constant_and_zero() {
        let g = Grid::new(8).unwrap();
        for q in [1.0, 2.0, 3.5] {
            let v = lq_norm(&g, &vec![-1.5; g.len()], q).unwrap();
            let expect = 1.5 * (2.0 * PI).powf(3.0 / q);
            assert!((v - expect).abs() < 1e-12 * expect);
            assert_eq!(lq_norm(&g, &vec![0.0; g.len()], q).unwrap(), 0.0);
        }
        assert!(lq_norm(&g, &vec![1.0; g.len()], 0.5).is_err());
    }

    #[test]
    fn lq_norm_sine_matches_parseval() {
        let g = Grid::new(16).unwrap();
        let v = PhysicalVector::from_fn(&g, |x, _, _| [x.sin(), 0.0, 0.0]);
        let l2 = lq_norm(&g, v.component(0), 2.0).unwrap();
        assert!((l2 - (4.0 * PI.powi(3)).sqrt()).abs() < 1e-12);
        let parseval = transform_forward(&g, v.component(0)).unwrap().l2_norm_sq();
        assert!((l2 * l2 - parseval).abs() < 1e-10 * parseval);
    }

    #[test]
    fn divergence_of_single_mode() {
        let g = Grid::new(8).unwrap();
        let v = VectorField::from_physical(&PhysicalVector::from_fn(&g, |x, _, _| {
            [x.sin(), 0.0, 0.0]
        }));
        let d = v.divergence().to_physical();
        for i in 0..g.n() {
            let idx = g.index(i, 2, 5);
            assert!((d[idx] - g.coord(i).cos()).abs() < 1e-13);
        }
    }

    #[test]
    fn curl_of_constant_is_zero() {
        let g = Grid::new(8).unwrap();
        let v = VectorField::from_physical(&PhysicalVector::from_fn(&g, |_, _, _| {
            [1.0, -2.0, 0.5]
        }));
        assert!(v.curl().max_abs_coeff() < 1e-15);
    }

    #[test]
    fn grad_pow_norm_zero_field() {
        let g = Grid::new(8).unwrap();
        assert_eq!(grad_pow_norm(&PhysicalVector::zeros(&g), 3.0).unwrap(), 0.0);
    }
}
