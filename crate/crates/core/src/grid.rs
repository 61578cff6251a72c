//! The periodic box `[0, 2π)^3` sampled on `n^3` collocation points, and the
//! three-dimensional FFT that moves fields between physical and spectral space.
//!
//! Storage is row-major with the third coordinate fastest: the point
//! `(x_i, y_j, z_l)` lives at `(i * n + j) * n + l`. Spectral coefficients use
//! the same layout with FFT index ordering, so index `i` carries wavenumber
//! `i` for `i <= n/2` and `i - n` above.
//!
//! The forward transform is normalised by `1/n^3`, which makes coefficient
//! `c(k)` the amplitude of `e^{i k·x}`: a constant field `c` has `c(0) = c`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

pub struct Grid {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch_len: usize,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid").field("n", &self.n).finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
    }
}

impl Grid {
    pub fn new(n: usize) -> Result<Arc<Grid>> {
        if n < 8 || !n.is_multiple_of(2) {
            return Err(Error::InvalidGridSize(n));
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Ok(Arc::new(Grid {
            n,
            forward,
            inverse,
            scratch_len,
        }))
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Total number of collocation points, `n^3`.
    #[inline]
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Box side, always `2π`.
    #[inline]
    pub fn length(&self) -> f64 {
        2.0 * PI
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.n as f64
    }

    /// Quadrature weight of one cell, `h^3`.
    #[inline]
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(3)
    }

    /// Volume of the box, `(2π)^3`.
    #[inline]
    pub fn volume(&self) -> f64 {
        self.length().powi(3)
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, l: usize) -> usize {
        (i * self.n + j) * self.n + l
    }

    #[inline]
    pub fn unravel(&self, idx: usize) -> [usize; 3] {
        let n = self.n;
        [idx / (n * n), (idx / n) % n, idx % n]
    }

    /// Physical coordinate of 1-D index `i`.
    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        i as f64 * self.spacing()
    }

    /// Signed integer wavenumber carried by 1-D FFT index `i`.
    #[inline]
    pub fn wavenumber(&self, i: usize) -> i64 {
        if i <= self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// Wavenumber used by derivative operators; the Nyquist mode has no
    /// real-valued derivative and is mapped to zero.
    #[inline]
    pub fn deriv_wavenumber(&self, i: usize) -> f64 {
        if i == self.n / 2 {
            0.0
        } else {
            self.wavenumber(i) as f64
        }
    }

    /// Derivative wavevector of flat spectral index `idx`.
    #[inline]
    pub fn kvec(&self, idx: usize) -> [f64; 3] {
        let [i, j, l] = self.unravel(idx);
        [
            self.deriv_wavenumber(i),
            self.deriv_wavenumber(j),
            self.deriv_wavenumber(l),
        ]
    }

    /// Two-thirds rule: a 1-D mode survives dealiasing iff `3|k| < n`.
    #[inline]
    pub fn is_retained_1d(&self, i: usize) -> bool {
        3 * self.wavenumber(i).unsigned_abs() < self.n as u64
    }

    #[inline]
    pub fn is_retained(&self, idx: usize) -> bool {
        let [i, j, l] = self.unravel(idx);
        self.is_retained_1d(i) && self.is_retained_1d(j) && self.is_retained_1d(l)
    }

    /// Flat index of the mode `-k` given the flat index of `k`.
    #[inline]
    pub fn conjugate_index(&self, idx: usize) -> usize {
        let n = self.n;
        let [i, j, l] = self.unravel(idx);
        self.index((n - i) % n, (n - j) % n, (n - l) % n)
    }

    /// Flat index of integer wavevector `k`, if representable on this grid.
    pub fn index_of_wavevector(&self, k: [i64; 3]) -> Option<usize> {
        let n = self.n as i64;
        let mut ix = [0usize; 3];
        for (slot, &kc) in ix.iter_mut().zip(k.iter()) {
            if kc > n / 2 || kc < -(n / 2) + 1 {
                return None;
            }
            *slot = kc.rem_euclid(n) as usize;
        }
        Some(self.index(ix[0], ix[1], ix[2]))
    }

    /// In-place forward transform, scaled by `1/n^3`.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.forward);
        let scale = 1.0 / self.len() as f64;
        for c in data.iter_mut() {
            *c *= scale;
        }
    }

    /// In-place inverse transform (unscaled).
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inverse);
    }

    fn transform(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        assert_eq!(data.len(), self.len(), "buffer does not match grid");
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.scratch_len];

        // third axis: contiguous rows
        plan.process_with_scratch(data, &mut scratch);

        // second axis: transpose each x-plane, transform, transpose back
        let mut plane = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            let base = i * n * n;
            for j in 0..n {
                for l in 0..n {
                    plane[l * n + j] = data[base + j * n + l];
                }
            }
            plan.process_with_scratch(&mut plane, &mut scratch);
            for j in 0..n {
                for l in 0..n {
                    data[base + j * n + l] = plane[l * n + j];
                }
            }
        }

        // first axis: gather lines along i for each fixed j
        for j in 0..n {
            for i in 0..n {
                for l in 0..n {
                    plane[l * n + i] = data[(i * n + j) * n + l];
                }
            }
            plan.process_with_scratch(&mut plane, &mut scratch);
            for i in 0..n {
                for l in 0..n {
                    data[(i * n + j) * n + l] = plane[l * n + i];
                }
            }
        }
    }
}

/// Minimum-image signed offset (in grid steps) from index `from` to `to`,
/// in `[-n/2, n/2)`.
#[inline]
pub(crate) fn min_image_steps(from: usize, to: usize, n: usize) -> i64 {
    let d = (to + n - from) % n;
    if d >= n / 2 {
        d as i64 - n as i64
    } else {
        d as i64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_sizes() {
        assert!(Grid::new(6).is_err());
        assert!(Grid::new(9).is_err());
        assert!(Grid::new(8).is_ok());
        assert!(Grid::new(48).is_ok());
    }

    #[test]
    fn wavenumber_layout() {
        let g = Grid::new(8).unwrap();
        let ks: Vec<i64> = (0..8).map(|i| g.wavenumber(i)).collect();
        assert_eq!(ks, vec![0, 1, 2, 3, 4, -3, -2, -1]);
        assert_eq!(g.deriv_wavenumber(4), 0.0);
        // 3|k| < 8 keeps |k| <= 2
        let kept: Vec<bool> = (0..8).map(|i| g.is_retained_1d(i)).collect();
        assert_eq!(
            kept,
            vec![true, true, true, false, false, false, true, true]
        );
    }

    #[test]
    fn two_thirds_rule_excludes_exact_third() {
        let g = Grid::new(48).unwrap();
        assert!(g.is_retained_1d(15));
        assert!(!g.is_retained_1d(16));
        assert!(!g.is_retained_1d(48 - 16));
    }

    #[test]
    fn conjugate_index_roundtrip() {
        let g = Grid::new(8).unwrap();
        for idx in 0..g.len() {
            let c = g.conjugate_index(idx);
            assert_eq!(g.conjugate_index(c), idx);
            let k = g.unravel(idx).map(|i| g.wavenumber(i));
            let kc = g.unravel(c).map(|i| g.wavenumber(i));
            for a in 0..3 {
                assert_eq!((k[a] + kc[a]).rem_euclid(8), 0);
            }
        }
    }

    #[test]
    fn min_image_offsets() {
        assert_eq!(min_image_steps(0, 3, 8), 3);
        assert_eq!(min_image_steps(0, 4, 8), -4);
        assert_eq!(min_image_steps(0, 5, 8), -3);
        assert_eq!(min_image_steps(6, 1, 8), 3);
    }
}
