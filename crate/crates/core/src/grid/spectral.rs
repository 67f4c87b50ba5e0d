use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::SpatialGrid;

/// Fourier transforms on a periodic [`SpatialGrid`].
///
/// Coefficients are normalized so that `f(x) = Σ_k c_k exp(i k·x)`; the
/// constant mode of a field therefore equals its spatial mean.
#[derive(Clone)]
pub struct Spectral {
    grid: SpatialGrid,
    forward: Arc<dyn Fft<f64>>,
    backward: Arc<dyn Fft<f64>>,
    wavenumbers: Vec<f64>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("grid", &self.grid).finish()
    }
}

impl Spectral {
    pub fn new(grid: &SpatialGrid) -> Self {
        let mut planner = FftPlanner::new();
        let n = grid.n();
        let forward = planner.plan_fft_forward(n);
        let backward = planner.plan_fft_inverse(n);
        let base = 2.0 * PI / grid.period();
        let wavenumbers = (0..n).map(|m| base * signed_mode(m, n) as f64).collect();
        Self { grid: grid.clone(), forward, backward, wavenumbers }
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    /// Wavenumber along one axis for a per-axis mode index.
    pub fn wavenumber(&self, m: usize) -> f64 {
        self.wavenumbers[m]
    }

    /// Whether a per-axis mode index is the Nyquist mode.
    pub fn is_nyquist(&self, m: usize) -> bool {
        m == self.grid.n() / 2
    }

    /// Wavevector of a flat mode index (unused axes are zero).
    pub fn wavevector(&self, idx: usize) -> [f64; 3] {
        let ijk = self.grid.unindex(idx);
        let mut k = [0.0; 3];
        for axis in 0..self.grid.dim() {
            k[axis] = self.wavenumbers[ijk[axis]];
        }
        k
    }

    /// Largest per-axis index distance |m| of a flat mode, as a signed integer magnitude.
    pub fn mode_magnitude(&self, idx: usize) -> usize {
        let ijk = self.grid.unindex(idx);
        (0..self.grid.dim()).map(|a| signed_mode(ijk[a], self.grid.n()).unsigned_abs() as usize).max().unwrap_or(0)
    }

    /// Unnormalized in-place multidimensional transform.
    pub fn transform(&self, buf: &mut [Complex64], inverse: bool) {
        let n = self.grid.n();
        let dim = self.grid.dim();
        debug_assert_eq!(buf.len(), self.grid.len());
        let plan = if inverse { &self.backward } else { &self.forward };
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        if dim == 1 {
            plan.process_with_scratch(buf, &mut scratch);
            return;
        }
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        let total = buf.len();
        for axis in 0..dim {
            let stride = n.pow((dim - 1 - axis) as u32);
            if stride == 1 {
                for chunk in buf.chunks_mut(n) {
                    plan.process_with_scratch(chunk, &mut scratch);
                }
                continue;
            }
            let block = stride * n;
            for base in (0..total).step_by(block) {
                for offset in 0..stride {
                    let start = base + offset;
                    for (i, slot) in line.iter_mut().enumerate() {
                        *slot = buf[start + i * stride];
                    }
                    plan.process_with_scratch(&mut line, &mut scratch);
                    for (i, value) in line.iter().enumerate() {
                        buf[start + i * stride] = *value;
                    }
                }
            }
        }
    }

    /// Normalized Fourier coefficients of a real field.
    pub fn forward(&self, field: &[f64]) -> Vec<Complex64> {
        let scale = 1.0 / self.grid.len() as f64;
        let mut buf: Vec<Complex64> = field.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.transform(&mut buf, false);
        buf.iter_mut().for_each(|c| *c *= scale);
        buf
    }

    /// Real part of the field with the given normalized coefficients.
    pub fn inverse(&self, coeffs: &[Complex64]) -> Vec<f64> {
        let mut buf = coeffs.to_vec();
        self.transform(&mut buf, true);
        buf.iter().map(|c| c.re).collect()
    }

    /// Spectral derivative along `axis`; the Nyquist mode is dropped.
    pub fn derivative(&self, field: &[f64], axis: usize) -> Vec<f64> {
        let mut coeffs = self.forward(field);
        self.differentiate_coeffs(&mut coeffs, axis);
        self.inverse(&coeffs)
    }

    pub fn differentiate_coeffs(&self, coeffs: &mut [Complex64], axis: usize) {
        assert!(axis < self.grid.dim(), "axis {axis} outside a {}-d grid", self.grid.dim());
        for (idx, c) in coeffs.iter_mut().enumerate() {
            let m = self.grid.unindex(idx)[axis];
            if self.is_nyquist(m) {
                *c = Complex64::new(0.0, 0.0);
            } else {
                *c *= Complex64::new(0.0, self.wavenumbers[m]);
            }
        }
    }

    /// Squared Sobolev norm `|Ω| Σ_k (1+|k|²)^s |c_k|²`.
    pub fn hs_norm_sq(&self, field: &[f64], s: u32) -> f64 {
        let coeffs = self.forward(field);
        let volume = self.grid.volume();
        coeffs
            .iter()
            .enumerate()
            .map(|(idx, c)| {
                let k = self.wavevector(idx);
                let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
                (1.0 + k2).powi(s as i32) * c.norm_sqr()
            })
            .sum::<f64>()
            * volume
    }
}

fn signed_mode(m: usize, n: usize) -> i64 {
    if m <= n / 2 {
        m as i64
    } else {
        m as i64 - n as i64
    }
}
