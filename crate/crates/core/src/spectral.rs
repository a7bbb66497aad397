//! FFT plumbing on periodic grids: 1-D transforms with spectral derivatives and
//! a row/transpose/row 2-D transform for density matrices.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::scenario::{GridSpec1D, GridSpec2D};

pub struct Spectral1D {
    n: usize,
    k: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
}

impl Spectral1D {
    pub fn new(grid: &GridSpec1D) -> Self {
        let n = grid.n_points;
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Self {
            n,
            k: grid.wavenumbers(),
            forward,
            inverse,
            scratch: vec![Complex64::new(0.0, 0.0); len],
        }
    }

    pub fn wavenumbers(&self) -> &[f64] {
        &self.k
    }

    pub fn forward(&mut self, buf: &mut [Complex64]) {
        self.forward.process_with_scratch(buf, &mut self.scratch);
    }

    /// Inverse transform including the `1/N` normalization.
    pub fn inverse(&mut self, buf: &mut [Complex64]) {
        self.inverse.process_with_scratch(buf, &mut self.scratch);
        let scale = 1.0 / self.n as f64;
        buf.iter_mut().for_each(|v| *v *= scale);
    }

    /// `d^order/dx^order` of a periodic sample vector. The Nyquist mode is
    /// dropped for odd orders so real inputs give real derivatives.
    pub fn derivative(&mut self, values: &[Complex64], order: u32) -> Vec<Complex64> {
        let mut buf = values.to_vec();
        if order == 0 {
            return buf;
        }
        self.forward(&mut buf);
        let nyquist = self.n / 2;
        for (j, (v, &k)) in buf.iter_mut().zip(&self.k).enumerate() {
            if order % 2 == 1 && j == nyquist {
                *v = Complex64::new(0.0, 0.0);
            } else {
                *v *= Complex64::new(0.0, k).powu(order);
            }
        }
        self.inverse(&mut buf);
        buf
    }

    pub fn derivative_real(&mut self, values: &[f64], order: u32) -> Vec<f64> {
        let c: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.derivative(&c, order).into_iter().map(|v| v.re).collect()
    }
}

/// 2-D transform of a row-major `[y][z]` array. The spectral array is laid
/// out transposed, `[k_z][k_y]`, which saves a transpose per round trip.
pub struct Spectral2D {
    n_y: usize,
    n_z: usize,
    fft_y: (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>),
    fft_z: (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>),
    scratch: Vec<Complex64>,
}

impl Spectral2D {
    pub fn new(grid: &GridSpec2D) -> Self {
        let n_y = grid.y_axis.n_points;
        let n_z = grid.z_axis.n_points;
        let mut planner = FftPlanner::new();
        let fft_y = (planner.plan_fft_forward(n_y), planner.plan_fft_inverse(n_y));
        let fft_z = (planner.plan_fft_forward(n_z), planner.plan_fft_inverse(n_z));
        let len = [&fft_y.0, &fft_y.1, &fft_z.0, &fft_z.1]
            .iter()
            .map(|f| f.get_inplace_scratch_len())
            .max()
            .unwrap_or(0);
        Self {
            n_y,
            n_z,
            fft_y,
            fft_z,
            scratch: vec![Complex64::new(0.0, 0.0); len],
        }
    }

    /// Real space `[y][z]` in `field` to spectral `[k_z][k_y]` in `spectrum`.
    /// `field` is used as a work buffer.
    pub fn forward(&mut self, field: &mut [Complex64], spectrum: &mut [Complex64]) {
        self.fft_z.0.process_with_scratch(field, &mut self.scratch);
        transpose::transpose(field, spectrum, self.n_z, self.n_y);
        self.fft_y.0.process_with_scratch(spectrum, &mut self.scratch);
    }

    /// Inverse of [`Spectral2D::forward`], normalized. `spectrum` is consumed
    /// as a work buffer.
    pub fn inverse(&mut self, spectrum: &mut [Complex64], field: &mut [Complex64]) {
        self.fft_y.1.process_with_scratch(spectrum, &mut self.scratch);
        transpose::transpose(spectrum, field, self.n_y, self.n_z);
        self.fft_z.1.process_with_scratch(field, &mut self.scratch);
        let scale = 1.0 / (self.n_y * self.n_z) as f64;
        field.iter_mut().for_each(|v| *v *= scale);
    }
}
