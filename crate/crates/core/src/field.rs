//! Gridded complex fields and time series.

use num_complex::Complex64;

use crate::scenario::{GridSpec1D, GridSpec2D};

/// Marginal wavefunction `a(tau)` sampled on a periodic grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexField1D {
    pub values: Vec<Complex64>,
    pub grid: GridSpec1D,
    pub t: f64,
}

impl ComplexField1D {
    pub fn from_fn(grid: GridSpec1D, t: f64, f: impl Fn(f64) -> Complex64) -> Self {
        let values = grid.coords().into_iter().map(f).collect();
        Self { values, grid, t }
    }

    /// `int |a|^2 dtau` by the periodic trapezoid rule.
    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.spacing()
    }

    pub fn normalize(&mut self) {
        let s = self.norm_sqr().sqrt();
        self.values.iter_mut().for_each(|v| *v /= s);
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }
}

/// Density matrix `rho(y, z)` on the rotated grid, row-major over `(y, z)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexField2D {
    pub values: Vec<Complex64>,
    pub grid: GridSpec2D,
    pub t: f64,
}

impl ComplexField2D {
    pub fn from_fn(grid: GridSpec2D, t: f64, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let ys = grid.y_axis.coords();
        let zs = grid.z_axis.coords();
        let mut values = Vec::with_capacity(ys.len() * zs.len());
        for &y in &ys {
            values.extend(zs.iter().map(|&z| f(y, z)));
        }
        Self { values, grid, t }
    }

    pub fn n_y(&self) -> usize {
        self.grid.y_axis.n_points
    }

    pub fn n_z(&self) -> usize {
        self.grid.z_axis.n_points
    }

    #[inline]
    pub fn at(&self, iy: usize, iz: usize) -> Complex64 {
        self.values[iy * self.n_z() + iz]
    }

    pub fn row(&self, iy: usize) -> &[Complex64] {
        let n = self.n_z();
        &self.values[iy * n..(iy + 1) * n]
    }

    /// Index of the `y = -y_i` row mirroring `iy`, if it is on the grid.
    pub fn mirror_row(&self, iy: usize) -> Option<usize> {
        let n = self.n_y();
        (iy > 0).then(|| n - iy)
    }

    /// `int rho(tau, tau) dtau = (1/2) int rho(0, z) dz`.
    pub fn trace(&self) -> Complex64 {
        let c = self.grid.y_axis.center();
        self.row(c).iter().sum::<Complex64>() * self.grid.z_axis.spacing() * 0.5
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// Largest violation of `rho(-y, z) = conj(rho(y, z))` relative to `max|rho|`.
    pub fn hermiticity_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for iy in 1..self.n_y() {
            let my = self.mirror_row(iy).unwrap();
            for (a, b) in self.row(iy).iter().zip(self.row(my)) {
                worst = worst.max((a - b.conj()).norm());
            }
        }
        worst / self.max_abs()
    }

    /// Largest `|rho|` on the outermost rows and columns relative to `max|rho|`.
    pub fn boundary_ratio(&self) -> f64 {
        let (ny, nz) = (self.n_y(), self.n_z());
        let mut edge: f64 = 0.0;
        for iz in 0..nz {
            edge = edge.max(self.at(0, iz).norm()).max(self.at(ny - 1, iz).norm());
        }
        for iy in 0..ny {
            edge = edge.max(self.at(iy, 0).norm()).max(self.at(iy, nz - 1).norm());
        }
        edge / self.max_abs()
    }
}

/// Values sampled at increasing times.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries<T> {
    pub times: Vec<f64>,
    pub values: Vec<T>,
}

impl<T> Default for TimeSeries<T> {
    fn default() -> Self {
        Self { times: Vec::new(), values: Vec::new() }
    }
}

impl<T> TimeSeries<T> {
    pub fn push(&mut self, t: f64, v: T) {
        self.times.push(t);
        self.values.push(v);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &T)> {
        self.times.iter().copied().zip(self.values.iter())
    }

    pub fn last(&self) -> Option<(f64, &T)> {
        self.times.last().copied().zip(self.values.last())
    }
}
