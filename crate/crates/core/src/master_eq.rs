//! Strang-split spectral integration of the Joos-Zeh master equation
//!
//! ```text
//! d rho / dt = i (2 hbar / m) d^2 rho / dy dz - (Lambda / hbar) y^2 rho
//! ```
//!
//! on a periodic `(y, z)` grid. The decoherence factor is diagonal in real
//! space and the mixed derivative is diagonal in Fourier space, where
//! `dy dz -> -k_y k_z`.

use num_complex::Complex64;

use crate::analytic::{self, GaussianParams};
use crate::error::{Error, Result};
use crate::field::{ComplexField2D, TimeSeries};
use crate::observables::{self, ObservableSample, ALIASING_RATIO};
use crate::scenario::{GridSpec2D, NumericsSpec, Scenario};
use crate::spectral::Spectral2D;

/// Sample the Gaussian density matrix of `p`, normalized to unit trace.
pub fn init_gaussian_rho(p: &GaussianParams, grid: &GridSpec2D) -> Result<ComplexField2D> {
    grid.validate()?;
    let exact = analytic::density_matrix_exact(p, grid);
    if exact.undersized {
        let (required_y, required_z) = analytic::required_extents(p);
        return Err(Error::UndersizedGrid {
            required_y,
            required_z,
            extent_y: grid.y_axis.extent,
            extent_z: grid.z_axis.extent,
        });
    }
    let mut f = exact.field;
    let tr = f.trace().re;
    f.values.iter_mut().for_each(|v| *v /= tr);
    Ok(f)
}

/// Precomputed multipliers for a fixed grid, scenario and step.
pub struct JzmePropagator {
    grid: GridSpec2D,
    dt: f64,
    spectral: Spectral2D,
    /// `exp(-i (2 hbar/m) k_y k_z dt)` in the `[k_z][k_y]` spectral layout.
    kinetic: Option<Vec<Complex64>>,
    /// `exp(-(Lambda/hbar) y^2 dt / 2)` per row.
    half_decay: Vec<f64>,
    spectrum: Vec<Complex64>,
}

impl JzmePropagator {
    pub fn new(grid: &GridSpec2D, s: &Scenario, dt: f64) -> Result<Self> {
        grid.validate()?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidField { field: "dt", reason: format!("must be > 0, got {dt}") });
        }
        let ky = grid.y_axis.wavenumbers();
        let kz = grid.z_axis.wavenumbers();
        let c = 2.0 * s.hbar / s.m * dt;
        let nyquist_z = kz.len() / 2;
        let mut kinetic = Vec::with_capacity(ky.len() * kz.len());
        for (jz, &kz) in kz.iter().enumerate() {
            for &ky in &ky {
                let phase = -c * ky * kz;
                // The Nyquist bin is its own mirror under kz -> -kz, so only
                // the real part keeps rho(-y, z) = conj(rho(y, z)).
                kinetic.push(if jz == nyquist_z {
                    Complex64::new(phase.cos(), 0.0)
                } else {
                    Complex64::from_polar(1.0, phase)
                });
            }
        }
        let rate = s.lambda / s.hbar * dt / 2.0;
        let half_decay = grid.y_axis.coords().iter().map(|y| (-rate * y * y).exp()).collect();
        Ok(Self {
            grid: *grid,
            dt,
            spectral: Spectral2D::new(grid),
            kinetic: Some(kinetic),
            half_decay,
            spectrum: vec![Complex64::new(0.0, 0.0); ky.len() * kz.len()],
        })
    }

    /// Drop the kinetic factor, leaving pure decoherence.
    pub fn without_kinetic(mut self) -> Self {
        self.kinetic = None;
        self
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn decay(&self, f: &mut ComplexField2D) {
        let nz = f.n_z();
        for (row, &d) in f.values.chunks_mut(nz).zip(&self.half_decay) {
            row.iter_mut().for_each(|v| *v *= d);
        }
    }

    /// One Strang step in place; the time stamp advances by `dt`.
    pub fn step(&mut self, f: &mut ComplexField2D) -> Result<()> {
        if f.grid != self.grid {
            return Err(Error::InvalidField { field: "grid", reason: "field grid differs from propagator grid".into() });
        }
        self.decay(f);
        if let Some(kinetic) = &self.kinetic {
            self.spectral.forward(&mut f.values, &mut self.spectrum);
            self.spectrum.iter_mut().zip(kinetic).for_each(|(v, m)| *v *= m);
            self.spectral.inverse(&mut self.spectrum, &mut f.values);
        }
        self.decay(f);
        f.t += self.dt;
        if !f.is_finite() {
            return Err(Error::NonFinite { t: f.t });
        }
        Ok(())
    }

    /// Largest spectral amplitude on the outermost `k_y` or `k_z` bins relative
    /// to the spectral peak.
    pub fn spectral_edge_ratio(&mut self, f: &ComplexField2D) -> f64 {
        let mut work = f.values.clone();
        self.spectral.forward(&mut work, &mut self.spectrum);
        let (ny, nz) = (f.n_y(), f.n_z());
        let peak = self.spectrum.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let mut edge: f64 = 0.0;
        for jz in 0..nz {
            edge = edge.max(self.spectrum[jz * ny + ny / 2].norm());
        }
        for jy in 0..ny {
            edge = edge.max(self.spectrum[(nz / 2) * ny + jy].norm());
        }
        edge / peak
    }
}

/// One Strang step of the master equation.
pub fn step_jzme(f: &ComplexField2D, s: &Scenario, dt: f64) -> Result<ComplexField2D> {
    let mut out = f.clone();
    JzmePropagator::new(&f.grid, s, dt)?.step(&mut out)?;
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct JzmeRun {
    pub series: TimeSeries<ObservableSample>,
    pub field: ComplexField2D,
    /// Mass reached the box boundary or the spectral edge at some sample.
    pub aliasing: bool,
}

/// Step `f` from its own time stamp to `numerics.t_end`, sampling observables
/// whenever the global step index is a multiple of `sample_every` and at the
/// final step. `observer` sees the field at every sample.
pub fn evolve_jzme(
    mut f: ComplexField2D,
    s: &Scenario,
    numerics: &NumericsSpec,
    mut observer: impl FnMut(&ComplexField2D) -> Result<()>,
) -> Result<JzmeRun> {
    numerics.validate()?;
    let dt = numerics.dt;
    let k_start = (f.t / dt).round() as usize;
    let k_end = numerics.n_steps();
    let mut prop = JzmePropagator::new(&f.grid, s, dt)?;
    let mut series = TimeSeries::default();
    let mut aliasing = false;

    let mut record = |f: &ComplexField2D, prop: &mut JzmePropagator| -> Result<()> {
        let mut sample = observables::sample_rho(f, numerics.fit_window)?;
        sample.flags.aliasing |= prop.spectral_edge_ratio(f) > ALIASING_RATIO;
        aliasing |= sample.flags.aliasing;
        series.push(f.t, sample);
        observer(f)
    };

    record(&f, &mut prop)?;
    for k in k_start..k_end {
        prop.step(&mut f)?;
        f.t = (k + 1) as f64 * dt;
        if (k + 1) % numerics.sample_every == 0 || k + 1 == k_end {
            record(&f, &mut prop)?;
        }
    }
    Ok(JzmeRun { series, field: f, aliasing })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::GridSpec1D;

    fn grid(n: usize, ey: f64, ez: f64) -> GridSpec2D {
        GridSpec2D { y_axis: GridSpec1D::new(n, ey).unwrap(), z_axis: GridSpec1D::new(n, ez).unwrap() }
    }

    fn initial(s: &Scenario, g: &GridSpec2D) -> ComplexField2D {
        let (a0, b0) = s.initial_alpha_beta();
        init_gaussian_rho(&GaussianParams::new(a0, b0, 0.0, 0.0), g).unwrap()
    }

    #[test]
    fn initial_state_is_normalized_and_pure() {
        let g = grid(128, 14.0, 16.0);
        let f = initial(&Scenario::moderate(), &g);
        assert!((f.trace().re - 1.0).abs() < 1e-10);
        assert!((observables::purity(&f) - 1.0).abs() < 1e-8);

        let mixed = init_gaussian_rho(&GaussianParams::new(0.25, 0.0, 1.0, 0.0), &g).unwrap();
        assert!((observables::purity(&mixed) - (0.25f64 / 1.25).sqrt()).abs() < 1e-8);
    }

    #[test]
    fn undersized_grid_lists_required_extents() {
        let err = init_gaussian_rho(&GaussianParams::new(0.25, 0.0, 0.0, 0.0), &grid(64, 5.0, 20.0)).unwrap_err();
        match err {
            Error::UndersizedGrid { required_y, required_z, .. } => {
                assert!((required_y - 12.0).abs() < 1e-12);
                assert!((required_z - 12.0).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn constant_field_is_unchanged_without_decoherence() {
        let g = grid(16, 2.0, 3.0);
        let f = ComplexField2D::from_fn(g, 0.0, |_, _| Complex64::new(0.7, -0.2));
        let s = Scenario { lambda: 0.0, ..Scenario::default() };
        let out = step_jzme(&f, &s, 0.1).unwrap();
        for (a, b) in out.values.iter().zip(&f.values) {
            assert!((a - b).norm() < 1e-14);
        }
        assert!((out.t - 0.1).abs() < 1e-15);
    }

    #[test]
    fn decoherence_factor_alone() {
        let g = grid(32, 4.0, 4.0);
        let s = Scenario::moderate();
        let dt = 0.01;
        let mut f = ComplexField2D::from_fn(g, 0.0, |_, z| Complex64::new(1.0 + 0.1 * z, 0.3));
        let orig = f.clone();
        JzmePropagator::new(&g, &s, dt).unwrap().without_kinetic().step(&mut f).unwrap();
        for iy in 0..f.n_y() {
            let y = g.y_axis.coord(iy);
            for iz in 0..f.n_z() {
                let expect = orig.at(iy, iz) * (-s.lambda / s.hbar * y * y * dt).exp();
                assert!((f.at(iy, iz) - expect).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn step_preserves_trace_and_hermiticity() {
        let g = grid(64, 14.0, 18.0);
        let s = Scenario::strong();
        let mut f = init_gaussian_rho(&GaussianParams::new(0.25, 0.3, 0.5, 0.0), &g).unwrap();
        let mut prop = JzmePropagator::new(&g, &s, 1e-2).unwrap();
        for _ in 0..20 {
            prop.step(&mut f).unwrap();
            assert!(f.hermiticity_error() < 1e-10);
            assert!((f.trace() - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn free_spreading_matches_closed_form() {
        let s = Scenario { lambda: 0.0, ..Scenario::default() };
        let g = grid(128, 14.0, 16.0);
        let numerics = NumericsSpec { dt: 1e-3, t_end: 1.0, sample_every: 500, ..NumericsSpec::default() };
        let run = evolve_jzme(initial(&s, &g), &s, &numerics, |_| Ok(())).unwrap();
        let (t, last) = run.series.last().unwrap();
        assert!((t - 1.0).abs() < 1e-12);
        let alpha = 1.0 / (4.0 * last.ensemble_width.powi(2));
        assert!((alpha * 5.0 - 1.0).abs() < 1e-4, "alpha = {alpha}");
        assert!(!run.aliasing);
    }

    #[test]
    fn purity_decreases_and_matches_closed_form() {
        let s = Scenario::moderate();
        let g = grid(128, 14.0, 20.0);
        let numerics = NumericsSpec { dt: 1e-3, t_end: 0.5, sample_every: 50, ..NumericsSpec::default() };
        let run = evolve_jzme(initial(&s, &g), &s, &numerics, |_| Ok(())).unwrap();
        let cubic = analytic::scenario_cubic(&s);
        let purities: Vec<f64> = run.series.values.iter().map(|o| o.purity).collect();
        assert!(purities.windows(2).all(|w| w[1] < w[0]));
        for (t, o) in run.series.iter() {
            let p = analytic::params_exact(&cubic, &s, t).unwrap();
            assert!((o.purity / p.purity() - 1.0).abs() < 1e-5);
            assert!((o.coherence_length / p.coherence_length() - 1.0).abs() < 1e-5);
            assert!((o.trace_or_norm - 1.0).abs() < 1e-10);
        }
        assert_eq!(run.series.len(), 11);
    }

    #[test]
    fn evolution_resumes_from_field_time() {
        let s = Scenario::moderate();
        let g = grid(64, 14.0, 16.0);
        let full = NumericsSpec { dt: 1e-2, t_end: 0.4, sample_every: 10, ..NumericsSpec::default() };
        let direct = evolve_jzme(initial(&s, &g), &s, &full, |_| Ok(())).unwrap();
        let half = NumericsSpec { t_end: 0.2, ..full.clone() };
        let first = evolve_jzme(initial(&s, &g), &s, &half, |_| Ok(())).unwrap();
        let resumed = evolve_jzme(first.field, &s, &full, |_| Ok(())).unwrap();
        assert_eq!(resumed.field.values, direct.field.values);
        assert_eq!(resumed.series.times, vec![0.2, 0.3, 0.4]);
    }
}
