//! Split-step solver for the marginal wavefunction in the linear-gamma
//! approximation, a logarithmic Schrödinger equation with growing coupling:
//!
//! ```text
//! i da/dt = -(hbar / 2m) d^2 a / dtau^2 + kappa(t) ln|a|^2 a,   kappa = 2 Lambda (t - t0) / m
//! ```
//!
//! The potential `eps = hbar kappa ln|a|^2` depends only on `|a|`, which a
//! phase multiplier leaves fixed, so each potential half step is exact.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{ComplexField1D, TimeSeries};
use crate::observables::{self, argmax_abs, quadratic_coefficient, Flags, ObservableSample};
use crate::scenario::{GridSpec1D, NumericsSpec, Scenario};
use crate::spectral::Spectral1D;

/// `kappa(t) = offset + slope (t - t0)`, in units of inverse time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LseCoupling {
    pub offset: f64,
    pub slope: f64,
    pub t0: f64,
}

impl LseCoupling {
    /// The decoherence coupling `(hbar/m) gamma_l` with `gamma_l = 2 Lambda (t - t0) / hbar`.
    pub fn from_scenario(s: &Scenario) -> Self {
        Self { offset: 0.0, slope: 2.0 * s.lambda / s.m, t0: s.t0 }
    }

    pub fn constant(kappa: f64) -> Self {
        Self { offset: kappa, slope: 0.0, t0: 0.0 }
    }

    pub fn at(&self, t: f64) -> f64 {
        self.offset + self.slope * (t - self.t0)
    }

    /// `int_t1^t2 kappa`; exact because `kappa` is linear.
    pub fn integral(&self, t1: f64, t2: f64) -> f64 {
        self.at(0.5 * (t1 + t2)) * (t2 - t1)
    }
}

/// `ln max(|a|^2, floor^2)` with `floor = ln_floor * max|a|`, and whether the
/// floor was active anywhere.
fn log_density(values: &[Complex64], ln_floor: f64) -> (Vec<f64>, bool) {
    let peak = values.iter().map(|v| v.norm_sqr()).fold(0.0, f64::max);
    let floor = ln_floor * ln_floor * peak;
    let mut hit = false;
    let logs = values
        .iter()
        .map(|v| {
            let d = v.norm_sqr();
            if d < floor {
                hit = true;
                floor.ln()
            } else {
                d.ln()
            }
        })
        .collect();
    (logs, hit)
}

/// `eps(tau) = (2 hbar Lambda / m) (t - t0) ln|a|^2` at the field's time stamp.
pub fn epsilon_of(a: &ComplexField1D, s: &Scenario, ln_floor: f64) -> Vec<f64> {
    let kappa = LseCoupling::from_scenario(s).at(a.t);
    let (logs, _) = log_density(&a.values, ln_floor);
    logs.into_iter().map(|l| s.hbar * kappa * l).collect()
}

/// Normalized Gaussian `exp(-(alpha + i beta) tau^2)` on `grid`.
pub fn init_gaussian_a(alpha: f64, beta: f64, grid: &GridSpec1D) -> Result<ComplexField1D> {
    grid.validate("tau grid")?;
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidField { field: "alpha", reason: format!("must be > 0, got {alpha}") });
    }
    // Six standard deviations of |a|^2, matching the z-axis rule with z = 2 tau.
    let required = 3.0 / alpha.sqrt();
    if grid.extent < required {
        return Err(Error::InvalidField {
            field: "tau grid",
            reason: format!("extent {} below required {required:.4}", grid.extent),
        });
    }
    let mut a = ComplexField1D::from_fn(*grid, 0.0, |tau| Complex64::new(-alpha * tau * tau, -beta * tau * tau).exp());
    a.normalize();
    Ok(a)
}

pub struct LsePropagator {
    grid: GridSpec1D,
    dt: f64,
    coupling: LseCoupling,
    ln_floor: f64,
    spectral: Spectral1D,
    kinetic: Vec<Complex64>,
}

impl LsePropagator {
    pub fn new(grid: &GridSpec1D, s: &Scenario, coupling: LseCoupling, dt: f64, ln_floor: f64) -> Result<Self> {
        grid.validate("tau grid")?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidField { field: "dt", reason: format!("must be > 0, got {dt}") });
        }
        let c = s.hbar * dt / (2.0 * s.m);
        let kinetic = grid.wavenumbers().iter().map(|k| Complex64::from_polar(1.0, -c * k * k)).collect();
        Ok(Self { grid: *grid, dt, coupling, ln_floor, spectral: Spectral1D::new(grid), kinetic })
    }

    fn potential(&self, a: &mut ComplexField1D, t1: f64, t2: f64) -> bool {
        let phi = self.coupling.integral(t1, t2);
        let (logs, hit) = log_density(&a.values, self.ln_floor);
        for (v, l) in a.values.iter_mut().zip(logs) {
            *v *= Complex64::from_polar(1.0, -phi * l);
        }
        hit
    }

    /// One Strang step in place. Returns whether the log floor was active.
    pub fn step(&mut self, a: &mut ComplexField1D) -> Result<bool> {
        if a.grid != self.grid {
            return Err(Error::InvalidField { field: "grid", reason: "field grid differs from propagator grid".into() });
        }
        let t = a.t;
        let half = t + 0.5 * self.dt;
        let mut hit = self.potential(a, t, half);
        self.spectral.forward(&mut a.values);
        a.values.iter_mut().zip(&self.kinetic).for_each(|(v, m)| *v *= m);
        self.spectral.inverse(&mut a.values);
        hit |= self.potential(a, half, t + self.dt);
        a.t = t + self.dt;
        if !a.is_finite() {
            return Err(Error::NonFinite { t: a.t });
        }
        Ok(hit)
    }
}

/// One Strang step with the scenario's decoherence coupling.
pub fn step_lse(a: &ComplexField1D, s: &Scenario, dt: f64, ln_floor: f64) -> Result<ComplexField1D> {
    let mut out = a.clone();
    LsePropagator::new(&a.grid, s, LseCoupling::from_scenario(s), dt, ln_floor)?.step(&mut out)?;
    Ok(out)
}

/// Observables of `rho = a(tau) conj(a(tau')) K` with `K = exp(-gamma y^2 / 2)`.
pub fn sample_a(a: &ComplexField1D, gamma: f64, fit_window: usize) -> Result<ObservableSample> {
    let n = a.values.len();
    if fit_window < 3 || fit_window % 2 == 0 || fit_window > n {
        return Err(Error::InvalidField {
            field: "fit_window",
            reason: format!("need odd window in 3..={n}, got {fit_window}"),
        });
    }
    // Curvature of -ln|rho(y, 2 tau_peak)| in y is -(ln|a|^2)''/4 + gamma.
    let peak = argmax_abs(&a.values);
    let half = fit_window / 2;
    let pts: Vec<(f64, f64)> = (0..fit_window)
        .map(|j| {
            let i = (peak + n + j - half) % n;
            let x = (j as f64 - half as f64) * a.grid.spacing();
            (x, a.values[i].norm_sqr().ln())
        })
        .collect();
    let curvature = -0.5 * quadratic_coefficient(&pts) + gamma;
    if !(curvature > 0.0) {
        return Err(Error::NotLocalized { curvature });
    }

    // tr(rho^2) = int int |a(tau)|^2 |a(tau')|^2 K^2 dtau dtau'.
    let h = a.grid.spacing();
    let dens: Vec<f64> = a.values.iter().map(|v| v.norm_sqr()).collect();
    let kernel: Vec<f64> = (0..n).map(|d| (-gamma * (d as f64 * h).powi(2)).exp()).collect();
    let mut pur = 0.0;
    for (i, pi) in dens.iter().enumerate() {
        let mut row = 0.0;
        for (j, pj) in dens.iter().enumerate() {
            row += pj * kernel[i.abs_diff(j)];
        }
        pur += pi * row;
    }

    Ok(ObservableSample {
        t: a.t,
        coherence_length: 1.0 / curvature.sqrt(),
        ensemble_width: observables::ensemble_width_from_a(a),
        trace_or_norm: a.norm_sqr(),
        purity: pur * h * h,
        flags: Flags::default(),
    })
}

#[derive(Clone, Debug)]
pub struct LseRun {
    pub series: TimeSeries<ObservableSample>,
    pub field: ComplexField1D,
}

/// Step `a` from its time stamp to `numerics.t_end` under `coupling`, sampling
/// as [`crate::master_eq::evolve_jzme`] does. Samples report coherence length
/// and purity of `a conj(a') K` with `gamma = (m/hbar) kappa`.
pub fn evolve_lse(
    mut a: ComplexField1D,
    s: &Scenario,
    coupling: LseCoupling,
    numerics: &NumericsSpec,
    mut observer: impl FnMut(&ComplexField1D) -> Result<()>,
) -> Result<LseRun> {
    numerics.validate()?;
    let dt = numerics.dt;
    let k_start = (a.t / dt).round() as usize;
    let k_end = numerics.n_steps();
    let mut prop = LsePropagator::new(&a.grid, s, coupling, dt, numerics.ln_floor)?;
    let mut series = TimeSeries::default();
    let mut floor_hit = false;

    let mut record = |a: &ComplexField1D, floor: bool| -> Result<()> {
        let gamma = (s.m / s.hbar * coupling.at(a.t)).max(0.0);
        let mut sample = sample_a(a, gamma, numerics.fit_window)?;
        sample.flags.floor = floor;
        sample.flags.aliasing = edge_ratio(a) > observables::ALIASING_RATIO;
        series.push(a.t, sample);
        observer(a)
    };

    record(&a, false)?;
    for k in k_start..k_end {
        floor_hit |= prop.step(&mut a)?;
        a.t = (k + 1) as f64 * dt;
        if (k + 1) % numerics.sample_every == 0 || k + 1 == k_end {
            record(&a, floor_hit)?;
            floor_hit = false;
        }
    }
    Ok(LseRun { series, field: a })
}

fn edge_ratio(a: &ComplexField1D) -> f64 {
    let n = a.values.len();
    a.values[0].norm().max(a.values[n - 1].norm()) / a.max_abs()
}

/// Equivalence residual between the sampled LSE fields and the marginal master
/// equation with `gamma_l = 2 Lambda (t - t0) / hbar`, each scaled by `max|a|^2`.
///
/// The two equations agree on the diagonal `y = 0` and to first order in `y`;
/// `diagonal` and `first_order` measure those, `full` is the whole-grid
/// mismatch, which carries a genuine `O(y^2)` term.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MarginalResidual {
    pub t: f64,
    pub diagonal: f64,
    pub first_order: f64,
    pub full: f64,
}

impl MarginalResidual {
    /// The `y -> 0` residual.
    pub fn value(&self) -> f64 {
        self.diagonal.max(self.first_order)
    }
}

/// Residual at the central sample, with time derivatives by centered
/// differences of its two neighbours.
pub fn marginalme_residual(samples: &TimeSeries<ComplexField1D>, s: &Scenario) -> Result<MarginalResidual> {
    if samples.len() < 3 {
        return Err(Error::InsufficientSamples { needed: 3, got: samples.len() });
    }
    let c = samples.len() / 2;
    let (t_lo, t_mid, t_hi) = (samples.times[c - 1], samples.times[c], samples.times[c + 1]);
    let h = 0.5 * (t_hi - t_lo);
    if !(h > 0.0) || ((t_mid - t_lo) - (t_hi - t_mid)).abs() > 1e-9 * h {
        return Err(Error::InvalidField { field: "samples", reason: "need three equally spaced sample times".into() });
    }
    let (lo, mid, hi) = (&samples.values[c - 1], &samples.values[c], &samples.values[c + 1]);
    let mut sp = Spectral1D::new(&mid.grid);
    let d: Vec<Vec<Complex64>> = (0..=3).map(|k| sp.derivative(&mid.values, k)).collect();
    let d_lo = sp.derivative(&lo.values, 1);
    let d_hi = sp.derivative(&hi.values, 1);
    let gamma = 2.0 * s.lambda / s.hbar * (t_mid - s.t0);
    let i = Complex64::i();
    let kin = i * s.hbar / (2.0 * s.m);
    let drift = i * s.hbar / s.m * gamma;
    let scale = mid.values.iter().map(|v| v.norm_sqr()).fold(0.0, f64::max);

    // d rho_m / dy at y = 0 is (a' conj(a) - a conj(a')) / 2.
    let slope = |a: Complex64, da: Complex64| 0.5 * (da * a.conj() - a * da.conj());

    let (mut diag, mut first) = (0.0f64, 0.0f64);
    for j in 0..mid.values.len() {
        let (a0, a1, a2, a3) = (d[0][j], d[1][j], d[2][j], d[3][j]);
        let dt_diag = (hi.values[j].norm_sqr() - lo.values[j].norm_sqr()) / (2.0 * h);
        let r0 = dt_diag - kin * (a2 * a0.conj() - a0 * a2.conj());
        let dt_slope = (slope(hi.values[j], d_hi[j]) - slope(lo.values[j], d_lo[j])) / (2.0 * h);
        let rhs_slope = kin * 0.5 * (a3 * a0.conj() + a0 * a3.conj() - a2 * a1.conj() - a1 * a2.conj())
            - drift * (a1 * a0.conj() + a0 * a1.conj());
        diag = diag.max(r0.norm());
        first = first.max((dt_slope - rhs_slope).norm());
    }

    // Whole grid: rho_m = a(tau) conj(a(tau')), y = tau - tau'.
    let taus = mid.grid.coords();
    let n = taus.len();
    let mut full = 0.0f64;
    for p in 0..n {
        for q in 0..n {
            let dt_rho = (hi.values[p] * hi.values[q].conj() - lo.values[p] * lo.values[q].conj()) / (2.0 * h);
            let y = taus[p] - taus[q];
            let rhs = kin * (d[2][p] * d[0][q].conj() - d[0][p] * d[2][q].conj())
                - drift * y * (d[1][p] * d[0][q].conj() + d[0][p] * d[1][q].conj());
            full = full.max((dt_rho - rhs).norm());
        }
    }

    Ok(MarginalResidual { t: t_mid, diagonal: diag / scale, first_order: first / scale, full: full / scale })
}
