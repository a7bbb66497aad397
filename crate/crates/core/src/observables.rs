//! Measurements shared by every solver route: coherence length, ensemble
//! width, trace, purity, and residuals of the log-density hierarchy.

use std::fmt;

use num_complex::Complex64;

use crate::analytic::GaussianParams;
use crate::error::{Error, Result};
use crate::field::{ComplexField1D, ComplexField2D};
use crate::scenario::{GridSpec1D, Scenario};
use crate::spectral::Spectral1D;

/// Warning conditions attached to a sample.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Flags {
    /// Field mass reached the periodic box boundary.
    pub aliasing: bool,
    /// The logarithm floor was active at some grid point.
    pub floor: bool,
    /// Grid smaller than the six-sigma rule.
    pub undersized: bool,
}

impl Flags {
    pub fn any(&self) -> bool {
        self.aliasing || self.floor || self.undersized
    }

    pub fn merge(self, other: Flags) -> Flags {
        Flags {
            aliasing: self.aliasing || other.aliasing,
            floor: self.floor || other.floor,
            undersized: self.undersized || other.undersized,
        }
    }
}

impl fmt::Display for Flags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = [
            (self.aliasing, "aliasing"),
            (self.floor, "floor"),
            (self.undersized, "undersized"),
        ]
        .into_iter()
        .filter_map(|(on, name)| on.then_some(name))
        .collect();
        f.write_str(&names.join(";"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObservableSample {
    pub t: f64,
    pub coherence_length: f64,
    pub ensemble_width: f64,
    pub trace_or_norm: f64,
    pub purity: f64,
    pub flags: Flags,
}

/// Curvature of `-ln|rho(y, z_peak)|` at `y = 0`, fitted over the central
/// `fit_window` rows, returned as the length `1/sqrt(curvature)`.
pub fn coherence_from_rho(f: &ComplexField2D, fit_window: usize) -> Result<f64> {
    let ny = f.n_y();
    if fit_window < 3 || fit_window % 2 == 0 || fit_window > ny {
        return Err(Error::InvalidField {
            field: "fit_window",
            reason: format!("need odd window in 3..={ny}, got {fit_window}"),
        });
    }
    let c = f.grid.y_axis.center();
    let iz = argmax_abs(f.row(c));
    let half = fit_window / 2;
    let mut pts = Vec::with_capacity(fit_window);
    for iy in c - half..=c + half {
        let v = f.at(iy, iz).norm();
        if v <= 0.0 {
            return Err(Error::NotLocalized { curvature: f64::NAN });
        }
        pts.push((f.grid.y_axis.coord(iy), -v.ln()));
    }
    let curvature = 2.0 * quadratic_coefficient(&pts);
    if !(curvature > 0.0) {
        return Err(Error::NotLocalized { curvature });
    }
    Ok(1.0 / curvature.sqrt())
}

/// Least-squares `a2` of `v = a0 + a1 x + a2 x^2`.
pub(crate) fn quadratic_coefficient(pts: &[(f64, f64)]) -> f64 {
    // Normal equations in the monomial basis, solved by Cramer's rule.
    let mut s = [0.0f64; 5];
    let mut r = [0.0f64; 3];
    for &(x, v) in pts {
        let mut p = 1.0;
        for (k, sk) in s.iter_mut().enumerate() {
            *sk += p;
            if k < 3 {
                r[k] += p * v;
            }
            p *= x;
        }
    }
    let m = [[s[0], s[1], s[2]], [s[1], s[2], s[3]], [s[2], s[3], s[4]]];
    let det3 = |a: [[f64; 3]; 3]| {
        a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
            - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
            + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
    };
    let mut m2 = m;
    for row in 0..3 {
        m2[row][2] = r[row];
    }
    det3(m2) / det3(m)
}

pub(crate) fn argmax_abs(v: &[Complex64]) -> usize {
    v.iter()
        .enumerate()
        .max_by(|a, b| a.1.norm_sqr().total_cmp(&b.1.norm_sqr()))
        .map(|(i, _)| i)
        .unwrap_or(0)
}

fn weighted_std(xs: &[f64], w: &[f64]) -> f64 {
    let total: f64 = w.iter().sum();
    let mean = xs.iter().zip(w).map(|(x, w)| x * w).sum::<f64>() / total;
    let var = xs.iter().zip(w).map(|(x, w)| (x - mean).powi(2) * w).sum::<f64>() / total;
    var.sqrt()
}

/// Standard deviation of the position density `p(tau) = rho(0, 2 tau)`.
pub fn ensemble_width_from_rho(f: &ComplexField2D) -> f64 {
    let c = f.grid.y_axis.center();
    let w: Vec<f64> = f.row(c).iter().map(|v| v.re).collect();
    weighted_std(&f.grid.z_axis.coords(), &w) / 2.0
}

/// Standard deviation of `|a(tau)|^2`.
pub fn ensemble_width_from_a(a: &ComplexField1D) -> f64 {
    let w: Vec<f64> = a.values.iter().map(|v| v.norm_sqr()).collect();
    weighted_std(&a.grid.coords(), &w)
}

/// `tr(rho^2) = (1/2) int int |rho(y, z)|^2 dy dz`.
pub fn purity(f: &ComplexField2D) -> f64 {
    let cell = f.grid.y_axis.spacing() * f.grid.z_axis.spacing() * 0.5;
    f.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * cell
}

/// Gaussian `(alpha, beta)` of a centred marginal wavefunction from its
/// moments: `alpha = 1/(4 var)` and, because `Im(conj(a) a') = -2 beta tau |a|^2`,
/// `beta = -int tau Im(conj(a) a') / (2 int tau^2 |a|^2)`.
pub fn gaussian_fit_from_a(a: &ComplexField1D, spectral: &mut Spectral1D) -> (f64, f64) {
    let taus = a.grid.coords();
    let da = spectral.derivative(&a.values, 1);
    let w: Vec<f64> = a.values.iter().map(|v| v.norm_sqr()).collect();
    let total: f64 = w.iter().sum();
    let mean = taus.iter().zip(&w).map(|(x, w)| x * w).sum::<f64>() / total;
    let mut second = 0.0;
    let mut current = 0.0;
    for ((&tau, v), d) in taus.iter().zip(&a.values).zip(&da) {
        let x = tau - mean;
        second += x * x * v.norm_sqr();
        current += x * (v.conj() * d).im;
    }
    let var = second / total;
    (1.0 / (4.0 * var), -current / (2.0 * second))
}

/// Observables of a density-matrix sample.
pub fn sample_rho(f: &ComplexField2D, fit_window: usize) -> Result<ObservableSample> {
    Ok(ObservableSample {
        t: f.t,
        coherence_length: coherence_from_rho(f, fit_window)?,
        ensemble_width: ensemble_width_from_rho(f),
        trace_or_norm: f.trace().re,
        purity: purity(f),
        flags: Flags { aliasing: f.boundary_ratio() > ALIASING_RATIO, ..Flags::default() },
    })
}

/// Boundary-to-peak ratio above which a field is flagged as aliased.
pub const ALIASING_RATIO: f64 = 1e-6;

// ---------------------------------------------------------------------------
// Log-density hierarchy.

/// Polynomial in one real variable with complex coefficients, lowest first.
#[derive(Clone, Debug, Default, PartialEq)]
struct Poly(Vec<Complex64>);

impl Poly {
    fn constant(c: Complex64) -> Self {
        Poly(vec![c])
    }

    fn coeff(&self, k: usize) -> Complex64 {
        self.0.get(k).copied().unwrap_or_default()
    }

    fn derivative(&self) -> Self {
        Poly(self.0.iter().enumerate().skip(1).map(|(k, c)| c * k as f64).collect())
    }

    fn conj(&self) -> Self {
        Poly(self.0.iter().map(|c| c.conj()).collect())
    }

    fn scale(&self, s: Complex64) -> Self {
        Poly(self.0.iter().map(|c| c * s).collect())
    }

    fn add(&self, other: &Poly) -> Self {
        let n = self.0.len().max(other.0.len());
        Poly((0..n).map(|k| self.coeff(k) + other.coeff(k)).collect())
    }

    fn sub(&self, other: &Poly) -> Self {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    fn mul(&self, other: &Poly) -> Self {
        if self.0.is_empty() || other.0.is_empty() {
            return Poly::default();
        }
        let mut out = vec![Complex64::default(); self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly(out)
    }

    /// `p(x / 2)`.
    fn halve_argument(&self) -> Self {
        Poly(self.0.iter().enumerate().map(|(k, c)| c * 0.5f64.powi(k as i32)).collect())
    }

    fn eval(&self, x: f64) -> Complex64 {
        self.0.iter().rev().fold(Complex64::default(), |acc, c| acc * x + c)
    }
}

/// `Q_k(z)` for `k = 0..=kmax` from `r(tau) = delta/2 - (alpha + i beta) tau^2`,
/// with `r_k(z) = 2^-k r^(k)(z/2)` and `Q_k = r_k + (-1)^k conj(r_k)`.
fn q_fields(p: &GaussianParams, kmax: usize) -> Vec<Poly> {
    let mut deriv = Poly(vec![
        Complex64::new(0.5 * p.delta, 0.0),
        Complex64::default(),
        Complex64::new(-p.alpha, -p.beta),
    ]);
    let mut out = Vec::with_capacity(kmax + 1);
    for k in 0..=kmax {
        let r_k = deriv.halve_argument().scale(Complex64::new(0.5f64.powi(k as i32), 0.0));
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        out.push(r_k.add(&r_k.conj().scale(Complex64::new(sign, 0.0))));
        deriv = deriv.derivative();
    }
    out
}

/// `gamma_k(z)`: y-derivatives of `ln K = -gamma y^2 / 2` at `y = 0`.
fn gamma_fields(p: &GaussianParams, kmax: usize) -> Vec<Poly> {
    (0..=kmax)
        .map(|k| match k {
            2 => Poly::constant(Complex64::new(-p.gamma, 0.0)),
            _ => Poly::default(),
        })
        .collect()
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Right-hand side of the order-`n` hierarchy equation for one state.
fn hierarchy_rhs(s: &Scenario, p: &GaussianParams, n: usize, with_source: bool) -> Poly {
    let q = q_fields(p, n + 1);
    let g = gamma_fields(p, n + 1);
    let dq: Vec<Poly> = q.iter().map(Poly::derivative).collect();
    let dg: Vec<Poly> = g.iter().map(Poly::derivative).collect();
    let mut bracket = dq[n + 1].add(&dg[n + 1]);
    for k in 0..=n {
        let c = Complex64::new(binomial(n, k), 0.0);
        let term = dg[k]
            .mul(&q[n - k + 1])
            .add(&g[k + 1].mul(&dq[n - k]))
            .add(&dq[n - k].mul(&q[k + 1]))
            .add(&dg[n - k].mul(&g[k + 1]));
        bracket = bracket.add(&term.scale(c));
    }
    let mut rhs = bracket.scale(Complex64::new(0.0, 2.0 * s.hbar / s.m));
    if with_source && n == 2 {
        rhs = rhs.add(&Poly::constant(Complex64::new(-2.0 * s.lambda / s.hbar, 0.0)));
    }
    rhs
}

/// Max-norm over `z_grid` of the order-`n` hierarchy residual
/// `dQ_n/dt + dgamma_n/dt - RHS_n` along the trajectory `params_fn`, with time
/// derivatives by central differences of step `1e-4`.
/// `with_source = false` drops the decoherence source, as a negative control.
pub fn qseries_residual<F>(
    params_fn: F,
    s: &Scenario,
    n: usize,
    t: f64,
    z_grid: &GridSpec1D,
    with_source: bool,
) -> Result<f64>
where
    F: Fn(f64) -> Result<GaussianParams>,
{
    if n > 2 {
        return Err(Error::UnsupportedOrder(n));
    }
    let h = 1e-4_f64.min(t.max(0.0)).max(1e-6);
    // One-sided start at t = 0 keeps the trajectory at t >= 0.
    let (lo, hi) = if t >= h { (t - h, t + h) } else { (t, t + 2.0 * h) };
    let p_lo = params_fn(lo)?;
    let p_hi = params_fn(hi)?;
    let p = if t >= h { params_fn(t)? } else { params_fn(t + h)? };
    let lhs_at = |p: &GaussianParams| q_fields(p, n)[n].add(&gamma_fields(p, n)[n]);
    let lhs = lhs_at(&p_hi).sub(&lhs_at(&p_lo)).scale(Complex64::new(1.0 / (hi - lo), 0.0));
    let residual = lhs.sub(&hierarchy_rhs(s, &p, n, with_source));
    Ok(z_grid
        .coords()
        .into_iter()
        .map(|z| residual.eval(z).norm())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{self, density_matrix_exact};
    use crate::scenario::{GridSpec1D, GridSpec2D};

    fn grid() -> GridSpec2D {
        GridSpec2D {
            y_axis: GridSpec1D::new(128, 14.0).unwrap(),
            z_axis: GridSpec1D::new(256, 36.0).unwrap(),
        }
    }

    fn exact_at(t: f64) -> GaussianParams {
        let s = Scenario::moderate();
        analytic::params_exact(&analytic::scenario_cubic(&s), &s, t).unwrap()
    }

    #[test]
    fn coherence_from_analytic_rho() {
        let rho = density_matrix_exact(&exact_at(1.0), &grid()).field;
        let l = coherence_from_rho(&rho, 9).unwrap();
        assert!((l - 0.83485).abs() < 1e-4);
        let rho0 = density_matrix_exact(&exact_at(0.0), &grid()).field;
        assert!((coherence_from_rho(&rho0, 9).unwrap() - 2.0).abs() < 1e-10);
    }

    #[test]
    fn coherence_shrinks_with_gamma() {
        let p = GaussianParams::new(0.25, -0.1, 0.5, 0.0);
        let q = GaussianParams { gamma: 1.0, ..p };
        let lp = coherence_from_rho(&density_matrix_exact(&p, &grid()).field, 5).unwrap();
        let lq = coherence_from_rho(&density_matrix_exact(&q, &grid()).field, 5).unwrap();
        assert!(lq < lp);
    }

    #[test]
    fn two_routes_to_coherence_length() {
        for (a, b, g) in [(0.25, 0.0, 0.0), (0.1, -0.3, 2.0), (0.6, 0.2, 0.7)] {
            let p = GaussianParams::new(a, b, g, 0.0);
            let l = coherence_from_rho(&density_matrix_exact(&p, &grid()).field, 9).unwrap();
            assert!((l - p.coherence_length()).abs() < 1e-6);
        }
    }

    #[test]
    fn non_localized_state_is_rejected() {
        let mut rho = density_matrix_exact(&exact_at(0.0), &grid()).field;
        // Flip the curvature: |rho| grows away from y = 0.
        let ys = rho.grid.y_axis.coords();
        let nz = rho.n_z();
        for (iy, y) in ys.iter().enumerate() {
            for v in &mut rho.values[iy * nz..(iy + 1) * nz] {
                *v *= (y * y).exp();
            }
        }
        assert!(matches!(coherence_from_rho(&rho, 9), Err(Error::NotLocalized { .. })));
    }

    #[test]
    fn ensemble_widths() {
        let w0 = ensemble_width_from_rho(&density_matrix_exact(&exact_at(0.0), &grid()).field);
        assert!((w0 - 1.0).abs() < 1e-10);
        let w1 = ensemble_width_from_rho(&density_matrix_exact(&exact_at(1.0), &grid()).field);
        assert!((w1 - 1.38444).abs() < 1e-4);

        // Same state through both representations.
        let p = exact_at(1.0);
        let a = ComplexField1D::from_fn(grid().tau_axis(), 1.0, |tau| p.marginal(tau));
        let wa = ensemble_width_from_a(&a);
        assert!((wa - w1).abs() < 1e-8);
    }

    #[test]
    fn purity_values() {
        let pure = density_matrix_exact(&exact_at(0.0), &grid()).field;
        assert!((purity(&pure) - 1.0).abs() < 1e-8);
        let mixed = density_matrix_exact(&GaussianParams::new(0.25, 0.0, 1.0, 0.0), &grid()).field;
        assert!((purity(&mixed) - 0.2f64.sqrt()).abs() < 1e-8);
        assert!((purity(&mixed) - 0.44721).abs() < 1e-5);
    }

    #[test]
    fn gaussian_fit_recovers_parameters() {
        let g = GridSpec1D::new(256, 20.0).unwrap();
        let mut sp = Spectral1D::new(&g);
        let p = GaussianParams::new(0.13, -0.33, 0.0, 0.0);
        let a = ComplexField1D::from_fn(g, 0.0, |tau| p.marginal(tau));
        let (alpha, beta) = gaussian_fit_from_a(&a, &mut sp);
        assert!((alpha / p.alpha - 1.0).abs() < 1e-10);
        assert!((beta / p.beta - 1.0).abs() < 1e-10);
    }

    #[test]
    fn hierarchy_residuals_vanish_on_exact_trajectory() {
        let s = Scenario::moderate();
        let cubic = analytic::scenario_cubic(&s);
        let traj = |t: f64| analytic::params_exact(&cubic, &s, t);
        let z = GridSpec1D::new(64, 10.0).unwrap();
        for n in 0..=2 {
            for t in [0.0, 0.3, 1.0, 2.5] {
                let r = qseries_residual(traj, &s, n, t, &z, true).unwrap();
                assert!(r < 1e-6, "n={n} t={t}: {r}");
            }
        }
        let r = qseries_residual(traj, &s, 2, 1.0, &z, false).unwrap();
        assert!((r - 2.0).abs() < 1e-6, "{r}");
        assert!(matches!(qseries_residual(traj, &s, 3, 1.0, &z, true), Err(Error::UnsupportedOrder(3))));
    }

    #[test]
    fn hierarchy_detects_wrong_trajectory() {
        // The free-particle trajectory violates the n = 2 equation by the source.
        let s = Scenario::moderate();
        let free = Scenario { lambda: 0.0, ..s.clone() };
        let cubic = analytic::scenario_cubic(&free);
        let traj = |t: f64| analytic::params_exact(&cubic, &free, t);
        let z = GridSpec1D::new(64, 10.0).unwrap();
        assert!(qseries_residual(traj, &free, 2, 1.0, &z, true).unwrap() < 1e-6);
        assert!(qseries_residual(traj, &s, 2, 1.0, &z, true).unwrap() > 1.0);
    }

    #[test]
    fn quadratic_fit_is_exact_on_parabola() {
        let pts: Vec<(f64, f64)> = (-4..=4).map(|i| {
            let x = i as f64 * 0.3;
            (x, 1.0 + 0.5 * x + 2.5 * x * x)
        }).collect();
        assert!((quadratic_coefficient(&pts) - 2.5).abs() < 1e-12);
    }

    #[test]
    fn flags_display() {
        assert_eq!(Flags::default().to_string(), "");
        let f = Flags { aliasing: true, undersized: true, ..Flags::default() };
        assert_eq!(f.to_string(), "aliasing;undersized");
        assert!(f.any());
    }
}
