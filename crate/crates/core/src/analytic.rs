//! Closed-form Gaussian solution of the Joos-Zeh model.
//!
//! The marginal wavefunction is `a = exp(delta/2 - (alpha + i beta) tau^2)` and
//! the environmental overlap is `K = exp(-gamma y^2 / 2)`, so the reduced
//! density matrix in rotated coordinates is
//!
//! ```text
//! rho(y, z) = exp(delta - alpha (y^2 + z^2) / 2 - i beta y z - gamma y^2 / 2)
//! ```
//!
//! with `rho = a(tau) conj(a(tau'))`, `y = tau - tau'`, `z = tau + tau'`.
//! Everything follows from the cubic `G = 1/alpha`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::ComplexField2D;
use crate::scenario::{GridSpec2D, Scenario};

/// Time-dependent Gaussian parameters of the marginal state and its overlap kernel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Log-normalization; `exp(delta) = sqrt(2 alpha / pi)`.
    pub delta: f64,
    pub t: f64,
}

impl GaussianParams {
    pub fn new(alpha: f64, beta: f64, gamma: f64, t: f64) -> Self {
        Self { alpha, beta, gamma, delta: normalizing_delta(alpha), t }
    }

    pub fn coherence_length(&self) -> f64 {
        1.0 / (self.alpha + self.gamma).sqrt()
    }

    /// Standard deviation of `|a|^2`.
    pub fn ensemble_width(&self) -> f64 {
        0.5 / self.alpha.sqrt()
    }

    pub fn purity(&self) -> f64 {
        (self.alpha / (self.alpha + self.gamma)).sqrt()
    }

    /// `a(tau)`.
    pub fn marginal(&self, tau: f64) -> Complex64 {
        Complex64::new(0.5 * self.delta - self.alpha * tau * tau, -self.beta * tau * tau).exp()
    }

    /// `rho(y, z)` including the overlap kernel.
    pub fn rho(&self, y: f64, z: f64) -> Complex64 {
        let re = self.delta - 0.5 * self.alpha * (y * y + z * z) - 0.5 * self.gamma * y * y;
        Complex64::new(re, -self.beta * y * z).exp()
    }
}

/// `delta` such that `int |a|^2 dtau = 1`.
pub fn normalizing_delta(alpha: f64) -> f64 {
    0.5 * (2.0 * alpha / std::f64::consts::PI).ln()
}

/// Half-extents `(y, z)` holding six standard deviations of `|rho|`.
pub fn required_extents(p: &GaussianParams) -> (f64, f64) {
    (6.0 / (p.alpha + p.gamma).sqrt(), 6.0 / p.alpha.sqrt())
}

/// `G(t) = c0 + c1 t + c2 t^2 + c3 t^3`, the inverse of `alpha`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CubicG {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl CubicG {
    pub fn eval(&self, t: f64) -> f64 {
        self.c0 + t * (self.c1 + t * (self.c2 + t * self.c3))
    }

    pub fn derivative(&self, t: f64) -> f64 {
        self.c1 + t * (2.0 * self.c2 + 3.0 * t * self.c3)
    }

    /// `int_0^t G`.
    pub fn integral(&self, t: f64) -> f64 {
        t * (self.c0 + t * (self.c1 / 2.0 + t * (self.c2 / 3.0 + t * self.c3 / 4.0)))
    }

    fn positive_at(&self, t: f64) -> Result<f64> {
        if t < 0.0 {
            return Err(Error::InvalidField { field: "t", reason: format!("must be >= 0, got {t}") });
        }
        let g = self.eval(t);
        if g > 0.0 && g.is_finite() {
            Ok(g)
        } else {
            Err(Error::NonPositiveCubic { t, value: g })
        }
    }
}

/// Cubic fixed by the initial Gaussian parameters.
pub fn build_cubic(s: &Scenario, alpha0: f64, beta0: f64) -> Result<CubicG> {
    if !(alpha0 > 0.0 && alpha0.is_finite()) {
        return Err(Error::InvalidField { field: "alpha0", reason: format!("must be > 0, got {alpha0}") });
    }
    let r = s.hbar / s.m;
    Ok(CubicG {
        c0: 1.0 / alpha0,
        c1: -4.0 * r * beta0 / alpha0,
        c2: 4.0 * r * r * (alpha0 + beta0 * beta0 / alpha0),
        c3: 8.0 / 3.0 * s.hbar * s.lambda / (s.m * s.m),
    })
}

/// Cubic for the scenario's own initial packet of width `b`.
pub fn scenario_cubic(s: &Scenario) -> CubicG {
    let (a0, b0) = s.initial_alpha_beta();
    build_cubic(s, a0, b0).expect("validated scenario has b > 0")
}

/// `gamma(t) = (2 Lambda / hbar) int_0^t G / G(t)`.
pub fn gamma_exact(g: &CubicG, s: &Scenario, t: f64) -> Result<f64> {
    let gt = g.positive_at(t)?;
    Ok(2.0 * s.lambda / s.hbar * g.integral(t) / gt)
}

pub fn params_exact(g: &CubicG, s: &Scenario, t: f64) -> Result<GaussianParams> {
    let gt = g.positive_at(t)?;
    let gamma = gamma_exact(g, s, t)?;
    let beta = -s.m / (4.0 * s.hbar) * g.derivative(t) / gt;
    Ok(GaussianParams::new(1.0 / gt, beta, gamma, t))
}

/// `l(t) = sqrt(G / (1 + (2 Lambda / hbar) int_0^t G))`, equal to `1/sqrt(alpha + gamma)`.
pub fn coherence_exact(g: &CubicG, s: &Scenario, t: f64) -> Result<f64> {
    let gt = g.positive_at(t)?;
    Ok((gt / (1.0 + 2.0 * s.lambda / s.hbar * g.integral(t))).sqrt())
}

/// Standard deviation of `|a|^2`: `sqrt(G)/2`.
pub fn ensemble_width_exact(g: &CubicG, t: f64) -> Result<f64> {
    Ok(g.positive_at(t)?.sqrt() / 2.0)
}

/// Leading long- and short-time coherence laws, in the conventional
/// normalization: `sqrt(hbar / (2 Lambda t))` and `b - (4 Lambda / hbar) b^3 t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoherenceLimits {
    pub long: f64,
    pub short: f64,
}

pub fn coherence_limits(s: &Scenario, t: f64) -> Result<CoherenceLimits> {
    if s.lambda <= 0.0 {
        return Err(Error::NoDecoherence);
    }
    if t <= 0.0 {
        return Err(Error::ZeroTime);
    }
    Ok(CoherenceLimits {
        long: (s.hbar / (2.0 * s.lambda * t)).sqrt(),
        short: short_time_coherence(s, t),
    })
}

/// Short-time law alone; defined at `t = 0` where it equals `b`.
pub fn short_time_coherence(s: &Scenario, t: f64) -> f64 {
    s.b - 4.0 * s.lambda / s.hbar * s.b.powi(3) * t
}

/// Sampled exact density matrix with a flag for boxes smaller than six
/// standard deviations of `|rho|`.
#[derive(Clone, Debug)]
pub struct ExactDensity {
    pub field: ComplexField2D,
    pub undersized: bool,
}

pub fn density_matrix_exact(p: &GaussianParams, grid: &GridSpec2D) -> ExactDensity {
    let (ry, rz) = required_extents(p);
    let undersized = grid.y_axis.extent < ry || grid.z_axis.extent < rz;
    ExactDensity {
        field: ComplexField2D::from_fn(*grid, p.t, |y, z| p.rho(y, z)),
        undersized,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::GridSpec1D;

    const TOL: f64 = 1e-12;

    fn unit_cubic() -> (Scenario, CubicG) {
        let s = Scenario::moderate();
        let g = build_cubic(&s, 0.25, 0.0).unwrap();
        (s, g)
    }

    #[test]
    fn cubic_coefficients() {
        let (_, g) = unit_cubic();
        assert_eq!((g.c0, g.c1, g.c2), (4.0, 0.0, 1.0));
        assert!((g.c3 - 8.0 / 3.0).abs() < TOL);

        let free = build_cubic(&Scenario { lambda: 0.0, ..Scenario::default() }, 0.25, 0.0).unwrap();
        assert_eq!(free.c3, 0.0);

        // alpha0 = beta0 = 1/4: c1 = -4 (beta0/alpha0) = -4, c2 = 4 (1/4 + 1/4) = 2.
        let g = build_cubic(&Scenario::moderate(), 0.25, 0.25).unwrap();
        assert!((g.c1 + 4.0).abs() < TOL);
        assert!((g.c2 - 2.0).abs() < TOL);

        assert!(build_cubic(&Scenario::moderate(), 0.0, 0.0).is_err());
        assert!(build_cubic(&Scenario::moderate(), -1.0, 0.0).is_err());
    }

    #[test]
    fn cubic_matches_initial_ode_derivatives() {
        // G = 1/alpha gives G' = -alpha'/alpha^2 and alpha' = (4 hbar/m) alpha beta.
        let s = Scenario { hbar: 1.3, m: 0.7, lambda: 2.1, ..Scenario::default() };
        let (a0, b0) = (0.4, -0.3);
        let g = build_cubic(&s, a0, b0).unwrap();
        let r = s.hbar / s.m;
        let alpha_dot = 4.0 * r * a0 * b0;
        assert!((g.derivative(0.0) + alpha_dot / (a0 * a0)).abs() < TOL);
        // G'' = 2 alpha'^2/alpha^3 - alpha''/alpha^2 with gamma(0) = 0.
        let beta_dot = 2.0 * r * (b0 * b0 - a0 * a0);
        let alpha_ddot = 4.0 * r * (alpha_dot * b0 + a0 * beta_dot);
        let g2 = 2.0 * alpha_dot * alpha_dot / a0.powi(3) - alpha_ddot / (a0 * a0);
        assert!((2.0 * g.c2 - g2).abs() < 1e-12);
    }

    #[test]
    fn closed_form_spot_values() {
        let (s, g) = unit_cubic();
        assert!((g.eval(1.0) - 23.0 / 3.0).abs() < TOL);
        assert!((g.integral(1.0) - 5.0).abs() < TOL);
        assert_eq!(g.eval(0.0), g.c0);
        assert_eq!(g.integral(0.0), 0.0);
        assert!((gamma_exact(&g, &s, 1.0).unwrap() - 30.0 / 23.0).abs() < TOL);
        assert_eq!(gamma_exact(&g, &s, 0.0).unwrap(), 0.0);

        let p = params_exact(&g, &s, 1.0).unwrap();
        assert!((p.alpha - 3.0 / 23.0).abs() < TOL);
        assert!((p.beta + 15.0 / 46.0).abs() < TOL);
        assert!((p.gamma - 30.0 / 23.0).abs() < TOL);

        let l = coherence_exact(&g, &s, 1.0).unwrap();
        assert!((l - (23.0f64 / 33.0).sqrt()).abs() < TOL);
        assert!((l - 0.83485).abs() < 1e-5);
        assert!((l - p.coherence_length()).abs() < TOL);
        assert!((coherence_exact(&g, &s, 0.0).unwrap() - 2.0 * s.b).abs() < TOL);

        assert!((ensemble_width_exact(&g, 0.0).unwrap() - 1.0).abs() < TOL);
        assert!((ensemble_width_exact(&g, 1.0).unwrap() - 1.38444).abs() < 1e-5);
    }

    #[test]
    fn initial_conditions_round_trip() {
        let (s, g) = unit_cubic();
        let p = params_exact(&g, &s, 0.0).unwrap();
        assert_eq!((p.alpha, p.beta, p.gamma), (0.25, 0.0, 0.0));
        assert!((p.delta - normalizing_delta(0.25)).abs() < TOL);
    }

    #[test]
    fn free_particle_limits() {
        let s = Scenario { lambda: 0.0, ..Scenario::default() };
        let g = build_cubic(&s, 0.25, 0.0).unwrap();
        let p = params_exact(&g, &s, 2.0).unwrap();
        assert!((p.alpha - 0.125).abs() < TOL);
        for t in [0.0, 0.5, 3.0] {
            assert_eq!(gamma_exact(&g, &s, t).unwrap(), 0.0);
            assert!((coherence_exact(&g, &s, t).unwrap() - g.eval(t).sqrt()).abs() < TOL);
        }
        // Width approaches (hbar / (2 m b)) t.
        let t = 1e4;
        let w = ensemble_width_exact(&g, t).unwrap();
        assert!((w / (t / 2.0) - 1.0).abs() < 1e-7);
    }

    #[test]
    fn limit_laws() {
        let s = Scenario::moderate();
        let l = coherence_limits(&s, 100.0).unwrap();
        assert!((l.long - 0.070711).abs() < 1e-6);
        let l = coherence_limits(&s, 0.01).unwrap();
        assert!((l.short - 0.96).abs() < TOL);
        assert_eq!(short_time_coherence(&s, 0.0), s.b);
        assert!(matches!(coherence_limits(&s, 0.0), Err(Error::ZeroTime)));
    }

    #[test]
    fn third_derivative_is_constant() {
        for (lambda, a0, b0) in [(1.0, 0.25, 0.0), (10.0, 0.25, 0.0), (0.3, 1.2, -0.7)] {
            let s = Scenario { lambda, hbar: 0.9, m: 1.7, ..Scenario::default() };
            let g = build_cubic(&s, a0, b0).unwrap();
            let h = 1e-2;
            for t in [0.0, 0.7, 3.0] {
                let d3 = (g.eval(t + 3.0 * h) - 3.0 * g.eval(t + 2.0 * h) + 3.0 * g.eval(t + h)
                    - g.eval(t))
                    / h.powi(3);
                // The alpha, beta and gamma equations force G''' = (8 hbar^2/m^2)(2 Lambda/hbar).
                let expected = 16.0 * lambda * s.hbar / (s.m * s.m);
                assert!((d3 - expected).abs() < 1e-6 * expected.max(1.0) + 1e-4, "{d3} vs {expected}");
            }
        }
    }

    #[test]
    fn gamma_satisfies_its_ode() {
        let s = Scenario::strong();
        let g = build_cubic(&s, 0.25, 0.1).unwrap();
        let h = 1e-3;
        let gam = |t: f64| gamma_exact(&g, &s, t).unwrap();
        for t in [0.1, 0.5, 2.0, 5.0] {
            // Fourth-order central difference.
            let gd = (8.0 * (gam(t + h) - gam(t - h)) - (gam(t + 2.0 * h) - gam(t - 2.0 * h))) / (12.0 * h);
            let rhs = -g.derivative(t) / g.eval(t) * gamma_exact(&g, &s, t).unwrap() + 2.0 * s.lambda / s.hbar;
            assert!((gd - rhs).abs() < 1e-8 * rhs.abs().max(1.0), "t={t}: {gd} vs {rhs}");
            let p = params_exact(&g, &s, t).unwrap();
            assert!((p.alpha * g.eval(t) - 1.0).abs() < TOL);
            assert!((coherence_exact(&g, &s, t).unwrap() - p.coherence_length()).abs() < TOL);
        }
    }

    #[test]
    fn long_time_slope_is_minus_one_half() {
        let (s, g) = unit_cubic();
        let tb = s.characteristic_time().unwrap();
        let (t1, t2) = (10.0 * tb, 100.0 * tb);
        let slope = (coherence_exact(&g, &s, t2).unwrap() / coherence_exact(&g, &s, t1).unwrap()).ln()
            / (t2 / t1).ln();
        assert!((slope + 0.5).abs() < 0.005, "{slope}");
    }

    #[test]
    fn exact_density_is_normalized() {
        let grid = GridSpec2D {
            y_axis: GridSpec1D::new(128, 14.0).unwrap(),
            z_axis: GridSpec1D::new(256, 36.0).unwrap(),
        };
        let (s, g) = unit_cubic();
        for t in [0.0, 1.0, 2.0] {
            let d = density_matrix_exact(&params_exact(&g, &s, t).unwrap(), &grid);
            assert!(!d.undersized);
            assert!((d.field.trace() - 1.0).norm() < 1e-10);
            assert!(d.field.hermiticity_error() < 1e-14);
        }
        let d = density_matrix_exact(&params_exact(&g, &s, 20.0).unwrap(), &grid);
        assert!(d.undersized);
    }

    #[test]
    fn off_diagonal_half_width() {
        let (s, g) = unit_cubic();
        let p = params_exact(&g, &s, 1.0).unwrap();
        let w = (2.0 / (p.alpha + p.gamma)).sqrt();
        assert!((p.rho(w, 0.0).norm() / p.rho(0.0, 0.0).norm() - (-1.0f64).exp()).abs() < TOL);
    }

    #[test]
    fn doubling_gamma_shrinks_off_diagonal_variance() {
        // With alpha negligible, the y-variance of |rho| is 1/(alpha + gamma).
        let base = GaussianParams::new(1e-9, 0.0, 5.0, 0.0);
        let double = GaussianParams { gamma: 10.0, ..base };
        let var = |p: &GaussianParams| 1.0 / (p.alpha + p.gamma);
        assert!((var(&double) / var(&base) - 0.5).abs() < 1e-9);
        assert!(double.coherence_length() < base.coherence_length());
    }
}
