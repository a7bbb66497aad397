//! Fixed-step RK4 integration of the Gaussian-parameter equations of motion,
//! either closed (gamma evolves with its own source) or driven by a
//! prescribed gamma.

use std::fmt;
use std::sync::Arc;

use crate::analytic::{self, CubicG, GaussianParams};
use crate::error::{Error, Result};
use crate::field::TimeSeries;
use crate::scenario::{NumericsSpec, Scenario};

/// Source of `gamma(t)` for the prescribed-gamma integrator.
#[derive(Clone)]
pub enum GammaModel {
    /// The closed-form solution built from the initial cubic.
    ExactClosure { cubic: CubicG, scenario: Scenario },
    /// `2 Lambda (t - t0) / hbar`, accurate at short times.
    LinearShort { lambda: f64, hbar: f64, t0: f64 },
    /// `m^2 c2 / (16 hbar^2) + Lambda t / (2 hbar)`, the long-time asymptote.
    LinearLong { c2: f64, lambda: f64, hbar: f64, m: f64 },
    UserSupplied(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for GammaModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GammaModel::ExactClosure { cubic, .. } => write!(f, "ExactClosure({cubic:?})"),
            GammaModel::LinearShort { lambda, hbar, t0 } => {
                write!(f, "LinearShort {{ lambda: {lambda}, hbar: {hbar}, t0: {t0} }}")
            }
            GammaModel::LinearLong { c2, lambda, hbar, m } => {
                write!(f, "LinearLong {{ c2: {c2}, lambda: {lambda}, hbar: {hbar}, m: {m} }}")
            }
            GammaModel::UserSupplied(_) => f.write_str("UserSupplied(..)"),
        }
    }
}

impl GammaModel {
    pub fn exact(s: &Scenario, alpha0: f64, beta0: f64) -> Result<Self> {
        Ok(GammaModel::ExactClosure {
            cubic: analytic::build_cubic(s, alpha0, beta0)?,
            scenario: s.clone(),
        })
    }

    pub fn linear_short(s: &Scenario) -> Self {
        GammaModel::LinearShort { lambda: s.lambda, hbar: s.hbar, t0: s.t0 }
    }

    /// The long-time model takes `c2` from the cubic of the initial state.
    pub fn linear_long(s: &Scenario, alpha0: f64, beta0: f64) -> Result<Self> {
        let c2 = analytic::build_cubic(s, alpha0, beta0)?.c2;
        Ok(GammaModel::LinearLong { c2, lambda: s.lambda, hbar: s.hbar, m: s.m })
    }

    pub fn name(&self) -> &'static str {
        match self {
            GammaModel::ExactClosure { .. } => "exact-closure",
            GammaModel::LinearShort { .. } => "linear-short",
            GammaModel::LinearLong { .. } => "linear-long",
            GammaModel::UserSupplied(_) => "user-supplied",
        }
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        match self {
            GammaModel::ExactClosure { cubic, scenario } => analytic::gamma_exact(cubic, scenario, t),
            GammaModel::LinearShort { lambda, hbar, t0 } => Ok(2.0 * lambda * (t - t0) / hbar),
            GammaModel::LinearLong { c2, lambda, hbar, m } => {
                Ok(m * m * c2 / (16.0 * hbar * hbar) + lambda * t / (2.0 * hbar))
            }
            GammaModel::UserSupplied(f) => Ok(f(t)),
        }
    }
}

pub fn gamma_model_eval(gm: &GammaModel, t: f64) -> Result<f64> {
    gm.eval(t)
}

/// One classic RK4 step for an autonomous-in-form system `y' = f(t, y)`.
pub fn rk4_step<const N: usize, F>(f: &mut F, t: f64, y: &[f64; N], h: f64) -> Result<[f64; N]>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
{
    let axpy = |y: &[f64; N], k: &[f64; N], s: f64| -> [f64; N] {
        std::array::from_fn(|i| y[i] + s * k[i])
    };
    let k1 = f(t, y)?;
    let k2 = f(t + h / 2.0, &axpy(y, &k1, h / 2.0))?;
    let k3 = f(t + h / 2.0, &axpy(y, &k2, h / 2.0))?;
    let k4 = f(t + h, &axpy(y, &k3, h))?;
    Ok(std::array::from_fn(|i| {
        y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
    }))
}

/// Right-hand side of the closed system for `[delta, alpha, gamma, beta]`.
pub fn closed_rhs(s: &Scenario, y: &[f64; 4]) -> [f64; 4] {
    let r = s.hbar / s.m;
    let [_, alpha, gamma, beta] = *y;
    [
        2.0 * r * beta,
        4.0 * r * alpha * beta,
        4.0 * r * beta * gamma + 2.0 * s.lambda / s.hbar,
        2.0 * r * (beta * beta - alpha * alpha - alpha * gamma),
    ]
}

/// Right-hand side for `[delta, alpha, beta]` under a given `gamma`.
pub fn prescribed_rhs(s: &Scenario, gamma: f64, y: &[f64; 3]) -> [f64; 3] {
    let r = s.hbar / s.m;
    let [_, alpha, beta] = *y;
    [
        2.0 * r * beta,
        4.0 * r * alpha * beta,
        2.0 * r * (beta * beta - alpha * alpha - alpha * gamma),
    ]
}

fn check_state<const N: usize>(t: f64, y: &[f64; N], alpha_index: usize) -> Result<()> {
    if let Some(v) = y.iter().find(|v| !v.is_finite()) {
        return Err(Error::IntegrationFailure { t, reason: format!("non-finite state value {v}") });
    }
    if y[alpha_index] <= 0.0 {
        return Err(Error::IntegrationFailure {
            t,
            reason: format!("alpha became non-positive ({})", y[alpha_index]),
        });
    }
    Ok(())
}

fn validate_start(alpha0: f64, numerics: &NumericsSpec) -> Result<()> {
    numerics.validate()?;
    if !(alpha0 > 0.0 && alpha0.is_finite()) {
        return Err(Error::InvalidField { field: "alpha0", reason: format!("must be > 0, got {alpha0}") });
    }
    Ok(())
}

/// Integrate all four parameters of the closed Joos-Zeh system.
pub fn integrate_closed_system(
    s: &Scenario,
    alpha0: f64,
    beta0: f64,
    numerics: &NumericsSpec,
) -> Result<TimeSeries<GaussianParams>> {
    validate_start(alpha0, numerics)?;
    let dt = numerics.dt;
    let n = numerics.n_steps();
    let mut y = [analytic::normalizing_delta(alpha0), alpha0, 0.0, beta0];
    let mut rhs = |_t: f64, y: &[f64; 4]| Ok(closed_rhs(s, y));
    let pack = |t: f64, y: &[f64; 4]| GaussianParams { delta: y[0], alpha: y[1], gamma: y[2], beta: y[3], t };

    let mut out = TimeSeries::default();
    out.push(0.0, pack(0.0, &y));
    for k in 0..n {
        let t = k as f64 * dt;
        y = rk4_step(&mut rhs, t, &y, dt)?;
        let t_next = (k + 1) as f64 * dt;
        check_state(t_next, &y, 1)?;
        if (k + 1) % numerics.sample_every == 0 || k + 1 == n {
            out.push(t_next, pack(t_next, &y));
        }
    }
    Ok(out)
}

/// Integrate `(delta, alpha, beta)` with `gamma` taken from `gm`; the output's
/// gamma column is filled from the model.
pub fn integrate_prescribed_gamma(
    s: &Scenario,
    gm: &GammaModel,
    alpha0: f64,
    beta0: f64,
    numerics: &NumericsSpec,
) -> Result<TimeSeries<GaussianParams>> {
    validate_start(alpha0, numerics)?;
    let dt = numerics.dt;
    let n = numerics.n_steps();
    let mut y = [analytic::normalizing_delta(alpha0), alpha0, beta0];
    let mut rhs = |t: f64, y: &[f64; 3]| Ok(prescribed_rhs(s, gm.eval(t)?, y));

    let mut out = TimeSeries::default();
    let pack = |t: f64, y: &[f64; 3]| -> Result<GaussianParams> {
        Ok(GaussianParams { delta: y[0], alpha: y[1], beta: y[2], gamma: gm.eval(t)?, t })
    };
    out.push(0.0, pack(0.0, &y)?);
    for k in 0..n {
        let t = k as f64 * dt;
        y = rk4_step(&mut rhs, t, &y, dt)?;
        let t_next = (k + 1) as f64 * dt;
        check_state(t_next, &y, 1)?;
        if (k + 1) % numerics.sample_every == 0 || k + 1 == n {
            out.push(t_next, pack(t_next, &y)?);
        }
    }
    Ok(out)
}
