//! The solver routes behind `decwt run` and `decwt checkpoint-resume`.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Result};
use clap::ValueEnum;
use decwt_core::analytic::{self, GaussianParams};
use decwt_core::checkpoint;
use decwt_core::dynamics;
use decwt_core::field::{ComplexField1D, ComplexField2D};
use decwt_core::gfunc::{self, ConditionalSampler};
use decwt_core::lse::{self, LseCoupling};
use decwt_core::master_eq;
use decwt_core::observables::{self, qseries_residual};
use decwt_core::scenario::{GridSpec1D, RunConfig};
use decwt_core::spectral::Spectral1D;
use decwt_core::Error;

use crate::output::{num, Row};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum Route {
    Analytic,
    Ode,
    MasterEq,
    Lse,
    Gfunc,
    Hierarchy,
}

impl Route {
    pub fn name(self) -> &'static str {
        match self {
            Route::Analytic => "analytic",
            Route::Ode => "ode",
            Route::MasterEq => "master-eq",
            Route::Lse => "lse",
            Route::Gfunc => "gfunc",
            Route::Hierarchy => "hierarchy",
        }
    }
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Rows for the route CSV plus any route-specific side tables.
pub struct RouteOutput {
    pub rows: Vec<Row>,
    /// `(file name, contents)`.
    pub extra: Vec<(String, String)>,
    /// The field left the box or hit the spectral edge.
    pub aliasing: bool,
}

impl RouteOutput {
    fn rows(rows: Vec<Row>) -> Self {
        RouteOutput { rows, extra: Vec::new(), aliasing: false }
    }
}

/// Where and how often field routes write checkpoints.
#[derive(Clone, Debug)]
pub struct CheckpointPlan {
    pub dir: PathBuf,
    /// In steps; a multiple of `sample_every`.
    pub every: usize,
}

impl CheckpointPlan {
    pub fn path(&self, route: Route) -> PathBuf {
        self.dir.join(format!("{route}.ckpt"))
    }

    fn due(&self, t: f64, dt: f64) -> bool {
        let k = (t / dt).round() as usize;
        k > 0 && k % self.every == 0
    }
}

pub fn run_route(route: Route, cfg: &RunConfig, ckpt: Option<&CheckpointPlan>) -> Result<RouteOutput> {
    match route {
        Route::Analytic => analytic_route(cfg),
        Route::Ode => ode_route(cfg),
        Route::MasterEq => {
            let s = &cfg.scenario;
            let (a0, b0) = s.initial_alpha_beta();
            let f0 = master_eq::init_gaussian_rho(&GaussianParams::new(a0, b0, 0.0, 0.0), &cfg.grid)?;
            master_eq_route(cfg, f0, ckpt)
        }
        Route::Lse => {
            let (a0, b0) = cfg.scenario.initial_alpha_beta();
            let a = lse::init_gaussian_a(a0, b0, &cfg.grid.tau_axis())?;
            lse_route(cfg, a, ckpt)
        }
        Route::Gfunc => gfunc_route(cfg),
        Route::Hierarchy => hierarchy_route(cfg),
    }
}

/// Continue a field route from a checkpoint file.
pub fn resume_route(route: Route, cfg: &RunConfig, path: &Path, ckpt: Option<&CheckpointPlan>) -> Result<RouteOutput> {
    match route {
        Route::MasterEq => {
            let f = checkpoint::read_checkpoint_2d(path)?;
            if f.grid != cfg.grid {
                return Err(anyhow!("checkpoint grid {:?} does not match the configured grid {:?}", f.grid, cfg.grid));
            }
            master_eq_route(cfg, f, ckpt)
        }
        Route::Lse => {
            let a = checkpoint::read_checkpoint_1d(path)?;
            if a.grid != cfg.grid.tau_axis() {
                return Err(anyhow!("checkpoint grid {:?} does not match the configured tau grid {:?}", a.grid, cfg.grid.tau_axis()));
            }
            lse_route(cfg, a, ckpt)
        }
        other => Err(anyhow!("route `{other}` has no checkpoint; only master-eq and lse can resume")),
    }
}

fn exact_trajectory(cfg: &RunConfig) -> Result<Vec<GaussianParams>> {
    let s = &cfg.scenario;
    let cubic = analytic::scenario_cubic(s);
    Ok(cfg
        .numerics
        .sample_times()
        .into_iter()
        .map(|t| analytic::params_exact(&cubic, s, t))
        .collect::<decwt_core::Result<_>>()?)
}

fn analytic_route(cfg: &RunConfig) -> Result<RouteOutput> {
    Ok(RouteOutput::rows(exact_trajectory(cfg)?.iter().map(Row::from_params).collect()))
}

fn ode_route(cfg: &RunConfig) -> Result<RouteOutput> {
    let (a0, b0) = cfg.scenario.initial_alpha_beta();
    let series = dynamics::integrate_closed_system(&cfg.scenario, a0, b0, &cfg.numerics)?;
    Ok(RouteOutput::rows(series.values.iter().map(Row::from_params).collect()))
}

fn master_eq_route(cfg: &RunConfig, f0: ComplexField2D, ckpt: Option<&CheckpointPlan>) -> Result<RouteOutput> {
    let s = &cfg.scenario;
    let dt = cfg.numerics.dt;
    let (a0, b0) = s.initial_alpha_beta();
    let end = analytic::params_exact(&analytic::build_cubic(s, a0, b0)?, s, cfg.numerics.t_end)?;
    let (need_y, need_z) = analytic::required_extents(&end);
    let undersized = cfg.grid.y_axis.extent < need_y || cfg.grid.z_axis.extent < need_z;

    let run = master_eq::evolve_jzme(f0, s, &cfg.numerics, |f| {
        if let Some(plan) = ckpt.filter(|p| p.due(f.t, dt)) {
            checkpoint::write_checkpoint_2d(&plan.path(Route::MasterEq), f)?;
        }
        Ok(())
    })?;
    let rows = run
        .series
        .values
        .iter()
        .map(|o| {
            let mut o = *o;
            o.flags.undersized |= undersized;
            Row::from_sample(&o)
        })
        .collect();
    Ok(RouteOutput { rows, extra: Vec::new(), aliasing: run.aliasing })
}

fn lse_route(cfg: &RunConfig, a0: ComplexField1D, ckpt: Option<&CheckpointPlan>) -> Result<RouteOutput> {
    let s = &cfg.scenario;
    let dt = cfg.numerics.dt;
    let coupling = LseCoupling::from_scenario(s);
    let mut sp = Spectral1D::new(&a0.grid);
    let mut fits = Vec::new();
    let run = lse::evolve_lse(a0, s, coupling, &cfg.numerics, |a| {
        fits.push(observables::gaussian_fit_from_a(a, &mut sp));
        if let Some(plan) = ckpt.filter(|p| p.due(a.t, dt)) {
            checkpoint::write_checkpoint_1d(&plan.path(Route::Lse), a)?;
        }
        Ok(())
    })?;
    let mut aliasing = false;
    let rows = run
        .series
        .values
        .iter()
        .zip(&fits)
        .map(|(o, &(alpha, beta))| {
            aliasing |= o.flags.aliasing;
            Row {
                alpha: Some(alpha),
                beta: Some(beta),
                gamma: Some((s.m / s.hbar * coupling.at(o.t)).max(0.0)),
                ..Row::from_sample(o)
            }
        })
        .collect();
    Ok(RouteOutput { rows, extra: Vec::new(), aliasing })
}

const GFUNC_Q_POINTS: usize = 256;

fn gfunc_tau_grid() -> GridSpec1D {
    GridSpec1D { n_points: 32, extent: 4.0 }
}

/// `gamma` recovered as `-hbar Re g_(0,2)` from the sampled conditional states,
/// next to the closed-form value it should reproduce.
fn gfunc_route(cfg: &RunConfig) -> Result<RouteOutput> {
    let s = &cfg.scenario;
    let tau_grid = gfunc_tau_grid();
    let centre = tau_grid.center();
    let mut rows = Vec::new();
    let mut side = String::from("t,gamma_exact,gamma_recovered,identity_residual,a_from_k_residual\n");
    for p in exact_trajectory(cfg)? {
        let cs = ConditionalSampler::with_default_grid(s.sigma, p.gamma, s.hbar, GFUNC_Q_POINTS)?;
        let tbl = gfunc::compute_g_table(&cs, &tau_grid, 2)?;
        let identity = gfunc::verify_g_identities(&tbl)?.max();
        let recovered = -s.hbar * tbl.get(0, 2)[centre].re;
        let afromk = gfunc::a_from_k_residual(&cs, 0.0);
        side.push_str(&format!("{},{},{},{},{}\n", num(p.t), num(p.gamma), num(recovered), num(identity), num(afromk)));
        rows.push(Row { t: p.t, gamma: Some(recovered), ..Row::default() });
    }
    Ok(RouteOutput { rows, extra: vec![("gfunc_identities.csv".into(), side)], aliasing: false })
}

/// The exact trajectory the hierarchy residuals are evaluated along, plus the
/// residual of each order.
fn hierarchy_route(cfg: &RunConfig) -> Result<RouteOutput> {
    let s = &cfg.scenario;
    let cubic = analytic::scenario_cubic(s);
    let traj = |t: f64| analytic::params_exact(&cubic, s, t);
    let z = GridSpec1D { n_points: 64, extent: 10.0 };
    let params = exact_trajectory(cfg)?;
    let mut side = String::from("t,residual_q0,residual_q1,residual_q2\n");
    for p in &params {
        let r: Vec<String> = (0..=2)
            .map(|n| qseries_residual(traj, s, n, p.t, &z, true).map(num))
            .collect::<Result<_, Error>>()?;
        side.push_str(&format!("{},{}\n", num(p.t), r.join(",")));
    }
    Ok(RouteOutput {
        rows: params.iter().map(Row::from_params).collect(),
        extra: vec![("hierarchy_residuals.csv".into(), side)],
        aliasing: false,
    })
}

/// Grid errors at initialization belong with the aliasing sentinel.
pub fn is_grid_error(e: &anyhow::Error) -> bool {
    matches!(e.downcast_ref::<Error>(), Some(Error::UndersizedGrid { .. }))
}
