use decwt_core::analytic::{self, GaussianParams};
use decwt_core::checkpoint;
use decwt_core::dynamics::{self, GammaModel};
use decwt_core::gfunc::{self, ConditionalSampler};
use decwt_core::lse::{self, LseCoupling};
use decwt_core::master_eq;
use decwt_core::observables;
use decwt_core::scenario::{GridSpec1D, GridSpec2D, NumericsSpec, Scenario};
use decwt_core::spectral::Spectral1D;

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

/// A scenario away from natural units, so a misplaced `hbar` or `m` shows up.
fn dimensional() -> Scenario {
    Scenario { m: 3.0, hbar: 2.0, lambda: 1.5, b: 0.5, sigma: 0.8, t0: 0.0, label: "dimensional".into() }
}

/// Grid covering the six-sigma extents of the closed-form state at `t_end`.
fn grid_for(s: &Scenario, t_end: f64, n: usize) -> GridSpec2D {
    let (a0, b0) = s.initial_alpha_beta();
    let start = GaussianParams::new(a0, b0, 0.0, 0.0);
    let end = analytic::params_exact(&analytic::scenario_cubic(s), s, t_end).unwrap();
    let (y0, z0) = analytic::required_extents(&start);
    let (y1, z1) = analytic::required_extents(&end);
    GridSpec2D {
        y_axis: GridSpec1D::new(n, 1.2 * y0.max(y1)).unwrap(),
        z_axis: GridSpec1D::new(n, 1.2 * z0.max(z1)).unwrap(),
    }
}

#[test]
fn master_equation_ode_and_closed_form_agree_in_any_units() {
    for s in [Scenario::moderate(), dimensional()] {
        let t_end = 0.5 * s.characteristic_time().unwrap();
        let grid = grid_for(&s, t_end, 256);
        let dt = t_end / 500.0;
        let numerics = NumericsSpec { dt, t_end, sample_every: 100, ..NumericsSpec::default() };
        let (a0, b0) = s.initial_alpha_beta();
        let f0 = master_eq::init_gaussian_rho(&GaussianParams::new(a0, b0, 0.0, 0.0), &grid).unwrap();
        let run = master_eq::evolve_jzme(f0, &s, &numerics, |_| Ok(())).unwrap();
        let ode = dynamics::integrate_closed_system(&s, a0, b0, &numerics).unwrap();
        let cubic = analytic::scenario_cubic(&s);
        assert!(!run.aliasing, "{}", s.label);
        assert_eq!(run.series.len(), ode.len());
        for ((t, o), (_, p)) in run.series.iter().zip(ode.iter()) {
            let e = analytic::params_exact(&cubic, &s, t).unwrap();
            assert!(rel(p.gamma.max(1e-300), e.gamma.max(1e-300)) < 1e-8 || e.gamma == 0.0);
            assert!(rel(o.coherence_length, e.coherence_length()) < 1e-4, "{} l at t={t}", s.label);
            assert!(rel(o.ensemble_width, e.ensemble_width()) < 1e-4, "{} w at t={t}", s.label);
            assert!(rel(o.purity, e.purity()) < 1e-4, "{} purity at t={t}", s.label);
            assert!((o.trace_or_norm - 1.0).abs() < 1e-10);
        }
    }
}

#[test]
fn lse_follows_the_linear_gaussian_ode_in_any_units() {
    for s in [Scenario::moderate(), dimensional()] {
        let t_end = 0.5 * s.characteristic_time().unwrap();
        // The beta fit weights the tails by tau^2, so the box is twice the density-matrix one.
        let grid = GridSpec1D::new(1024, 2.0 * grid_for(&s, t_end, 1024).tau_axis().extent).unwrap();
        let numerics = NumericsSpec { dt: t_end / 2000.0, t_end, sample_every: 400, ..NumericsSpec::default() };
        let (a0, b0) = s.initial_alpha_beta();
        let mut sp = Spectral1D::new(&grid);
        let mut fits = Vec::new();
        lse::evolve_lse(lse::init_gaussian_a(a0, b0, &grid).unwrap(), &s, LseCoupling::from_scenario(&s), &numerics, |a| {
            fits.push(observables::gaussian_fit_from_a(a, &mut sp));
            Ok(())
        })
        .unwrap();
        let ode = dynamics::integrate_prescribed_gamma(&s, &GammaModel::linear_short(&s), a0, b0, &numerics).unwrap();
        assert_eq!(fits.len(), ode.len());
        for ((alpha, beta), p) in fits.iter().zip(&ode.values) {
            assert!(rel(*alpha, p.alpha) < 1e-5, "{} alpha at t={}", s.label, p.t);
            assert!((beta - p.beta).abs() < 1e-5 * p.alpha, "{} beta at t={}: {beta} vs {} (alpha {alpha} vs {})", s.label, p.t, p.beta, p.alpha);
        }
    }
}

#[test]
fn resuming_from_checkpoint_files_is_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let s = Scenario::moderate();
    let grid = GridSpec2D { y_axis: GridSpec1D::new(64, 14.0).unwrap(), z_axis: GridSpec1D::new(64, 24.0).unwrap() };
    let numerics = NumericsSpec { dt: 2e-3, t_end: 0.4, sample_every: 50, ..NumericsSpec::default() };
    let (a0, b0) = s.initial_alpha_beta();

    let rho0 = master_eq::init_gaussian_rho(&GaussianParams::new(a0, b0, 0.0, 0.0), &grid).unwrap();
    let ckpt = dir.path().join("rho.ckpt");
    let mut written = false;
    let full = master_eq::evolve_jzme(rho0, &s, &numerics, |f| {
        if (f.t - 0.2).abs() < 1e-9 {
            checkpoint::write_checkpoint_2d(&ckpt, f)?;
            written = true;
        }
        Ok(())
    })
    .unwrap();
    assert!(written);
    let resumed = master_eq::evolve_jzme(checkpoint::read_checkpoint_2d(&ckpt).unwrap(), &s, &numerics, |_| Ok(())).unwrap();
    assert_eq!(resumed.field, full.field);
    assert_eq!(resumed.series.values.last(), full.series.values.last());

    let tau = grid.tau_axis();
    let a_ckpt = dir.path().join("a.ckpt");
    let coupling = LseCoupling::from_scenario(&s);
    let full = lse::evolve_lse(lse::init_gaussian_a(a0, b0, &tau).unwrap(), &s, coupling, &numerics, |a| {
        if (a.t - 0.2).abs() < 1e-9 {
            checkpoint::write_checkpoint_1d(&a_ckpt, a)?;
        }
        Ok(())
    })
    .unwrap();
    let resumed = lse::evolve_lse(checkpoint::read_checkpoint_1d(&a_ckpt).unwrap(), &s, coupling, &numerics, |_| Ok(())).unwrap();
    assert_eq!(resumed.field, full.field);
}

#[test]
fn conditional_states_reproduce_gamma_along_the_trajectory() {
    for s in [Scenario::moderate(), dimensional()] {
        let cubic = analytic::scenario_cubic(&s);
        let tau_grid = GridSpec1D::new(16, 2.0).unwrap();
        for k in 1..=5 {
            let t = 0.6 * k as f64 * s.characteristic_time().unwrap();
            let gamma = analytic::gamma_exact(&cubic, &s, t).unwrap();
            let cs = ConditionalSampler::with_default_grid(s.sigma, gamma, s.hbar, 256).unwrap();
            let tbl = gfunc::compute_g_table(&cs, &tau_grid, 2).unwrap();
            let recovered = -s.hbar * tbl.get(0, 2)[tau_grid.center()].re;
            assert!(rel(recovered, gamma) < 1e-10, "{}: {recovered} vs {gamma}", s.label);
            // The overlap kernel decays as exp(-(gamma/hbar) y^2 / 2).
            let y: f64 = 0.3;
            let k = gfunc::compute_k(&cs, 0.1 + y, 0.1);
            assert!((k.re - (-(gamma / s.hbar) * y * y / 2.0).exp()).abs() < 1e-10);
            assert!(k.im.abs() < 1e-12);
        }
    }
}
