//! Closed-form and linear-approximation curves drawn as standalone SVGs.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use decwt_core::analytic::{self, GaussianParams};
use decwt_core::dynamics::{self, GammaModel};
use decwt_core::scenario::{NumericsSpec, RunConfig, Scenario};

use crate::output::write_atomic;
use crate::svg::{Plot, Series};

const FIG1_POINTS: usize = 200;
const FIG2_DT: f64 = 1e-4;
const FIG2_RANGE: (f64, f64) = (1e-2, 1e2);
const FIG2_POINTS: usize = 160;

struct Curves {
    times: Vec<f64>,
    exact: Vec<GaussianParams>,
    short: Vec<GaussianParams>,
    long: Vec<GaussianParams>,
}

/// Exact and both linear-approximation trajectories on `[0, t_end]` with
/// fixed step `dt`, kept at the step indices in `keep`.
fn curves(s: &Scenario, dt: f64, t_end: f64, keep: &[usize]) -> Result<Curves> {
    let (a0, b0) = s.initial_alpha_beta();
    let cubic = analytic::build_cubic(s, a0, b0)?;
    let numerics = NumericsSpec { dt, t_end, sample_every: 1, ..NumericsSpec::default() };
    let short = dynamics::integrate_prescribed_gamma(s, &GammaModel::linear_short(s), a0, b0, &numerics)?;
    let long = dynamics::integrate_prescribed_gamma(s, &GammaModel::linear_long(s, a0, b0)?, a0, b0, &numerics)?;
    let times: Vec<f64> = keep.iter().map(|&k| short.times[k]).collect();
    let exact = times.iter().map(|&t| analytic::params_exact(&cubic, s, t)).collect::<decwt_core::Result<_>>()?;
    Ok(Curves {
        times,
        exact,
        short: keep.iter().map(|&k| short.values[k].clone()).collect(),
        long: keep.iter().map(|&k| long.values[k].clone()).collect(),
    })
}

fn series(label: String, t: &[f64], ps: &[GaussianParams], f: impl Fn(&GaussianParams) -> f64, color: &'static str, dash: Option<&'static str>) -> Series {
    Series { label, points: t.iter().zip(ps).map(|(&t, p)| (t, f(p))).collect(), color, dash }
}

fn provenance(name: &str, scenarios: &[&Scenario], method: &str) -> Vec<String> {
    let mut lines = vec![format!("decwt {} figure {name}", env!("CARGO_PKG_VERSION"))];
    for s in scenarios {
        lines.push(format!(
            "scenario {}: m={:?} hbar={:?} Lambda={:?} b={:?} t0={:?}",
            s.label, s.m, s.hbar, s.lambda, s.b, s.t0
        ));
    }
    lines.push(method.to_string());
    lines
}

fn fig1(s: &Scenario, linear: bool) -> Result<(Plot, Plot)> {
    let tb = s.characteristic_time()?;
    let t_end = 5.0 * tb;
    let per_point = 25;
    let dt = t_end / (FIG1_POINTS * per_point) as f64;
    let keep: Vec<usize> = (0..=FIG1_POINTS).map(|i| i * per_point).collect();
    let c = curves(s, dt, t_end, &keep)?;
    let t: Vec<f64> = c.times.iter().map(|t| t / tb).collect();
    let method = format!("time axis in units of t_b = {tb:?}; exact from the closed-form cubic, linear curves by RK4 with dt = {dt:?}");

    let gamma = Plot {
        title: format!("decoherence parameter gamma(t), {}", s.label),
        x_label: "t / t_b".into(),
        y_label: "gamma".into(),
        log_x: false,
        log_y: false,
        series: vec![
            series("exact".into(), &t, &c.exact, |p| p.gamma, "black", None),
            series("linear short-time".into(), &t, &c.short, |p| p.gamma, "#1f77b4", Some("6 3")),
            series("linear long-time".into(), &t, &c.long, |p| p.gamma, "#d62728", Some("2 3")),
        ],
        provenance: provenance("fig1a", &[s], &method),
    };
    let coherence = Plot {
        title: format!("coherence length, {}", s.label),
        x_label: "t / t_b".into(),
        y_label: "coherence length".into(),
        log_x: false,
        log_y: !linear,
        series: vec![
            series("exact".into(), &t, &c.exact, GaussianParams::coherence_length, "black", None),
            series("linear short-time".into(), &t, &c.short, GaussianParams::coherence_length, "#1f77b4", Some("6 3")),
            series("linear long-time".into(), &t, &c.long, GaussianParams::coherence_length, "#d62728", Some("2 3")),
        ],
        provenance: provenance("fig1b", &[s], &method),
    };
    Ok((gamma, coherence))
}

fn fig2(moderate: &Scenario, strong: &Scenario, linear: bool) -> Result<(Plot, Plot)> {
    let (lo, hi) = FIG2_RANGE;
    let mut keep: Vec<usize> = (0..=FIG2_POINTS)
        .map(|i| {
            let t = lo * (hi / lo).powf(i as f64 / FIG2_POINTS as f64);
            (t / FIG2_DT).round() as usize
        })
        .collect();
    keep.dedup();
    let method = format!("exact from the closed-form cubic, linear curves by RK4 with dt = {FIG2_DT:?}");
    let mut l_series = Vec::new();
    let mut w_series = Vec::new();
    for (s, color) in [(moderate, "black"), (strong, "#d62728")] {
        let c = curves(s, FIG2_DT, hi, &keep)?;
        for (ps, kind, dash) in [(&c.exact, "exact", None), (&c.short, "linear short", Some("6 3")), (&c.long, "linear long", Some("2 3"))] {
            let label = format!("{kind}, {}", s.label);
            l_series.push(series(label.clone(), &c.times, ps, GaussianParams::coherence_length, color, dash));
            w_series.push(series(label, &c.times, ps, GaussianParams::ensemble_width, color, dash));
        }
    }
    let log = !linear;
    let coherence = Plot {
        title: "coherence length".into(),
        x_label: "t".into(),
        y_label: "coherence length".into(),
        log_x: log,
        log_y: log,
        series: l_series,
        provenance: provenance("fig2a", &[moderate, strong], &method),
    };
    let width = Plot {
        title: "ensemble width".into(),
        x_label: "t".into(),
        y_label: "ensemble width".into(),
        log_x: log,
        log_y: log,
        series: w_series,
        provenance: provenance("fig2b", &[moderate, strong], &method),
    };
    Ok((coherence, width))
}

/// Write fig1a, fig1b (moderate scenario) and fig2a, fig2b (both scenarios).
/// `linear` turns off the logarithmic axes.
pub fn write_figures(moderate: &RunConfig, strong: &RunConfig, outdir: &Path, linear: bool) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(outdir).with_context(|| format!("creating {}", outdir.display()))?;
    let (f1a, f1b) = fig1(&moderate.scenario, linear)?;
    let (f2a, f2b) = fig2(&moderate.scenario, &strong.scenario, linear)?;
    let mut written = Vec::new();
    for (name, plot) in [("fig1a", f1a), ("fig1b", f1b), ("fig2a", f2a), ("fig2b", f2b)] {
        let path = outdir.join(format!("{name}.svg"));
        write_atomic(&path, &plot.render())?;
        written.push(path);
    }
    Ok(written)
}
