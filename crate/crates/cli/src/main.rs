//! `decwt`: run decoherence scenarios, reproduce the comparison figures and
//! verify the structural identities.
//!
//! Exit codes: 0 success, 1 a route or check failed, 2 usage or config error,
//! 3 a field route hit the box boundary (aliasing sentinel).

mod figures;
mod output;
mod routes;
mod svg;
mod verify;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use decwt_core::scenario::{load_scenario, Preset, RunConfig};

use output::{comparison_csv, rows_to_csv, write_atomic, Manifest, Row};
use routes::{CheckpointPlan, Route, RouteOutput};

const EXIT_FAILURE: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_ALIASING: u8 = 3;

#[derive(Parser)]
#[command(name = "decwt", version, about = "Collisional decoherence of a free particle")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run solver routes and write one CSV per route plus a comparison CSV.
    Run(RunArgs),
    /// Write the gamma, coherence-length and ensemble-width figures as SVG.
    Figures(FigureArgs),
    /// Check identities and solver residuals; exit 0 iff all pass.
    Verify(ConfigArgs),
    /// Continue a master-eq or lse run from a checkpoint file.
    CheckpointResume(ResumeArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    Moderate,
    Strong,
}

impl From<PresetArg> for Preset {
    fn from(p: PresetArg) -> Preset {
        match p {
            PresetArg::Moderate => Preset::Moderate,
            PresetArg::Strong => Preset::Strong,
        }
    }
}

#[derive(Args)]
struct ConfigArgs {
    /// `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in scenario, used when no config is given (default: moderate).
    #[arg(long, value_enum, conflicts_with = "config")]
    preset: Option<PresetArg>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    /// Comma-separated routes.
    #[arg(long, value_enum, value_delimiter = ',', required = true)]
    routes: Vec<Route>,
    #[arg(long, default_value = "out")]
    outdir: PathBuf,
    /// Write field checkpoints every N steps (a multiple of sample_every).
    #[arg(long, value_name = "N")]
    checkpoint_every: Option<usize>,
}

#[derive(Args)]
struct FigureArgs {
    /// Moderate then strong scenario config; presets fill in whatever is missing.
    #[arg(long, num_args = 1, action = clap::ArgAction::Append)]
    config: Vec<PathBuf>,
    #[arg(long, default_value = "figures")]
    outdir: PathBuf,
    /// Linear axes everywhere instead of logarithmic ones.
    #[arg(long)]
    linear: bool,
}

#[derive(Args)]
struct ResumeArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    #[arg(long)]
    checkpoint: PathBuf,
    /// The route that wrote the checkpoint: master-eq or lse.
    #[arg(long, value_enum)]
    routes: Route,
    #[arg(long, default_value = "out")]
    outdir: PathBuf,
    #[arg(long, value_name = "N")]
    checkpoint_every: Option<usize>,
}

/// An error the user can fix by changing the command line or config.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Figures(a) => cmd_figures(a),
        Command::Verify(a) => cmd_verify(a),
        Command::CheckpointResume(a) => cmd_resume(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<Usage>().is_some() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::from(EXIT_FAILURE)
            }
        }
    }
}

fn load_config(path: Option<&Path>, preset: Option<PresetArg>) -> Result<RunConfig> {
    match path {
        Some(p) => load_scenario(p).map_err(|e| usage(format!("config {}: {e}", p.display()))),
        None => Ok(Preset::from(preset.unwrap_or(PresetArg::Moderate)).config()),
    }
}

fn checkpoint_plan(every: Option<usize>, cfg: &RunConfig, outdir: &Path) -> Result<Option<CheckpointPlan>> {
    let Some(every) = every else { return Ok(None) };
    let stride = cfg.numerics.sample_every;
    if every == 0 || every % stride != 0 {
        return Err(usage(format!("--checkpoint-every {every} must be a positive multiple of sample_every = {stride}")));
    }
    let dir = outdir.join("checkpoints");
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(Some(CheckpointPlan { dir, every }))
}

/// Write a route's CSV and side tables; returns its manifest status.
fn write_route(outdir: &Path, route: Route, out: &RouteOutput) -> Result<String> {
    write_atomic(&outdir.join(format!("{route}.csv")), &rows_to_csv(&out.rows))?;
    let mut files = vec![format!("{route}.csv")];
    for (name, contents) in &out.extra {
        write_atomic(&outdir.join(name), contents)?;
        files.push(name.clone());
    }
    let mut status = format!("ok ({}, {} rows)", files.join(", "), out.rows.len());
    if out.aliasing {
        status = format!("ok with aliasing ({}, {} rows)", files.join(", "), out.rows.len());
    }
    Ok(status)
}

fn cmd_run(args: RunArgs) -> Result<u8> {
    let cfg = load_config(args.cfg.config.as_deref(), args.cfg.preset)?;
    let mut requested = args.routes.clone();
    requested.sort();
    requested.dedup();
    if requested.is_empty() {
        return Err(usage("--routes is empty; choose from analytic, ode, master-eq, lse, gfunc, hierarchy"));
    }
    fs::create_dir_all(&args.outdir).with_context(|| format!("creating {}", args.outdir.display()))?;
    let plan = checkpoint_plan(args.checkpoint_every, &cfg, &args.outdir)?;

    let mut status = Vec::new();
    let mut done: Vec<(Route, Vec<Row>)> = Vec::new();
    let (mut failed, mut aliasing) = (false, false);
    for route in requested.iter().copied() {
        match routes::run_route(route, &cfg, plan.as_ref()) {
            Ok(out) => {
                aliasing |= out.aliasing;
                status.push((route.to_string(), write_route(&args.outdir, route, &out)?));
                done.push((route, out.rows));
            }
            Err(e) => {
                if routes::is_grid_error(&e) {
                    aliasing = true;
                } else {
                    failed = true;
                }
                eprintln!("route {route} failed: {e:#}");
                status.push((route.to_string(), format!("failed: {e:#}")));
            }
        }
    }

    let named: Vec<(&str, &[Row])> = done.iter().map(|(r, rows)| (r.name(), rows.as_slice())).collect();
    write_atomic(&args.outdir.join("comparison.csv"), &comparison_csv(cfg.numerics.dt, &named))?;
    let manifest = Manifest {
        command: "run",
        config: &cfg,
        routes: requested.iter().map(|r| r.to_string()).collect(),
        outdir: &args.outdir,
        status,
    };
    write_atomic(&args.outdir.join("MANIFEST"), &manifest.render())?;

    Ok(if failed {
        EXIT_FAILURE
    } else if aliasing {
        eprintln!("aliasing: the grid is too small for the field; enlarge extent_y/extent_z");
        EXIT_ALIASING
    } else {
        0
    })
}

fn cmd_resume(args: ResumeArgs) -> Result<u8> {
    let cfg = load_config(args.cfg.config.as_deref(), args.cfg.preset)?;
    if !matches!(args.routes, Route::MasterEq | Route::Lse) {
        return Err(usage(format!("route `{}` has no checkpoint; use master-eq or lse", args.routes)));
    }
    fs::create_dir_all(&args.outdir).with_context(|| format!("creating {}", args.outdir.display()))?;
    let plan = checkpoint_plan(args.checkpoint_every, &cfg, &args.outdir)?;
    let route = args.routes;
    let result = routes::resume_route(route, &cfg, &args.checkpoint, plan.as_ref());
    let (status, code) = match &result {
        Ok(out) => (write_route(&args.outdir, route, out)?, if out.aliasing { EXIT_ALIASING } else { 0 }),
        Err(e) => {
            eprintln!("route {route} failed: {e:#}");
            (format!("failed: {e:#}"), EXIT_FAILURE)
        }
    };
    let manifest = Manifest {
        command: "checkpoint-resume",
        config: &cfg,
        routes: vec![route.to_string()],
        outdir: &args.outdir,
        status: vec![(route.to_string(), format!("{status}; resumed from {}", args.checkpoint.display()))],
    };
    write_atomic(&args.outdir.join("MANIFEST"), &manifest.render())?;
    Ok(code)
}

fn cmd_figures(args: FigureArgs) -> Result<u8> {
    if args.config.len() > 2 {
        return Err(usage("figures takes at most two configs: moderate, then strong"));
    }
    let moderate = load_config(args.config.first().map(PathBuf::as_path), Some(PresetArg::Moderate))?;
    let strong = load_config(args.config.get(1).map(PathBuf::as_path), Some(PresetArg::Strong))?;
    for path in figures::write_figures(&moderate, &strong, &args.outdir, args.linear)? {
        println!("{}", path.display());
    }
    Ok(0)
}

fn cmd_verify(args: ConfigArgs) -> Result<u8> {
    let cfg = load_config(args.config.as_deref(), args.preset)?;
    let report = verify::run_verify(&cfg);
    print!("{}", report.table());
    if report.passed() {
        Ok(0)
    } else {
        for f in report.failures() {
            eprintln!("failed: {f}");
        }
        Ok(EXIT_FAILURE)
    }
}
