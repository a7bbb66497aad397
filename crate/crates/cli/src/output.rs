//! CSV rows, atomic file writes and the run manifest.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use decwt_core::analytic::GaussianParams;
use decwt_core::observables::ObservableSample;
use decwt_core::scenario::RunConfig;

pub const CSV_HEADER: &str = "t,alpha,beta,gamma,delta,coherence_length,ensemble_width,purity,norm,flags";

/// One row of the per-route CSV; `None` columns are written empty.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Row {
    pub t: f64,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub delta: Option<f64>,
    pub coherence_length: Option<f64>,
    pub ensemble_width: Option<f64>,
    pub purity: Option<f64>,
    pub norm: Option<f64>,
    pub flags: String,
}

impl Row {
    pub fn from_params(p: &GaussianParams) -> Row {
        let norm = (2.0 * p.delta).exp() * (std::f64::consts::PI / (2.0 * p.alpha)).sqrt();
        Row {
            t: p.t,
            alpha: Some(p.alpha),
            beta: Some(p.beta),
            gamma: Some(p.gamma),
            delta: Some(p.delta),
            coherence_length: Some(p.coherence_length()),
            ensemble_width: Some(p.ensemble_width()),
            purity: Some(p.purity()),
            norm: Some(norm),
            flags: String::new(),
        }
    }

    pub fn from_sample(o: &ObservableSample) -> Row {
        Row {
            t: o.t,
            coherence_length: Some(o.coherence_length),
            ensemble_width: Some(o.ensemble_width),
            purity: Some(o.purity),
            norm: Some(o.trace_or_norm),
            flags: o.flags.to_string(),
            ..Row::default()
        }
    }

    fn write(&self, out: &mut String) {
        let cells = [
            self.alpha,
            self.beta,
            self.gamma,
            self.delta,
            self.coherence_length,
            self.ensemble_width,
            self.purity,
            self.norm,
        ];
        out.push_str(&num(self.t));
        for c in cells {
            out.push(',');
            if let Some(v) = c {
                out.push_str(&num(v));
            }
        }
        out.push(',');
        out.push_str(&self.flags);
        out.push('\n');
    }
}

/// Shortest exponent form that parses back to the same bits.
pub fn num(v: f64) -> String {
    format!("{v:e}")
}

pub fn rows_to_csv(rows: &[Row]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        r.write(&mut out);
    }
    out
}

/// Write through a hidden sibling and rename into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = path.with_file_name(format!(".{name}.partial"));
    {
        let mut f = fs::File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).with_context(|| format!("moving {} into place", path.display()))
}

/// Rows of several routes on a common time axis. Times are matched by step
/// index so rounding differences between routes do not split rows.
pub fn comparison_csv(dt: f64, routes: &[(&str, &[Row])]) -> String {
    const COLS: [&str; 4] = ["gamma", "coherence_length", "ensemble_width", "purity"];
    let mut table: BTreeMap<i64, (f64, Vec<Option<f64>>)> = BTreeMap::new();
    let width = COLS.len() * routes.len();
    for (ri, (_, rows)) in routes.iter().enumerate() {
        for r in rows.iter() {
            let key = (r.t / dt).round() as i64;
            let entry = table.entry(key).or_insert_with(|| (r.t, vec![None; width]));
            let vals = [r.gamma, r.coherence_length, r.ensemble_width, r.purity];
            entry.1[ri * COLS.len()..(ri + 1) * COLS.len()].copy_from_slice(&vals);
        }
    }
    let mut out = String::from("t");
    for (name, _) in routes {
        for c in COLS {
            let _ = write!(out, ",{name}_{c}");
        }
    }
    out.push('\n');
    for (t, vals) in table.values() {
        out.push_str(&num(*t));
        for v in vals {
            out.push(',');
            if let Some(v) = v {
                out.push_str(&num(*v));
            }
        }
        out.push('\n');
    }
    out
}

pub struct Manifest<'a> {
    pub command: &'a str,
    pub config: &'a RunConfig,
    pub routes: Vec<String>,
    pub outdir: &'a Path,
    /// `(route, status)` in execution order.
    pub status: Vec<(String, String)>,
}

impl Manifest<'_> {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "command = {}", self.command);
        let _ = writeln!(out, "label = {}", self.config.scenario.label);
        let _ = writeln!(out, "routes = {}", self.routes.join(","));
        let _ = writeln!(out, "outdir = {}", self.outdir.display());
        let _ = writeln!(out, "version = {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(
            out,
            "determinism = no random numbers; fixed-step integrators; identical configs give byte-identical CSVs"
        );
        let failed = self.status.iter().any(|(_, s)| !s.starts_with("ok"));
        let _ = writeln!(out, "result = {}", if failed { "failure" } else { "success" });
        out.push_str("\n[status]\n");
        for (route, s) in &self.status {
            let _ = writeln!(out, "{route} = {s}");
        }
        out.push_str("\n[config]\n");
        out.push_str(&self.config.to_config_string());
        out
    }
}
