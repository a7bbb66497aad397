//! Physical and numerical parameters for a run, and the plain-text config
//! format that carries them.
//!
//! The config is one `key = value` per line with `#` comments. Every key is
//! optional; omitted keys take the defaults of [`RunConfig::default`], which
//! are natural units (`hbar = m = b = 1`) with the moderate decoherence rate.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Physical parameters of one decoherence scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub m: f64,
    pub hbar: f64,
    /// Long-wavelength decoherence rate.
    pub lambda: f64,
    /// Initial wave-packet width.
    pub b: f64,
    /// Width of the environmental conditional state.
    pub sigma: f64,
    /// Onset time of the logarithmic nonlinearity.
    pub t0: f64,
    pub label: String,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            m: 1.0,
            hbar: 1.0,
            lambda: 1.0,
            b: 1.0,
            sigma: 1.0,
            t0: 0.0,
            label: "default".to_string(),
        }
    }
}

impl Scenario {
    /// Natural units with `Lambda = 1`.
    pub fn moderate() -> Self {
        Self {
            label: "moderate".to_string(),
            ..Self::default()
        }
    }

    /// Natural units with `Lambda = 10`.
    pub fn strong() -> Self {
        Self {
            lambda: 10.0,
            label: "strong".to_string(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        positive("m", self.m)?;
        positive("hbar", self.hbar)?;
        positive("b", self.b)?;
        positive("sigma", self.sigma)?;
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(invalid("Lambda", format!("must be >= 0, got {}", self.lambda)));
        }
        if !self.t0.is_finite() {
            return Err(invalid("t0", "must be finite".to_string()));
        }
        if self.label.is_empty() || self.label.contains(['#', '\n', '\r', '=']) {
            return Err(invalid(
                "label",
                "must be non-empty and free of '#', '=' and newlines".to_string(),
            ));
        }
        Ok(())
    }

    /// Initial Gaussian parameters `(alpha0, beta0)` of a real packet of width `b`.
    pub fn initial_alpha_beta(&self) -> (f64, f64) {
        (1.0 / (4.0 * self.b * self.b), 0.0)
    }

    /// Characteristic localisation time `t_b = hbar / (Lambda b^2)`.
    pub fn characteristic_time(&self) -> Result<f64> {
        if self.lambda <= 0.0 {
            return Err(Error::NoDecoherence);
        }
        Ok(self.hbar / (self.lambda * self.b * self.b))
    }
}

/// Uniform periodic grid on `[-extent, extent)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec1D {
    pub n_points: usize,
    pub extent: f64,
}

impl GridSpec1D {
    pub fn new(n_points: usize, extent: f64) -> Result<Self> {
        let g = Self { n_points, extent };
        g.validate("grid")?;
        Ok(g)
    }

    pub fn validate(&self, field: &'static str) -> Result<()> {
        if self.n_points < 8 || !self.n_points.is_power_of_two() {
            return Err(invalid(
                field,
                format!("point count must be a power of two >= 8, got {}", self.n_points),
            ));
        }
        if !(self.extent > 0.0 && self.extent.is_finite()) {
            return Err(invalid(field, format!("extent must be positive, got {}", self.extent)));
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.extent / self.n_points as f64
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.extent + i as f64 * self.spacing()
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.coord(i)).collect()
    }

    /// Index of the grid point at the origin.
    pub fn center(&self) -> usize {
        self.n_points / 2
    }

    /// Angular wavenumbers in FFT order: `k = 2 pi n / (2 extent)` with
    /// `n` running over `0..N/2` then `-N/2..0`.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.n_points;
        let dk = std::f64::consts::PI / self.extent;
        (0..n)
            .map(|j| {
                let signed = if j < n / 2 { j as f64 } else { j as f64 - n as f64 };
                signed * dk
            })
            .collect()
    }
}

/// Grid over the rotated coordinates `y = tau - tau'`, `z = tau + tau'`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec2D {
    pub y_axis: GridSpec1D,
    pub z_axis: GridSpec1D,
}

impl GridSpec2D {
    pub fn validate(&self) -> Result<()> {
        self.y_axis.validate("y grid")?;
        self.z_axis.validate("z grid")
    }

    /// The grid for the marginal wavefunction: `tau = z/2` spans the same
    /// physical region as the diagonal of the density-matrix grid.
    pub fn tau_axis(&self) -> GridSpec1D {
        GridSpec1D {
            n_points: self.z_axis.n_points,
            extent: self.z_axis.extent / 2.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NumericsSpec {
    pub dt: f64,
    pub t_end: f64,
    /// Sampling stride in steps.
    pub sample_every: usize,
    /// Amplitude floor, relative to `max|a|`, under the logarithm.
    pub ln_floor: f64,
    /// Number of central points used by curvature fits (odd, >= 3).
    pub fit_window: usize,
}

impl Default for NumericsSpec {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_end: 2.0,
            sample_every: 100,
            ln_floor: 1e-15,
            fit_window: 9,
        }
    }
}

impl NumericsSpec {
    pub fn validate(&self) -> Result<()> {
        positive("dt", self.dt)?;
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(invalid("t_end", format!("must be >= 0, got {}", self.t_end)));
        }
        if self.sample_every == 0 {
            return Err(invalid("sample_every", "must be >= 1".to_string()));
        }
        positive("ln_floor", self.ln_floor)?;
        if self.fit_window < 3 || self.fit_window % 2 == 0 {
            return Err(invalid(
                "fit_window",
                format!("must be odd and >= 3, got {}", self.fit_window),
            ));
        }
        Ok(())
    }

    /// Number of whole steps covering `[0, t_end]`.
    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    /// Sample times `k * sample_every * dt` up to and including the last step.
    pub fn sample_times(&self) -> Vec<f64> {
        let n = self.n_steps();
        (0..=n)
            .filter(|k| k % self.sample_every == 0 || *k == n)
            .map(|k| k as f64 * self.dt)
            .collect()
    }
}

/// A fully validated parameter bundle.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub grid: GridSpec2D,
    pub numerics: NumericsSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::default(),
            grid: GridSpec2D {
                y_axis: GridSpec1D { n_points: 256, extent: 14.0 },
                z_axis: GridSpec1D { n_points: 256, extent: 36.0 },
            },
            numerics: NumericsSpec::default(),
        }
    }
}

/// Named parameter presets for moderate and strong decoherence.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    Moderate,
    Strong,
}

impl Preset {
    /// 512x512 grids with extents from the six-sigma rule at `t_end = 2`.
    pub fn config(self) -> RunConfig {
        let (scenario, extent_z) = match self {
            Preset::Moderate => (Scenario::moderate(), 36.0),
            Preset::Strong => (Scenario::strong(), 96.0),
        };
        RunConfig {
            scenario,
            grid: GridSpec2D {
                y_axis: GridSpec1D { n_points: 512, extent: 14.0 },
                z_axis: GridSpec1D { n_points: 512, extent: extent_z },
            },
            numerics: NumericsSpec::default(),
        }
    }
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "moderate" => Ok(Preset::Moderate),
            "strong" => Ok(Preset::Strong),
            other => Err(invalid("preset", format!("unknown preset `{other}`"))),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.grid.validate()?;
        self.numerics.validate()
    }

    /// Parse the `key = value` format. `origin` only labels diagnostics.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut seen: Vec<&str> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                path: origin.to_path_buf(),
                line: line_no,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| parse_err(format!("expected `key = value`, found `{line}`")))?;
            let key = key.trim();
            let value = value.trim();
            if seen.contains(&key) {
                return Err(parse_err(format!("duplicate key `{key}`")));
            }
            let float = || {
                value
                    .parse::<f64>()
                    .map_err(|_| parse_err(format!("`{key}`: expected a number, found `{value}`")))
            };
            let count = || {
                value.parse::<usize>().map_err(|_| {
                    parse_err(format!("`{key}`: expected a non-negative integer, found `{value}`"))
                })
            };
            let s = &mut cfg.scenario;
            let g = &mut cfg.grid;
            let n = &mut cfg.numerics;
            let known = match key {
                "m" => { s.m = float()?; "m" }
                "hbar" => { s.hbar = float()?; "hbar" }
                "Lambda" => { s.lambda = float()?; "Lambda" }
                "b" => { s.b = float()?; "b" }
                "sigma" => { s.sigma = float()?; "sigma" }
                "t0" => { s.t0 = float()?; "t0" }
                "label" => { s.label = value.to_string(); "label" }
                "n_y" => { g.y_axis.n_points = count()?; "n_y" }
                "n_z" => { g.z_axis.n_points = count()?; "n_z" }
                "extent_y" => { g.y_axis.extent = float()?; "extent_y" }
                "extent_z" => { g.z_axis.extent = float()?; "extent_z" }
                "dt" => { n.dt = float()?; "dt" }
                "t_end" => { n.t_end = float()?; "t_end" }
                "sample_every" => { n.sample_every = count()?; "sample_every" }
                "ln_floor" => { n.ln_floor = float()?; "ln_floor" }
                "fit_window" => { n.fit_window = count()?; "fit_window" }
                other => return Err(parse_err(format!("unknown key `{other}`"))),
            };
            seen.push(known);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Serialize to the config format. Floats use the shortest representation
    /// that parses back to the same bits.
    pub fn to_config_string(&self) -> String {
        let s = &self.scenario;
        let g = &self.grid;
        let n = &self.numerics;
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("label", s.label.clone());
        kv("m", format!("{:?}", s.m));
        kv("hbar", format!("{:?}", s.hbar));
        kv("Lambda", format!("{:?}", s.lambda));
        kv("b", format!("{:?}", s.b));
        kv("sigma", format!("{:?}", s.sigma));
        kv("t0", format!("{:?}", s.t0));
        kv("n_y", g.y_axis.n_points.to_string());
        kv("n_z", g.z_axis.n_points.to_string());
        kv("extent_y", format!("{:?}", g.y_axis.extent));
        kv("extent_z", format!("{:?}", g.z_axis.extent));
        kv("dt", format!("{:?}", n.dt));
        kv("t_end", format!("{:?}", n.t_end));
        kv("sample_every", n.sample_every.to_string());
        kv("ln_floor", format!("{:?}", n.ln_floor));
        kv("fit_window", n.fit_window.to_string());
        out
    }
}

/// Read and validate a config file.
pub fn load_scenario(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    RunConfig::parse(&text, path)
}

fn positive(field: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, format!("must be > 0, got {v}")))
    }
}

fn invalid(field: &'static str, reason: String) -> Error {
    Error::InvalidField { field, reason }
}
