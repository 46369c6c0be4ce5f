//! Flat `key=value` run configuration.
//!
//! A configuration file holds one assignment per line; `#` starts a comment.
//! Outputs written by the tool start with `#: key=value` lines holding the fully
//! resolved configuration. When a file contains such lines only they are read, so
//! any output can be fed back as `--config` to repeat the run. JSON outputs are
//! accepted too, through their `config` object.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use bjj_core::analysis::{LockingParams, Window};
use bjj_core::integrator::StepControl;
use bjj_core::model::{DampingKind, PhaseState, TrapParams};
use bjj_core::Error as CoreError;
use thiserror::Error;

/// Where a configuration value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Default,
    Line(usize),
    Json,
    CommandLine,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Default => write!(f, "default"),
            Origin::Line(n) => write!(f, "line {n}"),
            Origin::Json => write!(f, "json config"),
            Origin::CommandLine => write!(f, "command line"),
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: expected `key=value`, got `{text}`")]
    Malformed { line: usize, text: String },
    #[error("unknown key(s): {}", format_unknown(.0))]
    UnknownKeys(Vec<(String, usize)>),
    #[error("line {line}: `{key}` is set more than once")]
    Duplicate { key: String, line: usize },
    #[error("`{key}` ({origin}): {reason}")]
    Range { key: String, origin: Origin, reason: String },
    #[error("{path}: {reason}")]
    Json { path: String, reason: String },
    #[error("unknown preset `{0}` (see `bjj presets`)")]
    UnknownPreset(String),
}

fn format_unknown(keys: &[(String, usize)]) -> String {
    keys.iter()
        .map(|(k, line)| format!("`{k}` (line {line})"))
        .collect::<Vec<_>>()
        .join(", ")
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    Real,
    Count,
    Damping,
    Window,
}

/// Every accepted key, in the order they are echoed.
const KEYS: &[(&str, Kind)] = &[
    ("lambda", Kind::Real),
    ("de0", Kind::Real),
    ("de1", Kind::Real),
    ("omega", Kind::Real),
    ("eta", Kind::Real),
    ("damping", Kind::Damping),
    ("z0", Kind::Real),
    ("phi0", Kind::Real),
    ("t_end", Kind::Real),
    ("n_periods", Kind::Count),
    ("sample_dt", Kind::Real),
    ("discard", Kind::Count),
    ("abs_tol", Kind::Real),
    ("rel_tol", Kind::Real),
    ("h_init", Kind::Real),
    ("h_min", Kind::Real),
    ("h_max", Kind::Real),
    ("safety", Kind::Real),
    ("cluster_tol", Kind::Real),
    ("max_order", Kind::Count),
    ("chaos_spread_min", Kind::Real),
    ("window", Kind::Window),
    ("renorm_interval", Kind::Real),
    ("d0", Kind::Real),
    ("energy", Kind::Real),
    ("c0", Kind::Real),
    ("omega_min", Kind::Real),
    ("omega_max", Kind::Real),
    ("n_points", Kind::Count),
    ("z_min", Kind::Real),
    ("z_max", Kind::Real),
    ("n_z", Kind::Count),
];

#[derive(Debug, Clone, Copy, PartialEq)]
enum Value {
    Real(f64),
    Count(usize),
    Damping(DampingKind),
    Window(Window),
}

fn lookup(key: &str) -> Option<(&'static str, Kind)> {
    if key == "omega_pi" {
        return Some(("omega", Kind::Real));
    }
    KEYS.iter().find(|(k, _)| *k == key).copied()
}

fn range(key: &str, origin: Origin, reason: impl Into<String>) -> ConfigError {
    ConfigError::Range {
        key: key.to_string(),
        origin,
        reason: reason.into(),
    }
}

fn check_real(key: &str, x: f64, origin: Origin) -> Result<(), ConfigError> {
    let fail = |why: &str| Err(range(key, origin, format!("{why}, got {x}")));
    if !x.is_finite() {
        return fail("must be finite");
    }
    match key {
        "omega" | "eta" | "chaos_spread_min" if x < 0.0 => fail("must be >= 0"),
        "z0" if x.abs() >= 1.0 => fail("must lie strictly inside (-1, 1)"),
        "t_end" | "sample_dt" | "abs_tol" | "rel_tol" | "h_init" | "h_min" | "h_max" | "cluster_tol"
        | "renorm_interval" | "omega_min"
            if x <= 0.0 =>
        {
            fail("must be > 0")
        }
        "safety" if !(x > 0.0 && x < 1.0) => fail("must lie in (0, 1)"),
        "d0" if !(x > 0.0 && x < 1e-2) => fail("must lie in (0, 0.01)"),
        "z_min" | "z_max" if x.abs() > 1.0 => fail("must lie in [-1, 1]"),
        _ => Ok(()),
    }
}

fn check_count(key: &str, n: usize, origin: Origin) -> Result<(), ConfigError> {
    let min = match key {
        "n_periods" | "max_order" => 1,
        "n_points" | "n_z" => 2,
        _ => 0,
    };
    if n < min {
        return Err(range(key, origin, format!("must be at least {min}, got {n}")));
    }
    Ok(())
}

/// Accumulates assignments from presets, files and flags; later ones win.
#[derive(Debug, Clone, Default)]
pub struct ConfigBuilder {
    values: BTreeMap<&'static str, (Value, Origin)>,
}

impl ConfigBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Applies one assignment. Unknown keys are reported as a one-element list.
    pub fn set(&mut self, key: &str, raw: &str, origin: Origin) -> Result<(), ConfigError> {
        let key = key.trim();
        let raw = raw.trim();
        let line = match origin {
            Origin::Line(n) => n,
            _ => 0,
        };
        let (canonical, kind) = lookup(key).ok_or_else(|| ConfigError::UnknownKeys(vec![(key.to_string(), line)]))?;
        let value = match kind {
            Kind::Real => {
                let x: f64 = raw.parse().map_err(|_| range(key, origin, format!("`{raw}` is not a number")))?;
                let x = if key == "omega_pi" { x * PI } else { x };
                check_real(canonical, x, origin)?;
                Value::Real(x)
            }
            Kind::Count => {
                let n: usize = raw
                    .parse()
                    .map_err(|_| range(key, origin, format!("`{raw}` is not a non-negative integer")))?;
                check_count(canonical, n, origin)?;
                Value::Count(n)
            }
            Kind::Damping => Value::Damping(raw.parse().map_err(|e: String| range(key, origin, e))?),
            Kind::Window => Value::Window(raw.parse().map_err(|e: String| range(key, origin, e))?),
        };
        self.values.insert(canonical, (value, origin));
        Ok(())
    }

    /// Applies the text of a configuration file, an emitted CSV or an emitted JSON object.
    pub fn apply_text(&mut self, text: &str, name: &str) -> Result<(), ConfigError> {
        if text.trim_start().starts_with('{') {
            return self.apply_json(text, name);
        }
        let metadata_only = text.lines().any(|l| l.trim_start().starts_with("#:"));
        let mut seen: BTreeMap<&'static str, usize> = BTreeMap::new();
        let mut unknown = Vec::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw_line.trim();
            let body = if let Some(meta) = trimmed.strip_prefix("#:") {
                meta
            } else if metadata_only || trimmed.starts_with('#') {
                continue;
            } else {
                trimmed.split('#').next().unwrap_or("")
            };
            let body = body.trim();
            if body.is_empty() {
                continue;
            }
            let Some((key, value)) = body.split_once('=') else {
                return Err(ConfigError::Malformed { line, text: body.to_string() });
            };
            let key = key.trim();
            if key.is_empty() {
                return Err(ConfigError::Malformed { line, text: body.to_string() });
            }
            match lookup(key) {
                None => {
                    unknown.push((key.to_string(), line));
                    continue;
                }
                Some((canonical, _)) => {
                    if seen.insert(canonical, line).is_some() {
                        return Err(ConfigError::Duplicate { key: key.to_string(), line });
                    }
                }
            }
            self.set(key, value, Origin::Line(line))?;
        }
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::UnknownKeys(unknown))
        }
    }

    fn apply_json(&mut self, text: &str, name: &str) -> Result<(), ConfigError> {
        let json_err = |reason: String| ConfigError::Json { path: name.to_string(), reason };
        let doc: serde_json::Value = serde_json::from_str(text).map_err(|e| json_err(e.to_string()))?;
        let obj = doc.get("config").unwrap_or(&doc);
        let map = obj.as_object().ok_or_else(|| json_err("expected a `config` object".into()))?;
        let mut unknown = Vec::new();
        for (key, value) in map {
            if lookup(key).is_none() {
                unknown.push((key.clone(), 0));
                continue;
            }
            let raw = match value {
                serde_json::Value::String(s) => s.clone(),
                serde_json::Value::Number(n) => n.to_string(),
                other => return Err(json_err(format!("`{key}` has unsupported value {other}"))),
            };
            self.set(key, &raw, Origin::Json)?;
        }
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::UnknownKeys(unknown))
        }
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        self.apply_text(&text, &path.display().to_string())
    }

    fn real(&self, key: &str, default: f64) -> f64 {
        match self.values.get(key) {
            Some((Value::Real(x), _)) => *x,
            _ => default,
        }
    }

    fn count(&self, key: &str, default: usize) -> usize {
        match self.values.get(key) {
            Some((Value::Count(n), _)) => *n,
            _ => default,
        }
    }

    fn origin(&self, key: &str) -> Origin {
        self.values.get(key).map_or(Origin::Default, |(_, o)| *o)
    }

    /// Resolves defaults and checks the values against each other.
    pub fn build(&self) -> Result<RunConfig, ConfigError> {
        let damping = match self.values.get("damping") {
            Some((Value::Damping(d), _)) => *d,
            _ => DampingKind::default(),
        };
        let window = match self.values.get("window") {
            Some((Value::Window(w), _)) => *w,
            _ => Window::default(),
        };
        let trap = TrapParams {
            lambda: self.real("lambda", 10.0),
            de0: self.real("de0", 0.0),
            de1: self.real("de1", 0.0),
            omega: self.real("omega", 0.0),
            eta: self.real("eta", 0.0),
            damping,
        };
        let core = |e: CoreError| match e {
            CoreError::InvalidParameter { name, reason } => range(name, self.origin(name), reason),
            other => range("config", Origin::Default, other.to_string()),
        };
        trap.validate().map_err(core)?;

        let damped = trap.effective_eta() > 0.0;
        let period = trap.drive_period();
        let base = StepControl::for_trap(&trap);
        let step = StepControl {
            abs_tol: self.real("abs_tol", base.abs_tol),
            rel_tol: self.real("rel_tol", base.rel_tol),
            h_init: self.real("h_init", base.h_init),
            h_min: self.real("h_min", base.h_min),
            h_max: self.real("h_max", base.h_max),
            safety: self.real("safety", base.safety),
        };
        step.validate().map_err(core)?;

        let run = RunSettings {
            t_end: self.real("t_end", 100.0),
            n_periods: self.count("n_periods", if damped { 10_000 } else { 5000 }),
            sample_dt: self.real("sample_dt", 0.01),
            discard: self.count("discard", if damped { 2000 } else { 0 }),
        };
        if run.discard >= run.n_periods {
            return Err(range(
                "discard",
                self.origin("discard"),
                format!("must be below n_periods = {}", run.n_periods),
            ));
        }

        let defaults = LockingParams::default();
        let analysis = AnalysisSettings {
            cluster_tol: self.real("cluster_tol", defaults.cluster_tol),
            max_order: self.count("max_order", defaults.max_order),
            chaos_spread_min: self.real("chaos_spread_min", defaults.chaos_spread_min),
            window,
            renorm_interval: self.real("renorm_interval", period.unwrap_or(1.0)),
            d0: self.real("d0", 1e-8),
        };

        let separatrix = SeparatrixSettings {
            energy: self.real("energy", 0.5),
            c0: self.real("c0", 0.0),
            omega_min: self.real("omega_min", 0.05),
            omega_max: self.real("omega_max", 25.0),
            n_points: self.count("n_points", 400),
        };
        if separatrix.omega_max <= separatrix.omega_min {
            return Err(range("omega_max", self.origin("omega_max"), "must exceed omega_min"));
        }

        let potential = PotentialScan {
            z_min: self.real("z_min", -1.0),
            z_max: self.real("z_max", 1.0),
            n_z: self.count("n_z", 401),
        };
        if potential.z_max <= potential.z_min {
            return Err(range("z_max", self.origin("z_max"), "must exceed z_min"));
        }

        Ok(RunConfig {
            trap,
            initial: PhaseState::at_rest(self.real("z0", 0.5), self.real("phi0", 0.0)),
            step,
            run,
            analysis,
            separatrix,
            potential,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSettings {
    pub t_end: f64,
    pub n_periods: usize,
    pub sample_dt: f64,
    /// Leading stroboscopic points dropped before analysis or output.
    pub discard: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisSettings {
    pub cluster_tol: f64,
    pub max_order: usize,
    pub chaos_spread_min: f64,
    pub window: Window,
    pub renorm_interval: f64,
    pub d0: f64,
}

/// Inputs of the separatrix-based subcommands.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeparatrixSettings {
    /// Unperturbed energy `H` of the reference orbit.
    pub energy: f64,
    pub c0: f64,
    pub omega_min: f64,
    pub omega_max: f64,
    pub n_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialScan {
    pub z_min: f64,
    pub z_max: f64,
    pub n_z: usize,
}

/// Fully resolved configuration of one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub trap: TrapParams,
    pub initial: PhaseState,
    pub step: StepControl,
    pub run: RunSettings,
    pub analysis: AnalysisSettings,
    pub separatrix: SeparatrixSettings,
    pub potential: PotentialScan,
}

impl RunConfig {
    pub fn locking(&self) -> LockingParams {
        LockingParams {
            discard_periods: self.run.discard,
            cluster_tol: self.analysis.cluster_tol,
            max_order: self.analysis.max_order,
            chaos_spread_min: self.analysis.chaos_spread_min,
        }
    }

    /// Every key with its resolved value, formatted so that re-parsing is exact.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let t = &self.trap;
        let s = &self.step;
        let a = &self.analysis;
        let p = &self.separatrix;
        let real = |x: f64| format_real(x);
        let count = |n: usize| n.to_string();
        let values = [
            real(t.lambda),
            real(t.de0),
            real(t.de1),
            real(t.omega),
            real(t.eta),
            t.damping.name().to_string(),
            real(self.initial.z),
            real(self.initial.phi),
            real(self.run.t_end),
            count(self.run.n_periods),
            real(self.run.sample_dt),
            count(self.run.discard),
            real(s.abs_tol),
            real(s.rel_tol),
            real(s.h_init),
            real(s.h_min),
            real(s.h_max),
            real(s.safety),
            real(a.cluster_tol),
            count(a.max_order),
            real(a.chaos_spread_min),
            a.window.name().to_string(),
            real(a.renorm_interval),
            real(a.d0),
            real(p.energy),
            real(p.c0),
            real(p.omega_min),
            real(p.omega_max),
            count(p.n_points),
            real(self.potential.z_min),
            real(self.potential.z_max),
            count(self.potential.n_z),
        ];
        KEYS.iter().map(|(k, _)| *k).zip(values).collect()
    }
}

/// Seventeen significant digits, enough to reproduce any `f64` exactly.
pub fn format_real(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

/// Reads and resolves a configuration file.
pub fn parse_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let mut builder = ConfigBuilder::new();
    builder.apply_file(path)?;
    builder.build()
}
