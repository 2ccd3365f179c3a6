//! Run configuration: a TOML document with one table per block.
//!
//! ```toml
//! experiment = "solve"
//!
//! [domain]
//! shape = "disk"
//! radius = 1.0
//!
//! [equation]
//! gamma = 0.5
//! f = 1.0
//!
//! [mesh]
//! h = 0.0625
//!
//! [boundary]
//! kind = "constant"
//! value = 0.0
//! ```

use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};

/// Configuration errors. Each variant is its own message class.
#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    Syntax { line: usize, column: usize, message: String },
    UnknownKey { key: String, line: usize, column: usize },
    Range { key: String, message: String },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Syntax { line, column, message } => {
                write!(f, "syntax error at line {line}, column {column}: {message}")
            }
            ConfigError::UnknownKey { key, line, column } => {
                write!(f, "unknown key `{key}` at line {line}, column {column}")
            }
            ConfigError::Range { key, message } => write!(f, "range violation for `{key}`: {message}"),
        }
    }
}

impl std::error::Error for ConfigError {}

fn range_err(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Range {
        key: key.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Spectral,
    Solve,
    Ode,
    Fit,
    Recursion,
    Harnack,
    Counterexample,
    Probe,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Spectral => "spectral",
            Experiment::Solve => "solve",
            Experiment::Ode => "ode",
            Experiment::Fit => "fit",
            Experiment::Recursion => "recursion",
            Experiment::Harnack => "harnack",
            Experiment::Counterexample => "counterexample",
            Experiment::Probe => "probe",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Sector,
    Cap,
    Disk,
    Rectangle,
    Flat,
    Bumpy,
    Line,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainBlock {
    pub shape: Option<Shape>,
    /// Sector opening.
    pub theta: Option<f64>,
    /// Cap polar angle.
    pub alpha: Option<f64>,
    /// Sector, disk or bump-circle radius.
    pub radius: Option<f64>,
    pub center: Option<[f64; 2]>,
    pub lo: Option<[f64; 2]>,
    pub hi: Option<[f64; 2]>,
    pub x_range: Option<[f64; 2]>,
    pub top: Option<f64>,
    pub i_max: Option<u32>,
    /// Line length; the interval is `[0, length]`.
    pub length: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceProfile {
    Constant,
    /// `f = f_min + (f_max − f_min)(1 + sin 2πx₁ sin 2πx₂)/2`.
    Oscillating,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquationBlock {
    pub gamma: Option<f64>,
    /// Constant source value.
    pub f: Option<f64>,
    pub profile: Option<SourceProfile>,
    pub f_min: Option<f64>,
    pub f_max: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshBlock {
    pub h: Option<f64>,
    pub nr: Option<usize>,
    pub n_omega: Option<usize>,
    pub grading: Option<f64>,
    /// Line intervals.
    pub intervals: Option<usize>,
    /// Cap eigenproblem grid size.
    pub nodes: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverBlock {
    pub newton_tol: Option<f64>,
    pub eps0: Option<f64>,
    pub eps_factor: Option<f64>,
    pub eps_min: Option<f64>,
    pub max_newton: Option<usize>,
    pub final_exact: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryKind {
    /// `value` on every boundary node.
    Constant,
    /// `value` on the outer arc of a sector, zero elsewhere.
    Outer,
    /// `value · x₂`.
    Height,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryBlock {
    pub kind: Option<BoundaryKind>,
    pub value: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OdeKind {
    Flat,
    Angular,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OdeBlock {
    pub kind: Option<OdeKind>,
    /// Initial slope (γ < 1).
    pub k: Option<f64>,
    /// Energy constant (γ ≥ 1).
    pub c: Option<f64>,
    pub t_max: Option<f64>,
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitModel {
    Pure,
    Log,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitBlock {
    pub t_min: Option<f64>,
    pub t_max: Option<f64>,
    pub samples: Option<usize>,
    pub model: Option<FitModel>,
    /// Fixed power of the log-augmented model.
    pub phi: Option<f64>,
    /// Value on the outer arc.
    pub outer: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecursionKindCfg {
    Ak,
    Geometric,
    Harmonic,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecursionBlock {
    pub kind: Option<RecursionKindCfg>,
    pub a1: Option<f64>,
    pub q_big: Option<f64>,
    pub q: Option<f64>,
    pub k_max: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarnackBlock {
    pub outer_u: Option<f64>,
    pub outer_v: Option<f64>,
    /// Probe depths along the bisector, largest first.
    pub depths: Option<Vec<f64>>,
    /// Radius of the ball around the vertex used for sup and inf.
    pub region_radius: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CounterexampleBlock {
    pub radius: Option<f64>,
    pub i_max: Option<u32>,
    pub k: Option<f64>,
    pub slope_margin: Option<f64>,
    pub apex_index: Option<u32>,
    pub depths: Option<[f64; 4]>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeBlock {
    pub caps: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    pub dir: Option<String>,
    pub precision: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    /// Dotted path of a scalar key, e.g. `domain.theta`.
    pub key: String,
    pub values: Vec<toml::Value>,
}

/// A parsed and validated run configuration.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Option<Experiment>,
    pub domain: Option<DomainBlock>,
    pub equation: Option<EquationBlock>,
    pub mesh: Option<MeshBlock>,
    pub solver: Option<SolverBlock>,
    pub boundary: Option<BoundaryBlock>,
    pub ode: Option<OdeBlock>,
    pub fit: Option<FitBlock>,
    pub recursion: Option<RecursionBlock>,
    pub harnack: Option<HarnackBlock>,
    pub counterexample: Option<CounterexampleBlock>,
    pub probe: Option<ProbeBlock>,
    pub output: Option<OutputBlock>,
    pub sweep: Option<SweepBlock>,
}

fn line_col(text: &str, span: Option<Range<usize>>) -> (usize, usize) {
    let Some(span) = span else { return (0, 0) };
    let upto = &text[..span.start.min(text.len())];
    let line = upto.matches('\n').count() + 1;
    let column = upto.chars().rev().take_while(|&c| c != '\n').count() + 1;
    (line, column)
}

/// Parses a TOML document without validating ranges.
pub fn parse_raw(text: &str) -> Result<RunConfig, ConfigError> {
    if let Err(e) = text.parse::<toml::Table>() {
        let (line, column) = line_col(text, e.span());
        return Err(ConfigError::Syntax {
            line,
            column,
            message: e.message().to_string(),
        });
    }
    toml::from_str::<RunConfig>(text).map_err(|e| {
        let (line, column) = line_col(text, e.span());
        let msg = e.message();
        match msg.strip_prefix("unknown field `").and_then(|s| s.split('`').next()) {
            Some(key) => ConfigError::UnknownKey {
                key: key.to_string(),
                line,
                column,
            },
            None => ConfigError::Range {
                key: format!("line {line}"),
                message: msg.to_string(),
            },
        }
    })
}

/// Parses and fully validates a run configuration.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let cfg = parse_raw(text)?;
    cfg.validate()?;
    Ok(cfg)
}

fn positive(key: &str, v: Option<f64>) -> Result<(), ConfigError> {
    match v {
        Some(x) if !(x > 0.0 && x.is_finite()) => Err(range_err(key, format!("{x} must be positive and finite"))),
        _ => Ok(()),
    }
}

fn within(key: &str, v: Option<f64>, lo: f64, hi: f64) -> Result<(), ConfigError> {
    match v {
        Some(x) if !(x > lo && x < hi) => Err(range_err(key, format!("{x} outside ({lo}, {hi})"))),
        _ => Ok(()),
    }
}

fn require<'a, T>(key: &str, v: &'a Option<T>) -> Result<&'a T, ConfigError> {
    v.as_ref().ok_or_else(|| range_err(key, "required for this experiment"))
}

impl RunConfig {
    pub fn experiment(&self) -> Result<Experiment, ConfigError> {
        self.experiment.ok_or_else(|| range_err("experiment", "required"))
    }

    pub fn domain(&self) -> Result<&DomainBlock, ConfigError> {
        require("domain", &self.domain)
    }

    pub fn equation(&self) -> Result<&EquationBlock, ConfigError> {
        require("equation", &self.equation)
    }

    pub fn mesh(&self) -> Result<&MeshBlock, ConfigError> {
        require("mesh", &self.mesh)
    }

    pub fn gamma(&self) -> Result<f64, ConfigError> {
        Ok(*require("equation.gamma", &self.equation()?.gamma)?)
    }

    pub fn shape(&self) -> Result<Shape, ConfigError> {
        Ok(*require("domain.shape", &self.domain()?.shape)?)
    }

    pub fn precision(&self) -> usize {
        self.output.as_ref().and_then(|o| o.precision).unwrap_or(17)
    }

    /// Checks every numeric range and the blocks the experiment needs.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if let Some(d) = &self.domain {
            within("domain.theta", d.theta, 0.0, 2.0 * std::f64::consts::PI)?;
            within("domain.alpha", d.alpha, 0.0, std::f64::consts::PI)?;
            positive("domain.radius", d.radius)?;
            positive("domain.top", d.top)?;
            positive("domain.length", d.length)?;
            if let Some([a, b]) = d.x_range {
                if !(a < b) {
                    return Err(range_err("domain.x_range", "need x_range[0] < x_range[1]"));
                }
            }
            if let (Some(lo), Some(hi)) = (d.lo, d.hi) {
                if !(lo[0] < hi[0] && lo[1] < hi[1]) {
                    return Err(range_err("domain.hi", "need lo < hi componentwise"));
                }
            }
            if d.i_max == Some(0) {
                return Err(range_err("domain.i_max", "must be at least 1"));
            }
        }
        if let Some(e) = &self.equation {
            positive("equation.gamma", e.gamma)?;
            positive("equation.f", e.f)?;
            positive("equation.f_min", e.f_min)?;
            positive("equation.f_max", e.f_max)?;
            if let (Some(a), Some(b)) = (e.f_min, e.f_max) {
                if a > b {
                    return Err(range_err("equation.f_max", "must be at least f_min"));
                }
            }
        }
        if let Some(m) = &self.mesh {
            within("mesh.h", m.h, 0.0, 1.0)?;
            positive("mesh.grading", m.grading)?;
            for (key, v, min) in [
                ("mesh.nr", m.nr, 4),
                ("mesh.n_omega", m.n_omega, 4),
                ("mesh.intervals", m.intervals, 2),
                ("mesh.nodes", m.nodes, 64),
            ] {
                if let Some(n) = v {
                    if n < min {
                        return Err(range_err(key, format!("{n} below the minimum {min}")));
                    }
                }
            }
            if let Some(g) = m.grading {
                if !(1.0..2.0).contains(&g) && self.domain.as_ref().and_then(|d| d.shape) != Some(Shape::Line) {
                    return Err(range_err("mesh.grading", "polar grading must lie in [1, 2)"));
                }
            }
        }
        if let Some(s) = &self.solver {
            within("solver.newton_tol", s.newton_tol, 0.0, 1.0)?;
            positive("solver.eps0", s.eps0)?;
            within("solver.eps_factor", s.eps_factor, 0.0, 1.0)?;
            positive("solver.eps_min", s.eps_min)?;
            if s.max_newton == Some(0) {
                return Err(range_err("solver.max_newton", "must be positive"));
            }
        }
        if let Some(o) = &self.ode {
            positive("ode.t_max", o.t_max)?;
            positive("ode.k", o.k)?;
            if let Some(n) = o.samples {
                if n < 2 {
                    return Err(range_err("ode.samples", "need at least two samples"));
                }
            }
        }
        if let Some(f) = &self.fit {
            positive("fit.t_min", f.t_min)?;
            positive("fit.t_max", f.t_max)?;
            positive("fit.phi", f.phi)?;
            if let (Some(a), Some(b)) = (f.t_min, f.t_max) {
                if a >= b {
                    return Err(range_err("fit.t_max", "must exceed fit.t_min"));
                }
            }
            if let Some(n) = f.samples {
                if n < 12 {
                    return Err(range_err("fit.samples", "need at least 12 samples"));
                }
            }
        }
        if let Some(r) = &self.recursion {
            positive("recursion.a1", r.a1)?;
            if let Some(q) = r.q_big {
                if !(q > 0.0 && q <= 1.0) {
                    return Err(range_err("recursion.q_big", format!("{q} outside (0, 1]")));
                }
            }
            within("recursion.q", r.q, 0.0, 1.0)?;
            if let Some(k) = r.k_max {
                if !(1..=100_000_000).contains(&k) {
                    return Err(range_err("recursion.k_max", format!("{k} outside [1, 1e8]")));
                }
            }
        }
        if let Some(h) = &self.harnack {
            positive("harnack.outer_u", h.outer_u)?;
            positive("harnack.outer_v", h.outer_v)?;
            positive("harnack.region_radius", h.region_radius)?;
            if let Some(d) = &h.depths {
                if d.is_empty() || d.iter().any(|t| !(*t > 0.0)) || d.windows(2).any(|w| w[1] >= w[0]) {
                    return Err(range_err("harnack.depths", "must be positive and strictly decreasing"));
                }
            }
        }
        if let Some(c) = &self.counterexample {
            positive("counterexample.radius", c.radius)?;
            positive("counterexample.k", c.k)?;
            if let Some(m) = c.slope_margin {
                if !(m >= 1.0) {
                    return Err(range_err("counterexample.slope_margin", "must be at least 1"));
                }
            }
        }
        if let Some(p) = &self.probe {
            if let Some(c) = &p.caps {
                if c.is_empty() || c.iter().any(|m| !(*m > 0.0)) || c.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(range_err("probe.caps", "must be positive and strictly increasing"));
                }
            }
        }
        if let Some(o) = &self.output {
            if let Some(p) = o.precision {
                if !(1..=17).contains(&p) {
                    return Err(range_err("output.precision", format!("{p} outside [1, 17]")));
                }
            }
        }
        if let Some(s) = &self.sweep {
            if s.values.is_empty() {
                return Err(range_err("sweep.values", "the sweep axis is empty"));
            }
            if s.key.starts_with("sweep") || s.key.split('.').any(str::is_empty) {
                return Err(range_err("sweep.key", format!("`{}` is not a sweepable key", s.key)));
            }
        }
        match self.experiment {
            Some(e) => self.validate_blocks(e),
            None => Ok(()),
        }
    }

    fn validate_blocks(&self, e: Experiment) -> Result<(), ConfigError> {
        match e {
            Experiment::Spectral => {
                self.gamma()?;
                match self.shape()? {
                    Shape::Sector => {
                        require("domain.theta", &self.domain()?.theta)?;
                    }
                    Shape::Cap => {
                        require("domain.alpha", &self.domain()?.alpha)?;
                    }
                    s => return Err(range_err("domain.shape", format!("{s:?} has no spherical cross-section"))),
                }
            }
            Experiment::Solve => {
                self.gamma()?;
                self.mesh()?;
                require("boundary", &self.boundary)?;
                self.shape()?;
            }
            Experiment::Ode => {
                self.gamma()?;
                let o = require("ode", &self.ode)?;
                if o.kind == Some(OdeKind::Angular) {
                    require("domain.theta", &self.domain()?.theta)?;
                }
            }
            Experiment::Fit | Experiment::Harnack | Experiment::Probe => {
                self.gamma()?;
                self.mesh()?;
                if self.shape()? != Shape::Sector {
                    return Err(range_err("domain.shape", "this experiment runs on a sector"));
                }
                require("domain.theta", &self.domain()?.theta)?;
                match e {
                    Experiment::Fit => {
                        require("fit", &self.fit)?;
                    }
                    Experiment::Harnack => {
                        require("harnack", &self.harnack)?;
                    }
                    _ => {
                        require("probe.caps", &require("probe", &self.probe)?.caps)?;
                    }
                }
            }
            Experiment::Recursion => {
                let r = require("recursion", &self.recursion)?;
                if r.kind.unwrap_or(RecursionKindCfg::Ak) == RecursionKindCfg::Ak {
                    self.gamma()?;
                }
            }
            Experiment::Counterexample => {
                let g = self.gamma()?;
                if !(g < 1.0) {
                    return Err(range_err("equation.gamma", "the construction needs γ < 1"));
                }
                require("mesh.h", &self.mesh()?.h)?;
                require("counterexample", &self.counterexample)?;
            }
        }
        Ok(())
    }
}

/// Sets the dotted `key` of a TOML table to `value`, creating tables on the way.
pub fn set_key(table: &mut toml::Table, key: &str, value: toml::Value) -> Result<(), ConfigError> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().ok_or_else(|| range_err("sweep.key", "empty key"))?;
    let mut t = table;
    for p in parts {
        let entry = t
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        t = entry
            .as_table_mut()
            .ok_or_else(|| range_err("sweep.key", format!("`{p}` is not a table")))?;
    }
    if matches!(t.get(last), Some(toml::Value::Table(_))) {
        return Err(range_err("sweep.key", format!("`{key}` names a table, not a scalar")));
    }
    t.insert(last.to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "experiment = \"spectral\"\n[domain]\nshape = \"sector\"\ntheta = 1.5707963\n[equation]\ngamma = 0.3333\n";

    #[test]
    fn minimal_spectral_config_is_valid() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.experiment, Some(Experiment::Spectral));
        assert_eq!(c.gamma().unwrap(), 0.3333);
    }

    #[test]
    fn negative_gamma_is_a_range_violation() {
        let text = MINIMAL.replace("0.3333", "-1");
        match parse_config(&text) {
            Err(ConfigError::Range { key, .. }) => assert_eq!(key, "equation.gamma"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn misspelled_key_is_named() {
        let text = MINIMAL.replace("gamma", "gama");
        match parse_config(&text) {
            Err(ConfigError::UnknownKey { key, line, .. }) => {
                assert_eq!(key, "gama");
                assert_eq!(line, 6);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn syntax_error_reports_position() {
        let text = "experiment = \"spectral\"\n[domain\nshape = 1\n";
        match parse_config(text) {
            Err(ConfigError::Syntax { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn error_classes_have_distinct_messages() {
        let a = parse_config("x = ").unwrap_err().to_string();
        let b = parse_config(&MINIMAL.replace("gamma", "gama")).unwrap_err().to_string();
        let c = parse_config(&MINIMAL.replace("0.3333", "-1")).unwrap_err().to_string();
        assert!(a.starts_with("syntax error"));
        assert!(b.starts_with("unknown key"));
        assert!(c.starts_with("range violation"));
    }

    #[test]
    fn missing_block_is_reported() {
        let text = "experiment = \"solve\"\n[equation]\ngamma = 0.5\n";
        assert!(matches!(parse_config(text), Err(ConfigError::Range { .. })));
    }

    #[test]
    fn empty_sweep_axis_is_rejected() {
        let text = format!("{MINIMAL}[sweep]\nkey = \"domain.theta\"\nvalues = []\n");
        match parse_config(&text) {
            Err(ConfigError::Range { key, .. }) => assert_eq!(key, "sweep.values"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn set_key_creates_nested_tables() {
        let mut t = toml::Table::new();
        set_key(&mut t, "domain.theta", toml::Value::Float(1.0)).unwrap();
        assert_eq!(t["domain"]["theta"].as_float(), Some(1.0));
        assert!(set_key(&mut t, "domain", toml::Value::Float(1.0)).is_err());
    }
}
