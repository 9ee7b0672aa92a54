//! Layered JSON configuration: bundled preset, then config file, then
//! `--set` overrides, validated into a [`RunConfig`].

use std::fmt;

use cavsqueeze::steady_state::SolverConfig;
use cavsqueeze::sweep_opt::{linspace_step, Axis, DetuningMode, Truncation};
use cavsqueeze::SystemParams;
use serde::Deserialize;
use serde_json::{Map, Value};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self { path: path.into(), message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "config error: {}", self.message)
        } else {
            write!(f, "config error at `{}`: {}", self.path, self.message)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Preset {
    Fig2,
    Fig3,
}

impl Preset {
    pub fn source(self) -> &'static str {
        match self {
            Preset::Fig2 => include_str!("../presets/fig2.json"),
            Preset::Fig3 => include_str!("../presets/fig3.json"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum CommandKind {
    Point,
    Sweep,
    Optimize,
    Threshold,
    Homodyne,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    rabi: Option<f64>,
    delta_a: Option<f64>,
    delta_c: Option<f64>,
    coupling: Option<f64>,
    kappa: Option<f64>,
    gamma: Option<f64>,
    gamma_d: Option<f64>,
    n_max: Option<usize>,
    tol: Option<f64>,
    obs_tol: Option<f64>,
    chi_sq: Option<f64>,
    sweep: Option<RawSweep>,
    optimize: Option<RawOptimize>,
    threshold: Option<RawThreshold>,
    homodyne: Option<RawHomodyne>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    axis: Option<Axis>,
    values: Option<Vec<f64>>,
    from: Option<f64>,
    to: Option<f64>,
    step: Option<f64>,
    free_space: Option<bool>,
    truncation: Option<RawTruncation>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
enum RawTruncation {
    Converge,
    Fixed,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOptimize {
    axis: Option<Axis>,
    lo: Option<f64>,
    hi: Option<f64>,
    grid: Option<usize>,
    tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
enum RawMode {
    Fixed,
    Reoptimize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawThreshold {
    target: Option<f64>,
    lo: Option<f64>,
    hi: Option<f64>,
    mode: Option<RawMode>,
    delta_lo: Option<f64>,
    delta_hi: Option<f64>,
    grid: Option<usize>,
    delta_tol: Option<f64>,
    rel_tol: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHomodyne {
    i_fl: Option<f64>,
    i_lo: Option<f64>,
    variance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    pub axis: Axis,
    pub values: Vec<f64>,
    pub free_space: bool,
    pub truncation: Truncation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeOptions {
    pub axis: Axis,
    pub bracket: (f64, f64),
    pub grid: usize,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdOptions {
    pub target: f64,
    pub bracket: (f64, f64),
    pub mode: DetuningMode,
    pub rel_tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomodyneOptions {
    pub i_fl: f64,
    pub i_lo: f64,
    /// Taken from the steady state at `params` when absent.
    pub variance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CommandConfig {
    Point,
    Sweep(SweepOptions),
    Optimize(OptimizeOptions),
    Threshold(ThresholdOptions),
    Homodyne(HomodyneOptions),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: SystemParams,
    pub solver: SolverConfig,
    pub chi_sq: f64,
    pub command: CommandConfig,
    /// The merged document, echoed into JSON output.
    pub document: Value,
}

/// Parses a JSON object, reporting syntax errors against `origin`.
pub fn parse_document(text: &str, origin: &str) -> Result<Value, ConfigError> {
    let v: Value = serde_json::from_str(text).map_err(|e| ConfigError::new("", format!("{origin}: {e}")))?;
    if !v.is_object() {
        return Err(ConfigError::new("", format!("{origin}: top level must be an object")));
    }
    Ok(v)
}

/// Recursively overlays `top` onto `base`; objects merge, other values
/// replace.
pub fn merge(base: &mut Value, top: Value) {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            for (k, v) in t {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Applies one `key.path=value` override. The value is read as JSON and
/// falls back to a plain string.
pub fn apply_override(doc: &mut Value, assignment: &str) -> Result<(), ConfigError> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| ConfigError::new(assignment, "override must have the form key=value"))?;
    let path = path.trim();
    if path.is_empty() || path.split('.').any(str::is_empty) {
        return Err(ConfigError::new(path, "empty key in override"));
    }
    let value = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().to_string()));
    let mut node = doc;
    let keys: Vec<&str> = path.split('.').collect();
    for key in &keys[..keys.len() - 1] {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| ConfigError::new(path, format!("`{key}` is inside a non-object value")))?;
        node = obj.entry(key.to_string()).or_insert_with(|| Value::Object(Map::new()));
    }
    let obj = node.as_object_mut().ok_or_else(|| ConfigError::new(path, "parent is not an object"))?;
    obj.insert(keys[keys.len() - 1].to_string(), value);
    Ok(())
}

/// Merges the layers and validates the result for `command`.
pub fn build(
    preset: Option<Preset>,
    file: Option<(&str, &str)>,
    overrides: &[String],
    command: CommandKind,
) -> Result<RunConfig, ConfigError> {
    let mut doc = Value::Object(Map::new());
    if let Some(p) = preset {
        merge(&mut doc, parse_document(p.source(), "preset")?);
    }
    if let Some((origin, text)) = file {
        merge(&mut doc, parse_document(text, origin)?);
    }
    for o in overrides {
        apply_override(&mut doc, o)?;
    }
    resolve(doc, command)
}

fn require<T>(v: Option<T>, path: &str) -> Result<T, ConfigError> {
    v.ok_or_else(|| ConfigError::new(path, "missing required key"))
}

fn positive(v: f64, path: &str) -> Result<f64, ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(ConfigError::new(path, format!("must be positive and finite, got {v}")))
    }
}

fn bracket(lo: f64, hi: f64, path: &str) -> Result<(f64, f64), ConfigError> {
    if lo.is_finite() && hi.is_finite() && hi > lo {
        Ok((lo, hi))
    } else {
        Err(ConfigError::new(path, format!("needs finite lo < hi, got [{lo}, {hi}]")))
    }
}

pub fn resolve(doc: Value, command: CommandKind) -> Result<RunConfig, ConfigError> {
    let raw: RawConfig = serde_path_to_error::deserialize(&doc).map_err(|e| {
        let path = e.path().to_string();
        ConfigError::new(if path == "." { String::new() } else { path }, e.into_inner().to_string())
    })?;

    let needs_params = match command {
        CommandKind::Homodyne => raw.homodyne.as_ref().is_none_or(|h| h.variance.is_none()),
        _ => true,
    };
    let d = SystemParams::default();
    let params = if needs_params {
        SystemParams {
            rabi: require(raw.rabi, "rabi")?,
            delta_a: require(raw.delta_a, "delta_a")?,
            delta_c: require(raw.delta_c, "delta_c")?,
            coupling: raw.coupling.unwrap_or(d.coupling),
            kappa: require(raw.kappa, "kappa")?,
            gamma: require(raw.gamma, "gamma")?,
            gamma_d: raw.gamma_d.unwrap_or(d.gamma_d),
            n_max: raw.n_max.unwrap_or(d.n_max),
        }
    } else {
        d
    };
    if needs_params {
        params.validate().map_err(|e| ConfigError::new(e.field, e.reason))?;
    }

    let defaults = SolverConfig::default();
    let solver = SolverConfig {
        tol: positive(raw.tol.unwrap_or(defaults.tol), "tol")?,
        obs_tol: positive(raw.obs_tol.unwrap_or(defaults.obs_tol), "obs_tol")?,
        ..defaults
    };
    if params.n_max > solver.hard_cap {
        return Err(ConfigError::new("n_max", format!("exceeds the hard cap {}", solver.hard_cap)));
    }
    let chi_sq = positive(raw.chi_sq.unwrap_or(1.0), "chi_sq")?;

    let command = match command {
        CommandKind::Point => CommandConfig::Point,
        CommandKind::Sweep => CommandConfig::Sweep(sweep_options(require(raw.sweep, "sweep")?)?),
        CommandKind::Optimize => {
            let o = require(raw.optimize, "optimize")?;
            let grid = o.grid.unwrap_or(cavsqueeze::sweep_opt::DEFAULT_GRID);
            if grid < 3 {
                return Err(ConfigError::new("optimize.grid", "needs at least 3 points"));
            }
            CommandConfig::Optimize(OptimizeOptions {
                axis: o.axis.unwrap_or(Axis::DeltaA),
                bracket: bracket(require(o.lo, "optimize.lo")?, require(o.hi, "optimize.hi")?, "optimize.hi")?,
                grid,
                tol: positive(o.tol.unwrap_or(1e-6), "optimize.tol")?,
            })
        }
        CommandKind::Threshold => CommandConfig::Threshold(threshold_options(require(raw.threshold, "threshold")?)?),
        CommandKind::Homodyne => {
            let h = require(raw.homodyne, "homodyne")?;
            let intensity = |v: Option<f64>, path: &str| {
                let v = require(v, path)?;
                if v >= 0.0 && v.is_finite() {
                    Ok(v)
                } else {
                    Err(ConfigError::new(path, format!("must be non-negative and finite, got {v}")))
                }
            };
            CommandConfig::Homodyne(HomodyneOptions {
                i_fl: intensity(h.i_fl, "homodyne.i_fl")?,
                i_lo: intensity(h.i_lo, "homodyne.i_lo")?,
                variance: match h.variance {
                    Some(v) if !v.is_finite() => return Err(ConfigError::new("homodyne.variance", "must be finite")),
                    v => v,
                },
            })
        }
    };
    Ok(RunConfig { params, solver, chi_sq, command, document: doc })
}

fn sweep_options(s: RawSweep) -> Result<SweepOptions, ConfigError> {
    let axis = require(s.axis, "sweep.axis")?;
    let values = match (s.values, s.from, s.to, s.step) {
        (Some(v), None, None, None) => v,
        (None, Some(from), Some(to), Some(step)) => {
            positive(step, "sweep.step")?;
            if !(from.is_finite() && to.is_finite() && to >= from) {
                return Err(ConfigError::new("sweep.to", format!("needs from <= to, got [{from}, {to}]")));
            }
            linspace_step(from, to, step)
        }
        (Some(_), ..) => return Err(ConfigError::new("sweep.values", "give either values or from/to/step, not both")),
        (None, from, to, _) => {
            let missing = if from.is_none() {
                "sweep.from"
            } else if to.is_none() {
                "sweep.to"
            } else {
                "sweep.step"
            };
            return Err(ConfigError::new(missing, "missing required key"));
        }
    };
    let spec = cavsqueeze::sweep_opt::SweepSpec::new(SystemParams::default(), axis, values.clone());
    spec.validate().map_err(|e| ConfigError::new("sweep.values", e.to_string()))?;
    Ok(SweepOptions {
        axis,
        values,
        free_space: s.free_space.unwrap_or(false),
        truncation: match s.truncation.unwrap_or(RawTruncation::Converge) {
            RawTruncation::Converge => Truncation::Converge,
            RawTruncation::Fixed => Truncation::Fixed,
        },
    })
}

fn threshold_options(t: RawThreshold) -> Result<ThresholdOptions, ConfigError> {
    let target = require(t.target, "threshold.target")?;
    if !target.is_finite() {
        return Err(ConfigError::new("threshold.target", "must be finite"));
    }
    let (lo, hi) = (require(t.lo, "threshold.lo")?, require(t.hi, "threshold.hi")?);
    if lo < 0.0 {
        return Err(ConfigError::new("threshold.lo", format!("dephasing rate must be nonnegative, got {lo}")));
    }
    let mode = match t.mode.unwrap_or(RawMode::Fixed) {
        RawMode::Fixed => DetuningMode::Fixed,
        RawMode::Reoptimize => {
            let grid = t.grid.unwrap_or(9);
            if grid < 3 {
                return Err(ConfigError::new("threshold.grid", "needs at least 3 points"));
            }
            DetuningMode::Reoptimize {
                bracket: bracket(
                    require(t.delta_lo, "threshold.delta_lo")?,
                    require(t.delta_hi, "threshold.delta_hi")?,
                    "threshold.delta_hi",
                )?,
                grid,
                tol: positive(t.delta_tol.unwrap_or(1e-4), "threshold.delta_tol")?,
            }
        }
    };
    Ok(ThresholdOptions {
        target,
        bracket: bracket(lo, hi, "threshold.hi")?,
        mode,
        rel_tol: positive(t.rel_tol.unwrap_or(1e-3), "threshold.rel_tol")?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn preset_with(overrides: &[&str], command: CommandKind) -> Result<RunConfig, ConfigError> {
        let o: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
        build(Some(Preset::Fig2), None, &o, command)
    }

    #[test]
    fn presets_parse_for_every_command() {
        for preset in [Preset::Fig2, Preset::Fig3] {
            for cmd in [CommandKind::Point, CommandKind::Sweep, CommandKind::Optimize, CommandKind::Threshold] {
                build(Some(preset), None, &[], cmd).unwrap();
            }
        }
        let c = preset_with(&[], CommandKind::Point).unwrap();
        assert_eq!(c.params.gamma, 13.0 / 300.0);
        assert_eq!((c.params.rabi, c.params.kappa, c.params.delta_c), (14.0, 1.58, -34.0));
    }

    #[test]
    fn published_parameters_parse() {
        let text = r#"{"rabi": 14, "kappa": 1.58, "gamma": 0.0433333333333333, "delta_c": -34, "coupling": 1, "delta_a": -19}"#;
        let c = build(None, Some(("fig.json", text)), &[], CommandKind::Point).unwrap();
        assert_eq!(c.params.n_max, 6);
    }

    #[test]
    fn negative_kappa_names_the_key() {
        let e = preset_with(&["kappa=-1"], CommandKind::Point).unwrap_err();
        assert_eq!(e.path, "kappa");
    }

    #[test]
    fn override_beats_file() {
        let text = r#"{"rabi": 14, "kappa": 1.58, "gamma": 0.04, "delta_c": -34, "delta_a": -19}"#;
        let c = build(None, Some(("f", text)), &["delta_a=-21.5".into()], CommandKind::Point).unwrap();
        assert_eq!(c.params.delta_a, -21.5);
    }

    #[test]
    fn unknown_keys_are_errors() {
        let e = preset_with(&["kapa=1"], CommandKind::Point).unwrap_err();
        assert_eq!(e.path, "kapa");
        let e = preset_with(&["sweep.stepp=1"], CommandKind::Sweep).unwrap_err();
        assert_eq!(e.path, "sweep.stepp");
    }

    #[test]
    fn type_mismatch_names_the_key() {
        let e = preset_with(&["optimize.grid=\"many\""], CommandKind::Optimize).unwrap_err();
        assert_eq!(e.path, "optimize.grid");
    }

    #[test]
    fn missing_keys_are_reported() {
        let e = build(None, Some(("f", r#"{"rabi": 1}"#)), &[], CommandKind::Point).unwrap_err();
        assert_eq!(e.path, "delta_a");
        let e = preset_with(&["sweep.step=null"], CommandKind::Sweep).unwrap_err();
        assert_eq!(e.path, "sweep.step");
    }

    #[test]
    fn string_overrides_and_nesting() {
        let c = preset_with(
            &["sweep.axis=kappa", "sweep.values=[1, 2, 3]", "sweep.from=null", "sweep.to=null", "sweep.step=null"],
            CommandKind::Sweep,
        )
        .unwrap();
        match c.command {
            CommandConfig::Sweep(s) => {
                assert_eq!(s.axis, Axis::Kappa);
                assert_eq!(s.values, vec![1.0, 2.0, 3.0]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn non_monotone_sweep_rejected() {
        let e = preset_with(
            &["sweep.values=[1, 1]", "sweep.from=null", "sweep.to=null", "sweep.step=null"],
            CommandKind::Sweep,
        )
        .unwrap_err();
        assert_eq!(e.path, "sweep.values");
    }

    #[test]
    fn homodyne_without_params() {
        let text = r#"{"homodyne": {"i_fl": 1, "i_lo": 10, "variance": -0.236}}"#;
        let c = build(None, Some(("f", text)), &[], CommandKind::Homodyne).unwrap();
        assert_eq!(
            c.command,
            CommandConfig::Homodyne(HomodyneOptions { i_fl: 1.0, i_lo: 10.0, variance: Some(-0.236) })
        );
        let e = build(None, Some(("f", text)), &["homodyne.i_lo=-1".into()], CommandKind::Homodyne).unwrap_err();
        assert_eq!(e.path, "homodyne.i_lo");
    }

    #[test]
    fn malformed_override() {
        assert!(preset_with(&["delta_a"], CommandKind::Point).is_err());
        assert!(preset_with(&["rabi.x=1"], CommandKind::Point).is_err());
    }
}
