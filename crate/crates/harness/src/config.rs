//! Experiment configuration as a flat map of dotted keys.
//!
//! A config file holds either `key = value` lines or JSON. Nested JSON
//! objects flatten to dotted keys and arrays to comma lists, so both forms
//! describe the same map. A manifest from an earlier run is accepted too:
//! its `spec` object is the fully resolved configuration.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use mala_core::dynamics::{Kernel, RunConfig};
use mala_core::oracle1d::Grid1D;
use mala_core::potential::{builtin_potential, validate_assumptions, Builtin, ProbeBox};
use mala_core::Potential;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::hrange::parse_h_list;

/// Raw, uncanonicalized key/value pairs from one source.
pub type RawConfig = BTreeMap<String, String>;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("unknown key `{0}` (the schema is listed in CONFIG.md)")]
    UnknownKey(String),
    #[error("duplicate key `{0}`")]
    Duplicate(String),
    #[error("invalid value for `{key}`: {reason}")]
    Value { key: String, reason: String },
    #[error("malformed JSON config: {0}")]
    Json(String),
    #[error("cannot read {path}: {reason}")]
    Io { path: String, reason: String },
    #[error("{0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Experiment {
    Sample,
    Couple,
    KernelTv,
    ExitProb,
    RejectScaling,
    Lyapunov,
    Transience,
    Minorization,
    Classify,
    TwoTerm,
    ValidatePotential,
}

pub const EXPERIMENT_NAMES: &[&str] = &[
    "sample",
    "couple",
    "kernel-tv",
    "exit-prob",
    "reject-scaling",
    "lyapunov",
    "transience",
    "minorization",
    "classify",
    "two-term",
    "validate-potential",
];

impl Experiment {
    pub const ALL: [Experiment; 11] = [
        Experiment::Sample,
        Experiment::Couple,
        Experiment::KernelTv,
        Experiment::ExitProb,
        Experiment::RejectScaling,
        Experiment::Lyapunov,
        Experiment::Transience,
        Experiment::Minorization,
        Experiment::Classify,
        Experiment::TwoTerm,
        Experiment::ValidatePotential,
    ];

    pub fn as_str(self) -> &'static str {
        EXPERIMENT_NAMES[self as usize]
    }

    /// Whether `--h` means the step-size list `probe.h` rather than `run.h`.
    pub fn sweeps_h(self) -> bool {
        matches!(self, Experiment::RejectScaling | Experiment::Minorization)
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Experiment::ALL.into_iter().find(|e| e.as_str() == s).ok_or_else(|| {
            format!(
                "unknown experiment `{s}` (expected one of: {})",
                EXPERIMENT_NAMES.join(", ")
            )
        })
    }
}

/// Where a resolved value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    Default,
    File,
    Flag,
    /// Set on the command line, replacing a value from the config file.
    FlagOverFile,
    /// Computed from other values, e.g. `run.theta = auto`.
    Derived,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Text,
    Real,
    /// A real or the literal `auto`.
    RealOrAuto,
    Count,
    Flag,
    /// Comma-separated reals; may be empty.
    Reals,
    /// Step-size list, see [`parse_h_list`].
    HList,
    Choice(&'static [&'static str]),
}

#[derive(Debug, Clone, Copy)]
pub struct Key {
    pub name: &'static str,
    pub kind: Kind,
    pub doc: &'static str,
}

const fn key(name: &'static str, kind: Kind, doc: &'static str) -> Key {
    Key { name, kind, doc }
}

pub const SCHEMA: &[Key] = &[
    key("experiment", Kind::Choice(EXPERIMENT_NAMES), "experiment to run"),
    key(
        "potential.family",
        Kind::Text,
        "quadratic, quartic, even-power or double-well-confined",
    ),
    key(
        "potential.params",
        Kind::Reals,
        "family parameters: m for even-power, a for double-well-confined",
    ),
    key("potential.dim", Kind::Count, "dimension"),
    key("run.h", Kind::Real, "step size"),
    key("run.beta", Kind::Real, "inverse temperature"),
    key(
        "run.theta",
        Kind::RealOrAuto,
        "Lyapunov exponent theta in (0, beta); auto picks (beta - c) / 2",
    ),
    key(
        "run.e_star",
        Kind::Real,
        "patched level constant; E_h = e_star h^(-1/4)",
    ),
    key(
        "run.e_h",
        Kind::Real,
        "patched level E_h itself (overrides the e_star scaling)",
    ),
    key("run.seed", Kind::Count, "root seed"),
    key("run.steps", Kind::Count, "steps per chain"),
    key("run.replicas", Kind::Count, "independent chains"),
    key(
        "run.kernel",
        Kind::Choice(&["ula", "mala", "patched"]),
        "transition kernel",
    ),
    key("grid.lo", Kind::Real, "left end of the oracle grid"),
    key("grid.hi", Kind::Real, "right end of the oracle grid"),
    key("grid.nodes", Kind::Count, "number of grid nodes"),
    key(
        "probe.start",
        Kind::Reals,
        "start point (one value is broadcast to every coordinate)",
    ),
    key("probe.x", Kind::Reals, "evaluation point for reject-scaling"),
    key("probe.h", Kind::HList, "step sizes for sweeps, e.g. 2^-4..2^-12"),
    key("probe.p", Kind::Count, "moment order of E|1 - alpha|^p"),
    key(
        "probe.ell",
        Kind::Count,
        "polynomial order for Lyapunov and transience moments",
    ),
    key(
        "probe.k_max",
        Kind::Count,
        "number of blocks (or raw steps with probe.raw_steps)",
    ),
    key(
        "probe.raw_steps",
        Kind::Flag,
        "index curves by raw steps instead of blocks of floor(1/h) steps",
    ),
    key("probe.level", Kind::Real, "sublevel E for the minorization set {U < E}"),
    key(
        "probe.n_starts",
        Kind::Count,
        "start nodes for the minorization overlap",
    ),
    key("probe.ray_samples", Kind::Count, "radii per ray for the classifier"),
    key(
        "probe.method",
        Kind::Choice(&["quadrature", "gauss-hermite", "monte-carlo"]),
        "rejection moment method",
    ),
    key("probe.panels", Kind::Count, "quadrature panels"),
    key("probe.gh_nodes", Kind::Count, "Gauss-Hermite nodes"),
    key("probe.samples", Kind::Count, "Monte Carlo samples"),
    key(
        "probe.noise",
        Kind::Flag,
        "stochastic (true) or noiseless (false) transience runs",
    ),
    key(
        "probe.threshold",
        Kind::Real,
        "diverged fraction that counts as transient",
    ),
    key(
        "probe.form",
        Kind::Choice(&["exp_theta_u", "u_power_ell", "u_power_exp"]),
        "Lyapunov function",
    ),
    key("probe.n_probes", Kind::Count, "probe points for validate-potential"),
    key(
        "probe.box",
        Kind::Real,
        "half-width of the validate-potential probe box",
    ),
    key("probe.thin", Kind::Count, "trajectory thinning"),
    key(
        "probe.dump_kernel",
        Kind::Flag,
        "also write the kernel matrix as kernel.bin",
    ),
    key("output.dir", Kind::Text, "output directory"),
];

pub fn schema_key(name: &str) -> Option<&'static Key> {
    SCHEMA.iter().find(|k| k.name == name)
}

fn real(raw: &str) -> Result<f64, String> {
    let s = raw.trim();
    let v = if s.contains('^') {
        match parse_h_list(s)?.as_slice() {
            [v] => *v,
            _ => return Err(format!("`{s}` is not a single number")),
        }
    } else {
        s.parse::<f64>().map_err(|_| format!("`{s}` is not a number"))?
    };
    if !v.is_finite() {
        return Err(format!("`{s}` is not finite"));
    }
    Ok(v)
}

fn fmt_real(v: f64) -> String {
    if v == 0.0 {
        "0.0".into()
    } else {
        format!("{v:?}")
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| fmt_real(*x)).collect::<Vec<_>>().join(",")
}

fn reals(raw: &str) -> Result<Vec<f64>, String> {
    if raw.trim().is_empty() {
        return Ok(Vec::new());
    }
    raw.split(',').map(real).collect()
}

/// Canonical text for `raw` under `kind`; equal values canonicalize equally.
pub fn canonicalize(kind: Kind, raw: &str) -> Result<String, String> {
    let s = raw.trim();
    match kind {
        Kind::Text => {
            if s.is_empty() {
                Err("empty value".into())
            } else {
                Ok(s.to_string())
            }
        }
        Kind::Real => real(s).map(fmt_real),
        Kind::RealOrAuto if s == "auto" => Ok("auto".into()),
        Kind::RealOrAuto => real(s).map(fmt_real),
        Kind::Count => s
            .parse::<u64>()
            .map(|v| v.to_string())
            .map_err(|_| format!("`{s}` is not a non-negative integer")),
        Kind::Flag => match s.to_ascii_lowercase().as_str() {
            "true" | "yes" | "1" | "on" => Ok("true".into()),
            "false" | "no" | "0" | "off" => Ok("false".into()),
            _ => Err(format!("`{s}` is not a boolean")),
        },
        Kind::Reals => reals(s).map(|v| join(&v)),
        Kind::HList => parse_h_list(s).map(|v| join(&v)),
        Kind::Choice(opts) => {
            let l = s.to_ascii_lowercase();
            if opts.contains(&l.as_str()) {
                Ok(l)
            } else {
                Err(format!("`{s}` is not one of: {}", opts.join(", ")))
            }
        }
    }
}

/// Parses `key = value` lines. Blank lines and lines starting with `#` are
/// skipped; values may be wrapped in double quotes.
pub fn parse_kv(text: &str) -> Result<RawConfig, ConfigError> {
    let mut out = RawConfig::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line: i + 1,
            reason: "expected `key = value`".into(),
        })?;
        let k = k.trim();
        if k.is_empty() {
            return Err(ConfigError::Syntax {
                line: i + 1,
                reason: "empty key".into(),
            });
        }
        let v = v.trim();
        let v = v.strip_prefix('"').and_then(|v| v.strip_suffix('"')).unwrap_or(v);
        if out.insert(k.to_string(), v.to_string()).is_some() {
            return Err(ConfigError::Duplicate(k.to_string()));
        }
    }
    Ok(out)
}

fn scalar_json(key: &str, v: &Value) -> Result<String, ConfigError> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        Value::Bool(b) => Ok(b.to_string()),
        _ => Err(ConfigError::Value {
            key: key.into(),
            reason: "expected a string, number or boolean".into(),
        }),
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut RawConfig) -> Result<(), ConfigError> {
    match v {
        Value::Object(m) => {
            for (k, v) in m {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, v, out)?;
            }
            Ok(())
        }
        Value::Array(items) => {
            let parts = items
                .iter()
                .map(|x| scalar_json(prefix, x))
                .collect::<Result<Vec<_>, _>>()?;
            insert_unique(out, prefix, parts.join(","))
        }
        Value::Null => Err(ConfigError::Value {
            key: prefix.into(),
            reason: "null is not allowed".into(),
        }),
        other => {
            let s = scalar_json(prefix, other)?;
            insert_unique(out, prefix, s)
        }
    }
}

fn insert_unique(out: &mut RawConfig, key: &str, value: String) -> Result<(), ConfigError> {
    if key.is_empty() {
        return Err(ConfigError::Json("top level must be an object".into()));
    }
    if out.insert(key.to_string(), value).is_some() {
        return Err(ConfigError::Duplicate(key.to_string()));
    }
    Ok(())
}

/// Parses a JSON config, or the `spec` object of a manifest.
pub fn parse_json(text: &str) -> Result<RawConfig, ConfigError> {
    let v: Value = serde_json::from_str(text).map_err(|e| ConfigError::Json(e.to_string()))?;
    let Value::Object(m) = &v else {
        return Err(ConfigError::Json("top level must be an object".into()));
    };
    let body = match (m.get("tool"), m.get("spec")) {
        (Some(Value::String(t)), Some(spec)) if t == crate::manifest::TOOL => spec,
        _ => &v,
    };
    if !body.is_object() {
        return Err(ConfigError::Json("`spec` must be an object".into()));
    }
    let mut out = RawConfig::new();
    flatten("", body, &mut out)?;
    Ok(out)
}

/// JSON if the first non-blank character is `{`, key/value lines otherwise.
pub fn parse_config_text(text: &str) -> Result<RawConfig, ConfigError> {
    if text.trim_start().starts_with('{') {
        parse_json(text)
    } else {
        parse_kv(text)
    }
}

fn defaults(e: Experiment) -> Vec<(&'static str, String)> {
    let mut d: Vec<(&str, String)> = vec![
        ("potential.family", "quartic".into()),
        ("potential.params", String::new()),
        ("potential.dim", "1".into()),
        ("run.h", "0.01".into()),
        ("run.beta", "1".into()),
        ("run.theta", "auto".into()),
        ("run.seed", "0".into()),
        ("output.dir", format!("mala-lab-out/{e}")),
    ];
    let mut put = |k: &'static str, v: &str| {
        if let Some(slot) = d.iter_mut().find(|(n, _)| *n == k) {
            slot.1 = v.into();
        } else {
            d.push((k, v.into()));
        }
    };
    match e {
        Experiment::Sample => {
            put("run.kernel", "mala");
            put("run.steps", "10000");
            put("run.replicas", "1");
            put("probe.start", "0");
            put("probe.thin", "10");
        }
        Experiment::Couple => {
            put("run.steps", "10000");
            put("run.replicas", "100");
            put("probe.start", "0");
        }
        Experiment::KernelTv => {
            put("run.kernel", "mala");
            put("grid.nodes", "4001");
            put("probe.start", "1");
            put("probe.k_max", "20");
            put("probe.raw_steps", "false");
            put("probe.dump_kernel", "false");
        }
        Experiment::ExitProb => {
            put("grid.nodes", "4001");
            put("probe.start", "0");
            put("probe.k_max", "20");
            put("probe.raw_steps", "false");
        }
        Experiment::RejectScaling => {
            put("probe.x", "1");
            put("probe.h", "2^-4..2^-12");
            put("probe.p", "1");
            put("probe.method", "quadrature");
            put("probe.panels", "96");
            put("probe.gh_nodes", "80");
            put("probe.samples", "100000");
        }
        Experiment::Lyapunov => {
            put("run.kernel", "mala");
            put("probe.form", "exp_theta_u");
            put("probe.ell", "2");
            put("grid.lo", "-2.6");
            put("grid.hi", "2.6");
            put("grid.nodes", "53");
        }
        Experiment::Transience => {
            put("run.kernel", "ula");
            put("run.steps", "10000");
            put("run.replicas", "1000");
            put("probe.start", "0");
            put("probe.ell", "2");
            put("probe.noise", "true");
            put("probe.threshold", "0.5");
        }
        Experiment::Minorization => {
            put("run.e_h", "4");
            put("probe.h", "0.05,0.025,0.0125");
            put("probe.level", "3");
            put("probe.n_starts", "41");
            put("grid.lo", "-4");
            put("grid.hi", "4");
            put("grid.nodes", "801");
        }
        Experiment::Classify => {
            put("probe.ray_samples", "16");
        }
        Experiment::TwoTerm => {
            put("run.h", "0.05");
            put("run.e_h", "4");
            put("probe.start", "1");
            put("probe.k_max", "40");
            put("grid.lo", "-4");
            put("grid.hi", "4");
            put("grid.nodes", "1601");
        }
        Experiment::ValidatePotential => {
            put("probe.n_probes", "1000");
            put("probe.box", "5");
        }
    }
    d
}

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub value: String,
    pub source: Source,
}

/// A fully resolved configuration: every key the experiment reads is
/// present in canonical form together with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub experiment: Experiment,
    entries: BTreeMap<String, Entry>,
}

fn checked(name: &str, raw: &str) -> Result<String, ConfigError> {
    let k = schema_key(name).ok_or_else(|| ConfigError::UnknownKey(name.to_string()))?;
    canonicalize(k.kind, raw).map_err(|reason| ConfigError::Value {
        key: name.into(),
        reason,
    })
}

impl ExperimentSpec {
    /// Merges file values, flag values and defaults (in decreasing
    /// priority: flag, file, default), then validates the result.
    pub fn resolve(experiment: Experiment, file: &RawConfig, flags: &RawConfig) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (k, v) in file {
            let value = checked(k, v)?;
            entries.insert(
                k.clone(),
                Entry {
                    value,
                    source: Source::File,
                },
            );
        }
        for (k, v) in flags {
            let value = checked(k, v)?;
            let source = if entries.contains_key(k) {
                Source::FlagOverFile
            } else {
                Source::Flag
            };
            entries.insert(k.clone(), Entry { value, source });
        }
        match entries.get("experiment") {
            Some(e) if e.value != experiment.as_str() => {
                return Err(invalid(format!(
                    "config is for experiment `{}` but `{experiment}` was requested",
                    e.value
                )))
            }
            Some(_) => {}
            None => {
                entries.insert(
                    "experiment".into(),
                    Entry {
                        value: experiment.as_str().into(),
                        source: Source::Flag,
                    },
                );
            }
        }
        for (k, v) in defaults(experiment) {
            if !entries.contains_key(k) {
                let value = checked(k, &v)?;
                entries.insert(
                    k.into(),
                    Entry {
                        value,
                        source: Source::Default,
                    },
                );
            }
        }
        let mut spec = Self { experiment, entries };
        spec.finalize()?;
        Ok(spec)
    }

    fn set(&mut self, key: &str, value: String, source: Source) {
        self.entries.insert(key.into(), Entry { value, source });
    }

    fn finalize(&mut self) -> Result<(), ConfigError> {
        match (self.get("run.e_star").is_some(), self.get("run.e_h").is_some()) {
            (true, true) => return Err(invalid("set at most one of run.e_star and run.e_h")),
            (false, false) => self.set("run.e_star", "1.0".into(), Source::Default),
            _ => {}
        }
        let p = self.potential()?;
        let beta = self.real("run.beta")?;
        if !(beta > 0.0) {
            return Err(invalid("run.beta must be positive"));
        }
        if self.text("run.theta")? == "auto" {
            let theta = auto_theta(&p, beta);
            self.set("run.theta", fmt_real(theta), Source::Derived);
        }
        self.run_config()?.validate().map_err(|e| invalid(e.to_string()))?;
        if let Some(hs) = self.get("probe.h") {
            if hs.is_empty() {
                return Err(invalid("probe.h is empty"));
            }
        }
        let dim = p.dim();
        for k in ["probe.start", "probe.x"] {
            if let Some(v) = self.get(k) {
                let n = reals(v).map_err(invalid)?.len();
                if n != 1 && n != dim {
                    return Err(invalid(format!("{k} has {n} values for dimension {dim}")));
                }
            }
        }
        let explicit = (self.get("grid.lo"), self.get("grid.hi"));
        match explicit {
            (Some(_), Some(_)) => {
                let (lo, hi) = (self.real("grid.lo")?, self.real("grid.hi")?);
                if !(lo < hi) {
                    return Err(invalid("grid.lo must be below grid.hi"));
                }
                if self.get("grid.nodes").is_none() {
                    self.set("grid.nodes", "4001".into(), Source::Default);
                }
            }
            (None, None) if matches!(self.experiment, Experiment::KernelTv | Experiment::ExitProb) => {
                let nodes = self.count("grid.nodes")?.max(2) as usize;
                let g = Grid1D::auto_cover(&p, beta, -6.0, 6.0, 12.0 / (nodes - 1) as f64)
                    .map_err(|e| invalid(format!("cannot build a grid: {e}")))?;
                let (lo, hi) = (g.nodes[0], g.nodes[g.len() - 1]);
                self.set("grid.lo", fmt_real(lo), Source::Derived);
                self.set("grid.hi", fmt_real(hi), Source::Derived);
                self.set("grid.nodes", g.len().to_string(), Source::Derived);
            }
            (None, None) => {}
            _ => return Err(invalid("set both grid.lo and grid.hi or neither")),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| e.value.as_str())
    }

    pub fn source(&self, key: &str) -> Option<Source> {
        self.entries.get(key).map(|e| e.source)
    }

    fn need(&self, key: &str) -> Result<&str, ConfigError> {
        self.get(key)
            .ok_or_else(|| invalid(format!("`{key}` is required for {}", self.experiment)))
    }

    fn bad(key: &str, reason: String) -> ConfigError {
        ConfigError::Value {
            key: key.into(),
            reason,
        }
    }

    pub fn text(&self, key: &str) -> Result<&str, ConfigError> {
        self.need(key)
    }

    pub fn real(&self, key: &str) -> Result<f64, ConfigError> {
        real(self.need(key)?).map_err(|r| Self::bad(key, r))
    }

    pub fn count(&self, key: &str) -> Result<u64, ConfigError> {
        self.need(key)?
            .parse()
            .map_err(|_| Self::bad(key, "not an integer".into()))
    }

    pub fn flag(&self, key: &str) -> Result<bool, ConfigError> {
        Ok(self.need(key)? == "true")
    }

    pub fn reals(&self, key: &str) -> Result<Vec<f64>, ConfigError> {
        reals(self.need(key)?).map_err(|r| Self::bad(key, r))
    }

    /// A point of dimension `dim`; a single value is broadcast.
    pub fn point(&self, key: &str, dim: usize) -> Result<Vec<f64>, ConfigError> {
        let v = self.reals(key)?;
        match v.len() {
            1 => Ok(vec![v[0]; dim]),
            n if n == dim => Ok(v),
            n => Err(Self::bad(key, format!("{n} values for dimension {dim}"))),
        }
    }

    pub fn potential(&self) -> Result<Builtin, ConfigError> {
        let dim = self.count("potential.dim")? as usize;
        builtin_potential(self.text("potential.family")?, &self.reals("potential.params")?, dim)
            .map_err(|e| invalid(e.to_string()))
    }

    pub fn kernel(&self) -> Result<Kernel, ConfigError> {
        self.text("run.kernel")?.parse().map_err(invalid)
    }

    pub fn run_config(&self) -> Result<RunConfig, ConfigError> {
        let mut cfg = RunConfig::new(self.real("run.h")?, self.real("run.beta")?).with_seed(self.count("run.seed")?);
        if let Some(s) = self.get("run.steps") {
            cfg = cfg.with_steps(s.parse().map_err(|_| Self::bad("run.steps", "not an integer".into()))?);
        }
        if let Ok(t) = self.real("run.theta") {
            cfg = cfg.with_theta(t);
        }
        if self.get("run.e_h").is_some() {
            cfg = cfg.with_level(self.real("run.e_h")?);
        } else if self.get("run.e_star").is_some() {
            cfg = cfg.with_e_star(self.real("run.e_star")?);
        }
        Ok(cfg)
    }

    pub fn grid(&self) -> Result<Grid1D, ConfigError> {
        Grid1D::uniform(
            self.real("grid.lo")?,
            self.real("grid.hi")?,
            self.count("grid.nodes")? as usize,
        )
        .map_err(|e| invalid(e.to_string()))
    }

    pub fn output_dir(&self) -> PathBuf {
        PathBuf::from(self.get("output.dir").unwrap_or("."))
    }

    /// Resolved values, canonical text.
    pub fn values(&self) -> BTreeMap<String, String> {
        self.entries.iter().map(|(k, e)| (k.clone(), e.value.clone())).collect()
    }

    pub fn provenance(&self) -> BTreeMap<String, Source> {
        self.entries.iter().map(|(k, e)| (k.clone(), e.source)).collect()
    }

    /// `key = value` lines, sorted, without `output.dir`.
    pub fn canonical_text(&self) -> String {
        self.entries
            .iter()
            .filter(|(k, _)| k.as_str() != "output.dir")
            .map(|(k, e)| format!("{k} = {}\n", e.value))
            .collect()
    }

    /// SHA-256 of [`Self::canonical_text`], hex encoded.
    pub fn config_hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_text().as_bytes()))
    }
}

/// `(beta - c) / 2` with `c` the fitted growth constant of the potential,
/// or `beta / 2` when no constant is available.
pub fn auto_theta(p: &dyn Potential, beta: f64) -> f64 {
    let probe = ProbeBox::cube(p.dim(), -5.0, 5.0);
    match validate_assumptions(p, beta, &probe, 512)
        .ok()
        .and_then(|r| r.fitted_c())
    {
        Some(c) if c >= 0.0 && c < beta => 0.5 * (beta - c),
        _ => 0.5 * beta,
    }
}

/// Reads and resolves a config file with no command-line overrides. The
/// file must name its experiment.
pub fn load_config(path: &Path) -> Result<ExperimentSpec, ConfigError> {
    let raw = read_config(path)?;
    let exp: Experiment = raw
        .get("experiment")
        .ok_or_else(|| invalid("config does not name an experiment"))?
        .trim()
        .parse()
        .map_err(invalid)?;
    ExperimentSpec::resolve(exp, &raw, &RawConfig::new())
}

pub fn read_config(path: &Path) -> Result<RawConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    parse_config_text(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn raw(pairs: &[(&str, &str)]) -> RawConfig {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn minimal_file_gets_defaults() {
        let f = parse_kv("experiment = classify\npotential.family = quartic\n").unwrap();
        let s = ExperimentSpec::resolve(Experiment::Classify, &f, &RawConfig::new()).unwrap();
        assert_eq!(s.real("run.h").unwrap(), 0.01);
        assert_eq!(s.real("run.beta").unwrap(), 1.0);
        assert_eq!(s.source("run.h"), Some(Source::Default));
        assert_eq!(s.source("run.theta"), Some(Source::Derived));
        let t = s.real("run.theta").unwrap();
        assert!(t > 0.0 && t < 1.0);
        assert_eq!(s.source("potential.family"), Some(Source::File));
    }

    #[test]
    fn flag_wins_over_file() {
        let f = raw(&[("run.h", "0.1")]);
        let g = raw(&[("run.h", "0.2")]);
        let s = ExperimentSpec::resolve(Experiment::Classify, &f, &g).unwrap();
        assert_eq!(s.real("run.h").unwrap(), 0.2);
        assert_eq!(s.source("run.h"), Some(Source::FlagOverFile));
    }

    #[test]
    fn theta_at_or_above_beta_is_rejected() {
        let f = raw(&[("run.theta", "1"), ("run.beta", "1")]);
        let err = ExperimentSpec::resolve(Experiment::Classify, &f, &RawConfig::new()).unwrap_err();
        assert!(err.to_string().contains("theta < beta"), "{err}");
    }

    #[test]
    fn unknown_and_duplicate_keys() {
        let f = raw(&[("run.hh", "0.1")]);
        assert_eq!(
            ExperimentSpec::resolve(Experiment::Classify, &f, &RawConfig::new()).unwrap_err(),
            ConfigError::UnknownKey("run.hh".into())
        );
        assert!(matches!(parse_kv("a = 1\na = 2"), Err(ConfigError::Duplicate(_))));
        assert!(matches!(
            parse_kv("no equals sign"),
            Err(ConfigError::Syntax { line: 1, .. })
        ));
    }

    #[test]
    fn kv_and_json_agree() {
        let kv = parse_kv("# comment\nexperiment = reject-scaling\nrun.beta = 2\nprobe.h = \"0.1,0.05\"\n").unwrap();
        let js =
            parse_json(r#"{"experiment": "reject-scaling", "run": {"beta": 2}, "probe": {"h": [0.1, 0.05]}}"#).unwrap();
        let a = ExperimentSpec::resolve(Experiment::RejectScaling, &kv, &RawConfig::new()).unwrap();
        let b = ExperimentSpec::resolve(Experiment::RejectScaling, &js, &RawConfig::new()).unwrap();
        assert_eq!(a.config_hash(), b.config_hash());
    }

    #[test]
    fn hash_ignores_output_dir_and_spelling() {
        let a = ExperimentSpec::resolve(
            Experiment::Classify,
            &raw(&[("run.h", "0.1"), ("output.dir", "a")]),
            &RawConfig::new(),
        )
        .unwrap();
        let b = ExperimentSpec::resolve(
            Experiment::Classify,
            &raw(&[("run.h", "1e-1"), ("output.dir", "b")]),
            &RawConfig::new(),
        )
        .unwrap();
        let c = ExperimentSpec::resolve(Experiment::Classify, &raw(&[("run.h", "0.2")]), &RawConfig::new()).unwrap();
        assert_eq!(a.config_hash(), b.config_hash());
        assert_ne!(a.config_hash(), c.config_hash());
        assert_eq!(a.config_hash().len(), 64);
    }

    #[test]
    fn resolved_spec_round_trips_through_kv() {
        let s = ExperimentSpec::resolve(Experiment::TwoTerm, &RawConfig::new(), &RawConfig::new()).unwrap();
        let again = parse_kv(&s.canonical_text()).unwrap();
        let t = ExperimentSpec::resolve(Experiment::TwoTerm, &again, &RawConfig::new()).unwrap();
        assert_eq!(s.config_hash(), t.config_hash());
        assert_eq!(s.values(), t.values());
    }

    #[test]
    fn semantic_errors() {
        let none = RawConfig::new();
        for bad in [
            raw(&[("experiment", "classify")]),
            raw(&[("run.e_star", "1"), ("run.e_h", "4")]),
            raw(&[("grid.lo", "1")]),
            raw(&[("grid.lo", "1"), ("grid.hi", "0")]),
            raw(&[("potential.family", "sextic")]),
            raw(&[("run.h", "-0.1")]),
            raw(&[("run.kernel", "hmc")]),
            raw(&[("probe.start", "1,2")]),
        ] {
            assert!(
                ExperimentSpec::resolve(Experiment::Sample, &bad, &none).is_err(),
                "{bad:?}"
            );
        }
    }

    #[test]
    fn oracle_grid_is_derived() {
        let s = ExperimentSpec::resolve(Experiment::KernelTv, &RawConfig::new(), &RawConfig::new()).unwrap();
        assert_eq!(s.source("grid.lo"), Some(Source::Derived));
        assert_eq!(s.real("grid.lo").unwrap(), -6.0);
        assert_eq!(s.count("grid.nodes").unwrap(), 4001);
    }

    #[test]
    fn manifest_spec_is_accepted() {
        let js = r#"{"tool": "mala-lab", "spec": {"experiment": "classify", "run.h": "0.5"}}"#;
        let r = parse_json(js).unwrap();
        assert_eq!(r.get("run.h").map(String::as_str), Some("0.5"));
        assert!(parse_json("[1,2]").is_err());
        assert!(parse_json(r#"{"a": null}"#).is_err());
        assert!(parse_json(r#"{"a": [[1]]}"#).is_err());
    }

    proptest! {
        #[test]
        fn canonical_reals_are_idempotent(v in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
            let once = canonicalize(Kind::Real, &v.to_string()).unwrap();
            let twice = canonicalize(Kind::Real, &once).unwrap();
            prop_assert_eq!(&once, &twice);
            prop_assert_eq!(once.parse::<f64>().unwrap(), if v == 0.0 { 0.0 } else { v });
        }

        #[test]
        fn kv_parser_never_panics(s in "(.{0,20}\n){0,5}") {
            let _ = parse_config_text(&s);
        }
    }
}
