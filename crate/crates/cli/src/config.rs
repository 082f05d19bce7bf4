//! Experiment configuration: flat `key = value` text, named presets, and
//! resolution into harness specs.
//!
//! Values are layered: command defaults, then the config file, then
//! command-line flags. A resolved config serializes back to text that parses
//! to the same value.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use thiserror::Error;
use truncsde::coefficients::{AitSahaliaParams, CirParams, ModelSpec, ThreeHalvesParams};
use truncsde::harness::{RefMode, Sampling};
use truncsde::schemes::SchemeId;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("config line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("invalid value for `{key}`: {reason}")]
    Invalid { key: String, reason: String },
}

fn invalid(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Convergence,
    Positivity,
    Compare,
    Check,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Convergence => "convergence",
            Command::Positivity => "positivity",
            Command::Compare => "compare",
            Command::Check => "check",
        }
    }

    fn default_schemes(self) -> &'static str {
        match self {
            Command::Compare => "tem,bem",
            Command::Convergence => "tem,tmil",
            _ => "tem",
        }
    }

    fn default_dt(self) -> &'static str {
        match self {
            Command::Simulate => "2^-5",
            Command::Convergence | Command::Check => "2^-5..2^-9",
            Command::Positivity => "2^-3..2^-7",
            Command::Compare => "2^-12",
        }
    }
}

impl FromStr for Command {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        [
            Command::Simulate,
            Command::Convergence,
            Command::Positivity,
            Command::Compare,
            Command::Check,
        ]
        .into_iter()
        .find(|c| c.as_str() == s)
        .ok_or_else(|| invalid("command", format!("unknown command `{s}`")))
    }
}

/// Model family with a complete parameter record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelChoice {
    ThreeHalves {
        c1: f64,
        c2: f64,
        sigma: f64,
        x0: f64,
    },
    AitSahalia {
        a_m1: f64,
        a0: f64,
        a1: f64,
        a2: f64,
        b: f64,
        kappa: f64,
        theta: f64,
        x0: f64,
    },
    Cir {
        b1: f64,
        b2: f64,
        sigma: f64,
        x0: f64,
    },
}

impl ModelChoice {
    pub fn family(&self) -> &'static str {
        match self {
            ModelChoice::ThreeHalves { .. } => "three-halves",
            ModelChoice::AitSahalia { .. } => "ait-sahalia",
            ModelChoice::Cir { .. } => "cir-lamperti",
        }
    }

    fn fields(&self) -> Vec<(&'static str, f64)> {
        match *self {
            ModelChoice::ThreeHalves { c1, c2, sigma, x0 } => vec![("c1", c1), ("c2", c2), ("sigma", sigma), ("x0", x0)],
            ModelChoice::AitSahalia {
                a_m1,
                a0,
                a1,
                a2,
                b,
                kappa,
                theta,
                x0,
            } => vec![
                ("a_m1", a_m1),
                ("a0", a0),
                ("a1", a1),
                ("a2", a2),
                ("b", b),
                ("kappa", kappa),
                ("theta", theta),
                ("x0", x0),
            ],
            ModelChoice::Cir { b1, b2, sigma, x0 } => vec![("b1", b1), ("b2", b2), ("sigma", sigma), ("x0", x0)],
        }
    }

    pub fn build(&self) -> truncsde::Result<ModelSpec> {
        Ok(match *self {
            ModelChoice::ThreeHalves { c1, c2, sigma, x0 } => {
                ModelSpec::three_halves(ThreeHalvesParams::new(c1, c2, sigma, x0)?)
            }
            ModelChoice::AitSahalia {
                a_m1,
                a0,
                a1,
                a2,
                b,
                kappa,
                theta,
                x0,
            } => ModelSpec::ait_sahalia(AitSahaliaParams::new(a_m1, a0, a1, a2, b, kappa, theta, x0)?),
            ModelChoice::Cir { b1, b2, sigma, x0 } => ModelSpec::cir_lamperti(CirParams::new(b1, b2, sigma, x0)?),
        })
    }
}

/// Parameters and truncation defaults attached to a model name.
struct Preset {
    model: ModelChoice,
    l1: Option<f64>,
    gamma: Option<f64>,
}

fn preset(name: &str) -> Option<Preset> {
    let three_halves = ModelChoice::ThreeHalves {
        c1: 4.0,
        c2: 1.0,
        sigma: 1.0,
        x0: 2.0,
    };
    let ait = ModelChoice::AitSahalia {
        a_m1: 1.5,
        a0: 2.0,
        a1: 1.0,
        a2: 2.0,
        b: 1.0,
        kappa: 4.0,
        theta: 1.5,
        x0: 1.0,
    };
    let cir = ModelChoice::Cir {
        b1: 1.0,
        b2: 3.0,
        sigma: 1.0,
        x0: 3.0,
    };
    let p = |model, l1, gamma| Some(Preset { model, l1, gamma });
    match name {
        "example-3-2" => p(three_halves, Some(50.0), Some(0.5)),
        "example-ait" => p(ait, Some(50.0), None),
        "example-cir" => p(cir, None, None),
        "three-halves" => p(three_halves, None, None),
        "ait-sahalia" => p(ait, None, None),
        "cir-lamperti" => p(cir, None, None),
        _ => None,
    }
}

pub const MODEL_NAMES: [&str; 6] = [
    "example-3-2",
    "example-ait",
    "example-cir",
    "three-halves",
    "ait-sahalia",
    "cir-lamperti",
];

const PARAM_KEYS: [&str; 13] = [
    "c1", "c2", "sigma", "x0", "a_m1", "a0", "a1", "a2", "b", "kappa", "theta", "b1", "b2",
];

const KEYS: [&str; 13] = [
    "command", "model", "schemes", "dt", "paths", "T", "seed", "output", "l1", "gamma", "ref_m", "ref_mode", "threads",
];

/// Fully resolved experiment settings.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub command: Command,
    pub model: ModelChoice,
    pub schemes: Vec<SchemeId>,
    /// Strictly decreasing step sizes.
    pub dt: Vec<f64>,
    pub paths: usize,
    pub horizon: f64,
    pub seed: u64,
    pub output: Option<PathBuf>,
    /// Two-sided truncation overrides for TEM and TMil.
    pub l1: Option<f64>,
    pub gamma: Option<f64>,
    pub ref_m: u32,
    pub ref_mode: RefMode,
    pub threads: Option<usize>,
}

/// Raw `key → value` layer.
pub type RawConfig = BTreeMap<String, String>;

/// Parse flat `key = value` text; `#` starts a comment.
pub fn parse_text(text: &str) -> Result<RawConfig, ConfigError> {
    let mut out = RawConfig::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line: i + 1,
            reason: format!("expected `key = value`, got `{line}`"),
        })?;
        let k = k.trim();
        if !KEYS.contains(&k) && !PARAM_KEYS.contains(&k) {
            return Err(ConfigError::UnknownKey(k.to_string()));
        }
        out.insert(k.to_string(), v.trim().to_string());
    }
    Ok(out)
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    v.parse::<T>().map_err(|e| invalid(key, format!("`{v}`: {e}")))
}

/// A single step size: `2^-k`, `2^k` or a decimal.
fn parse_dt_item(s: &str) -> Result<f64, ConfigError> {
    let s = s.trim();
    if let Some(exp) = s.strip_prefix("2^") {
        let e: i32 = parse_num("dt", exp)?;
        return Ok(2f64.powi(e));
    }
    parse_num("dt", s)
}

/// Step-size list: comma-separated items or an inclusive dyadic range
/// `2^-a..2^-b`. The result is sorted strictly decreasing.
pub fn parse_dt_list(s: &str) -> Result<Vec<f64>, ConfigError> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let exponent = |t: &str| -> Result<i32, ConfigError> {
                let e = t
                    .trim()
                    .strip_prefix("2^")
                    .ok_or_else(|| invalid("dt", format!("range ends must look like 2^-k, got `{t}`")))?;
                parse_num("dt", e)
            };
            let (ea, eb) = (exponent(a)?, exponent(b)?);
            out.extend((ea.min(eb)..=ea.max(eb)).map(|e| 2f64.powi(e)));
        } else {
            out.push(parse_dt_item(part)?);
        }
    }
    if out.is_empty() {
        return Err(invalid("dt", "empty step-size list"));
    }
    if let Some(bad) = out.iter().find(|d| !(**d > 0.0 && d.is_finite())) {
        return Err(invalid("dt", format!("step sizes must be positive, got {bad}")));
    }
    out.sort_by(|a, b| b.total_cmp(a));
    out.dedup();
    Ok(out)
}

fn parse_ref_mode(s: &str) -> Result<RefMode, ConfigError> {
    if s == "self" {
        return Ok(RefMode::SelfScheme);
    }
    let scheme = s
        .strip_prefix("common:")
        .ok_or_else(|| invalid("ref_mode", format!("expected `self` or `common:<scheme>`, got `{s}`")))?;
    Ok(RefMode::CommonFine(scheme.parse().map_err(|e: truncsde::SdeError| invalid("ref_mode", e.to_string()))?))
}

fn ref_mode_str(m: RefMode) -> String {
    match m {
        RefMode::SelfScheme => "self".into(),
        RefMode::CommonFine(s) => format!("common:{s}"),
    }
}

impl ExperimentConfig {
    /// Resolve a layered raw config. `raw` must contain `command`.
    pub fn resolve(raw: &RawConfig) -> Result<Self, ConfigError> {
        let get = |k: &str| raw.get(k).map(String::as_str);
        let command: Command = get("command").ok_or_else(|| invalid("command", "missing"))?.parse()?;

        let model_name = get("model").unwrap_or("example-3-2");
        let preset = preset(model_name).ok_or_else(|| {
            invalid("model", format!("unknown model `{model_name}`; expected one of {}", MODEL_NAMES.join(", ")))
        })?;
        let mut model = preset.model;
        let allowed: Vec<&str> = model.fields().iter().map(|f| f.0).collect();
        for key in PARAM_KEYS {
            if let Some(v) = get(key) {
                if !allowed.contains(&key) {
                    return Err(invalid(key, format!("not a parameter of the {} model", model.family())));
                }
                let x: f64 = parse_num(key, v)?;
                set_param(&mut model, key, x);
            }
        }
        let spec = model.build().map_err(|e| invalid("model", e.to_string()))?;

        let schemes = get("schemes")
            .unwrap_or(command.default_schemes())
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<SchemeId>().map_err(|e| invalid("schemes", e.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        if schemes.is_empty() {
            return Err(invalid("schemes", "at least one scheme is required"));
        }
        if let Some(s) = schemes.iter().find(|s| !s.supports(spec.kind())) {
            return Err(invalid("schemes", format!("{s} is not available for the {} model", model.family())));
        }

        let dt = parse_dt_list(get("dt").unwrap_or(command.default_dt()))?;
        // an empty value clears an optional setting
        let opt_f64 = |k: &str| get(k).filter(|v| !v.is_empty()).map(|v| parse_num::<f64>(k, v)).transpose();
        let cfg = Self {
            command,
            model,
            schemes,
            dt,
            paths: get("paths").map(|v| parse_num("paths", v)).transpose()?.unwrap_or(1000),
            horizon: opt_f64("T")?.unwrap_or(2.0),
            seed: get("seed").map(|v| parse_num("seed", v)).transpose()?.unwrap_or(42),
            output: get("output").filter(|v| !v.is_empty()).map(PathBuf::from),
            l1: if raw.contains_key("l1") { opt_f64("l1")? } else { preset.l1 },
            gamma: if raw.contains_key("gamma") { opt_f64("gamma")? } else { preset.gamma },
            ref_m: get("ref_m").map(|v| parse_num("ref_m", v)).transpose()?.unwrap_or(12),
            ref_mode: get("ref_mode").map(parse_ref_mode).transpose()?.unwrap_or_default(),
            threads: get("threads").map(|v| parse_num("threads", v)).transpose()?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if self.ref_m > 30 {
            return Err(invalid("ref_m", "reference level above 30 is not supported"));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(invalid("T", "horizon must be positive"));
        }
        let sampling = self.sampling();
        for &dt in &self.dt {
            sampling.factor(dt).map_err(|_| {
                invalid(
                    "dt",
                    format!(
                        "dt must be dyadic multiple of reference step 2^-{} and divide T = {}, got {dt}",
                        self.ref_m, self.horizon
                    ),
                )
            })?;
        }
        if let Some(l1) = self.l1 {
            if !(l1 > 0.0 && l1.is_finite()) {
                return Err(invalid("l1", "must be finite and > 0"));
            }
        }
        if let Some(g) = self.gamma {
            if !(g > 0.0 && g <= 1.0) {
                return Err(invalid("gamma", "must lie in (0, 1]"));
            }
        }
        if self.command == Command::Simulate && self.schemes.len() != 1 {
            return Err(invalid("schemes", "simulate takes exactly one scheme"));
        }
        if matches!(self.command, Command::Simulate | Command::Compare) && self.dt.len() != 1 {
            return Err(invalid("dt", format!("{} takes exactly one step size", self.command.as_str())));
        }
        if self.threads == Some(0) {
            return Err(invalid("threads", "must be >= 1"));
        }
        Ok(())
    }

    pub fn sampling(&self) -> Sampling {
        Sampling {
            n_paths: self.paths,
            horizon: self.horizon,
            seed: self.seed,
            ref_m: self.ref_m,
        }
    }

    /// Canonical text form; parses back to an equal config.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("command", self.command.as_str().into());
        kv("model", self.model.family().into());
        for (k, v) in self.model.fields() {
            kv(k, v.to_string());
        }
        kv("schemes", self.schemes.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(","));
        kv("dt", self.dt.iter().map(f64::to_string).collect::<Vec<_>>().join(","));
        kv("paths", self.paths.to_string());
        kv("T", self.horizon.to_string());
        kv("seed", self.seed.to_string());
        if let Some(o) = &self.output {
            kv("output", o.display().to_string());
        }
        // an explicit empty value keeps a preset default from reappearing
        kv("l1", self.l1.map(|v| v.to_string()).unwrap_or_default());
        kv("gamma", self.gamma.map(|v| v.to_string()).unwrap_or_default());
        kv("ref_m", self.ref_m.to_string());
        kv("ref_mode", ref_mode_str(self.ref_mode));
        if let Some(t) = self.threads {
            kv("threads", t.to_string());
        }
        s
    }
}

fn set_param(model: &mut ModelChoice, key: &str, x: f64) {
    match model {
        ModelChoice::ThreeHalves { c1, c2, sigma, x0 } => match key {
            "c1" => *c1 = x,
            "c2" => *c2 = x,
            "sigma" => *sigma = x,
            "x0" => *x0 = x,
            _ => unreachable!("checked against the family's fields"),
        },
        ModelChoice::AitSahalia {
            a_m1,
            a0,
            a1,
            a2,
            b,
            kappa,
            theta,
            x0,
        } => match key {
            "a_m1" => *a_m1 = x,
            "a0" => *a0 = x,
            "a1" => *a1 = x,
            "a2" => *a2 = x,
            "b" => *b = x,
            "kappa" => *kappa = x,
            "theta" => *theta = x,
            "x0" => *x0 = x,
            _ => unreachable!("checked against the family's fields"),
        },
        ModelChoice::Cir { b1, b2, sigma, x0 } => match key {
            "b1" => *b1 = x,
            "b2" => *b2 = x,
            "sigma" => *sigma = x,
            "x0" => *x0 = x,
            _ => unreachable!("checked against the family's fields"),
        },
    }
}
