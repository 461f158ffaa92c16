//! Flat key/value run configuration.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde_json::{Map, Number, Value};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scenario {
    Bmv,
    Classical,
    Criterion,
    Sweep,
    Decoherence,
    Resolution,
    Budget,
    Oscillator,
    Montecarlo,
}

impl Scenario {
    pub const ALL: [Scenario; 9] = [
        Scenario::Bmv,
        Scenario::Classical,
        Scenario::Criterion,
        Scenario::Sweep,
        Scenario::Decoherence,
        Scenario::Resolution,
        Scenario::Budget,
        Scenario::Oscillator,
        Scenario::Montecarlo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Bmv => "bmv",
            Scenario::Classical => "classical",
            Scenario::Criterion => "criterion",
            Scenario::Sweep => "sweep",
            Scenario::Decoherence => "decoherence",
            Scenario::Resolution => "resolution",
            Scenario::Budget => "budget",
            Scenario::Oscillator => "oscillator",
            Scenario::Montecarlo => "montecarlo",
        }
    }

    pub fn keys(self) -> Vec<KeySpec> {
        use Fallback::*;
        use Kind::*;
        let bmv = || {
            vec![
                KeySpec::new("theta", Float, Optional, "coupling angle θ (rad)"),
                KeySpec::new("epsilon", Float, Optional, "post-selection overlap ε"),
                KeySpec::new("a_w", Float, Optional, "weak value A_w"),
                KeySpec::new("k", Float, Optional, "amplification k = θ·A_w (default 1)"),
                KeySpec::new("newton_g", Float, Optional, "SI mode: gravitational constant"),
                KeySpec::new("mass1", Float, Optional, "SI mode: first mass (kg)"),
                KeySpec::new("mass2", Float, Optional, "SI mode: second mass (kg)"),
                KeySpec::new(
                    "separation",
                    Float,
                    Optional,
                    "SI mode: nearest-branch separation d (m)",
                ),
                KeySpec::new("arm_length", Float, Optional, "SI mode: superposition size L (m)"),
                KeySpec::new("tau", Float, Optional, "SI mode: interaction time (s)"),
                KeySpec::new("hbar", Float, Optional, "SI mode: reduced Planck constant"),
            ]
        };
        let gamma = || KeySpec::new("gamma", Float, Value("1e-4"), "detector resolution γ");
        let rate = || KeySpec::new("rate", Float, Value("1e6"), "shots per second");
        let duration = || KeySpec::new("duration", Float, Value("86400"), "run duration (s)");
        let basis = || {
            KeySpec::new(
                "basis_prob",
                Float,
                Value("0.5"),
                "probability of the post-selecting setting",
            )
        };
        match self {
            Scenario::Bmv | Scenario::Classical => bmv(),
            Scenario::Criterion => {
                let mut v = bmv();
                v.extend([gamma(), rate(), duration(), basis()]);
                v.push(KeySpec::new(
                    "q",
                    Float,
                    Value("0"),
                    "depolarizing strength applied to the quantum side",
                ));
                v
            }
            Scenario::Sweep => vec![
                KeySpec::new("theta", Grid, Required, "θ grid, min:max:lin|log10[:n] or a,b,c"),
                KeySpec::new("k", Grid, Value("1"), "k grid"),
                gamma(),
            ],
            Scenario::Decoherence => {
                let mut v = bmv();
                v.push(gamma());
                v.push(KeySpec::new(
                    "q",
                    Grid,
                    Value("0:1:lin:21"),
                    "depolarizing strength grid",
                ));
                v
            }
            Scenario::Resolution => vec![KeySpec::new(
                "gamma",
                Grid,
                Value("1e-6:1e-2:log10:9"),
                "detector resolution grid",
            )],
            Scenario::Budget => {
                let mut v = vec![KeySpec::new(
                    "p_herald",
                    Float,
                    Optional,
                    "heralding probability (overrides θ)",
                )];
                v.extend(bmv());
                v.extend([rate(), duration(), basis()]);
                v
            }
            Scenario::Oscillator => vec![
                KeySpec::new("omega", Float, Value("1"), "oscillator angular frequency"),
                KeySpec::new("g", Float, Required, "gravitational coupling"),
                KeySpec::new("t", Float, Required, "evolution time"),
                KeySpec::new("theta_v", Float, Optional, "steering-basis angle (default: balanced)"),
                KeySpec::new("nbar", Float, Value("0"), "thermal occupation"),
                KeySpec::new("gamma", Float, Value("1e-3"), "detector resolution"),
                KeySpec::new("max_lambda", Float, Value("0.1"), "upper bound on g/omega"),
                KeySpec::new("order", Int, Value("32"), "Gauss–Hermite order per axis"),
                KeySpec::new(
                    "mc_samples",
                    Int,
                    Value("0"),
                    "Monte Carlo samples for the thermal cross-check",
                ),
                KeySpec::new("seed", Int, Value("0"), "Monte Carlo seed"),
            ],
            Scenario::Montecarlo => {
                let mut v = bmv();
                v.extend([gamma(), basis()]);
                v.extend([
                    KeySpec::new("model", Text, Value("quantum"), "quantum | classical | mixture | noisy"),
                    KeySpec::new("q", Float, Value("0"), "depolarizing strength for the noisy model"),
                    KeySpec::new("shots", Int, Value("1000000"), "number of shots"),
                    KeySpec::new("seed", Int, Value("1"), "random seed"),
                ]);
                v
            }
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Scenario::ALL.into_iter().find(|sc| sc.name() == s).ok_or_else(|| {
            let names: Vec<_> = Scenario::ALL.iter().map(|s| s.name()).collect();
            CliError::Usage(format!("unknown scenario '{s}'; expected one of: {}", names.join(", ")))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Float,
    Int,
    Text,
    Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fallback {
    Required,
    Optional,
    Value(&'static str),
}

#[derive(Debug, Clone, Copy)]
pub struct KeySpec {
    pub name: &'static str,
    pub kind: Kind,
    pub default: Fallback,
    pub help: &'static str,
}

impl KeySpec {
    fn new(name: &'static str, kind: Kind, default: Fallback, help: &'static str) -> Self {
        Self {
            name,
            kind,
            default,
            help,
        }
    }
}

/// A parsed value; grids are kept as text and expanded by [`parse_grid`].
#[derive(Debug, Clone, PartialEq)]
pub enum ParamValue {
    Float(f64),
    Int(u64),
    Text(String),
}

impl ParamValue {
    fn to_json(&self) -> Value {
        match self {
            ParamValue::Float(x) => Number::from_f64(*x).map_or(Value::Null, Value::Number),
            ParamValue::Int(n) => Value::from(*n),
            ParamValue::Text(s) => Value::from(s.clone()),
        }
    }
}

/// Fully resolved parameters in declaration order, defaults included.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub values: Vec<(&'static str, ParamValue)>,
}

impl RunConfig {
    /// Validates raw `key → text` pairs against the scenario's keys.
    pub fn resolve(scenario: Scenario, raw: &BTreeMap<String, String>) -> Result<Self, CliError> {
        let specs = scenario.keys();
        if let Some(unknown) = raw.keys().find(|k| !specs.iter().any(|s| s.name == k.as_str())) {
            let valid: Vec<_> = specs.iter().map(|s| s.name).collect();
            return Err(CliError::Usage(format!(
                "unknown key '{unknown}' for scenario {scenario}; valid keys: {}",
                valid.join(", ")
            )));
        }
        let mut values = Vec::new();
        for spec in &specs {
            let text = match (raw.get(spec.name), spec.default) {
                (Some(v), _) => v.as_str(),
                (None, Fallback::Value(d)) => d,
                (None, Fallback::Optional) => continue,
                (None, Fallback::Required) => {
                    return Err(CliError::Usage(format!(
                        "missing required key '{}' ({})",
                        spec.name, spec.help
                    )))
                }
            };
            values.push((spec.name, parse_value(spec, text)?));
        }
        Ok(Self { scenario, values })
    }

    pub fn get(&self, key: &str) -> Option<&ParamValue> {
        self.values.iter().find(|(k, _)| *k == key).map(|(_, v)| v)
    }

    pub fn has(&self, key: &str) -> bool {
        self.get(key).is_some()
    }

    pub fn float(&self, key: &str) -> Option<f64> {
        match self.get(key)? {
            ParamValue::Float(x) => Some(*x),
            _ => None,
        }
    }

    pub fn int(&self, key: &str) -> Option<u64> {
        match self.get(key)? {
            ParamValue::Int(n) => Some(*n),
            _ => None,
        }
    }

    pub fn text(&self, key: &str) -> Option<&str> {
        match self.get(key)? {
            ParamValue::Text(s) => Some(s),
            _ => None,
        }
    }

    pub fn grid(&self, key: &str) -> Result<Grid, CliError> {
        let text = self
            .text(key)
            .ok_or_else(|| CliError::Usage(format!("missing grid '{key}'")))?;
        parse_grid(key, text)
    }

    /// Records a default chosen while running, keeping declaration order.
    pub fn insert(&mut self, key: &'static str, value: ParamValue) {
        if self.has(key) {
            return;
        }
        let order: Vec<_> = self.scenario.keys().iter().map(|s| s.name).collect();
        let rank = |k: &str| order.iter().position(|o| *o == k).unwrap_or(order.len());
        let pos = self
            .values
            .iter()
            .position(|(k, _)| rank(k) > rank(key))
            .unwrap_or(self.values.len());
        self.values.insert(pos, (key, value));
    }

    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        for (k, v) in &self.values {
            m.insert((*k).to_string(), v.to_json());
        }
        Value::Object(m)
    }

    /// Rebuilds raw text pairs from an echoed JSON config.
    pub fn raw_from_json(config: &Value) -> Result<BTreeMap<String, String>, CliError> {
        let obj = config
            .as_object()
            .ok_or_else(|| CliError::Usage("report 'config' is not an object".into()))?;
        obj.iter()
            .map(|(k, v)| {
                let text = match v {
                    Value::Number(n) => n
                        .as_u64()
                        .map_or_else(|| n.as_f64().unwrap_or(f64::NAN).to_string(), |u| u.to_string()),
                    Value::String(s) => s.clone(),
                    other => {
                        return Err(CliError::Usage(format!(
                            "config key '{k}' has unsupported value {other}"
                        )))
                    }
                };
                Ok((k.clone(), text))
            })
            .collect()
    }
}

fn parse_value(spec: &KeySpec, text: &str) -> Result<ParamValue, CliError> {
    let bad = |what: &str| CliError::Usage(format!("key '{}': cannot parse '{text}' as {what}", spec.name));
    match spec.kind {
        Kind::Float => {
            let x: f64 = text.trim().parse().map_err(|_| bad("a number"))?;
            if !x.is_finite() {
                return Err(bad("a finite number"));
            }
            Ok(ParamValue::Float(x))
        }
        Kind::Int => text
            .trim()
            .parse()
            .map(ParamValue::Int)
            .map_err(|_| bad("a nonnegative integer")),
        Kind::Text => Ok(ParamValue::Text(text.trim().to_string())),
        Kind::Grid => {
            parse_grid(spec.name, text)?;
            Ok(ParamValue::Text(text.trim().to_string()))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub points: Vec<f64>,
    pub log: bool,
}

pub const DEFAULT_GRID_POINTS: usize = 11;

/// `min:max:lin|log10[:n]` (endpoints included) or a comma list.
pub fn parse_grid(key: &str, text: &str) -> Result<Grid, CliError> {
    let bad = |why: &str| CliError::Usage(format!("key '{key}': bad grid '{text}': {why}"));
    let num = |s: &str| -> Result<f64, CliError> {
        s.trim()
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| bad(&format!("'{s}' is not a finite number")))
    };
    let text = text.trim();
    if text.contains(':') {
        let parts: Vec<_> = text.split(':').collect();
        if !(3..=4).contains(&parts.len()) {
            return Err(bad("expected min:max:scale[:n]"));
        }
        let (lo, hi) = (num(parts[0])?, num(parts[1])?);
        let n = match parts.get(3) {
            Some(s) => s
                .trim()
                .parse::<usize>()
                .map_err(|_| bad("point count must be an integer"))?,
            None => DEFAULT_GRID_POINTS,
        };
        let log = match parts[2].trim() {
            "lin" => false,
            "log10" => true,
            other => return Err(bad(&format!("unknown scale '{other}'"))),
        };
        if log && !(lo > 0.0 && hi > 0.0) {
            return Err(bad("log10 grids need positive endpoints"));
        }
        let at = |i: usize| -> f64 {
            if n == 1 {
                return lo;
            }
            if i == n - 1 {
                return hi;
            }
            let f = i as f64 / (n - 1) as f64;
            if log {
                10f64.powf(lo.log10() + f * (hi.log10() - lo.log10()))
            } else {
                lo + f * (hi - lo)
            }
        };
        Ok(Grid {
            points: (0..n).map(at).collect(),
            log,
        })
    } else if text.is_empty() {
        Ok(Grid {
            points: vec![],
            log: false,
        })
    } else {
        Ok(Grid {
            points: text.split(',').map(num).collect::<Result<_, _>>()?,
            log: false,
        })
    }
}

/// Parses `--key value` pairs; `-` in keys is read as `_`.
pub fn parse_pairs(args: &[String]) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    let mut it = args.iter();
    while let Some(flag) = it.next() {
        let key = flag
            .strip_prefix("--")
            .ok_or_else(|| CliError::Usage(format!("expected --key, found '{flag}'")))?;
        let (key, value) = match key.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => {
                let v = it
                    .next()
                    .ok_or_else(|| CliError::Usage(format!("key '{key}' is missing a value")))?;
                (key.to_string(), v.clone())
            }
        };
        out.push((key.replace('-', "_"), value));
    }
    Ok(out)
}

/// `key = value` lines with `#` comments.
pub fn parse_config_file(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected 'key = value'", n + 1)))?;
        out.push((k.trim().replace('-', "_"), v.trim().to_string()));
    }
    Ok(out)
}
