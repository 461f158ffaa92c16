//! Command-line front end: scenarios, sweeps and report emitters.

pub mod config;
pub mod emit;
pub mod scenarios;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::Parser;
use serde_json::Value;

use config::{parse_config_file, parse_pairs, RunConfig, Scenario};
use scenarios::{execute, Report};

pub const OUTPUT_DIR_ENV: &str = "WVSTEER_OUTPUT_DIR";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Domain(#[from] wvsteer_core::Error),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("check failed: {0}")]
    Mismatch(String),
}

impl CliError {
    /// 1 for usage, domain and check failures; 2 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => 2,
            _ => 1,
        }
    }

    fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl Format {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "svg" => Ok(Format::Svg),
            other => Err(CliError::Usage(format!(
                "key 'format': expected csv, json or svg, got '{other}'"
            ))),
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Svg => "svg",
        }
    }
}

const AFTER_HELP: &str = "Scenarios: bmv, classical, criterion, sweep, decoherence, resolution, budget, oscillator, montecarlo.
Scenario parameters are given as --key value (dashes in keys read as underscores); `wvsteer <scenario> --keys` lists them.
Reserved keys: --config FILE (key = value lines), --format csv|json|svg (default: from the --out extension, else json), --out PATH.
Without --out, output goes to $WVSTEER_OUTPUT_DIR/<scenario>.<ext> if that variable is set, else stdout.
Exit status: 0 success, 1 usage/domain error or failed check, 2 I/O error.";

#[derive(Debug, Parser)]
#[command(name = "wvsteer", version, about = "Weak-value amplified steering predictions", after_help = AFTER_HELP)]
pub struct Cli {
    /// Re-run the configuration embedded in a JSON report and compare bit for bit.
    #[arg(long, value_name = "REPORT", conflicts_with = "scenario")]
    pub check: Option<PathBuf>,
    /// Scenario to run.
    pub scenario: Option<String>,
    /// Scenario parameters as --key value pairs.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "PARAMS")]
    pub params: Vec<String>,
}

/// What a successful invocation produced.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Printed(String),
    Written(PathBuf),
}

pub fn render(report: &Report, format: Format) -> Result<String, CliError> {
    match format {
        Format::Csv => Ok(emit::emit_csv(report)),
        Format::Json => Ok(emit::emit_json(report)),
        Format::Svg => emit::emit_svg(report),
    }
}

fn keys_listing(scenario: Scenario) -> String {
    let mut s = format!("keys for {scenario}:\n");
    for k in scenario.keys() {
        let default = match k.default {
            config::Fallback::Required => "required".to_string(),
            config::Fallback::Optional => "optional".to_string(),
            config::Fallback::Value(v) => format!("default {v}"),
        };
        s.push_str(&format!(
            "  --{:<12} {} [{}]\n",
            k.name.replace('_', "-"),
            k.help,
            default
        ));
    }
    s
}

/// Runs one scenario from its raw key/value arguments.
pub fn run_scenario(scenario: Scenario, args: &[String]) -> Result<Outcome, CliError> {
    if args.iter().any(|a| a == "--keys") {
        return Ok(Outcome::Printed(keys_listing(scenario)));
    }
    let mut raw = BTreeMap::new();
    let pairs = parse_pairs(args)?;
    if let Some((_, file)) = pairs.iter().rev().find(|(k, _)| k == "config") {
        let path = PathBuf::from(file);
        let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
        raw.extend(parse_config_file(&text)?);
    }
    raw.extend(pairs);
    raw.remove("config");
    let out = raw.remove("out").map(PathBuf::from);
    let format = match raw.remove("format") {
        Some(f) => Format::parse(&f)?,
        None => out
            .as_ref()
            .and_then(|p| p.extension())
            .and_then(|e| Format::parse(&e.to_string_lossy()).ok())
            .unwrap_or(Format::Json),
    };
    let report = execute(RunConfig::resolve(scenario, &raw)?)?;
    let text = render(&report, format)?;
    let target = out.or_else(|| {
        std::env::var_os(OUTPUT_DIR_ENV)
            .map(|dir| PathBuf::from(dir).join(format!("{}.{}", scenario.name(), format.extension())))
    });
    match target {
        Some(path) => {
            std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
            Ok(Outcome::Written(path))
        }
        None => Ok(Outcome::Printed(text)),
    }
}

fn first_difference(path: &str, a: &Value, b: &Value) -> Option<String> {
    match (a, b) {
        (Value::Object(x), Value::Object(y)) => {
            for (k, v) in x {
                let p = format!("{path}.{k}");
                match y.get(k) {
                    Some(w) => {
                        if let Some(d) = first_difference(&p, v, w) {
                            return Some(d);
                        }
                    }
                    None => return Some(format!("{p} missing from rerun")),
                }
            }
            y.keys()
                .find(|k| !x.contains_key(*k))
                .map(|k| format!("{path}.{k} not in report"))
        }
        (Value::Array(x), Value::Array(y)) if x.len() == y.len() => x
            .iter()
            .zip(y)
            .enumerate()
            .find_map(|(i, (v, w))| first_difference(&format!("{path}[{i}]"), v, w)),
        _ if a == b => None,
        _ => Some(format!("{path}: report has {a}, rerun gives {b}")),
    }
}

/// Re-runs the configuration recorded in a JSON report and requires every
/// value to reproduce exactly.
pub fn check_report(path: &Path) -> Result<Outcome, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let stored: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("{}: not a JSON report: {e}", path.display())))?;
    let scenario: Scenario = stored
        .get("scenario")
        .and_then(Value::as_str)
        .ok_or_else(|| CliError::Usage("report has no 'scenario'".into()))?
        .parse()?;
    let config = stored
        .get("config")
        .ok_or_else(|| CliError::Usage("report has no 'config'".into()))?;
    let report = execute(RunConfig::resolve(scenario, &RunConfig::raw_from_json(config)?)?)?;
    let rerun = emit::report_json(&report);
    if let Some(diff) = first_difference("", &stored, &rerun) {
        return Err(CliError::Mismatch(diff));
    }
    Ok(Outcome::Printed(format!(
        "check ok: {} reproduced bit for bit\n",
        path.display()
    )))
}

pub fn run(cli: Cli) -> Result<Outcome, CliError> {
    if let Some(path) = cli.check {
        if !cli.params.is_empty() {
            return Err(CliError::Usage("--check takes no scenario parameters".into()));
        }
        return check_report(&path);
    }
    let scenario = cli
        .scenario
        .ok_or_else(|| CliError::Usage("no scenario given; see --help".into()))?;
    run_scenario(scenario.parse()?, &cli.params)
}
