use rayon::prelude::*;
use serde_json::{json, Map, Value};

use wvsteer_core::bmv::entangled_state;
use wvsteer_core::bmv::{
    gravitational_phase, heralding_probability, heralding_probability_perp, quantum_predictions, BmvParams,
    GravityParams,
};
use wvsteer_core::classical::{
    build_separable, classical_visibilities, classical_visibility_limit, formulas, model_tv_distance, product_simulator,
};
use wvsteer_core::criterion::{
    budget_from_probability, decoherence_threshold, evaluate_criterion, evaluate_criterion_with_noise,
    expectation_shift, expectation_shift_exact, experiment_budget, noise_discrepancy, noisy_joint_hits,
    resolution_ceiling, DeviceModel,
};
use wvsteer_core::oscillator::{
    balanced_theta_v, cat_constants, displaced_amplitude, oscillator_visibility, thermal_visibility_mc,
    thermal_visibility_with_order, OscillatorParams,
};
use wvsteer_core::quantum::{concurrence, ppt_min_eigenvalue, DepolarizingNoise};
use wvsteer_core::sampler::{estimate_counts, sample_counts, SamplerModel, ShotTable};

use crate::config::{ParamValue, RunConfig, Scenario};
use crate::CliError;

/// Tabular view used for CSV output.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub series: Vec<Series>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub config: RunConfig,
    pub result: Value,
    pub table: Table,
    pub plot: Option<Plot>,
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("plain data serializes")
}

fn flatten_into(prefix: &str, v: &Value, cols: &mut Vec<String>, vals: &mut Vec<Value>) {
    let join = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}_{k}")
        }
    };
    match v {
        Value::Object(m) => m.iter().for_each(|(k, x)| flatten_into(&join(k), x, cols, vals)),
        Value::Array(a) => a
            .iter()
            .enumerate()
            .for_each(|(i, x)| flatten_into(&join(&i.to_string()), x, cols, vals)),
        leaf => {
            cols.push(prefix.to_string());
            vals.push(leaf.clone());
        }
    }
}

/// One-row table of every leaf of `v`, with nested names joined by `_`.
pub fn flatten(v: &Value) -> Table {
    let (mut columns, mut row) = (Vec::new(), Vec::new());
    flatten_into("", v, &mut columns, &mut row);
    Table {
        columns,
        rows: vec![row],
    }
}

fn row_table(columns: &[&str], rows: &[Value]) -> Table {
    Table {
        columns: columns.iter().map(|c| c.to_string()).collect(),
        rows: rows
            .iter()
            .map(|r| {
                columns
                    .iter()
                    .map(|c| r.get(*c).cloned().unwrap_or(Value::Null))
                    .collect()
            })
            .collect(),
    }
}

fn single(config: RunConfig, result: Value) -> Report {
    Report {
        table: flatten(&result),
        config,
        result,
        plot: None,
    }
}

pub fn execute(mut config: RunConfig) -> Result<Report, CliError> {
    match config.scenario {
        Scenario::Bmv => bmv(config),
        Scenario::Classical => classical(config),
        Scenario::Criterion => criterion(config),
        Scenario::Sweep => sweep(config),
        Scenario::Decoherence => decoherence(config),
        Scenario::Resolution => resolution(config),
        Scenario::Budget => {
            if config.has("p_herald") {
                budget(config)
            } else {
                let (params, _) = bmv_params(&mut config)?;
                budget_exact(config, params)
            }
        }
        Scenario::Oscillator => oscillator(config),
        Scenario::Montecarlo => montecarlo(config),
    }
}

const SI_KEYS: [&str; 7] = ["newton_g", "mass1", "mass2", "separation", "arm_length", "tau", "hbar"];

fn require(cfg: &RunConfig, key: &str, why: &str) -> Result<f64, CliError> {
    cfg.float(key)
        .ok_or_else(|| CliError::Usage(format!("missing required key '{key}' ({why})")))
}

/// θ from `theta` or the SI keys, plus the weak-value setting; defaults used
/// are written back into `cfg` so the echo is complete.
fn bmv_params(cfg: &mut RunConfig) -> Result<(BmvParams, Option<f64>), CliError> {
    let si = SI_KEYS.iter().any(|k| cfg.has(k));
    let (theta, delta_phi) = if si {
        if cfg.has("theta") {
            return Err(CliError::Usage("give either 'theta' or the SI keys, not both".into()));
        }
        cfg.insert("newton_g", ParamValue::Float(GravityParams::NEWTON_G));
        cfg.insert("hbar", ParamValue::Float(GravityParams::HBAR));
        let why = "SI mode";
        let gp = GravityParams::new(
            require(cfg, "newton_g", why)?,
            require(cfg, "mass1", why)?,
            require(cfg, "mass2", why)?,
            require(cfg, "separation", why)?,
            require(cfg, "arm_length", why)?,
            require(cfg, "tau", why)?,
            require(cfg, "hbar", why)?,
        )
        .map_err(|e| match e {
            wvsteer_core::Error::InvalidParameter { name, value, reason } => {
                let name = match name {
                    "m1" => "mass1",
                    "m2" => "mass2",
                    "d" => "separation",
                    "l" => "arm_length",
                    other => other,
                };
                wvsteer_core::Error::InvalidParameter { name, value, reason }
            }
            other => other,
        })?;
        let (dphi, theta) = gravitational_phase(&gp);
        (theta, Some(dphi))
    } else {
        (require(cfg, "theta", "or supply the SI keys")?, None)
    };
    let given: Vec<_> = ["epsilon", "a_w", "k"].into_iter().filter(|k| cfg.has(k)).collect();
    if given.len() > 1 {
        return Err(CliError::Usage(format!(
            "give at most one of epsilon, a_w, k (got {})",
            given.join(", ")
        )));
    }
    let params = match given.first().copied() {
        Some("epsilon") => BmvParams::new(theta, require(cfg, "epsilon", "")?)?,
        Some("a_w") => BmvParams::with_weak_value(theta, require(cfg, "a_w", "")?)?,
        _ => {
            cfg.insert("k", ParamValue::Float(1.0));
            BmvParams::with_amplification(theta, require(cfg, "k", "")?)?
        }
    };
    Ok((params, delta_phi))
}

fn device(cfg: &RunConfig) -> Result<DeviceModel, CliError> {
    Ok(DeviceModel::new(
        cfg.float("gamma").unwrap_or(1e-4),
        cfg.float("rate").unwrap_or(DeviceModel::DEFAULT_SHOT_RATE),
        cfg.float("duration").unwrap_or(DeviceModel::DEFAULT_DURATION),
        cfg.float("basis_prob").unwrap_or(0.5),
    )?)
}

fn params_json(p: &BmvParams, delta_phi: Option<f64>) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("theta".into(), json!(p.theta()));
    if let Some(d) = delta_phi {
        m.insert("delta_phi".into(), json!(d));
    }
    m.insert("epsilon".into(), json!(p.epsilon()));
    m.insert("a_w".into(), json!(p.a_w()));
    m.insert("k".into(), json!(p.k()));
    m
}

fn bmv(mut cfg: RunConfig) -> Result<Report, CliError> {
    let (p, dphi) = bmv_params(&mut cfg)?;
    let pred = quantum_predictions(&p)?;
    let mut m = params_json(&p, dphi);
    m.insert("alpha".into(), json!(p.alpha()));
    m.insert("beta".into(), json!(p.beta()));
    m.insert("a_w_perp".into(), json!(p.a_w_perp()));
    m.insert("heralding_probability".into(), json!(heralding_probability(&p)));
    m.insert(
        "heralding_probability_perp".into(),
        json!(heralding_probability_perp(&p)),
    );
    m.insert("probabilities".into(), json!(pred.probabilities()));
    m.insert("v_quantum".into(), json!(pred.visibilities.values));
    m.insert("concurrence".into(), json!(concurrence(&entangled_state(p.theta()))?));
    Ok(single(cfg, Value::Object(m)))
}

fn classical(mut cfg: RunConfig) -> Result<Report, CliError> {
    let (p, dphi) = bmv_params(&mut cfg)?;
    let model = build_separable(&p)?;
    let mut m = params_json(&p, dphi);
    m.insert("v_classical".into(), json!(classical_visibilities(&model, &p)?.values));
    m.insert("v_classical_closed_form".into(), json!(formulas::visibilities(&p)));
    m.insert("classical_limit".into(), json!(classical_visibility_limit(p.k())));
    m.insert("weight_deficit".into(), json!(model.deficit()));
    m.insert(
        "ppt_min_eigenvalue".into(),
        json!(ppt_min_eigenvalue(&model.density_matrix()?)?),
    );
    m.insert(
        "prob_tv_distance".into(),
        json!(model_tv_distance(&product_simulator(), &p)?),
    );
    m.insert("prob_tv_distance_mixture".into(), json!(model_tv_distance(&model, &p)?));
    Ok(single(cfg, Value::Object(m)))
}

fn criterion(mut cfg: RunConfig) -> Result<Report, CliError> {
    let (p, _) = bmv_params(&mut cfg)?;
    let dev = device(&cfg)?;
    let q = cfg.float("q").unwrap_or(0.0);
    let report = if q > 0.0 {
        evaluate_criterion_with_noise(&p, &dev, DepolarizingNoise::new(q)?)?
    } else {
        DepolarizingNoise::new(q)?;
        evaluate_criterion(&p, &dev)?
    };
    Ok(single(cfg, to_value(&report)))
}

const SWEEP_COLUMNS: [&str; 10] = [
    "theta",
    "k",
    "heralding_probability",
    "v_quantum_2",
    "v_classical_2",
    "visibility_gap",
    "classical_limit",
    "prob_tv_distance",
    "distinguishable_by_probability",
    "distinguishable_by_visibility",
];

/// Rows are θ-major: every `k` for the first `θ`, then the next `θ`.
fn sweep(cfg: RunConfig) -> Result<Report, CliError> {
    let thetas = cfg.grid("theta")?;
    let ks = cfg.grid("k")?;
    let dev = DeviceModel::with_gamma(cfg.float("gamma").unwrap_or(1e-4))?;
    let points: Vec<(f64, f64)> = thetas
        .points
        .iter()
        .flat_map(|&t| ks.points.iter().map(move |&k| (t, k)))
        .collect();
    let rows: Vec<Value> = points
        .par_iter()
        .map(|&(t, k)| -> Result<Value, CliError> {
            let r = evaluate_criterion(&BmvParams::with_amplification(t, k)?, &dev)?;
            Ok(json!({
                "theta": t,
                "k": k,
                "heralding_probability": r.heralding_probability,
                "v_quantum_2": r.v_quantum[2],
                "v_classical_2": r.v_classical[2],
                "visibility_gap": r.visibility_gap,
                "classical_limit": r.classical_limit,
                "prob_tv_distance": r.prob_tv_distance,
                "distinguishable_by_probability": r.distinguishable_by_probability,
                "distinguishable_by_visibility": r.distinguishable_by_visibility,
            }))
        })
        .collect::<Result<_, _>>()?;
    let series = ks
        .points
        .iter()
        .enumerate()
        .map(|(j, &k)| Series {
            name: format!("k = {k}"),
            points: (0..thetas.points.len())
                .map(|i| {
                    let r = &rows[i * ks.points.len() + j];
                    (
                        r["theta"].as_f64().unwrap_or(f64::NAN),
                        r["visibility_gap"].as_f64().unwrap_or(f64::NAN),
                    )
                })
                .collect(),
        })
        .collect();
    Ok(Report {
        table: row_table(&SWEEP_COLUMNS, &rows),
        result: json!({ "rows": rows }),
        config: cfg,
        plot: Some(Plot {
            title: "Visibility gap V_Q − V_C on the post-selected branch".into(),
            x_label: "theta".into(),
            y_label: "visibility_gap".into(),
            log_x: thetas.log,
            series,
        }),
    })
}

const DECOHERENCE_COLUMNS: [&str; 14] = [
    "q",
    "v_exact_0",
    "v_exact_1",
    "v_exact_2",
    "v_exact_3",
    "v_printed_0",
    "v_printed_1",
    "v_printed_2",
    "v_printed_3",
    "joint_hits_0",
    "joint_hits_1",
    "joint_hits_2",
    "joint_hits_3",
    "max_abs_difference",
];

fn decoherence(mut cfg: RunConfig) -> Result<Report, CliError> {
    let (p, dphi) = bmv_params(&mut cfg)?;
    let qs = cfg.grid("q")?;
    let dev = DeviceModel::with_gamma(cfg.float("gamma").unwrap_or(1e-4))?;
    let rows: Vec<Value> = qs
        .points
        .iter()
        .map(|&q| -> Result<Value, CliError> {
            let noise = DepolarizingNoise::new(q)?;
            let d = noise_discrepancy(&p, noise)?;
            let hits = noisy_joint_hits(&p, noise)?;
            let mut row = Map::new();
            row.insert("q".into(), json!(q));
            for (name, vals) in [("v_exact", d.exact), ("v_printed", d.printed), ("joint_hits", hits)] {
                for (i, v) in vals.iter().enumerate() {
                    row.insert(format!("{name}_{i}"), json!(v));
                }
            }
            row.insert("max_abs_difference".into(), json!(d.max_abs_difference));
            Ok(Value::Object(row))
        })
        .collect::<Result<_, _>>()?;
    let curve = |col: &str| Series {
        name: col.to_string(),
        points: rows
            .iter()
            .map(|r| (r["q"].as_f64().unwrap_or(f64::NAN), r[col].as_f64().unwrap_or(f64::NAN)))
            .collect(),
    };
    let plot = Plot {
        title: "Post-selected visibility under depolarizing noise".into(),
        x_label: "q".into(),
        y_label: "V_2".into(),
        log_x: qs.log,
        series: vec![curve("v_exact_2"), curve("v_printed_2")],
    };
    let mut m = params_json(&p, dphi);
    m.insert(
        "v_classical_2".into(),
        json!(classical_visibilities(&build_separable(&p)?, &p)?.values[2]),
    );
    m.insert("threshold_q".into(), json!(decoherence_threshold(&p, &dev)?));
    m.insert("rows".into(), Value::Array(rows.clone()));
    Ok(Report {
        table: row_table(&DECOHERENCE_COLUMNS, &rows),
        result: Value::Object(m),
        config: cfg,
        plot: Some(plot),
    })
}

const RESOLUTION_COLUMNS: [&str; 6] = ["gamma", "weak_value_ceiling", "theta", "k", "shift", "shift_exact"];

/// At each `γ`: the largest usable weak value and the expectation shift at
/// `θ = √γ` with that weak value.
fn resolution(cfg: RunConfig) -> Result<Report, CliError> {
    let gammas = cfg.grid("gamma")?;
    let rows: Vec<Value> = gammas
        .points
        .iter()
        .map(|&g| -> Result<Value, CliError> {
            let dev = DeviceModel::with_gamma(g)?;
            let ceiling = resolution_ceiling(&dev);
            let p = BmvParams::with_weak_value(g.sqrt(), ceiling)?;
            Ok(json!({
                "gamma": g,
                "weak_value_ceiling": ceiling,
                "theta": p.theta(),
                "k": p.k(),
                "shift": expectation_shift(&p),
                "shift_exact": expectation_shift_exact(&p)?,
            }))
        })
        .collect::<Result<_, _>>()?;
    let series = ["shift", "shift_exact"]
        .iter()
        .map(|col| Series {
            name: col.to_string(),
            points: rows
                .iter()
                .map(|r| {
                    (
                        r["gamma"].as_f64().unwrap_or(f64::NAN),
                        r[*col].as_f64().unwrap_or(f64::NAN),
                    )
                })
                .collect(),
        })
        .collect();
    Ok(Report {
        table: row_table(&RESOLUTION_COLUMNS, &rows),
        result: json!({ "rows": rows }),
        config: cfg,
        plot: Some(Plot {
            title: "Expectation shift at the resolution limit".into(),
            x_label: "gamma".into(),
            y_label: "shift".into(),
            log_x: gammas.log,
            series,
        }),
    })
}

fn budget(cfg: RunConfig) -> Result<Report, CliError> {
    if ["theta", "epsilon", "a_w", "k"]
        .iter()
        .chain(&SI_KEYS)
        .any(|k| cfg.has(k))
    {
        return Err(CliError::Usage(
            "give either 'p_herald' or the coupling keys, not both".into(),
        ));
    }
    let p = cfg.float("p_herald").unwrap_or(0.0);
    let b = budget_from_probability(p, &device(&cfg)?)?;
    Ok(single(cfg, to_value(&b)))
}

fn budget_exact(cfg: RunConfig, params: BmvParams) -> Result<Report, CliError> {
    let b = experiment_budget(&params, &device(&cfg)?)?;
    let mut m = params_json(&params, None);
    if let Value::Object(bm) = to_value(&b) {
        m.extend(bm);
    }
    Ok(single(cfg, Value::Object(m)))
}

fn oscillator(cfg: RunConfig) -> Result<Report, CliError> {
    let f = |k: &str| cfg.float(k).unwrap_or(f64::NAN);
    let build = |theta_v: f64| {
        OscillatorParams::with_max_lambda(
            f("omega"),
            f("g"),
            f("t"),
            theta_v,
            f("nbar"),
            f("gamma"),
            f("max_lambda"),
        )
    };
    let theta_v = match cfg.float("theta_v") {
        Some(tv) => tv,
        None => balanced_theta_v(displaced_amplitude(&build(0.1)?))?,
    };
    let params = build(theta_v)?;
    let eta = displaced_amplitude(&params);
    let (cp, cm) = cat_constants(eta)?;
    let pure = oscillator_visibility(&params)?;
    let order = cfg.int("order").unwrap_or(32) as usize;
    let samples = cfg.int("mc_samples").unwrap_or(0) as usize;
    let thermal = if params.nbar > 0.0 {
        to_value(&thermal_visibility_with_order(&params, order)?)
    } else {
        Value::Null
    };
    let mc = if params.nbar > 0.0 && samples > 0 {
        to_value(&thermal_visibility_mc(&params, samples, cfg.int("seed").unwrap_or(0))?)
    } else {
        Value::Null
    };
    let result = json!({
        "lambda": params.lambda(),
        "theta_v": theta_v,
        "c_plus": cp,
        "c_minus": cm,
        "pure": to_value(&pure),
        "thermal": thermal,
        "monte_carlo": mc,
    });
    Ok(single(cfg, result))
}

fn montecarlo(mut cfg: RunConfig) -> Result<Report, CliError> {
    let (p, dphi) = bmv_params(&mut cfg)?;
    let dev = DeviceModel::new(
        cfg.float("gamma").unwrap_or(1e-4),
        DeviceModel::DEFAULT_SHOT_RATE,
        DeviceModel::DEFAULT_DURATION,
        cfg.float("basis_prob").unwrap_or(0.5),
    )?;
    let model = match cfg.text("model").unwrap_or("quantum") {
        "quantum" => SamplerModel::Quantum,
        "classical" => SamplerModel::Classical,
        "mixture" => SamplerModel::Mixture,
        "noisy" => SamplerModel::Noisy {
            q: cfg.float("q").unwrap_or(0.0),
        },
        other => {
            return Err(CliError::Usage(format!(
                "key 'model': unknown model '{other}'; expected quantum, classical, mixture or noisy"
            )))
        }
    };
    let shots = cfg.int("shots").unwrap_or(0);
    let seed = cfg.int("seed").unwrap_or(0);
    let table = ShotTable::new(model, &p, &dev)?;
    let est = estimate_counts(&sample_counts(model, &p, &dev, shots, seed)?, seed);
    let mut m = params_json(&p, dphi);
    m.insert("model".into(), to_value(&model));
    m.insert("estimate".into(), to_value(&est));
    m.insert("exact_probabilities".into(), json!(table.reported_probabilities()));
    m.insert("exact_visibilities".into(), json!(table.reported_visibilities()));
    Ok(single(cfg, Value::Object(m)))
}
