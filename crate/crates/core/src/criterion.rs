//! Quantum vs classical decisions under finite resolution, decoherence and
//! a finite event budget.

use serde::Serialize;

use crate::bmv::{
    ensemble_visibilities, entangled_state, heralding_probability, quantum_predictions, reference_projectors,
    BmvParams, Predictions,
};
use crate::classical::{
    build_separable, classical_visibilities, classical_visibility_limit, model_tv_distance, product_simulator,
};
use crate::error::{invalid, Result};
use crate::quantum::{steer_mixture, DepolarizingNoise, ModelKind, PureState, VisibilityReport};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeviceModel {
    pub gamma: f64,
    pub shot_rate: f64,
    pub duration: f64,
    pub basis_choice_prob: f64,
}

impl DeviceModel {
    pub const DEFAULT_SHOT_RATE: f64 = 1e6;
    pub const DEFAULT_DURATION: f64 = 86_400.0;

    pub fn new(gamma: f64, shot_rate: f64, duration: f64, basis_choice_prob: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(invalid("gamma", gamma, "resolution must lie in (0, 1)"));
        }
        if !(shot_rate > 0.0 && shot_rate.is_finite()) {
            return Err(invalid("shot_rate", shot_rate, "must be finite and positive"));
        }
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(invalid("duration", duration, "must be finite and positive"));
        }
        if !(basis_choice_prob > 0.0 && basis_choice_prob < 1.0) {
            return Err(invalid("basis_choice_prob", basis_choice_prob, "must lie in (0, 1)"));
        }
        Ok(Self {
            gamma,
            shot_rate,
            duration,
            basis_choice_prob,
        })
    }

    /// One day at 1 MHz with an even basis choice.
    pub fn with_gamma(gamma: f64) -> Result<Self> {
        Self::new(gamma, Self::DEFAULT_SHOT_RATE, Self::DEFAULT_DURATION, 0.5)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriterionReport {
    pub theta: f64,
    pub k: f64,
    pub heralding_probability: f64,
    pub v_quantum: [f64; 4],
    pub v_classical: [f64; 4],
    pub visibility_gap: f64,
    pub classical_limit: f64,
    pub prob_tv_distance: f64,
    pub prob_tv_distance_mixture: f64,
    pub distinguishable_by_probability: bool,
    pub distinguishable_by_visibility: bool,
    pub shift: f64,
    pub amplification_factor: f64,
}

/// Compares the quantum predictions with the heralded-product mixture
/// (visibilities) and with `|+⟩|+⟩` (outcome probabilities).
pub fn evaluate_criterion(params: &BmvParams, device: &DeviceModel) -> Result<CriterionReport> {
    let quantum = quantum_predictions(params)?.visibilities;
    report(params, device, quantum)
}

/// As [`evaluate_criterion`] with the quantum side depolarized.
pub fn evaluate_criterion_with_noise(
    params: &BmvParams,
    device: &DeviceModel,
    noise: DepolarizingNoise,
) -> Result<CriterionReport> {
    let quantum = noisy_visibilities(params, noise)?;
    report(params, device, quantum)
}

fn report(params: &BmvParams, device: &DeviceModel, quantum: VisibilityReport) -> Result<CriterionReport> {
    let mixture = build_separable(params)?;
    let classical = classical_visibilities(&mixture, params)?;
    let gap = quantum.values[2] - classical.values[2];
    let tv = model_tv_distance(&product_simulator(), params)?;
    Ok(CriterionReport {
        theta: params.theta(),
        k: params.k(),
        heralding_probability: heralding_probability(params),
        v_quantum: quantum.values,
        v_classical: classical.values,
        visibility_gap: gap,
        classical_limit: classical_visibility_limit(params.k()),
        prob_tv_distance: tv,
        prob_tv_distance_mixture: model_tv_distance(&mixture, params)?,
        distinguishable_by_probability: tv > device.gamma,
        distinguishable_by_visibility: gap > device.gamma,
        shift: expectation_shift(params),
        amplification_factor: params.a_w(),
    })
}

/// `⟨ΔΠ₂⟩ = 1 − 1/(1+k²)` with `k = θ·A_w`.
pub fn expectation_shift(params: &BmvParams) -> f64 {
    let k = params.k();
    1.0 - 1.0 / (1.0 + k * k)
}

/// `Tr(Π₂ ρ_ε) − Tr(Π₂ |+⟩⟨+|)` from the steered state, which equals
/// `1 − 1/(1 + tan²θ·A_w²)`.
pub fn expectation_shift_exact(params: &BmvParams) -> Result<f64> {
    let pred = quantum_predictions(params)?;
    let pi2 = &reference_projectors(params)[2];
    let plus = crate::quantum::DensityMatrix::from_pure(&crate::quantum::ket_plus());
    Ok(pred.visibilities.values[2] - crate::quantum::visibility(&plus, pi2)?)
}

/// Largest usable weak value `√2/√γ`.
pub fn resolution_ceiling(device: &DeviceModel) -> f64 {
    std::f64::consts::SQRT_2 / device.gamma.sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Budget {
    pub heralding_probability: f64,
    /// Expected heralds over the run, including the basis-selection factor.
    pub heralds: f64,
    /// Same count if every run used the post-selecting setting.
    pub raw_heralds: f64,
    pub saving_factor: Option<f64>,
}

/// `basis_choice_prob · p^(ε,χ_ε) · shot_rate · duration`.
pub fn budget_from_probability(p_herald: f64, device: &DeviceModel) -> Result<Budget> {
    if !(0.0..=1.0).contains(&p_herald) {
        return Err(invalid("p_herald", p_herald, "probability must lie in [0, 1]"));
    }
    let raw = p_herald * device.shot_rate * device.duration;
    Ok(Budget {
        heralding_probability: p_herald,
        heralds: device.basis_choice_prob * raw,
        raw_heralds: raw,
        saving_factor: None,
    })
}

pub fn experiment_budget(params: &BmvParams, device: &DeviceModel) -> Result<Budget> {
    let mut b = budget_from_probability(heralding_probability(params), device)?;
    b.saving_factor = Some(params.a_w());
    Ok(b)
}

/// `(1−q)|Ψ⟩⟨Ψ| + q·I/4` as a pure-state mixture.
fn noisy_components(params: &BmvParams, noise: DepolarizingNoise) -> Vec<(f64, PureState)> {
    let q = noise.q();
    let mut comps = vec![(1.0 - q, entangled_state(params.theta()))];
    for i in 0..4 {
        let v = crate::linalg::StateVector::basis(4, i).expect("4");
        comps.push((q / 4.0, PureState::new(v).expect("unit")));
    }
    comps.retain(|(w, _)| *w > 0.0);
    comps
}

pub fn noisy_predictions(params: &BmvParams, noise: DepolarizingNoise) -> Result<Predictions> {
    let comps = noisy_components(params, noise);
    let basis_a = steer_mixture(&comps, &params.basis_a())?;
    let basis_b = steer_mixture(&comps, &params.basis_b())?;
    let values = ensemble_visibilities(&basis_a, &basis_b, &reference_projectors(params))?;
    Ok(Predictions {
        basis_a,
        basis_b,
        visibilities: VisibilityReport {
            model: ModelKind::Noisy { q: noise.q() },
            values,
        },
    })
}

/// Visibilities of the depolarized state by exact steering.
pub fn noisy_visibilities(params: &BmvParams, noise: DepolarizingNoise) -> Result<VisibilityReport> {
    Ok(noisy_predictions(params, noise)?.visibilities)
}

/// Unnormalized `Tr(Π_i ρ̃_i)` for the depolarized state: joint probability
/// of A's outcome and B's hit on the matching reference projector.
pub fn noisy_joint_hits(params: &BmvParams, noise: DepolarizingNoise) -> Result<[f64; 4]> {
    let pred = noisy_predictions(params, noise)?;
    let p = pred.probabilities();
    Ok(std::array::from_fn(|i| p[i] * pred.visibilities.values[i]))
}

/// The printed noisy visibilities: `1/(1+q)` for `Π₀, Π₁` and
/// `1 − q/(2 Tr ρ̃)` for `Π₂, Π₃`, with `Tr ρ̃ = (1−q)p + q` from the printed
/// steered states, which carry `q/2·I` rather than `q/4·I`.
pub fn noisy_visibilities_printed(params: &BmvParams, noise: DepolarizingNoise) -> [f64; 4] {
    let q = noise.q();
    let p = heralding_probability(params);
    let pp = crate::bmv::heralding_probability_perp(params);
    let tr = |x: f64| (1.0 - q) * x + q;
    [
        1.0 / (1.0 + q),
        1.0 / (1.0 + q),
        1.0 - q / (2.0 * tr(p)),
        1.0 - q / (2.0 * tr(pp)),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseDiscrepancy {
    pub q: f64,
    pub exact: [f64; 4],
    pub printed: [f64; 4],
    pub max_abs_difference: f64,
}

pub fn noise_discrepancy(params: &BmvParams, noise: DepolarizingNoise) -> Result<NoiseDiscrepancy> {
    let exact = noisy_visibilities(params, noise)?.values;
    let printed = noisy_visibilities_printed(params, noise);
    let max_abs_difference = exact
        .iter()
        .zip(&printed)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(NoiseDiscrepancy {
        q: noise.q(),
        exact,
        printed,
        max_abs_difference,
    })
}

pub const THRESHOLD_TOL: f64 = 1e-6;

/// Largest `q` for which the noisy quantum `V_{Π₂}` still exceeds the
/// noiseless classical `V_{Π₂}` by more than `γ`. Returns 0 if even `q = 0`
/// fails and 1 if every `q` passes.
pub fn decoherence_threshold(params: &BmvParams, device: &DeviceModel) -> Result<f64> {
    let v_c = classical_visibilities(&build_separable(params)?, params)?.values[2];
    let margin = |q: f64| -> Result<f64> {
        let v_q = noisy_visibilities(params, DepolarizingNoise::new(q)?)?.values[2];
        Ok(v_q - v_c - device.gamma)
    };
    if margin(0.0)? <= 0.0 {
        return Ok(0.0);
    }
    if margin(1.0)? > 0.0 {
        return Ok(1.0);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while hi - lo > THRESHOLD_TOL {
        let mid = 0.5 * (lo + hi);
        if margin(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bmv::heralding_probability_perp;

    fn k_params(theta: f64, k: f64) -> BmvParams {
        BmvParams::with_amplification(theta, k).unwrap()
    }

    fn noise(q: f64) -> DepolarizingNoise {
        DepolarizingNoise::new(q).unwrap()
    }

    #[test]
    fn criterion_examples() {
        let dev = DeviceModel::with_gamma(1e-4).unwrap();
        let r = evaluate_criterion(&k_params(1e-2, 1.0), &dev).unwrap();
        assert!((r.visibility_gap - 0.5).abs() < 1e-2);
        assert!(r.distinguishable_by_visibility);
        assert!(r.prob_tv_distance < 2e-4 && r.prob_tv_distance > 5e-5);
        assert!(r.v_quantum.iter().all(|v| (v - 1.0).abs() < 1e-10));

        let r0 = evaluate_criterion(&BmvParams::new(0.0, 0.9).unwrap(), &dev).unwrap();
        assert!(r0.visibility_gap.abs() < 1e-12);
        assert!(!r0.distinguishable_by_probability && !r0.distinguishable_by_visibility);

        let r2 = evaluate_criterion(&k_params(1e-3, 2.0), &dev).unwrap();
        assert!((r2.visibility_gap - 0.8).abs() < 2e-2);
    }

    #[test]
    fn gap_approaches_limit() {
        for k in [0.5, 1.0, 2.0] {
            for th in [1e-3, 1e-4, 1e-5] {
                let r = evaluate_criterion(&k_params(th, k), &DeviceModel::with_gamma(1e-4).unwrap()).unwrap();
                assert!((r.visibility_gap - k * k / (1.0 + k * k)).abs() <= 10.0 * th * k);
            }
        }
    }

    #[test]
    fn visibility_flag_monotone_in_k() {
        let dev = DeviceModel::with_gamma(0.3).unwrap();
        let mut seen = false;
        for k in [0.1, 0.3, 0.5, 0.7, 1.0, 2.0, 3.0] {
            let flag = evaluate_criterion(&k_params(1e-3, k), &dev)
                .unwrap()
                .distinguishable_by_visibility;
            assert!(!seen || flag);
            seen |= flag;
        }
        assert!(seen);
    }

    #[test]
    fn shift_examples() {
        assert!((expectation_shift(&k_params(1e-3, 1.0)) - 0.5).abs() < 1e-12);
        assert_eq!(expectation_shift(&BmvParams::new(0.0, 0.9).unwrap()), 0.0);
        let gamma: f64 = 1e-4;
        let p = BmvParams::with_weak_value(gamma.sqrt(), 2f64.sqrt() / gamma.sqrt()).unwrap();
        assert!((expectation_shift(&p) - 2.0 / 3.0).abs() < 1e-10);
        let small = k_params(1e-6, 1.0);
        assert!((expectation_shift_exact(&small).unwrap() - expectation_shift(&small)).abs() < 1e-10);
        let th: f64 = 1e-2;
        let exact = expectation_shift_exact(&p).unwrap();
        let a = p.a_w();
        let closed = 1.0 - 1.0 / (1.0 + (th.tan() * a).powi(2));
        assert!((exact - closed).abs() < 1e-12);
    }

    #[test]
    fn ceiling_examples() {
        let c = |g| resolution_ceiling(&DeviceModel::with_gamma(g).unwrap());
        assert!((c(1e-4) - 141.421_356_237_309_5).abs() < 1e-9);
        assert!((c(0.5) - 2.0).abs() < 1e-12);
        assert!((c(2e-8) - 1e4).abs() < 1e-8);
    }

    #[test]
    fn budget_examples() {
        let dev = DeviceModel::new(1e-4, 1e6, 86_400.0, 0.5).unwrap();
        let b = budget_from_probability(2e-8, &dev).unwrap();
        assert!((b.heralds - 864.0).abs() < 1e-9);
        assert!((b.raw_heralds - 1728.0).abs() < 1e-9);
        let exact = experiment_budget(&BmvParams::with_weak_value(1e-4, 1e4).unwrap(), &dev).unwrap();
        assert!((exact.raw_heralds - 1728.0).abs() < 1e-3);
        assert!((exact.heralds - 864.0).abs() < 1e-3);
        assert_eq!(exact.saving_factor, Some(1e4));
        assert!(DeviceModel::new(1e-4, 0.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn budget_is_linear() {
        let base = DeviceModel::new(1e-4, 1e6, 86_400.0, 0.5).unwrap();
        let b0 = budget_from_probability(3e-7, &base).unwrap().heralds;
        for (dev, f) in [
            (DeviceModel::new(1e-4, 3e6, 86_400.0, 0.5).unwrap(), 3.0),
            (DeviceModel::new(1e-4, 1e6, 43_200.0, 0.5).unwrap(), 0.5),
            (DeviceModel::new(1e-4, 1e6, 86_400.0, 0.25).unwrap(), 0.5),
        ] {
            let b = budget_from_probability(3e-7, &dev).unwrap().heralds;
            assert!((b / (f * b0) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn noisy_endpoints_and_monotonicity() {
        let p = k_params(1e-2, 1.0);
        assert!(noisy_visibilities(&p, noise(0.0)).unwrap().max_deviation_from_one() < 1e-12);
        let full = noisy_visibilities(&p, noise(1.0)).unwrap();
        assert!(full.values.iter().all(|v| (v - 0.5).abs() < 1e-12));
        let mut prev = [f64::INFINITY; 4];
        for i in 0..=20 {
            let v = noisy_visibilities(&p, noise(i as f64 / 20.0)).unwrap().values;
            for j in 0..4 {
                assert!(v[j] <= prev[j] + 1e-14);
            }
            prev = v;
        }
    }

    #[test]
    fn noisy_matches_closed_form() {
        let p = k_params(1e-2, 1.0);
        let q = 0.2;
        let v = noisy_visibilities(&p, noise(q)).unwrap().values;
        let exact = |x: f64| ((1.0 - q) * x + q / 4.0) / ((1.0 - q) * x + q / 2.0);
        assert!((v[0] - (1.0 - q / 2.0)).abs() < 1e-12);
        assert!((v[2] - exact(heralding_probability(&p))).abs() < 1e-10);
        assert!((v[3] - exact(heralding_probability_perp(&p))).abs() < 1e-10);
        let d = noise_discrepancy(&p, noise(q)).unwrap();
        assert!((d.printed[0] - 1.0 / 1.2).abs() < 1e-15);
        assert!(d.max_abs_difference > 1e-2);
    }

    #[test]
    fn joint_hits_are_affine_in_q() {
        let p = k_params(1e-2, 1.0);
        let h: Vec<[f64; 4]> = [0.1, 0.4, 0.7]
            .iter()
            .map(|&q| noisy_joint_hits(&p, noise(q)).unwrap())
            .collect();
        for ((lo, mid), hi) in h[0].iter().zip(&h[1]).zip(&h[2]) {
            assert!((mid - (lo + (hi - lo) * 0.5)).abs() < 1e-12);
        }
    }

    #[test]
    fn decoherence_threshold_behaviour() {
        let p = k_params(1e-2, 1.0);
        assert_eq!(
            decoherence_threshold(&p, &DeviceModel::with_gamma(0.999).unwrap()).unwrap(),
            0.0
        );
        let dev = DeviceModel::with_gamma(1e-3).unwrap();
        let q_star = decoherence_threshold(&p, &dev).unwrap();
        assert!(q_star > 0.0 && q_star < 1.0);
        let above = evaluate_criterion_with_noise(&p, &dev, noise((q_star + 1e-3).min(1.0))).unwrap();
        assert!(!above.distinguishable_by_visibility);
        let below = evaluate_criterion_with_noise(&p, &dev, noise(q_star * 0.9)).unwrap();
        assert!(below.distinguishable_by_visibility);
    }
}
