//! Separable (classical-mediator) models and their steering predictions.
//!
//! Three separable models are provided:
//! - [`build_separable`]: the mixture of the four heralded product states,
//!   each weighted by half its quantum heralding probability. This is the
//!   model whose visibilities contradict the quantum ones.
//! - [`product_simulator`]: `|+⟩|+⟩`, which matches every quantum outcome
//!   probability to `O(θ²)`.
//! - [`marginal_simulator`]: `ρ_A ⊗ |+⟩⟨+|`, which reproduces the quantum
//!   outcome probabilities on A exactly.

use crate::bmv::{
    ensemble_visibilities, entangled_state, heralding_probability, heralding_probability_perp, reference_projectors,
    reference_states, BmvParams, Predictions,
};
use crate::error::{invalid, Error, Result};
use crate::linalg::{c, ComplexMatrix};
use crate::quantum::{
    ket_minus, ket_plus, steer, steer_mixture, DensityMatrix, MeasurementBasis, ModelKind, PureState, SteeringEnsemble,
    VisibilityReport, STATE_TOL,
};

#[derive(Debug, Clone, PartialEq)]
pub struct SeparableComponent {
    pub weight: f64,
    pub state_a: PureState,
    pub state_b: PureState,
}

/// Convex mixture of pure product states.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableModel {
    components: Vec<SeparableComponent>,
    deficit: f64,
}

impl SeparableModel {
    /// Drops zero-weight terms and renormalizes; `1 − Σw` before
    /// renormalization is kept as [`SeparableModel::deficit`].
    pub fn new(components: Vec<SeparableComponent>) -> Result<Self> {
        let mut total = 0.0;
        for comp in &components {
            if !(comp.weight >= 0.0 && comp.weight.is_finite()) {
                return Err(invalid("weight", comp.weight, "weights must be finite and nonnegative"));
            }
            total += comp.weight;
        }
        if total <= 0.0 {
            return Err(invalid("weight", total, "total weight must be positive"));
        }
        let components = components
            .into_iter()
            .filter(|comp| comp.weight > 0.0)
            .map(|comp| SeparableComponent {
                weight: comp.weight / total,
                ..comp
            })
            .collect();
        Ok(Self {
            components,
            deficit: 1.0 - total,
        })
    }

    pub fn components(&self) -> &[SeparableComponent] {
        &self.components
    }

    pub fn deficit(&self) -> f64 {
        self.deficit
    }

    /// Components as pure joint states `|a⟩|b⟩`.
    pub fn joint_components(&self) -> Vec<(f64, PureState)> {
        self.components
            .iter()
            .map(|comp| (comp.weight, comp.state_a.kron(&comp.state_b).expect("small dims")))
            .collect()
    }

    pub fn density_matrix(&self) -> Result<DensityMatrix> {
        DensityMatrix::from_mixture(&self.joint_components())
    }
}

/// The heralded-product mixture
/// `½[½|0⟩|φ₊⟩ + ½|1⟩|φ₋⟩] + ½[p_ε|ε⟩|χ_ε⟩ + p_ε⊥|ε⊥⟩|χ_ε⊥⟩]`.
pub fn build_separable(params: &BmvParams) -> Result<SeparableModel> {
    let [phi_p, phi_m, chi_e, chi_ep] = reference_states(params);
    let a = params.basis_a();
    let ka = a.projectors();
    let p_e = heralding_probability(params);
    let p_ep = heralding_probability_perp(params);
    SeparableModel::new(vec![
        SeparableComponent {
            weight: 0.25,
            state_a: ka[0].state().clone(),
            state_b: phi_p,
        },
        SeparableComponent {
            weight: 0.25,
            state_a: ka[1].state().clone(),
            state_b: phi_m,
        },
        SeparableComponent {
            weight: 0.5 * p_e,
            state_a: params.epsilon_ket(),
            state_b: chi_e,
        },
        SeparableComponent {
            weight: 0.5 * p_ep,
            state_a: params.epsilon_perp_ket(),
            state_b: chi_ep,
        },
    ])
}

/// Generic version of [`build_separable`]: measures A of `psi` in each basis,
/// chosen uniformly, and mixes `|outcome⟩|steered state⟩` with the heralding
/// probabilities as weights. Zero-probability branches are skipped.
pub fn steering_mixture(psi: &PureState, bases: &[MeasurementBasis]) -> Result<SeparableModel> {
    if bases.is_empty() {
        return Err(invalid("bases", 0.0, "need at least one measurement basis"));
    }
    let share = 1.0 / bases.len() as f64;
    let mut components = Vec::new();
    for basis in bases {
        for proj in basis.projectors() {
            let u = proj.state().contract_first(psi.vector())?;
            let p = u.norm_sqr();
            if p > 0.0 {
                components.push(SeparableComponent {
                    weight: share * p,
                    state_a: proj.state().clone(),
                    state_b: PureState::normalize(u)?,
                });
            }
        }
    }
    SeparableModel::new(components)
}

/// `|+⟩_A|+⟩_B`.
pub fn product_simulator() -> SeparableModel {
    SeparableModel::new(vec![SeparableComponent {
        weight: 1.0,
        state_a: ket_plus(),
        state_b: ket_plus(),
    }])
    .expect("single component")
}

/// `(cos²θ|+⟩⟨+| + sin²θ|−⟩⟨−|) ⊗ |+⟩⟨+|`: the quantum reduced state of A
/// paired with an uncorrelated B.
pub fn marginal_simulator(params: &BmvParams) -> SeparableModel {
    let (s, co) = params.theta().sin_cos();
    SeparableModel::new(vec![
        SeparableComponent {
            weight: co * co,
            state_a: ket_plus(),
            state_b: ket_plus(),
        },
        SeparableComponent {
            weight: s * s,
            state_a: ket_minus(),
            state_b: ket_plus(),
        },
    ])
    .expect("positive weights")
}

/// Steered ensembles of a separable model for both settings, built component
/// by component.
pub fn classical_steered_states(
    model: &SeparableModel,
    params: &BmvParams,
) -> Result<(SteeringEnsemble, SteeringEnsemble)> {
    let comps = model.joint_components();
    Ok((
        steer_mixture(&comps, &params.basis_a())?,
        steer_mixture(&comps, &params.basis_b())?,
    ))
}

/// Same as [`classical_steered_states`] but through the assembled 4×4 density matrix.
pub fn classical_steered_states_dense(
    model: &SeparableModel,
    params: &BmvParams,
) -> Result<(SteeringEnsemble, SteeringEnsemble)> {
    let rho = model.density_matrix()?;
    Ok((steer(&rho, &params.basis_a())?, steer(&rho, &params.basis_b())?))
}

/// Steered ensembles and visibilities of a separable model against the
/// quantum reference projectors.
pub fn model_predictions(model: &SeparableModel, params: &BmvParams) -> Result<Predictions> {
    let (basis_a, basis_b) = classical_steered_states(model, params)?;
    let values = ensemble_visibilities(&basis_a, &basis_b, &reference_projectors(params))?;
    Ok(Predictions {
        basis_a,
        basis_b,
        visibilities: VisibilityReport {
            model: ModelKind::Classical,
            values,
        },
    })
}

pub fn classical_visibilities(model: &SeparableModel, params: &BmvParams) -> Result<VisibilityReport> {
    Ok(model_predictions(model, params)?.visibilities)
}

/// `1/(1+k²)`, the small-coupling limit of the classical `V_{Π₂}`.
pub fn classical_visibility_limit(k: f64) -> f64 {
    1.0 / (1.0 + k * k)
}

/// `[P(0), P(1), P(ε), P(ε⊥)]`.
pub fn outcome_distribution(pred: &Predictions) -> [f64; 4] {
    pred.probabilities()
}

/// Largest per-setting total-variation distance between two outcome
/// distributions laid out as `[a₀, a₁, b₀, b₁]`.
pub fn tv_distance(p: &[f64; 4], q: &[f64; 4]) -> f64 {
    let a = 0.5 * ((p[0] - q[0]).abs() + (p[1] - q[1]).abs());
    let b = 0.5 * ((p[2] - q[2]).abs() + (p[3] - q[3]).abs());
    a.max(b)
}

/// Outcome-distribution distance between the quantum state and a separable model.
pub fn model_tv_distance(model: &SeparableModel, params: &BmvParams) -> Result<f64> {
    let psi = [(1.0, entangled_state(params.theta()))];
    let q = [
        steer_mixture(&psi, &params.basis_a())?,
        steer_mixture(&psi, &params.basis_b())?,
    ];
    let (ca, cb) = classical_steered_states(model, params)?;
    let qd = [
        q[0].probability(0),
        q[0].probability(1),
        q[1].probability(0),
        q[1].probability(1),
    ];
    let cd = [
        ca.probability(0),
        ca.probability(1),
        cb.probability(0),
        cb.probability(1),
    ];
    Ok(tv_distance(&qd, &cd))
}

/// Literal transcriptions of the displayed conditional states and
/// visibility ratios of the heralded-product mixture.
///
/// The displayed denominator for the `⟨ε⊥|` branch carries `p^(ε,χ_ε)` in
/// its middle term; the `|1⟩` component contributes there, so `p^(1,φ₋)`
/// is used instead.
pub mod formulas {
    use super::*;

    struct Symbols {
        e2: f64,
        one_minus_e2: f64,
        p0: f64,
        p1: f64,
        pe: f64,
        pep: f64,
    }

    fn symbols(params: &BmvParams) -> Symbols {
        let (a, b) = (params.alpha(), params.beta());
        Symbols {
            e2: 0.5 * (a + b).powi(2),
            one_minus_e2: 0.5 * (b - a).powi(2),
            p0: 0.5,
            p1: 0.5,
            pe: heralding_probability(params),
            pep: heralding_probability_perp(params),
        }
    }

    /// `|⟨φ_±|χ⟩|² = |cos²θ ± sin²θ·A|² / (cos²θ + sin²θ·A²)` for weak value `A`.
    pub fn phi_chi_overlap(theta: f64, a: f64, sign: f64) -> f64 {
        let (s, co) = theta.sin_cos();
        let num = co * co + sign * s * s * a;
        num * num / (co * co + s * s * a * a)
    }

    /// Normalized conditional states for outcomes `0, 1, ε, ε⊥`, assembled
    /// from the displayed weighted sums of `|φ±⟩⟨φ±|, |χ⟩⟨χ|`.
    pub fn conditional_states(params: &BmvParams) -> [ComplexMatrix; 4] {
        let s = symbols(params);
        let [fp, fm, ce, cep] = reference_states(params).map(|k| k.projector_matrix());
        let mix = |terms: [(f64, &ComplexMatrix); 3]| {
            let norm: f64 = terms.iter().map(|t| t.0).sum();
            terms
                .iter()
                .fold(ComplexMatrix::zeros(2, 2).expect("2x2"), |acc, (w, m)| {
                    acc.add(&m.scale(c(w / norm, 0.0))).expect("2x2")
                })
        };
        [
            mix([
                (0.5 * s.p0, &fp),
                (0.5 * s.e2 * s.pe, &ce),
                (0.5 * s.one_minus_e2 * s.pep, &cep),
            ]),
            mix([
                (0.5 * s.p1, &fm),
                (0.5 * s.one_minus_e2 * s.pe, &ce),
                (0.5 * s.e2 * s.pep, &cep),
            ]),
            mix([
                (0.5 * s.e2 * s.p0, &fp),
                (0.5 * s.one_minus_e2 * s.p1, &fm),
                (0.5 * s.pe, &ce),
            ]),
            mix([
                (0.5 * s.one_minus_e2 * s.p0, &fp),
                (0.5 * s.e2 * s.p1, &fm),
                (0.5 * s.pep, &cep),
            ]),
        ]
    }

    /// The four displayed visibility ratios.
    pub fn visibilities(params: &BmvParams) -> [f64; 4] {
        let s = symbols(params);
        let th = params.theta();
        let (aw, awp) = (params.a_w(), params.a_w_perp());
        let pe_p = phi_chi_overlap(th, aw, 1.0);
        let pep_p = phi_chi_overlap(th, awp, 1.0);
        let pe_m = phi_chi_overlap(th, aw, -1.0);
        let pep_m = phi_chi_overlap(th, awp, -1.0);
        let ratio = |num: f64, den: f64| num / den;
        [
            ratio(
                0.5 * s.p0 + 0.5 * s.e2 * s.pe * pe_p + 0.5 * s.one_minus_e2 * s.pep * pep_p,
                0.5 * s.p0 + 0.5 * s.e2 * s.pe + 0.5 * s.one_minus_e2 * s.pep,
            ),
            ratio(
                0.5 * s.p1 + 0.5 * s.one_minus_e2 * s.pe * pe_m + 0.5 * s.e2 * s.pep * pep_m,
                0.5 * s.p1 + 0.5 * s.one_minus_e2 * s.pe + 0.5 * s.e2 * s.pep,
            ),
            ratio(
                0.5 * s.e2 * s.p0 * pe_p + 0.5 * s.one_minus_e2 * s.p1 * pe_m + 0.5 * s.pe,
                0.5 * s.e2 * s.p0 + 0.5 * s.one_minus_e2 * s.p1 + 0.5 * s.pe,
            ),
            ratio(
                0.5 * s.one_minus_e2 * s.p0 * pep_p + 0.5 * s.e2 * s.p1 * pep_m + 0.5 * s.pep,
                0.5 * s.one_minus_e2 * s.p0 + 0.5 * s.e2 * s.p1 + 0.5 * s.pep,
            ),
        ]
    }
}

/// Checks that a model's weights form a probability vector.
pub fn check_weights(model: &SeparableModel) -> Result<()> {
    let total: f64 = model.components.iter().map(|comp| comp.weight).sum();
    if (total - 1.0).abs() > STATE_TOL {
        return Err(Error::BadTrace { trace: total });
    }
    Ok(())
}
