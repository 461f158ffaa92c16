//! Quantum-mediator predictions for two gravitationally coupled path qubits.
//!
//! The post-selection state on A is parameterized internally by
//! `α = ⟨ε|+⟩` and `β = ⟨ε⊥|+⟩` rather than by `ε` itself, because at large
//! weak values `ε − √(1−ε²)` is a catastrophic cancellation.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::linalg::{c, pauli_z, ComplexMatrix, C64, I};
use crate::quantum::{
    ket_minus, ket_plus, steer_mixture, visibility, MeasurementBasis, ModelKind, Projector, PureState,
    SteeringEnsemble, VisibilityReport,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GravityParams {
    pub newton_g: f64,
    pub m1: f64,
    pub m2: f64,
    pub d: f64,
    pub l: f64,
    pub tau: f64,
    pub hbar: f64,
}

impl GravityParams {
    pub const NEWTON_G: f64 = 6.674e-11;
    pub const HBAR: f64 = 1.054_571_817e-34;

    pub fn new(newton_g: f64, m1: f64, m2: f64, d: f64, l: f64, tau: f64, hbar: f64) -> Result<Self> {
        for (name, v) in [
            ("newton_g", newton_g),
            ("m1", m1),
            ("m2", m2),
            ("tau", tau),
            ("hbar", hbar),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(name, v, "must be finite and strictly positive"));
            }
        }
        if !(d.is_finite() && d > 0.0) {
            return Err(invalid("d", d, "arm separation must be strictly positive"));
        }
        if !(l.is_finite() && l >= 0.0) {
            return Err(invalid("l", l, "arm length must be nonnegative"));
        }
        Ok(Self {
            newton_g,
            m1,
            m2,
            d,
            l,
            tau,
            hbar,
        })
    }
}

/// Returns `(Δφ, θ)` with `Δφ = G m₁ m₂ (1/d − 1/√(d²+L²))` and `θ = Δφ τ / 2ħ`.
pub fn gravitational_phase(gp: &GravityParams) -> (f64, f64) {
    let (d, l) = (gp.d, gp.l);
    let r = d.hypot(l);
    // 1/d − 1/r rewritten as L²/(d r (r + d)) to avoid cancellation when L ≪ d
    let geometric = l * l / (d * r * (r + d));
    let delta_phi = gp.newton_g * gp.m1 * gp.m2 * geometric;
    (delta_phi, delta_phi * gp.tau / (2.0 * gp.hbar))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeakValuePair {
    pub a_w: f64,
    pub a_w_perp: f64,
    pub k: Option<f64>,
}

fn overlaps_from_epsilon(epsilon: f64) -> Result<(f64, f64)> {
    let threshold = std::f64::consts::FRAC_1_SQRT_2;
    if epsilon == threshold {
        return Err(Error::PostSelectionOrthogonal);
    }
    if !(epsilon > threshold && epsilon <= 1.0) {
        return Err(invalid("epsilon", epsilon, "must lie in (1/sqrt(2), 1]"));
    }
    let s = (1.0 - epsilon * epsilon).sqrt();
    let sum = epsilon + s;
    let diff = (2.0 * epsilon).mul_add(epsilon, -1.0) / sum;
    if diff <= 0.0 {
        return Err(Error::PostSelectionOrthogonal);
    }
    let r = std::f64::consts::SQRT_2;
    Ok((diff / r, sum / r))
}

fn overlaps_from_weak_value(a_w: f64) -> Result<(f64, f64)> {
    if !(a_w.is_finite() && a_w >= 1.0) {
        return Err(invalid("a_w", a_w, "weak value must be finite and at least 1"));
    }
    let n = 1.0f64.hypot(a_w);
    Ok((1.0 / n, a_w / n))
}

/// `A_w^ε = (ε+√(1−ε²))/(ε−√(1−ε²))` and its orthogonal partner `−1/A_w^ε`.
pub fn weak_values(epsilon: f64) -> Result<WeakValuePair> {
    let (alpha, beta) = overlaps_from_epsilon(epsilon)?;
    let a_w = beta / alpha;
    Ok(WeakValuePair {
        a_w,
        a_w_perp: -alpha / beta,
        k: None,
    })
}

/// Inverse of [`weak_values`].
pub fn epsilon_for_weak_value(a_w: f64) -> Result<f64> {
    let (alpha, beta) = overlaps_from_weak_value(a_w)?;
    Ok((alpha + beta) * std::f64::consts::FRAC_1_SQRT_2)
}

/// Coupling phase and post-selection state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BmvParams {
    theta: f64,
    alpha: f64,
    beta: f64,
}

impl BmvParams {
    fn check_theta(theta: f64) -> Result<()> {
        if !(0.0..std::f64::consts::FRAC_PI_2).contains(&theta) {
            return Err(invalid("theta", theta, "coupling phase must lie in [0, pi/2)"));
        }
        Ok(())
    }

    pub fn new(theta: f64, epsilon: f64) -> Result<Self> {
        Self::check_theta(theta)?;
        let (alpha, beta) = overlaps_from_epsilon(epsilon)?;
        Ok(Self { theta, alpha, beta })
    }

    pub fn with_weak_value(theta: f64, a_w: f64) -> Result<Self> {
        Self::check_theta(theta)?;
        let (alpha, beta) = overlaps_from_weak_value(a_w)?;
        Ok(Self { theta, alpha, beta })
    }

    /// Fixes `A_w = k/θ`, which requires `θ > 0` and `k ≥ θ`.
    pub fn with_amplification(theta: f64, k: f64) -> Result<Self> {
        Self::check_theta(theta)?;
        if theta == 0.0 {
            return Err(invalid("theta", theta, "amplification needs a nonzero coupling"));
        }
        if !(k.is_finite() && k >= theta) {
            return Err(invalid("k", k, "needs k >= theta so that the weak value is at least 1"));
        }
        Self::with_weak_value(theta, k / theta)
    }

    pub fn from_gravity(gp: &GravityParams, epsilon: f64) -> Result<Self> {
        Self::new(gravitational_phase(gp).1, epsilon)
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn epsilon(&self) -> f64 {
        (self.alpha + self.beta) * std::f64::consts::FRAC_1_SQRT_2
    }

    /// `⟨ε|+⟩`.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `⟨ε⊥|+⟩`.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn a_w(&self) -> f64 {
        self.beta / self.alpha
    }

    pub fn a_w_perp(&self) -> f64 {
        -self.alpha / self.beta
    }

    pub fn k(&self) -> f64 {
        self.theta * self.a_w()
    }

    pub fn weak_values(&self) -> WeakValuePair {
        WeakValuePair {
            a_w: self.a_w(),
            a_w_perp: self.a_w_perp(),
            k: Some(self.k()),
        }
    }

    /// `|ε⟩ = α|+⟩ + β|−⟩`.
    pub fn epsilon_ket(&self) -> PureState {
        pm_combination(c(self.alpha, 0.0), c(self.beta, 0.0))
    }

    /// `|ε⊥⟩ = β|+⟩ − α|−⟩`.
    pub fn epsilon_perp_ket(&self) -> PureState {
        pm_combination(c(self.beta, 0.0), c(-self.alpha, 0.0))
    }

    pub fn basis_a(&self) -> MeasurementBasis {
        MeasurementBasis::computational()
    }

    pub fn basis_b(&self) -> MeasurementBasis {
        MeasurementBasis::from_kets(&[("eps", self.epsilon_ket()), ("eps_perp", self.epsilon_perp_ket())])
            .expect("orthonormal by construction")
    }
}

/// `a|+⟩ + b|−⟩`, normalized.
pub(crate) fn pm_combination(a: C64, b: C64) -> PureState {
    let v = ket_plus()
        .vector()
        .scale(a)
        .add(&ket_minus().vector().scale(b))
        .expect("same dimension");
    PureState::normalize(v).expect("nonzero combination")
}

/// `cosθ I⊗I + i sinθ Z⊗Z`.
pub fn evolution_unitary(theta: f64) -> ComplexMatrix {
    let zz = pauli_z().kron(&pauli_z()).expect("4x4");
    ComplexMatrix::identity(4)
        .expect("4x4")
        .scale(c(theta.cos(), 0.0))
        .add(&zz.scale(I * theta.sin()))
        .expect("4x4")
}

/// `cosθ|+⟩|+⟩ + i sinθ|−⟩|−⟩`.
pub fn entangled_state(theta: f64) -> PureState {
    let pp = ket_plus().kron(&ket_plus()).expect("4");
    let mm = ket_minus().kron(&ket_minus()).expect("4");
    let v = pp
        .vector()
        .scale(c(theta.cos(), 0.0))
        .add(&mm.vector().scale(I * theta.sin()))
        .expect("4");
    PureState::normalize(v).expect("unit")
}

/// `p^(ε,χ_ε) = α²cos²θ + β²sin²θ`.
pub fn heralding_probability(params: &BmvParams) -> f64 {
    let (s, co) = params.theta.sin_cos();
    (params.alpha * co).powi(2) + (params.beta * s).powi(2)
}

/// `p^(ε⊥,χ_ε⊥) = β²cos²θ + α²sin²θ`.
pub fn heralding_probability_perp(params: &BmvParams) -> f64 {
    let (s, co) = params.theta.sin_cos();
    (params.beta * co).powi(2) + (params.alpha * s).powi(2)
}

/// Reference states `|φ₊⟩, |φ₋⟩, |χ_ε⟩, |χ_ε⊥⟩` from their closed forms.
pub fn reference_states(params: &BmvParams) -> [PureState; 4] {
    let (s, co) = params.theta.sin_cos();
    [
        pm_combination(c(co, 0.0), I * s),
        pm_combination(c(co, 0.0), -I * s),
        pm_combination(c(co, 0.0), I * (s * params.a_w())),
        pm_combination(c(co, 0.0), I * (s * params.a_w_perp())),
    ]
}

pub fn reference_projectors(params: &BmvParams) -> [Projector; 4] {
    reference_states(params).map(Projector::onto)
}

/// Steered ensembles for both measurement settings and the four visibilities.
#[derive(Debug, Clone)]
pub struct Predictions {
    pub basis_a: SteeringEnsemble,
    pub basis_b: SteeringEnsemble,
    pub visibilities: VisibilityReport,
}

impl Predictions {
    /// `[p(0), p(1), p(ε), p(ε⊥)]`.
    pub fn probabilities(&self) -> [f64; 4] {
        [
            self.basis_a.probability(0),
            self.basis_a.probability(1),
            self.basis_b.probability(0),
            self.basis_b.probability(1),
        ]
    }
}

pub fn quantum_predictions(params: &BmvParams) -> Result<Predictions> {
    let psi = [(1.0, entangled_state(params.theta))];
    let basis_a = steer_mixture(&psi, &params.basis_a())?;
    let basis_b = steer_mixture(&psi, &params.basis_b())?;
    let values = ensemble_visibilities(&basis_a, &basis_b, &reference_projectors(params))?;
    Ok(Predictions {
        basis_a,
        basis_b,
        visibilities: VisibilityReport {
            model: ModelKind::Quantum,
            values,
        },
    })
}

/// `Tr(Π_i ρ_i)` pairing each reference projector with its own branch.
pub(crate) fn ensemble_visibilities(
    basis_a: &SteeringEnsemble,
    basis_b: &SteeringEnsemble,
    projectors: &[Projector; 4],
) -> Result<[f64; 4]> {
    Ok([
        visibility(basis_a.conditional(0)?, &projectors[0])?,
        visibility(basis_a.conditional(1)?, &projectors[1])?,
        visibility(basis_b.conditional(0)?, &projectors[2])?,
        visibility(basis_b.conditional(1)?, &projectors[3])?,
    ])
}
