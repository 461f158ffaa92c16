//! A harmonic oscillator gravitationally coupled to a two-well atom.
//!
//! Oscillator states are finite sums of coherent states, so every inner
//! product is a closed-form Gaussian kernel. The atom is a qubit with
//! `|L⟩ → index 0` and `|R⟩ → index 1`.

use gauss_quad::GaussHermite;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;

use crate::classical::steering_mixture;
use crate::error::{invalid, Error, Result};
use crate::linalg::{c, ComplexMatrix, StateVector, C64, ONE, ZERO};
use crate::quantum::{steer_mixture, visibility, MeasurementBasis, Projector, PureState};

/// Heralding probabilities below this are reported as unobservable.
pub const HERALD_FLOOR: f64 = 1e-30;
pub const DEFAULT_MAX_LAMBDA: f64 = 0.1;
pub const DEFAULT_QUADRATURE_ORDER: usize = 32;
pub const QUADRATURE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OscillatorParams {
    pub omega: f64,
    pub g: f64,
    pub t: f64,
    pub theta_v: f64,
    pub nbar: f64,
    /// Detector resolution used to express the visibility gap as a `k` factor.
    pub resolution: f64,
}

impl OscillatorParams {
    pub fn new(omega: f64, g: f64, t: f64, theta_v: f64, nbar: f64, resolution: f64) -> Result<Self> {
        Self::with_max_lambda(omega, g, t, theta_v, nbar, resolution, DEFAULT_MAX_LAMBDA)
    }

    pub fn with_max_lambda(
        omega: f64,
        g: f64,
        t: f64,
        theta_v: f64,
        nbar: f64,
        resolution: f64,
        max_lambda: f64,
    ) -> Result<Self> {
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(invalid("omega", omega, "must be finite and positive"));
        }
        if !(g >= 0.0 && g.is_finite()) {
            return Err(invalid("g", g, "must be finite and nonnegative"));
        }
        if g / omega > max_lambda {
            return Err(invalid(
                "g",
                g,
                "coupling ratio g/omega exceeds the weak-coupling bound",
            ));
        }
        if !t.is_finite() {
            return Err(invalid("t", t, "must be finite"));
        }
        if !(theta_v > 0.0 && theta_v < std::f64::consts::FRAC_PI_4) {
            return Err(invalid("theta_v", theta_v, "must lie in (0, pi/4)"));
        }
        if !(nbar >= 0.0 && nbar.is_finite()) {
            return Err(invalid("nbar", nbar, "must be finite and nonnegative"));
        }
        if !(resolution > 0.0 && resolution < 1.0) {
            return Err(invalid("resolution", resolution, "must lie in (0, 1)"));
        }
        Ok(Self {
            omega,
            g,
            t,
            theta_v,
            nbar,
            resolution,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.g / self.omega
    }
}

/// `η = λ(e^{−iωt} − 1)`.
pub fn displaced_amplitude(params: &OscillatorParams) -> C64 {
    params.lambda() * (C64::from_polar(1.0, -params.omega * params.t) - ONE)
}

/// `⟨α|β⟩ = exp(−|α|²/2 − |β|²/2 + ᾱβ)`.
pub fn coherent_overlap(alpha: C64, beta: C64) -> C64 {
    (-0.5 * alpha.norm_sqr() - 0.5 * beta.norm_sqr() + alpha.conj() * beta).exp()
}

/// `D(η)|ζ⟩ = e^{(ηζ̄ − η̄ζ)/2} |ζ + η⟩`, returned as (phase, amplitude).
pub fn displace_coherent(eta: C64, zeta: C64) -> (C64, C64) {
    (((eta * zeta.conj() - eta.conj() * zeta) * 0.5).exp(), zeta + eta)
}

/// `Σ cᵢ |αᵢ⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherentSuperposition {
    terms: Vec<(C64, C64)>,
}

impl CoherentSuperposition {
    pub fn new(terms: Vec<(C64, C64)>) -> Result<Self> {
        for (i, (co, a)) in terms.iter().enumerate() {
            if !(co.re.is_finite() && co.im.is_finite() && a.re.is_finite() && a.im.is_finite()) {
                return Err(Error::NonFinite { index: i });
            }
        }
        Ok(Self { terms })
    }

    pub fn coherent(alpha: C64) -> Self {
        Self {
            terms: vec![(ONE, alpha)],
        }
    }

    pub fn terms(&self) -> &[(C64, C64)] {
        &self.terms
    }

    pub fn inner(&self, other: &CoherentSuperposition) -> C64 {
        let mut acc = ZERO;
        for (ci, ai) in &self.terms {
            for (dj, bj) in &other.terms {
                acc += ci.conj() * dj * coherent_overlap(*ai, *bj);
            }
        }
        acc
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).re.max(0.0).sqrt()
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            terms: self.terms.iter().map(|(co, a)| (co * factor, *a)).collect(),
        }
    }

    /// Formal sum; terms are concatenated, not merged.
    pub fn add(&self, other: &CoherentSuperposition) -> Self {
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&other.terms);
        Self { terms }
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::NotNormalized { norm: n });
        }
        Ok(self.scale(c(1.0 / n, 0.0)))
    }
}

/// Normalization constants `c± = 1/√(2(1 ± e^{−2|η|²}))`.
pub fn cat_constants(eta: C64) -> Result<(f64, f64)> {
    let x = 2.0 * eta.norm_sqr();
    if x == 0.0 {
        return Err(Error::DegenerateCat);
    }
    let e = (-x).exp();
    // 1 − e^{−x} via exp_m1 keeps c₋ accurate when |η| is tiny
    let minus = -(-x).exp_m1();
    Ok((1.0 / (2.0 * (1.0 + e)).sqrt(), 1.0 / (2.0 * minus).sqrt()))
}

/// `|cat_±⟩ = c±(|η⟩ ± |−η⟩)`.
pub fn cat_states(eta: C64) -> Result<(CoherentSuperposition, CoherentSuperposition)> {
    let (cp, cm) = cat_constants(eta)?;
    let plus = CoherentSuperposition::new(vec![(c(cp, 0.0), eta), (c(cp, 0.0), -eta)])?;
    let minus = CoherentSuperposition::new(vec![(c(cm, 0.0), eta), (c(-cm, 0.0), -eta)])?;
    Ok((plus, minus))
}

/// `|Ψ⟩ = |l⟩_A|L⟩ + |r⟩_A|R⟩` with unnormalized oscillator branches.
#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    pub left: CoherentSuperposition,
    pub right: CoherentSuperposition,
}

impl JointState {
    pub fn norm_sqr(&self) -> f64 {
        self.left.inner(&self.left).re + self.right.inner(&self.right).re
    }

    /// Unnormalized atom state `(⟨v|l⟩, ⟨v|r⟩)` left by projecting the oscillator on `v`.
    pub fn contract(&self, v: &CoherentSuperposition) -> [C64; 2] {
        [v.inner(&self.left), v.inner(&self.right)]
    }
}

/// Branch weights `(1/2c₊)² = (1 + e^{−2|η|²})/2` and `(1/2c₋)² = (1 − e^{−2|η|²})/2`.
pub fn branch_weights(eta: C64) -> Result<(f64, f64)> {
    let (cp, cm) = cat_constants(eta)?;
    Ok(((0.5 / cp).powi(2), (0.5 / cm).powi(2)))
}

/// Ground-state evolution followed by the Hadamard on the atom:
/// `(1/2c₊)|cat₊⟩|L⟩ + (1/2c₋)|cat₋⟩|R⟩`.
pub fn evolved_joint_state(params: &OscillatorParams) -> Result<JointState> {
    let eta = displaced_amplitude(params);
    let (cp, cm) = cat_constants(eta)?;
    let (plus, minus) = cat_states(eta)?;
    Ok(JointState {
        left: plus.scale(c(0.5 / cp, 0.0)),
        right: minus.scale(c(0.5 / cm, 0.0)),
    })
}

/// Same evolution from the coherent state `|ζ⟩`, keeping the displacement
/// phases that make the branches differ for `ζ ≠ 0`.
pub fn evolved_joint_state_from(params: &OscillatorParams, zeta: C64) -> JointState {
    let lam = params.lambda();
    let rot = C64::from_polar(1.0, -params.omega * params.t);
    let eta = displaced_amplitude(params);
    let zt = rot * zeta;
    let phase_l = -lam * zeta.im + lam * (rot * (zeta + lam)).im;
    let phase_r = lam * zeta.im - lam * (rot * (zeta - lam)).im;
    let a = (C64::from_polar(1.0, phase_l), zt + eta);
    let b = (C64::from_polar(1.0, phase_r), zt - eta);
    let half = c(0.5, 0.0);
    JointState {
        left: CoherentSuperposition {
            terms: vec![(a.0 * half, a.1), (b.0 * half, b.1)],
        },
        right: CoherentSuperposition {
            terms: vec![(a.0 * half, a.1), (-b.0 * half, b.1)],
        },
    }
}

/// `|v⟩ = sinθ_v|cat₊⟩ + cosθ_v|cat₋⟩`, `|v⊥⟩ = cosθ_v|cat₊⟩ − sinθ_v|cat₋⟩`.
pub fn steering_basis_v(theta_v: f64, eta: C64) -> Result<(CoherentSuperposition, CoherentSuperposition)> {
    if !theta_v.is_finite() {
        return Err(invalid("theta_v", theta_v, "must be finite"));
    }
    let (plus, minus) = cat_states(eta)?;
    let (s, co) = theta_v.sin_cos();
    let v = plus.scale(c(s, 0.0)).add(&minus.scale(c(co, 0.0)));
    let v_perp = plus.scale(c(co, 0.0)).add(&minus.scale(c(-s, 0.0)));
    Ok((v, v_perp))
}

/// `θ_v` at which `⟨v|cat₊⟩/2c₊ = ⟨v|cat₋⟩/2c₋`, so the heralded atom state
/// is `(|L⟩ + |R⟩)/√2`.
pub fn balanced_theta_v(eta: C64) -> Result<f64> {
    let (cp, cm) = cat_constants(eta)?;
    Ok((cp / cm).atan())
}

/// `|μ⟩ ∝ (⟨v|cat₊⟩/2c₊)|L⟩ + (⟨v|cat₋⟩/2c₋)|R⟩` with `⟨v|cat₊⟩ = sinθ_v`,
/// `⟨v|cat₋⟩ = cosθ_v`.
pub fn mu_state(theta_v: f64, eta: C64) -> Result<PureState> {
    let (cp, cm) = cat_constants(eta)?;
    let (s, co) = theta_v.sin_cos();
    PureState::normalize(StateVector::new(vec![c(s / (2.0 * cp), 0.0), c(co / (2.0 * cm), 0.0)])?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OscillatorReport {
    pub eta_re: f64,
    pub eta_im: f64,
    pub heralding_prob: f64,
    pub visibility: f64,
    pub classical_visibility: f64,
    /// `(V − V^C)/γ`.
    pub k_factor: f64,
}

fn atom_density(m: [[C64; 2]; 2], p: f64) -> Result<crate::quantum::DensityMatrix> {
    crate::quantum::DensityMatrix::new(ComplexMatrix::new(
        2,
        2,
        vec![m[0][0] / p, m[0][1] / p, m[1][0] / p, m[1][1] / p],
    )?)
}

fn outer2(u: [C64; 2]) -> [[C64; 2]; 2] {
    [
        [u[0] * u[0].conj(), u[0] * u[1].conj()],
        [u[1] * u[0].conj(), u[1] * u[1].conj()],
    ]
}

/// Classical `V_{Π_μ}` from the steering mixture of the effective two-qubit
/// state `(1/2c₊)|0⟩|L⟩ + (1/2c₋)|1⟩|R⟩` over the `{±}` and `{v, v⊥}` settings.
pub fn classical_oscillator_visibility(theta_v: f64, eta: C64) -> Result<f64> {
    let (wp, wm) = branch_weights(eta)?;
    let psi = PureState::normalize(StateVector::new(vec![
        c(wp.sqrt(), 0.0),
        ZERO,
        ZERO,
        c(wm.sqrt(), 0.0),
    ])?)?;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let (s, co) = theta_v.sin_cos();
    let ket = |a: f64, b: f64| PureState::from_amplitudes(vec![c(a, 0.0), c(b, 0.0)]);
    let pm = MeasurementBasis::from_kets(&[("+", ket(h, h)?), ("-", ket(h, -h)?)])?;
    let vb = MeasurementBasis::from_kets(&[("v", ket(s, co)?), ("v_perp", ket(co, -s)?)])?;
    let model = steering_mixture(&psi, &[pm, vb.clone()])?;
    let ens = steer_mixture(&model.joint_components(), &vb)?;
    visibility(ens.conditional(0)?, &Projector::onto(mu_state(theta_v, eta)?))
}

/// Ground-state heralding probability and visibility for the `⟨v|` outcome.
pub fn oscillator_visibility(params: &OscillatorParams) -> Result<OscillatorReport> {
    let eta = displaced_amplitude(params);
    let joint = evolved_joint_state(params)?;
    let (v, _) = steering_basis_v(params.theta_v, eta)?;
    let u = joint.contract(&v);
    let p = u[0].norm_sqr() + u[1].norm_sqr();
    if p < HERALD_FLOOR {
        return Err(Error::Unobservable {
            probability: p,
            floor: HERALD_FLOOR,
        });
    }
    let rho = atom_density(outer2(u), p)?;
    let vis = visibility(&rho, &Projector::onto(mu_state(params.theta_v, eta)?))?;
    finish_report(params, eta, p, vis)
}

fn finish_report(params: &OscillatorParams, eta: C64, p: f64, vis: f64) -> Result<OscillatorReport> {
    let vc = classical_oscillator_visibility(params.theta_v, eta)?;
    Ok(OscillatorReport {
        eta_re: eta.re,
        eta_im: eta.im,
        heralding_prob: p,
        visibility: vis,
        classical_visibility: vc,
        k_factor: (vis - vc) / params.resolution,
    })
}

/// Neumaier-compensated sum of complex values in the given order.
fn compensated_sum(values: impl IntoIterator<Item = C64>) -> C64 {
    let mut sum = [0.0f64; 2];
    let mut comp = [0.0f64; 2];
    for z in values {
        for (k, x) in [z.re, z.im].into_iter().enumerate() {
            let t = sum[k] + x;
            if sum[k].abs() >= x.abs() {
                comp[k] += (sum[k] - t) + x;
            } else {
                comp[k] += (x - t) + sum[k];
            }
            sum[k] = t;
        }
    }
    c(sum[0] + comp[0], sum[1] + comp[1])
}

/// Unnormalized conditional atom state `∫ P(ζ) u(ζ)u(ζ)† d²ζ` on a tensor
/// Gauss–Hermite grid of the given order.
fn thermal_conditional(params: &OscillatorParams, order: usize) -> Result<[[C64; 2]; 2]> {
    let eta = displaced_amplitude(params);
    let (v, _) = steering_basis_v(params.theta_v, eta)?;
    let rule =
        GaussHermite::new(order).map_err(|_| invalid("order", order as f64, "quadrature order must be at least 2"))?;
    let nodes: Vec<(f64, f64)> = rule.as_node_weight_pairs().to_vec();
    let scale = params.nbar.sqrt();
    let rows: Vec<[[C64; 2]; 2]> = nodes
        .par_iter()
        .map(|&(x, wx)| {
            let cells: Vec<[[C64; 2]; 2]> = nodes
                .iter()
                .map(|&(y, wy)| {
                    let zeta = c(scale * x, scale * y);
                    let u = evolved_joint_state_from(params, zeta).contract(&v);
                    let m = outer2(u);
                    let w = c(wx * wy / std::f64::consts::PI, 0.0);
                    [[m[0][0] * w, m[0][1] * w], [m[1][0] * w, m[1][1] * w]]
                })
                .collect();
            let entry = |i: usize, j: usize| compensated_sum(cells.iter().map(|m| m[i][j]));
            [[entry(0, 0), entry(0, 1)], [entry(1, 0), entry(1, 1)]]
        })
        .collect();
    let entry = |i: usize, j: usize| compensated_sum(rows.iter().map(|m| m[i][j]));
    Ok([[entry(0, 0), entry(0, 1)], [entry(1, 0), entry(1, 1)]])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThermalReport {
    pub heralding_prob: f64,
    pub visibility: f64,
    pub order: usize,
    /// `|V(order) − V(2·order)|`.
    pub convergence_delta: f64,
}

fn thermal_at_order(params: &OscillatorParams, order: usize) -> Result<(f64, f64)> {
    let eta = displaced_amplitude(params);
    let m = thermal_conditional(params, order)?;
    let p = m[0][0].re + m[1][1].re;
    if p < HERALD_FLOOR {
        return Err(Error::Unobservable {
            probability: p,
            floor: HERALD_FLOOR,
        });
    }
    let rho = atom_density(m, p)?;
    let vis = visibility(&rho, &Projector::onto(mu_state(params.theta_v, eta)?))?;
    Ok((p, vis))
}

/// Thermal-state visibility at a given quadrature order, checked against
/// twice that order.
pub fn thermal_visibility_with_order(params: &OscillatorParams, order: usize) -> Result<ThermalReport> {
    if params.nbar <= 0.0 {
        return Err(invalid("nbar", params.nbar, "thermal averaging needs nbar > 0"));
    }
    let (p, vis) = thermal_at_order(params, order)?;
    let (_, vis_hi) = thermal_at_order(params, 2 * order)?;
    let delta = (vis - vis_hi).abs();
    if delta > QUADRATURE_TOL {
        return Err(Error::QuadratureNotConverged {
            low: order,
            high: 2 * order,
            delta,
        });
    }
    Ok(ThermalReport {
        heralding_prob: p,
        visibility: vis,
        order,
        convergence_delta: delta,
    })
}

pub fn thermal_visibility(params: &OscillatorParams) -> Result<ThermalReport> {
    thermal_visibility_with_order(params, DEFAULT_QUADRATURE_ORDER)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonteCarloThermal {
    pub heralding_prob: f64,
    pub visibility: f64,
    pub standard_error: f64,
    pub samples: usize,
}

/// Monte Carlo estimate of the thermal visibility with `ζ` drawn from the
/// thermal Glauber–Sudarshan weight; the error bar is the delta-method
/// standard error of the ratio estimator.
pub fn thermal_visibility_mc(params: &OscillatorParams, samples: usize, seed: u64) -> Result<MonteCarloThermal> {
    if samples < 2 {
        return Err(invalid("samples", samples as f64, "need at least two samples"));
    }
    if params.nbar <= 0.0 {
        return Err(invalid("nbar", params.nbar, "thermal averaging needs nbar > 0"));
    }
    let eta = displaced_amplitude(params);
    let (v, _) = steering_basis_v(params.theta_v, eta)?;
    let mu = mu_state(params.theta_v, eta)?;
    let mu = [mu.amplitudes()[0], mu.amplitudes()[1]];
    let normal = Normal::new(0.0, (params.nbar / 2.0).sqrt()).expect("positive sigma");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = Vec::with_capacity(samples);
    let mut norms = Vec::with_capacity(samples);
    for _ in 0..samples {
        let zeta = c(normal.sample(&mut rng), normal.sample(&mut rng));
        let u = evolved_joint_state_from(params, zeta).contract(&v);
        hits.push((mu[0].conj() * u[0] + mu[1].conj() * u[1]).norm_sqr());
        norms.push(u[0].norm_sqr() + u[1].norm_sqr());
    }
    let n = samples as f64;
    let mean_b = norms.iter().sum::<f64>() / n;
    let vis = hits.iter().sum::<f64>() / norms.iter().sum::<f64>();
    let resid: Vec<f64> = hits.iter().zip(&norms).map(|(a, b)| a - vis * b).collect();
    let mean_r = resid.iter().sum::<f64>() / n;
    let var_r = resid.iter().map(|r| (r - mean_r).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(MonteCarloThermal {
        heralding_prob: mean_b,
        visibility: vis,
        standard_error: (var_r / n).sqrt() / mean_b,
        samples,
    })
}

/// Truncated Fock-space representation, used only to cross-check the
/// coherent-state algebra.
pub mod fock {
    use super::*;

    pub const MAX_CUTOFF: usize = 64;

    fn check(cutoff: usize) -> Result<()> {
        if !(2..=MAX_CUTOFF).contains(&cutoff) {
            return Err(invalid("cutoff", cutoff as f64, "Fock cutoff must lie in [2, 64]"));
        }
        Ok(())
    }

    /// `e^{−|α|²/2} Σ αⁿ/√n! |n⟩` for `n < cutoff`.
    pub fn coherent(alpha: C64, cutoff: usize) -> Result<StateVector> {
        check(cutoff)?;
        let mut amps = Vec::with_capacity(cutoff);
        let mut term = c((-0.5 * alpha.norm_sqr()).exp(), 0.0);
        for n in 0..cutoff {
            amps.push(term);
            term = term * alpha / ((n + 1) as f64).sqrt();
        }
        StateVector::new(amps)
    }

    pub fn superposition(state: &CoherentSuperposition, cutoff: usize) -> Result<StateVector> {
        let mut acc = StateVector::zeros(cutoff)?;
        for (co, a) in state.terms() {
            acc = acc.add(&coherent(*a, cutoff)?.scale(*co))?;
        }
        Ok(acc)
    }

    /// `exp(z a†)` truncated; lower triangular.
    fn exp_creation(z: C64, cutoff: usize) -> Result<ComplexMatrix> {
        ComplexMatrix::from_fn(cutoff, cutoff, |m, j| {
            if m < j {
                return ZERO;
            }
            let d = m - j;
            // z^d/d! · √(m!/j!)
            let mut v = ONE;
            for i in 1..=d {
                v = v * z / i as f64;
            }
            for i in (j + 1)..=m {
                v *= (i as f64).sqrt();
            }
            v
        })
    }

    /// `D(η) = e^{−|η|²/2} e^{ηa†} e^{−η̄a}` applied to `v`, evaluated right to
    /// left so that no large alternating sums appear.
    pub fn displace(eta: C64, v: &StateVector) -> Result<StateVector> {
        let cutoff = v.dim();
        check(cutoff)?;
        // the adjoint of exp(−η a†) is exp(−η̄ a)
        let annihilate = exp_creation(-eta, cutoff)?.dagger();
        let create = exp_creation(eta, cutoff)?;
        let w = annihilate.apply(v)?;
        Ok(create.apply(&w)?.scale(c((-0.5 * eta.norm_sqr()).exp(), 0.0)))
    }
}
