//! States, projective measurements, the depolarizing channel, steering
//! decompositions and two-qubit entanglement oracles.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::linalg::{c, outer, ComplexMatrix, StateVector, Subsystem, C64, ONE, ZERO};

/// Tolerance for the validity invariants of states and projectors.
pub const STATE_TOL: f64 = 1e-10;

/// Heralding probabilities at or below this are treated as zero by the
/// density-matrix steering route, whose roundoff sits near 1e-17.
pub const ZERO_BRANCH_DENSE: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    vector: StateVector,
}

impl PureState {
    pub fn new(vector: StateVector) -> Result<Self> {
        let norm = vector.norm();
        if (norm - 1.0).abs() > STATE_TOL {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self { vector })
    }

    /// Rescales a nonzero vector to unit norm.
    pub fn normalize(vector: StateVector) -> Result<Self> {
        let norm = vector.norm();
        if norm == 0.0 {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self {
            vector: vector.scale(c(1.0 / norm, 0.0)),
        })
    }

    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        Self::new(StateVector::new(amps)?)
    }

    pub fn vector(&self) -> &StateVector {
        &self.vector
    }

    pub fn dim(&self) -> usize {
        self.vector.dim()
    }

    pub fn amplitudes(&self) -> &[C64] {
        self.vector.amplitudes()
    }

    pub fn inner(&self, other: &PureState) -> Result<C64> {
        self.vector.inner(&other.vector)
    }

    pub fn kron(&self, other: &PureState) -> Result<PureState> {
        Ok(PureState {
            vector: self.vector.kron(&other.vector)?,
        })
    }

    pub fn projector_matrix(&self) -> ComplexMatrix {
        outer(&self.vector, &self.vector)
    }

    /// `⟨self| ⊗ I` applied to a bipartite vector whose first factor
    /// matches this state's dimension.
    pub fn contract_first(&self, joint: &StateVector) -> Result<StateVector> {
        let da = self.dim();
        if da == 0 || !joint.dim().is_multiple_of(da) {
            return Err(Error::DimensionMismatch {
                expected: da,
                actual: joint.dim(),
            });
        }
        let db = joint.dim() / da;
        let amps = (0..db)
            .map(|j| (0..da).map(|i| self.vector.get(i).conj() * joint.get(i * db + j)).sum())
            .collect();
        StateVector::new(amps)
    }
}

pub fn ket0() -> PureState {
    PureState::from_amplitudes(vec![ONE, ZERO]).expect("unit vector")
}

pub fn ket1() -> PureState {
    PureState::from_amplitudes(vec![ZERO, ONE]).expect("unit vector")
}

pub fn ket_plus() -> PureState {
    let h = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    PureState::from_amplitudes(vec![h, h]).expect("unit vector")
}

pub fn ket_minus() -> PureState {
    let h = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    PureState::from_amplitudes(vec![h, -h]).expect("unit vector")
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch {
                expected: matrix.rows(),
                actual: matrix.cols(),
            });
        }
        let deviation = matrix.hermitian_deviation();
        if deviation > STATE_TOL {
            return Err(Error::NotHermitian { deviation });
        }
        let trace = matrix.trace().re;
        if (trace - 1.0).abs() > STATE_TOL {
            return Err(Error::BadTrace { trace });
        }
        let min = matrix.hermitian_eigenvalues()?[0];
        if min < -STATE_TOL {
            return Err(Error::NotPositive { eigenvalue: min });
        }
        Ok(Self { matrix })
    }

    pub fn from_pure(psi: &PureState) -> Self {
        Self {
            matrix: psi.projector_matrix(),
        }
    }

    /// `Σ w_i |ψ_i⟩⟨ψ_i|` for nonnegative weights summing to one.
    pub fn from_mixture(components: &[(f64, PureState)]) -> Result<Self> {
        let first = components
            .first()
            .ok_or(Error::DimensionMismatch { expected: 1, actual: 0 })?;
        let dim = first.1.dim();
        let mut acc = ComplexMatrix::zeros(dim, dim)?;
        for (w, psi) in components {
            if w.is_nan() || *w < 0.0 {
                return Err(invalid("weight", *w, "mixture weights must be nonnegative"));
            }
            acc = acc.add(&psi.projector_matrix().scale(c(*w, 0.0)))?;
        }
        Self::new(acc)
    }

    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        Self::new(ComplexMatrix::identity(dim)?.scale(c(1.0 / dim as f64, 0.0)))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn purity(&self) -> f64 {
        self.matrix.matmul(&self.matrix).expect("square").trace().re
    }

    pub fn partial_trace(&self, dims: (usize, usize), keep: Subsystem) -> Result<DensityMatrix> {
        Self::new(self.matrix.partial_trace(dims, keep)?)
    }

    /// `⟨v|ρ|v⟩`.
    pub fn expectation(&self, v: &PureState) -> Result<f64> {
        let rv = self.matrix.apply(v.vector())?;
        Ok(v.vector().inner(&rv)?.re)
    }
}

/// Rank-1 orthogonal projector `|π⟩⟨π|`.
#[derive(Debug, Clone, PartialEq)]
pub struct Projector {
    state: PureState,
}

impl Projector {
    pub fn onto(state: PureState) -> Self {
        Self { state }
    }

    /// Accepts a matrix only if it is Hermitian, idempotent and of unit trace.
    pub fn from_matrix(m: &ComplexMatrix) -> Result<Self> {
        if !m.is_square()
            || m.hermitian_deviation() > STATE_TOL
            || (m.trace() - ONE).norm() > STATE_TOL
            || m.matmul(m)?.max_abs_diff(m) > STATE_TOL
        {
            return Err(Error::NotRankOneProjector);
        }
        let n = m.rows();
        let col = (0..n)
            .max_by(|&a, &b| {
                let na: f64 = (0..n).map(|i| m.get(i, a).norm_sqr()).sum();
                let nb: f64 = (0..n).map(|i| m.get(i, b).norm_sqr()).sum();
                na.total_cmp(&nb)
            })
            .ok_or(Error::NotRankOneProjector)?;
        let v = StateVector::new((0..n).map(|i| m.get(i, col)).collect())?;
        Ok(Self {
            state: PureState::normalize(v)?,
        })
    }

    pub fn state(&self) -> &PureState {
        &self.state
    }

    pub fn dim(&self) -> usize {
        self.state.dim()
    }

    pub fn matrix(&self) -> ComplexMatrix {
        self.state.projector_matrix()
    }
}

/// Labelled complete set of rank-1 projectors on one subsystem.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementBasis {
    labels: Vec<String>,
    projectors: Vec<Projector>,
}

impl MeasurementBasis {
    pub fn new(elements: Vec<(String, Projector)>) -> Result<Self> {
        let dim = elements
            .first()
            .map(|(_, p)| p.dim())
            .ok_or(Error::IncompleteBasis { deviation: 1.0 })?;
        let mut sum = ComplexMatrix::zeros(dim, dim)?;
        for (_, p) in &elements {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: p.dim(),
                });
            }
            sum = sum.add(&p.matrix())?;
        }
        let deviation = sum.max_abs_diff(&ComplexMatrix::identity(dim)?);
        if deviation > STATE_TOL {
            return Err(Error::IncompleteBasis { deviation });
        }
        let (labels, projectors) = elements.into_iter().unzip();
        Ok(Self { labels, projectors })
    }

    /// Basis from labelled orthonormal kets.
    pub fn from_kets(kets: &[(&str, PureState)]) -> Result<Self> {
        Self::new(
            kets.iter()
                .map(|(l, k)| (l.to_string(), Projector::onto(k.clone())))
                .collect(),
        )
    }

    pub fn computational() -> Self {
        Self::from_kets(&[("0", ket0()), ("1", ket1())]).expect("complete")
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn projectors(&self) -> &[Projector] {
        &self.projectors
    }

    pub fn dim(&self) -> usize {
        self.projectors[0].dim()
    }

    pub fn len(&self) -> usize {
        self.projectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.projectors.is_empty()
    }
}

/// Outcome probabilities on A and the conditional states they leave on B.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringEnsemble {
    basis: MeasurementBasis,
    probabilities: Vec<f64>,
    conditionals: Vec<Option<DensityMatrix>>,
}

impl SteeringEnsemble {
    pub fn labels(&self) -> &[String] {
        self.basis.labels()
    }

    pub fn projectors(&self) -> &[Projector] {
        self.basis.projectors()
    }

    pub fn basis(&self) -> &MeasurementBasis {
        &self.basis
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn probability(&self, i: usize) -> f64 {
        self.probabilities[i]
    }

    /// Conditional state of branch `i`; an error for zero-probability branches.
    pub fn conditional(&self, i: usize) -> Result<&DensityMatrix> {
        self.conditionals[i]
            .as_ref()
            .ok_or_else(|| Error::UndefinedConditional {
                label: self.basis.labels[i].clone(),
                probability: self.probabilities[i],
            })
    }

    pub fn is_defined(&self, i: usize) -> bool {
        self.conditionals[i].is_some()
    }

    /// `Σ p_i ρ_i`, which must equal the unconditioned reduced state of B.
    pub fn average_state(&self) -> Result<ComplexMatrix> {
        let d = self
            .conditionals
            .iter()
            .flatten()
            .next()
            .map(|r| r.dim())
            .ok_or(Error::DimensionMismatch { expected: 1, actual: 0 })?;
        let mut acc = ComplexMatrix::zeros(d, d)?;
        for (p, r) in self.probabilities.iter().zip(&self.conditionals) {
            if let Some(r) = r {
                acc = acc.add(&r.matrix().scale(c(*p, 0.0)))?;
            }
        }
        Ok(acc)
    }
}

/// Steers B by measuring A on `rho_ab`, using the full density matrix.
pub fn steer(rho_ab: &DensityMatrix, basis: &MeasurementBasis) -> Result<SteeringEnsemble> {
    let da = basis.dim();
    let n = rho_ab.dim();
    if !n.is_multiple_of(da) {
        return Err(Error::DimensionMismatch {
            expected: da,
            actual: n,
        });
    }
    let db = n / da;
    let id_b = ComplexMatrix::identity(db)?;
    let mut probabilities = Vec::with_capacity(basis.len());
    let mut conditionals = Vec::with_capacity(basis.len());
    for proj in basis.projectors() {
        let lift = proj.matrix().kron(&id_b)?;
        let sandwiched = lift.matmul(rho_ab.matrix())?.matmul(&lift)?;
        let unnormalized = sandwiched.partial_trace((da, db), Subsystem::B)?;
        let p = unnormalized.trace().re;
        if p <= ZERO_BRANCH_DENSE {
            probabilities.push(p.max(0.0));
            conditionals.push(None);
        } else {
            probabilities.push(p);
            conditionals.push(Some(DensityMatrix::new(unnormalized.scale(c(1.0 / p, 0.0)))?));
        }
    }
    Ok(SteeringEnsemble {
        basis: basis.clone(),
        probabilities,
        conditionals,
    })
}

/// Steers a mixture of pure bipartite states component by component.
///
/// Each outcome's conditional is built from the contracted vectors
/// `(⟨b_i| ⊗ I)|ψ_j⟩`, so heralding probabilities far below machine epsilon
/// keep full relative precision.
pub fn steer_mixture(components: &[(f64, PureState)], basis: &MeasurementBasis) -> Result<SteeringEnsemble> {
    let total: f64 = components.iter().map(|(w, _)| w).sum();
    if (total - 1.0).abs() > STATE_TOL {
        return Err(Error::BadTrace { trace: total });
    }
    let mut probabilities = Vec::with_capacity(basis.len());
    let mut conditionals = Vec::with_capacity(basis.len());
    for proj in basis.projectors() {
        let mut contracted = Vec::with_capacity(components.len());
        let mut p = 0.0;
        for (w, psi) in components {
            let u = proj.state().contract_first(psi.vector())?;
            p += w * u.norm_sqr();
            contracted.push((*w, u));
        }
        if p <= 0.0 {
            probabilities.push(0.0);
            conditionals.push(None);
            continue;
        }
        let db = contracted[0].1.dim();
        let mut acc = ComplexMatrix::zeros(db, db)?;
        for (w, u) in &contracted {
            if *w > 0.0 {
                acc = acc.add(&outer(u, u).scale(c(w / p, 0.0)))?;
            }
        }
        probabilities.push(p);
        conditionals.push(Some(DensityMatrix::new(acc)?));
    }
    Ok(SteeringEnsemble {
        basis: basis.clone(),
        probabilities,
        conditionals,
    })
}

/// `Tr(Π ρ)`.
pub fn visibility(rho: &DensityMatrix, projector: &Projector) -> Result<f64> {
    rho.expectation(projector.state())
}

/// Which model produced a set of visibilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Quantum,
    Classical,
    Noisy { q: f64 },
}

/// `V_{Π₀..Π₃}` for one model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VisibilityReport {
    pub model: ModelKind,
    pub values: [f64; 4],
}

impl VisibilityReport {
    /// Componentwise `self − other`.
    pub fn gap(&self, other: &VisibilityReport) -> [f64; 4] {
        std::array::from_fn(|i| self.values[i] - other.values[i])
    }

    /// Largest `|1 − V_i|`.
    pub fn max_deviation_from_one(&self) -> f64 {
        self.values.iter().map(|v| (1.0 - v).abs()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DepolarizingNoise {
    q: f64,
}

impl DepolarizingNoise {
    pub fn new(q: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&q) {
            return Err(invalid("q", q, "decoherence degree must lie in [0, 1]"));
        }
        Ok(Self { q })
    }

    pub fn q(&self) -> f64 {
        self.q
    }
}

/// `(1−q)ρ + q·I/d`.
pub fn depolarize(rho: &DensityMatrix, noise: DepolarizingNoise) -> Result<DensityMatrix> {
    let d = rho.dim();
    let q = noise.q();
    let mixed = ComplexMatrix::identity(d)?.scale(c(q / d as f64, 0.0));
    DensityMatrix::new(rho.matrix().scale(c(1.0 - q, 0.0)).add(&mixed)?)
}

fn require_two_qubit(dim: usize) -> Result<()> {
    if dim != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            actual: dim,
        });
    }
    Ok(())
}

/// Two-qubit pure-state concurrence `2|ad − bc|`.
pub fn concurrence(psi: &PureState) -> Result<f64> {
    require_two_qubit(psi.dim())?;
    let a = psi.amplitudes();
    Ok((2.0 * (a[0] * a[3] - a[1] * a[2]).norm()).min(1.0))
}

/// Smallest eigenvalue of the partial transpose on B.
pub fn ppt_min_eigenvalue(rho_ab: &DensityMatrix) -> Result<f64> {
    require_two_qubit(rho_ab.dim())?;
    let pt = rho_ab.matrix().partial_transpose((2, 2), Subsystem::B)?;
    Ok(pt.hermitian_eigenvalues()?[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::I;
    use proptest::prelude::*;

    fn bell_like(theta: f64) -> PureState {
        let pp = ket_plus().kron(&ket_plus()).unwrap();
        let mm = ket_minus().kron(&ket_minus()).unwrap();
        let v = pp
            .vector()
            .scale(c(theta.cos(), 0.0))
            .add(&mm.vector().scale(c(0.0, theta.sin())))
            .unwrap();
        PureState::new(v).unwrap()
    }

    fn spin_flip_concurrence(psi: &PureState) -> f64 {
        // |⟨ψ|σy⊗σy|ψ*⟩| with σy⊗σy = antidiag(-1, 1, 1, -1)
        let a = psi.amplitudes();
        let flipped = [-a[3].conj(), a[2].conj(), a[1].conj(), -a[0].conj()];
        a.iter().zip(flipped).map(|(x, y)| x.conj() * y).sum::<C64>().norm()
    }

    #[test]
    fn product_state_steering() {
        let pp = ket_plus().kron(&ket_plus()).unwrap();
        let rho = DensityMatrix::from_pure(&pp);
        let ens = steer(&rho, &MeasurementBasis::computational()).unwrap();
        let target = ket_plus().projector_matrix();
        for i in 0..2 {
            assert!((ens.probability(i) - 0.5).abs() < 1e-12);
            assert!(ens.conditional(i).unwrap().matrix().max_abs_diff(&target) < 1e-12);
        }
    }

    #[test]
    fn maximal_coupling_steers_to_phi_states() {
        let psi = bell_like(std::f64::consts::FRAC_PI_4);
        let ens = steer(&DensityMatrix::from_pure(&psi), &MeasurementBasis::computational()).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for (i, sign) in [(0, 1.0), (1, -1.0)] {
            let phi = PureState::new(
                ket_plus()
                    .vector()
                    .scale(c(h, 0.0))
                    .add(&ket_minus().vector().scale(I * sign * h))
                    .unwrap(),
            )
            .unwrap();
            let rho = ens.conditional(i).unwrap();
            assert!(rho.matrix().max_abs_diff(&phi.projector_matrix()) < 1e-12);
        }
    }

    #[test]
    fn dense_and_vector_routes_agree() {
        let psi = bell_like(0.3);
        let e = 0.8f64;
        let ke = PureState::from_amplitudes(vec![c(e, 0.0), c(-(1.0 - e * e).sqrt(), 0.0)]).unwrap();
        let kp = PureState::from_amplitudes(vec![c((1.0 - e * e).sqrt(), 0.0), c(e, 0.0)]).unwrap();
        let basis = MeasurementBasis::from_kets(&[("e", ke), ("ep", kp)]).unwrap();
        let dense = steer(&DensityMatrix::from_pure(&psi), &basis).unwrap();
        let vect = steer_mixture(&[(1.0, psi)], &basis).unwrap();
        for i in 0..2 {
            assert!((dense.probability(i) - vect.probability(i)).abs() < 1e-14);
            let diff = dense
                .conditional(i)
                .unwrap()
                .matrix()
                .max_abs_diff(vect.conditional(i).unwrap().matrix());
            assert!(diff < 1e-13);
        }
    }

    #[test]
    fn zero_branch_is_undefined() {
        let pp = ket_plus().kron(&ket_plus()).unwrap();
        let basis = MeasurementBasis::from_kets(&[("+", ket_plus()), ("-", ket_minus())]).unwrap();
        for ens in [
            steer(&DensityMatrix::from_pure(&pp), &basis).unwrap(),
            steer_mixture(&[(1.0, pp.clone())], &basis).unwrap(),
        ] {
            assert!(ens.is_defined(0));
            assert!(matches!(ens.conditional(1), Err(Error::UndefinedConditional { .. })));
        }
    }

    #[test]
    fn incomplete_basis_rejected() {
        let r = MeasurementBasis::from_kets(&[("0", ket0()), ("+", ket_plus())]);
        assert!(matches!(r, Err(Error::IncompleteBasis { .. })));
    }

    #[test]
    fn visibility_examples() {
        let plus = ket_plus();
        let rho = DensityMatrix::from_pure(&plus);
        assert!((visibility(&rho, &Projector::onto(plus.clone())).unwrap() - 1.0).abs() < 1e-15);
        let mixed = DensityMatrix::maximally_mixed(2).unwrap();
        assert!((visibility(&mixed, &Projector::onto(ket0())).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn projector_validation() {
        let twice = ket0().projector_matrix().scale(c(2.0, 0.0));
        assert_eq!(Projector::from_matrix(&twice), Err(Error::NotRankOneProjector));
        let id = ComplexMatrix::identity(2).unwrap();
        assert_eq!(Projector::from_matrix(&id), Err(Error::NotRankOneProjector));
        let p = Projector::from_matrix(&ket_minus().projector_matrix()).unwrap();
        assert!(p.matrix().max_abs_diff(&ket_minus().projector_matrix()) < 1e-15);
    }

    #[test]
    fn depolarize_examples() {
        let rho = DensityMatrix::from_pure(&ket0());
        let same = depolarize(&rho, DepolarizingNoise::new(0.0).unwrap()).unwrap();
        assert_eq!(same.matrix(), rho.matrix());
        let full = depolarize(&rho, DepolarizingNoise::new(1.0).unwrap()).unwrap();
        assert!(
            full.matrix()
                .max_abs_diff(DensityMatrix::maximally_mixed(2).unwrap().matrix())
                < 1e-15
        );
        let half = depolarize(&rho, DepolarizingNoise::new(0.5).unwrap()).unwrap();
        assert!((half.matrix().get(0, 0).re - 0.75).abs() < 1e-15);
        assert!((half.matrix().get(1, 1).re - 0.25).abs() < 1e-15);
        assert!(DepolarizingNoise::new(1.5).is_err());
    }

    #[test]
    fn density_validation() {
        let bad = ComplexMatrix::diagonal(&[c(1.5, 0.0), c(-0.5, 0.0)]).unwrap();
        assert!(matches!(DensityMatrix::new(bad), Err(Error::NotPositive { .. })));
        let tr = ComplexMatrix::identity(2).unwrap();
        assert!(matches!(DensityMatrix::new(tr), Err(Error::BadTrace { .. })));
        let nh = ComplexMatrix::new(2, 2, vec![c(0.5, 0.0), ONE, ZERO, c(0.5, 0.0)]).unwrap();
        assert!(matches!(DensityMatrix::new(nh), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn concurrence_matches_schmidt_and_spin_flip() {
        for theta in [0.0, 0.01, 0.1, std::f64::consts::FRAC_PI_8, std::f64::consts::FRAC_PI_4] {
            let psi = bell_like(theta);
            let cc = concurrence(&psi).unwrap();
            assert!((cc - (2.0 * theta).sin().abs()).abs() < 1e-10);
            assert!((cc - spin_flip_concurrence(&psi)).abs() < 1e-12);
        }
        let pp = ket_plus().kron(&ket_plus()).unwrap();
        assert!(concurrence(&pp).unwrap() < 1e-15);
        assert!(concurrence(&ket0()).is_err());
    }

    #[test]
    fn ppt_examples() {
        let psi = bell_like(std::f64::consts::FRAC_PI_4);
        let v = ppt_min_eigenvalue(&DensityMatrix::from_pure(&psi)).unwrap();
        assert!((v + 0.5).abs() < 1e-12);
        let pp = ket_plus().kron(&ket0()).unwrap();
        assert!(ppt_min_eigenvalue(&DensityMatrix::from_pure(&pp)).unwrap() >= -1e-12);
    }

    fn arb_qubit() -> impl Strategy<Value = PureState> {
        (0.0..std::f64::consts::PI, 0.0..std::f64::consts::TAU).prop_map(|(t, p)| {
            PureState::from_amplitudes(vec![c((t / 2.0).cos(), 0.0), C64::from_polar((t / 2.0).sin(), p)]).unwrap()
        })
    }

    fn arb_two_qubit() -> impl Strategy<Value = PureState> {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 4)
            .prop_filter("nonzero", |v| v.iter().map(|(a, b)| a * a + b * b).sum::<f64>() > 1e-3)
            .prop_map(|v| {
                PureState::normalize(StateVector::new(v.into_iter().map(|(a, b)| c(a, b)).collect()).unwrap()).unwrap()
            })
    }

    proptest! {
        #[test]
        fn no_signalling(psi in arb_two_qubit(), basis_state in arb_qubit()) {
            let ortho = PureState::from_amplitudes(vec![
                -basis_state.amplitudes()[1].conj(),
                basis_state.amplitudes()[0].conj(),
            ]).unwrap();
            let basis = MeasurementBasis::from_kets(&[("x", basis_state), ("y", ortho)]).unwrap();
            let rho = DensityMatrix::from_pure(&psi);
            let ens = steer(&rho, &basis).unwrap();
            prop_assert!((ens.probabilities().iter().sum::<f64>() - 1.0).abs() < 1e-10);
            let rb = rho.matrix().partial_trace((2, 2), Subsystem::B).unwrap();
            if ens.is_defined(0) && ens.is_defined(1) {
                prop_assert!(ens.average_state().unwrap().max_abs_diff(&rb) < 1e-10);
            }
        }

        #[test]
        fn visibility_is_affine_under_depolarizing(
            psi in arb_qubit(), pi in arb_qubit(), q in 0.0f64..=1.0,
        ) {
            let rho = DensityMatrix::from_pure(&psi);
            let proj = Projector::onto(pi);
            let noisy = depolarize(&rho, DepolarizingNoise::new(q).unwrap()).unwrap();
            let lhs = visibility(&noisy, &proj).unwrap();
            let rhs = (1.0 - q) * visibility(&rho, &proj).unwrap() + q / 2.0;
            prop_assert!((lhs - rhs).abs() < 1e-12);
        }

        #[test]
        fn mixtures_of_products_are_ppt(
            parts in prop::collection::vec((0.01f64..1.0, arb_qubit(), arb_qubit()), 1..6),
        ) {
            let total: f64 = parts.iter().map(|p| p.0).sum();
            let comps: Vec<(f64, PureState)> = parts
                .iter()
                .map(|(w, a, b)| (w / total, a.kron(b).unwrap()))
                .collect();
            let rho = DensityMatrix::from_mixture(&comps).unwrap();
            prop_assert!(ppt_min_eigenvalue(&rho).unwrap() >= -1e-10);
        }
    }
}
