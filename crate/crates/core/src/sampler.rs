//! Finite-shot simulation of the two-setting protocol.
//!
//! Each shot picks a setting for A, draws A's outcome from the model's exact
//! marginal, lets the detector misassign it with probability `γ`, and records
//! whether B's click lands in the reference projector matching the reported
//! outcome. Shots are generated in fixed blocks, each with its own ChaCha
//! stream, so results do not depend on the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bmv::{quantum_predictions, reference_projectors, BmvParams, Predictions};
use crate::classical::{build_separable, marginal_simulator, model_predictions};
use crate::criterion::{noisy_predictions, DeviceModel};
use crate::error::{invalid, Result};
use crate::quantum::{visibility, DepolarizingNoise};

pub const BLOCK_SIZE: u64 = 65_536;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SamplerModel {
    Quantum,
    /// A's exact reduced state paired with an uncorrelated B.
    Classical,
    /// The separable mixture assembled from the steered states.
    Mixture,
    Noisy {
        q: f64,
    },
}

impl SamplerModel {
    fn tag(&self) -> [u64; 2] {
        match self {
            SamplerModel::Quantum => [1, 0],
            SamplerModel::Classical => [2, 0],
            SamplerModel::Mixture => [3, 0],
            SamplerModel::Noisy { q } => [4, q.to_bits()],
        }
    }

    fn predictions(&self, params: &BmvParams) -> Result<Predictions> {
        match self {
            SamplerModel::Quantum => quantum_predictions(params),
            SamplerModel::Classical => model_predictions(&marginal_simulator(params), params),
            SamplerModel::Mixture => model_predictions(&build_separable(params)?, params),
            SamplerModel::Noisy { q } => noisy_predictions(params, DepolarizingNoise::new(*q)?),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Setting {
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ShotRecord {
    pub run_index: u64,
    pub basis: Setting,
    /// Reported outcome index within the setting: `0/1` for A, `ε/ε⊥` for B.
    pub outcome_a: u8,
    /// B clicked inside the reference projector paired with the reported outcome.
    pub hit: bool,
}

impl ShotRecord {
    /// Position in the four-cell layout `[0, 1, ε, ε⊥]`.
    pub fn cell(&self) -> usize {
        match self.basis {
            Setting::A => self.outcome_a as usize,
            Setting::B => 2 + self.outcome_a as usize,
        }
    }
}

/// Exact per-shot probabilities for one model, including cross-talk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShotTable {
    basis_b_prob: f64,
    /// `P(true outcome | setting)` in the four-cell layout.
    outcome: [f64; 4],
    /// `hit[true][reported]` within a setting, flattened per setting.
    hit: [[f64; 2]; 4],
    gamma: f64,
}

impl ShotTable {
    pub fn new(model: SamplerModel, params: &BmvParams, device: &DeviceModel) -> Result<Self> {
        let pred = model.predictions(params)?;
        let proj = reference_projectors(params);
        let ens = [&pred.basis_a, &pred.basis_b];
        let mut hit = [[0.0; 2]; 4];
        for (cell, row) in hit.iter_mut().enumerate() {
            let (e, i) = (ens[cell / 2], cell % 2);
            if !e.is_defined(i) {
                continue;
            }
            let rho = e.conditional(i)?;
            for (j, h) in row.iter_mut().enumerate() {
                *h = visibility(rho, &proj[2 * (cell / 2) + j])?.clamp(0.0, 1.0);
            }
        }
        Ok(Self {
            basis_b_prob: device.basis_choice_prob,
            outcome: pred.probabilities().map(|p| p.clamp(0.0, 1.0)),
            hit,
            gamma: device.gamma,
        })
    }

    /// `P(reported j | setting)` in the four-cell layout.
    pub fn reported_probabilities(&self) -> [f64; 4] {
        let g = self.gamma;
        let mut out = [0.0; 4];
        for s in 0..2 {
            let (p0, p1) = (self.outcome[2 * s], self.outcome[2 * s + 1]);
            out[2 * s] = (1.0 - g) * p0 + g * p1;
            out[2 * s + 1] = (1.0 - g) * p1 + g * p0;
        }
        out
    }

    /// `P(hit | reported j)` in the four-cell layout.
    pub fn reported_visibilities(&self) -> [f64; 4] {
        let g = self.gamma;
        let rep = self.reported_probabilities();
        let mut out = [0.0; 4];
        for (cell, v) in out.iter_mut().enumerate() {
            let (s, j) = (cell / 2, cell % 2);
            let same = 2 * s + j;
            let other = 2 * s + (1 - j);
            let joint =
                (1.0 - g) * self.outcome[same] * self.hit[same][j] + g * self.outcome[other] * self.hit[other][j];
            *v = if rep[cell] > 0.0 { joint / rep[cell] } else { f64::NAN };
        }
        out
    }

    fn draw(&self, rng: &mut ChaCha8Rng, run_index: u64) -> ShotRecord {
        let s = usize::from(rng.random::<f64>() < self.basis_b_prob);
        let truth = usize::from(rng.random::<f64>() >= self.outcome[2 * s]);
        let reported = if rng.random::<f64>() < self.gamma {
            1 - truth
        } else {
            truth
        };
        let hit = rng.random::<f64>() < self.hit[2 * s + truth][reported];
        ShotRecord {
            run_index,
            basis: if s == 0 { Setting::A } else { Setting::B },
            outcome_a: reported as u8,
            hit,
        }
    }
}

fn block_rng(seed: u64, model: SamplerModel, block: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    let [tag, extra] = model.tag();
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&tag.to_le_bytes());
    key[16..24].copy_from_slice(&extra.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(block);
    rng
}

fn blocks(n_shots: u64) -> impl IndexedParallelIterator<Item = (u64, u64)> {
    let n_blocks = n_shots.div_ceil(BLOCK_SIZE) as usize;
    (0..n_blocks).into_par_iter().map(move |b| {
        let b = b as u64;
        let start = b * BLOCK_SIZE;
        (b, (start + BLOCK_SIZE).min(n_shots) - start)
    })
}

/// Recorded shots together with the seed that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct ShotStream {
    pub seed: u64,
    pub records: Vec<ShotRecord>,
}

fn check_shots(n_shots: u64) -> Result<()> {
    if n_shots == 0 {
        return Err(invalid("n_shots", 0.0, "must be positive"));
    }
    Ok(())
}

pub fn sample_shots(
    model: SamplerModel,
    params: &BmvParams,
    device: &DeviceModel,
    n_shots: u64,
    seed: u64,
) -> Result<ShotStream> {
    check_shots(n_shots)?;
    let table = ShotTable::new(model, params, device)?;
    let per_block: Vec<Vec<ShotRecord>> = blocks(n_shots)
        .map(|(b, len)| {
            let mut rng = block_rng(seed, model, b);
            (0..len).map(|i| table.draw(&mut rng, b * BLOCK_SIZE + i)).collect()
        })
        .collect();
    Ok(ShotStream {
        seed,
        records: per_block.into_iter().flatten().collect(),
    })
}

/// Integer tallies per cell in the `[0, 1, ε, ε⊥]` layout.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Counts {
    pub settings: [u64; 2],
    pub outcomes: [u64; 4],
    pub hits: [u64; 4],
}

impl Counts {
    pub fn record(&mut self, shot: &ShotRecord) {
        let cell = shot.cell();
        self.settings[cell / 2] += 1;
        self.outcomes[cell] += 1;
        self.hits[cell] += u64::from(shot.hit);
    }

    pub fn merge(mut self, other: Counts) -> Counts {
        for i in 0..2 {
            self.settings[i] += other.settings[i];
        }
        for i in 0..4 {
            self.outcomes[i] += other.outcomes[i];
            self.hits[i] += other.hits[i];
        }
        self
    }

    pub fn total(&self) -> u64 {
        self.settings[0] + self.settings[1]
    }
}

/// Tallies without materializing the shot records; identical to tallying
/// [`sample_shots`] with the same arguments.
pub fn sample_counts(
    model: SamplerModel,
    params: &BmvParams,
    device: &DeviceModel,
    n_shots: u64,
    seed: u64,
) -> Result<Counts> {
    check_shots(n_shots)?;
    let table = ShotTable::new(model, params, device)?;
    Ok(blocks(n_shots)
        .map(|(b, len)| {
            let mut rng = block_rng(seed, model, b);
            let mut c = Counts::default();
            for i in 0..len {
                c.record(&table.draw(&mut rng, b * BLOCK_SIZE + i));
            }
            c
        })
        .reduce(Counts::default, Counts::merge))
}

/// Binomial proportion with its Wald standard error and a one-sigma Wilson interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CellEstimate {
    pub value: f64,
    pub standard_error: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
    pub successes: u64,
    pub trials: u64,
}

impl CellEstimate {
    /// `None` when there are no trials.
    pub fn from_counts(successes: u64, trials: u64) -> Option<Self> {
        if trials == 0 {
            return None;
        }
        let n = trials as f64;
        let p = successes as f64 / n;
        let z2 = 1.0;
        let denom = 1.0 + z2 / n;
        let centre = (p + z2 / (2.0 * n)) / denom;
        let half = (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
        Some(Self {
            value: p,
            standard_error: (p * (1.0 - p) / n).sqrt(),
            wilson_low: (centre - half).max(0.0),
            wilson_high: (centre + half).min(1.0),
            successes,
            trials,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimateReport {
    /// `P(hit | reported outcome)`; `None` marks a cell with no data.
    pub visibilities: [Option<CellEstimate>; 4],
    /// `P(reported outcome | setting)`.
    pub probabilities: [Option<CellEstimate>; 4],
    pub shots_used: u64,
    pub seed: u64,
}

pub fn estimate_counts(counts: &Counts, seed: u64) -> EstimateReport {
    EstimateReport {
        visibilities: std::array::from_fn(|i| CellEstimate::from_counts(counts.hits[i], counts.outcomes[i])),
        probabilities: std::array::from_fn(|i| CellEstimate::from_counts(counts.outcomes[i], counts.settings[i / 2])),
        shots_used: counts.total(),
        seed,
    }
}

pub fn estimate(shots: &ShotStream) -> Result<EstimateReport> {
    if shots.records.is_empty() {
        return Err(invalid("shots", 0.0, "empty shot stream"));
    }
    let mut counts = Counts::default();
    for s in &shots.records {
        counts.record(s);
    }
    Ok(estimate_counts(&counts, shots.seed))
}

/// Difference in units of the combined standard error; `None` when either
/// cell is empty or both errors vanish.
pub fn separation(a: &Option<CellEstimate>, b: &Option<CellEstimate>) -> Option<f64> {
    let (a, b) = (a.as_ref()?, b.as_ref()?);
    let se = a.standard_error.hypot(b.standard_error);
    (se > 0.0).then(|| (a.value - b.value).abs() / se)
}

/// Largest per-setting total-variation distance between estimated and exact
/// reported-outcome distributions.
pub fn empirical_tv(report: &EstimateReport, exact: &[f64; 4]) -> f64 {
    let est = report.probabilities.map(|c| c.map_or(0.0, |c| c.value));
    crate::classical::tv_distance(&est, exact)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn device(gamma: f64) -> DeviceModel {
        DeviceModel::with_gamma(gamma).unwrap()
    }

    #[test]
    fn unbiased_coin_at_zero_coupling() {
        let p = BmvParams::new(0.0, 0.8).unwrap();
        let d = DeviceModel::new(1e-12, 1e6, 1.0, 1e-9).unwrap();
        let r = estimate_counts(&sample_counts(SamplerModel::Quantum, &p, &d, 100_000, 3).unwrap(), 3);
        let zero = r.probabilities[0].unwrap();
        assert!((zero.value - 0.5).abs() < 5.0 * (0.25 / zero.trials as f64).sqrt());
    }

    #[test]
    fn records_and_counts_agree_and_are_deterministic() {
        let p = BmvParams::with_amplification(1e-2, 1.0).unwrap();
        let d = device(1e-4);
        let shots = sample_shots(SamplerModel::Quantum, &p, &d, 200_000, 9).unwrap();
        let counts = sample_counts(SamplerModel::Quantum, &p, &d, 200_000, 9).unwrap();
        assert_eq!(estimate(&shots).unwrap(), estimate_counts(&counts, 9));
        assert_eq!(shots, sample_shots(SamplerModel::Quantum, &p, &d, 200_000, 9).unwrap());
        assert!(shots.records.iter().enumerate().all(|(i, s)| s.run_index == i as u64));
        let other = sample_counts(SamplerModel::Quantum, &p, &d, 200_000, 10).unwrap();
        assert_ne!(counts, other);
    }

    #[test]
    fn quantum_visibility_matches_exact() {
        let p = BmvParams::with_amplification(1e-2, 1.0).unwrap();
        let d = device(1e-12);
        let r = estimate_counts(&sample_counts(SamplerModel::Quantum, &p, &d, 10_000_000, 1).unwrap(), 1);
        let v = r.visibilities[2].unwrap();
        assert!((v.value - 1.0).abs() <= 3.0 * v.standard_error.max(1.0 / v.trials as f64));
    }

    #[test]
    fn classical_visibility_matches_exact() {
        let p = BmvParams::with_amplification(1e-2, 1.0).unwrap();
        let d = device(1e-12);
        let table = ShotTable::new(SamplerModel::Classical, &p, &d).unwrap();
        let exact = table.reported_visibilities()[2];
        assert!((exact - 0.5).abs() < 1e-3);
        let r = estimate_counts(
            &sample_counts(SamplerModel::Classical, &p, &d, 10_000_000, 1).unwrap(),
            1,
        );
        let v = r.visibilities[2].unwrap();
        assert!((v.value - exact).abs() <= 3.0 * v.standard_error);
    }

    #[test]
    fn cross_talk_mixes_reported_cells() {
        let p = BmvParams::with_amplification(1e-2, 1.0).unwrap();
        let clean = ShotTable::new(SamplerModel::Quantum, &p, &device(1e-12)).unwrap();
        let noisy = ShotTable::new(SamplerModel::Quantum, &p, &device(1e-4)).unwrap();
        let (a, b) = (clean.reported_probabilities(), noisy.reported_probabilities());
        assert!((a[2] + a[3] - 1.0).abs() < 1e-12 && (b[2] + b[3] - 1.0).abs() < 1e-12);
        assert!(b[2] > a[2]);
        assert!(noisy.reported_visibilities()[2] < clean.reported_visibilities()[2]);
    }

    #[test]
    fn empirical_distribution_converges() {
        let p = BmvParams::with_amplification(1e-2, 1.0).unwrap();
        let d = device(1e-4);
        let exact = ShotTable::new(SamplerModel::Quantum, &p, &d)
            .unwrap()
            .reported_probabilities();
        for n in [10_000u64, 100_000, 1_000_000] {
            let nf = n as f64;
            let ok = (0..3).any(|retry| {
                let r = estimate_counts(
                    &sample_counts(SamplerModel::Quantum, &p, &d, n, 100 + retry).unwrap(),
                    0,
                );
                empirical_tv(&r, &exact) <= 5.0 * (nf.ln() / nf).sqrt()
            });
            assert!(ok);
        }
    }

    #[test]
    fn estimates_handle_edge_cells() {
        let c = CellEstimate::from_counts(10, 10).unwrap();
        assert_eq!(c.standard_error, 0.0);
        assert!(c.wilson_low < 1.0 && c.wilson_high > 1.0 - 1e-12);
        assert!(CellEstimate::from_counts(0, 0).is_none());
        let half = CellEstimate::from_counts(432, 864).unwrap();
        assert!((half.standard_error - (0.25f64 / 864.0).sqrt()).abs() < 1e-15);
        assert!(half.standard_error < 0.0171);
        let report = estimate_counts(
            &Counts {
                settings: [5, 0],
                outcomes: [5, 0, 0, 0],
                hits: [5, 0, 0, 0],
            },
            0,
        );
        assert!(report.visibilities[2].is_none() && report.probabilities[3].is_none());
        assert_eq!(report.visibilities[0].unwrap().standard_error, 0.0);
        assert!(sample_counts(
            SamplerModel::Quantum,
            &BmvParams::new(0.1, 0.8).unwrap(),
            &device(0.1),
            0,
            0
        )
        .is_err());
    }
}
