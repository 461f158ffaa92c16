use wvsteer_core::bmv::{entangled_state, heralding_probability, quantum_predictions, BmvParams};
use wvsteer_core::classical::{
    build_separable, classical_visibility_limit, model_predictions, model_tv_distance, product_simulator,
};
use wvsteer_core::criterion::{evaluate_criterion, evaluate_criterion_with_noise, noisy_predictions, DeviceModel};
use wvsteer_core::oscillator::{balanced_theta_v, displaced_amplitude, oscillator_visibility, OscillatorParams};
use wvsteer_core::quantum::{concurrence, ppt_min_eigenvalue, DensityMatrix, DepolarizingNoise};
use wvsteer_core::sampler::{estimate, estimate_counts, sample_counts, sample_shots, SamplerModel, ShotTable};

const THETAS: [f64; 4] = [1e-4, 1e-3, 1e-2, 0.3];

#[test]
fn no_signalling_across_settings() {
    for &theta in &THETAS {
        let p = BmvParams::with_amplification(theta, 1.0).unwrap();
        let pred = quantum_predictions(&p).unwrap();
        let a = pred.basis_a.average_state().unwrap();
        let b = pred.basis_b.average_state().unwrap();
        assert!(a.max_abs_diff(&b) < 1e-14, "theta {theta}");
        let noisy = noisy_predictions(&p, DepolarizingNoise::new(0.3).unwrap()).unwrap();
        let a = noisy.basis_a.average_state().unwrap();
        let b = noisy.basis_b.average_state().unwrap();
        assert!(a.max_abs_diff(&b) < 1e-14);
    }
}

#[test]
fn mixture_is_separable_and_matches_probabilities() {
    for &theta in &THETAS {
        let p = BmvParams::with_amplification(theta, 2.0).unwrap();
        let mixture = build_separable(&p).unwrap();
        let rho = mixture.density_matrix().unwrap();
        assert!(ppt_min_eigenvalue(&rho).unwrap() > -1e-12);
        let q = quantum_predictions(&p).unwrap().probabilities();
        let m = model_predictions(&product_simulator(), &p).unwrap().probabilities();
        for i in 0..4 {
            assert!((q[i] - m[i]).abs() < 2.0 * theta * theta, "theta {theta} cell {i}");
        }
        let tv = model_tv_distance(&product_simulator(), &p).unwrap();
        if theta <= 1e-2 {
            assert!((tv / (theta * theta) - 1.0).abs() < 1e-3, "theta {theta} tv {tv}");
        }
        let psi = entangled_state(theta);
        assert!(concurrence(&psi).unwrap() > 0.0);
        assert!(ppt_min_eigenvalue(&DensityMatrix::from_pure(&psi)).unwrap() < 0.0);
    }
}

#[test]
fn criterion_gap_tracks_classical_limit() {
    let device = DeviceModel::with_gamma(1e-4).unwrap();
    for &k in &[0.5, 1.0, 2.0] {
        let p = BmvParams::with_amplification(1e-4, k).unwrap();
        let r = evaluate_criterion(&p, &device).unwrap();
        assert!((r.v_classical[2] - classical_visibility_limit(k)).abs() < 1e-6);
        assert!((r.heralding_probability - heralding_probability(&p)).abs() < 1e-18);
        assert!(r.distinguishable_by_visibility && !r.distinguishable_by_probability);
    }
    let p = BmvParams::with_amplification(1e-2, 1.0).unwrap();
    let clean = evaluate_criterion(&p, &device).unwrap();
    let noisy = evaluate_criterion_with_noise(&p, &device, DepolarizingNoise::new(0.2).unwrap()).unwrap();
    assert!(noisy.visibility_gap < clean.visibility_gap);
}

#[test]
fn sampler_counts_match_records_and_are_reproducible() {
    let p = BmvParams::with_amplification(0.05, 1.0).unwrap();
    let device = DeviceModel::with_gamma(1e-3).unwrap();
    for model in [
        SamplerModel::Quantum,
        SamplerModel::Mixture,
        SamplerModel::Noisy { q: 0.1 },
    ] {
        let n = 150_000;
        let stream = sample_shots(model, &p, &device, n, 9).unwrap();
        let counts = sample_counts(model, &p, &device, n, 9).unwrap();
        assert_eq!(estimate(&stream).unwrap(), estimate_counts(&counts, 9));
        assert_eq!(counts, sample_counts(model, &p, &device, n, 9).unwrap());
        assert_ne!(counts, sample_counts(model, &p, &device, n, 10).unwrap());
        assert_eq!(stream.records.last().unwrap().run_index, n - 1);
    }
}

#[test]
fn sampler_estimates_converge_to_exact_cells() {
    let p = BmvParams::with_amplification(0.2, 1.0).unwrap();
    let device = DeviceModel::with_gamma(1e-3).unwrap();
    for model in [SamplerModel::Quantum, SamplerModel::Classical] {
        let exact = ShotTable::new(model, &p, &device).unwrap();
        let est = estimate_counts(&sample_counts(model, &p, &device, 400_000, 3).unwrap(), 3);
        let vis = exact.reported_visibilities();
        let prob = exact.reported_probabilities();
        for i in 0..4 {
            let v = est.visibilities[i].unwrap();
            assert!(
                (v.value - vis[i]).abs() <= 5.0 * v.standard_error.max(1e-9),
                "{model:?} V{i}"
            );
            let q = est.probabilities[i].unwrap();
            assert!(
                (q.value - prob[i]).abs() <= 5.0 * q.standard_error.max(1e-9),
                "{model:?} p{i}"
            );
        }
    }
}

#[test]
fn oscillator_balanced_point_is_pure_steering() {
    for &(g, t) in &[(0.05, std::f64::consts::PI), (0.02, 1.0)] {
        let base = OscillatorParams::new(1.0, g, t, 0.1, 0.0, 1e-3).unwrap();
        let theta_v = balanced_theta_v(displaced_amplitude(&base)).unwrap();
        let params = OscillatorParams::new(1.0, g, t, theta_v, 0.0, 1e-3).unwrap();
        let r = oscillator_visibility(&params).unwrap();
        assert!((r.visibility - 1.0).abs() < 1e-10);
        assert!(r.classical_visibility < r.visibility);
        assert!(r.heralding_prob > 0.0 && r.heralding_prob < 1.0);
    }
}
