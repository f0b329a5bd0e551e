//! Structural invariants checked over randomized inputs.

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use qnetcert_core::bounds;
use qnetcert_core::certify::{
    certify_cqn_covariance_opts, certify_iqn_covariance_opts, SolveOpts,
};
use qnetcert_core::linalg::{c, ComplexMatrix};
use qnetcert_core::network::Network;
use qnetcert_core::states::sample::{sample_cqn_state, sample_iqn_state};
use qnetcert_core::states::{
    covariance, gamma_c, profile_for_decomposition, profile_for_state, rho_alpha,
    CovarianceMatrix, MeasurementCollection,
};

fn random_complex(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> ComplexMatrix {
    let rows: Vec<Vec<_>> = (0..rows)
        .map(|_| {
            (0..cols)
                .map(|_| c(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                .collect()
        })
        .collect();
    ComplexMatrix::from_rows(&rows).unwrap()
}

fn random_psd(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
    let a = random_complex(rng, n, n);
    &a * &a.adjoint()
}

proptest! {
    #[test]
    fn beta_and_epsilon_fall_with_purity(rank in 1usize..10, lo in 0.02f64..0.9, d in 0.01f64..0.1) {
        let hi = (lo + d).min(1.0);
        prop_assert!(bounds::beta(rank, hi).unwrap() <= bounds::beta(rank, lo).unwrap() + 1e-12);
        prop_assert!(bounds::epsilon(rank, hi).unwrap() <= bounds::epsilon(rank, lo).unwrap() + 1e-12);
    }

    #[test]
    fn refined_entry_bound_never_exceeds_beta(rank in 1usize..10, tau in 0.05f64..1.0, dt in 0.0f64..0.5, n0 in 1usize..10) {
        let tau0 = (tau + dt).min(1.0);
        let n0 = n0.min(rank);
        let p = bounds::PurityProfile::new(rank, tau).unwrap()
            .with_components(tau0, n0).unwrap();
        let refined = bounds::gamma_c_entry_bound(&p);
        prop_assert!(refined <= bounds::beta(rank, tau).unwrap() + 1e-12);
        prop_assert!(refined >= -1e-12);
    }

    #[test]
    fn trace_norm_subadditive_and_scale_covariant(seed in any::<u64>(), n in 1usize..6, s in 0.1f64..4.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_complex(&mut rng, n, n);
        let b = random_complex(&mut rng, n, n);
        let sum = ComplexMatrix(a.0.clone() + b.0.clone());
        let scale = n as f64 * 6.0;
        prop_assert!(sum.trace_norm() <= a.trace_norm() + b.trace_norm() + 1e-9 * scale);
        prop_assert!((a.scale(c(s, 0.0)).trace_norm() - s * a.trace_norm()).abs() <= 1e-9 * scale * s);
    }

    #[test]
    fn psd_block_norms_obey_cauchy_schwarz(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_psd(&mut rng, 4);
        let block = |i: usize, j: usize| {
            ComplexMatrix::from_fn(2, 2, |r, cc| a.get(2 * i + r, 2 * j + cc))
        };
        let off = block(0, 1).trace_norm();
        let d0 = block(0, 0).trace_norm();
        let d1 = block(1, 1).trace_norm();
        prop_assert!(off * off <= d0 * d1 + 1e-7 * (1.0 + d0 * d1));
    }

    #[test]
    fn sampled_states_are_proper(seed in any::<u64>()) {
        let s = sample_iqn_state(&Network::triangle(), true, seed).unwrap();
        let rho = &s.state;
        prop_assert!(rho.purity() <= 1.0 + 1e-9);
        prop_assert!(rho.purity() >= 1.0 / 8.0 - 1e-9);
        let reduced = rho.partial_trace(&[0]).unwrap();
        prop_assert!((reduced.matrix().trace().re - 1.0).abs() <= 1e-9);
        prop_assert!(reduced.eigenvalues().iter().all(|&l| l >= -1e-9));
    }

    #[test]
    fn fidelity_dominates_overlap(sa in any::<u64>(), sb in any::<u64>()) {
        let g = Network::triangle();
        let a = sample_iqn_state(&g, true, sa).unwrap().state;
        let b = sample_iqn_state(&g, true, sb).unwrap().state;
        let f = a.fidelity(&b).unwrap();
        let overlap = (a.matrix() * b.matrix()).trace().re;
        prop_assert!(f >= overlap - 1e-8);
        prop_assert!(f <= 1.0 + 1e-9);
        prop_assert!((a.fidelity(&a).unwrap() - 1.0).abs() <= 1e-8);
    }

    #[test]
    fn mixture_covariance_identity(seed in any::<u64>(), k in 2usize..5) {
        let g = Network::triangle();
        let m = MeasurementCollection::z_measurements(3);
        let s = sample_cqn_state(&g, k, seed).unwrap();
        let total = covariance(&s.state, &m).unwrap();
        let mut recomposed = gamma_c(&s.decomposition, &m).unwrap();
        for (w, comp) in s.decomposition.weights().iter().zip(s.decomposition.components()) {
            recomposed += covariance(comp, &m).unwrap().matrix() * *w;
        }
        let defect = (total.matrix() - &recomposed).abs().max();
        prop_assert!(defect <= 1e-8, "decomposition identity defect {defect}");
    }

    #[test]
    fn classical_term_is_psd(seed in any::<u64>(), k in 2usize..5) {
        let g = Network::triangle();
        let m = MeasurementCollection::z_measurements(3);
        let s = sample_cqn_state(&g, k, seed).unwrap();
        let gc = gamma_c(&s.decomposition, &m).unwrap();
        let min_eig = gc.symmetric_eigen().eigenvalues.min();
        prop_assert!(min_eig >= -1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn iqn_deviation_closed_form_on_scaled_all_ones(scale in 0.4f64..2.0) {
        // Scaled perfectly correlated covariance on the triangle: sources
        // cover each pair up to 1/2 once the unit diagonal cap binds, so
        // t*(s) = max(s/3, s - 1/2), with the kink at s = 3/4.
        let g = Network::triangle();
        let gamma = CovarianceMatrix::new(
            DMatrix::from_element(3, 3, scale),
            vec![1; 3],
        ).unwrap();
        let t = -certify_iqn_covariance_opts(&gamma, &g, &SolveOpts::default()).unwrap().margin;
        let expected = (scale / 3.0).max(scale - 0.5);
        prop_assert!((t - expected).abs() <= 2e-5 * (1.0 + expected),
            "t* {t} vs closed form {expected} at scale {scale}");
    }

    #[test]
    fn mixture_set_contains_source_set(seed in any::<u64>()) {
        let g = Network::triangle();
        let m = MeasurementCollection::z_measurements(3);
        let s = sample_iqn_state(&g, true, seed).unwrap();
        let gamma = covariance(&s.state, &m).unwrap();
        let p = profile_for_state(&s.state, &m, 1e-9).unwrap();
        let opts = SolveOpts::default();
        let iqn_t = -certify_iqn_covariance_opts(&gamma, &g, &opts).unwrap().margin;
        let cqn_t = -certify_cqn_covariance_opts(&gamma, &g, &p, &opts).unwrap().margin;
        prop_assert!(cqn_t <= iqn_t + 1e-6, "cqn deviation {cqn_t} above iqn {iqn_t}");
    }

    #[test]
    fn lower_purity_floor_relaxes_theorem1(alpha in 0.0f64..0.45) {
        let g = Network::triangle();
        let m = MeasurementCollection::z_measurements(3);
        let rho = rho_alpha(alpha).unwrap();
        let gamma = covariance(&rho, &m).unwrap();
        let p = profile_for_state(&rho, &m, 1e-9).unwrap();
        let opts = SolveOpts::default();
        let strict = -certify_cqn_covariance_opts(&gamma, &g, &p, &opts).unwrap().margin;
        let weaker_profile = bounds::PurityProfile::new(p.rank, (p.tau - 0.2).max(0.2)).unwrap()
            .with_l1(p.l1.unwrap()).unwrap();
        let relaxed = -certify_cqn_covariance_opts(&gamma, &g, &weaker_profile, &opts).unwrap().margin;
        prop_assert!(relaxed <= strict + 1e-6, "relaxed {relaxed} vs strict {strict}");
    }

    #[test]
    fn decomposition_profile_never_hurts_soundness(seed in any::<u64>()) {
        let g = Network::triangle();
        let m = MeasurementCollection::z_measurements(3);
        let s = sample_cqn_state(&g, 3, seed).unwrap();
        let gamma = covariance(&s.state, &m).unwrap();
        let p = profile_for_decomposition(&s.decomposition, &m, 1e-9).unwrap();
        let r = certify_cqn_covariance_opts(&gamma, &g, &p, &SolveOpts::default()).unwrap();
        prop_assert!(r.margin >= -1e-6, "sampled mixture rejected: {}", r.details);
    }
}

#[test]
fn sampler_is_deterministic() {
    let g = Network::triangle();
    for seed in [0u64, 42, u64::MAX] {
        let a = sample_iqn_state(&g, true, seed).unwrap();
        let b = sample_iqn_state(&g, true, seed).unwrap();
        assert_eq!(a.state.matrix().0, b.state.matrix().0);
        let a = sample_cqn_state(&g, 3, seed).unwrap();
        let b = sample_cqn_state(&g, 3, seed).unwrap();
        assert_eq!(a.decomposition.weights(), b.decomposition.weights());
        assert_eq!(a.state.matrix().0, b.state.matrix().0);
    }
}

#[test]
fn covariance_matrices_are_psd() {
    let m = MeasurementCollection::z_measurements(3);
    for seed in 0..20u64 {
        let s = sample_iqn_state(&Network::triangle(), true, seed).unwrap();
        let gamma = covariance(&s.state, &m).unwrap();
        let min_eig = gamma.matrix().clone().symmetric_eigen().eigenvalues.min();
        assert!(min_eig >= -1e-8, "seed {seed}: min eigenvalue {min_eig}");
    }
}

#[test]
fn operator_sum_constant_matches_z_count() {
    for n in 2..=4 {
        let m = MeasurementCollection::z_measurements(n);
        let l1 = m.operator_sum_constant().unwrap();
        assert!((l1 - n as f64).abs() <= 1e-9, "n={n}: l1={l1}");
    }
}
