use std::f64::consts::{FRAC_PI_2, TAU};

use num_complex::Complex64 as C64;
use proptest::prelude::*;
use rand::Rng;

use qfound::bell::{
    lhv_chsh, pair_probs, random_deterministic_model, random_settings, random_stochastic_model, stochastic_local_chsh,
};
use qfound::ghz::{transverse_correlation, AllOrNothingState};
use qfound::hardy::{hardy_prob, hardy_prob_from_state, hardy_state};
use qfound::histories::{family_probabilities, HistoryFamily, TimeGrid};
use qfound::linalg::{eig_hermitian, tensor, LinOp};
use qfound::rng::{random_density, random_hermitian, random_state, random_unitary, seeded};

fn basis_split<R: Rng>(dim: usize, rng: &mut R) -> Vec<LinOp> {
    let u = random_unitary(dim, rng);
    let cut = rng.random_range(1..=dim);
    let mut first = LinOp::zeros(dim);
    let mut second = LinOp::zeros(dim);
    for k in 0..dim {
        let p = LinOp::projector_onto(&u.column(k)).unwrap();
        if k < cut {
            first = &first + &p;
        } else {
            second = &second + &p;
        }
    }
    if cut == dim {
        vec![first]
    } else {
        vec![first, second]
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tensor_is_associative(seed in any::<u64>()) {
        let mut rng = seeded(seed, 0);
        let a = random_state(&[2], &mut rng);
        let b = random_state(&[3], &mut rng);
        let c = random_state(&[2], &mut rng);
        let left = tensor(&tensor(&a, &b).unwrap(), &c).unwrap();
        let right = tensor(&a, &tensor(&b, &c).unwrap()).unwrap();
        prop_assert_eq!(left.factor_dims(), right.factor_dims());
        for (x, y) in left.amps().iter().zip(right.amps()) {
            prop_assert!((x - y).norm() < 1e-14);
        }
    }

    #[test]
    fn partial_trace_is_a_density(seed in any::<u64>(), keep_first in any::<bool>()) {
        let mut rng = seeded(seed, 1);
        let rho = random_density(&[2, 3], &mut rng);
        let keep = if keep_first { 0 } else { 1 };
        let red = rho.partial_trace(&[keep]).unwrap();
        prop_assert!((red.op().trace() - C64::new(1.0, 0.0)).norm() < 1e-12);
        prop_assert!(red.op().hermitian_residual() < 1e-12);
        for v in eig_hermitian(red.op()).unwrap().values {
            prop_assert!(v > -1e-12);
        }
    }

    #[test]
    fn partial_trace_of_product(seed in any::<u64>()) {
        let mut rng = seeded(seed, 2);
        let a = random_density(&[2], &mut rng);
        let b = random_density(&[3], &mut rng);
        let ab = tensor(&a, &b).unwrap();
        prop_assert!(ab.partial_trace(&[0]).unwrap().op().max_abs_diff(a.op()) < 1e-12);
        prop_assert!(ab.partial_trace(&[1]).unwrap().op().max_abs_diff(b.op()) < 1e-12);
    }

    #[test]
    fn jacobi_reconstructs(seed in any::<u64>(), dim in 1usize..8) {
        let mut rng = seeded(seed, 3);
        let h = random_hermitian(dim, &mut rng);
        let e = eig_hermitian(&h).unwrap();
        prop_assert!(e.reconstruct().max_abs_diff(&h) < 1e-10);
        prop_assert!(e.vectors.unitary_residual() < 1e-10);
        prop_assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn pair_probabilities_sum_to_one(seed in any::<u64>(), a in 0.0..TAU, b in 0.0..TAU) {
        let mut rng = seeded(seed, 4);
        let rho = random_density(&[2, 2], &mut rng);
        let p = pair_probs(&rho, a.into(), b.into()).unwrap();
        prop_assert!((p.total() - 1.0).abs() < 1e-12);
        prop_assert!(p.as_array().iter().all(|&x| x > -1e-12));
    }

    #[test]
    fn local_models_respect_bound(seed in any::<u64>()) {
        let mut rng = seeded(seed, 5);
        prop_assert!(lhv_chsh(&random_deterministic_model(&mut rng)).abs() <= 2.0);
        let model = random_stochastic_model(&mut rng);
        let s = random_settings(&mut rng);
        prop_assert!(stochastic_local_chsh(&model, &s).abs() <= 2.0 + 1e-12);
    }

    #[test]
    fn transverse_correlation_is_cosine(
        n in 2usize..7,
        phi in 0.0..TAU,
        thetas in proptest::collection::vec(0.0..TAU, 6),
    ) {
        let psi = AllOrNothingState::with_phase(n, phi).unwrap().state();
        let t = &thetas[..n];
        let e = transverse_correlation(&psi, t).unwrap();
        prop_assert!((e - (t.iter().sum::<f64>() - phi).cos()).abs() < 1e-10);
    }

    #[test]
    fn hardy_probability_in_range(theta in 1e-6..FRAC_PI_2 - 1e-6) {
        let p_star = (5.0 * 5f64.sqrt() - 11.0) / 2.0;
        let p = hardy_prob(theta);
        prop_assert!(p >= 0.0 && p <= p_star + 1e-15);
        prop_assert!((hardy_prob_from_state(&hardy_state(theta).unwrap()) - p).abs() < 1e-12);
    }

    #[test]
    fn family_probabilities_sum_to_one(seed in any::<u64>(), dim in 2usize..5, steps in 1usize..4) {
        let mut rng = seeded(seed, 6);
        let times: Vec<f64> = (1..=steps).map(|k| k as f64 * 0.7).collect();
        let grid = TimeGrid::from_hamiltonian(&random_hermitian(dim, &mut rng), 0.0, times).unwrap();
        let sets = (0..steps).map(|_| basis_split(dim, &mut rng)).collect();
        let family = HistoryFamily::new(grid, sets, random_density(&[dim], &mut rng)).unwrap();
        let total: f64 = family_probabilities(&family).unwrap().iter().map(|h| h.1).sum();
        prop_assert!((total - 1.0).abs() < 1e-10);
    }
}
