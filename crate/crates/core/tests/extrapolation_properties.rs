use proptest::prelude::*;
use rand::Rng;

use rearrange::extrapolation::{
    check_downward_extrapolation, check_maximal_inequality, check_tau_monotone, p_shift_values, MonotoneOperator,
};
use rearrange::operators::CoefficientOperator;
use rearrange::optimize::SearchBudget;
use rearrange::rearrangement::{glued_blocks, parity_shift};
use rearrange::sampling::{random_adapted_sequence, random_expansion, random_measure_preserving, rng_for};
use rearrange::space::SpaceSpec;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn p_shift_preserves_integrals(seed in any::<u64>(), depth in 0u32..7, level_pick in any::<u32>()) {
        let mut rng = rng_for(seed, 0);
        let tau = random_measure_preserving(&mut rng, depth);
        let level = level_pick % (depth + 1);
        let values: Vec<f64> = (0..1usize << level).map(|_| rng.random_range(-4.0..4.0)).collect();
        let shifted = p_shift_values(&tau, level, &values).unwrap();
        let before: f64 = values.iter().sum::<f64>() / values.len() as f64;
        prop_assert!((shifted.mean()[0] - before).abs() <= 1e-12);
    }

    #[test]
    fn p_shift_commutes_with_powers(seed in any::<u64>(), depth in 0u32..7, level_pick in any::<u32>(), r in 1.0f64..4.0) {
        let mut rng = rng_for(seed, 0);
        let tau = random_measure_preserving(&mut rng, depth);
        let level = level_pick % (depth + 1);
        let values: Vec<f64> = (0..1usize << level).map(|_| rng.random_range(-4.0..4.0)).collect();
        let powered: Vec<f64> = values.iter().map(|v| v.abs().powf(r)).collect();
        let lhs: Vec<f64> = p_shift_values(&tau, level, &values).unwrap().values().iter().map(|v| v.abs().powf(r)).collect();
        let rhs = p_shift_values(&tau, level, &powered).unwrap();
        prop_assert_eq!(lhs.as_slice(), rhs.values());
    }

    #[test]
    fn dividing_by_shifted_weights(seed in any::<u64>(), depth in 1u32..7, level_pick in any::<u32>(), p in 1.2f64..4.0) {
        let mut rng = rng_for(seed, 0);
        let tau = random_measure_preserving(&mut rng, depth);
        let level = level_pick % depth;
        let gamma: Vec<f64> = (0..1usize << level).map(|_| rng.random_range(0.1..5.0)).collect();
        let d = random_expansion::<f64, _>(&mut rng, SpaceSpec::Scalar, depth, false).level_slice(level + 1).unwrap();
        let mut divided = d.clone();
        for (i, g) in gamma.iter().enumerate() {
            let pos = (1usize << level) - 1 + i;
            divided.coeffs_mut()[pos] /= *g;
        }
        let op = CoefficientOperator::<f64>::rearrangement(&tau, p, SpaceSpec::Scalar).unwrap();
        let lhs = op.apply(&d).unwrap().synthesize();
        let rhs = op.apply(&divided).unwrap().synthesize();
        let beta = p_shift_values(&tau, level, &gamma).unwrap().refine(lhs.resolution()).unwrap();
        for c in 0..lhs.cells() {
            let b = beta.values()[c];
            if b > 0.0 {
                let q = lhs.values()[c] / b;
                prop_assert!((q - rhs.values()[c]).abs() <= 1e-14 * q.abs().max(1.0));
            } else {
                prop_assert_eq!(lhs.values()[c], 0.0);
                prop_assert_eq!(rhs.values()[c], 0.0);
            }
        }
    }

    #[test]
    fn maximal_inequality_holds_for_certified_constants(seed in any::<u64>(), n in 0u32..8) {
        let mut rng = rng_for(seed, 0);
        let z = random_adapted_sequence::<f64, _>(&mut rng, n);
        for (tau, kappa) in [(parity_shift(n), 2.0), (glued_blocks(n), 3.0)] {
            prop_assert!(check_maximal_inequality(&tau, &z, kappa).unwrap().pass);
        }
    }
}

#[test]
fn reports_are_deterministic() {
    let tau = parity_shift(4);
    let run = || {
        let m = check_tau_monotone(MonotoneOperator::Square, &tau, SpaceSpec::Scalar, 4, 1.0, 50, 11).unwrap();
        let e = check_downward_extrapolation(
            MonotoneOperator::Square,
            &parity_shift(2),
            SpaceSpec::Scalar,
            2,
            2.0,
            1.0,
            2.0,
            1.5,
            &SearchBudget {
                restarts: 8,
                max_iters: 100,
                ..SearchBudget::with_seed(11)
            },
            0.05,
        )
        .unwrap();
        (serde_json::to_string(&m).unwrap(), serde_json::to_string(&e).unwrap())
    };
    assert_eq!(run(), run());
}
