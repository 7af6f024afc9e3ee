use proptest::prelude::*;

use rearrange::dyadic::count_up_to;
use rearrange::operators::{
    operator_norm_search, rayleigh_ratio, umd_constant, CoefficientOperator, EstimateKind, NormSearch, UmdMode,
};
use rearrange::optimize::{maximize, FiniteDifference, SearchBudget};
use rearrange::rearrangement::{glued_blocks, semenov_heuristic, HeuristicBudget};
use rearrange::sampling::{random_expansion, random_measure_preserving, rng_for};
use rearrange::space::{HaarExpansion, SpaceSpec};

/// `inf_c ‖g - c‖_q`, the norm of `g` in `L^q` modulo constants, by ternary search over `c`.
fn quotient_norm(values: &[f64], q: f64) -> f64 {
    let norm = |c: f64| (values.iter().map(|v| (v - c).abs().powf(q)).sum::<f64>() / values.len() as f64).powf(1.0 / q);
    let (mut lo, mut hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(*v), h.max(*v)));
    for _ in 0..200 {
        let (m1, m2) = (lo + (hi - lo) / 3.0, hi - (hi - lo) / 3.0);
        if norm(m1) < norm(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    norm(0.5 * (lo + hi))
}

/// Largest ratio of quotient norms `‖op g‖ / ‖g‖` in `L^q / constants` over zero-mean `g`.
fn quotient_norm_search(op: &CoefficientOperator<f64>, q: f64, budget: &SearchBudget) -> f64 {
    let depth = op.source_depth();
    let space = SpaceSpec::Scalar;
    let objective = FiniteDifference {
        dim: count_up_to(depth),
        step: 1e-7,
        f: |c: &[f64]| {
            let g = HaarExpansion::from_parts(space, depth, vec![0.0], c.to_vec()).unwrap();
            let tg = op.apply(&g).unwrap();
            quotient_norm(tg.synthesize().values(), q).ln() - quotient_norm(g.synthesize().values(), q).ln()
        },
    };
    maximize(&objective, budget, &[]).unwrap().value.exp()
}

fn small_budget(seed: u64) -> SearchBudget {
    SearchBudget {
        restarts: 16,
        max_iters: 200,
        ..SearchBudget::with_seed(seed)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn witness_reproduces_lower_bound(seed in any::<u64>(), p in 1.2f64..5.0) {
        let tau = random_measure_preserving(&mut rng_for(seed, 0), 3);
        let op = CoefficientOperator::<f64>::rearrangement(&tau, p, SpaceSpec::Scalar).unwrap();
        let est = operator_norm_search(&op, &NormSearch::new(p, small_budget(seed))).unwrap();
        prop_assert_eq!(est.kind, EstimateKind::LowerBound);
        let w = est.witness.unwrap();
        let again = rayleigh_ratio(&op, p, &w).unwrap();
        prop_assert!((again - est.value).abs() <= 1e-9 * est.value);
    }

    #[test]
    fn tensor_witness_matches_scalar_ratio(seed in any::<u64>(), p in 1.2f64..4.0, depth in 2u32..6) {
        let mut rng = rng_for(seed, 0);
        let tau = glued_blocks(depth);
        let d = 3;
        let space = SpaceSpec::lp(p, d).unwrap();
        let scalar_op = CoefficientOperator::<f64>::rearrangement(&tau, p, SpaceSpec::Scalar).unwrap();
        let vector_op = CoefficientOperator::<f64>::rearrangement(&tau, p, space).unwrap();
        let g = random_expansion::<f64, _>(&mut rng, SpaceSpec::Scalar, depth, false);
        let weights = [1.0, -0.5, 2.0];
        let coeffs: Vec<f64> = g.coeffs().iter().flat_map(|a| weights.iter().map(move |w| a * w)).collect();
        let f = HaarExpansion::from_parts(space, depth, vec![0.0; d], coeffs).unwrap();
        let s = rayleigh_ratio(&scalar_op, p, &g).unwrap();
        let v = rayleigh_ratio(&vector_op, p, &f).unwrap();
        prop_assert!((s - v).abs() <= 1e-12 * s);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    // The dual of L^p_0 is L^q modulo constants, so the inverse map is measured in the quotient norm.
    #[test]
    fn duality_of_inverse_maps(seed in any::<u64>(), p in 1.25f64..2.0) {
        let tau = random_measure_preserving(&mut rng_for(seed, 0), 2);
        let q = p / (p - 1.0);
        let budget = SearchBudget { restarts: 24, max_iters: 400, ..SearchBudget::with_seed(seed) };
        let fwd = CoefficientOperator::<f64>::rearrangement(&tau, p, SpaceSpec::Scalar).unwrap();
        let back = CoefficientOperator::<f64>::rearrangement(&tau.inverse().unwrap(), q, SpaceSpec::Scalar).unwrap();
        let a = operator_norm_search(&fwd, &NormSearch::new(p, budget)).unwrap().value;
        let b = quotient_norm_search(&back, q, &budget);
        prop_assert!((a - b).abs() <= 1e-3 * a.max(b), "‖T_τ‖_{} = {} but the quotient norm of T_τ⁻¹ at {} is {}", p, a, q, b);
    }
}

#[test]
fn glued_semenov_witness_ratio_is_the_same_in_every_coordinate() {
    let tau = glued_blocks(5);
    let witness = semenov_heuristic(&tau, HeuristicBudget::default()).unwrap().witness;
    for p in [1.5, 3.0] {
        let scalar_op = CoefficientOperator::<f64>::rearrangement(&tau, p, SpaceSpec::Scalar).unwrap();
        let space = SpaceSpec::lp(p, witness.len()).unwrap();
        let vector_op = CoefficientOperator::<f64>::rearrangement(&tau, p, space).unwrap();
        // One normalized Haar function per coordinate: the L^p(ℓ_p) ratio is the
        // p-mean of the scalar ratios.
        let mut f = HaarExpansion::<f64>::zeros(space, 5);
        let mut num = 0.0;
        let mut den = 0.0;
        for (k, i) in witness.iter().enumerate() {
            let mut e = vec![0.0; witness.len()];
            e[k] = i.measure().to_f64().powf(-1.0 / p);
            f.set_coeff(*i, &e).unwrap();
            let h = HaarExpansion::<f64>::haar(5, *i).unwrap().scaled(e[k]);
            num += scalar_op.apply(&h).unwrap().lp_norm(p).unwrap().powf(p);
            den += h.lp_norm(p).unwrap().powf(p);
        }
        let expected = (num / den).powf(1.0 / p);
        let v = rayleigh_ratio(&vector_op, p, &f).unwrap();
        assert!((v - expected).abs() <= 1e-12 * expected, "{v} vs {expected}");
    }
}

#[test]
fn umd_constant_grows_with_depth() {
    let budget = SearchBudget::with_seed(3);
    for p in [1.5, 2.0, 3.0] {
        let mut prev = 0.0;
        for depth in 0..=2 {
            let u = umd_constant::<f64>(SpaceSpec::Scalar, p, depth, UmdMode::Exact { cap: 7 }, &budget)
                .unwrap()
                .estimate
                .value;
            assert!(prev <= u + 1e-9, "p = {p}: depth {depth} gives {u} < {prev}");
            prev = u;
        }
    }
}
