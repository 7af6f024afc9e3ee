use serde::{Deserialize, Serialize};

use crate::dyadic::{count_up_to, DyadicInterval};
use crate::error::{Error, Result};
use crate::optimize::{maximize, FiniteDifference, Objective, SearchBudget};
use crate::rearrangement::RearrangementMap;
use crate::sampling::{random_adapted_sequence, random_expansion, rng_for};
use crate::scalar::Scalar;
use crate::space::{check_exponent, HaarExpansion, SpaceSpec, StepFunction};

use super::p_shift_values;

/// How the Rademacher average in [`a_rademacher`] is formed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum RademacherMode {
    /// All `2^n` sign vectors; at most 12 levels.
    Exact,
    Sampled {
        samples: usize,
        seed: u64,
    },
}

/// The two operators known to be τ-monotone with constant one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "operator", rename_all = "snake_case")]
pub enum MonotoneOperator {
    Square,
    Rademacher { mode: RademacherMode },
}

impl MonotoneOperator {
    pub fn evaluate<T: Scalar>(&self, tau: &RearrangementMap, f: &HaarExpansion<T>) -> Result<StepFunction<T>> {
        match self {
            MonotoneOperator::Square => a_square(tau, f),
            MonotoneOperator::Rademacher { mode } => a_rademacher(tau, f, *mode),
        }
    }
}

/// Per cell and level, the `X`-value of `T_τ d_{k}` at that cell.
fn transported_slices<T: Scalar>(tau: &RearrangementMap, f: &HaarExpansion<T>) -> Result<(usize, Vec<T>)> {
    if !tau.is_measure_preserving() {
        return Err(Error::NotMeasurePreserving);
    }
    if f.depth() > tau.source_depth() {
        return Err(Error::InvalidDepth(format!(
            "expansion depth {} exceeds map depth {}",
            f.depth(),
            tau.source_depth()
        )));
    }
    if !f.is_zero_mean() {
        return Err(Error::NotZeroMean);
    }
    let d = f.dim();
    let levels = f.depth() as usize + 1;
    let fine = f.depth() + 1;
    let cells = 1usize << fine;
    let mut out = vec![T::zero(); cells * levels * d];
    for pos in 0..count_up_to(f.depth()) {
        let a = f.coeff_at(pos);
        if a.iter().all(|x| *x == T::zero()) {
            continue;
        }
        let target = tau.at(pos);
        let l = target.level() as usize;
        let cells_of = target.cells(fine);
        let mid = cells_of.start + cells_of.len() / 2;
        for c in cells_of {
            let s = if c < mid { T::one() } else { -T::one() };
            let slot = &mut out[(c * levels + l) * d..(c * levels + l + 1) * d];
            slot.iter_mut().zip(a).for_each(|(o, x)| *o = s * *x);
        }
    }
    Ok((levels, out))
}

/// `(Σ_k ‖T_τ d_k(t)‖_X²)^{1/2}` on the grid of `f`.
pub fn a_square<T: Scalar>(tau: &RearrangementMap, f: &HaarExpansion<T>) -> Result<StepFunction<T>> {
    let (levels, slices) = transported_slices(tau, f)?;
    let d = f.dim();
    let space = f.space();
    let values = slices
        .chunks(levels * d)
        .map(|cell| cell.chunks(d).map(|v| space.norm(v).powi(2)).sum::<T>().sqrt())
        .collect();
    StepFunction::scalar(f.depth() + 1, values)
}

/// `E_ω ‖T_τ(Σ_k r_k(ω) d_k)(t)‖_X` on the grid of `f`.
pub fn a_rademacher<T: Scalar>(
    tau: &RearrangementMap,
    f: &HaarExpansion<T>,
    mode: RademacherMode,
) -> Result<StepFunction<T>> {
    let (levels, slices) = transported_slices(tau, f)?;
    let signs: Vec<Vec<T>> = match mode {
        RademacherMode::Exact => {
            if levels > 12 {
                return Err(Error::TooLarge { count: levels, cap: 12 });
            }
            // The sign of d_1 can be fixed since ‖-x‖ = ‖x‖.
            (0..1u64 << (levels - 1))
                .map(|m| {
                    (0..levels)
                        .map(|k| {
                            if k > 0 && m >> (k - 1) & 1 == 1 {
                                -T::one()
                            } else {
                                T::one()
                            }
                        })
                        .collect()
                })
                .collect()
        }
        RademacherMode::Sampled { samples, seed } => {
            if samples == 0 {
                return Err(Error::InvalidBudget);
            }
            use rand::Rng;
            let mut rng = rng_for(seed, u64::MAX - 2);
            (0..samples)
                .map(|_| {
                    (0..levels)
                        .map(|_| if rng.random_bool(0.5) { T::one() } else { -T::one() })
                        .collect()
                })
                .collect()
        }
    };
    let d = f.dim();
    let space = f.space();
    let m = T::of(signs.len() as f64);
    let mut v = vec![T::zero(); d];
    let values = slices
        .chunks(levels * d)
        .map(|cell| {
            let mut total = T::zero();
            for s in &signs {
                v.iter_mut().for_each(|x| *x = T::zero());
                for (k, sk) in s.iter().enumerate() {
                    for j in 0..d {
                        v[j] = v[j] + *sk * cell[k * d + j];
                    }
                }
                total = total + space.norm(&v);
            }
            total / m
        })
        .collect();
    StepFunction::scalar(f.depth() + 1, values)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotoneReport {
    pub samples: usize,
    pub c: f64,
    /// Largest `A(Σ γ_k d_k)(t) - c sup_k |P_{k-1,τ}(γ_k)(t)| A(Σ d_k)(t)` seen.
    pub max_excess: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<MonotoneCounterexample>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotoneCounterexample {
    pub sample: usize,
    pub cell: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub gamma: Vec<Vec<f64>>,
    pub f: HaarExpansion<f64>,
}

/// Violations above this, relative to `max(1, rhs)`, are reported.
pub const MONOTONE_TOL: f64 = 1e-10;

/// Samples nonnegative nondecreasing adapted `(γ_k)` and zero-mean `Σ d_k` over `n` levels and
/// tests the pointwise domination on every cell.
pub fn check_tau_monotone(
    op: MonotoneOperator,
    tau: &RearrangementMap,
    space: SpaceSpec,
    n: u32,
    c: f64,
    samples: usize,
    seed: u64,
) -> Result<MonotoneReport> {
    if n == 0 {
        return Err(Error::InvalidDepth("need at least one level".into()));
    }
    let depth = n - 1;
    let mut max_excess = f64::NEG_INFINITY;
    let mut counterexample = None;
    for s in 0..samples {
        let mut rng = rng_for(seed, s as u64);
        let f: HaarExpansion<f64> = random_expansion(&mut rng, space, depth, false);
        let z = random_adapted_sequence::<f64, _>(&mut rng, depth);
        // γ_k lives on D_{k-1}.
        let mut g = f.clone();
        let d = space.dim();
        for pos in 0..count_up_to(depth) {
            let i = DyadicInterval::from_position(pos);
            let w = z.level(i.level())[i.index() as usize];
            g.coeffs_mut()[pos * d..(pos + 1) * d].iter_mut().for_each(|x| *x *= w);
        }
        let lhs = op.evaluate(tau, &g)?;
        let base = op.evaluate(tau, &f)?;
        let mut sup = vec![0.0f64; lhs.cells()];
        for k in 0..n {
            let pk = p_shift_values(tau, k, z.level(k))?.refine(n.max(tau.target_depth()))?;
            let shift = pk.resolution() - n;
            for (cell, slot) in sup.iter_mut().enumerate() {
                // Measure preservation makes P_{k,τ} constant on the lhs grid cells.
                *slot = slot.max(pk.values()[cell << shift].abs());
            }
        }
        for cell in 0..lhs.cells() {
            let l = lhs.values()[cell];
            let r = c * sup[cell] * base.values()[cell];
            let excess = (l - r) / r.max(1.0);
            if excess > max_excess {
                max_excess = excess;
            }
            if excess > MONOTONE_TOL && counterexample.is_none() {
                counterexample = Some(MonotoneCounterexample {
                    sample: s,
                    cell,
                    lhs: l,
                    rhs: r,
                    gamma: (0..n).map(|k| z.level(k).to_vec()).collect(),
                    f: f.clone(),
                });
            }
        }
    }
    Ok(MonotoneReport {
        samples,
        c,
        max_excess,
        pass: counterexample.is_none(),
        counterexample,
    })
}

/// Lower bound for `‖A : L^r_{X,0}(F_n) → L^r‖` with its witness.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotoneNorm {
    pub value: f64,
    pub r: f64,
    pub witness: HaarExpansion<f64>,
}

/// Homogeneous-ratio search `‖A f‖_{L^r} / ‖f‖_{L^r_X}` over zero-mean `f` on `n` levels,
/// with finite-difference gradients.
pub fn monotone_norm(
    op: MonotoneOperator,
    tau: &RearrangementMap,
    space: SpaceSpec,
    n: u32,
    r: f64,
    budget: &SearchBudget,
) -> Result<MonotoneNorm> {
    check_exponent(r)?;
    budget.check()?;
    if n == 0 {
        return Err(Error::InvalidDepth("need at least one level".into()));
    }
    let depth = n - 1;
    let d = space.dim();
    let count = count_up_to(depth);
    let scale: Vec<f64> = (0..count)
        .map(|pos| (DyadicInterval::from_position(pos).level() as f64 / r).exp2())
        .collect();
    let build = |c: &[f64]| {
        let coeffs = c.iter().enumerate().map(|(i, x)| x * scale[i / d]).collect();
        HaarExpansion::from_parts(space, depth, vec![0.0; d], coeffs).expect("shape")
    };
    let ratio = |f: &HaarExpansion<f64>| -> Result<f64> { Ok(op.evaluate(tau, f)?.lp_norm(r)? / f.lp_norm(r)?) };
    let obj = FiniteDifference {
        dim: count * d,
        step: 1e-6,
        f: |c: &[f64]| ratio(&build(c)).map(f64::ln).unwrap_or(f64::NEG_INFINITY),
    };
    // Each Haar function alone is a natural start.
    let starts: Vec<Vec<f64>> = (0..obj.dim.min(8))
        .map(|j| {
            let mut e = vec![0.0; obj.dim];
            e[j] = 1.0;
            e
        })
        .collect();
    let best = maximize(&obj, budget, &starts)?;
    let witness = build(&best.point);
    let value = ratio(&witness)?;
    debug_assert!((value.ln() - obj.value(&best.point)).abs() < 1e-9);
    Ok(MonotoneNorm { value, r, witness })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DownwardExtrapolationReport {
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub kappa: f64,
    pub c: f64,
    /// Searched lower bound for `‖A‖_q`.
    pub norm_q_lower: f64,
    /// Dense estimate of `‖A‖_p`.
    pub norm_p_estimate: f64,
    /// `c (3p/(q-1)) κ^{1/r} ‖A‖_p`.
    pub rhs_bound: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub witness_q: HaarExpansion<f64>,
    pub witness_p: HaarExpansion<f64>,
}

/// Compares a searched lower bound for `‖A‖_q` with the extrapolation bound built from
/// a dense estimate of `‖A‖_p`, where `1/q = 1/r + 1/p`.
#[allow(clippy::too_many_arguments)]
pub fn check_downward_extrapolation(
    op: MonotoneOperator,
    tau: &RearrangementMap,
    space: SpaceSpec,
    n: u32,
    kappa: f64,
    c: f64,
    p: f64,
    q: f64,
    budget: &SearchBudget,
    tolerance: f64,
) -> Result<DownwardExtrapolationReport> {
    if !(1.0 < q && q < p && p.is_finite()) {
        return Err(Error::InvalidExponents(format!(
            "need 1 < q < p < ∞, got q = {q}, p = {p}"
        )));
    }
    let r = 1.0 / (1.0 / q - 1.0 / p);
    let lower = monotone_norm(op, tau, space, n, q, budget)?;
    let dense = SearchBudget {
        restarts: budget.restarts * 4,
        max_iters: budget.max_iters * 2,
        ..*budget
    };
    let upper = monotone_norm(op, tau, space, n, p, &dense)?;
    let rhs_bound = c * (3.0 * p / (q - 1.0)) * kappa.powf(1.0 / r) * upper.value;
    Ok(DownwardExtrapolationReport {
        p,
        q,
        r,
        kappa,
        c,
        norm_q_lower: lower.value,
        norm_p_estimate: upper.value,
        rhs_bound,
        tolerance,
        pass: lower.value <= rhs_bound * (1.0 + tolerance),
        witness_q: lower.witness,
        witness_p: upper.witness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::apply_rearrangement;
    use crate::rearrangement::{identity, parity_shift};

    #[test]
    fn single_level_square_is_absolute_value() {
        let tau = parity_shift(2);
        let mut f = HaarExpansion::<f64>::zeros(SpaceSpec::Scalar, 0);
        f.coeffs_mut()[0] = -2.5;
        let a = a_square(&tau, &f).unwrap();
        let tf = apply_rearrangement(&tau, 2.0, &f).unwrap().synthesize();
        for c in 0..a.cells() {
            assert_eq!(a.values()[c], tf.values()[c].abs());
        }
        let b = a_rademacher(&tau, &f, RademacherMode::Exact).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn square_function_preserves_l2() {
        let mut rng = rng_for(31, 0);
        for _ in 0..10 {
            let f: HaarExpansion<f64> = random_expansion(&mut rng, SpaceSpec::Scalar, 4, false);
            let a = a_square(&identity(4), &f).unwrap();
            assert!((a.lp_norm(2.0).unwrap() - f.lp_norm(2.0).unwrap()).abs() < 1e-12);
            let b = a_square(&parity_shift(4), &f).unwrap();
            assert!((b.lp_norm(2.0).unwrap() - f.lp_norm(2.0).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn homogeneity() {
        let mut rng = rng_for(32, 0);
        let f: HaarExpansion<f64> = random_expansion(&mut rng, SpaceSpec::lp(1.5, 2).unwrap(), 3, false);
        let tau = parity_shift(3);
        for op in [
            MonotoneOperator::Square,
            MonotoneOperator::Rademacher {
                mode: RademacherMode::Exact,
            },
        ] {
            let a = op.evaluate(&tau, &f).unwrap();
            let b = op.evaluate(&tau, &f.scaled(-3.0)).unwrap();
            assert!(a.scaled(3.0).max_abs_diff(&b).unwrap() < 1e-12);
        }
    }

    #[test]
    fn monotone_with_constant_one() {
        for op in [
            MonotoneOperator::Square,
            MonotoneOperator::Rademacher {
                mode: RademacherMode::Exact,
            },
        ] {
            let r = check_tau_monotone(op, &parity_shift(4), SpaceSpec::Scalar, 4, 1.0, 50, 1).unwrap();
            assert!(r.pass, "{r:?}");
        }
    }

    #[test]
    fn exponent_order_enforced() {
        let b = SearchBudget {
            restarts: 1,
            ..Default::default()
        };
        let e = check_downward_extrapolation(
            MonotoneOperator::Square,
            &identity(2),
            SpaceSpec::Scalar,
            2,
            1.0,
            1.0,
            2.0,
            2.0,
            &b,
            0.05,
        );
        assert!(matches!(e, Err(Error::InvalidExponents(_))));
    }
}
