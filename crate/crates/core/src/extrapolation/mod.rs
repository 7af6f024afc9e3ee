//! Level transports `P_{k,τ}`, adapted sequences and the maximal inequality,
//! τ-monotone operators, condition `C(X,p,κ)` and the extrapolation checks built
//! on them.

mod condition;
mod h1;
mod monotone;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rearrangement::RearrangementMap;
use crate::scalar::Scalar;
use crate::space::StepFunction;

pub use condition::{
    check_condition_c, semenov_decomposition, C1Report, C2Report, C3Report, CDecomposition, ConditionCReport,
};
pub use h1::{apply_a_p, check_h1_extrapolation, H1ExtrapolationConfig, H1ExtrapolationReport};
pub use monotone::{
    a_rademacher, a_square, check_downward_extrapolation, check_tau_monotone, monotone_norm,
    DownwardExtrapolationReport, MonotoneNorm, MonotoneOperator, MonotoneReport, RademacherMode,
};

/// Additive slack for comparisons between exactly computed quantities.
pub const EXACT_TOL: f64 = 1e-12;

/// `P_{level,τ}(γ) = Σ_{I ∈ D_level} γ(I) 1_{τ(I)}` for `γ` given by its `2^level` values.
/// The result lives on the grid of resolution `max(level, target_depth)`.
pub fn p_shift_values<T: Scalar>(tau: &RearrangementMap, level: u32, values: &[T]) -> Result<StepFunction<T>> {
    if level > tau.source_depth() {
        return Err(Error::InvalidDepth(format!(
            "level {level} outside the domain D_0^{}",
            tau.source_depth()
        )));
    }
    if values.len() != 1usize << level {
        return Err(Error::InvalidWeights(level));
    }
    let resolution = level.max(tau.target_depth());
    let mut out = StepFunction::zeros(crate::space::SpaceSpec::Scalar, resolution);
    let first = (1usize << level) - 1;
    for (i, g) in values.iter().enumerate() {
        let target = tau.at(first + i);
        for c in target.cells(resolution) {
            out.values_mut()[c] = out.values_mut()[c] + *g;
        }
    }
    Ok(out)
}

/// [`p_shift_values`] for a scalar step function that must be constant on level-`level` intervals.
pub fn p_shift<T: Scalar>(tau: &RearrangementMap, level: u32, gamma: &StepFunction<T>) -> Result<StepFunction<T>> {
    if gamma.dim() != 1 || gamma.resolution() < level {
        return Err(Error::InvalidWeights(level));
    }
    let block = 1usize << (gamma.resolution() - level);
    let vals = gamma.values();
    for chunk in vals.chunks(block) {
        if chunk.iter().any(|v| *v != chunk[0]) {
            return Err(Error::InvalidWeights(level));
        }
    }
    let level_values: Vec<T> = vals.chunks(block).map(|c| c[0]).collect();
    p_shift_values(tau, level, &level_values)
}

/// `0 ≤ Z_0 ≤ … ≤ Z_n` with `Z_k` given by its values on `D_k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct AdaptedSequence<T> {
    levels: Vec<Vec<T>>,
}

impl<T: Scalar> AdaptedSequence<T> {
    pub fn new(levels: Vec<Vec<T>>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidSequence("no levels".into()));
        }
        for (k, row) in levels.iter().enumerate() {
            if row.len() != 1usize << k {
                return Err(Error::InvalidSequence(format!("Z_{k} has {} values", row.len())));
            }
            for (i, v) in row.iter().enumerate() {
                if !(*v >= T::zero()) {
                    return Err(Error::InvalidSequence(format!("Z_{k} is negative on {k}:{i}")));
                }
                if k > 0 && *v < levels[k - 1][i / 2] {
                    return Err(Error::InvalidSequence(format!("Z_{k} < Z_{} on {k}:{i}", k - 1)));
                }
            }
        }
        Ok(AdaptedSequence { levels })
    }

    pub fn n(&self) -> u32 {
        self.levels.len() as u32 - 1
    }

    pub fn level(&self, k: u32) -> &[T] {
        &self.levels[k as usize]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaximalReport {
    /// `∫ sup_k P_{k,τ}(Z_k)`.
    pub lhs: f64,
    /// `∫ Z_n`.
    pub rhs: f64,
    pub kappa: f64,
    pub pass: bool,
}

/// Evaluates both sides of `∫ sup_k P_{k,τ}(Z_k) ≤ κ ∫ Z_n` exactly on the grid.
pub fn check_maximal_inequality<T: Scalar>(
    tau: &RearrangementMap,
    z: &AdaptedSequence<T>,
    kappa: f64,
) -> Result<MaximalReport> {
    if !tau.is_measure_preserving() {
        return Err(Error::NotMeasurePreserving);
    }
    let n = z.n();
    let mut sup: Option<StepFunction<T>> = None;
    for k in 0..=n {
        let pk = p_shift_values(tau, k, z.level(k))?;
        let pk = pk.refine(n.max(pk.resolution()))?;
        sup = Some(match sup {
            None => pk,
            Some(mut s) => {
                let s_res = s.resolution();
                if s_res < pk.resolution() {
                    s = s.refine(pk.resolution())?;
                }
                for (a, b) in s.values_mut().iter_mut().zip(pk.values()) {
                    *a = a.max(*b);
                }
                s
            }
        });
    }
    let lhs = sup.expect("n ≥ 0").mean()[0].as_f64();
    let last = z.level(n);
    let rhs = last.iter().map(|v| v.as_f64()).sum::<f64>() / last.len() as f64;
    Ok(MaximalReport {
        lhs,
        rhs,
        kappa,
        pass: lhs <= kappa * rhs + EXACT_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rearrangement::{glued_blocks, identity, parity_shift};
    use crate::sampling::{random_adapted_sequence, rng_for};

    #[test]
    fn p_shift_examples() {
        let tau = parity_shift(3);
        let ones = StepFunction::<f64>::scalar(2, vec![1.0; 4]).unwrap();
        assert!(p_shift(&tau, 2, &ones).unwrap().values().iter().all(|v| *v == 1.0));
        let g = StepFunction::<f64>::scalar(3, vec![1.0, 1.0, 2.0, 2.0, 0.0, 0.0, 5.0, 5.0]).unwrap();
        let same = p_shift(&identity(3), 2, &g).unwrap();
        assert_eq!(same.values(), &[1.0, 1.0, 2.0, 2.0, 0.0, 0.0, 5.0, 5.0]);
        let half = StepFunction::<f64>::scalar(1, vec![2.0, 0.0]).unwrap();
        let moved = p_shift(&tau, 1, &half).unwrap().level_averages(1).unwrap();
        assert_eq!(moved, vec![0.0, 2.0]);
        let rough = StepFunction::<f64>::scalar(2, vec![1.0, 2.0, 0.0, 0.0]).unwrap();
        assert!(matches!(p_shift(&tau, 1, &rough), Err(Error::InvalidWeights(1))));
    }

    #[test]
    fn sequences_validate() {
        assert!(AdaptedSequence::new(vec![vec![1.0], vec![1.0, 2.0]]).is_ok());
        assert!(AdaptedSequence::new(vec![vec![1.0], vec![0.5, 2.0]]).is_err());
        assert!(AdaptedSequence::new(vec![vec![-1.0]]).is_err());
    }

    #[test]
    fn maximal_inequality_identity_is_tight() {
        let mut rng = rng_for(21, 0);
        for _ in 0..20 {
            let z = random_adapted_sequence::<f64, _>(&mut rng, 4);
            let r = check_maximal_inequality(&identity(4), &z, 1.0).unwrap();
            assert!((r.lhs - r.rhs).abs() < 1e-12 && r.pass);
        }
    }

    #[test]
    fn maximal_inequality_examples() {
        let mut rng = rng_for(22, 0);
        let (parity, glued) = (parity_shift(6), glued_blocks(6));
        for _ in 0..100 {
            let z = random_adapted_sequence::<f64, _>(&mut rng, 6);
            assert!(check_maximal_inequality(&parity, &z, 2.0).unwrap().pass);
            assert!(check_maximal_inequality(&glued, &z, 3.0).unwrap().pass);
        }
    }
}
