use serde::{Deserialize, Serialize};

use crate::dyadic::intervals_up_to;
use crate::error::{Error, Result};
use crate::operators::{operator_norm_exact_small, CoefficientOperator, DenseMatrix};
use crate::optimize::{maximize, FiniteDifference, SearchBudget};
use crate::rearrangement::RearrangementMap;
use crate::sampling::{random_atom, random_expansion, rng_for};
use crate::scalar::Scalar;
use crate::space::{HaarExpansion, SpaceSpec};

use super::condition::{check_condition_c, CDecomposition, ConditionCReport};

/// `A_p(Σ a_I h_I) = Σ S a_I γ_I^{1/p} h_{τ(I)}`.
pub fn apply_a_p<T: Scalar>(
    s: &DenseMatrix<T>,
    target_space: SpaceSpec,
    tau: &RearrangementMap,
    gamma: &[f64],
    p: f64,
    f: &HaarExpansion<T>,
) -> Result<HaarExpansion<T>> {
    CoefficientOperator::a_p(s.clone(), f.space(), target_space, tau, gamma, p)?.apply(f)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct H1ExtrapolationConfig {
    pub p: f64,
    pub budget: SearchBudget,
    /// Random starts for the `H^1 → H^1` ascent.
    pub h1_restarts: usize,
    pub random_atoms: usize,
    pub random_functions: usize,
    pub c3_samples: usize,
    pub tolerance: f64,
}

impl H1ExtrapolationConfig {
    pub fn new(p: f64, seed: u64) -> Self {
        H1ExtrapolationConfig {
            p,
            budget: SearchBudget::with_seed(seed),
            h1_restarts: 8,
            random_atoms: 200,
            random_functions: 200,
            c3_samples: 50,
            tolerance: 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct H1ExtrapolationReport {
    pub p: f64,
    pub p_star: f64,
    pub q_star: f64,
    pub kappa: f64,
    /// Lower bound for `‖A_1 : H^1_X → H^1_Y‖`.
    pub h1_lower: f64,
    /// Estimate of `‖A_p : L^p_X → L^p_Y‖`.
    pub lp_estimate: f64,
    pub lp_exact: bool,
    /// `18p/(p-1) κ^{1+1/q_*}`.
    pub factor: f64,
    pub bound: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub conditions: Vec<ConditionCReport>,
    pub h1_witness: HaarExpansion<f64>,
}

fn h1_ratio(op: &CoefficientOperator<f64>, f: &HaarExpansion<f64>) -> Option<f64> {
    let den = f.h1_norm().ok()?;
    if !(den > 0.0) {
        return None;
    }
    Some(op.apply(f).ok()?.h1_norm().ok()? / den)
}

/// Certifies condition C for every root of `D_0^N`, then compares an `H^1` lower bound for
/// `A_1` with `18p/(p-1) κ^{1+1/q_*} ‖A_p‖`.
pub fn check_h1_extrapolation(
    s: &DenseMatrix<f64>,
    source_space: SpaceSpec,
    target_space: SpaceSpec,
    tau: &RearrangementMap,
    gamma: &[f64],
    decompositions: &[CDecomposition],
    config: &H1ExtrapolationConfig,
) -> Result<H1ExtrapolationReport> {
    let p = config.p;
    let depth = tau.source_depth();
    let mut conditions = Vec::new();
    let mut kappa: f64 = 0.0;
    let mut p_star = None;
    for root in intervals_up_to(depth) {
        let dec = decompositions
            .iter()
            .find(|d| d.root == root)
            .ok_or_else(|| Error::ConditionNotCertified(format!("no decomposition for {root}")))?;
        if dec.p != p {
            return Err(Error::InvalidDecomposition(format!(
                "decomposition for {root} uses p = {}",
                dec.p
            )));
        }
        match p_star {
            None => p_star = Some(dec.p_star),
            Some(ps) if ps != dec.p_star => {
                return Err(Error::InvalidDecomposition("decompositions disagree on p_*".into()));
            }
            _ => {}
        }
        let report = check_condition_c(dec, tau, gamma, source_space, &config.budget, config.c3_samples)?;
        if !report.pass {
            return Err(Error::ConditionNotCertified(format!("condition fails at {root}")));
        }
        kappa = kappa.max(dec.kappa);
        conditions.push(report);
    }
    let p_star = p_star.expect("D_0^N is not empty");
    let q_star = p_star / (p_star - 1.0);

    let a_p = CoefficientOperator::a_p(s.clone(), source_space, target_space, tau, gamma, p)?;
    let lp = operator_norm_exact_small(&a_p, p, &config.budget)?;
    let a_1 = CoefficientOperator::a_p(s.clone(), source_space, target_space, tau, gamma, 1.0)?;

    let d = source_space.dim();
    let mut candidates: Vec<HaarExpansion<f64>> = Vec::new();
    for j in intervals_up_to(depth) {
        for k in 0..d {
            let mut f = HaarExpansion::zeros(source_space, depth);
            let mut e = vec![0.0; d];
            e[k] = 1.0 / j.measure().to_f64();
            f.set_coeff(j, &e)?;
            candidates.push(f);
        }
    }
    let mut rng = rng_for(config.budget.seed, 0x52);
    for _ in 0..config.random_atoms {
        candidates.push(random_atom::<f64, _>(&mut rng, source_space, depth).expansion);
    }
    for _ in 0..config.random_functions {
        candidates.push(random_expansion(&mut rng, source_space, depth, false));
    }
    let mut scored: Vec<(f64, usize)> = candidates
        .iter()
        .enumerate()
        .filter_map(|(i, f)| h1_ratio(&a_1, f).map(|r| (r, i)))
        .collect();
    scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));

    let mut best = candidates[scored[0].1].clone();
    let mut h1_lower = scored[0].0;
    if config.h1_restarts > 0 {
        let dim = best.coeffs().len();
        let build =
            |c: &[f64]| HaarExpansion::from_parts(source_space, depth, vec![0.0; d], c.to_vec()).expect("shape");
        let obj = FiniteDifference {
            dim,
            step: 1e-6,
            f: |c: &[f64]| h1_ratio(&a_1, &build(c)).map(f64::ln).unwrap_or(f64::NEG_INFINITY),
        };
        let budget = SearchBudget {
            restarts: config.h1_restarts,
            ..config.budget
        };
        let starts: Vec<Vec<f64>> = scored
            .iter()
            .take(4)
            .map(|(_, i)| candidates[*i].coeffs().to_vec())
            .collect();
        let run = maximize(&obj, &budget, &starts)?;
        let f = build(&run.point);
        if let Some(r) = h1_ratio(&a_1, &f) {
            if r > h1_lower {
                h1_lower = r;
                best = f;
            }
        }
    }

    let factor = 18.0 * p / (p - 1.0) * kappa.powf(1.0 + 1.0 / q_star);
    let bound = factor * lp.value;
    Ok(H1ExtrapolationReport {
        p,
        p_star,
        q_star,
        kappa,
        h1_lower,
        lp_estimate: lp.value,
        lp_exact: lp.kind == crate::operators::EstimateKind::Exact,
        factor,
        bound,
        tolerance: config.tolerance,
        pass: h1_lower <= bound * (1.0 + config.tolerance),
        conditions,
        h1_witness: best,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extrapolation::semenov_decomposition;
    use crate::rearrangement::{identity, parity_shift};

    fn decs(depth: u32, p: f64, p_star: f64, kappa: f64) -> Vec<CDecomposition> {
        intervals_up_to(depth)
            .map(|j| semenov_decomposition(j, depth, p, p_star, kappa).unwrap())
            .collect()
    }

    fn quick(p: f64) -> H1ExtrapolationConfig {
        H1ExtrapolationConfig {
            h1_restarts: 2,
            random_atoms: 30,
            random_functions: 30,
            c3_samples: 10,
            budget: SearchBudget {
                restarts: 4,
                max_iters: 100,
                ..SearchBudget::default()
            },
            ..H1ExtrapolationConfig::new(p, 3)
        }
    }

    #[test]
    fn identity_case() {
        let r = check_h1_extrapolation(
            &DenseMatrix::identity(1),
            SpaceSpec::Scalar,
            SpaceSpec::Scalar,
            &identity(2),
            &[1.0; 7],
            &decs(2, 2.0, 2.0, 1.0),
            &quick(2.0),
        )
        .unwrap();
        assert!((r.h1_lower - 1.0).abs() < 1e-9, "{}", r.h1_lower);
        assert!((r.lp_estimate - 1.0).abs() < 1e-12 && r.lp_exact);
        assert!(r.pass);
    }

    #[test]
    fn missing_root_is_reported() {
        let mut d = decs(2, 2.0, 2.0, 2.0);
        d.pop();
        let e = check_h1_extrapolation(
            &DenseMatrix::identity(1),
            SpaceSpec::Scalar,
            SpaceSpec::Scalar,
            &parity_shift(2),
            &[1.0; 7],
            &d,
            &quick(2.0),
        );
        assert!(matches!(e, Err(Error::ConditionNotCertified(_))));
    }

    #[test]
    fn linearity_of_a_p() {
        let mut rng = rng_for(41, 0);
        let f: HaarExpansion<f64> = random_expansion(&mut rng, SpaceSpec::lp(1.5, 2).unwrap(), 2, false);
        let s = DenseMatrix::new(3, 2, vec![1.0, 0.5, -1.0, 2.0, 0.0, 1.0]).unwrap();
        let gamma: Vec<f64> = (0..7).map(|i| 1.0 + i as f64).collect();
        let y = SpaceSpec::lp(2.0, 3).unwrap();
        let a = apply_a_p(&s, y, &parity_shift(2), &gamma, 1.5, &f).unwrap();
        let b = apply_a_p(&s, y, &parity_shift(2), &gamma, 1.5, &f.scaled(-2.5)).unwrap();
        assert!(a.scaled(-2.5).synthesize().max_abs_diff(&b.synthesize()).unwrap() < 1e-12);
        let bad = apply_a_p(&s, SpaceSpec::Scalar, &parity_shift(2), &gamma, 1.5, &f);
        assert!(matches!(bad, Err(Error::InvalidMap(_))));
    }
}
