use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::dyadic::{DyadicInterval, IntervalCollection};
use crate::error::{Error, Result};
use crate::exact::Dyadic;
use crate::operators::{operator_norm_search, CoefficientOperator, NormSearch};
use crate::optimize::SearchBudget;
use crate::rearrangement::RearrangementMap;
use crate::sampling::{random_expansion, rng_for};
use crate::space::{HaarExpansion, SpaceSpec};

use super::EXACT_TOL;

/// A decomposition of the shadow of `root` into parts `K_i`, with the exponents and
/// constant it is claimed to certify.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CDecomposition {
    pub root: DyadicInterval,
    pub parts: Vec<IntervalCollection>,
    pub p: f64,
    pub p_star: f64,
    pub kappa: f64,
}

impl CDecomposition {
    /// Checks the parts are non-empty, pairwise disjoint and cover the shadow of the root in
    /// `D_0^depth`, and that `1 < p ≤ p_* < ∞`.
    pub fn validate(&self, depth: u32) -> Result<()> {
        let bad = |m: String| -> Result<()> { Err(Error::InvalidDecomposition(m)) };
        if !(self.p > 1.0 && self.p.is_finite()) {
            return bad(format!("p = {} outside (1, ∞)", self.p));
        }
        if !(self.p_star >= self.p && self.p_star.is_finite()) {
            return bad(format!("p_* = {} outside [p, ∞)", self.p_star));
        }
        if !(self.kappa > 0.0) {
            return bad(format!("κ = {} is not positive", self.kappa));
        }
        let shadow = self
            .root
            .shadow(depth)
            .map_err(|_| Error::InvalidDecomposition(format!("root {} below depth {depth}", self.root)))?;
        let mut seen = BTreeSet::new();
        for (k, part) in self.parts.iter().enumerate() {
            if part.is_empty() {
                return bad(format!("part {k} is empty"));
            }
            for i in part.iter() {
                if !shadow.contains(i) {
                    return bad(format!("{i} in part {k} is not inside {} at depth {depth}", self.root));
                }
                if !seen.insert(*i) {
                    return bad(format!("{i} appears in more than one part"));
                }
            }
        }
        if seen.len() != shadow.len() {
            let missing = shadow.iter().find(|i| !seen.contains(*i)).expect("size mismatch");
            return bad(format!("{missing} is not covered"));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// The single-part decomposition `K_1 = {I ⊆ J_0}` used when `τ` satisfies Semenov's condition.
pub fn semenov_decomposition(
    root: DyadicInterval,
    depth: u32,
    p: f64,
    p_star: f64,
    kappa: f64,
) -> Result<CDecomposition> {
    Ok(CDecomposition {
        root,
        parts: vec![root.shadow(depth)?],
        p,
        p_star,
        kappa,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct C1Report {
    /// `Σ_i |K_i^*|`.
    pub lhs: f64,
    /// `κ |J_0|`.
    pub rhs: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct C2Report {
    pub betas: Vec<f64>,
    /// Whether each `β_i` was computed exactly (constant weights on the part).
    pub beta_exact: Vec<bool>,
    pub image_measures: Vec<f64>,
    /// `Σ_i β_i |τ(K_i)^*|`.
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct C3Report {
    pub samples: usize,
    /// Largest `(Σ_i ‖a_i‖_{p_*}^{p_*})^{1/p_*} / ‖a‖_{p_*}` seen.
    pub max_ratio: f64,
    pub kappa: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionCReport {
    pub root: DyadicInterval,
    pub c1: C1Report,
    pub c2: C2Report,
    pub c3: C3Report,
    pub pass: bool,
}

fn restrict(f: &HaarExpansion<f64>, part: &IntervalCollection) -> HaarExpansion<f64> {
    let mut g = HaarExpansion::zeros(f.space(), f.depth());
    for i in part.iter() {
        g.set_coeff(*i, f.coeff(*i).expect("inside depth")).expect("shape");
    }
    g
}

/// Checks (C1) exactly, (C2) with `β_i` exact for constant weights and searched otherwise,
/// and (C3) on `c3_samples` random coefficient tuples.
pub fn check_condition_c(
    dec: &CDecomposition,
    tau: &RearrangementMap,
    gamma: &[f64],
    space: SpaceSpec,
    budget: &SearchBudget,
    c3_samples: usize,
) -> Result<ConditionCReport> {
    let depth = tau.source_depth();
    dec.validate(depth)?;
    if gamma.len() != crate::dyadic::count_up_to(depth) || gamma.iter().any(|g| !(*g > 0.0)) {
        return Err(Error::InvalidDecomposition(
            "weights must be positive, one per interval".into(),
        ));
    }
    let j0 = dec.root.measure().to_f64();
    let rhs = dec.kappa * j0;

    let c1_lhs: Dyadic = dec
        .parts
        .iter()
        .map(|k| k.union_measure())
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum();
    let c1_lhs = c1_lhs.to_f64();
    let c1 = C1Report {
        lhs: c1_lhs,
        rhs,
        pass: c1_lhs <= rhs + EXACT_TOL,
    };

    let q = dec.p / (dec.p - 1.0);
    let mut betas = Vec::new();
    let mut beta_exact = Vec::new();
    let mut image_measures = Vec::new();
    for part in &dec.parts {
        let weights: Vec<f64> = part.iter().map(|i| gamma[i.position()]).collect();
        let constant = weights.iter().all(|w| *w == weights[0]);
        let beta = if constant {
            weights[0]
        } else {
            let w: Vec<f64> = gamma.iter().map(|g| g.powf(1.0 / q)).collect();
            let op = CoefficientOperator::<f64>::diagonal(space, depth, &w)?;
            let search = NormSearch {
                p: dec.p,
                budget: *budget,
                support: Some(part.to_vec()),
            };
            operator_norm_search(&op, &search)?.value.powf(q)
        };
        betas.push(beta);
        beta_exact.push(constant);
        image_measures.push(tau.image(part)?.union_measure()?.to_f64());
    }
    let c2_lhs: f64 = betas.iter().zip(&image_measures).map(|(b, m)| b * m).sum();
    let c2 = C2Report {
        pass: c2_lhs <= rhs + EXACT_TOL,
        betas,
        beta_exact,
        image_measures,
        lhs: c2_lhs,
        rhs,
    };

    let shadow = dec.root.shadow(depth)?;
    let mut max_ratio: f64 = 0.0;
    for s in 0..c3_samples {
        let mut rng = rng_for(budget.seed, 0xC3_0000 + s as u64);
        let full: HaarExpansion<f64> = random_expansion(&mut rng, space, depth, false);
        let a = restrict(&full, &shadow);
        let whole = a.lp_norm(dec.p_star)?;
        let parts: f64 = dec
            .parts
            .iter()
            .map(|k| restrict(&a, k).lp_norm(dec.p_star).map(|v| v.powf(dec.p_star)))
            .sum::<Result<f64>>()?;
        max_ratio = max_ratio.max(parts.powf(1.0 / dec.p_star) / whole);
    }
    let c3 = C3Report {
        samples: c3_samples,
        max_ratio,
        kappa: dec.kappa,
        pass: max_ratio <= dec.kappa + EXACT_TOL,
    };
    Ok(ConditionCReport {
        root: dec.root,
        pass: c1.pass && c2.pass && c3.pass,
        c1,
        c2,
        c3,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rearrangement::{identity, parity_shift};

    fn iv(k: u32, i: u64) -> DyadicInterval {
        DyadicInterval::new(k, i).unwrap()
    }

    #[test]
    fn semenov_case_passes() {
        let tau = parity_shift(4);
        let gamma = vec![1.0; 31];
        let b = SearchBudget::default();
        for j in [iv(0, 0), iv(1, 0), iv(2, 3), iv(4, 5)] {
            let dec = semenov_decomposition(j, 4, 2.0, 3.0, 2.0).unwrap();
            let r = check_condition_c(&dec, &tau, &gamma, SpaceSpec::Scalar, &b, 20).unwrap();
            assert!(r.pass, "{r:?}");
            assert_eq!(r.c2.betas, vec![1.0]);
        }
        let dec = semenov_decomposition(iv(0, 0), 3, 1.5, 1.5, 1.0).unwrap();
        let r = check_condition_c(&dec, &identity(3), &[1.0; 15], SpaceSpec::lp(1.5, 2).unwrap(), &b, 20).unwrap();
        assert!(r.pass);
    }

    #[test]
    fn malformed_decompositions() {
        let root = iv(1, 0);
        let mut dec = semenov_decomposition(root, 2, 2.0, 2.0, 1.0).unwrap();
        dec.parts.push([iv(2, 0)].into_iter().collect());
        assert!(matches!(dec.validate(2), Err(Error::InvalidDecomposition(_))));
        dec.parts = vec![[iv(1, 0), iv(2, 0)].into_iter().collect()];
        assert!(dec.validate(2).is_err());
        dec.parts = vec![
            [iv(1, 0), iv(2, 0)].into_iter().collect(),
            [iv(2, 1)].into_iter().collect(),
        ];
        assert!(dec.validate(2).is_ok());
        dec.p_star = 1.5;
        assert!(dec.validate(2).is_err());
    }

    #[test]
    fn json_format() {
        let dec =
            CDecomposition::from_json(r#"{"root":"1:0","parts":[["1:0"],["2:0","2:1"]],"p":2,"p_star":2,"kappa":2}"#)
                .unwrap();
        assert!(dec.validate(2).is_ok());
        assert_eq!(dec.parts.len(), 2);
        let again = CDecomposition::from_json(&dec.to_json().unwrap()).unwrap();
        assert_eq!(again, dec);
    }

    #[test]
    fn splitting_levels_costs_in_c3() {
        // Two parts: the root alone and everything below it.
        let tau = identity(3);
        let root = iv(0, 0);
        let below: IntervalCollection = root
            .shadow(3)
            .unwrap()
            .iter()
            .filter(|i| i.level() > 0)
            .copied()
            .collect();
        let dec = CDecomposition {
            root,
            parts: vec![[root].into_iter().collect(), below],
            p: 2.0,
            p_star: 2.0,
            kappa: 2.0,
        };
        let r = check_condition_c(&dec, &tau, &[1.0; 15], SpaceSpec::Scalar, &SearchBudget::default(), 50).unwrap();
        assert_eq!(r.c1.lhs, 2.0);
        // Orthogonality: at p_* = 2 the split is an equality.
        assert!((r.c3.max_ratio - 1.0).abs() < 1e-12);
        assert!(r.pass);
    }
}
