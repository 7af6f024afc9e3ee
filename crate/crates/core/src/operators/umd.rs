use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dyadic::count_up_to;
use crate::error::{Error, Result};
use crate::optimize::{maximize, Objective, SearchBudget};
use crate::sampling::rng_for;
use crate::scalar::Scalar;
use crate::space::{check_exponent, SpaceSpec};

use super::norm::{operator_norm_exact_small, operator_norm_search, EstimateKind, NormEstimate, NormSearch};
use super::{CoefficientOperator, SignPattern};

/// Largest `|D_0^N|` for exhaustive sign enumeration.
pub const DEFAULT_UMD_CAP: usize = 7;
/// Largest `n` for which all `2^n` Rademacher sign vectors are enumerated.
pub const TYPE_EXACT_MAX: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum UmdMode {
    /// All `±1` patterns with `θ_{[0,1)} = +1`; `cap` bounds the number of intervals.
    Exact { cap: usize },
    /// `samples` random patterns together with `θ ≡ 1`.
    Random { samples: usize, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct UmdEstimate<T> {
    pub estimate: NormEstimate<T>,
    pub signs: SignPattern,
    pub patterns: usize,
}

fn transform_norm<T: Scalar>(
    space: SpaceSpec,
    p: f64,
    theta: &SignPattern,
    budget: &SearchBudget,
) -> Result<NormEstimate<T>> {
    let op = CoefficientOperator::martingale_transform(theta, space);
    if p == 2.0 && space.is_hilbert() {
        operator_norm_exact_small(&op, p, budget)
    } else {
        operator_norm_search(&op, &NormSearch::new(p, *budget))
    }
}

/// Depth-`N` truncated `UMD_p(X)`: the largest norm of a `±1` Haar multiplier on `D_0^N`.
pub fn umd_constant<T: Scalar>(
    space: SpaceSpec,
    p: f64,
    depth: u32,
    mode: UmdMode,
    budget: &SearchBudget,
) -> Result<UmdEstimate<T>> {
    check_exponent(p)?;
    budget.check()?;
    let count = count_up_to(depth);
    let patterns: Vec<SignPattern> = match mode {
        UmdMode::Exact { cap } => {
            if count > cap || count > 30 {
                return Err(Error::TooLarge {
                    count,
                    cap: cap.min(30),
                });
            }
            // θ and -θ have the same norm, so the root sign is fixed.
            (0..1u64 << (count - 1))
                .map(|m| SignPattern::from_mask(depth, m << 1))
                .collect()
        }
        UmdMode::Random { samples, seed } => {
            if samples == 0 {
                return Err(Error::InvalidBudget);
            }
            let mut rng = rng_for(seed, u64::MAX);
            let mut v = vec![SignPattern::constant(depth, 1.0)?];
            for _ in 0..samples {
                let vals = (0..count)
                    .map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 })
                    .collect();
                v.push(SignPattern::new(depth, vals)?);
            }
            v
        }
    };
    let mut best: Option<(NormEstimate<T>, SignPattern)> = None;
    let mut iterations = 0;
    for theta in &patterns {
        let est = transform_norm::<T>(space, p, theta, budget)?;
        iterations += est.iterations;
        if best.as_ref().is_none_or(|(b, _)| est.value > b.value) {
            best = Some((est, theta.clone()));
        }
    }
    let (mut estimate, signs) = best.expect("at least one pattern");
    estimate.iterations = iterations;
    if estimate.kind == EstimateKind::Exact && matches!(mode, UmdMode::Random { .. }) {
        estimate.kind = EstimateKind::LowerBound;
    }
    Ok(UmdEstimate {
        estimate,
        signs,
        patterns: patterns.len(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum TypeMode {
    /// Exact up to [`TYPE_EXACT_MAX`] vectors, sampled with 4096 sign vectors beyond.
    Auto {
        seed: u64,
    },
    Exact,
    Sampled {
        samples: usize,
        seed: u64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct TypeEstimate<T> {
    pub value: f64,
    pub kind: EstimateKind,
    pub exact_average: bool,
    pub restarts: usize,
    pub seed: u64,
    pub vectors: Vec<Vec<T>>,
}

fn all_signs(n: usize) -> Vec<Vec<i8>> {
    (0..1u64 << n)
        .map(|m| (0..n).map(|k| if m >> k & 1 == 1 { -1 } else { 1 }).collect())
        .collect()
}

/// `(E‖Σ r_k a_k‖^p)^{1/p} / (Σ ‖a_k‖^p)^{1/p}`, averaging over `signs` or over all
/// `2^n` sign vectors.
pub fn type_ratio<T: Scalar>(space: SpaceSpec, p: f64, vectors: &[Vec<T>], signs: Option<&[Vec<i8>]>) -> Result<T> {
    check_exponent(p)?;
    if vectors.is_empty() {
        return Err(Error::EmptyCollection);
    }
    if let Some(v) = vectors.iter().find(|v| v.len() != space.dim()) {
        return Err(Error::ShapeMismatch(format!("vector of length {} in {space}", v.len())));
    }
    let owned;
    let signs = match signs {
        Some(s) => s,
        None => {
            if vectors.len() > 24 {
                return Err(Error::TooLarge {
                    count: vectors.len(),
                    cap: 24,
                });
            }
            owned = all_signs(vectors.len());
            &owned
        }
    };
    let obj = TypeObjective {
        space,
        p: T::of(p),
        n: vectors.len(),
        signs,
    };
    let flat: Vec<T> = vectors.concat();
    Ok((obj.value(&flat) * T::of(p)).exp().powf(T::of(p).recip()))
}

struct TypeObjective<'a, T> {
    space: SpaceSpec,
    p: T,
    n: usize,
    signs: &'a [Vec<i8>],
}

impl<T: Scalar> TypeObjective<'_, T> {
    fn eval(&self, x: &[T], grad: Option<&mut [T]>) -> T {
        let d = self.space.dim();
        let mut v = vec![T::zero(); d];
        let mut gv = vec![T::zero(); d];
        let mut num = T::zero();
        let mut gnum = vec![T::zero(); x.len()];
        let want = grad.is_some();
        for s in self.signs {
            v.iter_mut().for_each(|e| *e = T::zero());
            for (k, sk) in s.iter().enumerate() {
                let sk = T::of(*sk as f64);
                for j in 0..d {
                    v[j] = v[j] + sk * x[k * d + j];
                }
            }
            if want {
                num = num + self.space.norm_pow_grad(&v, self.p, &mut gv);
                for (k, sk) in s.iter().enumerate() {
                    let sk = T::of(*sk as f64);
                    for j in 0..d {
                        gnum[k * d + j] = gnum[k * d + j] + sk * gv[j];
                    }
                }
            } else {
                num = num + self.space.norm(&v).powf(self.p);
            }
        }
        let mut den = T::zero();
        let mut gden = vec![T::zero(); x.len()];
        for k in 0..self.n {
            let a = &x[k * d..(k + 1) * d];
            if want {
                den = den + self.space.norm_pow_grad(a, self.p, &mut gden[k * d..(k + 1) * d]);
            } else {
                den = den + self.space.norm(a).powf(self.p);
            }
        }
        let m = T::of(self.signs.len() as f64);
        if let Some(g) = grad {
            for i in 0..x.len() {
                g[i] = (gnum[i] / num - gden[i] / den) / self.p;
            }
        }
        ((num / m).ln() - den.ln()) / self.p
    }
}

impl<T: Scalar> Objective<T> for TypeObjective<'_, T> {
    fn dim(&self) -> usize {
        self.n * self.space.dim()
    }

    fn value(&self, x: &[T]) -> T {
        self.eval(x, None)
    }

    fn value_grad(&self, x: &[T], grad: &mut [T]) -> T {
        self.eval(x, Some(grad))
    }
}

/// Lower bound for the type-`p` constant of `X` tested on `n` vectors.
pub fn type_constant<T: Scalar>(
    space: SpaceSpec,
    p: f64,
    n: usize,
    mode: TypeMode,
    budget: &SearchBudget,
) -> Result<TypeEstimate<T>> {
    check_exponent(p)?;
    budget.check()?;
    if n == 0 {
        return Err(Error::EmptyCollection);
    }
    let (signs, exact, seed) = match mode {
        TypeMode::Exact if n > TYPE_EXACT_MAX => {
            return Err(Error::TooLarge {
                count: n,
                cap: TYPE_EXACT_MAX,
            });
        }
        TypeMode::Exact => (all_signs(n), true, budget.seed),
        TypeMode::Auto { seed } if n <= TYPE_EXACT_MAX => (all_signs(n), true, seed),
        TypeMode::Auto { seed } => (sample_signs(n, 4096, seed), false, seed),
        TypeMode::Sampled { samples, seed } => {
            if samples == 0 {
                return Err(Error::InvalidBudget);
            }
            (sample_signs(n, samples, seed), false, seed)
        }
    };
    let d = space.dim();
    let obj = TypeObjective {
        space,
        p: T::of(p),
        n,
        signs: &signs,
    };
    let mut spread = vec![T::zero(); n * d];
    let mut equal = vec![T::zero(); n * d];
    for k in 0..n {
        spread[k * d + k % d] = T::one();
        equal[k * d] = T::one();
    }
    let best = maximize(&obj, budget, &[spread, equal])?;
    let vectors: Vec<Vec<T>> = best.point.chunks(d).map(|c| c.to_vec()).collect();
    let value = type_ratio(space, p, &vectors, Some(&signs))?.as_f64();
    Ok(TypeEstimate {
        value,
        kind: EstimateKind::LowerBound,
        exact_average: exact,
        restarts: budget.restarts + 2,
        seed,
        vectors,
    })
}

fn sample_signs(n: usize, samples: usize, seed: u64) -> Vec<Vec<i8>> {
    let mut rng = rng_for(seed, u64::MAX - 1);
    (0..samples)
        .map(|_| (0..n).map(|_| if rng.random_bool(0.5) { 1 } else { -1 }).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SearchBudget {
        SearchBudget {
            restarts: 8,
            ..Default::default()
        }
    }

    #[test]
    fn scalar_p2_umd_is_one() {
        for depth in 0..3 {
            let u = umd_constant::<f64>(SpaceSpec::Scalar, 2.0, depth, UmdMode::Exact { cap: 7 }, &small()).unwrap();
            assert!((u.estimate.value - 1.0).abs() < 1e-12);
            assert_eq!(u.estimate.kind, EstimateKind::Exact);
        }
        assert!(matches!(
            umd_constant::<f64>(SpaceSpec::Scalar, 2.0, 3, UmdMode::Exact { cap: 7 }, &small()),
            Err(Error::TooLarge { count: 15, cap: 7 })
        ));
    }

    #[test]
    fn type_ratios() {
        let ones: Vec<Vec<f64>> = vec![vec![1.0]; 5];
        assert!((type_ratio(SpaceSpec::Scalar, 2.0, &ones, None).unwrap() - 1.0).abs() < 1e-12);
        let l1 = SpaceSpec::lp(1.0, 4).unwrap();
        let disjoint: Vec<Vec<f64>> = vec![
            vec![1.0, 0.0, 0.0, 0.0],
            vec![0.0, -2.0, 0.5, 0.0],
            vec![0.0, 0.0, 0.0, 3.0],
        ];
        assert!((type_ratio(l1, 1.0, &disjoint, None).unwrap() - 1.0).abs() < 1e-12);
        let n = 6;
        let lp = SpaceSpec::lp(1.3, n).unwrap();
        let basis: Vec<Vec<f64>> = (0..n)
            .map(|k| (0..n).map(|j| if j == k { 1.0 } else { 0.0 }).collect())
            .collect();
        let q = 2.0;
        let r = type_ratio(lp, q, &basis, None).unwrap();
        assert!((r - (n as f64).powf(1.0 / 1.3 - 1.0 / q)).abs() < 1e-12);
    }

    #[test]
    fn type_search_finds_basis_witness() {
        let n = 5;
        let lp = SpaceSpec::lp(1.2, n).unwrap();
        let t = type_constant::<f64>(lp, 2.0, n, TypeMode::Auto { seed: 0 }, &small()).unwrap();
        assert!(t.exact_average);
        assert!(t.value >= (n as f64).powf(1.0 / 1.2 - 0.5) - 1e-9, "{}", t.value);
    }
}
