//! Multi-start projected gradient ascent for scale-invariant objectives.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling::{gaussian, rng_for};
use crate::scalar::Scalar;

/// A function on `R^dim \ {0}` invariant under positive scaling, typically a log-ratio.
pub trait Objective<T: Scalar>: Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[T]) -> T;

    /// Value at `x`, writing the gradient into `grad`.
    fn value_grad(&self, x: &[T], grad: &mut [T]) -> T;
}

/// Central differences around a value-only objective.
pub struct FiniteDifference<F> {
    pub dim: usize,
    pub step: f64,
    pub f: F,
}

impl<T: Scalar, F: Fn(&[T]) -> T + Sync> Objective<T> for FiniteDifference<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[T]) -> T {
        (self.f)(x)
    }

    fn value_grad(&self, x: &[T], grad: &mut [T]) -> T {
        let mut y = x.to_vec();
        for i in 0..x.len() {
            let h = T::of(self.step) * T::one().max(x[i].abs());
            y[i] = x[i] + h;
            let up = (self.f)(&y);
            y[i] = x[i] - h;
            let down = (self.f)(&y);
            y[i] = x[i];
            grad[i] = (up - down) / (h + h);
        }
        (self.f)(x)
    }
}

/// Search effort. `restarts` random starts run in parallel; each start is derived
/// from `(seed, restart)` alone.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchBudget {
    pub restarts: usize,
    pub max_iters: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            restarts: 64,
            max_iters: 400,
            tol: 1e-12,
            seed: 0,
        }
    }
}

impl SearchBudget {
    pub fn with_seed(seed: u64) -> Self {
        SearchBudget {
            seed,
            ..Self::default()
        }
    }

    pub fn check(&self) -> Result<()> {
        if self.restarts == 0 || self.max_iters == 0 {
            return Err(Error::InvalidBudget);
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct AscentResult<T> {
    pub value: T,
    pub point: Vec<T>,
    pub iterations: usize,
}

fn normalize<T: Scalar>(x: &mut [T]) -> bool {
    let n = x.iter().map(|v| *v * *v).sum::<T>().sqrt();
    if !(n > T::zero()) || !n.is_finite() {
        return false;
    }
    x.iter_mut().for_each(|v| *v = *v / n);
    true
}

/// Armijo-controlled ascent from `x` on the Euclidean unit sphere.
pub fn ascend<T: Scalar, O: Objective<T> + ?Sized>(
    obj: &O,
    mut x: Vec<T>,
    max_iters: usize,
    tol: f64,
) -> AscentResult<T> {
    let n = x.len();
    if !normalize(&mut x) {
        return AscentResult {
            value: T::neg_infinity(),
            point: x,
            iterations: 0,
        };
    }
    let mut grad = vec![T::zero(); n];
    let mut value = obj.value_grad(&x, &mut grad);
    let mut eta = T::one();
    let armijo = T::of(1e-4);
    let tol = T::of(tol);
    let mut iterations = 0;
    let mut candidate = vec![T::zero(); n];
    for _ in 0..max_iters {
        iterations += 1;
        // Tangential component only; the objective is constant along rays.
        let radial: T = grad.iter().zip(&x).map(|(g, v)| *g * *v).sum();
        grad.iter_mut().zip(&x).for_each(|(g, v)| *g = *g - radial * *v);
        let g2: T = grad.iter().map(|g| *g * *g).sum();
        if !(g2 > T::zero()) || !g2.is_finite() {
            break;
        }
        let mut accepted = None;
        while eta > T::of(1e-14) {
            candidate
                .iter_mut()
                .zip(x.iter().zip(&grad))
                .for_each(|(c, (v, g))| *c = *v + eta * *g);
            if normalize(&mut candidate) {
                let v = obj.value(&candidate);
                if v.is_finite() && v >= value + armijo * eta * g2 {
                    accepted = Some(v);
                    break;
                }
            }
            eta = eta * T::of(0.5);
        }
        let Some(v) = accepted else { break };
        let gain = v - value;
        std::mem::swap(&mut x, &mut candidate);
        value = obj.value_grad(&x, &mut grad);
        eta = eta * T::of(2.0);
        if gain <= tol * T::one().max(value.abs()) {
            break;
        }
    }
    AscentResult {
        value,
        point: x,
        iterations,
    }
}

/// Best of `budget.restarts` Gaussian starts plus the supplied `starts`.
pub fn maximize<T: Scalar, O: Objective<T>>(
    obj: &O,
    budget: &SearchBudget,
    starts: &[Vec<T>],
) -> Result<AscentResult<T>> {
    budget.check()?;
    let dim = obj.dim();
    let random = (0..budget.restarts).into_par_iter().map(|r| {
        let mut rng = rng_for(budget.seed, r as u64);
        let x0: Vec<T> = (0..dim).map(|_| gaussian(&mut rng)).collect();
        ascend(obj, x0, budget.max_iters, budget.tol)
    });
    let seeded = starts
        .par_iter()
        .map(|s| ascend(obj, s.clone(), budget.max_iters, budget.tol));
    let mut runs: Vec<AscentResult<T>> = random.chain(seeded).collect();
    let iterations = runs.iter().map(|r| r.iterations).sum();
    // Ties keep the lowest restart index so the result does not depend on scheduling.
    let mut best = 0;
    for (i, r) in runs.iter().enumerate() {
        if r.value > runs[best].value {
            best = i;
        }
    }
    let mut out = runs.swap_remove(best);
    out.iterations = iterations;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Rayleigh(Vec<f64>);

    impl Objective<f64> for Rayleigh {
        fn dim(&self) -> usize {
            self.0.len()
        }
        fn value(&self, x: &[f64]) -> f64 {
            let num: f64 = x.iter().zip(&self.0).map(|(v, w)| w * v * v).sum();
            let den: f64 = x.iter().map(|v| v * v).sum();
            0.5 * (num / den).ln()
        }
        fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
            let num: f64 = x.iter().zip(&self.0).map(|(v, w)| w * v * v).sum();
            let den: f64 = x.iter().map(|v| v * v).sum();
            for i in 0..x.len() {
                grad[i] = self.0[i] * x[i] / num - x[i] / den;
            }
            0.5 * (num / den).ln()
        }
    }

    #[test]
    fn finds_top_eigenvalue() {
        let obj = Rayleigh(vec![1.0, 4.0, 2.0, 9.0, 0.5]);
        let r = maximize(&obj, &SearchBudget::with_seed(1), &[]).unwrap();
        assert!((r.value.exp() - 3.0).abs() < 1e-6, "{}", r.value.exp());
    }

    #[test]
    fn finite_differences_agree() {
        let w = vec![1.0, 4.0, 2.0];
        let exact = Rayleigh(w.clone());
        let fd = FiniteDifference {
            dim: 3,
            step: 1e-6,
            f: |x: &[f64]| Rayleigh(w.clone()).value(x),
        };
        let x = [0.3, -0.2, 0.9];
        let (mut g1, mut g2) = ([0.0; 3], [0.0; 3]);
        exact.value_grad(&x, &mut g1);
        fd.value_grad(&x, &mut g2);
        for i in 0..3 {
            assert!((g1[i] - g2[i]).abs() < 1e-6);
        }
    }

    #[test]
    fn zero_budget_rejected() {
        let obj = Rayleigh(vec![1.0]);
        let b = SearchBudget {
            restarts: 0,
            ..SearchBudget::default()
        };
        assert!(matches!(maximize(&obj, &b, &[]), Err(Error::InvalidBudget)));
    }
}
