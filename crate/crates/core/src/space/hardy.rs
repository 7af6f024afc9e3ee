use serde::{Deserialize, Serialize};

use crate::dyadic::{DyadicInterval, IntervalCollection};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::HaarExpansion;

/// A stopping time on the grid of `2^{depth+1}` cells; `None` stands for `∞`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "StoppingFile", into = "StoppingFile")]
pub struct StoppingTimeGrid {
    depth: u32,
    values: Vec<Option<u32>>,
}

#[derive(Serialize, Deserialize)]
struct StoppingFile {
    depth: u32,
    values: Vec<Option<u32>>,
}

impl TryFrom<StoppingFile> for StoppingTimeGrid {
    type Error = Error;
    fn try_from(f: StoppingFile) -> Result<Self> {
        StoppingTimeGrid::new(f.depth, f.values)
    }
}

impl From<StoppingTimeGrid> for StoppingFile {
    fn from(g: StoppingTimeGrid) -> Self {
        StoppingFile {
            depth: g.depth,
            values: g.values,
        }
    }
}

impl StoppingTimeGrid {
    /// Checks values lie in `0..=depth+1` and that `{ν ≤ n}` is `F_n`-measurable for all `n`.
    pub fn new(depth: u32, values: Vec<Option<u32>>) -> Result<Self> {
        let fine = depth + 1;
        if values.len() != 1usize << fine {
            return Err(Error::InvalidStoppingTime(format!(
                "{} cells given, {} expected",
                values.len(),
                1usize << fine
            )));
        }
        for (c, v) in values.iter().enumerate() {
            let Some(m) = *v else { continue };
            if m > fine {
                return Err(Error::InvalidStoppingTime(format!(
                    "value {m} at cell {c} beyond {fine}"
                )));
            }
            // On the level-m interval around c, ν must equal m everywhere.
            let block = 1usize << (fine - m);
            let start = c / block * block;
            if values[start..start + block].iter().any(|w| *w != Some(m)) {
                return Err(Error::InvalidStoppingTime(format!(
                    "{{ν ≤ {m}}} is not a union of level-{m} intervals near cell {c}"
                )));
            }
        }
        Ok(StoppingTimeGrid { depth, values })
    }

    /// `ν ≡ ∞`.
    pub fn never(depth: u32) -> Self {
        StoppingTimeGrid {
            depth,
            values: vec![None; 1usize << (depth + 1)],
        }
    }

    /// `ν = level(I)` on each `I` of a pairwise disjoint collection, `∞` elsewhere.
    pub fn on_intervals(depth: u32, intervals: &IntervalCollection) -> Result<Self> {
        let fine = depth + 1;
        let mut values = vec![None; 1usize << fine];
        for i in intervals.iter() {
            if i.level() > fine {
                return Err(Error::InvalidStoppingTime(format!("{i} finer than the grid")));
            }
            for c in i.cells(fine) {
                if values[c].is_some() {
                    return Err(Error::InvalidStoppingTime(format!("{i} overlaps another interval")));
                }
                values[c] = Some(i.level());
            }
        }
        Ok(StoppingTimeGrid { depth, values })
    }

    pub fn on_interval(depth: u32, interval: DyadicInterval) -> Result<Self> {
        Self::on_intervals(depth, &std::iter::once(interval).collect())
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn values(&self) -> &[Option<u32>] {
        &self.values
    }

    /// `P(ν < ∞)`.
    pub fn finite_measure(&self) -> f64 {
        self.values.iter().filter(|v| v.is_some()).count() as f64 / self.values.len() as f64
    }
}

/// A candidate atom: a function together with its controlling stopping time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct Atom<T> {
    pub expansion: HaarExpansion<T>,
    pub nu: StoppingTimeGrid,
}

impl<T: Scalar> Atom<T> {
    pub fn new(expansion: HaarExpansion<T>, nu: StoppingTimeGrid) -> Result<Self> {
        if expansion.depth() != nu.depth() {
            return Err(Error::ShapeMismatch(format!(
                "expansion depth {} with stopping time depth {}",
                expansion.depth(),
                nu.depth()
            )));
        }
        Ok(Atom { expansion, nu })
    }
}

/// Outcome of [`validate_atom`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum AtomCheck {
    Pass,
    /// `E(a|F_n)` does not vanish at `cell` although `n ≤ ν(cell)`.
    ClauseA {
        n: u32,
        cell: usize,
        value: f64,
    },
    /// `‖a‖_∞ · P(ν < ∞)` exceeds one.
    ClauseB {
        product: f64,
    },
}

impl AtomCheck {
    pub fn passed(&self) -> bool {
        matches!(self, AtomCheck::Pass)
    }
}

fn tolerance<T: Scalar>(scale: T) -> T {
    T::epsilon() * T::of(1e4) * T::one().max(scale)
}

pub fn validate_atom<T: Scalar>(atom: &Atom<T>) -> AtomCheck {
    let f = &atom.expansion;
    let space = f.space();
    let sup = f.synthesize().sup_norm();
    let tol = tolerance(sup);
    for n in 0..=f.depth() + 1 {
        let proj = f.martingale_projection(n).expect("level within range");
        for (c, nu) in atom.nu.values().iter().enumerate() {
            if nu.is_some_and(|m| n > m) {
                continue;
            }
            let v = space.norm(proj.cell(c));
            if v > tol {
                return AtomCheck::ClauseA {
                    n,
                    cell: c,
                    value: v.as_f64(),
                };
            }
        }
    }
    let product = sup * T::of(atom.nu.finite_measure());
    if product > T::one() + tol {
        return AtomCheck::ClauseB {
            product: product.as_f64(),
        };
    }
    AtomCheck::Pass
}

/// `Σ |μ_k|` after checking every atom and that `Σ μ_k a_k = f` on the grid.
pub fn h1at_upper_bound<T: Scalar>(f: &HaarExpansion<T>, decomposition: &[(T, Atom<T>)]) -> Result<T> {
    let mut sum = HaarExpansion::zeros(f.space(), f.depth());
    let mut total = T::zero();
    for (index, (mu, atom)) in decomposition.iter().enumerate() {
        let a = &atom.expansion;
        if a.depth() != f.depth() || a.dim() != f.dim() {
            return Err(Error::InvalidAtom {
                index,
                reason: "shape differs from the decomposed function".into(),
            });
        }
        let check = validate_atom(atom);
        if !check.passed() {
            return Err(Error::InvalidAtom {
                index,
                reason: format!("{check:?}"),
            });
        }
        sum.add_scaled(*mu, a)?;
        total = total + mu.abs();
    }
    let target = f.synthesize();
    let diff = sum.synthesize().max_abs_diff(&target)?;
    if diff > tolerance(target.sup_norm().max(total)) {
        return Err(Error::DecompositionMismatch(diff.as_f64()));
    }
    Ok(total)
}
