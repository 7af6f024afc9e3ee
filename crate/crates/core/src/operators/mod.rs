//! Coefficientwise linear maps on Haar expansions and estimators for their
//! operator norms, UMD constants and type constants.

mod norm;
mod umd;

use serde::{Deserialize, Serialize};

use crate::dyadic::{count_up_to, DyadicInterval};
use crate::error::{Error, Result};
use crate::rearrangement::RearrangementMap;
use crate::scalar::Scalar;
use crate::space::{HaarExpansion, SpaceSpec};

pub use norm::{
    gradient_check, operator_norm_exact_small, operator_norm_search, rayleigh_ratio, EstimateKind, NormEstimate,
    NormSearch, EXACT_DENSE_CAP,
};
pub use umd::{
    type_constant, type_ratio, umd_constant, TypeEstimate, TypeMode, UmdEstimate, UmdMode, DEFAULT_UMD_CAP,
    TYPE_EXACT_MAX,
};

/// A row-major `rows × cols` matrix, acting on coefficient vectors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols || rows == 0 || cols == 0 {
            return Err(Error::InvalidMap(format!(
                "{} entries for a {rows}×{cols} matrix",
                data.len()
            )));
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![T::zero(); n * n];
        (0..n).for_each(|i| data[i * n + i] = T::one());
        DenseMatrix { rows: n, cols: n, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    fn mul_into(&self, x: &[T], scale: T, out: &mut [T]) {
        for (r, o) in out.iter_mut().enumerate() {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            *o = *o + scale * row.iter().zip(x).map(|(a, b)| *a * *b).sum::<T>();
        }
    }

    fn mul_transpose_into(&self, y: &[T], scale: T, out: &mut [T]) {
        for (r, yr) in y.iter().enumerate() {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            for (o, a) in out.iter_mut().zip(row) {
                *o = *o + scale * *a * *yr;
            }
        }
    }
}

/// Signs or multipliers `θ_I`, one per interval of `D_0^depth`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignPattern {
    depth: u32,
    values: Vec<f64>,
}

impl SignPattern {
    /// Values must lie in `[-1, 1]` and cover `D_0^depth` breadth-first.
    pub fn new(depth: u32, values: Vec<f64>) -> Result<Self> {
        if values.len() != count_up_to(depth) {
            return Err(Error::ShapeMismatch(format!(
                "{} multipliers for {} intervals",
                values.len(),
                count_up_to(depth)
            )));
        }
        if let Some(v) = values.iter().find(|v| !(v.abs() <= 1.0)) {
            return Err(Error::ShapeMismatch(format!("multiplier {v} outside [-1, 1]")));
        }
        Ok(SignPattern { depth, values })
    }

    pub fn constant(depth: u32, value: f64) -> Result<Self> {
        Self::new(depth, vec![value; count_up_to(depth)])
    }

    /// `θ_I = θ_k` for every `I` of level `k`.
    pub fn by_level(levels: &[f64]) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::ShapeMismatch("need at least one level".into()));
        }
        let depth = levels.len() as u32 - 1;
        let values = (0..count_up_to(depth))
            .map(|p| levels[DyadicInterval::from_position(p).level() as usize])
            .collect();
        Self::new(depth, values)
    }

    /// Sign pattern from the bits of `mask`: bit `p` set means `θ = -1` at position `p`.
    pub fn from_mask(depth: u32, mask: u64) -> Self {
        let values = (0..count_up_to(depth))
            .map(|p| if mask >> p & 1 == 1 { -1.0 } else { 1.0 })
            .collect();
        SignPattern { depth, values }
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: DyadicInterval) -> Option<f64> {
        self.values.get(i.position()).copied()
    }
}

/// `Σ a_I h_I ↦ Σ w_I S a_I h_{σ(I)}`: each source coefficient is moved to one target
/// position, scaled, and optionally mapped through a matrix `S: X → Y`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientOperator<T> {
    source_space: SpaceSpec,
    target_space: SpaceSpec,
    source_depth: u32,
    target_depth: u32,
    target: Vec<usize>,
    weight: Vec<T>,
    matrix: Option<DenseMatrix<T>>,
}

impl<T: Scalar> CoefficientOperator<T> {
    pub fn identity(space: SpaceSpec, depth: u32) -> Self {
        let n = count_up_to(depth);
        CoefficientOperator {
            source_space: space,
            target_space: space,
            source_depth: depth,
            target_depth: depth,
            target: (0..n).collect(),
            weight: vec![T::one(); n],
            matrix: None,
        }
    }

    /// `Id_X ⊗ T_{p,τ}`: weight `γ_I^{1/p}` with `γ_I = |I| / |τ(I)|`.
    pub fn rearrangement(tau: &RearrangementMap, p: f64, space: SpaceSpec) -> Result<Self> {
        crate::space::check_exponent(p)?;
        let mut target = Vec::with_capacity(count_up_to(tau.source_depth()));
        let mut weight = Vec::with_capacity(target.capacity());
        for (i, t) in tau.pairs() {
            target.push(t.position());
            let g = t.level() as f64 - i.level() as f64;
            weight.push(T::of((g / p).exp2()));
        }
        Ok(CoefficientOperator {
            source_space: space,
            target_space: space,
            source_depth: tau.source_depth(),
            target_depth: tau.target_depth(),
            target,
            weight,
            matrix: None,
        })
    }

    /// `Σ θ_I a_I h_I`.
    pub fn martingale_transform(theta: &SignPattern, space: SpaceSpec) -> Self {
        let mut op = Self::identity(space, theta.depth());
        op.weight = theta.values().iter().map(|v| T::of(*v)).collect();
        op
    }

    /// `Σ w_I a_I h_I` for positive or signed weights, breadth-first.
    pub fn diagonal(space: SpaceSpec, depth: u32, weights: &[f64]) -> Result<Self> {
        if weights.len() != count_up_to(depth) {
            return Err(Error::ShapeMismatch(format!(
                "{} weights for {} intervals",
                weights.len(),
                count_up_to(depth)
            )));
        }
        let mut op = Self::identity(space, depth);
        op.weight = weights.iter().map(|v| T::of(*v)).collect();
        Ok(op)
    }

    /// `A_p(Σ a_I h_I) = Σ S a_I γ_I^{1/p} h_{τ(I)}` with user weights `γ_I > 0`.
    pub fn a_p(
        s: DenseMatrix<T>,
        source_space: SpaceSpec,
        target_space: SpaceSpec,
        tau: &RearrangementMap,
        gamma: &[f64],
        p: f64,
    ) -> Result<Self> {
        crate::space::check_exponent(p)?;
        if s.cols() != source_space.dim() || s.rows() != target_space.dim() {
            return Err(Error::InvalidMap(format!(
                "a {}×{} matrix cannot map {source_space} into {target_space}",
                s.rows(),
                s.cols()
            )));
        }
        if gamma.len() != count_up_to(tau.source_depth()) {
            return Err(Error::InvalidMap(format!(
                "{} weights for {} intervals",
                gamma.len(),
                count_up_to(tau.source_depth())
            )));
        }
        if let Some(g) = gamma.iter().find(|g| !(**g > 0.0) || !g.is_finite()) {
            return Err(Error::InvalidMap(format!("weight {g} is not positive")));
        }
        let target = tau.pairs().map(|(_, t)| t.position()).collect();
        let weight = gamma.iter().map(|g| T::of(g.powf(1.0 / p))).collect();
        Ok(CoefficientOperator {
            source_space,
            target_space,
            source_depth: tau.source_depth(),
            target_depth: tau.target_depth(),
            target,
            weight,
            matrix: Some(s),
        })
    }

    pub fn source_space(&self) -> SpaceSpec {
        self.source_space
    }

    pub fn target_space(&self) -> SpaceSpec {
        self.target_space
    }

    pub fn source_depth(&self) -> u32 {
        self.source_depth
    }

    pub fn target_depth(&self) -> u32 {
        self.target_depth
    }

    /// `other ∘ self`, defined when this operator's target matches `other`'s source.
    pub fn then(&self, other: &Self) -> Result<Self> {
        if self.target_depth != other.source_depth || self.target_space.dim() != other.source_space.dim() {
            return Err(Error::ShapeMismatch("operators do not compose".into()));
        }
        let matrix = match (&self.matrix, &other.matrix) {
            (None, None) => None,
            (Some(a), None) => Some(a.clone()),
            (None, Some(b)) => Some(b.clone()),
            (Some(a), Some(b)) => {
                let mut data = vec![T::zero(); b.rows * a.cols];
                for r in 0..b.rows {
                    for c in 0..a.cols {
                        data[r * a.cols + c] = (0..a.rows).map(|k| b.get(r, k) * a.get(k, c)).sum();
                    }
                }
                Some(DenseMatrix::new(b.rows, a.cols, data)?)
            }
        };
        Ok(CoefficientOperator {
            source_space: self.source_space,
            target_space: other.target_space,
            source_depth: self.source_depth,
            target_depth: other.target_depth,
            target: self.target.iter().map(|t| other.target[*t]).collect(),
            weight: self
                .weight
                .iter()
                .zip(&self.target)
                .map(|(w, t)| *w * other.weight[*t])
                .collect(),
            matrix,
        })
    }

    /// Raw coefficient map, breadth-first in and out; the mean is not involved.
    pub fn apply_coeffs(&self, a: &[T]) -> Vec<T> {
        let (di, dout) = (self.source_space.dim(), self.target_space.dim());
        let mut out = vec![T::zero(); count_up_to(self.target_depth) * dout];
        for (pos, (t, w)) in self.target.iter().zip(&self.weight).enumerate() {
            let src = &a[pos * di..(pos + 1) * di];
            let dst = &mut out[t * dout..(t + 1) * dout];
            match &self.matrix {
                None => dst.iter_mut().zip(src).for_each(|(o, x)| *o = *o + *w * *x),
                Some(s) => s.mul_into(src, *w, dst),
            }
        }
        out
    }

    /// Transpose of [`apply_coeffs`](Self::apply_coeffs).
    pub fn adjoint_coeffs(&self, b: &[T]) -> Vec<T> {
        let (di, dout) = (self.source_space.dim(), self.target_space.dim());
        let mut out = vec![T::zero(); count_up_to(self.source_depth) * di];
        for (pos, (t, w)) in self.target.iter().zip(&self.weight).enumerate() {
            let src = &b[t * dout..(t + 1) * dout];
            let dst = &mut out[pos * di..(pos + 1) * di];
            match &self.matrix {
                None => dst.iter_mut().zip(src).for_each(|(o, x)| *o = *o + *w * *x),
                Some(s) => s.mul_transpose_into(src, *w, dst),
            }
        }
        out
    }

    /// Applies the operator to a zero-mean expansion of depth at most `source_depth`.
    pub fn apply(&self, f: &HaarExpansion<T>) -> Result<HaarExpansion<T>> {
        if f.depth() > self.source_depth {
            return Err(Error::InvalidDepth(format!(
                "expansion depth {} exceeds operator depth {}",
                f.depth(),
                self.source_depth
            )));
        }
        if f.dim() != self.source_space.dim() {
            return Err(Error::ShapeMismatch(format!(
                "expansion over {} given to an operator on {}",
                f.space(),
                self.source_space
            )));
        }
        if !f.is_zero_mean() {
            return Err(Error::NotZeroMean);
        }
        let f = f.extend(self.source_depth)?;
        let coeffs = self.apply_coeffs(f.coeffs());
        HaarExpansion::from_parts(
            self.target_space,
            self.target_depth,
            vec![T::zero(); self.target_space.dim()],
            coeffs,
        )
    }

    /// Dense matrix of the coefficient map, `(target coefficients) × (source coefficients)`.
    pub(crate) fn dense(&self) -> Vec<Vec<T>> {
        let (di, dout) = (self.source_space.dim(), self.target_space.dim());
        let rows = count_up_to(self.target_depth) * dout;
        let cols = count_up_to(self.source_depth) * di;
        let mut m = vec![vec![T::zero(); cols]; rows];
        for (pos, (t, w)) in self.target.iter().zip(&self.weight).enumerate() {
            for jo in 0..dout {
                for ji in 0..di {
                    let s = match &self.matrix {
                        None => {
                            if jo == ji {
                                T::one()
                            } else {
                                T::zero()
                            }
                        }
                        Some(s) => s.get(jo, ji),
                    };
                    m[t * dout + jo][pos * di + ji] = m[t * dout + jo][pos * di + ji] + *w * s;
                }
            }
        }
        m
    }
}

/// `(Id_X ⊗ T_{p,τ}) f`.
pub fn apply_rearrangement<T: Scalar>(
    tau: &RearrangementMap,
    p: f64,
    f: &HaarExpansion<T>,
) -> Result<HaarExpansion<T>> {
    CoefficientOperator::rearrangement(tau, p, f.space())?.apply(f)
}

/// `Σ θ_I a_I h_I`, keeping the mean.
pub fn apply_martingale_transform<T: Scalar>(theta: &SignPattern, f: &HaarExpansion<T>) -> Result<HaarExpansion<T>> {
    if theta.depth() < f.depth() {
        return Err(Error::InvalidDepth(format!(
            "multipliers of depth {} for an expansion of depth {}",
            theta.depth(),
            f.depth()
        )));
    }
    let mut out = f.clone();
    let d = f.dim();
    for (pos, c) in out.coeffs_mut().chunks_mut(d).enumerate() {
        let t = T::of(theta.values()[pos]);
        c.iter_mut().for_each(|x| *x = *x * t);
    }
    Ok(out)
}

/// Block system `n` of the glued permutation together with the test function
/// `Σ_{k=1}^n Σ_{I ∈ A_k} a_k h_I`, where `A_k` holds the subintervals of `I_k` of relative
/// level `k`. Through the map this becomes a Rademacher sum of the `a_k` on `I_0`.
pub fn block_type_witness<T: Scalar>(
    n: u32,
    space: SpaceSpec,
    vectors: &[Vec<T>],
) -> Result<(RearrangementMap, HaarExpansion<T>)> {
    if n == 0 || vectors.len() != n as usize {
        return Err(Error::ShapeMismatch(format!(
            "{} vectors for block system {n}",
            vectors.len()
        )));
    }
    let depth = crate::rearrangement::glued_depth_for(n);
    let tau = crate::rearrangement::glued_blocks(depth);
    let blocks = crate::rearrangement::glued_block_system(n);
    let mut f = HaarExpansion::zeros(space, depth);
    for (k, a) in (1..=n).zip(vectors) {
        let ik = blocks[k as usize];
        let level = ik.level() + k;
        let first = ik.index() << k;
        for idx in first..first + (1u64 << k) {
            f.set_coeff(DyadicInterval::new(level, idx)?, a)?;
        }
    }
    Ok((tau, f))
}
