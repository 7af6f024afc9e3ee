use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::{check_exponent, SpaceSpec};

/// An `X`-valued function constant on the `2^resolution` cells of the uniform grid.
#[derive(Clone, Debug, PartialEq)]
pub struct StepFunction<T> {
    space: SpaceSpec,
    resolution: u32,
    values: Vec<T>,
}

impl<T: Scalar> StepFunction<T> {
    /// `values` holds `2^resolution` cells, each `space.dim()` components, cell-major.
    pub fn new(space: SpaceSpec, resolution: u32, values: Vec<T>) -> Result<Self> {
        let expected = (1usize << resolution) * space.dim();
        if values.len() != expected {
            return Err(Error::ShapeMismatch(format!(
                "{} values for {expected} cell components",
                values.len()
            )));
        }
        Ok(StepFunction {
            space,
            resolution,
            values,
        })
    }

    pub fn zeros(space: SpaceSpec, resolution: u32) -> Self {
        StepFunction {
            space,
            resolution,
            values: vec![T::zero(); (1usize << resolution) * space.dim()],
        }
    }

    /// Scalar step function from cell values.
    pub fn scalar(resolution: u32, values: Vec<T>) -> Result<Self> {
        Self::new(SpaceSpec::Scalar, resolution, values)
    }

    pub fn space(&self) -> SpaceSpec {
        self.space
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    pub fn cells(&self) -> usize {
        1 << self.resolution
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn cell(&self, c: usize) -> &[T] {
        let d = self.dim();
        &self.values[c * d..(c + 1) * d]
    }

    pub fn cell_mut(&mut self, c: usize) -> &mut [T] {
        let d = self.dim();
        &mut self.values[c * d..(c + 1) * d]
    }

    /// Value at `t ∈ [0,1)`.
    pub fn eval(&self, t: f64) -> &[T] {
        let c = ((t * self.cells() as f64) as usize).min(self.cells() - 1);
        self.cell(c)
    }

    pub fn cell_norms(&self) -> Vec<T> {
        (0..self.cells()).map(|c| self.space.norm(self.cell(c))).collect()
    }

    pub fn mean(&self) -> Vec<T> {
        let d = self.dim();
        let w = T::of((-(self.resolution as f64)).exp2());
        let mut m = vec![T::zero(); d];
        for c in 0..self.cells() {
            for (a, x) in m.iter_mut().zip(self.cell(c)) {
                *a = *a + *x;
            }
        }
        m.iter_mut().for_each(|a| *a = *a * w);
        m
    }

    /// `(∫ ‖f(t)‖_X^p dt)^{1/p}`, summed exactly over the grid.
    pub fn lp_norm(&self, p: f64) -> Result<T> {
        check_exponent(p)?;
        Ok(self.lp_norm_unchecked(T::of(p)))
    }

    pub(crate) fn lp_norm_unchecked(&self, p: T) -> T {
        let norms = self.cell_norms();
        let m = norms.iter().fold(T::zero(), |m, x| m.max(*x));
        if m == T::zero() {
            return m;
        }
        let w = T::of((-(self.resolution as f64)).exp2());
        let s: T = norms.iter().map(|x| (*x / m).powf(p)).sum();
        m * (s * w).powf(p.recip())
    }

    pub fn l1_norm(&self) -> T {
        let w = T::of((-(self.resolution as f64)).exp2());
        self.cell_norms().into_iter().sum::<T>() * w
    }

    pub fn sup_norm(&self) -> T {
        self.cell_norms().into_iter().fold(T::zero(), T::max)
    }

    /// Averages over the intervals of `level`: entry `i` is the mean over `(level, i)`.
    pub fn level_averages(&self, level: u32) -> Result<Vec<T>> {
        if level > self.resolution {
            return Err(Error::InvalidDepth(format!(
                "level {level} finer than grid resolution {}",
                self.resolution
            )));
        }
        let d = self.dim();
        let block = 1usize << (self.resolution - level);
        let w = T::of(block as f64).recip();
        let mut out = vec![T::zero(); (1usize << level) * d];
        for (c, chunk) in self.values.chunks(d).enumerate() {
            let slot = &mut out[(c / block) * d..(c / block + 1) * d];
            for (a, x) in slot.iter_mut().zip(chunk) {
                *a = *a + *x;
            }
        }
        out.iter_mut().for_each(|a| *a = *a * w);
        Ok(out)
    }

    /// `E(f | F_n)` on the same grid.
    pub fn conditional_expectation(&self, n: u32) -> Result<Self> {
        let avg = self.level_averages(n)?;
        let d = self.dim();
        let shift = self.resolution - n;
        let mut values = Vec::with_capacity(self.values.len());
        for c in 0..self.cells() {
            values.extend_from_slice(&avg[(c >> shift) * d..((c >> shift) + 1) * d]);
        }
        Ok(StepFunction {
            space: self.space,
            resolution: self.resolution,
            values,
        })
    }

    /// Pointwise `max_{n ≤ resolution} ‖E(f|F_n)(t)‖_X`.
    pub fn maximal_function(&self) -> StepFunction<T> {
        let mut out = vec![T::zero(); self.cells()];
        for n in 0..=self.resolution {
            let avg = self.level_averages(n).expect("level within grid");
            let d = self.dim();
            let shift = self.resolution - n;
            for (c, slot) in out.iter_mut().enumerate() {
                let i = c >> shift;
                *slot = slot.max(self.space.norm(&avg[i * d..(i + 1) * d]));
            }
        }
        StepFunction::scalar(self.resolution, out).expect("shape matches")
    }

    pub fn is_zero_mean(&self) -> bool {
        let tol = T::epsilon() * T::of(1e4) * T::one().max(self.sup_norm());
        self.space.norm(&self.mean()) <= tol
    }

    /// `E sup_n ‖E(f|F_n)‖_X` for zero-mean `f`.
    pub fn h1_norm(&self) -> Result<T> {
        if !self.is_zero_mean() {
            return Err(Error::NotZeroMean);
        }
        Ok(self.maximal_function().l1_norm())
    }

    /// The same function on the finer grid of the given resolution.
    pub fn refine(&self, resolution: u32) -> Result<Self> {
        if resolution < self.resolution {
            return Err(Error::InvalidDepth(format!(
                "cannot refine resolution {} to {resolution}",
                self.resolution
            )));
        }
        let shift = resolution - self.resolution;
        let mut values = Vec::with_capacity(self.values.len() << shift);
        for c in 0..(1usize << resolution) {
            values.extend_from_slice(self.cell(c >> shift));
        }
        Ok(StepFunction {
            space: self.space,
            resolution,
            values,
        })
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<T> {
        if self.resolution != other.resolution || self.dim() != other.dim() {
            return Err(Error::ShapeMismatch("step functions on different grids".into()));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs())))
    }

    pub fn scaled(&self, mu: T) -> Self {
        StepFunction {
            space: self.space,
            resolution: self.resolution,
            values: self.values.iter().map(|x| *x * mu).collect(),
        }
    }

    /// `self += mu · other` on a common grid.
    pub fn add_scaled(&mut self, mu: T, other: &Self) -> Result<()> {
        if self.resolution != other.resolution || self.dim() != other.dim() {
            return Err(Error::ShapeMismatch("step functions on different grids".into()));
        }
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a = *a + mu * *b;
        }
        Ok(())
    }

    /// CSV with one row per cell: `cell,c0,c1,…`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("cell");
        for j in 0..self.dim() {
            out.push_str(&format!(",c{j}"));
        }
        out.push('\n');
        for c in 0..self.cells() {
            out.push_str(&c.to_string());
            for x in self.cell(c) {
                out.push_str(&format!(",{x}"));
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn averages_and_projection() {
        let f = StepFunction::scalar(2, vec![1.0, 3.0, -2.0, 6.0]).unwrap();
        assert_eq!(f.level_averages(1).unwrap(), vec![2.0, 2.0]);
        assert_eq!(f.level_averages(0).unwrap(), vec![2.0]);
        let e1 = f.conditional_expectation(1).unwrap();
        assert_eq!(e1.values(), &[2.0, 2.0, 2.0, 2.0]);
        assert_eq!(f.conditional_expectation(2).unwrap(), f);
        assert!(f.conditional_expectation(3).is_err());
    }

    #[test]
    fn norms_and_errors() {
        let f = StepFunction::<f64>::scalar(1, vec![1.0, -1.0]).unwrap();
        for p in [1.0, 1.5, 2.0, 4.0] {
            assert!((f.lp_norm(p).unwrap() - 1.0).abs() < 1e-15);
        }
        assert!(matches!(f.lp_norm(0.5), Err(Error::InvalidExponent(_))));
        assert!(matches!(f.lp_norm(f64::INFINITY), Err(Error::InvalidExponent(_))));
        let g = StepFunction::scalar(1, vec![1.0, 0.0]).unwrap();
        assert!(matches!(g.h1_norm(), Err(Error::NotZeroMean)));
    }

    #[test]
    fn csv_dump() {
        let f = StepFunction::new(SpaceSpec::lp(2.0, 2).unwrap(), 1, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(f.to_csv(), "cell,c0,c1\n0,1,2\n1,3,4\n");
    }

    #[test]
    fn refine_preserves_norms() {
        let f = StepFunction::<f64>::scalar(2, vec![1.0, -3.0, 0.5, 2.0]).unwrap();
        let g = f.refine(5).unwrap();
        assert!((f.lp_norm(3.0).unwrap() - g.lp_norm(3.0).unwrap()).abs() < 1e-12);
        assert_eq!(f.eval(0.3), g.eval(0.3));
    }
}
