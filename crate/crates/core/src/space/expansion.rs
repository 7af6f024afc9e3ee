use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::dyadic::{count_up_to, DyadicInterval};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::{check_exponent, SpaceSpec, StepFunction};

/// `h_I(t)`: `+1` on the left half of `I`, `-1` on the right half, `0` elsewhere.
pub fn haar_value(interval: DyadicInterval, t: f64) -> f64 {
    let (a, b) = (interval.start(), interval.end());
    if t < a || t >= b {
        0.0
    } else if t < (a + b) / 2.0 {
        1.0
    } else {
        -1.0
    }
}

/// `mean + Σ_{I ∈ D_0^N} a_I h_I` with `a_I ∈ X`, stored densely in breadth-first order.
#[derive(Clone, Debug, PartialEq)]
pub struct HaarExpansion<T> {
    space: SpaceSpec,
    depth: u32,
    mean: Vec<T>,
    coeffs: Vec<T>,
}

impl<T: Scalar> HaarExpansion<T> {
    pub fn zeros(space: SpaceSpec, depth: u32) -> Self {
        let d = space.dim();
        HaarExpansion {
            space,
            depth,
            mean: vec![T::zero(); d],
            coeffs: vec![T::zero(); count_up_to(depth) * d],
        }
    }

    /// Dense constructor; `coeffs` lists `a_I` by breadth-first position.
    pub fn from_parts(space: SpaceSpec, depth: u32, mean: Vec<T>, coeffs: Vec<T>) -> Result<Self> {
        let d = space.dim();
        if mean.len() != d || coeffs.len() != count_up_to(depth) * d {
            return Err(Error::ShapeMismatch(format!(
                "depth {depth} over {space} needs mean of length {d} and {} coefficient entries",
                count_up_to(depth) * d
            )));
        }
        Ok(HaarExpansion {
            space,
            depth,
            mean,
            coeffs,
        })
    }

    /// The scalar expansion `h_I` at the given depth.
    pub fn haar(depth: u32, interval: DyadicInterval) -> Result<Self> {
        let mut f = Self::zeros(SpaceSpec::Scalar, depth);
        f.set_coeff(interval, &[T::one()])?;
        Ok(f)
    }

    pub fn space(&self) -> SpaceSpec {
        self.space
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn mean(&self) -> &[T] {
        &self.mean
    }

    pub fn mean_mut(&mut self) -> &mut [T] {
        &mut self.mean
    }

    /// All coefficients, breadth-first, `dim()` entries per interval.
    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [T] {
        &mut self.coeffs
    }

    fn check_level(&self, interval: DyadicInterval) -> Result<()> {
        if interval.level() > self.depth {
            return Err(Error::InvalidDepth(format!(
                "interval {interval} is deeper than expansion depth {}",
                self.depth
            )));
        }
        Ok(())
    }

    pub fn coeff(&self, interval: DyadicInterval) -> Result<&[T]> {
        self.check_level(interval)?;
        Ok(self.coeff_at(interval.position()))
    }

    pub(crate) fn coeff_at(&self, position: usize) -> &[T] {
        let d = self.dim();
        &self.coeffs[position * d..(position + 1) * d]
    }

    pub(crate) fn coeff_at_mut(&mut self, position: usize) -> &mut [T] {
        let d = self.dim();
        &mut self.coeffs[position * d..(position + 1) * d]
    }

    pub fn set_coeff(&mut self, interval: DyadicInterval, value: &[T]) -> Result<()> {
        self.check_level(interval)?;
        if value.len() != self.dim() {
            return Err(Error::ShapeMismatch(format!(
                "coefficient of length {} in {}",
                value.len(),
                self.space
            )));
        }
        self.coeff_at_mut(interval.position()).copy_from_slice(value);
        Ok(())
    }

    /// Intervals carrying a nonzero coefficient, in canonical order.
    pub fn support(&self) -> Vec<DyadicInterval> {
        let d = self.dim();
        self.coeffs
            .chunks(d)
            .enumerate()
            .filter(|(_, c)| c.iter().any(|x| *x != T::zero()))
            .map(|(p, _)| DyadicInterval::from_position(p))
            .collect()
    }

    /// Haar analysis of a step function of resolution at most `depth + 1`.
    pub fn analyze(f: &StepFunction<T>, depth: u32) -> Result<Self> {
        let fine = depth + 1;
        let f = if f.resolution() < fine {
            f.refine(fine)?
        } else if f.resolution() == fine {
            f.clone()
        } else {
            return Err(Error::InvalidDepth(format!(
                "resolution {} exceeds what depth {depth} represents",
                f.resolution()
            )));
        };
        let d = f.dim();
        let half = T::of(0.5);
        let mut out = Self::zeros(f.space(), depth);
        // Running level averages, finest first.
        let mut avg = f.values().to_vec();
        for level in (0..=depth).rev() {
            let n = 1usize << level;
            let mut next = vec![T::zero(); n * d];
            for i in 0..n {
                let base = (1usize << level) - 1 + i;
                for j in 0..d {
                    let l = avg[2 * i * d + j];
                    let r = avg[(2 * i + 1) * d + j];
                    next[i * d + j] = (l + r) * half;
                    out.coeffs[base * d + j] = (l - r) * half;
                }
            }
            avg = next;
        }
        out.mean = avg;
        Ok(out)
    }

    /// Cell values on the grid of `2^{depth+1}` cells.
    pub fn synthesize(&self) -> StepFunction<T> {
        self.synthesize_levels(self.depth + 1)
    }

    /// `E(f | F_n)` on the full grid: mean plus the levels `< n`.
    pub fn martingale_projection(&self, n: u32) -> Result<StepFunction<T>> {
        if n > self.depth + 1 {
            return Err(Error::InvalidDepth(format!(
                "projection level {n} beyond depth {} + 1",
                self.depth
            )));
        }
        Ok(self.synthesize_levels(n))
    }

    fn synthesize_levels(&self, n: u32) -> StepFunction<T> {
        let d = self.dim();
        let mut avg = self.mean.clone();
        for level in 0..n {
            let m = 1usize << level;
            let mut next = vec![T::zero(); 2 * m * d];
            for i in 0..m {
                let base = m - 1 + i;
                for j in 0..d {
                    let a = self.coeffs[base * d + j];
                    let v = avg[i * d + j];
                    next[2 * i * d + j] = v + a;
                    next[(2 * i + 1) * d + j] = v - a;
                }
            }
            avg = next;
        }
        let shift = self.depth + 1 - n;
        let values = if shift == 0 {
            avg
        } else {
            let mut v = Vec::with_capacity(avg.len() << shift);
            for c in 0..(1usize << (self.depth + 1)) {
                let i = c >> shift;
                v.extend_from_slice(&avg[i * d..(i + 1) * d]);
            }
            v
        };
        StepFunction::new(self.space, self.depth + 1, values).expect("grid shape")
    }

    /// `d_k = Σ_{I ∈ D_{k-1}} a_I h_I`, for `k = 1..=depth+1`.
    pub fn level_slice(&self, k: u32) -> Result<Self> {
        if k == 0 || k > self.depth + 1 {
            return Err(Error::InvalidDepth(format!("slice {k} outside 1..={}", self.depth + 1)));
        }
        let mut out = Self::zeros(self.space, self.depth);
        let d = self.dim();
        let lo = (1usize << (k - 1)) - 1;
        let hi = (1usize << k) - 1;
        out.coeffs[lo * d..hi * d].copy_from_slice(&self.coeffs[lo * d..hi * d]);
        Ok(out)
    }

    /// Same function viewed at a larger depth.
    pub fn extend(&self, depth: u32) -> Result<Self> {
        if depth < self.depth {
            return Err(Error::InvalidDepth(format!(
                "cannot shrink depth {} to {depth}",
                self.depth
            )));
        }
        let mut out = Self::zeros(self.space, depth);
        out.mean.copy_from_slice(&self.mean);
        out.coeffs[..self.coeffs.len()].copy_from_slice(&self.coeffs);
        Ok(out)
    }

    pub fn lp_norm(&self, p: f64) -> Result<T> {
        check_exponent(p)?;
        Ok(self.synthesize().lp_norm_unchecked(T::of(p)))
    }

    pub fn h1_norm(&self) -> Result<T> {
        if !self.is_zero_mean() {
            return Err(Error::NotZeroMean);
        }
        Ok(self.synthesize().maximal_function().l1_norm())
    }

    /// `mean = 0` up to rounding relative to the coefficient scale.
    pub fn is_zero_mean(&self) -> bool {
        let scale = self.coeffs.iter().fold(T::one(), |m, x| m.max(x.abs()));
        let tol = T::epsilon() * T::of(1e4) * scale;
        self.mean.iter().all(|x| x.abs() <= tol)
    }

    pub fn scaled(&self, mu: T) -> Self {
        HaarExpansion {
            space: self.space,
            depth: self.depth,
            mean: self.mean.iter().map(|x| *x * mu).collect(),
            coeffs: self.coeffs.iter().map(|x| *x * mu).collect(),
        }
    }

    /// `self += mu · other`, both of the same depth and space.
    pub fn add_scaled(&mut self, mu: T, other: &Self) -> Result<()> {
        if self.depth != other.depth || self.dim() != other.dim() {
            return Err(Error::ShapeMismatch("expansions of different shape".into()));
        }
        for (a, b) in self.mean.iter_mut().zip(&other.mean) {
            *a = *a + mu * *b;
        }
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a = *a + mu * *b;
        }
        Ok(())
    }

    pub fn cast<U: Scalar>(&self) -> HaarExpansion<U> {
        HaarExpansion {
            space: self.space,
            depth: self.depth,
            mean: self.mean.iter().map(|x| U::of(x.as_f64())).collect(),
            coeffs: self.coeffs.iter().map(|x| U::of(x.as_f64())).collect(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Adjoint of synthesis: for cell data `g` (cell-major, `d` per cell) on `2^{depth+1}`
/// cells, returns `Σ_c g_c h_I(c)` for every `I`, breadth-first. The mean part is omitted.
pub(crate) fn synthesis_adjoint<T: Scalar>(depth: u32, d: usize, g: &[T]) -> Vec<T> {
    debug_assert_eq!(g.len(), (1usize << (depth + 1)) * d);
    let mut out = vec![T::zero(); count_up_to(depth) * d];
    let mut sums = g.to_vec();
    for level in (0..=depth).rev() {
        let n = 1usize << level;
        let mut next = vec![T::zero(); n * d];
        for i in 0..n {
            let base = n - 1 + i;
            for j in 0..d {
                let l = sums[2 * i * d + j];
                let r = sums[(2 * i + 1) * d + j];
                next[i * d + j] = l + r;
                out[base * d + j] = l - r;
            }
        }
        sums = next;
    }
    out
}

#[derive(Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
struct ExpansionFile<T> {
    depth: u32,
    space: SpaceSpec,
    mean: Vec<T>,
    coeffs: BTreeMap<DyadicInterval, Vec<T>>,
}

impl<T: Scalar> Serialize for HaarExpansion<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let coeffs = self
            .support()
            .into_iter()
            .map(|i| (i, self.coeff_at(i.position()).to_vec()))
            .collect();
        ExpansionFile {
            depth: self.depth,
            space: self.space,
            mean: self.mean.clone(),
            coeffs,
        }
        .serialize(s)
    }
}

impl<'de, T: Scalar> Deserialize<'de> for HaarExpansion<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let file = ExpansionFile::<T>::deserialize(d)?;
        let mut f = HaarExpansion::zeros(file.space, file.depth);
        if file.mean.len() != f.dim() {
            return Err(D::Error::custom("mean has the wrong dimension"));
        }
        f.mean = file.mean;
        for (i, v) in file.coeffs {
            f.set_coeff(i, &v).map_err(D::Error::custom)?;
        }
        Ok(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(k: u32, i: u64) -> DyadicInterval {
        DyadicInterval::new(k, i).unwrap()
    }

    #[test]
    fn haar_values() {
        assert_eq!(haar_value(iv(0, 0), 0.25), 1.0);
        assert_eq!(haar_value(iv(0, 0), 0.75), -1.0);
        assert_eq!(haar_value(iv(1, 1), 0.25), 0.0);
        let h = HaarExpansion::<f64>::haar(3, iv(2, 1)).unwrap();
        let g = h.synthesize();
        for c in 0..g.cells() {
            let t = (c as f64 + 0.5) / g.cells() as f64;
            assert_eq!(g.cell(c)[0], haar_value(iv(2, 1), t));
        }
        for p in [1.0, 1.5, 3.0] {
            let expect = 0.25f64.powf(1.0 / p);
            assert!((h.lp_norm(p).unwrap() - expect).abs() < 1e-15);
        }
        assert_eq!(g.mean(), vec![0.0]);
    }

    #[test]
    fn scaled_level_one() {
        let mut f = HaarExpansion::<f64>::zeros(SpaceSpec::Scalar, 2);
        f.set_coeff(iv(1, 0), &[-3.0]).unwrap();
        for p in [1.0, 2.0, 5.0] {
            assert!((f.lp_norm(p).unwrap() - 3.0 * 0.5f64.powf(1.0 / p)).abs() < 1e-14);
        }
        let e1 = f.martingale_projection(1).unwrap();
        assert!(e1.values().iter().all(|x| *x == 0.0));
        assert_eq!(f.martingale_projection(3).unwrap(), f.synthesize());
        assert!(f.martingale_projection(4).is_err());
    }

    #[test]
    fn h1_of_root_haar() {
        let h = HaarExpansion::<f64>::haar(3, iv(0, 0)).unwrap();
        assert_eq!(h.h1_norm().unwrap(), 1.0);
        assert_eq!(
            HaarExpansion::<f64>::zeros(SpaceSpec::Scalar, 2).h1_norm().unwrap(),
            0.0
        );
        let mut g = h.clone();
        g.mean_mut()[0] = 0.5;
        assert!(matches!(g.h1_norm(), Err(Error::NotZeroMean)));
    }

    #[test]
    fn round_trip_vector_valued() {
        let space = SpaceSpec::lp(3.0, 2).unwrap();
        let vals: Vec<f64> = (0..16).map(|i| ((i * 7 % 11) as f64) - 5.0).collect();
        let f = StepFunction::new(space, 3, vals).unwrap();
        let e = HaarExpansion::analyze(&f, 2).unwrap();
        assert!(e.synthesize().max_abs_diff(&f).unwrap() < 1e-12);
        let e4 = HaarExpansion::analyze(&f, 4).unwrap();
        assert!(e4.synthesize().max_abs_diff(&f.refine(5).unwrap()).unwrap() < 1e-12);
        assert!(HaarExpansion::analyze(&f, 1).is_err());
    }

    #[test]
    fn adjoint_matches_inner_products() {
        let depth = 3;
        let g: Vec<f64> = (0..32).map(|i| ((i * 13 % 7) as f64) - 3.0).collect();
        let adj = synthesis_adjoint(depth, 2, &g);
        for pos in 0..count_up_to(depth) {
            let mut e = HaarExpansion::<f64>::zeros(SpaceSpec::lp(2.0, 2).unwrap(), depth);
            e.coeff_at_mut(pos)[1] = 1.0;
            let s = e.synthesize();
            let ip: f64 = s.values().iter().zip(&g).map(|(a, b)| a * b).sum();
            assert_eq!(ip, adj[pos * 2 + 1]);
        }
    }

    #[test]
    fn json_lists_nonzero_coefficients() {
        let mut f = HaarExpansion::<f64>::zeros(SpaceSpec::lp(2.0, 2).unwrap(), 2);
        f.set_coeff(iv(2, 3), &[1.0, -0.5]).unwrap();
        let json = serde_json::to_value(&f).unwrap();
        assert_eq!(json["coeffs"]["2:3"], serde_json::json!([1.0, -0.5]));
        assert_eq!(json["coeffs"].as_object().unwrap().len(), 1);
        let back: HaarExpansion<f64> = serde_json::from_value(json).unwrap();
        assert_eq!(back, f);
    }
}
