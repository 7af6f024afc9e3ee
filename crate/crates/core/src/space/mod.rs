//! Vector-valued step functions on `[0,1)`, Haar analysis and synthesis,
//! `L^p_X` and `H^1_X` norms, and atoms.

mod expansion;
mod hardy;
mod step;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub(crate) use expansion::synthesis_adjoint;
pub use expansion::{haar_value, HaarExpansion};
pub use hardy::{h1at_upper_bound, validate_atom, Atom, AtomCheck, StoppingTimeGrid};
pub use step::StepFunction;

/// The coefficient space `X`: the scalars, or `ℓ_r^d` with `r ∈ [1,∞]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SpaceSpec {
    Scalar,
    Sequence { r: f64, d: usize },
}

impl SpaceSpec {
    pub fn lp(r: f64, d: usize) -> Result<Self> {
        if !(r >= 1.0) {
            return Err(Error::InvalidExponent(r));
        }
        if d == 0 {
            return Err(Error::ShapeMismatch("ℓ_r^d needs d ≥ 1".into()));
        }
        Ok(SpaceSpec::Sequence { r, d })
    }

    pub fn dim(&self) -> usize {
        match self {
            SpaceSpec::Scalar => 1,
            SpaceSpec::Sequence { d, .. } => *d,
        }
    }

    /// Whether `L^2_X` is a Hilbert space.
    pub fn is_hilbert(&self) -> bool {
        match self {
            SpaceSpec::Scalar => true,
            SpaceSpec::Sequence { r, d } => *r == 2.0 || *d == 1,
        }
    }

    pub fn norm<T: Scalar>(&self, v: &[T]) -> T {
        debug_assert_eq!(v.len(), self.dim());
        match *self {
            SpaceSpec::Scalar => v[0].abs(),
            SpaceSpec::Sequence { .. } if v.len() == 1 => v[0].abs(),
            SpaceSpec::Sequence { r, .. } => lr_norm(v, r),
        }
    }

    /// `‖v‖^p`, writing its gradient with respect to `v` into `grad`.
    pub fn norm_pow_grad<T: Scalar>(&self, v: &[T], p: T, grad: &mut [T]) -> T {
        let n = self.norm(v);
        if n == T::zero() {
            grad.iter_mut().for_each(|g| *g = T::zero());
            return T::zero();
        }
        // d‖v‖^p = p ‖v‖^{p-1} d‖v‖
        let outer = p * n.powf(p - T::one());
        let r = match *self {
            SpaceSpec::Scalar => 2.0,
            SpaceSpec::Sequence { .. } if v.len() == 1 => 2.0,
            SpaceSpec::Sequence { r, .. } => r,
        };
        if r.is_infinite() {
            let (arg, _) =
                v.iter().enumerate().fold(
                    (0, T::zero()),
                    |(ai, am), (i, x)| {
                        if x.abs() > am {
                            (i, x.abs())
                        } else {
                            (ai, am)
                        }
                    },
                );
            grad.iter_mut().for_each(|g| *g = T::zero());
            grad[arg] = outer * v[arg].signum();
        } else if r == 1.0 {
            for (g, x) in grad.iter_mut().zip(v) {
                *g = if *x == T::zero() { T::zero() } else { outer * x.signum() };
            }
        } else {
            let rr = T::of(r);
            let scale = outer / n.powf(rr - T::one());
            for (g, x) in grad.iter_mut().zip(v) {
                *g = scale * x.abs().powf(rr - T::one()) * x.signum();
            }
        }
        n.powf(p)
    }
}

fn lr_norm<T: Scalar>(v: &[T], r: f64) -> T {
    if r.is_infinite() {
        v.iter().fold(T::zero(), |m, x| m.max(x.abs()))
    } else if r == 1.0 {
        v.iter().map(|x| x.abs()).sum()
    } else if r == 2.0 {
        v.iter().map(|x| *x * *x).sum::<T>().sqrt()
    } else {
        // Scale by the largest entry so large exponents do not overflow.
        let m = v.iter().fold(T::zero(), |m, x| m.max(x.abs()));
        if m == T::zero() {
            return m;
        }
        let rr = T::of(r);
        m * v.iter().map(|x| (x.abs() / m).powf(rr)).sum::<T>().powf(rr.recip())
    }
}

impl fmt::Display for SpaceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpaceSpec::Scalar => write!(f, "scalar"),
            SpaceSpec::Sequence { r, d } if r.is_infinite() => write!(f, "lp:inf:{d}"),
            SpaceSpec::Sequence { r, d } => write!(f, "lp:{r}:{d}"),
        }
    }
}

impl FromStr for SpaceSpec {
    type Err = Error;

    /// `scalar`, or `lp:R:D` with `R` a number or `inf`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::ShapeMismatch(format!("cannot parse space {s:?}"));
        if s == "scalar" {
            return Ok(SpaceSpec::Scalar);
        }
        let mut parts = s.split(':');
        if parts.next() != Some("lp") {
            return Err(bad());
        }
        let r = parse_exponent(parts.next().ok_or_else(bad)?).ok_or_else(bad)?;
        let d = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        if parts.next().is_some() {
            return Err(bad());
        }
        SpaceSpec::lp(r, d)
    }
}

fn parse_exponent(s: &str) -> Option<f64> {
    match s {
        "inf" | "infinity" => Some(f64::INFINITY),
        _ => s.parse().ok(),
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum SpaceRepr {
    Scalar,
    Lp { r: ExponentRepr, d: usize },
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ExponentRepr {
    Finite(f64),
    Named(String),
}

impl Serialize for SpaceSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let repr = match *self {
            SpaceSpec::Scalar => SpaceRepr::Scalar,
            SpaceSpec::Sequence { r, d } => SpaceRepr::Lp {
                r: if r.is_infinite() {
                    ExponentRepr::Named("inf".into())
                } else {
                    ExponentRepr::Finite(r)
                },
                d,
            },
        };
        repr.serialize(s)
    }
}

impl<'de> Deserialize<'de> for SpaceSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match SpaceRepr::deserialize(d)? {
            SpaceRepr::Scalar => Ok(SpaceSpec::Scalar),
            SpaceRepr::Lp { r, d } => {
                let r = match r {
                    ExponentRepr::Finite(r) => r,
                    ExponentRepr::Named(s) => {
                        parse_exponent(&s).ok_or_else(|| serde::de::Error::custom(format!("bad exponent {s:?}")))?
                    }
                };
                SpaceSpec::lp(r, d).map_err(serde::de::Error::custom)
            }
        }
    }
}

/// Rejects exponents outside `[1,∞)`.
pub(crate) fn check_exponent(p: f64) -> Result<()> {
    if p >= 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidExponent(p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vector_norms() {
        let x = [3.0, -4.0];
        assert_eq!(SpaceSpec::lp(2.0, 2).unwrap().norm(&x), 5.0);
        assert_eq!(SpaceSpec::lp(1.0, 2).unwrap().norm(&x), 7.0);
        assert_eq!(SpaceSpec::lp(f64::INFINITY, 2).unwrap().norm(&x), 4.0);
        let n3: f64 = SpaceSpec::lp(3.0, 2).unwrap().norm(&x);
        assert!((n3 - (27.0f64 + 64.0).cbrt()).abs() < 1e-12);
        assert_eq!(SpaceSpec::Scalar.norm(&[-2.5]), 2.5);
        assert_eq!(SpaceSpec::lp(7.0, 1).unwrap().norm(&[-2.5]), 2.5);
    }

    #[test]
    fn gradient_of_norm_power() {
        let space = SpaceSpec::lp(1.5, 3).unwrap();
        let x: [f64; 3] = [0.3, -1.2, 0.7];
        let p: f64 = 2.5;
        let mut g = [0.0; 3];
        space.norm_pow_grad(&x, p, &mut g);
        for i in 0..3 {
            let h = 1e-6;
            let mut a = x;
            let mut b = x;
            a[i] += h;
            b[i] -= h;
            let fd = (space.norm(&a).powf(p) - space.norm(&b).powf(p)) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-6 * (1.0 + fd.abs()), "{i}: {fd} vs {}", g[i]);
        }
    }

    #[test]
    fn parse_and_serialize() {
        let s: SpaceSpec = "lp:1.2:16".parse().unwrap();
        assert_eq!(s, SpaceSpec::Sequence { r: 1.2, d: 16 });
        assert_eq!(s.to_string(), "lp:1.2:16");
        let inf: SpaceSpec = "lp:inf:3".parse().unwrap();
        let json = serde_json::to_string(&inf).unwrap();
        assert_eq!(json, r#"{"kind":"lp","r":"inf","d":3}"#);
        assert_eq!(serde_json::from_str::<SpaceSpec>(&json).unwrap(), inf);
        assert_eq!(
            serde_json::to_string(&SpaceSpec::Scalar).unwrap(),
            r#"{"kind":"scalar"}"#
        );
        assert!("lp:0.5:2".parse::<SpaceSpec>().is_err());
        assert!("lq:2:2".parse::<SpaceSpec>().is_err());
    }
}
