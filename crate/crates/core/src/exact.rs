//! Exact dyadic rationals `n / 2^e` and the general rationals their quotients produce.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, Mul};
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::ToPrimitive;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

/// Exact rational used for ratios of measures (Semenov and distortion ratios).
pub type ExactRatio = Ratio<u128>;

/// A nonnegative dyadic rational `num / 2^exp`, kept in lowest terms.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dyadic {
    num: u128,
    exp: u32,
}

impl Dyadic {
    pub const ZERO: Dyadic = Dyadic { num: 0, exp: 0 };
    pub const ONE: Dyadic = Dyadic { num: 1, exp: 0 };

    pub fn new(num: u128, exp: u32) -> Self {
        if num == 0 {
            return Self::ZERO;
        }
        let tz = num.trailing_zeros().min(exp);
        Dyadic {
            num: num >> tz,
            exp: exp - tz,
        }
    }

    /// `2^{-k}`, the length of a level-`k` dyadic interval.
    pub fn pow2_neg(k: u32) -> Self {
        Dyadic { num: 1, exp: k }
    }

    pub fn from_int(n: u128) -> Self {
        Self::new(n, 0)
    }

    pub fn numerator(&self) -> u128 {
        self.num
    }

    pub fn exponent(&self) -> u32 {
        self.exp
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }

    pub fn to_f64(&self) -> f64 {
        // Exact for the magnitudes that occur (numerators below 2^53).
        self.num.to_f64().unwrap_or(f64::INFINITY) * (-(self.exp as f64)).exp2()
    }

    /// Multiply by `2^k`.
    pub fn mul_pow2(self, k: u32) -> Self {
        if k <= self.exp {
            Dyadic::new(self.num, self.exp - k)
        } else {
            let shift = k - self.exp;
            assert!(self.num.leading_zeros() > shift, "dyadic overflow in mul_pow2");
            Dyadic::new(self.num << shift, 0)
        }
    }

    /// Divide by `2^k`.
    pub fn div_pow2(self, k: u32) -> Self {
        Dyadic::new(self.num, self.exp + k)
    }

    pub fn to_ratio(&self) -> ExactRatio {
        Ratio::new(self.num, pow2(self.exp))
    }

    /// The exact quotient `self / other`. Panics if `other` is zero.
    pub fn ratio(self, other: Dyadic) -> ExactRatio {
        assert!(!other.is_zero(), "division by zero dyadic");
        if self.exp >= other.exp {
            let d = self.exp - other.exp;
            Ratio::new(self.num, checked_shl(other.num, d))
        } else {
            let d = other.exp - self.exp;
            Ratio::new(checked_shl(self.num, d), other.num)
        }
    }

    fn aligned(self, other: Dyadic) -> (u128, u128, u32) {
        let e = self.exp.max(other.exp);
        (
            checked_shl(self.num, e - self.exp),
            checked_shl(other.num, e - other.exp),
            e,
        )
    }

    // floor(log2(value)) as a signed integer; None for zero.
    fn magnitude(&self) -> Option<i64> {
        if self.num == 0 {
            None
        } else {
            Some(127 - self.num.leading_zeros() as i64 - self.exp as i64)
        }
    }
}

fn pow2(e: u32) -> u128 {
    assert!(e < 128, "dyadic exponent {e} too large");
    1u128 << e
}

fn checked_shl(n: u128, s: u32) -> u128 {
    if n == 0 {
        return 0;
    }
    assert!(n.leading_zeros() >= s, "dyadic overflow");
    n << s
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.magnitude(), other.magnitude()) {
            (None, None) => Ordering::Equal,
            (None, Some(_)) => Ordering::Less,
            (Some(_), None) => Ordering::Greater,
            (Some(a), Some(b)) if a != b => a.cmp(&b),
            _ => {
                let (a, b, _) = self.aligned(*other);
                a.cmp(&b)
            }
        }
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Add for Dyadic {
    type Output = Dyadic;
    fn add(self, rhs: Dyadic) -> Dyadic {
        let (a, b, e) = self.aligned(rhs);
        Dyadic::new(a.checked_add(b).expect("dyadic overflow"), e)
    }
}

impl Mul for Dyadic {
    type Output = Dyadic;
    fn mul(self, rhs: Dyadic) -> Dyadic {
        Dyadic::new(
            self.num.checked_mul(rhs.num).expect("dyadic overflow"),
            self.exp + rhs.exp,
        )
    }
}

impl Sum for Dyadic {
    fn sum<I: Iterator<Item = Dyadic>>(iter: I) -> Dyadic {
        iter.fold(Dyadic::ZERO, Add::add)
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exp == 0 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, pow2(self.exp))
        }
    }
}

impl fmt::Debug for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Dyadic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || Error::InvalidDepth(format!("not a dyadic rational: {s:?}"));
        let (n, d) = match s.split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (s.trim(), "1"),
        };
        let n: u128 = n.parse().map_err(|_| bad())?;
        let d: u128 = d.parse().map_err(|_| bad())?;
        if d == 0 || !d.is_power_of_two() {
            return Err(bad());
        }
        Ok(Dyadic::new(n, d.trailing_zeros()))
    }
}

impl Serialize for Dyadic {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Dyadic {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Floating-point view of an exact ratio.
pub fn ratio_to_f64(r: &ExactRatio) -> f64 {
    r.numer().to_f64().unwrap_or(f64::NAN) / r.denom().to_f64().unwrap_or(f64::NAN)
}

/// Serde adapter writing an [`ExactRatio`] as `"p/q"` (or `"p"`).
pub mod ratio_serde {
    use super::ExactRatio;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &ExactRatio, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(r)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<ExactRatio, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalizes() {
        assert_eq!(Dyadic::new(4, 3), Dyadic::new(1, 1));
        assert_eq!(Dyadic::new(6, 0), Dyadic::from_int(6));
        assert_eq!(Dyadic::new(0, 7), Dyadic::ZERO);
    }

    #[test]
    fn arithmetic() {
        let a = Dyadic::pow2_neg(1) + Dyadic::pow2_neg(3);
        assert_eq!(a, Dyadic::new(5, 3));
        assert_eq!(a.to_string(), "5/8");
        assert_eq!(a.mul_pow2(3), Dyadic::from_int(5));
        assert_eq!(Dyadic::new(3, 2) * Dyadic::new(1, 1), Dyadic::new(3, 3));
    }

    #[test]
    fn ordering_across_exponents() {
        assert!(Dyadic::new(3, 2) < Dyadic::ONE);
        assert!(Dyadic::new(5, 2) > Dyadic::from_int(1));
        assert!(Dyadic::new(7, 3) < Dyadic::new(15, 4) || Dyadic::new(7, 3) == Dyadic::new(14, 4));
        assert_eq!(Dyadic::new(1, 100).cmp(&Dyadic::new(1, 100)), Ordering::Equal);
        assert!(Dyadic::ZERO < Dyadic::pow2_neg(120));
    }

    #[test]
    fn ratios() {
        let r = Dyadic::ONE.ratio(Dyadic::pow2_neg(1));
        assert_eq!(r, Ratio::from_integer(2));
        let r = Dyadic::new(3, 2).ratio(Dyadic::new(1, 1));
        assert_eq!(r, Ratio::new(3, 2));
        assert_eq!(ratio_to_f64(&Dyadic::new(5, 3).ratio(Dyadic::new(3, 0))), 5.0 / 24.0);
    }

    #[test]
    fn parse_round_trip() {
        for s in ["0", "1", "5/8", "7/4", "3"] {
            let d: Dyadic = s.parse().unwrap();
            assert_eq!(d.to_string(), s);
        }
        assert!("1/3".parse::<Dyadic>().is_err());
    }
}
