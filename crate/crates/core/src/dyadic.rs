//! Dyadic intervals of `[0,1)`, finite collections of them, and the exact
//! measure-theoretic quantities attached to collections.

use std::collections::btree_set;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::exact::Dyadic;

/// Deepest level representable; keeps indices and exact measures inside `u64`/`u128`.
pub const MAX_LEVEL: u32 = 60;

/// The interval `[index·2^{-level}, (index+1)·2^{-level})`.
///
/// Ordered by `(level, index)`, which is also breadth-first order of the dyadic tree.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DyadicInterval {
    level: u32,
    index: u64,
}

impl DyadicInterval {
    pub const ROOT: DyadicInterval = DyadicInterval { level: 0, index: 0 };

    pub fn new(level: u32, index: u64) -> Result<Self> {
        if level > MAX_LEVEL || index >> level != 0 {
            return Err(Error::InvalidInterval { level, index });
        }
        Ok(DyadicInterval { level, index })
    }

    pub(crate) fn new_unchecked(level: u32, index: u64) -> Self {
        debug_assert!(level <= MAX_LEVEL && index >> level == 0);
        DyadicInterval { level, index }
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    /// Exact length `2^{-level}`.
    pub fn measure(&self) -> Dyadic {
        Dyadic::pow2_neg(self.level)
    }

    pub fn left_child(&self) -> DyadicInterval {
        DyadicInterval::new_unchecked(self.level + 1, 2 * self.index)
    }

    pub fn right_child(&self) -> DyadicInterval {
        DyadicInterval::new_unchecked(self.level + 1, 2 * self.index + 1)
    }

    pub fn parent(&self) -> Option<DyadicInterval> {
        (self.level > 0).then(|| DyadicInterval::new_unchecked(self.level - 1, self.index / 2))
    }

    /// The ancestor at `level` (or `self` when `level == self.level()`).
    pub fn ancestor(&self, level: u32) -> Option<DyadicInterval> {
        (level <= self.level).then(|| DyadicInterval::new_unchecked(level, self.index >> (self.level - level)))
    }

    /// `other ⊆ self`.
    pub fn contains(&self, other: &DyadicInterval) -> bool {
        other.level >= self.level && other.index >> (other.level - self.level) == self.index
    }

    /// Whether `self` lies in the left half `[0,1/2)`. The root lies in neither half.
    pub fn in_left_half(&self) -> bool {
        self.level >= 1 && self.index < 1 << (self.level - 1)
    }

    /// Position in breadth-first order: `2^level - 1 + index`.
    pub fn position(&self) -> usize {
        ((1u64 << self.level) - 1 + self.index) as usize
    }

    pub fn from_position(pos: usize) -> DyadicInterval {
        let p = pos as u64 + 1;
        let level = 63 - p.leading_zeros();
        DyadicInterval::new_unchecked(level, p - (1 << level))
    }

    /// Cells of the uniform grid at `resolution` covered by `self`.
    pub fn cells(&self, resolution: u32) -> std::ops::Range<usize> {
        assert!(self.level <= resolution, "interval finer than grid");
        let s = resolution - self.level;
        ((self.index << s) as usize)..(((self.index + 1) << s) as usize)
    }

    pub fn start(&self) -> f64 {
        self.index as f64 * (-(self.level as f64)).exp2()
    }

    pub fn end(&self) -> f64 {
        (self.index + 1) as f64 * (-(self.level as f64)).exp2()
    }

    /// Collection `{J ⊆ self : level(J) ≤ depth}`.
    pub fn shadow(&self, depth: u32) -> Result<IntervalCollection> {
        if self.level > depth {
            return Err(Error::InvalidDepth(format!("interval {self} lies below depth {depth}")));
        }
        let mut out = BTreeSet::new();
        for level in self.level..=depth {
            let s = level - self.level;
            for index in (self.index << s)..((self.index + 1) << s) {
                out.insert(DyadicInterval::new_unchecked(level, index));
            }
        }
        Ok(IntervalCollection(out))
    }
}

/// Number of intervals in `D_0^depth`.
pub fn count_up_to(depth: u32) -> usize {
    (1usize << (depth + 1)) - 1
}

/// All intervals of levels `0..=depth` in canonical order.
pub fn intervals_up_to(depth: u32) -> impl Iterator<Item = DyadicInterval> {
    (0..count_up_to(depth)).map(DyadicInterval::from_position)
}

/// All intervals of one level.
pub fn level_intervals(level: u32) -> impl Iterator<Item = DyadicInterval> {
    (0..1u64 << level).map(move |i| DyadicInterval::new_unchecked(level, i))
}

impl fmt::Display for DyadicInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.level, self.index)
    }
}

impl fmt::Debug for DyadicInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.level, self.index)
    }
}

impl FromStr for DyadicInterval {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::ParseInterval(s.to_string());
        let (k, i) = s.trim().split_once(':').ok_or_else(bad)?;
        let level = k.trim().parse().map_err(|_| bad())?;
        let index = i.trim().parse().map_err(|_| bad())?;
        DyadicInterval::new(level, index)
    }
}

impl Serialize for DyadicInterval {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for DyadicInterval {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A finite set of dyadic intervals, kept sorted by `(level, index)`.
///
/// The derived ordering compares the sorted member lists lexicographically;
/// searches use it to break ties between witnesses.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IntervalCollection(BTreeSet<DyadicInterval>);

impl IntervalCollection {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, i: DyadicInterval) -> bool {
        self.0.insert(i)
    }

    pub fn remove(&mut self, i: &DyadicInterval) -> bool {
        self.0.remove(i)
    }

    pub fn contains(&self, i: &DyadicInterval) -> bool {
        self.0.contains(i)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> btree_set::Iter<'_, DyadicInterval> {
        self.0.iter()
    }

    /// Deepest level present.
    pub fn depth(&self) -> Option<u32> {
        self.0.iter().map(|i| i.level).max()
    }

    /// Sum of member lengths, counted with multiplicity of overlap.
    pub fn total_measure(&self) -> Dyadic {
        self.0.iter().map(|i| i.measure()).sum()
    }

    /// Members not contained in another member.
    pub fn maximal(&self) -> IntervalCollection {
        let inner = self
            .0
            .iter()
            .filter(|i| {
                let mut up = i.parent();
                while let Some(p) = up {
                    if self.0.contains(&p) {
                        return false;
                    }
                    up = p.parent();
                }
                true
            })
            .copied()
            .collect();
        IntervalCollection(inner)
    }

    /// `|C*|`, the measure of the union of the members.
    pub fn union_measure(&self) -> Result<Dyadic> {
        if self.is_empty() {
            return Err(Error::EmptyCollection);
        }
        Ok(self.maximal().total_measure())
    }

    /// `sup_{I∈E} |I|^{-1} Σ_{J⊆I, J∈E} |J|`, via one bottom-up pass over the tree.
    pub fn carleson_constant(&self) -> Result<Dyadic> {
        if self.is_empty() {
            return Err(Error::EmptyCollection);
        }
        let mut pending: BTreeMap<DyadicInterval, Dyadic> = self.0.iter().map(|&i| (i, Dyadic::ZERO)).collect();
        let mut best = Dyadic::ZERO;
        // Largest key first means deepest level first, so every node is final when popped.
        while let Some((node, below)) = pending.pop_last() {
            let own = self.0.contains(&node);
            let total = if own { below + node.measure() } else { below };
            if own {
                best = best.max(total.mul_pow2(node.level));
            }
            if let Some(p) = node.parent() {
                let slot = pending.entry(p).or_insert(Dyadic::ZERO);
                *slot = *slot + total;
            }
        }
        Ok(best)
    }

    pub fn to_vec(&self) -> Vec<DyadicInterval> {
        self.0.iter().copied().collect()
    }
}

impl FromIterator<DyadicInterval> for IntervalCollection {
    fn from_iter<T: IntoIterator<Item = DyadicInterval>>(iter: T) -> Self {
        IntervalCollection(iter.into_iter().collect())
    }
}

impl<'a> IntoIterator for &'a IntervalCollection {
    type Item = &'a DyadicInterval;
    type IntoIter = btree_set::Iter<'a, DyadicInterval>;
    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

impl fmt::Debug for IntervalCollection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.0.iter()).finish()
    }
}

impl fmt::Display for IntervalCollection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (n, i) in self.0.iter().enumerate() {
            if n > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}
