//! Injective maps between truncated dyadic grids `D_0^N → D_0^L`, their
//! standard constructions, and the combinatorial constants that control the
//! induced rearrangement operators.

mod builders;
mod distortion;
mod semenov;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::dyadic::{count_up_to, intervals_up_to, DyadicInterval, IntervalCollection};
use crate::error::{Error, Result};

pub use builders::{block_perm, glued_block_system, glued_blocks, glued_depth_for, identity, parity_shift};
pub use distortion::{carleson_distortion, Distortion, DistortionMode};
pub use semenov::{
    semenov_exact, semenov_heuristic, semenov_ratio, shadow_semenov, HeuristicBudget, SemenovResult, DEFAULT_EXACT_CAP,
};

/// A finite injective map `τ: D_0^N → D_0^L`, stored densely by source position.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(try_from = "PermutationFile", into = "PermutationFile")]
pub struct RearrangementMap {
    source_depth: u32,
    target_depth: u32,
    table: Vec<DyadicInterval>,
}

impl RearrangementMap {
    /// Validates that `table` covers `D_0^source_depth`, lands in `D_0^target_depth`
    /// and is injective.
    pub fn new(source_depth: u32, target_depth: u32, table: Vec<DyadicInterval>) -> Result<Self> {
        if table.len() != count_up_to(source_depth) {
            return Err(Error::InvalidDepth(format!(
                "table has {} entries, D_0^{source_depth} has {}",
                table.len(),
                count_up_to(source_depth)
            )));
        }
        let mut seen: HashMap<DyadicInterval, usize> = HashMap::with_capacity(table.len());
        for (pos, t) in table.iter().enumerate() {
            if t.level() > target_depth {
                return Err(Error::InvalidDepth(format!(
                    "target {t} lies below target depth {target_depth}"
                )));
            }
            if let Some(prev) = seen.insert(*t, pos) {
                return Err(Error::NotInjective(
                    DyadicInterval::from_position(prev).to_string(),
                    DyadicInterval::from_position(pos).to_string(),
                ));
            }
        }
        Ok(RearrangementMap {
            source_depth,
            target_depth,
            table,
        })
    }

    /// Builds a map from explicit pairs; unlisted sources map to themselves.
    pub fn from_pairs(
        source_depth: u32,
        target_depth: u32,
        pairs: impl IntoIterator<Item = (DyadicInterval, DyadicInterval)>,
    ) -> Result<Self> {
        let mut table: Vec<DyadicInterval> = intervals_up_to(source_depth).collect();
        for (s, t) in pairs {
            if s.level() > source_depth {
                return Err(Error::InvalidDepth(format!(
                    "source {s} lies below source depth {source_depth}"
                )));
            }
            table[s.position()] = t;
        }
        Self::new(source_depth, target_depth, table)
    }

    pub fn source_depth(&self) -> u32 {
        self.source_depth
    }

    pub fn target_depth(&self) -> u32 {
        self.target_depth
    }

    /// `τ(I)`, or `None` when `I` lies outside `D_0^N`.
    pub fn apply(&self, i: &DyadicInterval) -> Option<DyadicInterval> {
        (i.level() <= self.source_depth).then(|| self.table[i.position()])
    }

    pub(crate) fn at(&self, pos: usize) -> DyadicInterval {
        self.table[pos]
    }

    pub fn image(&self, c: &IntervalCollection) -> Result<IntervalCollection> {
        c.iter()
            .map(|i| {
                self.apply(i)
                    .ok_or_else(|| Error::InvalidDepth(format!("{i} lies below source depth {}", self.source_depth)))
            })
            .collect()
    }

    /// `log2 γ_I` where `γ_I = |I| / |τ(I)|`.
    pub fn gamma_log2(&self, i: &DyadicInterval) -> Option<i32> {
        self.apply(i).map(|t| t.level() as i32 - i.level() as i32)
    }

    /// `γ_I = |I| / |τ(I)|` as a float (always an exact power of two).
    pub fn gamma(&self, i: &DyadicInterval) -> Option<f64> {
        self.gamma_log2(i).map(|e| (e as f64).exp2())
    }

    pub fn is_measure_preserving(&self) -> bool {
        self.pairs().all(|(s, t)| s.level() == t.level())
    }

    /// Whether `τ` permutes `D_0^N` (image equal to the domain).
    pub fn is_bijective(&self) -> bool {
        self.table.iter().all(|t| t.level() <= self.source_depth)
    }

    pub fn inverse(&self) -> Result<Self> {
        if !self.is_bijective() {
            return Err(Error::DomainMismatch);
        }
        let mut inv = vec![DyadicInterval::ROOT; self.table.len()];
        for (s, t) in self.pairs() {
            inv[t.position()] = s;
        }
        Self::new(self.source_depth, self.source_depth, inv)
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &RearrangementMap) -> Result<Self> {
        if inner.target_depth > self.source_depth {
            return Err(Error::InvalidDepth(format!(
                "inner map reaches depth {} beyond outer source depth {}",
                inner.target_depth, self.source_depth
            )));
        }
        let table = inner.table.iter().map(|t| self.table[t.position()]).collect();
        Self::new(inner.source_depth, self.target_depth, table)
    }

    pub fn pairs(&self) -> impl Iterator<Item = (DyadicInterval, DyadicInterval)> + '_ {
        self.table
            .iter()
            .enumerate()
            .map(|(p, &t)| (DyadicInterval::from_position(p), t))
    }

    pub fn domain(&self) -> impl Iterator<Item = DyadicInterval> {
        intervals_up_to(self.source_depth)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// On-disk form: only non-identity pairs are listed.
#[derive(Serialize, Deserialize)]
struct PermutationFile {
    source_depth: u32,
    target_depth: u32,
    #[serde(default)]
    pairs: Vec<(DyadicInterval, DyadicInterval)>,
}

impl From<RearrangementMap> for PermutationFile {
    fn from(m: RearrangementMap) -> Self {
        PermutationFile {
            source_depth: m.source_depth,
            target_depth: m.target_depth,
            pairs: m.pairs().filter(|(s, t)| s != t).collect(),
        }
    }
}

impl TryFrom<PermutationFile> for RearrangementMap {
    type Error = Error;
    fn try_from(f: PermutationFile) -> Result<Self> {
        RearrangementMap::from_pairs(f.source_depth, f.target_depth, f.pairs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn di(k: u32, i: u64) -> DyadicInterval {
        DyadicInterval::new(k, i).unwrap()
    }

    #[test]
    fn rejects_non_injective_tables() {
        let err = RearrangementMap::from_pairs(1, 1, [(di(1, 0), di(1, 1))]).unwrap_err();
        assert!(matches!(err, Error::NotInjective(_, _)));
    }

    #[test]
    fn rejects_targets_outside_grid() {
        let err = RearrangementMap::from_pairs(1, 1, [(di(1, 0), di(2, 0))]).unwrap_err();
        assert!(matches!(err, Error::InvalidDepth(_)));
    }

    #[test]
    fn gamma_is_power_of_two() {
        let m = RearrangementMap::from_pairs(1, 2, [(di(1, 0), di(2, 3)), (di(0, 0), di(1, 0))]).unwrap();
        assert_eq!(m.gamma(&di(1, 0)), Some(2.0));
        assert_eq!(m.gamma(&di(0, 0)), Some(2.0));
        assert_eq!(m.gamma(&di(1, 1)), Some(1.0));
        assert!(!m.is_measure_preserving());
        assert!(!m.is_bijective());
        assert!(matches!(m.inverse(), Err(Error::DomainMismatch)));
    }

    #[test]
    fn file_format() {
        let m = parity_shift(2);
        let json = serde_json::to_value(&m).unwrap();
        assert_eq!(json["source_depth"], 2);
        assert_eq!(json["pairs"][0], serde_json::json!(["1:0", "1:1"]));
        let back: RearrangementMap = serde_json::from_value(json).unwrap();
        assert_eq!(back, m);
        let partial = r#"{"source_depth": 1, "target_depth": 1, "pairs": [["1:0","1:1"],["1:1","1:0"]]}"#;
        let m = RearrangementMap::from_json(partial).unwrap();
        assert_eq!(m.apply(&di(0, 0)), Some(di(0, 0)));
        assert_eq!(m.apply(&di(1, 1)), Some(di(1, 0)));
    }

    #[test]
    fn inverse_and_compose() {
        let m = block_perm(&[di(1, 0), di(1, 1)], 3).unwrap();
        let inv = m.inverse().unwrap();
        assert_eq!(inv.compose(&m).unwrap(), identity(3));
        assert_eq!(m.compose(&inv).unwrap(), identity(3));
    }
}
