//! Semenov ratios `|τ(C)*| / |C*|`: exhaustive search, the shadow bound, and
//! a certified heuristic lower bound for grids too large to enumerate.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dyadic::{count_up_to, DyadicInterval, IntervalCollection};
use crate::error::{Error, Result};
use crate::exact::{ratio_serde, ratio_to_f64, ExactRatio};

use super::RearrangementMap;

/// Exhaustive searches enumerate at most this many intervals (`D_0^3`).
pub const DEFAULT_EXACT_CAP: usize = 15;

// Keeps the per-level bitsets of the shadow pass within a few tens of MB.
const SHADOW_MAX_DEPTH: u32 = 14;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SemenovResult {
    #[serde(with = "ratio_serde")]
    pub ratio: ExactRatio,
    pub witness: IntervalCollection,
    /// `true` when `ratio` is the exact supremum, `false` for a certified lower bound.
    pub exact: bool,
}

impl SemenovResult {
    pub fn value(&self) -> f64 {
        ratio_to_f64(&self.ratio)
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct HeuristicBudget {
    pub anneal_steps: usize,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for HeuristicBudget {
    fn default() -> Self {
        HeuristicBudget {
            anneal_steps: 20_000,
            restarts: 8,
            seed: 0,
        }
    }
}

/// `|τ(C)*| / |C*|` computed from the collections themselves.
pub fn semenov_ratio(tau: &RearrangementMap, c: &IntervalCollection) -> Result<ExactRatio> {
    let image = tau.image(c)?;
    Ok(image.union_measure()?.ratio(c.union_measure()?))
}

fn require_measure_preserving(tau: &RearrangementMap) -> Result<()> {
    if tau.is_measure_preserving() {
        Ok(())
    } else {
        Err(Error::NotMeasurePreserving)
    }
}

// Lexicographic order of the ascending position lists encoded by two masks.
fn lex_cmp(mut a: u64, mut b: u64) -> Ordering {
    loop {
        match (a, b) {
            (0, 0) => return Ordering::Equal,
            (0, _) => return Ordering::Less,
            (_, 0) => return Ordering::Greater,
            _ => {
                let (la, lb) = (a.trailing_zeros(), b.trailing_zeros());
                if la != lb {
                    return la.cmp(&lb);
                }
                a &= a - 1;
                b &= b - 1;
            }
        }
    }
}

fn mask_collection(mask: u64) -> IntervalCollection {
    (0..64)
        .filter(|b| mask >> b & 1 == 1)
        .map(|b| DyadicInterval::from_position(b as usize))
        .collect()
}

// (numerator, denominator) comparison of two nonnegative ratios.
fn cmp_ratio(a: (u64, u64), b: (u64, u64)) -> Ordering {
    (a.0 as u128 * b.1 as u128).cmp(&(b.0 as u128 * a.1 as u128))
}

/// Exact `sup_C |τ(C)*| / |C*|` over all non-empty `C ⊆ D_0^N`, with the
/// canonically smallest maximizing collection as certificate.
pub fn semenov_exact(tau: &RearrangementMap, cap: usize) -> Result<SemenovResult> {
    require_measure_preserving(tau)?;
    let count = count_up_to(tau.source_depth());
    if count > cap || count > 30 {
        return Err(Error::TooLarge { count, cap });
    }
    let res = tau.source_depth();
    let cell_mask = |i: DyadicInterval| -> u64 {
        let r = i.cells(res);
        (((1u128 << r.len()) - 1) << r.start) as u64
    };
    let src: Vec<u64> = (0..count)
        .map(|p| cell_mask(DyadicInterval::from_position(p)))
        .collect();
    let img: Vec<u64> = (0..count).map(|p| cell_mask(tau.at(p))).collect();

    let mut best = (0u64, 1u64);
    let mut best_mask = 0u64;
    for subset in 1u64..(1u64 << count) {
        let (mut s, mut t, mut bits) = (0u64, 0u64, subset);
        while bits != 0 {
            let b = bits.trailing_zeros() as usize;
            s |= src[b];
            t |= img[b];
            bits &= bits - 1;
        }
        let r = (t.count_ones() as u64, s.count_ones() as u64);
        match cmp_ratio(r, best) {
            Ordering::Greater => {
                best = r;
                best_mask = subset;
            }
            Ordering::Equal if lex_cmp(subset, best_mask) == Ordering::Less => {
                best_mask = subset;
            }
            _ => {}
        }
    }
    let witness = mask_collection(best_mask);
    let ratio = semenov_ratio(tau, &witness)?;
    debug_assert_eq!(ratio, ExactRatio::new(best.0 as u128, best.1 as u128));
    Ok(SemenovResult {
        ratio,
        witness,
        exact: true,
    })
}

/// Bitset over the cells of a uniform grid.
#[derive(Clone)]
struct CellSet(Vec<u64>);

impl CellSet {
    fn empty(cells: usize) -> Self {
        CellSet(vec![0; cells.div_ceil(64)])
    }

    fn insert_range(&mut self, r: std::ops::Range<usize>) {
        for c in r {
            self.0[c / 64] |= 1 << (c % 64);
        }
    }

    fn union_with(&mut self, other: &CellSet) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a |= b;
        }
    }

    fn len(&self) -> u64 {
        self.0.iter().map(|w| w.count_ones() as u64).sum()
    }
}

/// Exact `sup_I |τ(Q(I) ∩ D_0^N)*| / |I|`; a lower bound for the Semenov constant.
pub fn shadow_semenov(tau: &RearrangementMap) -> Result<SemenovResult> {
    require_measure_preserving(tau)?;
    let depth = tau.source_depth();
    if depth > SHADOW_MAX_DEPTH {
        return Err(Error::TooLarge {
            count: count_up_to(depth),
            cap: count_up_to(SHADOW_MAX_DEPTH),
        });
    }
    let cells = 1usize << depth;
    // Image unions of shadows, built one level at a time from the bottom.
    let mut below: Vec<CellSet> = Vec::new();
    let mut best: Option<((u64, u64), DyadicInterval)> = None;
    for level in (0..=depth).rev() {
        let mut current = Vec::with_capacity(1 << level);
        for index in 0..(1u64 << level) {
            let i = DyadicInterval::new_unchecked(level, index);
            let mut set = CellSet::empty(cells);
            set.insert_range(tau.at(i.position()).cells(depth));
            if level < depth {
                set.union_with(&below[2 * index as usize]);
                set.union_with(&below[2 * index as usize + 1]);
            }
            let r = (set.len(), 1u64 << (depth - level));
            let better = match &best {
                None => true,
                Some((b, bi)) => match cmp_ratio(r, *b) {
                    Ordering::Greater => true,
                    Ordering::Equal => i < *bi,
                    Ordering::Less => false,
                },
            };
            if better {
                best = Some((r, i));
            }
            current.push(set);
        }
        below = current;
    }
    let (_, root) = best.expect("grid is non-empty");
    let witness = root.shadow(depth)?;
    Ok(SemenovResult {
        ratio: semenov_ratio(tau, &witness)?,
        witness,
        exact: true,
    })
}

// Inclusion-vector state with per-cell coverage counts for O(|I|) updates.
struct SearchState<'a> {
    src_cells: &'a [std::ops::Range<usize>],
    img_cells: &'a [std::ops::Range<usize>],
    member: Vec<bool>,
    size: usize,
    src: Vec<u32>,
    img: Vec<u32>,
    src_covered: u64,
    img_covered: u64,
}

impl<'a> SearchState<'a> {
    fn new(src_cells: &'a [std::ops::Range<usize>], img_cells: &'a [std::ops::Range<usize>], cells: usize) -> Self {
        SearchState {
            src_cells,
            img_cells,
            member: vec![false; src_cells.len()],
            size: 0,
            src: vec![0; cells],
            img: vec![0; cells],
            src_covered: 0,
            img_covered: 0,
        }
    }

    fn ratio(&self) -> (u64, u64) {
        (self.img_covered, self.src_covered.max(1))
    }

    fn gain(&self, p: usize) -> (u64, u64) {
        let s = self.src_cells[p].clone().filter(|&c| self.src[c] == 0).count() as u64;
        let t = self.img_cells[p].clone().filter(|&c| self.img[c] == 0).count() as u64;
        (self.img_covered + t, self.src_covered + s)
    }

    fn toggle(&mut self, p: usize) {
        let add = !self.member[p];
        self.member[p] = add;
        if add {
            self.size += 1;
        } else {
            self.size -= 1;
        }
        for c in self.src_cells[p].clone() {
            bump(&mut self.src[c], add, &mut self.src_covered);
        }
        for c in self.img_cells[p].clone() {
            bump(&mut self.img[c], add, &mut self.img_covered);
        }
    }

    fn collection(&self) -> IntervalCollection {
        self.member
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(|(p, _)| DyadicInterval::from_position(p))
            .collect()
    }
}

fn bump(count: &mut u32, add: bool, covered: &mut u64) {
    if add {
        if *count == 0 {
            *covered += 1;
        }
        *count += 1;
    } else {
        *count -= 1;
        if *count == 0 {
            *covered -= 1;
        }
    }
}

/// Certified lower bound for the Semenov constant: greedy growth from every
/// singleton followed by simulated annealing over inclusion vectors. The
/// returned ratio is recomputed exactly from the witness.
pub fn semenov_heuristic(tau: &RearrangementMap, budget: HeuristicBudget) -> Result<SemenovResult> {
    require_measure_preserving(tau)?;
    let depth = tau.source_depth();
    let count = count_up_to(depth);
    let cells = 1usize << depth;
    let src_cells: Vec<_> = (0..count)
        .map(|p| DyadicInterval::from_position(p).cells(depth))
        .collect();
    let img_cells: Vec<_> = (0..count).map(|p| tau.at(p).cells(depth)).collect();

    let greedy_starts = count.min(255);
    let greedy: Vec<IntervalCollection> = (0..greedy_starts)
        .into_par_iter()
        .map(|start| {
            let mut st = SearchState::new(&src_cells, &img_cells, cells);
            st.toggle(start);
            loop {
                let mut pick: Option<(usize, (u64, u64))> = None;
                for p in (0..count).filter(|&p| !st.member[p]) {
                    let r = st.gain(p);
                    let reference = pick.map_or(st.ratio(), |(_, b)| b);
                    if cmp_ratio(r, reference) == Ordering::Greater {
                        pick = Some((p, r));
                    }
                }
                match pick {
                    Some((p, _)) => st.toggle(p),
                    None => break,
                }
            }
            st.collection()
        })
        .collect();
    let mut candidates = greedy;
    let seed_state = best_of(tau, &candidates)?;

    let annealed: Vec<IntervalCollection> = (0..budget.restarts)
        .into_par_iter()
        .map(|restart| {
            let mut rng =
                ChaCha8Rng::seed_from_u64(budget.seed ^ (restart as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let mut st = SearchState::new(&src_cells, &img_cells, cells);
            if restart == 0 {
                for i in &seed_state.witness {
                    st.toggle(i.position());
                }
            } else {
                for p in 0..count {
                    if rng.random_bool(0.3) {
                        st.toggle(p);
                    }
                }
                if st.size == 0 {
                    st.toggle(rng.random_range(0..count));
                }
            }
            let mut best = st.ratio();
            let mut best_set = st.collection();
            let steps = budget.anneal_steps.max(1);
            let (t0, t1): (f64, f64) = (0.3, 1e-3);
            for step in 0..steps {
                let temp = t0 * (t1 / t0).powf(step as f64 / steps as f64);
                let p = rng.random_range(0..count);
                if st.member[p] && st.size == 1 {
                    continue;
                }
                let before = st.ratio();
                st.toggle(p);
                let after = st.ratio();
                let delta = after.0 as f64 / after.1 as f64 - before.0 as f64 / before.1 as f64;
                if delta < 0.0 && rng.random::<f64>() >= (delta / temp).exp() {
                    st.toggle(p);
                    continue;
                }
                if cmp_ratio(after, best) == Ordering::Greater {
                    best = after;
                    best_set = st.collection();
                }
            }
            best_set
        })
        .collect();
    candidates.extend(annealed);
    let mut out = best_of(tau, &candidates)?;
    out.exact = false;
    Ok(out)
}

fn best_of(tau: &RearrangementMap, candidates: &[IntervalCollection]) -> Result<SemenovResult> {
    let mut best: Option<(ExactRatio, &IntervalCollection)> = None;
    for c in candidates {
        let r = semenov_ratio(tau, c)?;
        let replace = match &best {
            None => true,
            Some((b, bc)) => r > *b || (r == *b && c < *bc),
        };
        if replace {
            best = Some((r, c));
        }
    }
    let (ratio, witness) = best.ok_or(Error::EmptyCollection)?;
    Ok(SemenovResult {
        ratio,
        witness: witness.clone(),
        exact: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rearrangement::{glued_blocks, identity, parity_shift};
    use num_rational::Ratio;

    fn di(k: u32, i: u64) -> DyadicInterval {
        DyadicInterval::new(k, i).unwrap()
    }

    #[test]
    fn identity_is_one() {
        let r = semenov_exact(&identity(3), DEFAULT_EXACT_CAP).unwrap();
        assert_eq!(r.ratio, Ratio::from_integer(1));
        assert_eq!(r.witness, [di(0, 0)].into_iter().collect());
        assert_eq!(shadow_semenov(&identity(5)).unwrap().ratio, Ratio::from_integer(1));
        let h = semenov_heuristic(&identity(4), HeuristicBudget::default()).unwrap();
        assert_eq!(h.ratio, Ratio::from_integer(1));
    }

    #[test]
    fn parity_shift_depth_two() {
        let r = semenov_exact(&parity_shift(2), DEFAULT_EXACT_CAP).unwrap();
        assert_eq!(r.ratio, Ratio::from_integer(2));
        assert_eq!(r.witness, [di(1, 0), di(2, 0), di(2, 1)].into_iter().collect());
    }

    #[test]
    fn singletons_have_ratio_one() {
        let m = parity_shift(3);
        for i in m.domain() {
            let c: IntervalCollection = [i].into_iter().collect();
            assert_eq!(semenov_ratio(&m, &c).unwrap(), Ratio::from_integer(1));
        }
    }

    #[test]
    fn cap_is_enforced() {
        let err = semenov_exact(&parity_shift(4), DEFAULT_EXACT_CAP).unwrap_err();
        assert!(matches!(err, Error::TooLarge { count: 31, cap: 15 }));
    }

    #[test]
    fn rejects_non_measure_preserving() {
        let m = RearrangementMap::from_pairs(1, 2, [(di(1, 0), di(2, 0))]).unwrap();
        assert!(matches!(semenov_exact(&m, 15), Err(Error::NotMeasurePreserving)));
        assert!(matches!(shadow_semenov(&m), Err(Error::NotMeasurePreserving)));
    }

    #[test]
    fn lex_order_matches_collection_order() {
        for a in 1u64..64 {
            for b in 1u64..64 {
                assert_eq!(lex_cmp(a, b), mask_collection(a).cmp(&mask_collection(b)));
            }
        }
    }

    #[test]
    fn heuristic_below_exact() {
        for m in [parity_shift(3), glued_blocks(3)] {
            let exact = semenov_exact(&m, 15).unwrap();
            let h = semenov_heuristic(&m, HeuristicBudget::default()).unwrap();
            assert!(h.ratio <= exact.ratio);
            assert_eq!(h.ratio, exact.ratio);
            assert!(!h.exact);
        }
    }
}
