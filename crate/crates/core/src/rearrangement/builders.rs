use crate::dyadic::{intervals_up_to, DyadicInterval};
use crate::error::{Error, Result};

use super::RearrangementMap;

pub fn identity(depth: u32) -> RearrangementMap {
    RearrangementMap::new(depth, depth, intervals_up_to(depth).collect()).expect("identity is injective")
}

/// Fixes even levels and swaps the two halves of `[0,1)` on odd levels.
/// The result is an involution.
pub fn parity_shift(depth: u32) -> RearrangementMap {
    let table = intervals_up_to(depth)
        .map(|i| {
            let k = i.level();
            if k % 2 == 0 {
                return i;
            }
            let half = 1u64 << (k - 1);
            let index = if i.in_left_half() {
                i.index() + half
            } else {
                i.index() - half
            };
            DyadicInterval::new_unchecked(k, index)
        })
        .collect();
    RearrangementMap::new(depth, depth, table).expect("parity shift is injective")
}

/// Cyclic block permutation on disjoint equal-length blocks `I_0, …, I_n`.
///
/// For each relative level `k = 1..=n`, the level-`k` subintervals of
/// `I_0, …, I_k` are moved `I_0 → I_1 → … → I_k → I_0`, keeping their
/// position inside the block. Everything else is fixed. Relative levels that
/// fall below `depth` are dropped, which is the restriction of the full map.
pub fn block_perm(blocks: &[DyadicInterval], depth: u32) -> Result<RearrangementMap> {
    let mut table: Vec<DyadicInterval> = intervals_up_to(depth).collect();
    apply_block_system(&mut table, blocks, depth)?;
    RearrangementMap::new(depth, depth, table)
}

fn apply_block_system(table: &mut [DyadicInterval], blocks: &[DyadicInterval], depth: u32) -> Result<()> {
    if blocks.len() < 2 {
        return Err(Error::InvalidBlocks("need at least two blocks".into()));
    }
    let m = blocks[0].level();
    if blocks.iter().any(|b| b.level() != m) {
        return Err(Error::InvalidBlocks("blocks differ in length".into()));
    }
    for (a, x) in blocks.iter().enumerate() {
        if blocks[..a].contains(x) {
            return Err(Error::InvalidBlocks(format!("block {x} repeated")));
        }
    }
    if m > depth {
        return Err(Error::InvalidBlocks(format!(
            "blocks at level {m} lie below depth {depth}"
        )));
    }
    let n = blocks.len() - 1;
    for k in 1..=n as u32 {
        let level = m + k;
        if level > depth {
            break;
        }
        for j in 0..=k as usize {
            let from = blocks[j];
            let to = blocks[(j + 1) % (k as usize + 1)];
            for r in 0..(1u64 << k) {
                let src = DyadicInterval::new_unchecked(level, (from.index() << k) + r);
                let dst = DyadicInterval::new_unchecked(level, (to.index() << k) + r);
                table[src.position()] = dst;
            }
        }
    }
    Ok(())
}

/// Blocks `I_0^n, …, I_n^n` of the glued permutation: `n+1` consecutive
/// intervals at the left end of `[1 - 2^{1-n}, 1 - 2^{-n})`.
pub fn glued_block_system(n: u32) -> Vec<DyadicInterval> {
    assert!(n >= 1);
    let c = block_offset_bits(n);
    let base = ((1u64 << n) - 2) << c;
    (0..=n as u64)
        .map(|j| DyadicInterval::new_unchecked(n + c, base + j))
        .collect()
}

/// Smallest depth at which block system `n` is present in full.
pub fn glued_depth_for(n: u32) -> u32 {
    n + block_offset_bits(n) + n
}

fn block_offset_bits(n: u32) -> u32 {
    // ceil(log2(n + 1))
    32 - n.leading_zeros()
}

/// Restriction to `D_0^depth` of the map gluing block permutations `1, 2, …`
/// on `[0,1/2), [1/2,3/4), [3/4,7/8), …`.
pub fn glued_blocks(depth: u32) -> RearrangementMap {
    let mut table: Vec<DyadicInterval> = intervals_up_to(depth).collect();
    let mut n = 1;
    loop {
        let blocks = glued_block_system(n);
        if blocks[0].level() >= depth {
            break;
        }
        apply_block_system(&mut table, &blocks, depth).expect("glued blocks are valid");
        n += 1;
    }
    RearrangementMap::new(depth, depth, table).expect("glued permutation is injective")
}
