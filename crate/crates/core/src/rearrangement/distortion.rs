//! How far `τ` distorts Carleson constants: `sup ⟦τ(E)⟧/⟦E⟧` and `sup ⟦E⟧/⟦τ(E)⟧`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dyadic::{count_up_to, DyadicInterval, IntervalCollection};
use crate::error::{Error, Result};
use crate::exact::{ratio_serde, Dyadic, ExactRatio};

use super::RearrangementMap;

#[derive(Clone, Copy, Debug)]
pub enum DistortionMode {
    /// All non-empty `E ⊆ D_0^N`; requires a bijection and at most `cap` intervals.
    Exact { cap: usize },
    /// Random collections with inclusion probabilities swept over `(0,1)`.
    Sampled { samples: usize, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Distortion {
    /// `sup ⟦τ(E)⟧ / ⟦E⟧`.
    #[serde(with = "ratio_serde")]
    pub forward: ExactRatio,
    pub forward_witness: IntervalCollection,
    /// `sup ⟦E⟧ / ⟦τ(E)⟧`.
    #[serde(with = "ratio_serde")]
    pub backward: ExactRatio,
    pub backward_witness: IntervalCollection,
    pub exact: bool,
}

const INCLUSION_SWEEP: [f64; 8] = [0.05, 0.1, 0.2, 0.35, 0.5, 0.65, 0.8, 0.95];

struct Best {
    ratio: ExactRatio,
    witness: IntervalCollection,
}

impl Best {
    fn offer(slot: &mut Option<Best>, ratio: ExactRatio, witness: impl FnOnce() -> IntervalCollection) {
        match slot {
            Some(b) if ratio < b.ratio => {}
            Some(b) if ratio == b.ratio => {
                let w = witness();
                if w < b.witness {
                    b.witness = w;
                }
            }
            _ => {
                *slot = Some(Best {
                    ratio,
                    witness: witness(),
                })
            }
        }
    }
}

pub fn carleson_distortion(tau: &RearrangementMap, mode: DistortionMode) -> Result<Distortion> {
    let (fwd, bwd, exact) = match mode {
        DistortionMode::Exact { cap } => {
            if !tau.is_bijective() {
                return Err(Error::DomainMismatch);
            }
            let count = count_up_to(tau.source_depth());
            if count > cap || count > 30 {
                return Err(Error::TooLarge { count, cap });
            }
            let (f, b) = exhaustive(tau, count);
            (f, b, true)
        }
        DistortionMode::Sampled { samples, seed } => {
            let (f, b) = sampled(tau, samples, seed)?;
            (f, b, false)
        }
    };
    let (fwd, bwd) = (fwd.expect("non-empty grid"), bwd.expect("non-empty grid"));
    Ok(Distortion {
        forward: fwd.ratio,
        forward_witness: fwd.witness,
        backward: bwd.ratio,
        backward_witness: bwd.witness,
        exact,
    })
}

// Carleson constant of a subset of D_0^N given as a position mask, in one
// bottom-up pass over positions (children of p are 2p+1 and 2p+2).
fn carleson_of_mask(mask: u64, depth: u32, acc: &mut [u64]) -> Dyadic {
    let count = acc.len();
    let mut best = Dyadic::ZERO;
    for p in (0..count).rev() {
        let lvl = DyadicInterval::from_position(p).level();
        let mut s = 0;
        if 2 * p + 2 < count {
            s = acc[2 * p + 1] + acc[2 * p + 2];
        }
        if mask >> p & 1 == 1 {
            s += 1 << (depth - lvl);
            best = best.max(Dyadic::new(s as u128, depth - lvl));
        }
        acc[p] = s;
    }
    best
}

fn exhaustive(tau: &RearrangementMap, count: usize) -> (Option<Best>, Option<Best>) {
    let depth = tau.source_depth();
    let target: Vec<usize> = (0..count).map(|p| tau.at(p).position()).collect();
    let mut acc = vec![0u64; count];
    let (mut fwd, mut bwd) = (None, None);
    let collection = |mask: u64| -> IntervalCollection {
        (0..count)
            .filter(|b| mask >> b & 1 == 1)
            .map(DyadicInterval::from_position)
            .collect()
    };
    for mask in 1u64..(1u64 << count) {
        let mut image = 0u64;
        let mut bits = mask;
        while bits != 0 {
            image |= 1 << target[bits.trailing_zeros() as usize];
            bits &= bits - 1;
        }
        let ce = carleson_of_mask(mask, depth, &mut acc);
        let ct = carleson_of_mask(image, depth, &mut acc);
        Best::offer(&mut fwd, ct.ratio(ce), || collection(mask));
        Best::offer(&mut bwd, ce.ratio(ct), || collection(mask));
    }
    (fwd, bwd)
}

fn sampled(tau: &RearrangementMap, samples: usize, seed: u64) -> Result<(Option<Best>, Option<Best>)> {
    if samples == 0 {
        return Err(Error::InvalidBudget);
    }
    let depth = tau.source_depth();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut fwd, mut bwd) = (None, None);
    let mut consider = |e: IntervalCollection| -> Result<()> {
        let ce = e.carleson_constant()?;
        let ct = tau.image(&e)?.carleson_constant()?;
        Best::offer(&mut fwd, ct.ratio(ce), || e.clone());
        Best::offer(&mut bwd, ce.ratio(ct), || e.clone());
        Ok(())
    };
    // Shadows are the extremal collections for a single root.
    for i in tau.domain() {
        consider(i.shadow(depth)?)?;
    }
    for s in 0..samples {
        let prob = INCLUSION_SWEEP[s % INCLUSION_SWEEP.len()];
        let mut e: IntervalCollection = tau.domain().filter(|_| rng.random_bool(prob)).collect();
        if e.is_empty() {
            let count = count_up_to(depth);
            e.insert(DyadicInterval::from_position(rng.random_range(0..count)));
        }
        consider(e)?;
    }
    Ok((fwd, bwd))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rearrangement::{identity, parity_shift};
    use num_rational::Ratio;

    fn di(k: u32, i: u64) -> DyadicInterval {
        DyadicInterval::new(k, i).unwrap()
    }

    #[test]
    fn identity_has_no_distortion() {
        let d = carleson_distortion(&identity(3), DistortionMode::Exact { cap: 15 }).unwrap();
        assert_eq!(d.forward, Ratio::from_integer(1));
        assert_eq!(d.backward, Ratio::from_integer(1));
        let d = carleson_distortion(&identity(4), DistortionMode::Sampled { samples: 100, seed: 1 }).unwrap();
        assert_eq!(
            (d.forward, d.backward),
            (Ratio::from_integer(1), Ratio::from_integer(1))
        );
    }

    #[test]
    fn mask_pass_matches_collection_pass() {
        let depth = 3;
        let count = count_up_to(depth);
        let mut acc = vec![0; count];
        for mask in (1u64..(1 << count)).step_by(37) {
            let c: IntervalCollection = (0..count)
                .filter(|b| mask >> b & 1 == 1)
                .map(DyadicInterval::from_position)
                .collect();
            assert_eq!(carleson_of_mask(mask, depth, &mut acc), c.carleson_constant().unwrap());
        }
    }

    #[test]
    fn parity_chain() {
        let tau = parity_shift(2);
        let e: IntervalCollection = [di(0, 0), di(1, 0), di(2, 0)].into_iter().collect();
        let img = tau.image(&e).unwrap();
        assert_eq!(img, [di(0, 0), di(1, 1), di(2, 0)].into_iter().collect());
        assert_eq!(e.carleson_constant().unwrap(), Dyadic::new(7, 2));
        assert_eq!(img.carleson_constant().unwrap(), Dyadic::new(7, 2));
    }

    #[test]
    fn non_bijective_rejected_in_exact_mode() {
        let m = RearrangementMap::from_pairs(1, 2, [(di(1, 0), di(2, 0))]).unwrap();
        assert!(matches!(
            carleson_distortion(&m, DistortionMode::Exact { cap: 15 }),
            Err(Error::DomainMismatch)
        ));
        assert!(carleson_distortion(&m, DistortionMode::Sampled { samples: 10, seed: 0 }).is_ok());
    }
}
