//! Seeded random generators for test inputs: expansions, maps, atoms and
//! adapted sequences.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dyadic::{count_up_to, level_intervals, DyadicInterval, IntervalCollection};
use crate::extrapolation::AdaptedSequence;
use crate::rearrangement::RearrangementMap;
use crate::scalar::Scalar;
use crate::space::{Atom, HaarExpansion, SpaceSpec, StepFunction, StoppingTimeGrid};

/// Independent reproducible stream `stream` of the generator seeded by `seed`.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn gaussian<T: Scalar, R: Rng + ?Sized>(rng: &mut R) -> T {
    T::of(rng.sample::<f64, _>(StandardNormal))
}

/// Standard normal coefficients on `D_0^depth`; the mean is zero unless `with_mean`.
pub fn random_expansion<T: Scalar, R: Rng + ?Sized>(
    rng: &mut R,
    space: SpaceSpec,
    depth: u32,
    with_mean: bool,
) -> HaarExpansion<T> {
    let mut f = HaarExpansion::zeros(space, depth);
    f.coeffs_mut().iter_mut().for_each(|x| *x = gaussian(rng));
    if with_mean {
        f.mean_mut().iter_mut().for_each(|x| *x = gaussian(rng));
    }
    f
}

pub fn random_step<T: Scalar, R: Rng + ?Sized>(rng: &mut R, space: SpaceSpec, resolution: u32) -> StepFunction<T> {
    let mut f = StepFunction::zeros(space, resolution);
    f.values_mut().iter_mut().for_each(|x| *x = gaussian(rng));
    f
}

/// A uniformly random permutation of each level of `D_0^depth`.
pub fn random_measure_preserving<R: Rng + ?Sized>(rng: &mut R, depth: u32) -> RearrangementMap {
    let mut table = Vec::with_capacity(count_up_to(depth));
    for level in 0..=depth {
        let mut row: Vec<DyadicInterval> = level_intervals(level).collect();
        row.shuffle(rng);
        table.extend(row);
    }
    RearrangementMap::new(depth, depth, table).expect("level permutations are injective")
}

/// Uniform signs on `D_0^depth`, breadth-first.
pub fn random_signs<R: Rng + ?Sized>(rng: &mut R, depth: u32) -> Vec<i8> {
    (0..count_up_to(depth))
        .map(|_| if rng.random_bool(0.5) { 1 } else { -1 })
        .collect()
}

/// Random disjoint intervals of levels `≤ depth`, found by a stopping walk down the tree.
pub fn random_stopping_set<R: Rng + ?Sized>(rng: &mut R, depth: u32) -> IntervalCollection {
    let mut out = IntervalCollection::new();
    let mut stack = vec![DyadicInterval::from_position(0)];
    while let Some(i) = stack.pop() {
        let u: f64 = rng.random();
        if u < 0.35 || i.level() == depth {
            if rng.random_bool(0.8) {
                out.insert(i);
            }
        } else if u < 0.45 && i.level() > 0 {
            continue;
        } else {
            stack.push(i.right_child());
            stack.push(i.left_child());
        }
    }
    out
}

/// A valid atom: on each stopping interval `J` a random function with zero mean on `J`,
/// scaled so `‖a‖_∞ P(ν < ∞)` is uniform in `(0, 1]`.
pub fn random_atom<T: Scalar, R: Rng + ?Sized>(rng: &mut R, space: SpaceSpec, depth: u32) -> Atom<T> {
    let stops = random_stopping_set(rng, depth);
    let nu = StoppingTimeGrid::on_intervals(depth, &stops).expect("disjoint intervals");
    let mut f = HaarExpansion::<T>::zeros(space, depth);
    for j in stops.iter() {
        for i in j.shadow(depth).expect("level within depth").iter() {
            let pos = i.position();
            f.coeffs_mut()[pos * space.dim()..(pos + 1) * space.dim()]
                .iter_mut()
                .for_each(|x| *x = gaussian(rng));
        }
    }
    let sup = f.synthesize().sup_norm();
    let measure = T::of(nu.finite_measure());
    if sup > T::zero() {
        let target = T::of(rng.random_range(0.05..=1.0));
        f = f.scaled(target / (sup * measure));
    }
    Atom::new(f, nu).expect("matching depths")
}

/// `0 ≤ Z_0 ≤ … ≤ Z_n` with sparse exponential increments.
pub fn random_adapted_sequence<T: Scalar, R: Rng + ?Sized>(rng: &mut R, n: u32) -> AdaptedSequence<T> {
    let mut levels: Vec<Vec<T>> = Vec::with_capacity(n as usize + 1);
    let draw = |rng: &mut R| -> T {
        if rng.random_bool(0.5) {
            T::zero()
        } else {
            T::of(-rng.random::<f64>().max(1e-300).ln())
        }
    };
    levels.push(vec![draw(rng)]);
    for k in 1..=n {
        let prev = &levels[k as usize - 1];
        let row = (0..1usize << k).map(|i| prev[i / 2] + draw(rng)).collect();
        levels.push(row);
    }
    AdaptedSequence::new(levels).expect("nondecreasing by construction")
}
