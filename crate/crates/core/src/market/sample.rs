//! Seeded random draws from bounded-denominator rational grids.

use super::{KernelSelection, ProbVector, ScenarioTree};
use crate::rat::Rat;
use num_bigint::BigInt;
use rand::Rng;
use std::collections::BTreeMap;

/// A rational in `(0, 1]` (or `[0, 1]` when `allow_zero`) of the form
/// `k / denominator_bound`.
pub fn rational_in_unit(rng: &mut impl Rng, denominator_bound: u64, allow_zero: bool) -> Rat {
    let lo = if allow_zero { 0 } else { 1 };
    let num = rng.gen_range(lo..=denominator_bound);
    Rat::new(BigInt::from(num), BigInt::from(denominator_bound))
}

/// A probability vector from the integer grid: weights in
/// `0..=denominator_bound`, at least one positive, normalized by the total.
/// `zero_mass` is the chance (numerator over denominator) that an outcome
/// is dropped outright.
pub fn prob_vector(
    rng: &mut impl Rng,
    len: usize,
    denominator_bound: u64,
    zero_mass: (u32, u32),
) -> ProbVector {
    assert!(len >= 1 && denominator_bound >= 1);
    let (zn, zd) = zero_mass;
    let mut raw = vec![0u64; len];
    for w in raw.iter_mut() {
        let drop = zn > 0 && rng.gen_range(0..zd) < zn;
        if !drop {
            *w = rng.gen_range(0..=denominator_bound);
        }
    }
    if raw.iter().all(|&w| w == 0) {
        let keep = rng.gen_range(0..len);
        raw[keep] = rng.gen_range(1..=denominator_bound);
    }
    let total: u64 = raw.iter().sum();
    ProbVector::new(
        raw.into_iter()
            .map(|w| Rat::new(BigInt::from(w), BigInt::from(total)))
            .collect(),
    )
}

/// A kernel selection with grid-drawn convex weights at every node.
pub fn kernel_selection(
    tree: &ScenarioTree,
    rng: &mut impl Rng,
    denominator_bound: u64,
) -> KernelSelection {
    let mut weights = BTreeMap::new();
    for node in tree.non_terminal_nodes() {
        let k = tree.generators(&node).len();
        let w = prob_vector(rng, k, denominator_bound, (0, 1));
        weights.insert(node, w.weights);
    }
    KernelSelection { weights }
}
