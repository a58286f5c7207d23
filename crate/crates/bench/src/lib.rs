//! Seeded workloads shared by the benchmarks.

use hitree::pac::sample_labeled_triplet;
use hitree::tree_ops::random_binary_tree_with;
use hitree::Constraint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `m` constraints sampled from one random binary tree on `n` points.
pub fn consistent(n: usize, m: usize, seed: u64) -> Vec<Constraint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t = random_binary_tree_with(n, &mut rng).expect("n >= 1");
    (0..m)
        .map(|_| sample_labeled_triplet(&t, &mut rng).expect("n >= 3"))
        .collect()
}

/// A consistent workload with one label flipped, which usually makes it unsatisfiable.
pub fn mutated(n: usize, m: usize, seed: u64) -> Vec<Constraint> {
    let mut cs = consistent(n, m, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let i = rng.random_range(0..cs.len());
    let t = cs[i].triplet().expect("triplet constraint");
    let cur = t.orientation_index(&cs[i]).expect("own orientation");
    cs[i] = t.orientation((cur + 1) % 3);
    cs
}

/// Random union pairs over `0..n`.
pub fn pairs(n: usize, count: usize, seed: u64) -> Vec<(usize, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| (rng.random_range(0..n), rng.random_range(0..n)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use hitree::builder::build_binary_raw;

    #[test]
    fn workloads_are_seeded_and_consistent() {
        assert_eq!(consistent(20, 40, 3), consistent(20, 40, 3));
        assert!(build_binary_raw(20, &consistent(20, 40, 3))
            .unwrap()
            .is_tree());
        assert_eq!(mutated(20, 40, 3).len(), 40);
        assert!(pairs(10, 5, 1).iter().all(|&(a, b)| a < 10 && b < 10));
    }
}
