#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;

use sortnet_core::{all_standard_comparators, Network, Permutation};

pub fn random_network(rng: &mut impl Rng, n: usize, len: usize) -> Network {
    let cs = all_standard_comparators(n);
    if cs.is_empty() {
        return Network::new();
    }
    Network::from_comparators((0..len).map(|_| *cs.choose(rng).unwrap()).collect())
}

pub fn random_perm(rng: &mut impl Rng, n: usize) -> Permutation {
    let mut images: Vec<u32> = (0..n as u32).collect();
    images.shuffle(rng);
    Permutation::validate(n, &images).unwrap()
}

/// Bubble sort on `n` channels: always a sorting network.
pub fn bubble(n: usize) -> Network {
    let mut pairs = Vec::new();
    for pass in 0..n {
        for i in 0..n.saturating_sub(pass + 1) {
            pairs.push((i, i + 1));
        }
    }
    Network::from_pairs(&pairs).unwrap()
}

/// Some comparators followed by bubble sort; sorts regardless of the prefix.
pub fn random_sorting_network(rng: &mut impl Rng, n: usize) -> Network {
    let len = rng.gen_range(0..=2 * n);
    random_network(rng, n, len).concat(&bubble(n))
}

pub fn network(s: &str) -> Network {
    s.parse().unwrap()
}
