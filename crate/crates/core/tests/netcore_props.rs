mod common;

use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use common::{bubble, random_network, random_sorting_network};
use sortnet_core::{is_sorted, is_sorting_network, outputs, run_network, sort_integers, BinaryVector, Network};

fn arb_network(max_n: usize, max_len: usize) -> impl Strategy<Value = (usize, Network)> {
    (1..=max_n, 0..=max_len, any::<u64>()).prop_map(|(n, len, seed)| {
        let mut rng = StdRng::seed_from_u64(seed);
        (n, random_network(&mut rng, n, len))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn comparators_preserve_weight((n, c) in arb_network(8, 20), bits in any::<u32>()) {
        let x = BinaryVector::new(n, bits & ((1 << n) - 1)).unwrap();
        let y = run_network(n, &c, x).unwrap();
        prop_assert_eq!(x.weight(), y.weight());
    }

    #[test]
    fn sorted_vectors_are_fixed_points((n, c) in arb_network(8, 20), ones in 0usize..=8) {
        let ones = ones.min(n);
        // Channel 0 is leftmost, so a sorted vector has its ones on the
        // highest channels.
        let bits = ((1u32 << ones) - 1) << (n - ones);
        let x = BinaryVector::new(n, bits).unwrap();
        prop_assert!(is_sorted(x));
        prop_assert_eq!(run_network(n, &c, x).unwrap(), x);
    }

    #[test]
    fn output_count_bounds_and_sorting((n, c) in arb_network(7, 25)) {
        let out = outputs(n, &c).unwrap();
        prop_assert!(out.len() > n);
        prop_assert_eq!(out.len() == n + 1, is_sorting_network(n, &c).unwrap());
    }

    #[test]
    fn outputs_are_compositional((n, c1) in arb_network(7, 12), seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let len = rng.gen_range(0..12);
        let c2 = random_network(&mut rng, n, len);
        let mut image = sortnet_core::OutputSet::empty(n).unwrap();
        for x in outputs(n, &c1).unwrap().iter() {
            image.insert(run_network(n, &c2, x).unwrap()).unwrap();
        }
        prop_assert_eq!(outputs(n, &c1.concat(&c2)).unwrap(), image);
    }
}

#[test]
fn zero_one_lift_on_integers() {
    let mut rng = StdRng::seed_from_u64(11);
    for n in 1..=8 {
        let corpus: Vec<Network> = (0..20).map(|_| random_sorting_network(&mut rng, n)).collect();
        for c in &corpus {
            assert!(is_sorting_network(n, c).unwrap());
        }
        for case in 0..10_000 {
            let c = &corpus[case % corpus.len()];
            // A narrow range forces plenty of ties.
            let v: Vec<i32> = (0..n).map(|_| rng.gen_range(-5..5)).collect();
            let sorted = sort_integers(n, c, &v).unwrap();
            assert!(sorted.windows(2).all(|w| w[0] <= w[1]), "n={n} {c} {v:?} -> {sorted:?}");
            let mut expected = v.clone();
            expected.sort();
            assert_eq!(sorted, expected);
        }
    }
}

#[test]
fn bubble_sort_sorts_and_one_comparator_less_does_not() {
    for n in 2..=8 {
        let b = bubble(n);
        assert!(is_sorting_network(n, &b).unwrap());
        let shorter = Network::from_comparators(b.comparators()[1..].to_vec());
        assert!(!is_sorting_network(n, &shorter).unwrap());
    }
}
