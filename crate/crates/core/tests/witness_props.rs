mod common;

use std::io::BufReader;

use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use common::random_network;
use sortnet_core::witness::{Entry, Malformed, ParseOutcome};
use sortnet_core::{parse_log, serialize_log, ImageList, LogReader, Network, SubsumptionWitness};

/// Networks may be generalized and permutations need not be valid: the log
/// format carries them regardless.
fn random_witness(rng: &mut StdRng, n: usize, k: usize) -> SubsumptionWitness {
    let flip = |c: Network, rng: &mut StdRng| {
        Network::from_comparators(
            c.comparators()
                .iter()
                .map(|&x| if rng.gen_bool(0.3) { x.reversed() } else { x })
                .collect(),
        )
    };
    let a = random_network(rng, n, k);
    let b = random_network(rng, n, k);
    let perm_len = if rng.gen_bool(0.8) { n } else { rng.gen_range(0..=n + 2) };
    SubsumptionWitness {
        k,
        subsumer: flip(a, rng),
        subsumed: flip(b, rng),
        perm: ImageList((0..perm_len).map(|_| rng.gen_range(0..20)).collect()),
    }
}

fn random_blocks(rng: &mut StdRng, n: usize) -> Vec<Vec<SubsumptionWitness>> {
    (1..=rng.gen_range(0..6))
        .map(|k| (0..rng.gen_range(0..5)).map(|_| random_witness(rng, n, k)).collect())
        .collect()
}

fn entries(bytes: &[u8]) -> Vec<Entry> {
    LogReader::new(bytes).map(|e| e.unwrap()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn serialize_then_parse_is_identity(n in 2usize..=16, seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let blocks = random_blocks(&mut rng, n);
        let log = parse_log(&serialize_log(n, &blocks)[..]).unwrap();
        prop_assert_eq!(log.n, Some(n));
        prop_assert!(log.stray.is_empty());
        prop_assert_eq!(log.blocks.len(), blocks.len());
        for (b, (parsed, written)) in log.blocks.iter().zip(&blocks).enumerate() {
            prop_assert_eq!(parsed.k, b + 1);
            let ws: Vec<_> = parsed
                .entries
                .iter()
                .map(|e| match e {
                    ParseOutcome::Witness(w) => w.clone(),
                    ParseOutcome::Skip(s) => panic!("unexpected skip {s:?}"),
                })
                .collect();
            prop_assert_eq!(&ws, written);
        }
    }

    /// Cutting a log anywhere keeps every complete line as it was and adds at
    /// most one skip marker for the cut line.
    #[test]
    fn every_prefix_parses_to_a_prefix(n in 2usize..=8, seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let bytes = serialize_log(n, &random_blocks(&mut rng, n));
        let full = entries(&bytes);
        for cut in 0..=bytes.len() {
            let prefix = &bytes[..cut];
            let complete = prefix.iter().filter(|&&b| b == b'\n').count();
            let got = entries(prefix);
            prop_assert_eq!(&got[..complete], &full[..complete]);
            match &got[complete..] {
                [] => prop_assert!(cut == 0 || bytes[cut - 1] == b'\n'),
                [Entry::Skip(s)] => {
                    prop_assert_eq!(s.reason, Malformed::Unterminated);
                    prop_assert_eq!(s.line, complete as u64 + 1);
                }
                rest => prop_assert!(false, "cut {}: trailing {:?}", cut, rest),
            }
        }
    }
}

#[test]
fn arbitrary_bytes_never_fail_to_parse() {
    let mut rng = StdRng::seed_from_u64(5);
    let alphabet = b"sortnet-witness v1 n=KS[]-,0123456789 \n\r\t\xff";
    for case in 0..10_000 {
        let bytes: Vec<u8> = if case % 2 == 0 {
            // Mutated valid logs reach the deeper parts of the grammar.
            let n = rng.gen_range(2..=8);
            let mut b = serialize_log(n, &random_blocks(&mut rng, n));
            for _ in 0..rng.gen_range(1..6) {
                let at = rng.gen_range(0..=b.len());
                match rng.gen_range(0..3) {
                    0 if at < b.len() => b[at] = alphabet[rng.gen_range(0..alphabet.len())],
                    1 if at < b.len() => {
                        b.remove(at);
                    }
                    _ => b.insert(at, alphabet[rng.gen_range(0..alphabet.len())]),
                }
            }
            b
        } else {
            let len = rng.gen_range(0..200);
            (0..len)
                .map(|_| {
                    if rng.gen_bool(0.7) {
                        alphabet[rng.gen_range(0..alphabet.len())]
                    } else {
                        rng.gen()
                    }
                })
                .collect()
        };
        // A tiny buffer splits lines across reads.
        let got: Vec<Entry> = LogReader::new(BufReader::with_capacity(3, &bytes[..]))
            .map(|e| e.unwrap())
            .collect();
        assert_eq!(got, entries(&bytes), "case {case}");
        let lines = bytes.split(|&b| b == b'\n').count() - usize::from(bytes.last().is_none_or(|&b| b == b'\n'));
        assert_eq!(got.len(), lines, "case {case}: one entry per line");
        for e in &got {
            if let Entry::Witness(w) = e {
                // Accepted witnesses are exactly their canonical text.
                let line = format!("S {} {} {}", w.subsumer, w.subsumed, w.perm);
                assert!(
                    bytes.split(|&b| b == b'\n').any(|l| l == line.as_bytes()),
                    "case {case}: {line}"
                );
            }
        }
    }
}

#[test]
fn witnesses_before_the_first_block_are_not_used() {
    let text = "sortnet-witness v1 n=3\nS [0-1] [1-2] [1,2,0]\nK 1\n";
    let log = parse_log(text.as_bytes()).unwrap();
    assert_eq!(log.witnesses().count(), 0);
    assert_eq!(log.stray.len(), 1);
    assert_eq!(log.stray[0].reason, Malformed::OutsideBlock);
}
