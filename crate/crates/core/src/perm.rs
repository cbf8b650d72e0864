//! Channel permutations and standardization of generalized networks.
//!
//! A permutation acts by push-forward: the value on channel `i` moves to
//! channel `p(i)`. The same convention is used for vectors, output sets and
//! networks, so that `p(outputs(C)) = outputs(p(C))`.

use std::fmt;
use std::str::FromStr;

use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::netcore::BinaryVector;
use crate::netcore::{check_capacity, scan_nat, Comparator, Network, OutputSet, MAX_CHANNELS};

/// A raw, untrusted image list as read from an oracle.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct ImageList(pub Vec<u32>);

impl fmt::Display for ImageList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (idx, v) in self.0.iter().enumerate() {
            if idx > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v}")?;
        }
        f.write_str("]")
    }
}

impl FromStr for ImageList {
    type Err = Error;

    /// `[a,b,...]`, strict natural-number literals, no whitespace. The
    /// contents are not validated as a permutation.
    fn from_str(s: &str) -> Result<Self> {
        ImageList::parse_bytes(s.as_bytes()).map_err(|reason| Error::Parse {
            input: s.to_string(),
            reason,
        })
    }
}

impl ImageList {
    pub(crate) fn parse_bytes(s: &[u8]) -> std::result::Result<ImageList, &'static str> {
        parse_images(s).map(|images| ImageList(images.into_vec()))
    }
}

/// The `[a,b,...]` grammar, without allocating for up to 16 entries.
pub(crate) fn parse_images(s: &[u8]) -> std::result::Result<SmallVec<[u32; MAX_CHANNELS]>, &'static str> {
    let body = s
        .strip_prefix(b"[")
        .and_then(|s| s.strip_suffix(b"]"))
        .ok_or("expected brackets")?;
    let mut images = SmallVec::new();
    if body.is_empty() {
        return Ok(images);
    }
    let mut pos = 0;
    loop {
        let v = scan_nat(body, &mut pos)
            .and_then(|v| u32::try_from(v).ok())
            .ok_or("bad image value")?;
        images.push(v);
        match body.get(pos) {
            None => return Ok(images),
            Some(b',') => pos += 1,
            Some(_) => return Err("bad image value"),
        }
    }
}

/// Why an image list is not a permutation of `{0..n-1}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum InvalidPermutation {
    Length { expected: usize, found: usize },
    OutOfRange { value: u32, n: usize },
    Duplicate { value: u32 },
}

impl fmt::Display for InvalidPermutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InvalidPermutation::Length { expected, found } => {
                write!(f, "length {found}, expected {expected}")
            }
            InvalidPermutation::OutOfRange { value, n } => write!(f, "image {value} not below {n}"),
            InvalidPermutation::Duplicate { value } => write!(f, "image {value} repeated"),
        }
    }
}

/// A bijection on `{0..n-1}`, stored as its image array.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Permutation {
    images: SmallVec<[u8; MAX_CHANNELS]>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation {
            images: (0..n.min(MAX_CHANNELS) as u8).collect(),
        }
    }

    /// Accepts `images` iff it has length `n`, every entry is below `n`, and
    /// no entry repeats.
    pub fn validate(n: usize, images: &[u32]) -> std::result::Result<Self, InvalidPermutation> {
        if images.len() != n {
            return Err(InvalidPermutation::Length {
                expected: n,
                found: images.len(),
            });
        }
        let mut seen = 0u64;
        let mut out = SmallVec::new();
        for &value in images {
            if value as usize >= n || n > MAX_CHANNELS {
                return Err(InvalidPermutation::OutOfRange { value, n });
            }
            if seen >> value & 1 == 1 {
                return Err(InvalidPermutation::Duplicate { value });
            }
            seen |= 1 << value;
            out.push(value as u8);
        }
        Ok(Permutation { images: out })
    }

    pub fn transposition(n: usize, i: usize, j: usize) -> Result<Self> {
        check_capacity(n)?;
        if i == j {
            return Err(Error::SameChannel(i));
        }
        for channel in [i, j] {
            if channel >= n {
                return Err(Error::ChannelOutOfRange { channel, n });
            }
        }
        let mut p = Self::identity(n);
        p.images.swap(i, j);
        Ok(p)
    }

    pub(crate) fn from_images_unchecked(images: &[u8]) -> Self {
        debug_assert!(Self::validate(images.len(), &images.iter().map(|&v| v as u32).collect::<Vec<_>>()).is_ok());
        Permutation {
            images: SmallVec::from_slice(images),
        }
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    #[inline]
    pub fn image(&self, channel: usize) -> usize {
        self.images[channel] as usize
    }

    pub fn images(&self) -> &[u8] {
        &self.images
    }

    pub fn to_image_list(&self) -> ImageList {
        ImageList(self.images.iter().map(|&v| u32::from(v)).collect())
    }

    pub fn inverse(&self) -> Self {
        let mut inv: SmallVec<[u8; MAX_CHANNELS]> = smallvec::smallvec![0u8; self.images.len()];
        for (i, &v) in self.images.iter().enumerate() {
            inv[v as usize] = i as u8;
        }
        Permutation { images: inv }
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Permutation) -> Self {
        assert_eq!(self.len(), other.len());
        Permutation {
            images: other.images.iter().map(|&v| self.images[v as usize]).collect(),
        }
    }

    #[inline]
    pub(crate) fn apply_bits(&self, x: u32) -> u32 {
        let mut out = 0;
        let mut rest = x;
        while rest != 0 {
            let c = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            out |= 1 << self.images[c];
        }
        out
    }

    /// `result[p(i)] = x[i]`.
    pub fn apply_to_vector(&self, x: BinaryVector) -> Result<BinaryVector> {
        if x.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                found: x.len(),
            });
        }
        BinaryVector::new(x.len(), self.apply_bits(x.bits()))
    }

    pub fn apply_to_output_set(&self, set: &OutputSet) -> Result<OutputSet> {
        if set.channels() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                found: set.channels(),
            });
        }
        let mut out = set.clone();
        self.permute_in_place(&mut out);
        Ok(out)
    }

    /// Applies `self` to a set of matching width as a product of at most
    /// `n - 1` channel swaps.
    pub(crate) fn permute_in_place(&self, set: &mut OutputSet) {
        debug_assert_eq!(set.channels(), self.len());
        // Peel off p = rest ∘ (i j) with (i j) chosen so that rest fixes i.
        let mut rest = self.images.clone();
        for i in 0..rest.len() {
            if rest[i] as usize != i {
                let j = (i + 1..rest.len()).find(|&j| rest[j] as usize == i).expect("bijection");
                set.swap_channels(i, j);
                rest.swap(i, j);
            }
        }
    }

    /// Comparator-wise relabeling; the result is in general a generalized
    /// network.
    pub fn apply_to_network(&self, network: &Network) -> Result<Network> {
        network.check_spans(self.len())?;
        Ok(Network::from_comparators(
            network.comparators().iter().map(|c| relabel(c, &self.images)).collect(),
        ))
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.to_image_list().fmt(f)
    }
}

fn relabel(c: &Comparator, images: &[u8]) -> Comparator {
    // Images of distinct channels are distinct and in range.
    Comparator::new(images[c.i()] as usize, images[c.j()] as usize).expect("bijective relabeling")
}

/// Turns a generalized network into a standard one of the same length.
///
/// Scanning left to right, each reversed comparator `(i, j)` with `i > j` is
/// replaced by `(j, i)` and the labels `i` and `j` are exchanged in the rest
/// of the network. Sorting networks stay sorting networks.
pub fn standardize(network: &Network) -> Network {
    // `labels[c]` is the current name of original channel `c` in the suffix.
    let mut labels: [u8; MAX_CHANNELS] = std::array::from_fn(|c| c as u8);
    let mut out = Vec::with_capacity(network.len());
    for c in network.comparators() {
        let c = relabel(c, &labels);
        if c.is_standard() {
            out.push(c);
        } else {
            out.push(c.reversed());
            for label in labels.iter_mut() {
                if *label as usize == c.i() {
                    *label = c.j() as u8;
                } else if *label as usize == c.j() {
                    *label = c.i() as u8;
                }
            }
        }
    }
    Network::from_comparators(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netcore::{is_sorting_network, outputs};

    fn net(s: &str) -> Network {
        s.parse().unwrap()
    }

    fn perm(n: usize, images: &[u32]) -> Permutation {
        Permutation::validate(n, images).unwrap()
    }

    /// The recursive definition, transcribed directly.
    fn standardize_recursive(cs: &[Comparator]) -> Vec<Comparator> {
        match cs.split_first() {
            None => vec![],
            Some((c, rest)) if c.is_standard() => {
                let mut v = vec![*c];
                v.extend(standardize_recursive(rest));
                v
            }
            Some((c, rest)) => {
                let swap = |x: usize| {
                    if x == c.i() {
                        c.j()
                    } else if x == c.j() {
                        c.i()
                    } else {
                        x
                    }
                };
                let permuted: Vec<Comparator> = rest
                    .iter()
                    .map(|d| Comparator::new(swap(d.i()), swap(d.j())).unwrap())
                    .collect();
                let mut v = vec![c.reversed()];
                v.extend(standardize_recursive(&permuted));
                v
            }
        }
    }

    #[test]
    fn validation_verdicts() {
        assert_eq!(perm(4, &[2, 1, 0, 3]), Permutation::transposition(4, 0, 2).unwrap());
        assert_eq!(
            Permutation::validate(3, &[0, 0, 2]),
            Err(InvalidPermutation::Duplicate { value: 0 })
        );
        assert_eq!(
            Permutation::validate(3, &[0, 1]),
            Err(InvalidPermutation::Length { expected: 3, found: 2 })
        );
        assert_eq!(
            Permutation::validate(3, &[0, 1, 3]),
            Err(InvalidPermutation::OutOfRange { value: 3, n: 3 })
        );
        assert_eq!(
            Permutation::validate(2, &[u32::MAX, 0]),
            Err(InvalidPermutation::OutOfRange { value: u32::MAX, n: 2 })
        );
    }

    /// Every image list over `{0..n}` of length n, via a mixed-radix counter.
    fn all_lists(n: usize) -> Vec<Vec<u32>> {
        let total = (n + 1).pow(n as u32);
        (0..total)
            .map(|mut code| {
                (0..n)
                    .map(|_| {
                        let d = code % (n + 1);
                        code /= n + 1;
                        d as u32
                    })
                    .collect()
            })
            .collect()
    }

    /// The k-th permutation in factorial-number-system order.
    fn nth_permutation(n: usize, mut k: usize) -> Vec<u32> {
        let mut pool: Vec<u32> = (0..n as u32).collect();
        let mut fact = (1..n).product::<usize>().max(1);
        let mut out = Vec::new();
        for rem in (1..=n).rev() {
            let idx = k / fact;
            k %= fact;
            out.push(pool.remove(idx));
            if rem > 1 {
                fact /= rem - 1;
            }
        }
        out
    }

    #[test]
    fn accepts_exactly_the_factorial_many_lists() {
        for n in 0..=6 {
            let mut expected: Vec<Vec<u32>> = (0..(1..=n).product::<usize>()).map(|k| nth_permutation(n, k)).collect();
            expected.sort();
            // Lists with an entry equal to n exercise the range check.
            let mut accepted: Vec<Vec<u32>> = all_lists(n)
                .into_iter()
                .filter(|l| Permutation::validate(n, l).is_ok())
                .collect();
            accepted.sort();
            assert_eq!(accepted, expected, "n={n}");
        }
    }

    #[test]
    fn identity_and_inverse() {
        let id = Permutation::identity(3);
        let x: BinaryVector = "110".parse().unwrap();
        assert_eq!(id.apply_to_vector(x).unwrap(), x);
        assert!(Permutation::identity(0).is_empty());
        assert_eq!(id.inverse(), id);
        assert_eq!(perm(3, &[1, 2, 0]).inverse(), perm(3, &[2, 0, 1]));
        let t = Permutation::transposition(5, 1, 4).unwrap();
        assert_eq!(t.inverse(), t);
    }

    #[test]
    fn transpositions() {
        assert_eq!(
            Permutation::transposition(4, 0, 2).unwrap().to_image_list(),
            ImageList(vec![2, 1, 0, 3])
        );
        assert_eq!(
            Permutation::transposition(6, 1, 4).unwrap(),
            Permutation::transposition(6, 4, 1).unwrap()
        );
        let t = Permutation::transposition(6, 1, 4).unwrap();
        assert_eq!(t.compose(&t), Permutation::identity(6));
        assert!(Permutation::transposition(4, 2, 2).is_err());
        assert!(Permutation::transposition(4, 2, 4).is_err());
    }

    #[test]
    fn vector_action() {
        let x: BinaryVector = "0110".parse().unwrap();
        assert_eq!(Permutation::identity(4).apply_to_vector(x).unwrap(), x);
        let t = Permutation::transposition(2, 0, 1).unwrap();
        assert_eq!(t.apply_to_vector("10".parse().unwrap()).unwrap(), "01".parse().unwrap());
        // Push-forward: channel 0's value lands on channel 2.
        let p = perm(3, &[2, 0, 1]);
        assert_eq!(p.apply_to_vector("100".parse().unwrap()).unwrap().to_string(), "001");
        assert!(p.apply_to_vector(x).is_err());
    }

    #[test]
    fn output_set_action() {
        let mut s = OutputSet::empty(2).unwrap();
        s.insert("01".parse().unwrap()).unwrap();
        let t = Permutation::transposition(2, 0, 1).unwrap();
        let image = t.apply_to_output_set(&s).unwrap();
        assert_eq!(image.iter().map(|x| x.to_string()).collect::<Vec<_>>(), vec!["10"]);
        let full = outputs(4, &net("[0-1,2-3]")).unwrap();
        assert_eq!(Permutation::identity(4).apply_to_output_set(&full).unwrap(), full);
    }

    #[test]
    fn network_action() {
        let c = net("[0-1,1-3,0-2]");
        assert_eq!(Permutation::identity(4).apply_to_network(&c).unwrap(), c);
        let t = Permutation::transposition(4, 0, 2).unwrap();
        assert_eq!(t.apply_to_network(&net("[0-1]")).unwrap(), net("[2-1]"));
        assert!(t.apply_to_network(&net("[0-4]")).is_err());
    }

    #[test]
    fn standardize_examples() {
        assert_eq!(standardize(&net("[1-0]")), net("[0-1]"));
        assert_eq!(standardize(&net("[0-1,2-0]")), net("[0-1,0-2]"));
        let a = net("[0-1,2-3,0-3,0-2,1-3,1-2]");
        assert_eq!(standardize(&a), a);
    }

    #[test]
    fn equivalence_of_the_two_four_channel_networks() {
        let a = net("[0-1,2-3,0-3,0-2,1-3,1-2]");
        let b = net("[0-1,2-3,1-2,0-1,2-3,1-2]");
        // The relabeling (0 2)(1 3) is an involution, so both directions use it.
        let p = perm(4, &[2, 3, 0, 1]);
        let from_b = standardize(&p.apply_to_network(&b).unwrap());
        let from_a = standardize(&p.apply_to_network(&a).unwrap());
        assert!(is_sorting_network(4, &from_b).unwrap());
        assert!(is_sorting_network(4, &from_a).unwrap());
        // Each direction yields the other network with its two leading
        // (independent) comparators exchanged.
        assert_eq!(from_b, net("[2-3,0-1,0-3,0-2,1-3,1-2]"));
        assert_eq!(from_a, net("[2-3,0-1,1-2,0-1,2-3,1-2]"));
    }

    #[test]
    fn iterative_and_recursive_standardization_agree() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        for _ in 0..2000 {
            let n = rng.gen_range(2..=8);
            let len = rng.gen_range(0..15);
            let cs: Vec<Comparator> = (0..len)
                .map(|_| loop {
                    let (i, j) = (rng.gen_range(0..n), rng.gen_range(0..n));
                    if i != j {
                        break Comparator::new(i, j).unwrap();
                    }
                })
                .collect();
            let network = Network::from_comparators(cs.clone());
            let s = standardize(&network);
            assert_eq!(s.comparators(), standardize_recursive(&cs).as_slice());
            assert!(s.is_standard(n));
            assert_eq!(s.len(), network.len());
            assert_eq!(standardize(&s), s);
        }
    }

    #[test]
    fn image_list_literal() {
        assert_eq!("[2,1,0,3]".parse::<ImageList>().unwrap(), ImageList(vec![2, 1, 0, 3]));
        assert_eq!("[]".parse::<ImageList>().unwrap(), ImageList(vec![]));
        assert_eq!(ImageList(vec![0, 10]).to_string(), "[0,10]");
        for bad in ["[", "[1,]", "[01]", "[1, 2]", "1,2", "[99999999999]"] {
            assert!(bad.parse::<ImageList>().is_err(), "{bad:?}");
        }
    }
}
