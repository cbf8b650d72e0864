//! Comparators, comparator networks and their action on 0/1 vectors.
//!
//! Channels are 0-based. A [`BinaryVector`] on `n` channels is stored as an
//! integer with channel 0 at the least significant bit, and an [`OutputSet`]
//! is the characteristic bitset over all `2^n` such integers.

use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use smallvec::SmallVec;

use crate::error::{Error, Result};

/// Hard cap on the channel count. `2^16` bits keeps an output set at 8 KiB.
pub const MAX_CHANNELS: usize = 16;

/// A comparator `(i, j)`: after it, the value on `i` is not greater than the
/// value on `j`. It is standard when `i < j`; a generalized comparator with
/// `i > j` therefore orders its two channels descending.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Comparator {
    i: u8,
    j: u8,
}

impl Hash for Comparator {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u16(u16::from(self.i) << 8 | u16::from(self.j));
    }

    /// Four comparators per word; networks are hashed constantly.
    fn hash_slice<H: Hasher>(data: &[Self], state: &mut H) {
        for chunk in data.chunks(4) {
            let word = chunk
                .iter()
                .fold(0u64, |acc, c| acc << 16 | u64::from(c.i) << 8 | u64::from(c.j));
            state.write_u64(word);
        }
    }
}

impl Comparator {
    pub fn new(i: usize, j: usize) -> Result<Self> {
        if i == j {
            return Err(Error::SameChannel(i));
        }
        for channel in [i, j] {
            if channel >= MAX_CHANNELS {
                return Err(Error::ChannelOutOfRange {
                    channel,
                    n: MAX_CHANNELS,
                });
            }
        }
        Ok(Comparator { i: i as u8, j: j as u8 })
    }

    #[inline]
    pub fn i(self) -> usize {
        self.i as usize
    }

    #[inline]
    pub fn j(self) -> usize {
        self.j as usize
    }

    #[inline]
    pub fn is_standard(self) -> bool {
        self.i < self.j
    }

    /// Both channels are below `n`.
    #[inline]
    pub fn within(self, n: usize) -> bool {
        self.i() < n && self.j() < n
    }

    /// The comparator with its channels exchanged.
    pub fn reversed(self) -> Self {
        Comparator { i: self.j, j: self.i }
    }

    /// Swaps the values on `i` and `j` exactly when `x[i] > x[j]`.
    pub fn apply(self, x: BinaryVector) -> Result<BinaryVector> {
        if !self.within(x.len()) {
            return Err(Error::ChannelOutOfRange {
                channel: self.i().max(self.j()),
                n: x.len(),
            });
        }
        Ok(BinaryVector {
            bits: self.apply_bits(x.bits),
            len: x.len,
        })
    }

    #[inline]
    pub(crate) fn apply_bits(self, x: u32) -> u32 {
        let (bi, bj) = (1u32 << self.i, 1u32 << self.j);
        if x & bi != 0 && x & bj == 0 {
            x ^ bi ^ bj
        } else {
            x
        }
    }
}

impl fmt::Display for Comparator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.i, self.j)
    }
}

/// All standard comparators on `n` channels in lexicographic order.
pub fn all_standard_comparators(n: usize) -> Vec<Comparator> {
    let n = n.min(MAX_CHANNELS);
    let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            out.push(Comparator { i: i as u8, j: j as u8 });
        }
    }
    out
}

/// A sequence of comparators. The channel count is not part of the value; it
/// is supplied to each operation.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Network(SmallVec<[Comparator; 24]>);

impl Network {
    pub fn new() -> Self {
        Network(SmallVec::new())
    }

    pub fn from_comparators(comparators: Vec<Comparator>) -> Self {
        Network(SmallVec::from_vec(comparators))
    }

    /// Builds a network from `(i, j)` pairs, validating each comparator.
    pub fn from_pairs(pairs: &[(usize, usize)]) -> Result<Self> {
        pairs
            .iter()
            .map(|&(i, j)| Comparator::new(i, j))
            .collect::<Result<SmallVec<_>>>()
            .map(Network)
    }

    pub fn comparators(&self) -> &[Comparator] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn last(&self) -> Option<Comparator> {
        self.0.last().copied()
    }

    pub fn push(&mut self, c: Comparator) {
        self.0.push(c);
    }

    /// `self ; c`
    pub fn extended(&self, c: Comparator) -> Network {
        let mut v = SmallVec::with_capacity(self.0.len() + 1);
        v.extend_from_slice(&self.0);
        v.push(c);
        Network(v)
    }

    /// `self ; other`
    pub fn concat(&self, other: &Network) -> Network {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Network(v)
    }

    /// Every comparator lies within `n` channels.
    pub fn spans(&self, n: usize) -> bool {
        self.0.iter().all(|c| c.within(n))
    }

    /// Spans `n` channels and every comparator is standard.
    pub fn is_standard(&self, n: usize) -> bool {
        self.0.iter().all(|c| c.within(n) && c.is_standard())
    }

    pub(crate) fn check_spans(&self, n: usize) -> Result<()> {
        check_capacity(n)?;
        match self.0.iter().find(|c| !c.within(n)) {
            Some(c) => Err(Error::ChannelOutOfRange {
                channel: c.i().max(c.j()),
                n,
            }),
            None => Ok(()),
        }
    }

    #[inline]
    pub(crate) fn apply_bits(&self, x: u32) -> u32 {
        self.0.iter().fold(x, |x, c| c.apply_bits(x))
    }
}

impl fmt::Display for Network {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut text = Vec::with_capacity(2 + 5 * self.0.len());
        self.push_text(&mut text);
        f.write_str(std::str::from_utf8(&text).expect("ASCII"))
    }
}

impl Network {
    /// Appends the canonical text form; the only one the parser accepts.
    pub(crate) fn push_text(&self, out: &mut Vec<u8>) {
        fn push_channel(out: &mut Vec<u8>, c: u8) {
            if c >= 10 {
                out.push(b'0' + c / 10);
            }
            out.push(b'0' + c % 10);
        }
        out.push(b'[');
        for (idx, c) in self.0.iter().enumerate() {
            if idx > 0 {
                out.push(b',');
            }
            push_channel(out, c.i);
            out.push(b'-');
            push_channel(out, c.j);
        }
        out.push(b']');
    }
}

impl FromStr for Network {
    type Err = Error;

    /// Parses `[i-j,i-j,...]` with no whitespace and no leading zeros.
    fn from_str(s: &str) -> Result<Self> {
        Network::parse_bytes(s.as_bytes()).map_err(|reason| Error::Parse {
            input: s.to_string(),
            reason,
        })
    }
}

impl Network {
    pub(crate) fn parse_bytes(s: &[u8]) -> std::result::Result<Network, &'static str> {
        let body = s
            .strip_prefix(b"[")
            .and_then(|s| s.strip_suffix(b"]"))
            .ok_or("expected brackets")?;
        let mut comparators = SmallVec::with_capacity(body.len() / 4 + 1);
        if body.is_empty() {
            return Ok(Network(comparators));
        }
        let mut pos = 0;
        loop {
            let i = scan_nat(body, &mut pos).ok_or("bad channel index")?;
            if body.get(pos) != Some(&b'-') {
                return Err("expected i-j");
            }
            pos += 1;
            let j = scan_nat(body, &mut pos).ok_or("bad channel index")?;
            comparators.push(Comparator::new(i, j).map_err(|_| "invalid comparator")?);
            match body.get(pos) {
                None => return Ok(Network(comparators)),
                Some(b',') => pos += 1,
                Some(_) => return Err("expected i-j"),
            }
        }
    }
}

/// Strict natural-number literal: ASCII digits, no sign, no leading zeros
/// except for `0` itself.
pub(crate) fn parse_nat(s: &str) -> Option<usize> {
    let mut pos = 0;
    scan_nat(s.as_bytes(), &mut pos).filter(|_| pos == s.len())
}

/// Reads a strict natural-number literal starting at `pos`, leaving `pos`
/// after its last digit.
pub(crate) fn scan_nat(bytes: &[u8], pos: &mut usize) -> Option<usize> {
    let start = *pos;
    let mut value: usize = 0;
    while let Some(&b) = bytes.get(*pos) {
        if !b.is_ascii_digit() {
            break;
        }
        value = value.checked_mul(10)?.checked_add(usize::from(b - b'0'))?;
        *pos += 1;
    }
    let digits = *pos - start;
    if digits == 0 || (digits > 1 && bytes[start] == b'0') {
        return None;
    }
    Some(value)
}

pub(crate) fn check_capacity(n: usize) -> Result<()> {
    if n > MAX_CHANNELS {
        Err(Error::Capacity { n, cap: MAX_CHANNELS })
    } else {
        Ok(())
    }
}

/// A 0/1 vector of fixed length, channel 0 at bit 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BinaryVector {
    bits: u32,
    len: u8,
}

impl BinaryVector {
    pub fn new(len: usize, bits: u32) -> Result<Self> {
        check_capacity(len)?;
        if u64::from(bits) >> len != 0 {
            return Err(Error::LengthMismatch {
                expected: len,
                found: 32 - bits.leading_zeros() as usize,
            });
        }
        Ok(BinaryVector { bits, len: len as u8 })
    }

    pub fn from_slice(values: &[bool]) -> Result<Self> {
        let bits = values
            .iter()
            .enumerate()
            .fold(0u32, |acc, (i, &b)| acc | (u32::from(b) << i));
        Self::new(values.len(), bits)
    }

    pub fn bits(self) -> u32 {
        self.bits
    }

    pub fn len(self) -> usize {
        self.len as usize
    }

    pub fn is_empty(self) -> bool {
        self.len == 0
    }

    pub fn get(self, channel: usize) -> bool {
        (self.bits >> channel) & 1 == 1
    }

    pub fn weight(self) -> u32 {
        self.bits.count_ones()
    }
}

impl fmt::Display for BinaryVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in 0..self.len() {
            f.write_str(if self.get(c) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for BinaryVector {
    type Err = Error;

    /// Channel 0 is the leftmost character.
    fn from_str(s: &str) -> Result<Self> {
        let values = s
            .chars()
            .map(|ch| match ch {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::Parse {
                    input: s.to_string(),
                    reason: "expected only 0 and 1",
                }),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_slice(&values)
    }
}

/// No 1 precedes a 0.
pub fn is_sorted(x: BinaryVector) -> bool {
    is_sorted_bits(x.len(), x.bits)
}

#[inline]
pub(crate) fn is_sorted_bits(n: usize, x: u32) -> bool {
    let full = low_mask(n);
    let zeros = n as u32 - x.count_ones();
    x == full ^ low_mask(zeros as usize)
}

#[inline]
fn low_mask(n: usize) -> u32 {
    if n >= 32 {
        u32::MAX
    } else {
        (1u32 << n) - 1
    }
}

pub fn run_network(n: usize, network: &Network, x: BinaryVector) -> Result<BinaryVector> {
    network.check_spans(n)?;
    if x.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            found: x.len(),
        });
    }
    Ok(BinaryVector {
        bits: network.apply_bits(x.bits),
        len: x.len,
    })
}

/// Decides the sorting property by running every one of the `2^n` inputs
/// through the network, independently of the bitset machinery.
pub fn is_sorting_network(n: usize, network: &Network) -> Result<bool> {
    network.check_spans(n)?;
    Ok((0..1u32 << n).all(|x| is_sorted_bits(n, network.apply_bits(x))))
}

/// Lifts the comparator rule to integers: swap iff `v[i] > v[j]`.
pub fn sort_integers<T: Ord + Copy>(n: usize, network: &Network, values: &[T]) -> Result<Vec<T>> {
    network.check_spans(n)?;
    if values.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            found: values.len(),
        });
    }
    let mut v = values.to_vec();
    for c in network.comparators() {
        if v[c.i()] > v[c.j()] {
            v.swap(c.i(), c.j());
        }
    }
    Ok(v)
}

pub fn outputs(n: usize, network: &Network) -> Result<OutputSet> {
    network.check_spans(n)?;
    let mut set = OutputSet::full(n)?;
    for &c in network.comparators() {
        set.apply_comparator(c);
    }
    Ok(set)
}

/// `LOW_PATTERNS[b]` has bit `k` set iff bit `b` of `k` is set.
const LOW_PATTERNS: [u64; 6] = [
    0xAAAA_AAAA_AAAA_AAAA,
    0xCCCC_CCCC_CCCC_CCCC,
    0xF0F0_F0F0_F0F0_F0F0,
    0xFF00_FF00_FF00_FF00,
    0xFFFF_0000_FFFF_0000,
    0xFFFF_FFFF_0000_0000,
];

/// Word `w` of the bitset of all indices whose channel `b` is 1.
#[inline]
fn channel_word(b: usize, w: usize) -> u64 {
    if b < 6 {
        LOW_PATTERNS[b]
    } else if (w >> (b - 6)) & 1 == 1 {
        u64::MAX
    } else {
        0
    }
}

type Words = SmallVec<[u64; 4]>;

/// The set `outputs(C)` as a `2^n`-bit characteristic bitset.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct OutputSet {
    n: u8,
    words: Words,
}

impl OutputSet {
    fn word_count(n: usize) -> usize {
        ((1usize << n) / 64).max(1)
    }

    pub fn empty(n: usize) -> Result<Self> {
        check_capacity(n)?;
        Ok(OutputSet {
            n: n as u8,
            words: smallvec::smallvec![0; Self::word_count(n)],
        })
    }

    /// All `2^n` vectors.
    pub fn full(n: usize) -> Result<Self> {
        let mut set = Self::empty(n)?;
        if n < 6 {
            set.words[0] = (1u64 << (1 << n)) - 1;
        } else {
            set.words.iter_mut().for_each(|w| *w = u64::MAX);
        }
        Ok(set)
    }

    pub fn channels(&self) -> usize {
        self.n as usize
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    #[inline]
    pub fn contains_bits(&self, x: u32) -> bool {
        let x = x as usize;
        (x >> self.n) == 0 && (self.words[x / 64] >> (x % 64)) & 1 == 1
    }

    pub fn contains(&self, x: BinaryVector) -> bool {
        x.len() == self.channels() && self.contains_bits(x.bits)
    }

    pub fn insert(&mut self, x: BinaryVector) -> Result<()> {
        if x.len() != self.channels() {
            return Err(Error::LengthMismatch {
                expected: self.channels(),
                found: x.len(),
            });
        }
        self.insert_bits(x.bits);
        Ok(())
    }

    #[inline]
    pub(crate) fn insert_bits(&mut self, x: u32) {
        let x = x as usize;
        self.words[x / 64] |= 1u64 << (x % 64);
    }

    pub fn is_subset(&self, other: &OutputSet) -> bool {
        self.n == other.n && self.words.iter().zip(other.words.iter()).all(|(a, b)| a & !b == 0)
    }

    /// Members as integer encodings, ascending.
    pub fn iter_bits(&self) -> impl Iterator<Item = u32> + '_ {
        self.words.iter().enumerate().flat_map(|(w, &word)| {
            let mut rest = word;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let b = rest.trailing_zeros();
                rest &= rest - 1;
                Some(w as u32 * 64 + b)
            })
        })
    }

    pub fn iter(&self) -> impl Iterator<Item = BinaryVector> + '_ {
        let len = self.n;
        self.iter_bits().map(move |bits| BinaryVector { bits, len })
    }

    /// Every member is sorted.
    pub fn all_sorted(&self) -> bool {
        let n = self.channels();
        self.iter_bits().all(|x| is_sorted_bits(n, x))
    }

    /// Word-parallel image of the set under `c`. Returns whether any member
    /// was changed; `false` means `c` is redundant after this set.
    pub fn apply_comparator(&mut self, c: Comparator) -> bool {
        debug_assert!(c.within(self.channels()));
        let (i, j) = (c.i(), c.j());
        let mut moved: Words = SmallVec::with_capacity(self.words.len());
        let mut any = false;
        for (w, word) in self.words.iter_mut().enumerate() {
            let m = *word & channel_word(i, w) & !channel_word(j, w);
            *word &= !m;
            any |= m != 0;
            moved.push(m);
        }
        if !any {
            return false;
        }
        // Moving a member clears bit i and sets bit j of its index.
        let delta = (1i64 << j) - (1i64 << i);
        shift_or_into(&mut self.words, &moved, delta);
        true
    }

    /// Exchanges the roles of channels `i` and `j` in every member.
    pub(crate) fn swap_channels(&mut self, i: usize, j: usize) {
        let (i, j) = (i.min(j), i.max(j));
        if i == j {
            return;
        }
        let words = &mut self.words[..];
        if j < 6 {
            // Within each word: bit x pairs with x + d.
            let d = (1 << j) - (1 << i);
            let m = LOW_PATTERNS[i] & !LOW_PATTERNS[j];
            for word in words.iter_mut() {
                let t = (*word ^ (*word >> d)) & m;
                *word ^= t ^ (t << d);
            }
        } else if i < 6 {
            // Word w pairs with w + 2^(j-6), bit b of the lower with b - 2^i.
            let (stride, s) = (1 << (j - 6), 1 << i);
            let m = !LOW_PATTERNS[i];
            for w in (0..words.len()).filter(|w| w & stride == 0) {
                let t = ((words[w] >> s) ^ words[w + stride]) & m;
                words[w + stride] ^= t;
                words[w] ^= t << s;
            }
        } else {
            let (bi, bj) = (1 << (i - 6), 1 << (j - 6));
            for w in (0..words.len()).filter(|w| w & bi != 0 && w & bj == 0) {
                words.swap(w, w - bi + bj);
            }
        }
    }

    /// Whether `c` would move any member, without modifying the set.
    pub fn would_swap(&self, c: Comparator) -> bool {
        let (i, j) = (c.i(), c.j());
        self.words
            .iter()
            .enumerate()
            .any(|(w, &word)| word & channel_word(i, w) & !channel_word(j, w) != 0)
    }
}

/// `dst |= src shifted by delta bit positions` (left when positive).
fn shift_or_into(dst: &mut [u64], src: &[u64], delta: i64) {
    let len = src.len();
    let amount = delta.unsigned_abs() as usize;
    let (ws, bs) = (amount / 64, amount % 64);
    if delta > 0 {
        for w in (ws..len).rev() {
            let mut v = src[w - ws] << bs;
            if bs > 0 && w > ws {
                v |= src[w - ws - 1] >> (64 - bs);
            }
            dst[w] |= v;
        }
    } else {
        for w in 0..len - ws {
            let mut v = src[w + ws] >> bs;
            if bs > 0 && w + ws + 1 < len {
                v |= src[w + ws + 1] << (64 - bs);
            }
            dst[w] |= v;
        }
    }
}
