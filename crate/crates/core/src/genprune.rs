//! The Generate and Prune steps.
//!
//! Generation extends every candidate by one standard comparator and drops
//! extensions whose last comparator is redundant. Pruning keeps a subset `R`
//! of the candidates such that every candidate is subsumed by a member of
//! `R`, either by searching for subsumptions ([`prune_search`]) or by
//! replaying untrusted witnesses ([`prune_with_oracle`], [`OraclePruner`]).

use std::fmt;

use rayon::prelude::*;
use std::hash::Hasher;

use rustc_hash::{FxHashMap, FxHasher};

use crate::error::{Error, Result};
use crate::netcore::{self, all_standard_comparators, check_capacity, Network, OutputSet};
use crate::perm::{parse_images, ImageList, InvalidPermutation, Permutation};
use crate::witness::RawWitness;

/// A network together with its memoized output set.
#[derive(Clone, Debug)]
pub struct Candidate {
    network: Network,
    outputs: OutputSet,
}

impl Candidate {
    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn outputs(&self) -> &OutputSet {
        &self.outputs
    }

    /// For a standard network the sorted vectors are always outputs, so it
    /// sorts iff nothing else is.
    pub fn is_sorting_network(&self) -> bool {
        self.outputs.len() == self.outputs.channels() + 1
    }
}

/// Duplicate-free sequence of standard networks of common size `k` on `n`
/// channels, in generation order.
#[derive(Clone, Debug)]
pub struct CandidateSet {
    n: usize,
    k: usize,
    members: Vec<Candidate>,
}

impl CandidateSet {
    /// `{[]}`: the complete starting set.
    pub fn initial(n: usize) -> Result<Self> {
        Ok(CandidateSet {
            n,
            k: 0,
            members: vec![Candidate {
                network: Network::new(),
                outputs: OutputSet::full(n)?,
            }],
        })
    }

    /// Validates and indexes an explicit list of networks of size `k`.
    pub fn from_networks(n: usize, k: usize, networks: Vec<Network>) -> Result<Self> {
        check_capacity(n)?;
        let mut seen = FxHashMap::default();
        let mut members = Vec::with_capacity(networks.len());
        for network in networks {
            if !network.is_standard(n) {
                return Err(Error::NotStandard(n));
            }
            if network.len() != k {
                return Err(Error::LengthMismatch {
                    expected: k,
                    found: network.len(),
                });
            }
            if seen.insert(network.clone(), ()).is_some() {
                return Err(Error::Parse {
                    input: network.to_string(),
                    reason: "duplicate network in candidate set",
                });
            }
            let outputs = netcore::outputs(n, &network)?;
            members.push(Candidate { network, outputs });
        }
        Ok(CandidateSet { n, k, members })
    }

    pub fn channels(&self) -> usize {
        self.n
    }

    /// Common size of the members.
    pub fn size(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[Candidate] {
        &self.members
    }

    pub fn networks(&self) -> impl Iterator<Item = &Network> + '_ {
        self.members.iter().map(|m| &m.network)
    }

    pub fn contains(&self, network: &Network) -> bool {
        self.members.iter().any(|m| &m.network == network)
    }

    fn retain_mask(self, keep: &[bool]) -> CandidateSet {
        let members = self
            .members
            .into_iter()
            .zip(keep)
            .filter_map(|(m, &k)| k.then_some(m))
            .collect();
        CandidateSet {
            n: self.n,
            k: self.k,
            members,
        }
    }
}

/// Every member extended by every standard comparator, member order first,
/// then lexicographic comparator order.
pub fn generate(n: usize, set: &CandidateSet) -> Vec<Network> {
    let comparators = all_standard_comparators(n);
    set.networks()
        .flat_map(|network| comparators.iter().map(move |&c| network.extended(c)))
        .collect()
}

/// The last comparator `(i, j)` never swaps: every output `x` of the prefix
/// has `x[i] <= x[j]`.
pub fn is_redundant_last(n: usize, network: &Network) -> Result<bool> {
    let (&last, prefix) = network.comparators().split_last().ok_or(Error::EmptyNetwork)?;
    if !network.is_standard(n) {
        return Err(Error::NotStandard(n));
    }
    let prefix = Network::from_comparators(prefix.to_vec());
    Ok(!netcore::outputs(n, &prefix)?.would_swap(last))
}

/// [`generate`] without extensions whose last comparator is redundant.
/// Output sets are derived from the parents' memoized sets.
pub fn ogenerate(set: &CandidateSet) -> CandidateSet {
    let comparators = all_standard_comparators(set.n);
    let members = set
        .members
        .par_iter()
        .flat_map_iter(|parent| {
            comparators.iter().filter_map(move |&c| {
                if !parent.outputs.would_swap(c) {
                    return None;
                }
                let mut outputs = parent.outputs.clone();
                outputs.apply_comparator(c);
                Some(Candidate {
                    network: parent.network.extended(c),
                    outputs,
                })
            })
        })
        .collect();
    CandidateSet {
        n: set.n,
        k: set.k + 1,
        members,
    }
}

/// `p(outputs(a)) ⊆ outputs(b)`, decided on memoized sets.
pub fn subsumes_with(a: &OutputSet, b: &OutputSet, p: &Permutation) -> bool {
    if a.channels() != p.len() || b.channels() != p.len() {
        return false;
    }
    let mut image = a.clone();
    p.permute_in_place(&mut image);
    image.is_subset(b)
}

pub fn check_subsumption(n: usize, a: &Network, b: &Network, p: &Permutation) -> Result<bool> {
    let (oa, ob) = (netcore::outputs(n, a)?, netcore::outputs(n, b)?);
    if p.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            found: p.len(),
        });
    }
    Ok(subsumes_with(&oa, &ob, p))
}

/// Searches for `p` with `p(outputs(a)) ⊆ outputs(b)`.
pub fn find_subsumption(n: usize, a: &Network, b: &Network) -> Result<Option<Permutation>> {
    let (oa, ob) = (netcore::outputs(n, a)?, netcore::outputs(n, b)?);
    Ok(search_subsumption(&oa, &Profile::of(&oa), &ob, &Profile::of(&ob)))
}

/// Permutation-invariant counts used to reject subsumptions cheaply.
///
/// A permutation preserves Hamming weight, so the outputs of each weight
/// layer of `a` must map into the same layer of `b`; a channel `c` of `a` can
/// only map to a channel `d` of `b` if, in every layer, `d` carries at least
/// as many ones and at least as many zeros as `c`.
#[derive(Clone, Debug)]
pub(crate) struct Profile {
    n: usize,
    total: u32,
    layers: [u32; netcore::MAX_CHANNELS + 1],
    /// `ones[w * n + c]`: members of weight `w` with channel `c` set.
    ones: Box<[u32]>,
}

impl Profile {
    pub(crate) fn of(set: &OutputSet) -> Profile {
        let n = set.channels();
        let mut layers = [0u32; netcore::MAX_CHANNELS + 1];
        let mut ones = vec![0u32; (n + 1) * n].into_boxed_slice();
        let mut total = 0;
        for x in set.iter_bits() {
            let w = x.count_ones() as usize;
            total += 1;
            layers[w] += 1;
            let mut rest = x;
            while rest != 0 {
                let c = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                ones[w * n + c] += 1;
            }
        }
        Profile { n, total, layers, ones }
    }

    /// Channel compatibility masks `compat[c]` (bit `d` set when `c` may map
    /// to `d`), or `None` when the counts already rule out subsumption.
    fn compatibility(&self, other: &Profile) -> Option<[u32; netcore::MAX_CHANNELS]> {
        let n = self.n;
        if self.total > other.total || (0..=n).any(|w| self.layers[w] > other.layers[w]) {
            return None;
        }
        let mut compat = [0u32; netcore::MAX_CHANNELS];
        let mut reachable = 0u32;
        for (c, slot) in compat.iter_mut().enumerate().take(n) {
            for d in 0..n {
                let ok = (0..=n).all(|w| {
                    let (la, lb) = (self.layers[w], other.layers[w]);
                    if la == 0 {
                        return true;
                    }
                    let (oa, ob) = (self.ones[w * n + c], other.ones[w * n + d]);
                    oa <= ob && la - oa <= lb - ob
                });
                if ok {
                    *slot |= 1 << d;
                }
            }
            if *slot == 0 {
                return None;
            }
            reachable |= *slot;
        }
        if reachable.count_ones() as usize != n {
            return None;
        }
        Some(compat)
    }
}

/// Backtracking over channel images, restricted to compatible pairs. Each
/// output of `a` is checked as soon as all channels in its support have an
/// image, since its image is then determined.
pub(crate) fn search_subsumption(a: &OutputSet, pa: &Profile, b: &OutputSet, pb: &Profile) -> Option<Permutation> {
    let n = a.channels();
    if n != b.channels() {
        return None;
    }
    let compat = pa.compatibility(pb)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&c| (compat[c].count_ones(), c));
    let mut position = [0usize; netcore::MAX_CHANNELS];
    for (pos, &c) in order.iter().enumerate() {
        position[c] = pos;
    }
    // buckets[t]: members whose support is assigned once depth t is.
    let mut buckets: Vec<Vec<u32>> = vec![Vec::new(); n];
    for x in a.iter_bits() {
        if x == 0 {
            // Weight-0 layer sizes were compared in the profile check.
            continue;
        }
        let mut rest = x;
        let mut last = 0;
        while rest != 0 {
            let c = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            last = last.max(position[c]);
        }
        buckets[last].push(x);
    }
    let mut search = Search {
        n,
        order: &order,
        compat: &compat,
        buckets: &buckets,
        target: b,
        images: [0u8; netcore::MAX_CHANNELS],
    };
    search
        .extend(0, 0)
        .then(|| Permutation::from_images_unchecked(&search.images[..n]))
}

struct Search<'a> {
    n: usize,
    order: &'a [usize],
    compat: &'a [u32; netcore::MAX_CHANNELS],
    buckets: &'a [Vec<u32>],
    target: &'a OutputSet,
    images: [u8; netcore::MAX_CHANNELS],
}

impl Search<'_> {
    fn extend(&mut self, depth: usize, used: u32) -> bool {
        if depth == self.n {
            return true;
        }
        let c = self.order[depth];
        let mut options = self.compat[c] & !used;
        while options != 0 {
            let d = options.trailing_zeros();
            options &= options - 1;
            self.images[c] = d as u8;
            let images = &self.images;
            let consistent = self.buckets[depth].iter().all(|&x| {
                let mut image = 0u32;
                let mut rest = x;
                while rest != 0 {
                    let ch = rest.trailing_zeros() as usize;
                    rest &= rest - 1;
                    image |= 1 << images[ch];
                }
                self.target.contains_bits(image)
            });
            if consistent && self.extend(depth + 1, used | 1 << d) {
                return true;
            }
        }
        false
    }
}

/// An untrusted claim that `subsumer ≤_perm subsumed` at size step `k`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SubsumptionWitness {
    pub k: usize,
    pub subsumer: Network,
    pub subsumed: Network,
    pub perm: ImageList,
}

/// Below this many incumbents the subsumer scan stays on the calling thread.
const PARALLEL_SCAN_THRESHOLD: usize = 192;

/// Result of [`prune_search`].
#[derive(Debug)]
pub struct SearchOutcome {
    pub survivors: CandidateSet,
    pub witnesses: Vec<SubsumptionWitness>,
}

/// The double loop: each candidate is dropped if some incumbent subsumes it,
/// otherwise it becomes an incumbent and evicts every incumbent it subsumes.
/// Runs on the current rayon pool; the result does not depend on its size.
pub fn prune_search(set: CandidateSet) -> SearchOutcome {
    let profiles: Vec<Profile> = set.members.par_iter().map(|m| Profile::of(&m.outputs)).collect();
    let members = &set.members;
    let n = set.n;
    let k = set.k;
    let identity = Permutation::identity(n).to_image_list();

    let subsumes =
        |a: usize, b: usize| search_subsumption(&members[a].outputs, &profiles[a], &members[b].outputs, &profiles[b]);
    let witness = |kept: usize, removed: usize, perm: ImageList| SubsumptionWitness {
        k,
        subsumer: members[kept].network.clone(),
        subsumed: members[removed].network.clone(),
        perm,
    };

    let mut incumbents: Vec<usize> = Vec::new();
    let mut by_outputs: FxHashMap<&OutputSet, usize> = FxHashMap::default();
    let mut witnesses = Vec::new();

    for x in 0..members.len() {
        if let Some(&r) = by_outputs.get(&members[x].outputs) {
            witnesses.push(witness(r, x, identity.clone()));
            continue;
        }
        let first = if incumbents.len() < PARALLEL_SCAN_THRESHOLD {
            incumbents.iter().find_map(|&r| subsumes(r, x).map(|p| (r, p)))
        } else {
            incumbents
                .par_iter()
                .find_map_first(|&r| subsumes(r, x).map(|p| (r, p)))
        };
        if let Some((r, p)) = first {
            witnesses.push(witness(r, x, p.to_image_list()));
            continue;
        }
        let evicted: Vec<(usize, Permutation)> = if incumbents.len() < PARALLEL_SCAN_THRESHOLD {
            incumbents
                .iter()
                .filter_map(|&r| subsumes(x, r).map(|p| (r, p)))
                .collect()
        } else {
            incumbents
                .par_iter()
                .filter_map(|&r| subsumes(x, r).map(|p| (r, p)))
                .collect()
        };
        if !evicted.is_empty() {
            for (r, p) in &evicted {
                witnesses.push(witness(x, *r, p.to_image_list()));
                by_outputs.remove(&members[*r].outputs);
            }
            let mut gone = evicted.iter().map(|(r, _)| *r).peekable();
            incumbents.retain(|&r| {
                if gone.peek() == Some(&r) {
                    gone.next();
                    false
                } else {
                    true
                }
            });
        }
        incumbents.push(x);
        by_outputs.insert(&members[x].outputs, x);
    }

    let mut keep = vec![false; members.len()];
    for &r in &incumbents {
        keep[r] = true;
    }
    drop(by_outputs);
    SearchOutcome {
        survivors: set.retain_mask(&keep),
        witnesses,
    }
}

/// Why a witness was not used.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SkipReason {
    SameNetwork,
    SubsumerAbsent,
    SubsumedAbsent,
    InvalidPermutation(InvalidPermutation),
    NotSubsumed,
}

impl fmt::Display for SkipReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SkipReason::SameNetwork => f.write_str("subsumer equals subsumed"),
            SkipReason::SubsumerAbsent => f.write_str("subsumer not in current set"),
            SkipReason::SubsumedAbsent => f.write_str("subsumed network not in current set"),
            SkipReason::InvalidPermutation(e) => write!(f, "invalid permutation: {e}"),
            SkipReason::NotSubsumed => f.write_str("subsumption does not hold"),
        }
    }
}

/// Sequential, skeptical replay of oracle witnesses over a candidate set.
///
/// A witness `<C, C', p>` removes `C'` only if `C != C'`, `C` is still in the
/// set, `p` is a permutation of the channels, and `p(outputs(C)) ⊆
/// outputs(C')`. Anything else is skipped, so the result is a complete set
/// whatever the oracle says.
pub struct OraclePruner<'a> {
    set: &'a CandidateSet,
    index: Option<FxHashMap<&'a Network, usize>>,
    text_index: Option<TextIndex>,
    alive: Vec<bool>,
    used: u64,
    skipped: u64,
}

/// What [`OraclePruner::apply_raw`] did with a line.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RawVerdict {
    Used,
    Skipped(SkipReason),
    /// The fields do not parse; nothing was counted.
    Malformed,
}

impl<'a> OraclePruner<'a> {
    pub fn new(set: &'a CandidateSet) -> Self {
        OraclePruner {
            set,
            index: None,
            text_index: None,
            alive: vec![true; set.members.len()],
            used: 0,
            skipped: 0,
        }
    }

    fn lookup(&mut self, network: &Network) -> Option<usize> {
        let members = &self.set.members;
        let index = self
            .index
            .get_or_insert_with(|| members.iter().enumerate().map(|(idx, m)| (&m.network, idx)).collect());
        index.get(network).copied().filter(|&idx| self.alive[idx])
    }

    fn verdict(&mut self, w: &SubsumptionWitness) -> std::result::Result<usize, SkipReason> {
        if w.subsumer == w.subsumed {
            return Err(SkipReason::SameNetwork);
        }
        let a = self.lookup(&w.subsumer).ok_or(SkipReason::SubsumerAbsent)?;
        let b = self.lookup(&w.subsumed).ok_or(SkipReason::SubsumedAbsent)?;
        let p = Permutation::validate(self.set.n, &w.perm.0).map_err(SkipReason::InvalidPermutation)?;
        let members = &self.set.members;
        if subsumes_with(&members[a].outputs, &members[b].outputs, &p) {
            Ok(b)
        } else {
            Err(SkipReason::NotSubsumed)
        }
    }

    /// The accepting case of [`verdict`](Self::verdict) decided on the line's
    /// text. Canonical text is unique, so a hit here is exactly a hit there;
    /// `None` defers to the parsing path.
    fn raw_accepts(&mut self, w: &RawWitness<'_>) -> Option<usize> {
        if w.subsumer == w.subsumed {
            return None;
        }
        let set = self.set;
        let text = self.text_index.get_or_insert_with(|| TextIndex::new(set));
        let a = text.get(w.subsumer).filter(|&idx| self.alive[idx])?;
        let b = text.get(w.subsumed).filter(|&idx| self.alive[idx])?;
        let images = parse_images(w.perm.as_bytes()).ok()?;
        let p = Permutation::validate(set.n, &images).ok()?;
        subsumes_with(&set.members[a].outputs, &set.members[b].outputs, &p).then_some(b)
    }

    /// [`apply`](Self::apply) on an unparsed witness line.
    pub fn apply_raw(&mut self, w: &RawWitness<'_>) -> RawVerdict {
        if let Some(b) = self.raw_accepts(w) {
            self.alive[b] = false;
            self.used += 1;
            return RawVerdict::Used;
        }
        match w.parse() {
            None => RawVerdict::Malformed,
            Some(parsed) => match self.apply(&parsed) {
                Ok(()) => RawVerdict::Used,
                Err(reason) => RawVerdict::Skipped(reason),
            },
        }
    }

    pub fn apply(&mut self, w: &SubsumptionWitness) -> std::result::Result<(), SkipReason> {
        match self.verdict(w) {
            Ok(b) => {
                self.alive[b] = false;
                self.used += 1;
                Ok(())
            }
            Err(reason) => {
                self.skipped += 1;
                Err(reason)
            }
        }
    }

    pub fn used(&self) -> u64 {
        self.used
    }

    pub fn skipped(&self) -> u64 {
        self.skipped
    }

    pub fn remaining(&self) -> usize {
        self.alive.iter().filter(|&&a| a).count()
    }

    pub fn finish(self) -> CandidateSet {
        CandidateSet {
            n: self.set.n,
            k: self.set.k,
            members: self
                .set
                .members
                .iter()
                .zip(&self.alive)
                .filter(|(_, &alive)| alive)
                .map(|(m, _)| m.clone())
                .collect(),
        }
    }
}

/// Members by canonical text. Lossy on hash collisions, which only sends
/// those lookups down the parsing path.
struct TextIndex {
    text: Vec<u8>,
    spans: Vec<(usize, usize)>,
    by_hash: FxHashMap<u64, usize>,
}

impl TextIndex {
    fn new(set: &CandidateSet) -> Self {
        let mut text = Vec::new();
        let mut spans = Vec::with_capacity(set.members.len());
        let mut by_hash = FxHashMap::with_capacity_and_hasher(set.members.len(), Default::default());
        for (idx, m) in set.members.iter().enumerate() {
            let start = text.len();
            m.network.push_text(&mut text);
            spans.push((start, text.len()));
            by_hash.entry(text_hash(&text[start..])).or_insert(idx);
        }
        TextIndex { text, spans, by_hash }
    }

    fn get(&self, key: &str) -> Option<usize> {
        let idx = *self.by_hash.get(&text_hash(key.as_bytes()))?;
        let (start, end) = self.spans[idx];
        (&self.text[start..end] == key.as_bytes()).then_some(idx)
    }
}

fn text_hash(s: &[u8]) -> u64 {
    let mut h = FxHasher::default();
    h.write(s);
    h.finish()
}

/// Counts from one oracle replay.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OracleStats {
    pub used: u64,
    pub skipped: u64,
}

/// Replays `witnesses` in order with [`OraclePruner`].
pub fn prune_with_oracle<'w>(
    set: &CandidateSet,
    witnesses: impl IntoIterator<Item = &'w SubsumptionWitness>,
) -> (CandidateSet, OracleStats) {
    let mut pruner = OraclePruner::new(set);
    for w in witnesses {
        let _ = pruner.apply(w);
    }
    let stats = OracleStats {
        used: pruner.used(),
        skipped: pruner.skipped(),
    };
    (pruner.finish(), stats)
}
