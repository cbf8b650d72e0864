//! Line-oriented witness log: the untrusted oracle format.
//!
//! ```text
//! sortnet-witness v1 n=<nat>
//! K <nat>
//! S <network> <network> <perm>
//! ```
//!
//! The header comes first. `K k` opens the block for size step `k`, and each
//! `S` line in it is one witness `<subsumer, subsumed, perm>`. Lines end with
//! LF. Any other line, including a final line without LF, is a skip marker;
//! reading never fails on content.

use std::fmt;
use std::io::{self, BufRead, Write};

use crate::genprune::SubsumptionWitness;
use crate::netcore::{parse_nat, Network};
use crate::perm::ImageList;

pub const HEADER_PREFIX: &str = "sortnet-witness v1 n=";

/// Longer lines are skipped without being buffered in full.
pub const MAX_LINE_BYTES: usize = 64 * 1024;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Malformed {
    NotUtf8,
    Unterminated,
    TooLong,
    Unrecognized,
    BadHeader,
    MisplacedHeader,
    BadBlock,
    BadWitness,
    OutsideBlock,
}

impl fmt::Display for Malformed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Malformed::NotUtf8 => "not valid UTF-8",
            Malformed::Unterminated => "missing final line feed",
            Malformed::TooLong => "line too long",
            Malformed::Unrecognized => "unrecognized line",
            Malformed::BadHeader => "malformed header",
            Malformed::MisplacedHeader => "header after first line",
            Malformed::BadBlock => "malformed block line",
            Malformed::BadWitness => "malformed witness line",
            Malformed::OutsideBlock => "witness before any block",
        })
    }
}

/// A line that could not be used, by 1-based line number.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SkipMarker {
    pub line: u64,
    pub reason: Malformed,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ParseOutcome {
    Witness(SubsumptionWitness),
    Skip(SkipMarker),
}

/// One classified line of a log.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Entry {
    Header(usize),
    Block(usize),
    Witness(SubsumptionWitness),
    Skip(SkipMarker),
}

/// A line classified without parsing the fields of witness lines.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RawEntry<'a> {
    Header(usize),
    Block(usize),
    Witness(RawWitness<'a>),
    Skip(SkipMarker),
}

/// The three fields of an `S` line, not yet checked against the grammar.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RawWitness<'a> {
    pub k: usize,
    pub line: u64,
    pub subsumer: &'a str,
    pub subsumed: &'a str,
    pub perm: &'a str,
}

impl RawWitness<'_> {
    pub fn parse(&self) -> Option<SubsumptionWitness> {
        Some(SubsumptionWitness {
            k: self.k,
            subsumer: Network::parse_bytes(self.subsumer.as_bytes()).ok()?,
            subsumed: Network::parse_bytes(self.subsumed.as_bytes()).ok()?,
            perm: ImageList::parse_bytes(self.perm.as_bytes()).ok()?,
        })
    }

    fn parse_entry(&self) -> ParseOutcome {
        match self.parse() {
            Some(w) => ParseOutcome::Witness(w),
            None => ParseOutcome::Skip(SkipMarker {
                line: self.line,
                reason: Malformed::BadWitness,
            }),
        }
    }
}

/// Writes a log incrementally.
pub struct LogWriter<W: Write> {
    out: W,
}

impl<W: Write> LogWriter<W> {
    pub fn new(mut out: W, n: usize) -> io::Result<Self> {
        writeln!(out, "{HEADER_PREFIX}{n}")?;
        Ok(LogWriter { out })
    }

    pub fn begin_block(&mut self, k: usize) -> io::Result<()> {
        writeln!(self.out, "K {k}")
    }

    pub fn write_witness(&mut self, w: &SubsumptionWitness) -> io::Result<()> {
        writeln!(self.out, "S {} {} {}", w.subsumer, w.subsumed, w.perm)
    }

    pub fn finish(mut self) -> io::Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

/// Serializes `blocks`, where `blocks[b]` holds the witnesses of step `b + 1`.
pub fn serialize_log(n: usize, blocks: &[Vec<SubsumptionWitness>]) -> Vec<u8> {
    let mut writer = LogWriter::new(Vec::new(), n).expect("writing to memory");
    for (b, block) in blocks.iter().enumerate() {
        writer.begin_block(b + 1).expect("writing to memory");
        for w in block {
            writer.write_witness(w).expect("writing to memory");
        }
    }
    writer.finish().expect("writing to memory")
}

/// Streaming classifier over the lines of a log.
pub struct LogReader<R> {
    input: R,
    buf: Vec<u8>,
    line: u64,
    block: Option<usize>,
    done: bool,
}

impl<R: BufRead> LogReader<R> {
    pub fn new(input: R) -> Self {
        LogReader {
            input,
            buf: Vec::new(),
            line: 0,
            block: None,
            done: false,
        }
    }

    /// Lines read so far.
    pub fn line_number(&self) -> u64 {
        self.line
    }

    /// Reads one line into `buf`. Returns `Ok(None)` at end of input,
    /// otherwise whether the line was LF-terminated and fit the size limit.
    fn read_line(&mut self) -> io::Result<Option<Result<(), Malformed>>> {
        self.buf.clear();
        let mut any = false;
        let mut too_long = false;
        loop {
            let chunk = match self.input.fill_buf() {
                Ok(chunk) => chunk,
                Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
                Err(e) => return Err(e),
            };
            if chunk.is_empty() {
                if !any {
                    return Ok(None);
                }
                return Ok(Some(Err(if too_long {
                    Malformed::TooLong
                } else {
                    Malformed::Unterminated
                })));
            }
            any = true;
            let (take, newline) = match memchr::memchr(b'\n', chunk) {
                Some(pos) => (pos, true),
                None => (chunk.len(), false),
            };
            if !too_long {
                if self.buf.len() + take > MAX_LINE_BYTES {
                    too_long = true;
                    self.buf.clear();
                } else {
                    self.buf.extend_from_slice(&chunk[..take]);
                }
            }
            self.input.consume(take + usize::from(newline));
            if newline {
                return Ok(Some(if too_long { Err(Malformed::TooLong) } else { Ok(()) }));
            }
        }
    }

    pub fn next_entry(&mut self) -> io::Result<Option<Entry>> {
        Ok(self.next_raw()?.map(|raw| match raw {
            RawEntry::Header(n) => Entry::Header(n),
            RawEntry::Block(k) => Entry::Block(k),
            RawEntry::Witness(w) => match w.parse_entry() {
                ParseOutcome::Witness(w) => Entry::Witness(w),
                ParseOutcome::Skip(s) => Entry::Skip(s),
            },
            RawEntry::Skip(s) => Entry::Skip(s),
        }))
    }

    /// Like [`next_entry`](Self::next_entry), but witness fields are only
    /// split, not parsed.
    pub fn next_raw(&mut self) -> io::Result<Option<RawEntry<'_>>> {
        if self.done {
            return Ok(None);
        }
        let status = match self.read_line()? {
            None => {
                self.done = true;
                return Ok(None);
            }
            Some(status) => status,
        };
        self.line += 1;
        let line = self.line;
        let skip = |reason| Ok(Some(RawEntry::Skip(SkipMarker { line, reason })));
        if let Err(reason) = status {
            return skip(reason);
        }
        let Ok(text) = std::str::from_utf8(&self.buf) else {
            return skip(Malformed::NotUtf8);
        };
        if let Some(rest) = text.strip_prefix(HEADER_PREFIX) {
            return match parse_nat(rest) {
                Some(n) if line == 1 => Ok(Some(RawEntry::Header(n))),
                Some(_) => skip(Malformed::MisplacedHeader),
                None => skip(Malformed::BadHeader),
            };
        }
        if let Some(rest) = text.strip_prefix("K ") {
            return match parse_nat(rest) {
                Some(k) => {
                    self.block = Some(k);
                    Ok(Some(RawEntry::Block(k)))
                }
                None => skip(Malformed::BadBlock),
            };
        }
        if let Some(rest) = text.strip_prefix("S ") {
            let mut fields = rest.split(' ');
            let (Some(subsumer), Some(subsumed), Some(perm), None) =
                (fields.next(), fields.next(), fields.next(), fields.next())
            else {
                return skip(Malformed::BadWitness);
            };
            let raw = RawWitness {
                k: self.block.unwrap_or(0),
                line,
                subsumer,
                subsumed,
                perm,
            };
            return match self.block {
                Some(_) => Ok(Some(RawEntry::Witness(raw))),
                None if raw.parse().is_none() => skip(Malformed::BadWitness),
                None => skip(Malformed::OutsideBlock),
            };
        }
        skip(Malformed::Unrecognized)
    }
}

impl<R: BufRead> Iterator for LogReader<R> {
    type Item = io::Result<Entry>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_entry().transpose()
    }
}

/// A block as it appears in the file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    pub k: usize,
    pub entries: Vec<ParseOutcome>,
}

/// A fully materialized log, in file order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct WitnessLog {
    pub n: Option<usize>,
    pub blocks: Vec<Block>,
    /// Skip markers before the first block.
    pub stray: Vec<SkipMarker>,
}

impl WitnessLog {
    /// All witnesses in file order.
    pub fn witnesses(&self) -> impl Iterator<Item = &SubsumptionWitness> + '_ {
        self.blocks.iter().flat_map(|b| {
            b.entries.iter().filter_map(|e| match e {
                ParseOutcome::Witness(w) => Some(w),
                ParseOutcome::Skip(_) => None,
            })
        })
    }
}

/// Reads a whole log into memory. Only I/O errors are reported.
pub fn parse_log(input: impl BufRead) -> io::Result<WitnessLog> {
    let mut log = WitnessLog::default();
    for entry in LogReader::new(input) {
        match entry? {
            Entry::Header(n) => log.n = Some(n),
            Entry::Block(k) => log.blocks.push(Block { k, entries: Vec::new() }),
            Entry::Witness(w) => match log.blocks.last_mut() {
                Some(b) => b.entries.push(ParseOutcome::Witness(w)),
                None => unreachable!("witness entries only follow a block line"),
            },
            Entry::Skip(s) => match log.blocks.last_mut() {
                Some(b) => b.entries.push(ParseOutcome::Skip(s)),
                None => log.stray.push(s),
            },
        }
    }
    Ok(log)
}

/// Outcome of positioning an [`OracleReader`] at a size step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockStatus {
    /// The block exists; its entries follow.
    Found,
    /// A later block exists, so this step has no pruning information.
    Missing,
    /// No further blocks: the oracle has run out.
    Exhausted,
}

/// The checker's view of a log: blocks are opened in ascending `k`.
///
/// A header that is absent or names a different channel count makes the
/// whole log unusable. Blocks that arrive out of order, and anything between
/// blocks, are discarded.
pub struct OracleReader<R> {
    reader: LogReader<R>,
    usable: bool,
    pending: Option<usize>,
    open: bool,
    discarded: u64,
}

impl<R: BufRead> OracleReader<R> {
    pub fn new(input: R, n: usize) -> io::Result<Self> {
        let mut reader = LogReader::new(input);
        let usable = matches!(reader.next_entry()?, Some(Entry::Header(m)) if m == n);
        Ok(OracleReader {
            reader,
            usable,
            pending: None,
            open: false,
            discarded: 0,
        })
    }

    pub fn is_usable(&self) -> bool {
        self.usable
    }

    /// Lines that never reached a pruning step.
    pub fn discarded(&self) -> u64 {
        self.discarded
    }

    pub fn open_block(&mut self, k: usize) -> io::Result<BlockStatus> {
        if !self.usable {
            return Ok(BlockStatus::Exhausted);
        }
        while self.open {
            if self.next_in_block()?.is_some() {
                self.discarded += 1;
            }
        }
        loop {
            let header = match self.pending.take() {
                Some(m) => m,
                None => match self.reader.next_entry()? {
                    None => return Ok(BlockStatus::Exhausted),
                    Some(Entry::Block(m)) => m,
                    Some(_) => {
                        self.discarded += 1;
                        continue;
                    }
                },
            };
            match header.cmp(&k) {
                std::cmp::Ordering::Equal => {
                    self.open = true;
                    return Ok(BlockStatus::Found);
                }
                std::cmp::Ordering::Greater => {
                    self.pending = Some(header);
                    return Ok(BlockStatus::Missing);
                }
                std::cmp::Ordering::Less => {
                    // A stale block: its lines are discarded by the loop.
                    self.discarded += 1;
                }
            }
        }
    }

    /// Next entry of the open block, or `None` at its end.
    pub fn next_in_block(&mut self) -> io::Result<Option<ParseOutcome>> {
        Ok(self.next_raw_in_block()?.map(|raw| match raw {
            RawOutcome::Witness(w) => w.parse_entry(),
            RawOutcome::Skip(s) => ParseOutcome::Skip(s),
        }))
    }

    /// [`next_in_block`](Self::next_in_block) without parsing witness fields.
    pub fn next_raw_in_block(&mut self) -> io::Result<Option<RawOutcome<'_>>> {
        if !self.open {
            return Ok(None);
        }
        match self.reader.next_raw()? {
            None => {
                self.open = false;
                Ok(None)
            }
            Some(RawEntry::Block(m)) => {
                self.open = false;
                self.pending = Some(m);
                Ok(None)
            }
            Some(RawEntry::Witness(w)) => Ok(Some(RawOutcome::Witness(w))),
            Some(RawEntry::Skip(s)) => Ok(Some(RawOutcome::Skip(s))),
            Some(RawEntry::Header(_)) => unreachable!("headers are only reported on line 1"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RawOutcome<'a> {
    Witness(RawWitness<'a>),
    Skip(SkipMarker),
}
