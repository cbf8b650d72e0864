//! The generate-and-prune iteration in prover and checker modes, and the
//! brute-force enumerator used to cross-check its answers.

use std::fmt;
use std::io::{self, BufRead, Write};
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::error::Error;
use crate::genprune::{ogenerate, prune_search, CandidateSet, OraclePruner, RawVerdict};
use crate::netcore::{self, all_standard_comparators, check_capacity, Network, MAX_CHANNELS};
use crate::witness::{BlockStatus, LogWriter, OracleReader, RawOutcome};

/// Best known upper bounds on the optimal size, indexed by channel count.
pub const KNOWN_UPPER_BOUNDS: [usize; MAX_CHANNELS + 1] =
    [0, 0, 1, 3, 5, 9, 12, 16, 19, 25, 29, 35, 39, 45, 51, 56, 60];

/// One more than the best known upper bound, so a run on a feasible `n`
/// always ends in `Yes`.
pub fn default_max_size(n: usize) -> usize {
    KNOWN_UPPER_BOUNDS.get(n).map_or(0, |&b| b + 1)
}

/// Default limit on brute-force enumeration, in networks.
pub const DEFAULT_ENUMERATION_BUDGET: u128 = 50_000_000;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Contract(#[from] Error),
    #[error("oracle I/O: {0}")]
    Io(#[from] io::Error),
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MaybeReason {
    /// Checker mode needed the block for step `k` and the log had no more.
    OracleExhausted { k: usize },
    /// The generated set at step `k` exceeded the candidate limit.
    CandidateLimit { k: usize, size: usize },
}

#[derive(Clone, Debug)]
pub enum Answer {
    /// `network` sorts, has size `k`, and no smaller sorting network exists.
    Yes {
        n: usize,
        k: usize,
        network: Network,
    },
    /// Every sorting network on `n` channels has more than `k` comparators;
    /// `survivors` is the complete set reached at step `k`.
    No {
        n: usize,
        k: usize,
        survivors: CandidateSet,
    },
    Maybe(MaybeReason),
}

impl Answer {
    pub fn is_yes(&self) -> bool {
        matches!(self, Answer::Yes { .. })
    }

    pub fn is_maybe(&self) -> bool {
        matches!(self, Answer::Maybe(_))
    }
}

impl fmt::Display for Answer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Answer::Yes { n, k, .. } => write!(f, "RESULT yes n={n} k={k}"),
            Answer::No { n, k, survivors } => {
                write!(f, "RESULT no n={n} k={k} |R|={}", survivors.len())
            }
            Answer::Maybe(_) => f.write_str("RESULT maybe"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IterationReport {
    pub k: usize,
    /// `|N_k|`
    pub generated: usize,
    /// `|R_k|`
    pub survivors: usize,
    pub witnesses_used: u64,
    pub witnesses_skipped: u64,
    pub generate_time: Duration,
    pub prune_time: Duration,
}

impl fmt::Display for IterationReport {
    /// The stable row; timings are left out so rows can be diffed.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "ITER k={} |N|={} |R|={} witnesses_used={} witnesses_skipped={}",
            self.k, self.generated, self.survivors, self.witnesses_used, self.witnesses_skipped
        )
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunReport {
    pub iterations: Vec<IterationReport>,
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses the available parallelism.
    pub threads: Option<usize>,
    /// Give up with `Maybe` when a generated set grows beyond this.
    pub candidate_limit: Option<usize>,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub answer: Answer,
    pub report: RunReport,
}

/// First member that sorts, re-verified by direct simulation.
pub fn exists_sorting_network(n: usize, set: &CandidateSet) -> Option<&Network> {
    set.members()
        .iter()
        .find(|m| m.is_sorting_network() && netcore::is_sorting_network(n, m.network()).unwrap_or(false))
        .map(|m| m.network())
}

enum Pruning<'a, W: Write, R: BufRead> {
    Search(Option<&'a mut LogWriter<W>>),
    Oracle(&'a mut OracleReader<R>),
}

/// Prover mode: prunes by search, writing each step's witnesses to `emit`.
/// Every step gets a block line, even when it has no witnesses.
pub fn prove<W: Write>(
    n: usize,
    max_iterations: usize,
    options: &RunOptions,
    emit: Option<&mut LogWriter<W>>,
) -> Result<RunOutcome, RunError> {
    run::<W, io::Empty>(n, max_iterations, options, Pruning::Search(emit))
}

/// Checker mode: prunes only with witnesses from `oracle`, validating each.
pub fn check<R: BufRead>(
    n: usize,
    max_iterations: usize,
    options: &RunOptions,
    oracle: &mut OracleReader<R>,
) -> Result<RunOutcome, RunError> {
    run::<io::Sink, R>(n, max_iterations, options, Pruning::Oracle(oracle))
}

/// The calling thread joins the pool so that `install` runs inline; if it
/// already belongs to another pool, a detached pool is used instead.
fn build_pool(threads: Option<usize>) -> Result<rayon::ThreadPool, RunError> {
    let builder = || {
        let builder = rayon::ThreadPoolBuilder::new();
        match threads {
            Some(threads) => builder.num_threads(threads),
            None => builder,
        }
    };
    builder()
        .use_current_thread()
        .build()
        .or_else(|_| builder().build())
        .map_err(|e| RunError::ThreadPool(e.to_string()))
}

fn run<W: Write, R: BufRead>(
    n: usize,
    max_iterations: usize,
    options: &RunOptions,
    mut pruning: Pruning<'_, W, R>,
) -> Result<RunOutcome, RunError> {
    check_capacity(n)?;
    let pool = build_pool(options.threads)?;

    {
        let mut report = RunReport::default();
        let mut survivors = CandidateSet::initial(n)?;
        if let Some(network) = exists_sorting_network(n, &survivors) {
            let network = network.clone();
            return Ok(RunOutcome {
                answer: Answer::Yes { n, k: 0, network },
                report,
            });
        }
        for k in 1..=max_iterations {
            let status = match &mut pruning {
                Pruning::Oracle(oracle) => oracle.open_block(k)?,
                Pruning::Search(_) => BlockStatus::Found,
            };
            if status == BlockStatus::Exhausted {
                return Ok(RunOutcome {
                    answer: Answer::Maybe(MaybeReason::OracleExhausted { k }),
                    report,
                });
            }

            let started = Instant::now();
            let generated = pool.install(|| ogenerate(&survivors));
            let generate_time = started.elapsed();
            if let Some(limit) = options.candidate_limit {
                if generated.len() > limit {
                    return Ok(RunOutcome {
                        answer: Answer::Maybe(MaybeReason::CandidateLimit {
                            k,
                            size: generated.len(),
                        }),
                        report,
                    });
                }
            }

            let started = Instant::now();
            let mut iteration = IterationReport {
                k,
                generated: generated.len(),
                generate_time,
                ..IterationReport::default()
            };
            survivors = match &mut pruning {
                Pruning::Search(emit) => {
                    let outcome = pool.install(|| prune_search(generated));
                    if let Some(writer) = emit {
                        writer.begin_block(k)?;
                        for w in &outcome.witnesses {
                            writer.write_witness(w)?;
                        }
                    }
                    iteration.witnesses_used = outcome.witnesses.len() as u64;
                    outcome.survivors
                }
                Pruning::Oracle(oracle) => {
                    let mut pruner = OraclePruner::new(&generated);
                    let mut malformed = 0;
                    if status == BlockStatus::Found {
                        while let Some(entry) = oracle.next_raw_in_block()? {
                            match entry {
                                RawOutcome::Witness(w) => {
                                    if pruner.apply_raw(&w) == RawVerdict::Malformed {
                                        malformed += 1;
                                    }
                                }
                                RawOutcome::Skip(_) => malformed += 1,
                            }
                        }
                    }
                    iteration.witnesses_used = pruner.used();
                    iteration.witnesses_skipped = pruner.skipped() + malformed;
                    pruner.finish()
                }
            };
            iteration.prune_time = started.elapsed();
            iteration.survivors = survivors.len();
            report.iterations.push(iteration);

            if let Some(network) = exists_sorting_network(n, &survivors) {
                let network = network.clone();
                return Ok(RunOutcome {
                    answer: Answer::Yes { n, k, network },
                    report,
                });
            }
        }
        Ok(RunOutcome {
            answer: Answer::No {
                n,
                k: max_iterations,
                survivors,
            },
            report,
        })
    }
}

/// Number of standard networks of each size up to `k_max`, summed.
fn enumeration_size(n: usize, k_max: usize) -> u128 {
    let m = (n * n.saturating_sub(1) / 2) as u128;
    let mut total: u128 = 0;
    let mut layer: u128 = 1;
    for _ in 0..=k_max {
        total = total.saturating_add(layer);
        layer = layer.saturating_mul(m);
    }
    total
}

/// Smallest `k <= k_max` admitting a sorting network of size `k`, found by
/// trying every standard network of each size in turn. Each network is
/// checked by pushing all `2^n` inputs through it.
pub fn brute_force_min(n: usize, k_max: usize, budget: u128) -> Result<Option<usize>, Error> {
    check_capacity(n)?;
    let required = enumeration_size(n, k_max);
    if required > budget {
        return Err(Error::BudgetExceeded { required, budget });
    }
    let comparators = all_standard_comparators(n);
    let inputs: Vec<u32> = (0..1u32 << n).collect();
    for k in 0..=k_max {
        if sorts_with_extension(n, &comparators, &inputs, k) {
            return Ok(Some(k));
        }
    }
    Ok(None)
}

fn sorts_with_extension(n: usize, comparators: &[netcore::Comparator], values: &[u32], remaining: usize) -> bool {
    if remaining == 0 {
        return values.iter().all(|&x| netcore::is_sorted_bits(n, x));
    }
    comparators.iter().any(|&c| {
        let next: Vec<u32> = values.iter().map(|&x| c.apply_bits(x)).collect();
        sorts_with_extension(n, comparators, &next, remaining - 1)
    })
}
