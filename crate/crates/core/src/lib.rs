//! Prover and checker for the optimal-size sorting network problem.
//!
//! The prover runs generate-and-prune and records every successful
//! subsumption in a witness log; the checker replays such a log, trusting
//! nothing in it, and reaches the same answer without searching.

pub mod driver;
pub mod error;
pub mod genprune;
pub mod netcore;
pub mod perm;
pub mod witness;

pub use driver::{
    brute_force_min, check, default_max_size, exists_sorting_network, prove, Answer, IterationReport, MaybeReason,
    RunError, RunOptions, RunOutcome, RunReport,
};
pub use error::{Error, Result};
pub use genprune::{
    check_subsumption, find_subsumption, generate, is_redundant_last, ogenerate, prune_search, prune_with_oracle,
    CandidateSet, OraclePruner, RawVerdict, SubsumptionWitness,
};
pub use netcore::{
    all_standard_comparators, is_sorted, is_sorting_network, outputs, run_network, sort_integers, BinaryVector,
    Comparator, Network, OutputSet, MAX_CHANNELS,
};
pub use perm::{standardize, ImageList, InvalidPermutation, Permutation};
pub use witness::{parse_log, serialize_log, LogReader, LogWriter, OracleReader, WitnessLog};
