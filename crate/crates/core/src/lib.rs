//! Local search on neutral NK/NKq landscapes.
//!
//! The crate provides:
//!
//! * [`landscape`]: NK and NKq instance generation, exact integer fitness,
//!   incremental one-bit-flip evaluation, neutrality measurements and a text
//!   file format.
//! * [`bandit`]: rank-based (AUC) rewards and UCB scores for choosing which
//!   plateau member to expand next.
//! * [`search`]: first-improvement hill climbing, Netcrawler, and the plateau
//!   search engine, which runs either with uniform member selection (F2NS) or
//!   bandit-guided selection (VEGAS). All of them restart from random
//!   solutions until an evaluation budget is spent.
//! * [`harness`]: experiment grids, CSV results, normalized fitness, paired
//!   Wilcoxon tests and search-dynamics summaries.

pub mod bandit;
pub mod bitstring;
pub mod error;
pub mod harness;
pub mod landscape;
pub mod rng;
pub mod search;

pub use bitstring::BitString;
pub use error::{Error, Result};
pub use landscape::{expected_neutral_degree, FitnessFunction, Instance, IntegerFitness, Quantization};
pub use search::{Algorithm, RunRecord};
