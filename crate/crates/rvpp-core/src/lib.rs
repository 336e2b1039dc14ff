//! Robust-bidding optimization engine for renewable-based virtual power
//! plants participating jointly in a day-ahead energy market and a secondary
//! reserve market at quarter-hourly resolution.
//!
//! The crate is organized around a solver-agnostic MILP layer:
//!
//! * [`domain`] — portfolio, price and grid data types with validation;
//! * [`milp`] — model container, canonical LP writer/reader, solve backends;
//! * [`deterministic`] — the perfect-foresight scheduling MILP;
//! * [`robust`] — the multi-bound budgeted-uncertainty MILP and its
//!   single-bound special case;
//! * [`solution`] — schedule extraction, profit decomposition and physics
//!   checks;
//! * [`oracle`] — brute-force enumerators certifying the duality
//!   reformulation on small instances;
//! * [`io`] — config/CSV ingestion, resolution conversion and report
//!   emission.

pub mod deterministic;
pub mod domain;
pub mod io;
pub mod milp;
pub mod oracle;
pub mod robust;
pub mod solution;
pub mod testkit;

pub use domain::{validate_portfolio, Portfolio, TimeGrid};
pub use milp::solver::{HighsBackend, SolveBackend, SolveOptions, SolveOutcome, SolveStatus};
pub use milp::MilpModel;
