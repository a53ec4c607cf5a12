//! Routing a single delivery vehicle whose driver parks and then serves
//! groups of customers on foot, where every parking event costs a search
//! time.
//!
//! The crate is organised around the data flow of a study:
//!
//! * [`instance`] holds the problem data, its validator, JSON I/O and the
//!   random-geometric and complete-grid generators.
//! * [`servicesets`] enumerates the walking service sets a carrier can take
//!   and prices the walking tours.
//! * [`model`] builds the mixed-integer formulation, writes it as LP text and
//!   evaluates candidate solutions.
//! * [`exact`] is the desk-scale exact solver used as the oracle everywhere.
//! * [`heuristic`] is the two-echelon location-routing heuristic for larger
//!   instances.
//! * [`benchmarks`] implements the three comparison models.
//! * [`gridlab`] covers the complete-grid analysis: closed-form values,
//!   parking-time thresholds and the constructed witness solutions.
//!
//! Inner loops that are embarrassingly parallel go through [`par`], which
//! uses rayon when the `parallel` feature is on and plain iterators
//! otherwise.

pub mod benchmarks;
pub mod exact;
pub mod gridlab;
pub mod heuristic;
pub mod instance;
pub mod model;
pub mod par;
#[cfg(feature = "published")]
pub mod published;
pub mod servicesets;
pub mod tsp;

mod error;

pub use error::{Error, Result};
pub use exact::{check_feasible, solve_exact, ExactOptions, ExactResult, SearchBudget, SolveStatus};
pub use instance::{GridInstance, GridParams, Instance, ValidationReport};
pub use model::{evaluate_solution, Breakdown, MipModel, ModelOptions, ServedSet, Solution, Stop};
pub use par::Parallelism;
pub use servicesets::{ServiceSet, ServiceSetCatalog};

/// Absolute tolerance for comparing times in minutes.
pub const TOL: f64 = 1e-6;

/// Tolerance used when breaking ties between equal-cost alternatives.
pub(crate) const TIE_EPS: f64 = 1e-9;
