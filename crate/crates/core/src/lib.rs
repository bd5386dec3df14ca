//! Online fractional covering with multiple predictions.
//!
//! Each online step reveals a covering row `Σ a_i x_i >= 1` together with `k`
//! suggested assignments that satisfy it. [`engine`] grows the solution so
//! that its cost stays within `O(log k)` of the best per-step combination of
//! suggestions; [`benchmarks`] computes that benchmark exactly on small
//! instances and checks the potential-function ledger against engine traces.
//! [`box_engine`] handles rows with `x_ij <= y_i` box constraints,
//! [`robust`] combines a suggestion-driven run with a prediction-free one,
//! and [`adapters`] map set cover, weighted caching and facility location
//! onto these engines.

pub mod adapters;
pub mod benchmarks;
pub mod box_engine;
pub mod engine;
pub mod format;
pub mod generate;
pub mod model;
pub mod predictors;
pub mod robust;
pub mod tolerance;

pub use box_engine::{BoxEngine, BoxSuggestion, BoxSuggestionSet};
pub use engine::{CoveringEngine, CoveringState, EngineError, PhaseEvent};
pub use model::{Assignment, ModelError, SparseConstraint, SuggestionSet};
pub use tolerance::Tolerances;
