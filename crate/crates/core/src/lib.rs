//! Joint downlink data-size and user-server association optimization for
//! players served by mobile edge computing servers.
//!
//! The problem couples a continuous variable per player (how many megabits
//! of rendered content to push down each epoch) with an integer variable
//! (which edge server serves the player). [`optimizer::alternating_optimize`]
//! alternates an exact closed-form data-size step with an association step
//! that lifts the binary quadratic latency program to a semidefinite
//! relaxation, rounds it by Gaussian randomization and polishes the result
//! with best-response moves.
//!
//! Every strategy is scored by [`model::evaluate`].

pub mod association;
pub mod datasize;
pub mod error;
pub mod harness;
pub mod model;
pub mod optimizer;
pub mod rng;
pub mod scenario;
pub mod sdp;

pub use error::{Error, Result};
pub use model::Metrics;
pub use optimizer::{SolveOptions, SolveResult, Strategy};
pub use scenario::{Assignment, ResolutionPlan, Scenario, ScenarioOverrides, UtilityParams};
