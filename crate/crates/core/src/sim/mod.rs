//! Discrete-event VANET simulation of the aggregation protocol.
//!
//! Vehicles drive on a Manhattan grid; a traffic event appears at a random
//! road position and the nearest vehicle that sees it starts an
//! aggregation. Radio is unit-disk with a per-hop delay of a fixed part, a
//! size-dependent part and jitter; replies share one medium around the
//! initiator.
//!
//! Randomness is split into named streams (see [`streams`]), so a larger
//! fleet contains the smaller one and changing `t` or `r` leaves mobility
//! untouched.

mod anonymity;
mod engine;
pub mod mobility;
pub mod queue;
mod scenario;
pub mod streams;
mod sweep;

pub use anonymity::{anonymity_prob, anonymity_prob_exact, AnonymityError};
pub use engine::{run_scenario, SimMetrics};
pub use scenario::{CryptoMode, ModeledCosts, ScenarioError, SimScenario};
pub use sweep::{
    linear_fit, run_batch, run_seed, sweep, wilson_interval, write_csv, write_jsonl, CellSummary,
    SweepAxes, SweepSpec, TidyRow,
};
