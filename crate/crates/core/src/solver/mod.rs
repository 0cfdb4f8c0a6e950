//! Built-in exact optimizer.

use serde::{Deserialize, Serialize};

mod bnb;
mod greedy;
mod oracle;
mod schedule;

pub use bnb::{branch_and_bound, BnbConfig, BnbResult};
pub use oracle::{exhaustive_oracle, OracleCaps};
pub use schedule::{schedule_routes, schedule_routes_with, ScheduleOptions, ScheduleResult};

/// Outcome class shared by the built-in and external solvers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveStatus {
    Optimal,
    /// A plan was found but a limit stopped the proof.
    Feasible,
    Infeasible,
    /// A limit was reached before any plan was found.
    Unknown,
}
