//! Solver backends: an exhaustive enumeration oracle for small cases and an
//! external MILP solver driven through MPS and solution files.

mod enumerate;
mod external;
mod mps;
mod solution;

pub use enumerate::{count_combinations, solve_enumeration, EnumLimits, DEFAULT_COMBINATION_CAP};
pub use external::{solve_external, SolverCommand, SOLVER_CMD_ENV};
pub use mps::{export_mps, import_mps, MpsError};
pub use solution::{import_solution, write_solution, SolutionDocument, SolutionError, SolverVerdict};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::milp::{Assignment, EncodeError};
use crate::schedule::Schedule;
use crate::validate::{ValidationError, ValidationReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Feasible,
    Infeasible,
    Error,
}

impl SolveStatus {
    pub fn has_solution(self) -> bool {
        matches!(self, SolveStatus::Optimal | SolveStatus::Feasible)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub wall_seconds: f64,
    /// Combinations simulated (enumeration) or 0 when the solver does not say.
    pub explored: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub assignment: Option<Assignment>,
    pub schedule: Option<Schedule>,
    pub objective: Option<f64>,
    pub stats: SolveStats,
    pub report: Option<ValidationReport>,
    pub message: Option<String>,
}

impl SolveResult {
    fn without_solution(status: SolveStatus, stats: SolveStats, message: impl Into<String>) -> Self {
        Self {
            status,
            assignment: None,
            schedule: None,
            objective: None,
            stats,
            report: None,
            message: Some(message.into()),
        }
    }
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("{combinations} decision combinations exceed the cap of {cap}")]
    CapExceeded { combinations: u128, cap: u128 },
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error("solver command: {0}")]
    Command(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}
