//! Black-start generator startup sequencing with fuel cells and batteries.

pub mod analysis;
pub mod case;
pub mod milp;
pub mod schedule;
pub mod semantics;
pub mod solver;
pub mod validate;
