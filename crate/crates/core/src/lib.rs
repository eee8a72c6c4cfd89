//! Pattern injection local search for the capacitated vehicle routing problem.

pub mod hosts;
pub mod inject;
pub mod model;
pub mod pattern;
pub mod search;
pub mod harness;
pub mod par;
