//! Problem and solution data model, cost evaluation and CVRPLIB-style I/O.

mod instance;
mod io;
mod solution;

pub use instance::{euclidean_rounded, Instance};
pub use io::{parse_instance, parse_solution, read_bks_table, write_solution};
pub use solution::{validate, CacheMismatch, Route, Solution, ValidationReport};

use std::collections::HashSet;

/// All distances are rounded to integers, so every cost is exact.
pub type Cost = i64;

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unsupported format: {0}")]
    Unsupported(String),
    #[error("invalid instance: {0}")]
    Invalid(String),
    #[error("invalid route: {0}")]
    InvalidRoute(String),
    #[error("gap undefined for non-positive reference cost {0}")]
    Domain(Cost),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// How capacity excess is priced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeasibilityMode {
    /// Linear penalty of `penalty` per unit of excess load.
    Penalized,
    /// Any excess makes the route infeasible (infinite penalty).
    Forbidden,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CostParams {
    pub penalty: Cost,
    pub mode: FeasibilityMode,
}

impl CostParams {
    pub fn new(penalty: Cost, mode: FeasibilityMode) -> Self {
        assert!(penalty > 0, "capacity penalty must be positive");
        Self { penalty, mode }
    }

    /// Default penalty: one plus the longest edge per unit of the largest demand.
    pub fn for_instance(inst: &Instance, mode: FeasibilityMode) -> Self {
        let unit = inst.max_demand().max(1);
        Self::new(1 + inst.max_distance() / unit, mode)
    }

    pub fn with_mode(self, mode: FeasibilityMode) -> Self {
        Self { mode, ..self }
    }

    #[inline]
    pub fn excess_cost(&self, load: i64, capacity: i64) -> Option<Cost> {
        let excess = (load - capacity).max(0);
        match self.mode {
            _ if excess == 0 => Some(0),
            FeasibilityMode::Penalized => Some(self.penalty * excess),
            FeasibilityMode::Forbidden => None,
        }
    }

    /// `penalty * max(load - Q, 0) + distance`, or `None` when forbidden.
    #[inline]
    pub fn cost(&self, load: i64, distance: Cost, capacity: i64) -> Option<Cost> {
        self.excess_cost(load, capacity).map(|p| p + distance)
    }
}

/// Depot-to-depot travel distance of a customer sequence.
pub fn route_distance(inst: &Instance, customers: &[usize]) -> Cost {
    let mut prev = 0;
    let mut total = 0;
    for &c in customers {
        total += inst.distance(prev, c);
        prev = c;
    }
    total + inst.distance(prev, 0)
}

pub fn route_load(inst: &Instance, customers: &[usize]) -> i64 {
    customers.iter().map(|&c| inst.demand(c)).sum()
}

/// Penalized cost of a single route; `Ok(None)` means infeasible under [`FeasibilityMode::Forbidden`].
pub fn route_cost(inst: &Instance, customers: &[usize], params: &CostParams) -> Result<Option<Cost>, ModelError> {
    let mut seen = HashSet::with_capacity(customers.len());
    for &c in customers {
        if c == 0 || c > inst.n() {
            return Err(ModelError::InvalidRoute(format!("unknown customer {c}")));
        }
        if !seen.insert(c) {
            return Err(ModelError::InvalidRoute(format!("customer {c} visited twice")));
        }
    }
    let load = route_load(inst, customers);
    Ok(params.cost(load, route_distance(inst, customers), inst.capacity()))
}

/// Sum of route costs; `None` if any route is infeasible under the forbidden mode.
pub fn solution_cost(inst: &Instance, sol: &Solution, params: &CostParams) -> Option<Cost> {
    sol.routes()
        .iter()
        .map(|r| params.cost(r.load(), r.distance(), inst.capacity()))
        .sum()
}

/// `100 (z - z_bks) / z_bks`.
pub fn gap_percent(z: Cost, z_bks: Cost) -> Result<f64, ModelError> {
    if z_bks <= 0 {
        return Err(ModelError::Domain(z_bks));
    }
    Ok(100.0 * (z - z_bks) as f64 / z_bks as f64)
}
