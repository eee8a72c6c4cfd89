use super::{route_distance, route_load, Cost, CostParams, Instance};

/// Customer sequence of one vehicle; the depot is implicit at both ends.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Route {
    customers: Vec<usize>,
    load: i64,
    distance: Cost,
}

impl Route {
    pub fn new(inst: &Instance, customers: Vec<usize>) -> Self {
        let load = route_load(inst, &customers);
        let distance = route_distance(inst, &customers);
        Self { customers, load, distance }
    }

    /// Builds a route with caller-supplied caches. [`validate`] reports any mismatch.
    pub fn with_cache(customers: Vec<usize>, load: i64, distance: Cost) -> Self {
        Self { customers, load, distance }
    }

    pub fn customers(&self) -> &[usize] {
        &self.customers
    }

    pub fn load(&self) -> i64 {
        self.load
    }

    pub fn distance(&self) -> Cost {
        self.distance
    }

    pub fn len(&self) -> usize {
        self.customers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.customers.is_empty()
    }
}

/// A set of depot-anchored routes. Empty routes are allowed internally.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Solution {
    routes: Vec<Route>,
}

impl Solution {
    pub fn new(routes: Vec<Route>) -> Self {
        Self { routes }
    }

    pub fn from_routes(inst: &Instance, routes: Vec<Vec<usize>>) -> Self {
        Self { routes: routes.into_iter().map(|r| Route::new(inst, r)).collect() }
    }

    pub fn routes(&self) -> &[Route] {
        &self.routes
    }

    pub fn route_sequences(&self) -> Vec<Vec<usize>> {
        self.routes.iter().map(|r| r.customers.clone()).collect()
    }

    pub fn set_route(&mut self, inst: &Instance, idx: usize, customers: Vec<usize>) {
        self.routes[idx] = Route::new(inst, customers);
    }

    pub fn push_route(&mut self, inst: &Instance, customers: Vec<usize>) {
        self.routes.push(Route::new(inst, customers));
    }

    pub fn remove_empty_routes(&mut self) {
        self.routes.retain(|r| !r.is_empty());
    }

    pub fn non_empty_routes(&self) -> usize {
        self.routes.iter().filter(|r| !r.is_empty()).count()
    }

    pub fn distance(&self) -> Cost {
        self.routes.iter().map(|r| r.distance).sum()
    }

    pub fn excess(&self, inst: &Instance) -> i64 {
        self.routes.iter().map(|r| (r.load - inst.capacity()).max(0)).sum()
    }

    pub fn is_feasible(&self, inst: &Instance) -> bool {
        self.excess(inst) == 0
    }

    /// Penalized total, `None` when infeasible under the forbidden mode.
    pub fn cost(&self, inst: &Instance, params: &CostParams) -> Option<Cost> {
        super::solution_cost(inst, self, params)
    }

    /// Concatenation of all routes in order.
    pub fn giant_tour(&self) -> Vec<usize> {
        self.routes.iter().flat_map(|r| r.customers.iter().copied()).collect()
    }

    /// `(route index, position within route)` for every vertex; entry 0 is unused.
    pub fn locate(&self, inst: &Instance) -> Vec<(usize, usize)> {
        let mut at = vec![(usize::MAX, usize::MAX); inst.size()];
        for (r, route) in self.routes.iter().enumerate() {
            for (p, &c) in route.customers.iter().enumerate() {
                at[c] = (r, p);
            }
        }
        at
    }

    /// Orientation- and order-independent form used for equality up to symmetry.
    pub fn normalized(&self) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = self
            .routes
            .iter()
            .filter(|r| !r.is_empty())
            .map(|r| {
                let fwd = r.customers.clone();
                let mut rev = fwd.clone();
                rev.reverse();
                fwd.min(rev)
            })
            .collect();
        out.sort();
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CacheMismatch {
    pub route: usize,
    pub cached_load: i64,
    pub actual_load: i64,
    pub cached_distance: Cost,
    pub actual_distance: Cost,
}

/// Everything wrong with a solution. Empty means feasible and consistent.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub missing: Vec<usize>,
    pub duplicated: Vec<usize>,
    pub unknown: Vec<usize>,
    /// `(route index, load)` for every route above capacity.
    pub overloaded: Vec<(usize, i64)>,
    pub cache_mismatches: Vec<CacheMismatch>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.missing.is_empty()
            && self.duplicated.is_empty()
            && self.unknown.is_empty()
            && self.overloaded.is_empty()
            && self.cache_mismatches.is_empty()
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_empty() {
            return write!(f, "ok");
        }
        write!(
            f,
            "missing {:?}, duplicated {:?}, unknown {:?}, overloaded {:?}, cache mismatches {}",
            self.missing,
            self.duplicated,
            self.unknown,
            self.overloaded,
            self.cache_mismatches.len()
        )
    }
}

pub fn validate(inst: &Instance, sol: &Solution) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut visits = vec![0usize; inst.size()];
    for (r, route) in sol.routes.iter().enumerate() {
        for &c in &route.customers {
            if c == 0 || c > inst.n() {
                report.unknown.push(c);
            } else {
                visits[c] += 1;
            }
        }
        let known: Vec<usize> = route.customers.iter().copied().filter(|&c| c >= 1 && c <= inst.n()).collect();
        let actual_load = route_load(inst, &known);
        let actual_distance = route_distance(inst, &known);
        if actual_load != route.load || actual_distance != route.distance || known.len() != route.len() {
            report.cache_mismatches.push(CacheMismatch {
                route: r,
                cached_load: route.load,
                actual_load,
                cached_distance: route.distance,
                actual_distance,
            });
        }
        if actual_load > inst.capacity() {
            report.overloaded.push((r, actual_load));
        }
    }
    for (c, &count) in visits.iter().enumerate().skip(1) {
        match count {
            0 => report.missing.push(c),
            1 => {}
            _ => report.duplicated.push(c),
        }
    }
    report
}
