//! Pattern injection: fragment the incumbent around a pattern, then reconnect optimally.

mod fragment;
mod reconnect;

pub use fragment::{ConcatError, Fragment, FragmentKind};
pub use reconnect::{
    best_reconnect, best_reconnect_with, brute_force_reconnect, initial_cost, ReconnectOptions, ReconnectStats,
    Reconnection, TooLarge, BRUTE_FORCE_MAX_FRAGMENTS, BRUTE_FORCE_MAX_ROUTES,
};

use std::collections::HashMap;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::model::{Cost, CostParams, Instance, Solution};
use crate::pattern::{contains_pattern, Pattern};

/// Fragments of the routes touched by a pattern.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FragmentSets {
    pub beg: Vec<Fragment>,
    pub mid: Vec<Fragment>,
    pub end: Vec<Fragment>,
    /// `R_init`: index in the solution and customer sequence of each touched route.
    pub init: Vec<(usize, Vec<usize>)>,
}

impl FragmentSets {
    pub fn fragment_count(&self) -> usize {
        self.beg.len() + self.mid.len() + self.end.len()
    }
}

/// Cuts every edge incident to a pattern vertex in the routes containing the
/// pattern, and adds the pattern itself as the last mid fragment.
pub fn fragmentize(inst: &Instance, sol: &Solution, p: &Pattern) -> FragmentSets {
    let mut in_pattern = vec![false; inst.size()];
    for &v in p.seq() {
        in_pattern[v] = true;
    }
    let mut sets = FragmentSets { beg: Vec::new(), mid: Vec::new(), end: Vec::new(), init: Vec::new() };
    for (idx, route) in sol.routes().iter().enumerate() {
        let cs = route.customers();
        if !cs.iter().any(|&c| in_pattern[c]) {
            continue;
        }
        sets.init.push((idx, cs.to_vec()));
        let mut ext = Vec::with_capacity(cs.len() + 2);
        ext.push(0);
        ext.extend_from_slice(cs);
        ext.push(0);
        let last = ext.len() - 1;
        let mut start = 0;
        for t in 0..last {
            if in_pattern[ext[t]] || in_pattern[ext[t + 1]] {
                push_piece(inst, &mut sets, &ext[start..=t], start == 0, false, &in_pattern);
                start = t + 1;
            }
        }
        push_piece(inst, &mut sets, &ext[start..], start == 0, true, &in_pattern);
    }
    let found: usize = sets.init.iter().map(|(_, r)| r.iter().filter(|&&c| in_pattern[c]).count()).sum();
    assert_eq!(found, p.len(), "pattern {p} not covered by the solution");
    sets.mid.push(Fragment::new(inst, p.seq().to_vec()));
    sets
}

fn push_piece(inst: &Instance, sets: &mut FragmentSets, piece: &[usize], at_start: bool, at_end: bool, in_pattern: &[bool]) {
    if piece.len() == 1 && piece[0] != 0 && in_pattern[piece[0]] {
        return;
    }
    let f = if at_end && piece == [0] { Fragment::depot_end(inst) } else { Fragment::new(inst, piece.to_vec()) };
    match (at_start, at_end) {
        (true, _) => sets.beg.push(f),
        (false, true) => sets.end.push(f),
        (false, false) => sets.mid.push(f),
    }
}

/// Number of edges of `before` that are absent from `after` (multiset difference,
/// undirected, depot legs included, empty routes contribute nothing).
pub fn move_order(before: &[Vec<usize>], after: &[Vec<usize>]) -> usize {
    let mut count: HashMap<(usize, usize), i64> = HashMap::new();
    for r in before.iter().filter(|r| !r.is_empty()) {
        for e in route_edges(r) {
            *count.entry(e).or_default() += 1;
        }
    }
    for r in after.iter().filter(|r| !r.is_empty()) {
        for e in route_edges(r) {
            *count.entry(e).or_default() -= 1;
        }
    }
    count.values().filter(|&&c| c > 0).map(|&c| c as usize).sum()
}

fn route_edges(r: &[usize]) -> impl Iterator<Item = (usize, usize)> + '_ {
    let n = r.len();
    (0..=n).map(move |t| {
        let a = if t == 0 { 0 } else { r[t - 1] };
        let b = if t == n { 0 } else { r[t] };
        (a.min(b), a.max(b))
    })
}

/// One applied injection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MoveRecord {
    pub pattern_len: usize,
    pub order: usize,
    pub routes: usize,
    pub delta: Cost,
}

pub const MOVE_CSV_HEADER: &str = "pattern_len,order,routes,delta";

pub fn write_moves<W: Write>(moves: &[MoveRecord], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{MOVE_CSV_HEADER}")?;
    for m in moves {
        writeln!(out, "{},{},{},{}", m.pattern_len, m.order, m.routes, m.delta)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InjectParams {
    pub cost: CostParams,
    /// Patterns spread over more routes than this are skipped.
    pub max_routes: usize,
}

impl InjectParams {
    pub const DEFAULT_MAX_ROUTES: usize = 4;

    pub fn new(cost: CostParams) -> Self {
        Self { cost, max_routes: Self::DEFAULT_MAX_ROUTES }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PassReport {
    pub tried: usize,
    pub skipped_present: usize,
    pub skipped_routes: usize,
    pub moves: Vec<MoveRecord>,
}

/// One sweep over the candidate patterns in random order, applying every
/// improving injection to `sol`. Empty routes created along the way are dropped.
pub fn pils_pass<R: Rng>(
    inst: &Instance,
    sol: &mut Solution,
    candidates: &[Pattern],
    params: &InjectParams,
    rng: &mut R,
) -> PassReport {
    let mut report = PassReport::default();
    if candidates.is_empty() {
        return report;
    }
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.shuffle(rng);
    let mut route_of = vec![usize::MAX; inst.size()];
    for (r, route) in sol.routes().iter().enumerate() {
        for &c in route.customers() {
            route_of[c] = r;
        }
    }
    for i in order {
        let p = &candidates[i];
        if contains_pattern(sol, p) {
            report.skipped_present += 1;
            continue;
        }
        let mut touched: Vec<usize> = p.seq().iter().map(|&c| route_of[c]).collect();
        touched.sort_unstable();
        touched.dedup();
        if touched.len() > params.max_routes {
            report.skipped_routes += 1;
            continue;
        }
        report.tried += 1;
        let sets = fragmentize(inst, sol, p);
        let Some(rec) = best_reconnect(&sets, inst, &params.cost) else { continue };
        let before_cost = initial_cost(&sets, inst, &params.cost);
        let before: Vec<Vec<usize>> = sets.init.iter().map(|(_, r)| r.clone()).collect();
        let order = move_order(&before, &rec.routes);
        for ((idx, _), route) in sets.init.iter().zip(&rec.routes) {
            for &c in route {
                route_of[c] = *idx;
            }
            sol.set_route(inst, *idx, route.clone());
        }
        report.moves.push(MoveRecord {
            pattern_len: p.len(),
            order,
            routes: sets.init.len(),
            delta: rec.cost - before_cost.unwrap_or(rec.cost),
        });
    }
    sol.remove_empty_routes();
    report
}
