#![allow(dead_code)]

use std::collections::HashMap;

use pils::model::{Cost, CostParams, FeasibilityMode, Instance, Solution};
use pils::search::Move;
use rand::seq::SliceRandom;
use rand::Rng;

/// Random integer coordinates on a 100x100 grid, demands 1..=10.
pub fn random_instance<R: Rng>(rng: &mut R, n: usize, capacity: i64) -> Instance {
    let coords = (0..=n)
        .map(|_| (rng.gen_range(0..=100) as f64, rng.gen_range(0..=100) as f64))
        .collect();
    let demands = (0..=n).map(|i| if i == 0 { 0 } else { rng.gen_range(1..=10) }).collect();
    Instance::new("random", coords, demands, capacity).unwrap()
}

/// Random giant tour cut into routes at random points; may violate capacity.
pub fn random_solution<R: Rng>(inst: &Instance, rng: &mut R) -> Solution {
    let mut perm: Vec<usize> = (1..=inst.n()).collect();
    perm.shuffle(rng);
    let mut routes = vec![Vec::new()];
    for c in perm {
        if !routes.last().unwrap().is_empty() && rng.gen_bool(0.25) {
            routes.push(Vec::new());
        }
        routes.last_mut().unwrap().push(c);
    }
    Solution::from_routes(inst, routes)
}

/// Random giant tour split greedily so every route respects capacity.
pub fn random_feasible_solution<R: Rng>(inst: &Instance, rng: &mut R) -> Solution {
    let mut perm: Vec<usize> = (1..=inst.n()).collect();
    perm.shuffle(rng);
    let mut routes: Vec<Vec<usize>> = vec![Vec::new()];
    let mut load = 0;
    for c in perm {
        let q = inst.demand(c);
        if load + q > inst.capacity() || (!routes.last().unwrap().is_empty() && rng.gen_bool(0.1)) {
            routes.push(Vec::new());
            load = 0;
        }
        load += q;
        routes.last_mut().unwrap().push(c);
    }
    Solution::from_routes(inst, routes)
}

fn nint(inst: &Instance, a: usize, b: usize) -> Cost {
    let (xa, ya) = inst.coord(a);
    let (xb, yb) = inst.coord(b);
    ((xa - xb).powi(2) + (ya - yb).powi(2)).sqrt().round() as Cost
}

/// Cost recomputed from coordinates; routes may or may not carry depot ends.
pub fn oracle_cost(inst: &Instance, routes: &[Vec<usize>], params: &CostParams) -> Option<Cost> {
    let mut total = 0;
    for r in routes {
        let custs: Vec<usize> = r.iter().copied().filter(|&v| v != 0).collect();
        if custs.is_empty() {
            continue;
        }
        let mut prev = 0;
        for &c in &custs {
            total += nint(inst, prev, c);
            prev = c;
        }
        total += nint(inst, prev, 0);
        let load: i64 = custs.iter().map(|&c| inst.demand(c)).sum();
        let excess = (load - inst.capacity()).max(0);
        if excess > 0 {
            match params.mode {
                FeasibilityMode::Forbidden => return None,
                FeasibilityMode::Penalized => total += params.penalty * excess,
            }
        }
    }
    Some(total)
}

/// Every move of the four neighborhoods on depot-extended routes.
pub fn all_moves(routes: &[Vec<usize>]) -> Vec<Move> {
    let mut out = Vec::new();
    let nr = routes.len();
    for from in 0..nr {
        for pos in 1..routes[from].len() - 1 {
            for (to, dest) in routes.iter().enumerate() {
                for after in 0..dest.len() - 1 {
                    out.push(Move::Relocate { from, pos, to, after });
                }
            }
        }
    }
    let slots: Vec<(usize, usize)> =
        (0..nr).flat_map(|r| (1..routes[r].len() - 1).map(move |p| (r, p))).collect();
    for (a, &(r1, p1)) in slots.iter().enumerate() {
        for &(r2, p2) in &slots[a + 1..] {
            out.push(Move::Swap { r1, p1, r2, p2 });
        }
    }
    for (route, r) in routes.iter().enumerate() {
        for i in 0..r.len() {
            for j in i + 2..r.len().saturating_sub(1) {
                out.push(Move::TwoOpt { route, i, j });
            }
        }
    }
    for r1 in 0..nr {
        for r2 in r1 + 1..nr {
            for i in 0..routes[r1].len() - 1 {
                for j in 0..routes[r2].len() - 1 {
                    for reversed in [false, true] {
                        out.push(Move::TwoOptStar { r1, i, r2, j, reversed });
                    }
                }
            }
        }
    }
    out
}

/// A uniformly drawn move from `all_moves`-style index ranges.
pub fn random_move<R: Rng>(routes: &[Vec<usize>], rng: &mut R) -> Move {
    let nr = routes.len();
    let customer_slot = |rng: &mut R| loop {
        let r = rng.gen_range(0..nr);
        if routes[r].len() > 2 {
            return (r, rng.gen_range(1..routes[r].len() - 1));
        }
    };
    match rng.gen_range(0..4) {
        0 => {
            let (from, pos) = customer_slot(rng);
            let to = rng.gen_range(0..nr);
            let after = rng.gen_range(0..routes[to].len() - 1);
            Move::Relocate { from, pos, to, after }
        }
        1 => {
            let (r1, p1) = customer_slot(rng);
            let (r2, p2) = customer_slot(rng);
            Move::Swap { r1, p1, r2, p2 }
        }
        2 => {
            let route = rng.gen_range(0..nr);
            let len = routes[route].len();
            let i = rng.gen_range(0..len - 1);
            let j = rng.gen_range(i..len - 1);
            Move::TwoOpt { route, i, j }
        }
        _ => {
            let r1 = rng.gen_range(0..nr);
            let r2 = rng.gen_range(0..nr);
            let i = rng.gen_range(0..routes[r1].len() - 1);
            let j = rng.gen_range(0..routes[r2].len() - 1);
            Move::TwoOptStar { r1, i, r2, j, reversed: rng.gen_bool(0.5) }
        }
    }
}

/// Checks `count` random move deltas against from-scratch recomputation,
/// in both feasibility modes. Returns the number of evaluated moves.
pub fn check_random_deltas(count: usize, seed: u64) -> Result<usize, String> {
    use pils::search::{LocalSearch, Neighborhoods};
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut checked = 0;
    let mut evaluated = 0;
    while checked < count {
        let n = rng.gen_range(3..=40);
        let cap = rng.gen_range(15..=60);
        let inst = random_instance(&mut rng, n, cap);
        let nb = Neighborhoods::new(&inst, 10);
        let forbidden = rng.gen_bool(0.5);
        let (sol, params) = if forbidden {
            (random_feasible_solution(&inst, &mut rng), CostParams::new(1, FeasibilityMode::Forbidden))
        } else {
            (random_solution(&inst, &mut rng), CostParams::new(rng.gen_range(1..=50), FeasibilityMode::Penalized))
        };
        let mut ls = LocalSearch::new(&inst, &sol, &nb, params, None);
        for _ in 0..50 {
            let before = oracle_cost(&inst, ls.routes(), &params).ok_or("start cost undefined")?;
            let mv = random_move(ls.routes(), &mut rng);
            checked += 1;
            let delta = ls.delta(&mv);
            let relaxed = CostParams::new(1, FeasibilityMode::Penalized);
            let current = ls.solution();
            if LocalSearch::new(&inst, &current, &nb, relaxed, None).delta(&mv).is_none() {
                if delta.is_some() {
                    return Err(format!("{mv:?}: no-op or malformed move accepted"));
                }
                continue;
            }
            let mut probe = LocalSearch::new(&inst, &current, &nb, params, None);
            probe.apply(&mv);
            let after = oracle_cost(&inst, probe.routes(), &params);
            match (delta, after) {
                (Some(d), Some(a)) => {
                    if a - before != d {
                        return Err(format!("{mv:?}: delta {d}, recomputed {}", a - before));
                    }
                    evaluated += 1;
                    if rng.gen_bool(0.3) {
                        let moved = probe.solution();
                        ls = LocalSearch::new(&inst, &moved, &nb, params, None);
                    }
                }
                (Some(d), None) => return Err(format!("{mv:?}: delta {d} accepted an infeasible result")),
                (None, Some(_)) => return Err(format!("{mv:?}: feasible move rejected")),
                (None, _) => {}
            }
        }
    }
    Ok(evaluated)
}

/// Runs descent with complete neighbor lists and verifies by enumeration that
/// no move of the four neighborhoods improves the result.
pub fn check_local_minimality(instances: usize, seed: u64) -> Result<usize, String> {
    use pils::search::{descend, LocalSearch, Neighborhoods};
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut moves = 0;
    for case in 0..instances {
        let n = rng.gen_range(5..=50);
        let cap = rng.gen_range(20..=60);
        let inst = random_instance(&mut rng, n, cap);
        let nb = Neighborhoods::new(&inst, n);
        let forbidden = case % 2 == 0;
        let (start, params) = if forbidden {
            (random_feasible_solution(&inst, &mut rng), CostParams::new(1, FeasibilityMode::Forbidden))
        } else {
            (random_solution(&inst, &mut rng), CostParams::new(rng.gen_range(1..=50), FeasibilityMode::Penalized))
        };
        let out = descend(&inst, &start, &nb, &params, None, &mut rng);
        let base_ls = LocalSearch::new(&inst, &out, &nb, params, None);
        let base = oracle_cost(&inst, base_ls.routes(), &params)
            .ok_or_else(|| format!("case {case}: descent returned an infeasible solution"))?;
        let start_cost = oracle_cost(&inst, &start.route_sequences(), &params).unwrap();
        if base > start_cost {
            return Err(format!("case {case}: descent worsened {start_cost} -> {base}"));
        }
        for mv in all_moves(base_ls.routes()) {
            let mut probe = LocalSearch::new(&inst, &out, &nb, params, None);
            probe.apply(&mv);
            moves += 1;
            if let Some(c) = oracle_cost(&inst, probe.routes(), &params) {
                if c < base {
                    return Err(format!("case {case} (n={n}): {mv:?} improves {base} -> {c}"));
                }
            }
        }
    }
    Ok(moves)
}

/// Independent frequency table with first-seen ranks.
#[derive(Default)]
pub struct Tally {
    freq: HashMap<Vec<usize>, (u64, u64)>,
    next: u64,
}

impl Tally {
    pub fn extract(&mut self, sol: &Solution, lmin: usize, lmax: usize) {
        for l in lmin..=lmax {
            for r in sol.route_sequences() {
                if r.len() < l {
                    continue;
                }
                for w in r.windows(l) {
                    let rev: Vec<usize> = w.iter().rev().copied().collect();
                    let key = if rev < w.to_vec() { rev } else { w.to_vec() };
                    let next = &mut self.next;
                    let e = self.freq.entry(key).or_insert_with(|| {
                        *next += 1;
                        (0, *next)
                    });
                    e.0 += 1;
                }
            }
        }
    }

    pub fn top(&self, len: usize, k: usize) -> Vec<Vec<usize>> {
        let mut rows: Vec<(&Vec<usize>, &(u64, u64))> = self.freq.iter().filter(|(p, _)| p.len() == len).collect();
        rows.sort_by_key(|(_, &(f, o))| (std::cmp::Reverse(f), o));
        let mut out: Vec<Vec<usize>> = rows.into_iter().take(k).map(|(p, _)| p.clone()).collect();
        out.sort();
        out
    }
}
