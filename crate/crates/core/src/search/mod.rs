//! Classical neighborhood descent: Relocate, Swap, 2-opt and 2-opt*.
//!
//! Moves are evaluated in O(1) from per-route prefix loads and a cost matrix,
//! which is either the instance distance matrix or a GLS augmented matrix.
//! Candidate moves are generated from granular neighbor lists: for every
//! customer `u`, only moves creating an edge between `u` and one of its `K`
//! nearest customers (or a route endpoint depot) are considered.

mod penalties;

pub use penalties::EdgePenalties;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::model::{Cost, CostParams, FeasibilityMode, Instance, Solution};

pub const DEFAULT_GRANULARITY: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MoveKind {
    Relocate,
    Swap,
    TwoOpt,
    TwoOptStar,
}

impl MoveKind {
    pub const ALL: [MoveKind; 4] = [MoveKind::Relocate, MoveKind::Swap, MoveKind::TwoOpt, MoveKind::TwoOptStar];
}

/// A concrete move. Positions index the depot-extended route `[0, c1, .., ck, 0]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Move {
    /// Move the customer at `pos` of route `from` between positions `after` and
    /// `after + 1` of route `to` (indices taken before removal).
    Relocate { from: usize, pos: usize, to: usize, after: usize },
    Swap { r1: usize, p1: usize, r2: usize, p2: usize },
    /// Reverse positions `i + 1 ..= j`.
    TwoOpt { route: usize, i: usize, j: usize },
    /// Exchange the tails after `i` in `r1` and after `j` in `r2`; when
    /// `reversed`, head of `r1` joins the reversed head of `r2` instead.
    TwoOptStar { r1: usize, i: usize, r2: usize, j: usize, reversed: bool },
}

impl Move {
    pub fn kind(&self) -> MoveKind {
        match self {
            Move::Relocate { .. } => MoveKind::Relocate,
            Move::Swap { .. } => MoveKind::Swap,
            Move::TwoOpt { .. } => MoveKind::TwoOpt,
            Move::TwoOptStar { .. } => MoveKind::TwoOptStar,
        }
    }

    pub fn routes(&self) -> (usize, usize) {
        match *self {
            Move::Relocate { from, to, .. } => (from, to),
            Move::Swap { r1, r2, .. } => (r1, r2),
            Move::TwoOpt { route, .. } => (route, route),
            Move::TwoOptStar { r1, r2, .. } => (r1, r2),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MoveDelta {
    pub mv: Move,
    /// Change of the active (possibly augmented) cost.
    pub delta: Cost,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanPolicy {
    First,
    Best,
}

/// Per-instance granular neighbor lists.
#[derive(Debug, Clone)]
pub struct Neighborhoods {
    granularity: usize,
    lists: Vec<Vec<usize>>,
    /// Whether the depot lies within each customer's granular radius.
    depot_near: Vec<bool>,
}

impl Neighborhoods {
    pub fn new(inst: &Instance, granularity: usize) -> Self {
        let granularity = granularity.max(1);
        let mut lists = vec![Vec::new(); inst.size()];
        let mut depot_near = vec![true; inst.size()];
        for u in 1..inst.size() {
            lists[u] = inst.nearest_customers(u, granularity);
            if lists[u].len() == granularity && granularity < inst.n() - 1 {
                let radius = inst.distance(u, *lists[u].last().unwrap());
                depot_near[u] = inst.distance(u, 0) <= radius;
            }
        }
        Self { granularity, lists, depot_near }
    }

    pub fn granularity(&self) -> usize {
        self.granularity
    }

    pub fn of(&self, u: usize) -> &[usize] {
        &self.lists[u]
    }
}

/// Mutable route representation used during descent.
pub struct LocalSearch<'a> {
    inst: &'a Instance,
    nb: &'a Neighborhoods,
    costs: &'a [Cost],
    params: CostParams,
    size: usize,
    routes: Vec<Vec<usize>>,
    loads: Vec<i64>,
    prefix: Vec<Vec<i64>>,
    at: Vec<(usize, usize)>,
}

impl<'a> LocalSearch<'a> {
    /// `penalties` switches the acceptance criterion to the augmented edge cost.
    pub fn new(
        inst: &'a Instance,
        sol: &Solution,
        nb: &'a Neighborhoods,
        params: CostParams,
        penalties: Option<&'a EdgePenalties>,
    ) -> Self {
        let costs = penalties.map_or(inst.distance_matrix(), |p| p.augmented_matrix());
        let mut ls = Self {
            inst,
            nb,
            costs,
            params,
            size: inst.size(),
            routes: Vec::new(),
            loads: Vec::new(),
            prefix: Vec::new(),
            at: vec![(usize::MAX, usize::MAX); inst.size()],
        };
        for r in sol.routes().iter().filter(|r| !r.is_empty()) {
            let mut ext = Vec::with_capacity(r.len() + 2);
            ext.push(0);
            ext.extend_from_slice(r.customers());
            ext.push(0);
            ls.routes.push(ext);
        }
        ls.routes.push(vec![0, 0]);
        ls.loads = vec![0; ls.routes.len()];
        ls.prefix = vec![Vec::new(); ls.routes.len()];
        for r in 0..ls.routes.len() {
            ls.refresh(r);
        }
        ls
    }

    pub fn solution(&self) -> Solution {
        Solution::from_routes(
            self.inst,
            self.routes
                .iter()
                .filter(|r| r.len() > 2)
                .map(|r| r[1..r.len() - 1].to_vec())
                .collect(),
        )
    }

    /// Depot-extended routes, including exactly one empty `[0, 0]` route.
    pub fn routes(&self) -> &[Vec<usize>] {
        &self.routes
    }

    /// Active cost: augmented (or plain) edges plus capacity penalties.
    /// `None` if some route violates capacity under the forbidden mode.
    pub fn cost(&self) -> Option<Cost> {
        let mut total = 0;
        for (r, route) in self.routes.iter().enumerate() {
            total += route.windows(2).map(|w| self.d(w[0], w[1])).sum::<Cost>();
            total += self.params.excess_cost(self.loads[r], self.inst.capacity())?;
        }
        Some(total)
    }

    #[inline]
    fn d(&self, a: usize, b: usize) -> Cost {
        self.costs[a * self.size + b]
    }

    fn refresh(&mut self, r: usize) {
        let route = &self.routes[r];
        let pre = &mut self.prefix[r];
        pre.clear();
        let mut acc = 0;
        for (p, &v) in route.iter().enumerate() {
            acc += self.inst.demand(v);
            pre.push(acc);
            if v != 0 {
                self.at[v] = (r, p);
            }
        }
        self.loads[r] = acc;
    }

    /// Penalty change for new loads of the touched routes; `None` rejects.
    #[inline]
    fn load_delta(&self, changes: &[(usize, i64)]) -> Option<Cost> {
        let cap = self.inst.capacity();
        let mut delta = 0;
        for &(r, new_load) in changes {
            match self.params.mode {
                FeasibilityMode::Penalized => {
                    delta += self.params.excess_cost(new_load, cap)? - self.params.excess_cost(self.loads[r], cap)?;
                }
                FeasibilityMode::Forbidden => {
                    if new_load > cap && new_load > self.loads[r] {
                        return None;
                    }
                }
            }
        }
        Some(delta)
    }

    /// Active-cost change of `mv`, or `None` for no-ops and rejected moves.
    pub fn delta(&self, mv: &Move) -> Option<Cost> {
        match *mv {
            Move::Relocate { from, pos, to, after } => {
                let e1 = &self.routes[from];
                let e2 = &self.routes[to];
                if pos == 0 || pos + 1 >= e1.len() || after + 1 >= e2.len() {
                    return None;
                }
                if from == to && (after == pos || after + 1 == pos) {
                    return None;
                }
                let u = e1[pos];
                let removal = self.d(e1[pos - 1], e1[pos + 1]) - self.d(e1[pos - 1], u) - self.d(u, e1[pos + 1]);
                let insertion = self.d(e2[after], u) + self.d(u, e2[after + 1]) - self.d(e2[after], e2[after + 1]);
                let pen = if from == to {
                    0
                } else {
                    let q = self.inst.demand(u);
                    self.load_delta(&[(from, self.loads[from] - q), (to, self.loads[to] + q)])?
                };
                Some(removal + insertion + pen)
            }
            Move::Swap { r1, p1, r2, p2 } => {
                let e1 = &self.routes[r1];
                let e2 = &self.routes[r2];
                if p1 == 0 || p2 == 0 || p1 + 1 >= e1.len() || p2 + 1 >= e2.len() || (r1 == r2 && p1 == p2) {
                    return None;
                }
                let (u, v) = (e1[p1], e2[p2]);
                if r1 == r2 && p1.abs_diff(p2) == 1 {
                    let (a, b) = (p1.min(p2), p1.max(p2));
                    let e = e1;
                    return Some(
                        self.d(e[a - 1], e[b]) + self.d(e[a], e[b + 1]) - self.d(e[a - 1], e[a]) - self.d(e[b], e[b + 1]),
                    );
                }
                let mut delta = self.d(e1[p1 - 1], v) + self.d(v, e1[p1 + 1]) - self.d(e1[p1 - 1], u) - self.d(u, e1[p1 + 1])
                    + self.d(e2[p2 - 1], u)
                    + self.d(u, e2[p2 + 1])
                    - self.d(e2[p2 - 1], v)
                    - self.d(v, e2[p2 + 1]);
                if r1 != r2 {
                    let (qu, qv) = (self.inst.demand(u), self.inst.demand(v));
                    delta += self.load_delta(&[(r1, self.loads[r1] - qu + qv), (r2, self.loads[r2] - qv + qu)])?;
                }
                Some(delta)
            }
            Move::TwoOpt { route, i, j } => {
                let e = &self.routes[route];
                if i + 2 > j || j + 1 >= e.len() {
                    return None;
                }
                Some(self.d(e[i], e[j]) + self.d(e[i + 1], e[j + 1]) - self.d(e[i], e[i + 1]) - self.d(e[j], e[j + 1]))
            }
            Move::TwoOptStar { r1, i, r2, j, reversed } => {
                let e1 = &self.routes[r1];
                let e2 = &self.routes[r2];
                if r1 == r2 || i + 1 >= e1.len() || j + 1 >= e2.len() {
                    return None;
                }
                let (h1, h2) = (self.prefix[r1][i], self.prefix[r2][j]);
                let (t1, t2) = (self.loads[r1] - h1, self.loads[r2] - h2);
                let removed = self.d(e1[i], e1[i + 1]) + self.d(e2[j], e2[j + 1]);
                let (added, l1, l2) = if reversed {
                    (self.d(e1[i], e2[j]) + self.d(e1[i + 1], e2[j + 1]), h1 + h2, t1 + t2)
                } else {
                    (self.d(e1[i], e2[j + 1]) + self.d(e2[j], e1[i + 1]), h1 + t2, h2 + t1)
                };
                Some(added - removed + self.load_delta(&[(r1, l1), (r2, l2)])?)
            }
        }
    }

    pub fn apply(&mut self, mv: &Move) {
        match *mv {
            Move::Relocate { from, pos, to, after } => {
                let u = self.routes[from].remove(pos);
                let at = if from == to && after > pos { after } else { after + 1 };
                self.routes[to].insert(at, u);
                self.refresh(from);
                if to != from {
                    self.refresh(to);
                }
            }
            Move::Swap { r1, p1, r2, p2 } => {
                if r1 == r2 {
                    self.routes[r1].swap(p1, p2);
                } else {
                    let u = self.routes[r1][p1];
                    let v = std::mem::replace(&mut self.routes[r2][p2], u);
                    self.routes[r1][p1] = v;
                    self.refresh(r2);
                }
                self.refresh(r1);
            }
            Move::TwoOpt { route, i, j } => {
                self.routes[route][i + 1..=j].reverse();
                self.refresh(route);
            }
            Move::TwoOptStar { r1, i, r2, j, reversed } => {
                let a = std::mem::take(&mut self.routes[r1]);
                let b = std::mem::take(&mut self.routes[r2]);
                let (new1, new2): (Vec<usize>, Vec<usize>) = if reversed {
                    (
                        a[..=i].iter().chain(b[..=j].iter().rev()).copied().collect(),
                        a[i + 1..].iter().rev().chain(b[j + 1..].iter()).copied().collect(),
                    )
                } else {
                    (
                        a[..=i].iter().chain(b[j + 1..].iter()).copied().collect(),
                        b[..=j].iter().chain(a[i + 1..].iter()).copied().collect(),
                    )
                };
                self.routes[r1] = new1;
                self.routes[r2] = new2;
                self.refresh(r1);
                self.refresh(r2);
            }
        }
        self.keep_one_empty_route();
    }

    fn keep_one_empty_route(&mut self) {
        let empties = self.routes.iter().filter(|r| r.len() == 2).count();
        if empties == 1 {
            return;
        }
        if empties == 0 {
            self.routes.push(vec![0, 0]);
            self.loads.push(0);
            self.prefix.push(vec![0, 0]);
            return;
        }
        let mut seen_empty = false;
        let keep: Vec<bool> = self
            .routes
            .iter()
            .map(|r| {
                if r.len() > 2 {
                    true
                } else {
                    !std::mem::replace(&mut seen_empty, true)
                }
            })
            .collect();
        let mut idx = 0;
        self.routes.retain(|_| {
            idx += 1;
            keep[idx - 1]
        });
        self.loads = vec![0; self.routes.len()];
        self.prefix = vec![Vec::new(); self.routes.len()];
        for r in 0..self.routes.len() {
            self.refresh(r);
        }
    }

    /// Depot partners of `u`: `(route, extended position)` of route endpoints.
    fn depot_partners(&self, u: usize, out: &mut Vec<(usize, usize)>) {
        out.clear();
        if self.nb.depot_near[u] {
            for (r, route) in self.routes.iter().enumerate() {
                out.push((r, 0));
                out.push((r, route.len() - 1));
            }
        } else {
            let own = self.at[u].0;
            let own_len = self.routes[own].len();
            out.push((own, 0));
            out.push((own, own_len - 1));
            if let Some(r) = self.routes.iter().position(|r| r.len() == 2) {
                out.push((r, 0));
                out.push((r, 1));
            }
        }
    }

    /// Candidate moves of `kind` that create an edge between `u` and the vertex
    /// at `(r2, q)`.
    fn candidates(&self, kind: MoveKind, u: usize, r2: usize, q: usize, out: &mut Vec<Move>) {
        let (r1, p) = self.at[u];
        let partner = self.routes[r2][q];
        let k2 = self.routes[r2].len() - 2;
        match kind {
            MoveKind::Relocate => {
                if partner == 0 {
                    out.push(Move::Relocate { from: r1, pos: p, to: r2, after: if q == 0 { 0 } else { k2 } });
                } else {
                    out.push(Move::Relocate { from: r1, pos: p, to: r2, after: q });
                    out.push(Move::Relocate { from: r1, pos: p, to: r2, after: q - 1 });
                }
            }
            MoveKind::Swap => {
                if partner != 0 {
                    out.push(Move::Swap { r1, p1: p, r2, p2: q });
                }
            }
            MoveKind::TwoOpt => {
                if r1 != r2 {
                    return;
                }
                let (lo, hi) = (p.min(q), p.max(q));
                out.push(Move::TwoOpt { route: r1, i: lo, j: hi });
                if lo >= 1 {
                    out.push(Move::TwoOpt { route: r1, i: lo - 1, j: hi - 1 });
                }
            }
            MoveKind::TwoOptStar => {
                if r1 == r2 {
                    return;
                }
                if q >= 1 {
                    out.push(Move::TwoOptStar { r1, i: p, r2, j: q - 1, reversed: false });
                    out.push(Move::TwoOptStar { r1, i: p - 1, r2, j: q - 1, reversed: true });
                }
                if q <= k2 {
                    out.push(Move::TwoOptStar { r1, i: p - 1, r2, j: q, reversed: false });
                    out.push(Move::TwoOptStar { r1, i: p, r2, j: q, reversed: true });
                }
            }
        }
    }

    /// Scans the granular neighborhood of `kind` in random anchor order.
    /// With `apply`, every improving move found is applied immediately and the
    /// number of applied moves is returned through the second tuple field.
    fn sweep<R: Rng>(&mut self, kind: MoveKind, policy: ScanPolicy, apply: bool, rng: &mut R) -> (Option<MoveDelta>, usize) {
        let mut order: Vec<usize> = (1..self.size).collect();
        order.shuffle(rng);
        let mut best: Option<MoveDelta> = None;
        let mut applied = 0;
        let mut moves = Vec::with_capacity(8);
        let mut depots = Vec::new();
        for &u in &order {
            let nb = self.nb;
            let mut partners: Vec<(usize, usize)> = nb.of(u).iter().map(|&v| self.at[v]).collect();
            self.depot_partners(u, &mut depots);
            partners.extend_from_slice(&depots);
            for (idx, &(r2, q)) in partners.iter().enumerate() {
                // positions move when earlier moves are applied
                let (r2, q) = if idx < nb.of(u).len() {
                    self.at[nb.of(u)[idx]]
                } else {
                    let (r, end) = (r2, q);
                    if r >= self.routes.len() {
                        continue;
                    }
                    (r, if end == 0 { 0 } else { self.routes[r].len() - 1 })
                };
                moves.clear();
                self.candidates(kind, u, r2, q, &mut moves);
                for mv in &moves {
                    let Some(delta) = self.delta(mv) else { continue };
                    if delta >= 0 {
                        continue;
                    }
                    if apply {
                        self.apply(mv);
                        applied += 1;
                        break;
                    }
                    if best.is_none_or(|b| delta < b.delta) {
                        best = Some(MoveDelta { mv: *mv, delta });
                        if policy == ScanPolicy::First {
                            return (best, 0);
                        }
                    }
                }
            }
        }
        (best, applied)
    }

    /// Improving move of one neighborhood under the active cost, without applying it.
    pub fn scan<R: Rng>(&mut self, kind: MoveKind, policy: ScanPolicy, rng: &mut R) -> Option<MoveDelta> {
        self.sweep(kind, policy, false, rng).0
    }

    /// Applies improving moves until no neighborhood improves. Returns the number of moves.
    pub fn run<R: Rng>(&mut self, rng: &mut R) -> usize {
        let mut total = 0;
        loop {
            let mut improved = false;
            for kind in MoveKind::ALL {
                loop {
                    let (_, applied) = self.sweep(kind, ScanPolicy::First, true, rng);
                    total += applied;
                    if applied == 0 {
                        break;
                    }
                    improved = true;
                }
            }
            if !improved {
                return total;
            }
        }
    }
}

/// Runs the full descent and returns a local minimum under the active cost.
pub fn descend<R: Rng>(
    inst: &Instance,
    sol: &Solution,
    nb: &Neighborhoods,
    params: &CostParams,
    penalties: Option<&EdgePenalties>,
    rng: &mut R,
) -> Solution {
    let mut ls = LocalSearch::new(inst, sol, nb, *params, penalties);
    ls.run(rng);
    ls.solution()
}

/// Single-neighborhood scans, mostly useful for inspection and tests.
pub fn scan_relocate<R: Rng>(inst: &Instance, sol: &Solution, nb: &Neighborhoods, params: &CostParams, policy: ScanPolicy, rng: &mut R) -> Option<MoveDelta> {
    LocalSearch::new(inst, sol, nb, *params, None).scan(MoveKind::Relocate, policy, rng)
}

pub fn scan_swap<R: Rng>(inst: &Instance, sol: &Solution, nb: &Neighborhoods, params: &CostParams, policy: ScanPolicy, rng: &mut R) -> Option<MoveDelta> {
    LocalSearch::new(inst, sol, nb, *params, None).scan(MoveKind::Swap, policy, rng)
}

pub fn scan_2opt<R: Rng>(inst: &Instance, sol: &Solution, nb: &Neighborhoods, params: &CostParams, policy: ScanPolicy, rng: &mut R) -> Option<MoveDelta> {
    LocalSearch::new(inst, sol, nb, *params, None).scan(MoveKind::TwoOpt, policy, rng)
}

pub fn scan_2opt_star<R: Rng>(inst: &Instance, sol: &Solution, nb: &Neighborhoods, params: &CostParams, policy: ScanPolicy, rng: &mut R) -> Option<MoveDelta> {
    LocalSearch::new(inst, sol, nb, *params, None).scan(MoveKind::TwoOptStar, policy, rng)
}
