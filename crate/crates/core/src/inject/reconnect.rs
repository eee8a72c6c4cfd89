use super::{Fragment, FragmentSets};
use crate::model::{Cost, CostParams, Instance};

/// A complete reconnection: one customer sequence per route of `R_init`, in beg order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reconnection {
    pub routes: Vec<Vec<usize>>,
    pub cost: Cost,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReconnectOptions {
    /// Cut branches whose fragment cost sum already reaches the best cost.
    pub prune: bool,
    /// Recompute the running bound from the fragment sequences at every node.
    pub verify_bound: bool,
}

impl Default for ReconnectOptions {
    fn default() -> Self {
        Self { prune: true, verify_bound: cfg!(debug_assertions) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ReconnectStats {
    pub nodes: u64,
}

#[derive(Debug, Clone, Copy)]
struct Piece {
    first: usize,
    last: usize,
    load: i64,
    dist: Cost,
}

impl Piece {
    fn of(f: &Fragment) -> Self {
        Self { first: f.first(), last: f.last(), load: f.load(), dist: f.distance() }
    }

    fn rev(self) -> Self {
        Self { first: self.last, last: self.first, ..self }
    }

    fn join(self, other: Piece, inst: &Instance) -> Self {
        Self {
            first: self.first,
            last: other.last,
            load: self.load + other.load,
            dist: self.dist + inst.distance(self.last, other.first) + other.dist,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Step {
    Mid(usize, bool),
    End(usize),
}

struct Search<'a> {
    inst: &'a Instance,
    params: &'a CostParams,
    sets: &'a FragmentSets,
    begs: Vec<Piece>,
    beg_cost: Vec<Cost>,
    mids: Vec<Piece>,
    mid_cost: Vec<Cost>,
    ends: Vec<Piece>,
    end_cost: Vec<Cost>,
    mid_used: Vec<bool>,
    end_used: Vec<bool>,
    mids_left: usize,
    path: Vec<Step>,
    best: Option<Vec<Step>>,
    best_cost: Cost,
    opts: ReconnectOptions,
    nodes: u64,
}

impl Search<'_> {
    fn cost(&self, p: &Piece) -> Option<Cost> {
        self.params.cost(p.load, p.dist, self.inst.capacity())
    }

    fn rec(&mut self, b: usize, cur: Piece, cur_cost: Cost, bound: Cost) {
        self.nodes += 1;
        if self.opts.verify_bound {
            assert_eq!(bound, self.recompute_bound(), "running bound diverged at {:?}", self.path);
        }
        if b == self.begs.len() {
            if bound < self.best_cost {
                self.best_cost = bound;
                self.best = Some(self.path.clone());
            }
            return;
        }
        if self.opts.prune && bound >= self.best_cost {
            return;
        }
        for m in 0..self.mids.len() {
            if self.mid_used[m] {
                continue;
            }
            let single = self.mids[m].first == self.mids[m].last;
            for reversed in [false, true] {
                if reversed && single {
                    continue;
                }
                let piece = if reversed { self.mids[m].rev() } else { self.mids[m] };
                let next = cur.join(piece, self.inst);
                let Some(next_cost) = self.cost(&next) else { continue };
                self.mid_used[m] = true;
                self.mids_left -= 1;
                self.path.push(Step::Mid(m, reversed));
                self.rec(b, next, next_cost, bound - cur_cost - self.mid_cost[m] + next_cost);
                self.path.pop();
                self.mids_left += 1;
                self.mid_used[m] = false;
            }
        }
        if self.begs.len() - b != 1 || self.mids_left == 0 {
            for e in 0..self.ends.len() {
                if self.end_used[e] {
                    continue;
                }
                let route = cur.join(self.ends[e], self.inst);
                let Some(route_cost) = self.cost(&route) else { continue };
                self.end_used[e] = true;
                self.path.push(Step::End(e));
                let next_bound = bound - cur_cost - self.end_cost[e] + route_cost;
                if b + 1 < self.begs.len() {
                    self.rec(b + 1, self.begs[b + 1], self.beg_cost[b + 1], next_bound);
                } else {
                    self.rec(b + 1, cur, 0, next_bound);
                }
                self.path.pop();
                self.end_used[e] = false;
            }
        }
    }

    fn recompute_bound(&self) -> Cost {
        let (chains, _) = replay(self.sets, &self.path, self.inst);
        let c = |f: &Fragment| f.cost(self.inst, self.params).expect("infeasible piece on the search path");
        let mut total: Cost = chains.iter().map(c).sum();
        total += self.sets.beg[chains.len()..].iter().map(c).sum::<Cost>();
        let mut mid_used = vec![false; self.mids.len()];
        let mut end_used = vec![false; self.ends.len()];
        for step in &self.path {
            match *step {
                Step::Mid(m, _) => mid_used[m] = true,
                Step::End(e) => end_used[e] = true,
            }
        }
        total += self.sets.mid.iter().zip(&mid_used).filter(|(_, &u)| !u).map(|(f, _)| c(f)).sum::<Cost>();
        total += self.sets.end.iter().zip(&end_used).filter(|(_, &u)| !u).map(|(f, _)| c(f)).sum::<Cost>();
        total
    }
}

/// Rebuilds the chains described by a decision path. Returns the chains and
/// how many of them are closed routes.
fn replay(sets: &FragmentSets, path: &[Step], inst: &Instance) -> (Vec<Fragment>, usize) {
    let mut chains: Vec<Fragment> = Vec::new();
    let mut closed = 0;
    if !sets.beg.is_empty() {
        chains.push(sets.beg[0].clone());
    }
    for step in path {
        let cur = chains.last_mut().expect("path extends past the last beg");
        match *step {
            Step::Mid(m, rev) => {
                let piece = if rev { sets.mid[m].reversed().expect("mid") } else { sets.mid[m].clone() };
                *cur = cur.concat(&piece, inst).expect("beg then mid");
            }
            Step::End(e) => {
                *cur = cur.concat(&sets.end[e], inst).expect("beg then end");
                closed += 1;
                if closed < sets.beg.len() {
                    chains.push(sets.beg[closed].clone());
                }
            }
        }
    }
    (chains, closed)
}

fn reconnection_of(sets: &FragmentSets, path: &[Step], inst: &Instance, cost: Cost) -> Reconnection {
    let (chains, closed) = replay(sets, path, inst);
    debug_assert_eq!(closed, sets.beg.len());
    Reconnection { routes: chains.iter().map(|f| f.customers().collect()).collect(), cost }
}

fn fragment_costs(frags: &[Fragment], inst: &Instance, params: &CostParams) -> Option<Vec<Cost>> {
    frags.iter().map(|f| f.cost(inst, params)).collect()
}

/// Cost of `R_init` under `params`, or `None` when it is forbidden.
pub fn initial_cost(sets: &FragmentSets, inst: &Instance, params: &CostParams) -> Option<Cost> {
    sets.init
        .iter()
        .map(|(_, r)| params.cost(crate::model::route_load(inst, r), crate::model::route_distance(inst, r), inst.capacity()))
        .sum()
}

/// Minimum-cost reconnection strictly cheaper than `R_init`, if any.
pub fn best_reconnect(sets: &FragmentSets, inst: &Instance, params: &CostParams) -> Option<Reconnection> {
    best_reconnect_with(sets, inst, params, ReconnectOptions::default()).0
}

pub fn best_reconnect_with(
    sets: &FragmentSets,
    inst: &Instance,
    params: &CostParams,
    opts: ReconnectOptions,
) -> (Option<Reconnection>, ReconnectStats) {
    assert_eq!(sets.beg.len(), sets.end.len(), "unbalanced fragment sets");
    let costs = (
        fragment_costs(&sets.beg, inst, params),
        fragment_costs(&sets.mid, inst, params),
        fragment_costs(&sets.end, inst, params),
    );
    let (Some(beg_cost), Some(mid_cost), Some(end_cost)) = costs else {
        return (None, ReconnectStats::default());
    };
    if sets.beg.is_empty() {
        return (None, ReconnectStats::default());
    }
    let bound = beg_cost.iter().chain(&mid_cost).chain(&end_cost).sum();
    let mut search = Search {
        inst,
        params,
        sets,
        begs: sets.beg.iter().map(Piece::of).collect(),
        beg_cost,
        mids: sets.mid.iter().map(Piece::of).collect(),
        mid_cost,
        ends: sets.end.iter().map(Piece::of).collect(),
        end_cost,
        mid_used: vec![false; sets.mid.len()],
        end_used: vec![false; sets.end.len()],
        mids_left: sets.mid.len(),
        path: Vec::new(),
        best: None,
        best_cost: initial_cost(sets, inst, params).unwrap_or(Cost::MAX),
        opts,
        nodes: 0,
    };
    let (first, first_cost) = (search.begs[0], search.beg_cost[0]);
    search.rec(0, first, first_cost, bound);
    let stats = ReconnectStats { nodes: search.nodes };
    let result = search.best.as_ref().map(|path| reconnection_of(sets, path, inst, search.best_cost));
    (result, stats)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("fragment sets too large for exhaustive enumeration ({routes} routes, {fragments} fragments)")]
pub struct TooLarge {
    pub routes: usize,
    pub fragments: usize,
}

pub const BRUTE_FORCE_MAX_ROUTES: usize = 4;
pub const BRUTE_FORCE_MAX_FRAGMENTS: usize = 10;

/// Exhaustive reconnection over every mid ordering, orientation, grouping and
/// end assignment. Same contract as [`best_reconnect`].
pub fn brute_force_reconnect(
    sets: &FragmentSets,
    inst: &Instance,
    params: &CostParams,
) -> Result<Option<Reconnection>, TooLarge> {
    let routes = sets.beg.len();
    let fragments = sets.beg.len() + sets.mid.len() + sets.end.len();
    if routes > BRUTE_FORCE_MAX_ROUTES || fragments > BRUTE_FORCE_MAX_FRAGMENTS {
        return Err(TooLarge { routes, fragments });
    }
    assert_eq!(routes, sets.end.len(), "unbalanced fragment sets");
    let mut best_cost = initial_cost(sets, inst, params).unwrap_or(Cost::MAX);
    let mut best = None;
    let k = sets.mid.len();
    let mut mid_perm: Vec<usize> = (0..k).collect();
    let mut end_perm: Vec<usize> = (0..routes).collect();
    let mut mid_orders = Vec::new();
    permutations(&mut mid_perm, 0, &mut |p| mid_orders.push(p.to_vec()));
    let mut end_orders = Vec::new();
    permutations(&mut end_perm, 0, &mut |p| end_orders.push(p.to_vec()));
    let groupings = compositions(k, routes);
    for order in &mid_orders {
        for flips in 0..(1u32 << k) {
            let seq: Vec<Fragment> = order
                .iter()
                .enumerate()
                .map(|(i, &m)| {
                    if flips >> i & 1 == 1 {
                        sets.mid[m].reversed().expect("mid")
                    } else {
                        sets.mid[m].clone()
                    }
                })
                .collect();
            for sizes in &groupings {
                for ends in &end_orders {
                    let mut total = Some(0);
                    let mut out = Vec::with_capacity(routes);
                    let mut at = 0;
                    for r in 0..routes {
                        let mut chain = sets.beg[r].clone();
                        for f in &seq[at..at + sizes[r]] {
                            chain = chain.concat(f, inst).expect("beg then mid");
                        }
                        at += sizes[r];
                        chain = chain.concat(&sets.end[ends[r]], inst).expect("beg then end");
                        total = match (total, chain.cost(inst, params)) {
                            (Some(t), Some(c)) => Some(t + c),
                            _ => None,
                        };
                        out.push(chain.customers().collect::<Vec<_>>());
                    }
                    if let Some(t) = total {
                        if t < best_cost {
                            best_cost = t;
                            best = Some(Reconnection { routes: out, cost: t });
                        }
                    }
                }
            }
        }
    }
    Ok(best)
}

fn permutations(items: &mut [usize], k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == items.len() {
        visit(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permutations(items, k + 1, visit);
        items.swap(k, i);
    }
}

/// All ways to write `total` as an ordered sum of `parts` nonnegative integers.
fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for head in 0..=total {
        for mut rest in compositions(total - head, parts - 1) {
            rest.insert(0, head);
            out.push(rest);
        }
    }
    out
}
