use rand::Rng;

use crate::model::{Cost, CostParams, FeasibilityMode, Instance, Solution};
use crate::search::{descend, Neighborhoods};

fn removal_gain(inst: &Instance, r: &[usize], k: usize) -> Cost {
    let prev = if k == 0 { 0 } else { r[k - 1] };
    let next = if k + 1 == r.len() { 0 } else { r[k + 1] };
    inst.distance(prev, r[k]) + inst.distance(r[k], next) - inst.distance(prev, next)
}

fn insertion_cost(inst: &Instance, r: &[usize], pos: usize, c: usize) -> Cost {
    let prev = if pos == 0 { 0 } else { r[pos - 1] };
    let next = if pos == r.len() { 0 } else { r[pos] };
    inst.distance(prev, c) + inst.distance(c, next) - inst.distance(prev, next)
}

/// Moves customers out of overloaded routes until every route fits.
///
/// Each step applies the cheapest relocation of a customer of an overloaded
/// route into another route with enough spare capacity. When no such
/// relocation exists the largest-demand customer opens a new route.
pub fn restore_capacity(inst: &Instance, sol: &Solution) -> Solution {
    let cap = inst.capacity();
    let mut routes = sol.route_sequences();
    let mut loads: Vec<i64> = sol.routes().iter().map(|r| r.load()).collect();
    while let Some(src) = (0..routes.len()).find(|&r| loads[r] > cap) {
        let mut best: Option<(Cost, usize, usize, usize)> = None;
        for k in 0..routes[src].len() {
            let c = routes[src][k];
            let gain = removal_gain(inst, &routes[src], k);
            for (dst, route) in routes.iter().enumerate() {
                if dst == src || loads[dst] + inst.demand(c) > cap {
                    continue;
                }
                for pos in 0..=route.len() {
                    let delta = insertion_cost(inst, route, pos, c) - gain;
                    if best.is_none_or(|(d, ..)| delta < d) {
                        best = Some((delta, k, dst, pos));
                    }
                }
            }
        }
        match best {
            Some((_, k, dst, pos)) => {
                let c = routes[src].remove(k);
                routes[dst].insert(pos, c);
                loads[src] -= inst.demand(c);
                loads[dst] += inst.demand(c);
            }
            None => {
                let k = (0..routes[src].len())
                    .max_by_key(|&k| (inst.demand(routes[src][k]), std::cmp::Reverse(k)))
                    .expect("overloaded route has customers");
                let c = routes[src].remove(k);
                loads[src] -= inst.demand(c);
                routes.push(vec![c]);
                loads.push(inst.demand(c));
            }
        }
    }
    let mut out = Solution::from_routes(inst, routes);
    out.remove_empty_routes();
    out
}

/// Feasible version of `sol`: capacity restoration followed by a descent in
/// forbidden mode. `None` if the result is still infeasible.
pub fn repair<R: Rng>(inst: &Instance, sol: &Solution, nb: &Neighborhoods, params: &CostParams, rng: &mut R) -> Option<Solution> {
    if sol.is_feasible(inst) {
        return Some(sol.clone());
    }
    let fixed = restore_capacity(inst, sol);
    let forbidden = params.with_mode(FeasibilityMode::Forbidden);
    let out = descend(inst, &fixed, nb, &forbidden, None, rng);
    out.is_feasible(inst).then_some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn inst(demands: Vec<i64>, cap: i64) -> Instance {
        let coords = (0..demands.len()).map(|i| ((i * 17 % 31) as f64, (i * 7 % 13) as f64)).collect();
        Instance::new("rep", coords, demands, cap).unwrap()
    }

    #[test]
    fn feasible_input_unchanged() {
        let inst = inst(vec![0, 2, 2, 2], 4);
        let sol = Solution::from_routes(&inst, vec![vec![1, 2], vec![3]]);
        let nb = Neighborhoods::new(&inst, 20);
        let p = CostParams::for_instance(&inst, FeasibilityMode::Penalized);
        assert_eq!(repair(&inst, &sol, &nb, &p, &mut ChaCha8Rng::seed_from_u64(0)), Some(sol));
    }

    #[test]
    fn one_unit_over_takes_cheapest_feasible_relocation() {
        let inst = inst(vec![0, 3, 3, 2, 1, 1, 2], 8);
        // route 0 carries 9, route 1 carries 4
        let sol = Solution::from_routes(&inst, vec![vec![1, 2, 3, 4], vec![5, 6]]);
        let fixed = restore_capacity(&inst, &sol);
        assert!(validate(&inst, &fixed).is_empty());
        // oracle: every single feasible relocation out of route 0
        let mut best = Cost::MAX;
        let r0 = sol.routes()[0].customers().to_vec();
        for k in 0..r0.len() {
            let mut a = r0.clone();
            let c = a.remove(k);
            for pos in 0..=2 {
                let mut b = vec![5, 6];
                b.insert(pos, c);
                let cand = Solution::from_routes(&inst, vec![a.clone(), b]);
                if cand.is_feasible(&inst) {
                    best = best.min(cand.distance());
                }
            }
        }
        assert_eq!(fixed.distance(), best);
        assert_eq!(fixed.non_empty_routes(), 2);
    }

    #[test]
    fn orphan_opens_new_route() {
        let inst = inst(vec![0, 4, 4, 4], 4);
        let sol = Solution::from_routes(&inst, vec![vec![1, 2], vec![3]]);
        let fixed = restore_capacity(&inst, &sol);
        assert!(validate(&inst, &fixed).is_empty());
        assert_eq!(fixed.non_empty_routes(), 3);
    }
}
