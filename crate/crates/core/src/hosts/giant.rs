use rand::Rng;

use crate::model::{Cost, Instance, Solution};

/// Order crossover with an inclusive cut `i..=j` on positions of `p1`.
///
/// The child keeps `p1[i..=j]` in place and fills the remaining positions,
/// starting right after the cut and wrapping around, with the customers of
/// `p2` read in cyclic order from the same position.
pub fn ox_crossover_at(p1: &[usize], p2: &[usize], i: usize, j: usize) -> Vec<usize> {
    let n = p1.len();
    assert_eq!(n, p2.len(), "parents of different length");
    assert!(i <= j && j < n, "cut {i}..={j} outside 0..{n}");
    let max = p1.iter().copied().max().unwrap_or(0);
    let mut taken = vec![false; max + 1];
    let mut child = vec![0; n];
    for k in i..=j {
        child[k] = p1[k];
        taken[p1[k]] = true;
    }
    let mut write = (j + 1) % n;
    for step in 0..n {
        let c = p2[(j + 1 + step) % n];
        assert!(c <= max, "parents are not permutations of the same set");
        if taken[c] {
            continue;
        }
        taken[c] = true;
        child[write] = c;
        write = (write + 1) % n;
    }
    child
}

/// OX with a uniformly random cut.
pub fn ox_crossover<R: Rng>(p1: &[usize], p2: &[usize], rng: &mut R) -> Vec<usize> {
    let n = p1.len();
    if n == 0 {
        return Vec::new();
    }
    let a = rng.gen_range(0..n);
    let b = rng.gen_range(0..n);
    ox_crossover_at(p1, p2, a.min(b), a.max(b))
}

/// Optimal capacity-feasible partition of a giant tour into consecutive routes.
pub fn split(inst: &Instance, tour: &[usize]) -> Solution {
    let n = tour.len();
    let cap = inst.capacity();
    let mut best = vec![Cost::MAX; n + 1];
    let mut pred = vec![0; n + 1];
    best[0] = 0;
    for i in 0..n {
        if best[i] == Cost::MAX {
            continue;
        }
        let mut load = 0;
        let mut dist = 0;
        for j in i..n {
            load += inst.demand(tour[j]);
            if load > cap {
                break;
            }
            dist += if j == i { inst.distance(0, tour[j]) } else { inst.distance(tour[j - 1], tour[j]) };
            let total = best[i] + dist + inst.distance(tour[j], 0);
            if total < best[j + 1] {
                best[j + 1] = total;
                pred[j + 1] = i;
            }
        }
    }
    let mut routes = Vec::new();
    let mut j = n;
    while j > 0 {
        let i = pred[j];
        routes.push(tour[i..j].to_vec());
        j = i;
    }
    routes.reverse();
    Solution::from_routes(inst, routes)
}

/// Nearest-neighbour construction: each route starts at a random unvisited
/// customer and extends to the closest customer that still fits.
pub fn construct_initial<R: Rng>(inst: &Instance, rng: &mut R) -> Solution {
    let mut unvisited: Vec<usize> = (1..=inst.n()).collect();
    let mut routes = Vec::new();
    while !unvisited.is_empty() {
        let k = rng.gen_range(0..unvisited.len());
        let mut cur = unvisited.swap_remove(k);
        let mut load = inst.demand(cur);
        let mut route = vec![cur];
        loop {
            let next = unvisited
                .iter()
                .enumerate()
                .filter(|(_, &c)| load + inst.demand(c) <= inst.capacity())
                .min_by_key(|(_, &c)| (inst.distance(cur, c), c));
            let Some((pos, &c)) = next else { break };
            unvisited.swap_remove(pos);
            load += inst.demand(c);
            route.push(c);
            cur = c;
        }
        routes.push(route);
    }
    Solution::from_routes(inst, routes)
}

/// Uniformly random giant tour.
pub fn random_tour<R: Rng>(inst: &Instance, rng: &mut R) -> Vec<usize> {
    use rand::seq::SliceRandom;
    let mut tour: Vec<usize> = (1..=inst.n()).collect();
    tour.shuffle(rng);
    tour
}
