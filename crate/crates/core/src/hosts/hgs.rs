use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{giant, repair, ConfigError, Controller, EventKind, HostConfig, Pils, RunResult};
use crate::model::{Cost, CostParams, FeasibilityMode, Instance, Solution};
use crate::search::{descend, Neighborhoods};

#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub sol: Solution,
    pub cost: Cost,
    pub tour: Vec<usize>,
    key: Vec<Vec<usize>>,
}

impl Individual {
    pub fn new(sol: Solution) -> Self {
        let cost = sol.distance();
        let tour = sol.giant_tour();
        let key = sol.normalized();
        Self { sol, cost, tour, key }
    }
}

/// Feasible individuals without duplicates, truncated to the `mu` cheapest
/// once `mu + lambda` is reached.
#[derive(Debug, Clone, Default)]
pub struct Population {
    members: Vec<Individual>,
    keys: HashSet<Vec<Vec<usize>>>,
}

impl Population {
    pub fn members(&self) -> &[Individual] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn best(&self) -> Option<&Individual> {
        self.members.iter().min_by_key(|m| m.cost)
    }

    /// Adds unless an identical solution is present.
    pub fn insert(&mut self, ind: Individual) -> bool {
        if !self.keys.insert(ind.key.clone()) {
            return false;
        }
        self.members.push(ind);
        true
    }

    pub fn truncate(&mut self, mu: usize) {
        self.members.sort_by_key(|m| m.cost);
        for gone in self.members.drain(mu.min(self.members.len())..) {
            self.keys.remove(&gone.key);
        }
    }

    fn tournament<R: Rng>(&self, rng: &mut R) -> &Individual {
        let a = &self.members[rng.gen_range(0..self.members.len())];
        let b = &self.members[rng.gen_range(0..self.members.len())];
        if b.cost < a.cost {
            b
        } else {
            a
        }
    }
}

struct Ctx<'a> {
    inst: &'a Instance,
    nb: &'a Neighborhoods,
    params: CostParams,
}

impl Ctx<'_> {
    /// Local search, then repair if the result violates capacity.
    fn educate<R: Rng>(&self, sol: &Solution, rng: &mut R) -> Option<Solution> {
        let out = descend(self.inst, sol, self.nb, &self.params, None, rng);
        repair::repair(self.inst, &out, self.nb, &self.params, rng)
    }

    fn fresh<R: Rng>(&self, rng: &mut R) -> Option<Solution> {
        let tour = giant::random_tour(self.inst, rng);
        self.educate(&giant::split(self.inst, &tour), rng)
    }
}

/// Replaces the worst half of the population with fresh educated solutions.
/// The best individual always survives.
pub fn diversify<R: Rng>(
    pop: &mut Population,
    inst: &Instance,
    nb: &Neighborhoods,
    params: &CostParams,
    rng: &mut R,
) {
    let target = pop.len();
    let keep = target - target / 2;
    pop.truncate(keep.max(1));
    let ctx = Ctx { inst, nb, params: *params };
    let mut attempts = 0;
    while pop.len() < target && attempts < 4 * target {
        attempts += 1;
        if let Some(sol) = ctx.fresh(rng) {
            pop.insert(Individual::new(sol));
        }
    }
}

/// Hybrid genetic search with pattern injection before each local search and
/// extraction after it.
pub fn run_hgs_pils(inst: &Instance, config: &HostConfig) -> Result<RunResult, ConfigError> {
    config.validate()?;
    let mut ctl = Controller::new(config);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let params = CostParams::for_instance(inst, FeasibilityMode::Penalized);
    let nb = Neighborhoods::new(inst, config.granularity);
    let ctx = Ctx { inst, nb: &nb, params };
    let mut pils = Pils::new(config, params);
    let mut pop = Population::default();

    let mut attempts = 0;
    while pop.len() < config.population && attempts < 4 * config.population {
        attempts += 1;
        let Some(sol) = ctx.fresh(&mut rng) else { continue };
        let cost = sol.distance();
        ctl.event(EventKind::Ls, cost);
        pils.maybe_extract(&sol, cost, &mut ctl);
        ctl.offer(cost);
        pop.insert(Individual::new(sol));
        if inst.n() == 1 || ctl.expired() {
            break;
        }
    }
    if pop.is_empty() {
        let sol = giant::construct_initial(inst, &mut rng);
        ctl.offer(sol.distance());
        pop.insert(Individual::new(sol));
    }

    let mut stagnation = 0;
    while inst.n() > 1 && !ctl.expired() {
        ctl.iteration += 1;
        let p1 = pop.tournament(&mut rng).tour.clone();
        let p2 = pop.tournament(&mut rng).tour.clone();
        let child_tour = giant::ox_crossover(&p1, &p2, &mut rng);
        let mut child = giant::split(inst, &child_tour);
        ctl.event(EventKind::Crossover, child.distance());

        pils.inject(inst, &mut child, &mut ctl);

        let (educated, t) = ctl.time(|| ctx.educate(&child, &mut rng));
        ctl.log.phases.local_search_ms += t;
        let Some(child) = educated else { continue };
        let cost = child.distance();
        ctl.event(EventKind::Ls, cost);

        pils.maybe_extract(&child, cost, &mut ctl);

        if ctl.offer(cost) {
            stagnation = 0;
        } else {
            stagnation += 1;
        }
        pop.insert(Individual::new(child));
        if pop.len() >= config.population + config.offspring {
            pop.truncate(config.population);
        }
        if stagnation >= config.it_div {
            stagnation = 0;
            diversify(&mut pop, inst, &nb, &params, &mut rng);
            let best = pop.best().map_or(Cost::MAX, |b| b.cost);
            ctl.event(EventKind::Diversify, best);
        }
    }

    let best = pop.best().expect("population is never empty").clone();
    Ok(RunResult { best: best.sol, cost: best.cost, log: ctl.finish(), pool: pils.pool })
}
