use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{giant, ConfigError, Controller, EventKind, HostConfig, Pils, RunResult};
use crate::model::{Cost, CostParams, FeasibilityMode, Instance, Solution};
use crate::search::{descend, EdgePenalties, Neighborhoods};

/// Penalty weight: a tenth of the mean edge length of `sol`, at least 1.
pub(crate) fn penalty_weight(sol: &Solution) -> Cost {
    let edges: usize = sol.routes().iter().filter(|r| !r.is_empty()).map(|r| r.len() + 1).sum();
    if edges == 0 {
        return 1;
    }
    ((sol.distance() as f64 / edges as f64) * 0.1).round().max(1.0) as Cost
}

/// Guided local search with pattern injection before each penalized descent
/// and extraction after it. Capacity is a hard constraint throughout.
pub fn run_gls_pils(inst: &Instance, config: &HostConfig) -> Result<RunResult, ConfigError> {
    config.validate()?;
    let mut ctl = Controller::new(config);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let params = CostParams::for_instance(inst, FeasibilityMode::Forbidden);
    let nb = Neighborhoods::new(inst, config.granularity);
    let mut pils = Pils::new(config, params);

    let initial = giant::construct_initial(inst, &mut rng);
    let (mut current, t) = ctl.time(|| descend(inst, &initial, &nb, &params, None, &mut rng));
    ctl.log.phases.local_search_ms += t;
    ctl.event(EventKind::Ls, current.distance());
    let mut best = current.clone();
    ctl.offer(best.distance());

    let mut penalties = EdgePenalties::new(inst, penalty_weight(&current));
    while inst.n() > 1 && !ctl.expired() {
        ctl.iteration += 1;
        penalties.penalize(inst, &current);
        ctl.event(EventKind::Penalize, current.distance());

        pils.inject(inst, &mut current, &mut ctl);

        let (next, t) = ctl.time(|| descend(inst, &current, &nb, &params, Some(&penalties), &mut rng));
        ctl.log.phases.local_search_ms += t;
        current = next;
        let cost = current.distance();
        ctl.event(EventKind::Ls, cost);

        pils.maybe_extract(&current, cost, &mut ctl);

        if ctl.offer(cost) {
            best = current.clone();
        }
    }
    let cost = best.distance();
    Ok(RunResult { best, cost, log: ctl.finish(), pool: pils.pool })
}
