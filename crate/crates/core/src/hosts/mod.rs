//! Host metaheuristics embedding pattern injection: HGS-lite and GLS-lite.

mod giant;
mod gls;
mod hgs;
mod repair;

pub use giant::{construct_initial, ox_crossover, ox_crossover_at, random_tour, split};
pub use gls::run_gls_pils;
pub use hgs::{diversify, run_hgs_pils, Individual, Population};
pub use repair::{repair, restore_capacity};

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::inject::{pils_pass, InjectParams, MoveRecord};
use crate::model::{Cost, CostParams, Instance, Solution};
use crate::pattern::{PatternPool, PoolParams};
use crate::search::DEFAULT_GRANULARITY;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum HostKind {
    Hgs,
    Gls,
}

impl fmt::Display for HostKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HostKind::Hgs => "hgs",
            HostKind::Gls => "gls",
        })
    }
}

impl FromStr for HostKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "hgs" => Ok(HostKind::Hgs),
            "gls" => Ok(HostKind::Gls),
            other => Err(format!("unknown host '{other}' (expected hgs or gls)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid host configuration: {0}")]
pub struct ConfigError(pub String);

#[derive(Debug, Clone, PartialEq)]
pub struct HostConfig {
    pub host: HostKind,
    /// Wall-clock budget.
    pub time_limit: Duration,
    /// Optional iteration budget; with it, runs are reproducible regardless of machine speed.
    pub max_iterations: Option<u64>,
    /// When false, the pattern code paths are never entered.
    pub pils: bool,
    pub p_ex: f64,
    pub phi_freq: usize,
    pub phi_size: usize,
    pub l_min: usize,
    pub l_max: usize,
    pub population: usize,
    pub offspring: usize,
    pub it_div: usize,
    pub granularity: usize,
    pub max_routes: usize,
    /// Record per-step events besides `new_best`, `diversify` and `penalize`.
    pub trace: bool,
    pub seed: u64,
}

impl HostConfig {
    pub const DEFAULT_TIME_LIMIT: Duration = Duration::from_secs(60);

    pub fn new(host: HostKind, inst: &Instance) -> Self {
        let n = inst.n();
        Self {
            host,
            time_limit: Self::DEFAULT_TIME_LIMIT,
            max_iterations: None,
            pils: true,
            p_ex: match host {
                HostKind::Hgs => 0.1,
                HostKind::Gls => 1.0,
            },
            phi_freq: 5 * n,
            phi_size: n,
            l_min: 3,
            l_max: 5,
            population: 25,
            offspring: 40,
            it_div: 500,
            granularity: DEFAULT_GRANULARITY,
            max_routes: InjectParams::DEFAULT_MAX_ROUTES,
            trace: true,
            seed: 0,
        }
    }

    /// The `T_max = 2.4 s` per customer budget used for full-scale benchmarks.
    pub fn full_scale_time_limit(inst: &Instance) -> Duration {
        Duration::from_millis(2400 * inst.n() as u64)
    }

    /// Same host with the pattern machinery switched off.
    pub fn without_pils(mut self) -> Self {
        self.pils = false;
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let err = |m: String| Err(ConfigError(m));
        if !(0.0..=1.0).contains(&self.p_ex) {
            return err(format!("P_ex = {} outside [0, 1]", self.p_ex));
        }
        if self.phi_size > self.phi_freq {
            return err(format!("Phi_Size = {} exceeds Phi_Freq = {}", self.phi_size, self.phi_freq));
        }
        if self.l_min == 0 || self.l_min > self.l_max {
            return err(format!("pattern lengths {}..={} invalid", self.l_min, self.l_max));
        }
        if self.population == 0 || self.offspring == 0 {
            return err("population and offspring counts must be positive".into());
        }
        if self.max_routes == 0 {
            return err("max_routes must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    Ls,
    PilsInject,
    PilsExtract,
    Crossover,
    Penalize,
    Diversify,
    NewBest,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Ls => "ls",
            EventKind::PilsInject => "pils_inject",
            EventKind::PilsExtract => "pils_extract",
            EventKind::Crossover => "crossover",
            EventKind::Penalize => "penalize",
            EventKind::Diversify => "diversify",
            EventKind::NewBest => "new_best",
        }
    }
}

impl FromStr for EventKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "ls" => EventKind::Ls,
            "pils_inject" => EventKind::PilsInject,
            "pils_extract" => EventKind::PilsExtract,
            "crossover" => EventKind::Crossover,
            "penalize" => EventKind::Penalize,
            "diversify" => EventKind::Diversify,
            "new_best" => EventKind::NewBest,
            other => return Err(format!("unknown event '{other}'")),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub iteration: u64,
    pub wall_ms: f64,
    pub kind: EventKind,
    pub cost: Cost,
    pub pils_cum_ms: f64,
}

/// Milliseconds spent in each phase of a run.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PhaseTimes {
    pub sample_ms: f64,
    pub inject_ms: f64,
    pub extract_ms: f64,
    pub local_search_ms: f64,
}

impl PhaseTimes {
    pub fn pils_ms(&self) -> f64 {
        self.sample_ms + self.inject_ms + self.extract_ms
    }
}

pub const EVENTS_CSV_HEADER: &str = "iteration,wall_ms,event,cost,pils_cum_ms";

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunLog {
    pub events: Vec<Event>,
    pub moves: Vec<MoveRecord>,
    pub phases: PhaseTimes,
    pub total_ms: f64,
    pub time_limit_ms: f64,
    pub iterations: u64,
    pub extractions: u64,
}

impl RunLog {
    /// Share of the run spent sampling, injecting and extracting patterns.
    pub fn pils_share_percent(&self) -> f64 {
        if self.total_ms <= 0.0 {
            0.0
        } else {
            100.0 * self.phases.pils_ms() / self.total_ms
        }
    }

    pub fn write_events_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{EVENTS_CSV_HEADER}")?;
        for e in &self.events {
            writeln!(out, "{},{:.3},{},{},{:.3}", e.iteration, e.wall_ms, e.kind.as_str(), e.cost, e.pils_cum_ms)?;
        }
        Ok(())
    }

    /// Events with timing columns dropped, for reproducibility checks.
    pub fn untimed_events(&self) -> Vec<(u64, EventKind, Cost)> {
        self.events.iter().map(|e| (e.iteration, e.kind, e.cost)).collect()
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub best: Solution,
    pub cost: Cost,
    pub log: RunLog,
    pub pool: PatternPool,
}

/// Dispatches to the configured host.
pub fn run(inst: &Instance, config: &HostConfig) -> Result<RunResult, ConfigError> {
    match config.host {
        HostKind::Hgs => run_hgs_pils(inst, config),
        HostKind::Gls => run_gls_pils(inst, config),
    }
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1000.0
}

/// Budget bookkeeping and event recording shared by both hosts.
struct Controller {
    start: Instant,
    limit: Duration,
    max_iterations: Option<u64>,
    trace: bool,
    log: RunLog,
    iteration: u64,
    best_cost: Cost,
}

impl Controller {
    fn new(config: &HostConfig) -> Self {
        Self {
            start: Instant::now(),
            limit: config.time_limit,
            max_iterations: config.max_iterations,
            trace: config.trace,
            log: RunLog { time_limit_ms: ms(config.time_limit), ..RunLog::default() },
            iteration: 0,
            best_cost: Cost::MAX,
        }
    }

    fn expired(&self) -> bool {
        self.start.elapsed() >= self.limit || self.max_iterations.is_some_and(|m| self.iteration >= m)
    }

    fn event(&mut self, kind: EventKind, cost: Cost) {
        let always = matches!(kind, EventKind::NewBest | EventKind::Diversify | EventKind::Penalize);
        if self.trace || always {
            self.log.events.push(Event {
                iteration: self.iteration,
                wall_ms: ms(self.start.elapsed()),
                kind,
                cost,
                pils_cum_ms: self.log.phases.pils_ms(),
            });
        }
    }

    /// Records a new best if `cost` improves it.
    fn offer(&mut self, cost: Cost) -> bool {
        if cost < self.best_cost {
            self.best_cost = cost;
            self.event(EventKind::NewBest, cost);
            true
        } else {
            false
        }
    }

    fn time<T>(&mut self, f: impl FnOnce() -> T) -> (T, f64) {
        let t = Instant::now();
        let out = f();
        (out, ms(t.elapsed()))
    }

    fn finish(mut self) -> RunLog {
        self.log.total_ms = ms(self.start.elapsed());
        self.log.iterations = self.iteration;
        self.log
    }
}

/// Pattern pool plus injection settings, driven by its own random stream so
/// that the host trajectory does not depend on pattern draws when disabled.
struct Pils {
    enabled: bool,
    pool: PatternPool,
    phi_size: usize,
    p_ex: f64,
    params: InjectParams,
    rng: ChaCha8Rng,
}

impl Pils {
    fn new(config: &HostConfig, cost: CostParams) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(1);
        Self {
            enabled: config.pils,
            pool: PatternPool::new(PoolParams::new(config.l_min, config.l_max, config.phi_freq)),
            phi_size: config.phi_size,
            p_ex: config.p_ex,
            params: InjectParams { cost, max_routes: config.max_routes },
            rng,
        }
    }

    /// Samples candidates and runs one injection pass. Returns applied moves.
    fn inject(&mut self, inst: &Instance, sol: &mut Solution, ctl: &mut Controller) -> usize {
        if !self.enabled || self.phi_size == 0 {
            return 0;
        }
        let (candidates, t) = ctl.time(|| self.pool.sample_candidates(self.phi_size, &mut self.rng));
        ctl.log.phases.sample_ms += t;
        if candidates.is_empty() {
            return 0;
        }
        let (report, t) = ctl.time(|| pils_pass(inst, sol, &candidates, &self.params, &mut self.rng));
        ctl.log.phases.inject_ms += t;
        let applied = report.moves.len();
        ctl.log.moves.extend(report.moves);
        if applied > 0 {
            let cost = sol.cost(inst, &self.params.cost).unwrap_or(Cost::MAX);
            ctl.event(EventKind::PilsInject, cost);
        }
        applied
    }

    /// Extracts from a local minimum with probability `P_ex`.
    fn maybe_extract(&mut self, sol: &Solution, cost: Cost, ctl: &mut Controller) -> bool {
        if !self.enabled || self.p_ex <= 0.0 {
            return false;
        }
        if self.p_ex < 1.0 && !self.rng.gen_bool(self.p_ex) {
            return false;
        }
        let (_, t) = ctl.time(|| self.pool.extract_with_cost(sol, cost));
        ctl.log.phases.extract_ms += t;
        ctl.log.extractions += 1;
        ctl.event(EventKind::PilsExtract, cost);
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_baseline() {
        let coords = (0..=10).map(|i| (i as f64, 0.0)).collect();
        let mut d = vec![1; 11];
        d[0] = 0;
        let inst = Instance::new("x", coords, d, 5).unwrap();
        let h = HostConfig::new(HostKind::Hgs, &inst);
        assert_eq!((h.phi_freq, h.phi_size, h.l_max, h.p_ex), (50, 10, 5, 0.1));
        assert_eq!(HostConfig::new(HostKind::Gls, &inst).p_ex, 1.0);
        assert!(h.validate().is_ok());
        assert!(HostConfig { phi_size: 51, ..h.clone() }.validate().is_err());
        assert!(HostConfig { p_ex: 1.5, ..h.clone() }.validate().is_err());
        assert_eq!(HostConfig::full_scale_time_limit(&inst), Duration::from_secs(24));
    }

    #[test]
    fn host_names_parse() {
        assert_eq!("HGS".parse::<HostKind>(), Ok(HostKind::Hgs));
        assert_eq!("gls".parse::<HostKind>().unwrap().to_string(), "gls");
        assert!("kgls".parse::<HostKind>().is_err());
    }
}
