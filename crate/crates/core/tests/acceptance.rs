//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

mod common;

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use pils::harness::{self, analyze_bins, AblationOutcome, MoveStats, PilsMode, RunSpec};
use pils::hosts::{self, HostConfig, HostKind};
use pils::inject::{best_reconnect, brute_force_reconnect, fragmentize, initial_cost};
use pils::model::{parse_instance, parse_solution, CostParams, FeasibilityMode, Solution};
use pils::pattern::{Pattern, PatternPool, PoolParams};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ABLATION_INSTANCES: [&str; 5] = ["X-n101-k25", "X-n120-k6", "X-n148-k46", "X-n167-k10", "X-n200-k36"];
const ABLATION_SEEDS: u64 = 5;
const ABLATION_SECONDS: f64 = 60.0;
const TREND_INSTANCES: [&str; 3] = ["E-n22-k4", "E-n51-k5", "X-n101-k25"];

type Check = Result<String, String>;

fn data(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(rel)
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance").join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn reconnection_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let start = Instant::now();
    let (mut cases, mut improving) = (0, 0);
    let mut modes = [0usize; 2];
    while cases < 1000 {
        let n = rng.gen_range(5..=16);
        let cap = rng.gen_range(12..=40);
        let inst = common::random_instance(&mut rng, n, cap);
        let forbidden = rng.gen_bool(0.5);
        let (sol, params) = if forbidden {
            (common::random_feasible_solution(&inst, &mut rng), CostParams::new(1, FeasibilityMode::Forbidden))
        } else {
            (common::random_solution(&inst, &mut rng), CostParams::new(rng.gen_range(1..=40), FeasibilityMode::Penalized))
        };
        let mut perm: Vec<usize> = (1..=n).collect();
        perm.shuffle(&mut rng);
        let len = rng.gen_range(2..=n.min(5));
        let p = Pattern::new(&perm[..len], 1, 5).unwrap();
        if pils::pattern::contains_pattern(&sol, &p) {
            continue;
        }
        let sets = fragmentize(&inst, &sol, &p);
        let routes = sets.init.len();
        let fragments = sets.fragment_count();
        if !(2..=4).contains(&routes) || !(2..=9).contains(&fragments) {
            continue;
        }
        cases += 1;
        modes[usize::from(forbidden)] += 1;
        let fast = best_reconnect(&sets, &inst, &params);
        let slow = brute_force_reconnect(&sets, &inst, &params).map_err(|e| format!("{e:?}"))?;
        let init = initial_cost(&sets, &inst, &params);
        if fast.as_ref().map(|r| r.cost) != slow.as_ref().map(|r| r.cost) {
            return Err(format!(
                "case {cases}: best_reconnect {:?} vs brute force {:?}",
                fast.map(|r| r.cost),
                slow.map(|r| r.cost)
            ));
        }
        if let Some(r) = fast {
            improving += 1;
            if common::oracle_cost(&inst, &r.routes, &params) != Some(r.cost) {
                return Err(format!("case {cases}: reported cost {} does not match its routes", r.cost));
            }
            if init.is_some_and(|c| r.cost >= c) {
                return Err(format!("case {cases}: non-improving reconnection returned"));
            }
        }
    }
    let elapsed = start.elapsed();
    if elapsed >= Duration::from_secs(10) {
        return Err(format!("{cases} cases took {:.2} s", elapsed.as_secs_f64()));
    }
    Ok(format!(
        "{cases} cases ({} penalized, {} forbidden, {improving} improving) in {:.2} s",
        modes[0],
        modes[1],
        elapsed.as_secs_f64()
    ))
}

fn extraction_formula() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut checked = 0;
    for s in 0..100 {
        let n = rng.gen_range(1..=200);
        let cap = rng.gen_range(10..=80);
        let inst = common::random_instance(&mut rng, n, cap);
        let sol = common::random_solution(&inst, &mut rng);
        for route in sol.route_sequences() {
            let single = Solution::from_routes(&inst, vec![route.clone()]);
            let ext_len = route.len() as i64 + 2;
            for l in 1..=8 {
                let mut pool = PatternPool::new(PoolParams::new(l, l, 5));
                let got = pool.extract(&single);
                let want = (ext_len - 1 - l as i64).max(0) as u64;
                if got != want || pool.total_mass() != want {
                    return Err(format!("solution {s}: route of {} customers, l={l}: {got} != {want}", route.len()));
                }
                checked += 1;
            }
        }
        let mirrored: Vec<Vec<usize>> =
            sol.route_sequences().into_iter().rev().map(|r| r.into_iter().rev().collect()).collect();
        let mut a = PatternPool::new(PoolParams::new(3, 5, 5 * n));
        let mut b = PatternPool::new(PoolParams::new(3, 5, 5 * n));
        a.extract(&sol);
        b.extract(&Solution::from_routes(&inst, mirrored));
        let key = |p: &PatternPool| {
            let mut rows: Vec<_> = p.rows().into_iter().map(|r| (r.pattern, r.frequency)).collect();
            rows.sort();
            rows
        };
        if key(&a) != key(&b) {
            return Err(format!("solution {s}: mirrored solution gives a different pool"));
        }
    }
    Ok(format!("100 solutions, {checked} route/length counts, mirrored pools identical"))
}

fn heap_vs_sort() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut compared = 0;
    for trial in 0..10 {
        let n = rng.gen_range(10..=60);
        let inst = common::random_instance(&mut rng, n, 30);
        let cap = 5 * n / 4;
        let mut pool = PatternPool::new(PoolParams::new(3, 5, cap));
        let mut tally = common::Tally::default();
        let base: Vec<Solution> = (0..4).map(|_| common::random_solution(&inst, &mut rng)).collect();
        for _ in 0..50 {
            let sol = if rng.gen_bool(0.6) { base.choose(&mut rng).unwrap().clone() } else { common::random_solution(&inst, &mut rng) };
            pool.extract(&sol);
            tally.extract(&sol, 3, 5);
        }
        for len in 3..=5 {
            let mut heap: Vec<Vec<usize>> = pool.heap(len).into_iter().map(|p| p.seq().to_vec()).collect();
            heap.sort();
            if heap != tally.top(len, cap) {
                return Err(format!("trial {trial}, length {len}: heap differs from the sorted top {cap}"));
            }
            compared += heap.len();
        }
    }
    Ok(format!("10 pools x 50 solutions, {compared} heap entries equal the sorted top sets"))
}

fn local_search_soundness() -> Check {
    let evaluated = common::check_random_deltas(10_000, 31)?;
    let moves = common::check_local_minimality(20, 32)?;
    Ok(format!("10000 random moves ({evaluated} with defined deltas) exact; 20 descents locally minimal over {moves} enumerated moves"))
}

fn ablation(host: HostKind) -> Result<AblationOutcome, String> {
    let spec = RunSpec {
        pils: PilsMode::Both,
        overrides: harness::Overrides { t_max: Some(ABLATION_SECONDS), ..Default::default() },
        seeds: ABLATION_SEEDS,
        bks: Some(data("bks.csv")),
        jobs: pils::par::available_threads(),
        trace: false,
        ..RunSpec::new(
            ABLATION_INSTANCES.iter().map(|i| data(&format!("instances/{i}.vrp"))).collect(),
            host,
            scratch(&format!("ablation_{host}")),
        )
    };
    harness::cmd_ablate(&spec).map_err(|e| e.to_string())
}

fn directional(outcomes: &[(HostKind, AblationOutcome)]) -> Check {
    let mut lines = Vec::new();
    let mut ok = true;
    for (host, out) in outcomes {
        let all = out.categories.iter().find(|c| c.category == "all").ok_or("no overall category")?;
        let wins = out.pairs.iter().filter(|p| p.cost_on < p.cost_off).count();
        let losses = out.pairs.iter().filter(|p| p.cost_on > p.cost_off).count();
        ok &= all.mean_cost_on <= all.mean_cost_off;
        lines.push(format!(
            "{host}: mean {:.1} with vs {:.1} without (gap {:.3}% vs {:.3}%, {wins} better / {losses} worse of {})",
            all.mean_cost_on,
            all.mean_cost_off,
            all.mean_gap_on.unwrap_or(f64::NAN),
            all.mean_gap_off.unwrap_or(f64::NAN),
            all.runs
        ));
    }
    if ok {
        Ok(lines.join("; "))
    } else {
        Err(lines.join("; "))
    }
}

fn high_order(outcomes: &[(HostKind, AblationOutcome)]) -> Check {
    let moves: Vec<_> = outcomes
        .iter()
        .flat_map(|(_, o)| o.solve.records.iter())
        .flat_map(|r| r.result.log.moves.iter())
        .collect();
    let stats = MoveStats::from_moves(moves.iter().copied());
    let max = stats.order.counts.keys().next_back().copied().unwrap_or(0);
    let share = stats.order.share_in(2, 5);
    let detail = format!("{} applied moves, max order {max}, {:.1}% of order 2..5", stats.order.total(), 100.0 * share);
    if max >= 6 && share >= 0.5 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn time_share(outcomes: &[(HostKind, AblationOutcome)]) -> Check {
    let (_, hgs) = outcomes.iter().find(|(h, _)| *h == HostKind::Hgs).ok_or("no HGS runs")?;
    let shares: Vec<f64> =
        hgs.solve.records.iter().filter(|r| r.pils).map(|r| r.result.log.pils_share_percent()).collect();
    let lo = shares.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = shares.iter().copied().fold(0.0, f64::max);
    let mean = shares.iter().sum::<f64>() / shares.len() as f64;
    let detail = format!("HGS T_PILS over {} runs: mean {mean:.1}%, range {lo:.1}%..{hi:.1}%", shares.len());
    if !shares.is_empty() && lo > 0.0 && hi < 70.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn frequency_quality() -> Check {
    let bks = harness::load_bks(Some(&data("bks.csv"))).map_err(|e| e.to_string())?;
    let mut lines = Vec::new();
    let mut ok = true;
    for name in TREND_INSTANCES {
        let inst = parse_instance(&std::fs::read_to_string(data(&format!("instances/{name}.vrp"))).unwrap())
            .map_err(|e| e.to_string())?;
        let reference = parse_solution(&std::fs::read_to_string(data(&format!("solutions/{name}.sol"))).unwrap(), &inst)
            .map_err(|e| e.to_string())?;
        let z_bks = bks[name];
        if reference.distance() != z_bks || !reference.is_feasible(&inst) {
            return Err(format!("{name}: reference solution does not attain the BKS {z_bks}"));
        }
        let config = HostConfig {
            time_limit: Duration::from_secs_f64(0.2 * ABLATION_SECONDS),
            seed: 1,
            ..HostConfig::new(HostKind::Hgs, &inst)
        };
        let run = hosts::run(&inst, &config).map_err(|e| e.to_string())?;
        let report = analyze_bins(&run.pool.rows(), &reference, z_bks, inst.n()).map_err(|e| e.to_string())?;
        let curves: Vec<String> = report
            .lengths
            .iter()
            .map(|lb| {
                let f: Vec<String> = lb.bins.iter().take(6).map(|b| format!("{:.2}", b.fraction())).collect();
                format!("l={} [{}]", lb.length, f.join(" "))
            })
            .collect();
        let three = report.length(3).ok_or(format!("{name}: no length-3 patterns"))?;
        let pass = three.bins.len() >= 5 && three.bins[0].fraction() > three.bins[4].fraction();
        ok &= pass;
        lines.push(format!("{name} {}", curves.join(" ")));
    }
    if ok {
        Ok(lines.join("; "))
    } else {
        Err(lines.join("; "))
    }
}

fn determinism() -> Check {
    let run = |dir: &Path| {
        for host in [HostKind::Hgs, HostKind::Gls] {
            let spec = RunSpec {
                pils: PilsMode::Both,
                overrides: harness::Overrides { max_iterations: Some(150), t_max: Some(600.0), ..Default::default() },
                seeds: 2,
                bks: Some(data("bks.csv")),
                jobs: pils::par::available_threads(),
                ..RunSpec::new(vec![data("instances/X-n101-k25.vrp"), data("instances/E-n51-k5.vrp")], host, dir.join(host.to_string()))
            };
            harness::cmd_solve(&spec).map_err(|e| e.to_string())?;
        }
        Ok::<_, String>(())
    };
    let (a, b) = (scratch("determinism_a"), scratch("determinism_b"));
    run(&a)?;
    run(&b)?;
    for host in ["hgs", "gls"] {
        let fa = std::fs::read(a.join(host).join("summary.csv")).map_err(|e| e.to_string())?;
        let fb = std::fs::read(b.join(host).join("summary.csv")).map_err(|e| e.to_string())?;
        if fa != fb {
            return Err(format!("{host}: summary.csv differs between runs"));
        }
    }
    Ok("two runs of 2 instances x 2 seeds x 2 arms x 2 hosts give byte-identical summary.csv".into())
}

struct Runner {
    filters: Vec<String>,
    ran: usize,
    failures: usize,
}

impl Runner {
    fn selected(&self, name: &str) -> bool {
        self.filters.is_empty() || self.filters.iter().any(|f| name.contains(f.as_str()))
    }

    fn check(&mut self, name: &str, f: impl FnOnce() -> Check) {
        if !self.selected(name) {
            return;
        }
        self.ran += 1;
        match f() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                self.failures += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
}

/// Optional positional arguments select criteria by substring.
fn main() {
    let filters = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut r = Runner { filters, ran: 0, failures: 0 };
    r.check("reconnection oracle equivalence", reconnection_oracle);
    r.check("extraction formula", extraction_formula);
    r.check("heap vs sort", heap_vs_sort);
    r.check("local search soundness", local_search_soundness);
    r.check("determinism", determinism);
    r.check("frequency-quality trend", frequency_quality);

    const ABLATION_CHECKS: [&str; 3] = ["directional ablation", "high-order moves", "time accounting"];
    if ABLATION_CHECKS.iter().any(|c| r.selected(c)) {
        let mut outcomes = Vec::new();
        for host in [HostKind::Hgs, HostKind::Gls] {
            match ablation(host) {
                Ok(o) => outcomes.push((host, o)),
                Err(e) => println!("ablation for {host} failed to run: {e}"),
            }
        }
        r.check(ABLATION_CHECKS[0], || directional(&outcomes));
        r.check(ABLATION_CHECKS[1], || high_order(&outcomes));
        r.check(ABLATION_CHECKS[2], || time_share(&outcomes));
    }

    println!("{} of {} criteria passed", r.ran - r.failures, r.ran);
    if r.failures > 0 {
        std::process::exit(1);
    }
}
