//! Experiment harness behind the `pils` command line: solve, ablate and the
//! pattern/move/convergence analyses.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use crate::hosts::{self, EventKind, HostConfig, HostKind, RunResult};
use crate::inject::{MoveRecord, MOVE_CSV_HEADER};
use crate::model::{self, gap_percent, parse_instance, parse_solution, read_bks_table, validate, Cost, Instance, Solution};
use crate::par;
use crate::pattern::{contains_pattern, PatternPool, PoolRow};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Input(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl HarnessError {
    /// Process exit code: 1 usage, 2 input, 3 internal invariant.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Usage(_) => 1,
            HarnessError::Input(_) => 2,
            HarnessError::Invariant(_) => 3,
        }
    }
}

fn input_err(path: &Path, e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Input(format!("{}: {e}", path.display()))
}

fn io_err(path: &Path, e: std::io::Error) -> HarnessError {
    HarnessError::Input(format!("{}: {e}", path.display()))
}

fn write_file(path: &Path, text: &str) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    fs::write(path, text).map_err(|e| io_err(path, e))
}

fn read_file(path: &Path) -> Result<String, HarnessError> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PilsMode {
    On,
    Off,
    Both,
}

impl PilsMode {
    fn arms(self) -> &'static [bool] {
        match self {
            PilsMode::On => &[true],
            PilsMode::Off => &[false],
            PilsMode::Both => &[true, false],
        }
    }
}

impl std::str::FromStr for PilsMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "on" => Ok(PilsMode::On),
            "off" => Ok(PilsMode::Off),
            "both" => Ok(PilsMode::Both),
            other => Err(format!("unknown pils mode '{other}' (expected on, off or both)")),
        }
    }
}

/// Parameter overrides on top of the host defaults.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub phi_freq: Option<usize>,
    pub phi_size: Option<usize>,
    pub l_min: Option<usize>,
    pub l_max: Option<usize>,
    pub p_ex: Option<f64>,
    pub t_max: Option<f64>,
    pub max_iterations: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub instances: Vec<PathBuf>,
    pub host: HostKind,
    pub pils: PilsMode,
    pub overrides: Overrides,
    pub seeds: u64,
    pub bks: Option<PathBuf>,
    pub metadata: Option<PathBuf>,
    pub out: PathBuf,
    pub jobs: usize,
    pub dump_pool: bool,
    pub trace: bool,
}

impl RunSpec {
    pub fn new(instances: Vec<PathBuf>, host: HostKind, out: PathBuf) -> Self {
        Self {
            instances,
            host,
            pils: PilsMode::On,
            overrides: Overrides::default(),
            seeds: 1,
            bks: None,
            metadata: None,
            out,
            jobs: 1,
            dump_pool: false,
            trace: true,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.seeds == 0 {
            return Err(HarnessError::Usage("--seeds must be at least 1".into()));
        }
        if self.instances.is_empty() {
            return Err(HarnessError::Usage("no instance given".into()));
        }
        if let Some(t) = self.overrides.t_max {
            if !(t > 0.0 && t.is_finite()) {
                return Err(HarnessError::Usage(format!("--tmax must be positive, got {t}")));
            }
        }
        Ok(())
    }

    /// Host configuration for one run.
    pub fn config(&self, inst: &Instance, pils: bool, seed: u64) -> Result<HostConfig, HarnessError> {
        let o = &self.overrides;
        let mut c = HostConfig::new(self.host, inst);
        c.pils = pils;
        c.seed = seed;
        c.trace = self.trace;
        c.phi_freq = o.phi_freq.unwrap_or(c.phi_freq);
        c.phi_size = o.phi_size.unwrap_or(c.phi_size);
        c.l_min = o.l_min.unwrap_or(c.l_min);
        c.l_max = o.l_max.unwrap_or(c.l_max);
        c.p_ex = o.p_ex.unwrap_or(c.p_ex);
        if let Some(t) = o.t_max {
            c.time_limit = Duration::from_secs_f64(t);
        }
        c.max_iterations = o.max_iterations;
        c.validate().map_err(|e| HarnessError::Usage(e.to_string()))?;
        Ok(c)
    }
}

pub fn load_instance(path: &Path) -> Result<Instance, HarnessError> {
    parse_instance(&read_file(path)?).map_err(|e| input_err(path, e))
}

pub fn load_bks(path: Option<&Path>) -> Result<HashMap<String, Cost>, HarnessError> {
    match path {
        None => Ok(HashMap::new()),
        Some(p) => read_bks_table(&read_file(p)?).map_err(|e| input_err(p, e)),
    }
}

/// Outcome of one host run, with everything needed for the CSV outputs.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub instance: String,
    pub n: usize,
    pub host: HostKind,
    pub pils: bool,
    pub seed: u64,
    pub cost: Cost,
    pub gap: Option<f64>,
    pub budget_ms: f64,
    pub result: RunResult,
}

impl RunRecord {
    pub fn stem(&self) -> String {
        format!("{}_{}_{}_s{}", self.instance, self.host, on_off(self.pils), self.seed)
    }
}

fn on_off(pils: bool) -> &'static str {
    if pils {
        "on"
    } else {
        "off"
    }
}

fn fmt_gap(g: Option<f64>) -> String {
    g.map(|g| format!("{g:.6}")).unwrap_or_default()
}

pub const SUMMARY_HEADER: &str = "instance,host,pils,seed,cost,gap";
pub const TIMING_HEADER: &str = "instance,host,pils,seed,t_pils_pct,wall_ms,iterations";
pub const RUN_HEADER: &str =
    "instance,host,pils,seed,n,cost,budget_ms,total_ms,sample_ms,inject_ms,extract_ms,local_search_ms,iterations";

#[derive(Debug, Default)]
pub struct SolveOutcome {
    pub records: Vec<RunRecord>,
    /// Instances that could not be loaded, with the reason.
    pub failures: Vec<(PathBuf, String)>,
}

/// Runs every (instance, seed, arm) job of the spec, writes solutions, logs,
/// `summary.csv` and `timing.csv` under `spec.out`.
pub fn cmd_solve(spec: &RunSpec) -> Result<SolveOutcome, HarnessError> {
    spec.validate()?;
    let bks = load_bks(spec.bks.as_deref())?;
    let mut outcome = SolveOutcome::default();
    let mut instances = Vec::new();
    for path in &spec.instances {
        match load_instance(path) {
            Ok(inst) => instances.push(inst),
            Err(e) => {
                log::error!("{e}");
                outcome.failures.push((path.clone(), e.to_string()));
            }
        }
    }
    let mut jobs = Vec::new();
    for (i, inst) in instances.iter().enumerate() {
        for seed in 1..=spec.seeds {
            for &pils in spec.pils.arms() {
                jobs.push((i, pils, seed, spec.config(inst, pils, seed)?));
            }
        }
    }
    let results = par::map(jobs, spec.jobs, |(i, pils, seed, config)| {
        let inst = &instances[i];
        log::info!("{} {} pils={} seed={}", inst.name(), config.host, on_off(pils), seed);
        hosts::run(inst, &config).map(|r| (i, pils, seed, config, r))
    });
    for res in results {
        let (i, pils, seed, config, result) = res.map_err(|e| HarnessError::Usage(e.to_string()))?;
        let inst = &instances[i];
        let report = validate(inst, &result.best);
        if !report.is_empty() {
            return Err(HarnessError::Invariant(format!("{} seed {seed}: {report}", inst.name())));
        }
        let gap = match bks.get(inst.name()) {
            Some(&z) => Some(gap_percent(result.cost, z).map_err(|e| HarnessError::Input(e.to_string()))?),
            None => {
                log::warn!("no BKS entry for {}", inst.name());
                None
            }
        };
        let budget_ms = if config.max_iterations.is_some() { result.log.total_ms } else { result.log.time_limit_ms };
        outcome.records.push(RunRecord {
            instance: inst.name().to_string(),
            n: inst.n(),
            host: config.host,
            pils,
            seed,
            cost: result.cost,
            gap,
            budget_ms,
            result,
        });
    }
    outcome.records.sort_by(|a, b| (&a.instance, a.host, !a.pils, a.seed).cmp(&(&b.instance, b.host, !b.pils, b.seed)));
    write_run_outputs(spec, &instances, &outcome.records)?;
    Ok(outcome)
}

fn write_run_outputs(spec: &RunSpec, instances: &[Instance], records: &[RunRecord]) -> Result<(), HarnessError> {
    let mut summary = format!("{SUMMARY_HEADER}\n");
    let mut timing = format!("{TIMING_HEADER}\n");
    for r in records {
        let _ = writeln!(summary, "{},{},{},{},{},{}", r.instance, r.host, on_off(r.pils), r.seed, r.cost, fmt_gap(r.gap));
        let log = &r.result.log;
        let pct = if r.pils { log.pils_share_percent() } else { 0.0 };
        let _ = writeln!(
            timing,
            "{},{},{},{},{:.3},{:.3},{}",
            r.instance, r.host, on_off(r.pils), r.seed, pct, log.total_ms, log.iterations
        );
        let stem = r.stem();
        let mut sol_text = Vec::new();
        model::write_solution(&r.result.best, &mut sol_text).expect("in-memory write");
        let sol_text = String::from_utf8(sol_text).expect("utf8");
        let sol_path = spec.out.join("solutions").join(format!("{stem}.sol"));
        write_file(&sol_path, &sol_text)?;
        let inst = instances.iter().find(|i| i.name() == r.instance).expect("instance of record");
        let reread = parse_solution(&sol_text, inst).map_err(|e| HarnessError::Invariant(e.to_string()))?;
        let report = validate(inst, &reread);
        if !report.is_empty() {
            return Err(HarnessError::Invariant(format!("{}: {report}", sol_path.display())));
        }
        let logs = spec.out.join("logs");
        let mut events = Vec::new();
        log.write_events_csv(&mut events).expect("in-memory write");
        write_file(&logs.join(format!("{stem}_events.csv")), &String::from_utf8(events).expect("utf8"))?;
        let mut moves = Vec::new();
        crate::inject::write_moves(&log.moves, &mut moves).expect("in-memory write");
        write_file(&logs.join(format!("{stem}_moves.csv")), &String::from_utf8(moves).expect("utf8"))?;
        let p = &log.phases;
        let run = format!(
            "{RUN_HEADER}\n{},{},{},{},{},{},{:.3},{:.3},{:.3},{:.3},{:.3},{:.3},{}\n",
            r.instance,
            r.host,
            on_off(r.pils),
            r.seed,
            r.n,
            r.cost,
            r.budget_ms,
            log.total_ms,
            p.sample_ms,
            p.inject_ms,
            p.extract_ms,
            p.local_search_ms,
            log.iterations
        );
        write_file(&logs.join(format!("{stem}_run.csv")), &run)?;
        if spec.dump_pool {
            let mut dump = Vec::new();
            r.result.pool.write_csv(&mut dump).map_err(|e| HarnessError::Invariant(e.to_string()))?;
            write_file(&logs.join(format!("{stem}_pool.csv")), &String::from_utf8(dump).expect("utf8"))?;
        }
    }
    write_file(&spec.out.join("summary.csv"), &summary)?;
    write_file(&spec.out.join("timing.csv"), &timing)?;
    Ok(())
}

/// Paired on/off result for one (instance, seed).
#[derive(Debug, Clone, PartialEq)]
pub struct AblationPair {
    pub instance: String,
    pub category: String,
    pub seed: u64,
    pub cost_on: Cost,
    pub cost_off: Cost,
    pub gap_on: Option<f64>,
    pub gap_off: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CategoryMean {
    pub category: String,
    pub runs: usize,
    pub mean_cost_on: f64,
    pub mean_cost_off: f64,
    pub mean_gap_on: Option<f64>,
    pub mean_gap_off: Option<f64>,
}

#[derive(Debug)]
pub struct AblationOutcome {
    pub solve: SolveOutcome,
    pub pairs: Vec<AblationPair>,
    pub categories: Vec<CategoryMean>,
}

pub const ABLATION_HEADER: &str = "instance,category,host,seed,cost_on,cost_off,gap_on,gap_off";
pub const CATEGORY_HEADER: &str = "category,host,runs,mean_cost_on,mean_cost_off,mean_gap_on,mean_gap_off";

fn read_categories(path: Option<&Path>) -> Result<HashMap<String, String>, HarnessError> {
    let Some(path) = path else { return Ok(HashMap::new()) };
    let text = read_file(path)?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut out = HashMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| input_err(path, e))?;
        match (rec.get(0), rec.get(1)) {
            (Some(i), Some(c)) => {
                out.insert(i.to_string(), c.to_string());
            }
            _ => return Err(input_err(path, "expected instance,category rows")),
        }
    }
    Ok(out)
}

/// Categories from the metadata file, or a size split at the median customer count.
pub fn categorize(sizes: &BTreeMap<String, usize>, metadata: &HashMap<String, String>) -> HashMap<String, String> {
    let mut ns: Vec<usize> = sizes.values().copied().collect();
    ns.sort_unstable();
    let median = ns.get(ns.len().saturating_sub(1) / 2).copied().unwrap_or(0);
    sizes
        .iter()
        .map(|(name, &n)| {
            let cat = metadata.get(name).cloned().unwrap_or_else(|| if n <= median { "small" } else { "large" }.to_string());
            (name.clone(), cat)
        })
        .collect()
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, count) = xs.fold((0.0, 0usize), |(s, c), x| (s + x, c + 1));
    (count > 0).then(|| sum / count as f64)
}

/// Both arms with identical seeds, paired per (instance, seed).
pub fn cmd_ablate(spec: &RunSpec) -> Result<AblationOutcome, HarnessError> {
    let spec = RunSpec { pils: PilsMode::Both, ..spec.clone() };
    let metadata = read_categories(spec.metadata.as_deref())?;
    let solve = cmd_solve(&spec)?;
    let sizes: BTreeMap<String, usize> = solve.records.iter().map(|r| (r.instance.clone(), r.n)).collect();
    let cats = categorize(&sizes, &metadata);
    type Arms<'a> = (Option<&'a RunRecord>, Option<&'a RunRecord>);
    let mut by_key: BTreeMap<(String, u64), Arms> = BTreeMap::new();
    for r in &solve.records {
        let slot = by_key.entry((r.instance.clone(), r.seed)).or_default();
        if r.pils {
            slot.0 = Some(r);
        } else {
            slot.1 = Some(r);
        }
    }
    let mut pairs = Vec::new();
    for ((instance, seed), (on, off)) in by_key {
        let (Some(on), Some(off)) = (on, off) else {
            return Err(HarnessError::Invariant(format!("unpaired run {instance} seed {seed}")));
        };
        pairs.push(AblationPair {
            category: cats[&instance].clone(),
            instance,
            seed,
            cost_on: on.cost,
            cost_off: off.cost,
            gap_on: on.gap,
            gap_off: off.gap,
        });
    }
    let mut groups: BTreeMap<String, Vec<&AblationPair>> = BTreeMap::new();
    for p in &pairs {
        groups.entry(p.category.clone()).or_default().push(p);
        groups.entry("all".to_string()).or_default().push(p);
    }
    let categories: Vec<CategoryMean> = groups
        .into_iter()
        .map(|(category, ps)| CategoryMean {
            runs: ps.len(),
            mean_cost_on: mean(ps.iter().map(|p| p.cost_on as f64)).unwrap_or(0.0),
            mean_cost_off: mean(ps.iter().map(|p| p.cost_off as f64)).unwrap_or(0.0),
            mean_gap_on: mean(ps.iter().filter_map(|p| p.gap_on)),
            mean_gap_off: mean(ps.iter().filter_map(|p| p.gap_off)),
            category,
        })
        .collect();
    let mut text = format!("{ABLATION_HEADER}\n");
    for p in &pairs {
        let _ = writeln!(
            text,
            "{},{},{},{},{},{},{},{}",
            p.instance,
            p.category,
            spec.host,
            p.seed,
            p.cost_on,
            p.cost_off,
            fmt_gap(p.gap_on),
            fmt_gap(p.gap_off)
        );
    }
    write_file(&spec.out.join("ablation.csv"), &text)?;
    let mut text = format!("{CATEGORY_HEADER}\n");
    for c in &categories {
        let _ = writeln!(
            text,
            "{},{},{},{:.3},{:.3},{},{}",
            c.category,
            spec.host,
            c.runs,
            c.mean_cost_on,
            c.mean_cost_off,
            fmt_gap(c.mean_gap_on),
            fmt_gap(c.mean_gap_off)
        );
    }
    write_file(&spec.out.join("categories.csv"), &text)?;
    Ok(AblationOutcome { solve, pairs, categories })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bin {
    pub index: usize,
    pub patterns: usize,
    pub present: usize,
    pub mean_gap: Option<f64>,
}

impl Bin {
    pub fn fraction(&self) -> f64 {
        if self.patterns == 0 {
            0.0
        } else {
            self.present as f64 / self.patterns as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LengthBins {
    pub length: usize,
    pub bins: Vec<Bin>,
}

impl LengthBins {
    /// Presence fractions never increase from one bin to the next.
    pub fn monotone(&self) -> bool {
        self.bins.windows(2).all(|w| w[0].fraction() >= w[1].fraction())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinReport {
    pub bin_size: usize,
    pub lengths: Vec<LengthBins>,
}

impl BinReport {
    pub fn length(&self, l: usize) -> Option<&LengthBins> {
        self.lengths.iter().find(|b| b.length == l)
    }
}

pub const BINS_HEADER: &str = "length,bin,patterns,present,fraction,mean_gap,monotone";

impl BinReport {
    pub fn to_csv(&self) -> String {
        let mut text = format!("{BINS_HEADER}\n");
        for lb in &self.lengths {
            for b in &lb.bins {
                let _ = writeln!(
                    text,
                    "{},{},{},{},{:.6},{},{}",
                    lb.length,
                    b.index,
                    b.patterns,
                    b.present,
                    b.fraction(),
                    fmt_gap(b.mean_gap),
                    lb.monotone()
                );
            }
        }
        text
    }
}

/// Sorts the patterns of each length by decreasing frequency, cuts them into
/// bins of `bin_size`, and measures how many of each bin occur in `reference`.
/// Gaps of the best solution associated with each pattern are taken against
/// `z_ref`.
pub fn analyze_bins(rows: &[PoolRow], reference: &Solution, z_ref: Cost, bin_size: usize) -> Result<BinReport, HarnessError> {
    if bin_size == 0 {
        return Err(HarnessError::Usage("bin size must be positive".into()));
    }
    let mut by_len: BTreeMap<usize, Vec<&PoolRow>> = BTreeMap::new();
    for r in rows {
        by_len.entry(r.pattern.len()).or_default().push(r);
    }
    let mut lengths = Vec::new();
    for (length, mut rs) in by_len {
        // stable: dump order breaks frequency ties
        rs.sort_by_key(|r| std::cmp::Reverse(r.frequency));
        let bins = rs
            .chunks(bin_size)
            .enumerate()
            .map(|(i, chunk)| Bin {
                index: i + 1,
                patterns: chunk.len(),
                present: chunk.iter().filter(|r| contains_pattern(reference, &r.pattern)).count(),
                mean_gap: mean(chunk.iter().filter_map(|r| r.best_cost).filter_map(|c| gap_percent(c, z_ref).ok())),
            })
            .collect();
        lengths.push(LengthBins { length, bins });
    }
    Ok(BinReport { bin_size, lengths })
}

/// File-based front end of [`analyze_bins`]. The bin size defaults to `n`;
/// gaps use the BKS entry of the instance when available, else the reference cost.
pub fn cmd_analyze_bins(
    instance: &Path,
    pool: &Path,
    reference: &Path,
    bks: Option<&Path>,
    bin_size: Option<usize>,
    out: &Path,
) -> Result<BinReport, HarnessError> {
    let inst = load_instance(instance)?;
    let rows = PatternPool::read_rows(&read_file(pool)?).map_err(|e| input_err(pool, e))?;
    let sol = parse_solution(&read_file(reference)?, &inst).map_err(|e| input_err(reference, e))?;
    let report = validate(&inst, &sol);
    if !report.missing.is_empty() || !report.duplicated.is_empty() {
        return Err(input_err(reference, format!("not a complete solution: {report}")));
    }
    let z_ref = load_bks(bks)?.get(inst.name()).copied().unwrap_or_else(|| sol.distance());
    let bins = analyze_bins(&rows, &sol, z_ref, bin_size.unwrap_or(inst.n()))?;
    write_file(&out.join("bins.csv"), &bins.to_csv())?;
    Ok(bins)
}

/// Files of a log directory ending in `suffix`, sorted by name.
fn logs_with_suffix(dirs: &[PathBuf], suffix: &str) -> Result<Vec<PathBuf>, HarnessError> {
    let mut out = Vec::new();
    for dir in dirs {
        let entries = fs::read_dir(dir).map_err(|e| io_err(dir, e))?;
        for entry in entries {
            let path = entry.map_err(|e| io_err(dir, e))?.path();
            if path.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.ends_with(suffix)) {
                out.push(path);
            }
        }
    }
    out.sort();
    Ok(out)
}

pub fn read_moves(text: &str) -> Result<Vec<MoveRecord>, String> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| e.to_string())?.iter().collect::<Vec<_>>().join(",");
    if header != MOVE_CSV_HEADER {
        return Err(format!("unexpected header '{header}'"));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        let f = |i: usize| rec.get(i).ok_or_else(|| "short row".to_string());
        let num = |i: usize| f(i)?.parse::<i64>().map_err(|e| e.to_string());
        out.push(MoveRecord {
            pattern_len: num(0)? as usize,
            order: num(1)? as usize,
            routes: num(2)? as usize,
            delta: num(3)?,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Histogram {
    pub counts: BTreeMap<usize, u64>,
}

impl Histogram {
    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn share(&self, value: usize) -> f64 {
        let t = self.total();
        if t == 0 {
            0.0
        } else {
            *self.counts.get(&value).unwrap_or(&0) as f64 / t as f64
        }
    }

    /// Share of the mass within `lo..=hi`.
    pub fn share_in(&self, lo: usize, hi: usize) -> f64 {
        (lo..=hi).map(|v| self.share(v)).sum()
    }

    fn add(&mut self, v: usize) {
        *self.counts.entry(v).or_default() += 1;
    }
}

/// Run-level timing fields from a `_run.csv` file.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunTiming {
    pub instance: String,
    pub host: String,
    pub pils: bool,
    pub seed: u64,
    pub budget_ms: f64,
    pub total_ms: f64,
    pub sample_ms: f64,
    pub inject_ms: f64,
    pub extract_ms: f64,
    pub local_search_ms: f64,
}

pub fn read_run(text: &str) -> Result<RunTiming, String> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let rec = rdr.records().next().ok_or("empty run file")?.map_err(|e| e.to_string())?;
    let s = |i: usize| rec.get(i).map(str::to_string).ok_or_else(|| "short row".to_string());
    let f = |i: usize| s(i)?.parse::<f64>().map_err(|e| e.to_string());
    Ok(RunTiming {
        instance: s(0)?,
        host: s(1)?,
        pils: s(2)? == "on",
        seed: s(3)?.parse().map_err(|e: std::num::ParseIntError| e.to_string())?,
        budget_ms: f(6)?,
        total_ms: f(7)?,
        sample_ms: f(8)?,
        inject_ms: f(9)?,
        extract_ms: f(10)?,
        local_search_ms: f(11)?,
    })
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MoveStats {
    pub order: Histogram,
    pub pattern_size: Histogram,
    pub routes: Histogram,
    pub sample_ms: f64,
    pub inject_ms: f64,
    pub extract_ms: f64,
    pub total_ms: f64,
}

impl MoveStats {
    pub fn from_moves<'a>(moves: impl IntoIterator<Item = &'a MoveRecord>) -> Self {
        let mut s = Self::default();
        for m in moves {
            s.order.add(m.order);
            s.pattern_size.add(m.pattern_len);
            s.routes.add(m.routes);
        }
        s
    }

    pub fn to_csv(&self) -> String {
        let mut text = String::from("histogram,value,count,share\n");
        for (name, h) in [("order", &self.order), ("pattern_size", &self.pattern_size), ("routes", &self.routes)] {
            for (v, c) in &h.counts {
                let _ = writeln!(text, "{name},{v},{c},{:.6}", h.share(*v));
            }
        }
        text
    }

    pub fn phases_csv(&self) -> String {
        let pils = self.sample_ms + self.inject_ms + self.extract_ms;
        let pct = |x: f64, of: f64| if of > 0.0 { 100.0 * x / of } else { 0.0 };
        let mut text = String::from("phase,ms,pct_of_pils,pct_of_total\n");
        for (name, ms) in [("sample", self.sample_ms), ("inject", self.inject_ms), ("extract", self.extract_ms), ("pils", pils)] {
            let _ = writeln!(text, "{name},{ms:.3},{:.3},{:.3}", pct(ms, pils), pct(ms, self.total_ms));
        }
        text
    }
}

/// Normalized histograms of move order, pattern size and route count over
/// every `_moves.csv` in `dirs`, plus the PILS phase breakdown of the runs.
pub fn cmd_move_stats(dirs: &[PathBuf], out: &Path) -> Result<MoveStats, HarnessError> {
    let mut moves = Vec::new();
    for path in logs_with_suffix(dirs, "_moves.csv")? {
        moves.extend(read_moves(&read_file(&path)?).map_err(|e| input_err(&path, e))?);
    }
    if moves.is_empty() {
        log::warn!("no applied pattern moves found");
    }
    let mut stats = MoveStats::from_moves(&moves);
    for path in logs_with_suffix(dirs, "_run.csv")? {
        let run = read_run(&read_file(&path)?).map_err(|e| input_err(&path, e))?;
        if run.pils {
            stats.sample_ms += run.sample_ms;
            stats.inject_ms += run.inject_ms;
            stats.extract_ms += run.extract_ms;
            stats.total_ms += run.total_ms;
        }
    }
    write_file(&out.join("move_stats.csv"), &stats.to_csv())?;
    write_file(&out.join("phases.csv"), &stats.phases_csv())?;
    Ok(stats)
}

pub const DEFAULT_FRACTIONS: [f64; 10] = [0.01, 0.02, 0.05, 0.10, 0.15, 0.20, 0.30, 0.50, 0.75, 1.00];

/// Best cost known at `t_ms` given `(wall_ms, cost)` improvements in time
/// order; before the first improvement, its cost.
pub fn best_at(improvements: &[(f64, Cost)], t_ms: f64) -> Option<Cost> {
    let first = improvements.first()?.1;
    Some(improvements.iter().take_while(|(w, _)| *w <= t_ms).last().map_or(first, |&(_, c)| c))
}

fn read_improvements(text: &str) -> Result<Vec<(f64, Cost)>, String> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        if rec.get(2).and_then(|k| k.parse::<EventKind>().ok()) == Some(EventKind::NewBest) {
            let w = rec.get(1).ok_or("short row")?.parse::<f64>().map_err(|e| e.to_string())?;
            let c = rec.get(3).ok_or("short row")?.parse::<Cost>().map_err(|e| e.to_string())?;
            out.push((w, c));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TracePoint {
    pub instance: String,
    pub host: String,
    pub pils: bool,
    pub fraction: f64,
    pub runs: usize,
    pub mean_cost: f64,
    pub mean_gap: Option<f64>,
}

/// Best cost (and gap) at each fraction of the budget, averaged over seeds.
pub fn cmd_convergence(dirs: &[PathBuf], fractions: &[f64], bks: Option<&Path>, out: &Path) -> Result<Vec<TracePoint>, HarnessError> {
    if fractions.iter().any(|f| !(0.0..=1.0).contains(f)) {
        return Err(HarnessError::Usage("fractions must lie in [0, 1]".into()));
    }
    let bks = load_bks(bks)?;
    let mut groups: BTreeMap<(String, String, bool), Vec<Vec<Cost>>> = BTreeMap::new();
    for path in logs_with_suffix(dirs, "_run.csv")? {
        let run = read_run(&read_file(&path)?).map_err(|e| input_err(&path, e))?;
        let events_path = PathBuf::from(path.to_string_lossy().replace("_run.csv", "_events.csv"));
        let imp = read_improvements(&read_file(&events_path)?).map_err(|e| input_err(&events_path, e))?;
        let Some(_) = imp.first() else { continue };
        let costs = fractions.iter().map(|f| best_at(&imp, f * run.budget_ms).expect("non-empty")).collect();
        groups.entry((run.instance, run.host, run.pils)).or_default().push(costs);
    }
    let mut points = Vec::new();
    let mut text = String::from("instance,host,pils,fraction,runs,mean_cost,mean_gap\n");
    for ((instance, host, pils), runs) in groups {
        for (k, &fraction) in fractions.iter().enumerate() {
            let mean_cost = mean(runs.iter().map(|r| r[k] as f64)).unwrap_or(0.0);
            let mean_gap = bks.get(&instance).and_then(|&z| mean(runs.iter().filter_map(|r| gap_percent(r[k], z).ok())));
            let _ = writeln!(text, "{instance},{host},{},{fraction},{},{mean_cost:.3},{}", on_off(pils), runs.len(), fmt_gap(mean_gap));
            points.push(TracePoint { instance: instance.clone(), host: host.clone(), pils, fraction, runs: runs.len(), mean_cost, mean_gap });
        }
    }
    write_file(&out.join("convergence.csv"), &text)?;
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern::Pattern;

    fn row(seq: &[usize], f: u64) -> PoolRow {
        PoolRow { pattern: Pattern::new(seq, 1, 10).unwrap(), frequency: f, best_cost: None }
    }

    #[test]
    fn planted_frequencies_fill_bins_in_order() {
        // 100 patterns with frequencies 100..=1, bins of 10
        let rows: Vec<PoolRow> = (0..100)
            .map(|k| PoolRow { best_cost: Some(100 - k as i64), ..row(&[k + 1, k + 200, k + 400], 100 - k as u64) })
            .rev()
            .collect();
        let coords = (0..=500).map(|i| (i as f64, 0.0)).collect();
        let mut d = vec![1; 501];
        d[0] = 0;
        let inst = Instance::new("b", coords, d, 1000).unwrap();
        let sol = Solution::from_routes(&inst, vec![(1..=500).collect()]);
        // best cost equals frequency, so with z_ref = 1 the mean gap reveals
        // which frequencies landed in each bin: bin k holds 100-10k down to 91-10k
        let report = analyze_bins(&rows, &sol, 1, 10).unwrap();
        let bins = &report.length(3).unwrap().bins;
        assert_eq!(bins.len(), 10);
        for (k, b) in bins.iter().enumerate() {
            assert_eq!((b.index, b.patterns, b.present), (k + 1, 10, 0));
            let mean_freq = 95.5 - 10.0 * k as f64;
            assert!((b.mean_gap.unwrap() - 100.0 * (mean_freq - 1.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn top_bin_fully_present() {
        let coords = (0..=8).map(|i| (i as f64, 1.0)).collect();
        let mut d = vec![1; 9];
        d[0] = 0;
        let inst = Instance::new("t", coords, d, 100).unwrap();
        let sol = Solution::from_routes(&inst, vec![vec![1, 2, 3, 4], vec![5, 6, 7, 8]]);
        let rows = vec![row(&[1, 2, 3], 9), row(&[8, 7, 6], 8), row(&[2, 5, 7], 1), row(&[1, 3, 2], 1)];
        let report = analyze_bins(&rows, &sol, 100, 2).unwrap();
        let l3 = report.length(3).unwrap();
        assert_eq!(l3.bins[0].fraction(), 1.0);
        assert_eq!(l3.bins[1].fraction(), 0.0);
        assert!(l3.monotone());
        let single = analyze_bins(&rows[..1], &sol, 100, 2).unwrap();
        assert!(single.length(3).unwrap().monotone());
    }

    #[test]
    fn histograms_normalize() {
        let moves = vec![
            MoveRecord { pattern_len: 6, order: 8, routes: 2, delta: -5 },
            MoveRecord { pattern_len: 3, order: 2, routes: 1, delta: -1 },
            MoveRecord { pattern_len: 3, order: 4, routes: 1, delta: -2 },
        ];
        let s = MoveStats::from_moves(&moves);
        for h in [&s.order, &s.pattern_size, &s.routes] {
            let sum: f64 = h.counts.keys().map(|&v| h.share(v)).sum();
            assert!((sum - 1.0).abs() < 1e-9);
        }
        let one = MoveStats::from_moves(&moves[..1]);
        assert_eq!(one.order.share(8), 1.0);
    }

    #[test]
    fn best_at_fractions() {
        let imp = vec![(5.0, 100), (20.0, 90), (70.0, 80)];
        assert_eq!(best_at(&imp, 1.0), Some(100));
        assert_eq!(best_at(&imp, 20.0), Some(90));
        assert_eq!(best_at(&imp, 100.0), Some(80));
        assert_eq!(best_at(&[], 1.0), None);
    }

    #[test]
    fn median_split_categories() {
        let sizes: BTreeMap<String, usize> = [("a", 100), ("b", 150), ("c", 200)].iter().map(|(k, v)| (k.to_string(), *v)).collect();
        let cats = categorize(&sizes, &HashMap::new());
        assert_eq!((cats["a"].as_str(), cats["b"].as_str(), cats["c"].as_str()), ("small", "small", "large"));
        let meta: HashMap<String, String> = [("c".to_string(), "R-C".to_string())].into_iter().collect();
        assert_eq!(categorize(&sizes, &meta)["c"], "R-C");
    }
}
