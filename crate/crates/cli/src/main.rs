use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pils::harness::{self, HarnessError, Overrides, PilsMode, RunSpec, DEFAULT_FRACTIONS};
use pils::hosts::HostKind;

#[derive(Parser)]
#[command(name = "pils", version, about = "Pattern injection local search for the CVRP")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve instances and write solutions, logs and summary tables.
    Solve(RunArgs),
    /// Run each instance and seed with and without pattern injection.
    Ablate(RunArgs),
    /// Bin the patterns of a pool dump by frequency and test them against a reference solution.
    AnalyzeBins {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        pool: PathBuf,
        #[arg(long)]
        reference: PathBuf,
        /// Patterns per bin (defaults to the customer count).
        #[arg(long)]
        bin_size: Option<usize>,
        #[arg(long)]
        bks: Option<PathBuf>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Histograms of applied pattern moves found in run log directories.
    MoveStats {
        #[arg(required = true)]
        logs: Vec<PathBuf>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Best cost at fractions of the time budget, averaged over seeds.
    Convergence {
        #[arg(required = true)]
        logs: Vec<PathBuf>,
        /// Comma-separated budget fractions.
        #[arg(long, value_delimiter = ',')]
        fractions: Option<Vec<f64>>,
        #[arg(long)]
        bks: Option<PathBuf>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(required = true)]
    instances: Vec<PathBuf>,
    #[arg(long, default_value = "hgs")]
    host: HostKind,
    /// on, off or both (ignored by ablate, which always runs both).
    #[arg(long, default_value = "on")]
    pils: PilsMode,
    #[arg(long)]
    phi_freq: Option<usize>,
    #[arg(long)]
    phi_size: Option<usize>,
    #[arg(long)]
    lmin: Option<usize>,
    #[arg(long)]
    lmax: Option<usize>,
    #[arg(long)]
    pex: Option<f64>,
    /// Time budget per run in seconds.
    #[arg(long)]
    tmax: Option<f64>,
    /// Iteration budget per run; makes runs reproducible.
    #[arg(long)]
    max_iterations: Option<u64>,
    #[arg(long, default_value_t = 1)]
    seeds: u64,
    #[arg(long)]
    bks: Option<PathBuf>,
    /// CSV `instance,category` used to group ablation results.
    #[arg(long)]
    metadata: Option<PathBuf>,
    #[arg(long, default_value = "runs")]
    out: PathBuf,
    /// Concurrent runs.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Also write the final pattern pool of each run.
    #[arg(long)]
    dump_pool: bool,
    /// Only log improvements, penalizations and diversifications.
    #[arg(long)]
    quiet_events: bool,
}

impl RunArgs {
    fn spec(self) -> RunSpec {
        RunSpec {
            pils: self.pils,
            overrides: Overrides {
                phi_freq: self.phi_freq,
                phi_size: self.phi_size,
                l_min: self.lmin,
                l_max: self.lmax,
                p_ex: self.pex,
                t_max: self.tmax,
                max_iterations: self.max_iterations,
            },
            seeds: self.seeds,
            bks: self.bks,
            metadata: self.metadata,
            jobs: self.jobs,
            dump_pool: self.dump_pool,
            trace: !self.quiet_events,
            ..RunSpec::new(self.instances, self.host, self.out)
        }
    }
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Solve(args) => {
            let outcome = harness::cmd_solve(&args.spec())?;
            for r in &outcome.records {
                println!("{} {} pils={} seed={} cost={}", r.instance, r.host, r.pils, r.seed, r.cost);
            }
            if let Some((path, msg)) = outcome.failures.first() {
                return Err(HarnessError::Input(format!("{}: {msg}", path.display())));
            }
        }
        Command::Ablate(args) => {
            let outcome = harness::cmd_ablate(&args.spec())?;
            for c in &outcome.categories {
                println!("{} runs={} mean_on={:.1} mean_off={:.1}", c.category, c.runs, c.mean_cost_on, c.mean_cost_off);
            }
            if let Some((path, msg)) = outcome.solve.failures.first() {
                return Err(HarnessError::Input(format!("{}: {msg}", path.display())));
            }
        }
        Command::AnalyzeBins { instance, pool, reference, bin_size, bks, out } => {
            let report = harness::cmd_analyze_bins(&instance, &pool, &reference, bks.as_deref(), bin_size, &out)?;
            for lb in &report.lengths {
                let fr: Vec<String> = lb.bins.iter().map(|b| format!("{:.3}", b.fraction())).collect();
                println!("length {}: {} monotone={}", lb.length, fr.join(" "), lb.monotone());
            }
        }
        Command::MoveStats { logs, out } => {
            let stats = harness::cmd_move_stats(&logs, &out)?;
            println!("{} moves", stats.order.total());
        }
        Command::Convergence { logs, fractions, bks, out } => {
            let fractions = fractions.unwrap_or_else(|| DEFAULT_FRACTIONS.to_vec());
            let points = harness::cmd_convergence(&logs, &fractions, bks.as_deref(), &out)?;
            println!("{} trace points", points.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
