use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gdca_tree::analysis::{self, BoundInputs};
use gdca_tree::harness::{compare_runs, run_experiment, Experiment, ExperimentConfig};
use gdca_tree::topology::node_index_set;
use gdca_tree::Result;

#[derive(Parser)]
#[command(
    name = "gdca",
    about = "Simulate dual coordinate ascent on tree networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configured experiment and write trace CSV files
    Run {
        /// Path to a TOML experiment config
        config: String,
    },
    /// Compare two traces: time to reach a fraction of the initial gap
    Compare {
        trace_a: String,
        trace_b: String,
        /// Target duality gap as a fraction of the initial gap, in (0, 1)
        #[arg(long)]
        target_fraction: f64,
    },
    /// Convergence calculators
    #[command(subcommand)]
    Analyze(Analyze),
}

#[derive(Subcommand)]
enum Analyze {
    /// Local convergence factor after T_p inner iterations on a block
    ThetaP(ThetaPArgs),
    /// Per-outer-iteration global convergence bound
    Bound(BoundArgs),
    /// Closed-form delay-aware local iteration count
    OptimalTp(OptimalTpArgs),
    /// Smallest valid partition-correlation constant for a configured run
    RhoMin {
        /// Path to a TOML experiment config
        config: String,
    },
}

#[derive(Args)]
struct ThetaPArgs {
    #[arg(long)]
    lambda: f64,
    /// Total number of training instances
    #[arg(long)]
    m: usize,
    /// Loss smoothness constant (must be positive)
    #[arg(long)]
    gamma: f64,
    /// Block size
    #[arg(long)]
    m_b: usize,
    /// Inner iteration count
    #[arg(long)]
    t_p: usize,
}

#[derive(Args)]
struct BoundArgs {
    #[arg(long)]
    lambda: f64,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    gamma: f64,
    /// Per-block local factors Θ^(k), comma-separated
    #[arg(long, value_delimiter = ',')]
    thetas: Vec<f64>,
    /// Aggregation weights β_k, comma-separated, same order as thetas
    #[arg(long, value_delimiter = ',')]
    betas: Vec<f64>,
    /// Partition correlation constant ρ
    #[arg(long)]
    rho: f64,
    /// Outer iteration count
    #[arg(long)]
    t: usize,
}

#[derive(Args)]
struct OptimalTpArgs {
    /// Local rate constant c1 = λmγ/(1+λmγ)
    #[arg(long)]
    c1: f64,
    /// Global rate constant c2 = λmγ/(ρ+λmγ)
    #[arg(long)]
    c2: f64,
    /// Block size n_k
    #[arg(long)]
    n_k: usize,
    /// Total instances n_Q
    #[arg(long)]
    n_q: usize,
    /// Delay severity r = (t_delay + t_cp) / t_lp
    #[arg(long)]
    r: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Run { config } => {
            let cfg = ExperimentConfig::from_path(&config)?;
            let out = run_experiment(&cfg)?;
            for p in &out.trial_paths {
                println!("wrote {}", p.display());
            }
            println!("wrote {}", out.mean_path.display());
            Ok(())
        }
        Command::Compare {
            trace_a,
            trace_b,
            target_fraction,
        } => {
            let report = compare_runs(&trace_a, &trace_b, target_fraction)?;
            println!("initial_gap = {:.6e}", report.initial_gap);
            println!("target_gap  = {:.6e}", report.target_gap);
            let show = |t: Option<f64>| match t {
                Some(t) => format!("{t:.6}"),
                None => "never reached".into(),
            };
            println!("time_a = {}", show(report.time_a));
            println!("time_b = {}", show(report.time_b));
            match report.speedup {
                Some(s) => println!("speedup (time_a / time_b) = {s:.6}"),
                None => println!("speedup undefined"),
            }
            Ok(())
        }
        Command::Analyze(a) => analyze(a),
    }
}

fn analyze(cmd: Analyze) -> Result<()> {
    match cmd {
        Analyze::ThetaP(a) => {
            let theta = analysis::theta_p(a.lambda, a.m, a.gamma, a.m_b, a.t_p)?;
            println!("theta_p = {theta:.12}");
        }
        Analyze::Bound(a) => {
            let bound = analysis::convergence_bound(&BoundInputs {
                lambda: a.lambda,
                m: a.m,
                gamma: a.gamma,
                thetas: a.thetas,
                betas: a.betas,
                rho: a.rho,
                t: a.t,
            })?;
            println!("bound = {bound:.12e}");
        }
        Analyze::OptimalTp(a) => {
            let t = analysis::optimal_tp(a.c1, a.c2, a.n_k as f64, a.n_q as f64, a.r)?;
            println!("optimal_t_p = {t:.6}");
        }
        Analyze::RhoMin { config } => {
            let cfg = ExperimentConfig::from_path(&config)?;
            let experiment = Experiment::assemble(&cfg)?;
            let blocks: Vec<Vec<usize>> = experiment
                .topology
                .leaves()
                .iter()
                .map(|&leaf| node_index_set(&experiment.topology, &experiment.partition, leaf))
                .collect::<Result<_>>()?;
            let rho = analysis::rho_min(&experiment.dataset, experiment.lambda, &blocks)?;
            println!("rho_min = {rho:.12e}");
        }
    }
    Ok(())
}
