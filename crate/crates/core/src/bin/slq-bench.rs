use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use slq_core::bench::{run, write_outputs, Experiment, ExperimentConfig};

#[derive(Parser)]
#[command(name = "slq-bench", version, about = "Convergence experiments for stochastic LQ control of the heat equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Temporal error of the Riccati operator at t = 0
    RiccatiRate(RunArgs),
    /// Strong temporal error of the closed-loop state
    TimeRate(RunArgs),
    /// Spatial error of the closed-loop control
    SpaceRate(RunArgs),
    /// Gradient descent on the open-loop control
    GdRun(RunArgs),
    /// Open-loop descent against closed-loop feedback
    Compare(RunArgs),
    /// Partitioning regression on a synthetic benchmark
    RegressDemo(RunArgs),
}

/// Every config key is also a flag; flags win over the file.
#[derive(Args)]
struct RunArgs {
    /// Config file with `key = value` lines
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed
    #[arg(long)]
    seed: Option<u64>,
    /// CSV path; the meta file and plot script go next to it
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write a gnuplot script
    #[arg(long)]
    emit_plot_script: bool,
    #[arg(long)]
    a: Option<String>,
    #[arg(long)]
    b: Option<String>,
    /// Comma-separated element counts
    #[arg(long)]
    n_elements: Option<String>,
    #[arg(long)]
    ref_elements: Option<String>,
    #[arg(long)]
    horizon: Option<String>,
    /// Comma-separated step counts
    #[arg(long)]
    steps: Option<String>,
    #[arg(long)]
    ref_steps: Option<String>,
    #[arg(long)]
    beta: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    x0: Option<String>,
    #[arg(long)]
    sigma: Option<String>,
    /// v1 or v2
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    paths: Option<String>,
    /// Step denominator, or `auto`
    #[arg(long)]
    kappa: Option<String>,
    /// Regression cells, or `auto`
    #[arg(long)]
    cells: Option<String>,
    /// Comma-separated sample sizes
    #[arg(long)]
    samples: Option<String>,
    #[arg(long)]
    max_iters: Option<String>,
    #[arg(long)]
    tol: Option<String>,
    /// Worker threads, 0 for all cores
    #[arg(long)]
    workers: Option<String>,
}

impl RunArgs {
    fn resolve(&self, experiment: Experiment) -> slq_core::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::parse(&std::fs::read_to_string(path)?, Some(experiment))?,
            None => ExperimentConfig::defaults(experiment),
        };
        let overrides = [
            ("a", &self.a),
            ("b", &self.b),
            ("n_elements", &self.n_elements),
            ("ref_elements", &self.ref_elements),
            ("horizon", &self.horizon),
            ("steps", &self.steps),
            ("ref_steps", &self.ref_steps),
            ("beta", &self.beta),
            ("alpha", &self.alpha),
            ("x0", &self.x0),
            ("sigma", &self.sigma),
            ("scheme", &self.scheme),
            ("paths", &self.paths),
            ("kappa", &self.kappa),
            ("cells", &self.cells),
            ("samples", &self.samples),
            ("max_iters", &self.max_iters),
            ("tol", &self.tol),
            ("workers", &self.workers),
        ];
        for (key, value) in overrides {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.out = Some(out.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, args) = match &cli.command {
        Command::RiccatiRate(a) => (Experiment::RiccatiRate, a),
        Command::TimeRate(a) => (Experiment::TimeRate, a),
        Command::SpaceRate(a) => (Experiment::SpaceRate, a),
        Command::GdRun(a) => (Experiment::GdRun, a),
        Command::Compare(a) => (Experiment::Compare, a),
        Command::RegressDemo(a) => (Experiment::RegressDemo, a),
    };
    let result = args.resolve(experiment).and_then(|cfg| {
        let output = run(&cfg)?;
        let paths = write_outputs(&cfg, &output, args.emit_plot_script)?;
        for (k, v) in &output.summary {
            println!("{k} = {v}");
        }
        println!("wrote {}", paths.csv.display());
        Ok(())
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("slq-bench {experiment}: {e}");
            ExitCode::FAILURE
        }
    }
}
