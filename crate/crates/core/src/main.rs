use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use symreg_core::experiment::{bench_table, config_files, extract, gen_data, run_experiment, BenchRow, ExperimentConfig, Overrides};
use symreg_core::Error;

#[derive(Parser)]
#[command(name = "symreg", version, about = "Sample-and-reinforce symbolic regression")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(clap::Args, Clone)]
struct RunFlags {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    max_epochs: Option<usize>,
    /// Run trials concurrently instead of one after another.
    #[arg(long)]
    parallel_trials: bool,
}

impl RunFlags {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            trials: self.trials,
            out: self.out.clone(),
            max_epochs: self.max_epochs,
            parallel_trials: self.parallel_trials,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run all trials of one config.
    Run {
        config: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Print the most likely expression of a saved network.
    Extract { weights: PathBuf },
    /// Run every config in a directory and print a summary table.
    Bench {
        dir: PathBuf,
        /// Include long-running configs (pattern recognition).
        #[arg(long)]
        extended: bool,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Write a CSV dataset for a config's target.
    GenData {
        config: PathBuf,
        #[arg(long, default_value_t = 1000)]
        rows: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// Output file (stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}

fn dispatch(cmd: Command) -> Result<(), Error> {
    match cmd {
        Command::Run { config, flags } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            cfg.apply(&flags.overrides());
            let report = run_experiment(&cfg)?;
            print!("{}", report.to_csv());
            println!(
                "eta = {} median_Tc = {}",
                report.eta_fraction(),
                report.median_tc.map_or("-".into(), |t| t.to_string())
            );
            if let Some(acc) = report.median_accuracy {
                println!("median accuracy = {acc:.4}");
            }
        }
        Command::Extract { weights } => {
            for (o, e) in extract(&weights)?.iter().enumerate() {
                println!("y{o} = {e}");
            }
        }
        Command::Bench { dir, extended, flags } => {
            let mut rows = Vec::new();
            // validate everything before spending time on training
            let mut configs = Vec::new();
            for path in config_files(&dir)? {
                let mut cfg = ExperimentConfig::load(&path)?;
                if cfg.experiment.extended && !extended {
                    continue;
                }
                cfg.apply(&flags.overrides());
                if let Some(base) = &flags.out {
                    cfg.experiment.out = Some(base.join(&cfg.name));
                }
                cfg.validate()?;
                configs.push(cfg);
            }
            for cfg in configs {
                eprintln!("running {}", cfg.name);
                let report = run_experiment(&cfg)?;
                rows.push(BenchRow {
                    name: cfg.name.clone(),
                    report,
                    reference_eta: cfg.experiment.reference_eta.clone(),
                    reference_tc: cfg.experiment.reference_tc,
                });
            }
            print!("{}", bench_table(&rows));
        }
        Command::GenData { config, rows, seed, out } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.experiment.seed = s;
            }
            let d = gen_data(&cfg, rows)?;
            match out {
                Some(p) => d.write_csv(p)?,
                None => print!("{}", d.to_csv()),
            }
        }
    }
    Ok(())
}
