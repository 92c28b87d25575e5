use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use bpn::harness::presets;
use bpn::harness::{
    memory_report, parameter_report, render_gradcheck, render_memory_report,
    render_parameter_report, run_experiment, run_gradcheck, ExperimentConfig, RunReport,
};
use bpn::methods::MethodKind;
use bpn::net::{mlp_layers, NetworkState};
use bpn::Real;

#[derive(Parser)]
#[command(
    name = "bpn",
    about = "Continual-learning experiments with beneficial-perturbation bias units"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Overrides {
    /// Replace the config's seed list.
    #[arg(long = "seed", num_args = 1.., value_name = "SEED")]
    seeds: Vec<u64>,
    /// Replace the output directory.
    #[arg(long = "out", value_name = "DIR")]
    out: Option<PathBuf>,
    /// Replace the task count.
    #[arg(long = "tasks", value_name = "N")]
    tasks: Option<usize>,
    /// Keep only these methods from the config.
    #[arg(long = "method", num_args = 1.., value_name = "KIND")]
    methods: Vec<MethodKind>,
}

impl Overrides {
    fn apply(&self, cfg: &mut ExperimentConfig) -> anyhow::Result<()> {
        if !self.seeds.is_empty() {
            cfg.seeds = self.seeds.clone();
        }
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        if let Some(tasks) = self.tasks {
            cfg.n_tasks = tasks;
        }
        if !self.methods.is_empty() {
            cfg.methods.retain(|m| self.methods.contains(&m.kind));
            if cfg.methods.is_empty() {
                anyhow::bail!("--method filtered out every configured method");
            }
        }
        Ok(())
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a TOML config file.
    Run {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run the 2-D cluster experiment with its stock configuration.
    Toy2d {
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Check every analytic gradient against central finite differences.
    Gradcheck {
        /// Number of random network draws.
        #[arg(long, default_value_t = 50)]
        seeds: usize,
    },
    /// Print storage and parameter accounting for an architecture.
    Report {
        /// Hidden layer widths.
        #[arg(long, value_delimiter = ',', default_value = "300,300,300,300,300")]
        hidden: Vec<usize>,
        #[arg(long, default_value_t = 784)]
        input: usize,
        #[arg(long, default_value_t = 10)]
        output: usize,
        #[arg(long, default_value_t = 5)]
        tasks: usize,
    },
}

fn finish(report: &RunReport) -> ExitCode {
    for cell in &report.cells {
        match &cell.error {
            None => println!("[ok]   {} seed {}", cell.method, cell.seed),
            Some(e) => println!("[FAIL] {} seed {}: {e}", cell.method, cell.seed),
        }
    }
    println!("outputs in {}", report.output_dir.display());
    if report.all_ok() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn run() -> anyhow::Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, overrides } => {
            let mut cfg = ExperimentConfig::load(&config)
                .with_context(|| format!("loading {}", config.display()))?;
            overrides.apply(&mut cfg)?;
            let report = run_experiment(&cfg)?;
            Ok(finish(&report))
        }
        Command::Toy2d { overrides } => {
            let mut cfg = presets::toy2d(PathBuf::from("runs/toy2d"));
            overrides.apply(&mut cfg)?;
            let report = run_experiment(&cfg)?;
            Ok(finish(&report))
        }
        Command::Gradcheck { seeds } => {
            let report = run_gradcheck(seeds, 1e-4);
            print!("{}", render_gradcheck(&report));
            Ok(if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Report {
            hidden,
            input,
            output,
            tasks,
        } => {
            let net = NetworkState::<Real>::zeros(mlp_layers(input, &hidden, output))?;
            print!("{}", render_parameter_report(&parameter_report(&net)));
            println!();
            for kind in MethodKind::ALL {
                print!("{}", render_memory_report(&memory_report(&net, kind, tasks)));
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
