//! `revnm` command-line tool: collect, train, evaluate, track and compare.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use revnm::harness::commands::{run_collect, run_compare, run_evaluate, run_track, run_train};
use revnm::harness::{ControllerKind, ExperimentConfig};
use revnm::Error;

#[derive(Parser, Debug)]
#[command(name = "revnm", version, about = "Reversible neural models for hydraulic manipulator control")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug)]
struct Common {
    /// TOML experiment configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the run seed (also used for training).
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate excitation episodes and build the dataset.
    Collect(Common),
    /// Train the models on the collected dataset.
    Train(Common),
    /// Prediction accuracy of the trained models on the holdout episodes.
    Evaluate(Common),
    /// Track the reference with one controller.
    Track {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        controller: Option<String>,
    },
    /// Track with every controller and tabulate the errors.
    Compare(Common),
}

fn load(c: &Common) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &c.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = c.seed {
        cfg.run.seed = s;
        cfg.train.seed = s;
    }
    if let Some(o) = &c.out {
        cfg.run.out = o.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_kv(kv: &[(String, String)]) {
    for (k, v) in kv {
        println!("{k}={v}");
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Collect(c) => print_kv(&run_collect(&load(&c)?)?),
        Command::Train(c) => print_kv(&run_train(&load(&c)?)?),
        Command::Evaluate(c) => print_kv(&run_evaluate(&load(&c)?)?),
        Command::Track { common, controller } => {
            let cfg = load(&common)?;
            let kind = match controller {
                Some(s) => ControllerKind::parse(&s)?,
                None => cfg.controller.kind,
            };
            print_kv(&run_track(&cfg, kind)?.to_key_values());
        }
        Command::Compare(c) => {
            for m in run_compare(&load(&c)?)? {
                println!(
                    "controller={} rmse_path_m={} rmse_trajectory_m={} formula={}",
                    m.controller.name(),
                    m.rmse_path,
                    m.rmse_trajectory,
                    m.formula.name()
                );
            }
        }
    }
    Ok(())
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            eprintln!("error kind=config message=\"{}\"", one_line(&e.to_string()).replace('"', "'"));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error kind={} message=\"{}\"", e.kind(), one_line(&e.to_string()).replace('"', "'"));
            ExitCode::from(if e.is_config() { 2 } else { 3 })
        }
    }
}
