//! `fairaudit`: batch fairness audits of credit scoring models.

mod commands;
mod config;
mod output;
mod summary;

use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use fairaudit::fairness::Hypothesis;

use commands::{FpdpOptions, MitigateOptions, Session};
use config::ConfigArgs;
use output::Outputs;

#[derive(Parser)]
#[command(name = "fairaudit", version, about = "Chi-squared fairness audits, FPDP and mitigation for credit scoring models")]
struct Cli {
    #[command(flatten)]
    config: ConfigArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load the data and write counts, marginals and Cramér's V associations.
    Ingest,
    /// Train a preset, save the model and report AUC/PCC.
    Train,
    /// Run the five fairness tests on the model's decisions.
    Audit,
    /// Sweep features to draw fairness partial dependence curves and flag candidate variables.
    Fpdp {
        /// Features to sweep (comma separated); defaults to those the model uses.
        #[arg(long, value_delimiter = ',')]
        features: Option<Vec<String>>,
        /// Hypotheses to sweep (comma separated tags).
        #[arg(long, value_delimiter = ',', default_value = "SP,CSP,EO,EOP,PE")]
        hypotheses: Vec<Hypothesis>,
        /// Use this many evenly spaced points for numeric features with more distinct values.
        #[arg(long)]
        grid_points: Option<usize>,
    },
    /// Compare dropping and fixing each candidate variable.
    Mitigate {
        /// Hypothesis defining candidate variables and fix-value rows.
        #[arg(long, default_value = "SP")]
        hypothesis: Hypothesis,
        /// Features to consider (comma separated); defaults to those the model uses.
        #[arg(long, value_delimiter = ',')]
        features: Option<Vec<String>>,
    },
    /// Run ingest, train, audit, fpdp and mitigate into one output directory.
    Report,
}

fn run(cli: Cli) -> Result<()> {
    let cfg = cli.config.resolve()?;
    let mut out = Outputs::new(cfg.out.clone())?;
    let session = Session::load(cfg.clone())?;
    let name = match cli.command {
        Command::Ingest => {
            commands::ingest(&session, &mut out)?;
            "ingest"
        }
        Command::Train => {
            commands::train_cmd(&session, &mut out)?;
            "train"
        }
        Command::Audit => {
            let fitted = session.fit()?;
            let classes = session.risk_classes()?;
            commands::audit_cmd(&session, &fitted, &classes, &mut out)?;
            "audit"
        }
        Command::Fpdp { features, hypotheses, grid_points } => {
            let fitted = session.fit()?;
            let classes = session.risk_classes()?;
            commands::fpdp_cmd(&session, &fitted, &classes, &FpdpOptions { features, hypotheses, grid_points }, &mut out)?;
            "fpdp"
        }
        Command::Mitigate { hypothesis, features } => {
            let fitted = session.fit()?;
            let classes = session.risk_classes()?;
            commands::mitigate_cmd(&session, &fitted, &classes, &MitigateOptions { hypothesis, features }, &mut out)?;
            "mitigate"
        }
        Command::Report => {
            commands::ingest(&session, &mut out)?;
            let fitted = commands::train_cmd(&session, &mut out)?;
            let classes = session.risk_classes()?;
            commands::audit_cmd(&session, &fitted, &classes, &mut out)?;
            let fopts = FpdpOptions { features: None, hypotheses: Hypothesis::ALL.to_vec(), grid_points: None };
            commands::fpdp_cmd(&session, &fitted, &classes, &fopts, &mut out)?;
            let mopts = MitigateOptions { hypothesis: Hypothesis::SP, features: None };
            commands::mitigate_cmd(&session, &fitted, &classes, &mopts, &mut out)?;
            "report"
        }
    };
    let dir = out.finish(name, &cfg)?;
    eprintln!("wrote {}", dir.display());
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
