use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use acr_cli::commands::{cmd_ablate_lambda, cmd_eval, cmd_fit_model, cmd_train};
use acr_cli::config::{load_config, ExperimentConfig};
use acr_cli::{CliError, Result};
use acr_core::trainer::LossKind;

/// Landmark-regression experiment harness: statistical shape models, an
/// adaptive training loss, and CSV/SVG report artifacts.
#[derive(Parser)]
#[command(name = "acr", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Experiment configuration file (`key = value` lines); defaults apply
    /// when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory artifacts are written to.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config's training loss.
    #[arg(long, value_parser = ["acr", "l2"])]
    loss: Option<String>,
    /// Overrides the config's adaptive-loss lambda.
    #[arg(long)]
    lambda: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a shape model to the configured dataset and serialize it.
    FitModel(CommonArgs),
    /// Train a regressor and write trace, model, and summary artifacts.
    Train(CommonArgs),
    /// Rerun training across a list of lambda values.
    AblateLambda {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated lambda values; defaults to the config's sweep.
        #[arg(long)]
        lambdas: Option<String>,
    },
    /// Evaluate a serialized regressor on the configured held-out split.
    Eval {
        #[command(flatten)]
        common: CommonArgs,
        /// Serialized regressor to evaluate.
        #[arg(long)]
        model: PathBuf,
    },
}

fn experiment_config(common: &CommonArgs) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => load_config(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.train.seed = seed;
    }
    if let Some(loss) = &common.loss {
        cfg.train.loss = match loss.as_str() {
            "acr" => LossKind::Acr,
            "l2" => LossKind::L2,
            other => return Err(CliError::config(format!("loss: unknown value `{other}`"))),
        };
    }
    if let Some(lambda) = common.lambda {
        if !lambda.is_finite() || lambda <= 0.0 {
            return Err(CliError::config(format!("lambda: {lambda} must be positive")));
        }
        cfg.train.acr.lambda = lambda;
    }
    Ok(cfg)
}

fn parse_lambda_list(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for part in text.split(',') {
        let part = part.trim();
        let v: f64 = part
            .parse()
            .map_err(|e| CliError::config(format!("lambdas: cannot parse `{part}`: {e}")))?;
        out.push(v);
    }
    Ok(out)
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::FitModel(common) => {
            let cfg = experiment_config(common)?;
            cmd_fit_model(&cfg, &common.out)?;
        }
        Command::Train(common) => {
            let cfg = experiment_config(common)?;
            cmd_train(&cfg, &common.out)?;
        }
        Command::AblateLambda { common, lambdas } => {
            let cfg = experiment_config(common)?;
            let sweep = match lambdas {
                Some(text) => parse_lambda_list(text)?,
                None => cfg.lambda_sweep.clone(),
            };
            let path = cmd_ablate_lambda(&cfg, &sweep, &common.out)?;
            println!("ablation table: {}", path.display());
        }
        Command::Eval { common, model } => {
            let cfg = experiment_config(common)?;
            cmd_eval(model, &cfg, &common.out)?;
        }
    }
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprint!("error: {e}");
        eprintln!();
        std::process::exit(e.exit_code());
    }
}
