//! The four harness operations. Each writes its artifacts under an output
//! directory and returns the paths and headline numbers for callers that
//! want them programmatically.

use std::fs;
use std::path::{Path, PathBuf};

use acr_core::metrics::EvalSummary;
use acr_core::shape::fit_shape_model;
use acr_core::trainer::{eval_nme, eval_summary, train, LossKind, RegressorModel};
use acr_core::AcrError;

use crate::config::ExperimentConfig;
use crate::dataset;
use crate::svg::ced_svg;
use crate::{CliError, Result};

pub struct TrainArtifacts {
    pub trace_path: PathBuf,
    pub model_path: PathBuf,
    pub summary_path: PathBuf,
    pub train_nme: f64,
    pub test_summary: EvalSummary,
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

/// Fit a shape model to every sample the config describes and serialize it.
pub fn cmd_fit_model(cfg: &ExperimentConfig, out_dir: &Path) -> Result<PathBuf> {
    let targets = dataset::all_targets(cfg)?;
    let model = fit_shape_model(&targets)?;
    ensure_dir(out_dir)?;
    let path = out_dir.join("shape_model.txt");
    model.save(&path)?;
    println!(
        "shape model: dim {}, eigenvectors {}, fit on {} samples",
        model.dim(),
        model.num_eigs(),
        model.num_training_samples()
    );
    let top: Vec<String> = model
        .eigenvalues()
        .iter()
        .take(5)
        .map(|v| format!("{v:.6e}"))
        .collect();
    println!("leading eigenvalues: {}", top.join(" "));
    Ok(path)
}

/// Train on the config's train split, evaluate on the held-out split, and
/// write `trace.csv`, `model.txt`, and `summary.csv`.
pub fn cmd_train(cfg: &ExperimentConfig, out_dir: &Path) -> Result<TrainArtifacts> {
    cfg.train.validate()?;
    let prep = dataset::prepare(cfg)?;
    let init = RegressorModel::init(
        cfg.architecture(),
        prep.input_dim(),
        prep.output_dim(),
        cfg.train.seed,
    )?;
    let trace = train(&prep.train, Some(&prep.test), &init, &cfg.train, &prep.fitted)?;

    ensure_dir(out_dir)?;
    let trace_path = out_dir.join("trace.csv");
    fs::write(&trace_path, trace.to_csv())?;
    let model_path = out_dir.join("model.txt");
    trace.final_model.save(&model_path)?;

    let train_nme = eval_nme(&trace.final_model, &prep.train, &cfg.train.norm)?;
    let test_summary = eval_summary(&trace.final_model, &prep.test, &cfg.train.norm)?;
    let summary_path = out_dir.join("summary.csv");
    fs::write(&summary_path, test_summary.summary_csv())?;

    let loss_name = match cfg.train.loss {
        LossKind::Acr => "acr",
        LossKind::L2 => "l2",
    };
    println!(
        "{}: loss {loss_name}, seed {}, train nme {:.6}, test nme {:.6}, fr {:.4}, auc {:.4}",
        cfg.label, cfg.train.seed, train_nme, test_summary.nme, test_summary.fr, test_summary.auc
    );
    Ok(TrainArtifacts {
        trace_path,
        model_path,
        summary_path,
        train_nme,
        test_summary,
    })
}

/// One training run per λ (shared seed and data), collected into
/// `ablation.csv` sorted by λ. Duplicates are dropped with a warning.
pub fn cmd_ablate_lambda(
    cfg: &ExperimentConfig,
    lambdas: &[f64],
    out_dir: &Path,
) -> Result<PathBuf> {
    if lambdas.is_empty() {
        return Err(CliError::config("lambda sweep: no values"));
    }
    for v in lambdas {
        if !v.is_finite() || *v <= 0.0 {
            return Err(CliError::config(format!(
                "lambda sweep: {v} must be positive"
            )));
        }
    }
    let mut sweep = lambdas.to_vec();
    sweep.sort_by(|a, b| a.partial_cmp(b).expect("finite by validation"));
    sweep.dedup();
    if sweep.len() < lambdas.len() {
        eprintln!(
            "warning: dropped {} duplicate lambda value(s)",
            lambdas.len() - sweep.len()
        );
    }

    ensure_dir(out_dir)?;
    let mut rows = String::from("lambda,train_nme,test_nme\n");
    for &lambda in &sweep {
        let mut run_cfg = cfg.clone();
        run_cfg.train.loss = LossKind::Acr;
        run_cfg.train.acr.lambda = lambda;
        run_cfg.label = format!("{} lambda={lambda}", cfg.label);
        let sub = out_dir.join(format!("lambda_{lambda}"));
        let artifacts = cmd_train(&run_cfg, &sub)?;
        rows.push_str(&format!(
            "{lambda},{},{}\n",
            artifacts.train_nme, artifacts.test_summary.nme
        ));
    }
    let path = out_dir.join("ablation.csv");
    fs::write(&path, rows)?;
    Ok(path)
}

/// Evaluate a serialized regressor on the config's held-out split; write
/// `summary.csv`, `ced.csv`, and a `ced.svg` plot of the curve.
pub fn cmd_eval(model_path: &Path, cfg: &ExperimentConfig, out_dir: &Path) -> Result<EvalSummary> {
    let model = RegressorModel::load(model_path)?;
    let prep = dataset::prepare(cfg)?;
    if model.input_dim() != prep.input_dim() || model.output_dim() != prep.output_dim() {
        return Err(AcrError::InvalidInput(format!(
            "model maps {} -> {} but the dataset needs {} -> {}",
            model.input_dim(),
            model.output_dim(),
            prep.input_dim(),
            prep.output_dim()
        ))
        .into());
    }
    let summary = eval_summary(&model, &prep.test, &cfg.train.norm)?;

    ensure_dir(out_dir)?;
    fs::write(out_dir.join("summary.csv"), summary.summary_csv())?;
    fs::write(out_dir.join("ced.csv"), summary.ced_csv())?;
    fs::write(out_dir.join("ced.svg"), ced_svg(&summary.ced))?;
    println!(
        "eval: {} test samples, nme {:.6}, fr {:.4}, auc {:.4}",
        prep.test.len(),
        summary.nme,
        summary.fr,
        summary.auc
    );
    Ok(summary)
}
