//! Flat `key = value` experiment configuration.
//!
//! One assignment per line, `#` starts a comment, every key has a default so
//! an empty file is a complete configuration. All problems are collected and
//! reported together rather than one at a time.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use acr_core::dataio::MixingKind;
use acr_core::loss::{AcrLossConfig, ContinuityConstant};
use acr_core::metrics::NormalizationSpec;
use acr_core::shape::EigFractionSchedule;
use acr_core::trainer::{Architecture, DecayMode, LossKind, TrainConfig};
use acr_core::HardnessMode;

use crate::{CliError, Result};

/// Where samples come from.
#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSource {
    /// Heteroscedastic ring dataset drawn from a seeded base model.
    Synthetic(SyntheticConfig),
    /// Landmark files listed in a manifest; features are synthesized from
    /// the annotations with the same mixing scheme the synthetic route uses.
    Manifest { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub points: usize,
    pub num_samples: usize,
    pub occlusion_fraction: f64,
    pub hard_noise: f64,
    pub easy_noise: f64,
}

/// Everything one experiment needs: data source, training hyperparameters,
/// architecture, and reporting knobs.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub label: String,
    pub dataset: DatasetSource,
    /// Head of the dataset used for training; the rest is held out.
    pub train_fraction: f64,
    /// Std of the observation noise added to mixed features.
    pub feature_noise: f64,
    pub mixing: MixingKind,
    pub hidden: usize,
    pub train: TrainConfig,
    /// Default λ values for the ablation sweep.
    pub lambda_sweep: Vec<f64>,
}

impl ExperimentConfig {
    pub fn architecture(&self) -> Architecture {
        if self.hidden == 0 {
            Architecture::Linear
        } else {
            Architecture::OneHiddenTanh {
                hidden_dim: self.hidden,
            }
        }
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        parse_config("").expect("empty config is valid")
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}

/// Raw assignments plus an error accumulator; every `take_*` records a
/// message instead of failing so the caller sees all problems at once.
struct Fields {
    raw: BTreeMap<String, (usize, String)>,
    errors: Vec<String>,
}

impl Fields {
    fn take_raw(&mut self, key: &str) -> Option<String> {
        self.raw.remove(key).map(|(_, v)| v)
    }

    fn take<T>(&mut self, key: &str, default: T) -> T
    where
        T: FromStr,
        T::Err: Display,
    {
        match self.take_raw(key) {
            None => default,
            Some(v) => match v.parse() {
                Ok(t) => t,
                Err(e) => {
                    self.errors.push(format!("{key}: cannot parse `{v}`: {e}"));
                    default
                }
            },
        }
    }

    /// Restricted-vocabulary value; `variants` maps each accepted spelling
    /// to its meaning.
    fn take_enum<T: Clone>(&mut self, key: &str, default: T, variants: &[(&str, T)]) -> T {
        match self.take_raw(key) {
            None => default,
            Some(v) => match variants.iter().find(|(name, _)| *name == v) {
                Some((_, t)) => t.clone(),
                None => {
                    let allowed: Vec<&str> = variants.iter().map(|(n, _)| *n).collect();
                    self.errors.push(format!(
                        "{key}: unknown value `{v}` (expected one of: {})",
                        allowed.join(", ")
                    ));
                    default
                }
            },
        }
    }

    fn take_list<T>(&mut self, key: &str, default: Vec<T>) -> Vec<T>
    where
        T: FromStr,
        T::Err: Display,
    {
        let Some(v) = self.take_raw(key) else {
            return default;
        };
        let mut out = Vec::new();
        for part in v.split(',') {
            match part.trim().parse() {
                Ok(t) => out.push(t),
                Err(e) => {
                    self.errors
                        .push(format!("{key}: cannot parse `{}`: {e}", part.trim()));
                    return default;
                }
            }
        }
        if out.is_empty() {
            self.errors.push(format!("{key}: empty list"));
            return default;
        }
        out
    }

    fn check(&mut self, ok: bool, message: impl Into<String>) {
        if !ok {
            self.errors.push(message.into());
        }
    }
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut raw: BTreeMap<String, (usize, String)> = BTreeMap::new();
    let mut errors: Vec<String> = Vec::new();

    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let stripped = match line.find('#') {
            Some(p) => &line[..p],
            None => line,
        };
        let stripped = stripped.trim();
        if stripped.is_empty() {
            continue;
        }
        let Some((k, v)) = stripped.split_once('=') else {
            errors.push(format!("line {line_no}: expected `key = value`, got `{stripped}`"));
            continue;
        };
        let key = k.trim();
        if key.is_empty() {
            errors.push(format!("line {line_no}: empty key"));
            continue;
        }
        if raw
            .insert(key.to_string(), (line_no, v.trim().to_string()))
            .is_some()
        {
            errors.push(format!("line {line_no}: duplicate key `{key}`"));
        }
    }

    let mut f = Fields { raw, errors };

    let label: String = f.take("label", "acr-experiment".to_string());
    f.check(!label.trim().is_empty(), "label: must be nonempty");

    let seed: u64 = f.take("seed", 0);

    let dataset_kind = f.take_enum("dataset", "synthetic", &[("synthetic", "synthetic"), ("manifest", "manifest")]);
    let manifest_path = f.take_raw("manifest");
    let points: usize = f.take("points", 10);
    let num_samples: usize = f.take("num_samples", 800);
    let occlusion_fraction: f64 = f.take("occlusion_fraction", 0.2);
    let hard_noise: f64 = f.take("hard_noise", 0.05);
    let easy_noise: f64 = f.take("easy_noise", 0.005);
    let train_fraction: f64 = f.take("train_fraction", 0.75);
    let feature_noise: f64 = f.take("feature_noise", 0.01);
    let mixing = f.take_enum(
        "mixing",
        MixingKind::Random,
        &[("random", MixingKind::Random), ("identity", MixingKind::Identity)],
    );

    f.check(points >= 2, format!("points: {points} is too few (need at least 2)"));
    f.check(
        num_samples >= 4,
        format!("num_samples: {num_samples} is too few (need at least 4)"),
    );
    f.check(
        train_fraction.is_finite() && train_fraction > 0.0 && train_fraction < 1.0,
        format!("train_fraction: {train_fraction} must lie strictly between 0 and 1"),
    );
    f.check(
        (0.0..=1.0).contains(&occlusion_fraction),
        format!("occlusion_fraction: {occlusion_fraction} must lie in [0, 1]"),
    );
    for (key, v) in [
        ("hard_noise", hard_noise),
        ("easy_noise", easy_noise),
        ("feature_noise", feature_noise),
    ] {
        f.check(
            v.is_finite() && v >= 0.0,
            format!("{key}: {v} must be finite and non-negative"),
        );
    }

    let dataset = if dataset_kind == "manifest" {
        match &manifest_path {
            Some(p) if !p.is_empty() => DatasetSource::Manifest { path: PathBuf::from(p) },
            _ => {
                f.errors
                    .push("manifest: required when dataset = manifest".to_string());
                DatasetSource::Manifest { path: PathBuf::new() }
            }
        }
    } else {
        if manifest_path.is_some() {
            f.errors
                .push("manifest: only meaningful when dataset = manifest".to_string());
        }
        DatasetSource::Synthetic(SyntheticConfig {
            points,
            num_samples,
            occlusion_fraction,
            hard_noise,
            easy_noise,
        })
    };

    let hidden: usize = f.take("hidden", 64);
    let epochs: usize = f.take("epochs", 150);
    let batch_size: usize = f.take("batch_size", 32);
    let learning_rate: f64 = f.take("learning_rate", 1e-3);
    let beta1: f64 = f.take("beta1", 0.9);
    let beta2: f64 = f.take("beta2", 0.999);
    let decay: f64 = f.take("decay", 1e-5);
    let decay_mode = f.take_enum(
        "decay_mode",
        DecayMode::WeightDecay,
        &[("weight", DecayMode::WeightDecay), ("lr-exp", DecayMode::LrExponential)],
    );
    let loss = f.take_enum("loss", LossKind::Acr, &[("acr", LossKind::Acr), ("l2", LossKind::L2)]);
    let lambda: f64 = f.take("lambda", 4.0);
    let delta_threshold: f64 = f.take("delta_threshold", 1.0);
    let continuity = f.take_enum(
        "continuity",
        ContinuityConstant::Continuous,
        &[
            ("continuous", ContinuityConstant::Continuous),
            ("phi-ln2", ContinuityConstant::PhiLn2),
        ],
    );
    let hardness_mode = f.take_enum(
        "hardness",
        HardnessMode::PerCoordinate,
        &[
            ("per-coordinate", HardnessMode::PerCoordinate),
            ("per-point", HardnessMode::PerPoint),
        ],
    );

    f.check(epochs >= 1, "epochs: must be positive");
    f.check(batch_size >= 1, "batch_size: must be positive");
    f.check(
        learning_rate.is_finite() && learning_rate > 0.0,
        format!("learning_rate: {learning_rate} must be positive"),
    );
    for (key, beta) in [("beta1", beta1), ("beta2", beta2)] {
        f.check(
            beta.is_finite() && (0.0..1.0).contains(&beta),
            format!("{key}: {beta} must lie in [0, 1)"),
        );
    }
    f.check(
        decay.is_finite() && decay >= 0.0,
        format!("decay: {decay} must be finite and non-negative"),
    );
    f.check(
        lambda.is_finite() && lambda > 0.0,
        format!("lambda: {lambda} must be positive"),
    );
    f.check(
        delta_threshold.is_finite() && delta_threshold > 0.0,
        format!("delta_threshold: {delta_threshold} must be positive"),
    );

    let schedule = parse_schedule(&mut f);
    let norm = parse_norm(&mut f, &dataset, points);

    let lambda_sweep: Vec<f64> = f.take_list("lambda_sweep", vec![1.0, 2.0, 3.0, 4.0, 5.0, 10.0]);
    for v in &lambda_sweep {
        f.check(
            v.is_finite() && *v > 0.0,
            format!("lambda_sweep: {v} must be positive"),
        );
    }

    for (key, (line_no, _)) in &f.raw {
        f.errors
            .push(format!("line {line_no}: unknown key `{key}`"));
    }

    if !f.errors.is_empty() {
        return Err(CliError::Config(f.errors));
    }

    Ok(ExperimentConfig {
        label,
        dataset,
        train_fraction,
        feature_noise,
        mixing,
        hidden,
        train: TrainConfig {
            epochs,
            batch_size,
            learning_rate,
            beta1,
            beta2,
            decay,
            decay_mode,
            loss,
            acr: AcrLossConfig {
                lambda,
                delta_threshold,
                continuity,
            },
            schedule,
            hardness_mode,
            norm,
            seed,
        },
        lambda_sweep,
    })
}

/// `schedule = 15:0.80,30:0.85,...` — epoch bound and eigenvector fraction
/// per bucket.
fn parse_schedule(f: &mut Fields) -> EigFractionSchedule {
    let default = EigFractionSchedule::default();
    let Some(v) = f.take_raw("schedule") else {
        return default;
    };
    let mut buckets = Vec::new();
    for part in v.split(',') {
        let part = part.trim();
        let Some((epoch, fraction)) = part.split_once(':') else {
            f.errors
                .push(format!("schedule: expected `epoch:fraction`, got `{part}`"));
            return default;
        };
        let epoch: usize = match epoch.trim().parse() {
            Ok(e) => e,
            Err(e) => {
                f.errors
                    .push(format!("schedule: bad epoch `{}`: {e}", epoch.trim()));
                return default;
            }
        };
        let fraction: f64 = match fraction.trim().parse() {
            Ok(x) => x,
            Err(e) => {
                f.errors
                    .push(format!("schedule: bad fraction `{}`: {e}", fraction.trim()));
                return default;
            }
        };
        buckets.push((epoch, fraction));
    }
    match EigFractionSchedule::new(buckets) {
        Ok(s) => s,
        Err(e) => {
            f.errors.push(format!("schedule: {e}"));
            default
        }
    }
}

/// Normalization factor: `norm = inter-ocular` takes one landmark index per
/// side, `norm = inter-pupil` a comma list per side. Sides default to the
/// 68-point annotation convention for manifests and to a diametrically
/// opposite pair for synthetic rings.
fn parse_norm(f: &mut Fields, dataset: &DatasetSource, points: usize) -> NormalizationSpec {
    let kind = f.take_enum(
        "norm",
        "inter-ocular",
        &[("inter-ocular", "inter-ocular"), ("inter-pupil", "inter-pupil")],
    );
    let synthetic = matches!(dataset, DatasetSource::Synthetic(_));
    let (default_left, default_right): (Vec<usize>, Vec<usize>) = if synthetic {
        (vec![0], vec![points / 2])
    } else if kind == "inter-ocular" {
        (vec![36], vec![45])
    } else {
        ((36..=41).collect(), (42..=47).collect())
    };
    let left = f.take_list("norm_left", default_left);
    let right = f.take_list("norm_right", default_right);

    if kind == "inter-ocular" {
        for (key, side) in [("norm_left", &left), ("norm_right", &right)] {
            f.check(
                side.len() == 1,
                format!("{key}: inter-ocular normalization takes exactly one index"),
            );
        }
        NormalizationSpec::InterOcular {
            left: left[0],
            right: right[0],
        }
    } else {
        NormalizationSpec::InterPupil {
            left_eye: left,
            right_eye: right,
        }
    }
}
