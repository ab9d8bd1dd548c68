//! Turns a configuration into train/test splits plus the shape model the
//! trainer's hardness weighting runs on.

use acr_core::dataio::{
    features_from_targets, generate_synthetic, load_manifest_faces, normalize,
    synthetic_base_model, SyntheticDatasetSpec,
};
use acr_core::shape::fit_shape_model;
use acr_core::trainer::Sample;
use acr_core::{AcrError, ShapeModel, ShapeSample};

use crate::config::{DatasetSource, ExperimentConfig};
use crate::Result;

pub struct PreparedExperiment {
    pub train: Vec<Sample>,
    pub test: Vec<Sample>,
    /// Shape model refit on the training targets — the deployable pipeline
    /// only ever sees the annotations, never the clean generator.
    pub fitted: ShapeModel,
}

impl PreparedExperiment {
    pub fn input_dim(&self) -> usize {
        self.train[0].0.len()
    }

    pub fn output_dim(&self) -> usize {
        self.train[0].1.dim()
    }
}

/// Every annotated sample the config describes, in dataset order.
pub fn all_samples(cfg: &ExperimentConfig) -> Result<Vec<Sample>> {
    match &cfg.dataset {
        DatasetSource::Synthetic(syn) => {
            let base = synthetic_base_model(syn.points, cfg.train.seed)?;
            let spec = SyntheticDatasetSpec::heteroscedastic(
                syn.num_samples,
                syn.points,
                syn.occlusion_fraction,
                syn.hard_noise,
                syn.easy_noise,
                cfg.feature_noise,
                cfg.mixing,
                cfg.train.seed,
            )?;
            Ok(generate_synthetic(&base, &spec)?)
        }
        DatasetSource::Manifest { path } => {
            let faces = load_manifest_faces(path)?;
            let mut targets = Vec::with_capacity(faces.len());
            let mut clipped = 0usize;
            for face in &faces {
                let (sample, c) = normalize(face)?;
                clipped += c;
                targets.push(sample);
            }
            if clipped > 0 {
                eprintln!("warning: {clipped} coordinates fell outside their image and were clipped");
            }
            Ok(features_from_targets(
                &targets,
                cfg.mixing,
                cfg.feature_noise,
                cfg.train.seed,
            )?)
        }
    }
}

pub fn all_targets(cfg: &ExperimentConfig) -> Result<Vec<ShapeSample>> {
    Ok(all_samples(cfg)?.into_iter().map(|(_, t)| t).collect())
}

/// Split per `train_fraction`, then fit the shape model on the train side.
pub fn prepare(cfg: &ExperimentConfig) -> Result<PreparedExperiment> {
    let data = all_samples(cfg)?;
    let n = data.len();
    if n < 3 {
        return Err(AcrError::InsufficientData(format!(
            "{n} samples cannot form a train/test split"
        ))
        .into());
    }
    let split = ((cfg.train_fraction * n as f64).round() as usize).clamp(2, n - 1);
    let (train, test) = data.split_at(split);
    let targets: Vec<ShapeSample> = train.iter().map(|(_, t)| t.clone()).collect();
    let fitted = fit_shape_model(&targets)?;
    Ok(PreparedExperiment {
        train: train.to_vec(),
        test: test.to_vec(),
        fitted,
    })
}
