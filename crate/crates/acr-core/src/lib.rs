//! Adaptive coordinate regression for landmark alignment.
//!
//! The pipeline: fit a PCA shape model to training shapes ([`shape`]), score
//! each landmark's hardness by how far it sits from its model-plausible
//! "smooth" reconstruction ([`hardness`]), and train a small regressor under
//! a piecewise log/quadratic loss whose shape adapts to that hardness
//! ([`loss`], [`trainer`]). [`metrics`] provides the usual alignment
//! numbers (NME, failure rate, CED/AUC) and [`dataio`] covers .pts files,
//! manifests, and synthetic datasets with controllable occlusion noise.

pub mod dataio;
pub mod error;
pub mod hardness;
pub mod loss;
pub mod metrics;
pub mod shape;
pub mod trainer;

pub use error::{AcrError, Result};
pub use hardness::{hardness_weights, HardnessMode, HardnessWeights};
pub use loss::{acr_grad_elem, acr_loss_batch, acr_loss_elem, AcrLossConfig, LossReport};
pub use metrics::{evaluate, EvalSummary, NormalizationSpec};
pub use shape::{fit_shape_model, EigFractionSchedule, ShapeModel, ShapeSample};
pub use trainer::{train, Architecture, LossKind, RegressorModel, TrainConfig, TrainTrace};
