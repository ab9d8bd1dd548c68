//! Per-landmark hardness weights.
//!
//! A landmark that the shape model cannot explain (large gap between the
//! annotated face and its smooth reconstruction) is "hard" — likely occluded
//! or ambiguous — and receives a weight near 1; well-explained landmarks get
//! weights near 0. Weights feed the adaptive loss in [`crate::loss`].

use crate::error::{AcrError, Result};
use crate::shape::ShapeSample;

/// Below this, the largest |smooth - face| gap counts as zero and all
/// weights degenerate to 0 instead of amplifying noise.
pub const DEGENERATE_MAX: f64 = 1e-12;

/// How gaps are pooled before normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HardnessMode {
    /// Each coordinate is scored by its own absolute gap.
    #[default]
    PerCoordinate,
    /// Both coordinates of a landmark share its Euclidean gap.
    PerPoint,
}

/// Hardness weights, one per flattened coordinate, each in [0, 1]. Unless
/// the gaps were degenerate, the largest weight is exactly 1.
#[derive(Debug, Clone, PartialEq)]
pub struct HardnessWeights {
    phi: Vec<f64>,
}

impl HardnessWeights {
    pub fn new(phi: Vec<f64>) -> Result<Self> {
        if phi.is_empty() {
            return Err(AcrError::InvalidInput("hardness weights are empty".into()));
        }
        if let Some(bad) = phi.iter().find(|p| !p.is_finite() || **p < 0.0 || **p > 1.0) {
            return Err(AcrError::InvalidInput(format!(
                "hardness weight {bad} must lie in [0, 1]"
            )));
        }
        Ok(Self { phi })
    }

    /// All-zero weights, the neutral choice when no shape model is in play.
    pub fn zeros(dim: usize) -> Result<Self> {
        Self::new(vec![0.0; dim])
    }

    pub fn values(&self) -> &[f64] {
        &self.phi
    }

    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }
}

/// Per-coordinate hardness of `face` against its smooth reconstruction:
/// each |gap| divided by the largest |gap|.
pub fn hardness_weights(face: &ShapeSample, smooth: &ShapeSample) -> Result<HardnessWeights> {
    hardness_weights_mode(face, smooth, HardnessMode::PerCoordinate)
}

pub fn hardness_weights_mode(
    face: &ShapeSample,
    smooth: &ShapeSample,
    mode: HardnessMode,
) -> Result<HardnessWeights> {
    if face.dim() != smooth.dim() {
        return Err(AcrError::InvalidInput(format!(
            "face dimension {} does not match smooth dimension {}",
            face.dim(),
            smooth.dim()
        )));
    }
    let gaps: Vec<f64> = match mode {
        HardnessMode::PerCoordinate => face
            .coords()
            .iter()
            .zip(smooth.coords())
            .map(|(f, s)| (f - s).abs())
            .collect(),
        HardnessMode::PerPoint => {
            let mut out = Vec::with_capacity(face.dim());
            for p in 0..face.num_points() {
                let (fx, fy) = face.point(p);
                let (sx, sy) = smooth.point(p);
                let dist = ((fx - sx).powi(2) + (fy - sy).powi(2)).sqrt();
                out.push(dist);
                out.push(dist);
            }
            out
        }
    };
    let max = gaps.iter().fold(0.0_f64, |acc, g| acc.max(*g));
    if max < DEGENERATE_MAX {
        return HardnessWeights::new(vec![0.0; gaps.len()]);
    }
    // max / max == 1.0 exactly in IEEE arithmetic, so the hardest coordinate
    // always lands on weight 1.
    HardnessWeights::new(gaps.iter().map(|g| g / max).collect())
}
