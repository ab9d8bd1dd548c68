//! Adaptive coordinate regression loss and the L2 baseline.
//!
//! For an absolute residual `d` and hardness weight `phi` in [0, 1], the
//! adaptive loss is
//!
//! ```text
//! loss(d) = lambda * ln(1 + d^(2 - phi))   if d <= delta_threshold
//!           d^2 + C(phi)                   otherwise
//! ```
//!
//! Hard coordinates (`phi` near 1) see a flatter exponent and therefore a
//! relatively larger gradient at small residuals, so occluded or ambiguous
//! landmarks keep pulling on the regressor instead of being drowned out by
//! easy ones. Above the threshold the loss is plain quadratic, offset by a
//! constant chosen by [`ContinuityConstant`].

use crate::error::{AcrError, Result};
use crate::hardness::HardnessWeights;
use crate::shape::ShapeSample;

/// Offset added to the quadratic branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ContinuityConstant {
    /// `C(phi) = lambda * ln(1 + t^(2 - phi)) - t^2`, which makes the two
    /// branches meet exactly at the threshold `t` for every `phi`.
    #[default]
    Continuous,
    /// `C(phi) = phi * ln 2 - 1`, the closed form sometimes quoted for a
    /// threshold of 1. Kept selectable for comparison; it leaves a jump at
    /// the threshold whenever `phi != 1` or `lambda != phi`.
    PhiLn2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcrLossConfig {
    /// Scale of the logarithmic branch. Must be positive; 4 works well.
    pub lambda: f64,
    /// Residual magnitude where the loss switches to quadratic.
    pub delta_threshold: f64,
    pub continuity: ContinuityConstant,
}

impl Default for AcrLossConfig {
    fn default() -> Self {
        Self {
            lambda: 4.0,
            delta_threshold: 1.0,
            continuity: ContinuityConstant::Continuous,
        }
    }
}

impl AcrLossConfig {
    pub fn new(lambda: f64) -> Result<Self> {
        let cfg = Self {
            lambda,
            ..Self::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.lambda.is_finite() || self.lambda <= 0.0 {
            return Err(AcrError::InvalidInput(format!(
                "lambda {} must be finite and positive",
                self.lambda
            )));
        }
        if !self.delta_threshold.is_finite() || self.delta_threshold <= 0.0 {
            return Err(AcrError::InvalidInput(format!(
                "delta threshold {} must be finite and positive",
                self.delta_threshold
            )));
        }
        Ok(())
    }

    fn continuity_offset(&self, phi: f64) -> f64 {
        match self.continuity {
            ContinuityConstant::Continuous => {
                let t = self.delta_threshold;
                self.lambda * pow_2_minus_phi(t, phi).ln_1p() - t * t
            }
            ContinuityConstant::PhiLn2 => phi * std::f64::consts::LN_2 - 1.0,
        }
    }
}

/// Which branch of the piecewise loss an element fell into.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Log,
    Quad,
}

/// Batch loss with per-element detail, sample-major: entry `i * D + m` is
/// element `m` of sample `i`, and `total` is the mean over all entries.
#[derive(Debug, Clone, PartialEq)]
pub struct LossReport {
    pub total: f64,
    pub per_element: Vec<f64>,
    pub branch_taken: Vec<Branch>,
}

/// Per-element absolute residuals `|face - pred|`.
pub fn delta(face: &ShapeSample, pred: &ShapeSample) -> Result<Vec<f64>> {
    if face.dim() != pred.dim() {
        return Err(AcrError::InvalidInput(format!(
            "face dimension {} does not match prediction dimension {}",
            face.dim(),
            pred.dim()
        )));
    }
    Ok(face
        .coords()
        .iter()
        .zip(pred.coords())
        .map(|(f, p)| (f - p).abs())
        .collect())
}

// powf is well defined down to the subnormal range, but residuals that far
// below any meaningful coordinate scale are treated as exact zeros.
fn pow_2_minus_phi(d: f64, phi: f64) -> f64 {
    if d < 1e-300 {
        0.0
    } else {
        d.powf(2.0 - phi)
    }
}

fn check_elem(d: f64, phi: f64, cfg: &AcrLossConfig) -> Result<()> {
    cfg.validate()?;
    if !d.is_finite() || d < 0.0 {
        return Err(AcrError::InvalidInput(format!(
            "residual {d} must be finite and non-negative"
        )));
    }
    if !phi.is_finite() || !(0.0..=1.0).contains(&phi) {
        return Err(AcrError::InvalidInput(format!(
            "hardness weight {phi} must lie in [0, 1]"
        )));
    }
    Ok(())
}

/// Loss for one element with residual magnitude `d`.
pub fn acr_loss_elem(d: f64, phi: f64, cfg: &AcrLossConfig) -> Result<f64> {
    check_elem(d, phi, cfg)?;
    if d <= cfg.delta_threshold {
        Ok(cfg.lambda * pow_2_minus_phi(d, phi).ln_1p())
    } else {
        Ok(d * d + cfg.continuity_offset(phi))
    }
}

/// Magnitude of the loss slope at residual `d`.
///
/// On the log branch this is `lambda (2 - phi) d / (d^phi + d^2)`; above the
/// threshold it is `2 d`. At `d = 0` the analytic limit is `lambda` when
/// `phi = 1` and 0 otherwise — hard coordinates keep a finite pull all the
/// way down to zero residual.
pub fn acr_grad_elem(d: f64, phi: f64, cfg: &AcrLossConfig) -> Result<f64> {
    check_elem(d, phi, cfg)?;
    if d == 0.0 {
        return Ok(if phi == 1.0 { cfg.lambda } else { 0.0 });
    }
    if d <= cfg.delta_threshold {
        let denom = d.powf(phi) + d * d;
        Ok(cfg.lambda * (2.0 - phi) * d / denom)
    } else {
        Ok(2.0 * d)
    }
}

/// Signed derivative of the element loss with respect to the prediction.
pub fn acr_backward_elem(target: f64, pred: f64, phi: f64, cfg: &AcrLossConfig) -> Result<f64> {
    let diff = pred - target;
    let g = acr_grad_elem(diff.abs(), phi, cfg)?;
    Ok(if diff > 0.0 {
        g
    } else if diff < 0.0 {
        -g
    } else {
        0.0
    })
}

/// Signed derivative of the squared-error element loss.
pub fn l2_backward_elem(target: f64, pred: f64) -> f64 {
    2.0 * (pred - target)
}

fn check_batch(faces: &[ShapeSample], preds: &[ShapeSample]) -> Result<()> {
    if faces.is_empty() {
        return Err(AcrError::InvalidInput("empty batch".into()));
    }
    if faces.len() != preds.len() {
        return Err(AcrError::InvalidInput(format!(
            "{} faces but {} predictions",
            faces.len(),
            preds.len()
        )));
    }
    Ok(())
}

/// Adaptive loss over a batch. `phis[i]` carries the hardness weights for
/// sample `i` and must match its dimension.
pub fn acr_loss_batch(
    faces: &[ShapeSample],
    preds: &[ShapeSample],
    phis: &[HardnessWeights],
    cfg: &AcrLossConfig,
) -> Result<LossReport> {
    check_batch(faces, preds)?;
    if phis.len() != faces.len() {
        return Err(AcrError::InvalidInput(format!(
            "{} faces but {} hardness vectors",
            faces.len(),
            phis.len()
        )));
    }
    let mut per_element = Vec::new();
    let mut branch_taken = Vec::new();
    let mut sum = 0.0;
    for ((face, pred), phi) in faces.iter().zip(preds).zip(phis) {
        if phi.len() != face.dim() {
            return Err(AcrError::InvalidInput(format!(
                "hardness vector of length {} for face of dimension {}",
                phi.len(),
                face.dim()
            )));
        }
        let ds = delta(face, pred)?;
        for (d, p) in ds.iter().zip(phi.values()) {
            let l = acr_loss_elem(*d, *p, cfg)?;
            per_element.push(l);
            branch_taken.push(if *d <= cfg.delta_threshold {
                Branch::Log
            } else {
                Branch::Quad
            });
            sum += l;
        }
    }
    Ok(LossReport {
        total: sum / per_element.len() as f64,
        per_element,
        branch_taken,
    })
}

/// Mean squared error per element, reported in the same shape as
/// [`acr_loss_batch`] for drop-in comparison.
pub fn l2_loss_batch(faces: &[ShapeSample], preds: &[ShapeSample]) -> Result<LossReport> {
    check_batch(faces, preds)?;
    let mut per_element = Vec::new();
    let mut branch_taken = Vec::new();
    let mut sum = 0.0;
    for (face, pred) in faces.iter().zip(preds) {
        for d in delta(face, pred)? {
            let l = d * d;
            per_element.push(l);
            branch_taken.push(Branch::Quad);
            sum += l;
        }
    }
    Ok(LossReport {
        total: sum / per_element.len() as f64,
        per_element,
        branch_taken,
    })
}
