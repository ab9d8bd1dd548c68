//! Alignment metrics: normalized mean error, failure rate, and the
//! cumulative error distribution with its area under the curve.

use crate::error::{AcrError, Result};
use crate::shape::ShapeSample;

/// A normalized error above this counts as a failed image.
pub const FAILURE_THRESHOLD: f64 = 0.1;

/// Number of thresholds the cumulative error distribution is sampled at,
/// evenly spaced over [0, FAILURE_THRESHOLD].
pub const CED_SAMPLES: usize = 1000;

/// Mean Euclidean distance between corresponding landmarks.
pub fn mean_point_error(gt: &ShapeSample, pred: &ShapeSample) -> Result<f64> {
    if gt.dim() != pred.dim() {
        return Err(AcrError::InvalidInput(format!(
            "ground truth dimension {} does not match prediction dimension {}",
            gt.dim(),
            pred.dim()
        )));
    }
    let mut sum = 0.0;
    for p in 0..gt.num_points() {
        let (gx, gy) = gt.point(p);
        let (px, py) = pred.point(p);
        sum += ((gx - px).powi(2) + (gy - py).powi(2)).sqrt();
    }
    Ok(sum / gt.num_points() as f64)
}

/// Per-image scale the mean point error is divided by.
#[derive(Debug, Clone, PartialEq)]
pub enum NormalizationSpec {
    /// Distance between two outer-eye-corner landmarks.
    InterOcular { left: usize, right: usize },
    /// Distance between the centroids of two eye landmark groups.
    InterPupil {
        left_eye: Vec<usize>,
        right_eye: Vec<usize>,
    },
}

impl NormalizationSpec {
    /// Outer eye corners of the 68-landmark annotation layout.
    pub fn inter_ocular_68() -> Self {
        Self::InterOcular { left: 36, right: 45 }
    }

    /// Six-landmark eye rings of the 68-landmark layout.
    pub fn inter_pupil_68() -> Self {
        Self::InterPupil {
            left_eye: (36..=41).collect(),
            right_eye: (42..=47).collect(),
        }
    }

    pub fn factor(&self, gt: &ShapeSample) -> Result<f64> {
        let centroid = |idxs: &[usize]| -> Result<(f64, f64)> {
            if idxs.is_empty() {
                return Err(AcrError::InvalidInput(
                    "normalization needs at least one landmark per eye".into(),
                ));
            }
            let (mut cx, mut cy) = (0.0, 0.0);
            for &i in idxs {
                if i >= gt.num_points() {
                    return Err(AcrError::InvalidInput(format!(
                        "normalization landmark {i} out of range for {} points",
                        gt.num_points()
                    )));
                }
                let (x, y) = gt.point(i);
                cx += x;
                cy += y;
            }
            let n = idxs.len() as f64;
            Ok((cx / n, cy / n))
        };
        let ((lx, ly), (rx, ry)) = match self {
            Self::InterOcular { left, right } => {
                (centroid(&[*left])?, centroid(&[*right])?)
            }
            Self::InterPupil { left_eye, right_eye } => {
                (centroid(left_eye)?, centroid(right_eye)?)
            }
        };
        let dist = ((lx - rx).powi(2) + (ly - ry).powi(2)).sqrt();
        if dist < 1e-12 {
            return Err(AcrError::DegenerateGeometry(format!(
                "normalization distance {dist} is effectively zero"
            )));
        }
        Ok(dist)
    }
}

impl Default for NormalizationSpec {
    fn default() -> Self {
        Self::inter_ocular_68()
    }
}

/// Normalized per-image errors: mean point error over the ground-truth
/// normalization factor, one entry per image.
pub fn normalized_errors(
    gts: &[ShapeSample],
    preds: &[ShapeSample],
    norm: &NormalizationSpec,
) -> Result<Vec<f64>> {
    if gts.is_empty() {
        return Err(AcrError::InsufficientData("no images to evaluate".into()));
    }
    if gts.len() != preds.len() {
        return Err(AcrError::InvalidInput(format!(
            "{} ground truths but {} predictions",
            gts.len(),
            preds.len()
        )));
    }
    gts.iter()
        .zip(preds)
        .map(|(gt, pred)| Ok(mean_point_error(gt, pred)? / norm.factor(gt)?))
        .collect()
}

/// Evaluation rollup over a set of images.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalSummary {
    /// Mean of the normalized per-image errors.
    pub nme: f64,
    /// Fraction of images with normalized error above [`FAILURE_THRESHOLD`].
    pub fr: f64,
    /// Area under the cumulative error distribution, normalized to [0, 1].
    pub auc: f64,
    /// `(threshold, fraction of images at or below it)` at [`CED_SAMPLES`]
    /// evenly spaced thresholds from 0 to [`FAILURE_THRESHOLD`].
    pub ced: Vec<(f64, f64)>,
}

pub fn evaluate(
    gts: &[ShapeSample],
    preds: &[ShapeSample],
    norm: &NormalizationSpec,
) -> Result<EvalSummary> {
    let errors = normalized_errors(gts, preds, norm)?;
    let m = errors.len() as f64;
    let nme = errors.iter().sum::<f64>() / m;
    let fr = errors.iter().filter(|e| **e > FAILURE_THRESHOLD).count() as f64 / m;

    let mut sorted = errors;
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut ced = Vec::with_capacity(CED_SAMPLES);
    let mut below = 0usize;
    for i in 0..CED_SAMPLES {
        let t = FAILURE_THRESHOLD * i as f64 / (CED_SAMPLES - 1) as f64;
        while below < sorted.len() && sorted[below] <= t {
            below += 1;
        }
        ced.push((t, below as f64 / m));
    }

    let mut area = 0.0;
    for w in ced.windows(2) {
        let (t0, f0) = w[0];
        let (t1, f1) = w[1];
        area += (t1 - t0) * (f0 + f1) / 2.0;
    }
    let auc = area / FAILURE_THRESHOLD;

    Ok(EvalSummary { nme, fr, auc, ced })
}

impl EvalSummary {
    pub fn summary_csv(&self) -> String {
        format!("nme,fr,auc\n{},{},{}\n", self.nme, self.fr, self.auc)
    }

    pub fn ced_csv(&self) -> String {
        let mut out = String::from("threshold,fraction\n");
        for (t, f) in &self.ced {
            out.push_str(&format!("{t},{f}\n"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(coords: &[f64]) -> ShapeSample {
        ShapeSample::new(coords.to_vec()).unwrap()
    }

    #[test]
    fn mean_point_error_averages_distances() {
        let gt = sample(&[0.0, 0.0, 3.0, 4.0]);
        let pred = sample(&[0.0, 0.0, 0.0, 0.0]);
        assert_eq!(mean_point_error(&gt, &pred).unwrap(), 2.5);
    }

    #[test]
    fn inter_ocular_factor_is_point_distance() {
        let gt = sample(&[1.0, 2.0, 4.0, 6.0]);
        let norm = NormalizationSpec::InterOcular { left: 0, right: 1 };
        assert_eq!(norm.factor(&gt).unwrap(), 5.0);
    }

    #[test]
    fn inter_pupil_factor_uses_centroids() {
        // Left eye centroid (0, 0), right eye centroid (6, 8) -> distance 10.
        let gt = sample(&[-1.0, 0.0, 1.0, 0.0, 5.0, 8.0, 7.0, 8.0]);
        let norm = NormalizationSpec::InterPupil {
            left_eye: vec![0, 1],
            right_eye: vec![2, 3],
        };
        assert_eq!(norm.factor(&gt).unwrap(), 10.0);
    }

    #[test]
    fn coincident_eyes_are_degenerate() {
        let gt = sample(&[1.0, 1.0, 1.0, 1.0]);
        let norm = NormalizationSpec::InterOcular { left: 0, right: 1 };
        assert!(matches!(
            norm.factor(&gt),
            Err(AcrError::DegenerateGeometry(_))
        ));
    }

    #[test]
    fn out_of_range_landmark_is_rejected() {
        let gt = sample(&[0.0, 0.0, 1.0, 1.0]);
        let norm = NormalizationSpec::InterOcular { left: 0, right: 7 };
        assert!(norm.factor(&gt).is_err());
    }

    fn toy_eval(errors_scaled: &[f64]) -> EvalSummary {
        // Build images whose normalized error is exactly errors_scaled[i]:
        // normalization distance 1, single extra point offset by the error.
        let mut gts = Vec::new();
        let mut preds = Vec::new();
        for &e in errors_scaled {
            let gt = sample(&[0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
            // Each of the 4 points contributes dist/4; put 4e on one point.
            let pred = sample(&[0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 4.0 * e, 0.0]);
            gts.push(gt);
            preds.push(pred);
        }
        evaluate(
            &gts,
            &preds,
            &NormalizationSpec::InterOcular { left: 0, right: 1 },
        )
        .unwrap()
    }

    #[test]
    fn failure_rate_counts_strictly_above_threshold() {
        let summary = toy_eval(&[0.05, 0.1, 0.2, 0.3]);
        // 0.1 is not a failure, 0.2 and 0.3 are.
        assert!((summary.fr - 0.5).abs() < 1e-15);
        let last = summary.ced.last().unwrap();
        assert_eq!(last.0, FAILURE_THRESHOLD);
        assert!((summary.fr + last.1 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ced_has_expected_shape() {
        let summary = toy_eval(&[0.02, 0.04, 0.5]);
        assert_eq!(summary.ced.len(), CED_SAMPLES);
        assert_eq!(summary.ced[0].0, 0.0);
        let fractions: Vec<f64> = summary.ced.iter().map(|(_, f)| *f).collect();
        assert!(fractions.windows(2).all(|w| w[0] <= w[1]));
        assert!(fractions.iter().all(|f| (0.0..=1.0).contains(f)));
    }

    #[test]
    fn perfect_predictions_have_unit_auc() {
        let gts = vec![sample(&[0.0, 0.0, 1.0, 0.0])];
        let norm = NormalizationSpec::InterOcular { left: 0, right: 1 };
        let summary = evaluate(&gts, &gts, &norm).unwrap();
        assert_eq!(summary.nme, 0.0);
        assert_eq!(summary.fr, 0.0);
        assert!((summary.auc - 1.0).abs() < 1e-12);
    }

    #[test]
    fn csv_outputs_are_well_formed() {
        let summary = toy_eval(&[0.05, 0.15]);
        let s = summary.summary_csv();
        let mut lines = s.lines();
        assert_eq!(lines.next(), Some("nme,fr,auc"));
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row.len(), 3);
        for v in row {
            v.parse::<f64>().unwrap();
        }
        let c = summary.ced_csv();
        assert_eq!(c.lines().count(), CED_SAMPLES + 1);
        assert_eq!(c.lines().next(), Some("threshold,fraction"));
    }

    #[test]
    fn empty_evaluation_is_an_error() {
        let norm = NormalizationSpec::default();
        assert!(matches!(
            evaluate(&[], &[], &norm),
            Err(AcrError::InsufficientData(_))
        ));
    }
}
