//! Landmark file IO (.pts and manifests) and synthetic dataset generation.
//!
//! The synthetic task draws plausible faces from a shape model, perturbs a
//! chosen subset of landmarks with large "occlusion" noise and the rest with
//! small noise, and derives regression features by mixing the noisy target
//! through a fixed random orthogonal map plus observation noise. Because the
//! heavy noise lives outside the model's leading eigenspace, the smooth-face
//! residual exposes exactly the occluded landmarks.

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{AcrError, Result};
use crate::shape::{ShapeModel, ShapeSample};

/// Landmarks as annotated on an image, in pixel coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedFace {
    pub image_id: String,
    pub raw_points: Vec<(f64, f64)>,
    pub image_width: f64,
    pub image_height: f64,
}

impl AnnotatedFace {
    pub fn new(
        image_id: String,
        raw_points: Vec<(f64, f64)>,
        image_width: f64,
        image_height: f64,
    ) -> Result<Self> {
        if image_id.is_empty() {
            return Err(AcrError::InvalidInput("empty image id".into()));
        }
        if raw_points.len() < 2 {
            return Err(AcrError::InvalidInput(format!(
                "face '{image_id}' has {} landmarks, need at least 2",
                raw_points.len()
            )));
        }
        if raw_points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(AcrError::InvalidInput(format!(
                "face '{image_id}' has non-finite landmarks"
            )));
        }
        for (label, v) in [("width", image_width), ("height", image_height)] {
            if !v.is_finite() || v <= 0.0 {
                return Err(AcrError::InvalidInput(format!(
                    "face '{image_id}' has invalid image {label} {v}"
                )));
            }
        }
        Ok(Self {
            image_id,
            raw_points,
            image_width,
            image_height,
        })
    }
}

/// Scale pixel landmarks into the unit square, clipping anything that falls
/// outside. Returns the normalized shape and how many coordinates were
/// clipped.
pub fn normalize(face: &AnnotatedFace) -> Result<(ShapeSample, usize)> {
    let mut coords = Vec::with_capacity(face.raw_points.len() * 2);
    let mut clipped = 0;
    for &(x, y) in &face.raw_points {
        for v in [x / face.image_width, y / face.image_height] {
            if !(0.0..=1.0).contains(&v) {
                clipped += 1;
            }
            coords.push(v.clamp(0.0, 1.0));
        }
    }
    Ok((ShapeSample::new(coords)?, clipped))
}

fn strip_eol(line: &str) -> &str {
    line.trim_end()
}

/// Parse a .pts landmark file:
///
/// ```text
/// version: 1
/// n_points: 68
/// {
/// x y
/// ...
/// }
/// ```
///
/// Tolerates CRLF line endings, trailing whitespace, and blank lines.
/// A mismatch between `n_points` and the rows inside the braces is an error
/// naming both counts.
pub fn parse_pts(text: &str) -> Result<Vec<(f64, f64)>> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, strip_eol(l)))
        .filter(|(_, l)| !l.is_empty());

    let (line_no, version) = lines
        .next()
        .ok_or_else(|| AcrError::Parse { line: 1, message: "empty .pts file".into() })?;
    let version_value = version
        .strip_prefix("version:")
        .map(str::trim)
        .ok_or_else(|| AcrError::Parse {
            line: line_no,
            message: format!("expected 'version: 1', found '{version}'"),
        })?;
    if version_value != "1" {
        return Err(AcrError::Parse {
            line: line_no,
            message: format!("unsupported .pts version '{version_value}'"),
        });
    }

    let (line_no, count_line) = lines.next().ok_or_else(|| AcrError::Parse {
        line: line_no + 1,
        message: "missing n_points line".into(),
    })?;
    let n_points: usize = count_line
        .strip_prefix("n_points:")
        .map(str::trim)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| AcrError::Parse {
            line: line_no,
            message: format!("expected 'n_points: <count>', found '{count_line}'"),
        })?;

    let (line_no, brace) = lines.next().ok_or_else(|| AcrError::Parse {
        line: line_no + 1,
        message: "missing opening brace".into(),
    })?;
    if brace != "{" {
        return Err(AcrError::Parse {
            line: line_no,
            message: format!("expected '{{', found '{brace}'"),
        });
    }

    let mut points = Vec::with_capacity(n_points);
    let mut last_line = line_no;
    for (line_no, row) in lines.by_ref() {
        last_line = line_no;
        if row == "}" {
            if points.len() != n_points {
                return Err(AcrError::Parse {
                    line: line_no,
                    message: format!(
                        "n_points says {n_points} landmarks but the block contains {}",
                        points.len()
                    ),
                });
            }
            if let Some((line_no, extra)) = lines.next() {
                return Err(AcrError::Parse {
                    line: line_no,
                    message: format!("unexpected content after closing brace: '{extra}'"),
                });
            }
            return Ok(points);
        }
        if points.len() == n_points {
            return Err(AcrError::Parse {
                line: line_no,
                message: format!(
                    "n_points says {n_points} landmarks but the block contains more"
                ),
            });
        }
        let fields: Vec<&str> = row.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(AcrError::Parse {
                line: line_no,
                message: format!("expected 'x y', found '{row}'"),
            });
        }
        let mut xy = [0.0; 2];
        for (slot, field) in xy.iter_mut().zip(&fields) {
            *slot = field.parse().map_err(|_| AcrError::Parse {
                line: line_no,
                message: format!("'{field}' is not a coordinate"),
            })?;
        }
        points.push((xy[0], xy[1]));
    }
    Err(AcrError::Parse {
        line: last_line + 1,
        message: "missing closing brace".into(),
    })
}

/// Write landmarks in .pts format with six decimal places.
pub fn serialize_pts(points: &[(f64, f64)]) -> String {
    let mut out = format!("version: 1\nn_points: {}\n{{\n", points.len());
    for (x, y) in points {
        out.push_str(&format!("{x:.6} {y:.6}\n"));
    }
    out.push_str("}\n");
    out
}

/// One row of a dataset manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub image_id: String,
    pub pts_path: PathBuf,
    pub width: f64,
    pub height: f64,
}

/// Parse a manifest CSV with header `image_id,pts_path,width,height`.
/// Paths may not contain commas.
pub fn parse_manifest(text: &str) -> Result<Vec<ManifestEntry>> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, strip_eol(l)))
        .filter(|(_, l)| !l.is_empty());
    let (line_no, header) = lines.next().ok_or_else(|| AcrError::Parse {
        line: 1,
        message: "empty manifest".into(),
    })?;
    if header != "image_id,pts_path,width,height" {
        return Err(AcrError::Parse {
            line: line_no,
            message: format!("bad manifest header '{header}'"),
        });
    }
    let mut entries = Vec::new();
    for (line_no, row) in lines {
        let fields: Vec<&str> = row.split(',').collect();
        if fields.len() != 4 {
            return Err(AcrError::Parse {
                line: line_no,
                message: format!("expected 4 comma-separated fields, found {}", fields.len()),
            });
        }
        let parse_dim = |s: &str, what: &str| -> Result<f64> {
            let v: f64 = s.trim().parse().map_err(|_| AcrError::Parse {
                line: line_no,
                message: format!("'{s}' is not a valid {what}"),
            })?;
            if !v.is_finite() || v <= 0.0 {
                return Err(AcrError::Parse {
                    line: line_no,
                    message: format!("{what} {v} must be positive"),
                });
            }
            Ok(v)
        };
        entries.push(ManifestEntry {
            image_id: fields[0].trim().to_owned(),
            pts_path: PathBuf::from(fields[1].trim()),
            width: parse_dim(fields[2], "width")?,
            height: parse_dim(fields[3], "height")?,
        });
    }
    Ok(entries)
}

/// Load every face referenced by a manifest; relative .pts paths resolve
/// against the manifest's directory.
pub fn load_manifest_faces(manifest_path: &Path) -> Result<Vec<AnnotatedFace>> {
    let text = std::fs::read_to_string(manifest_path)?;
    let entries = parse_manifest(&text)?;
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let mut faces = Vec::with_capacity(entries.len());
    for entry in entries {
        let pts_path = if entry.pts_path.is_absolute() {
            entry.pts_path.clone()
        } else {
            base.join(&entry.pts_path)
        };
        let pts_text = std::fs::read_to_string(&pts_path)?;
        let points = parse_pts(&pts_text).map_err(|e| match e {
            AcrError::Parse { line, message } => AcrError::Parse {
                line,
                message: format!("{}: {message}", pts_path.display()),
            },
            other => other,
        })?;
        faces.push(AnnotatedFace::new(
            entry.image_id,
            points,
            entry.width,
            entry.height,
        )?);
    }
    Ok(faces)
}

/// How synthetic features are derived from the (noisy) target shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MixingKind {
    /// Features are the target plus observation noise.
    Identity,
    /// Features are the target passed through a fixed random orthogonal
    /// matrix, plus observation noise.
    #[default]
    Random,
}

/// Recipe for a synthetic regression dataset over a shape model.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDatasetSpec {
    pub num_samples: usize,
    /// Landmark-position noise, one standard deviation per landmark.
    pub noise_scale_per_point: Vec<f64>,
    /// Observation noise added to the mixed features.
    pub feature_noise_scale: f64,
    pub mixing: MixingKind,
    pub seed: u64,
}

const SUBSET_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

impl SyntheticDatasetSpec {
    /// Two-level noise: a seeded random `occlusion_fraction` of the
    /// landmarks gets `hard_scale` noise, the rest `easy_scale`.
    #[allow(clippy::too_many_arguments)]
    pub fn heteroscedastic(
        num_samples: usize,
        num_points: usize,
        occlusion_fraction: f64,
        hard_scale: f64,
        easy_scale: f64,
        feature_noise_scale: f64,
        mixing: MixingKind,
        seed: u64,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&occlusion_fraction) {
            return Err(AcrError::InvalidInput(format!(
                "occlusion fraction {occlusion_fraction} must lie in [0, 1]"
            )));
        }
        if num_points < 2 {
            return Err(AcrError::InvalidInput(format!(
                "need at least 2 landmarks, got {num_points}"
            )));
        }
        let num_hard = (occlusion_fraction * num_points as f64).round() as usize;
        let mut indices: Vec<usize> = (0..num_points).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ SUBSET_SALT);
        // Fisher-Yates so the hard subset is a uniform draw.
        for i in (1..indices.len()).rev() {
            let j = rng.random_range(0..=i);
            indices.swap(i, j);
        }
        let mut noise_scale_per_point = vec![easy_scale; num_points];
        for &p in indices.iter().take(num_hard) {
            noise_scale_per_point[p] = hard_scale;
        }
        let spec = Self {
            num_samples,
            noise_scale_per_point,
            feature_noise_scale,
            mixing,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Landmarks whose noise scale is strictly above `easy_scale`.
    pub fn hard_points(&self, easy_scale: f64) -> Vec<usize> {
        self.noise_scale_per_point
            .iter()
            .enumerate()
            .filter(|(_, s)| **s > easy_scale)
            .map(|(p, _)| p)
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_samples == 0 {
            return Err(AcrError::InvalidInput("num_samples must be positive".into()));
        }
        if self.noise_scale_per_point.len() < 2 {
            return Err(AcrError::InvalidInput(
                "noise_scale_per_point needs at least 2 landmarks".into(),
            ));
        }
        if self
            .noise_scale_per_point
            .iter()
            .any(|s| !s.is_finite() || *s < 0.0)
        {
            return Err(AcrError::InvalidInput(
                "noise scales must be finite and non-negative".into(),
            ));
        }
        if !self.feature_noise_scale.is_finite() || self.feature_noise_scale < 0.0 {
            return Err(AcrError::InvalidInput(format!(
                "feature noise scale {} must be finite and non-negative",
                self.feature_noise_scale
            )));
        }
        Ok(())
    }
}

fn random_orthogonal(dim: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let mut data = Vec::with_capacity(dim * dim);
    for _ in 0..dim * dim {
        data.push(rng.sample::<f64, _>(StandardNormal));
    }
    // Column-major fill; QR of a Gaussian matrix gives a uniform rotation.
    let a = DMatrix::from_vec(dim, dim, data);
    a.qr().q()
}

/// A feature vector paired with its target shape.
pub type FeatureSample = (DVector<f64>, ShapeSample);

/// Draw `spec.num_samples` faces from the model and derive features.
///
/// Per sample: shape coefficients are uniform in `+/- 2 sqrt(eigenvalue)`,
/// landmark noise is Gaussian per [`SyntheticDatasetSpec::noise_scale_per_point`],
/// and features mix the noisy target per [`MixingKind`] plus observation
/// noise. Fully determined by `spec.seed`.
pub fn generate_synthetic(model: &ShapeModel, spec: &SyntheticDatasetSpec) -> Result<Vec<FeatureSample>> {
    spec.validate()?;
    let d = model.dim();
    if spec.noise_scale_per_point.len() * 2 != d {
        return Err(AcrError::InvalidInput(format!(
            "{} noise scales for a model with {} landmarks",
            spec.noise_scale_per_point.len(),
            d / 2
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mixing = match spec.mixing {
        MixingKind::Identity => None,
        MixingKind::Random => Some(random_orthogonal(d, &mut rng)),
    };

    let k = model.num_eigs();
    let mut out = Vec::with_capacity(spec.num_samples);
    for _ in 0..spec.num_samples {
        let mut b = DVector::zeros(k);
        for i in 0..k {
            let u: f64 = rng.random();
            b[i] = (2.0 * u - 1.0) * 2.0 * model.eigenvalues()[i].sqrt();
        }
        let mut target = model.mean() + model.eigenvectors() * b;
        for (p, scale) in spec.noise_scale_per_point.iter().enumerate() {
            for c in 0..2 {
                let z: f64 = rng.sample(StandardNormal);
                target[2 * p + c] += scale * z;
            }
        }
        let mut features = match &mixing {
            Some(m) => m * &target,
            None => target.clone(),
        };
        for i in 0..d {
            let z: f64 = rng.sample(StandardNormal);
            features[i] += spec.feature_noise_scale * z;
        }
        out.push((features, ShapeSample::from_vector(&target)?));
    }
    Ok(out)
}

/// Derive features for externally supplied targets with the same mixing
/// scheme [`generate_synthetic`] uses.
pub fn features_from_targets(
    targets: &[ShapeSample],
    mixing: MixingKind,
    feature_noise_scale: f64,
    seed: u64,
) -> Result<Vec<FeatureSample>> {
    if targets.is_empty() {
        return Err(AcrError::InsufficientData("no targets to mix".into()));
    }
    if !feature_noise_scale.is_finite() || feature_noise_scale < 0.0 {
        return Err(AcrError::InvalidInput(format!(
            "feature noise scale {feature_noise_scale} must be finite and non-negative"
        )));
    }
    let d = targets[0].dim();
    if targets.iter().any(|t| t.dim() != d) {
        return Err(AcrError::InvalidInput(
            "targets must share one dimension".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mix = match mixing {
        MixingKind::Identity => None,
        MixingKind::Random => Some(random_orthogonal(d, &mut rng)),
    };
    let mut out = Vec::with_capacity(targets.len());
    for target in targets {
        let tv = target.as_vector();
        let mut features = match &mix {
            Some(m) => m * &tv,
            None => tv,
        };
        for i in 0..d {
            let z: f64 = rng.sample(StandardNormal);
            features[i] += feature_noise_scale * z;
        }
        out.push((features, target.clone()));
    }
    Ok(out)
}

/// Synthetic base shape model: landmarks around a circle, a random
/// orthogonal eigenbasis, and a geometric eigenvalue ramp from 0.03 down to
/// 0.005 over the leading 80% of dimensions (the rest are zero).
///
/// The zero tail matters: occlusion noise bigger than the smallest nonzero
/// eigenvalue would otherwise be captured by a refit model's leading
/// eigenvectors and never show up in the smooth-face residual.
pub fn synthetic_base_model(num_points: usize, seed: u64) -> Result<ShapeModel> {
    if num_points < 2 {
        return Err(AcrError::InvalidInput(format!(
            "base model needs at least 2 landmarks, got {num_points}"
        )));
    }
    let d = 2 * num_points;
    let mut mean = DVector::zeros(d);
    for p in 0..num_points {
        let angle = 2.0 * std::f64::consts::PI * p as f64 / num_points as f64;
        mean[2 * p] = 0.5 + 0.3 * angle.cos();
        mean[2 * p + 1] = 0.5 + 0.3 * angle.sin();
    }
    let rank = ((0.8 * d as f64).round() as usize).clamp(1, d);
    let mut eigenvalues = DVector::zeros(d);
    for i in 0..rank {
        let t = if rank == 1 { 0.0 } else { i as f64 / (rank - 1) as f64 };
        eigenvalues[i] = 0.03 * (1.0 / 6.0_f64).powf(t);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eigenvectors = random_orthogonal(d, &mut rng);
    ShapeModel::from_parts(mean, eigenvectors, eigenvalues, 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    const WELL_FORMED: &str = "version: 1\nn_points: 3\n{\n10.5 20.25\n30.0 40.0\n50.0 60.75\n}\n";

    #[test]
    fn parses_well_formed_pts() {
        let pts = parse_pts(WELL_FORMED).unwrap();
        assert_eq!(pts, vec![(10.5, 20.25), (30.0, 40.0), (50.0, 60.75)]);
    }

    #[test]
    fn pts_round_trip_at_six_decimals() {
        let points = vec![(0.1234567, 12.9999999), (-3.25, 0.0)];
        let back = parse_pts(&serialize_pts(&points)).unwrap();
        for ((x, y), (bx, by)) in points.iter().zip(&back) {
            assert!((x - bx).abs() <= 5e-7);
            assert!((y - by).abs() <= 5e-7);
        }
    }

    #[test]
    fn pts_count_mismatch_names_both_counts() {
        let text = "version: 1\nn_points: 4\n{\n1 2\n3 4\n}\n";
        match parse_pts(text) {
            Err(AcrError::Parse { message, .. }) => {
                assert!(message.contains('4') && message.contains('2'), "{message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn pts_tolerates_crlf_and_trailing_whitespace() {
        let crlf = WELL_FORMED.replace('\n', "\r\n");
        assert_eq!(parse_pts(&crlf).unwrap(), parse_pts(WELL_FORMED).unwrap());
        let padded = "version: 1  \nn_points: 2\t\n{\n1 2   \n3 4\n}  \n";
        assert_eq!(parse_pts(padded).unwrap(), vec![(1.0, 2.0), (3.0, 4.0)]);
    }

    #[test]
    fn pts_bad_float_reports_line() {
        let text = "version: 1\nn_points: 2\n{\n1 2\n3 oops\n}\n";
        match parse_pts(text) {
            Err(AcrError::Parse { line, .. }) => assert_eq!(line, 5),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn manifest_parses_and_validates() {
        let text = "image_id,pts_path,width,height\nimg1,a.pts,640,480\nimg2,sub/b.pts,320,240\n";
        let entries = parse_manifest(text).unwrap();
        assert_eq!(entries.len(), 2);
        assert_eq!(entries[1].pts_path, PathBuf::from("sub/b.pts"));
        assert!(parse_manifest("bogus header\n").is_err());
        assert!(parse_manifest("image_id,pts_path,width,height\nimg,a.pts,-5,10\n").is_err());
    }

    #[test]
    fn normalize_scales_and_clips() {
        let face = AnnotatedFace::new(
            "img".into(),
            vec![(320.0, 240.0), (-10.0, 500.0)],
            640.0,
            480.0,
        )
        .unwrap();
        let (shape, clipped) = normalize(&face).unwrap();
        assert_eq!(shape.coords(), &[0.5, 0.5, 0.0, 1.0]);
        assert_eq!(clipped, 2);
    }

    #[test]
    fn base_model_has_expected_spectrum() {
        let model = synthetic_base_model(10, 7).unwrap();
        assert_eq!(model.dim(), 20);
        assert_eq!(model.num_eigs(), 20);
        let evs = model.eigenvalues();
        assert!((evs[0] - 0.03).abs() < 1e-15);
        assert!((evs[15] - 0.005).abs() < 1e-15);
        assert_eq!(&evs[16..], &[0.0; 4]);
        // Mean landmarks sit on the circle of radius 0.3 around (0.5, 0.5).
        let m = model.mean();
        for p in 0..10 {
            let r = ((m[2 * p] - 0.5).powi(2) + (m[2 * p + 1] - 0.5).powi(2)).sqrt();
            assert!((r - 0.3).abs() < 1e-12);
        }
    }

    #[test]
    fn heteroscedastic_spec_marks_the_right_number_of_points() {
        let spec = SyntheticDatasetSpec::heteroscedastic(
            10,
            10,
            0.2,
            0.05,
            0.005,
            0.01,
            MixingKind::Random,
            3,
        )
        .unwrap();
        assert_eq!(spec.hard_points(0.005).len(), 2);
        let again = SyntheticDatasetSpec::heteroscedastic(
            10,
            10,
            0.2,
            0.05,
            0.005,
            0.01,
            MixingKind::Random,
            3,
        )
        .unwrap();
        assert_eq!(spec, again, "subset choice must be deterministic");
    }

    #[test]
    fn generation_is_deterministic_and_shaped() {
        let model = synthetic_base_model(5, 11).unwrap();
        let spec = SyntheticDatasetSpec {
            num_samples: 4,
            noise_scale_per_point: vec![0.01; 5],
            feature_noise_scale: 0.01,
            mixing: MixingKind::Random,
            seed: 42,
        };
        let a = generate_synthetic(&model, &spec).unwrap();
        let b = generate_synthetic(&model, &spec).unwrap();
        assert_eq!(a.len(), 4);
        assert_eq!(a[0].0.len(), 10);
        assert_eq!(a[0].1.dim(), 10);
        for ((fa, ta), (fb, tb)) in a.iter().zip(&b) {
            assert_eq!(fa, fb);
            assert_eq!(ta, tb);
        }
        let other = generate_synthetic(
            &model,
            &SyntheticDatasetSpec { seed: 43, ..spec.clone() },
        )
        .unwrap();
        assert_ne!(a[0].1, other[0].1, "different seeds must differ");
    }

    #[test]
    fn identity_mixing_keeps_features_near_targets() {
        let model = synthetic_base_model(5, 11).unwrap();
        let spec = SyntheticDatasetSpec {
            num_samples: 3,
            noise_scale_per_point: vec![0.0; 5],
            feature_noise_scale: 0.0,
            mixing: MixingKind::Identity,
            seed: 1,
        };
        for (features, target) in generate_synthetic(&model, &spec).unwrap() {
            for (f, t) in features.iter().zip(target.coords()) {
                assert_eq!(f, t);
            }
        }
    }

    #[test]
    fn features_from_targets_matches_dims() {
        let targets = vec![
            ShapeSample::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap(),
            ShapeSample::new(vec![0.5, 0.6, 0.7, 0.8]).unwrap(),
        ];
        let mixed = features_from_targets(&targets, MixingKind::Random, 0.0, 9).unwrap();
        assert_eq!(mixed.len(), 2);
        assert_eq!(mixed[0].0.len(), 4);
        // Orthogonal mixing preserves norms when noise is off.
        for (f, t) in &mixed {
            let tf: f64 = t.coords().iter().map(|x| x * x).sum();
            assert!((f.norm_squared() - tf).abs() < 1e-10);
        }
    }
}
