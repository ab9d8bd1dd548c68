//! Statistical shape model over flattened landmark vectors.
//!
//! A model is fit by PCA on training shapes: the mean face plus the leading
//! eigenvectors of the sample covariance. Projecting a face onto a truncated
//! eigenbasis and reconstructing it (with coefficients clamped to plausible
//! bounds) yields the "smooth" face used to score per-landmark hardness.

use nalgebra::{DMatrix, DVector};

use crate::error::{AcrError, Result};

/// One face's landmarks flattened to interleaved coordinates
/// `(x0, y0, x1, y1, ...)`. Coordinates are finite and the vector holds at
/// least two points.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeSample {
    coords: Vec<f64>,
}

impl ShapeSample {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 4 || !coords.len().is_multiple_of(2) {
            return Err(AcrError::InvalidInput(format!(
                "shape needs an even number of coordinates (>= 4), got {}",
                coords.len()
            )));
        }
        if let Some(bad) = coords.iter().find(|c| !c.is_finite()) {
            return Err(AcrError::InvalidInput(format!(
                "shape contains non-finite coordinate {bad}"
            )));
        }
        Ok(Self { coords })
    }

    pub fn from_points(points: &[(f64, f64)]) -> Result<Self> {
        let mut coords = Vec::with_capacity(points.len() * 2);
        for &(x, y) in points {
            coords.push(x);
            coords.push(y);
        }
        Self::new(coords)
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn num_points(&self) -> usize {
        self.coords.len() / 2
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn point(&self, index: usize) -> (f64, f64) {
        (self.coords[2 * index], self.coords[2 * index + 1])
    }

    pub fn as_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.coords)
    }

    pub fn from_vector(v: &DVector<f64>) -> Result<Self> {
        Self::new(v.iter().copied().collect())
    }
}

/// Coefficients of a face in (a truncated prefix of) the eigenbasis.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeParams {
    coeffs: Vec<f64>,
}

impl ShapeParams {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if let Some(bad) = coeffs.iter().find(|c| !c.is_finite()) {
            return Err(AcrError::InvalidInput(format!(
                "shape parameter {bad} is not finite"
            )));
        }
        Ok(Self { coeffs })
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }
}

/// Clamp each coefficient to `+/- 3 sqrt(eigenvalue)`, the usual plausibility
/// box for shape parameters.
pub fn clamp_params(params: &ShapeParams, eigenvalues: &[f64]) -> Result<ShapeParams> {
    if params.len() != eigenvalues.len() {
        return Err(AcrError::InvalidInput(format!(
            "{} params but {} eigenvalues",
            params.len(),
            eigenvalues.len()
        )));
    }
    if let Some(bad) = eigenvalues.iter().find(|l| !l.is_finite() || **l < 0.0) {
        return Err(AcrError::InvalidInput(format!(
            "eigenvalue {bad} must be finite and non-negative"
        )));
    }
    let clamped = params
        .coeffs
        .iter()
        .zip(eigenvalues)
        .map(|(&b, &lam)| {
            let bound = 3.0 * lam.sqrt();
            b.clamp(-bound, bound)
        })
        .collect();
    ShapeParams::new(clamped)
}

/// PCA shape model: mean face plus eigenvectors/eigenvalues of the training
/// covariance, eigenvalues in descending order.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeModel {
    mean: DVector<f64>,
    eigenvectors: DMatrix<f64>, // D x K, columns are unit eigenvectors
    eigenvalues: DVector<f64>,  // K, descending, non-negative
    num_training_samples: usize,
}

impl ShapeModel {
    /// Assemble a model from precomputed parts, validating orthonormality,
    /// eigenvalue ordering, and dimensions.
    pub fn from_parts(
        mean: DVector<f64>,
        eigenvectors: DMatrix<f64>,
        eigenvalues: DVector<f64>,
        num_training_samples: usize,
    ) -> Result<Self> {
        let d = mean.len();
        let k = eigenvalues.len();
        if d < 4 || !d.is_multiple_of(2) {
            return Err(AcrError::InvalidInput(format!(
                "model dimension {d} must be even and >= 4"
            )));
        }
        if eigenvectors.nrows() != d || eigenvectors.ncols() != k {
            return Err(AcrError::InvalidInput(format!(
                "eigenvector matrix is {}x{}, expected {}x{}",
                eigenvectors.nrows(),
                eigenvectors.ncols(),
                d,
                k
            )));
        }
        if k == 0 || k > d {
            return Err(AcrError::InvalidInput(format!(
                "model keeps {k} eigenvectors, expected 1..={d}"
            )));
        }
        if mean.iter().any(|v| !v.is_finite()) {
            return Err(AcrError::InvalidInput("mean has non-finite entries".into()));
        }
        for i in 0..k {
            let lam = eigenvalues[i];
            if !lam.is_finite() || lam < 0.0 {
                return Err(AcrError::InvalidInput(format!(
                    "eigenvalue {i} is {lam}, must be finite and non-negative"
                )));
            }
            if i > 0 && eigenvalues[i - 1] < lam {
                return Err(AcrError::InvalidInput(format!(
                    "eigenvalues must be non-increasing, but [{}] < [{}]",
                    i - 1,
                    i
                )));
            }
        }
        let gram = eigenvectors.transpose() * &eigenvectors;
        for i in 0..k {
            for j in 0..k {
                let want = if i == j { 1.0 } else { 0.0 };
                if (gram[(i, j)] - want).abs() > 1e-8 {
                    return Err(AcrError::Numerical(format!(
                        "eigenvectors are not orthonormal: gram[{i},{j}] = {}",
                        gram[(i, j)]
                    )));
                }
            }
        }
        Ok(Self {
            mean,
            eigenvectors,
            eigenvalues,
            num_training_samples,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Number of retained eigenpairs K.
    pub fn num_eigs(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn eigenvalues(&self) -> &[f64] {
        self.eigenvalues.as_slice()
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn num_training_samples(&self) -> usize {
        self.num_training_samples
    }

    /// Coefficients of `face` in the leading `num_eigs` eigenvectors:
    /// `b = V^T (face - mean)`.
    pub fn project(&self, face: &ShapeSample, num_eigs: usize) -> Result<ShapeParams> {
        if face.dim() != self.dim() {
            return Err(AcrError::InvalidInput(format!(
                "face dimension {} does not match model dimension {}",
                face.dim(),
                self.dim()
            )));
        }
        if num_eigs > self.num_eigs() {
            return Err(AcrError::InvalidInput(format!(
                "requested {num_eigs} eigenvectors but model keeps {}",
                self.num_eigs()
            )));
        }
        let centered = face.as_vector() - &self.mean;
        let basis = self.eigenvectors.columns(0, num_eigs);
        let b = basis.transpose() * centered;
        ShapeParams::new(b.iter().copied().collect())
    }

    /// `mean + V b` over the leading `params.len()` eigenvectors.
    pub fn reconstruct(&self, params: &ShapeParams) -> Result<ShapeSample> {
        if params.len() > self.num_eigs() {
            return Err(AcrError::InvalidInput(format!(
                "{} params but model keeps {} eigenvectors",
                params.len(),
                self.num_eigs()
            )));
        }
        let basis = self.eigenvectors.columns(0, params.len());
        let b = DVector::from_column_slice(params.coeffs());
        let x = &self.mean + basis * b;
        ShapeSample::from_vector(&x)
    }

    /// How many eigenvectors a fraction keeps: `round(fraction * K)`, halves
    /// rounding away from zero.
    pub fn active_eigs(&self, fraction: f64) -> Result<usize> {
        if !fraction.is_finite() || fraction <= 0.0 || fraction > 1.0 {
            return Err(AcrError::InvalidInput(format!(
                "eigenvector fraction {fraction} must lie in (0, 1]"
            )));
        }
        Ok((fraction * self.num_eigs() as f64).round() as usize)
    }

    /// Plausible version of `face`: project onto the leading
    /// `round(fraction * K)` eigenvectors, clamp each coefficient to
    /// `+/- 3 sqrt(eigenvalue)`, and reconstruct.
    pub fn smooth_face(&self, face: &ShapeSample, fraction: f64) -> Result<ShapeSample> {
        let active = self.active_eigs(fraction)?;
        let params = self.project(face, active)?;
        let clamped = clamp_params(&params, &self.eigenvalues.as_slice()[..active])?;
        self.reconstruct(&clamped)
    }
}

impl ShapeModel {
    /// Plain-text encoding with floats at 17 significant digits, enough for
    /// an exact f64 round trip through `parse_document`.
    pub fn to_document(&self) -> String {
        let mut doc = String::new();
        doc.push_str("acr_shape_model v1\n");
        doc.push_str(&format!("dim {}\n", self.dim()));
        doc.push_str(&format!("num_eigs {}\n", self.num_eigs()));
        doc.push_str(&format!(
            "num_training_samples {}\n",
            self.num_training_samples
        ));
        doc.push_str(&format!("mean{}\n", fmt_floats(self.mean.as_slice())));
        doc.push_str(&format!(
            "eigenvalues{}\n",
            fmt_floats(self.eigenvalues.as_slice())
        ));
        for col in 0..self.num_eigs() {
            let column: Vec<f64> = self.eigenvectors.column(col).iter().copied().collect();
            doc.push_str(&format!("eigenvector {col}{}\n", fmt_floats(&column)));
        }
        doc
    }

    pub fn parse_document(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let mut next_fields = |expect: &str| -> Result<(usize, Vec<String>)> {
            let (idx, line) = lines.next().ok_or_else(|| AcrError::Parse {
                line: text.lines().count() + 1,
                message: format!("missing '{expect}' line"),
            })?;
            let fields: Vec<String> = line.split_whitespace().map(str::to_owned).collect();
            if fields.first().map(String::as_str) != Some(expect) {
                return Err(AcrError::Parse {
                    line: idx + 1,
                    message: format!("expected '{expect}', found '{line}'"),
                });
            }
            Ok((idx + 1, fields))
        };

        let (line_no, header) = next_fields("acr_shape_model")?;
        if header.get(1).map(String::as_str) != Some("v1") {
            return Err(AcrError::Parse {
                line: line_no,
                message: "unsupported shape model version".into(),
            });
        }
        let dim = parse_count(&next_fields("dim")?)?;
        let num_eigs = parse_count(&next_fields("num_eigs")?)?;
        let num_training_samples = parse_count(&next_fields("num_training_samples")?)?;

        let mean_line = next_fields("mean")?;
        let mean = parse_floats(&mean_line, 1, dim)?;
        let eig_line = next_fields("eigenvalues")?;
        let eigenvalues = parse_floats(&eig_line, 1, num_eigs)?;

        let mut eigenvectors = DMatrix::zeros(dim, num_eigs);
        for col in 0..num_eigs {
            let row = next_fields("eigenvector")?;
            let idx: usize = row.1.get(1).and_then(|s| s.parse().ok()).ok_or_else(|| {
                AcrError::Parse {
                    line: row.0,
                    message: "eigenvector line is missing its index".into(),
                }
            })?;
            if idx != col {
                return Err(AcrError::Parse {
                    line: row.0,
                    message: format!("expected eigenvector {col}, found {idx}"),
                });
            }
            let column = parse_floats(&row, 2, dim)?;
            eigenvectors.set_column(col, &DVector::from_vec(column));
        }

        Self::from_parts(
            DVector::from_vec(mean),
            eigenvectors,
            DVector::from_vec(eigenvalues),
            num_training_samples,
        )
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_document())?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::parse_document(&std::fs::read_to_string(path)?)
    }
}

fn fmt_floats(values: &[f64]) -> String {
    let mut out = String::new();
    for v in values {
        out.push_str(&format!(" {v:.16e}"));
    }
    out
}

fn parse_count((line, fields): &(usize, Vec<String>)) -> Result<usize> {
    fields
        .get(1)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| AcrError::Parse {
            line: *line,
            message: format!("expected a count after '{}'", fields[0]),
        })
}

fn parse_floats((line, fields): &(usize, Vec<String>), skip: usize, want: usize) -> Result<Vec<f64>> {
    let values: Vec<f64> = fields
        .iter()
        .skip(skip)
        .map(|s| {
            s.parse::<f64>().map_err(|_| AcrError::Parse {
                line: *line,
                message: format!("'{s}' is not a float"),
            })
        })
        .collect::<Result<_>>()?;
    if values.len() != want {
        return Err(AcrError::Parse {
            line: *line,
            message: format!("expected {want} floats, found {}", values.len()),
        });
    }
    Ok(values)
}

/// Fit a PCA shape model to training shapes.
///
/// Keeps `K = min(D, N - 1)` eigenpairs of the unbiased sample covariance,
/// sorted by descending eigenvalue. Eigenvector signs are normalized so the
/// largest-magnitude entry of each column is positive.
pub fn fit_shape_model(samples: &[ShapeSample]) -> Result<ShapeModel> {
    if samples.len() < 2 {
        return Err(AcrError::InsufficientData(format!(
            "shape model needs at least 2 samples, got {}",
            samples.len()
        )));
    }
    let d = samples[0].dim();
    if let Some(bad) = samples.iter().find(|s| s.dim() != d) {
        return Err(AcrError::InvalidInput(format!(
            "all samples must share one dimension, found {} next to {}",
            bad.dim(),
            d
        )));
    }
    let n = samples.len();

    let mut mean = DVector::zeros(d);
    for s in samples {
        mean += s.as_vector();
    }
    mean /= n as f64;

    let centered = DMatrix::from_fn(n, d, |i, j| samples[i].coords[j] - mean[j]);
    let mut cov = centered.transpose() * &centered / (n as f64 - 1.0);
    // Symmetrize away accumulation noise before the eigensolver.
    cov = (&cov + cov.transpose()) * 0.5;

    let eigen = nalgebra::SymmetricEigen::try_new(cov, f64::EPSILON, 10_000)
        .ok_or_else(|| AcrError::Numerical("covariance eigendecomposition did not converge".into()))?;

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| {
        eigen.eigenvalues[j]
            .partial_cmp(&eigen.eigenvalues[i])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });

    let k = d.min(n - 1);
    let scale = order
        .first()
        .map(|&i| eigen.eigenvalues[i].abs())
        .unwrap_or(0.0)
        .max(f64::EPSILON);

    let mut eigenvalues = DVector::zeros(k);
    let mut eigenvectors = DMatrix::zeros(d, k);
    for (col, &src) in order.iter().take(k).enumerate() {
        let lam = eigen.eigenvalues[src];
        if lam < -1e-10 * scale {
            return Err(AcrError::Numerical(format!(
                "covariance produced significantly negative eigenvalue {lam}"
            )));
        }
        eigenvalues[col] = lam.max(0.0);

        let mut v: Vec<f64> = eigen.eigenvectors.column(src).iter().copied().collect();
        let mut pivot = 0;
        for (i, x) in v.iter().enumerate() {
            if x.abs() > v[pivot].abs() {
                pivot = i;
            }
        }
        if v[pivot] < 0.0 {
            for x in &mut v {
                *x = -*x;
            }
        }
        eigenvectors.set_column(col, &DVector::from_vec(v));
    }

    ShapeModel::from_parts(mean, eigenvectors, eigenvalues, n)
}

/// Training schedule for the fraction of eigenvectors used when smoothing.
///
/// Buckets are `(last_epoch, fraction)` pairs with strictly increasing
/// epochs and non-decreasing fractions; an epoch maps to the first bucket
/// whose `last_epoch` is >= it, and epochs past the final bucket keep the
/// final fraction.
#[derive(Debug, Clone, PartialEq)]
pub struct EigFractionSchedule {
    buckets: Vec<(usize, f64)>,
}

impl EigFractionSchedule {
    pub fn new(buckets: Vec<(usize, f64)>) -> Result<Self> {
        if buckets.is_empty() {
            return Err(AcrError::InvalidInput("schedule has no buckets".into()));
        }
        for (i, &(epoch, fraction)) in buckets.iter().enumerate() {
            if !fraction.is_finite() || fraction <= 0.0 || fraction > 1.0 {
                return Err(AcrError::InvalidInput(format!(
                    "schedule fraction {fraction} at bucket {i} must lie in (0, 1]"
                )));
            }
            if i > 0 {
                let (prev_epoch, prev_fraction) = buckets[i - 1];
                if epoch <= prev_epoch {
                    return Err(AcrError::InvalidInput(format!(
                        "schedule epochs must increase, bucket {i} has {epoch} after {prev_epoch}"
                    )));
                }
                if fraction < prev_fraction {
                    return Err(AcrError::InvalidInput(format!(
                        "schedule fractions must not decrease, bucket {i} has {fraction} after {prev_fraction}"
                    )));
                }
            }
        }
        Ok(Self { buckets })
    }

    pub fn buckets(&self) -> &[(usize, f64)] {
        &self.buckets
    }

    /// Index of the bucket governing `epoch` (the last bucket for epochs past
    /// the schedule's end).
    pub fn bucket_index(&self, epoch: usize) -> usize {
        self.buckets
            .iter()
            .position(|&(last, _)| epoch <= last)
            .unwrap_or(self.buckets.len() - 1)
    }

    pub fn fraction_for_epoch(&self, epoch: usize) -> f64 {
        self.buckets[self.bucket_index(epoch)].1
    }
}

impl Default for EigFractionSchedule {
    /// 80% of eigenvectors through epoch 15, then 85% / 90% / 95% through
    /// epochs 30 / 70 / 100, and 97% from epoch 101 on.
    fn default() -> Self {
        Self::new(vec![
            (15, 0.80),
            (30, 0.85),
            (70, 0.90),
            (100, 0.95),
            (150, 0.97),
        ])
        .expect("default schedule is valid")
    }
}
