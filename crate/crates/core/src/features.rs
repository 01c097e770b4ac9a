//! Feature vectors, the Euclidean metric and the Gaussian similarity kernel.

use std::ops::Deref;

use crate::error::{OmtError, Result};

/// A finite, non-empty real vector. Every stream observation is one of these.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(OmtError::EmptyVector);
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(OmtError::NonFinite { index, value });
        }
        Ok(FeatureVector(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub(crate) fn ensure_dim(&self, expected: usize) -> Result<()> {
        if self.dim() == expected {
            Ok(())
        } else {
            Err(OmtError::DimensionMismatch {
                expected,
                found: self.dim(),
            })
        }
    }

    fn scaled_down(&self, divisor: f64) -> FeatureVector {
        FeatureVector(self.0.iter().map(|v| v / divisor).collect())
    }
}

impl Deref for FeatureVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for FeatureVector {
    type Error = OmtError;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        FeatureVector::new(values)
    }
}

/// Squared Euclidean distance on raw slices of equal length.
#[inline]
pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Euclidean distance between two vectors of the same dimension.
pub fn distance(a: &FeatureVector, b: &FeatureVector) -> Result<f64> {
    b.ensure_dim(a.dim())?;
    Ok(squared_distance(a, b).sqrt())
}

/// Gaussian kernel value for a given distance: `exp(-d^2 / (2 sigma^2))`.
#[inline]
pub fn gaussian_weight(distance: f64, sigma: f64) -> f64 {
    gaussian_weight_sq(distance * distance, sigma)
}

#[inline]
pub(crate) fn gaussian_weight_sq(squared_distance: f64, sigma: f64) -> f64 {
    (-squared_distance / (2.0 * sigma * sigma)).exp()
}

/// Gaussian similarity of two vectors with heat parameter `sigma`.
pub fn similarity(a: &FeatureVector, b: &FeatureVector, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(OmtError::InvalidConfig(format!(
            "heat parameter sigma must be positive, got {sigma}"
        )));
    }
    b.ensure_dim(a.dim())?;
    Ok(gaussian_weight_sq(squared_distance(a, b), sigma))
}

/// Rescaling that maps the largest vector of a dataset onto the unit sphere.
///
/// The scale is fixed once per dataset and then applied unchanged to every
/// later arrival.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormScale {
    max_norm: f64,
}

impl NormScale {
    pub fn from_max_norm(max_norm: f64) -> Result<Self> {
        if max_norm > 0.0 && max_norm.is_finite() {
            Ok(NormScale { max_norm })
        } else {
            Err(OmtError::ZeroNorm)
        }
    }

    pub fn identity() -> Self {
        NormScale { max_norm: 1.0 }
    }

    /// Largest norm observed in the dataset the scale was fitted on.
    pub fn max_norm(&self) -> f64 {
        self.max_norm
    }

    /// Multiplicative factor applied to every entry (`1 / max_norm`).
    pub fn factor(&self) -> f64 {
        1.0 / self.max_norm
    }

    pub fn apply(&self, x: &FeatureVector) -> FeatureVector {
        if self.max_norm == 1.0 {
            x.clone()
        } else {
            x.scaled_down(self.max_norm)
        }
    }
}

/// Rescales `vectors` so that the largest Euclidean norm becomes one.
pub fn normalize_dataset(vectors: &[FeatureVector]) -> Result<(Vec<FeatureVector>, NormScale)> {
    if let Some(first) = vectors.first() {
        for v in &vectors[1..] {
            v.ensure_dim(first.dim())?;
        }
    }
    let max_norm = vectors.iter().map(FeatureVector::norm).fold(0.0, f64::max);
    let scale = NormScale::from_max_norm(max_norm)?;
    let scaled = vectors.iter().map(|v| scale.apply(v)).collect();
    Ok((scaled, scale))
}

/// Externally learned linear projection (e.g. a Fisherfaces basis).
///
/// Distances are taken as Euclidean in the projected space.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProjection {
    input_dim: usize,
    rows: Vec<Vec<f64>>,
}

impl LinearProjection {
    /// Each row is one projection direction of length `input_dim`.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let input_dim = rows
            .first()
            .map(Vec::len)
            .ok_or_else(|| OmtError::InvalidConfig("projection needs at least one row".into()))?;
        if input_dim == 0 {
            return Err(OmtError::InvalidConfig("projection rows are empty".into()));
        }
        for row in &rows {
            if row.len() != input_dim {
                return Err(OmtError::DimensionMismatch {
                    expected: input_dim,
                    found: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(OmtError::InvalidConfig("projection has non-finite entries".into()));
            }
        }
        Ok(LinearProjection { input_dim, rows })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.rows.len()
    }

    pub fn project(&self, x: &FeatureVector) -> Result<FeatureVector> {
        x.ensure_dim(self.input_dim)?;
        let out = self
            .rows
            .iter()
            .map(|row| row.iter().zip(x.iter()).map(|(a, b)| a * b).sum())
            .collect();
        FeatureVector::new(out)
    }
}
