//! Domain datasets and the scatter matrices built from them.

use nalgebra::{DMatrix, DVector};

use crate::error::{contract, Error, Result};
use crate::spd::{regularize, SpdMatrix};

/// Feature matrix (one sample per row) with optional integer class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainDataset {
    features: DMatrix<f64>,
    labels: Option<Vec<usize>>,
    name: String,
}

impl DomainDataset {
    pub fn new(name: impl Into<String>, features: DMatrix<f64>, labels: Option<Vec<usize>>) -> Result<Self> {
        let name = name.into();
        if features.nrows() < 2 {
            return Err(Error::Data(format!(
                "domain '{name}' has {} samples; at least 2 are required",
                features.nrows()
            )));
        }
        if features.ncols() == 0 {
            return Err(Error::Data(format!("domain '{name}' has no feature columns")));
        }
        if let Some((idx, _)) = features.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            let (row, col) = (idx % features.nrows(), idx / features.nrows());
            return Err(Error::Data(format!(
                "domain '{name}' has a non-finite value at row {row}, column {col}"
            )));
        }
        if let Some(l) = &labels {
            if l.len() != features.nrows() {
                return Err(Error::Data(format!(
                    "domain '{name}' has {} labels for {} samples",
                    l.len(),
                    features.nrows()
                )));
            }
        }
        Ok(DomainDataset {
            features,
            labels,
            name,
        })
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn num_samples(&self) -> usize {
        self.features.nrows()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    /// One more than the largest label, or 0 without labels.
    pub fn num_classes(&self) -> usize {
        self.labels
            .as_ref()
            .and_then(|l| l.iter().max().map(|m| m + 1))
            .unwrap_or(0)
    }

    /// Same labels and name, new features (e.g. after standardization).
    pub fn with_features(&self, features: DMatrix<f64>) -> Result<Self> {
        DomainDataset::new(self.name.clone(), features, self.labels.clone())
    }

    /// Rows selected by `indices`, in the given order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let features = self.features.select_rows(indices.iter());
        let labels = self
            .labels
            .as_ref()
            .map(|l| indices.iter().map(|&i| l[i]).collect());
        DomainDataset::new(self.name.clone(), features, labels)
    }
}

/// Per-column mean as a column vector.
pub fn column_mean(features: &DMatrix<f64>) -> DVector<f64> {
    let n = features.nrows() as f64;
    features.row_sum().transpose() / n
}

/// `Σᵢ (xᵢ − x̄)(xᵢ − x̄)ᵀ` over the rows of `features`.
pub fn centered_scatter(features: &DMatrix<f64>) -> DMatrix<f64> {
    let mean = column_mean(features);
    let mut centered = features.clone();
    for mut row in centered.row_iter_mut() {
        row -= mean.transpose();
    }
    centered.transpose() * centered
}

/// Scatter over all unordered sample pairs, `Σ_{i<j} (xᵢ − xⱼ)(xᵢ − xⱼ)ᵀ`,
/// divided by the pair count `n(n−1)/2` and regularized.
///
/// Uses `Σ_{i<j} (xᵢ − xⱼ)(xᵢ − xⱼ)ᵀ = n Σᵢ (xᵢ − x̄)(xᵢ − x̄)ᵀ`, so the
/// result equals twice the unbiased covariance before regularization.
pub fn pairwise_scatter(features: &DMatrix<f64>, eps: f64) -> Result<SpdMatrix> {
    let n = features.nrows();
    if n < 2 {
        return contract(format!("pairwise scatter needs at least 2 samples, got {n}"));
    }
    let pairs = (n * (n - 1)) as f64 / 2.0;
    regularize(&(centered_scatter(features) * (n as f64 / pairs)), eps)
}

/// Unbiased sample covariance `(1/(n−1)) Σᵢ (xᵢ − x̄)(xᵢ − x̄)ᵀ`, regularized.
pub fn empirical_covariance(features: &DMatrix<f64>, eps: f64) -> Result<SpdMatrix> {
    let n = features.nrows();
    if n < 2 {
        return contract(format!("covariance needs at least 2 samples, got {n}"));
    }
    regularize(&(centered_scatter(features) / (n as f64 - 1.0)), eps)
}
