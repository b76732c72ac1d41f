//! Linear maximum mean discrepancy between a source and a target sample.
//!
//! With samples stacked as the columns of `X = [X_s X_t]` (dim × (n+m)), the
//! squared distance between the transformed domain means is a quadratic
//! form, `‖(1/n)Σ W xᵢˢ − (1/m)Σ W xⱼᵗ‖² = tr(WᵀW · X L Xᵀ)`, where `L` is the
//! block-constant coefficient matrix below.

use nalgebra::{DMatrix, DVector};

use crate::error::{contract, Result};
use crate::spd::{regularize, sharp_mean, symmetrize, SpdMatrix};

/// Coefficient matrix `L` for `n` source and `m` target samples.
///
/// `L = c cᵀ` with `c = (1/n, …, 1/n, −1/m, …, −1/m)`, so it is PSD of rank
/// one and every row sums to zero. The dense matrix is only built on request.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MmdCoefficients {
    n_source: usize,
    n_target: usize,
}

impl MmdCoefficients {
    pub fn new(n_source: usize, n_target: usize) -> Result<Self> {
        if n_source == 0 || n_target == 0 {
            return contract(format!(
                "MMD coefficients need samples in both domains, got n = {n_source}, m = {n_target}"
            ));
        }
        Ok(MmdCoefficients { n_source, n_target })
    }

    pub fn n_source(&self) -> usize {
        self.n_source
    }

    pub fn n_target(&self) -> usize {
        self.n_target
    }

    pub fn len(&self) -> usize {
        self.n_source + self.n_target
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// The weight vector `c` with `L = c cᵀ`.
    pub fn weights(&self) -> DVector<f64> {
        let (n, m) = (self.n_source, self.n_target);
        DVector::from_fn(n + m, |i, _| if i < n { 1.0 / n as f64 } else { -1.0 / m as f64 })
    }

    /// Dense `(n+m) × (n+m)` matrix.
    pub fn matrix(&self) -> DMatrix<f64> {
        let (n, m) = (self.n_source as f64, self.n_target as f64);
        let ns = self.n_source;
        DMatrix::from_fn(self.len(), self.len(), |i, j| match (i < ns, j < ns) {
            (true, true) => 1.0 / (n * n),
            (false, false) => 1.0 / (m * m),
            _ => -1.0 / (m * n),
        })
    }
}

/// Coefficient matrix for `n` source and `m` target samples.
pub fn mmd_coefficients(n: usize, m: usize) -> Result<MmdCoefficients> {
    MmdCoefficients::new(n, m)
}

/// Stacks source and target samples (rows) into `X = [X_s X_t]`, one sample
/// per column.
pub fn stack_domains(source: &DMatrix<f64>, target: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if source.ncols() != target.ncols() {
        return contract(format!(
            "source has {} features, target has {}",
            source.ncols(),
            target.ncols()
        ));
    }
    let (n, m) = (source.nrows(), target.nrows());
    let mut x = DMatrix::zeros(source.ncols(), n + m);
    x.columns_mut(0, n).copy_from(&source.transpose());
    x.columns_mut(n, m).copy_from(&target.transpose());
    Ok(x)
}

/// `X L Xᵀ`, computed as `(X c)(X c)ᵀ` where `X c` is the difference of the
/// domain means.
pub fn mmd_penalty_matrix(x: &DMatrix<f64>, l: &MmdCoefficients) -> Result<DMatrix<f64>> {
    if x.ncols() != l.len() {
        return contract(format!(
            "stacked data has {} columns, MMD coefficients expect {}",
            x.ncols(),
            l.len()
        ));
    }
    let diff = x * l.weights();
    Ok(&diff * diff.transpose())
}

/// `tr(A · X L Xᵀ)`: squared distance between the domain means under the
/// metric `A = WᵀW`.
pub fn mmd_value(metric: &DMatrix<f64>, x: &DMatrix<f64>, l: &MmdCoefficients) -> Result<f64> {
    if metric.nrows() != x.nrows() || !metric.is_square() {
        return contract("metric and stacked data dimensions disagree");
    }
    let diff = x * l.weights();
    Ok((diff.transpose() * metric * &diff)[(0, 0)])
}

/// How a penalty matrix is merged into the source scatter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Combine {
    /// `A_s + P`. `A_s` is already SPD and `P` is PSD, so no ridge is added
    /// unless rounding leaves the sum indefinite.
    Additive,
    /// `A_s ♯_γ regularize(P)`
    Cascaded { gamma: f64 },
}

/// `A_m` for the MMD-augmented objective.
pub fn combined_source_matrix(
    a_s: &SpdMatrix,
    x: &DMatrix<f64>,
    l: &MmdCoefficients,
    mode: Combine,
    eps: f64,
) -> Result<SpdMatrix> {
    let penalty = mmd_penalty_matrix(x, l)?;
    combine_with_penalty(a_s, &penalty, mode, eps)
}

/// Merges an arbitrary symmetric PSD penalty into `a_s`.
pub fn combine_with_penalty(a_s: &SpdMatrix, penalty: &DMatrix<f64>, mode: Combine, eps: f64) -> Result<SpdMatrix> {
    if penalty.nrows() != a_s.dim() || penalty.ncols() != a_s.dim() {
        return contract(format!(
            "penalty is {}x{}, source matrix is {}-dimensional",
            penalty.nrows(),
            penalty.ncols(),
            a_s.dim()
        ));
    }
    match mode {
        Combine::Additive if penalty.iter().all(|&v| v == 0.0) => Ok(a_s.clone()),
        Combine::Additive => {
            let sum = a_s.as_matrix() + symmetrize(penalty);
            SpdMatrix::new(sum.clone()).or_else(|_| regularize(&sum, eps))
        }
        Combine::Cascaded { gamma } => {
            if gamma == 0.0 {
                return Ok(a_s.clone());
            }
            sharp_mean(a_s, &regularize(penalty, eps)?, gamma)
        }
    }
}
