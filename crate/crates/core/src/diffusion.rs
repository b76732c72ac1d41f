//! Nearest-neighbour graphs, random-walk spectra and diffusion kernels.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use crate::error::{contract, Error, Result};
use crate::spd::{regularize, SpdMatrix, SymEig};

/// Eigenvalues below this are dropped before forming a diffusion kernel.
pub const LAMBDA_MIN: f64 = 1e-6;

pub const DEFAULT_NEIGHBOURS: usize = 10;
pub const DEFAULT_NUM_KEPT: usize = 20;
pub const DEFAULT_SIGMA: f64 = 1.0;

/// Leading eigenpairs of a random-walk matrix `P = D⁻¹W`.
#[derive(Debug, Clone)]
pub struct DiffusionSpectrum {
    /// Descending, within [−1, 1].
    eigenvalues: DVector<f64>,
    /// Unit-norm right eigenvectors of `P`, one per column.
    eigenvectors: DMatrix<f64>,
}

impl DiffusionSpectrum {
    /// Builds a spectrum from explicit eigenpairs; columns are normalized.
    pub fn from_parts(eigenvalues: DVector<f64>, mut eigenvectors: DMatrix<f64>) -> Result<Self> {
        if eigenvalues.len() != eigenvectors.ncols() || eigenvalues.len() > eigenvectors.nrows() {
            return contract(format!(
                "{} eigenvalues for a {}x{} eigenvector matrix",
                eigenvalues.len(),
                eigenvectors.nrows(),
                eigenvectors.ncols()
            ));
        }
        for mut col in eigenvectors.column_iter_mut() {
            let norm = col.norm();
            if norm > 0.0 {
                col /= norm;
            }
        }
        Ok(DiffusionSpectrum {
            eigenvalues,
            eigenvectors,
        })
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn num_samples(&self) -> usize {
        self.eigenvectors.nrows()
    }

    pub fn num_kept(&self) -> usize {
        self.eigenvalues.len()
    }
}

/// Squared Euclidean distances between all rows.
pub fn squared_distances(features: &DMatrix<f64>) -> DMatrix<f64> {
    let gram = features * features.transpose();
    let n = gram.nrows();
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else {
            (gram[(i, i)] + gram[(j, j)] - 2.0 * gram[(i, j)]).max(0.0)
        }
    })
}

/// Median of the pairwise Euclidean distances, the default kernel bandwidth.
/// Falls back to 1 when every pair coincides.
pub fn median_bandwidth(features: &DMatrix<f64>) -> f64 {
    let d2 = squared_distances(features);
    let n = d2.nrows();
    let mut dists: Vec<f64> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .map(|(i, j)| d2[(i, j)].sqrt())
        .collect();
    if dists.is_empty() {
        return 1.0;
    }
    dists.sort_by(f64::total_cmp);
    let mid = dists.len() / 2;
    let median = if dists.len().is_multiple_of(2) {
        0.5 * (dists[mid - 1] + dists[mid])
    } else {
        dists[mid]
    };
    if median > 0.0 {
        median
    } else {
        1.0
    }
}

/// Symmetric kNN graph with Gaussian weights `exp(−‖xᵢ − xⱼ‖² / (2b²))`.
///
/// An edge exists when either endpoint is among the other's `k` nearest
/// neighbours (ties broken by index). The diagonal is zero.
pub fn knn_graph(features: &DMatrix<f64>, k: usize, bandwidth: f64) -> Result<DMatrix<f64>> {
    let n = features.nrows();
    if k == 0 || k >= n {
        return contract(format!("k = {k} neighbours requires 1 <= k < {n} samples"));
    }
    if !(bandwidth > 0.0) || !bandwidth.is_finite() {
        return contract(format!("bandwidth must be positive, got {bandwidth}"));
    }
    let d2 = squared_distances(features);
    let denom = 2.0 * bandwidth * bandwidth;
    let mut w = DMatrix::zeros(n, n);
    let mut order: Vec<usize> = Vec::with_capacity(n);
    for i in 0..n {
        order.clear();
        order.extend((0..n).filter(|&j| j != i));
        order.sort_by(|&a, &b| d2[(i, a)].total_cmp(&d2[(i, b)]).then(a.cmp(&b)));
        for &j in order.iter().take(k) {
            let weight = (-d2[(i, j)] / denom).exp();
            w[(i, j)] = weight;
            w[(j, i)] = weight;
        }
    }
    Ok(w)
}

/// Top `num_kept` eigenpairs of `P = D⁻¹W`, computed from the symmetric
/// conjugate `D^{-1/2} W D^{-1/2}` and mapped back by `D^{-1/2}`.
///
/// Fails on a zero-degree vertex or a graph with more than one connected
/// component, naming the first vertex not reachable from vertex 0.
pub fn diffusion_spectrum(w: &DMatrix<f64>, num_kept: usize) -> Result<DiffusionSpectrum> {
    let n = w.nrows();
    if !w.is_square() || n == 0 {
        return contract("weight matrix must be square and non-empty");
    }
    if num_kept == 0 || num_kept > n {
        return contract(format!("num_kept = {num_kept} must lie in 1..={n}"));
    }
    if w.iter().any(|&v| v < 0.0 || !v.is_finite()) {
        return contract("weight matrix must be finite and nonnegative");
    }
    let degrees: Vec<f64> = w.row_iter().map(|r| r.sum()).collect();
    if let Some(vertex) = degrees.iter().position(|&d| d <= 0.0) {
        return Err(Error::DisconnectedGraph { vertex });
    }
    if let Some(vertex) = first_unreachable(w) {
        return Err(Error::DisconnectedGraph { vertex });
    }
    let inv_sqrt: Vec<f64> = degrees.iter().map(|d| d.sqrt().recip()).collect();
    let conj = DMatrix::from_fn(n, n, |i, j| inv_sqrt[i] * w[(i, j)] * inv_sqrt[j]);
    let eig = SymEig::new(&conj)?;
    let vals = eig.eigenvalues();
    let vecs = eig.eigenvectors();
    let kept: Vec<usize> = (0..n).rev().take(num_kept).collect();
    let eigenvalues = DVector::from_iterator(num_kept, kept.iter().map(|&c| vals[c].clamp(-1.0, 1.0)));
    let eigenvectors = DMatrix::from_fn(n, num_kept, |r, c| inv_sqrt[r] * vecs[(r, kept[c])]);
    DiffusionSpectrum::from_parts(eigenvalues, eigenvectors)
}

fn first_unreachable(w: &DMatrix<f64>) -> Option<usize> {
    let n = w.nrows();
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    while let Some(i) = queue.pop_front() {
        for j in 0..n {
            if !seen[j] && w[(i, j)] > 0.0 {
                seen[j] = true;
                queue.push_back(j);
            }
        }
    }
    seen.iter().position(|s| !s)
}

/// `Σᵢ exp(−σ²/(2λᵢ)) vᵢvᵢᵀ` over kept pairs with `λᵢ > LAMBDA_MIN`,
/// regularized to SPD.
pub fn diffusion_kernel(spectrum: &DiffusionSpectrum, sigma: f64, eps: f64) -> Result<SpdMatrix> {
    if !(sigma >= 0.0) {
        return contract(format!("sigma must be nonnegative, got {sigma}"));
    }
    regularize(&diffusion_kernel_raw(spectrum, sigma)?, eps)
}

/// The unregularized, rank-deficient kernel sum.
pub fn diffusion_kernel_raw(spectrum: &DiffusionSpectrum, sigma: f64) -> Result<DMatrix<f64>> {
    let n = spectrum.num_samples();
    let mut kernel = DMatrix::zeros(n, n);
    let mut used = 0;
    for (i, &lambda) in spectrum.eigenvalues.iter().enumerate() {
        if lambda <= LAMBDA_MIN {
            continue;
        }
        let weight = (-sigma * sigma / (2.0 * lambda)).exp();
        let v = spectrum.eigenvectors.column(i);
        kernel.ger(weight, &v, &v, 1.0);
        used += 1;
    }
    if used == 0 {
        return Err(Error::DegenerateSpectrum { floor: LAMBDA_MIN });
    }
    Ok(kernel)
}

/// Block-diagonal `diag(K_s⁻¹, K_t⁻¹)`.
pub fn block_kernel(k_s: &SpdMatrix, k_t: &SpdMatrix) -> Result<SpdMatrix> {
    let (n, m) = (k_s.dim(), k_t.dim());
    let mut block = DMatrix::zeros(n + m, n + m);
    block.view_mut((0, 0), (n, n)).copy_from(k_s.inverse().as_matrix());
    block.view_mut((n, n), (m, m)).copy_from(k_t.inverse().as_matrix());
    SpdMatrix::new(block)
}

/// Diffusion kernel of one domain's samples with the given graph settings.
pub fn domain_kernel(
    features: &DMatrix<f64>,
    k: usize,
    bandwidth: Option<f64>,
    num_kept: Option<usize>,
    sigma: f64,
    eps: f64,
) -> Result<SpdMatrix> {
    let n = features.nrows();
    let bandwidth = bandwidth.unwrap_or_else(|| median_bandwidth(features));
    let w = knn_graph(features, k, bandwidth)?;
    let kept = num_kept.unwrap_or(DEFAULT_NUM_KEPT.min(n - 1)).min(n);
    let spectrum = diffusion_spectrum(&w, kept)?;
    diffusion_kernel(&spectrum, sigma, eps)
}
