//! Geometric-mean adaptation algorithms.
//!
//! Each algorithm builds a source matrix `M` and the target scatter `A_t`
//! and returns `A = M⁻¹ ♯_t A_t`:
//!
//! | method          | `M`                                   |
//! |-----------------|---------------------------------------|
//! | GCA1            | `A_s`                                 |
//! | GCA2            | `A_s + X L Xᵀ`                        |
//! | Cascaded-GCA2   | `A_s ♯_γ X L Xᵀ`                      |
//! | GCA3            | `A_s + X (K + μL) Xᵀ`                 |
//! | Cascaded-GCA3   | `A_s ♯_γ X (K + μL) Xᵀ`               |
//!
//! `A_s`, `A_t` are per-pair normalized pairwise scatters, `L` the MMD
//! coefficient matrix and `K = diag(K_s⁻¹, K_t⁻¹)` the inverse diffusion
//! kernels of the two domains. At `t = 1/2` the result solves `A M A = A_t`.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::baselines::{self, LinearTransform, PcaBasis, DEFAULT_SUBSPACE_DIM};
use crate::covariance::pairwise_scatter;
use crate::diffusion::{domain_kernel, DEFAULT_NEIGHBOURS, DEFAULT_SIGMA};
use crate::error::{contract, Error, Result};
use crate::mmd::{combine_with_penalty, mmd_coefficients, mmd_penalty_matrix, stack_domains, Combine};
use crate::spd::{check_conditioning, riemannian_distance_sq, sharp_mean, SpdMatrix, DEFAULT_EPS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "NA")]
    NoAdaptation,
    #[serde(rename = "CORAL")]
    Coral,
    #[serde(rename = "SA")]
    SubspaceAlignment,
    #[serde(rename = "B-S")]
    BaselineSource,
    #[serde(rename = "B-T")]
    BaselineTarget,
    #[serde(rename = "GCA1")]
    Gca1,
    #[serde(rename = "GCA2")]
    Gca2,
    #[serde(rename = "GCA3")]
    Gca3,
    #[serde(rename = "Cascaded-GCA2")]
    CascadedGca2,
    #[serde(rename = "Cascaded-GCA3")]
    CascadedGca3,
}

impl Method {
    pub const ALL: [Method; 10] = [
        Method::NoAdaptation,
        Method::Coral,
        Method::SubspaceAlignment,
        Method::BaselineSource,
        Method::BaselineTarget,
        Method::Gca1,
        Method::Gca2,
        Method::Gca3,
        Method::CascadedGca2,
        Method::CascadedGca3,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::NoAdaptation => "NA",
            Method::Coral => "CORAL",
            Method::SubspaceAlignment => "SA",
            Method::BaselineSource => "B-S",
            Method::BaselineTarget => "B-T",
            Method::Gca1 => "GCA1",
            Method::Gca2 => "GCA2",
            Method::Gca3 => "GCA3",
            Method::CascadedGca2 => "Cascaded-GCA2",
            Method::CascadedGca3 => "Cascaded-GCA3",
        }
    }

    /// Whether the method learns an SPD metric (as opposed to a baseline map).
    pub fn is_geometric(self) -> bool {
        matches!(
            self,
            Method::Gca1 | Method::Gca2 | Method::Gca3 | Method::CascadedGca2 | Method::CascadedGca3
        )
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        let method = match key.as_str() {
            "na" | "none" => Method::NoAdaptation,
            "coral" => Method::Coral,
            "sa" => Method::SubspaceAlignment,
            "bs" => Method::BaselineSource,
            "bt" => Method::BaselineTarget,
            "gca1" => Method::Gca1,
            "gca2" => Method::Gca2,
            "gca3" => Method::Gca3,
            "cascadedgca2" | "cgca2" => Method::CascadedGca2,
            "cascadedgca3" | "cgca3" => Method::CascadedGca3,
            _ => return contract(format!("unknown method '{s}'")),
        };
        Ok(method)
    }
}

/// Hyperparameters shared by every method; each method reads the ones it
/// needs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    /// Geodesic weight toward the target matrix.
    pub t: f64,
    /// Cascade weight toward the penalty matrix.
    pub gamma: f64,
    /// Weight of the MMD term relative to the diffusion kernel (GCA3).
    pub mu: f64,
    /// Neighbours in the diffusion graph.
    pub k: usize,
    /// Gaussian edge bandwidth; `None` uses the median pairwise distance.
    pub bandwidth: Option<f64>,
    pub sigma: f64,
    pub eps: f64,
    /// Diffusion eigenpairs kept; `None` uses `min(20, n − 1)`.
    pub num_kept: Option<usize>,
    /// Baseline subspace dimension; `None` uses the largest of 20 that fits.
    pub subspace_dim: Option<usize>,
    /// Include the diffusion kernel in GCA3. Off means `K = 0`.
    pub kernel_term: bool,
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            t: 0.5,
            gamma: 0.5,
            mu: 1.0,
            k: DEFAULT_NEIGHBOURS,
            bandwidth: None,
            sigma: DEFAULT_SIGMA,
            eps: DEFAULT_EPS,
            num_kept: None,
            subspace_dim: None,
            kernel_term: true,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.t) {
            return contract(format!("t = {} outside [0, 1]", self.t));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return contract(format!("gamma = {} outside [0, 1]", self.gamma));
        }
        if !(self.mu >= 0.0) || !self.mu.is_finite() {
            return contract(format!("mu = {} must be nonnegative", self.mu));
        }
        if self.k == 0 {
            return contract("k must be positive");
        }
        if let Some(b) = self.bandwidth {
            if !(b > 0.0) || !b.is_finite() {
                return contract(format!("bandwidth = {b} must be positive"));
            }
        }
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return contract(format!("sigma = {} must be positive", self.sigma));
        }
        if !(self.eps > 0.0) || !self.eps.is_finite() {
            return contract(format!("eps = {} must be positive", self.eps));
        }
        if self.num_kept == Some(0) || self.subspace_dim == Some(0) {
            return contract("num_kept and subspace_dim must be positive");
        }
        Ok(())
    }

    fn resolved_subspace_dim(&self, dim: usize, n: usize, m: usize) -> usize {
        self.subspace_dim
            .unwrap_or_else(|| DEFAULT_SUBSPACE_DIM.min(dim).min(n.min(m).saturating_sub(1)).max(1))
    }
}

/// How a learned model maps features.
#[derive(Debug, Clone)]
pub enum ModelTransform {
    /// Source samples map to `A x`; target samples are unchanged.
    Metric(SpdMatrix),
    Linear(LinearTransform),
}

/// A fitted adaptation: the method, its hyperparameters and the learned map.
#[derive(Debug, Clone)]
pub struct AdaptationModel {
    method: Method,
    params: HyperParams,
    transform: ModelTransform,
}

impl AdaptationModel {
    pub fn method(&self) -> Method {
        self.method
    }

    pub fn params(&self) -> &HyperParams {
        &self.params
    }

    pub fn transform(&self) -> &ModelTransform {
        &self.transform
    }

    /// The learned SPD matrix, for the geometric methods.
    pub fn metric(&self) -> Option<&SpdMatrix> {
        match &self.transform {
            ModelTransform::Metric(a) => Some(a),
            ModelTransform::Linear(_) => None,
        }
    }

    pub fn linear(&self) -> Option<&LinearTransform> {
        match &self.transform {
            ModelTransform::Linear(l) => Some(l),
            ModelTransform::Metric(_) => None,
        }
    }

    pub fn input_dim(&self) -> usize {
        match &self.transform {
            ModelTransform::Metric(a) => a.dim(),
            ModelTransform::Linear(l) => l.input_dim(),
        }
    }

    /// Width of adapted feature rows; smaller than the input for the
    /// subspace baselines.
    pub fn output_dim(&self) -> usize {
        match &self.transform {
            ModelTransform::Metric(a) => a.dim(),
            ModelTransform::Linear(l) => l.matrix().nrows(),
        }
    }
}

/// Intermediate matrices of a geometric solve.
#[derive(Debug, Clone)]
pub struct GcaSolution {
    /// `A_s`, `A_m` or `A_gs`, depending on the method.
    pub source_matrix: SpdMatrix,
    pub target_matrix: SpdMatrix,
    /// The learned `A = source_matrix⁻¹ ♯_t target_matrix`.
    pub metric: SpdMatrix,
}

/// Runs one of the geometric methods and keeps its intermediates.
pub fn solve_geometric(method: Method, source: &DMatrix<f64>, target: &DMatrix<f64>, p: &HyperParams) -> Result<GcaSolution> {
    p.validate()?;
    if source.ncols() != target.ncols() {
        return contract(format!(
            "source has {} features, target has {}",
            source.ncols(),
            target.ncols()
        ));
    }
    let a_s = pairwise_scatter(source, p.eps)?;
    let a_t = pairwise_scatter(target, p.eps)?;
    let source_matrix = match method {
        Method::Gca1 => a_s,
        Method::Gca2 | Method::CascadedGca2 => {
            let penalty = mmd_penalty(source, target)?;
            combine_with_penalty(&a_s, &penalty, combine_mode(method, p), p.eps)?
        }
        Method::Gca3 | Method::CascadedGca3 => {
            let penalty = geometry_penalty(source, target, p)?;
            combine_with_penalty(&a_s, &penalty, combine_mode(method, p), p.eps)?
        }
        other => return contract(format!("{other} is not a geometric-mean method")),
    };
    let metric = weighted_mean(&source_matrix, &a_t, p.t)?;
    Ok(GcaSolution {
        source_matrix,
        target_matrix: a_t,
        metric,
    })
}

fn combine_mode(method: Method, p: &HyperParams) -> Combine {
    match method {
        Method::CascadedGca2 | Method::CascadedGca3 => Combine::Cascaded { gamma: p.gamma },
        _ => Combine::Additive,
    }
}

/// `M⁻¹ ♯_t A_t`, refusing ill-conditioned inputs.
pub fn weighted_mean(source_matrix: &SpdMatrix, a_t: &SpdMatrix, t: f64) -> Result<SpdMatrix> {
    check_conditioning(source_matrix)?;
    check_conditioning(a_t)?;
    sharp_mean(&source_matrix.inverse(), a_t, t)
}

/// `X L Xᵀ` for the two domains.
pub fn mmd_penalty(source: &DMatrix<f64>, target: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let l = mmd_coefficients(source.nrows(), target.nrows())?;
    mmd_penalty_matrix(&stack_domains(source, target)?, &l)
}

/// `X (K + μL) Xᵀ`, expanded blockwise as
/// `X_s K_s⁻¹ X_sᵀ + X_t K_t⁻¹ X_tᵀ + μ X L Xᵀ`.
pub fn geometry_penalty(source: &DMatrix<f64>, target: &DMatrix<f64>, p: &HyperParams) -> Result<DMatrix<f64>> {
    let mut penalty = mmd_penalty(source, target)? * p.mu;
    if p.kernel_term {
        for features in [source, target] {
            if p.k >= features.nrows() {
                return contract(format!(
                    "k = {} neighbours needs more than {} samples per domain",
                    p.k,
                    features.nrows()
                ));
            }
            let kernel = domain_kernel(features, p.k, p.bandwidth, p.num_kept, p.sigma, p.eps)?;
            penalty += features.transpose() * kernel.inverse().as_matrix() * features;
        }
    }
    Ok(crate::spd::symmetrize(&penalty))
}

fn model(method: Method, params: &HyperParams, transform: ModelTransform) -> AdaptationModel {
    AdaptationModel {
        method,
        params: *params,
        transform,
    }
}

pub fn gca1(source: &DMatrix<f64>, target: &DMatrix<f64>, p: &HyperParams) -> Result<AdaptationModel> {
    fit(Method::Gca1, source, target, p)
}

pub fn gca2(source: &DMatrix<f64>, target: &DMatrix<f64>, p: &HyperParams) -> Result<AdaptationModel> {
    fit(Method::Gca2, source, target, p)
}

pub fn cascaded_gca2(source: &DMatrix<f64>, target: &DMatrix<f64>, p: &HyperParams) -> Result<AdaptationModel> {
    fit(Method::CascadedGca2, source, target, p)
}

pub fn gca3(source: &DMatrix<f64>, target: &DMatrix<f64>, p: &HyperParams) -> Result<AdaptationModel> {
    fit(Method::Gca3, source, target, p)
}

pub fn cascaded_gca3(source: &DMatrix<f64>, target: &DMatrix<f64>, p: &HyperParams) -> Result<AdaptationModel> {
    fit(Method::CascadedGca3, source, target, p)
}

/// Fits any method. Only source and target features are consumed; labels
/// never reach the adaptation step.
pub fn fit(method: Method, source: &DMatrix<f64>, target: &DMatrix<f64>, p: &HyperParams) -> Result<AdaptationModel> {
    p.validate()?;
    if source.ncols() != target.ncols() {
        return contract(format!(
            "source has {} features, target has {}",
            source.ncols(),
            target.ncols()
        ));
    }
    if method.is_geometric() {
        let solution = solve_geometric(method, source, target, p)?;
        return Ok(model(method, p, ModelTransform::Metric(solution.metric)));
    }
    let dim = source.ncols();
    let d = p.resolved_subspace_dim(dim, source.nrows(), target.nrows());
    let linear = match method {
        Method::NoAdaptation => baselines::no_adaptation(dim),
        Method::Coral => baselines::coral(source, target, p.eps)?,
        Method::SubspaceAlignment => baselines::subspace_alignment(source, target, d)?,
        Method::BaselineSource => baselines::pca_baseline(source, target, d, PcaBasis::Source)?,
        Method::BaselineTarget => baselines::pca_baseline(source, target, d, PcaBasis::Target)?,
        _ => unreachable!("geometric methods handled above"),
    };
    Ok(model(method, p, ModelTransform::Linear(linear)))
}

/// Maps source samples (rows) into the adapted space.
pub fn adapt_features(model: &AdaptationModel, source_features: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_input(model, source_features)?;
    match &model.transform {
        // rows are samples and A is symmetric: (A x)ᵀ = xᵀ A
        ModelTransform::Metric(a) => Ok(source_features * a.as_matrix()),
        ModelTransform::Linear(l) => l.apply_source(source_features),
    }
}

/// Maps target samples into the same space the adapted source lives in.
pub fn adapt_target_features(model: &AdaptationModel, target_features: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_input(model, target_features)?;
    match &model.transform {
        ModelTransform::Metric(_) => Ok(target_features.clone()),
        ModelTransform::Linear(l) => l.apply_target(target_features),
    }
}

fn check_input(model: &AdaptationModel, features: &DMatrix<f64>) -> Result<()> {
    if features.ncols() != model.input_dim() {
        return contract(format!(
            "features have {} columns, model expects {}",
            features.ncols(),
            model.input_dim()
        ));
    }
    Ok(())
}

/// `ω(A) = tr(A A_s) + tr(A⁻¹ A_t)`
pub fn objective_omega(a: &SpdMatrix, a_s: &SpdMatrix, a_t: &SpdMatrix) -> f64 {
    a.trace_product(a_s.as_matrix()) + a.inverse().trace_product(a_t.as_matrix())
}

/// `ξ(A) = ω(A) + tr(A X L Xᵀ)`
pub fn objective_xi(a: &SpdMatrix, a_s: &SpdMatrix, a_t: &SpdMatrix, mmd_penalty: &DMatrix<f64>) -> f64 {
    objective_omega(a, a_s, a_t) + a.trace_product(mmd_penalty)
}

/// `η(A) = ω(A) + tr(A X (K + μL) Xᵀ)`
pub fn objective_eta(a: &SpdMatrix, a_s: &SpdMatrix, a_t: &SpdMatrix, geometry_penalty: &DMatrix<f64>) -> f64 {
    objective_xi(a, a_s, a_t, geometry_penalty)
}

/// `(1 − t) δ²(A, M⁻¹) + t δ²(A, A_t)`, the weighted objective minimized by
/// `M⁻¹ ♯_t A_t`. With `M = A_s` this is `ω_t`; with `M = A_m` or `A_gs` it
/// is the weighted form of `ξ` or `η`.
pub fn weighted_objective(a: &SpdMatrix, source_matrix: &SpdMatrix, a_t: &SpdMatrix, t: f64) -> f64 {
    (1.0 - t) * riemannian_distance_sq(a, &source_matrix.inverse()) + t * riemannian_distance_sq(a, a_t)
}

/// Euclidean gradient `M − A⁻¹ A_t A⁻¹` of `tr(A M) + tr(A⁻¹ A_t)`.
pub fn objective_gradient(a: &SpdMatrix, source_matrix: &DMatrix<f64>, a_t: &SpdMatrix) -> DMatrix<f64> {
    let inv = a.inverse();
    source_matrix - inv.as_matrix() * a_t.as_matrix() * inv.as_matrix()
}
