//! Unsupervised domain adaptation through weighted geometric means of
//! symmetric positive definite matrices.
//!
//! A labeled source domain is aligned with an unlabeled target domain by
//! learning a Mahalanobis matrix `A` in closed form: `A` is a point on the
//! affine-invariant geodesic between the inverse of a source matrix and the
//! target scatter matrix. The source matrix is either the plain pairwise
//! scatter (GCA1), that scatter combined with a mean-discrepancy penalty
//! (GCA2), or additionally with a graph diffusion penalty (GCA3); the
//! combination is an ordinary sum or, in the cascaded variants, a second
//! geodesic mean.
//!
//! Module map:
//!
//! - [`spd`]: SPD matrices, matrix functions, sharp means, Riccati solver, distance.
//! - [`covariance`]: datasets and scatter/covariance estimators.
//! - [`mmd`]: maximum mean discrepancy coefficients and penalties.
//! - [`diffusion`]: kNN graphs, random-walk spectra and diffusion kernels.
//! - [`gca`]: the adaptation algorithms and their objectives.
//! - [`baselines`]: CORAL, subspace alignment, PCA projections, no adaptation.
//! - [`classify`]: standardization and closed-form classifiers.
//! - [`dataio`]: CSV ingestion and synthetic domain-shift generation.
//! - [`protocol`]: the randomized-trial evaluation runner and reports.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod classify;
pub mod covariance;
pub mod dataio;
pub mod diffusion;
pub mod error;
pub mod gca;
pub mod mmd;
pub mod protocol;
pub mod spd;

pub use error::{Error, Result};

pub use spd::{SpdMatrix, SymEig};
pub use gca::{AdaptationModel, HyperParams, Method};
