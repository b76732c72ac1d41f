//! Comparison methods: no adaptation, CORAL, subspace alignment and the
//! source/target PCA projections.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::covariance::{centered_scatter, empirical_covariance};
use crate::error::{contract, Result};
use crate::spd::{SpdMatrix, SymEig};

pub const DEFAULT_SUBSPACE_DIM: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformKind {
    Identity,
    Coral,
    SubspaceAlignment,
    PcaSource,
    PcaTarget,
}

/// A pair of linear maps, one for each domain. Samples are rows, so a map
/// `T` (dim_out × dim_in) sends a feature matrix `F` to `F Tᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearTransform {
    source: DMatrix<f64>,
    target: DMatrix<f64>,
    kind: TransformKind,
}

impl LinearTransform {
    pub fn kind(&self) -> TransformKind {
        self.kind
    }

    /// Map applied to source samples.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.source
    }

    /// Map applied to target samples.
    pub fn target_matrix(&self) -> &DMatrix<f64> {
        &self.target
    }

    pub fn input_dim(&self) -> usize {
        self.source.ncols()
    }

    pub fn apply_source(&self, features: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        apply(&self.source, features)
    }

    pub fn apply_target(&self, features: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        apply(&self.target, features)
    }
}

fn apply(map: &DMatrix<f64>, features: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if features.ncols() != map.ncols() {
        return contract(format!(
            "features have {} columns, transform expects {}",
            features.ncols(),
            map.ncols()
        ));
    }
    Ok(features * map.transpose())
}

pub fn no_adaptation(dim: usize) -> LinearTransform {
    LinearTransform {
        source: DMatrix::identity(dim, dim),
        target: DMatrix::identity(dim, dim),
        kind: TransformKind::Identity,
    }
}

/// Whiten with `A_s^{-1/2}`, recolor with `A_t^{1/2}`: `W = A_t^{1/2} A_s^{-1/2}`,
/// so that `W A_s Wᵀ = A_t`.
pub fn coral_transform(a_s: &SpdMatrix, a_t: &SpdMatrix) -> Result<DMatrix<f64>> {
    if a_s.dim() != a_t.dim() {
        return contract("CORAL covariances differ in dimension");
    }
    Ok(a_t.sqrt().as_matrix() * a_s.inv_sqrt().as_matrix())
}

/// CORAL from the regularized empirical covariances of both domains.
/// Target samples are left unchanged.
pub fn coral(source: &DMatrix<f64>, target: &DMatrix<f64>, eps: f64) -> Result<LinearTransform> {
    check_dims(source, target)?;
    let a_s = empirical_covariance(source, eps)?;
    let a_t = empirical_covariance(target, eps)?;
    let dim = source.ncols();
    Ok(LinearTransform {
        source: coral_transform(&a_s, &a_t)?,
        target: DMatrix::identity(dim, dim),
        kind: TransformKind::Coral,
    })
}

/// Top-`d` principal directions (dim × d), ordered by descending variance.
/// Each column's largest-magnitude entry is made positive.
pub fn pca_basis(features: &DMatrix<f64>, d: usize) -> Result<DMatrix<f64>> {
    let dim = features.ncols();
    if d == 0 || d > dim {
        return contract(format!("subspace dimension {d} must lie in 1..={dim}"));
    }
    if features.nrows() < 2 {
        return contract("PCA needs at least 2 samples");
    }
    let cov = centered_scatter(features) / (features.nrows() as f64 - 1.0);
    let eig = SymEig::new(&cov)?;
    let vecs = eig.eigenvectors();
    let mut basis = DMatrix::from_fn(dim, d, |r, c| vecs[(r, dim - 1 - c)]);
    for mut col in basis.column_iter_mut() {
        let pivot = col.iamax();
        if col[pivot] < 0.0 {
            col.neg_mut();
        }
    }
    Ok(basis)
}

/// `M* = P_Sᵀ P_T`, the minimizer of `‖P_S M − P_T‖²_F`.
pub fn alignment_matrix(p_s: &DMatrix<f64>, p_t: &DMatrix<f64>) -> DMatrix<f64> {
    p_s.transpose() * p_t
}

/// `‖P_S M − P_T‖²_F`
pub fn alignment_objective(p_s: &DMatrix<f64>, p_t: &DMatrix<f64>, m: &DMatrix<f64>) -> f64 {
    (p_s * m - p_t).norm_squared()
}

/// Subspace alignment: source samples go to `Mᵀ P_Sᵀ x`, target samples to
/// `P_Tᵀ x`, both in the coordinates of the target subspace.
pub fn subspace_alignment(source: &DMatrix<f64>, target: &DMatrix<f64>, d: usize) -> Result<LinearTransform> {
    check_dims(source, target)?;
    let limit = source.nrows().min(target.nrows()) - 1;
    if d > limit {
        return contract(format!(
            "subspace dimension {d} exceeds min(n, m) - 1 = {limit}"
        ));
    }
    let p_s = pca_basis(source, d)?;
    let p_t = pca_basis(target, d)?;
    let m = alignment_matrix(&p_s, &p_t);
    Ok(LinearTransform {
        source: m.transpose() * p_s.transpose(),
        target: p_t.transpose(),
        kind: TransformKind::SubspaceAlignment,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PcaBasis {
    Source,
    Target,
}

/// Projects both domains onto one domain's top-`d` principal subspace.
pub fn pca_baseline(source: &DMatrix<f64>, target: &DMatrix<f64>, d: usize, which: PcaBasis) -> Result<LinearTransform> {
    check_dims(source, target)?;
    let (basis, kind) = match which {
        PcaBasis::Source => (pca_basis(source, d)?, TransformKind::PcaSource),
        PcaBasis::Target => (pca_basis(target, d)?, TransformKind::PcaTarget),
    };
    let proj = basis.transpose();
    Ok(LinearTransform {
        source: proj.clone(),
        target: proj,
        kind,
    })
}

fn check_dims(source: &DMatrix<f64>, target: &DMatrix<f64>) -> Result<()> {
    if source.ncols() != target.ncols() {
        return contract(format!(
            "source has {} features, target has {}",
            source.ncols(),
            target.ncols()
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spd::{relative_error, DEFAULT_EPS};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> SpdMatrix {
        let g = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        SpdMatrix::new(&g * g.transpose() + DMatrix::identity(n, n) * 0.1).unwrap()
    }

    #[test]
    fn coral_diagonal_case() {
        let a_s = SpdMatrix::from_diagonal(&[4.0, 1.0]).unwrap();
        let a_t = SpdMatrix::from_diagonal(&[9.0, 1.0]).unwrap();
        let w = coral_transform(&a_s, &a_t).unwrap();
        assert_relative_eq!(w, DMatrix::from_row_slice(2, 2, &[1.5, 0.0, 0.0, 1.0]), epsilon = 1e-14);
    }

    #[test]
    fn coral_recolors_to_target() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for n in [2, 6, 15] {
            let a_s = random_spd(&mut rng, n);
            let a_t = random_spd(&mut rng, n);
            let w = coral_transform(&a_s, &a_t).unwrap();
            let recolored = &w * a_s.as_matrix() * w.transpose();
            assert!(relative_error(&recolored, a_t.as_matrix()) <= 1e-6);
            let same = coral_transform(&a_s, &a_s).unwrap();
            let back = &same * a_s.as_matrix() * same.transpose();
            assert!(relative_error(&back, a_s.as_matrix()) <= 1e-10);
        }
    }

    #[test]
    fn coral_end_to_end_matches_target_covariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let s = DMatrix::from_fn(60, 3, |_, c| rng.random_range(-1.0..1.0) * (c + 1) as f64);
        let t = DMatrix::from_fn(80, 3, |_, _| rng.random_range(-2.0..2.0));
        let tr = coral(&s, &t, DEFAULT_EPS).unwrap();
        let mapped = tr.apply_source(&s).unwrap();
        let cov_mapped = empirical_covariance(&mapped, DEFAULT_EPS).unwrap();
        let cov_t = empirical_covariance(&t, DEFAULT_EPS).unwrap();
        assert!(relative_error(cov_mapped.as_matrix(), cov_t.as_matrix()) <= 1e-5);
        assert_eq!(tr.apply_target(&t).unwrap(), t);
    }

    #[test]
    fn identical_domains_align_to_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let s = DMatrix::from_fn(30, 6, |_, c| rng.random_range(-1.0..1.0) * (6 - c) as f64);
        let p = pca_basis(&s, 3).unwrap();
        let m = alignment_matrix(&p, &p);
        assert!((m - DMatrix::identity(3, 3)).amax() <= 1e-12);
    }

    #[test]
    fn orthogonal_subspaces_give_zero_alignment() {
        let p_s = DMatrix::from_row_slice(3, 1, &[1.0, 0.0, 0.0]);
        let p_t = DMatrix::from_row_slice(3, 1, &[0.0, 1.0, 0.0]);
        assert_eq!(alignment_matrix(&p_s, &p_t), DMatrix::zeros(1, 1));
    }

    #[test]
    fn alignment_beats_random_probes() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let s = DMatrix::from_fn(40, 5, |_, _| rng.random_range(-1.0..1.0));
        let t = DMatrix::from_fn(40, 5, |_, c| rng.random_range(-1.0..1.0) * (c + 1) as f64);
        let (p_s, p_t) = (pca_basis(&s, 2).unwrap(), pca_basis(&t, 2).unwrap());
        let m = alignment_matrix(&p_s, &p_t);
        let best = alignment_objective(&p_s, &p_t, &m);
        for _ in 0..100 {
            let probe = DMatrix::from_fn(2, 2, |_, _| rng.random_range(-2.0..2.0));
            assert!(best <= alignment_objective(&p_s, &p_t, &probe) + 1e-12);
        }
    }

    #[test]
    fn subspace_dimension_limits() {
        let s = DMatrix::from_fn(4, 6, |r, c| (r * c) as f64);
        let t = DMatrix::from_fn(5, 6, |r, c| (r + c) as f64);
        assert!(subspace_alignment(&s, &t, 4).is_err());
        assert!(pca_baseline(&s, &t, 7, PcaBasis::Source).is_err());
    }

    #[test]
    fn pca_collapses_to_dominant_axis() {
        let s = DMatrix::from_row_slice(4, 2, &[-3.0, 0.0, -1.0, 0.0, 1.0, 0.0, 3.0, 0.0]);
        let tr = pca_baseline(&s, &s, 1, PcaBasis::Source).unwrap();
        let out = tr.apply_source(&DMatrix::from_row_slice(2, 2, &[2.0, 5.0, -1.0, 7.0])).unwrap();
        assert_relative_eq!(out, DMatrix::from_row_slice(2, 1, &[2.0, -1.0]), epsilon = 1e-12);
    }

    #[test]
    fn full_dimension_pca_is_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(45);
        let s = DMatrix::from_fn(20, 4, |_, _| rng.random_range(-1.0..1.0));
        let p = pca_basis(&s, 4).unwrap();
        assert!((p.transpose() * &p - DMatrix::identity(4, 4)).amax() <= 1e-12);
    }

    #[test]
    fn no_adaptation_is_identity() {
        let x = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let na = no_adaptation(3);
        assert_eq!(na.apply_source(&x).unwrap(), x);
        assert_eq!(na.apply_target(&x).unwrap(), x);
    }
}
