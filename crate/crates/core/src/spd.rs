//! Symmetric positive definite matrices and the affine-invariant geometry
//! on them.
//!
//! Every matrix function here goes through a symmetric eigendecomposition:
//! for `M = V diag(λ) Vᵀ`, `f(M) = V diag(f(λ)) Vᵀ`. An [`SpdMatrix`] keeps
//! its decomposition alongside the entries so that powers, inverses and
//! square roots of the same matrix share one factorization.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{contract, Error, Result};

/// Relative symmetry tolerance: `max|M − Mᵀ| ≤ SYM_TOL · max|M|`.
pub const SYM_TOL: f64 = 1e-9;

/// Largest condition number accepted by [`riccati_solve`] and the
/// adaptation algorithms built on it.
pub const COND_MAX: f64 = 1e12;

/// Default regularization strength.
pub const DEFAULT_EPS: f64 = 1e-6;

/// Eigendecomposition of a symmetric matrix with eigenvalues in ascending
/// order. Column `i` of `eigenvectors` pairs with `eigenvalues[i]`.
#[derive(Debug, Clone)]
pub struct SymEig {
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
}

impl SymEig {
    /// Decomposes `(M + Mᵀ)/2`.
    pub fn new(m: &DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return contract(format!(
                "eigendecomposition needs a square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            ));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("matrix has non-finite entries".into()));
        }
        let sym = symmetrize(m);
        let max_iter = 10_000 + 100 * sym.nrows();
        let eig = SymmetricEigen::try_new(sym.clone(), f64::EPSILON, max_iter).ok_or_else(|| {
            Error::EigenFailure {
                condition: condition_estimate(&sym),
            }
        })?;
        Ok(Self::sorted(eig.eigenvalues, eig.eigenvectors))
    }

    fn sorted(values: DVector<f64>, vectors: DMatrix<f64>) -> Self {
        let n = values.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let eigenvalues = DVector::from_iterator(n, order.iter().map(|&i| values[i]));
        let eigenvectors = DMatrix::from_fn(vectors.nrows(), n, |r, c| vectors[(r, order[c])]);
        SymEig {
            eigenvalues,
            eigenvectors,
        }
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    /// `V diag(f(λ)) Vᵀ`, symmetrized.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let v = &self.eigenvectors;
        let mut scaled = v.clone();
        for (j, lambda) in self.eigenvalues.iter().enumerate() {
            let fj = f(*lambda);
            scaled.column_mut(j).scale_mut(fj);
        }
        symmetrize(&(scaled * v.transpose()))
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        self.map(|x| x)
    }

    fn map_values(&self, f: impl Fn(f64) -> f64) -> SymEig {
        SymEig::sorted(self.eigenvalues.map(f), self.eigenvectors.clone())
    }
}

/// A symmetric matrix with a certified strictly positive spectrum.
///
/// Instances are immutable. Construction symmetrizes the input and rejects
/// anything whose smallest eigenvalue is not positive; use [`regularize`]
/// to promote a semidefinite matrix.
#[derive(Debug, Clone)]
pub struct SpdMatrix {
    mat: DMatrix<f64>,
    eig: SymEig,
}

impl SpdMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return contract(format!(
                "SPD matrix must be square and non-empty, got {}x{}",
                m.nrows(),
                m.ncols()
            ));
        }
        let asymmetry = relative_asymmetry(&m);
        if asymmetry > SYM_TOL {
            return Err(Error::NotSymmetric { asymmetry });
        }
        let eig = SymEig::new(&m)?;
        Self::certified(symmetrize(&m), eig)
    }

    pub fn identity(dim: usize) -> Self {
        let eig = SymEig {
            eigenvalues: DVector::from_element(dim, 1.0),
            eigenvectors: DMatrix::identity(dim, dim),
        };
        SpdMatrix {
            mat: DMatrix::identity(dim, dim),
            eig,
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    /// Builds from a result of exact-arithmetic-symmetric computation that may
    /// carry roundoff asymmetry. Still certifies positivity.
    pub(crate) fn from_computed(m: DMatrix<f64>) -> Result<Self> {
        let sym = symmetrize(&m);
        let eig = SymEig::new(&sym)?;
        Self::certified(sym, eig)
    }

    fn from_eig(eig: SymEig) -> Result<Self> {
        let mat = eig.reconstruct();
        Self::certified(mat, eig)
    }

    fn certified(mat: DMatrix<f64>, eig: SymEig) -> Result<Self> {
        let min = eig.eigenvalues[0];
        if min.is_nan() || min <= 0.0 {
            return Err(Error::NotPositiveDefinite { min_eigenvalue: min });
        }
        Ok(SpdMatrix { mat, eig })
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.mat
    }

    pub fn eig(&self) -> &SymEig {
        &self.eig
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eig.eigenvalues[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eig.eigenvalues[self.dim() - 1]
    }

    pub fn condition_number(&self) -> f64 {
        self.max_eigenvalue() / self.min_eigenvalue()
    }

    /// `M^p` for any real `p`.
    pub fn pow(&self, p: f64) -> Result<SpdMatrix> {
        if p == 1.0 {
            return Ok(self.clone());
        }
        if p == 0.0 {
            return Ok(SpdMatrix::identity(self.dim()));
        }
        Self::from_eig(self.eig.map_values(|x| x.powf(p)))
    }

    pub fn sqrt(&self) -> SpdMatrix {
        self.pow(0.5).expect("square root of an SPD matrix is SPD")
    }

    pub fn inv_sqrt(&self) -> SpdMatrix {
        self.pow(-0.5).expect("inverse square root of an SPD matrix is SPD")
    }

    pub fn inverse(&self) -> SpdMatrix {
        self.pow(-1.0).expect("inverse of an SPD matrix is SPD")
    }

    /// Principal matrix logarithm (a general symmetric matrix).
    pub fn log(&self) -> DMatrix<f64> {
        self.eig.map(f64::ln)
    }

    /// `G M Gᵀ` for an invertible `G`.
    pub fn congruence(&self, g: &DMatrix<f64>) -> Result<SpdMatrix> {
        if g.ncols() != self.dim() {
            return contract(format!(
                "congruence factor has {} columns, matrix is {}-dimensional",
                g.ncols(),
                self.dim()
            ));
        }
        Self::from_computed(g * &self.mat * g.transpose())
    }

    /// Trace of `self · other` without forming the product.
    pub fn trace_product(&self, other: &DMatrix<f64>) -> f64 {
        self.mat.component_mul(&other.transpose()).sum()
    }
}

/// `M^p` through the eigendecomposition of `M`.
pub fn spd_pow(m: &SpdMatrix, p: f64) -> Result<SpdMatrix> {
    m.pow(p)
}

/// Point at parameter `t` on the affine-invariant geodesic from `x` to `y`:
/// `x^{1/2} (x^{-1/2} y x^{-1/2})^t x^{1/2}`.
pub fn sharp_mean(x: &SpdMatrix, y: &SpdMatrix, t: f64) -> Result<SpdMatrix> {
    if x.dim() != y.dim() {
        return contract(format!(
            "sharp mean of {}x{} and {}x{} matrices",
            x.dim(),
            x.dim(),
            y.dim(),
            y.dim()
        ));
    }
    if !(0.0..=1.0).contains(&t) {
        return contract(format!("geodesic parameter t = {t} outside [0, 1]"));
    }
    if t == 0.0 {
        return Ok(x.clone());
    }
    if t == 1.0 {
        return Ok(y.clone());
    }
    let x_half = x.sqrt();
    let x_neg_half = x.inv_sqrt();
    let inner = SpdMatrix::from_computed(x_neg_half.as_matrix() * y.as_matrix() * x_neg_half.as_matrix())?;
    let inner_t = inner.pow(t)?;
    SpdMatrix::from_computed(x_half.as_matrix() * inner_t.as_matrix() * x_half.as_matrix())
}

/// Unique SPD solution of `A · a_s · A = a_t`, i.e. `a_s⁻¹ ♯_{1/2} a_t`.
pub fn riccati_solve(a_s: &SpdMatrix, a_t: &SpdMatrix) -> Result<SpdMatrix> {
    check_conditioning(a_s)?;
    check_conditioning(a_t)?;
    sharp_mean(&a_s.inverse(), a_t, 0.5)
}

pub(crate) fn check_conditioning(m: &SpdMatrix) -> Result<()> {
    let condition = m.condition_number();
    if !(condition <= COND_MAX) {
        return Err(Error::IllConditioned {
            condition,
            limit: COND_MAX,
        });
    }
    Ok(())
}

/// Squared affine-invariant distance `‖log(y^{-1/2} x y^{-1/2})‖²_F`,
/// evaluated from the generalized eigenvalues of the pencil `(x, y)`.
pub fn riemannian_distance_sq(x: &SpdMatrix, y: &SpdMatrix) -> f64 {
    assert_eq!(x.dim(), y.dim(), "distance between matrices of different size");
    let pencil = match y.as_matrix().clone().cholesky() {
        Some(chol) => {
            let l = chol.l();
            let half = l
                .solve_lower_triangular(x.as_matrix())
                .expect("Cholesky factor is nonsingular");
            let full = l
                .solve_lower_triangular(&half.transpose())
                .expect("Cholesky factor is nonsingular");
            symmetrize(&full)
        }
        None => {
            let w = y.inv_sqrt();
            symmetrize(&(w.as_matrix() * x.as_matrix() * w.as_matrix()))
        }
    };
    pencil
        .symmetric_eigenvalues()
        .iter()
        .map(|l| l.ln().powi(2))
        .sum()
}

/// Promotes a symmetric (possibly semidefinite or slightly indefinite)
/// matrix to SPD: `(M + Mᵀ)/2 + eps · s · I`, where `s` is the mean of the
/// diagonal (1 when that mean is not positive). Any negative eigenvalue is
/// lifted first so the smallest eigenvalue of the result is at least
/// `eps · s`.
pub fn regularize(m: &DMatrix<f64>, eps: f64) -> Result<SpdMatrix> {
    if !(eps > 0.0) {
        return contract(format!("regularization eps must be positive, got {eps}"));
    }
    let sym = symmetrize(m);
    let eig = SymEig::new(&sym)?;
    let n = sym.nrows();
    let mean_diag = sym.diagonal().iter().sum::<f64>() / n as f64;
    let scale = if mean_diag > 0.0 { mean_diag } else { 1.0 };
    let lift = (-eig.eigenvalues[0]).max(0.0);
    let shift = eps * scale + lift;
    let mut mat = sym;
    for i in 0..n {
        mat[(i, i)] += shift;
    }
    let eig = eig.map_values(|x| x + shift);
    SpdMatrix::certified(mat, eig)
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

fn relative_asymmetry(m: &DMatrix<f64>) -> f64 {
    let max_abs = m.amax();
    if max_abs == 0.0 {
        return 0.0;
    }
    (m - m.transpose()).amax() / max_abs
}

fn condition_estimate(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().singular_values();
    let max = sv.max();
    let min = sv.min();
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}

/// Relative Frobenius distance `‖a − b‖_F / ‖b‖_F`.
pub fn relative_error(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm()
}
