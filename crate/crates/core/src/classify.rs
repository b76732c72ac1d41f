//! Standardization and the closed-form classifiers used to score adapted
//! features.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{contract, Error, Result};

pub const STD_FLOOR: f64 = 1e-12;
pub const DEFAULT_RIDGE: f64 = 1.0;

/// Per-dimension mean and population standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    means: DVector<f64>,
    stds: DVector<f64>,
}

impl Standardizer {
    pub fn means(&self) -> &DVector<f64> {
        &self.means
    }

    pub fn stds(&self) -> &DVector<f64> {
        &self.stds
    }

    pub fn apply(&self, features: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        apply_standardizer(self, features)
    }
}

pub fn fit_standardizer(features: &DMatrix<f64>) -> Result<Standardizer> {
    let n = features.nrows();
    if n == 0 {
        return contract("cannot standardize an empty feature matrix");
    }
    let means = features.row_sum().transpose() / n as f64;
    let stds = DVector::from_fn(features.ncols(), |c, _| {
        let mu = means[c];
        let var = features.column(c).iter().map(|x| (x - mu).powi(2)).sum::<f64>() / n as f64;
        var.sqrt().max(STD_FLOOR)
    });
    Ok(Standardizer { means, stds })
}

pub fn apply_standardizer(s: &Standardizer, features: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if features.ncols() != s.means.len() {
        return contract(format!(
            "standardizer fitted on {} dimensions, got {}",
            s.means.len(),
            features.ncols()
        ));
    }
    Ok(DMatrix::from_fn(features.nrows(), features.ncols(), |r, c| {
        (features[(r, c)] - s.means[c]) / s.stds[c]
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    NearestClassMean,
    LinearOneVsRest,
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClassifierKind::NearestClassMean => "nearest_class_mean",
            ClassifierKind::LinearOneVsRest => "linear_one_vs_rest",
        })
    }
}

impl FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "ncm" | "nearest_class_mean" => Ok(ClassifierKind::NearestClassMean),
            "linear" | "ridge" | "linear_one_vs_rest" => Ok(ClassifierKind::LinearOneVsRest),
            other => contract(format!("unknown classifier '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Params {
    /// One centroid per row.
    Centroids(DMatrix<f64>),
    /// One weight vector per column, bias in the last row.
    Weights(DMatrix<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierModel {
    kind: ClassifierKind,
    num_classes: usize,
    params: Params,
}

impl ClassifierModel {
    pub fn kind(&self) -> ClassifierKind {
        self.kind
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    fn dim(&self) -> usize {
        match &self.params {
            Params::Centroids(c) => c.ncols(),
            Params::Weights(w) => w.nrows() - 1,
        }
    }
}

/// Trains a classifier on labeled rows. Labels must cover `0..num_classes`
/// with at least one sample each, and there must be at least two classes.
pub fn train(kind: ClassifierKind, features: &DMatrix<f64>, labels: &[usize], reg: f64) -> Result<ClassifierModel> {
    if features.nrows() != labels.len() {
        return contract(format!(
            "{} samples but {} labels",
            features.nrows(),
            labels.len()
        ));
    }
    let num_classes = labels.iter().max().map_or(0, |m| m + 1);
    if num_classes < 2 {
        return contract("training needs at least two classes");
    }
    let mut counts = vec![0usize; num_classes];
    for &l in labels {
        counts[l] += 1;
    }
    if let Some(empty) = counts.iter().position(|&c| c == 0) {
        return contract(format!("class {empty} has no training samples"));
    }
    if !(reg >= 0.0) {
        return contract(format!("regularization must be nonnegative, got {reg}"));
    }
    let params = match kind {
        ClassifierKind::NearestClassMean => {
            let mut centroids = DMatrix::zeros(num_classes, features.ncols());
            for (row, &l) in features.row_iter().zip(labels) {
                let mut c = centroids.row_mut(l);
                c += row;
            }
            for (k, &count) in counts.iter().enumerate() {
                centroids.row_mut(k).unscale_mut(count as f64);
            }
            Params::Centroids(centroids)
        }
        ClassifierKind::LinearOneVsRest => Params::Weights(ridge_weights(features, labels, num_classes, reg)?),
    };
    Ok(ClassifierModel {
        kind,
        num_classes,
        params,
    })
}

/// Ridge regression onto one-hot targets with an unpenalized bias.
fn ridge_weights(features: &DMatrix<f64>, labels: &[usize], num_classes: usize, reg: f64) -> Result<DMatrix<f64>> {
    let (n, d) = features.shape();
    let mut design = DMatrix::from_element(n, d + 1, 1.0);
    design.columns_mut(0, d).copy_from(features);
    let targets = DMatrix::from_fn(n, num_classes, |r, c| if labels[r] == c { 1.0 } else { 0.0 });
    let mut gram = design.transpose() * &design;
    for i in 0..d {
        gram[(i, i)] += reg;
    }
    // keep the bias direction solvable when reg = 0 and features are degenerate
    gram[(d, d)] += 1e-12 * n as f64;
    let rhs = design.transpose() * targets;
    let solved = match gram.clone().cholesky() {
        Some(chol) => chol.solve(&rhs),
        None => gram
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Data("ridge system is singular; use a positive regularization".into()))?,
    };
    Ok(solved)
}

/// Predicted labels; ties go to the lowest class index.
pub fn predict(model: &ClassifierModel, features: &DMatrix<f64>) -> Result<Vec<usize>> {
    if features.ncols() != model.dim() {
        return contract(format!(
            "classifier expects {} features, got {}",
            model.dim(),
            features.ncols()
        ));
    }
    let preds = match &model.params {
        Params::Centroids(centroids) => features
            .row_iter()
            .map(|x| {
                let dists = centroids.row_iter().map(|c| (x - c).norm_squared());
                arg_best(dists, |a, b| a < b)
            })
            .collect(),
        Params::Weights(w) => {
            let d = model.dim();
            let scores = features * w.rows(0, d) + DMatrix::from_fn(features.nrows(), w.ncols(), |_, c| w[(d, c)]);
            scores
                .row_iter()
                .map(|row| arg_best(row.iter().copied(), |a, b| a > b))
                .collect()
        }
    };
    Ok(preds)
}

fn arg_best(values: impl Iterator<Item = f64>, better: impl Fn(f64, f64) -> bool) -> usize {
    let mut best = 0;
    let mut best_val = f64::NAN;
    for (i, v) in values.enumerate() {
        if i == 0 || better(v, best_val) {
            best = i;
            best_val = v;
        }
    }
    best
}

/// Fraction of matching labels.
pub fn accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    if pred.len() != truth.len() {
        return contract(format!(
            "{} predictions for {} labels",
            pred.len(),
            truth.len()
        ));
    }
    if pred.is_empty() {
        return contract("accuracy of an empty prediction set");
    }
    let hits = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / pred.len() as f64)
}
