//! Feature files and synthetic domain-shift data.
//!
//! CSV layout: a header row is required. A column named `label` holds
//! nonnegative integer class labels; every other column is a feature, in
//! file order.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::covariance::DomainDataset;
use crate::error::{contract, Error, Result};

pub const LABEL_COLUMN: &str = "label";

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Reads a feature CSV. `label_column` names the label column; `None` uses
/// `label` when present and otherwise loads the file unlabeled.
pub fn load_features_csv(path: &Path, label_column: Option<&str>) -> Result<DomainDataset> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(file);
    let headers = reader
        .headers()
        .map_err(|e| Error::Data(format!("{}: cannot read header: {e}", path.display())))?
        .clone();
    let label_idx = match label_column {
        Some(name) => Some(headers.iter().position(|h| h.trim() == name).ok_or_else(|| {
            Error::Data(format!("{}: no column named '{name}'", path.display()))
        })?),
        None => headers.iter().position(|h| h.trim() == LABEL_COLUMN),
    };
    let width = headers.len();
    let num_features = width - usize::from(label_idx.is_some());
    if num_features == 0 {
        return Err(Error::Data(format!("{}: no feature columns", path.display())));
    }

    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut rows = 0usize;
    for record in reader.records() {
        let record = record.map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
        let line = record.position().map_or(rows + 2, |p| p.line() as usize);
        if record.len() != width {
            return Err(Error::Data(format!(
                "{}: line {line} has {} fields, header has {width}",
                path.display(),
                record.len()
            )));
        }
        for (col, field) in record.iter().enumerate() {
            let field = field.trim();
            let value: f64 = field.parse().map_err(|_| {
                Error::Data(format!(
                    "{}: line {line}, column {} ('{}'): cannot parse '{field}' as a number",
                    path.display(),
                    col + 1,
                    &headers[col]
                ))
            })?;
            if !value.is_finite() {
                return Err(Error::Data(format!(
                    "{}: line {line}, column {} ('{}'): non-finite value '{field}'",
                    path.display(),
                    col + 1,
                    &headers[col]
                )));
            }
            if Some(col) == label_idx {
                if value < 0.0 || value.fract() != 0.0 {
                    return Err(Error::Data(format!(
                        "{}: line {line}: label '{field}' is not a nonnegative integer",
                        path.display()
                    )));
                }
                labels.push(value as usize);
            } else {
                values.push(value);
            }
        }
        rows += 1;
    }
    let features = DMatrix::from_row_slice(rows, num_features, &values);
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    DomainDataset::new(name, features, label_idx.map(|_| labels))
}

/// Writes a dataset in the layout read by [`load_features_csv`]. Floats use
/// the shortest representation that parses back to the same value.
pub fn write_features_csv(path: &Path, data: &DomainDataset) -> Result<()> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut writer = std::io::BufWriter::new(file);
    let mut header: Vec<String> = (0..data.dim()).map(|i| format!("f{i}")).collect();
    if data.labels().is_some() {
        header.push(LABEL_COLUMN.to_string());
    }
    let write = |w: &mut std::io::BufWriter<File>, line: String| w.write_all(line.as_bytes()).map_err(|e| io_err(path, e));
    write(&mut writer, header.join(",") + "\n")?;
    for (r, row) in data.features().row_iter().enumerate() {
        let mut fields: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        if let Some(labels) = data.labels() {
            fields.push(labels[r].to_string());
        }
        write(&mut writer, fields.join(",") + "\n")?;
    }
    writer.flush().map_err(|e| io_err(path, e))
}

/// `<data_root>/<domain>.csv`, or `domain` itself when it names an existing
/// file.
pub fn resolve_domain(data_root: Option<&Path>, domain: &str) -> Result<PathBuf> {
    let direct = PathBuf::from(domain);
    let mut tried = Vec::new();
    if direct.extension().is_some() {
        if direct.is_file() {
            return Ok(direct);
        }
        tried.push(direct.clone());
    }
    let root = data_root.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
    let candidate = root.join(format!("{domain}.csv"));
    if candidate.is_file() {
        return Ok(candidate);
    }
    tried.push(candidate);
    let listed: Vec<String> = tried.iter().map(|p| p.display().to_string()).collect();
    Err(Error::Data(format!(
        "dataset '{domain}' not found; searched: {}",
        listed.join(", ")
    )))
}

/// Parameters of a synthetic source/target pair.
///
/// Source classes are isotropic Gaussian blobs with means spaced
/// `class_spacing` apart along the first axis. A target sample is drawn the
/// same way, rotated by `rotation_angle` in the plane of the first two axes
/// (rotating the class means and the shared covariance together), then
/// translated by `mean_shift`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticShiftSpec {
    pub dim: usize,
    pub num_classes: usize,
    pub n_source: usize,
    pub n_target: usize,
    /// Per-dimension target translation; empty means no shift.
    pub mean_shift: Vec<f64>,
    /// Radians.
    pub rotation_angle: f64,
    pub noise_scale: f64,
    pub class_spacing: f64,
    pub seed: u64,
}

impl Default for SyntheticShiftSpec {
    fn default() -> Self {
        SyntheticShiftSpec {
            dim: 10,
            num_classes: 3,
            n_source: 200,
            n_target: 200,
            mean_shift: Vec::new(),
            rotation_angle: std::f64::consts::FRAC_PI_3,
            noise_scale: 1.0,
            class_spacing: 3.0,
            seed: 0,
        }
    }
}

impl SyntheticShiftSpec {
    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return contract(format!("synthetic data needs dim >= 2, got {}", self.dim));
        }
        if self.num_classes < 2 {
            return contract("synthetic data needs at least 2 classes");
        }
        if self.n_source < self.num_classes || self.n_target < self.num_classes {
            return contract("each domain needs at least one sample per class");
        }
        if !self.mean_shift.is_empty() && self.mean_shift.len() != self.dim {
            return contract(format!(
                "mean_shift has {} entries for dim {}",
                self.mean_shift.len(),
                self.dim
            ));
        }
        if !(self.noise_scale > 0.0) || !(self.class_spacing > 0.0) {
            return contract("noise_scale and class_spacing must be positive");
        }
        if !self.rotation_angle.is_finite() || self.mean_shift.iter().any(|v| !v.is_finite()) {
            return contract("rotation angle and shift must be finite");
        }
        Ok(())
    }

    fn class_mean(&self, class: usize) -> f64 {
        self.class_spacing * (class as f64 - (self.num_classes as f64 - 1.0) / 2.0)
    }
}

/// Deterministic source/target pair for `spec`; both carry labels.
pub fn generate_synthetic_shift(spec: &SyntheticShiftSpec) -> Result<(DomainDataset, DomainDataset)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (cos, sin) = (spec.rotation_angle.cos(), spec.rotation_angle.sin());
    let mut draw = |n: usize, target: bool| {
        let labels: Vec<usize> = (0..n).map(|i| i % spec.num_classes).collect();
        let mut x = DMatrix::zeros(n, spec.dim);
        for (r, &label) in labels.iter().enumerate() {
            for c in 0..spec.dim {
                let z: f64 = StandardNormal.sample(&mut rng);
                x[(r, c)] = spec.noise_scale * z;
            }
            x[(r, 0)] += spec.class_mean(label);
            if target {
                let (a, b) = (x[(r, 0)], x[(r, 1)]);
                x[(r, 0)] = cos * a - sin * b;
                x[(r, 1)] = sin * a + cos * b;
                for (c, shift) in spec.mean_shift.iter().enumerate() {
                    x[(r, c)] += shift;
                }
            }
        }
        (x, labels)
    };
    let (xs, ys) = draw(spec.n_source, false);
    let (xt, yt) = draw(spec.n_target, true);
    Ok((
        DomainDataset::new("synthetic-source", xs, Some(ys))?,
        DomainDataset::new("synthetic-target", xt, Some(yt))?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    #[test]
    fn parse_small_labeled_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        fs::write(&p, "a,b,label\n1.5,2,0\n-3,4e1,1\n").unwrap();
        let d = load_features_csv(&p, None).unwrap();
        assert_eq!(d.features(), &DMatrix::from_row_slice(2, 2, &[1.5, 2.0, -3.0, 40.0]));
        assert_eq!(d.labels(), Some(&[0usize, 1][..]));
        assert_eq!(d.name(), "d");
    }

    #[test]
    fn label_column_may_be_anywhere_or_absent() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        fs::write(&p, "y,a\n1,0.5\n0,0.25\n").unwrap();
        let d = load_features_csv(&p, Some("y")).unwrap();
        assert_eq!(d.features(), &DMatrix::from_row_slice(2, 1, &[0.5, 0.25]));
        assert_eq!(d.labels(), Some(&[1usize, 0][..]));
        let unlabeled = load_features_csv(&p, None).unwrap();
        assert!(unlabeled.labels().is_none());
        assert_eq!(unlabeled.dim(), 2);
        assert!(load_features_csv(&p, Some("label")).is_err());
    }

    #[test]
    fn nan_is_reported_with_position() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.csv");
        fs::write(&p, "a,b,label\n1,2,0\n3,NaN,1\n").unwrap();
        let err = load_features_csv(&p, None).unwrap_err().to_string();
        assert!(err.contains("line 3") && err.contains("column 2"), "{err}");
    }

    #[test]
    fn ragged_and_garbage_rows_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.csv");
        fs::write(&p, "a,b\n1,2\n3\n").unwrap();
        assert!(load_features_csv(&p, None).unwrap_err().to_string().contains("line 3"));
        fs::write(&p, "a,label\n1,x\n2,0\n").unwrap();
        assert!(load_features_csv(&p, None).is_err());
        fs::write(&p, "a,label\n1,0.5\n2,0\n").unwrap();
        assert!(load_features_csv(&p, None).is_err());
    }

    #[test]
    fn write_then_read_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("rt.csv");
        let spec = SyntheticShiftSpec { n_source: 17, n_target: 9, ..Default::default() };
        let (s, _) = generate_synthetic_shift(&spec).unwrap();
        write_features_csv(&p, &s).unwrap();
        let back = load_features_csv(&p, None).unwrap();
        assert_eq!(back.features(), s.features());
        assert_eq!(back.labels(), s.labels());
    }

    #[test]
    fn synthetic_is_deterministic() {
        let spec = SyntheticShiftSpec { seed: 9, ..Default::default() };
        let a = generate_synthetic_shift(&spec).unwrap();
        let b = generate_synthetic_shift(&spec).unwrap();
        assert_eq!(a, b);
        let other = generate_synthetic_shift(&SyntheticShiftSpec { seed: 10, ..spec }).unwrap();
        assert_ne!(a.0, other.0);
    }

    #[test]
    fn synthetic_shift_moves_target_mean() {
        let spec = SyntheticShiftSpec {
            dim: 3,
            n_target: 3000,
            rotation_angle: 0.0,
            mean_shift: vec![0.0, 0.0, 5.0],
            ..Default::default()
        };
        let (_, t) = generate_synthetic_shift(&spec).unwrap();
        let mean = crate::covariance::column_mean(t.features());
        assert!((mean[2] - 5.0).abs() < 0.1);
        assert!(mean[0].abs() < 0.2);
    }

    #[test]
    fn resolve_reports_search_paths() {
        let dir = tempfile::tempdir().unwrap();
        let err = resolve_domain(Some(dir.path()), "amazon").unwrap_err().to_string();
        assert!(err.contains("amazon.csv"), "{err}");
        fs::write(dir.path().join("amazon.csv"), "a\n1\n2\n").unwrap();
        assert_eq!(resolve_domain(Some(dir.path()), "amazon").unwrap(), dir.path().join("amazon.csv"));
    }

    #[test]
    fn invalid_spec_rejected() {
        assert!(generate_synthetic_shift(&SyntheticShiftSpec { dim: 1, ..Default::default() }).is_err());
        assert!(generate_synthetic_shift(&SyntheticShiftSpec { mean_shift: vec![1.0], ..Default::default() }).is_err());
    }
}
