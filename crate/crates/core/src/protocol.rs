//! Randomized-trial evaluation of adaptation methods and report handling.
//!
//! Each trial samples a fixed number of labeled source images per class,
//! standardizes the sampled source together with the full target set, fits
//! every (method, hyperparameter) pair on source and target features, trains
//! a classifier on the adapted source and scores it on all target samples.
//! Trial `i` draws from its own ChaCha stream derived from the master seed,
//! so results do not depend on scheduling or on which methods are run.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{accuracy, fit_standardizer, predict, train, ClassifierKind, DEFAULT_RIDGE};
use crate::covariance::DomainDataset;
use crate::error::{contract, Error, Result};
use crate::gca::{adapt_features, adapt_target_features, fit, HyperParams, Method};

/// Source samples per class when the source domain is DSLR.
pub const DSLR_SAMPLES_PER_CLASS: usize = 8;
/// Source samples per class for every other domain.
pub const DEFAULT_SAMPLES_PER_CLASS: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransferTask {
    pub source_name: String,
    pub target_name: String,
    pub trials: usize,
    /// `None` picks 8 for a DSLR source and 20 otherwise.
    pub samples_per_class: Option<usize>,
    pub seed: u64,
}

impl TransferTask {
    pub fn validate(&self) -> Result<()> {
        if self.source_name == self.target_name {
            return contract(format!(
                "source and target are both '{}'",
                self.source_name
            ));
        }
        if self.trials == 0 {
            return contract("at least one trial is required");
        }
        if self.samples_per_class == Some(0) {
            return contract("samples_per_class must be positive");
        }
        Ok(())
    }

    pub fn resolved_samples_per_class(&self) -> usize {
        self.samples_per_class.unwrap_or_else(|| default_samples_per_class(&self.source_name))
    }
}

pub fn default_samples_per_class(domain: &str) -> usize {
    if domain.eq_ignore_ascii_case("dslr") {
        DSLR_SAMPLES_PER_CLASS
    } else {
        DEFAULT_SAMPLES_PER_CLASS
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub classifier: ClassifierKind,
    pub ridge: f64,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            classifier: ClassifierKind::NearestClassMean,
            ridge: DEFAULT_RIDGE,
        }
    }
}

/// Fixed implementation choices recorded with every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub scatter_normalization: String,
    pub baseline_covariance: String,
    pub adaptation_transform: String,
    pub standardization: String,
    pub classifier: ClassifierKind,
    pub ridge: f64,
    pub samples_per_class: usize,
    pub source_sampling: String,
}

impl ReportMetadata {
    fn new(config: &ProtocolConfig, samples_per_class: usize) -> Self {
        ReportMetadata {
            scatter_normalization: "all unordered pairs, divided by n(n-1)/2".into(),
            baseline_covariance: "unbiased sample covariance".into(),
            adaptation_transform: "x -> A x on source samples".into(),
            standardization: "joint: sampled source and full target, population std".into(),
            classifier: config.classifier,
            ridge: config.ridge,
            samples_per_class,
            source_sampling: "per-class without replacement; all samples when a class is smaller".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub task: TransferTask,
    pub method: Method,
    pub params: HyperParams,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub per_trial: Vec<f64>,
    pub metadata: ReportMetadata,
}

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Cartesian product of `t`, `gamma` and `mu` values over a base setting,
/// ordered with `t` slowest.
pub fn params_grid(base: &HyperParams, ts: &[f64], gammas: &[f64], mus: &[f64]) -> Vec<HyperParams> {
    let or_base = |v: &[f64], b: f64| if v.is_empty() { vec![b] } else { v.to_vec() };
    let (ts, gammas, mus) = (or_base(ts, base.t), or_base(gammas, base.gamma), or_base(mus, base.mu));
    let mut grid = Vec::with_capacity(ts.len() * gammas.len() * mus.len());
    for &t in &ts {
        for &gamma in &gammas {
            for &mu in &mus {
                grid.push(HyperParams { t, gamma, mu, ..*base });
            }
        }
    }
    grid
}

/// The grid points that matter to `method`: parameters the method ignores
/// are reset to `base` and duplicates dropped, keeping first-seen order.
pub fn grid_for_method(method: Method, base: &HyperParams, grid: &[HyperParams]) -> Vec<HyperParams> {
    let (uses_t, uses_gamma, uses_mu) = match method {
        Method::Gca1 | Method::Gca2 => (true, false, false),
        Method::CascadedGca2 => (true, true, false),
        Method::Gca3 => (true, false, true),
        Method::CascadedGca3 => (true, true, true),
        _ => (false, false, false),
    };
    let mut out: Vec<HyperParams> = Vec::new();
    for p in grid {
        let q = HyperParams {
            t: if uses_t { p.t } else { base.t },
            gamma: if uses_gamma { p.gamma } else { base.gamma },
            mu: if uses_mu { p.mu } else { base.mu },
            ..*p
        };
        if !out.contains(&q) {
            out.push(q);
        }
    }
    out
}

/// Random stream for trial `trial` of a run seeded with `seed`.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// Row indices of a per-class sample, grouped by class.
pub fn sample_per_class(labels: &[usize], per_class: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let num_classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut picked = Vec::new();
    for class in 0..num_classes {
        let mut members: Vec<usize> = labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == class)
            .map(|(i, _)| i)
            .collect();
        members.shuffle(rng);
        members.truncate(per_class);
        picked.extend(members);
    }
    picked
}

/// Scores one method on one (source, target) split. `target_features` and
/// `target_labels` are kept apart so the labels only reach the scorer.
pub fn evaluate(
    method: Method,
    params: &HyperParams,
    source: &DomainDataset,
    target_features: &DMatrix<f64>,
    target_labels: &[usize],
    config: &ProtocolConfig,
) -> Result<f64> {
    let source_labels = source
        .labels()
        .ok_or_else(|| Error::Data(format!("source domain '{}' has no labels", source.name())))?;
    let model = fit(method, source.features(), target_features, params)?;
    let adapted_source = adapt_features(&model, source.features())?;
    let adapted_target = adapt_target_features(&model, target_features)?;
    let classifier = train(config.classifier, &adapted_source, source_labels, config.ridge)?;
    accuracy(&predict(&classifier, &adapted_target)?, target_labels)
}

/// Standardizes `source` and `target` with statistics from both.
pub fn standardize_jointly(source: &DomainDataset, target: &DMatrix<f64>) -> Result<(DomainDataset, DMatrix<f64>)> {
    if source.dim() != target.ncols() {
        return contract(format!(
            "source has {} features, target has {}",
            source.dim(),
            target.ncols()
        ));
    }
    let mut both = DMatrix::zeros(source.num_samples() + target.nrows(), source.dim());
    both.rows_mut(0, source.num_samples()).copy_from(source.features());
    both.rows_mut(source.num_samples(), target.nrows()).copy_from(target);
    let s = fit_standardizer(&both)?;
    Ok((source.with_features(s.apply(source.features())?)?, s.apply(target)?))
}

/// Runs every method over every grid point for `task.trials` trials.
/// Reports come back method-major, then in grid order.
pub fn run_protocol(
    task: &TransferTask,
    source: &DomainDataset,
    target: &DomainDataset,
    methods: &[Method],
    grid: &[HyperParams],
    config: &ProtocolConfig,
) -> Result<Vec<EvalReport>> {
    task.validate()?;
    if methods.is_empty() || grid.is_empty() {
        return contract("need at least one method and one grid point");
    }
    for p in grid {
        p.validate()?;
    }
    let source_labels = source
        .labels()
        .ok_or_else(|| Error::Data(format!("source domain '{}' has no labels", source.name())))?;
    let target_labels = target
        .labels()
        .ok_or_else(|| Error::Data(format!("target domain '{}' needs labels for scoring", target.name())))?;
    let per_class = task.resolved_samples_per_class();
    let combos: Vec<(Method, &HyperParams)> = methods
        .iter()
        .flat_map(|&m| grid.iter().map(move |p| (m, p)))
        .collect();

    let trials: Vec<Vec<f64>> = (0..task.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(task.seed, trial);
            let picked = sample_per_class(source_labels, per_class, &mut rng);
            let sampled = source.select(&picked)?;
            let (src, tgt) = standardize_jointly(&sampled, target.features())?;
            combos
                .iter()
                .map(|(m, p)| evaluate(*m, p, &src, &tgt, target_labels, config))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let metadata = ReportMetadata::new(config, per_class);
    Ok(combos
        .iter()
        .enumerate()
        .map(|(i, (method, params))| {
            let per_trial: Vec<f64> = trials.iter().map(|t| t[i]).collect();
            let (mean_accuracy, std_accuracy) = mean_std(&per_trial);
            EvalReport {
                task: task.clone(),
                method: *method,
                params: **params,
                mean_accuracy,
                std_accuracy,
                per_trial,
                metadata: metadata.clone(),
            }
        })
        .collect())
}

/// Recomputes the summary statistics of saved reports from their per-trial
/// accuracies.
pub fn reaggregate(reports: &mut [EvalReport]) -> Result<()> {
    for r in reports.iter_mut() {
        if r.per_trial.is_empty() || r.per_trial.len() != r.task.trials {
            return Err(Error::Data(format!(
                "{} report has {} per-trial values for {} trials",
                r.method,
                r.per_trial.len(),
                r.task.trials
            )));
        }
        let (mean, std) = mean_std(&r.per_trial);
        r.mean_accuracy = mean;
        r.std_accuracy = std;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => contract(format!("unknown report format '{other}'")),
        }
    }
}

fn fmt_opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Serializes reports. JSON is the lossless form; CSV flattens one report
/// per row with per-trial accuracies joined by `;`.
pub fn render_reports(reports: &[EvalReport], format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Json => Ok(serde_json::to_string_pretty(reports)? + "\n"),
        ReportFormat::Csv => {
            let mut out = String::from(
                "source,target,method,t,gamma,mu,k,bandwidth,sigma,eps,trials,samples_per_class,classifier,mean_accuracy,std_accuracy,per_trial\n",
            );
            for r in reports {
                let p = &r.params;
                let trials: Vec<String> = r.per_trial.iter().map(|v| v.to_string()).collect();
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                    r.task.source_name,
                    r.task.target_name,
                    r.method,
                    p.t,
                    p.gamma,
                    p.mu,
                    p.k,
                    fmt_opt(p.bandwidth),
                    p.sigma,
                    p.eps,
                    r.task.trials,
                    r.metadata.samples_per_class,
                    r.metadata.classifier,
                    r.mean_accuracy,
                    r.std_accuracy,
                    trials.join(";")
                ));
            }
            Ok(out)
        }
    }
}

pub fn emit_report(reports: &[EvalReport], format: ReportFormat, path: &Path) -> Result<()> {
    write_file(path, &render_reports(reports, format)?)
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<()> {
    let io = |source| Error::Io {
        path: path.display().to_string(),
        source,
    };
    let mut f = std::fs::File::create(path).map_err(io)?;
    f.write_all(contents.as_bytes()).map_err(io)
}

pub fn load_reports_json(path: &Path) -> Result<Vec<EvalReport>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(serde_json::from_str(&text)?)
}

/// Best setting of one method on one task, compared with a reference method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub source: String,
    pub target: String,
    pub method: Method,
    pub t: f64,
    pub gamma: f64,
    pub mu: f64,
    pub mean_accuracy: f64,
    pub reference_method: Method,
    pub reference_accuracy: f64,
    pub improvement_pct: f64,
}

/// `100 · (acc − reference) / reference`
pub fn percentage_improvement(acc: f64, reference: f64) -> f64 {
    100.0 * (acc - reference) / reference
}

fn better(a: &EvalReport, b: &EvalReport) -> bool {
    if a.mean_accuracy != b.mean_accuracy {
        return a.mean_accuracy > b.mean_accuracy;
    }
    let key = |r: &EvalReport| (r.params.t, r.params.gamma, r.params.mu);
    let (ka, kb) = (key(a), key(b));
    ka.0.total_cmp(&kb.0)
        .then(ka.1.total_cmp(&kb.1))
        .then(ka.2.total_cmp(&kb.2))
        .is_lt()
}

/// Best hyperparameters per (task, method), by mean accuracy with ties going
/// to the lexicographically smallest `(t, γ, μ)`, and the percentage
/// improvement over the best setting of `reference` on the same task.
pub fn sweep_summary(reports: &[EvalReport], reference: Method) -> Result<Vec<SweepRow>> {
    let mut best: BTreeMap<(String, String, Method), &EvalReport> = BTreeMap::new();
    let mut order = Vec::new();
    for r in reports {
        let key = (r.task.source_name.clone(), r.task.target_name.clone(), r.method);
        match best.get(&key) {
            Some(current) if !better(r, current) => {}
            Some(_) => {
                best.insert(key, r);
            }
            None => {
                order.push(key.clone());
                best.insert(key, r);
            }
        }
    }
    order
        .into_iter()
        .map(|key| {
            let r = best[&key];
            let ref_key = (key.0.clone(), key.1.clone(), reference);
            let reference_report = best.get(&ref_key).ok_or_else(|| {
                Error::Contract(format!(
                    "reference method {reference} has no report for {} -> {}",
                    key.0, key.1
                ))
            })?;
            Ok(SweepRow {
                source: key.0,
                target: key.1,
                method: r.method,
                t: r.params.t,
                gamma: r.params.gamma,
                mu: r.params.mu,
                mean_accuracy: r.mean_accuracy,
                reference_method: reference,
                reference_accuracy: reference_report.mean_accuracy,
                improvement_pct: percentage_improvement(r.mean_accuracy, reference_report.mean_accuracy),
            })
        })
        .collect()
}

pub fn render_summary(rows: &[SweepRow], format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Json => Ok(serde_json::to_string_pretty(rows)? + "\n"),
        ReportFormat::Csv => {
            let mut out = String::from("source,target,method,t,gamma,mu,mean_accuracy,reference_method,reference_accuracy,improvement_pct\n");
            for r in rows {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{}\n",
                    r.source, r.target, r.method, r.t, r.gamma, r.mu, r.mean_accuracy, r.reference_method, r.reference_accuracy, r.improvement_pct
                ));
            }
            Ok(out)
        }
    }
}
