use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use spdalign::classify::{ClassifierKind, DEFAULT_RIDGE};
use spdalign::covariance::DomainDataset;
use spdalign::dataio::{generate_synthetic_shift, load_features_csv, resolve_domain, write_features_csv, SyntheticShiftSpec};
use spdalign::diffusion::{DEFAULT_NEIGHBOURS, DEFAULT_SIGMA};
use spdalign::protocol::{
    grid_for_method, load_reports_json, params_grid, reaggregate, render_reports, render_summary, run_protocol, sweep_summary,
    EvalReport, ProtocolConfig, ReportFormat, TransferTask,
};
use spdalign::spd::DEFAULT_EPS;
use spdalign::{Error, HyperParams, Method, Result};

#[derive(Parser)]
#[command(name = "spdalign", version, about = "Domain adaptation with geometric means of SPD matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit and score methods once on a single source sample.
    Adapt(RunArgs),
    /// Run the randomized-trial protocol for one transfer task.
    Protocol(RunArgs),
    /// Sweep t, gamma and mu and summarize the best setting per method.
    Sweep(SweepArgs),
    /// Write a synthetic source/target pair as CSV files.
    Synth(SynthArgs),
    /// Re-aggregate saved per-trial JSON reports.
    Report(ReportArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Source domain name (resolved as <data-root>/<name>.csv) or CSV path.
    #[arg(long)]
    source: String,
    /// Target domain name or CSV path.
    #[arg(long)]
    target: String,
    #[arg(long)]
    data_root: Option<PathBuf>,
    /// Method to run; repeatable. Defaults to every method.
    #[arg(long = "method")]
    methods: Vec<Method>,
    /// Geodesic weight; a comma-separated list forms a grid.
    #[arg(long, value_delimiter = ',')]
    t: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    gamma: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    mu: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_NEIGHBOURS)]
    k: usize,
    /// Graph bandwidth; defaults to the median pairwise distance.
    #[arg(long)]
    bandwidth: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_SIGMA)]
    sigma: f64,
    #[arg(long, default_value_t = DEFAULT_EPS)]
    eps: f64,
    /// Disable the diffusion kernel term of GCA3.
    #[arg(long)]
    no_kernel: bool,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    samples_per_class: Option<usize>,
    /// ncm (nearest class mean) or linear (ridge one-vs-rest).
    #[arg(long, default_value = "ncm")]
    classifier: ClassifierKind,
    #[arg(long, default_value_t = DEFAULT_RIDGE)]
    ridge: f64,
    #[arg(long)]
    subspace_dim: Option<usize>,
    #[arg(long, default_value = "json")]
    format: ReportFormat,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Method the improvement percentages are measured against.
    #[arg(long, default_value = "CORAL")]
    reference: Method,
    /// Where to write the best-parameter summary; stdout when absent.
    #[arg(long)]
    summary_out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 10)]
    dim: usize,
    #[arg(long, default_value_t = 3)]
    classes: usize,
    #[arg(long, default_value_t = 200)]
    n_source: usize,
    #[arg(long, default_value_t = 200)]
    n_target: usize,
    /// Rotation of the target in the plane of the first two axes, radians.
    #[arg(long, default_value_t = std::f64::consts::FRAC_PI_3)]
    angle: f64,
    /// Per-dimension target translation, comma-separated.
    #[arg(long, value_delimiter = ',')]
    shift: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    noise: f64,
    #[arg(long, default_value_t = 3.0)]
    spacing: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory receiving source.csv and target.csv.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// JSON file written by `protocol` or `sweep`.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "json")]
    format: ReportFormat,
    /// Print a best-parameter summary against this method instead of reports.
    #[arg(long)]
    reference: Option<Method>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Adapt(args) => adapt(args),
        Command::Protocol(args) => protocol(args),
        Command::Sweep(args) => sweep(args),
        Command::Synth(args) => synth(args),
        Command::Report(args) => report(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_domain(data_root: Option<&Path>, name: &str) -> Result<DomainDataset> {
    load_features_csv(&resolve_domain(data_root, name)?, None)
}

fn domain_label(name: &str) -> String {
    Path::new(name)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| name.to_string())
}

impl RunArgs {
    fn base_params(&self) -> HyperParams {
        let first = |v: &[f64], d: f64| v.first().copied().unwrap_or(d);
        let defaults = HyperParams::default();
        HyperParams {
            t: first(&self.t, defaults.t),
            gamma: first(&self.gamma, defaults.gamma),
            mu: first(&self.mu, defaults.mu),
            k: self.k,
            bandwidth: self.bandwidth,
            sigma: self.sigma,
            eps: self.eps,
            num_kept: None,
            subspace_dim: self.subspace_dim,
            kernel_term: !self.no_kernel,
        }
    }

    fn methods(&self, default: &[Method]) -> Vec<Method> {
        if self.methods.is_empty() {
            default.to_vec()
        } else {
            self.methods.clone()
        }
    }

    fn config(&self) -> ProtocolConfig {
        ProtocolConfig {
            classifier: self.classifier,
            ridge: self.ridge,
        }
    }

    /// Runs each method over its relevant slice of the grid.
    fn run(&self, trials: usize, grid: &[HyperParams], default_methods: &[Method]) -> Result<Vec<EvalReport>> {
        let source = load_domain(self.data_root.as_deref(), &self.source)?;
        let target = load_domain(self.data_root.as_deref(), &self.target)?;
        let task = TransferTask {
            source_name: domain_label(&self.source),
            target_name: domain_label(&self.target),
            trials,
            samples_per_class: self.samples_per_class,
            seed: self.seed,
        };
        let base = self.base_params();
        let mut reports = Vec::new();
        for method in self.methods(default_methods) {
            let method_grid = grid_for_method(method, &base, grid);
            reports.extend(run_protocol(&task, &source, &target, &[method], &method_grid, &self.config())?);
        }
        Ok(reports)
    }
}

fn adapt(args: RunArgs) -> Result<()> {
    let grid = [args.base_params()];
    let reports = args.run(1, &grid, &Method::ALL)?;
    for r in &reports {
        eprintln!("{:<14} accuracy {:.4}", r.method.name(), r.mean_accuracy);
    }
    if args.out.is_some() {
        emit(&render_reports(&reports, args.format)?, args.out.as_deref())?;
    } else {
        for r in &reports {
            println!("{}\t{}", r.method.name(), r.mean_accuracy);
        }
    }
    Ok(())
}

fn protocol(args: RunArgs) -> Result<()> {
    let base = args.base_params();
    let grid = params_grid(&base, &args.t, &args.gamma, &args.mu);
    let reports = args.run(args.trials.unwrap_or(30), &grid, &Method::ALL)?;
    emit(&render_reports(&reports, args.format)?, args.out.as_deref())
}

const SWEEP_METHODS: [Method; 6] = [
    Method::Coral,
    Method::Gca1,
    Method::Gca2,
    Method::Gca3,
    Method::CascadedGca2,
    Method::CascadedGca3,
];

fn sweep(args: SweepArgs) -> Result<()> {
    let run = &args.run;
    let default_axis: Vec<f64> = (1..=9).map(|i| i as f64 / 10.0).collect();
    let axis = |v: &[f64]| if v.is_empty() { default_axis.clone() } else { v.to_vec() };
    let base = run.base_params();
    let grid = params_grid(&base, &axis(&run.t), &axis(&run.gamma), &run.mu);
    let reports = run.run(run.trials.unwrap_or(30), &grid, &SWEEP_METHODS)?;
    emit(&render_reports(&reports, run.format)?, run.out.as_deref())?;
    let summary = sweep_summary(&reports, args.reference)?;
    emit(&render_summary(&summary, run.format)?, args.summary_out.as_deref())
}

fn synth(args: SynthArgs) -> Result<()> {
    let spec = SyntheticShiftSpec {
        dim: args.dim,
        num_classes: args.classes,
        n_source: args.n_source,
        n_target: args.n_target,
        mean_shift: args.shift,
        rotation_angle: args.angle,
        noise_scale: args.noise,
        class_spacing: args.spacing,
        seed: args.seed,
    };
    let (source, target) = generate_synthetic_shift(&spec)?;
    std::fs::create_dir_all(&args.out).map_err(|source| Error::Io {
        path: args.out.display().to_string(),
        source,
    })?;
    write_features_csv(&args.out.join("source.csv"), &source)?;
    write_features_csv(&args.out.join("target.csv"), &target)?;
    Ok(())
}

fn report(args: ReportArgs) -> Result<()> {
    let mut reports = load_reports_json(&args.input)?;
    reaggregate(&mut reports)?;
    let text = match args.reference {
        Some(reference) => render_summary(&sweep_summary(&reports, reference)?, args.format)?,
        None => render_reports(&reports, args.format)?,
    };
    emit(&text, args.out.as_deref())
}
