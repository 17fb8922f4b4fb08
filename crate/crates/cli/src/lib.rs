//! `mkern`: batch driver for kernel models on finite metric spaces.
//!
//! Subcommands: `validate` (metric checks only), `gram` (Gram matrix plus a
//! positive semidefiniteness report), `certify` (per-point distortion
//! certificates against rho), `sweep` (resolution sweep with ridge
//! regression), and `mmd` (discrepancy between two empirical measures).
//!
//! Exit codes are a stable contract: 0 success, 1 configuration or
//! validation failure, 2 I/O failure, 3 certification failure. Commands
//! write only inside their `--out` directory and are idempotent.

use clap::{Args, Parser, Subcommand, ValueEnum};
use metric_kernels::embedding::auto_q;
use metric_kernels::io::LoadError;
use metric_kernels::util::format_sig9;
use metric_kernels::{
    approximation_sweep, fixtures, greedy_cover, io, mmd, psd_check, AnalysisError, Covering,
    CoveringError, EmpiricalMeasure, FiniteMetricSpace, KernelError, KernelModel,
    ScalarKernelSpec, SweepGrid,
};
use serde::Deserialize;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

#[derive(Parser)]
#[command(
    name = "mkern",
    version,
    about = "Kernel models on finite metric spaces with certified error bounds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load a space and run the metric checks only
    Validate {
        #[command(flatten)]
        space: SpaceArgs,
    },
    /// Write the full Gram matrix and its positive semidefiniteness report
    Gram {
        #[command(flatten)]
        model: ModelArgs,
        /// output directory
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Certify per-point feature distortion against the model's rho
    Certify {
        #[command(flatten)]
        model: ModelArgs,
        /// largest allowed certification prefix length
        #[arg(long, default_value_t = 500_000)]
        prefix_cap: usize,
        /// output directory
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Fit ridge regressions across a resolution grid and report sup errors
    Sweep {
        #[command(flatten)]
        space: SpaceArgs,
        /// scalar profile: inline JSON or a path to a JSON file
        #[arg(long)]
        kernel: String,
        #[arg(long, value_enum)]
        mode: ModeArg,
        /// comma-separated covering radii (covering) or prefix lengths
        /// (truncation)
        #[arg(long)]
        grid: String,
        /// geometric weight ratio; chosen automatically when absent or
        /// inadmissible for a grid point
        #[arg(long)]
        q: Option<f64>,
        #[arg(long, default_value_t = 1e-6)]
        ridge: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// file with one target value per point
        #[arg(long, conflicts_with = "target_fn")]
        target: Option<PathBuf>,
        /// built-in target: `zero`, `const:<v>`, or `abs_sin` (circle
        /// fixture only)
        #[arg(long)]
        target_fn: Option<String>,
        /// output directory
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Discrepancy between two empirical measures under a kernel model
    Mmd {
        #[command(flatten)]
        model: ModelArgs,
        /// first measure: inline JSON or a path ({"support":[..],"weights":[..]})
        #[arg(long, conflicts_with = "mu_point")]
        mu: Option<String>,
        /// second measure: inline JSON or a path
        #[arg(long, conflicts_with = "nu_point")]
        nu: Option<String>,
        /// shorthand: point mass at this index as the first measure
        #[arg(long)]
        mu_point: Option<usize>,
        /// shorthand: point mass at this index as the second measure
        #[arg(long)]
        nu_point: Option<usize>,
    },
}

#[derive(Args)]
struct SpaceArgs {
    /// space source: a file path, or `fixture:<name>` with name one of
    /// two_point, line3, circle200, graph50
    #[arg(long)]
    space: String,
    /// file format when --space is a path
    #[arg(long, value_enum, default_value_t = SpaceKindArg::Matrix)]
    space_kind: SpaceKindArg,
}

#[derive(Copy, Clone, ValueEnum)]
enum SpaceKindArg {
    /// full distance matrix, comma-separated, no header
    Matrix,
    /// Euclidean point cloud, one point per line
    Cloud,
    /// weighted edge list with header u,v,w
    Graph,
}

#[derive(Copy, Clone, PartialEq, ValueEnum)]
enum ModeArg {
    Covering,
    Truncation,
}

#[derive(Args)]
struct ModelArgs {
    #[command(flatten)]
    space: SpaceArgs,
    /// scalar profile: inline JSON or a path to a JSON file
    #[arg(long)]
    kernel: String,
    #[arg(long, value_enum)]
    mode: ModeArg,
    /// covering radius (covering mode)
    #[arg(long, conflicts_with = "centers")]
    eta: Option<f64>,
    /// covering center budget (covering mode)
    #[arg(long)]
    centers: Option<usize>,
    /// geometric weight ratio; defaults to an admissible value
    #[arg(long)]
    q: Option<f64>,
    /// kept coordinates in truncation mode
    #[arg(long = "N", default_value_t = 8)]
    n: usize,
}

enum CliError {
    Config(String),
    Io(String),
    Cert(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Io(_) => 2,
            CliError::Cert(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Io(m) | CliError::Cert(m) => m,
        }
    }
}

impl From<LoadError> for CliError {
    fn from(e: LoadError) -> Self {
        match e {
            LoadError::Io(_) | LoadError::Parse { .. } => CliError::Io(e.to_string()),
            LoadError::Invalid(_) => CliError::Config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<KernelError> for CliError {
    fn from(e: KernelError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<CoveringError> for CliError {
    fn from(e: CoveringError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        CliError::Config(e.to_string())
    }
}

/// Entry point for the installed binary.
pub fn run() -> i32 {
    run_from(std::env::args_os())
}

/// Runs the command line given explicit arguments; used by tests to drive
/// commands in-process.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Validate { space } => cmd_validate(&space),
        Command::Gram { model, out } => cmd_gram(&model, &out),
        Command::Certify {
            model,
            prefix_cap,
            out,
        } => cmd_certify(&model, prefix_cap, &out),
        Command::Sweep {
            space,
            kernel,
            mode,
            grid,
            q,
            ridge,
            seed,
            target,
            target_fn,
            out,
        } => cmd_sweep(
            &space, &kernel, mode, &grid, q, ridge, seed, target, target_fn, &out,
        ),
        Command::Mmd {
            model,
            mu,
            nu,
            mu_point,
            nu_point,
        } => cmd_mmd(&model, mu, nu, mu_point, nu_point),
    }
}

fn load_space(args: &SpaceArgs) -> Result<(Arc<FiniteMetricSpace>, String), CliError> {
    if let Some(name) = args.space.strip_prefix("fixture:") {
        let space = fixtures::by_name(name).ok_or_else(|| {
            CliError::Config(format!(
                "unknown fixture '{name}'; available: two_point, line3, circle200, graph50"
            ))
        })?;
        return Ok((space, args.space.clone()));
    }
    let path = Path::new(&args.space);
    let space = match args.space_kind {
        SpaceKindArg::Matrix => io::load_distance_matrix(path)?,
        SpaceKindArg::Cloud => io::load_point_cloud(path)?,
        SpaceKindArg::Graph => io::load_edge_list(path)?,
    };
    Ok((Arc::new(space), args.space.clone()))
}

fn load_kernel_spec(value: &str) -> Result<ScalarKernelSpec, CliError> {
    let trimmed = value.trim_start();
    if trimmed.starts_with('{') {
        serde_json::from_str(trimmed)
            .map_err(|e| CliError::Config(format!("invalid inline kernel spec: {e}")))
    } else {
        let text = fs::read_to_string(value)?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Io(format!("invalid kernel spec in {value}: {e}")))
    }
}

fn build_covering(
    space: &Arc<FiniteMetricSpace>,
    args: &ModelArgs,
) -> Result<Covering, CliError> {
    match (args.eta, args.centers) {
        (Some(eta), None) => Ok(greedy_cover(space, eta)?),
        (None, Some(j)) => Ok(metric_kernels::cover_with_budget(space, j)?),
        (None, None) => Err(CliError::Config(
            "covering mode needs --eta or --centers".into(),
        )),
        (Some(_), Some(_)) => unreachable!("clap enforces the conflict"),
    }
}

fn build_model(args: &ModelArgs) -> Result<(KernelModel, String), CliError> {
    let (space, space_id) = load_space(&args.space)?;
    let spec = load_kernel_spec(&args.kernel)?;
    let model = match args.mode {
        ModeArg::Covering => {
            let covering = build_covering(&space, args)?;
            let q = args.q.unwrap_or_else(|| auto_q(covering.center_count()));
            KernelModel::new_covering(space, &spec, covering, q)?
        }
        ModeArg::Truncation => {
            KernelModel::new_truncation(space, &spec, args.q.unwrap_or(2.0), args.n)?
        }
    };
    Ok((model, space_id))
}

fn cmd_validate(args: &SpaceArgs) -> Result<(), CliError> {
    let (space, id) = load_space(args)?;
    println!(
        "space {} valid: {} points, diameter {}",
        id,
        space.size(),
        format_sig9(space.diameter())
    );
    Ok(())
}

fn cmd_gram(args: &ModelArgs, out: &Path) -> Result<(), CliError> {
    let (model, _) = build_model(args)?;
    let subset: Vec<usize> = (0..model.space().size()).collect();
    let gram = model.gram(&subset)?;
    let report = psd_check(&gram);

    fs::create_dir_all(out)?;
    let mut csv = String::new();
    for i in 0..gram.dim() {
        let row: Vec<String> = (0..gram.dim())
            .map(|j| format_sig9(gram.entry(i, j)))
            .collect();
        csv.push_str(&row.join(","));
        csv.push('\n');
    }
    fs::write(out.join("gram.csv"), csv)?;
    fs::write(
        out.join("psd_report.json"),
        serde_json::to_string_pretty(&report).expect("psd report serializes"),
    )?;

    println!(
        "gram {}x{}: min eigenvalue {}, tolerance {}, pass {}",
        report.dim,
        report.dim,
        format_sig9(report.min_eigenvalue),
        format_sig9(report.tolerance),
        report.pass
    );
    if report.pass {
        Ok(())
    } else {
        Err(CliError::Cert(format!(
            "Gram matrix failed the positive semidefiniteness check: min eigenvalue {} below -{}",
            format_sig9(report.min_eigenvalue),
            format_sig9(report.tolerance)
        )))
    }
}

fn cmd_certify(args: &ModelArgs, prefix_cap: usize, out: &Path) -> Result<(), CliError> {
    let (model, _) = build_model(args)?;
    let report = model.certify_all(prefix_cap)?;

    fs::create_dir_all(out)?;
    fs::write(
        out.join("certify_report.json"),
        serde_json::to_string_pretty(&report).expect("certify report serializes"),
    )?;

    println!(
        "certify {} points, mode {}, rho {}, prefix {}, all_pass {}",
        report.points.len(),
        report.mode,
        format_sig9(report.rho),
        report.prefix_len,
        report.all_pass
    );
    if report.all_pass {
        Ok(())
    } else {
        let offenders: Vec<String> = report
            .points
            .iter()
            .filter(|r| !r.pass)
            .map(|r| r.point.to_string())
            .collect();
        Err(CliError::Cert(format!(
            "certification failed at points [{}]",
            offenders.join(", ")
        )))
    }
}

fn parse_grid(mode: ModeArg, grid: &str) -> Result<SweepGrid, CliError> {
    let fields: Vec<&str> = grid.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if fields.is_empty() {
        return Err(CliError::Config("grid is empty".into()));
    }
    match mode {
        ModeArg::Covering => {
            let vals = fields
                .iter()
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|_| CliError::Config(format!("bad grid value '{s}'")))
                })
                .collect::<Result<Vec<f64>, _>>()?;
            Ok(SweepGrid::Eta(vals))
        }
        ModeArg::Truncation => {
            let vals = fields
                .iter()
                .map(|s| {
                    s.parse::<usize>()
                        .map_err(|_| CliError::Config(format!("bad grid value '{s}'")))
                })
                .collect::<Result<Vec<usize>, _>>()?;
            Ok(SweepGrid::TruncationLen(vals))
        }
    }
}

fn load_targets(
    space: &FiniteMetricSpace,
    space_id: &str,
    target: Option<PathBuf>,
    target_fn: Option<String>,
) -> Result<Vec<f64>, CliError> {
    match (target, target_fn) {
        (Some(path), None) => {
            let text = fs::read_to_string(&path)?;
            let mut vals = Vec::new();
            for (k, line) in text.lines().enumerate() {
                let t = line.trim();
                if t.is_empty() {
                    continue;
                }
                vals.push(t.parse::<f64>().map_err(|_| {
                    CliError::Io(format!("line {}: could not parse '{t}' as a number", k + 1))
                })?);
            }
            Ok(vals)
        }
        (None, Some(name)) => {
            if name == "zero" {
                Ok(vec![0.0; space.size()])
            } else if let Some(v) = name.strip_prefix("const:") {
                let c = v
                    .parse::<f64>()
                    .map_err(|_| CliError::Config(format!("bad constant target '{v}'")))?;
                Ok(vec![c; space.size()])
            } else if name == "abs_sin" {
                if space_id != "fixture:circle200" {
                    return Err(CliError::Config(
                        "target abs_sin is defined on fixture:circle200 only".into(),
                    ));
                }
                Ok(fixtures::circle200_angles()
                    .into_iter()
                    .map(|t| t.sin().abs())
                    .collect())
            } else {
                Err(CliError::Config(format!(
                    "unknown target function '{name}'; use zero, const:<v>, or abs_sin"
                )))
            }
        }
        (None, None) => Err(CliError::Config(
            "sweep needs --target <file> or --target-fn <name>".into(),
        )),
        (Some(_), Some(_)) => unreachable!("clap enforces the conflict"),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    space_args: &SpaceArgs,
    kernel: &str,
    mode: ModeArg,
    grid: &str,
    q: Option<f64>,
    ridge: f64,
    seed: u64,
    target: Option<PathBuf>,
    target_fn: Option<String>,
    out: &Path,
) -> Result<(), CliError> {
    let (space, space_id) = load_space(space_args)?;
    let spec = load_kernel_spec(kernel)?;
    let grid = parse_grid(mode, grid)?;
    let targets = load_targets(&space, &space_id, target, target_fn)?;
    let report = approximation_sweep(&space, &spec, &grid, &targets, q, ridge, seed, &space_id)?;

    fs::create_dir_all(out)?;
    fs::write(out.join("sweep.csv"), report.to_csv())?;
    fs::write(out.join("sweep_meta.json"), report.meta_json())?;
    println!(
        "sweep {} rows over {}, train size {}",
        report.rows.len(),
        space_id,
        report.meta.train_size
    );
    Ok(())
}

#[derive(Deserialize)]
struct MeasureSpec {
    support: Vec<usize>,
    weights: Vec<f64>,
}

fn load_measure(
    value: Option<String>,
    point: Option<usize>,
    which: &str,
) -> Result<EmpiricalMeasure, CliError> {
    match (value, point) {
        (Some(v), None) => {
            let trimmed = v.trim_start();
            let text = if trimmed.starts_with('{') {
                trimmed.to_string()
            } else {
                fs::read_to_string(&v)?
            };
            let spec: MeasureSpec = serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("invalid measure for --{which}: {e}")))?;
            Ok(EmpiricalMeasure::new(spec.support, spec.weights)?)
        }
        (None, Some(x)) => Ok(EmpiricalMeasure::dirac(x)),
        (None, None) => Err(CliError::Config(format!(
            "missing measure: pass --{which} or --{which}-point"
        ))),
        (Some(_), Some(_)) => unreachable!("clap enforces the conflict"),
    }
}

fn cmd_mmd(
    args: &ModelArgs,
    mu: Option<String>,
    nu: Option<String>,
    mu_point: Option<usize>,
    nu_point: Option<usize>,
) -> Result<(), CliError> {
    let (model, _) = build_model(args)?;
    let mu = load_measure(mu, mu_point, "mu")?;
    let nu = load_measure(nu, nu_point, "nu")?;
    let value = mmd(&model, &mu, &nu)?;
    println!("{}", format_sig9(value));
    Ok(())
}
