//! Command-line surface: one subcommand per experiment family, every run
//! writing its artifacts under `--out-dir`. Exit codes: 0 success, 2 flag or
//! problem validation, 3 I/O or malformed input, 4 numerical failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use stiffelm::assembly::{assemble_fit, assemble_ode, Collocation, LinearSystem, OdeProblem};
use stiffelm::basis::{build_basis, Activation, ElmConfig, Encoding, EncodedBasis, WeightDist};
use stiffelm::diagnostics::{export_heatmap, export_spectrum, scaling_table, Normalization};
use stiffelm::error::{Error, Result};
use stiffelm::io::{
    load_image_vector, read_pgm, read_report, write_pgm, write_report, write_solution_csv,
    ArtifactPaths, ConditioningSummary, ProblemSpec, RunReport, REPORT_SCHEMA_VERSION,
};
use stiffelm::linalg::{condition_number, log10_det_proxy, numerical_rank, svd};
use stiffelm::solver::{
    metrics_between, multiscale_target, predict, sweep_epsilon, train, uniform_grid, Metrics,
    SolveResult, EVAL_GRID_POINTS,
};

#[derive(Parser)]
#[command(
    name = "stiffelm",
    version,
    about = "Extreme learning machine solver for stiff ODEs and multiscale regression"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a linear ODE up to second order by residual collocation
    SolveOde(SolveOdeArgs),
    /// Fit a scalar target function sampled on [0, 1]
    FitFunction(FitFunctionArgs),
    /// Fit a grayscale PGM image as a 1-D signal and reconstruct it
    FitImage(FitImageArgs),
    /// Solve the advection-diffusion problem across a list of stiffness values
    Sweep(SweepArgs),
    /// Recompute conditioning diagnostics of the activation matrix, no solve
    Diagnose(DiagnoseArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum EncodingArg {
    None,
    Gaussian,
}

#[derive(Clone, Copy, ValueEnum)]
enum ActivationArg {
    Tanh,
    Sine,
}

#[derive(Clone, Copy, ValueEnum)]
enum CollocationModeArg {
    Uniform,
    Random,
}

/// Weight law syntax: `uniform:LO,HI` or `normal:MEAN,STD`.
fn parse_weight_dist(s: &str) -> std::result::Result<WeightDist, String> {
    let (kind, params) = s
        .split_once(':')
        .ok_or_else(|| format!("expected uniform:LO,HI or normal:MEAN,STD, got {s:?}"))?;
    let (a, b) = params
        .split_once(',')
        .ok_or_else(|| format!("expected two comma-separated numbers after {kind}:"))?;
    let a: f64 = a.trim().parse().map_err(|_| format!("bad number {a:?}"))?;
    let b: f64 = b.trim().parse().map_err(|_| format!("bad number {b:?}"))?;
    match kind {
        "uniform" => Ok(WeightDist::Uniform { lo: a, hi: b }),
        "normal" => Ok(WeightDist::Normal { mean: a, std: b }),
        other => Err(format!("unknown distribution {other:?}, expected uniform or normal")),
    }
}

/// Operator coefficient syntax: `A0,A1,A2`.
fn parse_coeffs(s: &str) -> std::result::Result<(f64, f64, f64), String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("expected A0,A1,A2, got {s:?}"));
    }
    let mut vals = [0.0f64; 3];
    for (v, p) in vals.iter_mut().zip(&parts) {
        *v = p.trim().parse().map_err(|_| format!("bad coefficient {p:?}"))?;
    }
    Ok((vals[0], vals[1], vals[2]))
}

/// Boundary condition syntax: `X=VALUE`.
fn parse_bc(s: &str) -> std::result::Result<(f64, f64), String> {
    let (x, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected X=VALUE, got {s:?}"))?;
    let x: f64 = x.trim().parse().map_err(|_| format!("bad location {x:?}"))?;
    let v: f64 = v.trim().parse().map_err(|_| format!("bad value {v:?}"))?;
    Ok((x, v))
}

#[derive(Args)]
struct ModelArgs {
    /// Hidden nodes in the frozen random layer
    #[arg(long, default_value_t = 1000)]
    nodes: usize,
    /// Input encoding applied to the preactivation
    #[arg(long, value_enum, default_value_t = EncodingArg::Gaussian)]
    encoding: EncodingArg,
    /// Gaussian filter width d; requires --encoding gaussian
    #[arg(long, value_name = "D", allow_negative_numbers = true)]
    filter_width: Option<f64>,
    /// Hidden-layer activation
    #[arg(long, value_enum, default_value_t = ActivationArg::Tanh)]
    activation: ActivationArg,
    /// First-layer weight law: uniform:LO,HI or normal:MEAN,STD
    #[arg(long, default_value = "uniform:-1,1", value_parser = parse_weight_dist)]
    weight_dist: WeightDist,
    /// Seed of the frozen first layer
    #[arg(long, env = "STIFFELM_SEED", default_value_t = 1)]
    seed: u64,
    /// Multiplier on the SVD rank-truncation tolerance
    #[arg(long, default_value_t = 1.0)]
    rank_tol_factor: f64,
}

impl ModelArgs {
    fn config(&self, default_filter_width: f64) -> Result<ElmConfig> {
        let encoding = match self.encoding {
            EncodingArg::None => {
                if self.filter_width.is_some() {
                    return Err(Error::InvalidConfig(
                        "--filter-width requires --encoding gaussian".into(),
                    ));
                }
                Encoding::None
            }
            EncodingArg::Gaussian => Encoding::Gaussian {
                filter_width: self.filter_width.unwrap_or(default_filter_width),
            },
        };
        Ok(ElmConfig {
            nodes: self.nodes,
            encoding,
            activation: match self.activation {
                ActivationArg::Tanh => Activation::Tanh,
                ActivationArg::Sine => Activation::Sine,
            },
            weight_dist: self.weight_dist,
            seed: self.seed,
        })
    }
}

/// Problem flags shared by solve-ode and diagnose.
#[derive(Args)]
struct OdeFlags {
    /// Stiffness shorthand: solve u' = EPSILON u'' with u(0) = 0, u(1) = 1
    #[arg(long, allow_negative_numbers = true)]
    epsilon: Option<f64>,
    /// General operator a0 u + a1 u' + a2 u'' = rhs
    #[arg(long, value_name = "A0,A1,A2", value_parser = parse_coeffs, conflicts_with = "epsilon",
          allow_negative_numbers = true)]
    coeffs: Option<(f64, f64, f64)>,
    /// Constant right-hand side of the general operator
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    rhs: f64,
    /// Boundary condition X=VALUE, repeatable, one per operator order
    #[arg(long = "bc", value_name = "X=VALUE", value_parser = parse_bc, conflicts_with = "epsilon")]
    bc: Vec<(f64, f64)>,
    /// Number of collocation points
    #[arg(long, default_value_t = 1000)]
    collocation: usize,
    /// Collocation point placement; random draws reuse --seed
    #[arg(long, value_enum, default_value_t = CollocationModeArg::Uniform)]
    collocation_mode: CollocationModeArg,
}

impl OdeFlags {
    fn collocation(&self, seed: u64) -> Collocation {
        match self.collocation_mode {
            CollocationModeArg::Uniform => Collocation::Uniform { n: self.collocation },
            CollocationModeArg::Random => Collocation::Random { n: self.collocation, seed },
        }
    }

    fn problem(&self, seed: u64) -> Result<OdeProblem> {
        let collocation = self.collocation(seed);
        match (self.epsilon, self.coeffs) {
            (Some(epsilon), None) => {
                if epsilon <= 0.0 || !epsilon.is_finite() {
                    return Err(Error::InvalidProblem(format!(
                        "--epsilon must be positive and finite, got {epsilon}"
                    )));
                }
                Ok(OdeProblem::ade(epsilon, collocation))
            }
            (None, Some(coeffs)) => Ok(OdeProblem {
                coeffs,
                rhs: self.rhs,
                boundary_conditions: self.bc.clone(),
                collocation,
            }),
            // Unreachable behind the clap groups, but diagnose reaches here
            // when the source is a report.
            _ => Err(Error::InvalidProblem(
                "exactly one of --epsilon or --coeffs is required".into(),
            )),
        }
    }
}

#[derive(Args)]
#[command(group = ArgGroup::new("problem").required(true).args(["epsilon", "coeffs"]))]
struct SolveOdeArgs {
    #[command(flatten)]
    ode: OdeFlags,
    #[command(flatten)]
    model: ModelArgs,
    /// Directory the artifacts are written into, created if missing
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
}

#[derive(Clone)]
enum Target {
    Multiscale,
    Csv(PathBuf),
}

/// Target syntax: `multiscale` or `csv:<path>`.
fn parse_target(s: &str) -> std::result::Result<Target, String> {
    if s == "multiscale" {
        return Ok(Target::Multiscale);
    }
    match s.strip_prefix("csv:") {
        Some(path) if !path.is_empty() => Ok(Target::Csv(PathBuf::from(path))),
        _ => Err(format!("expected multiscale or csv:<path>, got {s:?}")),
    }
}

#[derive(Args)]
struct FitFunctionArgs {
    /// Target signal: multiscale or csv:<path> with x,y rows
    #[arg(long, default_value = "multiscale", value_parser = parse_target)]
    target: Target,
    /// Number of uniform samples of a built-in target
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[command(flatten)]
    model: ModelArgs,
    /// Directory the artifacts are written into, created if missing
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct FitImageArgs {
    /// Grayscale PGM image (P2 or P5) to fit
    #[arg(long, value_name = "PGM")]
    input: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
    /// Directory the artifacts are written into, created if missing
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    /// Comma-separated stiffness values, one solve per value
    #[arg(long, value_name = "E1,E2,...", value_delimiter = ',', required = true,
          allow_negative_numbers = true)]
    epsilons: Vec<f64>,
    /// Number of collocation points
    #[arg(long, default_value_t = 1000)]
    collocation: usize,
    /// Collocation point placement; random draws reuse --seed
    #[arg(long, value_enum, default_value_t = CollocationModeArg::Uniform)]
    collocation_mode: CollocationModeArg,
    #[command(flatten)]
    model: ModelArgs,
    /// Directory the artifacts are written into, created if missing
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
}

#[derive(Args)]
#[command(group = ArgGroup::new("source").required(true).args(["from_report", "epsilon", "coeffs"]))]
struct DiagnoseArgs {
    /// Rebuild the system from a previous run report; model flags are ignored
    #[arg(
        long,
        value_name = "REPORT_JSON",
        conflicts_with_all = ["rhs", "bc", "collocation", "collocation_mode", "nodes", "encoding",
                              "filter_width", "activation", "weight_dist", "seed"]
    )]
    from_report: Option<PathBuf>,
    #[command(flatten)]
    ode: OdeFlags,
    /// Write the activation-matrix heatmap PGM
    #[arg(long)]
    dump_matrix: bool,
    /// Write the singular-spectrum CSV
    #[arg(long)]
    dump_spectrum: bool,
    /// Disable block pooling of oversized heatmaps
    #[arg(long, requires = "dump_matrix")]
    full_res: bool,
    #[command(flatten)]
    model: ModelArgs,
    /// Directory the artifacts are written into, created if missing
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(match err {
                Error::InvalidMatrix(_)
                | Error::InvalidSpectrum(_)
                | Error::DimensionMismatch(_)
                | Error::InvalidConfig(_)
                | Error::InvalidProblem(_) => 2,
                Error::Malformed(_) | Error::Io(_) => 3,
                Error::SvdFailure | Error::Numerical(_) => 4,
            })
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::SolveOde(args) => run_solve_ode(args),
        Command::FitFunction(args) => run_fit_function(args),
        Command::FitImage(args) => run_fit_image(args),
        Command::Sweep(args) => run_sweep(args),
        Command::Diagnose(args) => run_diagnose(args),
    }
}

/// Everything a finished run hands to the artifact writer.
struct RunOutput<'a> {
    command: &'a str,
    config: ElmConfig,
    problem: ProblemSpec,
    rank_tol_factor: f64,
    h: &'a stiffelm::linalg::Matrix,
    xs: Vec<f64>,
    preds: Vec<f64>,
    exact: Option<Vec<f64>>,
    metrics: Option<Metrics>,
    report: stiffelm::solver::ConditioningReport,
    train_seconds: f64,
}

/// Writes the standard artifact set (solution, spectrum, heatmap, report)
/// and prints the one-line summary. Returns the report for callers that
/// keep going.
fn write_run(out_dir: &Path, out: RunOutput, reconstruction: Option<(&str, usize, usize)>) -> Result<RunReport> {
    fs::create_dir_all(out_dir)?;
    write_solution_csv(
        &out_dir.join("solution.csv"),
        &out.xs,
        &out.preds,
        out.exact.as_deref(),
    )?;
    export_spectrum(&out.report.spectrum, &out_dir.join("spectrum.csv"))?;
    export_heatmap(out.h, Normalization::LogAbs, &out_dir.join("heatmap.pgm"), false)?;

    let mut artifacts = ArtifactPaths {
        solution_csv: Some("solution.csv".into()),
        spectrum_csv: Some("spectrum.csv".into()),
        heatmap_pgm: Some("heatmap.pgm".into()),
        ..ArtifactPaths::default()
    };
    if let Some((name, width, height)) = reconstruction {
        let pixels: Vec<u8> = out
            .preds
            .iter()
            .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect();
        write_pgm(&out_dir.join(name), width, height, &pixels, &[])?;
        artifacts.reconstruction_pgm = Some(name.into());
    }

    let report = RunReport {
        schema_version: REPORT_SCHEMA_VERSION.into(),
        command: out.command.into(),
        config: out.config,
        problem: out.problem,
        rank_tol_factor: out.rank_tol_factor,
        metrics: out.metrics,
        conditioning: ConditioningSummary::from(&out.report),
        train_seconds: out.train_seconds,
        artifacts,
    };
    write_report(&report, &out_dir.join("report.json"))?;

    println!(
        "{}: rank {}, effective condition {:.3e}, sparsity {:.3}, train {:.2} s",
        out.command,
        report.conditioning.rank,
        report.conditioning.effective_condition,
        report.conditioning.sparsity,
        out.train_seconds
    );
    if let Some(m) = &report.metrics {
        println!("errors: mae {:.3e}, mse {:.3e}, max {:.3e}", m.mae, m.mse, m.max_abs_err);
    }
    println!("artifacts written to {}", out_dir.display());
    Ok(report)
}

fn run_solve_ode(args: SolveOdeArgs) -> Result<()> {
    let config = args.model.config(1e-4)?;
    let problem = args.ode.problem(args.model.seed)?;
    let basis = build_basis(&config)?;
    let sys = assemble_ode(&basis, &problem)?;
    let (beta, report, train_seconds) = train(&sys, args.model.rank_tol_factor)?;

    let xs = uniform_grid(EVAL_GRID_POINTS);
    let preds = predict(&basis, &beta, &xs)?;
    let (exact, metrics) = match args.ode.epsilon {
        Some(epsilon) => {
            let exact: Vec<f64> = xs
                .iter()
                .map(|&x| stiffelm::solver::exact_ade_solution(epsilon, x))
                .collect::<Result<_>>()?;
            let metrics = metrics_between(&preds, &exact)?;
            (Some(exact), Some(metrics))
        }
        None => (None, None),
    };

    write_run(
        &args.out_dir,
        RunOutput {
            command: "solve-ode",
            config,
            problem: ProblemSpec::Ode { epsilon: args.ode.epsilon, problem },
            rank_tol_factor: args.model.rank_tol_factor,
            h: &sys.h,
            xs,
            preds,
            exact,
            metrics,
            report,
            train_seconds,
        },
        None,
    )?;
    Ok(())
}

/// Reads a two-column x,y CSV; a non-numeric first line is treated as a
/// header and skipped.
fn read_target_csv(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let text = fs::read_to_string(path)?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parsed = line.split_once(',').and_then(|(x, y)| {
            Some((x.trim().parse::<f64>().ok()?, y.trim().parse::<f64>().ok()?))
        });
        match parsed {
            Some((x, y)) => {
                xs.push(x);
                ys.push(y);
            }
            None if i == 0 => continue,
            None => {
                return Err(Error::Malformed(format!(
                    "{}:{}: expected x,y numbers, got {line:?}",
                    path.display(),
                    i + 1
                )))
            }
        }
    }
    Ok((xs, ys))
}

fn run_fit_function(args: FitFunctionArgs) -> Result<()> {
    let config = args.model.config(1e-3)?;
    let (target_name, xs, ys) = match &args.target {
        Target::Multiscale => {
            let xs = uniform_grid(args.samples);
            let ys: Vec<f64> = xs.iter().map(|&x| multiscale_target(x)).collect();
            ("multiscale".to_string(), xs, ys)
        }
        Target::Csv(path) => {
            let (xs, ys) = read_target_csv(path)?;
            (format!("csv:{}", path.display()), xs, ys)
        }
    };

    let basis = build_basis(&config)?;
    let sys = assemble_fit(&basis, &xs, &ys)?;
    let (beta, report, train_seconds) = train(&sys, args.model.rank_tol_factor)?;
    let preds = predict(&basis, &beta, &xs)?;
    let metrics = metrics_between(&preds, &ys)?;

    let samples = xs.len();
    write_run(
        &args.out_dir,
        RunOutput {
            command: "fit-function",
            config,
            problem: ProblemSpec::FitFunction { target: target_name, samples },
            rank_tol_factor: args.model.rank_tol_factor,
            h: &sys.h,
            xs,
            preds,
            exact: Some(ys),
            metrics: Some(metrics),
            report,
            train_seconds,
        },
        None,
    )?;
    Ok(())
}

fn run_fit_image(args: FitImageArgs) -> Result<()> {
    let config = args.model.config(1e-4)?;
    let img = read_pgm(&args.input)?;
    let (xs, ys) = load_image_vector(&args.input)?;

    let basis = build_basis(&config)?;
    let sys = assemble_fit(&basis, &xs, &ys)?;
    let (beta, report, train_seconds) = train(&sys, args.model.rank_tol_factor)?;
    let preds = predict(&basis, &beta, &xs)?;
    let metrics = metrics_between(&preds, &ys)?;

    write_run(
        &args.out_dir,
        RunOutput {
            command: "fit-image",
            config,
            problem: ProblemSpec::FitImage {
                input: args.input.display().to_string(),
                width: img.width,
                height: img.height,
            },
            rank_tol_factor: args.model.rank_tol_factor,
            h: &sys.h,
            xs,
            preds,
            exact: Some(ys),
            metrics: Some(metrics),
            report,
            train_seconds,
        },
        Some(("reconstruction.pgm", img.width, img.height)),
    )?;
    Ok(())
}

/// RFC 4180 quoting for one CSV field.
fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

fn run_sweep(args: SweepArgs) -> Result<()> {
    let config = args.model.config(1e-4)?;
    let collocation = match args.collocation_mode {
        CollocationModeArg::Uniform => Collocation::Uniform { n: args.collocation },
        CollocationModeArg::Random => Collocation::Random { n: args.collocation, seed: args.model.seed },
    };
    fs::create_dir_all(&args.out_dir)?;

    let rows = sweep_epsilon(&config, collocation, &args.epsilons, args.model.rank_tol_factor);

    let mut csv = String::from("epsilon,mae,rank,raw_condition,effective_condition,status\n");
    let mut scaling_rows: Vec<(f64, &SolveResult)> = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        match &row.outcome {
            Ok(result) => {
                let mae = result.metrics.as_ref().map(|m| m.mae).unwrap_or(f64::NAN);
                csv.push_str(&format!(
                    "{},{},{},{},{},ok\n",
                    fmt17(row.epsilon),
                    fmt17(mae),
                    result.report.rank,
                    fmt17(result.report.raw_condition),
                    fmt17(result.report.effective_condition),
                ));
                scaling_rows.push((row.epsilon, result));

                let report = RunReport {
                    schema_version: REPORT_SCHEMA_VERSION.into(),
                    command: "sweep".into(),
                    config: config.clone(),
                    problem: ProblemSpec::Ode {
                        epsilon: Some(row.epsilon),
                        problem: OdeProblem::ade(row.epsilon, collocation),
                    },
                    rank_tol_factor: args.model.rank_tol_factor,
                    metrics: result.metrics,
                    conditioning: ConditioningSummary::from(&result.report),
                    train_seconds: result.train_seconds,
                    artifacts: ArtifactPaths {
                        sweep_csv: Some("sweep.csv".into()),
                        scaling_csv: Some("scaling.csv".into()),
                        ..ArtifactPaths::default()
                    },
                };
                write_report(&report, &args.out_dir.join(format!("report_{i}.json")))?;
                println!("epsilon {:>10}: mae {:.3e}, rank {}", row.epsilon, mae, result.report.rank);
            }
            Err(message) => {
                csv.push_str(&format!("{},,,,,{}\n", fmt17(row.epsilon), csv_field(message)));
                println!("epsilon {:>10}: failed: {message}", row.epsilon);
            }
        }
    }
    fs::write(args.out_dir.join("sweep.csv"), csv)?;
    if !scaling_rows.is_empty() {
        scaling_table(&scaling_rows, &args.out_dir.join("scaling.csv"))?;
    }
    println!("artifacts written to {}", args.out_dir.display());
    Ok(())
}

/// Rebuilds the activation matrix a report's run would assemble.
fn reassemble(config: &ElmConfig, problem: &ProblemSpec) -> Result<(EncodedBasis, LinearSystem)> {
    let basis = build_basis(config)?;
    let sys = match problem {
        ProblemSpec::Ode { problem, .. } => assemble_ode(&basis, problem)?,
        ProblemSpec::FitFunction { target, samples } => {
            let (xs, ys) = match parse_target(target) {
                Ok(Target::Multiscale) => {
                    let xs = uniform_grid(*samples);
                    let ys = xs.iter().map(|&x| multiscale_target(x)).collect();
                    (xs, ys)
                }
                Ok(Target::Csv(path)) => read_target_csv(&path)?,
                Err(e) => return Err(Error::Malformed(format!("report target: {e}"))),
            };
            assemble_fit(&basis, &xs, &ys)?
        }
        ProblemSpec::FitImage { input, .. } => {
            let (xs, ys) = load_image_vector(Path::new(input))?;
            assemble_fit(&basis, &xs, &ys)?
        }
    };
    Ok((basis, sys))
}

fn run_diagnose(args: DiagnoseArgs) -> Result<()> {
    let (command_config, problem, rank_tol_factor) = match &args.from_report {
        Some(path) => {
            let report = read_report(path)?;
            (report.config, report.problem, report.rank_tol_factor)
        }
        None => {
            let config = args.model.config(1e-4)?;
            let problem = args.ode.problem(args.model.seed)?;
            (
                config,
                ProblemSpec::Ode { epsilon: args.ode.epsilon, problem },
                args.model.rank_tol_factor,
            )
        }
    };

    let (_basis, sys) = reassemble(&command_config, &problem)?;
    fs::create_dir_all(&args.out_dir)?;

    let t0 = Instant::now();
    let decomp = svd(&sys.h, rank_tol_factor)?;
    let svd_seconds = t0.elapsed().as_secs_f64();
    let (raw_condition, effective_condition) = condition_number(&decomp.spectrum)?;

    let mut artifacts = ArtifactPaths::default();
    if args.dump_spectrum {
        export_spectrum(&decomp.spectrum, &args.out_dir.join("spectrum.csv"))?;
        artifacts.spectrum_csv = Some("spectrum.csv".into());
    }
    if args.dump_matrix {
        export_heatmap(
            &sys.h,
            Normalization::LogAbs,
            &args.out_dir.join("heatmap.pgm"),
            args.full_res,
        )?;
        artifacts.heatmap_pgm = Some("heatmap.pgm".into());
    }

    let conditioning = ConditioningSummary {
        rank: numerical_rank(&decomp.spectrum),
        raw_condition,
        effective_condition,
        log10_det_proxy: log10_det_proxy(&decomp.spectrum),
        sparsity: sys.h.zero_fraction(),
    };
    let report = RunReport {
        schema_version: REPORT_SCHEMA_VERSION.into(),
        command: "diagnose".into(),
        config: command_config,
        problem,
        rank_tol_factor,
        metrics: None,
        conditioning: conditioning.clone(),
        train_seconds: svd_seconds,
        artifacts,
    };
    write_report(&report, &args.out_dir.join("report.json"))?;

    println!(
        "diagnose: {}x{} matrix, rank {}, raw condition {}, effective condition {:.3e}, sparsity {:.3}",
        sys.h.rows(),
        sys.h.cols(),
        conditioning.rank,
        fmt17(conditioning.raw_condition),
        conditioning.effective_condition,
        conditioning.sparsity
    );
    println!("artifacts written to {}", args.out_dir.display());
    Ok(())
}
