//! Argument surface and command dispatch for the `cccp` binary.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write as _};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use cccp::bl::{bl_constant, BlDatum};
use cccp::dcrep::{dc_distance_squared, QuadratureScheme};
use cccp::io;
use cccp::point::PosVector;
use cccp::scaling::ScalingProblem;
use cccp::sdiv::{matrix_sqrt_via_sdiv, BarycenterProblem};
use cccp::solver::{IterateTrace, SolverConfig};
use cccp::spd::riemannian_distance;
use cccp::tyler::TylerProblem;

use crate::bench;
use crate::gen;
use crate::manifest::{RunManifest, SolverSettings};
use crate::svg;

#[derive(Parser)]
#[command(name = "cccp", version, about = "CCCP solvers for geodesically convex problems on SPD matrices")]
pub struct Cli {
    #[command(flatten)]
    pub globals: Globals,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args)]
pub struct Globals {
    /// RNG seed for instance generation and index sampling.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output directory for artifacts.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads for the bench grid.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
    /// Step tolerance for solves; verification tolerance for verify-dcrep.
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, global = true, default_value_t = 10_000)]
    pub max_iters: usize,
    /// Also write trace.csv and trace.svg for the solve.
    #[arg(long, global = true)]
    pub trace: bool,
    /// Report failures as a JSON object on stderr.
    #[arg(long, global = true)]
    pub json_errors: bool,
}

#[derive(Subcommand)]
pub enum Command {
    /// Scale a positive square matrix to doubly stochastic form.
    Scale { input: PathBuf },
    /// Tyler M-estimator of scatter from sample rows.
    Tyler { input: PathBuf },
    /// Principal square root of an SPD matrix.
    Sqrt { input: PathBuf },
    /// S-divergence barycenter of SPD atoms.
    Barycenter {
        inputs: Vec<PathBuf>,
        /// Comma-separated weights; uniform when omitted.
        #[arg(long)]
        weights: Option<String>,
    },
    /// Brascamp-Lieb constant for a datum file.
    Bl { input: PathBuf },
    /// Solver comparison grid; writes bench.csv and SVG charts.
    Bench {
        #[arg(long, default_value = "sqrt,bl")]
        apps: String,
        #[arg(long, default_value = "4,16,64")]
        dims: String,
        #[arg(long, default_value = "cccp,rgd-fixed,rgd-bt")]
        solvers: String,
    },
    /// Check the integral representation of the squared distance against
    /// the eigenvalue formula on random pairs.
    VerifyDcrep {
        /// Inclusive dimension range `a..b` or comma list.
        #[arg(long, default_value = "2..6")]
        dims: String,
        #[arg(long, default_value_t = 50)]
        trials: usize,
    },
    /// Write a deterministic problem instance file.
    Generate {
        #[arg(value_parser = ["spd", "scaling", "tyler", "bl"])]
        kind: String,
        #[arg(long, default_value_t = 8)]
        dim: usize,
        /// Condition number for SPD generation.
        #[arg(long, default_value_t = 100.0)]
        kappa: f64,
        /// Sample count for tyler instances.
        #[arg(long, default_value_t = 200)]
        samples: usize,
        /// Columns per map for bl instances.
        #[arg(long, default_value_t = 2)]
        cols: usize,
    },
}

#[derive(Debug)]
pub struct CliError {
    pub kind: String,
    pub message: String,
}

impl CliError {
    fn new(kind: &str, message: impl Into<String>) -> Self {
        Self { kind: kind.into(), message: message.into() }
    }
}

impl From<cccp::error::Error> for CliError {
    fn from(e: cccp::error::Error) -> Self {
        use cccp::error::Error as E;
        let kind = match &e {
            E::NotSymmetric { .. } => "not_symmetric",
            E::CholeskyFailure => "cholesky_failure",
            E::EigFailure => "eig_failure",
            E::DimMismatch { .. } => "dim_mismatch",
            E::DomainError(_) => "domain_error",
            E::OracleFailure(_) => "oracle_failure",
            E::InnerSolverFailure(_) => "inner_solver_failure",
            E::SingularGradient => "singular_gradient",
            E::RankDeficiency { .. } => "rank_deficiency",
            E::SingularAggregate => "singular_aggregate",
            E::DivergenceDetected => "divergence_detected",
            E::QuadratureNonConvergence { .. } => "quadrature_nonconvergence",
            E::Aborted { .. } => "aborted",
            E::Io(_) => "io",
            E::Parse(_) => "parse",
        };
        CliError::new(kind, e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::new("io", e.to_string())
    }
}

impl From<String> for CliError {
    fn from(m: String) -> Self {
        CliError::new("usage", m)
    }
}

type CliResult = Result<(), CliError>;

fn solver_config(g: &Globals) -> SolverConfig {
    SolverConfig {
        max_iters: g.max_iters,
        objective_tol: 0.0,
        step_tol: g.tol,
        rng_seed: g.seed,
        ..Default::default()
    }
}

fn settings(cfg: &SolverConfig) -> SolverSettings {
    SolverSettings {
        max_iters: cfg.max_iters,
        step_tol: cfg.step_tol,
        objective_tol: cfg.objective_tol,
    }
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::new("io", format!("{}: {e}", path.display())))
}

fn write_matrix_file(path: &Path, m: &nalgebra::DMatrix<f64>) -> CliResult {
    let mut w = BufWriter::new(File::create(path)?);
    io::write_matrix(&mut w, m)?;
    Ok(())
}

/// Trace artifacts and the run manifest written by every solve command.
fn finish_solve(
    g: &Globals,
    app: &str,
    inputs: Vec<PathBuf>,
    cfg: &SolverConfig,
    trace: &IterateTrace,
) -> CliResult {
    if g.trace {
        let mut w = BufWriter::new(File::create(g.out.join("trace.csv"))?);
        trace.write_csv(&mut w)?;
        w.flush()?;
        let floor = trace.objectives().fold(f64::INFINITY, f64::min);
        let excess = svg::Series {
            label: "objective excess".into(),
            points: trace
                .records
                .iter()
                .map(|r| (r.k as f64, (r.phi - floor).max(0.0)))
                .collect(),
        };
        let steps = svg::Series {
            label: "riemannian step".into(),
            points: trace.records.iter().map(|r| (r.k as f64, r.step_riem)).collect(),
        };
        let chart = svg::log_line_chart(
            &format!("{app}: convergence"),
            "iteration",
            "value",
            &[excess, steps],
        );
        std::fs::write(g.out.join("trace.svg"), chart)?;
    }
    let manifest = RunManifest::new(app, inputs, g.seed, settings(cfg), g.out.clone());
    manifest.write(&g.out)?;
    Ok(())
}

pub fn run(cli: Cli) -> CliResult {
    let g = &cli.globals;
    std::fs::create_dir_all(&g.out)?;
    match &cli.command {
        Command::Scale { input } => cmd_scale(g, input),
        Command::Tyler { input } => cmd_tyler(g, input),
        Command::Sqrt { input } => cmd_sqrt(g, input),
        Command::Barycenter { inputs, weights } => cmd_barycenter(g, inputs, weights.as_deref()),
        Command::Bl { input } => cmd_bl(g, input),
        Command::Bench { apps, dims, solvers } => cmd_bench(g, apps, dims, solvers),
        Command::VerifyDcrep { dims, trials } => cmd_verify_dcrep(g, dims, *trials),
        Command::Generate { kind, dim, kappa, samples, cols } => {
            cmd_generate(g, kind, *dim, *kappa, *samples, *cols)
        }
    }
}

fn cmd_scale(g: &Globals, input: &Path) -> CliResult {
    let cfg = solver_config(g);
    let m = io::read_square(open(input)?)?;
    let p = ScalingProblem::new(m)?;
    let (x, trace) = p.solve(PosVector::ones(p.dim()), &cfg)?;
    let scaled = p.scaled_matrix(&x);
    let col_dev = (0..scaled.ncols())
        .map(|j| (scaled.column(j).sum() - 1.0).abs())
        .fold(0.0f64, f64::max);
    write_matrix_file(&g.out.join("scaled.txt"), &scaled)?;
    let (d, e) = p.assemble(&x);
    let mut w = BufWriter::new(File::create(g.out.join("scalings.txt"))?);
    for v in [&d, &e] {
        let row: Vec<String> = v.iter().map(|t| format!("{t:.17e}")).collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    w.flush()?;
    println!(
        "scale: n={} iters={} phi={:.12e} max_col_dev={:.3e}",
        p.dim(),
        trace.iterations(),
        trace.final_phi().unwrap_or(f64::NAN),
        col_dev
    );
    finish_solve(g, "scale", vec![input.to_path_buf()], &cfg, &trace)
}

fn cmd_tyler(g: &Globals, input: &Path) -> CliResult {
    let cfg = solver_config(g);
    let samples = io::read_samples(open(input)?)?;
    let p = TylerProblem::new(samples)?;
    let (pk, trace) = p.solve(&cfg)?;
    let scatter = p.scatter(&pk)?;
    write_matrix_file(&g.out.join("scatter.txt"), scatter.as_matrix())?;
    println!(
        "tyler: d={} iters={} residual={:.3e}",
        scatter.dim(),
        trace.iterations(),
        p.fixed_point_residual(&pk)
    );
    finish_solve(g, "tyler", vec![input.to_path_buf()], &cfg, &trace)
}

fn cmd_sqrt(g: &Globals, input: &Path) -> CliResult {
    let cfg = solver_config(g);
    let m = io::read_spd(open(input)?)?;
    let (x, trace) = matrix_sqrt_via_sdiv(&m, &cfg)?;
    let residual = (x.as_matrix() * x.as_matrix() - m.as_matrix()).norm() / m.frob_norm();
    write_matrix_file(&g.out.join("sqrt.txt"), x.as_matrix())?;
    println!(
        "sqrt: d={} iters={} phi={:.12e} residual={:.3e}",
        m.dim(),
        trace.iterations(),
        trace.final_phi().unwrap_or(f64::NAN),
        residual
    );
    finish_solve(g, "sqrt", vec![input.to_path_buf()], &cfg, &trace)
}

fn cmd_barycenter(g: &Globals, inputs: &[PathBuf], weights: Option<&str>) -> CliResult {
    if inputs.is_empty() {
        return Err(CliError::new("usage", "barycenter needs at least one atom file"));
    }
    let cfg = solver_config(g);
    let atoms = inputs
        .iter()
        .map(|p| io::read_spd(open(p)?).map_err(CliError::from))
        .collect::<Result<Vec<_>, _>>()?;
    let w = match weights {
        Some(text) => text
            .split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|e| format!("bad weight '{t}': {e}")))
            .collect::<Result<Vec<_>, _>>()?,
        None => vec![1.0 / atoms.len() as f64; atoms.len()],
    };
    let p = BarycenterProblem::new(atoms, w)?;
    let (x, trace) = p.solve(&cfg)?;
    write_matrix_file(&g.out.join("barycenter.txt"), x.as_matrix())?;
    println!(
        "barycenter: d={} atoms={} iters={} phi={:.12e} residual={:.3e}",
        p.dim(),
        inputs.len(),
        trace.iterations(),
        trace.final_phi().unwrap_or(f64::NAN),
        p.stationarity_residual(&x)?
    );
    finish_solve(g, "barycenter", inputs.to_vec(), &cfg, &trace)
}

fn cmd_bl(g: &Globals, input: &Path) -> CliResult {
    let cfg = solver_config(g);
    let text = std::fs::read_to_string(input)?;
    let datum = BlDatum::parse(&text)?;
    let (value, x, trace) = bl_constant(&datum, &cfg)?;
    write_matrix_file(&g.out.join("bl_point.txt"), x.as_matrix())?;
    println!(
        "bl: d={} maps={} iters={} log_constant={:.12e}",
        datum.dim(),
        datum.maps().len(),
        trace.iterations(),
        value
    );
    finish_solve(g, "bl", vec![input.to_path_buf()], &cfg, &trace)
}

fn cmd_bench(g: &Globals, apps: &str, dims: &str, solvers: &str) -> CliResult {
    let apps = apps
        .split(',')
        .map(|t| bench::App::parse(t.trim()))
        .collect::<Result<Vec<_>, _>>()?;
    let dims = parse_dims(dims)?;
    let keys: Vec<String> = solvers.split(',').map(|t| t.trim().to_string()).collect();
    let solvers = bench::expand_solvers(&keys)?;
    let records = bench::run_grid(&apps, &dims, &solvers, g.seed, g.jobs, &g.out)?;
    println!("{}", bench::CSV_HEADER);
    for r in &records {
        println!("{}", r.csv_line());
    }
    let cfg = solver_config(g);
    let manifest = RunManifest::new("bench", vec![], g.seed, settings(&cfg), g.out.clone());
    manifest.write(&g.out)?;
    Ok(())
}

fn cmd_verify_dcrep(g: &Globals, dims: &str, trials: usize) -> CliResult {
    let dims = parse_dims(dims)?;
    let scheme = QuadratureScheme::default();
    let mut failures = 0usize;
    println!("{:>4} {:>7} {:>13} {:>7}", "dim", "trials", "max_abs_err", "status");
    for &d in &dims {
        let mut r = gen::rng(g.seed.wrapping_add(d as u64));
        let mut worst = 0.0f64;
        for _ in 0..trials {
            let x = gen::random_spd(d, 50.0, &mut r);
            let y = gen::random_spd(d, 50.0, &mut r);
            let lhs = dc_distance_squared(&x, &y, &scheme)?;
            let rhs = riemannian_distance(&x, &y)?.powi(2);
            worst = worst.max((lhs - rhs).abs());
        }
        let ok = worst <= g.tol;
        if !ok {
            failures += 1;
        }
        println!("{d:>4} {trials:>7} {worst:>13.3e} {:>7}", if ok { "ok" } else { "FAIL" });
    }
    if failures > 0 {
        return Err(CliError::new(
            "verification_failure",
            format!("integral representation check failed for {failures} dimension(s)"),
        ));
    }
    println!("verify-dcrep: all {} dimension(s) within {:.1e}", dims.len(), g.tol);
    Ok(())
}

fn cmd_generate(
    g: &Globals,
    kind: &str,
    dim: usize,
    kappa: f64,
    samples: usize,
    cols: usize,
) -> CliResult {
    let mut r = gen::rng(g.seed);
    let path = match kind {
        "spd" => {
            let m = gen::random_spd(dim, kappa, &mut r);
            let path = g.out.join(format!("spd_d{dim}_seed{}.txt", g.seed));
            write_matrix_file(&path, m.as_matrix())?;
            path
        }
        "scaling" => {
            let m = gen::random_positive(dim, &mut r);
            let path = g.out.join(format!("scaling_d{dim}_seed{}.txt", g.seed));
            write_matrix_file(&path, &m)?;
            path
        }
        "tyler" => {
            let shape = gen::random_spd(dim, 10.0, &mut r);
            let rows = gen::elliptical_samples(dim, samples, &shape, &mut r);
            let path = g.out.join(format!("tyler_d{dim}_n{samples}_seed{}.txt", g.seed));
            let mut w = BufWriter::new(File::create(&path)?);
            for row in &rows {
                let line: Vec<String> = row.iter().map(|v| format!("{v:.17e}")).collect();
                writeln!(w, "{}", line.join(" "))?;
            }
            w.flush()?;
            path
        }
        "bl" => {
            if cols < 1 || cols > dim {
                return Err(CliError::new("usage", "bl generation needs 1 <= cols <= dim"));
            }
            let datum = gen::geometric_bl_datum(dim, cols, &mut r);
            let path = g.out.join(format!("bl_d{dim}_k{cols}_seed{}.txt", g.seed));
            std::fs::write(&path, datum.to_text())?;
            path
        }
        other => return Err(CliError::new("usage", format!("unknown kind '{other}'"))),
    };
    println!("generate: wrote {}", path.display());
    Ok(())
}

/// `a..b` (inclusive) or a comma list of dimensions.
pub fn parse_dims(text: &str) -> Result<Vec<usize>, String> {
    let text = text.trim();
    if let Some((a, b)) = text.split_once("..") {
        let lo: usize = a.trim().parse().map_err(|_| format!("bad dimension range '{text}'"))?;
        let hi: usize = b.trim().parse().map_err(|_| format!("bad dimension range '{text}'"))?;
        if lo == 0 || hi < lo {
            return Err(format!("bad dimension range '{text}'"));
        }
        return Ok((lo..=hi).collect());
    }
    text.split(',')
        .map(|t| {
            let d: usize = t.trim().parse().map_err(|_| format!("bad dimension '{t}'"))?;
            if d == 0 {
                return Err("dimension must be positive".to_string());
            }
            Ok(d)
        })
        .collect()
}

/// Sanity hook for the weights parser used by `barycenter`.
pub fn parse_weights(text: &str) -> Result<Vec<f64>, String> {
    text.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("bad weight '{t}': {e}")))
        .collect()
}
