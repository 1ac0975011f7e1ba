//! Head-to-head benchmark grid: {sqrt, bl} × dims × {cccp, rgd-fixed, rgd-bt},
//! one BenchRecord per cell plus per-(app, dim) SVG charts of objective gap
//! against oracle calls and against wall time.
//!
//! Cells are independent pure solves; a small worker pool (sized by `jobs`)
//! drains the cell list and results are merged in grid order, so the CSV is
//! deterministic modulo the wall_ns column.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use cccp::bl::BlDatum;
use cccp::rgd::{rgd_solve, riemannian_gradient, metric_norm, RgdConfig, SmoothObjective};
use cccp::sdiv::BarycenterProblem;
use cccp::solver::{IterateTrace, SolverConfig};
use cccp::spd::SpdMatrix;

use crate::gen;

/// Objective gap below which a solve counts as converged for the
/// oracle-call comparison.
pub const GAP_TARGET: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum App {
    Sqrt,
    Bl,
}

impl App {
    pub fn name(self) -> &'static str {
        match self {
            App::Sqrt => "sqrt",
            App::Bl => "bl",
        }
    }

    pub fn parse(s: &str) -> Result<Self, String> {
        match s {
            "sqrt" => Ok(App::Sqrt),
            "bl" => Ok(App::Bl),
            other => Err(format!("unknown bench app '{other}' (expected sqrt or bl)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Solver {
    Cccp,
    RgdFixed(f64),
    RgdBacktracking,
}

impl Solver {
    pub fn name(self) -> String {
        match self {
            Solver::Cccp => "cccp".into(),
            Solver::RgdFixed(eta) => format!("rgd-fixed-{eta:.0e}"),
            Solver::RgdBacktracking => "rgd-bt".into(),
        }
    }
}

/// Expand a solver keyword; `rgd-fixed` fans out over the step-size sweep.
pub fn expand_solvers(keys: &[String]) -> Result<Vec<Solver>, String> {
    let mut out = Vec::new();
    for k in keys {
        match k.as_str() {
            "cccp" => out.push(Solver::Cccp),
            "rgd-fixed" => {
                out.push(Solver::RgdFixed(1e-2));
                out.push(Solver::RgdFixed(1e-1));
            }
            "rgd-bt" => out.push(Solver::RgdBacktracking),
            other => return Err(format!("unknown solver '{other}' (expected cccp, rgd-fixed, rgd-bt)")),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct BenchRecord {
    pub app: String,
    pub solver: String,
    pub dim: usize,
    pub seed: u64,
    pub iters: usize,
    pub phi: f64,
    pub residual: f64,
    pub wall_ns: u128,
}

pub const CSV_HEADER: &str = "app,solver,dim,seed,iters,phi,residual,wall_ns";

impl BenchRecord {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{:.17e},{:.17e},{}",
            self.app, self.solver, self.dim, self.seed, self.iters, self.phi, self.residual, self.wall_ns
        )
    }
}

pub struct CellOutput {
    pub record: BenchRecord,
    /// (oracle call index, gap) and (seconds, gap) series for the charts.
    pub gap_vs_iter: Vec<(f64, f64)>,
    pub gap_vs_time: Vec<(f64, f64)>,
}

fn cell_seed(app: App, dim: usize, seed: u64) -> u64 {
    // splitmix64 over a cell tag so instances differ across the grid
    let mut z = seed
        .wrapping_mul(0x9e3779b97f4a7c15)
        .wrapping_add(dim as u64)
        .wrapping_add(match app {
            App::Sqrt => 0x517cc1b727220a95,
            App::Bl => 0x2545f4914f6cdd1d,
        });
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

enum Instance {
    Sqrt { problem: BarycenterProblem, x0: SpdMatrix, phi_star: f64 },
    Bl { datum: BlDatum, x0: SpdMatrix },
}

fn build_instance(app: App, dim: usize, seed: u64) -> Result<Instance, cccp::Error> {
    let mut r = gen::rng(cell_seed(app, dim, seed));
    match app {
        App::Sqrt => {
            // scale-preconditioned pair {I, cM}
            let m = gen::random_spd(dim, 100.0, &mut r);
            let c = (m.inverse()?.frob_norm() / m.frob_norm()).sqrt();
            let ms = m.scale(c)?;
            let phi_star_at = ms.sqrt()?;
            let problem =
                BarycenterProblem::new(vec![SpdMatrix::identity(dim), ms.clone()], vec![0.5, 0.5])?;
            let x0 =
                SpdMatrix::new((SpdMatrix::identity(dim).as_matrix() + ms.as_matrix()) * 0.5)?;
            let phi_star = problem.objective_value(&phi_star_at)?;
            Ok(Instance::Sqrt { problem, x0, phi_star })
        }
        App::Bl => {
            let k = 2.min(dim);
            let datum = gen::geometric_bl_datum(dim, k, &mut r);
            // the geometric datum is minimized at the identity, so start the
            // race from a conditioned random point instead
            let x0 = gen::random_spd(dim, 10.0, &mut r);
            Ok(Instance::Bl { datum, x0 })
        }
    }
}

/// Oracle calls until the recorded objective first falls within GAP_TARGET
/// of the optimum; the full count if it never does.
fn calls_to_target(trace: &IterateTrace, phi_star: f64, total: usize) -> usize {
    trace
        .records
        .iter()
        .find(|rec| rec.phi - phi_star <= GAP_TARGET)
        .map(|rec| rec.k)
        .unwrap_or(total)
}

fn gap_series(trace: &IterateTrace, phi_star: f64) -> (Vec<(f64, f64)>, Vec<(f64, f64)>) {
    let vs_iter = trace
        .records
        .iter()
        .map(|rec| (rec.k as f64, (rec.phi - phi_star).max(0.0)))
        .collect();
    let vs_time = trace
        .records
        .iter()
        .map(|rec| (rec.wall_ns as f64 / 1e9, (rec.phi - phi_star).max(0.0)))
        .collect();
    (vs_iter, vs_time)
}

pub fn run_cell(app: App, dim: usize, seed: u64, solver: Solver) -> Result<CellOutput, cccp::Error> {
    let instance = build_instance(app, dim, seed)?;
    let t0 = Instant::now();
    let cccp_cfg = SolverConfig {
        max_iters: 2000,
        objective_tol: 0.0,
        step_tol: 1e-12,
        ..Default::default()
    };
    let rgd_cfg = |s: Solver| match s {
        Solver::RgdFixed(eta) => RgdConfig {
            step_size: eta,
            use_backtracking: false,
            max_iters: 4000,
            grad_tol: 1e-12,
            ..Default::default()
        },
        _ => RgdConfig { max_iters: 4000, grad_tol: 1e-12, ..Default::default() },
    };

    let (x, trace, oracle_calls, phi_star): (SpdMatrix, IterateTrace, usize, f64) = match (&instance, solver) {
        (Instance::Sqrt { problem, x0, phi_star }, Solver::Cccp) => {
            let (x, trace) = cccp::solver::solve(problem, x0.clone(), &cccp_cfg)?;
            let n = trace.iterations();
            (x, trace, n, *phi_star)
        }
        (Instance::Sqrt { problem, x0, phi_star }, s) => {
            let (x, trace, stats) = rgd_solve(problem, x0.clone(), &rgd_cfg(s))?;
            (x, trace, stats.gradient_evals, *phi_star)
        }
        (Instance::Bl { datum, x0 }, Solver::Cccp) => {
            let (x, trace) = cccp::solver::solve(datum, x0.clone(), &cccp_cfg)?;
            let n = trace.iterations();
            (x, trace, n, 0.0)
        }
        (Instance::Bl { datum, x0 }, s) => {
            let (x, trace, stats) = rgd_solve(datum, x0.clone(), &rgd_cfg(s))?;
            (x, trace, stats.gradient_evals, 0.0)
        }
    };
    let wall_ns = t0.elapsed().as_nanos();

    // residual: Riemannian gradient norm of the smooth objective at the end
    let residual = match &instance {
        Instance::Sqrt { problem, .. } => {
            let g = riemannian_gradient(&x, &problem.gradient(&x)?);
            metric_norm(&x, &g)?
        }
        Instance::Bl { datum, .. } => {
            let g = riemannian_gradient(&x, &datum.gradient(&x)?);
            metric_norm(&x, &g)?
        }
    };

    let iters = calls_to_target(&trace, phi_star, oracle_calls);
    let phi = trace.final_phi().unwrap_or(f64::NAN);
    let (gap_vs_iter, gap_vs_time) = gap_series(&trace, phi_star);
    Ok(CellOutput {
        record: BenchRecord {
            app: app.name().to_string(),
            solver: solver.name(),
            dim,
            seed,
            iters,
            phi,
            residual,
            wall_ns,
        },
        gap_vs_iter,
        gap_vs_time,
    })
}

/// Run the full grid and write `bench.csv` plus the SVG charts into `out`.
pub fn run_grid(
    apps: &[App],
    dims: &[usize],
    solvers: &[Solver],
    seed: u64,
    jobs: usize,
    out: &Path,
) -> std::io::Result<Vec<BenchRecord>> {
    let cells: Vec<(App, usize, Solver)> = apps
        .iter()
        .flat_map(|&a| dims.iter().flat_map(move |&d| solvers.iter().map(move |&s| (a, d, s))))
        .collect();

    let results: Vec<Mutex<Option<Result<CellOutput, cccp::Error>>>> =
        cells.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = jobs.max(1).min(cells.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= cells.len() {
                    break;
                }
                let (app, dim, solver) = cells[i];
                let out = run_cell(app, dim, seed, solver);
                *results[i].lock().unwrap() = Some(out);
            });
        }
    });
    let mut outputs = Vec::with_capacity(cells.len());
    for (m, &(app, dim, solver)) in results.into_iter().zip(&cells) {
        match m.into_inner().unwrap().expect("worker pool covered every cell") {
            Ok(out) => outputs.push(out),
            Err(e) => {
                return Err(std::io::Error::other(format!(
                    "bench cell {}/{}/d{dim} failed: {e}",
                    app.name(),
                    solver.name()
                )))
            }
        }
    }

    std::fs::create_dir_all(out)?;
    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');
    for o in &outputs {
        let _ = writeln!(csv, "{}", o.record.csv_line());
    }
    std::fs::write(out.join("bench.csv"), csv)?;

    // one pair of charts per (app, dim), one series per solver
    for &app in apps {
        for &dim in dims {
            let mut iter_series = Vec::new();
            let mut time_series = Vec::new();
            for o in &outputs {
                if o.record.app == app.name() && o.record.dim == dim {
                    iter_series.push(crate::svg::Series {
                        label: o.record.solver.clone(),
                        points: o.gap_vs_iter.clone(),
                    });
                    time_series.push(crate::svg::Series {
                        label: o.record.solver.clone(),
                        points: o.gap_vs_time.clone(),
                    });
                }
            }
            let title = format!("{} d={dim}: objective gap", app.name());
            std::fs::write(
                out.join(format!("{}_d{dim}_gap_vs_iter.svg", app.name())),
                crate::svg::log_line_chart(&title, "oracle calls", "objective gap", &iter_series),
            )?;
            std::fs::write(
                out.join(format!("{}_d{dim}_gap_vs_time.svg", app.name())),
                crate::svg::log_line_chart(&title, "wall time (s)", "objective gap", &time_series),
            )?;
        }
    }

    Ok(outputs.into_iter().map(|o| o.record).collect())
}
