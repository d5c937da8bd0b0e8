//! Batch orchestration behind the `magstar` binary: each command reads a
//! [`RunConfig`], writes its artifacts under the output directory and maps
//! failures onto a fixed set of exit codes.
//!
//! Every CSV is accompanied by a JSON sidecar of the same stem that carries
//! the config hash; every JSON artifact carries it inline.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::RunConfig;
use crate::diagnostics::{diagnose, reconstruct_fields, DiagnosticsReport, StarSolution};
use crate::equilibrium::{write_trace, ModelParams, NewtonOutcome, NewtonStep, StateVector, SweepOrder};
use crate::error::StarError;
use crate::verify::{VerifyContext, VerifyReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RADIAL: i32 = 3;
pub const EXIT_NO_CONVERGENCE: i32 = 4;
pub const EXIT_VERIFY: i32 = 5;

/// A failed command: exit code plus message.
#[derive(Debug)]
pub struct CommandError {
    pub code: i32,
    pub message: String,
}

impl std::fmt::Display for CommandError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} (exit {})", self.message, self.code)
    }
}

impl std::error::Error for CommandError {}

/// Which stage an error came from; the same variant can mean different
/// things in the radial solve and in Newton.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Radial,
    Equilibrium,
}

pub fn exit_code(err: &StarError, stage: Stage) -> i32 {
    match err {
        StarError::Config(_) | StarError::DegenerateGamma { .. } | StarError::Guard(_) => EXIT_CONFIG,
        StarError::Io(_) | StarError::Json(_) => EXIT_IO,
        _ => match stage {
            Stage::Radial => EXIT_RADIAL,
            Stage::Equilibrium => EXIT_NO_CONVERGENCE,
        },
    }
}

fn fail(err: StarError, stage: Stage) -> CommandError {
    CommandError {
        code: exit_code(&err, stage),
        message: err.to_string(),
    }
}

fn io_fail(err: std::io::Error) -> CommandError {
    fail(StarError::Io(err), Stage::Radial)
}

/// Settings that come from the command line rather than the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
}

impl Overrides {
    /// Applies the overrides and validates the result.
    pub fn apply(&self, mut cfg: RunConfig) -> Result<RunConfig, CommandError> {
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        cfg.validate().map_err(|e| fail(e, Stage::Radial))?;
        Ok(cfg)
    }

    pub fn workers(&self) -> usize {
        self.workers.unwrap_or(1).max(1)
    }
}

/// Loads `path` or the defaults when absent.
pub fn load_config(path: Option<&Path>) -> Result<RunConfig, CommandError> {
    let cfg = match path {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    };
    cfg.map_err(|e| fail(e, Stage::Radial))
}

#[derive(Serialize)]
struct Sidecar<'a> {
    config_hash: &'a str,
    file: &'a str,
    columns: &'a [&'a str],
    rows: usize,
}

/// Writes `dir/<stem>.csv` through `body` and its sidecar `dir/<stem>.json`.
fn write_csv_with_sidecar(
    dir: &Path,
    stem: &str,
    hash: &str,
    columns: &[&str],
    rows: usize,
    body: impl FnOnce(&mut BufWriter<File>) -> crate::error::Result<()>,
) -> Result<(), CommandError> {
    let name = format!("{stem}.csv");
    let mut w = BufWriter::new(File::create(dir.join(&name)).map_err(io_fail)?);
    body(&mut w).map_err(|e| fail(e, Stage::Radial))?;
    w.flush().map_err(io_fail)?;
    write_json(
        dir,
        stem,
        &Sidecar {
            config_hash: hash,
            file: &name,
            columns,
            rows,
        },
    )
}

fn write_json<T: Serialize>(dir: &Path, stem: &str, value: &T) -> Result<(), CommandError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| fail(StarError::Json(e), Stage::Radial))?;
    std::fs::write(dir.join(format!("{stem}.json")), text + "\n").map_err(io_fail)
}

fn prepare_dir(dir: &Path) -> Result<(), CommandError> {
    std::fs::create_dir_all(dir).map_err(io_fail)
}

/// Summary of `radial`.
#[derive(Debug, Clone, Serialize)]
pub struct RadialSummary {
    pub xi1: f64,
    pub total_mass: f64,
    pub kappa: f64,
}

/// Solves the spherical star and writes `profile.csv` / `profile.json`.
pub fn cmd_radial(cfg: &RunConfig) -> Result<RadialSummary, CommandError> {
    let profile = cfg.profile().map_err(|e| fail(e, Stage::Radial))?;
    let dir = &cfg.output_dir;
    prepare_dir(dir)?;
    let hash = cfg.hash();
    profile
        .save(dir, "profile", Some(&hash))
        .map_err(|e| fail(e, Stage::Radial))?;
    Ok(RadialSummary {
        xi1: profile.xi1,
        total_mass: profile.total_mass,
        kappa: profile.eos.kappa,
    })
}

/// Short form of the diagnostics stored with a solution snapshot.
#[derive(Debug, Clone, Serialize)]
pub struct DiagnosticsDigest {
    pub all_pass: bool,
    pub momentum_residual: f64,
    pub force_ratio: f64,
    pub oblateness: f64,
    pub mass: f64,
}

impl From<&DiagnosticsReport> for DiagnosticsDigest {
    fn from(r: &DiagnosticsReport) -> Self {
        Self {
            all_pass: r.all_pass,
            momentum_residual: r.momentum.relative,
            force_ratio: r.force_identity.ratio,
            oblateness: r.oblateness,
            mass: r.mass,
        }
    }
}

#[derive(Serialize)]
struct SolutionSnapshot<'a> {
    config_hash: &'a str,
    params: &'a ModelParams,
    residual: f64,
    iterations: usize,
    mass_factor: f64,
    r_eq: f64,
    r_pol: f64,
    state: &'a StateVector,
    diagnostics: DiagnosticsDigest,
}

#[derive(Serialize)]
struct HashedReport<'a, T> {
    config_hash: &'a str,
    #[serde(flatten)]
    report: &'a T,
}

fn write_trace_files(dir: &Path, hash: &str, trace: &[NewtonStep]) -> Result<(), CommandError> {
    write_csv_with_sidecar(
        dir,
        "trace",
        hash,
        &["iteration", "residual", "step", "condition"],
        trace.len(),
        |w| write_trace(w, trace),
    )
}

/// Writes the snapshot, diagnostics and optionally the field dump of one
/// converged point.
fn write_point(
    dir: &Path,
    cfg: &RunConfig,
    outcome: &NewtonOutcome,
    sol: &StarSolution,
    report: &DiagnosticsReport,
    fields: bool,
) -> Result<(), CommandError> {
    prepare_dir(dir)?;
    let hash = cfg.hash();
    write_trace_files(dir, &hash, &outcome.trace)?;
    write_json(
        dir,
        "diagnostics",
        &HashedReport {
            config_hash: &hash,
            report,
        },
    )?;
    write_json(
        dir,
        "solution",
        &SolutionSnapshot {
            config_hash: &hash,
            params: &sol.params,
            residual: outcome.residual,
            iterations: outcome.iterations,
            mass_factor: sol.mass_factor,
            r_eq: sol.r_eq,
            r_pol: sol.r_pol,
            state: &outcome.state,
            diagnostics: report.into(),
        },
    )?;
    if fields {
        let d = &cfg.diagnostics;
        let grid = sol
            .sample_fields(d.dump_spacing, d.dump_extent)
            .map_err(|e| fail(e, Stage::Equilibrium))?;
        write_csv_with_sidecar(
            dir,
            "fields",
            &hash,
            &["r", "z", "rho", "psi", "U", "Br", "Bz", "Jtheta"],
            grid.n_r * grid.n_z,
            |w| grid.write_csv(w),
        )?;
    }
    Ok(())
}

/// Summary of `solve`.
#[derive(Debug, Clone)]
pub struct SolveSummary {
    pub outcome: NewtonOutcome,
    pub report: DiagnosticsReport,
}

/// One equilibrium at `(ω², ε)` from the first-order predictor.
///
/// On non-convergence the trace is still written before returning exit 4.
pub fn cmd_solve(cfg: &RunConfig, omega2: f64, epsilon: f64) -> Result<SolveSummary, CommandError> {
    let dir = &cfg.output_dir;
    let problem = cfg.problem().map_err(|e| fail(e, Stage::Radial))?;
    let params = cfg.params(&problem, omega2, epsilon).map_err(|e| fail(e, Stage::Radial))?;
    params
        .check(&problem.settings.guards)
        .map_err(|e| fail(e, Stage::Equilibrium))?;
    prepare_dir(dir)?;
    let outcome = match problem.solve_from_predictor(&params) {
        Ok(o) => o,
        Err(e) => {
            if let StarError::NoConvergence { trace, .. } = &e {
                write_trace_files(dir, &cfg.hash(), trace)?;
            }
            return Err(fail(e, Stage::Equilibrium));
        }
    };
    let sol = reconstruct_fields(&problem, &outcome.state, &params).map_err(|e| fail(e, Stage::Equilibrium))?;
    let report = diagnose(&sol, &cfg.diagnostics).map_err(|e| fail(e, Stage::Equilibrium))?;
    write_point(dir, cfg, &outcome, &sol, &report, true)?;
    Ok(SolveSummary { outcome, report })
}

/// One row of the sweep summary.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub omega2: f64,
    pub epsilon: f64,
    pub converged: bool,
    pub iterations: usize,
    pub residual: f64,
    pub oblateness: f64,
    pub zeta_norm: f64,
    pub phi_norm: f64,
    pub mass: f64,
    pub momentum_residual: f64,
    pub diagnostics_pass: bool,
    pub error: String,
}

const SWEEP_COLUMNS: [&str; 12] = [
    "omega2",
    "epsilon",
    "converged",
    "iterations",
    "newton_residual",
    "oblateness",
    "zeta_norm",
    "phi_norm",
    "mass",
    "momentum_residual",
    "diagnostics_pass",
    "error",
];

impl SweepRow {
    fn failed(omega2: f64, epsilon: f64, err: &StarError) -> Self {
        let iterations = match err {
            StarError::NoConvergence { iterations, .. } => *iterations,
            _ => 0,
        };
        Self {
            omega2,
            epsilon,
            converged: false,
            iterations,
            residual: f64::NAN,
            oblateness: f64::NAN,
            zeta_norm: f64::NAN,
            phi_norm: f64::NAN,
            mass: f64::NAN,
            momentum_residual: f64::NAN,
            diagnostics_pass: false,
            error: err.to_string().replace(',', ";"),
        }
    }

    fn write<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(
            w,
            "{:.6e},{:.6e},{},{},{:.6e},{:.12e},{:.12e},{:.12e},{:.15e},{:.6e},{},{}",
            self.omega2,
            self.epsilon,
            self.converged,
            self.iterations,
            self.residual,
            self.oblateness,
            self.zeta_norm,
            self.phi_norm,
            self.mass,
            self.momentum_residual,
            self.diagnostics_pass,
            self.error
        )
    }
}

/// Directory of one sweep point.
pub fn point_dir(root: &Path, i: usize, j: usize) -> PathBuf {
    root.join(format!("point_w{i:02}_e{j:02}"))
}

/// Continuation over the configured `(ω², ε)` grid.
///
/// Newton runs sequentially because each point starts from its neighbour;
/// reconstruction, diagnostics and artifact writes are spread over
/// `workers` threads. Field dumps are left to `solve`.
pub fn cmd_sweep(cfg: &RunConfig, workers: usize) -> Result<Vec<SweepRow>, CommandError> {
    let dir = &cfg.output_dir;
    let problem = cfg.problem().map_err(|e| fail(e, Stage::Radial))?;
    let k = cfg.k().map_err(|e| fail(e, Stage::Radial))?;
    for &w in &cfg.sweep.omega2 {
        for &e in &cfg.sweep.epsilon {
            problem
                .params(w, e, k.clone())
                .check(&problem.settings.guards)
                .map_err(|e| fail(e, Stage::Equilibrium))?;
        }
    }
    prepare_dir(dir)?;
    let points = problem
        .continuation_sweep(&cfg.sweep.omega2, &cfg.sweep.epsilon, &k, SweepOrder::OmegaFirst)
        .map_err(|e| fail(e, Stage::Equilibrium))?;
    let index = |w: f64, e: f64| {
        let i = cfg.sweep.omega2.iter().position(|&v| v == w).unwrap_or(0);
        let j = cfg.sweep.epsilon.iter().position(|&v| v == e).unwrap_or(0);
        (i, j)
    };

    let jobs: Vec<(usize, &crate::equilibrium::SweepPoint)> = points.iter().enumerate().collect();
    let mut rows: Vec<Option<Result<SweepRow, CommandError>>> = (0..points.len()).map(|_| None).collect();
    let workers = workers.max(1).min(jobs.len().max(1));
    let chunk = jobs.len().div_ceil(workers);
    let problem = &problem;
    std::thread::scope(|scope| {
        let handles: Vec<_> = jobs
            .chunks(chunk.max(1))
            .map(|batch| {
                scope.spawn(move || {
                    batch
                        .iter()
                        .map(|&(n, p)| {
                            let row = match &p.outcome {
                                Err(e) => Ok(SweepRow::failed(p.omega2, p.epsilon, e)),
                                Ok(o) => sweep_point(problem, cfg, p.omega2, p.epsilon, o, index),
                            };
                            (n, row)
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (n, row) in h.join().expect("sweep worker panicked") {
                rows[n] = Some(row);
            }
        }
    });
    let rows: Vec<SweepRow> = rows
        .into_iter()
        .map(|r| r.expect("every point visited"))
        .collect::<Result<_, _>>()?;

    write_csv_with_sidecar(dir, "sweep_summary", &cfg.hash(), &SWEEP_COLUMNS, rows.len(), |w| {
        writeln!(w, "{}", SWEEP_COLUMNS.join(","))?;
        for r in &rows {
            r.write(w)?;
        }
        Ok(())
    })?;
    let origin_ok = rows.iter().any(|r| r.omega2 == 0.0 && r.epsilon == 0.0 && r.converged);
    if !origin_ok {
        return Err(CommandError {
            code: EXIT_NO_CONVERGENCE,
            message: "the (0, 0) point did not converge".into(),
        });
    }
    Ok(rows)
}

fn sweep_point(
    problem: &crate::equilibrium::EquilibriumProblem,
    cfg: &RunConfig,
    omega2: f64,
    epsilon: f64,
    outcome: &NewtonOutcome,
    index: impl Fn(f64, f64) -> (usize, usize),
) -> Result<SweepRow, CommandError> {
    let params = problem.params(omega2, epsilon, cfg.k().map_err(|e| fail(e, Stage::Radial))?);
    let (sol, report) = match reconstruct_fields(problem, &outcome.state, &params)
        .and_then(|sol| diagnose(&sol, &cfg.diagnostics).map(|r| (sol, r)))
    {
        Ok(v) => v,
        Err(e) => return Ok(SweepRow::failed(omega2, epsilon, &e)),
    };
    let (i, j) = index(omega2, epsilon);
    write_point(&point_dir(&cfg.output_dir, i, j), cfg, outcome, &sol, &report, false)?;
    Ok(SweepRow {
        omega2,
        epsilon,
        converged: true,
        iterations: outcome.iterations,
        residual: outcome.residual,
        oblateness: report.oblateness,
        zeta_norm: report.zeta_norm,
        phi_norm: report.phi_norm,
        mass: report.mass,
        momentum_residual: report.momentum.relative,
        diagnostics_pass: report.all_pass,
        error: String::new(),
    })
}

/// Runs the acceptance suite and writes `verify.json`. Exit 5 when any
/// criterion fails; the report is written either way.
pub fn cmd_verify(cfg: &RunConfig) -> Result<VerifyReport, (VerifyReport, CommandError)> {
    let ctx = match VerifyContext::new(cfg) {
        Ok(c) => c,
        Err(e) => {
            let empty = VerifyReport {
                config_hash: cfg.hash(),
                seed: cfg.seed,
                criteria: vec![],
                all_pass: false,
            };
            return Err((empty, fail(e, Stage::Radial)));
        }
    };
    let report = ctx.run_all();
    let written = prepare_dir(&cfg.output_dir).and_then(|_| write_json(&cfg.output_dir, "verify", &report));
    if let Err(e) = written {
        return Err((report, e));
    }
    if report.all_pass {
        Ok(report)
    } else {
        let failed: Vec<&str> = report.criteria.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
        let message = format!("failed: {}", failed.join(", "));
        Err((
            report,
            CommandError {
                code: EXIT_VERIFY,
                message,
            },
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_the_contract() {
        let cfg_err = StarError::Config("x".into());
        assert_eq!(exit_code(&cfg_err, Stage::Equilibrium), EXIT_CONFIG);
        assert_eq!(exit_code(&StarError::Guard("w".into()), Stage::Equilibrium), EXIT_CONFIG);
        assert_eq!(exit_code(&StarError::NoSurface { xi_max: 1.0 }, Stage::Radial), EXIT_RADIAL);
        let nc = StarError::NoConvergence {
            iterations: 3,
            residual: 1.0,
            trace: vec![],
        };
        assert_eq!(exit_code(&nc, Stage::Equilibrium), EXIT_NO_CONVERGENCE);
    }

    #[test]
    fn overrides_replace_out_and_seed() {
        let o = Overrides {
            out: Some("elsewhere".into()),
            seed: Some(9),
            workers: Some(0),
        };
        let cfg = o.apply(RunConfig::default()).unwrap();
        assert_eq!(cfg.output_dir, PathBuf::from("elsewhere"));
        assert_eq!(cfg.seed, 9);
        assert_eq!(o.workers(), 1);
    }

    #[test]
    fn failed_row_has_no_commas_in_error() {
        let row = SweepRow::failed(0.1, 0.0, &StarError::Guard("a, b".into()));
        let mut buf = Vec::new();
        row.write(&mut buf).unwrap();
        let line = String::from_utf8(buf).unwrap();
        assert_eq!(line.trim_end().split(',').count(), SWEEP_COLUMNS.len());
    }
}
