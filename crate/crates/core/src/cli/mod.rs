//! The `psdaffine` command line.
//!
//! Exit codes: 0 success, 1 domain or threshold failure, 2 input error.

pub mod files;
pub mod table;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;

use crate::closedform::{mbajd_phi, mbajd_psi, mbajd_transform, MBAJDSpec};
use crate::error::Error;
use crate::model::{validate, AffineParams};
use crate::montecarlo::{simulate, SimConfig};
use crate::riccati::{transform_with_solution, SolverConfig};
use crate::symcore::{CSymMatrix, SymMatrix};
use files::{check_times, load_params, load_state, load_ugrid, InputError, ParamFile};
use table::{complex_cells, matrix_cells, matrix_columns, Cell, OutputFormat, Table};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

/// Random boundary pairs tried by the admissibility gate of the numeric commands.
const GATE_PAIRS: usize = 16;

#[derive(Debug, Parser)]
#[command(name = "psdaffine", version, about = "Transforms of affine processes on positive semidefinite matrices")]
pub struct Cli {
    /// Output format for tables and reports.
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv, global = true)]
    pub out: OutputFormat,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check admissibility of a parameter file.
    Validate(ValidateArgs),
    /// Solve the Riccati equations and evaluate the transform on a grid.
    Transform(TransformArgs),
    /// Monte Carlo estimate of the transform.
    Simulate(SimulateArgs),
    /// ODE, closed form (when applicable) and Monte Carlo side by side.
    Compare(CompareArgs),
    /// Closed-form phi and psi for basic affine jump-diffusions.
    Mbajd(MbajdArgs),
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    pub params: PathBuf,
    /// Random boundary pairs for the inward-pointing test, on top of the canonical ones.
    #[arg(long, default_value_t = 64)]
    pub pairs: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Also write the parameters back in canonical form.
    #[arg(long)]
    pub canonical: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Ode,
    Closed,
    Auto,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// JSON file `{"u": [{"re": .., "im": ..}], "times": [..]}`.
    #[arg(long = "u")]
    pub u: PathBuf,
    /// State x as nested rows (default: identity).
    #[arg(long)]
    pub x: Option<PathBuf>,
    /// Horizons, comma separated; overrides the grid's times.
    #[arg(short = 'T', long = "horizon", value_delimiter = ',')]
    pub horizon: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 1e-10)]
    pub rtol: f64,
    #[arg(long, default_value_t = 1e-12)]
    pub atol: f64,
}

#[derive(Debug, Args)]
pub struct McArgs {
    #[arg(long, default_value_t = 10_000)]
    pub paths: usize,
    #[arg(long, default_value_t = 1.0 / 256.0)]
    pub dt: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub antithetic: bool,
    /// Worker threads (also capped by PSDAFFINE_THREADS).
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TransformArgs {
    pub params: PathBuf,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long, value_enum, default_value_t = Method::Auto)]
    pub method: Method,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    pub params: PathBuf,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub mc: McArgs,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    pub params: PathBuf,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub mc: McArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Discretization allowance added to 3 standard errors.
    #[arg(long, default_value_t = 0.005)]
    pub allowance: f64,
    /// Largest accepted |ode - closed|.
    #[arg(long, default_value_t = 1e-6)]
    pub closed_tol: f64,
}

#[derive(Debug, Args)]
pub struct MbajdArgs {
    pub params: PathBuf,
    #[command(flatten)]
    pub grid: GridArgs,
}

/// Why a command did not succeed.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Input(#[from] InputError),
    #[error("{0}")]
    Failure(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Failure(e.to_string())
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) | CliError::Io(_) => EXIT_INPUT,
            CliError::Failure(_) => EXIT_FAILURE,
        }
    }
}

/// Runs a parsed command, writing results to `out` and messages to `err`.
pub fn run(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = match &cli.command {
        Command::Validate(a) => cmd_validate(a, cli.out, out),
        Command::Transform(a) => cmd_transform(a, cli.out, out),
        Command::Simulate(a) => cmd_simulate(a, cli.out, out),
        Command::Compare(a) => cmd_compare(a, cli.out, out, err),
        Command::Mbajd(a) => cmd_mbajd(a, cli.out, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn cmd_validate(a: &ValidateArgs, format: OutputFormat, out: &mut dyn Write) -> Result<i32, CliError> {
    let params = load_params(&a.params)?;
    let report = validate(&params, a.pairs, a.tol);
    if let Some(path) = &a.canonical {
        std::fs::write(path, files::to_canonical_json(&ParamFile::from_params(&params)))?;
    }
    match format {
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut *out, &report).map_err(std::io::Error::from)?;
            writeln!(out)?;
        }
        OutputFormat::Csv => {
            for c in &report.checks {
                let tag = if c.passed { "PASS" } else { "FAIL" };
                writeln!(out, "{tag} {}: value {:e}, threshold {:e} ({})", c.name, c.value, c.threshold, c.detail)?;
            }
            if let Some(class) = report.alpha_class {
                writeln!(out, "alpha class: {class:?}")?;
            }
            for w in &report.warnings {
                writeln!(out, "WARNING: {w}")?;
            }
        }
    }
    for w in &report.warnings {
        log::warn!("{w}");
    }
    Ok(if report.passed() { EXIT_OK } else { EXIT_FAILURE })
}

/// Loads and vets the inputs shared by the numeric commands.
fn load_inputs(params: &Path, grid: &GridArgs) -> Result<(AffineParams, Vec<CSymMatrix>, Vec<f64>, SymMatrix), CliError> {
    let params = load_params(params)?;
    let (us, grid_times) = load_ugrid(&grid.u, params.d)?;
    let times = if grid.horizon.is_empty() { grid_times } else { grid.horizon.clone() };
    check_times("-T", &times)?;
    let x = match &grid.x {
        Some(path) => load_state(path, params.d)?,
        None => SymMatrix::identity(params.d),
    };
    let report = validate(&params, GATE_PAIRS, 1e-10);
    if !report.passed() {
        let names: Vec<String> = report.failures().map(|c| format!("{} ({})", c.name, c.detail)).collect();
        return Err(CliError::Failure(format!("parameters are not admissible: {}", names.join("; "))));
    }
    for w in &report.warnings {
        log::warn!("{w}");
    }
    if !us.is_empty() && times.is_empty() {
        return Err(InputError { file: grid.u.display().to_string(), path: "times".into(), message: "no evaluation times (give -T)".into() }.into());
    }
    Ok((params, us, times, x))
}

fn solver_config(s: &SolverArgs) -> Result<SolverConfig, CliError> {
    let cfg = SolverConfig::with_tolerances(s.rtol, s.atol);
    cfg.check().map_err(|e| InputError { file: "flags".into(), path: "--rtol/--atol".into(), message: e.to_string() })?;
    Ok(cfg)
}

fn sim_config(m: &McArgs) -> Result<SimConfig, CliError> {
    let cfg = SimConfig { n_paths: m.paths, dt: m.dt, seed: m.seed, antithetic: m.antithetic, threads: m.threads, ..Default::default() };
    cfg.check().map_err(|e| InputError { file: "flags".into(), path: "--paths/--dt/--threads".into(), message: e.to_string() })?;
    Ok(cfg)
}

fn transform_columns(d: usize) -> Vec<String> {
    let mut c: Vec<String> = ["t", "u_index", "method", "status", "phi_re", "phi_im"].map(String::from).to_vec();
    c.extend(matrix_columns("psi_re", d));
    c.extend(matrix_columns("psi_im", d));
    c.extend(
        ["value_re", "value_im", "t_plus_estimate", "accepted_steps", "rejected_steps", "outside_proved_regime"].map(String::from),
    );
    c
}

struct Evaluated {
    phi: Complex64,
    psi: CSymMatrix,
    value: Complex64,
    accepted: Option<usize>,
    rejected: Option<usize>,
    outside: bool,
}

enum Outcome {
    Ok(Evaluated),
    BlowUp(f64),
    Underflow(f64),
}

fn eval_ode(params: &AffineParams, u: &CSymMatrix, x: &SymMatrix, t: f64, cfg: &SolverConfig) -> Result<Outcome, CliError> {
    match transform_with_solution(params, u, x, t, cfg) {
        Ok((value, Some(sol))) => Ok(Outcome::Ok(Evaluated {
            phi: sol.phi_end(),
            psi: sol.psi_end().clone(),
            value,
            accepted: Some(sol.diagnostics.accepted_steps),
            rejected: Some(sol.diagnostics.rejected_steps),
            outside: sol.diagnostics.outside_proved_regime,
        })),
        Ok((value, None)) => Ok(Outcome::Ok(Evaluated {
            phi: Complex64::new(0.0, 0.0),
            psi: u.clone(),
            value,
            accepted: Some(0),
            rejected: Some(0),
            outside: false,
        })),
        Err(Error::BlowUp { t_plus }) => Ok(Outcome::BlowUp(t_plus)),
        Err(Error::StepUnderflow { t }) => Ok(Outcome::Underflow(t)),
        Err(e) => Err(e.into()),
    }
}

fn eval_closed(spec: &MBAJDSpec, u: &CSymMatrix, x: &SymMatrix, t: f64) -> Result<Outcome, CliError> {
    Ok(Outcome::Ok(Evaluated {
        phi: mbajd_phi(spec, u, t)?,
        psi: mbajd_psi(spec, u, t)?,
        value: mbajd_transform(spec, u, x, t)?,
        accepted: None,
        rejected: None,
        outside: false,
    }))
}

fn transform_row(d: usize, t: f64, k: usize, method: &str, outcome: &Outcome) -> Vec<Cell> {
    let mut row = vec![Cell::Num(t), Cell::Int(k as u64), Cell::Text(method.into())];
    let n_psi = d * (d + 1);
    match outcome {
        Outcome::Ok(e) => {
            row.push(Cell::Text("ok".into()));
            row.extend(complex_cells(e.phi));
            row.extend(matrix_cells(&e.psi.re));
            row.extend(matrix_cells(&e.psi.im));
            row.extend(complex_cells(e.value));
            row.push(Cell::Empty);
            row.push(e.accepted.map_or(Cell::Empty, |n| Cell::Int(n as u64)));
            row.push(e.rejected.map_or(Cell::Empty, |n| Cell::Int(n as u64)));
            row.push(Cell::Bool(e.outside));
        }
        Outcome::BlowUp(tp) | Outcome::Underflow(tp) => {
            let status = if matches!(outcome, Outcome::BlowUp(_)) { "blowup" } else { "underflow" };
            row.push(Cell::Text(status.into()));
            row.extend(std::iter::repeat_n(Cell::Empty, 2 + n_psi + 2));
            row.push(Cell::Num(*tp));
            row.extend([Cell::Empty, Cell::Empty, Cell::Empty]);
        }
    }
    row
}

fn mbajd_spec(params: &AffineParams) -> Result<MBAJDSpec, CliError> {
    MBAJDSpec::from_params(params).map_err(|e| CliError::Failure(format!("closed form needs basic affine jump-diffusion parameters: {e}")))
}

fn cmd_transform(a: &TransformArgs, format: OutputFormat, out: &mut dyn Write) -> Result<i32, CliError> {
    let (params, us, times, x) = load_inputs(&a.params, &a.grid)?;
    let cfg = solver_config(&a.solver)?;
    let spec = match a.method {
        Method::Ode => None,
        Method::Closed => Some(mbajd_spec(&params)?),
        Method::Auto => MBAJDSpec::from_params(&params).ok(),
    };
    let mut table = Table::new(transform_columns(params.d));
    for &t in &times {
        for (k, u) in us.iter().enumerate() {
            let row = match &spec {
                Some(s) => transform_row(params.d, t, k, "closed", &eval_closed(s, u, &x, t)?),
                None => transform_row(params.d, t, k, "ode", &eval_ode(&params, u, &x, t, &cfg)?),
            };
            table.push(row);
        }
    }
    table.write(format, out)?;
    Ok(EXIT_OK)
}

fn cmd_mbajd(a: &MbajdArgs, format: OutputFormat, out: &mut dyn Write) -> Result<i32, CliError> {
    let (params, us, times, x) = load_inputs(&a.params, &a.grid)?;
    let spec = mbajd_spec(&params)?;
    let mut table = Table::new(transform_columns(params.d));
    for &t in &times {
        for (k, u) in us.iter().enumerate() {
            table.push(transform_row(params.d, t, k, "closed", &eval_closed(&spec, u, &x, t)?));
        }
    }
    table.write(format, out)?;
    Ok(EXIT_OK)
}

fn cmd_simulate(a: &SimulateArgs, format: OutputFormat, out: &mut dyn Write) -> Result<i32, CliError> {
    let (params, us, times, x) = load_inputs(&a.params, &a.grid)?;
    let cfg = sim_config(&a.mc)?;
    params.require_conservative()?;
    let columns = ["t", "u_index", "mean_re", "mean_im", "stderr", "n_paths", "dt", "n_steps", "seed"];
    let mut table = Table::new(columns.map(String::from).to_vec());
    let mut jumps = Vec::new();
    for &t in &times {
        let sim = simulate(&params, &us, &x, t, &cfg)?;
        for (k, e) in sim.estimates.iter().enumerate() {
            let mut row = vec![Cell::Num(t), Cell::Int(k as u64)];
            row.extend(complex_cells(e.mean));
            row.extend([Cell::Num(e.stderr), Cell::Int(e.n_paths as u64), Cell::Num(e.dt), Cell::Int(sim.n_steps as u64), Cell::Int(cfg.seed)]);
            table.push(row);
        }
        for j in &sim.jumps {
            if j.z.abs() > 4.0 {
                log::warn!("t = {t}: {} atom {} realized {} jumps against compensator {:.1} (z = {:.2})", j.measure, j.atom, j.realized, j.compensator, j.z);
            }
        }
        jumps.push(serde_json::json!({ "t": t, "jumps": sim.jumps }));
    }
    table.extra = Some(serde_json::json!({ "jump_checks": jumps }));
    table.write(format, out)?;
    Ok(EXIT_OK)
}

fn cmd_compare(a: &CompareArgs, format: OutputFormat, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let (params, us, times, x) = load_inputs(&a.params, &a.grid)?;
    let solver = solver_config(&a.solver)?;
    let mc = sim_config(&a.mc)?;
    params.require_conservative()?;
    let spec = MBAJDSpec::from_params(&params).ok();
    let columns = [
        "t", "u_index", "ode_re", "ode_im", "closed_re", "closed_im", "mc_re", "mc_im", "mc_stderr", "ode_mc_abs", "ode_mc_bound",
        "ode_closed_abs", "pass",
    ];
    let mut table = Table::new(columns.map(String::from).to_vec());
    let mut failures = Vec::new();
    for &t in &times {
        let sim = simulate(&params, &us, &x, t, &mc)?;
        for (k, u) in us.iter().enumerate() {
            let ode = match eval_ode(&params, u, &x, t, &solver)? {
                Outcome::Ok(e) => Some(e.value),
                _ => None,
            };
            let closed = match &spec {
                Some(s) => Some(mbajd_transform(s, u, &x, t)?),
                None => None,
            };
            let e = sim.estimates[k];
            let bound = 3.0 * e.stderr + a.allowance;
            let mc_gap = ode.map(|o| (o - e.mean).norm());
            let closed_gap = ode.zip(closed).map(|(o, c)| (o - c).norm());
            let pass = mc_gap.is_some_and(|g| g <= bound) && closed_gap.is_none_or(|g| g <= a.closed_tol);
            let opt = |z: Option<Complex64>| z.map_or([Cell::Empty, Cell::Empty], complex_cells);
            let mut row = vec![Cell::Num(t), Cell::Int(k as u64)];
            row.extend(opt(ode));
            row.extend(opt(closed));
            row.extend(complex_cells(e.mean));
            row.push(Cell::Num(e.stderr));
            row.push(mc_gap.map_or(Cell::Empty, Cell::Num));
            row.push(Cell::Num(bound));
            row.push(closed_gap.map_or(Cell::Empty, Cell::Num));
            row.push(Cell::Bool(pass));
            if !pass {
                failures.push(format!(
                    "t = {t}, u[{k}]: |ode - mc| = {} (bound {bound}), |ode - closed| = {}",
                    mc_gap.map_or("n/a (ode failed)".into(), |g| g.to_string()),
                    closed_gap.map_or("n/a".into(), |g| g.to_string())
                ));
            }
            table.push(row);
        }
    }
    table.write(format, out)?;
    if failures.is_empty() {
        Ok(EXIT_OK)
    } else {
        for f in &failures {
            writeln!(err, "threshold breach: {f}")?;
        }
        Ok(EXIT_FAILURE)
    }
}
