//! The `rabi2q` command line.
//!
//! Subcommands: `ground`, `sweep`, `wavefunction`, `potentials` and
//! `crossover`. Any flag can also be supplied through `--config FILE`, a
//! plain-text file of `key=value` lines (`#` starts a comment); flags given on
//! the command line win over the file.
//!
//! Tables are written as CSV with 17 significant digits, or as JSON. Exit
//! codes: 0 success, 2 usage error, 3 numeric or convergence failure.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::ed::{converged_ground, GroundState};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::observables::{self, CrossoverSample, ObservableSet};
use crate::optimizer::{minimize, OptimConfig, OptimResult};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "rabi2q", version, about = "Ground states of the two-qubit quantum Rabi model")]
pub struct Cli {
    /// Plain-text `key=value` defaults; explicit flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Optimize the polaron ansatz at one coupling and print a JSON report.
    #[command(args_override_self = true)]
    Ground {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        output: OutputArgs,
        /// Also solve by exact diagonalization and report the difference.
        #[arg(long)]
        compare: bool,
    },
    /// Energies and observables over a grid of couplings.
    #[command(args_override_self = true)]
    Sweep {
        #[command(flatten)]
        base: BaseArgs,
        #[command(flatten)]
        range: RangeArgs,
        #[arg(long, value_enum, default_value_t = Engine::Both)]
        engine: Engine,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Position-space components ψ1..ψ4 on a grid.
    #[command(args_override_self = true)]
    Wavefunction {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, value_enum, default_value_t = Engine::Ed)]
        engine: Engine,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Potential curves of the four two-qubit basis states.
    #[command(args_override_self = true)]
    Potentials {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Probabilities P1..P4 against g for several Ω, with crossover couplings.
    #[command(args_override_self = true)]
    Crossover {
        #[arg(long, default_value_t = 1.0)]
        omega: f64,
        /// Comma-separated qubit tunneling frequencies.
        #[arg(long = "Omega-list", value_delimiter = ',', default_values_t = [0.1, 1.0, 2.0, 10.0])]
        omega_list: Vec<f64>,
        #[arg(long, default_value_t = 0.1)]
        threshold: f64,
        #[arg(long, default_value_t = 0.0)]
        from: f64,
        #[arg(long, default_value_t = 3.0)]
        to: f64,
        #[arg(long, default_value_t = 61)]
        count: usize,
        #[arg(long = "ed-tol", default_value_t = 1e-10)]
        ed_tol: f64,
        /// Where to write the per-Ω crossover summary (CSV output only).
        #[arg(long = "summary-out")]
        summary_out: Option<PathBuf>,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Args, Debug, Clone)]
pub struct BaseArgs {
    #[arg(long, default_value_t = 1.0)]
    pub omega: f64,
    #[arg(long = "Omega", default_value_t = 1.0)]
    pub tunneling: f64,
}

#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    #[command(flatten)]
    pub base: BaseArgs,
    /// Absolute coupling.
    #[arg(long, conflicts_with = "g_over_gc")]
    pub g: Option<f64>,
    /// Coupling in units of g_c; needs Ω > 0.
    #[arg(long = "g-over-gc")]
    pub g_over_gc: Option<f64>,
}

#[derive(Args, Debug, Clone)]
pub struct RangeArgs {
    #[arg(long, default_value_t = 0.0)]
    pub from: f64,
    #[arg(long, default_value_t = 2.0)]
    pub to: f64,
    #[arg(long, default_value_t = 21)]
    pub count: usize,
    /// Interpret `--from`/`--to` in units of g_c.
    #[arg(long)]
    pub relative: bool,
}

#[derive(Args, Debug, Clone)]
pub struct SolverArgs {
    /// Number of packet pairs N in the ansatz.
    #[arg(long, default_value_t = 2)]
    pub pairs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 8)]
    pub starts: usize,
    #[arg(long = "max-iters", default_value_t = 6000)]
    pub max_iters: usize,
    #[arg(long = "ed-tol", default_value_t = 1e-10)]
    pub ed_tol: f64,
}

#[derive(Args, Debug, Clone)]
pub struct GridArgs {
    #[arg(long = "x-min", default_value_t = -8.0, allow_hyphen_values = true)]
    pub x_min: f64,
    #[arg(long = "x-max", default_value_t = 8.0, allow_hyphen_values = true)]
    pub x_max: f64,
    #[arg(long, default_value_t = 321)]
    pub points: usize,
}

#[derive(Args, Debug, Clone)]
pub struct OutputArgs {
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Engine {
    Vm,
    Ed,
    Both,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl BaseArgs {
    fn params(&self, g: f64) -> Result<ModelParams> {
        ModelParams::new(self.omega, self.tunneling, g)
    }

    fn g_c(&self) -> Result<f64> {
        Ok(self.params(0.0)?.g_c())
    }

    fn relative_to_absolute(&self, ratio: f64) -> Result<f64> {
        let gc = self.g_c()?;
        if gc == 0.0 {
            return Err(Error::InvalidParams("coupling in units of g_c needs Omega > 0 (g_c = 0)".into()));
        }
        Ok(ratio * gc)
    }
}

impl ModelArgs {
    pub fn params(&self) -> Result<ModelParams> {
        let g = match (self.g, self.g_over_gc) {
            (Some(g), _) => g,
            (None, Some(ratio)) => self.base.relative_to_absolute(ratio)?,
            (None, None) => 0.0,
        };
        self.base.params(g)
    }
}

impl SolverArgs {
    pub fn config(&self) -> OptimConfig {
        OptimConfig {
            n_pairs: self.pairs,
            max_iters: self.max_iters,
            n_starts: self.starts,
            seed: self.seed,
            ..OptimConfig::default()
        }
    }
}

impl GridArgs {
    fn grid(&self) -> Result<Vec<f64>> {
        if !(self.x_min.is_finite() && self.x_max.is_finite() && self.x_min < self.x_max) {
            return Err(Error::InvalidParams(format!("need finite x-min < x-max, got [{}, {}]", self.x_min, self.x_max)));
        }
        if self.points < 2 {
            return Err(Error::InvalidParams("grid needs at least 2 points".into()));
        }
        Ok(linspace(self.x_min, self.x_max, self.points))
    }
}

fn linspace(from: f64, to: f64, count: usize) -> Vec<f64> {
    let step = (to - from) / (count - 1) as f64;
    (0..count).map(|i| if i + 1 == count { to } else { from + step * i as f64 }).collect()
}

/// Runs the tool on `args` (including the program name) and returns the exit
/// code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match merge_config(args) {
        Ok(args) => args,
        Err(e) => {
            eprintln!("rabi2q: {e}");
            return EXIT_USAGE;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("rabi2q: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidParams(_) => EXIT_USAGE,
        _ => EXIT_NUMERIC,
    }
}

/// Splices the `key=value` lines of `--config FILE` in front of the explicit
/// flags of the chosen subcommand. Keys the subcommand does not know are
/// skipped; keys no subcommand knows are an error.
fn merge_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let mut path = None;
    let mut skip_value = false;
    let mut sub_index = None;
    for (i, arg) in args.iter().enumerate().skip(1) {
        if skip_value {
            skip_value = false;
            continue;
        }
        let text = arg.to_string_lossy();
        if text == "--config" {
            path = args.get(i + 1).cloned();
            skip_value = true;
        } else if let Some(p) = text.strip_prefix("--config=") {
            path = Some(OsString::from(p));
        } else if sub_index.is_none() && !text.starts_with('-') {
            sub_index = Some(i);
        }
    }
    let (Some(path), Some(sub_index)) = (path, sub_index) else {
        return Ok(args);
    };
    let text = fs::read_to_string(&path)
        .map_err(|e| Error::InvalidParams(format!("cannot read config {}: {e}", Path::new(&path).display())))?;

    let command = Cli::command();
    let sub_name = args[sub_index].to_string_lossy().into_owned();
    let Some(sub) = command.find_subcommand(&sub_name) else {
        return Ok(args);
    };
    let known = |cmd: &clap::Command, key: &str| cmd.get_arguments().any(|a| a.get_long() == Some(key));
    let explicit: Vec<String> = args[sub_index + 1..]
        .iter()
        .filter_map(|a| a.to_str()?.strip_prefix("--").map(|s| s.split('=').next().unwrap_or(s).to_owned()))
        .collect();
    let explicit_g = explicit.iter().any(|k| k == "g" || k == "g-over-gc");

    let mut inserted = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::InvalidParams(format!("config line {}: expected key=value", lineno + 1)));
        };
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        if key == "config" {
            return Err(Error::InvalidParams("config files cannot include other config files".into()));
        }
        if !command.get_subcommands().any(|c| known(c, &key)) {
            return Err(Error::InvalidParams(format!("config line {}: unknown key '{key}'", lineno + 1)));
        }
        if !known(sub, &key) || (explicit_g && (key == "g" || key == "g-over-gc")) {
            continue;
        }
        let takes_value = sub
            .get_arguments()
            .find(|a| a.get_long() == Some(key.as_str()))
            .is_some_and(|a| a.get_action().takes_values());
        if takes_value {
            inserted.push(OsString::from(format!("--{key}")));
            inserted.push(OsString::from(value));
        } else {
            match value {
                "true" | "yes" | "1" => inserted.push(OsString::from(format!("--{key}"))),
                "false" | "no" | "0" => {}
                _ => return Err(Error::InvalidParams(format!("config line {}: '{key}' expects true/false", lineno + 1))),
            }
        }
    }
    let mut merged = args[..=sub_index].to_vec();
    merged.extend(inserted);
    merged.extend_from_slice(&args[sub_index + 1..]);
    Ok(merged)
}

pub fn execute(command: &Command) -> Result<i32> {
    match command {
        Command::Ground { model, solver, output, compare } => cmd_ground(model, solver, output, *compare),
        Command::Sweep { base, range, engine, solver, output } => cmd_sweep(base, range, *engine, solver, output),
        Command::Wavefunction { model, grid, engine, solver, output } => cmd_wavefunction(model, grid, *engine, solver, output),
        Command::Potentials { model, grid, output } => cmd_potentials(model, grid, output),
        Command::Crossover { omega, omega_list, threshold, from, to, count, ed_tol, summary_out, output } => {
            cmd_crossover(*omega, omega_list, *threshold, (*from, *to, *count), *ed_tol, summary_out.as_deref(), output)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) if v.is_nan() => "NaN".into(),
            Cell::Num(v) => format!("{v:.16e}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) => serde_json::Number::from_f64(*v).map_or(Value::Null, Value::Number),
            Cell::Int(v) => json!(v),
            Cell::Text(s) => json!(s),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv))?;
        }
        w.into_inner().map_err(|e| Error::Io(e.into_error()))
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| Value::Object(self.header.iter().cloned().zip(row.iter().map(Cell::json)).collect::<Map<_, _>>()))
                .collect(),
        )
    }
}

fn emit(output: &OutputArgs, default: Format, table: &Table) -> Result<()> {
    match output.format.unwrap_or(default) {
        Format::Csv => write_bytes(output.out.as_deref(), &table.to_csv()?),
        Format::Json => write_json(output.out.as_deref(), &table.to_json()),
    }
}

fn write_json(out: Option<&Path>, value: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_bytes(out, text.as_bytes())
}

fn write_bytes(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(path) => fs::write(path, bytes)?,
        None => match std::io::stdout().lock().write_all(bytes) {
            Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => {}
            other => other?,
        },
    }
    Ok(())
}

/// Optimizer outcome that keeps the best result of a non-converged run.
fn solve_vm(params: &ModelParams, config: &OptimConfig) -> Result<(OptimResult, bool)> {
    match minimize(params, config) {
        Ok(r) => Ok((r, true)),
        Err(Error::NotConverged { best, .. }) => Ok((*best, false)),
        Err(e) => Err(e),
    }
}

struct EngineOutput {
    vm: Option<ObservableSet>,
    ed: Option<(ObservableSet, usize)>,
    status: Vec<String>,
}

fn evaluate(params: &ModelParams, engine: Engine, solver: &SolverArgs) -> EngineOutput {
    let mut out = EngineOutput { vm: None, ed: None, status: Vec::new() };
    if engine != Engine::Ed {
        match solve_vm(params, &solver.config()).and_then(|(r, ok)| Ok((observables::from_ansatz(&r.ansatz, params)?, ok))) {
            Ok((obs, ok)) => {
                if !ok {
                    out.status.push("vm_not_converged".into());
                }
                out.vm = Some(obs);
            }
            Err(e) => out.status.push(format!("vm_error: {e}")),
        }
    }
    if engine != Engine::Vm {
        match converged_ground(params, solver.ed_tol).and_then(|gs| Ok((observables::from_fock(&gs, params)?, gs.n_max))) {
            Ok(v) => out.ed = Some(v),
            Err(e) => out.status.push(format!("ed_error: {e}")),
        }
    }
    out
}

/// Column names of a sweep table for `engine`.
pub fn sweep_header(engine: Engine) -> Vec<String> {
    let mut header = vec!["g".to_owned(), "g_over_gc".to_owned()];
    let fields = |prefix: &str| ObservableSet::FIELDS.iter().map(|f| format!("{prefix}_{f}")).collect::<Vec<_>>();
    if engine != Engine::Ed {
        header.extend(fields("vm"));
    }
    if engine != Engine::Vm {
        header.extend(fields("ed"));
        header.push("ed_n_max".into());
    }
    if engine == Engine::Both {
        header.extend(fields("err"));
    }
    header.push("status".into());
    header
}

fn sweep_row(g: f64, g_over_gc: f64, engine: Engine, result: &EngineOutput) -> Vec<Cell> {
    let nan = [f64::NAN; 16];
    let vm = result.vm.map_or(nan, |o| o.values());
    let ed = result.ed.map_or(nan, |(o, _)| o.values());
    let mut row = vec![Cell::Num(g), Cell::Num(g_over_gc)];
    if engine != Engine::Ed {
        row.extend(vm.iter().map(|&v| Cell::Num(v)));
    }
    if engine != Engine::Vm {
        row.extend(ed.iter().map(|&v| Cell::Num(v)));
        row.push(result.ed.map_or(Cell::Text(String::new()), |(_, n)| Cell::Int(n as u64)));
    }
    if engine == Engine::Both {
        row.extend(vm.iter().zip(&ed).map(|(a, b)| Cell::Num(a - b)));
    }
    let status = if result.status.is_empty() { "ok".to_owned() } else { result.status.join("; ") };
    row.push(Cell::Text(status));
    row
}

/// Sweep table over `points` of `(g, g/g_c)`; also reports whether every row
/// succeeded.
pub fn sweep_table(base: &BaseArgs, points: &[(f64, f64)], engine: Engine, solver: &SolverArgs) -> Result<(Table, bool)> {
    let params: Vec<ModelParams> = points.iter().map(|&(g, _)| base.params(g)).collect::<Result<_>>()?;
    solver.config().validate()?;
    let results: Vec<EngineOutput> = params.par_iter().map(|p| evaluate(p, engine, solver)).collect();
    let ok = results.iter().all(|r| r.status.is_empty());
    let rows = points.iter().zip(&results).map(|(&(g, r), res)| sweep_row(g, r, engine, res)).collect();
    Ok((Table { header: sweep_header(engine), rows }, ok))
}

fn sweep_points(base: &BaseArgs, range: &RangeArgs) -> Result<Vec<(f64, f64)>> {
    if range.count < 2 {
        return Err(Error::InvalidParams(format!("count must be at least 2, got {}", range.count)));
    }
    if !(range.from.is_finite() && range.to.is_finite() && range.from < range.to) {
        return Err(Error::InvalidParams(format!("need from < to, got [{}, {}]", range.from, range.to)));
    }
    let gc = base.g_c()?;
    let grid = linspace(range.from, range.to, range.count);
    if range.relative {
        grid.into_iter().map(|r| Ok((base.relative_to_absolute(r)?, r))).collect()
    } else {
        Ok(grid.into_iter().map(|g| (g, if gc > 0.0 { g / gc } else { f64::NAN })).collect())
    }
}

fn cmd_sweep(base: &BaseArgs, range: &RangeArgs, engine: Engine, solver: &SolverArgs, output: &OutputArgs) -> Result<i32> {
    let points = sweep_points(base, range)?;
    let (table, ok) = sweep_table(base, &points, engine, solver)?;
    emit(output, Format::Csv, &table)?;
    Ok(if ok { EXIT_OK } else { EXIT_NUMERIC })
}

fn cmd_ground(model: &ModelArgs, solver: &SolverArgs, output: &OutputArgs, compare: bool) -> Result<i32> {
    let params = model.params()?;
    let config = solver.config();
    config.validate()?;
    let gc = params.g_c();
    let g_over_gc = if gc > 0.0 { params.g / gc } else { f64::NAN };

    if output.format == Some(Format::Csv) {
        let engine = if compare { Engine::Both } else { Engine::Vm };
        let result = evaluate(&params, engine, solver);
        let ok = result.status.is_empty();
        let table = Table { header: sweep_header(engine), rows: vec![sweep_row(params.g, g_over_gc, engine, &result)] };
        emit(output, Format::Csv, &table)?;
        return Ok(if ok { EXIT_OK } else { EXIT_NUMERIC });
    }

    let (vm, converged) = solve_vm(&params, &config)?;
    let vm_obs = observables::from_ansatz(&vm.ansatz, &params)?;
    let mut report = json!({
        "params": { "omega": params.omega, "Omega": params.tunneling, "g": params.g },
        "g_prime": params.g_prime(),
        "g_c": gc,
        "g_over_gc": Cell::Num(g_over_gc).json(),
        "n_pairs": config.n_pairs,
        "seed": config.seed,
        "starts": config.n_starts,
        "vm": {
            "energy": vm.energy,
            "converged": converged,
            "iterations": vm.iterations,
            "start_index": vm.start_index,
            "grad_norm": vm.grad_norm,
            "observables": vm_obs,
        },
        "ansatz": vm.ansatz.to_document(&params),
    });
    if compare {
        let gs = converged_ground(&params, solver.ed_tol)?;
        let ed_obs = observables::from_fock(&gs, &params)?;
        let scale = if gs.energy != 0.0 { gs.energy.abs() } else { 1.0 };
        report["ed"] = json!({ "energy": gs.energy, "n_max": gs.n_max, "observables": ed_obs });
        report["relative_error"] = json!((vm.energy - gs.energy).abs() / scale);
    }
    write_json(output.out.as_deref(), &report)?;
    Ok(if converged { EXIT_OK } else { EXIT_NUMERIC })
}

/// Flips the overall sign so the largest-magnitude ψ₁ sample is positive.
fn orient(columns: &mut [Vec<f64>; 4]) {
    let peak = columns[0].iter().copied().fold(0.0_f64, |acc, v| if v.abs() > acc.abs() { v } else { acc });
    if peak < 0.0 {
        for column in columns.iter_mut() {
            for v in column.iter_mut() {
                *v = -*v;
            }
        }
    }
}

fn ed_components(gs: &GroundState, xs: &[f64]) -> [Vec<f64>; 4] {
    let samples: Vec<[f64; 4]> = xs.iter().map(|&x| gs.components_at(x)).collect();
    std::array::from_fn(|c| samples.iter().map(|s| s[c]).collect())
}

fn cmd_wavefunction(model: &ModelArgs, grid: &GridArgs, engine: Engine, solver: &SolverArgs, output: &OutputArgs) -> Result<i32> {
    let params = model.params()?;
    let xs = grid.grid()?;
    let dx = xs[1] - xs[0];
    if dx > 0.25 {
        eprintln!("warning: grid spacing {dx} is coarse compared with the oscillator length 1");
    }
    let reach = 2.0 * params.g_prime() + 4.0;
    if grid.x_min > -reach || grid.x_max < reach {
        eprintln!("warning: grid [{}, {}] does not cover the wells at ±{:.3}", grid.x_min, grid.x_max, 2.0 * params.g_prime());
    }

    let mut header = vec!["x".to_owned()];
    let mut columns: Vec<Vec<f64>> = vec![xs.clone()];
    let mut code = EXIT_OK;
    if engine != Engine::Ed {
        let (vm, converged) = solve_vm(&params, &solver.config())?;
        if !converged {
            eprintln!("warning: optimizer did not reach the gradient tolerance");
            code = EXIT_NUMERIC;
        }
        let mut comps: [Vec<f64>; 4] = [vec![], vec![], vec![], vec![]];
        for (c, column) in comps.iter_mut().enumerate() {
            *column = xs.iter().map(|&x| vm.ansatz.component(c + 1, x)).collect::<Result<_>>()?;
        }
        orient(&mut comps);
        let prefix = if engine == Engine::Both { "vm_" } else { "" };
        header.extend((1..=4).map(|c| format!("{prefix}psi{c}")));
        columns.extend(comps);
    }
    if engine != Engine::Vm {
        let gs = converged_ground(&params, solver.ed_tol)?;
        let mut comps = ed_components(&gs, &xs);
        orient(&mut comps);
        let prefix = if engine == Engine::Both { "ed_" } else { "" };
        header.extend((1..=4).map(|c| format!("{prefix}psi{c}")));
        columns.extend(comps);
    }
    let rows = (0..xs.len()).map(|i| columns.iter().map(|c| Cell::Num(c[i])).collect()).collect();
    emit(output, Format::Csv, &Table { header, rows })?;
    Ok(code)
}

fn cmd_potentials(model: &ModelArgs, grid: &GridArgs, output: &OutputArgs) -> Result<i32> {
    let params = model.params()?;
    let xs = grid.grid()?;
    let curves = observables::potential_curves(&params, &xs)?;
    let header = ["x", "v_uu", "v_ud", "v_du", "v_dd"].map(String::from).to_vec();
    let rows = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| std::iter::once(x).chain(curves.iter().map(|c| c[i])).map(Cell::Num).collect())
        .collect();
    emit(output, Format::Csv, &Table { header, rows })?;
    Ok(EXIT_OK)
}

/// Crossover coupling per Ω: `Ok(Some(g))`, `Ok(None)` when P₃ never drops
/// below the threshold, or the failure message.
pub type CrossoverSummary = Vec<(f64, std::result::Result<Option<f64>, String>)>;

/// ED probability table over `omega_list × g_grid` plus crossover summaries.
pub fn crossover_table(omega: f64, omega_list: &[f64], threshold: f64, g_grid: &[f64], ed_tol: f64) -> Result<(Table, CrossoverSummary)> {
    if !(threshold > 0.0 && threshold < 0.25) {
        return Err(Error::InvalidParams(format!("threshold must lie in (0, 1/4), got {threshold}")));
    }
    let jobs: Vec<ModelParams> = omega_list
        .iter()
        .flat_map(|&big| g_grid.iter().map(move |&g| ModelParams::new(omega, big, g)))
        .collect::<Result<_>>()?;
    let results: Vec<std::result::Result<ObservableSet, String>> = jobs
        .par_iter()
        .map(|p| converged_ground(p, ed_tol).and_then(|gs| observables::from_fock(&gs, p)).map_err(|e| e.to_string()))
        .collect();

    let header = ["omega", "Omega", "g", "p1", "p2", "p3", "p4", "status"].map(String::from).to_vec();
    let mut rows = Vec::with_capacity(jobs.len());
    for (p, r) in jobs.iter().zip(&results) {
        let (probs, status) = match r {
            Ok(o) => (o.probs, "ok".to_owned()),
            Err(e) => ([f64::NAN; 4], format!("ed_error: {e}")),
        };
        let mut row = vec![Cell::Num(p.omega), Cell::Num(p.tunneling), Cell::Num(p.g)];
        row.extend(probs.iter().map(|&v| Cell::Num(v)));
        row.push(Cell::Text(status));
        rows.push(row);
    }

    let summary = omega_list
        .iter()
        .zip(results.chunks(g_grid.len()))
        .map(|(&big, chunk)| {
            let samples: std::result::Result<Vec<CrossoverSample>, String> = chunk
                .iter()
                .zip(g_grid)
                .map(|(r, &g)| r.as_ref().map(|o| CrossoverSample { g, p3: o.probs[2] }).map_err(Clone::clone))
                .collect();
            let cross = samples.and_then(|s| observables::crossover_point(&s, threshold).map_err(|e| e.to_string()));
            (big, cross)
        })
        .collect();
    Ok((Table { header, rows }, summary))
}

fn summary_table(omega: f64, threshold: f64, summary: &CrossoverSummary) -> Table {
    let header = ["omega", "Omega", "threshold", "g_cross", "status"].map(String::from).to_vec();
    let rows = summary
        .iter()
        .map(|(big, cross)| {
            let (g, status) = match cross {
                Ok(Some(g)) => (*g, "ok".to_owned()),
                Ok(None) => (f64::NAN, "not_found".to_owned()),
                Err(e) => (f64::NAN, format!("error: {e}")),
            };
            vec![Cell::Num(omega), Cell::Num(*big), Cell::Num(threshold), Cell::Num(g), Cell::Text(status)]
        })
        .collect();
    Table { header, rows }
}

fn cmd_crossover(
    omega: f64,
    omega_list: &[f64],
    threshold: f64,
    range: (f64, f64, usize),
    ed_tol: f64,
    summary_out: Option<&Path>,
    output: &OutputArgs,
) -> Result<i32> {
    let (from, to, count) = range;
    if count < 2 || !(from.is_finite() && to.is_finite() && from < to) {
        return Err(Error::InvalidParams(format!("need count >= 2 and from < to, got [{from}, {to}] x {count}")));
    }
    if omega_list.is_empty() {
        return Err(Error::InvalidParams("Omega-list is empty".into()));
    }
    let grid = linspace(from, to, count);
    let (table, summary) = crossover_table(omega, omega_list, threshold, &grid, ed_tol)?;
    let ok = summary.iter().all(|(_, c)| c.is_ok());
    let summary = summary_table(omega, threshold, &summary);
    match output.format.unwrap_or(Format::Csv) {
        Format::Json => {
            write_json(output.out.as_deref(), &json!({ "table": table.to_json(), "crossover": summary.to_json() }))?;
        }
        Format::Csv => {
            write_bytes(output.out.as_deref(), &table.to_csv()?)?;
            match summary_out {
                Some(path) => write_bytes(Some(path), &summary.to_csv()?)?,
                None => eprint!("{}", String::from_utf8_lossy(&summary.to_csv()?)),
            }
        }
    }
    Ok(if ok { EXIT_OK } else { EXIT_NUMERIC })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> std::result::Result<Cli, clap::Error> {
        Cli::try_parse_from(std::iter::once("rabi2q").chain(args.iter().copied()))
    }

    #[test]
    fn flags_parse() {
        let cli = parse(&["ground", "--omega", "1", "--Omega", "10", "--g-over-gc", "1", "--pairs", "2", "--compare"]).unwrap();
        let Command::Ground { model, solver, compare, .. } = cli.command else { panic!() };
        assert!(compare);
        assert_eq!(solver.pairs, 2);
        let p = model.params().unwrap();
        assert_eq!(p.g, p.g_c());
        assert!(parse(&["ground", "--g", "1", "--g-over-gc", "1"]).is_err());
        assert!(parse(&["sweep", "--engine", "fast"]).is_err());
    }

    #[test]
    fn relative_coupling_needs_tunneling() {
        let cli = parse(&["ground", "--Omega", "0", "--g-over-gc", "1"]).unwrap();
        let Command::Ground { model, .. } = cli.command else { panic!() };
        assert!(matches!(model.params(), Err(Error::InvalidParams(_))));
    }

    #[test]
    fn sweep_grid_endpoints() {
        let base = BaseArgs { omega: 1.0, tunneling: 10.0 };
        let range = RangeArgs { from: 0.0, to: 2.0, count: 21, relative: true };
        let pts = sweep_points(&base, &range).unwrap();
        assert_eq!(pts.len(), 21);
        assert_eq!(pts[20].1, 2.0);
        assert_eq!(pts[20].0, 2.0 * base.g_c().unwrap());
        assert!(sweep_points(&base, &RangeArgs { count: 1, ..range.clone() }).is_err());
        assert!(sweep_points(&base, &RangeArgs { from: 1.0, to: 1.0, ..range.clone() }).is_err());
        let flat = BaseArgs { omega: 1.0, tunneling: 0.0 };
        assert!(sweep_points(&flat, &range).is_err());
    }

    #[test]
    fn headers_depend_on_engine() {
        let vm = sweep_header(Engine::Vm);
        let both = sweep_header(Engine::Both);
        assert_eq!(vm.len(), 2 + 16 + 1);
        assert_eq!(both.len(), 2 + 16 + 16 + 1 + 16 + 1);
        assert!(!vm.iter().any(|h| h.starts_with("err_")));
        assert_eq!(both.last().unwrap(), "status");
        assert_eq!(both[2], "vm_energy");
    }

    #[test]
    fn cells_use_seventeen_digits() {
        assert_eq!(Cell::Num(0.1).csv(), "1.0000000000000001e-1");
        assert_eq!(Cell::Num(-1.0).csv(), "-1.0000000000000000e0");
        assert_eq!(Cell::Num(f64::NAN).csv(), "NaN");
        assert_eq!(Cell::Num(f64::NAN).json(), Value::Null);
        let text = Cell::Num(std::f64::consts::PI).csv();
        assert_eq!(text.parse::<f64>().unwrap(), std::f64::consts::PI);
    }

    #[test]
    fn config_merges_under_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        fs::write(&path, "# defaults\nomega = 2\nOmega=3\ng=0.4\npairs=1\ncompare=true\nthreshold=0.2\n").unwrap();
        let args = |extra: &[&str]| -> Vec<OsString> {
            ["rabi2q", "ground", "--config", path.to_str().unwrap()].iter().chain(extra).map(OsString::from).collect()
        };
        let merged = merge_config(args(&["--omega", "5"])).unwrap();
        let Command::Ground { model, solver, compare, .. } = Cli::try_parse_from(merged).unwrap().command else { panic!() };
        assert_eq!(model.base.omega, 5.0);
        assert_eq!(model.base.tunneling, 3.0);
        assert_eq!(model.g, Some(0.4));
        assert_eq!(solver.pairs, 1);
        assert!(compare);

        let merged = merge_config(args(&["--g-over-gc", "1.5"])).unwrap();
        let Command::Ground { model, .. } = Cli::try_parse_from(merged).unwrap().command else { panic!() };
        assert_eq!(model.g, None);
        assert_eq!(model.g_over_gc, Some(1.5));

        fs::write(&path, "bogus=1\n").unwrap();
        assert!(merge_config(args(&[])).is_err());
        fs::write(&path, "pairs\n").unwrap();
        assert!(merge_config(args(&[])).is_err());
    }

    #[test]
    fn crossover_zero_tunneling_is_immediate() {
        let grid = linspace(0.0, 1.0, 5);
        let (table, summary) = crossover_table(1.0, &[0.0, 1.0], 0.1, &grid, 1e-10).unwrap();
        assert_eq!(table.rows.len(), 10);
        assert_eq!(summary[0].1, Ok(Some(0.0)));
    }
}
