//! `affq` command line: one run configuration in, one CSV or JSON artifact out.
//!
//! Output is a pure function of the configuration. Field names are frozen in
//! `docs/formats.md`.

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;

use clap::{ArgAction, CommandFactory, Parser, ValueEnum};
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::classical::{integrate_sampled, period_estimate, poisson_bracket_residual, PhaseMap};
use crate::coherent::{
    fs_metric, fs_metric_auto, scalar_curvature, scalar_curvature_auto, CoherentFamily,
    CoherentScheme, CURVATURE_DELTA_PAIR, METRIC_DELTA_LADDER,
};
use crate::correspondence::{default_hbars, hbar_scaling, LadderStates, ScalingOptions};
use crate::domain_grid::{build_grid, DomainSpec, Grid1D, DEFAULT_EXTENT};
use crate::eigensolve::{
    boundary_exponent, eigen_bisection, eigen_ql, richardson, Spectrum, QL_MAX_SWEEPS,
};
use crate::error::Error;
use crate::operators::{
    assemble, kinetic_identity_residual, CatalogId, ModelSpec, Potential, Scheme,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Spectrum,
    Metric,
    Curvature,
    Correspond,
    Classical,
    Identities,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelName {
    Ho,
    HalfHo,
    Box,
    AffineBox,
    Item1,
    Item2,
    Item3,
    Item4,
    Item5,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeArg {
    Canonical,
    Affine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PotentialArg {
    None,
    Harmonic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverArg {
    Ql,
    Bisection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
}

/// Everything a run depends on. Serialized into the provenance block, minus
/// the file locations, which do not affect results.
#[derive(Debug, Clone, Parser, Serialize)]
#[command(
    name = "affq",
    version,
    about = "Affine vs canonical quantization toolkit",
    args_override_self = true
)]
pub struct RunConfig {
    #[arg(value_enum)]
    pub command: Option<Command>,
    #[arg(long, value_enum)]
    pub model: Option<ModelName>,
    /// Overrides the model's quantization scheme; selects the coherent family for metric/curvature.
    #[arg(long, value_enum)]
    pub scheme: Option<SchemeArg>,
    /// Potential for item1, item2, item4, item5 (default harmonic).
    #[arg(long, value_enum)]
    pub potential: Option<PotentialArg>,
    #[arg(long, default_value_t = 1.0)]
    pub b: f64,
    #[arg(long, default_value_t = 1.0)]
    pub hbar: f64,
    /// Comma-separated, strictly decreasing (correspond).
    #[arg(long, value_delimiter = ',', action = ArgAction::Set, num_args = 1)]
    pub hbars: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub omega: f64,
    #[arg(long, default_value_t = 1.0)]
    pub mass: f64,
    /// Interior grid nodes.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 10)]
    pub levels: usize,
    #[arg(long)]
    pub x_max: Option<f64>,
    #[arg(long, value_enum, default_value_t = SolverArg::Ql)]
    pub solver: SolverArg,
    #[arg(long, num_args = 0..=1, default_value_t = false, default_missing_value = "true", action = ArgAction::Set)]
    pub extrapolate: bool,
    #[arg(long, default_value_t = crate::eigensolve::DEFAULT_FIT_WINDOW)]
    pub fit_window: usize,
    /// Affine fiducial parameter; for correspond, its value at hbar = 1 (beta * hbar is held fixed).
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub p: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub q: f64,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub p0: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub q0: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub dt: f64,
    #[arg(long, default_value_t = 10.0)]
    pub t_end: f64,
    /// Keep every stride-th trajectory sample in the table.
    #[arg(long, default_value_t = 100)]
    pub stride: usize,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long)]
    #[serde(skip)]
    pub output: Option<PathBuf>,
    /// Flat key=value file; its entries override flags.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// JSON artifact of an earlier run; results must agree within --baseline-rtol.
    #[arg(long)]
    #[serde(skip)]
    pub baseline: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-9)]
    #[serde(skip)]
    pub baseline_rtol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Numerical,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    fn config(msg: impl Into<String>) -> Self {
        CliError {
            kind: ErrorKind::Config,
            message: msg.into(),
        }
    }

    fn numerical(msg: impl Into<String>) -> Self {
        CliError {
            kind: ErrorKind::Numerical,
            message: msg.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Config => 2,
            ErrorKind::Numerical => 3,
        }
    }

    /// Single-line JSON for stderr.
    pub fn to_line(&self) -> String {
        let kind = match self.kind {
            ErrorKind::Config => "config",
            ErrorKind::Numerical => "numerical",
        };
        json!({ "error": kind, "message": self.message.replace('\n', " ") }).to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            CliError::numerical(e.to_string())
        } else {
            CliError::config(e.to_string())
        }
    }
}

/// What `parse_args` hands back: a config to run, or text to print and exit 0.
#[derive(Debug)]
pub enum Parsed {
    Run(Box<RunConfig>),
    Info(String),
}

fn clap_error(e: clap::Error) -> std::result::Result<Parsed, CliError> {
    use clap::error::ErrorKind as K;
    match e.kind() {
        K::DisplayHelp | K::DisplayVersion | K::DisplayHelpOnMissingArgumentOrSubcommand => {
            Ok(Parsed::Info(e.to_string()))
        }
        _ => {
            let text = e.to_string();
            let line = text
                .lines()
                .find(|l| !l.trim().is_empty())
                .unwrap_or("invalid arguments");
            Err(CliError::config(
                line.trim_start_matches("error: ").trim().to_string(),
            ))
        }
    }
}

/// Parses flags, then layers the `--config` file on top.
pub fn parse_args<I, S>(argv: I) -> std::result::Result<Parsed, CliError>
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let first = match RunConfig::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => return clap_error(e),
    };
    let Some(path) = first.config.clone() else {
        return finish(first);
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
    let known: Vec<String> = RunConfig::command()
        .get_arguments()
        .filter_map(|a| a.get_long().map(str::to_string))
        .collect();
    let mut extra: Vec<OsString> = Vec::new();
    let mut command = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::config(format!("config line {}: expected key=value", lineno + 1))
        })?;
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        if key == "command" {
            command = Some(Command::from_str(value, false).map_err(|_| {
                CliError::config(format!(
                    "config line {}: unknown command '{value}'",
                    lineno + 1
                ))
            })?);
            continue;
        }
        if key == "config" || !known.contains(&key) {
            return Err(CliError::config(format!(
                "config line {}: unknown key '{key}'",
                lineno + 1
            )));
        }
        extra.push(format!("--{key}={value}").into());
    }
    let mut all = argv;
    all.extend(extra);
    let mut cfg = match RunConfig::try_parse_from(&all) {
        Ok(c) => c,
        Err(e) => return clap_error(e),
    };
    if command.is_some() {
        cfg.command = command;
    }
    finish(cfg)
}

fn finish(cfg: RunConfig) -> std::result::Result<Parsed, CliError> {
    if cfg.command.is_none() {
        return Err(CliError::config(
            "missing command (spectrum, metric, curvature, correspond, classical, identities)",
        ));
    }
    Ok(Parsed::Run(Box::new(cfg)))
}

#[derive(Debug, Clone, PartialEq)]
enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Num(x) if x.is_finite() => format!("{x:.16e}"),
            Cell::Num(x) => x.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(i) => json!(i),
            Cell::Num(x) => json!(x),
            Cell::Text(s) => json!(s),
            Cell::Empty => Value::Null,
        }
    }
}

fn opt(x: Option<f64>) -> Cell {
    x.map_or(Cell::Empty, Cell::Num)
}

#[derive(Debug, Clone)]
struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    fn json_rows(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|r| {
                    Value::Object(
                        self.header
                            .iter()
                            .zip(r)
                            .map(|(k, c)| (k.to_string(), c.json()))
                            .collect(),
                    )
                })
                .collect(),
        )
    }

    fn to_csv(&self) -> std::result::Result<String, CliError> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let io = |e: csv::Error| CliError::config(format!("csv: {e}"));
        w.write_record(&self.header).map_err(io)?;
        for r in &self.rows {
            w.write_record(r.iter().map(Cell::csv)).map_err(io)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| CliError::config(format!("csv: {e}")))?;
        String::from_utf8(bytes).map_err(|e| CliError::config(format!("csv: {e}")))
    }
}

/// Result of a run before serialization.
#[derive(Debug, Clone)]
pub struct Report {
    pub command: Command,
    pub results: Value,
    pub provenance: Value,
    table: Table,
}

impl Report {
    pub fn to_json(&self) -> Value {
        json!({ "command": self.command, "results": self.results, "provenance": self.provenance })
    }

    pub fn render(&self, format: Format) -> std::result::Result<String, CliError> {
        match format {
            Format::Csv => self.table.to_csv(),
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.to_json())
                    .map_err(|e| CliError::config(format!("json: {e}")))?;
                s.push('\n');
                Ok(s)
            }
        }
    }
}

fn grid_json(g: &Grid1D<f64>) -> Value {
    json!({ "x_min": g.x_min, "x_max": g.x_max, "n": g.n, "h": g.h })
}

fn provenance(cfg: &RunConfig, grids: Vec<Value>, solver: &str, tolerances: Value) -> Value {
    json!({
        "version": env!("CARGO_PKG_VERSION"),
        "config": serde_json::to_value(cfg).unwrap_or(Value::Null),
        "grids": grids,
        "solver": solver,
        "tolerances": tolerances,
    })
}

fn model_from(cfg: &RunConfig) -> std::result::Result<ModelSpec<f64>, CliError> {
    let name = cfg
        .model
        .ok_or_else(|| CliError::config("this command needs --model"))?;
    let potential = match cfg.potential {
        Some(PotentialArg::None) => Potential::None,
        Some(PotentialArg::Harmonic) | None => Potential::Harmonic,
    };
    let (hbar, b) = (cfg.hbar, cfg.b);
    let mut m = match name {
        ModelName::Ho => ModelSpec::harmonic_oscillator(hbar),
        ModelName::HalfHo => ModelSpec::half_harmonic_oscillator(hbar),
        ModelName::Box => ModelSpec::canonical_box(b, hbar),
        ModelName::AffineBox => ModelSpec::affine_box(b, hbar),
        ModelName::Item1 => ModelSpec::catalog(CatalogId::Item1, b, hbar, potential),
        ModelName::Item2 => ModelSpec::catalog(CatalogId::Item2, b, hbar, potential),
        ModelName::Item3 => ModelSpec::catalog(CatalogId::Item3, b, hbar, potential),
        ModelName::Item4 => ModelSpec::catalog(CatalogId::Item4, b, hbar, potential),
        ModelName::Item5 => ModelSpec::catalog(CatalogId::Item5, b, hbar, potential),
    };
    if let Some(s) = cfg.scheme {
        m.scheme = match s {
            SchemeArg::Canonical => Scheme::Canonical,
            SchemeArg::Affine => Scheme::Affine,
        };
    }
    m.omega = cfg.omega;
    m.mass = cfg.mass;
    m.validate()?;
    Ok(m)
}

/// Wall used for the exponent fit: the left end of the grid that carries the spectrum.
fn fit_wall(domain: &DomainSpec<f64>) -> Option<f64> {
    match *domain {
        DomainSpec::FullLine => None,
        DomainSpec::HalfLine { b } | DomainSpec::Interval { b } => Some(-b),
        DomainSpec::PuncturedExterior { b } => Some(b),
        DomainSpec::PuncturedLine => Some(0.0),
    }
}

fn run_spectrum(cfg: &RunConfig) -> std::result::Result<Report, CliError> {
    let m = model_from(cfg)?;
    let n = cfg.n.unwrap_or(4000);
    if cfg.levels == 0 {
        return Err(CliError::config("--levels must be at least 1"));
    }
    if cfg.fit_window < 4 {
        return Err(CliError::config("--fit-window must be at least 4"));
    }
    let hint = if m.domain.is_bounded() {
        if cfg.x_max.is_some() {
            return Err(CliError::config("--x-max given for a bounded domain"));
        }
        None
    } else {
        Some(cfg.x_max.unwrap_or(DEFAULT_EXTENT))
    };
    let grid = build_grid(&m.domain, n, hint)?.primary().clone();
    let k = cfg.levels + 1;
    if k > grid.n {
        return Err(CliError::config(format!(
            "{} levels need more than {} nodes",
            cfg.levels, grid.n
        )));
    }
    let solve = |g: &Grid1D<f64>| -> std::result::Result<Spectrum<f64>, CliError> {
        let op = assemble(&m, g)?;
        Ok(match cfg.solver {
            SolverArg::Ql => eigen_ql(&op)?,
            SolverArg::Bisection => eigen_bisection(&op, k)?,
        })
    };
    let base = solve(&grid)?;
    let mut grids = vec![grid_json(&grid)];
    let values = if cfg.extrapolate {
        let fine = grid.refine()?;
        grids.push(grid_json(&fine));
        richardson(&base, &solve(&fine)?, k)?
    } else {
        base.eigenvalues[..k].to_vec()
    };
    let exps: Vec<Option<f64>> = match fit_wall(&m.domain) {
        Some(wall) => {
            let vecs = eigen_bisection(&assemble(&m, &grid)?, cfg.levels)?;
            (0..cfg.levels)
                .map(|l| boundary_exponent(&vecs, l, wall, cfg.fit_window).ok())
                .collect()
        }
        None => vec![None; cfg.levels],
    };
    let table = Table {
        header: vec!["level", "eigenvalue", "spacing", "boundary_exponent"],
        rows: (0..cfg.levels)
            .map(|l| {
                vec![
                    Cell::Int(l as i64),
                    Cell::Num(values[l]),
                    Cell::Num(values[l + 1] - values[l]),
                    opt(exps[l]),
                ]
            })
            .collect(),
    };
    let results = json!({ "levels": table.json_rows(), "extrapolated": cfg.extrapolate });
    let tol = json!({
        "ql_max_sweeps": QL_MAX_SWEEPS,
        "bisection": "machine precision",
        "inverse_iteration_residual": 1e-10,
        "fit_window": cfg.fit_window,
    });
    let solver = if cfg.extrapolate {
        format!("{}+richardson", base.method.name())
    } else {
        base.method.name().to_string()
    };
    Ok(Report {
        command: Command::Spectrum,
        results,
        provenance: provenance(cfg, grids, &solver, tol),
        table,
    })
}

fn coherent_family(
    cfg: &RunConfig,
    margin: f64,
) -> std::result::Result<CoherentFamily<f64>, CliError> {
    let scheme = cfg
        .scheme
        .ok_or_else(|| CliError::config("this command needs --scheme"))?;
    let (p, q) = (cfg.p, cfg.q);
    let p_max = p.abs() + margin;
    Ok(match scheme {
        SchemeArg::Canonical => CoherentFamily::for_region(
            CoherentScheme::Canonical { omega: cfg.omega },
            cfg.hbar,
            p_max,
            q - margin,
            q + margin,
            cfg.n.unwrap_or(6000),
        )?,
        SchemeArg::Affine => {
            if !(q > 0.0) {
                return Err(CliError::config(format!(
                    "affine labels need q > 0, got {q}"
                )));
            }
            CoherentFamily::for_region(
                CoherentScheme::Affine {
                    beta: cfg.beta.unwrap_or(1.0),
                },
                cfg.hbar,
                p_max,
                q * 0.5,
                q * (1.0 + margin),
                cfg.n.unwrap_or(20000),
            )?
        }
    })
}

fn run_metric(cfg: &RunConfig) -> std::result::Result<Report, CliError> {
    let fam = coherent_family(cfg, 0.5)?;
    let g = match cfg.delta {
        Some(d) => fs_metric(&fam, cfg.p, cfg.q, d)?,
        None => fs_metric_auto(&fam, cfg.p, cfg.q)?,
    };
    let table = Table {
        header: vec!["p", "q", "g_pp", "g_pq", "g_qq"],
        rows: vec![vec![
            Cell::Num(g.p),
            Cell::Num(g.q),
            Cell::Num(g.g_pp),
            Cell::Num(g.g_pq),
            Cell::Num(g.g_qq),
        ]],
    };
    let results = json!({ "p": g.p, "q": g.q, "g_pp": g.g_pp, "g_pq": g.g_pq, "g_qq": g.g_qq });
    let tol = match cfg.delta {
        Some(d) => json!({ "delta": d }),
        None => json!({ "delta_ladder": METRIC_DELTA_LADDER, "ladder_consistency": 1e-3 }),
    };
    Ok(Report {
        command: Command::Metric,
        results,
        provenance: provenance(
            cfg,
            vec![grid_json(&fam.grid)],
            "fidelity second differences",
            tol,
        ),
        table,
    })
}

fn run_curvature(cfg: &RunConfig) -> std::result::Result<Report, CliError> {
    let fam = coherent_family(cfg, 0.5)?;
    let r = match cfg.delta {
        Some(d) => scalar_curvature(&fam, cfg.p, cfg.q, d)?,
        None => scalar_curvature_auto(&fam, cfg.p, cfg.q)?,
    };
    let table = Table {
        header: vec!["p", "q", "curvature"],
        rows: vec![vec![Cell::Num(cfg.p), Cell::Num(cfg.q), Cell::Num(r)]],
    };
    let results = json!({ "p": cfg.p, "q": cfg.q, "curvature": r });
    let tol = match cfg.delta {
        Some(d) => json!({ "delta": d }),
        None => json!({ "delta_pair": CURVATURE_DELTA_PAIR, "pair_consistency": 1e-2 }),
    };
    Ok(Report {
        command: Command::Curvature,
        results,
        provenance: provenance(cfg, vec![grid_json(&fam.grid)], "brioschi 3x3 stencil", tol),
        table,
    })
}

fn run_correspond(cfg: &RunConfig) -> std::result::Result<Report, CliError> {
    let m = model_from(cfg)?;
    let states = match m.scheme {
        Scheme::Canonical => LadderStates::Canonical { omega: cfg.omega },
        Scheme::Affine => LadderStates::Affine {
            beta_hbar: cfg.beta.unwrap_or(2.0),
        },
    };
    let hbars = if cfg.hbars.is_empty() {
        default_hbars()
    } else {
        cfg.hbars.clone()
    };
    let opts = ScalingOptions {
        n: cfg.n.unwrap_or(6000),
        x_max: cfg.x_max,
    };
    let r = hbar_scaling(&m, states, &[(cfg.p, cfg.q)], &hbars, opts)?;
    let table = Table {
        header: vec!["p", "q", "hbar", "expectation", "classical", "difference"],
        rows: r
            .hbars
            .iter()
            .enumerate()
            .map(|(k, &h)| {
                vec![
                    Cell::Num(cfg.p),
                    Cell::Num(cfg.q),
                    Cell::Num(h),
                    Cell::Num(r.values[0][k]),
                    Cell::Num(r.classical[0]),
                    Cell::Num(r.difference(0, k)),
                ]
            })
            .collect(),
    };
    let results = json!({
        "ladder": table.json_rows(),
        "fitted_order": r.fitted_order[0],
        "monotone": r.monotone[0],
    });
    Ok(Report {
        command: Command::Correspond,
        results,
        provenance: provenance(
            cfg,
            r.grids.iter().map(grid_json).collect(),
            "coherent expectation",
            json!({ "imaginary_part": 1e-10 }),
        ),
        table,
    })
}

/// Hard cap on stored steps for the classical command.
const MAX_CLASSICAL_STEPS: f64 = 2e7;

fn run_classical(cfg: &RunConfig) -> std::result::Result<Report, CliError> {
    let m = model_from(cfg)?;
    if cfg.stride == 0 {
        return Err(CliError::config("--stride must be positive"));
    }
    if cfg.dt > 0.0 && cfg.t_end / cfg.dt > MAX_CLASSICAL_STEPS {
        return Err(CliError::config(format!(
            "t_end / dt exceeds {MAX_CLASSICAL_STEPS} steps"
        )));
    }
    let tr = integrate_sampled(&m, cfg.p0, cfg.q0, cfg.dt, cfg.t_end, 1)?;
    let est = match period_estimate(&tr) {
        Ok(e) => Some(e),
        Err(Error::NoRecurrences(_)) => None,
        Err(e) => return Err(e.into()),
    };
    let last = tr.times.len() - 1;
    let table = Table {
        header: vec!["time", "p", "q", "energy"],
        rows: (0..tr.times.len())
            .filter(|&j| j % cfg.stride == 0 || j == last)
            .map(|j| {
                vec![
                    Cell::Num(tr.times[j]),
                    Cell::Num(tr.p_series[j]),
                    Cell::Num(tr.q_series[j]),
                    Cell::Num(tr.energy_series[j]),
                ]
            })
            .collect(),
    };
    let bounces: Vec<f64> = tr.bounce_events.iter().map(|e| e.time).collect();
    let results = json!({
        "energy": tr.energy_series[0],
        "period": est.as_ref().map(|e| e.period),
        "period_jitter": est.as_ref().map(|e| e.jitter),
        "recurrences": est.as_ref().map_or(0, |e| e.crossings.len()),
        "bounce_count": bounces.len(),
        "bounce_times": bounces,
        "max_energy_drift": tr.max_energy_drift,
        "samples": table.json_rows(),
    });
    Ok(Report {
        command: Command::Classical,
        results,
        provenance: provenance(
            cfg,
            vec![],
            "yoshida4 leapfrog with exact wall reflection",
            json!({ "dt": cfg.dt, "max_dt_fraction_of_period": 0.01 }),
        ),
        table,
    })
}

fn run_identities(cfg: &RunConfig) -> std::result::Result<Report, CliError> {
    let n0 = cfg.n.unwrap_or(99);
    let hbar = cfg.hbar;
    type TestFn = fn(f64) -> f64;
    let tests: [(&str, TestFn); 3] = [
        ("x^3(5-x)^3", |x| (x * (5.0 - x)).powi(3)),
        ("x^3(5-x)^3exp(-x)", |x| {
            (x * (5.0 - x)).powi(3) * (-x).exp()
        }),
        ("sin^3(pi x/5)", |x| {
            (std::f64::consts::PI * x / 5.0).sin().powi(3)
        }),
    ];
    let mut rows = Vec::new();
    let mut grids = Vec::new();
    for (name, f) in tests {
        let mut prev: Option<f64> = None;
        let mut n = n0;
        for _ in 0..4 {
            let g = Grid1D::new(0.0, 5.0, n)?;
            let r = kinetic_identity_residual(&g, hbar, &[&f])?;
            rows.push(vec![
                Cell::Text(format!("kinetic:{name}")),
                Cell::Int(n as i64),
                Cell::Num(r),
                opt(prev.map(|p| p / r)),
            ]);
            if grids.len() < 4 {
                grids.push(grid_json(&g));
            }
            prev = Some(r);
            n = 2 * n + 1;
        }
    }
    let rect = (-1e3, 1e3, 1e-6, 1e3);
    let maps: [(&str, PhaseMap<f64>); 4] = [
        ("identity", PhaseMap::new(|p, _| p, |_, q| q, rect)),
        (
            "scaling",
            PhaseMap::new(|p, _| p / 3.0, |_, q| 3.0 * q, rect),
        ),
        (
            "dilation",
            PhaseMap::new(|p, q| p * q, |_, q: f64| q.ln(), rect),
        ),
        (
            "non-canonical",
            PhaseMap::new(|p: f64, _| p * p, |_, q| q, rect),
        ),
    ];
    if !(cfg.q > 0.0) {
        return Err(CliError::config(
            "identities needs q > 0 for the dilation map",
        ));
    }
    for (name, map) in &maps {
        let r = poisson_bracket_residual(map, &[(cfg.p, cfg.q)], 1e-4)?[0];
        rows.push(vec![
            Cell::Text(format!("poisson:{name}")),
            Cell::Empty,
            Cell::Num(r),
            Cell::Empty,
        ]);
    }
    let table = Table {
        header: vec!["check", "n", "residual", "ratio"],
        rows,
    };
    let results = json!({ "checks": table.json_rows() });
    Ok(Report {
        command: Command::Identities,
        results,
        provenance: provenance(
            cfg,
            grids,
            "dilation stencil, 4th-order bracket differences",
            json!({ "fd_step": 1e-4 }),
        ),
        table,
    })
}

/// Runs one configuration.
pub fn run(cfg: &RunConfig) -> std::result::Result<Report, CliError> {
    match cfg.command {
        Some(Command::Spectrum) => run_spectrum(cfg),
        Some(Command::Metric) => run_metric(cfg),
        Some(Command::Curvature) => run_curvature(cfg),
        Some(Command::Correspond) => run_correspond(cfg),
        Some(Command::Classical) => run_classical(cfg),
        Some(Command::Identities) => run_identities(cfg),
        None => Err(CliError::config("missing command")),
    }
}

/// First place where two `results` trees differ beyond `rtol` (absolute floor `rtol * 1e-3`).
pub fn compare_results(want: &Value, got: &Value, rtol: f64) -> Option<String> {
    fn walk(a: &Value, b: &Value, rtol: f64, path: &str) -> Option<String> {
        match (a, b) {
            (Value::Number(x), Value::Number(y)) => {
                let (x, y) = (x.as_f64()?, y.as_f64()?);
                let tol = rtol * x.abs().max(y.abs()).max(1e-3);
                ((x - y).abs() > tol).then(|| format!("{path}: {x} vs {y}"))
            }
            (Value::Array(xs), Value::Array(ys)) => {
                if xs.len() != ys.len() {
                    return Some(format!("{path}: length {} vs {}", xs.len(), ys.len()));
                }
                xs.iter()
                    .zip(ys)
                    .enumerate()
                    .find_map(|(i, (x, y))| walk(x, y, rtol, &format!("{path}[{i}]")))
            }
            (Value::Object(xs), Value::Object(ys)) => {
                let keys = |m: &Map<String, Value>| m.keys().cloned().collect::<Vec<_>>();
                if keys(xs) != keys(ys) {
                    return Some(format!("{path}: fields differ"));
                }
                xs.iter()
                    .find_map(|(k, x)| walk(x, &ys[k], rtol, &format!("{path}.{k}")))
            }
            _ => (a != b).then(|| format!("{path}: {a} vs {b}")),
        }
    }
    walk(want, got, rtol, "results")
}

/// Full pipeline behind `main`: run, compare against a baseline, write the artifact.
/// Returns the rendered output when no `--output` path is set.
pub fn execute(cfg: &RunConfig) -> std::result::Result<Option<String>, CliError> {
    if !(cfg.baseline_rtol >= 0.0) {
        return Err(CliError::config("--baseline-rtol must be non-negative"));
    }
    let report = run(cfg)?;
    if let Some(path) = &cfg.baseline {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::config(format!("cannot read baseline {}: {e}", path.display()))
        })?;
        let base: Value = serde_json::from_str(&text).map_err(|e| {
            CliError::config(format!("baseline {} is not JSON: {e}", path.display()))
        })?;
        let want = base
            .get("results")
            .ok_or_else(|| CliError::config("baseline has no results block"))?;
        if let Some(diff) = compare_results(want, &report.results, cfg.baseline_rtol) {
            return Err(CliError::numerical(format!("baseline mismatch at {diff}")));
        }
    }
    let out = report.render(cfg.format)?;
    match &cfg.output {
        Some(path) => {
            std::fs::write(path, out)
                .map_err(|e| CliError::config(format!("cannot write {}: {e}", path.display())))?;
            Ok(None)
        }
        None => Ok(Some(out)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(args: &[&str]) -> RunConfig {
        let mut v = vec!["affq"];
        v.extend_from_slice(args);
        match parse_args(v).unwrap() {
            Parsed::Run(c) => *c,
            Parsed::Info(s) => panic!("{s}"),
        }
    }

    #[test]
    fn parses_documented_flags() {
        let c = cfg(&[
            "metric", "--scheme", "affine", "--beta", "1", "--hbar", "1", "--p", "0", "--q", "1",
        ]);
        assert_eq!(c.command, Some(Command::Metric));
        assert_eq!(c.beta, Some(1.0));
        let c = cfg(&[
            "classical",
            "--model",
            "half-ho",
            "--p0",
            "-0.5",
            "--t-end",
            "3",
        ]);
        assert_eq!(c.p0, -0.5);
        assert_eq!(c.model, Some(ModelName::HalfHo));
        let c = cfg(&["correspond", "--model", "ho", "--hbars", "1,0.5,0.1"]);
        assert_eq!(c.hbars, vec![1.0, 0.5, 0.1]);
        assert!(cfg(&["spectrum", "--extrapolate"]).extrapolate);
    }

    #[test]
    fn unknown_flag_is_config_error() {
        let e = parse_args(["affq", "spectrum", "--nope", "1"]).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(!e.to_line().contains('\n'));
        assert_eq!(parse_args(["affq"]).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn help_is_not_an_error() {
        assert!(matches!(
            parse_args(["affq", "--help"]),
            Ok(Parsed::Info(_))
        ));
    }

    #[test]
    fn metric_example() {
        let r = run(&cfg(&[
            "metric", "--scheme", "affine", "--beta", "1", "--hbar", "1", "--p", "0", "--q", "1",
        ]))
        .unwrap();
        for (k, want) in [("g_pp", 1.0), ("g_pq", 0.0), ("g_qq", 1.0)] {
            let v = r.results[k].as_f64().unwrap();
            assert!((v - want).abs() < 1e-4, "{k} = {v}");
        }
    }

    #[test]
    fn numerical_and_config_failures_map_to_exit_codes() {
        let e = run(&cfg(&[
            "metric", "--scheme", "affine", "--q", "1", "--delta", "1e-12",
        ]))
        .unwrap_err();
        assert_eq!(e.exit_code(), 3);
        let e = run(&cfg(&["metric", "--scheme", "affine", "--q", "-1"])).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        let e = run(&cfg(&["spectrum"])).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        let e = run(&cfg(&["classical", "--model", "half-ho", "--dt", "0.5"])).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn csv_uses_full_precision() {
        let r = run(&cfg(&[
            "curvature",
            "--scheme",
            "canonical",
            "--p",
            "0.3",
            "--q",
            "-0.2",
        ]))
        .unwrap();
        let csv = r.render(Format::Csv).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("p,q,curvature"));
        let row = lines.next().unwrap();
        assert!(
            row.starts_with("2.9999999999999999e-1,-2.0000000000000001e-1,"),
            "{row}"
        );
    }

    #[test]
    fn baseline_comparison() {
        let a = json!({ "x": 1.0, "v": [1.0, 2.0], "s": "a" });
        assert!(compare_results(&a, &a, 1e-9).is_none());
        let b = json!({ "x": 1.0 + 1e-6, "v": [1.0, 2.0], "s": "a" });
        assert!(compare_results(&a, &b, 1e-9).unwrap().contains("results.x"));
        let c = json!({ "x": 1.0, "v": [1.0], "s": "a" });
        assert!(compare_results(&a, &c, 1e-9).is_some());
    }
}
