//! `wall-lab <command> [--key value]... [--out PATH] [--format csv|json]`
//!
//! Every command evaluates one library operation over the cartesian product of
//! its list-valued keys and emits a table headed by the fully resolved
//! configuration, so a table can always be regenerated from its own header.

use std::fmt::Write as _;
use std::io::Write;

use clap::{Arg, ArgAction, ArgMatches};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use wall_lab::classical::{
    abel_invert, classical_time_delay, impossibility_bound, weak_delay_formula, weak_potential, ClassicalPotential,
    DelayProfile, WeakRealization,
};
use wall_lab::field::Grid;
use wall_lab::kernel::{kernel_closed, kernel_spectral, KernelQuery, SpectralOptions};
use wall_lab::regularization::{
    decades, match_step, scheme_potential, target_error, RegularizationScheme, SchemeFamily,
};
use wall_lab::spectrum::{evolve_packet, phase_shift, time_delay, WavePacket};
use wall_lab::wkb::{bounce_quantities, delta_s_limit, extract_AL, step_bounce, wkb_kernel};
use wall_lab::{parse_wall, Error, UnitSystem, WallParameter};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

const MAX_LISTS: usize = 2;
const U: UnitSystem = UnitSystem::NATURAL;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numerical { op: &'static str, err: Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => EXIT_USAGE,
            Self::Numerical { .. } => EXIT_NUMERICAL,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Usage(m) => write!(f, "error: {m}"),
            Self::Numerical { op, err } => write!(f, "error in {op}: {err}"),
        }
    }
}

/// Library failures of rejected input are argument errors; the rest are numerical.
fn lib(op: &'static str) -> impl Fn(Error) -> CliError {
    move |err| if err.is_numerical() { CliError::Numerical { op, err } } else { CliError::Usage(format!("{op}: {err}")) }
}

#[derive(Debug, Clone, Copy)]
enum Kind {
    Real,
    Wall,
    Count,
    Choice(&'static [&'static str]),
    /// `A:B`, expanded to `d = 10^{−A} … 10^{−B}`.
    Decades,
}

#[derive(Debug, Clone, Copy)]
struct Key {
    name: &'static str,
    kind: Kind,
    listable: bool,
    default: Option<&'static str>,
}

const fn key(name: &'static str, kind: Kind) -> Key {
    Key { name, kind, listable: false, default: None }
}

const fn list(name: &'static str, kind: Kind) -> Key {
    Key { name, kind, listable: true, default: None }
}

const fn with(k: Key, default: &'static str) -> Key {
    Key { default: Some(default), ..k }
}

const SCHEMES: &[&str] = &["s311", "s312", "s316", "s318", "s512", "s513"];
const METHODS: &[&str] = &["closed", "spectral"];
const CLASSICAL_SUBS: &[&str] = &["counterpart", "invert", "bound", "weak-potential", "weak-delay"];
const WKB_SUBS: &[&str] = &["action", "deltas", "al", "wkbkernel"];

struct CommandSpec {
    name: &'static str,
    about: &'static str,
    keys: &'static [Key],
    columns: fn(&Point) -> Result<Vec<&'static str>, CliError>,
    eval: fn(&Point) -> Result<Vec<Row>, CliError>,
}

impl std::fmt::Debug for CommandSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name)
    }
}

const COMMANDS: &[CommandSpec] = &[
    CommandSpec {
        name: "delay",
        about: "phase shift and time delay of a plane wave",
        keys: &[key("L", Kind::Wall), list("k0", Kind::Real)],
        columns: |_| Ok(vec!["L", "k0", "delta", "tau"]),
        eval: eval_delay,
    },
    CommandSpec {
        name: "packet",
        about: "Gaussian packet sampled on the half line",
        keys: &[
            key("L", Kind::Wall),
            with(key("k0", Kind::Real), "2"),
            with(key("sigma", Kind::Real), "0.1"),
            with(key("x0", Kind::Real), "30"),
            with(list("t", Kind::Real), "0"),
            with(key("grid-n", Kind::Count), "601"),
            with(key("x-max", Kind::Real), "60"),
        ],
        columns: |_| Ok(vec!["t", "x", "re", "im", "density"]),
        eval: eval_packet,
    },
    CommandSpec {
        name: "kernel",
        about: "propagator from a to b in time T",
        keys: &[
            key("L", Kind::Wall),
            key("a", Kind::Real),
            key("b", Kind::Real),
            list("T", Kind::Real),
            with(key("method", Kind::Choice(METHODS)), "closed"),
        ],
        columns: |_| Ok(vec!["L", "a", "b", "T", "re", "im", "est_error"]),
        eval: eval_kernel,
    },
    CommandSpec {
        name: "regularize",
        about: "step-potential log-derivative against the target wall",
        keys: &[
            key("scheme", Kind::Choice(SCHEMES)),
            key("L", Kind::Wall),
            key("c", Kind::Real),
            key("nu", Kind::Real),
            key("beta0", Kind::Real),
            key("c1", Kind::Real),
            with(key("d-decades", Kind::Decades), "2:8"),
            list("E", Kind::Real),
        ],
        columns: |_| Ok(vec!["d", "E", "R", "inv_R", "err"]),
        eval: eval_regularize,
    },
    CommandSpec {
        name: "classical",
        about: "classical counterparts, inversion and the weak realization",
        keys: &[
            key("sub", Kind::Choice(CLASSICAL_SUBS)),
            key("L", Kind::Wall),
            with(key("c", Kind::Real), "1"),
            list("E", Kind::Real),
            list("x0", Kind::Real),
            list("W", Kind::Real),
            list("x", Kind::Real),
        ],
        columns: classical_columns,
        eval: eval_classical,
    },
    CommandSpec {
        name: "wkb",
        about: "bounce actions, step limits and kernel amplitudes",
        keys: &[
            key("sub", Kind::Choice(WKB_SUBS)),
            key("scheme", Kind::Choice(SCHEMES)),
            key("L", Kind::Wall),
            key("c", Kind::Real),
            key("nu", Kind::Real),
            key("beta0", Kind::Real),
            key("c1", Kind::Real),
            key("d-decades", Kind::Decades),
            with(list("a", Kind::Real), "1"),
            with(list("b", Kind::Real), "3"),
            with(list("T", Kind::Real), "1"),
        ],
        columns: wkb_columns,
        eval: eval_wkb,
    },
];

/// A resolved key: its textual value (or list), as echoed in the header.
#[derive(Debug, Clone)]
enum Setting {
    Scalar(String),
    List(Vec<String>),
    Decades(String, Vec<f64>),
}

/// Resolved configuration of a run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    spec: &'static CommandSpec,
    settings: Vec<(&'static Key, Setting)>,
    pub json: bool,
    pub out: Option<String>,
}

impl RunConfig {
    pub fn command(&self) -> &'static str {
        self.spec.name
    }

    /// The argv that reproduces the table, without output options.
    pub fn echo(&self) -> String {
        let mut s = format!("wall-lab {}", self.spec.name);
        for (k, v) in &self.settings {
            match v {
                Setting::Scalar(x) => write!(s, " --{} {x}", k.name).unwrap(),
                Setting::List(xs) => write!(s, " --{}-list {}", k.name, xs.join(",")).unwrap(),
                Setting::Decades(raw, _) => write!(s, " --{} {raw}", k.name).unwrap(),
            }
        }
        s
    }

    fn params_json(&self) -> Map<String, Value> {
        self.settings
            .iter()
            .map(|(k, v)| {
                let value = match v {
                    Setting::Scalar(x) | Setting::Decades(x, _) => Value::String(x.clone()),
                    Setting::List(xs) => Value::Array(xs.iter().cloned().map(Value::String).collect()),
                };
                (k.name.to_string(), value)
            })
            .collect()
    }
}

/// One grid point: every key with a single textual value.
#[derive(Debug, Clone)]
pub struct Point(Vec<(&'static str, String)>);

impl Point {
    fn raw(&self, name: &str) -> Option<&str> {
        self.0.iter().find(|(k, _)| *k == name).map(|(_, v)| v.as_str())
    }

    fn require(&self, name: &str) -> Result<&str, CliError> {
        self.raw(name).ok_or_else(|| CliError::Usage(format!("--{name} is required here")))
    }

    fn real(&self, name: &str) -> Result<f64, CliError> {
        parse_real(self.require(name)?)
    }

    fn opt_real(&self, name: &str) -> Result<Option<f64>, CliError> {
        self.raw(name).map(parse_real).transpose()
    }

    fn wall(&self, name: &str) -> Result<WallParameter, CliError> {
        parse_wall(self.require(name)?).map_err(|e| CliError::Usage(e.to_string()))
    }

    fn length(&self) -> Result<f64, CliError> {
        self.wall("L")?.length().ok_or_else(|| CliError::Usage("--L must be finite here".into()))
    }

    fn text(&self, name: &str) -> Result<&str, CliError> {
        self.require(name)
    }
}

fn parse_real(s: &str) -> Result<f64, CliError> {
    s.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| CliError::Usage(format!("not a finite number: {s:?}")))
}

fn parse_decades(s: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Usage(format!("--d-decades expects A:B with integers, got {s:?}"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    let (a, b): (i32, i32) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
    if a > b {
        return Err(CliError::Usage(format!("--d-decades needs A <= B, got {s}")));
    }
    Ok(decades(a, b))
}

fn validate(key: &Key, value: &str) -> Result<(), CliError> {
    match key.kind {
        Kind::Real => parse_real(value).map(|_| ()),
        Kind::Wall => parse_wall(value).map(|_| ()).map_err(|e| CliError::Usage(format!("--{}: {e}", key.name))),
        Kind::Count => value
            .parse::<usize>()
            .map(|_| ())
            .map_err(|_| CliError::Usage(format!("--{} expects a count, got {value:?}", key.name))),
        Kind::Choice(options) => {
            if options.contains(&value.to_ascii_lowercase().as_str()) {
                Ok(())
            } else {
                Err(CliError::Usage(format!("--{} must be one of {}, got {value:?}", key.name, options.join("|"))))
            }
        }
        Kind::Decades => parse_decades(value).map(|_| ()),
    }
}

fn clap_command() -> clap::Command {
    let mut root = clap::Command::new("wall-lab")
        .about("Quantum walls on the half line: sweeps with CSV/JSON output")
        .subcommand_required(true)
        .arg_required_else_help(true);
    for spec in COMMANDS {
        let mut cmd = clap::Command::new(spec.name).about(spec.about);
        for k in spec.keys {
            cmd = cmd.arg(Arg::new(k.name).long(k.name).num_args(1).allow_hyphen_values(true).action(ArgAction::Set));
            if k.listable {
                let name = format!("{}-list", k.name);
                cmd = cmd.arg(
                    Arg::new(name.clone())
                        .long(name)
                        .num_args(1)
                        .allow_hyphen_values(true)
                        .conflicts_with(k.name)
                        .help("comma-separated values"),
                );
            }
        }
        cmd = cmd
            .arg(Arg::new("out").long("out").num_args(1).help("output file instead of stdout"))
            .arg(Arg::new("format").long("format").num_args(1).value_parser(["csv", "json"]).default_value("csv"));
        root = root.subcommand(cmd);
    }
    root
}

fn resolve(spec: &'static CommandSpec, m: &ArgMatches) -> Result<RunConfig, CliError> {
    let mut settings = Vec::new();
    for k in spec.keys {
        let scalar = m.get_one::<String>(k.name).cloned();
        let listed = if k.listable { m.get_one::<String>(&format!("{}-list", k.name)).cloned() } else { None };
        let setting = match (scalar, listed) {
            (_, Some(l)) => {
                let items: Vec<String> = l.split(',').map(|x| x.trim().to_string()).collect();
                if items.iter().any(|x| x.is_empty()) {
                    return Err(CliError::Usage(format!("--{}-list has an empty entry", k.name)));
                }
                Setting::List(items)
            }
            (Some(v), None) => Setting::Scalar(v),
            (None, None) => match k.default {
                Some(d) => Setting::Scalar(d.to_string()),
                None => continue,
            },
        };
        let setting = match (setting, k.kind) {
            (Setting::Scalar(v), Kind::Decades) => {
                let ds = parse_decades(&v)?;
                Setting::Decades(v, ds)
            }
            (s, _) => s,
        };
        match &setting {
            Setting::Scalar(v) => validate(k, v)?,
            Setting::List(vs) => vs.iter().try_for_each(|v| validate(k, v))?,
            Setting::Decades(..) => {}
        }
        let setting = match setting {
            Setting::Scalar(v) if matches!(k.kind, Kind::Choice(_)) => Setting::Scalar(v.to_ascii_lowercase()),
            s => s,
        };
        settings.push((k, setting));
    }
    let lists = settings.iter().filter(|(_, s)| !matches!(s, Setting::Scalar(_))).count();
    if lists > MAX_LISTS {
        return Err(CliError::Usage(format!("at most {MAX_LISTS} list-valued keys per run, got {lists}")));
    }
    let mut cfg = RunConfig {
        spec,
        settings,
        json: m.get_one::<String>("format").map(|s| s == "json").unwrap_or(false),
        out: m.get_one::<String>("out").cloned(),
    };
    complete_scheme(&mut cfg)?;
    Ok(cfg)
}

/// Fills unset scheme constants from the family defaults so the header is complete.
fn complete_scheme(cfg: &mut RunConfig) -> Result<(), CliError> {
    let get = |name: &str| {
        cfg.settings.iter().find(|(k, _)| k.name == name).and_then(|(_, s)| match s {
            Setting::Scalar(v) => Some(v.clone()),
            _ => None,
        })
    };
    let Some(name) = get("scheme") else { return Ok(()) };
    let family = SchemeFamily::parse(&name).map_err(|e| CliError::Usage(e.to_string()))?;
    let target = match get("L") {
        Some(l) => parse_wall(&l).map_err(|e| CliError::Usage(e.to_string()))?,
        None => match family {
            SchemeFamily::S512 => WallParameter::DIRICHLET,
            SchemeFamily::S513 => WallParameter::NEUMANN,
            _ => return Err(CliError::Usage(format!("--L is required for {name}"))),
        },
    };
    let d = RegularizationScheme::with_defaults(family, target);
    let defaults = [("L", target.to_string()), ("c", d.c.to_string()), ("nu", d.nu.to_string()), ("beta0", d.beta0.to_string()), ("c1", d.c1.to_string())];
    let keys = cfg.spec.keys;
    for (name, value) in defaults {
        if cfg.settings.iter().all(|(k, _)| k.name != name) {
            if let Some(k) = keys.iter().find(|k| k.name == name) {
                cfg.settings.push((k, Setting::Scalar(value)));
            }
        }
    }
    let rank = |name: &str| keys.iter().position(|k| k.name == name);
    cfg.settings.sort_by_key(|(k, _)| rank(k.name));
    Ok(())
}

fn points(cfg: &RunConfig) -> Vec<Point> {
    let mut pts = vec![Vec::new()];
    for (k, s) in &cfg.settings {
        let values: Vec<String> = match s {
            Setting::Scalar(v) => vec![v.clone()],
            Setting::List(vs) => vs.clone(),
            Setting::Decades(_, ds) => ds.iter().map(|d| format!("{d:e}")).collect(),
        };
        pts = pts
            .into_iter()
            .flat_map(|p: Vec<(&'static str, String)>| {
                values.iter().map(move |v| {
                    let mut q = p.clone();
                    q.push((k.name, v.clone()));
                    q
                })
            })
            .collect();
    }
    pts.into_iter().map(Point).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Real(f64),
    Text(String),
}

pub type Row = Vec<Cell>;

fn reals(values: &[f64]) -> Row {
    values.iter().map(|&v| Cell::Real(v)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Row>,
}

/// Shortest exact form: 17 significant digits.
pub fn format_real(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        // `+ 0.0` folds −0 into 0
        format!("{:.16e}", v + 0.0)
    }
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Cell::Real(v) => format_real(*v),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Real(v) if v.is_finite() => json!(v),
            other => Value::String(other.text()),
        }
    }
}

/// Evaluates a configuration; rows are computed in parallel and collected in grid order.
pub fn evaluate(cfg: &RunConfig) -> Result<ResultTable, CliError> {
    let pts = points(cfg);
    let columns = (cfg.spec.columns)(&pts[0])?;
    let chunks = pts.par_iter().map(cfg.spec.eval).collect::<Result<Vec<_>, _>>()?;
    let rows: Vec<Row> = chunks.into_iter().flatten().collect();
    debug_assert!(rows.iter().all(|r| r.len() == columns.len()));
    Ok(ResultTable { columns, rows })
}

pub fn render_csv(cfg: &RunConfig, table: &ResultTable) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&table.columns).expect("in-memory write");
    for row in &table.rows {
        w.write_record(row.iter().map(Cell::text)).expect("in-memory write");
    }
    let body = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields");
    format!("# {}\n{body}", cfg.echo())
}

pub fn render_json(cfg: &RunConfig, table: &ResultTable) -> String {
    let records: Vec<Value> = table
        .rows
        .iter()
        .map(|row| Value::Object(table.columns.iter().zip(row).map(|(c, v)| (c.to_string(), v.json())).collect()))
        .collect();
    let doc = json!({
        "config": { "command": cfg.command(), "argv": cfg.echo(), "params": cfg.params_json() },
        "records": records,
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
    s.push('\n');
    s
}

/// Parses argv (including the program name) into a configuration.
pub fn parse(argv: &[String]) -> Result<RunConfig, Result<String, String>> {
    let m = clap_command().try_get_matches_from(argv).map_err(|e| {
        let text = e.render().to_string();
        match e.kind() {
            clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => Ok(text),
            clap::error::ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => Err(text),
            _ => Err(text),
        }
    })?;
    let (name, sub) = m.subcommand().expect("subcommand is required");
    let spec = COMMANDS.iter().find(|c| c.name == name).expect("registered command");
    resolve(spec, sub).map_err(|e| Err(e.to_string()))
}

/// Runs argv and returns the exit code; the table goes to `out` or `--out`.
pub fn run(argv: &[String], out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cfg = match parse(argv) {
        Ok(cfg) => cfg,
        Err(Ok(help)) => {
            let _ = write!(out, "{help}");
            return EXIT_OK;
        }
        Err(Err(msg)) => {
            let _ = writeln!(err, "{}", msg.trim_end());
            return EXIT_USAGE;
        }
    };
    let table = match evaluate(&cfg) {
        Ok(t) => t,
        Err(e) => {
            let _ = writeln!(err, "{e}");
            return e.exit_code();
        }
    };
    let text = if cfg.json { render_json(&cfg, &table) } else { render_csv(&cfg, &table) };
    let written = match &cfg.out {
        Some(path) => std::fs::write(path, text).map_err(|e| format!("cannot write {path}: {e}")),
        None => out.write_all(text.as_bytes()).map_err(|e| format!("cannot write output: {e}")),
    };
    match written {
        Ok(()) => EXIT_OK,
        Err(msg) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
    }
}

fn eval_delay(p: &Point) -> Result<Vec<Row>, CliError> {
    let wall = p.wall("L")?;
    let k0 = p.real("k0")?;
    let delta = phase_shift(k0, wall).map_err(lib("phase_shift"))?;
    let tau = time_delay(k0, wall, &U).map_err(lib("time_delay"))?;
    Ok(vec![vec![Cell::Text(wall.to_string()), Cell::Real(k0), Cell::Real(delta), Cell::Real(tau)]])
}

fn eval_packet(p: &Point) -> Result<Vec<Row>, CliError> {
    let wall = p.wall("L")?;
    let packet = WavePacket::new(p.real("k0")?, p.real("sigma")?, p.real("x0")?, wall, U).map_err(lib("packet"))?;
    let n: usize = p.text("grid-n")?.parse().map_err(|_| CliError::Usage("--grid-n expects a count".into()))?;
    let grid = Grid::half_line(p.real("x-max")?, n).map_err(lib("packet grid"))?;
    let t = p.real("t")?;
    let field = evolve_packet(&packet, t, grid).map_err(lib("evolve_packet"))?;
    Ok(grid
        .points()
        .into_iter()
        .zip(&field.values)
        .map(|(x, v)| reals(&[t, x, v.re, v.im, v.norm_sqr()]))
        .collect())
}

fn eval_kernel(p: &Point) -> Result<Vec<Row>, CliError> {
    let wall = p.wall("L")?;
    let (a, b, t) = (p.real("a")?, p.real("b")?, p.real("T")?);
    let q = KernelQuery::new(a, b, t, wall, U).map_err(lib("kernel"))?;
    let k = match p.text("method")? {
        "spectral" => kernel_spectral(&q, SpectralOptions::default()).map_err(lib("kernel_spectral"))?,
        _ => kernel_closed(&q).map_err(lib("kernel_closed"))?,
    };
    let mut row = vec![Cell::Text(wall.to_string())];
    row.extend(reals(&[a, b, t, k.value.re, k.value.im, k.est_error]));
    Ok(vec![row])
}

fn scheme(p: &Point) -> Result<RegularizationScheme, CliError> {
    let family = SchemeFamily::parse(p.text("scheme")?).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut s = RegularizationScheme::with_defaults(family, p.wall("L")?);
    s.c = p.real("c")?;
    s.nu = p.real("nu")?;
    s.beta0 = p.real("beta0")?;
    s.c1 = p.real("c1")?;
    s.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(s)
}

fn eval_regularize(p: &Point) -> Result<Vec<Row>, CliError> {
    let s = scheme(p)?;
    let (d, e) = (p.real("d-decades")?, p.real("E")?);
    let pot = scheme_potential(&s, d, &U).map_err(lib("scheme_potential"))?;
    let m = match_step(&pot, e, &U).map_err(lib("match_step"))?;
    Ok(vec![reals(&[d, e, m.r, m.inv_r, target_error(s.l_target, &m)])])
}

fn classical_columns(p: &Point) -> Result<Vec<&'static str>, CliError> {
    Ok(match p.text("sub")? {
        "counterpart" => vec!["E", "x0", "tau_classical", "tau_quantum"],
        "invert" => vec!["W", "x", "x_exact"],
        "bound" => vec!["W", "x_closed", "x_quadrature"],
        "weak-potential" => vec!["x", "V"],
        _ => vec!["E", "x0", "tau_formula", "tau_orbit", "tau_limit"],
    })
}

fn eval_classical(p: &Point) -> Result<Vec<Row>, CliError> {
    let l = p.length()?;
    let weak = || WeakRealization::new(l, p.real("c")?).map_err(lib("weak realization"));
    let row = match p.text("sub")? {
        "counterpart" => {
            let (e, x0) = (p.real("E")?, p.real("x0")?);
            let tau = classical_time_delay(&ClassicalPotential::Counterpart { l }, e, x0, &U)
                .map_err(lib("classical_time_delay"))?;
            let quantum = time_delay(U.wavenumber(e), WallParameter::Finite(l), &U).map_err(lib("time_delay"))?;
            reals(&[e, x0, tau, quantum])
        }
        "invert" => {
            let w = p.real("W")?;
            let (profile, x_ref) = if l > 0.0 { (DelayProfile::TauTilde { l }, l) } else { (DelayProfile::QuantumTau { l }, 0.0) };
            let x = abel_invert(&profile, x_ref, w, &U).map_err(lib("abel_invert"))?;
            // both signs: x(W) = L/√(1 + 2mL²W/ħ²)
            let exact = l / (1.0 + w * l * l / U.kinetic()).sqrt();
            reals(&[w, x, exact])
        }
        "bound" => {
            let w = p.real("W")?;
            let b = impossibility_bound(l, w, &U).map_err(lib("impossibility_bound"))?;
            reals(&[w, b.closed, b.quadrature])
        }
        "weak-potential" => {
            let x = p.real("x")?;
            reals(&[x, weak_potential(&weak()?, x, &U).map_err(lib("weak_potential"))?])
        }
        _ => {
            let r = weak()?;
            let (e, x0) = (p.real("E")?, p.real("x0")?);
            let formula = weak_delay_formula(&r, x0, e, &U).map_err(lib("weak_delay_formula"))?;
            let orbit = classical_time_delay(&ClassicalPotential::Weak(r), e, x0, &U).map_err(lib("classical_time_delay"))?;
            let limit = DelayProfile::QuantumTau { l }.eval(e, &U).map_err(lib("time_delay"))?;
            reals(&[e, x0, formula, orbit, limit])
        }
    };
    Ok(vec![row])
}

fn wkb_columns(p: &Point) -> Result<Vec<&'static str>, CliError> {
    Ok(match p.text("sub")? {
        "action" => vec!["a", "b", "T", "E_direct", "S_direct", "E_bounce", "S_bounce", "dS_da", "d2S_dadb", "delta_S"],
        "deltas" => vec!["d", "a", "b", "T", "E_bounce", "S_bounce", "d2S_dadb", "delta_S", "delta_S_limit"],
        "al" => vec!["a", "b", "T", "A_re", "A_im", "A_abs", "A_arg"],
        _ => vec!["a", "b", "T", "wkb_re", "wkb_im", "closed_re", "closed_im"],
    })
}

/// Reflecting potential for `wkb --sub action`: hard wall, counterpart or weak realization.
fn action_potential(p: &Point) -> Result<ClassicalPotential, CliError> {
    let wall = p.wall("L")?;
    Ok(match wall.length() {
        Some(0.0) => ClassicalPotential::HardWall,
        Some(l) if l > 0.0 => ClassicalPotential::Counterpart { l },
        Some(l) => ClassicalPotential::Weak(WeakRealization::new(l, p.opt_real("c")?.unwrap_or(1.0)).map_err(lib("weak realization"))?),
        None => return Err(CliError::Usage("wkb action has no reflecting potential for L = inf".into())),
    })
}

fn eval_wkb(p: &Point) -> Result<Vec<Row>, CliError> {
    let (a, b, t) = (p.real("a")?, p.real("b")?, p.real("T")?);
    let row = match p.text("sub")? {
        "action" => {
            let q = bounce_quantities(&action_potential(p)?, a, b, t, &U).map_err(lib("bounce_quantities"))?;
            reals(&[a, b, t, q.e_direct, q.s_direct, q.e_bounce, q.s_bounce, q.ds_da, q.d2s_dadb, q.delta_s])
        }
        "deltas" => {
            let s = scheme(p)?;
            let d = p.real("d-decades")?;
            let q = step_bounce(&s, d, a, b, t, &U).map_err(lib("step_bounce"))?;
            let limit = delta_s_limit(&s, &U).map_err(lib("delta_s_limit"))?;
            reals(&[d, a, b, t, q.e_bounce, q.s_bounce, q.d2s_dadb, q.delta_s, limit])
        }
        "al" => {
            let dec = extract_AL(p.wall("L")?, a, b, t, &U).map_err(lib("extract_AL"))?;
            reals(&[a, b, t, dec.a_l.re, dec.a_l.im, dec.a_l.norm(), dec.a_l.arg()])
        }
        _ => {
            let wall = p.wall("L")?;
            let w = wkb_kernel(wall, a, b, t, &U).map_err(lib("wkb_kernel"))?;
            let k = kernel_closed(&KernelQuery::new(a, b, t, wall, U).map_err(lib("kernel"))?).map_err(lib("kernel_closed"))?;
            reals(&[a, b, t, w.re, w.im, k.value.re, k.value.im])
        }
    };
    Ok(vec![row])
}
