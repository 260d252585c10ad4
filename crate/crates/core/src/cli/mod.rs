//! Command-line front end. Commands read a flat `key=value` parameter map
//! and produce a table of records, written as NDJSON or CSV, plus an optional
//! JSON summary next to the output file.

pub mod checks;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use clap::Parser;
use serde_json::{json, Value};

use crate::discrete::{
    assemble_operator, fit_growth_exponent, solve_dirichlet, solve_obstacle, Grid1D, ObstacleSolution, Side,
};
use crate::error::{Error, Result};
use crate::evaluate::{apply_extremal, apply_operator, Extremal, QuadConfig};
use crate::exact_solutions::{
    ball_torsion, fundamental_solution, heat_kernel, shifted_halfspace_harmonic, HeatKernel1D,
};
use crate::field::{BumpField, Constant, ExteriorData, ScalarField};
use crate::kernels::Kernel;
use crate::special_math::constants;
use crate::wos::{wos_solve, Domain, WosConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Eval,
    Symbol,
    Wos,
    Solve,
    Obstacle,
    Heat,
    Verify,
}

impl FromStr for Command {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "eval" => Command::Eval,
            "symbol" => Command::Symbol,
            "wos" => Command::Wos,
            "solve" => Command::Solve,
            "obstacle" => Command::Obstacle,
            "heat" => Command::Heat,
            "verify" => Command::Verify,
            other => return Err(Error::Usage(format!("unknown command '{other}'"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(Error::Usage(format!("format must be json or csv, got '{other}'"))),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "fracops", version, about = "Integro-differential operators of order 2s")]
pub struct Cli {
    /// eval, symbol, wos, solve, obstacle, heat or verify
    pub command: String,
    /// Parameters as key=value
    pub params: Vec<String>,
    #[arg(long)]
    pub s: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long = "grid-n")]
    pub grid_n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub format: Option<String>,
    /// File of key=value lines; '#' starts a comment
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub params: BTreeMap<String, String>,
    pub output: Option<PathBuf>,
    pub format: Format,
}

fn parse_kv(item: &str) -> Result<(String, String)> {
    let (k, v) = item
        .split_once('=')
        .ok_or_else(|| Error::Usage(format!("expected key=value, got '{item}'")))?;
    let k = k.trim();
    if k.is_empty() {
        return Err(Error::Usage(format!("empty key in '{item}'")));
    }
    Ok((k.to_string(), v.trim().to_string()))
}

/// Reads `key=value` lines; blank lines and `#` comments are ignored.
pub fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = parse_kv(line)?;
        out.insert(k, v);
    }
    Ok(out)
}

impl RunConfig {
    /// Merges config file, positional parameters and flags, later sources
    /// overriding earlier ones.
    pub fn from_cli(cli: Cli) -> Result<Self> {
        let command = cli.command.parse()?;
        let mut params = match &cli.config {
            Some(path) => parse_config_file(
                &fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?,
            )?,
            None => BTreeMap::new(),
        };
        for item in &cli.params {
            let (k, v) = parse_kv(item)?;
            params.insert(k, v);
        }
        let flags = [
            ("s", cli.s.map(|v| v.to_string())),
            ("n", cli.n.map(|v| v.to_string())),
            ("N", cli.grid_n.map(|v| v.to_string())),
            ("seed", cli.seed.map(|v| v.to_string())),
            ("samples", cli.samples.map(|v| v.to_string())),
            ("tol", cli.tol.map(|v| v.to_string())),
            ("format", cli.format.clone()),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                params.insert(k.to_string(), v);
            }
        }
        let output = cli.out.or_else(|| params.remove("out").map(PathBuf::from));
        let format = match params.remove("format") {
            Some(f) => f.parse()?,
            None => Format::default(),
        };
        Ok(RunConfig {
            command,
            params,
            output,
            format,
        })
    }
}

/// Result of a command: rows in a fixed column order and a summary object.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
    pub summary: Value,
    /// Set by `verify` when some check failed.
    pub failed: bool,
}

impl Report {
    fn new(columns: Vec<&'static str>) -> Self {
        Report {
            columns,
            rows: Vec::new(),
            summary: json!({}),
            failed: false,
        }
    }

    pub fn to_ndjson(&self) -> String {
        let mut out = String::new();
        for row in &self.rows {
            let obj: serde_json::Map<String, Value> =
                self.columns.iter().map(|c| c.to_string()).zip(row.iter().cloned()).collect();
            let _ = writeln!(out, "{}", Value::Object(obj));
        }
        out
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(&self.columns).map_err(io)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| match v {
                Value::String(s) => s.clone(),
                Value::Null => String::new(),
                other => other.to_string(),
            }))
            .map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Json => Ok(self.to_ndjson()),
            Format::Csv => self.to_csv(),
        }
    }
}

/// Typed access to the parameter map that records which keys were read, so
/// unknown keys can be rejected.
struct Params<'a> {
    map: &'a BTreeMap<String, String>,
    used: std::cell::RefCell<Vec<&'a str>>,
}

impl<'a> Params<'a> {
    fn new(map: &'a BTreeMap<String, String>) -> Self {
        Params {
            map,
            used: Default::default(),
        }
    }

    fn raw(&self, key: &str) -> Option<&'a str> {
        let (k, v) = self.map.get_key_value(key)?;
        self.used.borrow_mut().push(k);
        Some(v)
    }

    fn parse<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::Usage(format!("cannot parse {key}={v}"))),
        }
    }

    fn or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.parse(key)?.unwrap_or(default))
    }

    fn required<T: FromStr>(&self, key: &str) -> Result<T> {
        self.parse(key)?
            .ok_or_else(|| Error::Usage(format!("missing required parameter {key}")))
    }

    fn text<'b>(&self, key: &str, default: &'b str) -> &'b str
    where
        'a: 'b,
    {
        self.raw(key).unwrap_or(default)
    }

    /// Marks keys consumed by another parser (such as the kernel builder).
    fn touch(&self, keys: &[&str]) {
        for k in keys {
            let _ = self.raw(k);
        }
    }

    fn finish(&self) -> Result<()> {
        let used = self.used.borrow();
        let unknown: Vec<&str> = self
            .map
            .keys()
            .map(String::as_str)
            .filter(|k| !used.contains(k))
            .collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(Error::Usage(format!("unknown parameter(s): {}", unknown.join(", "))))
        }
    }
}

fn parse_vector(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::Usage(format!("bad coordinate '{v}'")))
        })
        .collect()
}

/// Points separated by `;`, coordinates by `,`.
fn parse_points(text: &str, n: usize) -> Result<Vec<Vec<f64>>> {
    let pts: Vec<Vec<f64>> = text
        .split(';')
        .filter(|p| !p.trim().is_empty())
        .map(parse_vector)
        .collect::<Result<_>>()?;
    if pts.is_empty() {
        return Err(Error::Usage("no points given".into()));
    }
    if let Some(p) = pts.iter().find(|p| p.len() != n) {
        return Err(Error::Usage(format!("point {p:?} does not have {n} coordinates")));
    }
    Ok(pts)
}

fn point_value(x: &[f64]) -> Value {
    if x.len() == 1 {
        json!(x[0])
    } else {
        Value::String(x.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(","))
    }
}

fn unit_e1(n: usize) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[0] = 1.0;
    e
}

/// Named fields: the exact solutions, a bump and constants.
fn field_from(p: &Params, key: &str, default: &str, n: usize, s: f64) -> Result<Arc<dyn ScalarField>> {
    Ok(match p.text(key, default) {
        "ball_torsion" => ball_torsion(n, s)?.field,
        "halfspace" => shifted_halfspace_harmonic(n, s, &unit_e1(n), 0.0)?.field,
        "shifted_halfspace" => shifted_halfspace_harmonic(n, s, &unit_e1(n), p.or("offset", 1.0)?)?.field,
        "fundamental" => fundamental_solution(n, s)?.field,
        "bump" => Arc::new(BumpField::new(n, vec![(1.0, vec![0.0; n], p.or("radius", 1.0)?)])?),
        "zero" => Arc::new(Constant { n, value: 0.0 }),
        "constant" => Arc::new(Constant {
            n,
            value: p.or("value", 1.0)?,
        }),
        other => return Err(Error::Usage(format!("unknown field '{other}'"))),
    })
}

fn quad_config(p: &Params) -> Result<QuadConfig> {
    let mut cfg = QuadConfig::default();
    if let Some(t) = p.parse("tol")? {
        cfg.target_rel_err = t;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn kernel_from(p: &Params) -> Result<Kernel> {
    p.touch(&["variant", "kernel", "atoms", "density", "scale", "lambda", "Lambda"]);
    Kernel::from_params(p.map)
}

fn cmd_eval(p: &Params) -> Result<Report> {
    let n: usize = p.or("n", 1)?;
    let s: f64 = p.required("s")?;
    let u = field_from(p, "field", "ball_torsion", n, s)?;
    let pts = parse_points(p.text("x", "0"), n)?;
    let cfg = quad_config(p)?;
    let extremal = match p.raw("extremal") {
        None => None,
        Some("plus") => Some(Extremal::Plus),
        Some("minus") => Some(Extremal::Minus),
        Some(other) => return Err(Error::Usage(format!("extremal must be plus or minus, got '{other}'"))),
    };
    let mut rep = Report::new(vec!["x", "value", "err_est", "accuracy_met"]);
    if let Some(which) = extremal {
        let lambda = p.or("lambda", 1.0)?;
        let big = p.or("Lambda", lambda)?;
        p.touch(&["variant", "kernel", "density", "scale"]);
        p.finish()?;
        for x in &pts {
            let e = apply_extremal(lambda, big, which, s, &u, x, &cfg)?;
            rep.rows.push(vec![point_value(x), json!(e.value), json!(e.err_est), json!(e.accuracy_met)]);
        }
    } else {
        let kernel = kernel_from(p)?;
        p.finish()?;
        for x in &pts {
            let e = apply_operator(&kernel, &u, x, &cfg)?;
            rep.rows.push(vec![point_value(x), json!(e.value), json!(e.err_est), json!(e.accuracy_met)]);
        }
    }
    rep.summary = json!({ "command": "eval", "points": pts.len(), "s": s, "n": n });
    Ok(rep)
}

fn cmd_symbol(p: &Params) -> Result<Report> {
    let n: usize = p.or("n", 1)?;
    let _: f64 = p.required("s")?;
    let kernel = kernel_from(p)?;
    let xis = parse_points(p.text("xi", "1"), n)?;
    p.finish()?;
    let mut rep = Report::new(vec!["xi", "value", "err_est", "converged"]);
    for xi in &xis {
        let q = kernel.symbol_quad(xi)?;
        rep.rows.push(vec![point_value(xi), json!(q.value), json!(q.err), json!(q.converged)]);
    }
    rep.summary = json!({ "command": "symbol", "points": xis.len() });
    Ok(rep)
}

fn domain_from(p: &Params, n: usize) -> Result<Domain> {
    match p.text("domain", "ball") {
        "ball" => Domain::ball(
            match p.raw("center") {
                Some(c) => parse_vector(c)?,
                None => vec![0.0; n],
            },
            p.or("radius", 1.0)?,
        ),
        "interval" => Domain::interval(p.or("a", -1.0)?, p.or("b", 1.0)?),
        "box" => Domain::cuboid(
            match p.raw("lo") {
                Some(v) => parse_vector(v)?,
                None => vec![-1.0; n],
            },
            match p.raw("hi") {
                Some(v) => parse_vector(v)?,
                None => vec![1.0; n],
            },
        ),
        "halfspace" => Domain::half_space(
            match p.raw("normal") {
                Some(v) => parse_vector(v)?,
                None => unit_e1(n),
            },
            p.or("offset", 0.0)?,
        ),
        other => Err(Error::Usage(format!("unknown domain '{other}'"))),
    }
}

fn cmd_wos(p: &Params) -> Result<Report> {
    let n: usize = p.or("n", 1)?;
    let s: f64 = p.required("s")?;
    let domain = domain_from(p, n)?;
    if domain.dim() != n {
        return Err(Error::Usage(format!("domain dimension {} differs from n = {n}", domain.dim())));
    }
    let g = ExteriorData::new(field_from(p, "g", "shifted_halfspace", n, s)?);
    let pts = parse_points(p.text("x", "0"), n)?;
    let defaults = WosConfig::default();
    let cfg = WosConfig {
        radius_safety: p.or("radius_safety", defaults.radius_safety)?,
        max_steps: p.or("max_steps", defaults.max_steps)?,
        master_seed: p.or("seed", defaults.master_seed)?,
        n_samples: p.or("samples", defaults.n_samples)?,
        n_streams: p.or("streams", defaults.n_streams)?,
    };
    cfg.validate()?;
    p.finish()?;
    let mut rep = Report::new(vec![
        "x",
        "mean",
        "stderr",
        "n_samples",
        "mean_steps",
        "max_steps_hit",
        "bias_warning",
    ]);
    for x in &pts {
        let e = wos_solve(&domain, &g, x, s, &cfg)?;
        rep.rows.push(vec![
            point_value(x),
            json!(e.mean),
            json!(e.stderr),
            json!(e.n_samples),
            json!(e.mean_steps),
            json!(e.max_steps_hit),
            json!(e.bias_warning),
        ]);
    }
    rep.summary = json!({ "command": "wos", "s": s, "n": n, "seed": cfg.master_seed, "samples": cfg.n_samples });
    Ok(rep)
}

fn grid_from(p: &Params) -> Result<Grid1D> {
    Grid1D::new(p.or("a", -1.0)?, p.or("b", 1.0)?, p.or("N", 1023)?)
}

fn cmd_solve(p: &Params) -> Result<Report> {
    let s: f64 = p.required("s")?;
    let grid = grid_from(p)?;
    let rhs = match p.text("f", "one") {
        "one" => 1.0,
        "torsion" => constants(1, s)?.q_ns,
        v => v
            .parse::<f64>()
            .map_err(|_| Error::Usage(format!("f must be one, torsion or a number, got '{v}'")))?,
    };
    let g = ExteriorData::new(field_from(p, "g", "zero", 1, s)?);
    p.finish()?;
    let op = assemble_operator(s, grid)?;
    let f = vec![rhs; grid.n];
    let u = solve_dirichlet(&op, &f, &g)?;
    let au = op.apply(&u.values)?;
    let load = op.exterior_load(&g)?;
    let mut rep = Report::new(vec!["x", "u", "residual"]);
    let mut worst = 0.0f64;
    for i in 0..grid.n {
        let r = (au[i] + load[i] - f[i]).abs();
        worst = worst.max(r);
        rep.rows.push(vec![json!(grid.x(i)), json!(u.values[i]), json!(r)]);
    }
    rep.summary = json!({ "command": "solve", "s": s, "N": grid.n, "h": grid.h(), "max_residual": worst });
    Ok(rep)
}

fn obstacle_summary(sol: &ObstacleSolution, phi: &[f64], window: (usize, usize)) -> Value {
    let fits: Vec<Value> = [Side::Left, Side::Right]
        .into_iter()
        .map(|side| match fit_growth_exponent(sol, phi, side, window.0..window.1) {
            Ok(f) => json!({
                "side": format!("{side:?}").to_lowercase(),
                "exponent": f.exponent,
                "r2": f.r2,
                "x_star": f.x_star,
                "points": f.points,
            }),
            Err(e) => json!({ "side": format!("{side:?}").to_lowercase(), "error": e.to_string() }),
        })
        .collect();
    json!({
        "command": "obstacle",
        "solution": sol,
        "growth_fits": fits,
    })
}

fn cmd_obstacle(p: &Params) -> Result<Report> {
    let s: f64 = p.required("s")?;
    let grid = grid_from(p)?;
    let tol = p.or("tol", 1e-8)?;
    let height: f64 = p.or("height", 0.5)?;
    let phi = match p.text("phi", "quadratic") {
        "quadratic" => grid.sample(|x| height - x * x),
        "bump" => grid.sample(|x| if x.abs() < 1.0 { height * (1.0 - x * x).powi(2) } else { 0.0 } - 0.1),
        other => return Err(Error::Usage(format!("unknown obstacle '{other}'"))),
    };
    let lo = p.or("window_lo", 2usize)?;
    let hi = p.or("window_hi", (grid.n / 16).max(lo + 6))?;
    p.finish()?;
    let op = assemble_operator(s, grid)?;
    let zero = ExteriorData::constant(1, 0.0);
    let sol = solve_obstacle(&op, &phi, &zero, tol)?;
    let mut rep = Report::new(vec!["x", "v", "phi", "operator_value", "contact", "residual"]);
    for i in 0..grid.n {
        let gap = sol.v.values[i] - phi[i];
        let r = sol.operator_values[i].min(gap).abs();
        rep.rows.push(vec![
            json!(grid.x(i)),
            json!(sol.v.values[i]),
            json!(phi[i]),
            json!(sol.operator_values[i]),
            json!(sol.contact_set.binary_search(&i).is_ok()),
            json!(r),
        ]);
    }
    let mut summary = obstacle_summary(&sol, &phi, (lo, hi));
    summary["s"] = json!(s);
    summary["N"] = json!(grid.n);
    rep.summary = summary;
    Ok(rep)
}

fn cmd_heat(p: &Params) -> Result<Report> {
    let s: f64 = p.required("s")?;
    let t: f64 = p.or("t", 1.0)?;
    let xs: Vec<f64> = match p.raw("x") {
        Some(list) => parse_points(list, 1)?.into_iter().map(|v| v[0]).collect(),
        None => {
            let lo: f64 = p.or("xmin", -5.0)?;
            let hi: f64 = p.or("xmax", 5.0)?;
            let m: usize = p.or("points", 101)?;
            if m < 2 || !(hi > lo) {
                return Err(Error::Usage("need points >= 2 and xmax > xmin".into()));
            }
            (0..m).map(|i| lo + (hi - lo) * i as f64 / (m - 1) as f64).collect()
        }
    };
    p.finish()?;
    if !(t > 0.0) {
        return Err(Error::Domain(format!("time t = {t} must be positive")));
    }
    // the closed form at s = 1/2 is exact; elsewhere the table's mass
    // defect bounds the inversion error in L¹
    let mass_defect = if s == 0.5 {
        0.0
    } else {
        (HeatKernel1D::new(s)?.total_mass() - 1.0).abs()
    };
    let mut rep = Report::new(vec!["x", "p", "err_est"]);
    for &x in &xs {
        let v = heat_kernel(1, s, t, &[x])?;
        rep.rows.push(vec![json!(x), json!(v), json!(mass_defect * v.abs().max(f64::EPSILON))]);
    }
    rep.summary = json!({ "command": "heat", "s": s, "t": t, "mass_defect": mass_defect });
    Ok(rep)
}

fn cmd_verify(p: &Params) -> Result<Report> {
    let seed: u64 = p.or("seed", 1)?;
    let only: Option<Vec<usize>> = match p.raw("checks") {
        None => None,
        Some(list) => Some(
            list.split(',')
                .map(|v| match v.trim().parse::<usize>() {
                    Ok(k) if (1..=checks::CHECKS.len()).contains(&k) => Ok(k - 1),
                    _ => Err(Error::Usage(format!("check number '{v}' out of range"))),
                })
                .collect::<Result<_>>()?,
        ),
    };
    p.finish()?;
    let indices = only.unwrap_or_else(|| (0..checks::CHECKS.len()).collect());
    let mut rep = Report::new(vec!["criterion", "name", "passed", "measured", "tolerance", "detail"]);
    let mut names = Vec::new();
    for i in indices {
        let r = checks::run_check(i, seed);
        rep.failed |= !r.passed;
        names.push(json!({ "name": r.name, "passed": r.passed }));
        rep.rows.push(vec![
            json!(i + 1),
            json!(r.name),
            json!(r.passed),
            json!(r.measured),
            json!(r.tolerance),
            json!(r.detail),
        ]);
    }
    rep.summary = json!({ "command": "verify", "seed": seed, "checks": names, "all_passed": !rep.failed });
    Ok(rep)
}

/// Runs a command and returns its report without writing anything.
pub fn run(cfg: &RunConfig) -> Result<Report> {
    let p = Params::new(&cfg.params);
    match cfg.command {
        Command::Eval => cmd_eval(&p),
        Command::Symbol => cmd_symbol(&p),
        Command::Wos => cmd_wos(&p),
        Command::Solve => cmd_solve(&p),
        Command::Obstacle => cmd_obstacle(&p),
        Command::Heat => cmd_heat(&p),
        Command::Verify => cmd_verify(&p),
    }
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;

/// Exit code for an error: numerical failures are 2, everything else 1.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NumericalFailure { .. } | Error::NonConvergence { .. } | Error::WindowTooSmall { .. } => EXIT_NUMERICAL,
        _ => EXIT_USAGE,
    }
}

/// Machine-readable description of an error.
pub fn diagnostic(e: &Error) -> Value {
    let mut d = json!({ "error": e.to_string(), "exit_code": exit_code(e) });
    match e {
        Error::NumericalFailure { what, achieved } => {
            d["stage"] = json!(what);
            d["achieved"] = json!(achieved);
        }
        Error::NonConvergence { iterations, residual } => {
            d["iterations"] = json!(iterations);
            d["residual"] = json!(residual);
        }
        Error::WindowTooSmall { points } => d["points"] = json!(points),
        _ => {}
    }
    d
}

fn summary_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".summary.json");
    PathBuf::from(name)
}

/// Runs a command, writes its table to `--out` (or `stdout`) and its summary
/// next to the output file, and returns the process exit code. Errors are
/// reported on `stderr`.
pub fn execute(cfg: &RunConfig, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let written = run(cfg).and_then(|rep| {
        let table = rep.render(cfg.format)?;
        match &cfg.output {
            Some(path) => {
                fs::write(path, &table).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
                let summary = serde_json::to_string_pretty(&rep.summary).map_err(|e| Error::Io(e.to_string()))?;
                fs::write(summary_path(path), summary + "\n")?;
            }
            None => stdout.write_all(table.as_bytes())?,
        }
        Ok(rep.failed)
    });
    match written {
        Ok(false) => EXIT_OK,
        Ok(true) => EXIT_VERIFY,
        Err(e) => {
            let code = exit_code(&e);
            if code == EXIT_NUMERICAL {
                let _ = writeln!(stderr, "{}", diagnostic(&e));
            } else {
                let _ = writeln!(stderr, "fracops: {e}");
            }
            code
        }
    }
}
