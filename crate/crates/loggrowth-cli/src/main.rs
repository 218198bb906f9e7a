mod config;

use std::io::Write;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use serde::Deserialize;
use serde_json::{json, Value};

use loggrowth::frobeq::{self, Classification, FrobeqConfig};
use loggrowth::nabla::{self, DifferentialModule, FiltrationConfig, FrobeniusData};
use loggrowth::ore::{self, TwistedPoly};
use loggrowth::padics::{PadicContext, PadicScalar, ResidueField};
use loggrowth::rat::{self, Q};
use loggrowth::series::{LaurentSeries, LogSeries, LogSeriesJson, SeriesJson};
use loggrowth::sigma_mod::{self, BaseRing, DiagonalSigmaModule};
use loggrowth::valuations_np;

use config::{ConfigFlags, RunConfig};

#[derive(Debug)]
pub enum CliError {
    Schema(String),
    Infeasible(String),
    Math(String),
}

impl CliError {
    pub fn schema_at(path: &str, e: &serde_json::Error) -> Self {
        CliError::Schema(format!("{path}:{}:{}: {e}", e.line(), e.column()))
    }

    fn code(&self) -> u8 {
        match self {
            CliError::Schema(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Math(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Schema(m) => write!(f, "schema error: {m}"),
            CliError::Infeasible(m) => write!(f, "infeasible configuration: {m}"),
            CliError::Math(m) => write!(f, "math error: {m}"),
        }
    }
}

fn math<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Math(e.to_string())
}

#[derive(Parser, Debug)]
#[command(name = "loggrowth", version, about = "p-adic series, Frobenius equations and log-growth filtrations")]
struct Cli {
    #[command(flatten)]
    flags: ConfigFlags,
    /// Write the JSON report here instead of stdout
    #[arg(long, global = true)]
    out: Option<String>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Newton polygon of a Laurent series on the annulus of inner radius exponent r
    Np {
        #[arg(long)]
        series: String,
        #[arg(short, long, default_value = "1")]
        r: String,
        /// Write polygon vertices as x,y rows
        #[arg(long)]
        csv: Option<String>,
    },
    /// Twisted polynomials in the Frobenius
    Ore {
        #[command(subcommand)]
        cmd: OreCmd,
    },
    /// Kedlaya annihilator of a vector in a diagonal module
    Kedlaya {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        slopes: Vec<String>,
        /// JSON array of series; omit to search for a generic cyclic vector
        #[arg(long)]
        vector: Option<String>,
        /// Restrict coordinates and perturbations to constants
        #[arg(long)]
        constants: bool,
    },
    /// Power-series solution of f(sigma) y = 0 (or = -forcing)
    Frobsolve {
        #[arg(long)]
        f: String,
        /// Constant term y(0), a rational
        #[arg(long, default_value = "1", allow_hyphen_values = true)]
        init: String,
        #[arg(long)]
        forcing: Option<String>,
    },
    /// Classify the log-growth of a solution of f(sigma) y = 0
    Classify {
        #[arg(long)]
        f: String,
        #[arg(long)]
        y: String,
    },
    /// Gauss-norm ladder of a log series
    Ladder {
        #[arg(long)]
        y: String,
        /// Write the ladder as m,r,exponent,certified rows
        #[arg(long)]
        csv: Option<String>,
    },
    /// Differential modules with Frobenius structure
    Ode {
        #[command(subcommand)]
        cmd: OdeCmd,
    },
}

#[derive(Subcommand, Debug)]
enum OreCmd {
    /// Product a * b
    Mul {
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
    },
    /// Twisted Newton polygon and slopes
    Np {
        #[arg(long)]
        f: String,
    },
    /// Check that every coefficient point lies on the polygon
    Star {
        #[arg(long)]
        f: String,
    },
    /// Product of linear factors with the given slopes
    Factors {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        slopes: Vec<String>,
        /// Use constant factors sigma - q^s
        #[arg(long)]
        constant: bool,
    },
}

#[derive(clap::Args, Debug, Clone)]
struct ModuleSource {
    /// Module JSON {"G": ..., "F": ..., "log": ...}
    #[arg(long)]
    module: Option<String>,
    /// Hypergeometric equation recentered at the Teichmuller lift of this residue (index into
    /// the residue field, or a comma list of coordinates)
    #[arg(long, allow_hyphen_values = true)]
    hypergeometric: Option<String>,
}

#[derive(Subcommand, Debug)]
enum OdeCmd {
    /// Fundamental system of solution functionals
    Solve {
        #[command(flatten)]
        src: ModuleSource,
    },
    /// Special log-growth filtration breaks
    Filtration {
        #[command(flatten)]
        src: ModuleSource,
        /// Human-readable table instead of JSON
        #[arg(long)]
        table: bool,
    },
    /// Compare log-growth and Frobenius slope filtrations
    Compare {
        #[command(flatten)]
        src: ModuleSource,
        #[arg(long)]
        table: bool,
    },
    /// Frobenius slopes on horizontal sections
    Slopes {
        #[command(flatten)]
        src: ModuleSource,
    },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ModuleJson {
    #[serde(rename = "G")]
    g: Vec<Vec<SeriesJson>>,
    #[serde(rename = "F", default)]
    f: Option<Vec<Vec<SeriesJson>>>,
    #[serde(default)]
    log: bool,
}

/// Report plus a flag for results that should end in a nonzero exit.
struct Outcome {
    report: Value,
    text: Option<String>,
    failed: bool,
}

impl Outcome {
    fn ok(report: Value) -> Self {
        Outcome { report, text: None, failed: false }
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &str) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Schema(format!("{path}: {e}")))?;
    serde_json::from_str(&text).map_err(|e| CliError::schema_at(path, &e))
}

fn read_series(ctx: &Arc<PadicContext>, path: &str) -> Result<LaurentSeries, CliError> {
    let js: SeriesJson = read_json(path)?;
    LaurentSeries::from_json(ctx, &js).map_err(|e| CliError::Schema(format!("{path}: {e}")))
}

fn read_log_series(ctx: &Arc<PadicContext>, path: &str) -> Result<LogSeries, CliError> {
    let js: LogSeriesJson = read_json(path)?;
    LogSeries::from_json(ctx, &js).map_err(|e| CliError::Schema(format!("{path}: {e}")))
}

fn read_twisted(ctx: &Arc<PadicContext>, path: &str) -> Result<TwistedPoly, CliError> {
    let js: Vec<SeriesJson> = read_json(path)?;
    TwistedPoly::from_json(ctx, &js).map_err(|e| CliError::Schema(format!("{path}: {e}")))
}

fn parse_rationals(xs: &[String]) -> Result<Vec<Q>, CliError> {
    xs.iter()
        .map(|s| rat::parse_q(s.trim()).ok_or_else(|| CliError::Schema(format!("`{s}` is not a rational"))))
        .collect()
}

fn q_pairs(xs: &[(Q, Q)]) -> Value {
    Value::Array(xs.iter().map(|(a, b)| json!([rat::fmt_q(a), rat::fmt_q(b)])).collect())
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report types serialize")
}

/// Rounds every float to 12 significant digits.
fn round_floats(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap();
            let r: f64 = format!("{x:.11e}").parse().unwrap_or(x);
            serde_json::Number::from_f64(r).map(Value::Number).unwrap_or(Value::Null)
        }
        Value::Array(xs) => Value::Array(xs.into_iter().map(round_floats).collect()),
        Value::Object(m) => Value::Object(m.into_iter().map(|(k, v)| (k, round_floats(v))).collect()),
        other => other,
    }
}

fn context(cfg: &RunConfig) -> Result<Arc<PadicContext>, CliError> {
    PadicContext::with_degree(cfg.p, cfg.h, cfg.degree, cfg.prec).map_err(|e| CliError::Infeasible(e.to_string()))
}

fn frobeq_config(cfg: &RunConfig) -> Result<FrobeqConfig, CliError> {
    Ok(FrobeqConfig { r0: cfg.r0()?, depth: cfg.depth, tau: cfg.tau, max_den: cfg.max_den, ..FrobeqConfig::default() })
}

/// Number of coefficients known in every component, `None` when exact.
fn known_order(y: &LogSeries) -> Option<usize> {
    y.components()
        .iter()
        .filter(|c| !c.above().is_exact())
        .map(|c| (c.hi() + 1).max(0) as usize)
        .min()
}

fn check_depth(cfg: &RunConfig, y: &LogSeries) -> Result<(), CliError> {
    let Some(t) = known_order(y) else { return Ok(()) };
    let r0 = cfg.r0()?;
    match frobeq::feasible_depth(t, &r0, cfg.q()) {
        Some(m) if m >= cfg.depth => {
            eprintln!("feasible depth for T = {t}: M = {m}");
            Ok(())
        }
        m => Err(CliError::Infeasible(format!(
            "depth {} needs T >= 2 q^M / r0, but T = {t} supports M = {}",
            cfg.depth,
            m.map_or("none".to_string(), |m| m.to_string())
        ))),
    }
}

fn run_np(cfg: &RunConfig, series: &str, r: &str, csv: Option<&str>) -> Result<Outcome, CliError> {
    let ctx = context(cfg)?;
    let f = read_series(&ctx, series)?;
    let r = rat::parse_q(r).ok_or_else(|| CliError::Schema(format!("`{r}` is not a rational")))?;
    let np = valuations_np::newton_polygon_ring(&f, &r).map_err(math)?;
    if let Some(path) = csv {
        let mut out = String::from("x,y\n");
        for (x, y) in &np.vertices {
            out.push_str(&format!("{},{}\n", rat::fmt_q(x), rat::fmt_q(y)));
        }
        write_file(path, &out)?;
    }
    Ok(Outcome::ok(json!({
        "polygon": to_value(&np.to_json()),
        "slopes": q_pairs(&valuations_np::ring_slopes(&np)),
    })))
}

fn run_ore(cfg: &RunConfig, cmd: &OreCmd) -> Result<Outcome, CliError> {
    let ctx = context(cfg)?;
    match cmd {
        OreCmd::Mul { a, b } => {
            let prod = read_twisted(&ctx, a)?.ore_mul(&read_twisted(&ctx, b)?).map_err(math)?;
            Ok(Outcome::ok(to_value(&prod.to_json())))
        }
        OreCmd::Np { f } => {
            let np = ore::newton_polygon_twisted(&read_twisted(&ctx, f)?).map_err(math)?;
            Ok(Outcome::ok(json!({ "polygon": to_value(&np.to_json()), "slopes": q_pairs(&ore::module_slopes(&np)) })))
        }
        OreCmd::Star { f } => {
            let rep = ore::check_condition_star(&read_twisted(&ctx, f)?).map_err(math)?;
            let failed = !rep.satisfied;
            Ok(Outcome { report: to_value(&rep.to_json()), text: None, failed })
        }
        OreCmd::Factors { slopes, constant } => {
            let s = parse_rationals(slopes)?;
            let f = if *constant { ore::from_constant_slope_factors(&ctx, &s) } else { ore::from_slope_factors(&ctx, &s) }
                .map_err(math)?;
            Ok(Outcome::ok(to_value(&f.to_json())))
        }
    }
}

fn run_kedlaya(cfg: &RunConfig, slopes: &[String], vector: Option<&str>, constants: bool) -> Result<Outcome, CliError> {
    let ctx = context(cfg)?;
    let s = parse_rationals(slopes)?;
    let base = if constants { BaseRing::Constants } else { BaseRing::Laurent };
    let m = DiagonalSigmaModule::new(&ctx, s.clone(), base).map_err(math)?;
    let (trace, retry) = match vector {
        Some(path) => {
            let js: Vec<SeriesJson> = read_json(path)?;
            let v: Vec<LaurentSeries> = js
                .iter()
                .map(|j| LaurentSeries::from_json(&ctx, j))
                .collect::<Result<_, _>>()
                .map_err(|e| CliError::Schema(format!("{path}: {e}")))?;
            (sigma_mod::kedlaya_annihilator(&m, &v).map_err(math)?, None)
        }
        None => match sigma_mod::find_generic_cyclic(&m, cfg.budget, cfg.seed) {
            Ok(found) => (found.trace, Some(found.retry)),
            Err(fail) => {
                return Ok(Outcome {
                    report: json!({
                        "found": false,
                        "attempts": fail.attempts,
                        "outcomes": fail.outcomes,
                    }),
                    text: None,
                    failed: true,
                })
            }
        },
    };
    let cyclic = sigma_mod::is_cyclic(&trace).ok();
    let generic = if cyclic == Some(true) { sigma_mod::is_generic_cyclic(&trace, &s, ctx.h()).ok() } else { Some(false) };
    Ok(Outcome::ok(json!({
        "trace": to_value(&trace.to_json()),
        "cyclic": cyclic,
        "generic": generic,
        "retry": retry,
    })))
}

fn run_frobsolve(cfg: &RunConfig, f: &str, init: &str, forcing: Option<&str>) -> Result<Outcome, CliError> {
    let ctx = context(cfg)?;
    let f = read_twisted(&ctx, f)?;
    let init = rat::parse_q(init).ok_or_else(|| CliError::Schema(format!("`{init}` is not a rational")))?;
    let forcing = forcing.map(|p| read_series(&ctx, p)).transpose()?;
    let sol = frobeq::solve_fixed_point(&f, &PadicScalar::from_q(&ctx, &init), cfg.order, forcing.as_ref()).map_err(math)?;
    let verified = forcing.is_some() || frobeq::verify_solution(&f, &sol.y, cfg.order);
    eprintln!(
        "feasible depth for T = {}: M = {}",
        cfg.order,
        frobeq::feasible_depth(cfg.order, &cfg.r0()?, cfg.q()).map_or("none".to_string(), |m| m.to_string())
    );
    Ok(Outcome::ok(json!({
        "y": to_value(&sol.y.to_json()),
        "tail": format!("{:?}", sol.tail),
        "verified": verified,
    })))
}

fn run_classify(cfg: &RunConfig, f: &str, y: &str) -> Result<Outcome, CliError> {
    let ctx = context(cfg)?;
    let f = read_twisted(&ctx, f)?;
    let y = read_log_series(&ctx, y)?;
    check_depth(cfg, &y)?;
    let rep = frobeq::classify_log_growth(&f, &y, &frobeq_config(cfg)?).map_err(math)?;
    let failed = rep.classification == Classification::Unclassified;
    Ok(Outcome { report: to_value(&rep), text: None, failed })
}

fn run_ladder(cfg: &RunConfig, y: &str, csv: Option<&str>) -> Result<Outcome, CliError> {
    let ctx = context(cfg)?;
    let y = read_log_series(&ctx, y)?;
    check_depth(cfg, &y)?;
    let prof = frobeq::ladder_profile(&y, &cfg.r0()?, cfg.depth);
    if let Some(path) = csv {
        let mut out = String::from("m,r,exponent,certified\n");
        for e in &prof.entries {
            out.push_str(&format!("{},{},{:.11e},{}\n", e.m, rat::fmt_q(&e.r), e.exponent, e.certified));
        }
        write_file(path, &out)?;
    }
    Ok(Outcome::ok(to_value(&prof)))
}

/// Either an explicit module or a hypergeometric disc, which also carries its scalar equation.
enum Source {
    Module(DifferentialModule),
    Scalar { ode: nabla::PolyOde, module: DifferentialModule, residue: Vec<u64>, ordinary: bool, trace: i64 },
}

impl Source {
    fn module(&self) -> &DifferentialModule {
        match self {
            Source::Module(m) => m,
            Source::Scalar { module, .. } => module,
        }
    }

    fn solve(&self, order: usize) -> Result<nabla::SolutionBasis, CliError> {
        match self {
            Source::Module(m) => nabla::solve_fundamental(m, order).map_err(math),
            Source::Scalar { ode, .. } => ode.solve(order).map_err(math),
        }
    }

    fn describe(&self) -> Value {
        match self {
            Source::Module(m) => json!({ "rank": m.rank(), "log": m.log }),
            Source::Scalar { residue, ordinary, trace, .. } => {
                json!({ "rank": 2, "hypergeometric_residue": residue, "ordinary": ordinary, "frobenius_trace": trace })
            }
        }
    }
}

fn load_source(cfg: &RunConfig, src: &ModuleSource) -> Result<Source, CliError> {
    let ctx = context(cfg)?;
    match (&src.module, &src.hypergeometric) {
        (Some(path), None) => {
            let js: ModuleJson = read_json(path)?;
            let conv = |rows: &[Vec<SeriesJson>]| -> Result<Vec<Vec<LaurentSeries>>, CliError> {
                rows.iter()
                    .map(|r| r.iter().map(|s| LaurentSeries::from_json(&ctx, s)).collect::<Result<Vec<_>, _>>())
                    .collect::<Result<_, _>>()
                    .map_err(|e| CliError::Schema(format!("{path}: {e}")))
            };
            let g = conv(&js.g)?;
            let mut m = DifferentialModule::new(&ctx, g, js.log).map_err(|e| match e {
                nabla::NablaError::Shape => CliError::Schema(format!("{path}: {e}")),
                e => math(e),
            })?;
            if let Some(f) = &js.f {
                let f = conv(f)?;
                if f.len() != m.rank() || f.iter().any(|r| r.len() != m.rank()) {
                    return Err(CliError::Schema(format!("{path}: F must have the shape of G")));
                }
                m = m.with_frobenius(FrobeniusData::Matrix(f));
            }
            Ok(Source::Module(m))
        }
        (None, Some(which)) => {
            let field = ResidueField::from_context(&ctx);
            let residue: Vec<u64> = if which.contains(',') {
                let mut v = which
                    .split(',')
                    .map(|s| s.trim().parse::<u64>().map_err(|e| CliError::Schema(format!("residue `{which}`: {e}"))))
                    .collect::<Result<Vec<_>, _>>()?;
                v.resize(field.degree(), 0);
                v
            } else {
                let k: u64 = which.parse().map_err(|e| CliError::Schema(format!("residue `{which}`: {e}")))?;
                if k >= field.size() {
                    return Err(CliError::Schema(format!("residue index {k} exceeds the field size {}", field.size())));
                }
                field.element(k)
            };
            let disc = nabla::hypergeometric::disc(&ctx, &residue).map_err(math)?;
            let module = disc.ode.to_module(8).map_err(math)?.with_frobenius(disc.frobenius.clone());
            Ok(Source::Scalar { ode: disc.ode, module, residue, ordinary: disc.ordinary, trace: disc.trace })
        }
        _ => Err(CliError::Schema("give exactly one of --module and --hypergeometric".into())),
    }
}

fn filtration_table(rep: &nabla::FiltrationReport) -> String {
    let mut s = String::from("break     mult  dim Sol  dim Sol-  dim V\n");
    for ((lam, mult), d) in rep.breaks.iter().zip(&rep.right_continuity) {
        s.push_str(&format!(
            "{:<9} {:<5} {:<8} {:<9} {}\n",
            rat::fmt_q(lam),
            mult,
            d.sol_dim,
            d.sol_dim_below,
            d.v_dim
        ));
    }
    s.push_str(&format!("effective precision: {} digits\n", rep.effective_precision));
    if rep.ambiguous {
        s.push_str("warning: estimates within tolerance snap to different rationals\n");
    }
    s
}

fn filtration_cfg(cfg: &RunConfig) -> FiltrationConfig {
    FiltrationConfig { max_den: cfg.max_den, tau: cfg.tau, ..FiltrationConfig::default() }
}

fn run_ode(cfg: &RunConfig, cmd: &OdeCmd) -> Result<Outcome, CliError> {
    match cmd {
        OdeCmd::Solve { src } => {
            let s = load_source(cfg, src)?;
            let sol = s.solve(cfg.order)?;
            let rows: Vec<Value> =
                sol.rows.iter().map(|r| Value::Array(r.iter().map(|y| to_value(&y.to_json())).collect())).collect();
            let residual = match &s {
                Source::Module(m) => Some(nabla::residual_vanishes(m, &sol).map_err(math)?),
                Source::Scalar { .. } => None,
            };
            Ok(Outcome::ok(json!({
                "module": s.describe(),
                "order": sol.order,
                "effective_precision": sol.effective_precision,
                "residual_vanishes": residual,
                "rows": rows,
            })))
        }
        OdeCmd::Filtration { src, table } => {
            let s = load_source(cfg, src)?;
            let rep = nabla::special_filtration(&s.solve(cfg.order)?, &filtration_cfg(cfg)).map_err(math)?;
            let text = table.then(|| filtration_table(&rep));
            let mut report = to_value(&rep);
            report["module"] = s.describe();
            Ok(Outcome { report, text, failed: rep.ambiguous })
        }
        OdeCmd::Compare { src, table } => {
            let s = load_source(cfg, src)?;
            let m = s.module();
            let mut rep = nabla::special_filtration(&s.solve(cfg.order)?, &filtration_cfg(cfg)).map_err(math)?;
            let slopes = nabla::special_frobenius_slopes(m, 16).map_err(math)?;
            let lmax = nabla::lambda_max(m, cfg.budget, cfg.seed).map_err(math)?;
            let cmp = nabla::compare_filtrations(&rep, &slopes, &lmax);
            let failed = !cmp.containment_holds || rep.ambiguous;
            let text = table.then(|| {
                let mut t = filtration_table(&rep);
                t.push_str(&format!("lambda_max = {}\nlambda     dim V  dim S-perp  status\n", rat::fmt_q(&lmax)));
                for r in &cmp.rows {
                    t.push_str(&format!("{:<10} {:<6} {:<11} {:?}\n", rat::fmt_q(&r.lambda), r.lhs, r.rhs, r.status));
                }
                t
            });
            rep.comparison = Some(cmp);
            let mut report = to_value(&rep);
            report["module"] = s.describe();
            Ok(Outcome { report, text, failed })
        }
        OdeCmd::Slopes { src } => {
            let s = load_source(cfg, src)?;
            let slopes = nabla::special_frobenius_slopes(s.module(), 16).map_err(math)?;
            Ok(Outcome::ok(json!({ "module": s.describe(), "slopes": q_pairs(&slopes) })))
        }
    }
}

fn write_file(path: &str, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Schema(format!("cannot write {path}: {e}")))
}

fn dispatch(cli: &Cli) -> Result<Outcome, CliError> {
    let cfg = RunConfig::resolve(&cli.flags)?;
    match &cli.cmd {
        Command::Np { series, r, csv } => run_np(&cfg, series, r, csv.as_deref()),
        Command::Ore { cmd } => run_ore(&cfg, cmd),
        Command::Kedlaya { slopes, vector, constants } => run_kedlaya(&cfg, slopes, vector.as_deref(), *constants),
        Command::Frobsolve { f, init, forcing } => run_frobsolve(&cfg, f, init, forcing.as_deref()),
        Command::Classify { f, y } => run_classify(&cfg, f, y),
        Command::Ladder { y, csv } => run_ladder(&cfg, y, csv.as_deref()),
        Command::Ode { cmd } => run_ode(&cfg, cmd),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(outcome) => {
            let body = match &outcome.text {
                Some(t) => t.clone(),
                None => {
                    let mut s = serde_json::to_string_pretty(&round_floats(outcome.report)).expect("JSON output");
                    s.push('\n');
                    s
                }
            };
            let written = match &cli.out {
                Some(path) => write_file(path, &body),
                None => std::io::stdout().write_all(body.as_bytes()).map_err(|e| CliError::Schema(e.to_string())),
            };
            if let Err(e) = written {
                eprintln!("{e}");
                return ExitCode::from(e.code());
            }
            if outcome.failed {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.code())
        }
    }
}
