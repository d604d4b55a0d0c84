//! Command-line front end: configuration, dispatch, artifact emission and
//! re-verification.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::analytic::{self, AnalyticConfig, AnalyticParametrization};
use crate::approx::{self, Approximation, Score, SetInput, SweepRow};
use crate::bivar::BivarPoly;
use crate::bp::{self, HypersurfaceCover, KappaVariant, RationalPoint, TrialSummary};
use crate::chart::DEFAULT_GRID;
use crate::ck::{self, CkConfig, CkParametrization, CkTarget};
use crate::entropy::{self, DynSystem, EntropyReport};
use crate::error::{Error, Result};
use crate::expr::{Expr, FunctionExpr, MAX_ORDER};
use crate::rational::{qi, Q};
use crate::remez::{self, RemezQuery, RemezReport, ZSpec, UNIT_BOX};

pub const SCHEMA_VERSION: u32 = 1;
/// Environment variable naming a default configuration file.
pub const CONFIG_ENV: &str = "SMOOTHPARAM_CONFIG";
/// Significant digits kept for floats in emitted JSON.
pub const FLOAT_DIGITS: usize = 12;

#[derive(Parser, Debug)]
#[command(name = "smoothparam", version, about = "Smooth and analytic parametrization toolkit")]
pub struct Cli {
    /// TOML configuration file (default: $SMOOTHPARAM_CONFIG).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Maximum worker count.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// C^k charts for a function or slab.
    ParametrizeCk(Knobs),
    /// Analytic charts away from a delta-neighbourhood of the singularities.
    ParametrizeAnalytic(Knobs),
    /// Piecewise-polynomial approximation of a planar set.
    Approximate(Knobs),
    /// Rational points on a graph and the hypersurface cover.
    CountPoints(Knobs),
    /// Empirical norming constant of a curve sample.
    Remez(Knobs),
    /// Covering numbers and entropy estimates.
    Entropy(Knobs),
    /// Re-check a previously emitted artifact.
    Verify {
        path: PathBuf,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::ParametrizeCk(_) => "parametrize-ck",
            Command::ParametrizeAnalytic(_) => "parametrize-analytic",
            Command::Approximate(_) => "approximate",
            Command::CountPoints(_) => "count-points",
            Command::Remez(_) => "remez",
            Command::Entropy(_) => "entropy",
            Command::Verify { .. } => "verify",
        }
    }
}

/// Every tunable. The same struct is read from TOML and from flags; flags win.
#[derive(Args, Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct Knobs {
    /// JSON input spec.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Built-in input: hyperbola, hyperbola-slab, parabola, cubic, chebyshev, or a system name.
    #[arg(long)]
    pub builtin: Option<String>,
    /// Smoothness order.
    #[arg(long)]
    pub k: Option<usize>,
    /// Radius removed around each singular projection.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Target accuracy, or the curve parameter for built-in families.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Comma-separated sweep values.
    #[arg(long, value_delimiter = ',')]
    pub eps_list: Option<Vec<f64>>,
    /// Exponent of the C^k complexity law.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Corner size of the built-in hyperbola set.
    #[arg(long)]
    pub a: Option<f64>,
    /// ck or analytic.
    #[arg(long)]
    pub route: Option<String>,
    /// Height bound for rational points.
    #[arg(long)]
    pub t: Option<u64>,
    /// Sweep `t = 1..=t_max`.
    #[arg(long)]
    pub t_max: Option<u64>,
    /// Degree of the Taylor patches or of the covering curves.
    #[arg(long)]
    pub d: Option<u32>,
    /// Degree of the test polynomials.
    #[arg(long)]
    pub d1: Option<u32>,
    /// Curve sample size.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Scan lines used to locate the curve.
    #[arg(long)]
    pub scan: Option<usize>,
    /// Grid resolution (points per axis).
    #[arg(long)]
    pub grid: Option<usize>,
    /// Largest iterate.
    #[arg(long)]
    pub n_max: Option<usize>,
    /// Dynamical system: identity, doubling, logistic, cat.
    #[arg(long)]
    pub system: Option<String>,
    #[arg(long)]
    pub kappa_variant: Option<KappaVariant>,
    /// Randomized determinant-bound trials run alongside count-points.
    #[arg(long)]
    pub trials: Option<usize>,
    /// RNG seed for randomized suites.
    #[arg(long)]
    pub seed: Option<u64>,
    /// JSON artifact path (default: stdout).
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// CSV table path.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(skip)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
}

impl Knobs {
    /// Field-wise `self` over `base`.
    pub fn or(self, base: Knobs) -> Knobs {
        macro_rules! pick {
            ($($f:ident),*) => { Knobs { $($f: self.$f.or(base.$f)),* } };
        }
        pick!(
            input, builtin, k, delta, eps, eps_list, sigma, a, route, t, t_max, d, d1, samples, scan, grid, n_max,
            system, kappa_variant, trials, seed, output, csv, jobs
        )
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        if let Some(k) = self.k {
            if k == 0 || k > MAX_ORDER {
                return bad(format!("k = {k} outside 1..={MAX_ORDER}"));
            }
        }
        for (name, v) in [("eps", self.eps), ("delta", self.delta), ("a", self.a)] {
            if let Some(v) = v {
                if !(v > 0.0 && v < 1.0) {
                    return bad(format!("{name} = {v} outside (0, 1)"));
                }
            }
        }
        if let Some(l) = &self.eps_list {
            if l.is_empty() || l.iter().any(|v| !(*v > 0.0 && *v < 1.0)) {
                return bad("eps-list values must lie in (0, 1)".into());
            }
        }
        if let Some(s) = self.sigma {
            if !(s > 0.0 && s <= 1.0) {
                return bad(format!("sigma = {s} outside (0, 1]"));
            }
        }
        if self.t == Some(0) || self.t_max == Some(0) {
            return bad("t must be positive".into());
        }
        if let Some(d) = self.d {
            if !(1..=6).contains(&d) {
                return bad(format!("d = {d} outside 1..=6"));
            }
        }
        if let Some(d) = self.d1 {
            if !(1..=8).contains(&d) {
                return bad(format!("d1 = {d} outside 1..=8"));
            }
        }
        if self.grid.is_some_and(|g| g < 2) || self.samples.is_some_and(|s| s < 2) || self.scan.is_some_and(|s| s < 2) {
            return bad("grid, samples and scan must be at least 2".into());
        }
        if self.n_max.is_some_and(|n| n == 0 || n > entropy::DEFAULT_ITERATION_CAP) {
            return bad(format!("n-max outside 1..={}", entropy::DEFAULT_ITERATION_CAP));
        }
        if self.jobs == Some(0) {
            return bad("jobs must be at least 1".into());
        }
        if let Some(r) = &self.route {
            if r != "ck" && r != "analytic" {
                return bad(format!("unknown route '{r}'"));
            }
        }
        Ok(())
    }
}

/// Parse a TOML configuration, rejecting unknown keys.
pub fn parse_config(text: &str) -> Result<Knobs> {
    toml::from_str(text).map_err(|e| Error::InvalidInput(format!("config: {e}")))
}

pub fn load_config(path: &Path) -> Result<Knobs> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

/// Flags over the config file over the environment default.
pub fn resolve(cli_config: Option<&Path>, jobs: Option<usize>, flags: Knobs) -> Result<Knobs> {
    let path = cli_config.map(Path::to_path_buf).or_else(|| std::env::var_os(CONFIG_ENV).map(PathBuf::from));
    let base = match path {
        Some(p) => load_config(&p)?,
        None => Knobs::default(),
    };
    let k = Knobs { jobs, ..flags }.or(base);
    k.validate()?;
    Ok(k)
}

// ---------------------------------------------------------------------------
// inputs

/// Contents of a JSON input file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InputSpec {
    Function { f: FunctionExpr },
    /// Several graphs parametrized independently, chart ids numbered consecutively.
    Functions { fs: Vec<FunctionExpr> },
    Slab { g1: FunctionExpr, g2: FunctionExpr },
    Set { set: SetInput },
    Remez { query: RemezQuery },
    System { system: DynSystem },
}

/// Shortest decimal form of `v` as an exact rational (`0.01 -> 1/100`).
pub fn decimal_q(v: f64) -> Result<Q> {
    let s = format!("{v:e}");
    let (mant, exp) = s.split_once('e').ok_or_else(|| Error::InvalidInput(format!("bad number {v}")))?;
    let exp: i32 = exp.parse().map_err(|_| Error::InvalidInput(format!("bad number {v}")))?;
    let (neg, mant) = mant.strip_prefix('-').map_or((false, mant), |m| (true, m));
    let (int, frac) = mant.split_once('.').unwrap_or((mant, ""));
    let digits: num_bigint::BigInt = format!("{int}{frac}").parse().map_err(|_| Error::InvalidInput(format!("bad number {v}")))?;
    let shift = exp - frac.len() as i32;
    let ten = num_bigint::BigInt::from(10);
    let mut q = Q::from_integer(digits);
    if shift >= 0 {
        q *= Q::from_integer(num_traits::pow(ten, shift as usize));
    } else {
        q /= Q::from_integer(num_traits::pow(ten, (-shift) as usize));
    }
    Ok(if neg { -q } else { q })
}

fn read_input(path: &Path) -> Result<InputSpec> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

/// `g(x) = -eps^2 / x` on `[-1, -eps]`.
pub fn hyperbola_function(eps: &Q) -> FunctionExpr {
    FunctionExpr::new(Expr::div(Expr::constant(-(eps * eps)), Expr::var()), qi(-1), -eps.clone())
}

/// Both branches of `x y = -eps^2` over `eps <= |x| <= 1`.
pub fn hyperbola_pieces(eps: &Q) -> Vec<FunctionExpr> {
    let left = hyperbola_function(eps);
    let right = FunctionExpr::new(left.expr.clone(), eps.clone(), qi(1));
    vec![left, right]
}

fn builtin_input(name: &str, k: &Knobs) -> Result<InputSpec> {
    let eps = decimal_q(k.eps.unwrap_or(0.01))?;
    let unit = |e: Expr| FunctionExpr::new(e, qi(0), qi(1));
    Ok(match name {
        "hyperbola" => InputSpec::Functions { fs: hyperbola_pieces(&eps) },
        "hyperbola-slab" => {
            let g2 = hyperbola_function(&eps);
            let g1 = FunctionExpr::new(Expr::constant(qi(0)), g2.lo.clone(), g2.hi.clone());
            InputSpec::Slab { g1, g2 }
        }
        "hyperbola-set" => InputSpec::Set { set: approx::hyperbola_set(&decimal_q(k.a.unwrap_or(0.1))?) },
        "parabola" => InputSpec::Function { f: unit(Expr::poly(vec![qi(0), qi(0), qi(1)])) },
        "cubic" => InputSpec::Function { f: unit(Expr::poly(vec![qi(0), qi(0), qi(0), qi(1)])) },
        // the line y = 0 with Z its left half
        "chebyshev" => InputSpec::Remez {
            query: RemezQuery {
                poly: BivarPoly::from_terms(&[(0, 1, qi(1))]),
                domain: UNIT_BOX,
                z: ZSpec::Window { window: [-1.0, 0.0, -1.0, 1.0] },
                degree: k.d1.unwrap_or(2),
                samples: k.samples.unwrap_or(1000),
                scan: k.scan.unwrap_or(2000),
            },
        },
        // x y = eps^2 in the unit square with Z = {x >= eps}
        "remez-hyperbola" => {
            let e = k.eps.unwrap_or(0.1);
            InputSpec::Remez {
                query: RemezQuery {
                    poly: BivarPoly::from_terms(&[(1, 1, qi(1)), (0, 0, -(&eps * &eps))]),
                    domain: [0.0, 1.0, 0.0, 1.0],
                    z: ZSpec::Window { window: [e, 1.0, 0.0, 1.0] },
                    degree: k.d1.unwrap_or(1),
                    samples: k.samples.unwrap_or(1000),
                    scan: k.scan.unwrap_or(2000),
                },
            }
        }
        other => InputSpec::System { system: DynSystem::by_name(other)? },
    })
}

fn input(k: &Knobs) -> Result<InputSpec> {
    match (&k.input, &k.builtin) {
        (Some(p), _) => read_input(p),
        (None, Some(b)) => builtin_input(b, k),
        (None, None) => Err(Error::InvalidInput("need --input or --builtin".into())),
    }
}

fn wrong_input(cmd: &str) -> Error {
    Error::InvalidInput(format!("input kind does not fit {cmd}"))
}

// ---------------------------------------------------------------------------
// artifacts

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproxRun {
    pub approximation: Approximation,
    pub score: Score,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointRow {
    pub t: u64,
    pub points: Vec<RationalPoint>,
}

/// Externally tagged: internal tags cannot carry `u128` fields.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Body {
    CkParametrization { parametrizations: Vec<CkParametrization> },
    AnalyticParametrization { parametrizations: Vec<AnalyticParametrization> },
    Approximation { runs: Vec<ApproxRun> },
    CountPoints {
        function: FunctionExpr,
        rows: Vec<PointRow>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cover: Option<HypersurfaceCover>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        trials: Option<TrialSummary>,
    },
    Remez { query: RemezQuery, report: RemezReport },
    Entropy { system: DynSystem, report: EntropyReport },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub schema_version: u32,
    pub command: String,
    pub config: Knobs,
    pub pass: bool,
    pub body: Body,
}

/// Round every float to [`FLOAT_DIGITS`] significant digits.
pub fn canonical(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let f = n.as_f64().unwrap();
            let r: f64 = format!("{:.*e}", FLOAT_DIGITS - 1, f).parse().unwrap_or(f);
            serde_json::Number::from_f64(r).map_or(Value::Null, Value::Number)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(canonical).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, canonical(v))).collect()),
        other => other,
    }
}

pub fn to_json(a: &Artifact) -> Result<String> {
    let v = serde_json::to_value(a).map_err(|e| Error::InvalidInput(format!("serialize: {e}")))?;
    let mut s = serde_json::to_string_pretty(&canonical(v)).map_err(|e| Error::InvalidInput(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn parse_artifact(text: &str) -> Result<Artifact> {
    let v: Value = serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("artifact: {e}")))?;
    let found = v.get("schema_version").and_then(Value::as_u64).unwrap_or(0) as u32;
    if found != SCHEMA_VERSION {
        return Err(Error::SchemaMismatch { expected: SCHEMA_VERSION, found });
    }
    serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("artifact: {e}")))
}

pub struct Outcome {
    pub artifact: Artifact,
    pub csv: Option<String>,
}

// ---------------------------------------------------------------------------
// commands

fn ck_config(k: &Knobs) -> CkConfig {
    CkConfig { grid: k.grid.unwrap_or(DEFAULT_GRID), ..CkConfig::default() }
}

/// Renumber chart ids consecutively across parametrizations.
fn renumber<'a>(ids: impl Iterator<Item = &'a mut usize>) {
    for (i, id) in ids.enumerate() {
        *id = i;
    }
}

fn parametrize_ck(k: &Knobs) -> Result<(Body, bool)> {
    let order = k.k.unwrap_or(2);
    let cfg = ck_config(k);
    let mut ps = match input(k)? {
        InputSpec::Function { f } => vec![ck::ck_parametrize_function(&f, order, &cfg)?],
        InputSpec::Functions { fs } => {
            fs.iter().map(|f| ck::ck_parametrize_function(f, order, &cfg)).collect::<Result<_>>()?
        }
        InputSpec::Slab { g1, g2 } => vec![ck::ck_parametrize_slab(&g1, &g2, order, &cfg)?],
        _ => return Err(wrong_input("parametrize-ck")),
    };
    renumber(ps.iter_mut().flat_map(|p| p.charts.iter_mut().map(|c| &mut c.id)));
    let pass = ps.iter().all(|p| {
        p.covers_domain() && p.charts.iter().all(|c| c.certificate.as_ref().is_some_and(|c| c.pass))
    });
    Ok((Body::CkParametrization { parametrizations: ps }, pass))
}

fn parametrize_analytic(k: &Knobs) -> Result<(Body, bool)> {
    let delta = decimal_q(k.delta.unwrap_or(1.0 / 1024.0))?;
    let cfg = AnalyticConfig::default();
    let mut ps = match input(k)? {
        InputSpec::Function { f } => vec![analytic::analytic_delta_parametrize(&f, &delta, &cfg)?],
        InputSpec::Functions { fs } => {
            fs.iter().map(|f| analytic::analytic_delta_parametrize(f, &delta, &cfg)).collect::<Result<_>>()?
        }
        InputSpec::Slab { g1, g2 } => vec![analytic::analytic_delta_parametrize_slab(&g1, &g2, &delta, &cfg)?],
        _ => return Err(wrong_input("parametrize-analytic")),
    };
    renumber(ps.iter_mut().flat_map(|p| p.charts.iter_mut().map(|c| &mut c.chart.id)));
    let pass = ps.iter().all(|p| p.charts.iter().all(|c| c.certificate.pass));
    Ok((Body::AnalyticParametrization { parametrizations: ps }, pass))
}

fn eps_values(k: &Knobs, default: f64) -> Vec<f64> {
    k.eps_list.clone().unwrap_or_else(|| vec![k.eps.unwrap_or(default)])
}

fn approximate(k: &Knobs) -> Result<(Body, bool, String)> {
    let set = match (&k.input, &k.builtin) {
        (None, None) => approx::hyperbola_set(&decimal_q(k.a.unwrap_or(0.1))?),
        _ => match input(k)? {
            InputSpec::Set { set } => set,
            _ => return Err(wrong_input("approximate")),
        },
    };
    let mut runs = Vec::new();
    for eps in eps_values(k, 0.01) {
        let a = match k.route.as_deref().unwrap_or("analytic") {
            "ck" => approx::ck_approximate(&set, eps, k.sigma.unwrap_or(1.0), &ck_config(k))?,
            _ => approx::analytic_approximate(&set, &decimal_q(eps)?, &AnalyticConfig::default())?,
        };
        let score = approx::verify_and_score(&a)?;
        runs.push(ApproxRun { approximation: a, score });
    }
    let pass = runs.iter().all(|r| r.score.pass);
    let rows: Vec<SweepRow> = runs.iter().map(|r| SweepRow::from(&r.approximation)).collect();
    Ok((Body::Approximation { runs }, pass, approx::sweep_csv(&rows)))
}

fn points_csv(rows: &[PointRow]) -> String {
    let mut s = String::from("t,x,y\n");
    for r in rows {
        for p in &r.points {
            s.push_str(&format!("{},{},{}\n", r.t, p.x, p.y));
        }
    }
    s
}

fn count_points(k: &Knobs) -> Result<(Body, bool, String)> {
    let f = match input(k)? {
        InputSpec::Function { f } => f,
        _ => return Err(wrong_input("count-points")),
    };
    let ts: Vec<u64> = match (k.t_max, k.t) {
        (Some(m), _) => (1..=m).collect(),
        (None, t) => vec![t.unwrap_or(10)],
    };
    let rows = ts
        .iter()
        .map(|&t| Ok(PointRow { t, points: bp::enumerate_points(&f, t, bp::DEFAULT_CANDIDATE_CAP)? }))
        .collect::<Result<Vec<_>>>()?;
    let mut pass = true;
    let cover = match k.d {
        Some(d) => {
            let t = *ts.last().unwrap();
            let c = bp::hypersurface_cover(&f, t, d, k.kappa_variant.unwrap_or_default())?;
            pass &= c.balls.iter().all(|b| b.pass) && c.ball_count <= c.ball_bound;
            Some(c)
        }
        None => None,
    };
    let trials = match k.trials {
        Some(n) => {
            let s = bp::determinant_trials(k.seed.unwrap_or(0), n)?;
            pass &= s.violations == 0;
            Some(s)
        }
        None => None,
    };
    let csv = points_csv(&rows);
    Ok((Body::CountPoints { function: f, rows, cover, trials }, pass, csv))
}

fn remez_cmd(k: &Knobs) -> Result<(Body, bool)> {
    let mut query = match (&k.input, &k.builtin) {
        (None, None) => match builtin_input("chebyshev", k)? {
            InputSpec::Remez { query } => query,
            _ => unreachable!(),
        },
        _ => match input(k)? {
            InputSpec::Remez { query } => query,
            _ => return Err(wrong_input("remez")),
        },
    };
    if let Some(d) = k.d1 {
        query.degree = d;
    }
    if let Some(s) = k.samples {
        query.samples = s;
    }
    if let Some(s) = k.scan {
        query.scan = s;
    }
    let report = remez::empirical_remez_constant(&query)?;
    let pass = report.constant.is_finite() && report.constant >= 1.0 - 1e-9;
    Ok((Body::Remez { query, report }, pass))
}

fn entropy_cmd(k: &Knobs) -> Result<(Body, bool, String)> {
    let system = match (&k.input, &k.builtin, &k.system) {
        (None, None, Some(name)) => DynSystem::by_name(name)?,
        (None, None, None) => DynSystem::identity(),
        _ => match input(k)? {
            InputSpec::System { system } => system,
            _ => return Err(wrong_input("entropy")),
        },
    };
    let grid = k.grid.unwrap_or_else(|| entropy::default_grid(&system));
    let ns: Vec<usize> = match k.n_max {
        Some(n) => (1..=n).collect(),
        None => entropy::DEFAULT_NS.to_vec(),
    };
    let epss = k.eps_list.clone().or(k.eps.map(|e| vec![e])).unwrap_or_else(|| entropy::DEFAULT_EPS.to_vec());
    let report = entropy::entropy_sweep(&system, &ns, &epss, grid)?;
    let pass = report.lower_le_upper && report.monotone;
    let csv = report.to_csv();
    Ok((Body::Entropy { system, report }, pass, csv))
}

/// Run one pipeline command.
pub fn execute(cmd: &str, k: &Knobs) -> Result<Outcome> {
    k.validate()?;
    let (body, pass, csv) = match cmd {
        "parametrize-ck" => {
            let (b, p) = parametrize_ck(k)?;
            (b, p, None)
        }
        "parametrize-analytic" => {
            let (b, p) = parametrize_analytic(k)?;
            (b, p, None)
        }
        "approximate" => {
            let (b, p, c) = approximate(k)?;
            (b, p, Some(c))
        }
        "count-points" => {
            let (b, p, c) = count_points(k)?;
            (b, p, Some(c))
        }
        "remez" => {
            let (b, p) = remez_cmd(k)?;
            (b, p, None)
        }
        "entropy" => {
            let (b, p, c) = entropy_cmd(k)?;
            (b, p, Some(c))
        }
        other => return Err(Error::InvalidInput(format!("unknown command '{other}'"))),
    };
    let artifact = Artifact { schema_version: SCHEMA_VERSION, command: cmd.into(), config: k.clone(), pass, body };
    Ok(Outcome { artifact, csv })
}

// ---------------------------------------------------------------------------
// verification

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub command: String,
    pub pass: bool,
    pub failures: Vec<String>,
}

const BOUND_TOL: f64 = 1e-9;

fn verify_ck(p: &CkParametrization, failures: &mut Vec<String>) -> Result<()> {
    if !p.covers_domain() {
        failures.push("charts do not tile the domain".into());
    }
    let grid = p.charts.iter().filter_map(|c| c.certificate.as_ref().map(|c| c.grid)).max().unwrap_or(DEFAULT_GRID);
    let exact = matches!(&p.target, CkTarget::Function { .. } | CkTarget::Slab { .. });
    let fresh = p.verify(4 * grid, exact)?;
    for (c, cert) in p.charts.iter().zip(&fresh) {
        let recorded = match &c.certificate {
            Some(r) => r,
            None => {
                failures.push(format!("chart {}: no certificate", c.id));
                continue;
            }
        };
        if recorded.verified_bound > 1.0 + BOUND_TOL {
            failures.push(format!("chart {}: recorded bound {} exceeds 1", c.id, recorded.verified_bound));
        }
        let worst = cert.chart_bounds.iter().chain(&cert.function_bounds).fold(0.0f64, |a, b| a.max(*b));
        if !cert.pass || worst > recorded.verified_bound + cert.tolerance {
            failures.push(format!("chart {}: re-measured bound {worst} fails at 4x grid", c.id));
        }
    }
    Ok(())
}

fn verify_analytic(p: &AnalyticParametrization, failures: &mut Vec<String>) -> Result<()> {
    let cfg = AnalyticConfig { angles: 4 * AnalyticConfig::default().angles, ..AnalyticConfig::default() };
    let fs = p.normalized();
    for c in &p.charts {
        for f in &fs {
            let cert = analytic::verify_a_chart(&c.chart, f, c.certificate.bound, c.certificate.radius, &cfg)?;
            if !cert.pass || c.certificate.bound > c.k_bound * (1.0 + cert.tolerance) + BOUND_TOL {
                failures.push(format!("chart {}: variation {} exceeds bound {}", c.chart.id, cert.measured, c.certificate.bound));
            }
        }
    }
    Ok(())
}

/// Re-check an artifact: certificates at four times the recorded resolution,
/// other results by recomputation from the recorded configuration.
pub fn verify_artifact(a: &Artifact) -> Result<VerifyReport> {
    let mut failures = Vec::new();
    match &a.body {
        Body::CkParametrization { parametrizations } => {
            for p in parametrizations {
                verify_ck(p, &mut failures)?;
            }
        }
        Body::AnalyticParametrization { parametrizations } => {
            for p in parametrizations {
                verify_analytic(p, &mut failures)?;
            }
        }
        Body::Approximation { runs } => {
            for (i, r) in runs.iter().enumerate() {
                let s = approx::verify_and_score(&r.approximation)?;
                for p in s.patches.iter().filter(|p| !p.pass) {
                    failures.push(format!("run {i} patch {}: error {} above {}", p.index, p.error, r.approximation.epsilon));
                }
            }
        }
        Body::CountPoints { function, rows, cover, .. } => {
            for r in rows {
                let fresh = bp::enumerate_points(function, r.t, bp::DEFAULT_CANDIDATE_CAP)?;
                if fresh != r.points {
                    failures.push(format!("t = {}: point set differs", r.t));
                }
            }
            if let Some(c) = cover {
                let fresh = bp::hypersurface_cover(function, c.t, c.d as u32, c.kappa_variant)?;
                for b in &c.balls {
                    let same = fresh.balls.iter().any(|x| x.index == b.index && x.points == b.points && x.pass);
                    if !b.pass || !same {
                        failures.push(format!("ball {}: rank test not reproduced", b.index));
                    }
                }
            }
        }
        Body::Remez { query, report } => {
            let fresh = remez::empirical_remez_constant(query)?;
            let rel = (fresh.constant - report.constant).abs() / report.constant.abs().max(1.0);
            if rel > 1e-6 {
                failures.push(format!("constant {} recomputed as {}", report.constant, fresh.constant));
            }
        }
        Body::Entropy { system, report } => {
            let ns: Vec<usize> = dedup(report.rows.iter().map(|r| r.n));
            let eps: Vec<f64> = dedup_f(report.rows.iter().map(|r| r.eps));
            let fresh = entropy::entropy_sweep(system, &ns, &eps, report.grid)?;
            for (x, y) in fresh.rows.iter().zip(&report.rows) {
                if x.m_lower != y.m_lower || x.m_upper != y.m_upper {
                    failures.push(format!("n = {}, eps = {}: counts differ", y.n, y.eps));
                }
            }
        }
    }
    if !a.pass {
        failures.push("artifact recorded a failing run".into());
    }
    Ok(VerifyReport { command: a.command.clone(), pass: failures.is_empty(), failures })
}

fn dedup(it: impl Iterator<Item = usize>) -> Vec<usize> {
    let mut v: Vec<usize> = it.collect();
    v.sort_unstable();
    v.dedup();
    v
}

fn dedup_f(it: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = it.collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

pub fn verify_bundle(path: &Path) -> Result<VerifyReport> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
    verify_artifact(&parse_artifact(&text)?)
}

// ---------------------------------------------------------------------------
// golden corpus

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct Expect {
    pub pass: Option<bool>,
    pub charts: Option<usize>,
    pub points: Option<usize>,
    pub min_constant: Option<f64>,
    pub max_constant: Option<f64>,
    pub max_h: Option<f64>,
    pub min_h: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct GoldenCase {
    pub command: String,
    #[serde(default)]
    pub config: Knobs,
    #[serde(default)]
    pub expect: Expect,
}

/// Run a golden case, round-trip its artifact through JSON, verify it, and
/// compare against the expectations. Returns the list of mismatches.
pub fn run_golden(case: &GoldenCase) -> Result<Vec<String>> {
    let out = execute(&case.command, &case.config)?;
    let text = to_json(&out.artifact)?;
    let back = parse_artifact(&text)?;
    let mut bad = Vec::new();
    if to_json(&back)? != text {
        bad.push("artifact does not round-trip".into());
    }
    let v = verify_artifact(&back)?;
    let e = &case.expect;
    if e.pass.unwrap_or(true) != (back.pass && v.pass) {
        bad.push(format!("pass = {} (verify: {:?})", back.pass && v.pass, v.failures));
    }
    let charts = match &back.body {
        Body::CkParametrization { parametrizations } => Some(parametrizations.iter().map(|p| p.charts.len()).sum()),
        Body::AnalyticParametrization { parametrizations } => {
            Some(parametrizations.iter().map(|p| p.charts.len()).sum())
        }
        Body::Approximation { runs } => runs.last().map(|r| r.approximation.charts),
        _ => None,
    };
    if e.charts.is_some() && e.charts != charts {
        bad.push(format!("charts = {charts:?}, expected {:?}", e.charts));
    }
    if let (Some(want), Body::CountPoints { rows, .. }) = (e.points, &back.body) {
        let got: usize = rows.iter().map(|r| r.points.len()).sum();
        if got != want {
            bad.push(format!("points = {got}, expected {want}"));
        }
    }
    if let Body::Remez { report, .. } = &back.body {
        if e.min_constant.is_some_and(|m| report.constant < m) || e.max_constant.is_some_and(|m| report.constant > m) {
            bad.push(format!("constant = {}", report.constant));
        }
    }
    if let Body::Entropy { report, .. } = &back.body {
        for est in &report.estimates {
            if e.max_h.is_some_and(|m| est.h > m) || e.min_h.is_some_and(|m| est.h < m) {
                bad.push(format!("h = {} at eps = {}", est.h, est.eps));
            }
        }
    }
    Ok(bad)
}

pub fn load_golden(path: &Path) -> Result<GoldenCase> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

// ---------------------------------------------------------------------------
// entry point

/// Errors that mean "the computation ran but a certificate failed".
fn is_verification_failure(e: &Error) -> bool {
    matches!(
        e,
        Error::BoundViolationAfterMaxDepth { .. }
            | Error::CoverTestFailed { .. }
            | Error::ZeroCountMismatch { .. }
            | Error::RefinementDiverged { .. }
    )
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", path.display())))
}

fn run_inner(cli: Cli) -> Result<bool> {
    if let Command::Verify { path } = &cli.command {
        let report = verify_bundle(path)?;
        let v = serde_json::to_value(&report).map_err(|e| Error::InvalidInput(e.to_string()))?;
        println!("{}", serde_json::to_string_pretty(&v).unwrap_or_default());
        return Ok(report.pass);
    }
    let name = cli.command.name();
    let flags = match cli.command {
        Command::ParametrizeCk(k)
        | Command::ParametrizeAnalytic(k)
        | Command::Approximate(k)
        | Command::CountPoints(k)
        | Command::Remez(k)
        | Command::Entropy(k) => k,
        Command::Verify { .. } => unreachable!(),
    };
    let knobs = resolve(cli.config.as_deref(), cli.jobs, flags)?;
    let out = execute(name, &knobs)?;
    let json = to_json(&out.artifact)?;
    match &knobs.output {
        Some(p) => write(p, &json)?,
        None => print!("{json}"),
    }
    if let (Some(p), Some(csv)) = (&knobs.csv, &out.csv) {
        write(p, csv)?;
    }
    Ok(out.artifact.pass)
}

/// Exit status: 0 pass, 2 verification failure, 1 error.
pub fn run(cli: Cli) -> i32 {
    match run_inner(cli) {
        Ok(true) => 0,
        Ok(false) => 2,
        Err(e) => {
            eprintln!("error: {e}");
            if is_verification_failure(&e) {
                2
            } else {
                1
            }
        }
    }
}
