//! Command-line front end.
//!
//! Exit status: 0 when every reported row passes, 1 when a row fails, 2 on
//! configuration errors, 3 when a numerical guard trips (pole proximity,
//! aliasing, ill-conditioning).

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde_json::{Map, Number, Value};

use crate::error::{Error, Result};
use crate::expansion::{check_lemma24, extract_harmonic, extract_meromorphic, sampling_pair, RelationParams};
use crate::halfplane::UHPoint;
use crate::inner::{
    check_inner_mero, check_orthogonality, check_petersson_formula, check_theorem_1_1, inner_coeff_formula,
    petersson_quadrature, petersson_quadrature_punctured, weight12_degeneracy_demo, FDQuadParams,
};
use crate::operators::{check_flip, check_ppsirel, probe_points, StencilParams};
use crate::poincare::{delta, eval_series, matrices_up_to, stabilizer_character_sum, SeriesKind, SeriesSpec, TruncationParams};
use crate::pointfn::TruncatedSeries;
use crate::report::{all_pass, CheckRow};

/// Environment variable capping the worker count (`0` = automatic).
pub const THREADS_ENV: &str = "POLARLAB_THREADS";

const EXIT_FAIL: i32 = 1;
/// Reference for rows that report a value without comparing it; its
/// differences serialize as `null`.
const NO_REFERENCE: Complex64 = Complex64::new(f64::NAN, f64::NAN);
const EXIT_CONFIG: i32 = 2;
const EXIT_GUARD: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Meromorphic,
    Harmonic,
}

impl From<Kind> for SeriesKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Meromorphic => SeriesKind::Meromorphic,
            Kind::Harmonic => SeriesKind::Harmonic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    #[value(name = "lemma-ppsirel")]
    LemmaPpsirel,
    #[value(name = "lemma-xidelliptic")]
    LemmaXidelliptic,
    #[value(name = "lemma-flip")]
    LemmaFlip,
    #[value(name = "lemma-innermero")]
    LemmaInnermero,
    #[value(name = "petersson-coeff")]
    PeterssonCoeff,
    #[value(name = "theorem-1-1")]
    Theorem11,
    #[value(name = "weight12-degeneracy")]
    Weight12Degeneracy,
    #[value(name = "orthogonality")]
    Orthogonality,
}

impl Suite {
    fn name(self) -> &'static str {
        match self {
            Suite::LemmaPpsirel => "lemma-ppsirel",
            Suite::LemmaXidelliptic => "lemma-xidelliptic",
            Suite::LemmaFlip => "lemma-flip",
            Suite::LemmaInnermero => "lemma-innermero",
            Suite::PeterssonCoeff => "petersson-coeff",
            Suite::Theorem11 => "theorem-1-1",
            Suite::Weight12Degeneracy => "weight12-degeneracy",
            Suite::Orthogonality => "orthogonality",
        }
    }
}

/// Parsed command line.
#[derive(Debug, Parser)]
#[command(name = "polarlab", version, about = "Elliptic and harmonic Poincare series on SL2(Z)", args_override_self = true)]
pub struct RunConfig {
    #[arg(long, value_enum, default_value = "json", global = true)]
    pub output: OutputFormat,
    /// Write the report here instead of standard output.
    #[arg(long = "out", global = true)]
    pub output_path: Option<PathBuf>,
    /// Flat `key=value` file whose entries override command-line flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Report `runtime_ms` as 0 so identical runs give identical bytes.
    #[arg(long, global = true)]
    pub no_timing: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate a truncated series at a point.
    #[command(args_override_self = true)]
    Eval(EvalArgs),
    /// Extract elliptic expansion coefficients.
    #[command(args_override_self = true)]
    Expand(ExpandArgs),
    /// Pair a weight-12 series with Δ by quadrature.
    #[command(args_override_self = true)]
    Inner(InnerArgs),
    /// Run a named verification suite.
    #[command(args_override_self = true)]
    Verify(VerifyArgs),
    /// Tabulate a series value against the truncation depth.
    #[command(args_override_self = true)]
    Table(TableArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SeriesArgs {
    #[arg(long, value_enum, default_value = "meromorphic")]
    pub kind: Kind,
    #[arg(long, default_value_t = 2)]
    pub k: u32,
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    pub m: i64,
    #[arg(long, default_value = "i")]
    pub center: String,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub series: SeriesArgs,
    #[arg(long)]
    pub z: String,
    #[arg(long, default_value_t = 20)]
    pub max_shell: u32,
    #[arg(long)]
    pub tail_window: Option<u32>,
}

#[derive(Debug, Clone, Args)]
pub struct ExpandArgs {
    #[command(flatten)]
    pub series: SeriesArgs,
    /// Expansion point (defaults to the center).
    #[arg(long)]
    pub at: Option<String>,
    #[arg(long, default_value_t = 12)]
    pub max_shell: u32,
    #[arg(long, default_value_t = 256)]
    pub samples: usize,
    #[arg(long, default_value_t = -3, allow_hyphen_values = true)]
    pub lo: i64,
    #[arg(long, default_value_t = 3, allow_hyphen_values = true)]
    pub hi: i64,
}

#[derive(Debug, Clone, Args)]
pub struct QuadArgs {
    /// Gauss-Legendre nodes per panel in both directions.
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long)]
    pub y_max: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct InnerArgs {
    /// Index of `Ψ_{12,m}`; `m = -1` uses punctured quadrature.
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    pub m: i64,
    #[arg(long, default_value = "2i")]
    pub center: String,
    #[arg(long, default_value_t = 20)]
    pub max_shell: u32,
    #[arg(long, default_value_t = 256)]
    pub samples: usize,
    #[command(flatten)]
    pub quad: QuadArgs,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub suite: Suite,
    #[arg(long)]
    pub k: Option<u32>,
    #[arg(long, allow_hyphen_values = true)]
    pub m: Option<i64>,
    #[arg(long)]
    pub n: Option<u32>,
    /// Series center for single-center suites.
    #[arg(long)]
    pub center: Option<String>,
    #[arg(long)]
    pub z1: Option<String>,
    #[arg(long)]
    pub z2: Option<String>,
    #[arg(long)]
    pub max_shell: Option<u32>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[command(flatten)]
    pub quad: QuadArgs,
}

#[derive(Debug, Clone, Args)]
pub struct TableArgs {
    #[command(flatten)]
    pub series: SeriesArgs,
    #[arg(long)]
    pub z: String,
    /// Comma-separated truncation depths.
    #[arg(long, default_value = "5,10,20,40", value_delimiter = ',')]
    pub shells: Vec<u32>,
}

/// A finished report.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub command: String,
    pub params: Map<String, Value>,
    pub results: Vec<CheckRow>,
    pub diagnostics: BTreeMap<String, f64>,
    pub runtime_ms: u128,
}

/// Parses `re+imi` forms such as `2i`, `i`, `0.25+1.5i`, `1/4+3/2i`.
pub fn parse_point(s: &str) -> Result<UHPoint> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || Error::Domain(format!("cannot parse point '{s}' (expected forms like 2i or 0.25+1.5i)"));
    let body = t.strip_suffix('i').ok_or_else(bad)?;
    let split = body
        .char_indices()
        .filter(|&(j, c)| j > 0 && (c == '+' || c == '-') && !matches!(body.as_bytes()[j - 1], b'e' | b'E'))
        .map(|(j, _)| j)
        .next_back();
    let (re, im) = match split {
        Some(j) => (&body[..j], &body[j..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => "1",
        "-" => "-1",
        other => other,
    };
    let x = parse_number(re).ok_or_else(bad)?;
    let y = parse_number(im.trim_start_matches('+')).ok_or_else(bad)?;
    UHPoint::new(x, y)
}

fn parse_number(s: &str) -> Option<f64> {
    match s.split_once('/') {
        Some((a, b)) => Some(a.parse::<f64>().ok()? / b.parse::<f64>().ok()?),
        None => s.parse().ok(),
    }
}

fn num(v: f64) -> Value {
    if v.is_finite() {
        Value::Number(format!("{v:.16e}").parse::<Number>().expect("formatted float parses"))
    } else {
        Value::Null
    }
}

fn complex(c: Complex64) -> Value {
    Value::Array(vec![num(c.re), num(c.im)])
}

fn point(z: UHPoint) -> Value {
    let mut m = Map::new();
    m.insert("x".into(), num(z.x()));
    m.insert("y".into(), num(z.y()));
    Value::Object(m)
}

impl Report {
    pub fn to_json(&self) -> String {
        let rows = self
            .results
            .iter()
            .map(|r| {
                let mut m = Map::new();
                m.insert("name".into(), Value::String(r.name.clone()));
                m.insert("lhs".into(), complex(r.lhs));
                m.insert("rhs".into(), complex(r.rhs));
                m.insert("abs_diff".into(), num(r.abs_diff));
                m.insert("rel_diff".into(), num(r.rel_diff));
                m.insert("pass".into(), Value::Bool(r.pass));
                Value::Object(m)
            })
            .collect();
        let mut top = Map::new();
        top.insert("command".into(), Value::String(self.command.clone()));
        top.insert("params".into(), Value::Object(self.params.clone()));
        top.insert("results".into(), Value::Array(rows));
        let diag = self.diagnostics.iter().map(|(k, v)| (k.clone(), num(*v))).collect();
        top.insert("diagnostics".into(), Value::Object(diag));
        top.insert("runtime_ms".into(), Value::Number(Number::from(self.runtime_ms as u64)));
        let mut s = serde_json::to_string_pretty(&Value::Object(top)).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Domain(format!("csv output: {e}"));
        w.write_record(["name", "lhs_re", "lhs_im", "rhs_re", "rhs_im", "abs_diff", "rel_diff", "pass"]).map_err(io)?;
        for r in &self.results {
            let f = |v: f64| format!("{v:.16e}");
            w.write_record([
                r.name.clone(),
                f(r.lhs.re),
                f(r.lhs.im),
                f(r.rhs.re),
                f(r.rhs.im),
                f(r.abs_diff),
                f(r.rel_diff),
                r.pass.to_string(),
            ])
            .map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Domain(format!("csv output: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv is utf-8"))
    }

    pub fn passed(&self) -> bool {
        all_pass(&self.results)
    }
}

/// Tolerances used by the verification suites.
pub mod tolerances {
    pub const POINTWISE_REL: f64 = 1e-3;
    pub const LEMMA24_ABS: f64 = 1e-4;
    pub const INNER_REL: f64 = 1e-2;
    pub const INNERMERO_REL: f64 = 1e-6;
    /// Vanishing threshold relative to the pairing scale.
    pub const VANISH: f64 = 1e-2;
    pub const ORTHOGONALITY: f64 = 1e-4;
    pub const DEGENERACY_BAND: (f64, f64) = (0.98, 1.02);
}

struct Params(Map<String, Value>);

impl Params {
    fn new() -> Self {
        Self(Map::new())
    }
    fn int(mut self, k: &str, v: i64) -> Self {
        self.0.insert(k.into(), Value::Number(v.into()));
        self
    }
    fn real(mut self, k: &str, v: f64) -> Self {
        self.0.insert(k.into(), num(v));
        self
    }
    fn text(mut self, k: &str, v: &str) -> Self {
        self.0.insert(k.into(), Value::String(v.into()));
        self
    }
    fn point(mut self, k: &str, z: UHPoint) -> Self {
        self.0.insert(k.into(), point(z));
        self
    }
}

fn quad_params(q: &QuadArgs, default_grid: usize) -> Result<FDQuadParams> {
    let g = q.grid.unwrap_or(default_grid);
    let p = FDQuadParams {
        grid_nx: g,
        grid_ny: g,
        y_max: q.y_max.unwrap_or(FDQuadParams::default().y_max),
        ..FDQuadParams::default()
    };
    p.validate()?;
    Ok(p)
}

fn kind_name(k: Kind) -> &'static str {
    match k {
        Kind::Meromorphic => "meromorphic",
        Kind::Harmonic => "harmonic",
    }
}

fn series_spec(a: &SeriesArgs) -> Result<SeriesSpec> {
    SeriesSpec::new(a.kind.into(), a.k, a.m, parse_point(&a.center)?)
}

fn series_params(a: &SeriesArgs, spec: &SeriesSpec) -> Params {
    Params::new().text("kind", kind_name(a.kind)).int("k", a.k as i64).int("m", a.m).point("center", spec.center)
}

fn run_eval(a: &EvalArgs, rep: &mut Report) -> Result<()> {
    let spec = series_spec(&a.series)?;
    let z = parse_point(&a.z)?;
    let trunc = match a.tail_window {
        Some(w) => TruncationParams::new(a.max_shell, w)?,
        None => TruncationParams::new(a.max_shell, (a.max_shell / 5).max(1))?,
    };
    let v = eval_series(&spec, z, trunc)?;
    rep.params = series_params(&a.series, &spec)
        .point("z", z)
        .int("max_shell", trunc.max_shell as i64)
        .int("tail_window", trunc.tail_window as i64)
        .0;
    rep.results.push(CheckRow::with_verdict("value", v.value, NO_REFERENCE, v.value.is_finite()));
    rep.diagnostics.insert("last_shells_magnitude".into(), v.last_shells_magnitude);
    rep.diagnostics.insert("term_magnitude".into(), v.term_magnitude);
    rep.diagnostics.insert("matrices".into(), matrices_up_to(trunc.max_shell) as f64);
    Ok(())
}

fn run_expand(a: &ExpandArgs, rep: &mut Report) -> Result<()> {
    let spec = series_spec(&a.series)?;
    let at = match &a.at {
        Some(s) => parse_point(s)?,
        None => spec.center,
    };
    let f = TruncatedSeries::new(spec, TruncationParams::with_shells(a.max_shell));
    let (s1, s2) = sampling_pair(at, Some(spec.center), a.samples)?;
    let zero = NO_REFERENCE;
    match spec.kind {
        SeriesKind::Meromorphic => {
            let e = extract_meromorphic(&f, at, spec.k, &s2, (a.lo, a.hi))?;
            for n in a.lo..=a.hi {
                rep.results.push(CheckRow::with_verdict(format!("c({n})"), e.plus(n), zero, true));
            }
        }
        SeriesKind::Harmonic => {
            let e = extract_harmonic(&f, at, spec.k, &s1, &s2, (a.lo, a.hi))?;
            for n in a.lo..=a.hi {
                rep.results.push(CheckRow::with_verdict(format!("c+({n})"), e.plus(n), zero, true));
                rep.results.push(CheckRow::with_verdict(format!("c-({n})"), e.minus(n), zero, true));
            }
        }
    }
    rep.params = series_params(&a.series, &spec)
        .point("at", at)
        .int("max_shell", a.max_shell as i64)
        .int("samples", a.samples as i64)
        .real("rho1", s1.rho)
        .real("rho2", s2.rho)
        .int("lo", a.lo)
        .int("hi", a.hi)
        .0;
    Ok(())
}

fn delta_fn(z: UHPoint) -> Result<Complex64> {
    Ok(delta(z))
}

fn run_inner(a: &InnerArgs, rep: &mut Report) -> Result<()> {
    let center = parse_point(&a.center)?;
    let q = quad_params(&a.quad, FDQuadParams::default().grid_nx)?;
    let trunc = TruncationParams::with_shells(a.max_shell);
    let psi = TruncatedSeries::new(SeriesSpec::meromorphic(6, a.m, center)?, trunc);
    let norm = petersson_quadrature(&delta_fn, &delta_fn, 6, &q)?.re;
    rep.diagnostics.insert("delta_norm".into(), norm);
    if a.m >= 0 {
        let lhs = petersson_quadrature(&psi, &delta_fn, 6, &q)?;
        let s = crate::expansion::CircleSampling::new(crate::expansion::DEFAULT_RADII.1, a.samples)?;
        let c = extract_meromorphic(&delta_fn, center, 6, &s, (a.m, a.m))?.plus(a.m);
        let rhs = inner_coeff_formula(c, 6, a.m as u32, center.y())?.conj();
        rep.results.push(CheckRow::compare("<Psi,Delta> quadrature vs coefficient formula", lhs, rhs, 0.0, tolerances::INNER_REL));
    } else if a.m == -1 {
        let (lhs, err) = petersson_quadrature_punctured(&psi, &delta_fn, 6, center, &q)?;
        rep.diagnostics.insert("extrapolation_error".into(), err);
        let zero = Complex64::new(0.0, 0.0);
        let pass = lhs.norm() < tolerances::ORTHOGONALITY * norm;
        rep.results.push(CheckRow::with_verdict("<Psi,Delta> punctured quadrature", lhs, zero, pass));
    } else {
        return Err(Error::Domain(format!("quadrature handles poles of order at most one, got m = {}", a.m)));
    }
    rep.params = Params::new()
        .int("k", 6)
        .int("m", a.m)
        .point("center", center)
        .int("max_shell", a.max_shell as i64)
        .int("grid", q.grid_nx as i64)
        .real("y_max", q.y_max)
        .0;
    Ok(())
}

fn run_table(a: &TableArgs, rep: &mut Report) -> Result<()> {
    let spec = series_spec(&a.series)?;
    let z = parse_point(&a.z)?;
    let deepest = *a.shells.iter().max().ok_or_else(|| Error::Domain("no shells given".into()))?;
    let reference = eval_series(&spec, z, TruncationParams::with_shells(deepest))?.value;
    for &n in &a.shells {
        let v = eval_series(&spec, z, TruncationParams::with_shells(n))?.value;
        rep.results.push(CheckRow::with_verdict(format!("N={n}"), v, reference, v.is_finite()));
    }
    let shells = a.shells.iter().map(|&n| Value::Number(n.into())).collect();
    let mut p = series_params(&a.series, &spec).point("z", z).0;
    p.insert("shells".into(), Value::Array(shells));
    rep.params = p;
    Ok(())
}

fn point_or(s: &Option<String>, default: &str) -> Result<UHPoint> {
    parse_point(s.as_deref().unwrap_or(default))
}

fn run_verify(a: &VerifyArgs, rep: &mut Report) -> Result<()> {
    use tolerances::*;
    let mut p = Params::new().text("suite", a.suite.name());
    let sp = StencilParams::default();
    let zero = Complex64::new(0.0, 0.0);
    match a.suite {
        Suite::LemmaPpsirel | Suite::LemmaFlip => {
            let k = a.k.unwrap_or(2);
            let m = a.m.unwrap_or(1);
            let center = point_or(&a.center, "2i")?;
            let flip = a.suite == Suite::LemmaFlip;
            let shells = a.max_shell.unwrap_or(if flip { 8 } else { 20 });
            let trunc = TruncationParams::with_shells(shells);
            let pts = probe_points();
            rep.results = if flip {
                check_flip(k, m, center, &pts, trunc, &sp, POINTWISE_REL)?
            } else {
                check_ppsirel(k, m, center, &pts, trunc, &sp, POINTWISE_REL)?
            };
            p = p.int("k", k as i64).int("m", m).point("center", center).int("max_shell", shells as i64).real("rel_tol", POINTWISE_REL);
        }
        Suite::LemmaXidelliptic => {
            let k = a.k.unwrap_or(2);
            let m = a.m.unwrap_or(2);
            let z0 = point_or(&a.center, "2i")?;
            let z = match &a.z1 {
                Some(s) => parse_point(s)?,
                None => z0,
            };
            let mut params = RelationParams { abs_tol: LEMMA24_ABS, ..RelationParams::default() };
            if let Some(n) = a.max_shell {
                params.trunc = TruncationParams::with_shells(n);
            }
            if let Some(s) = a.samples {
                params.samples = s;
            }
            rep.results = check_lemma24(k, m, z0, z, (-3, 3), &params)?;
            p = p
                .int("k", k as i64)
                .int("m", m)
                .point("center", z0)
                .point("z", z)
                .int("max_shell", params.trunc.max_shell as i64)
                .int("samples", params.samples as i64)
                .real("abs_tol", params.abs_tol)
                .real("rel_tol", params.rel_tol);
        }
        Suite::LemmaInnermero => {
            let k = a.k.unwrap_or(6);
            let m = a.m.unwrap_or(0);
            if m < 0 {
                return Err(Error::Domain(format!("lemma-innermero needs m >= 0, got {m}")));
            }
            let n = a.n.unwrap_or(0);
            let (z1, z2) = (point_or(&a.z1, "2i")?, point_or(&a.z2, "2i")?);
            let shells = a.max_shell.unwrap_or(20);
            let samples = a.samples.unwrap_or(256);
            let r = check_inner_mero(k, m as u32, n, z1, z2, TruncationParams::with_shells(shells), samples)?;
            rep.results.push(r.row("c+ route vs coefficient formula", 0.0, INNERMERO_REL));
            p = p.int("k", k as i64).int("m", m).int("n", n as i64).point("z1", z1).point("z2", z2).int("max_shell", shells as i64).real("rel_tol", INNERMERO_REL);
        }
        Suite::PeterssonCoeff => {
            let k = a.k.unwrap_or(6);
            let n = a.n.unwrap_or(0);
            let z = point_or(&a.center, "2i")?;
            let shells = a.max_shell.unwrap_or(20);
            let q = quad_params(&a.quad, FDQuadParams::default().grid_nx)?;
            let r = check_petersson_formula(k, n, z, TruncationParams::with_shells(shells), a.samples.unwrap_or(256), &q)?;
            rep.results.push(r.row("quadrature vs coefficient formula", 0.0, INNER_REL));
            rep.diagnostics.extend(r.diagnostics);
            p = p.int("k", k as i64).int("n", n as i64).point("center", z).int("max_shell", shells as i64).int("grid", q.grid_nx as i64).real("rel_tol", INNER_REL);
        }
        Suite::Theorem11 => {
            let k = a.k.unwrap_or(6);
            let m = a.m.unwrap_or(0);
            if m < 0 {
                return Err(Error::Domain(format!("theorem-1-1 needs m >= 0, got {m}")));
            }
            let m = m as u32;
            let n = a.n.unwrap_or(0);
            let (z1, z2) = (point_or(&a.z1, "2i")?, point_or(&a.z2, "2i")?);
            let shells = a.max_shell.unwrap_or(if k <= 3 { 40 } else { 20 });
            let samples = a.samples.unwrap_or(256);
            let q = quad_params(&a.quad, FDQuadParams::default().grid_nx)?;
            let r = check_theorem_1_1(k, m, n, z1, z2, TruncationParams::with_shells(shells), samples, &q)?;
            let vanishing = theorem_expects_zero(k, m, n, z1, z2)?;
            if vanishing {
                let pass = r.both_vanish("pairing_scale", VANISH);
                rep.results.push(CheckRow::with_verdict("both sides vanish", r.lhs, r.rhs, pass));
            } else {
                rep.results.push(r.row("quadrature vs c+ route", 0.0, INNER_REL));
            }
            rep.diagnostics.extend(r.diagnostics);
            p = p
                .int("k", k as i64)
                .int("m", m as i64)
                .int("n", n as i64)
                .point("z1", z1)
                .point("z2", z2)
                .int("max_shell", shells as i64)
                .int("grid", q.grid_nx as i64)
                .real("rel_tol", INNER_REL)
                .real("vanish_tol", VANISH);
        }
        Suite::Weight12Degeneracy => {
            let shells = a.max_shell.unwrap_or(20);
            let q = quad_params(&a.quad, 12)?;
            let d = weight12_degeneracy_demo(TruncationParams::with_shells(shells), a.samples.unwrap_or(256), &q)?;
            let c = |v: f64| Complex64::new(v, 0.0);
            let (lo, hi) = DEGENERACY_BAND;
            rep.results.push(CheckRow::with_verdict("xi norm positive", c(d.xi_norm), zero, d.xi_norm > 0.0));
            rep.results.push(CheckRow::with_verdict("norm ratio", c(d.ratio), c(1.0), (lo..=hi).contains(&d.ratio)));
            rep.results.push(CheckRow::with_verdict(
                "normalized norm ratio",
                c(d.normalized_ratio),
                c(1.0),
                (lo..=hi).contains(&d.normalized_ratio),
            ));
            rep.results.push(CheckRow::compare("xi of preimage", c(d.xi_defect), zero, POINTWISE_REL, 0.0));
            let o = &d.orthogonal_branch;
            let scale = o.diagnostic("scale").unwrap_or(f64::NAN);
            rep.results.push(CheckRow::with_verdict("orthogonal branch", o.lhs, o.rhs, o.lhs.norm() < ORTHOGONALITY * scale));
            rep.diagnostics.insert("xi_norm".into(), d.xi_norm);
            rep.diagnostics.insert("d_norm".into(), d.d_norm);
            p = p.int("max_shell", shells as i64).int("grid", q.grid_nx as i64);
        }
        Suite::Orthogonality => {
            let center = point_or(&a.center, "2i")?;
            let shells = a.max_shell.unwrap_or(12);
            let q = quad_params(&a.quad, 12)?;
            let r = check_orthogonality(center, TruncationParams::with_shells(shells), &q)?;
            let ratio = r.diagnostic("ratio").unwrap_or(f64::NAN);
            rep.results.push(CheckRow::with_verdict("<Psi_{12,-1},Delta> vanishes", r.lhs, r.rhs, ratio < ORTHOGONALITY));
            rep.diagnostics.extend(r.diagnostics);
            p = p.point("center", center).int("max_shell", shells as i64).int("grid", q.grid_nx as i64).real("tol", ORTHOGONALITY);
        }
    }
    rep.params = p.0;
    Ok(())
}

/// Whether `⟨Ψ_{2k,m}^{z2}, Ψ_{2k,n}^{z1}⟩` vanishes for structural
/// reasons: no cusp forms of weight `2k`, or one of the series vanishing
/// identically at an elliptic center.
pub fn theorem_expects_zero(k: u32, m: u32, n: u32, z1: UHPoint, z2: UHPoint) -> Result<bool> {
    let no_cusp_forms = k <= 5 || k == 7;
    let zero = Complex64::new(0.0, 0.0);
    let a = stabilizer_character_sum(&SeriesSpec::meromorphic(k, m as i64, z2)?)?;
    let b = stabilizer_character_sum(&SeriesSpec::meromorphic(k, n as i64, z1)?)?;
    Ok(no_cusp_forms || a == zero || b == zero)
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v.trim().parse().map_err(|_| Error::Domain(format!("{THREADS_ENV}='{v}' is not a count")))?;
    if n > 0 {
        // a pool may already exist when running inside a test harness
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Appends `--key value` pairs from a `key=value` file after the given
/// arguments, so its entries take precedence.
fn expand_config(args: Vec<OsString>) -> std::result::Result<Vec<OsString>, String> {
    let mut path = None;
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            path = it.next().map(PathBuf::from);
        } else if let Some(p) = s.strip_prefix("--config=") {
            path = Some(PathBuf::from(p));
        }
    }
    let Some(path) = path else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(&path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    let mut out = args;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("{}:{}: expected key=value", path.display(), lineno + 1))?;
        let (k, v) = (k.trim().replace('_', "-"), v.trim());
        match v {
            "true" => out.push(format!("--{k}").into()),
            "false" => {}
            _ => {
                out.push(format!("--{k}").into());
                out.push(v.into());
            }
        }
    }
    Ok(out)
}

/// Runs the parsed configuration and returns the report.
pub fn run(config: &RunConfig) -> Result<Report> {
    let start = Instant::now();
    let name = match &config.command {
        Command::Eval(_) => "eval",
        Command::Expand(_) => "expand",
        Command::Inner(_) => "inner",
        Command::Verify(_) => "verify",
        Command::Table(_) => "table",
    };
    let mut rep = Report {
        command: name.into(),
        params: Map::new(),
        results: Vec::new(),
        diagnostics: BTreeMap::new(),
        runtime_ms: 0,
    };
    match &config.command {
        Command::Eval(a) => run_eval(a, &mut rep)?,
        Command::Expand(a) => run_expand(a, &mut rep)?,
        Command::Inner(a) => run_inner(a, &mut rep)?,
        Command::Verify(a) => run_verify(a, &mut rep)?,
        Command::Table(a) => run_table(a, &mut rep)?,
    }
    if !config.no_timing {
        rep.runtime_ms = start.elapsed().as_millis();
    }
    Ok(rep)
}

/// Parses arguments, runs, writes the report, and returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let config = match RunConfig::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { 0 };
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return EXIT_CONFIG;
    }
    let report = match run(&config) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return if e.is_numerical_guard() { EXIT_GUARD } else { EXIT_CONFIG };
        }
    };
    let text = match config.output {
        OutputFormat::Json => report.to_json(),
        OutputFormat::Csv => match report.to_csv() {
            Ok(t) => t,
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_CONFIG;
            }
        },
    };
    let written = match &config.output_path {
        Some(path) => std::fs::write(path, text.as_bytes()),
        None => std::io::stdout().lock().write_all(text.as_bytes()),
    };
    if let Err(e) = written {
        eprintln!("error: cannot write report: {e}");
        return EXIT_CONFIG;
    }
    if report.passed() {
        0
    } else {
        EXIT_FAIL
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn points_parse() {
        let cases = [("2i", 0.0, 2.0), ("i", 0.0, 1.0), ("0.25+1.5i", 0.25, 1.5), ("1/4+3/2i", 0.25, 1.5), ("-0.5+i", -0.5, 1.0), ("1e-1+2e0i", 0.1, 2.0)];
        for (s, x, y) in cases {
            let z = parse_point(s).unwrap();
            assert_eq!((z.x(), z.y()), (x, y), "{s}");
        }
        for s in ["2", "0.5-1i", "abc", "i2"] {
            assert!(parse_point(s).is_err(), "{s}");
        }
    }

    #[test]
    fn numbers_keep_seventeen_digits() {
        let v = num(0.1);
        assert_eq!(v.to_string(), "1.0000000000000001e-1");
        assert_eq!(num(f64::NAN), Value::Null);
    }

    #[test]
    fn structural_zero_detection() {
        let (i, two_i) = (UHPoint::i(), UHPoint::new(0.0, 2.0).unwrap());
        assert!(theorem_expects_zero(2, 0, 0, two_i, two_i).unwrap());
        assert!(!theorem_expects_zero(6, 0, 0, two_i, two_i).unwrap());
        assert!(theorem_expects_zero(6, 0, 1, i, two_i).unwrap());
        assert!(!theorem_expects_zero(6, 0, 0, i, two_i).unwrap());
    }
}
