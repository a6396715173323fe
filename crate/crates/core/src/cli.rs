//! Command-line front end: polygon | resolve | decay | verify | vdc.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_traits::{One, Zero};
use serde_json::{json, Value};

use crate::coeff::{fmt_rational, int, parse_rational, to_f64, Rational};
use crate::decay::{p_grid, DecayError, DecayProfile};
use crate::lab::{
    dyadic_lambdas, mixed_part, required_grid, run_l2_experiment, run_witness_experiment, supporting_m, vdc_scalar,
    CutoffSpec, ExperimentReport, LabError,
};
use crate::parser::{parse_phase, print_phase};
use crate::polygon::{polygon_of, reduced_polygon_of, PolygonError};
use crate::resolution::{check_bookkeeping, classify_region, resolve, Classification, ResolutionError, ResolveConfig};
use crate::series::BiSeries;

pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NO_MIXED: i32 = 3;
pub const EXIT_ITERATION: i32 = 4;
pub const EXIT_UNDER_RESOLVED: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "oscint", version, about = "Newton polygons, resolution trees and decay rates of oscillatory integral operators")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Output format; each command has its own default.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Seed for sampling.
    #[arg(long, global = true, default_value_t = 0x5eed)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Svg,
}

#[derive(Debug, Args)]
pub struct PhaseArgs {
    /// Phase polynomial in x and y, e.g. "x^5*y - x^3*y^2 + x^2*y^4".
    #[arg(long)]
    pub phase: String,
    /// Expansion point "x0,y0" (rationals or decimals).
    #[arg(long, value_parser = parse_center, default_value = "0,0", allow_hyphen_values = true)]
    pub center: (Rational, Rational),
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Full and reduced Newton polygons with their faces (json | svg).
    Polygon(PhaseArgs),
    /// Resolution tree of P = S''_xy with a classification per reduced vertex (json | svg).
    Resolve {
        #[command(flatten)]
        phase: PhaseArgs,
        /// Upper bound for the neighbourhood radius ε.
        #[arg(long, default_value_t = 1.0 / 16.0)]
        epsilon_max: f64,
        /// Blow-up stages allowed before giving up.
        #[arg(long, default_value_t = 64)]
        max_stages: usize,
    },
    /// Endpoint estimates, the α(p) table and classification of a (p, α) query (json | csv).
    Decay {
        #[command(flatten)]
        phase: PhaseArgs,
        /// Exponent p in (1, ∞), exact ("3/2", "1.25").
        #[arg(long, value_parser = parse_rat_arg)]
        p: Option<Rational>,
        /// Decay exponent to classify at p.
        #[arg(long, value_parser = parse_rat_arg)]
        alpha: Option<Rational>,
    },
    /// Fit the decay of T_λ over a dyadic λ grid: the L² norm at p = 2, witness pairings otherwise (csv | json).
    Verify {
        #[command(flatten)]
        phase: PhaseArgs,
        #[arg(long, value_parser = parse_rat_arg, default_value = "2")]
        p: Rational,
        /// Predicted α; defaults to the sharp exponent at p.
        #[arg(long, value_parser = parse_rat_arg)]
        alpha: Option<Rational>,
        /// Smallest λ, a power of two ("2^4" or "16").
        #[arg(long, value_parser = parse_pow2, default_value = "2^4")]
        lambda_min: i32,
        /// Largest λ, a power of two.
        #[arg(long, value_parser = parse_pow2, default_value = "2^14")]
        lambda_max: i32,
        /// Grid points per axis.
        #[arg(long = "grid", visible_alias = "N", default_value_t = 4096)]
        grid: usize,
        /// Slope tolerance for the verdict.
        #[arg(long, default_value_t = 0.05)]
        tol: f64,
        /// Cutoff profile: the unit-square indicator or a smooth bump at the origin.
        #[arg(long, value_enum, default_value_t = CutoffKind::Square)]
        cutoff: CutoffKind,
        /// Half-width of the bump cutoff.
        #[arg(long, default_value_t = 1.0)]
        half_width: f64,
        /// Witness box scale δ.
        #[arg(long, default_value_t = 1.0 / 64.0)]
        delta: f64,
    },
    /// Scalar van der Corput check for ∫ e^{iλu(x)} dx with u a polynomial in x (json | csv).
    Vdc {
        /// u as a polynomial in x, e.g. "x^3".
        #[arg(long)]
        phase: String,
        /// Derivative order; defaults to the first order with no zero on the interval.
        #[arg(long)]
        k: Option<u32>,
        /// Interval "a,b".
        #[arg(long, value_parser = parse_interval, default_value = "-1,1", allow_hyphen_values = true)]
        interval: (f64, f64),
        #[arg(long, value_parser = parse_pow2, default_value = "2^4")]
        lambda_min: i32,
        #[arg(long, value_parser = parse_pow2, default_value = "2^14")]
        lambda_max: i32,
        #[arg(long, default_value_t = 0.03)]
        tol: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CutoffKind {
    Square,
    Bump,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn new(code: i32, message: impl Into<String>) -> Self {
        CliError { code, message: message.into() }
    }
}

impl From<PolygonError> for CliError {
    fn from(e: PolygonError) -> Self {
        let code = if e == PolygonError::NoMixedTerms { EXIT_NO_MIXED } else { EXIT_FAIL };
        CliError::new(code, e.to_string())
    }
}

impl From<DecayError> for CliError {
    fn from(e: DecayError) -> Self {
        match e {
            DecayError::Polygon(p) => p.into(),
            DecayError::ExponentOutOfRange(_) | DecayError::NonPositiveAlpha(_) | DecayError::Series(_) => {
                CliError::new(EXIT_USAGE, e.to_string())
            }
        }
    }
}

impl From<ResolutionError> for CliError {
    fn from(e: ResolutionError) -> Self {
        let code = match e {
            ResolutionError::IterationLimitExceeded(_) => EXIT_ITERATION,
            ResolutionError::Polygon(PolygonError::NoMixedTerms) => EXIT_NO_MIXED,
            _ => EXIT_FAIL,
        };
        CliError::new(code, e.to_string())
    }
}

impl From<LabError> for CliError {
    fn from(e: LabError) -> Self {
        let code = match e {
            LabError::UnderResolved { .. } => EXIT_UNDER_RESOLVED,
            LabError::Series(_) => EXIT_USAGE,
            _ => EXIT_FAIL,
        };
        CliError::new(code, e.to_string())
    }
}

fn parse_rat_arg(s: &str) -> Result<Rational, String> {
    parse_rational(s).ok_or_else(|| format!("not a rational number: {s}"))
}

fn parse_center(s: &str) -> Result<(Rational, Rational), String> {
    let (a, b) = s.split_once(',').ok_or("expected x0,y0")?;
    Ok((parse_rat_arg(a)?, parse_rat_arg(b)?))
}

fn parse_interval(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected a,b")?;
    let a: f64 = a.trim().parse().map_err(|_| format!("bad number {a}"))?;
    let b: f64 = b.trim().parse().map_err(|_| format!("bad number {b}"))?;
    if a < b {
        Ok((a, b))
    } else {
        Err("need a < b".into())
    }
}

/// "2^k" or a power of two written out; returns k.
fn parse_pow2(s: &str) -> Result<i32, String> {
    let s = s.trim();
    if let Some(k) = s.strip_prefix("2^") {
        return k.parse().map_err(|_| format!("bad exponent in {s}"));
    }
    let v: f64 = s.parse().map_err(|_| format!("expected 2^k or a power of two, got {s}"))?;
    let k = v.log2().round();
    if v > 0.0 && 2f64.powi(k as i32) == v {
        Ok(k as i32)
    } else {
        Err(format!("{s} is not a power of two"))
    }
}

fn load_phase(args: &PhaseArgs) -> Result<BiSeries, CliError> {
    let s = parse_phase(&args.phase).map_err(|d| CliError::new(EXIT_USAGE, format!("cannot parse phase: {d}")))?;
    if args.center.0.is_zero() && args.center.1.is_zero() {
        return Ok(s);
    }
    s.recenter(&args.center.0, &args.center.1).map_err(|e| CliError::new(EXIT_USAGE, e.to_string()))
}

fn center_json(c: &(Rational, Rational)) -> Value {
    json!([fmt_rational(&c.0), fmt_rational(&c.1)])
}

fn reject(cmd: &str, f: Format) -> CliError {
    CliError::new(EXIT_USAGE, format!("{cmd} does not produce {f:?} output"))
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("json serializes") + "\n"
}

pub fn cmd_polygon(args: &PhaseArgs, format: Format) -> Result<String, CliError> {
    let s = load_phase(args)?;
    let full = polygon_of(&s)?;
    let reduced = reduced_polygon_of(&s)?;
    match format {
        Format::Json => Ok(pretty(&json!({
            "phase": print_phase(&s),
            "center": center_json(&args.center),
            "full": full.to_json(),
            "reduced": reduced.to_json(),
        }))),
        Format::Svg => Ok(reduced.to_svg()),
        Format::Csv => Err(reject("polygon", format)),
    }
}

pub fn cmd_resolve(args: &PhaseArgs, cfg: &ResolveConfig, format: Format) -> Result<String, CliError> {
    let s = load_phase(args)?;
    let reduced = reduced_polygon_of(&s)?;
    let p = s.mixed_derivative(1, 1).map_err(|e| CliError::new(EXIT_USAGE, e.to_string()))?;
    let tree = resolve(&p, cfg)?;
    if format == Format::Svg {
        return Ok(tree.to_svg(200));
    }
    if format == Format::Csv {
        return Err(reject("resolve", format));
    }
    let mut transposed = None;
    let mut vertices = Vec::new();
    let mut majors = Vec::new();
    for (k, l) in &reduced.vertices {
        let (k, l) = (to_f64(k) as u32, to_f64(l) as u32);
        let (t, kk, ll, flip) = if l >= k {
            (&tree, k, l, false)
        } else {
            if transposed.is_none() {
                let pt = p.transpose().map_err(|e| CliError::new(EXIT_FAIL, e.to_string()))?;
                transposed = Some(resolve(&pt, cfg)?);
            }
            (transposed.as_ref().unwrap(), l, k, true)
        };
        let leaves: Vec<Value> = (0..t.leaves.len())
            .map(|li| match classify_region(t, li, kk, ll) {
                Ok(c) => {
                    if !flip && c.classification == Classification::Major2 {
                        majors.push(li);
                    }
                    json!({"leaf": li, "classification": c.classification.as_str(), "nu": c.nu, "mu": fmt_rational(&c.mu)})
                }
                Err(e) => json!({"leaf": li, "error": e.to_string()}),
            })
            .collect();
        vertices.push(json!({"vertex": [k, l], "transposed": flip, "leaves": leaves}));
    }
    majors.sort_unstable();
    majors.dedup();
    let violations: Vec<String> = check_bookkeeping(&tree, &majors).iter().map(|v| format!("{v:?}")).collect();
    Ok(pretty(&json!({
        "phase": print_phase(&s),
        "center": center_json(&args.center),
        "mixed_derivative": print_phase(&p),
        "tree": tree.to_json(),
        "classifications": vertices,
        "bookkeeping_violations": violations,
    })))
}

pub fn cmd_decay(args: &PhaseArgs, p: Option<&Rational>, alpha: Option<&Rational>, format: Format) -> Result<String, CliError> {
    let s = load_phase(args)?;
    let prof = DecayProfile::new(&s)?;
    match format {
        Format::Csv => Ok(prof.alpha_csv(&p_grid(4, 6))?),
        Format::Svg => Err(reject("decay", format)),
        Format::Json => {
            let mut out = prof.to_json();
            out["phase"] = json!(print_phase(&s));
            out["center"] = center_json(&args.center);
            if let Some(p) = p {
                let sharp = prof.alpha(p)?;
                let mut q = json!({"p": fmt_rational(p), "sharp_alpha": fmt_rational(&sharp)});
                let a = alpha.unwrap_or(&sharp);
                q["alpha"] = json!(fmt_rational(a));
                q["classification"] = json!(prof.classify(p, a)?.as_str());
                out["query"] = q;
            } else if alpha.is_some() {
                return Err(CliError::new(EXIT_USAGE, "--alpha needs --p"));
            }
            Ok(pretty(&out))
        }
    }
}

/// Settings of `verify` after parsing.
#[derive(Debug, Clone)]
pub struct VerifyConfig {
    pub p: Rational,
    pub alpha: Option<Rational>,
    pub lambda_exponents: (i32, i32),
    pub grid: usize,
    pub tol: f64,
    pub cutoff: CutoffSpec,
    pub delta: f64,
}

pub fn run_verify(s: &BiSeries, cfg: &VerifyConfig) -> Result<ExperimentReport, CliError> {
    let (lo, hi) = cfg.lambda_exponents;
    // at least three decades, which also gives at least 5 points
    if hi - lo < 10 {
        return Err(CliError::new(EXIT_USAGE, "the λ grid must span at least three decades (lambda-max/lambda-min ≥ 2^10)"));
    }
    let mixed = mixed_part(s);
    let prof = DecayProfile::new(s)?;
    let alpha = match &cfg.alpha {
        Some(a) => a.clone(),
        None => prof.alpha(&cfg.p)?,
    };
    if alpha <= Rational::zero() {
        return Err(DecayError::NonPositiveAlpha(fmt_rational(&alpha)).into());
    }
    let lambdas = dyadic_lambdas(lo, hi);
    if cfg.p == int(2) {
        let lmax = *lambdas.last().unwrap();
        let req = required_grid(&mixed, &cfg.cutoff, lmax);
        if cfg.grid < req {
            return Err(CliError::new(
                EXIT_UNDER_RESOLVED,
                format!("N = {} under-resolves λ = {lmax}; raise --grid to at least {req} or lower --lambda-max", cfg.grid),
            ));
        }
        Ok(run_l2_experiment(&mixed, cfg.cutoff, cfg.grid, &lambdas, to_f64(&alpha), cfg.tol)?)
    } else {
        if cfg.p <= Rational::one() {
            return Err(DecayError::ExponentOutOfRange(fmt_rational(&cfg.p)).into());
        }
        let m = supporting_m(&prof.polygon, &cfg.p, &alpha)?;
        Ok(run_witness_experiment(&mixed, &cfg.cutoff, m, to_f64(&cfg.p), to_f64(&alpha), cfg.delta, &lambdas, cfg.tol)?)
    }
}

/// First k ≥ 1 for which u^{(k)} has no zero on the interval.
fn default_order(u: &[f64], interval: (f64, f64)) -> Option<u32> {
    let mut d = u.to_vec();
    for k in 1..u.len() as u32 {
        d = d.iter().enumerate().skip(1).map(|(i, c)| c * i as f64).collect();
        let free = (0..=512).all(|i| {
            let t = interval.0 + (interval.1 - interval.0) * i as f64 / 512.0;
            d.iter().rev().fold(0.0, |acc, c| acc * t + c).abs() > 1e-12
        });
        if free {
            return Some(k);
        }
    }
    None
}

pub fn cmd_vdc(phase: &str, k: Option<u32>, interval: (f64, f64), lambdas: (i32, i32), tol: f64, format: Format) -> Result<(String, bool), CliError> {
    let s = parse_phase(phase).map_err(|d| CliError::new(EXIT_USAGE, format!("cannot parse phase: {d}")))?;
    if s.y_degree() > 0 || !s.has_integer_exponents() {
        return Err(CliError::new(EXIT_USAGE, "vdc takes a polynomial in x alone"));
    }
    let deg = s.terms().map(|(e, _)| to_f64(&e.0) as usize).max().unwrap_or(0);
    let mut u = vec![0.0; deg + 1];
    for (e, c) in s.terms() {
        u[to_f64(&e.0) as usize] = c.value();
    }
    let k = match k.or_else(|| default_order(&u, interval)) {
        Some(k) if k >= 1 => k,
        _ => return Err(CliError::new(EXIT_USAGE, "no derivative order k ≥ 1 is free of zeros on the interval")),
    };
    let r = vdc_scalar(&u, k, interval, &dyadic_lambdas(lambdas.0, lambdas.1)).map_err(|e| CliError::new(EXIT_USAGE, e.to_string()))?;
    let predicted = -1.0 / k as f64;
    let pass = (r.slope - predicted).abs() <= tol;
    let text = match format {
        Format::Csv => {
            let mut out = String::from("lambda,value,bound_constant\n");
            for (l, v) in r.lambdas.iter().zip(&r.values) {
                out += &format!("{l},{v:.12e},{:.6}\n", v * l.powf(1.0 / k as f64));
            }
            out
        }
        Format::Json => pretty(&json!({
            "phase": print_phase(&s),
            "k": k,
            "interval": [interval.0, interval.1],
            "lambdas": r.lambdas,
            "values": r.values,
            "constant": r.constant,
            "fitted_slope": r.slope,
            "residual": r.residual,
            "predicted_slope": predicted,
            "tolerance": tol,
            "verdict": if pass { "PASS" } else { "FAIL" },
        })),
        Format::Svg => return Err(reject("vdc", format)),
    };
    Ok((text, pass))
}

/// Runs one parsed invocation and returns the text to emit and whether a verdict failed.
pub fn execute(cli: &Cli) -> Result<(String, bool), CliError> {
    match &cli.command {
        Command::Polygon(a) => Ok((cmd_polygon(a, cli.format.unwrap_or(Format::Json))?, true)),
        Command::Resolve { phase, epsilon_max, max_stages } => {
            let cfg = ResolveConfig { epsilon_max: *epsilon_max, max_stages: *max_stages, seed: cli.seed, ..ResolveConfig::default() };
            Ok((cmd_resolve(phase, &cfg, cli.format.unwrap_or(Format::Json))?, true))
        }
        Command::Decay { phase, p, alpha } => Ok((cmd_decay(phase, p.as_ref(), alpha.as_ref(), cli.format.unwrap_or(Format::Json))?, true)),
        Command::Verify { phase, p, alpha, lambda_min, lambda_max, grid, tol, cutoff, half_width, delta } => {
            let s = load_phase(phase)?;
            let cutoff = match cutoff {
                CutoffKind::Square => CutoffSpec::unit_square(),
                CutoffKind::Bump => CutoffSpec::bump((0.0, 0.0), *half_width),
            };
            let cfg = VerifyConfig {
                p: p.clone(),
                alpha: alpha.clone(),
                lambda_exponents: (*lambda_min, *lambda_max),
                grid: *grid,
                tol: *tol,
                cutoff,
                delta: *delta,
            };
            let r = run_verify(&s, &cfg)?;
            let text = match cli.format.unwrap_or(Format::Csv) {
                Format::Csv => format!("{}# verdict {} slope {:.4} predicted {:.4}\n", r.to_csv(), r.verdict(), r.fitted_slope, r.predicted_slope),
                Format::Json => pretty(&r.to_json()),
                Format::Svg => return Err(reject("verify", Format::Svg)),
            };
            Ok((text, r.pass))
        }
        Command::Vdc { phase, k, interval, lambda_min, lambda_max, tol } => {
            cmd_vdc(phase, *k, *interval, (*lambda_min, *lambda_max), *tol, cli.format.unwrap_or(Format::Json))
        }
    }
}

/// Entry point for the binary; returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    match execute(&cli) {
        Ok((text, pass)) => {
            if let Some(path) = &cli.out {
                if let Err(e) = std::fs::write(path, &text) {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    return EXIT_FAIL;
                }
            } else {
                print!("{text}");
            }
            if pass {
                0
            } else {
                EXIT_FAIL
            }
        }
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}
