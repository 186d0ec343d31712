//! Subcommands and their JSON output.

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use thiserror::Error;
use weilsym_core::contour::{Evaluable, FnEval};
use weilsym_core::curves::{local_factorization, local_symbol, verify_reciprocity, LocalOpts, Method, PointOnLine};
use weilsym_core::json::{factorization_to_json, norm_to_json, report_to_json, scalar_to_json, symbol_to_json, JsonError};
use weilsym_core::laurent::{residue_pairing, rho_norm, rho_norm_exact};
use weilsym_core::scalars::parse_rational;
use weilsym_core::{
    birkhoff_factor, deligne_symbol, minus_symbol, oracle_commutator, plus_symbol, tame_symbol,
    winding_number_contour, CurveError, FactorError, FactorOpts, FieldTag, LaurentSeries, Locality, OracleError, OracleOpts,
    Scalar, ScalarError, SeriesError, SymbolError,
};

use crate::normalize::{is_series, to_series, to_unit, NormalizeError};
use crate::parser::{parse, ParseError};

#[derive(Debug, Parser)]
#[command(name = "weilsym", version, about = "Local symbols, factorizations and reciprocity checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// `rational`, `complex` or `padic:<p>:<M>`.
    #[arg(long, default_value = "complex")]
    pub field: String,
    /// Series window.
    #[arg(long, default_value_t = 64)]
    pub window: i64,
    /// Radius; defaults to 1 (0.5 over p-adic fields).
    #[arg(long)]
    pub rho: Option<String>,
    /// Contour samples.
    #[arg(long, default_value_t = 2048)]
    pub samples: usize,
    /// Tolerance for numeric pass/fail decisions.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// Series factorization semantics: `auto`, `germ` or `annulus`.
    #[arg(long, default_value = "auto")]
    pub locality: String,
}

#[derive(Debug, Clone, Args)]
pub struct SymbolFlags {
    /// `tame`, `plus`, `minus`, `contour` or `oracle`.
    #[arg(long, default_value = "plus")]
    pub method: String,
    /// Multiply the closed form by `(-1)^{n1 n2}`.
    #[arg(long)]
    pub graded_sign: bool,
    /// Compression window of the oracle.
    #[arg(long, default_value_t = 32)]
    pub oracle_window: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Birkhoff factorization of a series, or of a unit at `expr@point`.
    Factor {
        #[command(flatten)]
        common: Common,
        input: String,
    },
    /// Winding number on `|t| = rho`.
    Winding {
        #[command(flatten)]
        common: Common,
        input: String,
    },
    /// Local symbol of two units at a point, or of two series.
    Symbol {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        flags: SymbolFlags,
        /// Point of the line, or `inf`.
        #[arg(long, default_value = "0")]
        at: String,
        f: String,
        g: String,
    },
    /// Product of local symbols over the support; exits 1 when it is not 1.
    Reciprocity {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        flags: SymbolFlags,
        f: String,
        g: String,
    },
    /// Residue pairing of a series in `t^{>=0}` with one in `t^{<=-1}`.
    Pairing {
        #[command(flatten)]
        common: Common,
        a: String,
        b: String,
    },
    /// `max |a_i| rho^i`.
    Norm {
        #[command(flatten)]
        common: Common,
        input: String,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Normalize(#[from] NormalizeError),
    #[error(transparent)]
    Scalar(#[from] ScalarError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Factor(#[from] FactorError),
    #[error(transparent)]
    Symbol(#[from] SymbolError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Json(#[from] JsonError),
}

impl CliError {
    /// Process exit code; 1 is reserved for a failed reciprocity check.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Parse(_) => 3,
            CliError::Normalize(e) => match e {
                NormalizeError::Scalar(_) => 4,
                NormalizeError::Series(_) => 5,
                NormalizeError::Curve(_) => 9,
                _ => 3,
            },
            CliError::Scalar(_) => 4,
            CliError::Series(_) => 5,
            CliError::Factor(_) => 6,
            CliError::Symbol(_) => 7,
            CliError::Oracle(_) => 8,
            CliError::Curve(e) => match e {
                CurveError::Scalar(_) => 4,
                CurveError::Series(_) => 5,
                CurveError::Factor(_) => 6,
                CurveError::Symbol(_) => 7,
                CurveError::Oracle(_) => 8,
                _ => 9,
            },
            CliError::Json(_) => 10,
        }
    }
}

/// JSON for the output stream and the process exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub json: Value,
    pub exit: i32,
}

impl Outcome {
    fn ok(json: Value) -> Self {
        Outcome { json, exit: 0 }
    }
}

fn field(c: &Common) -> Result<FieldTag, CliError> {
    FieldTag::parse(&c.field).map_err(|e| CliError::Usage(format!("--field: {e}")))
}

fn rho_text(c: &Common, field: FieldTag) -> String {
    c.rho.clone().unwrap_or_else(|| match field {
        FieldTag::PAdic { .. } => "0.5".into(),
        _ => "1".into(),
    })
}

fn rho(c: &Common, field: FieldTag) -> Result<f64, CliError> {
    let text = rho_text(c, field);
    let r = text
        .parse::<f64>()
        .ok()
        .or_else(|| parse_rational(&text).map(|q| weilsym_core::scalars::rational_to_f64(&q)))
        .ok_or_else(|| CliError::Usage(format!("--rho: cannot parse `{text}`")))?;
    if !(r > 0.0 && r.is_finite()) {
        return Err(CliError::Usage(format!("--rho must be positive, got {text}")));
    }
    Ok(r)
}

fn method(flags: &SymbolFlags) -> Result<Method, CliError> {
    flags.method.parse().map_err(|e: CurveError| CliError::Usage(format!("--method: {e}")))
}

fn series(text: &str, field: FieldTag, window: i64) -> Result<LaurentSeries, CliError> {
    Ok(to_series(&parse(text)?, field, window)?)
}

fn factor_opts(c: &Common, field: FieldTag) -> Result<FactorOpts, CliError> {
    Ok(FactorOpts {
        rho: c.rho.as_ref().map(|_| rho(c, field)).transpose()?,
        samples: c.samples,
        locality: match c.locality.as_str() {
            "auto" => Locality::Auto,
            "germ" => Locality::Germ,
            "annulus" => Locality::Annulus,
            other => return Err(CliError::Usage(format!("--locality: unknown value `{other}`"))),
        },
        ..FactorOpts::with_window(c.window)
    })
}

fn local_opts(c: &Common, flags: &SymbolFlags) -> LocalOpts {
    LocalOpts {
        window: c.window,
        samples: c.samples,
        oracle_window: flags.oracle_window,
        graded_sign: flags.graded_sign,
        tol: c.tol,
    }
}

fn series_symbol(
    f: &LaurentSeries,
    g: &LaurentSeries,
    m: Method,
    c: &Common,
    flags: &SymbolFlags,
    field: FieldTag,
) -> Result<Value, CliError> {
    let opts = factor_opts(c, field)?;
    let v = match m {
        Method::Tame => tame_symbol(f, g)?,
        Method::Plus => plus_symbol(f, g, &opts, flags.graded_sign)?,
        Method::Minus => minus_symbol(f, g, &opts, flags.graded_sign)?,
        Method::Contour => deligne_symbol(f, g, rho(c, field)?, c.samples)?,
        Method::Oracle => {
            let oo = OracleOpts {
                graded: flags.graded_sign,
                ..OracleOpts::default()
            };
            oracle_commutator(f, g, flags.oracle_window, &oo)?
        }
    };
    Ok(symbol_to_json(&v)?)
}

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Factor { common, input } => {
            let field = field(common)?;
            let fact = match input.rsplit_once('@') {
                Some((expr, point)) => {
                    let u = to_unit(&parse(expr)?, field)?;
                    let at = PointOnLine::parse(point, field)?;
                    local_factorization(&u, &at, common.window, &Scalar::one(field))?
                }
                None => {
                    let e = parse(input)?;
                    if !is_series(&e) && e.mentions(&crate::parser::Expr::X) {
                        return Err(CliError::Usage("units in x need a point: `expr@point`".into()));
                    }
                    let s = to_series(&e, field, common.window)?;
                    birkhoff_factor(&s, &factor_opts(common, field)?)?
                }
            };
            Ok(Outcome::ok(factorization_to_json(&fact)?))
        }
        Command::Winding { common, input } => {
            let field = field(common)?;
            let r = rho(common, field)?;
            let e = parse(input)?;
            let w = if is_series(&e) {
                let s = to_series(&e, field, common.window)?;
                winding_number_contour(&s, r, common.samples)?
            } else {
                let u = to_unit(&e, field)?;
                let ev = FnEval(|z| u.eval_d(z).unwrap_or_default());
                winding_number_contour(&ev as &dyn Evaluable, r, common.samples)?
            };
            Ok(Outcome::ok(json!({ "winding": w.value, "residual": w.residual })))
        }
        Command::Symbol {
            common,
            flags,
            at,
            f,
            g,
        } => {
            let field = field(common)?;
            let m = method(flags)?;
            let (ef, eg) = (parse(f)?, parse(g)?);
            if is_series(&ef) || is_series(&eg) {
                let sf = to_series(&ef, field, common.window)?;
                let sg = to_series(&eg, field, common.window)?;
                return Ok(Outcome::ok(series_symbol(&sf, &sg, m, common, flags, field)?));
            }
            let (uf, ug) = (to_unit(&ef, field)?, to_unit(&eg, field)?);
            let point = PointOnLine::parse(at, field).map_err(|e| CliError::Usage(format!("--at: {e}")))?;
            let v = local_symbol(&uf, &ug, &point, m, &local_opts(common, flags))?;
            Ok(Outcome::ok(symbol_to_json(&v)?))
        }
        Command::Reciprocity { common, flags, f, g } => {
            let field = field(common)?;
            let m = method(flags)?;
            let uf = to_unit(&parse(f)?, field)?;
            let ug = to_unit(&parse(g)?, field)?;
            let report = verify_reciprocity(&uf, &ug, m, &local_opts(common, flags))?;
            Ok(Outcome {
                json: report_to_json(&report)?,
                exit: if report.pass { 0 } else { 1 },
            })
        }
        Command::Pairing { common, a, b } => {
            let field = field(common)?;
            let v = residue_pairing(&series(a, field, common.window)?, &series(b, field, common.window)?)?;
            Ok(Outcome::ok(scalar_to_json(&v)?))
        }
        Command::Norm { common, input } => {
            let field = field(common)?;
            let s = series(input, field, common.window)?;
            let r = rho(common, field)?;
            let exact = match field {
                FieldTag::ComplexFloat => None,
                _ => parse_rational(&rho_text(common, field)).and_then(|q| rho_norm_exact(&s, &q)),
            };
            Ok(Outcome::ok(norm_to_json(&rho_norm(&s, r), exact.as_ref())?))
        }
    }
}

/// Parses arguments (without the program name) and runs them.
pub fn run_args<I, S>(args: I) -> Result<Outcome, CliError>
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let argv = std::iter::once(std::ffi::OsString::from("weilsym")).chain(args.into_iter().map(Into::into));
    let cli = Cli::try_parse_from(argv).map_err(|e| CliError::Usage(e.to_string()))?;
    run(&cli)
}
