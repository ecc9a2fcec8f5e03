//! Command line front end. [`run`] executes one invocation in-process and
//! returns the exit status with everything that would be printed, so the
//! binary and the golden tests share one code path.

pub mod golden;
pub mod io;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use weylstar::expr::{eval, parse_expr, Expr, Value as ExprValue};
use weylstar::gaussian::GaussianElement;
use weylstar::intertwiner::{intertwine_gauss, intertwine_poly};
use weylstar::star_exponential::{singular_scan, star_exp_quadratic, ScanRegion};
use weylstar::two_valued::{
    continue_sheet, double_cover_rotation, polar_element, reflect, FamilyTerm, QuadraticFamily, ScalarFn,
};
use weylstar::{Error, OrderingK, Params, Result, C64};
use weylstar_verify::{run_all, Tolerances};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_SINGULAR: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

/// Name of the variable that overrides the comparison tolerance.
pub const TOL_VAR: &str = "WEYLSTAR_TOL";

#[derive(Parser, Debug)]
#[command(name = "weylstar", version, about = "Star products and star exponentials in the complex Weyl algebra")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug)]
pub struct Space {
    /// Number of (u, v) pairs; inferred from the inputs when omitted.
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub hbar: f64,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Star product of two expressions.
    Starprod {
        #[command(flatten)]
        space: Space,
        #[arg(long, default_value = "weyl")]
        ordering: String,
        #[arg(allow_hyphen_values = true)]
        left: String,
        #[arg(allow_hyphen_values = true)]
        right: String,
    },
    /// exp_*(t A_*) for a symmetric matrix A.
    Starexp {
        #[command(flatten)]
        space: Space,
        #[arg(long, default_value = "weyl")]
        ordering: String,
        #[arg(long = "A")]
        a: String,
        /// Real time, or RE,IM for a complex one.
        #[arg(long, allow_hyphen_values = true)]
        t: String,
    },
    /// Moves a polynomial or a Gaussian between orderings.
    Intertwine {
        #[command(flatten)]
        space: Space,
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        #[arg(long, conflicts_with = "gauss", required_unless_present = "gauss")]
        poly: Option<String>,
        #[arg(long)]
        gauss: Option<String>,
    },
    /// The polar element eps00(a) in the standard ordering.
    Polar {
        #[command(flatten)]
        space: Space,
        #[arg(long)]
        a: String,
    },
    /// Reflection of b in the hyperplane orthogonal to a.
    Reflect {
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
    },
    /// The rotation R_a R_b covered by eps00(a) * eps00(b).
    DoubleCover {
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
    },
    /// Continues the amplitude of a family of star exponentials along a path.
    ContinuePath {
        #[arg(long)]
        family: String,
        #[arg(long)]
        path: String,
    },
    /// Singular points of exp_*(t A_*) in a rectangle of the t-plane.
    ScanSingular {
        #[command(flatten)]
        space: Space,
        #[arg(long = "A")]
        a: String,
        #[arg(long, default_value = "weyl")]
        ordering: String,
        #[arg(long)]
        region: String,
    },
    /// Runs the acceptance suite.
    Verify,
}

/// Exit status and captured output of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_input_error() {
        EXIT_INPUT
    } else if e.is_singular_point() {
        EXIT_SINGULAR
    } else {
        EXIT_NUMERICAL
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::NonFinite => "NonFinite",
        Error::SingularCos { .. } | Error::SingularPoint { .. } => "SingularPoint",
        Error::Singular { .. } => "SingularMatrix",
        Error::AmbiguousBranch => "AmbiguousBranch",
        Error::DimensionMismatch { .. } => "DimensionMismatch",
        Error::NotSymmetric => "NotSymmetric",
        Error::NotOnSphere { .. } => "NotOnSphere",
        Error::NonInvertibleTransform => "NonInvertibleTransform",
        Error::ProductSingular => "ProductSingular",
        Error::NoInverseInClass => "NoInverseInClass",
        Error::SingularEncountered { .. } => "SingularEncountered",
        Error::StepUnderflow => "StepUnderflow",
        Error::PathThroughSingularity(_) => "PathThroughSingularity",
        Error::Parse { .. } => "ParseError",
        Error::IndexOutOfRange { .. } => "IndexOutOfRange",
        Error::NonQuadraticExponent(_) => "NonQuadraticExponent",
        Error::Invalid(_) => "Invalid",
    }
}

fn error_json(e: &Error) -> Value {
    let mut body = json!({ "kind": error_kind(e), "message": e.to_string() });
    match e {
        Error::SingularPoint { re, im } => body["t"] = io::out_complex(C64::new(*re, *im)),
        Error::PathThroughSingularity(s) => body["s"] = json!(s),
        Error::Parse { pos, .. } => body["offset"] = json!(pos),
        _ => {}
    }
    json!({ "error": body })
}

const INLINE_WIDTH: usize = 96;

/// Indented JSON where arrays without objects stay on one line when they
/// fit, so complex numbers and matrix rows read naturally.
fn render(v: &Value) -> String {
    let mut out = String::new();
    render_into(v, 0, &mut out);
    out.push('\n');
    out
}

fn render_into(v: &Value, indent: usize, out: &mut String) {
    let pad = |n: usize| "  ".repeat(n);
    match v {
        Value::Object(map) if !map.is_empty() => {
            out.push_str("{\n");
            for (i, (k, x)) in map.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                out.push_str(&Value::String(k.clone()).to_string());
                out.push_str(": ");
                render_into(x, indent + 1, out);
                out.push_str(if i + 1 < map.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push('}');
        }
        Value::Array(xs) if !xs.is_empty() => {
            if let Some(flat) = inline(v).filter(|f| f.len() + 2 * indent <= INLINE_WIDTH) {
                out.push_str(&flat);
                return;
            }
            out.push_str("[\n");
            for (i, x) in xs.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                render_into(x, indent + 1, out);
                out.push_str(if i + 1 < xs.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push(']');
        }
        _ => out.push_str(&v.to_string()),
    }
}

fn inline(v: &Value) -> Option<String> {
    match v {
        Value::Object(map) if !map.is_empty() => None,
        Value::Array(xs) => {
            let parts = xs.iter().map(inline).collect::<Option<Vec<_>>>()?;
            Some(format!("[{}]", parts.join(", ")))
        }
        _ => Some(v.to_string()),
    }
}

/// Runs one invocation. `args` excludes the program name.
pub fn run<I, S>(args: I) -> Outcome
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let argv = std::iter::once("weylstar".to_string()).chain(args.into_iter().map(Into::into));
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            return if e.use_stderr() {
                Outcome { code, stdout: String::new(), stderr: text }
            } else {
                Outcome { code, stdout: text, stderr: String::new() }
            };
        }
    };
    match dispatch(cli.command) {
        Ok((code, v)) => Outcome { code, stdout: render(&v), stderr: String::new() },
        Err(e) => Outcome {
            code: exit_code(&e),
            stdout: render(&error_json(&e)),
            stderr: format!("error: {e}\n"),
        },
    }
}

fn params(space: &Space, inferred: Option<usize>) -> Result<Params> {
    let m = match (space.m, inferred) {
        (Some(m), Some(n)) if m != n => return Err(Error::DimensionMismatch { expected: m, got: n }),
        (Some(m), _) | (None, Some(m)) => m,
        (None, None) => return Err(Error::Invalid("--m is required here".into())),
    };
    Params::new(m, space.hbar)
}

fn half_dim(n: usize) -> Result<usize> {
    if n == 0 || !n.is_multiple_of(2) {
        return Err(Error::Invalid(format!("matrix size {n} is not 2m")));
    }
    Ok(n / 2)
}

fn parse_time(text: &str) -> Result<C64> {
    let bad = || Error::Invalid(format!("--t expects RE or RE,IM, got {text:?}"));
    let mut parts = text.split(',').map(|s| s.trim().parse::<f64>().map_err(|_| bad()));
    let re = parts.next().ok_or_else(bad)??;
    let im = parts.next().transpose()?.unwrap_or(0.0);
    if parts.next().is_some() || !re.is_finite() || !im.is_finite() {
        return Err(bad());
    }
    Ok(C64::new(re, im))
}

fn gaussian_out(e: &GaussianElement, two_valued: bool) -> Value {
    json!({ "g": io::out_complex(e.g()), "Q": io::out_matrix(e.q()), "two_valued": two_valued })
}

fn dispatch(command: Command) -> Result<(i32, Value)> {
    let ok = |v: Value| Ok((EXIT_OK, v));
    match command {
        Command::Starprod { space, ordering, left, right } => {
            let p = params(&space, None)?;
            let ord = io::ordering(&ordering, p.m)?;
            let product = Expr::Star(Box::new(parse_expr(&left, &p)?), Box::new(parse_expr(&right, &p)?));
            ok(match eval(&product, &ord, &p)? {
                ExprValue::Poly(f) => json!({ "kind": "polynomial", "terms": io::out_poly(&f), "two_valued": false }),
                ExprValue::Gauss(f) => json!({
                    "kind": "gaussian",
                    "prefactor": io::out_poly(&f.prefactor),
                    "g": io::out_complex(f.core.g()),
                    "Q": io::out_matrix(f.core.q()),
                    "two_valued": true,
                }),
            })
        }
        Command::Starexp { space, ordering, a, t } => {
            let a = io::matrix(&io::load(&a)?)?;
            let p = params(&space, Some(half_dim(a.nrows())?))?;
            let ord = io::ordering(&ordering, p.m)?;
            let t = parse_time(&t)?;
            let r = star_exp_quadratic(&a, &ord, &p, t)?;
            let mut v = gaussian_out(r.element.representative(), false);
            v["sheet"] = json!(r.sheet);
            v["t"] = io::out_complex(t);
            ok(v)
        }
        Command::Intertwine { space, from, to, poly, gauss } => {
            if let Some(src) = gauss {
                let f = io::gaussian(&io::load(&src)?)?;
                let p = params(&space, Some(half_dim(f.dim())?))?;
                let (k1, k2) = (io::ordering(&from, p.m)?, io::ordering(&to, p.m)?);
                let image = intertwine_gauss(&f, &k1, &k2, &p)?;
                return ok(gaussian_out(image.representative(), true));
            }
            let src = poly.expect("clap requires --poly or --gauss");
            let doc = io::load(&src)?;
            let (f, p, k1) = match doc.as_str() {
                Some(text) => {
                    let p = params(&space, None)?;
                    let k1 = io::ordering(&from, p.m)?;
                    match eval(&parse_expr(text, &p)?, &k1, &p)? {
                        ExprValue::Poly(f) => (f, p, k1),
                        ExprValue::Gauss(_) => {
                            return Err(Error::Invalid("--poly expression evaluates to a Gaussian; use --gauss".into()))
                        }
                    }
                }
                None => {
                    let f = io::poly_terms(&doc, space.m.map(|m| 2 * m))?;
                    let p = params(&space, Some(f.nvars() / 2))?;
                    let k1 = io::ordering(&from, p.m)?;
                    (f, p, k1)
                }
            };
            let k2 = io::ordering(&to, p.m)?;
            let image = intertwine_poly(&f, &k1, &k2, &p)?;
            ok(json!({ "terms": io::out_poly(&image), "two_valued": false }))
        }
        Command::Polar { space, a } => {
            let a = io::vector(&io::load(&a)?)?;
            let p = params(&space, Some(a.len()))?;
            let e = polar_element(&a, &p)?;
            let mut v = gaussian_out(e.value.representative(), true);
            v["ordering"] = json!("standard");
            ok(v)
        }
        Command::Reflect { a, b } => {
            let (a, b) = (io::vector(&io::load(&a)?)?, io::vector(&io::load(&b)?)?);
            ok(json!({ "result": io::out_vector(&reflect(&a, &b)?), "two_valued": false }))
        }
        Command::DoubleCover { a, b } => {
            let (a, b) = (io::vector(&io::load(&a)?)?, io::vector(&io::load(&b)?)?);
            let r = double_cover_rotation(&a, &b)?;
            let real = r.iter().all(|x| x.im == 0.0);
            ok(json!({ "R": io::out_matrix(&r), "real": real, "two_valued": false }))
        }
        Command::ContinuePath { family, path } => {
            let doc = io::load(&family)?;
            let (fam, ord, p, t) = family_from_json(&doc)?;
            let path_doc = io::load(&path)?;
            let samples = path_doc.get("samples").unwrap_or(&path_doc);
            let path: Vec<f64> = samples
                .as_array()
                .and_then(|xs| xs.iter().map(Value::as_f64).collect())
                .ok_or_else(|| Error::Invalid("path must be a list of numbers".into()))?;
            let r = continue_sheet(&fam, &ord, &p, t, &path)?;
            ok(json!({
                "samples": r.samples,
                "branch_values": io::out_vector(&r.branch_values),
                "net_sign": r.net_sign,
                "two_valued": true,
            }))
        }
        Command::ScanSingular { space, a, ordering, region } => {
            let a = io::matrix(&io::load(&a)?)?;
            let p = params(&space, Some(half_dim(a.nrows())?))?;
            let ord = io::ordering(&ordering, p.m)?;
            let region: ScanRegion = serde_json::from_value(io::load(&region)?)
                .map_err(|e| Error::Invalid(format!("region must be {{re, im, grid}}: {e}")))?;
            if region.grid.0 < 2 || region.grid.1 < 1 {
                return Err(Error::Invalid("grid needs at least 2 x 1 points".into()));
            }
            let points = singular_scan(&a, &ord, &p, &region)?;
            ok(json!({ "points": io::out_vector(&points), "two_valued": false }))
        }
        Command::Verify => {
            let tol = tolerance_from_env()?;
            let mut report = run_all(&Tolerances { default: tol });
            report.criteria.push(golden::criterion());
            report.all_passed = report.criteria.iter().all(|c| c.passed);
            let code = if report.all_passed { EXIT_OK } else { EXIT_NUMERICAL };
            let mut v = serde_json::to_value(&report).map_err(|e| Error::Invalid(e.to_string()))?;
            v["tolerance"] = json!(tol);
            v["two_valued"] = json!(false);
            Ok((code, v))
        }
    }
}

/// Default comparison tolerance, or the value of [`TOL_VAR`].
pub fn tolerance_from_env() -> Result<f64> {
    match std::env::var(TOL_VAR) {
        Err(_) => Ok(Tolerances::default().default),
        Ok(s) => match s.trim().parse::<f64>() {
            Ok(x) if x > 0.0 && x.is_finite() => Ok(x),
            _ => Err(Error::Invalid(format!("{TOL_VAR} must be a positive number, got {s:?}"))),
        },
    }
}

/// `{m, hbar, ordering, t, terms: [{fn, freq, A}]}`.
fn family_from_json(doc: &Value) -> Result<(QuadraticFamily, OrderingK, Params, C64)> {
    let field = |k: &str| doc.get(k).ok_or_else(|| Error::Invalid(format!("family without {k:?}")));
    let m = field("m")?
        .as_u64()
        .ok_or_else(|| Error::Invalid("m must be a positive integer".into()))? as usize;
    let hbar = doc.get("hbar").map_or(Some(1.0), Value::as_f64).ok_or_else(|| Error::Invalid("hbar must be a number".into()))?;
    let p = Params::new(m, hbar)?;
    let ord = match doc.get("ordering") {
        Some(v) => io::ordering_value(v, m)?,
        None => OrderingK::weyl(m),
    };
    let t = io::complex(field("t")?)?;
    let terms = field("terms")?
        .as_array()
        .ok_or_else(|| Error::Invalid("terms must be a list".into()))?
        .iter()
        .map(|term| {
            let func: ScalarFn = serde_json::from_value(term.get("fn").cloned().unwrap_or(json!("const")))
                .map_err(|_| Error::Invalid(format!("fn must be const, sin, cos or linear: {term}")))?;
            let freq = term.get("freq").map_or(Some(1.0), Value::as_f64).ok_or_else(|| Error::Invalid("freq must be a number".into()))?;
            let a = io::matrix(term.get("A").ok_or_else(|| Error::Invalid(format!("term without \"A\": {term}")))?)?;
            Ok(FamilyTerm { func, freq, a })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((QuadraticFamily::new(terms)?, ord, p, t))
}
