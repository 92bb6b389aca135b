use std::process::ExitCode;

use bicomb::clt::{AGREEMENT_TOL, VARIANCE_CLAMP};
use bicomb::spectral::SpectralConfig;
use bicomb::Error;
use serde::Serialize;
use serde_json::{json, Value};

use crate::commands::Runner;
use crate::Opts;

pub const TOLERANCE_ENV: &str = "BICOMB_TOLERANCE";

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Tolerances {
    /// Verdict tolerance: component agreement, row sums, stationarity.
    pub verdict: f64,
    pub source: &'static str,
    pub eigen: f64,
    pub tie: f64,
    pub null_space: f64,
    pub support: f64,
    pub variance_clamp: f64,
}

impl Tolerances {
    pub fn from_env() -> Result<Self, CliError> {
        let spectral = SpectralConfig::default();
        let (verdict, source) = match std::env::var(TOLERANCE_ENV) {
            Ok(text) => {
                let v: f64 = text
                    .parse()
                    .map_err(|_| CliError::Usage(format!("{TOLERANCE_ENV}={text:?} is not a number")))?;
                if !(v > 0.0 && v.is_finite()) {
                    return Err(CliError::Usage(format!("{TOLERANCE_ENV} must be positive")));
                }
                (v, "environment")
            }
            Err(_) => (AGREEMENT_TOL, "default"),
        };
        Ok(Tolerances {
            verdict,
            source,
            eigen: spectral.eigen_tol,
            tie: spectral.tie_tol,
            null_space: spectral.null_tol,
            support: spectral.support_tol,
            variance_clamp: VARIANCE_CLAMP,
        })
    }
}

pub struct Outcome {
    pub passed: bool,
    /// `"pass"`, `"fail"` or a more specific negative verdict.
    pub verdict: String,
    pub result: Value,
    pub histogram: Option<String>,
}

impl Outcome {
    pub fn pass(result: Value) -> Self {
        Outcome::with(true, result)
    }

    pub fn with(passed: bool, result: Value) -> Self {
        Outcome {
            passed,
            verdict: if passed { "pass" } else { "fail" }.into(),
            result,
            histogram: None,
        }
    }

    pub fn labeled(mut self, verdict: &str) -> Self {
        self.verdict = verdict.into();
        self
    }
}

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or inputs.
    Usage(String),
    /// The library could not complete the computation.
    Library(Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(msg) => f.write_str(msg),
            CliError::Library(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Library(e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Library(Error::Json(e))
    }
}

/// Errors that are themselves a computed negative answer.
fn negative_verdict(e: &Error) -> Option<Value> {
    match e {
        Error::NotWeaklyCombableAtDepth(f) => Some(json!({ "synthesis_failure": f })),
        Error::DegenerateEigenstructure(_)
        | Error::InsufficientGrowth(_)
        | Error::DeadEnd(_)
        | Error::NegativeVariance(_)
        | Error::SingularPoisson(_)
        | Error::ConeDepthExceeded { .. } => Some(Value::Null),
        _ => None,
    }
}

fn kind(e: &Error) -> String {
    let debug = format!("{e:?}");
    debug
        .split(|c: char| !c.is_alphanumeric())
        .next()
        .unwrap_or_default()
        .to_string()
}

fn emit(path: Option<&str>, text: &str) -> std::io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn execute(name: &str, opts: &Opts, run: Runner) -> ExitCode {
    let tolerances = match Tolerances::from_env() {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let outcome = match run(opts, &tolerances) {
        Ok(o) => o,
        Err(CliError::Library(e)) => match negative_verdict(&e) {
            Some(details) => Outcome::with(
                false,
                json!({
                    "error": { "kind": kind(&e), "message": e.to_string(), "details": details }
                }),
            ),
            None => {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
        },
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let document = json!({
        "tool": "bicomb",
        "version": env!("CARGO_PKG_VERSION"),
        "command": name,
        "config": opts,
        "tolerances": tolerances,
        "verdict": outcome.verdict,
        "result": outcome.result,
    });
    let mut text = serde_json::to_string_pretty(&document).expect("reports serialize");
    text.push('\n');
    if let Err(e) = emit(opts.out.as_deref(), &text) {
        eprintln!("error: cannot write report: {e}");
        return ExitCode::from(1);
    }
    if let (Some(csv), Some(path)) = (&outcome.histogram, &opts.histogram) {
        if let Err(e) = std::fs::write(path, csv) {
            eprintln!("error: cannot write histogram: {e}");
            return ExitCode::from(1);
        }
    }
    if outcome.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}
