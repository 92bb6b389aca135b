use bicomb::clt::{
    drift_variance_fn, empirical_clt, moment_oracle, sample, sample_ray, typicality_profile, CompareConfig,
};
use bicomb::combable::{check_lipschitz, check_subdivision, GroupFunction};
use bicomb::combing::validate_combing;
use bicomb::digraph::SemisimplicityVerdict;
use bicomb::quasimorphism::{
    counting_function, defect_estimate, holder_diagnostic, BigCountingQuasimorphism, CountingQuasimorphism, Pattern,
};
use bicomb::spectral::{analyze, poincare_diagnostics};
use bicomb::stats::{histogram, histogram_csv, moments};
use bicomb::Error;
use serde_json::{json, Value};

use crate::inputs::{self, require};
use crate::report::{CliError, Outcome, Tolerances};
use crate::Opts;

pub type Runner = fn(&Opts, &Tolerances) -> Result<Outcome, CliError>;

const GROWTH_N_MAX: usize = 48;
const PATH_BUDGET: usize = 1_000_000;
const PAIR_BUDGET: usize = 5_000_000;
const HISTOGRAM_BINS: usize = 40;

fn to_value<T: serde::Serialize>(t: &T) -> Result<Value, CliError> {
    Ok(serde_json::to_value(t)?)
}

fn seed(opts: &Opts) -> Result<u64, CliError> {
    opts.seed
        .ok_or_else(|| CliError::Usage("--seed is required for sampling commands".into()))
}

pub fn combing_build(opts: &Opts, _: &Tolerances) -> Result<Outcome, CliError> {
    let (combing, search) = match (&opts.group_file, &opts.fixture) {
        (Some(path), None) => inputs::build_combing(inputs::oracle_from_file(path)?, opts)?,
        (None, Some(_)) => (inputs::combing(opts)?, None),
        _ => return Err(CliError::Usage("exactly one of --fixture or --group-file is required".into())),
    };
    Ok(Outcome::pass(json!({
        "genset": combing.genset,
        "vertices": combing.digraph.vertex_count(),
        "edges": combing.digraph.edges().len(),
        "verified_radius": combing.verified_radius,
        "search": search,
        "bundle": combing.to_bundle(),
    })))
}

pub fn combing_validate(opts: &Opts, _: &Tolerances) -> Result<Outcome, CliError> {
    let combing = inputs::combing(opts)?;
    let radius = opts.radius.unwrap_or(combing.verified_radius.min(8));
    let report = validate_combing(&combing.digraph, &combing.oracle, &combing.genset, radius)?;
    Ok(Outcome::with(report.passed, to_value(&report)?))
}

pub fn spectral_analyze(opts: &Opts, tol: &Tolerances) -> Result<Outcome, CliError> {
    let digraph = inputs::digraph(opts)?;
    let semisimplicity = digraph.check_almost_semisimple(opts.n_max.unwrap_or(GROWTH_N_MAX))?;
    let poincare = match opts.radius {
        Some(r) => {
            let combing = inputs::combing(opts)?;
            let ball = combing.oracle.ball(&combing.genset, r)?;
            Some(poincare_diagnostics(&ball.sphere_sizes(), None))
        }
        None => None,
    };
    let label = match semisimplicity.verdict {
        SemisimplicityVerdict::Pass => "pass",
        SemisimplicityVerdict::NotSemisimple => "not-almost-semisimple",
        SemisimplicityVerdict::InsufficientGrowth => "insufficient-growth",
    };
    let mut result = json!({
        "semisimplicity": semisimplicity,
        "poincare": poincare,
    });
    let spectral_ok = match analyze(&digraph) {
        Ok(data) => {
            let row_sum_error = data.row_sum_error();
            let stationarity_error = data.stationarity_error();
            let identities_ok = row_sum_error <= tol.verdict && stationarity_error <= tol.verdict;
            result["lambda"] = json!(data.lambda);
            result["mu"] = json!(data.mu);
            result["identities"] = json!({
                "row_sum_error": row_sum_error,
                "stationarity_error": stationarity_error,
                "within_tolerance": identities_ok,
            });
            result["spectral"] = to_value(&data)?;
            identities_ok
        }
        Err(e @ (Error::DegenerateEigenstructure(_) | Error::InsufficientGrowth(_))) => {
            result["spectral_error"] = json!(e.to_string());
            false
        }
        Err(e) => return Err(e.into()),
    };
    let passed = label == "pass" && spectral_ok;
    let outcome = Outcome::with(passed, result);
    Ok(if passed || label == "pass" { outcome } else { outcome.labeled(label) })
}

pub fn fn_synthesize(opts: &Opts, _: &Tolerances) -> Result<Outcome, CliError> {
    let spec = opts
        .fn_spec
        .as_deref()
        .ok_or_else(|| CliError::Usage("--fn is required".into()))?;
    let f = inputs::synthesize(&inputs::combing(opts)?, spec, opts)?;
    let (lo, hi) = f
        .dphi
        .iter()
        .fold((i64::MAX, i64::MIN), |(lo, hi), &d| (lo.min(d), hi.max(d)));
    Ok(Outcome::pass(json!({
        "function": spec,
        "vertices": f.dphi.len(),
        "dphi_range": [lo, hi],
        "provenance": f.provenance,
        "bundle": f.to_bundle(),
    })))
}

pub fn fn_check(opts: &Opts, _: &Tolerances) -> Result<Outcome, CliError> {
    let f = inputs::function(opts)?;
    let radius = opts
        .radius
        .unwrap_or(f.verify_radius.saturating_sub(1).clamp(1, 7));
    let lipschitz = check_lipschitz(&f, f.oracle(), &f.combing.genset, radius)?;
    let subdivision = check_subdivision(&f, radius.min(f.verify_radius))?;
    let stable = lipschitz.left_trend == bicomb::combable::Trend::Stable
        && lipschitz.right_trend == bicomb::combable::Trend::Stable;
    Ok(Outcome::with(
        stable,
        json!({ "lipschitz": lipschitz, "subdivision": subdivision }),
    ))
}

fn pattern(opts: &Opts, oracle: &bicomb::group::GroupOracle) -> Result<Pattern, CliError> {
    let text = opts
        .sigma_pattern
        .as_deref()
        .ok_or_else(|| CliError::Usage("--sigma-pattern is required".into()))?;
    Ok(Pattern::parse(oracle, text)?)
}

fn genset(opts: &Opts) -> &str {
    opts.genset.first().map(String::as_str).unwrap_or(bicomb::group::STANDARD)
}

pub fn qm_count(opts: &Opts, _: &Tolerances) -> Result<Outcome, CliError> {
    let oracle = inputs::oracle(opts)?;
    let pattern = pattern(opts, &oracle)?;
    let genset = genset(opts);
    let elements = if opts.word.is_empty() {
        let ball = oracle.ball(genset, opts.radius.unwrap_or(4))?;
        ball.elements().to_vec()
    } else {
        opts.word
            .iter()
            .map(|w| oracle.evaluate_str(w, genset))
            .collect::<bicomb::Result<Vec<_>>>()?
    };
    let slack = opts.slack.unwrap_or(0);
    let rows = elements
        .iter()
        .map(|g| -> Result<Value, CliError> {
            let forward = counting_function(&oracle, &pattern.sigma, g, slack, PATH_BUDGET)?;
            let backward = counting_function(&oracle, &pattern.inverse, g, slack, PATH_BUDGET)?;
            Ok(json!({
                "element": oracle.format(g),
                "count": forward,
                "inverse_count": backward,
                "phi": forward - backward,
            }))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Outcome::pass(json!({
        "pattern": oracle.format(&oracle.evaluate(&pattern.sigma, bicomb::group::STANDARD)?),
        "slack": slack,
        "rows": rows,
    })))
}

fn quasimorphism(opts: &Opts, oracle: &std::sync::Arc<bicomb::group::GroupOracle>) -> Result<Box<dyn GroupFunction>, CliError> {
    if opts.sigma_pattern.is_some() {
        let p = pattern(opts, oracle)?;
        return Ok(if opts.big {
            Box::new(BigCountingQuasimorphism::new(oracle.clone(), p)?)
        } else {
            let slack = opts.slack.unwrap_or(0);
            Box::new(CountingQuasimorphism::new(oracle.clone(), p)?.with_slack(slack, PATH_BUDGET))
        });
    }
    match &opts.fn_spec {
        Some(spec) => inputs::group_function(spec, oracle, genset(opts)),
        None => Err(CliError::Usage("--sigma-pattern or --fn is required".into())),
    }
}

pub fn qm_defect(opts: &Opts, _: &Tolerances) -> Result<Outcome, CliError> {
    let oracle = inputs::oracle(opts)?;
    let phi = quasimorphism(opts, &oracle)?;
    let report = defect_estimate(phi.as_ref(), &oracle, genset(opts), opts.radius.unwrap_or(4))?;
    Ok(Outcome::pass(to_value(&report)?))
}

pub fn qm_holder(opts: &Opts, _: &Tolerances) -> Result<Outcome, CliError> {
    let oracle = inputs::oracle(opts)?;
    let psi = quasimorphism(opts, &oracle)?;
    let genset = genset(opts);
    let a_text = opts
        .a
        .as_deref()
        .ok_or_else(|| CliError::Usage("--a is required".into()))?;
    let a = oracle.evaluate_str(a_text, genset)?;
    let report = holder_diagnostic(psi.as_ref(), &oracle, genset, &a, opts.radius.unwrap_or(10), PAIR_BUDGET)?;
    let violation = report.violation;
    let outcome = Outcome::with(!violation, to_value(&report)?);
    Ok(if violation { outcome.labeled("holder-violation") } else { outcome })
}

pub fn clt_drift(opts: &Opts, tol: &Tolerances) -> Result<Outcome, CliError> {
    let f = inputs::function(opts)?;
    let spectral = analyze(f.digraph())?;
    let report = drift_variance_fn(&spectral, &f)?;
    let agree = report.max_disagreement <= tol.verdict;
    let moments = match opts.n {
        Some(n) => Some(moment_oracle(&spectral, &f.dphi, n)?),
        None => None,
    };
    let mut result = to_value(&report)?;
    result["agreement"] = json!(agree);
    result["tolerance"] = json!(tol.verdict);
    result["moments"] = to_value(&moments)?;
    Ok(Outcome::with(agree, result))
}

pub fn clt_sample(opts: &Opts, _: &Tolerances) -> Result<Outcome, CliError> {
    let seed = seed(opts)?;
    let n = require(opts.n, "--n")?;
    let count = require(opts.count, "--count")?;
    let (digraph, dphi) = if opts.fn_spec.is_some() || opts.function.is_some() {
        let f = inputs::function(opts)?;
        (f.digraph().clone(), Some(f.dphi))
    } else {
        (inputs::digraph(opts)?, None)
    };
    let spectral = analyze(&digraph)?;
    let batch = sample(&spectral, dphi.as_deref(), n, count, seed)?;
    Ok(Outcome::pass(to_value(&batch)?))
}

pub fn clt_empirical(opts: &Opts, _: &Tolerances) -> Result<Outcome, CliError> {
    let seed = seed(opts)?;
    let n = require(opts.n, "--n")?;
    let count = require(opts.count, "--count")?;
    let f = inputs::function(opts)?;
    let spectral = analyze(f.digraph())?;
    let clt = drift_variance_fn(&spectral, &f)?;
    let report = empirical_clt(&spectral, &f.dphi, clt.drift, clt.sigma, n, count, seed)?;
    let passed = match (opts.ks_threshold, &report.ks) {
        (Some(t), Some(ks)) => ks.corrected < t,
        _ => true,
    };
    let csv = histogram_csv(&report.histogram);
    let mut outcome = Outcome::with(passed, to_value(&report)?);
    outcome.histogram = Some(csv);
    Ok(outcome)
}

pub fn clt_typicality(opts: &Opts, _: &Tolerances) -> Result<Outcome, CliError> {
    let seed = seed(opts)?;
    let n = require(opts.n, "--n")?;
    let m = require(opts.m, "--m")?;
    let length = opts.length.unwrap_or(n + m);
    let f = inputs::function(opts)?;
    let spectral = analyze(f.digraph())?;
    let clt = drift_variance_fn(&spectral, &f)?;
    let gamma = sample_ray(&spectral, length, seed)?;
    let profile = typicality_profile(&f, &gamma, n, m, clt.drift)?;
    let bins = histogram(&profile.values, -5.0, 5.0, HISTOGRAM_BINS);
    let scaled: Vec<f64> = if clt.sigma > 0.0 {
        profile.values.iter().map(|v| v / clt.sigma).collect()
    } else {
        profile.values.clone()
    };
    let mut outcome = Outcome::pass(json!({
        "length": profile.length,
        "n": profile.n,
        "m": profile.m,
        "seed": seed,
        "drift": clt.drift,
        "sigma": clt.sigma,
        "moments": profile.moments,
        "standardized_moments": moments(&scaled),
        "histogram": bins,
    }));
    outcome.histogram = Some(histogram_csv(&bins));
    Ok(outcome)
}

pub fn compare_gensets(opts: &Opts, _: &Tolerances) -> Result<Outcome, CliError> {
    let [s1, s2] = opts.genset.as_slice() else {
        return Err(CliError::Usage("compare gensets needs exactly two --genset values".into()));
    };
    let oracle = inputs::oracle(opts)?;
    let mut config = CompareConfig::default();
    if let Some(r) = opts.verify_radius {
        config.synthesis_radius = r;
    }
    if let Some(d) = opts.depth {
        config.max_depth = d;
    }
    if let Some(r) = opts.radius {
        config.growth_radius = r;
    }
    let report = bicomb::clt::compare_gensets(oracle, s1, s2, &config)?;
    let passed = report.inequality_holds && report.check_passed != Some(false);
    Ok(Outcome::with(passed, json!({ "config": config, "report": report })))
}
