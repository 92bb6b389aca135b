use std::sync::Arc;

use bicomb::combable::{synthesize_dphi, word_length_function, CombableFunction, FunctionBundle, GroupFunction};
use bicomb::combing::{lex_first_combing, reduced_word_combing, Combing, CombingBundle};
use bicomb::digraph::{DigraphDocument, LabeledDigraph};
use bicomb::fixtures::{fixture, zxz2_example_function};
use bicomb::group::{GroupDescription, GroupOracle, OracleConfig, STANDARD};
use bicomb::quasimorphism::{CountingQuasimorphism, GensetQuasimorphism, Pattern};
use bicomb::Error;
use serde::de::DeserializeOwned;
use serde_json::Value;

use crate::report::CliError;
use crate::Opts;

pub const DEFAULT_VERIFY_RADIUS: usize = 8;
pub const MAX_SYNTHESIS_DEPTH: usize = 3;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Reads a document that is either the bare value, a report whose `result`
/// is the value, or a report whose `result.bundle` is the value.
pub fn load<T: DeserializeOwned>(path: &str) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {path}: {e}")))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| usage(format!("{path}: {e}")))?;
    let candidates = [
        value.pointer("/result/bundle").cloned(),
        value.pointer("/result").cloned(),
        Some(value),
    ];
    let mut last = None;
    for v in candidates.into_iter().flatten() {
        match serde_json::from_value::<T>(v) {
            Ok(t) => return Ok(t),
            Err(e) => last = Some(e),
        }
    }
    Err(usage(format!("{path}: {}", last.expect("at least one candidate"))))
}

pub fn oracle_from_file(path: &str) -> Result<Arc<GroupOracle>, CliError> {
    let description: GroupDescription = load(path)?;
    Ok(Arc::new(GroupOracle::new(&description, OracleConfig::default())?))
}

fn genset_or_standard(opts: &Opts) -> &str {
    opts.genset.first().map(String::as_str).unwrap_or(STANDARD)
}

/// Builds a combing for a group file: the reduced-word automaton for the
/// standard letters of a free group, otherwise the lex-first automaton.
pub fn build_combing(oracle: Arc<GroupOracle>, opts: &Opts) -> Result<(Combing, Option<Value>), CliError> {
    let genset = genset_or_standard(opts);
    if oracle.is_free() && genset == STANDARD {
        return Ok((reduced_word_combing(oracle, genset)?, None));
    }
    let radius = opts.verify_radius.or(opts.radius).unwrap_or(6);
    let depth = opts.depth.unwrap_or(1);
    let (combing, report) = lex_first_combing(oracle, genset, None, depth, radius, depth.max(4))?;
    Ok((combing, Some(serde_json::to_value(report)?)))
}

/// The combing named by `--combing`, `--function`, `--fixture` or `--group-file`.
pub fn combing(opts: &Opts) -> Result<Combing, CliError> {
    if let Some(path) = &opts.combing {
        let bundle: CombingBundle = load(path)?;
        return Ok(Combing::from_bundle(&bundle, OracleConfig::default())?);
    }
    if let Some(path) = &opts.function {
        let bundle: FunctionBundle = load(path)?;
        return Ok(Combing::from_bundle(&bundle.combing, OracleConfig::default())?);
    }
    if let Some(name) = &opts.fixture {
        let f = fixture(name)?;
        if let Some(g) = opts.genset.first() {
            if *g != f.combing.genset {
                return Err(usage(format!(
                    "fixture {name} is combed over {}, not {g}",
                    f.combing.genset
                )));
            }
        }
        return Ok(f.combing);
    }
    if let Some(path) = &opts.group_file {
        return Ok(build_combing(oracle_from_file(path)?, opts)?.0);
    }
    Err(usage("one of --fixture, --group-file, --combing or --function is required"))
}

/// Oracle named by `--fixture` or `--group-file`.
pub fn oracle(opts: &Opts) -> Result<Arc<GroupOracle>, CliError> {
    if let Some(path) = &opts.group_file {
        return oracle_from_file(path);
    }
    if let Some(name) = &opts.fixture {
        return Ok(fixture(name)?.combing.oracle);
    }
    if opts.combing.is_some() || opts.function.is_some() {
        return Ok(combing(opts)?.oracle);
    }
    Err(usage("one of --fixture or --group-file is required"))
}

/// Digraph from `--digraph`, else from the combing sources.
pub fn digraph(opts: &Opts) -> Result<LabeledDigraph, CliError> {
    if let Some(path) = &opts.digraph {
        let doc: DigraphDocument = load(path)?;
        return Ok(LabeledDigraph::from_document(&doc)?);
    }
    if let Some(path) = &opts.function {
        return Ok(function_bundle(path)?.combing.digraph);
    }
    Ok(combing(opts)?.digraph)
}

fn function_bundle(path: &str) -> Result<CombableFunction, CliError> {
    let bundle: FunctionBundle = load(path)?;
    Ok(CombableFunction::from_bundle(&bundle, OracleConfig::default())?)
}

/// A group function from its text form.
pub fn group_function(spec: &str, oracle: &Arc<GroupOracle>, combing_genset: &str) -> Result<Box<dyn GroupFunction>, CliError> {
    let (head, arg) = match spec.split_once(':') {
        Some((h, a)) => (h, Some(a)),
        None => (spec, None),
    };
    Ok(match (head, arg) {
        ("word-length", None) => length_function(oracle.clone(), combing_genset)?,
        ("length", Some(s)) => length_function(oracle.clone(), s)?,
        ("counting", Some(w)) => {
            let pattern = Pattern::parse(oracle, w)?;
            Box::new(CountingQuasimorphism::new(oracle.clone(), pattern)?)
        }
        ("genset-qm", Some(s)) => Box::new(GensetQuasimorphism::new(oracle.clone(), s)?),
        ("zxz2-example", None) => Box::new(zxz2_example_function),
        _ => {
            return Err(usage(format!(
                "unknown function {spec:?}; expected word-length, length:S, counting:WORD, genset-qm:S or zxz2-example"
            )))
        }
    })
}

fn length_function(oracle: Arc<GroupOracle>, genset: &str) -> Result<Box<dyn GroupFunction>, CliError> {
    oracle.genset(genset)?;
    let genset = genset.to_string();
    Ok(Box::new(move |g: &bicomb::group::Element| -> bicomb::Result<i64> {
        Ok(oracle.word_length(g, &genset)? as i64)
    }))
}

/// Synthesizes `spec` over the combing: at `--depth` when given, else at the
/// first depth in `1..=3` that closes.
pub fn synthesize(combing: &Combing, spec: &str, opts: &Opts) -> Result<CombableFunction, CliError> {
    if spec == "word-length" {
        return Ok(word_length_function(combing));
    }
    let phi = group_function(spec, &combing.oracle, &combing.genset)?;
    let radius = opts.verify_radius.unwrap_or(DEFAULT_VERIFY_RADIUS.min(combing.verified_radius));
    let depths: Vec<usize> = match opts.depth {
        Some(d) => vec![d],
        None => (1..=MAX_SYNTHESIS_DEPTH).collect(),
    };
    let mut last = None;
    for d in depths {
        match synthesize_dphi(combing, phi.as_ref(), d, radius) {
            Ok(f) => return Ok(f),
            Err(e @ Error::NotWeaklyCombableAtDepth(_)) => last = Some(e),
            Err(e) => return Err(e.into()),
        }
    }
    Err(last.expect("at least one depth").into())
}

/// The combable function from `--function`, or `--fn` synthesized over the combing.
pub fn function(opts: &Opts) -> Result<CombableFunction, CliError> {
    if let Some(path) = &opts.function {
        return function_bundle(path);
    }
    let spec = opts
        .fn_spec
        .as_deref()
        .ok_or_else(|| usage("--fn or --function is required"))?;
    synthesize(&combing(opts)?, spec, opts)
}

pub fn require<T: Copy>(value: Option<T>, flag: &str) -> Result<T, CliError> {
    value.ok_or_else(|| usage(format!("{flag} is required")))
}
