//! Command-line front end for the `bicomb` library.

mod commands;
mod inputs;
mod report;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "bicomb", version, about = "Combings, Perron-Frobenius chains and CLT statistics for combable functions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build or validate a combing automaton.
    Combing {
        #[command(subcommand)]
        action: CombingAction,
    },
    /// Perron-Frobenius data of a combing digraph.
    Spectral {
        #[command(subcommand)]
        action: SpectralAction,
    },
    /// Synthesize or check a combable function.
    Fn {
        #[command(subcommand)]
        action: FnAction,
    },
    /// Counting quasimorphisms, defects and the Hölder diagnostic.
    Qm {
        #[command(subcommand)]
        action: QmAction,
    },
    /// Drift, variance, sampling and empirical CLT checks.
    Clt {
        #[command(subcommand)]
        action: CltAction,
    },
    /// Compare word lengths in two generating sets.
    Compare {
        #[command(subcommand)]
        action: CompareAction,
    },
}

#[derive(Subcommand)]
enum CombingAction {
    Build(Opts),
    Validate(Opts),
}

#[derive(Subcommand)]
enum SpectralAction {
    Analyze(Opts),
}

#[derive(Subcommand)]
enum FnAction {
    Synthesize(Opts),
    Check(Opts),
}

#[derive(Subcommand)]
enum QmAction {
    Count(Opts),
    Defect(Opts),
    Holder(Opts),
}

#[derive(Subcommand)]
enum CltAction {
    Drift(Opts),
    Sample(Opts),
    Empirical(Opts),
    Typicality(Opts),
}

#[derive(Subcommand)]
enum CompareAction {
    Gensets(Opts),
}

/// Flags shared by every subcommand; each uses the subset it needs.
#[derive(Args, Clone, Debug, Default, Serialize)]
pub struct Opts {
    /// Named fixture (F2_standard, F2_enlarged, PSL2Z, ZxZ2_L, ZxZ2_Lprime, F2xF2_concat).
    #[arg(long)]
    pub fixture: Option<String>,
    /// Group description document.
    #[arg(long)]
    pub group_file: Option<String>,
    /// Generating set name; repeat for `compare gensets`.
    #[arg(long)]
    pub genset: Vec<String>,
    /// Combing bundle produced by `combing build`.
    #[arg(long)]
    pub combing: Option<String>,
    /// Function bundle produced by `fn synthesize`.
    #[arg(long)]
    pub function: Option<String>,
    /// Bare digraph document.
    #[arg(long)]
    pub digraph: Option<String>,
    /// Function spec: word-length, length:S, counting:WORD, genset-qm:S, zxz2-example.
    #[arg(long = "fn")]
    pub fn_spec: Option<String>,
    #[arg(long)]
    pub radius: Option<usize>,
    #[arg(long)]
    pub verify_radius: Option<usize>,
    /// Refinement depth (synthesis) or cone depth (combing build).
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Window count for `clt typicality`.
    #[arg(long)]
    pub m: Option<usize>,
    /// Ray length for `clt typicality`.
    #[arg(long)]
    pub length: Option<usize>,
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub sigma_pattern: Option<String>,
    /// Word in the standard letters; repeatable.
    #[arg(long)]
    pub word: Vec<String>,
    /// Left multiplier `a` of the Hölder diagnostic.
    #[arg(long)]
    pub a: Option<String>,
    /// Count overlapping copies (Hölder diagnostic).
    #[arg(long)]
    pub big: bool,
    /// Extra path length allowed when maximizing counts.
    #[arg(long)]
    pub slack: Option<usize>,
    /// Largest path length for the semisimplicity growth fit.
    #[arg(long)]
    pub n_max: Option<usize>,
    /// Fail `clt empirical` when the KS distance reaches this value.
    #[arg(long)]
    pub ks_threshold: Option<f64>,
    /// Report path (defaults to standard output).
    #[arg(long)]
    pub out: Option<String>,
    /// Histogram CSV path.
    #[arg(long)]
    pub histogram: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, opts, run): (&str, Opts, commands::Runner) = match cli.command {
        Command::Combing { action } => match action {
            CombingAction::Build(o) => ("combing build", o, commands::combing_build),
            CombingAction::Validate(o) => ("combing validate", o, commands::combing_validate),
        },
        Command::Spectral { action } => match action {
            SpectralAction::Analyze(o) => ("spectral analyze", o, commands::spectral_analyze),
        },
        Command::Fn { action } => match action {
            FnAction::Synthesize(o) => ("fn synthesize", o, commands::fn_synthesize),
            FnAction::Check(o) => ("fn check", o, commands::fn_check),
        },
        Command::Qm { action } => match action {
            QmAction::Count(o) => ("qm count", o, commands::qm_count),
            QmAction::Defect(o) => ("qm defect", o, commands::qm_defect),
            QmAction::Holder(o) => ("qm holder", o, commands::qm_holder),
        },
        Command::Clt { action } => match action {
            CltAction::Drift(o) => ("clt drift", o, commands::clt_drift),
            CltAction::Sample(o) => ("clt sample", o, commands::clt_sample),
            CltAction::Empirical(o) => ("clt empirical", o, commands::clt_empirical),
            CltAction::Typicality(o) => ("clt typicality", o, commands::clt_typicality),
        },
        Command::Compare { action } => match action {
            CompareAction::Gensets(o) => ("compare gensets", o, commands::compare_gensets),
        },
    };
    report::execute(name, &opts, run)
}
