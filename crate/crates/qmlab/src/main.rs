//! Command-line front end.  Every subcommand resolves its inputs from flags
//! first and a `--config` file second, runs one verification or construction,
//! and writes a single report (JSON, or CSV for tabular outputs).
//!
//! Exit codes: 0 when every certified bound held, 1 when a certificate was
//! violated (the report still names a witness), 2 for usage and config
//! errors (nothing is written).

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde_json::json;

use qmlab::circle::{translation_number, TauMode, DEFAULT_CYCLE_BOUND};
use qmlab::config::{
    build_ladder_embedding, ActionConfig, GroupConfig, LiftConfig, OutputFormat, QmConfig,
    RunConfig, DEFAULT_DOUBLINGS, DEFAULT_ELEMENT_LENGTH, DEFAULT_ITERS, DEFAULT_MAX_LENGTH,
    DEFAULT_TRUNCATION,
};
use qmlab::ladder::{
    equivalence_test, integerize, IntegerizedQm, DEFAULT_EQUIVALENCE_ITERATIONS,
    DEFAULT_EQUIVALENCE_THRESHOLD,
};
use qmlab::qmcore::{defect_lower_bound_report, homogenize_claimed, Quasimorphism};
use qmlab::rational::format_rational;
use qmlab::triple::{certify_pipeline, verify_triple, PipelineBudgets};
use qmlab::words::{enumerate_words, word_of, IntMatrix, Presentation, Word};
use qmlab::{psl2z, Error, Result};

const INTEGERIZE_POWERS: u64 = 8;

#[derive(Parser)]
#[command(
    name = "qmlab",
    version,
    about = "Certified quasimorphisms from group actions on leveled spaces"
)]
struct Cli {
    /// JSON run configuration; explicit flags override its fields.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Report destination (defaults to stdout).
    #[arg(long, global = true, value_name = "PATH")]
    output: Option<PathBuf>,

    /// Report format; tabular commands default to csv, verdicts to json.
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

impl From<FormatArg> for OutputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Json => OutputFormat::Json,
            FormatArg::Csv => OutputFormat::Csv,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Check the partition, range, and cocycle axioms of an action's space.
    VerifyTriple(VerifyTripleArgs),
    /// Exhaustive defect lower bound for a quasimorphism descriptor.
    Defect(DefectArgs),
    /// Homogenize a quasimorphism at one element by repeated squaring.
    Homog(HomogArgs),
    /// Emit the ladder level table (word, level, slot).
    Embed(EmbedArgs),
    /// Trace ladder levels along powers g^n.
    Orbit(OrbitArgs),
    /// Compare two quasimorphisms through their integer levels.
    Equiv(EquivArgs),
    /// Translation number of a monotone circle lift.
    Rotnum(RotnumArgs),
    /// The letter-counting quasimorphism on the order-(2,3) free product.
    Psl2z {
        #[command(subcommand)]
        cmd: Psl2zCmd,
    },
    /// Run the full action-to-quasimorphism certificate chain.
    Pipeline(PipelineArgs),
}

#[derive(Args, Default)]
struct VerifyTripleArgs {
    /// Action descriptor: JSON or a bare kind name like "trivial-z".
    #[arg(long)]
    action: Option<String>,
    /// Half-width of the finite domain window the axioms are sampled on.
    #[arg(long)]
    truncation: Option<i64>,
}

#[derive(Args, Default)]
struct DefectArgs {
    /// Group descriptor, e.g. '{"kind":"free","rank":2}'.
    #[arg(long)]
    group: Option<String>,
    /// Quasimorphism descriptor, e.g. '{"kind":"counting","pattern":"ab"}'.
    #[arg(long)]
    qm: Option<String>,
    /// Longest word length swept.
    #[arg(long)]
    max_length: Option<u32>,
}

#[derive(Args, Default)]
struct HomogArgs {
    /// Group descriptor, e.g. '{"kind":"free","rank":2}'.
    #[arg(long)]
    group: Option<String>,
    /// Quasimorphism descriptor, e.g. '{"kind":"counting","pattern":"ab"}'.
    #[arg(long)]
    qm: Option<String>,
    /// Element to homogenize at.
    #[arg(long)]
    word: Option<String>,
    /// Squaring steps in the homogenization.
    #[arg(long)]
    doublings: Option<u32>,
}

#[derive(Args, Default)]
struct EmbedArgs {
    /// Group descriptor, e.g. '{"kind":"free","rank":2}'.
    #[arg(long)]
    group: Option<String>,
    /// Quasimorphism descriptor, e.g. '{"kind":"counting","pattern":"ab"}'.
    #[arg(long)]
    qm: Option<String>,
    /// Element whose homogenized value rescales levels to integers.
    #[arg(long)]
    witness: Option<String>,
    /// Longest word length swept.
    #[arg(long)]
    max_length: Option<u32>,
    /// Squaring steps in the homogenization.
    #[arg(long)]
    doublings: Option<u32>,
    /// Element length for the recorded commutation bound sweep.
    #[arg(long)]
    element_length: Option<u32>,
}

#[derive(Args, Default)]
struct OrbitArgs {
    /// Group descriptor, e.g. '{"kind":"free","rank":2}'.
    #[arg(long)]
    group: Option<String>,
    /// Quasimorphism descriptor, e.g. '{"kind":"counting","pattern":"ab"}'.
    #[arg(long)]
    qm: Option<String>,
    /// Element whose homogenized value rescales levels to integers.
    #[arg(long)]
    witness: Option<String>,
    /// Element whose powers are traced.
    #[arg(long)]
    g: Option<String>,
    /// Number of powers traced.
    #[arg(long)]
    iters: Option<u64>,
    /// Squaring steps in the homogenization.
    #[arg(long)]
    doublings: Option<u32>,
}

#[derive(Args, Default)]
struct EquivArgs {
    /// Group descriptor, e.g. '{"kind":"free","rank":2}'.
    #[arg(long)]
    group: Option<String>,
    /// Left quasimorphism descriptor.
    #[arg(long)]
    qm1: Option<String>,
    /// Right quasimorphism descriptor.
    #[arg(long)]
    qm2: Option<String>,
    /// Integerization witness for --qm1 (falls back to --witness).
    #[arg(long)]
    witness1: Option<String>,
    /// Integerization witness for --qm2 (falls back to --witness).
    #[arg(long)]
    witness2: Option<String>,
    /// Element whose homogenized value rescales levels to integers.
    #[arg(long)]
    witness: Option<String>,
    /// Length of the compared element sample.
    #[arg(long)]
    max_length: Option<u32>,
    /// Squaring steps in the homogenization.
    #[arg(long)]
    doublings: Option<u32>,
    /// Largest power tested before declaring "equivalent so far".
    #[arg(long)]
    iters: Option<u64>,
}

#[derive(Args, Default)]
struct RotnumArgs {
    /// Lift descriptor, e.g. '{"kind":"rotation","angle":"2/5"}'.
    #[arg(long)]
    map: Option<String>,
    /// "exact" (periodic-orbit detection) or "iter" (f^n(0)/n).
    #[arg(long)]
    mode: Option<String>,
    /// Iteration budget: orbit steps for exact, n for iter.
    #[arg(long)]
    n: Option<u64>,
}

#[derive(Subcommand)]
enum Psl2zCmd {
    /// Signed count of order-3 letters in the normal form.
    Count {
        /// Element in S/R letters, e.g. "S R S R^2".
        #[arg(long)]
        word: Option<String>,
    },
    /// Exhaustive defect sweep against the claimed bound.
    Defect {
        /// Longest word length swept.
        #[arg(long)]
        max_length: Option<u32>,
    },
    /// Matrix-backed homogenization of the letter count.
    Homog {
        /// 2x2 integer matrix, e.g. "[[1,1],[0,1]]".
        #[arg(long)]
        matrix: Option<String>,
        /// Squaring steps in the homogenization.
        #[arg(long)]
        doublings: Option<u32>,
    },
}

#[derive(Args, Default)]
struct PipelineArgs {
    /// Action descriptor: JSON or a bare kind name like "trivial-z".
    #[arg(long)]
    action: Option<String>,
    /// Half-width of the finite domain window the axioms are sampled on.
    #[arg(long)]
    truncation: Option<i64>,
    /// Length of the tested group-element sample.
    #[arg(long)]
    max_length: Option<u32>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    init_thread_pool();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_class(&e))
        }
    }
}

#[cfg(feature = "parallel")]
fn init_thread_pool() {
    if let Some(n) = std::env::var("QMLAB_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|n| *n > 0)
    {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

#[cfg(not(feature = "parallel"))]
fn init_thread_pool() {}

/// Errors that represent a violated certificate rather than bad input.
fn is_certificate_error(e: &Error) -> bool {
    matches!(
        e,
        Error::AxiomViolation { .. }
            | Error::CertificateFailed { .. }
            | Error::WidthExceeded { .. }
            | Error::ZeroWitness { .. }
            | Error::IntegerizationFailed { .. }
    )
}

fn exit_class(e: &Error) -> u8 {
    if is_certificate_error(e) {
        1
    } else {
        2
    }
}

/// One finished command: the verdict, the budgets it used, a JSON report,
/// and optionally a table for CSV rendering.
struct Outcome {
    command: &'static str,
    pass: bool,
    budgets: serde_json::Value,
    report: serde_json::Value,
    table: Option<Table>,
    default_format: OutputFormat,
}

struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

fn run(cli: Cli) -> Result<bool> {
    let cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let command = match cli.command {
        Some(c) => c,
        None => command_from_config(&cfg)?,
    };
    let outcome = dispatch(command, &cfg)?;

    let format = cli
        .format
        .map(OutputFormat::from)
        .or(cfg.output.format)
        .unwrap_or(outcome.default_format);
    let text = render(&outcome, format)?;

    match cli.output.as_ref().or(cfg.output.path.as_ref()) {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(outcome.pass)
}

fn command_from_config(cfg: &RunConfig) -> Result<Command> {
    let name = cfg.command.as_deref().ok_or_else(|| {
        Error::Config("no command: pass a subcommand or set \"command\" in --config".into())
    })?;
    Ok(match name {
        "verify-triple" => Command::VerifyTriple(Default::default()),
        "defect" => Command::Defect(Default::default()),
        "homog" => Command::Homog(Default::default()),
        "embed" => Command::Embed(Default::default()),
        "orbit" => Command::Orbit(Default::default()),
        "equiv" => Command::Equiv(Default::default()),
        "rotnum" => Command::Rotnum(Default::default()),
        "pipeline" => Command::Pipeline(Default::default()),
        "psl2z" => Command::Psl2z {
            cmd: if cfg.word.is_some() {
                Psl2zCmd::Count { word: None }
            } else if cfg.matrix.is_some() {
                Psl2zCmd::Homog { matrix: None, doublings: None }
            } else {
                Psl2zCmd::Defect { max_length: None }
            },
        },
        other => return Err(Error::Config(format!("unknown command {other:?}"))),
    })
}

fn dispatch(command: Command, cfg: &RunConfig) -> Result<Outcome> {
    match command {
        Command::VerifyTriple(args) => cmd_verify_triple(args, cfg),
        Command::Defect(args) => cmd_defect(args, cfg),
        Command::Homog(args) => cmd_homog(args, cfg),
        Command::Embed(args) => cmd_embed(args, cfg),
        Command::Orbit(args) => cmd_orbit(args, cfg),
        Command::Equiv(args) => cmd_equiv(args, cfg),
        Command::Rotnum(args) => cmd_rotnum(args, cfg),
        Command::Psl2z { cmd } => cmd_psl2z(cmd, cfg),
        Command::Pipeline(args) => cmd_pipeline(args, cfg),
    }
}

/// Parses a descriptor given either as JSON or as a bare kind name.
fn parse_descriptor<T: DeserializeOwned>(s: &str) -> Result<T> {
    let trimmed = s.trim();
    let text = if trimmed.starts_with('{') {
        trimmed.to_string()
    } else {
        format!("{{\"kind\":\"{trimmed}\"}}")
    };
    Ok(serde_json::from_str(&text)?)
}

fn resolve<T: Clone + DeserializeOwned>(
    flag: Option<&String>,
    from_cfg: Option<&T>,
    what: &str,
) -> Result<T> {
    match (flag, from_cfg) {
        (Some(s), _) => parse_descriptor(s),
        (None, Some(v)) => Ok(v.clone()),
        (None, None) => Err(Error::Config(format!(
            "missing {what}: pass --{what} or set it in --config"
        ))),
    }
}

fn resolve_str(flag: Option<&String>, from_cfg: Option<&String>, what: &str) -> Result<String> {
    flag.or(from_cfg).cloned().ok_or_else(|| {
        Error::Config(format!("missing {what}: pass --{what} or set it in --config"))
    })
}

fn positive<T: PartialOrd + Default + std::fmt::Display>(value: T, name: &str) -> Result<T> {
    if value <= T::default() {
        return Err(Error::Config(format!("{name} must be positive, got {value}")));
    }
    Ok(value)
}

fn build_group_qm(
    group_flag: Option<&String>,
    qm_flag: Option<&String>,
    cfg: &RunConfig,
) -> Result<(GroupConfig, QmConfig, std::sync::Arc<Presentation>, Quasimorphism)> {
    let group: GroupConfig = resolve(group_flag, cfg.group.as_ref(), "group")?;
    let qm: QmConfig = resolve(qm_flag, cfg.qm.as_ref(), "qm")?;
    let pres = group.build()?;
    let mu = qm.build(&pres)?;
    Ok((group, qm, pres, mu))
}

fn integerized(
    pres: &std::sync::Arc<Presentation>,
    mu: &Quasimorphism,
    witness: &str,
    doublings: u32,
) -> Result<IntegerizedQm> {
    let g0 = Word::parse(pres, witness)?;
    let (iq, _) = integerize(mu, &g0, doublings, INTEGERIZE_POWERS)?;
    Ok(iq)
}

fn cmd_verify_triple(args: VerifyTripleArgs, cfg: &RunConfig) -> Result<Outcome> {
    let action: ActionConfig = resolve(args.action.as_ref(), cfg.action.as_ref(), "action")?;
    let truncation = positive(
        args.truncation
            .or(cfg.budgets.truncation)
            .unwrap_or(DEFAULT_TRUNCATION),
        "truncation",
    )?;
    let built = action.build()?;
    let report = verify_triple(&built.triple, truncation);
    let pass = report.pass;
    let mut body = json!({
        "triple": built.triple.label(),
        "action": built.action.label(),
        "axioms": report,
    });
    if let Some(e) = &built.embedding {
        body["ladder"] = json!({
            "commutation_bound": format_rational(e.b_bound()),
            "summary": e.summary(),
        });
    }
    Ok(Outcome {
        command: "verify-triple",
        pass,
        budgets: json!({ "truncation": truncation }),
        report: body,
        table: None,
        default_format: OutputFormat::Json,
    })
}

fn cmd_defect(args: DefectArgs, cfg: &RunConfig) -> Result<Outcome> {
    let (_, _, _, mu) = build_group_qm(args.group.as_ref(), args.qm.as_ref(), cfg)?;
    let max_length = positive(
        args.max_length
            .or(cfg.budgets.max_length)
            .unwrap_or(DEFAULT_MAX_LENGTH),
        "max_length",
    )?;
    let report = defect_lower_bound_report(&mu, max_length)?;
    let claimed = mu.claimed_defect().cloned();
    let pass = claimed.as_ref().is_none_or(|c| report.observed <= *c);
    let body = json!({
        "qm": mu.label(),
        "observed": format_rational(&report.observed),
        "witness": report.witness.as_ref().map(|(x, y)| [x.to_string(), y.to_string()]),
        "pairs_checked": report.pairs_checked,
        "claimed": claimed.as_ref().map(format_rational),
        "comparison": claimed.as_ref().map(|c| {
            format!(
                "observed {} <= claimed {}: {}",
                format_rational(&report.observed),
                format_rational(c),
                report.observed <= *c
            )
        }),
    });
    Ok(Outcome {
        command: "defect",
        pass,
        budgets: json!({ "max_length": max_length }),
        report: body,
        table: None,
        default_format: OutputFormat::Json,
    })
}

fn cmd_homog(args: HomogArgs, cfg: &RunConfig) -> Result<Outcome> {
    let (_, _, pres, mu) = build_group_qm(args.group.as_ref(), args.qm.as_ref(), cfg)?;
    let word = resolve_str(args.word.as_ref(), cfg.word.as_ref(), "word")?;
    let doublings = positive(
        args.doublings
            .or(cfg.budgets.doublings)
            .unwrap_or(DEFAULT_DOUBLINGS),
        "doublings",
    )?;
    let g = Word::parse(&pres, &word)?;
    let hom = homogenize_claimed(&mu, &g, doublings)?;
    let body = json!({
        "qm": mu.label(),
        "word": g.to_string(),
        "raw": format_rational(&mu.eval(&g)),
        "homogenization": hom,
    });
    Ok(Outcome {
        command: "homog",
        pass: true,
        budgets: json!({ "doublings": doublings }),
        report: body,
        table: None,
        default_format: OutputFormat::Json,
    })
}

fn cmd_embed(args: EmbedArgs, cfg: &RunConfig) -> Result<Outcome> {
    let group: GroupConfig = resolve(args.group.as_ref(), cfg.group.as_ref(), "group")?;
    let qm: QmConfig = resolve(args.qm.as_ref(), cfg.qm.as_ref(), "qm")?;
    let witness = resolve_str(args.witness.as_ref(), cfg.witness.as_ref(), "witness")?;
    let max_length = positive(
        args.max_length
            .or(cfg.budgets.max_length)
            .unwrap_or(DEFAULT_MAX_LENGTH),
        "max_length",
    )?;
    let doublings = positive(
        args.doublings
            .or(cfg.budgets.doublings)
            .unwrap_or(DEFAULT_DOUBLINGS),
        "doublings",
    )?;
    let element_length =
        positive(args.element_length.unwrap_or(DEFAULT_ELEMENT_LENGTH), "element_length")?;

    let e = build_ladder_embedding(&group, &qm, &witness, max_length, doublings, element_length)?;
    let mut rows = Vec::new();
    let mut levels = Vec::new();
    for w in e.words() {
        let p = e.point_of(w).expect("every enumerated word is placed");
        rows.push(vec![w.to_string(), p.level.to_string(), p.slot.to_string()]);
        levels.push(json!({ "word": w.to_string(), "level": p.level, "slot": p.slot }));
    }
    let body = json!({
        "qm": e.integerized().base().label(),
        "witness": e.integerized().reference().to_string(),
        "scale": format_rational(e.integerized().scale()),
        "commutation_bound": format_rational(e.b_bound()),
        "commutation_witness": e.b_witness(),
        "summary": e.summary(),
        "levels": levels,
    });
    Ok(Outcome {
        command: "embed",
        pass: true,
        budgets: json!({
            "max_length": max_length,
            "doublings": doublings,
            "element_length": element_length,
        }),
        report: body,
        table: Some(Table { header: vec!["word", "level", "slot"], rows }),
        default_format: OutputFormat::Csv,
    })
}

fn cmd_orbit(args: OrbitArgs, cfg: &RunConfig) -> Result<Outcome> {
    let (_, _, pres, mu) = build_group_qm(args.group.as_ref(), args.qm.as_ref(), cfg)?;
    let witness = resolve_str(args.witness.as_ref(), cfg.witness.as_ref(), "witness")?;
    let g_text = resolve_str(args.g.as_ref(), cfg.g.as_ref(), "g")?;
    let iters =
        positive(args.iters.or(cfg.budgets.iters).unwrap_or(DEFAULT_ITERS), "iters")?;
    let doublings = positive(
        args.doublings
            .or(cfg.budgets.doublings)
            .unwrap_or(DEFAULT_DOUBLINGS),
        "doublings",
    )?;
    let iq = integerized(&pres, &mu, &witness, doublings)?;
    let g = Word::parse(&pres, &g_text)?;

    let mut rows = Vec::new();
    let mut pairs = Vec::new();
    let mut power = Word::identity(&pres);
    for n in 0..=iters {
        if n > 0 {
            power = power.multiply(&g)?;
        }
        let level = iq.level_of(&power)?;
        rows.push(vec![n.to_string(), level.to_string()]);
        pairs.push(json!([n, level]));
    }
    let body = json!({
        "qm": mu.label(),
        "g": g.to_string(),
        "levels": pairs,
    });
    Ok(Outcome {
        command: "orbit",
        pass: true,
        budgets: json!({ "iters": iters, "doublings": doublings }),
        report: body,
        table: Some(Table { header: vec!["n", "level"], rows }),
        default_format: OutputFormat::Csv,
    })
}

fn cmd_equiv(args: EquivArgs, cfg: &RunConfig) -> Result<Outcome> {
    let group: GroupConfig = resolve(args.group.as_ref(), cfg.group.as_ref(), "group")?;
    let qm1: QmConfig = resolve(args.qm1.as_ref(), cfg.qm1.as_ref(), "qm1")?;
    let qm2: QmConfig = resolve(args.qm2.as_ref(), cfg.qm2.as_ref(), "qm2")?;
    let shared = args.witness.as_ref().or(cfg.witness.as_ref());
    let witness1 = resolve_str(
        args.witness1.as_ref().or(shared),
        cfg.witness1.as_ref(),
        "witness1",
    )?;
    let witness2 = resolve_str(
        args.witness2.as_ref().or(shared),
        cfg.witness2.as_ref(),
        "witness2",
    )?;
    // Short sample by default: the trace grows by one word multiply per
    // element per power.
    let sample_length = positive(args.max_length.or(cfg.budgets.max_length).unwrap_or(2), "max_length")?;
    let doublings = positive(
        args.doublings
            .or(cfg.budgets.doublings)
            .unwrap_or(DEFAULT_DOUBLINGS),
        "doublings",
    )?;
    let iters = positive(
        args.iters
            .or(cfg.budgets.iters)
            .unwrap_or(DEFAULT_EQUIVALENCE_ITERATIONS),
        "iters",
    )?;

    let pres = group.build()?;
    let mu1 = qm1.build(&pres)?;
    let mu2 = qm2.build(&pres)?;
    let left = integerized(&pres, &mu1, &witness1, doublings)?;
    let right = integerized(&pres, &mu2, &witness2, doublings)?;
    let sample: Vec<Word> = enumerate_words(&pres, sample_length)?
        .into_iter()
        .filter(|w| !w.is_identity())
        .collect();
    let report = equivalence_test(&left, &right, &sample, iters, DEFAULT_EQUIVALENCE_THRESHOLD)?;
    let body = serde_json::to_value(&report)?;
    Ok(Outcome {
        command: "equiv",
        pass: true,
        budgets: json!({
            "max_length": sample_length,
            "doublings": doublings,
            "iters": iters,
            "threshold": DEFAULT_EQUIVALENCE_THRESHOLD,
        }),
        report: body,
        table: None,
        default_format: OutputFormat::Json,
    })
}

fn cmd_rotnum(args: RotnumArgs, cfg: &RunConfig) -> Result<Outcome> {
    let map: LiftConfig = resolve(args.map.as_ref(), cfg.map.as_ref(), "map")?;
    let mode_name = args
        .mode
        .as_ref()
        .or(cfg.mode.as_ref())
        .map(String::as_str)
        .unwrap_or("exact");
    let n = args.n.or(cfg.n);
    let mode = match mode_name {
        "exact" => TauMode::Exact { max_steps: positive(n.unwrap_or(DEFAULT_CYCLE_BOUND), "n")? },
        "iter" => TauMode::Iterative { iterations: positive(n.unwrap_or(DEFAULT_ITERS), "n")? },
        other => {
            return Err(Error::Config(format!(
                "unknown mode {other:?}: expected \"exact\" or \"iter\""
            )))
        }
    };
    let f = map.build()?;
    let result = translation_number(&f, &mode);
    let body = serde_json::to_value(&result)?;
    Ok(Outcome {
        command: "rotnum",
        pass: true,
        budgets: json!({ "mode": mode_name, "n": n }),
        report: body,
        table: None,
        default_format: OutputFormat::Json,
    })
}

fn cmd_psl2z(cmd: Psl2zCmd, cfg: &RunConfig) -> Result<Outcome> {
    match cmd {
        Psl2zCmd::Count { word } => {
            let text = resolve_str(word.as_ref(), cfg.word.as_ref(), "word")?;
            let pres = psl2z::standard_presentation();
            let w = Word::parse(&pres, &text)?;
            let count = psl2z::rademacher_count(&w);
            let body = json!({
                "word": w.to_string(),
                "count": count,
            });
            Ok(Outcome {
                command: "psl2z",
                pass: true,
                budgets: json!({}),
                report: body,
                table: None,
                default_format: OutputFormat::Json,
            })
        }
        Psl2zCmd::Defect { max_length } => {
            let max_length = positive(
                max_length.or(cfg.budgets.max_length).unwrap_or(DEFAULT_MAX_LENGTH),
                "max_length",
            )?;
            let report = psl2z::rademacher_defect(max_length)?;
            let claimed = psl2z::rademacher_qm()?
                .claimed_defect()
                .cloned()
                .expect("letter count carries a claimed defect");
            let pass = report.observed <= claimed;
            let body = json!({
                "observed": format_rational(&report.observed),
                "witness": report.witness.as_ref().map(|(x, y)| [x.to_string(), y.to_string()]),
                "pairs_checked": report.pairs_checked,
                "claimed": format_rational(&claimed),
                "comparison": format!(
                    "observed {} <= claimed {}: {}",
                    format_rational(&report.observed),
                    format_rational(&claimed),
                    pass
                ),
            });
            Ok(Outcome {
                command: "psl2z",
                pass,
                budgets: json!({ "max_length": max_length }),
                report: body,
                table: None,
                default_format: OutputFormat::Json,
            })
        }
        Psl2zCmd::Homog { matrix, doublings } => {
            let text = resolve_str(matrix.as_ref(), cfg.matrix.as_ref(), "matrix")?;
            let doublings = positive(
                doublings.or(cfg.budgets.doublings).unwrap_or(DEFAULT_DOUBLINGS),
                "doublings",
            )?;
            let entries: [[i64; 2]; 2] = serde_json::from_str(&text)?;
            let m = IntMatrix::from_i64(
                entries[0][0],
                entries[0][1],
                entries[1][0],
                entries[1][1],
            )?;
            let hom = psl2z::homogenized_rademacher_matrix(&m, doublings)?;
            let word = word_of(&psl2z::standard_presentation(), &m)?;
            let body = json!({
                "matrix": entries,
                "word": word.to_string(),
                "homogenization": hom,
            });
            Ok(Outcome {
                command: "psl2z",
                pass: true,
                budgets: json!({ "doublings": doublings }),
                report: body,
                table: None,
                default_format: OutputFormat::Json,
            })
        }
    }
}

fn cmd_pipeline(args: PipelineArgs, cfg: &RunConfig) -> Result<Outcome> {
    let action: ActionConfig = resolve(args.action.as_ref(), cfg.action.as_ref(), "action")?;
    let mut budgets = PipelineBudgets::default();
    budgets.truncation = positive(
        args.truncation
            .or(cfg.budgets.truncation)
            .unwrap_or(budgets.truncation),
        "truncation",
    )?;
    budgets.g_len = positive(
        args.max_length.or(cfg.budgets.max_length).unwrap_or(budgets.g_len),
        "max_length",
    )?;

    let built = action.build()?;
    let (pass, body) = match certify_pipeline(&built.triple, &built.action, &budgets) {
        Ok(outcome) => {
            let pass = outcome.report.pass;
            (pass, serde_json::to_value(&outcome.report)?)
        }
        Err(e) if is_certificate_error(&e) => (
            false,
            json!({
                "pass": false,
                "failure": e.to_string(),
            }),
        ),
        Err(e) => return Err(e),
    };
    Ok(Outcome {
        command: "pipeline",
        pass,
        budgets: json!({
            "truncation": budgets.truncation,
            "max_length": budgets.g_len,
            "defect_length": budgets.defect_len,
        }),
        report: body,
        table: None,
        default_format: OutputFormat::Json,
    })
}

fn render(outcome: &Outcome, format: OutputFormat) -> Result<String> {
    let stamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    match format {
        OutputFormat::Json => {
            let envelope = json!({
                "command": outcome.command,
                "timestamp_unix": stamp,
                "budgets": outcome.budgets,
                "verdict_basis": "sample-certified within the stated budgets",
                "pass": outcome.pass,
                "report": outcome.report,
            });
            let mut text = serde_json::to_string_pretty(&envelope)?;
            text.push('\n');
            Ok(text)
        }
        OutputFormat::Csv => {
            let table = outcome.table.as_ref().ok_or_else(|| {
                Error::Config(format!(
                    "{} has no tabular form; use --format json",
                    outcome.command
                ))
            })?;
            let mut text = String::new();
            text.push_str(&format!("# command={}\n", outcome.command));
            text.push_str(&format!("# budgets={}\n", outcome.budgets));
            text.push_str(&format!("# pass={}\n", outcome.pass));
            text.push_str(&format!("# timestamp_unix={stamp}\n"));
            let mut writer = csv::Writer::from_writer(Vec::new());
            writer
                .write_record(&table.header)
                .and_then(|()| table.rows.iter().try_for_each(|r| writer.write_record(r)))
                .map_err(|e| Error::Config(format!("csv rendering failed: {e}")))?;
            let bytes = writer
                .into_inner()
                .map_err(|e| Error::Config(format!("csv rendering failed: {e}")))?;
            text.push_str(&String::from_utf8(bytes).expect("csv output is utf8"));
            Ok(text)
        }
    }
}
