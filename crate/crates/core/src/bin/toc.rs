use std::collections::BTreeMap;
use std::io::{Read as _, Write as _};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use toc_core::ast::Program;
use toc_core::check::{check_program, CheckOptions, DEFAULT_MAX_ATOMS};
use toc_core::emit::{emit_smtlib, EmitOptions, SolverAnswer};
use toc_core::formula::{DlModel, FormulaSet};
use toc_core::fuzz::{run_fuzz, FuzzOptions};
use toc_core::normtest::{cardinality_rule, check_proposition, random_weight_rule, Proposition};
use toc_core::parser::{parse_program, SourceProgram};
use toc_core::solver::{solve, solve_all, SolverCommand, SOLVER_ENV};
use toc_core::toc::{toc_program, TocOptions};
use toc_core::Error;

const EXIT_PARSE: u8 = 1;
const EXIT_UNSUPPORTED: u8 = 2;
const EXIT_MISMATCH: u8 = 3;
const EXIT_SOLVER: u8 = 4;
const EXIT_MODEL: u8 = 5;

/// Translates ground weight-constraint programs into difference logic with
/// pseudo-Boolean constraints, and checks the translation against a
/// reference stable-model interpreter.
#[derive(Parser)]
#[command(name = "toc", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the translation of a program.
    Translate(TranslateArgs),
    /// Compare the translation with the reference semantics.
    Check(CheckArgs),
    /// Check randomly generated programs.
    Fuzz(FuzzArgs),
    /// Solve a program through an external SMT solver.
    Solve(SolveArgs),
}

#[derive(Args)]
struct EncodingArgs {
    /// Drop the strong ranking constraints.
    #[arg(long)]
    no_strong: bool,
    /// Encode upper bounds through a separate violation atom.
    #[arg(long)]
    vub_form: bool,
    /// Encode small aggregates by their satisfying sets.
    #[arg(long)]
    extensional: bool,
}

impl EncodingArgs {
    fn options(&self) -> TocOptions {
        TocOptions { no_strong: self.no_strong, vub_form: self.vub_form, extensional: self.extensional }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Smtlib,
    Debug,
}

#[derive(Args)]
struct TranslateArgs {
    /// Program file, or `-` for standard input.
    input: PathBuf,
    #[arg(long, short)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "smtlib")]
    format: Format,
    /// Append `(get-model)` to the SMT-LIB script.
    #[arg(long)]
    get_model: bool,
    #[command(flatten)]
    encoding: EncodingArgs,
}

#[derive(Args)]
struct CheckArgs {
    input: PathBuf,
    #[arg(long, default_value_t = DEFAULT_MAX_ATOMS)]
    max_atoms: usize,
    #[command(flatten)]
    encoding: EncodingArgs,
}

#[derive(Args)]
struct FuzzArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    count: usize,
    #[arg(long, default_value_t = 7)]
    max_atoms: usize,
    #[arg(long, default_value_t = 10)]
    max_rules: usize,
    /// Check aggregate encodings against subset normalization instead:
    /// every cardinality rule over at most five atoms, then `count` random
    /// weight rules.
    #[arg(long)]
    props: bool,
    /// Where to write the first counterexample.
    #[arg(long)]
    repro: Option<PathBuf>,
    #[command(flatten)]
    encoding: EncodingArgs,
}

#[derive(Args)]
struct SolveArgs {
    input: PathBuf,
    /// Solver command; the script path is appended as its last argument.
    #[arg(long, env = SOLVER_ENV)]
    solver: String,
    /// Enumerate stable models instead of returning one.
    #[arg(long)]
    all: bool,
    #[arg(long, default_value_t = 1000)]
    max_models: usize,
    #[command(flatten)]
    encoding: EncodingArgs,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Translate(a) => translate(a),
        Command::Check(a) => check(a),
        Command::Fuzz(a) => fuzz(a),
        Command::Solve(a) => solve_cmd(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Syntax { .. } | Error::Weight { .. } | Error::UnknownAtom(_) | Error::Io(_) => EXIT_PARSE,
        Error::Solver(_) => EXIT_SOLVER,
        Error::SolverResponse { .. } => EXIT_MODEL,
        _ => EXIT_UNSUPPORTED,
    }
}

fn read_program(path: &PathBuf) -> Result<Program, Error> {
    let text = if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s)?;
        s
    } else {
        std::fs::read_to_string(path)?
    };
    parse_program(&SourceProgram::new(text, path.display().to_string()))
}

fn report(value: &impl Serialize) {
    println!("{}", serde_json::to_string(value).expect("reports serialize"));
}

fn translate(a: TranslateArgs) -> Result<u8, Error> {
    let p = read_program(&a.input)?;
    let fs = toc_program(&p, a.encoding.options());
    let text = match a.format {
        Format::Smtlib => emit_smtlib(&fs, EmitOptions { model: a.get_model })?,
        Format::Debug => {
            fs.validate()?;
            fs.to_debug_string()
        }
    };
    match a.out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(0)
}

fn check(a: CheckArgs) -> Result<u8, Error> {
    let p = read_program(&a.input)?;
    let r = check_program(&p, CheckOptions { max_atoms: a.max_atoms, toc: a.encoding.options() })?;
    report(&r);
    Ok(if r.passed() { 0 } else { EXIT_MISMATCH })
}

fn fuzz(a: FuzzArgs) -> Result<u8, Error> {
    if a.props {
        return props(&a);
    }
    let opts = FuzzOptions {
        seed: a.seed,
        count: a.count,
        max_atoms: a.max_atoms,
        max_rules: a.max_rules,
        toc: a.encoding.options(),
    };
    let r = run_fuzz(&opts)?;
    if let (Some(f), Some(path)) = (&r.first_failure, &a.repro) {
        std::fs::write(path, &f.program)?;
    }
    report(&r);
    Ok(if r.first_failure.is_none() { 0 } else { EXIT_MISMATCH })
}

#[derive(Serialize)]
struct PropsReport {
    status: &'static str,
    seed: u64,
    cardinality_rules: usize,
    weight_rules: usize,
    first_failure: Option<PropsFailure>,
}

#[derive(Serialize)]
struct PropsFailure {
    rule: String,
    variant: u8,
    failures: Vec<String>,
}

fn props(a: &FuzzArgs) -> Result<u8, Error> {
    let mut cases = Vec::new();
    for n in 1..=5 {
        for l in 1..=n as u64 {
            let variant = if l == 1 { Proposition::UnitCardinality } else { Proposition::Cardinality };
            cases.push((cardinality_rule(n, l), variant));
        }
    }
    let cardinality_rules = cases.len();
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    for _ in 0..a.count {
        cases.push((random_weight_rule(&mut rng, 5, 8, 20), Proposition::Weight));
    }
    let mut first_failure = None;
    for ((rule, sig), variant) in &cases {
        let r = check_proposition(rule, sig, *variant)?;
        if !r.passed() {
            let text = toc_core::parser::render_program(&Program::new(sig.clone(), vec![rule.clone()])?);
            if let Some(path) = &a.repro {
                std::fs::write(path, &text)?;
            }
            first_failure = Some(PropsFailure { rule: text, variant: r.variant, failures: r.failures });
            break;
        }
    }
    let failed = first_failure.is_some();
    report(&PropsReport {
        status: if failed { "FAIL" } else { "PASS" },
        seed: a.seed,
        cardinality_rules,
        weight_rules: a.count,
        first_failure,
    });
    Ok(if failed { EXIT_MISMATCH } else { 0 })
}

#[derive(Serialize)]
struct SolveReport {
    status: &'static str,
    models: Vec<StableModel>,
}

#[derive(Serialize)]
struct StableModel {
    atoms: Vec<String>,
    /// Levels of the true atoms of recursive scopes.
    ranks: BTreeMap<String, i64>,
}

fn stable_model(p: &Program, fs: &FormulaSet, m: &DlModel) -> StableModel {
    let visible = p.signature.visible_ids();
    let true_atoms = m.base_atoms();
    StableModel {
        atoms: true_atoms.iter().filter(|a| visible.contains(a)).map(|&a| p.name(a).to_string()).collect(),
        ranks: fs
            .level_vars()
            .filter(|a| true_atoms.contains(a))
            .filter_map(|a| m.level(a).map(|l| (p.name(a).to_string(), l)))
            .collect(),
    }
}

fn solve_cmd(a: SolveArgs) -> Result<u8, Error> {
    let p = read_program(&a.input)?;
    let fs = toc_program(&p, a.encoding.options());
    let solver = SolverCommand::parse(&a.solver)?;
    let models = if a.all {
        solve_all(&fs, &solver, a.max_models)?
    } else {
        match solve(&fs, &solver)? {
            SolverAnswer::Sat(m) => vec![m],
            SolverAnswer::Unsat => Vec::new(),
        }
    };
    let status = if models.is_empty() { "UNSATISFIABLE" } else { "SATISFIABLE" };
    report(&SolveReport { status, models: models.iter().map(|m| stable_model(&p, &fs, m)).collect() });
    Ok(0)
}
