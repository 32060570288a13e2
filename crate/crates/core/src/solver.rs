//! External SMT solver pipeline: the script goes to a temporary file whose
//! path is passed as the last argument of the solver command, and the
//! solver's standard output is read back as its answer.

use std::io::Write as _;
use std::process::Command;

use log::debug;

use crate::ast::Interpretation;
use crate::dlcheck::satisfies;
use crate::emit::{emit_smtlib, read_solver_model, EmitOptions, SolverAnswer};
use crate::error::{Error, Result};
use crate::formula::{BoolVar, DlModel, Formula, FormulaKind, FormulaSet};

/// Environment variable naming the default solver command.
pub const SOLVER_ENV: &str = "TOC_SOLVER";

/// A solver command line such as `z3` or `cvc5 --lang smt2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolverCommand {
    pub program: String,
    pub args: Vec<String>,
}

impl SolverCommand {
    /// Splits a command line on whitespace.
    pub fn parse(cmd: &str) -> Result<Self> {
        let mut parts = cmd.split_whitespace().map(str::to_string);
        let program = parts.next().ok_or_else(|| Error::Solver("empty solver command".into()))?;
        Ok(Self { program, args: parts.collect() })
    }

    /// The command named by `TOC_SOLVER`, if set and non-empty.
    pub fn from_env() -> Option<Self> {
        std::env::var(SOLVER_ENV).ok().and_then(|s| Self::parse(&s).ok())
    }

    /// Runs the solver on `script` and returns its standard output.
    pub fn run(&self, script: &str) -> Result<String> {
        let mut file = tempfile::Builder::new().prefix("toc").suffix(".smt2").tempfile()?;
        file.write_all(script.as_bytes())?;
        file.flush()?;
        debug!("running {} on {}", self.program, file.path().display());
        let out = Command::new(&self.program)
            .args(&self.args)
            .arg(file.path())
            .output()
            .map_err(|e| Error::Solver(format!("cannot run `{}`: {e}", self.program)))?;
        let stdout = String::from_utf8(out.stdout).map_err(|_| Error::Solver("solver output is not UTF-8".into()))?;
        if stdout.trim().is_empty() {
            let stderr = String::from_utf8_lossy(&out.stderr);
            return Err(Error::Solver(format!("`{}` printed nothing ({})", self.program, stderr.trim())));
        }
        Ok(stdout)
    }
}

/// Asks the solver for one model of `fs`; the model is re-checked against
/// the formulas before it is returned.
pub fn solve(fs: &FormulaSet, solver: &SolverCommand) -> Result<SolverAnswer> {
    let script = emit_smtlib(fs, EmitOptions { model: true })?;
    let answer = read_solver_model(&solver.run(&script)?, fs)?;
    if let SolverAnswer::Sat(m) = &answer {
        if !satisfies(fs, m)? {
            return Err(Error::Solver("solver model violates the formula set".into()));
        }
    }
    Ok(answer)
}

/// Up to `cap` models with pairwise different base atoms, found by adding a
/// blocking clause over the base atoms after each answer.
pub fn solve_all(fs: &FormulaSet, solver: &SolverCommand, cap: usize) -> Result<Vec<DlModel>> {
    let mut fs = fs.clone();
    let mut models = Vec::new();
    while models.len() < cap {
        match solve(&fs, solver)? {
            SolverAnswer::Unsat => break,
            SolverAnswer::Sat(m) => {
                fs.push(FormulaKind::Constraint, blocking_clause(&fs, &m));
                models.push(m);
            }
        }
    }
    Ok(models)
}

fn blocking_clause(fs: &FormulaSet, m: &DlModel) -> Formula {
    let base = Interpretation::from_atoms(m.base_atoms());
    Formula::or(
        fs.bools
            .iter()
            .filter_map(|v| match v {
                BoolVar::Base(a) if base.contains(*a) => Some(Formula::not(Formula::base(*a))),
                BoolVar::Base(a) => Some(Formula::base(*a)),
                BoolVar::Aux(_) => None,
            })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_parsing() {
        let c = SolverCommand::parse("cvc5 --lang smt2").unwrap();
        assert_eq!(c.program, "cvc5");
        assert_eq!(c.args, vec!["--lang", "smt2"]);
        assert!(SolverCommand::parse("  ").is_err());
    }

    #[test]
    fn missing_solver_is_reported() {
        let c = SolverCommand::parse("/nonexistent/solver-binary").unwrap();
        assert!(matches!(c.run("(check-sat)"), Err(Error::Solver(_))));
    }
}
