use std::path::Path;
use std::process::Command;
use std::time::Instant;

use super::solution::{import_solution, SolutionDocument, SolverVerdict};
use super::{export_mps, SolveError, SolveResult, SolveStats, SolveStatus};
use crate::case::GridCase;
use crate::milp::{decode, MilpModel};
use crate::validate::validate;

pub const SOLVER_CMD_ENV: &str = "BLACKSTART_SOLVER_CMD";

/// Program plus argument template; `{mps}` and `{sol}` are replaced with the
/// model and solution paths.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolverCommand {
    pub program: String,
    pub args: Vec<String>,
}

impl SolverCommand {
    /// Splits a template on whitespace. Both placeholders must appear.
    pub fn parse(template: &str) -> Result<Self, SolveError> {
        let mut words = template.split_whitespace().map(String::from);
        let program = words
            .next()
            .ok_or_else(|| SolveError::Command("empty solver command".into()))?;
        let args: Vec<String> = words.collect();
        for placeholder in ["{mps}", "{sol}"] {
            if !args.iter().any(|a| a.contains(placeholder)) {
                return Err(SolveError::Command(format!("template lacks {placeholder}: `{template}`")));
            }
        }
        Ok(Self { program, args })
    }

    pub fn from_env() -> Result<Self, SolveError> {
        let template = std::env::var(SOLVER_CMD_ENV)
            .map_err(|_| SolveError::Command(format!("{SOLVER_CMD_ENV} is not set")))?;
        Self::parse(&template)
    }

    fn build(&self, mps: &Path, sol: &Path) -> Command {
        let mut cmd = Command::new(&self.program);
        for a in &self.args {
            cmd.arg(
                a.replace("{mps}", &mps.to_string_lossy())
                    .replace("{sol}", &sol.to_string_lossy()),
            );
        }
        cmd
    }
}

fn tail(bytes: &[u8]) -> String {
    let text = String::from_utf8_lossy(bytes);
    let lines: Vec<&str> = text.lines().collect();
    lines[lines.len().saturating_sub(5)..].join("\n")
}

/// Writes the model as MPS, runs the external solver, then imports, decodes
/// and validates its answer. Process and protocol failures come back as
/// status `Error` with a message; a schedule that fails validation comes
/// back as `Error` with the report attached.
pub fn solve_external(case: &GridCase, model: &MilpModel, command: &SolverCommand) -> Result<SolveResult, SolveError> {
    let clock = Instant::now();
    let dir = tempfile::tempdir()?;
    let mps = dir.path().join("model.mps");
    let sol = dir.path().join("model.sol");
    std::fs::write(&mps, export_mps(model))?;

    let stats = || SolveStats {
        wall_seconds: clock.elapsed().as_secs_f64(),
        explored: 0,
    };
    let fail = |message: String| Ok(SolveResult::without_solution(SolveStatus::Error, stats(), message));

    let output = match command.build(&mps, &sol).output() {
        Ok(o) => o,
        Err(e) => return fail(format!("cannot run `{}`: {e}", command.program)),
    };
    if !output.status.success() {
        return fail(format!("solver exited with {}: {}", output.status, tail(&output.stderr)));
    }
    let text = match std::fs::read_to_string(&sol) {
        Ok(t) => t,
        Err(e) => return fail(format!("no solution file: {e}")),
    };
    let (verdict, assignment) = match import_solution(model, &text) {
        Ok(SolutionDocument::Infeasible) => {
            return Ok(SolveResult::without_solution(SolveStatus::Infeasible, stats(), "solver reported infeasible"))
        }
        Ok(SolutionDocument::Values { verdict, assignment }) => (verdict, assignment),
        Err(e) => return fail(format!("solution file: {e}")),
    };
    let schedule = match decode(model, &assignment) {
        Ok(s) => s,
        Err(e) => return fail(format!("decode: {e}")),
    };
    let report = validate(case, &schedule)?;
    let status = match (report.pass, verdict) {
        (false, _) => SolveStatus::Error,
        (true, SolverVerdict::Optimal) => SolveStatus::Optimal,
        (true, SolverVerdict::Feasible) => SolveStatus::Feasible,
    };
    Ok(SolveResult {
        status,
        objective: Some(model.evaluate_objective(&assignment)),
        assignment: Some(assignment),
        schedule: Some(schedule),
        stats: stats(),
        message: (!report.pass).then(|| format!("solution fails validation: {:?}", report.tags())),
        report: Some(report),
    })
}
