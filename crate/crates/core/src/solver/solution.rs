//! Solution files: one `name value` pair per line, `#` comments, and an
//! optional status sentinel line (`=optimal=`, `=feasible=`, `=infeasible=`).

use thiserror::Error;

use crate::milp::{Assignment, MilpModel, INTEGRALITY_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverVerdict {
    Optimal,
    Feasible,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolutionDocument {
    Infeasible,
    Values {
        verdict: SolverVerdict,
        assignment: Assignment,
    },
}

#[derive(Debug, Error, PartialEq)]
pub enum SolutionError {
    #[error("line {line}: unknown variable `{name}`")]
    UnknownVariable { line: usize, name: String },
    #[error("line {line}: cannot parse value `{value}`")]
    BadValue { line: usize, value: String },
    #[error("line {line}: expected `name value`")]
    Malformed { line: usize },
    #[error("no value for continuous variable `{0}`")]
    MissingContinuous(String),
}

pub fn import_solution(model: &MilpModel, text: &str) -> Result<SolutionDocument, SolutionError> {
    let mut values: Vec<Option<f64>> = vec![None; model.variables.len()];
    let mut verdict = SolverVerdict::Optimal;
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let trimmed = raw.trim();
        match trimmed {
            "" => continue,
            "=infeasible=" => return Ok(SolutionDocument::Infeasible),
            "=feasible=" => {
                verdict = SolverVerdict::Feasible;
                continue;
            }
            "=optimal=" => continue,
            _ if trimmed.starts_with('#') => continue,
            _ => {}
        }
        let mut fields = trimmed.split_whitespace();
        let (Some(name), Some(value), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(SolutionError::Malformed { line });
        };
        let j = model.index_of(name).ok_or_else(|| SolutionError::UnknownVariable {
            line,
            name: name.to_string(),
        })?;
        let x: f64 = value.parse().map_err(|_| SolutionError::BadValue {
            line,
            value: value.to_string(),
        })?;
        if !x.is_finite() {
            return Err(SolutionError::BadValue {
                line,
                value: value.to_string(),
            });
        }
        values[j] = Some(x);
    }

    let assignment = values
        .into_iter()
        .enumerate()
        .map(|(j, x)| {
            let v = &model.variables[j];
            match x {
                None if v.integer => Ok(0.0),
                None => Err(SolutionError::MissingContinuous(model.var_name(j).to_string())),
                Some(x) if v.integer && (x - x.round()).abs() <= INTEGRALITY_TOL => Ok(x.round()),
                Some(x) => Ok(x),
            }
        })
        .collect::<Result<Vec<f64>, _>>()?;
    Ok(SolutionDocument::Values {
        verdict,
        assignment: Assignment(assignment),
    })
}

/// Renders an assignment in the solution-file format.
pub fn write_solution(model: &MilpModel, assignment: &Assignment) -> String {
    let mut out = String::from("=optimal=\n");
    for (j, x) in assignment.0.iter().enumerate() {
        out.push_str(&format!("{} {x:?}\n", model.var_name(j)));
    }
    out
}
