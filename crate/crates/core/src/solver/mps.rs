//! Free-format MPS writer and the matching reader.
//!
//! The reader accepts exactly the dialect the writer emits (see
//! `docs/mps_dialect.md`); it exists for round-trip tests and tooling, not as
//! a general MPS parser.

use std::fmt::Write as _;

use thiserror::Error;

use crate::milp::{Constraint, MilpModel, Sense, VarRef, Variable};

const OBJECTIVE_ROW: &str = "obj";
const SET_NAME: &str = "RHS";
const BOUND_NAME: &str = "BND";

#[derive(Debug, Error, PartialEq)]
pub enum MpsError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown row `{name}`")]
    UnknownRow { line: usize, name: String },
    #[error("line {line}: column `{name}` does not follow the variable naming grammar")]
    BadColumn { line: usize, name: String },
    #[error("missing ENDATA")]
    Truncated,
}

/// Integral values print without an exponent; everything else carries 17
/// significant digits so that parsing recovers the exact `f64`.
fn number(x: f64) -> String {
    if x == x.trunc() && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x:.16e}")
    }
}

fn sense_code(s: Sense) -> &'static str {
    match s {
        Sense::Le => "L",
        Sense::Ge => "G",
        Sense::Eq => "E",
    }
}

pub fn export_mps(model: &MilpModel) -> String {
    let mut out = String::new();
    let w = &mut out;
    writeln!(w, "NAME blackstart").unwrap();
    writeln!(w, "OBJSENSE").unwrap();
    writeln!(w, "    MIN").unwrap();
    writeln!(w, "ROWS").unwrap();
    writeln!(w, " N {OBJECTIVE_ROW}").unwrap();
    for c in &model.constraints {
        writeln!(w, " {} {}", sense_code(c.sense), c.name).unwrap();
    }

    // Column-major view of the constraint matrix.
    let mut columns: Vec<Vec<(usize, f64)>> = vec![Vec::new(); model.variables.len()];
    for (i, c) in model.constraints.iter().enumerate() {
        for &(j, a) in &c.terms {
            columns[j].push((i, a));
        }
    }
    let mut cost = vec![0.0; model.variables.len()];
    for &(j, c) in &model.objective {
        cost[j] = c;
    }

    writeln!(w, "COLUMNS").unwrap();
    for (j, entries) in columns.iter().enumerate() {
        let name = model.var_name(j);
        writeln!(w, "    {name} {OBJECTIVE_ROW} {}", number(cost[j])).unwrap();
        for &(i, a) in entries {
            writeln!(w, "    {name} {} {}", model.constraints[i].name, number(a)).unwrap();
        }
    }

    writeln!(w, "RHS").unwrap();
    if model.objective_offset != 0.0 {
        writeln!(w, "    {SET_NAME} {OBJECTIVE_ROW} {}", number(-model.objective_offset)).unwrap();
    }
    for c in &model.constraints {
        if c.rhs != 0.0 {
            writeln!(w, "    {SET_NAME} {} {}", c.name, number(c.rhs)).unwrap();
        }
    }

    writeln!(w, "BOUNDS").unwrap();
    for (j, v) in model.variables.iter().enumerate() {
        let name = model.var_name(j);
        if v.integer && v.lower == 0.0 && v.upper == 1.0 {
            writeln!(w, " BV {BOUND_NAME} {name}").unwrap();
            continue;
        }
        let (lo, up) = if v.integer { ("LI", "UI") } else { ("LO", "UP") };
        if v.lower == f64::NEG_INFINITY {
            writeln!(w, " MI {BOUND_NAME} {name}").unwrap();
        } else {
            writeln!(w, " {lo} {BOUND_NAME} {name} {}", number(v.lower)).unwrap();
        }
        if v.upper == f64::INFINITY {
            writeln!(w, " PL {BOUND_NAME} {name}").unwrap();
        } else {
            writeln!(w, " {up} {BOUND_NAME} {name} {}", number(v.upper)).unwrap();
        }
    }
    writeln!(w, "ENDATA").unwrap();
    out
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Header,
    Objsense,
    Rows,
    Columns,
    Rhs,
    Bounds,
    Done,
}

pub fn import_mps(text: &str) -> Result<MilpModel, MpsError> {
    let mut section = Section::Header;
    let mut variables: Vec<Variable> = Vec::new();
    let mut constraints: Vec<Constraint> = Vec::new();
    let mut row_index = std::collections::HashMap::new();
    let mut col_index = std::collections::HashMap::new();
    let mut objective: Vec<(usize, f64)> = Vec::new();
    let mut offset = 0.0;

    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let syntax = |message: &str| MpsError::Syntax {
            line,
            message: message.to_string(),
        };
        let parse = |s: &str| s.parse::<f64>().map_err(|_| syntax(&format!("bad number `{s}`")));
        if raw.trim().is_empty() || raw.starts_with('*') {
            continue;
        }
        let fields: Vec<&str> = raw.split_whitespace().collect();
        if !raw.starts_with(' ') {
            section = match fields[0] {
                "NAME" => Section::Header,
                "OBJSENSE" => Section::Objsense,
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "BOUNDS" => Section::Bounds,
                "ENDATA" => Section::Done,
                other => return Err(syntax(&format!("unknown section `{other}`"))),
            };
            continue;
        }
        match section {
            Section::Header | Section::Done => return Err(syntax("data outside a section")),
            Section::Objsense => {
                if fields != ["MIN"] {
                    return Err(syntax("only MIN is supported"));
                }
            }
            Section::Rows => {
                let [code, name] = fields[..] else {
                    return Err(syntax("expected `<type> <row>`"));
                };
                let sense = match code {
                    "N" if name == OBJECTIVE_ROW => continue,
                    "L" => Sense::Le,
                    "G" => Sense::Ge,
                    "E" => Sense::Eq,
                    _ => return Err(syntax(&format!("unsupported row type `{code}`"))),
                };
                row_index.insert(name.to_string(), constraints.len());
                constraints.push(Constraint {
                    name: name.to_string(),
                    terms: Vec::new(),
                    sense,
                    rhs: 0.0,
                });
            }
            Section::Columns => {
                let [col, row, value] = fields[..] else {
                    return Err(syntax("expected `<column> <row> <value>`"));
                };
                let j = match col_index.get(col) {
                    Some(&j) => j,
                    None => {
                        let var = VarRef::parse(col).ok_or_else(|| MpsError::BadColumn {
                            line,
                            name: col.to_string(),
                        })?;
                        let j = variables.len();
                        variables.push(Variable {
                            var,
                            lower: 0.0,
                            upper: f64::INFINITY,
                            integer: false,
                        });
                        col_index.insert(col.to_string(), j);
                        j
                    }
                };
                let a = parse(value)?;
                if row == OBJECTIVE_ROW {
                    if a != 0.0 {
                        objective.push((j, a));
                    }
                } else {
                    let &i = row_index.get(row).ok_or_else(|| MpsError::UnknownRow {
                        line,
                        name: row.to_string(),
                    })?;
                    constraints[i].terms.push((j, a));
                }
            }
            Section::Rhs => {
                let [_, row, value] = fields[..] else {
                    return Err(syntax("expected `<set> <row> <value>`"));
                };
                let v = parse(value)?;
                if row == OBJECTIVE_ROW {
                    offset = -v;
                } else {
                    let &i = row_index.get(row).ok_or_else(|| MpsError::UnknownRow {
                        line,
                        name: row.to_string(),
                    })?;
                    constraints[i].rhs = v;
                }
            }
            Section::Bounds => {
                let (code, col, value) = match fields[..] {
                    [code, _, col] => (code, col, None),
                    [code, _, col, value] => (code, col, Some(parse(value)?)),
                    _ => return Err(syntax("expected `<type> <set> <column> [value]`")),
                };
                let &j = col_index
                    .get(col)
                    .ok_or_else(|| syntax(&format!("bound on unknown column `{col}`")))?;
                let v = &mut variables[j];
                let need = || value.ok_or_else(|| syntax("bound needs a value"));
                match code {
                    "BV" => {
                        v.lower = 0.0;
                        v.upper = 1.0;
                        v.integer = true;
                    }
                    "LO" => v.lower = need()?,
                    "UP" => v.upper = need()?,
                    "LI" => {
                        v.lower = need()?;
                        v.integer = true;
                    }
                    "UI" => {
                        v.upper = need()?;
                        v.integer = true;
                    }
                    "MI" => v.lower = f64::NEG_INFINITY,
                    "PL" => v.upper = f64::INFINITY,
                    "FX" => {
                        v.lower = need()?;
                        v.upper = v.lower;
                    }
                    "FR" => {
                        v.lower = f64::NEG_INFINITY;
                        v.upper = f64::INFINITY;
                    }
                    other => return Err(syntax(&format!("unsupported bound `{other}`"))),
                }
            }
        }
    }
    if section != Section::Done {
        return Err(MpsError::Truncated);
    }
    Ok(MilpModel::from_parts(variables, constraints, objective, offset))
}
