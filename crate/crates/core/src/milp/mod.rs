//! Solver-agnostic mixed-integer linear model.
//!
//! Variable names follow `<kind>.<entity>.<t>` (or `<kind>.<entity>.<t1>.<t2>`
//! for the pairwise product families) and constraint names follow
//! `<tag>.<entity>.t<step>...`, where the tag names the equation family of
//! the restoration model (`eq33.k7.t4`). Names are the exchange key for MPS
//! export and solution import.

mod decode;
mod encode;

pub use decode::{decode, objective_value, startup_delay, DecodeError, INTEGRALITY_TOL};
pub use encode::{encode, lift_schedule, EncodeError};

use std::collections::HashMap;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarKind {
    GenStart,
    GenPower,
    FcStart,
    FcOn,
    FcMax,
    FcAncStart,
    FcAncOn,
    FcAncMax,
    FcPower,
    BusOn,
    BranchOn,
    BatStart,
    BatEnd,
    BatPower,
}

impl VarKind {
    pub const ALL: [VarKind; 14] = [
        VarKind::GenStart,
        VarKind::GenPower,
        VarKind::FcStart,
        VarKind::FcOn,
        VarKind::FcMax,
        VarKind::FcAncStart,
        VarKind::FcAncOn,
        VarKind::FcAncMax,
        VarKind::FcPower,
        VarKind::BusOn,
        VarKind::BranchOn,
        VarKind::BatStart,
        VarKind::BatEnd,
        VarKind::BatPower,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            VarKind::GenStart => "gen_start",
            VarKind::GenPower => "gen_power",
            VarKind::FcStart => "fc_start",
            VarKind::FcOn => "fc_on",
            VarKind::FcMax => "fc_max",
            VarKind::FcAncStart => "fc_anc_start",
            VarKind::FcAncOn => "fc_anc_on",
            VarKind::FcAncMax => "fc_anc_max",
            VarKind::FcPower => "fc_power",
            VarKind::BusOn => "bus_on",
            VarKind::BranchOn => "branch_on",
            VarKind::BatStart => "bat_ws",
            VarKind::BatEnd => "bat_we",
            VarKind::BatPower => "bat_power",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.tag() == tag)
    }

    pub fn is_binary(self) -> bool {
        !matches!(self, VarKind::GenPower | VarKind::FcPower | VarKind::BatPower)
    }

    /// Pairwise product families carry two step indices.
    pub fn is_pairwise(self) -> bool {
        matches!(self, VarKind::FcAncStart | VarKind::FcAncOn | VarKind::FcAncMax)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct VarRef {
    pub kind: VarKind,
    pub entity: String,
    pub steps: Vec<usize>,
}

impl VarRef {
    pub fn at(kind: VarKind, entity: &str, t: usize) -> Self {
        Self {
            kind,
            entity: entity.to_string(),
            steps: vec![t],
        }
    }

    pub fn pair(kind: VarKind, entity: &str, t1: usize, t2: usize) -> Self {
        Self {
            kind,
            entity: entity.to_string(),
            steps: vec![t1, t2],
        }
    }

    pub fn name(&self) -> String {
        self.to_string()
    }

    pub fn parse(name: &str) -> Option<Self> {
        let mut parts = name.split('.');
        let kind = VarKind::from_tag(parts.next()?)?;
        let entity = parts.next()?.to_string();
        let steps = parts
            .map(|p| p.parse::<usize>().ok())
            .collect::<Option<Vec<_>>>()?;
        let expected = if kind.is_pairwise() { 2 } else { 1 };
        (steps.len() == expected && !entity.is_empty()).then_some(Self { kind, entity, steps })
    }
}

impl fmt::Display for VarRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.kind.tag(), self.entity)?;
        for t in &self.steps {
            write!(f, ".{t}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub var: VarRef,
    pub lower: f64,
    pub upper: f64,
    pub integer: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl Sense {
    pub fn holds(self, lhs: f64, rhs: f64, tol: f64) -> bool {
        match self {
            Sense::Le => lhs <= rhs + tol,
            Sense::Ge => lhs >= rhs - tol,
            Sense::Eq => (lhs - rhs).abs() <= tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    /// Sorted by variable index, no duplicates, no zero coefficients.
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Constraint {
    /// Equation family, the part of the name before the first dot.
    pub fn tag(&self) -> &str {
        self.name.split('.').next().unwrap_or("")
    }

    pub fn lhs(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|&(j, a)| a * values[j]).sum()
    }
}

/// Values for every model variable, indexed like `MilpModel::variables`.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment(pub Vec<f64>);

impl Assignment {
    pub fn get(&self, model: &MilpModel, var: &VarRef) -> Option<f64> {
        model.var_index(var).map(|j| self.0[j])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintViolation {
    pub name: String,
    pub lhs: f64,
    pub sense: Sense,
    pub rhs: f64,
}

/// Linear objective (minimised), variables and constraints.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MilpModel {
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    /// Sorted by variable index.
    pub objective: Vec<(usize, f64)>,
    pub objective_offset: f64,
    names: Vec<String>,
    index: HashMap<String, usize>,
}

fn canonical_terms(terms: impl IntoIterator<Item = (usize, f64)>) -> Vec<(usize, f64)> {
    let mut terms: Vec<(usize, f64)> = terms.into_iter().collect();
    terms.sort_by_key(|&(j, _)| j);
    let mut merged: Vec<(usize, f64)> = Vec::with_capacity(terms.len());
    for (j, a) in terms {
        match merged.last_mut() {
            Some((last, acc)) if *last == j => *acc += a,
            _ => merged.push((j, a)),
        }
    }
    merged.retain(|&(_, a)| a != 0.0);
    merged
}

impl MilpModel {
    pub fn new() -> Self {
        Self::default()
    }

    /// Declares a variable; panics on a duplicate name.
    pub fn add_var(&mut self, var: VarRef, lower: f64, upper: f64, integer: bool) -> usize {
        let name = var.name();
        let j = self.variables.len();
        let previous = self.index.insert(name.clone(), j);
        assert!(previous.is_none(), "duplicate variable {name}");
        self.names.push(name);
        self.variables.push(Variable {
            var,
            lower,
            upper,
            integer,
        });
        j
    }

    pub fn add_binary(&mut self, var: VarRef) -> usize {
        self.add_var(var, 0.0, 1.0, true)
    }

    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: impl IntoIterator<Item = (usize, f64)>,
        sense: Sense,
        rhs: f64,
    ) {
        self.constraints.push(Constraint {
            name: name.into(),
            terms: canonical_terms(terms),
            sense,
            rhs,
        });
    }

    pub fn set_objective(&mut self, terms: impl IntoIterator<Item = (usize, f64)>, offset: f64) {
        self.objective = canonical_terms(terms);
        self.objective_offset = offset;
    }

    pub fn var_index(&self, var: &VarRef) -> Option<usize> {
        self.index.get(&var.name()).copied()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn var_name(&self, j: usize) -> &str {
        &self.names[j]
    }

    pub fn count_kind(&self, kind: VarKind) -> usize {
        self.variables.iter().filter(|v| v.var.kind == kind).count()
    }

    /// Entity ids of a variable family in order of first declaration.
    pub fn entities(&self, kind: VarKind) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for v in self.variables.iter().filter(|v| v.var.kind == kind) {
            if out.last() != Some(&v.var.entity) && !out.contains(&v.var.entity) {
                out.push(v.var.entity.clone());
            }
        }
        out
    }

    /// Largest single-step index among declared variables.
    pub fn n_steps(&self) -> usize {
        self.variables
            .iter()
            .filter(|v| !v.var.kind.is_pairwise())
            .map(|v| v.var.steps[0])
            .max()
            .unwrap_or(0)
    }

    pub fn evaluate_objective(&self, assignment: &Assignment) -> f64 {
        self.objective_offset
            + self
                .objective
                .iter()
                .map(|&(j, c)| c * assignment.0[j])
                .sum::<f64>()
    }

    /// Every constraint or bound the assignment breaks by more than `tol`.
    pub fn violations(&self, assignment: &Assignment, tol: f64) -> Vec<ConstraintViolation> {
        let mut out = Vec::new();
        for (j, v) in self.variables.iter().enumerate() {
            let x = assignment.0[j];
            if x < v.lower - tol || x > v.upper + tol {
                out.push(ConstraintViolation {
                    name: format!("bound.{}", self.names[j]),
                    lhs: x,
                    sense: if x < v.lower { Sense::Ge } else { Sense::Le },
                    rhs: if x < v.lower { v.lower } else { v.upper },
                });
            }
        }
        for c in &self.constraints {
            let lhs = c.lhs(&assignment.0);
            if !c.sense.holds(lhs, c.rhs, tol) {
                out.push(ConstraintViolation {
                    name: c.name.clone(),
                    lhs,
                    sense: c.sense,
                    rhs: c.rhs,
                });
            }
        }
        out
    }

    /// Rebuilds the name index after deserialisation or external edits.
    pub(crate) fn from_parts(
        variables: Vec<Variable>,
        constraints: Vec<Constraint>,
        objective: Vec<(usize, f64)>,
        objective_offset: f64,
    ) -> Self {
        let names: Vec<String> = variables.iter().map(|v| v.var.name()).collect();
        let index = names.iter().cloned().enumerate().map(|(j, n)| (n, j)).collect();
        Self {
            variables,
            constraints,
            objective,
            objective_offset,
            names,
            index,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for name in ["bus_on.b6.3", "fc_anc_on.fc1.2.7", "gen_start.g10.18"] {
            assert_eq!(VarRef::parse(name).unwrap().name(), name);
        }
        assert!(VarRef::parse("foo.bar.1").is_none());
        assert!(VarRef::parse("fc_anc_on.fc1.2").is_none());
        assert!(VarRef::parse("bus_on.b6").is_none());
    }

    #[test]
    fn terms_are_canonical() {
        let mut m = MilpModel::new();
        let x = m.add_binary(VarRef::at(VarKind::BusOn, "b1", 1));
        let y = m.add_binary(VarRef::at(VarKind::BusOn, "b1", 2));
        m.add_constraint("c", [(y, 1.0), (x, 2.0), (y, -1.0), (x, 1.0)], Sense::Le, 1.0);
        assert_eq!(m.constraints[0].terms, vec![(x, 3.0)]);
    }
}
