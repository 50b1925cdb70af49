use thiserror::Error;

use super::{Assignment, MilpModel, VarKind, VarRef};
use crate::case::GridCase;
use crate::schedule::{BatteryDecision, DeviceDecision, ReportedPower, Schedule, StatusSeries};

/// Largest distance from {0, 1} accepted for a binary variable.
pub const INTEGRALITY_TOL: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum DecodeError {
    #[error("assignment has {got} values for {expected} variables")]
    Length { expected: usize, got: usize },
    #[error("binary `{name}` = {value} is not integral")]
    NonIntegral { name: String, value: f64 },
    #[error("status `{entity}` ({kind}) switches off at step {step}")]
    NonMonotone {
        kind: &'static str,
        entity: String,
        step: usize,
    },
}

fn binary_series(
    model: &MilpModel,
    values: &Assignment,
    kind: VarKind,
    entity: &str,
    n: usize,
) -> Result<Vec<bool>, DecodeError> {
    (1..=n)
        .map(|t| {
            let j = model
                .var_index(&VarRef::at(kind, entity, t))
                .expect("series declared for every step");
            let x = values.0[j];
            let r = x.round();
            if (x - r).abs() > INTEGRALITY_TOL || !(r == 0.0 || r == 1.0) {
                return Err(DecodeError::NonIntegral {
                    name: model.var_name(j).to_string(),
                    value: x,
                });
            }
            Ok(r == 1.0)
        })
        .collect()
}

fn monotone(kind: VarKind, entity: &str, on: &[bool]) -> Result<(), DecodeError> {
    match on.windows(2).position(|w| w[0] && !w[1]) {
        Some(i) => Err(DecodeError::NonMonotone {
            kind: kind.tag(),
            entity: entity.to_string(),
            step: i + 2,
        }),
        None => Ok(()),
    }
}

fn first_on(on: &[bool]) -> Option<usize> {
    on.iter().position(|&x| x).map(|i| i + 1)
}

fn continuous_series(model: &MilpModel, values: &Assignment, kind: VarKind, entity: &str, n: usize) -> Vec<f64> {
    (1..=n)
        .map(|t| values.get(model, &VarRef::at(kind, entity, t)).unwrap_or(0.0))
        .collect()
}

/// Reads start steps, battery windows and energization out of a model
/// assignment. Start steps come from the first step at which each monotone
/// start indicator is set, so `sum_t (1 - u_t)` is the startup delay.
pub fn decode(model: &MilpModel, assignment: &Assignment) -> Result<Schedule, DecodeError> {
    if assignment.0.len() != model.variables.len() {
        return Err(DecodeError::Length {
            expected: model.variables.len(),
            got: assignment.0.len(),
        });
    }
    let n = model.n_steps();

    let mut generators = Vec::new();
    let mut gen_power = Vec::new();
    for id in model.entities(VarKind::GenStart) {
        let on = binary_series(model, assignment, VarKind::GenStart, &id, n)?;
        monotone(VarKind::GenStart, &id, &on)?;
        gen_power.push(continuous_series(model, assignment, VarKind::GenPower, &id, n));
        generators.push(DeviceDecision {
            start: first_on(&on),
            id,
        });
    }

    let mut fuel_cells = Vec::new();
    let mut fc_power = Vec::new();
    for id in model.entities(VarKind::FcStart) {
        let on = binary_series(model, assignment, VarKind::FcStart, &id, n)?;
        monotone(VarKind::FcStart, &id, &on)?;
        for kind in [VarKind::FcOn, VarKind::FcMax] {
            let series = binary_series(model, assignment, kind, &id, n)?;
            monotone(kind, &id, &series)?;
        }
        fc_power.push(continuous_series(model, assignment, VarKind::FcPower, &id, n));
        fuel_cells.push(DeviceDecision {
            start: first_on(&on),
            id,
        });
    }

    let mut batteries = Vec::new();
    for id in model.entities(VarKind::BatStart) {
        let ws = binary_series(model, assignment, VarKind::BatStart, &id, n)?;
        let we = binary_series(model, assignment, VarKind::BatEnd, &id, n)?;
        monotone(VarKind::BatStart, &id, &ws)?;
        monotone(VarKind::BatEnd, &id, &we)?;
        let dispatch = continuous_series(model, assignment, VarKind::BatPower, &id, n);
        batteries.push(BatteryDecision {
            start: first_on(&ws),
            end: first_on(&we),
            dispatch,
            id,
        });
    }

    let status = |kind: VarKind| -> Result<Vec<StatusSeries>, DecodeError> {
        model
            .entities(kind)
            .into_iter()
            .map(|id| {
                let on = binary_series(model, assignment, kind, &id, n)?;
                monotone(kind, &id, &on)?;
                Ok(StatusSeries { id, on })
            })
            .collect()
    };
    let buses = status(VarKind::BusOn)?;
    let branches = status(VarKind::BranchOn)?;

    Ok(Schedule {
        n_steps: n,
        generators,
        fuel_cells,
        batteries,
        buses,
        branches,
        reported_power: Some(ReportedPower {
            generators: gen_power,
            fuel_cells: fc_power,
        }),
    })
}

/// Startup delay in steps; a generator that never starts counts the full horizon.
pub fn startup_delay(start: Option<usize>, n_steps: usize) -> usize {
    start.map_or(n_steps, |s| s - 1)
}

/// Restoration objective recomputed from a schedule: capacity-weighted
/// startup delay minus the importance-weighted, time-discounted bus reward.
pub fn objective_value(case: &GridCase, schedule: &Schedule) -> f64 {
    let n = case.n_steps();
    let delay: f64 = case
        .generators
        .iter()
        .zip(&schedule.generators)
        .map(|(g, d)| g.weight() * startup_delay(d.start, n) as f64)
        .sum();
    let reward: f64 = case
        .buses
        .iter()
        .zip(&schedule.buses)
        .map(|(b, s)| {
            (1..=n)
                .filter(|&t| s.at(t))
                .map(|t| b.importance / t as f64)
                .sum::<f64>()
        })
        .sum();
    delay - case.beta * reward
}
