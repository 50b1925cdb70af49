//! Reports derived from validated schedules and sensitivity sweeps.
//!
//! Startup time is the moment cranking begins: `t^start · step_minutes`
//! with `t^start = start_step − 1`, the quantity the objective minimises.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::case::GridCase;
use crate::milp::{encode, startup_delay};
use crate::schedule::Schedule;
use crate::semantics::DeviceTrajectories;
use crate::solver::{solve_enumeration, solve_external, EnumLimits, SolveError, SolveResult, SolveStatus, SolverCommand};

/// Rendering of a generator that never starts, or of an undefined average.
pub const NEVER: &str = "never";
pub const AVERAGE_LABEL: &str = "System Average";

fn fmt_minutes(x: Option<f64>) -> String {
    match x {
        Some(v) if v == v.trunc() => format!("{}", v as i64),
        Some(v) => format!("{v:.1}"),
        None => NEVER.to_string(),
    }
}

// ---------------------------------------------------------------------------
// GSUS table
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GsusRow {
    pub generator: String,
    /// Minutes after blackout at which cranking begins.
    pub minutes: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GsusTable {
    pub rows: Vec<GsusRow>,
    /// Mean over the generators that start.
    pub average: Option<f64>,
}

impl GsusTable {
    pub fn never_started(&self) -> usize {
        self.rows.iter().filter(|r| r.minutes.is_none()).count()
    }

    pub fn minutes_of(&self, generator: &str) -> Option<Option<u32>> {
        self.rows.iter().find(|r| r.generator == generator).map(|r| r.minutes)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("generator,startup_minutes\n");
        for r in &self.rows {
            writeln!(out, "{},{}", r.generator, fmt_minutes(r.minutes.map(f64::from))).unwrap();
        }
        writeln!(out, "{AVERAGE_LABEL},{}", fmt_minutes(self.average)).unwrap();
        out
    }
}

/// Startup times of the non-black-start generators plus their average.
pub fn gsus_table(case: &GridCase, schedule: &Schedule) -> GsusTable {
    let n = case.n_steps();
    let rows: Vec<GsusRow> = case
        .generators
        .iter()
        .zip(&schedule.generators)
        .filter(|(g, _)| !g.is_black_start)
        .map(|(g, d)| GsusRow {
            generator: g.id.clone(),
            minutes: d
                .start
                .map(|s| startup_delay(Some(s), n) as u32 * case.time.step_minutes),
        })
        .collect();
    let started: Vec<f64> = rows.iter().filter_map(|r| r.minutes.map(f64::from)).collect();
    let average = (!started.is_empty()).then(|| started.iter().sum::<f64>() / started.len() as f64);
    GsusTable { rows, average }
}

// ---------------------------------------------------------------------------
// Restored power
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerSample {
    pub minute: u32,
    pub generation_mw: f64,
    pub storage_mw: f64,
    pub system_mw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestoredPower {
    pub samples: Vec<PowerSample>,
}

impl RestoredPower {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("minute,generation_mw,storage_mw,system_mw\n");
        for s in &self.samples {
            writeln!(out, "{},{:?},{:?},{:?}", s.minute, s.generation_mw, s.storage_mw, s.system_mw).unwrap();
        }
        out
    }

    pub fn generation(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.generation_mw).collect()
    }

    pub fn system(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.system_mw).collect()
    }
}

/// Per-step restored power: generators, storage-like resources (fuel cells
/// and batteries) and their sum, keyed by wall-clock minute.
pub fn restored_power_series(case: &GridCase, schedule: &Schedule) -> RestoredPower {
    let n = case.n_steps();
    let traj = DeviceTrajectories::compute(case, schedule);
    let generation = traj.generation(n);
    let storage = traj.storage(n);
    let samples = (1..=n)
        .map(|t| PowerSample {
            minute: case.time.minute_of(t),
            generation_mw: generation.at(t),
            storage_mw: storage.at(t),
            system_mw: generation.at(t) + storage.at(t),
        })
        .collect();
    RestoredPower { samples }
}

// ---------------------------------------------------------------------------
// Statistics
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestorationStats {
    pub buses: usize,
    pub branches: usize,
    /// Buses energized by the end of the horizon.
    pub critical_buses: usize,
    pub critical_branches: usize,
    pub generators_started: usize,
    pub restored_power_mw: f64,
    /// Generators in their ramp phase at each step.
    pub ramping_per_step: Vec<usize>,
}

pub fn stats(case: &GridCase, schedule: &Schedule) -> RestorationStats {
    let n = case.n_steps();
    let ramping_per_step = (1..=n)
        .map(|t| {
            case.generators
                .iter()
                .zip(&schedule.generators)
                .filter(|(g, d)| {
                    d.start.is_some_and(|s| {
                        let first = s + g.crank_steps;
                        (first..first + g.ramp_steps).contains(&t)
                    })
                })
                .count()
        })
        .collect();
    let power = restored_power_series(case, schedule);
    RestorationStats {
        buses: case.buses.len(),
        branches: case.branches.len(),
        critical_buses: schedule.buses.iter().filter(|b| b.at(n)).count(),
        critical_branches: schedule.branches.iter().filter(|k| k.at(n)).count(),
        generators_started: schedule.generators.iter().filter(|d| d.start.is_some()).count(),
        restored_power_mw: power.samples.last().map_or(0.0, |s| s.system_mw),
        ramping_per_step,
    }
}

// ---------------------------------------------------------------------------
// Solving front door
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub enum Backend {
    Enumeration(EnumLimits),
    External(SolverCommand),
}

/// Encodes and solves a case with the chosen backend.
pub fn solve(case: &GridCase, backend: &Backend) -> Result<SolveResult, SolveError> {
    match backend {
        Backend::Enumeration(limits) => solve_enumeration(case, *limits),
        Backend::External(command) => {
            let model = encode(case)?;
            solve_external(case, &model, command)
        }
    }
}

/// The same case with every fuel cell swapped for a battery at its bus with
/// equal rating, default minimum output, and enough energy to discharge at
/// full power over the whole horizon. Fuel cells that crank for zero steps
/// and ramp in one are matched exactly: both can inject their rating from
/// step 2 on.
pub fn battery_variant(case: &GridCase) -> GridCase {
    let mut doc = case.to_document();
    let horizon_hours = case.n_steps() as f64 * case.time.step_hours();
    let batteries = doc.fuel_cells.drain(..).map(|f| crate::case::BatteryDoc {
        id: f.id,
        bus: f.bus,
        p_max: f.p_max,
        p_min: None,
        soc_init: f.p_max * horizon_hours,
        soc_min: 0.0,
        energy_capacity: None,
        start_min: None,
    });
    doc.batteries.extend(batteries);
    crate::case::load_case(&doc).expect("battery variant of a valid case is valid")
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    FcCapacity,
    BatteryCapacity,
    BatterySoc,
    ResourceLocation,
}

impl SweepAxis {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "fc_capacity" => Some(Self::FcCapacity),
            "battery_capacity" => Some(Self::BatteryCapacity),
            "battery_soc" => Some(Self::BatterySoc),
            "resource_location" => Some(Self::ResourceLocation),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::FcCapacity => "fc_capacity",
            Self::BatteryCapacity => "battery_capacity",
            Self::BatterySoc => "battery_soc",
            Self::ResourceLocation => "resource_location",
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SweepError {
    #[error("sweep needs at least one value")]
    NoValues,
    #[error("axis {axis} needs {what} in the base case")]
    Incompatible { axis: &'static str, what: &'static str },
    #[error("value `{value}` is not valid for axis {axis}: {reason}")]
    BadValue {
        axis: &'static str,
        value: String,
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    /// MW for the capacity axes, percent of energy capacity for
    /// `battery_soc`, `+`-joined bus ids (one per resource) for
    /// `resource_location`.
    pub values: Vec<String>,
    pub backend: Backend,
}

impl SweepSpec {
    pub fn check(&self, base: &GridCase) -> Result<(), SweepError> {
        if self.values.is_empty() {
            return Err(SweepError::NoValues);
        }
        let axis = self.axis.name();
        match self.axis {
            SweepAxis::FcCapacity if base.fuel_cells.is_empty() => {
                return Err(SweepError::Incompatible { axis, what: "a fuel cell" })
            }
            SweepAxis::BatteryCapacity | SweepAxis::BatterySoc if base.batteries.is_empty() => {
                return Err(SweepError::Incompatible { axis, what: "a battery" })
            }
            SweepAxis::ResourceLocation if base.fuel_cells.is_empty() && base.batteries.is_empty() => {
                return Err(SweepError::Incompatible {
                    axis,
                    what: "a fuel cell or battery",
                })
            }
            _ => {}
        }
        for v in &self.values {
            apply_axis(base, self.axis, v)?;
        }
        Ok(())
    }
}

fn number(axis: SweepAxis, value: &str) -> Result<f64, SweepError> {
    match value.trim().parse::<f64>() {
        Ok(x) if x.is_finite() && x >= 0.0 => Ok(x),
        _ => Err(SweepError::BadValue {
            axis: axis.name(),
            value: value.to_string(),
            reason: "expected a nonnegative number".into(),
        }),
    }
}

/// Scenario for one axis value, built fresh from the base case.
pub fn apply_axis(base: &GridCase, axis: SweepAxis, value: &str) -> Result<GridCase, SweepError> {
    let mut doc = base.to_document();
    let bad = |reason: String| SweepError::BadValue {
        axis: axis.name(),
        value: value.to_string(),
        reason,
    };
    match axis {
        SweepAxis::FcCapacity => {
            let mw = number(axis, value)?;
            for f in &mut doc.fuel_cells {
                if mw <= f.p_crank {
                    return Err(bad(format!("{} needs capacity above its cranking draw", f.id)));
                }
                f.p_max = mw;
            }
        }
        SweepAxis::BatteryCapacity => {
            let mw = number(axis, value)?;
            for b in &mut doc.batteries {
                // One hour of energy at rated power, minimum output 10%.
                b.p_max = mw;
                b.p_min = Some(crate::case::DEFAULT_BATTERY_MIN_FRACTION * mw);
                b.soc_init = mw;
                b.energy_capacity = Some(mw);
                b.soc_min = b.soc_min.min(mw);
            }
        }
        SweepAxis::BatterySoc => {
            let pct = number(axis, value.trim_end_matches('%'))?;
            if pct > 100.0 {
                return Err(bad("state of charge above 100%".into()));
            }
            for b in &mut doc.batteries {
                let capacity = b.energy_capacity.unwrap_or(b.soc_init);
                b.energy_capacity = Some(capacity);
                b.soc_init = capacity * pct / 100.0;
                b.soc_min = b.soc_min.min(b.soc_init);
            }
        }
        SweepAxis::ResourceLocation => {
            let buses: Vec<&str> = value.split('+').map(str::trim).collect();
            let n_resources = doc.fuel_cells.len() + doc.batteries.len();
            if buses.len() != n_resources {
                return Err(bad(format!("{} bus ids for {n_resources} resources", buses.len())));
            }
            if let Some(missing) = buses.iter().find(|b| base.bus_index(b).is_none()) {
                return Err(bad(format!("unknown bus `{missing}`")));
            }
            let mut it = buses.into_iter();
            for f in &mut doc.fuel_cells {
                f.bus = it.next().unwrap().to_string();
            }
            for b in &mut doc.batteries {
                b.bus = it.next().unwrap().to_string();
            }
        }
    }
    crate::case::load_case(&doc).map_err(|e| bad(e.to_string()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioOutcome {
    pub value: String,
    pub status: Option<SolveStatus>,
    pub objective: Option<f64>,
    pub table: Option<GsusTable>,
    pub schedule: Option<Schedule>,
    pub error: Option<String>,
}

impl ScenarioOutcome {
    pub fn average(&self) -> Option<f64> {
        self.table.as_ref().and_then(|t| t.average)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub axis: SweepAxis,
    pub generators: Vec<String>,
    pub scenarios: Vec<ScenarioOutcome>,
}

impl SweepTable {
    pub fn averages(&self) -> Vec<Option<f64>> {
        self.scenarios.iter().map(ScenarioOutcome::average).collect()
    }

    /// Generators as rows, axis values as columns, then the average row
    /// and a status row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("generator");
        for s in &self.scenarios {
            write!(out, ",{}", s.value).unwrap();
        }
        out.push('\n');
        for g in &self.generators {
            out.push_str(g);
            for s in &self.scenarios {
                let cell = match &s.table {
                    Some(t) => fmt_minutes(t.minutes_of(g).flatten().map(f64::from)),
                    None => "error".to_string(),
                };
                write!(out, ",{cell}").unwrap();
            }
            out.push('\n');
        }
        out.push_str(AVERAGE_LABEL);
        for s in &self.scenarios {
            let cell = match &s.table {
                Some(t) => fmt_minutes(t.average),
                None => "error".to_string(),
            };
            write!(out, ",{cell}").unwrap();
        }
        out.push_str("\nstatus");
        for s in &self.scenarios {
            let cell = match (&s.status, &s.error) {
                (Some(st), None) => format!("{st:?}").to_lowercase(),
                (_, Some(e)) => format!("\"error: {}\"", e.replace('"', "'")),
                (None, None) => "error".to_string(),
            };
            write!(out, ",{cell}").unwrap();
        }
        out.push('\n');
        out
    }
}

fn run_scenario(base: &GridCase, spec: &SweepSpec, value: &str) -> ScenarioOutcome {
    let mut outcome = ScenarioOutcome {
        value: value.to_string(),
        status: None,
        objective: None,
        table: None,
        schedule: None,
        error: None,
    };
    let case = match apply_axis(base, spec.axis, value) {
        Ok(c) => c,
        Err(e) => {
            outcome.error = Some(e.to_string());
            return outcome;
        }
    };
    match solve(&case, &spec.backend) {
        Ok(result) => {
            outcome.status = Some(result.status);
            outcome.objective = result.objective;
            if result.status.has_solution() {
                let schedule = result.schedule.expect("solution carries a schedule");
                outcome.table = Some(gsus_table(&case, &schedule));
                outcome.schedule = Some(schedule);
            } else {
                outcome.error = result.message;
            }
        }
        Err(e) => outcome.error = Some(e.to_string()),
    }
    outcome
}

/// Solves one independent scenario per axis value, up to `workers` at a
/// time. Rows come back in axis-value order; failures are recorded in-row.
pub fn sweep(base: &GridCase, spec: &SweepSpec, workers: usize) -> Result<SweepTable, SweepError> {
    spec.check(base)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("thread pool");
    let scenarios = pool.install(|| {
        spec.values
            .par_iter()
            .map(|v| run_scenario(base, spec, v))
            .collect()
    });
    Ok(SweepTable {
        axis: spec.axis,
        generators: base
            .generators
            .iter()
            .filter(|g| !g.is_black_start)
            .map(|g| g.id.clone())
            .collect(),
        scenarios,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::case::load_case_json;
    use crate::schedule::DeviceDecision;

    fn case() -> GridCase {
        load_case_json(
            r#"{
              "time": {"step_minutes": 20, "horizon_minutes": 160},
              "buses": [{"id": "a"}, {"id": "b"}],
              "branches": [{"id": "ab", "from": "a", "to": "b"}],
              "generators": [
                {"id": "g1", "bus": "a", "p_max": 40, "p_crank": 4, "crank_time": 20, "ramp_time": 20, "black_start": true},
                {"id": "g2", "bus": "b", "p_max": 90, "p_crank": 10, "crank_time": 20, "ramp_time": 20, "black_start": false},
                {"id": "g3", "bus": "b", "p_max": 60, "p_crank": 10, "crank_time": 20, "ramp_time": 20, "black_start": false}
              ],
              "fuel_cells": [{"id": "f1", "bus": "a", "p_max": 10, "ramp_time": 20}],
              "batteries": [{"id": "bt1", "bus": "b", "p_max": 30, "soc_init": 30, "start_min": 20}]
            }"#,
        )
        .unwrap()
    }

    fn with_starts(case: &GridCase, starts: &[Option<usize>]) -> Schedule {
        let mut s = Schedule::dark(case);
        s.generators = case
            .generators
            .iter()
            .zip(starts)
            .map(|(g, &start)| DeviceDecision { id: g.id.clone(), start })
            .collect();
        s
    }

    #[test]
    fn gsus_minutes_and_average() {
        let c = case();
        let t = gsus_table(&c, &with_starts(&c, &[Some(2), Some(3), Some(6)]));
        assert_eq!(t.rows.len(), 2);
        assert_eq!(t.minutes_of("g2"), Some(Some(40)));
        assert_eq!(t.minutes_of("g3"), Some(Some(100)));
        assert_eq!(t.average, Some(70.0));
        assert!(t.to_csv().ends_with("System Average,70\n"));
    }

    #[test]
    fn all_never_renders_sentinels() {
        let c = case();
        let t = gsus_table(&c, &with_starts(&c, &[Some(2), None, None]));
        assert_eq!(t.average, None);
        assert_eq!(t.never_started(), 2);
        assert_eq!(t.to_csv(), "generator,startup_minutes\ng2,never\ng3,never\nSystem Average,never\n");
    }

    #[test]
    fn dark_schedule_has_zero_power_and_no_critical_elements() {
        let c = case();
        let mut s = Schedule::dark(&c);
        s.fuel_cells[0].start = None;
        let p = restored_power_series(&c, &s);
        assert!(p.system().iter().all(|&x| x == 0.0));
        assert_eq!(p.samples[3].minute, 60);
        let st = stats(&c, &s);
        assert_eq!((st.critical_buses, st.critical_branches, st.generators_started), (0, 0, 0));
    }

    #[test]
    fn axes_rewrite_the_case() {
        let c = case();
        let fc = apply_axis(&c, SweepAxis::FcCapacity, "25").unwrap();
        assert_eq!(fc.fuel_cells[0].p_max, 25.0);
        let bat = apply_axis(&c, SweepAxis::BatteryCapacity, "50").unwrap();
        let b = &bat.batteries[0];
        assert_eq!((b.p_max, b.p_min, b.soc_init, b.energy_capacity), (50.0, 5.0, 50.0, 50.0));
        let soc = apply_axis(&c, SweepAxis::BatterySoc, "70%").unwrap();
        assert!((soc.batteries[0].soc_init - 21.0).abs() < 1e-12);
        let moved = apply_axis(&c, SweepAxis::ResourceLocation, "b+a").unwrap();
        assert_eq!((moved.fuel_cells[0].bus, moved.batteries[0].bus), (1, 0));
        assert!(apply_axis(&c, SweepAxis::ResourceLocation, "b").is_err());
        assert!(apply_axis(&c, SweepAxis::BatterySoc, "140").is_err());
        assert!(apply_axis(&c, SweepAxis::FcCapacity, "x").is_err());
    }

    #[test]
    fn sweep_spec_checks_compatibility() {
        let mut doc = case().to_document();
        doc.batteries.clear();
        let c = crate::case::load_case(&doc).unwrap();
        let spec = SweepSpec {
            axis: SweepAxis::BatterySoc,
            values: vec!["50".into()],
            backend: Backend::Enumeration(EnumLimits::default()),
        };
        assert!(matches!(spec.check(&c), Err(SweepError::Incompatible { .. })));
        let empty = SweepSpec { values: vec![], ..spec };
        assert_eq!(empty.check(&case()), Err(SweepError::NoValues));
    }
}
