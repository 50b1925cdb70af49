//! Grid description, time axis and case-document ingestion.
//!
//! A case document is JSON with the top-level keys `time`, `buses`,
//! `branches`, `generators`, `fuel_cells`, `batteries` and `objective`.
//! Powers are MW, energies MWh and every time quantity is given in minutes;
//! minutes are converted to step indices on load and must be multiples of
//! the step length.
//!
//! Step indices run `1..=n_steps`. Step 1 is the blackout instant (everything
//! dark) and corresponds to minute 0, so step `t` sits at minute
//! `(t - 1) * step_minutes`.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_STEP_MINUTES: u32 = 20;
pub const DEFAULT_HORIZON_STEPS: usize = 18;
pub const DEFAULT_GENERATOR_CRANK_MINUTES: u32 = 60;
/// Battery minimum discharge as a fraction of its maximum when `p_min` is omitted.
pub const DEFAULT_BATTERY_MIN_FRACTION: f64 = 0.10;
/// Default `beta` is this fraction of the largest generator weight `p_max - p_crank`.
pub const DEFAULT_BETA_FRACTION: f64 = 1e-3;

#[derive(Debug, Error, PartialEq)]
pub enum CaseError {
    #[error("cannot read case file {path}: {message}")]
    Io { path: String, message: String },
    #[error("schema violation at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("{entity}: {message}")]
    Invariant { entity: String, message: String },
    #[error("{entity} references unknown bus `{bus}`")]
    DanglingBus { entity: String, bus: String },
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("{entity}: `{field}` = {minutes} min is not a multiple of the {step_minutes} min step")]
    Misaligned {
        entity: String,
        field: &'static str,
        minutes: u32,
        step_minutes: u32,
    },
    #[error("case has no self-start resource (black-start generator, fuel cell or battery)")]
    NoSelfStart,
}

fn invariant(entity: impl Into<String>, message: impl Into<String>) -> CaseError {
    CaseError::Invariant {
        entity: entity.into(),
        message: message.into(),
    }
}

/// Discretised restoration window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub step_minutes: u32,
    pub n_steps: usize,
}

impl TimeGrid {
    pub fn new(step_minutes: u32, n_steps: usize) -> Result<Self, CaseError> {
        if step_minutes == 0 {
            return Err(invariant("time", "step_minutes must be positive"));
        }
        if n_steps < 2 {
            return Err(invariant("time", "horizon must contain at least 2 steps"));
        }
        Ok(Self {
            step_minutes,
            n_steps,
        })
    }

    pub fn steps(&self) -> std::ops::RangeInclusive<usize> {
        1..=self.n_steps
    }

    /// Wall-clock minute of step `t` measured from the blackout.
    pub fn minute_of(&self, t: usize) -> u32 {
        (t as u32 - 1) * self.step_minutes
    }

    pub fn step_hours(&self) -> f64 {
        f64::from(self.step_minutes) / 60.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bus {
    pub id: String,
    pub importance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub id: String,
    pub from_bus: usize,
    pub to_bus: usize,
}

impl Branch {
    pub fn other_end(&self, bus: usize) -> usize {
        if self.from_bus == bus {
            self.to_bus
        } else {
            self.from_bus
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub id: String,
    pub bus: usize,
    pub p_max: f64,
    pub p_crank: f64,
    pub start_min: usize,
    pub start_max: usize,
    pub crank_steps: usize,
    pub ramp_steps: usize,
    pub is_black_start: bool,
}

impl Generator {
    /// Objective weight of one step of startup delay.
    pub fn weight(&self) -> f64 {
        self.p_max - self.p_crank
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FuelCell {
    pub id: String,
    pub bus: usize,
    pub p_max: f64,
    pub p_crank: f64,
    pub crank_steps: usize,
    pub ramp_steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Battery {
    pub id: String,
    pub bus: usize,
    pub p_max: f64,
    pub p_min: f64,
    pub soc_init: f64,
    pub soc_min: f64,
    /// Usable energy when full; only used to express SOC as a fraction.
    pub energy_capacity: f64,
    pub start_min: usize,
}

/// Devices and branches touching one bus, each list sorted by id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BusAdjacency {
    pub branches: Vec<usize>,
    pub generators: Vec<usize>,
    pub fuel_cells: Vec<usize>,
    pub batteries: Vec<usize>,
}

/// Validated, immutable grid description.
#[derive(Debug, Clone, PartialEq)]
pub struct GridCase {
    pub time: TimeGrid,
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
    pub generators: Vec<Generator>,
    pub fuel_cells: Vec<FuelCell>,
    pub batteries: Vec<Battery>,
    pub beta: f64,
    adjacency: Vec<BusAdjacency>,
}

// ---------------------------------------------------------------------------
// Document schema
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseDocument {
    #[serde(default)]
    pub time: TimeSection,
    pub buses: Vec<BusDoc>,
    #[serde(default)]
    pub branches: Vec<BranchDoc>,
    #[serde(default)]
    pub generators: Vec<GeneratorDoc>,
    #[serde(default)]
    pub fuel_cells: Vec<FuelCellDoc>,
    #[serde(default)]
    pub batteries: Vec<BatteryDoc>,
    #[serde(default)]
    pub objective: ObjectiveSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_minutes: Option<u32>,
    /// Total modelled window; `n_steps = horizon_minutes / step_minutes`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon_minutes: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BusDoc {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub importance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchDoc {
    pub id: String,
    pub from: String,
    pub to: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorDoc {
    pub id: String,
    pub bus: String,
    pub p_max: f64,
    pub p_crank: f64,
    /// Earliest startup, minutes after the blackout.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start_min: Option<u32>,
    /// Latest startup, minutes after the blackout.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start_max: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crank_time: Option<u32>,
    pub ramp_time: u32,
    #[serde(default)]
    pub black_start: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FuelCellDoc {
    pub id: String,
    pub bus: String,
    pub p_max: f64,
    #[serde(default)]
    pub p_crank: f64,
    #[serde(default)]
    pub crank_time: u32,
    pub ramp_time: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatteryDoc {
    pub id: String,
    pub bus: String,
    pub p_max: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_min: Option<f64>,
    pub soc_init: f64,
    #[serde(default)]
    pub soc_min: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy_capacity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start_min: Option<u32>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
}

impl CaseDocument {
    pub fn from_json(text: &str) -> Result<Self, CaseError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|err| CaseError::Schema {
            path: err.path().to_string(),
            message: err.inner().to_string(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("case document serializes")
    }
}

// ---------------------------------------------------------------------------
// Loading
// ---------------------------------------------------------------------------

pub fn load_case_file(path: impl AsRef<Path>) -> Result<GridCase, CaseError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|err| CaseError::Io {
        path: path.display().to_string(),
        message: err.to_string(),
    })?;
    load_case_json(&text)
}

pub fn load_case_json(text: &str) -> Result<GridCase, CaseError> {
    load_case(&CaseDocument::from_json(text)?)
}

fn check_id(id: &str, seen: &mut BTreeSet<String>) -> Result<(), CaseError> {
    let valid = !id.is_empty()
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-');
    if !valid {
        return Err(invariant(
            id,
            "ids must be non-empty and use only [A-Za-z0-9_-]",
        ));
    }
    if !seen.insert(id.to_string()) {
        return Err(CaseError::DuplicateId(id.to_string()));
    }
    Ok(())
}

fn check_finite(entity: &str, field: &str, value: f64) -> Result<(), CaseError> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(invariant(entity, format!("`{field}` must be finite")))
    }
}

struct StepConverter {
    step_minutes: u32,
}

impl StepConverter {
    fn duration(&self, entity: &str, field: &'static str, minutes: u32) -> Result<usize, CaseError> {
        if !minutes.is_multiple_of(self.step_minutes) {
            return Err(CaseError::Misaligned {
                entity: entity.to_string(),
                field,
                minutes,
                step_minutes: self.step_minutes,
            });
        }
        Ok((minutes / self.step_minutes) as usize)
    }

    /// Minutes after blackout to the step index at that instant.
    fn instant(&self, entity: &str, field: &'static str, minutes: u32) -> Result<usize, CaseError> {
        Ok(self.duration(entity, field, minutes)? + 1)
    }
}

/// Validates a case document and applies defaults.
pub fn load_case(doc: &CaseDocument) -> Result<GridCase, CaseError> {
    let step_minutes = doc.time.step_minutes.unwrap_or(DEFAULT_STEP_MINUTES);
    if step_minutes == 0 {
        return Err(invariant("time", "step_minutes must be positive"));
    }
    let conv = StepConverter { step_minutes };
    let n_steps = match doc.time.horizon_minutes {
        Some(minutes) => conv.duration("time", "horizon_minutes", minutes)?,
        None => DEFAULT_HORIZON_STEPS,
    };
    let time = TimeGrid::new(step_minutes, n_steps)?;

    let mut seen = BTreeSet::new();
    let mut bus_index = BTreeMap::new();
    for (i, bus) in doc.buses.iter().enumerate() {
        check_id(&bus.id, &mut seen)?;
        bus_index.insert(bus.id.clone(), i);
    }
    let resolve = |entity: &str, bus: &str| -> Result<usize, CaseError> {
        bus_index
            .get(bus)
            .copied()
            .ok_or_else(|| CaseError::DanglingBus {
                entity: entity.to_string(),
                bus: bus.to_string(),
            })
    };

    let mut branches = Vec::with_capacity(doc.branches.len());
    for br in &doc.branches {
        check_id(&br.id, &mut seen)?;
        let from_bus = resolve(&br.id, &br.from)?;
        let to_bus = resolve(&br.id, &br.to)?;
        if from_bus == to_bus {
            return Err(invariant(&br.id, "branch endpoints must differ"));
        }
        branches.push(Branch {
            id: br.id.clone(),
            from_bus,
            to_bus,
        });
    }

    let degree = degrees(doc.buses.len(), &branches);
    let mut buses = Vec::with_capacity(doc.buses.len());
    for (i, bus) in doc.buses.iter().enumerate() {
        let importance = bus.importance.unwrap_or(degree[i] as f64);
        check_finite(&bus.id, "importance", importance)?;
        if importance < 0.0 {
            return Err(invariant(&bus.id, "importance must be nonnegative"));
        }
        buses.push(Bus {
            id: bus.id.clone(),
            importance,
        });
    }

    let mut generators = Vec::with_capacity(doc.generators.len());
    for g in &doc.generators {
        check_id(&g.id, &mut seen)?;
        let bus = resolve(&g.id, &g.bus)?;
        check_finite(&g.id, "p_max", g.p_max)?;
        check_finite(&g.id, "p_crank", g.p_crank)?;
        if !(0.0 < g.p_crank && g.p_crank < g.p_max) {
            return Err(invariant(&g.id, "requires 0 < p_crank < p_max"));
        }
        let start_min = match g.start_min {
            Some(m) => conv.instant(&g.id, "start_min", m)?,
            None => 2,
        };
        let start_max = match g.start_max {
            Some(m) => conv.instant(&g.id, "start_max", m)?,
            None => n_steps,
        };
        if !(2 <= start_min && start_min <= start_max && start_max <= n_steps) {
            return Err(invariant(
                &g.id,
                format!("start window must satisfy 2 <= {start_min} <= {start_max} <= {n_steps} (steps)"),
            ));
        }
        if g.black_start && start_min != 2 {
            return Err(invariant(&g.id, "black-start generators self-start at step 2; start_min must be one step"));
        }
        let crank_steps = conv.duration(
            &g.id,
            "crank_time",
            g.crank_time.unwrap_or(DEFAULT_GENERATOR_CRANK_MINUTES),
        )?;
        let ramp_steps = conv.duration(&g.id, "ramp_time", g.ramp_time)?;
        if crank_steps < 1 {
            return Err(invariant(&g.id, "crank_time must be at least one step"));
        }
        if ramp_steps < 1 {
            return Err(invariant(&g.id, "ramp_time must be at least one step"));
        }
        generators.push(Generator {
            id: g.id.clone(),
            bus,
            p_max: g.p_max,
            p_crank: g.p_crank,
            start_min,
            start_max,
            crank_steps,
            ramp_steps,
            is_black_start: g.black_start,
        });
    }

    let mut fuel_cells = Vec::with_capacity(doc.fuel_cells.len());
    for f in &doc.fuel_cells {
        check_id(&f.id, &mut seen)?;
        let bus = resolve(&f.id, &f.bus)?;
        check_finite(&f.id, "p_max", f.p_max)?;
        check_finite(&f.id, "p_crank", f.p_crank)?;
        if !(0.0 <= f.p_crank && f.p_crank < f.p_max) {
            return Err(invariant(&f.id, "requires 0 <= p_crank < p_max"));
        }
        let crank_steps = conv.duration(&f.id, "crank_time", f.crank_time)?;
        let ramp_steps = conv.duration(&f.id, "ramp_time", f.ramp_time)?;
        if ramp_steps < 1 {
            return Err(invariant(&f.id, "ramp_time must be at least one step"));
        }
        fuel_cells.push(FuelCell {
            id: f.id.clone(),
            bus,
            p_max: f.p_max,
            p_crank: f.p_crank,
            crank_steps,
            ramp_steps,
        });
    }

    let mut batteries = Vec::with_capacity(doc.batteries.len());
    for b in &doc.batteries {
        check_id(&b.id, &mut seen)?;
        let bus = resolve(&b.id, &b.bus)?;
        let p_min = b.p_min.unwrap_or(DEFAULT_BATTERY_MIN_FRACTION * b.p_max);
        let energy_capacity = b.energy_capacity.unwrap_or(b.soc_init);
        for (field, value) in [
            ("p_max", b.p_max),
            ("p_min", p_min),
            ("soc_init", b.soc_init),
            ("soc_min", b.soc_min),
            ("energy_capacity", energy_capacity),
        ] {
            check_finite(&b.id, field, value)?;
        }
        if !(0.0 <= p_min && p_min <= b.p_max) {
            return Err(invariant(&b.id, "requires 0 <= p_min <= p_max"));
        }
        if b.soc_min > b.soc_init {
            return Err(invariant(&b.id, "requires soc_min <= soc_init"));
        }
        if energy_capacity < b.soc_init {
            return Err(invariant(&b.id, "requires soc_init <= energy_capacity"));
        }
        let start_min = match b.start_min {
            Some(m) => conv.instant(&b.id, "start_min", m)?,
            None => 2,
        };
        if start_min < 2 {
            return Err(invariant(&b.id, "start_min must be at least one step after the blackout"));
        }
        batteries.push(Battery {
            id: b.id.clone(),
            bus,
            p_max: b.p_max,
            p_min,
            soc_init: b.soc_init,
            soc_min: b.soc_min,
            energy_capacity,
            start_min,
        });
    }

    let has_self_start = generators.iter().any(|g| g.is_black_start)
        || !fuel_cells.is_empty()
        || !batteries.is_empty();
    if !has_self_start {
        return Err(CaseError::NoSelfStart);
    }

    let beta = match doc.objective.beta {
        Some(beta) => beta,
        None => {
            DEFAULT_BETA_FRACTION
                * generators
                    .iter()
                    .map(Generator::weight)
                    .fold(0.0, f64::max)
        }
    };
    check_finite("objective", "beta", beta)?;
    if beta < 0.0 {
        return Err(invariant("objective", "beta must be nonnegative"));
    }

    Ok(GridCase::assemble(
        time, buses, branches, generators, fuel_cells, batteries, beta,
    ))
}

fn degrees(n_buses: usize, branches: &[Branch]) -> Vec<usize> {
    let mut degree = vec![0; n_buses];
    for br in branches {
        degree[br.from_bus] += 1;
        degree[br.to_bus] += 1;
    }
    degree
}

impl GridCase {
    fn assemble(
        time: TimeGrid,
        buses: Vec<Bus>,
        branches: Vec<Branch>,
        generators: Vec<Generator>,
        fuel_cells: Vec<FuelCell>,
        batteries: Vec<Battery>,
        beta: f64,
    ) -> Self {
        let mut adjacency = vec![BusAdjacency::default(); buses.len()];
        for (k, br) in branches.iter().enumerate() {
            adjacency[br.from_bus].branches.push(k);
            adjacency[br.to_bus].branches.push(k);
        }
        for (i, g) in generators.iter().enumerate() {
            adjacency[g.bus].generators.push(i);
        }
        for (i, f) in fuel_cells.iter().enumerate() {
            adjacency[f.bus].fuel_cells.push(i);
        }
        for (i, b) in batteries.iter().enumerate() {
            adjacency[b.bus].batteries.push(i);
        }
        for adj in &mut adjacency {
            adj.branches.sort_by(|&a, &b| branches[a].id.cmp(&branches[b].id));
            adj.generators
                .sort_by(|&a, &b| generators[a].id.cmp(&generators[b].id));
            adj.fuel_cells
                .sort_by(|&a, &b| fuel_cells[a].id.cmp(&fuel_cells[b].id));
            adj.batteries
                .sort_by(|&a, &b| batteries[a].id.cmp(&batteries[b].id));
        }
        Self {
            time,
            buses,
            branches,
            generators,
            fuel_cells,
            batteries,
            beta,
            adjacency,
        }
    }

    pub fn n_steps(&self) -> usize {
        self.time.n_steps
    }

    /// Incident branches and co-located devices of every bus (the sets K(b),
    /// G(b), F(b) and BA(b)), indexed like `buses`.
    pub fn adjacency(&self) -> &[BusAdjacency] {
        &self.adjacency
    }

    pub fn bus_index(&self, id: &str) -> Option<usize> {
        self.buses.iter().position(|b| b.id == id)
    }

    pub fn bus_degree(&self, bus: usize) -> usize {
        self.adjacency[bus].branches.len()
    }

    /// Bus indices sorted by descending degree; ties keep case order.
    pub fn buses_by_degree(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.buses.len()).collect();
        order.sort_by_key(|&b| std::cmp::Reverse(self.bus_degree(b)));
        order
    }

    /// Canonical document with every default made explicit.
    pub fn to_document(&self) -> CaseDocument {
        let step = self.time.step_minutes;
        let minutes = |steps: usize| steps as u32 * step;
        let instant = |t: usize| (t as u32 - 1) * step;
        let bus_id = |b: usize| self.buses[b].id.clone();
        CaseDocument {
            time: TimeSection {
                step_minutes: Some(step),
                horizon_minutes: Some(minutes(self.time.n_steps)),
            },
            buses: self
                .buses
                .iter()
                .map(|b| BusDoc {
                    id: b.id.clone(),
                    importance: Some(b.importance),
                })
                .collect(),
            branches: self
                .branches
                .iter()
                .map(|k| BranchDoc {
                    id: k.id.clone(),
                    from: bus_id(k.from_bus),
                    to: bus_id(k.to_bus),
                })
                .collect(),
            generators: self
                .generators
                .iter()
                .map(|g| GeneratorDoc {
                    id: g.id.clone(),
                    bus: bus_id(g.bus),
                    p_max: g.p_max,
                    p_crank: g.p_crank,
                    start_min: Some(instant(g.start_min)),
                    start_max: Some(instant(g.start_max)),
                    crank_time: Some(minutes(g.crank_steps)),
                    ramp_time: minutes(g.ramp_steps),
                    black_start: g.is_black_start,
                })
                .collect(),
            fuel_cells: self
                .fuel_cells
                .iter()
                .map(|f| FuelCellDoc {
                    id: f.id.clone(),
                    bus: bus_id(f.bus),
                    p_max: f.p_max,
                    p_crank: f.p_crank,
                    crank_time: minutes(f.crank_steps),
                    ramp_time: minutes(f.ramp_steps),
                })
                .collect(),
            batteries: self
                .batteries
                .iter()
                .map(|b| BatteryDoc {
                    id: b.id.clone(),
                    bus: bus_id(b.bus),
                    p_max: b.p_max,
                    p_min: Some(b.p_min),
                    soc_init: b.soc_init,
                    soc_min: b.soc_min,
                    energy_capacity: Some(b.energy_capacity),
                    start_min: Some(instant(b.start_min)),
                })
                .collect(),
            objective: ObjectiveSection {
                beta: Some(self.beta),
            },
        }
    }
}

/// Bus degree (number of incident branches) keyed by bus id.
pub fn bus_importance_from_degree(case: &GridCase) -> BTreeMap<String, f64> {
    case.buses
        .iter()
        .enumerate()
        .map(|(i, b)| (b.id.clone(), case.bus_degree(i) as f64))
        .collect()
}
