//! Independent schedule checker.
//!
//! Every check recomputes device trajectories from [`crate::semantics`] and
//! never trusts solver-reported continuous values; a reported value that
//! disagrees with the closed form is itself a violation. Violations carry the
//! tag of the equation family they break (`eq29`, `eq47`, ...).

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::case::GridCase;
use crate::schedule::{ReportedPower, Schedule};
use crate::semantics::{soc_trajectory, DeviceTrajectories, PowerTrajectory};

/// Balance and power-agreement tolerance, MW.
pub const BALANCE_TOL: f64 = 1e-6;

/// Every equation family the validator checks.
pub const CHECKED_TAGS: [&str; 20] = [
    "eq2", "eq3", "eq4", "eq23", "eq29", "eq30", "eq31", "eq32", "eq33", "eq34", "eq35", "eq36",
    "eq37", "eq38", "eq39", "eq40", "eq41", "eq45", "eq46", "eq47",
];

#[derive(Debug, Error, PartialEq)]
pub enum ValidationError {
    #[error("schedule shape does not match the case: {0}")]
    Shape(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub tag: String,
    pub entity: String,
    pub step: Option<usize>,
    pub lhs: f64,
    pub rhs: f64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SocSeries {
    pub id: String,
    pub soc: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Energization {
    pub id: String,
    pub step: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub pass: bool,
    pub violations: Vec<Violation>,
    pub system_power: Vec<f64>,
    pub soc: Vec<SocSeries>,
    pub bus_energization: Vec<Energization>,
}

impl ValidationReport {
    pub fn tags(&self) -> Vec<&str> {
        let mut tags: Vec<&str> = self.violations.iter().map(|v| v.tag.as_str()).collect();
        tags.sort_unstable();
        tags.dedup();
        tags
    }

    pub fn has_tag(&self, tag: &str) -> bool {
        self.violations.iter().any(|v| v.tag == tag)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn check_shape(case: &GridCase, s: &Schedule) -> Result<(), ValidationError> {
    let n = case.n_steps();
    let fail = |msg: String| Err(ValidationError::Shape(msg));
    if s.n_steps != n {
        return fail(format!("{} steps, case has {n}", s.n_steps));
    }
    let ids_match = |what: &str, got: Vec<&String>, want: Vec<&String>| -> Result<(), ValidationError> {
        if got != want {
            return Err(ValidationError::Shape(format!("{what} ids differ from the case")));
        }
        Ok(())
    };
    ids_match(
        "generator",
        s.generators.iter().map(|d| &d.id).collect(),
        case.generators.iter().map(|g| &g.id).collect(),
    )?;
    ids_match(
        "fuel cell",
        s.fuel_cells.iter().map(|d| &d.id).collect(),
        case.fuel_cells.iter().map(|f| &f.id).collect(),
    )?;
    ids_match(
        "battery",
        s.batteries.iter().map(|d| &d.id).collect(),
        case.batteries.iter().map(|b| &b.id).collect(),
    )?;
    ids_match(
        "bus",
        s.buses.iter().map(|d| &d.id).collect(),
        case.buses.iter().map(|b| &b.id).collect(),
    )?;
    ids_match(
        "branch",
        s.branches.iter().map(|d| &d.id).collect(),
        case.branches.iter().map(|k| &k.id).collect(),
    )?;
    let in_range = |t: Option<usize>| t.is_none_or(|t| (1..=n).contains(&t));
    for d in s.generators.iter().chain(&s.fuel_cells) {
        if !in_range(d.start) {
            return fail(format!("{}: start step outside 1..={n}", d.id));
        }
    }
    for b in &s.batteries {
        if !in_range(b.start) || !in_range(b.end) {
            return fail(format!("{}: window step outside 1..={n}", b.id));
        }
        if b.dispatch.len() != n {
            return fail(format!("{}: dispatch has {} steps", b.id, b.dispatch.len()));
        }
    }
    for series in s.buses.iter().chain(&s.branches) {
        if series.on.len() != n {
            return fail(format!("{}: status has {} steps", series.id, series.on.len()));
        }
    }
    if let Some(rep) = &s.reported_power {
        let ok = rep.generators.len() == case.generators.len()
            && rep.fuel_cells.len() == case.fuel_cells.len()
            && rep.generators.iter().chain(&rep.fuel_cells).all(|p| p.len() == n);
        if !ok {
            return fail("reported power shape".into());
        }
    }
    Ok(())
}

struct Collector(Vec<Violation>);

impl Collector {
    fn push(&mut self, tag: &str, entity: &str, step: Option<usize>, lhs: f64, rhs: f64, message: impl Into<String>) {
        self.0.push(Violation {
            tag: tag.to_string(),
            entity: entity.to_string(),
            step,
            lhs,
            rhs,
            message: message.into(),
        });
    }
}

/// True when some self-start device at `bus` has started by step `t`.
fn source_started(case: &GridCase, s: &Schedule, bus: usize, t: usize) -> bool {
    let adj = &case.adjacency()[bus];
    let by = |start: Option<usize>| start.is_some_and(|st| st <= t);
    adj.generators
        .iter()
        .any(|&g| case.generators[g].is_black_start && by(s.generators[g].start))
        || adj.fuel_cells.iter().any(|&f| by(s.fuel_cells[f].start))
        || adj.batteries.iter().any(|&b| s.batteries[b].has_started(t))
}

pub fn validate(case: &GridCase, s: &Schedule) -> Result<ValidationReport, ValidationError> {
    check_shape(case, s)?;
    let n = case.n_steps();
    let mut out = Collector(Vec::new());
    let flag = |b: bool| if b { 1.0 } else { 0.0 };

    // Blackout at step 1.
    for d in &s.generators {
        if d.start == Some(1) {
            out.push("eq35", &d.id, Some(1), 1.0, 0.0, "generator started during the blackout step");
        }
    }
    for d in &s.fuel_cells {
        if d.start == Some(1) {
            out.push("eq36", &d.id, Some(1), 1.0, 0.0, "fuel cell started during the blackout step");
        }
    }
    for b in &s.buses {
        if b.at(1) {
            out.push("eq37", &b.id, Some(1), 1.0, 0.0, "bus energized during the blackout step");
        }
    }
    for k in &s.branches {
        if k.at(1) {
            out.push("eq38", &k.id, Some(1), 1.0, 0.0, "branch energized during the blackout step");
        }
    }

    // Self-start and start windows.
    for (g, d) in case.generators.iter().zip(&s.generators) {
        if g.is_black_start && d.start.is_none_or(|st| st > 2) {
            let on = d.start.is_some_and(|st| st <= 2);
            out.push("eq39", &d.id, Some(2), flag(on), 1.0, "black-start generator not started at step 2");
        }
        if let Some(st) = d.start {
            if st < g.start_min {
                out.push("eq3", &d.id, Some(st), (st - 1) as f64, (g.start_min - 1) as f64, "start before the earliest allowed step");
            }
            if st > g.start_max {
                out.push("eq4", &d.id, Some(st), (st - 1) as f64, (g.start_max - 1) as f64, "start after the latest allowed step");
            }
        }
    }
    for d in &s.fuel_cells {
        if d.start.is_none_or(|st| st > 2) {
            let on = d.start.is_some_and(|st| st <= 2);
            out.push("eq40", &d.id, Some(2), flag(on), 1.0, "fuel cell not started at step 2");
        }
    }
    for (b, d) in case.batteries.iter().zip(&s.batteries) {
        if let Some(st) = d.start {
            if st < b.start_min {
                out.push("eq45", &d.id, Some(st), (st - 1) as f64, (b.start_min - 1) as f64, "discharge starts before the earliest allowed step");
            }
        }
        if let Some(end) = d.end {
            if d.start.is_none_or(|st| end < st) {
                out.push("eq41", &d.id, Some(end), 1.0, flag(d.start.is_some_and(|st| st <= end)), "discharge ends before it starts");
            }
        }
    }

    // Balance from closed-form trajectories.
    let traj = DeviceTrajectories::compute(case, s);
    let system = traj.system(n);
    for t in 1..=n {
        if system.at(t) < -BALANCE_TOL {
            out.push("eq2", "system", Some(t), system.at(t), 0.0, "cranking demand exceeds available supply");
        }
    }

    // Reported continuous values against the closed form.
    if let Some(rep) = &s.reported_power {
        let pairs = rep
            .generators
            .iter()
            .zip(&traj.generators)
            .zip(&s.generators)
            .map(|((r, p), d)| (r, p, &d.id))
            .chain(
                rep.fuel_cells
                    .iter()
                    .zip(&traj.fuel_cells)
                    .zip(&s.fuel_cells)
                    .map(|((r, p), d)| (r, p, &d.id)),
            );
        for (reported, semantic, id) in pairs {
            for t in 1..=n {
                if (reported[t - 1] - semantic.at(t)).abs() > BALANCE_TOL {
                    out.push("eq23", id, Some(t), reported[t - 1], semantic.at(t), "reported output disagrees with the device lifecycle");
                }
            }
        }
    }

    // Device starts need an energized bus.
    let starters = case
        .generators
        .iter()
        .map(|g| g.bus)
        .zip(&s.generators)
        .chain(case.fuel_cells.iter().map(|f| f.bus).zip(&s.fuel_cells));
    for (bus, d) in starters {
        if let Some(st) = d.start {
            for t in st..=n {
                if !s.buses[bus].at(t) {
                    out.push("eq29", &d.id, Some(t), 1.0, 0.0, format!("started while bus {} is dark", case.buses[bus].id));
                }
            }
        }
    }

    // Branch energization.
    for (br, k) in case.branches.iter().zip(&s.branches) {
        let from = &s.buses[br.from_bus];
        let to = &s.buses[br.to_bus];
        for t in 1..=n {
            if k.at(t) && !from.at(t) {
                out.push("eq30", &k.id, Some(t), 1.0, 0.0, format!("energized while endpoint {} is dark", from.id));
            }
            if k.at(t) && !to.at(t) {
                out.push("eq31", &k.id, Some(t), 1.0, 0.0, format!("energized while endpoint {} is dark", to.id));
            }
        }
        for t in 1..n {
            if k.at(t + 1) && !from.at(t) && !to.at(t) {
                out.push("eq33", &k.id, Some(t), 1.0, 0.0, "energized without an endpoint energized one step earlier");
            }
        }
    }

    // Monotone energization.
    for series in s.buses.iter().chain(&s.branches) {
        for t in 1..n {
            if series.at(t) && !series.at(t + 1) {
                out.push("eq32", &series.id, Some(t), 1.0, 0.0, "de-energized after being energized");
            }
        }
    }

    // Bus energization needs an energized branch or a started source.
    for (bi, b) in s.buses.iter().enumerate() {
        let adj = &case.adjacency()[bi];
        for t in 1..=n {
            if b.at(t)
                && !adj.branches.iter().any(|&k| s.branches[k].at(t))
                && !source_started(case, s, bi, t)
            {
                out.push("eq34", &b.id, Some(t), 1.0, 0.0, "energized with no energized branch or started source");
            }
        }
    }

    // Battery dispatch bounds and SOC floor.
    let mut soc = Vec::new();
    for ((b, d), p) in case.batteries.iter().zip(&s.batteries).zip(&traj.batteries) {
        for t in 1..=n {
            let x = d.dispatch[t - 1];
            if d.is_discharging(t) {
                if x < b.p_min - BALANCE_TOL {
                    out.push("eq46", &d.id, Some(t), x, b.p_min, "discharge below the minimum");
                } else if x > b.p_max + BALANCE_TOL {
                    out.push("eq46", &d.id, Some(t), x, b.p_max, "discharge above the maximum");
                }
            } else if x.abs() > BALANCE_TOL {
                out.push("eq46", &d.id, Some(t), x, 0.0, "discharge outside the window");
            }
        }
        let clipped = PowerTrajectory(p.0.iter().map(|x| x.max(0.0)).collect());
        let trajectory = soc_trajectory(b, &clipped, case.time.step_minutes);
        if let Some(&t) = trajectory.below_floor.first() {
            out.push("eq47", &d.id, Some(t), trajectory.soc[t - 1], b.soc_min, "state of charge below the floor");
        }
        soc.push(SocSeries {
            id: d.id.clone(),
            soc: trajectory.soc,
        });
    }

    let bus_energization = s
        .buses
        .iter()
        .map(|b| Energization {
            id: b.id.clone(),
            step: b.first_on(),
        })
        .collect();

    Ok(ValidationReport {
        pass: out.0.is_empty(),
        violations: out.0,
        system_power: system.0,
        soc,
        bus_energization,
    })
}

// ---------------------------------------------------------------------------
// Energization witnesses
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainElement {
    Bus,
    Branch,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainLink {
    pub element: ChainElement,
    pub id: String,
    pub step: usize,
}

#[derive(Debug, Error, PartialEq)]
pub enum ChainError {
    #[error("unknown bus `{0}`")]
    UnknownBus(String),
    #[error("bus `{0}` is never energized")]
    NeverEnergized(String),
    #[error("no energization chain from a self-start resource reaches bus `{0}`")]
    NoChain(String),
}

/// Witness path from `bus` back to a self-start resource, outermost first.
/// Each branch hop is energized at least one step after the bus it was fed
/// from, and the chain ends at a bus whose own source had started by the
/// time it energized.
pub fn energization_chain(case: &GridCase, s: &Schedule, bus: &str) -> Result<Vec<ChainLink>, ChainError> {
    let b = case
        .bus_index(bus)
        .ok_or_else(|| ChainError::UnknownBus(bus.to_string()))?;
    if s.buses.get(b).and_then(|x| x.first_on()).is_none() {
        return Err(ChainError::NeverEnergized(bus.to_string()));
    }
    let mut dead = HashSet::new();
    witness(case, s, b, &mut dead).ok_or_else(|| ChainError::NoChain(bus.to_string()))
}

fn witness(case: &GridCase, s: &Schedule, b: usize, dead: &mut HashSet<usize>) -> Option<Vec<ChainLink>> {
    if dead.contains(&b) {
        return None;
    }
    let e = s.buses[b].first_on()?;
    let head = ChainLink {
        element: ChainElement::Bus,
        id: case.buses[b].id.clone(),
        step: e,
    };
    if source_started(case, s, b, e) {
        return Some(vec![head]);
    }
    for &k in &case.adjacency()[b].branches {
        if !s.branches[k].at(e) {
            continue;
        }
        let ek = s.branches[k].first_on()?;
        let upstream = case.branches[k].other_end(b);
        let Some(eu) = s.buses[upstream].first_on() else {
            continue;
        };
        if eu + 1 > ek {
            continue;
        }
        if let Some(rest) = witness(case, s, upstream, dead) {
            let mut chain = vec![
                head,
                ChainLink {
                    element: ChainElement::Branch,
                    id: case.branches[k].id.clone(),
                    step: ek,
                },
            ];
            chain.extend(rest);
            return Some(chain);
        }
    }
    dead.insert(b);
    None
}

/// Checks a chain against the one-hop-per-step rule: alternating elements,
/// bus steps strictly decreasing, each branch no later than the bus it feeds
/// and at least one step after the bus feeding it.
pub fn chain_is_well_formed(chain: &[ChainLink]) -> bool {
    if chain.is_empty() || chain.len().is_multiple_of(2) {
        return false;
    }
    chain.iter().enumerate().all(|(i, link)| {
        let expected = if i % 2 == 0 { ChainElement::Bus } else { ChainElement::Branch };
        link.element == expected
    }) && chain.windows(3).step_by(2).all(|w| {
        let (down, branch, up) = (&w[0], &w[1], &w[2]);
        branch.step <= down.step && branch.step > up.step
    })
}

// ---------------------------------------------------------------------------
// Mutation suite
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MutationOutcome {
    /// Equation family the mutation is built to break.
    pub target: String,
    pub description: String,
    pub detected: bool,
    pub target_reported: bool,
    pub reported_tags: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MutationSummary {
    pub outcomes: Vec<MutationOutcome>,
}

impl MutationSummary {
    pub fn detections(&self) -> usize {
        self.outcomes.iter().filter(|o| o.detected).count()
    }

    pub fn mutations(&self) -> usize {
        self.outcomes.len()
    }

    pub fn all_detected(&self) -> bool {
        self.detections() == self.mutations()
    }

    pub fn targets(&self) -> Vec<&str> {
        let mut t: Vec<&str> = self.outcomes.iter().map(|o| o.target.as_str()).collect();
        t.sort_unstable();
        t.dedup();
        t
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum MutationError {
    #[error(transparent)]
    Shape(#[from] ValidationError),
    #[error("baseline schedule does not validate: {0:?}")]
    InvalidBaseline(Vec<String>),
}

struct Mutation {
    target: &'static str,
    description: String,
    schedule: Schedule,
}

fn standard_mutations(case: &GridCase, base: &Schedule) -> Vec<Mutation> {
    let n = case.n_steps();
    let mut out = Vec::new();
    // Start changes invalidate reported power; only the eq23 mutation keeps it.
    let fresh = || {
        let mut s = base.clone();
        s.reported_power = None;
        s
    };
    let mut add = |target: &'static str, description: String, schedule: Schedule| {
        out.push(Mutation {
            target,
            description,
            schedule,
        })
    };

    for (gi, g) in case.generators.iter().enumerate() {
        let id = &g.id;
        let start = base.generators[gi].start;
        if g.is_black_start {
            if n >= 3 {
                let mut s = fresh();
                s.generators[gi].start = Some(3);
                add("eq39", format!("{id}: self-start delayed to step 3"), s);
            }
            continue;
        }
        if start.is_none() {
            continue;
        }
        let mut s = fresh();
        s.generators[gi].start = Some(g.start_min - 1);
        add("eq3", format!("{id}: start one step before its window"), s);
        if g.start_max < n {
            let mut s = fresh();
            s.generators[gi].start = Some(g.start_max + 1);
            add("eq4", format!("{id}: start one step after its window"), s);
        }
        if let Some(e) = base.buses[g.bus].first_on() {
            let mut s = fresh();
            s.generators[gi].start = Some(e - 1);
            add("eq29", format!("{id}: start one step before its bus energizes"), s);
        }
    }
    if let Some(gi) = case.generators.iter().position(|g| !g.is_black_start) {
        let mut s = fresh();
        s.generators[gi].start = Some(1);
        add("eq35", format!("{}: started during the blackout step", case.generators[gi].id), s);
    }
    for (fi, f) in case.fuel_cells.iter().enumerate() {
        if n >= 3 {
            let mut s = fresh();
            s.fuel_cells[fi].start = Some(3);
            add("eq40", format!("{}: self-start delayed to step 3", f.id), s);
        }
        let mut s = fresh();
        s.fuel_cells[fi].start = Some(1);
        add("eq36", format!("{}: started during the blackout step", f.id), s);
    }

    if !base.buses.is_empty() {
        let mut s = fresh();
        s.buses[0].on[0] = true;
        add("eq37", format!("{}: energized during the blackout step", base.buses[0].id), s);
    }
    if !base.branches.is_empty() {
        let mut s = fresh();
        s.branches[0].on[0] = true;
        add("eq38", format!("{}: energized during the blackout step", base.branches[0].id), s);
    }

    // Break one monotone flag on a bus and on a branch.
    for (kind, series) in [("bus", &base.buses), ("branch", &base.branches)] {
        if let Some((i, e)) = series
            .iter()
            .enumerate()
            .find_map(|(i, x)| x.first_on().filter(|&e| e < n).map(|e| (i, e)))
        {
            let mut s = fresh();
            let target = if kind == "bus" { &mut s.buses[i] } else { &mut s.branches[i] };
            target.on[e] = false;
            add("eq32", format!("{}: {kind} de-energized at step {}", series[i].id, e + 1), s);
        }
    }

    // Energize a branch one step early.
    let mut seen_from = false;
    let mut seen_to = false;
    let mut seen_hop = false;
    for (ki, br) in case.branches.iter().enumerate() {
        let Some(e) = base.branches[ki].first_on() else {
            continue;
        };
        if e < 2 {
            continue;
        }
        let from_off = !base.buses[br.from_bus].at(e - 1);
        let to_off = !base.buses[br.to_bus].at(e - 1);
        let mut early = fresh();
        early.branches[ki].on[e - 2] = true;
        if from_off && !seen_from {
            seen_from = true;
            add("eq30", format!("{}: energized at step {} with its from-bus dark", br.id, e - 1), early.clone());
        }
        if to_off && !seen_to {
            seen_to = true;
            add("eq31", format!("{}: energized at step {} with its to-bus dark", br.id, e - 1), early.clone());
        }
        if e >= 3 && !seen_hop && !base.buses[br.from_bus].at(e - 2) && !base.buses[br.to_bus].at(e - 2) {
            seen_hop = true;
            add("eq33", format!("{}: energized at step {} with no endpoint live at step {}", br.id, e - 1, e - 2), early);
        }
    }

    // Energize a bus one step before anything could feed it.
    if let Some((bi, e)) = base.buses.iter().enumerate().find_map(|(bi, b)| {
        let e = b.first_on()?;
        let fed = |t: usize| {
            case.adjacency()[bi].branches.iter().any(|&k| base.branches[k].at(t))
                || source_started(case, base, bi, t)
        };
        (e >= 3 && !fed(e - 1)).then_some((bi, e))
    }) {
        let mut s = fresh();
        s.buses[bi].on[e - 2] = true;
        add("eq34", format!("{}: energized at step {} with nothing feeding it", base.buses[bi].id, e - 1), s);
    }

    // Batteries.
    let hours = case.time.step_hours();
    for (bi, b) in case.batteries.iter().enumerate() {
        let d = &base.batteries[bi];
        let Some(start) = d.start else {
            continue;
        };
        if b.start_min >= 2 {
            let mut s = fresh();
            let early = b.start_min - 1;
            s.batteries[bi].start = Some(early);
            if s.batteries[bi].end.is_some_and(|e| e < early) {
                s.batteries[bi].end = Some(early);
            }
            add("eq45", format!("{}: discharge starts before its window", b.id), s);
        }
        if start >= 2 {
            let mut s = fresh();
            s.batteries[bi].end = Some(start - 1);
            add("eq41", format!("{}: discharge ends before it starts", b.id), s);
        }
        if let Some(t) = (1..=n).find(|&t| d.is_discharging(t)) {
            let mut s = fresh();
            s.batteries[bi].dispatch[t - 1] = b.p_max + 1.0;
            add("eq46", format!("{}: dispatch above maximum at step {t}", b.id), s);

            let drawn: f64 = (1..t)
                .filter(|&u| d.is_discharging(u))
                .map(|u| d.dispatch[u - 1] * hours)
                .sum();
            let remaining = b.soc_init - b.soc_min - drawn;
            let mut s = fresh();
            s.batteries[bi].dispatch[t - 1] = remaining / hours + 1.0;
            add("eq47", format!("{}: overdraw at step {t}", b.id), s);
        }
    }

    // Balance: pull a waiting generator's start forward until its cranking
    // load cannot be covered, or trim a battery's dispatch to its minimum.
    let base_power = DeviceTrajectories::compute(case, base).system(n);
    let short = |s: &Schedule| {
        let p = DeviceTrajectories::compute(case, s).system(n);
        (1..=n).any(|t| p.at(t) < -BALANCE_TOL)
    };
    let mut balance_found = false;
    'gens: for (gi, g) in case.generators.iter().enumerate() {
        if g.is_black_start {
            continue;
        }
        let current = base.generators[gi].start.unwrap_or(n + 1);
        for t in g.start_min..current.min(g.start_max + 1) {
            if !base.buses[g.bus].at(t) {
                continue;
            }
            let mut s = fresh();
            s.generators[gi].start = Some(t);
            if short(&s) {
                add("eq2", format!("{}: start pulled forward to step {t} without cranking power", g.id), s);
                balance_found = true;
                break 'gens;
            }
        }
    }
    if !balance_found {
        'bats: for (bi, b) in case.batteries.iter().enumerate() {
            let d = &base.batteries[bi];
            for t in 1..=n {
                if d.is_discharging(t) && base_power.at(t) - d.dispatch[t - 1] + b.p_min < -BALANCE_TOL {
                    let mut s = fresh();
                    s.batteries[bi].dispatch[t - 1] = b.p_min;
                    add("eq2", format!("{}: dispatch trimmed to minimum at step {t}", b.id), s);
                    break 'bats;
                }
            }
        }
    }

    // Schedules that never went through a solver get the semantic trajectories
    // as their reported output, so the eq23 check is exercised either way.
    if !case.generators.is_empty() {
        let mut s = base.clone();
        let rep = s.reported_power.get_or_insert_with(|| {
            let traj = DeviceTrajectories::compute(case, base);
            ReportedPower {
                generators: traj.generators.iter().map(|p| p.values().to_vec()).collect(),
                fuel_cells: traj.fuel_cells.iter().map(|p| p.values().to_vec()).collect(),
            }
        });
        rep.generators[0][n - 1] += 1.0;
        add("eq23", format!("{}: reported output off by 1 MW at step {n}", case.generators[0].id), s);
    }

    out
}

/// Applies the standard targeted mutations to a valid schedule and records
/// whether the validator catches each one.
pub fn mutation_suite(case: &GridCase, schedule: &Schedule) -> Result<MutationSummary, MutationError> {
    let baseline = validate(case, schedule)?;
    if !baseline.pass {
        return Err(MutationError::InvalidBaseline(
            baseline.tags().into_iter().map(String::from).collect(),
        ));
    }
    let mut summary = MutationSummary::default();
    for m in standard_mutations(case, schedule) {
        let report = validate(case, &m.schedule)?;
        summary.outcomes.push(MutationOutcome {
            detected: !report.pass,
            target_reported: report.has_tag(m.target),
            reported_tags: report.tags().into_iter().map(String::from).collect(),
            target: m.target.to_string(),
            description: m.description,
        });
    }
    Ok(summary)
}
