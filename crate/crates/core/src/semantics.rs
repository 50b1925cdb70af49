//! Closed-form device trajectories.
//!
//! Generators and fuel cells share one lifecycle: nothing before the start
//! step, `crank_steps` steps drawing the cranking power, a linear ramp whose
//! k-th step delivers `p_max * k / ramp_steps`, then `p_max`. Black-start
//! generators supply their own cranking power, so their cranking phase
//! injects nothing into the grid. Batteries only discharge, at a free level
//! inside `[p_min, p_max]` during their window.

use thiserror::Error;

use crate::case::{Battery, FuelCell, Generator, GridCase};
use crate::schedule::{BatteryDecision, Schedule};

/// Tolerance for bound checks on MW and MWh quantities.
pub const POWER_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum SemanticsError {
    #[error("{id}: dispatch {value} MW at step {step} outside [{p_min}, {p_max}]")]
    DispatchOutOfBounds {
        id: String,
        step: usize,
        value: f64,
        p_min: f64,
        p_max: f64,
    },
}

/// Per-step net injection of one device, indexed by `t - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerTrajectory(pub Vec<f64>);

impl PowerTrajectory {
    pub fn zeros(n_steps: usize) -> Self {
        Self(vec![0.0; n_steps])
    }

    pub fn at(&self, t: usize) -> f64 {
        self.0[t - 1]
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn add(&mut self, other: &PowerTrajectory) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += b;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lifecycle {
    pub p_max: f64,
    /// MW drawn from the grid while cranking.
    pub crank_draw: f64,
    pub crank_steps: usize,
    pub ramp_steps: usize,
}

impl Lifecycle {
    pub fn of_generator(g: &Generator) -> Self {
        Self {
            p_max: g.p_max,
            crank_draw: if g.is_black_start { 0.0 } else { g.p_crank },
            crank_steps: g.crank_steps,
            ramp_steps: g.ramp_steps,
        }
    }

    pub fn of_fuel_cell(f: &FuelCell) -> Self {
        Self {
            p_max: f.p_max,
            crank_draw: f.p_crank,
            crank_steps: f.crank_steps,
            ramp_steps: f.ramp_steps,
        }
    }

    /// Injection `offset` steps after the start step (offset 0 is the start).
    pub fn at_offset(&self, offset: usize) -> f64 {
        if offset < self.crank_steps {
            -self.crank_draw
        } else {
            let k = offset - self.crank_steps + 1;
            if k >= self.ramp_steps {
                self.p_max
            } else {
                self.p_max * k as f64 / self.ramp_steps as f64
            }
        }
    }

    pub fn power(&self, start: Option<usize>, t: usize) -> f64 {
        match start {
            Some(s) if t >= s => self.at_offset(t - s),
            _ => 0.0,
        }
    }

    pub fn trajectory(&self, start: Option<usize>, n_steps: usize) -> PowerTrajectory {
        PowerTrajectory((1..=n_steps).map(|t| self.power(start, t)).collect())
    }
}

pub fn fuel_cell_power(fc: &FuelCell, start: Option<usize>, t: usize) -> f64 {
    Lifecycle::of_fuel_cell(fc).power(start, t)
}

pub fn generator_power(g: &Generator, start: Option<usize>, t: usize) -> f64 {
    Lifecycle::of_generator(g).power(start, t)
}

fn in_window(start: Option<usize>, end: Option<usize>, t: usize) -> bool {
    match start {
        Some(s) => t >= s && end.is_none_or(|e| t < e),
        None => false,
    }
}

/// Dispatch at step `t`; zero outside the window, checked against the
/// battery's bounds inside it.
pub fn battery_power(
    b: &Battery,
    start: Option<usize>,
    end: Option<usize>,
    t: usize,
    dispatch: &[f64],
) -> Result<f64, SemanticsError> {
    if !in_window(start, end, t) {
        return Ok(0.0);
    }
    let value = dispatch[t - 1];
    if value < b.p_min - POWER_TOL || value > b.p_max + POWER_TOL {
        return Err(SemanticsError::DispatchOutOfBounds {
            id: b.id.clone(),
            step: t,
            value,
            p_min: b.p_min,
            p_max: b.p_max,
        });
    }
    Ok(value)
}

pub fn battery_trajectory(
    b: &Battery,
    decision: &BatteryDecision,
    n_steps: usize,
) -> Result<PowerTrajectory, SemanticsError> {
    (1..=n_steps)
        .map(|t| battery_power(b, decision.start, decision.end, t, &decision.dispatch))
        .collect::<Result<Vec<_>, _>>()
        .map(PowerTrajectory)
}

/// Window-masked dispatch without bound checks.
pub fn battery_trajectory_unchecked(decision: &BatteryDecision, n_steps: usize) -> PowerTrajectory {
    PowerTrajectory(
        (1..=n_steps)
            .map(|t| {
                if decision.is_discharging(t) {
                    decision.dispatch[t - 1]
                } else {
                    0.0
                }
            })
            .collect(),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct SocTrajectory {
    /// State of charge after each step's discharge, MWh, indexed by `t - 1`.
    pub soc: Vec<f64>,
    /// Steps whose SOC fell below the floor.
    pub below_floor: Vec<usize>,
}

impl SocTrajectory {
    pub fn is_feasible(&self) -> bool {
        self.below_floor.is_empty()
    }
}

pub fn soc_trajectory(b: &Battery, trajectory: &PowerTrajectory, step_minutes: u32) -> SocTrajectory {
    let hours = f64::from(step_minutes) / 60.0;
    let mut soc = Vec::with_capacity(trajectory.0.len());
    let mut below_floor = Vec::new();
    let mut level = b.soc_init;
    for (i, p) in trajectory.0.iter().enumerate() {
        level -= p * hours;
        if level < b.soc_min - POWER_TOL {
            below_floor.push(i + 1);
        }
        soc.push(level);
    }
    SocTrajectory { soc, below_floor }
}

/// Per-device trajectories for a schedule, aligned with the case's devices.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceTrajectories {
    pub generators: Vec<PowerTrajectory>,
    pub fuel_cells: Vec<PowerTrajectory>,
    pub batteries: Vec<PowerTrajectory>,
}

impl DeviceTrajectories {
    pub fn compute(case: &GridCase, schedule: &Schedule) -> Self {
        let n = case.n_steps();
        Self {
            generators: case
                .generators
                .iter()
                .zip(&schedule.generators)
                .map(|(g, d)| Lifecycle::of_generator(g).trajectory(d.start, n))
                .collect(),
            fuel_cells: case
                .fuel_cells
                .iter()
                .zip(&schedule.fuel_cells)
                .map(|(f, d)| Lifecycle::of_fuel_cell(f).trajectory(d.start, n))
                .collect(),
            batteries: schedule
                .batteries
                .iter()
                .map(|d| battery_trajectory_unchecked(d, n))
                .collect(),
        }
    }

    pub fn generation(&self, n_steps: usize) -> PowerTrajectory {
        let mut total = PowerTrajectory::zeros(n_steps);
        self.generators.iter().for_each(|p| total.add(p));
        total
    }

    pub fn storage(&self, n_steps: usize) -> PowerTrajectory {
        let mut total = PowerTrajectory::zeros(n_steps);
        self.fuel_cells.iter().for_each(|p| total.add(p));
        self.batteries.iter().for_each(|p| total.add(p));
        total
    }

    pub fn system(&self, n_steps: usize) -> PowerTrajectory {
        let mut total = self.generation(n_steps);
        total.add(&self.storage(n_steps));
        total
    }
}

/// Pointwise sum of every device's injection.
pub fn system_power(case: &GridCase, schedule: &Schedule) -> PowerTrajectory {
    DeviceTrajectories::compute(case, schedule).system(case.n_steps())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::case::load_case_json;
    use proptest::prelude::*;

    fn fc(p_max: f64, p_crank: f64, crank: usize, ramp: usize) -> FuelCell {
        FuelCell {
            id: "fc".into(),
            bus: 0,
            p_max,
            p_crank,
            crank_steps: crank,
            ramp_steps: ramp,
        }
    }

    fn gen(p_max: f64, p_crank: f64, crank: usize, ramp: usize) -> Generator {
        Generator {
            id: "g".into(),
            bus: 0,
            p_max,
            p_crank,
            start_min: 2,
            start_max: 18,
            crank_steps: crank,
            ramp_steps: ramp,
            is_black_start: false,
        }
    }

    fn battery() -> Battery {
        Battery {
            id: "bt".into(),
            bus: 0,
            p_max: 50.0,
            p_min: 5.0,
            soc_init: 50.0,
            soc_min: 0.0,
            energy_capacity: 50.0,
            start_min: 2,
        }
    }

    /// Phase lookup written independently of `Lifecycle::at_offset`.
    fn phase_oracle(p_max: f64, p_crank: f64, crank: usize, ramp: usize, start: usize, t: usize) -> f64 {
        if t < start {
            return 0.0;
        }
        let crank_end = start + crank; // first ramp step
        if t < crank_end {
            return -p_crank;
        }
        let done = crank_end + ramp; // first step strictly after the ramp
        if t >= done {
            return p_max;
        }
        let ramp_position = (t - crank_end + 1) as f64;
        (p_max / ramp as f64 * ramp_position).min(p_max)
    }

    #[test]
    fn fuel_cell_phases() {
        let f = fc(50.0, 5.0, 3, 2);
        assert_eq!(fuel_cell_power(&f, Some(2), 3), -5.0);
        assert_eq!(fuel_cell_power(&f, Some(2), 1), 0.0);
        assert_eq!(fuel_cell_power(&f, Some(2), 5), 25.0);
        assert_eq!(fuel_cell_power(&f, Some(2), 6), 50.0);
        assert_eq!(fuel_cell_power(&f, Some(2), 7), 50.0);
        for t in 1..=10 {
            assert_eq!(fuel_cell_power(&f, Some(2), t), phase_oracle(50.0, 5.0, 3, 2, 2, t));
        }
    }

    #[test]
    fn generator_phases() {
        let g = gen(100.0, 10.0, 3, 2);
        assert_eq!(generator_power(&g, Some(4), 5), -10.0);
        for t in 1..4 {
            assert_eq!(generator_power(&g, Some(4), t), 0.0);
        }
        assert_eq!(generator_power(&g, Some(4), 9), 100.0);
        assert_eq!(generator_power(&g, None, 9), 0.0);
    }

    #[test]
    fn black_start_generator_cranks_itself() {
        let mut g = gen(100.0, 10.0, 3, 2);
        g.is_black_start = true;
        assert_eq!(generator_power(&g, Some(2), 2), 0.0);
        assert_eq!(generator_power(&g, Some(2), 5), 50.0);
    }

    #[test]
    fn battery_window() {
        let b = battery();
        let dispatch = vec![50.0; 8];
        assert_eq!(battery_power(&b, Some(3), Some(6), 4, &dispatch), Ok(50.0));
        assert_eq!(battery_power(&b, Some(3), Some(6), 6, &dispatch), Ok(0.0));
        for t in 1..=8 {
            assert_eq!(battery_power(&b, Some(3), Some(3), t, &dispatch), Ok(0.0));
        }
        let low = vec![3.0; 8];
        assert!(matches!(
            battery_power(&b, Some(3), Some(6), 4, &low),
            Err(SemanticsError::DispatchOutOfBounds { step: 4, .. })
        ));
    }

    #[test]
    fn soc_arithmetic() {
        let b = battery();
        let traj = PowerTrajectory(vec![50.0, 50.0, 50.0]);
        let soc = soc_trajectory(&b, &traj, 20);
        let expected = [100.0 / 3.0, 50.0 / 3.0, 0.0];
        for (got, want) in soc.soc.iter().zip(expected) {
            assert!((got - want).abs() < 1e-9);
        }
        assert!(soc.is_feasible());

        let traj = PowerTrajectory(vec![50.0; 4]);
        let soc = soc_trajectory(&b, &traj, 20);
        assert!((soc.soc[3] + 50.0 / 3.0).abs() < 1e-9);
        assert_eq!(soc.below_floor, vec![4]);

        let soc = soc_trajectory(&b, &PowerTrajectory::zeros(5), 20);
        assert!(soc.soc.iter().all(|&s| s == 50.0));
    }

    fn small_case() -> GridCase {
        load_case_json(
            r#"{
            "time": {"step_minutes": 20, "horizon_minutes": 200},
            "buses": [{"id": "b1"}, {"id": "b2"}],
            "branches": [{"id": "k1", "from": "b1", "to": "b2"}],
            "generators": [
                {"id": "g1", "bus": "b1", "p_max": 80, "p_crank": 8, "ramp_time": 40, "black_start": true},
                {"id": "g2", "bus": "b2", "p_max": 100, "p_crank": 10, "ramp_time": 40}
            ],
            "fuel_cells": [{"id": "fc1", "bus": "b1", "p_max": 50, "ramp_time": 20}]
        }"#,
        )
        .unwrap()
    }

    #[test]
    fn system_power_sums_devices() {
        let case = small_case();
        let mut s = Schedule::dark(&case);
        assert!(system_power(&case, &s).values().iter().all(|&p| p == 0.0));

        s.generators[0].start = Some(2);
        let only_bs = system_power(&case, &s);
        let bs = Lifecycle::of_generator(&case.generators[0]).trajectory(Some(2), 10);
        assert_eq!(only_bs, bs);

        s.generators[0].start = None;
        s.fuel_cells[0].start = Some(2);
        s.generators[1].start = Some(4);
        // FC at 50 from step 2; g2 cranks at -10 on steps 4..=6.
        let net = system_power(&case, &s);
        for t in 4..=6 {
            assert_eq!(net.at(t), 40.0);
        }
    }

    proptest! {
        #[test]
        fn lifecycle_matches_phase_oracle(
            p_max in 1.0f64..500.0, frac in 0.0f64..0.99, crank in 0usize..5,
            ramp in 1usize..6, start in 2usize..12, n in 2usize..24,
        ) {
            let f = fc(p_max, p_max * frac, crank, ramp);
            let traj = Lifecycle::of_fuel_cell(&f).trajectory(Some(start), n);
            for t in 1..=n {
                let want = phase_oracle(p_max, p_max * frac, crank, ramp, start, t);
                prop_assert!((traj.at(t) - want).abs() < 1e-9);
            }
            // zero before start, nondecreasing from the first ramp step, bounded.
            for t in 1..start.min(n + 1) {
                prop_assert_eq!(traj.at(t), 0.0);
            }
            for t in (start + crank).max(1)..n {
                prop_assert!(traj.at(t + 1) >= traj.at(t));
            }
            for t in 1..=n {
                prop_assert!(traj.at(t) >= -p_max * frac && traj.at(t) <= p_max);
                if t >= start + crank + ramp {
                    prop_assert_eq!(traj.at(t), p_max);
                }
            }
            let long = Lifecycle::of_fuel_cell(&f).trajectory(Some(start), start + crank + ramp + 2);
            let min = long.values().iter().cloned().fold(f64::INFINITY, f64::min);
            let max = long.values().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if crank > 0 { prop_assert_eq!(min, -p_max * frac); }
            prop_assert_eq!(max, p_max);
        }

        #[test]
        fn soc_is_nonincreasing(dispatch in proptest::collection::vec(0.0f64..60.0, 1..20)) {
            let b = battery();
            let traj = PowerTrajectory(dispatch.clone());
            let soc = soc_trajectory(&b, &traj, 20);
            for w in soc.soc.windows(2) {
                prop_assert!(w[1] <= w[0]);
            }
            if soc.is_feasible() {
                let energy: f64 = dispatch.iter().map(|p| p / 3.0).sum();
                prop_assert!(energy <= b.soc_init - b.soc_min + 1e-6);
            }
        }

        #[test]
        fn system_power_is_linear(
            g1 in proptest::option::of(2usize..10), g2 in proptest::option::of(2usize..10),
            f1 in proptest::option::of(2usize..10),
        ) {
            let case = small_case();
            let mut all = Schedule::dark(&case);
            all.generators[0].start = g1;
            all.generators[1].start = g2;
            all.fuel_cells[0].start = f1;
            let mut parts = PowerTrajectory::zeros(case.n_steps());
            for which in 0..3 {
                let mut single = Schedule::dark(&case);
                match which {
                    0 => single.generators[0].start = g1,
                    1 => single.generators[1].start = g2,
                    _ => single.fuel_cells[0].start = f1,
                }
                parts.add(&system_power(&case, &single));
            }
            let whole = system_power(&case, &all);
            for t in 1..=case.n_steps() {
                prop_assert!((whole.at(t) - parts.at(t)).abs() < 1e-9);
            }
        }
    }
}
