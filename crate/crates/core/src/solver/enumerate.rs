use std::cmp::Ordering;
use std::time::Instant;

use rayon::prelude::*;

use super::{SolveError, SolveResult, SolveStats, SolveStatus};
use crate::case::GridCase;
use crate::milp::{encode, lift_schedule, objective_value};
use crate::schedule::{BatteryDecision, DeviceDecision, Schedule, StatusSeries};
use crate::semantics::{Lifecycle, PowerTrajectory, POWER_TOL};
use crate::validate::validate;

pub const DEFAULT_COMBINATION_CAP: u128 = 20_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumLimits {
    pub cap: u128,
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
}

impl Default for EnumLimits {
    fn default() -> Self {
        Self {
            cap: DEFAULT_COMBINATION_CAP,
            workers: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BatteryChoice {
    Idle,
    /// Discharge over `[start, end)`; `end == None` runs to the horizon.
    Window { start: usize, end: Option<usize> },
}

/// Per-device option lists; combinations are their cartesian product.
struct Space {
    generators: Vec<Vec<Option<usize>>>,
    batteries: Vec<Vec<BatteryChoice>>,
}

impl Space {
    fn new(case: &GridCase) -> Self {
        let n = case.n_steps();
        let generators = case
            .generators
            .iter()
            .map(|g| {
                if g.is_black_start {
                    vec![Some(2)]
                } else {
                    std::iter::once(None)
                        .chain((g.start_min..=g.start_max.min(n)).map(Some))
                        .collect()
                }
            })
            .collect();
        let batteries = case
            .batteries
            .iter()
            .map(|b| {
                let mut options = vec![BatteryChoice::Idle];
                for start in b.start_min..=n {
                    for end in (start..=n).map(Some).chain([None]) {
                        options.push(BatteryChoice::Window { start, end });
                    }
                }
                options
            })
            .collect();
        Self { generators, batteries }
    }

    fn radices(&self) -> impl Iterator<Item = usize> + '_ {
        self.generators
            .iter()
            .map(Vec::len)
            .chain(self.batteries.iter().map(Vec::len))
    }

    fn size(&self) -> u128 {
        self.radices().map(|r| r as u128).product()
    }

    fn decode(&self, mut index: u128) -> (Vec<Option<usize>>, Vec<BatteryChoice>) {
        let mut take = |len: usize| {
            let i = (index % len as u128) as usize;
            index /= len as u128;
            i
        };
        let gens = self.generators.iter().map(|o| o[take(o.len())]).collect();
        let bats = self.batteries.iter().map(|o| o[take(o.len())]).collect();
        (gens, bats)
    }
}

/// Number of decision combinations the oracle would simulate.
pub fn count_combinations(case: &GridCase) -> u128 {
    Space::new(case).size()
}

/// Earliest step each bus and branch can be live given the source start
/// steps: energization spreads one branch hop per step.
fn earliest_closure(case: &GridCase, source_step: &[Option<usize>]) -> (Vec<Option<usize>>, Vec<Option<usize>>) {
    let n = case.n_steps();
    let mut bus: Vec<Option<usize>> = vec![None; case.buses.len()];
    for t in 2..=n {
        let previous = bus.clone();
        for (b, slot) in bus.iter_mut().enumerate() {
            if slot.is_some() {
                continue;
            }
            let by_source = source_step[b].is_some_and(|s| s <= t);
            let by_branch = case.adjacency()[b]
                .branches
                .iter()
                .any(|&k| previous[case.branches[k].other_end(b)].is_some());
            if by_source || by_branch {
                *slot = Some(t);
            }
        }
    }
    let branch = case
        .branches
        .iter()
        .map(|k| match (bus[k.from_bus], bus[k.to_bus]) {
            (Some(a), Some(b)) => Some((a.min(b) + 1).max(a.max(b))).filter(|&t| t <= n),
            _ => None,
        })
        .collect();
    (bus, branch)
}

#[derive(Debug, Clone)]
struct Candidate {
    objective: f64,
    key: Vec<usize>,
    schedule: Schedule,
}

fn better(a: &Candidate, b: &Candidate) -> Ordering {
    a.objective
        .total_cmp(&b.objective)
        .then_with(|| a.key.cmp(&b.key))
}

/// Tie-break key: generators then batteries, each group in id order, each
/// device contributing its start step (batteries also their end step),
/// "never" sorting last.
fn tie_key(case: &GridCase, gens: &[Option<usize>], bats: &[BatteryChoice], order: &[(bool, usize)]) -> Vec<usize> {
    let never = case.n_steps() + 1;
    let mut key = Vec::with_capacity(order.len() * 2);
    for &(is_battery, i) in order {
        if is_battery {
            match bats[i] {
                BatteryChoice::Idle => key.extend([never, never]),
                BatteryChoice::Window { start, end } => key.extend([start, end.unwrap_or(never)]),
            }
        } else {
            key.push(gens[i].unwrap_or(never));
        }
    }
    key
}

fn simulate(case: &GridCase, gens: &[Option<usize>], bats: &[BatteryChoice]) -> Option<Schedule> {
    let n = case.n_steps();
    let hours = case.time.step_hours();

    let mut source_step: Vec<Option<usize>> = vec![None; case.buses.len()];
    let mut mark = |bus: usize, t: usize| {
        let slot = &mut source_step[bus];
        *slot = Some(slot.map_or(t, |s: usize| s.min(t)));
    };
    for (g, start) in case.generators.iter().zip(gens) {
        if g.is_black_start {
            mark(g.bus, start.expect("black-start units start at step 2"));
        }
    }
    for f in &case.fuel_cells {
        mark(f.bus, 2);
    }
    for (b, choice) in case.batteries.iter().zip(bats) {
        if let BatteryChoice::Window { start, .. } = choice {
            mark(b.bus, *start);
        }
    }
    let (bus_step, branch_step) = earliest_closure(case, &source_step);

    for (g, start) in case.generators.iter().zip(gens) {
        if let Some(s) = start {
            if bus_step[g.bus].is_none_or(|e| e > *s) {
                return None;
            }
        }
    }

    let mut base = PowerTrajectory::zeros(n);
    for (g, start) in case.generators.iter().zip(gens) {
        base.add(&Lifecycle::of_generator(g).trajectory(*start, n));
    }
    for f in &case.fuel_cells {
        base.add(&Lifecycle::of_fuel_cell(f).trajectory(Some(2), n));
    }

    let mut decisions: Vec<BatteryDecision> = case
        .batteries
        .iter()
        .zip(bats)
        .map(|(b, choice)| match *choice {
            BatteryChoice::Idle => BatteryDecision::idle(b.id.clone(), n),
            BatteryChoice::Window { start, end } => BatteryDecision {
                id: b.id.clone(),
                start: Some(start),
                end,
                dispatch: vec![0.0; n],
            },
        })
        .collect();

    // Greedy minimal dispatch: every discharging battery gives its minimum,
    // any remaining deficit is covered in case order.
    for t in 1..=n {
        let active: Vec<usize> = (0..decisions.len())
            .filter(|&i| decisions[i].is_discharging(t))
            .collect();
        let mut deficit = -base.at(t);
        for &i in &active {
            decisions[i].dispatch[t - 1] = case.batteries[i].p_min;
            deficit -= case.batteries[i].p_min;
        }
        for &i in &active {
            if deficit <= 0.0 {
                break;
            }
            let b = &case.batteries[i];
            let extra = deficit.min(b.p_max - b.p_min);
            decisions[i].dispatch[t - 1] += extra;
            deficit -= extra;
        }
        if deficit > POWER_TOL {
            return None;
        }
    }
    for (b, d) in case.batteries.iter().zip(&decisions) {
        let drawn: f64 = d.dispatch.iter().map(|p| p * hours).sum();
        if drawn > b.soc_init - b.soc_min + POWER_TOL {
            return None;
        }
    }

    let status = |step: Option<usize>, id: &str| StatusSeries {
        id: id.to_string(),
        on: (1..=n).map(|t| step.is_some_and(|s| s <= t)).collect(),
    };
    Some(Schedule {
        n_steps: n,
        generators: case
            .generators
            .iter()
            .zip(gens)
            .map(|(g, start)| DeviceDecision {
                id: g.id.clone(),
                start: *start,
            })
            .collect(),
        fuel_cells: case
            .fuel_cells
            .iter()
            .map(|f| DeviceDecision {
                id: f.id.clone(),
                start: Some(2),
            })
            .collect(),
        batteries: decisions,
        buses: case
            .buses
            .iter()
            .zip(&bus_step)
            .map(|(b, &s)| status(s, &b.id))
            .collect(),
        branches: case
            .branches
            .iter()
            .zip(&branch_step)
            .map(|(k, &s)| status(s, &k.id))
            .collect(),
        reported_power: None,
    })
}

fn search(case: &GridCase, space: &Space, total: u128) -> Option<Candidate> {
    let mut order: Vec<(bool, usize)> = (0..case.generators.len())
        .map(|i| (false, i))
        .chain((0..case.batteries.len()).map(|i| (true, i)))
        .collect();
    let id_of = |&(is_battery, i): &(bool, usize)| {
        let id = if is_battery {
            case.batteries[i].id.clone()
        } else {
            case.generators[i].id.clone()
        };
        (is_battery, id)
    };
    order.sort_by_key(id_of);

    (0..total as u64)
        .into_par_iter()
        .filter_map(|index| {
            let (gens, bats) = space.decode(index as u128);
            let schedule = simulate(case, &gens, &bats)?;
            Some(Candidate {
                objective: objective_value(case, &schedule),
                key: tie_key(case, &gens, &bats, &order),
                schedule,
            })
        })
        .reduce_with(|a, b| if better(&b, &a) == Ordering::Less { b } else { a })
}

/// Exhaustive search over start decisions with a forward simulation of
/// each combination. Buses and branches energize as early as the
/// one-hop-per-step rule allows, and batteries discharge only what the
/// balance needs. Returns the combination minimising the restoration
/// objective; the winning schedule is validated before it is returned.
pub fn solve_enumeration(case: &GridCase, limits: EnumLimits) -> Result<SolveResult, SolveError> {
    let clock = Instant::now();
    let model = encode(case)?;
    let space = Space::new(case);
    let total = space.size();
    if total > limits.cap {
        return Err(SolveError::CapExceeded {
            combinations: total,
            cap: limits.cap,
        });
    }

    let best = match limits.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| SolveError::Command(e.to_string()))?
            .install(|| search(case, &space, total)),
        None => search(case, &space, total),
    };
    let stats = || SolveStats {
        wall_seconds: clock.elapsed().as_secs_f64(),
        explored: total as u64,
    };

    let Some(best) = best else {
        return Ok(SolveResult::without_solution(
            SolveStatus::Infeasible,
            stats(),
            "no feasible decision combination",
        ));
    };
    let report = validate(case, &best.schedule)?;
    let assignment = lift_schedule(case, &model, &best.schedule);
    let status = if report.pass {
        SolveStatus::Optimal
    } else {
        SolveStatus::Error
    };
    Ok(SolveResult {
        status,
        assignment: Some(assignment),
        objective: Some(best.objective),
        schedule: Some(best.schedule),
        stats: stats(),
        message: (!report.pass).then(|| "oracle schedule failed validation".to_string()),
        report: Some(report),
    })
}
