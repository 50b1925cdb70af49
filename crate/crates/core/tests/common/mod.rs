#![allow(dead_code)]

use std::path::PathBuf;

use blackstart::case::{load_case_file, GridCase};
use blackstart::schedule::{BatteryDecision, Schedule};
use blackstart::solver::SolverCommand;

pub const TOY_CASES: [&str; 4] = ["t3_path", "t4_battery", "t5_ring", "t6_mixed"];

pub fn repo_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn case_path(name: &str) -> PathBuf {
    repo_root().join("cases").join(format!("{name}.json"))
}

pub fn load(name: &str) -> GridCase {
    load_case_file(case_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// HiGHS through `scripts/milp_solve.py`.
pub fn highs() -> SolverCommand {
    let script = repo_root().join("scripts/milp_solve.py");
    SolverCommand::parse(&format!("python3 {} {{mps}} {{sol}}", script.display())).unwrap()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs())
}

/// Schedule with the given generator starts (case order), fuel cells started
/// at step 2, the given battery decisions, and buses/branches energized by
/// the earliest closure from whatever sources have started.
pub fn closure_schedule(
    case: &GridCase,
    gens: &[Option<usize>],
    batteries: Vec<BatteryDecision>,
) -> Schedule {
    let n = case.n_steps();
    let mut s = Schedule::dark(case);
    for (d, &start) in s.generators.iter_mut().zip(gens) {
        d.start = start;
    }
    for d in &mut s.fuel_cells {
        d.start = Some(2);
    }
    s.batteries = batteries;

    let source_by = |b: usize, t: usize| {
        let adj = &case.adjacency()[b];
        adj.generators
            .iter()
            .any(|&g| case.generators[g].is_black_start && gens[g].is_some_and(|x| x <= t))
            || adj.fuel_cells.iter().any(|_| t >= 2)
            || adj.batteries.iter().any(|&i| s.batteries[i].has_started(t))
    };
    let mut bus_on = vec![vec![false; n]; case.buses.len()];
    let mut branch_on = vec![vec![false; n]; case.branches.len()];
    for t in 2..=n {
        for (k, br) in case.branches.iter().enumerate() {
            branch_on[k][t - 1] =
                branch_on[k][t - 2] || bus_on[br.from_bus][t - 2] || bus_on[br.to_bus][t - 2];
        }
        for (b, on) in bus_on.iter_mut().enumerate() {
            on[t - 1] = on[t - 2]
                || source_by(b, t)
                || case.adjacency()[b].branches.iter().any(|&k| branch_on[k][t - 1]);
        }
    }
    for (series, on) in s.buses.iter_mut().zip(bus_on) {
        series.on = on;
    }
    for (series, on) in s.branches.iter_mut().zip(branch_on) {
        series.on = on;
    }
    s
}

/// Battery discharging at a constant level over `[start, end)`.
pub fn battery_window(id: &str, n: usize, start: usize, end: Option<usize>, level: f64) -> BatteryDecision {
    let mut d = BatteryDecision::idle(id, n);
    d.start = Some(start);
    d.end = end;
    for t in 1..=n {
        if d.is_discharging(t) {
            d.dispatch[t - 1] = level;
        }
    }
    d
}

/// Every start step for each NBS generator (window or never), black-start
/// generators pinned to step 2.
pub fn generator_choices(case: &GridCase) -> Vec<Vec<Option<usize>>> {
    let n = case.n_steps();
    let mut combos: Vec<Vec<Option<usize>>> = vec![vec![]];
    for g in &case.generators {
        let options: Vec<Option<usize>> = if g.is_black_start {
            vec![Some(2)]
        } else {
            std::iter::once(None)
                .chain((g.start_min..=g.start_max.min(n)).map(Some))
                .collect()
        };
        combos = combos
            .into_iter()
            .flat_map(|c| {
                options.iter().map(move |&o| {
                    let mut c = c.clone();
                    c.push(o);
                    c
                })
            })
            .collect();
    }
    combos
}
