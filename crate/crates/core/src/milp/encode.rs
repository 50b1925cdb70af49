use std::collections::HashMap;

use thiserror::Error;

use super::{Assignment, MilpModel, Sense, VarKind, VarRef};
use crate::case::GridCase;
use crate::schedule::Schedule;
use crate::semantics::Lifecycle;

#[derive(Debug, Error, PartialEq)]
pub enum EncodeError {
    #[error("horizon of {n_steps} steps is too short for any generator or fuel cell to finish cranking and ramping (shortest needs {required})")]
    HorizonTooShort { n_steps: usize, required: usize },
}

/// Variable indices laid out per family, step-indexed by `t - 1`.
struct Layout {
    gen_start: Vec<Vec<usize>>,
    gen_power: Vec<Vec<usize>>,
    fc_start: Vec<Vec<usize>>,
    fc_on: Vec<Vec<usize>>,
    fc_max: Vec<Vec<usize>>,
    /// `[family][fc][t1 - 1][t2 - 1]` with families start, on, max.
    fc_anc: [Vec<Vec<Vec<usize>>>; 3],
    fc_power: Vec<Vec<usize>>,
    bus_on: Vec<Vec<usize>>,
    branch_on: Vec<Vec<usize>>,
    bat_ws: Vec<Vec<usize>>,
    bat_we: Vec<Vec<usize>>,
    bat_power: Vec<Vec<usize>>,
}

fn check_horizon(case: &GridCase) -> Result<(), EncodeError> {
    let n = case.n_steps();
    let needs = case
        .generators
        .iter()
        .map(|g| g.start_min + g.crank_steps + g.ramp_steps - 1)
        .chain(
            case.fuel_cells
                .iter()
                .map(|f| 2 + f.crank_steps + f.ramp_steps - 1),
        );
    match needs.min() {
        Some(required) if required > n => Err(EncodeError::HorizonTooShort {
            n_steps: n,
            required,
        }),
        _ => Ok(()),
    }
}

fn declare(case: &GridCase, m: &mut MilpModel) -> Layout {
    let n = case.n_steps();
    let series = |m: &mut MilpModel, kind: VarKind, id: &str, lo: f64, hi: f64| -> Vec<usize> {
        (1..=n)
            .map(|t| m.add_var(VarRef::at(kind, id, t), lo, hi, kind.is_binary()))
            .collect()
    };

    let mut gen_start = Vec::new();
    let mut gen_power = Vec::new();
    for g in &case.generators {
        gen_start.push(series(m, VarKind::GenStart, &g.id, 0.0, 1.0));
        let life = Lifecycle::of_generator(g);
        gen_power.push(series(m, VarKind::GenPower, &g.id, -life.crank_draw, g.p_max));
    }

    let mut fc_start = Vec::new();
    let mut fc_on = Vec::new();
    let mut fc_max = Vec::new();
    let mut fc_anc: [Vec<Vec<Vec<usize>>>; 3] = Default::default();
    let mut fc_power = Vec::new();
    for f in &case.fuel_cells {
        fc_start.push(series(m, VarKind::FcStart, &f.id, 0.0, 1.0));
        fc_on.push(series(m, VarKind::FcOn, &f.id, 0.0, 1.0));
        fc_max.push(series(m, VarKind::FcMax, &f.id, 0.0, 1.0));
        for (family, kind) in [VarKind::FcAncStart, VarKind::FcAncOn, VarKind::FcAncMax]
            .into_iter()
            .enumerate()
        {
            let grid = (1..=n)
                .map(|t1| {
                    (1..=n)
                        .map(|t2| m.add_binary(VarRef::pair(kind, &f.id, t1, t2)))
                        .collect()
                })
                .collect();
            fc_anc[family].push(grid);
        }
        fc_power.push(series(m, VarKind::FcPower, &f.id, -f.p_crank, f.p_max));
    }

    let bus_on = case
        .buses
        .iter()
        .map(|b| series(m, VarKind::BusOn, &b.id, 0.0, 1.0))
        .collect();
    let branch_on = case
        .branches
        .iter()
        .map(|k| series(m, VarKind::BranchOn, &k.id, 0.0, 1.0))
        .collect();

    let mut bat_ws = Vec::new();
    let mut bat_we = Vec::new();
    let mut bat_power = Vec::new();
    for b in &case.batteries {
        bat_ws.push(series(m, VarKind::BatStart, &b.id, 0.0, 1.0));
        bat_we.push(series(m, VarKind::BatEnd, &b.id, 0.0, 1.0));
        bat_power.push(series(m, VarKind::BatPower, &b.id, 0.0, b.p_max));
    }

    Layout {
        gen_start,
        gen_power,
        fc_start,
        fc_on,
        fc_max,
        fc_anc,
        fc_power,
        bus_on,
        branch_on,
        bat_ws,
        bat_we,
        bat_power,
    }
}

/// Builds the time-expanded restoration model.
pub fn encode(case: &GridCase) -> Result<MilpModel, EncodeError> {
    check_horizon(case)?;
    let n = case.n_steps();
    let nf = n as f64;
    let mut m = MilpModel::new();
    let v = declare(case, &mut m);

    // Generators.
    for (gi, g) in case.generators.iter().enumerate() {
        let u = &v.gen_start[gi];
        let id = &g.id;
        m.add_constraint(format!("eq35.{id}.t1"), [(u[0], 1.0)], Sense::Eq, 0.0);
        if g.is_black_start {
            m.add_constraint(format!("eq39.{id}.t2"), [(u[1], 1.0)], Sense::Eq, 1.0);
        }
        // Startup delay sum(1 - u) is at least start_min - 1 steps.
        m.add_constraint(
            format!("eq3.{id}"),
            u.iter().map(|&j| (j, 1.0)),
            Sense::Le,
            (n + 1 - g.start_min) as f64,
        );
        // A start, if any, happens no later than start_max.
        for t in g.start_max + 1..=n {
            m.add_constraint(
                format!("eq4.{id}.t{t}"),
                [(u[t - 1], 1.0), (u[g.start_max - 1], -1.0)],
                Sense::Le,
                0.0,
            );
        }
        for t in 1..n {
            m.add_constraint(
                format!("eq24.{id}.t{t}"),
                [(u[t - 1], 1.0), (u[t], -1.0)],
                Sense::Le,
                0.0,
            );
        }
        for t in 1..=n {
            m.add_constraint(
                format!("eq29.{id}.t{t}"),
                [(u[t - 1], 1.0), (v.bus_on[g.bus][t - 1], -1.0)],
                Sense::Le,
                0.0,
            );
        }
        // Output is a fixed linear image of the monotone start indicator:
        // p_t = sum_s u_s * (f(t - s) - f(t - s - 1)).
        let life = Lifecycle::of_generator(g);
        let offset = |d: isize| if d < 0 { 0.0 } else { life.at_offset(d as usize) };
        for t in 1..=n {
            let mut terms = vec![(v.gen_power[gi][t - 1], 1.0)];
            for s in 1..=t {
                let d = (t - s) as isize;
                terms.push((u[s - 1], -(offset(d) - offset(d - 1))));
            }
            m.add_constraint(format!("eq23.{id}.t{t}"), terms, Sense::Eq, 0.0);
        }
    }

    // Fuel cells.
    for (fi, f) in case.fuel_cells.iter().enumerate() {
        let id = &f.id;
        let start = &v.fc_start[fi];
        let on = &v.fc_on[fi];
        let max = &v.fc_max[fi];
        let status = [start, on, max];
        let crank = f.crank_steps;
        let ramp = f.ramp_steps;

        m.add_constraint(format!("eq36.{id}.t1"), [(start[0], 1.0)], Sense::Eq, 0.0);
        m.add_constraint(format!("eq40.{id}.t2"), [(start[1], 1.0)], Sense::Eq, 1.0);
        for t in 1..n {
            m.add_constraint(
                format!("eq24.{id}.t{t}"),
                [(start[t - 1], 1.0), (start[t], -1.0)],
                Sense::Le,
                0.0,
            );
            m.add_constraint(
                format!("eq25.{id}.t{t}"),
                [(max[t - 1], 1.0), (max[t], -1.0)],
                Sense::Le,
                0.0,
            );
        }
        // Stage links: on rises crank_steps after start, max rises
        // ramp_steps after on.
        for t in 1..=n {
            let mut terms = vec![(on[t - 1], 1.0)];
            if t > crank {
                terms.push((start[t - 1 - crank], -1.0));
            }
            m.add_constraint(format!("eq27.{id}.t{t}"), terms, Sense::Eq, 0.0);
            let mut terms = vec![(max[t - 1], 1.0)];
            if t > ramp {
                terms.push((on[t - 1 - ramp], -1.0));
            }
            m.add_constraint(format!("eq28.{id}.t{t}"), terms, Sense::Eq, 0.0);
        }
        // Timing cuts: T - sum(u_start) >= t (1 - u_start_t) and the
        // cranking-window analogue.
        for t in 1..=n {
            let tf = t as f64;
            let mut terms: Vec<(usize, f64)> = start.iter().map(|&j| (j, 1.0)).collect();
            terms.push((start[t - 1], -tf));
            m.add_constraint(format!("eq17.{id}.t{t}"), terms, Sense::Le, nf - tf);

            let lag = tf - crank as f64;
            let mut terms: Vec<(usize, f64)> = start.iter().map(|&j| (j, 1.0)).collect();
            terms.push((start[t - 1], lag));
            terms.push((on[t - 1], -lag));
            m.add_constraint(format!("eq19.{id}.t{t}"), terms, Sense::Le, nf);
        }
        // Product linearization y = u_t1 * u_t2 for each status family.
        let tags = [("eq6", "eq7", "eq8"), ("eq10", "eq11", "eq12"), ("eq14", "eq15", "eq16")];
        for (family, (lo, up1, up2)) in tags.into_iter().enumerate() {
            let u = status[family];
            let y = &v.fc_anc[family][fi];
            for t1 in 1..=n {
                for t2 in 1..=n {
                    let yv = y[t1 - 1][t2 - 1];
                    let (a, b) = (u[t1 - 1], u[t2 - 1]);
                    m.add_constraint(
                        format!("{lo}.{id}.t{t1}.t{t2}"),
                        [(yv, 1.0), (a, -1.0), (b, -1.0)],
                        Sense::Ge,
                        -1.0,
                    );
                    m.add_constraint(format!("{up1}.{id}.t{t1}.t{t2}"), [(yv, 1.0), (a, -1.0)], Sense::Le, 0.0);
                    m.add_constraint(format!("{up2}.{id}.t{t1}.t{t2}"), [(yv, 1.0), (b, -1.0)], Sense::Le, 0.0);
                }
            }
        }
        // Stage-entry timing: u_t2 * (steps before entry) <= (t2 - 1) * u_t2,
        // written with the product variables.
        for (family, tag) in ["eq18", "eq20", "eq22"].into_iter().enumerate() {
            let u = status[family];
            let y = &v.fc_anc[family][fi];
            for t2 in 1..=n {
                let mut terms = vec![(u[t2 - 1], nf - (t2 as f64 - 1.0))];
                terms.extend((1..=n).map(|t1| (y[t1 - 1][t2 - 1], -1.0)));
                m.add_constraint(format!("{tag}.{id}.t{t2}"), terms, Sense::Le, 0.0);
            }
        }
        // Output: -p_crank while cranking, rate * (t2 - t_on) while ramping,
        // rate * (t_max - t_on) = p_max afterwards, with t_on * u_on_t2 and
        // t_max * u_max_t2 expressed through the product sums.
        let rate = f.p_max / ramp as f64;
        let y_on = &v.fc_anc[1][fi];
        let y_max = &v.fc_anc[2][fi];
        for t2 in 1..=n {
            let shift = t2 as f64 - nf;
            let mut terms = vec![
                (v.fc_power[fi][t2 - 1], 1.0),
                (start[t2 - 1], f.p_crank),
                (on[t2 - 1], -f.p_crank - rate * shift),
                (max[t2 - 1], rate * shift),
            ];
            for t1 in 1..=n {
                terms.push((y_on[t1 - 1][t2 - 1], -rate));
                terms.push((y_max[t1 - 1][t2 - 1], rate));
            }
            m.add_constraint(format!("eq23.{id}.t{t2}"), terms, Sense::Eq, 0.0);
        }
        for t in 1..=n {
            m.add_constraint(
                format!("eq29.{id}.t{t}"),
                [(start[t - 1], 1.0), (v.bus_on[f.bus][t - 1], -1.0)],
                Sense::Le,
                0.0,
            );
        }
    }

    // Buses.
    for (bi, bus) in case.buses.iter().enumerate() {
        let id = &bus.id;
        let ub = &v.bus_on[bi];
        let adj = &case.adjacency()[bi];
        m.add_constraint(format!("eq37.{id}.t1"), [(ub[0], 1.0)], Sense::Eq, 0.0);
        for t in 1..n {
            m.add_constraint(
                format!("eq32.{id}.t{t}"),
                [(ub[t - 1], 1.0), (ub[t], -1.0)],
                Sense::Le,
                0.0,
            );
        }
        for t in 1..=n {
            let mut terms = vec![(ub[t - 1], 1.0)];
            terms.extend(adj.branches.iter().map(|&k| (v.branch_on[k][t - 1], -1.0)));
            terms.extend(
                adj.generators
                    .iter()
                    .filter(|&&g| case.generators[g].is_black_start)
                    .map(|&g| (v.gen_start[g][t - 1], -1.0)),
            );
            terms.extend(adj.fuel_cells.iter().map(|&f| (v.fc_start[f][t - 1], -1.0)));
            terms.extend(adj.batteries.iter().map(|&b| (v.bat_ws[b][t - 1], -1.0)));
            m.add_constraint(format!("eq34.{id}.t{t}"), terms, Sense::Le, 0.0);
        }
    }

    // Branches.
    for (ki, br) in case.branches.iter().enumerate() {
        let id = &br.id;
        let uk = &v.branch_on[ki];
        let from = &v.bus_on[br.from_bus];
        let to = &v.bus_on[br.to_bus];
        m.add_constraint(format!("eq38.{id}.t1"), [(uk[0], 1.0)], Sense::Eq, 0.0);
        for t in 1..=n {
            m.add_constraint(
                format!("eq30.{id}.t{t}"),
                [(uk[t - 1], 1.0), (from[t - 1], -1.0)],
                Sense::Le,
                0.0,
            );
            m.add_constraint(
                format!("eq31.{id}.t{t}"),
                [(uk[t - 1], 1.0), (to[t - 1], -1.0)],
                Sense::Le,
                0.0,
            );
        }
        for t in 1..n {
            m.add_constraint(
                format!("eq32.{id}.t{t}"),
                [(uk[t - 1], 1.0), (uk[t], -1.0)],
                Sense::Le,
                0.0,
            );
            m.add_constraint(
                format!("eq33.{id}.t{t}"),
                [(uk[t], 1.0), (from[t - 1], -1.0), (to[t - 1], -1.0)],
                Sense::Le,
                0.0,
            );
        }
    }

    // Batteries.
    let hours = case.time.step_hours();
    for (bi, b) in case.batteries.iter().enumerate() {
        let id = &b.id;
        let ws = &v.bat_ws[bi];
        let we = &v.bat_we[bi];
        let p = &v.bat_power[bi];
        for t in 1..=n {
            m.add_constraint(
                format!("eq41.{id}.t{t}"),
                [(we[t - 1], 1.0), (ws[t - 1], -1.0)],
                Sense::Le,
                0.0,
            );
            m.add_constraint(
                format!("eq46a.{id}.t{t}"),
                [(p[t - 1], 1.0), (ws[t - 1], -b.p_min), (we[t - 1], b.p_min)],
                Sense::Ge,
                0.0,
            );
            m.add_constraint(
                format!("eq46b.{id}.t{t}"),
                [(p[t - 1], 1.0), (ws[t - 1], -b.p_max), (we[t - 1], b.p_max)],
                Sense::Le,
                0.0,
            );
        }
        for t in 2..=n {
            m.add_constraint(
                format!("eq42.{id}.t{t}"),
                [(ws[t - 2], 1.0), (ws[t - 1], -1.0)],
                Sense::Le,
                0.0,
            );
            m.add_constraint(
                format!("eq43.{id}.t{t}"),
                [(we[t - 2], 1.0), (we[t - 1], -1.0)],
                Sense::Le,
                0.0,
            );
        }
        m.add_constraint(
            format!("eq45.{id}"),
            ws.iter().map(|&j| (j, 1.0)),
            Sense::Le,
            (n + 1 - b.start_min) as f64,
        );
        m.add_constraint(
            format!("eq47.{id}"),
            p.iter().map(|&j| (j, hours)),
            Sense::Le,
            b.soc_init - b.soc_min,
        );
    }

    // System-wide cranking balance.
    for t in 1..=n {
        let terms = v
            .gen_power
            .iter()
            .chain(&v.fc_power)
            .chain(&v.bat_power)
            .map(|series| (series[t - 1], 1.0));
        m.add_constraint(format!("eq2.system.t{t}"), terms, Sense::Ge, 0.0);
    }

    // Capacity-weighted startup delay minus the energization reward.
    let mut objective = Vec::new();
    let mut offset = 0.0;
    for (gi, g) in case.generators.iter().enumerate() {
        offset += g.weight() * nf;
        objective.extend(v.gen_start[gi].iter().map(|&j| (j, -g.weight())));
    }
    for (bi, bus) in case.buses.iter().enumerate() {
        for t in 1..=n {
            let c = -case.beta * bus.importance / t as f64;
            objective.push((v.bus_on[bi][t - 1], c));
        }
    }
    m.set_objective(objective, offset);
    Ok(m)
}

/// Expresses a schedule as a full model assignment, deriving status,
/// product and power variables from the device semantics.
pub fn lift_schedule(case: &GridCase, model: &MilpModel, schedule: &Schedule) -> Assignment {
    let index_of = |ids: Vec<&String>| -> HashMap<String, usize> {
        ids.into_iter().cloned().enumerate().map(|(i, id)| (id, i)).collect()
    };
    let gens = index_of(case.generators.iter().map(|g| &g.id).collect());
    let fcs = index_of(case.fuel_cells.iter().map(|f| &f.id).collect());
    let bats = index_of(case.batteries.iter().map(|b| &b.id).collect());
    let buses = index_of(case.buses.iter().map(|b| &b.id).collect());
    let branches = index_of(case.branches.iter().map(|k| &k.id).collect());
    let flag = |cond: bool| if cond { 1.0 } else { 0.0 };
    let reached = |start: Option<usize>, delay: usize, t: usize| start.is_some_and(|s| s + delay <= t);

    let fc_status = |fi: usize, family: usize, t: usize| -> f64 {
        let f = &case.fuel_cells[fi];
        let delay = match family {
            0 => 0,
            1 => f.crank_steps,
            _ => f.crank_steps + f.ramp_steps,
        };
        flag(reached(schedule.fuel_cells[fi].start, delay, t))
    };

    let values = model
        .variables
        .iter()
        .map(|var| {
            let r = &var.var;
            let t = r.steps[0];
            let e = r.entity.as_str();
            match r.kind {
                VarKind::GenStart => flag(reached(schedule.generators[gens[e]].start, 0, t)),
                VarKind::GenPower => {
                    let gi = gens[e];
                    Lifecycle::of_generator(&case.generators[gi]).power(schedule.generators[gi].start, t)
                }
                VarKind::FcStart => fc_status(fcs[e], 0, t),
                VarKind::FcOn => fc_status(fcs[e], 1, t),
                VarKind::FcMax => fc_status(fcs[e], 2, t),
                VarKind::FcAncStart | VarKind::FcAncOn | VarKind::FcAncMax => {
                    let family = match r.kind {
                        VarKind::FcAncStart => 0,
                        VarKind::FcAncOn => 1,
                        _ => 2,
                    };
                    let fi = fcs[e];
                    fc_status(fi, family, r.steps[0]) * fc_status(fi, family, r.steps[1])
                }
                VarKind::FcPower => {
                    let fi = fcs[e];
                    Lifecycle::of_fuel_cell(&case.fuel_cells[fi]).power(schedule.fuel_cells[fi].start, t)
                }
                VarKind::BusOn => flag(schedule.buses[buses[e]].at(t)),
                VarKind::BranchOn => flag(schedule.branches[branches[e]].at(t)),
                VarKind::BatStart => flag(schedule.batteries[bats[e]].has_started(t)),
                VarKind::BatEnd => flag(reached(schedule.batteries[bats[e]].end, 0, t)),
                VarKind::BatPower => {
                    let d = &schedule.batteries[bats[e]];
                    if d.is_discharging(t) {
                        d.dispatch[t - 1]
                    } else {
                        0.0
                    }
                }
            }
        })
        .collect();
    Assignment(values)
}
