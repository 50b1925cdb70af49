mod common;

use blackstart::case::load_case_json;
use blackstart::milp::{decode, encode, lift_schedule, objective_value, Assignment, MilpModel, VarKind, VarRef};
use blackstart::schedule::BatteryDecision;
use blackstart::semantics::DeviceTrajectories;
use blackstart::validate::validate;
use common::{battery_window, closure_schedule, generator_choices};

const ONE_FC_T4: &str = r#"{
    "time": {"step_minutes": 20, "horizon_minutes": 80},
    "buses": [{"id": "b1"}, {"id": "b2"}],
    "branches": [{"id": "k1", "from": "b1", "to": "b2"}],
    "generators": [{"id": "g1", "bus": "b2", "p_max": 40, "p_crank": 4,
                    "crank_time": 20, "ramp_time": 20, "black_start": false}],
    "fuel_cells": [{"id": "f1", "bus": "b1", "p_max": 20, "p_crank": 0,
                    "crank_time": 0, "ramp_time": 20}]
}"#;

fn set(model: &MilpModel, x: &mut Assignment, kind: VarKind, entity: &str, values: &[f64]) {
    for (i, &v) in values.iter().enumerate() {
        let j = model.var_index(&VarRef::at(kind, entity, i + 1)).unwrap();
        x.0[j] = v;
    }
}

#[test]
fn fuel_cell_family_counts() {
    let case = load_case_json(ONE_FC_T4).unwrap();
    let model = encode(&case).unwrap();
    let anc: usize = [VarKind::FcAncStart, VarKind::FcAncOn, VarKind::FcAncMax]
        .iter()
        .map(|&k| model.count_kind(k))
        .sum();
    let status: usize = [VarKind::FcStart, VarKind::FcOn, VarKind::FcMax]
        .iter()
        .map(|&k| model.count_kind(k))
        .sum();
    assert_eq!(anc, 3 * 4 * 4);
    assert_eq!(status, 3 * 4);
}

#[test]
fn no_storage_means_no_products_or_windows() {
    let case = common::load("t3_path");
    let model = encode(&case).unwrap();
    for kind in [
        VarKind::FcAncStart,
        VarKind::FcAncOn,
        VarKind::FcAncMax,
        VarKind::BatStart,
        VarKind::BatEnd,
    ] {
        assert_eq!(model.count_kind(kind), 0, "{kind:?}");
    }
    assert!(model.count_kind(VarKind::GenStart) > 0);
}

#[test]
fn too_short_horizon_is_rejected_before_solving() {
    let text = ONE_FC_T4.replace("\"horizon_minutes\": 80", "\"horizon_minutes\": 40");
    let text = text.replace("\"ramp_time\": 20}]\n}", "\"ramp_time\": 60}]\n}");
    let case = load_case_json(&text).unwrap();
    assert!(encode(&case).is_err());
}

#[test]
fn constraint_names_follow_the_grammar() {
    for name in common::TOY_CASES {
        let model = encode(&common::load(name)).unwrap();
        let mut seen = std::collections::HashSet::new();
        for c in &model.constraints {
            assert!(c.tag().starts_with("eq"), "{}", c.name);
            // Paired rows of one family carry a letter suffix (eq46a, eq46b).
            let family = c.tag()[2..].trim_end_matches(|ch: char| ch.is_ascii_lowercase());
            assert!(!family.is_empty() && family.chars().all(|ch| ch.is_ascii_digit()), "{}", c.name);
            assert!(seen.insert(c.name.clone()), "duplicate {}", c.name);
        }
        for j in 0..model.variables.len() {
            let parsed = VarRef::parse(model.var_name(j)).unwrap();
            assert_eq!(parsed, model.variables[j].var);
        }
    }
}

#[test]
fn decode_reads_start_steps_and_windows() {
    let case = common::load("t4_battery");
    let model = encode(&case).unwrap();
    let n = case.n_steps();
    let bt = battery_window("bt1", n, 3, Some(5), 5.0);
    let s = closure_schedule(&case, &[Some(2), Some(3), None], vec![bt]);
    let mut x = lift_schedule(&case, &model, &s);
    set(&model, &mut x, VarKind::GenStart, "g2", &[0., 0., 1., 1., 1., 1., 1., 1.]);
    let back = decode(&model, &x).unwrap();
    assert_eq!(back.generators[1].start, Some(3));
    assert_eq!(back.generators[2].start, None);
    assert_eq!(back.batteries[0].start, Some(3));
    assert_eq!(back.batteries[0].end, Some(5));
    assert!(back.batteries[0].is_discharging(4));
    assert!(!back.batteries[0].is_discharging(5));

    // Non-monotone status is a solver artifact.
    set(&model, &mut x, VarKind::GenStart, "g2", &[0., 0., 1., 0., 1., 1., 1., 1.]);
    assert!(decode(&model, &x).is_err());
    // Fractional binary beyond tolerance.
    set(&model, &mut x, VarKind::GenStart, "g2", &[0., 0., 0.5, 1., 1., 1., 1., 1.]);
    assert!(decode(&model, &x).is_err());
}

#[test]
fn objective_value_single_generator() {
    let text = r#"{
        "time": {"step_minutes": 20, "horizon_minutes": 100},
        "buses": [{"id": "b1"}, {"id": "b2"}],
        "branches": [{"id": "k1", "from": "b1", "to": "b2"}],
        "generators": [
            {"id": "g0", "bus": "b1", "p_max": 10, "p_crank": 9, "crank_time": 20,
             "ramp_time": 20, "black_start": true},
            {"id": "g1", "bus": "b2", "p_max": 100, "p_crank": 10, "crank_time": 20,
             "ramp_time": 20, "black_start": false}
        ],
        "objective": {"beta": 0}
    }"#;
    let case = load_case_json(text).unwrap();
    let s = closure_schedule(&case, &[Some(2), Some(3)], vec![]);
    // g0 contributes 1·1 step, g1 90·2 steps.
    assert_eq!(objective_value(&case, &s), 1.0 + 180.0);
    let never = closure_schedule(&case, &[Some(2), None], vec![]);
    assert_eq!(objective_value(&case, &never), 1.0 + 90.0 * 5.0);
}

/// Candidate battery decisions: idle, plus every window at full power and at
/// the minimum level.
fn battery_choices(case: &blackstart::case::GridCase) -> Vec<Vec<BatteryDecision>> {
    let n = case.n_steps();
    let mut out = vec![case.batteries.iter().map(|b| BatteryDecision::idle(b.id.clone(), n)).collect::<Vec<_>>()];
    if let Some(b) = case.batteries.first() {
        for s in b.start_min..=n {
            for e in (s..=n).map(Some).chain([None]) {
                for level in [b.p_min, b.p_max] {
                    out.push(vec![battery_window(&b.id, n, s, e, level)]);
                }
            }
        }
    }
    out
}

/// The model accepts a lifted schedule exactly when the validator does, and
/// its objective agrees with the closed-form one.
#[test]
fn model_feasibility_matches_semantics() {
    for name in common::TOY_CASES {
        let case = common::load(name);
        let model = encode(&case).unwrap();
        let (mut accepted, mut rejected) = (0, 0);
        for gens in generator_choices(&case) {
            for bats in battery_choices(&case) {
                let s = closure_schedule(&case, &gens, bats);
                let report = validate(&case, &s).unwrap();
                let x = lift_schedule(&case, &model, &s);
                let broken = model.violations(&x, 1e-7);
                assert_eq!(
                    report.pass,
                    broken.is_empty(),
                    "{name} {gens:?} {:?}: validator {:?}, model {:?}",
                    s.batteries.iter().map(|b| (b.start, b.end)).collect::<Vec<_>>(),
                    report.tags(),
                    broken.iter().map(|v| &v.name).take(5).collect::<Vec<_>>()
                );
                if report.pass {
                    accepted += 1;
                    assert!((model.evaluate_objective(&x) - objective_value(&case, &s)).abs() < 1e-9);
                    let back = decode(&model, &x).unwrap();
                    assert_eq!(back.generators, s.generators);
                    assert_eq!(back.buses, s.buses);
                    let (a, b) = (DeviceTrajectories::compute(&case, &back), DeviceTrajectories::compute(&case, &s));
                    assert_eq!(a.system(case.n_steps()), b.system(case.n_steps()));
                } else {
                    rejected += 1;
                }
            }
        }
        assert!(accepted > 0 && rejected > 0, "{name}: {accepted}/{rejected}");
    }
}

/// Power variables in the model are pinned to the phase semantics: any other
/// value for a single step breaks some row.
#[test]
fn power_rows_pin_the_phase_semantics() {
    let case = common::load("t5_ring");
    let model = encode(&case).unwrap();
    let s = closure_schedule(&case, &[Some(2), Some(4), Some(5)], vec![]);
    assert!(validate(&case, &s).unwrap().pass);
    let x = lift_schedule(&case, &model, &s);
    assert!(model.violations(&x, 1e-9).is_empty());
    for kind in [VarKind::GenPower, VarKind::FcPower] {
        for entity in model.entities(kind) {
            for t in 1..=case.n_steps() {
                let j = model.var_index(&VarRef::at(kind, &entity, t)).unwrap();
                let mut y = x.clone();
                y.0[j] += 0.5;
                assert!(!model.violations(&y, 1e-9).is_empty(), "{entity} at {t}");
            }
        }
    }
}
