//! Independent reference implementations shared by the integration tests.
//!
//! The oracle enumerates hourly commitment patterns on a single-bus system
//! and prices each pattern with a dispatch LP written directly in terms of
//! total generator output.

#![allow(dead_code)]

pub mod ar1;
pub mod fixtures;

use std::path::PathBuf;

use frp_core::opt::{solve_mip, Cmp, LinExpr, Model, SolveOptions};
use frp_core::system::{load_system, Generator};
use frp_core::{PowerSystem, ScenarioSet, SucSolution};

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

pub fn system(name: &str) -> PowerSystem {
    load_system(data_dir().join("systems").join(format!("{name}.toml"))).expect("bundled system")
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// Unit commitment pattern `[g][h]` decoded from the bits of `mask`.
pub fn pattern(mask: u32, gens: usize, hours: usize) -> Vec<Vec<bool>> {
    (0..gens)
        .map(|g| {
            (0..hours)
                .map(|h| mask & (1 << (g * hours + h)) != 0)
                .collect()
        })
        .collect()
}

/// Checks minimum up and down times as run lengths: every run that starts
/// inside the horizon must last its minimum or reach the end, and the
/// initial run must be completed first.
pub fn respects_min_times(gen: &Generator, u: &[bool]) -> bool {
    let hours = u.len();
    let keep = if gen.initial.on {
        gen.min_up_h.saturating_sub(gen.initial.hours_in_state)
    } else {
        gen.min_down_h.saturating_sub(gen.initial.hours_in_state)
    } as usize;
    if u.iter().take(keep).any(|&x| x != gen.initial.on) {
        return false;
    }
    let mut prev = gen.initial.on;
    for h in 0..hours {
        if u[h] != prev {
            let need = if u[h] { gen.min_up_h } else { gen.min_down_h } as usize;
            let end = (h + need).min(hours);
            if u[h..end].iter().any(|&x| x != u[h]) {
                return false;
            }
        }
        prev = u[h];
    }
    true
}

pub fn commitment_cost(system: &PowerSystem, u: &[Vec<bool>]) -> f64 {
    let mut cost = 0.0;
    for (gen, row) in system.generators.iter().zip(u) {
        let mut prev = gen.initial.on;
        for &on in row {
            if on {
                cost += gen.no_load_cost_per_h;
                if !prev {
                    cost += gen.startup_cost;
                }
            }
            prev = on;
        }
    }
    cost
}

/// Least-cost hourly dispatch of a fixed commitment on a single bus. Returns
/// `None` if the LP has no solution.
pub fn dispatch_cost(system: &PowerSystem, u: &[Vec<bool>], load: &[f64]) -> Option<f64> {
    let hours = load.len();
    let mut m = Model::new();
    let mut total = vec![vec![LinExpr::new(); hours]; system.num_generators()];
    for (g, gen) in system.generators.iter().enumerate() {
        for h in 0..hours {
            let on = if u[g][h] { 1.0 } else { 0.0 };
            let mut p = LinExpr::constant(gen.pmin_mw * on);
            let mut lower = 0.0;
            for (s, seg) in gen.segments.iter().enumerate() {
                let width = (seg.upper_mw - lower) * on;
                lower = seg.upper_mw;
                let x = m.continuous(format!("p_{g}_{h}_{s}"), 0.0, width, seg.cost_per_mwh);
                p.add_term(x, 1.0);
            }
            total[g][h] = p;
        }
        for h in 0..hours {
            let prev_on = if h == 0 { gen.initial.on } else { u[g][h - 1] };
            let prev = if h == 0 {
                let base = if gen.initial.on { gen.pmin_mw } else { 0.0 };
                LinExpr::constant(base + gen.initial.power_above_min_mw)
            } else {
                total[g][h - 1].clone()
            };
            let now = &total[g][h];
            let mut step = now.clone();
            step.add_scaled(&prev, -1.0);
            match (prev_on, u[g][h]) {
                (true, true) => {
                    m.add_constraint(
                        format!("ru_{g}_{h}"),
                        step.clone(),
                        Cmp::Le,
                        gen.ramp_up_mw_per_h,
                    )
                    .unwrap();
                    m.add_constraint(
                        format!("rd_{g}_{h}"),
                        step,
                        Cmp::Ge,
                        -gen.ramp_down_mw_per_h,
                    )
                    .unwrap();
                }
                (false, true) => {
                    m.add_constraint(
                        format!("su_{g}_{h}"),
                        now.clone(),
                        Cmp::Le,
                        gen.startup_ramp_mw,
                    )
                    .unwrap();
                }
                (true, false) if h > 0 => {
                    m.add_constraint(format!("sd_{g}_{h}"), prev, Cmp::Le, gen.shutdown_ramp_mw)
                        .unwrap();
                }
                _ => {}
            }
        }
    }
    let pen = system.curtailment_penalty;
    for (h, &xi) in load.iter().enumerate() {
        let shed = m.continuous(format!("shed_{h}"), 0.0, xi.max(0.0), pen);
        let spill = m.continuous(format!("spill_{h}"), 0.0, f64::INFINITY, pen);
        let mut bal = LinExpr::new();
        for row in &total {
            bal.add_scaled(&row[h], 1.0);
        }
        bal.add_term(shed, 1.0).add_term(spill, -1.0);
        m.add_constraint(format!("bal_{h}"), bal, Cmp::Eq, xi)
            .unwrap();
    }
    let r = solve_mip(&m, &SolveOptions::default()).ok()?;
    r.is_optimal().then_some(r.objective)
}

/// Best expected cost over all feasible commitment patterns, with the
/// per-pattern dispatch cost averaged over equiprobable-or-weighted loads.
pub fn enumerate_best(system: &PowerSystem, loads: &[(f64, Vec<f64>)]) -> (f64, Vec<Vec<bool>>) {
    let hours = loads[0].1.len();
    let gens = system.num_generators();
    let mut best = (f64::INFINITY, Vec::new());
    for mask in 0..(1u32 << (gens * hours)) {
        let u = pattern(mask, gens, hours);
        if !system
            .generators
            .iter()
            .zip(&u)
            .all(|(g, row)| respects_min_times(g, row))
        {
            continue;
        }
        let mut cost = commitment_cost(system, &u);
        for (prob, load) in loads {
            match dispatch_cost(system, &u, load) {
                Some(c) => cost += prob * c,
                None => {
                    cost = f64::INFINITY;
                    break;
                }
            }
        }
        if cost < best.0 {
            best = (cost, u);
        }
    }
    best
}

/// Hourly up and down requirements by direct search over every scenario and
/// every sub-period pair that starts inside the hour.
pub fn brute_force_requirements(sol: &SucSolution, set: &ScenarioSet) -> (Vec<f64>, Vec<f64>) {
    let grid = set.grid;
    let periods = grid.num_periods();
    let kf = grid.subperiods_per_hour as f64;
    let mut up = vec![0.0_f64; grid.hours];
    let mut down = vec![0.0_f64; grid.hours];
    for h in 0..grid.hours {
        for k in h * grid.subperiods_per_hour..(h + 1) * grid.subperiods_per_hour {
            if k + 1 >= periods {
                continue;
            }
            for (w, xi) in set.scenarios.iter().enumerate() {
                let pc = &sol.dispatch[w].curtail;
                let mut delta = 0.0;
                for n in 0..xi.len() {
                    delta += (xi[n][k + 1] - pc[n][k + 1]) - (xi[n][k] - pc[n][k]);
                }
                up[h] = up[h].max(kf * delta);
                down[h] = down[h].max(-kf * delta);
            }
        }
    }
    (up, down)
}
