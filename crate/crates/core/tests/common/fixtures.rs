//! Test instances shared by the criterion tests and the acceptance run.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use frp_core::frp::FrpRequirements;
use frp_core::opt::SolveStatus;
use frp_core::system::parse_system;
use frp_core::{
    build_and_solve_suc, clear_dam, extract_committed_hours, DamBidSet, DamOutcome, DispatchValues,
    PowerSystem, RtmOutcome, ScenarioSet, Schedule, SolveOptions, SucSolution, TimeGrid,
};

use super::{commitment_cost, dispatch_cost, pattern, respects_min_times, system};

/// Two units on one bus with a two-hour minimum up time on the cheaper one.
pub const DAMC_SYSTEM: &str = r#"
schema_version = 1
name = "damc-oracle"
curtailment_penalty_per_mwh = 1000.0
frp_shortfall_penalty_per_mw = 500.0

[[buses]]
id = "b1"
slack = true

[[generators]]
id = "a"
bus = "b1"
pmin_mw = 20.0
pmax_mw = 80.0
segments = [{ upper_mw = 30.0, cost_per_mwh = 15.0 }, { upper_mw = 60.0, cost_per_mwh = 22.0 }]
no_load_cost_per_h = 100.0
startup_cost = 300.0
ramp_up_mw_per_h = 80.0
ramp_down_mw_per_h = 80.0
startup_ramp_mw = 80.0
shutdown_ramp_mw = 80.0
min_up_h = 2
min_down_h = 1
initial = { on = false, hours_in_state = 4 }

[[generators]]
id = "b"
bus = "b1"
pmin_mw = 10.0
pmax_mw = 70.0
segments = [{ upper_mw = 60.0, cost_per_mwh = 45.0 }]
no_load_cost_per_h = 20.0
startup_cost = 60.0
ramp_up_mw_per_h = 70.0
ramp_down_mw_per_h = 70.0
startup_ramp_mw = 70.0
shutdown_ramp_mw = 70.0
min_up_h = 1
min_down_h = 1
initial = { on = true, power_above_min_mw = 15.0, hours_in_state = 2 }
"#;

pub const PRICING_SYSTEM: &str = r#"
schema_version = 1
name = "pricing"
curtailment_penalty_per_mwh = 1000.0
frp_shortfall_penalty_per_mw = 500.0

[[buses]]
id = "b1"
slack = true

[[generators]]
id = "cheap"
bus = "b1"
pmin_mw = 0.0
pmax_mw = 100.0
segments = [{ upper_mw = 100.0, cost_per_mwh = 20.0 }]
no_load_cost_per_h = 0.0
startup_cost = 0.0
ramp_up_mw_per_h = 200.0
ramp_down_mw_per_h = 200.0
startup_ramp_mw = 200.0
shutdown_ramp_mw = 200.0
min_up_h = 1
min_down_h = 1
initial = { on = true, power_above_min_mw = 100.0, hours_in_state = 5 }

[[generators]]
id = "dear"
bus = "b1"
pmin_mw = 0.0
pmax_mw = 100.0
segments = [{ upper_mw = 40.0, cost_per_mwh = 35.0 }, { upper_mw = 100.0, cost_per_mwh = 50.0 }]
no_load_cost_per_h = 0.0
startup_cost = 0.0
ramp_up_mw_per_h = 30.0
ramp_down_mw_per_h = 200.0
startup_ramp_mw = 200.0
shutdown_ramp_mw = 200.0
min_up_h = 1
min_down_h = 1
initial = { on = true, power_above_min_mw = 30.0, hours_in_state = 5 }
"#;

/// 120 MW for two hours; the dearer unit ramps up at most 30 MW per hour.
pub fn pricing_case() -> (PowerSystem, DamBidSet) {
    let sys = parse_system(PRICING_SYSTEM).unwrap();
    let bids = DamBidSet {
        demand: vec![vec![120.0, 120.0]],
    };
    (sys, bids)
}

pub fn up_requirements(up: [f64; 2]) -> FrpRequirements {
    let mut r = FrpRequirements::zero(2);
    r.up = up.to_vec();
    r
}

pub const HOURS: usize = 3;
pub const RAMP: f64 = 80.0;
pub const STEP: f64 = 0.05;

fn deployed() -> Vec<f64> {
    vec![0.0, 0.0, RAMP]
}

pub fn toy_requirement() -> FrpRequirements {
    let mut req = FrpRequirements::zero(HOURS);
    req.up[1] = RAMP;
    req
}

/// Smallest deployment probability at which the oracle's best pattern
/// commits g2 in the last hour.
pub fn oracle_threshold() -> f64 {
    let sys = system("toy");
    // Cost of each feasible pattern is linear in q: a + q * b.
    let mut lines = Vec::new();
    for mask in 0..(1u32 << (2 * HOURS)) {
        let u = pattern(mask, 2, HOURS);
        if !sys
            .generators
            .iter()
            .zip(&u)
            .all(|(g, row)| respects_min_times(g, row))
        {
            continue;
        }
        let fixed = commitment_cost(&sys, &u);
        let (Some(hi), Some(lo)) = (
            dispatch_cost(&sys, &u, &deployed()),
            dispatch_cost(&sys, &u, &[0.0; HOURS]),
        ) else {
            continue;
        };
        lines.push((fixed + lo, hi - lo, u[1][HOURS - 1]));
    }
    let mut q = 0.0;
    while q <= 1.0 {
        let best = lines
            .iter()
            .min_by(|a, b| (a.0 + q * a.1).total_cmp(&(b.0 + q * b.1)))
            .unwrap();
        if best.2 {
            return q;
        }
        q += 1e-5;
    }
    f64::INFINITY
}

/// Up-FRP awards to (g1, g2) in hour 1 under st-FRP at deployment
/// probability `q`.
pub fn st_frp_award(q: f64) -> (f64, f64) {
    let sys = system("toy");
    let opts = SolveOptions::default();
    let set = ScenarioSet::new(
        TimeGrid::hourly(HOURS),
        vec![q, 1.0 - q],
        vec![vec![deployed()], vec![vec![0.0; HOURS]]],
    )
    .unwrap();
    let suc = build_and_solve_suc(&sys, &set, &opts).unwrap();
    let fixed = extract_committed_hours(&suc);
    let bids = DamBidSet {
        demand: vec![vec![0.0; HOURS]],
    };
    let dam = clear_dam(&sys, &bids, &toy_requirement(), Some(&fixed), &opts).unwrap();
    (dam.frp_up[0][1], dam.frp_up[1][1])
}

/// A two-hour day on `two_gen`, settled by hand.
///
/// base runs both hours; peak starts in hour 1.
///
/// | unit | hour | DA MW | RT MW | DA price | RT price |
/// |------|------|-------|-------|----------|----------|
/// | base | 0    | 50    | 50    | 25       | 25       |
/// | base | 1    | 80    | 70    | 26       | 27       |
/// | peak | 1    | 20    | 35    | 26       | 27       |
///
/// peak also holds 5 MW of up-FRP in hour 1 at 12.37 $/MW.
///
/// base: energy 25*50 + 26*80 + 27*(70-80) = 3060.00
///       cost 2*100 + 30*15 + (40*15 + 10*25) = 1500.00, make-whole 0
/// peak: energy 26*20 + 27*(35-20) = 925.00, FRP 61.85
///       cost 50 + 80 + 25*40 = 1130.00, make-whole 143.15
/// Day-ahead only: base energy 25*50 + 26*80 = 3330.00,
///       peak make-whole 1130 - 520 - 61.85 = 548.15
pub fn hand_settled_day() -> (DamOutcome, RtmOutcome) {
    let sys = system("two_gen");
    let schedule = Schedule::from_commitment(&sys, vec![vec![true, true], vec![false, true]]);
    let dam = DamOutcome {
        schedule,
        above_min: vec![vec![30.0, 60.0], vec![0.0, 10.0]],
        frp_up: vec![vec![0.0, 0.0], vec![0.0, 5.0]],
        frp_down: vec![vec![0.0; 2]; 2],
        shortfall_up: vec![0.0; 2],
        shortfall_down: vec![0.0; 2],
        curtail: vec![vec![0.0; 2]],
        spill: vec![vec![0.0; 2]],
        lmp: vec![vec![25.0, 26.0]],
        frp_price_up: vec![0.0, 12.37],
        frp_price_down: vec![0.0; 2],
        requirements: FrpRequirements::zero(2),
        bids: DamBidSet {
            demand: vec![vec![50.0, 100.0]],
        },
        objective: 0.0,
        pricing_objective: 0.0,
        best_bound: 0.0,
        mip_gap: None,
        status: SolveStatus::Optimal,
    };
    let rtm = RtmOutcome {
        grid: TimeGrid::hourly(2),
        dispatch: DispatchValues {
            above_min: vec![vec![30.0, 50.0], vec![0.0, 25.0]],
            segments: vec![
                vec![vec![30.0, 0.0], vec![40.0, 10.0]],
                vec![vec![0.0], vec![25.0]],
            ],
            curtail: vec![vec![0.0; 2]],
            spill: vec![vec![0.0; 2]],
        },
        lmp: vec![vec![25.0, 27.0]],
        dispatch_cost: 2300.0,
        penalty_cost: 0.0,
        commitment_cost: 330.0,
        shed_mwh: 0.0,
        spill_mwh: 0.0,
        total_cost: 2630.0,
    };
    (dam, rtm)
}

/// Random three-scenario SUC output with integer values, so that sums of
/// net load and curtailment are exact.
pub fn random_requirement_case(rng: &mut ChaCha8Rng) -> (SucSolution, ScenarioSet) {
    let hours = rng.random_range(1..=4);
    let k = [1, 2, 4][rng.random_range(0..3)];
    let grid = TimeGrid::new(hours, k).unwrap();
    let periods = grid.num_periods();
    let buses = rng.random_range(1..=3);
    let mut scenarios = Vec::new();
    let mut dispatch = Vec::new();
    for _ in 0..3 {
        let xi: Vec<Vec<f64>> = (0..buses)
            .map(|_| {
                (0..periods)
                    .map(|_| f64::from(rng.random_range(-20..200)))
                    .collect()
            })
            .collect();
        let pc: Vec<Vec<f64>> = xi
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&x| {
                        if x > 0.0 && rng.random_bool(0.3) {
                            f64::from(rng.random_range(0..=x as i32))
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect();
        dispatch.push(DispatchValues {
            above_min: Vec::new(),
            segments: Vec::new(),
            curtail: pc,
            spill: vec![vec![0.0; periods]; buses],
        });
        scenarios.push(xi);
    }
    let set = ScenarioSet::new(grid, vec![0.25, 0.25, 0.5], scenarios).unwrap();
    let sol = SucSolution {
        grid,
        schedule: Schedule {
            u: Vec::new(),
            v: Vec::new(),
            w: Vec::new(),
        },
        probabilities: set.probabilities.clone(),
        dispatch,
        first_stage_cost: 0.0,
        expected_second_stage_cost: 0.0,
        objective: 0.0,
        best_bound: 0.0,
        mip_gap: None,
        status: SolveStatus::Optimal,
    };
    (sol, set)
}
