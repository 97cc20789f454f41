//! Solver-independent feasibility checks on solved schedules.

use serde::{Deserialize, Serialize};

use crate::damc::DamOutcome;
use crate::rtm::RtmOutcome;
use crate::scenario::{ScenarioSet, TimeGrid};
use crate::suc::SucSolution;
use crate::system::PowerSystem;
use crate::uc::{DispatchValues, Schedule};

/// Largest violation of each constraint family, in MW.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub balance: f64,
    pub flow: f64,
    pub capacity: f64,
    pub ramp: f64,
    pub commitment_floor: f64,
    pub frp: f64,
}

impl Residuals {
    pub fn max(&self) -> f64 {
        [
            self.balance,
            self.flow,
            self.capacity,
            self.ramp,
            self.commitment_floor,
            self.frp,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    pub fn merge(self, other: Residuals) -> Residuals {
        Residuals {
            balance: self.balance.max(other.balance),
            flow: self.flow.max(other.flow),
            capacity: self.capacity.max(other.capacity),
            ramp: self.ramp.max(other.ramp),
            commitment_floor: self.commitment_floor.max(other.commitment_floor),
            frp: self.frp.max(other.frp),
        }
    }
}

/// Checks balance, flows, output limits and ramping of one dispatch against
/// an hourly schedule on `grid`.
pub fn check_dispatch(
    system: &PowerSystem,
    schedule: &Schedule,
    grid: TimeGrid,
    dispatch: &DispatchValues,
    net_load: &[Vec<f64>],
) -> Residuals {
    let mut r = Residuals::default();
    let periods = grid.num_periods();
    let scale = grid.period_hours();
    let on = |g: usize, k: usize| schedule.u[g][grid.hour_of(k)];
    let total = |g: usize, k: usize| {
        let pmin = if on(g, k) {
            system.generators[g].pmin_mw
        } else {
            0.0
        };
        pmin + dispatch.above_min[g][k]
    };

    for k in 0..periods {
        let mut inj = vec![0.0; system.num_buses()];
        for g in 0..system.num_generators() {
            inj[system.generator_bus(g)] += total(g, k);
        }
        for (n, x) in inj.iter_mut().enumerate() {
            *x += dispatch.curtail[n][k] - dispatch.spill[n][k] - net_load[n][k];
        }
        r.balance = r.balance.max(inj.iter().sum::<f64>().abs());
        for (line, flow) in system.lines.iter().zip(system.line_flows(&inj)) {
            r.flow = r
                .flow
                .max(flow - line.flow_max_mw)
                .max(line.flow_min_mw - flow);
        }
    }

    for (g, gen) in system.generators.iter().enumerate() {
        let cap = gen.capacity_above_min();
        for k in 0..periods {
            let p = dispatch.above_min[g][k];
            let limit = if on(g, k) { cap } else { 0.0 };
            r.capacity = r.capacity.max(-p).max(p - limit);

            let (prev_on, prev_total) = if k == 0 {
                let init = &gen.initial;
                let pmin = if init.on { gen.pmin_mw } else { 0.0 };
                (init.on, pmin + init.power_above_min_mw)
            } else {
                (on(g, k - 1), total(g, k - 1))
            };
            let now = total(g, k);
            match (prev_on, on(g, k)) {
                (true, true) => {
                    r.ramp = r
                        .ramp
                        .max(now - prev_total - gen.ramp_up_mw_per_h * scale)
                        .max(prev_total - now - gen.ramp_down_mw_per_h * scale);
                }
                (false, true) => r.ramp = r.ramp.max(now - gen.startup_ramp_mw),
                (true, false) => r.ramp = r.ramp.max(prev_total - gen.shutdown_ramp_mw),
                (false, false) => {}
            }
        }
    }
    r
}

pub fn check_suc(
    system: &PowerSystem,
    solution: &SucSolution,
    scenarios: &ScenarioSet,
) -> Residuals {
    solution
        .dispatch
        .iter()
        .zip(&scenarios.scenarios)
        .map(|(d, xi)| check_dispatch(system, &solution.schedule, solution.grid, d, xi))
        .fold(Residuals::default(), Residuals::merge)
}

pub fn check_rtm(
    system: &PowerSystem,
    dam: &DamOutcome,
    rtm: &RtmOutcome,
    realized: &[Vec<f64>],
) -> Residuals {
    check_dispatch(system, &dam.schedule, rtm.grid, &rtm.dispatch, realized)
}

/// Dispatch checks plus the FRP award constraints and requirement rows of
/// the clearing, and `u >= u*` when fixed commitments were supplied.
pub fn check_dam(system: &PowerSystem, dam: &DamOutcome, fixed: Option<&[Vec<bool>]>) -> Residuals {
    let hours = dam.hours();
    let values = DispatchValues {
        above_min: dam.above_min.clone(),
        segments: Vec::new(),
        curtail: dam.curtail.clone(),
        spill: dam.spill.clone(),
    };
    let mut r = check_dispatch(
        system,
        &dam.schedule,
        TimeGrid::hourly(hours),
        &values,
        &dam.bids.demand,
    );

    let b = |x: bool| if x { 1.0 } else { 0.0 };
    for (g, gen) in system.generators.iter().enumerate() {
        let s = &dam.schedule;
        let (pmin, pmax) = (gen.pmin_mw, gen.pmax_mw);
        let (ru, rd) = (gen.ramp_up_mw_per_h, gen.ramp_down_mw_per_h);
        let (su, sd) = (gen.startup_ramp_mw, gen.shutdown_ramp_mw);
        for h in 0..hours {
            let uh = b(s.u[g][h]);
            let un = b(s.u[g][(h + 1).min(hours - 1)]);
            let vn = if h + 1 < hours { b(s.v[g][h + 1]) } else { 0.0 };
            let wn = if h + 1 < hours { b(s.w[g][h + 1]) } else { 0.0 };
            let wnn = if h + 2 < hours { b(s.w[g][h + 2]) } else { 0.0 };
            let p = dam.above_min[g][h];
            let (up, dn) = (dam.frp_up[g][h], dam.frp_down[g][h]);
            let ceiling = sd * wnn + pmax * (1.0 - wnn);
            let shared_hi = pmax - pmin * uh + (su - pmax) * vn;
            let shared_lo = -pmin + pmin * un;
            let violations = [
                (-rd * uh + (rd - sd) * wn + pmin * vn) - up,
                up - (ru * un + (su - ru) * vn),
                up - (pmax * un - pmin * uh),
                (-ru * un + (ru - su) * vn) - dn,
                dn - (rd * uh + (sd - rd) * wn - pmin * vn),
                (-pmax * un + pmin * uh) - dn,
                shared_lo - (up + p),
                (up + p) - shared_hi,
                (up + p) - ceiling,
                shared_lo - (p - dn),
                (p - dn) - shared_hi,
                (p - dn) - ceiling,
            ];
            r.frp = violations.into_iter().fold(r.frp, f64::max);
        }
        if let Some(f) = fixed {
            for h in 0..hours {
                if f[g][h] && !dam.schedule.u[g][h] {
                    r.commitment_floor = 1.0;
                }
            }
        }
    }
    for h in 0..hours {
        let up: f64 = dam.frp_up.iter().map(|row| row[h]).sum::<f64>() + dam.shortfall_up[h];
        let dn: f64 = dam.frp_down.iter().map(|row| row[h]).sum::<f64>() + dam.shortfall_down[h];
        r.frp = r
            .frp
            .max(dam.requirements.up[h] - up)
            .max(dam.requirements.down[h] - dn)
            .max(-dam.shortfall_up[h])
            .max(-dam.shortfall_down[h]);
    }
    r
}
