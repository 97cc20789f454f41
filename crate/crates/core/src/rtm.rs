//! Out-of-sample real-time operation with day-ahead commitments fixed.
//!
//! The real-time model is one full-day LP over the sub-hourly grid. FRP
//! awards are financial positions only and do not limit dispatch; ramping
//! that the committed fleet cannot follow shows up as curtailment.

use serde::{Deserialize, Serialize};

use crate::damc::DamOutcome;
use crate::opt::{solve_mip, Model, SolveOptions};
use crate::scenario::{draw_out_of_sample, NetLoadForecast, ScenarioError, ScenarioSet, TimeGrid};
use crate::suc::build_and_solve_suc;
use crate::system::PowerSystem;
use crate::uc::{
    add_dispatch, check_result, CommitmentTerms, DispatchSpec, DispatchValues, PassError,
};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RtmOutcome {
    pub grid: TimeGrid,
    pub dispatch: DispatchValues,
    /// `[n][k]`, $/MWh.
    pub lmp: Vec<Vec<f64>>,
    /// As-offered segment cost of the real-time dispatch.
    pub dispatch_cost: f64,
    /// Curtailment and spill penalties.
    pub penalty_cost: f64,
    /// No-load and startup cost of the day-ahead schedule.
    pub commitment_cost: f64,
    pub shed_mwh: f64,
    pub spill_mwh: f64,
    pub total_cost: f64,
}

impl RtmOutcome {
    /// Total output of generator `g` in sub-period `k`, MW.
    pub fn output(&self, system: &PowerSystem, dam: &DamOutcome, g: usize, k: usize) -> f64 {
        let on = dam.schedule.u[g][self.grid.hour_of(k)];
        let pmin = if on {
            system.generators[g].pmin_mw
        } else {
            0.0
        };
        pmin + self.dispatch.above_min[g][k]
    }
}

pub fn simulate_rtm(
    system: &PowerSystem,
    dam: &DamOutcome,
    realized: &[Vec<f64>],
    grid: TimeGrid,
    options: &SolveOptions,
) -> Result<RtmOutcome, PassError> {
    if dam.hours() != grid.hours
        || realized.len() != system.num_buses()
        || realized.iter().any(|r| r.len() != grid.num_periods())
    {
        return Err(PassError::Shape(format!(
            "realised trajectory or day-ahead horizon does not match a {}x{} grid",
            grid.hours, grid.subperiods_per_hour
        )));
    }
    let dt = grid.period_hours();
    let mut model = Model::new();
    let terms = CommitmentTerms::fixed(system, &dam.schedule.u, grid.subperiods_per_hour);
    let spec = DispatchSpec {
        net_load: realized,
        ramp_scale: dt,
        energy_weight: dt,
        price_nodes: true,
        tag: "",
    };
    let block = add_dispatch(&mut model, system, &terms, &spec)?;
    let result = solve_mip(&model, options)?;
    check_result("real-time dispatch", &result)?;

    let dispatch = block.extract(&result);
    let lmp = block.prices(&result, dt).unwrap_or_default();
    let dispatch_cost: f64 = system
        .generators
        .iter()
        .zip(&dispatch.segments)
        .map(|(gen, periods)| {
            periods
                .iter()
                .map(|segs| {
                    segs.iter()
                        .zip(&gen.segments)
                        .map(|(p, s)| p * s.cost_per_mwh * dt)
                        .sum::<f64>()
                })
                .sum::<f64>()
        })
        .sum();
    let shed_mwh: f64 = dispatch.curtail.iter().flatten().sum::<f64>() * dt;
    let spill_mwh: f64 = dispatch.spill.iter().flatten().sum::<f64>() * dt;
    let penalty_cost = system.curtailment_penalty * (shed_mwh + spill_mwh);
    let commitment_cost = dam.schedule.commitment_cost(system);
    Ok(RtmOutcome {
        grid,
        dispatch,
        lmp,
        dispatch_cost,
        penalty_cost,
        commitment_cost,
        shed_mwh,
        spill_mwh,
        total_cost: commitment_cost + result.objective,
    })
}

/// Cost of the best commitment in hindsight for a realised trajectory.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ClairvoyantCost {
    pub objective: f64,
    /// Proven lower bound; the safe value for comparisons.
    pub best_bound: f64,
}

pub fn clairvoyant(
    system: &PowerSystem,
    realized: &[Vec<f64>],
    grid: TimeGrid,
    options: &SolveOptions,
) -> Result<ClairvoyantCost, PassError> {
    let set = ScenarioSet::deterministic(grid, realized.to_vec())
        .map_err(|e| PassError::Shape(e.to_string()))?;
    let sol = build_and_solve_suc(system, &set, options)?;
    Ok(ClairvoyantCost {
        objective: sol.objective,
        best_bound: sol.best_bound.min(sol.objective),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StressPoint {
    pub method: String,
    pub sigma_frac: f64,
    pub seed: u64,
    pub total_cost: f64,
    pub shed_mwh: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum StressError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("method {method}, sigma {sigma}: {source}")]
    Pass {
        method: String,
        sigma: f64,
        #[source]
        source: PassError,
    },
}

/// Evaluates fixed day-ahead outcomes against realisations drawn at each
/// error level. Every method sees the same realisation for a given
/// `(sigma, seed)`.
pub fn stress_sweep(
    system: &PowerSystem,
    outcomes: &[(String, DamOutcome)],
    forecast: &NetLoadForecast,
    sigmas: &[f64],
    rho: f64,
    seeds: &[u64],
    options: &SolveOptions,
) -> Result<Vec<StressPoint>, StressError> {
    let mut points = Vec::new();
    for &sigma in sigmas {
        for &seed in seeds {
            let realized = draw_out_of_sample(forecast, sigma, rho, seed)?;
            for (method, dam) in outcomes {
                let rtm = simulate_rtm(system, dam, &realized, forecast.grid, options).map_err(
                    |source| StressError::Pass {
                        method: method.clone(),
                        sigma,
                        source,
                    },
                )?;
                points.push(StressPoint {
                    method: method.clone(),
                    sigma_frac: sigma,
                    seed,
                    total_cost: rtm.total_cost,
                    shed_mwh: rtm.shed_mwh,
                });
            }
        }
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::damc::{clear_dam, DamBidSet};
    use crate::frp::FrpRequirements;
    use crate::system::fixtures::{generator, single_bus};

    #[test]
    fn flat_realisation_reproduces_dam_cost() {
        let gens = [
            generator("a", "b1", 10.0, 80.0, 12.0),
            generator("b", "b1", 0.0, 80.0, 30.0),
        ]
        .map(|mut g| {
            g.ramp_up_mw_per_h *= 10.0;
            g.ramp_down_mw_per_h *= 10.0;
            g
        });
        let sys = single_bus(gens.to_vec());
        let hourly = vec![vec![30.0, 70.0, 100.0, 40.0]];
        let opts = SolveOptions::default();
        let dam = clear_dam(
            &sys,
            &DamBidSet {
                demand: hourly.clone(),
            },
            &FrpRequirements::zero(4),
            None,
            &opts,
        )
        .unwrap();
        let grid = TimeGrid::new(4, 4).unwrap();
        let flat: Vec<Vec<f64>> = hourly
            .iter()
            .map(|r| r.iter().flat_map(|&x| std::iter::repeat_n(x, 4)).collect())
            .collect();
        let rtm = simulate_rtm(&sys, &dam, &flat, grid, &opts).unwrap();
        assert!(rtm.shed_mwh.abs() < 1e-9);
        let dam_cost = dam.dispatch_cost(&sys);
        assert!((rtm.dispatch_cost - dam_cost).abs() <= 1e-6 * dam_cost.max(1.0));
    }
}
