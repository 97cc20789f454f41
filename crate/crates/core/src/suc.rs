//! Two-stage stochastic unit commitment in extensive form.
//!
//! First stage: hourly commitment, startup and shutdown decisions shared by
//! every scenario. Second stage: one sub-hourly dispatch block per scenario
//! with curtailment and over-generation slack, so every commitment has a
//! feasible recourse.

use serde::{Deserialize, Serialize};

use crate::opt::{solve_mip, Model, SolveOptions, SolveStatus};
use crate::scenario::{ScenarioSet, TimeGrid};
use crate::system::PowerSystem;
use crate::uc::{
    add_commitment, add_dispatch, check_result, CommitmentTerms, CommitmentVars, DispatchBlock,
    DispatchSpec, DispatchValues, PassError, Schedule,
};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SucSolution {
    pub grid: TimeGrid,
    /// Hourly first-stage schedule.
    pub schedule: Schedule,
    pub probabilities: Vec<f64>,
    /// Second-stage values per scenario.
    pub dispatch: Vec<DispatchValues>,
    /// No-load and startup costs.
    pub first_stage_cost: f64,
    /// Probability-weighted dispatch, curtailment and spill costs.
    pub expected_second_stage_cost: f64,
    pub objective: f64,
    pub best_bound: f64,
    pub mip_gap: Option<f64>,
    #[serde(with = "status_serde")]
    pub status: SolveStatus,
}

impl SucSolution {
    /// Commitment in sub-period `k`.
    pub fn u_at(&self, g: usize, k: usize) -> bool {
        self.schedule.u[g][self.grid.hour_of(k)]
    }

    /// Total output (minimum plus above-minimum) in scenario `w`.
    pub fn output(&self, system: &PowerSystem, w: usize, g: usize, k: usize) -> f64 {
        let on = if self.u_at(g, k) { 1.0 } else { 0.0 };
        on * system.generators[g].pmin_mw + self.dispatch[w].above_min[g][k]
    }
}

pub(crate) mod status_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::opt::SolveStatus;

    pub fn serialize<S: Serializer>(s: &SolveStatus, ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(&s.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<SolveStatus, D::Error> {
        let text = String::deserialize(de)?;
        match text.as_str() {
            "optimal" => Ok(SolveStatus::Optimal),
            "infeasible" => Ok(SolveStatus::Infeasible),
            "unbounded" => Ok(SolveStatus::Unbounded),
            "limit-hit" => Ok(SolveStatus::LimitHit),
            other => Err(serde::de::Error::custom(format!(
                "unknown status `{other}`"
            ))),
        }
    }
}

pub(crate) struct SucModel {
    pub model: Model,
    pub commitment: CommitmentVars,
    pub blocks: Vec<DispatchBlock>,
}

pub(crate) fn build_suc(
    system: &PowerSystem,
    scenarios: &ScenarioSet,
) -> Result<SucModel, PassError> {
    if scenarios.is_empty() {
        return Err(PassError::Shape("at least one scenario is required".into()));
    }
    if scenarios.num_buses() != system.num_buses() {
        return Err(PassError::Shape(format!(
            "scenarios cover {} buses, system has {}",
            scenarios.num_buses(),
            system.num_buses()
        )));
    }
    let grid = scenarios.grid;
    let mut model = Model::new();
    let commitment = add_commitment(&mut model, system, grid.hours)?;
    let terms = CommitmentTerms::from_vars(&commitment, grid.subperiods_per_hour);
    let mut blocks = Vec::with_capacity(scenarios.len());
    for (w, (traj, &prob)) in scenarios
        .scenarios
        .iter()
        .zip(&scenarios.probabilities)
        .enumerate()
    {
        let tag = format!("s{w}:");
        let spec = DispatchSpec {
            net_load: traj,
            ramp_scale: grid.period_hours(),
            energy_weight: prob * grid.period_hours(),
            price_nodes: false,
            tag: &tag,
        };
        blocks.push(add_dispatch(&mut model, system, &terms, &spec)?);
    }
    Ok(SucModel {
        model,
        commitment,
        blocks,
    })
}

pub fn build_and_solve_suc(
    system: &PowerSystem,
    scenarios: &ScenarioSet,
    options: &SolveOptions,
) -> Result<SucSolution, PassError> {
    let built = build_suc(system, scenarios)?;
    let result = solve_mip(&built.model, options)?;
    check_result("stochastic unit commitment", &result)?;

    let schedule = Schedule::read(&built.commitment, &result);
    let first_stage_cost = schedule.commitment_cost(system);
    Ok(SucSolution {
        grid: scenarios.grid,
        probabilities: scenarios.probabilities.clone(),
        dispatch: built.blocks.iter().map(|b| b.extract(&result)).collect(),
        first_stage_cost,
        expected_second_stage_cost: result.objective - first_stage_cost,
        objective: result.objective,
        best_bound: result.best_bound,
        mip_gap: result.mip_gap,
        status: result.status,
        schedule,
    })
}

/// Hourly commitments `u*(h)` handed to the market-clearing pass.
pub fn extract_committed_hours(solution: &SucSolution) -> Vec<Vec<bool>> {
    let k_per_h = solution.grid.subperiods_per_hour;
    (0..solution.schedule.u.len())
        .map(|g| {
            (0..solution.grid.hours)
                .map(|h| solution.u_at(g, k_per_h * (h + 1) - 1))
                .collect()
        })
        .collect()
}
