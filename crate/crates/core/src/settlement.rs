//! Energy, FRP and make-whole payments for one operating day.

use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::damc::DamOutcome;
use crate::rtm::RtmOutcome;
use crate::system::PowerSystem;

#[derive(Debug, Error)]
pub enum SettlementError {
    #[error("day-ahead outcome covers {dam} hours but the real-time grid has {rtm}")]
    Horizon { dam: usize, rtm: usize },
    #[error("outcomes describe {found} generators, system has {expected}")]
    Generators { expected: usize, found: usize },
    #[error("unknown settlement convention `{0}` (expected `two` or `dam-only`)")]
    Convention(String),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Convention {
    /// Day-ahead awards at day-ahead prices, deviations at real-time prices.
    #[default]
    Two,
    /// Day-ahead awards only.
    DamOnly,
}

impl FromStr for Convention {
    type Err = SettlementError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "two" => Ok(Self::Two),
            "dam-only" => Ok(Self::DamOnly),
            other => Err(SettlementError::Convention(other.to_string())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSettlement {
    pub generator: String,
    pub energy_revenue: f64,
    pub frp_revenue: f64,
    /// No-load, startup and real-time dispatch cost actually incurred.
    pub cost: f64,
    pub make_whole: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SettlementReport {
    pub generators: Vec<GeneratorSettlement>,
    pub total_operation_cost: f64,
    pub shed_mwh: f64,
    pub energy_payment: f64,
    pub frp_payment: f64,
    pub make_whole_payment: f64,
    /// Day-ahead FRP shortfall penalty, reported apart from operation cost.
    pub frp_shortfall_cost: f64,
}

pub fn settle(
    system: &PowerSystem,
    dam: &DamOutcome,
    rtm: &RtmOutcome,
    convention: Convention,
) -> Result<SettlementReport, SettlementError> {
    let grid = rtm.grid;
    if dam.hours() != grid.hours {
        return Err(SettlementError::Horizon {
            dam: dam.hours(),
            rtm: grid.hours,
        });
    }
    let ng = system.num_generators();
    if dam.above_min.len() != ng || rtm.dispatch.above_min.len() != ng {
        return Err(SettlementError::Generators {
            expected: ng,
            found: dam.above_min.len().min(rtm.dispatch.above_min.len()),
        });
    }
    let dt = grid.period_hours();

    let mut rows = Vec::with_capacity(ng);
    for (g, gen) in system.generators.iter().enumerate() {
        let n = system.generator_bus(g);
        let mut energy = 0.0;
        for h in 0..grid.hours {
            let e_da = dam.energy(system, g, h);
            energy += dam.lmp[n][h] * e_da;
            if convention == Convention::Two {
                for k in grid.periods_of(h) {
                    energy += rtm.lmp[n][k] * (rtm.output(system, dam, g, k) - e_da) * dt;
                }
            }
        }
        let frp: f64 = (0..grid.hours)
            .map(|h| {
                dam.frp_price_up[h] * dam.frp_up[g][h] + dam.frp_price_down[h] * dam.frp_down[g][h]
            })
            .sum();
        let on_hours = dam.schedule.u[g].iter().filter(|&&x| x).count() as f64;
        let starts = dam.schedule.v[g].iter().filter(|&&x| x).count() as f64;
        let dispatch: f64 = rtm.dispatch.segments[g]
            .iter()
            .map(|segs| {
                segs.iter()
                    .zip(&gen.segments)
                    .map(|(p, s)| p * s.cost_per_mwh)
                    .sum::<f64>()
                    * dt
            })
            .sum();
        let cost = on_hours * gen.no_load_cost_per_h + starts * gen.startup_cost + dispatch;
        rows.push(GeneratorSettlement {
            generator: gen.id.clone(),
            energy_revenue: energy,
            frp_revenue: frp,
            cost,
            make_whole: (cost - energy - frp).max(0.0),
        });
    }

    let shortfall: f64 = dam.shortfall_up.iter().chain(&dam.shortfall_down).sum();
    Ok(SettlementReport {
        total_operation_cost: rtm.total_cost,
        shed_mwh: rtm.shed_mwh,
        energy_payment: rows.iter().map(|r| r.energy_revenue).sum(),
        frp_payment: rows.iter().map(|r| r.frp_revenue).sum(),
        make_whole_payment: rows.iter().map(|r| r.make_whole).sum(),
        frp_shortfall_cost: shortfall * system.frp_shortfall_penalty,
        generators: rows,
    })
}
