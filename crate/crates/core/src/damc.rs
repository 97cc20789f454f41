//! Hourly day-ahead market clearing with energy and flexible-ramping awards,
//! followed by a pricing run with all binaries fixed.

use serde::{Deserialize, Serialize};

use crate::frp::FrpRequirements;
use crate::opt::{
    fix_integers_and_resolve, solve_mip, Cmp, ConstraintId, LinExpr, Model, SolveOptions,
    SolveResult, SolveStatus, Var,
};
use crate::suc::status_serde;
use crate::system::PowerSystem;
use crate::uc::{
    add_commitment, add_dispatch, add_row, check_result, CommitmentTerms, CommitmentVars,
    DispatchBlock, DispatchSpec, PassError, Schedule,
};

/// Bid-in net demand, `[n][h]` in MW, perfectly inelastic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DamBidSet {
    pub demand: Vec<Vec<f64>>,
}

impl DamBidSet {
    pub fn hours(&self) -> usize {
        self.demand.first().map_or(0, Vec::len)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DamOutcome {
    pub schedule: Schedule,
    /// Energy above minimum, `[g][h]`, MW.
    pub above_min: Vec<Vec<f64>>,
    /// `[g][h]`, MW. Awards are signed: a unit shutting down next hour can
    /// carry a negative up award.
    pub frp_up: Vec<Vec<f64>>,
    pub frp_down: Vec<Vec<f64>>,
    pub shortfall_up: Vec<f64>,
    pub shortfall_down: Vec<f64>,
    /// `[n][h]`, MW.
    pub curtail: Vec<Vec<f64>>,
    pub spill: Vec<Vec<f64>>,
    /// `[n][h]`, $/MWh.
    pub lmp: Vec<Vec<f64>>,
    /// `[h]`, $/MW.
    pub frp_price_up: Vec<f64>,
    pub frp_price_down: Vec<f64>,
    pub requirements: FrpRequirements,
    pub bids: DamBidSet,
    /// MIP objective.
    pub objective: f64,
    /// Objective of the pricing LP (equal to `objective` up to the gap).
    pub pricing_objective: f64,
    pub best_bound: f64,
    pub mip_gap: Option<f64>,
    #[serde(with = "status_serde")]
    pub status: SolveStatus,
}

impl DamOutcome {
    pub fn hours(&self) -> usize {
        self.schedule.hours()
    }

    /// Total energy award of generator `g` in hour `h`, MWh.
    pub fn energy(&self, system: &PowerSystem, g: usize, h: usize) -> f64 {
        let on = if self.schedule.u[g][h] { 1.0 } else { 0.0 };
        on * system.generators[g].pmin_mw + self.above_min[g][h]
    }

    /// As-offered energy cost of the awards (segments only).
    pub fn dispatch_cost(&self, system: &PowerSystem) -> f64 {
        system
            .generators
            .iter()
            .zip(&self.above_min)
            .map(|(gen, row)| row.iter().map(|&p| gen.dispatch_cost(p)).sum::<f64>())
            .sum()
    }
}

/// Nodal and FRP prices from the pricing run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DamPrices {
    pub lmp: Vec<Vec<f64>>,
    pub frp_up: Vec<f64>,
    pub frp_down: Vec<f64>,
    pub objective: f64,
}

struct DamHandles {
    commitment: CommitmentVars,
    block: DispatchBlock,
    r_up: Vec<Vec<Var>>,
    r_dn: Vec<Vec<Var>>,
    sf_up: Vec<Var>,
    sf_dn: Vec<Var>,
    req_up: Vec<ConstraintId>,
    req_dn: Vec<ConstraintId>,
}

/// A solved clearing MIP, ready for pricing.
pub struct DamClearing {
    model: Model,
    handles: DamHandles,
    pub mip: SolveResult,
    bids: DamBidSet,
    requirements: FrpRequirements,
    fixed: Option<Vec<Vec<bool>>>,
}

fn build_dam(
    system: &PowerSystem,
    bids: &DamBidSet,
    req: &FrpRequirements,
    fixed: Option<&[Vec<bool>]>,
) -> Result<(Model, DamHandles), PassError> {
    let hours = bids.hours();
    if bids.demand.len() != system.num_buses() || req.hours() != hours {
        return Err(PassError::Shape(format!(
            "bids cover {} buses x {hours} hours, requirements {} hours, system {} buses",
            bids.demand.len(),
            req.hours(),
            system.num_buses()
        )));
    }
    if let Some(f) = fixed {
        if f.len() != system.num_generators() || f.iter().any(|r| r.len() != hours) {
            return Err(PassError::Shape(
                "fixed commitments do not match the horizon".into(),
            ));
        }
    }

    let mut model = Model::new();
    let commitment = add_commitment(&mut model, system, hours)?;
    if let Some(f) = fixed {
        for (row, vars) in f.iter().zip(&commitment.u) {
            for (&on, &u) in row.iter().zip(vars) {
                if on {
                    model.set_bounds(u, 1.0, 1.0);
                }
            }
        }
    }
    let terms = CommitmentTerms::from_vars(&commitment, 1);
    let spec = DispatchSpec {
        net_load: &bids.demand,
        ramp_scale: 1.0,
        energy_weight: 1.0,
        price_nodes: true,
        tag: "",
    };
    let block = add_dispatch(&mut model, system, &terms, &spec)?;

    let zero = LinExpr::new;
    let mut r_up = Vec::new();
    let mut r_dn = Vec::new();
    for (g, gen) in system.generators.iter().enumerate() {
        let id = &gen.id;
        let (u, v, w) = (&commitment.u[g], &commitment.v[g], &commitment.w[g]);
        let (pmin, pmax) = (gen.pmin_mw, gen.pmax_mw);
        let (ru, rd) = (gen.ramp_up_mw_per_h, gen.ramp_down_mw_per_h);
        let (su, sd) = (gen.startup_ramp_mw, gen.shutdown_ramp_mw);
        let ups: Vec<Var> = (0..hours)
            .map(|h| {
                model.continuous(
                    format!("rup[{id},{h}]"),
                    f64::NEG_INFINITY,
                    f64::INFINITY,
                    0.0,
                )
            })
            .collect();
        let dns: Vec<Var> = (0..hours)
            .map(|h| {
                model.continuous(
                    format!("rdn[{id},{h}]"),
                    f64::NEG_INFINITY,
                    f64::INFINITY,
                    0.0,
                )
            })
            .collect();
        for h in 0..hours {
            let uh = LinExpr::from(u[h]);
            // past the horizon the unit keeps its last state
            let un = LinExpr::from(u[(h + 1).min(hours - 1)]);
            let vn = if h + 1 < hours {
                LinExpr::from(v[h + 1])
            } else {
                zero()
            };
            let wn = if h + 1 < hours {
                LinExpr::from(w[h + 1])
            } else {
                zero()
            };
            let wnn = if h + 2 < hours {
                LinExpr::from(w[h + 2])
            } else {
                zero()
            };
            let p = block.above_min(g, h);
            let (rup, rdn) = (LinExpr::from(ups[h]), LinExpr::from(dns[h]));
            let rows: Vec<(&str, LinExpr, Cmp, f64)> = vec![
                (
                    "up_lo",
                    rup.clone() + rd * uh.clone() - (rd - sd) * wn.clone() - pmin * vn.clone(),
                    Cmp::Ge,
                    0.0,
                ),
                (
                    "up_hi",
                    rup.clone() - ru * un.clone() - (su - ru) * vn.clone(),
                    Cmp::Le,
                    0.0,
                ),
                (
                    "up_cap",
                    rup.clone() - pmax * un.clone() + pmin * uh.clone(),
                    Cmp::Le,
                    0.0,
                ),
                (
                    "dn_lo",
                    rdn.clone() + ru * un.clone() - (ru - su) * vn.clone(),
                    Cmp::Ge,
                    0.0,
                ),
                (
                    "dn_hi",
                    rdn.clone() - rd * uh.clone() - (sd - rd) * wn.clone() + pmin * vn.clone(),
                    Cmp::Le,
                    0.0,
                ),
                (
                    "dn_cap",
                    rdn.clone() + pmax * un.clone() - pmin * uh.clone(),
                    Cmp::Ge,
                    0.0,
                ),
                (
                    "upe_lo",
                    rup.clone() + p.clone() - pmin * un.clone(),
                    Cmp::Ge,
                    -pmin,
                ),
                (
                    "upe_hi",
                    rup.clone() + p.clone() + pmin * uh.clone() - (su - pmax) * vn.clone(),
                    Cmp::Le,
                    pmax,
                ),
                (
                    "upe_sd",
                    rup + p.clone() - sd * wnn.clone() + pmax * wnn.clone(),
                    Cmp::Le,
                    pmax,
                ),
                (
                    "dne_lo",
                    p.clone() - rdn.clone() - pmin * un,
                    Cmp::Ge,
                    -pmin,
                ),
                (
                    "dne_hi",
                    p.clone() - rdn.clone() + pmin * uh - (su - pmax) * vn,
                    Cmp::Le,
                    pmax,
                ),
                (
                    "dne_sd",
                    p - rdn - sd * wnn.clone() + pmax * wnn,
                    Cmp::Le,
                    pmax,
                ),
            ];
            for (label, expr, cmp, rhs) in rows {
                add_row(&mut model, format!("{label}[{id},{h}]"), expr, cmp, rhs)?;
            }
        }
        r_up.push(ups);
        r_dn.push(dns);
    }

    let penalty = system.frp_shortfall_penalty;
    let mut sf_up = Vec::with_capacity(hours);
    let mut sf_dn = Vec::with_capacity(hours);
    let mut req_up = Vec::with_capacity(hours);
    let mut req_dn = Vec::with_capacity(hours);
    for h in 0..hours {
        let su = model.continuous(format!("sfup[{h}]"), 0.0, f64::INFINITY, penalty);
        let sd = model.continuous(format!("sfdn[{h}]"), 0.0, f64::INFINITY, penalty);
        let total_up: LinExpr = r_up.iter().map(|r| LinExpr::from(r[h])).sum::<LinExpr>() + su;
        let total_dn: LinExpr = r_dn.iter().map(|r| LinExpr::from(r[h])).sum::<LinExpr>() + sd;
        req_up.push(model.add_constraint(format!("frp_up[{h}]"), total_up, Cmp::Ge, req.up[h])?);
        req_dn.push(model.add_constraint(
            format!("frp_dn[{h}]"),
            total_dn,
            Cmp::Ge,
            req.down[h],
        )?);
        sf_up.push(su);
        sf_dn.push(sd);
    }

    Ok((
        model,
        DamHandles {
            commitment,
            block,
            r_up,
            r_dn,
            sf_up,
            sf_dn,
            req_up,
            req_dn,
        },
    ))
}

/// Solves the clearing MIP. `fixed_commitments` (`[g][h]`) forces
/// `u(h) >= u*(h)`.
pub fn clear_dam_unpriced(
    system: &PowerSystem,
    bids: &DamBidSet,
    requirements: &FrpRequirements,
    fixed_commitments: Option<&[Vec<bool>]>,
    options: &SolveOptions,
) -> Result<DamClearing, PassError> {
    let (model, handles) = build_dam(system, bids, requirements, fixed_commitments)?;
    let mip = solve_mip(&model, options)?;
    check_result("day-ahead clearing", &mip)?;
    Ok(DamClearing {
        model,
        handles,
        mip,
        bids: bids.clone(),
        requirements: requirements.clone(),
        fixed: fixed_commitments.map(<[_]>::to_vec),
    })
}

/// Prices from the LP with every binary fixed at the clearing incumbent.
pub fn price_dam(clearing: &DamClearing, options: &SolveOptions) -> Result<DamPrices, PassError> {
    let lp = fix_integers_and_resolve(&clearing.model, &clearing.mip.primal, options)?;
    Ok(read_prices(&clearing.handles, &lp))
}

fn read_prices(handles: &DamHandles, lp: &SolveResult) -> DamPrices {
    let dual = |c: ConstraintId| lp.dual(c).unwrap_or(0.0);
    DamPrices {
        lmp: handles.block.prices(lp, 1.0).unwrap_or_default(),
        frp_up: handles.req_up.iter().map(|&c| dual(c)).collect(),
        frp_down: handles.req_dn.iter().map(|&c| dual(c)).collect(),
        objective: lp.objective,
    }
}

impl DamClearing {
    /// Pricing-LP objective with the incumbent binaries but different
    /// requirements. Used for finite-difference checks of FRP prices.
    pub fn reprice_with(
        &self,
        system: &PowerSystem,
        requirements: &FrpRequirements,
        options: &SolveOptions,
    ) -> Result<DamPrices, PassError> {
        let (model, handles) = build_dam(system, &self.bids, requirements, self.fixed.as_deref())?;
        let lp = fix_integers_and_resolve(&model, &self.mip.primal, options)?;
        Ok(read_prices(&handles, &lp))
    }

    pub fn outcome(&self, prices: DamPrices) -> DamOutcome {
        let h = &self.handles;
        let r = &self.mip;
        let read = |rows: &Vec<Vec<Var>>| -> Vec<Vec<f64>> {
            rows.iter()
                .map(|row| row.iter().map(|&x| r.value(x)).collect())
                .collect()
        };
        let values = h.block.extract(r);
        DamOutcome {
            schedule: Schedule::read(&h.commitment, r),
            above_min: values.above_min,
            frp_up: read(&h.r_up),
            frp_down: read(&h.r_dn),
            shortfall_up: h.sf_up.iter().map(|&x| r.value(x)).collect(),
            shortfall_down: h.sf_dn.iter().map(|&x| r.value(x)).collect(),
            curtail: values.curtail,
            spill: values.spill,
            lmp: prices.lmp,
            frp_price_up: prices.frp_up,
            frp_price_down: prices.frp_down,
            requirements: self.requirements.clone(),
            bids: self.bids.clone(),
            objective: r.objective,
            pricing_objective: prices.objective,
            best_bound: r.best_bound,
            mip_gap: r.mip_gap,
            status: r.status,
        }
    }
}

/// Clears and prices the day-ahead market.
pub fn clear_dam(
    system: &PowerSystem,
    bids: &DamBidSet,
    requirements: &FrpRequirements,
    fixed_commitments: Option<&[Vec<bool>]>,
    options: &SolveOptions,
) -> Result<DamOutcome, PassError> {
    let clearing = clear_dam_unpriced(system, bids, requirements, fixed_commitments, options)?;
    let prices = price_dam(&clearing, options)?;
    Ok(clearing.outcome(prices))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::fixtures::{generator, single_bus};
    use crate::system::CostSegment;

    #[test]
    fn marginal_segment_sets_price() {
        let mut g = generator("g", "b1", 0.0, 100.0, 0.0);
        g.segments = vec![
            CostSegment {
                upper_mw: 40.0,
                cost_per_mwh: 15.0,
            },
            CostSegment {
                upper_mw: 100.0,
                cost_per_mwh: 25.0,
            },
        ];
        g.initial.on = true;
        g.initial.power_above_min_mw = 60.0;
        let sys = single_bus(vec![g]);
        let bids = DamBidSet {
            demand: vec![vec![60.0]],
        };
        let out = clear_dam(
            &sys,
            &bids,
            &FrpRequirements::zero(1),
            None,
            &SolveOptions::default(),
        )
        .unwrap();
        assert!((out.lmp[0][0] - 25.0).abs() < 1e-6);
        assert!(out.frp_price_up[0].abs() < 1e-9);
    }

    #[test]
    fn shortfall_prices_at_penalty() {
        let mut g = generator("g", "b1", 0.0, 50.0, 10.0);
        g.initial.on = true;
        g.initial.power_above_min_mw = 40.0;
        let sys = single_bus(vec![g]);
        let bids = DamBidSet {
            demand: vec![vec![40.0, 40.0]],
        };
        let req = FrpRequirements {
            up: vec![30.0, 0.0],
            down: vec![0.0, 0.0],
            source: crate::frp::RequirementSource::Manual,
        };
        let out = clear_dam(&sys, &bids, &req, None, &SolveOptions::default()).unwrap();
        assert!((out.shortfall_up[0] - 20.0).abs() < 1e-6);
        assert!((out.frp_price_up[0] - sys.frp_shortfall_penalty).abs() < 1e-6);
    }

    #[test]
    fn fixed_commitments_hold() {
        let sys = single_bus(vec![
            generator("a", "b1", 10.0, 100.0, 10.0),
            generator("b", "b1", 10.0, 100.0, 20.0),
        ]);
        let bids = DamBidSet {
            demand: vec![vec![50.0, 50.0, 50.0]],
        };
        let fixed = vec![vec![true; 3], vec![true; 3]];
        let out = clear_dam(
            &sys,
            &bids,
            &FrpRequirements::zero(3),
            Some(&fixed),
            &SolveOptions::default(),
        )
        .unwrap();
        assert_eq!(out.schedule.u, fixed);
    }
}
