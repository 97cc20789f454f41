//! Unit-commitment building blocks shared by the stochastic, market-clearing
//! and real-time models.
//!
//! Commitment variables live at hourly resolution. A sub-hourly model sees
//! `u[k] = u(h(k))`, and startups/shutdowns only at the first sub-period of
//! an hour, which enforces hour-constant commitments by construction.

use crate::opt::{Cmp, ConstraintId, LinExpr, Model, OptError, SolveResult, Var};
use crate::system::PowerSystem;

const ROW_TOL: f64 = 1e-9;

/// Adds `expr cmp rhs`, skipping rows without variables that already hold.
pub(crate) fn add_row(
    model: &mut Model,
    name: impl Into<String>,
    expr: LinExpr,
    cmp: Cmp,
    rhs: f64,
) -> Result<Option<ConstraintId>, OptError> {
    if expr.terms().iter().all(|&(_, c)| c == 0.0) {
        let lhs = expr.constant_part();
        let holds = match cmp {
            Cmp::Le => lhs <= rhs + ROW_TOL,
            Cmp::Ge => lhs >= rhs - ROW_TOL,
            Cmp::Eq => (lhs - rhs).abs() <= ROW_TOL,
        };
        if holds {
            return Ok(None);
        }
    }
    model.add_constraint(name, expr, cmp, rhs).map(Some)
}

/// Hourly commitment, startup and shutdown binaries, `[g][h]`.
pub(crate) struct CommitmentVars {
    pub u: Vec<Vec<Var>>,
    pub v: Vec<Vec<Var>>,
    pub w: Vec<Vec<Var>>,
}

/// Adds commitment binaries with logical coupling, minimum up/down times,
/// initial-condition restrictions and hourly no-load and startup costs.
pub(crate) fn add_commitment(
    model: &mut Model,
    system: &PowerSystem,
    hours: usize,
) -> Result<CommitmentVars, OptError> {
    let mut vars = CommitmentVars {
        u: Vec::new(),
        v: Vec::new(),
        w: Vec::new(),
    };
    for gen in &system.generators {
        let id = &gen.id;
        let u: Vec<Var> = (0..hours)
            .map(|h| model.binary(format!("u[{id},{h}]"), gen.no_load_cost_per_h))
            .collect();
        let v: Vec<Var> = (0..hours)
            .map(|h| model.binary(format!("v[{id},{h}]"), gen.startup_cost))
            .collect();
        let w: Vec<Var> = (0..hours)
            .map(|h| model.binary(format!("w[{id},{h}]"), 0.0))
            .collect();
        let u0 = if gen.initial.on { 1.0 } else { 0.0 };

        for h in 0..hours {
            let prev = if h == 0 {
                LinExpr::constant(u0)
            } else {
                LinExpr::from(u[h - 1])
            };
            model.add_constraint(
                format!("logic[{id},{h}]"),
                u[h] - prev - v[h] + w[h],
                Cmp::Eq,
                0.0,
            )?;
            model.add_constraint(format!("vw[{id},{h}]"), v[h] + w[h], Cmp::Le, 1.0)?;

            let up = gen.min_up_h as usize;
            if up > 1 {
                let start = (h + 1).saturating_sub(up);
                let sum: LinExpr = (start..=h).map(|t| LinExpr::from(v[t])).sum();
                model.add_constraint(format!("minup[{id},{h}]"), sum - u[h], Cmp::Le, 0.0)?;
            }
            let down = gen.min_down_h as usize;
            if down > 1 {
                let start = (h + 1).saturating_sub(down);
                let sum: LinExpr = (start..=h).map(|t| LinExpr::from(w[t])).sum();
                model.add_constraint(format!("mindn[{id},{h}]"), sum + u[h], Cmp::Le, 1.0)?;
            }
        }

        let keep = (gen.initial_must_keep_hours() as usize).min(hours);
        let frozen = if gen.initial.on { &w } else { &v };
        for &x in &frozen[..keep] {
            model.fix(x, 0.0);
        }
        vars.u.push(u);
        vars.v.push(v);
        vars.w.push(w);
    }
    Ok(vars)
}

/// Commitment as seen by a dispatch block, `[g][k]`.
#[derive(Clone, Debug)]
pub(crate) struct CommitmentTerms {
    pub u: Vec<Vec<LinExpr>>,
    pub v: Vec<Vec<LinExpr>>,
    pub w: Vec<Vec<LinExpr>>,
}

impl CommitmentTerms {
    pub fn from_vars(vars: &CommitmentVars, per_hour: usize) -> Self {
        let expand = |hourly: &Vec<Vec<Var>>, first_only: bool| -> Vec<Vec<LinExpr>> {
            hourly
                .iter()
                .map(|row| {
                    row.iter()
                        .flat_map(|&x| {
                            (0..per_hour).map(move |j| {
                                if first_only && j > 0 {
                                    LinExpr::new()
                                } else {
                                    LinExpr::from(x)
                                }
                            })
                        })
                        .collect()
                })
                .collect()
        };
        Self {
            u: expand(&vars.u, false),
            v: expand(&vars.v, true),
            w: expand(&vars.w, true),
        }
    }

    /// Constant terms for a fixed hourly schedule `[g][h]`.
    pub fn fixed(system: &PowerSystem, hourly: &[Vec<bool>], per_hour: usize) -> Self {
        let mut terms = Self {
            u: Vec::new(),
            v: Vec::new(),
            w: Vec::new(),
        };
        for (gen, row) in system.generators.iter().zip(hourly) {
            let mut prev = gen.initial.on;
            let (mut u, mut v, mut w) = (Vec::new(), Vec::new(), Vec::new());
            for &on in row {
                for j in 0..per_hour {
                    let first = j == 0;
                    u.push(LinExpr::constant(f64::from(u8::from(on))));
                    v.push(LinExpr::constant(f64::from(u8::from(first && on && !prev))));
                    w.push(LinExpr::constant(f64::from(u8::from(first && !on && prev))));
                }
                prev = on;
            }
            terms.u.push(u);
            terms.v.push(v);
            terms.w.push(w);
        }
        terms
    }
}

/// Inputs of one dispatch block.
pub(crate) struct DispatchSpec<'a> {
    /// `[n][k]`, MW.
    pub net_load: &'a [Vec<f64>],
    /// Factor applied to hourly ramp rates for one period.
    pub ramp_scale: f64,
    /// Factor applied to $/MWh prices for one period (probability times
    /// period length in hours).
    pub energy_weight: f64,
    /// Model demand as variables pinned by named equalities so that their
    /// duals give nodal prices.
    pub price_nodes: bool,
    /// Name prefix keeping rows of different blocks apart.
    pub tag: &'a str,
}

/// Second-stage variables of one dispatch block.
pub(crate) struct DispatchBlock {
    /// `[g][k][s]`
    pub segments: Vec<Vec<Vec<Var>>>,
    /// `[n][k]`
    pub curtail: Vec<Vec<Var>>,
    /// `[n][k]`
    pub spill: Vec<Vec<Var>>,
    /// `[n][k]` rows `d = net load`, present when nodes are priced.
    pub demand_rows: Option<Vec<Vec<ConstraintId>>>,
}

impl DispatchBlock {
    pub fn above_min(&self, g: usize, k: usize) -> LinExpr {
        self.segments[g][k].iter().map(|&s| LinExpr::from(s)).sum()
    }

    pub fn extract(&self, result: &SolveResult) -> DispatchValues {
        let read = |rows: &Vec<Vec<Var>>| -> Vec<Vec<f64>> {
            rows.iter()
                .map(|r| r.iter().map(|&x| result.value(x)).collect())
                .collect()
        };
        DispatchValues {
            above_min: self
                .segments
                .iter()
                .map(|g| {
                    g.iter()
                        .map(|segs| segs.iter().map(|&s| result.value(s)).sum())
                        .collect()
                })
                .collect(),
            segments: self
                .segments
                .iter()
                .map(|g| {
                    g.iter()
                        .map(|segs| segs.iter().map(|&s| result.value(s)).collect())
                        .collect()
                })
                .collect(),
            curtail: read(&self.curtail),
            spill: read(&self.spill),
        }
    }

    /// Nodal prices in $/MWh, `[n][k]`, scaled from $/MW-period duals.
    pub fn prices(&self, result: &SolveResult, per_period_hours: f64) -> Option<Vec<Vec<f64>>> {
        let rows = self.demand_rows.as_ref()?;
        rows.iter()
            .map(|r| {
                r.iter()
                    .map(|&c| result.dual(c).map(|d| d / per_period_hours))
                    .collect()
            })
            .collect()
    }
}

/// Primal values of a dispatch block.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DispatchValues {
    /// Output above minimum, `[g][k]`, MW.
    pub above_min: Vec<Vec<f64>>,
    /// Output per cost segment, `[g][k][s]`, MW.
    pub segments: Vec<Vec<Vec<f64>>>,
    /// Involuntary load curtailment, `[n][k]`, MW.
    pub curtail: Vec<Vec<f64>>,
    /// Over-generation absorbed at each bus, `[n][k]`, MW.
    pub spill: Vec<Vec<f64>>,
}

/// Adds dispatch, ramping, balance and flow constraints for one net-load
/// trajectory, with energy costs on the objective.
pub(crate) fn add_dispatch(
    model: &mut Model,
    system: &PowerSystem,
    commit: &CommitmentTerms,
    spec: &DispatchSpec<'_>,
) -> Result<DispatchBlock, OptError> {
    let tag = spec.tag;
    let periods = spec.net_load.first().map_or(0, Vec::len);
    let nb = system.num_buses();
    let mut segments = Vec::with_capacity(system.num_generators());

    for (g, gen) in system.generators.iter().enumerate() {
        let id = &gen.id;
        let cap = gen.capacity_above_min();
        let ramp_up = gen.ramp_up_mw_per_h * spec.ramp_scale;
        let ramp_dn = gen.ramp_down_mw_per_h * spec.ramp_scale;
        let u0 = if gen.initial.on { 1.0 } else { 0.0 };
        let p0 = gen.initial.power_above_min_mw;
        let (u, v, w) = (&commit.u[g], &commit.v[g], &commit.w[g]);

        let segs: Vec<Vec<Var>> = (0..periods)
            .map(|k| {
                gen.segment_widths()
                    .zip(&gen.segments)
                    .enumerate()
                    .map(|(s, (width, seg))| {
                        model.continuous(
                            format!("{tag}ps[{id},{k},{s}]"),
                            0.0,
                            width,
                            seg.cost_per_mwh * spec.energy_weight,
                        )
                    })
                    .collect()
            })
            .collect();
        let p = |k: usize| -> LinExpr { segs[k].iter().map(|&s| LinExpr::from(s)).sum() };

        for k in 0..periods {
            add_row(
                model,
                format!("{tag}gl[{id},{k}]"),
                p(k) - cap * u[k].clone(),
                Cmp::Le,
                0.0,
            )?;
            let (p_prev, u_prev) = if k == 0 {
                (LinExpr::constant(p0), LinExpr::constant(u0))
            } else {
                (p(k - 1), u[k - 1].clone())
            };
            add_row(
                model,
                format!("{tag}rup[{id},{k}]"),
                p(k) - p_prev.clone()
                    - ramp_up * u_prev.clone()
                    - (gen.startup_ramp_mw - gen.pmin_mw) * v[k].clone(),
                Cmp::Le,
                0.0,
            )?;
            // the shutdown term relaxes the limit completely, as the
            // bilinear original does
            add_row(
                model,
                format!("{tag}rdn[{id},{k}]"),
                p(k) - p_prev + ramp_dn * u_prev + cap * w[k].clone(),
                Cmp::Ge,
                0.0,
            )?;
            if k + 1 < periods {
                let wn = w[k + 1].clone();
                add_row(
                    model,
                    format!("{tag}sd[{id},{k}]"),
                    p(k) - (gen.shutdown_ramp_mw - gen.pmin_mw) * wn.clone() + cap * wn,
                    Cmp::Le,
                    cap,
                )?;
            }
        }
        segments.push(segs);
    }

    let penalty = system.curtailment_penalty * spec.energy_weight;
    let mut curtail = Vec::with_capacity(nb);
    let mut spill = Vec::with_capacity(nb);
    for (n, bus) in system.buses.iter().enumerate() {
        let id = &bus.id;
        curtail.push(
            (0..periods)
                .map(|k| {
                    let cap = spec.net_load[n][k].max(0.0);
                    model.continuous(format!("{tag}pc[{id},{k}]"), 0.0, cap, penalty)
                })
                .collect::<Vec<_>>(),
        );
        spill.push(
            (0..periods)
                .map(|k| {
                    model.continuous(format!("{tag}spill[{id},{k}]"), 0.0, f64::INFINITY, penalty)
                })
                .collect::<Vec<_>>(),
        );
    }

    let mut demand_rows = spec
        .price_nodes
        .then(|| vec![Vec::with_capacity(periods); nb]);
    for k in 0..periods {
        // net injection per bus
        let mut net: Vec<LinExpr> = (0..nb)
            .map(|n| LinExpr::from(curtail[n][k]) - spill[n][k])
            .collect();
        for (g, gen) in system.generators.iter().enumerate() {
            let n = system.generator_bus(g);
            net[n].add_scaled(&commit.u[g][k], gen.pmin_mw);
            for &s in &segments[g][k] {
                net[n].add_term(s, 1.0);
            }
        }
        for (n, bus) in system.buses.iter().enumerate() {
            let xi = spec.net_load[n][k];
            if let Some(rows) = demand_rows.as_mut() {
                let d = model.continuous(
                    format!("{tag}d[{},{k}]", bus.id),
                    f64::NEG_INFINITY,
                    f64::INFINITY,
                    0.0,
                );
                let row = model.add_constraint(
                    format!("{tag}dem[{},{k}]", bus.id),
                    LinExpr::from(d),
                    Cmp::Eq,
                    xi,
                )?;
                rows[n].push(row);
                net[n] -= d;
            } else {
                net[n].add_constant(-xi);
            }
        }
        let total: LinExpr = net.iter().cloned().sum();
        model.add_constraint(format!("{tag}bal[{k}]"), total, Cmp::Eq, 0.0)?;
        for (l, line) in system.lines.iter().enumerate() {
            let mut flow = LinExpr::new();
            for (n, inj) in net.iter().enumerate() {
                let psi = system.isf.get(l, n);
                if psi != 0.0 {
                    flow.add_scaled(inj, psi);
                }
            }
            if line.flow_max_mw.is_finite() {
                add_row(
                    model,
                    format!("{tag}fmax[{},{k}]", line.id),
                    flow.clone(),
                    Cmp::Le,
                    line.flow_max_mw,
                )?;
            }
            if line.flow_min_mw.is_finite() {
                add_row(
                    model,
                    format!("{tag}fmin[{},{k}]", line.id),
                    flow,
                    Cmp::Ge,
                    line.flow_min_mw,
                )?;
            }
        }
    }

    Ok(DispatchBlock {
        segments,
        curtail,
        spill,
        demand_rows,
    })
}

/// Hourly schedule `[g][h]` read from commitment binaries.
pub(crate) fn read_schedule(vars: &[Vec<Var>], result: &SolveResult) -> Vec<Vec<bool>> {
    vars.iter()
        .map(|r| r.iter().map(|&x| result.value(x) > 0.5).collect())
        .collect()
}

/// Failure of one of the optimisation passes.
#[derive(Debug, thiserror::Error)]
pub enum PassError {
    #[error(transparent)]
    Opt(#[from] OptError),
    #[error("{pass} model is infeasible although its slack variables should prevent that")]
    Infeasible { pass: &'static str },
    #[error("{pass} solve ended with status {status} and no usable solution")]
    NoSolution {
        pass: &'static str,
        status: crate::opt::SolveStatus,
    },
    #[error("{0}")]
    Shape(String),
}

pub(crate) fn check_result(pass: &'static str, result: &SolveResult) -> Result<(), PassError> {
    use crate::opt::SolveStatus;
    match result.status {
        SolveStatus::Optimal => Ok(()),
        SolveStatus::LimitHit if !result.primal.is_empty() => {
            log::warn!(
                "{pass}: solver limit reached, using incumbent (gap {:?})",
                result.mip_gap
            );
            Ok(())
        }
        SolveStatus::Infeasible => Err(PassError::Infeasible { pass }),
        status => Err(PassError::NoSolution { pass, status }),
    }
}

/// Commitment, startup and shutdown at hourly resolution, `[g][h]`.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Schedule {
    pub u: Vec<Vec<bool>>,
    pub v: Vec<Vec<bool>>,
    pub w: Vec<Vec<bool>>,
}

impl Schedule {
    pub(crate) fn read(vars: &CommitmentVars, result: &SolveResult) -> Self {
        Self {
            u: read_schedule(&vars.u, result),
            v: read_schedule(&vars.v, result),
            w: read_schedule(&vars.w, result),
        }
    }

    /// Startups and shutdowns implied by `u` and the initial states.
    pub fn from_commitment(system: &PowerSystem, u: Vec<Vec<bool>>) -> Self {
        let mut v = Vec::with_capacity(u.len());
        let mut w = Vec::with_capacity(u.len());
        for (gen, row) in system.generators.iter().zip(&u) {
            let mut prev = gen.initial.on;
            let (mut vr, mut wr) = (Vec::new(), Vec::new());
            for &on in row {
                vr.push(on && !prev);
                wr.push(!on && prev);
                prev = on;
            }
            v.push(vr);
            w.push(wr);
        }
        Self { u, v, w }
    }

    pub fn hours(&self) -> usize {
        self.u.first().map_or(0, Vec::len)
    }

    /// No-load plus startup cost of the schedule.
    pub fn commitment_cost(&self, system: &PowerSystem) -> f64 {
        system
            .generators
            .iter()
            .enumerate()
            .map(|(g, gen)| {
                let on = self.u[g].iter().filter(|&&x| x).count() as f64;
                let starts = self.v[g].iter().filter(|&&x| x).count() as f64;
                on * gen.no_load_cost_per_h + starts * gen.startup_cost
            })
            .sum()
    }
}
