//! Physical and economic description of a test system.
//!
//! Dispatch quantities follow the "above minimum" convention: a committed
//! generator produces `pmin * u + p` where `p` is the dispatch above its
//! minimum stable output.

mod file;
mod isf;

pub use file::{load_system, parse_system, save_system, to_toml, SCHEMA_VERSION};
pub use isf::{compute_isf, IsfMatrix};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SystemError {
    #[error("could not read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("missing field: {0}")]
    MissingField(String),
    #[error("malformed system file: {0}")]
    Parse(String),
    #[error("unsupported schema version {found} (supported: {supported})")]
    UnsupportedVersion { found: u32, supported: u32 },
    #[error("no slack bus designated")]
    NoSlackBus,
    #[error("more than one slack bus: {0:?}")]
    MultipleSlackBuses(Vec<String>),
    #[error("duplicate {kind} id `{id}`")]
    DuplicateId { kind: &'static str, id: String },
    #[error("{owner} references unknown bus `{bus}`")]
    UnknownBus { owner: String, bus: String },
    #[error("line `{line}`: {reason}")]
    InvalidLine { line: String, reason: String },
    #[error("generator `{generator}` segment {segment}: upper bounds must be strictly increasing")]
    NonMonotoneSegments { generator: String, segment: usize },
    #[error("generator `{generator}` segment {segment}: marginal costs must be nondecreasing")]
    NonConvexCost { generator: String, segment: usize },
    #[error("generator `{generator}`: {reason}")]
    InvalidGenerator { generator: String, reason: String },
    #[error("network is disconnected: buses {component:?} are not reachable from the slack bus")]
    Disconnected { component: Vec<String> },
    #[error("reduced susceptance matrix is singular")]
    SingularSusceptance,
    #[error("ISF matrix has shape {rows}x{cols}, expected {lines}x{buses}")]
    IsfShape {
        rows: usize,
        cols: usize,
        lines: usize,
        buses: usize,
    },
    #[error("invalid penalty: {0}")]
    InvalidPenalty(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: String,
    #[serde(default, rename = "slack")]
    pub is_slack: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub id: String,
    pub from: String,
    pub to: String,
    pub reactance_pu: f64,
    pub flow_min_mw: f64,
    pub flow_max_mw: f64,
}

/// One block of a convex piecewise-linear production cost curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostSegment {
    /// Cumulative upper bound of the segment, measured above `pmin`.
    pub upper_mw: f64,
    pub cost_per_mwh: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialState {
    pub on: bool,
    /// Output above minimum at the start of the horizon.
    #[serde(default)]
    pub power_above_min_mw: f64,
    /// Hours the unit has been in its current on/off state.
    pub hours_in_state: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub id: String,
    pub bus: String,
    pub pmin_mw: f64,
    pub pmax_mw: f64,
    pub segments: Vec<CostSegment>,
    /// Cost of running at `pmin` for one hour.
    pub no_load_cost_per_h: f64,
    pub startup_cost: f64,
    pub ramp_up_mw_per_h: f64,
    pub ramp_down_mw_per_h: f64,
    pub startup_ramp_mw: f64,
    pub shutdown_ramp_mw: f64,
    pub min_up_h: u32,
    pub min_down_h: u32,
    pub initial: InitialState,
}

impl Generator {
    pub fn capacity_above_min(&self) -> f64 {
        self.pmax_mw - self.pmin_mw
    }

    /// Width of each cost segment.
    pub fn segment_widths(&self) -> impl Iterator<Item = f64> + '_ {
        let mut prev = 0.0;
        self.segments.iter().map(move |s| {
            let w = s.upper_mw - prev;
            prev = s.upper_mw;
            w
        })
    }

    /// Variable cost of producing `above_min` MW above minimum for one hour.
    pub fn dispatch_cost(&self, above_min: f64) -> f64 {
        let mut left = above_min.max(0.0);
        let mut cost = 0.0;
        for (w, seg) in self.segment_widths().zip(&self.segments) {
            let take = left.min(w);
            cost += take * seg.cost_per_mwh;
            left -= take;
            if left <= 0.0 {
                break;
            }
        }
        cost
    }

    /// Hours the unit must still stay on (`u0 = 1`) or off (`u0 = 0`) at the
    /// start of the horizon.
    pub fn initial_must_keep_hours(&self) -> u32 {
        if self.initial.on {
            self.min_up_h.saturating_sub(self.initial.hours_in_state)
        } else {
            self.min_down_h.saturating_sub(self.initial.hours_in_state)
        }
    }

    fn validate(&self) -> Result<(), SystemError> {
        let bad = |reason: String| SystemError::InvalidGenerator {
            generator: self.id.clone(),
            reason,
        };
        let finite = [
            self.pmin_mw,
            self.pmax_mw,
            self.no_load_cost_per_h,
            self.startup_cost,
            self.ramp_up_mw_per_h,
            self.ramp_down_mw_per_h,
            self.startup_ramp_mw,
            self.shutdown_ramp_mw,
            self.initial.power_above_min_mw,
        ];
        if finite.iter().any(|x| !x.is_finite()) {
            return Err(bad("all numeric fields must be finite".into()));
        }
        if !(0.0 <= self.pmin_mw && self.pmin_mw <= self.pmax_mw) {
            return Err(bad(format!(
                "need 0 <= pmin ({}) <= pmax ({})",
                self.pmin_mw, self.pmax_mw
            )));
        }
        if self.segments.is_empty() {
            return Err(bad("at least one cost segment is required".into()));
        }
        let mut prev_upper = 0.0;
        let mut prev_cost = f64::NEG_INFINITY;
        for (s, seg) in self.segments.iter().enumerate() {
            if !(seg.upper_mw > prev_upper) {
                return Err(SystemError::NonMonotoneSegments {
                    generator: self.id.clone(),
                    segment: s + 1,
                });
            }
            if seg.cost_per_mwh < prev_cost {
                return Err(SystemError::NonConvexCost {
                    generator: self.id.clone(),
                    segment: s + 1,
                });
            }
            prev_upper = seg.upper_mw;
            prev_cost = seg.cost_per_mwh;
        }
        let cap = self.capacity_above_min();
        if (prev_upper - cap).abs() > 1e-9 * cap.max(1.0) {
            return Err(bad(format!(
                "last segment upper bound {prev_upper} must equal pmax - pmin = {cap}"
            )));
        }
        if self.ramp_up_mw_per_h < 0.0 || self.ramp_down_mw_per_h < 0.0 {
            return Err(bad("ramp rates must be nonnegative".into()));
        }
        if self.startup_ramp_mw < self.pmin_mw || self.shutdown_ramp_mw < self.pmin_mw {
            return Err(bad(
                "startup and shutdown ramp limits must be at least pmin".into(),
            ));
        }
        let p0 = self.initial.power_above_min_mw;
        if self.initial.on {
            if !(0.0..=cap + 1e-9).contains(&p0) {
                return Err(bad(format!(
                    "initial output above min {p0} outside [0, {cap}]"
                )));
            }
        } else if p0 != 0.0 {
            return Err(bad("an offline unit must start with zero output".into()));
        }
        Ok(())
    }
}

/// A validated system with its injection shift factors.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerSystem {
    pub name: String,
    pub buses: Vec<Bus>,
    pub lines: Vec<Line>,
    pub generators: Vec<Generator>,
    /// Load curtailment penalty, $/MWh.
    pub curtailment_penalty: f64,
    /// FRP shortfall penalty, $/MW.
    pub frp_shortfall_penalty: f64,
    pub isf: IsfMatrix,
    /// Bus index of every generator, parallel to `generators`.
    gen_bus: Vec<usize>,
}

impl PowerSystem {
    /// Validates the parts and computes ISFs from line reactances unless
    /// `supplied_isf` is given.
    pub fn new(
        name: impl Into<String>,
        buses: Vec<Bus>,
        lines: Vec<Line>,
        generators: Vec<Generator>,
        curtailment_penalty: f64,
        frp_shortfall_penalty: f64,
        supplied_isf: Option<IsfMatrix>,
    ) -> Result<Self, SystemError> {
        validate_ids("bus", buses.iter().map(|b| b.id.as_str()))?;
        validate_ids("line", lines.iter().map(|l| l.id.as_str()))?;
        validate_ids("generator", generators.iter().map(|g| g.id.as_str()))?;

        let slack: Vec<String> = buses
            .iter()
            .filter(|b| b.is_slack)
            .map(|b| b.id.clone())
            .collect();
        match slack.len() {
            0 => return Err(SystemError::NoSlackBus),
            1 => {}
            _ => return Err(SystemError::MultipleSlackBuses(slack)),
        }
        for (name, value) in [
            ("curtailment penalty", curtailment_penalty),
            ("FRP shortfall penalty", frp_shortfall_penalty),
        ] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(SystemError::InvalidPenalty(format!("{name} = {value}")));
            }
        }

        let bus_index = |owner: &str, id: &str| {
            buses
                .iter()
                .position(|b| b.id == id)
                .ok_or_else(|| SystemError::UnknownBus {
                    owner: owner.to_string(),
                    bus: id.to_string(),
                })
        };
        for line in &lines {
            let owner = format!("line `{}`", line.id);
            bus_index(&owner, &line.from)?;
            bus_index(&owner, &line.to)?;
            let bad = |reason: &str| SystemError::InvalidLine {
                line: line.id.clone(),
                reason: reason.to_string(),
            };
            if line.from == line.to {
                return Err(bad("from and to bus must differ"));
            }
            if !(line.reactance_pu > 0.0 && line.reactance_pu.is_finite()) {
                return Err(bad("reactance must be positive"));
            }
            if !(line.flow_min_mw <= 0.0 && 0.0 <= line.flow_max_mw) {
                return Err(bad("flow limits must satisfy min <= 0 <= max"));
            }
        }
        let mut gen_bus = Vec::with_capacity(generators.len());
        for g in &generators {
            gen_bus.push(bus_index(&format!("generator `{}`", g.id), &g.bus)?);
            g.validate()?;
        }

        let computed = compute_isf(&buses, &lines)?;
        let isf = match supplied_isf {
            Some(isf) => {
                if isf.num_lines() != lines.len() || isf.num_buses() != buses.len() {
                    return Err(SystemError::IsfShape {
                        rows: isf.num_lines(),
                        cols: isf.num_buses(),
                        lines: lines.len(),
                        buses: buses.len(),
                    });
                }
                let diff = isf.max_abs_diff(&computed);
                if diff > 1e-6 {
                    log::warn!(
                        "supplied ISFs differ from reactance-derived values by up to {diff:.3e}; using supplied values"
                    );
                }
                isf
            }
            None => computed,
        };

        Ok(Self {
            name: name.into(),
            buses,
            lines,
            generators,
            curtailment_penalty,
            frp_shortfall_penalty,
            isf,
            gen_bus,
        })
    }

    pub fn num_buses(&self) -> usize {
        self.buses.len()
    }

    pub fn num_generators(&self) -> usize {
        self.generators.len()
    }

    pub fn slack_index(&self) -> usize {
        self.buses.iter().position(|b| b.is_slack).unwrap()
    }

    pub fn bus_index(&self, id: &str) -> Option<usize> {
        self.buses.iter().position(|b| b.id == id)
    }

    pub fn generator_index(&self, id: &str) -> Option<usize> {
        self.generators.iter().position(|g| g.id == id)
    }

    /// Bus index of generator `g`.
    pub fn generator_bus(&self, g: usize) -> usize {
        self.gen_bus[g]
    }

    /// Generators located at bus `n`.
    pub fn generators_at(&self, n: usize) -> impl Iterator<Item = usize> + '_ {
        self.gen_bus
            .iter()
            .enumerate()
            .filter(move |(_, &b)| b == n)
            .map(|(g, _)| g)
    }

    /// Line flows for a nodal injection vector via the ISF matrix.
    pub fn line_flows(&self, injections: &[f64]) -> Vec<f64> {
        self.isf.flows(injections)
    }

    /// A copy with every cost and penalty multiplied by `factor`.
    pub fn scale_costs(&self, factor: f64) -> PowerSystem {
        let mut out = self.clone();
        out.curtailment_penalty *= factor;
        out.frp_shortfall_penalty *= factor;
        for g in &mut out.generators {
            g.no_load_cost_per_h *= factor;
            g.startup_cost *= factor;
            for s in &mut g.segments {
                s.cost_per_mwh *= factor;
            }
        }
        out
    }
}

fn validate_ids<'a>(
    kind: &'static str,
    ids: impl Iterator<Item = &'a str>,
) -> Result<(), SystemError> {
    let mut seen = std::collections::HashSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(SystemError::DuplicateId {
                kind,
                id: id.to_string(),
            });
        }
    }
    Ok(())
}
