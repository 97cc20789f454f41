//! Hourly up/down flexible-ramping requirements.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::scenario::{NetLoadForecast, ScenarioSet};
use crate::suc::SucSolution;

#[derive(Debug, Error)]
pub enum FrpError {
    #[error("coverage must lie in (0, 1), got {0}")]
    Coverage(f64),
    #[error("solution and scenario set disagree: {0}")]
    Mismatch(String),
    #[error("requirements table: {0}")]
    Csv(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RequirementSource {
    SucDerived,
    Percentile { coverage: f64 },
    Manual,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrpRequirements {
    /// MW per hour, one entry per hour.
    pub up: Vec<f64>,
    pub down: Vec<f64>,
    pub source: RequirementSource,
}

impl FrpRequirements {
    pub fn zero(hours: usize) -> Self {
        Self {
            up: vec![0.0; hours],
            down: vec![0.0; hours],
            source: RequirementSource::Manual,
        }
    }

    pub fn hours(&self) -> usize {
        self.up.len()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), FrpError> {
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| FrpError::Csv(e.to_string());
        w.write_record(["hour", "up_mw", "down_mw"]).map_err(err)?;
        for (h, (u, d)) in self.up.iter().zip(&self.down).enumerate() {
            w.write_record([(h + 1).to_string(), u.to_string(), d.to_string()])
                .map_err(err)?;
        }
        w.flush().map_err(|e| FrpError::Csv(e.to_string()))
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self, FrpError> {
        #[derive(Deserialize)]
        struct Row {
            hour: usize,
            up_mw: f64,
            down_mw: f64,
        }
        let mut reader = csv::Reader::from_reader(input);
        let mut up = Vec::new();
        let mut down = Vec::new();
        for (i, row) in reader.deserialize::<Row>().enumerate() {
            let row = row.map_err(|e| FrpError::Csv(e.to_string()))?;
            if row.hour != i + 1 {
                return Err(FrpError::Csv(format!(
                    "expected hour {}, found {}",
                    i + 1,
                    row.hour
                )));
            }
            up.push(row.up_mw);
            down.push(row.down_mw);
        }
        Ok(Self {
            up,
            down,
            source: RequirementSource::Manual,
        })
    }
}

/// Requirements from the largest ramp each hour that the stochastic solution
/// chose to serve: per scenario, the change of system net load minus
/// curtailment between consecutive sub-periods, maximised over scenarios and
/// the sub-periods of the hour and scaled to an hourly rate. Pairs starting
/// in the last sub-period of an hour reach into the next hour; the final
/// sub-period of the horizon has no successor.
pub fn suc_requirements(
    solution: &SucSolution,
    scenarios: &ScenarioSet,
) -> Result<FrpRequirements, FrpError> {
    if solution.dispatch.len() != scenarios.len() || solution.grid != scenarios.grid {
        return Err(FrpError::Mismatch(format!(
            "{} dispatch blocks vs {} scenarios",
            solution.dispatch.len(),
            scenarios.len()
        )));
    }
    let grid = scenarios.grid;
    let periods = grid.num_periods();
    let served: Vec<Vec<f64>> = scenarios
        .scenarios
        .iter()
        .zip(&solution.dispatch)
        .map(|(traj, d)| {
            (0..periods)
                .map(|k| {
                    traj.iter()
                        .zip(&d.curtail)
                        .map(|(xi, pc)| xi[k] - pc[k])
                        .sum()
                })
                .collect()
        })
        .collect();

    let k_per_h = grid.subperiods_per_hour as f64;
    let mut up = vec![0.0; grid.hours];
    let mut down = vec![0.0; grid.hours];
    for h in 0..grid.hours {
        let mut hi = f64::NEG_INFINITY;
        let mut lo = f64::INFINITY;
        for k in grid.periods_of(h).filter(|&k| k + 1 < periods) {
            for s in &served {
                let step = s[k + 1] - s[k];
                hi = hi.max(step);
                lo = lo.min(step);
            }
        }
        if hi.is_finite() {
            up[h] = (k_per_h * hi).max(0.0);
            down[h] = (-k_per_h * lo).max(0.0);
        }
    }
    Ok(FrpRequirements {
        up,
        down,
        source: RequirementSource::SucDerived,
    })
}

/// Two-sided standard-normal quantile for a central interval.
pub fn coverage_z(coverage: f64) -> Result<f64, FrpError> {
    if !(coverage > 0.0 && coverage < 1.0) {
        return Err(FrpError::Coverage(coverage));
    }
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    Ok(normal.inverse_cdf((1.0 + coverage) / 2.0))
}

/// Requirements from the forecast ramp widened by the central interval of
/// the forecast error at both ends of each step. Bus errors are independent,
/// so the system standard deviation is the root sum of squares.
pub fn percentile_requirements(
    forecast: &NetLoadForecast,
    sigma_frac: f64,
    coverage: f64,
) -> Result<FrpRequirements, FrpError> {
    let z = coverage_z(coverage)?;
    let grid = forecast.grid;
    let periods = grid.num_periods();
    let mean = forecast.system_total();
    let sigma: Vec<f64> = (0..periods)
        .map(|k| {
            (0..forecast.num_buses())
                .map(|n| forecast.std_dev(sigma_frac, n, k).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    let k_per_h = grid.subperiods_per_hour as f64;
    let mut up = vec![0.0; grid.hours];
    let mut down = vec![0.0; grid.hours];
    for h in 0..grid.hours {
        let mut hi = f64::NEG_INFINITY;
        let mut lo = f64::INFINITY;
        for k in grid.periods_of(h).filter(|&k| k + 1 < periods) {
            let step = mean[k + 1] - mean[k];
            let band = z * (sigma[k + 1] + sigma[k]);
            hi = hi.max(step + band);
            lo = lo.min(step - band);
        }
        if hi.is_finite() {
            up[h] = (k_per_h * hi).max(0.0);
            down[h] = (-k_per_h * lo).max(0.0);
        }
    }
    Ok(FrpRequirements {
        up,
        down,
        source: RequirementSource::Percentile { coverage },
    })
}
