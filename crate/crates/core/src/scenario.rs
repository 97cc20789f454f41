//! Net-load forecasts, in-sample scenario sets and out-of-sample draws.
//!
//! Forecast errors are Gaussian with standard deviation `sigma_frac * |forecast|`
//! and follow a unit-variance AR(1) recursion along each (scenario, bus) path.
//! With `rho = 0` the recursion reduces to independent draws, consuming the
//! random stream in exactly the same order.
//!
//! Randomness comes from ChaCha8 keyed by a 64-bit seed, with separate
//! stream ids for in-sample and out-of-sample draws so that the number of
//! in-sample scenarios never perturbs the realisation.

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

const IN_SAMPLE_STREAM: u64 = 1;
const OUT_OF_SAMPLE_STREAM: u64 = 2;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("sigma_frac must be finite and nonnegative, got {0}")]
    InvalidSigma(f64),
    #[error("rho must lie in [0, 1), got {0}")]
    InvalidRho(f64),
    #[error("at least one scenario is required")]
    NoScenarios,
    #[error("subperiods per hour must be at least 1")]
    InvalidGrid,
    #[error("forecast must be finite and cover every bus and period")]
    InvalidForecast,
    #[error("scenario probabilities sum to {0}, expected 1")]
    Probabilities(f64),
    #[error("could not read {path}: {message}")]
    Read { path: String, message: String },
    #[error("forecast file: {0}")]
    Csv(String),
}

/// Hourly horizon split into equal sub-periods.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub hours: usize,
    pub subperiods_per_hour: usize,
}

impl TimeGrid {
    pub fn new(hours: usize, subperiods_per_hour: usize) -> Result<Self, ScenarioError> {
        if subperiods_per_hour == 0 || hours == 0 {
            return Err(ScenarioError::InvalidGrid);
        }
        Ok(Self {
            hours,
            subperiods_per_hour,
        })
    }

    /// A 24-hour day.
    pub fn day(subperiods_per_hour: usize) -> Result<Self, ScenarioError> {
        Self::new(24, subperiods_per_hour)
    }

    pub fn hourly(hours: usize) -> Self {
        Self {
            hours,
            subperiods_per_hour: 1,
        }
    }

    pub fn num_periods(&self) -> usize {
        self.hours * self.subperiods_per_hour
    }

    pub fn minutes_per_period(&self) -> f64 {
        60.0 / self.subperiods_per_hour as f64
    }

    /// Sub-period length in hours.
    pub fn period_hours(&self) -> f64 {
        1.0 / self.subperiods_per_hour as f64
    }

    /// Zero-based hour containing zero-based sub-period `k`.
    pub fn hour_of(&self, k: usize) -> usize {
        k / self.subperiods_per_hour
    }

    /// Zero-based sub-periods of zero-based hour `h`.
    pub fn periods_of(&self, h: usize) -> std::ops::Range<usize> {
        h * self.subperiods_per_hour..(h + 1) * self.subperiods_per_hour
    }
}

/// Hourly expected net load, `[bus][hour]` in MW.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HourlyForecast {
    pub values: Vec<Vec<f64>>,
}

impl HourlyForecast {
    pub fn new(values: Vec<Vec<f64>>) -> Result<Self, ScenarioError> {
        let hours = values.first().map_or(0, Vec::len);
        if values
            .iter()
            .any(|r| r.len() != hours || r.iter().any(|x| !x.is_finite()))
        {
            return Err(ScenarioError::InvalidForecast);
        }
        Ok(Self { values })
    }

    pub fn num_buses(&self) -> usize {
        self.values.len()
    }

    pub fn hours(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    /// Expands to sub-periods by linear interpolation between hour midpoints,
    /// held flat before the first and after the last midpoint.
    pub fn expand(&self, grid: TimeGrid) -> NetLoadForecast {
        let k_per_h = grid.subperiods_per_hour as f64;
        let values = self
            .values
            .iter()
            .map(|hourly| {
                (0..grid.num_periods())
                    .map(|k| {
                        // time in hours, measured so that hour h's midpoint is at h
                        let t = (k as f64 + 0.5) / k_per_h - 0.5;
                        let last = (hourly.len() - 1) as f64;
                        if t <= 0.0 {
                            hourly[0]
                        } else if t >= last {
                            hourly[hourly.len() - 1]
                        } else {
                            let i = t.floor() as usize;
                            let frac = t - i as f64;
                            hourly[i] * (1.0 - frac) + hourly[i + 1] * frac
                        }
                    })
                    .collect()
            })
            .collect();
        NetLoadForecast { grid, values }
    }
}

/// Expected net load per bus per sub-period, `[bus][k]` in MW.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetLoadForecast {
    pub grid: TimeGrid,
    pub values: Vec<Vec<f64>>,
}

impl NetLoadForecast {
    pub fn new(grid: TimeGrid, values: Vec<Vec<f64>>) -> Result<Self, ScenarioError> {
        if values
            .iter()
            .any(|r| r.len() != grid.num_periods() || r.iter().any(|x| !x.is_finite()))
        {
            return Err(ScenarioError::InvalidForecast);
        }
        Ok(Self { grid, values })
    }

    pub fn num_buses(&self) -> usize {
        self.values.len()
    }

    pub fn std_dev(&self, sigma_frac: f64, bus: usize, k: usize) -> f64 {
        sigma_frac * self.values[bus][k].abs()
    }

    /// System-wide forecast per sub-period.
    pub fn system_total(&self) -> Vec<f64> {
        (0..self.grid.num_periods())
            .map(|k| self.values.iter().map(|r| r[k]).sum())
            .collect()
    }
}

/// Equally dimensioned net-load trajectories with probabilities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSet {
    pub grid: TimeGrid,
    pub probabilities: Vec<f64>,
    /// `[scenario][bus][k]`, MW.
    pub scenarios: Vec<Vec<Vec<f64>>>,
}

impl ScenarioSet {
    pub fn new(
        grid: TimeGrid,
        probabilities: Vec<f64>,
        scenarios: Vec<Vec<Vec<f64>>>,
    ) -> Result<Self, ScenarioError> {
        if scenarios.is_empty() || probabilities.len() != scenarios.len() {
            return Err(ScenarioError::NoScenarios);
        }
        let total: f64 = probabilities.iter().sum();
        if probabilities.iter().any(|p| !(*p >= 0.0)) || (total - 1.0).abs() > 1e-9 {
            return Err(ScenarioError::Probabilities(total));
        }
        let buses = scenarios[0].len();
        if scenarios.iter().any(|s| {
            s.len() != buses
                || s.iter()
                    .any(|r| r.len() != grid.num_periods() || r.iter().any(|x| !x.is_finite()))
        }) {
            return Err(ScenarioError::InvalidForecast);
        }
        Ok(Self {
            grid,
            probabilities,
            scenarios,
        })
    }

    /// A one-scenario set with probability one.
    pub fn deterministic(grid: TimeGrid, trajectory: Vec<Vec<f64>>) -> Result<Self, ScenarioError> {
        Self::new(grid, vec![1.0], vec![trajectory])
    }

    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }

    pub fn num_buses(&self) -> usize {
        self.scenarios[0].len()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario sets always serialise")
    }

    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let raw: ScenarioSet =
            serde_json::from_str(text).map_err(|e| ScenarioError::Csv(e.to_string()))?;
        Self::new(raw.grid, raw.probabilities, raw.scenarios)
    }
}

fn check_inputs(sigma_frac: f64, rho: f64) -> Result<(), ScenarioError> {
    if !(sigma_frac.is_finite() && sigma_frac >= 0.0) {
        return Err(ScenarioError::InvalidSigma(sigma_frac));
    }
    if !(0.0..1.0).contains(&rho) {
        return Err(ScenarioError::InvalidRho(rho));
    }
    Ok(())
}

fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// One trajectory `[bus][k]` drawn from `rng`.
fn draw_path(
    forecast: &NetLoadForecast,
    sigma_frac: f64,
    rho: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<f64>> {
    let innovation_scale = (1.0 - rho * rho).sqrt();
    forecast
        .values
        .iter()
        .enumerate()
        .map(|(n, row)| {
            let mut prev = 0.0;
            row.iter()
                .enumerate()
                .map(|(k, &mean)| {
                    let shock: f64 = rng.sample(StandardNormal);
                    let e = if k == 0 {
                        shock
                    } else {
                        rho * prev + innovation_scale * shock
                    };
                    prev = e;
                    mean + forecast.std_dev(sigma_frac, n, k) * e
                })
                .collect()
        })
        .collect()
}

/// Equiprobable scenarios with AR(1)-correlated Gaussian errors.
pub fn gen_ar1_scenarios(
    forecast: &NetLoadForecast,
    sigma_frac: f64,
    rho: f64,
    n_scenarios: usize,
    seed: u64,
) -> Result<ScenarioSet, ScenarioError> {
    check_inputs(sigma_frac, rho)?;
    if n_scenarios == 0 {
        return Err(ScenarioError::NoScenarios);
    }
    let mut rng = stream(seed, IN_SAMPLE_STREAM);
    let scenarios = (0..n_scenarios)
        .map(|_| draw_path(forecast, sigma_frac, rho, &mut rng))
        .collect();
    Ok(ScenarioSet {
        grid: forecast.grid,
        probabilities: vec![1.0 / n_scenarios as f64; n_scenarios],
        scenarios,
    })
}

/// Equiprobable scenarios with errors independent across buses and periods.
pub fn gen_iid_scenarios(
    forecast: &NetLoadForecast,
    sigma_frac: f64,
    n_scenarios: usize,
    seed: u64,
) -> Result<ScenarioSet, ScenarioError> {
    gen_ar1_scenarios(forecast, sigma_frac, 0.0, n_scenarios, seed)
}

/// A single realisation from the out-of-sample stream of `seed`.
pub fn draw_out_of_sample(
    forecast: &NetLoadForecast,
    sigma_frac: f64,
    rho: f64,
    seed: u64,
) -> Result<Vec<Vec<f64>>, ScenarioError> {
    check_inputs(sigma_frac, rho)?;
    let mut rng = stream(seed, OUT_OF_SAMPLE_STREAM);
    Ok(draw_path(forecast, sigma_frac, rho, &mut rng))
}

/// Per-day seed derived from a master seed (splitmix64 finaliser).
pub fn day_seed(master: u64, day: u32) -> u64 {
    let mut z = master ^ (u64::from(day).wrapping_add(1)).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Deserialize)]
struct ForecastRecord {
    day: u32,
    hour: usize,
    bus: String,
    net_load_mw: f64,
}

/// Reads `day,hour,bus,net_load_mw` rows (hours 1-based) into one hourly
/// forecast per day, with buses ordered as in `bus_ids`.
pub fn read_forecast_csv(
    path: impl AsRef<Path>,
    bus_ids: &[String],
) -> Result<BTreeMap<u32, HourlyForecast>, ScenarioError> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path).map_err(|e| ScenarioError::Read {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let mut days: BTreeMap<u32, Vec<Vec<Option<f64>>>> = BTreeMap::new();
    for rec in reader.deserialize::<ForecastRecord>() {
        let rec = rec.map_err(|e| ScenarioError::Csv(e.to_string()))?;
        let n = bus_ids
            .iter()
            .position(|b| *b == rec.bus)
            .ok_or_else(|| ScenarioError::Csv(format!("unknown bus `{}`", rec.bus)))?;
        if rec.hour == 0 {
            return Err(ScenarioError::Csv("hours are numbered from 1".into()));
        }
        let table = days
            .entry(rec.day)
            .or_insert_with(|| vec![Vec::new(); bus_ids.len()]);
        let row = &mut table[n];
        if row.len() < rec.hour {
            row.resize(rec.hour, None);
        }
        row[rec.hour - 1] = Some(rec.net_load_mw);
    }
    days.into_iter()
        .map(|(day, table)| {
            let hours = table.iter().map(Vec::len).max().unwrap_or(0);
            let values = table
                .into_iter()
                .enumerate()
                .map(|(n, mut row)| {
                    row.resize(hours, None);
                    row.into_iter()
                        .enumerate()
                        .map(|(h, v)| {
                            v.ok_or_else(|| {
                                ScenarioError::Csv(format!(
                                    "day {day}: no value for bus `{}` hour {}",
                                    bus_ids[n],
                                    h + 1
                                ))
                            })
                        })
                        .collect::<Result<Vec<f64>, _>>()
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok((day, HourlyForecast::new(values)?))
        })
        .collect()
}
