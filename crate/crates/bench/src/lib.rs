//! Fixtures for the benchmarks.

use std::path::PathBuf;

use frp_core::scenario::gen_ar1_scenarios;
use frp_core::{load_system, HourlyForecast, PowerSystem, ScenarioSet, TimeGrid};

pub fn bundled_system(name: &str) -> PowerSystem {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data/systems")
        .join(format!("{name}.toml"));
    load_system(path).expect("bundled system")
}

/// Evening-ramp net load spread evenly over the non-slack buses.
pub fn ramp_forecast(system: &PowerSystem, hours: usize, peak_mw: f64) -> HourlyForecast {
    let loaded = system.num_buses().saturating_sub(1).max(1) as f64;
    let values = (0..system.num_buses())
        .map(|n| {
            (0..hours)
                .map(|h| {
                    if n == system.slack_index() && system.num_buses() > 1 {
                        return 0.0;
                    }
                    let x = h as f64 / hours.max(2).saturating_sub(1) as f64;
                    peak_mw * (0.55 + 0.45 * x * x) / loaded
                })
                .collect()
        })
        .collect();
    HourlyForecast::new(values).expect("finite forecast")
}

pub fn scenarios(system: &PowerSystem, hours: usize, per_hour: usize, n: usize) -> ScenarioSet {
    let grid = TimeGrid::new(hours, per_hour).expect("grid");
    let f = ramp_forecast(system, hours, 320.0).expand(grid);
    gen_ar1_scenarios(&f, 0.05, 0.4, n, 11).expect("scenarios")
}
