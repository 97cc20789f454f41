//! Sample statistics of AR(1) scenario errors around a flat forecast.

use frp_core::scenario::{gen_ar1_scenarios, NetLoadForecast};
use frp_core::TimeGrid;

pub const N: usize = 10_000;
pub const MEAN: f64 = 100.0;
pub const SIGMA: f64 = 0.03;

pub fn forecast() -> NetLoadForecast {
    let grid = TimeGrid::new(24, 4).unwrap();
    NetLoadForecast::new(grid, vec![vec![MEAN; grid.num_periods()]]).unwrap()
}

/// Standardised errors of `N` scenarios, `[scenario][k]`.
pub fn errors(rho: f64, seed: u64) -> Vec<Vec<f64>> {
    let set = gen_ar1_scenarios(&forecast(), SIGMA, rho, N, seed).unwrap();
    set.scenarios
        .into_iter()
        .map(|s| s[0].iter().map(|x| (x - MEAN) / (SIGMA * MEAN)).collect())
        .collect()
}

pub fn lag1(e: &[Vec<f64>]) -> f64 {
    let all: Vec<f64> = e.iter().flatten().copied().collect();
    let mean = all.iter().sum::<f64>() / all.len() as f64;
    let (mut num, mut den) = (0.0, 0.0);
    for path in e {
        for k in 0..path.len() - 1 {
            num += (path[k] - mean) * (path[k + 1] - mean);
        }
        for x in path {
            den += (x - mean).powi(2);
        }
    }
    // Rescale for the one pair fewer than samples per path.
    let periods = e[0].len() as f64;
    num / den * periods / (periods - 1.0)
}

pub fn period_variances(e: &[Vec<f64>]) -> Vec<f64> {
    (0..e[0].len())
        .map(|k| {
            let m = e.iter().map(|p| p[k]).sum::<f64>() / N as f64;
            e.iter().map(|p| (p[k] - m).powi(2)).sum::<f64>() / (N - 1) as f64
        })
        .collect()
}
