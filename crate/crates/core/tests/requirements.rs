mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use frp_core::frp::RequirementSource;
use frp_core::scenario::NetLoadForecast;
use frp_core::{percentile_requirements, suc_requirements, TimeGrid};

use common::brute_force_requirements;
use common::fixtures::random_requirement_case;

#[test]
fn suc_requirements_match_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for trial in 0..100 {
        let (sol, set) = random_requirement_case(&mut rng);
        let req = suc_requirements(&sol, &set).unwrap();
        let (up, down) = brute_force_requirements(&sol, &set);
        assert_eq!(req.up, up, "trial {trial}");
        assert_eq!(req.down, down, "trial {trial}");
        assert_eq!(req.source, RequirementSource::SucDerived);
    }
}

#[test]
fn percentile_requirement_on_flat_forecast_is_the_band() {
    let grid = TimeGrid::new(2, 4).unwrap();
    let f = NetLoadForecast::new(grid, vec![vec![100.0; 8], vec![300.0; 8]]).unwrap();
    let req = percentile_requirements(&f, 0.05, 0.95).unwrap();
    // sigma_sys = sqrt(5^2 + 15^2); band spans both ends of the step.
    let band = 4.0 * 1.959_963_984_540_054 * 2.0 * (25.0_f64 + 225.0).sqrt();
    for h in 0..2 {
        assert!((req.up[h] - band).abs() < 1e-6);
        assert!((req.down[h] - band).abs() < 1e-6);
    }
}
