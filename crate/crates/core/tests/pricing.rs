mod common;

use frp_core::damc::clear_dam_unpriced;
use frp_core::{clear_dam, price_dam, FrpRequirements, SolveOptions};

use common::fixtures::{pricing_case as setup, up_requirements as reqs};

#[test]
fn lmp_equals_interior_segment_cost() {
    let (sys, bids) = setup();
    let dam = clear_dam(
        &sys,
        &bids,
        &FrpRequirements::zero(2),
        None,
        &SolveOptions::default(),
    )
    .unwrap();
    // cheap at capacity, dear at 20 MW: strictly inside its first segment.
    assert!((dam.above_min[1][0] - 20.0).abs() < 1e-6);
    for h in 0..2 {
        assert!(
            (dam.lmp[0][h] - 35.0).abs() <= 1e-6,
            "hour {h}: {}",
            dam.lmp[0][h]
        );
    }
}

#[test]
fn frp_price_zero_when_slack_and_opportunity_cost_when_binding() {
    let (sys, bids) = setup();
    let dam = clear_dam(
        &sys,
        &bids,
        &reqs([45.0, 10.0]),
        None,
        &SolveOptions::default(),
    )
    .unwrap();
    // dear is ramp-limited to 30 MW of up-FRP, so 15 MW of energy moves
    // from cheap to dear to free headroom: 35 - 20 per MW.
    assert!(
        (dam.frp_price_up[0] - 15.0).abs() < 1e-6,
        "{:?}",
        dam.frp_price_up
    );
    assert!(dam.frp_price_up[1].abs() < 1e-6, "{:?}", dam.frp_price_up);
    assert!(dam.shortfall_up.iter().all(|s| s.abs() < 1e-9));
}

#[test]
fn frp_price_equals_penalty_under_shortfall() {
    let (sys, bids) = setup();
    let dam = clear_dam(
        &sys,
        &bids,
        &reqs([100.0, 0.0]),
        None,
        &SolveOptions::default(),
    )
    .unwrap();
    assert!(dam.shortfall_up[0] > 1.0);
    assert!((dam.frp_price_up[0] - sys.frp_shortfall_penalty).abs() < 1e-6);
}

#[test]
fn frp_price_matches_finite_difference() {
    let (sys, bids) = setup();
    let opts = SolveOptions::default();
    let delta = 0.1;
    for base in [[45.0, 10.0], [60.0, 0.0], [100.0, 0.0]] {
        let clearing = clear_dam_unpriced(&sys, &bids, &reqs(base), None, &opts).unwrap();
        let prices = price_dam(&clearing, &opts).unwrap();
        let bumped = clearing
            .reprice_with(&sys, &reqs([base[0] + delta, base[1]]), &opts)
            .unwrap();
        let fd = (bumped.objective - prices.objective) / delta;
        let phi = prices.frp_up[0];
        assert!(
            (fd - phi).abs() <= 0.01 * phi.abs().max(1e-9),
            "requirement {base:?}: finite difference {fd}, dual {phi}"
        );
    }
}
