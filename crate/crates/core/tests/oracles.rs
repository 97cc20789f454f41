mod common;

use std::time::Instant;

use frp_core::system::parse_system;
use frp_core::{
    build_and_solve_suc, clear_dam, DamBidSet, FrpRequirements, ScenarioSet, SolveOptions, TimeGrid,
};

use common::fixtures::DAMC_SYSTEM;
use common::{enumerate_best, rel_diff, system};

#[test]
fn suc_matches_pattern_enumeration() {
    let start = Instant::now();
    let sys = system("two_gen");
    let loads = [
        (0.6, vec![60.0, 90.0, 130.0, 100.0]),
        (0.4, vec![50.0, 70.0, 150.0, 80.0]),
    ];
    let set = ScenarioSet::new(
        TimeGrid::hourly(4),
        loads.iter().map(|(p, _)| *p).collect(),
        loads.iter().map(|(_, l)| vec![l.clone()]).collect(),
    )
    .unwrap();
    let sol = build_and_solve_suc(&sys, &set, &SolveOptions::default()).unwrap();
    let (best, u) = enumerate_best(&sys, &loads);
    assert!(
        rel_diff(sol.objective, best) <= 1e-6,
        "SUC {} vs enumeration {} ({u:?})",
        sol.objective,
        best
    );
    assert!(start.elapsed().as_secs_f64() < 10.0);
}

#[test]
fn suc_matches_enumeration_with_shedding() {
    let sys = system("two_gen");
    // Hour 3 exceeds what the fleet can reach from its initial state.
    let loads = [
        (0.5, vec![40.0, 160.0, 160.0, 30.0]),
        (0.5, vec![45.0, 45.0, 45.0, 45.0]),
    ];
    let set = ScenarioSet::new(
        TimeGrid::hourly(4),
        vec![0.5, 0.5],
        loads.iter().map(|(_, l)| vec![l.clone()]).collect(),
    )
    .unwrap();
    let sol = build_and_solve_suc(&sys, &set, &SolveOptions::default()).unwrap();
    let (best, _) = enumerate_best(&sys, &loads);
    assert!(
        rel_diff(sol.objective, best) <= 1e-6,
        "{} vs {}",
        sol.objective,
        best
    );
}

#[test]
fn zero_requirement_damc_matches_pattern_enumeration() {
    let start = Instant::now();
    let sys = parse_system(DAMC_SYSTEM).unwrap();
    for load in [[30.0, 120.0, 60.0], [90.0, 40.0, 140.0], [10.0, 10.0, 10.0]] {
        let bids = DamBidSet {
            demand: vec![load.to_vec()],
        };
        let dam = clear_dam(
            &sys,
            &bids,
            &FrpRequirements::zero(3),
            None,
            &SolveOptions::default(),
        )
        .unwrap();
        let (best, u) = enumerate_best(&sys, &[(1.0, load.to_vec())]);
        assert!(
            rel_diff(dam.objective, best) <= 1e-6,
            "load {load:?}: DAMC {} vs enumeration {} ({u:?})",
            dam.objective,
            best
        );
    }
    assert!(start.elapsed().as_secs_f64() < 5.0);
}
