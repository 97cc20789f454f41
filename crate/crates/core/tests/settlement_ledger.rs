//! Settlement of the hand-built day in `common::fixtures`.

mod common;

use frp_core::{settle, Convention};

use common::fixtures::hand_settled_day as day;
use common::system;

fn cents(x: f64) -> i64 {
    (x * 100.0).round() as i64
}

#[test]
fn two_settlement_make_whole_to_the_cent() {
    let sys = system("two_gen");
    let (dam, rtm) = day();
    let report = settle(&sys, &dam, &rtm, Convention::Two).unwrap();
    let [base, peak] = &report.generators[..] else {
        panic!()
    };
    assert_eq!(cents(base.energy_revenue), 306_000);
    assert_eq!(cents(base.cost), 150_000);
    assert_eq!(cents(base.make_whole), 0);
    assert_eq!(cents(peak.energy_revenue), 92_500);
    assert_eq!(cents(peak.frp_revenue), 6_185);
    assert_eq!(cents(peak.cost), 113_000);
    assert_eq!(cents(peak.make_whole), 14_315);
    assert_eq!(cents(report.make_whole_payment), 14_315);
    assert_eq!(cents(report.frp_payment), 6_185);
}

#[test]
fn day_ahead_only_make_whole_to_the_cent() {
    let sys = system("two_gen");
    let (dam, rtm) = day();
    let report = settle(&sys, &dam, &rtm, Convention::DamOnly).unwrap();
    assert_eq!(cents(report.generators[0].energy_revenue), 333_000);
    assert_eq!(cents(report.generators[1].make_whole), 54_815);
}
