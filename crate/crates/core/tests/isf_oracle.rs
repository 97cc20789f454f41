mod common;

use frp_core::system::parse_system;
use frp_core::PowerSystem;

use common::system;

/// Inverse by Gauss-Jordan elimination with partial pivoting.
fn invert(mut a: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut inv: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect())
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let d = a[col][col];
        for j in 0..n {
            a[col][j] /= d;
            inv[col][j] /= d;
        }
        for i in 0..n {
            if i != col {
                let f = a[i][col];
                for j in 0..n {
                    a[i][j] -= f * a[col][j];
                    inv[i][j] -= f * inv[col][j];
                }
            }
        }
    }
    inv
}

/// Shift factors from the reduced susceptance matrix, slack angle zero.
fn reference_isf(sys: &PowerSystem) -> Vec<Vec<f64>> {
    let n = sys.num_buses();
    let slack = sys.slack_index();
    let mut b = vec![vec![0.0; n]; n];
    let ends: Vec<(usize, usize)> = sys
        .lines
        .iter()
        .map(|l| {
            (
                sys.bus_index(&l.from).unwrap(),
                sys.bus_index(&l.to).unwrap(),
            )
        })
        .collect();
    for (l, &(f, t)) in sys.lines.iter().zip(&ends) {
        let y = 1.0 / l.reactance_pu;
        b[f][f] += y;
        b[t][t] += y;
        b[f][t] -= y;
        b[t][f] -= y;
    }
    let keep: Vec<usize> = (0..n).filter(|&i| i != slack).collect();
    let reduced = keep
        .iter()
        .map(|&i| keep.iter().map(|&j| b[i][j]).collect())
        .collect();
    let x = invert(reduced);
    let mut theta = vec![vec![0.0; n]; n];
    for (a, &i) in keep.iter().enumerate() {
        for (c, &j) in keep.iter().enumerate() {
            theta[i][j] = x[a][c];
        }
    }
    sys.lines
        .iter()
        .zip(&ends)
        .map(|(l, &(f, t))| {
            (0..n)
                .map(|k| (theta[f][k] - theta[t][k]) / l.reactance_pu)
                .collect()
        })
        .collect()
}

#[test]
fn ieee14_matches_gauss_jordan() {
    let sys = system("ieee14");
    let expected = reference_isf(&sys);
    for (l, row) in expected.iter().enumerate() {
        for (n, &x) in row.iter().enumerate() {
            assert!(
                (sys.isf.get(l, n) - x).abs() <= 1e-9,
                "line {l}, bus {n}: {} vs {x}",
                sys.isf.get(l, n)
            );
        }
    }
}

#[test]
fn triangle_splits_two_thirds_one_third() {
    let sys = parse_system(
        r#"
schema_version = 1
name = "triangle"
curtailment_penalty_per_mwh = 1000.0
frp_shortfall_penalty_per_mw = 500.0
buses = [{ id = "a", slack = true }, { id = "b" }, { id = "c" }]
lines = [
  { id = "ab", from = "a", to = "b", reactance_pu = 0.1, flow_min_mw = -100.0, flow_max_mw = 100.0 },
  { id = "bc", from = "b", to = "c", reactance_pu = 0.1, flow_min_mw = -100.0, flow_max_mw = 100.0 },
  { id = "ca", from = "c", to = "a", reactance_pu = 0.1, flow_min_mw = -100.0, flow_max_mw = 100.0 },
]
generators = []
"#,
    )
    .unwrap();
    // 1 MW injected at b and withdrawn at a.
    let flows = sys.line_flows(&[0.0, 1.0, 0.0]);
    let expected = [-2.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0];
    for (f, e) in flows.iter().zip(expected) {
        assert!((f - e).abs() < 1e-12, "{flows:?}");
    }
}
