use std::collections::VecDeque;

use nalgebra::DMatrix;

use super::{Bus, Line, SystemError};

/// Injection shift factors, one row per line and one column per bus. The
/// slack-bus column is zero: every injection is withdrawn at the slack.
#[derive(Clone, Debug, PartialEq)]
pub struct IsfMatrix {
    rows: Vec<Vec<f64>>,
    buses: usize,
}

impl IsfMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>, buses: usize) -> Self {
        Self { rows, buses }
    }

    pub fn num_lines(&self) -> usize {
        self.rows.len()
    }

    pub fn num_buses(&self) -> usize {
        self.buses
    }

    pub fn get(&self, line: usize, bus: usize) -> f64 {
        self.rows[line][bus]
    }

    pub fn row(&self, line: usize) -> &[f64] {
        &self.rows[line]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn flows(&self, injections: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.iter().zip(injections).map(|(a, p)| a * p).sum())
            .collect()
    }

    pub fn max_abs_diff(&self, other: &IsfMatrix) -> f64 {
        self.rows
            .iter()
            .zip(&other.rows)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }
}

/// DC power-flow sensitivities: `B_branch * inv(B_bus reduced by the slack)`,
/// padded with a zero slack column.
pub fn compute_isf(buses: &[Bus], lines: &[Line]) -> Result<IsfMatrix, SystemError> {
    let n = buses.len();
    let slack = buses
        .iter()
        .position(|b| b.is_slack)
        .ok_or(SystemError::NoSlackBus)?;
    let index = |id: &str| {
        buses
            .iter()
            .position(|b| b.id == id)
            .ok_or_else(|| SystemError::UnknownBus {
                owner: "line".into(),
                bus: id.into(),
            })
    };
    let ends: Vec<(usize, usize)> = lines
        .iter()
        .map(|l| Ok((index(&l.from)?, index(&l.to)?)))
        .collect::<Result<_, SystemError>>()?;

    check_connected(buses, &ends, slack)?;
    if lines.is_empty() {
        return Ok(IsfMatrix::from_rows(Vec::new(), n));
    }

    // reduced bus numbering skips the slack
    let reduced = |b: usize| -> Option<usize> {
        match b.cmp(&slack) {
            std::cmp::Ordering::Less => Some(b),
            std::cmp::Ordering::Equal => None,
            std::cmp::Ordering::Greater => Some(b - 1),
        }
    };
    let m = n - 1;
    let mut b_bus = DMatrix::<f64>::zeros(m, m);
    for (line, &(f, t)) in lines.iter().zip(&ends) {
        let y = 1.0 / line.reactance_pu;
        if let Some(i) = reduced(f) {
            b_bus[(i, i)] += y;
        }
        if let Some(j) = reduced(t) {
            b_bus[(j, j)] += y;
        }
        if let (Some(i), Some(j)) = (reduced(f), reduced(t)) {
            b_bus[(i, j)] -= y;
            b_bus[(j, i)] -= y;
        }
    }
    let inv = b_bus
        .lu()
        .try_inverse()
        .ok_or(SystemError::SingularSusceptance)?;

    let angle = |b: usize, inj: usize| -> f64 {
        match reduced(b) {
            Some(i) => inv[(i, inj)],
            None => 0.0,
        }
    };
    let rows = lines
        .iter()
        .zip(&ends)
        .map(|(line, &(f, t))| {
            (0..n)
                .map(|bus| match reduced(bus) {
                    Some(k) => (angle(f, k) - angle(t, k)) / line.reactance_pu,
                    None => 0.0,
                })
                .collect()
        })
        .collect();
    Ok(IsfMatrix::from_rows(rows, n))
}

fn check_connected(
    buses: &[Bus],
    ends: &[(usize, usize)],
    slack: usize,
) -> Result<(), SystemError> {
    let n = buses.len();
    let mut adj = vec![Vec::new(); n];
    for &(f, t) in ends {
        adj[f].push(t);
        adj[t].push(f);
    }
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([slack]);
    seen[slack] = true;
    while let Some(b) = queue.pop_front() {
        for &nb in &adj[b] {
            if !seen[nb] {
                seen[nb] = true;
                queue.push_back(nb);
            }
        }
    }
    let component: Vec<String> = buses
        .iter()
        .zip(&seen)
        .filter(|(_, &s)| !s)
        .map(|(b, _)| b.id.clone())
        .collect();
    if component.is_empty() {
        Ok(())
    } else {
        Err(SystemError::Disconnected { component })
    }
}
