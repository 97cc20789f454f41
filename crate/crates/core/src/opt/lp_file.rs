//! CPLEX LP format writer, used for `--dump-lp`.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use super::{Model, VarKind};

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || "_.[]".contains(c) {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn write_terms(out: &mut String, terms: impl Iterator<Item = (String, f64)>) {
    let mut first = true;
    let mut n = 0;
    for (name, coef) in terms {
        if coef == 0.0 {
            continue;
        }
        let sign = if coef < 0.0 {
            "-"
        } else if first {
            ""
        } else {
            "+"
        };
        let _ = write!(out, " {sign} {} {name}", coef.abs());
        first = false;
        n += 1;
        if n % 8 == 0 {
            out.push_str("\n   ");
        }
    }
    if first {
        out.push_str(" 0");
    }
}

pub(super) fn render(model: &Model) -> String {
    let names: Vec<String> = model
        .cols
        .iter()
        .enumerate()
        .map(|(i, c)| format!("c{i}_{}", sanitize(&c.name)))
        .collect();
    let mut out = String::from("\\ generated by frp-core\nMinimize\n obj:");
    write_terms(
        &mut out,
        model
            .cols
            .iter()
            .zip(&names)
            .map(|(c, n)| (n.clone(), c.cost)),
    );
    if model.objective_constant != 0.0 {
        let _ = write!(out, " + {} __const", model.objective_constant);
    }
    out.push_str("\nSubject To\n");
    for row in &model.rows {
        let terms = || row.coeffs.iter().map(|&(j, a)| (names[j].clone(), a));
        let label = sanitize(&row.name);
        if row.lb == row.ub {
            let _ = write!(out, " {label}:");
            write_terms(&mut out, terms());
            let _ = writeln!(out, " = {}", row.lb);
        } else {
            if row.lb.is_finite() {
                let suffix = if row.ub.is_finite() { "_lo" } else { "" };
                let _ = write!(out, " {label}{suffix}:");
                write_terms(&mut out, terms());
                let _ = writeln!(out, " >= {}", row.lb);
            }
            if row.ub.is_finite() {
                let suffix = if row.lb.is_finite() { "_hi" } else { "" };
                let _ = write!(out, " {label}{suffix}:");
                write_terms(&mut out, terms());
                let _ = writeln!(out, " <= {}", row.ub);
            }
        }
    }
    out.push_str("Bounds\n");
    if model.objective_constant != 0.0 {
        out.push_str(" __const = 1\n");
    }
    for (c, n) in model.cols.iter().zip(&names) {
        match (c.lb.is_finite(), c.ub.is_finite()) {
            (true, true) => {
                let _ = writeln!(out, " {} <= {n} <= {}", c.lb, c.ub);
            }
            (true, false) => {
                let _ = writeln!(out, " {n} >= {}", c.lb);
            }
            (false, true) => {
                let _ = writeln!(out, " -inf <= {n} <= {}", c.ub);
            }
            (false, false) => {
                let _ = writeln!(out, " {n} free");
            }
        }
    }
    let ints: Vec<&String> = model
        .cols
        .iter()
        .zip(&names)
        .filter(|(c, _)| c.kind != VarKind::Continuous)
        .map(|(_, n)| n)
        .collect();
    if !ints.is_empty() {
        out.push_str("General\n");
        for n in ints {
            let _ = writeln!(out, " {n}");
        }
    }
    out.push_str("End\n");
    out
}

pub(super) fn dump(model: &Model, path: &Path) -> io::Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, render(model))
}
