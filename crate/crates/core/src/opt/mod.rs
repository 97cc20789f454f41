//! Solver-agnostic model building for linear and mixed-integer programs.
//!
//! Models are assembled column by column and row by row into a [`Model`],
//! then handed to the HiGHS backend. Every constraint carries a unique name so
//! that duals from a pricing run can be looked up by name.

mod expr;
mod lp_file;

pub use expr::LinExpr;

use std::collections::HashMap;
use std::fmt;
use std::path::PathBuf;

use highs::{HighsModelStatus, RowProblem, Sense as HighsSense};
use thiserror::Error;

/// Handle to a column of a [`Model`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(pub(crate) usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Handle to a row of a [`Model`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ConstraintId(usize);

impl ConstraintId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    Binary,
    Integer,
}

impl VarKind {
    pub fn is_integer(self) -> bool {
        !matches!(self, VarKind::Continuous)
    }
}

/// Direction of a linear constraint.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Error)]
pub enum OptError {
    #[error("duplicate constraint name `{0}`")]
    DuplicateConstraint(String),
    #[error("constraint `{name}` references unknown variable index {index}")]
    UnknownVariable { name: String, index: usize },
    #[error("incumbent has {got} values but the model has {expected} variables")]
    IncumbentSize { expected: usize, got: usize },
    #[error("model is infeasible after fixing integer variables to the incumbent")]
    InfeasibleAfterFixing,
    #[error("pricing run ended with status {0}")]
    PricingFailed(SolveStatus),
    #[error("HiGHS rejected the model: {0}")]
    Backend(String),
    #[error("could not write LP file {path}: {source}")]
    Dump {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Clone, Debug)]
pub(crate) struct Column {
    pub name: String,
    pub kind: VarKind,
    pub lb: f64,
    pub ub: f64,
    pub cost: f64,
}

#[derive(Clone, Debug)]
pub(crate) struct Row {
    pub name: String,
    pub coeffs: Vec<(usize, f64)>,
    pub lb: f64,
    pub ub: f64,
}

/// A minimisation model: bounded columns, named linear rows and a linear
/// objective with an optional constant term.
#[derive(Clone, Debug, Default)]
pub struct Model {
    pub(crate) cols: Vec<Column>,
    pub(crate) rows: Vec<Row>,
    row_index: HashMap<String, ConstraintId>,
    pub(crate) objective_constant: f64,
}

impl Model {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.cols.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.rows.len()
    }

    pub fn has_integers(&self) -> bool {
        self.cols.iter().any(|c| c.kind.is_integer())
    }

    pub fn add_var(
        &mut self,
        name: impl Into<String>,
        kind: VarKind,
        lb: f64,
        ub: f64,
        cost: f64,
    ) -> Var {
        let (lb, ub) = match kind {
            VarKind::Binary => (lb.max(0.0), ub.min(1.0)),
            _ => (lb, ub),
        };
        self.cols.push(Column {
            name: name.into(),
            kind,
            lb,
            ub,
            cost,
        });
        Var(self.cols.len() - 1)
    }

    pub fn continuous(&mut self, name: impl Into<String>, lb: f64, ub: f64, cost: f64) -> Var {
        self.add_var(name, VarKind::Continuous, lb, ub, cost)
    }

    pub fn binary(&mut self, name: impl Into<String>, cost: f64) -> Var {
        self.add_var(name, VarKind::Binary, 0.0, 1.0, cost)
    }

    pub fn add_objective_constant(&mut self, value: f64) {
        self.objective_constant += value;
    }

    pub fn add_cost(&mut self, var: Var, cost: f64) {
        self.cols[var.0].cost += cost;
    }

    pub fn cost(&self, var: Var) -> f64 {
        self.cols[var.0].cost
    }

    pub fn bounds(&self, var: Var) -> (f64, f64) {
        (self.cols[var.0].lb, self.cols[var.0].ub)
    }

    pub fn kind(&self, var: Var) -> VarKind {
        self.cols[var.0].kind
    }

    pub fn var_name(&self, var: Var) -> &str {
        &self.cols[var.0].name
    }

    pub fn set_bounds(&mut self, var: Var, lb: f64, ub: f64) {
        let col = &mut self.cols[var.0];
        col.lb = lb;
        col.ub = ub;
    }

    pub fn fix(&mut self, var: Var, value: f64) {
        self.set_bounds(var, value, value);
    }

    /// Adds `expr cmp rhs`. The constant part of `expr` is moved to the
    /// right-hand side.
    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        expr: LinExpr,
        cmp: Cmp,
        rhs: f64,
    ) -> Result<ConstraintId, OptError> {
        let name = name.into();
        if self.row_index.contains_key(&name) {
            return Err(OptError::DuplicateConstraint(name));
        }
        let (terms, constant) = expr.into_parts();
        let mut coeffs: Vec<(usize, f64)> = Vec::with_capacity(terms.len());
        for (var, coef) in terms {
            if var.0 >= self.cols.len() {
                return Err(OptError::UnknownVariable { name, index: var.0 });
            }
            if coef != 0.0 {
                coeffs.push((var.0, coef));
            }
        }
        let rhs = rhs - constant;
        let (lb, ub) = match cmp {
            Cmp::Le => (f64::NEG_INFINITY, rhs),
            Cmp::Eq => (rhs, rhs),
            Cmp::Ge => (rhs, f64::INFINITY),
        };
        let id = ConstraintId(self.rows.len());
        self.rows.push(Row {
            name: name.clone(),
            coeffs,
            lb,
            ub,
        });
        self.row_index.insert(name, id);
        Ok(id)
    }

    pub fn constraint(&self, name: &str) -> Option<ConstraintId> {
        self.row_index.get(name).copied()
    }

    pub fn constraint_name(&self, id: ConstraintId) -> &str {
        &self.rows[id.0].name
    }

    /// Evaluates the left-hand side of a row at `values`.
    pub fn row_activity(&self, id: ConstraintId, values: &[f64]) -> f64 {
        self.rows[id.0]
            .coeffs
            .iter()
            .map(|&(j, a)| a * values[j])
            .sum()
    }

    pub fn row_bounds(&self, id: ConstraintId) -> (f64, f64) {
        (self.rows[id.0].lb, self.rows[id.0].ub)
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective_constant
            + self
                .cols
                .iter()
                .zip(values)
                .map(|(c, x)| c.cost * x)
                .sum::<f64>()
    }

    /// Largest bound or row violation of `values`.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let mut worst = 0.0_f64;
        for (c, &x) in self.cols.iter().zip(values) {
            worst = worst.max(c.lb - x).max(x - c.ub);
        }
        for (i, r) in self.rows.iter().enumerate() {
            let a = self.row_activity(ConstraintId(i), values);
            worst = worst.max(r.lb - a).max(a - r.ub);
        }
        worst
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    LimitHit,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::LimitHit => "limit-hit",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug)]
pub struct SolveOptions {
    /// Relative MIP gap at which branch-and-bound stops.
    pub gap_tol: f64,
    /// Wall-clock limit in seconds.
    pub time_limit: Option<f64>,
    /// Write the model in LP format into this directory before solving.
    pub dump_lp: Option<PathBuf>,
    /// Base file name used for the LP dump.
    pub label: String,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            gap_tol: 1e-6,
            time_limit: None,
            dump_lp: None,
            label: "model".to_string(),
        }
    }
}

impl SolveOptions {
    pub fn labelled(&self, label: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            ..self.clone()
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Objective value including the model's constant term. `NaN` when no
    /// primal solution is available.
    pub objective: f64,
    pub primal: Vec<f64>,
    /// Row duals, `d objective / d rhs`. Present iff the solved model had no
    /// integer variables.
    pub duals: Option<Vec<f64>>,
    pub mip_gap: Option<f64>,
    /// Proven lower bound on the optimum (equals the objective for LPs).
    pub best_bound: f64,
}

impl SolveResult {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    pub fn value(&self, var: Var) -> f64 {
        self.primal[var.0]
    }

    pub fn dual(&self, id: ConstraintId) -> Option<f64> {
        self.duals.as_ref().map(|d| d[id.0])
    }

    pub fn dual_named(&self, model: &Model, name: &str) -> Option<f64> {
        model.constraint(name).and_then(|id| self.dual(id))
    }
}

/// Solves `model` to `options.gap_tol`. LP models (no integer columns) return
/// duals as well.
pub fn solve_mip(model: &Model, options: &SolveOptions) -> Result<SolveResult, OptError> {
    if let Some(dir) = &options.dump_lp {
        let path = dir.join(format!("{}.lp", options.label));
        lp_file::dump(model, &path).map_err(|source| OptError::Dump { path, source })?;
    }
    if model.cols.is_empty() {
        return Ok(SolveResult {
            status: SolveStatus::Optimal,
            objective: model.objective_constant,
            primal: Vec::new(),
            duals: (!model.has_integers()).then(|| vec![0.0; model.rows.len()]),
            mip_gap: None,
            best_bound: model.objective_constant,
        });
    }
    let start = std::time::Instant::now();
    let result = solve_with_highs(model, options);
    log::debug!(
        "{}: {} cols, {} rows, {:.2}s",
        options.label,
        model.cols.len(),
        model.rows.len(),
        start.elapsed().as_secs_f64()
    );
    result
}

/// Fixes every integer column at its (rounded) incumbent value and solves the
/// remaining LP, returning duals for every named row.
pub fn fix_integers_and_resolve(
    model: &Model,
    incumbent: &[f64],
    options: &SolveOptions,
) -> Result<SolveResult, OptError> {
    if incumbent.len() != model.cols.len() {
        return Err(OptError::IncumbentSize {
            expected: model.cols.len(),
            got: incumbent.len(),
        });
    }
    let mut fixed = model.clone();
    for (col, &x) in fixed.cols.iter_mut().zip(incumbent) {
        if col.kind.is_integer() {
            let v = x.round();
            col.lb = v;
            col.ub = v;
            col.kind = VarKind::Continuous;
        }
    }
    let result = solve_mip(
        &fixed,
        &options.labelled(format!("{}-pricing", options.label)),
    )?;
    match result.status {
        SolveStatus::Optimal => Ok(result),
        SolveStatus::Infeasible => Err(OptError::InfeasibleAfterFixing),
        other => Err(OptError::PricingFailed(other)),
    }
}

fn solve_with_highs(model: &Model, options: &SolveOptions) -> Result<SolveResult, OptError> {
    let is_mip = model.has_integers();
    let mut problem = RowProblem::default();
    let cols: Vec<highs::Col> = model
        .cols
        .iter()
        .map(|c| problem.add_column_with_integrality(c.cost, c.lb..=c.ub, c.kind.is_integer()))
        .collect();
    for row in &model.rows {
        let factors: Vec<(highs::Col, f64)> =
            row.coeffs.iter().map(|&(j, a)| (cols[j], a)).collect();
        problem.add_row(row.lb..=row.ub, factors);
    }

    let mut highs_model = problem
        .try_optimise(HighsSense::Minimise)
        .map_err(|s| OptError::Backend(format!("{s:?}")))?;
    highs_model.make_quiet();
    highs_model.set_option("mip_rel_gap", options.gap_tol);
    highs_model.set_option("mip_feasibility_tolerance", 1e-9);
    highs_model.set_option("primal_feasibility_tolerance", 1e-9);
    highs_model.set_option("dual_feasibility_tolerance", 1e-9);
    if let Some(limit) = options.time_limit {
        highs_model.set_option("time_limit", limit);
    }
    let solved = highs_model
        .try_solve()
        .map_err(|s| OptError::Backend(format!("{s:?}")))?;

    let status = match solved.status() {
        HighsModelStatus::Optimal | HighsModelStatus::ModelEmpty => SolveStatus::Optimal,
        HighsModelStatus::Infeasible => SolveStatus::Infeasible,
        HighsModelStatus::Unbounded | HighsModelStatus::UnboundedOrInfeasible => {
            SolveStatus::Unbounded
        }
        HighsModelStatus::ReachedTimeLimit
        | HighsModelStatus::ReachedIterationLimit
        | HighsModelStatus::ObjectiveBound
        | HighsModelStatus::ObjectiveTarget
        | HighsModelStatus::ReachedSolutionLimit
        | HighsModelStatus::ReachedInterrupt
        | HighsModelStatus::ReachedMemoryLimit => SolveStatus::LimitHit,
        other => return Err(OptError::Backend(format!("unexpected status {other:?}"))),
    };
    let has_primal = matches!(status, SolveStatus::Optimal | SolveStatus::LimitHit)
        && solved.primal_solution_status() == highs::HighsSolutionStatus::Feasible;

    let solution = solved.get_solution();
    let primal: Vec<f64> = if has_primal {
        solution.columns().to_vec()
    } else {
        Vec::new()
    };
    let objective = if has_primal {
        solved.objective_value() + model.objective_constant
    } else {
        f64::NAN
    };
    let (duals, mip_gap, best_bound) = if is_mip {
        let bound = solved
            .double_info_value(c"mip_dual_bound")
            .map(|b| b + model.objective_constant)
            .unwrap_or(f64::NEG_INFINITY);
        (None, Some(solved.mip_gap()), bound)
    } else {
        let duals = (status == SolveStatus::Optimal).then(|| solution.dual_rows().to_vec());
        (duals, None, objective)
    };
    Ok(SolveResult {
        status,
        objective,
        primal,
        duals,
        mip_gap,
        best_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> SolveOptions {
        SolveOptions::default()
    }

    #[test]
    fn single_lower_bound() {
        let mut m = Model::new();
        let x = m.continuous("x", f64::NEG_INFINITY, f64::INFINITY, 1.0);
        let c = m
            .add_constraint("x_min", LinExpr::from(x), Cmp::Ge, 3.0)
            .unwrap();
        let r = solve_mip(&m, &opts()).unwrap();
        assert!(r.is_optimal());
        assert!((r.objective - 3.0).abs() < 1e-9);
        // raising the rhs by one raises the objective by one
        assert!((r.dual(c).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn empty_model_is_optimal_at_zero() {
        let r = solve_mip(&Model::new(), &opts()).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert_eq!(r.objective, 0.0);
    }

    #[test]
    fn knapsack_matches_enumeration() {
        let weights = [4.0, 3.0, 2.0];
        let values = [10.0, 7.0, 4.5];
        let cap = 6.0;
        let mut m = Model::new();
        let xs: Vec<Var> = (0..3)
            .map(|i| m.binary(format!("x{i}"), -values[i]))
            .collect();
        let lhs = xs
            .iter()
            .zip(weights)
            .fold(LinExpr::new(), |e, (&x, w)| e + w * x);
        m.add_constraint("cap", lhs, Cmp::Le, cap).unwrap();
        let r = solve_mip(&m, &opts()).unwrap();

        let mut best = 0.0_f64;
        for mask in 0..8u32 {
            let (w, v) = (0..3)
                .filter(|i| mask >> i & 1 == 1)
                .fold((0.0, 0.0), |(w, v), i| (w + weights[i], v + values[i]));
            if w <= cap {
                best = best.max(v);
            }
        }
        assert!((r.objective + best).abs() < 1e-9);
        assert!(r.duals.is_none());
    }

    #[test]
    fn infeasible_is_a_status_not_a_panic() {
        let mut m = Model::new();
        let x = m.continuous("x", 0.0, 1.0, 1.0);
        m.add_constraint("big", LinExpr::from(x), Cmp::Ge, 2.0)
            .unwrap();
        let r = solve_mip(&m, &opts()).unwrap();
        assert_eq!(r.status, SolveStatus::Infeasible);
    }

    #[test]
    fn duplicate_names_rejected() {
        let mut m = Model::new();
        let x = m.continuous("x", 0.0, 1.0, 1.0);
        m.add_constraint("c", LinExpr::from(x), Cmp::Le, 1.0)
            .unwrap();
        let err = m.add_constraint("c", LinExpr::from(x), Cmp::Le, 1.0);
        assert!(matches!(err, Err(OptError::DuplicateConstraint(_))));
    }

    #[test]
    fn pricing_run_gives_marginal_segment_cost() {
        // two segments of 50 MW at 10 and 30 $/MWh, commitment cost 100, load 70
        let mut m = Model::new();
        let u = m.binary("u", 100.0);
        let s1 = m.continuous("s1", 0.0, 50.0, 10.0);
        let s2 = m.continuous("s2", 0.0, 50.0, 30.0);
        m.add_constraint("cap", s1 + s2 - 100.0 * u, Cmp::Le, 0.0)
            .unwrap();
        m.add_constraint("balance", s1 + s2, Cmp::Eq, 70.0).unwrap();
        let mip = solve_mip(&m, &opts()).unwrap();
        let lp = fix_integers_and_resolve(&m, &mip.primal, &opts()).unwrap();
        assert!((lp.objective - mip.objective).abs() < 1e-9);
        assert!((lp.dual_named(&m, "balance").unwrap() - 30.0).abs() < 1e-9);
    }

    #[test]
    fn fixing_to_worse_incumbent_bounds_from_above() {
        let mut m = Model::new();
        let a = m.binary("a", 5.0);
        let b = m.binary("b", 3.0);
        m.add_constraint("cover", a + b, Cmp::Ge, 1.0).unwrap();
        let mip = solve_mip(&m, &opts()).unwrap();
        let lp = fix_integers_and_resolve(&m, &[1.0, 1.0], &opts()).unwrap();
        assert!(lp.objective >= mip.objective - 1e-9);
        assert!((lp.objective - 8.0).abs() < 1e-9);
    }

    #[test]
    fn fixing_to_infeasible_incumbent_is_typed() {
        let mut m = Model::new();
        let a = m.binary("a", 5.0);
        m.add_constraint("need", LinExpr::from(a), Cmp::Ge, 1.0)
            .unwrap();
        let err = fix_integers_and_resolve(&m, &[0.0], &opts()).unwrap_err();
        assert!(matches!(err, OptError::InfeasibleAfterFixing));
    }

    #[test]
    fn lp_dump_written() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = Model::new();
        let x = m.continuous("x", 0.0, 10.0, 2.0);
        m.add_constraint("lo", LinExpr::from(x), Cmp::Ge, 1.0)
            .unwrap();
        let o = SolveOptions {
            dump_lp: Some(dir.path().to_path_buf()),
            label: "tiny".into(),
            ..SolveOptions::default()
        };
        solve_mip(&m, &o).unwrap();
        let text = std::fs::read_to_string(dir.path().join("tiny.lp")).unwrap();
        assert!(text.contains("Minimize"));
        assert!(text.contains("lo:"));
    }
}
