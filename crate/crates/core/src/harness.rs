//! Multi-day experiments over FRP procurement methods.
//!
//! A run is a grid of cells `(day, method, n_scenarios, rho)`. The SUC-based
//! methods share one stochastic solve per `(day, n_scenarios, rho)`; the
//! percentile methods never see scenarios and run once per `(day, rho)`.
//! Cells run in parallel and can be persisted to a ledger directory, one
//! JSON file per cell plus a manifest, so that interrupted runs resume.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::damc::{clear_dam, DamBidSet, DamOutcome};
use crate::frp::{percentile_requirements, suc_requirements, FrpError, FrpRequirements};
use crate::opt::SolveOptions;
use crate::rtm::{clairvoyant, simulate_rtm, RtmOutcome};
use crate::scenario::{
    day_seed, draw_out_of_sample, gen_ar1_scenarios, read_forecast_csv, HourlyForecast,
    NetLoadForecast, ScenarioError, TimeGrid,
};
use crate::settlement::{
    settle, Convention, GeneratorSettlement, SettlementError, SettlementReport,
};
use crate::suc::{build_and_solve_suc, extract_committed_hours, SucSolution};
use crate::system::{load_system, PowerSystem, SystemError};
use crate::uc::PassError;
use crate::verify::{check_dam, check_rtm, check_suc};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Frp(#[from] FrpError),
    #[error(transparent)]
    Pass(#[from] PassError),
    #[error(transparent)]
    Settlement(#[from] SettlementError),
    #[error("ledger: {0}")]
    Ledger(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    /// SUC-derived requirements and SUC commitments as a floor.
    StFrp,
    /// SUC-derived requirements only.
    NfFrp,
    /// Requirements from a central interval of the forecast error, in percent.
    Percentile(u8),
}

impl Method {
    pub fn uses_suc(self) -> bool {
        matches!(self, Method::StFrp | Method::NfFrp)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::StFrp => f.write_str("st-FRP"),
            Method::NfFrp => f.write_str("nf-FRP"),
            Method::Percentile(q) => write!(f, "{q}-FRP"),
        }
    }
}

impl FromStr for Method {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "st-FRP" => Ok(Method::StFrp),
            "nf-FRP" => Ok(Method::NfFrp),
            _ => s
                .strip_suffix("-FRP")
                .and_then(|q| q.parse::<u8>().ok())
                .filter(|q| (1..100).contains(q))
                .map(Method::Percentile)
                .ok_or_else(|| HarnessError::Config(format!("unknown method `{s}`"))),
        }
    }
}

impl Serialize for Method {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Method {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_gap")]
    pub gap_tol: f64,
    #[serde(default)]
    pub time_limit_s: Option<f64>,
}

fn default_gap() -> f64 {
    1e-6
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            gap_tol: default_gap(),
            time_limit_s: None,
        }
    }
}

fn default_hours() -> usize {
    24
}

fn default_rho() -> Vec<f64> {
    vec![0.0]
}

fn default_true() -> bool {
    true
}

/// Experiment description. Relative paths resolve against the directory of
/// the config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: PathBuf,
    /// CSV with columns `day,hour,bus,net_load_mw`.
    pub forecast: PathBuf,
    #[serde(default = "default_hours")]
    pub hours: usize,
    pub subperiods_per_hour: usize,
    pub methods: Vec<Method>,
    pub n_scenarios: Vec<usize>,
    pub sigma_frac: f64,
    #[serde(default = "default_rho")]
    pub rho: Vec<f64>,
    pub seed: u64,
    #[serde(default)]
    pub days: Option<Vec<u32>>,
    #[serde(default)]
    pub settlement: Convention,
    #[serde(default)]
    pub solver: SolverConfig,
    /// Also solve the hindsight-optimal commitment for each realisation.
    #[serde(default = "default_true")]
    pub clairvoyant: bool,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.message().to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.system = base.join(&cfg.system);
        cfg.forecast = base.join(&cfg.forecast);
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("configs always serialise")
    }

    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            gap_tol: self.solver.gap_tol,
            time_limit: self.solver.time_limit_s,
            ..SolveOptions::default()
        }
    }

    fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.methods.is_empty() {
            return bad("at least one method is required".into());
        }
        if self.methods.iter().any(|m| m.uses_suc())
            && (self.n_scenarios.is_empty() || self.n_scenarios.contains(&0))
        {
            return bad("SUC-based methods need positive n_scenarios".into());
        }
        if self.rho.is_empty() {
            return bad("rho list is empty".into());
        }
        if self.subperiods_per_hour == 0 || self.hours == 0 {
            return bad("hours and subperiods_per_hour must be positive".into());
        }
        for p in [&self.system, &self.forecast] {
            if !p.exists() {
                return bad(format!("{} does not exist", p.display()));
            }
        }
        Ok(())
    }
}

/// A loaded experiment: system, per-day forecasts and instrumentation.
pub struct Experiment {
    pub config: ExperimentConfig,
    pub system: PowerSystem,
    pub days: BTreeMap<u32, HourlyForecast>,
    pub grid: TimeGrid,
    suc_solves: AtomicUsize,
}

impl Experiment {
    pub fn new(
        config: ExperimentConfig,
        system: PowerSystem,
        days: BTreeMap<u32, HourlyForecast>,
    ) -> Result<Self, HarnessError> {
        let grid = TimeGrid::new(config.hours, config.subperiods_per_hour)?;
        for (day, f) in &days {
            if f.hours() != config.hours || f.num_buses() != system.num_buses() {
                return Err(HarnessError::Config(format!(
                    "day {day}: forecast has {} buses x {} hours",
                    f.num_buses(),
                    f.hours()
                )));
            }
        }
        Ok(Self {
            config,
            system,
            days,
            grid,
            suc_solves: AtomicUsize::new(0),
        })
    }

    pub fn load(config: ExperimentConfig) -> Result<Self, HarnessError> {
        config.validate()?;
        let system = load_system(&config.system)?;
        let bus_ids: Vec<String> = system.buses.iter().map(|b| b.id.clone()).collect();
        let mut days = read_forecast_csv(&config.forecast, &bus_ids)?;
        if let Some(keep) = &config.days {
            for d in keep {
                if !days.contains_key(d) {
                    return Err(HarnessError::Config(format!("day {d} not in forecast")));
                }
            }
            days.retain(|d, _| keep.contains(d));
        }
        Self::new(config, system, days)
    }

    /// Number of stochastic unit commitments solved so far.
    pub fn suc_solves(&self) -> usize {
        self.suc_solves.load(Ordering::Relaxed)
    }

    fn expanded(&self, day: u32) -> Result<NetLoadForecast, HarnessError> {
        let f = self
            .days
            .get(&day)
            .ok_or_else(|| HarnessError::Config(format!("unknown day {day}")))?;
        Ok(f.expand(self.grid))
    }

    fn bids(&self, day: u32) -> DamBidSet {
        DamBidSet {
            demand: self.days[&day].values.clone(),
        }
    }

    pub fn realization(&self, day: u32, rho: f64) -> Result<Vec<Vec<f64>>, HarnessError> {
        let f = self.expanded(day)?;
        Ok(draw_out_of_sample(
            &f,
            self.config.sigma_frac,
            rho,
            day_seed(self.config.seed, day),
        )?)
    }

    /// Solves the SUC for a day and counts the solve.
    pub fn solve_suc(
        &self,
        day: u32,
        n_scenarios: usize,
        rho: f64,
    ) -> Result<SucRun, HarnessError> {
        let f = self.expanded(day)?;
        let set = gen_ar1_scenarios(
            &f,
            self.config.sigma_frac,
            rho,
            n_scenarios,
            day_seed(self.config.seed, day),
        )?;
        let opts = self
            .config
            .solve_options()
            .labelled(format!("suc-d{day}-n{n_scenarios}"));
        let start = Instant::now();
        let solution = build_and_solve_suc(&self.system, &set, &opts)?;
        let wall_s = start.elapsed().as_secs_f64();
        self.suc_solves.fetch_add(1, Ordering::Relaxed);
        let requirements = suc_requirements(&solution, &set)?;
        let residual = check_suc(&self.system, &solution, &set).max();
        Ok(SucRun {
            committed: extract_committed_hours(&solution),
            requirements,
            solution,
            wall_s,
            peak_kib: peak_memory_kib(),
            residual,
        })
    }

    /// Runs one method end to end, solving the SUC itself if needed.
    pub fn run_method(
        &self,
        day: u32,
        method: Method,
        n_scenarios: usize,
        rho: f64,
    ) -> Result<MethodRun, HarnessError> {
        let suc = if method.uses_suc() {
            Some(self.solve_suc(day, n_scenarios, rho)?)
        } else {
            None
        };
        let realized = self.realization(day, rho)?;
        self.run_with(day, method, suc.as_ref(), &realized)
    }

    fn run_with(
        &self,
        day: u32,
        method: Method,
        suc: Option<&SucRun>,
        realized: &[Vec<f64>],
    ) -> Result<MethodRun, HarnessError> {
        let opts = self
            .config
            .solve_options()
            .labelled(format!("dam-d{day}-{method}"));
        let (requirements, fixed) = match (method, suc) {
            (Method::StFrp, Some(s)) => (s.requirements.clone(), Some(s.committed.clone())),
            (Method::NfFrp, Some(s)) => (s.requirements.clone(), None),
            (Method::Percentile(q), _) => {
                let f = self.expanded(day)?;
                let req =
                    percentile_requirements(&f, self.config.sigma_frac, f64::from(q) / 100.0)?;
                (req, None)
            }
            _ => {
                return Err(HarnessError::Config(format!(
                    "{method} needs a SUC solution"
                )))
            }
        };
        let dam = clear_dam(
            &self.system,
            &self.bids(day),
            &requirements,
            fixed.as_deref(),
            &opts,
        )?;
        let rtm = simulate_rtm(
            &self.system,
            &dam,
            realized,
            self.grid,
            &self
                .config
                .solve_options()
                .labelled(format!("rtm-d{day}-{method}")),
        )?;
        let settlement = settle(&self.system, &dam, &rtm, self.config.settlement)?;
        let residual = check_dam(&self.system, &dam, fixed.as_deref())
            .merge(check_rtm(&self.system, &dam, &rtm, realized))
            .max();
        Ok(MethodRun {
            requirements,
            fixed_commitments: fixed,
            dam,
            rtm,
            settlement,
            residual,
        })
    }
}

fn peak_memory_kib() -> Option<u64> {
    let status = fs::read_to_string("/proc/self/status").ok()?;
    status
        .lines()
        .find_map(|l| l.strip_prefix("VmHWM:"))
        .and_then(|rest| rest.split_whitespace().next())
        .and_then(|v| v.parse().ok())
}

/// Output of one stochastic solve shared by the SUC-based methods.
pub struct SucRun {
    pub solution: SucSolution,
    pub requirements: FrpRequirements,
    pub committed: Vec<Vec<bool>>,
    pub wall_s: f64,
    /// Process peak resident set after the solve.
    pub peak_kib: Option<u64>,
    pub residual: f64,
}

pub struct MethodRun {
    pub requirements: FrpRequirements,
    pub fixed_commitments: Option<Vec<Vec<bool>>>,
    pub dam: DamOutcome,
    pub rtm: RtmOutcome,
    pub settlement: SettlementReport,
    /// Largest feasibility residual over the clearing and real-time runs.
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellKey {
    pub day: u32,
    pub method: Method,
    /// `None` for methods that do not use scenarios.
    pub n_scenarios: Option<usize>,
    /// Autocorrelation in hundredths, kept integral so keys hash exactly.
    pub rho_pct: u32,
}

impl CellKey {
    pub fn rho(&self) -> f64 {
        f64::from(self.rho_pct) / 100.0
    }

    pub fn file_name(&self) -> String {
        let n = self.n_scenarios.map_or("na".to_string(), |n| n.to_string());
        format!(
            "d{}_{}_n{}_r{:02}.json",
            self.day, self.method, n, self.rho_pct
        )
    }
}

fn rho_pct(rho: f64) -> u32 {
    (rho * 100.0).round() as u32
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub key: CellKey,
    pub total_cost: f64,
    pub shed_mwh: f64,
    pub energy_payment: f64,
    pub frp_payment: f64,
    pub make_whole_payment: f64,
    pub frp_shortfall_cost: f64,
    pub dam_objective: f64,
    pub frp_requirement_up_mw: f64,
    pub frp_requirement_down_mw: f64,
    pub clairvoyant_bound: Option<f64>,
    pub residual: f64,
    pub suc_wall_s: Option<f64>,
    pub suc_peak_kib: Option<u64>,
    /// Hourly commitments of the clearing, `[g][h]`.
    pub commitments: Vec<Vec<bool>>,
    pub generators: Vec<GeneratorSettlement>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub key: CellKey,
    pub message: String,
}

#[derive(Debug, Default, Serialize, Deserialize)]
pub struct Manifest {
    pub config: String,
    pub cells: Vec<String>,
    pub failures: Vec<CellFailure>,
}

pub struct RunOutput {
    pub cells: Vec<CellResult>,
    pub failures: Vec<CellFailure>,
}

struct DayContext {
    day: u32,
    rho: f64,
    realized: Vec<Vec<f64>>,
    clairvoyant: Option<f64>,
}

enum Group {
    Suc { day: u32, rho: f64, n: usize },
    Rule { day: u32, rho: f64 },
}

/// Runs every cell of the experiment. With a ledger directory, finished
/// cells found there are reused and new ones are written as they complete.
pub fn run_experiment(exp: &Experiment, ledger: Option<&Path>) -> Result<RunOutput, HarnessError> {
    let cfg = &exp.config;
    let mut done: HashMap<CellKey, CellResult> = HashMap::new();
    if let Some(dir) = ledger {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let manifest_path = dir.join("manifest.json");
        if manifest_path.exists() {
            let manifest = read_manifest(dir)?;
            if manifest.config != cfg.to_toml() {
                return Err(HarnessError::Ledger(format!(
                    "{} was written by a different configuration",
                    dir.display()
                )));
            }
            for cell in read_cells(dir, &manifest)? {
                done.insert(cell.key.clone(), cell);
            }
        }
    }

    let suc_methods: Vec<Method> = cfg
        .methods
        .iter()
        .copied()
        .filter(|m| m.uses_suc())
        .collect();
    let rule_methods: Vec<Method> = cfg
        .methods
        .iter()
        .copied()
        .filter(|m| !m.uses_suc())
        .collect();
    let mut groups = Vec::new();
    for &day in exp.days.keys() {
        for &rho in &cfg.rho {
            if !suc_methods.is_empty() {
                for &n in &cfg.n_scenarios {
                    groups.push(Group::Suc { day, rho, n });
                }
            }
            if !rule_methods.is_empty() {
                groups.push(Group::Rule { day, rho });
            }
        }
    }
    let keys_of = |g: &Group| -> Vec<CellKey> {
        match *g {
            Group::Suc { day, rho, n } => suc_methods
                .iter()
                .map(|&method| CellKey {
                    day,
                    method,
                    n_scenarios: Some(n),
                    rho_pct: rho_pct(rho),
                })
                .collect(),
            Group::Rule { day, rho } => rule_methods
                .iter()
                .map(|&method| CellKey {
                    day,
                    method,
                    n_scenarios: None,
                    rho_pct: rho_pct(rho),
                })
                .collect(),
        }
    };
    let pending: Vec<&Group> = groups
        .iter()
        .filter(|g| keys_of(g).iter().any(|k| !done.contains_key(k)))
        .collect();

    // realisations and hindsight bounds, one per (day, rho)
    let mut needed: Vec<(u32, u32)> = pending
        .iter()
        .map(|g| match **g {
            Group::Suc { day, rho, .. } | Group::Rule { day, rho } => (day, rho_pct(rho)),
        })
        .collect();
    needed.sort_unstable();
    needed.dedup();
    let contexts: Vec<Result<DayContext, CellFailure>> = needed
        .par_iter()
        .map(|&(day, rp)| {
            let rho = f64::from(rp) / 100.0;
            let fail = |e: HarnessError| CellFailure {
                key: CellKey {
                    day,
                    method: Method::StFrp,
                    n_scenarios: None,
                    rho_pct: rp,
                },
                message: format!("realisation: {e}"),
            };
            let realized = exp.realization(day, rho).map_err(fail)?;
            let clairvoyant = if cfg.clairvoyant {
                let opts = cfg.solve_options().labelled(format!("clairvoyant-d{day}"));
                Some(
                    clairvoyant(&exp.system, &realized, exp.grid, &opts)
                        .map_err(|e| fail(e.into()))?
                        .best_bound,
                )
            } else {
                None
            };
            Ok(DayContext {
                day,
                rho,
                realized,
                clairvoyant,
            })
        })
        .collect();
    let mut ctx_map = HashMap::new();
    let mut failures = Vec::new();
    for c in contexts {
        match c {
            Ok(c) => {
                ctx_map.insert((c.day, rho_pct(c.rho)), c);
            }
            Err(f) => failures.push(f),
        }
    }

    let results: Vec<Vec<Result<CellResult, CellFailure>>> = pending
        .par_iter()
        .map(|g| {
            let keys: Vec<CellKey> = keys_of(g)
                .into_iter()
                .filter(|k| !done.contains_key(k))
                .collect();
            let (day, rho) = match **g {
                Group::Suc { day, rho, .. } | Group::Rule { day, rho } => (day, rho),
            };
            let Some(ctx) = ctx_map.get(&(day, rho_pct(rho))) else {
                return keys
                    .into_iter()
                    .map(|key| {
                        Err(CellFailure {
                            key,
                            message: "no realisation".into(),
                        })
                    })
                    .collect();
            };
            let suc = match **g {
                Group::Suc { n, .. } => match exp.solve_suc(day, n, rho) {
                    Ok(s) => Some(s),
                    Err(e) => {
                        return keys
                            .into_iter()
                            .map(|key| {
                                Err(CellFailure {
                                    key,
                                    message: format!("SUC: {e}"),
                                })
                            })
                            .collect()
                    }
                },
                Group::Rule { .. } => None,
            };
            keys.into_iter()
                .map(|key| {
                    let run = exp
                        .run_with(day, key.method, suc.as_ref(), &ctx.realized)
                        .map_err(|e| CellFailure {
                            key: key.clone(),
                            message: e.to_string(),
                        })?;
                    let cell = cell_result(key, &run, suc.as_ref(), ctx.clairvoyant);
                    if let Some(dir) = ledger {
                        write_cell(dir, &cell).map_err(|e| CellFailure {
                            key: cell.key.clone(),
                            message: e.to_string(),
                        })?;
                    }
                    Ok(cell)
                })
                .collect()
        })
        .collect();

    let mut cells: Vec<CellResult> = done.into_values().collect();
    for r in results.into_iter().flatten() {
        match r {
            Ok(c) => cells.push(c),
            Err(f) => {
                log::error!("cell {} failed: {}", f.key.file_name(), f.message);
                failures.push(f);
            }
        }
    }
    cells.sort_by(|a, b| a.key.cmp(&b.key));
    if let Some(dir) = ledger {
        let manifest = Manifest {
            config: cfg.to_toml(),
            cells: cells.iter().map(|c| c.key.file_name()).collect(),
            failures: failures.clone(),
        };
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serialises");
        fs::write(&path, text).map_err(io_err(&path))?;
    }
    Ok(RunOutput { cells, failures })
}

fn cell_result(
    key: CellKey,
    run: &MethodRun,
    suc: Option<&SucRun>,
    bound: Option<f64>,
) -> CellResult {
    let s = &run.settlement;
    CellResult {
        total_cost: s.total_operation_cost,
        shed_mwh: s.shed_mwh,
        energy_payment: s.energy_payment,
        frp_payment: s.frp_payment,
        make_whole_payment: s.make_whole_payment,
        frp_shortfall_cost: s.frp_shortfall_cost,
        dam_objective: run.dam.objective,
        frp_requirement_up_mw: run.requirements.up.iter().sum(),
        frp_requirement_down_mw: run.requirements.down.iter().sum(),
        clairvoyant_bound: bound,
        residual: suc.map_or(run.residual, |s| s.residual.max(run.residual)),
        suc_wall_s: suc.map(|s| s.wall_s),
        suc_peak_kib: suc.and_then(|s| s.peak_kib),
        commitments: run.dam.schedule.u.clone(),
        generators: s.generators.clone(),
        key,
    }
}

fn write_cell(dir: &Path, cell: &CellResult) -> Result<(), HarnessError> {
    let path = dir.join(cell.key.file_name());
    let tmp = path.with_extension("json.tmp");
    let text = serde_json::to_string_pretty(cell).expect("cells serialise");
    fs::write(&tmp, text).map_err(io_err(&tmp))?;
    fs::rename(&tmp, &path).map_err(io_err(&path))
}

pub fn read_manifest(dir: &Path) -> Result<Manifest, HarnessError> {
    let path = dir.join("manifest.json");
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    serde_json::from_str(&text)
        .map_err(|e| HarnessError::Ledger(format!("{}: {e}", path.display())))
}

pub fn read_cells(dir: &Path, manifest: &Manifest) -> Result<Vec<CellResult>, HarnessError> {
    manifest
        .cells
        .iter()
        .map(|name| {
            let path = dir.join(name);
            let text = fs::read_to_string(&path).map_err(io_err(&path))?;
            serde_json::from_str(&text)
                .map_err(|e| HarnessError::Ledger(format!("{}: {e}", path.display())))
        })
        .collect()
}

/// Totals of one `(method, n_scenarios, rho)` series over the days.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub method: Method,
    pub n_scenarios: Option<usize>,
    pub rho: f64,
    pub days: usize,
    /// False when some days of the series are missing.
    pub complete: bool,
    pub total_cost: f64,
    pub shed_mwh: f64,
    pub frp_payment: f64,
    pub make_whole_payment: f64,
    pub energy_payment: f64,
}

pub fn aggregate(cells: &[CellResult], expected_days: usize) -> Vec<SummaryRow> {
    let mut series: BTreeMap<(Method, Option<usize>, u32), Vec<&CellResult>> = BTreeMap::new();
    for c in cells {
        series
            .entry((c.key.method, c.key.n_scenarios, c.key.rho_pct))
            .or_default()
            .push(c);
    }
    series
        .into_iter()
        .map(|((method, n_scenarios, rp), cs)| {
            let sum = |f: fn(&CellResult) -> f64| cs.iter().map(|c| f(c)).sum::<f64>();
            SummaryRow {
                method,
                n_scenarios,
                rho: f64::from(rp) / 100.0,
                days: cs.len(),
                complete: cs.len() == expected_days,
                total_cost: sum(|c| c.total_cost),
                shed_mwh: sum(|c| c.shed_mwh),
                frp_payment: sum(|c| c.frp_payment),
                make_whole_payment: sum(|c| c.make_whole_payment),
                energy_payment: sum(|c| c.energy_payment),
            }
        })
        .collect()
}

fn n_label(n: Option<usize>) -> String {
    n.map_or(String::new(), |n| n.to_string())
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from(
        "method,n_scenarios,rho,days,complete,total_cost,shed_mwh,frp_payment,make_whole_payment,energy_payment\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{},{},{:.2},{},{},{:.2},{:.4},{:.2},{:.2},{:.2}\n",
            r.method,
            n_label(r.n_scenarios),
            r.rho,
            r.days,
            r.complete,
            r.total_cost,
            r.shed_mwh,
            r.frp_payment,
            r.make_whole_payment,
            r.energy_payment
        ));
    }
    out
}

/// One row per cell, suitable for plotting.
pub fn cells_csv(cells: &[CellResult]) -> String {
    let mut out = String::from(
        "day,method,n_scenarios,rho,total_cost,shed_mwh,frp_payment,make_whole_payment,energy_payment,clairvoyant_bound\n",
    );
    for c in cells {
        out.push_str(&format!(
            "{},{},{},{:.2},{:.2},{:.4},{:.2},{:.2},{:.2},{}\n",
            c.key.day,
            c.key.method,
            n_label(c.key.n_scenarios),
            c.key.rho(),
            c.total_cost,
            c.shed_mwh,
            c.frp_payment,
            c.make_whole_payment,
            c.energy_payment,
            c.clairvoyant_bound
                .map_or(String::new(), |b| format!("{b:.2}"))
        ));
    }
    out
}

/// Total cost by series (rows) and rho (columns).
pub fn cost_matrix_csv(rows: &[SummaryRow]) -> String {
    let mut rhos: Vec<u32> = rows.iter().map(|r| rho_pct(r.rho)).collect();
    rhos.sort_unstable();
    rhos.dedup();
    let mut table: BTreeMap<(Method, Option<usize>), BTreeMap<u32, f64>> = BTreeMap::new();
    for r in rows {
        table
            .entry((r.method, r.n_scenarios))
            .or_default()
            .insert(rho_pct(r.rho), r.total_cost);
    }
    let mut out = String::from("series");
    for rp in &rhos {
        out.push_str(&format!(",rho={:.1}", f64::from(*rp) / 100.0));
    }
    out.push('\n');
    for ((method, n), by_rho) in table {
        match n {
            Some(n) => out.push_str(&format!("{method} ({n})")),
            None => out.push_str(&method.to_string()),
        }
        for rp in &rhos {
            match by_rho.get(rp) {
                Some(v) => out.push_str(&format!(",{v:.2}")),
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    out
}

/// Compares CSV text exactly, falling back to a field-wise comparison in
/// which numeric fields may differ by `rel_tol` relative.
pub fn compare_csv(actual: &str, expected: &str, rel_tol: f64) -> Result<(), String> {
    if actual == expected {
        return Ok(());
    }
    let a: Vec<&str> = actual.lines().collect();
    let e: Vec<&str> = expected.lines().collect();
    if a.len() != e.len() {
        return Err(format!("{} lines, expected {}", a.len(), e.len()));
    }
    for (i, (la, le)) in a.iter().zip(&e).enumerate() {
        let fa: Vec<&str> = la.split(',').collect();
        let fe: Vec<&str> = le.split(',').collect();
        if fa.len() != fe.len() {
            return Err(format!("line {}: field count differs", i + 1));
        }
        for (x, y) in fa.iter().zip(&fe) {
            if x == y {
                continue;
            }
            match (x.parse::<f64>(), y.parse::<f64>()) {
                (Ok(p), Ok(q)) if (p - q).abs() <= rel_tol * p.abs().max(q.abs()).max(1.0) => {}
                _ => return Err(format!("line {}: `{x}` vs expected `{y}`", i + 1)),
            }
        }
    }
    Ok(())
}
