use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use frp_core::frp::FrpRequirements;
use frp_core::harness::{
    aggregate, cells_csv, cost_matrix_csv, read_cells, read_manifest, run_experiment, summary_csv,
    CellResult, Experiment, ExperimentConfig,
};
use frp_core::rtm::stress_sweep;
use frp_core::scenario::{day_seed, draw_out_of_sample, gen_ar1_scenarios, read_forecast_csv};
use frp_core::{
    build_and_solve_suc, clear_dam, extract_committed_hours, load_system, percentile_requirements,
    settle, simulate_rtm, suc_requirements, Convention, DamBidSet, DamOutcome, HourlyForecast,
    PowerSystem, ScenarioSet, SolveOptions, SucSolution, TimeGrid,
};

#[derive(Parser)]
#[command(
    name = "frp-sim",
    version,
    about = "Flexible ramping product procurement simulator"
)]
struct Cli {
    #[command(flatten)]
    solver: SolverArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SolverArgs {
    /// Relative MIP gap [default: 1e-6]. Overrides the configuration of `run`.
    #[arg(long, global = true)]
    gap: Option<f64>,
    /// Time limit per solve, seconds. Overrides the configuration of `run`.
    #[arg(long, global = true)]
    time_limit: Option<f64>,
    /// Write each model in LP format into this directory before solving.
    #[arg(long, global = true)]
    dump_lp: Option<PathBuf>,
}

impl SolverArgs {
    fn options(&self) -> Result<SolveOptions> {
        if let Some(dir) = &self.dump_lp {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        Ok(SolveOptions {
            gap_tol: self.gap.unwrap_or(1e-6),
            time_limit: self.time_limit,
            dump_lp: self.dump_lp.clone(),
            ..SolveOptions::default()
        })
    }
}

#[derive(Args)]
struct DayArgs {
    #[arg(long)]
    system: PathBuf,
    /// Forecast CSV with columns day,hour,bus,net_load_mw.
    #[arg(long)]
    forecast: PathBuf,
    #[arg(long, default_value_t = 1)]
    day: u32,
    /// Sub-periods per hour of the real-time grid.
    #[arg(long, default_value_t = 4)]
    subperiods: usize,
}

impl DayArgs {
    fn load(&self) -> Result<(PowerSystem, HourlyForecast)> {
        let system = load_system(&self.system)?;
        let ids: Vec<String> = system.buses.iter().map(|b| b.id.clone()).collect();
        let mut days = read_forecast_csv(&self.forecast, &ids)?;
        let forecast = days
            .remove(&self.day)
            .with_context(|| format!("day {} not in {}", self.day, self.forecast.display()))?;
        Ok((system, forecast))
    }

    fn grid(&self, f: &HourlyForecast) -> Result<TimeGrid> {
        Ok(TimeGrid::new(f.hours(), self.subperiods)?)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Load a system file and report its contents.
    Validate { system: PathBuf },
    /// Draw in-sample AR(1) scenarios for one day.
    GenScenarios {
        #[command(flatten)]
        day: DayArgs,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        sigma: f64,
        #[arg(long, default_value_t = 0.0)]
        rho: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Solve the stochastic unit commitment over a scenario file.
    SucSolve {
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        scenarios: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Derive hourly FRP requirements, from a SUC solution or a percentile rule.
    FrpReq {
        #[arg(long)]
        suc: Option<PathBuf>,
        #[arg(long, requires = "suc")]
        scenarios: Option<PathBuf>,
        /// Percentile coverage, e.g. 0.95.
        #[arg(long, conflicts_with = "suc")]
        coverage: Option<f64>,
        #[arg(long, requires = "coverage")]
        system: Option<PathBuf>,
        #[arg(long, requires = "coverage")]
        forecast: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        day: u32,
        #[arg(long, default_value_t = 4)]
        subperiods: usize,
        #[arg(long, default_value_t = 0.03)]
        sigma: f64,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Clear the day-ahead market with FRP requirements.
    DamClear {
        #[command(flatten)]
        day: DayArgs,
        #[arg(long)]
        requirements: PathBuf,
        /// SUC solution whose commitments become a floor.
        #[arg(long)]
        fix_from: Option<PathBuf>,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Simulate real-time operation of a cleared day and settle it.
    RtmSim {
        #[command(flatten)]
        day: DayArgs,
        #[arg(long)]
        dam: PathBuf,
        #[arg(long)]
        sigma: f64,
        #[arg(long, default_value_t = 0.0)]
        rho: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = "two")]
        settlement: Convention,
        /// Also write the real-time outcome as JSON.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Re-run cleared days against realisations at several error levels.
    Sweep {
        #[command(flatten)]
        day: DayArgs,
        /// Cleared outcomes, as NAME=PATH.
        #[arg(long = "dam", required = true)]
        dams: Vec<String>,
        #[arg(long, value_delimiter = ',', required = true)]
        sigmas: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "1")]
        seeds: Vec<u64>,
        #[arg(long, default_value_t = 0.0)]
        rho: f64,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Run a configured experiment; exits with status 2 if any cell failed.
    Run {
        config: PathBuf,
        /// Directory holding per-cell results; reused to resume.
        #[arg(long)]
        ledger: PathBuf,
        /// Directory for summary CSVs.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the configured settlement convention.
        #[arg(long)]
        settlement: Option<Convention>,
    },
    /// Summarise a ledger directory into CSV files.
    Report {
        ledger: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn write_reports(out: &Path, cells: &[CellResult], days: usize) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let rows = aggregate(cells, days);
    for (name, text) in [
        ("summary.csv", summary_csv(&rows)),
        ("cells.csv", cells_csv(cells)),
        ("cost_by_rho.csv", cost_matrix_csv(&rows)),
    ] {
        let path = out.join(name);
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    for r in rows.iter().filter(|r| !r.complete) {
        log::warn!("{} covers {} of {days} days", r.method, r.days);
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    let opts = cli.solver.options()?;
    match cli.command {
        Command::Validate { system } => {
            let sys = load_system(&system)?;
            println!(
                "{}: {} buses, {} lines, {} generators",
                sys.name,
                sys.num_buses(),
                sys.lines.len(),
                sys.num_generators()
            );
        }
        Command::GenScenarios {
            day,
            n,
            sigma,
            rho,
            seed,
            out,
        } => {
            let (_, f) = day.load()?;
            let set = gen_ar1_scenarios(
                &f.expand(day.grid(&f)?),
                sigma,
                rho,
                n,
                day_seed(seed, day.day),
            )?;
            fs::write(&out, set.to_json()).with_context(|| format!("writing {}", out.display()))?;
        }
        Command::SucSolve {
            system,
            scenarios,
            out,
        } => {
            let sys = load_system(&system)?;
            let text = fs::read_to_string(&scenarios)?;
            let set = ScenarioSet::from_json(&text)?;
            let sol = build_and_solve_suc(&sys, &set, &opts)?;
            println!(
                "objective {:.2} (gap {:.2e})",
                sol.objective,
                sol.mip_gap.unwrap_or(0.0)
            );
            write_json(&out, &sol)?;
        }
        Command::FrpReq {
            suc,
            scenarios,
            coverage,
            system,
            forecast,
            day,
            subperiods,
            sigma,
            out,
        } => {
            let req = match (suc, coverage) {
                (Some(suc), None) => {
                    let sol: SucSolution = read_json(&suc)?;
                    let Some(scen) = scenarios else {
                        bail!("--scenarios is required with --suc")
                    };
                    let set = ScenarioSet::from_json(&fs::read_to_string(&scen)?)?;
                    suc_requirements(&sol, &set)?
                }
                (None, Some(q)) => {
                    let (Some(system), Some(forecast)) = (system, forecast) else {
                        bail!("--system and --forecast are required with --coverage")
                    };
                    let args = DayArgs {
                        system,
                        forecast,
                        day,
                        subperiods,
                    };
                    let (_, f) = args.load()?;
                    percentile_requirements(&f.expand(args.grid(&f)?), sigma, q)?
                }
                _ => bail!("give either --suc or --coverage"),
            };
            let file =
                fs::File::create(&out).with_context(|| format!("creating {}", out.display()))?;
            req.write_csv(file)?;
        }
        Command::DamClear {
            day,
            requirements,
            fix_from,
            out,
        } => {
            let (sys, f) = day.load()?;
            let req = FrpRequirements::read_csv(fs::File::open(&requirements)?)?;
            let fixed = match fix_from {
                Some(p) => Some(extract_committed_hours(&read_json::<SucSolution>(&p)?)),
                None => None,
            };
            let bids = DamBidSet {
                demand: f.values.clone(),
            };
            let dam = clear_dam(&sys, &bids, &req, fixed.as_deref(), &opts)?;
            println!("objective {:.2}", dam.objective);
            write_json(&out, &dam)?;
        }
        Command::RtmSim {
            day,
            dam,
            sigma,
            rho,
            seed,
            settlement,
            out,
        } => {
            let (sys, f) = day.load()?;
            let grid = day.grid(&f)?;
            let dam: DamOutcome = read_json(&dam)?;
            let realized =
                draw_out_of_sample(&f.expand(grid), sigma, rho, day_seed(seed, day.day))?;
            let rtm = simulate_rtm(&sys, &dam, &realized, grid, &opts)?;
            let report = settle(&sys, &dam, &rtm, settlement)?;
            println!("total_cost,{:.2}", report.total_operation_cost);
            println!("shed_mwh,{:.4}", report.shed_mwh);
            println!("energy_payment,{:.2}", report.energy_payment);
            println!("frp_payment,{:.2}", report.frp_payment);
            println!("make_whole_payment,{:.2}", report.make_whole_payment);
            if let Some(out) = out {
                write_json(&out, &rtm)?;
            }
        }
        Command::Sweep {
            day,
            dams,
            sigmas,
            seeds,
            rho,
            out,
        } => {
            let (sys, f) = day.load()?;
            let mut outcomes = Vec::new();
            for spec in &dams {
                let Some((name, path)) = spec.split_once('=') else {
                    bail!("--dam expects NAME=PATH, got `{spec}`")
                };
                outcomes.push((name.to_string(), read_json::<DamOutcome>(Path::new(path))?));
            }
            let points = stress_sweep(
                &sys,
                &outcomes,
                &f.expand(day.grid(&f)?),
                &sigmas,
                rho,
                &seeds,
                &opts,
            )?;
            let mut text = String::from("method,sigma,seed,total_cost,shed_mwh\n");
            for p in points {
                text.push_str(&format!(
                    "{},{:.4},{},{:.2},{:.4}\n",
                    p.method, p.sigma_frac, p.seed, p.total_cost, p.shed_mwh
                ));
            }
            fs::write(&out, text).with_context(|| format!("writing {}", out.display()))?;
        }
        Command::Run {
            config,
            ledger,
            out,
            settlement,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(c) = settlement {
                cfg.settlement = c;
            }
            if let Some(gap) = cli.solver.gap {
                cfg.solver.gap_tol = gap;
            }
            if let Some(limit) = cli.solver.time_limit {
                cfg.solver.time_limit_s = Some(limit);
            }
            let exp = Experiment::load(cfg)?;
            let result = run_experiment(&exp, Some(&ledger))?;
            log::info!(
                "{} cells, {} SUC solves",
                result.cells.len(),
                exp.suc_solves()
            );
            write_reports(
                out.as_deref().unwrap_or(&ledger),
                &result.cells,
                exp.days.len(),
            )?;
            if !result.failures.is_empty() {
                for f in &result.failures {
                    eprintln!("failed: {} ({})", f.key.file_name(), f.message);
                }
                return Ok(ExitCode::from(2));
            }
        }
        Command::Report { ledger, out } => {
            let manifest = read_manifest(&ledger)?;
            let cells = read_cells(&ledger, &manifest)?;
            let cfg = ExperimentConfig::parse(&manifest.config)?;
            let days = match &cfg.days {
                Some(d) => d.len(),
                None => {
                    let mut d: Vec<u32> = cells.iter().map(|c| c.key.day).collect();
                    d.sort_unstable();
                    d.dedup();
                    d.len()
                }
            };
            write_reports(&out, &cells, days)?;
            println!("{} cells over {} methods", cells.len(), cfg.methods.len());
            if !manifest.failures.is_empty() {
                return Ok(ExitCode::from(2));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
