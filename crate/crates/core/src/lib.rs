//! Two-pass flexible ramping product procurement for day-ahead markets.
//!
//! A stochastic unit commitment sizes hourly ramping requirements and
//! selects units; a deterministic hourly clearing then issues energy and
//! ramping awards with prices; out-of-sample real-time runs and settlement
//! measure how each procurement rule performs.

pub mod damc;
pub mod frp;
pub mod harness;
pub mod opt;
pub mod rtm;
pub mod scenario;
pub mod settlement;
pub mod suc;
pub mod system;
mod uc;
pub mod verify;

pub use damc::{clear_dam, price_dam, DamBidSet, DamOutcome, DamPrices};
pub use frp::{percentile_requirements, suc_requirements, FrpRequirements, RequirementSource};
pub use harness::{Experiment, ExperimentConfig, Method};
pub use opt::{SolveOptions, SolveResult, SolveStatus};
pub use rtm::{clairvoyant, simulate_rtm, RtmOutcome};
pub use scenario::{HourlyForecast, NetLoadForecast, ScenarioSet, TimeGrid};
pub use settlement::{settle, Convention, SettlementReport};
pub use suc::{build_and_solve_suc, extract_committed_hours, SucSolution};
pub use system::{load_system, PowerSystem};
pub use uc::{DispatchValues, PassError, Schedule};
