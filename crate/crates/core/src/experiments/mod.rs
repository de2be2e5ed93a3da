//! Scenario orchestration: the four transmission modes, Monte Carlo
//! trials, noise calibration and result bundles.

mod bundle;
mod config;
mod scenario;

pub use bundle::{write_bundle, write_sweep_csv, SweepRow};
pub use config::{IfMode, Mode, NumerologyConfig, ScenarioConfig, TrxpConfig};
pub use scenario::{
    calibrate_noise, run_paper_reproduction, run_scenario, ModeSummary, ScenarioResult, TrialRecord, THREADS_ENV,
};
