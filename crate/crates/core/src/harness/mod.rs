//! Trials, experiment schedules, logs and reports.

pub mod config;
pub mod experiment;
pub mod log;
pub mod report;
pub mod rng;
pub mod trial;

pub use config::{
    schedule, Condition, ExperimentConfig, Ordering, OutputConfig, ScheduledTrial, TrialConfig,
};
pub use experiment::{
    batch, expected_choice_count, run_experiment, run_scheduled, script_for, trial_seed,
    ExperimentOutput,
};
pub use log::{ChoiceAnnotation, LogHeader, TrialLog, TrialSummary};
pub use report::{build_report, Report};
pub use trial::{run_trial, run_trial_as, Simulation, TrialMeta};
