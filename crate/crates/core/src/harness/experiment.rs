//! Full sessions: every pair's six trials plus the robot-only batch.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::path::{generate_script, PathScript, ScriptConfig, Subject};

use super::config::{schedule, Condition, ExperimentConfig, ScheduledTrial, TrialConfig};
use super::log::{TrialLog, TrialSummary};
use super::report::{build_report, Report};
use super::rng::{split, SCRIPT_LABEL};
use super::trial::{run_trial, run_trial_as, TrialMeta};

/// Seed of one scheduled trial; depends on what the trial is, not when it runs.
pub fn trial_seed(master: u64, t: &ScheduledTrial) -> u64 {
    split(master, &[t.pair as u64, t.condition.code(), t.repetition as u64])
}

pub fn script_for(cfg: &ExperimentConfig, t: &ScheduledTrial) -> Result<PathScript> {
    generate_script(split(trial_seed(cfg.seed, t), &[SCRIPT_LABEL]), &cfg.script)
}

/// Runs every simulation of one scheduled trial: one per human subject in
/// HRP and ALONE, one otherwise. All share the trial's path.
pub fn run_scheduled(cfg: &ExperimentConfig, t: &ScheduledTrial) -> Result<Vec<TrialLog>> {
    let script = script_for(cfg, t)?;
    let base = trial_seed(cfg.seed, t);
    let meta = TrialMeta {
        pair: Some(t.pair),
        repetition: Some(t.repetition),
        training: t.training,
    };
    let subjects: &[Subject] = match t.condition.runs_per_trial() {
        2 => &[Subject::One, Subject::Two],
        _ => &[Subject::One],
    };
    subjects
        .iter()
        .map(|&s| {
            let seed = split(base, &[s as u64 + 1]);
            run_trial_as(t.condition, s, &script, &cfg.trial_config(), seed, meta)
        })
        .collect()
}

pub fn log_file_name(t: &ScheduledTrial, subject: Subject) -> String {
    format!(
        "pair{:02}_{}_{}_s{}.jsonl",
        t.pair,
        t.condition.name().to_lowercase(),
        t.repetition,
        subject as u8 + 1
    )
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub report: Report,
    pub summaries: Vec<TrialSummary>,
}

/// Runs the whole schedule in parallel, builds the report and writes the
/// configured outputs.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let trials = schedule(cfg);
    let write_dir = cfg.output.dir.as_ref().filter(|_| cfg.output.write_logs);
    if let Some(dir) = write_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let nested: Vec<Vec<TrialSummary>> = trials
        .par_iter()
        .map(|t| {
            let logs = run_scheduled(cfg, t)?;
            let mut out = Vec::with_capacity(logs.len());
            for log in logs {
                if let Some(dir) = write_dir {
                    log.write(&dir.join(log_file_name(t, log.header.subject)), cfg.output.decimate)?;
                }
                out.push(log.summary());
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut summaries: Vec<TrialSummary> = nested.into_iter().flatten().collect();
    summaries.sort_by_key(|s| {
        (
            s.header.condition,
            s.header.pair,
            s.header.repetition,
            s.header.subject,
        )
    });
    let report = build_report(&summaries, cfg.ttest)?;
    if let Some(dir) = &cfg.output.dir {
        report.write(dir)?;
    }
    Ok(ExperimentOutput { report, summaries })
}

/// Analysed choices the schedule should produce per condition.
pub fn expected_choice_count(cfg: &ExperimentConfig, c: Condition) -> usize {
    schedule(cfg)
        .iter()
        .filter(|t| t.condition == c && !t.training)
        .count()
        * c.runs_per_trial()
        * cfg.script.choices_per_trial
}

/// Runs `n` independent trials of one condition in parallel and maps each
/// finished log through `f`. Trial `i` uses the same path for every
/// condition, so batches of different conditions are paired.
pub fn batch<T, F>(
    condition: Condition,
    n: usize,
    seed: u64,
    script_cfg: &ScriptConfig,
    cfgs: &TrialConfig,
    f: F,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(TrialLog) -> Result<T> + Sync,
{
    (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let script = generate_script(split(seed, &[i, SCRIPT_LABEL]), script_cfg)?;
            let log = run_trial(condition, &script, cfgs, split(seed, &[i, condition.code()]))?;
            f(log)
        })
        .collect()
}
