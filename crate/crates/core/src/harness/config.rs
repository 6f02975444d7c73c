use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::TTestKind;
use crate::partner::PartnerConfig;
use crate::path::ScriptConfig;
use crate::predict::SuiteOptions;
use crate::sim::SimParams;
use crate::surrogate::SurrogateConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Condition {
    #[serde(rename = "HFOP")]
    Hfop,
    #[serde(rename = "HRP")]
    Hrp,
    #[serde(rename = "ALONE")]
    Alone,
    #[serde(rename = "ROBOT_ALONE")]
    RobotAlone,
}

impl Condition {
    pub const ALL: [Condition; 4] = [
        Condition::Hfop,
        Condition::Hrp,
        Condition::Alone,
        Condition::RobotAlone,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Condition::Hfop => "HFOP",
            Condition::Hrp => "HRP",
            Condition::Alone => "ALONE",
            Condition::RobotAlone => "ROBOT_ALONE",
        }
    }

    /// Stable label for seed derivation.
    pub fn code(self) -> u64 {
        match self {
            Condition::Hfop => 1,
            Condition::Hrp => 2,
            Condition::Alone => 3,
            Condition::RobotAlone => 4,
        }
    }

    /// Second handle copies the first.
    pub fn mirrored(self) -> bool {
        matches!(self, Condition::Alone | Condition::RobotAlone)
    }

    /// Simulations run per scheduled trial: one per human subject for
    /// HRP and ALONE, one per dyad otherwise.
    pub fn runs_per_trial(self) -> usize {
        match self {
            Condition::Hrp | Condition::Alone => 2,
            Condition::Hfop | Condition::RobotAlone => 1,
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Condition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Condition::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown condition {s:?} (expected HFOP, HRP, ALONE or ROBOT_ALONE)"
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ordering {
    /// HRP x2, ALONE x2, HFOP x2.
    A,
    /// HFOP x2, ALONE x2, HRP x2.
    B,
    /// Even pairs use `a`, odd pairs `b`.
    #[default]
    Alternate,
}

impl Ordering {
    pub fn for_pair(self, pair: usize) -> Ordering {
        match self {
            Ordering::Alternate if pair % 2 == 0 => Ordering::A,
            Ordering::Alternate => Ordering::B,
            o => o,
        }
    }

    pub fn conditions(self) -> [Condition; 6] {
        use Condition::*;
        match self {
            Ordering::A | Ordering::Alternate => [Hrp, Hrp, Alone, Alone, Hfop, Hfop],
            Ordering::B => [Hfop, Hfop, Alone, Alone, Hrp, Hrp],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    /// Keep every n-th frame when writing logs.
    pub decimate: usize,
    /// Write per-trial JSONL logs in addition to the report.
    pub write_logs: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: None,
            decimate: 1,
            write_logs: false,
        }
    }
}

/// The agent and physics parameters a single trial needs.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrialConfig {
    pub sim: SimParams,
    pub partner: PartnerConfig,
    pub surrogate: SurrogateConfig,
}

impl TrialConfig {
    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        self.partner.validate()?;
        self.surrogate.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub ordering: Ordering,
    /// Number of surrogate pairs, each running the six-trial session.
    pub pairs: usize,
    pub script: ScriptConfig,
    pub sim: SimParams,
    pub partner: PartnerConfig,
    pub surrogate: SurrogateConfig,
    pub output: OutputConfig,
    pub ttest: TTestKind,
    /// Extra robot-only trials appended to the batch.
    pub robot_alone_trials: usize,
    pub predict: SuiteOptions,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            ordering: Ordering::default(),
            pairs: 14,
            script: ScriptConfig::default(),
            sim: SimParams::default(),
            partner: PartnerConfig::default(),
            surrogate: SurrogateConfig::default(),
            output: OutputConfig::default(),
            ttest: TTestKind::default(),
            robot_alone_trials: 14,
            predict: SuiteOptions::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.pairs == 0 {
            return Err(Error::Config("pairs must be >= 1".into()));
        }
        if self.output.decimate == 0 {
            return Err(Error::Config("output.decimate must be >= 1".into()));
        }
        let p = &self.predict;
        if !(p.t_start >= 0.0 && p.t_stop > p.t_start && p.crossing_threshold > 0.0) {
            return Err(Error::Config(
                "predict: need 0 <= t_start_s < t_stop_s and crossing_threshold_mm > 0".into(),
            ));
        }
        self.script.validate()?;
        self.trial_config().validate()
    }

    pub fn trial_config(&self) -> TrialConfig {
        TrialConfig {
            sim: self.sim,
            partner: self.partner,
            surrogate: self.surrogate,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self =
            serde_json::from_str(text).map_err(|e| Error::json("experiment config", e))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: Self = serde_json::from_str(&text)
            .map_err(|e| Error::json(path.display().to_string(), e))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// One entry of a pair's six-trial session.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ScheduledTrial {
    pub pair: usize,
    pub condition: Condition,
    /// 0 for the first trial of a condition, 1 for the second.
    pub repetition: usize,
    /// Position in the pair's session, 0..6.
    pub position: usize,
    pub training: bool,
}

/// All scheduled trials: six per pair, then the robot-only trials.
pub fn schedule(cfg: &ExperimentConfig) -> Vec<ScheduledTrial> {
    let mut out = Vec::with_capacity(cfg.pairs * 6 + cfg.robot_alone_trials);
    for pair in 0..cfg.pairs {
        let order = cfg.ordering.for_pair(pair).conditions();
        for (position, condition) in order.iter().enumerate() {
            let repetition = order[..position].iter().filter(|c| *c == condition).count();
            out.push(ScheduledTrial {
                pair,
                condition: *condition,
                repetition,
                position,
                training: repetition == 0,
            });
        }
    }
    for pair in 0..cfg.robot_alone_trials {
        out.push(ScheduledTrial {
            pair,
            condition: Condition::RobotAlone,
            repetition: 0,
            position: 0,
            training: false,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orderings() {
        let mut cfg = ExperimentConfig {
            pairs: 2,
            robot_alone_trials: 0,
            ..Default::default()
        };
        let s = schedule(&cfg);
        assert_eq!(s.len(), 12);
        assert_eq!(s[0].condition, Condition::Hrp);
        assert_eq!(s[6].condition, Condition::Hfop);
        assert_eq!(s.iter().filter(|t| t.training).count(), 6);
        assert!(s[0].training && !s[1].training);

        cfg.ordering = Ordering::B;
        let b = schedule(&cfg);
        assert_eq!(b[0].condition, Condition::Hfop);
        assert_eq!(b[5].condition, Condition::Hrp);
        assert!(b[4].training);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(ExperimentConfig::from_json(r#"{"seed": 3}"#).is_ok());
        let err = ExperimentConfig::from_json(r#"{"seeds": 3}"#).unwrap_err();
        assert!(err.to_string().contains("seeds"), "{err}");
        let err = ExperimentConfig::from_json(r#"{"partner": {"force_threshold": 1}}"#).unwrap_err();
        assert!(err.to_string().contains("force_threshold"), "{err}");
    }

    #[test]
    fn condition_parse() {
        assert_eq!("robot_alone".parse::<Condition>().unwrap(), Condition::RobotAlone);
        assert!("SOLO".parse::<Condition>().is_err());
    }
}
