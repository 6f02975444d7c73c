//! Tracking performance, dominance and two-sample t-tests.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::Condition;
use crate::path::DecisionType;
use crate::special::student_t_two_sided;

/// Root-mean-square distance between target and object series (mm).
pub fn rms(target: &[f64], object: &[f64]) -> Result<f64> {
    if target.len() != object.len() {
        return Err(Error::InvalidArgument(format!(
            "rms: series lengths differ ({} vs {})",
            target.len(),
            object.len()
        )));
    }
    if target.is_empty() {
        return Err(Error::EmptyInput("rms series"));
    }
    let ss: f64 = target
        .iter()
        .zip(object)
        .map(|(t, o)| (t - o) * (t - o))
        .sum();
    Ok((ss / target.len() as f64).sqrt())
}

/// `1 − rms / rms_max`.
pub fn performance(rms: f64, rms_max: f64) -> Result<f64> {
    if !(rms_max > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "rms_max must be > 0, got {rms_max}"
        )));
    }
    if !(rms >= 0.0) || rms > rms_max {
        return Err(Error::InvalidArgument(format!(
            "rms {rms} outside [0, rms_max = {rms_max}]"
        )));
    }
    Ok(1.0 - rms / rms_max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TTestKind {
    #[default]
    Pooled,
    Welch,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t: f64,
    pub df: f64,
    pub p: f64,
    pub n_a: usize,
    pub n_b: usize,
    pub mean_a: f64,
    pub mean_b: f64,
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let v = x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0);
    (m, v)
}

/// Two-sample t-test with a two-sided p-value.
pub fn t_test(a: &[f64], b: &[f64], kind: TTestKind) -> Result<TTest> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "t-test needs at least 2 samples per group (got {} and {})",
            a.len(),
            b.len()
        )));
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let (se, df) = match kind {
        TTestKind::Pooled => {
            let df = na + nb - 2.0;
            let sp2 = ((na - 1.0) * va + (nb - 1.0) * vb) / df;
            ((sp2 * (1.0 / na + 1.0 / nb)).sqrt(), df)
        }
        TTestKind::Welch => {
            let (qa, qb) = (va / na, vb / nb);
            let df = (qa + qb).powi(2) / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0));
            ((qa + qb).sqrt(), df)
        }
    };
    if !(se > 0.0) || !se.is_finite() {
        return Err(Error::UndefinedStatistic(
            "t-test variance is zero or non-finite".into(),
        ));
    }
    let t = (ma - mb) / se;
    Ok(TTest {
        t,
        df,
        p: student_t_two_sided(t, df),
        n_a: a.len(),
        n_b: b.len(),
        mean_a: ma,
        mean_b: mb,
    })
}

/// Which handle's agent led a choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeaderRole {
    Human,
    Robot,
    Subject1,
    Subject2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerformanceRecord {
    pub condition: Condition,
    pub decision_type: DecisionType,
    pub rms: f64,
    /// Filled by [`score`] against the batch maximum.
    pub performance: f64,
    pub leader: Option<LeaderRole>,
    /// `Some` only when one side is a human and the other the robot.
    pub human_led: Option<bool>,
    pub leader_start: Option<f64>,
    pub follower_start: Option<f64>,
}

impl PerformanceRecord {
    /// Leader and follower both moved and the leader moved first.
    pub fn resolved(&self) -> bool {
        match (self.leader_start, self.follower_start) {
            (Some(l), Some(f)) => l < f,
            _ => false,
        }
    }
}

/// Fills `performance` for every record using the batch's maximum RMS and
/// returns that maximum.
pub fn score(records: &mut [PerformanceRecord]) -> Result<f64> {
    let rms_max = records
        .iter()
        .map(|r| r.rms)
        .fold(f64::NEG_INFINITY, f64::max);
    if records.is_empty() {
        return Err(Error::EmptyInput("performance records"));
    }
    for r in records.iter_mut() {
        r.performance = performance(r.rms, rms_max)?;
    }
    Ok(rms_max)
}

/// Fraction of human/robot choices in which the human led.
pub fn dominance(records: &[PerformanceRecord]) -> Result<f64> {
    let led: Vec<bool> = records.iter().filter_map(|r| r.human_led).collect();
    if led.is_empty() {
        return Err(Error::EmptyInput("dominance records"));
    }
    Ok(led.iter().filter(|h| **h).count() as f64 / led.len() as f64)
}

pub fn mean_std(x: &[f64]) -> (f64, f64) {
    if x.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    if x.len() == 1 {
        return (x[0], 0.0);
    }
    let (m, v) = mean_var(x);
    (m, v.sqrt())
}
