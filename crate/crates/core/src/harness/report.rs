//! Batch statistics over finished trials.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{dominance, mean_std, score, t_test, PerformanceRecord, TTestKind};
use crate::path::DecisionType;

use super::config::Condition;
use super::log::TrialSummary;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub condition: Condition,
    /// `None` pools all decision types.
    pub decision_type: Option<DecisionType>,
    pub n: usize,
    pub mean: Option<f64>,
    pub std: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestRow {
    pub family: String,
    pub a: String,
    pub b: String,
    pub n_a: usize,
    pub n_b: usize,
    pub t: Option<f64>,
    pub df: Option<f64>,
    pub p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartingTimes {
    pub n_resolved: usize,
    pub leader_mean_s: Option<f64>,
    pub leader_std_s: Option<f64>,
    pub follower_mean_s: Option<f64>,
    pub follower_std_s: Option<f64>,
    pub test: TestRow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub ttest: TTestKind,
    /// Normalizer for every performance value in this report.
    pub rms_max_mm: f64,
    pub trials: usize,
    pub choice_counts: Vec<(Condition, usize)>,
    pub performance: Vec<CellSummary>,
    pub condition_tests: Vec<TestRow>,
    pub decision_type_tests: Vec<TestRow>,
    pub dominance: Option<f64>,
    pub dominance_n: usize,
    pub starting_times: StartingTimes,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

fn test_row(family: &str, a: String, b: String, xa: &[f64], xb: &[f64], kind: TTestKind) -> TestRow {
    let r = t_test(xa, xb, kind).ok();
    TestRow {
        family: family.to_string(),
        a,
        b,
        n_a: xa.len(),
        n_b: xb.len(),
        t: r.map(|r| r.t),
        df: r.map(|r| r.df),
        p: r.map(|r| r.p),
    }
}

/// Performance records for every analysed choice, in canonical order.
pub fn records(summaries: &[TrialSummary]) -> Vec<PerformanceRecord> {
    let mut sorted: Vec<&TrialSummary> = summaries.iter().filter(|s| !s.header.training).collect();
    sorted.sort_by_key(|s| {
        (
            s.header.condition,
            s.header.pair,
            s.header.repetition,
            s.header.subject,
            s.header.seed,
        )
    });
    sorted
        .iter()
        .flat_map(|s| {
            s.choices.iter().map(|c| PerformanceRecord {
                condition: s.header.condition,
                decision_type: c.decision_type,
                rms: c.rms_mm,
                performance: 0.0,
                leader: c.leader,
                human_led: c.human_led,
                leader_start: c.leader_start_s,
                follower_start: c.follower_start_s,
            })
        })
        .collect()
}

pub fn build_report(summaries: &[TrialSummary], kind: TTestKind) -> Result<Report> {
    let mut recs = records(summaries);
    if recs.is_empty() {
        return Err(Error::EmptyInput("analysed choices (all trials are training?)"));
    }
    let rms_max = score(&mut recs)?;
    let trials = summaries.iter().filter(|s| !s.header.training).count();

    let perf = |c: Condition, d: Option<DecisionType>| -> Vec<f64> {
        recs.iter()
            .filter(|r| r.condition == c && d.is_none_or(|d| r.decision_type == d))
            .map(|r| r.performance)
            .collect()
    };
    let present: Vec<Condition> = Condition::ALL
        .into_iter()
        .filter(|c| recs.iter().any(|r| r.condition == *c))
        .collect();

    let mut cells = Vec::new();
    for &c in &present {
        for d in std::iter::once(None).chain(DecisionType::ALL.map(Some)) {
            let x = perf(c, d);
            let (m, s) = mean_std(&x);
            cells.push(CellSummary {
                condition: c,
                decision_type: d,
                n: x.len(),
                mean: finite(m),
                std: finite(s),
            });
        }
    }

    let mut condition_tests = Vec::new();
    for (i, &a) in present.iter().enumerate() {
        for &b in &present[i + 1..] {
            condition_tests.push(test_row("condition", a.name().into(), b.name().into(), &perf(a, None), &perf(b, None), kind));
        }
    }
    let mut decision_type_tests = Vec::new();
    for &c in &present {
        for (i, &a) in DecisionType::ALL.iter().enumerate() {
            for &b in &DecisionType::ALL[i + 1..] {
                decision_type_tests.push(test_row(
                    c.name(),
                    a.name().into(),
                    b.name().into(),
                    &perf(c, Some(a)),
                    &perf(c, Some(b)),
                    kind,
                ));
            }
        }
    }

    let dom_n = recs.iter().filter(|r| r.human_led.is_some()).count();
    let dom = dominance(&recs).ok();

    let resolved: Vec<&PerformanceRecord> = recs.iter().filter(|r| r.resolved()).collect();
    let leader: Vec<f64> = resolved.iter().filter_map(|r| r.leader_start).collect();
    let follower: Vec<f64> = resolved.iter().filter_map(|r| r.follower_start).collect();
    let (lm, ls) = mean_std(&leader);
    let (fm, fs) = mean_std(&follower);
    let starting_times = StartingTimes {
        n_resolved: resolved.len(),
        leader_mean_s: finite(lm),
        leader_std_s: finite(ls),
        follower_mean_s: finite(fm),
        follower_std_s: finite(fs),
        test: test_row("starting_time", "leader".into(), "follower".into(), &leader, &follower, kind),
    };

    Ok(Report {
        ttest: kind,
        rms_max_mm: rms_max,
        trials,
        choice_counts: present
            .iter()
            .map(|c| (*c, recs.iter().filter(|r| r.condition == *c).count()))
            .collect(),
        performance: cells,
        condition_tests,
        decision_type_tests,
        dominance: dom,
        dominance_n: dom_n,
        starting_times,
    })
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.6}")).unwrap_or_default()
}

impl Report {
    pub fn mean_performance(&self, c: Condition) -> Option<f64> {
        self.performance
            .iter()
            .find(|s| s.condition == c && s.decision_type.is_none())
            .and_then(|s| s.mean)
    }

    pub fn choice_count(&self, c: Condition) -> usize {
        self.choice_counts
            .iter()
            .find(|(k, _)| *k == c)
            .map_or(0, |(_, n)| *n)
    }

    pub fn performance_csv(&self) -> String {
        let mut out = String::from("condition,decision_type,n,mean_performance,std_performance\n");
        for s in &self.performance {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                s.condition,
                s.decision_type.map_or("ALL", |d| d.name()),
                s.n,
                opt(s.mean),
                opt(s.std)
            ));
        }
        out
    }

    pub fn tests_csv(&self) -> String {
        let mut out = String::from("family,a,b,n_a,n_b,t,df,p\n");
        let all = self
            .condition_tests
            .iter()
            .chain(&self.decision_type_tests)
            .chain(std::iter::once(&self.starting_times.test));
        for r in all {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.family,
                r.a,
                r.b,
                r.n_a,
                r.n_b,
                opt(r.t),
                opt(r.df),
                opt(r.p)
            ));
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::json("report", e))
    }

    /// Writes `report.json`, `performance.csv` and `tests.csv` into `dir`.
    pub fn write(&self, dir: &std::path::Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (name, text) in [
            ("report.json", self.to_json()?),
            ("performance.csv", self.performance_csv()),
            ("tests.csv", self.tests_csv()),
        ] {
            let p = dir.join(name);
            std::fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
        }
        Ok(())
    }
}
