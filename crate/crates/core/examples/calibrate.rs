//! Prints the qualitative statistics the default agents are tuned for:
//! dominance against the robot, predictor accuracies, first-crossing lead
//! time, and mean RMS per condition.
//!
//! Usage: cargo run --release -p dyad-core --example calibrate [trials]

use dyad_core::harness::rng::split;
use dyad_core::harness::{run_trial, Condition, TrialConfig};
use dyad_core::metrics::{dominance, mean_std, PerformanceRecord};
use dyad_core::path::{generate_script, ScriptConfig};
use dyad_core::predict::{evaluate_suite, extract_window, first_crossing, CrossingSource, SuiteOptions};
use dyad_core::TrialLog;

fn trials(c: Condition, n: usize, salt: u64) -> Vec<TrialLog> {
    let cfg = TrialConfig::default();
    (0..n as u64)
        .map(|i| {
            let script = generate_script(split(salt, &[i, 0]), &ScriptConfig::default()).unwrap();
            run_trial(c, &script, &cfg, split(salt, &[i, 1])).unwrap()
        })
        .collect()
}

fn main() {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(25);

    let hrp = trials(Condition::Hrp, n, 11);
    let recs: Vec<PerformanceRecord> = hrp
        .iter()
        .flat_map(|l| l.choices.iter())
        .map(|c| PerformanceRecord {
            condition: Condition::Hrp,
            decision_type: c.decision_type,
            rms: c.rms_mm,
            performance: 0.0,
            leader: c.leader,
            human_led: c.human_led,
            leader_start: c.leader_start_s,
            follower_start: c.follower_start_s,
        })
        .collect();
    let resolved = recs.iter().filter(|r| r.resolved()).count();
    println!("HRP dominance {:.3} over {} (resolved {})", dominance(&recs).unwrap(), recs.len(), resolved);

    let hfop = trials(Condition::Hfop, n.min(13), 22);
    let mut windows = Vec::new();
    let mut leads = Vec::new();
    let mut called = 0;
    for log in &hfop {
        for (spec, ann) in log.header.script.choices().zip(&log.choices) {
            let w = extract_window(log, spec, 0.0, 0.9).unwrap();
            let p = first_crossing(&w, 7.5, CrossingSource::Handles).unwrap();
            if p.call.side().is_some() {
                called += 1;
                leads.push(ann.motion_end_s.map(|e| e - p.decision_time));
            }
            windows.push(w);
        }
    }
    for r in evaluate_suite(&windows, &SuiteOptions::default()).unwrap() {
        println!(
            "{:>4} acc {:.3} t {:?} calls {:.2}",
            r.kind.name(),
            r.accuracy,
            r.mean_decision_time,
            r.call_rate
        );
    }
    let ok = leads.iter().filter(|l| l.is_some_and(|l| l >= 0.1)).count();
    let lv: Vec<f64> = leads.iter().flatten().copied().collect();
    println!(
        "1C lead >= 0.1 s in {}/{} called; mean lead {:.3}; undecided {}",
        ok,
        called,
        mean_std(&lv).0,
        windows.iter().filter(|w| w.truth.side().is_none()).count()
    );

    for c in [Condition::Alone, Condition::RobotAlone, Condition::Hfop, Condition::Hrp] {
        let logs = trials(c, n, 33 + c.code());
        let x: Vec<f64> = logs.iter().flat_map(|l| l.choices.iter().map(|a| a.rms_mm)).collect();
        let (m, s) = mean_std(&x);
        println!("{c:>12} rms {m:.3} +- {s:.3}");
    }
}
