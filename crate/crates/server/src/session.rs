//! The per-session real-time loop. It alone owns the simulation; clients
//! reach it through an ordered ingress queue and receive pre-encoded
//! snapshots through bounded per-client queues.

use std::collections::VecDeque;
use std::path::{Path, PathBuf};
use std::sync::mpsc::{Receiver, RecvTimeoutError, TryRecvError};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use dyad_core::harness::rng::stream;
use dyad_core::harness::trial::{finish_log, run_simulation, BoxedAgent, SCORING_ZONE_S};
use dyad_core::harness::{Condition, TrialConfig, TrialMeta};
use dyad_core::path::OUTCOME_WINDOW_S;
use dyad_core::pointer::{InputQueue, PointerAgent, PointerInput};
use dyad_core::{
    performance, rms, Direction, Error, Frame, PathScript, Phase, RobotPartner, Result, Side,
    Subject, Target, TrialLog,
};
use dyad_core::harness::Simulation;
use serde::{Deserialize, Serialize};
use tokio::sync::mpsc;

use crate::protocol::{
    encode, ChoicePreview, PathPoint, ReportSummary, ScriptPreview, SessionMessage,
};

/// Pre-encoded text frame shared by every queue it is pushed to.
pub type Outbound = Arc<str>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ServeOptions {
    /// Pace ticks against the wall clock; off runs as fast as possible.
    pub realtime: bool,
    /// Normaliser for the per-choice performance sent to clients, mm.
    pub rms_max_mm: f64,
    pub silence_timeout_s: f64,
    pub frame_rate_hz: u64,
    pub window_s: f64,
    pub window_step_s: f64,
    pub join_timeout_s: f64,
    pub max_decode_errors: usize,
}

impl Default for ServeOptions {
    fn default() -> Self {
        Self {
            realtime: true,
            rms_max_mm: 25.0,
            silence_timeout_s: 0.25,
            frame_rate_hz: 60,
            window_s: 1.5,
            window_step_s: 0.05,
            join_timeout_s: 120.0,
            max_decode_errors: 3,
        }
    }
}

#[derive(Debug)]
pub enum Ingress {
    Join {
        slot: usize,
        egress: mpsc::Sender<Outbound>,
    },
    Input {
        slot: usize,
        x_mm: f64,
    },
    Leave {
        slot: usize,
    },
}

#[derive(Debug, Clone)]
pub struct SessionSpec {
    pub id: String,
    pub condition: Condition,
    pub seed: u64,
    pub script: PathScript,
    pub cfgs: TrialConfig,
}

/// Human-controlled handles a live condition needs.
pub fn human_slots(condition: Condition) -> Result<usize> {
    match condition {
        Condition::Hfop => Ok(2),
        Condition::Hrp | Condition::Alone => Ok(1),
        Condition::RobotAlone => Err(Error::InvalidArgument(
            "ROBOT_ALONE has no human handle to play".into(),
        )),
    }
}

/// Recorded input of both handles, stamped with simulation time.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InputRecord {
    pub handles: [Vec<PointerInput>; 2],
}

#[derive(Debug, Clone)]
pub struct SessionOutcome {
    pub id: String,
    pub log: TrialLog,
    pub inputs: InputRecord,
    pub summary: ReportSummary,
}

fn live_agents(
    condition: Condition,
    cfgs: &TrialConfig,
    seed: u64,
    queues: &[InputQueue; 2],
) -> (BoxedAgent, Option<BoxedAgent>) {
    let h1: BoxedAgent = Box::new(PointerAgent::new(queues[0].clone()));
    let h2: Option<BoxedAgent> = match condition {
        Condition::Hfop => Some(Box::new(PointerAgent::new(queues[1].clone()))),
        Condition::Hrp => Some(Box::new(RobotPartner::new(cfgs.partner, stream(seed, &[2])))),
        _ => None,
    };
    (h1, h2)
}

/// Headless re-run of a session from its recorded inputs.
pub fn replay(spec: &SessionSpec, inputs: &InputRecord) -> Result<TrialLog> {
    let queues = inputs
        .handles
        .clone()
        .map(|h| Arc::new(Mutex::new(VecDeque::from(h))));
    let (h1, h2) = live_agents(spec.condition, &spec.cfgs, spec.seed, &queues);
    let sim = Simulation::new(spec.script.clone(), spec.cfgs.sim, Subject::One, h1, h2)?;
    run_simulation(sim, spec.condition, &spec.cfgs, spec.seed, TrialMeta::default())
}

pub fn preview(script: &PathScript) -> ScriptPreview {
    ScriptPreview {
        duration_s: script.duration(),
        seed: script.seed,
        choices: script
            .choices()
            .map(|c| ChoicePreview {
                index: c.index,
                t_start_s: c.t_start,
                t_fork_s: c.t_fork,
                t_merge_s: c.t_merge,
            })
            .collect(),
    }
}

fn subject_of(slot: usize) -> Subject {
    if slot == 0 {
        Subject::One
    } else {
        Subject::Two
    }
}

fn path_window(script: &PathScript, t: f64, opts: &ServeOptions) -> Vec<PathPoint> {
    let steps = (opts.window_s / opts.window_step_s).round() as usize;
    (0..=steps)
        .map_while(|k| {
            let off = k as f64 * opts.window_step_s;
            let target = script.sample(t + off).ok()?.target;
            let off_ms = (off * 1000.0).round();
            Some(match target {
                Target::Single(x) => PathPoint(off_ms, x, None),
                Target::Fork { left, right } => PathPoint(off_ms, left, Some(right)),
            })
        })
        .collect()
}

/// Outcome and live performance of a choice from the frames so far.
fn judge_choice(
    frames: &[Frame],
    script: &PathScript,
    dt: f64,
    index: usize,
    opts: &ServeOptions,
) -> Result<(Direction, f64)> {
    let c = script
        .choice(index)
        .ok_or_else(|| Error::InvalidArgument(format!("no choice {index}")))?;
    let at = |t: f64| ((t / dt).round() as usize).min(frames.len().saturating_sub(1));
    let tail = &frames[at(c.t_merge - OUTCOME_WINDOW_S)..=at(c.t_merge)];
    let mean = tail.iter().map(|f| f.cursor_x).sum::<f64>() / tail.len() as f64;
    let direction = match Side::of(mean) {
        Some(s) => s.into(),
        None => Direction::Undecided,
    };
    let zone = &frames[at(c.t_start)..=at(c.t_start + SCORING_ZONE_S)];
    let mut target = Vec::with_capacity(zone.len());
    for f in zone {
        let tgt = script.sample(f.state.t)?.target;
        target.push(match direction.side() {
            Some(side) => tgt.branch(side),
            None => tgt.closest(f.cursor_x),
        });
    }
    let object: Vec<f64> = zone.iter().map(|f| f.cursor_x).collect();
    let r = rms(&target, &object)?.min(opts.rms_max_mm);
    Ok((direction, performance(r, opts.rms_max_mm)?))
}

fn push(egress: &[Option<mpsc::Sender<Outbound>>; 2], slot: usize, text: Outbound) {
    if let Some(tx) = &egress[slot] {
        // A full queue drops the message; the tick never waits.
        let _ = tx.try_send(text);
    }
}

fn wait_for_players(
    rx: &Receiver<Ingress>,
    humans: usize,
    egress: &mut [Option<mpsc::Sender<Outbound>>; 2],
    timeout: Duration,
) -> Result<()> {
    let deadline = Instant::now() + timeout;
    while egress[..humans].iter().any(Option::is_none) {
        let left = deadline.saturating_duration_since(Instant::now());
        match rx.recv_timeout(left) {
            Ok(Ingress::Join { slot, egress: tx }) => egress[slot] = Some(tx),
            Ok(Ingress::Leave { slot }) => egress[slot] = None,
            Ok(Ingress::Input { .. }) => {}
            Err(RecvTimeoutError::Timeout) => {
                return Err(Error::InvalidArgument("players did not join in time".into()))
            }
            Err(RecvTimeoutError::Disconnected) => {
                return Err(Error::InvalidArgument("session abandoned".into()))
            }
        }
    }
    Ok(())
}

/// Runs one live trial to completion.
pub fn run_session(
    spec: &SessionSpec,
    opts: &ServeOptions,
    out_dir: Option<&Path>,
    rx: Receiver<Ingress>,
) -> Result<SessionOutcome> {
    let humans = human_slots(spec.condition)?;
    let mut egress: [Option<mpsc::Sender<Outbound>>; 2] = [None, None];
    wait_for_players(
        &rx,
        humans,
        &mut egress,
        Duration::from_secs_f64(opts.join_timeout_s),
    )?;

    let script_preview = preview(&spec.script);
    for slot in 0..humans {
        let welcome = SessionMessage::Welcome {
            session: spec.id.clone(),
            handle: slot as u8 + 1,
            script_preview: script_preview.clone(),
        };
        push(&egress, slot, encode(&welcome).into());
    }

    let queues: [InputQueue; 2] = Default::default();
    let (h1, h2) = live_agents(spec.condition, &spec.cfgs, spec.seed, &queues);
    let mut sim = Simulation::new(spec.script.clone(), spec.cfgs.sim, Subject::One, h1, h2)?;
    let dt = spec.cfgs.sim.dt;
    let limit = spec.cfgs.sim.lateral_limit;
    let mut frames = Vec::with_capacity(sim.total_ticks() as usize + 1);
    let mut inputs = InputRecord::default();
    let mut degraded = false;
    let mut max_drift = Duration::ZERO;
    let start = Instant::now();
    let mut last_heard = [start; 2];
    let mut next_choice = 0usize;
    let mut performances = Vec::new();
    let mut frame_slot = u64::MAX;

    while !sim.is_done() {
        let t = sim.state().t;
        loop {
            match rx.try_recv() {
                Ok(Ingress::Input { slot, x_mm }) if slot < humans => {
                    let p = PointerInput {
                        t_s: t,
                        x_mm: x_mm.clamp(-limit, limit),
                    };
                    queues[slot]
                        .lock()
                        .unwrap_or_else(|e| e.into_inner())
                        .push_back(p);
                    inputs.handles[slot].push(p);
                    last_heard[slot] = Instant::now();
                }
                Ok(Ingress::Input { .. }) => {}
                Ok(Ingress::Join { slot, egress: tx }) => egress[slot] = Some(tx),
                Ok(Ingress::Leave { slot }) => egress[slot] = None,
                Err(TryRecvError::Empty | TryRecvError::Disconnected) => break,
            }
        }

        let frame = sim.tick()?;
        frames.push(frame);
        let tick = frame.state.tick;

        let silence = Duration::from_secs_f64(opts.silence_timeout_s);
        if !degraded && last_heard[..humans].iter().any(|h| h.elapsed() > silence) {
            degraded = true;
            tracing::warn!(session = %spec.id, t, "client silent; holding last input");
        }

        let slot_now = tick * opts.frame_rate_hz / 1000;
        if slot_now != frame_slot {
            frame_slot = slot_now;
            let window = path_window(&spec.script, t, opts);
            let choice = spec.script.sample(t)?.choice;
            for slot in 0..humans {
                let highlight = match frame.phase {
                    Phase::Body => None,
                    _ => choice.and_then(|c| c.highlight(subject_of(slot))),
                };
                let own = if slot == 0 { frame.state.x1 } else { frame.state.x2 };
                let msg = SessionMessage::Frame {
                    t_ms: (t * 1000.0).round() as u64,
                    cursor_x_mm: frame.cursor_x,
                    own_x_mm: own,
                    color: frame.color,
                    path_window: window.clone(),
                    phase: frame.phase,
                    highlight,
                };
                push(&egress, slot, encode(&msg).into());
            }
        }

        if let Some(c) = spec.script.choice(next_choice) {
            if t >= c.t_merge {
                let (direction, perf) = judge_choice(&frames, &spec.script, dt, c.index, opts)?;
                performances.push(perf);
                let text: Outbound = encode(&SessionMessage::ChoiceResult {
                    index: c.index,
                    direction,
                    performance: perf,
                })
                .into();
                for slot in 0..humans {
                    push(&egress, slot, text.clone());
                }
                next_choice += 1;
            }
        }

        if opts.realtime {
            let due = start + Duration::from_secs_f64((tick + 1) as f64 * dt);
            let now = Instant::now();
            let sim_at = start + Duration::from_secs_f64(tick as f64 * dt);
            max_drift = max_drift.max(now.saturating_duration_since(sim_at));
            if due > now {
                std::thread::sleep(due - now);
            }
        }
    }

    let log = finish_log(
        &sim,
        frames,
        spec.condition,
        &spec.cfgs,
        spec.seed,
        TrialMeta::default(),
        degraded,
    )?;
    let log_path = match out_dir {
        Some(dir) => Some(write_outputs(dir, &spec.id, &log, &inputs)?),
        None => None,
    };
    let summary = ReportSummary {
        condition: spec.condition,
        choices: log.choices.len(),
        mean_performance: (!performances.is_empty())
            .then(|| performances.iter().sum::<f64>() / performances.len() as f64),
        degraded,
        max_drift_ms: max_drift.as_secs_f64() * 1000.0,
        log_path: log_path.map(|p| p.display().to_string()),
    };
    let end: Outbound = encode(&SessionMessage::End {
        report_summary: summary.clone(),
    })
    .into();
    for tx in egress.iter().flatten() {
        let _ = tx.blocking_send(end.clone());
    }
    Ok(SessionOutcome {
        id: spec.id.clone(),
        log,
        inputs,
        summary,
    })
}

fn write_outputs(dir: &Path, id: &str, log: &TrialLog, inputs: &InputRecord) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let safe: String = id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect();
    let path = dir.join(format!("session_{safe}.jsonl"));
    log.write(&path, 1)?;
    let inputs_path = dir.join(format!("session_{safe}.inputs.json"));
    let text = serde_json::to_string(inputs).map_err(|e| Error::json("inputs", e))?;
    std::fs::write(&inputs_path, text).map_err(|e| Error::io(&inputs_path, e))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use dyad_core::{generate_script, ScriptConfig};

    fn spec(condition: Condition) -> SessionSpec {
        let script_cfg = ScriptConfig {
            trial_duration: 16.0,
            choices_per_trial: 2,
            ..ScriptConfig::default()
        };
        SessionSpec {
            id: "t".into(),
            condition,
            seed: 5,
            script: generate_script(5, &script_cfg).unwrap(),
            cfgs: TrialConfig::default(),
        }
    }

    #[test]
    fn window_covers_look_ahead() {
        let s = spec(Condition::Alone);
        let w = path_window(&s.script, 0.0, &ServeOptions::default());
        assert_eq!(w.len(), 31);
        assert_eq!(w[30].0, 1500.0);
        let end = path_window(&s.script, 15.9, &ServeOptions::default());
        assert_eq!(end.len(), 3);
    }

    #[test]
    fn robot_alone_is_not_playable() {
        assert!(human_slots(Condition::RobotAlone).is_err());
        assert_eq!(human_slots(Condition::Hfop).unwrap(), 2);
    }

    #[test]
    fn fast_session_matches_replay() {
        let s = spec(Condition::Hrp);
        let (tx, rx) = std::sync::mpsc::channel();
        let (etx, mut erx) = mpsc::channel(1 << 16);
        tx.send(Ingress::Join { slot: 0, egress: etx }).unwrap();
        for k in 0..50 {
            tx.send(Ingress::Input { slot: 0, x_mm: (k as f64 * 0.3).sin() * 20.0 }).unwrap();
        }
        let opts = ServeOptions { realtime: false, ..ServeOptions::default() };
        let out = run_session(&s, &opts, None, rx).unwrap();
        let again = replay(&s, &out.inputs).unwrap();
        assert_eq!(out.log.frames, again.frames);
        assert_eq!(out.log.frames.len(), 16_001);
        let mut kinds = Vec::new();
        while let Ok(text) = erx.try_recv() {
            let v: serde_json::Value = serde_json::from_str(&text).unwrap();
            kinds.push(v["type"].as_str().unwrap().to_string());
        }
        assert_eq!(kinds.first().map(String::as_str), Some("welcome"));
        assert_eq!(kinds.last().map(String::as_str), Some("end"));
        assert_eq!(kinds.iter().filter(|k| *k == "choice_result").count(), 2);
    }
}
