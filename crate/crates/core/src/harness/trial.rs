//! Closed-loop trial execution and per-choice annotation.

use crate::agent::{Agent, AgentChoiceRecord, AgentKind, ChoiceContext, Observation};
use crate::error::{Error, Result};
use crate::metrics::{rms, LeaderRole};
use crate::partner::RobotPartner;
use crate::path::{feedback_color, ChoiceSpec, PathScript, Phase, Subject};
use crate::sim::{cursor_position, step_dyad, DyadState, Frame, SimParams};
use crate::surrogate::HumanSurrogate;

use super::config::{Condition, TrialConfig};
use super::log::{config_hash, ChoiceAnnotation, LogHeader, TrialLog, LOG_FORMAT_VERSION};
use super::rng::stream;

/// Length of the per-choice scoring zone starting at choice start.
pub const SCORING_ZONE_S: f64 = 2.0;
/// Fraction of the branch offset that marks the end of a choice movement.
pub const MOTION_END_FRACTION: f64 = 0.95;

pub type BoxedAgent = Box<dyn Agent + Send>;

/// A steppable trial: one dyad, one script and the agents on each handle.
///
/// Each [`Simulation::tick`] samples the path, queries the agents, returns
/// the frame for the current tick and then integrates to the next one.
pub struct Simulation {
    script: PathScript,
    params: SimParams,
    subjects: [Subject; 2],
    handle1: BoxedAgent,
    /// `None` mirrors handle 1's force onto handle 2.
    handle2: Option<BoxedAgent>,
    state: DyadState,
    hint: usize,
    total_ticks: u64,
    done: bool,
}

impl Simulation {
    pub fn new(
        script: PathScript,
        params: SimParams,
        subject: Subject,
        handle1: BoxedAgent,
        handle2: Option<BoxedAgent>,
    ) -> Result<Self> {
        params.validate()?;
        script.config.validate()?;
        let total_ticks = params.ticks(script.duration());
        Ok(Self {
            script,
            params,
            subjects: [subject, subject.other()],
            handle1,
            handle2,
            state: DyadState::default(),
            hint: 0,
            total_ticks,
            done: false,
        })
    }

    pub fn state(&self) -> &DyadState {
        &self.state
    }

    pub fn script(&self) -> &PathScript {
        &self.script
    }

    pub fn params(&self) -> &SimParams {
        &self.params
    }

    pub fn total_ticks(&self) -> u64 {
        self.total_ticks
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn agent_kinds(&self) -> [Option<AgentKind>; 2] {
        [
            Some(self.handle1.kind()),
            self.handle2.as_ref().map(|a| a.kind()),
        ]
    }

    pub fn agent_records(&self) -> [Option<Vec<AgentChoiceRecord>>; 2] {
        [
            Some(self.handle1.choice_records()),
            self.handle2.as_ref().map(|a| a.choice_records()),
        ]
    }

    fn observe(&self, handle: usize, t: f64, phase: Phase, sample_choice: Option<&ChoiceSpec>, target: crate::path::Target) -> Observation {
        let s = &self.state;
        let (own_x, own_v, f) = if handle == 0 {
            (s.x1, s.v1, s.f_couple)
        } else {
            (s.x2, s.v2, -s.f_couple)
        };
        Observation {
            t,
            dt: self.params.dt,
            cursor_x: cursor_position(s),
            own_x,
            own_v,
            interaction_force: f,
            phase,
            target,
            choice: sample_choice.map(|c| ChoiceContext::for_subject(c, self.subjects[handle])),
        }
    }

    /// Produces the frame for the current tick and advances the dyad.
    pub fn tick(&mut self) -> Result<Frame> {
        if self.done {
            return Err(Error::InvalidArgument("trial already finished".into()));
        }
        let tick = self.state.tick;
        let t = self.state.t.min(self.script.duration());
        let sample = self.script.sample_from(t, &mut self.hint)?;
        let (phase, target, choice) = (sample.phase, sample.target, sample.choice.copied());

        let obs1 = self.observe(0, t, phase, choice.as_ref(), target);
        let f1 = self.handle1.force(&obs1)?;
        let f2 = match self.handle2.as_mut() {
            Some(_) => {
                let obs2 = self.observe(1, t, phase, choice.as_ref(), target);
                self.handle2.as_mut().expect("checked").force(&obs2)?
            }
            None => f1,
        };

        let cursor = cursor_position(&self.state);
        let mut shown = self.state;
        shown.f1 = f1;
        shown.f2 = f2;
        let frame = Frame::new(
            shown,
            target.closest(cursor),
            feedback_color(target.distance(cursor))?,
            phase,
        );

        if tick >= self.total_ticks {
            self.done = true;
        } else {
            self.state = step_dyad(&self.state, f1, f2, &self.params).map_err(|e| {
                Error::TickCorruption {
                    tick,
                    reason: e.to_string(),
                }
            })?;
        }
        Ok(frame)
    }
}

/// Identity of a trial inside an experiment, carried into the log header.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TrialMeta {
    pub pair: Option<usize>,
    pub repetition: Option<usize>,
    pub training: bool,
}

/// Builds the agents a condition puts on the two handles.
pub fn agents_for(
    condition: Condition,
    cfgs: &TrialConfig,
    seed: u64,
) -> (BoxedAgent, Option<BoxedAgent>) {
    let surrogate = |partnered, label| -> BoxedAgent {
        Box::new(HumanSurrogate::new(
            cfgs.surrogate,
            partnered,
            stream(seed, &[label]),
        ))
    };
    let robot = |label| -> BoxedAgent { Box::new(RobotPartner::new(cfgs.partner, stream(seed, &[label]))) };
    match condition {
        Condition::Hfop => (surrogate(true, 1), Some(surrogate(true, 2))),
        Condition::Hrp => (surrogate(true, 1), Some(robot(2))),
        Condition::Alone => (surrogate(false, 1), None),
        Condition::RobotAlone => (robot(1), None),
    }
}

/// Runs one full trial with handle 1's agent on subject slot One.
pub fn run_trial(
    condition: Condition,
    script: &PathScript,
    cfgs: &TrialConfig,
    seed: u64,
) -> Result<TrialLog> {
    run_trial_as(condition, Subject::One, script, cfgs, seed, TrialMeta::default())
}

/// Runs one full trial with handle 1's agent seeing `subject`'s highlights.
pub fn run_trial_as(
    condition: Condition,
    subject: Subject,
    script: &PathScript,
    cfgs: &TrialConfig,
    seed: u64,
    meta: TrialMeta,
) -> Result<TrialLog> {
    cfgs.validate()?;
    let (h1, h2) = agents_for(condition, cfgs, seed);
    let sim = Simulation::new(script.clone(), cfgs.sim, subject, h1, h2)?;
    run_simulation(sim, condition, cfgs, seed, meta)
}

/// Drives a prepared simulation to completion and annotates the result.
pub fn run_simulation(
    mut sim: Simulation,
    condition: Condition,
    cfgs: &TrialConfig,
    seed: u64,
    meta: TrialMeta,
) -> Result<TrialLog> {
    let mut frames = Vec::with_capacity(sim.total_ticks() as usize + 1);
    while !sim.is_done() {
        frames.push(sim.tick()?);
    }
    finish_log(&sim, frames, condition, cfgs, seed, meta, false)
}

/// Assembles header and annotations for a finished simulation.
pub fn finish_log(
    sim: &Simulation,
    frames: Vec<Frame>,
    condition: Condition,
    cfgs: &TrialConfig,
    seed: u64,
    meta: TrialMeta,
    degraded: bool,
) -> Result<TrialLog> {
    let script = sim.script().clone();
    let header = LogHeader {
        format_version: LOG_FORMAT_VERSION,
        config_hash: config_hash(cfgs, &script),
        seed,
        condition,
        subject: sim.subjects[0],
        agents: sim.agent_kinds(),
        pair: meta.pair,
        repetition: meta.repetition,
        training: meta.training,
        degraded,
        dt_s: sim.params().dt,
        decimation: 1,
        ticks: sim.total_ticks(),
        config: *cfgs,
        script,
    };
    let mut log = TrialLog {
        header,
        frames,
        choices: Vec::new(),
    };
    let records = sim.agent_records();
    let choices: Vec<ChoiceSpec> = log.header.script.choices().copied().collect();
    log.choices = choices
        .iter()
        .map(|c| annotate(&log, c, &records))
        .collect::<Result<_>>()?;
    Ok(log)
}

fn record_for(records: &Option<Vec<AgentChoiceRecord>>, index: usize) -> Option<AgentChoiceRecord> {
    records
        .as_ref()
        .and_then(|r| r.iter().find(|c| c.index == index).copied())
}

/// Computes the annotation of one choice from a full-rate log.
pub fn annotate(
    log: &TrialLog,
    choice: &ChoiceSpec,
    records: &[Option<Vec<AgentChoiceRecord>>; 2],
) -> Result<ChoiceAnnotation> {
    let script = &log.header.script;
    let direction = crate::path::actual_direction(log, choice)?;

    let zone = log.frames_between(choice.t_start, choice.t_start + SCORING_ZONE_S)?;
    let mut target = Vec::with_capacity(zone.len());
    for f in zone {
        let t = f.state.t.min(script.duration());
        let tgt = script.sample(t)?.target;
        target.push(match direction.side() {
            Some(side) => tgt.branch(side),
            None => tgt.closest(f.cursor_x),
        });
    }
    let object: Vec<f64> = zone.iter().map(|f| f.cursor_x).collect();
    let rms_mm = rms(&target, &object)?;

    let motion_end_s = direction.side().and_then(|side| {
        let goal = MOTION_END_FRACTION * script.config.x_max;
        log.frames_between(choice.t_start, choice.t_merge)
            .ok()?
            .iter()
            .find(|f| f.cursor_x * side.sign() >= goal)
            .map(|f| f.state.t - choice.t_start)
    });

    let agents = [
        record_for(&records[0], choice.index),
        record_for(&records[1], choice.index),
    ];
    let kinds = log.header.agents;
    let (leader, human_led, leader_start_s, follower_start_s) = resolve_leader(kinds, agents, log.header.subject);

    Ok(ChoiceAnnotation {
        index: choice.index,
        t_start_s: choice.t_start,
        t_fork_s: choice.t_fork,
        t_merge_s: choice.t_merge,
        decision_type: choice.decision_type,
        highlight_1: choice.highlight_1,
        highlight_2: choice.highlight_2,
        direction,
        rms_mm,
        agents,
        leader,
        human_led,
        leader_start_s,
        follower_start_s,
        motion_end_s,
    })
}

type LeaderInfo = (Option<LeaderRole>, Option<bool>, Option<f64>, Option<f64>);

fn role_of(kind: AgentKind, subject: Subject) -> LeaderRole {
    match (kind, subject) {
        (AgentKind::Robot, _) => LeaderRole::Robot,
        (_, Subject::One) => LeaderRole::Subject1,
        (_, Subject::Two) => LeaderRole::Subject2,
    }
}

/// Who led a choice.
///
/// Against the robot, the human led whenever the robot entered the choice
/// as a follower. Between two humans the earlier self-initiated mover led.
fn resolve_leader(
    kinds: [Option<AgentKind>; 2],
    recs: [Option<AgentChoiceRecord>; 2],
    subject: Subject,
) -> LeaderInfo {
    match (kinds, recs) {
        ([Some(k), None], [Some(r), _]) => {
            let role = if k == AgentKind::Robot {
                LeaderRole::Robot
            } else {
                LeaderRole::Human
            };
            (r.start_time.map(|_| role), None, r.start_time, None)
        }
        ([Some(k1), Some(k2)], [Some(a), Some(b)]) => {
            let robot = match (k1, k2) {
                (AgentKind::Robot, AgentKind::Robot) => None,
                (AgentKind::Robot, _) => Some((a, b)),
                (_, AgentKind::Robot) => Some((b, a)),
                _ => None,
            };
            if let Some((r, h)) = robot {
                let Some(r_start) = r.start_time else {
                    return (None, None, None, None);
                };
                return if r.initiated {
                    (Some(LeaderRole::Robot), Some(false), Some(r_start), h.start_time)
                } else {
                    (Some(LeaderRole::Human), Some(true), h.start_time, Some(r_start))
                };
            }
            let movers = [(a, role_of(k1, subject)), (b, role_of(k2, subject.other()))];
            let first = (0..2)
                .filter(|&i| movers[i].0.initiated && movers[i].0.start_time.is_some())
                .min_by(|&i, &j| {
                    movers[i]
                        .0
                        .start_time
                        .partial_cmp(&movers[j].0.start_time)
                        .expect("finite start times")
                });
            match first {
                Some(i) => (
                    Some(movers[i].1),
                    None,
                    movers[i].0.start_time,
                    movers[1 - i].0.start_time,
                ),
                None => (None, None, None, None),
            }
        }
        _ => (None, None, None, None),
    }
}
