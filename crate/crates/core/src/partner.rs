//! Leader/follower robot partner.
//!
//! The partner lets the human lead by default. At each CHOICE it picks a
//! side and draws a start time; human initiative before that time turns it
//! into a follower, otherwise it leads along a minimum-jerk plan. A leader
//! yields when the interaction force stays above threshold long enough.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::agent::{pd_force, Agent, AgentChoiceRecord, AgentKind, ChoiceContext, Observation};
use crate::error::{Error, Result};
use crate::path::{Phase, Side};
use crate::trajectory::PlannedTrajectory;

pub use crate::trajectory::min_jerk;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PartnerConfig {
    #[serde(rename = "start_time_mean_s")]
    pub start_time_mean: f64,
    #[serde(rename = "start_time_std_s")]
    pub start_time_std: f64,
    #[serde(rename = "start_time_mean_uninformed_s")]
    pub start_time_mean_uninformed: f64,
    #[serde(rename = "start_time_std_uninformed_s")]
    pub start_time_std_uninformed: f64,
    #[serde(rename = "start_time_min_s")]
    pub start_time_min: f64,
    #[serde(rename = "start_time_max_s")]
    pub start_time_max: f64,
    #[serde(rename = "force_threshold_n")]
    pub force_threshold: f64,
    #[serde(rename = "yield_duration_s")]
    pub yield_duration: f64,
    pub initiative_fraction: f64,
    pub body_stiffness_scale: f64,
    #[serde(rename = "kp_r_n_per_m")]
    pub kp: f64,
    #[serde(rename = "kd_r_ns_per_m")]
    pub kd: f64,
    #[serde(rename = "plan_duration_s")]
    pub plan_duration: f64,
    #[serde(rename = "plan_target_mm")]
    pub plan_target: f64,
    #[serde(rename = "max_force_n")]
    pub max_force: f64,
}

impl Default for PartnerConfig {
    fn default() -> Self {
        Self {
            start_time_mean: 0.55,
            start_time_std: 0.12,
            start_time_mean_uninformed: 0.90,
            start_time_std_uninformed: 0.15,
            start_time_min: 0.15,
            start_time_max: 0.95,
            force_threshold: 0.7,
            yield_duration: 0.2,
            initiative_fraction: 0.3,
            body_stiffness_scale: 0.4,
            kp: 400.0,
            kd: 4.0,
            plan_duration: 0.6,
            plan_target: 25.0,
            max_force: 5.0,
        }
    }
}

impl PartnerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(format!("partner: {msg}")));
        if !(self.force_threshold > 0.0) {
            return bad("force_threshold_n must be > 0");
        }
        if !(self.yield_duration > 0.0) {
            return bad("yield_duration_s must be > 0");
        }
        if !(self.initiative_fraction > 0.0 && self.initiative_fraction < 1.0) {
            return bad("initiative_fraction must be in (0, 1)");
        }
        if !(self.start_time_mean_uninformed > self.start_time_mean) {
            return bad("start_time_mean_uninformed_s must exceed start_time_mean_s");
        }
        if !(self.start_time_std >= 0.0 && self.start_time_std_uninformed >= 0.0) {
            return bad("start time standard deviations must be >= 0");
        }
        if !(self.start_time_min < self.start_time_max) {
            return bad("start_time_min_s must be < start_time_max_s");
        }
        if !(self.body_stiffness_scale > 0.0 && self.body_stiffness_scale < 1.0) {
            return bad("body_stiffness_scale must be in (0, 1)");
        }
        if !(self.kp > 0.0 && self.kd >= 0.0) {
            return bad("tracking gains must be positive");
        }
        if !(self.plan_duration > 0.0 && self.plan_target > 0.0 && self.max_force > 0.0) {
            return bad("plan_duration_s, plan_target_mm and max_force_n must be > 0");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    Idle,
    WaitingChoice,
    Leader,
    Follower,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct ChoiceProgress {
    index: usize,
    t_start: f64,
    start_cursor: f64,
    record: AgentChoiceRecord,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartnerState {
    pub mode: Mode,
    pub plan: Option<PlannedTrajectory>,
    pub target_side: Option<Side>,
    /// Drawn start time relative to choice start.
    pub start_time: Option<f64>,
    exceed_ticks: u32,
    dt: f64,
    current: Option<ChoiceProgress>,
    finished: Vec<AgentChoiceRecord>,
}

impl Default for PartnerState {
    fn default() -> Self {
        Self {
            mode: Mode::Idle,
            plan: None,
            target_side: None,
            start_time: None,
            exceed_ticks: 0,
            dt: 0.0,
            current: None,
            finished: Vec::new(),
        }
    }
}

impl PartnerState {
    /// Time the interaction force has continuously exceeded the threshold.
    pub fn accumulator(&self) -> f64 {
        self.exceed_ticks as f64 * self.dt
    }

    pub fn choice_records(&self) -> Vec<AgentChoiceRecord> {
        let mut out = self.finished.clone();
        out.extend(self.current.map(|c| c.record));
        out
    }

    fn finish_choice(&mut self) {
        if let Some(c) = self.current.take() {
            self.finished.push(c.record);
        }
        self.mode = Mode::Idle;
        self.plan = None;
        self.target_side = None;
        self.start_time = None;
        self.exceed_ticks = 0;
    }
}

/// Normal start-time draw, truncated to `[start_time_min, start_time_max]`
/// by rejection.
pub fn draw_start_time<R: Rng + ?Sized>(rng: &mut R, cfg: &PartnerConfig, informed: bool) -> f64 {
    let (mean, std) = if informed {
        (cfg.start_time_mean, cfg.start_time_std)
    } else {
        (cfg.start_time_mean_uninformed, cfg.start_time_std_uninformed)
    };
    truncated_normal(rng, mean, std, cfg.start_time_min, cfg.start_time_max)
}

pub(crate) fn truncated_normal<R: Rng + ?Sized>(
    rng: &mut R,
    mean: f64,
    std: f64,
    lo: f64,
    hi: f64,
) -> f64 {
    if std <= 0.0 {
        return mean.clamp(lo, hi);
    }
    let normal = Normal::new(mean, std).expect("std checked positive");
    for _ in 0..1000 {
        let x = normal.sample(rng);
        if (lo..=hi).contains(&x) {
            return x;
        }
    }
    mean.clamp(lo, hi)
}

/// Earliest sample where the cursor has moved more than
/// `fraction * |target_x - start_x|` away from `start_x`.
pub fn detect_initiative(
    history: &[(f64, f64)],
    start_x: f64,
    target_x: f64,
    fraction: f64,
) -> Result<Option<(Side, f64)>> {
    let distance = (target_x - start_x).abs();
    if !(distance > 0.0) {
        return Err(Error::InvalidArgument(
            "initiative needs a target distinct from the start".into(),
        ));
    }
    let threshold = fraction * distance;
    Ok(history.iter().find_map(|&(t, x)| {
        let d = x - start_x;
        (d.abs() > threshold).then(|| (Side::of(d).expect("non-zero displacement"), t))
    }))
}

/// One control tick of the partner. Returns the force command and the
/// successor state.
pub fn partner_step(
    state: &PartnerState,
    obs: &Observation,
    cfg: &PartnerConfig,
    rng: &mut ChaCha8Rng,
) -> Result<(f64, PartnerState)> {
    let mut next = state.clone();
    let force = advance(&mut next, obs, cfg, rng)?;
    Ok((force, next))
}

fn advance(
    st: &mut PartnerState,
    obs: &Observation,
    cfg: &PartnerConfig,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    st.dt = obs.dt;
    let body_kp = cfg.kp * cfg.body_stiffness_scale;
    let body_kd = cfg.kd * cfg.body_stiffness_scale;

    let ctx = match (obs.phase, obs.choice) {
        (Phase::Body, _) => {
            if st.current.is_some() {
                st.finish_choice();
            }
            let x_d = obs.target.closest(obs.own_x);
            return Ok(pd_force(body_kp, body_kd, x_d - obs.own_x, -obs.own_v, cfg.max_force));
        }
        (_, Some(ctx)) => ctx,
        (phase, None) => {
            return Err(Error::InvalidArgument(format!(
                "phase {phase:?} observed without a choice context"
            )))
        }
    };

    if st.current.map(|c| c.index) != Some(ctx.index) {
        begin_choice(st, obs, &ctx, cfg, rng);
    }
    let progress = st.current.expect("choice begun");
    let rel = obs.t - progress.t_start;
    let side = st.target_side.expect("side picked at choice start");

    if st.mode == Mode::WaitingChoice {
        let target_x = side.sign() * cfg.plan_target;
        let threshold = cfg.initiative_fraction * (target_x - progress.start_cursor).abs();
        let displacement = obs.cursor_x - progress.start_cursor;
        if displacement.abs() > threshold {
            let human_side = Side::of(displacement).expect("non-zero displacement");
            enter(st, Mode::Follower, human_side, obs, rel, cfg, false)?;
        } else if rel >= st.start_time.expect("start time drawn") {
            enter(st, Mode::Leader, side, obs, rel, cfg, true)?;
        } else {
            let x_d = obs.target.closest(obs.own_x);
            return Ok(pd_force(body_kp, body_kd, x_d - obs.own_x, -obs.own_v, cfg.max_force));
        }
    }

    let needed = ticks_for(cfg.yield_duration, obs.dt);
    let f = obs.interaction_force;
    let side = st.target_side.expect("side set on entry");
    match st.mode {
        Mode::Leader => {
            if f.abs() >= cfg.force_threshold {
                st.exceed_ticks = (st.exceed_ticks + 1).min(needed);
                if st.exceed_ticks >= needed {
                    let new_side = Side::of(f).expect("force above threshold");
                    enter(st, Mode::Follower, new_side, obs, rel, cfg, false)?;
                    if let Some(c) = st.current.as_mut() {
                        c.record.yielded = true;
                    }
                }
            } else {
                st.exceed_ticks = 0;
            }
        }
        Mode::Follower => {
            if f * side.sign() <= -cfg.force_threshold {
                st.exceed_ticks = (st.exceed_ticks + 1).min(needed);
                if st.exceed_ticks >= needed {
                    enter(st, Mode::Follower, side.opposite(), obs, rel, cfg, false)?;
                }
            } else {
                st.exceed_ticks = 0;
            }
        }
        Mode::Idle | Mode::WaitingChoice => unreachable!("left waiting above"),
    }

    let side = st.target_side.expect("side set on entry");
    let (x_d, v_d) = match obs.phase {
        Phase::Merge => (obs.target.branch(side), 0.0),
        _ => st.plan.expect("active plan").eval(obs.t),
    };
    let (kp, kd) = match st.mode {
        Mode::Leader => (cfg.kp, cfg.kd),
        _ => (body_kp, body_kd),
    };
    Ok(pd_force(kp, kd, x_d - obs.own_x, v_d - obs.own_v, cfg.max_force))
}

fn ticks_for(duration: f64, dt: f64) -> u32 {
    ((duration / dt).round() as u32).max(1)
}

fn begin_choice(
    st: &mut PartnerState,
    obs: &Observation,
    ctx: &ChoiceContext,
    cfg: &PartnerConfig,
    rng: &mut ChaCha8Rng,
) {
    if st.current.is_some() {
        st.finish_choice();
    }
    let informed = ctx.highlight.is_some();
    let side = ctx.highlight.unwrap_or_else(|| Side::random(rng));
    st.mode = Mode::WaitingChoice;
    st.target_side = Some(side);
    st.start_time = Some(draw_start_time(rng, cfg, informed));
    st.plan = None;
    st.exceed_ticks = 0;
    st.current = Some(ChoiceProgress {
        index: ctx.index,
        t_start: ctx.t_start,
        start_cursor: obs.cursor_x,
        record: AgentChoiceRecord::new(ctx.index, informed),
    });
}

/// Switches mode and re-plans from the current handle position.
fn enter(
    st: &mut PartnerState,
    mode: Mode,
    side: Side,
    obs: &Observation,
    rel: f64,
    cfg: &PartnerConfig,
    initiated: bool,
) -> Result<()> {
    let from_waiting = st.mode == Mode::WaitingChoice;
    st.mode = mode;
    st.target_side = Some(side);
    st.exceed_ticks = 0;
    st.plan = Some(PlannedTrajectory::new(
        obs.own_x,
        side.sign() * cfg.plan_target,
        obs.t,
        cfg.plan_duration,
        side,
    )?);
    if let Some(c) = st.current.as_mut() {
        if from_waiting {
            c.record.start_time = Some(rel);
            c.record.initiated = initiated;
        }
        c.record.final_side = Some(side);
    }
    Ok(())
}

/// The partner as a harness agent owning its state and random stream.
#[derive(Debug, Clone)]
pub struct RobotPartner {
    pub state: PartnerState,
    cfg: PartnerConfig,
    rng: ChaCha8Rng,
}

impl RobotPartner {
    pub fn new(cfg: PartnerConfig, rng: ChaCha8Rng) -> Self {
        Self {
            state: PartnerState::default(),
            cfg,
            rng,
        }
    }
}

impl Agent for RobotPartner {
    fn kind(&self) -> AgentKind {
        AgentKind::Robot
    }

    fn force(&mut self, obs: &Observation) -> Result<f64> {
        advance(&mut self.state, obs, &self.cfg, &mut self.rng)
    }

    fn choice_records(&self) -> Vec<AgentChoiceRecord> {
        self.state.choice_records()
    }
}
