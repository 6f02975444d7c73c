//! Synthetic human participant.
//!
//! A PD tracker of the cursor with a drawn start time per CHOICE, a slow
//! positional wander, white force noise and a stubbornness clock that makes
//! it give in after pushing against its partner for long enough. All
//! parameter defaults are invented; they are tuned so the closed-loop
//! conditions show the qualitative effects of the human experiments.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::agent::{pd_force, Agent, AgentChoiceRecord, AgentKind, ChoiceContext, Observation};
use crate::error::{Error, Result};
use crate::partner::truncated_normal;
use crate::path::{Phase, Side};
use crate::trajectory::PlannedTrajectory;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StartTime {
    #[serde(rename = "mean_s")]
    pub mean: f64,
    #[serde(rename = "std_s")]
    pub std: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SurrogateConfig {
    #[serde(rename = "kp_h_n_per_m")]
    pub kp: f64,
    #[serde(rename = "kd_h_ns_per_m")]
    pub kd: f64,
    #[serde(rename = "reaction_delay_mean_s")]
    pub reaction_delay_mean: f64,
    #[serde(rename = "reaction_delay_std_s")]
    pub reaction_delay_std: f64,
    #[serde(rename = "noise_std_n")]
    pub noise_std: f64,
    #[serde(rename = "wander_std_mm")]
    pub wander_std: f64,
    #[serde(rename = "wander_tau_s")]
    pub wander_tau: f64,
    #[serde(rename = "stubbornness_s")]
    pub stubbornness: f64,
    /// Relative standard deviation of the per-choice stubbornness draw.
    pub stubbornness_jitter: f64,
    #[serde(rename = "compliance_threshold_n")]
    pub compliance_threshold: f64,
    /// Start time with a highlight, when the surrogate believes it has a partner.
    pub start_informed: StartTime,
    /// Start time without a highlight, when partnered.
    pub start_uninformed: StartTime,
    /// Start time when performing alone.
    pub start_solo: StartTime,
    #[serde(rename = "start_time_min_s")]
    pub start_time_min: f64,
    #[serde(rename = "start_time_max_s")]
    pub start_time_max: f64,
    #[serde(rename = "plan_duration_s")]
    pub plan_duration: f64,
    #[serde(rename = "plan_target_mm")]
    pub plan_target: f64,
    /// Cursor displacement, as a fraction of `plan_target`, read as the
    /// partner taking the initiative.
    pub initiative_fraction: f64,
    #[serde(rename = "max_force_n")]
    pub max_force: f64,
}

impl Default for SurrogateConfig {
    fn default() -> Self {
        Self {
            kp: 200.0,
            kd: 4.0,
            reaction_delay_mean: 0.15,
            reaction_delay_std: 0.03,
            noise_std: 0.02,
            wander_std: 2.0,
            wander_tau: 0.3,
            stubbornness: 0.7,
            stubbornness_jitter: 0.1,
            compliance_threshold: 1.0,
            start_informed: StartTime {
                mean: 0.2,
                std: 0.1,
            },
            start_uninformed: StartTime {
                mean: 0.9,
                std: 0.15,
            },
            start_solo: StartTime {
                mean: 0.95,
                std: 0.08,
            },
            start_time_min: 0.05,
            start_time_max: 2.0,
            plan_duration: 0.4,
            plan_target: 25.0,
            initiative_fraction: 0.3,
            max_force: 5.0,
        }
    }
}

impl SurrogateConfig {
    /// Same agent with every stochastic perturbation switched off.
    pub fn noiseless(mut self) -> Self {
        self.noise_std = 0.0;
        self.wander_std = 0.0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(format!("surrogate: {msg}")));
        if !(self.kp > 0.0 && self.kd > 0.0) {
            return bad("tracking gains must be > 0");
        }
        let stds = [
            self.reaction_delay_std,
            self.noise_std,
            self.wander_std,
            self.stubbornness_jitter,
            self.start_informed.std,
            self.start_uninformed.std,
            self.start_solo.std,
        ];
        if stds.iter().any(|s| !(*s >= 0.0)) {
            return bad("standard deviations must be >= 0");
        }
        if !(self.wander_tau > 0.0) {
            return bad("wander_tau_s must be > 0");
        }
        if !(self.stubbornness >= 0.0 && self.compliance_threshold > 0.0) {
            return bad("stubbornness_s must be >= 0 and compliance_threshold_n > 0");
        }
        if !(self.start_time_min < self.start_time_max) {
            return bad("start_time_min_s must be < start_time_max_s");
        }
        if !(self.plan_duration > 0.0 && self.plan_target > 0.0 && self.max_force > 0.0) {
            return bad("plan_duration_s, plan_target_mm and max_force_n must be > 0");
        }
        if !(self.initiative_fraction > 0.0 && self.initiative_fraction < 1.0) {
            return bad("initiative_fraction must be in (0, 1)");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Stage {
    Waiting,
    Moving { plan: PlannedTrajectory },
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct ChoiceProgress {
    index: usize,
    t_start: f64,
    highlight: Option<Side>,
    start_cursor: f64,
    start_time: f64,
    reaction_delay: f64,
    stubbornness: f64,
    partner_initiative: Option<(Side, f64)>,
    stage: Stage,
    conflict_ticks: u32,
    record: AgentChoiceRecord,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SurrogateState {
    wander: f64,
    current: Option<ChoiceProgress>,
    finished: Vec<AgentChoiceRecord>,
}

impl SurrogateState {
    pub fn choice_records(&self) -> Vec<AgentChoiceRecord> {
        let mut out = self.finished.clone();
        out.extend(self.current.map(|c| c.record));
        out
    }

    pub fn wander(&self) -> f64 {
        self.wander
    }
}

/// One control tick. `partnered` tells the surrogate whether it believes a
/// partner shares the object, which selects its start-time habits.
pub fn surrogate_step(
    state: &mut SurrogateState,
    obs: &Observation,
    cfg: &SurrogateConfig,
    partnered: bool,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    if cfg.wander_std > 0.0 {
        let a = obs.dt / cfg.wander_tau;
        let z: f64 = StandardNormal.sample(rng);
        state.wander += -a * state.wander + cfg.wander_std * (2.0 * a).sqrt() * z;
    }
    let noise = if cfg.noise_std > 0.0 {
        let z: f64 = StandardNormal.sample(rng);
        cfg.noise_std * z
    } else {
        0.0
    };

    let ctx = match (obs.phase, obs.choice) {
        (Phase::Body, _) => {
            if let Some(c) = state.current.take() {
                state.finished.push(c.record);
            }
            let x_d = obs.target.closest(obs.cursor_x) + state.wander;
            return Ok(track(cfg, x_d, 0.0, obs, noise));
        }
        (_, Some(ctx)) => ctx,
        (phase, None) => {
            return Err(Error::InvalidArgument(format!(
                "phase {phase:?} observed without a choice context"
            )))
        }
    };

    if state.current.map(|c| c.index) != Some(ctx.index) {
        if let Some(c) = state.current.take() {
            state.finished.push(c.record);
        }
        state.current = Some(begin_choice(obs, &ctx, cfg, partnered, rng));
    }
    let c = state.current.as_mut().expect("choice begun");
    let rel = obs.t - c.t_start;

    if c.stage == Stage::Waiting {
        if partnered && c.partner_initiative.is_none() {
            let d = obs.cursor_x - c.start_cursor;
            if d.abs() > cfg.initiative_fraction * cfg.plan_target {
                c.partner_initiative = Some((Side::of(d).expect("non-zero"), rel));
            }
        }
        let follow = c
            .partner_initiative
            .filter(|&(_, seen)| rel >= seen + c.reaction_delay);
        if let Some((side, _)) = follow {
            start_moving(c, side, obs, rel, cfg, false)?;
        } else if rel >= c.start_time {
            let side = c.highlight.unwrap_or_else(|| Side::random(rng));
            start_moving(c, side, obs, rel, cfg, true)?;
        } else {
            let x_d = obs.target.closest(obs.cursor_x) + state.wander;
            return Ok(track(cfg, x_d, 0.0, obs, noise));
        }
    }

    let Stage::Moving { plan } = c.stage else {
        unreachable!("moving after the waiting branch")
    };
    let side = plan.side;

    if !c.record.yielded {
        let needed = ((c.stubbornness / obs.dt).round() as u32).max(1);
        let losing = obs.cursor_x * side.sign() < cfg.initiative_fraction * cfg.plan_target;
        if losing && obs.interaction_force * side.sign() <= -cfg.compliance_threshold {
            c.conflict_ticks += 1;
            if c.conflict_ticks >= needed {
                c.record.yielded = true;
                c.conflict_ticks = 0;
                start_moving(c, side.opposite(), obs, rel, cfg, false)?;
            }
        } else {
            c.conflict_ticks = 0;
        }
    }

    let Stage::Moving { plan } = c.stage else {
        unreachable!()
    };
    let (x_d, v_d) = match obs.phase {
        Phase::Merge => (obs.target.branch(plan.side), 0.0),
        _ => plan.eval(obs.t),
    };
    Ok(track(cfg, x_d + state.wander, v_d, obs, noise))
}

fn track(cfg: &SurrogateConfig, x_d: f64, v_d: f64, obs: &Observation, noise: f64) -> f64 {
    let f = pd_force(cfg.kp, cfg.kd, x_d - obs.cursor_x, v_d - obs.own_v, f64::INFINITY) + noise;
    f.clamp(-cfg.max_force, cfg.max_force)
}

fn begin_choice(
    obs: &Observation,
    ctx: &ChoiceContext,
    cfg: &SurrogateConfig,
    partnered: bool,
    rng: &mut ChaCha8Rng,
) -> ChoiceProgress {
    let habit = match (partnered, ctx.highlight.is_some()) {
        (false, _) => cfg.start_solo,
        (true, true) => cfg.start_informed,
        (true, false) => cfg.start_uninformed,
    };
    let start_time = truncated_normal(
        rng,
        habit.mean,
        habit.std,
        cfg.start_time_min,
        cfg.start_time_max,
    );
    let reaction_delay = if cfg.reaction_delay_std > 0.0 {
        Normal::new(cfg.reaction_delay_mean, cfg.reaction_delay_std)
            .expect("std checked positive")
            .sample(rng)
            .max(0.0)
    } else {
        cfg.reaction_delay_mean
    };
    let stubbornness = if cfg.stubbornness_jitter > 0.0 {
        let z: f64 = rng.sample(StandardNormal);
        cfg.stubbornness * (1.0 + cfg.stubbornness_jitter * z).max(0.1)
    } else {
        cfg.stubbornness
    };
    ChoiceProgress {
        index: ctx.index,
        t_start: ctx.t_start,
        highlight: ctx.highlight,
        start_cursor: obs.cursor_x,
        start_time,
        reaction_delay,
        stubbornness,
        partner_initiative: None,
        stage: Stage::Waiting,
        conflict_ticks: 0,
        record: AgentChoiceRecord::new(ctx.index, ctx.highlight.is_some()),
    }
}

fn start_moving(
    c: &mut ChoiceProgress,
    side: Side,
    obs: &Observation,
    rel: f64,
    cfg: &SurrogateConfig,
    initiated: bool,
) -> Result<()> {
    if c.stage == Stage::Waiting {
        c.record.start_time = Some(rel);
        c.record.initiated = initiated;
    }
    c.record.final_side = Some(side);
    c.stage = Stage::Moving {
        plan: PlannedTrajectory::new(
            obs.cursor_x,
            side.sign() * cfg.plan_target,
            obs.t,
            cfg.plan_duration,
            side,
        )?,
    };
    Ok(())
}

/// The surrogate as a harness agent owning its state and random stream.
#[derive(Debug, Clone)]
pub struct HumanSurrogate {
    pub state: SurrogateState,
    cfg: SurrogateConfig,
    partnered: bool,
    rng: ChaCha8Rng,
}

impl HumanSurrogate {
    pub fn new(cfg: SurrogateConfig, partnered: bool, rng: ChaCha8Rng) -> Self {
        Self {
            state: SurrogateState::default(),
            cfg,
            partnered,
            rng,
        }
    }
}

impl Agent for HumanSurrogate {
    fn kind(&self) -> AgentKind {
        AgentKind::Surrogate
    }

    fn force(&mut self, obs: &Observation) -> Result<f64> {
        surrogate_step(&mut self.state, obs, &self.cfg, self.partnered, &mut self.rng)
    }

    fn choice_records(&self) -> Vec<AgentChoiceRecord> {
        self.state.choice_records()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::Target;
    use rand::SeedableRng;

    fn body_obs(cursor: f64, target: f64) -> Observation {
        Observation {
            t: 0.0,
            dt: 0.001,
            cursor_x: cursor,
            own_x: cursor,
            own_v: 0.0,
            interaction_force: 0.0,
            phase: Phase::Body,
            target: Target::Single(target),
            choice: None,
        }
    }

    #[test]
    fn zero_error_zero_noise_gives_zero_force() {
        let cfg = SurrogateConfig::default().noiseless();
        let mut st = SurrogateState::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = surrogate_step(&mut st, &body_obs(3.0, 3.0), &cfg, true, &mut rng).unwrap();
        assert_eq!(f, 0.0);
    }

    #[test]
    fn force_is_bounded() {
        let cfg = SurrogateConfig {
            noise_std: 10.0,
            ..SurrogateConfig::default()
        };
        let mut st = SurrogateState::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for k in 0..1000 {
            let f = surrogate_step(&mut st, &body_obs(-30.0, 30.0 * (k % 2) as f64), &cfg, true, &mut rng)
                .unwrap();
            assert!(f.abs() <= 5.0);
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let cfg = SurrogateConfig::default();
        let run = || {
            let mut st = SurrogateState::default();
            let mut rng = ChaCha8Rng::seed_from_u64(77);
            (0..500)
                .map(|_| surrogate_step(&mut st, &body_obs(0.0, 1.0), &cfg, true, &mut rng).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn invalid_config_rejected() {
        assert!(SurrogateConfig::default().validate().is_ok());
        let cfg = SurrogateConfig {
            kp: 0.0,
            ..SurrogateConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
