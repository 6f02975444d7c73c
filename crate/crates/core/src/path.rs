//! Scripted tracking path: sinusoidal BODY filler and forked CHOICE parts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::TrialLog;
use crate::trajectory::min_jerk_shape;

/// Lateral offset of each fork branch from the path center (80 px on screen).
pub const X_MAX_MM: f64 = 25.0;

/// Screen scale used only for UI serialization.
pub const PX_PER_MM: f64 = 3.2;

pub const SCRIPT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Left => -1.0,
            Side::Right => 1.0,
        }
    }

    pub fn opposite(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }

    /// Right for positive values, Left for negative, None for zero or NaN.
    pub fn of(value: f64) -> Option<Side> {
        if value > 0.0 {
            Some(Side::Right)
        } else if value < 0.0 {
            Some(Side::Left)
        } else {
            None
        }
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Side {
        if rng.random_bool(0.5) {
            Side::Right
        } else {
            Side::Left
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum DecisionType {
    Same,
    One,
    Oppo,
}

impl DecisionType {
    pub const ALL: [DecisionType; 3] = [DecisionType::Same, DecisionType::One, DecisionType::Oppo];

    pub fn name(self) -> &'static str {
        match self {
            DecisionType::Same => "SAME",
            DecisionType::One => "ONE",
            DecisionType::Oppo => "OPPO",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Color {
    Green,
    Orange,
    Red,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    Body,
    ChoicePre,
    ChoicePost,
    Merge,
}

/// Outcome of a choice as judged from the cursor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    Left,
    Right,
    Undecided,
}

impl Direction {
    pub fn side(self) -> Option<Side> {
        match self {
            Direction::Left => Some(Side::Left),
            Direction::Right => Some(Side::Right),
            Direction::Undecided => None,
        }
    }
}

impl From<Side> for Direction {
    fn from(s: Side) -> Self {
        match s {
            Side::Left => Direction::Left,
            Side::Right => Direction::Right,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScriptConfig {
    #[serde(rename = "trial_duration_s")]
    pub trial_duration: f64,
    pub choices_per_trial: usize,
    #[serde(rename = "scroll_speed_mm_per_s")]
    pub scroll_speed: f64,
    #[serde(rename = "x_max_mm")]
    pub x_max: f64,
    #[serde(rename = "body_duration_s")]
    pub body_duration: f64,
    #[serde(rename = "body_amplitude_min_mm")]
    pub body_amplitude_min: f64,
    #[serde(rename = "body_amplitude_max_mm")]
    pub body_amplitude_max: f64,
    #[serde(rename = "pre_fork_s")]
    pub pre_fork: f64,
    #[serde(rename = "post_fork_s")]
    pub post_fork: f64,
    #[serde(rename = "fork_ramp_s")]
    pub fork_ramp: f64,
    #[serde(rename = "merge_s")]
    pub merge: f64,
    /// Relative weights of SAME, ONE, OPPO.
    pub decision_weights: [f64; 3],
}

impl Default for ScriptConfig {
    fn default() -> Self {
        Self {
            trial_duration: 120.0,
            choices_per_trial: 16,
            scroll_speed: 35.0,
            x_max: X_MAX_MM,
            body_duration: 2.5,
            body_amplitude_min: 10.0,
            body_amplitude_max: 25.0,
            pre_fork: 1.0,
            post_fork: 3.0,
            fork_ramp: 0.6,
            merge: 1.0,
            decision_weights: [1.0, 1.0, 1.0],
        }
    }
}

impl ScriptConfig {
    /// Time taken by one CHOICE part, fork to merge end included.
    pub fn choice_footprint(&self) -> f64 {
        self.pre_fork + self.post_fork + self.merge
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(format!("script: {msg}")));
        if self.choices_per_trial == 0 {
            return bad("choices_per_trial must be >= 1".into());
        }
        for (name, v) in [
            ("trial_duration_s", self.trial_duration),
            ("body_duration_s", self.body_duration),
            ("pre_fork_s", self.pre_fork),
            ("post_fork_s", self.post_fork),
            ("fork_ramp_s", self.fork_ramp),
            ("merge_s", self.merge),
            ("x_max_mm", self.x_max),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be > 0"));
            }
        }
        if self.fork_ramp > self.post_fork {
            return bad("fork_ramp_s must not exceed post_fork_s".into());
        }
        if !(0.0 <= self.body_amplitude_min && self.body_amplitude_min <= self.body_amplitude_max)
            || self.body_amplitude_max > self.x_max
        {
            return bad("body amplitudes must satisfy 0 <= min <= max <= x_max_mm".into());
        }
        if self.decision_weights.iter().any(|w| !(*w >= 0.0))
            || self.decision_weights.iter().sum::<f64>() <= 0.0
        {
            return bad("decision_weights must be non-negative with a positive sum".into());
        }
        let n = self.choices_per_trial as f64;
        let needed = n * (self.choice_footprint() + self.body_duration);
        if needed > self.trial_duration + 1e-9 {
            return bad(format!(
                "{} choices x ({} s choice + {} s body) = {needed} s exceeds trial_duration_s = {}",
                self.choices_per_trial,
                self.choice_footprint(),
                self.body_duration,
                self.trial_duration
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChoiceSpec {
    pub index: usize,
    pub t_start: f64,
    pub t_fork: f64,
    /// End of the post-fork straight section; the branches start merging here.
    pub t_merge: f64,
    pub t_end: f64,
    pub decision_type: DecisionType,
    /// The side highlighted for whoever receives information.
    pub side: Side,
    pub highlight_1: Option<Side>,
    pub highlight_2: Option<Side>,
}

impl ChoiceSpec {
    pub fn highlight(&self, subject: Subject) -> Option<Side> {
        match subject {
            Subject::One => self.highlight_1,
            Subject::Two => self.highlight_2,
        }
    }
}

/// Which of the two subject slots a participant occupies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Subject {
    One,
    Two,
}

impl Subject {
    pub fn other(self) -> Subject {
        match self {
            Subject::One => Subject::Two,
            Subject::Two => Subject::One,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Segment {
    Body {
        t_start: f64,
        duration: f64,
        /// Signed peak lateral offset, mm.
        amplitude: f64,
    },
    Choice(ChoiceSpec),
}

impl Segment {
    pub fn t_start(&self) -> f64 {
        match self {
            Segment::Body { t_start, .. } => *t_start,
            Segment::Choice(c) => c.t_start,
        }
    }

    pub fn t_end(&self) -> f64 {
        match self {
            Segment::Body {
                t_start, duration, ..
            } => t_start + duration,
            Segment::Choice(c) => c.t_end,
        }
    }
}

/// Where the path is at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Target {
    Single(f64),
    Fork { left: f64, right: f64 },
}

impl Target {
    /// Distance from `x` to the closest branch.
    pub fn distance(&self, x: f64) -> f64 {
        (x - self.closest(x)).abs()
    }

    /// The branch position closest to `x` (ties go right).
    pub fn closest(&self, x: f64) -> f64 {
        match *self {
            Target::Single(p) => p,
            Target::Fork { left, right } => {
                if (x - left).abs() < (x - right).abs() {
                    left
                } else {
                    right
                }
            }
        }
    }

    /// The branch on `side`, or the single target.
    pub fn branch(&self, side: Side) -> f64 {
        match *self {
            Target::Single(p) => p,
            Target::Fork { left, right } => match side {
                Side::Left => left,
                Side::Right => right,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathScript {
    pub script_version: u32,
    pub seed: u64,
    pub config: ScriptConfig,
    pub segments: Vec<Segment>,
}

/// Result of locating a time inside a script.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSample<'a> {
    pub target: Target,
    pub phase: Phase,
    pub choice: Option<&'a ChoiceSpec>,
}

pub fn generate_script(seed: u64, cfg: &ScriptConfig) -> Result<PathScript> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = cfg.choices_per_trial;
    let gap = (cfg.trial_duration - n as f64 * cfg.choice_footprint()) / n as f64;
    let bodies_per_gap = ((gap / cfg.body_duration) + 1e-9).floor().max(1.0) as usize;
    let body_len = gap / bodies_per_gap as f64;

    let total_weight: f64 = cfg.decision_weights.iter().sum();
    let mut segments = Vec::with_capacity(n * (bodies_per_gap + 1));
    let mut t = 0.0_f64;
    for index in 0..n {
        for _ in 0..bodies_per_gap {
            let magnitude = if cfg.body_amplitude_max > cfg.body_amplitude_min {
                rng.random_range(cfg.body_amplitude_min..=cfg.body_amplitude_max)
            } else {
                cfg.body_amplitude_min
            };
            let amplitude = Side::random(&mut rng).sign() * magnitude;
            segments.push(Segment::Body {
                t_start: t,
                duration: body_len,
                amplitude,
            });
            t += body_len;
        }

        let u = rng.random_range(0.0..total_weight);
        let decision_type = if u < cfg.decision_weights[0] {
            DecisionType::Same
        } else if u < cfg.decision_weights[0] + cfg.decision_weights[1] {
            DecisionType::One
        } else {
            DecisionType::Oppo
        };
        let side = Side::random(&mut rng);
        let (highlight_1, highlight_2) = match decision_type {
            DecisionType::Same => (Some(side), Some(side)),
            DecisionType::Oppo => (Some(side), Some(side.opposite())),
            DecisionType::One => {
                if rng.random_bool(0.5) {
                    (Some(side), None)
                } else {
                    (None, Some(side))
                }
            }
        };
        let t_fork = t + cfg.pre_fork;
        let t_merge = t_fork + cfg.post_fork;
        let t_end = if index + 1 == n {
            cfg.trial_duration
        } else {
            t_merge + cfg.merge
        };
        segments.push(Segment::Choice(ChoiceSpec {
            index,
            t_start: t,
            t_fork,
            t_merge,
            t_end,
            decision_type,
            side,
            highlight_1,
            highlight_2,
        }));
        t = t_end;
    }

    Ok(PathScript {
        script_version: SCRIPT_VERSION,
        seed,
        config: *cfg,
        segments,
    })
}

impl PathScript {
    pub fn duration(&self) -> f64 {
        self.config.trial_duration
    }

    pub fn choices(&self) -> impl Iterator<Item = &ChoiceSpec> + '_ {
        self.segments.iter().filter_map(|s| match s {
            Segment::Choice(c) => Some(c),
            Segment::Body { .. } => None,
        })
    }

    pub fn choice(&self, index: usize) -> Option<&ChoiceSpec> {
        self.choices().find(|c| c.index == index)
    }

    fn segment_index(&self, t: f64) -> usize {
        // last segment whose start is <= t
        self.segments
            .partition_point(|s| s.t_start() <= t)
            .saturating_sub(1)
    }

    pub fn sample(&self, t: f64) -> Result<PathSample<'_>> {
        if !(0.0..=self.duration()).contains(&t) {
            return Err(Error::TimeOutOfRange {
                t,
                duration: self.duration(),
            });
        }
        let seg = &self.segments[self.segment_index(t)];
        Ok(self.sample_segment(seg, t))
    }

    /// Like [`PathScript::sample`] but starts the segment search at `hint`
    /// and updates it; used by the per-tick simulation loop.
    pub fn sample_from(&self, t: f64, hint: &mut usize) -> Result<PathSample<'_>> {
        if !(0.0..=self.duration()).contains(&t) {
            return Err(Error::TimeOutOfRange {
                t,
                duration: self.duration(),
            });
        }
        let mut i = (*hint).min(self.segments.len() - 1);
        if self.segments[i].t_start() > t {
            i = self.segment_index(t);
        }
        while i + 1 < self.segments.len() && self.segments[i + 1].t_start() <= t {
            i += 1;
        }
        *hint = i;
        Ok(self.sample_segment(&self.segments[i], t))
    }

    fn sample_segment<'a>(&'a self, seg: &'a Segment, t: f64) -> PathSample<'a> {
        let cfg = &self.config;
        match seg {
            Segment::Body {
                t_start,
                duration,
                amplitude,
            } => {
                let s = (std::f64::consts::PI * (t - t_start) / duration).sin();
                PathSample {
                    target: Target::Single(amplitude * s * s),
                    phase: Phase::Body,
                    choice: None,
                }
            }
            Segment::Choice(c) => {
                let (target, phase) = if t < c.t_fork {
                    (Target::Single(0.0), Phase::ChoicePre)
                } else if t < c.t_merge {
                    let off = cfg.x_max * min_jerk_shape((t - c.t_fork) / cfg.fork_ramp);
                    (fork(off), Phase::ChoicePost)
                } else {
                    let off = cfg.x_max * (1.0 - min_jerk_shape((t - c.t_merge) / cfg.merge));
                    (fork(off), Phase::Merge)
                };
                PathSample {
                    target,
                    phase,
                    choice: Some(c),
                }
            }
        }
    }
}

fn fork(offset: f64) -> Target {
    Target::Fork {
        left: -offset,
        right: offset,
    }
}

pub fn target_at(script: &PathScript, t: f64) -> Result<Target> {
    Ok(script.sample(t)?.target)
}

/// Cursor color for a distance (mm) to the closest path.
pub fn feedback_color(distance: f64) -> Result<Color> {
    if !(distance >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "distance must be >= 0, got {distance}"
        )));
    }
    Ok(if distance < 5.0 {
        Color::Green
    } else if distance < 15.0 {
        Color::Orange
    } else {
        Color::Red
    })
}

/// Length of the averaging window at the end of the post-fork straight.
pub const OUTCOME_WINDOW_S: f64 = 0.5;

/// Side the cursor ended on: sign of its mean over the last 0.5 s of the
/// post-fork straight section.
pub fn actual_direction(log: &TrialLog, choice: &ChoiceSpec) -> Result<Direction> {
    let samples = log.cursor_between(choice.t_merge - OUTCOME_WINDOW_S, choice.t_merge)?;
    Ok(direction_of_mean(&samples))
}

pub(crate) fn direction_of_mean(samples: &[f64]) -> Direction {
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    match Side::of(mean) {
        Some(s) => s.into(),
        None => Direction::Undecided,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn script(seed: u64) -> PathScript {
        generate_script(seed, &ScriptConfig::default()).unwrap()
    }

    #[test]
    fn default_script_layout() {
        let s = script(7);
        assert_eq!(s.choices().count(), 16);
        assert_eq!(s.duration(), 120.0);
        assert_eq!(s.segments.first().unwrap().t_start(), 0.0);
        assert_eq!(s.segments.last().unwrap().t_end(), 120.0);
        for w in s.segments.windows(2) {
            assert!((w[0].t_end() - w[1].t_start()).abs() < 1e-9);
        }
        for c in s.choices() {
            assert!((c.t_fork - c.t_start - 1.0).abs() < 1e-12);
            assert!((c.t_merge - c.t_fork - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let a = serde_json::to_string(&script(42)).unwrap();
        let b = serde_json::to_string(&script(42)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, serde_json::to_string(&script(43)).unwrap());
    }

    #[test]
    fn highlights_follow_decision_type() {
        for seed in 0..50 {
            for c in script(seed).choices() {
                match c.decision_type {
                    DecisionType::Same => {
                        assert_eq!(c.highlight_1, Some(c.side));
                        assert_eq!(c.highlight_2, Some(c.side));
                    }
                    DecisionType::Oppo => {
                        assert!(c.highlight_1.is_some() && c.highlight_2.is_some());
                        assert_ne!(c.highlight_1, c.highlight_2);
                    }
                    DecisionType::One => {
                        assert!(c.highlight_1.is_some() ^ c.highlight_2.is_some());
                    }
                }
            }
        }
    }

    #[test]
    fn targets_in_a_choice() {
        let s = script(1);
        let c = *s.choices().next().unwrap();
        assert_eq!(target_at(&s, c.t_start + 0.5).unwrap(), Target::Single(0.0));
        assert_eq!(
            target_at(&s, c.t_fork + 3.0 - 1e-9).unwrap(),
            Target::Fork {
                left: -25.0,
                right: 25.0
            }
        );
        match target_at(&s, c.t_fork + 0.2).unwrap() {
            Target::Fork { left, right } => {
                assert_eq!(left, -right);
                assert!(right > 0.0 && right < 25.0);
            }
            t => panic!("expected fork, got {t:?}"),
        }
        assert_eq!(s.sample(c.t_merge).unwrap().phase, Phase::Merge);
    }

    #[test]
    fn target_out_of_range() {
        let s = script(1);
        assert!(target_at(&s, -0.001).is_err());
        assert!(target_at(&s, 120.001).is_err());
        assert!(target_at(&s, 120.0).is_ok());
    }

    #[test]
    fn path_stays_within_x_max() {
        let s = script(9);
        let mut hint = 0;
        for k in 0..=120_000 {
            let t = k as f64 * 0.001;
            let p = s.sample_from(t, &mut hint).unwrap();
            assert_eq!(p, s.sample(t).unwrap());
            match p.target {
                Target::Single(x) => assert!(x.abs() <= 25.0),
                Target::Fork { left, right } => {
                    assert_eq!(left, -right);
                    assert!(right.abs() <= 25.0);
                }
            }
        }
    }

    #[test]
    fn colors() {
        assert_eq!(feedback_color(3.0).unwrap(), Color::Green);
        assert_eq!(feedback_color(7.0).unwrap(), Color::Orange);
        assert_eq!(feedback_color(12.0).unwrap(), Color::Orange);
        assert_eq!(feedback_color(5.0).unwrap(), Color::Orange);
        assert_eq!(feedback_color(15.0).unwrap(), Color::Red);
        assert!(feedback_color(-1.0).is_err());
    }

    #[test]
    fn infeasible_config_names_constraint() {
        let cfg = ScriptConfig {
            choices_per_trial: 30,
            ..ScriptConfig::default()
        };
        let err = generate_script(1, &cfg).unwrap_err().to_string();
        assert!(err.contains("exceeds trial_duration_s"), "{err}");
    }

    #[test]
    fn mean_direction() {
        assert_eq!(direction_of_mean(&[25.0; 10]), Direction::Right);
        assert_eq!(direction_of_mean(&[-25.0; 10]), Direction::Left);
        assert_eq!(direction_of_mean(&[1.0, -1.0]), Direction::Undecided);
    }
}
