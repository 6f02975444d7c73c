//! Choice-direction predictors evaluated over the pre-fork analysis zone.
//!
//! Six windowed statistics (cursor position and velocity at the window
//! end and on average, mean summed force, signed RMS deviation) plus the
//! first-crossing predictor, which reports the earliest time a handle
//! leaves the `±x_th` band.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::TrialLog;
use crate::path::{ChoiceSpec, Direction, Side, X_MAX_MM};

/// Default analysis window, seconds after choice start.
pub const DEFAULT_T_START: f64 = 0.0;
pub const DEFAULT_T_STOP: f64 = 0.9;
/// Half-width of the central-difference velocity estimate.
pub const VELOCITY_HALF_WINDOW_S: f64 = 0.005;
/// 30 % of the center-to-branch distance.
pub const DEFAULT_CROSSING_THRESHOLD_MM: f64 = 0.3 * X_MAX_MM;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PredictorKind {
    #[serde(rename = "XT")]
    Xt,
    #[serde(rename = "XM")]
    Xm,
    #[serde(rename = "VT")]
    Vt,
    #[serde(rename = "VM")]
    Vm,
    #[serde(rename = "FM")]
    Fm,
    #[serde(rename = "SRMS")]
    Srms,
    #[serde(rename = "1C")]
    FirstCrossing,
}

impl PredictorKind {
    pub const WINDOWED: [PredictorKind; 6] = [
        PredictorKind::Xt,
        PredictorKind::Xm,
        PredictorKind::Vt,
        PredictorKind::Vm,
        PredictorKind::Fm,
        PredictorKind::Srms,
    ];

    pub const ALL: [PredictorKind; 7] = [
        PredictorKind::Xt,
        PredictorKind::Xm,
        PredictorKind::Vt,
        PredictorKind::Vm,
        PredictorKind::Fm,
        PredictorKind::Srms,
        PredictorKind::FirstCrossing,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PredictorKind::Xt => "XT",
            PredictorKind::Xm => "XM",
            PredictorKind::Vt => "VT",
            PredictorKind::Vm => "VM",
            PredictorKind::Fm => "FM",
            PredictorKind::Srms => "SRMS",
            PredictorKind::FirstCrossing => "1C",
        }
    }
}

impl fmt::Display for PredictorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which series the first-crossing scan reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrossingSource {
    #[default]
    Handles,
    Cursor,
}

/// Uniformly sampled series around one fork.
///
/// Times are relative to the choice start; sample `k` sits at
/// `t_start + k * dt`. The `horizon_*` series extend the same sampling up
/// to the merge for the first-crossing scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChoiceWindow {
    pub dt: f64,
    pub t_start: f64,
    pub t_stop: f64,
    pub t_choice: f64,
    pub cursor: Vec<f64>,
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub velocity: Vec<f64>,
    pub force_sum: Vec<f64>,
    pub horizon_x1: Vec<f64>,
    pub horizon_x2: Vec<f64>,
    pub horizon_cursor: Vec<f64>,
    pub truth: Direction,
}

impl ChoiceWindow {
    /// Builds a window from raw series; the velocity is derived from the
    /// cursor. The horizon defaults to the window itself when empty.
    #[allow(clippy::too_many_arguments)]
    pub fn from_series(
        dt: f64,
        t_start: f64,
        cursor: Vec<f64>,
        x1: Vec<f64>,
        x2: Vec<f64>,
        force_sum: Vec<f64>,
        horizon: Option<(Vec<f64>, Vec<f64>, Vec<f64>)>,
        truth: Direction,
    ) -> Result<Self> {
        let n = cursor.len();
        if n == 0 {
            return Err(Error::EmptyInput("choice window"));
        }
        if x1.len() != n || x2.len() != n || force_sum.len() != n {
            return Err(Error::InvalidArgument(
                "choice window series lengths differ".into(),
            ));
        }
        if !(dt > 0.0) {
            return Err(Error::InvalidArgument("window dt must be > 0".into()));
        }
        let (horizon_x1, horizon_x2, horizon_cursor) =
            horizon.unwrap_or_else(|| (x1.clone(), x2.clone(), cursor.clone()));
        if horizon_x1.len() < n
            || horizon_x2.len() != horizon_x1.len()
            || horizon_cursor.len() != horizon_x1.len()
        {
            return Err(Error::InvalidArgument(
                "horizon series must be equal-length and cover the window".into(),
            ));
        }
        let velocity = central_difference(&cursor, dt, VELOCITY_HALF_WINDOW_S);
        Ok(Self {
            dt,
            t_start,
            t_stop: t_start + (n - 1) as f64 * dt,
            t_choice: 1.0,
            cursor,
            x1,
            x2,
            velocity,
            force_sum,
            horizon_x1,
            horizon_x2,
            horizon_cursor,
            truth,
        })
    }

    pub fn len(&self) -> usize {
        self.cursor.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cursor.is_empty()
    }

    fn time_of(&self, k: usize) -> f64 {
        self.t_start + k as f64 * self.dt
    }

    /// Copy with every position, velocity and force negated.
    pub fn mirrored(&self) -> Self {
        let neg = |v: &Vec<f64>| v.iter().map(|x| -x).collect::<Vec<_>>();
        Self {
            cursor: neg(&self.cursor),
            x1: neg(&self.x1),
            x2: neg(&self.x2),
            velocity: neg(&self.velocity),
            force_sum: neg(&self.force_sum),
            horizon_x1: neg(&self.horizon_x1),
            horizon_x2: neg(&self.horizon_x2),
            horizon_cursor: neg(&self.horizon_cursor),
            truth: match self.truth {
                Direction::Left => Direction::Right,
                Direction::Right => Direction::Left,
                Direction::Undecided => Direction::Undecided,
            },
            ..self.clone()
        }
    }
}

/// Central differences with half-width `half_window` seconds, shrinking
/// toward one-sided differences at the ends.
pub fn central_difference(x: &[f64], dt: f64, half_window: f64) -> Vec<f64> {
    let n = x.len();
    if n < 2 {
        return vec![0.0; n];
    }
    let h = ((half_window / dt).round() as usize).max(1);
    (0..n)
        .map(|k| {
            let lo = k.saturating_sub(h);
            let hi = (k + h).min(n - 1);
            (x[hi] - x[lo]) / ((hi - lo) as f64 * dt)
        })
        .collect()
}

/// Cuts the analysis window `[t_start, t_stop]` (seconds after choice
/// start) out of a trial log, with positions relative to the path center at
/// choice start. The horizon runs to the end of the post-fork straight.
pub fn extract_window(
    log: &TrialLog,
    choice: &ChoiceSpec,
    t_start: f64,
    t_stop: f64,
) -> Result<ChoiceWindow> {
    if !(t_stop > t_start) {
        return Err(Error::InvalidArgument(format!(
            "window needs t_stop > t_start (got {t_start}, {t_stop})"
        )));
    }
    let horizon_end = (choice.t_merge - choice.t_start).max(t_stop);
    let frames = log.frames_between(choice.t_start + t_start, choice.t_start + horizon_end)?;
    let window_frames = log.frames_between(choice.t_start + t_start, choice.t_start + t_stop)?;
    let n = window_frames.len();
    let center = log.header.script.sample(choice.t_start)?.target.closest(0.0);

    let shift = |v: f64| v - center;
    let cursor: Vec<f64> = frames[..n].iter().map(|f| shift(f.cursor_x)).collect();
    let x1: Vec<f64> = frames[..n].iter().map(|f| shift(f.state.x1)).collect();
    let x2: Vec<f64> = frames[..n].iter().map(|f| shift(f.state.x2)).collect();
    let force_sum = frames[..n].iter().map(|f| f.state.f1 + f.state.f2).collect();
    let horizon = (
        frames.iter().map(|f| shift(f.state.x1)).collect(),
        frames.iter().map(|f| shift(f.state.x2)).collect(),
        frames.iter().map(|f| shift(f.cursor_x)).collect(),
    );
    let first_t = frames[0].state.t - choice.t_start;
    let truth = crate::path::actual_direction(log, choice).unwrap_or(Direction::Undecided);
    ChoiceWindow::from_series(
        log.frame_period(),
        first_t,
        cursor,
        x1,
        x2,
        force_sum,
        Some(horizon),
        truth,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Call {
    Left,
    Right,
    NoCall,
}

impl Call {
    pub fn side(self) -> Option<Side> {
        match self {
            Call::Left => Some(Side::Left),
            Call::Right => Some(Side::Right),
            Call::NoCall => None,
        }
    }
}

impl From<Side> for Call {
    fn from(s: Side) -> Self {
        match s {
            Side::Left => Call::Left,
            Side::Right => Call::Right,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub kind: PredictorKind,
    pub call: Call,
    /// Seconds after choice start at which the predictor committed.
    pub decision_time: f64,
    /// The statistic was exactly zero and the call fell back to Right.
    pub tie: bool,
    pub statistic: f64,
}

/// Raw value of one windowed statistic.
pub fn statistic(kind: PredictorKind, w: &ChoiceWindow) -> Result<f64> {
    if w.is_empty() {
        return Err(Error::EmptyInput("choice window"));
    }
    let n = w.len() as f64;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / n;
    Ok(match kind {
        PredictorKind::Xt => w.cursor[w.len() - 1],
        PredictorKind::Xm => mean(&w.cursor),
        PredictorKind::Vt => w.velocity[w.len() - 1],
        PredictorKind::Vm => mean(&w.velocity),
        PredictorKind::Fm => mean(&w.force_sum),
        PredictorKind::Srms => {
            let xm = mean(&w.cursor);
            w.cursor
                .iter()
                .map(|x| (x - xm) * (x - xm).abs())
                .sum::<f64>()
                / n
        }
        PredictorKind::FirstCrossing => {
            return Err(Error::InvalidArgument(
                "first crossing is not a windowed statistic".into(),
            ))
        }
    })
}

/// Windowed predictor: sign of the statistic at `t_stop`.
pub fn predict(kind: PredictorKind, w: &ChoiceWindow) -> Result<Prediction> {
    let value = statistic(kind, w)?;
    let (call, tie) = match Side::of(value) {
        Some(s) => (s.into(), false),
        None if value.is_nan() => {
            return Err(Error::UndefinedStatistic(format!("{kind} is NaN")))
        }
        None => (Call::Right, true),
    };
    Ok(Prediction {
        kind,
        call,
        decision_time: w.t_stop,
        tie,
        statistic: value,
    })
}

/// Earliest sample at which a handle (or the cursor) leaves `[-x_th, x_th]`.
pub fn first_crossing(w: &ChoiceWindow, x_th: f64, source: CrossingSource) -> Result<Prediction> {
    if !(x_th > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "crossing threshold must be > 0, got {x_th}"
        )));
    }
    let hit = |k: usize| -> Option<f64> {
        match source {
            CrossingSource::Handles => {
                let (a, b) = (w.horizon_x1[k], w.horizon_x2[k]);
                match (a.abs() > x_th, b.abs() > x_th) {
                    (true, true) => Some(if b.abs() > a.abs() { b } else { a }),
                    (true, false) => Some(a),
                    (false, true) => Some(b),
                    (false, false) => None,
                }
            }
            CrossingSource::Cursor => {
                let c = w.horizon_cursor[k];
                (c.abs() > x_th).then_some(c)
            }
        }
    };
    let found = (0..w.horizon_x1.len()).find_map(|k| hit(k).map(|x| (k, x)));
    Ok(match found {
        Some((k, x)) => Prediction {
            kind: PredictorKind::FirstCrossing,
            call: Side::of(x).expect("beyond a positive threshold").into(),
            decision_time: w.time_of(k),
            tie: false,
            statistic: x,
        },
        None => Prediction {
            kind: PredictorKind::FirstCrossing,
            call: Call::NoCall,
            decision_time: w.time_of(w.horizon_x1.len() - 1),
            tie: false,
            statistic: 0.0,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictorReport {
    pub kind: PredictorKind,
    pub n: usize,
    pub correct: usize,
    pub accuracy: f64,
    pub call_rate: f64,
    /// Mean decision time over calls; for 1C this is the mean crossing time.
    pub mean_decision_time: Option<f64>,
    pub ties: usize,
}

/// Accuracy of one predictor against ground truth. NoCall counts as wrong.
pub fn evaluate(predictions: &[Prediction], truths: &[Side]) -> Result<PredictorReport> {
    if predictions.len() != truths.len() {
        return Err(Error::InvalidArgument(format!(
            "{} predictions for {} truths",
            predictions.len(),
            truths.len()
        )));
    }
    let Some(first) = predictions.first() else {
        return Err(Error::EmptyInput("predictions"));
    };
    let n = predictions.len();
    let correct = predictions
        .iter()
        .zip(truths)
        .filter(|(p, t)| p.call.side() == Some(**t))
        .count();
    let calls: Vec<f64> = predictions
        .iter()
        .filter(|p| p.call != Call::NoCall)
        .map(|p| p.decision_time)
        .collect();
    Ok(PredictorReport {
        kind: first.kind,
        n,
        correct,
        accuracy: correct as f64 / n as f64,
        call_rate: calls.len() as f64 / n as f64,
        mean_decision_time: (!calls.is_empty())
            .then(|| calls.iter().sum::<f64>() / calls.len() as f64),
        ties: predictions.iter().filter(|p| p.tie).count(),
    })
}

/// Options for running all seven predictors over a set of windows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SuiteOptions {
    #[serde(rename = "t_start_s")]
    pub t_start: f64,
    #[serde(rename = "t_stop_s")]
    pub t_stop: f64,
    #[serde(rename = "crossing_threshold_mm")]
    pub crossing_threshold: f64,
    pub crossing_source: CrossingSource,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            t_start: DEFAULT_T_START,
            t_stop: DEFAULT_T_STOP,
            crossing_threshold: DEFAULT_CROSSING_THRESHOLD_MM,
            crossing_source: CrossingSource::Handles,
        }
    }
}

/// All seven predictions for one window, in [`PredictorKind::ALL`] order.
pub fn predict_all(w: &ChoiceWindow, opts: &SuiteOptions) -> Result<Vec<Prediction>> {
    let mut out = PredictorKind::WINDOWED
        .iter()
        .map(|k| predict(*k, w))
        .collect::<Result<Vec<_>>>()?;
    out.push(first_crossing(w, opts.crossing_threshold, opts.crossing_source)?);
    Ok(out)
}

/// Evaluates every predictor over windows with a decided ground truth.
pub fn evaluate_suite(windows: &[ChoiceWindow], opts: &SuiteOptions) -> Result<Vec<PredictorReport>> {
    let decided: Vec<(&ChoiceWindow, Side)> = windows
        .iter()
        .filter_map(|w| w.truth.side().map(|s| (w, s)))
        .collect();
    if decided.is_empty() {
        return Err(Error::EmptyInput("decided choice windows"));
    }
    let truths: Vec<Side> = decided.iter().map(|(_, s)| *s).collect();
    let all = decided
        .iter()
        .map(|(w, _)| predict_all(w, opts))
        .collect::<Result<Vec<_>>>()?;
    (0..PredictorKind::ALL.len())
        .map(|i| {
            let preds: Vec<Prediction> = all.iter().map(|p| p[i]).collect();
            evaluate(&preds, &truths)
        })
        .collect()
}

/// CSV with one row per predictor.
pub fn reports_to_csv(reports: &[PredictorReport]) -> String {
    let mut out = String::from("name,accuracy,mean_decision_time_s,call_rate\n");
    for r in reports {
        let t = r
            .mean_decision_time
            .map(|t| format!("{t:.6}"))
            .unwrap_or_default();
        out.push_str(&format!(
            "{},{:.6},{},{:.6}\n",
            r.kind.name(),
            r.accuracy,
            t,
            r.call_rate
        ));
    }
    out
}
