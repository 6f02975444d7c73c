//! What an agent sees each tick and how the harness drives it.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::path::{ChoiceSpec, Phase, Side, Subject, Target};

/// Per-tick observation handed to a force-producing agent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub t: f64,
    pub dt: f64,
    pub cursor_x: f64,
    pub own_x: f64,
    pub own_v: f64,
    /// Coupling force on this agent's handle, N (positive pushes right).
    pub interaction_force: f64,
    pub phase: Phase,
    pub target: Target,
    pub choice: Option<ChoiceContext>,
}

/// The current choice as seen by one participant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChoiceContext {
    pub index: usize,
    pub t_start: f64,
    pub t_fork: f64,
    pub t_merge: f64,
    pub highlight: Option<Side>,
}

impl ChoiceContext {
    pub fn for_subject(choice: &ChoiceSpec, subject: Subject) -> Self {
        Self {
            index: choice.index,
            t_start: choice.t_start,
            t_fork: choice.t_fork,
            t_merge: choice.t_merge,
            highlight: choice.highlight(subject),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    Surrogate,
    Robot,
    Pointer,
}

/// How one agent behaved in one choice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentChoiceRecord {
    pub index: usize,
    pub informed: bool,
    /// Time the agent began its choice movement, relative to choice start.
    pub start_time: Option<f64>,
    /// True when the agent moved on its own accord, false when it followed
    /// the partner's initiative.
    pub initiated: bool,
    pub final_side: Option<Side>,
    pub yielded: bool,
}

impl AgentChoiceRecord {
    pub(crate) fn new(index: usize, informed: bool) -> Self {
        Self {
            index,
            informed,
            start_time: None,
            initiated: false,
            final_side: None,
            yielded: false,
        }
    }
}

/// A force source attached to one handle.
pub trait Agent {
    fn kind(&self) -> AgentKind;

    /// Force command (N) for the coming tick.
    fn force(&mut self, obs: &Observation) -> Result<f64>;

    /// Records for every choice the agent has completed or entered so far.
    fn choice_records(&self) -> Vec<AgentChoiceRecord>;
}

/// PD force in N from mm-scale errors and SI gains, saturated to `limit`.
pub(crate) fn pd_force(kp: f64, kd: f64, x_err_mm: f64, v_err_mm_s: f64, limit: f64) -> f64 {
    (kp * x_err_mm * 1e-3 + kd * v_err_mm_s * 1e-3).clamp(-limit, limit)
}
