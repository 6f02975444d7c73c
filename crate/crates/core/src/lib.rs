//! Deterministic 1-DOF haptic co-manipulation simulator.
//!
//! Two handles share a virtual object whose position is their mean. Agents
//! (a synthetic human, the leader/follower robot partner, or a live
//! pointer) push on the handles while a scripted path forks left or right.
//! The crate covers the dynamics, path scripts, intention predictors,
//! tracking metrics and the experiment harness that ties them together.

pub mod agent;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod partner;
pub mod path;
pub mod pointer;
pub mod predict;
pub mod sim;
pub mod special;
pub mod surrogate;
pub mod trajectory;

pub use agent::{Agent, AgentChoiceRecord, AgentKind, ChoiceContext, Observation};
pub use error::{Error, Result};
pub use harness::{
    run_experiment, run_trial, Condition, ExperimentConfig, Report, TrialConfig, TrialLog,
};
pub use metrics::{performance, rms, t_test, LeaderRole, PerformanceRecord, TTest, TTestKind};
pub use partner::{PartnerConfig, PartnerState, RobotPartner};
pub use path::{
    generate_script, ChoiceSpec, Color, DecisionType, Direction, PathScript, Phase, ScriptConfig,
    Side, Subject, Target,
};
pub use predict::{ChoiceWindow, Prediction, PredictorKind, PredictorReport};
pub use sim::{cursor_position, interaction_force, step_dyad, DyadState, Frame, SimParams};
pub use surrogate::{HumanSurrogate, SurrogateConfig};
pub use trajectory::{min_jerk, PlannedTrajectory};

