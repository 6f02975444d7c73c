//! Pointer-driven handle for live play: a virtual spring-damper between a
//! pointer position and the handle turns position samples into force.

use std::collections::VecDeque;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::agent::{pd_force, Agent, AgentChoiceRecord, AgentKind, Observation};
use crate::error::Result;

pub const GRAB_KP_N_PER_M: f64 = 300.0;
pub const GRAB_KD_NS_PER_M: f64 = 5.0;
pub const GRAB_MAX_FORCE_N: f64 = 5.0;

/// A pointer sample stamped with the simulation time it takes effect.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointerInput {
    pub t_s: f64,
    pub x_mm: f64,
}

/// Queue shared between the network side and the simulation loop.
pub type InputQueue = Arc<Mutex<VecDeque<PointerInput>>>;

#[derive(Debug, Clone)]
pub struct PointerAgent {
    queue: InputQueue,
    current: Option<f64>,
    applied: Vec<PointerInput>,
}

impl PointerAgent {
    pub fn new(queue: InputQueue) -> Self {
        Self {
            queue,
            current: None,
            applied: Vec::new(),
        }
    }

    /// Agent fed from a recorded input stream.
    pub fn replay(inputs: &[PointerInput]) -> Self {
        Self::new(Arc::new(Mutex::new(inputs.iter().copied().collect())))
    }

    /// Inputs consumed so far, in order.
    pub fn applied(&self) -> &[PointerInput] {
        &self.applied
    }
}

impl Agent for PointerAgent {
    fn kind(&self) -> AgentKind {
        AgentKind::Pointer
    }

    fn force(&mut self, obs: &Observation) -> Result<f64> {
        {
            let mut q = self.queue.lock().unwrap_or_else(|p| p.into_inner());
            while let Some(input) = q.front().copied() {
                if input.t_s > obs.t + 1e-9 {
                    break;
                }
                q.pop_front();
                self.current = Some(input.x_mm);
                self.applied.push(input);
            }
        }
        Ok(match self.current {
            Some(x) => pd_force(
                GRAB_KP_N_PER_M,
                GRAB_KD_NS_PER_M,
                x - obs.own_x,
                -obs.own_v,
                GRAB_MAX_FORCE_N,
            ),
            None => 0.0,
        })
    }

    fn choice_records(&self) -> Vec<AgentChoiceRecord> {
        Vec::new()
    }
}
