use std::sync::Arc;
use std::time::Instant;

use glovespot_core::domain::{RobotCommand, SensorFrame};
use glovespot_core::robot::{RobotState, SimConfig};
use glovespot_core::spotter::{CascadeModel, Decision, Spotter};
use glovespot_core::Error;

use crate::protocol::{SpotReply, NON_COMMUNICATIVE};

/// One glove stream driving one simulated robot. Both the offline `spot`
/// command and live sessions go through [`Session::process`].
pub struct Session {
    pub id: u64,
    model: Arc<CascadeModel>,
    spotter: Spotter,
    robot: RobotState,
    sim: SimConfig,
    frames: u64,
    started: Instant,
}

impl Session {
    pub fn new(id: u64, model: Arc<CascadeModel>, sim: SimConfig) -> Self {
        Self {
            id,
            spotter: Spotter::new(&model),
            model,
            robot: RobotState::new(),
            sim,
            frames: 0,
            started: Instant::now(),
        }
    }

    pub fn reset(&mut self) {
        self.spotter.reset();
        self.robot = RobotState::new();
        self.frames = 0;
        self.started = Instant::now();
    }

    pub fn frames(&self) -> u64 {
        self.frames
    }

    pub fn uptime(&self) -> std::time::Duration {
        self.started.elapsed()
    }

    pub fn robot(&self) -> &RobotState {
        &self.robot
    }

    /// Classifies the frame, applies any emitted command, then advances the
    /// robot by one frame period.
    pub fn process(&mut self, frame: SensorFrame) -> Result<SpotReply, Error> {
        let out = self.spotter.step(&self.model, frame)?;
        self.frames += 1;
        if let Some(cmd) = out.command {
            match self.robot.apply_command(cmd) {
                Ok(()) if cmd == RobotCommand::Loop => {
                    tracing::info!(
                        session = self.id,
                        t = frame.t,
                        "loop requested; no action defined"
                    )
                }
                Ok(()) => {}
                Err(e) => tracing::warn!(session = self.id, t = frame.t, "{e}"),
            }
        }
        self.robot.tick(&self.sim);
        let (decision, confidence) = match out.result.decision {
            Decision::Communicative { label, confidence } => {
                (format!("G{label}"), Some(confidence))
            }
            Decision::NonCommunicative { .. } => (NON_COMMUNICATIVE.to_string(), None),
        };
        Ok(SpotReply {
            t: frame.t,
            decision,
            label: out.active.map(|g| format!("G{g}")),
            confidence,
            command: out.command,
            robot: self.robot.snapshot(frame.t),
        })
    }
}
