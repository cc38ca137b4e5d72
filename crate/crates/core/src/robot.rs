//! Simulated end-effector driven by robot commands.
//!
//! Motion commands are velocity set-points that stay active until replaced or
//! stopped; each [`RobotState::tick`] integrates one frame period.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::domain::{RobotCommand, FRAME_PERIOD_MS};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Metres per second.
    pub linear_speed: f64,
    /// Radians per second.
    pub angular_speed: f64,
    /// Seconds per tick.
    pub frame_dt: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            linear_speed: 0.05,
            angular_speed: 0.2,
            frame_dt: FRAME_PERIOD_MS as f64 / 1000.0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(self.linear_speed) || !ok(self.angular_speed) || !ok(self.frame_dt) {
            return Err(Error::InvalidInput(format!(
                "simulation speeds and frame period must be positive: {self:?}"
            )));
        }
        Ok(())
    }
}

/// Position in metres and per-axis orientation angles in radians.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EffectorPose {
    pub position: [f64; 3],
    pub orientation: [f64; 3],
}

/// Maps an angle into (-pi, pi]. Angles already in range are returned untouched.
pub fn wrap_angle(a: f64) -> f64 {
    if a > -PI && a <= PI {
        return a;
    }
    let r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RobotState {
    pub pose: EffectorPose,
    pub saved_pose: Option<EffectorPose>,
    pub vacuum: bool,
    pub active_command: Option<RobotCommand>,
    /// Loop has no defined behaviour; requests are only counted.
    pub loop_requests: u64,
}

/// Axis index (0..3 linear, 3..6 angular) and direction of a motion command.
fn motion_axis(command: RobotCommand) -> Option<(usize, f64)> {
    use RobotCommand::*;
    Some(match command {
        XPlus => (0, 1.0),
        XMinus => (0, -1.0),
        YPlus => (1, 1.0),
        YMinus => (1, -1.0),
        ZPlus => (2, 1.0),
        ZMinus => (2, -1.0),
        RxPlus => (3, 1.0),
        RxMinus => (3, -1.0),
        RyPlus => (4, 1.0),
        RyMinus => (4, -1.0),
        RzPlus => (5, 1.0),
        RzMinus => (5, -1.0),
        _ => return None,
    })
}

impl RobotState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Executes a command. On error the state is left unchanged.
    pub fn apply_command(&mut self, command: RobotCommand) -> Result<()> {
        use RobotCommand::*;
        match command {
            Stop => self.active_command = None,
            SavePose => self.saved_pose = Some(self.pose),
            ReturnToSaved => self.pose = self.saved_pose.ok_or(Error::NoSavedPose)?,
            Loop => self.loop_requests += 1,
            VacuumOn => self.vacuum = true,
            VacuumOff => self.vacuum = false,
            motion => self.active_command = Some(motion),
        }
        Ok(())
    }

    /// Integrates the active motion command over one frame period.
    pub fn tick(&mut self, config: &SimConfig) {
        let Some((axis, sign)) = self.active_command.and_then(motion_axis) else {
            return;
        };
        if axis < 3 {
            self.pose.position[axis] += sign * config.linear_speed * config.frame_dt;
        } else {
            let a = &mut self.pose.orientation[axis - 3];
            *a = wrap_angle(*a + sign * config.angular_speed * config.frame_dt);
        }
    }

    pub fn is_finite(&self) -> bool {
        let finite = |p: &EffectorPose| {
            p.position
                .iter()
                .chain(&p.orientation)
                .all(|v| v.is_finite())
        };
        finite(&self.pose) && self.saved_pose.as_ref().is_none_or(finite)
    }

    pub fn snapshot(&self, t: u64) -> RobotSnapshot {
        RobotSnapshot {
            t,
            position: self.pose.position,
            orientation: self.pose.orientation,
            vacuum: self.vacuum,
            active_command: self.active_command,
            saved: self.saved_pose.is_some(),
        }
    }
}

/// Immutable copy of the robot state published once per frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobotSnapshot {
    pub t: u64,
    pub position: [f64; 3],
    pub orientation: [f64; 3],
    pub vacuum: bool,
    pub active_command: Option<RobotCommand>,
    pub saved: bool,
}
