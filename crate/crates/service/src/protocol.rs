//! JSON messages exchanged on the `/session` channel, one per text frame.

use serde::{Deserialize, Serialize};

use glovespot_core::domain::RobotCommand;
use glovespot_core::robot::RobotSnapshot;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClientMessage {
    Frame {
        t: u64,
        sensors: Vec<f64>,
        button: bool,
    },
    Reset,
}

/// Per-frame answer. `decision` is the cascade's verdict for this frame
/// alone (`"G2"` or `"NonCommunicative"`); `label` is the debounced gesture.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpotReply {
    pub t: u64,
    pub decision: String,
    pub label: Option<String>,
    pub confidence: Option<f64>,
    pub command: Option<RobotCommand>,
    pub robot: RobotSnapshot,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Spot {
        #[serde(flatten)]
        reply: SpotReply,
        queue_depth: usize,
    },
    Reset,
    Error {
        message: String,
    },
}

impl ServerMessage {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("server messages are always serialisable")
    }
}

pub const NON_COMMUNICATIVE: &str = "NonCommunicative";
