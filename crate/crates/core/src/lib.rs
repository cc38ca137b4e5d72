//! Continuous hand-gesture spotting on a 22-sensor data-glove stream.
//!
//! Each glove reading is paired with the reading `n` frames earlier and fed to
//! a 44-44-K sigmoid network. A second network, trained on transition
//! (non-communicative) poses, can veto the first. Accepted gestures are
//! debounced and mapped to jog commands for a simulated robot end-effector.

pub mod domain;
pub mod error;
pub mod harness;
pub mod mlp;
pub mod robot;
pub mod spotter;
pub mod synth;

pub use error::{Error, Result};
