//! Command-line tools and the live streaming service around `glovespot-core`.

pub mod cli;
pub mod protocol;
pub mod server;
pub mod session;
