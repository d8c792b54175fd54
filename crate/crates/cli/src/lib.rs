//! Command-line front ends: the atlas exporter and the websocket service.

pub mod args;
pub mod server;
