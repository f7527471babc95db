//! Library side of the command-line tool: the JSON run configuration.

pub mod config;
