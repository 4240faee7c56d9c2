//! Library surface of the pipeline front end. The binary and the
//! integration tests share the command implementations, configuration
//! and error mapping defined here.

pub mod commands;
pub mod config;
pub mod error;
