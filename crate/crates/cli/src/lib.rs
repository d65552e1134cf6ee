//! Operator surface: command implementations, run configuration, the HTTP
//! service, and the service-backed tool transport. The `lbd` binary is a
//! thin argument-parsing shell over this library.

pub mod commands;
pub mod config;
pub mod http_tools;
pub mod service;
