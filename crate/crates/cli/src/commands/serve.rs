//! `lbd serve`: expose the query APIs of one snapshot over HTTP.

use std::path::PathBuf;
use std::sync::Arc;

use clap::Args;

use crate::service::{serve_blocking, ServiceState};

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Knowledge-base snapshot directory
    #[arg(long)]
    pub kb: PathBuf,
    /// Port to listen on (0 picks a free port)
    #[arg(long)]
    pub port: u16,
}

pub fn cmd_serve(args: &ServeArgs) -> anyhow::Result<()> {
    let state = Arc::new(ServiceState::from_snapshot(&args.kb)?);
    serve_blocking(state, args.port)
}
