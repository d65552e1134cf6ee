//! Command implementations. Each command is a plain function so tests can
//! drive it without spawning a process.

pub mod eval;
pub mod ingest;
pub mod run;
pub mod serve;
pub mod testset;

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

pub(crate) fn open(path: &Path) -> anyhow::Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| anyhow::anyhow!("cannot open {}: {e}", path.display()))
}
