//! Fixture helpers shared by the benchmarks.

use std::path::PathBuf;

/// Path of a file under the workspace `data/` directory.
pub fn data_file(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}
