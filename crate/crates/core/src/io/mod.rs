//! Files: time tags, experiment configuration and sweep tables.

mod config;
mod ftag;
mod sweep_table;

pub use config::{AnalysisConfig, EmitterSection, ExperimentConfig, MichelsonConfig, OpticsConfig};
pub use ftag::{read_tags_from, read_time_tags, write_tags_to, write_time_tags, FTAG_MAGIC, RECORD_BYTES};
pub use sweep_table::{PowerSweepRow, PowerSweepTable};

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::Result;

/// Writes `bytes` to a sibling temporary file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = temp_sibling(path);
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(result?)
}

pub(crate) fn temp_sibling(path: &Path) -> std::path::PathBuf {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!(".{name}.{}.tmp", std::process::id()))
}
