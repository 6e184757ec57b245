pub mod augment;
pub mod eval;
pub mod loss;
pub mod neural;
pub mod synth;

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{io_at, CliError, CliResult};

/// Regular files in `dir` whose names end with `suffix`, sorted by name.
pub(crate) fn list_files(dir: &Path, suffix: &str) -> CliResult<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| io_at(dir, e))? {
        let entry = entry?;
        if !entry.file_type()?.is_file() {
            continue;
        }
        let name = entry.file_name();
        let Some(name) = name.to_str() else { continue };
        if name.ends_with(suffix) && name.len() > suffix.len() {
            out.push(entry.path());
        }
    }
    out.sort();
    Ok(out)
}

pub(crate) fn file_name(path: &Path) -> CliResult<String> {
    path.file_name()
        .and_then(|n| n.to_str())
        .map(str::to_string)
        .ok_or_else(|| CliError::invalid(format!("{}: not a UTF-8 file name", path.display())))
}

pub(crate) fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| io_at(dir, e))?;
    Ok(())
}
