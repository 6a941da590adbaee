//! Report envelopes, output locks and file writes.

use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::ErrorKind;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::error::CliError;

pub const TOOL: &str = "affine-sphere";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Exclusive claim on an output path, released on drop.
#[derive(Debug)]
pub struct OutputLock {
    path: PathBuf,
}

impl OutputLock {
    pub fn acquire(target: &Path) -> Result<Self, CliError> {
        let mut name = target.as_os_str().to_owned();
        name.push(".lock");
        let path = PathBuf::from(name);
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(OutputLock { path }),
            Err(e) if e.kind() == ErrorKind::AlreadyExists => Err(CliError::Usage(format!(
                "{} is in use by another run (remove {} if it is stale)",
                target.display(),
                path.display()
            ))),
            Err(e) => Err(e.into()),
        }
    }
}

impl Drop for OutputLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

/// Locks every path up front so a clash is reported before any work.
pub fn lock_all(paths: &[&Path]) -> Result<Vec<OutputLock>, CliError> {
    paths.iter().map(|p| OutputLock::acquire(p)).collect()
}

pub fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, contents)?;
    Ok(())
}

/// JSON report with the tool version and the resolved config.
pub fn envelope(
    cfg: &RunConfig,
    result: impl Serialize,
    criteria: &BTreeMap<String, bool>,
) -> Result<String, CliError> {
    let result = serde_json::to_value(result).map_err(|e| CliError::Usage(e.to_string()))?;
    let doc: Value = json!({
        "tool": TOOL,
        "version": VERSION,
        "command": cfg.command,
        "config": cfg,
        "criteria": criteria,
        "passed": criteria.values().all(|ok| *ok),
        "result": result,
    });
    let mut s = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Usage(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn check_criteria(criteria: &BTreeMap<String, bool>) -> Result<(), CliError> {
    let failed: Vec<String> = criteria.iter().filter(|(_, ok)| !**ok).map(|(k, _)| k.clone()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Criteria(failed))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn second_lock_is_refused_until_release() {
        let dir = tempfile::tempdir().unwrap();
        let target = dir.path().join("report.json");
        let first = OutputLock::acquire(&target).unwrap();
        assert!(matches!(OutputLock::acquire(&target), Err(CliError::Usage(_))));
        drop(first);
        assert!(OutputLock::acquire(&target).is_ok());
    }
}
