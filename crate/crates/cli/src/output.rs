//! Atomic file output: content is written to a temporary file in the target
//! directory and renamed into place, so a failed run never leaves a partial
//! file behind.

use std::io::Write;
use std::path::Path;

use crate::CliError;

pub fn write_atomic(path: &Path, content: &str) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .map_err(|e| CliError::usage(format!("cannot write into {}: {e}", dir.display())))?;
    tmp.write_all(content.as_bytes())?;
    tmp.flush()?;
    tmp.persist(path)
        .map_err(|e| CliError::failure(format!("cannot move output to {}: {}", path.display(), e.error)))?;
    Ok(())
}

/// CSV text with a header row; `None` cells are left empty.
pub fn csv(header: &[&str], rows: &[Vec<Option<String>>]) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for row in rows {
        let cells: Vec<&str> = row.iter().map(|c| c.as_deref().unwrap_or("")).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}
