use std::fs::{self, Permissions};
use std::io::{self, Write};
use std::path::Path;
use std::time::SystemTime;

use tempfile::NamedTempFile;

/// Writes `bytes` to a temporary file beside `path`, then renames it into
/// place. Readers see either the old file or the complete new one.
pub fn write_atomic(
    path: &Path,
    bytes: &[u8],
    keep: Option<(Permissions, SystemTime)>,
) -> io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    if let Some((perms, mtime)) = keep {
        tmp.as_file().set_permissions(perms)?;
        tmp.as_file().set_modified(mtime)?;
    }
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Rewrites an existing file in place, keeping its permissions and mtime.
pub fn replace_preserving(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let meta = fs::metadata(path)?;
    write_atomic(path, bytes, Some((meta.permissions(), meta.modified()?)))
}
