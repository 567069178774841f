use std::path::Path;

use serde::Serialize;

use super::ReportingError;

/// Pretty JSON with object keys in sorted order. Non-finite floats become
/// `null`.
pub fn to_sorted_json<T: Serialize>(value: &T) -> Result<String, ReportingError> {
    // serde_json's default map is ordered, so a round trip through Value sorts
    let v = serde_json::to_value(value)?;
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<(), ReportingError> {
    let s = to_sorted_json(value)?;
    std::fs::write(path, s).map_err(|e| ReportingError::io(path, e))
}
