//! Deterministic result emission: JSON documents and RFC-4180-style CSV
//! with `.` decimal separators and 10 significant digits. Headers carry no
//! timestamps, so identical runs produce byte-identical bodies.

use crate::error::AppError;
use serde::Serialize;
use std::path::Path;

/// Formats a float with 10 significant digits, locale-independent.
pub fn sig10(v: f64) -> String {
    format!("{v:.9e}")
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), AppError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| AppError::Io(std::io::Error::other(e)))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>, AppError> {
    let file = std::fs::File::create(path)?;
    Ok(csv::Writer::from_writer(file))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig10_has_ten_significant_digits() {
        assert_eq!(sig10(202570.71812345), "2.025707181e5");
        assert_eq!(sig10(0.075), "7.500000000e-2");
        assert_eq!(sig10(-1.0), "-1.000000000e0");
    }
}
