//! Arrival CSV files and JSON output helpers.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use keepalive_core::point_process::History;
use serde::Serialize;

use crate::{CliError, CliResult};

/// Formats a timestamp with 17 significant digits; parses back to the same
/// bits.
pub fn fmt_minutes(t: f64) -> String {
    format!("{t:.16e}")
}

/// Writes arrivals as a one-column CSV with a `t` header.
pub fn write_history(path: &Path, history: &History) -> CliResult<()> {
    let mut out = String::with_capacity(history.len() * 24 + 2);
    out.push_str("t\n");
    for &t in history.times() {
        out.push_str(&fmt_minutes(t));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| CliError::Data(format!("writing {}: {e}", path.display())))
}

/// Reads a one-column arrival CSV (header optional).
pub fn read_history(path: &Path) -> CliResult<History> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("reading {}: {e}", path.display())))?;
    let mut times = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || (lineno == 0 && trimmed == "t") {
            continue;
        }
        let t: f64 = trimmed.parse().map_err(|_| {
            CliError::Data(format!(
                "{}:{}: not a timestamp: {trimmed:?}",
                path.display(),
                lineno + 1
            ))
        })?;
        times.push(t);
    }
    History::from_times(times).map_err(CliError::from)
}

/// Serializes a value as pretty JSON to a file, or to stdout when no path is
/// given.
pub fn emit_json<T: Serialize>(path: Option<&Path>, value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Data(format!("serializing output: {e}")))?;
    match path {
        Some(path) => fs::write(path, text + "\n")
            .map_err(|e| CliError::Data(format!("writing {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            writeln!(stdout, "{text}").map_err(|e| CliError::Data(format!("writing stdout: {e}")))
        }
    }
}
