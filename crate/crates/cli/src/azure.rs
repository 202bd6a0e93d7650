//! Loader for production FaaS invocation traces in the public Azure Functions
//! schema: one CSV per day, one row per function, with owner/app/function
//! hash columns and 1440 per-minute invocation count columns named
//! "1".."1440".
//!
//! Functions belonging to the same application are aggregated by summing
//! their per-minute bin counts, since the application is the unit of caching.
//! Malformed rows (non-integer or negative counts, duplicate (app, function)
//! pairs, wrong column counts) are collected and reported with line numbers.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use keepalive_core::rng::Rng;
use keepalive_core::trace::{expand_bins, expand_bins_uniform, TraceDataset, MINUTES_PER_DAY};
use serde::{Deserialize, Serialize};

use crate::{CliError, CliResult};

/// Column mapping; defaults match the public Azure Functions schema.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceSchema {
    pub app_column: String,
    pub function_column: String,
}

impl Default for TraceSchema {
    fn default() -> Self {
        TraceSchema {
            app_column: "HashApp".into(),
            function_column: "HashFunction".into(),
        }
    }
}

/// Sub-minute placement rule used when expanding bin counts to timestamps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Placement {
    /// Deterministic mid-offset even spacing.
    #[default]
    Mid,
    /// Seeded uniform-random placement, for sensitivity checks.
    Uniform,
}

const MAX_REPORTED_OFFENDERS: usize = 12;

/// Loads one CSV per (day, path) pair into a dataset. `seed` drives the
/// uniform placement rule; it is unused for mid-offset placement.
pub fn load_trace(
    files: &[(u32, &Path)],
    schema: &TraceSchema,
    placement: Placement,
    seed: u64,
) -> CliResult<TraceDataset> {
    let mut dataset = TraceDataset::new(files.iter().map(|(d, _)| *d).collect());
    for &(day, path) in files {
        let bins = load_day_bins(path, schema)?;
        for (app_index, (app, counts)) in bins.into_iter().enumerate() {
            let history = match placement {
                Placement::Mid => expand_bins(&counts),
                Placement::Uniform => {
                    let mut rng =
                        Rng::derive(seed, (day as u64) << 32 | app_index as u64);
                    expand_bins_uniform(&counts, &mut rng)
                }
            };
            dataset.insert(&app, day, history)?;
        }
    }
    Ok(dataset)
}

/// Parses one day file into per-app bin counts.
fn load_day_bins(path: &Path, schema: &TraceSchema) -> CliResult<BTreeMap<String, Vec<u64>>> {
    let file =
        File::open(path).map_err(|e| CliError::Data(format!("opening {}: {e}", path.display())))?;
    let mut lines = BufReader::new(file).lines().enumerate();
    let header = match lines.next() {
        Some((_, Ok(line))) => line,
        Some((_, Err(e))) => {
            return Err(CliError::Data(format!("reading {}: {e}", path.display())))
        }
        None => return Ok(BTreeMap::new()), // empty file: zero apps
    };
    let columns: Vec<&str> = header.split(',').collect();
    let find = |name: &str| columns.iter().position(|c| c.trim() == name);
    let app_col = find(&schema.app_column).ok_or_else(|| {
        CliError::Data(format!(
            "{}: missing column {:?}",
            path.display(),
            schema.app_column
        ))
    })?;
    let func_col = find(&schema.function_column).ok_or_else(|| {
        CliError::Data(format!(
            "{}: missing column {:?}",
            path.display(),
            schema.function_column
        ))
    })?;
    let mut minute_cols = Vec::with_capacity(MINUTES_PER_DAY);
    for minute in 1..=MINUTES_PER_DAY {
        let col = find(&minute.to_string()).ok_or_else(|| {
            CliError::Data(format!(
                "{}: missing minute column {:?}",
                path.display(),
                minute
            ))
        })?;
        minute_cols.push(col);
    }

    let mut bins: BTreeMap<String, Vec<u64>> = BTreeMap::new();
    let mut seen: HashSet<(String, String)> = HashSet::new();
    let mut offenders: Vec<String> = Vec::new();
    let mut offender_count = 0usize;
    let report = |offenders: &mut Vec<String>, count: &mut usize, msg: String| {
        if offenders.len() < MAX_REPORTED_OFFENDERS {
            offenders.push(msg);
        }
        *count += 1;
    };

    for (lineno, line) in lines {
        let line = line.map_err(|e| CliError::Data(format!("reading {}: {e}", path.display())))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != columns.len() {
            report(
                &mut offenders,
                &mut offender_count,
                format!(
                    "line {}: expected {} fields, found {}",
                    lineno + 1,
                    columns.len(),
                    fields.len()
                ),
            );
            continue;
        }
        let app = fields[app_col].trim().to_string();
        let func = fields[func_col].trim().to_string();
        if !seen.insert((app.clone(), func.clone())) {
            report(
                &mut offenders,
                &mut offender_count,
                format!("line {}: duplicate (app, function) row", lineno + 1),
            );
            continue;
        }
        let mut counts = Vec::with_capacity(MINUTES_PER_DAY);
        let mut row_ok = true;
        for (&col, minute) in minute_cols.iter().zip(1..) {
            match fields[col].trim().parse::<u64>() {
                Ok(count) => counts.push(count),
                Err(_) => {
                    report(
                        &mut offenders,
                        &mut offender_count,
                        format!(
                            "line {}: minute {minute} count {:?} is not a nonnegative integer",
                            lineno + 1,
                            fields[col].trim()
                        ),
                    );
                    row_ok = false;
                    break;
                }
            }
        }
        if !row_ok {
            continue;
        }
        let app_bins = bins
            .entry(app)
            .or_insert_with(|| vec![0u64; MINUTES_PER_DAY]);
        for (slot, count) in app_bins.iter_mut().zip(counts) {
            *slot += count;
        }
    }

    if offender_count > 0 {
        let mut msg = format!("{}: {} malformed rows:", path.display(), offender_count);
        for off in &offenders {
            msg.push_str("\n  ");
            msg.push_str(off);
        }
        if offender_count > offenders.len() {
            msg.push_str(&format!(
                "\n  ... and {} more",
                offender_count - offenders.len()
            ));
        }
        return Err(CliError::Data(msg));
    }
    Ok(bins)
}
