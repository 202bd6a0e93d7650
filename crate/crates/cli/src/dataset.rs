//! Canonical JSON form of a trace dataset, for caching between pipeline
//! stages.
//!
//! Shape: `{"days": [7, 8, 9], "apps": {"<id>": {"<day>": [minutes...]}}}`.
//! Keys are sorted, so serialization is deterministic.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use keepalive_core::point_process::History;
use keepalive_core::trace::TraceDataset;
use serde::{Deserialize, Serialize};

use crate::{CliError, CliResult};

#[derive(Debug, Serialize, Deserialize)]
struct DatasetFile {
    days: Vec<u32>,
    apps: BTreeMap<String, BTreeMap<String, Vec<f64>>>,
}

pub fn write_dataset(path: &Path, dataset: &TraceDataset) -> CliResult<()> {
    let mut apps: BTreeMap<String, BTreeMap<String, Vec<f64>>> = BTreeMap::new();
    for id in dataset.app_ids() {
        let mut per_day = BTreeMap::new();
        for (&day, history) in dataset.per_day(id).into_iter().flatten() {
            per_day.insert(day.to_string(), history.times().to_vec());
        }
        apps.insert(id.to_string(), per_day);
    }
    let file = DatasetFile {
        days: dataset.days().to_vec(),
        apps,
    };
    let text = serde_json::to_string(&file)
        .map_err(|e| CliError::Data(format!("serializing dataset: {e}")))?;
    fs::write(path, text).map_err(|e| CliError::Data(format!("writing {}: {e}", path.display())))
}

pub fn read_dataset(path: &Path) -> CliResult<TraceDataset> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("reading {}: {e}", path.display())))?;
    let file: DatasetFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let mut dataset = TraceDataset::new(file.days);
    for (id, per_day) in file.apps {
        for (day, times) in per_day {
            let day: u32 = day
                .parse()
                .map_err(|_| CliError::Data(format!("{}: bad day key {day:?}", path.display())))?;
            let history = History::from_times(times).map_err(CliError::from)?;
            dataset.insert(&id, day, history).map_err(CliError::from)?;
        }
    }
    Ok(dataset)
}
