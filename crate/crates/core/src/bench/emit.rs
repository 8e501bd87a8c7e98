use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{EnergyProfile, ExperimentPlan, ResultRow, ResultTable};
use crate::error::{Error, Result};

/// Columns of `results.csv`. `mean_nmse` and `std_error` are linear ratios;
/// wall time is nondeterministic and only goes to `metadata.json`.
pub const RESULTS_HEADER: [&str; 7] = [
    "method",
    "sweep_value",
    "mean_nmse",
    "nmse_db",
    "trials",
    "failures",
    "std_error",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub plan: ExperimentPlan,
    pub seed: u64,
    pub crate_version: String,
    pub axis: String,
    pub total_wall_time_s: f64,
    pub rows: Vec<ResultRow>,
    /// `method -> [(sweep value, NMSE dB)]`.
    pub series: BTreeMap<String, Vec<(f64, f64)>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmittedFiles {
    pub csv: PathBuf,
    pub metadata: PathBuf,
    pub series: Vec<PathBuf>,
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::File::create(path)
        .and_then(|mut f| f.write_all(bytes))
        .map_err(|e| Error::io(path, e))
}

fn csv_bytes<F>(header: &[&str], fill: F) -> Result<Vec<u8>>
where
    F: FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    fill(&mut w)?;
    w.into_inner()
        .map_err(|e| Error::Container(format!("csv buffer: {e}")))
}

/// Writes `results.csv`, `metadata.json` and one `series_<method>.dat` per
/// method into `dir`. Nothing is written if the plan or table is empty.
pub fn emit(table: &ResultTable, plan: &ExperimentPlan, dir: &Path, total_wall_time_s: f64) -> Result<EmittedFiles> {
    if plan.methods.is_empty() || table.rows.is_empty() {
        return Err(Error::InvalidConfig("nothing to emit: empty method list or table".into()));
    }
    let csv = csv_bytes(&RESULTS_HEADER, |w| {
        for r in &table.rows {
            w.write_record([
                r.method.name().to_string(),
                r.sweep_value.to_string(),
                r.mean_nmse.to_string(),
                r.nmse_db.to_string(),
                r.trials.to_string(),
                r.failures.to_string(),
                r.std_error.to_string(),
            ])?;
        }
        Ok(())
    })?;

    let series: BTreeMap<String, Vec<(f64, f64)>> = plan
        .methods
        .iter()
        .map(|&m| (m.name().to_string(), table.series(m)))
        .collect();
    let meta = Metadata {
        plan: plan.clone(),
        seed: plan.seed,
        crate_version: env!("CARGO_PKG_VERSION").to_string(),
        axis: table.axis.clone(),
        total_wall_time_s,
        rows: table.rows.clone(),
        series: series.clone(),
    };

    create_dir(dir)?;
    let files = EmittedFiles {
        csv: dir.join("results.csv"),
        metadata: dir.join("metadata.json"),
        series: plan
            .methods
            .iter()
            .map(|m| dir.join(format!("series_{}.dat", m.name())))
            .collect(),
    };
    write_file(&files.csv, &csv)?;
    write_file(&files.metadata, serde_json::to_string_pretty(&meta)?.as_bytes())?;
    for (path, m) in files.series.iter().zip(&plan.methods) {
        let mut text = format!("# {} nmse_db\n", table.axis);
        for (v, db) in &series[m.name()] {
            text.push_str(&format!("{v} {db}\n"));
        }
        write_file(path, text.as_bytes())?;
    }
    Ok(files)
}

pub fn read_metadata(path: &Path) -> Result<Metadata> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Writes `energy.csv` (trial, subcarrier, block, energy) and
/// `concentration.csv` (trial, subcarrier, blocks_95, peak_block,
/// total_energy; empty peak for a zero column).
pub fn write_energy_csv(profile: &EnergyProfile, dir: &Path) -> Result<[PathBuf; 2]> {
    let energy = csv_bytes(&["trial", "subcarrier", "block", "energy"], |w| {
        for r in &profile.rows {
            w.write_record([
                r.trial.to_string(),
                r.subcarrier.to_string(),
                r.block.to_string(),
                r.energy.to_string(),
            ])?;
        }
        Ok(())
    })?;
    let summary = csv_bytes(
        &["trial", "subcarrier", "blocks_95", "peak_block", "total_energy"],
        |w| {
            for s in &profile.summary {
                w.write_record([
                    s.trial.to_string(),
                    s.subcarrier.to_string(),
                    s.blocks_95.to_string(),
                    s.peak_block.map(|b| b.to_string()).unwrap_or_default(),
                    s.total_energy.to_string(),
                ])?;
            }
            Ok(())
        },
    )?;
    create_dir(dir)?;
    let paths = [dir.join("energy.csv"), dir.join("concentration.csv")];
    write_file(&paths[0], &energy)?;
    write_file(&paths[1], &summary)?;
    Ok(paths)
}
