//! Result files: `cor.csv`, `records.csv`, `heatmap_<which>.csv` and
//! `manifest.json`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ConfigFile;
use super::report::{CorEntry, Heatmap, RecordRow};
use crate::error::{Error, Result};

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.to_path_buf(), source }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> Error + '_ {
    move |source| Error::Csv { path: path.to_path_buf(), source }
}

fn write_csv<R: Serialize>(path: &Path, header: &[&str], rows: &[R]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path).map_err(csv_err(path))?;
    w.write_record(header).map_err(csv_err(path))?;
    for r in rows {
        w.serialize(r).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

fn read_csv<R: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<R>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    r.deserialize().collect::<std::result::Result<Vec<R>, _>>().map_err(csv_err(path))
}

pub const RECORDS_HEADER: [&str; 9] =
    ["replication", "procedure", "c_ov", "model", "d1", "d2", "dim", "loss", "oracle_loss"];
pub const COR_HEADER: [&str; 4] = ["procedure", "C_ov", "C_or", "epsilon"];

pub fn write_records(path: &Path, rows: &[RecordRow]) -> Result<()> {
    write_csv(path, &RECORDS_HEADER, rows)
}

pub fn read_records(path: &Path) -> Result<Vec<RecordRow>> {
    read_csv(path)
}

pub fn write_cor(path: &Path, entries: &[CorEntry]) -> Result<()> {
    write_csv(path, &COR_HEADER, entries)
}

pub fn read_cor(path: &Path) -> Result<Vec<CorEntry>> {
    read_csv(path)
}

pub fn write_heatmap(path: &Path, heatmap: &Heatmap) -> Result<()> {
    write_csv(path, &["D1", "D2", "log10freq"], &heatmap.cells())
}

/// File-name-safe form of a heatmap selector; `id-dim` becomes `iddim`.
pub fn heatmap_file_name(which: &str) -> String {
    let which = if which == "id-dim" { "iddim" } else { which };
    let safe: String = which
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' })
        .collect();
    format!("heatmap_{safe}.csv")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Versions {
    pub penlab: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: ConfigFile,
    pub seed: u64,
    pub versions: Versions,
    pub wall_time_secs: f64,
}

impl Manifest {
    pub fn new(config: ConfigFile, wall_time_secs: f64) -> Self {
        Self {
            seed: config.seed.unwrap_or(0),
            config,
            versions: Versions { penlab: env!("CARGO_PKG_VERSION").to_string() },
            wall_time_secs,
        }
    }
}

/// Writes every output file into `dir`, creating it if needed, and returns
/// the paths written.
pub fn emit_outputs(
    dir: &Path,
    rows: &[RecordRow],
    cor: &[CorEntry],
    heatmaps: &[Heatmap],
    manifest: &Manifest,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::new();
    let p = dir.join("cor.csv");
    write_cor(&p, cor)?;
    written.push(p);
    let p = dir.join("records.csv");
    write_records(&p, rows)?;
    written.push(p);
    for h in heatmaps {
        let p = dir.join(heatmap_file_name(&h.which));
        write_heatmap(&p, h)?;
        written.push(p);
    }
    let p = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(manifest).map_err(|source| Error::Json { path: p.clone(), source })?;
    fs::write(&p, text + "\n").map_err(io_err(&p))?;
    written.push(p);
    Ok(written)
}
