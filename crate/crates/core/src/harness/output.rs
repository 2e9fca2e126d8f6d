//! Result tables: versioned CSV with a JSON mirror, and per-user dumps.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::d2d_sim::Tier;
use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;
const VERSION_PREFIX: &str = "# schema_version=";

pub const RESULT_COLUMNS: [&str; 19] = [
    "schema_version",
    "scheme",
    "environment",
    "n",
    "m",
    "M",
    "gamma_r",
    "cluster_side",
    "band_split",
    "c_r0",
    "p_o",
    "t_min_bps",
    "tier_self",
    "tier_mmwave",
    "tier_uwave",
    "tier_bs",
    "tier_outage",
    "realizations",
    "seed",
];

/// One averaged sweep point. Coordinates that do not apply to the scheme
/// are empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub schema_version: u32,
    pub scheme: String,
    pub environment: String,
    pub n: usize,
    pub m: usize,
    #[serde(rename = "M")]
    pub cache_size: usize,
    pub gamma_r: f64,
    pub cluster_side: Option<f64>,
    pub band_split: Option<f64>,
    pub c_r0: Option<f64>,
    pub p_o: f64,
    pub t_min_bps: f64,
    pub tier_self: Option<f64>,
    pub tier_mmwave: Option<f64>,
    pub tier_uwave: Option<f64>,
    pub tier_bs: Option<f64>,
    pub tier_outage: Option<f64>,
    pub realizations: usize,
    pub seed: u64,
}

/// Per-user throughput of one D2D realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserRow {
    pub scheme: String,
    pub n: usize,
    pub m: usize,
    #[serde(rename = "M")]
    pub cache_size: usize,
    pub cluster_side: f64,
    pub band_split: Option<f64>,
    pub realization: usize,
    pub user: usize,
    pub tier: Tier,
    pub throughput_bps: f64,
}

fn write_versioned<T: Serialize, W: Write>(rows: &[T], header: &[&str], mut w: W) -> Result<()> {
    writeln!(w, "{VERSION_PREFIX}{SCHEMA_VERSION}")?;
    let mut csv = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    csv.write_record(header)?;
    for r in rows {
        csv.serialize(r)?;
    }
    csv.flush()?;
    Ok(())
}

fn read_versioned<T: for<'de> Deserialize<'de>, R: Read>(r: R) -> Result<Vec<T>> {
    let mut r = BufReader::new(r);
    let mut first = String::new();
    r.read_line(&mut first)?;
    let found = first.trim().strip_prefix(VERSION_PREFIX).unwrap_or(first.trim());
    if found != SCHEMA_VERSION.to_string() {
        return Err(Error::SchemaVersion {
            found: found.to_string(),
            expected: SCHEMA_VERSION.to_string(),
        });
    }
    csv::Reader::from_reader(r)
        .deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}

pub fn write_results_csv<W: Write>(rows: &[ResultRow], w: W) -> Result<()> {
    write_versioned(rows, &RESULT_COLUMNS, w)
}

pub fn read_results_csv<R: Read>(r: R) -> Result<Vec<ResultRow>> {
    read_versioned(r)
}

pub const USER_COLUMNS: [&str; 10] = [
    "scheme",
    "n",
    "m",
    "M",
    "cluster_side",
    "band_split",
    "realization",
    "user",
    "tier",
    "throughput_bps",
];

pub fn write_users_csv<W: Write>(rows: &[UserRow], w: W) -> Result<()> {
    write_versioned(rows, &USER_COLUMNS, w)
}

pub fn read_users_csv<R: Read>(r: R) -> Result<Vec<UserRow>> {
    read_versioned(r)
}

#[derive(Serialize, Deserialize)]
struct JsonResults {
    schema_version: u32,
    rows: Vec<ResultRow>,
}

pub fn results_to_json(rows: &[ResultRow]) -> Result<String> {
    Ok(serde_json::to_string_pretty(&JsonResults {
        schema_version: SCHEMA_VERSION,
        rows: rows.to_vec(),
    })?)
}

pub fn results_from_json(text: &str) -> Result<Vec<ResultRow>> {
    let doc: JsonResults = serde_json::from_str(text)?;
    if doc.schema_version != SCHEMA_VERSION {
        return Err(Error::SchemaVersion {
            found: doc.schema_version.to_string(),
            expected: SCHEMA_VERSION.to_string(),
        });
    }
    Ok(doc.rows)
}

/// Writes `results.csv` and `results.json`, plus `users.csv` when there are
/// per-user rows.
pub fn write_outputs(dir: &Path, rows: &[ResultRow], users: &[UserRow]) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_results_csv(rows, fs::File::create(dir.join("results.csv"))?)?;
    fs::write(dir.join("results.json"), results_to_json(rows)?)?;
    if !users.is_empty() {
        write_users_csv(users, fs::File::create(dir.join("users.csv"))?)?;
    }
    Ok(())
}
