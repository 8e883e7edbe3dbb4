//! CSV and JSON formats of tables, densities, histograms and run manifests.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use repulsion_core::specfun::SampledFunction;
use repulsion_core::{RateRow, RateTable, SpeedConstants};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_f64(field: &str) -> Result<f64> {
    field
        .trim()
        .parse()
        .map_err(|_| LabError::Domain(format!("not a number: {field:?}")))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::Writer::from_writer(BufWriter::new(File::create(
        path,
    )?)))
}

/// Writes `header` then each row of numbers.
pub fn write_rows<W: Write>(
    w: W,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(header)?;
    for r in rows {
        out.write_record(&r)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_rate_table<W: Write>(w: W, table: &RateTable) -> Result<()> {
    let rows = table
        .rows()
        .iter()
        .map(|r| vec![fmt_f64(r.alpha), fmt_f64(r.j), fmt_f64(r.c)]);
    write_rows(w, &["alpha", "J", "C"], rows)
}

pub fn read_rate_table<R: Read>(r: R) -> Result<RateTable> {
    let mut rdr = csv::Reader::from_reader(r);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if header != ["alpha", "J", "C"] {
        return Err(LabError::Domain(format!(
            "rate table header must be alpha,J,C, got {}",
            header.join(",")
        )));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() != 3 {
            return Err(LabError::Domain(format!(
                "rate table row needs 3 fields, got {}",
                rec.len()
            )));
        }
        rows.push(RateRow {
            alpha: parse_f64(&rec[0])?,
            j: parse_f64(&rec[1])?,
            c: parse_f64(&rec[2])?,
        });
    }
    Ok(RateTable::new(rows)?)
}

pub fn save_rate_table(path: &Path, table: &RateTable) -> Result<()> {
    write_rate_table(BufWriter::new(File::create(path)?), table)
}

pub fn load_rate_table(path: &Path) -> Result<RateTable> {
    read_rate_table(File::open(path)?)
}

/// Two columns `x,density`.
pub fn save_density(path: &Path, density: &SampledFunction) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["x", "density"])?;
    for (i, v) in density.values().iter().enumerate() {
        w.write_record([fmt_f64(density.x(i)), fmt_f64(*v)])?;
    }
    w.flush()?;
    Ok(())
}

/// One `(left, right, value)` row per bin.
pub type BinRow = (f64, f64, f64);

/// Histograms and fields as `bin_left,bin_right,value`.
pub fn save_bins(path: &Path, bins: &[BinRow]) -> Result<()> {
    let rows = bins
        .iter()
        .map(|(a, b, v)| vec![fmt_f64(*a), fmt_f64(*b), fmt_f64(*v)]);
    write_rows(
        BufWriter::new(File::create(path)?),
        &["bin_left", "bin_right", "value"],
        rows,
    )
}

/// Flat JSON form of [`SpeedConstants`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedConstantsJson {
    pub j0: f64,
    pub gamma_star: f64,
    pub gamma_bullet: f64,
    #[serde(rename = "Gamma_bullet")]
    pub gamma_bullet_cost: f64,
    pub gamma_circ: f64,
}

impl From<SpeedConstants> for SpeedConstantsJson {
    fn from(c: SpeedConstants) -> Self {
        Self {
            j0: c.j0,
            gamma_star: c.gamma_star,
            gamma_bullet: c.gamma_bullet,
            gamma_bullet_cost: c.gamma_bullet_cost,
            gamma_circ: c.gamma_circ,
        }
    }
}

/// Pretty JSON followed by a newline.
pub fn save_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Record of one CLI invocation, written after all of its outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: BTreeMap<String, serde_json::Value>,
    pub seed: Option<u64>,
    pub outputs: Vec<PathBuf>,
    pub wall_time: f64,
}

impl RunManifest {
    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(missing) = self.outputs.iter().find(|p| !p.exists()) {
            return Err(LabError::Simulation(format!(
                "declared output {} was not written",
                missing.display()
            )));
        }
        save_json(path, self)
    }
}
