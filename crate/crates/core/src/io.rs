//! CSV artifacts with JSON sidecars.
//!
//! A table `name.csv` is accompanied by `name.json` holding the metadata
//! needed to rebuild the in-memory value. Numbers are written with the
//! shortest representation that parses back to the same `f64`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::convolution::SampleBatch;
use crate::error::{Error, Result};
use crate::fluctuations::{WhRow, WhSamplePairs};
use crate::kernel::KingmanOrder;
use crate::processes::{PathGrid, SymmetricLevySpec};
use crate::radchf::LevyPair;

/// Sidecar path for a CSV artifact.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

fn write_table<W: Write>(w: W, header: &[String], rows: impl Iterator<Item = Vec<f64>>) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(header)?;
    for row in rows {
        out.write_record(row.into_iter().map(fmt))?;
    }
    out.flush()?;
    Ok(())
}

fn read_table<R: Read>(r: R, expected: &[String]) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::Reader::from_reader(r);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if header != expected {
        return Err(Error::Format(format!(
            "expected columns {expected:?}, found {header:?}"
        )));
    }
    let mut rows = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .enumerate()
            .map(|(col, f)| {
                f.trim().parse::<f64>().map_err(|_| {
                    Error::Format(format!(
                        "row {}, column {}: cannot parse {f:?} as a number",
                        line + 1,
                        expected[col]
                    ))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

fn coord_header(prefix: Option<&str>, k: usize) -> Vec<String> {
    prefix
        .into_iter()
        .map(str::to_owned)
        .chain((1..=k).map(|j| format!("x{j}")))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchMeta {
    pub order: KingmanOrder,
    pub dim: usize,
    pub n: usize,
    pub seed: u64,
    #[serde(default)]
    pub resampled: bool,
}

impl BatchMeta {
    pub fn of(batch: &SampleBatch) -> Self {
        BatchMeta {
            order: batch.order(),
            dim: batch.dim(),
            n: batch.n(),
            seed: batch.seed(),
            resampled: batch.is_resampled(),
        }
    }
}

/// Writes rows as `x1,...,xk`.
pub fn write_batch_csv<W: Write>(batch: &SampleBatch, w: W) -> Result<()> {
    write_table(w, &coord_header(None, batch.dim()), batch.rows().map(<[f64]>::to_vec))
}

pub fn read_batch_csv<R: Read>(r: R, meta: &BatchMeta) -> Result<SampleBatch> {
    let rows = read_table(r, &coord_header(None, meta.dim))?;
    if rows.len() != meta.n {
        return Err(Error::Format(format!("sidecar says n = {}, table has {} rows", meta.n, rows.len())));
    }
    SampleBatch::new(meta.order, meta.dim, rows.concat(), meta.seed)
}

pub fn save_batch(batch: &SampleBatch, csv_path: &Path) -> Result<()> {
    write_batch_csv(batch, BufWriter::new(File::create(csv_path)?))?;
    write_json(&sidecar_path(csv_path), &BatchMeta::of(batch))
}

pub fn load_batch(csv_path: &Path) -> Result<SampleBatch> {
    let meta: BatchMeta = read_json(&sidecar_path(csv_path))?;
    read_batch_csv(BufReader::new(File::open(csv_path)?), &meta)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathMeta {
    pub dim: usize,
    pub len: usize,
    pub seed: u64,
    /// What generated the path (a pair, a spec, or a Bessel order).
    #[serde(default)]
    pub source: serde_json::Value,
}

/// Writes `t,x1,...,xk`.
pub fn write_path_csv<W: Write>(path: &PathGrid, w: W) -> Result<()> {
    let rows = (0..path.len()).map(|i| {
        let mut row = Vec::with_capacity(path.dim() + 1);
        row.push(path.times()[i]);
        row.extend_from_slice(path.state(i));
        row
    });
    write_table(w, &coord_header(Some("t"), path.dim()), rows)
}

pub fn read_path_csv<R: Read>(r: R, meta: &PathMeta) -> Result<PathGrid> {
    let rows = read_table(r, &coord_header(Some("t"), meta.dim))?;
    let times = rows.iter().map(|r| r[0]).collect();
    let states = rows.iter().flat_map(|r| r[1..].iter().copied()).collect();
    PathGrid::new(times, meta.dim, states, meta.seed)
}

pub fn save_path(path: &PathGrid, source: serde_json::Value, csv_path: &Path) -> Result<()> {
    write_path_csv(path, BufWriter::new(File::create(csv_path)?))?;
    let meta = PathMeta {
        dim: path.dim(),
        len: path.len(),
        seed: path.seed(),
        source,
    };
    write_json(&sidecar_path(csv_path), &meta)
}

pub fn load_path(csv_path: &Path) -> Result<PathGrid> {
    let meta: PathMeta = read_json(&sidecar_path(csv_path))?;
    read_path_csv(BufReader::new(File::open(csv_path)?), &meta)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WhMeta {
    pub spec: Option<SymmetricLevySpec>,
    pub p: f64,
    pub dt: f64,
    pub n: usize,
    pub seed: u64,
}

const WH_HEADER: [&str; 4] = ["g_bar", "x_bar", "g_comp", "x_comp"];

fn wh_header() -> Vec<String> {
    WH_HEADER.iter().map(|s| s.to_string()).collect()
}

/// Writes `g_bar,x_bar,g_comp,x_comp`.
pub fn write_wh_csv<W: Write>(pairs: &WhSamplePairs, w: W) -> Result<()> {
    let rows = pairs.rows.iter().map(|r| vec![r.g_bar, r.x_bar, r.g_comp, r.x_comp]);
    write_table(w, &wh_header(), rows)
}

pub fn read_wh_csv<R: Read>(r: R, meta: &WhMeta) -> Result<WhSamplePairs> {
    let rows = read_table(r, &wh_header())?
        .into_iter()
        .map(|r| WhRow {
            g_bar: r[0],
            x_bar: r[1],
            g_comp: r[2],
            x_comp: r[3],
        })
        .collect();
    let mut pairs = WhSamplePairs::new(meta.p, rows)?;
    pairs.dt = meta.dt;
    pairs.seed = meta.seed;
    pairs.spec = meta.spec.clone();
    Ok(pairs)
}

pub fn save_wh_pairs(pairs: &WhSamplePairs, csv_path: &Path) -> Result<()> {
    write_wh_csv(pairs, BufWriter::new(File::create(csv_path)?))?;
    let meta = WhMeta {
        spec: pairs.spec.clone(),
        p: pairs.p,
        dt: pairs.dt,
        n: pairs.len(),
        seed: pairs.seed,
    };
    write_json(&sidecar_path(csv_path), &meta)
}

pub fn load_wh_pairs(csv_path: &Path) -> Result<WhSamplePairs> {
    let meta: WhMeta = read_json(&sidecar_path(csv_path))?;
    read_wh_csv(BufReader::new(File::open(csv_path)?), &meta)
}

pub fn save_pair(pair: &LevyPair, path: &Path) -> Result<()> {
    write_json(path, pair)
}

/// Reads and validates a pair.
pub fn load_pair(path: &Path) -> Result<LevyPair> {
    let pair: LevyPair = read_json(path)?;
    pair.validate()?;
    Ok(pair)
}
