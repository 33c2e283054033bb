//! Matrix and vector files, and instance directories.
//!
//! Matrices are CSV (rows are samples, an optional header row is skipped) or
//! the raw binary layout `CSPD`, u32 n, u32 p, then n·p column-major f64, all
//! little-endian.

use std::fs;
use std::io::Write;
use std::path::Path;

use concavereg_core::design::DesignMatrix;
use concavereg_core::linalg::Mat;
use concavereg_core::simulate::{Instance, InstanceMeta};
use serde::{Deserialize, Serialize};

use crate::error::{AppError, AppResult};

const MAGIC: &[u8; 4] = b"CSPD";

fn parse_row(rec: &csv::StringRecord) -> Option<Vec<f64>> {
    rec.iter().map(|f| f.trim().parse::<f64>().ok()).collect()
}

/// Reads a numeric CSV into rows; a first row that does not parse is a header.
pub fn read_csv_rows(path: &Path) -> AppResult<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| AppError::ingest(path, e))?;
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| AppError::ingest(path, e))?;
        match parse_row(&rec) {
            Some(r) => rows.push(r),
            None if i == 0 => continue,
            None => return Err(AppError::ingest(path, format!("non-numeric entry on line {}", i + 1))),
        }
    }
    if rows.is_empty() {
        return Err(AppError::ingest(path, "no numeric rows"));
    }
    let width = rows[0].len();
    if let Some(bad) = rows.iter().position(|r| r.len() != width) {
        return Err(AppError::ingest(path, format!("row {} has {} fields, expected {width}", bad + 1, rows[bad].len())));
    }
    Ok(rows)
}

fn read_cspd(path: &Path, bytes: &[u8]) -> AppResult<Mat> {
    if bytes.len() < 12 || &bytes[..4] != MAGIC {
        return Err(AppError::ingest(path, "missing CSPD header"));
    }
    let n = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let p = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let body = &bytes[12..];
    if body.len() != n * p * 8 {
        return Err(AppError::ingest(path, format!("expected {} data bytes for {n}x{p}, found {}", n * p * 8, body.len())));
    }
    let data: Vec<f64> = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok(Mat::from_column_slice(n, p, &data))
}

/// Reads a raw (unnormalized) matrix, choosing the format from the magic bytes.
pub fn read_matrix(path: &Path) -> AppResult<Mat> {
    let bytes = fs::read(path).map_err(|e| AppError::ingest(path, e))?;
    if bytes.starts_with(MAGIC) {
        return read_cspd(path, &bytes);
    }
    let rows = read_csv_rows(path)?;
    let (n, p) = (rows.len(), rows[0].len());
    Ok(Mat::from_fn(n, p, |i, j| rows[i][j]))
}

/// Reads a design and normalizes its columns to norm √n.
pub fn read_design(path: &Path) -> AppResult<DesignMatrix> {
    let m = read_matrix(path)?;
    let d = DesignMatrix::new(m).map_err(|e| AppError::ingest(path, e))?;
    d.normalize_columns().map_err(|e| AppError::ingest(path, e))
}

/// Reads a vector stored one value per line, or as a single row.
pub fn read_vector(path: &Path) -> AppResult<Vec<f64>> {
    let rows = read_csv_rows(path)?;
    if rows.len() == 1 {
        return Ok(rows.into_iter().next().unwrap());
    }
    if rows[0].len() != 1 {
        return Err(AppError::ingest(path, "expected a single column or a single row"));
    }
    Ok(rows.into_iter().map(|r| r[0]).collect())
}

fn write_atomic(path: &Path, bytes: &[u8]) -> AppResult<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
    }
    let tmp = path.with_extension("tmp");
    let mut f = fs::File::create(&tmp).map_err(|e| AppError::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| AppError::io(&tmp, e))?;
    f.sync_all().map_err(|e| AppError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| AppError::io(path, e))
}

pub fn write_file(path: &Path, bytes: &[u8]) -> AppResult<()> {
    write_atomic(path, bytes)
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> AppResult<()> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| AppError::Config(e.to_string()))?;
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

pub fn matrix_csv(m: &Mat) -> String {
    let mut s = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{}", m[(i, j)])).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

pub fn vector_csv(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x}\n")).collect()
}

pub fn matrix_cspd(m: &Mat) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + 8 * m.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(m.nrows() as u32).to_le_bytes());
    out.extend_from_slice(&(m.ncols() as u32).to_le_bytes());
    for v in m.iter() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceFile {
    pub seed: u64,
    pub sigma: f64,
    #[serde(flatten)]
    pub meta: InstanceMeta,
    pub support: Vec<usize>,
}

/// Writes X (CSV or CSPD), y, beta, eps and meta.json into `dir`.
pub fn write_instance(dir: &Path, inst: &Instance, binary: bool) -> AppResult<()> {
    if binary {
        write_atomic(&dir.join("X.cspd"), &matrix_cspd(inst.x.x()))?;
    } else {
        write_atomic(&dir.join("X.csv"), matrix_csv(inst.x.x()).as_bytes())?;
    }
    write_atomic(&dir.join("y.csv"), vector_csv(&inst.y).as_bytes())?;
    write_atomic(&dir.join("beta.csv"), vector_csv(&inst.beta).as_bytes())?;
    write_atomic(&dir.join("eps.csv"), vector_csv(&inst.eps).as_bytes())?;
    let meta = InstanceFile { seed: inst.seed, sigma: inst.sigma, meta: inst.meta.clone(), support: inst.support.indices().to_vec() };
    write_json(&dir.join("meta.json"), &meta)
}

/// Reads an instance directory written by [`write_instance`]. The stored ε is
/// used as is and y is rebuilt as Xβ + ε.
pub fn read_instance(dir: &Path) -> AppResult<Instance> {
    let xp = if dir.join("X.cspd").exists() { dir.join("X.cspd") } else { dir.join("X.csv") };
    let x = DesignMatrix::new(read_matrix(&xp)?).map_err(|e| AppError::ingest(&xp, e))?;
    let beta = read_vector(&dir.join("beta.csv"))?;
    let eps = read_vector(&dir.join("eps.csv"))?;
    let mp = dir.join("meta.json");
    let text = fs::read_to_string(&mp).map_err(|e| AppError::ingest(&mp, e))?;
    let meta: InstanceFile = serde_json::from_str(&text).map_err(|e| AppError::ingest(&mp, e))?;
    let inst = Instance::from_parts(x, beta, eps, meta.sigma, meta.seed, meta.meta).map_err(|e| AppError::ingest(dir, e))?;
    if !inst.x.is_normalized() {
        return Err(AppError::ingest(&xp, "stored design is not column-normalized"));
    }
    Ok(inst)
}

/// Builds an instance from raw data files. Columns are normalized and β is
/// rescaled so that Xβ is unchanged; ε = y − Xβ.
pub fn instance_from_data(x_path: &Path, y_path: &Path, beta_path: Option<&Path>, sigma: f64) -> AppResult<Instance> {
    let raw = DesignMatrix::new(read_matrix(x_path)?).map_err(|e| AppError::ingest(x_path, e))?;
    let x = raw.normalize_columns().map_err(|e| AppError::ingest(x_path, e))?;
    let y = read_vector(y_path)?;
    if y.len() != x.n() {
        return Err(AppError::ingest(y_path, format!("y has {} entries, X has {} rows", y.len(), x.n())));
    }
    let beta = match beta_path {
        Some(bp) => {
            let b = read_vector(bp)?;
            if b.len() != x.p() {
                return Err(AppError::ingest(bp, format!("beta has {} entries, X has {} columns", b.len(), x.p())));
            }
            b.iter().zip(x.scales()).map(|(v, f)| v / f).collect()
        }
        None => vec![0.0; x.p()],
    };
    let xb = x.apply(&beta);
    let eps: Vec<f64> = y.iter().zip(xb.iter()).map(|(a, b)| a - b).collect();
    let meta = InstanceMeta {
        n: x.n(),
        p: x.p(),
        s: beta.iter().filter(|v| **v != 0.0).count(),
        sigma_spec: concavereg_core::simulate::SigmaSpec::Identity,
        beta_spec: concavereg_core::simulate::BetaSpec::Fixed(beta.clone()),
        noise: Default::default(),
    };
    let mut inst = Instance::from_parts(x, beta, eps, sigma, 0, meta)?;
    // keep the observed y bit for bit
    inst.y = y;
    Ok(inst)
}
