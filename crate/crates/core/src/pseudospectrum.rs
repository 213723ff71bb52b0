//! Resolvent-norm fields over rectangular grids in the complex plane.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fd_oracle::{build_fd, resolvent_norm_fd, FdOptions, FdPotential, SigmaMethod};
use crate::format::{csv_line, fmt_f64, fmt_opt, parse_f64};
use crate::resolvent_bounds::compute_bounds;
use crate::spectral_kernel::{classify_region, Region, TOL_SPEC};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    pub n_re: usize,
    pub n_im: usize,
}

fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| if k + 1 == n { hi } else { lo + (hi - lo) * k as f64 / (n - 1) as f64 }).collect()
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.re_min, self.re_max, self.im_min, self.im_max].iter().all(|v| v.is_finite());
        if !finite || !(self.re_min < self.re_max) || !(self.im_min < self.im_max) {
            return Err(Error::Config("grid needs finite re_min < re_max and im_min < im_max".into()));
        }
        if self.n_re < 2 || self.n_im < 2 {
            return Err(Error::Config("grid needs at least 2 points per axis".into()));
        }
        Ok(())
    }

    /// Points in row-major order: `Im` outer, `Re` inner.
    pub fn points(&self) -> Vec<C64> {
        let res = axis(self.re_min, self.re_max, self.n_re);
        let ims = axis(self.im_min, self.im_max, self.n_im);
        ims.iter().flat_map(|&im| res.iter().map(move |&re| C64::new(re, im))).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub n: usize,
    pub half_length: f64,
    pub method: SigmaMethod,
    pub dense_max: usize,
    pub seed: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { n: 2001, half_length: 150.0, method: SigmaMethod::Auto, dense_max: 400, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointStatus {
    Ok,
    Spectrum,
    OracleSingular,
    OracleFailed,
    BoundFailed,
}

impl PointStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            PointStatus::Ok => "ok",
            PointStatus::Spectrum => "spectrum",
            PointStatus::OracleSingular => "oracle_singular",
            PointStatus::OracleFailed => "oracle_failed",
            PointStatus::BoundFailed => "bound_failed",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "ok" => PointStatus::Ok,
            "spectrum" => PointStatus::Spectrum,
            "oracle_singular" => PointStatus::OracleSingular,
            "oracle_failed" => PointStatus::OracleFailed,
            "bound_failed" => PointStatus::BoundFailed,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub z: C64,
    pub region: Region,
    pub lower: f64,
    pub upper: f64,
    pub oracle: Option<f64>,
    pub status: PointStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudospectrumField {
    pub grid: GridSpec,
    pub points: Vec<PointRecord>,
}

fn evaluate(z: C64, oracle: Option<&(crate::fd_oracle::FdOperator, OracleConfig)>) -> PointRecord {
    let region = classify_region(z, TOL_SPEC);
    if region == Region::Spectrum {
        return PointRecord {
            z,
            region,
            lower: f64::INFINITY,
            upper: f64::INFINITY,
            oracle: oracle.map(|_| f64::INFINITY),
            status: PointStatus::Spectrum,
        };
    }
    let (lower, upper, mut status) = match compute_bounds(z) {
        Ok(b) => (b.lower, b.upper, PointStatus::Ok),
        Err(_) => (f64::NAN, f64::NAN, PointStatus::BoundFailed),
    };
    let oracle = oracle.map(|(op, cfg)| {
        let opts = FdOptions { method: cfg.method, dense_max: cfg.dense_max, seed: cfg.seed, estimate_error: false };
        match resolvent_norm_fd(op, z, opts) {
            Ok(r) => r.value,
            Err(Error::Singular(_)) => {
                status = PointStatus::OracleSingular;
                f64::INFINITY
            }
            Err(_) => {
                status = PointStatus::OracleFailed;
                f64::NAN
            }
        }
    });
    PointRecord { z, region, lower, upper, oracle, status }
}

/// Bounds (and optionally the FD oracle) at every grid point. Failures are
/// recorded per point.
pub fn compute_field(grid: GridSpec, oracle: Option<OracleConfig>) -> Result<PseudospectrumField> {
    grid.validate()?;
    let op = match oracle {
        Some(cfg) => Some((build_fd(FdPotential::Sgn, cfg.half_length, cfg.n, None)?, cfg)),
        None => None,
    };
    let points: Vec<PointRecord> = grid.points().par_iter().map(|&z| evaluate(z, op.as_ref())).collect();
    Ok(PseudospectrumField { grid, points })
}

/// Run `f` on a pool sized by `PSEUDOSPEC_THREADS` (unset or 0: automatic).
pub fn with_thread_pool<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T> {
    let threads = match std::env::var("PSEUDOSPEC_THREADS") {
        Ok(v) => v.trim().parse::<usize>().map_err(|_| Error::Config(format!("PSEUDOSPEC_THREADS must be a non-negative integer, got {v:?}")))?,
        Err(_) => 0,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

pub const CSV_HEADER: &str = "re,im,region,lower,upper,oracle,status";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExportFormat {
    Csv,
    Json,
}

pub fn field_to_csv(field: &PseudospectrumField) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for p in &field.points {
        s.push_str(&csv_line(&[
            fmt_f64(p.z.re),
            fmt_f64(p.z.im),
            p.region.as_str().to_string(),
            fmt_f64(p.lower),
            fmt_f64(p.upper),
            fmt_opt(p.oracle),
            p.status.as_str().to_string(),
        ]));
    }
    s
}

pub fn field_to_json(field: &PseudospectrumField) -> String {
    let points: Vec<serde_json::Value> = field
        .points
        .iter()
        .map(|p| {
            serde_json::json!({
                "re": p.z.re,
                "im": p.z.im,
                "region": p.region.as_str(),
                "lower": p.lower,
                "upper": p.upper,
                "oracle": p.oracle,
                "status": p.status.as_str(),
            })
        })
        .collect();
    let doc = serde_json::json!({ "grid": field.grid, "points": points });
    let mut s = serde_json::to_string(&doc).expect("field serialises");
    s.push('\n');
    s
}

pub fn export_field(field: &PseudospectrumField, path: &Path, format: ExportFormat) -> Result<()> {
    let text = match format {
        ExportFormat::Csv => field_to_csv(field),
        ExportFormat::Json => field_to_json(field),
    };
    let mut f = std::fs::File::create(path)?;
    f.write_all(text.as_bytes())?;
    Ok(())
}

/// Parse the CSV export; the grid is recovered from the distinct coordinates.
pub fn parse_field_csv(text: &str) -> Result<PseudospectrumField> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(Error::Config("missing pseudospectrum CSV header".into()));
    }
    let mut points = Vec::new();
    for line in lines.filter(|l| !l.is_empty()) {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            return Err(Error::Config(format!("expected 7 fields, got {}: {line:?}", f.len())));
        }
        points.push(PointRecord {
            z: C64::new(parse_f64(f[0])?, parse_f64(f[1])?),
            region: Region::parse(f[2]).ok_or_else(|| Error::Config(format!("unknown region {:?}", f[2])))?,
            lower: parse_f64(f[3])?,
            upper: parse_f64(f[4])?,
            oracle: if f[5].is_empty() { None } else { Some(parse_f64(f[5])?) },
            status: PointStatus::parse(f[6]).ok_or_else(|| Error::Config(format!("unknown status {:?}", f[6])))?,
        });
    }
    if points.is_empty() {
        return Err(Error::Config("no data rows".into()));
    }
    let mut res: Vec<f64> = points.iter().map(|p| p.z.re).collect();
    let mut ims: Vec<f64> = points.iter().map(|p| p.z.im).collect();
    for v in [&mut res, &mut ims] {
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v.dedup();
    }
    let grid = GridSpec {
        re_min: res[0],
        re_max: *res.last().unwrap(),
        im_min: ims[0],
        im_max: *ims.last().unwrap(),
        n_re: res.len(),
        n_im: ims.len(),
    };
    Ok(PseudospectrumField { grid, points })
}
