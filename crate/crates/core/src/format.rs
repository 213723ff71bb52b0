//! Frozen text formats: shortest round-trip floats, `re,im` complex pairs
//! and `min:max:count` ranges.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shortest decimal that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".to_string() } else { "-inf".to_string() }
    } else {
        let mut buf = ryu::Buffer::new();
        buf.format_finite(x).to_string()
    }
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

pub fn parse_f64(s: &str) -> Result<f64> {
    let t = s.trim();
    match t {
        "inf" | "+inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        "nan" => Ok(f64::NAN),
        _ => t.parse::<f64>().map_err(|_| Error::Config(format!("not a number: {s:?}"))),
    }
}

/// `"re,im"` or a bare real.
pub fn parse_complex(s: &str) -> Result<C64> {
    let parts: Vec<&str> = s.split(',').collect();
    match parts.as_slice() {
        [re] => Ok(C64::new(parse_f64(re)?, 0.0)),
        [re, im] => Ok(C64::new(parse_f64(re)?, parse_f64(im)?)),
        _ => Err(Error::Config(format!("expected a complex number as re,im: {s:?}"))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Range {
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.min];
        }
        (0..self.count)
            .map(|k| {
                if k + 1 == self.count {
                    self.max
                } else {
                    self.min + (self.max - self.min) * k as f64 / (self.count - 1) as f64
                }
            })
            .collect()
    }
}

/// `min:max:count`, or a single value (count 1).
pub fn parse_range(s: &str) -> Result<Range> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [v] => {
            let v = parse_f64(v)?;
            Ok(Range { min: v, max: v, count: 1 })
        }
        [a, b, n] => {
            let count: usize = n.trim().parse().map_err(|_| Error::Config(format!("bad count in range {s:?}")))?;
            let (min, max) = (parse_f64(a)?, parse_f64(b)?);
            if count == 0 || !(min.is_finite() && max.is_finite()) || (count > 1 && !(min < max)) {
                return Err(Error::Config(format!("range {s:?} needs finite min < max and count >= 1")));
            }
            Ok(Range { min, max, count })
        }
        _ => Err(Error::Config(format!("expected min:max:count, got {s:?}"))),
    }
}

/// Comma-separated reals.
pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',').map(parse_f64).collect()
}

/// `key=value` pairs separated by commas.
pub fn parse_kv(s: &str) -> Result<Vec<(String, String)>> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            let (k, v) = p.split_once('=').ok_or_else(|| Error::Config(format!("expected key=value, got {p:?}")))?;
            Ok((k.trim().to_string(), v.trim().to_string()))
        })
        .collect()
}

pub fn csv_line(fields: &[String]) -> String {
    let mut s = fields.join(",");
    s.push('\n');
    s
}
