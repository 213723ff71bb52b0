//! Composite Gauss–Legendre grids.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 1);
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    let half = (m + 1) / 2;
    for i in 0..half {
        let mut t = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(m, t);
            dp = d;
            let dt = p / d;
            t -= dt;
            if dt.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(m, t);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - t * t) * dp * dp);
        nodes[i] = -t;
        nodes[m - 1 - i] = t;
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    if m % 2 == 1 {
        nodes[m / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre(m: usize, t: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, t);
    for k in 2..=m {
        let p2 = ((2 * k - 1) as f64 * t * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    if m == 0 {
        return (1.0, 0.0);
    }
    let d = m as f64 * (t * p1 - p0) / (t * t - 1.0);
    (p1, d)
}

/// Lagrange basis of the nodes `ts` evaluated at `t`.
pub fn lagrange_row(ts: &[f64], t: f64) -> Vec<f64> {
    let m = ts.len();
    let mut row = vec![1.0; m];
    for j in 0..m {
        for k in 0..m {
            if k != j {
                row[j] *= (t - ts[k]) / (ts[j] - ts[k]);
            }
        }
    }
    row
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Panel {
    pub a: f64,
    pub b: f64,
}

impl Panel {
    pub fn mid(&self) -> f64 {
        0.5 * (self.a + self.b)
    }
    pub fn half(&self) -> f64 {
        0.5 * (self.b - self.a)
    }
}

/// Composite Gauss–Legendre grid on `[-half_length, half_length]` with the
/// same number of nodes on every panel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureGrid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub half_length: f64,
    pub panels: Vec<Panel>,
    pub order: usize,
}

impl QuadratureGrid {
    /// Panels split at every breakpoint and refined to width `<= max_panel`.
    /// Breakpoints must be sorted, start at `-L` and end at `L`.
    pub fn composite(breakpoints: &[f64], max_panel: f64, order: usize) -> Result<Self> {
        if breakpoints.len() < 2 || order == 0 || !(max_panel > 0.0) {
            return Err(Error::Config("quadrature needs two breakpoints, order >= 1 and a positive panel width".into()));
        }
        let l = breakpoints[breakpoints.len() - 1];
        if !(l > 0.0) || (breakpoints[0] + l).abs() > 1e-12 * l {
            return Err(Error::Config("breakpoints must span a symmetric interval [-L, L]".into()));
        }
        if breakpoints.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config("breakpoints must be strictly increasing".into()));
        }
        let (t, w) = gauss_legendre(order);
        let mut panels = Vec::new();
        for seg in breakpoints.windows(2) {
            let len = seg[1] - seg[0];
            let count = (len / max_panel).ceil().max(1.0) as usize;
            for p in 0..count {
                let a = seg[0] + len * p as f64 / count as f64;
                let b = if p + 1 == count { seg[1] } else { seg[0] + len * (p + 1) as f64 / count as f64 };
                panels.push(Panel { a, b });
            }
        }
        let mut nodes = Vec::with_capacity(panels.len() * order);
        let mut weights = Vec::with_capacity(panels.len() * order);
        for p in &panels {
            let (mid, half) = (p.mid(), p.half());
            for j in 0..order {
                nodes.push(mid + half * t[j]);
                weights.push(half * w[j]);
            }
        }
        Ok(QuadratureGrid { nodes, weights, half_length: l, panels, order })
    }

    /// Symmetric grid on `[-L, L]` with breakpoints at 0 and at `±extra`.
    pub fn symmetric(half_length: f64, extra: &[f64], max_panel: f64, order: usize) -> Result<Self> {
        if !(half_length > 0.0) {
            return Err(Error::Config("half_length must be positive".into()));
        }
        let mut bp = vec![-half_length, 0.0, half_length];
        for &e in extra {
            let e = e.abs();
            if e > 0.0 && e < half_length {
                bp.push(e);
                bp.push(-e);
            }
        }
        bp.sort_by(|a, b| a.partial_cmp(b).unwrap());
        bp.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * half_length);
        Self::composite(&bp, max_panel, order)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// True when no panel straddles `x`.
    pub fn has_breakpoint_at(&self, x: f64) -> bool {
        !self.panels.iter().any(|p| p.a < x && x < p.b)
    }

    /// Weighted L² norm of samples on this grid.
    pub fn l2_norm(&self, f: &[num_complex::Complex64]) -> f64 {
        self.weights.iter().zip(f).map(|(w, v)| w * v.norm_sqr()).sum::<f64>().sqrt()
    }
}
