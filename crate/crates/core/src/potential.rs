//! Perturbation potentials `V` and their moments.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialSpec {
    /// `amplitude · exp(-(x/width)²)`.
    Gaussian { amplitude: C64, width: f64 },
    /// `amplitude` on `[center - radius, center + radius]`.
    Bump { amplitude: C64, center: f64, radius: f64 },
    /// `(-i sgn x - b)` on `[-a, a]`: turns `i sgn x` into `-b` inside.
    StepAb { a: f64, b: C64 },
    /// Piecewise linear through the samples, zero outside.
    Sampled { nodes: Vec<f64>, values: Vec<C64> },
}

fn sgn0(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Gaussian tail cutoff: `exp(-t²) < 1e-17` beyond `t = 6.3`.
const GAUSS_CUT: f64 = 6.3;

impl PotentialSpec {
    /// Delta-like bump of total mass `alpha` and the given radius at 0.
    pub fn delta_bump(alpha: C64, radius: f64) -> Self {
        PotentialSpec::Bump { amplitude: alpha / (2.0 * radius), center: 0.0, radius }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        match self {
            PotentialSpec::Gaussian { width, .. } if !(*width > 0.0) => bad("gaussian width must be positive"),
            PotentialSpec::Bump { radius, .. } if !(*radius > 0.0) => bad("bump radius must be positive"),
            PotentialSpec::StepAb { a, .. } if !(*a > 0.0) => bad("step half-width a must be positive"),
            PotentialSpec::Sampled { nodes, values } => {
                if nodes.len() != values.len() || nodes.len() < 2 {
                    return bad("sampled potential needs matching nodes and values (at least 2)");
                }
                if nodes.windows(2).any(|w| !(w[1] > w[0])) {
                    return bad("sampled nodes must be strictly increasing");
                }
                if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
                    return bad("sampled values must be finite");
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Value of `V`, averaged across jump discontinuities.
    pub fn value(&self, x: f64) -> C64 {
        let zero = C64::new(0.0, 0.0);
        match self {
            PotentialSpec::Gaussian { amplitude, width } => {
                let t = x / width;
                amplitude * (-t * t).exp()
            }
            PotentialSpec::Bump { amplitude, center, radius } => {
                let d = (x - center).abs();
                if d < *radius {
                    *amplitude
                } else if d == *radius {
                    amplitude * 0.5
                } else {
                    zero
                }
            }
            PotentialSpec::StepAb { a, b } => {
                let inner = C64::new(0.0, -sgn0(x)) - b;
                if x.abs() < *a {
                    inner
                } else if x.abs() == *a {
                    inner * 0.5
                } else {
                    zero
                }
            }
            PotentialSpec::Sampled { nodes, values } => {
                let n = nodes.len();
                if x < nodes[0] || x > nodes[n - 1] {
                    return zero;
                }
                if x == nodes[0] {
                    return values[0] * 0.5;
                }
                if x == nodes[n - 1] {
                    return values[n - 1] * 0.5;
                }
                let j = nodes.partition_point(|&t| t <= x).min(n - 1);
                let (x0, x1) = (nodes[j - 1], nodes[j]);
                let s = (x - x0) / (x1 - x0);
                values[j - 1] * (1.0 - s) + values[j] * s
            }
        }
    }

    /// Points where `V` or its derivative jumps.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            PotentialSpec::Gaussian { .. } => vec![],
            PotentialSpec::Bump { center, radius, .. } => vec![center - radius, center + radius],
            PotentialSpec::StepAb { a, .. } => vec![-a, 0.0, *a],
            PotentialSpec::Sampled { nodes, .. } => nodes.clone(),
        }
    }

    /// Interval outside which `V` vanishes (or is below 1e-17 relative).
    pub fn support(&self) -> (f64, f64) {
        match self {
            PotentialSpec::Gaussian { width, .. } => (-GAUSS_CUT * width, GAUSS_CUT * width),
            PotentialSpec::Bump { center, radius, .. } => (center - radius, center + radius),
            PotentialSpec::StepAb { a, .. } => (-a, *a),
            PotentialSpec::Sampled { nodes, .. } => (nodes[0], nodes[nodes.len() - 1]),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            PotentialSpec::Gaussian { amplitude, .. } | PotentialSpec::Bump { amplitude, .. } => {
                *amplitude == C64::new(0.0, 0.0)
            }
            PotentialSpec::StepAb { .. } => false,
            PotentialSpec::Sampled { values, .. } => values.iter().all(|v| *v == C64::new(0.0, 0.0)),
        }
    }

    /// `∫ (1 + x^{2n}) |V(x)| dx`; `n = 0` gives twice the L¹ norm, so the
    /// plain L¹ norm is provided separately.
    pub fn moment(&self, n: u32) -> f64 {
        let p = 2 * n as i32;
        match self {
            PotentialSpec::Gaussian { amplitude, width } => {
                let a = amplitude.norm();
                // ∫ x^{2n} e^{-x²/w²} = w^{2n+1} Γ(n + 1/2)
                let mut gamma = std::f64::consts::PI.sqrt();
                for k in 0..n {
                    gamma *= k as f64 + 0.5;
                }
                a * width * std::f64::consts::PI.sqrt() + a * width.powi(p + 1) * gamma
            }
            PotentialSpec::Bump { amplitude, center, radius } => {
                let (lo, hi) = (center - radius, center + radius);
                amplitude.norm() * ((hi - lo) + (hi.powi(p + 1) - lo.powi(p + 1)) / (p + 1) as f64)
            }
            PotentialSpec::StepAb { a, b } => {
                let i = C64::new(0.0, 1.0);
                let side = a + a.powi(p + 1) / (p + 1) as f64;
                ((i + b).norm() + (i - b).norm()) * side
            }
            PotentialSpec::Sampled { nodes, values } => trapezoid(nodes, |k| {
                (1.0 + nodes[k].powi(p)) * values[k].norm()
            }),
        }
    }

    pub fn l1_norm(&self) -> f64 {
        match self {
            PotentialSpec::Gaussian { amplitude, width } => amplitude.norm() * width * std::f64::consts::PI.sqrt(),
            PotentialSpec::Bump { amplitude, radius, .. } => amplitude.norm() * 2.0 * radius,
            PotentialSpec::StepAb { a, b } => {
                let i = C64::new(0.0, 1.0);
                a * ((i + b).norm() + (i - b).norm())
            }
            PotentialSpec::Sampled { nodes, values } => trapezoid(nodes, |k| values[k].norm()),
        }
    }

    /// `V(-x) = conj(V(x))`.
    pub fn is_pt_symmetric(&self) -> bool {
        match self {
            PotentialSpec::Gaussian { amplitude, .. } => amplitude.im == 0.0,
            PotentialSpec::Bump { amplitude, center, .. } => amplitude.im == 0.0 && *center == 0.0,
            PotentialSpec::StepAb { b, .. } => b.im == 0.0,
            PotentialSpec::Sampled { nodes, values } => {
                let n = nodes.len();
                (0..n).all(|k| nodes[k] == -nodes[n - 1 - k] && values[k] == values[n - 1 - k].conj())
            }
        }
    }
}

fn trapezoid(nodes: &[f64], f: impl Fn(usize) -> f64) -> f64 {
    (1..nodes.len()).map(|k| 0.5 * (nodes[k] - nodes[k - 1]) * (f(k) + f(k - 1))).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments_closed_forms() {
        let g = PotentialSpec::Gaussian { amplitude: C64::new(-1.0, 0.0), width: 1.0 };
        let sp = std::f64::consts::PI.sqrt();
        assert!((g.l1_norm() - sp).abs() < 1e-15);
        assert!((g.moment(1) - (sp + sp / 2.0)).abs() < 1e-14);
        assert!((g.moment(2) - (sp + 0.75 * sp)).abs() < 1e-14);
        let b = PotentialSpec::delta_bump(C64::new(-2.0, 0.0), 1e-2);
        assert!((b.l1_norm() - 2.0).abs() < 1e-14);
        let s = PotentialSpec::StepAb { a: 1.0, b: C64::new(3.0, 0.0) };
        assert!((s.l1_norm() - 2.0 * 10f64.sqrt()).abs() < 1e-14);
        assert!(s.is_pt_symmetric() && g.is_pt_symmetric());
    }

    #[test]
    fn averaged_at_jumps() {
        let s = PotentialSpec::StepAb { a: 1.0, b: C64::new(3.0, 0.0) };
        assert_eq!(s.value(0.0), C64::new(-3.0, 0.0));
        assert_eq!(s.value(1.0), C64::new(-1.5, -0.5));
        assert_eq!(s.value(1.5), C64::new(0.0, 0.0));
        let v = PotentialSpec::Sampled { nodes: vec![-1.0, 0.0, 1.0], values: vec![C64::new(1.0, 0.0); 3] };
        assert_eq!(v.value(0.5), C64::new(1.0, 0.0));
        assert!((v.l1_norm() - 2.0).abs() < 1e-15);
        assert!(v.validate().is_ok());
        assert!(PotentialSpec::Bump { amplitude: C64::new(1.0, 0.0), center: 0.0, radius: 0.0 }.validate().is_err());
    }
}
