//! Explicit models: the point interaction `H_α`, the step potential
//! `H_{a,b}` and the Dirichlet realisation `H^D`.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::birman_schwinger::{assemble_k_dirichlet, loglog_slope, nystrom_grid, NystromOptions};
use crate::error::{Error, Result};
use crate::potential::PotentialSpec;
use crate::spectral_kernel::{dist_to_ray, on_rays, principal_sqrt, wave_numbers, I, TOL_SPEC};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaModel {
    pub alpha: C64,
    pub lambda: C64,
    /// `λ(α)` avoids the rays, equivalently `α ∉ Γ`.
    pub admissible: bool,
    /// `λ(α)` is an eigenvalue: admissible and `k₊(λ) + k₋(λ) = -α`.
    pub exists: bool,
    /// `|k₊(λ) + k₋(λ) + α|`, or NaN when `λ` sits on a ray.
    pub matching_residual: f64,
}

pub fn delta_lambda(alpha: C64) -> C64 {
    let w = alpha * alpha;
    1.0 / w - w / 4.0
}

pub fn delta_eigenvalue(alpha: C64) -> Result<DeltaModel> {
    if alpha == C64::new(0.0, 0.0) {
        return Err(Error::ZeroCoupling);
    }
    let lambda = delta_lambda(alpha);
    let admissible = !on_rays(lambda, TOL_SPEC);
    let (exists, matching_residual) = if admissible {
        let wn = wave_numbers(lambda);
        let r = (wn.sum() + alpha).norm();
        (r <= 1e-8 * (1.0 + alpha.norm()), r)
    } else {
        (false, f64::NAN)
    };
    Ok(DeltaModel { alpha, lambda, admissible, exists, matching_residual })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaCurve {
    pub sigma: [i8; 3],
    pub samples: Vec<(f64, C64)>,
}

pub const ALL_SIGMAS: [[i8; 3]; 8] = [
    [1, 1, 1],
    [1, 1, -1],
    [1, -1, 1],
    [1, -1, -1],
    [-1, 1, 1],
    [-1, 1, -1],
    [-1, -1, 1],
    [-1, -1, -1],
];

/// `σ₁ √(-2(r + iσ₂) + 2σ₃ √(r(r + 2iσ₂)))`.
pub fn gamma_point(sigma: [i8; 3], r: f64) -> C64 {
    let (s1, s2, s3) = (sigma[0] as f64, sigma[1] as f64, sigma[2] as f64);
    let inner = principal_sqrt(C64::new(r, 0.0) * C64::new(r, 2.0 * s2));
    s1 * principal_sqrt(-2.0 * C64::new(r, s2) + 2.0 * s3 * inner)
}

pub fn gamma_curve(sigma: [i8; 3], r_samples: &[f64]) -> Result<GammaCurve> {
    if sigma.iter().any(|s| *s != 1 && *s != -1) {
        return Err(Error::Config("sigma entries must be +1 or -1".into()));
    }
    if r_samples.iter().any(|r| !(*r >= 0.0)) {
        return Err(Error::Config("gamma curve needs r >= 0".into()));
    }
    Ok(GammaCurve { sigma, samples: r_samples.iter().map(|&r| (r, gamma_point(sigma, r))).collect() })
}

/// Distance from `alpha` to the curve `Γ`, by sampling and golden-section refinement.
pub fn gamma_distance(alpha: C64) -> f64 {
    let r_max = (16.0 * alpha.norm_sqr()).max(1e4);
    let n = 4000;
    let rs: Vec<f64> = std::iter::once(0.0)
        .chain((0..n).map(|k| 10f64.powf(-10.0 + (r_max.log10() + 10.0) * k as f64 / (n - 1) as f64)))
        .collect();
    let mut best = f64::INFINITY;
    for sigma in ALL_SIGMAS {
        let d = |r: f64| (gamma_point(sigma, r) - alpha).norm();
        let (mut jbest, mut dbest) = (0, f64::INFINITY);
        for (j, &r) in rs.iter().enumerate() {
            let v = d(r);
            if v < dbest {
                jbest = j;
                dbest = v;
            }
        }
        let (mut lo, mut hi) = (rs[jbest.saturating_sub(1)], rs[(jbest + 1).min(rs.len() - 1)]);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..100 {
            let a = hi - g * (hi - lo);
            let b = lo + g * (hi - lo);
            if d(a) < d(b) {
                hi = b;
            } else {
                lo = a;
            }
        }
        // far branch: Γ_σ(r) grows like 2√r
        let tail = if alpha.norm_sqr() * 0.25 > r_max { (alpha.norm() - gamma_point(sigma, r_max).norm()).abs() } else { f64::INFINITY };
        best = best.min(dbest).min(d(0.5 * (lo + hi))).min(tail);
    }
    best
}

/// Left-hand side of the step-model eigenvalue equation. Uses the
/// trigonometric form, which continues analytically to the hyperbolic
/// one for `λ + b < 0`, and the limit `sin(2a√μ)/√μ → 2a` at `λ = -b`.
pub fn implicit_residual(lambda: C64, a: f64, b: C64) -> Result<C64> {
    let (trig, _) = implicit_residual_forms(lambda, a, b)?;
    Ok(trig)
}

fn step_prefactors(lambda: C64, b: C64) -> (C64, C64) {
    let p = principal_sqrt(lambda * lambda + 1.0) - lambda - b;
    let q = -I * (principal_sqrt(lambda + I) - principal_sqrt(lambda - I));
    (p, q)
}

/// `(trigonometric, hyperbolic)` forms. The hyperbolic form uses
/// `√|λ + b|`, which is the paper's choice on `λ + b < 0`; for other
/// `λ + b` it is evaluated as written so discrepancies can be reported.
pub fn implicit_residual_forms(lambda: C64, a: f64, b: C64) -> Result<(C64, C64)> {
    if lambda.im.abs() >= 1.0 {
        return Err(Error::Domain(format!("step equation is only available for |Im lambda| < 1, got {lambda}")));
    }
    if !(a > 0.0) {
        return Err(Error::Config("step half-width a must be positive".into()));
    }
    let (p, q) = step_prefactors(lambda, b);
    let mu = lambda + b;
    let trig = if mu == C64::new(0.0, 0.0) {
        p * (2.0 * a) + q
    } else {
        let s = principal_sqrt(mu);
        let t = 2.0 * a * s;
        p * t.sin() / s + q * t.cos()
    };
    let hyper = if mu == C64::new(0.0, 0.0) {
        p * (2.0 * a) + q
    } else {
        let s = mu.norm().sqrt();
        let t = 2.0 * a * s;
        p * (t.sinh() / s) + q * t.cosh()
    };
    Ok((trig, hyper))
}

/// Right-hand side of `cot(2a√(λ+b)) = -(√(λ²+1) - (λ+b)) / (2√(λ+b) Im√(λ+i))`.
pub fn cot_rhs(lambda: f64, b: f64) -> f64 {
    let mu = lambda + b;
    let im = principal_sqrt(C64::new(lambda, 1.0)).im;
    -((lambda * lambda + 1.0).sqrt() - mu) / (2.0 * mu.sqrt() * im)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepEigenvalue {
    pub lambda: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepModel {
    pub a: f64,
    pub b: f64,
    pub lambda_max: f64,
    pub eigenvalues: Vec<StepEigenvalue>,
}

fn cot_equation(lambda: f64, a: f64, b: f64) -> f64 {
    let t = 2.0 * a * (lambda + b).sqrt();
    t.cos() / t.sin() - cot_rhs(lambda, b)
}

const SAMPLES_PER_BRANCH: usize = 64;

/// Real eigenvalues of `H_{a,b}` in `(-b, λ_max]`, bracketed on the
/// monotone branches of `cot` and bisected to `1e-12`.
pub fn find_step_eigenvalues(a: f64, b: f64, lambda_max: f64) -> Result<StepModel> {
    if !(a > 0.0) || !b.is_finite() {
        return Err(Error::Config("step model needs a > 0 and finite real b".into()));
    }
    if !(lambda_max > -b) {
        return Err(Error::Config(format!("lambda_max must exceed -b = {}", -b)));
    }
    let theta_max = 2.0 * a * (lambda_max + b).sqrt();
    let lam = |theta: f64| (theta / (2.0 * a)).powi(2) - b;
    let branches = (theta_max / std::f64::consts::PI).ceil() as usize;
    let mut roots: Vec<f64> = (0..branches)
        .into_par_iter()
        .flat_map_iter(|k| {
            let pi = std::f64::consts::PI;
            let t0 = k as f64 * pi;
            let t1 = ((k + 1) as f64 * pi).min(theta_max);
            let full = t1 == (k + 1) as f64 * pi;
            let pad = 1e-9 * pi;
            let lo = t0 + pad;
            let hi = if full { t1 - pad } else { t1 };
            let mut found = Vec::new();
            if hi <= lo {
                return found;
            }
            let ts: Vec<f64> = (0..=SAMPLES_PER_BRANCH).map(|j| lo + (hi - lo) * j as f64 / SAMPLES_PER_BRANCH as f64).collect();
            let vals: Vec<f64> = ts.iter().map(|&t| cot_equation(lam(t), a, b)).collect();
            for j in 0..SAMPLES_PER_BRANCH {
                if vals[j] == 0.0 {
                    found.push(lam(ts[j]));
                } else if vals[j] * vals[j + 1] < 0.0 {
                    found.push(bisect(|l| cot_equation(l, a, b), lam(ts[j]), lam(ts[j + 1]), vals[j]));
                }
            }
            if !full && vals[SAMPLES_PER_BRANCH] == 0.0 {
                found.push(lam(hi));
            }
            found
        })
        .collect();
    roots.sort_by(|x, y| x.partial_cmp(y).unwrap());
    roots.dedup_by(|x, y| (*x - *y).abs() < 1e-10);
    let eigenvalues = roots
        .into_iter()
        .filter(|&l| l > -b && l <= lambda_max)
        .map(|l| StepEigenvalue {
            lambda: l,
            residual: implicit_residual(C64::new(l, 0.0), a, C64::new(b, 0.0)).map(|r| r.norm()).unwrap_or(f64::NAN),
        })
        .collect();
    Ok(StepModel { a, b, lambda_max, eigenvalues })
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, mut flo: f64) -> f64 {
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Exact `‖(H^D - z)^{-1}‖ = 1 / dist(z, rays)`.
pub fn dirichlet_norm(z: C64) -> Result<f64> {
    if on_rays(z, TOL_SPEC) {
        return Err(Error::Spectrum(z));
    }
    Ok(1.0 / dist_to_ray(z, 1.0).min(dist_to_ray(z, -1.0)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirichletUniformity {
    pub z: Vec<C64>,
    pub hs_norms: Vec<f64>,
    pub max_hs: f64,
    /// Log-log slope of the HS norm against `Re z` (NaN with fewer than two usable points).
    pub slope: f64,
    /// Slope above 0.1.
    pub flagged: bool,
}

/// HS norms of the Dirichlet Birman–Schwinger operator along a sweep.
pub fn dirichlet_bs_uniformity(v: &PotentialSpec, z_sweep: &[C64]) -> Result<DirichletUniformity> {
    let hs_norms = z_sweep
        .par_iter()
        .map(|&z| {
            let grid = nystrom_grid(v, z, NystromOptions::default())?;
            Ok(assemble_k_dirichlet(z, v, &grid)?.matrix.frobenius())
        })
        .collect::<Result<Vec<f64>>>()?;
    let max_hs = hs_norms.iter().cloned().fold(0.0, f64::max);
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        z_sweep.iter().zip(&hs_norms).filter(|(z, h)| z.re > 0.0 && **h > 0.0).map(|(z, h)| (z.re, *h)).unzip();
    let distinct = xs.iter().any(|x| *x != xs[0]);
    let slope = if xs.len() >= 2 && distinct { loglog_slope(&xs, &ys) } else { f64::NAN };
    Ok(DirichletUniformity { z: z_sweep.to_vec(), hs_norms, max_hs, slope, flagged: slope > 0.1 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn delta_values() {
        let m = delta_eigenvalue(c(2.0, 0.0)).unwrap();
        assert_eq!(m.lambda, c(-0.75, 0.0));
        assert!(m.admissible && !m.exists);
        let m = delta_eigenvalue(c(-2.0, 0.0)).unwrap();
        assert!(m.admissible && m.exists);
        let m = delta_eigenvalue(c(-2f64.sqrt(), 0.0)).unwrap();
        assert!(m.lambda.norm() < 1e-15 && m.exists);
        assert!(matches!(delta_eigenvalue(c(0.0, 0.0)), Err(Error::ZeroCoupling)));
    }

    #[test]
    fn gamma_at_zero_gives_i() {
        let a = gamma_point([1, 1, 1], 0.0);
        assert!((a - principal_sqrt(c(0.0, -2.0))).norm() < 1e-15);
        assert!((delta_lambda(a) - I).norm() < 1e-14);
        assert!(!delta_eigenvalue(a).unwrap().admissible);
        assert!(gamma_distance(a) < 1e-12);
        assert!(gamma_distance(c(-2.0, 0.0)) > 0.1);
    }

    #[test]
    fn step_domain_checks() {
        assert!(matches!(implicit_residual(c(0.0, 1.0), 1.0, c(3.0, 0.0)), Err(Error::Domain(_))));
        assert!(find_step_eigenvalues(1.0, 3.0, -4.0).is_err());
        let r = find_step_eigenvalues(1.0, 3.0, -2.9).unwrap();
        assert!(r.eigenvalues.is_empty());
    }

    #[test]
    fn dirichlet_norm_examples() {
        assert_eq!(dirichlet_norm(c(5.0, 0.0)).unwrap(), 1.0);
        assert_eq!(dirichlet_norm(c(5.0, 0.5)).unwrap(), 2.0);
        assert!(dirichlet_norm(c(5.0, 1.0)).is_err());
    }
}
