//! Two-sided bounds on `‖(H - z)^{-1}‖`, quadrature application of the
//! resolvent, and the smoothed-step pseudomode experiment.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{lanczos_largest, LanczosOptions};
use crate::quadrature::{gauss_legendre, lagrange_row, Panel, QuadratureGrid};
use crate::spectral_kernel::{
    classify_region, dist_to_closed_strip, in_closed_strip, in_strip, kernel_from, on_rays, Region,
    WaveNumbers, TOL_SPEC,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundMethod {
    #[serde(rename = "SCHUR")]
    Schur,
    #[serde(rename = "PSEUDOMODE")]
    Pseudomode,
    #[serde(rename = "NUMRANGE")]
    Numrange,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundPair {
    pub z: C64,
    pub lower: f64,
    pub upper: f64,
    pub methods: Vec<BoundMethod>,
}

fn strip_guard(z: C64, what: &str) -> Result<WaveNumbers> {
    if !(z.im.abs() < 1.0) {
        return Err(Error::Domain(format!("{what} needs |Im z| < 1, got z = {z}")));
    }
    Ok(WaveNumbers::new(z))
}

/// One Schur row bound for rows on the side whose wave number is `k_own`.
fn schur_row(k_own: C64, k_other: C64) -> f64 {
    let s = (k_own + k_other).norm();
    let d = (k_own - k_other).norm();
    let (ro, rt) = (k_own.re, k_other.re);
    let ko = k_own.norm();
    1.0 / (rt * s) + 1.0 / (ro * ko) + d / (2.0 * ro * ko * s)
}

/// Schur-test upper bound from closed-form row integrals of `|R_z|`.
pub fn schur_upper_bound(z: C64) -> Result<f64> {
    let wn = strip_guard(z, "schur_upper_bound")?;
    let plus = schur_row(wn.k_plus, wn.k_minus);
    let minus = schur_row(wn.k_minus, wn.k_plus);
    Ok(plus.max(minus))
}

/// Exact ratio `‖(H - z)^{-1} f₀‖ / ‖f₀‖` lower estimate for the half-line
/// exponential `f₀`.
pub fn pseudomode_lower_bound(z: C64) -> Result<f64> {
    let wn = strip_guard(z, "pseudomode_lower_bound")?;
    Ok(1.0 / (2.0 * (wn.k_plus.re * wn.k_minus.re).sqrt() * wn.sum().norm()))
}

/// `1 / dist(z, S̄)` for `z` outside the closed half-strip.
pub fn numrange_bound(z: C64) -> Result<f64> {
    if in_closed_strip(z) {
        return Err(Error::Domain(format!("numrange_bound needs z outside the closed half-strip, got z = {z}")));
    }
    Ok(1.0 / dist_to_closed_strip(z))
}

/// Best available analytic bounds at `z`.
pub fn compute_bounds(z: C64) -> Result<BoundPair> {
    if on_rays(z, TOL_SPEC) {
        return Err(Error::Spectrum(z));
    }
    if in_strip(z) {
        let lower = pseudomode_lower_bound(z)?;
        let upper = schur_upper_bound(z)?;
        debug_assert!(lower <= upper);
        Ok(BoundPair { z, lower, upper, methods: vec![BoundMethod::Pseudomode, BoundMethod::Schur] })
    } else {
        Ok(BoundPair { z, lower: 0.0, upper: numrange_bound(z)?, methods: vec![BoundMethod::Numrange] })
    }
}

/// Half-length beyond which both kernel exponentials fall below `tol`.
pub fn decay_half_length(z: C64, tol: f64) -> f64 {
    let wn = WaveNumbers::new(z);
    let re = wn.k_plus.re.min(wn.k_minus.re);
    -tol.ln() / re
}

/// Shortest oscillation length of the kernel exponentials (capped at 2π).
pub fn kernel_wavelength(z: C64) -> f64 {
    let wn = WaveNumbers::new(z);
    let k = wn.k_plus.norm().max(wn.k_minus.norm()).max(1.0);
    2.0 * std::f64::consts::PI / k
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridOptions {
    pub panels_per_wavelength: f64,
    pub order: usize,
    pub truncation_tol: f64,
    pub max_half_length: f64,
}

impl Default for GridOptions {
    fn default() -> Self {
        GridOptions { panels_per_wavelength: 2.0, order: 8, truncation_tol: 1e-8, max_half_length: 1e5 }
    }
}

/// Grid adapted to the decay and oscillation of `R_z`, with extra
/// breakpoints at `±extra`.
pub fn resolvent_grid(z: C64, extra: &[f64], opts: GridOptions) -> Result<QuadratureGrid> {
    if on_rays(z, TOL_SPEC) {
        return Err(Error::Spectrum(z));
    }
    let l = decay_half_length(z, opts.truncation_tol).max(extra.iter().fold(1.0, |a, b| a.max(b.abs() * 2.0)));
    if l > opts.max_half_length {
        return Err(Error::Config(format!("required half-length {l:.3e} exceeds the cap {:.3e}", opts.max_half_length)));
    }
    let panel = kernel_wavelength(z) / opts.panels_per_wavelength;
    QuadratureGrid::symmetric(l, extra, panel, opts.order)
}

/// Below this modulus of a wave number the separable algorithm loses
/// accuracy and the direct sum is used.
const SMALL_K: f64 = 1e-6;

/// Reference tables for integrating across the kink `|x - y|` inside a panel.
pub(crate) struct KinkTables {
    pub(crate) t: Vec<f64>,
    w: Vec<f64>,
    // for each local node: (sub-nodes, sub-weights, interpolation rows) left and right
    pub(crate) left: Vec<(Vec<f64>, Vec<f64>, Vec<Vec<f64>>)>,
    pub(crate) right: Vec<(Vec<f64>, Vec<f64>, Vec<Vec<f64>>)>,
}

impl KinkTables {
    pub(crate) fn new(m: usize) -> Self {
        let (t, w) = gauss_legendre(m);
        let (gs, gw) = gauss_legendre(m + 4);
        let mut left = Vec::with_capacity(m);
        let mut right = Vec::with_capacity(m);
        for &tl in &t {
            let sub = |a: f64, b: f64| {
                let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
                let nodes: Vec<f64> = gs.iter().map(|g| c + h * g).collect();
                let weights: Vec<f64> = gw.iter().map(|g| h * g).collect();
                let rows: Vec<Vec<f64>> = nodes.iter().map(|&s| lagrange_row(&t, s)).collect();
                (nodes, weights, rows)
            };
            left.push(sub(-1.0, tl));
            right.push(sub(tl, 1.0));
        }
        KinkTables { t, w, left, right }
    }

    /// `A[l][j]`: weights mapping panel samples to `∫ e^{-k|x_l - y|} f(y) dy`.
    fn local_matrix(&self, k: C64, hw: f64, kink: bool) -> Vec<C64> {
        let m = self.t.len();
        let mut a = vec![C64::new(0.0, 0.0); m * m];
        for l in 0..m {
            if kink {
                let (ln, lw, lr) = &self.left[l];
                for s in 0..ln.len() {
                    let e = (-k * hw * (self.t[l] - ln[s])).exp() * (lw[s] * hw);
                    for j in 0..m {
                        a[l * m + j] += e * lr[s][j];
                    }
                }
                let (rn, rw, rr) = &self.right[l];
                for s in 0..rn.len() {
                    let e = (-k * hw * (rn[s] - self.t[l])).exp() * (rw[s] * hw);
                    for j in 0..m {
                        a[l * m + j] += e * rr[s][j];
                    }
                }
            } else {
                for j in 0..m {
                    a[l * m + j] = (-k * hw * (self.t[l] - self.t[j]).abs()).exp() * (self.w[j] * hw);
                }
            }
        }
        a
    }
}

/// `Σ_j w_j f_j e^{-k|x_i - y_j|}` over one half-line, panels given in
/// ascending `|x|` with global node indices in ascending `|x|`.
fn half_line_sum(
    k: C64,
    panels: &[Panel],
    idx: &[Vec<usize>],
    grid: &QuadratureGrid,
    f: &[C64],
    tables: &KinkTables,
    kink: bool,
    out: &mut [C64],
) {
    let m = tables.t.len();
    let np = panels.len();
    if np == 0 {
        return;
    }
    let ax = |i: usize| grid.nodes[i].abs();
    let mut cache: Vec<(f64, Vec<C64>)> = Vec::new();
    // own panel
    for p in 0..np {
        let hw = panels[p].half();
        let pos = cache.iter().position(|(h, _)| (h - hw).abs() <= 1e-12 * hw);
        let loc = match pos {
            Some(q) => &cache[q].1,
            None => {
                cache.push((hw, tables.local_matrix(k, hw, kink)));
                &cache[cache.len() - 1].1
            }
        };
        for l in 0..m {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..m {
                acc += loc[l * m + j] * f[idx[p][j]];
            }
            out[idx[p][l]] = acc;
        }
    }
    // panels to the left
    let mut phi = C64::new(0.0, 0.0);
    let mut anchor = panels[0].a;
    for p in 0..np {
        let (a, b) = (panels[p].a, panels[p].b);
        phi *= (-k * (a - anchor)).exp();
        for &i in &idx[p] {
            out[i] += (-k * (ax(i) - a)).exp() * phi;
        }
        phi *= (-k * (b - a)).exp();
        for &j in &idx[p] {
            phi += grid.weights[j] * f[j] * (-k * (b - ax(j))).exp();
        }
        anchor = b;
    }
    // panels to the right
    let mut psi = C64::new(0.0, 0.0);
    let mut anchor = panels[np - 1].b;
    for p in (0..np).rev() {
        let (a, b) = (panels[p].a, panels[p].b);
        psi *= (-k * (anchor - b)).exp();
        for &i in &idx[p] {
            out[i] += (-k * (b - ax(i))).exp() * psi;
        }
        psi *= (-k * (b - a)).exp();
        for &j in &idx[p] {
            psi += grid.weights[j] * f[j] * (-k * (ax(j) - a)).exp();
        }
        anchor = a;
    }
}

/// `u(x_i) = Σ_j w_j R_z(x_i, x_j) f(x_j)` with the `|x - y|` kink of the
/// kernel integrated exactly on the panel containing `x_i`.
pub fn apply_resolvent(z: C64, grid: &QuadratureGrid, f: &[C64]) -> Result<Vec<C64>> {
    apply_resolvent_with(z, grid, f, true)
}

/// Plain Nyström sum when `kink_correction` is false.
pub fn apply_resolvent_with(z: C64, grid: &QuadratureGrid, f: &[C64], kink_correction: bool) -> Result<Vec<C64>> {
    if classify_region(z, TOL_SPEC) == Region::Spectrum {
        return Err(Error::Spectrum(z));
    }
    if f.len() != grid.len() {
        return Err(Error::Config(format!("sample count {} does not match grid size {}", f.len(), grid.len())));
    }
    if !grid.has_breakpoint_at(0.0) {
        return Err(Error::Config("grid must have a panel boundary at 0".into()));
    }
    let wn = WaveNumbers::new(z);
    if wn.k_plus.norm() < SMALL_K || wn.k_minus.norm() < SMALL_K {
        return Ok(apply_direct(&wn, grid, f));
    }
    let (kp, km) = (wn.k_plus, wn.k_minus);
    let s = kp + km;
    let m = grid.order;
    let tables = KinkTables::new(m);

    let mut pos_panels = Vec::new();
    let mut pos_idx = Vec::new();
    let mut neg_panels = Vec::new();
    let mut neg_idx = Vec::new();
    for (p, panel) in grid.panels.iter().enumerate() {
        let ids: Vec<usize> = (p * m..(p + 1) * m).collect();
        if panel.a >= 0.0 {
            pos_panels.push(*panel);
            pos_idx.push(ids);
        } else {
            neg_panels.push(Panel { a: -panel.b, b: -panel.a });
            neg_idx.push(ids.into_iter().rev().collect());
        }
    }
    neg_panels.reverse();
    neg_idx.reverse();

    let mut c_pos = C64::new(0.0, 0.0);
    let mut c_neg = C64::new(0.0, 0.0);
    for (i, &x) in grid.nodes.iter().enumerate() {
        let wf = grid.weights[i] * f[i];
        if x >= 0.0 {
            c_pos += wf * (-kp * x).exp();
        } else {
            c_neg += wf * (km * x).exp();
        }
    }

    let mut out = vec![C64::new(0.0, 0.0); grid.len()];
    half_line_sum(kp, &pos_panels, &pos_idx, grid, f, &tables, kink_correction, &mut out);
    half_line_sum(km, &neg_panels, &neg_idx, grid, f, &tables, kink_correction, &mut out);

    let refl_plus = (kp - km) / (2.0 * kp * s);
    let refl_minus = (km - kp) / (2.0 * km * s);
    for (i, &x) in grid.nodes.iter().enumerate() {
        if x >= 0.0 {
            out[i] = out[i] / (2.0 * kp) + (-kp * x).exp() * (refl_plus * c_pos + c_neg / s);
        } else {
            out[i] = out[i] / (2.0 * km) + (km * x).exp() * (refl_minus * c_neg + c_pos / s);
        }
    }
    Ok(out)
}

/// Quadratic-cost reference sum using the pointwise kernel.
pub fn apply_direct(wn: &WaveNumbers, grid: &QuadratureGrid, f: &[C64]) -> Vec<C64> {
    grid.nodes
        .iter()
        .map(|&x| {
            grid.nodes
                .iter()
                .zip(&grid.weights)
                .zip(f)
                .map(|((&y, &w), &fv)| kernel_from(wn, x, y) * (w * fv))
                .sum()
        })
        .collect()
}

/// Operator norm of the symmetric Nyström discretisation
/// `W^{1/2} R_z W^{1/2}` estimated by Lanczos on its Gram operator.
pub fn quadrature_operator_norm(z: C64, grid: &QuadratureGrid, seed: u64) -> Result<f64> {
    let sw: Vec<f64> = grid.weights.iter().map(|w| w.sqrt()).collect();
    let apply_b = |v: &[C64]| -> Result<Vec<C64>> {
        let f: Vec<C64> = v.iter().zip(&sw).map(|(x, s)| x / *s).collect();
        let u = apply_resolvent_with(z, grid, &f, false)?;
        Ok(u.iter().zip(&sw).zip(&grid.weights).map(|((x, s), w)| x * (w / s)).collect())
    };
    // B is complex symmetric, so B^H v = conj(B conj(v)).
    let gram = |v: &[C64]| -> Result<Vec<C64>> {
        let bv = apply_b(v)?;
        let conj: Vec<C64> = bv.iter().map(|x| x.conj()).collect();
        Ok(apply_b(&conj)?.iter().map(|x| x.conj()).collect())
    };
    let top = lanczos_largest(grid.len(), gram, LanczosOptions { seed, ..Default::default() })?;
    Ok(top.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pseudomode {
    pub z: C64,
    pub samples: Vec<C64>,
    pub norm: f64,
}

impl Pseudomode {
    /// `f₀(x) = e^{-conj(k₊) x}` on `x > 0`, zero on `x < 0`.
    pub fn half_line(z: C64, grid: &QuadratureGrid) -> Self {
        let kp = WaveNumbers::new(z).k_plus;
        let samples: Vec<C64> = grid
            .nodes
            .iter()
            .map(|&x| if x > 0.0 { (-kp.conj() * x).exp() } else { C64::new(0.0, 0.0) })
            .collect();
        let norm = grid.l2_norm(&samples);
        Pseudomode { z, samples, norm }
    }

    /// `‖f₀‖` on the whole half-line.
    pub fn exact_norm(z: C64) -> f64 {
        1.0 / (2.0 * WaveNumbers::new(z).k_plus.re).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularizedRatio {
    pub z: C64,
    pub smoothing_scale: f64,
    /// `‖g₀‖ / ‖(H̃ - z) g₀‖`.
    pub ratio: f64,
    pub g0_norm: f64,
    pub f0_norm: f64,
    pub hg0_norm: f64,
    /// `‖g₀‖ / ‖f₀‖`, the ratio for the unsmoothed operator.
    pub exact_ratio: f64,
    pub grid_size: usize,
}

/// Smoothed potential: `i sgn x` outside `[-a, 0]`, linear `i(2x/a + 1)` inside.
pub fn smoothed_potential(x: f64, a: f64) -> C64 {
    if x <= -a {
        C64::new(0.0, -1.0)
    } else if x >= 0.0 {
        C64::new(0.0, 1.0)
    } else {
        C64::new(0.0, 2.0 * x / a + 1.0)
    }
}

/// Ratio `‖g₀‖ / ‖(H̃ - z) g₀‖` with `g₀ = (H - z)^{-1} f₀` and `H̃` the
/// operator with the smoothed potential.
pub fn regularized_pseudomode_ratio(z: C64, a: f64, opts: GridOptions) -> Result<RegularizedRatio> {
    if classify_region(z, TOL_SPEC) != Region::W {
        return Err(Error::Domain(format!("regularized_pseudomode_ratio needs z in W, got z = {z}")));
    }
    if !(a > 0.0) {
        return Err(Error::Domain(format!("smoothing scale must be positive, got {a}")));
    }
    let grid = resolvent_grid(z, &[a], opts)?;
    let f0 = Pseudomode::half_line(z, &grid);
    let g0 = apply_resolvent(z, &grid, &f0.samples)?;
    let g0_norm = grid.l2_norm(&g0);
    // h = i sgn - V is supported on [-a, 0], disjoint from supp f₀
    let hg0: Vec<C64> = grid
        .nodes
        .iter()
        .zip(&g0)
        .map(|(&x, g)| {
            let sgn = if x > 0.0 { 1.0 } else if x < 0.0 { -1.0 } else { 0.0 };
            (C64::new(0.0, sgn) - smoothed_potential(x, a)) * g
        })
        .collect();
    let hg0_norm = grid.l2_norm(&hg0);
    let residual: Vec<C64> = f0.samples.iter().zip(&hg0).map(|(f, h)| f - h).collect();
    let res_norm = grid.l2_norm(&residual);
    Ok(RegularizedRatio {
        z,
        smoothing_scale: a,
        ratio: g0_norm / res_norm,
        g0_norm,
        f0_norm: f0.norm,
        hg0_norm,
        exact_ratio: g0_norm / f0.norm,
        grid_size: grid.len(),
    })
}
