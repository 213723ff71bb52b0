//! Nyström discretisation of the Birman–Schwinger operator
//! `K_z = |V|^{1/2} (H - z)^{-1} V_{1/2}` and eigenvalue detection for
//! `H + εV` through `det(I + εK_z)`.

use faer::complex_native::c64;
use faer::prelude::SpSolver;
use faer::Mat;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
pub use crate::potential::PotentialSpec;
use crate::quadrature::QuadratureGrid;
use crate::resolvent_bounds::{kernel_wavelength, KinkTables};
use crate::spectral_kernel::{
    check_kernel_domain, dirichlet_kernel_from, in_strip, kernel_from, on_rays, WaveNumbers, TOL_SPEC,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Full,
    Dirichlet,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NystromOptions {
    pub order: usize,
    pub panels_per_wavelength: f64,
    /// Upper bound on the panel width relative to the potential's length scale.
    pub feature_fraction: f64,
}

impl Default for NystromOptions {
    fn default() -> Self {
        NystromOptions { order: 10, panels_per_wavelength: 1.0, feature_fraction: 0.5 }
    }
}

fn feature_scale(v: &PotentialSpec) -> f64 {
    match v {
        PotentialSpec::Gaussian { width, .. } => *width,
        PotentialSpec::Bump { radius, .. } => 2.0 * radius,
        PotentialSpec::StepAb { a, .. } => *a,
        PotentialSpec::Sampled { .. } => f64::INFINITY,
    }
}

/// Grid covering the support of `V`, resolving the kernel oscillation at `z`.
pub fn nystrom_grid(v: &PotentialSpec, z: C64, opts: NystromOptions) -> Result<QuadratureGrid> {
    v.validate()?;
    let (lo, hi) = v.support();
    let l = lo.abs().max(hi.abs());
    let panel = (kernel_wavelength(z) / opts.panels_per_wavelength).min(opts.feature_fraction * feature_scale(v));
    let mut bp: Vec<f64> = vec![-l, 0.0, l];
    bp.extend(v.breakpoints().into_iter().filter(|x| x.abs() < l));
    bp.sort_by(|a, b| a.partial_cmp(b).unwrap());
    bp.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * l);
    QuadratureGrid::composite(&bp, panel, opts.order)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NystromOperator {
    pub z: C64,
    pub grid: QuadratureGrid,
    /// Grid indices with `V(x_i) != 0`; rows and columns of `matrix`.
    pub active: Vec<usize>,
    pub matrix: DenseMatrix,
    /// Own-panel entries use product integration across the diagonal kink.
    pub kink_corrected: bool,
}

struct Weights {
    active: Vec<usize>,
    left: Vec<C64>,
    right: Vec<C64>,
}

fn weights(v: &PotentialSpec, grid: &QuadratureGrid) -> Weights {
    let mut active = Vec::new();
    let mut left = Vec::new();
    let mut right = Vec::new();
    for (i, &x) in grid.nodes.iter().enumerate() {
        let val = v.value(x);
        let a = val.norm();
        if a > 0.0 {
            let sw = grid.weights[i].sqrt();
            active.push(i);
            left.push(C64::new(a.sqrt() * sw, 0.0));
            right.push(val / a.sqrt() * sw);
        }
    }
    Weights { active, left, right }
}

fn check_grid_covers(v: &PotentialSpec, grid: &QuadratureGrid) -> Result<()> {
    let (lo, hi) = v.support();
    let l = grid.half_length * (1.0 + 1e-12);
    if lo < -l || hi > l {
        return Err(Error::Config(format!(
            "grid [-{0}, {0}] does not cover the potential support [{lo}, {hi}]",
            grid.half_length
        )));
    }
    Ok(())
}

fn assemble_with(z: C64, v: &PotentialSpec, grid: &QuadratureGrid, kind: KernelKind, corrected: bool) -> Result<NystromOperator> {
    check_kernel_domain(z)?;
    v.validate()?;
    check_grid_covers(v, grid)?;
    let wn = WaveNumbers::new(z);
    let w = weights(v, grid);
    let n = w.active.len();
    let mut data = vec![C64::new(0.0, 0.0); n * n];
    data.par_chunks_mut(n.max(1)).enumerate().for_each(|(r, row)| {
        let x = grid.nodes[w.active[r]];
        for c in 0..n {
            let y = grid.nodes[w.active[c]];
            let k = match kind {
                KernelKind::Full => kernel_from(&wn, x, y),
                KernelKind::Dirichlet => dirichlet_kernel_from(&wn, x, y),
            };
            row[c] = w.left[r] * k * w.right[c];
        }
    });
    if corrected && n > 0 {
        correct_diagonal_panels(&wn, kind, grid, &w, &mut data);
    }
    let matrix = DenseMatrix { n, data };
    if !matrix.is_finite() {
        return Err(Error::Domain(format!("non-finite Nyström entries at z = {z}")));
    }
    Ok(NystromOperator { z, grid: grid.clone(), active: w.active, matrix, kink_corrected: corrected })
}

/// Replace each row's own-panel entries by product-integration weights:
/// the panel is split at the row node and `V_{1/2} u` is interpolated
/// by the panel's Lagrange basis.
fn correct_diagonal_panels(wn: &WaveNumbers, kind: KernelKind, grid: &QuadratureGrid, w: &Weights, data: &mut [C64]) {
    let m = grid.order;
    let n = w.active.len();
    let tables = KinkTables::new(m);
    let mut pos = vec![usize::MAX; grid.len()];
    for (r, &i) in w.active.iter().enumerate() {
        pos[i] = r;
    }
    data.par_chunks_mut(n).enumerate().for_each(|(r, row)| {
        let i = w.active[r];
        let (p, l) = (i / m, i % m);
        let panel = grid.panels[p];
        let (c, h) = (panel.mid(), panel.half());
        let x = grid.nodes[i];
        let mut acc = vec![C64::new(0.0, 0.0); m];
        for (sn, sw, rows) in [&tables.left[l], &tables.right[l]] {
            for q in 0..sn.len() {
                let y = c + h * sn[q];
                let k = match kind {
                    KernelKind::Full => kernel_from(wn, x, y),
                    KernelKind::Dirichlet => dirichlet_kernel_from(wn, x, y),
                } * (sw[q] * h);
                for j in 0..m {
                    acc[j] += k * rows[q][j];
                }
            }
        }
        for j in 0..m {
            let col = pos[p * m + j];
            if col != usize::MAX {
                row[col] = w.left[r] * acc[j] * w.right[col] / grid.weights[p * m + j];
            }
        }
    });
}

/// Nyström matrix `√w_i |V|^{1/2}(x_i) R_z(x_i, x_j) V_{1/2}(x_j) √w_j`.
pub fn assemble_k(z: C64, v: &PotentialSpec, grid: &QuadratureGrid) -> Result<NystromOperator> {
    assemble_with(z, v, grid, KernelKind::Full, false)
}

/// Same construction with the Dirichlet-realisation kernel.
pub fn assemble_k_dirichlet(z: C64, v: &PotentialSpec, grid: &QuadratureGrid) -> Result<NystromOperator> {
    assemble_with(z, v, grid, KernelKind::Dirichlet, false)
}

/// Nyström matrix with the diagonal kink integrated exactly against the
/// panel interpolant. Eigenvalues converge spectrally in the panel order;
/// used for determinants and eigenvalue detection.
pub fn assemble_k_corrected(z: C64, v: &PotentialSpec, grid: &QuadratureGrid, kind: KernelKind) -> Result<NystromOperator> {
    assemble_with(z, v, grid, kind, true)
}

pub fn hs_norm(z: C64, v: &PotentialSpec, grid: &QuadratureGrid) -> Result<f64> {
    Ok(assemble_k(z, v, grid)?.matrix.frobenius())
}

/// Pointwise bound on `|R_z(x, y)|` from the kernel formula.
pub fn kernel_sup_bound(z: C64) -> Result<f64> {
    check_kernel_domain(z)?;
    let wn = WaveNumbers::new(z);
    let (kp, km) = (wn.k_plus, wn.k_minus);
    let s = (kp + km).norm();
    let d = (kp - km).norm();
    let side = |k: C64| 1.0 / (2.0 * k.norm()) + d / (2.0 * k.norm() * s);
    Ok((1.0 / s).max(side(kp)).max(side(km)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecompositionDiagnostics {
    pub z: C64,
    pub k_hs: f64,
    /// `√(Re z) ‖V‖₁`.
    pub l_hs: f64,
    pub l_hs_quadrature: f64,
    pub m_hs: f64,
    /// Frobenius norm of the assembled `L + M`.
    pub sum_hs: f64,
}

/// Nyström matrix of the rank-one part `L_z`.
pub fn assemble_l(z: C64, v: &PotentialSpec, grid: &QuadratureGrid) -> Result<DenseMatrix> {
    check_grid_covers(v, grid)?;
    let st = z.re.max(0.0).sqrt();
    let w = weights(v, grid);
    let n = w.active.len();
    let phase: Vec<C64> = w.active.iter().map(|&i| (C64::new(0.0, -st * grid.nodes[i])).exp()).collect();
    Ok(DenseMatrix::from_fn(n, |r, c| w.left[r] * phase[r] * phase[c] * w.right[c] * st))
}

pub fn decomposition_diagnostics(z: C64, v: &PotentialSpec, grid: &QuadratureGrid) -> Result<DecompositionDiagnostics> {
    if !in_strip(z) || on_rays(z, TOL_SPEC) {
        return Err(Error::Domain(format!("decomposition needs z in the half-strip, got z = {z}")));
    }
    let k = assemble_k(z, v, grid)?;
    let l = assemble_l(z, v, grid)?;
    let m = DenseMatrix { n: k.matrix.n, data: k.matrix.data.iter().zip(&l.data).map(|(a, b)| a - b).collect() };
    let sum = DenseMatrix { n: m.n, data: m.data.iter().zip(&l.data).map(|(a, b)| a + b).collect() };
    Ok(DecompositionDiagnostics {
        z,
        k_hs: k.matrix.frobenius(),
        l_hs: z.re.max(0.0).sqrt() * v.l1_norm(),
        l_hs_quadrature: l.frobenius(),
        m_hs: m.frobenius(),
        sum_hs: sum.frobenius(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub is_eigenvalue: bool,
    /// Eigenvalue of `εK_z` nearest to -1.
    pub nearest_k_eigenvalue_to_minus_one: C64,
    pub det_value: C64,
    /// Eigenvalue condition number used to scale the tolerance.
    pub condition: f64,
    pub tolerance: f64,
}

fn to_mat(m: &DenseMatrix) -> Mat<c64> {
    Mat::from_fn(m.n, m.n, |i, j| {
        let v = m.get(i, j);
        c64::new(v.re, v.im)
    })
}

/// Eigenvalue condition number `‖x‖‖y‖ / |yᵀx|` from right and left
/// eigenvectors obtained by inverse iteration.
fn eigen_condition(a: &DenseMatrix, mu: C64) -> f64 {
    let n = a.n;
    let shift = mu + C64::new(1e-10, 1e-10) * mu.norm().max(1.0);
    let shifted = DenseMatrix::from_fn(n, |i, j| if i == j { a.get(i, j) - shift } else { a.get(i, j) });
    let lu = to_mat(&shifted).partial_piv_lu();
    let normalise = |x: Mat<c64>| -> Option<Mat<c64>> {
        let nrm = (0..n)
            .map(|i| {
                let v = x.read(i, 0);
                v.re * v.re + v.im * v.im
            })
            .sum::<f64>()
            .sqrt();
        if nrm.is_finite() && nrm > 0.0 {
            Some(Mat::from_fn(n, 1, |i, _| x.read(i, 0) * c64::new(1.0 / nrm, 0.0)))
        } else {
            None
        }
    };
    let start = Mat::<c64>::from_fn(n, 1, |i, _| c64::new(1.0 / (1.0 + i as f64), 0.5));
    let (mut x, mut y) = (start.clone(), start);
    for _ in 0..3 {
        x = match normalise(lu.solve(&x)) {
            Some(v) => v,
            None => return f64::INFINITY,
        };
        y = match normalise(lu.solve_transpose(&y)) {
            Some(v) => v,
            None => return f64::INFINITY,
        };
    }
    let yx: C64 = (0..n)
        .map(|i| {
            let (p, q) = (y.read(i, 0), x.read(i, 0));
            C64::new(p.re, p.im) * C64::new(q.re, q.im)
        })
        .sum();
    1.0 / yx.norm()
}

pub const DEFAULT_TOL_BS: f64 = 1e-6;

/// Whether `-1` is an eigenvalue of `εK_z` up to a condition-scaled tolerance.
pub fn detect_eigenvalue(z: C64, eps: f64, v: &PotentialSpec, grid: &QuadratureGrid, tol_bs: f64) -> Result<Detection> {
    let k = assemble_k_corrected(z, v, grid, KernelKind::Full)?;
    let det_value = fredholm_determinant(&k, eps, v);
    if eps == 0.0 || k.matrix.n == 0 {
        return Ok(Detection {
            is_eigenvalue: false,
            nearest_k_eigenvalue_to_minus_one: C64::new(0.0, 0.0),
            det_value: C64::new(1.0, 0.0),
            condition: 1.0,
            tolerance: tol_bs,
        });
    }
    let scaled = DenseMatrix { n: k.matrix.n, data: k.matrix.data.iter().map(|x| x * eps).collect() };
    let ev = scaled.eigenvalues();
    let minus_one = C64::new(-1.0, 0.0);
    let nearest = ev
        .iter()
        .copied()
        .min_by(|a, b| (a - minus_one).norm().partial_cmp(&(b - minus_one).norm()).unwrap())
        .unwrap();
    let condition = eigen_condition(&scaled, nearest).max(1.0);
    let tolerance = tol_bs * condition;
    Ok(Detection {
        is_eigenvalue: (nearest - minus_one).norm() <= tolerance,
        nearest_k_eigenvalue_to_minus_one: nearest,
        det_value,
        condition,
        tolerance,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchBox {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl SearchBox {
    pub fn contains(&self, z: C64) -> bool {
        z.re >= self.re_min && z.re <= self.re_max && z.im >= self.im_min && z.im <= self.im_max
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.re_min < self.re_max && self.im_min < self.im_max) {
            return Err(Error::Config("search box needs re_min < re_max and im_min < im_max".into()));
        }
        // a box crossing Im = ±1 at Re >= 0 would touch the rays
        let crosses = |s: f64| self.im_min - TOL_SPEC <= s && s <= self.im_max + TOL_SPEC && self.re_max >= -TOL_SPEC;
        if crosses(1.0) || crosses(-1.0) {
            return Err(Error::Config("search box intersects the spectral rays".into()));
        }
        Ok(())
    }

    pub fn describe(&self) -> String {
        format!("[{}, {}] x [{}, {}]", self.re_min, self.re_max, self.im_min, self.im_max)
    }

    fn reference_point(&self) -> C64 {
        C64::new(self.re_max.max(1.0), 0.5 * (self.im_min + self.im_max))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootReport {
    pub z: C64,
    /// `|det(I + εK_z)|` at the root.
    pub residual: f64,
    pub seed_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootSearch {
    pub roots: Vec<RootReport>,
    /// `(seed index, message)` for seeds that did not converge.
    pub failures: Vec<(usize, String)>,
}

/// `det(I + εK_z)` on a fixed grid.
pub fn bs_determinant(z: C64, eps: f64, v: &PotentialSpec, grid: &QuadratureGrid) -> Result<C64> {
    let k = assemble_k_corrected(z, v, grid, KernelKind::Full)?;
    Ok(fredholm_determinant(&k, eps, v))
}

/// `det(I + εK)` as `det₂(I + εK) exp(ε tr K)`, with the trace taken from the
/// smooth diagonal `V(x) R_z(x, x)`. The product-integration matrix carries
/// spurious small eigenvalues whose sum is only first order in the panel width.
fn fredholm_determinant(k: &NystromOperator, eps: f64, v: &PotentialSpec) -> C64 {
    let m = &k.matrix;
    let wn = WaveNumbers::new(k.z);
    let exact: C64 = k
        .active
        .iter()
        .map(|&i| {
            let x = k.grid.nodes[i];
            v.value(x) * kernel_from(&wn, x, x) * k.grid.weights[i]
        })
        .sum();
    let matrix_trace: C64 = (0..m.n).map(|i| m.get(i, i)).sum();
    m.scaled_identity_plus(eps).determinant() * (eps * (exact - matrix_trace)).exp()
}

fn secant(f: impl Fn(C64) -> Result<C64>, seed: C64, bx: &SearchBox) -> Result<(C64, f64)> {
    let mut z0 = seed;
    let mut z1 = seed + C64::new(1e-3, 1e-4) * seed.norm().max(1.0);
    let mut f0 = f(z0)?;
    let mut f1 = f(z1)?;
    for _ in 0..80 {
        let denom = f1 - f0;
        if denom.norm() == 0.0 {
            break;
        }
        let z2 = z1 - f1 * (z1 - z0) / denom;
        if !bx.contains(z2) || on_rays(z2, TOL_SPEC) || !(z2.re.is_finite() && z2.im.is_finite()) {
            return Err(Error::NoConvergence(format!("secant from {seed} left the search box")));
        }
        let step = (z2 - z1).norm();
        z0 = z1;
        f0 = f1;
        z1 = z2;
        f1 = f(z1)?;
        if step <= 1e-12 * z1.norm().max(1.0) || f1.norm() == 0.0 {
            return Ok((z1, f1.norm()));
        }
    }
    Err(Error::NoConvergence(format!("secant from {seed} did not converge")))
}

/// Roots of `z ↦ det(I + εK_z)` from each seed, deduplicated and sorted.
pub fn find_eigenvalues(
    eps: f64,
    v: &PotentialSpec,
    search_box: &SearchBox,
    seeds: &[C64],
    opts: NystromOptions,
) -> Result<RootSearch> {
    search_box.validate()?;
    let grid = nystrom_grid(v, search_box.reference_point(), opts)?;
    let results: Vec<(usize, Result<(C64, f64)>)> = seeds
        .par_iter()
        .enumerate()
        .map(|(i, &s)| (i, secant(|z| bs_determinant(z, eps, v, &grid), s, search_box)))
        .collect();
    let mut roots: Vec<RootReport> = Vec::new();
    let mut failures = Vec::new();
    for (i, r) in results {
        match r {
            Ok((z, residual)) => {
                if !roots.iter().any(|q| (q.z - z).norm() < 1e-6) {
                    roots.push(RootReport { z, residual, seed_index: i });
                }
            }
            Err(Error::NoConvergence(m)) => failures.push((i, m)),
            Err(e) => failures.push((i, e.to_string())),
        }
    }
    roots.sort_by(|a, b| a.z.re.partial_cmp(&b.z.re).unwrap().then(a.z.im.partial_cmp(&b.z.im).unwrap()));
    Ok(RootSearch { roots, failures })
}

/// Seeds at local minima of `|det|` along horizontal lines of the box.
pub fn scan_seeds(eps: f64, v: &PotentialSpec, search_box: &SearchBox, n_re: usize, ims: &[f64], opts: NystromOptions) -> Result<Vec<C64>> {
    search_box.validate()?;
    let grid = nystrom_grid(v, search_box.reference_point(), opts)?;
    let res = sample_line(search_box.re_min, search_box.re_max, n_re);
    let mut seeds = Vec::new();
    for &im in ims {
        let vals: Vec<f64> = res
            .par_iter()
            .map(|&re| bs_determinant(C64::new(re, im), eps, v, &grid).map(|d| d.norm()))
            .collect::<Result<Vec<f64>>>()?;
        for j in 0..vals.len() {
            let left = if j > 0 { vals[j - 1] } else { f64::INFINITY };
            let right = if j + 1 < vals.len() { vals[j + 1] } else { f64::INFINITY };
            if vals[j] <= left && vals[j] <= right {
                seeds.push(C64::new(res[j], im));
            }
        }
    }
    Ok(seeds)
}

/// Points on `[lo, hi]`: uniform below 1, logarithmic above.
fn sample_line(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let n = n.max(4);
    if hi <= 1.0 || lo >= 1.0 {
        return (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect();
    }
    let nl = n / 4;
    let nh = n - nl;
    let mut v: Vec<f64> = (0..nl).map(|k| lo + (1.0 - lo) * k as f64 / nl as f64).collect();
    let (a, b) = (1f64.ln(), hi.ln());
    v.extend((0..nh).map(|k| (a + (b - a) * k as f64 / (nh - 1) as f64).exp()));
    v
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakCouplingReport {
    pub eps: Vec<f64>,
    pub eigenvalues: Vec<C64>,
    pub residuals: Vec<f64>,
    pub slope: f64,
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeakCouplingOptions {
    /// The box for `ε` is `[re_min, scale / ε²] x [-im, im]`.
    pub re_min: f64,
    pub scale: f64,
    pub im: f64,
    pub scan_points: usize,
    pub nystrom: NystromOptions,
}

impl Default for WeakCouplingOptions {
    fn default() -> Self {
        WeakCouplingOptions { re_min: -5.0, scale: 20.0, im: 0.9, scan_points: 48, nystrom: NystromOptions::default() }
    }
}

/// Locate the eigenvalue of `H + εV` for each `ε` and fit `log Re λ` against `log ε`.
pub fn weak_coupling_rate(v: &PotentialSpec, eps_list: &[f64], opts: WeakCouplingOptions) -> Result<WeakCouplingReport> {
    if eps_list.len() < 3 {
        return Err(Error::Config("weak_coupling_rate needs at least 3 values of eps".into()));
    }
    if eps_list.windows(2).any(|w| !(w[1] < w[0])) || eps_list.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::Config("eps list must be positive and strictly decreasing".into()));
    }
    let mut eigenvalues = Vec::new();
    let mut residuals = Vec::new();
    for &eps in eps_list {
        let bx = SearchBox { re_min: opts.re_min, re_max: opts.scale / (eps * eps), im_min: -opts.im, im_max: opts.im };
        let seeds = scan_seeds(eps, v, &bx, opts.scan_points, &[0.0], opts.nystrom)?;
        let found = find_eigenvalues(eps, v, &bx, &seeds, opts.nystrom)?;
        let best = found
            .roots
            .iter()
            .filter(|r| r.z.re > 0.0)
            .min_by(|a, b| a.z.im.abs().partial_cmp(&b.z.im.abs()).unwrap().then(a.z.re.partial_cmp(&b.z.re).unwrap()));
        match best {
            Some(r) => {
                eigenvalues.push(r.z);
                residuals.push(r.residual);
            }
            None => return Err(Error::EigenvalueLost { eps, search_box: bx.describe() }),
        }
    }
    let re: Vec<f64> = eigenvalues.iter().map(|z| z.re).collect();
    Ok(WeakCouplingReport { eps: eps_list.to_vec(), slope: loglog_slope(eps_list, &re), eigenvalues, residuals })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindingReport {
    pub search_box: SearchBox,
    /// Number of zeros of `det(I + εK_z)` inside the box.
    pub winding_number: i64,
    pub min_abs_det: f64,
    pub max_abs_det_minus_one: f64,
    pub evaluations: usize,
}

/// Count zeros of `z ↦ det(I + εK_z)` inside a box by the argument
/// principle, refining boundary segments until each phase step is below
/// `max_phase_step`. Grids are rebuilt per point.
pub fn count_zeros_in_box(eps: f64, v: &PotentialSpec, bx: &SearchBox, samples_per_side: usize, max_phase_step: f64, opts: NystromOptions) -> Result<WindingReport> {
    bx.validate()?;
    let det = |z: C64| -> Result<C64> {
        let grid = nystrom_grid(v, z, opts)?;
        bs_determinant(z, eps, v, &grid)
    };
    let corners = [
        C64::new(bx.re_min, bx.im_min),
        C64::new(bx.re_max, bx.im_min),
        C64::new(bx.re_max, bx.im_max),
        C64::new(bx.re_min, bx.im_max),
    ];
    let mut points: Vec<C64> = Vec::new();
    for s in 0..4 {
        let (a, b) = (corners[s], corners[(s + 1) % 4]);
        let horizontal = a.im == b.im;
        let ts: Vec<f64> = if horizontal {
            let (lo, hi) = (a.re.min(b.re), a.re.max(b.re));
            let mut xs = sample_line(lo, hi, samples_per_side);
            if a.re > b.re {
                xs.reverse();
            }
            xs
        } else {
            (0..samples_per_side).map(|k| a.im + (b.im - a.im) * k as f64 / (samples_per_side - 1) as f64).collect()
        };
        for (k, t) in ts.iter().enumerate() {
            if k + 1 == ts.len() {
                continue;
            }
            points.push(if horizontal { C64::new(*t, a.im) } else { C64::new(a.re, *t) });
        }
    }
    let vals: Vec<C64> = points.par_iter().map(|&z| det(z)).collect::<Result<Vec<C64>>>()?;
    let mut evaluations = vals.len();
    let mut total = 0.0;
    let mut min_abs = f64::INFINITY;
    let mut max_dev: f64 = 0.0;
    let np = points.len();
    for k in 0..np {
        let (za, zb) = (points[k], points[(k + 1) % np]);
        let (fa, fb) = (vals[k], vals[(k + 1) % np]);
        min_abs = min_abs.min(fa.norm());
        max_dev = max_dev.max((fa - 1.0).norm());
        let mut stack = vec![(za, fa, zb, fb, 0usize)];
        while let Some((za, fa, zb, fb, depth)) = stack.pop() {
            let step = (fb / fa).arg();
            if step.abs() <= max_phase_step || depth >= 20 {
                total += step;
                continue;
            }
            let zm = 0.5 * (za + zb);
            let fm = det(zm)?;
            evaluations += 1;
            min_abs = min_abs.min(fm.norm());
            max_dev = max_dev.max((fm - 1.0).norm());
            stack.push((zm, fm, zb, fb, depth + 1));
            stack.push((za, fa, zm, fm, depth + 1));
        }
    }
    Ok(WindingReport {
        search_box: *bx,
        winding_number: (total / (2.0 * std::f64::consts::PI)).round() as i64,
        min_abs_det: min_abs,
        max_abs_det_minus_one: max_dev,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn zero_potential_gives_empty_operator() {
        let v = PotentialSpec::Gaussian { amplitude: c(0.0, 0.0), width: 1.0 };
        let g = nystrom_grid(&v, c(2.0, 0.0), NystromOptions::default()).unwrap();
        let k = assemble_k(c(2.0, 0.0), &v, &g).unwrap();
        assert_eq!(k.matrix.n, 0);
        assert_eq!(k.matrix.frobenius(), 0.0);
        let d = detect_eigenvalue(c(2.0, 0.0), 1.0, &v, &g, DEFAULT_TOL_BS).unwrap();
        assert!(!d.is_eigenvalue);
        assert_eq!(d.det_value, c(1.0, 0.0));
    }

    #[test]
    fn grid_must_cover_support() {
        let v = PotentialSpec::StepAb { a: 2.0, b: c(1.0, 0.0) };
        let g = QuadratureGrid::symmetric(1.0, &[], 0.1, 4).unwrap();
        assert!(matches!(assemble_k(c(-1.0, 0.0), &v, &g), Err(Error::Config(_))));
    }

    #[test]
    fn rate_needs_three_points() {
        let v = PotentialSpec::delta_bump(c(-2.0, 0.0), 1e-4);
        assert!(weak_coupling_rate(&v, &[0.5], WeakCouplingOptions::default()).is_err());
        assert!(weak_coupling_rate(&v, &[0.5, 0.6, 0.1], WeakCouplingOptions::default()).is_err());
    }

    #[test]
    fn box_validation() {
        let bad = SearchBox { re_min: -1.0, re_max: 5.0, im_min: -2.0, im_max: 0.0 };
        assert!(bad.validate().is_err());
        let ok = SearchBox { re_min: -1.0, re_max: 5.0, im_min: -0.9, im_max: 0.9 };
        assert!(ok.validate().is_ok());
    }

    #[test]
    fn slope_of_power_law() {
        let x = [1.0, 2.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(-2.0)).collect();
        assert!((loglog_slope(&x, &y) + 2.0).abs() < 1e-12);
    }
}
