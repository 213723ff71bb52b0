//! Second-order finite-difference discretisation on a Dirichlet box, used as
//! an independent check of the analytic results.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{lanczos_largest, norm2, random_unit, DenseMatrix, LanczosOptions, TridiagLu};
use crate::potential::PotentialSpec;
use crate::resolvent_bounds::smoothed_potential;
use crate::spectral_kernel::{principal_sqrt, I};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FdPotential {
    Zero,
    Sgn,
    SgnDirichletSplit,
    Step { a: f64, b: C64 },
    SgnPlus { eps: f64, v: PotentialSpec },
    Smoothed { a: f64 },
}

fn sgn_value(x: f64) -> C64 {
    if x > 0.0 {
        I
    } else if x < 0.0 {
        -I
    } else {
        C64::new(0.0, 0.0)
    }
}

impl FdPotential {
    /// Potential at a grid node, averaged across jumps. Nodes within a tiny
    /// fraction of `h` from a jump count as sitting on it.
    pub fn node_value(&self, x: f64, h: f64) -> C64 {
        let snap = |x: f64, jumps: &[f64]| -> f64 {
            for &j in jumps {
                if (x - j).abs() <= 1e-9 * h {
                    return j;
                }
            }
            x
        };
        match self {
            FdPotential::Zero => C64::new(0.0, 0.0),
            FdPotential::Sgn | FdPotential::SgnDirichletSplit => sgn_value(snap(x, &[0.0])),
            FdPotential::Step { a, b } => {
                let x = snap(x, &[-a, 0.0, *a]);
                sgn_value(x) + PotentialSpec::StepAb { a: *a, b: *b }.value(x)
            }
            FdPotential::SgnPlus { eps, v } => {
                let x = snap(x, &v.breakpoints());
                sgn_value(snap(x, &[0.0])) + v.value(x) * *eps
            }
            FdPotential::Smoothed { a } => smoothed_potential(x, *a),
        }
    }

    fn needs_center_node(&self) -> bool {
        matches!(self, FdPotential::SgnDirichletSplit)
    }

    /// Extent of the non-asymptotic part of the potential.
    pub fn core_extent(&self) -> f64 {
        match self {
            FdPotential::Step { a, .. } => *a,
            FdPotential::Smoothed { a } => *a,
            FdPotential::SgnPlus { v, .. } => {
                let (lo, hi) = v.support();
                lo.abs().max(hi.abs())
            }
            _ => 0.0,
        }
    }
}

/// Tridiagonal complex-symmetric matrix of `-d²/dx² + W` on `[-L, L]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdOperator {
    pub half_length: f64,
    pub n: usize,
    pub spacing: f64,
    pub potential: FdPotential,
    pub center_jump: Option<C64>,
    /// Positions of the matrix rows (the node at 0 is dropped for the split operator).
    pub nodes: Vec<f64>,
    pub diagonal: Vec<C64>,
    /// Coupling between consecutive rows; `-1/h²` or 0 across a split.
    pub off_diagonal: Vec<f64>,
}

pub fn build_fd(potential: FdPotential, half_length: f64, n: usize, center_jump: Option<C64>) -> Result<FdOperator> {
    if n < 3 || !(half_length > 0.0) || !half_length.is_finite() {
        return Err(Error::Config(format!("FD grid needs n >= 3 and L > 0, got n = {n}, L = {half_length}")));
    }
    if (center_jump.is_some() || potential.needs_center_node()) && n % 2 == 0 {
        return Err(Error::Config("a node at x = 0 is required: use an odd n".into()));
    }
    let h = 2.0 * half_length / (n as f64 + 1.0);
    let half = (n as i64 + 1) / 2;
    let mut nodes: Vec<f64> = (0..n)
        .map(|i| if n % 2 == 1 { (i as i64 + 1 - half) as f64 * h } else { -half_length + (i as f64 + 1.0) * h })
        .collect();
    let center = if n % 2 == 1 { Some((n - 1) / 2) } else { None };
    let inv_h2 = 1.0 / (h * h);
    let mut diagonal: Vec<C64> = nodes.iter().map(|&x| potential.node_value(x, h) + 2.0 * inv_h2).collect();
    let mut off_diagonal = vec![-inv_h2; n - 1];
    if let (Some(alpha), Some(c)) = (center_jump, center) {
        diagonal[c] += alpha / h;
    }
    if potential.needs_center_node() {
        let c = center.unwrap();
        nodes.remove(c);
        diagonal.remove(c);
        off_diagonal.remove(c);
        off_diagonal[c - 1] = 0.0;
    }
    Ok(FdOperator { half_length, n, spacing: h, potential, center_jump, nodes, diagonal, off_diagonal })
}

/// Build with a prescribed spacing; the half-length is rounded up to a
/// multiple of `h` so that multiples of `h` are nodes.
pub fn build_fd_spacing(potential: FdPotential, half_length: f64, h: f64, center_jump: Option<C64>) -> Result<FdOperator> {
    if !(h > 0.0) {
        return Err(Error::Config("spacing must be positive".into()));
    }
    let m = (half_length / h - 1e-9).ceil().max(2.0) as usize;
    build_fd(potential, m as f64 * h, 2 * m - 1, center_jump)
}

impl FdOperator {
    pub fn dim(&self) -> usize {
        self.diagonal.len()
    }

    pub fn refined(&self) -> Result<FdOperator> {
        build_fd(self.potential.clone(), self.half_length, 2 * self.n + 1, self.center_jump)
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let n = self.dim();
        let mut m = DenseMatrix::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = self.diagonal[i];
            if i + 1 < n {
                m.data[i * n + i + 1] = C64::new(self.off_diagonal[i], 0.0);
                m.data[(i + 1) * n + i] = C64::new(self.off_diagonal[i], 0.0);
            }
        }
        m
    }

    pub fn matvec(&self, v: &[C64]) -> Vec<C64> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let mut r = self.diagonal[i] * v[i];
                if i > 0 {
                    r += v[i - 1] * self.off_diagonal[i - 1];
                }
                if i + 1 < n {
                    r += v[i + 1] * self.off_diagonal[i];
                }
                r
            })
            .collect()
    }

    /// Upper estimate of the 2-norm (max absolute row sum).
    pub fn norm_estimate(&self) -> f64 {
        let n = self.dim();
        (0..n)
            .map(|i| {
                self.diagonal[i].norm()
                    + if i > 0 { self.off_diagonal[i - 1].abs() } else { 0.0 }
                    + if i + 1 < n { self.off_diagonal[i].abs() } else { 0.0 }
            })
            .fold(0.0, f64::max)
    }

    pub fn shifted_lu(&self, z: C64) -> Result<TridiagLu> {
        let off: Vec<C64> = self.off_diagonal.iter().map(|&v| C64::new(v, 0.0)).collect();
        let diag: Vec<C64> = self.diagonal.iter().map(|d| d - z).collect();
        TridiagLu::factor(&off, &diag, &off)
    }

    /// Solve `(A - z) u = f`.
    pub fn solve(&self, z: C64, f: &[C64]) -> Result<Vec<C64>> {
        Ok(self.shifted_lu(z)?.solve(f))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaMethod {
    /// Dense SVD for small matrices, inverse Lanczos otherwise.
    Auto,
    DenseSvd,
    InverseLanczos,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FdOptions {
    pub method: SigmaMethod,
    pub dense_max: usize,
    pub seed: u64,
    /// Also solve on the doubled grid to estimate the discretisation error.
    pub estimate_error: bool,
}

impl Default for FdOptions {
    fn default() -> Self {
        FdOptions { method: SigmaMethod::Auto, dense_max: 400, seed: 0, estimate_error: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub value: f64,
    pub estimated_discretization_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenOracleResult {
    pub value: C64,
    pub estimated_discretization_error: f64,
}

/// Smallest singular value of `A - z`.
pub fn smallest_singular_value(op: &FdOperator, z: C64, method: SigmaMethod, dense_max: usize, seed: u64) -> Result<f64> {
    let dense = match method {
        SigmaMethod::DenseSvd => true,
        SigmaMethod::InverseLanczos => false,
        SigmaMethod::Auto => op.dim() <= dense_max,
    };
    let smin = if dense {
        let mut m = op.to_dense();
        let n = m.n;
        for i in 0..n {
            m.data[i * n + i] -= z;
        }
        *m.singular_values().last().unwrap()
    } else {
        let lu = op.shifted_lu(z)?;
        // (A - z) is complex symmetric, so (A - z)^H y = v  <=>  (A - z) conj(y) = conj(v).
        let gram = |v: &[C64]| -> Result<Vec<C64>> {
            let mut y: Vec<C64> = v.iter().map(|x| x.conj()).collect();
            lu.solve_in_place(&mut y);
            y.iter_mut().for_each(|x| *x = x.conj());
            lu.solve_in_place(&mut y);
            Ok(y)
        };
        let top = lanczos_largest(op.dim(), gram, LanczosOptions { seed, tol: 1e-10, ..Default::default() })?;
        1.0 / top.sqrt()
    };
    if !(smin >= 1e-14 * op.norm_estimate()) {
        return Err(Error::Singular(format!("sigma_min = {smin:e} at z = {z}")));
    }
    Ok(smin)
}

/// `1/σ_min(A - z)` with a grid-doubling error estimate.
pub fn resolvent_norm_fd(op: &FdOperator, z: C64, opts: FdOptions) -> Result<OracleResult> {
    let value = 1.0 / smallest_singular_value(op, z, opts.method, opts.dense_max, opts.seed)?;
    let err = if opts.estimate_error {
        let fine = op.refined()?;
        let v2 = 1.0 / smallest_singular_value(&fine, z, opts.method, opts.dense_max, opts.seed)?;
        (v2 - value).abs() * 4.0 / 3.0
    } else {
        0.0
    };
    Ok(OracleResult { value, estimated_discretization_error: err })
}

/// All eigenvalues of the dense matrix.
pub fn eigenvalues_fd(op: &FdOperator) -> Result<Vec<C64>> {
    if op.dim() > 6000 {
        return Err(Error::Config(format!("dense eigensolve limited to 6000 rows, got {}", op.dim())));
    }
    let ev = op.to_dense().eigenvalues();
    if ev.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::NoConvergence("dense eigensolver returned non-finite values".into()));
    }
    Ok(ev)
}

fn rayleigh(op: &FdOperator, v: &[C64]) -> C64 {
    let av = op.matvec(v);
    let num: C64 = v.iter().zip(&av).map(|(a, b)| a * b).sum();
    let den: C64 = v.iter().map(|a| a * a).sum();
    if den.norm() > 1e-8 {
        num / den
    } else {
        let num: C64 = v.iter().zip(&av).map(|(a, b)| a.conj() * b).sum();
        num / v.iter().map(|a| a.norm_sqr()).sum::<f64>()
    }
}

/// Eigenvalue near `shift` by shifted inverse iteration followed by
/// Rayleigh-quotient iteration.
pub fn eigenvalue_near(op: &FdOperator, shift: C64, seed: u64) -> Result<C64> {
    let mut v = random_unit(op.dim(), seed);
    let normalize = |v: &mut Vec<C64>| {
        let n = norm2(v);
        v.iter_mut().for_each(|x| *x /= n);
    };
    match op.shifted_lu(shift) {
        Ok(lu) => {
            for _ in 0..6 {
                lu.solve_in_place(&mut v);
                normalize(&mut v);
            }
        }
        Err(Error::Singular(_)) => return Ok(shift),
        Err(e) => return Err(e),
    }
    let mut lambda = rayleigh(op, &v);
    for _ in 0..60 {
        let lu = match op.shifted_lu(lambda) {
            Ok(lu) => lu,
            Err(Error::Singular(_)) => return Ok(lambda),
            Err(e) => return Err(e),
        };
        lu.solve_in_place(&mut v);
        normalize(&mut v);
        let next = rayleigh(op, &v);
        if (next - lambda).norm() <= 1e-13 * next.norm().max(1.0) {
            return Ok(next);
        }
        lambda = next;
    }
    let av = op.matvec(&v);
    let res: f64 = av.iter().zip(&v).map(|(a, x)| (a - lambda * x).norm_sqr()).sum::<f64>().sqrt();
    if res <= 1e-8 * lambda.norm().max(1.0) {
        Ok(lambda)
    } else {
        Err(Error::NoConvergence(format!("inverse iteration near {shift} stalled (residual {res:e})")))
    }
}

/// Second-order Richardson extrapolation from spacings `h` and `h/2`.
pub fn richardson(coarse: C64, fine: C64) -> C64 {
    (4.0 * fine - coarse) / 3.0
}

/// Eigenvalue near `guess` at spacings `h` and `h/2`, extrapolated.
pub fn refined_eigenvalue(
    potential: &FdPotential,
    half_length: f64,
    h: f64,
    center_jump: Option<C64>,
    guess: C64,
    seed: u64,
) -> Result<EigenOracleResult> {
    let op1 = build_fd_spacing(potential.clone(), half_length, h, center_jump)?;
    let l1 = eigenvalue_near(&op1, guess, seed)?;
    let op2 = build_fd_spacing(potential.clone(), half_length, h / 2.0, center_jump)?;
    let l2 = eigenvalue_near(&op2, l1, seed)?;
    Ok(EigenOracleResult { value: richardson(l1, l2), estimated_discretization_error: (l2 - l1).norm() / 3.0 })
}

/// Box half-length at which bound states with eigenvalue `lambda` have
/// decayed below `tol`.
pub fn eigen_decay_length(lambda: C64, tol: f64) -> f64 {
    let kp = principal_sqrt(I - lambda);
    let km = principal_sqrt(-I - lambda);
    -tol.ln() / kp.re.min(km.re).max(1e-12)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenSearch {
    pub re_min: f64,
    pub re_max: f64,
    /// Candidates from the coarse solve with larger `|Im|` are ignored.
    pub max_abs_im: f64,
    pub coarse_half_length: f64,
    pub coarse_spacing: f64,
    pub fine_spacing: f64,
    pub max_half_length: f64,
    /// Largest admissible move under `L -> 1.5 L`.
    pub stability_tol: f64,
    pub seed: u64,
}

impl Default for EigenSearch {
    fn default() -> Self {
        EigenSearch {
            re_min: -10.0,
            re_max: 10.0,
            max_abs_im: 0.5,
            coarse_half_length: 40.0,
            coarse_spacing: 0.1,
            fine_spacing: 0.01,
            max_half_length: 2000.0,
            stability_tol: 1e-4,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalEigenvalue {
    pub value: C64,
    pub estimated_discretization_error: f64,
    /// Movement of the fine-grid eigenvalue under `L -> 1.5 L`.
    pub box_move: f64,
}

/// Discrete eigenvalues of the continuum operator seen through the FD box:
/// coarse dense candidates, refined on a long fine grid, kept only when
/// stable under box enlargement.
pub fn physical_eigenvalues(potential: &FdPotential, center_jump: Option<C64>, search: EigenSearch) -> Result<Vec<PhysicalEigenvalue>> {
    let coarse = build_fd_spacing(potential.clone(), search.coarse_half_length, search.coarse_spacing, center_jump)?;
    let pad = 0.05 * (search.re_max - search.re_min).abs() + 1.0;
    let mut candidates: Vec<C64> = eigenvalues_fd(&coarse)?
        .into_iter()
        .filter(|z| z.im.abs() <= search.max_abs_im && z.re >= search.re_min - pad && z.re <= search.re_max + pad)
        .collect();
    candidates.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap()));
    let mut found: Vec<PhysicalEigenvalue> = Vec::new();
    for cand in candidates {
        let l = (eigen_decay_length(cand, 1e-8) + potential.core_extent())
            .max(search.coarse_half_length)
            .min(search.max_half_length);
        let fine = build_fd_spacing(potential.clone(), l, search.fine_spacing, center_jump)?;
        let lam = match eigenvalue_near(&fine, cand, search.seed) {
            Ok(v) => v,
            Err(Error::NoConvergence(_)) => continue,
            Err(e) => return Err(e),
        };
        let longer = build_fd_spacing(potential.clone(), 1.5 * l, search.fine_spacing, center_jump)?;
        let lam_long = match eigenvalue_near(&longer, lam, search.seed) {
            Ok(v) => v,
            Err(Error::NoConvergence(_)) => continue,
            Err(e) => return Err(e),
        };
        let moved = (lam_long - lam).norm();
        if moved >= search.stability_tol {
            continue;
        }
        let refined = refined_eigenvalue(potential, l, search.fine_spacing, center_jump, lam, search.seed)?;
        let v = refined.value;
        if v.re < search.re_min || v.re > search.re_max {
            continue;
        }
        if found.iter().any(|f| (f.value - v).norm() < 1e-6 * v.norm().max(1.0)) {
            continue;
        }
        found.push(PhysicalEigenvalue {
            value: v,
            estimated_discretization_error: refined.estimated_discretization_error,
            box_move: moved,
        });
    }
    found.sort_by(|a, b| a.value.re.partial_cmp(&b.value.re).unwrap());
    Ok(found)
}
