//! Linear algebra helpers: banded LU, Lanczos, and thin wrappers over faer.

use faer::complex_native::c64;
use faer::Mat;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

fn to_faer(z: C64) -> c64 {
    c64::new(z.re, z.im)
}

fn from_faer(z: c64) -> C64 {
    C64::new(z.re, z.im)
}

/// LU factorisation with partial pivoting of a complex tridiagonal matrix.
#[derive(Debug, Clone)]
pub struct TridiagLu {
    dl: Vec<C64>,
    d: Vec<C64>,
    du: Vec<C64>,
    du2: Vec<C64>,
    swap: Vec<bool>,
}

impl TridiagLu {
    /// `sub[i] = A[i+1][i]`, `diag[i] = A[i][i]`, `sup[i] = A[i][i+1]`.
    pub fn factor(sub: &[C64], diag: &[C64], sup: &[C64]) -> Result<Self> {
        let n = diag.len();
        if n == 0 || sub.len() + 1 != n || sup.len() + 1 != n {
            return Err(Error::Config("tridiagonal band lengths do not match".into()));
        }
        let mut dl = sub.to_vec();
        let mut d = diag.to_vec();
        let mut du = sup.to_vec();
        let mut du2 = vec![C64::new(0.0, 0.0); n.saturating_sub(2)];
        let mut swap = vec![false; n];
        for i in 0..n.saturating_sub(1) {
            if d[i].norm() >= dl[i].norm() {
                if d[i].norm() != 0.0 {
                    let fact = dl[i] / d[i];
                    dl[i] = fact;
                    d[i + 1] -= fact * du[i];
                }
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -fact * du[i + 1];
                }
                swap[i] = true;
            }
        }
        let scale = diag.iter().chain(sub).chain(sup).map(|v| v.norm()).fold(0.0, f64::max);
        let dmin = d.iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min);
        if !(dmin > 1e-300) || !(dmin > scale * 1e-17) {
            return Err(Error::Singular(format!("tridiagonal pivot {dmin:e} relative to scale {scale:e}")));
        }
        Ok(TridiagLu { dl, d, du, du2, swap })
    }

    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    pub fn solve_in_place(&self, b: &mut [C64]) {
        let n = self.d.len();
        for i in 0..n.saturating_sub(1) {
            if self.swap[i] {
                let temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - self.dl[i] * b[i];
            } else {
                b[i + 1] -= self.dl[i] * b[i];
            }
        }
        b[n - 1] /= self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
    }

    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

pub fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm2(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn random_unit(n: usize, seed: u64) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<C64> = (0..n)
        .map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
        .collect();
    let nv = norm2(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    v
}

#[derive(Debug, Clone, Copy)]
pub struct LanczosOptions {
    pub krylov_dim: usize,
    pub max_restarts: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        LanczosOptions { krylov_dim: 40, max_restarts: 40, tol: 1e-10, seed: 0 }
    }
}

/// Largest eigenvalue of a Hermitian positive semidefinite operator given by
/// its action. Explicitly restarted Lanczos with full reorthogonalisation.
pub fn lanczos_largest<F>(n: usize, mut apply: F, opts: LanczosOptions) -> Result<f64>
where
    F: FnMut(&[C64]) -> Result<Vec<C64>>,
{
    if n == 0 {
        return Err(Error::Config("empty operator".into()));
    }
    let mut start = random_unit(n, opts.seed);
    let mut last = f64::NAN;
    for _ in 0..opts.max_restarts {
        let mut basis: Vec<Vec<C64>> = vec![start.clone()];
        let mut alpha: Vec<f64> = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let mut theta = 0.0;
        let mut ritz = vec![1.0];
        let kmax = opts.krylov_dim.min(n);
        for j in 0..kmax {
            let mut w = apply(&basis[j])?;
            let a = dot(&basis[j], &w).re;
            alpha.push(a);
            for _ in 0..2 {
                for v in &basis {
                    let c = dot(v, &w);
                    w.iter_mut().zip(v).for_each(|(wi, vi)| *wi -= c * vi);
                }
            }
            let b = norm2(&w);
            let (t, s) = top_eigenpair(&alpha, &beta);
            theta = t;
            ritz = s;
            let resid = b * ritz[ritz.len() - 1].abs();
            if resid <= opts.tol * theta.abs() || b <= 1e-300 || j + 1 == n {
                if !theta.is_finite() {
                    break;
                }
                return Ok(theta);
            }
            if j + 1 == kmax {
                break;
            }
            beta.push(b);
            w.iter_mut().for_each(|x| *x /= b);
            basis.push(w);
        }
        if !theta.is_finite() {
            return Err(Error::NoConvergence("Lanczos produced a non-finite Ritz value".into()));
        }
        let mut next = vec![C64::new(0.0, 0.0); n];
        for (v, c) in basis.iter().zip(&ritz) {
            next.iter_mut().zip(v).for_each(|(x, vi)| *x += vi * *c);
        }
        let nn = norm2(&next);
        next.iter_mut().for_each(|x| *x /= nn);
        start = next;
        if (theta - last).abs() <= opts.tol * theta.abs() {
            return Ok(theta);
        }
        last = theta;
    }
    Err(Error::NoConvergence(format!("Lanczos did not converge in {} restarts", opts.max_restarts)))
}

/// Largest eigenvalue and its eigenvector for a symmetric tridiagonal matrix.
fn top_eigenpair(alpha: &[f64], beta: &[f64]) -> (f64, Vec<f64>) {
    let k = alpha.len();
    if k == 1 {
        return (alpha[0], vec![1.0]);
    }
    let t = Mat::<f64>::from_fn(k, k, |i, j| {
        if i == j {
            alpha[i]
        } else if i == j + 1 {
            beta[j]
        } else if j == i + 1 {
            beta[i]
        } else {
            0.0
        }
    });
    let eig = t.selfadjoint_eigendecomposition(faer::Side::Lower);
    let s = eig.s().column_vector();
    let u = eig.u();
    let mut best = 0;
    for i in 1..k {
        if s.read(i) > s.read(best) {
            best = i;
        }
    }
    (s.read(best), (0..k).map(|i| u.read(i, best)).collect())
}

/// Dense complex matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    pub n: usize,
    pub data: Vec<C64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        DenseMatrix { n, data: vec![C64::new(0.0, 0.0); n * n] }
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.data[i * n + j] = f(i, j);
            }
        }
        m
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.n + j]
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scaled_identity_plus(&self, eps: f64) -> DenseMatrix {
        let n = self.n;
        DenseMatrix::from_fn(n, |i, j| {
            let v = eps * self.get(i, j);
            if i == j {
                v + 1.0
            } else {
                v
            }
        })
    }

    fn to_mat(&self) -> Mat<c64> {
        Mat::from_fn(self.n, self.n, |i, j| to_faer(self.get(i, j)))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub fn singular_values(&self) -> Vec<f64> {
        if self.n == 0 {
            return Vec::new();
        }
        let mut s = self.to_mat().singular_values();
        s.sort_by(|a, b| b.partial_cmp(a).unwrap());
        s
    }

    pub fn eigenvalues(&self) -> Vec<C64> {
        if self.n == 0 {
            return Vec::new();
        }
        self.to_mat().eigenvalues::<c64>().into_iter().map(from_faer).collect()
    }

    /// Determinant via LU with partial pivoting.
    pub fn determinant(&self) -> C64 {
        if self.n == 0 {
            return C64::new(1.0, 0.0);
        }
        from_faer(self.to_mat().determinant())
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        (0..self.n)
            .map(|i| self.data[i * self.n..(i + 1) * self.n].iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }
}
