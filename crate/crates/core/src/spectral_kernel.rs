//! Wave numbers, resolvent kernels and region classification for
//! `H = -d²/dx² + i sgn(x)` on the real line.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const I: C64 = C64::new(0.0, 1.0);

/// Default distance below which a point counts as lying on a spectral ray.
pub const TOL_SPEC: f64 = 1e-12;

/// Radius of the closed disks `D±` centred at `±i`.
pub const DISK_RADIUS: f64 = 1.5;

/// Principal square root with the argument taken in `(-π, π]`.
///
/// A negative real input with a signed zero imaginary part always maps to
/// the positive imaginary axis.
pub fn principal_sqrt(w: C64) -> C64 {
    let (a, b) = (w.re, w.im);
    if a == 0.0 && b == 0.0 {
        return C64::new(0.0, 0.0);
    }
    let m = a.hypot(b);
    if a >= 0.0 {
        let t = (0.5 * (m + a)).sqrt();
        C64::new(t, b / (2.0 * t))
    } else {
        let t = (0.5 * (m - a)).sqrt();
        let re = b.abs() / (2.0 * t);
        C64::new(re, if b < 0.0 { -t } else { t })
    }
}

/// `e^w - 1` without cancellation for small `|w|`.
pub fn expm1(w: C64) -> C64 {
    if w.norm() < 0.5 {
        let (a, b) = (w.re, w.im);
        let s = (0.5 * b).sin();
        C64::new(a.exp_m1() * b.cos() - 2.0 * s * s, a.exp() * b.sin())
    } else {
        w.exp() - 1.0
    }
}

/// `(1 - e^{-w}) / w`, equal to 1 at `w = 0`.
pub fn phi1(w: C64) -> C64 {
    if w == C64::new(0.0, 0.0) {
        C64::new(1.0, 0.0)
    } else {
        -expm1(-w) / w
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveNumbers {
    pub z: C64,
    pub k_plus: C64,
    pub k_minus: C64,
}

impl WaveNumbers {
    pub fn new(z: C64) -> Self {
        WaveNumbers {
            z,
            k_plus: principal_sqrt(I - z),
            k_minus: principal_sqrt(-I - z),
        }
    }

    pub fn sum(&self) -> C64 {
        self.k_plus + self.k_minus
    }
}

pub fn wave_numbers(z: C64) -> WaveNumbers {
    WaveNumbers::new(z)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    #[serde(rename = "D_PLUS")]
    DPlus,
    #[serde(rename = "D_MINUS")]
    DMinus,
    U,
    W,
    #[serde(rename = "SPECTRUM")]
    Spectrum,
}

impl Region {
    pub fn as_str(&self) -> &'static str {
        match self {
            Region::DPlus => "D_PLUS",
            Region::DMinus => "D_MINUS",
            Region::U => "U",
            Region::W => "W",
            Region::Spectrum => "SPECTRUM",
        }
    }

    pub fn parse(s: &str) -> Option<Region> {
        Some(match s {
            "D_PLUS" => Region::DPlus,
            "D_MINUS" => Region::DMinus,
            "U" => Region::U,
            "W" => Region::W,
            "SPECTRUM" => Region::Spectrum,
            _ => return None,
        })
    }
}

impl std::fmt::Display for Region {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Distance from `z` to the ray `[0, ∞) + i·sign`.
pub fn dist_to_ray(z: C64, sign: f64) -> f64 {
    let dx = if z.re < 0.0 { -z.re } else { 0.0 };
    dx.hypot(z.im - sign)
}

/// Distance from `z` to the union of both spectral rays.
pub fn dist_to_rays(z: C64) -> f64 {
    dist_to_ray(z, 1.0).min(dist_to_ray(z, -1.0))
}

pub fn on_rays(z: C64, tol_spec: f64) -> bool {
    dist_to_rays(z) <= tol_spec
}

/// Open half-strip `[0, ∞) + i(-1, 1)`.
pub fn in_strip(z: C64) -> bool {
    z.re >= 0.0 && z.im.abs() < 1.0
}

/// Closed half-strip, the closure of the numerical range.
pub fn in_closed_strip(z: C64) -> bool {
    z.re >= 0.0 && z.im.abs() <= 1.0
}

/// Distance from `z` to the closed half-strip.
pub fn dist_to_closed_strip(z: C64) -> f64 {
    let dx = if z.re < 0.0 { -z.re } else { 0.0 };
    let dy = (z.im.abs() - 1.0).max(0.0);
    dx.hypot(dy)
}

/// Classify `z`. Where the two closed disks overlap the point goes to the
/// disk whose centre lies on the same side of the real axis.
pub fn classify_region(z: C64, tol_spec: f64) -> Region {
    if on_rays(z, tol_spec) {
        return Region::Spectrum;
    }
    let in_plus = (z - I).norm() <= DISK_RADIUS;
    let in_minus = (z + I).norm() <= DISK_RADIUS;
    match (in_plus, in_minus) {
        (true, true) => {
            if z.im >= 0.0 {
                Region::DPlus
            } else {
                Region::DMinus
            }
        }
        (true, false) => Region::DPlus,
        (false, true) => Region::DMinus,
        _ if in_strip(z) => Region::W,
        _ => Region::U,
    }
}

/// The ray endpoints `±i` are spectral points where the kernel still has a
/// finite pointwise limit; every other ray point is refused.
pub(crate) fn check_kernel_domain(z: C64) -> Result<()> {
    if z == I || z == -I {
        return Ok(());
    }
    if on_rays(z, TOL_SPEC) {
        return Err(Error::Spectrum(z));
    }
    Ok(())
}

/// `(e^{-k|x-y|} - e^{-k(|x|+|y|)}) / (2k)` for `x, y` on the same side.
fn same_side_difference(k: C64, ax: f64, ay: f64) -> C64 {
    let m = ax.min(ay);
    let d = (ax - ay).abs();
    if m == 0.0 {
        return C64::new(0.0, 0.0);
    }
    (-k * d).exp() * m * phi1(2.0 * k * m)
}

/// Kernel evaluation from precomputed wave numbers; no domain checks.
pub fn kernel_from(wn: &WaveNumbers, x: f64, y: f64) -> C64 {
    let (kp, km) = (wn.k_plus, wn.k_minus);
    let s = kp + km;
    match (x >= 0.0, y >= 0.0) {
        (true, true) => same_side_difference(kp, x, y) + (-kp * (x + y)).exp() / s,
        (false, false) => {
            let (ax, ay) = (-x, -y);
            same_side_difference(km, ax, ay) + (-km * (ax + ay)).exp() / s
        }
        (true, false) => (-kp * x - km * (-y)).exp() / s,
        (false, true) => (-km * (-x) - kp * y).exp() / s,
    }
}

/// Dirichlet-realisation kernel from precomputed wave numbers.
pub fn dirichlet_kernel_from(wn: &WaveNumbers, x: f64, y: f64) -> C64 {
    if x > 0.0 && y > 0.0 {
        same_side_difference(wn.k_plus, x, y)
    } else if x < 0.0 && y < 0.0 {
        same_side_difference(wn.k_minus, -x, -y)
    } else {
        C64::new(0.0, 0.0)
    }
}

/// Resolvent kernel `R_z(x, y)` of `H`.
pub fn resolvent_kernel(z: C64, x: f64, y: f64) -> Result<C64> {
    check_kernel_domain(z)?;
    Ok(kernel_from(&WaveNumbers::new(z), x, y))
}

/// Kernel of the resolvent of `H` with an extra Dirichlet condition at 0.
pub fn dirichlet_kernel(z: C64, x: f64, y: f64) -> Result<C64> {
    check_kernel_domain(z)?;
    Ok(dirichlet_kernel_from(&WaveNumbers::new(z), x, y))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticWaveNumbers {
    pub leading_plus: C64,
    pub leading_minus: C64,
    pub correction_plus: C64,
    pub correction_minus: C64,
}

impl AsymptoticWaveNumbers {
    pub fn k_plus(&self) -> C64 {
        self.leading_plus + self.correction_plus
    }

    pub fn k_minus(&self) -> C64 {
        self.leading_minus + self.correction_minus
    }
}

/// Two-term large-`Re z` expansions of `k±(z)`.
pub fn asymptotic_wave_numbers(z: C64) -> Result<AsymptoticWaveNumbers> {
    if !(z.re > 0.0) {
        return Err(Error::Domain(format!(
            "asymptotic expansion needs Re z > 0, got {}",
            z.re
        )));
    }
    let st = z.re.sqrt();
    let delta = z.im;
    Ok(AsymptoticWaveNumbers {
        leading_plus: C64::new(0.0, st),
        leading_minus: C64::new(0.0, -st),
        correction_plus: C64::new((1.0 - delta) / (2.0 * st), 0.0),
        correction_minus: C64::new((1.0 + delta) / (2.0 * st), 0.0),
    })
}
