use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use num_complex::Complex64 as C64;
use pseudospec::birman_schwinger::{
    count_zeros_in_box, decomposition_diagnostics, find_eigenvalues, hs_norm, loglog_slope, nystrom_grid,
    weak_coupling_rate, NystromOptions, SearchBox, WeakCouplingOptions,
};
use pseudospec::fd_oracle::{
    build_fd, build_fd_spacing, physical_eigenvalues, refined_eigenvalue, resolvent_norm_fd, EigenSearch, FdOptions, FdPotential,
};
use pseudospec::models::{delta_eigenvalue, find_step_eigenvalues, gamma_curve, gamma_distance, ALL_SIGMAS};
use pseudospec::potential::PotentialSpec;
use pseudospec::quadrature::{gauss_legendre, lagrange_row, QuadratureGrid};
use pseudospec::resolvent_bounds::{
    apply_resolvent, decay_half_length, pseudomode_lower_bound, regularized_pseudomode_ratio, resolvent_grid,
    schur_upper_bound, GridOptions,
};
use pseudospec::spectral_kernel::dist_to_rays;

type Outcome = (bool, String);

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn oracle_opts() -> FdOptions {
    FdOptions { estimate_error: false, ..Default::default() }
}

fn sandwich() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for tau in [25.0, 50.0, 100.0] {
        let z = c(tau, 0.0);
        let lower = pseudomode_lower_bound(z).unwrap();
        let upper = schur_upper_bound(z).unwrap();
        let op = build_fd_spacing(FdPotential::Sgn, decay_half_length(z, 1e-8), 0.01, None).unwrap();
        let oracle = resolvent_norm_fd(&op, z, oracle_opts()).unwrap().value;
        let inside = 0.75 * lower <= oracle && oracle <= 1.25 * upper;
        let lower_close = (lower / tau - 1.0).abs() <= 0.10;
        let upper_close = (upper / (4.0 * tau) - 1.0).abs() <= 0.15;
        ok &= inside && lower_close && upper_close;
        notes.push(format!("tau={tau}: {lower:.2} <= {oracle:.2} <= {upper:.2} (n={})", op.dim()));
    }
    (ok, notes.join("; "))
}

/// `u''` at the panel nodes from each panel's Lagrange interpolant.
fn panel_second_derivative(g: &QuadratureGrid, u: &[C64]) -> Vec<C64> {
    let m = g.order;
    let mut out = vec![C64::new(0.0, 0.0); u.len()];
    for p in 0..g.panels.len() {
        let xs = &g.nodes[p * m..(p + 1) * m];
        for i in 0..m {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..m {
                let denom: f64 = (0..m).filter(|&k| k != j).map(|k| xs[j] - xs[k]).product();
                let mut d2 = 0.0;
                for a in (0..m).filter(|&a| a != j) {
                    for b in (0..m).filter(|&b| b != j && b != a) {
                        d2 += (0..m).filter(|&k| k != j && k != a && k != b).map(|k| xs[i] - xs[k]).product::<f64>();
                    }
                }
                acc += u[p * m + j] * (d2 / denom);
            }
            out[p * m + i] = acc;
        }
    }
    out
}

fn interpolate(g: &QuadratureGrid, u: &[C64], x: f64) -> C64 {
    let m = g.order;
    let (t, _) = gauss_legendre(m);
    let p = g.panels.partition_point(|q| q.b < x).min(g.panels.len() - 1);
    let panel = g.panels[p];
    let row = lagrange_row(&t, (x - panel.mid()) / panel.half());
    (0..m).map(|j| u[p * m + j] * row[j]).sum()
}

fn kernel_vs_fd() -> Outcome {
    let z = c(-1.0, 0.5);
    let gauss = |x: f64| c((-x * x).exp(), 0.0);
    let opts = GridOptions { panels_per_wavelength: 16.0, order: 12, ..Default::default() };
    let g = resolvent_grid(z, &[1.0, 2.0, 4.0], opts).unwrap();
    let f: Vec<C64> = g.nodes.iter().map(|&x| gauss(x)).collect();
    let u = apply_resolvent(z, &g, &f).unwrap();

    let d2 = panel_second_derivative(&g, &u);
    let res: Vec<C64> = g
        .nodes
        .iter()
        .enumerate()
        .map(|(i, &x)| -d2[i] + (c(0.0, x.signum()) - z) * u[i] - f[i])
        .collect();
    let residual = g.l2_norm(&res) / g.l2_norm(&f);

    let n = (2.0 * g.half_length / 0.01) as usize | 1;
    let coarse = build_fd(FdPotential::Sgn, g.half_length, n, None).unwrap();
    let fine = build_fd(FdPotential::Sgn, g.half_length, 2 * n + 1, None).unwrap();
    let uc = coarse.solve(z, &coarse.nodes.iter().map(|&x| gauss(x)).collect::<Vec<_>>()).unwrap();
    let uf = fine.solve(z, &fine.nodes.iter().map(|&x| gauss(x)).collect::<Vec<_>>()).unwrap();
    let (mut diff, mut norm) = (0.0, 0.0);
    for (i, &x) in coarse.nodes.iter().enumerate() {
        let j = 2 * i + 1;
        assert!((fine.nodes[j] - x).abs() < 1e-9);
        let extrapolated = (4.0 * uf[j] - uc[i]) / 3.0;
        let q = interpolate(&g, &u, x);
        diff += (q - extrapolated).norm_sqr();
        norm += q.norm_sqr();
    }
    let rel = (diff / norm).sqrt();
    (rel < 1e-3 && residual < 1e-3, format!("relative L2 difference {rel:.2e}, residual {residual:.2e}"))
}

fn delta_triangle() -> Outcome {
    let alpha = c(-2.0, 0.0);
    let formula = delta_eigenvalue(alpha).unwrap();
    let fd = refined_eigenvalue(&FdPotential::Sgn, 25.0, 0.01, Some(alpha), c(-0.7, 0.0), 0).unwrap().value;
    let bump = PotentialSpec::delta_bump(alpha, 1e-4);
    let bx = SearchBox { re_min: -3.0, re_max: 0.5, im_min: -0.5, im_max: 0.5 };
    let roots = find_eigenvalues(1.0, &bump, &bx, &[c(-0.7, 0.0)], NystromOptions::default()).unwrap().roots;
    let Some(bs) = roots.first().map(|r| r.z) else {
        return (false, "no Birman-Schwinger root".into());
    };
    let l = formula.lambda;
    let worst = [(l - fd).norm(), (l - bs).norm(), (fd - bs).norm()].into_iter().fold(0.0, f64::max);
    (
        formula.exists && l == c(-0.75, 0.0) && worst < 1e-3,
        format!("formula {l}, FD {fd:.6}, BS {bs:.6}, max pairwise gap {worst:.2e}"),
    )
}

fn gamma_equivalence() -> Outcome {
    use rand::{Rng, SeedableRng};
    let rs: Vec<f64> = (0..200).map(|k| 0.05 * k as f64).collect();
    let mut worst_im: f64 = 0.0;
    let mut worst_re: f64 = 0.0;
    for sigma in ALL_SIGMAS {
        for (_, alpha) in gamma_curve(sigma, &rs).unwrap().samples {
            let lam = delta_eigenvalue(alpha).unwrap().lambda;
            worst_im = worst_im.max((lam.im.abs() - 1.0).abs());
            worst_re = worst_re.min(lam.re);
        }
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
    let (mut checked, mut agree) = (0, 0);
    while checked < 1000 {
        let alpha = c(rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0));
        if gamma_distance(alpha) < 1e-6 || alpha.norm() < 1e-3 {
            continue;
        }
        checked += 1;
        let m = delta_eigenvalue(alpha).unwrap();
        if m.admissible && dist_to_rays(m.lambda) > 0.0 {
            agree += 1;
        }
    }
    (
        worst_im < 1e-10 && worst_re > -1e-10 && agree == checked,
        format!("curve: max ||Im|-1| {worst_im:.1e}, min Re {worst_re:.1e}; off-curve ray avoidance {agree}/{checked}"),
    )
}

fn step_model() -> Outcome {
    let roots: Vec<f64> = find_step_eigenvalues(1.0, 3.0, 60.0).unwrap().eigenvalues.iter().map(|e| e.lambda).collect();
    let search = EigenSearch { re_min: -3.0, re_max: 60.0, ..Default::default() };
    let fd: Vec<C64> = physical_eigenvalues(&FdPotential::Step { a: 1.0, b: c(3.0, 0.0) }, None, search)
        .unwrap()
        .iter()
        .map(|e| e.value)
        .collect();
    let mut worst: f64 = 0.0;
    for r in &roots {
        let d = fd.iter().map(|v| (v - c(*r, 0.0)).norm()).fold(f64::INFINITY, f64::min);
        worst = worst.max(d);
    }
    let counts: Vec<usize> =
        [60.0, 120.0, 240.0].iter().map(|&l| find_step_eigenvalues(1.0, 3.0, l).unwrap().eigenvalues.len()).collect();
    let monotone = counts.windows(2).all(|w| w[1] >= w[0]);
    (
        worst < 1e-3 && fd.len() == roots.len() && monotone,
        format!("{} roots, {} FD eigenvalues, max gap {worst:.2e}; counts {counts:?}", roots.len(), fd.len()),
    )
}

fn dirichlet_contrast() -> Outcome {
    let split = build_fd_spacing(FdPotential::SgnDirichletSplit, 60.0, 0.02, None).unwrap();
    let mut worst: f64 = 0.0;
    for i in 0..10 {
        for j in 0..10 {
            let z = c(1.0 + 99.0 * i as f64 / 9.0, -0.9 + 1.8 * j as f64 / 9.0);
            let v = resolvent_norm_fd(&split, z, oracle_opts()).unwrap().value;
            worst = worst.max(v * dist_to_rays(z));
        }
    }
    let z = c(50.0, 0.0);
    let full = build_fd_spacing(FdPotential::Sgn, decay_half_length(z, 1e-8), 0.01, None).unwrap();
    let full_norm = resolvent_norm_fd(&full, z, oracle_opts()).unwrap().value;
    let dir_norm = resolvent_norm_fd(&split, z, oracle_opts()).unwrap().value;
    (
        worst <= 1.05 && full_norm > 10.0 * dir_norm,
        format!("max norm*dist {worst:.4}; at z=50 full {full_norm:.2} vs Dirichlet {dir_norm:.4}"),
    )
}

fn bs_scaling() -> Outcome {
    let v = PotentialSpec::Gaussian { amplitude: c(1.0, 0.0), width: 1.0 };
    let taus = [1e2, 3e2, 1e3, 3e3, 1e4];
    let (mut hs, mut l, mut m) = (Vec::new(), Vec::new(), Vec::new());
    for &t in &taus {
        let z = c(t, 0.0);
        let g = nystrom_grid(&v, z, NystromOptions::default()).unwrap();
        hs.push(hs_norm(z, &v, &g).unwrap());
        let d = decomposition_diagnostics(z, &v, &g).unwrap();
        l.push(d.l_hs_quadrature);
        m.push(d.m_hs);
    }
    let (sh, sl, sm) = (loglog_slope(&taus, &hs), loglog_slope(&taus, &l), loglog_slope(&taus, &m));
    (
        (sh - 0.5).abs() <= 0.05 && (sl - 0.5).abs() <= 0.02 && sm.abs() <= 0.2,
        format!("slopes: hs {sh:.4}, l_hs {sl:.4}, m_hs {sm:.4}"),
    )
}

fn weak_coupling() -> Outcome {
    let bump = PotentialSpec::delta_bump(c(-1.0, 0.0), 1e-4);
    let rep = weak_coupling_rate(&bump, &[0.5, 0.25, 0.125], WeakCouplingOptions::default()).unwrap();
    let gauss = PotentialSpec::Gaussian { amplitude: c(-1.0, 0.0), width: 1.0 };
    let bx = SearchBox { re_min: -2.0, re_max: 1e4, im_min: -0.95, im_max: 0.95 };
    let w = count_zeros_in_box(0.125, &gauss, &bx, 40, 0.5, NystromOptions::default()).unwrap();
    (
        (rep.slope + 2.0).abs() <= 0.3 && w.winding_number == 0,
        format!(
            "bump exponent {:.4}; Gaussian zeros in [-2,1e4]x[-0.95,0.95]: {} (min |det| {:.3})",
            rep.slope, w.winding_number, w.min_abs_det
        ),
    )
}

fn regularized() -> Outcome {
    let taus = [1e2, 3e2, 1e3, 3e3, 1e4];
    let ratios: Vec<f64> =
        taus.iter().map(|&t| regularized_pseudomode_ratio(c(t, 0.0), 1.0, GridOptions::default()).unwrap().ratio).collect();
    let s = loglog_slope(&taus, &ratios);
    (s >= 0.2, format!("slope {s:.4}"))
}

fn cli_determinism() -> Outcome {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let manifest = std::fs::read_to_string(dir.join("manifest.txt")).unwrap();
    let mut bad = Vec::new();
    let mut total = 0;
    for line in manifest.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#')) {
        let mut it = line.split_whitespace();
        let name = it.next().unwrap();
        let args: Vec<&str> = it.collect();
        let run = || Command::new(env!("CARGO_BIN_EXE_pseudospec")).args(&args).output().unwrap();
        let (a, b) = (run(), run());
        let expected = std::fs::read(dir.join(format!("{name}.out"))).unwrap_or_default();
        total += 1;
        if !(a.status.success() && a.stdout == b.stdout && a.stdout == expected) {
            bad.push(name.to_string());
        }
    }
    (bad.is_empty(), format!("{}/{total} fixtures identical across two runs{}", total - bad.len(), if bad.is_empty() { String::new() } else { format!(", mismatched: {bad:?}") }))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("resolvent sandwich on the real axis", sandwich),
        ("resolvent kernel against an FD solve", kernel_vs_fd),
        ("delta eigenvalue: formula, FD, Birman-Schwinger", delta_triangle),
        ("Gamma curve and ray avoidance", gamma_equivalence),
        ("step model roots against FD", step_model),
        ("Dirichlet realisation against full operator", dirichlet_contrast),
        ("Birman-Schwinger HS scaling", bs_scaling),
        ("weak-coupling rate and Gaussian escape", weak_coupling),
        ("smoothed pseudomode growth", regularized),
        ("CLI golden fixtures", cli_determinism),
    ];
    let mut failures = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (ok, detail) = match catch_unwind(AssertUnwindSafe(f)) {
            Ok(r) => r,
            Err(e) => {
                let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
                (false, format!("panicked: {}", msg.unwrap_or_default()))
            }
        };
        if !ok {
            failures += 1;
        }
        println!(
            "criterion {}: {} | {name} | {detail} | {:.1}s",
            k + 1,
            if ok { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    if failures > 0 {
        std::process::exit(1);
    }
}
