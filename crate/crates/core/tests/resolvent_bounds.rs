use num_complex::Complex64 as C64;
use proptest::prelude::*;
use pseudospec::error::Error;
use pseudospec::quadrature::{gauss_legendre, QuadratureGrid};
use pseudospec::resolvent_bounds::*;
use pseudospec::spectral_kernel::{classify_region, resolvent_kernel, Region, TOL_SPEC};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[test]
fn schur_large_tau() {
    let tau = 1e4;
    let r = schur_upper_bound(c(tau, 0.0)).unwrap() / (4.0 * tau);
    assert!((0.9..=1.1).contains(&r), "{r}");
    let r = schur_upper_bound(c(tau, 0.5)).unwrap() / (2.0 * tau * (1.0 / 1.5 + 1.0 / 0.5));
    assert!((0.9..=1.1).contains(&r), "{r}");
}

#[test]
fn schur_dominates_row_integrals_at_one() {
    let z = c(1.0, 0.0);
    let bound = schur_upper_bound(z).unwrap();
    let (t, w) = gauss_legendre(16);
    let mut best = 0.0f64;
    for i in 0..=80 {
        let x = -20.0 + 0.5 * i as f64;
        // panels of width 0.25 on [-60, 60], split at 0 and at x
        let mut bp: Vec<f64> = (0..=480).map(|k| -60.0 + 0.25 * k as f64).collect();
        bp.push(x);
        bp.sort_by(|a, b| a.partial_cmp(b).unwrap());
        bp.dedup();
        let mut row = 0.0;
        for seg in bp.windows(2) {
            let (m, h) = (0.5 * (seg[0] + seg[1]), 0.5 * (seg[1] - seg[0]));
            for j in 0..16 {
                row += h * w[j] * resolvent_kernel(z, x, m + h * t[j]).unwrap().norm();
            }
        }
        best = best.max(row);
    }
    assert!(bound >= best, "bound {bound} < row max {best}");
    assert!(bound <= 3.0 * best, "bound {bound} vs row max {best}");
}

#[test]
fn pseudomode_large_tau() {
    let tau = 1e4;
    let r = pseudomode_lower_bound(c(tau, 0.0)).unwrap() / tau;
    assert!((0.95..=1.05).contains(&r), "{r}");
    let r = pseudomode_lower_bound(c(tau, 0.9)).unwrap() / (tau / 0.19f64.sqrt());
    assert!((0.95..=1.05).contains(&r), "{r}");
}

#[test]
fn strip_guards() {
    for z in [c(3.0, 1.0), c(3.0, -1.5), c(-2.0, 4.0)] {
        assert!(matches!(schur_upper_bound(z), Err(Error::Domain(_))));
        assert!(matches!(pseudomode_lower_bound(z), Err(Error::Domain(_))));
    }
    assert!(matches!(numrange_bound(c(3.0, 0.5)), Err(Error::Domain(_))));
    assert!(matches!(numrange_bound(c(0.0, 1.0)), Err(Error::Domain(_))));
}

#[test]
fn numrange_examples() {
    assert!((numrange_bound(c(-1.0, 0.0)).unwrap() - 1.0).abs() < 1e-15);
    assert!((numrange_bound(c(5.0, 3.0)).unwrap() - 0.5).abs() < 1e-15);
    let v = numrange_bound(c(-3.0, -4.0)).unwrap();
    assert!((v - 1.0 / (3.0 * 2f64.sqrt())).abs() < 1e-15);
}

#[test]
fn compute_bounds_dispatch() {
    let b = compute_bounds(c(20.0, 0.2)).unwrap();
    assert_eq!(b.methods, vec![BoundMethod::Pseudomode, BoundMethod::Schur]);
    assert!(b.lower <= b.upper);
    let b = compute_bounds(c(-2.0, 0.0)).unwrap();
    assert_eq!(b.methods, vec![BoundMethod::Numrange]);
    assert_eq!(b.lower, 0.0);
    assert!(matches!(compute_bounds(c(7.0, 1.0)), Err(Error::Spectrum(_))));
}

#[test]
fn bounds_blow_up_linearly() {
    let taus: Vec<f64> = (0..=40).map(|k| 10f64.powf(1.0 + 3.0 * k as f64 / 40.0)).collect();
    let up: Vec<f64> = taus.iter().map(|&t| schur_upper_bound(c(t, 0.0)).unwrap()).collect();
    let lo: Vec<f64> = taus.iter().map(|&t| pseudomode_lower_bound(c(t, 0.0)).unwrap()).collect();
    assert!(up.windows(2).all(|w| w[1] > w[0]));
    assert!(lo.windows(2).all(|w| w[1] > w[0]));

    let fit = |y: &[f64]| {
        let sel: Vec<(f64, f64)> = taus.iter().zip(y).filter(|(t, _)| **t >= 100.0).map(|(t, v)| (t.ln(), v.ln())).collect();
        let n = sel.len() as f64;
        let mx = sel.iter().map(|p| p.0).sum::<f64>() / n;
        let my = sel.iter().map(|p| p.1).sum::<f64>() / n;
        sel.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sel.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>()
    };
    assert!((fit(&up) - 1.0).abs() <= 0.05);
    assert!((fit(&lo) - 1.0).abs() <= 0.05);
}

fn w_point() -> impl Strategy<Value = C64> {
    (0.0f64..1e4, -0.999f64..0.999)
        .prop_map(|(re, im)| c(re, im))
        .prop_filter("in W", |z| classify_region(*z, TOL_SPEC) == Region::W)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn lower_never_exceeds_upper(z in w_point()) {
        let lo = pseudomode_lower_bound(z).unwrap();
        let up = schur_upper_bound(z).unwrap();
        prop_assert!(lo > 0.0 && lo <= up, "z = {z}: {lo} > {up}");
    }

    #[test]
    fn numrange_is_reciprocal_distance(re in -50.0f64..50.0, im in -50.0f64..50.0) {
        let z = c(re, im);
        prop_assume!(!(re >= 0.0 && im.abs() <= 1.0));
        let dx = (-re).max(0.0);
        let dy = (im.abs() - 1.0).max(0.0);
        let v = numrange_bound(z).unwrap();
        prop_assert!((v * dx.hypot(dy) - 1.0).abs() < 1e-14);
    }
}

#[test]
fn grid_invariants() {
    let g = resolvent_grid(c(25.0, 0.3), &[1.0], GridOptions::default()).unwrap();
    assert!(g.nodes.windows(2).all(|w| w[1] > w[0]));
    let n = g.len();
    for i in 0..n {
        assert!((g.nodes[i] + g.nodes[n - 1 - i]).abs() <= 1e-12 * g.half_length);
        assert!(g.weights[i] > 0.0);
    }
    assert!((g.total_weight() - 2.0 * g.half_length).abs() <= 1e-12 * g.half_length);
    assert!(g.has_breakpoint_at(0.0));
}

#[test]
fn pseudomode_norm_matches_closed_form() {
    for z in [c(25.0, 0.0), c(100.0, 0.5), c(3.0, -0.7)] {
        let g = resolvent_grid(z, &[], GridOptions::default()).unwrap();
        let f0 = Pseudomode::half_line(z, &g);
        let exact = Pseudomode::exact_norm(z);
        assert!((f0.norm / exact - 1.0).abs() < 1e-6, "{} vs {exact}", f0.norm);
    }
}

/// `u''` on every panel from the Lagrange interpolant through its nodes.
fn panel_second_derivative(g: &QuadratureGrid, u: &[C64]) -> Vec<C64> {
    let m = g.order;
    let mut out = vec![C64::new(0.0, 0.0); u.len()];
    for p in 0..g.panels.len() {
        let xs = &g.nodes[p * m..(p + 1) * m];
        let us = &u[p * m..(p + 1) * m];
        for i in 0..m {
            // second derivative of each Lagrange basis polynomial at xs[i]
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..m {
                let denom: f64 = (0..m).filter(|&k| k != j).map(|k| xs[j] - xs[k]).product();
                let mut d2 = 0.0;
                for a in 0..m {
                    for b in 0..m {
                        if a == j || b == j || a == b {
                            continue;
                        }
                        let prod: f64 = (0..m).filter(|&k| k != j && k != a && k != b).map(|k| xs[i] - xs[k]).product();
                        d2 += prod;
                    }
                }
                acc += us[j] * (d2 / denom);
            }
            out[p * m + i] = acc;
        }
    }
    out
}

#[test]
fn apply_resolvent_solves_the_equation() {
    let z = c(-1.0, 0.5);
    let opts = GridOptions { panels_per_wavelength: 16.0, order: 12, ..Default::default() };
    let g = resolvent_grid(z, &[1.0, 2.0, 4.0], opts).unwrap();
    let f: Vec<C64> = g.nodes.iter().map(|x| c((-x * x).exp(), 0.0)).collect();
    let u = apply_resolvent(z, &g, &f).unwrap();
    let d2 = panel_second_derivative(&g, &u);
    let res: Vec<C64> = g
        .nodes
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let sgn = if x > 0.0 { 1.0 } else { -1.0 };
            -d2[i] + (c(0.0, sgn) - z) * u[i] - f[i]
        })
        .collect();
    let rel = g.l2_norm(&res) / g.l2_norm(&f);
    assert!(rel < 1e-3, "relative residual {rel}");
}

#[test]
fn apply_resolvent_matches_direct_sum_on_smooth_data() {
    let z = c(4.0, -0.3);
    let opts = GridOptions { panels_per_wavelength: 8.0, order: 10, ..Default::default() };
    let g = resolvent_grid(z, &[], opts).unwrap();
    let f: Vec<C64> = g.nodes.iter().map(|x| c((-(x - 0.5) * (x - 0.5)).exp(), 0.0)).collect();
    let fast = apply_resolvent_with(z, &g, &f, false).unwrap();
    let slow = apply_direct(&pseudospec::spectral_kernel::wave_numbers(z), &g, &f);
    let diff: Vec<C64> = fast.iter().zip(&slow).map(|(a, b)| a - b).collect();
    assert!(g.l2_norm(&diff) <= 1e-10 * g.l2_norm(&slow));
}

#[test]
fn apply_resolvent_pseudomode_ratio() {
    let z = c(25.0, 0.0);
    let g = resolvent_grid(z, &[], GridOptions::default()).unwrap();
    let f0 = Pseudomode::half_line(z, &g);
    let u = apply_resolvent(z, &g, &f0.samples).unwrap();
    let ratio = g.l2_norm(&u) / f0.norm;
    assert!(ratio >= 0.95 * pseudomode_lower_bound(z).unwrap(), "{ratio}");
}

#[test]
fn apply_resolvent_linearity_and_errors() {
    let z = c(2.0, 0.4);
    let g = resolvent_grid(z, &[], GridOptions::default()).unwrap();
    let zero = vec![C64::new(0.0, 0.0); g.len()];
    assert!(apply_resolvent(z, &g, &zero).unwrap().iter().all(|v| *v == C64::new(0.0, 0.0)));
    assert!(matches!(apply_resolvent(c(3.0, 1.0), &g, &zero), Err(Error::Spectrum(_))));
    assert!(matches!(apply_resolvent(z, &g, &zero[1..]), Err(Error::Config(_))));
}

#[test]
fn regularized_ratio_grows_like_quarter_power() {
    let taus = [1e2, 3e2, 1e3, 3e3, 1e4];
    let ratios: Vec<f64> = taus.iter().map(|&t| regularized_pseudomode_ratio(c(t, 0.0), 1.0, GridOptions::default()).unwrap().ratio).collect();
    let xs: Vec<f64> = taus.iter().map(|t| t.ln()).collect();
    let ys: Vec<f64> = ratios.iter().map(|r| r.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    assert!(slope >= 0.2, "slope {slope}");
    let cs: Vec<f64> = taus.iter().zip(&ratios).map(|(t, r)| r / t.powf(0.25)).collect();
    let (lo, hi) = cs.iter().fold((f64::INFINITY, 0.0f64), |(a, b), v| (a.min(*v), b.max(*v)));
    assert!(lo > 0.0 && hi / lo < 3.0, "fitted constants {cs:?}");
}

#[test]
fn regularized_ratio_small_scale_limit() {
    let z = c(100.0, 0.0);
    let runs: Vec<RegularizedRatio> =
        [1e-2, 1e-4, 1e-6, 1e-8].iter().map(|&a| regularized_pseudomode_ratio(z, a, GridOptions::default()).unwrap()).collect();
    for r in &runs {
        assert!(r.ratio <= r.exact_ratio * (1.0 + 1e-9), "{r:?}");
    }
    assert!(runs.windows(2).all(|w| w[1].ratio > w[0].ratio));
    let last = runs.last().unwrap();
    assert!(last.ratio >= 0.9 * last.exact_ratio, "{} vs {}", last.ratio, last.exact_ratio);
    assert!(matches!(regularized_pseudomode_ratio(c(-1.0, 0.0), 1.0, GridOptions::default()), Err(Error::Domain(_))));
    assert!(matches!(regularized_pseudomode_ratio(z, 0.0, GridOptions::default()), Err(Error::Domain(_))));
}
