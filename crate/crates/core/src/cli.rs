//! Command-line front end. `run` parses argv, dispatches and writes
//! CSV or JSON; the binary is a thin wrapper around it.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::birman_schwinger::{
    decomposition_diagnostics, find_eigenvalues, hs_norm, nystrom_grid, scan_seeds, weak_coupling_rate,
    NystromOptions, SearchBox, WeakCouplingOptions,
};
use crate::error::{Error, Result};
use crate::fd_oracle::{build_fd, resolvent_norm_fd, FdOptions, FdPotential, SigmaMethod};
use crate::format::{fmt_f64, fmt_opt, parse_complex, parse_kv, parse_list, parse_range, Range};
use crate::models::{delta_eigenvalue, dirichlet_norm, find_step_eigenvalues, gamma_curve, ALL_SIGMAS};
use crate::potential::PotentialSpec;
use crate::pseudospectrum::{compute_field, field_to_csv, field_to_json, with_thread_pool, GridSpec, OracleConfig};
use crate::resolvent_bounds::{compute_bounds, BoundMethod};
use crate::spectral_kernel::{classify_region, dirichlet_kernel, in_strip, on_rays, resolvent_kernel, TOL_SPEC};

fn complex_arg(s: &str) -> std::result::Result<C64, String> {
    parse_complex(s).map_err(|e| e.to_string())
}

fn range_arg(s: &str) -> std::result::Result<Range, String> {
    parse_range(s).map_err(|e| e.to_string())
}

/// Comma-separated reals as one flag value.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct RealList(pub Vec<f64>);

fn list_arg(s: &str) -> std::result::Result<RealList, String> {
    parse_list(s).map(RealList).map_err(|e| e.to_string())
}

fn interval_arg(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("expected min:max, got {s:?}"))?;
    let a = crate::format::parse_f64(a).map_err(|e| e.to_string())?;
    let b = crate::format::parse_f64(b).map_err(|e| e.to_string())?;
    Ok((a, b))
}

fn sigma_arg(s: &str) -> std::result::Result<[i8; 3], String> {
    let v: Vec<i8> = s.split(',').map(|t| t.trim().parse::<i8>().map_err(|_| format!("bad sigma {s:?}"))).collect::<std::result::Result<_, _>>()?;
    match v.as_slice() {
        [a, b, c] if v.iter().all(|x| *x == 1 || *x == -1) => Ok([*a, *b, *c]),
        _ => Err(format!("sigma must be three entries of +1/-1, got {s:?}")),
    }
}

fn oracle_arg(s: &str) -> std::result::Result<OracleConfig, String> {
    let mut cfg = OracleConfig::default();
    for (k, v) in parse_kv(s).map_err(|e| e.to_string())? {
        match k.as_str() {
            "n" => cfg.n = v.parse().map_err(|_| format!("bad n {v:?}"))?,
            "L" => cfg.half_length = v.parse().map_err(|_| format!("bad L {v:?}"))?,
            "dense_max" => cfg.dense_max = v.parse().map_err(|_| format!("bad dense_max {v:?}"))?,
            "method" => {
                cfg.method = match v.as_str() {
                    "auto" => SigmaMethod::Auto,
                    "dense" => SigmaMethod::DenseSvd,
                    "lanczos" => SigmaMethod::InverseLanczos,
                    _ => return Err(format!("method must be auto, dense or lanczos, got {v:?}")),
                }
            }
            _ => return Err(format!("unknown oracle key {k:?} (expected n, L, method, dense_max)")),
        }
    }
    Ok(cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Parser, Serialize)]
#[command(name = "pseudospec", version, about = "Resolvent, pseudospectrum and eigenvalue computations for -d²/dx² + i sgn(x)")]
pub struct Cli {
    /// Seed for every randomised step.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Print the resolved configuration as JSON and exit.
    #[arg(long, global = true)]
    pub dry_run: bool,
    /// Write to this file instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Resolvent kernel values.
    Kernel {
        #[command(subcommand)]
        action: KernelCmd,
    },
    /// Analytic resolvent-norm bounds.
    Bounds {
        #[command(subcommand)]
        action: BoundsCmd,
    },
    /// Pseudospectrum field on a grid, optionally with the FD oracle.
    Field(FieldArgs),
    /// Birman–Schwinger computations.
    Bs {
        #[command(subcommand)]
        action: BsCmd,
    },
    /// Eigenvalue of the point interaction.
    Delta(DeltaArgs),
    /// Sample the curve of couplings without an eigenvalue.
    Gamma(GammaArgs),
    /// Real eigenvalues of the step model.
    Step(StepArgs),
    /// Resolvent norm of the Dirichlet realisation.
    Dirichlet(DirichletArgs),
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelCmd {
    Eval(KernelEvalArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct KernelEvalArgs {
    #[arg(long, value_parser = complex_arg, allow_hyphen_values = true)]
    pub z: C64,
    /// Single value or min:max:count.
    #[arg(long, value_parser = range_arg, allow_hyphen_values = true)]
    pub x: Range,
    #[arg(long, value_parser = range_arg, allow_hyphen_values = true)]
    pub y: Range,
    /// Use the Dirichlet-realisation kernel.
    #[arg(long)]
    pub dirichlet: bool,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundsCmd {
    Sweep(ZGridArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct ZGridArgs {
    #[arg(long, value_parser = range_arg, allow_hyphen_values = true)]
    pub re: Range,
    #[arg(long, value_parser = range_arg, allow_hyphen_values = true)]
    pub im: Range,
}

impl ZGridArgs {
    fn points(&self) -> Vec<C64> {
        let res = self.re.values();
        self.im.values().iter().flat_map(|&im| res.iter().map(move |&re| C64::new(re, im))).collect()
    }
}

#[derive(Debug, Args, Serialize)]
pub struct FieldArgs {
    #[arg(long, value_parser = range_arg, allow_hyphen_values = true)]
    pub re: Range,
    #[arg(long, value_parser = range_arg, allow_hyphen_values = true)]
    pub im: Range,
    /// FD oracle settings, e.g. n=2000,L=150[,method=auto|dense|lanczos][,dense_max=400].
    #[arg(long, value_parser = oracle_arg)]
    pub oracle: Option<OracleConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialKind {
    Gaussian,
    Bump,
    Step,
}

#[derive(Debug, Args, Serialize)]
pub struct PotentialArgs {
    #[arg(long, value_enum, default_value_t = PotentialKind::Gaussian)]
    pub potential: PotentialKind,
    /// Gaussian amplitude.
    #[arg(long, value_parser = complex_arg, allow_hyphen_values = true, default_value = "-1,0")]
    pub amplitude: C64,
    #[arg(long, default_value_t = 1.0)]
    pub width: f64,
    /// Bump total mass.
    #[arg(long, value_parser = complex_arg, allow_hyphen_values = true, default_value = "-2,0")]
    pub mass: C64,
    #[arg(long, default_value_t = 1e-4)]
    pub radius: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    pub center: f64,
    /// Step half-width.
    #[arg(long, default_value_t = 1.0)]
    pub a: f64,
    #[arg(long, value_parser = complex_arg, allow_hyphen_values = true, default_value = "3,0")]
    pub b: C64,
}

impl PotentialArgs {
    fn spec(&self) -> PotentialSpec {
        match self.potential {
            PotentialKind::Gaussian => PotentialSpec::Gaussian { amplitude: self.amplitude, width: self.width },
            PotentialKind::Bump => PotentialSpec::Bump {
                amplitude: self.mass / (2.0 * self.radius),
                center: self.center,
                radius: self.radius,
            },
            PotentialKind::Step => PotentialSpec::StepAb { a: self.a, b: self.b },
        }
    }
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BsCmd {
    /// HS norms and the L/M decomposition along a z-grid.
    Sweep(BsSweepArgs),
    /// Roots of det(I + eps K_z).
    Roots(BsRootsArgs),
    /// Weak-coupling exponent of Re lambda(eps).
    Rate(BsRateArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct BsSweepArgs {
    #[command(flatten)]
    pub potential: PotentialArgs,
    #[command(flatten)]
    pub grid: ZGridArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct BsRootsArgs {
    #[command(flatten)]
    pub potential: PotentialArgs,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub eps: f64,
    /// Real extent of the search box as min:max.
    #[arg(long, value_parser = interval_arg, allow_hyphen_values = true, default_value = "-5:25")]
    pub re_box: (f64, f64),
    /// Imaginary extent of the search box as min:max.
    #[arg(long, value_parser = interval_arg, allow_hyphen_values = true, default_value = "-0.9:0.9")]
    pub im_box: (f64, f64),
    /// Secant starting points (repeatable); a |det| scan along Im z = 0 is used when absent.
    #[arg(long = "start", value_parser = complex_arg, allow_hyphen_values = true)]
    pub starts: Vec<C64>,
}

#[derive(Debug, Args, Serialize)]
pub struct BsRateArgs {
    #[command(flatten)]
    pub potential: PotentialArgs,
    #[arg(long, value_parser = list_arg, default_value = "0.5,0.25,0.125")]
    pub eps: RealList,
}

#[derive(Debug, Args, Serialize)]
pub struct DeltaArgs {
    /// Coupling as re,im (repeatable).
    #[arg(long, value_parser = complex_arg, allow_hyphen_values = true, required = true)]
    pub alpha: Vec<C64>,
}

#[derive(Debug, Args, Serialize)]
pub struct GammaArgs {
    #[arg(long, value_parser = range_arg, default_value = "0:10:11")]
    pub r: Range,
    /// One branch as s1,s2,s3; all eight when absent.
    #[arg(long, value_parser = sigma_arg, allow_hyphen_values = true)]
    pub sigma: Option<[i8; 3]>,
}

#[derive(Debug, Args, Serialize)]
pub struct StepArgs {
    #[arg(long, default_value_t = 1.0)]
    pub a: f64,
    /// Single value or min:max:count.
    #[arg(long, value_parser = range_arg, allow_hyphen_values = true, default_value = "3")]
    pub b: Range,
    #[arg(long, default_value_t = 60.0, allow_hyphen_values = true)]
    pub lambda_max: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct DirichletArgs {
    #[command(flatten)]
    pub grid: ZGridArgs,
    /// FD cross-check on the split operator, e.g. n=4001,L=40.
    #[arg(long, value_parser = oracle_arg)]
    pub oracle: Option<OracleConfig>,
}

/// Column-typed table rendered as CSV or JSON.
struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
}

enum Cell {
    F(f64),
    Opt(Option<f64>),
    S(String),
    I(i64),
    B(bool),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::F(x) => fmt_f64(*x),
            Cell::Opt(x) => fmt_opt(*x),
            Cell::S(s) => s.clone(),
            Cell::I(i) => i.to_string(),
            Cell::B(b) => b.to_string(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Cell::F(x) => serde_json::json!(x),
            Cell::Opt(x) => serde_json::json!(x),
            Cell::S(s) => serde_json::json!(s),
            Cell::I(i) => serde_json::json!(i),
            Cell::B(b) => serde_json::json!(b),
        }
    }
}

impl Table {
    fn new(header: &[&'static str]) -> Self {
        Table { header: header.to_vec(), rows: Vec::new() }
    }

    fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Csv => {
                let mut s = self.header.join(",");
                s.push('\n');
                for r in &self.rows {
                    s.push_str(&r.iter().map(Cell::csv).collect::<Vec<_>>().join(","));
                    s.push('\n');
                }
                s
            }
            OutputFormat::Json => {
                let rows: Vec<serde_json::Value> = self
                    .rows
                    .iter()
                    .map(|r| {
                        let obj: serde_json::Map<String, serde_json::Value> =
                            self.header.iter().zip(r).map(|(h, c)| (h.to_string(), c.json())).collect();
                        serde_json::Value::Object(obj)
                    })
                    .collect();
                let mut s = serde_json::to_string(&rows).expect("table serialises");
                s.push('\n');
                s
            }
        }
    }
}

fn method_name(m: BoundMethod) -> &'static str {
    match m {
        BoundMethod::Schur => "SCHUR",
        BoundMethod::Pseudomode => "PSEUDOMODE",
        BoundMethod::Numrange => "NUMRANGE",
    }
}

fn kernel_eval(a: &KernelEvalArgs) -> Result<Table> {
    let mut t = Table::new(&["re_z", "im_z", "x", "y", "re_r", "im_r"]);
    for &x in &a.x.values() {
        for &y in &a.y.values() {
            let r = if a.dirichlet { dirichlet_kernel(a.z, x, y)? } else { resolvent_kernel(a.z, x, y)? };
            t.rows.push(vec![Cell::F(a.z.re), Cell::F(a.z.im), Cell::F(x), Cell::F(y), Cell::F(r.re), Cell::F(r.im)]);
        }
    }
    Ok(t)
}

fn bounds_sweep(a: &ZGridArgs) -> Result<Table> {
    let mut t = Table::new(&["re", "im", "region", "lower", "upper", "lower_method", "upper_method"]);
    for z in a.points() {
        let region = classify_region(z, TOL_SPEC);
        let row = match compute_bounds(z) {
            Ok(b) => {
                let (lm, um) = match b.methods.as_slice() {
                    [l, u] => (method_name(*l), method_name(*u)),
                    [u] => ("NONE", method_name(*u)),
                    _ => ("NONE", "NONE"),
                };
                vec![Cell::F(b.lower), Cell::F(b.upper), Cell::S(lm.into()), Cell::S(um.into())]
            }
            Err(Error::Spectrum(_)) => {
                vec![Cell::F(f64::INFINITY), Cell::F(f64::INFINITY), Cell::S("NONE".into()), Cell::S("NONE".into())]
            }
            Err(e) => return Err(e),
        };
        let mut full = vec![Cell::F(z.re), Cell::F(z.im), Cell::S(region.as_str().into())];
        full.extend(row);
        t.rows.push(full);
    }
    Ok(t)
}

fn bs_sweep(a: &BsSweepArgs) -> Result<Table> {
    let v = a.potential.spec();
    v.validate()?;
    let mut t = Table::new(&["re_z", "im_z", "hs_norm", "l_hs", "m_hs"]);
    for z in a.grid.points() {
        let grid = nystrom_grid(&v, z, NystromOptions::default())?;
        let hs = hs_norm(z, &v, &grid)?;
        let (l, m) = if in_strip(z) && !on_rays(z, TOL_SPEC) {
            let d = decomposition_diagnostics(z, &v, &grid)?;
            (Some(d.l_hs), Some(d.m_hs))
        } else {
            (None, None)
        };
        t.rows.push(vec![Cell::F(z.re), Cell::F(z.im), Cell::F(hs), Cell::Opt(l), Cell::Opt(m)]);
    }
    Ok(t)
}

fn bs_roots(a: &BsRootsArgs, err: &mut dyn Write) -> Result<Table> {
    let v = a.potential.spec();
    let bx = SearchBox { re_min: a.re_box.0, re_max: a.re_box.1, im_min: a.im_box.0, im_max: a.im_box.1 };
    let seeds = if a.starts.is_empty() {
        scan_seeds(a.eps, &v, &bx, 96, &[0.0], NystromOptions::default())?
    } else {
        a.starts.clone()
    };
    let found = find_eigenvalues(a.eps, &v, &bx, &seeds, NystromOptions::default())?;
    for (i, m) in &found.failures {
        let _ = writeln!(err, "seed {i}: {m}");
    }
    let mut t = Table::new(&["re", "im", "residual", "seed_index"]);
    for r in &found.roots {
        t.rows.push(vec![Cell::F(r.z.re), Cell::F(r.z.im), Cell::F(r.residual), Cell::I(r.seed_index as i64)]);
    }
    Ok(t)
}

fn bs_rate(a: &BsRateArgs) -> Result<Table> {
    let rep = weak_coupling_rate(&a.potential.spec(), &a.eps.0, WeakCouplingOptions::default())?;
    let mut t = Table::new(&["eps", "re_lambda", "im_lambda", "residual", "slope"]);
    for k in 0..rep.eps.len() {
        t.rows.push(vec![
            Cell::F(rep.eps[k]),
            Cell::F(rep.eigenvalues[k].re),
            Cell::F(rep.eigenvalues[k].im),
            Cell::F(rep.residuals[k]),
            Cell::F(rep.slope),
        ]);
    }
    Ok(t)
}

fn delta(a: &DeltaArgs) -> Result<Table> {
    let mut t = Table::new(&["re_alpha", "im_alpha", "re_lambda", "im_lambda", "exists"]);
    for &alpha in &a.alpha {
        let m = delta_eigenvalue(alpha)?;
        t.rows.push(vec![Cell::F(alpha.re), Cell::F(alpha.im), Cell::F(m.lambda.re), Cell::F(m.lambda.im), Cell::B(m.exists)]);
    }
    Ok(t)
}

fn gamma(a: &GammaArgs) -> Result<Table> {
    let sigmas: Vec<[i8; 3]> = match a.sigma {
        Some(s) => vec![s],
        None => ALL_SIGMAS.to_vec(),
    };
    let mut t = Table::new(&["sigma1", "sigma2", "sigma3", "r", "re_alpha", "im_alpha"]);
    for s in sigmas {
        for (r, alpha) in gamma_curve(s, &a.r.values())?.samples {
            t.rows.push(vec![
                Cell::I(s[0] as i64),
                Cell::I(s[1] as i64),
                Cell::I(s[2] as i64),
                Cell::F(r),
                Cell::F(alpha.re),
                Cell::F(alpha.im),
            ]);
        }
    }
    Ok(t)
}

fn step(a: &StepArgs) -> Result<Table> {
    let mut t = Table::new(&["b", "index", "lambda", "residual"]);
    for b in a.b.values() {
        let m = find_step_eigenvalues(a.a, b, a.lambda_max)?;
        for (k, e) in m.eigenvalues.iter().enumerate() {
            t.rows.push(vec![Cell::F(b), Cell::I(k as i64), Cell::F(e.lambda), Cell::F(e.residual)]);
        }
    }
    Ok(t)
}

fn dirichlet(a: &DirichletArgs, seed: u64) -> Result<Table> {
    let op = match a.oracle {
        Some(cfg) => Some((build_fd(FdPotential::SgnDirichletSplit, cfg.half_length, cfg.n, None)?, cfg)),
        None => None,
    };
    let mut t = Table::new(&["re", "im", "norm", "oracle"]);
    for z in a.grid.points() {
        let norm = match dirichlet_norm(z) {
            Ok(v) => v,
            Err(Error::Spectrum(_)) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        let oracle = match &op {
            Some((op, cfg)) if norm.is_finite() => {
                let opts = FdOptions { method: cfg.method, dense_max: cfg.dense_max, seed, estimate_error: false };
                Some(resolvent_norm_fd(op, z, opts)?.value)
            }
            Some(_) => Some(f64::INFINITY),
            None => None,
        };
        t.rows.push(vec![Cell::F(z.re), Cell::F(z.im), Cell::F(norm), Cell::Opt(oracle)]);
    }
    Ok(t)
}

fn field(a: &FieldArgs, seed: u64, format: OutputFormat) -> Result<String> {
    let grid = GridSpec {
        re_min: a.re.min,
        re_max: a.re.max,
        im_min: a.im.min,
        im_max: a.im.max,
        n_re: a.re.count,
        n_im: a.im.count,
    };
    let oracle = a.oracle.map(|c| OracleConfig { seed, ..c });
    let f = compute_field(grid, oracle)?;
    Ok(match format {
        OutputFormat::Csv => field_to_csv(&f),
        OutputFormat::Json => field_to_json(&f),
    })
}

fn execute(cli: &Cli, err: &mut dyn Write) -> Result<String> {
    let fmt = cli.format;
    match &cli.command {
        Command::Kernel { action: KernelCmd::Eval(a) } => Ok(kernel_eval(a)?.render(fmt)),
        Command::Bounds { action: BoundsCmd::Sweep(a) } => Ok(bounds_sweep(a)?.render(fmt)),
        Command::Field(a) => field(a, cli.seed, fmt),
        Command::Bs { action } => match action {
            BsCmd::Sweep(a) => Ok(bs_sweep(a)?.render(fmt)),
            BsCmd::Roots(a) => Ok(bs_roots(a, err)?.render(fmt)),
            BsCmd::Rate(a) => Ok(bs_rate(a)?.render(fmt)),
        },
        Command::Delta(a) => Ok(delta(a)?.render(fmt)),
        Command::Gamma(a) => Ok(gamma(a)?.render(fmt)),
        Command::Step(a) => Ok(step(a)?.render(fmt)),
        Command::Dirichlet(a) => Ok(dirichlet(a, cli.seed)?.render(fmt)),
    }
}

/// Run the CLI on `argv` (including the program name). Returns the exit
/// code: 0 on success, 1 on domain errors, 2 on configuration errors.
pub fn run<I, S>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = out.write_all(text.as_bytes());
                    0
                }
                _ => {
                    let _ = err.write_all(text.as_bytes());
                    2
                }
            };
        }
    };
    if cli.dry_run {
        let mut s = serde_json::to_string(&cli).expect("config serialises");
        s.push('\n');
        let _ = out.write_all(s.as_bytes());
        return 0;
    }
    let result = with_thread_pool(|| {
        let mut sink = Vec::new();
        let r = execute(&cli, &mut sink);
        (r, sink)
    });
    let text = match result {
        Ok((r, diag)) => {
            let _ = err.write_all(&diag);
            r
        }
        Err(e) => Err(e),
    };
    match text {
        Ok(text) => {
            let written = match &cli.output {
                Some(p) => std::fs::write(p, text.as_bytes()).map_err(Error::from),
                None => out.write_all(text.as_bytes()).map_err(Error::from),
            };
            match written {
                Ok(()) => 0,
                Err(e) => {
                    let _ = writeln!(err, "error: {e}");
                    e.exit_code()
                }
            }
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
