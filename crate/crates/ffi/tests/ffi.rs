use std::ffi::CStr;
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use pseudospec_ffi::*;

fn c(re: f64, im: f64) -> PsComplex {
    PsComplex { re, im }
}

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 512];
    unsafe {
        ps_last_error_message(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

#[test]
fn wave_numbers_and_kernel() {
    let (mut kp, mut km) = (c(0.0, 0.0), c(0.0, 0.0));
    assert_eq!(unsafe { ps_wave_numbers(c(0.0, 0.0), &mut kp, &mut km) }, PsStatus::Ok);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    assert!((kp.re - h).abs() < 1e-15 && (kp.im - h).abs() < 1e-15);
    assert!((km.re - h).abs() < 1e-15 && (km.im + h).abs() < 1e-15);

    let mut r = c(0.0, 0.0);
    assert_eq!(unsafe { ps_resolvent_kernel(c(3.0, -1.0), 1.0, 2.0, &mut r) }, PsStatus::Spectrum);
    assert!(last_error().contains("spectrum"));
    assert_eq!(unsafe { ps_dirichlet_kernel(c(-1.0, 0.0), 1.0, -2.0, &mut r) }, PsStatus::Ok);
    assert_eq!(r, c(0.0, 0.0));
    assert_eq!(unsafe { ps_resolvent_kernel(c(-1.0, 0.0), 1.0, 2.0, ptr::null_mut()) }, PsStatus::NullPointer);
}

#[test]
fn regions_and_bounds() {
    let mut reg = PsRegion::U;
    assert_eq!(unsafe { ps_classify_region(c(10.0, 0.5), &mut reg) }, PsStatus::Ok);
    assert_eq!(reg, PsRegion::W);
    let (mut lo, mut hi) = (0.0, 0.0);
    assert_eq!(unsafe { ps_bounds(c(0.0, 2.0), &mut lo, &mut hi) }, PsStatus::Ok);
    assert_eq!((lo, hi), (0.0, 1.0));
    assert_eq!(unsafe { ps_bounds(c(5.0, 1.0), &mut lo, &mut hi) }, PsStatus::Spectrum);
}

#[test]
fn delta_and_step_handles() {
    let mut l = c(0.0, 0.0);
    let mut exists = -1;
    assert_eq!(unsafe { ps_delta_eigenvalue(c(2.0, 0.0), &mut l, &mut exists) }, PsStatus::Ok);
    assert_eq!((l.re, exists), (-0.75, 0));
    assert_eq!(unsafe { ps_delta_eigenvalue(c(0.0, 0.0), &mut l, &mut exists) }, PsStatus::ZeroCoupling);

    let mut m = ptr::null_mut();
    assert_eq!(unsafe { ps_step_find(1.0, 3.0, 120.0, &mut m) }, PsStatus::Ok);
    assert_eq!(unsafe { ps_step_count(m) }, 7);
    let (mut lam, mut res) = (0.0, 0.0);
    assert_eq!(unsafe { ps_step_get(m, 7, &mut lam, &mut res) }, PsStatus::OutOfRange);
    unsafe { ps_step_free(m) };
    assert_eq!(unsafe { ps_step_find(-1.0, 3.0, 60.0, &mut m) }, PsStatus::Config);
}

#[test]
fn field_handle_round_trip() {
    let mut f = ptr::null_mut();
    assert_eq!(unsafe { ps_field_compute(0.0, 1.0, 1, 0.0, 1.0, 2, 0, 0.0, 0, &mut f) }, PsStatus::Config);
    assert_eq!(unsafe { ps_field_compute(0.0, 100.0, 4, -1.5, 1.5, 3, 0, 0.0, 0, &mut f) }, PsStatus::Ok);
    assert_eq!(unsafe { ps_field_len(f) }, 12);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("field.csv");
    let cpath = std::ffi::CString::new(path.to_str().unwrap()).unwrap();
    assert_eq!(unsafe { ps_field_write(f, cpath.as_ptr(), 0) }, PsStatus::Ok);
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 13);
    assert_eq!(unsafe { ps_field_write(f, cpath.as_ptr(), 7) }, PsStatus::Config);
    unsafe { ps_field_free(f) };
    unsafe { ps_field_free(ptr::null_mut()) };
}

#[test]
fn header_is_generated() {
    let h = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/pseudospec.h");
    let text = std::fs::read_to_string(h).unwrap();
    for sym in ["ps_field_compute", "ps_step_get", "PS_STATUS_ZERO_COUPLING", "typedef struct PsField PsField"] {
        assert!(text.contains(sym), "{sym} missing from header");
    }
}

fn static_lib() -> Option<PathBuf> {
    let exe = std::env::current_exe().ok()?;
    let profile_dir = exe.parent()?.parent()?;
    let lib = profile_dir.join("libpseudospec_ffi.a");
    lib.exists().then_some(lib)
}

#[test]
fn c_smoke_program() {
    let Some(lib) = static_lib() else {
        eprintln!("static library not found; skipping C smoke test");
        return;
    };
    if Command::new("cc").arg("--version").output().is_err() {
        eprintln!("no C compiler; skipping C smoke test");
        return;
    }
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("smoke");
    let status = Command::new("cc")
        .arg(root.join("tests/smoke.c"))
        .arg("-I")
        .arg(root.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C smoke program failed to compile");
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}
