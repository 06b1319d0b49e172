use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use countgof_ffi::*;

fn last_error() -> String {
    let p = countgof_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn series_round_trip_and_errors() {
    let values = [3u32, 1, 4, 1, 5];
    let mut s = ptr::null_mut();
    unsafe {
        assert_eq!(
            countgof_series_new(values.as_ptr(), 5, &mut s),
            CountgofStatus::Ok
        );
        assert_eq!(countgof_series_len(s), 5);
        let mut buf = [0u32; 5];
        assert_eq!(
            countgof_series_copy(s, buf.as_mut_ptr(), 5),
            CountgofStatus::Ok
        );
        assert_eq!(buf, values);
        countgof_series_free(s);

        let mut empty = ptr::null_mut();
        assert_eq!(
            countgof_series_new(ptr::null(), 0, &mut empty),
            CountgofStatus::InvalidArgument
        );
        assert!(last_error().contains("empty"));
        assert_eq!(
            countgof_series_new(values.as_ptr(), 5, ptr::null_mut()),
            CountgofStatus::NullPointer
        );
        assert!(last_error().contains("series_out"));
        assert_eq!(countgof_series_len(ptr::null()), 0);
        countgof_series_free(ptr::null_mut());
    }
}

#[test]
fn fit_and_statistic_match_library() {
    let values = [1u32, 2, 2, 3];
    let mut s = ptr::null_mut();
    let mut params = CountgofParams::default();
    let mut value = 0.0;
    unsafe {
        assert_eq!(
            countgof_series_new(values.as_ptr(), 4, &mut s),
            CountgofStatus::Ok
        );
        assert_eq!(
            countgof_fit(s, CountgofFamily::PoissonInar1, &mut params),
            CountgofStatus::Ok
        );
        assert_eq!(params.len, 2);
        assert!((params.values[0] - 0.5).abs() < 1e-12);
        assert!((params.values[1] - 1.5).abs() < 1e-12);
        assert_eq!(
            countgof_statistic(
                s,
                CountgofFamily::PoissonInar1,
                &params,
                1.0,
                CountgofRoute::Closed,
                &mut value
            ),
            CountgofStatus::Ok
        );
        let expected = countgof::statistic::statistic_closed_inar1(
            &countgof::models::CountSeries::new(values.to_vec()).unwrap(),
            params.values[0],
            params.values[1],
            1.0,
        );
        assert_eq!(value, expected);
        assert_eq!(
            countgof_statistic(
                s,
                CountgofFamily::PoissonInar2,
                &params,
                1.0,
                CountgofRoute::Auto,
                &mut value
            ),
            CountgofStatus::InvalidArgument
        );
        countgof_series_free(s);
    }
}

#[test]
fn model_from_toml_and_simulate_is_deterministic() {
    let toml = CString::new("model = \"inarch1\"\ntheta1 = 2.0\ntheta2 = 0.4\n").unwrap();
    let mut m = ptr::null_mut();
    let (mut a, mut b) = (ptr::null_mut(), ptr::null_mut());
    unsafe {
        assert_eq!(
            countgof_model_from_toml(toml.as_ptr(), &mut m),
            CountgofStatus::Ok
        );
        assert_eq!(countgof_simulate(m, 50, 100, 9, &mut a), CountgofStatus::Ok);
        assert_eq!(countgof_simulate(m, 50, 100, 9, &mut b), CountgofStatus::Ok);
        let (mut x, mut y) = ([0u32; 50], [0u32; 50]);
        countgof_series_copy(a, x.as_mut_ptr(), 50);
        countgof_series_copy(b, y.as_mut_ptr(), 50);
        assert_eq!(x, y);
        countgof_series_free(a);
        countgof_series_free(b);
        countgof_model_free(m);

        let bad = CString::new(
            "model = \"inar1\"\np = 1.5\ninnovation = { dist = \"poisson\", theta = 1.0 }",
        )
        .unwrap();
        assert_eq!(
            countgof_model_from_toml(bad.as_ptr(), &mut m),
            CountgofStatus::InvalidArgument
        );
        assert!(last_error().contains('p'));
    }
}

#[test]
fn header_declares_every_export() {
    let header =
        std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/countgof.h"))
            .unwrap();
    for name in [
        "countgof_last_error_message",
        "countgof_series_new",
        "countgof_series_read_csv",
        "countgof_series_len",
        "countgof_series_copy",
        "countgof_series_free",
        "countgof_model_from_toml",
        "countgof_model_null",
        "countgof_model_free",
        "countgof_simulate",
        "countgof_fit",
        "countgof_statistic",
        "countgof_gof_test",
        "COUNTGOF_STATUS_DEGENERATE",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}

/// Compiles the C smoke program against the generated header and the shared
/// library, then runs it.
#[test]
fn c_program_links_and_runs() {
    let Ok(cc) = which_cc() else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let lib_dir = std::env::current_exe()
        .unwrap()
        .parent()
        .unwrap()
        .parent()
        .unwrap()
        .to_path_buf();
    assert!(
        lib_dir.join("libcountgof_ffi.so").exists()
            || lib_dir.join("libcountgof_ffi.dylib").exists(),
        "shared library not found in {}",
        lib_dir.display()
    );
    let out_dir = tempfile_dir();
    let exe = out_dir.join("smoke");
    let status = Command::new(cc)
        .arg(manifest.join("tests/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg("-L")
        .arg(&lib_dir)
        .arg("-lcountgof_ffi")
        .arg("-o")
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let output = Command::new(&exe)
        .env("LD_LIBRARY_PATH", &lib_dir)
        .env("DYLD_LIBRARY_PATH", &lib_dir)
        .output()
        .unwrap();
    assert!(
        output.status.success(),
        "smoke program failed: {:?}\n{}",
        output.status,
        String::from_utf8_lossy(&output.stderr)
    );
    assert!(String::from_utf8_lossy(&output.stdout).starts_with("p_value="));
}

fn which_cc() -> Result<&'static str, ()> {
    for cc in ["cc", "gcc", "clang"] {
        if Command::new(cc).arg("--version").output().is_ok() {
            return Ok(cc);
        }
    }
    Err(())
}

fn tempfile_dir() -> PathBuf {
    let dir = std::env::temp_dir().join(format!("countgof-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
