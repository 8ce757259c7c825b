use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use edgeverse_ffi::*;

fn last_error() -> String {
    let p = ev_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn generate(users: usize, servers: usize, seed: u64, o: Option<&EvOverrides>) -> *mut EvScenario {
    let mut s = ptr::null_mut();
    let st = unsafe { ev_scenario_generate(users, servers, seed, o.map_or(ptr::null(), |o| o as *const _), &mut s) };
    assert_eq!(st, EvStatus::Ok);
    s
}

#[test]
fn solve_and_read_back() {
    let mut o = ev_overrides_default();
    o.omega = 3.0;
    let s = generate(6, 3, 5, Some(&o));
    unsafe {
        assert_eq!(ev_scenario_n_users(s), 6);
        assert_eq!(ev_scenario_n_servers(s), 3);
        let mut opts = ev_solve_options_default();
        opts.seed = 5;
        let mut r = ptr::null_mut();
        assert_eq!(ev_solve(s, EvStrategy::OptimalLatencyEarning, &opts, &mut r), EvStatus::Ok);

        let mut m = EvMetrics::default();
        assert_eq!(ev_result_metrics(r, &mut m), EvStatus::Ok);
        let mut a = [usize::MAX; 6];
        let mut d = [0.0; 6];
        assert_eq!(ev_result_assignment(r, a.as_mut_ptr(), a.len()), EvStatus::Ok);
        assert_eq!(ev_result_plan(r, d.as_mut_ptr(), d.len()), EvStatus::Ok);
        assert!(a.iter().all(|&j| j < 3));
        assert!(d.iter().all(|&x| (1.0..=10.0).contains(&x)));

        // Same answer as the Rust API.
        let rs = edgeverse::scenario::generate_scenario(
            6,
            3,
            5,
            Some(&edgeverse::ScenarioOverrides { omega: Some(3.0), ..Default::default() }),
        )
        .unwrap();
        let want = edgeverse::optimizer::alternating_optimize(
            &rs,
            &edgeverse::SolveOptions { seed: 5, ..Default::default() },
        )
        .unwrap();
        assert_eq!(a.to_vec(), want.assignment.server_of);
        assert_eq!(d.to_vec(), want.plan.d);
        assert_eq!(m.utility, want.metrics.utility);
        assert_eq!(m.iterations as usize, want.iterations);

        let n = ev_result_trace_len(r);
        assert_eq!(n, want.utility_trace.len());
        let mut t = vec![0.0; n];
        assert_eq!(ev_result_trace(r, t.as_mut_ptr(), n), EvStatus::Ok);
        assert_eq!(t, want.utility_trace);

        ev_result_free(r);
        ev_scenario_free(s);
    }
}

#[test]
fn small_buffer_and_null_pointers() {
    let s = generate(4, 2, 1, None);
    unsafe {
        let mut r = ptr::null_mut();
        assert_eq!(ev_solve(s, EvStrategy::Random, ptr::null(), &mut r), EvStatus::Ok);
        let mut a = [0usize; 3];
        assert_eq!(ev_result_assignment(r, a.as_mut_ptr(), 3), EvStatus::BufferTooSmall);
        assert!(last_error().contains("4 needed"));
        assert_eq!(ev_result_plan(r, ptr::null_mut(), 4), EvStatus::NullPointer);
        assert_eq!(ev_solve(ptr::null(), EvStrategy::Random, ptr::null(), &mut r), EvStatus::NullPointer);
        assert_eq!(ev_solve(s, EvStrategy::Random, ptr::null(), ptr::null_mut()), EvStatus::NullPointer);
        assert_eq!(ev_scenario_n_users(ptr::null()), 0);
        ev_result_free(r);
        ev_scenario_free(s);
        ev_scenario_free(ptr::null_mut());
        ev_result_free(ptr::null_mut());
    }
}

#[test]
fn error_codes_follow_error_kind() {
    let mut o = ev_overrides_default();
    o.d_min = 5.0;
    o.d_max = 2.0;
    let mut s = ptr::null_mut();
    unsafe {
        assert_eq!(ev_scenario_generate(3, 2, 0, &o, &mut s), EvStatus::InvalidArgument);
        assert!(s.is_null());
        assert!(!last_error().is_empty());

        let bad = CString::new("{\"n_users\": 1}").unwrap();
        assert_eq!(ev_scenario_from_json(bad.as_ptr(), &mut s), EvStatus::Parse);
        assert!(last_error().contains("n_servers"), "{}", last_error());

        let s = generate(30, 5, 0, None);
        let mut opts = ev_solve_options_default();
        opts.allow_fallback = false;
        let mut r = ptr::null_mut();
        assert_eq!(ev_solve(s, EvStrategy::OptimalLatencyEarning, &opts, &mut r), EvStatus::Capacity);
        ev_scenario_free(s);
    }
}

#[test]
fn save_and_load() {
    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("s.json").to_str().unwrap()).unwrap();
    let s = generate(3, 2, 8, None);
    unsafe {
        assert_eq!(ev_scenario_save(s, path.as_ptr()), EvStatus::Ok);
        let mut t = ptr::null_mut();
        assert_eq!(ev_scenario_load(path.as_ptr(), &mut t), EvStatus::Ok);
        assert_eq!(ev_scenario_n_users(t), 3);
        let missing = CString::new(dir.path().join("none.json").to_str().unwrap()).unwrap();
        let mut u = ptr::null_mut();
        assert_eq!(ev_scenario_load(missing.as_ptr(), &mut u), EvStatus::Io);
        ev_scenario_free(t);
        ev_scenario_free(s);
    }
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(ev_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/edgeverse.h")).unwrap();
    let src = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/src/lib.rs")).unwrap();
    let exports: Vec<&str> = src
        .split("extern \"C\" fn ")
        .skip(1)
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 15);
    for name in exports {
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
}

/// Compiles `tests/smoke.c` against the static library and runs it.
#[test]
fn c_smoke_test() {
    let target_dir = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    let lib = target_dir.join("libedgeverse_ffi.a");
    assert!(lib.exists(), "static library not built at {}", lib.display());
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let status = Command::new("cc")
        .arg(root.join("tests/smoke.c"))
        .arg("-I")
        .arg(root.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .expect("cc is required for the C smoke test");
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("ok"));
}
