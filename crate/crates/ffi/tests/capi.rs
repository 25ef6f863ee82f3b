use std::ffi::{CStr, CString};
use std::ptr;

use qdopt_ffi::*;

fn last_error() -> String {
    let p = qdopt_last_error();
    assert!(!p.is_null(), "expected an error message");
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

#[test]
fn version_and_tunneling() {
    let v = unsafe { CStr::from_ptr(qdopt_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));

    let mut t = 0.0;
    let status = unsafe { qdopt_tunneling_probability(4.0, 0.5, 2.0, 1.0, &mut t) };
    assert_eq!(status, QdoptStatus::Ok);
    assert!(qdopt_last_error().is_null());
    assert!((t - (-0.5f64).exp()).abs() < 1e-15);

    let status = unsafe { qdopt_tunneling_probability(1.0, 1.0, 0.0, 1.0, &mut t) };
    assert_eq!(status, QdoptStatus::InvalidArgument);
    assert!(last_error().contains("invalid argument"));

    let status = unsafe { qdopt_tunneling_probability(1.0, 1.0, 1.0, 1.0, ptr::null_mut()) };
    assert_eq!(status, QdoptStatus::NullPointer);
}

#[test]
fn objective_lifecycle() {
    let mut obj = ptr::null_mut();
    let name = c("F7");
    assert_eq!(unsafe { qdopt_objective_new(name.as_ptr(), 3, 2, &mut obj) }, QdoptStatus::Ok);
    unsafe {
        assert_eq!(qdopt_objective_dim(obj), 3);
        assert_eq!(qdopt_objective_best_error(obj), f64::INFINITY);

        let mut f = 0.0;
        assert_eq!(qdopt_objective_evaluate(obj, [1.0, 2.0, 3.0].as_ptr(), 3, &mut f), QdoptStatus::Ok);
        assert_eq!(f, 14.0);
        assert_eq!(qdopt_objective_evaluate(obj, [1.0, 2.0].as_ptr(), 2, &mut f), QdoptStatus::DimensionMismatch);
        assert!(last_error().contains("expected 3, got 2"));
        assert_eq!(qdopt_objective_evaluate(obj, [0.0; 3].as_ptr(), 3, &mut f), QdoptStatus::Ok);
        assert_eq!(qdopt_objective_best_error(obj), 0.0);
        assert_eq!(qdopt_objective_evaluate(obj, [0.0; 3].as_ptr(), 3, &mut f), QdoptStatus::BudgetExhausted);
        assert_eq!(qdopt_objective_evals_used(obj), 2);
        assert_eq!(qdopt_objective_evaluate(obj, ptr::null(), 3, &mut f), QdoptStatus::NullPointer);
        qdopt_objective_free(obj);
        qdopt_objective_free(ptr::null_mut());
    }

    let bad = c("F99");
    let mut obj = ptr::null_mut();
    assert_eq!(unsafe { qdopt_objective_new(bad.as_ptr(), 3, 10, &mut obj) }, QdoptStatus::InvalidArgument);
    assert!(obj.is_null());
    assert_eq!(unsafe { qdopt_objective_new(ptr::null(), 3, 10, &mut obj) }, QdoptStatus::NullPointer);
}

fn run(alg: &str, func: &str, dim: usize, max_fes: u64, seed: u64) -> *mut QdoptOutcome {
    let (a, f) = (c(alg), c(func));
    let mut out = ptr::null_mut();
    let status = unsafe { qdopt_run(a.as_ptr(), f.as_ptr(), dim, max_fes, seed, &mut out) };
    assert_eq!(status, QdoptStatus::Ok, "{}", last_error());
    out
}

#[test]
fn run_matches_core_and_copies_results() {
    let out = run("bip", "F7", 10, 50_000, 1);
    let spec = qdopt::make_benchmark(7, 10).unwrap();
    let config = qdopt::AlgorithmConfig::default_for(qdopt::Algorithm::Bip).with_seed(1);
    let direct = qdopt::harness::run_trial(&config, &spec, 50_000, &mut qdopt::Silent).unwrap();
    unsafe {
        assert_eq!(qdopt_outcome_final_error(out), direct.final_error);
        assert!(qdopt_outcome_final_error(out) < 1e-10);
        assert_eq!(qdopt_outcome_evals_used(out), 50_000);
        assert!(qdopt_outcome_succeeded(out));

        let mut best = [0.0; 10];
        assert_eq!(qdopt_outcome_best_position(out, best.as_mut_ptr(), 10), QdoptStatus::Ok);
        assert_eq!(&best[..], direct.best_position.as_deref().unwrap());
        assert_eq!(qdopt_outcome_best_position(out, best.as_mut_ptr(), 9), QdoptStatus::DimensionMismatch);

        let n = qdopt_outcome_trace_len(out);
        assert_eq!(n, direct.error_trace.len());
        let mut evals = vec![0u64; n];
        let mut errors = vec![0.0; n];
        assert_eq!(qdopt_outcome_trace(out, evals.as_mut_ptr(), errors.as_mut_ptr(), n), QdoptStatus::Ok);
        let copied: Vec<(u64, f64)> = evals.into_iter().zip(errors).collect();
        assert_eq!(copied, direct.error_trace);
        qdopt_outcome_free(out);
    }
}

#[test]
fn run_json_applies_overrides() {
    let config = c(r#"{"algorithm":"gbde","np":20,"cr_mean":0.5,"cr_std":0.1,
        "settings":{"seed":3,"success_threshold":1e-8,"stop_at_success":true,"bounds":"clamp"}}"#);
    let func = c("F7");
    let mut out = ptr::null_mut();
    let status = unsafe { qdopt_run_json(config.as_ptr(), func.as_ptr(), 5, 100_000, &mut out) };
    assert_eq!(status, QdoptStatus::Ok, "{}", last_error());
    unsafe {
        assert!(qdopt_outcome_succeeded(out));
        assert!(qdopt_outcome_evals_used(out) < 100_000);
        qdopt_outcome_free(out);
    }

    let broken = c(r#"{"algorithm":"gbde","np":2}"#);
    let status = unsafe { qdopt_run_json(broken.as_ptr(), func.as_ptr(), 5, 1_000, &mut out) };
    assert_eq!(status, QdoptStatus::InvalidArgument);
    assert!(last_error().contains("json error"));
}

#[test]
fn run_rejects_bad_input() {
    let (alg, func) = (c("simplex"), c("F7"));
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { qdopt_run(alg.as_ptr(), func.as_ptr(), 5, 100, 0, &mut out) }, QdoptStatus::InvalidArgument);
    assert!(out.is_null());

    let out = run("bbpso", "F1", 2, 0, 0);
    unsafe {
        assert_eq!(qdopt_outcome_final_error(out), f64::INFINITY);
        let mut best = [0.0; 2];
        assert_eq!(qdopt_outcome_best_position(out, best.as_mut_ptr(), 2), QdoptStatus::BudgetExhausted);
        qdopt_outcome_free(out);
        assert!(qdopt_outcome_final_error(ptr::null()).is_nan());
    }
}
