//! Exercises the C entry points the way a foreign caller would: through raw
//! pointers and status codes, including the buffer-sizing protocol and the
//! thread-local error message.

use std::ffi::{CStr, CString};

use beeline_capi::*;

fn fixture_path() -> CString {
    CString::new(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../core/fixtures/small-a3.oracle"
    ))
    .unwrap()
}

/// Dense 3-strategy, threshold-2 world: every transition advances one
/// level, so any two-step path succeeds.
fn dense_instance_file(dir: &std::path::Path) -> CString {
    let mut text = String::from("strategies 3 a 2 monotone 1\n");
    for v in 0..=3 {
        for s in 0..=2 {
            for u in 0..3 {
                text.push_str(&format!("{v} {s} {u} {}\n", s + 1));
            }
        }
    }
    for v in 0..3 {
        text.push_str(&format!("resp {v} 0 1\nresp {v} 1 3\nresp {v} 2 5\n"));
    }
    let path = dir.join("dense.oracle");
    std::fs::write(&path, text).unwrap();
    CString::new(path.display().to_string()).unwrap()
}

fn last_error() -> String {
    unsafe {
        CStr::from_ptr(bl_last_error_message())
            .to_string_lossy()
            .into_owned()
    }
}

#[test]
fn load_query_and_free_instance() {
    unsafe {
        let mut instance: *mut BlInstance = std::ptr::null_mut();
        let status = bl_instance_load(fixture_path().as_ptr(), &mut instance);
        assert_eq!(status, BlStatus::BlStatusOk, "{}", last_error());
        assert_eq!(bl_instance_strategy_count(instance), 4);
        assert_eq!(bl_instance_threshold(instance), 3);

        let mut steps = [0u32; 8];
        let mut len = 0usize;
        let status = bl_shortest_path(instance, steps.as_mut_ptr(), steps.len(), &mut len);
        assert_eq!(status, BlStatus::BlStatusOk);
        assert_eq!(&steps[..len], &[0, 1, 2]);

        let mut level = 99u32;
        let status = bl_prefix_progress(instance, steps.as_ptr(), len, &mut level);
        assert_eq!(status, BlStatus::BlStatusOk);
        assert_eq!(level, 3);

        bl_instance_free(instance);
    }
}

#[test]
fn buffer_sizing_protocol_reports_needed_length() {
    unsafe {
        let mut instance: *mut BlInstance = std::ptr::null_mut();
        bl_instance_load(fixture_path().as_ptr(), &mut instance);
        let mut len = 0usize;
        let status = bl_shortest_path(instance, std::ptr::null_mut(), 0, &mut len);
        assert_eq!(status, BlStatus::BlStatusBufferTooSmall);
        assert_eq!(len, 3);
        assert!(last_error().contains("need 3"));
        bl_instance_free(instance);
    }
}

#[test]
fn missing_file_reports_io_error() {
    unsafe {
        let mut instance: *mut BlInstance = std::ptr::null_mut();
        let path = CString::new("/nonexistent/nowhere.oracle").unwrap();
        let status = bl_instance_load(path.as_ptr(), &mut instance);
        assert_eq!(status, BlStatus::BlStatusIoError);
        assert!(!last_error().is_empty());
    }
}

#[test]
fn tabular_search_succeeds_and_returns_winning_path() {
    let dir = tempfile::tempdir().unwrap();
    unsafe {
        let mut instance: *mut BlInstance = std::ptr::null_mut();
        bl_instance_load(dense_instance_file(dir.path()).as_ptr(), &mut instance);
        let mut oracle: *mut BlOracle = std::ptr::null_mut();
        let status = bl_oracle_tabular(instance, &mut oracle);
        assert_eq!(status, BlStatus::BlStatusOk, "{}", last_error());

        let config = bl_search_config_large(7);
        let mut summary = BlSearchSummary {
            status: BlSearchStatus::BlSearchIterationsExhausted,
            best_fitness: -1,
            total_queries: 0,
            iterations_run: 0,
            winning_len: -1,
        };
        let mut winning = [0u32; 16];
        let status = bl_search_run(
            oracle,
            &config,
            10_000,
            &mut summary,
            winning.as_mut_ptr(),
            winning.len(),
        );
        assert_eq!(status, BlStatus::BlStatusOk, "{}", last_error());
        assert_eq!(summary.status, BlSearchStatus::BlSearchSuccess);
        assert_eq!(summary.best_fitness, 5);
        assert_eq!(summary.winning_len, 2);
        assert!(winning[..2].iter().all(|&s| s < 3));
        assert!(summary.total_queries > 0);

        bl_oracle_free(oracle);
        bl_instance_free(instance);
    }
}

#[test]
fn synthetic_search_is_deterministic_across_calls() {
    unsafe {
        let run = || {
            let mut oracle: *mut BlOracle = std::ptr::null_mut();
            let status = bl_oracle_synthetic(11, 0.7, 1, 2, 0.0, 4, &mut oracle);
            assert_eq!(status, BlStatus::BlStatusOk);
            let config = bl_search_config_small(3);
            let mut summary = BlSearchSummary {
                status: BlSearchStatus::BlSearchIterationsExhausted,
                best_fitness: -1,
                total_queries: 0,
                iterations_run: 0,
                winning_len: -1,
            };
            let mut winning = [0u32; 8];
            let status = bl_search_run(
                oracle,
                &config,
                500,
                &mut summary,
                winning.as_mut_ptr(),
                winning.len(),
            );
            assert_eq!(status, BlStatus::BlStatusOk);
            bl_oracle_free(oracle);
            (
                summary.status,
                summary.best_fitness,
                summary.total_queries,
                summary.winning_len,
                winning,
            )
        };
        assert_eq!(run(), run());
    }
}

#[test]
fn invalid_arguments_are_rejected_not_crashed() {
    unsafe {
        let mut instance: *mut BlInstance = std::ptr::null_mut();
        assert_eq!(
            bl_instance_load(std::ptr::null(), &mut instance),
            BlStatus::BlStatusInvalidArgument
        );
        let mut level = 0u32;
        assert_eq!(
            bl_prefix_progress(std::ptr::null(), std::ptr::null(), 0, &mut level),
            BlStatus::BlStatusInvalidArgument
        );
        let mut oracle: *mut BlOracle = std::ptr::null_mut();
        assert_eq!(
            bl_oracle_synthetic(0, 1.5, 1, 2, 0.0, 4, &mut oracle),
            BlStatus::BlStatusInvalidArgument
        );
        assert_eq!(
            bl_oracle_synthetic(0, 0.5, 1, 2, 0.0, 0, &mut oracle),
            BlStatus::BlStatusInvalidArgument
        );
        bl_instance_free(std::ptr::null_mut()); // null-safe
        bl_oracle_free(std::ptr::null_mut());
    }
}

#[test]
fn version_string_is_static_and_nul_terminated() {
    unsafe {
        let version = CStr::from_ptr(bl_version()).to_str().unwrap();
        assert_eq!(version, env!("CARGO_PKG_VERSION"));
    }
}
