//! Drives the C ABI from Rust exactly as a C caller would: raw pointers,
//! status codes, and manual frees.

use std::ffi::{CStr, CString};
use std::ptr;

use ddreach_capi::{
    ddr_last_error, ddr_oracle_matches, ddr_run, ddr_set_contains, ddr_set_count, ddr_set_free,
    ddr_store_free, ddr_store_new, ddr_store_num_nodes, ddr_system_bad_case, ddr_system_counter,
    ddr_system_free, ddr_system_parse, ddr_system_philosophers, ddr_system_vars,
    ddr_system_write, ddr_string_free, ddr_version, DdrRunStats, DdrStatus,
};

fn last_error() -> String {
    unsafe { CStr::from_ptr(ddr_last_error()) }
        .to_string_lossy()
        .into_owned()
}

#[test]
fn counter_run_reports_count_and_stats() {
    unsafe {
        let store = ddr_store_new(8, 2, 16);
        assert!(!store.is_null());
        let sys = ddr_system_counter(store, 8);
        assert!(!sys.is_null(), "{}", last_error());
        assert_eq!(ddr_system_vars(sys), 8);

        let mut set = ptr::null_mut();
        let mut stats = DdrRunStats::default();
        let status = ddr_run(store, sys, 1, 1, 60_000.0, &mut set, &mut stats);
        assert_eq!(status, DdrStatus::DdrOk, "{}", last_error());
        assert!(!set.is_null());
        assert_eq!(stats.n, 8);
        assert_eq!(stats.m, 2);
        assert_eq!(stats.top_loop_iterations, 2);
        assert!(stats.reach_calls > 0);
        assert!(ddr_store_num_nodes(store) >= stats.peak_node_count);

        let count = ddr_set_count(store, set);
        assert!(!count.is_null());
        assert_eq!(CStr::from_ptr(count).to_str().unwrap(), "256");
        ddr_string_free(count);

        assert_eq!(ddr_set_contains(store, set, [0u8; 8].as_ptr(), 8), 1);
        assert_eq!(ddr_set_contains(store, set, [0u8; 4].as_ptr(), 4), -1);
        assert_eq!(ddr_oracle_matches(store, sys, set), 1);

        ddr_set_free(set);
        ddr_system_free(sys);
        ddr_store_free(store);
    }
}

#[test]
fn all_algorithms_agree_through_the_abi() {
    unsafe {
        let store = ddr_store_new(6, 2, 14);
        let sys = ddr_system_philosophers(store, 2);
        assert!(!sys.is_null(), "{}", last_error());
        let mut counts = Vec::new();
        for alg in 0..5u32 {
            let mut set = ptr::null_mut();
            let status = ddr_run(store, sys, alg, 2, 60_000.0, &mut set, ptr::null_mut());
            assert_eq!(status, DdrStatus::DdrOk, "alg {alg}: {}", last_error());
            let count = ddr_set_count(store, set);
            counts.push(CStr::from_ptr(count).to_str().unwrap().to_owned());
            ddr_string_free(count);
            ddr_set_free(set);
        }
        counts.dedup();
        assert_eq!(counts, vec!["16".to_owned()]);
        ddr_system_free(sys);
        ddr_store_free(store);
    }
}

#[test]
fn parse_and_write_round_trip() {
    unsafe {
        let store = ddr_store_new(2, 2, 14);
        let text = CString::new("tsys 1\nvars 2 domain 2\ninit\n0 0\nend\nrel flip support 1\n0 1\n1 0\nend\n").unwrap();
        let sys = ddr_system_parse(store, text.as_ptr());
        assert!(!sys.is_null(), "{}", last_error());
        let written = ddr_system_write(sys);
        assert!(!written.is_null());
        let round = ddr_system_parse(store, written);
        assert!(!round.is_null(), "{}", last_error());
        ddr_string_free(written);
        ddr_system_free(round);
        ddr_system_free(sys);
        ddr_store_free(store);
    }
}

#[test]
fn bad_case_wrap_needs_a_spare_variable() {
    unsafe {
        let store = ddr_store_new(5, 2, 14);
        let counter = ddr_system_counter(store, 4);
        assert!(!counter.is_null(), "{}", last_error());
        let bad = ddr_system_bad_case(store, counter);
        assert!(!bad.is_null(), "{}", last_error());
        assert_eq!(ddr_system_vars(bad), 5);
        let mut set = ptr::null_mut();
        let status = ddr_run(store, bad, 0, 1, 60_000.0, &mut set, ptr::null_mut());
        assert_eq!(status, DdrStatus::DdrOk, "{}", last_error());
        let count = ddr_set_count(store, set);
        assert_eq!(CStr::from_ptr(count).to_str().unwrap(), "16");
        ddr_string_free(count);
        ddr_set_free(set);
        ddr_system_free(bad);
        ddr_system_free(counter);
        ddr_store_free(store);
    }
}

#[test]
fn failures_set_status_and_message() {
    unsafe {
        assert!(!CStr::from_ptr(ddr_version()).to_str().unwrap().is_empty());

        // Parse failure carries the line number.
        let store = ddr_store_new(2, 2, 14);
        let garbage = CString::new("tsys 1\nvars 2 domain 2\nwhat\n").unwrap();
        assert!(ddr_system_parse(store, garbage.as_ptr()).is_null());
        assert!(last_error().contains("line"));

        // Null arguments are rejected before anything runs.
        let mut set = ptr::null_mut();
        let status = ddr_run(ptr::null(), ptr::null(), 0, 1, 0.0, &mut set, ptr::null_mut());
        assert_eq!(status, DdrStatus::DdrNullArg);
        assert!(ddr_system_counter(ptr::null(), 3).is_null());

        // Unknown algorithm code.
        let sys = ddr_system_counter(store, 2);
        let status = ddr_run(store, sys, 9, 1, 0.0, &mut set, ptr::null_mut());
        assert_eq!(status, DdrStatus::DdrInvalid);
        assert!(last_error().contains("unknown algorithm"));

        ddr_system_free(sys);
        ddr_store_free(store);

        // Timeout surfaces as its own status.
        let store = ddr_store_new(20, 2, 14);
        let sys = ddr_system_counter(store, 20);
        let status = ddr_run(store, sys, 0, 1, 0.000_1, &mut set, ptr::null_mut());
        assert_eq!(status, DdrStatus::DdrTimeout, "{}", last_error());
        ddr_system_free(sys);
        ddr_store_free(store);
    }
}
