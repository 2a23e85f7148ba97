//! Full verification suite, one test per criterion. Each test prints a
//! single `[PASS]` or `[FAIL]` line.

use std::io::Write;
use std::sync::Mutex;

use nedpca::verify::{density_monotonicity_exceptions, run_criterion, Level};

// Criteria 9 and 10 are timed, so criteria run one at a time.
static SERIAL: Mutex<()> = Mutex::new(());

/// Writes past the test harness's output capture so that passing criteria
/// are reported too.
fn report_line(line: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{line}");
    let _ = out.flush();
}

fn check(id: u8) {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let report = run_criterion(id, Level::Full);
    report_line(&report.to_string());
    assert!(report.passed, "criterion {id} failed");
}

#[test]
fn criterion_01_formula_table_matches_solver() {
    check(1);
}

#[test]
fn criterion_02_exact_three_site_example() {
    check(2);
}

#[test]
fn criterion_03_partition_function_matches_brute_force() {
    check(3);
}

#[test]
fn criterion_04_density_matches_stationary_sums() {
    check(4);
}

#[test]
fn criterion_05_reversibility_dichotomy() {
    check(5);
}

#[test]
fn criterion_06_two_site_recurrence_and_series() {
    check(6);
}

#[test]
fn criterion_07_free_energy() {
    check(7);
}

#[test]
fn criterion_08_density_generating_function() {
    check(8);
}

#[test]
fn criterion_09_monte_carlo_convergence() {
    check(9);
}

#[test]
fn criterion_10_kernel_equivalence_and_throughput() {
    check(10);
}

#[test]
fn density_monotonicity_diagnostic() {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let exceptions = density_monotonicity_exceptions(Level::Full);
    report_line(&format!(
        "[INFO] density not increasing in p1 at {} grid points",
        exceptions.len()
    ));
    for p in exceptions.iter().take(10) {
        let (p1, p2) = p.rates();
        report_line(&format!("[INFO]   n={} m={} p1={p1} p2={p2}", p.n(), p.m()));
    }
}
