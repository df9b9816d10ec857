//! Acceptance criteria 1–12, one PASS/FAIL line each.
//!
//! Runs without the libtest harness so the lines always reach the output. Optional arguments
//! select criteria by number (`cargo test --test acceptance -- 4 10`); flags are ignored.

use atrt::harness::acceptance::{run_criterion, TITLES};
use std::process::ExitCode;

fn main() -> ExitCode {
    let selected: Vec<u8> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .filter_map(|a| a.trim_start_matches('c').parse().ok())
        .collect();
    let ids: Vec<u8> = if selected.is_empty() { (1..=TITLES.len() as u8).collect() } else { selected };
    let mut failed = 0;
    for id in &ids {
        match run_criterion(*id) {
            Ok(r) => {
                println!("{r}");
                failed += usize::from(!r.pass);
            }
            Err(e) => {
                println!("FAIL [{id:>2}] error: {e}");
                failed += 1;
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", ids.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
