//! Acceptance gate: runs the ten checks and prints one line per check.

use std::process::ExitCode;

use vortalign::verify;

fn main() -> ExitCode {
    // `cargo test -- --list` and filters from other targets land here too
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return ExitCode::SUCCESS;
    }
    let mut failed = 0;
    for id in 1..=10 {
        let r = verify::run_one(id).expect("ten checks");
        println!("{}", r.line());
        if !r.passed {
            failed += 1;
        }
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
