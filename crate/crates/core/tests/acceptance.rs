//! One PASS/FAIL line per acceptance criterion.

use std::process::ExitCode;

use dephase_core::verify::Suite;

fn main() -> ExitCode {
    // `cargo test -- --list` and filters are not meaningful here.
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return ExitCode::SUCCESS;
    }
    let suite = Suite::with_defaults();
    let mut failed = 0;
    for id in 1..=10 {
        let c = suite.criterion(id);
        println!("{}", c);
        if !c.pass {
            failed += 1;
        }
    }
    println!("acceptance: {} passed, {} failed", 10 - failed, failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
