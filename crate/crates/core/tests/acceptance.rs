//! The eight acceptance criteria, run in sequence with their time budgets.
//! Built without the libtest harness so the table is printed on every run.

use std::process::ExitCode;

use bilinear::reproduce::{self, DEFAULT_SEED};

fn main() -> ExitCode {
    let outcomes = reproduce::run_all(DEFAULT_SEED);
    for o in &outcomes {
        println!("{}", o.line());
    }
    let failed: Vec<u8> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id).collect();
    if failed.is_empty() {
        println!("acceptance: {}/{} criteria passed", outcomes.len(), outcomes.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
