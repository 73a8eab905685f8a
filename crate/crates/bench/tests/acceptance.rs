//! Acceptance criteria, one line each. Runs at full scale; exits nonzero if
//! any criterion fails.

use logistic_chain::validation::{run_suite, Scale, SuiteOptions};

fn main() {
    let opts = SuiteOptions::new(Scale::Full);
    println!("acceptance suite (full scale, seed {})", opts.seed);
    let results = run_suite(&opts);
    for r in &results {
        println!("{r}");
    }
    let failed: Vec<&str> = results.iter().filter(|r| !r.passed).map(|r| r.id.as_str()).collect();
    println!(
        "{} passed, {} failed{}",
        results.len() - failed.len(),
        failed.len(),
        if failed.is_empty() {
            String::new()
        } else {
            format!(" ({})", failed.join(", "))
        }
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
