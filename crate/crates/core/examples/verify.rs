//! Randomized checks of the entropy inequalities on a small budget.
//!
//! Run: cargo run --release --example verify -- [budget] [seed]

use qcmi::experiments::{inequality_suite, SuiteConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<u64> = std::env::args()
        .skip(1)
        .filter_map(|s| s.parse().ok())
        .collect();
    let cfg = SuiteConfig {
        budget: args.first().copied().unwrap_or(20) as usize,
        seed: args.get(1).copied().unwrap_or(1),
        ..SuiteConfig::default()
    };
    let report = inequality_suite(&cfg)?;
    for c in &report.checks {
        println!(
            "{} {:<24} samples {:>4} violations {:>3} worst slack {:.3e}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.samples,
            c.violations.len(),
            c.worst_slack
        );
    }
    println!("all passed: {}", report.all_passed);
    Ok(())
}
