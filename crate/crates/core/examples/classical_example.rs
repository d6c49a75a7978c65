//! The two-symbol classical distribution where the fidelity bound is loose.
//!
//! `ρ_CR = (1-ε)|00><00| + ε/(d-1) Σ_k |kk><kk|` with an independent `B`.
//! Prints `I(C:R)`, `-2 log2 F(ρ_CR, ρ_C ⊗ ρ_R)` and the `-log2(1-ε)` ceiling as `d` grows.
//!
//! Run: cargo run --release --example classical_example -- [eps]

use qcmi::experiments::classical_example_experiment;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let eps: f64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(0.1);
    println!(
        "{:>6} {:>10} {:>10} {:>12} {:>10} {:>10} {:>8}",
        "d", "I(C:R)", "formula", "-2log2 F", "-2log2 F*", "ceiling", "ratio"
    );
    for d in [2, 4, 8, 16] {
        let r = classical_example_experiment(d, eps)?;
        println!(
            "{d:>6} {:>10.6} {:>10.6} {:>12.6} {:>10.6} {:>10.6} {:>8.3}",
            r.mutual_information_bits,
            r.formula_bits,
            r.fidelity_bound_bits,
            r.optimized_fidelity_bound_bits,
            r.ceiling_bits,
            r.ratio
        );
    }
    Ok(())
}
