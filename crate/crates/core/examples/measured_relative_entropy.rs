//! Measured relative entropy between random states.
//!
//! The variational value is bracketed by `-2 log2 F` from below and by the
//! relative entropy from above.
//!
//! Run: cargo run --release --example measured_relative_entropy -- [pairs] [seed]

use qcmi::entropy::{self, MsConfig};
use qcmi::rng::SeededRng;
use qcmi::states::{MultipartiteState, Subsystem};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<u64> = std::env::args()
        .skip(1)
        .filter_map(|s| s.parse().ok())
        .collect();
    let n = args.first().copied().unwrap_or(6);
    let seed = args.get(1).copied().unwrap_or(5);
    let cfg = MsConfig::default();

    println!(
        "{:>4} {:>3} {:>10} {:>10} {:>10} {:>6}",
        "k", "d", "S_1/2", "MS", "D", "steps"
    );
    for k in 0..n {
        let mut rng = SeededRng::stream(seed, k);
        let d = 2 + rng.below(4);
        let layout = [Subsystem::new("X", d)];
        let rho =
            MultipartiteState::random_mixed(&layout, 1 + rng.below(d), &mut rng)?.into_matrix();
        let sigma = MultipartiteState::random_mixed(&layout, d, &mut rng)?.into_matrix();
        let ms = entropy::measured_relative_entropy(&rho, &sigma, &cfg)?;
        println!(
            "{k:>4} {d:>3} {:>10.6} {:>10.6} {:>10.6} {:>6}",
            entropy::renyi_half(&rho, &sigma)?,
            ms.value_bits,
            entropy::relative_entropy(&rho, &sigma)?,
            ms.trace.len()
        );
    }
    Ok(())
}
