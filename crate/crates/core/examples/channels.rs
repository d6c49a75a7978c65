//! Channel representations: Choi matrix, Kraus operators and Stinespring isometry.
//!
//! Builds the transpose channel of a random `ρ_BC`, converts it between the three
//! forms, and composes it with a depolarizing channel.
//!
//! Run: cargo run --release --example channels -- [seed]

use qcmi::channels::{self, stinespring_to_channel, transpose_channel};
use qcmi::linalg;
use qcmi::rng::SeededRng;
use qcmi::states::{MultipartiteState, Subsystem};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed: u64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(3);
    let mut rng = SeededRng::new(seed);

    let bc =
        MultipartiteState::random_mixed(&Subsystem::layout(&[("B", 2), ("C", 2)]), 3, &mut rng)?;
    let t = transpose_channel(&bc, "B", "C")?;
    let (tp, cp) = t.cptp_defects()?;
    println!("transpose channel B -> BC: trace-preservation defect {tp:.1e}, min Choi eigenvalue {cp:.1e}");

    let out = t.apply_matrix(bc.partial_trace(&["B"])?.matrix())?;
    println!(
        "|T(rho_B) - rho_BC|_max = {:.1e}",
        linalg::max_abs(&(out - bc.matrix()))
    );

    let kraus = t.kraus()?;
    println!("Kraus rank {}", kraus.len());
    let d_env = kraus.len();
    let v = t.to_isometry(d_env)?;
    let back = stinespring_to_channel(&v, t.input().to_vec(), t.output().to_vec(), d_env)?;
    println!(
        "Stinespring round trip: isometry defect {:.1e}, Choi difference {:.1e}",
        channels::isometry_defect(v.matrix()),
        linalg::max_abs(&(back.choi() - t.choi()))
    );

    let noisy = channels::mix(
        &channels::identity(t.output().to_vec()),
        &channels::depolarizing(t.output().to_vec(), t.output().to_vec()),
        0.9,
    )?;
    let composed = t.then(&noisy)?;
    println!(
        "transpose channel followed by 10% depolarizing noise is CPTP: {}",
        composed.is_cptp()
    );
    Ok(())
}
