//! Transpose-channel reconstruction of Haar-random pure states.
//!
//! For each state compares `I(C:R|B)` with `S(ρ || T(ρ_BR))` and reports the
//! fraction of samples strictly below the diagonal.
//!
//! Run: cargo run --release --example figure1 -- [samples] [seed] [workers] [out-dir]

use std::path::PathBuf;

use qcmi::experiments::{emit_outputs, figure1_experiment, OutputPaths, RunConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize, default: u64| args.get(i).and_then(|s| s.parse().ok()).unwrap_or(default);
    let cfg = RunConfig {
        n_samples: arg(0, 2000) as usize,
        seed: arg(1, 42),
        workers: arg(2, 4) as usize,
        markov_controls: 10,
        ..RunConfig::default()
    };
    let run = figure1_experiment(&cfg)?;
    let s = &run.summary;
    println!("samples            {}", s.n_samples);
    println!(
        "strict fraction    {:.4} ({} of {})",
        s.strict_fraction, s.strict_count, s.n_samples
    );
    println!("mean CMI           {:.6} bits", s.mean_cmi_bits);
    println!(
        "mean S(rho||T)     {:.6} bits",
        s.mean_relent_transpose_bits
    );
    println!("mean F             {:.6}", s.mean_fidelity_transpose);
    println!("mean -2 log2 F     {:.6} bits", s.mean_shalf_transpose_bits);
    println!(
        "Markov controls    max CMI {:.2e}, max S {:.2e}",
        s.control_max_cmi_bits.unwrap_or(0.0),
        s.control_max_relent_bits.unwrap_or(0.0)
    );
    println!("runtime            {:.2} s", s.runtime_seconds);

    if let Some(dir) = args.get(3).map(PathBuf::from) {
        std::fs::create_dir_all(&dir)?;
        let paths = OutputPaths {
            csv: Some(dir.join("figure1.csv")),
            json: Some(dir.join("figure1.json")),
            svg: Some(dir.join("figure1.svg")),
        };
        emit_outputs(&run.records, &s.to_json(&cfg), false, &paths)?;
        println!("wrote {}", dir.display());
    }
    Ok(())
}
