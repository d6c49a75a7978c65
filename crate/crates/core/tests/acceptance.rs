//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
//!
//! Run: cargo test --release --test acceptance

use std::f64::consts::{LN_2, PI};
use std::process::{Command, ExitCode};
use std::time::Instant;

use num_complex::Complex64;
use qcmi::channels;
use qcmi::entropy::{self, MsConfig};
use qcmi::experiments::{self, figure1_experiment, RunConfig};
use qcmi::linalg::{self, ComplexMatrix};
use qcmi::markov::{self, MarkovSpec, ObjectiveKind, OptimizerConfig};
use qcmi::rng::SeededRng;
use qcmi::states::{bcr_layout, MultipartiteState, Subsystem};

const FIGURE1_SAMPLES: usize = 10_000;
const FIGURE1_BAND: (f64, f64) = (0.70, 0.76);
const FIGURE1_SEEDS: [u64; 3] = [42, 7, 2024];
const SSA_TOL: f64 = 1e-9;
const MARKOV_CMI_TOL: f64 = 1e-8;
const MARKOV_RECOVERY_TOL: f64 = 1e-7;
const CLASSICAL_TOL: f64 = 1e-9;
const CERTIFICATE_SLACK: f64 = 1e-4;
const CERTIFICATE_FRACTION: f64 = 0.99;
const MS_UPPER_TOL: f64 = 1e-7;
const MS_LOWER_TOL: f64 = 1e-6;
const GRID_TOL: f64 = 1e-6;
const CLASSICAL_EXAMPLE_TOL: f64 = 1e-10;
const CLASSICAL_EXAMPLE_RATIO: f64 = 3.0;

type Outcome = Result<(bool, String), Box<dyn std::error::Error>>;

fn plog2(x: f64) -> f64 {
    if x > 0.0 {
        -x * x.log2()
    } else {
        0.0
    }
}

fn shannon(p: &[f64]) -> f64 {
    p.iter().map(|&x| plog2(x)).sum()
}

fn figure1_fraction() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for seed in FIGURE1_SEEDS {
        let cfg = RunConfig {
            seed,
            n_samples: FIGURE1_SAMPLES,
            ..RunConfig::default()
        };
        let run = figure1_experiment(&cfg)?;
        let f = run.summary.strict_fraction;
        ok &= (FIGURE1_BAND.0..=FIGURE1_BAND.1).contains(&f);
        parts.push(format!(
            "seed {seed}: {f:.4} in {:.2}s",
            run.summary.runtime_seconds
        ));
    }
    Ok((
        ok,
        format!(
            "n={FIGURE1_SAMPLES}, band {FIGURE1_BAND:?}; {}",
            parts.join(", ")
        ),
    ))
}

fn strong_subadditivity() -> Outcome {
    let run = figure1_experiment(&RunConfig {
        seed: 42,
        n_samples: FIGURE1_SAMPLES,
        ..RunConfig::default()
    })?;
    let mut worst = run
        .records
        .iter()
        .map(|r| r.cmi_bits)
        .fold(f64::INFINITY, f64::min);
    let mut violations = run.records.iter().filter(|r| r.cmi_bits < -SSA_TOL).count();
    for k in 0..1000u64 {
        let mut rng = SeededRng::stream(11, k);
        let ancilla = 1 + rng.below(8);
        let s = MultipartiteState::random_mixed(&bcr_layout([2, 2, 2]), ancilla, &mut rng)?;
        let v = entropy::cmi(&s, "C", "R", "B")?;
        worst = worst.min(v);
        violations += usize::from(v < -SSA_TOL);
    }
    Ok((
        violations == 0,
        format!("11000 states, {violations} violations, min CMI {worst:.3e}"),
    ))
}

fn markov_exactness() -> Outcome {
    let mut worst_cmi = 0.0f64;
    let mut worst_td = 0.0f64;
    let mut shapes_seen = std::collections::BTreeSet::new();
    for k in 0..100u64 {
        let mut rng = SeededRng::stream(5, k);
        let d_b = 2 + rng.below(3);
        let (d_c, d_r) = (2 + rng.below(2), 2 + rng.below(2));
        let shapes = markov::random_shapes(d_b, &mut rng);
        shapes_seen.insert(format!("{shapes:?}"));
        let s = markov::markov_state(&MarkovSpec::random(&shapes, d_c, d_r, &mut rng)?)?;
        worst_cmi = worst_cmi.max(entropy::cmi(&s, "C", "R", "B")?.abs());
        let t = channels::transpose_channel(&s.partial_trace(&["B", "C"])?, "B", "C")?;
        let rec = markov::reconstruct(&s, &t)?;
        worst_td = worst_td.max(linalg::trace_distance(s.matrix(), rec.matrix())?);
    }
    Ok((
        worst_cmi < MARKOV_CMI_TOL && worst_td < MARKOV_RECOVERY_TOL,
        format!(
            "100 specs ({} distinct block shapes), max |CMI| {worst_cmi:.2e}, max trace distance {worst_td:.2e}",
            shapes_seen.len()
        ),
    ))
}

fn classical_equality() -> Outcome {
    let mut worst = 0.0f64;
    for k in 0..200u64 {
        let mut rng = SeededRng::stream(17, k);
        let (dc, db, dr) = (2 + rng.below(3), 2 + rng.below(3), 2 + rng.below(3));
        let mut p: Vec<f64> = (0..dc * db * dr)
            .map(|_| {
                if rng.uniform() < 0.2 {
                    0.0
                } else {
                    rng.uniform()
                }
            })
            .collect();
        p[0] += 1e-3;
        let total: f64 = p.iter().sum();
        p.iter_mut().for_each(|x| *x /= total);
        let at = |c: usize, b: usize, r: usize| p[(c * db + b) * dr + r];

        let mut p_cb = vec![0.0; dc * db];
        let mut p_br = vec![0.0; db * dr];
        let mut p_b = vec![0.0; db];
        for c in 0..dc {
            for b in 0..db {
                for r in 0..dr {
                    p_cb[c * db + b] += at(c, b, r);
                    p_br[b * dr + r] += at(c, b, r);
                    p_b[b] += at(c, b, r);
                }
            }
        }
        // entropy form and divergence form, both evaluated directly on the table
        let h_form = shannon(&p_cb) + shannon(&p_br) - shannon(&p) - shannon(&p_b);
        let mut kl = 0.0;
        for c in 0..dc {
            for b in 0..db {
                for r in 0..dr {
                    let x = at(c, b, r);
                    if x > 0.0 {
                        let q = p_cb[c * db + b] * p_br[b * dr + r] / p_b[b];
                        kl += x * (x / q).log2();
                    }
                }
            }
        }
        let s = MultipartiteState::classical(
            &p,
            Subsystem::layout(&[("C", dc), ("B", db), ("R", dr)]),
        )?;
        let cmi = entropy::cmi(&s, "C", "R", "B")?;
        worst = worst.max((cmi - kl).abs()).max((cmi - h_form).abs());
    }
    Ok((
        worst <= CLASSICAL_TOL,
        format!("200 tables, max deviation {worst:.2e} bits"),
    ))
}

fn recovery_certificate() -> Outcome {
    let n = 500u64;
    let mut failures = Vec::new();
    let mut worst = f64::INFINITY;
    for k in 0..n {
        let mut rng = SeededRng::stream(23, k);
        let rho = MultipartiteState::random_pure(&bcr_layout([2, 2, 2]), &mut rng)?;
        let cmi = entropy::cmi(&rho, "C", "R", "B")?;
        let cfg = OptimizerConfig {
            seed: k,
            ..OptimizerConfig::default()
        };
        let res = markov::optimize_recovery(&rho, ObjectiveKind::Fidelity, &cfg)?;
        let bits = entropy::renyi_half_from_fidelity(res.best_value);
        worst = worst.min(cmi + CERTIFICATE_SLACK - bits);
        if bits > cmi + CERTIFICATE_SLACK {
            failures.push(format!(
                "seed 23 stream {k}: -2log2F {bits:.6} > CMI {cmi:.6}"
            ));
        }
    }
    for f in &failures {
        println!("    certificate failure: {f}");
    }
    let passed = (n as usize - failures.len()) as f64 >= CERTIFICATE_FRACTION * n as f64;
    Ok((
        passed,
        format!(
            "{n} states, {} failures, min slack {worst:.3e} bits",
            failures.len()
        ),
    ))
}

fn random_density(
    d: usize,
    rank: usize,
    rng: &mut SeededRng,
) -> qcmi::error::Result<ComplexMatrix> {
    Ok(MultipartiteState::random_mixed(&[Subsystem::new("X", d)], rank, rng)?.into_matrix())
}

fn ae_formula(d: usize, t: f64, beta: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    t * (d as f64).log2() + (-t * t.log2()).min(1.0 / (std::f64::consts::E * LN_2))
        - t * beta.log2() / 2.0
}

fn ordering_panel() -> Outcome {
    let (mut upper, mut lower, mut ae, mut ae_checked) = (0, 0, 0, 0);
    for k in 0..500u64 {
        let mut rng = SeededRng::stream(29, k);
        let d = 2 + rng.below(7);
        let rho = random_density(d, 1 + rng.below(d), &mut rng)?;
        let full = k % 5 != 4;
        let sigma = random_density(d, if full { d } else { 1 + rng.below(d) }, &mut rng)?;
        let s = entropy::relative_entropy(&rho, &sigma)?;
        let half = entropy::renyi_half(&rho, &sigma)?;
        let ms = entropy::measured_relative_entropy(
            &rho,
            &sigma,
            &MsConfig {
                seed: k,
                ..MsConfig::default()
            },
        )?
        .value_bits;
        upper += usize::from(s.is_finite() && ms > s + MS_UPPER_TOL);
        lower += usize::from(half.is_finite() && ms < half - MS_LOWER_TOL);
        if full {
            ae_checked += 1;
            let diff = &rho - &sigma;
            let spec = linalg::eigh(&diff)?;
            let t: f64 = spec.eigenvalues.iter().map(|l| l.abs()).sum();
            let beta = linalg::min_eigenvalue(&sigma)?;
            ae += usize::from(s > ae_formula(d, t, beta));
        }
    }
    Ok((
        upper + lower + ae == 0,
        format!(
            "500 pairs: MS > S+tol {upper}, MS < S_1/2-tol {lower}, S > AE bound {ae} of {ae_checked}"
        ),
    ))
}

/// Largest classical relative entropy over a 20 x 36 grid of projective qubit measurements.
fn grid_oracle(rho: &ComplexMatrix, sigma: &ComplexMatrix) -> f64 {
    let mut best = 0.0f64;
    for i in 0..20 {
        let theta = PI * (i as f64 + 0.5) / 20.0;
        for j in 0..36 {
            let phi = 2.0 * PI * j as f64 / 36.0;
            let n = [
                theta.sin() * phi.cos(),
                theta.sin() * phi.sin(),
                theta.cos(),
            ];
            let mut kl = 0.0;
            for sign in [1.0, -1.0] {
                let proj = ComplexMatrix::from_row_slice(
                    2,
                    2,
                    &[
                        Complex64::new(0.5 * (1.0 + sign * n[2]), 0.0),
                        Complex64::new(0.5 * sign * n[0], -0.5 * sign * n[1]),
                        Complex64::new(0.5 * sign * n[0], 0.5 * sign * n[1]),
                        Complex64::new(0.5 * (1.0 - sign * n[2]), 0.0),
                    ],
                );
                let p = (rho * &proj).trace().re;
                let q = (sigma * &proj).trace().re;
                if p > 0.0 {
                    kl += p * (p / q).log2();
                }
            }
            best = best.max(kl);
        }
    }
    best
}

fn measured_re_grid() -> Outcome {
    let (mut below_grid, mut above_s) = (0, 0);
    let mut min_margin = f64::INFINITY;
    for k in 0..100u64 {
        let mut rng = SeededRng::stream(31, k);
        let rho = random_density(2, 1 + rng.below(2), &mut rng)?;
        let sigma = random_density(2, 2, &mut rng)?;
        let ms = entropy::measured_relative_entropy(
            &rho,
            &sigma,
            &MsConfig {
                seed: k,
                ..MsConfig::default()
            },
        )?
        .value_bits;
        let grid = grid_oracle(&rho, &sigma);
        let s = entropy::relative_entropy(&rho, &sigma)?;
        min_margin = min_margin.min(ms - grid);
        below_grid += usize::from(ms < grid - GRID_TOL);
        above_s += usize::from(ms > s + MS_UPPER_TOL);
    }
    Ok((
        below_grid + above_s == 0,
        format!("100 qubit pairs: MS < grid-tol {below_grid}, MS > S+tol {above_s}, min MS-grid {min_margin:.3e}"),
    ))
}

fn classical_example_gap() -> Outcome {
    let (d, eps) = (16usize, 0.1f64);
    let r = experiments::classical_example_experiment(d, eps)?;
    let formula = plog2(eps) + plog2(1.0 - eps) + eps * 15f64.log2();
    let mi_ok = (r.mutual_information_bits - formula).abs() <= CLASSICAL_EXAMPLE_TOL;

    // -2 log2 F(rho_CR, rho_C ⊗ rho_R) for the diagonal pair, from the distributions directly
    let p: Vec<f64> = (0..d)
        .map(|k| if k == 0 { 1.0 - eps } else { eps / 15.0 })
        .collect();
    let f: f64 = p.iter().map(|&x| (x * x * x).sqrt()).sum();
    let fr_oracle = -2.0 * f.log2();
    let fr_matches = (r.fidelity_bound_bits - fr_oracle).abs() <= 1e-9;
    let ceiling = -2.0 * (1.0 - eps).log2();
    let fr_ok = r.fidelity_bound_bits <= ceiling;
    let ratio = r.mutual_information_bits / -(1.0 - eps).log2();
    let ratio_ok = ratio > CLASSICAL_EXAMPLE_RATIO;

    println!(
        "    I(C:R) {:.12} vs formula {formula:.12}: {}",
        r.mutual_information_bits,
        verdict(mi_ok)
    );
    println!(
        "    -2log2 F(rho_CR, rho_C x rho_R) {:.6} (direct {fr_oracle:.6}) <= -2log2(1-eps) {ceiling:.6}: {}",
        r.fidelity_bound_bits,
        verdict(fr_ok && fr_matches)
    );
    println!(
        "    (with sigma_C optimized: {:.6} <= {ceiling:.6})",
        r.optimized_fidelity_bound_bits
    );
    println!(
        "    ratio I(C:R) / -log2(1-eps) = {ratio:.4} > {CLASSICAL_EXAMPLE_RATIO}: {}",
        verdict(ratio_ok)
    );
    Ok((
        mi_ok && fr_ok && fr_matches && ratio_ok,
        format!("d={d}, eps={eps}"),
    ))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir()?;
    let mut outputs = Vec::new();
    for workers in [1, 8] {
        let path = dir.path().join(format!("w{workers}.csv"));
        let status = Command::new(env!("CARGO_BIN_EXE_qcmi"))
            .args([
                "figure1",
                "--seed",
                "42",
                "--samples",
                "1000",
                "--workers",
                &workers.to_string(),
            ])
            .arg("--out-csv")
            .arg(&path)
            .output()?;
        if !status.status.success() {
            return Ok((false, format!("qcmi exited with {}", status.status)));
        }
        outputs.push(std::fs::read(&path)?);
    }
    let same = outputs[0] == outputs[1];
    let rows = outputs[0].iter().filter(|&&b| b == b'\n').count() - 1;
    Ok((
        same && rows == 1000,
        format!("{rows} rows, byte-identical: {same}"),
    ))
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("figure1_strict_fraction", figure1_fraction),
        ("strong_subadditivity", strong_subadditivity),
        ("markov_recovery_exactness", markov_exactness),
        ("classical_equality", classical_equality),
        ("recovery_certificate", recovery_certificate),
        ("ordering_panel", ordering_panel),
        ("measured_re_grid_oracle", measured_re_grid),
        ("classical_example_gap", classical_example_gap),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let t0 = Instant::now();
        let (ok, detail) = match run() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!ok);
        println!(
            "ACCEPTANCE {:<28} {} ({:.1}s) {detail}",
            name,
            verdict(ok),
            t0.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} of 9 criteria passed", 9 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
