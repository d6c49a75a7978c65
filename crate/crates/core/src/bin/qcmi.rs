//! Command-line front end.
//!
//! Exit status: 0 when every check passes, 1 on an invariant violation, 2 on a usage error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use qcmi::channels;
use qcmi::entropy::{self, EntropyReport, MsConfig};
use qcmi::error::Error;
use qcmi::experiments::{
    self, emit_outputs, figure1_experiment, inequality_suite, Mutation, OutputPaths, RunConfig,
    SampleSource, SuiteConfig,
};
use qcmi::markov::{self, ObjectiveKind, OptimizerConfig};
use qcmi::states::MultipartiteState;

#[derive(Parser)]
#[command(
    name = "qcmi",
    version,
    about = "Conditional mutual information and state reconstruction"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Transpose-channel reconstruction of Haar-random pure states.
    Figure1(Figure1Args),
    /// Report for the classical example state.
    ClassicalExample(ClassicalArgs),
    /// Inequality verification suite.
    Verify(VerifyArgs),
    /// Transpose-channel report for a single state file.
    Recover(StateArgs),
    /// Optimized reconstruction channel for a single state file.
    Optimize(OptimizeArgs),
}

#[derive(Args)]
struct Common {
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, value_parser = parse_dims, default_value = "2,2,2")]
    dims: [usize; 3],
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long)]
    out_json: Option<PathBuf>,
}

#[derive(Args)]
struct Figure1Args {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    /// Also compute the measured relative entropy column.
    #[arg(long)]
    measured_re: bool,
    /// Random Markov states evaluated as controls.
    #[arg(long, default_value_t = 0)]
    markov_controls: usize,
    #[arg(long)]
    out_csv: Option<PathBuf>,
    #[arg(long)]
    out_svg: Option<PathBuf>,
}

#[derive(Args)]
struct ClassicalArgs {
    #[arg(long, default_value_t = 16)]
    d: usize,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    #[arg(long)]
    out_json: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    /// Samples per check.
    #[arg(long, default_value_t = 200)]
    samples: usize,
    /// State source for the tripartite checks: `haar` or `markov`.
    #[arg(long, default_value = "haar", value_parser = parse_source)]
    source: SampleSource,
    /// Deliberate defect for checking that the suite notices: `mixed-log-base`.
    #[arg(long, value_parser = parse_mutation)]
    mutation: Option<Mutation>,
}

#[derive(Args)]
struct StateArgs {
    /// JSON state file with subsystems labelled B, C and R.
    #[arg(long)]
    state: PathBuf,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    out_json: Option<PathBuf>,
}

#[derive(Args)]
struct OptimizeArgs {
    #[command(flatten)]
    state: StateArgs,
    /// `fidelity`, `renyi-half` or `measured-re`.
    #[arg(long, default_value = "fidelity")]
    objective: ObjectiveKind,
    /// Override the number of starts.
    #[arg(long)]
    restarts: Option<usize>,
    /// Override the environment dimension of the Stinespring isometry.
    #[arg(long)]
    env_dim: Option<usize>,
}

fn parse_dims(s: &str) -> Result<[usize; 3], String> {
    let v: Vec<usize> = s
        .split(',')
        .map(|x| x.trim().parse::<usize>().map_err(|e| format!("`{x}`: {e}")))
        .collect::<Result<_, _>>()?;
    <[usize; 3]>::try_from(v).map_err(|v| format!("expected three dimensions, got {}", v.len()))
}

fn parse_mutation(s: &str) -> Result<Mutation, String> {
    match s {
        "mixed-log-base" => Ok(Mutation::MixedLogBase),
        other => Err(format!("unknown mutation `{other}`")),
    }
}

fn parse_source(s: &str) -> Result<SampleSource, String> {
    match s {
        "haar" => Ok(SampleSource::Haar),
        "markov" => Ok(SampleSource::Markov),
        other => Err(format!("unknown source `{other}` (haar or markov)")),
    }
}

/// A failed run: usage problems exit 2, violated invariants exit 1.
enum Failure {
    Usage(Error),
    Violation(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Usage(e)
    }
}

type Outcome = Result<(), Failure>;

fn write_json(path: &Option<PathBuf>, value: &serde_json::Value) -> Outcome {
    if let Some(p) = path {
        experiments::write_json(p, value)?;
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn figure1(a: Figure1Args) -> Outcome {
    let cfg = RunConfig {
        seed: a.common.seed,
        n_samples: a.samples,
        dims: a.common.dims,
        workers: a.common.workers,
        measured_re: a.measured_re,
        markov_controls: a.markov_controls,
        out_csv: a.out_csv,
        out_json: a.common.out_json,
        out_svg: a.out_svg,
    };
    let run = figure1_experiment(&cfg)?;
    let s = &run.summary;
    println!("samples          {}", s.n_samples);
    println!(
        "strict fraction  {:.4} ({} of {})",
        s.strict_fraction, s.strict_count, s.n_samples
    );
    println!("mean CMI         {:.6} bits", s.mean_cmi_bits);
    println!(
        "mean S(rho||T)   {:.6} bits ({} infinite)",
        s.mean_relent_transpose_bits, s.n_infinite_relent
    );
    println!("mean F           {:.6}", s.mean_fidelity_transpose);
    println!("runtime          {:.2} s", s.runtime_seconds);
    emit_outputs(
        &run.records,
        &s.to_json(&cfg),
        cfg.measured_re,
        &OutputPaths::from(&cfg),
    )?;

    let bad: Vec<String> = run
        .records
        .iter()
        .filter(|r| r.cmi_bits < -1e-9 || !(0.0..=1.0).contains(&r.fidelity_transpose))
        .map(|r| {
            format!(
                "sample {}: CMI {:e}, F {}",
                r.sample_id, r.cmi_bits, r.fidelity_transpose
            )
        })
        .chain(
            run.controls
                .iter()
                .filter(|r| r.cmi_bits >= 1e-8 || !(r.relent_transpose_bits < 1e-7))
                .map(|r| {
                    format!(
                        "Markov control {}: CMI {:e}, S {:e}",
                        r.sample_id, r.cmi_bits, r.relent_transpose_bits
                    )
                }),
        )
        .collect();
    if bad.is_empty() {
        Ok(())
    } else {
        Err(Failure::Violation(bad.join("\n")))
    }
}

fn classical_example(a: ClassicalArgs) -> Outcome {
    let r = experiments::classical_example_experiment(a.d, a.eps)?;
    println!("d = {}, eps = {}", r.d, r.eps);
    println!(
        "I(C:R)                         {:.10} bits ({:.10} nats)",
        r.mutual_information_bits, r.mutual_information_nats
    );
    println!("h2(eps) + eps log2(d-1)        {:.10} bits", r.formula_bits);
    println!(
        "MS with attach-rho_C channel   {:.10} bits",
        r.measured_re_attach_bits
    );
    println!(
        "-2 log2 F(rho_CR, rho_C rho_R) {:.10} bits ({:.10} nats)",
        r.fidelity_bound_bits, r.fidelity_bound_nats
    );
    println!(
        "  optimized over sigma_C       {:.10} bits",
        r.optimized_fidelity_bound_bits
    );
    println!(
        "-log2(1-eps)                   {:.10} bits ({:.10} nats)",
        r.ceiling_bits, r.ceiling_nats
    );
    println!(
        "-2 log2(1-eps)                 {:.10} bits",
        r.doubled_ceiling_bits
    );
    println!("ratio I(C:R) / -log2(1-eps)    {:.6}", r.ratio);
    println!(
        "fidelity bound within -2 log2(1-eps): {}",
        r.fidelity_bound_within_ceiling
    );
    write_json(&a.out_json, &serde_json::to_value(&r).expect("plain data"))?;
    if (r.mutual_information_bits - r.formula_bits).abs() > 1e-10 || r.cmi_bits < -1e-9 {
        return Err(Failure::Violation(format!(
            "I(C:R) = {} disagrees with the closed form {}",
            r.mutual_information_bits, r.formula_bits
        )));
    }
    Ok(())
}

fn verify(a: VerifyArgs) -> Outcome {
    let cfg = SuiteConfig {
        seed: a.common.seed,
        budget: a.samples,
        dims: a.common.dims,
        workers: a.common.workers,
        source: a.source,
        mutation: a.mutation,
        ..SuiteConfig::default()
    };
    let report = inequality_suite(&cfg)?;
    for c in &report.checks {
        println!(
            "{} {:<22} samples {:>5}  violations {:>4}  worst slack {:+.3e}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.samples,
            c.violations.len(),
            c.worst_slack
        );
        for v in c.violations.iter().take(10) {
            println!("     seed {} sample {}: {}", v.seed, v.sample, v.detail);
        }
    }
    write_json(
        &a.common.out_json,
        &serde_json::to_value(&report).expect("plain data"),
    )?;
    if report.all_passed {
        Ok(())
    } else {
        Err(Failure::Violation("verification suite failed".into()))
    }
}

fn load_bcr(path: &PathBuf) -> Result<MultipartiteState, Failure> {
    let s = MultipartiteState::load(path)?;
    let mut labels = s.labels();
    labels.sort_unstable();
    if labels != ["B", "C", "R"] {
        return Err(Failure::Usage(Error::InvalidArgument(format!(
            "{}: expected subsystems B, C and R",
            path.display()
        ))));
    }
    Ok(s)
}

fn check_report(r: &EntropyReport) -> Outcome {
    let mut bad = Vec::new();
    if r.cmi_bits < -1e-9 {
        bad.push(format!("CMI {:e} is negative", r.cmi_bits));
    }
    if r.rel_ent_bits.is_finite() && r.measured_re_bits > r.rel_ent_bits + 1e-7 {
        bad.push(format!(
            "MS {} exceeds S {}",
            r.measured_re_bits, r.rel_ent_bits
        ));
    }
    if r.renyi_half_bits.is_finite() && r.measured_re_bits < r.renyi_half_bits - 1e-6 {
        bad.push(format!(
            "MS {} below -2 log2 F {}",
            r.measured_re_bits, r.renyi_half_bits
        ));
    }
    if bad.is_empty() {
        Ok(())
    } else {
        Err(Failure::Violation(bad.join("\n")))
    }
}

fn print_report(r: &EntropyReport) {
    println!("I(C:R|B)         {:.10} bits", r.cmi_bits);
    println!("S(rho||sigma)    {:.10} bits", r.rel_ent_bits);
    println!("MS(rho||sigma)   {:.10} bits", r.measured_re_bits);
    println!("-2 log2 F        {:.10} bits", r.renyi_half_bits);
    println!("F                {:.10}", r.fidelity);
}

fn recover(a: StateArgs) -> Outcome {
    let rho = load_bcr(&a.state)?;
    let t = channels::transpose_channel(&rho.partial_trace(&["B", "C"])?, "B", "C")?;
    let sigma = markov::reconstruct(&rho, &t)?;
    let ms = MsConfig {
        seed: a.seed,
        ..MsConfig::default()
    };
    let report = EntropyReport::evaluate(&rho, &sigma, &ms)?;
    println!("transpose channel reconstruction of {}", a.state.display());
    print_report(&report);
    write_json(
        &a.out_json,
        &serde_json::to_value(&report).expect("plain data"),
    )?;
    check_report(&report)
}

fn optimize(a: OptimizeArgs) -> Outcome {
    let rho = load_bcr(&a.state.state)?;
    let mut cfg = OptimizerConfig::for_objective(a.objective);
    cfg.seed = a.state.seed;
    cfg.env_dim = a.env_dim;
    if let Some(r) = a.restarts {
        cfg.restarts = r;
    }
    let res = markov::optimize_recovery(&rho, a.objective, &cfg)?;
    let sigma = markov::reconstruct(&rho, &res.best_channel)?;
    let report = EntropyReport::evaluate(
        &rho,
        &sigma,
        &MsConfig {
            seed: a.state.seed,
            ..MsConfig::default()
        },
    )?;
    println!("objective        {:?}", res.objective_kind);
    println!("best value       {:.10}", res.best_value);
    println!("transpose value  {:.10}", res.baseline_value);
    println!(
        "starts used      {} (converged: {})",
        res.restarts_used, res.converged
    );
    print_report(&report);
    write_json(
        &a.state.out_json,
        &json!({ "result": res, "report": report }),
    )?;
    check_report(&report)?;
    let value_ok = match a.objective {
        ObjectiveKind::Fidelity => res.best_value >= res.baseline_value - 1e-9,
        _ => res.best_value <= res.baseline_value + 1e-9,
    };
    let cmi = entropy::cmi(&rho, "C", "R", "B")?;
    if !value_ok {
        return Err(Failure::Violation(
            "optimized value is worse than the transpose channel".into(),
        ));
    }
    if a.objective != ObjectiveKind::MeasuredRe && report.renyi_half_bits > cmi + 1e-4 {
        println!("note: -2 log2 F exceeds I(C:R|B) + 1e-4; try --restarts or --env-dim");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Figure1(a) => figure1(a),
        Command::ClassicalExample(a) => classical_example(a),
        Command::Verify(a) => verify(a),
        Command::Recover(a) => recover(a),
        Command::Optimize(a) => optimize(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Violation(msg)) => {
            eprintln!("invariant violation:\n{msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
