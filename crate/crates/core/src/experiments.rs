//! Experiment drivers: the transpose-channel Monte Carlo, the classical example,
//! the inequality verification suite, and CSV/JSON/SVG emission.
//!
//! Every sample `k` draws from its own stream `SeededRng::stream(seed, k)`, so
//! results do not depend on how samples are spread over worker threads.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::channels;
use crate::entropy::{self, MsConfig};
use crate::error::{Error, Result};
use crate::linalg;
use crate::markov::{self, MarkovSpec, ObjectiveKind, OptimizerConfig};
use crate::rng::SeededRng;
use crate::states::{bcr_layout, MultipartiteState, Subsystem};

/// A sample is strict when its reconstructed relative entropy is below its CMI by more than this.
pub const STRICT_TOL: f64 = 1e-9;

/// Stream seed offset for Markov control samples, kept apart from the Haar samples.
const CONTROL_SEED_TAG: u64 = 0x4d41_524b_4f56;

pub const CSV_HEADER: [&str; 6] = [
    "sample_id",
    "cmi_bits",
    "relent_transpose_bits",
    "fidelity_transpose",
    "shalf_transpose_bits",
    "strict",
];
pub const CSV_MS_COLUMN: &str = "measured_re_transpose_bits";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub seed: u64,
    pub n_samples: usize,
    pub dims: [usize; 3],
    pub workers: usize,
    /// Adds the `measured_re_transpose_bits` column.
    pub measured_re: bool,
    /// Markov states evaluated alongside the Haar samples (reported in the summary only).
    pub markov_controls: usize,
    pub out_csv: Option<PathBuf>,
    pub out_json: Option<PathBuf>,
    pub out_svg: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            n_samples: 10_000,
            dims: [2, 2, 2],
            workers: 1,
            measured_re: false,
            markov_controls: 0,
            out_csv: None,
            out_json: None,
            out_svg: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::InvalidArgument("need at least one sample".into()));
        }
        if self.dims.iter().any(|&d| d < 2) {
            return Err(Error::InvalidArgument(format!(
                "every dimension must be at least 2, got {:?}",
                self.dims
            )));
        }
        if self.workers == 0 {
            return Err(Error::InvalidArgument("need at least one worker".into()));
        }
        Ok(())
    }
}

/// One point of the CMI vs reconstructed-relative-entropy scatter.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    pub sample_id: u64,
    pub cmi_bits: f64,
    /// `+inf` when the state is not supported on its reconstruction.
    pub relent_transpose_bits: f64,
    pub fidelity_transpose: f64,
    pub shalf_transpose_bits: f64,
    pub measured_re_transpose_bits: Option<f64>,
    pub strict: bool,
}

/// Evaluates the transpose-channel reconstruction of one `(B, C, R)` state.
pub fn evaluate_record(
    sample_id: u64,
    rho: &MultipartiteState,
    ms: Option<&MsConfig>,
) -> Result<ExperimentRecord> {
    let bc = rho.partial_trace(&["B", "C"])?;
    let t = channels::transpose_channel(&bc, "B", "C")?;
    let sigma = markov::reconstruct(rho, &t)?;
    let cmi_bits = entropy::cmi(rho, "C", "R", "B")?;
    let relent = entropy::relative_entropy(rho.matrix(), sigma.matrix())?;
    let fid = entropy::fidelity(rho.matrix(), sigma.matrix())?;
    let measured = match ms {
        Some(cfg) => {
            let cfg = MsConfig {
                seed: cfg.seed ^ sample_id,
                ..cfg.clone()
            };
            Some(entropy::measured_relative_entropy(rho.matrix(), sigma.matrix(), &cfg)?.value_bits)
        }
        None => None,
    };
    Ok(ExperimentRecord {
        sample_id,
        cmi_bits,
        relent_transpose_bits: relent,
        fidelity_transpose: fid,
        shalf_transpose_bits: entropy::renyi_half_from_fidelity(fid),
        measured_re_transpose_bits: measured,
        strict: relent < cmi_bits - STRICT_TOL,
    })
}

/// The Haar-random pure state for sample `id`.
pub fn sample_state(seed: u64, id: u64, dims: [usize; 3]) -> Result<MultipartiteState> {
    let mut rng = SeededRng::stream(seed, id);
    MultipartiteState::random_pure(&bcr_layout(dims), &mut rng)
}

/// A random Markov state with `B` of dimension `dims[0]`.
pub fn markov_sample(seed: u64, id: u64, dims: [usize; 3]) -> Result<MultipartiteState> {
    let mut rng = SeededRng::stream(seed ^ CONTROL_SEED_TAG, id);
    let shapes = markov::random_shapes(dims[0], &mut rng);
    let spec = MarkovSpec::random(&shapes, dims[1], dims[2], &mut rng)?;
    markov::markov_state(&spec)
}

pub(crate) fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))
}

/// Sample-parallel map over `0..n`, results in index order.
pub(crate) fn par_map<T, F>(workers: usize, n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync,
{
    pool(workers)?.install(|| (0..n as u64).into_par_iter().map(&f).collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub seed: u64,
    pub n_samples: usize,
    pub dims: [usize; 3],
    pub workers: usize,
    pub strict_count: usize,
    pub strict_fraction: f64,
    pub mean_cmi_bits: f64,
    /// Mean over finite values; `n_infinite_relent` counts the rest.
    pub mean_relent_transpose_bits: f64,
    pub n_infinite_relent: usize,
    pub mean_fidelity_transpose: f64,
    pub mean_shalf_transpose_bits: f64,
    pub mean_measured_re_transpose_bits: Option<f64>,
    pub min_cmi_bits: f64,
    pub markov_controls: usize,
    pub control_max_cmi_bits: Option<f64>,
    pub control_max_relent_bits: Option<f64>,
    pub runtime_seconds: f64,
}

impl Summary {
    pub fn from_records(
        cfg: &RunConfig,
        records: &[ExperimentRecord],
        controls: &[ExperimentRecord],
        runtime_seconds: f64,
    ) -> Self {
        let n = records.len();
        let mean = |xs: &mut dyn Iterator<Item = f64>| {
            let (s, k) = xs.fold((0.0, 0usize), |(s, k), x| (s + x, k + 1));
            if k == 0 {
                f64::NAN
            } else {
                s / k as f64
            }
        };
        let strict_count = records.iter().filter(|r| r.strict).count();
        let finite = records
            .iter()
            .filter(|r| r.relent_transpose_bits.is_finite());
        let max_of = |f: fn(&ExperimentRecord) -> f64| {
            controls
                .iter()
                .map(f)
                .fold(None, |m: Option<f64>, x| Some(m.map_or(x, |m| m.max(x))))
        };
        Self {
            seed: cfg.seed,
            n_samples: n,
            dims: cfg.dims,
            workers: cfg.workers,
            strict_count,
            strict_fraction: if n == 0 {
                0.0
            } else {
                strict_count as f64 / n as f64
            },
            mean_cmi_bits: mean(&mut records.iter().map(|r| r.cmi_bits)),
            mean_relent_transpose_bits: mean(&mut finite.clone().map(|r| r.relent_transpose_bits)),
            n_infinite_relent: n - finite.count(),
            mean_fidelity_transpose: mean(&mut records.iter().map(|r| r.fidelity_transpose)),
            mean_shalf_transpose_bits: mean(
                &mut records
                    .iter()
                    .map(|r| r.shalf_transpose_bits)
                    .filter(|x| x.is_finite()),
            ),
            mean_measured_re_transpose_bits: if cfg.measured_re {
                Some(mean(
                    &mut records.iter().filter_map(|r| r.measured_re_transpose_bits),
                ))
            } else {
                None
            },
            min_cmi_bits: records
                .iter()
                .map(|r| r.cmi_bits)
                .fold(f64::INFINITY, f64::min),
            markov_controls: controls.len(),
            control_max_cmi_bits: max_of(|r| r.cmi_bits),
            control_max_relent_bits: max_of(|r| r.relent_transpose_bits),
            runtime_seconds,
        }
    }

    /// JSON with a config echo; non-finite numbers become `null` plus an `_infinite` flag.
    pub fn to_json(&self, cfg: &RunConfig) -> Value {
        let mut v = serde_json::to_value(self).expect("summary fields are plain data");
        if let Value::Object(map) = &mut v {
            for (key, x) in [
                ("mean_cmi_bits", self.mean_cmi_bits),
                (
                    "mean_relent_transpose_bits",
                    self.mean_relent_transpose_bits,
                ),
                ("mean_shalf_transpose_bits", self.mean_shalf_transpose_bits),
                ("min_cmi_bits", self.min_cmi_bits),
            ] {
                let (num, inf) = json_number(x);
                map.insert(key.into(), num);
                map.insert(format!("{key}_infinite"), Value::Bool(inf));
            }
            if let Some(x) = self.control_max_relent_bits {
                let (num, inf) = json_number(x);
                map.insert("control_max_relent_bits".into(), num);
                map.insert("control_max_relent_bits_infinite".into(), Value::Bool(inf));
            }
            map.insert(
                "config".into(),
                json!({
                    "seed": cfg.seed,
                    "n_samples": cfg.n_samples,
                    "dims": cfg.dims,
                    "workers": cfg.workers,
                    "measured_re": cfg.measured_re,
                    "markov_controls": cfg.markov_controls,
                    "strict_tolerance_bits": STRICT_TOL,
                }),
            );
        }
        v
    }
}

/// Finite numbers pass through; anything else becomes `null` with the flag set
/// (`true` for `±inf`, `false` for NaN, which only arises from empty means).
pub fn json_number(x: f64) -> (Value, bool) {
    if x.is_finite() {
        (json!(x), false)
    } else {
        (Value::Null, x.is_infinite())
    }
}

#[derive(Debug, Clone)]
pub struct Figure1Run {
    pub records: Vec<ExperimentRecord>,
    pub controls: Vec<ExperimentRecord>,
    pub summary: Summary,
}

/// Haar-random pure states, each reconstructed from `ρ_BR` by the transpose channel of `ρ_BC`.
pub fn figure1_experiment(cfg: &RunConfig) -> Result<Figure1Run> {
    cfg.validate()?;
    let start = Instant::now();
    let ms = cfg.measured_re.then(MsConfig::default);
    let mut records = par_map(cfg.workers, cfg.n_samples, |id| {
        evaluate_record(id, &sample_state(cfg.seed, id, cfg.dims)?, ms.as_ref())
    })?;
    records.sort_by_key(|r| r.sample_id);
    let n = cfg.n_samples as u64;
    let mut controls = par_map(cfg.workers, cfg.markov_controls, |k| {
        evaluate_record(n + k, &markov_sample(cfg.seed, k, cfg.dims)?, ms.as_ref())
    })?;
    controls.sort_by_key(|r| r.sample_id);
    let summary = Summary::from_records(cfg, &records, &controls, start.elapsed().as_secs_f64());
    Ok(Figure1Run {
        records,
        controls,
        summary,
    })
}

// ---------------------------------------------------------------------------
// emission

fn fmt_f64(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x:?}")
    }
}

fn io_err(path: &Path, what: &str) -> impl FnOnce(std::io::Error) -> Error {
    let context = format!("{what} {}", path.display());
    move |source| Error::Io { context, source }
}

fn csv_err(path: &Path, what: &str) -> impl FnOnce(csv::Error) -> Error {
    let context = format!("{what} {}", path.display());
    move |source| Error::Csv { context, source }
}

/// CSV bytes for `records`; floats use the shortest round-trip form and `inf` for infinity.
pub fn csv_bytes(records: &[ExperimentRecord], with_measured_re: bool) -> Result<Vec<u8>> {
    let ctx = || "serializing records".to_string();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<&str> = CSV_HEADER.to_vec();
    if with_measured_re {
        header.push(CSV_MS_COLUMN);
    }
    w.write_record(&header).map_err(|source| Error::Csv {
        context: ctx(),
        source,
    })?;
    for r in records {
        let mut row = vec![
            r.sample_id.to_string(),
            fmt_f64(r.cmi_bits),
            fmt_f64(r.relent_transpose_bits),
            fmt_f64(r.fidelity_transpose),
            fmt_f64(r.shalf_transpose_bits),
            r.strict.to_string(),
        ];
        if with_measured_re {
            row.push(r.measured_re_transpose_bits.map_or(String::new(), fmt_f64));
        }
        w.write_record(&row).map_err(|source| Error::Csv {
            context: ctx(),
            source,
        })?;
    }
    w.into_inner().map_err(|e| Error::Io {
        context: ctx(),
        source: e.into_error(),
    })
}

pub fn write_csv(path: &Path, records: &[ExperimentRecord], with_measured_re: bool) -> Result<()> {
    fs::write(path, csv_bytes(records, with_measured_re)?).map_err(io_err(path, "writing"))
}

/// Parses a file written by [`write_csv`].
pub fn read_csv(path: &Path) -> Result<Vec<ExperimentRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path, "opening"))?;
    let header = r
        .headers()
        .map_err(csv_err(path, "reading header of"))?
        .clone();
    let with_ms = header.len() == CSV_HEADER.len() + 1;
    if header.iter().take(CSV_HEADER.len()).ne(CSV_HEADER) {
        return Err(Error::InvalidArgument(format!(
            "{}: unexpected header",
            path.display()
        )));
    }
    let bad = |row: usize, col: &str| {
        Error::InvalidArgument(format!("{}: row {row}: bad `{col}`", path.display()))
    };
    let mut out = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err(path, "reading"))?;
        let num = |i: usize| -> Result<f64> {
            rec.get(i)
                .and_then(|s| s.parse::<f64>().ok())
                .ok_or_else(|| bad(row, header.get(i).unwrap_or("?")))
        };
        out.push(ExperimentRecord {
            sample_id: rec
                .get(0)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad(row, "sample_id"))?,
            cmi_bits: num(1)?,
            relent_transpose_bits: num(2)?,
            fidelity_transpose: num(3)?,
            shalf_transpose_bits: num(4)?,
            strict: rec
                .get(5)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad(row, "strict"))?,
            measured_re_transpose_bits: if with_ms && !rec.get(6).unwrap_or("").is_empty() {
                Some(num(6)?)
            } else {
                None
            },
        });
    }
    Ok(out)
}

pub fn write_json(path: &Path, value: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|source| Error::Json {
        context: format!("serializing {}", path.display()),
        source,
    })?;
    fs::write(path, text + "\n").map_err(io_err(path, "writing"))
}

/// Scatter of `(cmi_bits, relent_transpose_bits)` with the `y = x` diagonal.
///
/// One `<circle class="point">` per record; infinite values are pinned to the top edge.
pub fn svg_scatter(records: &[ExperimentRecord]) -> String {
    let (w, h, m) = (480.0, 480.0, 48.0);
    let finite_max = records
        .iter()
        .flat_map(|r| [r.cmi_bits, r.relent_transpose_bits])
        .filter(|x| x.is_finite())
        .fold(0.0f64, f64::max);
    let top = if finite_max > 0.0 {
        finite_max * 1.05
    } else {
        1.0
    };
    let sx = |x: f64| m + (x.max(0.0) / top).min(1.0) * (w - 2.0 * m);
    let sy = |y: f64| h - m - (y.max(0.0) / top).min(1.0) * (h - 2.0 * m);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<path class="axes" d="M{m} {m} V{} H{}" fill="none" stroke="black"/>"#,
        h - m,
        w - m
    );
    let _ = writeln!(
        s,
        r#"<line class="diagonal" x1="{}" y1="{}" x2="{}" y2="{}" stroke="gray" stroke-dasharray="4 4"/>"#,
        sx(0.0),
        sy(0.0),
        sx(top),
        sy(top)
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">I(C:R|B) [bits] (max {top:.3})</text>"#,
        w / 2.0,
        h - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" text-anchor="middle" font-size="12" transform="rotate(-90 14 {})">S(rho || T(rho_BR)) [bits]</text>"#,
        h / 2.0,
        h / 2.0
    );
    let _ = writeln!(s, r#"<g fill="steelblue" fill-opacity="0.5">"#);
    for r in records {
        let y = if r.relent_transpose_bits.is_finite() {
            r.relent_transpose_bits
        } else {
            top
        };
        let _ = writeln!(
            s,
            r#"<circle class="point" cx="{:.2}" cy="{:.2}" r="1.2"/>"#,
            sx(r.cmi_bits),
            sy(y)
        );
    }
    s.push_str("</g>\n</svg>\n");
    s
}

#[derive(Debug, Clone, Default)]
pub struct OutputPaths {
    pub csv: Option<PathBuf>,
    pub json: Option<PathBuf>,
    pub svg: Option<PathBuf>,
}

impl From<&RunConfig> for OutputPaths {
    fn from(cfg: &RunConfig) -> Self {
        Self {
            csv: cfg.out_csv.clone(),
            json: cfg.out_json.clone(),
            svg: cfg.out_svg.clone(),
        }
    }
}

/// Writes whichever of CSV, summary JSON and SVG have a path.
pub fn emit_outputs(
    records: &[ExperimentRecord],
    summary: &Value,
    with_measured_re: bool,
    paths: &OutputPaths,
) -> Result<()> {
    if let Some(p) = &paths.csv {
        write_csv(p, records, with_measured_re)?;
    }
    if let Some(p) = &paths.json {
        write_json(p, summary)?;
    }
    if let Some(p) = &paths.svg {
        fs::write(p, svg_scatter(records)).map_err(io_err(p, "writing"))?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// classical example

/// Quantities for `ρ_CR = (1-ε)|00><00| + ε/(d-1) Σ_k |kk><kk|` (with an independent `B`).
#[derive(Debug, Clone, Serialize)]
pub struct ClassicalExampleReport {
    pub d: usize,
    pub eps: f64,
    /// `I(C:R)` of `ρ_CR`, equal to `I(C:R|B)` since `B` is independent.
    pub mutual_information_bits: f64,
    pub mutual_information_nats: f64,
    pub cmi_bits: f64,
    /// `h2(ε) + ε log2(d-1)`, evaluated from the scalar formula.
    pub formula_bits: f64,
    /// `-2 log2 F(ρ_CR, ρ_C ⊗ ρ_R)`.
    pub fidelity_bound_bits: f64,
    pub fidelity_bound_nats: f64,
    /// `-2 log2 max_σ F(ρ_CR, σ_C ⊗ ρ_R)`, attained at `σ_C ∝ p²`.
    pub optimized_fidelity_bound_bits: f64,
    /// `-log2(1-ε)`.
    pub ceiling_bits: f64,
    pub ceiling_nats: f64,
    /// `-2 log2(1-ε)`.
    pub doubled_ceiling_bits: f64,
    /// `mutual_information_bits / ceiling_bits` (0 when both vanish).
    pub ratio: f64,
    /// `MS(ρ_CBR || ρ_C ⊗ ρ_BR)`: the attach-`ρ_C` recovery channel.
    pub measured_re_attach_bits: f64,
    /// `fidelity_bound_bits <= doubled_ceiling_bits`.
    pub fidelity_bound_within_ceiling: bool,
}

pub fn binary_entropy(p: f64) -> f64 {
    let term = |x: f64| if x > 0.0 { -x * x.log2() } else { 0.0 };
    term(p) + term(1.0 - p)
}

pub fn classical_example_experiment(d: usize, eps: f64) -> Result<ClassicalExampleReport> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::InvalidArgument(format!(
            "eps must lie in [0, 1), got {eps}"
        )));
    }
    let rho = MultipartiteState::classical_example(d, eps)?;
    let cr = rho.partial_trace(&["C", "R"])?;
    let c = cr.partial_trace(&["C"])?;
    let r = cr.partial_trace(&["R"])?;
    let mi = entropy::mutual_information(&cr, "C", "R")?;
    let f_literal = entropy::fidelity(cr.matrix(), c.tensor(&r)?.matrix())?;

    let p: Vec<f64> = (0..d).map(|k| c.matrix()[(k, k)].re).collect();
    let norm: f64 = p.iter().map(|x| x * x).sum();
    let q: Vec<f64> = p.iter().map(|x| x * x / norm).collect();
    let sigma_c = MultipartiteState::classical(&q, Subsystem::layout(&[("C", d)]))?;
    let f_opt = entropy::fidelity(cr.matrix(), sigma_c.tensor(&r)?.matrix())?;

    let attach = channels::attach(vec![Subsystem::new("B", rho.dim_of("B")?)], &c)?;
    // The program is concave in omega, so the identity start alone reaches the optimum;
    // for commuting inputs the first eigenbasis polish already lands on it.
    let ms_cfg = MsConfig {
        random_restarts: 0,
        ..MsConfig::default()
    };
    let ms_attach = markov::measured_re_of_recovery(&rho, &attach, &ms_cfg)?;

    let ln2 = std::f64::consts::LN_2;
    let ceiling_bits = -(1.0 - eps).log2();
    let fr = entropy::renyi_half_from_fidelity(f_literal);
    Ok(ClassicalExampleReport {
        d,
        eps,
        mutual_information_bits: mi,
        mutual_information_nats: mi * ln2,
        cmi_bits: entropy::cmi(&rho, "C", "R", "B")?,
        formula_bits: binary_entropy(eps) + eps * ((d - 1) as f64).log2(),
        fidelity_bound_bits: fr,
        fidelity_bound_nats: fr * ln2,
        optimized_fidelity_bound_bits: entropy::renyi_half_from_fidelity(f_opt),
        ceiling_bits,
        ceiling_nats: ceiling_bits * ln2,
        doubled_ceiling_bits: 2.0 * ceiling_bits,
        ratio: if mi.abs() < 1e-15 && ceiling_bits == 0.0 {
            0.0
        } else {
            mi / ceiling_bits
        },
        measured_re_attach_bits: ms_attach,
        fidelity_bound_within_ceiling: fr <= 2.0 * ceiling_bits,
    })
}

// ---------------------------------------------------------------------------
// inequality suite

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleSource {
    /// Haar-random pure states.
    Haar,
    /// Random Markov states.
    Markov,
}

/// Deliberate defects used to confirm that the suite detects errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mutation {
    /// The classical divergence is computed in nats and compared with the CMI in bits.
    MixedLogBase,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Samples per check.
    pub budget: usize,
    pub dims: [usize; 3],
    pub workers: usize,
    pub source: SampleSource,
    pub mutation: Option<Mutation>,
    pub optimizer: OptimizerConfig,
    pub ms: MsConfig,
    /// Fraction of states on which the recovery certificate must hold.
    pub certificate_pass_fraction: f64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            budget: 200,
            dims: [2, 2, 2],
            workers: 1,
            source: SampleSource::Haar,
            mutation: None,
            optimizer: OptimizerConfig::default(),
            ms: MsConfig::default(),
            certificate_pass_fraction: 0.99,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub seed: u64,
    pub sample: u64,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub samples: usize,
    pub violations: Vec<Violation>,
    /// Smallest slack observed (negative means violated).
    pub worst_slack: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub budget: usize,
    pub checks: Vec<CheckResult>,
    pub all_passed: bool,
}

impl SuiteReport {
    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Per-sample outcome: slack of the inequality (`>= 0` holds) and a description.
struct Outcome {
    slack: f64,
    detail: String,
}

fn run_check<F>(
    name: &str,
    cfg: &SuiteConfig,
    n: usize,
    min_pass: Option<f64>,
    f: F,
) -> Result<CheckResult>
where
    F: Fn(&mut SeededRng, u64) -> Result<Vec<Outcome>> + Sync,
{
    let tag = name
        .bytes()
        .fold(0u64, |h, b| h.wrapping_mul(131).wrapping_add(b as u64));
    let outcomes = par_map(cfg.workers, n, |i| {
        let mut rng = SeededRng::stream(cfg.seed, i).fork(tag);
        f(&mut rng, i)
    })?;
    let mut violations = Vec::new();
    let mut worst = f64::INFINITY;
    let mut total = 0;
    for (i, outs) in outcomes.into_iter().enumerate() {
        for o in outs {
            total += 1;
            worst = worst.min(o.slack);
            if !(o.slack >= 0.0) {
                violations.push(Violation {
                    seed: cfg.seed,
                    sample: i as u64,
                    detail: o.detail,
                });
            }
        }
    }
    let passed = match min_pass {
        None => violations.is_empty(),
        Some(frac) => total > 0 && (total - violations.len()) as f64 >= frac * total as f64,
    };
    Ok(CheckResult {
        name: name.into(),
        samples: total,
        violations,
        worst_slack: worst,
        passed,
    })
}

fn one(slack: f64, detail: impl FnOnce() -> String) -> Vec<Outcome> {
    vec![Outcome {
        slack,
        detail: if slack >= 0.0 {
            String::new()
        } else {
            detail()
        },
    }]
}

fn source_state(cfg: &SuiteConfig, rng: &mut SeededRng) -> Result<MultipartiteState> {
    match cfg.source {
        SampleSource::Haar => MultipartiteState::random_pure(&bcr_layout(cfg.dims), rng),
        SampleSource::Markov => {
            let shapes = markov::random_shapes(cfg.dims[0], rng);
            markov::markov_state(&MarkovSpec::random(&shapes, cfg.dims[1], cfg.dims[2], rng)?)
        }
    }
}

/// Random full-rank or rank-deficient density matrix of dimension `d`.
fn random_density(d: usize, rank: usize, rng: &mut SeededRng) -> Result<linalg::ComplexMatrix> {
    Ok(MultipartiteState::random_mixed(&[Subsystem::new("X", d)], rank, rng)?.into_matrix())
}

/// Strong subadditivity on sampled pure and mixed states.
pub fn check_ssa(cfg: &SuiteConfig) -> Result<CheckResult> {
    run_check("ssa", cfg, cfg.budget, None, |rng, _| {
        let pure = source_state(cfg, rng)?;
        let total: usize = cfg.dims.iter().product();
        let mixed =
            MultipartiteState::random_mixed(&bcr_layout(cfg.dims), 1 + rng.below(total), rng)?;
        let mut out = Vec::new();
        for s in [pure, mixed] {
            let v = entropy::cmi(&s, "C", "R", "B")?;
            out.extend(one(v + 1e-9, || format!("I(C:R|B) = {v:e}")));
        }
        Ok(out)
    })
}

/// `I(C:R|B) = S(C) + S(R) - S(B)` for pure states.
pub fn check_pure_identity(cfg: &SuiteConfig) -> Result<CheckResult> {
    run_check("pure_identity", cfg, cfg.budget, None, |rng, _| {
        let s = MultipartiteState::random_pure(&bcr_layout(cfg.dims), rng)?;
        let lhs = entropy::cmi(&s, "C", "R", "B")?;
        let rhs = entropy::marginal_entropy(&s, &["C"])? + entropy::marginal_entropy(&s, &["R"])?
            - entropy::marginal_entropy(&s, &["B"])?;
        let diff = (lhs - rhs).abs();
        Ok(one(1e-8 - diff, || {
            format!("CMI {lhs} vs S(C)+S(R)-S(B) {rhs}")
        }))
    })
}

/// CMI of a classical table equals `D(p || p_CB p_BR / p_B)`.
pub fn check_classical_equality(cfg: &SuiteConfig) -> Result<CheckResult> {
    run_check("classical_equality", cfg, cfg.budget, None, |rng, _| {
        let (dc, db, dr) = (2 + rng.below(3), 2 + rng.below(3), 2 + rng.below(3));
        let mut p: Vec<f64> = (0..dc * db * dr)
            .map(|_| {
                if rng.uniform() < 0.15 {
                    0.0
                } else {
                    rng.uniform()
                }
            })
            .collect();
        if p.iter().all(|&x| x == 0.0) {
            p[0] = 1.0;
        }
        let total: f64 = p.iter().sum();
        p.iter_mut().for_each(|x| *x /= total);
        let idx = |c: usize, b: usize, r: usize| (c * db + b) * dr + r;
        let mut p_cb = vec![0.0; dc * db];
        let mut p_br = vec![0.0; db * dr];
        let mut p_b = vec![0.0; db];
        for c in 0..dc {
            for b in 0..db {
                for r in 0..dr {
                    let x = p[idx(c, b, r)];
                    p_cb[c * db + b] += x;
                    p_br[b * dr + r] += x;
                    p_b[b] += x;
                }
            }
        }
        let mut q = vec![0.0; p.len()];
        for c in 0..dc {
            for b in 0..db {
                for r in 0..dr {
                    if p_b[b] > 0.0 {
                        q[idx(c, b, r)] = p_cb[c * db + b] * p_br[b * dr + r] / p_b[b];
                    }
                }
            }
        }
        let mut kl = entropy::classical_relative_entropy(&p, &q)?;
        if cfg.mutation == Some(Mutation::MixedLogBase) {
            kl *= std::f64::consts::LN_2;
        }
        let s = MultipartiteState::classical(
            &p,
            Subsystem::layout(&[("C", dc), ("B", db), ("R", dr)]),
        )?;
        let cmi = entropy::cmi(&s, "C", "R", "B")?;
        let diff = (cmi - kl).abs();
        Ok(one(1e-9 - diff, || {
            format!("dims ({dc},{db},{dr}): CMI {cmi} vs divergence {kl}")
        }))
    })
}

/// `-2 log2 F - 1e-6 <= MS <= S + 1e-7` on random pairs of dimension up to 8.
pub fn check_ordering(cfg: &SuiteConfig) -> Result<CheckResult> {
    run_check("ordering_panel", cfg, cfg.budget, None, |rng, i| {
        let d = 2 + rng.below(7);
        let rho = random_density(d, 1 + rng.below(d), rng)?;
        let sigma_rank = if i % 5 == 4 { 1 + rng.below(d) } else { d };
        let sigma = random_density(d, sigma_rank, rng)?;
        let s = entropy::relative_entropy(&rho, &sigma)?;
        let half = entropy::renyi_half(&rho, &sigma)?;
        let ms_cfg = MsConfig {
            seed: cfg.ms.seed ^ i,
            ..cfg.ms.clone()
        };
        let ms = entropy::measured_relative_entropy(&rho, &sigma, &ms_cfg)?.value_bits;
        let upper = if s.is_finite() {
            s + 1e-7 - ms
        } else {
            f64::INFINITY
        };
        let lower = if half.is_finite() {
            ms - half + 1e-6
        } else {
            f64::INFINITY
        };
        let mut out = one(upper, || format!("d={d}: MS {ms} > S {s}"));
        out.extend(one(lower, || format!("d={d}: MS {ms} < S_1/2 {half}")));
        Ok(out)
    })
}

/// `S(ρ||σ) <= T log2 d + min(-T log2 T, 1/(e ln 2)) - T log2(λ_min σ)/2` for full-rank `σ`.
pub fn check_ae(cfg: &SuiteConfig) -> Result<CheckResult> {
    run_check("audenaert_eisert", cfg, cfg.budget, None, |rng, _| {
        let d = 2 + rng.below(7);
        let rho = random_density(d, 1 + rng.below(d), rng)?;
        let sigma = random_density(d, d, rng)?;
        let s = entropy::relative_entropy(&rho, &sigma)?;
        let t = 2.0 * linalg::trace_distance(&rho, &sigma)?;
        let beta = linalg::min_eigenvalue(&sigma)?;
        let bound = entropy::ae_continuity_bound(d, t.min(2.0), beta)?;
        Ok(one(bound - s, || {
            format!("d={d}: S {s} > bound {bound} (T={t}, beta={beta:e})")
        }))
    })
}

/// Monotonicity of `S` and `F` under random channels.
pub fn check_dpi(cfg: &SuiteConfig) -> Result<CheckResult> {
    run_check("data_processing", cfg, cfg.budget, None, |rng, _| {
        let (din, dout) = (2 + rng.below(3), 2 + rng.below(3));
        let input = vec![Subsystem::new("X", din)];
        let output = vec![Subsystem::new("Y", dout)];
        let env = (1 + rng.below(din * dout)).max(din.div_ceil(dout));
        let ch = channels::random_channel(input, output, env, rng)?;
        let rho = random_density(din, 1 + rng.below(din), rng)?;
        let sigma = random_density(din, din, rng)?;
        let (lr, ls) = (ch.apply_matrix(&rho)?, ch.apply_matrix(&sigma)?);
        let s0 = entropy::relative_entropy(&rho, &sigma)?;
        let s1 = entropy::relative_entropy(&lr, &ls)?;
        let f0 = entropy::fidelity(&rho, &sigma)?;
        let f1 = entropy::fidelity(&lr, &ls)?;
        let mut out = one(s0 + 1e-7 - s1, || format!("S grew {s0} -> {s1}"));
        out.extend(one(f1 - f0 + 1e-9, || format!("F shrank {f0} -> {f1}")));
        Ok(out)
    })
}

/// `π <= 2^λ σ` implies `S(ρ||π) >= S(ρ||σ) - λ`.
pub fn check_shift_bound(cfg: &SuiteConfig) -> Result<CheckResult> {
    run_check("shift_bound", cfg, cfg.budget, None, |rng, _| {
        let d = 2 + rng.below(5);
        let rho = random_density(d, 1 + rng.below(d), rng)?;
        let sigma = random_density(d, d, rng)?;
        let pi = random_density(d, d, rng)?;
        let is = linalg::inv_sqrtm(&sigma)?;
        let ratio = linalg::eigh_unchecked(linalg::symmetrize(&(&is * &pi * &is)))?.max();
        let lambda = ratio.log2();
        let lhs = entropy::relative_entropy(&rho, &pi)?;
        let rhs = entropy::relative_entropy(&rho, &sigma)? - lambda;
        Ok(one(lhs - rhs + 1e-7, || {
            format!("d={d}: S(rho||pi) {lhs} < {rhs}")
        }))
    })
}

/// `m (I_M ⊗ π_N) - π_MN >= 0` for bipartite states.
pub fn check_operator_inequality(cfg: &SuiteConfig) -> Result<CheckResult> {
    run_check("operator_inequality", cfg, cfg.budget, None, |rng, _| {
        let (m, n) = (2 + rng.below(3), 2 + rng.below(3));
        let layout = Subsystem::layout(&[("M", m), ("N", n)]);
        let s = MultipartiteState::random_mixed(&layout, 1 + rng.below(m * n), rng)?;
        let pn = s.partial_trace(&["N"])?;
        let lhs = linalg::kron(&linalg::identity(m), pn.matrix())
            * num_complex::Complex64::new(m as f64, 0.0)
            - s.matrix();
        let min = linalg::min_eigenvalue(&lhs)?;
        Ok(one(min + 1e-9, || {
            format!("({m},{n}): min eigenvalue {min:e}")
        }))
    })
}

/// `S(ρ||σ) - I(C:R|B) >= 0` for random classical-`B` Markov `σ`.
pub fn check_markov_gap(cfg: &SuiteConfig) -> Result<CheckResult> {
    run_check("markov_gap", cfg, cfg.budget, None, |rng, _| {
        let rho = source_state(cfg, rng)?;
        let shapes = vec![(1, 1); cfg.dims[0]];
        let sigma =
            markov::markov_state(&MarkovSpec::random(&shapes, cfg.dims[1], cfg.dims[2], rng)?)?;
        let gap = markov::markov_gap(&rho, &sigma)?;
        Ok(one(gap + 1e-7, || format!("gap {gap:e}")))
    })
}

/// The optimized recovery fidelity satisfies `-2 log2 F <= I(C:R|B) + 1e-4`.
pub fn check_certificate(cfg: &SuiteConfig) -> Result<CheckResult> {
    let frac = cfg.certificate_pass_fraction;
    run_check(
        "recovery_certificate",
        cfg,
        cfg.budget,
        Some(frac),
        |rng, i| {
            let rho = source_state(cfg, rng)?;
            let cmi = entropy::cmi(&rho, "C", "R", "B")?;
            let opt = OptimizerConfig {
                seed: cfg.optimizer.seed ^ i,
                ..cfg.optimizer.clone()
            };
            let res = markov::optimize_recovery(&rho, ObjectiveKind::Fidelity, &opt)?;
            let bits = entropy::renyi_half_from_fidelity(res.best_value);
            Ok(one(cmi + 1e-4 - bits, || {
                format!(
                    "-2log2 F = {bits} > I(C:R|B) = {cmi} (baseline F {})",
                    res.baseline_value
                )
            }))
        },
    )
}

/// Runs every check; `all_passed` is false if any one fails.
pub fn inequality_suite(cfg: &SuiteConfig) -> Result<SuiteReport> {
    if cfg.budget == 0 || cfg.workers == 0 || cfg.dims.iter().any(|&d| d < 2) {
        return Err(Error::InvalidArgument(
            "suite needs a positive budget, workers, and dimensions of at least 2".into(),
        ));
    }
    let checks = vec![
        check_ssa(cfg)?,
        check_pure_identity(cfg)?,
        check_classical_equality(cfg)?,
        check_ordering(cfg)?,
        check_dpi(cfg)?,
        check_shift_bound(cfg)?,
        check_ae(cfg)?,
        check_operator_inequality(cfg)?,
        check_markov_gap(cfg)?,
        check_certificate(cfg)?,
    ];
    let all_passed = checks.iter().all(|c| c.passed);
    Ok(SuiteReport {
        seed: cfg.seed,
        budget: cfg.budget,
        checks,
        all_passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(n: usize, workers: usize) -> RunConfig {
        RunConfig {
            seed: 9,
            n_samples: n,
            workers,
            ..RunConfig::default()
        }
    }

    #[test]
    fn config_validation() {
        assert!(small(0, 1).validate().is_err());
        assert!(RunConfig {
            dims: [2, 1, 2],
            ..small(1, 1)
        }
        .validate()
        .is_err());
        assert!(small(1, 0).validate().is_err());
        assert!(small(1, 1).validate().is_ok());
    }

    #[test]
    fn records_satisfy_their_invariants() {
        let run = figure1_experiment(&RunConfig {
            markov_controls: 5,
            ..small(50, 2)
        })
        .unwrap();
        assert_eq!(run.records.len(), 50);
        for r in &run.records {
            assert!(r.cmi_bits >= -1e-9);
            assert!((0.0..=1.0).contains(&r.fidelity_transpose));
            assert!(r.shalf_transpose_bits >= 0.0);
            let expect = -2.0 * r.fidelity_transpose.log2();
            assert!((r.shalf_transpose_bits - expect.max(0.0)).abs() < 1e-9);
            assert_eq!(r.strict, r.relent_transpose_bits < r.cmi_bits - STRICT_TOL);
        }
        assert_eq!(run.controls.len(), 5);
        for c in &run.controls {
            assert!(c.cmi_bits < 1e-8, "{}", c.cmi_bits);
            assert!(
                c.relent_transpose_bits < 1e-7,
                "{}",
                c.relent_transpose_bits
            );
        }
    }

    #[test]
    fn worker_count_does_not_change_output() {
        let a = figure1_experiment(&small(40, 1)).unwrap();
        let b = figure1_experiment(&small(40, 4)).unwrap();
        assert_eq!(
            csv_bytes(&a.records, false).unwrap(),
            csv_bytes(&b.records, false).unwrap()
        );
    }

    #[test]
    fn empty_and_synthetic_csv() {
        let text = String::from_utf8(csv_bytes(&[], false).unwrap()).unwrap();
        assert_eq!(text, CSV_HEADER.join(",") + "\n");
        let rec = |id, strict| ExperimentRecord {
            sample_id: id,
            cmi_bits: 0.5,
            relent_transpose_bits: if id == 2 { f64::INFINITY } else { 0.25 },
            fidelity_transpose: 0.9,
            shalf_transpose_bits: 0.304,
            measured_re_transpose_bits: None,
            strict,
        };
        let records = vec![rec(0, true), rec(1, false), rec(2, false)];
        let text = String::from_utf8(csv_bytes(&records, false).unwrap()).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(text.lines().nth(3).unwrap().contains(",inf,"));
        let cfg = small(3, 1);
        let summary = Summary::from_records(&cfg, &records, &[], 0.0);
        let v = summary.to_json(&cfg);
        assert!((v["strict_fraction"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(v["n_infinite_relent"], 1);
    }

    #[test]
    fn json_nulls_for_non_finite() {
        assert_eq!(json_number(f64::INFINITY), (Value::Null, true));
        assert_eq!(json_number(1.5), (json!(1.5), false));
    }

    #[test]
    fn svg_has_one_point_per_record() {
        let run = figure1_experiment(&small(25, 1)).unwrap();
        let svg = svg_scatter(&run.records);
        assert_eq!(svg.matches("<circle class=\"point\"").count(), 25);
        assert_eq!(svg.matches("class=\"diagonal\"").count(), 1);
    }

    #[test]
    fn classical_example_degenerate_cases() {
        let r = classical_example_experiment(5, 0.0).unwrap();
        for x in [
            r.mutual_information_bits,
            r.fidelity_bound_bits,
            r.optimized_fidelity_bound_bits,
            r.ceiling_bits,
            r.ratio,
        ] {
            assert!(x.abs() < 1e-12, "{x}");
        }
        let r = classical_example_experiment(2, 0.3).unwrap();
        assert!((r.mutual_information_bits - binary_entropy(0.3)).abs() < 1e-10);
        assert!(classical_example_experiment(4, 1.0).is_err());
    }

    #[test]
    fn classical_example_attach_channel_matches_mutual_information() {
        let r = classical_example_experiment(6, 0.2).unwrap();
        assert!((r.measured_re_attach_bits - r.mutual_information_bits).abs() < 1e-6);
        assert!((r.cmi_bits - r.mutual_information_bits).abs() < 1e-10);
        // the optimized classical fidelity bound respects the doubled ceiling
        assert!(r.optimized_fidelity_bound_bits <= r.doubled_ceiling_bits + 1e-12);
    }

    fn quick_suite() -> SuiteConfig {
        SuiteConfig {
            budget: 6,
            workers: 2,
            optimizer: OptimizerConfig {
                restarts: 2,
                ..OptimizerConfig::default()
            },
            ..SuiteConfig::default()
        }
    }

    #[test]
    fn quick_suite_passes() {
        let report = inequality_suite(&quick_suite()).unwrap();
        for c in &report.checks {
            assert!(c.passed, "{}: {:?}", c.name, c.violations);
        }
        assert!(report.all_passed);
    }

    #[test]
    fn mixed_log_base_is_caught() {
        let cfg = SuiteConfig {
            mutation: Some(Mutation::MixedLogBase),
            ..quick_suite()
        };
        let c = check_classical_equality(&cfg).unwrap();
        assert!(!c.passed);
    }

    #[test]
    fn markov_source_certificate_is_trivial() {
        let cfg = SuiteConfig {
            source: SampleSource::Markov,
            ..quick_suite()
        };
        let c = check_certificate(&cfg).unwrap();
        assert!(c.passed);
        assert!(c.worst_slack > 0.0);
    }
}
