//! Quantum Markov states and the search for good reconstruction channels.
//!
//! A Markov state splits `B` into orthogonal blocks `B_Lk ⊗ B_Rk` and is a
//! weighted direct sum of products `ρ_{C B_Lk} ⊗ ρ_{B_Rk R}`. Such states have
//! zero conditional mutual information and are recovered exactly from their
//! `BR` marginal by the transpose channel.
//!
//! [`optimize_recovery`] searches over channels `B → BC`, parametrized by
//! Stinespring isometries `V: B → B ⊗ C ⊗ E`, for the one that best rebuilds
//! `ρ_BCR` from `ρ_BR`.

use std::f64::consts::LN_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channels::{self, Channel, Isometry};
use crate::entropy::{self, MsConfig};
use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix, ZERO};
use crate::rng::SeededRng;
use crate::states::{MultipartiteState, Subsystem};

/// One direct-sum block: weight, state on `C ⊗ B_L`, state on `B_R ⊗ R`.
///
/// The block states are positional: `left` must have exactly two subsystems
/// `(C, B_L)` and `right` exactly two `(B_R, R)`; their labels are ignored.
#[derive(Debug, Clone)]
pub struct MarkovBlock {
    pub weight: f64,
    pub left: MultipartiteState,
    pub right: MultipartiteState,
}

impl MarkovBlock {
    fn dims(&self) -> Result<(usize, usize, usize, usize)> {
        let (l, r) = (self.left.dims(), self.right.dims());
        if l.len() != 2 || r.len() != 2 {
            return Err(Error::InvalidArgument(
                "Markov block states must be bipartite".into(),
            ));
        }
        Ok((l[0], l[1], r[0], r[1]))
    }
}

#[derive(Debug, Clone)]
pub struct MarkovSpec {
    pub blocks: Vec<MarkovBlock>,
}

impl MarkovSpec {
    pub fn new(blocks: Vec<MarkovBlock>) -> Result<Self> {
        let spec = Self { blocks };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<(usize, usize)> {
        let first = self
            .blocks
            .first()
            .ok_or_else(|| Error::InvalidArgument("a Markov state needs at least one block".into()))?;
        let (d_c, _, _, d_r) = first.dims()?;
        let mut total = 0.0;
        for b in &self.blocks {
            let (c, _, _, r) = b.dims()?;
            if c != d_c || r != d_r {
                return Err(Error::InvalidArgument(format!(
                    "inconsistent C/R dimensions across blocks: ({c}, {r}) vs ({d_c}, {d_r})"
                )));
            }
            if !(b.weight >= 0.0) {
                return Err(Error::InvalidDistribution(format!(
                    "negative block weight {}",
                    b.weight
                )));
            }
            total += b.weight;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidDistribution(format!(
                "block weights sum to {total}"
            )));
        }
        Ok((d_c, d_r))
    }

    /// Offset of each block inside `B`, in block order, plus the total dimension of `B`.
    pub fn block_offsets(&self) -> Result<(Vec<usize>, usize)> {
        let mut offs = Vec::with_capacity(self.blocks.len());
        let mut at = 0;
        for b in &self.blocks {
            let (_, l, r, _) = b.dims()?;
            offs.push(at);
            at += l * r;
        }
        Ok((offs, at))
    }

    /// Random description with the given `(dim B_L, dim B_R)` block shapes and full-rank block states.
    pub fn random(
        shapes: &[(usize, usize)],
        d_c: usize,
        d_r: usize,
        rng: &mut SeededRng,
    ) -> Result<Self> {
        let raw: Vec<f64> = shapes.iter().map(|_| 0.05 + rng.uniform()).collect();
        let total: f64 = raw.iter().sum();
        let mut blocks = Vec::with_capacity(shapes.len());
        for (k, &(l, r)) in shapes.iter().enumerate() {
            let left_layout = Subsystem::layout(&[("C", d_c), ("BL", l)]);
            let right_layout = Subsystem::layout(&[("BR", r), ("R", d_r)]);
            blocks.push(MarkovBlock {
                weight: raw[k] / total,
                left: MultipartiteState::random_mixed(&left_layout, d_c * l, rng)?,
                right: MultipartiteState::random_mixed(&right_layout, r * d_r, rng)?,
            });
        }
        // absorb rounding so the weights sum to 1 exactly enough
        let s: f64 = blocks.iter().map(|b| b.weight).sum();
        blocks.iter_mut().for_each(|b| b.weight /= s);
        Self::new(blocks)
    }
}

/// Random block shapes `(dim B_L, dim B_R)` whose sizes `dim B_L · dim B_R` sum to `d_b`.
pub fn random_shapes(d_b: usize, rng: &mut SeededRng) -> Vec<(usize, usize)> {
    let mut shapes = Vec::new();
    let mut left = d_b;
    while left > 0 {
        let size = 1 + rng.below(left);
        let divisors: Vec<usize> = (1..=size).filter(|k| size % k == 0).collect();
        let l = divisors[rng.below(divisors.len())];
        shapes.push((l, size / l));
        left -= size;
    }
    shapes
}

/// `⊕_k p_k ρ_{C B_Lk} ⊗ ρ_{B_Rk R}` as a state on `(B, C, R)`, with block `k` occupying
/// `B` indices `offset_k + l·dim(B_Rk) + r`.
pub fn markov_state(spec: &MarkovSpec) -> Result<MultipartiteState> {
    let (d_c, d_r) = spec.validate()?;
    let (offs, d_b) = spec.block_offsets()?;
    let d = d_b * d_c * d_r;
    let mut out = ComplexMatrix::zeros(d, d);
    let idx = |b: usize, c: usize, x: usize| (b * d_c + c) * d_r + x;
    for (block, &off) in spec.blocks.iter().zip(&offs) {
        let (_, dl, dbr, _) = block.dims()?;
        let lm = block.left.matrix();
        let rm = block.right.matrix();
        let w = Complex64::new(block.weight, 0.0);
        for c in 0..d_c {
            for l in 0..dl {
                for c2 in 0..d_c {
                    for l2 in 0..dl {
                        let a = lm[(c * dl + l, c2 * dl + l2)] * w;
                        if a == ZERO {
                            continue;
                        }
                        for r in 0..dbr {
                            for x in 0..d_r {
                                for r2 in 0..dbr {
                                    for x2 in 0..d_r {
                                        let v = rm[(r * d_r + x, r2 * d_r + x2)];
                                        let b = off + l * dbr + r;
                                        let b2 = off + l2 * dbr + r2;
                                        out[(idx(b, c, x), idx(b2, c2, x2))] += a * v;
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    MultipartiteState::new(
        out,
        Subsystem::layout(&[("B", d_b), ("C", d_c), ("R", d_r)]),
    )
}

/// `S(ρ || σ) - I(C:R|B)_ρ` in bits for a Markov `sigma`; `+inf` on support violation.
pub fn markov_gap(rho: &MultipartiteState, sigma_markov: &MultipartiteState) -> Result<f64> {
    let sigma = sigma_markov.reordered(&rho.labels())?;
    if sigma.dims() != rho.dims() {
        return Err(Error::InvalidArgument(
            "state and Markov state have different layouts".into(),
        ));
    }
    let s = entropy::relative_entropy(rho.matrix(), sigma.matrix())?;
    if s.is_infinite() {
        return Ok(f64::INFINITY);
    }
    Ok(s - entropy::cmi(rho, "C", "R", "B")?)
}

/// `Λ ⊗ id_R (ρ_BR)` laid out like `rho_bcr`.
pub fn reconstruct(rho_bcr: &MultipartiteState, channel: &Channel) -> Result<MultipartiteState> {
    let br = rho_bcr.partial_trace(&["B", "R"])?;
    let out = channel.apply(&br, &["B"])?;
    out.reordered(&rho_bcr.labels())
}

/// `MS(ρ_BCR || Λ ⊗ id_R(ρ_BR))` in bits.
pub fn measured_re_of_recovery(
    rho_bcr: &MultipartiteState,
    channel: &Channel,
    cfg: &MsConfig,
) -> Result<f64> {
    let sigma = reconstruct(rho_bcr, channel)?;
    Ok(entropy::measured_relative_entropy(rho_bcr.matrix(), sigma.matrix(), cfg)?.value_bits)
}

// ---------------------------------------------------------------------------
// optimizer

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveKind {
    /// Maximize `F(ρ_BCR, Λ⊗id(ρ_BR))`.
    Fidelity,
    /// Minimize `-2 log2 F`; same search as `Fidelity`, reported in bits.
    RenyiHalf,
    /// Minimize the measured relative entropy.
    MeasuredRe,
}

impl std::str::FromStr for ObjectiveKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fidelity" => Ok(Self::Fidelity),
            "renyi-half" | "renyi_half" => Ok(Self::RenyiHalf),
            "measured-re" | "measured_re" => Ok(Self::MeasuredRe),
            other => Err(Error::InvalidArgument(format!(
                "unknown objective `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimizerConfig {
    /// Total starts: the transpose-channel warm start plus `restarts - 1` Haar-random isometries.
    pub restarts: usize,
    pub max_iterations: usize,
    /// Relative objective gain over `window` accepted steps that counts as converged.
    pub step_tolerance: f64,
    pub window: usize,
    /// Environment dimension; `None` means `d_B · d_C`.
    pub env_dim: Option<usize>,
    pub seed: u64,
    /// Finite-difference step for the measured-RE objective.
    pub fd_step: f64,
    /// Measured-RE settings used inside the search (final value uses `ms_final`).
    pub ms_inner: MsConfig,
    pub ms_final: MsConfig,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            restarts: 8,
            max_iterations: 2000,
            step_tolerance: 1e-9,
            window: 10,
            env_dim: None,
            seed: 0,
            fd_step: 1e-5,
            ms_inner: MsConfig {
                random_restarts: 0,
                max_iterations: 500,
                ..MsConfig::default()
            },
            ms_final: MsConfig::default(),
        }
    }
}

impl OptimizerConfig {
    /// Defaults with a smaller budget for the (finite-difference) measured-RE search.
    pub fn for_objective(kind: ObjectiveKind) -> Self {
        match kind {
            ObjectiveKind::MeasuredRe => Self {
                restarts: 2,
                max_iterations: 60,
                step_tolerance: 1e-7,
                window: 3,
                ..Self::default()
            },
            _ => Self::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimizerResult {
    pub best_channel: Channel,
    /// In objective units: fidelity, or bits for `RenyiHalf` / `MeasuredRe`.
    pub best_value: f64,
    pub objective_kind: ObjectiveKind,
    /// Objective values of the winning start, one per accepted step.
    pub trace: Vec<f64>,
    /// Value of the transpose channel (the warm start), same units.
    pub baseline_value: f64,
    pub restarts_used: usize,
    pub converged: bool,
}

/// Objective in its reported units for a fixed channel.
pub fn evaluate_objective(
    rho_bcr: &MultipartiteState,
    channel: &Channel,
    kind: ObjectiveKind,
    cfg: &OptimizerConfig,
) -> Result<f64> {
    match kind {
        ObjectiveKind::Fidelity => {
            let sigma = reconstruct(rho_bcr, channel)?;
            entropy::fidelity(rho_bcr.matrix(), sigma.matrix())
        }
        ObjectiveKind::RenyiHalf => {
            let sigma = reconstruct(rho_bcr, channel)?;
            entropy::renyi_half(rho_bcr.matrix(), sigma.matrix())
        }
        ObjectiveKind::MeasuredRe => measured_re_of_recovery(rho_bcr, channel, &cfg.ms_final),
    }
}

/// Precomputed pieces of one optimization problem, all in `(B, C, R)` order.
struct Problem {
    rho: ComplexMatrix,
    sqrt_rho: ComplexMatrix,
    rho_br: ComplexMatrix,
    d_b: usize,
    d_c: usize,
    d_r: usize,
    d_env: usize,
    kind: ObjectiveKind,
    ms: MsConfig,
    fd_step: f64,
}

/// Search score: always maximized.
struct Scored {
    v: ComplexMatrix,
    score: f64,
    /// `d score / d V` (Euclidean, real inner product), fidelity objectives only.
    sigma: ComplexMatrix,
}

impl Problem {
    fn d_out(&self) -> usize {
        self.d_b * self.d_c
    }

    fn reconstruct(&self, v: &ComplexMatrix) -> ComplexMatrix {
        let (d_in, d_out, d_r, d_env) = (self.d_b, self.d_out(), self.d_r, self.d_env);
        let mut sigma = ComplexMatrix::zeros(d_out * d_r, d_out * d_r);
        let id_r = linalg::identity(d_r);
        for e in 0..d_env {
            let k = ComplexMatrix::from_fn(d_out, d_in, |o, i| v[(o * d_env + e, i)]);
            let kk = linalg::kron(&k, &id_r);
            sigma += &kk * &self.rho_br * kk.adjoint();
        }
        linalg::symmetrize(&sigma)
    }

    fn score(&self, v: ComplexMatrix) -> Result<Scored> {
        let sigma = self.reconstruct(&v);
        let score = match self.kind {
            ObjectiveKind::Fidelity | ObjectiveKind::RenyiHalf => {
                let m = &self.sqrt_rho * &sigma * &self.sqrt_rho;
                let s = linalg::eigh_unchecked(linalg::symmetrize(&m))?;
                let cut = s.relative_cutoff();
                s.eigenvalues
                    .iter()
                    .filter(|&&l| l > cut)
                    .map(|l| l.sqrt())
                    .sum()
            }
            ObjectiveKind::MeasuredRe => {
                -entropy::measured_relative_entropy(&self.rho, &sigma, &self.ms)?.value_bits
            }
        };
        Ok(Scored { v, score, sigma })
    }

    /// Euclidean gradient of the score with respect to `V`.
    fn gradient(&self, pt: &Scored) -> Result<ComplexMatrix> {
        match self.kind {
            ObjectiveKind::Fidelity | ObjectiveKind::RenyiHalf => self.fidelity_gradient(pt),
            ObjectiveKind::MeasuredRe => self.fd_gradient(pt),
        }
    }

    /// `dF = tr(G dσ)` with `G = ½ √ρ (√ρ σ √ρ)^{-1/2} √ρ`, pushed back through
    /// `σ = Σ_e (K_e ⊗ I) ρ_BR (K_e ⊗ I)^†` to `∂F/∂K_e = 2 tr_R[G (K_e ⊗ I) ρ_BR]`.
    fn fidelity_gradient(&self, pt: &Scored) -> Result<ComplexMatrix> {
        let m = &self.sqrt_rho * &pt.sigma * &self.sqrt_rho;
        let s = linalg::eigh_unchecked(linalg::symmetrize(&m))?;
        let inv_sqrt = s.apply(|x| 0.5 / x.sqrt(), s.relative_cutoff().max(1e-300));
        let g = &self.sqrt_rho * inv_sqrt * &self.sqrt_rho;
        let (d_in, d_out, d_r, d_env) = (self.d_b, self.d_out(), self.d_r, self.d_env);
        let id_r = linalg::identity(d_r);
        let mut grad = ComplexMatrix::zeros(d_out * d_env, d_in);
        for e in 0..d_env {
            let k = ComplexMatrix::from_fn(d_out, d_in, |o, i| pt.v[(o * d_env + e, i)]);
            let y = &g * linalg::kron(&k, &id_r) * &self.rho_br;
            for o in 0..d_out {
                for i in 0..d_in {
                    let mut acc = ZERO;
                    for r in 0..d_r {
                        acc += y[(o * d_r + r, i * d_r + r)];
                    }
                    grad[(o * d_env + e, i)] = acc * 2.0;
                }
            }
        }
        Ok(grad)
    }

    /// Central differences along every real coordinate of `V`.
    fn fd_gradient(&self, pt: &Scored) -> Result<ComplexMatrix> {
        let h = self.fd_step;
        let mut grad = ComplexMatrix::zeros(pt.v.nrows(), pt.v.ncols());
        for idx in 0..pt.v.len() {
            for (part, unit) in [(0, Complex64::new(h, 0.0)), (1, Complex64::new(0.0, h))] {
                let mut plus = pt.v.clone();
                plus[idx] += unit;
                let mut minus = pt.v.clone();
                minus[idx] -= unit;
                let d = (self.score(plus)?.score - self.score(minus)?.score) / (2.0 * h);
                if part == 0 {
                    grad[idx].re = d;
                } else {
                    grad[idx].im = d;
                }
            }
        }
        Ok(grad)
    }

    /// Riemannian ascent on the Stiefel manifold with a polar retraction.
    fn ascend(&self, v0: ComplexMatrix, cfg: &OptimizerConfig) -> Result<(Scored, Vec<f64>, bool)> {
        let mut pt = self.score(v0)?;
        let mut trace = vec![pt.score];
        let mut step = 1.0;
        let mut converged = false;
        for _ in 0..cfg.max_iterations {
            let z = self.gradient(&pt)?;
            let vz = pt.v.adjoint() * &z;
            let xi = &z - &pt.v * linalg::symmetrize(&vz);
            let xnorm2 = xi.norm_squared();
            if xnorm2 < 1e-20 {
                converged = true;
                break;
            }
            let mut t = step;
            let mut accepted = None;
            for _ in 0..50 {
                let cand = channels::polar_project(&(&pt.v + &xi * Complex64::new(t, 0.0)))
                    .and_then(|v| self.score(v));
                if let Ok(c) = cand {
                    if c.score >= pt.score + 1e-4 * t * xnorm2 {
                        accepted = Some(c);
                        break;
                    }
                }
                t *= 0.5;
            }
            let Some(next) = accepted else {
                converged = true;
                break;
            };
            step = (2.0 * t).min(1e3);
            pt = next;
            trace.push(pt.score);
            let k = trace.len();
            if k > cfg.window {
                let gain = trace[k - 1] - trace[k - 1 - cfg.window];
                if gain <= cfg.step_tolerance * trace[k - 1].abs().max(1e-3) {
                    converged = true;
                    break;
                }
            }
        }
        Ok((pt, trace, converged))
    }

    fn to_units(&self, score: f64) -> f64 {
        match self.kind {
            ObjectiveKind::Fidelity => score,
            ObjectiveKind::RenyiHalf => entropy::renyi_half_from_fidelity(score),
            ObjectiveKind::MeasuredRe => -score,
        }
    }
}

fn better(kind: ObjectiveKind, a: f64, b: f64) -> bool {
    match kind {
        ObjectiveKind::Fidelity => a > b,
        _ => a < b,
    }
}

/// Local search for the reconstruction channel `Λ: B → BC` that best rebuilds `rho_bcr`
/// from `ρ_BR`, started from the transpose channel and from Haar-random isometries.
///
/// The returned value never falls short of the transpose channel's.
pub fn optimize_recovery(
    rho_bcr: &MultipartiteState,
    kind: ObjectiveKind,
    cfg: &OptimizerConfig,
) -> Result<OptimizerResult> {
    let rho = rho_bcr.reordered(&["B", "C", "R"])?;
    let (d_b, d_c, d_r) = (rho.dim_of("B")?, rho.dim_of("C")?, rho.dim_of("R")?);
    let d_env = cfg.env_dim.unwrap_or(d_b * d_c);
    if d_env == 0 || cfg.restarts == 0 {
        return Err(Error::InvalidArgument(
            "optimizer needs a positive environment dimension and at least one start".into(),
        ));
    }
    let input = vec![Subsystem::new("B", d_b)];
    let output = Subsystem::layout(&[("B", d_b), ("C", d_c)]);
    let problem = Problem {
        rho: rho.matrix().clone(),
        sqrt_rho: linalg::sqrtm(rho.matrix())?,
        rho_br: rho.partial_trace(&["B", "R"])?.into_matrix(),
        d_b,
        d_c,
        d_r,
        d_env,
        kind,
        ms: cfg.ms_inner.clone(),
        fd_step: cfg.fd_step,
    };

    let transpose = channels::transpose_channel(&rho.partial_trace(&["B", "C"])?, "B", "C")?;
    let baseline_value = evaluate_objective(&rho, &transpose, kind, cfg)?;

    let mut best: Option<(Scored, Vec<f64>, bool)> = None;
    let mut converged_any = false;
    let mut restarts_used = 0;
    for restart in 0..cfg.restarts {
        let start = if restart == 0 {
            match transpose.to_isometry(d_env) {
                Ok(v) => v.into_matrix(),
                Err(_) => continue,
            }
        } else {
            let mut rng = SeededRng::stream(cfg.seed, restart as u64);
            channels::random_isometry(d_b, d_b * d_c * d_env, &mut rng)?.into_matrix()
        };
        restarts_used += 1;
        let run = problem.ascend(start, cfg)?;
        converged_any |= run.2;
        if best.as_ref().is_none_or(|b| run.0.score > b.0.score) {
            best = Some(run);
        }
    }

    let (channel, trace, converged) = match best {
        Some((pt, trace, conv)) => {
            let v = Isometry::new(pt.v)?;
            let ch = channels::stinespring_to_channel(&v, input, output, d_env)?;
            let trace = trace.iter().map(|&s| problem.to_units(s)).collect();
            (ch, trace, conv)
        }
        None => (transpose.clone(), vec![baseline_value], false),
    };
    let value = evaluate_objective(&rho, &channel, kind, cfg)?;
    let (best_channel, best_value) = if better(kind, baseline_value, value) {
        (transpose, baseline_value)
    } else {
        (channel, value)
    };
    Ok(OptimizerResult {
        best_channel,
        best_value,
        objective_kind: kind,
        trace,
        baseline_value,
        restarts_used,
        converged: converged || converged_any,
    })
}

/// Converts a fidelity value to the certificate quantity `-2 log2 F`.
pub fn fidelity_to_bits(f: f64) -> f64 {
    if f <= 0.0 {
        f64::INFINITY
    } else {
        -2.0 * f.ln() / LN_2
    }
}
