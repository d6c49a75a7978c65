//! Scalar information measures, all reported in bits.
//!
//! Internally everything is computed with natural logarithms and converted
//! once at the boundary.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix, Spectrum};
use crate::rng::SeededRng;
use crate::states::MultipartiteState;

/// Support-inclusion tolerance: `||(I - P_sigma) rho (I - P_sigma)||_1` above this means
/// `rho` is not supported on `sigma`.
pub const SUPPORT_TOL: f64 = 1e-9;

/// Mixing weight towards the maximally mixed state applied to a rank-deficient `sigma`
/// before the measured relative entropy program.
pub const MS_REGULARIZATION: f64 = 1e-12;

fn check_same_shape(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<()> {
    linalg::check_square(a)?;
    linalg::check_square(b)?;
    if a.nrows() != b.nrows() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            got: b.nrows(),
        });
    }
    Ok(())
}

fn entropy_nats(spec: &Spectrum) -> f64 {
    let cutoff = spec.relative_cutoff();
    spec.eigenvalues
        .iter()
        .filter(|&&l| l > cutoff)
        .map(|&l| -l * l.ln())
        .sum()
}

/// Von Neumann entropy `-tr(rho log2 rho)`.
pub fn von_neumann(rho: &ComplexMatrix) -> Result<f64> {
    Ok(entropy_nats(&linalg::eigh(rho)?) / LN_2)
}

/// Entropy of the marginal of `s` on `labels`.
pub fn marginal_entropy(s: &MultipartiteState, labels: &[&str]) -> Result<f64> {
    von_neumann(s.partial_trace(labels)?.matrix())
}

/// `I(C:R|B) = S(BC) + S(BR) - S(BCR) - S(B)` in bits, unclamped.
///
/// `s` may carry extra subsystems; they are traced out first.
pub fn cmi(s: &MultipartiteState, c: &str, r: &str, b: &str) -> Result<f64> {
    if c == r || c == b || r == b {
        return Err(Error::InvalidArgument(
            "conditional mutual information needs three distinct labels".into(),
        ));
    }
    let bcr = s.partial_trace(&[b, c, r])?;
    let s_bc = marginal_entropy(&bcr, &[b, c])?;
    let s_br = marginal_entropy(&bcr, &[b, r])?;
    let s_bcr = von_neumann(bcr.matrix())?;
    let s_b = marginal_entropy(&bcr, &[b])?;
    Ok(s_bc + s_br - s_bcr - s_b)
}

/// `I(X:Y) = S(X) + S(Y) - S(XY)` in bits.
pub fn mutual_information(s: &MultipartiteState, x: &str, y: &str) -> Result<f64> {
    let xy = s.partial_trace(&[x, y])?;
    Ok(marginal_entropy(&xy, &[x])? + marginal_entropy(&xy, &[y])? - von_neumann(xy.matrix())?)
}

/// Whether `support(rho) ⊆ support(sigma)` given `sigma`'s spectrum.
fn supported_on(rho: &ComplexMatrix, sigma: &Spectrum) -> Result<bool> {
    let p = sigma.support_projector(sigma.relative_cutoff());
    let q = linalg::identity(p.nrows()) - p;
    let leak = &q * rho * &q;
    Ok(linalg::trace_norm(&leak)? < SUPPORT_TOL)
}

/// `tr[rho (log rho - log sigma)]` in bits, `+inf` when the support condition fails.
pub fn relative_entropy(rho: &ComplexMatrix, sigma: &ComplexMatrix) -> Result<f64> {
    check_same_shape(rho, sigma)?;
    let rs = linalg::eigh(rho)?;
    let ss = linalg::eigh(sigma)?;
    if !supported_on(rho, &ss)? {
        return Ok(f64::INFINITY);
    }
    let neg_entropy = -entropy_nats(&rs);
    let log_sigma = ss.apply(f64::ln, ss.relative_cutoff());
    let cross = linalg::trace_product_re(rho, &log_sigma);
    Ok((neg_entropy - cross) / LN_2)
}

/// Classical relative entropy `sum p log2(p/q)`, `+inf` when `q` misses mass of `p`.
pub fn classical_relative_entropy(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            got: q.len(),
        });
    }
    let mut acc = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if pi <= 0.0 {
            continue;
        }
        if qi <= 0.0 {
            return Ok(f64::INFINITY);
        }
        acc += pi * (pi / qi).ln();
    }
    Ok(acc / LN_2)
}

/// Fidelity `tr[(sigma^1/2 rho sigma^1/2)^1/2]`, computed as `||sqrt(rho) sqrt(sigma)||_1`.
pub fn fidelity(rho: &ComplexMatrix, sigma: &ComplexMatrix) -> Result<f64> {
    check_same_shape(rho, sigma)?;
    let a = linalg::sqrtm(rho)?;
    let b = linalg::sqrtm(sigma)?;
    let svd = (a * b).svd(false, false);
    let f: f64 = svd.singular_values.iter().sum();
    Ok(f.clamp(0.0, 1.0))
}

/// Order-1/2 Rényi relative entropy `-2 log2 F` in bits.
pub fn renyi_half(rho: &ComplexMatrix, sigma: &ComplexMatrix) -> Result<f64> {
    Ok(renyi_half_from_fidelity(fidelity(rho, sigma)?))
}

pub fn renyi_half_from_fidelity(f: f64) -> f64 {
    if f <= 0.0 {
        f64::INFINITY
    } else {
        (-2.0 * f.log2()).max(0.0)
    }
}

/// Audenaert–Eisert continuity ceiling on `S(rho||sigma)` in bits:
/// `T log2 d + min(-T log2 T, 1/(e ln 2)) - T log2(beta) / 2`, where `T` is the
/// trace-norm distance and `beta` the smallest eigenvalue of `sigma`.
pub fn ae_continuity_bound(d: usize, t: f64, beta: f64) -> Result<f64> {
    if d == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    if !(0.0..=2.0 + 1e-12).contains(&t) {
        return Err(Error::InvalidArgument(format!(
            "trace distance must lie in [0, 2], got {t}"
        )));
    }
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "beta must lie in (0, 1], got {beta}"
        )));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let entropy_term = (-t * t.log2()).min(1.0 / (std::f64::consts::E * LN_2));
    Ok(t * (d as f64).log2() + entropy_term - t * beta.log2() / 2.0)
}

// ---------------------------------------------------------------------------
// measured relative entropy

/// Settings for the measured relative entropy ascent.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MsConfig {
    /// Random starts in addition to the identity start.
    pub random_restarts: usize,
    pub max_iterations: usize,
    /// Relative objective change over `window` accepted steps that counts as converged.
    pub tolerance: f64,
    pub window: usize,
    pub seed: u64,
}

impl Default for MsConfig {
    fn default() -> Self {
        Self {
            random_restarts: 5,
            max_iterations: 5000,
            tolerance: 1e-9,
            window: 5,
            seed: 0x6d73,
        }
    }
}

/// Certified lower bound on the measured relative entropy.
#[derive(Debug, Clone)]
pub struct MeasuredReSolution {
    pub value_bits: f64,
    /// Positive-definite `omega` at which the variational objective equals `value_bits`.
    pub witness: ComplexMatrix,
    /// Objective values (bits) of the winning start, one per accepted step.
    pub trace: Vec<f64>,
    pub converged: bool,
    /// Whether `sigma` was mixed towards the maximally mixed state first.
    pub regularized: bool,
}

const OMEGA_FLOOR: f64 = 1e-30;

/// Variational objective `tr(rho ln omega) + 1 - tr(sigma omega)` converted to bits.
///
/// Any positive-definite `omega` gives a lower bound on the measured relative entropy.
pub fn ms_objective_bits(
    rho: &ComplexMatrix,
    sigma: &ComplexMatrix,
    omega: &ComplexMatrix,
) -> Result<f64> {
    check_same_shape(rho, sigma)?;
    check_same_shape(rho, omega)?;
    let s = linalg::eigh(omega)?;
    if s.min() <= 0.0 {
        return Err(Error::NotPositive(s.min()));
    }
    let log_omega = s.apply(f64::ln, 0.0);
    let v =
        linalg::trace_product_re(rho, &log_omega) + 1.0 - linalg::trace_product_re(sigma, omega);
    Ok(v / LN_2)
}

struct MsProblem<'a> {
    rho: &'a ComplexMatrix,
    sigma: &'a ComplexMatrix,
}

/// State of one ascent: the log-witness `H` in eigen-form.
struct MsPoint {
    spec: Spectrum,
    value: f64,
}

impl MsProblem<'_> {
    fn evaluate(&self, h: ComplexMatrix) -> Result<MsPoint> {
        let spec = linalg::eigh_unchecked(linalg::symmetrize(&h))?;
        let exp_h = spec.apply(f64::exp, f64::NEG_INFINITY);
        let value = linalg::trace_product_re(self.rho, &h) + 1.0
            - linalg::trace_product_re(self.sigma, &exp_h);
        Ok(MsPoint { spec, value })
    }

    /// Gradient `rho - D exp_H[sigma]` via the divided-difference (Daleckii–Krein) formula.
    fn gradient(&self, pt: &MsPoint) -> ComplexMatrix {
        let u = &pt.spec.eigenvectors;
        let h = &pt.spec.eigenvalues;
        let n = h.len();
        let mut s = u.adjoint() * self.sigma * u;
        for i in 0..n {
            for j in 0..n {
                let dd = if (h[i] - h[j]).abs() < 1e-12 * (1.0 + h[i].abs()) {
                    (0.5 * (h[i] + h[j])).exp()
                } else {
                    (h[i].exp() - h[j].exp()) / (h[i] - h[j])
                };
                s[(i, j)] *= dd;
            }
        }
        linalg::symmetrize(&(self.rho - u * s * u.adjoint()))
    }

    /// Keeps the eigenbasis of `H` and sets its eigenvalues to the best values for that basis,
    /// `ln(p_k / q_k)`; the objective becomes the classical relative entropy of the
    /// eigenbasis measurement.
    fn polish(&self, pt: &MsPoint) -> Result<MsPoint> {
        let u = &pt.spec.eigenvectors;
        let n = u.ncols();
        let mut logs = Vec::with_capacity(n);
        for k in 0..n {
            let col = u.column(k);
            let p = (col.adjoint() * self.rho * col)[(0, 0)].re.max(0.0);
            let q = (col.adjoint() * self.sigma * col)[(0, 0)]
                .re
                .max(f64::MIN_POSITIVE);
            logs.push((p / q).max(OMEGA_FLOOR).ln());
        }
        let h = pt.spec.compose(&logs);
        self.evaluate(h)
    }

    fn ascend(&self, start: ComplexMatrix, cfg: &MsConfig) -> Result<(MsPoint, Vec<f64>, bool)> {
        let mut pt = self.evaluate(start)?;
        let polished = self.polish(&pt)?;
        if polished.value >= pt.value {
            pt = polished;
        }
        let mut trace = vec![pt.value];
        let mut step = 1.0;
        let mut converged = false;
        for _ in 0..cfg.max_iterations {
            let g = self.gradient(&pt);
            let gnorm2 = g.norm_squared();
            if gnorm2 < 1e-28 {
                converged = true;
                break;
            }
            let h = pt.spec.reconstruct();
            let mut accepted = None;
            let mut t = step;
            for _ in 0..60 {
                let cand = self.evaluate(&h + &g * num_complex::Complex64::new(t, 0.0))?;
                if cand.value.is_finite() && cand.value >= pt.value + 1e-4 * t * gnorm2 {
                    accepted = Some(cand);
                    break;
                }
                t *= 0.5;
            }
            let Some(cand) = accepted else {
                converged = true;
                break;
            };
            step = (t * 2.0).min(1e6);
            let polished = self.polish(&cand)?;
            pt = if polished.value >= cand.value {
                polished
            } else {
                cand
            };
            trace.push(pt.value);
            let k = trace.len();
            if k > cfg.window {
                let gain = trace[k - 1] - trace[k - 1 - cfg.window];
                if gain <= cfg.tolerance * trace[k - 1].abs().max(1e-3) {
                    converged = true;
                    break;
                }
            }
        }
        Ok((pt, trace, converged))
    }
}

fn random_hermitian(n: usize, scale: f64, rng: &mut SeededRng) -> ComplexMatrix {
    let a = ComplexMatrix::from_fn(n, n, |_, _| rng.complex_gaussian() * scale);
    linalg::symmetrize(&a)
}

/// `sup_{omega > 0} tr(rho ln omega) + 1 - tr(sigma omega)`, by gradient ascent over
/// `omega = exp(H)` from the identity and `cfg.random_restarts` random starts.
///
/// The value is certified from below by the returned witness; it cannot exceed the
/// relative entropy.
pub fn measured_relative_entropy(
    rho: &ComplexMatrix,
    sigma: &ComplexMatrix,
    cfg: &MsConfig,
) -> Result<MeasuredReSolution> {
    check_same_shape(rho, sigma)?;
    let rho = linalg::hermitize(rho)?;
    let sigma_raw = linalg::hermitize(sigma)?;
    let n = rho.nrows();
    let ss = linalg::eigh_unchecked(sigma_raw.clone())?;
    let regularized = ss.rank(ss.relative_cutoff()) < n;
    let sigma = if regularized {
        let tau = linalg::identity(n) * num_complex::Complex64::new(1.0 / n as f64, 0.0);
        &sigma_raw * num_complex::Complex64::new(1.0 - MS_REGULARIZATION, 0.0)
            + tau * num_complex::Complex64::new(MS_REGULARIZATION, 0.0)
    } else {
        sigma_raw
    };
    let problem = MsProblem {
        rho: &rho,
        sigma: &sigma,
    };
    let mut rng = SeededRng::new(cfg.seed);
    let mut best: Option<(MsPoint, Vec<f64>, bool)> = None;
    let mut any_converged = false;
    for restart in 0..=cfg.random_restarts {
        let start = if restart == 0 {
            ComplexMatrix::zeros(n, n)
        } else {
            random_hermitian(n, 1.0, &mut rng)
        };
        let run = problem.ascend(start, cfg)?;
        any_converged |= run.2;
        if best.as_ref().is_none_or(|b| run.0.value > b.0.value) {
            best = Some(run);
        }
    }
    let (pt, trace, _) = best.expect("at least one start");
    let witness = pt.spec.apply(f64::exp, f64::NEG_INFINITY);
    Ok(MeasuredReSolution {
        value_bits: pt.value / LN_2,
        witness,
        trace: trace.into_iter().map(|v| v / LN_2).collect(),
        converged: any_converged,
        regularized,
    })
}

// ---------------------------------------------------------------------------
// reports

/// Panel of distance measures between a state and a reconstruction of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "EntropyReportJson", try_from = "EntropyReportJson")]
pub struct EntropyReport {
    pub cmi_bits: f64,
    pub rel_ent_bits: f64,
    pub fidelity: f64,
    pub renyi_half_bits: f64,
    pub measured_re_bits: f64,
}

impl EntropyReport {
    /// Evaluates the panel for `rho_bcr` against `reconstructed`, which must have the
    /// same layout (it is reordered to match if the labels agree).
    pub fn evaluate(
        rho_bcr: &MultipartiteState,
        reconstructed: &MultipartiteState,
        ms: &MsConfig,
    ) -> Result<Self> {
        let sigma = reconstructed.reordered(&rho_bcr.labels())?;
        let rho = rho_bcr.matrix();
        let cmi_bits = cmi(rho_bcr, "C", "R", "B")?;
        let f = fidelity(rho, sigma.matrix())?;
        Ok(Self {
            cmi_bits,
            rel_ent_bits: relative_entropy(rho, sigma.matrix())?,
            fidelity: f,
            renyi_half_bits: renyi_half_from_fidelity(f),
            measured_re_bits: measured_relative_entropy(rho, sigma.matrix(), ms)?.value_bits,
        })
    }

    /// CMI clamped at zero for display; the raw value stays in `cmi_bits`.
    pub fn cmi_display(&self) -> f64 {
        self.cmi_bits.max(0.0)
    }
}

#[derive(Serialize, Deserialize)]
struct EntropyReportJson {
    cmi_bits: f64,
    cmi_bits_display: f64,
    rel_ent_bits: Option<f64>,
    rel_ent_infinite: bool,
    fidelity: f64,
    renyi_half_bits: Option<f64>,
    renyi_half_infinite: bool,
    measured_re_bits: f64,
}

fn finite_or_null(x: f64) -> (Option<f64>, bool) {
    if x.is_finite() {
        (Some(x), false)
    } else {
        (None, true)
    }
}

impl From<EntropyReport> for EntropyReportJson {
    fn from(r: EntropyReport) -> Self {
        let (rel_ent_bits, rel_ent_infinite) = finite_or_null(r.rel_ent_bits);
        let (renyi_half_bits, renyi_half_infinite) = finite_or_null(r.renyi_half_bits);
        Self {
            cmi_bits: r.cmi_bits,
            cmi_bits_display: r.cmi_display(),
            rel_ent_bits,
            rel_ent_infinite,
            fidelity: r.fidelity,
            renyi_half_bits,
            renyi_half_infinite,
            measured_re_bits: r.measured_re_bits,
        }
    }
}

impl TryFrom<EntropyReportJson> for EntropyReport {
    type Error = String;

    fn try_from(j: EntropyReportJson) -> std::result::Result<Self, String> {
        let pick = |v: Option<f64>, inf: bool, name: &str| match (v, inf) {
            (_, true) => Ok(f64::INFINITY),
            (Some(x), false) => Ok(x),
            (None, false) => Err(format!("`{name}` is null without its infinity flag")),
        };
        Ok(Self {
            cmi_bits: j.cmi_bits,
            rel_ent_bits: pick(j.rel_ent_bits, j.rel_ent_infinite, "rel_ent_bits")?,
            fidelity: j.fidelity,
            renyi_half_bits: pick(j.renyi_half_bits, j.renyi_half_infinite, "renyi_half_bits")?,
            measured_re_bits: j.measured_re_bits,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{bcr_layout, ghz, Subsystem};
    use num_complex::Complex64;

    fn diag(v: &[f64]) -> ComplexMatrix {
        let n = v.len();
        ComplexMatrix::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(v[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    fn h2(p: f64) -> f64 {
        -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
    }

    #[test]
    fn entropy_of_pure_and_mixed() {
        let mut rng = SeededRng::new(1);
        let p = MultipartiteState::random_pure(&bcr_layout([2, 2, 2]), &mut rng).unwrap();
        assert!(von_neumann(p.matrix()).unwrap().abs() < 1e-10);
        for d in [2usize, 3, 5, 8] {
            let t = linalg::identity(d) * Complex64::new(1.0 / d as f64, 0.0);
            assert!((von_neumann(&t).unwrap() - (d as f64).log2()).abs() < 1e-12);
        }
    }

    #[test]
    fn entropy_of_classical_example_spectrum() {
        let (d, eps) = (16usize, 0.1);
        let mut v = vec![eps / 15.0; d];
        v[0] = 1.0 - eps;
        // independent scalar evaluation
        let expect = h2(eps) + eps * 15f64.log2();
        let direct: f64 = v.iter().map(|p| -p * p.log2()).sum();
        assert!((direct - expect).abs() < 1e-13);
        assert!((von_neumann(&diag(&v)).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn cmi_of_product_and_ghz() {
        let mut rng = SeededRng::new(2);
        let c =
            MultipartiteState::random_mixed(&Subsystem::layout(&[("C", 2)]), 2, &mut rng).unwrap();
        let br =
            MultipartiteState::random_mixed(&Subsystem::layout(&[("B", 2), ("R", 3)]), 3, &mut rng)
                .unwrap();
        let s = c.tensor(&br).unwrap();
        assert!(cmi(&s, "C", "R", "B").unwrap().abs() < 1e-9);
        let g = ghz(&["B", "C", "R"]).unwrap();
        assert!((cmi(&g, "C", "R", "B").unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(
            cmi(&g, "C", "X", "B"),
            Err(Error::UnknownLabel(_))
        ));
    }

    #[test]
    fn cmi_pure_state_identity() {
        for seed in 0..20 {
            let mut rng = SeededRng::new(seed);
            let s = MultipartiteState::random_pure(&bcr_layout([2, 3, 2]), &mut rng).unwrap();
            let i = cmi(&s, "C", "R", "B").unwrap();
            let alt = marginal_entropy(&s, &["C"]).unwrap() + marginal_entropy(&s, &["R"]).unwrap()
                - marginal_entropy(&s, &["B"]).unwrap();
            assert!((i - alt).abs() < 1e-8);
        }
    }

    #[test]
    fn relative_entropy_cases() {
        let mut rng = SeededRng::new(3);
        let r =
            MultipartiteState::random_mixed(&Subsystem::layout(&[("X", 3)]), 3, &mut rng).unwrap();
        assert!(relative_entropy(r.matrix(), r.matrix()).unwrap().abs() < 1e-10);
        let a = diag(&[1.0, 0.0]);
        let b = diag(&[0.0, 1.0]);
        assert_eq!(relative_entropy(&a, &b).unwrap(), f64::INFINITY);
        let p = MultipartiteState::random_pure(&Subsystem::layout(&[("X", 4)]), &mut rng).unwrap();
        let tau = linalg::identity(4) * Complex64::new(0.25, 0.0);
        assert!((relative_entropy(p.matrix(), &tau).unwrap() - 2.0).abs() < 1e-10);
        assert!(relative_entropy(&a, &tau).is_err());
    }

    #[test]
    fn fidelity_cases() {
        let mut rng = SeededRng::new(4);
        let r =
            MultipartiteState::random_mixed(&Subsystem::layout(&[("X", 3)]), 2, &mut rng).unwrap();
        assert!((fidelity(r.matrix(), r.matrix()).unwrap() - 1.0).abs() < 1e-9);
        assert!(renyi_half(r.matrix(), r.matrix()).unwrap().abs() < 1e-8);

        let layout = Subsystem::layout(&[("X", 3)]);
        let psi = nalgebra::DVector::from_fn(3, |_, _| rng.complex_gaussian());
        let phi = nalgebra::DVector::from_fn(3, |_, _| rng.complex_gaussian());
        let overlap = (psi.adjoint() * &phi)[(0, 0)].norm() / (psi.norm() * phi.norm());
        let a = MultipartiteState::from_pure(&psi, layout.clone()).unwrap();
        let b = MultipartiteState::from_pure(&phi, layout).unwrap();
        assert!((fidelity(a.matrix(), b.matrix()).unwrap() - overlap).abs() < 1e-9);

        let zero = diag(&[1.0, 0.0]);
        let tau = diag(&[0.5, 0.5]);
        assert!((fidelity(&zero, &tau).unwrap() - 0.5f64.sqrt()).abs() < 1e-12);
        assert!((renyi_half(&zero, &tau).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fidelity_is_symmetric() {
        for seed in 0..20 {
            let mut rng = SeededRng::new(100 + seed);
            let l = Subsystem::layout(&[("X", 4)]);
            let a = MultipartiteState::random_mixed(&l, 2, &mut rng).unwrap();
            let b = MultipartiteState::random_mixed(&l, 3, &mut rng).unwrap();
            let f1 = fidelity(a.matrix(), b.matrix()).unwrap();
            let f2 = fidelity(b.matrix(), a.matrix()).unwrap();
            assert!((f1 - f2).abs() < 1e-9);
        }
    }

    #[test]
    fn measured_re_commuting_pair_is_classical_kl() {
        let p = [0.5, 0.3, 0.15, 0.05];
        let q = [0.1, 0.2, 0.3, 0.4];
        let kl = classical_relative_entropy(&p, &q).unwrap();
        let sol = measured_relative_entropy(&diag(&p), &diag(&q), &MsConfig::default()).unwrap();
        assert!(
            (sol.value_bits - kl).abs() < 1e-7,
            "{} vs {kl}",
            sol.value_bits
        );
    }

    #[test]
    fn measured_re_equal_states_is_zero() {
        let mut rng = SeededRng::new(5);
        let r =
            MultipartiteState::random_mixed(&Subsystem::layout(&[("X", 3)]), 3, &mut rng).unwrap();
        let sol = measured_relative_entropy(r.matrix(), r.matrix(), &MsConfig::default()).unwrap();
        assert!(sol.value_bits.abs() < 1e-9);
    }

    #[test]
    fn measured_re_witness_and_trace_contracts() {
        for seed in 0..10 {
            let mut rng = SeededRng::new(200 + seed);
            let l = Subsystem::layout(&[("X", 3)]);
            let a = MultipartiteState::random_mixed(&l, 3, &mut rng).unwrap();
            let b = MultipartiteState::random_mixed(&l, 3, &mut rng).unwrap();
            let sol =
                measured_relative_entropy(a.matrix(), b.matrix(), &MsConfig::default()).unwrap();
            let at_witness = ms_objective_bits(a.matrix(), b.matrix(), &sol.witness).unwrap();
            assert!((at_witness - sol.value_bits).abs() < 1e-8);
            assert!(sol.trace.windows(2).all(|w| w[1] >= w[0] - 1e-10));
            let s = relative_entropy(a.matrix(), b.matrix()).unwrap();
            assert!(sol.value_bits <= s + 1e-7);
            assert!(sol.converged);
        }
    }

    #[test]
    fn measured_re_rank_deficient_sigma() {
        let rho = diag(&[0.5, 0.5, 0.0]);
        let sigma = diag(&[0.7, 0.3, 0.0]);
        let sol = measured_relative_entropy(&rho, &sigma, &MsConfig::default()).unwrap();
        assert!(sol.regularized);
        let kl = classical_relative_entropy(&[0.5, 0.5, 0.0], &[0.7, 0.3, 0.0]).unwrap();
        assert!((sol.value_bits - kl).abs() < 1e-7);
    }

    #[test]
    fn ae_bound_values() {
        assert_eq!(ae_continuity_bound(4, 0.0, 0.3).unwrap(), 0.0);
        // 0.1*2 + min(0.1*log2(10), 1/(e ln2)) - 0.1*log2(0.05)/2, evaluated by hand:
        // 0.2 + 0.33219281 + 0.21609640 = 0.74828921
        let v = ae_continuity_bound(4, 0.1, 0.05).unwrap();
        assert!((v - 0.748_289_214).abs() < 1e-8, "{v}");
        assert!(ae_continuity_bound(4, 0.1, 0.0).is_err());
        assert!(ae_continuity_bound(4, 2.5, 0.1).is_err());
    }

    #[test]
    fn report_json_encodes_infinity_as_null() {
        let r = EntropyReport {
            cmi_bits: -1e-12,
            rel_ent_bits: f64::INFINITY,
            fidelity: 0.5,
            renyi_half_bits: 2.0,
            measured_re_bits: 1.0,
        };
        let s = serde_json::to_string(&r).unwrap();
        assert!(s.contains("\"rel_ent_bits\":null"));
        assert!(s.contains("\"rel_ent_infinite\":true"));
        assert!(s.contains("\"cmi_bits_display\":0.0"));
        let back: EntropyReport = serde_json::from_str(&s).unwrap();
        assert_eq!(back, r);
    }
}
