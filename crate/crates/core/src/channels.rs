//! Quantum channels in Choi form.
//!
//! The Choi matrix lives on `input ⊗ output` and is normalized so that
//! tracing out the output leaves the identity on the input:
//! `J = sum_ij |i><j| ⊗ Λ(|i><j|)`. With this convention
//! `Λ(π) = sum_ij π_ij J_ij`, where `J_ij` is the `(i, j)` output block,
//! and no dimension factors appear anywhere.

use std::path::Path;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix, ONE, ZERO};
use crate::rng::SeededRng;
use crate::states::{self, MultipartiteState, Subsystem};

/// Choi positivity tolerance (minimum eigenvalue).
pub const CHOI_PSD_TOL: f64 = 1e-9;
/// Trace-preservation tolerance on `max |tr_out J - I|`.
pub const TP_TOL: f64 = 1e-8;
/// Largest `max |V^dag V - I|` accepted when building an isometry.
pub const ISOMETRY_TOL: f64 = 1e-6;

fn total_dim(s: &[Subsystem]) -> usize {
    s.iter().map(|x| x.dim).product()
}

#[derive(Debug, Clone)]
pub struct Channel {
    choi: ComplexMatrix,
    input: Vec<Subsystem>,
    output: Vec<Subsystem>,
}

impl Channel {
    /// Validates complete positivity and trace preservation.
    pub fn from_choi(
        choi: ComplexMatrix,
        input: Vec<Subsystem>,
        output: Vec<Subsystem>,
    ) -> Result<Self> {
        let ch = Self::checked_layout(choi, input, output)?;
        let (min_eig, tp_err) = ch.cptp_defects()?;
        if min_eig < -CHOI_PSD_TOL {
            return Err(Error::InvalidChannel(format!(
                "Choi matrix is not positive (min eigenvalue {min_eig:e})"
            )));
        }
        if tp_err > TP_TOL {
            return Err(Error::InvalidChannel(format!(
                "not trace preserving (max |tr_out J - I| = {tp_err:e})"
            )));
        }
        Ok(ch)
    }

    fn checked_layout(
        choi: ComplexMatrix,
        input: Vec<Subsystem>,
        output: Vec<Subsystem>,
    ) -> Result<Self> {
        let d = linalg::check_square(&choi)?;
        let expected = total_dim(&input) * total_dim(&output);
        if d != expected {
            return Err(Error::DimensionMismatch { expected, got: d });
        }
        for list in [&input, &output] {
            let mut seen = std::collections::HashSet::new();
            for s in list.iter() {
                if s.dim == 0 || !seen.insert(&s.label) {
                    return Err(Error::InvalidLayout(format!(
                        "bad channel subsystem `{}`",
                        s.label
                    )));
                }
            }
        }
        let choi = linalg::hermitize(&choi)?;
        Ok(Self {
            choi,
            input,
            output,
        })
    }

    pub(crate) fn from_parts(
        choi: ComplexMatrix,
        input: Vec<Subsystem>,
        output: Vec<Subsystem>,
    ) -> Self {
        Self {
            choi: linalg::symmetrize(&choi),
            input,
            output,
        }
    }

    /// `(min eigenvalue of J, max |tr_out J - I_in|)`.
    pub fn cptp_defects(&self) -> Result<(f64, f64)> {
        let min_eig = linalg::eigh_unchecked(self.choi.clone())?.min();
        let reduced = states::partial_trace_matrix(&self.choi, &[self.d_in(), self.d_out()], &[0]);
        let tp_err = linalg::max_abs(&(reduced - linalg::identity(self.d_in())));
        Ok((min_eig, tp_err))
    }

    pub fn is_cptp(&self) -> bool {
        matches!(self.cptp_defects(), Ok((m, t)) if m >= -CHOI_PSD_TOL && t <= TP_TOL)
    }

    pub fn choi(&self) -> &ComplexMatrix {
        &self.choi
    }

    pub fn input(&self) -> &[Subsystem] {
        &self.input
    }

    pub fn output(&self) -> &[Subsystem] {
        &self.output
    }

    pub fn d_in(&self) -> usize {
        total_dim(&self.input)
    }

    pub fn d_out(&self) -> usize {
        total_dim(&self.output)
    }

    /// `Λ(|i><j|)`.
    pub fn block(&self, i: usize, j: usize) -> ComplexMatrix {
        let d = self.d_out();
        self.choi.view((i * d, j * d), (d, d)).into_owned()
    }

    /// `Λ(π)` for an operator on the input space.
    pub fn apply_matrix(&self, pi: &ComplexMatrix) -> Result<ComplexMatrix> {
        let n = self.d_in();
        if pi.nrows() != n || pi.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: pi.nrows(),
            });
        }
        let d = self.d_out();
        let mut out = ComplexMatrix::zeros(d, d);
        for i in 0..n {
            for j in 0..n {
                let w = pi[(i, j)];
                if w == ZERO {
                    continue;
                }
                out += self.choi.view((i * d, j * d), (d, d)) * w;
            }
        }
        Ok(out)
    }

    /// Applies `self ⊗ id` to the subsystems `on` of `s`.
    ///
    /// `on` must list the channel's input labels in order. The output subsystems
    /// take the place of the first input subsystem; the rest keep their order.
    pub fn apply(&self, s: &MultipartiteState, on: &[&str]) -> Result<MultipartiteState> {
        if on.len() != self.input.len() {
            return Err(Error::InvalidArgument(format!(
                "channel acts on {} subsystems, got {}",
                self.input.len(),
                on.len()
            )));
        }
        for (l, sub) in on.iter().zip(&self.input) {
            if *l != sub.label {
                return Err(Error::InvalidArgument(format!(
                    "channel input `{}` does not match `{l}`",
                    sub.label
                )));
            }
            if s.dim_of(l)? != sub.dim {
                return Err(Error::DimensionMismatch {
                    expected: sub.dim,
                    got: s.dim_of(l)?,
                });
            }
        }
        let labels = s.labels();
        let rest: Vec<&str> = labels.iter().copied().filter(|l| !on.contains(l)).collect();
        for o in &self.output {
            if rest.contains(&o.label.as_str()) {
                return Err(Error::DuplicateLabel(o.label.clone()));
            }
        }
        let mut order: Vec<&str> = on.to_vec();
        order.extend(&rest);
        let moved = s.reordered(&order)?;
        let d_rest: usize = rest.iter().map(|l| s.dim_of(l).unwrap_or(1)).product();
        let (n, d) = (self.d_in(), self.d_out());
        let m = moved.matrix();
        let mut out = ComplexMatrix::zeros(d * d_rest, d * d_rest);
        for i in 0..n {
            for j in 0..n {
                let rho_ij = m.view((i * d_rest, j * d_rest), (d_rest, d_rest));
                let lam_ij = self.choi.view((i * d, j * d), (d, d));
                out += lam_ij.kronecker(&rho_ij);
            }
        }
        let mut subs: Vec<Subsystem> = self.output.clone();
        for l in &rest {
            subs.push(Subsystem::new(*l, s.dim_of(l)?));
        }
        let raw = MultipartiteState::from_parts(out, subs);

        // put the output where the first input used to be
        let first = labels.iter().position(|l| on.contains(l)).unwrap_or(0);
        let mut final_order: Vec<&str> = Vec::new();
        let mut placed = false;
        for (k, l) in labels.iter().enumerate() {
            if on.contains(l) {
                if !placed && k >= first {
                    final_order.extend(self.output.iter().map(|o| o.label.as_str()));
                    placed = true;
                }
            } else {
                final_order.push(l);
            }
        }
        raw.reordered(&final_order)
    }

    /// `next ∘ self`.
    pub fn then(&self, next: &Channel) -> Result<Channel> {
        if next.d_in() != self.d_out() {
            return Err(Error::DimensionMismatch {
                expected: self.d_out(),
                got: next.d_in(),
            });
        }
        let (n, d) = (self.d_in(), next.d_out());
        let mut choi = ComplexMatrix::zeros(n * d, n * d);
        for i in 0..n {
            for j in 0..n {
                let b = next.apply_matrix(&self.block(i, j))?;
                choi.view_mut((i * d, j * d), (d, d)).copy_from(&b);
            }
        }
        Ok(Self::from_parts(
            choi,
            self.input.clone(),
            next.output.clone(),
        ))
    }

    /// Kraus operators (`d_out × d_in`) from the Choi eigendecomposition, largest first.
    pub fn kraus(&self) -> Result<Vec<ComplexMatrix>> {
        let spec = linalg::eigh_unchecked(self.choi.clone())?;
        let cutoff = spec.relative_cutoff();
        let (n, d) = (self.d_in(), self.d_out());
        let mut ops = Vec::new();
        for k in (0..spec.dim()).rev() {
            let l = spec.eigenvalues[k];
            if l <= cutoff {
                continue;
            }
            let w = l.sqrt();
            let v = spec.eigenvectors.column(k);
            ops.push(ComplexMatrix::from_fn(d, n, |o, i| v[i * d + o] * w));
        }
        Ok(ops)
    }

    /// Stinespring isometry with environment dimension `d_env`, rows ordered `(output, env)`.
    pub fn to_isometry(&self, d_env: usize) -> Result<Isometry> {
        let kraus = self.kraus()?;
        if kraus.len() > d_env {
            return Err(Error::InvalidArgument(format!(
                "Kraus rank {} exceeds environment dimension {d_env}",
                kraus.len()
            )));
        }
        Isometry::from_kraus(&kraus, d_env)
    }

    pub fn to_file_format(&self) -> ChannelFile {
        let (re, im) = states::split_matrix(&self.choi);
        ChannelFile {
            input: self.input.clone(),
            output: self.output.clone(),
            matrix_re: re,
            matrix_im: im,
        }
    }

    pub fn from_file_format(f: ChannelFile) -> Result<Self> {
        let m = states::join_matrix(&f.matrix_re, &f.matrix_im)?;
        Self::from_choi(m, f.input, f.output)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(&self.to_file_format()).map_err(|source| Error::Json {
            context: "serializing channel".into(),
            source,
        })
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let f: ChannelFile = serde_json::from_str(s).map_err(|source| Error::Json {
            context: "parsing channel".into(),
            source,
        })?;
        Self::from_file_format(f)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|source| Error::Io {
            context: format!("reading {}", path.display()),
            source,
        })?;
        Self::from_json(&s)
    }
}

/// On-disk JSON form of a channel: the Choi matrix plus input/output layouts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelFile {
    pub input: Vec<Subsystem>,
    pub output: Vec<Subsystem>,
    pub matrix_re: Vec<Vec<f64>>,
    pub matrix_im: Vec<Vec<f64>>,
}

impl Serialize for Channel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_file_format().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Channel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let f = ChannelFile::deserialize(d)?;
        Channel::from_file_format(f).map_err(serde::de::Error::custom)
    }
}

/// The identity channel on `subsystems`.
pub fn identity(subsystems: Vec<Subsystem>) -> Channel {
    let n = total_dim(&subsystems);
    let mut choi = ComplexMatrix::zeros(n * n, n * n);
    for i in 0..n {
        for j in 0..n {
            choi[(i * n + i, j * n + j)] = ONE;
        }
    }
    Channel::from_parts(choi, subsystems.clone(), subsystems)
}

/// Constant channel to the maximally mixed state on `output`.
pub fn depolarizing(input: Vec<Subsystem>, output: Vec<Subsystem>) -> Channel {
    let (n, d) = (total_dim(&input), total_dim(&output));
    let tau = linalg::identity(d) * Complex64::new(1.0 / d as f64, 0.0);
    Channel::from_parts(linalg::kron(&linalg::identity(n), &tau), input, output)
}

/// Constant channel `π ↦ tr(π) σ`.
pub fn replacement(input: Vec<Subsystem>, sigma: &MultipartiteState) -> Channel {
    let n = total_dim(&input);
    Channel::from_parts(
        linalg::kron(&linalg::identity(n), sigma.matrix()),
        input,
        sigma.subsystems().to_vec(),
    )
}

/// `π ↦ π ⊗ σ`: keeps the input and attaches a fixed state after it.
pub fn attach(input: Vec<Subsystem>, sigma: &MultipartiteState) -> Result<Channel> {
    let id = identity(input.clone());
    let n = id.d_in();
    let d = n * sigma.dim();
    let mut choi = ComplexMatrix::zeros(n * d, n * d);
    for i in 0..n {
        for j in 0..n {
            choi.view_mut((i * d, j * d), (d, d))
                .copy_from(&linalg::kron(&id.block(i, j), sigma.matrix()));
        }
    }
    let mut output = input.clone();
    for s in sigma.subsystems() {
        if output.iter().any(|o| o.label == s.label) {
            return Err(Error::DuplicateLabel(s.label.clone()));
        }
        output.push(s.clone());
    }
    Ok(Channel::from_parts(choi, input, output))
}

/// Convex combination `w·a + (1-w)·b`.
pub fn mix(a: &Channel, b: &Channel, w: f64) -> Result<Channel> {
    if !(0.0..=1.0).contains(&w) {
        return Err(Error::InvalidArgument(format!(
            "mixing weight must lie in [0, 1], got {w}"
        )));
    }
    if a.input != b.input || a.output != b.output {
        return Err(Error::InvalidArgument(
            "mixed channels must share input and output layouts".into(),
        ));
    }
    Ok(Channel::from_parts(
        a.choi() * Complex64::new(w, 0.0) + b.choi() * Complex64::new(1.0 - w, 0.0),
        a.input.clone(),
        a.output.clone(),
    ))
}

// ---------------------------------------------------------------------------
// transpose channel

/// What the transpose channel does with input weight outside the support of `rho_B`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Completion {
    /// Add `tr[(I - Π_B) π] · rho_BC`.
    #[default]
    AttachRhoBc,
    /// Add `tr[(I - Π_B) π] · τ_BC`.
    MaximallyMixed,
}

/// The transpose (Petz) recovery channel `B → BC` built from `rho_bc`:
/// `T(π) = √ρ_BC (ρ_B^{-1/2} π ρ_B^{-1/2} ⊗ I_C) √ρ_BC`, completed off the support of
/// `ρ_B` with `tr[(I - Π_B) π] ρ_BC`.
pub fn transpose_channel(rho_bc: &MultipartiteState, b: &str, c: &str) -> Result<Channel> {
    transpose_channel_with(rho_bc, b, c, Completion::AttachRhoBc)
}

pub fn transpose_channel_with(
    rho_bc: &MultipartiteState,
    b: &str,
    c: &str,
    completion: Completion,
) -> Result<Channel> {
    if rho_bc.subsystems().len() != 2 {
        return Err(Error::InvalidArgument(
            "transpose channel needs a bipartite state".into(),
        ));
    }
    let bc = rho_bc.reordered(&[b, c])?;
    let (d_b, d_c) = (bc.dim_of(b)?, bc.dim_of(c)?);
    let rho_b = bc.partial_trace(&[b])?;
    let spec_b = linalg::eigh(rho_b.matrix())?;
    let cutoff = spec_b.relative_cutoff();
    let inv_sqrt_b = spec_b.apply(|x| 1.0 / x.sqrt(), cutoff);
    let off_support = linalg::identity(d_b) - spec_b.support_projector(cutoff);
    let sqrt_bc = linalg::sqrtm(bc.matrix())?;
    let fill = match completion {
        Completion::AttachRhoBc => bc.matrix().clone(),
        Completion::MaximallyMixed => {
            linalg::identity(d_b * d_c) * Complex64::new(1.0 / (d_b * d_c) as f64, 0.0)
        }
    };
    let id_c = linalg::identity(d_c);
    let d = d_b * d_c;
    let mut choi = ComplexMatrix::zeros(d_b * d, d_b * d);
    for i in 0..d_b {
        for j in 0..d_b {
            // A|i><j|A = (column i of A)(column j of A)^dag since A is Hermitian
            let a_i = inv_sqrt_b.column(i);
            let a_j = inv_sqrt_b.column(j);
            let inner = a_i * a_j.adjoint();
            let mut block = &sqrt_bc * linalg::kron(&inner, &id_c) * &sqrt_bc;
            let w = off_support[(j, i)];
            if w.norm() > 0.0 {
                block += &fill * w;
            }
            choi.view_mut((i * d, j * d), (d, d)).copy_from(&block);
        }
    }
    let input = vec![Subsystem::new(b, d_b)];
    let output = bc.subsystems().to_vec();
    Ok(Channel::from_parts(choi, input, output))
}

/// `tr[(I - Π_B) π]`: the weight of `pi` that the transpose-channel completion handles.
pub fn off_support_weight(rho_bc: &MultipartiteState, b: &str, pi: &ComplexMatrix) -> Result<f64> {
    let rho_b = rho_bc.partial_trace(&[b])?;
    let spec = linalg::eigh(rho_b.matrix())?;
    let q = linalg::identity(spec.dim()) - spec.support_projector(spec.relative_cutoff());
    Ok(linalg::trace_product_re(&q, pi))
}

// ---------------------------------------------------------------------------
// Stinespring isometries

/// An isometry `V` (`d_out·d_env × d_in`) with `V^dag V = I`.
#[derive(Debug, Clone)]
pub struct Isometry {
    matrix: ComplexMatrix,
}

impl Isometry {
    /// Accepts `V` when `max |V^dag V - I| <= 1e-6`, then snaps it to the nearest isometry.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        linalg::check_finite(&matrix)?;
        if matrix.nrows() < matrix.ncols() {
            return Err(Error::InvalidArgument(format!(
                "isometry must be tall, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let defect = isometry_defect(&matrix);
        if defect > ISOMETRY_TOL {
            return Err(Error::NotIsometry(defect));
        }
        Ok(Self {
            matrix: polar_project(&matrix)?,
        })
    }

    pub(crate) fn from_orthonormal(matrix: ComplexMatrix) -> Self {
        debug_assert!(isometry_defect(&matrix) < 1e-8);
        Self { matrix }
    }

    /// Stacks Kraus operators `K_e` into `V[(o, e), i] = K_e[o, i]`, zero-padding to `d_env`.
    pub fn from_kraus(kraus: &[ComplexMatrix], d_env: usize) -> Result<Self> {
        let first = kraus
            .first()
            .ok_or_else(|| Error::InvalidArgument("no Kraus operators".into()))?;
        let (d_out, d_in) = first.shape();
        let mut v = ComplexMatrix::zeros(d_out * d_env, d_in);
        for (e, k) in kraus.iter().enumerate() {
            for o in 0..d_out {
                for i in 0..d_in {
                    v[(o * d_env + e, i)] = k[(o, i)];
                }
            }
        }
        Self::new(v)
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn d_in(&self) -> usize {
        self.matrix.ncols()
    }
}

pub fn isometry_defect(v: &ComplexMatrix) -> f64 {
    linalg::max_abs(&(v.adjoint() * v - linalg::identity(v.ncols())))
}

/// `V (V^dag V)^{-1/2}`, the closest isometry in Frobenius norm.
pub(crate) fn polar_project(v: &ComplexMatrix) -> Result<ComplexMatrix> {
    let gram = v.adjoint() * v;
    let s = linalg::eigh(&gram)?;
    if s.min() <= 0.0 {
        return Err(Error::NotIsometry(isometry_defect(v)));
    }
    Ok(v * s.apply(|x| 1.0 / x.sqrt(), 0.0))
}

/// `Λ(π) = tr_env(V π V^dag)` as a channel; `V` rows are ordered `(output, env)`.
pub fn stinespring_to_channel(
    v: &Isometry,
    input: Vec<Subsystem>,
    output: Vec<Subsystem>,
    d_env: usize,
) -> Result<Channel> {
    let (n, d) = (total_dim(&input), total_dim(&output));
    if v.matrix.ncols() != n || v.matrix.nrows() != d * d_env {
        return Err(Error::DimensionMismatch {
            expected: d * d_env,
            got: v.matrix.nrows(),
        });
    }
    let m = &v.matrix;
    let mut choi = ComplexMatrix::zeros(n * d, n * d);
    for i in 0..n {
        for j in 0..n {
            for o in 0..d {
                for p in 0..d {
                    let mut acc = ZERO;
                    for e in 0..d_env {
                        acc += m[(o * d_env + e, i)] * m[(p * d_env + e, j)].conj();
                    }
                    choi[(i * d + o, j * d + p)] = acc;
                }
            }
        }
    }
    Ok(Channel::from_parts(choi, input, output))
}

/// Haar-random isometry `d_in → d_out`: Gram–Schmidt on a complex Gaussian matrix.
pub fn random_isometry(d_in: usize, d_out: usize, rng: &mut SeededRng) -> Result<Isometry> {
    if d_out < d_in || d_in == 0 {
        return Err(Error::InvalidArgument(format!(
            "no isometry from dimension {d_in} into {d_out}"
        )));
    }
    let g = ComplexMatrix::from_fn(d_out, d_in, |_, _| rng.complex_gaussian());
    Ok(Isometry::from_orthonormal(gram_schmidt(&g)))
}

/// Modified Gram–Schmidt on the columns (QR with positive `R` diagonal).
pub fn gram_schmidt(a: &ComplexMatrix) -> ComplexMatrix {
    let mut q = a.clone();
    for k in 0..q.ncols() {
        for _ in 0..2 {
            for j in 0..k {
                let qj: DVector<Complex64> = q.column(j).into_owned();
                let proj = (qj.adjoint() * q.column(k))[(0, 0)];
                let mut col = q.column_mut(k);
                col -= qj * proj;
            }
        }
        let norm = q.column(k).norm();
        let mut col = q.column_mut(k);
        col /= Complex64::new(norm, 0.0);
    }
    q
}

/// Random channel through a Haar-random Stinespring isometry with environment `d_env`.
pub fn random_channel(
    input: Vec<Subsystem>,
    output: Vec<Subsystem>,
    d_env: usize,
    rng: &mut SeededRng,
) -> Result<Channel> {
    if d_env == 0 {
        return Err(Error::InvalidArgument(
            "environment dimension must be >= 1".into(),
        ));
    }
    let (n, d) = (total_dim(&input), total_dim(&output));
    let v = random_isometry(n, d * d_env, rng)?;
    stinespring_to_channel(&v, input, output, d_env)
}

/// Default environment dimension for random channels, `d_in · d_out`.
pub fn default_env_dim(input: &[Subsystem], output: &[Subsystem]) -> usize {
    total_dim(input) * total_dim(output)
}
