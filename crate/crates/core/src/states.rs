//! Multipartite density matrices with labeled subsystems.
//!
//! Subsystem order is significant: the matrix is laid out as the Kronecker
//! product of the subsystems in list order, and every operation preserves
//! the relative order of the labels it keeps. Reordering is explicit via
//! [`MultipartiteState::reordered`].

use std::path::Path;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix, ONE, ZERO};
use crate::rng::SeededRng;

/// Tolerance on Hermiticity, trace and positivity when validating a state.
pub const STATE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subsystem {
    pub label: String,
    pub dim: usize,
}

impl Subsystem {
    pub fn new(label: impl Into<String>, dim: usize) -> Self {
        Self {
            label: label.into(),
            dim,
        }
    }

    /// Builds a layout from `(label, dim)` pairs.
    pub fn layout(pairs: &[(&str, usize)]) -> Vec<Subsystem> {
        pairs.iter().map(|(l, d)| Subsystem::new(*l, *d)).collect()
    }
}

/// Labels used for tripartite layouts throughout the crate.
pub const TRIPARTITE_LABELS: [&str; 3] = ["B", "C", "R"];

/// `B, C, R` layout with the given dimensions.
pub fn bcr_layout(dims: [usize; 3]) -> Vec<Subsystem> {
    TRIPARTITE_LABELS
        .iter()
        .zip(dims)
        .map(|(l, d)| Subsystem::new(*l, d))
        .collect()
}

fn validate_layout(subsystems: &[Subsystem]) -> Result<usize> {
    let mut seen = std::collections::HashSet::new();
    let mut total = 1usize;
    for s in subsystems {
        if s.dim == 0 {
            return Err(Error::InvalidLayout(format!(
                "subsystem `{}` has dimension 0",
                s.label
            )));
        }
        if !seen.insert(s.label.as_str()) {
            return Err(Error::DuplicateLabel(s.label.clone()));
        }
        total = total
            .checked_mul(s.dim)
            .ok_or_else(|| Error::InvalidLayout("dimension overflow".into()))?;
    }
    Ok(total)
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut st = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        st[k] = st[k + 1] * dims[k + 1];
    }
    st
}

/// Full-matrix offsets of every multi-index over the subsystems `which`.
fn offsets(dims: &[usize], which: &[usize]) -> Vec<usize> {
    let st = strides(dims);
    let mut out = vec![0usize];
    for &k in which {
        let mut next = Vec::with_capacity(out.len() * dims[k]);
        for &base in &out {
            for digit in 0..dims[k] {
                next.push(base + digit * st[k]);
            }
        }
        out = next;
    }
    out
}

/// Partial trace of a matrix laid out over `dims`, keeping the subsystem indices in `keep`
/// (in the order given).
pub fn partial_trace_matrix(m: &ComplexMatrix, dims: &[usize], keep: &[usize]) -> ComplexMatrix {
    let traced: Vec<usize> = (0..dims.len()).filter(|k| !keep.contains(k)).collect();
    let keep_off = offsets(dims, keep);
    let trace_off = offsets(dims, &traced);
    let n = keep_off.len();
    let mut out = ComplexMatrix::zeros(n, n);
    for (i, &ri) in keep_off.iter().enumerate() {
        for (j, &cj) in keep_off.iter().enumerate() {
            let mut acc = ZERO;
            for &t in &trace_off {
                acc += m[(ri + t, cj + t)];
            }
            out[(i, j)] = acc;
        }
    }
    out
}

/// Reorders the tensor factors of `m`: new factor `k` is old factor `perm[k]`.
pub fn permute_matrix(m: &ComplexMatrix, dims: &[usize], perm: &[usize]) -> ComplexMatrix {
    let map = offsets(dims, perm);
    let n = map.len();
    ComplexMatrix::from_fn(n, n, |i, j| m[(map[i], map[j])])
}

/// A density matrix over an ordered list of labeled subsystems.
#[derive(Debug, Clone)]
pub struct MultipartiteState {
    matrix: ComplexMatrix,
    subsystems: Vec<Subsystem>,
}

impl MultipartiteState {
    /// Validates and wraps a density matrix. Small Hermitian asymmetry is symmetrized away.
    pub fn new(matrix: ComplexMatrix, subsystems: Vec<Subsystem>) -> Result<Self> {
        let total = validate_layout(&subsystems)?;
        let d = linalg::check_square(&matrix)?;
        if d != total {
            return Err(Error::DimensionMismatch {
                expected: total,
                got: d,
            });
        }
        let matrix = linalg::hermitize(&matrix)?;
        let tr = linalg::trace(&matrix).re;
        if (tr - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidTrace(tr));
        }
        let min = linalg::eigh_unchecked(matrix.clone())?.min();
        if min < -STATE_TOL {
            return Err(Error::NotPositive(min));
        }
        Ok(Self { matrix, subsystems })
    }

    /// Wraps a matrix the caller already knows to be a valid state (up to rounding).
    pub(crate) fn from_parts(matrix: ComplexMatrix, subsystems: Vec<Subsystem>) -> Self {
        debug_assert_eq!(
            matrix.nrows(),
            subsystems.iter().map(|s| s.dim).product::<usize>()
        );
        Self {
            matrix: linalg::symmetrize(&matrix),
            subsystems,
        }
    }

    /// `|psi><psi|` for a vector normalized here.
    pub fn from_pure(psi: &DVector<Complex64>, subsystems: Vec<Subsystem>) -> Result<Self> {
        let total = validate_layout(&subsystems)?;
        if psi.len() != total {
            return Err(Error::DimensionMismatch {
                expected: total,
                got: psi.len(),
            });
        }
        let norm = psi.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidArgument("state vector has zero norm".into()));
        }
        let v = psi / Complex64::new(norm, 0.0);
        Ok(Self::from_parts(&v * v.adjoint(), subsystems))
    }

    /// Maximally mixed state on the layout.
    pub fn maximally_mixed(subsystems: Vec<Subsystem>) -> Result<Self> {
        let d = validate_layout(&subsystems)?;
        Ok(Self::from_parts(
            linalg::identity(d) * Complex64::new(1.0 / d as f64, 0.0),
            subsystems,
        ))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn subsystems(&self) -> &[Subsystem] {
        &self.subsystems
    }

    pub fn labels(&self) -> Vec<&str> {
        self.subsystems.iter().map(|s| s.label.as_str()).collect()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.subsystems.iter().map(|s| s.dim).collect()
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.subsystems
            .iter()
            .position(|s| s.label == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn dim_of(&self, label: &str) -> Result<usize> {
        Ok(self.subsystems[self.index_of(label)?].dim)
    }

    pub fn purity(&self) -> f64 {
        linalg::trace_product_re(&self.matrix, &self.matrix)
    }

    pub fn trace(&self) -> f64 {
        linalg::trace(&self.matrix).re
    }

    /// Reduced state on `keep`; the kept labels stay in their original relative order.
    pub fn partial_trace(&self, keep: &[&str]) -> Result<Self> {
        if keep.is_empty() {
            return Err(Error::InvalidArgument(
                "partial trace must keep at least one subsystem".into(),
            ));
        }
        let mut idx = Vec::with_capacity(keep.len());
        for l in keep {
            let i = self.index_of(l)?;
            if idx.contains(&i) {
                return Err(Error::DuplicateLabel(l.to_string()));
            }
            idx.push(i);
        }
        idx.sort_unstable();
        let m = partial_trace_matrix(&self.matrix, &self.dims(), &idx);
        let subs = idx.iter().map(|&i| self.subsystems[i].clone()).collect();
        Ok(Self::from_parts(m, subs))
    }

    /// Traces out the listed subsystems.
    pub fn trace_out(&self, labels: &[&str]) -> Result<Self> {
        for l in labels {
            self.index_of(l)?;
        }
        let keep: Vec<&str> = self
            .labels()
            .into_iter()
            .filter(|l| !labels.contains(l))
            .collect();
        self.partial_trace(&keep)
    }

    /// Kronecker product with `other`, labels concatenated.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        for s in &other.subsystems {
            if self.subsystems.iter().any(|t| t.label == s.label) {
                return Err(Error::DuplicateLabel(s.label.clone()));
            }
        }
        let mut subs = self.subsystems.clone();
        subs.extend(other.subsystems.iter().cloned());
        Ok(Self::from_parts(
            linalg::kron(&self.matrix, &other.matrix),
            subs,
        ))
    }

    /// The same state with subsystems permuted into the order `labels`.
    pub fn reordered(&self, labels: &[&str]) -> Result<Self> {
        if labels.len() != self.subsystems.len() {
            return Err(Error::InvalidArgument(format!(
                "reorder needs all {} labels, got {}",
                self.subsystems.len(),
                labels.len()
            )));
        }
        let mut perm = Vec::with_capacity(labels.len());
        for l in labels {
            let i = self.index_of(l)?;
            if perm.contains(&i) {
                return Err(Error::DuplicateLabel(l.to_string()));
            }
            perm.push(i);
        }
        let m = permute_matrix(&self.matrix, &self.dims(), &perm);
        let subs = perm.iter().map(|&i| self.subsystems[i].clone()).collect();
        Ok(Self::from_parts(m, subs))
    }

    /// A pure state on `self ⊗ ancilla` whose marginal is `self`.
    ///
    /// The ancilla dimension is the rank of the state (at least 1). For
    /// `rho = sum_k l_k |v_k><v_k|` the vector is `sum_k sqrt(l_k) |v_k>|k>`.
    pub fn purify(&self, ancilla_label: &str) -> Result<Self> {
        if self.subsystems.iter().any(|s| s.label == ancilla_label) {
            return Err(Error::DuplicateLabel(ancilla_label.to_string()));
        }
        let spec = linalg::eigh_unchecked(self.matrix.clone())?;
        let cutoff = spec.relative_cutoff();
        let support: Vec<usize> = (0..spec.dim())
            .rev()
            .filter(|&k| spec.eigenvalues[k] > cutoff)
            .collect();
        let anc = support.len().max(1);
        let d = self.dim();
        let mut psi = DVector::from_element(d * anc, ZERO);
        for (a, &k) in support.iter().enumerate() {
            let w = spec.eigenvalues[k].sqrt();
            for i in 0..d {
                psi[i * anc + a] += spec.eigenvectors[(i, k)] * w;
            }
        }
        let mut subs = self.subsystems.clone();
        subs.push(Subsystem::new(ancilla_label, anc));
        Self::from_pure(&psi, subs)
    }

    /// Haar-random pure state: a normalized i.i.d. standard complex Gaussian vector.
    pub fn random_pure(subsystems: &[Subsystem], rng: &mut SeededRng) -> Result<Self> {
        let d = validate_layout(subsystems)?;
        let psi = DVector::from_fn(d, |_, _| rng.complex_gaussian());
        Self::from_pure(&psi, subsystems.to_vec())
    }

    /// Marginal of a Haar-random pure state on `subsystems ⊗ ancilla(ancilla_dim)`.
    pub fn random_mixed(
        subsystems: &[Subsystem],
        ancilla_dim: usize,
        rng: &mut SeededRng,
    ) -> Result<Self> {
        let anc = "__ancilla";
        let mut layout = subsystems.to_vec();
        layout.push(Subsystem::new(anc, ancilla_dim));
        let pure = Self::random_pure(&layout, rng)?;
        pure.trace_out(&[anc])
    }

    /// Diagonal state in the computational product basis from a probability table
    /// in row-major order over the layout.
    pub fn classical(p: &[f64], subsystems: Vec<Subsystem>) -> Result<Self> {
        let d = validate_layout(&subsystems)?;
        if p.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: p.len(),
            });
        }
        if let Some(x) = p.iter().find(|x| !(**x >= 0.0) || !x.is_finite()) {
            return Err(Error::InvalidDistribution(format!(
                "entry {x} is negative or not finite"
            )));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidDistribution(format!(
                "entries sum to {total}, not 1"
            )));
        }
        let diag = DVector::from_iterator(d, p.iter().map(|&x| Complex64::new(x, 0.0)));
        Ok(Self::from_parts(
            ComplexMatrix::from_diagonal(&diag),
            subsystems,
        ))
    }

    /// `rho_CR ⊗ I_B / 2` on `(C, B, R)` with
    /// `rho_CR = (1-eps)|00><00| + eps/(d-1) sum_{k>=1} |kk><kk|`.
    pub fn classical_example(d: usize, eps: f64) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidArgument(format!("need d >= 2, got {d}")));
        }
        if !(0.0..=1.0).contains(&eps) {
            return Err(Error::InvalidArgument(format!(
                "eps must lie in [0, 1], got {eps}"
            )));
        }
        let d_b = 2;
        let layout = Subsystem::layout(&[("C", d), ("B", d_b), ("R", d)]);
        let mut p = vec![0.0; d * d_b * d];
        for k in 0..d {
            let w = if k == 0 {
                1.0 - eps
            } else {
                eps / (d - 1) as f64
            };
            for b in 0..d_b {
                p[(k * d_b + b) * d + k] = w / d_b as f64;
            }
        }
        // renormalize against rounding in eps/(d-1)
        let total: f64 = p.iter().sum();
        p.iter_mut().for_each(|x| *x /= total);
        Self::classical(&p, layout)
    }

    pub fn to_file_format(&self) -> StateFile {
        let (re, im) = split_matrix(&self.matrix);
        StateFile {
            subsystems: self.subsystems.clone(),
            matrix_re: re,
            matrix_im: im,
        }
    }

    pub fn from_file_format(f: StateFile) -> Result<Self> {
        let m = join_matrix(&f.matrix_re, &f.matrix_im)?;
        Self::new(m, f.subsystems)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(&self.to_file_format()).map_err(|source| Error::Json {
            context: "serializing state".into(),
            source,
        })
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let f: StateFile = serde_json::from_str(s).map_err(|source| Error::Json {
            context: "parsing state".into(),
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

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|source| Error::Io {
            context: format!("writing {}", path.display()),
            source,
        })
    }
}

/// On-disk JSON form of a state.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateFile {
    pub subsystems: Vec<Subsystem>,
    pub matrix_re: Vec<Vec<f64>>,
    pub matrix_im: Vec<Vec<f64>>,
}

pub(crate) fn split_matrix(m: &ComplexMatrix) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let re = (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)].re).collect())
        .collect();
    let im = (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)].im).collect())
        .collect();
    (re, im)
}

pub(crate) fn join_matrix(re: &[Vec<f64>], im: &[Vec<f64>]) -> Result<ComplexMatrix> {
    let n = re.len();
    if im.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: im.len(),
        });
    }
    let mut m = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        if re[i].len() != n || im[i].len() != n {
            return Err(Error::NotSquare(n, re[i].len().max(im[i].len())));
        }
        for j in 0..n {
            m[(i, j)] = Complex64::new(re[i][j], im[i][j]);
        }
    }
    linalg::check_finite(&m)?;
    Ok(m)
}

/// `(|0...0> + |1...1>)/sqrt(2)` on qubits with the given labels.
pub fn ghz(labels: &[&str]) -> Result<MultipartiteState> {
    let layout: Vec<Subsystem> = labels.iter().map(|l| Subsystem::new(*l, 2)).collect();
    let d = 1usize << labels.len();
    let mut psi = DVector::from_element(d, ZERO);
    psi[0] = ONE;
    psi[d - 1] = ONE;
    MultipartiteState::from_pure(&psi, layout)
}

/// `(|00> + |11> + ... )/sqrt(d)` on two `d`-dimensional systems.
pub fn maximally_entangled(a: &str, b: &str, d: usize) -> Result<MultipartiteState> {
    let mut psi = DVector::from_element(d * d, ZERO);
    for k in 0..d {
        psi[k * d + k] = ONE;
    }
    MultipartiteState::from_pure(&psi, Subsystem::layout(&[(a, d), (b, d)]))
}
