//! Dense complex Hermitian linear algebra.
//!
//! Everything downstream works on [`ComplexMatrix`] (a `nalgebra::DMatrix`
//! of `Complex64`). Spectral functions share one support convention:
//! eigenvalues at or below the cutoff are treated as outside the support and
//! map to zero, whatever the scalar function is.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;

/// Largest tolerated `max |H - H^dag|` before a matrix is rejected as non-Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-9;

/// Relative support cutoff: eigenvalues below `SUPPORT_RTOL * max |lambda|` are dropped.
pub const SUPPORT_RTOL: f64 = 1e-10;

pub const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    /// Unitary matrix whose columns are the eigenvectors.
    pub eigenvectors: ComplexMatrix,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    /// Scale-invariant support cutoff, `1e-10` times the largest |eigenvalue|.
    pub fn relative_cutoff(&self) -> f64 {
        let scale = self
            .eigenvalues
            .iter()
            .fold(0.0_f64, |acc, l| acc.max(l.abs()));
        SUPPORT_RTOL * scale
    }

    /// `V diag(g) V^dag` for arbitrary per-eigenvalue weights.
    pub fn compose(&self, weights: &[f64]) -> ComplexMatrix {
        let v = &self.eigenvectors;
        let n = v.nrows();
        let mut scaled = v.clone();
        for (j, w) in weights.iter().enumerate() {
            let mut col = scaled.column_mut(j);
            col *= Complex64::new(*w, 0.0);
        }
        let mut out = ComplexMatrix::zeros(n, n);
        out.gemm(ONE, &scaled, &v.adjoint(), ZERO);
        out
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.compose(&self.eigenvalues)
    }

    /// Applies `f` on the eigenvalues strictly above `cutoff`, zero elsewhere.
    pub fn apply<F: Fn(f64) -> f64>(&self, f: F, cutoff: f64) -> ComplexMatrix {
        let weights: Vec<f64> = self
            .eigenvalues
            .iter()
            .map(|&l| if l > cutoff { f(l) } else { 0.0 })
            .collect();
        self.compose(&weights)
    }

    /// Projector onto the span of eigenvectors with eigenvalue above `cutoff`.
    pub fn support_projector(&self, cutoff: f64) -> ComplexMatrix {
        self.apply(|_| 1.0, cutoff)
    }

    pub fn rank(&self, cutoff: f64) -> usize {
        self.eigenvalues.iter().filter(|&&l| l > cutoff).count()
    }
}

pub fn check_square(m: &ComplexMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare(m.nrows(), m.ncols()));
    }
    Ok(m.nrows())
}

pub fn check_finite(m: &ComplexMatrix) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

/// `max |H - H^dag|` over all entries.
pub fn hermitian_asymmetry(h: &ComplexMatrix) -> f64 {
    let n = h.nrows().min(h.ncols());
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((h[(i, j)] - h[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Returns `(H + H^dag) / 2` after checking the asymmetry is within [`HERMITIAN_TOL`].
pub fn hermitize(h: &ComplexMatrix) -> Result<ComplexMatrix> {
    check_square(h)?;
    check_finite(h)?;
    let asym = hermitian_asymmetry(h);
    if asym > HERMITIAN_TOL {
        return Err(Error::NotHermitian(asym));
    }
    Ok(symmetrize(h))
}

pub(crate) fn symmetrize(h: &ComplexMatrix) -> ComplexMatrix {
    (h + h.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Hermitian eigendecomposition with ascending eigenvalues.
pub fn eigh(h: &ComplexMatrix) -> Result<Spectrum> {
    let h = hermitize(h)?;
    eigh_unchecked(h)
}

pub(crate) fn eigh_unchecked(h: ComplexMatrix) -> Result<Spectrum> {
    let n = h.nrows();
    if n == 0 {
        return Ok(Spectrum {
            eigenvalues: vec![],
            eigenvectors: ComplexMatrix::zeros(0, 0),
        });
    }
    let eig =
        nalgebra::linalg::SymmetricEigen::try_new(h, f64::EPSILON, 0).ok_or(Error::EigenFailure)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut eigenvectors = ComplexMatrix::zeros(n, n);
    for (j, &k) in order.iter().enumerate() {
        eigenvectors.set_column(j, &eig.eigenvectors.column(k));
    }
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
    })
}

/// Spectral matrix function with an explicit absolute support cutoff.
pub fn matrix_function<F: Fn(f64) -> f64>(
    h: &ComplexMatrix,
    f: F,
    support_cutoff: f64,
) -> Result<ComplexMatrix> {
    if !(support_cutoff >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "support cutoff must be non-negative, got {support_cutoff}"
        )));
    }
    Ok(eigh(h)?.apply(f, support_cutoff))
}

/// Square root on the support, relative cutoff.
pub fn sqrtm(h: &ComplexMatrix) -> Result<ComplexMatrix> {
    let s = eigh(h)?;
    Ok(s.apply(f64::sqrt, s.relative_cutoff()))
}

/// Inverse square root on the support (pseudo-inverse), relative cutoff.
pub fn inv_sqrtm(h: &ComplexMatrix) -> Result<ComplexMatrix> {
    let s = eigh(h)?;
    Ok(s.apply(|x| 1.0 / x.sqrt(), s.relative_cutoff()))
}

/// Sum of singular values.
pub fn trace_norm(a: &ComplexMatrix) -> Result<f64> {
    check_square(a)?;
    check_finite(a)?;
    if hermitian_asymmetry(a) <= HERMITIAN_TOL {
        let s = eigh_unchecked(symmetrize(a))?;
        return Ok(s.eigenvalues.iter().map(|l| l.abs()).sum());
    }
    let svd = a.clone().svd(false, false);
    Ok(svd.singular_values.iter().sum())
}

/// Half the trace norm of the difference.
pub fn trace_distance(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            got: b.nrows(),
        });
    }
    Ok(0.5 * trace_norm(&(a - b))?)
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

pub fn trace(a: &ComplexMatrix) -> Complex64 {
    a.diagonal().iter().sum()
}

/// Real part of `tr(A B)` without forming the product.
pub fn trace_product_re(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for k in 0..a.ncols() {
            acc += (a[(i, k)] * b[(k, i)]).re;
        }
    }
    acc
}

pub fn identity(d: usize) -> ComplexMatrix {
    ComplexMatrix::identity(d, d)
}

pub fn max_abs(a: &ComplexMatrix) -> f64 {
    a.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

pub fn min_eigenvalue(h: &ComplexMatrix) -> Result<f64> {
    Ok(eigh(h)?.min())
}

pub fn real_matrix(re: &DMatrix<f64>) -> ComplexMatrix {
    re.map(|x| Complex64::new(x, 0.0))
}
