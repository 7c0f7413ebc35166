//! Dense complex matrix utilities at small dimension.
//!
//! Everything here works on `nalgebra::DMatrix<Complex64>`. The dimension of
//! the underlying Hilbert space is small (at most 16), so all spectral work
//! goes through dense O(D³) routines: a Hermitian eigensolver for spectra,
//! square roots and PSD classification, and an SVD for trace norms.
//!
//! Vectorization is column-major throughout the crate:
//! `vec(M)[a + D*b] = M[(a, b)]`, which gives `vec(B M C) = (Cᵀ ⊗ B) vec(M)`.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Relative Hermiticity tolerance (against the largest entry modulus).
pub const TOL_HERM: f64 = 1e-12;
/// Relative spectral threshold used for PSD and PD classification.
pub const EPS_REL: f64 = 1e-10;
/// Absolute floor of the PSD threshold.
pub const EPS_FLOOR: f64 = 1e-14;

pub(crate) fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Threshold below which a negative eigenvalue still counts as zero.
pub fn eps_psd(scale: f64) -> f64 {
    (EPS_REL * scale).max(EPS_FLOOR)
}

/// Threshold an eigenvalue must exceed to count as strictly positive.
pub fn eps_pd(scale: f64) -> f64 {
    EPS_REL * scale
}

/// Spectral decomposition of a Hermitian matrix with eigenvalues sorted
/// ascending and orthonormal eigenvectors stored as columns.
#[derive(Clone, Debug)]
pub struct HermEigen {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

impl HermEigen {
    /// Largest eigenvalue modulus.
    pub fn scale(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    pub fn vector(&self, k: usize) -> CVec {
        self.vectors.column(k).into_owned()
    }

    /// `V f(Λ) V†`.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> CMat {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for k in 0..n {
            let s = f(self.values[k]);
            scaled.column_mut(k).scale_mut(s);
        }
        let out = &scaled * self.vectors.adjoint();
        hermitian_part(&out)
    }
}

/// Eigen-decomposition of the Hermitian part of `m`.
pub fn herm_eigen(m: &CMat) -> HermEigen {
    let n = m.nrows();
    let sym = hermitian_part(m);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    HermEigen { values, vectors }
}

/// `(M + M†) / 2`.
pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

/// Largest `|m_ij - conj(m_ji)|` relative to the largest entry modulus.
pub fn hermitian_defect(m: &CMat) -> f64 {
    let scale = m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()));
    if scale == 0.0 {
        return 0.0;
    }
    let diff = m - m.adjoint();
    diff.iter().fold(0.0_f64, |acc, z| acc.max(z.norm())) / scale
}

fn check_square(m: &CMat, what: &str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension(format!(
            "{what}: expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

/// PSD classification outcome.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum PsdClass {
    PositiveDefinite,
    PsdSingular,
    Indefinite,
}

/// Classifies a sorted spectrum with the scale-relative thresholds.
pub fn classify_spectrum(values: &[f64]) -> PsdClass {
    let scale = values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if min > eps_pd(scale) && scale > 0.0 {
        PsdClass::PositiveDefinite
    } else if min < -eps_psd(scale) {
        PsdClass::Indefinite
    } else {
        PsdClass::PsdSingular
    }
}

/// A square complex matrix that is Hermitian up to `TOL_HERM`. The stored
/// entries are the exact Hermitian part of the input.
#[derive(Clone, Debug, PartialEq)]
pub struct HermMatrix(CMat);

impl HermMatrix {
    pub fn new(m: CMat) -> Result<Self> {
        check_square(&m, "HermMatrix")?;
        let defect = hermitian_defect(&m);
        if defect > TOL_HERM {
            return Err(Error::NotHermitian(defect));
        }
        Ok(Self(hermitian_part(&m)))
    }

    /// Projects an arbitrary square matrix onto its Hermitian part.
    pub fn from_hermitian_part(m: &CMat) -> Self {
        Self(hermitian_part(m))
    }

    pub fn identity(dim: usize) -> Self {
        Self(CMat::identity(dim, dim))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self(CMat::from_fn(n, n, |i, j| if i == j { c(diag[i]) } else { C64::new(0.0, 0.0) }))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_mat(&self) -> &CMat {
        &self.0
    }

    pub fn into_inner(self) -> CMat {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    pub fn eigen(&self) -> HermEigen {
        herm_eigen(&self.0)
    }

    pub fn classify(&self) -> PsdClass {
        classify_spectrum(&self.eigen().values)
    }
}

/// A density matrix: Hermitian, PSD within `eps_psd`, unit trace.
#[derive(Clone, Debug, PartialEq)]
pub struct StateMatrix(HermMatrix);

impl StateMatrix {
    /// Validates an already normalized state.
    pub fn new(m: CMat) -> Result<Self> {
        let h = HermMatrix::new(m)?;
        let tr = h.trace();
        if (tr - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!("state trace {tr} differs from 1")));
        }
        if h.classify() == PsdClass::Indefinite {
            return Err(Error::Domain("state matrix is not positive semi-definite".into()));
        }
        Ok(Self(h))
    }

    /// Hermitian-projects and trace-normalizes a PSD matrix.
    pub fn from_psd(m: &CMat) -> Result<Self> {
        check_square(m, "StateMatrix")?;
        let h = hermitian_part(m);
        let tr = h.trace().re;
        if !(tr > 0.0) || !tr.is_finite() {
            return Err(Error::Domain(format!("cannot normalize matrix with trace {tr}")));
        }
        let h = HermMatrix(h.unscale(tr));
        if h.classify() == PsdClass::Indefinite {
            return Err(Error::Domain("state matrix is not positive semi-definite".into()));
        }
        Ok(Self(h))
    }

    /// Hermitian-projects and trace-normalizes without a spectral check.
    pub(crate) fn from_psd_unchecked(m: &CMat) -> Self {
        let h = hermitian_part(m);
        let tr = h.trace().re;
        Self(HermMatrix(h.unscale(tr)))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(HermMatrix(CMat::identity(dim, dim).unscale(dim as f64)))
    }

    /// `x x† / |x|²`.
    pub fn pure(x: &CVec) -> Result<Self> {
        let n = x.norm();
        if !(n > 0.0) {
            return Err(Error::Domain("zero vector has no pure state".into()));
        }
        let u = x.unscale(n);
        Ok(Self(HermMatrix(hermitian_part(&(&u * u.adjoint())))))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn as_mat(&self) -> &CMat {
        self.0.as_mat()
    }

    pub fn herm(&self) -> &HermMatrix {
        &self.0
    }

    pub fn classify(&self) -> PsdClass {
        self.0.classify()
    }
}

/// `tr|M|`, the sum of singular values.
pub fn trace_norm(m: &CMat) -> Result<f64> {
    check_square(m, "trace_norm")?;
    if m.nrows() == 0 {
        return Ok(0.0);
    }
    let svd = SVD::new(m.clone(), false, false);
    Ok(svd.singular_values.sum())
}

/// Largest singular value.
pub fn operator_norm(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let svd = SVD::new(m.clone(), false, false);
    svd.singular_values.max()
}

/// Hilbert-Schmidt inner product `tr[A† B]`.
pub fn hs_inner(a: &CMat, b: &CMat) -> Result<C64> {
    if a.shape() != b.shape() {
        return Err(Error::Dimension(format!(
            "hs_inner: {:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok(a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum())
}

pub fn classify_psd(m: &HermMatrix) -> PsdClass {
    m.classify()
}

/// `M^{1/2}` or `M^{-1/2}` through the spectral decomposition.
pub fn sqrt_psd(m: &HermMatrix, inverse: bool) -> Result<HermMatrix> {
    let eig = m.eigen();
    let scale = eig.scale();
    let min = eig.min();
    if inverse {
        let threshold = eps_pd(scale);
        if !(min > threshold) || scale == 0.0 {
            return Err(Error::Singular { min, threshold });
        }
        Ok(HermMatrix(eig.map_values(|v| 1.0 / v.sqrt())))
    } else {
        if min < -eps_psd(scale) {
            return Err(Error::Domain(format!(
                "square root of an indefinite matrix (smallest eigenvalue {min:.3e})"
            )));
        }
        Ok(HermMatrix(eig.map_values(|v| v.max(0.0).sqrt())))
    }
}

/// One term `weight * phase * state` of a trace-norm split.
#[derive(Clone, Debug)]
pub struct SplitTerm {
    pub weight: f64,
    pub phase: C64,
    pub state: StateMatrix,
}

/// Writes `M` as a combination of at most four states built from the
/// positive and negative parts of its Hermitian real and imaginary parts.
/// The weights satisfy `Σ weight ≤ 2 tr|M|`.
pub fn split_trace_norm(m: &CMat) -> Result<Vec<SplitTerm>> {
    check_square(m, "split_trace_norm")?;
    let re_part = hermitian_part(m);
    let im_part = (m - m.adjoint()).scale(0.5) * C64::new(0.0, -1.0);
    let mut terms = Vec::with_capacity(4);
    for (part, unit) in [(re_part, C64::new(1.0, 0.0)), (im_part, C64::new(0.0, 1.0))] {
        let eig = herm_eigen(&part);
        let drop = 1e-14 * eig.scale();
        let pos = eig.map_values(|v| if v > drop { v } else { 0.0 });
        let neg = eig.map_values(|v| if v < -drop { -v } else { 0.0 });
        for (piece, sign) in [(pos, 1.0), (neg, -1.0)] {
            let weight = piece.trace().re;
            if weight > 0.0 {
                terms.push(SplitTerm {
                    weight,
                    phase: unit * sign,
                    state: StateMatrix(HermMatrix(piece.unscale(weight))),
                });
            }
        }
    }
    Ok(terms)
}

/// Recombines a trace-norm split.
pub fn recompose_split(terms: &[SplitTerm], dim: usize) -> CMat {
    terms.iter().fold(CMat::zeros(dim, dim), |acc, t| {
        acc + t.state.as_mat() * (t.phase * t.weight)
    })
}

/// Column-major vectorization.
pub fn vectorize(m: &CMat) -> CVec {
    CVec::from_column_slice(m.as_slice())
}

pub fn unvectorize(v: &CVec, dim: usize) -> CMat {
    CMat::from_column_slice(dim, dim, v.as_slice())
}

/// Matrix unit `e_a e_bᵀ`.
pub fn matrix_unit(dim: usize, a: usize, b: usize) -> CMat {
    let mut m = CMat::zeros(dim, dim);
    m[(a, b)] = c(1.0);
    m
}
