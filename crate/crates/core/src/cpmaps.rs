//! Completely positive maps in Kraus form and their superoperator matrices.
//!
//! A [`CPMap`] stores a Kraus list `B¹..Bᵈ` and acts as `M ↦ Σ Bⁱ M Bⁱ†`.
//! Kraus lists are kept exactly as given: no pruning of zero operators and no
//! re-orthogonalization. Every channel-level predicate below (trace
//! preservation, Choi positivity, the kernel condition, strict positivity
//! probes) depends only on the action of the map, never on the particular
//! Kraus representation.
//!
//! A [`SuperOp`] is the `D² × D²` matrix of a linear map on `M_D` under the
//! column-major vectorization of [`crate::matcore::vectorize`]. For a Kraus
//! map this is `Σ conj(Bⁱ) ⊗ Bⁱ`; the adjoint map has matrix `S†`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::matcore::{
    c, classify_spectrum, eps_psd, herm_eigen, matrix_unit, operator_norm, unvectorize,
    vectorize, CMat, HermMatrix, PsdClass, C64,
};
use crate::rng::{keyed_rng, random_unit_vector, tag};

/// Default number of random probe vectors for strict-positivity refutation.
pub const DEFAULT_PROBES: usize = 64;
/// Seed of the probe stream used by the default certificate.
pub const DEFAULT_PROBE_SEED: u64 = 0x5EED_0F_9B0B;

/// A linear map on `M_D` that can be applied together with its
/// Hilbert-Schmidt adjoint.
pub trait PositiveMap {
    fn dim(&self) -> usize;
    fn map(&self, m: &CMat) -> CMat;
    fn map_adjoint(&self, m: &CMat) -> CMat;
}

#[derive(Clone, Debug, PartialEq)]
pub struct CPMap {
    dim: usize,
    kraus: Vec<CMat>,
}

impl CPMap {
    pub fn new(kraus: Vec<CMat>) -> Result<Self> {
        let first = kraus
            .first()
            .ok_or_else(|| Error::Domain("a CP map needs at least one Kraus operator".into()))?;
        let dim = first.nrows();
        if dim == 0 {
            return Err(Error::Dimension("Kraus operators must be at least 1x1".into()));
        }
        for (i, b) in kraus.iter().enumerate() {
            if b.shape() != (dim, dim) {
                return Err(Error::Dimension(format!(
                    "Kraus operator {i} has shape {:?}, expected ({dim}, {dim})",
                    b.shape()
                )));
            }
        }
        Ok(Self { dim, kraus })
    }

    pub fn identity(dim: usize) -> Self {
        Self { dim, kraus: vec![CMat::identity(dim, dim)] }
    }

    pub fn unitary(u: CMat) -> Result<Self> {
        Self::new(vec![u])
    }

    /// The replacement channel `M ↦ tr[M] I/D` with Kraus `{e_a e_bᵀ/√D}`.
    pub fn depolarizing(dim: usize) -> Self {
        let s = 1.0 / (dim as f64).sqrt();
        let kraus = (0..dim)
            .flat_map(|a| (0..dim).map(move |b| (a, b)))
            .map(|(a, b)| matrix_unit(dim, a, b).scale(s))
            .collect();
        Self { dim, kraus }
    }

    pub fn amplitude_damping(gamma: f64) -> Self {
        let mut k0 = CMat::zeros(2, 2);
        k0[(0, 0)] = c(1.0);
        k0[(1, 1)] = c((1.0 - gamma).sqrt());
        let mut k1 = CMat::zeros(2, 2);
        k1[(0, 1)] = c(gamma.sqrt());
        Self { dim: 2, kraus: vec![k0, k1] }
    }

    /// Classical embedding `M ↦ diag(A · diag(M))` of a nonnegative matrix,
    /// with Kraus operators `√A_ab e_a e_bᵀ` in row-major order.
    pub fn hennion_embed(a: &DMatrix<f64>) -> Result<Self> {
        if a.nrows() != a.ncols() || a.nrows() == 0 {
            return Err(Error::Dimension(format!("hennion_embed needs a square matrix, got {:?}", a.shape())));
        }
        let dim = a.nrows();
        let mut kraus = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for s in 0..dim {
                let v = a[(r, s)];
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(Error::Domain(format!("entry ({r}, {s}) = {v} is not a nonnegative number")));
                }
                kraus.push(matrix_unit(dim, r, s).scale(v.sqrt()));
            }
        }
        Ok(Self { dim, kraus })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kraus(&self) -> &[CMat] {
        &self.kraus
    }

    pub fn rank(&self) -> usize {
        self.kraus.len()
    }

    fn check(&self, m: &CMat) -> Result<()> {
        if m.shape() != (self.dim, self.dim) {
            return Err(Error::Dimension(format!(
                "map acts on {0}x{0} matrices, got {1:?}",
                self.dim,
                m.shape()
            )));
        }
        Ok(())
    }

    /// `Σ Bⁱ M Bⁱ†`.
    pub fn apply(&self, m: &CMat) -> Result<CMat> {
        self.check(m)?;
        Ok(self.map(m))
    }

    /// Kraus list `{Bⁱ†}`.
    pub fn adjoint(&self) -> CPMap {
        Self { dim: self.dim, kraus: self.kraus.iter().map(|b| b.adjoint()).collect() }
    }

    /// `‖Σ Bⁱ†Bⁱ − I‖_op ≤ tol`.
    pub fn is_trace_preserving(&self, tol: f64) -> bool {
        let sum = self
            .kraus
            .iter()
            .fold(CMat::zeros(self.dim, self.dim), |acc, b| acc + b.adjoint() * b);
        operator_norm(&(sum - CMat::identity(self.dim, self.dim))) <= tol
    }

    pub fn superop(&self) -> SuperOp {
        let n = self.dim * self.dim;
        let mat = self
            .kraus
            .iter()
            .fold(CMat::zeros(n, n), |acc, b| acc + b.map(|z| z.conj()).kronecker(b));
        SuperOp { dim: self.dim, mat }
    }

    pub fn choi(&self) -> HermMatrix {
        choi_matrix(self)
    }

    pub fn strict_positivity_certificate(&self, n_probes: usize) -> StrictPositivity {
        strict_positivity_certificate(self, n_probes, DEFAULT_PROBE_SEED)
    }

    pub fn kernel_condition_check(&self) -> bool {
        kernel_condition_check(self)
    }
}

impl PositiveMap for CPMap {
    fn dim(&self) -> usize {
        self.dim
    }

    fn map(&self, m: &CMat) -> CMat {
        self.kraus
            .iter()
            .fold(CMat::zeros(self.dim, self.dim), |acc, b| acc + b * m * b.adjoint())
    }

    fn map_adjoint(&self, m: &CMat) -> CMat {
        self.kraus
            .iter()
            .fold(CMat::zeros(self.dim, self.dim), |acc, b| acc + b.adjoint() * m * b)
    }
}

/// `outer ∘ inner`, with Kraus list `{B_outer^j B_inner^i}` (inner index
/// fastest).
pub fn compose(outer: &CPMap, inner: &CPMap) -> Result<CPMap> {
    if outer.dim != inner.dim {
        return Err(Error::Dimension(format!(
            "cannot compose maps on dimensions {} and {}",
            outer.dim, inner.dim
        )));
    }
    let kraus = outer
        .kraus
        .iter()
        .flat_map(|b2| inner.kraus.iter().map(move |b1| b2 * b1))
        .collect();
    Ok(CPMap { dim: outer.dim, kraus })
}

/// Matrix of a linear map on `M_D` acting on column-major vectorizations.
#[derive(Clone, Debug, PartialEq)]
pub struct SuperOp {
    dim: usize,
    mat: CMat,
}

impl SuperOp {
    pub fn from_matrix(dim: usize, mat: CMat) -> Result<Self> {
        if mat.shape() != (dim * dim, dim * dim) {
            return Err(Error::Dimension(format!(
                "superoperator for D={dim} must be {0}x{0}, got {1:?}",
                dim * dim,
                mat.shape()
            )));
        }
        Ok(Self { dim, mat })
    }

    pub fn identity(dim: usize) -> Self {
        Self { dim, mat: CMat::identity(dim * dim, dim * dim) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn into_matrix(self) -> CMat {
        self.mat
    }

    pub fn apply(&self, m: &CMat) -> Result<CMat> {
        if m.shape() != (self.dim, self.dim) {
            return Err(Error::Dimension(format!("superoperator acts on {0}x{0} matrices", self.dim)));
        }
        Ok(self.map(m))
    }

    pub fn adjoint(&self) -> SuperOp {
        Self { dim: self.dim, mat: self.mat.adjoint() }
    }

    /// `outer ∘ inner`.
    pub fn compose(outer: &SuperOp, inner: &SuperOp) -> Result<SuperOp> {
        if outer.dim != inner.dim {
            return Err(Error::Dimension("superoperator dimensions differ".into()));
        }
        Ok(Self { dim: outer.dim, mat: &outer.mat * &inner.mat })
    }

    /// Trace of the map on `M_D`.
    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    pub fn scale(&self, s: f64) -> SuperOp {
        Self { dim: self.dim, mat: self.mat.scale(s) }
    }
}

impl PositiveMap for SuperOp {
    fn dim(&self) -> usize {
        self.dim
    }

    fn map(&self, m: &CMat) -> CMat {
        unvectorize(&(&self.mat * vectorize(m)), self.dim)
    }

    fn map_adjoint(&self, m: &CMat) -> CMat {
        unvectorize(&(self.mat.adjoint() * vectorize(m)), self.dim)
    }
}

/// Adjoint view of any map, so generic routines can run on `φ*` without
/// building it.
#[derive(Clone, Copy, Debug)]
pub struct Adjoint<'a, P: PositiveMap + ?Sized>(pub &'a P);

impl<P: PositiveMap + ?Sized> PositiveMap for Adjoint<'_, P> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn map(&self, m: &CMat) -> CMat {
        self.0.map_adjoint(m)
    }

    fn map_adjoint(&self, m: &CMat) -> CMat {
        self.0.map(m)
    }
}

/// `C = Σ_ab e_a e_bᵀ ⊗ φ(e_a e_bᵀ)` of dimension `D²`.
pub fn choi_matrix<P: PositiveMap + ?Sized>(phi: &P) -> HermMatrix {
    let d = phi.dim();
    let mut out = CMat::zeros(d * d, d * d);
    for a in 0..d {
        for b in 0..d {
            let block = phi.map(&matrix_unit(d, a, b));
            out.view_mut((a * d, b * d), (d, d)).copy_from(&block);
        }
    }
    HermMatrix::from_hermitian_part(&out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum StrictPositivity {
    CertifiedStrict,
    CertifiedNotStrict,
    Undecided,
}

impl StrictPositivity {
    pub fn is_strict(self) -> bool {
        self == StrictPositivity::CertifiedStrict
    }
}

/// Three-way strict positivity test. A positive definite Choi matrix is a
/// sufficient condition; a probe `x` with `φ(xx†)` singular is a refutation.
/// Probes are the canonical basis followed by `n_probes` seeded unit vectors.
pub fn strict_positivity_certificate<P: PositiveMap + ?Sized>(
    phi: &P,
    n_probes: usize,
    seed: u64,
) -> StrictPositivity {
    if choi_matrix(phi).classify() == PsdClass::PositiveDefinite {
        return StrictPositivity::CertifiedStrict;
    }
    let d = phi.dim();
    let mut rng = keyed_rng(seed, tag::PROBE, 0);
    let probes = (0..d)
        .map(|k| {
            let mut x = crate::matcore::CVec::zeros(d);
            x[k] = c(1.0);
            x
        })
        .chain((0..n_probes).map(|_| random_unit_vector(d, &mut rng)));
    for x in probes {
        let img = phi.map(&(&x * x.adjoint()));
        let eig = herm_eigen(&img);
        if eig.min() <= eps_psd(eig.scale()) {
            return StrictPositivity::CertifiedNotStrict;
        }
    }
    StrictPositivity::Undecided
}

/// Exact test of `ker φ ∩ P_D = ker φ* ∩ P_D = {0}` through positive
/// definiteness of `φ*(I)` and `φ(I)`.
pub fn kernel_condition_check<P: PositiveMap + ?Sized>(phi: &P) -> bool {
    let id = CMat::identity(phi.dim(), phi.dim());
    let fwd = herm_eigen(&phi.map(&id));
    let bwd = herm_eigen(&phi.map_adjoint(&id));
    classify_spectrum(&fwd.values) == PsdClass::PositiveDefinite
        && classify_spectrum(&bwd.values) == PsdClass::PositiveDefinite
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::{hermitian_defect, hs_inner, PsdClass};
    use crate::rng::{keyed_rng, random_matrix, random_state, random_unitary};

    fn random_map(dim: usize, rank: usize, seed: u64) -> CPMap {
        let mut rng = keyed_rng(seed, 99, 0);
        CPMap::new((0..rank).map(|_| random_matrix(dim, dim, &mut rng)).collect()).unwrap()
    }

    /// `φ(M) = P M P + S M S†` on D = 2 with `P = e₁e₁ᵀ` and `S = e₁e₂ᵀ`.
    fn projection_channel() -> CPMap {
        CPMap::new(vec![matrix_unit(2, 0, 0), matrix_unit(2, 0, 1)]).unwrap()
    }

    #[test]
    fn apply_examples() {
        let mut rng = keyed_rng(1, 0, 0);
        let m = random_matrix(3, 3, &mut rng);
        assert_eq!(CPMap::identity(3).apply(&m).unwrap(), m);

        let dep = CPMap::depolarizing(3).apply(&m).unwrap();
        let expect = CMat::identity(3, 3) * (m.trace() / c(3.0));
        assert!((dep - expect).norm() < 1e-14);

        let u = random_unitary(3, &mut rng);
        let rho = random_state(3, &mut rng);
        let out = CPMap::unitary(u.clone()).unwrap().apply(rho.as_mat()).unwrap();
        assert!((out - &u * rho.as_mat() * u.adjoint()).norm() < 1e-14);

        assert!(CPMap::identity(2).apply(&CMat::zeros(3, 3)).is_err());
    }

    #[test]
    fn adjoint_examples() {
        let mut rng = keyed_rng(2, 0, 0);
        let u = random_unitary(2, &mut rng);
        assert_eq!(CPMap::unitary(u.clone()).unwrap().adjoint().kraus()[0], u.adjoint());

        let ad = CPMap::amplitude_damping(0.3).adjoint();
        let id = CMat::identity(2, 2);
        assert!((ad.apply(&id).unwrap() - &id).norm() < 1e-12);

        let phi = random_map(3, 4, 5);
        let m = random_matrix(3, 3, &mut rng);
        let n = random_matrix(3, 3, &mut rng);
        let lhs = hs_inner(&n, &phi.apply(&m).unwrap()).unwrap();
        let rhs = hs_inner(&phi.adjoint().apply(&n).unwrap(), &m).unwrap();
        assert!((lhs - rhs).norm() <= 1e-12 * lhs.norm().max(1.0));
    }

    #[test]
    fn compose_examples() {
        let mut rng = keyed_rng(3, 0, 0);
        let phi = random_map(3, 2, 7);
        let composed = compose(&CPMap::identity(3), &phi).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                let e = matrix_unit(3, a, b);
                assert!((composed.apply(&e).unwrap() - phi.apply(&e).unwrap()).norm() < 1e-14);
            }
        }
        let u = random_unitary(2, &mut rng);
        let v = random_unitary(2, &mut rng);
        let uv = compose(&CPMap::unitary(u.clone()).unwrap(), &CPMap::unitary(v.clone()).unwrap()).unwrap();
        assert_eq!(uv.rank(), 1);
        assert!((&uv.kraus()[0] - &u * &v).norm() < 1e-15);

        let phi2 = random_map(3, 3, 8);
        let m = random_matrix(3, 3, &mut rng);
        let direct = compose(&phi2, &phi).unwrap().apply(&m).unwrap();
        let seq = phi2.apply(&phi.apply(&m).unwrap()).unwrap();
        assert!((direct - &seq).norm() <= 1e-12 * seq.norm().max(1.0));

        assert!(compose(&CPMap::identity(2), &CPMap::identity(3)).is_err());
    }

    #[test]
    fn trace_preservation_examples() {
        let mut rng = keyed_rng(4, 0, 0);
        assert!(CPMap::unitary(random_unitary(3, &mut rng)).unwrap().is_trace_preserving(1e-12));
        let doubled = CPMap::new(vec![CMat::identity(2, 2), CMat::identity(2, 2)]).unwrap();
        assert!(!doubled.is_trace_preserving(1e-6));
        assert!(CPMap::amplitude_damping(0.3).is_trace_preserving(1e-12));
    }

    #[test]
    fn superop_examples() {
        let mut rng = keyed_rng(5, 0, 0);
        assert_eq!(CPMap::identity(3).superop().matrix(), &CMat::identity(9, 9));

        let u = random_unitary(3, &mut rng);
        let s = CPMap::unitary(u.clone()).unwrap().superop();
        let expect = u.map(|z| z.conj()).kronecker(&u);
        assert!((s.matrix() - &expect).norm() < 1e-14);
        let m = random_matrix(3, 3, &mut rng);
        assert!((s.apply(&m).unwrap() - &u * &m * u.adjoint()).norm() < 1e-13);

        let phi = random_map(3, 4, 9);
        let lhs = phi.superop().trace();
        let rhs: f64 = phi.kraus().iter().map(|b| b.trace().norm_sqr()).sum();
        let basis: C64 = (0..3)
            .flat_map(|a| (0..3).map(move |b| (a, b)))
            .map(|(a, b)| (matrix_unit(3, b, a) * phi.apply(&matrix_unit(3, a, b)).unwrap()).trace())
            .sum();
        assert!((lhs - c(rhs)).norm() < 1e-12 * rhs.max(1.0));
        assert!((lhs - basis).norm() < 1e-12 * rhs.max(1.0));
    }

    #[test]
    fn superop_matches_kraus_on_basis_and_composes() {
        let phi = random_map(3, 3, 10);
        let psi = random_map(3, 2, 11);
        let s = phi.superop();
        for a in 0..3 {
            for b in 0..3 {
                let e = matrix_unit(3, a, b);
                assert!((s.map(&e) - phi.map(&e)).norm() < 1e-12);
            }
        }
        let lhs = compose(&psi, &phi).unwrap().superop();
        let rhs = SuperOp::compose(&psi.superop(), &phi.superop()).unwrap();
        assert!((lhs.matrix() - rhs.matrix()).norm() <= 1e-10 * lhs.matrix().norm());
    }

    #[test]
    fn choi_examples() {
        let id_choi = CPMap::identity(2).choi();
        assert_eq!(id_choi.classify(), PsdClass::PsdSingular);
        let eig = id_choi.eigen();
        assert!((eig.max() - 2.0).abs() < 1e-12);
        assert!(eig.values[..3].iter().all(|v| v.abs() < 1e-12));

        let dep = CPMap::depolarizing(3).choi();
        assert!((dep.as_mat() - CMat::identity(9, 9).unscale(3.0)).norm() < 1e-14);
        assert_eq!(dep.classify(), PsdClass::PositiveDefinite);

        assert_eq!(random_map(2, 4, 12).choi().classify(), PsdClass::PositiveDefinite);
    }

    #[test]
    fn strict_positivity_examples() {
        assert_eq!(CPMap::identity(3).strict_positivity_certificate(8), StrictPositivity::CertifiedNotStrict);
        assert_eq!(CPMap::depolarizing(3).strict_positivity_certificate(8), StrictPositivity::CertifiedStrict);
        assert_eq!(projection_channel().strict_positivity_certificate(8), StrictPositivity::CertifiedNotStrict);
    }

    #[test]
    fn kernel_condition_examples() {
        let mut rng = keyed_rng(6, 0, 0);
        assert!(CPMap::unitary(random_unitary(2, &mut rng)).unwrap().kernel_condition_check());
        assert!(!CPMap::new(vec![matrix_unit(2, 0, 0)]).unwrap().kernel_condition_check());
        let proj = projection_channel();
        assert!(proj.is_trace_preserving(1e-14));
        assert!(!proj.kernel_condition_check());
        let p_perp = matrix_unit(2, 1, 1);
        assert!(proj.adjoint().apply(&p_perp).unwrap().norm() < 1e-15);
    }

    #[test]
    fn hennion_examples() {
        let mut rng = keyed_rng(7, 0, 0);
        let m = random_state(3, &mut rng);
        let phi = CPMap::hennion_embed(&DMatrix::identity(3, 3)).unwrap();
        let out = phi.apply(m.as_mat()).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { m.as_mat()[(i, i)] } else { c(0.0) };
                assert!((out[(i, j)] - expect).norm() < 1e-15);
            }
        }
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let phi = CPMap::hennion_embed(&a).unwrap();
        let out = phi.apply(&CMat::identity(2, 2).unscale(2.0)).unwrap();
        assert!((out - CMat::identity(2, 2).scale(1.5)).norm() < 1e-15);
        assert!(CPMap::hennion_embed(&DMatrix::from_row_slice(2, 2, &[1.0, -0.1, 0.0, 1.0])).is_err());
    }

    #[test]
    fn positivity_and_hermiticity_preserved() {
        let mut rng = keyed_rng(8, 0, 0);
        for seed in 0..20 {
            let phi = random_map(3, 1 + seed as usize % 4, 100 + seed);
            let h = crate::matcore::hermitian_part(&random_matrix(3, 3, &mut rng));
            assert!(hermitian_defect(&phi.apply(&h).unwrap()) <= 1e-12);
            let rho = random_state(3, &mut rng);
            let out = HermMatrix::from_hermitian_part(&phi.apply(rho.as_mat()).unwrap());
            assert_ne!(out.classify(), PsdClass::Indefinite);
        }
    }

    #[test]
    fn kernel_valid_maps_keep_interior() {
        let mut rng = keyed_rng(9, 0, 0);
        for seed in 0..30 {
            let phi = random_map(3, 3, 200 + seed);
            assert!(phi.kernel_condition_check());
            let rho = random_state(3, &mut rng);
            let out = HermMatrix::from_hermitian_part(&phi.apply(rho.as_mat()).unwrap());
            assert_eq!(out.classify(), PsdClass::PositiveDefinite);
        }
    }

    #[test]
    fn strict_maps_form_an_ideal() {
        let mut rng = keyed_rng(10, 0, 0);
        for seed in 0..10 {
            for dim in 2..=4 {
                let strict = random_map(dim, dim * dim, 300 + seed);
                assert!(strict.strict_positivity_certificate(16).is_strict());
                let valid = CPMap::unitary(random_unitary(dim, &mut rng)).unwrap();
                assert!(valid.kernel_condition_check());
                for composed in [compose(&strict, &valid).unwrap(), compose(&valid, &strict).unwrap()] {
                    // probe 100 random pure inputs directly
                    for _ in 0..100 {
                        let x = random_unit_vector(dim, &mut rng);
                        let out = HermMatrix::from_hermitian_part(&composed.map(&(&x * x.adjoint())));
                        assert_eq!(out.classify(), PsdClass::PositiveDefinite);
                    }
                    assert!(composed.strict_positivity_certificate(16).is_strict());
                }
            }
        }
    }

    #[test]
    fn double_adjoint_is_identity() {
        let phi = random_map(3, 3, 400);
        let back = phi.adjoint().adjoint();
        for a in 0..3 {
            for b in 0..3 {
                let e = matrix_unit(3, a, b);
                assert!((back.map(&e) - phi.map(&e)).norm() <= 1e-12);
            }
        }
    }

    #[test]
    fn predicates_ignore_kraus_representation() {
        // the same channel written with a unitarily mixed Kraus list
        let mut rng = keyed_rng(11, 0, 0);
        let phi = random_map(2, 2, 500);
        let w = random_unitary(2, &mut rng);
        let mixed: Vec<CMat> = (0..2)
            .map(|j| phi.kraus().iter().enumerate().fold(CMat::zeros(2, 2), |acc, (i, b)| acc + b * w[(i, j)]))
            .collect();
        let psi = CPMap::new(mixed).unwrap();
        assert!((psi.superop().matrix() - phi.superop().matrix()).norm() < 1e-12);
        assert_eq!(psi.kernel_condition_check(), phi.kernel_condition_check());
        assert_eq!(psi.strict_positivity_certificate(32), phi.strict_positivity_certificate(32));
        assert_eq!(psi.is_trace_preserving(1e-10), phi.is_trace_preserving(1e-10));
    }
}
