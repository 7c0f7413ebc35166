//! Projective geometry of the state space.
//!
//! For PSD `X, Y` the coefficient `m(X, Y) = sup{λ ≥ 0 : X − λY ⪰ 0}` gives
//! the Hilbert-type metric `d0 = −ln m(X,Y) − ln m(Y,X)` and its bounded
//! transform
//!
//! ```text
//! d(X, Y) = (1 − m(X,Y) m(Y,X)) / (1 + m(X,Y) m(Y,X))  ∈ [0, 1].
//! ```
//!
//! A positive map acts projectively on states by `φ·X = φ(X) / tr φ(X)`, and
//! its contraction coefficient `c(φ) = sup d(φ·X, φ·Y)` is estimated from
//! below by [`contraction_estimate`].

use crate::cpmaps::{Adjoint, PositiveMap};
use crate::error::{Error, Result};
use crate::matcore::{
    eps_pd, eps_psd, herm_eigen, CMat, CVec, HermEigen, HermMatrix, PsdClass, StateMatrix,
};
use crate::rng::{keyed_rng, random_state, random_unit_vector, tag};

/// Relative size of `⟨v, Y v⟩` on `ker X` above which `m(X, Y) = 0`.
const KERNEL_LEAK: f64 = 1e-12;
const MAX_ASCENT_STEPS: usize = 500;
const ASCENT_RTOL: f64 = 1e-15;

/// `m(X, Y)` for PSD `X, Y` together with a minimizing direction `v`, so
/// that `⟨v, X v⟩ = m ⟨v, Y v⟩`.
///
/// Both arguments are used as given: the coefficient scales as
/// `m(aX, bY) = (a/b) m(X, Y)`. Returns `+∞` when `Y = 0`.
pub fn m_witness_psd(x: &CMat, y: &CMat) -> (f64, CVec) {
    let dim = x.nrows();
    let ey = herm_eigen(y);
    let y_scale = ey.scale();
    if y_scale == 0.0 {
        return (f64::INFINITY, unit(dim, 0));
    }
    if ey.min() > eps_pd(y_scale) {
        let w = ey.map_values(|l| 1.0 / l.sqrt());
        let k = herm_eigen(&(&w * x * &w));
        let v = &w * k.vector(0);
        return (k.min().max(0.0), normalized(v));
    }

    let ex = herm_eigen(x);
    let x_cut = eps_pd(ex.scale());
    let n_ker = ex.values.iter().take_while(|&&l| l <= x_cut).count();
    if n_ker > 0 {
        let ker = ex.vectors.columns(0, n_ker).into_owned();
        let yk = herm_eigen(&(ker.adjoint() * y * &ker));
        if yk.max() > KERNEL_LEAK * y.trace().re.abs().max(y_scale) {
            return (0.0, normalized(&ker * yk.vector(n_ker - 1)));
        }
    }
    if n_ker == dim {
        // X = 0 while Y has no weight outside ker X cannot happen for Y ≠ 0
        return (0.0, ey.vector(dim - 1));
    }
    let range = ex.vectors.columns(n_ker, dim - n_ker).into_owned();
    let inv_sqrt: Vec<f64> = ex.values[n_ker..].iter().map(|l| 1.0 / l.sqrt()).collect();
    let mut r = range.clone();
    for (k, s) in inv_sqrt.iter().enumerate() {
        r.column_mut(k).scale_mut(*s);
    }
    let k = herm_eigen(&(r.adjoint() * y * &r));
    let top = k.max();
    let v = &r * k.vector(k.values.len() - 1);
    if top <= 0.0 {
        return (f64::INFINITY, normalized(v));
    }
    (1.0 / top, normalized(v))
}

fn unit(dim: usize, k: usize) -> CVec {
    let mut v = CVec::zeros(dim);
    v[k] = crate::matcore::C64::new(1.0, 0.0);
    v
}

fn normalized(v: CVec) -> CVec {
    let n = v.norm();
    if n > 0.0 {
        v.unscale(n)
    } else {
        v
    }
}

/// `m(X, Y)` for PSD Hermitian matrices; indefinite input is a domain error.
pub fn m_coeff_psd(x: &HermMatrix, y: &HermMatrix) -> Result<f64> {
    if x.dim() != y.dim() {
        return Err(Error::Dimension(format!("m(X, Y) on dimensions {} and {}", x.dim(), y.dim())));
    }
    if x.classify() == PsdClass::Indefinite || y.classify() == PsdClass::Indefinite {
        return Err(Error::Domain("m(X, Y) needs positive semi-definite arguments".into()));
    }
    Ok(m_witness_psd(x.as_mat(), y.as_mat()).0)
}

/// `m(X, Y) ∈ [0, 1]` for states.
pub fn m_coeff(x: &StateMatrix, y: &StateMatrix) -> Result<f64> {
    Ok(m_witness(x, y)?.0)
}

/// `m(X, Y)` with a unit vector `v` attaining `⟨v, X v⟩ = m ⟨v, Y v⟩`.
pub fn m_witness(x: &StateMatrix, y: &StateMatrix) -> Result<(f64, CVec)> {
    if x.dim() != y.dim() {
        return Err(Error::Dimension(format!("m(X, Y) on dimensions {} and {}", x.dim(), y.dim())));
    }
    let (m, v) = m_witness_psd(x.as_mat(), y.as_mat());
    Ok((m.clamp(0.0, 1.0), v))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProjMetricValue {
    pub m_xy: f64,
    pub m_yx: f64,
    /// `+∞` when either coefficient vanishes.
    pub d0: f64,
    pub d: f64,
}

impl ProjMetricValue {
    pub fn from_coefficients(m_xy: f64, m_yx: f64) -> Self {
        let m_xy = m_xy.clamp(0.0, 1.0);
        let m_yx = m_yx.clamp(0.0, 1.0);
        let p = m_xy * m_yx;
        let d0 = if m_xy > 0.0 && m_yx > 0.0 { -m_xy.ln() - m_yx.ln() } else { f64::INFINITY };
        Self { m_xy, m_yx, d0, d: (1.0 - p) / (1.0 + p) }
    }
}

pub fn pmetric(x: &StateMatrix, y: &StateMatrix) -> Result<ProjMetricValue> {
    Ok(ProjMetricValue::from_coefficients(m_coeff(x, y)?, m_coeff(y, x)?))
}

/// `d(X, Y)` from the endpoints `t₋ ≤ 0 < 1 ≤ t₊` of the segment
/// `{t X + (1−t) Y} ∩ S_D`:
///
/// ```text
/// d = (t₊ − t₋) / (t₋ + t₊ − 2 t₋ t₊).
/// ```
///
/// The endpoints come from the spectrum of `C^{-1/2} (X − Y) C^{-1/2}` on the
/// support of the midpoint `C = (X + Y)/2`. Returns 0 when `X = Y`.
pub fn pmetric_endpoint_oracle(x: &StateMatrix, y: &StateMatrix) -> Result<f64> {
    let (t_minus, t_plus) = segment_endpoints(x, y)?;
    if !t_plus.is_finite() || !t_minus.is_finite() {
        return Ok(0.0);
    }
    Ok((t_plus - t_minus) / (t_minus + t_plus - 2.0 * t_minus * t_plus))
}

/// `(t₋, t₊)` with `t X + (1−t) Y` PSD exactly for `t ∈ [t₋, t₊]`;
/// infinite when `X = Y`.
pub fn segment_endpoints(x: &StateMatrix, y: &StateMatrix) -> Result<(f64, f64)> {
    if x.dim() != y.dim() {
        return Err(Error::Dimension("segment endpoints need equal dimensions".into()));
    }
    let mid = (x.as_mat() + y.as_mat()).scale(0.5);
    let delta = x.as_mat() - y.as_mat();
    let em = herm_eigen(&mid);
    let cut = eps_pd(em.scale());
    let support: Vec<usize> = (0..em.values.len()).filter(|&k| em.values[k] > cut).collect();
    let mut r = CMat::zeros(x.dim(), support.len());
    for (j, &k) in support.iter().enumerate() {
        r.set_column(j, &em.vectors.column(k).unscale(em.values[k].sqrt()));
    }
    let kappa = herm_eigen(&(r.adjoint() * delta * &r));
    let k_min = kappa.min();
    let k_max = kappa.max();
    let tiny = 1e-14;
    if k_max <= tiny && k_min >= -tiny {
        return Ok((f64::NEG_INFINITY, f64::INFINITY));
    }
    let t_plus = if k_min < -tiny { 0.5 - 1.0 / k_min } else { f64::INFINITY };
    let t_minus = if k_max > tiny { 0.5 - 1.0 / k_max } else { f64::NEG_INFINITY };
    Ok((t_minus, t_plus))
}

/// `φ·M = φ(M) / tr φ(M)`.
pub fn proj_apply<P: PositiveMap + ?Sized>(phi: &P, m: &StateMatrix) -> Result<StateMatrix> {
    if m.dim() != phi.dim() {
        return Err(Error::Dimension(format!("map on D={} applied to state of D={}", phi.dim(), m.dim())));
    }
    let out = phi.map(m.as_mat());
    let tr = out.trace().re;
    let reference = phi.map_adjoint(&CMat::identity(phi.dim(), phi.dim()));
    let bound = herm_eigen(&reference).max();
    if !(tr > eps_psd(bound)) || !tr.is_finite() {
        return Err(Error::DegenerateMap(format!(
            "tr φ(M) = {tr:.3e} vanishes; the map annihilates a positive matrix"
        )));
    }
    Ok(StateMatrix::from_psd_unchecked(&out))
}

/// Lower estimate of `c(φ) = sup_{X,Y} d(φ·X, φ·Y)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ContractionEstimate {
    pub c_lower: f64,
    pub n_pairs: usize,
    pub includes_boundary: bool,
    /// Pure inputs `(x, y)` attaining `c_lower`, when a pure pair did.
    pub witness: Option<(CVec, CVec)>,
}

/// Projective product `m(A, B) m(B, A)` with the two witnesses.
fn cross_ratio(a: &CMat, b: &CMat) -> (f64, CVec, CVec) {
    let (m_ab, v) = m_witness_psd(a, b);
    let (m_ba, w) = m_witness_psd(b, a);
    let p = if m_ab == 0.0 || m_ba == 0.0 { 0.0 } else { m_ab * m_ba };
    (p.clamp(0.0, 1.0), v, w)
}

fn pure(x: &CVec) -> CMat {
    x * x.adjoint()
}

/// Block-coordinate descent of `p = m(φ(xx†), φ(yy†)) m(φ(yy†), φ(xx†))`
/// over pure inputs. Each step minimizes the same upper bound on `p`, so
/// `p` never increases.
fn refine_pure_pair<P: PositiveMap + ?Sized>(phi: &P, mut x: CVec, mut y: CVec) -> (f64, CVec, CVec) {
    let (mut p, mut v, mut w) = cross_ratio(&phi.map(&pure(&x)), &phi.map(&pure(&y)));
    for _ in 0..MAX_ASCENT_STEPS {
        if p == 0.0 {
            break;
        }
        let pv = phi.map_adjoint(&pure(&v));
        let qw = phi.map_adjoint(&pure(&w));
        let (_, x_new) = m_witness_psd(&pv, &qw);
        let (_, y_new) = m_witness_psd(&qw, &pv);
        let (p_new, v_new, w_new) = cross_ratio(&phi.map(&pure(&x_new)), &phi.map(&pure(&y_new)));
        if !(p_new < p) {
            break;
        }
        let gain = p - p_new;
        x = x_new;
        y = y_new;
        v = v_new;
        w = w_new;
        p = p_new;
        if gain <= ASCENT_RTOL * p {
            break;
        }
    }
    (p, x, y)
}

fn d_of(p: f64) -> f64 {
    (1.0 - p) / (1.0 + p)
}

/// Canonical and seeded starting pairs; pair `k` depends only on
/// `(seed, k)`, so the running maximum is nondecreasing in `n_pairs`.
fn start_pair(dim: usize, seed: u64, k: usize) -> (CVec, CVec) {
    let n_basis = dim * (dim - 1) / 2;
    if k < n_basis {
        let mut idx = k;
        for i in 0..dim {
            let row = dim - 1 - i;
            if idx < row {
                return (unit(dim, i), unit(dim, i + 1 + idx));
            }
            idx -= row;
        }
    }
    let mut rng = keyed_rng(seed, tag::PAIRS, k as i64);
    (random_unit_vector(dim, &mut rng), random_unit_vector(dim, &mut rng))
}

fn interior_pair(dim: usize, seed: u64, k: usize) -> (StateMatrix, StateMatrix) {
    let mut rng = keyed_rng(seed, tag::PAIRS, -1 - k as i64);
    (random_state(dim, &mut rng), random_state(dim, &mut rng))
}

/// `c(φ)` estimated from `n_pairs` refined pure pairs and as many interior
/// pairs.
pub fn contraction_estimate<P: PositiveMap + ?Sized>(phi: &P, n_pairs: usize, seed: u64) -> ContractionEstimate {
    contraction_estimate_with(phi, n_pairs, seed, &[])
}

/// As [`contraction_estimate`], with extra state pairs evaluated directly
/// and used as starting points (through their leading eigenvectors).
pub fn contraction_estimate_with<P: PositiveMap + ?Sized>(
    phi: &P,
    n_pairs: usize,
    seed: u64,
    extra: &[(StateMatrix, StateMatrix)],
) -> ContractionEstimate {
    let dim = phi.dim();
    let mut best = ContractionEstimate { c_lower: 0.0, n_pairs, includes_boundary: n_pairs > 0, witness: None };
    let consider_pure = |best: &mut ContractionEstimate, x: CVec, y: CVec| {
        let (p, x, y) = refine_pure_pair(phi, x, y);
        let d = d_of(p);
        if d > best.c_lower {
            best.c_lower = d;
            best.witness = Some((x, y));
        }
    };
    let consider_mixed = |best: &mut ContractionEstimate, a: &StateMatrix, b: &StateMatrix| {
        let (p, _, _) = cross_ratio(&phi.map(a.as_mat()), &phi.map(b.as_mat()));
        let d = d_of(p);
        if d > best.c_lower {
            best.c_lower = d;
            best.witness = None;
        }
    };
    for k in 0..n_pairs {
        let (x, y) = start_pair(dim, seed, k);
        consider_pure(&mut best, x, y);
        let (a, b) = interior_pair(dim, seed, k);
        consider_mixed(&mut best, &a, &b);
    }
    for (a, b) in extra {
        consider_mixed(&mut best, a, b);
        let top = |s: &StateMatrix| -> CVec {
            let e: HermEigen = herm_eigen(s.as_mat());
            e.vector(dim - 1)
        };
        consider_pure(&mut best, top(a), top(b));
    }
    best.c_lower = best.c_lower.clamp(0.0, 1.0);
    best
}

/// Estimate of `c(φ*)`.
pub fn adjoint_contraction_estimate<P: PositiveMap + ?Sized>(
    phi: &P,
    n_pairs: usize,
    seed: u64,
) -> ContractionEstimate {
    contraction_estimate(&Adjoint(phi), n_pairs, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cpmaps::{compose, CPMap};
    use crate::matcore::{trace_norm, C64};
    use crate::rng::{keyed_rng, random_matrix, random_pure_state, random_state, random_unitary};
    use proptest::prelude::*;

    fn diag_state(values: &[f64]) -> StateMatrix {
        StateMatrix::new(HermMatrix::from_real_diagonal(values).into_inner()).unwrap()
    }

    fn random_map(dim: usize, rank: usize, seed: u64) -> CPMap {
        let mut rng = keyed_rng(seed, 77, 0);
        CPMap::new((0..rank).map(|_| random_matrix(dim, dim, &mut rng)).collect()).unwrap()
    }

    /// `d` by bisection on `λ_min(Y + t (X − Y))` along the line.
    fn bisection_d(x: &StateMatrix, y: &StateMatrix) -> f64 {
        let delta = x.as_mat() - y.as_mat();
        let lmin = |t: f64| herm_eigen(&(y.as_mat() + delta.scale(t))).min();
        let scale = herm_eigen(&(x.as_mat() + y.as_mat())).max();
        let feasible = |t: f64| lmin(t) >= -1e-15 * scale;
        let search = |dir: f64| {
            let mut inside = if dir > 0.0 { 1.0 } else { 0.0 };
            let mut step = 1.0;
            let mut outside = inside + dir * step;
            while feasible(outside) {
                inside = outside;
                step *= 2.0;
                outside = inside + dir * step;
            }
            for _ in 0..200 {
                let mid = 0.5 * (inside + outside);
                if feasible(mid) {
                    inside = mid;
                } else {
                    outside = mid;
                }
            }
            inside
        };
        let t_plus = search(1.0);
        let t_minus = if feasible(-1e-13) { search(-1.0) } else { 0.0 };
        (t_plus - t_minus) / (t_minus + t_plus - 2.0 * t_minus * t_plus)
    }

    #[test]
    fn m_examples() {
        let half = StateMatrix::maximally_mixed(2);
        let e1 = diag_state(&[1.0, 0.0]);
        assert!((m_coeff(&half, &half).unwrap() - 1.0).abs() < 1e-14);
        assert!((m_coeff(&half, &e1).unwrap() - 0.5).abs() < 1e-14);
        assert_eq!(m_coeff(&e1, &half).unwrap(), 0.0);
        let neg = HermMatrix::from_real_diagonal(&[1.0, -0.5]);
        assert!(m_coeff_psd(&neg, &HermMatrix::identity(2)).is_err());
    }

    #[test]
    fn pmetric_examples() {
        let mixed = StateMatrix::maximally_mixed(3);
        let v = pmetric(&mixed, &mixed).unwrap();
        assert!(v.d.abs() < 1e-14 && v.d0.abs() < 1e-14);

        let v = pmetric(&StateMatrix::maximally_mixed(2), &diag_state(&[1.0, 0.0])).unwrap();
        assert_eq!(v.d, 1.0);
        assert!(v.d0.is_infinite());

        let v = pmetric(&diag_state(&[0.5, 0.5]), &diag_state(&[0.75, 0.25])).unwrap();
        assert!((v.m_xy - 2.0 / 3.0).abs() < 1e-14);
        assert!((v.m_yx - 0.5).abs() < 1e-14);
        assert!((v.d - 0.5).abs() < 1e-14);
        assert!((v.d0 - (1.5_f64.ln() + 2.0_f64.ln())).abs() < 1e-14);
    }

    #[test]
    fn stored_coefficients_determine_d() {
        let mut rng = keyed_rng(1, 0, 0);
        for _ in 0..20 {
            let v = pmetric(&random_state(3, &mut rng), &random_state(3, &mut rng)).unwrap();
            let p = v.m_xy * v.m_yx;
            assert_eq!(v.d, (1.0 - p) / (1.0 + p));
        }
    }

    #[test]
    fn endpoint_oracle_examples() {
        let x = diag_state(&[0.5, 0.5]);
        let y = diag_state(&[0.75, 0.25]);
        let (t_minus, t_plus) = segment_endpoints(&x, &y).unwrap();
        assert!((t_plus - 3.0).abs() < 1e-12);
        assert!((t_minus + 1.0).abs() < 1e-12);
        assert!((pmetric_endpoint_oracle(&x, &y).unwrap() - 0.5).abs() < 1e-12);
        assert!((bisection_d(&x, &y) - 0.5).abs() < 1e-10);

        let mut rng = keyed_rng(2, 0, 0);
        let interior = random_state(3, &mut rng);
        let boundary = random_pure_state(3, &mut rng);
        assert!((pmetric_endpoint_oracle(&interior, &boundary).unwrap() - 1.0).abs() < 1e-9);
        assert_eq!(pmetric_endpoint_oracle(&interior, &interior).unwrap(), 0.0);
    }

    #[test]
    fn endpoint_oracle_matches_bisection_and_pmetric() {
        let mut rng = keyed_rng(3, 0, 0);
        for dim in 2..=4 {
            for _ in 0..10 {
                let x = random_state(dim, &mut rng);
                let y = random_state(dim, &mut rng);
                let oracle = pmetric_endpoint_oracle(&x, &y).unwrap();
                assert!((oracle - bisection_d(&x, &y)).abs() < 1e-8);
                assert!((oracle - pmetric(&x, &y).unwrap().d).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn singular_states_with_common_kernel() {
        // both supported on span(e1, e2) inside D = 3
        let x = diag_state(&[0.5, 0.5, 0.0]);
        let y = diag_state(&[0.75, 0.25, 0.0]);
        let v = pmetric(&x, &y).unwrap();
        assert!((v.m_xy - 2.0 / 3.0).abs() < 1e-12);
        assert!((v.m_yx - 0.5).abs() < 1e-12);
        assert!((pmetric_endpoint_oracle(&x, &y).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn witnesses_attain_coefficients() {
        let mut rng = keyed_rng(4, 0, 0);
        for _ in 0..10 {
            let x = random_state(4, &mut rng);
            let y = random_state(4, &mut rng);
            let (m, v) = m_witness(&x, &y).unwrap();
            let num = v.dotc(&(x.as_mat() * &v)).re;
            let den = v.dotc(&(y.as_mat() * &v)).re;
            assert!((num - m * den).abs() < 1e-12);
            let gap = HermMatrix::from_hermitian_part(&(x.as_mat() - y.as_mat().scale(m)));
            assert!(gap.eigen().min() > -1e-12);
        }
    }

    #[test]
    fn proj_apply_examples() {
        let mut rng = keyed_rng(5, 0, 0);
        let x = random_state(3, &mut rng);
        let dep = proj_apply(&CPMap::depolarizing(3), &x).unwrap();
        assert!((dep.as_mat() - StateMatrix::maximally_mixed(3).as_mat()).norm() < 1e-14);
        let u = random_unitary(3, &mut rng);
        let rot = proj_apply(&CPMap::unitary(u.clone()).unwrap(), &x).unwrap();
        assert!((rot.as_mat() - &u * x.as_mat() * u.adjoint()).norm() < 1e-13);
        assert_eq!(proj_apply(&CPMap::identity(3), &x).unwrap().as_mat(), x.as_mat());

        let kill = CPMap::new(vec![crate::matcore::matrix_unit(2, 0, 0)]).unwrap();
        assert!(matches!(proj_apply(&kill, &diag_state(&[0.0, 1.0])), Err(Error::DegenerateMap(_))));
    }

    #[test]
    fn contraction_examples() {
        assert!(contraction_estimate(&CPMap::depolarizing(3), 8, 1).c_lower < 1e-12);
        let mut rng = keyed_rng(6, 0, 0);
        let u = CPMap::unitary(random_unitary(3, &mut rng)).unwrap();
        assert_eq!(contraction_estimate(&u, 4, 1).c_lower, 1.0);
        let phi = random_map(2, 4, 7);
        let est = contraction_estimate(&phi, 32, 1);
        assert!(est.c_lower < 1.0 && est.includes_boundary);
    }

    #[test]
    fn contraction_running_max_is_monotone() {
        let phi = random_map(3, 3, 8);
        let mut last = 0.0;
        for n in [1, 2, 4, 8, 16, 32] {
            let c = contraction_estimate(&phi, n, 11).c_lower;
            assert!(c >= last);
            last = c;
        }
    }

    /// Closed form for 2x2 `m(A, B)` with `B` PD: smallest root of
    /// `det(A − λB) = 0`.
    fn m2(a: &CMat, b: &CMat) -> f64 {
        let det = |m: &CMat| (m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]).re;
        let qa = det(b);
        let qb = -(a[(0, 0)] * b[(1, 1)] + a[(1, 1)] * b[(0, 0)] - a[(0, 1)] * b[(1, 0)] - a[(1, 0)] * b[(0, 1)]).re;
        let qc = det(a);
        let disc = (qb * qb - 4.0 * qa * qc).max(0.0).sqrt();
        ((-qb - disc) / (2.0 * qa)).max(0.0)
    }

    #[test]
    fn contraction_matches_bloch_grid_on_qubits() {
        for seed in 0..3 {
            let phi = random_map(2, 4, 900 + seed);
            let (nt, np) = (24, 48);
            let mut images = Vec::new();
            for i in 0..=nt {
                let theta = std::f64::consts::PI * i as f64 / nt as f64;
                for j in 0..np {
                    let ph = 2.0 * std::f64::consts::PI * j as f64 / np as f64;
                    let x = CVec::from_vec(vec![
                        C64::new((theta / 2.0).cos(), 0.0),
                        C64::from_polar((theta / 2.0).sin(), ph),
                    ]);
                    images.push(phi.map(&(&x * x.adjoint())));
                }
            }
            let mut grid_max: f64 = 0.0;
            for a in 0..images.len() {
                for b in a + 1..images.len() {
                    let p = m2(&images[a], &images[b]) * m2(&images[b], &images[a]);
                    grid_max = grid_max.max((1.0 - p) / (1.0 + p));
                }
            }
            let est = contraction_estimate(&phi, 16, 3).c_lower;
            assert!(est >= grid_max - 1e-9, "estimate {est} below grid {grid_max}");
            assert!(est <= grid_max + 5e-3, "estimate {est} far above grid {grid_max}");
        }
    }

    #[test]
    fn contraction_bounds_pair_contraction() {
        let mut rng = keyed_rng(9, 0, 0);
        for seed in 0..5 {
            let phi = random_map(3, 2 + seed as usize, 1000 + seed);
            for _ in 0..5 {
                let x = random_state(3, &mut rng);
                let y = random_state(3, &mut rng);
                let c = contraction_estimate_with(&phi, 16, seed, &[(x.clone(), y.clone())]).c_lower;
                let lhs = pmetric(&proj_apply(&phi, &x).unwrap(), &proj_apply(&phi, &y).unwrap()).unwrap().d;
                let rhs = pmetric(&x, &y).unwrap().d;
                assert!(lhs <= c * rhs + 1e-9, "{lhs} > {c} * {rhs}");
            }
        }
    }

    #[test]
    fn contraction_is_submultiplicative_and_adjoint_symmetric() {
        for seed in 0..5 {
            let phi = random_map(3, 3, 1100 + seed);
            let psi = random_map(3, 2, 1200 + seed);
            let c_phi = contraction_estimate(&phi, 24, 5).c_lower;
            let c_psi = contraction_estimate(&psi, 24, 5).c_lower;
            let c_comp = contraction_estimate(&compose(&phi, &psi).unwrap(), 24, 5).c_lower;
            assert!(c_comp <= c_phi * c_psi + 2e-3);
            let c_adj = adjoint_contraction_estimate(&phi, 24, 5).c_lower;
            assert!((c_phi - c_adj).abs() <= 2e-3, "{c_phi} vs {c_adj}");
            let c_adj_kraus = contraction_estimate(&phi.adjoint(), 24, 5).c_lower;
            assert!((c_adj - c_adj_kraus).abs() <= 1e-9);
        }
    }

    #[test]
    fn d_is_continuous_along_converging_sequences() {
        let mut rng = keyed_rng(10, 0, 0);
        let x = random_pure_state(3, &mut rng);
        let y = random_state(3, &mut rng);
        let target = pmetric(&x, &y).unwrap().d;
        let mixed = StateMatrix::maximally_mixed(3);
        let mut last = f64::INFINITY;
        for k in 1..=8 {
            let s = 10f64.powi(-k);
            let xn = StateMatrix::from_psd(&(x.as_mat().scale(1.0 - s) + mixed.as_mat().scale(s))).unwrap();
            let gap = (pmetric(&xn, &y).unwrap().d - target).abs();
            assert!(gap <= last + 1e-15);
            last = gap;
        }
        assert!(last < 1e-6);
    }

    fn arb_state(dim: usize) -> impl Strategy<Value = StateMatrix> {
        (any::<u64>(), 0usize..3).prop_map(move |(seed, kind)| {
            let mut rng = keyed_rng(seed, 0, 0);
            match kind {
                0 => random_pure_state(dim, &mut rng),
                _ => random_state(dim, &mut rng),
            }
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn m_lies_in_unit_interval(x in arb_state(3), y in arb_state(3)) {
            let m = m_coeff(&x, &y).unwrap();
            prop_assert!((0.0..=1.0).contains(&m));
        }

        #[test]
        fn m_is_supermultiplicative(x in arb_state(3), y in arb_state(3), z in arb_state(3)) {
            let lhs = m_coeff(&x, &z).unwrap() * m_coeff(&z, &y).unwrap();
            prop_assert!(lhs <= m_coeff(&x, &y).unwrap() + 1e-10);
        }

        #[test]
        fn d_is_a_metric(x in arb_state(3), y in arb_state(3), z in arb_state(3)) {
            let dxy = pmetric(&x, &y).unwrap().d;
            prop_assert!((dxy - pmetric(&y, &x).unwrap().d).abs() < 1e-12);
            prop_assert!(pmetric(&x, &x).unwrap().d < 1e-9);
            let dxz = pmetric(&x, &z).unwrap().d;
            let dzy = pmetric(&z, &y).unwrap().d;
            prop_assert!(dxy <= dxz + dzy + 1e-10);
        }

        #[test]
        fn d_dominates_half_trace_distance(x in arb_state(4), y in arb_state(4)) {
            let d = pmetric(&x, &y).unwrap().d;
            let t = trace_norm(&(x.as_mat() - y.as_mat())).unwrap();
            prop_assert!(d >= 0.5 * t - 1e-10);
        }

        #[test]
        fn small_d_iff_close(x in arb_state(3), y in arb_state(3), s in 0.0f64..1.0) {
            // push y toward x with a scale that covers both regimes
            let w = 10f64.powf(-12.0 * s);
            let yy = StateMatrix::from_psd(&(x.as_mat().scale(1.0 - w) + y.as_mat().scale(w))).unwrap();
            let d = pmetric(&x, &yy).unwrap().d;
            let t = trace_norm(&(x.as_mat() - yy.as_mat())).unwrap();
            if d < 1e-9 {
                prop_assert!(t < 1e-8);
            }
        }

        #[test]
        fn endpoint_oracle_agrees(dim in 2usize..=4, seed in any::<u64>()) {
            let mut rng = keyed_rng(seed, 1, 0);
            let x = random_state(dim, &mut rng);
            let y = random_state(dim, &mut rng);
            let oracle = pmetric_endpoint_oracle(&x, &y).unwrap();
            prop_assert!((oracle - pmetric(&x, &y).unwrap().d).abs() < 1e-8);
        }
    }

    #[test]
    fn supremum_of_d_is_attained() {
        let mut rng = keyed_rng(11, 0, 0);
        let x = random_state(3, &mut rng);
        let y = random_pure_state(3, &mut rng);
        assert_eq!(pmetric(&x, &y).unwrap().d, 1.0);
    }
}
