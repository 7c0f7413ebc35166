//! Long compositions of a driven sequence and their limits.
//!
//! Windows `Ψ_{n,m} = φ_n ∘ … ∘ φ_m` are multiplied as superoperators with a
//! per-step rescaling, so a [`CompositionResult`] stores a normalized matrix
//! and the natural log of the dropped scale. The process `Φ_N` is the window
//! `[0, N]` for `N ≥ 0` and `[N, 0]` for `N < 0`.
//!
//! The right limit `Z_n` is approximated by pushing `I/D` through
//! `φ_n ∘ … ∘ φ_{n−depth}` projectively; the left limit `Z'_n` by pulling it
//! back through `φ*_n ∘ … ∘ φ*_{n+depth}`. Both sequences satisfy
//!
//! ```text
//! Z_n = φ_n · Z_{n−1},      Z'_n = φ*_n · Z'_{n+1}.
//! ```
//!
//! Emitted tables:
//!
//! | table | columns |
//! |-------|---------|
//! | convergence | `N, d_RN_Z0` |
//! | kappa | `N, mean_ln_c, per_step, windows_used` |
//! | rank one | `gap, sampled, split_bound` |

use nalgebra::Schur;

use crate::cpmaps::{strict_positivity_certificate, PositiveMap, StrictPositivity, SuperOp, DEFAULT_PROBES};
use crate::ergodic::ErgodicDriver;
use crate::error::{Error, Result};
use crate::fit::linear_fit;
use crate::matcore::{c, trace_norm, unvectorize, vectorize, CMat, CVec, StateMatrix, C64};
use crate::pmetric::{contraction_estimate, pmetric};
use crate::rng::{keyed_rng, random_unit_vector, tag};

/// Largest depth tried by [`limit_sequence`].
pub const MAX_DEPTH: usize = 4096;
/// Contraction estimates at or below this value are at the rounding floor
/// of `d` and are not used for rate fits.
pub const C_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Side {
    Right,
    Left,
}

/// Window `[m, n]` of `Φ_N`.
pub fn process_window(n: i64) -> (i64, i64) {
    if n >= 0 {
        (0, n)
    } else {
        (n, 0)
    }
}

/// `exp(log_scale) · superop` equals `φ_n ∘ … ∘ φ_m`.
#[derive(Clone, Debug, PartialEq)]
pub struct CompositionResult {
    pub superop: SuperOp,
    pub log_scale: f64,
    pub range: (i64, i64),
}

impl CompositionResult {
    pub fn dim(&self) -> usize {
        self.superop.dim()
    }

    /// Unnormalized product; overflows for long windows.
    pub fn reconstructed(&self) -> CMat {
        self.superop.matrix().scale(self.log_scale.exp())
    }

    /// `later ∘ self` for adjacent windows.
    pub fn then(&self, later: &CompositionResult) -> Result<CompositionResult> {
        if later.range.0 != self.range.1 + 1 {
            return Err(Error::Domain(format!(
                "windows {:?} and {:?} are not adjacent",
                self.range, later.range
            )));
        }
        let s = SuperOp::compose(&later.superop, &self.superop)?;
        let (s, ls) = renormalize(s)?;
        Ok(CompositionResult {
            superop: s,
            log_scale: self.log_scale + later.log_scale + ls,
            range: (self.range.0, later.range.1),
        })
    }

    pub fn certificate(&self, n_probes: usize, seed: u64) -> StrictPositivity {
        strict_positivity_certificate(&self.superop, n_probes, seed)
    }
}

fn renormalize(s: SuperOp) -> Result<(SuperOp, f64)> {
    let t = trace_norm(s.matrix())?;
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::DegenerateMap("composition vanished".into()));
    }
    Ok((s.scale(1.0 / t), t.ln()))
}

/// `Ψ_{n,m} = φ_n ∘ … ∘ φ_m`, renormalized by the trace norm after each
/// step.
pub fn compose_window(driver: &ErgodicDriver, m: i64, n: i64) -> Result<CompositionResult> {
    if m > n {
        return Err(Error::Domain(format!("empty window [{m}, {n}]")));
    }
    let (mut s, mut log_scale) = renormalize(driver.superop_at(m))?;
    for k in m + 1..=n {
        let (next, ls) = renormalize(SuperOp::compose(&driver.superop_at(k), &s)?)?;
        s = next;
        log_scale += ls;
    }
    Ok(CompositionResult { superop: s, log_scale, range: (m, n) })
}

/// Perron eigenmatrix with trace one and `ln λ` including the window scale.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenPair {
    pub eigmatrix: StateMatrix,
    pub log_eigvalue: f64,
}

/// Leading eigenpair of the window (`Right`) or of its adjoint (`Left`).
pub fn perron_pair(window: &CompositionResult, side: Side) -> Result<EigenPair> {
    if window.certificate(DEFAULT_PROBES, 0) != StrictPositivity::CertifiedStrict {
        log::warn!("window {:?} is not certified strictly positive; Perron data may not be unique", window.range);
    }
    let mat = match side {
        Side::Right => window.superop.matrix().clone(),
        Side::Left => window.superop.matrix().adjoint(),
    };
    let (lambda, v) = leading_eigen(&mat)?;
    let r = unvectorize(&v, window.dim());
    let tr = r.trace();
    if tr.norm() <= 1e-12 * r.norm() {
        return Err(Error::SpectralGap("leading eigenvector is traceless".into()));
    }
    let state = StateMatrix::from_psd(&(r / tr)).map_err(|_| {
        Error::SpectralGap("leading eigenvector is not a positive matrix".into())
    })?;
    Ok(EigenPair { eigmatrix: state, log_eigvalue: lambda.ln() + window.log_scale })
}

/// Dominant real positive eigenvalue and a unit eigenvector.
pub fn leading_eigen(mat: &CMat) -> Result<(f64, CVec)> {
    let n = mat.nrows();
    let (_, t) = Schur::new(mat.clone()).unpack();
    let diag: Vec<C64> = (0..n).map(|k| t[(k, k)]).collect();
    let lead = (0..n)
        .max_by(|&a, &b| diag[a].norm().total_cmp(&diag[b].norm()))
        .expect("non-empty matrix");
    let lambda = diag[lead];
    let modulus = lambda.norm();
    if !(modulus > 0.0) {
        return Err(Error::SpectralGap("spectral radius is zero".into()));
    }
    if lambda.im.abs() > 1e-8 * modulus || lambda.re <= 0.0 {
        return Err(Error::SpectralGap(format!("leading eigenvalue {lambda} is not real and positive")));
    }
    let second = (0..n).filter(|&k| k != lead).map(|k| diag[k].norm()).fold(0.0, f64::max);
    if second >= (1.0 - 1e-9) * modulus {
        return Err(Error::SpectralGap(format!(
            "leading eigenvalue {modulus:.6e} is not dominant (next modulus {second:.6e})"
        )));
    }
    let shifted = mat - CMat::identity(n, n) * c(lambda.re);
    let svd = shifted.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let k = (0..n)
        .min_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]))
        .expect("non-empty matrix");
    let v = v_t.row(k).adjoint();
    Ok((lambda.re, v))
}

/// One projective step `φ·Y`; fails only when `tr φ(Y)` is not positive.
pub(crate) fn proj_step<P: PositiveMap + ?Sized>(phi: &P, y: &CMat, adjoint: bool) -> Result<CMat> {
    let out = if adjoint { phi.map_adjoint(y) } else { phi.map(y) };
    let tr = out.trace().re;
    if !(tr > 0.0) || !tr.is_finite() {
        return Err(Error::DegenerateMap(format!("projective step with trace {tr:.3e}")));
    }
    Ok((&out + out.adjoint()).scale(0.5 / tr))
}

/// Truncated approximation of `Z_n` (right) or `Z'_n` (left).
#[derive(Clone, Debug)]
pub struct LimitSequence {
    driver: ErgodicDriver,
    side: Side,
    depth: usize,
}

impl LimitSequence {
    /// Fixed truncation depth, without a convergence check.
    pub fn with_depth(driver: &ErgodicDriver, side: Side, depth: usize) -> Self {
        Self { driver: driver.clone(), side, depth }
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn driver(&self) -> &ErgodicDriver {
        &self.driver
    }

    fn z_mat(&self, n: i64) -> Result<CMat> {
        let d = self.driver.dim();
        let mut y = CMat::identity(d, d).unscale(d as f64);
        let depth = self.depth as i64;
        match self.side {
            Side::Right => {
                for k in n - depth..=n {
                    y = proj_step(&self.driver.channel_at(k), &y, false)?;
                }
            }
            Side::Left => {
                for k in (n..=n + depth).rev() {
                    y = proj_step(&self.driver.channel_at(k), &y, true)?;
                }
            }
        }
        Ok(y)
    }

    pub fn z(&self, n: i64) -> Result<StateMatrix> {
        Ok(StateMatrix::from_psd_unchecked(&self.z_mat(n)?))
    }

    /// `z(lo..=hi)` built from a single truncated chain and then propagated
    /// one step at a time, so covariance holds to rounding.
    pub fn window(&self, lo: i64, hi: i64) -> Result<Vec<StateMatrix>> {
        if lo > hi {
            return Ok(Vec::new());
        }
        let len = (hi - lo + 1) as usize;
        let mut out = Vec::with_capacity(len);
        match self.side {
            Side::Right => {
                let mut y = self.z_mat(lo)?;
                out.push(StateMatrix::from_psd_unchecked(&y));
                for k in lo + 1..=hi {
                    y = proj_step(&self.driver.channel_at(k), &y, false)?;
                    out.push(StateMatrix::from_psd_unchecked(&y));
                }
            }
            Side::Left => {
                let mut y = self.z_mat(hi)?;
                out.push(StateMatrix::from_psd_unchecked(&y));
                for k in (lo..hi).rev() {
                    y = proj_step(&self.driver.channel_at(k), &y, true)?;
                    out.push(StateMatrix::from_psd_unchecked(&y));
                }
                out.reverse();
            }
        }
        Ok(out)
    }
}

/// Doubles the depth from `depth` until `d(z_depth(0), z_{depth/2}(0)) < tol`.
pub fn limit_sequence(driver: &ErgodicDriver, side: Side, depth: usize, tol: f64) -> Result<LimitSequence> {
    let mut depth = depth.max(1);
    let mut gap = f64::INFINITY;
    while depth <= MAX_DEPTH {
        let deep = LimitSequence::with_depth(driver, side, depth).z(0)?;
        let shallow = LimitSequence::with_depth(driver, side, depth / 2).z(0)?;
        gap = pmetric(&deep, &shallow)?.d;
        if gap < tol {
            return Ok(LimitSequence::with_depth(driver, side, depth));
        }
        depth *= 2;
    }
    Err(Error::Convergence { depth: depth / 2, gap })
}

/// One row of the contraction-rate table.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct KappaRow {
    /// `Φ_N` composes `N + 1` maps.
    pub n: usize,
    pub mean_ln_c: f64,
    /// `mean_ln_c / N` (undefined for `N = 0`).
    pub per_step: f64,
    pub windows_used: usize,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct KappaEstimate {
    pub kappa_hat: f64,
    pub table: Vec<KappaRow>,
    pub warnings: Vec<String>,
}

impl KappaEstimate {
    /// Whether `(1/N) E[ln c_N]` is nonincreasing within `slack`.
    pub fn per_step_nonincreasing(&self, slack: f64) -> bool {
        let finite: Vec<f64> = self.table.iter().filter(|r| r.n > 0 && r.per_step.is_finite()).map(|r| r.per_step).collect();
        finite.windows(2).all(|w| w[1] <= w[0] + slack)
    }
}

/// Pairs per contraction estimate inside [`kappa_estimate`].
pub const KAPPA_PAIRS: usize = 8;

/// `κ̂ = exp(slope)` of the least-squares line through `(N, E[ln c(Φ_N)])`,
/// averaging over `n_windows` shifted windows.
pub fn kappa_estimate(driver: &ErgodicDriver, n_max: usize, n_windows: usize) -> Result<KappaEstimate> {
    if n_max < 2 {
        return Err(Error::Domain("kappa estimation needs N_max ≥ 2".into()));
    }
    let mut warnings = Vec::new();
    // per window: the running compositions [s, s+N] for N = 1..=n_max
    let mut kept: Vec<Vec<f64>> = Vec::new();
    for w in 0..n_windows.max(1) {
        let s = w as i64 * (n_max as i64 + 1);
        let mut acc = compose_window(driver, s, s)?;
        let mut lnc = Vec::with_capacity(n_max);
        for k in 1..=n_max as i64 {
            acc = acc.then(&compose_window(driver, s + k, s + k)?)?;
            let c = contraction_estimate(&acc.superop, KAPPA_PAIRS, driver.master_seed()).c_lower;
            lnc.push(c.ln());
        }
        if acc.certificate(DEFAULT_PROBES, driver.master_seed()) != StrictPositivity::CertifiedStrict {
            warnings.push(format!("window starting at {s} is not certified strict at N = {n_max}; excluded"));
            continue;
        }
        kept.push(lnc);
    }
    if kept.is_empty() {
        warnings.push("no window is certified strict; strict positivity is unverified and κ̂ = 1".into());
        return Ok(KappaEstimate { kappa_hat: 1.0, table: Vec::new(), warnings });
    }
    let table: Vec<KappaRow> = (1..=n_max)
        .map(|n| {
            let mean = kept.iter().map(|l| l[n - 1]).sum::<f64>() / kept.len() as f64;
            KappaRow { n, mean_ln_c: mean, per_step: mean / n as f64, windows_used: kept.len() }
        })
        .collect();
    let floor = C_FLOOR.ln();
    let usable: Vec<&KappaRow> = table
        .iter()
        .filter(|r| r.mean_ln_c.is_finite() && kept.iter().all(|l| l[r.n - 1] > floor))
        .collect();
    let kappa_hat = if usable.first().map(|r| r.n) != Some(1) {
        // one step already contracts to the rounding floor
        0.0
    } else {
        let xs: Vec<f64> = usable.iter().map(|r| r.n as f64).collect();
        let ys: Vec<f64> = usable.iter().map(|r| r.mean_ln_c).collect();
        match linear_fit(&xs, &ys) {
            Some(f) => f.slope.exp().min(1.0),
            None => (usable[0].mean_ln_c / 2.0).exp(),
        }
    };
    Ok(KappaEstimate { kappa_hat, table, warnings })
}

/// Sampled induced trace norm of `Ψ_{n,m}/tr[Ψ*_{n,m}(I)] − P_{n,m}`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct RankOneError {
    /// Max of `‖Δ(u v†)‖₁` over sampled unit vectors (a lower estimate).
    pub sampled: f64,
    /// `2 max ‖Δ(x x†)‖₁` over sampled pure inputs; every trace-norm-one
    /// input splits into pure states of total weight at most 2.
    pub split_bound: f64,
}

/// Number of sampled input pairs in [`rank_one_error`].
pub const RANK_ONE_SAMPLES: usize = 64;

pub fn rank_one_error(
    driver: &ErgodicDriver,
    m: i64,
    n: i64,
    right: &LimitSequence,
    left: &LimitSequence,
) -> Result<RankOneError> {
    let psi = compose_window(driver, m, n)?;
    let d = driver.dim();
    let norm = unvectorize(&(psi.superop.matrix().adjoint() * vectorize(&CMat::identity(d, d))), d)
        .trace()
        .re;
    if !(norm > 0.0) {
        return Err(Error::DegenerateMap("tr Ψ*(I) vanishes".into()));
    }
    let z_n = right.z(n)?;
    let z_m = left.z(m)?;
    let delta = |input: &CMat| -> Result<f64> {
        let img = unvectorize(&(psi.superop.matrix() * vectorize(input)), d).unscale(norm);
        let w = (z_m.as_mat() * input).trace();
        trace_norm(&(img - z_n.as_mat() * w))
    };
    let mut rng = keyed_rng(driver.master_seed(), tag::SAMPLES, m.wrapping_mul(7919).wrapping_add(n));
    let mut sampled: f64 = 0.0;
    let mut pure: f64 = 0.0;
    for a in 0..d {
        for b in 0..d {
            let mut e = CMat::zeros(d, d);
            e[(a, b)] = c(1.0);
            let v = delta(&e)?;
            sampled = sampled.max(v);
            if a == b {
                pure = pure.max(v);
            }
        }
    }
    for _ in 0..RANK_ONE_SAMPLES {
        let u = random_unit_vector(d, &mut rng);
        let v = random_unit_vector(d, &mut rng);
        sampled = sampled.max(delta(&(&u * v.adjoint()))?);
        let p = delta(&(&u * u.adjoint()))?;
        pure = pure.max(p);
        sampled = sampled.max(p);
    }
    Ok(RankOneError { sampled, split_bound: 2.0 * pure })
}

/// First `N ≤ max_n` with `φ_{start+N} ∘ … ∘ φ_start` certified strict.
pub fn stopping_time(driver: &ErgodicDriver, start: i64, max_n: usize) -> Result<Option<usize>> {
    let mut acc = compose_window(driver, start, start)?;
    for k in 0..=max_n {
        if k > 0 {
            let step = compose_window(driver, start + k as i64, start + k as i64)?;
            acc = acc.then(&step)?;
        }
        if acc.certificate(DEFAULT_PROBES, driver.master_seed()) == StrictPositivity::CertifiedStrict {
            return Ok(Some(k));
        }
    }
    Ok(None)
}

/// `d(R_{−N}, Z₀)` with `Z₀` proxied at depth `2N`.
pub fn right_perron_distance(driver: &ErgodicDriver, n: usize) -> Result<f64> {
    let (m, k) = process_window(-(n as i64));
    let r = perron_pair(&compose_window(driver, m, k)?, Side::Right)?;
    let z = LimitSequence::with_depth(driver, Side::Right, 2 * n).z(0)?;
    Ok(pmetric(&r.eigmatrix, &z)?.d)
}
