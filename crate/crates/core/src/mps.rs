//! Periodic matrix product states built from a driven channel sequence.
//!
//! Site tensors are `A_kⁱ = B_kⁱ†` where `Bⁱ` are the Kraus operators of
//! `φ_k`, so the transfer map of site `k` is `φ_k(M) = Σ Aⁱ† M Aⁱ`. On an
//! interval `[m, n]` the state has amplitudes `tr[A_m^{i_m} ⋯ A_n^{i_n}]` in
//! the computational basis `|i_m, …, i_n⟩`, indexed lexicographically with
//! `i_m` the most significant digit. Observable matrices use the same order.
//!
//! A local observable `O` on `[a, b]` enters through
//!
//! ```text
//! Ô(M) = Σ ⟨i|O|j⟩ A_b^{i_b}† ⋯ A_a^{i_a}† M A_a^{j_a} ⋯ A_b^{j_b},
//! ```
//!
//! and the gauge built from the left limit `Z'` turns every transfer map into
//! a channel:
//!
//! ```text
//! ξ_k  = tr φ*_k(Z'_{k+1})
//! Ã_kⁱ = ξ_k^{-1/2} Z'_k^{-1/2} A_kⁱ Z'_{k+1}^{1/2}
//! Z̃_k  = Z'_{k+1}^{1/2} Z_k Z'_{k+1}^{1/2} / tr[Z'_{k+1} Z_k]
//! ```
//!
//! with `φ̃_k(Z̃_{k−1}) = Z̃_k` and thermodynamic limit `W(O) = tr Õ(Z̃_{a−1})`.

use crate::cpmaps::{CPMap, PositiveMap, SuperOp};
use crate::ergodic::ErgodicDriver;
use crate::error::{Error, Result};
use crate::matcore::{eps_pd, hermitian_defect, sqrt_psd, CMat, CVec, HermMatrix, PsdClass, StateMatrix, C64, TOL_HERM};
use crate::process::LimitSequence;

/// Longest observable support.
pub const MAX_SUPPORT: usize = 6;
/// Largest state vector, in bits of the index.
pub const MAX_STATE_BITS: f64 = 22.0;
/// Largest accepted imaginary part of a real expectation, relative to
/// `max(1, |value|)`.
pub const IMAG_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct MpsChain {
    interval: (i64, i64),
    /// `tensors[k − m][i] = A_kⁱ`.
    tensors: Vec<Vec<CMat>>,
    bond_dim: usize,
    phys_dim: usize,
}

impl MpsChain {
    /// Periodic chain on `[m, n]` with `A_kⁱ = B_kⁱ†` from the driver.
    pub fn from_driver(driver: &ErgodicDriver, m: i64, n: i64) -> Result<Self> {
        if m > n {
            return Err(Error::Support(format!("empty chain [{m}, {n}]")));
        }
        let tensors = (m..=n)
            .map(|k| driver.channel_at(k).kraus().iter().map(|b| b.adjoint()).collect())
            .collect();
        Self::from_tensors(m, tensors)
    }

    pub fn from_tensors(m: i64, tensors: Vec<Vec<CMat>>) -> Result<Self> {
        let first = tensors.first().and_then(|t| t.first()).ok_or_else(|| Error::Support("chain has no sites".into()))?;
        let bond_dim = first.nrows();
        let phys_dim = tensors[0].len();
        for (k, site) in tensors.iter().enumerate() {
            if site.len() != phys_dim {
                return Err(Error::Dimension(format!(
                    "site {} has {} tensors, expected {phys_dim}",
                    m + k as i64,
                    site.len()
                )));
            }
            if site.iter().any(|a| a.shape() != (bond_dim, bond_dim)) {
                return Err(Error::Dimension(format!("site {} has a tensor of the wrong shape", m + k as i64)));
            }
        }
        let n = m + tensors.len() as i64 - 1;
        Ok(Self { interval: (m, n), tensors, bond_dim, phys_dim })
    }

    pub fn interval(&self) -> (i64, i64) {
        self.interval
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn bond_dim(&self) -> usize {
        self.bond_dim
    }

    pub fn phys_dim(&self) -> usize {
        self.phys_dim
    }

    /// `A_kⁱ` for `i = 0..d`.
    pub fn site(&self, k: i64) -> &[CMat] {
        &self.tensors[(k - self.interval.0) as usize]
    }

    /// `φ_k(M) = Σ A_kⁱ† M A_kⁱ`.
    pub fn transfer(&self, k: i64) -> CPMap {
        CPMap::new(self.site(k).iter().map(|a| a.adjoint()).collect()).expect("validated tensors")
    }

    /// The same periodic state written with gauge-fixed tensors: `Ã_k` on
    /// `[m, n−1]` and `ξ_n^{-1/2} Z'_n^{-1/2} A_n Z'_m^{1/2}` at the last
    /// site, which closes the gauge around the ring.
    pub fn gauge_transformed(&self, gauge: &GaugeData) -> Result<MpsChain> {
        let (m, n) = self.interval;
        gauge.check_covers(m, n + 1)?;
        let mut tensors: Vec<Vec<CMat>> = (m..n).map(|k| gauge.tilde_site(k).to_vec()).collect();
        let left = sqrt_psd(gauge.z_prime(n).herm(), true)?;
        let right = sqrt_psd(gauge.z_prime(m).herm(), false)?;
        let s = 1.0 / gauge.xi(n).sqrt();
        tensors.push(self.site(n).iter().map(|a| (left.as_mat() * a * right.as_mat()).scale(s)).collect());
        MpsChain::from_tensors(m, tensors)
    }
}

/// Hermitian operator on the sites `[m, n]`, dense in lexicographic order.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalObservable {
    support: (i64, i64),
    matrix: CMat,
    phys_dim: usize,
}

impl LocalObservable {
    pub fn new(support: (i64, i64), matrix: CMat, phys_dim: usize) -> Result<Self> {
        let (m, n) = support;
        if m > n {
            return Err(Error::Support(format!("empty support [{m}, {n}]")));
        }
        let len = (n - m + 1) as usize;
        if len > MAX_SUPPORT {
            return Err(Error::Support(format!("support length {len} exceeds {MAX_SUPPORT}")));
        }
        let size = phys_dim.pow(len as u32);
        if matrix.shape() != (size, size) {
            return Err(Error::Dimension(format!(
                "observable on {len} sites of dimension {phys_dim} must be {size}x{size}, got {:?}",
                matrix.shape()
            )));
        }
        let defect = hermitian_defect(&matrix);
        if defect > TOL_HERM {
            return Err(Error::NotHermitian(defect));
        }
        Ok(Self { support, matrix, phys_dim })
    }

    pub fn identity(support: (i64, i64), phys_dim: usize) -> Result<Self> {
        let len = (support.1 - support.0 + 1).max(0) as u32;
        let size = phys_dim.pow(len);
        Self::new(support, CMat::identity(size, size), phys_dim)
    }

    pub fn support(&self) -> (i64, i64) {
        self.support
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn phys_dim(&self) -> usize {
        self.phys_dim
    }

    pub fn len(&self) -> usize {
        (self.support.1 - self.support.0 + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// `M ↦ Σ_t P_t† M Q_t`.
#[derive(Clone, Debug)]
pub struct LocalTransfer {
    dim: usize,
    terms: Vec<(CMat, CMat)>,
}

impl LocalTransfer {
    /// `Ô` for `O` on `[a, b]` from the site tensors `sites[k] = A_{a+k}`.
    pub fn new(sites: &[&[CMat]], o: &LocalObservable) -> Self {
        let dim = sites[0][0].nrows();
        let products = string_products(sites, dim);
        let size = products.len();
        let terms = (0..size)
            .filter_map(|i| {
                let mut q = CMat::zeros(dim, dim);
                let mut any = false;
                for (j, pj) in products.iter().enumerate() {
                    let w = o.matrix[(i, j)];
                    if w != C64::new(0.0, 0.0) {
                        q += pj * w;
                        any = true;
                    }
                }
                any.then(|| (products[i].clone(), q))
            })
            .collect();
        Self { dim, terms }
    }

    pub fn apply(&self, m: &CMat) -> CMat {
        self.terms.iter().fold(CMat::zeros(self.dim, self.dim), |acc, (p, q)| acc + p.adjoint() * m * q)
    }

    /// Matrix `Σ_t Q_tᵀ ⊗ P_t†` on column-major vectorizations.
    pub fn superop(&self) -> SuperOp {
        let n = self.dim * self.dim;
        let mat = self
            .terms
            .iter()
            .fold(CMat::zeros(n, n), |acc, (p, q)| acc + q.transpose().kronecker(&p.adjoint()));
        SuperOp::from_matrix(self.dim, mat).expect("consistent dimension")
    }
}

/// `A^{i_0} ⋯ A^{i_{L−1}}` for every multi-index in lexicographic order.
fn string_products(sites: &[&[CMat]], dim: usize) -> Vec<CMat> {
    let mut out = vec![CMat::identity(dim, dim)];
    for site in sites {
        out = out.iter().flat_map(|p| site.iter().map(move |a| p * a)).collect();
    }
    out
}

fn check_support(chain: &MpsChain, o: &LocalObservable) -> Result<()> {
    let (m, n) = chain.interval;
    let (a, b) = o.support;
    if a < m || b > n {
        return Err(Error::Support(format!("observable support [{a}, {b}] is not inside the chain [{m}, {n}]")));
    }
    if o.phys_dim != chain.phys_dim {
        return Err(Error::Dimension(format!(
            "observable acts on spins of dimension {}, chain has {}",
            o.phys_dim, chain.phys_dim
        )));
    }
    Ok(())
}

/// `Ô` materialized as a superoperator.
pub fn observable_hat(chain: &MpsChain, o: &LocalObservable) -> Result<SuperOp> {
    check_support(chain, o)?;
    let sites: Vec<&[CMat]> = (o.support.0..=o.support.1).map(|k| chain.site(k)).collect();
    Ok(LocalTransfer::new(&sites, o).superop())
}

/// Normalized amplitudes together with `N² = Σ |tr[A⋯A]|²`.
#[derive(Clone, Debug, PartialEq)]
pub struct BruteForceState {
    pub amplitudes: CVec,
    pub norm_sq: f64,
}

pub fn brute_force_state(chain: &MpsChain) -> Result<BruteForceState> {
    let bits = chain.len() as f64 * (chain.phys_dim as f64).log2();
    if bits > MAX_STATE_BITS {
        return Err(Error::Capacity(format!(
            "state vector needs {bits:.1} index bits, limit is {MAX_STATE_BITS}"
        )));
    }
    let dim = chain.bond_dim;
    let sites: Vec<&[CMat]> = chain.tensors.iter().map(|t| t.as_slice()).collect();
    // depth-first over prefixes keeps one partial product per level
    let total = chain.phys_dim.pow(chain.len() as u32);
    let mut amps = CVec::zeros(total);
    let mut stack: Vec<CMat> = vec![CMat::identity(dim, dim)];
    let mut idx = vec![0usize; chain.len()];
    let d = chain.phys_dim;
    let l = chain.len();
    let mut pos = 0usize;
    loop {
        // extend prefix to full length
        while stack.len() <= l {
            let level = stack.len() - 1;
            let next = stack[level].clone() * &sites[level][idx[level]];
            stack.push(next);
        }
        amps[pos] = stack[l].trace();
        pos += 1;
        // advance the odometer
        let mut level = l;
        loop {
            if level == 0 {
                let norm_sq = amps.norm_squared();
                if !(norm_sq > 0.0) {
                    return Err(Error::DegenerateMap("all amplitudes vanish".into()));
                }
                return Ok(BruteForceState { amplitudes: amps.unscale(norm_sq.sqrt()), norm_sq });
            }
            level -= 1;
            stack.pop();
            idx[level] += 1;
            if idx[level] < d {
                break;
            }
            idx[level] = 0;
        }
    }
}

/// `O ψ` for `O` acting on its support inside the chain.
pub fn apply_local(chain: &MpsChain, psi: &CVec, o: &LocalObservable) -> Result<CVec> {
    check_support(chain, o)?;
    let d = chain.phys_dim;
    let (m, n) = chain.interval;
    let inner = d.pow(o.len() as u32);
    let right = d.pow((n - o.support.1) as u32);
    let left = d.pow((o.support.0 - m) as u32);
    let mut out = CVec::zeros(psi.len());
    let mut block = CVec::zeros(inner);
    for l in 0..left {
        for r in 0..right {
            for s in 0..inner {
                block[s] = psi[(l * inner + s) * right + r];
            }
            let img = &o.matrix * &block;
            for s in 0..inner {
                out[(l * inner + s) * right + r] = img[s];
            }
        }
    }
    Ok(out)
}

/// `⟨ψ|O|ψ⟩` on the dense state vector.
pub fn brute_force_expectation(chain: &MpsChain, state: &BruteForceState, o: &LocalObservable) -> Result<f64> {
    let img = apply_local(chain, &state.amplitudes, o)?;
    real_part(state.amplitudes.dotc(&img))
}

fn real_part(z: C64) -> Result<f64> {
    if z.im.abs() > IMAG_TOL * z.re.abs().max(1.0) {
        return Err(Error::ImaginaryResidue(z.im));
    }
    Ok(z.re)
}

/// Renormalized product of transfer superoperators over `[lo, hi]`
/// (identity when empty), with its log scale.
fn transfer_product(chain: &MpsChain, lo: i64, hi: i64) -> (CMat, f64) {
    let n = chain.bond_dim * chain.bond_dim;
    let mut s = CMat::identity(n, n);
    let mut log_scale = 0.0;
    for k in lo..=hi {
        s = chain.transfer(k).superop().matrix() * s;
        let norm = s.norm();
        s.unscale_mut(norm);
        log_scale += norm.ln();
    }
    (s, log_scale)
}

/// `Tr[φ_n ∘ … ∘ φ_{b+1} ∘ Ô ∘ φ_{a−1} ∘ … ∘ φ_m] / Tr[φ_n ∘ … ∘ φ_m]`.
pub fn finite_expectation(chain: &MpsChain, o: &LocalObservable) -> Result<f64> {
    finite_product_expectation(chain, &[o])
}

/// `⟨ψ|O₂ O₁|ψ⟩` through transfer maps, for `O₁` left of `O₂`.
pub fn finite_pair_expectation(chain: &MpsChain, o1: &LocalObservable, o2: &LocalObservable) -> Result<f64> {
    if o1.support.1 >= o2.support.0 {
        return Err(Error::Support(format!(
            "supports {:?} and {:?} must be disjoint with the first on the left",
            o1.support, o2.support
        )));
    }
    finite_product_expectation(chain, &[o1, o2])
}

fn finite_product_expectation(chain: &MpsChain, ops: &[&LocalObservable]) -> Result<f64> {
    let (m, n) = chain.interval;
    let dim2 = chain.bond_dim * chain.bond_dim;
    let mut s = CMat::identity(dim2, dim2);
    let mut log_scale = 0.0;
    let mut next = m;
    for o in ops {
        let hat = observable_hat(chain, o)?;
        let (gap, ls) = transfer_product(chain, next, o.support.0 - 1);
        let hat_norm = hat.matrix().norm();
        if hat_norm == 0.0 {
            return Ok(0.0);
        }
        s = hat.matrix().unscale(hat_norm) * gap * s;
        log_scale += ls + hat_norm.ln();
        let norm = s.norm();
        s.unscale_mut(norm);
        log_scale += norm.ln();
        next = o.support.1 + 1;
    }
    let (tail, ls_tail) = transfer_product(chain, next, n);
    let (full, ls_full) = transfer_product(chain, m, n);
    let num = (tail * s).trace();
    let den = full.trace();
    if den.norm() == 0.0 {
        return Err(Error::DegenerateMap("Tr of the full transfer product vanishes".into()));
    }
    real_part(num / den * (log_scale + ls_tail - ls_full).exp())
}

/// `ξ`, `Ã`, `Z̃` and the untransformed data they come from, on `[m, n]`.
#[derive(Clone, Debug)]
pub struct GaugeData {
    range: (i64, i64),
    /// `A_kⁱ`, `k ∈ [m, n]`.
    kraus: Vec<Vec<CMat>>,
    /// `Ã_kⁱ`, `k ∈ [m, n]`.
    tilde_kraus: Vec<Vec<CMat>>,
    /// `ξ_k`, `k ∈ [m, n]`.
    xi: Vec<f64>,
    /// `Z'_k`, `k ∈ [m, n+1]`.
    z_prime: Vec<StateMatrix>,
    /// `Z_k`, `k ∈ [m−1, n]`.
    z: Vec<StateMatrix>,
    /// `Z̃_k`, `k ∈ [m−1, n]`.
    tilde_z: Vec<StateMatrix>,
}

impl GaugeData {
    pub fn range(&self) -> (i64, i64) {
        self.range
    }

    pub fn xi(&self, k: i64) -> f64 {
        self.xi[(k - self.range.0) as usize]
    }

    pub fn site(&self, k: i64) -> &[CMat] {
        &self.kraus[(k - self.range.0) as usize]
    }

    pub fn tilde_site(&self, k: i64) -> &[CMat] {
        &self.tilde_kraus[(k - self.range.0) as usize]
    }

    /// `φ̃_k(M) = Σ Ã_kⁱ† M Ã_kⁱ`.
    pub fn tilde_channel(&self, k: i64) -> CPMap {
        CPMap::new(self.tilde_site(k).iter().map(|a| a.adjoint()).collect()).expect("validated tensors")
    }

    pub fn channel(&self, k: i64) -> CPMap {
        CPMap::new(self.site(k).iter().map(|a| a.adjoint()).collect()).expect("validated tensors")
    }

    pub fn z_prime(&self, k: i64) -> &StateMatrix {
        &self.z_prime[(k - self.range.0) as usize]
    }

    pub fn z(&self, k: i64) -> &StateMatrix {
        &self.z[(k - self.range.0 + 1) as usize]
    }

    pub fn tilde_z(&self, k: i64) -> &StateMatrix {
        &self.tilde_z[(k - self.range.0 + 1) as usize]
    }

    /// `Z̃'_k = I/D` for every `k`.
    pub fn tilde_z_prime(&self) -> StateMatrix {
        StateMatrix::maximally_mixed(self.z_prime[0].dim())
    }

    fn check_covers(&self, lo: i64, hi: i64) -> Result<()> {
        let (m, n) = self.range;
        if lo < m || hi > n + 1 {
            return Err(Error::Support(format!("gauge on [{m}, {n}] does not cover [{lo}, {hi}]")));
        }
        Ok(())
    }
}

/// Gauge data on `[m, n]` from the two limit sequences.
pub fn gauge_fix(
    driver: &ErgodicDriver,
    z_left: &LimitSequence,
    z_right: &LimitSequence,
    m: i64,
    n: i64,
) -> Result<GaugeData> {
    if m > n {
        return Err(Error::Support(format!("empty gauge range [{m}, {n}]")));
    }
    let z_prime = z_left.window(m, n + 1)?;
    let z = z_right.window(m - 1, n)?;
    let mut roots = Vec::with_capacity(z_prime.len());
    for (k, zp) in z_prime.iter().enumerate() {
        if zp.classify() != PsdClass::PositiveDefinite {
            log::error!("left limit at {} is singular", m + k as i64);
            let eig = zp.herm().eigen();
            return Err(Error::Singular { min: eig.min(), threshold: eps_pd(eig.scale()) });
        }
        roots.push((sqrt_psd(zp.herm(), false)?, sqrt_psd(zp.herm(), true)?));
    }
    let mut kraus = Vec::new();
    let mut tilde_kraus = Vec::new();
    let mut xi = Vec::new();
    for k in m..=n {
        let j = (k - m) as usize;
        let channel = driver.channel_at(k);
        let xi_k = channel.map_adjoint(z_prime[j + 1].as_mat()).trace().re;
        if !(xi_k > 0.0) {
            return Err(Error::DegenerateMap(format!("ξ_{k} = {xi_k} is not positive")));
        }
        let a: Vec<CMat> = channel.kraus().iter().map(|b| b.adjoint()).collect();
        let s = 1.0 / xi_k.sqrt();
        let tilde: Vec<CMat> = a.iter().map(|ai| (roots[j].1.as_mat() * ai * roots[j + 1].0.as_mat()).scale(s)).collect();
        kraus.push(a);
        tilde_kraus.push(tilde);
        xi.push(xi_k);
    }
    let tilde_z = (0..z.len())
        .map(|j| {
            // Z̃_k uses Z'_{k+1}, and z[j] is Z_{m−1+j}
            let root = roots[j].0.as_mat();
            let inner = root * z[j].as_mat() * root;
            StateMatrix::from_psd(&inner)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GaugeData { range: (m, n), kraus, tilde_kraus, xi, z_prime, z, tilde_z })
}

fn tilde_hat(gauge: &GaugeData, o: &LocalObservable) -> Result<LocalTransfer> {
    let (a, b) = o.support;
    gauge.check_covers(a, b)?;
    if b > gauge.range.1 {
        return Err(Error::Support(format!("gauge does not cover site {b}")));
    }
    let sites: Vec<&[CMat]> = (a..=b).map(|k| gauge.tilde_site(k)).collect();
    if sites[0].len() != o.phys_dim {
        return Err(Error::Dimension("observable and chain spin dimensions differ".into()));
    }
    Ok(LocalTransfer::new(&sites, o))
}

/// `W(O) = tr Õ(Z̃_{a−1})`.
pub fn thermo_expectation(gauge: &GaugeData, o: &LocalObservable) -> Result<f64> {
    let hat = tilde_hat(gauge, o)?;
    real_part(hat.apply(gauge.tilde_z(o.support.0 - 1).as_mat()).trace())
}

/// `⟨Z'_{b+1}|Ô|Z_{a−1}⟩ / ⟨Z'_{b+1}|φ_b ∘ … ∘ φ_a|Z_{a−1}⟩` with the
/// untransformed tensors.
pub fn thermo_expectation_ratio(gauge: &GaugeData, o: &LocalObservable) -> Result<f64> {
    let (a, b) = o.support;
    gauge.check_covers(a, b)?;
    let sites: Vec<&[CMat]> = (a..=b).map(|k| gauge.site(k)).collect();
    let hat = LocalTransfer::new(&sites, o);
    let z_in = gauge.z(a - 1).as_mat();
    let z_out = gauge.z_prime(b + 1).as_mat();
    let num = (z_out * hat.apply(z_in)).trace();
    let mut x = z_in.clone();
    for k in a..=b {
        x = gauge.channel(k).map(&x);
    }
    let den = (z_out * x).trace();
    real_part(num / den)
}

/// Left and right sides of the denominator factorization on `[a, b]`:
/// `⟨Z'_{b+1}|φ_b ∘ … ∘ φ_a|Z_{a−1}⟩`, `[Π tr φ_k(Z_{k−1})] ⟨Z'_{b+1}|Z_b⟩`
/// and `(Π ξ_k) tr[Z'_a Z_{a−1}]`.
pub fn denominator_factorization(gauge: &GaugeData, a: i64, b: i64) -> Result<(f64, f64, f64)> {
    gauge.check_covers(a, b)?;
    let mut x = gauge.z(a - 1).as_mat().clone();
    let mut traces = 1.0;
    let mut xis = 1.0;
    for k in a..=b {
        x = gauge.channel(k).map(&x);
        traces *= gauge.channel(k).map(gauge.z(k - 1).as_mat()).trace().re;
        xis *= gauge.xi(k);
    }
    let direct = (gauge.z_prime(b + 1).as_mat() * x).trace().re;
    let via_traces = traces * (gauge.z_prime(b + 1).as_mat() * gauge.z(b).as_mat()).trace().re;
    let via_xi = xis * (gauge.z_prime(a).as_mat() * gauge.z(a - 1).as_mat()).trace().re;
    Ok((direct, via_traces, via_xi))
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct Correlation {
    pub w12: f64,
    pub w1: f64,
    pub w2: f64,
    pub connected: f64,
}

/// `W(O₂O₁)`, `W(O₁)`, `W(O₂)` and the connected part, for `O₁` left of
/// `O₂`.
pub fn correlation(gauge: &GaugeData, o1: &LocalObservable, o2: &LocalObservable) -> Result<Correlation> {
    let (m1, n1) = o1.support;
    let (m2, _) = o2.support;
    if n1 >= m2 {
        return Err(Error::Support(format!(
            "supports [{m1}, {n1}] and {:?} must be disjoint with the first on the left",
            o2.support
        )));
    }
    let hat1 = tilde_hat(gauge, o1)?;
    let hat2 = tilde_hat(gauge, o2)?;
    let mut x = hat1.apply(gauge.tilde_z(m1 - 1).as_mat());
    for k in n1 + 1..m2 {
        x = gauge.tilde_channel(k).map(&x);
    }
    let w12 = real_part(hat2.apply(&x).trace())?;
    let w1 = thermo_expectation(gauge, o1)?;
    let w2 = thermo_expectation(gauge, o2)?;
    Ok(Correlation { w12, w1, w2, connected: w12 - w1 * w2 })
}

/// `W` of a pair product checked against the dense state: `⟨ψ|O₂ O₁|ψ⟩`.
pub fn brute_force_pair_expectation(
    chain: &MpsChain,
    state: &BruteForceState,
    o1: &LocalObservable,
    o2: &LocalObservable,
) -> Result<f64> {
    let first = apply_local(chain, &state.amplitudes, o1)?;
    let second = apply_local(chain, &first, o2)?;
    real_part(state.amplitudes.dotc(&second))
}

/// Hermitian matrix helper for building observables from real diagonals.
pub fn diagonal_observable(support: (i64, i64), diag: &[f64], phys_dim: usize) -> Result<LocalObservable> {
    LocalObservable::new(support, HermMatrix::from_real_diagonal(diag).into_inner(), phys_dim)
}
