//! Seeded two-sided sequences of CP maps `n ↦ φ_n`, `n ∈ ℤ`.
//!
//! Each driver is an invertible measure-preserving shift in disguise: the
//! sample point `ω` is the master seed (plus any base data), and shifting the
//! driver by `k` only moves an index offset. `channel_at(n)` never depends on
//! the order of earlier queries.
//!
//! | kind | `φ_n` |
//! |------|-------|
//! | IID | independent draw keyed by `n` |
//! | ROTATION | `U(θ_n) Bⁱ` with `θ_n = frac(ω₀ + nα)`, `U(θ) = exp(2πiθH)` |
//! | MARKOV | `φ^{(s_n)}` for a stationary two-sided Markov chain `s_n` |
//! | FIXED_PLUS_NOISE | `Bⁱ + ε G_nⁱ`, re-projected to a channel when `B` is one |

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use nalgebra::DMatrix;
use rand::Rng;

use crate::cpmaps::{strict_positivity_certificate, CPMap, StrictPositivity, SuperOp};
use crate::error::{Error, Result};
use crate::matcore::{sqrt_psd, CMat, HermMatrix, C64};
use crate::rng::{keyed_rng, random_isometry, random_matrix, tag};

/// Nearest double to `(√5 − 1)/2`.
pub fn golden_alpha() -> f64 {
    (5f64.sqrt() - 1.0) / 2.0
}

const MARKOV_CHECKPOINT: i64 = 1024;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum KindTag {
    Iid,
    Rotation,
    Markov,
    FixedPlusNoise,
}

#[derive(Clone, Debug)]
pub enum DriverKind {
    Iid {
        trace_preserving: bool,
    },
    Rotation {
        base: CPMap,
        hamiltonian: HermMatrix,
        omega0: f64,
        alpha: f64,
    },
    Markov {
        channels: Vec<CPMap>,
        transition: DMatrix<f64>,
        stationary: Vec<f64>,
        checkpoints: Arc<Mutex<BTreeMap<i64, usize>>>,
    },
    FixedPlusNoise {
        base: CPMap,
        epsilon: f64,
        base_is_channel: bool,
    },
}

#[derive(Clone, Debug)]
pub struct ErgodicDriver {
    kind: DriverKind,
    dim: usize,
    kraus_rank: usize,
    seed: u64,
    offset: i64,
}

impl ErgodicDriver {
    /// Independent maps: Haar isometries split into `d` Kraus blocks when
    /// `trace_preserving`, otherwise Gaussian Kraus operators with variance
    /// `1/(dD)` per entry (so that `E Σ Bⁱ†Bⁱ = I`).
    pub fn iid(dim: usize, kraus_rank: usize, seed: u64, trace_preserving: bool) -> Result<Self> {
        check_dims(dim, kraus_rank)?;
        Ok(Self { kind: DriverKind::Iid { trace_preserving }, dim, kraus_rank, seed, offset: 0 })
    }

    pub fn rotation(base: CPMap, hamiltonian: HermMatrix, omega0: f64, alpha: f64, seed: u64) -> Result<Self> {
        if hamiltonian.dim() != base.dim() {
            return Err(Error::Dimension("rotation generator and base channel differ in dimension".into()));
        }
        if !omega0.is_finite() || !alpha.is_finite() {
            return Err(Error::Domain("rotation parameters must be finite".into()));
        }
        let (dim, kraus_rank) = (base.dim(), base.rank());
        Ok(Self {
            kind: DriverKind::Rotation { base, hamiltonian, omega0, alpha },
            dim,
            kraus_rank,
            seed,
            offset: 0,
        })
    }

    /// Rotation driver whose base channel, generator and phase `ω₀` are all
    /// drawn from `seed`; the angle is [`golden_alpha`].
    pub fn rotation_seeded(dim: usize, kraus_rank: usize, seed: u64) -> Result<Self> {
        check_dims(dim, kraus_rank)?;
        let mut rng = keyed_rng(seed, tag::ROTATION, 0);
        let base = isometry_channel(dim, kraus_rank, &mut rng);
        let g = random_matrix(dim, dim, &mut rng);
        let hamiltonian = HermMatrix::from_hermitian_part(&g);
        let omega0: f64 = rng.random();
        Self::rotation(base, hamiltonian, omega0, golden_alpha(), seed)
    }

    pub fn fixed_plus_noise(base: CPMap, epsilon: f64, seed: u64) -> Result<Self> {
        if !(epsilon >= 0.0) || !epsilon.is_finite() {
            return Err(Error::Domain(format!("noise amplitude {epsilon} must be a finite nonnegative number")));
        }
        let (dim, kraus_rank) = (base.dim(), base.rank());
        let base_is_channel = base.is_trace_preserving(1e-10);
        Ok(Self {
            kind: DriverKind::FixedPlusNoise { base, epsilon, base_is_channel },
            dim,
            kraus_rank,
            seed,
            offset: 0,
        })
    }

    /// The constant sequence `φ_n = φ`.
    pub fn fixed(channel: CPMap) -> Self {
        Self::fixed_plus_noise(channel, 0.0, 0).expect("zero noise is valid")
    }

    /// Stationary two-sided Markov chain over a channel alphabet. The
    /// transition matrix must be row-stochastic and irreducible.
    pub fn markov(channels: Vec<CPMap>, transition: DMatrix<f64>, seed: u64) -> Result<Self> {
        let k = channels.len();
        if k == 0 {
            return Err(Error::Domain("Markov driver needs at least one channel".into()));
        }
        let dim = channels[0].dim();
        let kraus_rank = channels[0].rank();
        if channels.iter().any(|ch| ch.dim() != dim) {
            return Err(Error::Dimension("Markov channels differ in dimension".into()));
        }
        if transition.shape() != (k, k) {
            return Err(Error::Dimension(format!("transition matrix must be {k}x{k}")));
        }
        for r in 0..k {
            let row = transition.row(r);
            if row.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
                return Err(Error::Domain(format!("transition row {r} has a negative or non-finite entry")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(Error::Domain(format!("transition row {r} sums to {sum}, not 1")));
            }
        }
        let stationary = stationary_distribution(&transition)?;
        Ok(Self {
            kind: DriverKind::Markov {
                channels,
                transition,
                stationary,
                checkpoints: Arc::new(Mutex::new(BTreeMap::new())),
            },
            dim,
            kraus_rank,
            seed,
            offset: 0,
        })
    }

    pub fn kind(&self) -> &DriverKind {
        &self.kind
    }

    pub fn kind_tag(&self) -> KindTag {
        match self.kind {
            DriverKind::Iid { .. } => KindTag::Iid,
            DriverKind::Rotation { .. } => KindTag::Rotation,
            DriverKind::Markov { .. } => KindTag::Markov,
            DriverKind::FixedPlusNoise { .. } => KindTag::FixedPlusNoise,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kraus_rank(&self) -> usize {
        self.kraus_rank
    }

    pub fn master_seed(&self) -> u64 {
        self.seed
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    /// `φ_{n; T^k ω} = φ_{n+k; ω}`.
    pub fn shift(&self, k: i64) -> Self {
        let mut out = self.clone();
        out.offset = self.offset + k;
        out
    }

    /// `φ_n`, bit-identical on every call.
    pub fn channel_at(&self, n: i64) -> CPMap {
        let n = n + self.offset;
        match &self.kind {
            DriverKind::Iid { trace_preserving } => {
                let mut rng = keyed_rng(self.seed, tag::IID, n);
                if *trace_preserving {
                    isometry_channel(self.dim, self.kraus_rank, &mut rng)
                } else {
                    let s = 1.0 / ((self.dim * self.kraus_rank) as f64).sqrt();
                    let kraus = (0..self.kraus_rank).map(|_| random_matrix(self.dim, self.dim, &mut rng).scale(s)).collect();
                    CPMap::new(kraus).expect("square Kraus blocks")
                }
            }
            DriverKind::Rotation { base, hamiltonian, omega0, alpha } => {
                let theta = rotation_phase(*omega0, *alpha, n);
                let eig = hamiltonian.eigen();
                let phases: Vec<C64> = eig
                    .values
                    .iter()
                    .map(|l| C64::from_polar(1.0, 2.0 * std::f64::consts::PI * theta * l))
                    .collect();
                let mut scaled = eig.vectors.clone();
                for (k, p) in phases.iter().enumerate() {
                    let col = scaled.column(k) * *p;
                    scaled.set_column(k, &col);
                }
                let u = &scaled * eig.vectors.adjoint();
                CPMap::new(base.kraus().iter().map(|b| &u * b).collect()).expect("square Kraus blocks")
            }
            DriverKind::Markov { channels, .. } => channels[self.markov_state(n)].clone(),
            DriverKind::FixedPlusNoise { base, epsilon, base_is_channel } => {
                if *epsilon == 0.0 {
                    return base.clone();
                }
                let mut rng = keyed_rng(self.seed, tag::NOISE, n);
                let kraus: Vec<CMat> = base
                    .kraus()
                    .iter()
                    .map(|b| b + random_matrix(self.dim, self.dim, &mut rng).scale(*epsilon))
                    .collect();
                if *base_is_channel {
                    reproject_channel(&kraus).expect("perturbed stack keeps full column rank")
                } else {
                    CPMap::new(kraus).expect("square Kraus blocks")
                }
            }
        }
    }

    pub fn superop_at(&self, n: i64) -> SuperOp {
        self.channel_at(n).superop()
    }

    /// Chain state index `s_n` for the MARKOV kind (`None` otherwise).
    pub fn markov_state_at(&self, n: i64) -> Option<usize> {
        match self.kind {
            DriverKind::Markov { .. } => Some(self.markov_state(n + self.offset)),
            _ => None,
        }
    }

    /// Rotation phase `θ_n` for the ROTATION kind (`None` otherwise).
    pub fn rotation_phase_at(&self, n: i64) -> Option<f64> {
        match self.kind {
            DriverKind::Rotation { omega0, alpha, .. } => Some(rotation_phase(omega0, alpha, n + self.offset)),
            _ => None,
        }
    }

    fn markov_state(&self, n: i64) -> usize {
        let DriverKind::Markov { transition, stationary, checkpoints, .. } = &self.kind else {
            unreachable!("markov_state on a non-Markov driver")
        };
        let origin = {
            let mut rng = keyed_rng(self.seed, tag::MARKOV, 0);
            sample_index(stationary.iter().copied(), rng.random())
        };
        if n == 0 {
            return origin;
        }
        let dir = n.signum();
        let step_to = |from: usize, idx: i64| -> usize {
            let u: f64 = keyed_rng(self.seed, tag::MARKOV, idx).random();
            if dir > 0 {
                sample_index(transition.row(from).iter().copied(), u)
            } else {
                // time-reversed chain P̂(i, j) = π_j P(j, i) / π_i
                let pi_i = stationary[from];
                sample_index((0..stationary.len()).map(|j| stationary[j] * transition[(j, from)] / pi_i), u)
            }
        };
        // nearest cached checkpoint between 0 and n
        let (mut pos, mut state) = {
            let cache = checkpoints.lock().expect("checkpoint cache poisoned");
            let found = if dir > 0 {
                cache.range(1..=n).next_back().map(|(&k, &s)| (k, s))
            } else {
                cache.range(n..=-1).next().map(|(&k, &s)| (k, s))
            };
            found.unwrap_or((0, origin))
        };
        let mut fresh = Vec::new();
        while pos != n {
            pos += dir;
            state = step_to(state, pos);
            if pos % MARKOV_CHECKPOINT == 0 {
                fresh.push((pos, state));
            }
        }
        if !fresh.is_empty() {
            let mut cache = checkpoints.lock().expect("checkpoint cache poisoned");
            cache.extend(fresh);
        }
        state
    }
}

fn check_dims(dim: usize, kraus_rank: usize) -> Result<()> {
    if dim == 0 || kraus_rank == 0 {
        return Err(Error::Dimension("D and d must be positive".into()));
    }
    Ok(())
}

fn rotation_phase(omega0: f64, alpha: f64, n: i64) -> f64 {
    let t = omega0 + n as f64 * alpha;
    t - t.floor()
}

/// Channel whose stacked Kraus operators form a Haar `(dD) × D` isometry.
fn isometry_channel<R: Rng + ?Sized>(dim: usize, kraus_rank: usize, rng: &mut R) -> CPMap {
    let v = random_isometry(dim * kraus_rank, dim, rng);
    let kraus = (0..kraus_rank).map(|i| v.rows(i * dim, dim).into_owned()).collect();
    CPMap::new(kraus).expect("square Kraus blocks")
}

/// `K (K†K)^{-1/2}` on the stacked Kraus column, split back into blocks.
pub fn reproject_channel(kraus: &[CMat]) -> Result<CPMap> {
    let dim = kraus[0].nrows();
    let gram = kraus.iter().fold(CMat::zeros(dim, dim), |acc, b| acc + b.adjoint() * b);
    let inv = sqrt_psd(&HermMatrix::from_hermitian_part(&gram), true)?;
    CPMap::new(kraus.iter().map(|b| b * inv.as_mat()).collect())
}

fn sample_index(weights: impl Iterator<Item = f64>, u: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (k, w) in weights.enumerate() {
        acc += w;
        if w > 0.0 {
            last = k;
        }
        if u < acc {
            return k;
        }
    }
    last
}

/// Left Perron vector of an irreducible stochastic matrix, `π P = π`.
pub fn stationary_distribution(p: &DMatrix<f64>) -> Result<Vec<f64>> {
    let k = p.nrows();
    let mut a = p.transpose() - DMatrix::identity(k, k);
    for j in 0..k {
        a[(k - 1, j)] = 1.0;
    }
    let mut rhs = nalgebra::DVector::zeros(k);
    rhs[k - 1] = 1.0;
    let pi = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Domain("transition matrix is not irreducible".into()))?;
    if pi.iter().any(|&x| !(x > 1e-14)) {
        return Err(Error::Domain("transition matrix is not irreducible".into()));
    }
    let total: f64 = pi.iter().sum();
    Ok(pi.iter().map(|x| x / total).collect())
}

/// Findings on the two standing hypotheses over sampled windows.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct AssumptionReport {
    pub horizon: usize,
    pub starts: Vec<i64>,
    /// Entry `k` is the fraction of windows `[s, s+k]` certified strict.
    pub strict_fraction: Vec<f64>,
    /// Entry `k` is the fraction of windows `[s, s+k]` left undecided.
    pub undecided_fraction: Vec<f64>,
    /// `(n, kernel condition holds)` for each sampled channel.
    pub kernel_checks: Vec<(i64, bool)>,
    /// First `N₀` with `φ_{s+N₀}∘…∘φ_s` certified strict, per start.
    pub stopping_times: Vec<Option<usize>>,
    /// Kolmogorov–Smirnov distance of the rotation phases from uniform.
    /// Heuristic only: no finite sample certifies ergodicity.
    pub equidistribution_ks: Option<f64>,
    pub strict_window_found: bool,
    pub kernel_condition_holds: bool,
}

impl AssumptionReport {
    /// Names of the hypotheses that could not be confirmed.
    pub fn violations(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if !self.strict_window_found {
            out.push("strict positivity of some finite window is unverified");
        }
        if !self.kernel_condition_holds {
            out.push("kernel condition fails for a sampled map");
        }
        out
    }
}

/// Number of starting points used by [`validate_assumptions`].
pub const DEFAULT_STARTS: usize = 16;
/// Sample length of the equidistribution heuristic.
pub const EQUIDISTRIBUTION_SAMPLES: usize = 10_000;

pub fn validate_assumptions(driver: &ErgodicDriver, horizon: usize, n_probes: usize) -> AssumptionReport {
    let starts: Vec<i64> = (0..DEFAULT_STARTS as i64).map(|j| 37 * j - 296).collect();
    validate_assumptions_at(driver, horizon, n_probes, &starts)
}

pub fn validate_assumptions_at(
    driver: &ErgodicDriver,
    horizon: usize,
    n_probes: usize,
    starts: &[i64],
) -> AssumptionReport {
    let horizon = horizon.max(1);
    let mut strict_counts = vec![0usize; horizon];
    let mut undecided_counts = vec![0usize; horizon];
    let mut stopping_times = Vec::with_capacity(starts.len());
    let mut kernel: BTreeMap<i64, bool> = BTreeMap::new();
    for &s in starts {
        let mut window = SuperOp::identity(driver.dim());
        let mut tau = None;
        for k in 0..horizon {
            let n = s + k as i64;
            let ch = driver.channel_at(n);
            kernel.entry(n).or_insert_with(|| ch.kernel_condition_check());
            window = SuperOp::compose(&ch.superop(), &window).expect("equal dimensions");
            let norm = window.matrix().norm();
            if norm > 0.0 {
                window = window.scale(1.0 / norm);
            }
            match strict_positivity_certificate(&window, n_probes, driver.master_seed()) {
                StrictPositivity::CertifiedStrict => {
                    strict_counts[k] += 1;
                    tau.get_or_insert(k);
                }
                StrictPositivity::Undecided => undecided_counts[k] += 1,
                StrictPositivity::CertifiedNotStrict => {}
            }
        }
        stopping_times.push(tau);
    }
    let total = starts.len().max(1) as f64;
    let equidistribution_ks = match driver.kind() {
        DriverKind::Rotation { .. } => {
            let phases: Vec<f64> = (0..EQUIDISTRIBUTION_SAMPLES as i64)
                .map(|n| driver.rotation_phase_at(n).expect("rotation driver"))
                .collect();
            Some(ks_uniform(phases))
        }
        _ => None,
    };
    let kernel_checks: Vec<(i64, bool)> = kernel.into_iter().collect();
    AssumptionReport {
        horizon,
        starts: starts.to_vec(),
        strict_fraction: strict_counts.iter().map(|&c| c as f64 / total).collect(),
        undecided_fraction: undecided_counts.iter().map(|&c| c as f64 / total).collect(),
        kernel_condition_holds: kernel_checks.iter().all(|&(_, ok)| ok),
        kernel_checks,
        strict_window_found: strict_counts.iter().any(|&c| c > 0),
        stopping_times,
        equidistribution_ks,
    }
}

/// `sup_x |F_n(x) − x|` for a sample in `[0, 1)`.
pub fn ks_uniform(mut sample: Vec<f64>) -> f64 {
    sample.sort_by(f64::total_cmp);
    let n = sample.len() as f64;
    sample.iter().enumerate().fold(0.0_f64, |acc, (i, &x)| {
        let hi = (i + 1) as f64 / n - x;
        let lo = x - i as f64 / n;
        acc.max(hi).max(lo)
    })
}
