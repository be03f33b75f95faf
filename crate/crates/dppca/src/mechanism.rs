//! Samplers for the Gibbs distribution `nu(V | Sigma, beta, k)` on `p x k`
//! orthonormal frames.
//!
//! Three routes are provided:
//!
//! - [`sample_haar_frame`]: the `beta = 0` baseline (pure noise).
//! - [`sample_approx`]: the fast approximate sampler. Draw `Q` Haar on
//!   `O(k)`, draw `Z_ij ~ N(0, 1/(beta p (lambda_j - lambda_{k+i})))`, and
//!   assemble `V = U [(I - Z'Z)_+^{1/2}; Z] Q`. Its output distribution
//!   converges to the Gibbs law in total variation as `p` grows.
//! - [`sample_exact_mh`]: an exactness corrector. The `Z`-marginal of the
//!   Gibbs law has unnormalized density
//!   `det(I - Z'Z)^{-1/2} * zeta(Z) * 1{Z'Z <= I}` where `zeta` is exactly
//!   the Gaussian proposal above, so an independence Metropolis-Hastings
//!   chain with acceptance ratio `exp(lw(Z') - lw(Z))`,
//!   `lw = -1/2 log det(I - Z'Z)`, has the Gibbs `Z`-marginal as its
//!   stationary law. The retained `Z` is assembled with a fresh Haar `Q`,
//!   which is the exact conditional.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::spectral::{covariance, eig_sym, Dataset, SpectralSummary, ORTHO_TOL};

/// A `p x k` matrix with orthonormal columns.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthoFrame {
    matrix: DMatrix<f64>,
}

impl OrthoFrame {
    /// Validates `V'V = I_k` to within [`ORTHO_TOL`] (max-entry deviation).
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let k = matrix.ncols();
        let gram = matrix.tr_mul(&matrix);
        let mut dev = 0.0f64;
        for i in 0..k {
            for j in 0..k {
                let target = if i == j { 1.0 } else { 0.0 };
                dev = dev.max((gram[(i, j)] - target).abs());
            }
        }
        if dev > ORTHO_TOL {
            return Err(Error::NotSymmetric {
                deviation: dev,
                tolerance: ORTHO_TOL,
            });
        }
        Ok(Self { matrix })
    }

    pub fn p(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn k(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }
}

/// The triple `(Sigma-spectrum, beta, k)` defining the Gibbs distribution.
#[derive(Debug, Clone)]
pub struct GibbsTarget {
    summary: SpectralSummary,
    beta: f64,
}

impl GibbsTarget {
    /// For `beta > 0` the spectral gap `lambda_k > lambda_{k+1}` must be
    /// strictly positive so the sampler's Gaussian variances are finite.
    pub fn new(summary: SpectralSummary, beta: f64) -> Result<Self> {
        if !beta.is_finite() || beta < 0.0 {
            return Err(Error::DomainError {
                context: format!("beta must be finite and >= 0, got {beta}"),
            });
        }
        if beta > 0.0 && summary.gap() <= 0.0 {
            return Err(Error::DegenerateGap {
                gap: summary.gap(),
            });
        }
        Ok(Self { summary, beta })
    }

    pub fn summary(&self) -> &SpectralSummary {
        &self.summary
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn p(&self) -> usize {
        self.summary.p()
    }

    pub fn k(&self) -> usize {
        self.summary.k()
    }

    /// Proposal standard deviations
    /// `sd_ij = (beta p (lambda_j - lambda_{k+i}))^{-1/2}`, a `(p-k) x k`
    /// matrix.
    fn proposal_sds(&self) -> DMatrix<f64> {
        let (p, k) = (self.p(), self.k());
        DMatrix::from_fn(p - k, k, |i, j| {
            let d = self.summary.eigenvalue(j) - self.summary.eigenvalue(k + i);
            1.0 / (self.beta * p as f64 * d).sqrt()
        })
    }
}

/// Which sampler backs a mechanism run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplerMode {
    Approximate,
    ExactMh,
}

impl std::fmt::Display for SamplerMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SamplerMode::Approximate => write!(f, "approximate"),
            SamplerMode::ExactMh => write!(f, "exact-mh"),
        }
    }
}

impl std::str::FromStr for SamplerMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "approximate" | "approx" => Ok(SamplerMode::Approximate),
            "exact-mh" | "exact_mh" | "exact" => Ok(SamplerMode::ExactMh),
            other => Err(Error::Config(format!("unknown sampler mode `{other}`"))),
        }
    }
}

/// Sampler configuration shared by all mechanism entry points.
#[derive(Debug, Clone, Copy)]
pub struct SamplerConfig {
    pub mode: SamplerMode,
    /// Metropolis-Hastings burn-in steps before a draw is retained.
    pub mh_burnin: usize,
    /// Chain steps between retained draws in chain runs.
    pub mh_thin: usize,
    /// Master seed; batch draw `i` uses stream `i` of this seed.
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            mode: SamplerMode::Approximate,
            mh_burnin: 64,
            mh_thin: 1,
            seed: crate::rng::DEFAULT_SEED,
        }
    }
}

impl SamplerConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_mode(mut self, mode: SamplerMode) -> Self {
        self.mode = mode;
        self
    }
}

/// Haar-uniform frame on `O(p, k)`: QR of a standard Gaussian matrix with the
/// signs of the `R` diagonal fixed positive, which yields the exact Haar law.
pub fn sample_haar_frame<R: Rng + ?Sized>(p: usize, k: usize, rng: &mut R) -> Result<OrthoFrame> {
    if k == 0 || k > p {
        return Err(Error::RankOutOfRange { k, p });
    }
    let g = DMatrix::from_fn(p, k, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..k {
        if r[(j, j)] < 0.0 {
            for i in 0..p {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    OrthoFrame::new(q)
}

/// Haar-uniform `k x k` orthogonal matrix.
fn sample_haar_square<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Result<DMatrix<f64>> {
    Ok(sample_haar_frame(k, k, rng)?.into_matrix())
}

fn draw_z<R: Rng + ?Sized>(sds: &DMatrix<f64>, rng: &mut R) -> DMatrix<f64> {
    DMatrix::from_fn(sds.nrows(), sds.ncols(), |i, j| {
        sds[(i, j)] * rng.sample::<f64, _>(StandardNormal)
    })
}

/// Assembles `V = U [(I - Z'Z)_+^{1/2}; Z] Q`.
///
/// When the clip is active (`lambda_max(Z'Z) > 1`, rare in the utility
/// regime) the stacked matrix is no longer column-orthonormal, so it is
/// polar-corrected before the rotation; the correction is the identity
/// whenever no eigenvalue was clipped.
fn assemble_frame(
    summary: &SpectralSummary,
    z: &DMatrix<f64>,
    q: &DMatrix<f64>,
) -> Result<OrthoFrame> {
    let (p, k) = (summary.p(), summary.k());
    let ztz = z.tr_mul(z);
    let mut m = DMatrix::identity(k, k) - &ztz;
    for i in 0..k {
        for j in (i + 1)..k {
            let s = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = s;
            m[(j, i)] = s;
        }
    }
    let eig = m.symmetric_eigen();
    let clipped = eig.eigenvalues.iter().any(|&v| v < 0.0);
    // (I - Z'Z)_+^{1/2} via the k x k eigendecomposition
    let w = &eig.eigenvectors;
    let roots = DVector::from_fn(k, |i, _| eig.eigenvalues[i].max(0.0).sqrt());
    let scaled = DMatrix::from_fn(k, k, |i, j| w[(i, j)] * roots[j]);
    let sqrt_plus = scaled * w.transpose();

    let mut stacked = DMatrix::zeros(p, k);
    stacked.view_mut((0, 0), (k, k)).copy_from(&sqrt_plus);
    stacked.view_mut((k, 0), (p - k, k)).copy_from(z);

    if clipped {
        // polar orthonormalization: B (B'B)^{-1/2}
        let gram = stacked.tr_mul(&stacked);
        let ge = gram.symmetric_eigen();
        let gw = &ge.eigenvectors;
        let inv_roots = DVector::from_fn(k, |i, _| 1.0 / ge.eigenvalues[i].max(1e-300).sqrt());
        let gscaled = DMatrix::from_fn(k, k, |i, j| gw[(i, j)] * inv_roots[j]);
        let corr = gscaled * gw.transpose();
        stacked *= corr;
    }

    let v = summary.eigenvectors() * (stacked * q);
    OrthoFrame::new(v)
}

/// Approximate sample from the Gibbs distribution. `beta = 0` routes to the
/// Haar baseline.
pub fn sample_approx<R: Rng + ?Sized>(target: &GibbsTarget, rng: &mut R) -> Result<OrthoFrame> {
    if target.beta() == 0.0 {
        return sample_haar_frame(target.p(), target.k(), rng);
    }
    let q = sample_haar_square(target.k(), rng)?;
    let z = draw_z(&target.proposal_sds(), rng);
    assemble_frame(target.summary(), &z, &q)
}

/// Threshold below 1 at which `Z'Z` is considered strictly inside the support.
const SUPPORT_MARGIN: f64 = 1e-12;

/// Log ratio between the exact `Z`-marginal and the Gaussian proposal, up to
/// an additive constant: `-1/2 log det(I - Z'Z)` inside the support, `-inf`
/// outside.
pub fn log_weight_z(z: &DMatrix<f64>) -> f64 {
    let ztz = z.tr_mul(z);
    let eig = ztz.symmetric_eigen();
    let mut lw = 0.0;
    for &w in eig.eigenvalues.iter() {
        if w >= 1.0 - SUPPORT_MARGIN {
            return f64::NEG_INFINITY;
        }
        lw -= 0.5 * (1.0 - w).ln();
    }
    lw
}

/// Acceptance bookkeeping for the independence chain.
#[derive(Debug, Clone, Copy, Default)]
pub struct MhReport {
    pub proposals: u64,
    pub accepted: u64,
}

impl MhReport {
    pub fn acceptance_rate(&self) -> f64 {
        if self.proposals == 0 {
            return f64::NAN;
        }
        self.accepted as f64 / self.proposals as f64
    }

    fn merge(&mut self, other: &MhReport) {
        self.proposals += other.proposals;
        self.accepted += other.accepted;
    }
}

const CHAIN_INIT_ATTEMPTS: usize = 1000;

/// Independence Metropolis-Hastings chain on `Z`-space.
struct ZChain {
    sds: DMatrix<f64>,
    cur: DMatrix<f64>,
    cur_lw: f64,
    report: MhReport,
}

impl ZChain {
    fn init<R: Rng + ?Sized>(sds: DMatrix<f64>, rng: &mut R) -> Result<Self> {
        for _ in 0..CHAIN_INIT_ATTEMPTS {
            let z = draw_z(&sds, rng);
            let lw = log_weight_z(&z);
            if lw.is_finite() {
                return Ok(Self {
                    sds,
                    cur: z,
                    cur_lw: lw,
                    report: MhReport::default(),
                });
            }
        }
        Err(Error::ChainInitFailure {
            attempts: CHAIN_INIT_ATTEMPTS,
        })
    }

    fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let proposal = draw_z(&self.sds, rng);
        let lw = log_weight_z(&proposal);
        self.report.proposals += 1;
        let u: f64 = rng.random();
        if u.ln() < lw - self.cur_lw {
            self.cur = proposal;
            self.cur_lw = lw;
            self.report.accepted += 1;
        }
    }
}

/// Exact sample from the Gibbs distribution via the independence chain:
/// `mh_burnin` steps, then the retained `Z` is assembled with a fresh Haar
/// `Q`. Returns the frame together with the chain's acceptance counts.
pub fn sample_exact_mh<R: Rng + ?Sized>(
    target: &GibbsTarget,
    config: &SamplerConfig,
    rng: &mut R,
) -> Result<(OrthoFrame, MhReport)> {
    if target.beta() == 0.0 {
        let frame = sample_haar_frame(target.p(), target.k(), rng)?;
        return Ok((frame, MhReport::default()));
    }
    let mut chain = ZChain::init(target.proposal_sds(), rng)?;
    for _ in 0..config.mh_burnin {
        chain.step(rng);
    }
    let q = sample_haar_square(target.k(), rng)?;
    let frame = assemble_frame(target.summary(), &chain.cur, &q)?;
    Ok((frame, chain.report))
}

/// Long-chain variant for diagnostics: after `burnin` steps, retains the
/// current `Z` every `thin` steps until `count` states are collected.
pub fn mh_run<R: Rng + ?Sized>(
    target: &GibbsTarget,
    count: usize,
    burnin: usize,
    thin: usize,
    rng: &mut R,
) -> Result<(Vec<DMatrix<f64>>, MhReport)> {
    let thin = thin.max(1);
    let mut chain = ZChain::init(target.proposal_sds(), rng)?;
    for _ in 0..burnin {
        chain.step(rng);
    }
    let mut states = Vec::with_capacity(count);
    while states.len() < count {
        for _ in 0..thin {
            chain.step(rng);
        }
        states.push(chain.cur.clone());
    }
    Ok((states, chain.report))
}

/// The exponential mechanism: covariance, eigendecomposition, then a draw
/// from `nu(. | Sigma(X), beta, k)` with the configured sampler.
///
/// Privacy semantics require the norm bound `|x| <= sqrt(p)` on every row;
/// an uncertified dataset is sampled anyway but logged as a warning.
pub fn exp_mechanism<R: Rng + ?Sized>(
    dataset: &Dataset,
    beta: f64,
    k: usize,
    config: &SamplerConfig,
    rng: &mut R,
) -> Result<OrthoFrame> {
    if !dataset.norm_certified() {
        log::warn!(
            "dataset rows are not certified to satisfy |x| <= sqrt(p); \
             the privacy guarantee does not apply"
        );
    }
    let cov = covariance(dataset);
    let summary = eig_sym(&cov, k)?.with_sample_count(dataset.n());
    let target = GibbsTarget::new(summary, beta)?;
    match config.mode {
        SamplerMode::Approximate => sample_approx(&target, rng),
        SamplerMode::ExactMh => Ok(sample_exact_mh(&target, config, rng)?.0),
    }
}

fn draw_one(target: &GibbsTarget, config: &SamplerConfig, stream: u64) -> Result<OrthoFrame> {
    let mut rng = stream_rng(config.seed, stream);
    match config.mode {
        SamplerMode::Approximate => sample_approx(target, &mut rng),
        SamplerMode::ExactMh => Ok(sample_exact_mh(target, config, &mut rng)?.0),
    }
}

/// `count` draws with per-draw sub-seeds derived from `config.seed` by a
/// counter split, so the batch is identical regardless of the worker count.
pub fn sample_batch(
    target: &GibbsTarget,
    count: usize,
    config: &SamplerConfig,
) -> Result<Vec<OrthoFrame>> {
    if count == 0 {
        return Err(Error::Config("batch count must be >= 1".into()));
    }
    (0..count as u64)
        .into_par_iter()
        .map(|i| draw_one(target, config, i))
        .collect()
}

/// Streaming form of [`sample_batch`]: maps each draw through `f` without
/// keeping the frames. Results come back in draw order.
pub fn sample_batch_map<T, F>(
    target: &GibbsTarget,
    count: usize,
    config: &SamplerConfig,
    f: F,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &OrthoFrame) -> T + Sync,
{
    if count == 0 {
        return Err(Error::Config("batch count must be >= 1".into()));
    }
    (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let frame = draw_one(target, config, i)?;
            Ok(f(i as usize, &frame))
        })
        .collect()
}

/// Aggregate acceptance statistics over a batch of independent exact-MH
/// draws (one chain per retained frame).
pub fn batch_mh_report(
    target: &GibbsTarget,
    count: usize,
    config: &SamplerConfig,
) -> Result<MhReport> {
    let reports: Vec<MhReport> = (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(config.seed, i);
            sample_exact_mh(target, config, &mut rng).map(|(_, r)| r)
        })
        .collect::<Result<_>>()?;
    let mut total = MhReport::default();
    for r in &reports {
        total.merge(r);
    }
    Ok(total)
}
