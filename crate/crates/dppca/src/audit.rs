//! Monte-Carlo verification harness: empirical estimation error, empirical
//! trade-off functions against the worst-case neighbor, small-dimension
//! quadrature oracles, and Procrustes alignment.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mechanism::{sample_batch_map, GibbsTarget, OrthoFrame, SamplerConfig};
use crate::rng::derived_seed;
use crate::spectral::{covariance, eig_sym, Dataset, SpectralSummary};
use crate::theory::{
    gdp_tradeoff, privacy_profile, sigma_beta, utility_prediction, worst_case_neighbor,
    UtilityPrediction,
};

/// Monte-Carlo estimate of the estimation errors with its theoretical
/// overlay.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UtilityEstimate {
    pub spec_err_sq_hat: f64,
    pub fro_err_sq_hat: f64,
    pub n_mc: usize,
    pub seed: u64,
    pub theoretical: UtilityPrediction,
}

/// Monte-Carlo estimate of a trade-off function with its Gaussian overlay.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TradeoffEstimate {
    pub alpha_grid: Vec<f64>,
    /// Estimated Type II error at each alpha.
    pub beta_hat: Vec<f64>,
    /// Draws per hypothesis.
    pub n_mc: usize,
    pub seed: u64,
    /// `Phi(Phi^{-1}(1 - alpha) - sigma_hat)` on the same grid.
    pub theoretical_overlay: Vec<f64>,
    /// Plug-in `sigma_beta`.
    pub sigma_hat: f64,
}

/// Estimation error of `n_mc` Gibbs draws against the true principal
/// subspace, averaged per draw.
///
/// Both error metrics come from the overlap matrix `G = U*'V V'U*`:
/// `|U*U*' - VV'|^2 = |I_k - G|` and `|U*U*' - VV'|_F^2 = 2k - 2 tr G`,
/// which costs `O(p k^2 + k^3)` per draw instead of forming the `p x p`
/// projectors.
pub fn estimate_utility(
    summary: &SpectralSummary,
    beta: f64,
    n_mc: usize,
    config: &SamplerConfig,
) -> Result<UtilityEstimate> {
    if n_mc == 0 {
        return Err(Error::Config("n_mc must be >= 1".into()));
    }
    let u_star = summary.u_star();
    let k = summary.k();
    let target = GibbsTarget::new(summary.clone(), beta)?;
    let per_draw = sample_batch_map(&target, n_mc, config, |_, frame| {
        let o = u_star.tr_mul(frame.matrix());
        let g = &o * o.transpose();
        let m = DMatrix::identity(k, k) - &g;
        let spec = m.symmetric_eigen().eigenvalues.amax();
        let fro = 2.0 * k as f64 - 2.0 * g.trace();
        (spec, fro)
    })?;
    let inv = 1.0 / n_mc as f64;
    let spec_err_sq_hat = per_draw.iter().map(|d| d.0).sum::<f64>() * inv;
    let fro_err_sq_hat = per_draw.iter().map(|d| d.1).sum::<f64>() * inv;
    Ok(UtilityEstimate {
        spec_err_sq_hat,
        fro_err_sq_hat,
        n_mc,
        seed: config.seed,
        theoretical: utility_prediction(summary, beta)?,
    })
}

/// What the alternative hypothesis of a trade-off estimate samples from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TradeoffAlternative {
    /// The dataset with the worst-case neighbor `x*` added:
    /// `Sigma_alt = (n Sigma + x* x*') / (n + 1)`.
    WorstCaseNeighbor,
    /// A second independent batch from the null (calibration check: the
    /// estimate should track `1 - alpha`).
    IndependentNull,
}

/// Nearest-rank upper quantile: the `ceil(q n)`-th smallest value (1-based),
/// clamped to the minimum at `q = 0`.
fn nearest_rank(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    let rank = (q * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

/// Empirical trade-off function of the mechanism on `dataset` against its
/// worst-case neighbor, with the asymptotic Gaussian overlay.
///
/// Procedure: draw `n_mc` null statistics `|V' x*|^2`, take the nearest-rank
/// `(1-alpha)` quantile `t_alpha` per alpha, draw `n_mc` alternative
/// statistics, and report the fraction strictly below `t_alpha`.
pub fn estimate_tradeoff(
    dataset: &Dataset,
    beta: f64,
    k: usize,
    n_mc: usize,
    alpha_grid: &[f64],
    config: &SamplerConfig,
    alternative: TradeoffAlternative,
) -> Result<TradeoffEstimate> {
    if n_mc < 100 {
        return Err(Error::Config(format!(
            "trade-off estimation needs n_mc >= 100, got {n_mc}"
        )));
    }
    if alpha_grid.iter().any(|a| !(0.0..=1.0).contains(a)) {
        return Err(Error::Config("alpha grid entries must lie in [0, 1]".into()));
    }
    let n = dataset.n();
    let cov = covariance(dataset);
    let summary = eig_sym(&cov, k)?.with_sample_count(n);
    let profile = privacy_profile(&summary)?;
    let sigma_hat = sigma_beta(&profile, beta)?.sqrt();
    let (x_star, _) = worst_case_neighbor(&summary, beta)?;

    let stat = |_: usize, frame: &OrthoFrame| frame.matrix().tr_mul(&x_star).norm_squared();

    let null_target = GibbsTarget::new(summary, beta)?;
    let mut null_stats = sample_batch_map(&null_target, n_mc, config, stat)?;

    let alt_config = config.with_seed(derived_seed(config.seed, 1));
    let alt_stats = match alternative {
        TradeoffAlternative::WorstCaseNeighbor => {
            let nf = n as f64;
            let alt_cov = (cov * nf + &x_star * x_star.transpose()) / (nf + 1.0);
            let alt_summary = eig_sym(&alt_cov, k)?.with_sample_count(n + 1);
            let alt_target = GibbsTarget::new(alt_summary, beta)?;
            sample_batch_map(&alt_target, n_mc, &alt_config, stat)?
        }
        TradeoffAlternative::IndependentNull => {
            sample_batch_map(&null_target, n_mc, &alt_config, stat)?
        }
    };

    null_stats.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let inv = 1.0 / n_mc as f64;
    let mut beta_hat = Vec::with_capacity(alpha_grid.len());
    let mut overlay = Vec::with_capacity(alpha_grid.len());
    for &alpha in alpha_grid {
        let t_alpha = nearest_rank(&null_stats, 1.0 - alpha);
        let below = alt_stats.iter().filter(|&&s| s < t_alpha).count();
        beta_hat.push(below as f64 * inv);
        overlay.push(gdp_tradeoff(sigma_hat, alpha)?);
    }
    Ok(TradeoffEstimate {
        alpha_grid: alpha_grid.to_vec(),
        beta_hat,
        n_mc,
        seed: config.seed,
        theoretical_overlay: overlay,
        sigma_hat,
    })
}

/// Which sphere moment the quadrature oracle evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SphereMoment {
    /// `E[(v'u_1)^2]`
    OverlapSq,
    /// `E[(v'u_1)^4]`
    OverlapFourth,
}

/// Brute-force moment of the Gibbs law on the unit sphere in `p = 2` or
/// `p = 3` dimensions (`k = 1`), by tensor-product midpoint quadrature with
/// `resolution` points per angle.
pub fn sphere_quadrature_moments_with_resolution(
    sigma_diag: &[f64],
    beta: f64,
    moment: SphereMoment,
    resolution: usize,
) -> Result<f64> {
    let p = sigma_diag.len();
    let g = |v1: f64| match moment {
        SphereMoment::OverlapSq => v1 * v1,
        SphereMoment::OverlapFourth => v1 * v1 * v1 * v1,
    };
    let mut num = 0.0f64;
    let mut den = 0.0f64;
    match p {
        2 => {
            let h = std::f64::consts::TAU / resolution as f64;
            for i in 0..resolution {
                let phi = (i as f64 + 0.5) * h;
                let (s, c) = phi.sin_cos();
                let e = (beta * (sigma_diag[0] * c * c + sigma_diag[1] * s * s)).exp();
                num += g(c) * e;
                den += e;
            }
        }
        3 => {
            let h_theta = std::f64::consts::PI / resolution as f64;
            let h_phi = std::f64::consts::TAU / resolution as f64;
            for i in 0..resolution {
                let theta = (i as f64 + 0.5) * h_theta;
                let (st, ct) = theta.sin_cos();
                for j in 0..resolution {
                    let phi = (j as f64 + 0.5) * h_phi;
                    let (sp, cp) = phi.sin_cos();
                    let v = [st * cp, st * sp, ct];
                    let quad: f64 = (0..3).map(|a| sigma_diag[a] * v[a] * v[a]).sum();
                    let e = (1.5 * beta * quad).exp() * st;
                    num += g(v[0]) * e;
                    den += e;
                }
            }
        }
        _ => return Err(Error::UnsupportedDimension { p }),
    }
    Ok(num / den)
}

/// [`sphere_quadrature_moments_with_resolution`] at the default resolution
/// (3000 points per angle, refined enough that halving the spacing moves the
/// result by less than 1e-4).
pub fn sphere_quadrature_moments(
    sigma_diag: &[f64],
    beta: f64,
    moment: SphereMoment,
) -> Result<f64> {
    sphere_quadrature_moments_with_resolution(sigma_diag, beta, moment, 3000)
}

/// Rotates `v` onto the orientation of `u_ref`: returns `V R` with
/// `R = argmin_{R in O(k)} |V R - U_ref|_F`, computed from the singular
/// decomposition of `V'U_ref` (left factors times right factors transposed).
/// The spanned subspace is unchanged.
pub fn procrustes_align(v: &OrthoFrame, u_ref: &OrthoFrame) -> Result<OrthoFrame> {
    if v.p() != u_ref.p() || v.k() != u_ref.k() {
        return Err(Error::DimensionMismatch {
            context: format!(
                "frames are {}x{} and {}x{}",
                v.p(),
                v.k(),
                u_ref.p(),
                u_ref.k()
            ),
        });
    }
    let m = v.matrix().tr_mul(u_ref.matrix());
    let svd = m.svd(true, true);
    let rotation = svd.u.unwrap() * svd.v_t.unwrap();
    OrthoFrame::new(v.matrix() * rotation)
}

/// Versioned bundle of audit outputs ("audit/v1").
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AuditReport {
    pub schema: String,
    pub seed: u64,
    pub utility: Vec<UtilityEstimate>,
    pub tradeoff: Vec<TradeoffEstimate>,
    /// `max_alpha |beta_hat - overlay|` across all trade-off estimates.
    pub max_tradeoff_deviation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runtimes_ms: Option<Vec<u64>>,
}

/// Bundles estimates and overlays into one report document.
pub fn compare_report(
    utility: Vec<UtilityEstimate>,
    tradeoff: Vec<TradeoffEstimate>,
    seed: u64,
    runtimes_ms: Option<Vec<u64>>,
) -> AuditReport {
    let max_tradeoff_deviation = tradeoff
        .iter()
        .flat_map(|t| {
            t.beta_hat
                .iter()
                .zip(&t.theoretical_overlay)
                .map(|(b, o)| (b - o).abs())
        })
        .fold(None, |acc: Option<f64>, d| {
            Some(acc.map_or(d, |m| m.max(d)))
        });
    AuditReport {
        schema: "audit/v1".to_string(),
        seed,
        utility,
        tradeoff,
        max_tradeoff_deviation,
        runtimes_ms,
    }
}

/// Two-sample Kolmogorov-Smirnov distance (sup difference of empirical CDFs).
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut xa = a.to_vec();
    let mut xb = b.to_vec();
    xa.sort_by(|x, y| x.partial_cmp(y).unwrap());
    xb.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (na, nb) = (xa.len() as f64, xb.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut sup = 0.0f64;
    while i < xa.len() && j < xb.len() {
        if xa[i] < xb[j] {
            i += 1;
        } else if xb[j] < xa[i] {
            j += 1;
        } else {
            // tie: consume the shared value from both samples
            let v = xa[i];
            while i < xa.len() && xa[i] == v {
                i += 1;
            }
            while j < xb.len() && xb[j] == v {
                j += 1;
            }
        }
        sup = sup.max((i as f64 / na - j as f64 / nb).abs());
    }
    sup
}
