//! Closed-form plug-in curves: utility predictions, the privacy curve
//! `beta -> sigma_beta^2` with its plateau, the calibration inverse
//! `w^2 -> beta(w^2)`, the worst-case neighboring data point, the
//! log-likelihood variance functional, and Gaussian trade-off evaluation.
//!
//! Everything here evaluates asymptotic formulas on empirical plug-in
//! quantities; outputs are labelled as asymptotic plug-in estimates by the
//! CLI.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normal::{phi_cdf, phi_inv};
use crate::spectral::{
    hilbert, hilbert_deriv, hilbert_second, kkernel, SpectralSummary, NORM_SLACK,
};

/// Plug-in quantities driving all closed-form privacy curves.
///
/// - `theta = n / p^{3/2}`: sample-size scaling ratio
/// - `delta = lambda_k - lambda_{k+1}`: spectral gap
/// - `h`, `hprime`, `hsecond`: empirical Hilbert transform of the bulk at
///   `lambda_k` and its first two derivatives
/// - `sigma_min_sq = -hprime / (2 theta^2)`: the strongest achievable
///   privacy level
/// - `beta_crit = h - delta * hprime`: right edge of the privacy plateau
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PrivacyProfile {
    pub theta: f64,
    pub delta: f64,
    pub h: f64,
    pub hprime: f64,
    pub hsecond: f64,
    pub sigma_min_sq: f64,
    pub beta_crit: f64,
}

/// Computes the plug-in profile from a spectral summary. Requires a
/// non-degenerate gap and a recorded sample count.
pub fn privacy_profile(summary: &SpectralSummary) -> Result<PrivacyProfile> {
    summary.require_gap()?;
    let theta = summary.theta()?;
    let lambda_k = summary.eigenvalue(summary.k() - 1);
    let h = hilbert(summary, lambda_k)?;
    let hprime = hilbert_deriv(summary, lambda_k)?;
    let hsecond = hilbert_second(summary, lambda_k)?;
    let delta = summary.gap();
    Ok(PrivacyProfile {
        theta,
        delta,
        h,
        hprime,
        hsecond,
        sigma_min_sq: -hprime / (2.0 * theta * theta),
        beta_crit: h - delta * hprime,
    })
}

/// Asymptotic estimation-error predictions for a given `beta`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UtilityPrediction {
    /// Per-component overlaps `(1 - H(lambda_i)/beta)_+`, `i = 1..k`.
    pub overlap_diag: Vec<f64>,
    /// Squared operator-norm error `min(1, H(lambda_k)/beta)`.
    pub spec_err_sq: f64,
    /// Squared Frobenius error `2 sum_i min(1, H(lambda_i)/beta)`.
    pub fro_err_sq: f64,
}

/// Evaluates the utility predictions; `beta = 0` yields zero overlap and the
/// errors at their maxima.
pub fn utility_prediction(summary: &SpectralSummary, beta: f64) -> Result<UtilityPrediction> {
    if !beta.is_finite() || beta < 0.0 {
        return Err(Error::DomainError {
            context: format!("beta must be finite and >= 0, got {beta}"),
        });
    }
    let k = summary.k();
    if beta == 0.0 {
        return Ok(UtilityPrediction {
            overlap_diag: vec![0.0; k],
            spec_err_sq: 1.0,
            fro_err_sq: 2.0 * k as f64,
        });
    }
    let mut overlap = Vec::with_capacity(k);
    let mut fro = 0.0;
    let mut spec = 0.0;
    for i in 0..k {
        let h_i = hilbert(summary, summary.eigenvalue(i))?;
        let ratio = h_i / beta;
        overlap.push((1.0 - ratio).max(0.0));
        fro += 2.0 * ratio.min(1.0);
        if i == k - 1 {
            spec = ratio.min(1.0);
        }
    }
    Ok(UtilityPrediction {
        overlap_diag: overlap,
        spec_err_sq: spec,
        fro_err_sq: fro,
    })
}

/// The sharp privacy curve `sigma_beta^2`. Defined for `beta > h`; constant
/// at `sigma_min_sq` on the plateau `(h, beta_crit]` and strictly increasing
/// beyond.
pub fn sigma_beta(profile: &PrivacyProfile, beta: f64) -> Result<f64> {
    if !(beta > profile.h) {
        return Err(Error::OutOfRegime {
            beta,
            h: profile.h,
        });
    }
    if beta > profile.beta_crit {
        let excess = beta - profile.h;
        Ok(excess * excess
            / (2.0 * profile.delta * profile.theta * profile.theta)
            / (2.0 * excess + profile.delta * profile.hprime))
    } else {
        // privacy plateau (h, beta_crit]: bitwise-stable constant on the
        // whole branch; the upper branch agrees at beta_crit up to rounding
        Ok(profile.sigma_min_sq)
    }
}

/// Generalized inverse of `beta -> sigma_beta^2`:
/// `beta(w^2) = 2 theta^2 delta (w^2 + sqrt((w^4 - sigma_min^2 w^2)_+)) + h`.
///
/// Errors with `InfeasibleTarget` when `w^2 < sigma_min_sq`: no noise level
/// achieves a privacy guarantee stronger than `sigma_min`.
pub fn beta_for_target(profile: &PrivacyProfile, w_sq: f64) -> Result<f64> {
    if !w_sq.is_finite() || w_sq < profile.sigma_min_sq {
        return Err(Error::InfeasibleTarget {
            w_sq,
            sigma_min_sq: profile.sigma_min_sq,
        });
    }
    let root = (w_sq * (w_sq - profile.sigma_min_sq)).max(0.0).sqrt();
    Ok(2.0 * profile.theta * profile.theta * profile.delta * (w_sq + root) + profile.h)
}

/// The asymptotically worst-case neighboring data point
/// `x* = sqrt(p) (sqrt(t*) u_k + sqrt(1 - t*) u_{k+1})` with
/// `t* = min((beta - H) / (2(beta - H) + delta H'), 1)`.
///
/// `|x*| = sqrt(p)` exactly. On the plateau (`beta <= beta_crit`) the min
/// clamps at `t* = 1`.
pub fn worst_case_neighbor(
    summary: &SpectralSummary,
    beta: f64,
) -> Result<(DVector<f64>, f64)> {
    summary.require_gap()?;
    let k = summary.k();
    let lambda_k = summary.eigenvalue(k - 1);
    let h = hilbert(summary, lambda_k)?;
    if !(beta > h) {
        return Err(Error::OutOfRegime { beta, h });
    }
    let hprime = hilbert_deriv(summary, lambda_k)?;
    let excess = beta - h;
    let denom = 2.0 * excess + summary.gap() * hprime;
    // denom > excess iff beta > beta_crit; at or below beta_crit (the privacy
    // plateau) the min clamps at 1 and the worst case concentrates on u_k
    let t_star = if denom > excess { excess / denom } else { 1.0 };
    let sqrt_p = (summary.p() as f64).sqrt();
    let u = summary.eigenvectors();
    let wk = sqrt_p * t_star.sqrt();
    let wk1 = sqrt_p * (1.0 - t_star).sqrt();
    let x = DVector::from_fn(summary.p(), |i, _| {
        wk * u[(i, k - 1)] + wk1 * u[(i, k)]
    });
    Ok((x, t_star))
}

/// Variance functional of the log-likelihood ratio under a symmetric
/// covariance perturbation `E`:
///
/// `sigma^2(E, beta) = 1/2 sum_{j,l<=k} K(lambda_j, lambda_l) (u_j'E u_l)^2
///  + sum_{j<=k} sum_{i<=p-k} (beta - H(lambda_j))/(lambda_j - lambda_{k+i})
///    (u_{k+i}'E u_j)^2`.
pub fn variance_function(
    summary: &SpectralSummary,
    perturbation: &DMatrix<f64>,
    beta: f64,
) -> Result<f64> {
    let p = summary.p();
    if perturbation.nrows() != p || perturbation.ncols() != p {
        return Err(Error::DimensionMismatch {
            context: format!(
                "perturbation is {}x{}, expected {p}x{p}",
                perturbation.nrows(),
                perturbation.ncols()
            ),
        });
    }
    summary.require_gap()?;
    let k = summary.k();
    let u = summary.eigenvectors();
    // coords[:, j] = U' E u_j for the k leading eigenvectors
    let eu = perturbation * u.columns(0, k);
    let coords = u.tr_mul(&eu);

    let mut total = 0.0;
    for j in 0..k {
        let lambda_j = summary.eigenvalue(j);
        for l in 0..k {
            let kk = kkernel(summary, lambda_j, summary.eigenvalue(l))?;
            total += 0.5 * kk * coords[(l, j)] * coords[(l, j)];
        }
        let h_j = hilbert(summary, lambda_j)?;
        for i in k..p {
            let w = (beta - h_j) / (lambda_j - summary.eigenvalue(i));
            total += w * coords[(i, j)] * coords[(i, j)];
        }
    }
    Ok(total)
}

/// `sigma_X^2(x, beta)`: the variance functional at the rank-one perturbation
/// `E = sqrt(p) x x' / n`, evaluated in eigenbasis coordinates in `O(p k)`
/// without materializing `E`.
pub fn variance_function_datapoint(
    summary: &SpectralSummary,
    x: &DVector<f64>,
    n: usize,
    beta: f64,
) -> Result<f64> {
    let p = summary.p();
    if x.len() != p {
        return Err(Error::DimensionMismatch {
            context: format!("data point has length {}, expected {p}", x.len()),
        });
    }
    summary.require_gap()?;
    let bound = p as f64 * (1.0 + NORM_SLACK);
    if x.norm_squared() > bound {
        log::warn!(
            "data point norm^2 = {} exceeds p = {p}; variance value is outside \
             the neighboring-dataset model",
            x.norm_squared()
        );
    }
    let k = summary.k();
    let c = summary.eigenvectors().tr_mul(x);
    let scale = (p as f64).sqrt() / n as f64;

    let mut total = 0.0;
    for j in 0..k {
        let lambda_j = summary.eigenvalue(j);
        let cj = c[j];
        for l in 0..k {
            let kk = kkernel(summary, lambda_j, summary.eigenvalue(l))?;
            let e_lj = scale * c[l] * cj;
            total += 0.5 * kk * e_lj * e_lj;
        }
        let h_j = hilbert(summary, lambda_j)?;
        for i in k..p {
            let e_ij = scale * c[i] * cj;
            total += (beta - h_j) / (lambda_j - summary.eigenvalue(i)) * e_ij * e_ij;
        }
    }
    Ok(total)
}

/// Gaussian trade-off function `T(N(0,1), N(mu,1))(alpha) =
/// Phi(Phi^{-1}(1 - alpha) - mu)`: the Type II error of the optimal
/// level-`alpha` test.
pub fn gdp_tradeoff(mu: f64, alpha: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha) || !mu.is_finite() || mu < 0.0 {
        return Err(Error::DomainError {
            context: format!("gdp_tradeoff needs alpha in [0,1] and mu >= 0, got ({mu}, {alpha})"),
        });
    }
    if alpha == 0.0 {
        return Ok(1.0);
    }
    if alpha == 1.0 {
        return Ok(0.0);
    }
    Ok(phi_cdf(phi_inv(1.0 - alpha) - mu))
}

/// Rényi divergence of order `alpha` between `N(mu, 1)` and `N(0, 1)`:
/// `alpha mu^2 / 2`.
pub fn renyi_gauss(mu: f64, alpha_order: f64) -> Result<f64> {
    if !(alpha_order > 1.0) || !mu.is_finite() {
        return Err(Error::DomainError {
            context: format!("renyi_gauss needs order > 1, got {alpha_order}"),
        });
    }
    Ok(alpha_order * mu * mu / 2.0)
}
