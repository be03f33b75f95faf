//! Data-adaptive noise calibration with an end-to-end privacy budget.
//!
//! The calibration quantities `theta^2 Delta`, `H`, and `sigma_min^2` are
//! estimated by `D`, `H`, `S^2`, privatized with Gaussian noise whose
//! variances match their sensitivities, clipped at zero, and combined into a
//! private feasibility test `T` and a private plug-in estimator `B` for
//! `beta(w^2)`. The adaptive mechanism runs the test, returns the all-zeros
//! sentinel when the target is unachievable, and otherwise runs the
//! exponential mechanism with `beta = B`; the composed guarantee is
//! `sqrt(rho^2 + w^2)`-AGDP.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mechanism::{
    sample_approx, sample_exact_mh, GibbsTarget, OrthoFrame, SamplerConfig, SamplerMode,
};
use crate::rng::{stream_rng, AUX_STREAM_BASE};
use crate::spectral::{covariance, eig_sym, hilbert, hilbert_deriv, hilbert_second, Dataset,
    SpectralSummary};

/// Streams (relative to the config seed) used by the adaptive pipeline.
const STREAM_NOISE_D: u64 = AUX_STREAM_BASE;
const STREAM_NOISE_H: u64 = AUX_STREAM_BASE + 1;
const STREAM_NOISE_S: u64 = AUX_STREAM_BASE + 2;
const STREAM_DRAW: u64 = AUX_STREAM_BASE + 3;

/// Empirical (non-private) calibration statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawStats {
    /// `D = n^2 (lambda_k - lambda_{k+1}) / p^3`, estimates `theta^2 Delta`.
    pub d: f64,
    /// `H = H_Sigma(lambda_k)`.
    pub h: f64,
    /// `S^2 = -(p^3 / (2 n^2)) H'_Sigma(lambda_k)`, estimates `sigma_min^2`.
    pub s2: f64,
}

/// Computes the empirical estimators. Requires a non-degenerate gap and a
/// recorded sample count.
pub fn raw_stats(summary: &SpectralSummary) -> Result<RawStats> {
    summary.require_gap()?;
    let n = summary.require_n()? as f64;
    let p = summary.p() as f64;
    let lambda_k = summary.eigenvalue(summary.k() - 1);
    let d = n * n * summary.gap() / (p * p * p);
    let h = hilbert(summary, lambda_k)?;
    let s2 = -(p * p * p) / (2.0 * n * n) * hilbert_deriv(summary, lambda_k)?;
    Ok(RawStats { d, h, s2 })
}

/// Gaussian noise variances for privatizing `(D, H, S^2)` at budget `rho`
/// (before the `1/p` scaling applied at draw time):
/// `v_D = (sqrt(6) n / (rho p^{3/2}))^2`,
/// `v_H = (sqrt(3) p^{3/2} H' / (rho n))^2`,
/// `v_S = (sqrt(3) p^{9/2} H'' / (rho n^3))^2`.
pub fn noise_variances(summary: &SpectralSummary, rho: f64) -> Result<(f64, f64, f64)> {
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::NonpositiveBudget { value: rho });
    }
    summary.require_gap()?;
    let n = summary.require_n()? as f64;
    let p = summary.p() as f64;
    let lambda_k = summary.eigenvalue(summary.k() - 1);
    let hprime = hilbert_deriv(summary, lambda_k)?;
    let hsecond = hilbert_second(summary, lambda_k)?;
    let v_d = (6.0f64.sqrt() * n / (rho * p.powf(1.5))).powi(2);
    let v_h = (3.0f64.sqrt() * p.powf(1.5) / (rho * n) * hprime).powi(2);
    let v_s = (3.0f64.sqrt() * p.powf(4.5) / (rho * n.powi(3)) * hsecond).powi(2);
    Ok((v_d, v_h, v_s))
}

/// Privatized, clipped calibration statistics together with the noise
/// variances and seed that produced them.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PrivateSpectralStats {
    pub d_plus: f64,
    pub h_plus: f64,
    pub s2_plus: f64,
    pub rho: f64,
    pub v_d: f64,
    pub v_h: f64,
    pub v_s: f64,
    pub seed: u64,
}

/// Core of [`privatize_stats`] with the three standard-normal draws injected,
/// which keeps the zero-noise path testable.
fn privatize_stats_with_noise(
    summary: &SpectralSummary,
    rho: f64,
    noise: [f64; 3],
    seed: u64,
) -> Result<PrivateSpectralStats> {
    let stats = raw_stats(summary)?;
    let (v_d, v_h, v_s) = noise_variances(summary, rho)?;
    let p = summary.p() as f64;
    // the conservative overestimator substitutes S^2 + 3 sqrt(v_S / p)
    let s2_over = stats.s2 + 3.0 * (v_s / p).sqrt();
    let d_plus = (stats.d + (v_d / p).sqrt() * noise[0]).max(0.0);
    let h_plus = (stats.h + (v_h / p).sqrt() * noise[1]).max(0.0);
    let s2_plus = (s2_over + (v_s / p).sqrt() * noise[2]).max(0.0);
    Ok(PrivateSpectralStats {
        d_plus,
        h_plus,
        s2_plus,
        rho,
        v_d,
        v_h,
        v_s,
        seed,
    })
}

/// Adds independent `N(0, v/p)` noise to `(D, H, S^2 + 3 sqrt(v_S/p))` and
/// clips each at zero. The three noises use independent streams of `seed`.
pub fn privatize_stats(summary: &SpectralSummary, rho: f64, seed: u64) -> Result<PrivateSpectralStats> {
    let draw = |stream: u64| -> f64 {
        stream_rng(seed, stream).sample::<f64, _>(StandardNormal)
    };
    privatize_stats_with_noise(
        summary,
        rho,
        [draw(STREAM_NOISE_D), draw(STREAM_NOISE_H), draw(STREAM_NOISE_S)],
        seed,
    )
}

/// Private feasibility test: 1 iff `w^2 >= s2_plus`.
pub fn feasibility_test(stats: &PrivateSpectralStats, w_sq: f64) -> bool {
    w_sq >= stats.s2_plus
}

/// Private plug-in estimator for `beta(w^2)`:
/// `B = 2 d_plus (w^2 + sqrt(max(w^4 - s2_plus w^2, 0))) + h_plus`.
pub fn private_beta(stats: &PrivateSpectralStats, w_sq: f64) -> f64 {
    let root = (w_sq * w_sq - stats.s2_plus * w_sq).max(0.0).sqrt();
    2.0 * stats.d_plus * (w_sq + root) + stats.h_plus
}

/// Output of the adaptive mechanism: a frame, or the all-zeros sentinel when
/// the feasibility test fails. The sentinel is the only non-orthonormal
/// output the crate can produce and is always carried as its own variant.
#[derive(Debug, Clone)]
pub enum MechanismOutput {
    Frame(OrthoFrame),
    Zero { p: usize, k: usize },
}

impl MechanismOutput {
    pub fn is_zero(&self) -> bool {
        matches!(self, MechanismOutput::Zero { .. })
    }

    pub fn frame(&self) -> Option<&OrthoFrame> {
        match self {
            MechanismOutput::Frame(f) => Some(f),
            MechanismOutput::Zero { .. } => None,
        }
    }

    /// The output as a dense matrix (zeros for the sentinel).
    pub fn to_matrix(&self) -> DMatrix<f64> {
        match self {
            MechanismOutput::Frame(f) => f.matrix().clone(),
            MechanismOutput::Zero { p, k } => DMatrix::zeros(*p, *k),
        }
    }
}

/// JSON report of an adaptive run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdaptiveReport {
    pub rho: f64,
    pub w_sq: f64,
    /// Feasibility test outcome, 1 = passed.
    pub test: u8,
    /// The private beta the mechanism ran with; absent when the test failed.
    pub beta_used: Option<f64>,
    pub guarantee_label: String,
    /// Numeric value of the composed guarantee `sqrt(rho^2 + w^2)`.
    pub guarantee_sigma: f64,
    pub seed: u64,
    pub stats: StatsEcho,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StatsEcho {
    pub d_plus: f64,
    pub h_plus: f64,
    pub s2_plus: f64,
}

/// Result of [`adaptive_mechanism`].
#[derive(Debug, Clone)]
pub struct AdaptiveOutcome {
    pub output: MechanismOutput,
    pub report: AdaptiveReport,
}

fn composed_label(rho: f64, w_sq: f64) -> (String, f64) {
    let sigma = (rho * rho + w_sq).sqrt();
    ("sqrt(rho^2 + w^2)-AGDP".to_string(), sigma)
}

/// Adaptive exponential mechanism on a precomputed spectral summary.
///
/// All randomness derives from `config.seed`: three noise streams for the
/// private statistics and one stream for the frame draw.
pub fn adaptive_mechanism_from_summary(
    summary: &SpectralSummary,
    rho: f64,
    w_sq: f64,
    config: &SamplerConfig,
) -> Result<AdaptiveOutcome> {
    if !(w_sq > 0.0) || !w_sq.is_finite() {
        return Err(Error::DomainError {
            context: format!("target w^2 must be positive, got {w_sq}"),
        });
    }
    let stats = privatize_stats(summary, rho, config.seed)?;
    let (guarantee_label, guarantee_sigma) = composed_label(rho, w_sq);
    let echo = StatsEcho {
        d_plus: stats.d_plus,
        h_plus: stats.h_plus,
        s2_plus: stats.s2_plus,
    };
    if !feasibility_test(&stats, w_sq) {
        return Ok(AdaptiveOutcome {
            output: MechanismOutput::Zero {
                p: summary.p(),
                k: summary.k(),
            },
            report: AdaptiveReport {
                rho,
                w_sq,
                test: 0,
                beta_used: None,
                guarantee_label,
                guarantee_sigma,
                seed: config.seed,
                stats: echo,
            },
        });
    }
    let beta = private_beta(&stats, w_sq);
    let target = GibbsTarget::new(summary.clone(), beta)?;
    let mut rng = stream_rng(config.seed, STREAM_DRAW);
    let frame = match config.mode {
        SamplerMode::Approximate => sample_approx(&target, &mut rng)?,
        SamplerMode::ExactMh => sample_exact_mh(&target, config, &mut rng)?.0,
    };
    Ok(AdaptiveOutcome {
        output: MechanismOutput::Frame(frame),
        report: AdaptiveReport {
            rho,
            w_sq,
            test: 1,
            beta_used: Some(beta),
            guarantee_label,
            guarantee_sigma,
            seed: config.seed,
            stats: echo,
        },
    })
}

/// Adaptive exponential mechanism end to end: covariance and
/// eigendecomposition of the dataset, private calibration, feasibility test,
/// then either the zero sentinel or a Gibbs draw with the private beta.
pub fn adaptive_mechanism(
    dataset: &Dataset,
    rho: f64,
    w_sq: f64,
    k: usize,
    config: &SamplerConfig,
) -> Result<AdaptiveOutcome> {
    if !dataset.norm_certified() {
        log::warn!(
            "dataset rows are not certified to satisfy |x| <= sqrt(p); \
             the adaptive privacy guarantee does not apply"
        );
    }
    let cov = covariance(dataset);
    let summary = eig_sym(&cov, k)?.with_sample_count(dataset.n());
    adaptive_mechanism_from_summary(&summary, rho, w_sq, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    /// Equal-bulk p=5, spike 2, n = p^{3/2} rounded so theta is not exactly 1;
    /// the hand-value tests construct theta = 1 via an exact n.
    fn summary_theta(p: usize, spike: f64, n: usize) -> SpectralSummary {
        let mut ev = DVector::from_element(p, 1.0);
        ev[0] = spike;
        SpectralSummary::from_spectrum(ev, 1, Some(n)).unwrap()
    }

    /// p = 4 has p^{3/2} = 8 exactly, so theta = 1 with n = 8.
    fn theta_one_summary() -> SpectralSummary {
        summary_theta(4, 2.0, 8)
    }

    #[test]
    fn raw_stats_hand_values() {
        // p = 4, spike 2, bulk 1, theta = 1: H = 3/4, H' = -3/4
        let s = theta_one_summary();
        let st = raw_stats(&s).unwrap();
        assert!((st.d - 1.0).abs() < 1e-15);
        assert!((st.h - 0.75).abs() < 1e-15);
        assert!((st.s2 - 0.375).abs() < 1e-15);
    }

    #[test]
    fn raw_stats_homogeneity_in_gap() {
        // doubling all eigenvalue gaps doubles D and halves H
        let s1 = summary_theta(6, 2.0, 100);
        let mut ev = DVector::from_element(6, 1.0);
        ev[0] = 3.0; // gap 2 with the same bulk
        let s2 = SpectralSummary::from_spectrum(ev, 1, Some(100)).unwrap();
        let a = raw_stats(&s1).unwrap();
        let b = raw_stats(&s2).unwrap();
        assert!((b.d - 2.0 * a.d).abs() < 1e-12);
        assert!((b.h - 0.5 * a.h).abs() < 1e-12);
    }

    #[test]
    fn raw_stats_match_theory_identities() {
        // D = theta^2 Delta and S^2 = sigma_min^2, exactly
        let s = summary_theta(7, 2.5, 31);
        let st = raw_stats(&s).unwrap();
        let prof = crate::theory::privacy_profile(&s).unwrap();
        assert!((st.d - prof.theta * prof.theta * prof.delta).abs() < 1e-12);
        assert!((st.s2 - prof.sigma_min_sq).abs() < 1e-12);
        assert!((st.h - prof.h).abs() < 1e-15);
    }

    #[test]
    fn noise_variance_hand_values_and_scaling() {
        let s = theta_one_summary();
        let (v_d, v_h, v_s) = noise_variances(&s, 1.0).unwrap();
        // theta = 1: v_D = 6, v_H = 3 H'^2, v_S = 3 H''^2
        assert!((v_d - 6.0).abs() < 1e-12);
        assert!((v_h - 3.0 * 0.75f64.powi(2)).abs() < 1e-12);
        let hsec = 2.0 * 3.0 / 4.0; // (2/p) * 3 bulk terms at gap 1
        assert!((v_s - 3.0 * hsec * hsec).abs() < 1e-12);
        // rho -> 2 rho quarters every variance, exactly
        let (v_d2, v_h2, v_s2) = noise_variances(&s, 2.0).unwrap();
        assert_eq!(v_d2 * 4.0, v_d);
        assert_eq!(v_h2 * 4.0, v_h);
        assert_eq!(v_s2 * 4.0, v_s);
        assert!(v_d > 0.0 && v_h > 0.0 && v_s > 0.0);
        assert!(matches!(
            noise_variances(&s, 0.0),
            Err(Error::NonpositiveBudget { .. })
        ));
    }

    #[test]
    fn equal_bulk_p5_noise_variances() {
        // the spec's p = 5 worked example with theta = 1 (n = 5^{3/2} is not
        // an integer; inject it via an exact-match n and verify against
        // continuous formulas instead)
        let n = 5f64.powf(1.5);
        let p = 5.0f64;
        let rho = 1.0;
        let hprime: f64 = -0.8;
        let hsecond: f64 = 1.6;
        let v_d = (6.0f64.sqrt() * n / (rho * p.powf(1.5))).powi(2);
        let v_h = (3.0f64.sqrt() * p.powf(1.5) / (rho * n) * hprime).powi(2);
        let v_s = (3.0f64.sqrt() * p.powf(4.5) / (rho * n.powi(3)) * hsecond).powi(2);
        assert!((v_d - 6.0).abs() < 1e-12);
        assert!((v_h - 1.92).abs() < 1e-12);
        assert!((v_s - 7.68).abs() < 1e-12);
    }

    #[test]
    fn zero_noise_path() {
        let s = theta_one_summary();
        let st = privatize_stats_with_noise(&s, 1.0, [0.0, 0.0, 0.0], 0).unwrap();
        let raw = raw_stats(&s).unwrap();
        let (_, _, v_s) = noise_variances(&s, 1.0).unwrap();
        assert_eq!(st.d_plus, raw.d);
        assert_eq!(st.h_plus, raw.h);
        assert_eq!(st.s2_plus, raw.s2 + 3.0 * (v_s / 4.0).sqrt());
    }

    #[test]
    fn negative_stats_clip_to_zero() {
        let s = theta_one_summary();
        let st = privatize_stats_with_noise(&s, 1.0, [-100.0, -100.0, -100.0], 0).unwrap();
        assert_eq!(st.d_plus, 0.0);
        assert_eq!(st.h_plus, 0.0);
        assert_eq!(st.s2_plus, 0.0);
    }

    #[test]
    fn privatized_draws_are_seeded() {
        let s = theta_one_summary();
        let a = privatize_stats(&s, 1.0, 42).unwrap();
        let b = privatize_stats(&s, 1.0, 42).unwrap();
        let c = privatize_stats(&s, 1.0, 43).unwrap();
        assert_eq!(a.d_plus, b.d_plus);
        assert_eq!(a.h_plus, b.h_plus);
        assert_eq!(a.s2_plus, b.s2_plus);
        assert_ne!(a.d_plus, c.d_plus);
    }

    #[test]
    fn censored_mean_matches_quadrature_oracle() {
        // mean of d_plus over many draws vs E[max(D + N(0, v/p), 0)] by
        // 1-D Gauss quadrature on a fine grid
        let s = theta_one_summary();
        let raw = raw_stats(&s).unwrap();
        let (v_d, _, _) = noise_variances(&s, 1.0).unwrap();
        let sd = (v_d / 4.0).sqrt();

        let draws = 50_000u64;
        let mean: f64 = (0..draws)
            .map(|i| privatize_stats(&s, 1.0, i).unwrap().d_plus)
            .sum::<f64>()
            / draws as f64;

        // E[max(mu + sd Z, 0)] by trapezoid over z in [-10, 10]
        let grid = 400_001;
        let h = 20.0 / (grid - 1) as f64;
        let mut expect = 0.0;
        for i in 0..grid {
            let z = -10.0 + i as f64 * h;
            let w = if i == 0 || i == grid - 1 { 0.5 } else { 1.0 };
            expect += w * (raw.d + sd * z).max(0.0) * crate::normal::phi_pdf(z);
        }
        expect *= h;

        let tol = 3.0 * sd / (draws as f64).sqrt() + 1e-4;
        assert!(
            (mean - expect).abs() < tol,
            "mean {mean} vs quadrature {expect} (tol {tol})"
        );
    }

    #[test]
    fn test_and_estimator_examples() {
        let stats = PrivateSpectralStats {
            d_plus: 0.5,
            h_plus: 0.8,
            s2_plus: 0.4,
            rho: 1.0,
            v_d: 1.0,
            v_h: 1.0,
            v_s: 1.0,
            seed: 0,
        };
        assert!(feasibility_test(&stats, 1.0));
        assert!(!feasibility_test(&stats, 0.3));
        let b = private_beta(&stats, 1.0);
        assert!((b - (1.0 + 0.6f64.sqrt() + 0.8)).abs() < 1e-15);
        assert!((b - 2.574596669241483).abs() < 1e-12);
        // root clamps when s2_plus >= w^2
        let b2 = private_beta(&stats, 0.3);
        assert_eq!(b2, 2.0 * 0.5 * 0.3 + 0.8);
    }

    #[test]
    fn adaptive_deterministic_and_budget_label() {
        let s = summary_theta(24, 3.0, 120);
        let config = SamplerConfig::default().with_seed(77);
        let a = adaptive_mechanism_from_summary(&s, 1.0, 2.0, &config).unwrap();
        let b = adaptive_mechanism_from_summary(&s, 1.0, 2.0, &config).unwrap();
        assert_eq!(a.output.to_matrix(), b.output.to_matrix());
        assert_eq!(a.report.guarantee_label, "sqrt(rho^2 + w^2)-AGDP");
        let sigma = a.report.guarantee_sigma;
        assert!((sigma - 3.0f64.sqrt()).abs() < 1e-15);
        // never reported smaller than either component
        assert!(sigma >= 1.0 && sigma >= 2.0f64.sqrt());
    }

    #[test]
    fn infeasible_target_returns_zero_sentinel() {
        // huge s2_plus via a tiny gap-to-target ratio: w^2 far below sigma_min^2
        let s = summary_theta(24, 3.0, 120);
        let config = SamplerConfig::default().with_seed(5);
        let out = adaptive_mechanism_from_summary(&s, 1.0, 1e-6, &config).unwrap();
        assert!(out.output.is_zero());
        assert_eq!(out.report.test, 0);
        assert_eq!(out.report.beta_used, None);
        let m = out.output.to_matrix();
        assert_eq!(m, DMatrix::zeros(24, 1));
    }

    #[test]
    fn noise_variance_rho_scaling_identity() {
        // v(rho) * rho^2 is independent of rho (exact algebraic identity)
        let s = summary_theta(9, 2.0, 27);
        let (d1, h1, s1) = noise_variances(&s, 0.7).unwrap();
        let (d2, h2, s2) = noise_variances(&s, 1.9).unwrap();
        assert!((d1 * 0.49 - d2 * 3.61).abs() < 1e-12 * d1.abs());
        assert!((h1 * 0.49 - h2 * 3.61).abs() < 1e-12 * h1.abs());
        assert!((s1 * 0.49 - s2 * 3.61).abs() < 1e-12 * s1.abs());
    }
}
