//! Seeded synthetic spiked-covariance data, so every pipeline is
//! reproducible without external datasets.
//!
//! A spec `spiked:p,k,s_1,...,s_k,bulk,theta` describes a `p`-dimensional
//! covariance spectrum with `k` spikes above an equal bulk, observed through
//! `n = round(theta p^{3/2})` samples. [`SpikedSpec::dataset`] materializes a
//! dataset whose sample covariance has exactly that spectrum in a seeded
//! Haar-random eigenbasis.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::mechanism::sample_haar_frame;
use crate::rng::{stream_rng, AUX_STREAM_BASE};
use crate::spectral::{Dataset, SpectralSummary};

const STREAM_BASIS: u64 = AUX_STREAM_BASE + 16;
const STREAM_MIXER: u64 = AUX_STREAM_BASE + 17;

/// A spiked spectrum: `k` spikes, an equal bulk, and a sample-size ratio.
#[derive(Debug, Clone, PartialEq)]
pub struct SpikedSpec {
    pub p: usize,
    pub k: usize,
    /// Strictly descending spike eigenvalues, all above `bulk`.
    pub spikes: Vec<f64>,
    pub bulk: f64,
    /// Sample-size ratio `theta = n / p^{3/2}`.
    pub theta: f64,
}

impl SpikedSpec {
    pub fn new(p: usize, k: usize, spikes: Vec<f64>, bulk: f64, theta: f64) -> Result<Self> {
        if k == 0 || k >= p {
            return Err(Error::RankOutOfRange { k, p });
        }
        if spikes.len() != k {
            return Err(Error::Config(format!(
                "expected {k} spikes, got {}",
                spikes.len()
            )));
        }
        if !(bulk > 0.0) || !(theta > 0.0) {
            return Err(Error::Config(
                "bulk and theta must be positive".into(),
            ));
        }
        for w in spikes.windows(2) {
            if !(w[1] <= w[0]) {
                return Err(Error::Config("spikes must be non-increasing".into()));
            }
        }
        if !(spikes[k - 1] > bulk) {
            return Err(Error::Config(
                "the smallest spike must exceed the bulk level".into(),
            ));
        }
        Ok(Self {
            p,
            k,
            spikes,
            bulk,
            theta,
        })
    }

    /// `n = max(round(theta p^{3/2}), p)`; at least `p` samples so the
    /// spectrum is realizable by a dataset.
    pub fn n(&self) -> usize {
        let n = (self.theta * (self.p as f64).powf(1.5)).round() as usize;
        n.max(self.p)
    }

    /// The full descending spectrum: spikes then the equal bulk.
    pub fn spectrum(&self) -> DVector<f64> {
        DVector::from_fn(self.p, |i, _| {
            if i < self.k {
                self.spikes[i]
            } else {
                self.bulk
            }
        })
    }

    /// Spectral summary with the identity eigenbasis and `n` recorded.
    pub fn summary(&self) -> SpectralSummary {
        SpectralSummary::from_spectrum(self.spectrum(), self.k, Some(self.n()))
            .expect("validated spec always yields a valid summary")
    }

    /// A dataset whose sample covariance is exactly
    /// `U diag(spectrum) U'` for a seeded Haar-random `U`: rows are
    /// `G diag(sqrt(n lambda)) U'` with `G` an `n x p` matrix of orthonormal
    /// columns, so `(1/n) X'X` reproduces the spectrum to machine precision.
    pub fn dataset(&self, seed: u64) -> Result<Dataset> {
        let n = self.n();
        let p = self.p;
        let mut basis_rng = stream_rng(seed, STREAM_BASIS);
        let u = sample_haar_frame(p, p, &mut basis_rng)?.into_matrix();
        let mut mixer_rng = stream_rng(seed, STREAM_MIXER);
        let g = DMatrix::from_fn(n, p, |_, _| mixer_rng.sample::<f64, _>(StandardNormal));
        let g = g.qr().q();
        let spectrum = self.spectrum();
        let scaled = DMatrix::from_fn(n, p, |i, j| g[(i, j)] * (n as f64 * spectrum[j]).sqrt());
        Dataset::new(scaled * u.transpose())
    }
}

impl std::str::FromStr for SpikedSpec {
    type Err = Error;

    /// Parses `spiked:p,k,s_1,...,s_k,bulk,theta`.
    fn from_str(s: &str) -> Result<Self> {
        let body = s
            .strip_prefix("spiked:")
            .ok_or_else(|| Error::Config(format!("unknown synth spec `{s}` (want spiked:...)")))?;
        let fields: Vec<&str> = body.split(',').collect();
        if fields.len() < 4 {
            return Err(Error::Config(
                "synth spec needs at least p,k,spike,bulk,theta".into(),
            ));
        }
        let p: usize = fields[0]
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad p `{}`", fields[0])))?;
        let k: usize = fields[1]
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad k `{}`", fields[1])))?;
        if fields.len() != k + 4 {
            return Err(Error::Config(format!(
                "spiked spec with k = {k} needs {} fields (p,k,{k} spikes,bulk,theta), got {}",
                k + 4,
                fields.len()
            )));
        }
        let parse_f = |s: &str| -> Result<f64> {
            s.trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad number `{s}` in synth spec")))
        };
        let spikes = fields[2..2 + k]
            .iter()
            .map(|f| parse_f(f))
            .collect::<Result<Vec<f64>>>()?;
        let bulk = parse_f(fields[2 + k])?;
        let theta = parse_f(fields[3 + k])?;
        SpikedSpec::new(p, k, spikes, bulk, theta)
    }
}

impl std::fmt::Display for SpikedSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "spiked:{},{}", self.p, self.k)?;
        for s in &self.spikes {
            write!(f, ",{s}")?;
        }
        write!(f, ",{},{}", self.bulk, self.theta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{covariance, eig_sym};

    #[test]
    fn parse_round_trip() {
        let spec: SpikedSpec = "spiked:300,2,3,2.5,1,1".parse().unwrap();
        assert_eq!(spec.p, 300);
        assert_eq!(spec.k, 2);
        assert_eq!(spec.spikes, vec![3.0, 2.5]);
        assert_eq!(spec.bulk, 1.0);
        assert_eq!(spec.theta, 1.0);
        let display = spec.to_string();
        let re: SpikedSpec = display.parse().unwrap();
        assert_eq!(re, spec);
    }

    #[test]
    fn parse_rejects_malformed() {
        assert!("spiked:300,2,3,1,1".parse::<SpikedSpec>().is_err()); // missing a spike
        assert!("spiked:10,0,1,1".parse::<SpikedSpec>().is_err());
        assert!("spiked:10,1,0.5,1,1".parse::<SpikedSpec>().is_err()); // spike below bulk
        assert!("gauss:10".parse::<SpikedSpec>().is_err());
    }

    #[test]
    fn dataset_realizes_spectrum() {
        let spec: SpikedSpec = "spiked:24,2,3,2,1,1.5".parse().unwrap();
        let data = spec.dataset(9).unwrap();
        assert_eq!(data.n(), spec.n());
        let cov = covariance(&data);
        let s = eig_sym(&cov, 2).unwrap();
        let want = spec.spectrum();
        for i in 0..24 {
            assert!(
                (s.eigenvalue(i) - want[i]).abs() < 1e-9,
                "eigenvalue {i}: {} vs {}",
                s.eigenvalue(i),
                want[i]
            );
        }
    }

    #[test]
    fn dataset_is_seed_deterministic() {
        let spec: SpikedSpec = "spiked:12,1,2,1,1".parse().unwrap();
        let a = spec.dataset(3).unwrap();
        let b = spec.dataset(3).unwrap();
        let c = spec.dataset(4).unwrap();
        assert_eq!(a.values(), b.values());
        assert_ne!(a.values(), c.values());
    }

    #[test]
    fn summary_matches_dataset_route() {
        let spec: SpikedSpec = "spiked:16,1,2,1,1".parse().unwrap();
        let s = spec.summary();
        assert_eq!(s.n(), Some(spec.n()));
        assert_eq!(s.k(), 1);
        assert_eq!(s.eigenvalue(0), 2.0);
        assert_eq!(s.gap(), 1.0);
    }
}
