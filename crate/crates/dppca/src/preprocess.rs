//! Rank-transform normalization.
//!
//! Each feature column is replaced by its centered, scaled average ranks:
//! `r_ij = (2/(n-1)) (rank(x_ij) - (n+1)/2)` with ties averaged. The output
//! lies in `[-1, 1]` entrywise, every column sums to zero, and every row
//! satisfies `|r| <= sqrt(p)` by construction, which certifies the norm
//! bound the exponential mechanism's privacy analysis requires.

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::mechanism::{
    sample_approx, sample_exact_mh, GibbsTarget, OrthoFrame, SamplerConfig, SamplerMode,
};
use crate::spectral::{covariance, eig_sym, Dataset};

/// A rank-transformed dataset. Rows keep their original order.
#[derive(Debug, Clone)]
pub struct RankDataset {
    data: Dataset,
    tie_counts: Vec<usize>,
    source_n: usize,
    source_p: usize,
}

impl RankDataset {
    /// The transformed data; `norm_certified` is always true here.
    pub fn dataset(&self) -> &Dataset {
        &self.data
    }

    pub fn into_dataset(self) -> Dataset {
        self.data
    }

    /// Per-feature count of duplicate values beyond the first occurrence.
    pub fn tie_counts(&self) -> &[usize] {
        &self.tie_counts
    }

    pub fn source_shape(&self) -> (usize, usize) {
        (self.source_n, self.source_p)
    }
}

/// Average ranks (1-based, half-integers on ties) of a column.
fn average_ranks(column: &[f64]) -> (Vec<f64>, usize) {
    let n = column.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| column[a].partial_cmp(&column[b]).unwrap());
    let mut ranks = vec![0.0; n];
    let mut ties = 0;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && column[order[end]] == column[order[start]] {
            end += 1;
        }
        // ranks start+1 ..= end share the average
        let avg = (start + 1 + end) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = avg;
        }
        ties += end - start - 1;
        start = end;
    }
    (ranks, ties)
}

/// Rank-transforms every feature column. Requires `n >= 2`.
pub fn rank_transform(dataset: &Dataset) -> Result<RankDataset> {
    let (n, p) = (dataset.n(), dataset.p());
    if n < 2 {
        return Err(Error::TooFewSamples { n, required: 2 });
    }
    let x = dataset.values();
    let scale = 2.0 / (n as f64 - 1.0);
    let center = (n as f64 + 1.0) / 2.0;
    let mut out = DMatrix::zeros(n, p);
    let mut tie_counts = Vec::with_capacity(p);
    let mut col = vec![0.0; n];
    for j in 0..p {
        for i in 0..n {
            col[i] = x[(i, j)];
        }
        let (ranks, ties) = average_ranks(&col);
        tie_counts.push(ties);
        for i in 0..n {
            out[(i, j)] = scale * (ranks[i] - center);
        }
    }
    let data = Dataset::new(out)?;
    debug_assert!(data.norm_certified());
    Ok(RankDataset {
        data,
        tie_counts,
        source_n: n,
        source_p: p,
    })
}

/// Covariance of the rank-transformed dataset, `Sigma_rk(X) = Sigma(R(X))`.
pub fn rank_covariance(dataset: &Dataset) -> Result<DMatrix<f64>> {
    Ok(covariance(rank_transform(dataset)?.dataset()))
}

/// The rank-transformed exponential mechanism: a draw from
/// `nu(. | Sigma_rk(X), beta, k)`.
pub fn rank_mechanism<R: Rng + ?Sized>(
    dataset: &Dataset,
    beta: f64,
    k: usize,
    config: &SamplerConfig,
    rng: &mut R,
) -> Result<OrthoFrame> {
    let cov = rank_covariance(dataset)?;
    let summary = eig_sym(&cov, k)?.with_sample_count(dataset.n());
    let target = GibbsTarget::new(summary, beta)?;
    match config.mode {
        SamplerMode::Approximate => sample_approx(&target, rng),
        SamplerMode::ExactMh => Ok(sample_exact_mh(&target, config, rng)?.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use proptest::prelude::*;

    fn dataset_from_columns(cols: &[&[f64]]) -> Dataset {
        let n = cols[0].len();
        let p = cols.len();
        Dataset::new(DMatrix::from_fn(n, p, |i, j| cols[j][i])).unwrap()
    }

    #[test]
    fn hand_ranking() {
        let d = dataset_from_columns(&[&[5.0, 2.0, 9.0]]);
        let r = rank_transform(&d).unwrap();
        let v = r.dataset().values();
        assert_eq!(v.as_slice(), &[0.0, -1.0, 1.0]);
        assert_eq!(r.tie_counts(), &[0]);
    }

    #[test]
    fn tie_averaging() {
        let d = dataset_from_columns(&[&[5.0, 5.0, 9.0]]);
        let r = rank_transform(&d).unwrap();
        let v = r.dataset().values();
        assert_eq!(v.as_slice(), &[-0.5, -0.5, 1.0]);
        assert_eq!(r.tie_counts(), &[1]);
    }

    #[test]
    fn constant_column_maps_to_zero() {
        let d = dataset_from_columns(&[&[3.0, 3.0, 3.0, 3.0], &[1.0, 2.0, 3.0, 4.0]]);
        let r = rank_transform(&d).unwrap();
        let v = r.dataset().values();
        for i in 0..4 {
            assert_eq!(v[(i, 0)], 0.0);
        }
        assert_eq!(r.tie_counts()[0], 3);
        let cov = rank_covariance(&d).unwrap();
        for i in 0..2 {
            assert_eq!(cov[(0, i)], 0.0);
            assert_eq!(cov[(i, 0)], 0.0);
        }
    }

    #[test]
    fn too_few_samples() {
        let d = dataset_from_columns(&[&[1.0]]);
        assert!(matches!(
            rank_transform(&d),
            Err(Error::TooFewSamples { .. })
        ));
    }

    #[test]
    fn rank_covariance_hand_example() {
        // columns (5,2,9) -> (0,-1,1) and (1,2,3) -> (-1,0,1)
        let d = dataset_from_columns(&[&[5.0, 2.0, 9.0], &[1.0, 2.0, 3.0]]);
        let cov = rank_covariance(&d).unwrap();
        // (1/3) sum r r': entries by hand
        let want = [
            [2.0 / 3.0, 1.0 / 3.0],
            [1.0 / 3.0, 2.0 / 3.0],
        ];
        for i in 0..2 {
            for j in 0..2 {
                assert!((cov[(i, j)] - want[i][j]).abs() < 1e-14);
            }
        }
        // matches the definitional composition
        let composed = covariance(rank_transform(&d).unwrap().dataset());
        assert!((cov - composed).abs().max() < 1e-14);
    }

    #[test]
    fn rank_mechanism_beta_zero_and_pipeline_equality() {
        let mut rng = stream_rng(31, 0);
        let x = DMatrix::from_fn(30, 5, |_, _| rng.random::<f64>());
        let d = Dataset::new(x).unwrap();
        let config = SamplerConfig::default();

        // beta = 0 -> Haar frame regardless of data
        let f0 = rank_mechanism(&d, 0.0, 2, &config, &mut stream_rng(32, 0)).unwrap();
        let href = crate::mechanism::sample_haar_frame(5, 2, &mut stream_rng(32, 0)).unwrap();
        assert_eq!(f0.matrix(), href.matrix());

        // identical whether the caller pre-rank-transforms or uses this op
        let f1 = rank_mechanism(&d, 2.0, 2, &config, &mut stream_rng(33, 0)).unwrap();
        let pre = rank_transform(&d).unwrap().into_dataset();
        let f2 =
            crate::mechanism::exp_mechanism(&pre, 2.0, 2, &config, &mut stream_rng(33, 0))
                .unwrap();
        assert_eq!(f1.matrix(), f2.matrix());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        /// Row norms certified, column sums zero, monotone-map invariance,
        /// and permutation equivariance on random datasets with ties.
        #[test]
        fn rank_invariants(
            n in 2usize..40,
            p in 1usize..8,
            seed in 0u64..10_000,
        ) {
            let mut rng = stream_rng(seed, 100);
            // quantized entries so ties actually occur
            let x = DMatrix::from_fn(n, p, |_, _| {
                (rng.random::<f64>() * 6.0).floor()
            });
            let d = Dataset::new(x.clone()).unwrap();
            let r = rank_transform(&d).unwrap();
            let v = r.dataset().values();

            prop_assert!(r.dataset().norm_certified());
            for i in 0..n {
                prop_assert!(v.row(i).norm_squared() <= p as f64 * (1.0 + 1e-9));
            }
            for j in 0..p {
                let s: f64 = (0..n).map(|i| v[(i, j)]).sum();
                prop_assert!(s.abs() <= 1e-10, "column {j} sums to {s}");
                for i in 0..n {
                    prop_assert!((-1.0..=1.0).contains(&v[(i, j)]));
                }
            }

            // strictly increasing map on a column leaves its ranks unchanged
            let mut warped = x.clone();
            for i in 0..n {
                let t = warped[(i, 0)];
                warped[(i, 0)] = t.exp() + 3.0 * t;
            }
            let rw = rank_transform(&Dataset::new(warped).unwrap()).unwrap();
            for i in 0..n {
                prop_assert_eq!(rw.dataset().values()[(i, 0)], v[(i, 0)]);
            }

            // permuting rows permutes the output identically
            let perm: Vec<usize> = {
                let mut idx: Vec<usize> = (0..n).collect();
                for i in (1..n).rev() {
                    let j = (rng.random::<f64>() * (i + 1) as f64) as usize;
                    idx.swap(i, j.min(i));
                }
                idx
            };
            let xp = DMatrix::from_fn(n, p, |i, j| x[(perm[i], j)]);
            let rp = rank_transform(&Dataset::new(xp).unwrap()).unwrap();
            for i in 0..n {
                for j in 0..p {
                    prop_assert_eq!(rp.dataset().values()[(i, j)], v[(perm[i], j)]);
                }
            }
        }
    }
}
