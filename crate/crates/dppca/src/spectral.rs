//! Datasets, covariance, symmetric eigendecomposition, and the empirical
//! spectral statistics (Hilbert transform and its kernel) that every
//! downstream formula plugs into.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Max-entry tolerance for orthonormality checks (`U'U = I`).
pub const ORTHO_TOL: f64 = 1e-8;
/// Spectral gaps at or below this are treated as degenerate.
pub const GAP_TOL: f64 = 1e-12;
/// Minimum distance from the bulk edge for Hilbert-transform evaluation.
pub const POLE_MARGIN: f64 = 1e-12;
/// Row-norm certification slack: `|x|^2 <= p * (1 + NORM_SLACK)`.
pub const NORM_SLACK: f64 = 1e-9;

/// A dataset of `n` samples in `p` dimensions, one row per sample.
#[derive(Debug, Clone)]
pub struct Dataset {
    values: DMatrix<f64>,
    norm_certified: bool,
}

impl Dataset {
    /// Wraps a sample matrix. Certification of the `|x| <= sqrt(p)` norm bound
    /// is checked here once and carried as a flag.
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() == 0 {
            return Err(Error::EmptyDataset);
        }
        if values.ncols() == 0 {
            return Err(Error::DimensionMismatch {
                context: "dataset has zero columns".into(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "dataset entry".into(),
            });
        }
        let bound = values.ncols() as f64 * (1.0 + NORM_SLACK);
        let norm_certified = (0..values.nrows()).all(|i| values.row(i).norm_squared() <= bound);
        Ok(Self {
            values,
            norm_certified,
        })
    }

    /// As `new`, but additionally errors when any row violates the norm bound.
    pub fn new_certified(values: DMatrix<f64>) -> Result<Self> {
        let d = Self::new(values)?;
        if !d.norm_certified {
            let worst = (0..d.n())
                .map(|i| d.values.row(i).norm_squared())
                .fold(0.0, f64::max);
            return Err(Error::NormViolation {
                norm_sq: worst,
                bound: d.p() as f64,
            });
        }
        Ok(d)
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn p(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    /// True when every row satisfies `|x|^2 <= p (1 + 1e-9)`.
    pub fn norm_certified(&self) -> bool {
        self.norm_certified
    }
}

/// Uncentered sample covariance `(1/n) sum_x x x'`.
///
/// Centering is deliberately not performed here; it is the job of
/// preprocessing.
pub fn covariance(dataset: &Dataset) -> DMatrix<f64> {
    let x = dataset.values();
    let mut cov = x.tr_mul(x) / dataset.n() as f64;
    // gemm output is symmetric only up to rounding; make it exact
    let p = cov.nrows();
    for i in 0..p {
        for j in (i + 1)..p {
            let s = 0.5 * (cov[(i, j)] + cov[(j, i)]);
            cov[(i, j)] = s;
            cov[(j, i)] = s;
        }
    }
    cov
}

/// Full descending eigendecomposition of a covariance matrix together with
/// the target rank `k` and derived gap quantities.
#[derive(Debug, Clone)]
pub struct SpectralSummary {
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
    k: usize,
    n: Option<usize>,
}

impl SpectralSummary {
    /// Builds a summary from a precomputed decomposition. Validates
    /// orthonormality, ordering, and rank bounds.
    pub fn from_parts(
        eigenvalues: DVector<f64>,
        eigenvectors: DMatrix<f64>,
        k: usize,
        n: Option<usize>,
    ) -> Result<Self> {
        let p = eigenvalues.len();
        if eigenvectors.nrows() != p || eigenvectors.ncols() != p {
            return Err(Error::DimensionMismatch {
                context: format!(
                    "eigenvector matrix is {}x{}, expected {p}x{p}",
                    eigenvectors.nrows(),
                    eigenvectors.ncols()
                ),
            });
        }
        if k == 0 || k >= p {
            return Err(Error::RankOutOfRange { k, p });
        }
        for i in 1..p {
            if eigenvalues[i] > eigenvalues[i - 1] {
                return Err(Error::Parse("eigenvalues are not non-increasing".into()));
            }
        }
        let gram = eigenvectors.tr_mul(&eigenvectors);
        let dev = (0..p)
            .flat_map(|i| (0..p).map(move |j| (i, j)))
            .map(|(i, j)| (gram[(i, j)] - if i == j { 1.0 } else { 0.0 }).abs())
            .fold(0.0, f64::max);
        if dev > ORTHO_TOL {
            return Err(Error::NotSymmetric {
                deviation: dev,
                tolerance: ORTHO_TOL,
            });
        }
        Ok(Self {
            eigenvalues,
            eigenvectors,
            k,
            n,
        })
    }

    /// Summary with the identity eigenbasis; convenient for synthetic spectra.
    pub fn from_spectrum(eigenvalues: DVector<f64>, k: usize, n: Option<usize>) -> Result<Self> {
        let p = eigenvalues.len();
        Self::from_parts(eigenvalues, DMatrix::identity(p, p), k, n)
    }

    /// Records the sample count the covariance was computed from.
    pub fn with_sample_count(mut self, n: usize) -> Self {
        self.n = Some(n);
        self
    }

    pub fn p(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> Option<usize> {
        self.n
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn eigenvalue(&self, i: usize) -> f64 {
        self.eigenvalues[i]
    }

    /// Full `p x p` eigenvector matrix, column `i` paired with `lambda_i`.
    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    /// The first `k` eigenvectors (the true principal components).
    pub fn u_star(&self) -> DMatrix<f64> {
        self.eigenvectors.columns(0, self.k).into_owned()
    }

    /// Spectral gap `lambda_k - lambda_(k+1)`.
    pub fn gap(&self) -> f64 {
        self.eigenvalues[self.k - 1] - self.eigenvalues[self.k]
    }

    pub fn gap_degenerate(&self) -> bool {
        self.gap() <= GAP_TOL
    }

    /// Errors with `DegenerateGap` unless `lambda_k > lambda_(k+1)` holds with
    /// margin.
    pub fn require_gap(&self) -> Result<()> {
        if self.gap_degenerate() {
            return Err(Error::DegenerateGap { gap: self.gap() });
        }
        Ok(())
    }

    pub fn require_n(&self) -> Result<usize> {
        self.n.ok_or(Error::MissingSampleCount)
    }

    /// `n / p^{3/2}`, the sample-size scaling ratio.
    pub fn theta(&self) -> Result<f64> {
        let n = self.require_n()?;
        Ok(n as f64 / (self.p() as f64).powf(1.5))
    }

    /// `U diag(lambda) U'`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let scaled = DMatrix::from_fn(self.p(), self.p(), |i, j| {
            self.eigenvectors[(i, j)] * self.eigenvalues[j]
        });
        let ut = self.eigenvectors.transpose();
        scaled * ut
    }
}

/// Descending symmetric eigendecomposition with a deterministic sign
/// convention: in each eigenvector the entry of largest magnitude (lowest
/// index on ties) is made positive, so seeded runs are byte-reproducible.
pub fn eig_sym(matrix: &DMatrix<f64>, k: usize) -> Result<SpectralSummary> {
    let p = matrix.nrows();
    if matrix.ncols() != p {
        return Err(Error::DimensionMismatch {
            context: format!("matrix is {}x{}", p, matrix.ncols()),
        });
    }
    let sym_dev = (0..p)
        .flat_map(|i| (0..p).map(move |j| (i, j)))
        .map(|(i, j)| (matrix[(i, j)] - matrix[(j, i)]).abs())
        .fold(0.0, f64::max);
    if sym_dev > 1e-8 {
        return Err(Error::NotSymmetric {
            deviation: sym_dev,
            tolerance: 1e-8,
        });
    }
    if k == 0 || k >= p {
        return Err(Error::RankOutOfRange { k, p });
    }

    let eig = matrix.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());

    let eigenvalues = DVector::from_fn(p, |i, _| eig.eigenvalues[order[i]]);
    let mut eigenvectors = DMatrix::zeros(p, p);
    for (dst, &src) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(src);
        // sign fix: largest-|entry| coordinate positive, ties to lowest index
        let mut best = 0;
        for r in 1..p {
            if col[r].abs() > col[best].abs() {
                best = r;
            }
        }
        let flip = if col[best] < 0.0 { -1.0 } else { 1.0 };
        for r in 0..p {
            eigenvectors[(r, dst)] = flip * col[r];
        }
    }

    SpectralSummary::from_parts(eigenvalues, eigenvectors, k, None)
}

fn check_pole(summary: &SpectralSummary, lambda: f64) -> Result<()> {
    let edge = summary.eigenvalue(summary.k());
    if lambda <= edge + POLE_MARGIN {
        return Err(Error::PoleViolation {
            lambda,
            edge,
            margin: POLE_MARGIN,
        });
    }
    Ok(())
}

/// Empirical Hilbert transform of the bulk spectrum:
/// `H(lambda) = (1/p) sum_{i=1}^{p-k} 1/(lambda - lambda_{k+i})`.
///
/// Note the `1/p` normalization (not `1/(p-k)`), matching the plug-in form
/// used by every closed-form curve in this crate.
pub fn hilbert(summary: &SpectralSummary, lambda: f64) -> Result<f64> {
    check_pole(summary, lambda)?;
    let (p, k) = (summary.p(), summary.k());
    let sum: f64 = (k..p)
        .map(|i| 1.0 / (lambda - summary.eigenvalue(i)))
        .sum();
    Ok(sum / p as f64)
}

/// First derivative `H'(lambda) = -(1/p) sum 1/(lambda - lambda_{k+i})^2`.
pub fn hilbert_deriv(summary: &SpectralSummary, lambda: f64) -> Result<f64> {
    check_pole(summary, lambda)?;
    let (p, k) = (summary.p(), summary.k());
    let sum: f64 = (k..p)
        .map(|i| {
            let d = lambda - summary.eigenvalue(i);
            1.0 / (d * d)
        })
        .sum();
    Ok(-sum / p as f64)
}

/// Second derivative `H''(lambda) = (2/p) sum 1/(lambda - lambda_{k+i})^3`.
pub fn hilbert_second(summary: &SpectralSummary, lambda: f64) -> Result<f64> {
    check_pole(summary, lambda)?;
    let (p, k) = (summary.p(), summary.k());
    let sum: f64 = (k..p)
        .map(|i| {
            let d = lambda - summary.eigenvalue(i);
            1.0 / (d * d * d)
        })
        .sum();
    Ok(2.0 * sum / p as f64)
}

/// Resolvent kernel
/// `K(l, l') = (1/p) sum_{i=1}^{p-k} 1/((l - lambda_{k+i})(l' - lambda_{k+i}))`.
pub fn kkernel(summary: &SpectralSummary, lambda: f64, lambda_prime: f64) -> Result<f64> {
    check_pole(summary, lambda)?;
    check_pole(summary, lambda_prime)?;
    let (p, k) = (summary.p(), summary.k());
    let sum: f64 = (k..p)
        .map(|i| {
            let li = summary.eigenvalue(i);
            1.0 / ((lambda - li) * (lambda_prime - li))
        })
        .sum();
    Ok(sum / p as f64)
}
