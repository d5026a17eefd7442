//! Gaussian fitting and the Fréchet distance between two Gaussians.
//!
//! For reference statistics `(μr, Σr)` and generated statistics `(μg, Σg)`:
//!
//! ```text
//! d = ‖μr − μg‖² + Tr(Σr + Σg − 2 (Σr Σg)^½)
//! ```
//!
//! The cross term is evaluated as `Tr((Σr^½ Σg Σr^½)^½)`, which has the same value but only
//! needs square roots of symmetric positive semidefinite matrices.
//!
//! Covariances use the biased `1/N` normalizer. Most FID implementations use `1/(N−1)`;
//! the two differ by a factor `N/(N−1)` on the covariance.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

/// Eigenvalues below this are treated as exact zeros.
pub const DEFAULT_CLAMP_EPS: f64 = 1e-10;
/// Raw distances in `[-NEGATIVE_TOLERANCE, 0)` are round-off and get clamped to zero.
pub const NEGATIVE_TOLERANCE: f64 = 1e-6;
/// Relative tolerance for the symmetry precondition of [`sqrtm_psd`].
pub const SYMMETRY_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianStats {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    pub n_samples: usize,
}

impl GaussianStats {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrechetResult {
    pub value: f64,
    pub mean_term: f64,
    pub trace_term: f64,
    pub clamped: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrechetOptions {
    pub clamp_eps: f64,
    pub negative_tolerance: f64,
}

impl Default for FrechetOptions {
    fn default() -> Self {
        Self {
            clamp_eps: DEFAULT_CLAMP_EPS,
            negative_tolerance: NEGATIVE_TOLERANCE,
        }
    }
}

/// Mean and biased (`1/N`) covariance of the rows.
pub fn fit_gaussian(features: &FeatureMatrix) -> Result<GaussianStats> {
    let data = features.data();
    if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput {
            row: pos % data.nrows(),
            col: pos / data.nrows(),
        });
    }
    let n = data.nrows();
    let mean = data.row_mean().transpose();
    let mut centered = data.clone();
    for mut row in centered.row_iter_mut() {
        row -= mean.transpose();
    }
    let cov = centered.tr_mul(&centered) / n as f64;
    Ok(GaussianStats {
        mean,
        cov: symmetrize(cov),
        n_samples: n,
    })
}

pub(crate) fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    if !m.is_square() {
        return Err(Error::dims(
            format!("square matrix, {0}x{0}", m.nrows()),
            format!("{}x{}", m.nrows(), m.ncols()),
        ));
    }
    let scale = m.amax().max(1.0);
    let n = m.nrows();
    let mut asym = 0.0f64;
    for j in 0..n {
        for i in (j + 1)..n {
            let d = (m[(i, j)] - m[(j, i)]).abs();
            if d.is_nan() {
                return Err(Error::NumericalInstability("NaN in matrix".into()));
            }
            asym = asym.max(d);
        }
    }
    let tolerance = SYMMETRY_TOLERANCE * scale;
    if asym > tolerance {
        return Err(Error::NotSymmetric {
            asymmetry: asym,
            tolerance,
        });
    }
    Ok(())
}

/// Eigendecomposition of a symmetric matrix. Eigenvalues below `clamp_eps` are set to zero.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl SymmetricEigen {
    pub fn new(matrix: &DMatrix<f64>, clamp_eps: f64) -> Result<Self> {
        Self::decompose(matrix, |_| clamp_eps)
    }

    /// Like [`SymmetricEigen::new`], but eigenvalues within round-off of zero
    /// (`max|λ| · n · ε`) are also clamped when that exceeds `clamp_eps`.
    pub fn with_relative_clamp(matrix: &DMatrix<f64>, clamp_eps: f64) -> Result<Self> {
        let n = matrix.nrows() as f64;
        Self::decompose(matrix, |values| {
            let top = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            clamp_eps.max(top * n * f64::EPSILON)
        })
    }

    fn decompose(matrix: &DMatrix<f64>, threshold: impl Fn(&DVector<f64>) -> f64) -> Result<Self> {
        check_symmetric(matrix)?;
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericalInstability("non-finite matrix entry".into()));
        }
        let dim = matrix.nrows();
        let sym = symmetrize(matrix.clone());
        let max_iter = 1000 * dim.max(1) + 1000;
        let eig = sym
            .try_symmetric_eigen(f64::EPSILON, max_iter)
            .ok_or(Error::EigenFailure { dim })?;
        let clamp_eps = threshold(&eig.eigenvalues);
        let values = eig.eigenvalues.map(|v| if v < clamp_eps { 0.0 } else { v });
        Ok(Self {
            values,
            vectors: eig.eigenvectors,
        })
    }

    /// `V f(Λ) Vᵀ`, symmetrized.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let mut scaled = self.vectors.clone();
        for (mut col, &v) in scaled.column_iter_mut().zip(self.values.iter()) {
            col *= f(v);
        }
        symmetrize(&scaled * self.vectors.transpose())
    }

    pub fn sqrt(&self) -> DMatrix<f64> {
        self.map(f64::sqrt)
    }

    /// Pseudoinverse square root: zero eigenvalues stay zero.
    pub fn inv_sqrt(&self) -> DMatrix<f64> {
        self.inv_sqrt_above(0.0)
    }

    /// Pseudoinverse square root treating eigenvalues `<= threshold` as zero.
    pub fn inv_sqrt_above(&self, threshold: f64) -> DMatrix<f64> {
        self.map(|v| if v > threshold { 1.0 / v.sqrt() } else { 0.0 })
    }

    pub fn trace_sqrt(&self) -> f64 {
        self.values.iter().map(|v| v.sqrt()).sum()
    }
}

/// Principal square root of a symmetric positive semidefinite matrix.
///
/// Eigenvalues below `clamp_eps` are clamped to zero before taking roots.
pub fn sqrtm_psd(matrix: &DMatrix<f64>, clamp_eps: f64) -> Result<DMatrix<f64>> {
    if clamp_eps < 0.0 || !clamp_eps.is_finite() {
        return Err(Error::InvalidConfig(format!("clamp_eps must be >= 0, got {clamp_eps}")));
    }
    Ok(SymmetricEigen::new(matrix, clamp_eps)?.sqrt())
}

pub fn frechet_distance(reference: &GaussianStats, generated: &GaussianStats) -> Result<FrechetResult> {
    frechet_distance_with(reference, generated, &FrechetOptions::default())
}

pub fn frechet_distance_with(
    reference: &GaussianStats,
    generated: &GaussianStats,
    opts: &FrechetOptions,
) -> Result<FrechetResult> {
    let ref_root = sqrtm_psd(&reference.cov, opts.clamp_eps)?;
    frechet_with_root(reference, &ref_root, generated, opts)
}

/// Fréchet distance with a precomputed `Σr^½`. Used by the resampler, which evaluates many
/// generated statistics against one reference.
pub(crate) fn frechet_with_root(
    reference: &GaussianStats,
    ref_root: &DMatrix<f64>,
    generated: &GaussianStats,
    opts: &FrechetOptions,
) -> Result<FrechetResult> {
    let (mean_term, trace_term) = frechet_terms(reference, ref_root, generated, opts)?.terms();
    finish(mean_term, trace_term, opts)
}

pub(crate) struct FrechetTerms {
    pub mean_term: f64,
    pub trace_ref: f64,
    pub trace_gen: f64,
    /// Eigendecomposition of `Σr^½ Σg Σr^½`.
    pub inner: SymmetricEigen,
}

impl FrechetTerms {
    pub fn terms(&self) -> (f64, f64) {
        (
            self.mean_term,
            self.trace_ref + self.trace_gen - 2.0 * self.inner.trace_sqrt(),
        )
    }
}

pub(crate) fn frechet_terms(
    reference: &GaussianStats,
    ref_root: &DMatrix<f64>,
    generated: &GaussianStats,
    opts: &FrechetOptions,
) -> Result<FrechetTerms> {
    if reference.dim() != generated.dim() {
        return Err(Error::dims(
            format!("dim {}", reference.dim()),
            format!("dim {}", generated.dim()),
        ));
    }
    let mean_term = (&reference.mean - &generated.mean).norm_squared();
    let inner = symmetrize(ref_root * &generated.cov * ref_root);
    // eigenvalues of the product scale like squared covariance eigenvalues, and its null
    // space carries round-off of order ‖Σ‖²·ε that the square root would amplify
    let inner = SymmetricEigen::with_relative_clamp(&inner, opts.clamp_eps * opts.clamp_eps)?;
    Ok(FrechetTerms {
        mean_term,
        trace_ref: reference.cov.trace(),
        trace_gen: generated.cov.trace(),
        inner,
    })
}

fn finish(mean_term: f64, trace_term: f64, opts: &FrechetOptions) -> Result<FrechetResult> {
    let raw = mean_term + trace_term;
    if !raw.is_finite() {
        return Err(Error::NumericalInstability(format!("non-finite distance {raw}")));
    }
    if raw >= 0.0 {
        return Ok(FrechetResult {
            value: raw,
            mean_term,
            trace_term,
            clamped: false,
        });
    }
    if raw >= -opts.negative_tolerance {
        // keep value == mean_term + trace_term
        return Ok(FrechetResult {
            value: 0.0,
            mean_term,
            trace_term: -mean_term,
            clamped: true,
        });
    }
    Err(Error::NumericalInstability(format!(
        "Fréchet distance {raw:e} is below -{:e}",
        opts.negative_tolerance
    )))
}

/// Fits Gaussians to both feature sets and returns their Fréchet distance.
///
/// This is FVD for clip-level features and FID for frame-level features.
pub fn compute_fvd(reference: &FeatureMatrix, generated: &FeatureMatrix) -> Result<FrechetResult> {
    if reference.dim() != generated.dim() {
        return Err(Error::dims(
            format!("dim {}", reference.dim()),
            format!("dim {}", generated.dim()),
        ));
    }
    frechet_distance(&fit_gaussian(reference)?, &fit_gaussian(generated)?)
}
