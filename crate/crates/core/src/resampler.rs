//! Softmax-weighted resampling of a candidate set to minimize the Fréchet distance.
//!
//! Every candidate `k` gets a logit `w_k`; the candidate Gaussian is fitted with probabilities
//! `p = softmax(w)`. Plain gradient descent on the weighted distance moves probability toward
//! candidates that pull the weighted statistics toward the reference. Resampling by the final
//! probabilities then shows how far the metric can be lowered without generating anything new.

use nalgebra::{DMatrix, DVector};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::frechet::{
    compute_fvd, fit_gaussian, frechet_terms, frechet_with_root, sqrtm_psd, symmetrize,
    FrechetOptions, GaussianStats,
};
use crate::rng;

/// Number of candidates listed at each end of the weight ranking in reports.
pub const LISTING_SIZE: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    logits: Vec<f64>,
}

impl WeightVector {
    pub fn new(logits: Vec<f64>) -> Result<Self> {
        if logits.is_empty() {
            return Err(Error::InvalidInput("weight vector must be non-empty".into()));
        }
        if let Some(i) = logits.iter().position(|w| !w.is_finite()) {
            return Err(Error::NonFiniteInput { row: i, col: 0 });
        }
        Ok(Self { logits })
    }

    pub fn uniform(k: usize) -> Self {
        Self {
            logits: vec![0.0; k.max(1)],
        }
    }

    pub fn len(&self) -> usize {
        self.logits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.logits.is_empty()
    }

    pub fn logits(&self) -> &[f64] {
        &self.logits
    }

    /// Softmax with max-logit subtraction.
    pub fn probabilities(&self) -> Vec<f64> {
        let max = self.logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exp: Vec<f64> = self.logits.iter().map(|w| (w - max).exp()).collect();
        let total: f64 = exp.iter().sum();
        exp.into_iter().map(|e| e / total).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResampleConfig {
    pub steps: usize,
    pub lr0: f64,
    pub decay_factor: f64,
    pub decay_every: usize,
    pub sample_size: usize,
    pub candidate_multiple: usize,
    pub seed: u64,
}

impl Default for ResampleConfig {
    fn default() -> Self {
        Self {
            steps: 300,
            lr0: 0.01,
            decay_factor: 0.1,
            decay_every: 100,
            sample_size: 2048,
            candidate_multiple: 8,
            seed: 0,
        }
    }
}

impl ResampleConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.steps == 0 {
            return bad("steps must be >= 1".into());
        }
        if !(self.lr0 > 0.0 && self.lr0.is_finite()) {
            return bad(format!("lr0 must be > 0, got {}", self.lr0));
        }
        if !(self.decay_factor > 0.0 && self.decay_factor <= 1.0) {
            return bad(format!("decay_factor must be in (0, 1], got {}", self.decay_factor));
        }
        if self.decay_every == 0 {
            return bad("decay_every must be >= 1".into());
        }
        if self.sample_size == 0 {
            return bad("sample_size must be >= 1".into());
        }
        Ok(())
    }

    /// Step size used for step `step` (0-based).
    pub fn learning_rate(&self, step: usize) -> f64 {
        self.lr0 * self.decay_factor.powi((step / self.decay_every) as i32)
    }

    /// Candidate count the protocol expects: `candidate_multiple × sample_size`.
    pub fn expected_candidates(&self) -> usize {
        self.candidate_multiple * self.sample_size
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResampleReport {
    pub config: ResampleConfig,
    /// Always `"iid_with_replacement"` for the FVD* draw.
    pub sampling: String,
    pub candidate_count: usize,
    pub fvd_uniform: f64,
    pub fvd_weighted_objective: f64,
    pub fvd_star: f64,
    pub change_pct: f64,
    pub objective_trace: Vec<f64>,
    pub top_ids: Vec<String>,
    pub bottom_ids: Vec<String>,
}

/// Report plus the optimized weights it was computed from.
#[derive(Debug, Clone)]
pub struct ResampleOutcome {
    pub report: ResampleReport,
    pub weights: WeightVector,
}

fn check_shapes(candidates: &FeatureMatrix, weights: &WeightVector) -> Result<()> {
    if candidates.rows() != weights.len() {
        return Err(Error::dims(
            format!("{} weights", candidates.rows()),
            format!("{} weights", weights.len()),
        ));
    }
    Ok(())
}

fn weighted_moments(data: &DMatrix<f64>, probs: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
    let p = DVector::from_column_slice(probs);
    let mean = data.tr_mul(&p);
    let mut scaled = data.clone();
    for (i, mut row) in scaled.row_iter_mut().enumerate() {
        row -= mean.transpose();
        row *= probs[i].sqrt();
    }
    let cov = symmetrize(scaled.tr_mul(&scaled));
    (mean, cov)
}

/// Probability-weighted mean and covariance of the candidates.
pub fn weighted_stats(candidates: &FeatureMatrix, weights: &WeightVector) -> Result<GaussianStats> {
    check_shapes(candidates, weights)?;
    let (mean, cov) = weighted_moments(candidates.data(), &weights.probabilities());
    Ok(GaussianStats {
        mean,
        cov,
        n_samples: candidates.rows(),
    })
}

/// The weighted Fréchet objective and its gradient with respect to the logits, with the
/// reference square root computed once.
pub struct WeightedObjective<'a> {
    reference: &'a GaussianStats,
    ref_root: DMatrix<f64>,
    candidates: &'a FeatureMatrix,
    opts: FrechetOptions,
}

impl<'a> WeightedObjective<'a> {
    pub fn new(reference: &'a GaussianStats, candidates: &'a FeatureMatrix) -> Result<Self> {
        if reference.dim() != candidates.dim() {
            return Err(Error::dims(
                format!("dim {}", reference.dim()),
                format!("dim {}", candidates.dim()),
            ));
        }
        let opts = FrechetOptions::default();
        let ref_root = sqrtm_psd(&reference.cov, opts.clamp_eps)?;
        Ok(Self {
            reference,
            ref_root,
            candidates,
            opts,
        })
    }

    pub fn value(&self, weights: &WeightVector) -> Result<f64> {
        let generated = weighted_stats(self.candidates, weights)?;
        Ok(frechet_with_root(self.reference, &self.ref_root, &generated, &self.opts)?.value)
    }

    /// Objective value (unclamped) and gradient at `weights`.
    ///
    /// With `g_k = ∂d/∂p_k = 2(μg − μr)·f_k + (f_k − μg)ᵀ G (f_k − μg)` and
    /// `G = I − Σr^½ (Σr^½ Σg Σr^½)^−½ Σr^½` (pseudoinverse root at singular points),
    /// the softmax chain rule gives `∂d/∂w_k = p_k (g_k − Σ_j p_j g_j)`.
    pub fn value_and_gradient(&self, weights: &WeightVector) -> Result<(f64, Vec<f64>)> {
        check_shapes(self.candidates, weights)?;
        let probs = weights.probabilities();
        let data = self.candidates.data();
        let (mean, cov) = weighted_moments(data, &probs);
        let generated = GaussianStats {
            mean,
            cov,
            n_samples: data.nrows(),
        };
        let terms = frechet_terms(self.reference, &self.ref_root, &generated, &self.opts)?;
        let (mean_term, trace_term) = terms.terms();
        let value = mean_term + trace_term;

        let d = data.ncols();
        let grad_mean = (&generated.mean - &self.reference.mean) * 2.0;
        let grad_cov = DMatrix::identity(d, d)
            - symmetrize(&self.ref_root * terms.inner.inv_sqrt_above(self.opts.clamp_eps) * &self.ref_root);

        let linear = data * &grad_mean;
        let mut centered = data.clone();
        for mut row in centered.row_iter_mut() {
            row -= generated.mean.transpose();
        }
        let projected = &centered * &grad_cov;
        let per_candidate: Vec<f64> = (0..data.nrows())
            .map(|k| linear[k] + projected.row(k).dot(&centered.row(k)))
            .collect();
        let avg: f64 = per_candidate.iter().zip(&probs).map(|(g, p)| g * p).sum();
        let grad: Vec<f64> = per_candidate
            .iter()
            .zip(&probs)
            .map(|(g, p)| p * (g - avg))
            .collect();
        if !value.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NumericalInstability(
                "non-finite objective gradient".into(),
            ));
        }
        Ok((value, grad))
    }
}

pub fn weighted_fvd_objective(
    reference: &GaussianStats,
    candidates: &FeatureMatrix,
    weights: &WeightVector,
) -> Result<f64> {
    WeightedObjective::new(reference, candidates)?.value(weights)
}

pub fn objective_gradient(
    reference: &GaussianStats,
    candidates: &FeatureMatrix,
    weights: &WeightVector,
) -> Result<Vec<f64>> {
    Ok(WeightedObjective::new(reference, candidates)?
        .value_and_gradient(weights)?
        .1)
}

/// Gradient descent on the logits from a uniform start.
///
/// The returned trace holds the objective before the first step and after every step,
/// so it has `steps + 1` entries.
pub fn optimize_weights(
    reference: &GaussianStats,
    candidates: &FeatureMatrix,
    config: &ResampleConfig,
) -> Result<(WeightVector, Vec<f64>)> {
    config.validate()?;
    let objective = WeightedObjective::new(reference, candidates)?;
    let mut weights = WeightVector::uniform(candidates.rows());
    let mut trace = Vec::with_capacity(config.steps + 1);
    let abort = |step: usize, err: Error, trace: &[f64]| Error::OptimizationAborted {
        step,
        reason: err.to_string(),
        trace: trace.to_vec(),
    };

    let (value, mut grad) = objective
        .value_and_gradient(&weights)
        .map_err(|e| abort(0, e, &trace))?;
    trace.push(value);
    for step in 0..config.steps {
        let lr = config.learning_rate(step);
        for (w, g) in weights.logits.iter_mut().zip(&grad) {
            *w -= lr * g;
        }
        let (value, next) = objective
            .value_and_gradient(&weights)
            .map_err(|e| abort(step + 1, e, &trace))?;
        trace.push(value);
        grad = next;
        if (step + 1) % 50 == 0 {
            log::debug!("step {}: objective {value:.6}", step + 1);
        }
    }
    Ok((weights, trace))
}

/// Indices of `sample_size` i.i.d. draws (with replacement) from the softmax probabilities.
pub fn resample_indices(weights: &WeightVector, sample_size: usize, seed: u64) -> Result<Vec<usize>> {
    let dist = WeightedIndex::new(weights.probabilities())
        .map_err(|e| Error::NumericalInstability(format!("bad sampling weights: {e}")))?;
    let mut rng = rng::seeded(seed);
    Ok((0..sample_size).map(|_| dist.sample(&mut rng)).collect())
}

pub fn resample_subset(
    candidates: &FeatureMatrix,
    weights: &WeightVector,
    sample_size: usize,
    seed: u64,
) -> Result<FeatureMatrix> {
    check_shapes(candidates, weights)?;
    if sample_size == 0 || sample_size > candidates.rows() {
        return Err(Error::InvalidConfig(format!(
            "sample_size {sample_size} must be in 1..={}",
            candidates.rows()
        )));
    }
    candidates.select_rows(&resample_indices(weights, sample_size, seed)?)
}

/// Uniform baseline, weight optimization, probability resampling and FVD* in one run.
pub fn probe_null_space(
    reference: &FeatureMatrix,
    candidates: &FeatureMatrix,
    config: &ResampleConfig,
) -> Result<ResampleOutcome> {
    config.validate()?;
    let k = candidates.rows();
    if config.sample_size > k {
        return Err(Error::InvalidConfig(format!(
            "sample_size {} exceeds candidate count {k}",
            config.sample_size
        )));
    }
    if reference.dim() != candidates.dim() {
        return Err(Error::dims(
            format!("dim {}", reference.dim()),
            format!("dim {}", candidates.dim()),
        ));
    }
    let ref_stats = fit_gaussian(reference)?;

    let mut uniform_rng = rng::derived(config.seed, &[1]);
    let mut uniform_idx = index::sample(&mut uniform_rng, k, config.sample_size).into_vec();
    uniform_idx.sort_unstable();
    let fvd_uniform = compute_fvd(reference, &candidates.select_rows(&uniform_idx)?)?.value;

    let (weights, trace) = optimize_weights(&ref_stats, candidates, config)?;
    let resampled = resample_subset(
        candidates,
        &weights,
        config.sample_size,
        rng::derive_seed(config.seed, &[2]),
    )?;
    let fvd_star = compute_fvd(reference, &resampled)?.value;

    let mut order: Vec<usize> = (0..k).collect();
    let logits = weights.logits();
    order.sort_by(|&a, &b| logits[b].total_cmp(&logits[a]).then(a.cmp(&b)));
    let listing = LISTING_SIZE.min(k);
    let top_ids = order[..listing].iter().map(|&i| candidates.row_label(i)).collect();
    let bottom_ids = order
        .iter()
        .rev()
        .take(listing)
        .map(|&i| candidates.row_label(i))
        .collect();

    let report = ResampleReport {
        config: config.clone(),
        sampling: "iid_with_replacement".into(),
        candidate_count: k,
        fvd_uniform,
        fvd_weighted_objective: *trace.last().expect("trace is non-empty"),
        fvd_star,
        change_pct: crate::protocols::report::delta_pct(fvd_uniform, fvd_star),
        objective_trace: trace,
        top_ids,
        bottom_ids,
    };
    Ok(ResampleOutcome { report, weights })
}
