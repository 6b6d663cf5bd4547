//! Gaussian innovations and the long-range-dependent linear process
//! `η_j = Σ_k ψ_k ξ_{j-k}` with power-law weights `ψ_k = k^{-(1+α)/2}`.

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::fft::{autocorrelation, KernelConvolver};

/// Default number of retained weights beyond `ψ_0`.
pub const DEFAULT_TRUNCATION: usize = 1 << 16;

/// Above this many multiply-adds the path is generated by FFT convolution.
const DIRECT_SUM_LIMIT: usize = 1 << 20;

/// Truncated moving-average model with weights `ψ_0 = 1`, `ψ_k = k^{-(1+α)/2}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearProcessModel {
    pub alpha: f64,
    pub truncation: usize,
    pub weights: Vec<f64>,
    /// `σ = (Σ ψ_k²)^{1/2}`.
    pub sigma: f64,
}

impl LinearProcessModel {
    /// Builds the model for memory exponent `alpha` keeping `ψ_0..=ψ_truncation`.
    pub fn new(alpha: f64, truncation: usize) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return param(format!("alpha must lie in (0, 1), got {alpha}"));
        }
        if truncation == 0 {
            return param("truncation must be at least 1");
        }
        Ok(Self::from_parts(alpha, truncation))
    }

    /// The degenerate single-weight model (`M = 0`): `η̃_j = ξ_j`, i.i.d.
    /// `alpha` is kept only as a label for downstream scalings.
    pub fn independent(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return param(format!("alpha must lie in (0, 1), got {alpha}"));
        }
        Ok(Self::from_parts(alpha, 0))
    }

    fn from_parts(alpha: f64, truncation: usize) -> Self {
        let exponent = -(1.0 + alpha) / 2.0;
        let weights: Vec<f64> = (0..=truncation)
            .map(|k| if k == 0 { 1.0 } else { (k as f64).powf(exponent) })
            .collect();
        // Smallest terms first keeps the sum accurate for long tails.
        let sigma2: f64 = weights.iter().rev().map(|w| w * w).sum();
        Self { alpha, truncation, weights, sigma: sigma2.sqrt() }
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma * self.sigma
    }
}

/// Convenience wrapper matching the model constructor.
pub fn make_model(alpha: f64, truncation: usize) -> Result<LinearProcessModel> {
    LinearProcessModel::new(alpha, truncation)
}

/// A source of standard normal innovations `ξ_k` addressable by integer index.
pub trait InnovationSource {
    /// Writes `ξ_start, ξ_{start+1}, …` into `out`.
    fn fill(&self, start: i64, out: &mut [f64]) -> Result<()>;

    fn block(&self, start: i64, len: usize) -> Result<Vec<f64>> {
        let mut v = vec![0.0; len];
        self.fill(start, &mut v)?;
        Ok(v)
    }
}

/// Counter-based normal stream: `ξ_k` is a pure function of `(seed, stream_id, k)`.
///
/// Each index consumes four 32-bit words of a ChaCha8 keystream, so any index
/// range can be produced without generating a prefix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InnovationStream {
    pub seed: u64,
    pub stream_id: u64,
}

const INDEX_OFFSET: i128 = 1 << 62;

impl InnovationStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    pub fn value(&self, k: i64) -> f64 {
        let mut one = [0.0];
        self.fill(k, &mut one).expect("stream covers every index");
        one[0]
    }
}

impl InnovationSource for InnovationStream {
    fn fill(&self, start: i64, out: &mut [f64]) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng.set_word_pos(((start as i128 + INDEX_OFFSET) as u128) * 4);
        for slot in out.iter_mut() {
            let a = rng.next_u64();
            let b = rng.next_u64();
            // u1 in (0, 1], u2 in [0, 1)
            let u1 = ((a >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
            let u2 = (b >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
            *slot = (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
        }
        Ok(())
    }
}

/// Explicit innovations for indices `start..start + values.len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct InnovationBlock {
    pub start: i64,
    pub values: Vec<f64>,
}

impl InnovationBlock {
    pub fn constant(start: i64, len: usize, value: f64) -> Self {
        Self { start, values: vec![value; len] }
    }
}

impl InnovationSource for InnovationBlock {
    fn fill(&self, start: i64, out: &mut [f64]) -> Result<()> {
        let end = start + out.len() as i64;
        let have_end = self.start + self.values.len() as i64;
        if start < self.start || end > have_end {
            return param(format!(
                "innovations cover indices {}..{}, requested {start}..{end}",
                self.start, have_end
            ));
        }
        let off = (start - self.start) as usize;
        out.copy_from_slice(&self.values[off..off + out.len()]);
        Ok(())
    }
}

/// Standardized path `η̃_j = η_j / σ`, `j = 0..n-1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrdGaussianPath {
    pub model: LinearProcessModel,
    pub values: Vec<f64>,
    pub n: usize,
}

/// Generates standardized paths of one length for one model, caching the
/// weight spectrum between calls.
pub struct PathGenerator {
    model: LinearProcessModel,
    n: usize,
    convolver: Option<KernelConvolver>,
}

impl PathGenerator {
    pub fn new(model: &LinearProcessModel, n: usize) -> Result<Self> {
        if n == 0 {
            return param("path length n must be positive");
        }
        let work = n.saturating_mul(model.truncation + 1);
        let convolver = (work > DIRECT_SUM_LIMIT)
            .then(|| KernelConvolver::new(&model.weights, n + model.truncation));
        Ok(Self { model: model.clone(), n, convolver })
    }

    pub fn generate(&self, innovations: &dyn InnovationSource) -> Result<LrdGaussianPath> {
        let m = self.model.truncation;
        let xi = innovations.block(-(m as i64), self.n + m)?;
        let values = match &self.convolver {
            Some(conv) => {
                let full = conv.convolve(&xi);
                let inv = 1.0 / self.model.sigma;
                full[m..m + self.n].iter().map(|v| v * inv).collect()
            }
            None => direct_sum(&self.model, &xi, self.n),
        };
        Ok(LrdGaussianPath { model: self.model.clone(), values, n: self.n })
    }
}

/// `η̃_j` for `j = 0..n-1` from innovations `ξ_{-M}..ξ_{n-1}` (choosing direct
/// summation or FFT convolution by problem size).
pub fn generate_path(
    model: &LinearProcessModel,
    n: usize,
    innovations: &dyn InnovationSource,
) -> Result<LrdGaussianPath> {
    PathGenerator::new(model, n)?.generate(innovations)
}

/// Direct-summation generator, always `O(n·M)`.
pub fn generate_path_direct(
    model: &LinearProcessModel,
    n: usize,
    innovations: &dyn InnovationSource,
) -> Result<LrdGaussianPath> {
    if n == 0 {
        return param("path length n must be positive");
    }
    let m = model.truncation;
    let xi = innovations.block(-(m as i64), n + m)?;
    Ok(LrdGaussianPath { model: model.clone(), values: direct_sum(model, &xi, n), n })
}

/// FFT generator regardless of size.
pub fn generate_path_fft(
    model: &LinearProcessModel,
    n: usize,
    innovations: &dyn InnovationSource,
) -> Result<LrdGaussianPath> {
    if n == 0 {
        return param("path length n must be positive");
    }
    let m = model.truncation;
    let xi = innovations.block(-(m as i64), n + m)?;
    let full = KernelConvolver::new(&model.weights, n + m).convolve(&xi);
    let inv = 1.0 / model.sigma;
    let values = full[m..m + n].iter().map(|v| v * inv).collect();
    Ok(LrdGaussianPath { model: model.clone(), values, n })
}

// xi[p] holds ξ_{p-M}; η_j = Σ_k ψ_k ξ_{j-k} = Σ_k ψ_k xi[j + M - k].
fn direct_sum(model: &LinearProcessModel, xi: &[f64], n: usize) -> Vec<f64> {
    let m = model.truncation;
    let inv = 1.0 / model.sigma;
    (0..n)
        .map(|j| {
            let base = j + m;
            model.weights.iter().enumerate().map(|(k, w)| w * xi[base - k]).sum::<f64>() * inv
        })
        .collect()
}

/// Exact lag-`lag` correlation `ρ_lag = σ^{-2} Σ_k ψ_k ψ_{k+lag}` of the truncated model.
pub fn model_covariance(model: &LinearProcessModel, lag: usize) -> f64 {
    let w = &model.weights;
    if lag >= w.len() {
        return 0.0;
    }
    let s: f64 = w.iter().zip(&w[lag..]).rev().map(|(a, b)| a * b).sum();
    s / model.sigma2()
}

/// `ρ_0..=ρ_max_lag`, through the FFT for long weight vectors.
pub fn model_correlations(model: &LinearProcessModel, max_lag: usize) -> Vec<f64> {
    if model.weights.len().saturating_mul(max_lag.min(model.weights.len()) + 1) <= DIRECT_SUM_LIMIT {
        return (0..=max_lag).map(|k| model_covariance(model, k)).collect();
    }
    let s2 = model.sigma2();
    let mut r = autocorrelation(&model.weights, max_lag);
    for v in r.iter_mut() {
        *v /= s2;
    }
    // Lag zero is exactly one by construction.
    r[0] = 1.0;
    r
}

/// `Var(Σ_{j=1}^n η̃_j) = n + 2 Σ_{k=1}^{n-1} (n-k) ρ_k`.
pub fn exact_partial_sum_variance(model: &LinearProcessModel, n: usize) -> Result<f64> {
    if n == 0 {
        return param("n must be positive");
    }
    let rho = model_correlations(model, n - 1);
    let tail: f64 = (1..n).rev().map(|k| (n - k) as f64 * rho[k]).sum();
    Ok(n as f64 * rho[0] + 2.0 * tail)
}
