//! Fractional Brownian motion: exact stand-alone paths (sequential Cholesky
//! and circulant embedding) and a path coupled to the innovations that drive
//! the linear process.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{param, LabError, Result};
use crate::fft::KernelConvolver;
use crate::gauss_lrd::{InnovationSource, InnovationStream, LinearProcessModel};
use crate::hermite::compute_kappa_alpha;

/// Largest path handled by the sequential Cholesky generator.
pub const CHOLESKY_MAX_STEPS: usize = 4096;

/// Embedding eigenvalues in `[-EIGEN_CLIP, 0)` are treated as rounding noise.
pub const EIGEN_CLIP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FbmMethod {
    Cholesky,
    Circulant,
    Coupled,
}

/// Scale applied to the coupled moving-average sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingNormalization {
    /// Exact variance of the lattice kernel at the final time equals `n^{2H}`.
    #[default]
    ExactVariance,
    /// `1/C_H` with `C_H² = ∫_0^∞ ((1+s)^d - s^d)² ds + 1/(2H)`, the constant
    /// of the continuous moving-average representation; `C_H = dκ_α`.
    MandelbrotVanNess,
}

/// Identifies the innovations a coupled path was built from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingRef {
    pub seed: u64,
    pub stream_id: u64,
    pub alpha: f64,
    pub truncation: usize,
}

/// `W_H` sampled at `t_i = i·step`, `i = 0..=n_steps`, with `values[0] = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FbmPath {
    pub hurst: f64,
    pub step: f64,
    pub values: Vec<f64>,
    pub method: FbmMethod,
    pub coupling_ref: Option<CouplingRef>,
}

impl FbmPath {
    pub fn n_steps(&self) -> usize {
        self.values.len() - 1
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.step
    }

    pub fn horizon(&self) -> f64 {
        self.time(self.n_steps())
    }

    /// Linear interpolation between grid points; `t` is clamped to the grid.
    pub fn interpolate(&self, t: f64) -> f64 {
        let x = (t / self.step).clamp(0.0, self.n_steps() as f64);
        let i = x.floor() as usize;
        if i >= self.n_steps() {
            return self.values[self.n_steps()];
        }
        let frac = x - i as f64;
        self.values[i] + frac * (self.values[i + 1] - self.values[i])
    }
}

/// `E W_H(s) W_H(t) = ½(s^{2H} + t^{2H} - |s-t|^{2H})`.
pub fn fbm_covariance(hurst: f64, s: f64, t: f64) -> f64 {
    let h2 = 2.0 * hurst;
    0.5 * (s.powf(h2) + t.powf(h2) - (s - t).abs().powf(h2))
}

/// Lag-`k` autocovariance of increments over steps of length `step`.
pub fn fgn_autocovariance(hurst: f64, k: usize, step: f64) -> f64 {
    let h2 = 2.0 * hurst;
    let k = k as f64;
    let core = if k == 0.0 {
        1.0
    } else {
        0.5 * ((k + 1.0).powf(h2) - 2.0 * k.powf(h2) + (k - 1.0).powf(h2))
    };
    core * step.powf(h2)
}

fn check_exact_args(hurst: f64, n_steps: usize, step: f64) -> Result<()> {
    if !(hurst > 0.0 && hurst < 1.0) {
        return param(format!("Hurst index must lie in (0, 1), got {hurst}"));
    }
    if n_steps == 0 {
        return param("n_steps must be at least 1");
    }
    if !(step > 0.0 && step.is_finite()) {
        return param(format!("step must be positive, got {step}"));
    }
    Ok(())
}

/// Reusable sampler of fractional Gaussian noise of fixed length.
#[derive(Debug, Clone)]
pub enum FgnSampler {
    /// Durbin–Levinson recursion: the sequential form of the Cholesky
    /// factorization of the Toeplitz covariance, `O(n²)` per path.
    Cholesky {
        hurst: f64,
        step: f64,
        /// Row `t` holds the one-step predictor coefficients `φ_{t,1..=t}`.
        coefficients: Vec<Vec<f64>>,
        innovation_sd: Vec<f64>,
    },
    /// Circulant embedding of length `2n`, `O(n log n)` per path.
    Circulant {
        hurst: f64,
        step: f64,
        n: usize,
        scaled_sqrt_eigen: Vec<f64>,
    },
}

impl FgnSampler {
    pub fn cholesky(hurst: f64, n_steps: usize, step: f64) -> Result<Self> {
        check_exact_args(hurst, n_steps, step)?;
        if n_steps > CHOLESKY_MAX_STEPS {
            return param(format!("Cholesky generation limited to {CHOLESKY_MAX_STEPS} steps"));
        }
        let gamma: Vec<f64> = (0..n_steps).map(|k| fgn_autocovariance(hurst, k, step)).collect();
        let mut coefficients: Vec<Vec<f64>> = Vec::with_capacity(n_steps);
        let mut innovation_sd = Vec::with_capacity(n_steps);
        let mut v = gamma[0];
        coefficients.push(Vec::new());
        innovation_sd.push(v.sqrt());
        for t in 1..n_steps {
            let prev = &coefficients[t - 1];
            let acc: f64 = (1..t).map(|j| prev[j - 1] * gamma[t - j]).sum();
            let phi_tt = (gamma[t] - acc) / v;
            let mut row = Vec::with_capacity(t);
            for j in 1..t {
                row.push(prev[j - 1] - phi_tt * prev[t - j - 1]);
            }
            row.push(phi_tt);
            v *= 1.0 - phi_tt * phi_tt;
            if !(v > 0.0) {
                return Err(LabError::Numerical(format!(
                    "fGn covariance lost positive definiteness at step {t}"
                )));
            }
            coefficients.push(row);
            innovation_sd.push(v.sqrt());
        }
        Ok(Self::Cholesky { hurst, step, coefficients, innovation_sd })
    }

    /// Circulant embedding; `Ok(None)` when an eigenvalue falls below `-EIGEN_CLIP`.
    pub fn circulant(hurst: f64, n_steps: usize, step: f64) -> Result<Option<Self>> {
        check_exact_args(hurst, n_steps, step)?;
        let n = n_steps;
        let len = 2 * n;
        let mut c: Vec<Complex<f64>> = Vec::with_capacity(len);
        for k in 0..=n {
            c.push(Complex::new(fgn_autocovariance(hurst, k, step), 0.0));
        }
        for k in (1..n).rev() {
            c.push(Complex::new(fgn_autocovariance(hurst, k, step), 0.0));
        }
        FftPlanner::<f64>::new().plan_fft_forward(len).process(&mut c);
        let mut scaled_sqrt_eigen = Vec::with_capacity(len);
        for z in &c {
            let lambda = z.re;
            if lambda < -EIGEN_CLIP {
                return Ok(None);
            }
            scaled_sqrt_eigen.push((lambda.max(0.0) / len as f64).sqrt());
        }
        Ok(Some(Self::Circulant { hurst, step, n, scaled_sqrt_eigen }))
    }

    /// Circulant embedding, falling back to Cholesky when the embedding is
    /// not nonnegative definite.
    pub fn new(hurst: f64, n_steps: usize, step: f64) -> Result<Self> {
        match Self::circulant(hurst, n_steps, step)? {
            Some(s) => Ok(s),
            None if n_steps <= CHOLESKY_MAX_STEPS => Self::cholesky(hurst, n_steps, step),
            None => Err(LabError::Numerical(format!(
                "circulant embedding not nonnegative for H = {hurst}, n = {n_steps}; too long for Cholesky"
            ))),
        }
    }

    pub fn method(&self) -> FbmMethod {
        match self {
            Self::Cholesky { .. } => FbmMethod::Cholesky,
            Self::Circulant { .. } => FbmMethod::Circulant,
        }
    }

    /// One increment vector drawn from `seed`.
    pub fn sample_increments(&self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match self {
            Self::Cholesky { coefficients, innovation_sd, .. } => {
                let n = innovation_sd.len();
                let mut x = Vec::with_capacity(n);
                for t in 0..n {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    let mean: f64 = coefficients[t].iter().enumerate().map(|(j, phi)| phi * x[t - 1 - j]).sum();
                    x.push(mean + innovation_sd[t] * z);
                }
                x
            }
            Self::Circulant { n, scaled_sqrt_eigen, .. } => {
                let len = scaled_sqrt_eigen.len();
                let mut w: Vec<Complex<f64>> = scaled_sqrt_eigen
                    .iter()
                    .map(|s| {
                        let a: f64 = StandardNormal.sample(&mut rng);
                        let b: f64 = StandardNormal.sample(&mut rng);
                        Complex::new(s * a, s * b)
                    })
                    .collect();
                FftPlanner::<f64>::new().plan_fft_forward(len).process(&mut w);
                w[..*n].iter().map(|z| z.re).collect()
            }
        }
    }

    pub fn sample_path(&self, seed: u64) -> FbmPath {
        let inc = self.sample_increments(seed);
        let (hurst, step) = match self {
            Self::Cholesky { hurst, step, .. } | Self::Circulant { hurst, step, .. } => (*hurst, *step),
        };
        let mut values = Vec::with_capacity(inc.len() + 1);
        values.push(0.0);
        let mut acc = 0.0;
        for d in inc {
            acc += d;
            values.push(acc);
        }
        FbmPath { hurst, step, values, method: self.method(), coupling_ref: None }
    }
}

/// Exact fBm path: circulant embedding with Cholesky fallback.
pub fn generate_exact(hurst: f64, n_steps: usize, step: f64, seed: u64) -> Result<FbmPath> {
    Ok(FgnSampler::new(hurst, n_steps, step)?.sample_path(seed))
}

/// Builds fBm paths `W_{1-α/2}` on `t = 0, 1, …, n` from the same innovations
/// `ξ_{-M}, …, ξ_{n-1}` that drive the linear process:
///
/// `W(t) = c · Σ_{k=-M}^{t-1} [(t-k)^d - (-k)_+^d] ξ_k`, `d = (1-α)/2`,
///
/// a lattice version of the moving-average representation of fBm. The
/// constant `c` is chosen by [`CouplingNormalization`].
pub struct CoupledFbmGenerator {
    model: LinearProcessModel,
    n: usize,
    hurst: f64,
    normalization: f64,
    convolver: KernelConvolver,
}

impl CoupledFbmGenerator {
    pub fn new(model: &LinearProcessModel, n: usize) -> Result<Self> {
        Self::with_normalization(model, n, CouplingNormalization::ExactVariance)
    }

    pub fn with_normalization(model: &LinearProcessModel, n: usize, rule: CouplingNormalization) -> Result<Self> {
        if n == 0 {
            return param("coupled path length must be positive");
        }
        let m = model.truncation;
        let d = (1.0 - model.alpha) / 2.0;
        let hurst = 1.0 - model.alpha / 2.0;
        let kernel: Vec<f64> = (0..=n + m).map(|i| if i == 0 { 0.0 } else { (i as f64).powf(d) }).collect();
        let normalization = match rule {
            CouplingNormalization::ExactVariance => (n as f64).powf(hurst) / coupled_kernel_variance(n, m, d).sqrt(),
            CouplingNormalization::MandelbrotVanNess => 1.0 / (d * compute_kappa_alpha(model.alpha)?),
        };
        let convolver = KernelConvolver::new(&kernel, n + m);
        Ok(Self { model: model.clone(), n, hurst, normalization, convolver })
    }

    pub fn hurst(&self) -> f64 {
        self.hurst
    }

    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    pub fn generate_from(&self, innovations: &dyn InnovationSource) -> Result<FbmPath> {
        let m = self.model.truncation;
        let xi = innovations.block(-(m as i64), self.n + m)?;
        let conv = self.convolver.convolve(&xi);
        let base = conv[m];
        let values = (0..=self.n).map(|t| self.normalization * (conv[t + m] - base)).collect::<Vec<_>>();
        let mut values = values;
        values[0] = 0.0;
        Ok(FbmPath { hurst: self.hurst, step: 1.0, values, method: FbmMethod::Coupled, coupling_ref: None })
    }

    pub fn generate(&self, innovations: &InnovationStream) -> Result<FbmPath> {
        let mut path = self.generate_from(innovations)?;
        path.coupling_ref = Some(CouplingRef {
            seed: innovations.seed,
            stream_id: innovations.stream_id,
            alpha: self.model.alpha,
            truncation: self.model.truncation,
        });
        Ok(path)
    }
}

/// `Σ_k K_n(k)²` for the unnormalized coupled kernel at time `n`.
pub fn coupled_kernel_variance(n: usize, truncation: usize, d: f64) -> f64 {
    let nf = n as f64;
    let future: f64 = (1..=n).rev().map(|i| (i as f64).powf(2.0 * d)).sum();
    let past: f64 = (1..=truncation)
        .rev()
        .map(|j| {
            let j = j as f64;
            ((nf + j).powf(d) - j.powf(d)).powi(2)
        })
        .sum();
    future + past
}

/// Coupled fBm path for `t = 0..=n` from the stream that drives `model`.
pub fn generate_coupled(model: &LinearProcessModel, innovations: &InnovationStream, n: usize) -> Result<FbmPath> {
    CoupledFbmGenerator::new(model, n)?.generate(innovations)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauss_lrd::{make_model, InnovationBlock};

    #[test]
    fn covariance_values() {
        for h in [0.55, 0.7, 0.9] {
            assert!((fbm_covariance(h, 1.0, 1.0) - 1.0).abs() < 1e-15);
        }
        assert!((fbm_covariance(0.5, 2.0, 3.0) - 2.0).abs() < 1e-14);
        assert!((fbm_covariance(0.8, 1.0, 2.0) - 2f64.powf(0.6)).abs() < 1e-14);
        assert!((fbm_covariance(0.8, 1.0, 2.0) - 1.515717).abs() < 1e-6);
        assert_eq!(fbm_covariance(0.73, 1.3, 4.1), fbm_covariance(0.73, 4.1, 1.3));
        assert!((fgn_autocovariance(0.75, 1, 1.0) - 0.414214).abs() < 1e-6);
    }

    #[test]
    fn argument_checks() {
        assert!(generate_exact(0.7, 10, 0.0, 1).is_err());
        assert!(generate_exact(0.7, 0, 1.0, 1).is_err());
        assert!(generate_exact(1.0, 10, 1.0, 1).is_err());
        assert!(FgnSampler::cholesky(0.7, CHOLESKY_MAX_STEPS + 1, 1.0).is_err());
    }

    #[test]
    fn path_starts_at_zero_and_is_seeded() {
        let a = generate_exact(0.7, 100, 0.5, 9).unwrap();
        let b = generate_exact(0.7, 100, 0.5, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.values[0], 0.0);
        assert_eq!(a.values.len(), 101);
        assert_eq!(a.method, FbmMethod::Circulant);
        assert_ne!(a.values, generate_exact(0.7, 100, 0.5, 10).unwrap().values);
    }

    #[test]
    fn cholesky_reproduces_covariance_factor() {
        // With unit innovations at a single position, the sequential
        // generator returns a column of the lower Cholesky factor L, and
        // L Lᵀ must equal the Toeplitz covariance.
        let h = 0.8;
        let n = 12;
        let sampler = FgnSampler::cholesky(h, n, 1.0).unwrap();
        let (coefficients, sd) = match &sampler {
            FgnSampler::Cholesky { coefficients, innovation_sd, .. } => (coefficients, innovation_sd),
            _ => unreachable!(),
        };
        let mut l = vec![vec![0.0; n]; n];
        for col in 0..n {
            let mut x = vec![0.0; n];
            for t in 0..n {
                let z = if t == col { 1.0 } else { 0.0 };
                let mean: f64 = coefficients[t].iter().enumerate().map(|(j, p)| p * x[t - 1 - j]).sum();
                x[t] = mean + sd[t] * z;
            }
            for t in 0..n {
                l[t][col] = x[t];
            }
        }
        for i in 0..n {
            for j in 0..n {
                let v: f64 = (0..n).map(|k| l[i][k] * l[j][k]).sum();
                let want = fgn_autocovariance(h, (i as i64 - j as i64).unsigned_abs() as usize, 1.0);
                assert!((v - want).abs() < 1e-12, "({i},{j})");
            }
        }
    }

    #[test]
    fn circulant_eigenvalues_nonnegative_for_persistent_noise() {
        for h in [0.55, 0.75, 0.95] {
            for n in [1usize, 7, 512, 5000] {
                assert!(FgnSampler::circulant(h, n, 1.0).unwrap().is_some(), "H={h} n={n}");
            }
        }
    }

    #[test]
    fn brownian_increments_uncorrelated() {
        let path = generate_exact(0.5, 100_000, 1.0, 3).unwrap();
        let inc: Vec<f64> = path.values.windows(2).map(|w| w[1] - w[0]).collect();
        let n = inc.len() as f64;
        let lag1 = inc.windows(2).map(|w| w[0] * w[1]).sum::<f64>() / (n - 1.0);
        assert!(lag1.abs() < 4.0 / n.sqrt(), "{lag1}");
        let var = inc.iter().map(|x| x * x).sum::<f64>() / n;
        assert!((var - 1.0).abs() < 4.0 * (2.0 / n).sqrt());
    }

    #[test]
    fn persistent_lag_one_covariance() {
        let path = generate_exact(0.75, 100_000, 1.0, 11).unwrap();
        let inc: Vec<f64> = path.values.windows(2).map(|w| w[1] - w[0]).collect();
        let n = inc.len() as f64;
        let prods: Vec<f64> = inc.windows(2).map(|w| w[0] * w[1]).collect();
        let mean = prods.iter().sum::<f64>() / prods.len() as f64;
        // Products of long-memory increments are themselves dependent; widen
        // the i.i.d. standard error.
        let se = (prods.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / prods.len() as f64 / n).sqrt();
        let want = 0.5 * (2f64.powf(1.5) - 2.0);
        assert!((mean - want).abs() < 3.0 * se * 3.0, "{mean} vs {want}");
    }

    #[test]
    fn coupled_variance_calibrated() {
        let model = make_model(0.4, 300).unwrap();
        let n = 200;
        let gen = CoupledFbmGenerator::new(&model, n).unwrap();
        // Kernel weights of W(n) recovered through unit impulses.
        let m = model.truncation as i64;
        let mut var = 0.0;
        for k in -m..n as i64 {
            let mut v = vec![0.0; n + model.truncation];
            v[(k + m) as usize] = 1.0;
            let path = gen.generate_from(&InnovationBlock { start: -m, values: v }).unwrap();
            var += path.values[n].powi(2);
        }
        let want = (n as f64).powf(2.0 * gen.hurst());
        assert!(((var - want) / want).abs() < 1e-8, "{var} vs {want}");
    }

    #[test]
    fn coupled_matches_direct_kernel_sum() {
        let model = make_model(0.3, 50).unwrap();
        let stream = InnovationStream::new(5, 2);
        let n = 40;
        let path = generate_coupled(&model, &stream, n).unwrap();
        let d = 0.35;
        let xi = stream.block(-50, n + 50).unwrap();
        let c = (n as f64).powf(1.0 - 0.15) / coupled_kernel_variance(n, 50, d).sqrt();
        for t in 0..=n {
            let mut acc = 0.0;
            for k in -50i64..t as i64 {
                let past = if k < 0 { ((-k) as f64).powf(d) } else { 0.0 };
                acc += (((t as i64 - k) as f64).powf(d) - past) * xi[(k + 50) as usize];
            }
            assert!((path.values[t] - c * acc).abs() < 1e-9, "t={t}");
        }
        assert_eq!(path.values[0], 0.0);
        assert_eq!(path.method, FbmMethod::Coupled);
        assert_eq!(path.coupling_ref.unwrap().seed, 5);
        assert_eq!(path, generate_coupled(&model, &stream, n).unwrap());
    }

    #[test]
    fn mandelbrot_van_ness_constant() {
        // C_H² = ∫_0^∞ ((1+s)^d - s^d)² ds + 1/(2H) against d²κ², the tail
        // beyond 1e6 integrated from its leading term d² s^{2d-2}.
        for alpha in [0.2, 0.4, 0.7] {
            let d = (1.0f64 - alpha) / 2.0;
            let h = 1.0 - alpha / 2.0;
            let f = |s: f64| if s == 0.0 { 1.0 } else { (s.powf(d) * (d * (1.0 / s).ln_1p()).exp_m1()).powi(2) };
            let mut body = crate::quad::integrate(f, 0.0, 1.0, 1e-14, 1e-13).unwrap();
            let mut a = 1.0;
            while a < 1e6 {
                body += crate::quad::integrate(f, a, a * 10.0, 1e-14, 1e-13).unwrap();
                a *= 10.0;
            }
            let tail = d * d * 1e6f64.powf(2.0 * d - 1.0) / (1.0 - 2.0 * d);
            let ch2 = body + tail + 1.0 / (2.0 * h);
            let kappa = compute_kappa_alpha(alpha).unwrap();
            assert!((ch2 / (d * d * kappa * kappa) - 1.0).abs() < 1e-6, "alpha={alpha}: {ch2}");
        }
        let model = make_model(0.4, 100).unwrap();
        let g = CoupledFbmGenerator::with_normalization(&model, 50, CouplingNormalization::MandelbrotVanNess).unwrap();
        assert!((g.normalization() - 1.0 / (0.3 * compute_kappa_alpha(0.4).unwrap())).abs() < 1e-15);
    }

    #[test]
    fn coupled_rejects_short_innovations() {
        let model = make_model(0.3, 10).unwrap();
        let gen = CoupledFbmGenerator::new(&model, 20).unwrap();
        let short = InnovationBlock::constant(-5, 25, 0.0);
        assert!(matches!(gen.generate_from(&short), Err(LabError::Parameter(_))));
    }

    #[test]
    fn interpolation() {
        let p = FbmPath { hurst: 0.7, step: 1.0, values: vec![0.0, 2.0, -2.0], method: FbmMethod::Coupled, coupling_ref: None };
        assert_eq!(p.interpolate(0.5), 1.0);
        assert_eq!(p.interpolate(1.25), 1.0);
        assert_eq!(p.interpolate(2.0), -2.0);
        assert_eq!(p.interpolate(7.0), -2.0);
    }
}
