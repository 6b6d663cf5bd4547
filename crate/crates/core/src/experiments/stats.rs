use serde::{Deserialize, Serialize};

use crate::error::{param, LabError, Result};

/// Kolmogorov–Smirnov distance `sup_x |F_R(x) - F(x)|`, both one-sided
/// terms evaluated at the order statistics.
pub fn ks_distance<F: Fn(f64) -> f64>(sample: &[f64], reference_cdf: F) -> Result<f64> {
    if sample.is_empty() {
        return param("KS distance needs a non-empty sample");
    }
    if sample.iter().any(|x| x.is_nan()) {
        return Err(LabError::Data("sample contains NaN".into()));
    }
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = reference_cdf(x);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    Ok(d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
}

/// Ordinary least squares of `ln error` on `ln horizon`.
pub fn fit_rate_slope(horizons: &[f64], errors: &[f64]) -> Result<SlopeFit> {
    if horizons.len() != errors.len() {
        return param("horizons and errors differ in length");
    }
    if horizons.len() < 3 {
        return param("slope fit needs at least three horizons");
    }
    if let Some(bad) = horizons.iter().find(|h| !(**h > 0.0)) {
        return Err(LabError::Data(format!("horizon {bad} is not positive")));
    }
    if let Some(bad) = errors.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
        return Err(LabError::Data(format!("error value {bad} is not positive; its log is undefined")));
    }
    let x: Vec<f64> = horizons.iter().map(|h| h.ln()).collect();
    let y: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let k = x.len() as f64;
    let mx = x.iter().sum::<f64>() / k;
    let my = y.iter().sum::<f64>() / k;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = x.iter().zip(&y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let stderr = (ssr / (k - 2.0) / sxx).sqrt();
    Ok(SlopeFit { slope, intercept, stderr })
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation (divisor `n - 1`).
pub fn std_dev(values: &[f64]) -> f64 {
    let m = mean(values);
    (values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (values.len() as f64 - 1.0)).sqrt()
}

pub fn correlation(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    sxy / (sxx * syy).sqrt()
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function, a bijection on `u64`.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replicate `r`. Distinct `r < 2^64` give distinct seeds because
/// `r ↦ base + r·GOLDEN` is injective (odd multiplier) and `mix` is a bijection.
pub fn replicate_seed(base_seed: u64, r: u64) -> u64 {
    mix(base_seed.wrapping_add(r.wrapping_mul(GOLDEN)))
}

pub fn replicate_seeds(base_seed: u64, replicates: usize) -> Vec<u64> {
    (0..replicates as u64).map(|r| replicate_seed(base_seed, r)).collect()
}
