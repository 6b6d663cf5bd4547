//! Partial sums of a subordinated sequence and the processes built on them:
//! `S`, the counting inverse `N`, `Q`, the integrated `Z`, the rescaled
//! Bahadur–Kiefer and Vervaat processes, and the decomposition of `Z`
//! through `A(t)`.
//!
//! `S` is a right-continuous step function with jumps at integers, so every
//! integral here is a finite sum of exact cell contributions.

use serde::{Deserialize, Serialize};

use crate::error::{param, LabError, Result};
use crate::gauss_lrd::LrdGaussianPath;
use crate::hermite::HermiteExpansion;
use crate::subordinator::Subordinator;

/// Innovations and model a series was generated from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesSource {
    pub seed: u64,
    pub stream_id: u64,
    pub alpha: f64,
    pub truncation: usize,
}

/// `Y_1..Y_n` with `y[i - 1] = Y_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubordinatedSeries {
    pub y: Vec<f64>,
    pub mu: f64,
    pub expansion: HermiteExpansion,
    pub nonnegative: bool,
    pub source: Option<SeriesSource>,
}

impl SubordinatedSeries {
    /// `Y_i = G(η̃_{i-1})`: the `i`-th summand uses innovations up to index `i - 1`.
    pub fn from_path(
        path: &LrdGaussianPath,
        sub: &Subordinator,
        expansion: &HermiteExpansion,
        source: Option<SeriesSource>,
    ) -> Result<Self> {
        let y: Vec<f64> = path.values.iter().map(|&x| sub.eval(x)).collect();
        if let Some(bad) = y.iter().find(|v| !v.is_finite()) {
            return Err(LabError::Data(format!("subordinated value {bad} is not finite")));
        }
        let nonnegative = sub.kind.is_nonnegative();
        if nonnegative && y.iter().any(|&v| v < 0.0) {
            return Err(LabError::Data("nonnegative subordinator produced a negative value".into()));
        }
        Ok(Self { y, mu: sub.exact_mean(), expansion: expansion.clone(), nonnegative, source })
    }

    /// A series from raw values, e.g. a deterministic test double.
    pub fn from_values(y: Vec<f64>, mu: f64) -> Result<Self> {
        if y.is_empty() {
            return param("series must contain at least one value");
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(LabError::Data("series contains non-finite values".into()));
        }
        let nonnegative = y.iter().all(|&v| v >= 0.0);
        let expansion = HermiteExpansion::from_coefficients(Vec::new(), 0.0);
        Ok(Self { y, mu, expansion, nonnegative, source: None })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

/// Terms of `Z(t) = ½(S(t) - μt)² + A(t) - ½Q(t)²`, each computed separately.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityDecomposition {
    pub lhs: f64,
    pub sq_term: f64,
    pub a_term: f64,
    pub q_term: f64,
    pub residual: f64,
}

impl IdentityDecomposition {
    /// `|residual| / max(1, |lhs|)`.
    pub fn relative_residual(&self) -> f64 {
        self.residual.abs() / self.lhs.abs().max(1.0)
    }
}

/// Processes built from one series, evaluated exactly on `[0, horizon]`.
#[derive(Debug, Clone)]
pub struct ProcessBundle {
    pub series: SubordinatedSeries,
    pub horizon: f64,
    /// `n` in the rescaled processes `R_n*` and `V_n`.
    pub n_scale: usize,
    pub alpha: f64,
    /// `cs[k] = S(k)`, `k = 0..=n`.
    cs: Vec<f64>,
    /// `cc[k] = Σ_{i<k} cs[i]`, `k = 0..=n+1`.
    cc: Vec<f64>,
}

impl ProcessBundle {
    pub fn new(series: SubordinatedSeries, horizon: f64, n_scale: usize, alpha: f64) -> Result<Self> {
        let n = series.len();
        if !(horizon >= 0.0 && horizon <= n as f64) {
            return param(format!("horizon {horizon} outside [0, {n}]"));
        }
        if n_scale == 0 {
            return param("n_scale must be positive");
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return param(format!("alpha must lie in (0, 1), got {alpha}"));
        }
        let mut cs = Vec::with_capacity(n + 1);
        let mut acc = 0.0;
        cs.push(0.0);
        for &v in &series.y {
            acc += v;
            cs.push(acc);
        }
        let mut cc = Vec::with_capacity(n + 2);
        let mut acc = 0.0;
        cc.push(0.0);
        for &v in &cs {
            acc += v;
            cc.push(acc);
        }
        Ok(Self { series, horizon, n_scale, alpha, cs, cc })
    }

    pub fn mu(&self) -> f64 {
        self.series.mu
    }

    pub fn len(&self) -> usize {
        self.series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }

    /// `S(0), S(1), …, S(n)`.
    pub fn cumulative_sums(&self) -> &[f64] {
        &self.cs
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if t >= 0.0 && t <= self.len() as f64 {
            Ok(())
        } else {
            param(format!("time {t} outside [0, {}]", self.len()))
        }
    }

    /// `S(t) = Σ_{i ≤ ⌊t⌋} Y_i`.
    pub fn partial_sum(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        Ok(self.cs[t.floor() as usize])
    }

    /// `N(x) = min{s ≥ 1 : S(s) > x}`.
    pub fn counting(&self, x: f64) -> Result<usize> {
        if !self.series.nonnegative {
            return Err(LabError::Data("counting process requires a nonnegative series".into()));
        }
        let total = self.cs[self.len()];
        if !(x < total) {
            return Err(LabError::Horizon { level: x, total });
        }
        Ok(1 + self.cs[1..].partition_point(|&v| v <= x))
    }

    /// `Q(t) = S(t) + μN(μt) - 2μt`.
    pub fn q_process(&self, t: f64) -> Result<f64> {
        let mu = self.mu();
        Ok(self.partial_sum(t)? + mu * self.counting(mu * t)? as f64 - 2.0 * mu * t)
    }

    /// `∫_0^t S(s) ds`.
    pub fn integral_s(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        let k = t.floor() as usize;
        Ok(self.cc[k] + (t - k as f64) * self.cs[k])
    }

    /// `∫_0^x N(u) du = N(x)·x - Σ_{k < N(x)} S(k)`.
    pub fn integral_n(&self, x: f64) -> Result<f64> {
        if x < 0.0 {
            return param(format!("level {x} must be nonnegative"));
        }
        let j = self.counting(x)?;
        Ok(j as f64 * x - self.cc[j])
    }

    /// `Z(t) = μ ∫_0^t Q(s) ds = μ(∫_0^t S + ∫_0^{μt} N - μt²)`.
    pub fn z_process(&self, t: f64) -> Result<f64> {
        let mu = self.mu();
        Ok(mu * (self.integral_s(t)? + self.integral_n(mu * t)? - mu * t * t))
    }

    /// `A(t) = μ ∫_{N(μt)}^t (S(s) - μs - (S(t) - μt)) ds` with the signed
    /// convention for `N(μt) > t`, summed cell by cell.
    pub fn a_term(&self, t: f64) -> Result<f64> {
        let mu = self.mu();
        let lower = self.counting(mu * t)? as f64;
        let level = self.partial_sum(t)? - mu * t;
        self.check_time(lower)?;
        let (lo, hi, sign) = if lower <= t { (lower, t, 1.0) } else { (t, lower, -1.0) };
        let mut integral = 0.0;
        let mut a = lo;
        while a < hi {
            let k = a.floor();
            let b = (k + 1.0).min(hi);
            integral += self.cs[k as usize] * (b - a) - 0.5 * mu * (b * b - a * a);
            a = b;
        }
        Ok(sign * mu * (integral - level * (hi - lo)))
    }

    pub fn vervaat_identity_decomposition(&self, t: f64) -> Result<IdentityDecomposition> {
        let mu = self.mu();
        let lhs = self.z_process(t)?;
        let sq_term = 0.5 * (self.partial_sum(t)? - mu * t).powi(2);
        let a_term = self.a_term(t)?;
        let q_term = 0.5 * self.q_process(t)?.powi(2);
        let residual = lhs - (sq_term + a_term - q_term);
        Ok(IdentityDecomposition { lhs, sq_term, a_term, q_term, residual })
    }

    /// `R_n*(s) = Q(ns) / n^{1-α/2}`.
    pub fn bahadur_kiefer_star(&self, s: f64) -> Result<f64> {
        let n = self.n_scale as f64;
        Ok(self.q_process(n * s)? / n.powf(1.0 - self.alpha / 2.0))
    }

    /// `V_n(t) = Z(nt) / (μ n^{2-α})`.
    pub fn vervaat(&self, t: f64) -> Result<f64> {
        let n = self.n_scale as f64;
        Ok(self.z_process(n * t)? / (self.mu() * n.powf(2.0 - self.alpha)))
    }

    /// Sorted points of `[0, t_max]` where `S(·)` or `N(μ·)` can jump: the
    /// integers and the levels `S(j)/μ`. Between consecutive points both are
    /// constant.
    pub fn breakpoints(&self, t_max: f64) -> Result<Vec<f64>> {
        self.check_time(t_max)?;
        let mu = self.mu();
        if !(mu > 0.0) {
            return param("breakpoints require a positive mean");
        }
        let whole = t_max.floor() as usize;
        let mut pts: Vec<f64> = (0..=whole).map(|k| k as f64).collect();
        pts.extend(self.cs.iter().map(|&s| s / mu).filter(|&x| x > 0.0 && x < t_max));
        pts.push(t_max);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        Ok(pts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::integrate;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ones(n: usize) -> ProcessBundle {
        let s = SubordinatedSeries::from_values(vec![1.0; n], 1.0).unwrap();
        ProcessBundle::new(s, n as f64, n, 0.5).unwrap()
    }

    fn random_positive(n: usize, seed: u64) -> ProcessBundle {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
        let s = SubordinatedSeries::from_values(y, 1.0).unwrap();
        ProcessBundle::new(s, n as f64, n, 0.4).unwrap()
    }

    #[test]
    fn partial_sum_examples() {
        let b = ones(10);
        assert_eq!(b.partial_sum(2.5).unwrap(), 2.0);
        assert_eq!(b.partial_sum(0.99).unwrap(), 0.0);
        assert!(b.partial_sum(10.5).is_err());
        assert!(b.partial_sum(-0.1).is_err());
        let r = random_positive(50, 1);
        let fold = r.series.y.iter().fold(0.0, |a, v| a + v);
        assert_eq!(r.partial_sum(50.0).unwrap(), fold);
    }

    #[test]
    fn counting_examples() {
        let b = ones(10);
        assert_eq!(b.counting(2.5).unwrap(), 3);
        assert_eq!(b.counting(0.0).unwrap(), 1);
        assert_eq!(b.counting(2.0).unwrap(), 3);
        assert!(matches!(b.counting(10.0), Err(LabError::Horizon { .. })));
        let signed = SubordinatedSeries::from_values(vec![1.0, -1.0, 2.0], 1.0).unwrap();
        let sb = ProcessBundle::new(signed, 3.0, 3, 0.5).unwrap();
        assert!(matches!(sb.counting(0.5), Err(LabError::Data(_))));
    }

    #[test]
    fn counting_matches_linear_scan() {
        let b = random_positive(200, 2);
        let cs = b.cumulative_sums();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let x = rng.random::<f64>() * cs[200] * 0.999;
            let scan = (1..=200).find(|&s| cs[s] > x).unwrap();
            assert_eq!(b.counting(x).unwrap(), scan);
        }
    }

    #[test]
    fn counting_with_zero_summands() {
        let s = SubordinatedSeries::from_values(vec![0.0, 2.0, 0.0, 0.0, 1.0], 0.6).unwrap();
        let b = ProcessBundle::new(s, 5.0, 5, 0.5).unwrap();
        assert_eq!(b.counting(0.0).unwrap(), 2);
        assert_eq!(b.counting(1.9).unwrap(), 2);
        assert_eq!(b.counting(2.0).unwrap(), 5);
        let direct: f64 = 1.0 * 0.0 + 2.0 * 2.0 + 5.0 * 0.5;
        assert!((b.integral_n(2.5).unwrap() - direct).abs() < 1e-14);
    }

    #[test]
    fn q_examples() {
        let b = ones(10);
        assert_eq!(b.q_process(2.5).unwrap(), 0.0);
        assert_eq!(b.q_process(2.25).unwrap(), 0.5);
    }

    #[test]
    fn q_matches_independent_parts() {
        let b = random_positive(100, 4);
        let cs = b.cumulative_sums().to_vec();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let t = rng.random::<f64>() * 90.0;
            let s = cs[t.floor() as usize];
            let n = (1..=100).find(|&k| cs[k] > t).unwrap() as f64;
            assert_eq!(b.q_process(t).unwrap(), s + n - 2.0 * t);
        }
    }

    #[test]
    fn z_examples() {
        let b = ones(10);
        for k in 0..10 {
            assert!(b.z_process(k as f64).unwrap().abs() < 1e-14);
        }
        assert!((b.z_process(0.5).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn z_matches_quadrature_of_q() {
        let b = random_positive(40, 6);
        let pts = b.breakpoints(30.0).unwrap();
        for &t in &[0.3, 7.77, 18.2, 29.9] {
            let mut oracle = 0.0;
            for w in pts.windows(2) {
                let (a, c) = (w[0].min(t), w[1].min(t));
                if c > a {
                    oracle += integrate(|s| b.q_process(s).unwrap(), a, c, 1e-13, 1e-13).unwrap();
                }
            }
            let z = b.z_process(t).unwrap();
            assert!((z - b.mu() * oracle).abs() < 1e-9, "t={t}: {z} vs {oracle}");
        }
    }

    #[test]
    fn bk_star_and_vervaat() {
        let s = SubordinatedSeries::from_values(vec![1.0; 80], 1.0).unwrap();
        let b = ProcessBundle::new(s, 80.0, 64, 0.5).unwrap();
        let bound = 64f64.powf(0.25 - 1.0);
        for k in 0..=64 {
            let s = k as f64 / 64.0;
            assert!(b.bahadur_kiefer_star(s).unwrap().abs() <= bound + 1e-15);
        }
        assert!(b.vervaat(1.0).unwrap().abs() < 1e-14);
        assert_eq!(b.vervaat(0.0).unwrap(), 0.0);

        let r = random_positive(100, 7);
        let n = 100f64;
        let s = 0.43;
        let direct = (r.partial_sum(n * s).unwrap() + r.counting(n * s).unwrap() as f64 - 2.0 * n * s) / n.powf(0.8);
        assert!((r.bahadur_kiefer_star(s).unwrap() - direct).abs() < 1e-14);
    }

    #[test]
    fn vervaat_is_integral_of_bk_star() {
        let r = random_positive(100, 8);
        let n = 100f64;
        let t = 0.7;
        let pts: Vec<f64> = r.breakpoints(n * t).unwrap().iter().map(|p| p / n).collect();
        let mut oracle = 0.0;
        for w in pts.windows(2) {
            oracle += integrate(|u| r.bahadur_kiefer_star(u).unwrap(), w[0], w[1], 1e-14, 1e-13).unwrap();
        }
        let v = r.vervaat(t).unwrap();
        assert!((v - n.powf(0.2) * oracle).abs() < 1e-8, "{v} vs {}", n.powf(0.2) * oracle);
    }

    #[test]
    fn rescaling_with_n() {
        let s = random_positive(200, 9).series;
        let a = ProcessBundle::new(s.clone(), 200.0, 50, 0.4).unwrap();
        let b = ProcessBundle::new(s, 200.0, 100, 0.4).unwrap();
        let q = a.q_process(40.0).unwrap();
        assert!((a.bahadur_kiefer_star(0.8).unwrap() - q / 50f64.powf(0.8)).abs() < 1e-14);
        assert!((b.bahadur_kiefer_star(0.4).unwrap() - q / 100f64.powf(0.8)).abs() < 1e-14);
        let z = a.z_process(100.0).unwrap();
        assert!((a.vervaat(2.0).unwrap() - z / 50f64.powf(1.6)).abs() < 1e-12 * z.abs().max(1.0));
        assert!((b.vervaat(1.0).unwrap() - z / 100f64.powf(1.6)).abs() < 1e-12 * z.abs().max(1.0));
    }

    #[test]
    fn identity_for_unit_series() {
        let b = ones(20);
        for k in 0..19 {
            let d = b.vervaat_identity_decomposition(k as f64).unwrap();
            assert_eq!(d.residual, 0.0, "t={k}");
        }
        let d = b.vervaat_identity_decomposition(2.5).unwrap();
        assert!((d.lhs - 0.25).abs() < 1e-15);
        assert!((d.a_term - 0.125).abs() < 1e-15);
        assert!(d.residual.abs() < 1e-15);
    }

    #[test]
    fn identity_before_first_jump() {
        let s = SubordinatedSeries::from_values(vec![0.7, 1.1, 1.4, 0.9], 1.0).unwrap();
        let b = ProcessBundle::new(s, 4.0, 4, 0.5).unwrap();
        let t = 0.4;
        assert_eq!(b.partial_sum(t).unwrap(), 0.0);
        assert_eq!(b.counting(t).unwrap(), 1);
        let d = b.vervaat_identity_decomposition(t).unwrap();
        // A(t) = -∫_t^1 (0 - s + t) ds by hand.
        let a_hand = -((0.5 * (1.0 - t * t)) * -1.0 + t * (1.0 - t));
        assert!((d.a_term - a_hand).abs() < 1e-15);
        assert!(d.relative_residual() < 1e-12);
    }

    #[test]
    fn identity_random_positive() {
        for seed in 0..5 {
            let b = random_positive(100, 100 + seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..50 {
                let t = rng.random::<f64>() * 90.0;
                let d = b.vervaat_identity_decomposition(t).unwrap();
                assert!(d.relative_residual() < 1e-9, "t={t}: {d:?}");
            }
        }
    }

    #[test]
    fn breakpoints_cover_jumps() {
        let b = random_positive(30, 10);
        let pts = b.breakpoints(20.0).unwrap();
        assert_eq!(pts[0], 0.0);
        assert_eq!(*pts.last().unwrap(), 20.0);
        assert!(pts.windows(2).all(|w| w[0] < w[1]));
        for w in pts.windows(2) {
            let m = 0.5 * (w[0] + w[1]);
            let e = 0.25 * (w[1] - w[0]);
            assert_eq!(b.counting(m - e).unwrap(), b.counting(m + e).unwrap());
            assert_eq!(b.partial_sum(m - e).unwrap(), b.partial_sum(m + e).unwrap());
        }
    }
}
