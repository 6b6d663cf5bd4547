//! Empirical distribution and quantile functions of `U_j = F(Y_j)`, the
//! uniform Bahadur–Kiefer process and its integrated (Vervaat) form, and the
//! Hermite coefficients `c_q(x)` of the indicator class.

use crate::error::{param, LabError, Result};
use crate::hermite::hermite_eval;
use crate::normal;
use crate::processes::SubordinatedSeries;
use crate::quad::integrate;
use crate::subordinator::{Subordinator, SubordinatorKind};

/// Sorted uniforms `u_(1) ≤ … ≤ u_(n)` with the scaling `d` used by the
/// Bahadur–Kiefer processes.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalPair {
    sorted: Vec<f64>,
    /// `prefix[k] = u_(1) + … + u_(k)`.
    prefix: Vec<f64>,
    pub scaling: f64,
}

impl EmpiricalPair {
    pub fn from_uniforms(mut u: Vec<f64>, scaling: f64) -> Result<Self> {
        if u.is_empty() {
            return param("empirical pair needs at least one observation");
        }
        if !(scaling > 0.0 && scaling.is_finite()) {
            return param(format!("scaling must be positive, got {scaling}"));
        }
        if let Some(bad) = u.iter().find(|v| !(**v >= 0.0 && **v <= 1.0)) {
            return Err(LabError::Data(format!("uniform value {bad} outside [0, 1]")));
        }
        u.sort_by(f64::total_cmp);
        let mut prefix = Vec::with_capacity(u.len() + 1);
        let mut acc = 0.0;
        prefix.push(0.0);
        for &v in &u {
            acc += v;
            prefix.push(acc);
        }
        Ok(Self { sorted: u, prefix, scaling })
    }

    pub fn n(&self) -> usize {
        self.sorted.len()
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    fn factor(&self) -> f64 {
        self.n() as f64 / self.scaling
    }

    fn count_le(&self, t: f64) -> usize {
        self.sorted.partition_point(|&v| v <= t)
    }

    /// Right-continuous `F_n(t) = #{j : U_j ≤ t} / n`.
    pub fn cdf(&self, t: f64) -> f64 {
        self.count_le(t) as f64 / self.n() as f64
    }

    /// Left-continuous `F_n^{-1}(t) = inf{x : F_n(x) ≥ t}`; `F_n^{-1}(0) = 0`.
    pub fn quantile(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let k = self.rank_index(t);
        self.sorted[k - 1]
    }

    /// Smallest `k` in `1..=n` with `k/n ≥ t`: `⌈nt⌉` corrected for the
    /// rounding of `n·t` near `t = k/n`.
    fn rank_index(&self, t: f64) -> usize {
        let n = self.n();
        let mut k = ((n as f64 * t).ceil() as usize).clamp(1, n);
        while k > 1 && (k - 1) as f64 / n as f64 >= t {
            k -= 1;
        }
        while k < n && (k as f64 / n as f64) < t {
            k += 1;
        }
        k
    }

    /// `α_n(t) = (n/d)(F_n(t) - t)`.
    pub fn bk_alpha(&self, t: f64) -> f64 {
        self.factor() * (self.cdf(t) - t)
    }

    /// `β_n(t) = (n/d)(F_n^{-1}(t) - t)`.
    pub fn bk_beta(&self, t: f64) -> f64 {
        self.factor() * (self.quantile(t) - t)
    }

    /// `R_n(t) = α_n(t) + β_n(t)`.
    pub fn bk_process(&self, t: f64) -> f64 {
        self.bk_alpha(t) + self.bk_beta(t)
    }

    /// `∫_0^t F_n(u) du`.
    pub fn integral_cdf(&self, t: f64) -> f64 {
        let m = self.count_le(t);
        (m as f64 * t - self.prefix[m]) / self.n() as f64
    }

    /// `∫_0^t F_n^{-1}(u) du`; the quantile equals `u_(k)` on `((k-1)/n, k/n]`.
    pub fn integral_quantile(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let n = self.n();
        let nf = n as f64;
        let full = ((nf * t).floor() as usize).min(n);
        let mut v = self.prefix[full] / nf;
        if full < n {
            v += (t - full as f64 / nf) * self.sorted[full];
        }
        v
    }

    /// `(n/d) ∫_0^t R_n(u) du`, exact.
    pub fn vervaat_empirical(&self, t: f64) -> f64 {
        let f = self.factor();
        f * f * (self.integral_cdf(t) + self.integral_quantile(t) - t * t)
    }

    /// Every point where `F_n` or `F_n^{-1}` can jump, with `0` and `1`.
    pub fn jump_points(&self) -> Vec<f64> {
        let n = self.n();
        let mut pts: Vec<f64> = (0..=n).map(|k| k as f64 / n as f64).collect();
        pts.extend_from_slice(&self.sorted);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }
}

/// `U_j = F(Y_j)`.
pub fn build_empirical<F: Fn(f64) -> f64>(series: &SubordinatedSeries, cdf: F, scaling: f64) -> Result<EmpiricalPair> {
    let u: Vec<f64> = series.y.iter().map(|&y| cdf(y)).collect();
    if let Some(bad) = u.iter().find(|v| !v.is_finite()) {
        return Err(LabError::Data(format!("distribution function returned {bad}")));
    }
    EmpiricalPair::from_uniforms(u, scaling)
}

/// The set `{η : G(η) ≤ x}` as an interval `[lo, hi]`.
fn sublevel_interval(sub: &Subordinator, x: f64) -> Result<(f64, f64)> {
    let kind = sub.kind;
    if kind.is_strictly_increasing() {
        let a = sub.inverse(x).expect("increasing kinds invert");
        return Ok((f64::NEG_INFINITY, a));
    }
    match kind {
        SubordinatorKind::SquareMinusOne => {
            if x < -1.0 {
                Ok((0.0, 0.0))
            } else {
                let r = (x + 1.0).sqrt();
                Ok((-r, r))
            }
        }
        SubordinatorKind::Constant { value } => Ok(if value <= x {
            (f64::NEG_INFINITY, f64::INFINITY)
        } else {
            (0.0, 0.0)
        }),
        _ => param(format!("no sublevel set rule for {kind}")),
    }
}

/// Beyond this the standard normal density underflows.
const NORMAL_SUPPORT: f64 = 38.0;

/// `c_q(x) = E[(1{G(η) ≤ x} - F(x)) H_q(η)]` by adaptive quadrature over
/// `{G ≤ x}`; for `q ≥ 1` the `F(x)` term integrates to zero.
pub fn c_coefficient(sub: &Subordinator, q: usize, x: f64) -> Result<f64> {
    if q == 0 {
        return param("c_q is defined for q ≥ 1");
    }
    hermite_eval(q, 0.0)?;
    let (lo, hi) = sublevel_interval(sub, x)?;
    let lo = lo.max(-NORMAL_SUPPORT);
    let hi = hi.min(NORMAL_SUPPORT);
    if !(hi > lo) {
        return Ok(0.0);
    }
    let f = |z: f64| hermite_eval(q, z).unwrap_or(f64::NAN) * normal::pdf(z);
    let mut total = 0.0;
    let mut cuts = vec![lo];
    cuts.extend([-8.0, 0.0, 8.0].into_iter().filter(|&c| c > lo && c < hi));
    cuts.push(hi);
    for w in cuts.windows(2) {
        total += integrate(f, w[0], w[1], 1e-15, 1e-12)?;
    }
    if !total.is_finite() {
        return Err(LabError::Numerical(format!("c_{q}({x}) is not finite")));
    }
    Ok(total)
}

fn check_limit_args(alpha: f64, m: usize) -> Result<f64> {
    let ma = m as f64 * alpha;
    if m == 0 || !(ma > 0.0 && ma < 1.0) {
        return param(format!("need 0 < mα < 1, got m = {m}, α = {alpha}"));
    }
    Ok(2.0 / ((2.0 - ma) * (1.0 - ma)))
}

/// Standard deviation of the Gaussian limit of `α_n(t)` for rank one:
/// `sqrt(2/((2-mα)(1-mα))) |c_m(F^{-1}(t))|`.
pub fn limit_scale_bk(alpha: f64, m: usize, sub: &Subordinator, t: f64) -> Result<f64> {
    let k = check_limit_args(alpha, m)?;
    if !(t > 0.0 && t < 1.0) {
        return Ok(0.0);
    }
    let x = sub
        .quantile(t)
        .ok_or_else(|| LabError::Parameter(format!("{} has no quantile function", sub.description)))?;
    Ok(k.sqrt() * c_coefficient(sub, m, x)?.abs())
}

/// `c_m'(x)` by Richardson-extrapolated central differences with step `h`.
pub fn c_coefficient_derivative(sub: &Subordinator, m: usize, x: f64, h: f64) -> Result<f64> {
    let central = |h: f64| -> Result<f64> { Ok((c_coefficient(sub, m, x + h)? - c_coefficient(sub, m, x - h)?) / (2.0 * h)) };
    let coarse = central(h)?;
    let fine = central(h / 2.0)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

/// Deterministic factor in the limit of `(n/d) R_n(t)`:
/// `2/((2-mα)(1-mα)) · c_m(x) c_m'(x) / f(x)` at `x = F^{-1}(t)`.
pub fn bk_limit_factor(alpha: f64, m: usize, sub: &Subordinator, t: f64) -> Result<f64> {
    let k = check_limit_args(alpha, m)?;
    let x = sub
        .quantile(t)
        .ok_or_else(|| LabError::Parameter(format!("{} has no quantile function", sub.description)))?;
    let density = sub
        .density(x)
        .ok_or_else(|| LabError::Parameter(format!("{} has no density", sub.description)))?;
    if !(density > 0.0) {
        return Err(LabError::Numerical(format!("density vanishes at F^-1({t})")));
    }
    let c = c_coefficient(sub, m, x)?;
    let dc = c_coefficient_derivative(sub, m, x, 1e-4)?;
    Ok(k * c * dc / density)
}
