//! Probabilists' Hermite polynomials, Gauss–Hermite quadrature under the
//! standard normal weight, Hermite coefficients `J_q = E[G(η) H_q(η)]`, and the
//! memory constants `b_α`, `κ_α` with the associated scalings.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{param, LabError, Result};
use crate::normal;
use crate::quad::integrate;
use crate::subordinator::Subordinator;

/// Largest order accepted by [`hermite_eval`].
pub const MAX_HERMITE_ORDER: usize = 60;

/// Coefficients below this multiple of `(E G²)^{1/2}` count as zero for rank detection.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Node doubling stops once no coefficient moves by more than this.
pub const COEFFICIENT_TOLERANCE: f64 = 1e-8;

const MAX_NODES: usize = 2048;

/// `H_q(x)` via `H_{q+1} = x H_q - q H_{q-1}`.
pub fn hermite_eval(q: usize, x: f64) -> Result<f64> {
    if q > MAX_HERMITE_ORDER {
        return param(format!("Hermite order {q} exceeds {MAX_HERMITE_ORDER}"));
    }
    Ok(hermite_unchecked(q, x))
}

fn hermite_unchecked(q: usize, x: f64) -> f64 {
    let mut prev = 1.0;
    if q == 0 {
        return prev;
    }
    let mut cur = x;
    for k in 1..q {
        let next = x * cur - k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Fills `out[q] = H_q(x)` for `q = 0..out.len()`.
fn hermite_all(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = x;
    }
    for k in 2..out.len() {
        out[k] = x * out[k - 1] - (k - 1) as f64 * out[k - 2];
    }
}

/// Gauss–Hermite rule for `E f(η)`, `η ~ N(0, 1)`.
///
/// Classical nodes for the weight `e^{-x²}` are scaled by `√2` and the weights
/// by `1/√π`, so the weights sum to one.
#[derive(Debug, Clone)]
pub struct NormalQuadrature {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl NormalQuadrature {
    /// Shared, lazily built rule with `n` nodes.
    pub fn cached(n: usize) -> Result<Arc<Self>> {
        static RULES: OnceLock<Mutex<HashMap<usize, Arc<NormalQuadrature>>>> = OnceLock::new();
        let cache = RULES.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(rule) = cache.lock().expect("rule cache poisoned").get(&n) {
            return Ok(Arc::clone(rule));
        }
        let rule = Arc::new(Self::new(n)?);
        cache.lock().expect("rule cache poisoned").insert(n, Arc::clone(&rule));
        Ok(rule)
    }

    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return param("quadrature needs at least one node");
        }
        let (x, w) = physicists_rule(n)?;
        let s2 = std::f64::consts::SQRT_2;
        let inv_sqrt_pi = 1.0 / std::f64::consts::PI.sqrt();
        Ok(Self {
            nodes: x.iter().map(|v| v * s2).collect(),
            weights: w.iter().map(|v| v * inv_sqrt_pi).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `Σ w_i f(x_i)`; terms with vanishing weight are skipped so that
    /// overflow in `f` far out in the tails cannot poison the sum.
    pub fn expect<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .filter(|(_, &w)| w > 0.0)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

// Zeros of the orthonormal Hermite polynomial for the weight e^{-x²}: a scan
// with step below the smallest zero spacing (about π/√(2n+1)) brackets every
// positive zero, then safeguarded Newton polishes it. Recurrence values carry
// a separate log scale so large rules neither overflow nor underflow.
fn physicists_rule(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let nf = n as f64;
    let upper = (2.0 * nf + 1.0).sqrt() + 1.0;
    let step = 0.3 * std::f64::consts::PI / (2.0 * nf + 1.0).sqrt();
    let value = |z: f64| scaled_orthonormal(n, z).0;

    let mut positive = Vec::with_capacity(n / 2);
    let mut a = step * 0.5;
    let mut fa = value(a);
    while a < upper {
        let b = a + step;
        let fb = value(b);
        if fa == 0.0 {
            positive.push(a);
        } else if fa.signum() != fb.signum() {
            positive.push(polish_zero(n, a, b)?);
        }
        a = b;
        fa = fb;
    }
    if positive.len() != n / 2 {
        return Err(LabError::Numerical(format!(
            "found {} of {} positive Gauss-Hermite nodes for n = {n}",
            positive.len(),
            n / 2
        )));
    }

    let weight = |z: f64| {
        // w = 1 / (n p_{n-1}(z)²) for the orthonormal polynomial p_{n-1}.
        let (_, p_nm1, log_scale) = scaled_orthonormal(n, z);
        (-2.0 * log_scale - nf.ln() - 2.0 * p_nm1.abs().ln()).exp()
    };
    let mut x = Vec::with_capacity(n);
    let mut w = Vec::with_capacity(n);
    for &z in positive.iter().rev() {
        x.push(-z);
        w.push(weight(z));
    }
    if n % 2 == 1 {
        x.push(0.0);
        w.push(weight(0.0));
    }
    for &z in &positive {
        x.push(z);
        w.push(weight(z));
    }
    Ok((x, w))
}

fn polish_zero(n: usize, mut lo: f64, mut hi: f64) -> Result<f64> {
    let nf = n as f64;
    let f_lo = scaled_orthonormal(n, lo).0;
    let mut z = 0.5 * (lo + hi);
    for _ in 0..200 {
        let (p_n, p_nm1, _) = scaled_orthonormal(n, z);
        if p_n == 0.0 {
            return Ok(z);
        }
        if p_n.signum() == f_lo.signum() {
            lo = z;
        } else {
            hi = z;
        }
        let newton = z - p_n / ((2.0 * nf).sqrt() * p_nm1);
        let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if (next - z).abs() <= 4.0 * f64::EPSILON * z.abs() || hi - lo <= 4.0 * f64::EPSILON * z.abs() {
            return Ok(next);
        }
        z = next;
    }
    Err(LabError::Numerical(format!("Gauss-Hermite node near {z} did not converge (n = {n})")))
}

// Returns (p_n, p_{n-1}, s): the orthonormal polynomial values are p·e^{s}.
fn scaled_orthonormal(n: usize, z: f64) -> (f64, f64, f64) {
    let mut log_scale = -0.25 * std::f64::consts::PI.ln();
    let mut p1 = 1.0f64;
    let mut p2 = 0.0f64;
    for j in 0..n {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
        if p1.abs() > 1e150 {
            p1 *= 1e-150;
            p2 *= 1e-150;
            log_scale += 150.0 * std::f64::consts::LN_10;
        }
    }
    (p1, p2, log_scale)
}

/// Hermite coefficients `J_1..J_Q` of a subordinating function and its rank.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HermiteExpansion {
    /// `coefficients[q - 1] = J_q`.
    pub coefficients: Vec<f64>,
    /// Smallest `q` with `|J_q|` above tolerance; `None` when every computed
    /// coefficient vanishes (constant `G`).
    pub rank: Option<usize>,
    pub q_max: usize,
}

impl HermiteExpansion {
    pub fn from_coefficients(coefficients: Vec<f64>, second_moment: f64) -> Self {
        let scale = second_moment.max(0.0).sqrt();
        let rank = coefficients
            .iter()
            .position(|j| j.abs() > RANK_TOLERANCE * scale)
            .map(|i| i + 1);
        let q_max = coefficients.len();
        Self { coefficients, rank, q_max }
    }

    /// `J_q` for `1 ≤ q ≤ q_max`.
    pub fn coefficient(&self, q: usize) -> Option<f64> {
        (q >= 1).then(|| self.coefficients.get(q - 1).copied()).flatten()
    }
}

fn coefficients_with(sub: &Subordinator, q_max: usize, rule: &NormalQuadrature) -> Vec<f64> {
    let mut acc = vec![0.0; q_max + 1];
    let mut h = vec![0.0; q_max + 1];
    for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
        if w == 0.0 {
            continue;
        }
        let g = sub.eval(x);
        hermite_all(x, &mut h);
        for q in 1..=q_max {
            acc[q] += w * g * h[q];
        }
    }
    acc.split_off(1)
}

/// `J_q = E[G(η) H_q(η)]` for `q = 1..=q_max` by Gauss–Hermite quadrature,
/// doubling the node count until every coefficient is stable to 1e-8.
pub fn hermite_coefficients(sub: &Subordinator, q_max: usize, nodes: usize) -> Result<HermiteExpansion> {
    if q_max < 1 || q_max > MAX_HERMITE_ORDER {
        return param(format!("q_max must lie in 1..={MAX_HERMITE_ORDER}, got {q_max}"));
    }
    if nodes < 64 {
        return param(format!("at least 64 quadrature nodes required, got {nodes}"));
    }
    let mut count = nodes;
    let mut prev = coefficients_with(sub, q_max, &*NormalQuadrature::cached(count)?);
    loop {
        let next_count = count * 2;
        if next_count > MAX_NODES.max(nodes * 2) {
            return Err(LabError::Numerical(format!(
                "Hermite coefficients of {} unstable at {count} nodes: last estimates {prev:?}",
                sub.description
            )));
        }
        let next = coefficients_with(sub, q_max, &*NormalQuadrature::cached(next_count)?);
        let worst = prev
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if worst.is_finite() && worst < COEFFICIENT_TOLERANCE {
            return Ok(HermiteExpansion::from_coefficients(next, sub.second_moment));
        }
        if !worst.is_finite() && next_count >= MAX_NODES {
            return Err(LabError::Numerical(format!(
                "non-finite Hermite coefficients for {}: {prev:?} then {next:?}",
                sub.description
            )));
        }
        prev = next;
        count = next_count;
    }
}

/// `E f(η)` with node doubling until successive estimates agree to `tol`
/// (absolute, or relative to the estimate when that is larger).
pub fn normal_expectation<F: Fn(f64) -> f64>(f: F, tol: f64) -> Result<f64> {
    // Adaptive Gauss–Kronrod against the density; the mass outside ±38 is
    // below the smallest positive double.
    let g = |x: f64| f(x) * normal::pdf(x);
    let cuts = [-38.0, -8.0, 0.0, 8.0, 38.0];
    let mut total = 0.0;
    for w in cuts.windows(2) {
        total += integrate(&g, w[0], w[1], tol * 1e-2, tol)?;
    }
    if !total.is_finite() {
        return Err(LabError::Numerical(format!("normal expectation is not finite: {total}")));
    }
    Ok(total)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        param(format!("alpha must lie in (0, 1), got {alpha}"))
    }
}

/// `b_α = ∫_0^∞ x^{-(1+α)/2} (1+x)^{-(1+α)/2} dx`.
///
/// The integral is split at one. On `[0, 1]` the substitution
/// `x = u^{1/(1-β)}` and on `[1, ∞)` the substitution `x = v^{-1/α}` remove
/// the endpoint singularities, leaving smooth integrands on `[0, 1]`.
pub fn compute_b_alpha(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let beta = 0.5 * (1.0 + alpha);
    let p = 1.0 / (1.0 - beta);
    let head = integrate(|u: f64| p * (1.0 + u.powf(p)).powf(-beta), 0.0, 1.0, 1e-15, 1e-14)?;
    let r = 1.0 / alpha;
    let tail = integrate(|v: f64| r * (1.0 + v.powf(r)).powf(-beta), 0.0, 1.0, 1e-15, 1e-14)?;
    Ok(head + tail)
}

/// `κ_α = (2 b_α / ((1-α)(2-α)))^{1/2}`.
pub fn compute_kappa_alpha(alpha: f64) -> Result<f64> {
    let b = compute_b_alpha(alpha)?;
    Ok((2.0 * b / ((1.0 - alpha) * (2.0 - alpha))).sqrt())
}

/// `γ = 2 - 2α` for `α < 1/2`, else `1`.
pub fn gamma_exponent(alpha: f64) -> f64 {
    if alpha < 0.5 {
        2.0 - 2.0 * alpha
    } else {
        1.0
    }
}

/// `d_{n,m} = n^{1 - mα/2}` (slowly varying factor fixed to one).
pub fn scaling_d(n: usize, m: usize, alpha: f64) -> Result<f64> {
    if n == 0 || m == 0 {
        return param("n and m must be positive");
    }
    if m as f64 * alpha >= 2.0 {
        return param(format!("m·alpha = {} must be below 2", m as f64 * alpha));
    }
    Ok((n as f64).powf(1.0 - m as f64 * alpha / 2.0))
}

/// Asymptotic `Var(Σ_{j≤n} (Y_j - μ)) ≈ (J_m²/m!) · 2/((1-mα)(2-mα)) · n^{2-mα} · L^m`.
///
/// `slowly_varying` is the constant `L`; for the linear-process model it is
/// `b_α/σ²` (see [`long_memory_constant`]).
pub fn asymptotic_variance(n: usize, m: usize, alpha: f64, j_m: f64, slowly_varying: f64) -> Result<f64> {
    if n == 0 || m == 0 {
        return param("n and m must be positive");
    }
    let ma = m as f64 * alpha;
    if !(ma > 0.0 && ma < 1.0) {
        return param(format!("m·alpha = {ma} must lie in (0, 1)"));
    }
    let m_fact: f64 = (1..=m).map(|k| k as f64).product();
    Ok(j_m * j_m / m_fact * 2.0 / ((1.0 - ma) * (2.0 - ma))
        * (n as f64).powf(2.0 - ma)
        * slowly_varying.powi(m as i32))
}

/// `L = b_α / σ²`, the covariance constant of the linear-process model.
pub fn long_memory_constant(model: &crate::gauss_lrd::LinearProcessModel) -> Result<f64> {
    Ok(compute_b_alpha(model.alpha)? / model.sigma2())
}
