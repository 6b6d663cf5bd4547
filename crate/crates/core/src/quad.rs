//! Adaptive Gauss–Kronrod integration on finite intervals.

use crate::error::{LabError, Result};

// 15-point Kronrod abscissae and weights with the embedded 7-point Gauss rule.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Kronrod estimate, error estimate, and the roundoff level `50ε∫|f|` below
/// which the error estimate carries no information.
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut mass = fc.abs() * WGK[7];
    for j in 0..7 {
        let dx = h * XGK[j];
        let (lo, hi) = (f(c - dx), f(c + dx));
        let pair = lo + hi;
        kron += WGK[j] * pair;
        mass += WGK[j] * (lo.abs() + hi.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kron * h, ((kron - gauss) * h).abs(), 50.0 * f64::EPSILON * mass * h.abs())
}

/// Integrates `f` over `[a, b]` to absolute tolerance `abs_tol` (or relative
/// tolerance `rel_tol` of the running estimate, whichever is looser).
///
/// A reversed interval yields the negated integral.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    if b < a {
        return integrate(f, b, a, abs_tol, rel_tol).map(|v| -v);
    }
    const MAX_INTERVALS: usize = 20_000;

    let (v, e, floor) = gk15(&f, a, b);
    let mut intervals = vec![(a, b, v, e, floor)];
    let mut total = v;
    let mut err = e;
    while err > abs_tol.max(rel_tol * total.abs()) {
        if intervals.len() >= MAX_INTERVALS {
            return Err(LabError::Numerical(format!(
                "adaptive quadrature on [{a}, {b}] stalled: estimate {total}, error {err}"
            )));
        }
        let worst = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(i, _)| i)
            .unwrap();
        if intervals[worst].3 == 0.0 {
            // Every interval is exhausted; what is left of `err` is update drift.
            break;
        }
        let (lo, hi, v, e, floor) = intervals.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        if e <= floor || mid <= lo || mid >= hi {
            // Error at roundoff level, or interval cannot be split further in f64.
            intervals.push((lo, hi, v, 0.0, floor));
            err -= e;
            continue;
        }
        let (v1, e1, f1) = gk15(&f, lo, mid);
        let (v2, e2, f2) = gk15(&f, mid, hi);
        total += v1 + v2 - v;
        err += e1 + e2 - e;
        intervals.push((lo, mid, v1, e1, f1));
        intervals.push((mid, hi, v2, e2, f2));
    }
    // Re-sum to shed accumulated update error.
    Ok(intervals.iter().map(|iv| iv.2).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let v = integrate(|x| x * x * x - 2.0 * x, 0.0, 2.0, 1e-14, 0.0).unwrap();
        assert!((v - 0.0).abs() < 1e-13);
        let v = integrate(|x| x * x, 0.0, 3.0, 1e-14, 0.0).unwrap();
        assert!((v - 9.0).abs() < 1e-12);
    }

    #[test]
    fn reversed_interval_negates() {
        let a = integrate(f64::exp, 0.0, 1.0, 1e-13, 0.0).unwrap();
        let b = integrate(f64::exp, 1.0, 0.0, 1e-13, 0.0).unwrap();
        assert!((a + b).abs() < 1e-14);
        assert!((a - (1f64.exp() - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn kinked_integrand() {
        let v = integrate(|x: f64| (x - 0.3).abs(), 0.0, 1.0, 1e-12, 0.0).unwrap();
        assert!((v - (0.045 + 0.245)).abs() < 1e-11);
    }

    fn he(n: usize, x: f64) -> f64 {
        let (mut a, mut b) = (1.0, x);
        if n == 0 {
            return a;
        }
        for k in 1..n {
            (a, b) = (b, x * b - k as f64 * a);
        }
        b
    }

    #[test]
    fn cancelling_integrand_settles_at_roundoff() {
        // Hermite products on a half line have terms far larger than the result.
        let phi = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        for p in 0..=12 {
            for q in 0..=p {
                let g = |x: f64| he(p, x) * he(q, x) * phi(x);
                let cuts = [-38.0, -8.0, 0.0, 8.0, 38.0];
                let whole: f64 = cuts.windows(2).map(|w| integrate(g, w[0], w[1], 1e-14, 1e-12).unwrap()).sum();
                let expect = if p == q { (1..=q).map(|i| i as f64).product::<f64>() } else { 0.0 };
                assert!((whole - expect).abs() < 1e-8 * expect.max(1.0), "{p} {q} {whole}");
            }
        }
    }
}
