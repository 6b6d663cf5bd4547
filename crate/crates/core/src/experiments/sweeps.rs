//! Deterministic variance sweep, reduction residual, and the exact identity sweep.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::plan::{ExperimentKind, ExperimentPlan};
use super::report::{Check, ExperimentReport, SlopeRecord, Table};
use super::stats::{fit_rate_slope, median, replicate_seeds};
use super::{add_reference_exponents, map_replicates, Setup};
use crate::error::{param, Result};
use crate::gauss_lrd::{exact_partial_sum_variance, model_correlations, InnovationStream, PathGenerator};
use crate::hermite::long_memory_constant;
use crate::processes::ProcessBundle;

/// Lag at which the model correlation is compared with `L k^{-α}`.
const CORRELATION_PROBE_LAG: usize = 1 << 10;

fn require(plan: &ExperimentPlan, kind: ExperimentKind) -> Result<()> {
    if plan.kind != kind {
        return param(format!("{} cannot run as {kind}", plan.kind));
    }
    Ok(())
}

/// `Var(Σ_{j≤n} η̃_j) σ² / (κ_α² n^{2-α})` at every horizon.
pub fn run_variance_experiment(plan: &ExperimentPlan) -> Result<ExperimentReport> {
    require(plan, ExperimentKind::VarianceAsymptote)?;
    let setup = Setup::new(plan)?;
    if setup.model.truncation == 0 {
        return param("variance_asymptote needs a dependent model (truncation > 0)");
    }
    let sigma2 = setup.model.sigma2();
    let k2 = setup.kappa * setup.kappa;
    let ratios: Vec<f64> = map_replicates(&plan.horizons.iter().map(|&n| n as u64).collect::<Vec<_>>(), |_, n| {
        let n = n as usize;
        Ok(exact_partial_sum_variance(&setup.model, n)? * sigma2 / (k2 * (n as f64).powf(2.0 - plan.alpha)))
    })?;

    let mut report = ExperimentReport::new(plan, Vec::new());
    report.reference("kappa", setup.kappa);
    report.reference("sigma", setup.sigma());
    let mut table = Table::new(&["n", "ratio"]);
    for (&n, &r) in plan.horizons.iter().zip(&ratios) {
        table.push(vec![n as f64, r]);
        report.stat(&format!("ratio_{n}"), r);
    }
    report.replicates = table;

    let last = *ratios.last().expect("validated");
    report.check(Check::at_most("final_ratio_deviation", (last - 1.0).abs(), plan.tolerances.variance_band));
    let bad_steps = ratios.windows(2).filter(|w| (w[1] - 1.0).abs() >= (w[0] - 1.0).abs()).count();
    report.check(Check::at_most("steps_not_approaching_one", bad_steps as f64, 0.0));

    let lag = CORRELATION_PROBE_LAG.min(setup.model.truncation);
    let rho = model_correlations(&setup.model, lag)[lag];
    let l = long_memory_constant(&setup.model)?;
    report.stat("correlation_probe_lag", lag as f64);
    report.stat("correlation_probe_ratio", rho / (l * (lag as f64).powf(-plan.alpha)));
    report.finish();
    Ok(report)
}

/// `U(T) = max_{k ≤ T} |Σ_{j<k}(G(η̃_j) - μ) - J_1 Σ_{j<k} η̃_j|`.
pub fn run_reduction_experiment(plan: &ExperimentPlan) -> Result<ExperimentReport> {
    require(plan, ExperimentKind::ReductionResidual)?;
    let setup = Setup::new(plan)?;
    let horizons = &plan.horizons;
    let t_max = *horizons.last().expect("validated");
    let generator = PathGenerator::new(&setup.model, t_max)?;
    let seeds = replicate_seeds(plan.base_seed, plan.replicates);
    let mu = setup.mu();
    let j1 = setup.j1;

    let traces = map_replicates(&seeds, |_, seed| {
        let path = generator.generate(&InnovationStream::new(seed, 0))?;
        let (mut acc, mut raw_acc) = (0.0f64, 0.0f64);
        let (mut sup, mut raw_sup) = (0.0f64, 0.0f64);
        let mut u = Vec::with_capacity(horizons.len());
        let mut raw = Vec::with_capacity(horizons.len());
        let mut next = 0;
        for (k, &x) in path.values.iter().enumerate() {
            let centred = setup.sub.eval(x) - mu;
            acc += centred - j1 * x;
            raw_acc += centred;
            sup = sup.max(acc.abs());
            raw_sup = raw_sup.max(raw_acc.abs());
            if k + 1 == horizons[next] {
                u.push(sup);
                raw.push(raw_sup);
                next += 1;
            }
        }
        Ok((u, raw))
    })?;

    let mut report = ExperimentReport::new(plan, seeds);
    add_reference_exponents(&mut report, plan.alpha, plan.gamma());
    report.reference("j1", j1);
    report.reference("mu", mu);
    let h = plan.hurst();
    let hs: Vec<f64> = horizons.iter().map(|&t| t as f64).collect();
    let medians: Vec<f64> = (0..horizons.len()).map(|i| median(&traces.iter().map(|t| t.0[i]).collect::<Vec<_>>())).collect();
    let raw_medians: Vec<f64> =
        (0..horizons.len()).map(|i| median(&traces.iter().map(|t| t.1[i]).collect::<Vec<_>>())).collect();
    let max_u = traces.iter().flat_map(|t| t.0.iter().copied()).fold(0.0, f64::max);
    report.stat("max_residual", max_u);

    if max_u == 0.0 {
        // Exact cancellation: `G - μ = J_1 H_1`.
        report.check(Check::at_most("residual_identically_zero", max_u, 0.0));
        report.notes.push("residual vanishes identically; no slope fitted".into());
    } else {
        let fit = fit_rate_slope(&hs, &medians)?;
        report.slopes.push(SlopeRecord { name: "residual".into(), fit, medians: medians.clone() });
        report.check(Check::below("residual_slope_below_scale", fit.slope, h));
        report.diagnostic(Check::below(
            "residual_slope_within_reference",
            fit.slope,
            plan.gamma() / 2.0 + plan.tolerances.slope_margin,
        ));
    }
    if let Ok(raw_fit) = fit_rate_slope(&hs, &raw_medians) {
        report.slopes.push(SlopeRecord { name: "raw".into(), fit: raw_fit, medians: raw_medians });
    }

    let mut table = Table::new(&["replicate", "horizon", "residual", "raw"]);
    for (r, (u, raw)) in traces.iter().enumerate() {
        for (i, &t) in horizons.iter().enumerate() {
            table.push(vec![r as f64, t as f64, u[i], raw[i]]);
        }
    }
    report.replicates = table;
    report.finish();
    Ok(report)
}

/// Maximum relative residual of `Z = ½(S - μt)² + A - ½Q²` over random `t`.
pub fn run_identity_sweep(plan: &ExperimentPlan) -> Result<ExperimentReport> {
    require(plan, ExperimentKind::IdentitySweep)?;
    let setup = Setup::new(plan)?;
    let n = plan.n;
    let generator = PathGenerator::new(&setup.model, n)?;
    let seeds = replicate_seeds(plan.base_seed, plan.replicates);
    let mu = setup.mu();

    let worst = map_replicates(&seeds, |_, seed| {
        let series = setup.series(&generator, seed)?;
        let bundle = ProcessBundle::new(series, n as f64, n, plan.alpha)?;
        // `N(μt)` needs `μt < S(n)`.
        let t_hi = 0.9 * (n as f64).min(bundle.cumulative_sums()[n] / mu);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(1);
        let mut worst = 0.0f64;
        for _ in 0..plan.identity_points {
            let t = rng.random::<f64>() * t_hi;
            worst = worst.max(bundle.vervaat_identity_decomposition(t)?.relative_residual());
        }
        Ok(worst)
    })?;

    let mut report = ExperimentReport::new(plan, seeds);
    report.reference("mu", mu);
    let max = worst.iter().copied().fold(0.0, f64::max);
    report.stat("max_relative_residual", max);
    report.stat("points_per_replicate", plan.identity_points as f64);
    report.check(Check::below("max_relative_residual", max, plan.tolerances.identity));
    let mut table = Table::new(&["replicate", "max_relative_residual"]);
    for (r, &w) in worst.iter().enumerate() {
        table.push(vec![r as f64, w]);
    }
    report.replicates = table;
    report.finish();
    Ok(report)
}
