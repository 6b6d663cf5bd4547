//! Fixed-time marginals of the normalized processes against their limit laws.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::plan::{ExperimentKind, ExperimentPlan};
use super::report::{Check, ExperimentReport, Table};
use super::stats::{ks_distance, mean, replicate_seed, replicate_seeds, std_dev};
use super::{map_replicates, Setup};
use crate::empirical::{bk_limit_factor, build_empirical, limit_scale_bk};
use crate::error::{param, LabError, Result};
use crate::fbm::FgnSampler;
use crate::gauss_lrd::{exact_partial_sum_variance, PathGenerator};
use crate::hermite::long_memory_constant;
use crate::normal;

/// Salt separating the reference fBm seeds from the innovation seeds.
const REFERENCE_SALT: u64 = 0xF8B3_5C1D_0A94_6E27;

/// Grid size of the stand-alone fBm used to check the `W(1) ~ N(0, 1)` reference.
const REFERENCE_STEPS: usize = 256;

/// Report-only evaluation points are clipped into this range.
const REPORT_T_RANGE: (f64, f64) = (0.05, 0.95);

struct Draw {
    statistic: f64,
    /// `(n/d) R_n(t)` for the Bahadur–Kiefer experiment, else zero.
    bk_sum: f64,
    extensions: usize,
}

pub fn run_distribution_experiment(plan: &ExperimentPlan) -> Result<ExperimentReport> {
    if !plan.kind.is_distribution() {
        return param(format!("{} is not a distribution experiment", plan.kind));
    }
    let setup = Setup::new(plan)?;
    let n = plan.n;
    let nf = n as f64;
    let h = plan.hurst();
    let c = setup.scale();
    let mu = setup.mu();
    let seeds = replicate_seeds(plan.base_seed, plan.replicates);
    let needs_inverse = matches!(plan.kind, ExperimentKind::CountingClt | ExperimentKind::VervaatChi2);
    let base_len = if needs_inverse { 2 * n } else { n };
    let generator = PathGenerator::new(&setup.model, base_len)?;
    // Slowly varying factor of the truncated model, `L = b_α/σ²`.
    let slowly_varying = if setup.model.truncation == 0 { 1.0 } else { long_memory_constant(&setup.model)? };
    let bk_scaling = nf.powf(h) * slowly_varying.sqrt();

    let draws = map_replicates(&seeds, |_, seed| -> Result<Draw> {
        match plan.kind {
            ExperimentKind::CltMarginal => {
                let series = setup.series(&generator, seed)?;
                let s: f64 = series.y.iter().sum();
                Ok(Draw { statistic: (s - mu * nf) / (c * nf.powf(h)), bk_sum: 0.0, extensions: 0 })
            }
            ExperimentKind::CountingClt => {
                let (v, extensions) = setup.with_bundle(&generator, base_len, seed, nf, n, |b| {
                    Ok(-(mu * b.counting(mu * nf)? as f64 - mu * nf) / (c * nf.powf(h)))
                })?;
                Ok(Draw { statistic: v, bk_sum: 0.0, extensions })
            }
            ExperimentKind::VervaatChi2 => {
                let (v, extensions) =
                    setup.with_bundle(&generator, base_len, seed, nf, n, |b| Ok(2.0 * mu * b.vervaat(1.0)? / (c * c)))?;
                Ok(Draw { statistic: v, bk_sum: 0.0, extensions })
            }
            _ => {
                let series = setup.series(&generator, seed)?;
                let sub = &setup.sub;
                let pair = build_empirical(&series, |y| sub.cdf(y).unwrap_or(f64::NAN), bk_scaling)?;
                let t = plan.t_eval;
                Ok(Draw { statistic: pair.bk_alpha(t), bk_sum: pair.n() as f64 / pair.scaling * pair.bk_process(t), extensions: 0 })
            }
        }
    })?;

    let sample: Vec<f64> = draws.iter().map(|d| d.statistic).collect();
    let mut report = ExperimentReport::new(plan, seeds.clone());
    report.reference("kappa", setup.kappa);
    report.reference("sigma", setup.sigma());
    report.reference("j1", setup.j1);
    report.reference("mu", mu);
    report.reference("hurst", h);

    let ks = match plan.kind {
        ExperimentKind::VervaatChi2 => {
            let chi = ChiSquared::new(1.0).map_err(|e| LabError::Numerical(e.to_string()))?;
            ks_distance(&sample, |x| if x <= 0.0 { 0.0 } else { chi.cdf(x) })?
        }
        ExperimentKind::BkMarginal => {
            let scale = limit_scale_bk(plan.alpha, 1, &setup.sub, plan.t_eval)?;
            report.reference("limit_scale", scale);
            report.reference("slowly_varying", slowly_varying);
            if !(scale > 0.0) {
                return Err(LabError::Numerical("limit scale vanishes at t_eval".into()));
            }
            ks_distance(&sample, |x| normal::cdf(x / scale))?
        }
        _ => ks_distance(&sample, normal::cdf)?,
    };
    report.stat("ks", ks);
    report.stat("mean", mean(&sample));
    if sample.len() > 1 {
        report.stat("std_dev", std_dev(&sample));
    }
    report.stat("extensions", draws.iter().map(|d| d.extensions).sum::<usize>() as f64);
    report.check(Check::below("ks", ks, plan.tolerances.ks));
    report.notes.push("KS tolerances are pilot-calibrated conventions".into());

    if plan.kind != ExperimentKind::BkMarginal && setup.model.truncation > 0 {
        // Finite-n, finite-M variance of Σ η̃ relative to its asymptote.
        let exact = exact_partial_sum_variance(&setup.model, n)?;
        let ratio = exact * setup.sigma().powi(2) / (setup.kappa.powi(2) * nf.powf(2.0 - plan.alpha));
        report.stat("linear_variance_ratio", ratio);
    }

    if plan.kind == ExperimentKind::CltMarginal {
        // The limit law itself, sampled from stand-alone fBm paths.
        let sampler = FgnSampler::new(h, REFERENCE_STEPS, 1.0 / REFERENCE_STEPS as f64)?;
        let w1: Vec<f64> = map_replicates(&seeds, |r, _| {
            let path = sampler.sample_path(replicate_seed(plan.base_seed ^ REFERENCE_SALT, r as u64));
            Ok(path.values[REFERENCE_STEPS])
        })?;
        let ks_ref = ks_distance(&w1, normal::cdf)?;
        report.stat("reference_fbm_ks", ks_ref);
        report.check(Check::below("reference_fbm_ks", ks_ref, 1.36 / (w1.len() as f64).sqrt()));
    }

    if plan.kind == ExperimentKind::BkMarginal {
        let t = plan.t_eval.clamp(REPORT_T_RANGE.0, REPORT_T_RANGE.1);
        let factor = bk_limit_factor(plan.alpha, 1, &setup.sub, t)?;
        let sums: Vec<f64> = draws.iter().map(|d| d.bk_sum).collect();
        report.reference("bk_limit_factor", factor);
        report.stat("bk_sum_mean", mean(&sums));
        report.notes.push(format!(
            "(n/d)R_n(t) at t = {t} is compared with its limit factor·X² by mean only (E X² = 1)"
        ));
    }

    let mut table = Table::new(&["replicate", "statistic", "extensions"]);
    for (r, d) in draws.iter().enumerate() {
        table.push(vec![r as f64, d.statistic, d.extensions as f64]);
    }
    if plan.kind == ExperimentKind::BkMarginal {
        table.columns.push("bk_sum".into());
        for (row, d) in table.rows.iter_mut().zip(&draws) {
            row.push(d.bk_sum);
        }
    }
    report.replicates = table;
    report.finish();
    Ok(report)
}
