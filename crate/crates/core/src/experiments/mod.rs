//! Monte Carlo harness: plans, replicate generation, distribution and rate
//! statistics, and JSON reports.
//!
//! Replicates run in parallel; results are collected in replicate order, so
//! every statistic is independent of the worker count.

mod coupling;
mod distribution;
pub mod plan;
pub mod report;
pub mod stats;
mod sweeps;

use std::time::Instant;

use rayon::prelude::*;

pub use coupling::run_coupling_experiment;
pub use distribution::run_distribution_experiment;
pub use plan::{ExperimentKind, ExperimentPlan, Tolerances};
pub use report::{config_hash, Check, Comparison, ExperimentReport, SlopeRecord, Table};
pub use stats::{fit_rate_slope, ks_distance, median, replicate_seed, replicate_seeds, SlopeFit};
pub use sweeps::{run_identity_sweep, run_reduction_experiment, run_variance_experiment};

use crate::error::{param, LabError, Result};
use crate::gauss_lrd::{make_model, InnovationStream, LinearProcessModel, PathGenerator};
use crate::hermite::{compute_kappa_alpha, HermiteExpansion};
use crate::processes::{ProcessBundle, SeriesSource, SubordinatedSeries};
use crate::subordinator::Subordinator;

/// Extra attempts with a doubled series length after a horizon error.
pub const MAX_EXTENSIONS: usize = 3;

/// Hermite orders computed for every plan's subordinator.
const EXPANSION_ORDER: usize = 4;

/// Everything a plan needs that does not depend on the replicate.
pub struct Setup {
    pub model: LinearProcessModel,
    pub sub: Subordinator,
    pub expansion: HermiteExpansion,
    pub j1: f64,
    pub kappa: f64,
}

impl Setup {
    /// Validates `plan` against every module's preconditions.
    pub fn new(plan: &ExperimentPlan) -> Result<Self> {
        plan.validate_shape()?;
        let sub = Subordinator::parse(&plan.subordinator)?;
        let model = if plan.truncation == 0 {
            LinearProcessModel::independent(plan.alpha)?
        } else {
            make_model(plan.alpha, plan.truncation)?
        };
        let expansion = sub.expansion(EXPANSION_ORDER)?;
        let j1 = expansion.coefficient(1).unwrap_or(0.0);
        if plan.kind.needs_nonnegative() && !sub.kind.is_nonnegative() {
            return param(format!("{} needs a nonnegative subordinator, got {}", plan.kind, sub.description));
        }
        if plan.kind.needs_rank_one() && expansion.rank != Some(1) {
            return param(format!(
                "{} needs Hermite rank one; {} has J_1 = {j1:e}",
                plan.kind, sub.description
            ));
        }
        if plan.kind == ExperimentKind::BkMarginal && !sub.kind.is_strictly_increasing() {
            return param(format!("bk_marginal needs a strictly increasing subordinator, got {}", sub.description));
        }
        if plan.kind.needs_nonnegative() && !(sub.exact_mean() > 0.0) {
            return param("the counting process needs a positive mean");
        }
        let kappa = compute_kappa_alpha(plan.alpha)?;
        Ok(Self { model, sub, expansion, j1, kappa })
    }

    pub fn sigma(&self) -> f64 {
        self.model.sigma
    }

    pub fn mu(&self) -> f64 {
        self.sub.exact_mean()
    }

    /// `J_1 κ_α / σ`, the scale of the fBm limit of `S(t) - μt`.
    pub fn scale(&self) -> f64 {
        self.j1 * self.kappa / self.sigma()
    }

    pub fn source(&self, seed: u64) -> SeriesSource {
        SeriesSource { seed, stream_id: 0, alpha: self.model.alpha, truncation: self.model.truncation }
    }

    pub fn series(&self, generator: &PathGenerator, seed: u64) -> Result<SubordinatedSeries> {
        let path = generator.generate(&InnovationStream::new(seed, 0))?;
        SubordinatedSeries::from_path(&path, &self.sub, &self.expansion, Some(self.source(seed)))
    }

    /// Runs `f` on a bundle over a series of `base_len`, doubling the length
    /// after each horizon error at most [`MAX_EXTENSIONS`] times. Returns the
    /// value and the number of extensions used.
    pub fn with_bundle<T>(
        &self,
        base: &PathGenerator,
        base_len: usize,
        seed: u64,
        horizon: f64,
        n_scale: usize,
        f: impl Fn(&ProcessBundle) -> Result<T>,
    ) -> Result<(T, usize)> {
        let mut last = None;
        for ext in 0..=MAX_EXTENSIONS {
            let series = if ext == 0 {
                self.series(base, seed)?
            } else {
                self.series(&PathGenerator::new(&self.model, base_len << ext)?, seed)?
            };
            let bundle = ProcessBundle::new(series, horizon, n_scale, self.model.alpha)?;
            match f(&bundle) {
                Err(e @ LabError::Horizon { .. }) => last = Some(e),
                other => return other.map(|v| (v, ext)),
            }
        }
        Err(last.expect("loop ran"))
    }
}

/// Checks `plan` without running it.
pub fn validate_plan(plan: &ExperimentPlan) -> Result<()> {
    Setup::new(plan).map(|_| ())
}

/// `f(r, seed_r)` for every replicate, in replicate order.
pub(crate) fn map_replicates<T, F>(seeds: &[u64], f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, u64) -> Result<T> + Sync,
{
    seeds.par_iter().enumerate().map(|(r, &s)| f(r, s)).collect()
}

/// Reference exponents shared by the rate experiments.
pub(crate) fn add_reference_exponents(report: &mut ExperimentReport, alpha: f64, gamma: f64) {
    let h = 1.0 - alpha / 2.0;
    report.reference("gamma", gamma);
    report.reference("gamma_half", gamma / 2.0);
    report.reference("hurst", h);
    report.reference("hurst_squared", h * h);
    report.reference("z_leading", 2.0 - 1.5 * alpha + alpha * alpha / 4.0);
    report.reference("z_secondary", 1.0 - alpha / 2.0 + gamma / 2.0);
    report.reference("z_scale", 2.0 - alpha);
}

/// Runs `plan` on `workers` threads (`None`: all available cores).
pub fn run_experiment(plan: &ExperimentPlan, workers: Option<usize>) -> Result<ExperimentReport> {
    validate_plan(plan)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| LabError::Parameter(format!("cannot start worker pool: {e}")))?;
    let start = Instant::now();
    let mut report = pool.install(|| match plan.kind {
        ExperimentKind::VarianceAsymptote => run_variance_experiment(plan),
        ExperimentKind::CouplingRateS | ExperimentKind::CouplingRateN | ExperimentKind::CouplingRateZ => {
            run_coupling_experiment(plan)
        }
        ExperimentKind::CltMarginal
        | ExperimentKind::CountingClt
        | ExperimentKind::VervaatChi2
        | ExperimentKind::BkMarginal => run_distribution_experiment(plan),
        ExperimentKind::ReductionResidual => run_reduction_experiment(plan),
        ExperimentKind::IdentitySweep => run_identity_sweep(plan),
    })?;
    report.wall_clock_seconds = start.elapsed().as_secs_f64();
    report.finish();
    Ok(report)
}
