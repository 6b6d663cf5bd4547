//! Acceptance run: one PASS/FAIL line per criterion, then a nonzero exit if
//! any criterion failed.

use std::time::Instant;

use lrdlab_core::experiments::{run_experiment, ExperimentKind, ExperimentPlan, ExperimentReport};
use lrdlab_core::hermite::{compute_b_alpha, compute_kappa_alpha, hermite_coefficients, hermite_eval, normal_expectation};
use lrdlab_core::subordinator::Subordinator;
use statrs::function::beta::beta;

type Outcome = (bool, String);

fn run(plan: &ExperimentPlan, workers: Option<usize>) -> ExperimentReport {
    run_experiment(plan, workers).unwrap_or_else(|e| panic!("{} failed to run: {e}", plan.kind))
}

fn default_run(kind: ExperimentKind) -> ExperimentReport {
    run(&ExperimentPlan::default_for(kind), None)
}

fn check_value(r: &ExperimentReport, name: &str) -> (bool, f64) {
    let c = r.checks.iter().find(|c| c.name == name).unwrap_or_else(|| panic!("{} has no check {name}", r.plan.kind));
    (c.comparison.holds(c.value, c.threshold), c.value)
}

fn constants() -> Outcome {
    let mut worst: f64 = 0.0;
    for alpha in [0.2, 0.4, 0.5, 0.6, 0.8] {
        let b = compute_b_alpha(alpha).unwrap();
        let oracle = beta((1.0 - alpha) / 2.0, alpha);
        worst = worst.max((b - oracle).abs());
        let k = compute_kappa_alpha(alpha).unwrap();
        let k_oracle = (2.0 * oracle / ((1.0 - alpha) * (2.0 - alpha))).sqrt();
        worst = worst.max((k - k_oracle).abs());
    }
    let k5 = compute_kappa_alpha(0.5).unwrap();
    let ok = worst < 1e-8 && (k5 - 3.73956).abs() < 5e-6;
    (ok, format!("max |b, κ - Beta oracle| = {worst:.2e}, κ_0.5 = {k5:.6}"))
}

fn hermite() -> Outcome {
    let mut ortho: f64 = 0.0;
    for p in 0..=12 {
        for q in 0..=p {
            let v = normal_expectation(|x| hermite_eval(p, x).unwrap() * hermite_eval(q, x).unwrap(), 1e-12).unwrap();
            let expect = if p == q { (1..=q).map(|i| i as f64).product::<f64>() } else { 0.0 };
            ortho = ortho.max((v - expect).abs() / expect.max(1.0));
        }
    }
    let exp = Subordinator::parse("exp").unwrap();
    let j = hermite_coefficients(&exp, 10, 64).unwrap();
    let sqrt_e = 0.5f64.exp();
    let j_err = j.coefficients.iter().map(|v| (v - sqrt_e).abs()).fold(0.0, f64::max);
    let ranks = [
        ("identity", Some(1)),
        ("square-minus-one", Some(2)),
        ("exp", Some(1)),
        ("quantile-exponential:lambda=1", Some(1)),
        ("quantile-lognormal:mu=0,sigma=1", Some(1)),
        ("constant:value=2", None),
    ];
    let mut bad_ranks = Vec::new();
    for (name, want) in ranks {
        let sub = Subordinator::parse(name).unwrap();
        let quad = hermite_coefficients(&sub, 4, 64).unwrap().rank;
        let used = sub.expansion(4).unwrap().rank;
        if quad != want || used != want {
            bad_ranks.push(name);
        }
    }
    let ok = ortho < 1e-8 && j_err < 1e-8 && bad_ranks.is_empty();
    (ok, format!("orthogonality error {ortho:.2e}, max |J_q(exp) - √e| = {j_err:.2e}, wrong ranks {bad_ranks:?}"))
}

fn variance() -> Outcome {
    let r = default_run(ExperimentKind::VarianceAsymptote);
    let ratios: Vec<f64> = r.replicates.rows.iter().map(|row| row[1]).collect();
    (r.pass, format!("ratios at n = 2^12, 2^14, 2^16: {ratios:.4?}"))
}

fn identity() -> Outcome {
    let r = default_run(ExperimentKind::IdentitySweep);
    let (ok, v) = check_value(&r, "max_relative_residual");
    (ok, format!("max relative residual {v:.2e} over {} series", r.seeds.len()))
}

fn ks_criterion(kind: ExperimentKind) -> Outcome {
    let r = default_run(kind);
    let (ok, v) = check_value(&r, "ks");
    (ok, format!("KS = {v:.4} (tolerance {})", r.plan.tolerances.ks))
}

fn coupling() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for kind in [ExperimentKind::CouplingRateS, ExperimentKind::CouplingRateN, ExperimentKind::CouplingRateZ] {
        let r = default_run(kind);
        let (below, slope) = check_value(&r, "residual_slope_below_scale");
        let (gap_ok, gap) = check_value(&r, "raw_minus_residual_slope");
        ok &= below && gap_ok;
        let reference = r
            .checks
            .iter()
            .find(|c| c.name == "residual_slope_within_reference")
            .map(|c| format!(", reference+δ {:.2}", c.threshold))
            .unwrap_or_default();
        parts.push(format!("{kind}: slope {slope:.3}{reference}, raw gap {gap:.3}"));
    }
    (ok, parts.join("; "))
}

fn reduction() -> Outcome {
    let r = default_run(ExperimentKind::ReductionResidual);
    let (slope_ok, slope) = check_value(&r, "residual_slope_below_scale");
    let mut plan = ExperimentPlan::default_for(ExperimentKind::ReductionResidual);
    plan.subordinator = "identity".into();
    let id = run(&plan, None);
    let zero = id.stats["max_residual"];
    (slope_ok && zero == 0.0, format!("exp slope {slope:.3}, identity max residual {zero:e}"))
}

fn determinism() -> Outcome {
    let mut plans = vec![ExperimentPlan::default_for(ExperimentKind::IdentitySweep)];
    let mut clt = ExperimentPlan::default_for(ExperimentKind::CltMarginal);
    clt.replicates = 200;
    plans.push(clt);
    let mut cpl = ExperimentPlan::default_for(ExperimentKind::CouplingRateN);
    cpl.replicates = 4;
    cpl.horizons = vec![256, 512, 1024];
    plans.push(cpl);
    let same = plans.iter().all(|p| {
        run(p, None).canonical_json().unwrap() == run(p, None).canonical_json().unwrap()
    });
    (same, format!("{} plans re-run, canonical reports byte-identical: {same}", plans.len()))
}

fn parallelism() -> Outcome {
    let max = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1).max(2);
    let mut plans = Vec::new();
    let mut clt = ExperimentPlan::default_for(ExperimentKind::CltMarginal);
    clt.replicates = 200;
    plans.push(clt);
    let mut red = ExperimentPlan::default_for(ExperimentKind::ReductionResidual);
    red.replicates = 8;
    plans.push(red);
    let same = plans.iter().all(|p| {
        let a = run(p, Some(1));
        let b = run(p, Some(max));
        a.stats == b.stats && a.replicates == b.replicates && a.slopes == b.slopes && a.checks == b.checks
    });
    (same, format!("workers 1 vs {max}: identical statistics {same}"))
}

fn main() {
    let criteria: Vec<(&str, fn() -> Outcome)> = vec![
        ("constants", constants),
        ("hermite", hermite),
        ("exact variance", variance),
        ("identity", identity),
        ("marginal CLT", || ks_criterion(ExperimentKind::CltMarginal)),
        ("counting CLT", || ks_criterion(ExperimentKind::CountingClt)),
        ("vervaat chi-square", || ks_criterion(ExperimentKind::VervaatChi2)),
        ("coupling rates", coupling),
        ("reduction principle", reduction),
        ("empirical BK", || ks_criterion(ExperimentKind::BkMarginal)),
        ("determinism", determinism),
        ("parallelism invariance", parallelism),
    ];
    let mut failed = Vec::new();
    for (i, (name, f)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let (ok, detail) = f();
        let verdict = if ok { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {verdict} {name} ({:.1}s): {detail}", i + 1, start.elapsed().as_secs_f64());
        if !ok {
            failed.push(i + 1);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria pass");
    } else {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}
