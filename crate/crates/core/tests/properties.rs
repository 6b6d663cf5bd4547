use lrdlab_core::empirical::EmpiricalPair;
use lrdlab_core::experiments::{Check, ExperimentKind, ExperimentPlan, ExperimentReport, SlopeFit, SlopeRecord, Table};
use lrdlab_core::gauss_lrd::{
    generate_path_direct, generate_path_fft, make_model, model_correlations, InnovationSource, InnovationStream,
};
use lrdlab_core::hermite::long_memory_constant;
use lrdlab_core::processes::{ProcessBundle, SubordinatedSeries};
use lrdlab_core::quad::integrate;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fft_and_direct_generation_agree(
        alpha in 0.05f64..0.95,
        m_exp in 0u32..=14,
        n_exp in 0u32..=12,
        seed in any::<u64>(),
    ) {
        let model = make_model(alpha, 1usize << m_exp).unwrap();
        let n = 1usize << n_exp;
        let stream = InnovationStream::new(seed, 3);
        let a = generate_path_direct(&model, n, &stream).unwrap();
        let b = generate_path_fft(&model, n, &stream).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            prop_assert!((x - y).abs() < 1e-9, "{x} vs {y}");
        }
    }
}

proptest! {
    #[test]
    fn innovation_blocks_are_windows(seed in any::<u64>(), start in -5000i64..5000, len in 1usize..64, off in 0usize..64) {
        let s = InnovationStream::new(seed, 0);
        let block = s.block(start, len + off).unwrap();
        let inner = s.block(start + off as i64, len).unwrap();
        prop_assert_eq!(&block[off..], &inner[..]);
    }

    #[test]
    fn inverse_sandwich(ys in prop::collection::vec(0.0f64..3.0, 1..200), fracs in prop::collection::vec(0.0f64..1.0, 1..50)) {
        let n = ys.len();
        let series = SubordinatedSeries::from_values(ys, 1.0).unwrap();
        let bundle = ProcessBundle::new(series, n as f64, n, 0.4).unwrap();
        let cs = bundle.cumulative_sums().to_vec();
        let total = cs[n];
        prop_assume!(total > 0.0);
        for f in fracs {
            let t = f * total;
            let k = bundle.counting(t).unwrap();
            prop_assert!(cs[k - 1] <= t && t < cs[k], "t={t} k={k}");
        }
        prop_assert!(bundle.counting(total).is_err());
    }

    #[test]
    fn galois_inequalities(u in prop::collection::vec(0.0f64..=1.0, 1..100), ts in prop::collection::vec(0.0f64..=1.0, 1..40)) {
        let pair = EmpiricalPair::from_uniforms(u, 1.0).unwrap();
        for &t in &ts {
            if t > 0.0 {
                prop_assert!(pair.cdf(pair.quantile(t)) >= t);
            }
        }
        for &x in pair.sorted() {
            prop_assert!(pair.quantile(pair.cdf(x)) <= x);
        }
    }

    #[test]
    fn vervaat_integral_matches_pointwise_integral(u in prop::collection::vec(0.0f64..=1.0, 1..12), t in 0.0f64..=1.0) {
        let pair = EmpiricalPair::from_uniforms(u, 1.0).unwrap();
        let pts: Vec<f64> = pair.jump_points().into_iter().filter(|&p| p < t).chain([t]).collect();
        let mut oracle = 0.0;
        let mut lo = 0.0;
        for &hi in &pts {
            if hi > lo {
                oracle += integrate(|s| pair.bk_process(s), lo, hi, 1e-13, 1e-12).unwrap();
            }
            lo = hi;
        }
        let n = pair.n() as f64;
        prop_assert!((pair.vervaat_empirical(t) - n * oracle).abs() < 1e-8 * (1.0 + n * oracle.abs()));
    }

    #[test]
    fn report_round_trip(stat in -1e6f64..1e6, thr in 0.0f64..1.0, seeds in prop::collection::vec(any::<u64>(), 0..20)) {
        let plan = ExperimentPlan::default_for(ExperimentKind::CouplingRateN);
        let mut r = ExperimentReport::new(&plan, seeds);
        r.stat("value", stat);
        r.check(Check::below("value_below", stat, thr));
        r.check(Check::at_least("value_above", stat, -thr));
        r.slopes.push(SlopeRecord { name: "s".into(), fit: SlopeFit { slope: thr, intercept: stat, stderr: 0.0 }, medians: vec![stat] });
        r.replicates = Table::new(&["x"]);
        r.replicates.push(vec![stat]);
        r.finish();
        let back = ExperimentReport::from_json(&r.to_json().unwrap()).unwrap();
        prop_assert_eq!(&back, &r);
        prop_assert_eq!(back.recompute_pass(), r.pass);
    }
}

fn tail_ratio(alpha: f64, truncation: usize, lag: usize) -> f64 {
    let model = make_model(alpha, truncation).unwrap();
    let rho = model_correlations(&model, lag)[lag];
    rho * (lag as f64).powf(alpha) / long_memory_constant(&model).unwrap()
}

#[test]
fn covariance_tail_ratio_grows_with_truncation() {
    let r: Vec<f64> = [12, 16, 20].iter().map(|&e| tail_ratio(0.4, 1 << e, 1 << 10)).collect();
    assert!(r[0] < r[1] && r[1] < r[2] && r[2] < 1.0, "{r:?}");
}

#[test]
fn covariance_tail_within_five_percent_at_lag_1024() {
    let r = tail_ratio(0.4, 1 << 20, 1 << 10);
    assert!((r - 1.0).abs() <= 0.05, "ρ_k k^α / L = {r}");
}
