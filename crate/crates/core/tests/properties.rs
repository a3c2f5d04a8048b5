use proptest::prelude::*;
use singlegap::counting::{counting_law_projection, CountingLaw};
use singlegap::ensembles::{sample_tridiagonal, SymTridiagonal};
use singlegap::gaudin::{gap_function_fredholm, gaudin_cdf};
use singlegap::operators::{fredholm_det_adaptive, FiniteRankProjection};
use singlegap::{Interval, KernelFunction};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pmf_is_a_distribution_with_matching_moments(lambdas in prop::collection::vec(0.0f64..=1.0, 0..40)) {
        let law = CountingLaw::from_eigenvalues(&lambdas).unwrap();
        let pmf = law.pmf();
        prop_assert!((pmf.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(pmf.iter().all(|&p| p >= 0.0));
        let mean: f64 = pmf.iter().enumerate().map(|(m, p)| m as f64 * p).sum();
        let second: f64 = pmf.iter().enumerate().map(|(m, p)| (m * m) as f64 * p).sum();
        prop_assert!((mean - law.mu()).abs() < 1e-10);
        prop_assert!((second - mean * mean - law.sigma2()).abs() < 1e-9);
    }

    #[test]
    fn sturm_count_is_monotone(d in prop::collection::vec(-3.0f64..3.0, 2..20), xs in prop::collection::vec(-8.0f64..8.0, 2)) {
        let e: Vec<f64> = (1..d.len()).map(|k| 0.3 + 0.1 * k as f64).collect();
        let t = SymTridiagonal::new(d, e).unwrap();
        let (lo, hi) = if xs[0] <= xs[1] { (xs[0], xs[1]) } else { (xs[1], xs[0]) };
        prop_assert!(t.count_below(lo) <= t.count_below(hi));
        let ev = t.eigenvalues();
        prop_assert_eq!(t.count_below(hi), ev.iter().filter(|&&l| l < hi).count());
    }

    #[test]
    fn hole_probability_shrinks_with_the_interval(a in -1.0f64..0.0, len in 0.05f64..1.5) {
        let v = FiniteRankProjection::rescaled_gue(40, 0.0);
        let small = counting_law_projection(&v, Interval::new(a, a + len)).unwrap().hole_probability();
        let large = counting_law_projection(&v, Interval::new(a, a + len + 0.2)).unwrap().hole_probability();
        prop_assert!(large <= small + 1e-12);
        prop_assert!((0.0..=1.0).contains(&small));
    }
}

#[test]
fn finite_n_hole_probability_approaches_the_sine_limit() {
    let i = Interval::new(0.0, 1.0);
    let (limit, _) = fredholm_det_adaptive(&KernelFunction::sine(), i, 16, 1e-13).unwrap();
    let errs: Vec<f64> = [25usize, 100, 400]
        .iter()
        .map(|&n| {
            let v = FiniteRankProjection::rescaled_gue(n, 0.0);
            (counting_law_projection(&v, i).unwrap().hole_probability() - limit).abs()
        })
        .collect();
    assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
    assert!(errs[2] < 1e-3);
}

#[test]
fn tridiagonal_gaps_follow_the_gaudin_law_in_the_mean() {
    let table = gap_function_fredholm(5.0, 0.01).unwrap();
    let n = 120;
    let ctx = singlegap::ensembles::RescaledContext::new(n, 0.0).unwrap();
    let gaps: Vec<f64> = (0..3000u64)
        .map(|k| {
            let ev = sample_tridiagonal(n, 5, k).eigenvalues_in(n / 2 - 1..n / 2 + 1);
            (ev[1] - ev[0]) * ctx.scale
        })
        .collect();
    let below_one = gaps.iter().filter(|&&g| g <= 1.0).count() as f64 / gaps.len() as f64;
    let expected = gaudin_cdf(1.0, &table).unwrap();
    // binomial standard error is about 0.009
    assert!((below_one - expected).abs() < 0.04, "{below_one} vs {expected}");
}
