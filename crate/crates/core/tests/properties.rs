use proptest::prelude::*;

use smallarea_core::areas::{area_draws_beta, conditional_normal_approx, local_logit};
use smallarea_core::averaging::{averaged_area_draws, posterior_model_probs, AlignedDraws, ModelDraws, SelectionMode};
use smallarea_core::deviance::{summarize_differences, DevianceSource};
use smallarea_core::grid::{GridSpec, PosteriorGrid};
use smallarea_core::numerics::{kde, Bandwidth, KdeGrid};
use smallarea_core::{
    AreaDrawMatrix, AveragingConfig, BetaParamsAb, CityRecord, Dataset, DevianceDistribution, ModelTag,
    NormalLogitParams, QuadratureRule,
};

fn records() -> impl Strategy<Value = Vec<CityRecord>> {
    prop::collection::vec((1u64..100_000, 0.0f64..=1.0), 1..30).prop_map(|v| {
        v.into_iter()
            .enumerate()
            .map(|(k, (n, f))| CityRecord::new(k as u32 + 1, n, (f * n as f64).floor() as u64).unwrap())
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn csv_round_trip_keeps_records_and_totals(recs in records()) {
        let d = Dataset::new(recs.clone()).unwrap();
        let back = Dataset::from_csv_str(&d.to_csv_string()).unwrap();
        prop_assert_eq!(back.records(), &recs[..]);
        prop_assert_eq!(back.total_events(), recs.iter().map(|c| c.r).sum::<u64>());
        prop_assert_eq!(back.total_population(), recs.iter().map(|c| c.n).sum::<u64>());
    }

    #[test]
    fn quadrature_rules_are_symmetric_probability_rules(order in 1usize..=64) {
        let rule = QuadratureRule::gauss_hermite(order).unwrap();
        let total: f64 = rule.weights().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert!(rule.weights().iter().all(|&w| w > 0.0));
        for k in 0..order {
            prop_assert_eq!(rule.nodes()[k], -rule.nodes()[order - 1 - k]);
            prop_assert!(k == 0 || rule.nodes()[k] > rule.nodes()[k - 1]);
        }
        prop_assert!((rule.integrate(|z| z * z) - 1.0).abs() < 1e-10 || order == 1);
    }

    #[test]
    fn grid_mass_is_normalized_and_shift_invariant(
        ll in prop::collection::vec(-50.0f64..0.0, 12),
        shift in -1e4f64..1e4,
    ) {
        let spec = GridSpec::new(0.0, 1.0, 0.0, 1.0, 3, 4).unwrap();
        let a = PosteriorGrid::from_logliks(spec, ModelTag::Normal, ll.clone(), None).unwrap();
        let b = PosteriorGrid::from_logliks(spec, ModelTag::Normal, ll.iter().map(|l| l + shift).collect(), None).unwrap();
        prop_assert!((a.mass().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for (x, y) in a.mass().iter().zip(b.mass()) {
            prop_assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn deviance_cdf_is_a_distribution_function(
        pairs in prop::collection::vec((300.0f64..500.0, 1e-6f64..1.0), 1..200),
        q in 0.0f64..=1.0,
    ) {
        let d = DevianceDistribution::from_weighted(pairs, DevianceSource::ExactGrid).unwrap();
        prop_assert!(d.values().windows(2).all(|w| w[0] < w[1]));
        prop_assert!(d.cum_probs().windows(2).all(|w| w[0] <= w[1]));
        prop_assert_eq!(*d.cum_probs().last().unwrap(), 1.0);
        let x = d.quantile(q);
        prop_assert!(x >= d.min() && x <= d.max());
        prop_assert!(d.cdf(x) >= q - 1e-12);
    }

    #[test]
    fn difference_summary_is_ordered(diffs in prop::collection::vec(-50.0f64..50.0, 1..500)) {
        let s = summarize_differences(&diffs).unwrap();
        prop_assert!(s.ci_low <= s.median && s.median <= s.ci_high);
        prop_assert!((0.0..=1.0).contains(&s.p_first_smaller));
        prop_assert!(s.p_strong <= s.p_first_smaller);
    }

    #[test]
    fn model_probabilities_rows_sum_to_one(
        devs in prop::collection::vec((300.0f64..500.0, 300.0f64..500.0, 300.0f64..500.0), 1..40),
        priors in (0.01f64..1.0, 0.01f64..1.0, 0.01f64..1.0),
        shift in -1e3f64..1e3,
    ) {
        let total = priors.0 + priors.1 + priors.2;
        let config = AveragingConfig::new(
            vec![ModelTag::Normal, ModelTag::Beta, ModelTag::Saturated],
            vec![priors.0 / total, priors.1 / total, 1.0 - (priors.0 + priors.1) / total],
        ).unwrap();
        let build = |offset: f64| {
            let t = devs.len();
            let cols = |base: f64| vec![(0..t).map(|k| base + k as f64).collect::<Vec<f64>>(); 2];
            let mk = |tag, d: Vec<f64>, base| ModelDraws {
                model: tag,
                deviances: d.into_iter().map(|x| x + offset).collect(),
                areas: AreaDrawMatrix::from_columns(Some(tag), cols(base)).unwrap(),
            };
            AlignedDraws::new(vec![
                mk(ModelTag::Normal, devs.iter().map(|d| d.0).collect(), 0.0),
                mk(ModelTag::Beta, devs.iter().map(|d| d.1).collect(), 1000.0),
                mk(ModelTag::Saturated, devs.iter().map(|d| d.2).collect(), 2000.0),
            ]).unwrap()
        };
        let aligned = build(0.0);
        let p = posterior_model_probs(&aligned, &config).unwrap();
        let q = posterior_model_probs(&build(shift), &config).unwrap();
        for t in 0..devs.len() {
            prop_assert!((p.row(t).iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for k in 0..3 {
                prop_assert!((p.row(t)[k] - q.row(t)[k]).abs() < 1e-9);
            }
        }
        let avg = averaged_area_draws(&aligned, &config, SelectionMode::PerDraw, 3).unwrap();
        for t in 0..devs.len() {
            for i in 0..2 {
                let src = avg.source(t, i);
                prop_assert_eq!(avg.matrix.logit(t, i), aligned.get(src).unwrap().areas.logit(t, i));
            }
        }
    }

    #[test]
    fn conditional_mean_is_between_local_logit_and_mu(
        n in 1u64..100_000,
        frac in 0.0f64..=1.0,
        mu in -8.0f64..0.0,
        sigma in 1e-3f64..3.0,
    ) {
        let rec = CityRecord::new(1, n, (frac * n as f64).floor() as u64).unwrap();
        let local = local_logit::<f64>(&rec);
        let (mean, var) = conditional_normal_approx(&rec, NormalLogitParams::new(mu, sigma).unwrap());
        let (lo, hi) = if local.theta_hat < mu { (local.theta_hat, mu) } else { (mu, local.theta_hat) };
        prop_assert!(mean >= lo - 1e-9 && mean <= hi + 1e-9);
        prop_assert!(var > 0.0 && var <= sigma * sigma + 1e-12);
    }

    #[test]
    fn relative_shrinkage_falls_with_data_precision(
        cities in prop::collection::vec((10u64..100_000, 0.001f64..0.5), 2..20),
        sigma in 0.01f64..2.0,
    ) {
        let psi = 1.0 / (sigma * sigma);
        let mut pts: Vec<(f64, f64)> = cities
            .iter()
            .map(|&(n, f)| {
                let rec = CityRecord::new(1, n, ((f * n as f64).round() as u64).clamp(1, n - 1)).unwrap();
                let l = local_logit::<f64>(&rec);
                let (mean, _) = conditional_normal_approx(&rec, NormalLogitParams::new(-4.8, sigma).unwrap());
                let weight = if (l.theta_hat + 4.8).abs() > 1e-9 {
                    (mean - l.theta_hat) / (-4.8 - l.theta_hat)
                } else {
                    psi / (l.precision + psi)
                };
                (l.precision, weight)
            })
            .collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in pts.windows(2) {
            prop_assert!(w[1].1 <= w[0].1 + 1e-9);
        }
    }

    #[test]
    fn area_rates_stay_inside_the_unit_interval(a in 0.01f64..1e4, b in 0.01f64..1e6, seed in any::<u64>()) {
        let d = Dataset::new(vec![
            CityRecord::new(1, 50, 0).unwrap(),
            CityRecord::new(2, 50, 50).unwrap(),
            CityRecord::new(3, 20_000, 300).unwrap(),
        ]).unwrap();
        let m = area_draws_beta(&d, &[BetaParamsAb::new(a, b).unwrap(); 20], seed).unwrap();
        for i in 0..3 {
            for t in 0..20 {
                let p = m.rate(t, i);
                prop_assert!(p > 0.0 && p < 1.0 && m.logit(t, i).is_finite());
            }
        }
    }

    #[test]
    fn kde_on_covering_grid_integrates_to_one(xs in prop::collection::vec(-10.0f64..0.0, 2..200)) {
        prop_assume!(xs.iter().any(|&x| (x - xs[0]).abs() > 1e-6));
        let c = kde(&xs, Bandwidth::Auto, KdeGrid::Covering(2000)).unwrap();
        prop_assert!((c.integral() - 1.0).abs() < 1e-3);
    }
}
