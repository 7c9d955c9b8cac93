//! Acceptance criteria, one PASS/FAIL line each. Exits nonzero if any fails.

use std::time::Instant;

use smallarea_core::areas::{area_draws_beta, area_draws_local};
use smallarea_core::averaging::{averaged_area_draws, posterior_model_probs, SelectionMode};
use smallarea_core::averaging::{AlignedDraws, ModelDraws};
use smallarea_core::deviance::{
    asymptotic_diff, asymptotic_normal_form, deviance_draws_null, deviance_draws_saturated, difference_draws,
    summarize_differences,
};
use smallarea_core::grid::{build_grid, GridChoice, ParametricModel, PosteriorGrid};
use smallarea_core::models::{loglik_beta_binomial, loglik_normal_logit, BetaParamsAb, NormalLogitParams};
use smallarea_core::numerics::{log_beta, log_binom_coeff};
use smallarea_core::pipeline::{fit_both, fit_model, run};
use smallarea_core::{
    AreaDrawMatrix, AveragingConfig, CityRecord, Dataset, DevianceDistribution, ModelTag, PipelineConfig,
    QuadratureRule,
};

const T: usize = 10_000;
const SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

struct Report {
    failures: usize,
}

impl Report {
    fn line(&mut self, id: &str, ok: bool, what: &str, detail: String) {
        if !ok {
            self.failures += 1;
        }
        println!("{} criterion {id}: {what} [{detail}]", if ok { "PASS" } else { "FAIL" });
    }
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

fn ks_against(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut s = sample.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(k, &x)| {
            let f = cdf(x);
            (f - k as f64 / n).abs().max((f - (k + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}

/// Empirical-vs-model KS distance for a step distribution.
fn ks_distribution(dist: &DevianceDistribution, cdf: impl Fn(f64) -> f64) -> f64 {
    let mut prev = 0.0;
    let mut worst = 0.0f64;
    for (&x, &c) in dist.values().iter().zip(dist.cum_probs()) {
        let f = cdf(x);
        worst = worst.max((f - prev).abs()).max((f - c).abs());
        prev = c;
    }
    worst
}

fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

fn erfc(x: f64) -> f64 {
    // Numerical Recipes erfcc, relative error < 1.2e-7
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let r = t
        * (-z * z - 1.265_512_23
            + t * (1.000_023_68
                + t * (0.374_091_96
                    + t * (0.096_784_18
                        + t * (-0.186_288_06
                            + t * (0.278_868_07
                                + t * (-1.135_203_98
                                    + t * (1.488_515_87 + t * (-0.822_152_23 + t * 0.170_872_77)))))))))
            .exp();
    if x >= 0.0 {
        r
    } else {
        2.0 - r
    }
}

fn ln_factorial(k: u64) -> f64 {
    (1..=k).map(|j| (j as f64).ln()).sum()
}

fn criterion_1_to_4(report: &mut Report, data: &Dataset) {
    let start = Instant::now();
    let normal = fit_model::<f64>(
        data,
        ParametricModel::normal_logit(20).unwrap(),
        GridChoice::Auto { size: 100 },
    )
    .unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let s = normal.summary;
    let spec = normal.grid.spec();
    let ok = (s.mle.0 + 4.787).abs() <= spec.step1()
        && (s.mle.1 - 0.2368).abs() <= spec.step2()
        && within(s.max_loglik, -181.254, 0.05)
        && within(s.frequentist_deviance, 362.51, 0.1)
        && elapsed < 30.0;
    report.line(
        "1",
        ok,
        "normal-logit AUTO grid MLE, max log-likelihood, deviance, runtime",
        format!(
            "mle=({:.4}, {:.4}) steps=({:.4}, {:.4}) loglik={:.4} deviance={:.3} time={elapsed:.2}s",
            s.mle.0,
            s.mle.1,
            spec.step1(),
            spec.step2(),
            s.max_loglik,
            s.frequentist_deviance
        ),
    );

    let rule = QuadratureRule::gauss_hermite(20).unwrap();
    let points = [
        (-4.787, 0.2368, -181.254),
        (-4.708, 0.2016, -181.397),
        (-4.776, 0.3072, -181.425),
        (-4.668, 0.2432, -181.612),
        (-4.733, 0.2384, -182.059),
    ];
    let got: Vec<f64> = points
        .iter()
        .map(|&(mu, sigma, _)| loglik_normal_logit(data, NormalLogitParams::new(mu, sigma).unwrap(), &rule))
        .collect();
    let ok = points.iter().zip(&got).all(|(p, g)| within(*g, p.2, 0.05));
    report.line(
        "2",
        ok,
        "normal-logit log-likelihood at five reference points",
        got.iter().map(|g| format!("{g:.3}")).collect::<Vec<_>>().join(", "),
    );

    let ok = within(s.mean_deviance, 364.32, 0.2) && within(s.p_d, 1.81, 0.2) && within(s.dic, 366.13, 0.3);
    report.line(
        "3",
        ok,
        "normal-model mean deviance, p_D, DIC",
        format!("mean={:.3} pD={:.3} DIC={:.3}", s.mean_deviance, s.p_d, s.dic),
    );

    let beta = fit_model::<f64>(data, ParametricModel::BetaMeanSd, GridChoice::Auto { size: 100 }).unwrap();
    let b = beta.summary;
    let ok = within(b.max_loglik, -181.486, 0.05)
        && within(b.frequentist_deviance, 362.97, 0.1)
        && within(b.mean_deviance, 364.99, 0.2)
        && within(b.p_d, 2.02, 0.2)
        && within(b.dic, 367.01, 0.3);
    report.line(
        "4",
        ok,
        "beta-model log-likelihood, deviance, mean deviance, p_D, DIC",
        format!(
            "loglik={:.4} deviance={:.3} mean={:.3} pD={:.3} DIC={:.3}",
            b.max_loglik, b.frequentist_deviance, b.mean_deviance, b.p_d, b.dic
        ),
    );
}

fn criterion_5_to_7(report: &mut Report, data: &Dataset) {
    let config = PipelineConfig::new(T, 0).unwrap();
    let (normal, beta) = fit_both(data, &config).unwrap();

    let mut ok5 = true;
    let mut detail5 = Vec::new();
    let mut ok6 = true;
    let mut detail6 = Vec::new();
    for seed in SEEDS {
        let diffs = difference_draws(&beta.deviance, &normal.deviance, T, seed);
        let s = summarize_differences(&diffs).unwrap();
        let p_normal = diffs.iter().filter(|&&d| d > 0.0).count() as f64 / T as f64;
        ok5 &= within(s.median, 0.505, 0.4)
            && within(s.ci_low, -5.125, 1.0)
            && within(s.ci_high, 6.378, 1.0)
            && within(p_normal, 0.6332, 0.03);
        detail5.push(format!(
            "seed {seed}: median={:.3} ci=({:.3}, {:.3}) P={:.4}",
            s.median, s.ci_low, s.ci_high, p_normal
        ));

        let sat = DevianceDistribution::from_draws(deviance_draws_saturated(data, T, seed).unwrap().deviances).unwrap();
        let diffs = difference_draws(&sat, &normal.deviance, T, seed);
        let p_sat = diffs.iter().filter(|&&d| d < 0.0).count() as f64 / T as f64;
        ok6 &= within(p_sat, 0.7784, 0.03);
        detail6.push(format!("seed {seed}: P={p_sat:.4}"));
    }
    report.line(
        "5",
        ok5,
        "beta vs normal deviance difference, 5 seeds",
        detail5.join("; "),
    );
    report.line(
        "6",
        ok6,
        "saturated vs normal P(saturated smaller), 5 seeds",
        detail6.join("; "),
    );

    let null = DevianceDistribution::from_draws(deviance_draws_null(data, T, 1).unwrap().deviances).unwrap();
    let gap = null.median() - normal.deviance.median();
    report.line(
        "7",
        (30.0..=50.0).contains(&gap),
        "median null deviance minus median normal deviance in [30, 50]",
        format!("gap={gap:.2}"),
    );
}

fn criterion_8(report: &mut Report, data: &Dataset) {
    let mut checks: Vec<(&str, bool)> = Vec::new();

    let mut moments = true;
    for order in [5usize, 10, 20, 40] {
        let rule = QuadratureRule::gauss_hermite(order).unwrap();
        let mut double_fact = 1.0f64;
        for k in 0..order {
            let even = rule.integrate(|z| z.powi(2 * k as i32));
            let odd = rule.integrate(|z| z.powi(2 * k as i32 + 1));
            moments &= (even - double_fact).abs() <= 1e-10 * double_fact && odd.abs() <= 1e-10 * double_fact.max(1.0);
            double_fact *= (2 * k + 1) as f64;
        }
    }
    checks.push(("quadrature moments", moments));

    let mut lbeta = true;
    for &(a, b) in &[(0.3f64, 7.0f64), (2.5, 2.5), (12.0, 400.0), (1e4, 3.0), (0.01, 0.9)] {
        lbeta &= (log_beta(a, b).unwrap() - log_beta(b, a).unwrap()).abs() < 1e-12;
    }
    for n in 2u64..=60 {
        for k in 1..n {
            let lhs = log_binom_coeff::<f64>(n, k).unwrap();
            let rhs = (log_binom_coeff::<f64>(n - 1, k - 1).unwrap().exp()
                + log_binom_coeff::<f64>(n - 1, k).unwrap().exp())
            .ln();
            lbeta &= (lhs - rhs).abs() < 1e-11;
        }
    }
    checks.push(("log-beta symmetry and Pascal identity", lbeta));

    let grid = build_grid(data, &ParametricModel::BetaMeanSd, GridChoice::Auto { size: 60 }).unwrap();
    let total: f64 = grid.mass().iter().sum();
    let shifted = PosteriorGrid::from_logliks(
        *grid.spec(),
        ModelTag::Beta,
        grid.loglik().iter().map(|l| l + 1234.5).collect(),
        None,
    )
    .unwrap();
    let invariant = grid
        .mass()
        .iter()
        .zip(shifted.mass())
        .all(|(a, b)| (a - b).abs() < 1e-12);
    checks.push((
        "grid mass normalization and shift invariance",
        (total - 1.0).abs() < 1e-12 && invariant,
    ));

    let analysis = run(data, &PipelineConfig::new(2_000, 8).unwrap()).unwrap();
    let config = AveragingConfig::equal(vec![ModelTag::Normal, ModelTag::Beta, ModelTag::Saturated]).unwrap();
    let probs = posterior_model_probs(&analysis.draws.aligned, &config).unwrap();
    let rows = (0..probs.draws()).all(|t| (probs.row(t).iter().sum::<f64>() - 1.0).abs() < 1e-12);
    let split = {
        let gap = 2.0 * 9f64.ln();
        let mk = |tag, d: f64| ModelDraws {
            model: tag,
            deviances: vec![d],
            areas: AreaDrawMatrix::from_columns(Some(tag), vec![vec![0.0]]).unwrap(),
        };
        let aligned = AlignedDraws::new(vec![mk(ModelTag::Normal, 360.0 - gap), mk(ModelTag::Beta, 360.0)]).unwrap();
        let cfg = AveragingConfig::equal(vec![ModelTag::Normal, ModelTag::Beta]).unwrap();
        let row = posterior_model_probs(&aligned, &cfg).unwrap().row(0).to_vec();
        (row[0] - 0.9).abs() < 1e-12 && (row[1] - 0.1).abs() < 1e-12
    };
    checks.push((
        "probability rows sum to 1 and the -2 ln 9 gap gives (0.9, 0.1)",
        rows && split,
    ));

    let beta11 = area_draws_beta(data, &vec![BetaParamsAb::new(1.0, 1.0).unwrap(); T], 21).unwrap();
    let local = area_draws_local::<f64>(data, T, 21).unwrap();
    let worst = (0..data.len())
        .map(|i| ks_two_sample(beta11.column(i), local.column(i)))
        .fold(0.0, f64::max);
    checks.push(("beta(1,1) vs local draws, KS < 0.03 per city", worst < 0.03));

    let mut traceable = true;
    for mode in [SelectionMode::PerDraw, SelectionMode::PerArea] {
        let avg = averaged_area_draws(&analysis.draws.aligned, &config, mode, 8).unwrap();
        for t in 0..avg.matrix.draws() {
            for i in 0..avg.matrix.areas() {
                let src = avg.source(t, i);
                traceable &= avg.matrix.logit(t, i) == analysis.draws.aligned.get(src).unwrap().areas.logit(t, i);
            }
        }
    }
    checks.push(("averaged draws traceable to source draws", traceable));

    let again = run(data, &PipelineConfig::new(2_000, 8).unwrap()).unwrap();
    checks.push((
        "determinism under a fixed seed",
        format!("{analysis:?}") == format!("{again:?}"),
    ));

    let ok = checks.iter().all(|c| c.1);
    let detail = checks
        .iter()
        .map(|(name, ok)| format!("{name}: {}", if *ok { "ok" } else { "FAILED" }))
        .collect::<Vec<_>>()
        .join("; ");
    report.line(
        "8",
        ok,
        &format!("property suite (worst beta/local KS {worst:.4})"),
        detail,
    );
}

fn criterion_9(report: &mut Report) {
    // single-record beta-binomial vs the closed-form beta integral with integer shapes
    let mut worst_ll = 0.0f64;
    for &(n, r, a, b) in &[(10u64, 3u64, 2u64, 5u64), (40, 0, 1, 1), (25, 25, 3, 2), (7, 4, 9, 1)] {
        let d = Dataset::new(vec![CityRecord::new(1, n, r).unwrap()]).unwrap();
        let got = loglik_beta_binomial(&d, BetaParamsAb::new(a as f64, b as f64).unwrap());
        let ln_b = |x: u64, y: u64| ln_factorial(x - 1) + ln_factorial(y - 1) - ln_factorial(x + y - 1);
        let oracle = ln_factorial(n) - ln_factorial(r) - ln_factorial(n - r) + ln_b(r + a, n - r + b) - ln_b(a, b);
        worst_ll = worst_ll.max((got - oracle).abs());
    }

    // single-city saturated deviance vs its distribution by 1-D quadrature
    let (n, r) = (200u64, 3u64);
    let d = Dataset::new(vec![CityRecord::new(1, n, r).unwrap()]).unwrap();
    let draws = deviance_draws_saturated(&d, T, 9).unwrap().deviances;
    let (nf, rf) = (n as f64, r as f64);
    let c = ln_factorial(n) - ln_factorial(r) - ln_factorial(n - r);
    let dev = |p: f64| -2.0 * (c + rf * p.ln() + (nf - rf) * (1.0 - p).ln());
    let ln_norm = ln_factorial(n + 1) - ln_factorial(r) - ln_factorial(n - r);
    let density = |p: f64| (ln_norm + rf * p.ln() + (nf - rf) * (1.0 - p).ln()).exp();
    let mode = rf / nf;
    let solve = |target: f64, lo: f64, hi: f64| {
        // dev is monotone on each side of the mode
        let (mut a, mut b) = (lo, hi);
        let rising = dev(b) > dev(a);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if (dev(m) < target) == rising {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    };
    let integrate = |lo: f64, hi: f64| {
        let k = 4000;
        let h = (hi - lo) / k as f64;
        (0..=k)
            .map(|j| {
                let w = if j == 0 || j == k {
                    1.0
                } else if j % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                w * density(lo + h * j as f64)
            })
            .sum::<f64>()
            * h
            / 3.0
    };
    let cdf = |x: f64| {
        if x <= dev(mode) {
            return 0.0;
        }
        let lo = if dev(1e-300) > x { solve(x, 1e-300, mode) } else { 0.0 };
        let hi = if dev(1.0 - 1e-16) > x {
            solve(x, mode, 1.0 - 1e-16)
        } else {
            1.0
        };
        integrate(lo, hi)
    };
    let ks_sat = ks_against(&draws, cdf);

    // asymptotic chi-square difference vs its normal limit
    let (s1, s2, fd) = (50u32, 50u32, 1.5f64);
    let asym = asymptotic_diff(s1, s2, fd, 100_000, 4).unwrap();
    let (mean, var) = asymptotic_normal_form(s1, s2, fd);
    let sd = var.sqrt();
    let ks_asym = ks_distribution(&asym, |x| normal_cdf((x - mean) / sd));

    report.line(
        "9",
        worst_ll < 1e-10 && ks_sat < 0.02 && ks_asym < 0.02,
        "oracle equivalence: beta-binomial, single-city saturated deviance, asymptotic difference",
        format!("loglik error={worst_ll:.2e} KS saturated={ks_sat:.4} KS asymptotic={ks_asym:.4}"),
    );
}

fn main() {
    let data = Dataset::missouri();
    let mut report = Report { failures: 0 };
    criterion_1_to_4(&mut report, &data);
    criterion_5_to_7(&mut report, &data);
    criterion_8(&mut report, &data);
    criterion_9(&mut report);
    println!("{} of 9 criteria failed", report.failures);
    if report.failures > 0 {
        std::process::exit(1);
    }
}
