//! Self-check of the exact formulas against brute force and Monte Carlo.

use rayon::prelude::*;

use crate::error::Result;
use crate::models::{build_partition, ModelIndex};
use crate::penalties::{delta_np, pen_loo};
use crate::regressogram::{empirical_risk, fit, projection_bias, EmptyBinPolicy};
use crate::rng::{derive_seed, Purpose};
use crate::scenario::{make_scenario, Dataset, NoiseFn, NoiseLaw, RegressionFn, RegressionScenario};
use crate::theory_oracle::{asymptotic_bias, decompose, expected_p1, expected_p2, exact_bias};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> CheckResult {
    CheckResult { name: name.into(), passed, detail: detail.into() }
}

/// Sample mean and standard error of the mean.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}

fn binomial_delta(n: usize, p: f64) -> f64 {
    let mut coef = 1.0f64;
    let mut acc = 0.0;
    for k in 1..=n {
        coef = coef * (n - k + 1) as f64 / k as f64;
        acc += coef * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32) / k as f64;
    }
    n as f64 * p * acc - 1.0
}

fn delta_enumeration() -> CheckResult {
    let mut worst = 0.0f64;
    let mut exact_one = true;
    for n in 1..=12 {
        for j in 1..=9 {
            let p = j as f64 / 10.0;
            worst = worst.max((delta_np(n, p).unwrap_or(f64::NAN) - binomial_delta(n, p)).abs());
        }
        exact_one &= delta_np(n, 1.0f64).ok() == Some(0.0);
    }
    check(
        "delta vs binomial enumeration",
        worst <= 1e-12 && exact_one,
        format!("max abs error {worst:.2e}"),
    )
}

fn linear_bias() -> CheckResult {
    let sc = RegressionScenario::new(RegressionFn::linear(), NoiseFn::constant(1.0), 0.5, 100, NoiseLaw::Gaussian)
        .expect("valid scenario");
    let mut worst = 0.0f64;
    for d in [1usize, 2, 4, 8, 16] {
        let b: f64 = projection_bias(&sc, &build_partition(&ModelIndex::two_regime(d, d)));
        worst = worst.max((b - 1.0 / (48.0 * (d * d) as f64)).abs());
    }
    check("linear projection bias", worst <= 1e-10, format!("max abs error {worst:.2e}"))
}

fn sine_bias() -> CheckResult {
    let sc = RegressionScenario::new(RegressionFn::half_sine(), NoiseFn::constant(1.0), 0.5, 100, NoiseLaw::Gaussian)
        .expect("valid scenario");
    let rel: Vec<f64> = [4usize, 8, 16, 32]
        .iter()
        .map(|&d| {
            let m = ModelIndex::two_regime(d, d);
            let exact: f64 = exact_bias(&sc, &m);
            asymptotic_bias(&sc, &m).map_or(f64::NAN, |a| (a.predicted - exact).abs() / exact)
        })
        .collect();
    let ok = rel.windows(2).all(|w| w[1] < w[0]);
    let shown: Vec<String> = rel.iter().map(|r| format!("{r:.2e}")).collect();
    check("leading-order bias, sine", ok, format!("relative errors {}", shown.join(", ")))
}

fn decomposition_identity() -> CheckResult {
    let mut worst = 0.0f64;
    for (k, name) in crate::scenario::EXPERIMENTS.iter().enumerate() {
        let sc: RegressionScenario<f64> = make_scenario(name).expect("known experiment");
        for r in 0..25u64 {
            let data = sc.clone().with_n(80).sample(derive_seed(k as u64, r, Purpose::Data));
            let m = ModelIndex::two_regime(1 + (r as usize % 7), 1 + (r as usize % 5));
            let Ok(d) = decompose(&data, &sc, &build_partition(&m)) else { return check("decomposition identity", false, "decompose failed") };
            let rhs = d.p1 + d.p2 - d.delta_bar - d.pn_minus_p_gamma_s;
            worst = worst.max((d.penid - rhs).abs() / d.penid.abs().max(1e-6));
        }
    }
    check("decomposition identity", worst <= 1e-10, format!("max relative error {worst:.2e}"))
}

fn naive_loo(data: &Dataset<f64>, m: &ModelIndex) -> f64 {
    let p = build_partition(m);
    let n = data.len();
    let mut acc = 0.0;
    for j in 0..n {
        let train = data.subset(|i| i != j);
        let f = fit(&train, &p, EmptyBinPolicy::GlobalMean).expect("nonempty training set");
        acc += empirical_risk(&f, data) - empirical_risk(&f, &train);
    }
    acc * (n as f64 - 1.0) / n as f64
}

fn loo_closed_form() -> CheckResult {
    let sc: RegressionScenario<f64> = make_scenario("S0-1").expect("known experiment");
    let mut worst = 0.0f64;
    for r in 0..100u64 {
        let n = 5 + (r as usize % 36);
        let data = sc.clone().with_n(n).sample(derive_seed(99, r, Purpose::Data));
        let m = ModelIndex::two_regime(1 + r as usize % 4, 1 + r as usize % 6);
        let fast = pen_loo(&data, &build_partition(&m));
        let slow = naive_loo(&data, &m);
        worst = worst.max((fast - slow).abs() / slow.abs().max(1e-3));
    }
    check("leave-one-out closed form vs refits", worst <= 1e-10, format!("max relative error {worst:.2e}"))
}

/// Monte Carlo means of `(p1, p2)` with their standard errors.
pub fn monte_carlo_p(sc: &RegressionScenario<f64>, m: &ModelIndex, reps: usize, seed: u64) -> Result<[(f64, f64); 2]> {
    let partition = build_partition(m);
    let draws = (0..reps as u64)
        .into_par_iter()
        .map(|r| {
            let d = decompose(&sc.sample(derive_seed(seed, r, Purpose::Data)), sc, &partition)?;
            Ok((d.p1, d.p2))
        })
        .collect::<Result<Vec<_>>>()?;
    let p1: Vec<f64> = draws.iter().map(|d| d.0).collect();
    let p2: Vec<f64> = draws.iter().map(|d| d.1).collect();
    Ok([mean_se(&p1), mean_se(&p2)])
}

fn expectation_checks(reps: usize, seed: u64) -> Vec<CheckResult> {
    let mut out = Vec::new();
    for name in ["X1-005", "S0-1"] {
        let sc: RegressionScenario<f64> = make_scenario(name).expect("known experiment");
        for (d1, d2) in [(2, 2), (4, 4), (9, 9), (2, 16)] {
            let m = ModelIndex::two_regime(d1, d2);
            let p = build_partition(&m);
            let (Ok(e1), Ok(e2), Ok([(m1, s1), (m2, s2)])) =
                (expected_p1(&sc, &p, sc.n), expected_p2(&sc, &p, sc.n), monte_carlo_p(&sc, &m, reps, seed))
            else {
                out.push(check(format!("E[p1], E[p2] {name} {m}"), false, "computation failed"));
                continue;
            };
            let z1 = (m1 - e1).abs() / s1;
            let z2 = (m2 - e2).abs() / s2;
            out.push(check(
                format!("E[p1], E[p2] {name} {m}"),
                z1 <= 3.0 && z2 <= 3.0,
                format!("p1 {m1:.5e} vs {e1:.5e} (z {z1:.2}); p2 {m2:.5e} vs {e2:.5e} (z {z2:.2})"),
            ));
        }
    }
    out
}

/// Runs the whole suite with `reps` Monte Carlo replications per model.
pub fn run_oracle_checks(reps: usize, seed: u64) -> Vec<CheckResult> {
    let mut out = vec![delta_enumeration(), linear_bias(), sine_bias(), decomposition_identity(), loo_closed_form()];
    out.extend(expectation_checks(reps, seed));
    out
}
