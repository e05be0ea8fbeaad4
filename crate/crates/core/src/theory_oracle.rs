//! Exact reference quantities: expectations of the two halves of the ideal
//! penalty, the sample-level risk decomposition, and the leading-order bias
//! of two-regime histograms under a uniform design.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::{build_partition, ModelIndex, Partition};
use crate::penalties::delta_np;
use crate::quadrature;
use crate::real::Real;
use crate::regressogram::{bias_from_moments, bin_moments, fit, loss_of_values, EmptyBinPolicy};
use crate::scenario::{Dataset, IntervalMoments, RegressionScenario};

fn bin_variances<T: Real>(moments: &[IntervalMoments<T>]) -> Result<Vec<(T, T)>> {
    moments
        .iter()
        .enumerate()
        .map(|(k, m)| {
            if m.m0 > T::zero() {
                Ok((m.m0, m.noise_variance() + m.approximation_variance()))
            } else {
                Err(Error::ZeroMassBin { bin: k })
            }
        })
        .collect()
}

/// `E[p2(m)] = (1/n) sum_k sigma_k^2`.
pub fn expected_p2<T: Real>(scenario: &RegressionScenario<T>, partition: &Partition<T>, n: usize) -> Result<T> {
    let v = bin_variances(&bin_moments(scenario, partition))?;
    Ok(v.iter().map(|&(_, s2)| s2).sum::<T>() / T::count(n))
}

/// `E[p1(m)] = (1/n) sum_k (1 + delta_{n,p_k}) sigma_k^2`.
pub fn expected_p1<T: Real>(scenario: &RegressionScenario<T>, partition: &Partition<T>, n: usize) -> Result<T> {
    let v = bin_variances(&bin_moments(scenario, partition))?;
    let mut acc = T::zero();
    for (p, s2) in v {
        acc = acc + (T::one() + delta_np(n, p.min(T::one()))?) * s2;
    }
    Ok(acc / T::count(n))
}

/// Risk decomposition of one model on one sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecompositionRecord<T> {
    /// `P gamma(s_hat) - P gamma(s_m)`
    pub p1: T,
    /// `P_n gamma(s_m) - P_n gamma(s_hat)`
    pub p2: T,
    /// `(P_n - P)(gamma(s_m) - gamma(s))`
    pub delta_bar: T,
    /// `P gamma(s_hat) - P_n gamma(s_hat)`
    pub penid: T,
    /// `(P_n - P) gamma(s)`
    pub pn_minus_p_gamma_s: T,
}

/// Every term from exact bin moments (`P` parts) and sample sums (`P_n` parts).
pub fn decompose<T: Real>(
    data: &Dataset<T>,
    scenario: &RegressionScenario<T>,
    partition: &Partition<T>,
) -> Result<DecompositionRecord<T>> {
    let fitted = fit(data, partition, EmptyBinPolicy::GlobalMean)?;
    let moments = bin_moments(scenario, partition);
    let proj: Vec<T> = moments.iter().map(|m| m.conditional_mean()).collect();
    let p_gamma_s = scenario.mean_noise_variance();
    let p_gamma_hat = loss_of_values(&fitted.bin_mean, &moments) + p_gamma_s;
    let p_gamma_proj = bias_from_moments(&moments) + p_gamma_s;

    let n = T::count(data.len());
    let (mut pn_hat, mut pn_proj, mut pn_s) = (T::zero(), T::zero(), T::zero());
    for &(x, y) in &data.points {
        let k = partition.bin_index(x)?;
        let sq = |v: T| (v - y) * (v - y);
        pn_hat = pn_hat + sq(fitted.bin_mean[k]);
        pn_proj = pn_proj + sq(proj[k]);
        pn_s = pn_s + sq(scenario.s(x));
    }
    let (pn_hat, pn_proj, pn_s) = (pn_hat / n, pn_proj / n, pn_s / n);

    Ok(DecompositionRecord {
        p1: p_gamma_hat - p_gamma_proj,
        p2: pn_proj - pn_hat,
        delta_bar: (pn_proj - pn_s) - (p_gamma_proj - p_gamma_s),
        penid: p_gamma_hat - pn_hat,
        pn_minus_p_gamma_s: pn_s - p_gamma_s,
    })
}

/// Leading-order bias `alpha1 / D1^2 + alpha2 / D2^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticBias<T> {
    /// `(1/48) int_0^{1/2} s'^2`
    pub alpha1: T,
    /// `(1/48) int_{1/2}^1 s'^2`
    pub alpha2: T,
    pub predicted: T,
}

fn slope_energy<T: Real>(scenario: &RegressionScenario<T>, a: T, b: T) -> T {
    let mut cuts = vec![a];
    cuts.extend(scenario.breakpoints().into_iter().filter(|&c| c > a && c < b));
    cuts.push(b);
    cuts.windows(2)
        .map(|w| {
            quadrature::integrate(
                |x| {
                    let d = scenario.s_prime(x);
                    d * d
                },
                w[0],
                w[1],
                64,
            )
        })
        .sum()
}

/// Leading-order projection bias of `model` for a uniform design.
pub fn asymptotic_bias<T: Real>(scenario: &RegressionScenario<T>, model: &ModelIndex) -> Result<AsymptoticBias<T>> {
    let mu = scenario.design_mu;
    if mu != T::lit(0.5) {
        return Err(Error::NonUniformDesign(mu.to_f64_lossy()));
    }
    model.validate()?;
    let half = T::lit(0.5);
    let left = slope_energy(scenario, T::zero(), half);
    let right = slope_energy(scenario, half, T::one());
    let c48 = T::lit(48.0);
    let sq = |d: usize| T::count(d * d);
    let predicted = match *model {
        ModelIndex::Constant => (left + right) / T::lit(12.0),
        ModelIndex::Regular { bins } => (left + right) / (T::lit(12.0) * sq(bins)),
        ModelIndex::TwoRegime { d1, d2, split } => {
            let t = T::lit(split.value());
            let l = slope_energy(scenario, T::zero(), t);
            let r = slope_energy(scenario, t, T::one());
            let h1 = t / T::count(d1);
            let h2 = (T::one() - t) / T::count(d2);
            (l * h1 * h1 + r * h2 * h2) / T::lit(12.0)
        }
    };
    Ok(AsymptoticBias { alpha1: left / c48, alpha2: right / c48, predicted })
}

/// Projection bias of `model`, for comparison with [`asymptotic_bias`].
pub fn exact_bias<T: Real>(scenario: &RegressionScenario<T>, model: &ModelIndex) -> T {
    bias_from_moments(&bin_moments(scenario, &build_partition(model)))
}
