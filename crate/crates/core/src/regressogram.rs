//! Least-squares piecewise-constant estimators.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::Partition;
use crate::real::Real;
use crate::scenario::{Dataset, IntervalMoments, RegressionScenario};

/// What to put in a bin that received no training point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EmptyBinPolicy {
    /// Use the mean of all training responses and flag the bin.
    #[default]
    GlobalMean,
    /// Fail with [`Error::EmptyBin`].
    Strict,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FittedHistogram<T> {
    pub partition: Partition<T>,
    pub bin_mean: Vec<T>,
    pub bin_count: Vec<usize>,
    pub bin_sum: Vec<T>,
    pub bin_sumsq: Vec<T>,
    /// Bins whose value comes from the empty-bin policy.
    pub fallback_mask: Vec<bool>,
}

impl<T: Real> FittedHistogram<T> {
    pub fn predict(&self, x: T) -> T {
        self.bin_mean[self.partition.bin_index_unchecked(x)]
    }
}

pub fn fit<T: Real>(
    data: &Dataset<T>,
    partition: &Partition<T>,
    policy: EmptyBinPolicy,
) -> Result<FittedHistogram<T>> {
    if data.is_empty() {
        return Err(Error::TooFewPoints { n: 0, required: 1 });
    }
    let d = partition.bin_count();
    let mut bin_count = vec![0usize; d];
    let mut bin_sum = vec![T::zero(); d];
    let mut bin_sumsq = vec![T::zero(); d];
    for &(x, y) in &data.points {
        let k = partition.bin_index(x)?;
        bin_count[k] += 1;
        bin_sum[k] = bin_sum[k] + y;
        bin_sumsq[k] = bin_sumsq[k] + y * y;
    }
    let global = data.mean_y();
    let mut fallback_mask = vec![false; d];
    let mut bin_mean = Vec::with_capacity(d);
    for k in 0..d {
        if bin_count[k] > 0 {
            bin_mean.push(bin_sum[k] / T::count(bin_count[k]));
        } else {
            if policy == EmptyBinPolicy::Strict {
                return Err(Error::EmptyBin { bin: k });
            }
            fallback_mask[k] = true;
            bin_mean.push(global);
        }
    }
    Ok(FittedHistogram {
        partition: partition.clone(),
        bin_mean,
        bin_count,
        bin_sum,
        bin_sumsq,
        fallback_mask,
    })
}

/// `P_n gamma(fit)` on `eval_data`: mean squared residual.
pub fn empirical_risk<T: Real>(fit: &FittedHistogram<T>, eval_data: &Dataset<T>) -> T {
    if eval_data.is_empty() {
        return T::zero();
    }
    let sse: T = eval_data
        .points
        .iter()
        .map(|&(x, y)| {
            let r = fit.predict(x) - y;
            r * r
        })
        .sum();
    sse / T::count(eval_data.len())
}

/// Design moments of every bin of `partition`.
pub fn bin_moments<T: Real>(
    scenario: &RegressionScenario<T>,
    partition: &Partition<T>,
) -> Vec<IntervalMoments<T>> {
    partition
        .bins()
        .map(|(a, b)| scenario.interval_moments(a, b).expect("partition bins are nondegenerate"))
        .collect()
}

/// `sum_k (m2 - 2 v_k m1 + v_k^2 m0)`: excess loss of the histogram taking
/// value `v_k` on bin `k`.
pub fn loss_of_values<T: Real>(values: &[T], moments: &[IntervalMoments<T>]) -> T {
    values
        .iter()
        .zip(moments)
        .map(|(&v, m)| m.m2 - T::lit(2.0) * v * m.m1 + v * v * m.m0)
        .sum()
}

/// `l(s, fit) = E[(fit(X) - s(X))^2]`.
pub fn excess_loss<T: Real>(fit: &FittedHistogram<T>, scenario: &RegressionScenario<T>) -> T {
    loss_of_values(&fit.bin_mean, &bin_moments(scenario, &fit.partition))
}

/// Bias `l(s, s_m)` from precomputed bin moments. Null-mass bins contribute `m2`.
pub fn bias_from_moments<T: Real>(moments: &[IntervalMoments<T>]) -> T {
    moments
        .iter()
        .map(|m| {
            if m.m0 > T::zero() {
                (m.m2 - m.m1 * m.m1 / m.m0).max(T::zero())
            } else {
                m.m2
            }
        })
        .sum()
}

/// `l(s, s_m)` where `s_m` is the projection of `s` on the histogram model.
pub fn projection_bias<T: Real>(scenario: &RegressionScenario<T>, partition: &Partition<T>) -> T {
    bias_from_moments(&bin_moments(scenario, partition))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RiskReport<T> {
    pub empirical_risk: T,
    pub excess_loss: T,
    pub bias: T,
}

pub fn risk_report<T: Real>(
    fit: &FittedHistogram<T>,
    data: &Dataset<T>,
    scenario: &RegressionScenario<T>,
) -> RiskReport<T> {
    let moments = bin_moments(scenario, &fit.partition);
    RiskReport {
        empirical_risk: empirical_risk(fit, data),
        excess_loss: loss_of_values(&fit.bin_mean, &moments),
        bias: bias_from_moments(&moments),
    }
}
