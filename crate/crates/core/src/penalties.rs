//! Penalties: linear and Mallows-type, the exact expected ideal penalty, and
//! the resampling penalties (V-fold, hold-out, leave-one-out) built on the
//! stratified resampling schemes of the sorted design.

use std::ops::Range;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::binned::{fitted_means, sse, total, Accum, SortedSample};
use crate::error::{Error, Result};
use crate::models::{build_partition, ModelIndex, Partition};
use crate::real::Real;
use crate::regressogram::bin_moments;
use crate::rng::rng_from_seed;
use crate::scenario::{Dataset, IntervalMoments, RegressionScenario};

/// `delta_{n,p} = n p E[Z^{-1} 1{Z > 0}] - 1` with `Z ~ Binomial(n, p)`.
///
/// Binomial weights are built by ratio recurrences outward from the mode,
/// relative to the mode weight, and normalized by their own sum. A direction
/// stops once a weight falls below `1e-18` of the running total.
pub fn delta_np<T: Real>(n: usize, p: T) -> Result<T> {
    let pf = p.to_f64_lossy();
    if !(pf > 0.0 && pf <= 1.0) {
        return Err(Error::InvalidProbability(pf));
    }
    if n == 0 {
        return Err(Error::TooFewPoints { n, required: 1 });
    }
    if pf == 1.0 {
        return Ok(T::zero());
    }
    let np = n as f64 * pf;
    let odds = pf / (1.0 - pf);
    let mode = (((n as f64 + 1.0) * pf).floor() as usize).clamp(1, n);
    let mut mass = 1.0;
    let mut acc = np / mode as f64;

    let mut w = 1.0;
    for k in mode + 1..=n {
        w *= (n - k + 1) as f64 / k as f64 * odds;
        mass += w;
        acc += w * np / k as f64;
        if w < 1e-18 * mass {
            break;
        }
    }
    let mut w = 1.0;
    for k in (0..mode).rev() {
        w *= (k + 1) as f64 / (n - k) as f64 / odds;
        mass += w;
        if k > 0 {
            acc += w * np / k as f64;
        }
        if w < 1e-18 * mass {
            break;
        }
    }
    Ok(T::lit(acc / mass - 1.0))
}

/// `(1/n) sum_k (2 + delta_{n,p_k}) (sigma_r^2 + sigma_d^2)` from bin moments.
pub fn expected_ideal_penalty_from_moments<T: Real>(moments: &[IntervalMoments<T>], n: usize) -> Result<T> {
    let mut acc = T::zero();
    for (k, m) in moments.iter().enumerate() {
        if !(m.m0 > T::zero()) {
            return Err(Error::ZeroMassBin { bin: k });
        }
        let delta = delta_np(n, m.m0.min(T::one()))?;
        acc = acc + (T::lit(2.0) + delta) * (m.noise_variance() + m.approximation_variance());
    }
    Ok(acc / T::count(n))
}

/// `E[pen_id(m)]` for a histogram model and sample size `n`.
pub fn expected_ideal_penalty<T: Real>(
    scenario: &RegressionScenario<T>,
    partition: &Partition<T>,
    n: usize,
) -> Result<T> {
    expected_ideal_penalty_from_moments(&bin_moments(scenario, partition), n)
}

/// First-difference variance estimator on responses sorted by `x`:
/// `(1/n) sum_i (Y_{tau(2i)} - Y_{tau(2i-1)})^2`. With odd `n` the last
/// sorted point is dropped.
pub fn estimate_variance_diff<T: Real>(data: &Dataset<T>) -> Result<T> {
    let n = data.len();
    if n < 2 {
        return Err(Error::TooFewPoints { n, required: 2 });
    }
    let used = n - n % 2;
    let y: Vec<T> = data.sorted().take(used).map(|p| p.1).collect();
    let s: T = y.chunks_exact(2).map(|c| (c[1] - c[0]) * (c[1] - c[0])).sum();
    Ok(s / T::count(used))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PenaltyKind<T> {
    /// `K D_m / n`
    Linear(T),
    /// `2 sigma_hat^2 D_m / n` with the first-difference variance estimate.
    MallowsEst,
    /// `2 ||sigma||_inf^2 D_m / n` using the true noise level.
    MallowsMax,
    /// Exact `E[pen_id(m)]`.
    ExpectedIdeal,
    VFold(usize),
    HoldOut,
    LeaveOneOut,
}

/// A penalty kind with its overpenalization factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Penalty<T> {
    pub kind: PenaltyKind<T>,
    pub c_ov: T,
}

impl<T: Real> Penalty<T> {
    pub fn new(kind: PenaltyKind<T>) -> Self {
        Self { kind, c_ov: T::one() }
    }

    pub fn times(self, c_ov: T) -> Self {
        Self { c_ov, ..self }
    }
}

/// Inputs a penalty may need besides the model.
#[derive(Debug, Clone, Copy)]
pub struct PenaltyContext<'a, T> {
    pub data: &'a Dataset<T>,
    pub scenario: Option<&'a RegressionScenario<T>>,
    pub folds: Option<&'a FoldAssignment>,
    pub split: Option<&'a HoldoutSplit>,
}

impl<'a, T> PenaltyContext<'a, T> {
    pub fn new(data: &'a Dataset<T>) -> Self {
        Self { data, scenario: None, folds: None, split: None }
    }

    pub fn with_scenario(mut self, s: &'a RegressionScenario<T>) -> Self {
        self.scenario = Some(s);
        self
    }

    pub fn with_folds(mut self, f: &'a FoldAssignment) -> Self {
        self.folds = Some(f);
        self
    }

    pub fn with_split(mut self, s: &'a HoldoutSplit) -> Self {
        self.split = Some(s);
        self
    }
}

/// `c_ov` times the base penalty of `model`.
pub fn penalty_value<T: Real>(penalty: &Penalty<T>, model: &ModelIndex, ctx: &PenaltyContext<'_, T>) -> Result<T> {
    let n = ctx.data.len();
    let nf = T::count(n);
    let dim = T::count(model.dim());
    let two = T::lit(2.0);
    let base = match penalty.kind {
        PenaltyKind::Linear(k) => k * dim / nf,
        PenaltyKind::MallowsEst => two * estimate_variance_diff(ctx.data)? * dim / nf,
        PenaltyKind::MallowsMax => {
            let sc = ctx.scenario.ok_or(Error::MissingContext("the true noise level"))?;
            let s = sc.sigma_sup();
            two * s * s * dim / nf
        }
        PenaltyKind::ExpectedIdeal => {
            let sc = ctx.scenario.ok_or(Error::MissingContext("the true distribution"))?;
            expected_ideal_penalty(sc, &build_partition(model), n)?
        }
        PenaltyKind::VFold(v) => {
            let folds = ctx.folds.ok_or(Error::MissingContext("a fold assignment"))?;
            if folds.v != v {
                return Err(Error::InvalidFoldCount { v: folds.v, n });
            }
            pen_vfold(ctx.data, &build_partition(model), folds)
        }
        PenaltyKind::HoldOut => {
            let split = ctx.split.ok_or(Error::MissingContext("a hold-out split"))?;
            pen_holdout(ctx.data, &build_partition(model), split)
        }
        PenaltyKind::LeaveOneOut => pen_loo(ctx.data, &build_partition(model)),
    };
    Ok(penalty.c_ov * base)
}

/// Blocks `B_1..B_V` stratified along the sorted design.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldAssignment {
    pub v: usize,
    /// Fold label of each data point, by original index.
    pub fold_of: Vec<usize>,
}

impl FoldAssignment {
    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.v];
        for &f in &self.fold_of {
            sizes[f] += 1;
        }
        sizes
    }

    /// Labels in the order of `sample`.
    pub fn sorted_labels<T: Real>(&self, sample: &SortedSample<T>) -> Vec<usize> {
        (0..sample.len()).map(|i| self.fold_of[sample.original_index(i)]).collect()
    }
}

/// Each consecutive block of `V` sorted points is mapped bijectively onto the
/// folds; the trailing `n mod V` points go to distinct random folds.
pub fn make_vfold_assignment<T: Real>(data: &Dataset<T>, v: usize, seed: u64) -> Result<FoldAssignment> {
    make_vfold_assignment_with(data, v, &mut rng_from_seed(seed))
}

pub fn make_vfold_assignment_with<T: Real, R: Rng + ?Sized>(
    data: &Dataset<T>,
    v: usize,
    rng: &mut R,
) -> Result<FoldAssignment> {
    let n = data.len();
    if v < 2 || v > n {
        return Err(Error::InvalidFoldCount { v, n });
    }
    let mut fold_of = vec![0; n];
    let mut labels: Vec<usize> = (0..v).collect();
    for block in data.sort_order.chunks(v) {
        labels.shuffle(rng);
        for (&i, &f) in block.iter().zip(&labels) {
            fold_of[i] = f;
        }
    }
    Ok(FoldAssignment { v, fold_of })
}

/// Training set `I` holding one point of each consecutive sorted pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HoldoutSplit {
    /// Membership in `I`, by original index.
    pub in_train: Vec<bool>,
}

impl HoldoutSplit {
    pub fn train_size(&self) -> usize {
        self.in_train.iter().filter(|&&b| b).count()
    }

    pub fn train_indices(&self) -> Vec<usize> {
        (0..self.in_train.len()).filter(|&i| self.in_train[i]).collect()
    }

    /// `0` for training points, `1` otherwise, in the order of `sample`.
    pub fn sorted_labels<T: Real>(&self, sample: &SortedSample<T>) -> Vec<usize> {
        (0..sample.len()).map(|i| usize::from(!self.in_train[sample.original_index(i)])).collect()
    }
}

/// A fair coin per sorted pair picks its member of `I`; with odd `n` the last
/// sorted point joins `I` with probability 1/2.
pub fn make_holdout_split<T: Real>(data: &Dataset<T>, seed: u64) -> Result<HoldoutSplit> {
    make_holdout_split_with(data, &mut rng_from_seed(seed))
}

pub fn make_holdout_split_with<T: Real, R: Rng + ?Sized>(data: &Dataset<T>, rng: &mut R) -> Result<HoldoutSplit> {
    let n = data.len();
    if n < 2 {
        return Err(Error::TooFewPoints { n, required: 2 });
    }
    let mut in_train = vec![false; n];
    for pair in data.sort_order.chunks(2) {
        match pair {
            [a, b] => in_train[if rng.random::<bool>() { *a } else { *b }] = true,
            [a] => in_train[*a] = rng.random::<bool>(),
            _ => unreachable!(),
        }
    }
    Ok(HoldoutSplit { in_train })
}

/// V-fold penalty and V-fold cross-validation criterion of one model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VfoldScores<T> {
    pub penalty: T,
    pub cv: T,
}

/// Both V-fold quantities from grouped statistics; `labels` are fold labels
/// in sorted order.
pub fn vfold_scores<T: Real>(
    sample: &SortedSample<T>,
    ranges: &[Range<usize>],
    labels: &[usize],
    v: usize,
) -> VfoldScores<T> {
    let g = sample.grouped(ranges, labels, v);
    let n = sample.len();
    let nf = T::count(n);
    let all = total(&g.totals);
    let all_sse_basis = &g.totals;
    let mut pen = T::zero();
    let mut cv = T::zero();
    for j in 0..v {
        let fold = g.group(j);
        let fold_total = total(&fold);
        let train = g.complement(j);
        let fallback = (all - fold_total).mean().unwrap_or(T::zero());
        let means = fitted_means(&train, fallback);
        let n_train = T::count(n - fold_total.count);
        pen = pen + sse(all_sse_basis, &means) / nf - sse(&train, &means) / n_train;
        if fold_total.count > 0 {
            cv = cv + sse(&fold, &means) / T::count(fold_total.count);
        }
    }
    let vf = T::count(v);
    VfoldScores { penalty: pen * (vf - T::one()) / vf, cv: cv / vf }
}

/// Hold-out penalty and hold-out criterion; `labels` are 0 (train) / 1 (validation).
pub fn holdout_scores<T: Real>(sample: &SortedSample<T>, ranges: &[Range<usize>], labels: &[usize]) -> VfoldScores<T> {
    let g = sample.grouped(ranges, labels, 2);
    let n = sample.len();
    let train = g.group(0);
    let valid = g.group(1);
    let n_train = total(&train).count;
    let means = fitted_means(&train, total(&train).mean().unwrap_or(T::zero()));
    let nt = T::count(n_train);
    let nv = T::count(n - n_train);
    let penalty = if n_train == 0 || n_train == n {
        T::zero()
    } else {
        nt / nv * (sse(&g.totals, &means) / T::count(n) - sse(&train, &means) / nt)
    };
    let cv = if n_train == n { T::zero() } else { sse(&valid, &means) / nv };
    VfoldScores { penalty, cv }
}

/// Leave-one-out penalty in closed form from per-bin statistics.
///
/// Removing point `i` from a bin with `k >= 2` points moves its mean to
/// `(k mean - y_i) / (k - 1)`; summing the resulting residuals over the bin
/// only needs `k` and the bin's residual sum of squares. Singleton bins fall
/// back to the mean of the remaining `n - 1` responses.
pub fn loo_penalty<T: Real>(stats: &[Accum<T>]) -> T {
    let all = total(stats);
    let n = all.count;
    if n < 2 {
        return T::zero();
    }
    let nf = T::count(n);
    let rss_tot: T = stats.iter().map(|a| a.rss()).sum();
    let mut sum_e2 = T::zero();
    let mut sum_a = T::zero();
    for a in stats {
        match a.count {
            0 => {}
            1 => {
                let e = (all.sum - nf * a.sum) / (nf - T::one());
                sum_e2 = sum_e2 + e * e;
                sum_a = sum_a + rss_tot;
            }
            k => {
                let kf = T::count(k);
                let km1 = kf - T::one();
                let r = a.rss();
                sum_e2 = sum_e2 + kf * kf / (km1 * km1) * r;
                sum_a = sum_a + kf * rss_tot - kf / km1 * r;
            }
        }
    }
    (nf - T::one()) / nf * (sum_e2 / nf - sum_a / (nf * (nf - T::one())))
}

/// V-fold penalty
/// `((V-1)/V) sum_j [P_n gamma(s^(-j)) - P_n^(-j) gamma(s^(-j))]`.
pub fn pen_vfold<T: Real>(data: &Dataset<T>, partition: &Partition<T>, folds: &FoldAssignment) -> T {
    let sample = SortedSample::new(data);
    let ranges = sample.bin_ranges(partition);
    vfold_scores(&sample, &ranges, &folds.sorted_labels(&sample), folds.v).penalty
}

/// Hold-out penalty `|I|/(n-|I|) [P_n gamma(s^(I)) - P_n^(I) gamma(s^(I))]`.
pub fn pen_holdout<T: Real>(data: &Dataset<T>, partition: &Partition<T>, split: &HoldoutSplit) -> T {
    let sample = SortedSample::new(data);
    let ranges = sample.bin_ranges(partition);
    holdout_scores(&sample, &ranges, &split.sorted_labels(&sample)).penalty
}

/// Leave-one-out penalty (V-fold penalty with `V = n`, `B_j = {j}`).
pub fn pen_loo<T: Real>(data: &Dataset<T>, partition: &Partition<T>) -> T {
    let sample = SortedSample::new(data);
    let ranges = sample.bin_ranges(partition);
    loo_penalty(&sample.bin_stats(&ranges))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ModelIndex;
    use crate::regressogram::{empirical_risk, fit, EmptyBinPolicy};
    use crate::scenario::{make_scenario, NoiseFn, NoiseLaw, RegressionFn};
    use proptest::prelude::*;

    // Refit-based evaluation of the displayed V-fold formula.
    fn naive_vfold(data: &Dataset<f64>, p: &Partition<f64>, fold_of: &[usize], v: usize) -> f64 {
        let n = data.len() as f64;
        let mut acc = 0.0;
        for j in 0..v {
            let train = data.subset(|i| fold_of[i] != j);
            let f = fit(&train, p, EmptyBinPolicy::GlobalMean).unwrap();
            acc += empirical_risk(&f, data) - empirical_risk(&f, &train);
        }
        let _ = n;
        acc * (v as f64 - 1.0) / v as f64
    }

    #[test]
    fn delta_small_cases() {
        assert_eq!(delta_np(7, 1.0f64).unwrap(), 0.0);
        assert_eq!(delta_np(1, 1.0f64).unwrap(), 0.0);
        // Z ~ Bin(2, 1/2): E[Z^-1 1{Z>0}] = 1/2 * 1 + 1/4 * 1/2 = 0.625
        let d: f64 = delta_np(2, 0.5f64).unwrap();
        assert!((d + 0.375).abs() < 1e-15, "{d:e}");
        assert!(matches!(delta_np(5, 0.0f64), Err(Error::InvalidProbability(_))));
        assert!(matches!(delta_np(5, 1.5f64), Err(Error::InvalidProbability(_))));
    }

    #[test]
    fn delta_large_np_is_small() {
        let d: f64 = delta_np(20_000, 0.5).unwrap();
        assert!(d.abs() <= 0.2);
        assert!(d > 0.0 && d < 1e-3);
        let d: f64 = delta_np(10_000_000, 1e-3).unwrap();
        assert!(d.abs() < 2e-4);
    }

    #[test]
    fn delta_decreases_along_np() {
        let mut prev = f64::INFINITY;
        for np in [1usize, 10, 100, 1000, 10_000] {
            let d: f64 = delta_np(2 * np, 0.5).unwrap();
            assert!(d.abs() < prev);
            prev = d.abs();
        }
    }

    #[test]
    fn expected_ideal_penalty_homoscedastic() {
        let sc = RegressionScenario::new(
            RegressionFn::constant(1.0),
            NoiseFn::constant(0.5),
            0.5,
            100,
            NoiseLaw::Gaussian,
        )
        .unwrap();
        for d in [1usize, 4, 10] {
            let p = build_partition(&ModelIndex::Regular { bins: d });
            let n = 100;
            let delta: f64 = delta_np(n, 1.0 / d as f64).unwrap();
            let want = (2.0 + delta) * 0.25 * d as f64 / n as f64;
            assert!((expected_ideal_penalty(&sc, &p, n).unwrap() - want).abs() < 1e-14);
        }
        // large n p: converges to the Cp value 2 sigma^2 D / n
        let p = build_partition(&ModelIndex::Regular { bins: 4 });
        let n = 1_000_000;
        let v = expected_ideal_penalty(&sc, &p, n).unwrap();
        assert!((v * n as f64 / (2.0 * 0.25 * 4.0) - 1.0).abs() < 1e-5);

        let quiet = RegressionScenario::new(
            RegressionFn::constant(1.0),
            NoiseFn::constant(0.0),
            0.5,
            100,
            NoiseLaw::Gaussian,
        )
        .unwrap();
        assert_eq!(expected_ideal_penalty(&quiet, &p, 100).unwrap(), 0.0);
    }

    #[test]
    fn expected_ideal_converges_monotonically() {
        let sc: RegressionScenario<f64> = make_scenario("X1-005").unwrap();
        let p = build_partition(&ModelIndex::two_regime(4, 4));
        let moments = bin_moments(&sc, &p);
        let limit: f64 = moments.iter().map(|m| m.noise_variance() + m.approximation_variance()).sum::<f64>() * 2.0;
        let mut prev = f64::INFINITY;
        // every bin has mass 1/8, so n p = n / 8
        for np in [10usize, 100, 10_000] {
            let n = 8 * np;
            let gap = (expected_ideal_penalty(&sc, &p, n).unwrap() * n as f64 - limit).abs();
            assert!(gap < prev);
            prev = gap;
        }
    }

    #[test]
    fn variance_estimator() {
        let d = Dataset::from_xy(&[0.2, 0.1, 0.5], &[3.0, 3.0, 3.0]);
        assert_eq!(estimate_variance_diff(&d).unwrap(), 0.0);
        let d = Dataset::from_xy(&[0.7, 0.2], &[2.0, 0.0]);
        assert_eq!(estimate_variance_diff(&d).unwrap(), 2.0);
        let d = Dataset::from_xy(&[0.7], &[2.0]);
        assert!(matches!(estimate_variance_diff(&d), Err(Error::TooFewPoints { .. })));
    }

    #[test]
    fn variance_estimator_is_consistent() {
        let sc = RegressionScenario::new(RegressionFn::linear(), NoiseFn::constant(0.3), 0.5, 10_000, NoiseLaw::Gaussian)
            .unwrap();
        let d = sc.sample(17);
        let est: f64 = estimate_variance_diff(&d).unwrap();
        // sd of the estimator is about sqrt(2/n) * sigma^2 * sqrt(2) (pairs)
        let se = 0.09 * (4.0f64 / 10_000.0).sqrt();
        assert!((est - 0.09).abs() < 5.0 * se, "{est}");
    }

    #[test]
    fn penalty_values_and_scaling() {
        let sc: RegressionScenario<f64> = make_scenario("X1-005").unwrap();
        let data = sc.sample(1);
        let m = ModelIndex::two_regime(4, 6);
        let ctx = PenaltyContext::new(&data).with_scenario(&sc);
        let lin = penalty_value(&Penalty::new(PenaltyKind::Linear(0.5)), &m, &ctx).unwrap();
        assert!((lin - 0.025).abs() < 1e-15);
        let mal = penalty_value(&Penalty::new(PenaltyKind::MallowsMax), &m, &ctx).unwrap();
        assert!((mal - 0.1).abs() < 1e-15);

        let folds = make_vfold_assignment(&data, 5, 3).unwrap();
        let split = make_holdout_split(&data, 4).unwrap();
        let ctx = ctx.with_folds(&folds).with_split(&split);
        for kind in [
            PenaltyKind::Linear(0.7),
            PenaltyKind::MallowsEst,
            PenaltyKind::MallowsMax,
            PenaltyKind::ExpectedIdeal,
            PenaltyKind::VFold(5),
            PenaltyKind::HoldOut,
            PenaltyKind::LeaveOneOut,
        ] {
            let one = penalty_value(&Penalty::new(kind), &m, &ctx).unwrap();
            let two = penalty_value(&Penalty::new(kind).times(2.0), &m, &ctx).unwrap();
            assert_eq!(two, 2.0 * one);
        }

        let bare = PenaltyContext::new(&data);
        for kind in [PenaltyKind::MallowsMax, PenaltyKind::ExpectedIdeal, PenaltyKind::VFold(5), PenaltyKind::HoldOut] {
            assert!(matches!(
                penalty_value(&Penalty::new(kind), &m, &bare),
                Err(Error::MissingContext(_))
            ));
        }
    }

    #[test]
    fn fold_assignment_structure() {
        let sc: RegressionScenario<f64> = make_scenario("X1-005").unwrap();
        let data = sc.clone().with_n(4).sample(2);
        let f = make_vfold_assignment(&data, 2, 9).unwrap();
        let t = &data.sort_order;
        assert_ne!(f.fold_of[t[0]], f.fold_of[t[1]]);
        assert_ne!(f.fold_of[t[2]], f.fold_of[t[3]]);

        let data = sc.clone().with_n(23).sample(2);
        let loo = make_vfold_assignment(&data, 23, 1).unwrap();
        let mut labels = loo.fold_of.clone();
        labels.sort_unstable();
        assert_eq!(labels, (0..23).collect::<Vec<_>>());

        assert!(matches!(make_vfold_assignment(&data, 1, 0), Err(Error::InvalidFoldCount { .. })));
        assert!(matches!(make_vfold_assignment(&data, 24, 0), Err(Error::InvalidFoldCount { .. })));
    }

    #[test]
    fn holdout_split_structure() {
        let sc: RegressionScenario<f64> = make_scenario("X1-005").unwrap();
        let data = sc.clone().with_n(2).sample(1);
        let mut first = 0;
        for seed in 0..400 {
            let s = make_holdout_split(&data, seed).unwrap();
            assert_eq!(s.train_size(), 1);
            if s.in_train[data.sort_order[0]] {
                first += 1;
            }
        }
        assert!((first as f64 / 400.0 - 0.5).abs() < 0.1);

        let data = sc.with_n(50).sample(1);
        let s = make_holdout_split(&data, 5).unwrap();
        assert_eq!(s.train_size(), 25);
        for pair in data.sort_order.chunks(2) {
            assert_eq!(pair.iter().filter(|&&i| s.in_train[i]).count(), 1);
        }
    }

    #[test]
    fn constant_response_gives_zero_penalties() {
        let data: Dataset<f64> = Dataset::from_xy(&[0.1, 0.3, 0.55, 0.8, 0.9, 0.2], &[2.0; 6]);
        let p = build_partition(&ModelIndex::Constant);
        let folds = make_vfold_assignment(&data, 2, 0).unwrap();
        let split = make_holdout_split(&data, 0).unwrap();
        assert!(pen_vfold(&data, &p, &folds).abs() < 1e-15);
        assert!(pen_holdout(&data, &p, &split).abs() < 1e-15);
        assert!(pen_loo(&data, &p).abs() < 1e-15);
    }

    #[test]
    fn vfold_hand_example() {
        // sorted x: 0.1, 0.4, 0.6, 0.9 with y = 1, 3, 2, 6; folds {0.1, 0.6} / {0.4, 0.9}
        let data: Dataset<f64> = Dataset::from_xy(&[0.9, 0.1, 0.6, 0.4], &[6.0, 1.0, 2.0, 3.0]);
        let folds = FoldAssignment { v: 2, fold_of: vec![1, 0, 0, 1] };
        let p = build_partition(&ModelIndex::Constant);
        // fold 0 out: train {3, 6}, mean 4.5; P_n: (12.25 + 2.25 + 6.25 + 2.25)/4 = 5.75; train risk 2.25
        // fold 1 out: train {1, 2}, mean 1.5; P_n: (0.25 + 0.25 + 2.25 + 20.25)/4 = 5.75; train risk 0.25
        let want = 0.5 * ((5.75 - 2.25) + (5.75 - 0.25));
        assert!((pen_vfold(&data, &p, &folds) - want).abs() < 1e-14);
    }

    #[test]
    fn holdout_hand_example() {
        // sorted x: 0.1, 0.3 | 0.6, 0.8; y = 1, 2, 4, 8; I = {0.1, 0.8}
        let data: Dataset<f64> = Dataset::from_xy(&[0.1, 0.3, 0.6, 0.8], &[1.0, 2.0, 4.0, 8.0]);
        let split = HoldoutSplit { in_train: vec![true, false, false, true] };
        let p = build_partition(&ModelIndex::Regular { bins: 2 });
        // fit on I: bin means 1 and 8; P_n = (0 + 1 + 16 + 0)/4; P_n^(I) = 0
        let want = 1.0 * (17.0 / 4.0 - 0.0);
        assert!((pen_holdout(&data, &p, &split) - want).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn loo_matches_refits(seed in 0u64..10_000, n in 4usize..40, d1 in 1usize..5, d2 in 1usize..6) {
            let sc: RegressionScenario<f64> = make_scenario("S0-1").unwrap();
            let data = sc.with_n(n).sample(seed);
            let p = build_partition(&ModelIndex::two_regime(d1, d2));
            let fold_of: Vec<usize> = (0..n).collect();
            let naive = naive_vfold(&data, &p, &fold_of, n);
            let fast = pen_loo(&data, &p);
            prop_assert!((fast - naive).abs() <= 1e-10 * naive.abs().max(1e-3), "{fast} vs {naive}");
        }

        #[test]
        fn vfold_matches_refits(seed in 0u64..10_000, n in 6usize..60, v in 2usize..6) {
            let sc: RegressionScenario<f64> = make_scenario("X1-005").unwrap();
            let data = sc.with_n(n).sample(seed);
            let p = build_partition(&ModelIndex::two_regime(3, 4));
            let folds = make_vfold_assignment(&data, v.min(n), seed ^ 7).unwrap();
            let naive = naive_vfold(&data, &p, &folds.fold_of, folds.v);
            let fast = pen_vfold(&data, &p, &folds);
            prop_assert!((fast - naive).abs() <= 1e-10 * naive.abs().max(1e-3));
            let sizes = folds.fold_sizes();
            for s in sizes {
                prop_assert!((s as f64 - n as f64 / folds.v as f64).abs() < 1.0);
            }
        }

        #[test]
        fn vfold_invariant_under_relabeling(seed in 0u64..1000, shift in 1usize..5) {
            let sc: RegressionScenario<f64> = make_scenario("XS1-05").unwrap();
            let data = sc.with_n(80).sample(seed);
            let p = build_partition(&ModelIndex::two_regime(5, 7));
            let folds = make_vfold_assignment(&data, 5, seed).unwrap();
            let relabeled = FoldAssignment { v: 5, fold_of: folds.fold_of.iter().map(|f| (f + shift) % 5).collect() };
            let a = pen_vfold(&data, &p, &folds);
            let b = pen_vfold(&data, &p, &relabeled);
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn holdout_matches_refit(seed in 0u64..10_000, n in 3usize..50) {
            let sc: RegressionScenario<f64> = make_scenario("X1-005").unwrap();
            let data = sc.with_n(n).sample(seed);
            let p = build_partition(&ModelIndex::two_regime(2, 3));
            let split = make_holdout_split(&data, seed + 1).unwrap();
            let train = data.subset(|i| split.in_train[i]);
            let f = fit(&train, &p, EmptyBinPolicy::GlobalMean).unwrap();
            let k = train.len() as f64;
            let naive = k / (n as f64 - k) * (empirical_risk(&f, &data) - empirical_risk(&f, &train));
            let fast = pen_holdout(&data, &p, &split);
            prop_assert!((fast - naive).abs() <= 1e-10 * naive.abs().max(1e-3));
        }

        #[test]
        fn delta_exceeds_minus_one(n in 1usize..400, p in 0.001f64..1.0) {
            let d: f64 = delta_np(n, p).unwrap();
            prop_assert!(d > -1.0);
        }
    }
}
