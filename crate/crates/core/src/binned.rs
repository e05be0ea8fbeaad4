//! Sufficient-statistic engine behind the fast criteria.
//!
//! Sorting the sample by `x` turns every histogram bin into a contiguous
//! index range, so per-bin counts, sums and sums of squares come from prefix
//! sums in `O(D log n)` per model. Responses are centered on the sample mean
//! before accumulation to limit cancellation in `sumsq - sum^2 / count`.

use std::ops::{Add, Range, Sub};

use crate::models::Partition;
use crate::real::Real;
use crate::scenario::Dataset;

/// Count, sum and sum of squares of centered responses.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Accum<T> {
    pub count: usize,
    pub sum: T,
    pub sumsq: T,
}

impl<T: Real> Accum<T> {
    pub fn push(&mut self, y: T) {
        self.count += 1;
        self.sum = self.sum + y;
        self.sumsq = self.sumsq + y * y;
    }

    pub fn mean(&self) -> Option<T> {
        (self.count > 0).then(|| self.sum / T::count(self.count))
    }

    /// Sum of squared deviations from the bin mean.
    pub fn rss(&self) -> T {
        if self.count == 0 {
            return T::zero();
        }
        (self.sumsq - self.sum * self.sum / T::count(self.count)).max(T::zero())
    }

    /// `sum (y - c)^2`, computed as `rss + count (mean - c)^2`.
    pub fn sq_dev(&self, c: T) -> T {
        match self.mean() {
            Some(m) => self.rss() + T::count(self.count) * (m - c) * (m - c),
            None => T::zero(),
        }
    }
}

impl<T: Real> Add for Accum<T> {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self { count: self.count + o.count, sum: self.sum + o.sum, sumsq: self.sumsq + o.sumsq }
    }
}

impl<T: Real> Sub for Accum<T> {
    type Output = Self;

    fn sub(self, o: Self) -> Self {
        Self { count: self.count - o.count, sum: self.sum - o.sum, sumsq: self.sumsq - o.sumsq }
    }
}

/// Means of a histogram fitted on `train`; empty bins take `fallback`.
pub fn fitted_means<T: Real>(train: &[Accum<T>], fallback: T) -> Vec<T> {
    train.iter().map(|a| a.mean().unwrap_or(fallback)).collect()
}

/// Residual sum of squares of `means` on the evaluation statistics.
pub fn sse<T: Real>(eval: &[Accum<T>], means: &[T]) -> T {
    eval.iter().zip(means).map(|(a, &m)| a.sq_dev(m)).sum()
}

/// Sample sorted by `x` with prefix sums of the centered responses.
#[derive(Debug, Clone)]
pub struct SortedSample<T> {
    x: Vec<T>,
    y: Vec<T>,
    index: Vec<usize>,
    shift: T,
    prefix: Vec<Accum<T>>,
}

impl<T: Real> SortedSample<T> {
    pub fn new(data: &Dataset<T>) -> Self {
        let shift = data.mean_y();
        let index = data.sort_order.clone();
        let x: Vec<T> = index.iter().map(|&i| data.points[i].0).collect();
        let y: Vec<T> = index.iter().map(|&i| data.points[i].1 - shift).collect();
        let mut prefix = Vec::with_capacity(y.len() + 1);
        let mut acc = Accum::default();
        prefix.push(acc);
        for &v in &y {
            acc.push(v);
            prefix.push(acc);
        }
        Self { x, y, index, shift, prefix }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Value subtracted from every response.
    pub fn shift(&self) -> T {
        self.shift
    }

    /// Centered responses in sorted order.
    pub fn centered(&self) -> &[T] {
        &self.y
    }

    /// Original dataset index of the `i`-th smallest `x`.
    pub fn original_index(&self, i: usize) -> usize {
        self.index[i]
    }

    /// Sorted positions covered by each bin.
    pub fn bin_ranges(&self, partition: &Partition<T>) -> Vec<Range<usize>> {
        let b = partition.breakpoints();
        let mut cuts = Vec::with_capacity(b.len());
        cuts.push(0);
        for &edge in &b[1..b.len() - 1] {
            cuts.push(self.x.partition_point(|&v| v < edge));
        }
        cuts.push(self.x.len());
        cuts.windows(2).map(|w| w[0]..w[1]).collect()
    }

    pub fn range_stats(&self, r: Range<usize>) -> Accum<T> {
        self.prefix[r.end] - self.prefix[r.start]
    }

    pub fn bin_stats(&self, ranges: &[Range<usize>]) -> Vec<Accum<T>> {
        ranges.iter().map(|r| self.range_stats(r.clone())).collect()
    }

    /// Statistics per bin and per group for a labeling of the sorted points.
    pub fn grouped(&self, ranges: &[Range<usize>], labels: &[usize], groups: usize) -> GroupedBins<T> {
        let mut per_bin = vec![vec![Accum::default(); groups]; ranges.len()];
        let mut totals = Vec::with_capacity(ranges.len());
        for (k, r) in ranges.iter().enumerate() {
            for i in r.clone() {
                per_bin[k][labels[i]].push(self.y[i]);
            }
            totals.push(self.range_stats(r.clone()));
        }
        GroupedBins { per_bin, totals }
    }
}

/// Output of [`SortedSample::grouped`].
#[derive(Debug, Clone)]
pub struct GroupedBins<T> {
    /// `per_bin[k][g]`
    pub per_bin: Vec<Vec<Accum<T>>>,
    pub totals: Vec<Accum<T>>,
}

impl<T: Real> GroupedBins<T> {
    pub fn group(&self, g: usize) -> Vec<Accum<T>> {
        self.per_bin.iter().map(|b| b[g]).collect()
    }

    /// Everything except group `g`.
    pub fn complement(&self, g: usize) -> Vec<Accum<T>> {
        self.per_bin.iter().zip(&self.totals).map(|(b, &t)| t - b[g]).collect()
    }
}

/// Sum of a list of per-bin statistics.
pub fn total<T: Real>(stats: &[Accum<T>]) -> Accum<T> {
    stats.iter().fold(Accum::default(), |a, &b| a + b)
}
