//! Histogram partitions of `[0, 1)` and the model collections built from them.

use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::real::Real;

/// Split position `t` of a two-regime histogram, compared bitwise.
#[derive(Debug, Clone, Copy)]
pub struct Split(f64);

impl Split {
    pub const HALF: Split = Split(0.5);

    pub fn new(t: f64) -> Result<Self> {
        if t > 0.0 && t < 1.0 {
            Ok(Split(t))
        } else {
            Err(Error::InvalidModel(format!("split {t} outside (0, 1)")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl PartialEq for Split {
    fn eq(&self, other: &Self) -> bool {
        self.0.to_bits() == other.0.to_bits()
    }
}

impl Eq for Split {}

impl Hash for Split {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.to_bits().hash(state);
    }
}

impl PartialOrd for Split {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Split {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Identifies one histogram model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelIndex {
    /// Constant functions on `[0, 1)`.
    Constant,
    /// `bins` equal-width bins.
    Regular { bins: usize },
    /// `d1` equal bins on `[0, t)`, `d2` equal bins on `[t, 1)`.
    TwoRegime { d1: usize, d2: usize, split: Split },
}

impl ModelIndex {
    pub fn two_regime(d1: usize, d2: usize) -> Self {
        ModelIndex::TwoRegime { d1, d2, split: Split::HALF }
    }

    /// Vector-space dimension `D_m` (number of bins).
    pub fn dim(&self) -> usize {
        match *self {
            ModelIndex::Constant => 1,
            ModelIndex::Regular { bins } => bins,
            ModelIndex::TwoRegime { d1, d2, .. } => d1 + d2,
        }
    }

    /// `(D1, D2)` for two-regime models.
    pub fn sides(&self) -> Option<(usize, usize)> {
        match *self {
            ModelIndex::TwoRegime { d1, d2, .. } => Some((d1, d2)),
            _ => None,
        }
    }

    /// Deterministic tie-break key: smaller dimension, then smaller `D1`,
    /// then the constant model first.
    pub fn tie_key(&self) -> (usize, usize, u8, Option<Split>) {
        match *self {
            ModelIndex::Constant => (1, 0, 0, None),
            ModelIndex::Regular { bins } => (bins, bins, 1, None),
            ModelIndex::TwoRegime { d1, d2, split } => (d1 + d2, d1, 2, Some(split)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ModelIndex::Constant => Ok(()),
            ModelIndex::Regular { bins } if bins >= 1 => Ok(()),
            ModelIndex::TwoRegime { d1, d2, split } if d1 >= 1 && d2 >= 1 => {
                Split::new(split.0).map(|_| ())
            }
            _ => Err(Error::InvalidModel(format!("{self}"))),
        }
    }
}

impl fmt::Display for ModelIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ModelIndex::Constant => write!(f, "const"),
            ModelIndex::Regular { bins } => write!(f, "reg{bins}"),
            ModelIndex::TwoRegime { d1, d2, split } if split == Split::HALF => {
                write!(f, "{d1}:{d2}")
            }
            ModelIndex::TwoRegime { d1, d2, split } => write!(f, "{d1}:{d2}@{}", split.0),
        }
    }
}

impl FromStr for ModelIndex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidModel(format!("cannot parse model `{s}`"));
        let s = s.trim();
        if s == "const" {
            return Ok(ModelIndex::Constant);
        }
        if let Some(rest) = s.strip_prefix("reg") {
            return Ok(ModelIndex::Regular { bins: rest.parse().map_err(|_| bad())? });
        }
        let (dims, split) = match s.split_once('@') {
            Some((d, t)) => (d, Split::new(t.parse().map_err(|_| bad())?)?),
            None => (s, Split::HALF),
        };
        let (a, b) = dims.split_once(':').ok_or_else(bad)?;
        Ok(ModelIndex::TwoRegime {
            d1: a.parse().map_err(|_| bad())?,
            d2: b.parse().map_err(|_| bad())?,
            split,
        })
    }
}

/// Ordered breakpoints `0 = b_0 < b_1 < ... < b_D = 1`; bin `k` is `[b_k, b_{k+1})`.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition<T> {
    breakpoints: Vec<T>,
}

impl<T: Real> Partition<T> {
    pub fn from_breakpoints(breakpoints: Vec<T>) -> Result<Self> {
        let ok = breakpoints.len() >= 2
            && breakpoints[0] == T::zero()
            && *breakpoints.last().unwrap() == T::one()
            && breakpoints.windows(2).all(|w| w[0] < w[1]);
        if ok {
            Ok(Self { breakpoints })
        } else {
            Err(Error::InvalidModel("breakpoints must increase strictly from 0 to 1".into()))
        }
    }

    pub fn breakpoints(&self) -> &[T] {
        &self.breakpoints
    }

    /// Number of bins `D`.
    pub fn bin_count(&self) -> usize {
        self.breakpoints.len() - 1
    }

    pub fn bin(&self, k: usize) -> (T, T) {
        (self.breakpoints[k], self.breakpoints[k + 1])
    }

    pub fn bins(&self) -> impl Iterator<Item = (T, T)> + '_ {
        self.breakpoints.windows(2).map(|w| (w[0], w[1]))
    }

    /// Zero-based index of the right-open bin containing `x`.
    pub fn bin_index(&self, x: T) -> Result<usize> {
        if !(x >= T::zero() && x < T::one()) {
            return Err(Error::OutOfRange { x: x.to_f64_lossy() });
        }
        Ok(self.bin_index_unchecked(x))
    }

    #[inline]
    pub(crate) fn bin_index_unchecked(&self, x: T) -> usize {
        let interior = &self.breakpoints[1..self.breakpoints.len() - 1];
        interior.partition_point(|&b| b <= x)
    }
}

/// Partition of a model. Bin edges are `t k / D1` on the left and
/// `(t (D2 - k) + k) / D2` on the right, which for `t = 1/2` are the exact
/// rationals `k / (2 D1)` and `(D2 + k) / (2 D2)` rounded once.
pub fn build_partition<T: Real>(index: &ModelIndex) -> Partition<T> {
    let breakpoints = match *index {
        ModelIndex::Constant => vec![T::zero(), T::one()],
        ModelIndex::Regular { bins } => {
            (0..=bins).map(|k| T::count(k) / T::count(bins)).collect()
        }
        ModelIndex::TwoRegime { d1, d2, split } => {
            let t = T::lit(split.0);
            let mut b: Vec<T> = (0..d1).map(|k| t * T::count(k) / T::count(d1)).collect();
            b.push(t);
            b.extend(
                (1..=d2).map(|k| (t * T::count(d2 - k) + T::count(k)) / T::count(d2)),
            );
            b
        }
    };
    Partition { breakpoints }
}

/// Shape of a model collection.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// Regular histograms with `1..=M_n` bins.
    Regular,
    /// Two bin sizes, split at 1/2.
    TwoRegimeHalf,
    /// Two bin sizes, split at a fixed `t`.
    TwoRegimeAt(Split),
    /// Union over a grid of splits; `None` means `{k / sqrt(n)}`.
    TwoRegimeVariable(Option<Vec<Split>>),
}

/// Rule for the maximal dimension `M_n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaxDimRule {
    /// `floor(n / ln n)`
    Log,
    /// `floor(n / (ln n)^2)`
    LogSquared,
    Explicit(usize),
}

impl MaxDimRule {
    pub fn max_dim(self, n: usize) -> usize {
        let nf = n as f64;
        let m = match self {
            MaxDimRule::Log => (nf / nf.ln()).floor() as usize,
            MaxDimRule::LogSquared => (nf / nf.ln().powi(2)).floor() as usize,
            MaxDimRule::Explicit(m) => m,
        };
        m.min(n)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollectionSpec {
    pub family: Family,
    pub max_dim: MaxDimRule,
}

impl CollectionSpec {
    pub fn two_regime_half(max_dim: MaxDimRule) -> Self {
        Self { family: Family::TwoRegimeHalf, max_dim }
    }
}

/// Default grid `{k / sqrt(n) : 1 <= k <= sqrt(n) - 1}`.
pub fn default_split_grid(n: usize) -> Vec<Split> {
    let root = (n as f64).sqrt();
    let kmax = (root - 1.0).floor().max(0.0) as usize;
    (1..=kmax).filter_map(|k| Split::new(k as f64 / root).ok()).collect()
}

/// Lists the models of a collection for sample size `n`.
///
/// Two-regime families return the constant model followed by every
/// `(D1, D2)` with `1 <= D_i <= floor(M_n / 2)`, `D1` varying slowest.
pub fn enumerate_models(spec: &CollectionSpec, n: usize) -> Result<Vec<ModelIndex>> {
    if n < 2 {
        return Err(Error::TooFewPoints { n, required: 2 });
    }
    if let MaxDimRule::Explicit(m) = spec.max_dim {
        if m > n {
            return Err(Error::InvalidConfig(format!("maximal dimension {m} exceeds n = {n}")));
        }
    }
    let max_dim = spec.max_dim.max_dim(n);
    if max_dim < 2 {
        return Err(Error::EmptyCollection { max_dim });
    }
    let half = max_dim / 2;
    let grid = |split: Split| {
        (1..=half).flat_map(move |d1| {
            (1..=half).map(move |d2| ModelIndex::TwoRegime { d1, d2, split })
        })
    };
    let models = match &spec.family {
        Family::Regular => (1..=max_dim).map(|bins| ModelIndex::Regular { bins }).collect(),
        Family::TwoRegimeHalf => std::iter::once(ModelIndex::Constant).chain(grid(Split::HALF)).collect(),
        Family::TwoRegimeAt(t) => std::iter::once(ModelIndex::Constant).chain(grid(*t)).collect(),
        Family::TwoRegimeVariable(splits) => {
            let splits = splits.clone().unwrap_or_else(|| default_split_grid(n));
            let mut v = vec![ModelIndex::Constant];
            for t in splits {
                v.extend(grid(t));
            }
            v
        }
    };
    Ok(models)
}

impl FromStr for Family {
    type Err = Error;

    /// `reg`, `reg-half`, `reg-t=<t>` or `reg-var`.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "reg" => Ok(Family::Regular),
            "reg-half" => Ok(Family::TwoRegimeHalf),
            "reg-var" => Ok(Family::TwoRegimeVariable(None)),
            other => match other.strip_prefix("reg-t=") {
                Some(t) => {
                    let t: f64 = t
                        .parse()
                        .map_err(|_| Error::InvalidConfig(format!("bad split in `{other}`")))?;
                    Ok(Family::TwoRegimeAt(Split::new(t)?))
                }
                None => Err(Error::InvalidConfig(format!("unknown collection `{other}`"))),
            },
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Regular => write!(f, "reg"),
            Family::TwoRegimeHalf => write!(f, "reg-half"),
            Family::TwoRegimeAt(t) => write!(f, "reg-t={}", t.0),
            Family::TwoRegimeVariable(_) => write!(f, "reg-var"),
        }
    }
}

impl FromStr for MaxDimRule {
    type Err = Error;

    /// `log`, `log2` or an explicit integer.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "log" => Ok(MaxDimRule::Log),
            "log2" => Ok(MaxDimRule::LogSquared),
            other => other
                .parse()
                .map(MaxDimRule::Explicit)
                .map_err(|_| Error::InvalidConfig(format!("unknown max-dimension rule `{other}`"))),
        }
    }
}

impl fmt::Display for MaxDimRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MaxDimRule::Log => write!(f, "log"),
            MaxDimRule::LogSquared => write!(f, "log2"),
            MaxDimRule::Explicit(m) => write!(f, "{m}"),
        }
    }
}
