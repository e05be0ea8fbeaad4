//! Synthetic heteroscedastic regression designs.
//!
//! A scenario fixes the regression function `s`, the noise level `sigma`, the
//! two-level design density (mass `mu` on `[0, 1/2]`) and the sample size.
//! Data follow `Y = s(X) + sigma(X) * eps` with `eps` of mean 0 and variance 1.

use std::ops::Add;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::quadrature;
use crate::real::Real;
use crate::rng::rng_from_seed;

/// `amplitude * sin(frequency * x + phase)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sinusoid<T> {
    pub amplitude: T,
    pub frequency: T,
    pub phase: T,
}

/// Polynomial plus an optional sinusoid; smooth on its piece.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothPiece<T> {
    /// Coefficients in increasing degree.
    pub poly: Vec<T>,
    pub sine: Option<Sinusoid<T>>,
}

impl<T: Real> SmoothPiece<T> {
    pub fn polynomial(poly: Vec<T>) -> Self {
        Self { poly, sine: None }
    }

    pub fn value(&self, x: T) -> T {
        let p = self.poly.iter().rev().fold(T::zero(), |acc, &c| acc * x + c);
        match &self.sine {
            Some(s) => p + s.amplitude * (s.frequency * x + s.phase).sin(),
            None => p,
        }
    }

    pub fn derivative(&self, x: T) -> T {
        let mut d = T::zero();
        for (k, &c) in self.poly.iter().enumerate().skip(1).rev() {
            d = d * x + c * T::count(k);
        }
        match &self.sine {
            Some(s) => d + s.amplitude * s.frequency * (s.frequency * x + s.phase).cos(),
            None => d,
        }
    }

    fn frequency(&self) -> T {
        self.sine.as_ref().map_or(T::zero(), |s| s.frequency.abs())
    }
}

/// Function defined piece by piece on `[0, 1)`.
///
/// Piece `i` covers `(breaks[i-1], breaks[i]]`; the first piece includes 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Piecewise<T, P> {
    breaks: Vec<T>,
    pieces: Vec<P>,
}

impl<T: Real, P> Piecewise<T, P> {
    pub fn new(breaks: Vec<T>, pieces: Vec<P>) -> Result<Self> {
        if pieces.len() != breaks.len() + 1 {
            return Err(Error::InvalidScenario(format!(
                "{} pieces need {} interior breakpoints, got {}",
                pieces.len(),
                pieces.len().saturating_sub(1),
                breaks.len()
            )));
        }
        let mut prev = T::zero();
        for &b in &breaks {
            if !(b > prev && b < T::one()) {
                return Err(Error::InvalidScenario(
                    "breakpoints must be strictly increasing inside (0, 1)".into(),
                ));
            }
            prev = b;
        }
        Ok(Self { breaks, pieces })
    }

    pub fn single(piece: P) -> Self {
        Self { breaks: Vec::new(), pieces: vec![piece] }
    }

    pub fn breaks(&self) -> &[T] {
        &self.breaks
    }

    pub fn pieces(&self) -> &[P] {
        &self.pieces
    }

    pub fn piece_at(&self, x: T) -> &P {
        &self.pieces[self.breaks.partition_point(|&b| b < x)]
    }
}

pub type RegressionFn<T> = Piecewise<T, SmoothPiece<T>>;
pub type NoiseFn<T> = Piecewise<T, T>;

impl<T: Real> RegressionFn<T> {
    pub fn value(&self, x: T) -> T {
        self.piece_at(x).value(x)
    }

    pub fn derivative(&self, x: T) -> T {
        self.piece_at(x).derivative(x)
    }

    /// `s(x) = c`.
    pub fn constant(c: T) -> Self {
        Self::single(SmoothPiece::polynomial(vec![c]))
    }

    /// `s(x) = x`.
    pub fn linear() -> Self {
        Self::single(SmoothPiece::polynomial(vec![T::zero(), T::one()]))
    }

    /// `s(x) = sin(pi x)`.
    pub fn half_sine() -> Self {
        Self::single(SmoothPiece {
            poly: Vec::new(),
            sine: Some(Sinusoid { amplitude: T::one(), frequency: T::PI(), phase: T::zero() }),
        })
    }

    /// `x/4` on `[0, 1/2]`, then `1/8 + (2/3) sin(16 pi x)`.
    pub fn linear_then_sine() -> Self {
        let left = SmoothPiece::polynomial(vec![T::zero(), T::lit(0.25)]);
        let right = SmoothPiece {
            poly: vec![T::lit(0.125)],
            sine: Some(Sinusoid {
                amplitude: T::lit(2.0) / T::lit(3.0),
                frequency: T::lit(16.0) * T::PI(),
                phase: T::zero(),
            }),
        };
        Self { breaks: vec![T::lit(0.5)], pieces: vec![left, right] }
    }
}

impl<T: Real> NoiseFn<T> {
    pub fn value(&self, x: T) -> T {
        *self.piece_at(x)
    }

    pub fn constant(level: T) -> Self {
        Self::single(level)
    }

    /// `left` on `[0, 1/2]`, `right` on `(1/2, 1)`.
    pub fn two_level(left: T, right: T) -> Self {
        Self { breaks: vec![T::lit(0.5)], pieces: vec![left, right] }
    }

    pub fn sup(&self) -> T {
        self.pieces.iter().fold(T::zero(), |m, &v| m.max(v.abs()))
    }
}

/// Law of the standardized noise `eps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseLaw<T> {
    Gaussian,
    /// Standard normal conditioned on `|z| <= bound`, rescaled to unit variance.
    TruncatedGaussian { bound: T },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionScenario<T> {
    pub regression: RegressionFn<T>,
    pub noise: NoiseFn<T>,
    /// Probability of `[0, 1/2]` under the design.
    pub design_mu: T,
    pub n: usize,
    pub noise_law: NoiseLaw<T>,
}

/// Integrals over one interval against the design density.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct IntervalMoments<T> {
    /// `P(X in [a, b))`
    pub m0: T,
    /// `int s p`
    pub m1: T,
    /// `int s^2 p`
    pub m2: T,
    /// `int sigma^2 p`
    pub v2: T,
}

impl<T: Real> Add for IntervalMoments<T> {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self { m0: self.m0 + o.m0, m1: self.m1 + o.m1, m2: self.m2 + o.m2, v2: self.v2 + o.v2 }
    }
}

impl<T: Real> IntervalMoments<T> {
    /// `E[s(X) | X in I]`, zero on a null interval.
    pub fn conditional_mean(&self) -> T {
        if self.m0 > T::zero() {
            self.m1 / self.m0
        } else {
            T::zero()
        }
    }

    /// `E[(s(X) - s_I)^2 | X in I]`.
    pub fn approximation_variance(&self) -> T {
        if self.m0 > T::zero() {
            ((self.m2 - self.m1 * self.m1 / self.m0) / self.m0).max(T::zero())
        } else {
            T::zero()
        }
    }

    /// `E[sigma(X)^2 | X in I]`.
    pub fn noise_variance(&self) -> T {
        if self.m0 > T::zero() {
            self.v2 / self.m0
        } else {
            T::zero()
        }
    }
}

/// Sample with its permutation sorting the design points.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    pub points: Vec<(T, T)>,
    /// `points[sort_order[i]].0` is nondecreasing in `i`.
    pub sort_order: Vec<usize>,
}

impl<T: Real> Dataset<T> {
    pub fn new(points: Vec<(T, T)>) -> Self {
        let mut sort_order: Vec<usize> = (0..points.len()).collect();
        sort_order.sort_by(|&i, &j| {
            points[i].0.partial_cmp(&points[j].0).unwrap_or(std::cmp::Ordering::Equal)
        });
        Self { points, sort_order }
    }

    pub fn from_xy(x: &[T], y: &[T]) -> Self {
        assert_eq!(x.len(), y.len(), "x and y lengths differ");
        Self::new(x.iter().copied().zip(y.iter().copied()).collect())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Points in nondecreasing `x` order.
    pub fn sorted(&self) -> impl Iterator<Item = (T, T)> + '_ {
        self.sort_order.iter().map(move |&i| self.points[i])
    }

    /// Subsample keeping the points whose original index satisfies `keep`.
    pub fn subset(&self, mut keep: impl FnMut(usize) -> bool) -> Self {
        Self::new(
            self.points.iter().enumerate().filter(|(i, _)| keep(*i)).map(|(_, &p)| p).collect(),
        )
    }

    pub fn mean_y(&self) -> T {
        if self.points.is_empty() {
            return T::zero();
        }
        self.points.iter().map(|p| p.1).sum::<T>() / T::count(self.points.len())
    }
}

impl<T: Real> RegressionScenario<T> {
    pub fn new(
        regression: RegressionFn<T>,
        noise: NoiseFn<T>,
        design_mu: T,
        n: usize,
        noise_law: NoiseLaw<T>,
    ) -> Result<Self> {
        let sc = Self { regression, noise, design_mu, n, noise_law };
        sc.validate()?;
        Ok(sc)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.design_mu > T::zero() && self.design_mu < T::one()) {
            return Err(Error::InvalidScenario("design mass mu must lie in (0, 1)".into()));
        }
        if self.n == 0 {
            return Err(Error::InvalidScenario("sample size must be positive".into()));
        }
        if self.noise.pieces().iter().any(|&v| !(v >= T::zero())) {
            return Err(Error::InvalidScenario("noise level must be nonnegative".into()));
        }
        if let NoiseLaw::TruncatedGaussian { bound } = self.noise_law {
            if !(bound > T::zero()) {
                return Err(Error::InvalidScenario("truncation bound must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn with_n(mut self, n: usize) -> Self {
        self.n = n;
        self
    }

    pub fn s(&self, x: T) -> T {
        self.regression.value(x)
    }

    pub fn s_prime(&self, x: T) -> T {
        self.regression.derivative(x)
    }

    pub fn sigma(&self, x: T) -> T {
        self.noise.value(x)
    }

    pub fn density(&self, x: T) -> T {
        let two = T::lit(2.0);
        if x <= T::lit(0.5) {
            two * self.design_mu
        } else {
            two * (T::one() - self.design_mu)
        }
    }

    pub fn design_cdf(&self, x: T) -> T {
        let half = T::lit(0.5);
        let two = T::lit(2.0);
        if x <= T::zero() {
            T::zero()
        } else if x <= half {
            two * self.design_mu * x
        } else if x < T::one() {
            self.design_mu + two * (T::one() - self.design_mu) * (x - half)
        } else {
            T::one()
        }
    }

    /// Inverse of [`design_cdf`](Self::design_cdf) on `[0, 1)`.
    pub fn design_quantile(&self, u: T) -> T {
        let two = T::lit(2.0);
        let x = if u < self.design_mu {
            u / (two * self.design_mu)
        } else {
            T::lit(0.5) + (u - self.design_mu) / (two * (T::one() - self.design_mu))
        };
        // largest representable value below 1
        x.min(T::one() - T::epsilon() * T::lit(0.5))
    }

    /// `||sigma||_inf`.
    pub fn sigma_sup(&self) -> T {
        self.noise.sup()
    }

    /// `E[sigma(X)^2]`, which is also `P gamma(s)`.
    pub fn mean_noise_variance(&self) -> T {
        self.interval_moments(T::zero(), T::one()).map(|m| m.v2).unwrap_or(T::zero())
    }

    /// Every point where `s`, `sigma` or the design density may jump or kink.
    pub fn breakpoints(&self) -> Vec<T> {
        let mut all: Vec<T> = self.regression.breaks().to_vec();
        all.extend_from_slice(self.noise.breaks());
        all.push(T::lit(0.5));
        all.sort_by(|a, b| a.partial_cmp(b).unwrap());
        all.dedup();
        all
    }

    /// Moments of `[a, b)` against the design, split at every breakpoint and
    /// integrated with composite Gauss-Legendre on each smooth stretch.
    pub fn interval_moments(&self, a: T, b: T) -> Result<IntervalMoments<T>> {
        if !(a < b) || a < T::zero() || b > T::one() {
            return Err(Error::DegenerateInterval { a: a.to_f64_lossy(), b: b.to_f64_lossy() });
        }
        let mut cuts = vec![a];
        cuts.extend(self.breakpoints().into_iter().filter(|&c| c > a && c < b));
        cuts.push(b);
        let mut total = IntervalMoments::default();
        for w in cuts.windows(2) {
            total = total + self.smooth_moments(w[0], w[1]);
        }
        Ok(total)
    }

    // [u, v) lies inside one piece of s, sigma and the density.
    fn smooth_moments(&self, u: T, v: T) -> IntervalMoments<T> {
        let mid = (u + v) * T::lit(0.5);
        let d = self.density(mid);
        let sig = self.sigma(mid);
        let piece = self.regression.piece_at(mid);
        let len = v - u;
        // each panel spans at most half a period of the sinusoid
        let panels = (piece.frequency() * len / T::PI()).ceil().to_usize().unwrap_or(1).max(1);
        let m1 = quadrature::integrate(|x| piece.value(x), u, v, panels);
        let m2 = quadrature::integrate(
            |x| {
                let s = piece.value(x);
                s * s
            },
            u,
            v,
            panels,
        );
        IntervalMoments { m0: d * len, m1: d * m1, m2: d * m2, v2: d * sig * sig * len }
    }

    /// Draws a dataset; identical seeds give identical datasets.
    pub fn sample(&self, seed: u64) -> Dataset<T> {
        let mut rng = rng_from_seed(seed);
        self.sample_with(&mut rng)
    }

    pub fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R) -> Dataset<T> {
        let scale = match self.noise_law {
            NoiseLaw::Gaussian => T::one(),
            NoiseLaw::TruncatedGaussian { bound } => truncated_normal_sd(bound).recip(),
        };
        let points = (0..self.n)
            .map(|_| {
                let x = self.design_quantile(T::lit(rng.random::<f64>()));
                let eps = match self.noise_law {
                    NoiseLaw::Gaussian => T::lit(rng.sample::<f64, _>(StandardNormal)),
                    NoiseLaw::TruncatedGaussian { bound } => {
                        let c = bound.to_f64_lossy();
                        loop {
                            let z: f64 = rng.sample(StandardNormal);
                            if z.abs() <= c {
                                break T::lit(z) * scale;
                            }
                        }
                    }
                };
                (x, self.s(x) + self.sigma(x) * eps)
            })
            .collect();
        Dataset::new(points)
    }
}

/// Standard deviation of N(0,1) conditioned on `|z| <= c`.
fn truncated_normal_sd<T: Real>(c: T) -> T {
    let phi = |z: T| (-z * z * T::lit(0.5)).exp();
    let panels = (c.to_f64_lossy().ceil() as usize).max(1) * 4;
    let mass = quadrature::integrate(phi, -c, c, panels);
    let second = quadrature::integrate(|z| z * z * phi(z), -c, c, panels);
    (second / mass).sqrt()
}

/// Names accepted by [`make_scenario`].
pub const EXPERIMENTS: [&str; 4] = ["X1-005", "S0-1", "XS1-05", "X1-005mu02"];

fn normalize_name(name: &str) -> String {
    name.trim().replace("--", "-").replace('μ', "mu").to_ascii_lowercase()
}

/// Builds one of the four reference experiments.
///
/// | name         | s(x)               | sigma on [0,1/2] / (1/2,1) | n    | mu  |
/// |--------------|--------------------|----------------------------|------|-----|
/// | `X1-005`     | x                  | 1 / 0.05                   | 200  | 1/2 |
/// | `S0-1`       | sin(pi x)          | 0 / 1                      | 200  | 1/2 |
/// | `XS1-05`     | x/4, then sine     | 1 / 0.5                    | 500  | 1/2 |
/// | `X1-005mu02` | x                  | 1 / 0.05                   | 1000 | 1/5 |
pub fn make_scenario<T: Real>(name: &str) -> Result<RegressionScenario<T>> {
    let half = T::lit(0.5);
    let (regression, noise, n, mu) = match normalize_name(name).as_str() {
        "x1-005" => (RegressionFn::linear(), NoiseFn::two_level(T::one(), T::lit(0.05)), 200, half),
        "s0-1" => (RegressionFn::half_sine(), NoiseFn::two_level(T::zero(), T::one()), 200, half),
        "xs1-05" => (RegressionFn::linear_then_sine(), NoiseFn::two_level(T::one(), half), 500, half),
        "x1-005mu02" => (
            RegressionFn::linear(),
            NoiseFn::two_level(T::one(), T::lit(0.05)),
            1000,
            T::lit(0.2),
        ),
        _ => return Err(Error::UnknownExperiment(name.to_string())),
    };
    RegressionScenario::new(regression, noise, mu, n, NoiseLaw::Gaussian)
}
