//! Composite Gauss-Legendre quadrature.

use std::sync::OnceLock;

use crate::real::Real;

/// Nodes per panel.
pub const GAUSS_NODES: usize = 32;

struct Rule {
    nodes: [f64; GAUSS_NODES],
    weights: [f64; GAUSS_NODES],
}

fn rule() -> &'static Rule {
    static RULE: OnceLock<Rule> = OnceLock::new();
    RULE.get_or_init(|| legendre_rule(GAUSS_NODES))
}

// Newton iteration on P_n starting from the Chebyshev-like guess.
fn legendre_rule(n: usize) -> Rule {
    let mut nodes = [0.0; GAUSS_NODES];
    let mut weights = [0.0; GAUSS_NODES];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    Rule { nodes, weights }
}

/// Integrates `f` over `[a, b]` using `panels` equal-width Gauss-Legendre panels.
pub fn integrate<T: Real, F: Fn(T) -> T>(f: F, a: T, b: T, panels: usize) -> T {
    let rule = rule();
    let panels = panels.max(1);
    let width = (b - a) / T::count(panels);
    let half = width * T::lit(0.5);
    let mut total = T::zero();
    for p in 0..panels {
        let mid = a + width * (T::count(p) + T::lit(0.5));
        let mut acc = T::zero();
        for (&x, &w) in rule.nodes.iter().zip(rule.weights.iter()) {
            acc = acc + T::lit(w) * f(mid + half * T::lit(x));
        }
        total = total + acc * half;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two() {
        let r = rule();
        let s: f64 = r.weights.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
    }

    #[test]
    fn exact_for_high_degree_polynomials() {
        let v: f64 = integrate(|x: f64| x.powi(40), 0.0, 1.0, 1);
        assert!((v - 1.0 / 41.0).abs() < 1e-15);
    }

    #[test]
    fn oscillatory_integrand_with_panels() {
        let w = 32.0 * std::f64::consts::PI;
        let v: f64 = integrate(|x: f64| (w * x).sin().powi(2), 0.5, 1.0, 16);
        assert!((v - 0.25).abs() < 1e-14);
    }
}
