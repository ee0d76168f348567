//! Reference-element machinery on `[0, 1]`: Gauss–Legendre rules and
//! equispaced Lagrange shape functions.

use alloc::vec;
use alloc::vec::Vec;

/// Gauss–Legendre rule mapped to `[0, 1]`.
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    /// `n`-point rule, exact for polynomials of degree `2n − 1`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "a quadrature rule needs at least one point");
        let mut points = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            // Chebyshev-like initial guess, then Newton on P_n.
            let mut x = libm::cos(core::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5));
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            // map [-1, 1] -> [0, 1]
            points[i] = 0.5 * (1.0 - x);
            points[n - 1 - i] = 0.5 * (1.0 + x);
            weights[i] = 0.5 * w;
            weights[n - 1 - i] = 0.5 * w;
        }
        Self { points, weights }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Lagrange basis of degree `k` on the equispaced nodes `a / k`, `a = 0..=k`.
#[derive(Debug, Clone)]
pub struct LagrangeBasis {
    nodes: Vec<f64>,
}

impl LagrangeBasis {
    pub fn new(degree: usize) -> Self {
        assert!(degree >= 1);
        Self {
            nodes: (0..=degree).map(|a| a as f64 / degree as f64).collect(),
        }
    }

    pub fn degree(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn num_shape(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Value of shape function `a` at reference coordinate `xi`.
    pub fn value(&self, a: usize, xi: f64) -> f64 {
        let xa = self.nodes[a];
        self.nodes
            .iter()
            .enumerate()
            .filter(|&(b, _)| b != a)
            .map(|(_, &xb)| (xi - xb) / (xa - xb))
            .product()
    }

    /// Reference derivative `dφ_a/dξ` at `xi`.
    pub fn derivative(&self, a: usize, xi: f64) -> f64 {
        let xa = self.nodes[a];
        let mut sum = 0.0;
        for (m, &xm) in self.nodes.iter().enumerate() {
            if m == a {
                continue;
            }
            let mut term = 1.0 / (xa - xm);
            for (b, &xb) in self.nodes.iter().enumerate() {
                if b != a && b != m {
                    term *= (xi - xb) / (xa - xb);
                }
            }
            sum += term;
        }
        sum
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_rules_integrate_monomials_exactly() {
        for n in 1..=8 {
            let rule = GaussRule::new(n);
            for p in 0..(2 * n) {
                let q: f64 = rule
                    .points
                    .iter()
                    .zip(&rule.weights)
                    .map(|(x, w)| w * libm::pow(*x, p as f64))
                    .sum();
                assert!((q - 1.0 / (p as f64 + 1.0)).abs() < 1e-14, "n={n} p={p}");
            }
        }
    }

    #[test]
    fn lagrange_partition_of_unity_and_kronecker() {
        for k in 1..=3 {
            let basis = LagrangeBasis::new(k);
            for i in 0..=20 {
                let xi = i as f64 / 20.0;
                let s: f64 = (0..=k).map(|a| basis.value(a, xi)).sum();
                let ds: f64 = (0..=k).map(|a| basis.derivative(a, xi)).sum();
                assert!((s - 1.0).abs() < 1e-14);
                assert!(ds.abs() < 1e-12);
            }
            for a in 0..=k {
                for b in 0..=k {
                    let v = basis.value(a, basis.nodes()[b]);
                    assert!((v - if a == b { 1.0 } else { 0.0 }).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let basis = LagrangeBasis::new(3);
        let h = 1e-6;
        for a in 0..4 {
            for &xi in &[0.1, 0.37, 0.8] {
                let fd = (basis.value(a, xi + h) - basis.value(a, xi - h)) / (2.0 * h);
                assert!((fd - basis.derivative(a, xi)).abs() < 1e-7);
            }
        }
    }
}
