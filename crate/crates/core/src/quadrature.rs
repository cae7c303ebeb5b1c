//! Quadrature rules shared by the dilatation, capacity and Poincare code.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;

/// Gauss-Legendre nodes and weights mapped to `[a, b]`.
pub fn gauss_legendre(order: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let order = NonZeroUsize::new(order).expect("quadrature order must be positive");
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    GaussLegendre::new(order)
        .as_node_weight_pairs()
        .iter()
        .map(|&(x, w)| (mid + half * x, half * w))
        .collect()
}

/// Reference Gauss-Legendre rule on `[-1, 1]`, cached per order by callers.
#[derive(Debug, Clone)]
pub struct GlRule {
    pairs: Vec<(f64, f64)>,
}

impl GlRule {
    pub fn new(order: usize) -> GlRule {
        GlRule {
            pairs: gauss_legendre(order, -1.0, 1.0),
        }
    }

    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        half * self.pairs.iter().map(|&(x, w)| w * f(mid + half * x)).sum::<f64>()
    }

    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        self.pairs.iter().map(move |&(x, w)| (mid + half * x, half * w))
    }
}

/// Degree-5 seven-point rule on a triangle: barycentric points and weights
/// summing to one (multiply by the triangle area).
pub const TRIANGLE_DEG5: [([f64; 3], f64); 7] = {
    const A1: f64 = 0.059_715_871_789_770;
    const B1: f64 = 0.470_142_064_105_115;
    const W1: f64 = 0.132_394_152_788_506;
    const A2: f64 = 0.797_426_985_353_087;
    const B2: f64 = 0.101_286_507_323_456;
    const W2: f64 = 0.125_939_180_544_827;
    [
        ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 0.225),
        ([A1, B1, B1], W1),
        ([B1, A1, B1], W1),
        ([B1, B1, A1], W1),
        ([A2, B2, B2], W2),
        ([B2, A2, B2], W2),
        ([B2, B2, A2], W2),
    ]
};

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_exact_for_polynomials() {
        let rule = GlRule::new(16);
        let v = rule.integrate(0.0, 2.0, |x| x.powi(31));
        assert!((v - 2f64.powi(32) / 32.0).abs() < 1e-6);
        let pairs = gauss_legendre(4, 1.0, 3.0);
        assert!((pairs.iter().map(|p| p.1).sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn triangle_rule_degree_five() {
        let wsum: f64 = TRIANGLE_DEG5.iter().map(|p| p.1).sum();
        assert!((wsum - 1.0).abs() < 1e-14);
        // reference triangle (0,0),(1,0),(0,1): integral of x^2 y^3 = 2!3!/7! = 1/420
        let v: f64 = TRIANGLE_DEG5
            .iter()
            .map(|(b, w)| w * b[1].powi(2) * b[2].powi(3))
            .sum::<f64>()
            * 0.5;
        assert!((v - 1.0 / 420.0).abs() < 1e-13);
    }
}
