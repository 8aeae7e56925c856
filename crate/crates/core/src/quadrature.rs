//! Gauss-Hermite quadrature for the weight `e^{-x²}`.
//!
//! Nodes start from the eigenvalues of the Jacobi matrix and are polished by
//! Newton steps on the orthonormal Hermite recurrence. Weights come from the
//! Christoffel formula `w = 1/(N 𝔥_{N-1}(x)²)` evaluated with a running
//! exponent, so rules with several hundred nodes keep full relative accuracy
//! in their smallest weights.

use nalgebra::{DMatrix, SymmetricEigen};
use std::f64::consts::PI;

#[derive(Clone, Debug, PartialEq)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Returns `(𝔥_{N-1}, 𝔥_N, ln scale)` with the true values equal to the
/// returned ones times `exp(ln scale)`.
fn hermite_pair(num: usize, x: f64) -> (f64, f64, f64) {
    let mut prev = 0.0;
    let mut cur = PI.powf(-0.25);
    let mut log_scale = 0.0;
    for k in 0..num {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * x * cur - (kf / (kf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        if cur.abs() > 1e100 {
            prev *= 1e-100;
            cur *= 1e-100;
            log_scale += 100.0 * 10f64.ln();
        }
    }
    (prev, cur, log_scale)
}

impl GaussHermite {
    /// Rule with `num` nodes, exact for polynomials of degree `2 num - 1`.
    pub fn new(num: usize) -> Self {
        assert!(num >= 1, "Gauss-Hermite rule needs at least one node");
        let jac = DMatrix::from_fn(num, num, |i, j| {
            if i + 1 == j || j + 1 == i {
                (i.max(j) as f64 / 2.0).sqrt()
            } else {
                0.0
            }
        });
        let mut nodes: Vec<f64> = SymmetricEigen::new(jac)
            .eigenvalues
            .iter()
            .copied()
            .collect();
        nodes.sort_by(|a, b| a.total_cmp(b));
        let nf = num as f64;
        let weights = nodes
            .iter_mut()
            .map(|x| {
                for _ in 0..3 {
                    let (hm, h, _) = hermite_pair(num, *x);
                    let dx = h / ((2.0 * nf).sqrt() * hm);
                    if !dx.is_finite() {
                        break;
                    }
                    *x -= dx;
                }
                let (hm, _, ls) = hermite_pair(num, *x);
                (-(nf.ln()) - 2.0 * (hm.abs().ln() + ls)).exp()
            })
            .collect();
        // Symmetrise to remove the last rounding asymmetry.
        let mut rule = GaussHermite { nodes, weights };
        let m = rule.nodes.len();
        for i in 0..m / 2 {
            let x = 0.5 * (rule.nodes[m - 1 - i] - rule.nodes[i]);
            let w = 0.5 * (rule.weights[i] + rule.weights[m - 1 - i]);
            rule.nodes[i] = -x;
            rule.nodes[m - 1 - i] = x;
            rule.weights[i] = w;
            rule.weights[m - 1 - i] = w;
        }
        if m % 2 == 1 {
            rule.nodes[m / 2] = 0.0;
        }
        rule
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_order_moments() {
        let q = GaussHermite::new(10);
        assert!((q.integrate(|_| 1.0) - PI.sqrt()).abs() < 1e-14);
        assert!((q.integrate(|x| x * x) - PI.sqrt() / 2.0).abs() < 1e-14);
        assert!((q.integrate(|x| x.powi(4)) - 3.0 * PI.sqrt() / 4.0).abs() < 1e-13);
        assert!((q.integrate(f64::cos) - PI.sqrt() * (-0.25f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn large_rules_stay_finite_and_normalised() {
        for num in [100, 257, 400] {
            let q = GaussHermite::new(num);
            assert!(q.weights.iter().all(|w| w.is_finite() && *w >= 0.0));
            let total: f64 = q.weights.iter().sum();
            assert!((total / PI.sqrt() - 1.0).abs() < 1e-12, "num={num}");
            let second: f64 = q.nodes.iter().zip(&q.weights).map(|(x, w)| x * x * w).sum();
            assert!(
                (second / (PI.sqrt() / 2.0) - 1.0).abs() < 1e-11,
                "num={num}"
            );
        }
    }

    #[test]
    fn smallest_weight_has_relative_accuracy() {
        // For N = 2 the rule is x = ±1/√2 with weights √π/2.
        let q = GaussHermite::new(2);
        assert!((q.nodes[1] - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((q.weights[0] - PI.sqrt() / 2.0).abs() < 1e-15);
        // Extreme weight of the 20-point rule, reference value from the
        // closed-form Christoffel expression evaluated independently.
        let q = GaussHermite::new(20);
        let x = *q.nodes.last().unwrap();
        assert!((x - 5.387_480_890_011_233).abs() < 1e-12);
        assert!((q.weights.last().unwrap() / 2.229_393_645_534_151e-13 - 1.0).abs() < 1e-9);
    }
}
