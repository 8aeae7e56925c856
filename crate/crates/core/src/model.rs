//! Model parameters, the shifted lattice, the complex weight and the
//! single-particle circular heat kernel.

use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;

/// The parameter record `(n, T, μ, τ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Number of walkers; also the lattice density.
    pub n: usize,
    /// Return time `T`.
    pub return_time: f64,
    /// Drift `μ`.
    pub mu: f64,
    /// Lattice phase `τ ∈ [0, 1)`.
    pub tau: f64,
}

impl ModelParams {
    pub fn new(n: usize, return_time: f64, mu: f64, tau: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParams("n must be at least 1".into()));
        }
        if !(return_time > 0.0 && return_time.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "T = {return_time} must be positive"
            )));
        }
        if !mu.is_finite() {
            return Err(Error::InvalidParams("mu must be finite".into()));
        }
        if !(0.0..1.0).contains(&tau) {
            return Err(Error::InvalidParams(format!(
                "tau = {tau} must lie in [0, 1)"
            )));
        }
        Ok(ModelParams {
            n,
            return_time,
            mu,
            tau,
        })
    }

    pub fn with_tau(self, tau: f64) -> Result<Self> {
        ModelParams::new(self.n, self.return_time, self.mu, tau)
    }

    /// Checks `0 < T < π²` and `|μ| < μ_c(T)`.
    pub fn check_subcritical(&self) -> Result<()> {
        let t = self.return_time;
        if t >= PI * PI {
            return Err(Error::OutOfRegime(format!("T = {t} is not below pi^2")));
        }
        let mc = crate::asymptotics::mu_crit(t)?;
        if self.mu.abs() >= mc {
            return Err(Error::OutOfRegime(format!(
                "|mu| = {} is not below mu_c = {mc}",
                self.mu.abs()
            )));
        }
        Ok(())
    }
}

/// Wraps an angle to the principal interval `[-π, π)`.
pub fn principal_angle(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y >= PI {
        y - 2.0 * PI
    } else {
        y
    }
}

/// Truncated window of the lattice `L_{n,τ} = {(k+τ)/n}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LatticeWindow {
    pub points: Vec<f64>,
    pub k_min: i64,
    pub k_max: i64,
    pub truncation_epsilon: f64,
}

/// Half-width `X(ε) = sqrt(2 ln(1/ε)/(nT)) + 2/n` of the lattice window.
pub fn window_half_width(params: &ModelParams, eps: f64) -> f64 {
    let n = params.n as f64;
    (2.0 * (1.0 / eps).ln() / (n * params.return_time)).sqrt() + 2.0 / n
}

pub fn lattice_points(params: &ModelParams, eps: f64) -> Result<LatticeWindow> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParams(format!(
            "eps = {eps} must lie in (0, 1)"
        )));
    }
    let n = params.n as f64;
    let reach = n * window_half_width(params, eps);
    let k_min = (-params.tau - reach).ceil() as i64;
    let k_max = (-params.tau + reach).floor() as i64;
    let points = (k_min..=k_max)
        .map(|k| (k as f64 + params.tau) / n)
        .collect();
    Ok(LatticeWindow {
        points,
        k_min,
        k_max,
        truncation_epsilon: eps,
    })
}

/// The complex weight `exp(-(nT/2)(x² - 2iμx))`.
pub fn weight(x: f64, params: &ModelParams) -> Complex64 {
    let s = params.n as f64 * params.return_time / 2.0;
    Complex64::new(-s * x * x, 2.0 * s * params.mu * x).exp()
}

/// Exponents `-n(θ-φ-tμ+2kπ)²/(2t)` of the heat-kernel sum, for every `k`
/// whose term is within `1e-18` of the largest one.
fn heat_terms(phi: f64, theta: f64, t: f64, n: usize, mu: f64) -> Vec<(i64, f64)> {
    let n = n as f64;
    let d = theta - phi - t * mu;
    let expo = |k: i64| -n * (d + 2.0 * PI * k as f64).powi(2) / (2.0 * t);
    let k0 = (-d / (2.0 * PI)).round() as i64;
    let peak = expo(k0);
    let cut = peak + 1e-18f64.ln();
    let mut lo = k0;
    while expo(lo - 1) >= cut {
        lo -= 1;
    }
    let mut hi = k0;
    while expo(hi + 1) >= cut {
        hi += 1;
    }
    (lo..=hi).map(|k| (k, expo(k))).collect()
}

fn check_angles(phi: f64, theta: f64, t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidParams(format!("t = {t} must be positive")));
    }
    for a in [phi, theta] {
        if !(-PI..PI).contains(&a) {
            return Err(Error::InvalidParams(format!(
                "angle {a} is not in [-pi, pi)"
            )));
        }
    }
    Ok(())
}

/// `P_n(φ,θ;t,μ,τ) = sqrt(n/(2πt)) Σ_k exp(-n(θ-φ-tμ+2kπ)²/(2t) + 2πikτ)`.
pub fn transition_density(phi: f64, theta: f64, t: f64, params: &ModelParams) -> Result<Complex64> {
    check_angles(phi, theta, t)?;
    Ok(heat_sum(phi, theta, t, params.n, params.mu, params.tau))
}

fn heat_sum(phi: f64, theta: f64, t: f64, n: usize, mu: f64, tau: f64) -> Complex64 {
    let pref = (n as f64 / (2.0 * PI * t)).sqrt();
    let s: Complex64 = heat_terms(phi, theta, t, n, mu)
        .into_iter()
        .map(|(k, e)| Complex64::new(e, 2.0 * PI * k as f64 * tau).exp())
        .sum();
    pref * s
}

/// Distribution of the winding offset of one bridge between two angles.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OffsetDistribution {
    pub probs: BTreeMap<i64, f64>,
    pub quadrature_nodes: usize,
}

/// Offset probabilities obtained by Fourier analysis of `P_n` in `τ`.
///
/// The `τ`-integral uses the periodic trapezoid rule with 64 nodes, doubled
/// until successive results agree to `1e-12`.
pub fn single_offset_distribution(
    phi: f64,
    theta: f64,
    t: f64,
    params: &ModelParams,
) -> Result<OffsetDistribution> {
    check_angles(phi, theta, t)?;
    let (n, mu) = (params.n, params.mu);
    let ks: Vec<i64> = heat_terms(phi, theta, t, n, mu)
        .iter()
        .map(|&(k, _)| k)
        .collect();
    let norm = heat_sum(phi, theta, t, n, mu, 0.0).re;
    let coeffs = |m: usize| -> Vec<f64> {
        let vals: Vec<Complex64> = (0..m)
            .map(|j| heat_sum(phi, theta, t, n, mu, j as f64 / m as f64))
            .collect();
        ks.iter()
            .map(|&w| {
                let c: Complex64 = vals
                    .iter()
                    .enumerate()
                    .map(|(j, v)| {
                        v * Complex64::from_polar(1.0, -2.0 * PI * (w * j as i64) as f64 / m as f64)
                    })
                    .sum();
                c.re / (m as f64 * norm)
            })
            .collect()
    };
    let mut m = 64;
    let mut prev = coeffs(m);
    let mut last_change = f64::INFINITY;
    for _ in 0..4 {
        m *= 2;
        let cur = coeffs(m);
        last_change = prev
            .iter()
            .zip(&cur)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        prev = cur;
        if last_change <= 1e-12 {
            let probs = ks
                .iter()
                .zip(&prev)
                .map(|(&k, &p)| (k, p.max(0.0)))
                .collect();
            return Ok(OffsetDistribution {
                probs,
                quadrature_nodes: m,
            });
        }
    }
    Err(Error::NonConvergence {
        doublings: 4,
        last_change,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(n: usize, t: f64, mu: f64, tau: f64) -> ModelParams {
        ModelParams::new(n, t, mu, tau).unwrap()
    }

    #[test]
    fn rejects_bad_params() {
        assert!(ModelParams::new(0, 1.0, 0.0, 0.0).is_err());
        assert!(ModelParams::new(1, 0.0, 0.0, 0.0).is_err());
        assert!(ModelParams::new(1, 1.0, 0.0, 1.0).is_err());
        assert!(lattice_points(&p(1, 1.0, 0.0, 0.0), 0.0).is_err());
        assert!(lattice_points(&p(1, 1.0, 0.0, 0.0), 1.0).is_err());
    }

    #[test]
    fn n1_window_covers_truncation_inequality() {
        let w = lattice_points(&p(1, 1.0, 0.0, 0.0), 1e-16).unwrap();
        // k² ≤ 2 ln(1e16) ≈ 73.7 needs |k| ≤ 8; the window adds its margin.
        assert!(w.k_min <= -10 && w.k_max >= 10);
        assert_eq!(w.k_min, -w.k_max);
    }

    #[test]
    fn spacing_is_one_over_n() {
        let w = lattice_points(&p(4, 1.0, 0.0, 0.5), 1e-16).unwrap();
        for pair in w.points.windows(2) {
            assert!((pair[1] - pair[0] - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn dropping_edge_point_is_negligible() {
        let params = p(3, 1.0, 0.7, 0.3);
        let w = lattice_points(&params, 1e-16).unwrap();
        let edge = weight(*w.points.last().unwrap(), &params).norm() / 3.0;
        let width = w.points.last().unwrap() - w.points[0];
        assert!(edge < 1e-16 * width);
    }

    #[test]
    fn weight_examples() {
        assert_eq!(weight(0.0, &p(3, 2.0, 1.0, 0.0)), Complex64::new(1.0, 0.0));
        assert!((weight(1.0, &p(2, 1.0, 0.0, 0.0)).re - (-1f64).exp()).abs() < 1e-15);
        let w = weight(1.0, &p(1, 2.0, 1.0, 0.0));
        assert!((w.norm() - (-1f64).exp()).abs() < 1e-15);
        assert!((w.arg() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn heat_kernel_normalised_and_symmetric() {
        let params = p(2, 1.0, 0.0, 0.0);
        let m = 2000;
        let h = 2.0 * PI / m as f64;
        let total: f64 = (0..m)
            .map(|j| {
                transition_density(0.3, -PI + j as f64 * h, 0.7, &params)
                    .unwrap()
                    .re
                    * h
            })
            .sum();
        assert!((total - 1.0).abs() < 1e-10);
        let a = transition_density(0.0, 1.1, 0.7, &params).unwrap();
        let b = transition_density(0.0, -1.1, 0.7, &params).unwrap();
        assert!((a - b).norm() < 1e-14);
        let diag = transition_density(0.4, 0.4, 0.5, &params).unwrap();
        assert!(diag.im.abs() < 1e-15 && diag.re >= (2.0 / (2.0 * PI * 0.5)).sqrt());
    }

    #[test]
    fn offset_distribution_matches_gaussian_ratio() {
        let params = p(1, 1.0, 0.0, 0.0);
        let d = single_offset_distribution(0.0, 0.0, 1.0, &params).unwrap();
        let z: f64 = (-5..=5)
            .map(|k: i32| (-2.0 * PI * PI * (k * k) as f64).exp())
            .sum();
        assert!((d.probs[&0] - 1.0 / z).abs() < 1e-12);
        assert!((1.0 - d.probs[&0] - 2.0 * (-2.0 * PI * PI).exp() / z).abs() < 1e-12);
        let total: f64 = d.probs.values().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn principal_angle_range() {
        assert_eq!(principal_angle(PI), -PI);
        assert!((principal_angle(7.0) - (7.0 - 2.0 * PI)).abs() < 1e-15);
    }
}
