//! Discrete measures that represent the lattice functional
//! `L[f] = (1/n) Σ_{x ∈ L_{n,τ}} f(x) w(x)`.
//!
//! Two representations are available:
//!
//! * the truncated lattice itself, in double or double-double precision;
//! * the Poisson-dual measure. Poisson summation turns the lattice sum of a
//!   polynomial times the Gaussian weight into a sum over horizontal lines
//!   `Im x = c_m`, `c_m = μ - 2πm/T`:
//!
//!   `L[f] = Σ_m e^{2πimτ} e^{-nTc_m²/2} ∫ f(ic_m + y) e^{-nTy²/2} dy`,
//!
//!   and each line integral is exact under Gauss-Hermite quadrature with
//!   `deg f / 2 + 1` nodes. The lattice functional is reproduced exactly for
//!   polynomials up to the requested degree, with none of the cancellation
//!   that plagues the direct sum. The representation also makes sense for
//!   complex `τ`.

use crate::dd::{Cdd, Dd, Field};
use crate::model::{lattice_points, ModelParams};
use crate::quadrature::GaussHermite;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

/// Floating-point format for the lattice engine.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Precision {
    #[default]
    Double,
    DoubleDouble,
}

/// How the lattice functional is discretised.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub enum Engine {
    /// Poisson-dual Gauss-Hermite measure (production path).
    #[default]
    PoissonDual,
    /// Direct truncated lattice sum.
    Lattice { eps: f64, precision: Precision },
}

impl Engine {
    pub const LATTICE: Engine = Engine::Lattice {
        eps: 1e-16,
        precision: Precision::Double,
    };
    pub const LATTICE_DD: Engine = Engine::Lattice {
        eps: 1e-32,
        precision: Precision::DoubleDouble,
    };
}

/// Nodes and weights of a discrete measure; the true weights are the stored
/// ones times `exp(log_scale)`.
#[derive(Clone, Debug)]
pub struct DiscreteMeasure<S> {
    pub nodes: Vec<S>,
    pub weights: Vec<S>,
    pub log_scale: f64,
}

fn gauss_hermite(num: usize) -> Arc<GaussHermite> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussHermite>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(rule) = cache.lock().expect("quadrature cache poisoned").get(&num) {
        return Arc::clone(rule);
    }
    let rule = Arc::new(GaussHermite::new(num));
    cache
        .lock()
        .expect("quadrature cache poisoned")
        .entry(num)
        .or_insert(rule)
        .clone()
}

/// Poisson-dual measure exact for polynomials of degree `2 degree + 1`.
///
/// `t` and `mu` are the Gaussian parameters of the weight
/// `exp(-(nt/2)(x² - 2iμx))`; `tau` may be complex.
pub fn poisson_dual(
    n: usize,
    t: f64,
    mu: f64,
    tau: Complex64,
    degree: usize,
) -> DiscreteMeasure<Complex64> {
    let nf = n as f64;
    let rule = gauss_hermite(degree + 2);
    let s = (nf * t / 2.0).sqrt();
    let c = |m: i64| mu - 2.0 * PI * m as f64 / t;
    let log_weight = |m: i64| -nf * t * c(m).powi(2) / 2.0 - 2.0 * PI * m as f64 * tau.im;
    let centre = (t * (mu - tau.im / nf) / (2.0 * PI)).round() as i64;
    let top = log_weight(centre);
    let keep = |m: i64| log_weight(m) - top >= -745.0;
    let mut lo = centre;
    while keep(lo - 1) {
        lo -= 1;
    }
    let mut hi = centre;
    while keep(hi + 1) {
        hi += 1;
    }
    let mut nodes = Vec::with_capacity((hi - lo + 1) as usize * rule.nodes.len());
    let mut weights = Vec::with_capacity(nodes.capacity());
    for m in lo..=hi {
        let line = Complex64::new(log_weight(m) - top, 2.0 * PI * m as f64 * tau.re).exp() / s;
        for (&z, &w) in rule.nodes.iter().zip(&rule.weights) {
            nodes.push(Complex64::new(z / s, c(m)));
            weights.push(line * w);
        }
    }
    DiscreteMeasure {
        nodes,
        weights,
        log_scale: top,
    }
}

/// Truncated lattice measure in double precision.
pub fn lattice_measure(
    params: &ModelParams,
    eps: f64,
) -> crate::Result<DiscreteMeasure<Complex64>> {
    let window = lattice_points(params, eps)?;
    let inv_n = 1.0 / params.n as f64;
    let weights = window
        .points
        .iter()
        .map(|&x| crate::model::weight(x, params) * inv_n)
        .collect();
    let nodes = window
        .points
        .iter()
        .map(|&x| Complex64::new(x, 0.0))
        .collect();
    Ok(DiscreteMeasure {
        nodes,
        weights,
        log_scale: 0.0,
    })
}

/// Truncated lattice measure with nodes and weights in double-double.
pub fn lattice_measure_dd(params: &ModelParams, eps: f64) -> crate::Result<DiscreteMeasure<Cdd>> {
    let window = lattice_points(params, eps)?;
    let n = Dd::new(params.n as f64);
    let half_nt = n * Dd::new(params.return_time) / Dd::new(2.0);
    let phase = n * Dd::new(params.return_time) * Dd::new(params.mu);
    let tau = Dd::new(params.tau);
    let mut nodes = Vec::with_capacity(window.points.len());
    let mut weights = Vec::with_capacity(window.points.len());
    for k in window.k_min..=window.k_max {
        let x = (Dd::new(k as f64) + tau) / n;
        let modulus = (-(half_nt * x * x)).exp() / n;
        nodes.push(Cdd::new(x, Dd::ZERO));
        weights.push(Cdd::cis(phase * x).scale(modulus));
    }
    Ok(DiscreteMeasure {
        nodes,
        weights,
        log_scale: 0.0,
    })
}

/// Output of the Stieltjes procedure, converted to double precision.
///
/// `norms[j]` carries the measure's scale factor `exp(log_scale)` implicitly.
#[derive(Clone, Debug)]
pub struct Recurrence {
    pub norms: Vec<Complex64>,
    pub beta: Vec<Complex64>,
    pub gamma_sq: Vec<Complex64>,
    pub log_scale: f64,
    pub breakdown: Option<usize>,
}

/// Relative size of `|h_j|/|h_0|` below which the procedure stops.
pub const BREAKDOWN_THRESHOLD: f64 = 1e-280;

/// Discretised Stieltjes procedure for the bilinear form of `measure`,
/// producing `h_j` and `β_j` for `j = 0..=max_degree`.
pub fn stieltjes<S: Field>(measure: &DiscreteMeasure<S>, max_degree: usize) -> Recurrence {
    let m = measure.nodes.len();
    let mut p = vec![S::one(); m];
    let mut p_prev = vec![S::zero(); m];
    let mut norms = Vec::with_capacity(max_degree + 1);
    let mut beta = Vec::with_capacity(max_degree + 1);
    let mut gamma_sq = Vec::with_capacity(max_degree + 1);
    let mut h_prev = S::one();
    let mut h0_abs = 0.0;
    let mut breakdown = None;
    for j in 0..=max_degree {
        let mut h = S::zero();
        let mut xh = S::zero();
        for ((&pi, &w), &x) in p.iter().zip(&measure.weights).zip(&measure.nodes) {
            let pw = pi * pi * w;
            h = h + pw;
            xh = xh + x * pw;
        }
        let hc = h.to_c64();
        if j == 0 {
            h0_abs = hc.norm();
        }
        if !hc.is_finite() || hc.norm() < BREAKDOWN_THRESHOLD * h0_abs || hc.norm() == 0.0 {
            breakdown = Some(j);
            break;
        }
        let b = xh / h;
        let g2 = if j == 0 { S::zero() } else { h / h_prev };
        norms.push(hc);
        beta.push(b.to_c64());
        gamma_sq.push(g2.to_c64());
        if j == max_degree {
            break;
        }
        for i in 0..m {
            let next = (measure.nodes[i] - b) * p[i] - g2 * p_prev[i];
            p_prev[i] = p[i];
            p[i] = next;
        }
        h_prev = h;
    }
    Recurrence {
        norms,
        beta,
        gamma_sq,
        log_scale: measure.log_scale,
        breakdown,
    }
}

/// Recurrence data at `(n, T, μ, τ)` for complex `τ` using `engine`.
pub fn recurrence_at(
    n: usize,
    t: f64,
    mu: f64,
    tau: Complex64,
    max_degree: usize,
    engine: Engine,
) -> crate::Result<Recurrence> {
    match engine {
        Engine::PoissonDual => Ok(stieltjes(
            &poisson_dual(n, t, mu, tau, max_degree),
            max_degree,
        )),
        Engine::Lattice { eps, precision } => {
            if tau.im != 0.0 {
                return Err(crate::Error::InvalidParams(
                    "the lattice engine needs a real tau".into(),
                ));
            }
            let tau_r = tau.re.rem_euclid(1.0);
            let params = ModelParams::new(n, t, mu, if tau_r >= 1.0 { 0.0 } else { tau_r })?;
            match precision {
                Precision::Double => Ok(stieltjes(&lattice_measure(&params, eps)?, max_degree)),
                Precision::DoubleDouble => {
                    Ok(stieltjes(&lattice_measure_dd(&params, eps)?, max_degree))
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn moments_of(measure: &DiscreteMeasure<Complex64>, k: usize) -> Vec<Complex64> {
        (0..=k)
            .map(|j| {
                measure
                    .nodes
                    .iter()
                    .zip(&measure.weights)
                    .map(|(x, w)| x.powu(j as u32) * w)
                    .sum::<Complex64>()
                    * measure.log_scale.exp()
            })
            .collect()
    }

    #[test]
    fn dual_reproduces_lattice_moments() {
        for &(n, t, mu, tau) in &[
            (1, 1.0, 0.0, 0.0),
            (2, 1.0, 0.5, 0.25),
            (3, 4.0, 1.0, 0.7),
            (1, 0.3, 2.0, 0.5),
        ] {
            let params = ModelParams::new(n, t, mu, tau).unwrap();
            let lat = moments_of(&lattice_measure(&params, 1e-18).unwrap(), 4);
            let dual = moments_of(&poisson_dual(n, t, mu, Complex64::new(tau, 0.0), 3), 4);
            for (a, b) in lat.iter().zip(&dual) {
                assert!(
                    (a - b).norm() <= 1e-13 * (1.0 + a.norm()),
                    "{n} {t} {mu} {tau}: {a} vs {b}"
                );
            }
        }
    }

    #[test]
    fn double_double_lattice_agrees_with_double() {
        let params = ModelParams::new(3, 1.0, 0.4, 0.3).unwrap();
        let a = stieltjes(&lattice_measure(&params, 1e-16).unwrap(), 4);
        let b = stieltjes(&lattice_measure_dd(&params, 1e-16).unwrap(), 4);
        for (x, y) in a.norms.iter().zip(&b.norms) {
            assert!((x - y).norm() <= 1e-12 * y.norm());
        }
    }

    #[test]
    fn complex_tau_shifts_line_weights() {
        // Moving τ to θ - iη multiplies line m by e^{2πmη}; m_0 stays a
        // finite, nonzero number.
        let m0 = |tau: Complex64| {
            let d = poisson_dual(2, 1.0, 1.0, tau, 0);
            d.weights.iter().sum::<Complex64>() * d.log_scale.exp()
        };
        let a = m0(Complex64::new(0.3, -2.0));
        assert!(a.is_finite() && a.norm() > 0.0);
    }
}
