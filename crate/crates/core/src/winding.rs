//! Exact finite-n winding distributions.
//!
//! `P(W = ω) = e^{2πiως(n)} ∫₀¹ H_n(τ)/H_n(ς(n)) e^{-2πiωτ} dτ`.
//!
//! Because `H_n` is entire and 1-periodic in `τ`, the integral may be taken
//! along `Im τ = ψ` for any `ψ`, which multiplies sector `ω` by `e^{-2πωψ}`.
//! Each probability is read off on the line where its sector carries the
//! largest share of the integrand, so probabilities far below machine epsilon
//! relative to the dominant sector are still resolved to high relative
//! accuracy.

use crate::error::{Error, Result};
use crate::measure::{recurrence_at, Engine};
use crate::par::Exec;
use num_complex::Complex64;
use serde::Serialize;
use std::collections::BTreeMap;
use std::f64::consts::PI;

/// `ς(n)`: 0 for odd `n`, 1/2 for even `n`.
pub fn sigma_shift(n: usize) -> f64 {
    if n.is_multiple_of(2) {
        0.5
    } else {
        0.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WindingDistribution {
    pub probs: BTreeMap<i64, f64>,
    /// Largest imaginary part discarded.
    pub imag_residue: f64,
    pub quadrature_nodes: usize,
    /// Probabilities below zero that were clamped, with their raw values.
    pub clamped: Vec<(i64, f64)>,
    /// `τ` nodes dropped because the polynomials broke down there.
    pub excluded_nodes: usize,
    /// Contour height `Im τ` used for each `ω`.
    pub contour_shift: BTreeMap<i64, f64>,
}

impl WindingDistribution {
    pub fn prob(&self, omega: i64) -> f64 {
        self.probs.get(&omega).copied().unwrap_or(0.0)
    }

    pub fn total_mass(&self) -> f64 {
        self.probs.values().sum()
    }

    /// `Σ_{ω ≠ omega} P(ω)`, summed directly rather than as `1 - P(omega)`.
    pub fn mass_off(&self, omega: i64) -> f64 {
        self.probs
            .iter()
            .filter(|(&w, _)| w != omega)
            .map(|(_, p)| p)
            .sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WindingOptions {
    pub m_init: usize,
    pub max_doublings: u32,
    pub stability: f64,
    pub tail: f64,
    pub engine: Engine,
    pub exec: Exec,
    /// Resolve tail probabilities on shifted contours.
    pub tilt: bool,
}

impl Default for WindingOptions {
    fn default() -> Self {
        WindingOptions {
            m_init: 128,
            max_doublings: 4,
            stability: 1e-9,
            tail: 1e-10,
            engine: Engine::PoissonDual,
            exec: Exec::default(),
            tilt: true,
        }
    }
}

fn ln_hankel(n: usize, t: f64, mu: f64, tau: Complex64, engine: Engine) -> Result<Complex64> {
    let rec = recurrence_at(n, t, mu, tau, n - 1, engine)?;
    if let Some(degree) = rec.breakdown {
        return Err(Error::Breakdown { degree });
    }
    Ok(rec.norms.iter().map(|h| h.ln()).sum::<Complex64>() + n as f64 * rec.log_scale)
}

/// `H_n(τ)/H_n(ς(n))`, accumulated as a product of per-degree ratios.
pub fn hankel_ratio(n: usize, t: f64, mu: f64, tau: f64) -> Result<Complex64> {
    hankel_ratio_with(n, t, mu, tau, Engine::default())
}

pub fn hankel_ratio_with(n: usize, t: f64, mu: f64, tau: f64, engine: Engine) -> Result<Complex64> {
    check(n, t)?;
    let a = recurrence_at(n, t, mu, Complex64::new(tau, 0.0), n - 1, engine)?;
    let b = recurrence_at(n, t, mu, Complex64::new(sigma_shift(n), 0.0), n - 1, engine)?;
    if let Some(degree) = a.breakdown.or(b.breakdown) {
        return Err(Error::Breakdown { degree });
    }
    let scale = Complex64::from((a.log_scale - b.log_scale).exp());
    Ok(a.norms
        .iter()
        .zip(&b.norms)
        .fold(Complex64::new(1.0, 0.0), |acc, (x, y)| {
            acc * (x / y) * scale
        }))
}

/// `d/dτ ln H_n(τ) = inTμ + T c_{n,n,n-1}(τ)`.
pub fn dlog_hankel(n: usize, t: f64, mu: f64, tau: f64) -> Result<Complex64> {
    dlog_hankel_with(n, t, mu, tau, Engine::default())
}

pub fn dlog_hankel_with(n: usize, t: f64, mu: f64, tau: f64, engine: Engine) -> Result<Complex64> {
    check(n, t)?;
    let rec = recurrence_at(n, t, mu, Complex64::new(tau, 0.0), n - 1, engine)?;
    if let Some(degree) = rec.breakdown {
        return Err(Error::Breakdown { degree });
    }
    let c = -rec.beta.iter().sum::<Complex64>();
    Ok(Complex64::new(0.0, n as f64 * t * mu) + t * c)
}

fn check(n: usize, t: f64) -> Result<()> {
    if n == 0 || t.is_nan() || t <= 0.0 {
        return Err(Error::InvalidParams(format!(
            "need n >= 1 and T > 0, got n={n}, T={t}"
        )));
    }
    Ok(())
}

/// Trapezoid Fourier coefficients of `H_n(θ+iψ)/H_n(ς)` on one contour.
struct Contour {
    psi: f64,
    /// `ln` of the largest sample modulus.
    ln_top: f64,
    /// Coefficients of the samples scaled by `exp(-ln_top)`, indexed by
    /// `ω + m/2`.
    coeffs: Vec<Complex64>,
    largest: f64,
    excluded: usize,
}

impl Contour {
    fn coeff(&self, omega: i64) -> Complex64 {
        self.coeffs[(omega + self.coeffs.len() as i64 / 2) as usize]
    }

    fn share(&self, omega: i64) -> f64 {
        self.coeff(omega).norm() / self.largest
    }

    fn dominant(&self) -> i64 {
        let m = self.coeffs.len() as i64;
        (-m / 2..m / 2)
            .max_by(|&a, &b| self.coeff(a).norm().total_cmp(&self.coeff(b).norm()))
            .unwrap_or(0)
    }

    /// `P(ω)` before taking the real part.
    fn value(&self, omega: i64, sigma: f64) -> Complex64 {
        let c = self.coeff(omega);
        if c.norm() == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        (c.ln()
            + Complex64::new(
                self.ln_top + 2.0 * PI * omega as f64 * self.psi,
                2.0 * PI * omega as f64 * sigma,
            ))
        .exp()
    }
}

fn contour(
    n: usize,
    t: f64,
    mu: f64,
    m: usize,
    psi: f64,
    ln_ref: Complex64,
    opts: &WindingOptions,
) -> Contour {
    let samples = opts.exec.map(m, |k| {
        ln_hankel(
            n,
            t,
            mu,
            Complex64::new(k as f64 / m as f64, psi),
            opts.engine,
        )
        .ok()
        .map(|l| l - ln_ref)
    });
    let excluded = samples.iter().filter(|s| s.is_none()).count();
    let ln_top = samples
        .iter()
        .flatten()
        .map(|l| l.re)
        .fold(f64::NEG_INFINITY, f64::max);
    let scaled: Vec<Complex64> = samples
        .iter()
        .map(|s| s.map_or(Complex64::new(0.0, 0.0), |l| (l - ln_top).exp()))
        .collect();
    let half = (m / 2) as i64;
    let coeffs: Vec<Complex64> = (-half..half)
        .map(|omega| {
            scaled
                .iter()
                .enumerate()
                .map(|(k, v)| {
                    v * Complex64::from_polar(
                        1.0,
                        -2.0 * PI * ((omega * k as i64).rem_euclid(m as i64)) as f64 / m as f64,
                    )
                })
                .sum::<Complex64>()
                / m as f64
        })
        .collect();
    let largest = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    Contour {
        psi,
        ln_top,
        coeffs,
        largest,
        excluded,
    }
}

/// Probabilities far below this are treated as underflow and not chased.
const FLOOR: f64 = 1e-300;
/// Spacing of successive contour heights.
const PSI_STEP: f64 = 1.0;
const PSI_CAP: f64 = 400.0;
/// A sector whose coefficient is at least this fraction of the largest one
/// on some contour is read off with about ten significant digits.
const RESOLVED_SHARE: f64 = 1e-6;

struct Assembly {
    probs: BTreeMap<i64, Complex64>,
    shift: BTreeMap<i64, f64>,
    excluded: usize,
}

fn assemble(n: usize, t: f64, mu: f64, m: usize, opts: &WindingOptions) -> Result<Assembly> {
    let sigma = sigma_shift(n);
    let ln_ref = ln_hankel(n, t, mu, Complex64::new(sigma, 0.0), opts.engine)?;
    let mut contours = vec![contour(n, t, mu, m, 0.0, ln_ref, opts)];
    let centre = contours[0].dominant();
    let half = (m / 2) as i64;
    let mut lo = (-2i64).min(centre - 2).max(-half + 1);
    let mut hi = (n as i64 + 2).max(centre + 2).min(half - 1);
    // Only contours tilted towards a sector can resolve it; the others
    // suppress it below their rounding noise.
    let best = |cs: &[Contour], omega: i64| -> usize {
        let mut pick = 0;
        for (i, c) in cs.iter().enumerate() {
            if c.psi * (omega - centre) as f64 > 0.0 {
                continue;
            }
            if c.share(omega) > cs[pick].share(omega) * (1.0 + 1e-12) {
                pick = i;
            }
        }
        pick
    };
    loop {
        if opts.tilt {
            // Lower contours (ψ < 0) bring up sectors above the centre,
            // higher ones the sectors below it.
            for (target, dir) in [(hi, -1.0), (lo, 1.0)] {
                if (target - centre) as f64 * -dir <= 0.0 {
                    continue;
                }
                let sectors: Vec<i64> = if target > centre {
                    (centre + 1..=target).collect()
                } else {
                    (target..centre).collect()
                };
                loop {
                    let unresolved = sectors.iter().any(|&w| {
                        let c = &contours[best(&contours, w)];
                        c.share(w) < RESOLVED_SHARE && c.value(w, sigma).norm() >= FLOOR
                    });
                    let last = contours.iter().map(|c| c.psi * dir).fold(0.0, f64::max);
                    if !unresolved || last >= PSI_CAP {
                        break;
                    }
                    contours.push(contour(n, t, mu, m, dir * (last + PSI_STEP), ln_ref, opts));
                }
            }
        }
        let edge = |omega: i64| {
            contours[best(&contours, omega)]
                .value(omega, sigma)
                .re
                .abs()
        };
        if (edge(lo) <= opts.tail && edge(hi) <= opts.tail) || (lo <= -half + 1 && hi >= half - 1) {
            break;
        }
        lo = (lo - 2).max(-half + 1);
        hi = (hi + 2).min(half - 1);
    }
    let mut probs = BTreeMap::new();
    let mut shift = BTreeMap::new();
    for omega in lo..=hi {
        let c = &contours[best(&contours, omega)];
        probs.insert(omega, c.value(omega, sigma));
        shift.insert(omega, c.psi);
    }
    let excluded = contours.iter().map(|c| c.excluded).max().unwrap_or(0);
    Ok(Assembly {
        probs,
        shift,
        excluded,
    })
}

pub fn winding_distribution(n: usize, t: f64, mu: f64) -> Result<WindingDistribution> {
    winding_distribution_with(n, t, mu, &WindingOptions::default())
}

/// Winding distribution by the periodic trapezoid rule in `τ`, doubling the
/// node count until every reported probability changes by less than
/// `opts.stability`.
pub fn winding_distribution_with(
    n: usize,
    t: f64,
    mu: f64,
    opts: &WindingOptions,
) -> Result<WindingDistribution> {
    check(n, t)?;
    if !opts.m_init.is_power_of_two() || opts.m_init < 8 {
        return Err(Error::InvalidParams(format!(
            "M_init = {} must be a power of two >= 8",
            opts.m_init
        )));
    }
    let mut opts = *opts;
    if matches!(opts.engine, Engine::Lattice { .. }) {
        opts.tilt = false;
    }
    let mut m = opts.m_init;
    let mut prev = assemble(n, t, mu, m, &opts)?;
    let mut last_change = f64::INFINITY;
    if opts.max_doublings == 0 {
        return Ok(finish(prev, m));
    }
    for _ in 0..opts.max_doublings {
        m *= 2;
        let cur = assemble(n, t, mu, m, &opts)?;
        last_change = cur
            .probs
            .iter()
            .map(|(w, p)| (p.re - prev.probs.get(w).map_or(0.0, |q| q.re)).abs())
            .fold(0.0, f64::max);
        prev = cur;
        if last_change <= opts.stability {
            return Ok(finish(prev, m));
        }
    }
    Err(Error::NonConvergence {
        doublings: opts.max_doublings,
        last_change,
    })
}

fn finish(a: Assembly, m: usize) -> WindingDistribution {
    let imag_residue = a.probs.values().map(|p| p.im.abs()).fold(0.0, f64::max);
    let mut clamped = Vec::new();
    let probs = a
        .probs
        .iter()
        .map(|(&w, p)| {
            if p.re < 0.0 {
                clamped.push((w, p.re));
                (w, 0.0)
            } else {
                (w, p.re)
            }
        })
        .collect();
    if !clamped.is_empty() {
        log::debug!(
            "clamped {} negative probabilities: {clamped:?}",
            clamped.len()
        );
    }
    WindingDistribution {
        probs,
        imag_residue,
        quadrature_nodes: m,
        clamped,
        excluded_nodes: a.excluded,
        contour_shift: a.shift,
    }
}

/// Single bridge: `P(ω) ∝ exp(-(Tμ - 2πω)²/(2T))`.
pub fn winding_n1_closed_form(t: f64, mu: f64) -> WindingDistribution {
    let centre = (t * mu / (2.0 * PI)).round() as i64;
    let expo = |w: i64| -(t * mu - 2.0 * PI * w as f64).powi(2) / (2.0 * t);
    let top = expo(centre);
    let mut lo = centre;
    while expo(lo - 1) - top > -745.0 {
        lo -= 1;
    }
    let mut hi = centre;
    while expo(hi + 1) - top > -745.0 {
        hi += 1;
    }
    let z: f64 = (lo..=hi).map(|w| (expo(w) - top).exp()).sum();
    let probs = (lo..=hi).map(|w| (w, (expo(w) - top).exp() / z)).collect();
    WindingDistribution {
        probs,
        imag_residue: 0.0,
        quadrature_nodes: 0,
        clamped: Vec::new(),
        excluded_nodes: 0,
        contour_shift: BTreeMap::new(),
    }
}

pub fn expected_winding(dist: &WindingDistribution) -> f64 {
    dist.probs.iter().map(|(&w, p)| w as f64 * p).sum()
}

/// Total-variation distance between two distributions.
pub fn total_variation(a: &WindingDistribution, b: &WindingDistribution) -> f64 {
    let keys: std::collections::BTreeSet<i64> =
        a.probs.keys().chain(b.probs.keys()).copied().collect();
    0.5 * keys
        .iter()
        .map(|w| (a.prob(*w) - b.prob(*w)).abs())
        .sum::<f64>()
}
