//! Closed-form asymptotic objects: the critical drift, the g-function and
//! phase function, the Hermite-regime constants, and leading-order
//! predictions for polynomials, norms and winding numbers.
//!
//! Every square root and logarithm is taken in the band frame `w = z - iμ`,
//! where the band is the real segment `[-2/√T, 2/√T]`. `R` is formed as
//! `√(w - 2/√T) √(w + 2/√T)` with principal roots, which places its cut on
//! the band and makes `R ~ w` at infinity.

use crate::error::{Error, Result};
use crate::par::Exec;
use crate::winding::WindingDistribution;
use num_complex::Complex64;
use serde::Serialize;
use std::collections::BTreeMap;
use std::f64::consts::PI;

const I: Complex64 = Complex64::new(0.0, 1.0);

fn check_t(t: f64) -> Result<()> {
    if !(t > 0.0 && t < PI * PI) {
        return Err(Error::OutOfRegime(format!("T = {t} not in (0, pi^2)")));
    }
    Ok(())
}

/// `μ_c(T) = √(π²-T)/T - ln T/(2π) + ln(π - √(π²-T))/π`.
pub fn mu_crit(t: f64) -> Result<f64> {
    check_t(t)?;
    let s = (PI * PI - t).sqrt();
    Ok(s / t - t.ln() / (2.0 * PI) + (PI - s).ln() / PI)
}

/// `ℓ = -1 - ln T - Tμ²/2`.
pub fn ell_const(t: f64, mu: f64) -> f64 {
    -1.0 - t.ln() - t * mu * mu / 2.0
}

/// `α_∞` in the closed form `i(π + √(π²-T))/√T`.
pub fn alpha_inf_const(t: f64) -> Result<Complex64> {
    check_t(t)?;
    Ok(I * (PI + (PI * PI - t).sqrt()) / t.sqrt())
}

/// `λ(T) = i(π + √(π²-T) + i√T)/(π - √(π²-T) - i√T)`, evaluated literally.
pub fn lambda_const(t: f64) -> Result<Complex64> {
    check_t(t)?;
    let s = (PI * PI - t).sqrt();
    let r = t.sqrt();
    Ok(I * Complex64::new(PI + s, r) / Complex64::new(PI - s, -r))
}

/// Orthonormal Hermite polynomial `𝔥_k(ζ)` for the weight `e^{-ζ²}`.
pub fn hermite_orthonormal(k: usize, zeta: f64) -> f64 {
    hermite_orthonormal_c(k, Complex64::new(zeta, 0.0)).re
}

fn hermite_orthonormal_c(k: usize, zeta: Complex64) -> Complex64 {
    let mut prev = Complex64::new(0.0, 0.0);
    let mut cur = Complex64::new(PI.powf(-0.25), 0.0);
    for j in 0..k {
        let jf = j as f64;
        let next = (2.0 / (jf + 1.0)).sqrt() * zeta * cur - (jf / (jf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Leading coefficient `κ_k = 2^{k/2}/(π^{1/4} √(k!))`.
pub fn kappa(k: usize) -> f64 {
    let ln_fact: f64 = (1..=k).map(|i| (i as f64).ln()).sum();
    (k as f64 / 2.0 * 2f64.ln() - 0.25 * PI.ln() - 0.5 * ln_fact).exp()
}

/// Semicircle density `(T/2π)√(4/T - x²)` on `|x| ≤ 2/√T`.
pub fn semicircle_density(x: f64, t: f64) -> Result<f64> {
    let edge = 2.0 / t.sqrt();
    if x.abs() > edge {
        return Err(Error::OutOfBand);
    }
    Ok(t / (2.0 * PI) * (4.0 / t - x * x).max(0.0).sqrt())
}

/// `F_j(T, μ, n)`; `F_{-1} = 0`.
pub fn f_coeff(j: i64, t: f64, mu: f64, n: usize) -> Result<f64> {
    if j < -1 {
        return Err(Error::InvalidParams(format!("F_j needs j >= -1, got {j}")));
    }
    if j == -1 {
        return Ok(0.0);
    }
    let mc = mu_crit(t)?;
    let nf = n as f64;
    let base = t / ((2.0 * PI).powf(1.5) * (PI * PI - t).powf(0.25));
    let ln_fact: f64 = (1..=j).map(|i| (i as f64).ln()).sum();
    let ln_f = ln_fact - (j + 1) as f64 * 2f64.ln() - 0.5 * PI.ln()
        + (2 * j + 1) as f64 * base.ln()
        + 2.0 * PI * nf * (mu - mc)
        - (j as f64 + 0.5) * nf.ln();
    Ok(ln_f.exp())
}

/// `G_j = (-1)^{n+1} F_j e^{2πiτ}`.
pub fn g_coeff(j: i64, t: f64, mu: f64, tau: f64, n: usize) -> Result<Complex64> {
    let sign = if n.is_multiple_of(2) { -1.0 } else { 1.0 };
    Ok(sign * f_coeff(j, t, mu, n)? * Complex64::from_polar(1.0, 2.0 * PI * tau))
}

/// Window index `k` with `μ_c + (k-½)L < μ ≤ μ_c + (k+½)L`, `L = ln n/(2πn)`;
/// `None` below the `k = 0` window.
pub fn hermite_window_k(n: usize, t: f64, mu: f64) -> Result<Option<usize>> {
    if n < 2 {
        return Err(Error::InvalidParams(
            "the Hermite window needs n >= 2".into(),
        ));
    }
    let x = (mu - mu_crit(t)?) / window_width(n);
    let k = (x - 0.5).ceil();
    Ok(if k < 0.0 { None } else { Some(k as usize) })
}

/// `ln n / (2πn)`.
pub fn window_width(n: usize) -> f64 {
    let nf = n as f64;
    nf.ln() / (2.0 * PI * nf)
}

/// Which boundary value to take on the band.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Plus,
    Minus,
}

/// Cached analytic quantities for one `(T, μ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AsymptoticContext {
    pub t: f64,
    pub mu: f64,
    pub a: Complex64,
    pub b: Complex64,
    pub mu_c: f64,
    pub delta: f64,
    pub z_tilde_c: Complex64,
    /// Closed-form constant `i(π + √(π²-T))/√T`.
    pub alpha_inf: Complex64,
    /// `lim_{z→∞} α(z) = -i/D(z̃_c)`; this is the constant that normalises
    /// the Hermite-regime formulas.
    pub alpha_limit: Complex64,
    pub lambda: Complex64,
    pub ell: f64,
    pub w1: f64,
    /// Half-width `2/√T` of the band.
    pub half_band: f64,
}

impl AsymptoticContext {
    pub fn new(t: f64, mu: f64) -> Result<Self> {
        check_t(t)?;
        let s = (PI * PI - t).sqrt();
        let half_band = 2.0 / t.sqrt();
        let delta = -mu + 2.0 * s / t;
        let mut ctx = AsymptoticContext {
            t,
            mu,
            a: Complex64::new(-half_band, mu),
            b: Complex64::new(half_band, mu),
            mu_c: mu_crit(t)?,
            delta,
            z_tilde_c: Complex64::new(0.0, mu - 2.0 * s / t),
            alpha_inf: alpha_inf_const(t)?,
            alpha_limit: Complex64::new(0.0, 0.0),
            lambda: lambda_const(t)?,
            ell: ell_const(t, mu),
            w1: (t / (2.0 * PI)).sqrt() * (PI * PI - t).powf(0.25),
            half_band,
        };
        ctx.alpha_limit = -I / ctx.d_at(ctx.z_tilde_c, None);
        Ok(ctx)
    }

    /// `𝔠 = 2π(μ - μ_c)`.
    pub fn c_shift(&self) -> f64 {
        2.0 * PI * (self.mu - self.mu_c)
    }

    /// Radius `min(δ/2, 0.5)` of the disk around `z̃_c`.
    pub fn disk_radius(&self) -> f64 {
        (self.delta / 2.0).min(0.5)
    }

    pub fn on_band(&self, z: Complex64) -> bool {
        (z.im - self.mu).abs() <= 1e-14 * (1.0 + self.mu.abs()) && z.re.abs() <= self.half_band
    }

    /// Distance from `z` to the segment `[a, b]`.
    pub fn band_distance(&self, z: Complex64) -> f64 {
        let x = z.re.clamp(-self.half_band, self.half_band);
        (z - Complex64::new(x, self.mu)).norm()
    }

    /// Band-frame coordinate, pushed to the requested side of the cut.
    fn frame(&self, z: Complex64, side: Option<Side>) -> Result<Complex64> {
        let w = z - I * self.mu;
        match side {
            None if self.on_band(z) => Err(Error::BandPoint),
            None => Ok(w),
            Some(s) => {
                if !self.on_band(z) {
                    return Err(Error::InvalidParams(
                        "boundary values exist only on the band".into(),
                    ));
                }
                let eps = if s == Side::Plus { 1e-300 } else { -1e-300 };
                Ok(Complex64::new(w.re, eps))
            }
        }
    }

    fn r_of(&self, w: Complex64) -> Complex64 {
        (w - self.half_band).sqrt() * (w + self.half_band).sqrt()
    }

    fn d_at(&self, z: Complex64, side: Option<Side>) -> Complex64 {
        let w = match side {
            Some(s) => self.frame(z, Some(s)).unwrap_or(z - I * self.mu),
            None => z - I * self.mu,
        };
        self.t.sqrt() / (2.0 * I) * (w + self.r_of(w))
    }

    /// `R(z) = ((z-a)(z-b))^{1/2}` with `R ~ z`.
    pub fn r_fn(&self, z: Complex64) -> Result<Complex64> {
        Ok(self.r_of(self.frame(z, None)?))
    }

    /// `D(z) = (√T/2i)(z - iμ + R(z))`.
    pub fn d_fn(&self, z: Complex64) -> Result<Complex64> {
        self.frame(z, None)?;
        Ok(self.d_at(z, None))
    }

    fn g_w(&self, w: Complex64) -> Complex64 {
        let r = self.r_of(w);
        self.t / 4.0 * w * (w - r) - (w - r).ln() - 0.5 + (2.0 / self.t).ln()
    }

    /// `g(z) = g₀(z - iμ)`.
    pub fn g_fn(&self, z: Complex64) -> Result<Complex64> {
        Ok(self.g_w(self.frame(z, None)?))
    }

    pub fn g_side(&self, z: Complex64, side: Side) -> Result<Complex64> {
        Ok(self.g_w(self.frame(z, Some(side))?))
    }

    fn gamma_w(&self, w: Complex64) -> Complex64 {
        (0.25 * ((w + self.half_band).ln() - (w - self.half_band).ln())).exp()
    }

    /// `γ(z) = ((z-a)/(z-b))^{1/4}`, `γ(∞) = 1`.
    pub fn gamma_fn(&self, z: Complex64) -> Result<Complex64> {
        Ok(self.gamma_w(self.frame(z, None)?))
    }

    pub fn gamma_side(&self, z: Complex64, side: Side) -> Result<Complex64> {
        Ok(self.gamma_w(self.frame(z, Some(side))?))
    }

    /// `V(z) = Tz²/2 - iTμz`.
    pub fn potential(&self, z: Complex64) -> Complex64 {
        self.t * z * z / 2.0 - I * self.t * self.mu * z
    }

    /// `φ(z) = 2g(z) - V(z) - ℓ - 2πiz`.
    pub fn phi_fn(&self, z: Complex64) -> Result<Complex64> {
        Ok(2.0 * self.g_fn(z)? - self.potential(z) - self.ell - 2.0 * PI * I * z)
    }

    fn alpha_from_d(&self, d: Complex64) -> Complex64 {
        let dc = self.d_at(self.z_tilde_c, None);
        I * (dc - d) / (1.0 + dc * d)
    }

    /// `α(z) = i(D(z̃_c) - D(z))/(1 + D(z̃_c)D(z))`.
    pub fn alpha_fn(&self, z: Complex64) -> Result<Complex64> {
        self.frame(z, None)?;
        Ok(self.alpha_from_d(self.d_at(z, None)))
    }

    pub fn alpha_side(&self, z: Complex64, side: Side) -> Result<Complex64> {
        self.frame(z, Some(side))?;
        Ok(self.alpha_from_d(self.d_at(z, Some(side))))
    }

    /// Local coordinate with `W² = -iπ + 𝔠 - φ(z)` and `W ≈ W₁(z - z̃_c)`.
    pub fn w_local(&self, z: Complex64) -> Result<Complex64> {
        let dz = z - self.z_tilde_c;
        if dz.norm() > self.disk_radius() {
            return Err(Error::OutsideDisk);
        }
        let w2 = -I * PI + self.c_shift() - self.phi_fn(z)?;
        let w = w2.sqrt();
        if dz.norm() == 0.0 {
            return Ok(w);
        }
        Ok(if (w / dz).re >= 0.0 { w } else { -w })
    }

    /// `α(z)/W(z)`, continuous through `z̃_c`.
    fn alpha_over_w(&self, z: Complex64) -> Result<Complex64> {
        let dz = z - self.z_tilde_c;
        if dz.norm() < 1e-6 {
            let h = 1e-4;
            let slope = (self.alpha_fn(self.z_tilde_c + h)? - self.alpha_fn(self.z_tilde_c - h)?)
                / (2.0 * h);
            return Ok(slope / self.w1);
        }
        Ok(self.alpha_fn(z)? / self.w_local(z)?)
    }
}

/// `z_c(T) = i(μ_c - (2/T)√(π²-T))`, the pinch point of the signature chart
/// at `μ = μ_c`.
pub fn critical_point(t: f64) -> Result<Complex64> {
    let s = (PI * PI - t).sqrt();
    Ok(Complex64::new(0.0, mu_crit(t)? - 2.0 * s / t))
}

/// Margins used to decide which asymptotic formula applies.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegionMargins {
    /// Distance from the band (and its endpoints) inside which no formula is
    /// used.
    pub band: f64,
    /// Disk radius around `z̃_c`; `None` means `min(δ/2, 0.5)`.
    pub disk: Option<f64>,
}

impl Default for RegionMargins {
    fn default() -> Self {
        RegionMargins {
            band: 0.1,
            disk: None,
        }
    }
}

fn band_or_outer(ctx: &AsymptoticContext, z: Complex64, margins: &RegionMargins) -> Result<bool> {
    if (z - ctx.a).norm() < margins.band || (z - ctx.b).norm() < margins.band {
        return Err(Error::NearBandEdge);
    }
    if ctx.on_band(z) {
        return Ok(true);
    }
    if ctx.band_distance(z) < margins.band {
        return Err(Error::RegionAmbiguous);
    }
    Ok(false)
}

fn outer_factor(ctx: &AsymptoticContext, gamma: Complex64) -> Complex64 {
    let _ = ctx;
    (gamma + 1.0 / gamma) / 2.0
}

/// Leading term of `p_{n,n}(z)` for `|μ| < μ_c`.
pub fn predict_poly_subcritical(z: Complex64, n: usize, t: f64, mu: f64) -> Result<Complex64> {
    predict_poly_subcritical_with(z, n, t, mu, &RegionMargins::default())
}

pub fn predict_poly_subcritical_with(
    z: Complex64,
    n: usize,
    t: f64,
    mu: f64,
    margins: &RegionMargins,
) -> Result<Complex64> {
    let ctx = AsymptoticContext::new(t, mu)?;
    if mu.abs() >= ctx.mu_c {
        return Err(Error::OutOfRegime(format!(
            "|mu| = {} is not below mu_c = {}",
            mu.abs(),
            ctx.mu_c
        )));
    }
    let nf = n as f64;
    if band_or_outer(&ctx, z, margins)? {
        let mut total = Complex64::new(0.0, 0.0);
        for side in [Side::Plus, Side::Minus] {
            let g = ctx.g_side(z, side)?;
            total += (nf * g).exp() * outer_factor(&ctx, ctx.gamma_side(z, side)?);
        }
        return Ok(total);
    }
    Ok((nf * ctx.g_fn(z)?).exp() * outer_factor(&ctx, ctx.gamma_fn(z)?))
}

/// Leading term of `p_{n,n}(z)` in the `k`-th Hermite window.
pub fn predict_poly_hermite(
    z: Complex64,
    n: usize,
    t: f64,
    mu: f64,
    k: usize,
) -> Result<Complex64> {
    predict_poly_hermite_with(z, n, t, mu, k, &RegionMargins::default())
}

pub fn predict_poly_hermite_with(
    z: Complex64,
    n: usize,
    t: f64,
    mu: f64,
    k: usize,
    margins: &RegionMargins,
) -> Result<Complex64> {
    let expected = hermite_window_k(n, t, mu)?;
    if expected != Some(k) {
        return Err(Error::WindowMismatch { given: k, expected });
    }
    let ctx = AsymptoticContext::new(t, mu)?;
    let nf = n as f64;
    let kk = k as i32;
    let radius = margins.disk.unwrap_or_else(|| ctx.disk_radius());
    if (z - ctx.z_tilde_c).norm() < radius {
        let ratio = ctx.alpha_over_w(z)? / ctx.alpha_limit;
        let w = ctx.w_local(z)?;
        let herm = hermite_orthonormal_c(k, nf.sqrt() * w) / (kappa(k) * nf.powf(k as f64 / 2.0));
        return Ok((nf * ctx.g_fn(z)?).exp()
            * ratio.powi(kk)
            * outer_factor(&ctx, ctx.gamma_fn(z)?)
            * herm);
    }
    if band_or_outer(&ctx, z, margins)? {
        let mut total = Complex64::new(0.0, 0.0);
        for side in [Side::Plus, Side::Minus] {
            let a = (ctx.alpha_side(z, side)? / ctx.alpha_limit).powi(kk);
            total += a
                * (nf * ctx.g_side(z, side)?).exp()
                * outer_factor(&ctx, ctx.gamma_side(z, side)?);
        }
        return Ok(total);
    }
    let a = (ctx.alpha_fn(z)? / ctx.alpha_limit).powi(kk);
    Ok((nf * ctx.g_fn(z)?).exp() * a * outer_factor(&ctx, ctx.gamma_fn(z)?))
}

/// Predicted `h_{n,n}`, `1/h_{n,n-1}`, `β_{n,n-1}` and `γ²_{n,n}`, with the
/// two norms also given as logarithms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NormPrediction {
    pub h_nn: Complex64,
    pub inv_h_nnm1: Complex64,
    pub ln_h_nn: Complex64,
    pub ln_inv_h_nnm1: Complex64,
    /// Not available in the Hermite regime.
    pub beta: Option<Complex64>,
    pub gamma_sq: Complex64,
}

fn ln_base_norm(n: usize, t: f64, mu: f64) -> f64 {
    let nf = n as f64;
    (2.0 * PI).ln() - (nf + 0.5) * t.ln() - nf * (t * mu * mu / 2.0 + 1.0)
}

fn ln_base_inv(n: usize, t: f64, mu: f64) -> f64 {
    let nf = n as f64;
    (nf - 0.5) * t.ln() + nf * (t * mu * mu / 2.0 + 1.0) - (2.0 * PI).ln()
}

pub fn predict_norms_subcritical(n: usize, t: f64, mu: f64) -> Result<NormPrediction> {
    let mc = mu_crit(t)?;
    if mu.abs() >= mc {
        return Err(Error::OutOfRegime(format!(
            "|mu| = {} is not below mu_c = {mc}",
            mu.abs()
        )));
    }
    let ln_h = Complex64::new(ln_base_norm(n, t, mu), 0.0);
    let ln_inv = Complex64::new(ln_base_inv(n, t, mu), 0.0);
    Ok(NormPrediction {
        h_nn: ln_h.exp(),
        inv_h_nnm1: ln_inv.exp(),
        ln_h_nn: ln_h,
        ln_inv_h_nnm1: ln_inv,
        beta: Some(I * mu),
        gamma_sq: Complex64::new(1.0 / t, 0.0),
    })
}

pub fn predict_norms_hermite(
    n: usize,
    t: f64,
    mu: f64,
    tau: f64,
    k: usize,
) -> Result<NormPrediction> {
    let expected = hermite_window_k(n, t, mu)?;
    if expected != Some(k) {
        return Err(Error::WindowMismatch { given: k, expected });
    }
    let ctx = AsymptoticContext::new(t, mu)?;
    let c = 2.0 * PI / t.sqrt();
    let lam = ctx.lambda;
    let gk = g_coeff(k as i64, t, mu, tau, n)?;
    let a = gk / (1.0 + gk);
    let b = if k > 0 {
        let inv = 1.0 / g_coeff(k as i64 - 1, t, mu, tau, n)?;
        inv / (1.0 + inv)
    } else {
        Complex64::new(0.0, 0.0)
    };
    let corr_h = 1.0 + c * a * lam + c * b / lam;
    let corr_inv = 1.0 + c * a / lam + c * b * lam;
    let two_k = 2.0 * k as f64;
    let ln_alpha = ctx.alpha_limit.ln();
    let ln_h = ln_base_norm(n, t, mu) + corr_h.ln() - two_k * ln_alpha;
    let ln_inv = ln_base_inv(n, t, mu) + corr_inv.ln() + two_k * ln_alpha;
    let gamma_sq = (1.0 + c * (a + b) * (lam + 1.0 / lam) + c * c * (a * a + b * b)) / t;
    Ok(NormPrediction {
        h_nn: ln_h.exp(),
        inv_h_nnm1: ln_inv.exp(),
        ln_h_nn: ln_h,
        ln_inv_h_nnm1: ln_inv,
        beta: None,
        gamma_sq,
    })
}

/// Masses `F_{k-1}^{-1} : 1 : F_k` on `{k-1, k, k+1}`.
pub fn predict_winding_hermite(n: usize, t: f64, mu: f64, k: usize) -> Result<WindingDistribution> {
    let fk = f_coeff(k as i64, t, mu, n)?;
    let fkm = f_coeff(k as i64 - 1, t, mu, n)?;
    let inv = if fkm == 0.0 { 0.0 } else { 1.0 / fkm };
    let z = 1.0 + fk + inv;
    let k = k as i64;
    let mut probs = BTreeMap::from([(k, 1.0 / z), (k + 1, fk / z)]);
    if k > 0 {
        probs.insert(k - 1, inv / z);
    }
    Ok(WindingDistribution {
        probs,
        imag_residue: 0.0,
        quadrature_nodes: 0,
        clamped: Vec::new(),
        excluded_nodes: 0,
        contour_shift: BTreeMap::new(),
    })
}

/// One sample of the signature chart.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChartPoint {
    pub x: f64,
    pub y: f64,
    pub re_phi: f64,
}

/// `Re φ` on a `resolution × resolution` grid, skipping points within `1e-6`
/// of the band.
pub fn sigchart_grid(
    t: f64,
    mu: f64,
    x_range: (f64, f64),
    y_range: (f64, f64),
    resolution: usize,
    exec: Exec,
) -> Result<Vec<ChartPoint>> {
    if resolution < 2 {
        return Err(Error::InvalidParams("resolution must be at least 2".into()));
    }
    let ctx = AsymptoticContext::new(t, mu)?;
    let step = |r: (f64, f64), i: usize| r.0 + (r.1 - r.0) * i as f64 / (resolution - 1) as f64;
    let rows = exec.map(resolution, |j| {
        let y = step(y_range, j);
        (0..resolution)
            .filter_map(|i| {
                let x = step(x_range, i);
                let z = Complex64::new(x, y);
                if ctx.band_distance(z) < 1e-6 {
                    return None;
                }
                ctx.phi_fn(z)
                    .ok()
                    .map(|p| ChartPoint { x, y, re_phi: p.re })
            })
            .collect::<Vec<_>>()
    });
    Ok(rows.into_iter().flatten().collect())
}

/// Number of zeros of `f` inside the circle `|z - centre| = radius`, by the
/// argument principle with adaptive refinement of the phase samples.
pub fn count_zeros_in_disk<F>(f: F, centre: Complex64, radius: f64) -> Result<i64>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let mut m = 256;
    loop {
        let vals: Vec<Complex64> = (0..=m)
            .map(|j| f(centre + Complex64::from_polar(radius, 2.0 * PI * j as f64 / m as f64)))
            .collect::<Result<_>>()?;
        if vals.iter().any(|v| v.norm() == 0.0 || !v.is_finite()) {
            return Err(Error::InvalidParams(
                "function vanishes or overflows on the contour".into(),
            ));
        }
        let steps: Vec<f64> = vals.windows(2).map(|p| (p[1] / p[0]).arg()).collect();
        let worst = steps.iter().fold(0.0f64, |a, s| a.max(s.abs()));
        if worst < PI / 4.0 || m >= 1 << 16 {
            let total: f64 = steps.iter().sum();
            return Ok((total / (2.0 * PI)).round() as i64);
        }
        m *= 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn mu_crit_values() {
        assert!((mu_crit(1.0).unwrap() - 2.4016).abs() < 5e-4);
        assert!((mu_crit(4.0).unwrap() - 0.2800).abs() < 1e-3);
        assert!(mu_crit(PI * PI - 1e-10).unwrap().abs() < 1e-4);
        assert!(mu_crit(PI * PI).is_err() && mu_crit(0.0).is_err());
    }

    #[test]
    fn lambda_is_i_alpha_inf() {
        for &t in &[0.1, 1.0, 4.0, 9.0] {
            let l = lambda_const(t).unwrap();
            assert!((l - I * alpha_inf_const(t).unwrap()).norm() < 1e-12);
            let s = (PI * PI - t).sqrt();
            assert!((l.re + t.sqrt() / (PI - s)).abs() < 1e-12 && l.im.abs() < 1e-12);
        }
        assert!((lambda_const(1.0).unwrap().re + 6.11978).abs() < 1e-4);
        assert!((alpha_inf_const(1.0).unwrap().im - 6.11978).abs() < 1e-4);
    }

    #[test]
    fn g_far_field() {
        let ctx = AsymptoticContext::new(1.0, 0.7).unwrap();
        let z = c(3e3, 8e3);
        let diff = ctx.g_fn(z).unwrap() - z.ln();
        assert!(diff.norm() < 1e-3);
        // g(z) - ln z = -iμ/z + O(z⁻²).
        let coeff = diff * z;
        assert!((coeff + I * 0.7).norm() < 1e-3);
        assert_eq!(ell_const(1.0, 0.0), -1.0);
    }

    #[test]
    fn gamma_defining_relation_and_branch() {
        let ctx = AsymptoticContext::new(2.0, 0.4).unwrap();
        for z in [c(1.3, -0.7), c(-2.0, 1.9), c(0.1, 3.0)] {
            let g = ctx.gamma_fn(z).unwrap();
            let lhs = g.powi(4) * (z - ctx.b);
            assert!((lhs - (z - ctx.a)).norm() < 1e-12);
        }
        let g = ctx.gamma_fn(c(10.0 / 2f64.sqrt(), 0.4)).unwrap();
        assert!(g.im.abs() < 1e-14 && g.re > 0.0);
        assert!((ctx.gamma_fn(c(1e8, 0.0)).unwrap() - 1.0).norm() < 1e-7);
        assert!(matches!(ctx.gamma_fn(c(0.2, 0.4)), Err(Error::BandPoint)));
    }

    #[test]
    fn semicircle_examples() {
        assert_eq!(semicircle_density(2.0, 1.0).unwrap(), 0.0);
        assert!((semicircle_density(0.0, 2.0).unwrap() - 2f64.sqrt() / PI).abs() < 1e-15);
        assert!(semicircle_density(2.1, 1.0).is_err());
    }

    #[test]
    fn z_tilde_is_minus_i_delta() {
        for &(t, mu) in &[(1.0, 0.0), (1.0, 2.4), (4.0, 0.1), (8.0, -0.3)] {
            let ctx = AsymptoticContext::new(t, mu).unwrap();
            assert!((ctx.z_tilde_c - c(0.0, -ctx.delta)).norm() < 1e-14);
        }
    }

    #[test]
    fn alpha_vanishes_at_critical_point_and_has_slope() {
        let ctx = AsymptoticContext::new(1.0, 1.3).unwrap();
        assert!(ctx.alpha_fn(ctx.z_tilde_c).unwrap().norm() < 1e-15);
        let h = 1e-6;
        let slope = ctx.alpha_fn(ctx.z_tilde_c + h).unwrap() / h;
        assert!((slope - (-1.0 / (4.0 * PI * PI))).norm() < 1e-6);
    }

    #[test]
    fn kappa_and_hermite() {
        assert!((kappa(0) - 0.751_126).abs() < 1e-6);
        assert_eq!(hermite_orthonormal(0, 3.7), PI.powf(-0.25));
        // 𝔥_2(ζ) = κ_2 (ζ² - 1/2).
        let z: f64 = 0.8;
        assert!((hermite_orthonormal(2, z) - kappa(2) * (z * z - 0.5)).abs() < 1e-14);
    }

    #[test]
    fn window_examples() {
        let n = 24;
        let mc = mu_crit(1.0).unwrap();
        assert_eq!(hermite_window_k(n, 1.0, mc).unwrap(), Some(0));
        assert_eq!(
            hermite_window_k(n, 1.0, mc + window_width(n)).unwrap(),
            Some(1)
        );
        assert_eq!(
            hermite_window_k(n, 1.0, mc - (n as f64).ln() / n as f64).unwrap(),
            None
        );
    }

    #[test]
    fn f_coefficients() {
        assert_eq!(f_coeff(-1, 1.0, 2.0, 10).unwrap(), 0.0);
        let mc = mu_crit(1.0).unwrap();
        let n = 24;
        let expect = 1.0 / (2.0 * PI.sqrt())
            * (1.0 / ((2.0 * PI).powf(1.5) * (PI * PI - 1.0).powf(0.25)))
            / (n as f64).sqrt();
        assert!((f_coeff(0, 1.0, mc, n).unwrap() / expect - 1.0).abs() < 1e-12);
        let d = predict_winding_hermite(n, 1.0, mc, 0).unwrap();
        assert!((d.prob(1) / d.prob(0) - f_coeff(0, 1.0, mc, n).unwrap()).abs() < 1e-15);
        assert!((d.total_mass() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_counter_on_polynomials() {
        let f = |z: Complex64| Ok((z - 0.1) * (z + c(0.0, 0.3)) * (z - 2.0));
        assert_eq!(count_zeros_in_disk(f, c(0.0, 0.0), 1.0).unwrap(), 2);
        assert_eq!(count_zeros_in_disk(f, c(2.0, 0.0), 0.5).unwrap(), 1);
        assert_eq!(count_zeros_in_disk(f, c(0.0, 5.0), 1.0).unwrap(), 0);
    }
}
