//! The τ-deformed correlation kernel
//!
//! `K_n(φ,θ;t) = (n/2π) Σ_{j<n} S_{j,T-t}(φ) S_{j,t}(-θ)/h_j`,
//!
//! with `S_{j,a}(φ) = (1/n) Σ_x p_j(x) e^{-an(x²-2iμx)/2} e^{iφnx}`, and the
//! one-point density `K_n(θ,θ;t)`.
//!
//! The extra phase `e^{iφnx}` turns the weight into the lattice weight with
//! return time `a` and drift `μ + φ/a`, so `S_{j,a}` is evaluated exactly on
//! the Poisson-dual measure of that weight.

use crate::error::{Error, Result};
use crate::measure::{poisson_dual, Engine};
use crate::model::{lattice_points, ModelParams};
use crate::orthopoly::{build_op_system_with, OpSystem};
use crate::par::Exec;
use crate::winding::sigma_shift;
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;

/// Imaginary parts of the density below this size are dropped silently.
pub const IMAG_CLAMP: f64 = 1e-8;

/// OP system of degrees `0..n` and an intermediate time `t`.
#[derive(Clone, Debug)]
pub struct KernelContext {
    pub sys: OpSystem,
    pub params: ModelParams,
    pub t: f64,
}

impl KernelContext {
    /// Kernel for `params` as given; `params.tau` is used unchanged.
    pub fn new(params: &ModelParams, t: f64) -> Result<Self> {
        if !(t > 0.0 && t < params.return_time) {
            return Err(Error::InvalidParams(format!(
                "t = {t} must lie in (0, {})",
                params.return_time
            )));
        }
        let n = params.n;
        let sys = build_op_system_with(params, n - 1, Engine::PoissonDual)?;
        if let Some(degree) = sys.breakdown {
            return Err(Error::Breakdown { degree });
        }
        Ok(KernelContext {
            sys,
            params: *params,
            t,
        })
    }

    /// Kernel of the physical ensemble, with `τ = ς(n)`.
    pub fn physical(n: usize, return_time: f64, mu: f64, t: f64) -> Result<Self> {
        Self::new(&ModelParams::new(n, return_time, mu, sigma_shift(n))?, t)
    }

    fn check_a(&self, a: f64) -> Result<()> {
        if !(a > 0.0 && a < self.params.return_time + 1e-12) {
            return Err(Error::InvalidParams(format!("a = {a} must lie in (0, T]")));
        }
        Ok(())
    }

    /// `S_{j,a}(φ)` for every `j < n`.
    pub fn s_sums(&self, a: f64, phi: f64) -> Result<Vec<Complex64>> {
        self.check_a(a)?;
        let n = self.params.n;
        let measure = poisson_dual(
            n,
            a,
            self.params.mu + phi / a,
            Complex64::new(self.params.tau, 0.0),
            n,
        );
        let scale = measure.log_scale.exp();
        let mut sums = vec![Complex64::new(0.0, 0.0); n];
        for (&x, &w) in measure.nodes.iter().zip(&measure.weights) {
            let (mut prev, mut cur) = (Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0));
            for (j, sum) in sums.iter_mut().enumerate() {
                *sum += cur * w;
                let next = (x - self.sys.beta[j]) * cur - self.sys.gamma_sq[j] * prev;
                prev = cur;
                cur = next;
            }
        }
        Ok(sums.into_iter().map(|s| s * scale).collect())
    }

    /// `S_{j,a}(φ)`.
    pub fn s_sum(&self, j: usize, a: f64, phi: f64) -> Result<Complex64> {
        if j >= self.params.n {
            return Err(Error::InvalidParams(format!(
                "j = {j} must be below n = {}",
                self.params.n
            )));
        }
        Ok(self.s_sums(a, phi)?[j])
    }

    /// `S_{j,a}(φ)` as a direct lattice sum truncated at `eps`.
    pub fn s_sum_lattice(&self, j: usize, a: f64, phi: f64, eps: f64) -> Result<Complex64> {
        self.check_a(a)?;
        let shifted =
            ModelParams::new(self.params.n, a, self.params.mu + phi / a, self.params.tau)?;
        let window = lattice_points(&shifted, eps)?;
        let p = &self.params;
        let n = p.n as f64;
        Ok(window
            .points
            .iter()
            .map(|&x| {
                let w = Complex64::new(-a * n * x * x / 2.0, a * n * p.mu * x + phi * n * x).exp();
                self.sys.eval(j, Complex64::new(x, 0.0)).unwrap_or_default() * w
            })
            .sum::<Complex64>()
            / n)
    }

    /// `K_n(φ,θ;t)`.
    pub fn correlation_kernel(&self, phi: f64, theta: f64) -> Result<Complex64> {
        let big_t = self.params.return_time;
        let left = self.s_sums(big_t - self.t, phi)?;
        let right = self.s_sums(self.t, -theta)?;
        let mut total = Complex64::new(0.0, 0.0);
        for j in 0..self.params.n {
            total += left[j] * right[j] / self.sys.norm(j)?;
        }
        Ok(total * self.params.n as f64 / (2.0 * PI))
    }
}

/// One-point function on a grid of angles.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DensityProfile {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    /// Largest imaginary part that was dropped.
    pub max_imag: f64,
    /// Grid indices whose imaginary part exceeded [`IMAG_CLAMP`].
    pub imag_violations: Vec<usize>,
}

impl DensityProfile {
    /// Trapezoid mass, valid for a uniform grid covering one period.
    pub fn mass(&self) -> f64 {
        2.0 * PI * self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

/// `m` equally spaced angles starting at `-π`.
pub fn uniform_grid(m: usize) -> Vec<f64> {
    (0..m)
        .map(|i| -PI + 2.0 * PI * i as f64 / m as f64)
        .collect()
}

/// `K_n(θ,θ;t)` on `grid`.
pub fn density_profile(ctx: &KernelContext, grid: &[f64], exec: Exec) -> Result<DensityProfile> {
    let raw = exec.map_slice(grid, |&theta| ctx.correlation_kernel(theta, theta));
    let raw: Vec<Complex64> = raw.into_iter().collect::<Result<_>>()?;
    let max_imag = raw.iter().map(|k| k.im.abs()).fold(0.0, f64::max);
    let imag_violations = raw
        .iter()
        .enumerate()
        .filter(|(_, k)| k.im.abs() >= IMAG_CLAMP)
        .map(|(i, _)| i)
        .collect();
    Ok(DensityProfile {
        grid: grid.to_vec(),
        values: raw.iter().map(|k| k.re).collect(),
        max_imag,
        imag_violations,
    })
}

/// Semicircle with the same mass and second moment as `profile`, centred at
/// its mean, for visual comparison only.
pub fn semicircle_overlay(profile: &DensityProfile) -> Vec<f64> {
    let mass = profile.mass();
    let dtheta = 2.0 * PI / profile.values.len() as f64;
    let mean = profile
        .grid
        .iter()
        .zip(&profile.values)
        .map(|(x, v)| x * v)
        .sum::<f64>()
        * dtheta
        / mass;
    let var = profile
        .grid
        .iter()
        .zip(&profile.values)
        .map(|(x, v)| (x - mean).powi(2) * v)
        .sum::<f64>()
        * dtheta
        / mass;
    let radius = 2.0 * var.sqrt();
    profile
        .grid
        .iter()
        .map(|&x| {
            let u = x - mean;
            if u.abs() >= radius {
                0.0
            } else {
                mass * 2.0 / (PI * radius * radius) * (radius * radius - u * u).sqrt()
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::transition_density;

    #[test]
    fn constants_are_orthogonal_to_higher_degrees() {
        let params = ModelParams::new(5, 1.0, 0.4, 0.3).unwrap();
        let ctx = KernelContext::new(&params, 0.5).unwrap();
        let s = ctx.s_sums(1.0, 0.0).unwrap();
        assert!((s[0] - ctx.sys.norm(0).unwrap()).norm() < 1e-12 * s[0].norm());
        for v in &s[1..] {
            assert!(v.norm() < 1e-9);
        }
    }

    #[test]
    fn dual_and_lattice_sums_agree() {
        let params = ModelParams::new(4, 1.0, 0.3, 0.5).unwrap();
        let ctx = KernelContext::new(&params, 0.4).unwrap();
        for j in 0..4 {
            for &(a, phi) in &[(0.4, 0.7), (0.6, -1.2), (1.0, 2.5)] {
                let d = ctx.s_sum(j, a, phi).unwrap();
                let l = ctx.s_sum_lattice(j, a, phi, 1e-18).unwrap();
                assert!(
                    (d - l).norm() <= 1e-11 * (1.0 + l.norm()),
                    "j={j} a={a}: {d} vs {l}"
                );
            }
        }
    }

    #[test]
    fn single_walker_marginal() {
        // The one-walker kernel is the bridge marginal summed over windings.
        let (big_t, mu, t) = (1.0, 0.3, 0.4);
        let ctx = KernelContext::physical(1, big_t, mu, t).unwrap();
        let p = ModelParams::new(1, big_t, mu, 0.0).unwrap();
        let norm = transition_density(0.0, 0.0, big_t, &p).unwrap();
        for &theta in &[-2.0, -0.5, 0.0, 1.1, 3.0] {
            let k = ctx.correlation_kernel(theta, theta).unwrap();
            let expect = transition_density(0.0, theta, t, &p).unwrap()
                * transition_density(theta, 0.0, big_t - t, &p).unwrap()
                / norm;
            assert!((k - expect).norm() < 1e-8, "theta={theta}: {k} vs {expect}");
        }
    }

    #[test]
    fn hermitian_at_zero_drift() {
        let ctx = KernelContext::physical(4, 1.0, 0.0, 0.5).unwrap();
        for &(x, y) in &[(0.3, -1.0), (2.0, 0.5), (-3.0, 1.5)] {
            let a = ctx.correlation_kernel(x, y).unwrap();
            let b = ctx.correlation_kernel(y, x).unwrap();
            assert!((a - b.conj()).norm() < 1e-9);
        }
    }

    #[test]
    fn profile_mass_and_symmetry() {
        let ctx = KernelContext::physical(4, 1.0, 0.0, 0.5).unwrap();
        let grid = uniform_grid(512);
        let prof = density_profile(&ctx, &grid, Exec::Sequential).unwrap();
        assert!((prof.mass() - 4.0).abs() < 1e-6);
        assert!(prof.max_imag < 1e-9);
        for i in 1..256 {
            assert!((prof.values[i] - prof.values[512 - i]).abs() < 1e-7);
        }
        let overlay = semicircle_overlay(&prof);
        let mass: f64 = overlay.iter().sum::<f64>() * 2.0 * PI / 512.0;
        assert!((mass - 4.0).abs() < 0.1);
    }

    #[test]
    fn rejects_bad_times() {
        let params = ModelParams::new(3, 1.0, 0.0, 0.0).unwrap();
        assert!(KernelContext::new(&params, 1.0).is_err());
        assert!(KernelContext::new(&params, 0.0).is_err());
    }
}
