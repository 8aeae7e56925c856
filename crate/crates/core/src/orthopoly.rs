//! Monic orthogonal polynomials for the complex lattice weight under the
//! bilinear (unconjugated) form `⟨f, g⟩ = (1/n) Σ_x f(x) g(x) w(x)`.

use crate::error::{Error, Result};
use crate::measure::{lattice_measure, recurrence_at, Engine, Recurrence};
use crate::model::{lattice_points, weight, ModelParams};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

const INNER_EPS: f64 = 1e-16;

/// Polynomials `p_0..p_{max_degree}` with their norms and recurrence data.
#[derive(Clone, Debug, Serialize)]
pub struct OpSystem {
    pub params: ModelParams,
    pub engine: Engine,
    pub max_degree: usize,
    /// `monic_coeffs[j][i]` is the coefficient of `x^i` in `p_j`.
    pub monic_coeffs: Vec<Vec<Complex64>>,
    /// `h_j` divided by `exp(log_scale)`.
    pub scaled_norms: Vec<Complex64>,
    pub log_scale: f64,
    pub beta: Vec<Complex64>,
    /// `gamma_sq[j] = h_j / h_{j-1}`; entry 0 is unused and zero.
    pub gamma_sq: Vec<Complex64>,
    pub breakdown: Option<usize>,
    /// `max_{j≠k} |⟨p_j,p_k⟩| / max(|h_j|,|h_k|)` measured after construction.
    pub orthogonality_residual: f64,
}

pub fn build_op_system(params: &ModelParams, max_degree: usize) -> Result<OpSystem> {
    build_op_system_with(params, max_degree, Engine::default())
}

pub fn build_op_system_with(
    params: &ModelParams,
    max_degree: usize,
    engine: Engine,
) -> Result<OpSystem> {
    if let Engine::Lattice { eps, .. } = engine {
        let count = lattice_points(params, eps)?.points.len();
        if max_degree + 1 > count {
            return Err(Error::InvalidParams(format!(
                "degree {max_degree} needs more than the {count} lattice points in the window"
            )));
        }
    }
    let tau = Complex64::new(params.tau, 0.0);
    let rec = recurrence_at(
        params.n,
        params.return_time,
        params.mu,
        tau,
        max_degree,
        engine,
    )?;
    let Recurrence {
        norms,
        beta,
        gamma_sq,
        log_scale,
        breakdown,
    } = rec;
    let top = norms.len().saturating_sub(1);
    let mut monic_coeffs: Vec<Vec<Complex64>> = vec![vec![Complex64::new(1.0, 0.0)]];
    for j in 0..top {
        let mut next = vec![Complex64::new(0.0, 0.0); j + 2];
        for (i, &c) in monic_coeffs[j].iter().enumerate() {
            next[i + 1] += c;
            next[i] -= beta[j] * c;
        }
        if j >= 1 {
            for (i, &c) in monic_coeffs[j - 1].iter().enumerate() {
                next[i] -= gamma_sq[j] * c;
            }
        }
        monic_coeffs.push(next);
    }
    let mut sys = OpSystem {
        params: *params,
        engine,
        max_degree: top,
        monic_coeffs,
        scaled_norms: norms,
        log_scale,
        beta,
        gamma_sq,
        breakdown,
        orthogonality_residual: 0.0,
    };
    sys.orthogonality_residual = sys.measure_orthogonality()?;
    Ok(sys)
}

impl OpSystem {
    fn require(&self, degree: usize) -> Result<()> {
        match self.breakdown {
            Some(b) if degree >= b => Err(Error::Breakdown { degree: b }),
            _ if degree > self.max_degree => Err(Error::InvalidParams(format!(
                "degree {degree} exceeds {}",
                self.max_degree
            ))),
            _ => Ok(()),
        }
    }

    /// `h_j`.
    pub fn norm(&self, j: usize) -> Result<Complex64> {
        self.require(j)?;
        Ok(self.scaled_norms[j] * self.log_scale.exp())
    }

    /// `ln h_j` on the principal branch of the scaled part.
    pub fn ln_norm(&self, j: usize) -> Result<Complex64> {
        self.require(j)?;
        Ok(self.scaled_norms[j].ln() + self.log_scale)
    }

    /// Coefficient `c_{k,j}` of `x^j` in `p_k`.
    pub fn coeff(&self, k: usize, j: usize) -> Result<Complex64> {
        self.require(k)?;
        Ok(self.monic_coeffs[k].get(j).copied().unwrap_or_default())
    }

    /// `c_{k,k-1} = -Σ_{i<k} β_i`, computed without the coefficient table.
    pub fn subleading_coeff(&self, k: usize) -> Result<Complex64> {
        if k > 0 {
            self.require(k - 1)?;
        }
        Ok(-self.beta[..k].iter().sum::<Complex64>())
    }

    /// Evaluates `p_j(z)` by the three-term recurrence.
    pub fn eval(&self, j: usize, z: Complex64) -> Result<Complex64> {
        self.require(j)?;
        Ok(eval_recurrence(&self.beta, &self.gamma_sq, j, z))
    }

    /// Evaluates `p_j(z)` from the stored monomial coefficients (Horner).
    pub fn eval_horner(&self, j: usize, z: Complex64) -> Result<Complex64> {
        self.require(j)?;
        Ok(horner(&self.monic_coeffs[j], z))
    }

    /// Orthogonality residual measured on the construction measure with the
    /// recurrence evaluation of every `p_j`.
    fn measure_orthogonality(&self) -> Result<f64> {
        let d = self.max_degree;
        if d == 0 {
            return Ok(0.0);
        }
        let tau = Complex64::new(self.params.tau, 0.0);
        let measure = match self.engine {
            Engine::PoissonDual => crate::measure::poisson_dual(
                self.params.n,
                self.params.return_time,
                self.params.mu,
                tau,
                d,
            ),
            Engine::Lattice { eps, .. } => lattice_measure(&self.params, eps)?,
        };
        let values: Vec<Vec<Complex64>> = measure
            .nodes
            .iter()
            .map(|&x| {
                let mut out = Vec::with_capacity(d + 1);
                let (mut prev, mut cur) = (Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0));
                out.push(cur);
                for j in 0..d {
                    let next = (x - self.beta[j]) * cur - self.gamma_sq[j] * prev;
                    prev = cur;
                    cur = next;
                    out.push(cur);
                }
                out
            })
            .collect();
        let mut worst: f64 = 0.0;
        for j in 0..=d {
            for k in 0..j {
                let ip: Complex64 = values
                    .iter()
                    .zip(&measure.weights)
                    .map(|(v, w)| v[j] * v[k] * w)
                    .sum();
                let scale = self.scaled_norms[j].norm().max(self.scaled_norms[k].norm());
                worst = worst.max(ip.norm() / scale);
            }
        }
        Ok(worst)
    }
}

pub(crate) fn eval_recurrence(
    beta: &[Complex64],
    gamma_sq: &[Complex64],
    j: usize,
    z: Complex64,
) -> Complex64 {
    let (mut prev, mut cur) = (Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0));
    for i in 0..j {
        let next = (z - beta[i]) * cur - gamma_sq[i] * prev;
        prev = cur;
        cur = next;
    }
    cur
}

fn horner(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    coeffs
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

/// `(1/n) Σ_{x∈L} f(x) g(x) w(x)` on the lattice window at `ε = 1e-16`, with
/// `f` and `g` given by monomial coefficients.
pub fn bilinear_inner(f: &[Complex64], g: &[Complex64], params: &ModelParams) -> Result<Complex64> {
    let window = lattice_points(params, INNER_EPS)?;
    let inv_n = 1.0 / params.n as f64;
    Ok(window
        .points
        .iter()
        .map(|&x| {
            let z = Complex64::new(x, 0.0);
            horner(f, z) * horner(g, z) * weight(x, params) * inv_n
        })
        .sum())
}

/// Lattice moments `m_j = (1/n) Σ x^j w(x)` for `j = 0..=j_max`.
pub fn moments(params: &ModelParams, j_max: usize) -> Result<Vec<Complex64>> {
    let window = lattice_points(params, INNER_EPS)?;
    let inv_n = 1.0 / params.n as f64;
    let mut out = vec![Complex64::new(0.0, 0.0); j_max + 1];
    for &x in &window.points {
        let mut term = weight(x, params) * inv_n;
        for m in out.iter_mut() {
            *m += term;
            term *= x;
        }
    }
    Ok(out)
}

/// Hankel determinant from the moment matrix, with its 2-norm condition
/// number.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HankelDirect {
    pub value: Complex64,
    pub condition: f64,
}

/// Determinant of `(m_{j+k})_{j,k<size}`; usable for `size ≤ 10` only.
pub fn hankel_direct(params: &ModelParams, size: usize) -> Result<HankelDirect> {
    if size == 0 || size > 10 {
        return Err(Error::InvalidParams(format!(
            "hankel_direct size {size} not in 1..=10"
        )));
    }
    let m = moments(params, 2 * size - 2)?;
    let mat = DMatrix::from_fn(size, size, |j, k| m[j + k]);
    let sv = mat.clone().svd(false, false).singular_values;
    let condition = sv.max() / sv.min();
    if condition > 1e12 {
        log::warn!("Hankel matrix of size {size} has condition number {condition:e}");
    }
    Ok(HankelDirect {
        value: mat.determinant(),
        condition,
    })
}

/// `H_size = Π_{j<size} h_j`.
pub fn hankel_from_norms(sys: &OpSystem, size: usize) -> Result<Complex64> {
    if size == 0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    sys.require(size - 1)?;
    Ok(
        sys.scaled_norms[..size].iter().product::<Complex64>()
            * (size as f64 * sys.log_scale).exp(),
    )
}

/// `ln H_size` as a sum of logarithms of the norms.
pub fn ln_hankel_from_norms(sys: &OpSystem, size: usize) -> Result<Complex64> {
    if size == 0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    sys.require(size - 1)?;
    Ok(sys.scaled_norms[..size]
        .iter()
        .map(|h| h.ln())
        .sum::<Complex64>()
        + size as f64 * sys.log_scale)
}

/// Discrete Cauchy transform `(1/n) Σ_x p_j(x) w(x)/(z - x)` on the lattice.
pub fn cauchy_transform(sys: &OpSystem, j: usize, z: Complex64) -> Result<Complex64> {
    sys.require(j)?;
    let window = lattice_points(&sys.params, INNER_EPS)?;
    let nearest = window
        .points
        .iter()
        .map(|&x| (z - x).norm())
        .fold(f64::INFINITY, f64::min);
    if nearest < 1e-8 {
        return Err(Error::NearPole { distance: nearest });
    }
    let inv_n = 1.0 / sys.params.n as f64;
    Ok(window
        .points
        .iter()
        .map(|&x| {
            let xc = Complex64::new(x, 0.0);
            eval_recurrence(&sys.beta, &sys.gamma_sq, j, xc) * weight(x, &sys.params) * inv_n
                / (z - xc)
        })
        .sum())
}
