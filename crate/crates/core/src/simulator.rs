//! Nonintersecting lazy random-walk bridges on a discrete circle.
//!
//! Each walker lives on `Z/LZ` and moves `+1`, `-1` or `0` with
//! probabilities `(1+b)/4`, `(1-b)/4` and `1/2`. A walker is a bridge when it
//! comes back to its own start site after `n_steps` steps, and an ensemble is
//! accepted when, in unwrapped coordinates, `x_1 < x_2 < … < x_n < x_1 + L`
//! holds at every step.
//!
//! Calibration against the continuum model: one step has variance
//! `v = 1/2 - b²/4` and mean `b/2`, so with the diffusion parameter `n^{-1/2}`
//!
//! `T_eff = n · n_steps · v · (2π/L)²`, `μ_eff = n_steps · (b/2) · (2π/L) / T_eff`.
//!
//! Sampling is split into chunks of [`CHUNK`] ensembles. Chunk `c` draws from
//! a ChaCha8 generator seeded with `seed` on stream `c`, so the output does
//! not depend on the number of threads.

use crate::error::{Error, Result};
use crate::par::Exec;
use crate::winding::WindingDistribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;

/// Ensembles per seed stream.
pub const CHUNK: usize = 256;
pub const MAX_WALKERS: usize = 6;
pub const DEFAULT_PROPOSAL_CAP: u64 = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_walkers: usize,
    pub n_steps: usize,
    pub lattice_size: usize,
    pub drift_bias: f64,
    pub seed: u64,
    /// Single-walker proposals allowed per accepted ensemble.
    pub proposal_cap: u64,
}

/// Continuum parameters matched by a configuration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Calibration {
    pub step_variance: f64,
    pub t_eff: f64,
    pub mu_eff: f64,
}

impl SimConfig {
    pub fn new(
        n_walkers: usize,
        n_steps: usize,
        lattice_size: usize,
        drift_bias: f64,
        seed: u64,
    ) -> Result<Self> {
        let cfg = SimConfig {
            n_walkers,
            n_steps,
            lattice_size,
            drift_bias,
            seed,
            proposal_cap: DEFAULT_PROPOSAL_CAP,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Chooses `n_steps` and `b` so that the configuration approximates
    /// `(T, μ)` on a circle of `lattice_size` sites.
    pub fn calibrated(
        n_walkers: usize,
        return_time: f64,
        mu: f64,
        lattice_size: usize,
        seed: u64,
    ) -> Result<Self> {
        if return_time.is_nan() || return_time <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "T = {return_time} must be positive"
            )));
        }
        let sites = lattice_size as f64 / (2.0 * PI);
        // Angular drift μT = n_steps (b/2)(2π/L) and variance T/n, solved by
        // a few fixed-point passes since v depends on b.
        let mut v = 0.5;
        let mut steps = 1usize;
        let mut b = 0.0;
        for _ in 0..8 {
            steps =
                ((return_time * sites * sites / (n_walkers as f64 * v)).round() as usize).max(1);
            b = mu * return_time * lattice_size as f64 / (PI * steps as f64);
            v = 0.5 - b * b / 4.0;
        }
        Self::new(n_walkers, steps, lattice_size, b, seed)
    }

    fn validate(&self) -> Result<()> {
        if self.n_walkers == 0 || self.n_steps == 0 {
            return Err(Error::InvalidParams(
                "need at least one walker and one step".into(),
            ));
        }
        if 4 * self.n_walkers > self.lattice_size {
            return Err(Error::InvalidParams(format!(
                "{} walkers need at least {} sites, got {}",
                self.n_walkers,
                4 * self.n_walkers,
                self.lattice_size
            )));
        }
        if !(self.drift_bias > -1.0 && self.drift_bias < 1.0) {
            return Err(Error::InvalidParams(format!(
                "drift bias {} must lie in (-1, 1)",
                self.drift_bias
            )));
        }
        Ok(())
    }

    pub fn calibration(&self) -> Calibration {
        let v = 0.5 - self.drift_bias * self.drift_bias / 4.0;
        let dx = 2.0 * PI / self.lattice_size as f64;
        let t_eff = self.n_walkers as f64 * self.n_steps as f64 * v * dx * dx;
        Calibration {
            step_variance: v,
            t_eff,
            mu_eff: self.n_steps as f64 * self.drift_bias / 2.0 * dx / t_eff,
        }
    }

    /// Start site of walker `i`, spaced two apart around the origin.
    pub fn start_site(&self, i: usize) -> i64 {
        2 * i as i64 - (self.n_walkers as i64 - 1)
    }
}

/// One accepted ensemble.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BridgeEnsemble {
    /// Unwrapped site of every walker at steps `0..=n_steps`.
    pub paths: Vec<Vec<i64>>,
    pub windings: Vec<i64>,
    pub lattice_size: usize,
    /// Single-walker proposals used.
    pub proposals: u64,
}

impl BridgeEnsemble {
    /// Whether every path is a bridge and the ordering holds at every step.
    pub fn is_valid(&self) -> bool {
        let l = self.lattice_size as i64;
        let bridges = self.paths.iter().zip(&self.windings).all(|(p, &w)| {
            let d = p[p.len() - 1] - p[0];
            d == w * l
        });
        let steps = self.paths.first().map_or(0, |p| p.len());
        bridges && (0..steps).all(|s| ordered(self.paths.iter().map(|p| p[s]), l))
    }
}

fn ordered(mut xs: impl Iterator<Item = i64>, l: i64) -> bool {
    let Some(first) = xs.next() else { return true };
    let mut prev = first;
    for x in xs {
        if x <= prev {
            return false;
        }
        prev = x;
    }
    prev < first + l
}

pub fn total_winding(ens: &BridgeEnsemble) -> i64 {
    ens.windings.iter().sum()
}

fn walk(rng: &mut ChaCha8Rng, start: i64, cfg: &SimConfig, path: &mut Vec<i64>) {
    let up = (1.0 + cfg.drift_bias) / 4.0;
    let down = up + (1.0 - cfg.drift_bias) / 4.0;
    path.clear();
    path.push(start);
    let mut x = start;
    for _ in 0..cfg.n_steps {
        let u: f64 = rng.random();
        if u < up {
            x += 1;
        } else if u < down {
            x -= 1;
        }
        path.push(x);
    }
}

fn sample_with(rng: &mut ChaCha8Rng, cfg: &SimConfig) -> Result<BridgeEnsemble> {
    let l = cfg.lattice_size as i64;
    let n = cfg.n_walkers;
    let mut paths = vec![Vec::with_capacity(cfg.n_steps + 1); n];
    let mut proposals = 0u64;
    loop {
        for (i, path) in paths.iter_mut().enumerate() {
            loop {
                if proposals >= cfg.proposal_cap {
                    return Err(Error::RejectionBudgetExceeded { proposals });
                }
                proposals += 1;
                walk(rng, cfg.start_site(i), cfg, path);
                if (path[cfg.n_steps] - path[0]).rem_euclid(l) == 0 {
                    break;
                }
            }
        }
        if (0..=cfg.n_steps).all(|s| ordered(paths.iter().map(|p| p[s]), l)) {
            let windings = paths.iter().map(|p| (p[cfg.n_steps] - p[0]) / l).collect();
            return Ok(BridgeEnsemble {
                paths,
                windings,
                lattice_size: cfg.lattice_size,
                proposals,
            });
        }
    }
}

/// Draws one ensemble from stream 0 of `cfg.seed`.
pub fn sample_bridge_ensemble(cfg: &SimConfig) -> Result<BridgeEnsemble> {
    check_sampling(cfg)?;
    sample_with(&mut stream(cfg.seed, 0), cfg)
}

fn check_sampling(cfg: &SimConfig) -> Result<()> {
    cfg.validate()?;
    if cfg.n_walkers > MAX_WALKERS {
        return Err(Error::InvalidParams(format!(
            "at most {MAX_WALKERS} walkers, got {}",
            cfg.n_walkers
        )));
    }
    Ok(())
}

/// Generator for seed stream `index`.
pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Frequency table of the total winding with Wilson intervals.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EmpiricalWinding {
    pub dist: WindingDistribution,
    pub counts: BTreeMap<i64, u64>,
    /// One-standard-error Wilson half-width per winding number.
    pub half_widths: BTreeMap<i64, f64>,
    pub n_samples: usize,
    pub proposals: u64,
    pub calibration: Calibration,
}

impl EmpiricalWinding {
    pub fn half_width(&self, omega: i64) -> f64 {
        self.half_widths
            .get(&omega)
            .copied()
            .unwrap_or_else(|| wilson_half_width(0, self.n_samples as u64, 1.0))
    }
}

/// Half-width of the Wilson score interval for `k` successes in `n` trials at
/// `z` standard errors.
pub fn wilson_half_width(k: u64, n: u64, z: f64) -> f64 {
    let n = n as f64;
    let p = k as f64 / n;
    z / (1.0 + z * z / n) * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt()
}

/// Samples `n_samples` ensembles and tabulates their total windings.
pub fn empirical_winding(
    cfg: &SimConfig,
    n_samples: usize,
    exec: Exec,
) -> Result<EmpiricalWinding> {
    check_sampling(cfg)?;
    if n_samples == 0 {
        return Err(Error::InvalidParams("need at least one sample".into()));
    }
    let chunks = n_samples.div_ceil(CHUNK);
    let parts = exec.map(chunks, |c| -> Result<(BTreeMap<i64, u64>, u64)> {
        let mut rng = stream(cfg.seed, c as u64);
        let size = CHUNK.min(n_samples - c * CHUNK);
        let mut counts = BTreeMap::new();
        let mut proposals = 0;
        for _ in 0..size {
            let ens = sample_with(&mut rng, cfg)?;
            proposals += ens.proposals;
            *counts.entry(total_winding(&ens)).or_insert(0u64) += 1;
        }
        Ok((counts, proposals))
    });
    let mut counts = BTreeMap::new();
    let mut proposals = 0;
    for part in parts {
        let (c, p) = part?;
        proposals += p;
        for (w, k) in c {
            *counts.entry(w).or_insert(0) += k;
        }
    }
    let total = n_samples as f64;
    let probs = counts
        .iter()
        .map(|(&w, &k)| (w, k as f64 / total))
        .collect();
    let half_widths = counts
        .iter()
        .map(|(&w, &k)| (w, wilson_half_width(k, n_samples as u64, 1.0)))
        .collect();
    Ok(EmpiricalWinding {
        dist: WindingDistribution {
            probs,
            imag_residue: 0.0,
            quadrature_nodes: 0,
            clamped: Vec::new(),
            excluded_nodes: 0,
            contour_shift: BTreeMap::new(),
        },
        counts,
        half_widths,
        n_samples,
        proposals,
        calibration: cfg.calibration(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat(n: usize, steps: usize) -> BridgeEnsemble {
        BridgeEnsemble {
            paths: (0..n).map(|i| vec![2 * i as i64; steps + 1]).collect(),
            windings: vec![0; n],
            lattice_size: 16,
            proposals: 0,
        }
    }

    #[test]
    fn total_winding_examples() {
        let e = flat(3, 4);
        assert_eq!(total_winding(&e), 0);
        assert!(e.is_valid());
        let mut one = flat(1, 4);
        one.paths[0] = vec![0, 5, 8, 12, 16];
        one.windings[0] = 1;
        assert_eq!(total_winding(&one), 1);
        assert!(one.is_valid());
        // With several walkers a lone winding overtakes a neighbour's image.
        let mut e = flat(3, 4);
        e.paths[2] = vec![4, 5, 8, 12, 20];
        e.windings[2] = 1;
        assert_eq!(total_winding(&e), 1);
        assert!(!e.is_valid());
        let recomputed: i64 = e.paths.iter().map(|p| (p[4] - p[0]) / 16).sum();
        assert_eq!(recomputed, total_winding(&e));
    }

    #[test]
    fn crossing_is_detected() {
        let mut e = flat(2, 2);
        e.paths[0] = vec![0, 1, 0];
        e.paths[1] = vec![2, 1, 2];
        assert!(!e.is_valid());
        e.paths[1] = vec![2, 3, 17];
        e.windings[1] = 1;
        // Walker 1 ends a full turn ahead but overtakes walker 0's image.
        assert!(!e.is_valid());
    }

    #[test]
    fn deterministic_and_valid() {
        let cfg = SimConfig::new(3, 20, 16, 0.1, 42).unwrap();
        let a = sample_bridge_ensemble(&cfg).unwrap();
        let b = sample_bridge_ensemble(&cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.is_valid());
    }

    #[test]
    fn thread_count_does_not_change_output() {
        let cfg = SimConfig::new(2, 30, 16, 0.0, 7).unwrap();
        let a = empirical_winding(&cfg, 1000, Exec::Sequential).unwrap();
        let b = empirical_winding(&cfg, 1000, Exec::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn calibration_round_trip() {
        let cfg = SimConfig::calibrated(1, 1.0, 0.5, 64, 1).unwrap();
        let c = cfg.calibration();
        assert!((c.t_eff - 1.0).abs() < 0.02, "{c:?}");
        assert!((c.mu_eff * c.t_eff - 0.5).abs() < 1e-12);
    }

    #[test]
    fn budget_is_enforced() {
        let mut cfg = SimConfig::new(6, 400, 24, 0.0, 3).unwrap();
        cfg.proposal_cap = 50;
        assert!(matches!(
            sample_bridge_ensemble(&cfg),
            Err(Error::RejectionBudgetExceeded { .. })
        ));
        assert!(SimConfig::new(5, 10, 16, 0.0, 0).is_err());
        assert!(SimConfig::new(2, 10, 16, 1.0, 0).is_err());
    }

    #[test]
    fn wilson_examples() {
        assert!((wilson_half_width(50, 100, 1.0) - 0.0495).abs() < 1e-3);
        assert!(wilson_half_width(0, 100, 3.0) > 0.0);
    }
}
