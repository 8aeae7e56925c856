//! One function per subcommand, each filling a [`Report`].

use crate::output::{Cell, Report};
use clap::{Args, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;
use std::str::FromStr;
use winding_core::asymptotics::{
    critical_point, hermite_window_k, mu_crit, predict_norms_hermite, predict_norms_subcritical,
    predict_poly_hermite, predict_poly_subcritical, sigchart_grid, AsymptoticContext,
};
use winding_core::kernel::{density_profile, semicircle_overlay, uniform_grid, KernelContext};
use winding_core::simulator::{empirical_winding, SimConfig};
use winding_core::winding::sigma_shift;
use winding_core::{
    build_op_system_with, winding_distribution_with, Engine, Exec, ModelParams, WindingOptions,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PrecisionArg {
    /// Poisson-dual measure in double precision.
    Double,
    /// Truncated lattice sum in double-double precision.
    Dd,
}

impl PrecisionArg {
    pub fn engine(self) -> Engine {
        match self {
            PrecisionArg::Double => Engine::PoissonDual,
            PrecisionArg::Dd => Engine::LATTICE_DD,
        }
    }
}

/// `lo:hi:step`, inclusive of `hi` up to rounding.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Sweep {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl Sweep {
    pub fn values(&self) -> Vec<f64> {
        let count = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize;
        (0..=count)
            .map(|i| self.lo + i as f64 * self.step)
            .collect()
    }
}

fn parse_floats(s: &str, expected: usize) -> Result<Vec<f64>, String> {
    let parts: Vec<f64> = s
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    if parts.len() != expected {
        return Err(format!(
            "expected {expected} colon-separated numbers, got {}",
            parts.len()
        ));
    }
    Ok(parts)
}

impl FromStr for Sweep {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let v = parse_floats(s, 3)?;
        let sweep = Sweep {
            lo: v[0],
            hi: v[1],
            step: v[2],
        };
        if sweep.step.is_nan() || sweep.step <= 0.0 || sweep.hi < sweep.lo {
            return Err("need step > 0 and hi >= lo".into());
        }
        Ok(sweep)
    }
}

/// `x0:x1:y0:y1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Bounds {
    pub x: (f64, f64),
    pub y: (f64, f64),
}

impl FromStr for Bounds {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let v = parse_floats(s, 4)?;
        if !(v[0] < v[1] && v[2] < v[3]) {
            return Err("need x0 < x1 and y0 < y1".into());
        }
        Ok(Bounds {
            x: (v[0], v[1]),
            y: (v[2], v[3]),
        })
    }
}

/// Complex point written as `re:im`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Point {
    pub re: f64,
    pub im: f64,
}

impl FromStr for Point {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let v = parse_floats(s, 2)?;
        Ok(Point { re: v[0], im: v[1] })
    }
}

#[derive(Args, Debug, Serialize)]
pub struct WindingArgs {
    /// Number of walkers.
    #[arg(long)]
    pub n: usize,
    /// Return time.
    #[arg(long = "T", default_value_t = 1.0)]
    #[serde(rename = "T")]
    pub big_t: f64,
    /// Single drift value.
    #[arg(
        long,
        conflicts_with = "sweep",
        required_unless_present = "sweep",
        allow_hyphen_values = true
    )]
    pub mu: Option<f64>,
    /// Drift sweep `lo:hi:step`.
    #[arg(long, allow_hyphen_values = true)]
    pub sweep: Option<Sweep>,
    #[arg(long, value_enum, default_value_t = PrecisionArg::Double)]
    pub precision: PrecisionArg,
}

pub fn winding(args: &WindingArgs) -> Report {
    let mut report = Report::new("winding", &["mu", "omega", "p", "imag_residue", "m"]);
    let mus = match (args.mu, args.sweep) {
        (Some(mu), _) => vec![mu],
        (None, Some(s)) => s.values(),
        (None, None) => Vec::new(),
    };
    let opts = WindingOptions {
        engine: args.precision.engine(),
        ..WindingOptions::default()
    };
    let mut clamped = 0;
    let mut excluded = 0;
    let mut max_residue = 0.0f64;
    let mut max_m = 0;
    for mu in mus {
        match winding_distribution_with(args.n, args.big_t, mu, &opts) {
            Ok(d) => {
                clamped += d.clamped.len();
                excluded = excluded.max(d.excluded_nodes);
                max_residue = max_residue.max(d.imag_residue);
                max_m = max_m.max(d.quadrature_nodes);
                for (&w, &p) in &d.probs {
                    report.push(vec![
                        mu.into(),
                        w.into(),
                        p.into(),
                        d.imag_residue.into(),
                        d.quadrature_nodes.into(),
                    ]);
                }
            }
            Err(e) => {
                report.diag("failed_mu", mu);
                report.error = Some(e);
                break;
            }
        }
    }
    report.diag("max_quadrature_nodes", max_m);
    report.diag("max_imag_residue", max_residue);
    report.diag("clamped_probabilities", clamped);
    report.diag("excluded_nodes", excluded);
    report
}

#[derive(Args, Debug, Serialize)]
pub struct CompareNormsArgs {
    /// Comma-separated list of sizes.
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<usize>,
    #[arg(long = "T", default_value_t = 1.0)]
    #[serde(rename = "T")]
    pub big_t: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub mu: f64,
    /// Lattice phase.
    #[arg(long, default_value_t = 0.0)]
    pub tau: f64,
    #[arg(long, value_enum, default_value_t = PrecisionArg::Double)]
    pub precision: PrecisionArg,
}

fn regime(n: usize, t: f64, mu: f64) -> winding_core::Result<(String, Option<usize>)> {
    let k = hermite_window_k(n, t, mu)?;
    Ok(match k {
        Some(k) => (format!("hermite:{k}"), Some(k)),
        None if mu < mu_crit(t)? => ("subcritical".into(), None),
        None => ("between-windows".into(), None),
    })
}

pub fn compare_norms(args: &CompareNormsArgs) -> Report {
    let mut report = Report::new(
        "compare-norms",
        &[
            "n",
            "regime",
            "ln_abs_h_exact",
            "ln_abs_h_pred_sub",
            "ln_abs_h_pred_herm",
            "err_sub",
            "err_herm",
        ],
    );
    let (t, mu) = (args.big_t, args.mu);
    for &n in &args.n {
        let row = (|| -> winding_core::Result<Vec<Cell>> {
            let (label, k) = regime(n, t, mu)?;
            let params = ModelParams::new(n, t, mu, args.tau)?;
            let sys = build_op_system_with(&params, n, args.precision.engine())?;
            let exact = sys.ln_norm(n)?.re;
            let sub = predict_norms_subcritical(n, t, mu)
                .ok()
                .map(|p| p.ln_h_nn.re);
            let herm = k
                .and_then(|k| predict_norms_hermite(n, t, mu, args.tau, k).ok())
                .map(|p| p.ln_h_nn.re);
            Ok(vec![
                n.into(),
                label.into(),
                exact.into(),
                sub.into(),
                herm.into(),
                sub.map(|s| (exact - s).abs()).into(),
                herm.map(|h| (exact - h).abs()).into(),
            ])
        })();
        match row {
            Ok(r) => report.push(r),
            Err(e) => {
                report.diag("failed_n", n);
                report.error = Some(e);
                break;
            }
        }
    }
    report
}

#[derive(Args, Debug, Serialize)]
pub struct SigchartArgs {
    #[arg(long = "T", default_value_t = 1.0)]
    #[serde(rename = "T")]
    pub big_t: f64,
    /// Drift; defaults to the critical drift.
    #[arg(long, allow_hyphen_values = true)]
    pub mu: Option<f64>,
    /// Plot window `x0:x1:y0:y1`.
    #[arg(long, default_value = "-4:4:-5:3", allow_hyphen_values = true)]
    pub bounds: Bounds,
    /// Points per axis.
    #[arg(long, default_value_t = 200)]
    pub grid: usize,
}

pub fn sigchart(args: &SigchartArgs) -> Report {
    let mut report = Report::new("sigchart", &["kind", "label", "x", "y", "re_phi"]);
    let result = (|| -> winding_core::Result<()> {
        let t = args.big_t;
        let mu = match args.mu {
            Some(mu) => mu,
            None => mu_crit(t)?,
        };
        report.diag("mu", mu);
        let ctx = AsymptoticContext::new(t, mu)?;
        let grid = sigchart_grid(
            t,
            mu,
            args.bounds.x,
            args.bounds.y,
            args.grid,
            Exec::Parallel,
        )?;
        for p in grid {
            report.push(vec![
                "grid".into(),
                Cell::Empty,
                p.x.into(),
                p.y.into(),
                p.re_phi.into(),
            ]);
        }
        let markers = [
            ("a", ctx.a),
            ("b", ctx.b),
            ("z_tilde_c", critical_point(t)?),
            ("minus_i_delta", Complex64::new(0.0, -ctx.delta)),
        ];
        for (label, z) in markers {
            let phi = ctx.phi_fn(z).ok().map(|v| v.re);
            report.push(vec![
                "marker".into(),
                label.into(),
                z.re.into(),
                z.im.into(),
                phi.into(),
            ]);
        }
        Ok(())
    })();
    report.error = result.err();
    report
}

#[derive(Args, Debug, Serialize)]
pub struct DensityArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long = "T", default_value_t = 1.0)]
    #[serde(rename = "T")]
    pub big_t: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub mu: f64,
    /// Intermediate time in (0, T).
    #[arg(long)]
    pub t: f64,
    /// Lattice phase; defaults to the physical value.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Number of angles on [-π, π).
    #[arg(long, default_value_t = 512)]
    pub grid: usize,
}

pub fn density(args: &DensityArgs) -> Report {
    let mut report = Report::new("density", &["theta", "density", "semicircle"]);
    let result = (|| -> winding_core::Result<()> {
        let tau = args.tau.unwrap_or_else(|| sigma_shift(args.n));
        let ctx = KernelContext::new(&ModelParams::new(args.n, args.big_t, args.mu, tau)?, args.t)?;
        let profile = density_profile(&ctx, &uniform_grid(args.grid), Exec::Parallel)?;
        let overlay = semicircle_overlay(&profile);
        for ((&theta, &v), &s) in profile.grid.iter().zip(&profile.values).zip(&overlay) {
            report.push(vec![theta.into(), v.into(), s.into()]);
        }
        report.diag("tau", tau);
        report.diag("mass", profile.mass());
        report.diag("max_imag", profile.max_imag);
        report.diag("imag_violations", &profile.imag_violations);
        Ok(())
    })();
    report.error = result.err();
    report
}

#[derive(Args, Debug, Serialize)]
pub struct SimulateArgs {
    /// Number of walkers.
    #[arg(long)]
    pub n: usize,
    #[arg(long = "T", default_value_t = 1.0)]
    #[serde(rename = "T")]
    pub big_t: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub mu: f64,
    /// Sites on the discrete circle.
    #[arg(long, default_value_t = 32)]
    pub lattice: usize,
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

pub fn simulate(args: &SimulateArgs) -> Report {
    let mut report = Report::new("simulate", &["omega", "count", "p", "half_width"]);
    report.seeds.push(args.seed);
    let result = (|| -> winding_core::Result<()> {
        let cfg = SimConfig::calibrated(args.n, args.big_t, args.mu, args.lattice, args.seed)?;
        let emp = empirical_winding(&cfg, args.samples, Exec::Parallel)?;
        for (&w, &k) in &emp.counts {
            report.push(vec![
                w.into(),
                (k as i64).into(),
                emp.dist.prob(w).into(),
                emp.half_width(w).into(),
            ]);
        }
        report.diag("n_steps", cfg.n_steps);
        report.diag("drift_bias", cfg.drift_bias);
        report.diag("calibration", emp.calibration);
        report.diag("proposals", emp.proposals);
        Ok(())
    })();
    report.error = result.err();
    report
}

#[derive(Args, Debug, Serialize)]
pub struct PolyCompareArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long = "T", default_value_t = 1.0)]
    #[serde(rename = "T")]
    pub big_t: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub mu: f64,
    /// Lattice phase; defaults to the physical value.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Evaluation points `re:im`, repeatable.
    #[arg(long, default_value = "3:0", allow_hyphen_values = true)]
    pub z: Vec<Point>,
    #[arg(long, value_enum, default_value_t = PrecisionArg::Double)]
    pub precision: PrecisionArg,
}

pub fn poly_compare(args: &PolyCompareArgs) -> Report {
    let mut report = Report::new(
        "poly-compare",
        &[
            "re",
            "im",
            "exact_re",
            "exact_im",
            "pred_sub_re",
            "pred_sub_im",
            "pred_herm_re",
            "pred_herm_im",
            "ratio_err_sub",
            "ratio_err_herm",
            "note",
        ],
    );
    let result = (|| -> winding_core::Result<()> {
        let (n, t, mu) = (args.n, args.big_t, args.mu);
        let tau = args.tau.unwrap_or_else(|| sigma_shift(n));
        let (label, k) = regime(n, t, mu)?;
        report.diag("regime", label);
        let sys = build_op_system_with(
            &ModelParams::new(n, t, mu, tau)?,
            n,
            args.precision.engine(),
        )?;
        for p in &args.z {
            let z = Complex64::new(p.re, p.im);
            let exact = sys.eval(n, z)?;
            let sub = predict_poly_subcritical(z, n, t, mu);
            let herm = k.map(|k| predict_poly_hermite(z, n, t, mu, k));
            let note: Vec<String> = [
                sub.as_ref().err(),
                herm.as_ref().and_then(|h| h.as_ref().err()),
            ]
            .into_iter()
            .flatten()
            .map(ToString::to_string)
            .collect();
            let sub = sub.ok();
            let herm = herm.and_then(Result::ok);
            report.push(vec![
                p.re.into(),
                p.im.into(),
                exact.re.into(),
                exact.im.into(),
                sub.map(|s| s.re).into(),
                sub.map(|s| s.im).into(),
                herm.map(|h| h.re).into(),
                herm.map(|h| h.im).into(),
                sub.map(|s| (exact / s - 1.0).norm()).into(),
                herm.map(|h| (exact / h - 1.0).norm()).into(),
                note.join("; ").into(),
            ]);
        }
        Ok(())
    })();
    report.error = result.err();
    report
}
