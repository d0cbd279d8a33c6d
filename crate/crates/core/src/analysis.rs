//! Post-hoc convergence analytics: tail error sums, geometric-rate fits,
//! Łojasiewicz exponent probes, shift-scaling studies and algorithm
//! comparisons.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hamiltonian::ElectronicSystem;
use crate::manifold::DensityMatrix;
use crate::solvers::{run, Algorithm, IterationTrace, RunResult, RunStatus, SolverConfig};

/// Least-squares line `y ≈ slope·x + intercept` with its coefficient of
/// determination. A constant `y` is fitted exactly (`r2 = 1`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), found: y.len() });
    }
    if x.len() < 2 {
        return Err(Error::InsufficientData { usable: x.len(), required: 2 });
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("regression abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - slope * a - intercept).powi(2)).sum();
    let r2 = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };
    Ok(LinearFit { slope, intercept, r2 })
}

/// `e_k = Σ_{l≥k} ‖D_{l+stride} − D_l‖` over the realized trajectory: a
/// truncated, hence lower, estimate of the infinite sum.
pub fn tail_error_series(iterates: &[DensityMatrix], stride: usize) -> Result<Vec<f64>> {
    if stride == 0 {
        return Err(Error::InvalidParameter("stride must be at least 1".into()));
    }
    if iterates.is_empty() {
        return Err(Error::MissingIterates);
    }
    if iterates.len() < stride + 1 {
        return Err(Error::InsufficientData { usable: iterates.len(), required: stride + 1 });
    }
    let steps: Vec<f64> = (0..iterates.len() - stride)
        .map(|l| iterates[l + stride].distance(&iterates[l]))
        .collect();
    let mut tail = vec![0.0; steps.len()];
    let mut acc = 0.0;
    for (k, s) in steps.iter().enumerate().rev() {
        acc += s;
        tail[k] = acc;
    }
    Ok(tail)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitOptions {
    /// Values at or below this floor are discarded.
    pub floor: f64,
    /// Fraction of the usable points, taken from the end, entering the rate.
    pub window_fraction: f64,
    pub min_points: usize,
    /// Full-range semilog `r2` below which sublinear decay is suspected.
    pub degenerate_r2: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { floor: 10.0 * f64::EPSILON, window_fraction: 0.5, min_points: 8, degenerate_r2: 0.99 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateFit {
    /// `ν = 1 − exp(m)` from the trailing-window slope `m` of `log e_k`.
    pub nu: f64,
    pub r2: f64,
    /// Semilog `r2` over every usable point.
    pub full_r2: f64,
    /// Exponent `p` of the log-log fit `e_k ≈ c·k^p` (1-based `k`).
    pub loglog_exponent: f64,
    pub loglog_r2: f64,
    /// Set when the full semilog fit is poor and a power law fits better.
    pub degenerate: bool,
    pub points: usize,
}

pub fn fit_geometric_rate(series: &[f64]) -> Result<RateFit> {
    fit_geometric_rate_with(series, &FitOptions::default())
}

/// Geometric-rate fit of a decaying series indexed from 0. The log-log fit
/// uses `k + 1` as abscissa.
pub fn fit_geometric_rate_with(series: &[f64], opts: &FitOptions) -> Result<RateFit> {
    let usable: Vec<(f64, f64)> = series
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite() && **v > opts.floor)
        .map(|(k, v)| (k as f64, v.ln()))
        .collect();
    if usable.len() < opts.min_points {
        return Err(Error::InsufficientData { usable: usable.len(), required: opts.min_points });
    }
    let window = ((usable.len() as f64 * opts.window_fraction).ceil() as usize)
        .max(opts.min_points)
        .min(usable.len());
    let tail = &usable[usable.len() - window..];
    let (xs, ys): (Vec<f64>, Vec<f64>) = tail.iter().copied().unzip();
    let fit = linear_fit(&xs, &ys)?;
    let (all_x, all_y): (Vec<f64>, Vec<f64>) = usable.iter().copied().unzip();
    let full = linear_fit(&all_x, &all_y)?;
    let log_k: Vec<f64> = all_x.iter().map(|k| (k + 1.0).ln()).collect();
    let loglog = linear_fit(&log_k, &all_y)?;
    Ok(RateFit {
        nu: -fit.slope.exp_m1(),
        r2: fit.r2,
        full_r2: full.r2,
        loglog_exponent: loglog.slope,
        loglog_r2: loglog.r2,
        degenerate: full.r2 < opts.degenerate_r2 && loglog.r2 > full.r2,
        points: window,
    })
}

/// Energy band, relative to `E∞`, used by the Łojasiewicz regression.
pub const LOJA_BAND: (f64, f64) = (100.0 * f64::EPSILON, 1e-2);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LojasiewiczFit {
    /// `1 − s` for the regression slope `s` of `log‖∇‖` on `log(E − E∞)`.
    pub theta_raw: f64,
    /// `theta_raw` clamped into `(0, 1/2]`.
    pub theta: f64,
    pub clamped: bool,
    /// `exp(−intercept)`, so `|E − E∞|^{1−θ} = κ‖∇‖` on the regression line.
    pub kappa: f64,
    pub r2: f64,
    pub points: usize,
    pub e_inf: f64,
}

/// Regresses `log‖∇E‖` on `log(E_k − E∞)` over the points with
/// `E_k − E∞ ∈` [`LOJA_BAND`]. `E∞` defaults to the smallest energy.
pub fn lojasiewicz_probe(energies: &[f64], grad_norms: &[f64], e_inf: Option<f64>) -> Result<LojasiewiczFit> {
    if energies.len() != grad_norms.len() {
        return Err(Error::DimensionMismatch { expected: energies.len(), found: grad_norms.len() });
    }
    let e_inf = e_inf.unwrap_or_else(|| energies.iter().copied().fold(f64::INFINITY, f64::min));
    let (x, y): (Vec<f64>, Vec<f64>) = energies
        .iter()
        .zip(grad_norms)
        .filter_map(|(&e, &g)| {
            let gap = e - e_inf;
            (gap > LOJA_BAND.0 && gap < LOJA_BAND.1 && g > 0.0 && g.is_finite()).then(|| (gap.ln(), g.ln()))
        })
        .unzip();
    if x.len() < 8 {
        return Err(Error::InsufficientData { usable: x.len(), required: 8 });
    }
    let fit = linear_fit(&x, &y)?;
    let theta_raw = 1.0 - fit.slope;
    let theta = theta_raw.clamp(f64::MIN_POSITIVE, 0.5);
    Ok(LojasiewiczFit {
        theta_raw,
        theta,
        clamped: theta != theta_raw,
        kappa: (-fit.intercept).exp(),
        r2: fit.r2,
        points: x.len(),
        e_inf,
    })
}

pub fn lojasiewicz_probe_trace(trace: &IterationTrace, e_inf: Option<f64>) -> Result<LojasiewiczFit> {
    lojasiewicz_probe(&trace.energies(), &trace.grad_norms(), e_inf)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub nu: Option<f64>,
    pub nu_r2: Option<f64>,
    pub theta: Option<f64>,
    pub theta_clamped: bool,
    pub kappa: Option<f64>,
    pub degenerate_flag: bool,
    /// Tail sums `e_k`, present when the run stored its iterates.
    pub tail: Option<Vec<f64>>,
}

/// Report for a finished run: the rate is fitted on the gradient-norm
/// series, the tail sums use stride 1 for gradient descent and 2 otherwise.
pub fn convergence_report(result: &RunResult, algorithm: &Algorithm, e_inf: Option<f64>) -> ConvergenceReport {
    let rate = fit_geometric_rate(&result.trace.grad_norms()).ok();
    let loja = lojasiewicz_probe_trace(&result.trace, e_inf).ok();
    let stride = match algorithm {
        Algorithm::GradientDescent(_) => 1,
        _ => 2,
    };
    let tail = result.stored_iterates.as_ref().and_then(|it| tail_error_series(it, stride).ok());
    ConvergenceReport {
        nu: rate.map(|r| r.nu),
        nu_r2: rate.map(|r| r.r2),
        theta: loja.map(|l| l.theta),
        theta_clamped: loja.is_some_and(|l| l.clamped),
        kappa: loja.map(|l| l.kappa),
        degenerate_flag: rate.is_some_and(|r| r.degenerate),
        tail,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShiftPoint {
    pub b: f64,
    pub status: Option<RunStatus>,
    pub iterations: Option<usize>,
    pub nu: Option<f64>,
    pub r2: Option<f64>,
    pub error: Option<String>,
}

/// One Level-Shifting run per shift, in parallel; every outcome is kept.
pub fn shift_sweep(system: &ElectronicSystem, d0: &DensityMatrix, b_grid: &[f64], config: &SolverConfig) -> Vec<ShiftPoint> {
    b_grid
        .par_iter()
        .map(|&b| {
            let mut cfg = config.clone();
            cfg.algorithm = Algorithm::LevelShifting(b);
            let mut point = ShiftPoint { b, status: None, iterations: None, nu: None, r2: None, error: None };
            match run(system, d0, &cfg) {
                Ok(r) => {
                    point.status = Some(r.status);
                    point.iterations = Some(r.iterations());
                    match fit_geometric_rate(&r.trace.grad_norms()) {
                        Ok(fit) => {
                            point.nu = Some(fit.nu);
                            point.r2 = Some(fit.r2);
                        }
                        Err(e) => point.error = Some(e.to_string()),
                    }
                }
                Err(e) => point.error = Some(e.to_string()),
            }
            point
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShiftStudy {
    pub points: Vec<ShiftPoint>,
    /// Slope of `log ν` against `log b` over the largest-`b` half of the grid.
    pub slope: f64,
    pub slope_r2: f64,
    /// `ν(b_max)/ν(b_prev)` for the two largest shifts.
    pub last_ratio: f64,
}

/// Requires a grid of at least 5 shifts spanning 1.5 decades, every run
/// converged and every rate fitted.
pub fn shift_scaling_study(
    system: &ElectronicSystem,
    d0: &DensityMatrix,
    b_grid: &[f64],
    config: &SolverConfig,
) -> Result<ShiftStudy> {
    let mut grid = b_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    if grid.len() < 5 || grid[0] <= 0.0 || (grid[grid.len() - 1] / grid[0]).log10() < 1.5 {
        return Err(Error::InvalidParameter(
            "shift grid needs at least 5 positive values spanning 1.5 decades".into(),
        ));
    }
    summarize_shift_sweep(shift_sweep(system, d0, &grid, config))
}

/// Scaling law from finished sweep points sorted by `b`: fails when any run
/// did not converge or has no fitted rate.
pub fn summarize_shift_sweep(points: Vec<ShiftPoint>) -> Result<ShiftStudy> {
    if points.len() < 2 {
        return Err(Error::InsufficientData { usable: points.len(), required: 2 });
    }
    let failed: Vec<f64> = points.iter().filter(|p| p.status != Some(RunStatus::Converged)).map(|p| p.b).collect();
    if !failed.is_empty() {
        return Err(Error::NotConverged(failed));
    }
    if let Some(p) = points.iter().find(|p| p.nu.is_none()) {
        return Err(Error::InvalidParameter(format!(
            "b = {}: {}",
            p.b,
            p.error.clone().unwrap_or_else(|| "no rate".into())
        )));
    }
    let upper = &points[points.len() - points.len().div_ceil(2)..];
    let x: Vec<f64> = upper.iter().map(|p| p.b.ln()).collect();
    let y: Vec<f64> = upper.iter().map(|p| p.nu.unwrap_or(f64::NAN).ln()).collect();
    let fit = linear_fit(&x, &y)?;
    let n = points.len();
    let last_ratio = points[n - 1].nu.unwrap_or(f64::NAN) / points[n - 2].nu.unwrap_or(f64::NAN);
    Ok(ShiftStudy { points, slope: fit.slope, slope_r2: fit.r2, last_ratio })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonRow {
    pub name: String,
    pub status: Option<RunStatus>,
    /// First iteration with `‖[D,F]‖ ≤ 1e-8`.
    pub iterations_to_tol: Option<usize>,
    pub iterations: Option<usize>,
    pub final_energy: Option<f64>,
    pub final_grad_norm: Option<f64>,
    pub nu: Option<f64>,
    pub error: Option<String>,
}

pub const COMPARISON_TOL: f64 = 1e-8;

/// Runs every named configuration from the same start, in parallel.
pub fn compare_algorithms(
    system: &ElectronicSystem,
    d0: &DensityMatrix,
    configs: &[(String, SolverConfig)],
) -> Vec<ComparisonRow> {
    configs
        .par_iter()
        .map(|(name, cfg)| match run(system, d0, cfg) {
            Ok(r) => ComparisonRow {
                name: name.clone(),
                status: Some(r.status),
                iterations_to_tol: r.trace.iterations_to(COMPARISON_TOL),
                iterations: Some(r.iterations()),
                final_energy: Some(r.final_energy()),
                final_grad_norm: Some(r.final_grad_norm()),
                nu: fit_geometric_rate(&r.trace.grad_norms()).ok().map(|f| f.nu),
                error: None,
            },
            Err(e) => ComparisonRow {
                name: name.clone(),
                status: None,
                iterations_to_tol: None,
                iterations: None,
                final_energy: None,
                final_grad_norm: None,
                nu: None,
                error: Some(e.to_string()),
            },
        })
        .collect()
}
