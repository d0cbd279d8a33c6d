//! The three iterations on the projector manifold: gradient descent along
//! `exp(t[D,F])`, the Roothaan fixed-point map `D ↦ aufbau(F(D))`, and
//! Level-Shifting `D ↦ aufbau(F(D) − bD)`, with tracing, stopping rules,
//! oscillation detection and automatic shift selection.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::hamiltonian::ElectronicSystem;
use crate::io::{csv_cell, fmt17};
use crate::manifold::{
    aufbau, aufbau_with_gap, geodesic_step, geodesic_step_with_delta, random_kick, DensityMatrix,
};
use crate::matops::{comm, sym_eig, SymMatrix};

/// Largest level shift tried by [`auto_shift`].
pub const MAX_AUTO_SHIFT: f64 = 65536.0;
/// Backtracking gives up after this many reductions of the step.
pub const MAX_HALVINGS: usize = 60;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepPolicy {
    FixedStep(f64),
    /// `t = 1/α` with `α` from [`estimate_alpha`].
    AlphaFormula,
    /// Armijo backtracking. `t_init = None` starts from `1/α` when the
    /// system carries kinetic and nuclear-charge metadata, else from 1.
    Backtracking { t_init: Option<f64>, shrink: f64, armijo: f64 },
}

impl StepPolicy {
    pub fn backtracking() -> Self {
        StepPolicy::Backtracking { t_init: None, shrink: 0.5, armijo: 0.5 }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        match *self {
            StepPolicy::FixedStep(t) if !(t > 0.0 && t.is_finite()) => bad(format!("step {t} must be > 0")),
            StepPolicy::Backtracking { t_init, shrink, armijo } => {
                if let Some(t) = t_init {
                    if !(t > 0.0 && t.is_finite()) {
                        return bad(format!("initial step {t} must be > 0"));
                    }
                }
                if !(shrink > 0.0 && shrink < 1.0) {
                    return bad(format!("shrink factor {shrink} must lie in (0, 1)"));
                }
                if !(armijo > 0.0 && armijo < 1.0) {
                    return bad(format!("Armijo constant {armijo} must lie in (0, 1)"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Algorithm {
    GradientDescent(StepPolicy),
    Roothaan,
    LevelShifting(f64),
}

impl Algorithm {
    pub fn name(&self) -> String {
        match self {
            Algorithm::GradientDescent(StepPolicy::FixedStep(t)) => format!("gradient(t={t})"),
            Algorithm::GradientDescent(StepPolicy::AlphaFormula) => "gradient(t=1/alpha)".into(),
            Algorithm::GradientDescent(StepPolicy::Backtracking { .. }) => "gradient(backtracking)".into(),
            Algorithm::Roothaan => "roothaan".into(),
            Algorithm::LevelShifting(b) => format!("level-shifting(b={b})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub algorithm: Algorithm,
    pub tol_grad: f64,
    pub tol_dd: f64,
    pub max_iter: usize,
    pub oscillation_window: usize,
    pub oscillation_ratio: f64,
    pub record_matrices: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            algorithm: Algorithm::Roothaan,
            tol_grad: 1e-8,
            tol_dd: 1e-10,
            max_iter: 100_000,
            oscillation_window: 20,
            oscillation_ratio: 1e6,
            record_matrices: false,
        }
    }
}

impl SolverConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        SolverConfig { algorithm, ..Default::default() }
    }

    pub fn with_tol(mut self, tol_grad: f64) -> Self {
        self.tol_grad = tol_grad;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn recording(mut self) -> Self {
        self.record_matrices = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x > 0.0 && x.is_finite();
        if !positive(self.tol_grad) || !positive(self.tol_dd) {
            return Err(Error::InvalidParameter("tolerances must be positive and finite".into()));
        }
        if !positive(self.oscillation_ratio) {
            return Err(Error::InvalidParameter("oscillation ratio must be positive".into()));
        }
        match self.algorithm {
            Algorithm::GradientDescent(p) => p.validate(),
            Algorithm::LevelShifting(b) if !(b >= 0.0 && b.is_finite()) => {
                Err(Error::InvalidParameter(format!("level shift {b} must be finite and >= 0")))
            }
            _ => Ok(()),
        }
    }
}

/// One row of the iteration trace. Optional fields are absent where they do
/// not apply: `dd1`/`dd2` before enough iterates exist, `gap`/`lyapunov`
/// for gradient descent, `step` for SCF iterations.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    pub energy: f64,
    pub grad_norm: f64,
    pub dd1: Option<f64>,
    pub dd2: Option<f64>,
    /// Gap of the (shifted) Fock matrix built from `D_k`.
    pub gap: Option<f64>,
    /// `E^b(D_{k−1}, D_k)`.
    pub lyapunov: Option<f64>,
    pub step: Option<f64>,
}

pub const TRACE_CSV_HEADER: &str = "k,energy,grad_norm,dd1,dd2,gap,lyapunov,step";

#[derive(Clone, Debug, Default, PartialEq)]
pub struct IterationTrace {
    pub records: Vec<IterationRecord>,
}

impl IterationTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }

    pub fn energies(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.energy).collect()
    }

    pub fn grad_norms(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.grad_norm).collect()
    }

    /// Index of the first record with `grad_norm ≤ tol`.
    pub fn iterations_to(&self, tol: f64) -> Option<usize> {
        self.records.iter().find(|r| r.grad_norm <= tol).map(|r| r.k)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(TRACE_CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            let cells = [
                r.k.to_string(),
                fmt17(r.energy),
                fmt17(r.grad_norm),
                csv_cell(r.dd1),
                csv_cell(r.dd2),
                csv_cell(r.gap),
                csv_cell(r.lyapunov),
                csv_cell(r.step),
            ];
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunStatus {
    Converged,
    Oscillating,
    MaxIterations,
    WellPosednessFailure,
}

impl RunStatus {
    pub fn name(self) -> &'static str {
        match self {
            RunStatus::Converged => "converged",
            RunStatus::Oscillating => "oscillating",
            RunStatus::MaxIterations => "max_iterations",
            RunStatus::WellPosednessFailure => "well_posedness_failure",
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub status: RunStatus,
    pub final_density: DensityMatrix,
    pub trace: IterationTrace,
    pub stored_iterates: Option<Vec<DensityMatrix>>,
    /// `‖aufbau(F(D_final)) − D_final‖`, `None` when the final Fock
    /// frontier is degenerate.
    pub aufbau_residual: Option<f64>,
    pub warnings: Vec<String>,
}

impl RunResult {
    pub fn iterations(&self) -> usize {
        self.trace.last().map_or(0, |r| r.k)
    }

    pub fn final_energy(&self) -> f64 {
        self.trace.last().map_or(f64::NAN, |r| r.energy)
    }

    pub fn final_grad_norm(&self) -> f64 {
        self.trace.last().map_or(f64::NAN, |r| r.grad_norm)
    }

    /// Whether the limit is an aufbau solution: checked only when the final
    /// gap exceeds `1e-6`.
    pub fn is_aufbau(&self, system: &ElectronicSystem) -> Option<bool> {
        let fock = system.fock(self.final_density.matrix()).ok()?;
        let gap = crate::manifold::gap(&fock, system.n_occ()).ok()?;
        if gap <= 1e-6 {
            return None;
        }
        self.aufbau_residual.map(|r| r <= 1e-6)
    }
}

pub fn run(system: &ElectronicSystem, d0: &DensityMatrix, config: &SolverConfig) -> Result<RunResult> {
    match config.algorithm {
        Algorithm::GradientDescent(_) => run_gradient(system, d0, config),
        Algorithm::Roothaan => run_roothaan(system, d0, config),
        Algorithm::LevelShifting(b) => run_level_shifting(system, d0, config, b),
    }
}

/// Core-Hamiltonian guess `aufbau(h)`.
pub fn core_guess(system: &ElectronicSystem) -> Result<DensityMatrix> {
    aufbau(system.h(), system.n_occ())
}

/// Seeded random tangent kick of Frobenius size `scale` from the core guess.
pub fn random_guess(system: &ElectronicSystem, seed: u64, scale: f64) -> Result<DensityMatrix> {
    random_kick(&core_guess(system)?, seed, scale)
}

fn check_start(system: &ElectronicSystem, d0: &DensityMatrix) -> Result<()> {
    if d0.dim() != system.n_basis() {
        return Err(Error::DimensionMismatch { expected: system.n_basis(), found: d0.dim() });
    }
    if d0.n_occ() != system.n_occ() {
        return Err(Error::InvalidOccupation(format!(
            "density has trace {} but the system occupies {} orbitals",
            d0.n_occ(),
            system.n_occ()
        )));
    }
    Ok(())
}

/// Fock matrix and energy sharing one two-electron contraction.
fn fock_and_energy(system: &ElectronicSystem, d: &DensityMatrix, k: usize) -> Result<(SymMatrix, f64)> {
    let fock = system.fock(d.matrix())?;
    let e = system.energy_with_fock(d.matrix(), &fock);
    if !e.is_finite() {
        return Err(Error::NonFiniteEnergy(k));
    }
    Ok((fock, e))
}

fn distance_to(d: &DensityMatrix, other: Option<&DensityMatrix>) -> Option<f64> {
    other.map(|o| d.distance(o))
}

fn aufbau_residual(system: &ElectronicSystem, d: &DensityMatrix) -> Option<f64> {
    let fock = system.fock(d.matrix()).ok()?;
    aufbau(&fock, system.n_occ()).ok().map(|a| a.distance(d))
}

/// `|ε''(t)|` along `D_t = exp(tA) D exp(−tA)`:
/// `ε'' = f·Tr(F_t[A,[A,D_t]]) + f·Tr(G([A,D_t])[A,D_t])`.
fn curvature(system: &ElectronicSystem, d_t: &DMatrix<f64>, a: &DMatrix<f64>) -> f64 {
    let f = system.occupation_factor();
    let first = comm(a, d_t);
    let second = comm(a, &first);
    let fock = system.fock_unchecked(d_t);
    let g1 = system.g_unchecked(&first);
    f * (fock.dot(&second) + g1.dot(&first))
}

fn conjugated(d: &DMatrix<f64>, a: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>> {
    let gen = crate::matops::AntiSymMatrix::antisymmetrize(a * t);
    let u = crate::matops::expm_antisym(&gen)?;
    Ok(u.as_matrix() * d * u.as_matrix().transpose())
}

/// `α = ‖−Δ‖_op + 4(6N + Z)√‖−Δ‖_op` with `‖−Δ‖_op = 2·λ_max(kinetic)`,
/// available when the system carries kinetic and nuclear-charge data.
pub fn alpha_formula(system: &ElectronicSystem) -> Option<f64> {
    let kinetic = system.kinetic()?;
    let z = system.nuclear_charge()? as f64;
    let lmax = *sym_eig(kinetic).ok()?.eigenvalues.last()?;
    let lap = 2.0 * lmax.max(0.0);
    Some(lap + 4.0 * (6.0 * system.n_electrons() as f64 + z) * lap.sqrt())
}

/// Sample points per probe direction in the empirical curvature estimate.
const ALPHA_SAMPLES: usize = 9;

/// Curvature bound `α` such that `|ε''(t)| ≤ α‖A‖²` along descent curves.
///
/// Uses [`alpha_formula`] when the metadata exists. Otherwise returns twice
/// the largest `|ε''(t)|/‖A‖²` over `n_probes` directions `A = [D₀, M]`: the
/// first is `M = F(D₀)`, the rest random combinations of matrices built from
/// `h`, `F` and `D₀` (so the estimate is invariant under a change of
/// orthonormal basis). `t` is sampled on `[0, 1/‖A‖]`.
pub fn estimate_alpha(system: &ElectronicSystem, d0: &DensityMatrix, n_probes: usize) -> Result<f64> {
    if let Some(alpha) = alpha_formula(system) {
        return Ok(alpha);
    }
    estimate_alpha_empirical(system, d0, n_probes)
}

pub fn estimate_alpha_empirical(system: &ElectronicSystem, d0: &DensityMatrix, n_probes: usize) -> Result<f64> {
    check_start(system, d0)?;
    let d = d0.matrix().as_matrix();
    let fock = system.fock(d)?;
    let c0 = comm(d, &fock);
    if c0.norm() == 0.0 {
        return Err(Error::ZeroGradient);
    }
    let h = system.h().as_matrix();
    let f = fock.as_matrix();
    let basis: Vec<DMatrix<f64>> = vec![
        f.clone(),
        h.clone(),
        f * f,
        h * h,
        f * d * f,
        h * d * h,
        f * h + h * f,
        f * f * f,
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_a1fa);
    let mut worst = 0.0f64;
    for probe in 0..n_probes.max(1) {
        let m = if probe == 0 {
            f.clone()
        } else {
            basis.iter().fold(DMatrix::zeros(d.nrows(), d.ncols()), |acc, b| {
                acc + b * (rng.gen_range(-1.0..1.0) / b.norm().max(1e-300))
            })
        };
        let a = comm(d, &m);
        let norm2 = a.norm_squared();
        if norm2 == 0.0 {
            continue;
        }
        let t_max = 1.0 / norm2.sqrt();
        for i in 0..ALPHA_SAMPLES {
            let t = t_max * i as f64 / (ALPHA_SAMPLES - 1) as f64;
            let d_t = conjugated(d, &a, t)?;
            worst = worst.max(curvature(system, &d_t, &a).abs() / norm2);
        }
    }
    if !(worst > 0.0) {
        // A flat energy along every probe: fall back to the linear scale.
        worst = f64::EPSILON;
    }
    Ok(2.0 * worst)
}

fn check_step(alpha: Option<f64>, t: f64, warnings: &mut Vec<String>) {
    if let Some(alpha) = alpha {
        if t >= 2.0 / alpha {
            warnings.push(format!("step {t} violates t < 2/alpha = {}", 2.0 / alpha));
        }
    }
}

/// Gradient descent `D_{k+1} = exp(t_k[D_k,F_k]) D_k exp(−t_k[D_k,F_k])`.
///
/// Backtracking accepts the first `t` with `ε(t) − ε(0) ≤ −c·t·f·‖C‖²`,
/// where the energy change is evaluated as `(f/2)·Tr((F + F⁺)(D⁺ − D))`
/// (exact for the quadratic energy) to avoid cancellation between two
/// nearly equal totals.
pub fn run_gradient(system: &ElectronicSystem, d0: &DensityMatrix, config: &SolverConfig) -> Result<RunResult> {
    config.validate()?;
    check_start(system, d0)?;
    let policy = match config.algorithm {
        Algorithm::GradientDescent(p) => p,
        other => return Err(Error::InvalidParameter(format!("{} is not a gradient algorithm", other.name()))),
    };
    let f = system.occupation_factor();
    let mut warnings = Vec::new();
    let formula = alpha_formula(system);
    let fixed_t = match policy {
        StepPolicy::FixedStep(t) => {
            check_step(formula, t, &mut warnings);
            Some(t)
        }
        StepPolicy::AlphaFormula => Some(f64::NAN),
        StepPolicy::Backtracking { .. } => None,
    };

    let mut d = d0.clone();
    let (mut fock, e) = fock_and_energy(system, &d, 0)?;
    let mut grad = crate::manifold::commutator_norm(&d, &fock);
    // The curvature estimate needs a nonzero gradient; skip it at a critical start.
    let fixed_t = match fixed_t {
        Some(t) if t.is_nan() && grad > config.tol_grad => Some(1.0 / estimate_alpha(system, d0, 8)?),
        other => other,
    };
    let mut prev: Option<DensityMatrix> = None;
    let mut trace = IterationTrace::default();
    let mut stored = config.record_matrices.then(|| vec![d.clone()]);
    trace.records.push(IterationRecord {
        k: 0,
        energy: e,
        grad_norm: grad,
        dd1: None,
        dd2: None,
        gap: None,
        lyapunov: None,
        step: None,
    });

    let mut status = RunStatus::MaxIterations;
    let mut k = 0;
    loop {
        if grad <= config.tol_grad {
            status = RunStatus::Converged;
            break;
        }
        if k >= config.max_iter {
            break;
        }
        let (t, next, next_fock, next_e) = match (fixed_t, policy) {
            (Some(t), _) => {
                let next = geodesic_step(&d, &fock, t)?;
                let (nf, ne) = fock_and_energy(system, &next, k + 1)?;
                (t, next, nf, ne)
            }
            (None, StepPolicy::Backtracking { t_init, shrink, armijo }) => {
                let mut t = t_init.or(formula.map(|a| 1.0 / a)).unwrap_or(1.0);
                let decrease = f * grad * grad;
                let mut halvings = 0;
                loop {
                    let (next, delta) = geodesic_step_with_delta(&d, &fock, t)?;
                    let (nf, ne) = fock_and_energy(system, &next, k + 1)?;
                    let change = 0.5 * f * (fock.as_matrix() + nf.as_matrix()).dot(&delta);
                    let noise = 8.0 * f64::EPSILON * f * (fock.norm() + nf.norm()) * delta.norm();
                    if change <= -armijo * t * decrease + noise {
                        break (t, next, nf, ne);
                    }
                    halvings += 1;
                    if halvings > MAX_HALVINGS {
                        return Err(Error::LineSearchFailed { iteration: k + 1, halvings: MAX_HALVINGS });
                    }
                    t *= shrink;
                }
            }
            (None, _) => unreachable!("fixed policies resolve a step"),
        };
        k += 1;
        let record = IterationRecord {
            k,
            energy: next_e,
            grad_norm: crate::manifold::commutator_norm(&next, &next_fock),
            dd1: Some(next.distance(&d)),
            dd2: distance_to(&next, prev.as_ref()),
            gap: None,
            lyapunov: None,
            step: Some(t),
        };
        grad = record.grad_norm;
        trace.records.push(record);
        if let Some(s) = stored.as_mut() {
            s.push(next.clone());
        }
        prev = Some(std::mem::replace(&mut d, next));
        fock = next_fock;
        if grad > config.tol_grad
            && detect_oscillation(&trace.records, config.oscillation_window, config.oscillation_ratio, config.tol_dd)
        {
            status = RunStatus::Oscillating;
            break;
        }
    }
    let aufbau_residual = aufbau_residual(system, &d);
    Ok(RunResult { status, final_density: d, trace, stored_iterates: stored, aufbau_residual, warnings })
}

/// Roothaan iteration `D_{k+1} = aufbau(F(D_k))`.
pub fn run_roothaan(system: &ElectronicSystem, d0: &DensityMatrix, config: &SolverConfig) -> Result<RunResult> {
    run_scf(system, d0, config, 0.0)
}

/// Level-Shifting `D_{k+1} = aufbau(F(D_k) − bD_k)`. Convergence is judged on
/// the unshifted residual `‖[D, F(D)]‖`, which equals the shifted one.
pub fn run_level_shifting(
    system: &ElectronicSystem,
    d0: &DensityMatrix,
    config: &SolverConfig,
    b: f64,
) -> Result<RunResult> {
    run_scf(system, d0, config, b)
}

fn run_scf(system: &ElectronicSystem, d0: &DensityMatrix, config: &SolverConfig, b: f64) -> Result<RunResult> {
    config.validate()?;
    check_start(system, d0)?;
    if !(b >= 0.0 && b.is_finite()) {
        return Err(Error::InvalidParameter(format!("level shift {b} must be finite and >= 0")));
    }
    let n_occ = system.n_occ();
    let shifted = |d: &DensityMatrix, fock: &SymMatrix| -> SymMatrix {
        if b == 0.0 {
            fock.clone()
        } else {
            SymMatrix::symmetrize(fock.as_matrix() - d.matrix().as_matrix() * b)
        }
    };

    let mut d = d0.clone();
    let (mut fock, e) = fock_and_energy(system, &d, 0)?;
    let mut trace = IterationTrace::default();
    let mut stored = config.record_matrices.then(|| vec![d.clone()]);
    let mut prev: Option<DensityMatrix> = None;
    trace.records.push(IterationRecord {
        k: 0,
        energy: e,
        grad_norm: crate::manifold::commutator_norm(&d, &fock),
        dd1: None,
        dd2: None,
        gap: None,
        lyapunov: None,
        step: None,
    });

    let mut k = 0;
    let status = loop {
        let grad = trace.records[k].grad_norm;
        let fb = shifted(&d, &fock);
        let step = aufbau_with_gap(&fb, n_occ);
        if let Ok((_, gap)) = &step {
            trace.records[k].gap = Some(*gap);
        }
        if grad <= config.tol_grad {
            break RunStatus::Converged;
        }
        if k >= config.max_iter {
            break RunStatus::MaxIterations;
        }
        let next = match step {
            Ok((next, gap)) if gap >= FRONTIER_GAP_MIN => next,
            Ok(_) | Err(Error::DegenerateFrontier { .. }) => break RunStatus::WellPosednessFailure,
            Err(e) => return Err(e),
        };
        k += 1;
        let (next_fock, next_e) = fock_and_energy(system, &next, k)?;
        let lyapunov =
            system.shifted_bilinear_functional(d.matrix().as_matrix(), next.matrix().as_matrix(), b);
        trace.records.push(IterationRecord {
            k,
            energy: next_e,
            grad_norm: crate::manifold::commutator_norm(&next, &next_fock),
            dd1: Some(next.distance(&d)),
            dd2: distance_to(&next, prev.as_ref()),
            gap: None,
            lyapunov: Some(lyapunov),
            step: None,
        });
        if let Some(s) = stored.as_mut() {
            s.push(next.clone());
        }
        prev = Some(std::mem::replace(&mut d, next));
        fock = next_fock;
        if trace.records[k].grad_norm > config.tol_grad
            && detect_oscillation(&trace.records, config.oscillation_window, config.oscillation_ratio, config.tol_dd)
        {
            if let Ok((_, gap)) = aufbau_with_gap(&shifted(&d, &fock), n_occ) {
                trace.records[k].gap = Some(gap);
            }
            break RunStatus::Oscillating;
        }
    };
    let aufbau_residual = aufbau_residual(system, &d);
    Ok(RunResult {
        status,
        final_density: d,
        trace,
        stored_iterates: stored,
        aufbau_residual,
        warnings: Vec::new(),
    })
}

/// Gap below which an SCF step is declared ill-posed.
pub const FRONTIER_GAP_MIN: f64 = 1e-12;

/// Fires when the trailing `window` records all carry `dd2 ≤ tol_dd` while
/// every `dd1 ≥ ratio·tol_dd`: even and odd iterates have settled on
/// different limits.
pub fn detect_oscillation(trace: &[IterationRecord], window: usize, ratio: f64, tol_dd: f64) -> bool {
    if window == 0 || trace.len() < window {
        return false;
    }
    let tail = &trace[trace.len() - window..];
    let mut max_dd2 = 0.0f64;
    let mut min_dd1 = f64::INFINITY;
    for r in tail {
        match (r.dd1, r.dd2) {
            (Some(d1), Some(d2)) => {
                max_dd2 = max_dd2.max(d2);
                min_dd1 = min_dd1.min(d1);
            }
            _ => return false,
        }
    }
    max_dd2 <= tol_dd && min_dd1 >= ratio * tol_dd
}

/// Level shifts tried by [`auto_shift`]: `0, 1, 2, 4, …, 2¹⁶`.
pub fn auto_shift_grid() -> Vec<f64> {
    std::iter::once(0.0)
        .chain((0..=16).map(|p| f64::from(1u32 << p)))
        .collect()
}

/// First shift of [`auto_shift_grid`] for which Level-Shifting converges.
pub fn auto_shift(system: &ElectronicSystem, d0: &DensityMatrix, config: &SolverConfig) -> Result<(f64, RunResult)> {
    let mut attempts = Vec::new();
    for b in auto_shift_grid() {
        let mut cfg = config.clone();
        cfg.algorithm = Algorithm::LevelShifting(b);
        match run_level_shifting(system, d0, &cfg, b) {
            Ok(result) if result.status == RunStatus::Converged => return Ok((b, result)),
            Ok(result) => attempts.push((b, result.status.name().to_string())),
            Err(e) => attempts.push((b, e.to_string())),
        }
    }
    Err(Error::ShiftSearchExhausted { attempts })
}

/// Parameters of the random-system family scanned by
/// [`search_oscillating_seeds`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeedSearch {
    pub n_basis: usize,
    pub n_electrons: usize,
    pub convention: crate::hamiltonian::OccupationConvention,
    pub interaction_scale: f64,
}

/// Seeds in `seeds` whose random system makes Roothaan, started from the
/// core guess, end in [`RunStatus::Oscillating`].
pub fn search_oscillating_seeds(
    family: SeedSearch,
    seeds: std::ops::Range<u64>,
    config: &SolverConfig,
) -> Vec<u64> {
    use rayon::prelude::*;
    let mut cfg = config.clone();
    cfg.algorithm = Algorithm::Roothaan;
    let mut found: Vec<u64> = seeds
        .into_par_iter()
        .filter(|&seed| {
            let Ok(system) = crate::hamiltonian::random_system(
                seed,
                family.n_basis,
                family.n_electrons,
                family.convention,
                family.interaction_scale,
            ) else {
                return false;
            };
            let Ok(d0) = core_guess(&system) else { return false };
            matches!(run_roothaan(&system, &d0, &cfg), Ok(r) if r.status == RunStatus::Oscillating)
        })
        .collect();
    found.sort_unstable();
    found
}
