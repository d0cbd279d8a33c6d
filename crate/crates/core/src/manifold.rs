//! The manifold of rank-`N` orthogonal projectors
//! `{D : Dᵀ = D, D² = D, Tr D = N}` and the geometry used by the solvers:
//! tangent projection `P_D(M) = [D,[D,M]]`, the constrained gradient
//! `[D,[D,F]]`, the geodesic step `D⁺ = exp(t[D,F]) D exp(−t[D,F])`, the
//! retraction `R_{D₀}(Δ) = U D₀ Uᵀ` with `U = exp(−[D₀,Δ])`, and the aufbau
//! projector.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::hamiltonian::ElectronicSystem;
use crate::matops::{
    comm, expm_antisym, expm_antisym_with_increment, idempotency_residual, mcweeny_purify, sym_eig, AntiSymMatrix, SymMatrix,
    PURIFY_DEFAULT_TOL,
};

/// Idempotency budget per basis function.
pub const IDEMPOTENCY_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-8;
pub const TANGENT_TOL: f64 = 1e-10;
/// Eigenvalue separation below which a frontier counts as degenerate.
pub const FRONTIER_TOL: f64 = 1e-12;

/// A point of the projector manifold.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: SymMatrix,
    n_occ: usize,
}

impl DensityMatrix {
    pub fn new(matrix: SymMatrix, n_occ: usize) -> Result<Self> {
        let n = matrix.dim();
        if n_occ > n {
            return Err(Error::NotDensityMatrix(format!("n_occ {n_occ} exceeds dimension {n}")));
        }
        if matrix.iter().any(|x| !x.is_finite()) {
            return Err(Error::NotDensityMatrix("non-finite entries".into()));
        }
        let idem = idempotency_residual(&matrix);
        if idem > IDEMPOTENCY_TOL * n as f64 {
            return Err(Error::NotDensityMatrix(format!("|D^2 - D| = {idem:e}")));
        }
        let tr = matrix.trace();
        if (tr - n_occ as f64).abs() > TRACE_TOL {
            return Err(Error::NotDensityMatrix(format!("trace {tr} differs from {n_occ}")));
        }
        Ok(DensityMatrix { matrix, n_occ })
    }

    pub fn matrix(&self) -> &SymMatrix {
        &self.matrix
    }

    pub fn n_occ(&self) -> usize {
        self.n_occ
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn idempotency_residual(&self) -> f64 {
        idempotency_residual(&self.matrix)
    }

    pub fn trace_error(&self) -> f64 {
        (self.matrix.trace() - self.n_occ as f64).abs()
    }

    /// `‖self − other‖_F`.
    pub fn distance(&self, other: &DensityMatrix) -> f64 {
        (self.matrix.as_matrix() - other.matrix.as_matrix()).norm()
    }

    /// McWeeny-purified copy.
    pub fn purified(&self) -> Result<DensityMatrix> {
        let p = mcweeny_purify(&self.matrix, self.n_occ, PURIFY_DEFAULT_TOL)?;
        DensityMatrix::new(p, self.n_occ)
    }

    /// Coordinate projector `diag(1, …, 1, 0, …, 0)`.
    pub fn coordinate(n: usize, n_occ: usize) -> Result<Self> {
        let diag: Vec<f64> = (0..n).map(|i| if i < n_occ { 1.0 } else { 0.0 }).collect();
        DensityMatrix::new(SymMatrix::from_diagonal(&diag), n_occ)
    }
}

/// Symmetric matrix in the tangent space at `base`.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentVector {
    matrix: SymMatrix,
    base: DensityMatrix,
}

impl TangentVector {
    /// Checks `DΔ + ΔD = Δ` and `Tr Δ = 0`, scaled by `max(1, ‖Δ‖)`.
    pub fn new(base: DensityMatrix, matrix: SymMatrix) -> Result<Self> {
        if matrix.dim() != base.dim() {
            return Err(Error::DimensionMismatch { expected: base.dim(), found: matrix.dim() });
        }
        let d = base.matrix().as_matrix();
        let m = matrix.as_matrix();
        let scale = m.norm().max(1.0);
        let constraint = (d * m + m * d - m).norm();
        if constraint > TANGENT_TOL * scale {
            return Err(Error::NotTangent(format!("|D X + X D - X| = {constraint:e}")));
        }
        if matrix.trace().abs() > TANGENT_TOL * scale {
            return Err(Error::NotTangent(format!("trace {:e}", matrix.trace())));
        }
        Ok(TangentVector { matrix, base })
    }

    pub fn matrix(&self) -> &SymMatrix {
        &self.matrix
    }

    pub fn base(&self) -> &DensityMatrix {
        &self.base
    }

    pub fn norm(&self) -> f64 {
        self.matrix.norm()
    }

    pub fn scale(&self, s: f64) -> TangentVector {
        TangentVector { matrix: self.matrix.scale(s), base: self.base.clone() }
    }
}

fn check_dim(d: &DensityMatrix, m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() != d.dim() || m.ncols() != d.dim() {
        return Err(Error::DimensionMismatch { expected: d.dim(), found: m.nrows() });
    }
    Ok(())
}

/// Projector onto the eigenvectors of the `n_occ` largest eigenvalues of `m`.
pub fn project_to_manifold(m: &SymMatrix, n_occ: usize) -> Result<DensityMatrix> {
    let n = m.dim();
    if n_occ > n {
        return Err(Error::InvalidOccupation(format!("n_occ {n_occ} exceeds dimension {n}")));
    }
    let spec = sym_eig(m)?;
    let cut = n - n_occ;
    if cut > 0 && cut < n {
        let (lower, upper) = (spec.eigenvalues[cut - 1], spec.eigenvalues[cut]);
        if upper - lower < FRONTIER_TOL {
            return Err(Error::DegenerateFrontier { lower, upper });
        }
    }
    let v = spec.eigenvectors.columns(cut, n_occ);
    DensityMatrix::new(SymMatrix::symmetrize(v * v.transpose()), n_occ)
}

/// Projector onto the eigenvectors of the `n_occ` lowest eigenvalues of `f`.
pub fn aufbau(f: &SymMatrix, n_occ: usize) -> Result<DensityMatrix> {
    let n = f.dim();
    if n_occ > n {
        return Err(Error::InvalidOccupation(format!("n_occ {n_occ} exceeds dimension {n}")));
    }
    let spec = sym_eig(f)?;
    if n_occ > 0 && n_occ < n {
        let (lower, upper) = (spec.eigenvalues[n_occ - 1], spec.eigenvalues[n_occ]);
        if upper - lower <= FRONTIER_TOL {
            return Err(Error::DegenerateFrontier { lower, upper });
        }
    }
    let v = spec.eigenvectors.columns(0, n_occ);
    DensityMatrix::new(SymMatrix::symmetrize(v * v.transpose()), n_occ)
}

/// Aufbau projector together with the gap `λ_{n_occ+1} − λ_{n_occ}` from a
/// single diagonalization.
pub fn aufbau_with_gap(f: &SymMatrix, n_occ: usize) -> Result<(DensityMatrix, f64)> {
    let n = f.dim();
    if n_occ > n {
        return Err(Error::InvalidOccupation(format!("n_occ {n_occ} exceeds dimension {n}")));
    }
    let spec = sym_eig(f)?;
    let gap = if n_occ == 0 || n_occ == n {
        f64::INFINITY
    } else {
        let (lower, upper) = (spec.eigenvalues[n_occ - 1], spec.eigenvalues[n_occ]);
        if upper - lower <= FRONTIER_TOL {
            return Err(Error::DegenerateFrontier { lower, upper });
        }
        upper - lower
    };
    let v = spec.eigenvectors.columns(0, n_occ);
    let d = DensityMatrix::new(SymMatrix::symmetrize(v * v.transpose()), n_occ)?;
    Ok((d, gap))
}

/// `λ_{n_occ+1} − λ_{n_occ}` (1-based). Infinite when either side of the
/// cut is empty.
pub fn gap(f: &SymMatrix, n_occ: usize) -> Result<f64> {
    let n = f.dim();
    if n_occ > n {
        return Err(Error::InvalidOccupation(format!("n_occ {n_occ} exceeds dimension {n}")));
    }
    if n_occ == 0 || n_occ == n {
        return Ok(f64::INFINITY);
    }
    let ev = sym_eig(f)?.eigenvalues;
    Ok(ev[n_occ] - ev[n_occ - 1])
}

/// `P_D(M) = [D,[D,M]]`.
pub fn tangent_project(d: &DensityMatrix, m: &SymMatrix) -> Result<TangentVector> {
    check_dim(d, m)?;
    let dm = d.matrix().as_matrix();
    let inner = comm(dm, m);
    let projected = SymMatrix::symmetrize(comm(dm, &inner));
    TangentVector::new(d.clone(), projected)
}

/// Constrained gradient `[D,[D,F]]`; its norm equals `‖[D,F]‖`.
pub fn riemannian_gradient(d: &DensityMatrix, fock: &SymMatrix) -> Result<TangentVector> {
    tangent_project(d, fock)
}

/// `‖[D,F]‖_F`, the gradient norm reported by every solver.
pub fn commutator_norm(d: &DensityMatrix, fock: &SymMatrix) -> f64 {
    comm(d.matrix(), fock).norm()
}

/// Conjugate `d` by `exp(generator)`, then purify if the result drifted
/// beyond half the manifold budget.
fn conjugate_on_manifold(d: &DensityMatrix, generator: AntiSymMatrix) -> Result<DensityMatrix> {
    let u = expm_antisym(&generator)?;
    let moved = u.conjugate(d.matrix());
    let n = d.dim() as f64;
    let n_occ = d.n_occ();
    let drift = idempotency_residual(&moved);
    let trace_err = (moved.trace() - n_occ as f64).abs();
    if drift > 0.5 * IDEMPOTENCY_TOL * n || trace_err > 0.5 * TRACE_TOL {
        let p = mcweeny_purify(&moved, n_occ, PURIFY_DEFAULT_TOL)?;
        return DensityMatrix::new(p, n_occ);
    }
    DensityMatrix::new(moved, n_occ)
}

/// Descent step `exp(t[D,F]) D exp(−t[D,F])`.
pub fn geodesic_step(d: &DensityMatrix, fock: &SymMatrix, t: f64) -> Result<DensityMatrix> {
    check_dim(d, fock)?;
    if !t.is_finite() {
        return Err(Error::InvalidParameter(format!("step {t} is not finite")));
    }
    if t == 0.0 {
        return Ok(d.clone());
    }
    let c = AntiSymMatrix::antisymmetrize(comm(d.matrix(), fock));
    conjugate_on_manifold(d, c.scale(t))
}

/// [`geodesic_step`] that also returns `Δ = D⁺ − D`, formed as
/// `E D Uᵀ + D Eᵀ` with `E = U − I` so that small steps keep full relative
/// accuracy.
pub fn geodesic_step_with_delta(
    d: &DensityMatrix,
    fock: &SymMatrix,
    t: f64,
) -> Result<(DensityMatrix, DMatrix<f64>)> {
    check_dim(d, fock)?;
    if !t.is_finite() {
        return Err(Error::InvalidParameter(format!("step {t} is not finite")));
    }
    let n = d.dim();
    if t == 0.0 {
        return Ok((d.clone(), DMatrix::zeros(n, n)));
    }
    let c = AntiSymMatrix::antisymmetrize(comm(d.matrix(), fock)).scale(t);
    let (u, e) = expm_antisym_with_increment(&c)?;
    let dm = d.matrix().as_matrix();
    let delta = &e * dm * u.as_matrix().transpose() + dm * e.transpose();
    let moved = SymMatrix::symmetrize(dm + &delta);
    let n_occ = d.n_occ();
    let drift = idempotency_residual(&moved);
    let trace_err = (moved.trace() - n_occ as f64).abs();
    if drift > 0.5 * IDEMPOTENCY_TOL * n as f64 || trace_err > 0.5 * TRACE_TOL {
        let p = DensityMatrix::new(mcweeny_purify(&moved, n_occ, PURIFY_DEFAULT_TOL)?, n_occ)?;
        let delta = p.matrix().as_matrix() - dm;
        return Ok((p, delta));
    }
    let delta = SymMatrix::symmetrize(delta).into_inner();
    Ok((DensityMatrix::new(moved, n_occ)?, delta))
}

/// `R_{D₀}(Δ) = U D₀ Uᵀ`, `U = exp(−[D₀,Δ])`.
pub fn retraction(d0: &DensityMatrix, delta: &TangentVector) -> Result<DensityMatrix> {
    if delta.base().dim() != d0.dim() {
        return Err(Error::DimensionMismatch { expected: d0.dim(), found: delta.base().dim() });
    }
    if delta.base().distance(d0) > 1e-12 {
        return Err(Error::WrongBasePoint);
    }
    let b = AntiSymMatrix::antisymmetrize(comm(d0.matrix(), delta.matrix()));
    conjugate_on_manifold(d0, b.scale(-1.0))
}

/// Samples `ε(t) = E(exp(t[D,F]) D exp(−t[D,F]))` at `n_samples` evenly
/// spaced `t ∈ [0, t_max]`, with `F = F(D)` frozen at the start point.
pub fn energy_curve_probe(
    system: &ElectronicSystem,
    d: &DensityMatrix,
    t_max: f64,
    n_samples: usize,
) -> Result<Vec<(f64, f64)>> {
    if n_samples < 2 {
        return Err(Error::InvalidParameter("energy curve needs at least two samples".into()));
    }
    let fock = system.fock(d.matrix())?;
    (0..n_samples)
        .map(|i| {
            let t = t_max * i as f64 / (n_samples - 1) as f64;
            let dt = geodesic_step(d, &fock, t)?;
            Ok((t, system.energy(&dt)?))
        })
        .collect()
}

/// Energy along the descent curve from `d` at a single `t`.
pub fn energy_along_descent(system: &ElectronicSystem, d: &DensityMatrix, t: f64) -> Result<f64> {
    let fock = system.fock(d.matrix())?;
    system.energy(&geodesic_step(d, &fock, t)?)
}

/// Random point: retraction of a random tangent kick of Frobenius size
/// `scale` from the coordinate projector.
pub fn random_density(n: usize, n_occ: usize, seed: u64) -> Result<DensityMatrix> {
    let base = DensityMatrix::coordinate(n, n_occ)?;
    random_kick(&base, seed, 2.0)
}

/// Retraction of a seeded random tangent vector of Frobenius norm `scale`.
pub fn random_kick(base: &DensityMatrix, seed: u64, scale: f64) -> Result<DensityMatrix> {
    let n = base.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = SymMatrix::new(DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0)))?;
    let delta = tangent_project(base, &s)?;
    let norm = delta.norm();
    if norm == 0.0 {
        return Ok(base.clone());
    }
    retraction(base, &delta.scale(scale / norm))
}
