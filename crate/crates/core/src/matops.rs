//! Dense real matrix kernels: symmetric and antisymmetric newtypes, the
//! Frobenius geometry, commutators, the symmetric eigendecomposition, the
//! exponential of antisymmetric matrices, McWeeny purification and the
//! Löwdin change to an orthonormal basis.

use std::ops::Deref;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hamiltonian::EriTensor;

/// Sweep budget handed to the QR-based symmetric eigensolver.
const EIG_MAX_SWEEPS: usize = 10_000;
/// Components below this magnitude are skipped by the eigenvector sign rule.
const SIGN_RULE_THRESHOLD: f64 = 1e-12;

pub const PURIFY_MAX_ITER: usize = 50;
pub const PURIFY_DEFAULT_TOL: f64 = 1e-12;

/// Real symmetric matrix. Construction symmetrizes with `(A + Aᵀ)/2`, so
/// `a[(i, j)] == a[(j, i)]` holds bit for bit.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        check_square(&m)?;
        Ok(Self::symmetrize(m))
    }

    pub(crate) fn symmetrize(mut m: DMatrix<f64>) -> Self {
        let n = m.nrows();
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (m[(i, j)] + m[(j, i)]);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        SymMatrix(m)
    }

    pub fn zeros(n: usize) -> Self {
        SymMatrix(DMatrix::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        SymMatrix(DMatrix::identity(n, n))
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        SymMatrix(DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(d)))
    }

    /// Build from a row-major slice of length `n*n`.
    pub fn from_row_slice(n: usize, data: &[f64]) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, found: data.len() });
        }
        Self::new(DMatrix::from_row_slice(n, n, data))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn scale(&self, s: f64) -> SymMatrix {
        SymMatrix(&self.0 * s)
    }

    pub fn add(&self, other: &SymMatrix) -> Result<SymMatrix> {
        check_same(&self.0, &other.0)?;
        Ok(SymMatrix(&self.0 + &other.0))
    }

    pub fn sub(&self, other: &SymMatrix) -> Result<SymMatrix> {
        check_same(&self.0, &other.0)?;
        Ok(SymMatrix(&self.0 - &other.0))
    }

    /// Conjugation `Q A Qᵀ`.
    pub fn conjugate(&self, q: &DMatrix<f64>) -> SymMatrix {
        SymMatrix::symmetrize(q * &self.0 * q.transpose())
    }

    /// Row-major copy of the entries.
    pub fn to_row_major(&self) -> Vec<f64> {
        let n = self.dim();
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                out.push(self.0[(i, j)]);
            }
        }
        out
    }
}

impl Deref for SymMatrix {
    type Target = DMatrix<f64>;
    fn deref(&self) -> &DMatrix<f64> {
        &self.0
    }
}

/// Real antisymmetric matrix with an exactly zero diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct AntiSymMatrix(DMatrix<f64>);

impl AntiSymMatrix {
    /// Antisymmetric part `(A − Aᵀ)/2`.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        check_square(&m)?;
        Ok(Self::antisymmetrize(m))
    }

    pub(crate) fn antisymmetrize(mut m: DMatrix<f64>) -> Self {
        let n = m.nrows();
        for i in 0..n {
            m[(i, i)] = 0.0;
            for j in (i + 1)..n {
                let v = 0.5 * (m[(i, j)] - m[(j, i)]);
                m[(i, j)] = v;
                m[(j, i)] = -v;
            }
        }
        AntiSymMatrix(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn scale(&self, s: f64) -> AntiSymMatrix {
        AntiSymMatrix(&self.0 * s)
    }
}

impl Deref for AntiSymMatrix {
    type Target = DMatrix<f64>;
    fn deref(&self) -> &DMatrix<f64> {
        &self.0
    }
}

/// Orthogonal matrix, `‖UᵀU − I‖_F ≤ 1e−12·n`.
#[derive(Clone, Debug, PartialEq)]
pub struct OrthogonalMatrix(DMatrix<f64>);

impl OrthogonalMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        check_square(&m)?;
        let residual = orthogonality_residual(&m);
        if residual > 1e-12 * m.nrows() as f64 {
            return Err(Error::ExpmNotOrthogonal { residual });
        }
        Ok(OrthogonalMatrix(m))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    /// `U A Uᵀ`, symmetrized.
    pub fn conjugate(&self, a: &SymMatrix) -> SymMatrix {
        a.conjugate(&self.0)
    }
}

impl Deref for OrthogonalMatrix {
    type Target = DMatrix<f64>;
    fn deref(&self) -> &DMatrix<f64> {
        &self.0
    }
}

pub fn orthogonality_residual(u: &DMatrix<f64>) -> f64 {
    let n = u.nrows();
    (u.transpose() * u - DMatrix::<f64>::identity(n, n)).norm()
}

/// Ascending eigenvalues with orthonormal eigenvectors; column `i` pairs with
/// `eigenvalues[i]`.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<f64>,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `V diag(f(λ)) Vᵀ`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let v = &self.eigenvectors;
        let mut scaled = v.clone();
        for (j, &lam) in self.eigenvalues.iter().enumerate() {
            let s = f(lam);
            scaled.column_mut(j).scale_mut(s);
        }
        SymMatrix::symmetrize(scaled * v.transpose())
    }
}

fn check_square(m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
    }
    Ok(())
}

fn check_same(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), found: b.nrows() });
    }
    Ok(())
}

/// `⟨A, B⟩ = Tr(AᵀB) = Σᵢⱼ AᵢⱼBᵢⱼ`.
pub fn frobenius_inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    check_same(a, b)?;
    Ok(a.dot(b))
}

pub fn frobenius_norm(a: &DMatrix<f64>) -> f64 {
    a.norm()
}

/// `AB − BA`.
pub fn commutator(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_square(a)?;
    check_same(a, b)?;
    Ok(comm(a, b))
}

pub(crate) fn comm(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a * b - b * a
}

/// Commutator of two symmetric matrices, which is antisymmetric.
pub fn sym_commutator(a: &SymMatrix, b: &SymMatrix) -> Result<AntiSymMatrix> {
    commutator(a, b).map(AntiSymMatrix::antisymmetrize)
}

/// Full ascending spectrum of a symmetric matrix. Each eigenvector has its
/// first non-negligible component positive.
pub fn sym_eig(a: &SymMatrix) -> Result<Spectrum> {
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("symmetric eigensolver input"));
    }
    let n = a.dim();
    let eig = SymmetricEigen::try_new(a.as_matrix().clone(), f64::EPSILON, EIG_MAX_SWEEPS)
        .ok_or(Error::EigenNoConvergence { sweeps: EIG_MAX_SWEEPS })?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));

    let mut vectors = DMatrix::zeros(n, n);
    let mut values = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        values.push(eig.eigenvalues[src]);
        let mut col = eig.eigenvectors.column(src).into_owned();
        if let Some(first) = col.iter().find(|x| x.abs() > SIGN_RULE_THRESHOLD) {
            if *first < 0.0 {
                col.neg_mut();
            }
        }
        vectors.set_column(dst, &col);
    }
    Ok(Spectrum { eigenvalues: values, eigenvectors: vectors })
}

/// `exp(A)` for antisymmetric `A`.
///
/// `iA` is Hermitian, so with `iA = W Λ W*` the exponential is
/// `W diag(e^{−iλ}) W*`; the result is orthogonal to working precision for
/// any norm of `A` since no squaring phase amplifies rounding.
pub fn expm_antisym(a: &AntiSymMatrix) -> Result<OrthogonalMatrix> {
    expm_antisym_with_increment(a).map(|(u, _)| u)
}

/// `exp(A)` together with `exp(A) − I`, the latter accurate to working
/// precision relative to `‖A‖` (no cancellation against the identity).
pub fn expm_antisym_with_increment(a: &AntiSymMatrix) -> Result<(OrthogonalMatrix, DMatrix<f64>)> {
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("matrix exponential input"));
    }
    let n = a.dim();
    if a.iter().all(|&x| x == 0.0) {
        return Ok((OrthogonalMatrix::new(DMatrix::identity(n, n))?, DMatrix::zeros(n, n)));
    }
    let herm = a.map(|x| Complex64::new(0.0, x));
    let eig = SymmetricEigen::try_new(herm, f64::EPSILON, EIG_MAX_SWEEPS)
        .ok_or(Error::EigenNoConvergence { sweeps: EIG_MAX_SWEEPS })?;
    let w = &eig.eigenvectors;
    let mut scaled = w.clone();
    let mut scaled_inc = w.clone();
    for (j, &lam) in eig.eigenvalues.iter().enumerate() {
        let phase = Complex64::new(lam.cos(), -lam.sin());
        let half = (0.5 * lam).sin();
        let inc = Complex64::new(-2.0 * half * half, -lam.sin());
        for z in scaled.column_mut(j).iter_mut() {
            *z *= phase;
        }
        for z in scaled_inc.column_mut(j).iter_mut() {
            *z *= inc;
        }
    }
    let wa = w.adjoint();
    let full = scaled * &wa;
    let increment = (scaled_inc * wa).map(|z| z.re);
    Ok((OrthogonalMatrix::new(full.map(|z| z.re))?, increment))
}

/// One McWeeny step `3D² − 2D³`.
pub fn mcweeny_step(d: &SymMatrix) -> SymMatrix {
    let d2 = d.as_matrix() * d.as_matrix();
    let d3 = &d2 * d.as_matrix();
    SymMatrix::symmetrize(d2 * 3.0 - d3 * 2.0)
}

pub fn idempotency_residual(d: &DMatrix<f64>) -> f64 {
    (d * d - d).norm()
}

/// McWeeny purification of a near-projector with `n_occ` eigenvalues in
/// `(0.5, 1.5]` and the rest in `(−0.5, 0.5)`.
pub fn mcweeny_purify(d: &SymMatrix, n_occ: usize, tol: f64) -> Result<SymMatrix> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("purification tolerance {tol} must be positive")));
    }
    let spec = sym_eig(d)?;
    let mut occupied = 0;
    for &lam in &spec.eigenvalues {
        if (lam - 0.5).abs() <= 1e-8 {
            return Err(Error::PurificationBasin(format!(
                "eigenvalue {lam} sits on the unstable fixed point 0.5"
            )));
        }
        if !(lam > -0.5 && lam <= 1.5) {
            return Err(Error::PurificationBasin(format!("eigenvalue {lam} outside (-0.5, 1.5]")));
        }
        if lam > 0.5 {
            occupied += 1;
        }
    }
    if occupied != n_occ {
        return Err(Error::PurificationBasin(format!(
            "{occupied} eigenvalues above 0.5, expected {n_occ}"
        )));
    }

    let mut p = d.clone();
    let mut residual = idempotency_residual(&p);
    for _ in 0..PURIFY_MAX_ITER {
        if residual <= tol {
            return Ok(p);
        }
        p = mcweeny_step(&p);
        residual = idempotency_residual(&p);
    }
    if residual <= tol {
        return Ok(p);
    }
    Err(Error::PurificationNoConvergence { tol, max_iter: PURIFY_MAX_ITER, residual })
}

/// Transform `h` and the two-electron integrals from a basis with overlap `s`
/// into the Löwdin orthonormal basis `X = S^{−1/2}`.
pub fn lowdin_orthonormalize(
    h: &SymMatrix,
    eri: &EriTensor,
    s: &SymMatrix,
) -> Result<(SymMatrix, EriTensor)> {
    let n = h.dim();
    if s.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: s.dim() });
    }
    if eri.n_basis() != n {
        return Err(Error::DimensionMismatch { expected: n, found: eri.n_basis() });
    }
    if s.as_matrix() == &DMatrix::<f64>::identity(n, n) {
        return Ok((h.clone(), eri.clone()));
    }
    let x = lowdin_inverse_sqrt(s)?;
    let h_new = SymMatrix::symmetrize(x.as_matrix() * h.as_matrix() * x.as_matrix());

    // Quarter transforms on the dense tensor, one index at a time.
    let mut t = eri.to_dense();
    let idx = |p: usize, q: usize, r: usize, s: usize| ((p * n + q) * n + r) * n + s;
    for axis in 0..4 {
        let mut out = vec![0.0; n * n * n * n];
        for p in 0..n {
            for q in 0..n {
                for r in 0..n {
                    for u in 0..n {
                        let mut acc = 0.0;
                        for m in 0..n {
                            let (src, coef) = match axis {
                                0 => (idx(m, q, r, u), x[(m, p)]),
                                1 => (idx(p, m, r, u), x[(m, q)]),
                                2 => (idx(p, q, m, u), x[(m, r)]),
                                _ => (idx(p, q, r, m), x[(m, u)]),
                            };
                            acc += coef * t[src];
                        }
                        out[idx(p, q, r, u)] = acc;
                    }
                }
            }
        }
        t = out;
    }
    let eri_new = EriTensor::from_fn(n, |p, q, r, u| t[idx(p, q, r, u)])?;
    Ok((h_new, eri_new))
}

/// `S^{−1/2}` for symmetric positive definite `S`.
pub fn lowdin_inverse_sqrt(s: &SymMatrix) -> Result<SymMatrix> {
    let spec = sym_eig(s)?;
    if let Some(&lam) = spec.eigenvalues.first() {
        if lam <= 1e-10 {
            return Err(Error::NotPositiveDefinite { eigenvalue: lam });
        }
    }
    Ok(spec.reconstruct_with(|l| 1.0 / l.sqrt()))
}
