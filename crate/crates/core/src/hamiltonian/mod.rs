//! Discretized Hartree-Fock problem data and the energy functionals built on
//! it: Coulomb and exchange contractions, the Fock matrix, the total energy,
//! the bilinear (Roothaan) functional and its level-shifted variant.
//!
//! Two occupation conventions are supported. `Spinless` uses `G = J − K`
//! and occupation factor 1; `RestrictedClosedShell` uses the spin-summed
//! `G = 2J − K`, factor 2 and `n_occ = N/2`. Every energy below is the
//! spinless expression scaled by the occupation factor, plus the constant
//! core energy.

mod eri;
pub mod fcidump;
pub mod native;

pub use eri::{canonical_index, canonical_quartets, pair_index, EriTensor};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::DensityMatrix;
use crate::matops::SymMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OccupationConvention {
    Spinless,
    RestrictedClosedShell,
}

impl OccupationConvention {
    /// Electrons per occupied spatial orbital.
    pub fn factor(self) -> f64 {
        match self {
            OccupationConvention::Spinless => 1.0,
            OccupationConvention::RestrictedClosedShell => 2.0,
        }
    }

    pub fn n_occ(self, n_electrons: usize) -> Result<usize> {
        match self {
            OccupationConvention::Spinless => Ok(n_electrons),
            OccupationConvention::RestrictedClosedShell => {
                if !n_electrons.is_multiple_of(2) {
                    return Err(Error::InvalidOccupation(format!(
                        "restricted closed-shell needs an even electron count, got {n_electrons}"
                    )));
                }
                Ok(n_electrons / 2)
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            OccupationConvention::Spinless => "spinless",
            OccupationConvention::RestrictedClosedShell => "rhf",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "spinless" => Ok(OccupationConvention::Spinless),
            "rhf" | "restricted" | "restricted-closed-shell" | "restrictedclosedshell" => {
                Ok(OccupationConvention::RestrictedClosedShell)
            }
            other => Err(Error::InvalidParameter(format!("unknown occupation convention '{other}'"))),
        }
    }
}

/// Core Hamiltonian, two-electron integrals and occupation data in an
/// orthonormal basis. Energies are in Hartree.
#[derive(Clone, Debug, PartialEq)]
pub struct ElectronicSystem {
    n_electrons: usize,
    convention: OccupationConvention,
    n_occ: usize,
    h: SymMatrix,
    eri: EriTensor,
    core_energy: f64,
    kinetic: Option<SymMatrix>,
    nuclear_charge: Option<u32>,
}

impl ElectronicSystem {
    pub fn new(
        h: SymMatrix,
        eri: EriTensor,
        n_electrons: usize,
        convention: OccupationConvention,
        core_energy: f64,
    ) -> Result<Self> {
        let n = h.dim();
        if eri.n_basis() != n {
            return Err(Error::DimensionMismatch { expected: n, found: eri.n_basis() });
        }
        if h.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("core Hamiltonian"));
        }
        if !core_energy.is_finite() {
            return Err(Error::NonFinite("core energy"));
        }
        let n_occ = convention.n_occ(n_electrons)?;
        if n_occ > n {
            return Err(Error::InvalidOccupation(format!(
                "{n_occ} occupied orbitals exceed the basis size {n}"
            )));
        }
        Ok(ElectronicSystem {
            n_electrons,
            convention,
            n_occ,
            h,
            eri,
            core_energy,
            kinetic: None,
            nuclear_charge: None,
        })
    }

    pub fn with_kinetic(mut self, kinetic: SymMatrix) -> Result<Self> {
        if kinetic.dim() != self.n_basis() {
            return Err(Error::DimensionMismatch { expected: self.n_basis(), found: kinetic.dim() });
        }
        self.kinetic = Some(kinetic);
        Ok(self)
    }

    pub fn with_nuclear_charge(mut self, z: u32) -> Self {
        self.nuclear_charge = Some(z);
        self
    }

    pub fn n_basis(&self) -> usize {
        self.h.dim()
    }
    pub fn n_electrons(&self) -> usize {
        self.n_electrons
    }
    pub fn n_occ(&self) -> usize {
        self.n_occ
    }
    pub fn convention(&self) -> OccupationConvention {
        self.convention
    }
    pub fn occupation_factor(&self) -> f64 {
        self.convention.factor()
    }
    pub fn h(&self) -> &SymMatrix {
        &self.h
    }
    pub fn eri(&self) -> &EriTensor {
        &self.eri
    }
    pub fn core_energy(&self) -> f64 {
        self.core_energy
    }
    pub fn kinetic(&self) -> Option<&SymMatrix> {
        self.kinetic.as_ref()
    }
    pub fn nuclear_charge(&self) -> Option<u32> {
        self.nuclear_charge
    }

    fn check_dim(&self, d: &DMatrix<f64>) -> Result<()> {
        let n = self.n_basis();
        if d.nrows() != n || d.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: d.nrows() });
        }
        Ok(())
    }

    /// `J(D)_{μν} = Σ_{λσ} (μν|λσ) D_{λσ}`.
    pub fn coulomb(&self, d: &DMatrix<f64>) -> Result<SymMatrix> {
        self.check_dim(d)?;
        Ok(self.coulomb_unchecked(d))
    }

    /// `K(D)_{μν} = Σ_{λσ} (μλ|νσ) D_{λσ}`.
    pub fn exchange(&self, d: &DMatrix<f64>) -> Result<SymMatrix> {
        self.check_dim(d)?;
        Ok(self.exchange_unchecked(d))
    }

    fn coulomb_unchecked(&self, d: &DMatrix<f64>) -> SymMatrix {
        let n = self.n_basis();
        let eri = self.eri.dense();
        let dv: Vec<f64> = (0..n * n).map(|x| d[(x / n, x % n)]).collect();
        let mut j = DMatrix::zeros(n, n);
        for mu in 0..n {
            for nu in 0..=mu {
                let base = (mu * n + nu) * n * n;
                let v: f64 = eri[base..base + n * n].iter().zip(&dv).map(|(a, b)| a * b).sum();
                j[(mu, nu)] = v;
                j[(nu, mu)] = v;
            }
        }
        SymMatrix::symmetrize(j)
    }

    fn exchange_unchecked(&self, d: &DMatrix<f64>) -> SymMatrix {
        let n = self.n_basis();
        let eri = self.eri.dense();
        let mut k = DMatrix::zeros(n, n);
        for mu in 0..n {
            for nu in 0..=mu {
                let mut acc = 0.0;
                for lam in 0..n {
                    let base = ((mu * n + lam) * n + nu) * n;
                    for sig in 0..n {
                        acc += eri[base + sig] * d[(lam, sig)];
                    }
                }
                k[(mu, nu)] = acc;
                k[(nu, mu)] = acc;
            }
        }
        SymMatrix::symmetrize(k)
    }

    /// Two-electron part of the Fock matrix: `J − K` (spinless) or
    /// `2J − K` (restricted closed shell).
    pub fn g_matrix(&self, d: &DMatrix<f64>) -> Result<SymMatrix> {
        self.check_dim(d)?;
        Ok(self.g_unchecked(d))
    }

    pub(crate) fn g_unchecked(&self, d: &DMatrix<f64>) -> SymMatrix {
        if self.eri.is_zero() {
            return SymMatrix::zeros(self.n_basis());
        }
        let j = self.coulomb_unchecked(d);
        let k = self.exchange_unchecked(d);
        let jf = match self.convention {
            OccupationConvention::Spinless => j.into_inner(),
            OccupationConvention::RestrictedClosedShell => j.into_inner() * 2.0,
        };
        SymMatrix::symmetrize(jf - k.into_inner())
    }

    /// `F(D) = h + G(D)`.
    pub fn fock(&self, d: &DMatrix<f64>) -> Result<SymMatrix> {
        self.check_dim(d)?;
        Ok(self.fock_unchecked(d))
    }

    pub(crate) fn fock_unchecked(&self, d: &DMatrix<f64>) -> SymMatrix {
        SymMatrix::symmetrize(self.h.as_matrix() + self.g_unchecked(d).into_inner())
    }

    /// `F(D) − bD`.
    pub fn shifted_fock(&self, d: &DMatrix<f64>, b: f64) -> Result<SymMatrix> {
        if !(b >= 0.0) || !b.is_finite() {
            return Err(Error::InvalidParameter(format!("level shift {b} must be finite and >= 0")));
        }
        self.check_dim(d)?;
        Ok(SymMatrix::symmetrize(self.fock_unchecked(d).into_inner() - d * b))
    }

    /// Total energy of a density matrix on the manifold.
    pub fn energy(&self, d: &DensityMatrix) -> Result<f64> {
        self.check_dim(d.matrix())?;
        Ok(self.energy_functional(d.matrix()))
    }

    /// The energy expression `f·(Tr(hD) + ½Tr(G(D)D)) + core` evaluated on
    /// any symmetric matrix, without manifold checks. Used for finite
    /// differences off the manifold.
    pub fn energy_functional(&self, d: &DMatrix<f64>) -> f64 {
        let g = self.g_unchecked(d);
        let f = self.occupation_factor();
        f * (self.h.dot(d) + 0.5 * g.dot(d)) + self.core_energy
    }

    /// Energy computed from an already-built Fock matrix of the same density.
    pub(crate) fn energy_with_fock(&self, d: &DMatrix<f64>, fock: &DMatrix<f64>) -> f64 {
        let f = self.occupation_factor();
        f * 0.5 * (self.h.dot(d) + fock.dot(d)) + self.core_energy
    }

    /// `E(D, D') = f·Tr(h(D + D')) + f·Tr(G(D)D') + 2·core`.
    pub fn bilinear_energy(&self, d: &DensityMatrix, dp: &DensityMatrix) -> Result<f64> {
        self.check_dim(d.matrix())?;
        self.check_dim(dp.matrix())?;
        Ok(self.bilinear_functional(d.matrix(), dp.matrix()))
    }

    pub(crate) fn bilinear_functional(&self, d: &DMatrix<f64>, dp: &DMatrix<f64>) -> f64 {
        let f = self.occupation_factor();
        let g = self.g_unchecked(d);
        f * (self.h.dot(d) + self.h.dot(dp)) + f * g.dot(dp) + 2.0 * self.core_energy
    }

    /// `E(D, D') + (f·b/2)·‖D − D'‖²`, whose minimizer in `D` for fixed `D'`
    /// is the aufbau projector of `F(D') − bD'`.
    pub fn shifted_bilinear_energy(&self, d: &DensityMatrix, dp: &DensityMatrix, b: f64) -> Result<f64> {
        self.check_dim(d.matrix())?;
        self.check_dim(dp.matrix())?;
        Ok(self.shifted_bilinear_functional(d.matrix(), dp.matrix(), b))
    }

    pub(crate) fn shifted_bilinear_functional(&self, d: &DMatrix<f64>, dp: &DMatrix<f64>, b: f64) -> f64 {
        let base = self.bilinear_functional(d, dp);
        if b == 0.0 {
            return base;
        }
        let diff = (d - dp).norm_squared();
        base + 0.5 * self.occupation_factor() * b * diff
    }

    /// Conjugate every one- and two-electron quantity by an orthogonal `q`:
    /// `h → Q h Qᵀ`, `(ij|kl) → Σ Q_ia Q_jb Q_kc Q_ld (ab|cd)`.
    pub fn rotated(&self, q: &DMatrix<f64>) -> Result<Self> {
        let n = self.n_basis();
        if q.nrows() != n || q.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: q.nrows() });
        }
        // Löwdin's quarter transforms apply Xᵀ on every index; pass Qᵀ.
        let qt = q.transpose();
        let mut t = self.eri.to_dense();
        let idx = |p: usize, r: usize, s: usize, u: usize| ((p * n + r) * n + s) * n + u;
        for axis in 0..4 {
            let mut out = vec![0.0; n.pow(4)];
            for p in 0..n {
                for r in 0..n {
                    for s in 0..n {
                        for u in 0..n {
                            let mut acc = 0.0;
                            for m in 0..n {
                                let (src, c) = match axis {
                                    0 => (idx(m, r, s, u), qt[(m, p)]),
                                    1 => (idx(p, m, s, u), qt[(m, r)]),
                                    2 => (idx(p, r, m, u), qt[(m, s)]),
                                    _ => (idx(p, r, s, m), qt[(m, u)]),
                                };
                                acc += c * t[src];
                            }
                            out[idx(p, r, s, u)] = acc;
                        }
                    }
                }
            }
            t = out;
        }
        let eri = EriTensor::from_fn(n, |a, b, c, d| t[idx(a, b, c, d)])?;
        let mut sys = ElectronicSystem::new(
            self.h.conjugate(q),
            eri,
            self.n_electrons,
            self.convention,
            self.core_energy,
        )?;
        if let Some(k) = &self.kinetic {
            sys.kinetic = Some(k.conjugate(q));
        }
        sys.nuclear_charge = self.nuclear_charge;
        Ok(sys)
    }
}

/// Ring of `sites` orbitals with nearest-neighbour hopping `−hopping` and
/// on-site repulsion `(ii|ii) = u`.
pub fn hubbard_ring(
    sites: usize,
    hopping: f64,
    u: f64,
    n_electrons: usize,
    convention: OccupationConvention,
) -> Result<ElectronicSystem> {
    if sites == 0 {
        return Err(Error::InvalidParameter("a ring needs at least one site".into()));
    }
    if !(hopping > 0.0) || !hopping.is_finite() {
        return Err(Error::InvalidParameter(format!("hopping {hopping} must be positive")));
    }
    let mut h = DMatrix::zeros(sites, sites);
    if sites > 1 {
        for i in 0..sites {
            let j = (i + 1) % sites;
            h[(i, j)] = -hopping;
            h[(j, i)] = -hopping;
        }
    }
    let eri = EriTensor::from_fn(sites, |i, j, k, l| {
        if i == j && j == k && k == l {
            u
        } else {
            0.0
        }
    })?;
    ElectronicSystem::new(SymMatrix::new(h)?, eri, n_electrons, convention, 0.0)
}

/// Seeded random problem: `h` uniform in `[−1, 1]`, one uniform value in
/// `[−scale, scale]` per two-electron symmetry class.
pub fn random_system(
    seed: u64,
    n_basis: usize,
    n_electrons: usize,
    convention: OccupationConvention,
    interaction_scale: f64,
) -> Result<ElectronicSystem> {
    if n_basis == 0 {
        return Err(Error::InvalidParameter("n_basis must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut h = DMatrix::zeros(n_basis, n_basis);
    for i in 0..n_basis {
        for j in 0..=i {
            let v = rng.gen_range(-1.0..=1.0);
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    let eri = EriTensor::from_fn(n_basis, |_, _, _, _| interaction_scale * rng.gen_range(-1.0..=1.0))?;
    ElectronicSystem::new(SymMatrix::new(h)?, eri, n_electrons, convention, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{aufbau, random_density};
    use crate::matops::{expm_antisym, sym_eig, AntiSymMatrix};
    use OccupationConvention::*;

    fn dimer(conv: OccupationConvention, n_el: usize) -> ElectronicSystem {
        hubbard_ring(2, 1.0, 2.0, n_el, conv).unwrap()
    }

    fn half() -> DMatrix<f64> {
        DMatrix::from_element(2, 2, 0.5)
    }

    fn dm(m: DMatrix<f64>, n_occ: usize) -> DensityMatrix {
        DensityMatrix::new(SymMatrix::new(m).unwrap(), n_occ).unwrap()
    }

    #[test]
    fn coulomb_and_exchange_on_hubbard_dimer() {
        let sys = dimer(Spinless, 1);
        let d = DMatrix::from_diagonal(&nalgebra::dvector![1.0, 0.0]);
        let expected = DMatrix::from_diagonal(&nalgebra::dvector![2.0, 0.0]);
        assert_eq!(sys.coulomb(&d).unwrap().as_matrix(), &expected);
        assert_eq!(sys.exchange(&d).unwrap().as_matrix(), &expected);

        let id = DMatrix::<f64>::identity(2, 2);
        assert_eq!(sys.coulomb(&half()).unwrap().as_matrix(), &id);
        assert_eq!(sys.exchange(&half()).unwrap().as_matrix(), &id);

        let zero = ElectronicSystem::new(sys.h().clone(), EriTensor::zeros(2), 1, Spinless, 0.0).unwrap();
        assert_eq!(zero.coulomb(&half()).unwrap(), SymMatrix::zeros(2));
        assert_eq!(zero.exchange(&half()).unwrap(), SymMatrix::zeros(2));
        assert!(sys.coulomb(&DMatrix::zeros(3, 3)).is_err());
    }

    #[test]
    fn g_and_fock_on_hubbard_dimer() {
        let sys = dimer(Spinless, 1);
        let d = DMatrix::from_diagonal(&nalgebra::dvector![0.3, 0.7]);
        assert_eq!(sys.g_matrix(&d).unwrap(), SymMatrix::zeros(2));
        assert_eq!(sys.fock(&d).unwrap(), *sys.h());

        let rhf = dimer(RestrictedClosedShell, 2);
        assert_eq!(rhf.g_matrix(&half()).unwrap(), SymMatrix::identity(2));
        let f = rhf.fock(&half()).unwrap();
        assert_eq!(f.as_matrix(), &DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]));
    }

    #[test]
    fn energies_on_hubbard_dimer() {
        let sys = dimer(Spinless, 1);
        assert!((sys.energy(&dm(half(), 1)).unwrap() + 1.0).abs() < 1e-15);
        let rhf = dimer(RestrictedClosedShell, 2);
        assert!((rhf.energy(&dm(half(), 1)).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn linear_energy_without_interactions() {
        let h = SymMatrix::from_diagonal(&[1.0, 2.0]);
        for conv in [Spinless, RestrictedClosedShell] {
            let sys = ElectronicSystem::new(h.clone(), EriTensor::zeros(2), 2, conv, 0.0).unwrap();
            let n_occ = sys.n_occ();
            let d = aufbau(&h, n_occ).unwrap();
            let e = sys.energy(&d).unwrap();
            assert_eq!(e, conv.factor() * h.dot(d.matrix()));
        }
    }

    #[test]
    fn bilinear_properties() {
        for conv in [Spinless, RestrictedClosedShell] {
            let sys = random_system(4, 6, 4, conv, 0.7).unwrap();
            let n = sys.n_occ();
            let d = random_density(6, n, 1).unwrap();
            let dp = random_density(6, n, 2).unwrap();
            let e1 = sys.bilinear_energy(&d, &dp).unwrap();
            let e2 = sys.bilinear_energy(&dp, &d).unwrap();
            assert!((e1 - e2).abs() < 1e-12);
            let dd = sys.bilinear_energy(&d, &d).unwrap();
            assert!((dd - 2.0 * sys.energy(&d).unwrap()).abs() < 1e-12);

            let s1 = sys.shifted_bilinear_energy(&d, &dp, 3.0).unwrap();
            let s2 = sys.shifted_bilinear_energy(&dp, &d, 3.0).unwrap();
            assert!((s1 - s2).abs() < 1e-12);
            assert_eq!(sys.shifted_bilinear_energy(&d, &dp, 0.0).unwrap(), e1);
            assert!((sys.shifted_bilinear_energy(&d, &d, 5.0).unwrap() - dd).abs() < 1e-12);
        }
        let sys = ElectronicSystem::new(SymMatrix::from_diagonal(&[1.0, -2.0, 0.5]), EriTensor::zeros(3), 2, RestrictedClosedShell, 0.25).unwrap();
        let d = random_density(3, 1, 3).unwrap();
        let dp = random_density(3, 1, 4).unwrap();
        let expected = 2.0 * sys.h().dot(&(d.matrix().as_matrix() + dp.matrix().as_matrix())) + 0.5;
        assert!((sys.bilinear_energy(&d, &dp).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn shifted_fock_examples() {
        let sys = ElectronicSystem::new(SymMatrix::from_diagonal(&[1.0, 2.0]), EriTensor::zeros(2), 1, Spinless, 0.0).unwrap();
        let d = DMatrix::from_diagonal(&nalgebra::dvector![1.0, 0.0]);
        let fb = sys.shifted_fock(&d, 3.0).unwrap();
        assert_eq!(fb.as_matrix(), &DMatrix::from_diagonal(&nalgebra::dvector![-2.0, 2.0]));
        assert_eq!(sys.shifted_fock(&d, 0.0).unwrap(), sys.fock(&d).unwrap());
        assert!(sys.shifted_fock(&d, -1.0).is_err());
    }

    #[test]
    fn shift_preserves_aufbau_fixed_point() {
        let rhf = dimer(RestrictedClosedShell, 2);
        let d = dm(half(), 1);
        for b in [0.5, 1.0, 10.0, 1e3] {
            let fb = rhf.shifted_fock(d.matrix(), b).unwrap();
            let back = aufbau(&fb, 1).unwrap();
            assert!((back.matrix().as_matrix() - d.matrix().as_matrix()).norm() < 1e-12);
        }
    }

    #[test]
    fn hubbard_ring_structure() {
        let s = hubbard_ring(2, 1.0, 2.0, 2, RestrictedClosedShell).unwrap();
        assert_eq!(s.h().as_matrix(), &DMatrix::from_row_slice(2, 2, &[0.0, -1.0, -1.0, 0.0]));
        let s4 = hubbard_ring(4, 1.0, 3.0, 2, Spinless).unwrap();
        let ev = sym_eig(s4.h()).unwrap().eigenvalues;
        // cosine band −2t·cos(2πk/L)
        let mut band: Vec<f64> = (0..4).map(|k| -2.0 * (2.0 * std::f64::consts::PI * k as f64 / 4.0).cos()).collect();
        band.sort_by(f64::total_cmp);
        for (a, b) in ev.iter().zip(&band) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(s4.eri().get(1, 1, 1, 1), 3.0);
        assert_eq!(s4.eri().get(1, 1, 2, 2), 0.0);
        assert!(s4.kinetic().is_none() && s4.nuclear_charge().is_none());
        assert_eq!(s4.core_energy(), 0.0);
        assert!(hubbard_ring(2, 1.0, 1.0, 3, RestrictedClosedShell).is_err());
    }

    #[test]
    fn random_system_is_deterministic() {
        let a = random_system(42, 5, 2, Spinless, 0.3).unwrap();
        let b = random_system(42, 5, 2, Spinless, 0.3).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, random_system(43, 5, 2, Spinless, 0.3).unwrap());
        let z = random_system(42, 5, 2, Spinless, 0.0).unwrap();
        assert!(z.eri().is_zero());
        let h = a.h();
        assert!(h.iter().all(|x| (-1.0..=1.0).contains(x)));
    }

    #[test]
    fn random_system_eight_fold_symmetry() {
        let s = random_system(8, 7, 3, Spinless, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            let (i, j, k, l) = (rng.gen_range(0..7), rng.gen_range(0..7), rng.gen_range(0..7), rng.gen_range(0..7));
            let e = s.eri();
            let v = e.get(i, j, k, l);
            for w in [e.get(j, i, k, l), e.get(i, j, l, k), e.get(j, i, l, k), e.get(k, l, i, j), e.get(l, k, i, j), e.get(k, l, j, i), e.get(l, k, j, i)] {
                assert_eq!(v, w);
            }
        }
    }

    #[test]
    fn linearity_and_adjoint_symmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for conv in [Spinless, RestrictedClosedShell] {
            let sys = random_system(7, 6, 2, conv, 0.8).unwrap();
            let a = SymMatrix::new(DMatrix::from_fn(6, 6, |_, _| rng.gen_range(-1.0..1.0))).unwrap();
            let b = SymMatrix::new(DMatrix::from_fn(6, 6, |_, _| rng.gen_range(-1.0..1.0))).unwrap();
            let (x, y) = (0.7, -1.3);
            let comb = a.as_matrix() * x + b.as_matrix() * y;
            for op in [ElectronicSystem::coulomb, ElectronicSystem::exchange, ElectronicSystem::g_matrix] {
                let lhs = op(&sys, &comb).unwrap();
                let rhs = op(&sys, &a).unwrap().into_inner() * x + op(&sys, &b).unwrap().into_inner() * y;
                assert!((lhs.as_matrix() - rhs).norm() < 1e-12);
                let ab = op(&sys, &a).unwrap().dot(b.as_matrix());
                let ba = op(&sys, &b).unwrap().dot(a.as_matrix());
                assert!((ab - ba).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn energy_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for conv in [Spinless, RestrictedClosedShell] {
            let sys = random_system(12, 6, 2, conv, 0.5).unwrap();
            let d = random_density(6, sys.n_occ(), 9).unwrap();
            let s = SymMatrix::new(DMatrix::from_fn(6, 6, |_, _| rng.gen_range(-1.0..1.0))).unwrap();
            let eps = 1e-5;
            let base = d.matrix().as_matrix();
            let fd = (sys.energy_functional(&(base + s.as_matrix() * eps))
                - sys.energy_functional(&(base - s.as_matrix() * eps)))
                / (2.0 * eps);
            let analytic = sys.occupation_factor() * sys.fock(base).unwrap().dot(s.as_matrix());
            assert!(((fd - analytic) / analytic).abs() <= 1e-5, "{fd} vs {analytic}");
        }
    }

    #[test]
    fn rotation_preserves_energy() {
        let sys = random_system(3, 5, 2, Spinless, 0.6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = AntiSymMatrix::new(DMatrix::from_fn(5, 5, |_, _| rng.gen_range(-1.0..1.0))).unwrap();
        let q = expm_antisym(&a).unwrap().into_inner();
        let rot = sys.rotated(&q).unwrap();
        let d = random_density(5, 2, 4).unwrap();
        let dq = DensityMatrix::new(d.matrix().conjugate(&q), 2).unwrap();
        assert!((sys.energy(&d).unwrap() - rot.energy(&dq).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn occupation_rules() {
        assert_eq!(Spinless.n_occ(3).unwrap(), 3);
        assert_eq!(RestrictedClosedShell.n_occ(6).unwrap(), 3);
        assert!(RestrictedClosedShell.n_occ(5).is_err());
        assert!(ElectronicSystem::new(SymMatrix::identity(2), EriTensor::zeros(2), 3, Spinless, 0.0).is_err());
        assert_eq!(OccupationConvention::parse("RHF").unwrap(), RestrictedClosedShell);
    }
}
