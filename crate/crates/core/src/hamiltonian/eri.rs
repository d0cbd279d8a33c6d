use crate::error::{Error, Result};

/// Compound index of an unordered pair.
#[inline]
pub fn pair_index(i: usize, j: usize) -> usize {
    if i >= j {
        i * (i + 1) / 2 + j
    } else {
        j * (j + 1) / 2 + i
    }
}

/// Canonical packed index of `(ij|kl)` under the eight-fold permutational
/// symmetry.
#[inline]
pub fn canonical_index(i: usize, j: usize, k: usize, l: usize) -> usize {
    pair_index(pair_index(i, j), pair_index(k, l))
}

/// Two-electron integrals `(μν|λσ)` in chemist notation, stored once per
/// symmetry class. A dense copy is kept alongside for the Fock builds.
#[derive(Clone, Debug, PartialEq)]
pub struct EriTensor {
    n: usize,
    packed: Vec<f64>,
    dense: Vec<f64>,
}

impl EriTensor {
    pub fn zeros(n: usize) -> Self {
        let npair = n * (n + 1) / 2;
        EriTensor { n, packed: vec![0.0; npair * (npair + 1) / 2], dense: vec![0.0; n.pow(4)] }
    }

    /// Build from `f`, evaluated once on the canonical representative
    /// `i ≥ j, k ≥ l, (ij) ≥ (kl)` of each class.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize, usize, usize) -> f64) -> Result<Self> {
        let mut t = Self::zeros(n);
        for (i, j, k, l) in canonical_quartets(n) {
            let v = f(i, j, k, l);
            if !v.is_finite() {
                return Err(Error::NonFinite("two-electron integrals"));
            }
            t.packed[canonical_index(i, j, k, l)] = v;
        }
        t.rebuild_dense();
        Ok(t)
    }

    /// Build from the packed canonical values directly.
    pub fn from_packed(n: usize, packed: Vec<f64>) -> Result<Self> {
        let npair = n * (n + 1) / 2;
        let expected = npair * (npair + 1) / 2;
        if packed.len() != expected {
            return Err(Error::DimensionMismatch { expected, found: packed.len() });
        }
        if packed.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("two-electron integrals"));
        }
        let mut t = EriTensor { n, packed, dense: vec![0.0; n.pow(4)] };
        t.rebuild_dense();
        Ok(t)
    }

    fn rebuild_dense(&mut self) {
        let n = self.n;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        self.dense[((i * n + j) * n + k) * n + l] = self.packed[canonical_index(i, j, k, l)];
                    }
                }
            }
        }
    }

    pub fn n_basis(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.packed[canonical_index(i, j, k, l)]
    }

    /// Row-major `n⁴` array with `[((i·n + j)·n + k)·n + l] = (ij|kl)`.
    pub fn dense(&self) -> &[f64] {
        &self.dense
    }

    pub fn to_dense(&self) -> Vec<f64> {
        self.dense.clone()
    }

    pub fn packed(&self) -> &[f64] {
        &self.packed
    }

    pub fn is_zero(&self) -> bool {
        self.packed.iter().all(|&v| v == 0.0)
    }

    /// Canonical quartets with their values, in packed order.
    pub fn canonical_entries(&self) -> impl Iterator<Item = (usize, usize, usize, usize, f64)> + '_ {
        canonical_quartets(self.n).map(move |(i, j, k, l)| (i, j, k, l, self.get(i, j, k, l)))
    }
}

/// All canonical quartets `i ≥ j, k ≥ l, (ij) ≥ (kl)` (0-based), ordered by
/// increasing packed index.
pub fn canonical_quartets(n: usize) -> impl Iterator<Item = (usize, usize, usize, usize)> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..=i).map(move |j| (i, j))).collect();
    let count = pairs.len();
    (0..count).flat_map(move |ij| {
        let pairs = pairs.clone();
        (0..=ij).map(move |kl| {
            let (i, j) = pairs[ij];
            let (k, l) = pairs[kl];
            (i, j, k, l)
        })
    })
}
