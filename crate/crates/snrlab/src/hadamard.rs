//! Sylvester Hadamard transform and the 0/1 sensing operator built from it.
//!
//! The sensing matrix `A` replaces every -1 entry of the Hadamard matrix `H`
//! with 0, so `A = (H + J)/2` with `J` the all-ones matrix. Both the forward
//! map `y = A x` and the inverse `x = A^-1 z` have O(n log n) paths through
//! the fast Walsh-Hadamard transform; dense materialization is kept for
//! small sizes so every fast path can be checked against brute force.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Largest size for which dense materialization and LU solves are allowed.
pub const DEFAULT_DENSE_LIMIT: usize = 1 << 12;

/// Number of pixels / measurements. Restricted to powers of two (n >= 2)
/// because the Sylvester construction doubles recursively.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TransformSize(usize);

impl TransformSize {
    pub fn new(n: usize) -> Result<Self> {
        if n >= 2 && n.is_power_of_two() {
            Ok(TransformSize(n))
        } else {
            Err(Error::InvalidSize(format!(
                "{n} is not a power of two >= 2"
            )))
        }
    }

    pub fn from_log2(k: u32) -> Result<Self> {
        if k == 0 || k >= usize::BITS {
            return Err(Error::InvalidSize(format!("2^{k} out of range")));
        }
        Ok(TransformSize(1usize << k))
    }

    pub fn get(self) -> usize {
        self.0
    }

    pub fn log2(self) -> u32 {
        self.0.trailing_zeros()
    }
}

impl std::fmt::Display for TransformSize {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// In-place unnormalized fast Walsh-Hadamard transform: replaces `v` with
/// `H v`, entries of `H` being +-1 in Sylvester (natural) order.
pub fn fwht_in_place(v: &mut [f64]) -> Result<()> {
    let n = v.len();
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::InvalidSize(format!(
            "fwht needs a power-of-two length, got {n}"
        )));
    }
    let mut half = 1;
    while half < n {
        let step = half * 2;
        for block in (0..n).step_by(step) {
            for i in block..block + half {
                let a = v[i];
                let b = v[i + half];
                v[i] = a + b;
                v[i + half] = a - b;
            }
        }
        half = step;
    }
    Ok(())
}

/// Out-of-place convenience wrapper around [`fwht_in_place`].
pub fn fwht(v: &[f64]) -> Result<Vec<f64>> {
    let mut out = v.to_vec();
    fwht_in_place(&mut out)?;
    Ok(out)
}

/// Dense Sylvester Hadamard matrix, built by recursive doubling. Test and
/// oracle route, deliberately independent of the butterfly in [`fwht`].
pub fn sylvester_matrix(n: usize) -> Result<DMatrix<f64>> {
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::InvalidSize(format!(
            "Hadamard order must be a power of two, got {n}"
        )));
    }
    if n > DEFAULT_DENSE_LIMIT {
        return Err(Error::Capacity(format!(
            "dense Hadamard of order {n} exceeds limit {DEFAULT_DENSE_LIMIT}"
        )));
    }
    let mut h = DMatrix::from_element(1, 1, 1.0);
    let mut m = 1;
    while m < n {
        let mut next = DMatrix::zeros(2 * m, 2 * m);
        for i in 0..m {
            for j in 0..m {
                let v = h[(i, j)];
                next[(i, j)] = v;
                next[(i, j + m)] = v;
                next[(i + m, j)] = v;
                next[(i + m, j + m)] = -v;
            }
        }
        h = next;
        m *= 2;
    }
    Ok(h)
}

/// The 0/1 aperture-pattern operator. Immutable once built; shareable across
/// concurrent trial workers.
#[derive(Clone, Debug)]
pub struct SensingOperator {
    size: TransformSize,
    /// `permutation[j]` is the column of the unpermuted matrix that serves
    /// as column `j`. `None` means identity.
    permutation: Option<Vec<usize>>,
}

impl SensingOperator {
    pub fn new(size: TransformSize) -> Self {
        SensingOperator {
            size,
            permutation: None,
        }
    }

    /// Operator with its columns rearranged by `permutation` (a bijection on
    /// `0..n`): column `j` of the new matrix is column `permutation[j]` of
    /// the unpermuted one.
    pub fn with_permutation(size: TransformSize, permutation: Vec<usize>) -> Result<Self> {
        let n = size.get();
        if permutation.len() != n {
            return Err(Error::SizeMismatch {
                expected: n,
                actual: permutation.len(),
            });
        }
        let mut seen = vec![false; n];
        for &p in &permutation {
            if p >= n || seen[p] {
                return Err(Error::Domain(format!(
                    "permutation is not a bijection on 0..{n}"
                )));
            }
            seen[p] = true;
        }
        let is_identity = permutation.iter().enumerate().all(|(j, &p)| j == p);
        Ok(SensingOperator {
            size,
            permutation: (!is_identity).then_some(permutation),
        })
    }

    /// Random column permutation drawn from `rng`.
    pub fn with_random_permutation(size: TransformSize, rng: &mut impl Rng) -> Self {
        use rand::seq::SliceRandom;
        let mut perm: Vec<usize> = (0..size.get()).collect();
        perm.shuffle(rng);
        Self::with_permutation(size, perm).expect("shuffled identity is a bijection")
    }

    pub fn size(&self) -> TransformSize {
        self.size
    }

    pub fn len(&self) -> usize {
        self.size.get()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn permutation(&self) -> Option<&[usize]> {
        self.permutation.as_deref()
    }

    fn check_len(&self, actual: usize) -> Result<()> {
        if actual != self.len() {
            return Err(Error::SizeMismatch {
                expected: self.len(),
                actual,
            });
        }
        Ok(())
    }

    /// Forward measurement `y = A x`.
    ///
    /// Uses `A x = (H x' + sum(x) * 1) / 2` where `x'` is `x` routed through
    /// the column permutation. For integer-valued scenes this is exact: each
    /// `(H x')_i + sum(x)` is an even integer.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x.len())?;
        let mut buf = self.scatter(x);
        let total: f64 = buf.iter().sum();
        fwht_in_place(&mut buf)?;
        for v in buf.iter_mut() {
            *v = 0.5 * (*v + total);
        }
        Ok(buf)
    }

    /// Reconstruction `x = A^-1 z`.
    ///
    /// Fast path: `A^-1 z = (2/n) H z - z_0 e_0` (identity permutation),
    /// routed back through the permutation. The identity is only trusted
    /// after [`fast_solve_validated`] has checked it against dense LU solves
    /// for every n in {2, 4, ..., 256}; if that validation ever failed the
    /// dense solver would be used instead.
    pub fn solve(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.check_len(z.len())?;
        if fast_solve_validated() {
            let mut buf = z.to_vec();
            fwht_in_place(&mut buf)?;
            let scale = 2.0 / self.len() as f64;
            for v in buf.iter_mut() {
                *v *= scale;
            }
            buf[0] -= z[0];
            Ok(self.gather(&buf))
        } else {
            self.dense_solve(z)
        }
    }

    /// Dense LU solve of `A x = z`. Brute-force route used by oracles and by
    /// the fast-path validation.
    pub fn dense_solve(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.check_len(z.len())?;
        let a = self.materialize()?;
        let rhs = DVector::from_column_slice(z);
        let solved = a
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Domain("sensing matrix is singular".into()))?;
        Ok(solved.iter().copied().collect())
    }

    /// Dense 0/1 matrix `A`, entry (i, j) = 1 exactly when the Hadamard
    /// entry is +1, i.e. when popcount(i & j) is even. Columns follow the
    /// operator's permutation.
    pub fn materialize(&self) -> Result<DMatrix<f64>> {
        let n = self.len();
        if n > DEFAULT_DENSE_LIMIT {
            return Err(Error::Capacity(format!(
                "materializing {n}x{n} exceeds dense limit {DEFAULT_DENSE_LIMIT}"
            )));
        }
        Ok(DMatrix::from_fn(n, n, |i, j| {
            let col = self.source_column(j);
            if (i & col).count_ones() % 2 == 0 {
                1.0
            } else {
                0.0
            }
        }))
    }

    /// Dense `A^-1` via LU. Oracle route only.
    pub fn materialize_inverse(&self) -> Result<DMatrix<f64>> {
        let a = self.materialize()?;
        a.lu()
            .try_inverse()
            .ok_or_else(|| Error::Domain("sensing matrix is singular".into()))
    }

    fn source_column(&self, j: usize) -> usize {
        match &self.permutation {
            Some(p) => p[j],
            None => j,
        }
    }

    /// Route scene values to their unpermuted columns: out[perm[j]] = x[j].
    fn scatter(&self, x: &[f64]) -> Vec<f64> {
        match &self.permutation {
            Some(p) => {
                let mut out = vec![0.0; x.len()];
                for (j, &src) in p.iter().enumerate() {
                    out[src] = x[j];
                }
                out
            }
            None => x.to_vec(),
        }
    }

    /// Inverse of [`scatter`]: out[j] = w[perm[j]].
    fn gather(&self, w: &[f64]) -> Vec<f64> {
        match &self.permutation {
            Some(p) => p.iter().map(|&src| w[src]).collect(),
            None => w.to_vec(),
        }
    }
}

/// One-time validation gate for the fast inverse identity.
///
/// Compares the fast path against dense LU solves on seeded random inputs
/// for every n in {2, 4, ..., 256}. Runs once per process.
pub fn fast_solve_validated() -> bool {
    static VALIDATED: OnceLock<bool> = OnceLock::new();
    *VALIDATED.get_or_init(|| {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_fa57);
        for k in 1..=8u32 {
            let size = TransformSize::from_log2(k).expect("small power of two");
            let op = SensingOperator::new(size);
            let z: Vec<f64> = (0..size.get())
                .map(|_| rng.random_range(-1.0e3..1.0e3))
                .collect();
            let dense = match op.dense_solve(&z) {
                Ok(v) => v,
                Err(_) => return false,
            };
            let mut fast = z.clone();
            if fwht_in_place(&mut fast).is_err() {
                return false;
            }
            let scale = 2.0 / size.get() as f64;
            for v in fast.iter_mut() {
                *v *= scale;
            }
            fast[0] -= z[0];
            let ok = fast.iter().zip(&dense).all(|(f, d)| {
                let tol = 1e-9 * d.abs().max(1.0);
                (f - d).abs() <= tol
            });
            if !ok {
                return false;
            }
        }
        true
    })
}

/// Squared column norms of `A^-1`, i.e. `w_i = sum_j (A^-1)_{ji}^2`.
///
/// These weights propagate per-measurement variances to total reconstruction
/// variance. Computed from the dense LU inverse and memoized per operator
/// shape, since a 4096x4096 inversion is expensive.
pub(crate) fn inverse_column_weights(op: &SensingOperator) -> Result<std::sync::Arc<Vec<f64>>> {
    type Cache = Mutex<HashMap<(usize, Option<Vec<usize>>), std::sync::Arc<Vec<f64>>>>;
    static CACHE: OnceLock<Cache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let key = (op.len(), op.permutation.clone());
    if let Some(hit) = cache.lock().unwrap().get(&key) {
        return Ok(hit.clone());
    }
    let inv = op.materialize_inverse()?;
    let weights: Vec<f64> = (0..op.len())
        .map(|i| inv.column(i).iter().map(|v| v * v).sum())
        .collect();
    let arc = std::sync::Arc::new(weights);
    cache.lock().unwrap().insert(key, arc.clone());
    Ok(arc)
}
