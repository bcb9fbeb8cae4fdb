//! Sparse problem data stored in both row-major and column-major layouts.
//!
//! Coordinate updates walk columns (residual maintenance), while the sparsity
//! degree `ω` and subspace Lipschitz constants walk rows, so both layouts are
//! built eagerly and never mutated afterwards.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Borrowed view of one sparse row or column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SparseVec<'a> {
    pub indices: &'a [usize],
    pub values: &'a [f64],
}

impl<'a> SparseVec<'a> {
    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + 'a {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    pub fn sq_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    /// `⟨self, dense⟩`
    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.iter().map(|(k, v)| v * dense[k]).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
struct Compressed {
    ptr: Vec<usize>,
    idx: Vec<usize>,
    val: Vec<f64>,
}

impl Compressed {
    fn get(&self, k: usize) -> SparseVec<'_> {
        let (lo, hi) = (self.ptr[k], self.ptr[k + 1]);
        SparseVec {
            indices: &self.idx[lo..hi],
            values: &self.val[lo..hi],
        }
    }

    fn outer_len(&self) -> usize {
        self.ptr.len() - 1
    }

    /// Builds the other layout. Entries come out sorted by inner index because
    /// the outer dimension is scanned in order.
    fn transpose(&self, inner_dim: usize) -> Compressed {
        let mut counts = vec![0usize; inner_dim + 1];
        for &i in &self.idx {
            counts[i + 1] += 1;
        }
        for k in 0..inner_dim {
            counts[k + 1] += counts[k];
        }
        let ptr = counts.clone();
        let mut next = counts;
        let mut idx = vec![0usize; self.idx.len()];
        let mut val = vec![0.0; self.val.len()];
        for outer in 0..self.outer_len() {
            for (inner, v) in self.get(outer).iter() {
                let slot = next[inner];
                idx[slot] = outer;
                val[slot] = v;
                next[inner] += 1;
            }
        }
        Compressed { ptr, idx, val }
    }
}

/// Sparse matrix `A ∈ ℝ^{m×n}` plus labels `b ∈ ℝ^m`.
///
/// Invariants: every stored value is finite and nonzero, indices are strictly
/// increasing inside each row and column, and both layouts describe the same
/// matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemData {
    m: usize,
    n: usize,
    rows: Compressed,
    cols: Compressed,
    b: Vec<f64>,
}

/// Histogram of row nonzero counts; `omega` is the largest count present.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowSparsityProfile {
    pub omega: usize,
    /// `per_row_nnz[k]` = number of rows with exactly `k` nonzeros.
    pub per_row_nnz: Vec<usize>,
}

impl ProblemData {
    /// Builds a problem from `(row, col, value)` triplets in any order.
    ///
    /// Explicit zeros are dropped. Duplicate coordinates, out-of-range indices
    /// and non-finite values are rejected.
    pub fn from_triplets(
        m: usize,
        n: usize,
        triplets: &[(usize, usize, f64)],
        b: Vec<f64>,
    ) -> Result<Self> {
        if b.len() != m {
            return Err(Error::Dimension(format!(
                "label vector has length {} but m = {}",
                b.len(),
                m
            )));
        }
        if let Some(j) = b.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidEntry {
                row: j,
                col: 0,
                reason: "non-finite label",
            });
        }
        let mut entries: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len());
        for &(j, i, v) in triplets {
            if j >= m || i >= n {
                return Err(Error::InvalidEntry {
                    row: j,
                    col: i,
                    reason: "index out of range",
                });
            }
            if !v.is_finite() {
                return Err(Error::InvalidEntry {
                    row: j,
                    col: i,
                    reason: "non-finite value",
                });
            }
            if v != 0.0 {
                entries.push((j, i, v));
            }
        }
        entries.sort_unstable_by_key(|&(j, i, _)| (j, i));
        for w in entries.windows(2) {
            if w[0].0 == w[1].0 && w[0].1 == w[1].1 {
                return Err(Error::InvalidEntry {
                    row: w[0].0,
                    col: w[0].1,
                    reason: "duplicate entry",
                });
            }
        }

        let mut ptr = vec![0usize; m + 1];
        for &(j, _, _) in &entries {
            ptr[j + 1] += 1;
        }
        for j in 0..m {
            ptr[j + 1] += ptr[j];
        }
        let rows = Compressed {
            ptr,
            idx: entries.iter().map(|e| e.1).collect(),
            val: entries.iter().map(|e| e.2).collect(),
        };
        let cols = rows.transpose(n);
        Ok(ProblemData { m, n, rows, cols, b })
    }

    /// Builds a problem from per-row `(col, value)` lists.
    pub fn from_rows(n: usize, rows: &[Vec<(usize, f64)>], b: Vec<f64>) -> Result<Self> {
        let triplets: Vec<_> = rows
            .iter()
            .enumerate()
            .flat_map(|(j, r)| r.iter().map(move |&(i, v)| (j, i, v)))
            .collect();
        Self::from_triplets(rows.len(), n, &triplets, b)
    }

    /// Random instance where every row has exactly `omega` nonzeros at distinct,
    /// uniformly chosen columns. Values have magnitude in `[0.1, 1]` with a random
    /// sign; labels are `±1`.
    pub fn synthetic(m: usize, n: usize, omega: usize, seed: u64) -> Result<Self> {
        if omega == 0 || omega > n {
            return Err(Error::InvalidParameter(format!(
                "omega must lie in 1..={n}, got {omega}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut triplets = Vec::with_capacity(m * omega);
        for j in 0..m {
            let mut picked = rand::seq::index::sample(&mut rng, n, omega).into_vec();
            picked.sort_unstable();
            for i in picked {
                let magnitude: f64 = rng.gen_range(0.1..=1.0);
                let v = if rng.gen::<bool>() { magnitude } else { -magnitude };
                triplets.push((j, i, v));
            }
        }
        let b = (0..m)
            .map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 })
            .collect();
        Self::from_triplets(m, n, &triplets, b)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.rows.idx.len()
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn row(&self, j: usize) -> SparseVec<'_> {
        self.rows.get(j)
    }

    pub fn col(&self, i: usize) -> SparseVec<'_> {
        self.cols.get(i)
    }

    /// Row-major `(row, col, value)` triplets.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        (0..self.m)
            .flat_map(|j| self.row(j).iter().map(move |(i, v)| (j, i, v)))
            .collect()
    }

    /// Triplets rebuilt from the column layout, sorted row-major. Equal to
    /// [`Self::triplets`] whenever the two layouts agree.
    pub fn triplets_from_columns(&self) -> Vec<(usize, usize, f64)> {
        let mut t: Vec<_> = (0..self.n)
            .flat_map(|i| self.col(i).iter().map(move |(j, v)| (j, i, v)))
            .collect();
        t.sort_unstable_by_key(|&(j, i, _)| (j, i));
        t
    }

    pub fn row_sparsity(&self) -> RowSparsityProfile {
        let mut per_row_nnz = vec![0usize; self.n + 1];
        let mut omega = 0;
        for j in 0..self.m {
            let k = self.row(j).nnz();
            per_row_nnz[k] += 1;
            omega = omega.max(k);
        }
        per_row_nnz.truncate(omega + 1);
        RowSparsityProfile { omega, per_row_nnz }
    }

    /// Degree of Nesterov separability: the largest row nonzero count.
    pub fn omega(&self) -> usize {
        (0..self.m).map(|j| self.row(j).nnz()).max().unwrap_or(0)
    }

    /// Columns holding at least one nonzero.
    pub fn active_columns(&self) -> Vec<usize> {
        (0..self.n).filter(|&i| self.col(i).nnz() > 0).collect()
    }

    /// `[A; −A]` with labels `[b; −b]`, turning `‖Ax − b‖∞` into a maximum of
    /// `2m` affine functions.
    pub fn stack_linf(&self) -> ProblemData {
        let m = self.m;
        let mut triplets = self.triplets();
        let lower: Vec<_> = triplets.iter().map(|&(j, i, v)| (j + m, i, -v)).collect();
        triplets.extend(lower);
        let mut b = self.b.clone();
        b.extend(self.b.iter().map(|v| -v));
        Self::from_triplets(2 * m, self.n, &triplets, b).expect("stacking preserves validity")
    }

    /// Rows multiplied by `scale[j]`, with labels replaced by `labels`.
    pub fn scale_rows(&self, scale: &[f64], labels: Vec<f64>) -> Result<ProblemData> {
        if scale.len() != self.m {
            return Err(Error::Dimension(format!(
                "row scale has length {} but m = {}",
                scale.len(),
                self.m
            )));
        }
        let triplets: Vec<_> = self
            .triplets()
            .into_iter()
            .map(|(j, i, v)| (j, i, v * scale[j]))
            .collect();
        Self::from_triplets(self.m, self.n, &triplets, labels)
    }

    /// Copy with a different number of columns (must not drop nonzeros).
    pub fn with_n_cols(&self, n: usize) -> Result<ProblemData> {
        Self::from_triplets(self.m, n, &self.triplets(), self.b.clone())
    }

    /// `A x`
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.m).map(|j| self.row(j).dot(x)).collect()
    }

    /// `Aᵀ z`
    pub fn matvec_t(&self, z: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| self.col(i).dot(z)).collect()
    }
}
