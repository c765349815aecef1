//! Dense permutation-symmetric tensors.
//!
//! Only one entry per multiset of indices is stored, so an order-`m`,
//! dimension-`n` tensor holds `C(n+m-1, m)` values. A sorted index
//! `i_0 <= ... <= i_{m-1}` maps to the strictly increasing sequence
//! `c_j = i_j + j`, whose colex rank is `sum_j C(c_j, j+1)`.
//!
//! All indices in this module are 0-based. The JSON export is 1-based.

use nalgebra::{DMatrix, Scalar};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::HomogeneousForm;

/// Default cap on `n^m` logical entries.
pub const DEFAULT_DENSE_BUDGET: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseSymmetricTensor<T> {
    order: usize,
    dim: usize,
    entries: Vec<T>,
    // binom[a * (order + 1) + b] = C(a, b)
    binom: Vec<usize>,
}

/// One stored entry, indexed from 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseEntry<T> {
    pub index: Vec<usize>,
    pub value: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseExport<T> {
    pub order: usize,
    pub dim: usize,
    pub entries: Vec<DenseEntry<T>>,
}

/// `n^m`, saturating.
pub fn logical_entries(order: usize, dim: usize) -> u128 {
    let mut total: u128 = 1;
    for _ in 0..order {
        total = total.saturating_mul(dim as u128);
    }
    total
}

fn binomial_table(rows: usize, cols: usize) -> Vec<usize> {
    let mut t = vec![0usize; rows * cols];
    for a in 0..rows {
        t[a * cols] = 1;
        for b in 1..cols.min(a + 1) {
            t[a * cols + b] = t[(a - 1) * cols + b - 1] + t[(a - 1) * cols + b];
        }
        if a < cols {
            t[a * cols + a] = 1;
        }
    }
    t
}

/// Number of distinct orderings of a sorted multi-index.
pub fn permutation_count(sorted: &[usize]) -> f64 {
    let mut count = factorial(sorted.len());
    let mut run = 1;
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            count /= factorial(run);
            run = 1;
        }
    }
    count / factorial(run)
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|v| v as f64).product()
}

/// Advances a sorted index to its lexicographic successor in `[0, dim)`.
fn next_sorted(idx: &mut [usize], dim: usize) -> bool {
    let m = idx.len();
    let mut p = m;
    while p > 0 {
        p -= 1;
        if idx[p] + 1 < dim {
            let v = idx[p] + 1;
            for slot in &mut idx[p..] {
                *slot = v;
            }
            return true;
        }
    }
    false
}

/// Iterator over sorted multi-indices of length `order` in `[0, dim)`.
pub struct SortedIndices {
    current: Vec<usize>,
    dim: usize,
    done: bool,
}

impl SortedIndices {
    pub fn new(order: usize, dim: usize) -> Self {
        Self {
            current: vec![0; order],
            dim,
            done: dim == 0,
        }
    }
}

impl Iterator for SortedIndices {
    type Item = Vec<usize>;
    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.current.clone();
        if !next_sorted(&mut self.current, self.dim) {
            self.done = true;
        }
        Some(out)
    }
}

impl<T: Copy> DenseSymmetricTensor<T> {
    /// Builds a tensor from `f` evaluated once per sorted representative.
    pub fn from_fn(
        order: usize,
        dim: usize,
        budget: u64,
        mut f: impl FnMut(&[usize]) -> T,
    ) -> Result<Self> {
        if order == 0 || dim == 0 {
            return Err(Error::InvalidInput(
                "order and dimension must be positive".into(),
            ));
        }
        let logical = logical_entries(order, dim);
        if logical > budget as u128 {
            return Err(Error::SizeBudget {
                entries: logical,
                budget,
            });
        }
        let binom = binomial_table(dim + order, order + 1);
        let stored = binom[(dim + order - 1) * (order + 1) + order];
        let mut entries = Vec::with_capacity(stored);
        let mut slots: Vec<Option<T>> = vec![None; stored];
        let mut out = Self {
            order,
            dim,
            entries: Vec::new(),
            binom,
        };
        for idx in SortedIndices::new(order, dim) {
            let r = out.rank(&idx);
            slots[r] = Some(f(&idx));
        }
        entries.extend(slots.into_iter().map(|s| s.expect("every rank is visited")));
        out.entries = entries;
        Ok(out)
    }

    fn rank(&self, sorted: &[usize]) -> usize {
        let cols = self.order + 1;
        sorted
            .iter()
            .enumerate()
            .map(|(j, &i)| self.binom[(i + j) * cols + j + 1])
            .sum()
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of stored (distinct) entries.
    pub fn stored_len(&self) -> usize {
        self.entries.len()
    }

    /// Entry at any (not necessarily sorted) 0-based index.
    ///
    /// Panics if `index` has the wrong length or an out-of-range component.
    pub fn get(&self, index: &[usize]) -> &T {
        assert_eq!(index.len(), self.order, "index length must equal order");
        assert!(index.iter().all(|&i| i < self.dim), "index out of range");
        let mut sorted = index.to_vec();
        sorted.sort_unstable();
        &self.entries[self.rank(&sorted)]
    }

    /// Sorted representatives paired with their values, in lexicographic order.
    pub fn iter_sorted(&self) -> impl Iterator<Item = (Vec<usize>, T)> + '_ {
        SortedIndices::new(self.order, self.dim).map(move |idx| {
            let v = self.entries[self.rank(&idx)];
            (idx, v)
        })
    }

    pub fn map<U: Copy>(&self, f: impl Fn(T) -> U) -> DenseSymmetricTensor<U> {
        DenseSymmetricTensor {
            order: self.order,
            dim: self.dim,
            entries: self.entries.iter().map(|&v| f(v)).collect(),
            binom: self.binom.clone(),
        }
    }

    pub fn export(&self) -> DenseExport<T> {
        DenseExport {
            order: self.order,
            dim: self.dim,
            entries: self
                .iter_sorted()
                .map(|(idx, value)| DenseEntry {
                    index: idx.iter().map(|i| i + 1).collect(),
                    value,
                })
                .collect(),
        }
    }
}

impl<T: Copy + Serialize> DenseSymmetricTensor<T> {
    /// Every entry as an `n x n x .. x n` nested JSON array.
    pub fn to_nested(&self) -> serde_json::Value {
        let mut idx = Vec::with_capacity(self.order);
        self.nested_level(&mut idx)
    }

    fn nested_level(&self, idx: &mut Vec<usize>) -> serde_json::Value {
        if idx.len() == self.order {
            return serde_json::to_value(*self.get(idx)).unwrap_or(serde_json::Value::Null);
        }
        let items = (0..self.dim)
            .map(|i| {
                idx.push(i);
                let v = self.nested_level(idx);
                idx.pop();
                v
            })
            .collect();
        serde_json::Value::Array(items)
    }
}

impl<T: Copy + Scalar> DenseSymmetricTensor<T> {
    /// Order-2 tensors as a square matrix.
    pub fn to_matrix(&self) -> Result<DMatrix<T>> {
        if self.order != 2 {
            return Err(Error::InvalidInput(format!(
                "matrix view needs order 2, tensor has order {}",
                self.order
            )));
        }
        Ok(DMatrix::from_fn(self.dim, self.dim, |i, j| {
            *self.get(&[i, j])
        }))
    }
}

impl DenseSymmetricTensor<f64> {
    /// Largest absolute entrywise difference; `None` if shapes differ.
    pub fn max_abs_diff(&self, other: &Self) -> Option<f64> {
        if self.order != other.order || self.dim != other.dim {
            return None;
        }
        Some(
            self.entries
                .iter()
                .zip(&other.entries)
                .fold(0.0f64, |a, (p, q)| a.max((p - q).abs())),
        )
    }

    /// Full contraction `sum a_{i_1..i_m} x_{i_1} ... x_{i_m}`, one term per
    /// multiset weighted by its permutation count.
    pub fn contract(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(self
            .iter_sorted()
            .map(|(idx, a)| {
                a * permutation_count(&idx) * idx.iter().map(|&i| x[i]).product::<f64>()
            })
            .sum())
    }

    /// `A x^{m-1}` by direct summation over the trailing `m-1` indices.
    pub fn contract_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        let mut out = vec![0.0; self.dim];
        if self.order == 1 {
            for (i, o) in out.iter_mut().enumerate() {
                *o = *self.get(&[i]);
            }
            return Ok(out);
        }
        for tail in SortedIndices::new(self.order - 1, self.dim) {
            let w = permutation_count(&tail) * tail.iter().map(|&i| x[i]).product::<f64>();
            if w == 0.0 {
                continue;
            }
            let mut full = Vec::with_capacity(self.order);
            for (i, o) in out.iter_mut().enumerate() {
                full.clear();
                full.push(i);
                full.extend_from_slice(&tail);
                *o += self.get(&full) * w;
            }
        }
        Ok(out)
    }
}

impl DenseSymmetricTensor<i64> {
    pub fn to_f64(&self) -> DenseSymmetricTensor<f64> {
        self.map(|v| v as f64)
    }

    pub fn max_abs_diff_exact(&self, other: &Self) -> Option<i64> {
        if self.order != other.order || self.dim != other.dim {
            return None;
        }
        Some(
            self.entries
                .iter()
                .zip(&other.entries)
                .map(|(p, q)| (p - q).abs())
                .max()
                .unwrap_or(0),
        )
    }
}

impl HomogeneousForm for DenseSymmetricTensor<f64> {
    fn order(&self) -> usize {
        self.order
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn form(&self, x: &[f64]) -> Result<f64> {
        self.contract(x)
    }
}
