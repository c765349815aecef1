//! The Moler matrix and the MO tensor family.
//!
//! Entrywise definitions (indices `i_1..i_m` in `1..=n`):
//!
//! | kind      | diagonal `i_1 = .. = i_m` | otherwise          |
//! |-----------|---------------------------|--------------------|
//! | Moler     | `i`                       | `min(i, j) - 2`    |
//! | M         | `i_1`                     | `min`              |
//! | N         | `0`                       | `1`                |
//! | essential | `i_1`                     | `min - 1`          |
//! | MO(a)     | `i_1`                     | `min - a`          |
//!
//! [`entry`] is the reference for all of them. The rank-one constructors use
//! `e` (all ones), `e_i` (unit vectors) and `r_i` (ones from position `i` on):
//!
//! - `M = sum_{i>=2} r_i^m + e^m`
//! - `N = e^m - sum_i e_i^m`
//! - `MO(a) = sum_{i>=2} r_i^m + (1 - a) e^m + a sum_i e_i^m`

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dense::{DenseSymmetricTensor, DEFAULT_DENSE_BUDGET};
use crate::error::{Error, Result};
use crate::tensor::{RankOneSum, RankOneTerm};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FamilyKind {
    #[serde(rename = "moler")]
    Moler,
    M,
    N,
    MO,
    #[serde(rename = "essential")]
    Essential,
}

impl std::str::FromStr for FamilyKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "moler" => Ok(Self::Moler),
            "M" => Ok(Self::M),
            "N" => Ok(Self::N),
            "MO" => Ok(Self::MO),
            "essential" => Ok(Self::Essential),
            other => Err(Error::InvalidInput(format!("unknown family '{other}'"))),
        }
    }
}

/// Symbolic description of a family member.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub kind: FamilyKind,
    pub n: usize,
    pub m: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

impl FamilySpec {
    pub fn moler(n: usize) -> Self {
        Self {
            kind: FamilyKind::Moler,
            n,
            m: 2,
            alpha: None,
        }
    }

    pub fn m_tensor(n: usize, m: usize) -> Self {
        Self {
            kind: FamilyKind::M,
            n,
            m,
            alpha: None,
        }
    }

    pub fn n_tensor(n: usize, m: usize) -> Self {
        Self {
            kind: FamilyKind::N,
            n,
            m,
            alpha: None,
        }
    }

    pub fn mo(n: usize, m: usize, alpha: f64) -> Self {
        Self {
            kind: FamilyKind::MO,
            n,
            m,
            alpha: Some(alpha),
        }
    }

    pub fn essential(n: usize, m: usize) -> Self {
        Self {
            kind: FamilyKind::Essential,
            n,
            m,
            alpha: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::InvalidInput("dimension must be >= 1".into()));
        }
        if self.m < 2 {
            return Err(Error::InvalidInput("order must be >= 2".into()));
        }
        match self.kind {
            FamilyKind::Moler if self.m != 2 => {
                Err(Error::InvalidInput("the Moler matrix has order 2".into()))
            }
            FamilyKind::MO => match self.alpha {
                Some(a) if a.is_finite() => Ok(()),
                _ => Err(Error::InvalidInput("MO needs a finite alpha".into())),
            },
            _ if self.alpha.is_some() => Err(Error::InvalidInput(
                "alpha is only meaningful for MO".into(),
            )),
            _ => Ok(()),
        }
    }

    /// The `a` with `tensor = M - a N`; meaningless for `N` itself.
    fn alpha_equiv(&self) -> f64 {
        match self.kind {
            FamilyKind::Moler => 2.0,
            FamilyKind::M => 0.0,
            FamilyKind::Essential => 1.0,
            FamilyKind::MO => self.alpha.unwrap_or(0.0),
            FamilyKind::N => f64::NAN,
        }
    }

    pub fn rank_one(&self) -> Result<RankOneSum> {
        self.validate()?;
        match self.kind {
            FamilyKind::N => n_tensor(self.n, self.m),
            _ => mo_tensor(self.n, self.m, self.alpha_equiv()),
        }
    }

    /// Dense tensor straight from the entrywise definition.
    pub fn dense_by_entry(&self, budget: u64) -> Result<DenseSymmetricTensor<f64>> {
        self.validate()?;
        DenseSymmetricTensor::from_fn(self.m, self.n, budget, |idx| {
            entry_unchecked(self, idx.iter().map(|i| i + 1))
        })
    }

    /// Integer dense tensor from the definition; fails for non-integer alpha.
    pub fn dense_exact(&self, budget: u64) -> Result<DenseSymmetricTensor<i64>> {
        self.validate()?;
        let a = self.integer_alpha()?;
        DenseSymmetricTensor::from_fn(self.m, self.n, budget, |idx| {
            entry_exact_unchecked(self.kind, a, idx.iter().map(|&i| i as i64 + 1))
        })
    }

    fn integer_alpha(&self) -> Result<i64> {
        if self.kind == FamilyKind::N {
            return Ok(0);
        }
        let a = self.alpha_equiv();
        if a.fract() == 0.0 && a.abs() < 1e15 {
            Ok(a as i64)
        } else {
            Err(Error::NotInteger)
        }
    }
}

fn check_index(spec: &FamilySpec, index: &[usize]) -> Result<()> {
    spec.validate()?;
    if index.len() != spec.m {
        return Err(Error::DimensionMismatch {
            expected: spec.m,
            got: index.len(),
        });
    }
    if let Some(&bad) = index.iter().find(|&&i| i < 1 || i > spec.n) {
        return Err(Error::InvalidInput(format!(
            "index component {bad} outside 1..={}",
            spec.n
        )));
    }
    Ok(())
}

/// Entry of `spec` at a 1-based index.
pub fn entry(spec: &FamilySpec, index: &[usize]) -> Result<f64> {
    check_index(spec, index)?;
    Ok(entry_unchecked(spec, index.iter().copied()))
}

fn entry_unchecked(spec: &FamilySpec, index: impl Iterator<Item = usize>) -> f64 {
    let (lo, hi) = index.fold((usize::MAX, 0), |(lo, hi), i| (lo.min(i), hi.max(i)));
    let diagonal = lo == hi;
    match spec.kind {
        FamilyKind::N => {
            if diagonal {
                0.0
            } else {
                1.0
            }
        }
        _ => {
            if diagonal {
                lo as f64
            } else {
                lo as f64 - spec.alpha_equiv()
            }
        }
    }
}

/// Integer entry for the integer-valued kinds (MO only with integral alpha).
pub fn entry_exact(spec: &FamilySpec, index: &[usize]) -> Result<i64> {
    check_index(spec, index)?;
    let a = spec.integer_alpha()?;
    Ok(entry_exact_unchecked(
        spec.kind,
        a,
        index.iter().map(|&i| i as i64),
    ))
}

fn entry_exact_unchecked(kind: FamilyKind, alpha: i64, index: impl Iterator<Item = i64>) -> i64 {
    let (lo, hi) = index.fold((i64::MAX, i64::MIN), |(lo, hi), i| (lo.min(i), hi.max(i)));
    let diagonal = lo == hi;
    match kind {
        FamilyKind::N => i64::from(!diagonal),
        _ => {
            if diagonal {
                lo
            } else {
                lo - alpha
            }
        }
    }
}

fn unit(n: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[i] = 1.0;
    v
}

/// `r_i` with a 1-based `i`: ones at positions `i..=n`.
fn tail_ones(n: usize, i: usize) -> Vec<f64> {
    (1..=n).map(|j| if j >= i { 1.0 } else { 0.0 }).collect()
}

fn check_shape(n: usize, m: usize) -> Result<()> {
    if n < 1 {
        return Err(Error::InvalidInput("dimension must be >= 1".into()));
    }
    if m < 2 {
        return Err(Error::InvalidInput("order must be >= 2".into()));
    }
    Ok(())
}

/// `MO(alpha) = M - alpha N` as a rank-one sum, valid for every real alpha.
/// Terms are ordered `e_1..e_n`, `r_2..r_n`, `e`; zero weights are dropped.
pub fn mo_tensor(n: usize, m: usize, alpha: f64) -> Result<RankOneSum> {
    check_shape(n, m)?;
    if !alpha.is_finite() {
        return Err(Error::InvalidInput("alpha must be finite".into()));
    }
    let mut terms = Vec::with_capacity(2 * n);
    if alpha != 0.0 {
        terms.extend((0..n).map(|i| RankOneTerm {
            weight: alpha,
            vector: unit(n, i),
        }));
    }
    terms.extend((2..=n).map(|i| RankOneTerm {
        weight: 1.0,
        vector: tail_ones(n, i),
    }));
    if alpha != 1.0 {
        terms.push(RankOneTerm {
            weight: 1.0 - alpha,
            vector: vec![1.0; n],
        });
    }
    RankOneSum::new(m, n, terms)
}

pub fn m_tensor(n: usize, m: usize) -> Result<RankOneSum> {
    mo_tensor(n, m, 0.0)
}

/// `N = e^m - sum_i e_i^m`.
pub fn n_tensor(n: usize, m: usize) -> Result<RankOneSum> {
    check_shape(n, m)?;
    let mut terms = vec![RankOneTerm {
        weight: 1.0,
        vector: vec![1.0; n],
    }];
    terms.extend((0..n).map(|i| RankOneTerm {
        weight: -1.0,
        vector: unit(n, i),
    }));
    RankOneSum::new(m, n, terms)
}

pub fn moler_matrix(n: usize) -> Result<DenseSymmetricTensor<i64>> {
    FamilySpec::moler(n).dense_exact(DEFAULT_DENSE_BUDGET.max((n * n) as u64))
}

/// The unit lower-triangular factor with `-1` below the diagonal; `L L^T` is
/// the Moler matrix.
pub fn moler_factor(n: usize) -> Result<DMatrix<i64>> {
    if n < 1 {
        return Err(Error::InvalidInput("dimension must be >= 1".into()));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Equal => 1,
        std::cmp::Ordering::Greater => -1,
        std::cmp::Ordering::Less => 0,
    }))
}

/// Nonnegative rank-one decomposition witnessing complete positivity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpCertificate {
    pub terms: Vec<RankOneTerm>,
    pub target: FamilySpec,
}

impl CpCertificate {
    fn new(terms: Vec<RankOneTerm>, target: FamilySpec) -> Self {
        debug_assert!(terms
            .iter()
            .all(|t| t.weight >= 0.0 && t.vector.iter().all(|&v| v >= 0.0)));
        Self { terms, target }
    }

    pub fn is_nonnegative(&self) -> bool {
        self.terms
            .iter()
            .all(|t| t.weight >= 0.0 && t.vector.iter().all(|&v| v >= 0.0))
    }

    pub fn to_rank_one(&self) -> Result<RankOneSum> {
        RankOneSum::new(self.target.m, self.target.n, self.terms.clone())
    }

    /// Largest entrywise gap between the certificate and its target's
    /// definition, in floating point.
    pub fn max_deviation(&self, budget: u64) -> Result<f64> {
        let ours = self.to_rank_one()?.materialize_with_budget(budget)?;
        let reference = self.target.dense_by_entry(budget)?;
        Ok(ours.max_abs_diff(&reference).expect("shapes agree"))
    }

    /// Integer version of [`Self::max_deviation`] for integral targets.
    pub fn max_deviation_exact(&self, budget: u64) -> Result<i64> {
        let ours = self.to_rank_one()?.materialize_exact(budget)?;
        let reference = self.target.dense_exact(budget)?;
        Ok(ours.max_abs_diff_exact(&reference).expect("shapes agree"))
    }
}

/// Essential MO tensor by definition, with its CP certificate.
#[derive(Debug)]
pub struct EssentialMo {
    /// Dense tensor; a size error when the budget is too small.
    pub dense: Result<DenseSymmetricTensor<i64>>,
    pub certificate: CpCertificate,
}

/// `sum_i e_i^m + sum_{i>=2} r_i^m`: `2n - 1` unit-weight 0/1 terms.
pub fn essential_mo(n: usize, m: usize, budget: u64) -> Result<EssentialMo> {
    check_shape(n, m)?;
    let spec = FamilySpec::essential(n, m);
    let mut terms: Vec<RankOneTerm> = (0..n)
        .map(|i| RankOneTerm {
            weight: 1.0,
            vector: unit(n, i),
        })
        .collect();
    terms.extend((2..=n).map(|i| RankOneTerm {
        weight: 1.0,
        vector: tail_ones(n, i),
    }));
    Ok(EssentialMo {
        dense: spec.dense_exact(budget),
        certificate: CpCertificate::new(terms, spec),
    })
}

/// CP certificate of `MO(alpha)` for `alpha` in `[0, 1]`; `None` elsewhere
/// (which is not a proof that none exists).
pub fn cp_certificate(n: usize, m: usize, alpha: f64) -> Result<Option<CpCertificate>> {
    check_shape(n, m)?;
    if !(0.0..=1.0).contains(&alpha) {
        return Ok(None);
    }
    if alpha == 1.0 {
        return Ok(Some(essential_mo(n, m, 0)?.certificate));
    }
    let terms = mo_tensor(n, m, alpha)?.terms().to_vec();
    Ok(Some(CpCertificate::new(terms, FamilySpec::mo(n, m, alpha))))
}

/// `MO(alpha) x^m` at `x = (1, -1, 0, ..., 0)`, which equals `1 + 2 alpha`.
pub fn sub_mo_witness_value(n: usize, m: usize, alpha: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidInput("witness needs n >= 2".into()));
    }
    if m % 2 == 1 {
        return Err(Error::OddOrder(m));
    }
    let mut x = vec![0.0; n];
    x[0] = 1.0;
    x[1] = -1.0;
    mo_tensor(n, m, alpha)?.eval_poly(&x)
}
