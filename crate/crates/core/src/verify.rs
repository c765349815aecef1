//! Identity checks bundled for the `verify` command.

use serde::{Deserialize, Serialize};

use crate::dense::DEFAULT_DENSE_BUDGET;
use crate::error::Result;
use crate::family::{
    essential_mo, mo_tensor, moler_factor, moler_matrix, n_tensor, sub_mo_witness_value, FamilySpec,
};
use crate::rng;
use crate::supmo::g_value;
use rand::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    /// Restrict dimension-dependent checks to this `n`.
    pub dims: Option<usize>,
    /// Restrict order-dependent checks to this `m`.
    pub order: Option<usize>,
    pub seed: u64,
    pub budget: u64,
    /// Corrupts one certificate so the suite must fail.
    pub inject_fault: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            dims: None,
            order: None,
            seed: 42,
            budget: DEFAULT_DENSE_BUDGET,
            inject_fault: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub max_diff: f64,
    pub tolerance: f64,
    pub cases: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
    pub all_passed: bool,
}

impl VerifyReport {
    pub fn failed(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

struct Acc {
    name: &'static str,
    tol: f64,
    worst: f64,
    cases: usize,
}

impl Acc {
    fn new(name: &'static str, tol: f64) -> Self {
        Self {
            name,
            tol,
            worst: 0.0,
            cases: 0,
        }
    }
    fn add(&mut self, diff: f64) {
        self.cases += 1;
        if diff.is_nan() || diff > self.worst {
            self.worst = if diff.is_nan() { f64::INFINITY } else { diff };
        }
    }
    fn finish(self) -> CheckResult {
        CheckResult {
            name: self.name.to_string(),
            passed: self.cases > 0 && self.worst <= self.tol,
            max_diff: self.worst,
            tolerance: self.tol,
            cases: self.cases,
        }
    }
}

pub fn run(opts: &VerifyOptions) -> Result<VerifyReport> {
    let dims: Vec<usize> = match opts.dims {
        Some(n) => vec![n],
        None => (1..=6).collect(),
    };
    let orders: Vec<usize> = match opts.order {
        Some(m) => vec![m],
        None => vec![2, 3, 4, 6],
    };
    let mut checks = Vec::new();

    // essential MO certificate against the entrywise definition
    let mut cp = Acc::new("essential-cp-identity", 0.0);
    for &n in &dims {
        for &m in &orders {
            let e = essential_mo(n, m, opts.budget)?;
            let mut cert = e.certificate;
            if opts.inject_fault && cp.cases == 0 {
                cert.terms[0].weight += 1.0;
            }
            cp.add(cert.max_deviation_exact(opts.budget)? as f64);
        }
    }
    checks.push(cp.finish());

    // M = sum r_i^m + e^m, N = e^m - sum e_i^m, MO(a) for integral a
    let mut rank_one = Acc::new("rank-one-vs-entry", 0.0);
    for &n in &dims {
        for &m in &orders {
            for alpha in [0.0, 1.0, 2.0, -1.0] {
                let ours = mo_tensor(n, m, alpha)?.materialize_exact(opts.budget)?;
                let reference = FamilySpec::mo(n, m, alpha).dense_exact(opts.budget)?;
                rank_one.add(ours.max_abs_diff_exact(&reference).unwrap_or(i64::MAX) as f64);
            }
            let ours = n_tensor(n, m)?.materialize_exact(opts.budget)?;
            let reference = FamilySpec::n_tensor(n, m).dense_exact(opts.budget)?;
            rank_one.add(ours.max_abs_diff_exact(&reference).unwrap_or(i64::MAX) as f64);
        }
    }
    checks.push(rank_one.finish());

    // MO(a) at (1, -1, 0, ..) equals 1 + 2a
    let mut witness = Acc::new("sub-mo-witness", 1e-12);
    let mut g = rng::stream(opts.seed, 1);
    for &n in dims.iter().filter(|&&n| n >= 2) {
        for &m in orders.iter().filter(|&&m| m % 2 == 0) {
            for _ in 0..5 {
                let alpha: f64 = g.random_range(-1.0..=1.0);
                witness.add((sub_mo_witness_value(n, m, alpha)? - (1.0 + 2.0 * alpha)).abs());
            }
        }
    }
    if witness.cases == 0 {
        for alpha in [-0.5, 0.0, 0.75] {
            witness.add((sub_mo_witness_value(2, 4, alpha)? - (1.0 + 2.0 * alpha)).abs());
        }
    }
    checks.push(witness.finish());

    // L L^T equals the Moler matrix
    let mut moler = Acc::new("moler-factor", 0.0);
    let moler_dims: Vec<usize> = match opts.dims {
        Some(n) => vec![n],
        None => (1..=30).collect(),
    };
    for n in moler_dims {
        let l = moler_factor(n)?;
        let product = &l * l.transpose();
        let a = moler_matrix(n)?.to_matrix()?;
        let diff = (product - a).iter().map(|v| v.abs()).max().unwrap_or(0);
        moler.add(diff as f64);
    }
    checks.push(moler.finish());

    // g((1, 1/2, 0, ..), 1) = 5 / 2^m
    let mut anchor = Acc::new("g-anchor", 1e-12);
    let anchor_orders: Vec<usize> = match opts.order {
        Some(m) if m >= 4 && m % 2 == 0 => vec![m],
        _ => vec![4, 6, 8],
    };
    let anchor_n = opts.dims.unwrap_or(5).max(2);
    for m in anchor_orders {
        let mut z = vec![0.0; anchor_n];
        z[0] = 1.0;
        z[1] = 0.5;
        let want = 5.0 / 2f64.powi(m as i32);
        anchor.add((g_value(&z, 1.0, m)? - want).abs());
    }
    checks.push(anchor.finish());

    let all_passed = checks.iter().all(|c| c.passed);
    Ok(VerifyReport { checks, all_passed })
}
