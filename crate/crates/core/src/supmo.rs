//! The Sup-MO value `alpha*(m) = 1 + beta*(m)`.
//!
//! With `c = 1 + beta` and `z_1 = 1`,
//!
//! ```text
//! g_{n,m}(z, beta) = c * (sum_{i<n} (z_i - z_{i+1})^m + z_n^m) + sum_{i>=2} z_i^m
//! f_{n,m}(beta)    = min_z g_{n,m}(z, beta)
//! ```
//!
//! `MO(1 + beta)` is PSD in dimension `n` iff `f_{n,m}(beta) >= beta`, so the
//! Sup-MO value comes from the fixed point of `f_{n,m}` as `n` grows.
//! `g` is convex in `(z_2, .., z_n)` with a tridiagonal Hessian; the inner
//! problem is solved by damped Newton with an `O(n)` banded solve.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::format_real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InnerSolveResult {
    pub beta: f64,
    pub n: usize,
    pub m: usize,
    /// `f_{n,m}(beta)`.
    pub value: f64,
    /// Full minimizer, `minimizer_z[0] == 1`.
    pub minimizer_z: Vec<f64>,
    /// Max-norm of the gradient over the free coordinates.
    pub grad_norm: f64,
    pub iterations: usize,
}

/// Gradient and tridiagonal Hessian of `g` over `(z_2, .., z_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradHess {
    pub grad: Vec<f64>,
    pub diag: Vec<f64>,
    /// `off[k]` couples free coordinates `k` and `k + 1`.
    pub off: Vec<f64>,
}

fn check_order(m: usize) -> Result<()> {
    if m < 2 {
        return Err(Error::InvalidInput("order must be >= 2".into()));
    }
    if m % 2 == 1 {
        return Err(Error::OddOrder(m));
    }
    Ok(())
}

fn check_args(z: &[f64], beta: f64, m: usize) -> Result<()> {
    check_order(m)?;
    if z.is_empty() {
        return Err(Error::InvalidInput("z must have at least one entry".into()));
    }
    if z[0] != 1.0 {
        return Err(Error::InvalidInput(format!("z_1 must be 1, got {}", z[0])));
    }
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "beta must be >= 0, got {beta}"
        )));
    }
    Ok(())
}

/// `g_{n,m}(z, beta)`; `z[0]` must be exactly 1.
pub fn g_value(z: &[f64], beta: f64, m: usize) -> Result<f64> {
    check_args(z, beta, m)?;
    Ok(objective(&z[1..], 1.0 + beta, m))
}

pub fn g_grad_hess(z: &[f64], beta: f64, m: usize) -> Result<GradHess> {
    check_args(z, beta, m)?;
    Ok(grad_hess(&z[1..], 1.0 + beta, m))
}

/// `g` as a function of the free coordinates `y = (z_2, .., z_n)`.
fn objective(y: &[f64], c: f64, m: usize) -> f64 {
    let p = m as i32;
    let mut prev = 1.0;
    let mut diffs = 0.0;
    let mut powers = 0.0;
    for &v in y {
        diffs += (prev - v).powi(p);
        powers += v.powi(p);
        prev = v;
    }
    c * (diffs + prev.powi(p)) + powers
}

fn grad_hess(y: &[f64], c: f64, m: usize) -> GradHess {
    let k = y.len();
    let p = m as i32;
    let mf = m as f64;
    let h = mf * (mf - 1.0);
    let mut grad = vec![0.0; k];
    let mut diag = vec![0.0; k];
    let mut off = vec![0.0; k.saturating_sub(1)];
    for j in 0..k {
        let left = if j == 0 { 1.0 } else { y[j - 1] };
        let d_left = left - y[j];
        grad[j] = -c * mf * d_left.powi(p - 1) + mf * y[j].powi(p - 1);
        diag[j] = c * h * d_left.powi(p - 2) + h * y[j].powi(p - 2);
        if j + 1 < k {
            let d_right = y[j] - y[j + 1];
            grad[j] += c * mf * d_right.powi(p - 1);
            diag[j] += c * h * d_right.powi(p - 2);
            off[j] = -c * h * d_right.powi(p - 2);
        } else {
            // last coordinate also carries c * z_n^m
            grad[j] += c * mf * y[j].powi(p - 1);
            diag[j] += c * h * y[j].powi(p - 2);
        }
    }
    GradHess { grad, diag, off }
}

/// Solves `(T + shift I) x = rhs` for symmetric tridiagonal `T` (Thomas).
fn solve_tridiagonal(diag: &[f64], off: &[f64], shift: f64, rhs: &[f64]) -> Option<Vec<f64>> {
    let k = diag.len();
    let mut c = vec![0.0; k];
    let mut d = vec![0.0; k];
    for i in 0..k {
        let a = if i > 0 { off[i - 1] } else { 0.0 };
        let denom = diag[i] + shift - a * if i > 0 { c[i - 1] } else { 0.0 };
        if denom <= 0.0 || !denom.is_finite() {
            return None;
        }
        if i + 1 < k {
            c[i] = off[i] / denom;
        }
        d[i] = (rhs[i] - a * if i > 0 { d[i - 1] } else { 0.0 }) / denom;
    }
    for i in (0..k.saturating_sub(1)).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Some(d)
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

const INNER_MAX_ITER: usize = 500;

/// `f_{n,m}(beta)` from the default start `z_i = 2^{1-i}`.
pub fn inner_minimize(n: usize, m: usize, beta: f64, tol: f64) -> Result<InnerSolveResult> {
    inner_minimize_from(n, m, beta, tol, None)
}

/// `f_{n,m}(beta)` starting from `warm` (length `n`, first entry ignored).
pub fn inner_minimize_from(
    n: usize,
    m: usize,
    beta: f64,
    tol: f64,
    warm: Option<&[f64]>,
) -> Result<InnerSolveResult> {
    check_order(m)?;
    if n < 1 {
        return Err(Error::InvalidInput("dimension must be >= 1".into()));
    }
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::InvalidInput(format!(
            "beta must lie in [0, 1], got {beta}"
        )));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidInput("tolerance must be positive".into()));
    }
    let c = 1.0 + beta;
    let mut y: Vec<f64> = match warm {
        Some(w) if w.len() == n => w[1..].to_vec(),
        Some(w) => {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: w.len(),
            })
        }
        None => (1..n).map(|i| 0.5f64.powi(i as i32)).collect(),
    };

    let mut value = objective(&y, c, m);
    let mut iterations = 0;
    let mut gn;
    loop {
        let gh = grad_hess(&y, c, m);
        gn = max_abs(&gh.grad);
        if gn <= tol {
            break;
        }
        if iterations >= INNER_MAX_ITER {
            let mut z = vec![1.0];
            z.extend_from_slice(&y);
            return Err(Error::InnerIterationLimit {
                best: Box::new(InnerSolveResult {
                    beta,
                    n,
                    m,
                    value,
                    minimizer_z: z,
                    grad_norm: gn,
                    iterations,
                }),
            });
        }
        iterations += 1;

        let mu = (tol * gn).max(1e-10);
        let neg: Vec<f64> = gh.grad.iter().map(|g| -g).collect();
        let mut dir = solve_tridiagonal(&gh.diag, &gh.off, mu, &neg).unwrap_or_else(|| neg.clone());
        let mut slope: f64 = dir.iter().zip(&gh.grad).map(|(d, g)| d * g).sum();
        if slope.is_nan() || slope >= 0.0 {
            dir = neg.clone();
            slope = -dir.iter().map(|d| d * d).sum::<f64>();
        }

        // Armijo backtracking with slack for rounding near the optimum
        let slack = 4.0 * f64::EPSILON * value.abs();
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<f64> = y.iter().zip(&dir).map(|(a, d)| a + t * d).collect();
            let tv = objective(&trial, c, m);
            if tv <= value + 1e-4 * t * slope + slack {
                y = trial;
                value = tv;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            // no representable decrease along the step; treat as stationary
            // only if the gradient has reached rounding level
            let gh = grad_hess(&y, c, m);
            gn = max_abs(&gh.grad);
            if gn <= tol.max(1e3 * f64::EPSILON * (1.0 + value.abs())) {
                break;
            }
            iterations = INNER_MAX_ITER;
        }
    }

    let mut z = Vec::with_capacity(n);
    z.push(1.0);
    z.extend_from_slice(&y);
    Ok(InnerSolveResult {
        beta,
        n,
        m,
        value,
        minimizer_z: z,
        grad_norm: gn,
        iterations,
    })
}

/// How the fixed point `f_{n,m}(beta) = beta` is located at fixed `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RootMode {
    /// Bracketed bisection of `h = f - beta` on `[0, 1]`.
    Bisection,
    /// Halve `beta` when `h < -eps`, move it halfway to 1 when `h > eps`.
    /// Keeps no bracket and may fail to settle.
    Literal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaStarOptions {
    /// Outer stop: successive schedule points agree to within this.
    pub epsilon: f64,
    pub inner_tol: f64,
    /// Bisection continues until the bracket is this narrow.
    pub bracket_tol: f64,
    pub mode: RootMode,
    /// Increasing dimensions to visit.
    pub schedule: Vec<usize>,
    /// Cap on root-finding steps per dimension.
    pub max_root_steps: usize,
}

impl Default for AlphaStarOptions {
    fn default() -> Self {
        Self {
            epsilon: 1e-4,
            inner_tol: 1e-10,
            bracket_tol: 1e-14,
            mode: RootMode::Bisection,
            schedule: doubling_schedule(2, 4096),
            max_root_steps: 200,
        }
    }
}

/// `start, 2 start, 4 start, ..` up to `max`.
pub fn doubling_schedule(start: usize, max: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut n = start.max(1);
    while n <= max {
        out.push(n);
        n *= 2;
    }
    out
}

/// Result of one fixed-point solve at fixed `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPoint {
    pub n: usize,
    pub beta: f64,
    /// `f_{n,m}(beta)` at the returned `beta`.
    pub f_value: f64,
    pub minimizer_z: Vec<f64>,
    pub inner_iterations: usize,
    pub root_steps: usize,
    /// True when `h(1) >= -eps` and `beta = 1` was returned.
    pub boundary: bool,
}

/// `beta` in `[0, 1]` with `|f_{n,m}(beta) - beta| <= eps`.
pub fn fixed_point_beta(n: usize, m: usize, eps: f64) -> Result<f64> {
    let opts = AlphaStarOptions {
        epsilon: eps,
        ..AlphaStarOptions::default()
    };
    Ok(solve_fixed_point(n, m, &opts, None, 1.0)?.beta)
}

/// Fixed point at dimension `n`. `warm` seeds the inner solver; `start` is
/// the initial `beta` for [`RootMode::Literal`].
pub fn solve_fixed_point(
    n: usize,
    m: usize,
    opts: &AlphaStarOptions,
    warm: Option<&[f64]>,
    start: f64,
) -> Result<FixedPoint> {
    check_order(m)?;
    if opts.epsilon.is_nan() || opts.epsilon <= 0.0 {
        return Err(Error::InvalidInput("epsilon must be positive".into()));
    }
    let eps = opts.epsilon;
    let mut z = warm.map(<[f64]>::to_vec);
    let mut inner_iterations = 0;
    let mut eval = |beta: f64, z: &mut Option<Vec<f64>>| -> Result<f64> {
        let r = inner_minimize_from(n, m, beta, opts.inner_tol, z.as_deref())?;
        inner_iterations += r.iterations;
        *z = Some(r.minimizer_z);
        Ok(r.value)
    };

    let f_one = eval(1.0, &mut z)?;
    if f_one - 1.0 >= -eps {
        return Ok(FixedPoint {
            n,
            beta: 1.0,
            f_value: f_one,
            minimizer_z: z.expect("set by eval"),
            inner_iterations,
            root_steps: 1,
            boundary: true,
        });
    }

    match opts.mode {
        RootMode::Bisection => {
            let (mut lo, mut hi) = (0.0f64, 1.0f64);
            let mut lo_state: Option<(f64, Vec<f64>)> = None;
            let mut steps = 1;
            while hi - lo > opts.bracket_tol && steps < opts.max_root_steps {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                let f = eval(mid, &mut z)?;
                steps += 1;
                if f - mid >= 0.0 {
                    lo = mid;
                    lo_state = Some((f, z.clone().expect("set by eval")));
                } else {
                    hi = mid;
                }
            }
            let (f_value, minimizer_z) = match lo_state {
                Some(s) => s,
                None => {
                    let f = eval(lo, &mut z)?;
                    steps += 1;
                    (f, z.expect("set by eval"))
                }
            };
            Ok(FixedPoint {
                n,
                beta: lo,
                f_value,
                minimizer_z,
                inner_iterations,
                root_steps: steps,
                boundary: false,
            })
        }
        RootMode::Literal => {
            let mut beta = start.clamp(0.0, 1.0);
            for step in 1..=opts.max_root_steps {
                let f = eval(beta, &mut z)?;
                let h = f - beta;
                if h < -eps {
                    beta *= 0.5;
                } else if h > eps {
                    beta = 0.5 * (beta + 1.0);
                } else {
                    return Ok(FixedPoint {
                        n,
                        beta,
                        f_value: f,
                        minimizer_z: z.expect("set by eval"),
                        inner_iterations,
                        root_steps: step,
                        boundary: false,
                    });
                }
            }
            Err(Error::FixedPointLimit {
                beta,
                steps: opts.max_root_steps,
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub n: usize,
    pub beta_n: f64,
    pub f_value: f64,
    pub inner_iterations: usize,
    pub root_steps: usize,
    pub boundary: bool,
}

/// Fixed points along the n-schedule and the resulting `alpha*(m)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaSolveTrace {
    pub m: usize,
    pub epsilon: f64,
    pub mode: RootMode,
    pub per_n: Vec<StageRecord>,
    pub beta_star: f64,
    pub alpha_star: f64,
    pub converged: bool,
    /// Minimizer at the last visited dimension and `beta_star`.
    pub final_z: Vec<f64>,
}

impl BetaSolveTrace {
    /// CSV with columns `n,beta_n,f_value`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::InvalidInput(format!("csv write failed: {e}"));
        w.write_record(["n", "beta_n", "f_value"]).map_err(io)?;
        for s in &self.per_n {
            w.write_record([
                s.n.to_string(),
                format_real(s.beta_n),
                format_real(s.f_value),
            ])
            .map_err(io)?;
        }
        w.flush()
            .map_err(|e| Error::InvalidInput(format!("csv flush failed: {e}")))?;
        Ok(())
    }
}

/// Extends `z` to length `n` by continuing its last ratio.
fn pad_geometric(z: &[f64], n: usize) -> Vec<f64> {
    let mut out = z.to_vec();
    let k = z.len();
    let ratio = if k >= 2 && z[k - 2] != 0.0 {
        (z[k - 1] / z[k - 2]).clamp(0.0, 0.9)
    } else {
        0.5
    };
    while out.len() < n {
        let last = *out.last().unwrap_or(&1.0);
        out.push(last * ratio);
    }
    out.truncate(n);
    out
}

/// Runs the fixed-point search along `opts.schedule` until two successive
/// dimensions give fixed points within `opts.epsilon`.
pub fn alpha_star(m: usize, opts: &AlphaStarOptions) -> Result<BetaSolveTrace> {
    check_order(m)?;
    if opts.epsilon.is_nan() || opts.epsilon <= 0.0 {
        return Err(Error::InvalidInput("epsilon must be positive".into()));
    }
    if opts.schedule.is_empty() || opts.schedule[0] < 1 {
        return Err(Error::InvalidInput("schedule must start at n >= 1".into()));
    }
    if opts.schedule.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("schedule must be increasing".into()));
    }

    let mut per_n = Vec::with_capacity(opts.schedule.len());
    let mut z: Option<Vec<f64>> = None;
    let mut prev_beta: Option<f64> = None;
    let mut converged = false;
    for &n in &opts.schedule {
        let warm = z.as_ref().map(|z| pad_geometric(z, n));
        let fp = solve_fixed_point(n, m, opts, warm.as_deref(), prev_beta.unwrap_or(1.0))?;
        per_n.push(StageRecord {
            n,
            beta_n: fp.beta,
            f_value: fp.f_value,
            inner_iterations: fp.inner_iterations,
            root_steps: fp.root_steps,
            boundary: fp.boundary,
        });
        z = Some(fp.minimizer_z);
        if let Some(p) = prev_beta {
            if (fp.beta - p).abs() < opts.epsilon {
                converged = true;
            }
        }
        prev_beta = Some(fp.beta);
        if converged {
            break;
        }
    }

    let beta_star = prev_beta.expect("schedule is nonempty");
    let trace = BetaSolveTrace {
        m,
        epsilon: opts.epsilon,
        mode: opts.mode,
        per_n,
        beta_star,
        alpha_star: 1.0 + beta_star,
        converged,
        final_z: z.unwrap_or_default(),
    };
    if converged {
        Ok(trace)
    } else {
        Err(Error::OuterBudget {
            trace: Box::new(trace),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub n: usize,
    pub beta: f64,
    pub f: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    /// `f_{n+1}(beta) > f_n(beta)`.
    IncreasingInN,
    /// `f_n(beta_1) > f_n(beta_2)` with `beta_1 < beta_2`.
    DecreasingInBeta,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub n: usize,
    pub beta: f64,
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityTable {
    pub m: usize,
    pub tolerance: f64,
    pub rows: Vec<ProbeRow>,
    pub violations: Vec<Violation>,
}

impl MonotonicityTable {
    pub fn value(&self, n: usize, beta: f64) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.n == n && r.beta == beta)
            .map(|r| r.f)
    }
}

/// `f_{n,m}(beta)` for `n = 1..=n_max` and each grid point, with violations
/// of nonincreasing-in-`n` and nondecreasing-in-`beta` beyond `1e-9`.
pub fn f_monotonicity_probe(m: usize, betas: &[f64], n_max: usize) -> Result<MonotonicityTable> {
    check_order(m)?;
    if betas.iter().any(|b| !(0.0..=1.0).contains(b)) {
        return Err(Error::InvalidInput("beta grid must lie in [0, 1]".into()));
    }
    const TOL: f64 = 1e-9;
    let mut grid = betas.to_vec();
    grid.sort_by(f64::total_cmp);
    let mut rows = Vec::new();
    let mut violations = Vec::new();
    let mut by_beta: Vec<Vec<f64>> = Vec::with_capacity(grid.len());
    for &beta in &grid {
        let mut col = Vec::with_capacity(n_max);
        let mut z: Option<Vec<f64>> = None;
        for n in 1..=n_max {
            let warm = z.as_ref().map(|z| pad_geometric(z, n));
            let r = inner_minimize_from(n, m, beta, 1e-12, warm.as_deref())?;
            if let Some(&prev) = col.last() {
                if r.value > prev + TOL {
                    violations.push(Violation {
                        kind: ViolationKind::IncreasingInN,
                        n,
                        beta,
                        excess: r.value - prev,
                    });
                }
            }
            col.push(r.value);
            rows.push(ProbeRow {
                n,
                beta,
                f: r.value,
            });
            z = Some(r.minimizer_z);
        }
        by_beta.push(col);
    }
    for k in 1..grid.len() {
        for n in 1..=n_max {
            let (lower, upper) = (by_beta[k - 1][n - 1], by_beta[k][n - 1]);
            if lower > upper + TOL {
                violations.push(Violation {
                    kind: ViolationKind::DecreasingInBeta,
                    n,
                    beta: grid[k],
                    excess: lower - upper,
                });
            }
        }
    }
    Ok(MonotonicityTable {
        m,
        tolerance: TOL,
        rows,
        violations,
    })
}
