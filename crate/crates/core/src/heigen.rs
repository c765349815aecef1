//! Smallest H-eigenvalue estimation.
//!
//! For even `m` the smallest H-eigenvalue is `min { A x^m : ||x||_m = 1 }`.
//! The estimator runs a local method from many starts and keeps the best
//! point whose KKT residual `||A x^{m-1} - lambda x^[m-1]||_inf` is small.
//! The result is an upper bound on the true minimum; [`crate::oracle`]
//! certifies it on small instances.

use std::cmp::Ordering;
use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::{mo_tensor, moler_factor};
use crate::rng;
use crate::tensor::{dot, format_real, m_norm, pow_vec, RankOneSum};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HEigenPair {
    pub lambda: f64,
    /// Unit m-norm; largest-magnitude component positive.
    pub x: Vec<f64>,
    pub kkt_residual: f64,
    pub starts_used: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorOptions {
    pub starts: usize,
    pub seed: u64,
    pub max_iter: usize,
    /// A run stops once its residual falls below this.
    pub kkt_target: f64,
    /// Runs ending above this residual are not considered converged.
    pub kkt_accept: f64,
}

impl Default for EstimatorOptions {
    fn default() -> Self {
        Self {
            starts: 64,
            seed: 42,
            max_iter: 10_000,
            kkt_target: 1e-10,
            kkt_accept: 1e-8,
        }
    }
}

/// `||A x^{m-1} - lambda x^[m-1]||_inf`.
pub fn kkt_residual(t: &RankOneSum, lambda: f64, x: &[f64]) -> Result<f64> {
    let ax = t.eval_grad(x)?;
    let xp = pow_vec(x, t.order() - 1);
    Ok(ax
        .iter()
        .zip(&xp)
        .fold(0.0f64, |a, (p, q)| a.max((p - lambda * q).abs())))
}

fn normalize(x: &[f64], m: usize) -> Option<Vec<f64>> {
    let s = m_norm(x, m);
    if s == 0.0 || !s.is_finite() {
        return None;
    }
    Some(x.iter().map(|v| v / s).collect())
}

/// Makes the first largest-magnitude component positive.
pub(crate) fn fix_sign(x: &mut [f64]) {
    let mut best = 0;
    for (i, v) in x.iter().enumerate() {
        if v.abs() > x[best].abs() {
            best = i;
        }
    }
    if x[best] < 0.0 {
        for v in x.iter_mut() {
            *v = -*v;
        }
    }
}

struct Run {
    x: Vec<f64>,
    lambda: f64,
    residual: f64,
}

/// Sum of `|w_k| |u_k . x|^m`, the magnitude scale of `A x^m`.
fn form_scale(t: &RankOneSum, x: &[f64]) -> f64 {
    let m = t.order() as i32;
    t.terms()
        .iter()
        .map(|k| k.weight.abs() * dot(&k.vector, x).abs().powi(m))
        .sum()
}

fn residual_vec(t: &RankOneSum, x: &[f64], lambda: f64) -> Vec<f64> {
    let ax = t.eval_grad(x).expect("length checked by caller");
    let m = t.order();
    ax.iter()
        .zip(x)
        .map(|(a, v)| a - lambda * v.powi(m as i32 - 1))
        .collect()
}

/// Orthonormal basis (as columns) of the complement of `g`, from the
/// Householder reflection that maps `g` onto a multiple of `e_1`.
fn complement_basis(g: &[f64]) -> Option<DMatrix<f64>> {
    let n = g.len();
    let norm = dot(g, g).sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return None;
    }
    let mut v: Vec<f64> = g.iter().map(|c| c / norm).collect();
    v[0] += if v[0] >= 0.0 { 1.0 } else { -1.0 };
    let vv = dot(&v, &v);
    Some(DMatrix::from_fn(n, n - 1, |i, j| {
        let col = j + 1;
        let id = if i == col { 1.0 } else { 0.0 };
        id - 2.0 * v[i] * v[col] / vv
    }))
}

/// Modified Newton direction for the Lagrangian `A x^m - lambda (||x||_m^m - 1)`
/// restricted to the tangent space of the sphere; reduced Hessian
/// eigenvalues are replaced by their magnitudes (floored).
fn newton_direction(t: &RankOneSum, x: &[f64], lambda: f64, r: &[f64]) -> Option<Vec<f64>> {
    let n = x.len();
    if n < 2 {
        return None;
    }
    let m = t.order();
    let mut w = t.eval_hess(x).ok()?;
    for i in 0..n {
        w[(i, i)] -= lambda * x[i].powi(m as i32 - 2);
    }
    w *= (m - 1) as f64;
    let q = complement_basis(&pow_vec(x, m - 1))?;
    let reduced = q.transpose() * &w * &q;
    let rhs = q.transpose() * nalgebra::DVector::from_column_slice(r);
    let eig = SymmetricEigen::new(reduced);
    let top = eig.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let floor = 1e-13 * top.max(1e-300);
    let mut step = nalgebra::DVector::zeros(n - 1);
    for k in 0..n - 1 {
        let e = eig.eigenvectors.column(k);
        let coef = e.dot(&rhs) / eig.eigenvalues[k].abs().max(floor);
        step -= coef * e;
    }
    let d = q * step;
    if d.iter().all(|v| v.is_finite()) {
        Some(d.iter().copied().collect())
    } else {
        None
    }
}

/// Tries `x + s * d` for `s = step, step/2, ..`; returns the accepted point.
fn line_search(
    t: &RankOneSum,
    x: &[f64],
    value: f64,
    slope: f64,
    d: &[f64],
    step: f64,
    slack: f64,
) -> Option<(Vec<f64>, f64, f64)> {
    let m = t.order();
    let mut s = step;
    for _ in 0..40 {
        let trial: Vec<f64> = x.iter().zip(d).map(|(a, b)| a + s * b).collect();
        if let Some(xn) = normalize(&trial, m) {
            let v = t.eval_poly(&xn).expect("length checked by caller");
            if v <= value + 1e-4 * s * slope + slack {
                return Some((xn, v, s));
            }
        }
        s *= 0.5;
    }
    None
}

/// Projected descent on the m-norm sphere, each step first trying the
/// modified Newton direction and falling back to the gradient.
fn local_run(t: &RankOneSum, x0: &[f64], opts: &EstimatorOptions) -> Option<Run> {
    let m = t.order();
    let mf = m as f64;
    let mut x = normalize(x0, m)?;
    let mut value = t.eval_poly(&x).ok()?;
    let mut grad_step = 1.0;
    for _ in 0..opts.max_iter {
        let r = residual_vec(t, &x, value);
        let res = r.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if res <= opts.kkt_target {
            break;
        }
        let slack = 8.0 * f64::EPSILON * form_scale(t, &x);

        let mut moved = false;
        if let Some(d) = newton_direction(t, &x, value, &r) {
            let slope = mf * dot(&r, &d);
            if slope < 0.0 {
                if let Some((xn, v, _)) = line_search(t, &x, value, slope, &d, 1.0, slack) {
                    x = xn;
                    value = v;
                    moved = true;
                }
            }
        }
        if !moved {
            let d: Vec<f64> = r.iter().map(|v| -v).collect();
            let slope = -mf * dot(&r, &r);
            match line_search(t, &x, value, slope, &d, grad_step, slack) {
                Some((xn, v, s)) => {
                    x = xn;
                    value = v;
                    grad_step = (2.0 * s).min(1e6);
                }
                None => break,
            }
        }
    }
    let x = normalize(&x, m)?;
    let lambda = t.eval_poly(&x).ok()?;
    let residual = kkt_residual(t, lambda, &x).ok()?;
    Some(Run {
        x,
        lambda,
        residual,
    })
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (p, q) in a.iter().zip(b) {
        match p.total_cmp(q) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    Ordering::Equal
}

/// Start vectors: `e_1`, `e`, `(1, 1/2, 1/4, ..)`, then Gaussian directions.
fn start_vector(n: usize, k: usize, seed: u64) -> Vec<f64> {
    match k {
        0 => {
            let mut v = vec![0.0; n];
            v[0] = 1.0;
            v
        }
        1 => vec![1.0; n],
        2 => (0..n).map(|i| 0.5f64.powi(i as i32)).collect(),
        _ => {
            let mut g = rng::stream(seed, k as u64);
            loop {
                let v: Vec<f64> = (0..n).map(|_| g.sample(StandardNormal)).collect();
                if v.iter().any(|c: &f64| *c != 0.0) {
                    return v;
                }
            }
        }
    }
}

pub fn lambda_min_estimate(t: &RankOneSum, starts: usize, seed: u64) -> Result<HEigenPair> {
    lambda_min_estimate_with(
        t,
        &EstimatorOptions {
            starts,
            seed,
            ..EstimatorOptions::default()
        },
    )
}

/// Best converged local minimum of `A x^m` on the m-norm sphere over
/// `opts.starts` runs. Ties on `lambda` go to the lexicographically smaller `x`.
pub fn lambda_min_estimate_with(t: &RankOneSum, opts: &EstimatorOptions) -> Result<HEigenPair> {
    let m = t.order();
    if m % 2 == 1 {
        return Err(Error::OddOrder(m));
    }
    if opts.starts == 0 {
        return Err(Error::InvalidInput("need at least one start".into()));
    }
    let n = t.dim();
    let mut best: Option<Run> = None;
    let mut best_any: Option<Run> = None;
    for k in 0..opts.starts {
        let x0 = start_vector(n, k, opts.seed);
        let Some(mut run) = local_run(t, &x0, opts) else {
            continue;
        };
        fix_sign(&mut run.x);
        let better = |cur: &Option<Run>, run: &Run| match cur {
            None => true,
            Some(b) => match run.lambda.total_cmp(&b.lambda) {
                Ordering::Less => true,
                Ordering::Equal => lex_cmp(&run.x, &b.x) == Ordering::Less,
                Ordering::Greater => false,
            },
        };
        if run.residual <= opts.kkt_accept {
            if better(&best, &run) {
                best = Some(run);
            }
        } else if best_any.as_ref().is_none_or(|b| run.residual < b.residual) {
            best_any = Some(run);
        }
    }
    let to_pair = |r: Run| HEigenPair {
        lambda: r.lambda,
        x: r.x,
        kkt_residual: r.residual,
        starts_used: opts.starts,
        seed: opts.seed,
    };
    match (best, best_any) {
        (Some(b), _) => Ok(to_pair(b)),
        (None, Some(b)) => Err(Error::EstimatorFailure {
            best: Box::new(to_pair(b)),
        }),
        (None, None) => Err(Error::InvalidInput(
            "every start degenerated to the zero vector".into(),
        )),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub n: usize,
    pub lambda_min: f64,
    pub kkt_residual: f64,
    pub starts_used: usize,
    /// Strictly below the previous row; `None` on the first row.
    pub strictly_decreasing: Option<bool>,
    pub x: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaCurve {
    pub m: usize,
    pub alpha: f64,
    pub seed: u64,
    pub rows: Vec<CurveRow>,
}

impl LambdaCurve {
    pub fn is_strictly_decreasing(&self) -> bool {
        self.rows
            .iter()
            .all(|r| r.strictly_decreasing != Some(false))
    }

    /// CSV with columns `n,lambda_min,kkt_residual,starts_used,strictly_decreasing`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::InvalidInput(format!("csv write failed: {e}"));
        w.write_record([
            "n",
            "lambda_min",
            "kkt_residual",
            "starts_used",
            "strictly_decreasing",
        ])
        .map_err(io)?;
        for r in &self.rows {
            w.write_record([
                r.n.to_string(),
                format_real(r.lambda_min),
                format_real(r.kkt_residual),
                r.starts_used.to_string(),
                r.strictly_decreasing
                    .map_or(String::new(), |b| b.to_string()),
            ])
            .map_err(io)?;
        }
        w.flush()
            .map_err(|e| Error::InvalidInput(format!("csv flush failed: {e}")))?;
        Ok(())
    }
}

/// Estimates for `MO(alpha)` over `n = n_from..=n_to`.
pub fn lambda_min_curve(
    m: usize,
    alpha: f64,
    n_from: usize,
    n_to: usize,
    starts: usize,
    seed: u64,
) -> Result<LambdaCurve> {
    if m % 2 == 1 {
        return Err(Error::OddOrder(m));
    }
    if n_from < 1 || n_to < n_from {
        return Err(Error::InvalidInput(format!(
            "invalid dimension range {n_from}:{n_to}"
        )));
    }
    let mut curve = LambdaCurve {
        m,
        alpha,
        seed,
        rows: Vec::new(),
    };
    for n in n_from..=n_to {
        let t = mo_tensor(n, m, alpha)?;
        match lambda_min_estimate(&t, starts, seed) {
            Ok(p) => {
                let strictly_decreasing = curve.rows.last().map(|r| p.lambda < r.lambda_min);
                curve.rows.push(CurveRow {
                    n,
                    lambda_min: p.lambda,
                    kkt_residual: p.kkt_residual,
                    starts_used: p.starts_used,
                    strictly_decreasing,
                    x: p.x,
                });
            }
            Err(e) => {
                return Err(Error::CurveFailure {
                    partial: Box::new(curve),
                    n,
                    reason: e.to_string(),
                })
            }
        }
    }
    Ok(curve)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub w: Vec<f64>,
    /// `MO(alpha) w^m / ||w||_m^m`, an upper bound on the smallest H-eigenvalue.
    pub rayleigh: f64,
}

/// Test vector `w_i = z_i - z_{i+1}`, `w_n = z_n` built from an inner
/// minimizer `z`.
pub fn witness_upper_bound(z: &[f64], m: usize, alpha: f64) -> Result<Witness> {
    if z.first() != Some(&1.0) {
        return Err(Error::InvalidInput("z must start with 1".into()));
    }
    if m % 2 == 1 {
        return Err(Error::OddOrder(m));
    }
    let n = z.len();
    let mut w: Vec<f64> = z.windows(2).map(|p| p[0] - p[1]).collect();
    w.push(z[n - 1]);
    let norm = m_norm(&w, m);
    if norm == 0.0 {
        return Err(Error::InvalidInput("witness vector is zero".into()));
    }
    let value = mo_tensor(n, m, alpha)?.eval_poly(&w)?;
    Ok(Witness {
        rayleigh: value / norm.powi(m as i32),
        w,
    })
}

/// Smallest eigenvalue of the Moler matrix by inverse iteration through
/// its triangular factor.
pub fn moler_lambda_min(n: usize) -> Result<f64> {
    let l = moler_factor(n)?.map(|v| v as f64);
    let lt = l.transpose();
    let mut x = DMatrix::from_element(n, 1, 1.0);
    let mut lambda = f64::INFINITY;
    for _ in 0..1000 {
        let y = l
            .solve_lower_triangular(&x)
            .expect("unit diagonal factor is invertible");
        let v = lt
            .solve_upper_triangular(&y)
            .expect("unit diagonal factor is invertible");
        x = &v / v.norm();
        // Rayleigh quotient through the factor: ||L^T x||^2 / ||x||^2
        let next = (&lt * &x).norm_squared();
        let done = (lambda - next).abs() <= 1e-15 * next;
        lambda = next;
        if done {
            break;
        }
    }
    Ok(lambda)
}
