//! Brute-force ground truth for small instances.
//!
//! Nothing here goes through the rank-one evaluation path: contractions are
//! summed over the dense entries, and the 2-dimensional eigenpair scan finds
//! every H-eigenvector by root bracketing on a one-parameter slice.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dense::DenseSymmetricTensor;
use crate::error::{Error, Result};
use crate::heigen::{fix_sign, HEigenPair};
use crate::rng;
use crate::tensor::{m_norm, HomogeneousForm};

/// `A x^m` by full contraction of the dense entries.
pub fn dense_eval(t: &DenseSymmetricTensor<f64>, x: &[f64]) -> Result<f64> {
    t.contract(x)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsdScanOptions {
    pub samples: usize,
    pub seed: u64,
    /// Angular grid resolution per coordinate, used for `n <= 3`.
    pub grid: usize,
}

impl Default for PsdScanOptions {
    fn default() -> Self {
        Self {
            samples: 20_000,
            seed: 42,
            grid: 720,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsdScanResult {
    /// Smallest `A x^m` found with `||x||_m = 1`. Negative disproves PSD.
    pub min_value: f64,
    pub argmin: Vec<f64>,
    pub evaluations: usize,
}

impl PsdScanResult {
    pub fn disproves_psd(&self) -> bool {
        self.min_value < 0.0
    }
}

/// Deterministic probes: unit vectors, `e`, `(1, -1, 0, ..)` and
/// `(1, 1/2, 1/4, ..)`.
fn fixed_probes(n: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for i in 0..n {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        out.push(v);
    }
    out.push(vec![1.0; n]);
    if n >= 2 {
        let mut v = vec![0.0; n];
        v[0] = 1.0;
        v[1] = -1.0;
        out.push(v);
    }
    out.push((0..n).map(|i| 0.5f64.powi(i as i32)).collect());
    out
}

fn grid_probes(n: usize, grid: usize) -> Vec<Vec<f64>> {
    let pi = std::f64::consts::PI;
    match n {
        2 => (0..grid)
            .map(|k| {
                let th = pi * k as f64 / grid as f64;
                vec![th.cos(), th.sin()]
            })
            .collect(),
        3 => {
            let mut out = Vec::with_capacity(grid * grid);
            for a in 0..grid {
                let th = pi * a as f64 / grid as f64;
                for b in 0..grid {
                    let ph = pi * b as f64 / (grid.max(2) - 1) as f64;
                    out.push(vec![ph.sin() * th.cos(), ph.sin() * th.sin(), ph.cos()]);
                }
            }
            out
        }
        _ => Vec::new(),
    }
}

/// Minimum of `A x^m` over the m-norm sphere, sampled: fixed probes, an
/// angular grid for `n <= 3`, and `samples` random directions.
pub fn psd_scan<T: HomogeneousForm>(t: &T, opts: &PsdScanOptions) -> Result<PsdScanResult> {
    let m = t.order();
    if m % 2 == 1 {
        return Err(Error::OddOrder(m));
    }
    let n = t.dim();
    let mut best = PsdScanResult {
        min_value: f64::INFINITY,
        argmin: Vec::new(),
        evaluations: 0,
    };
    let mut consider = |v: &[f64]| -> Result<()> {
        let s = m_norm(v, m);
        if s == 0.0 {
            return Ok(());
        }
        let x: Vec<f64> = v.iter().map(|c| c / s).collect();
        let value = t.form(&x)?;
        best.evaluations += 1;
        if value < best.min_value {
            best.min_value = value;
            best.argmin = x;
        }
        Ok(())
    };
    for v in fixed_probes(n) {
        consider(&v)?;
    }
    for v in grid_probes(n, opts.grid) {
        consider(&v)?;
    }
    let mut g = rng::stream(opts.seed, 0);
    for _ in 0..opts.samples {
        let v: Vec<f64> = (0..n).map(|_| g.sample(StandardNormal)).collect();
        let e = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if e == 0.0 {
            continue;
        }
        let unit: Vec<f64> = v.iter().map(|c| c / e).collect();
        consider(&unit)?;
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanOptions {
    pub grid_points: usize,
    /// `t` runs over `[-t_range, t_range]`; larger roots come from the
    /// reciprocal slice `x = (s, 1)`.
    pub t_range: f64,
    pub bisect_tol: f64,
    pub kkt_tol: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            grid_points: 4096,
            t_range: 50.0,
            bisect_tol: 1e-13,
            kkt_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    /// Sorted by `lambda` ascending.
    pub pairs: Vec<HEigenPair>,
    pub grid_size: usize,
    pub refined_tolerance: f64,
    pub warnings: Vec<String>,
}

impl ScanReport {
    pub fn smallest(&self) -> Option<&HEigenPair> {
        self.pairs.first()
    }
}

fn dense_residual(t: &DenseSymmetricTensor<f64>, lambda: f64, x: &[f64]) -> f64 {
    let m = t.order() as i32;
    let ax = t.contract_vec(x).expect("dimension 2");
    ax.iter().zip(x).fold(0.0f64, |a, (p, v)| {
        a.max((p - lambda * v.powi(m - 1)).abs())
    })
}

/// Which slice a root lives on.
#[derive(Clone, Copy)]
enum Slice {
    /// `x = (1, t)`
    Forward,
    /// `x = (s, 1)`
    Reciprocal,
}

impl Slice {
    fn point(self, p: f64) -> [f64; 2] {
        match self {
            Slice::Forward => [1.0, p],
            Slice::Reciprocal => [p, 1.0],
        }
    }

    /// Zero exactly at H-eigenvectors on the slice.
    fn residual(self, t: &DenseSymmetricTensor<f64>, p: f64) -> f64 {
        self.residual_terms(t, p).0
    }

    /// The residual and the magnitude of the two terms it cancels.
    fn residual_terms(self, t: &DenseSymmetricTensor<f64>, p: f64) -> (f64, f64) {
        let m = t.order() as i32;
        let ax = t.contract_vec(&self.point(p)).expect("dimension 2");
        let (own, other) = match self {
            Slice::Forward => (ax[1], ax[0]),
            Slice::Reciprocal => (ax[0], ax[1]),
        };
        let shifted = p.powi(m - 1) * other;
        (own - shifted, own.abs() + shifted.abs())
    }

    fn lambda(self, t: &DenseSymmetricTensor<f64>, p: f64) -> f64 {
        let ax = t.contract_vec(&self.point(p)).expect("dimension 2");
        match self {
            Slice::Forward => ax[0],
            Slice::Reciprocal => ax[1],
        }
    }
}

fn bisect(t: &DenseSymmetricTensor<f64>, slice: Slice, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let mut fa = slice.residual(t, a);
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        let mid = 0.5 * (a + b);
        if mid <= a.min(b) || mid >= a.max(b) {
            break;
        }
        let fm = slice.residual(t, mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

fn scan_slice(
    t: &DenseSymmetricTensor<f64>,
    slice: Slice,
    points: &[f64],
    opts: &ScanOptions,
    roots: &mut Vec<(Slice, f64)>,
    warnings: &mut Vec<String>,
) {
    let terms: Vec<(f64, f64)> = points.iter().map(|&p| slice.residual_terms(t, p)).collect();
    let values: Vec<f64> = terms.iter().map(|v| v.0).collect();
    let zero_at: Vec<bool> = terms
        .iter()
        .map(|&(r, size)| r.abs() <= 1e-14 * size)
        .collect();
    let mut last_cell: Option<usize> = None;
    let mut in_zero_run = false;
    for k in 0..points.len() {
        if zero_at[k] {
            if !in_zero_run {
                roots.push((slice, points[k]));
            }
            in_zero_run = true;
            continue;
        }
        in_zero_run = false;
        if k + 1 < points.len() && !zero_at[k + 1] && (values[k] < 0.0) != (values[k + 1] < 0.0) {
            if last_cell == Some(k.wrapping_sub(1)) {
                warnings.push(format!(
                    "sign changes in adjacent cells near {:.6}; grid may be too coarse",
                    points[k]
                ));
            }
            last_cell = Some(k);
            roots.push((
                slice,
                bisect(t, slice, points[k], points[k + 1], opts.bisect_tol),
            ));
        }
    }
}

/// All H-eigenpairs of an order-`m`, dimension-2 tensor that the grid
/// resolves, normalized to `||x||_m = 1`.
pub fn h_eigen_scan_2d(t: &DenseSymmetricTensor<f64>, opts: &ScanOptions) -> Result<ScanReport> {
    if t.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: t.dim(),
        });
    }
    let m = t.order();
    if m % 2 == 1 {
        return Err(Error::OddOrder(m));
    }
    if opts.grid_points < 2 || opts.t_range.is_nan() || opts.t_range <= 0.0 {
        return Err(Error::InvalidInput(
            "grid needs >= 2 points and a positive range".into(),
        ));
    }
    let g = opts.grid_points;
    let forward: Vec<f64> = (0..g)
        .map(|k| -opts.t_range + 2.0 * opts.t_range * k as f64 / (g - 1) as f64)
        .collect();
    // |t| >= t_range  <=>  |s| <= 1 / t_range; s = 0 is the x = (0, 1) candidate
    let s_max = 1.0 / opts.t_range;
    let reciprocal: Vec<f64> = (0..g)
        .map(|k| -s_max + 2.0 * s_max * k as f64 / (g - 1) as f64)
        .chain(std::iter::once(0.0))
        .collect();

    let mut roots = Vec::new();
    let mut warnings = Vec::new();
    scan_slice(t, Slice::Forward, &forward, opts, &mut roots, &mut warnings);
    scan_slice(
        t,
        Slice::Reciprocal,
        &reciprocal,
        opts,
        &mut roots,
        &mut warnings,
    );
    // explicit check for x = (0, 1), which a sign-change scan can step over
    roots.push((Slice::Reciprocal, 0.0));

    let mut pairs: Vec<HEigenPair> = Vec::new();
    for (slice, p) in roots {
        let lambda = slice.lambda(t, p);
        let raw = slice.point(p);
        let s = m_norm(&raw, m);
        let mut x = vec![raw[0] / s, raw[1] / s];
        fix_sign(&mut x);
        let residual = dense_residual(t, lambda, &x);
        if residual > opts.kkt_tol {
            // the (0, 1) candidate is only kept when it is an eigenvector
            if p != 0.0 || !matches!(slice, Slice::Reciprocal) {
                warnings.push(format!(
                    "root near {p:.6} left residual {residual:.3e} after refinement"
                ));
            }
            continue;
        }
        let duplicate = pairs
            .iter()
            .any(|q| (q.x[0] - x[0]).abs() < 1e-8 && (q.x[1] - x[1]).abs() < 1e-8);
        if !duplicate {
            pairs.push(HEigenPair {
                lambda,
                x,
                kkt_residual: residual,
                starts_used: 0,
                seed: 0,
            });
        }
    }
    pairs.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    Ok(ScanReport {
        pairs,
        grid_size: g,
        refined_tolerance: opts.kkt_tol,
        warnings,
    })
}
