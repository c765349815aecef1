//! Browser bindings for the demo page in `www/`.
//!
//! Each exported function returns a JSON string. The plain Rust versions
//! (`*_json`) carry the logic and are what the native tests exercise.

use motensor::oracle::{psd_scan, PsdScanOptions};
use motensor::supmo::inner_minimize;
use motensor::{
    alpha_star, heigen, m_norm, mo_tensor, AlphaStarOptions, Error, HomogeneousForm, LambdaCurve,
    Result,
};
use serde::Serialize;
use wasm_bindgen::prelude::*;

const MAX_DIMS: usize = 64;
const MAX_CURVE_DIMS: usize = 16;
const MAX_STARTS: usize = 256;
const MAX_SAMPLES: usize = 200_000;

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string(value).map_err(|e| Error::InvalidInput(e.to_string()))
}

#[derive(Serialize)]
struct FixedPointView {
    order: usize,
    alpha_star: f64,
    beta_star: f64,
    converged: bool,
    stages: Vec<Stage>,
    /// `f_{n,m}(beta)` on a grid, at the largest visited `n`.
    n: usize,
    betas: Vec<f64>,
    f: Vec<f64>,
}

#[derive(Serialize)]
struct Stage {
    n: usize,
    beta: f64,
}

pub fn fixed_point_json(order: usize, eps: f64, samples: usize) -> Result<String> {
    if !(2..=64).contains(&samples) {
        return Err(Error::InvalidInput("samples must lie in 2..=64".into()));
    }
    let opts = AlphaStarOptions {
        epsilon: eps,
        ..AlphaStarOptions::default()
    };
    let trace = match alpha_star(order, &opts) {
        Ok(t) => t,
        Err(Error::OuterBudget { trace }) => *trace,
        Err(e) => return Err(e),
    };
    let n = trace.per_n.last().map_or(2, |s| s.n).min(MAX_DIMS);
    let betas: Vec<f64> = (0..samples)
        .map(|k| k as f64 / (samples - 1) as f64)
        .collect();
    let f = betas
        .iter()
        .map(|&b| inner_minimize(n, order, b, 1e-10).map(|r| r.value))
        .collect::<Result<Vec<_>>>()?;
    to_json(&FixedPointView {
        order,
        alpha_star: trace.alpha_star,
        beta_star: trace.beta_star,
        converged: trace.converged,
        stages: trace
            .per_n
            .iter()
            .map(|s| Stage {
                n: s.n,
                beta: s.beta_n,
            })
            .collect(),
        n,
        betas,
        f,
    })
}

/// `alpha` is NaN for the Sup-MO value.
pub fn lambda_curve_json(
    order: usize,
    alpha: f64,
    n_max: usize,
    starts: usize,
    seed: u64,
) -> Result<String> {
    if n_max > MAX_CURVE_DIMS || starts > MAX_STARTS {
        return Err(Error::InvalidInput(format!(
            "demo limits: n <= {MAX_CURVE_DIMS}, starts <= {MAX_STARTS}"
        )));
    }
    let alpha = if alpha.is_nan() {
        alpha_star(order, &AlphaStarOptions::default())?.alpha_star
    } else {
        alpha
    };
    let curve: LambdaCurve = match heigen::lambda_min_curve(order, alpha, 1, n_max, starts, seed) {
        Ok(c) => c,
        Err(Error::CurveFailure { partial, .. }) => *partial,
        Err(e) => return Err(e),
    };
    to_json(&curve)
}

#[derive(Serialize)]
struct Probe {
    min_value: f64,
    argmin: Vec<f64>,
    disproves_psd: bool,
    /// For `n = 2`: `(angle, A x^m)` around the m-norm unit circle.
    profile: Vec<(f64, f64)>,
}

pub fn psd_probe_json(
    n: usize,
    order: usize,
    alpha: f64,
    samples: usize,
    seed: u64,
) -> Result<String> {
    if n > MAX_DIMS || samples > MAX_SAMPLES {
        return Err(Error::InvalidInput(format!(
            "demo limits: n <= {MAX_DIMS}, samples <= {MAX_SAMPLES}"
        )));
    }
    let t = mo_tensor(n, order, alpha)?;
    let r = psd_scan(
        &t,
        &PsdScanOptions {
            samples,
            seed,
            ..PsdScanOptions::default()
        },
    )?;
    let profile = if n == 2 {
        (0..360)
            .map(|k| {
                let theta = k as f64 * std::f64::consts::PI / 180.0;
                let v = [theta.cos(), theta.sin()];
                let s = m_norm(&v, order);
                let x = [v[0] / s, v[1] / s];
                t.form(&x).map(|value| (theta, value))
            })
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    to_json(&Probe {
        disproves_psd: r.disproves_psd(),
        min_value: r.min_value,
        argmin: r.argmin,
        profile,
    })
}

fn js(r: Result<String>) -> std::result::Result<String, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = fixedPoint)]
pub fn fixed_point(order: usize, eps: f64, samples: usize) -> std::result::Result<String, JsError> {
    js(fixed_point_json(order, eps, samples))
}

#[wasm_bindgen(js_name = lambdaCurve)]
pub fn lambda_curve(
    order: usize,
    alpha: f64,
    n_max: usize,
    starts: usize,
    seed: u32,
) -> std::result::Result<String, JsError> {
    js(lambda_curve_json(order, alpha, n_max, starts, seed as u64))
}

#[wasm_bindgen(js_name = psdProbe)]
pub fn psd_probe(
    n: usize,
    order: usize,
    alpha: f64,
    samples: usize,
    seed: u32,
) -> std::result::Result<String, JsError> {
    js(psd_probe_json(n, order, alpha, samples, seed as u64))
}
