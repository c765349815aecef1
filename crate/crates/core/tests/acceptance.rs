//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::time::{Duration, Instant};

use motensor::heigen::witness_upper_bound;
use motensor::oracle::{dense_eval, h_eigen_scan_2d, psd_scan, PsdScanOptions, ScanOptions};
use motensor::{
    alpha_star, cp_certificate, essential_mo, f_monotonicity_probe, g_grad_hess, g_value,
    inner_minimize, lambda_min_curve, m_tensor, mo_tensor, moler_factor, moler_lambda_min,
    moler_matrix, n_tensor, sub_mo_witness_value, AlphaStarOptions, FamilySpec, RankOneSum,
    RankOneTerm, DEFAULT_DENSE_BUDGET,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const B: u64 = DEFAULT_DENSE_BUDGET;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn sup_alpha(m: usize) -> Result<(f64, Duration, motensor::BetaSolveTrace), String> {
    let start = Instant::now();
    let trace = alpha_star(m, &AlphaStarOptions::default()).map_err(|e| e.to_string())?;
    Ok((trace.alpha_star, start.elapsed(), trace))
}

fn alpha_reproduction() -> Outcome {
    let mut notes = Vec::new();
    for (m, want) in [(4, 1.1429), (6, 1.0323), (8, 1.0079)] {
        let (a, took, _) = sup_alpha(m)?;
        ensure((a - want).abs() <= 2e-3, || format!("m={m}: {a} vs {want}"))?;
        ensure(took <= Duration::from_secs(60), || {
            format!("m={m}: {took:?}")
        })?;
        notes.push(format!("m={m} {a:.6} in {:.2}s", took.as_secs_f64()));
    }
    Ok(notes.join(", "))
}

fn order_two_boundary() -> Outcome {
    let (a, _, trace) = sup_alpha(2)?;
    ensure(a == 2.0, || format!("alpha*(2) = {a}"))?;
    for s in &trace.per_n {
        let f1 = inner_minimize(s.n, 2, 1.0, 1e-12)
            .map_err(|e| e.to_string())?
            .value;
        ensure(f1 >= 1.0 && s.f_value >= 1.0, || {
            format!("n={}: f(1) = {f1}, recorded {}", s.n, s.f_value)
        })?;
        ensure(s.boundary, || format!("n={} not clamped", s.n))?;
    }
    Ok(format!("alpha*(2) = 2 over {} stages", trace.per_n.len()))
}

fn monotonicity() -> Outcome {
    let betas = [0.05, 0.1, 0.14, 0.2];
    let table = f_monotonicity_probe(4, &betas, 17).map_err(|e| e.to_string())?;
    ensure(table.violations.is_empty(), || {
        format!("{:?}", table.violations)
    })?;
    for n in 2..=16 {
        for &b in &betas {
            let here = table.value(n, b).ok_or("missing row")?;
            let next = table.value(n + 1, b).ok_or("missing row")?;
            ensure(next <= here + 1e-9, || {
                format!("n={n} beta={b}: {next} > {here}")
            })?;
        }
        for w in betas.windows(2) {
            let lo = table.value(n, w[0]).ok_or("missing row")?;
            let hi = table.value(n, w[1]).ok_or("missing row")?;
            ensure(lo <= hi + 1e-9, || format!("n={n}: f decreases in beta"))?;
        }
    }
    let mut stages = 0;
    for m in [4, 6, 8] {
        let (_, _, trace) = sup_alpha(m)?;
        for w in trace.per_n.windows(2) {
            ensure(w[1].beta_n <= w[0].beta_n + 1e-12, || {
                format!("m={m}: beta rises from n={} to n={}", w[0].n, w[1].n)
            })?;
        }
        stages += trace.per_n.len();
    }
    Ok(format!(
        "{} probe rows, {stages} schedule stages",
        table.rows.len()
    ))
}

fn anchors() -> Outcome {
    for m in [4, 6, 8] {
        for n in [2, 3, 7] {
            let mut z = vec![0.0; n];
            z[0] = 1.0;
            z[1] = 0.5;
            let v = g_value(&z, 1.0, m).map_err(|e| e.to_string())?;
            let want = 5.0 / 2f64.powi(m as i32);
            ensure((v - want).abs() <= 1e-12, || {
                format!("g anchor m={m} n={n}: {v}")
            })?;
        }
    }
    let f = inner_minimize(2, 2, 1.0, 1e-12)
        .map_err(|e| e.to_string())?
        .value;
    ensure((f - 1.2).abs() <= 1e-9, || format!("f_(2,2)(1) = {f}"))?;
    for m in [2, 4, 6, 8] {
        for b in [0.0, 0.1, 0.5, 1.0] {
            let f = inner_minimize(1, m, b, 1e-12)
                .map_err(|e| e.to_string())?
                .value;
            ensure(f == 1.0 + b, || format!("f_(1,{m})({b}) = {f}"))?;
        }
    }
    Ok(format!("f_(2,2)(1) = {f:.12}"))
}

fn moler_suite() -> Outcome {
    for n in 1..=30 {
        let l = moler_factor(n).map_err(|e| e.to_string())?;
        let a = moler_matrix(n)
            .map_err(|e| e.to_string())?
            .to_matrix()
            .map_err(|e| e.to_string())?;
        ensure(&l * l.transpose() == a, || {
            format!("L L^T differs at n={n}")
        })?;
    }
    let mut prev = f64::INFINITY;
    for n in 1..=12 {
        let lam = moler_lambda_min(n).map_err(|e| e.to_string())?;
        let bound = 3.0 * n as f64 / (4f64.powi(n as i32) - 1.0);
        ensure(lam > 0.0 && lam <= bound, || {
            format!("n={n}: {lam} vs bound {bound}")
        })?;
        ensure(lam < prev, || format!("not decreasing at n={n}"))?;
        prev = lam;
    }
    let two = moler_lambda_min(2).map_err(|e| e.to_string())?;
    // root of t^2 - 3t + 1
    let want = (3.0 - 5f64.sqrt()) / 2.0;
    ensure((two - want).abs() <= 1e-10, || format!("n=2: {two}"))?;
    Ok(format!("lambda_min(12) = {prev:.3e}"))
}

fn cp_identities() -> Outcome {
    for (n, m) in [(2, 4), (3, 4), (4, 4), (2, 6), (3, 6), (5, 3)] {
        let e = essential_mo(n, m, B).map_err(|e| e.to_string())?;
        let dense = e.dense.map_err(|e| e.to_string())?;
        let cert = e
            .certificate
            .to_rank_one()
            .and_then(|t| t.materialize_exact(B))
            .map_err(|e| e.to_string())?;
        let diff = cert.max_abs_diff_exact(&dense).ok_or("shape mismatch")?;
        ensure(diff == 0 && e.certificate.is_nonnegative(), || {
            format!("(n,m)=({n},{m}): diff {diff}")
        })?;
    }
    let mut cases = 0;
    for n in 1..=6 {
        for m in 2..=6 {
            let pairs = [
                (m_tensor(n, m), FamilySpec::m_tensor(n, m)),
                (n_tensor(n, m), FamilySpec::n_tensor(n, m)),
            ];
            for (ours, spec) in pairs {
                let ours = ours
                    .and_then(|t| t.materialize_exact(B))
                    .map_err(|e| e.to_string())?;
                let reference = spec.dense_exact(B).map_err(|e| e.to_string())?;
                ensure(ours == reference, || format!("{spec:?} differs"))?;
                cases += 1;
            }
        }
    }
    Ok(format!("6 essential instances, {cases} M/N identities"))
}

fn witness_identity() -> Outcome {
    let mut g = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for (n, m) in [(2, 4), (5, 6)] {
        for _ in 0..20 {
            let a: f64 = g.random_range(-1.0..=1.0);
            let v = sub_mo_witness_value(n, m, a).map_err(|e| e.to_string())?;
            worst = worst.max((v - (1.0 + 2.0 * a)).abs());
        }
    }
    ensure(worst <= 1e-12, || format!("max deviation {worst:e}"))?;
    Ok(format!("max deviation {worst:.1e}"))
}

fn lambda_curve() -> Outcome {
    let (alpha, _, trace) = sup_alpha(4)?;
    let curve = lambda_min_curve(4, alpha, 2, 8, 64, 42).map_err(|e| e.to_string())?;
    let first = curve.rows[0].lambda_min;
    for r in &curve.rows {
        ensure(r.lambda_min > 0.0 && r.lambda_min <= first, || {
            format!("n={}: {}", r.n, r.lambda_min)
        })?;
        ensure(r.kkt_residual <= 1e-8, || {
            format!("n={}: kkt {:e}", r.n, r.kkt_residual)
        })?;
    }
    ensure(curve.is_strictly_decreasing(), || {
        let v: Vec<f64> = curve.rows.iter().map(|r| r.lambda_min).collect();
        format!("not strictly decreasing: {v:?}")
    })?;

    let dense = mo_tensor(2, 4, alpha)
        .and_then(|t| t.materialize())
        .map_err(|e| e.to_string())?;
    let report = h_eigen_scan_2d(&dense, &ScanOptions::default()).map_err(|e| e.to_string())?;
    let scanned = report.smallest().ok_or("scan found no pair")?.lambda;
    ensure((scanned - first).abs() <= 1e-6, || {
        format!("scan {scanned} vs {first}")
    })?;

    let mut first_below = None;
    let mut at_32 = f64::NAN;
    for n in 2..=32 {
        let z = inner_minimize(n, 4, trace.beta_star, 1e-12)
            .map_err(|e| e.to_string())?
            .minimizer_z;
        let w = witness_upper_bound(&z, 4, alpha).map_err(|e| e.to_string())?;
        if w.rayleigh < 1e-2 && first_below.is_none() {
            first_below = Some(n);
        }
        at_32 = w.rayleigh;
    }
    let n = first_below.ok_or("witness bound stays above 1e-2 through n = 32")?;
    ensure(at_32 < 1e-2, || format!("witness at n=32: {at_32:e}"))?;
    let last = curve.rows.last().map_or(f64::NAN, |r| r.lambda_min);
    Ok(format!(
        "lambda_min(8) = {last:.3e}, witness below 1e-2 from n={n}, {at_32:.2e} at n=32"
    ))
}

fn random_structured(g: &mut ChaCha8Rng) -> RankOneSum {
    let n = g.random_range(1..=5);
    let m = g.random_range(2..=6);
    let k = g.random_range(1..=6);
    let terms = (0..k)
        .map(|_| RankOneTerm {
            weight: g.random_range(-2.0..2.0),
            vector: (0..n).map(|_| g.random_range(-1.5..1.5)).collect(),
        })
        .collect();
    RankOneSum::new(m, n, terms).expect("valid shape")
}

fn oracle_equivalence() -> Outcome {
    let mut g = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for _ in 0..500 {
        let t = random_structured(&mut g);
        let x: Vec<f64> = (0..t.dim()).map(|_| g.random_range(-1.0..1.0)).collect();
        let dense = t.materialize().map_err(|e| e.to_string())?;
        let a = t.eval_poly(&x).map_err(|e| e.to_string())?;
        let b = dense_eval(&dense, &x).map_err(|e| e.to_string())?;
        let scale = t
            .terms()
            .iter()
            .map(|k| {
                k.weight.abs()
                    * k.vector
                        .iter()
                        .zip(&x)
                        .map(|(u, v)| u * v)
                        .sum::<f64>()
                        .abs()
                        .powi(t.order() as i32)
            })
            .sum::<f64>()
            .max(1.0);
        worst = worst.max((a - b).abs() / scale);
    }
    ensure(worst <= 1e-10, || format!("poly relative gap {worst:e}"))?;

    let rel = |fd: f64, exact: f64| (fd - exact).abs() / exact.abs().max(1.0);
    let mut worst_fd = 0.0f64;
    for _ in 0..100 {
        let t = random_structured(&mut g);
        let x: Vec<f64> = (0..t.dim()).map(|_| g.random_range(-1.0..1.0)).collect();
        let grad = t.eval_grad(&x).map_err(|e| e.to_string())?;
        let mf = t.order() as f64;
        for i in 0..t.dim() {
            let h = 1e-5;
            let mut p = x.clone();
            let mut q = x.clone();
            p[i] += h;
            q[i] -= h;
            let fd = (t.eval_poly(&p).unwrap() - t.eval_poly(&q).unwrap()) / (2.0 * h);
            worst_fd = worst_fd.max(rel(fd, mf * grad[i]));
        }

        let n = g.random_range(2..=8);
        let m = 2 * g.random_range(1..=4);
        let beta = g.random_range(0.0..=1.0);
        let mut z: Vec<f64> = (0..n).map(|_| g.random_range(-1.0..1.0)).collect();
        z[0] = 1.0;
        let gh = g_grad_hess(&z, beta, m).map_err(|e| e.to_string())?;
        for i in 1..n {
            let h = 1e-5;
            let mut p = z.clone();
            let mut q = z.clone();
            p[i] += h;
            q[i] -= h;
            let fd = (g_value(&p, beta, m).unwrap() - g_value(&q, beta, m).unwrap()) / (2.0 * h);
            worst_fd = worst_fd.max(rel(fd, gh.grad[i - 1]));
        }
    }
    ensure(worst_fd <= 1e-6, || {
        format!("finite-difference gap {worst_fd:e}")
    })?;
    Ok(format!("poly gap {worst:.1e}, gradient gap {worst_fd:.1e}"))
}

fn psd_probing() -> Outcome {
    let opts = PsdScanOptions::default();
    let mut lowest = f64::INFINITY;
    for n in 1..=4 {
        for m in [2, 4, 6] {
            for alpha in [0.0, 0.25, 0.5, 0.75, 1.0] {
                let cert = cp_certificate(n, m, alpha)
                    .map_err(|e| e.to_string())?
                    .ok_or("missing certificate")?;
                let t = cert.to_rank_one().map_err(|e| e.to_string())?;
                let r = psd_scan(&t, &opts).map_err(|e| e.to_string())?;
                ensure(r.min_value >= -1e-10, || {
                    format!("n={n} m={m} alpha={alpha}: {}", r.min_value)
                })?;
                lowest = lowest.min(r.min_value);
            }
        }
    }
    let neg = psd_scan(&mo_tensor(2, 4, -0.6).map_err(|e| e.to_string())?, &opts)
        .map_err(|e| e.to_string())?;
    ensure(neg.disproves_psd(), || {
        format!("MO(-0.6): {}", neg.min_value)
    })?;

    let bound = 48.0 / 15.0 - 1.5f64.powi(4);
    for n in 2..=10 {
        let t = mo_tensor(n, 4, 2.0).map_err(|e| e.to_string())?;
        let x: Vec<f64> = (0..n).map(|i| 0.5f64.powi(i as i32)).collect();
        let v = t.eval_poly(&x).map_err(|e| e.to_string())?;
        ensure(v <= bound + 1e-12, || {
            format!("M - 2N at n={n}: {v} > {bound}")
        })?;
        let r = psd_scan(&t, &opts).map_err(|e| e.to_string())?;
        ensure(r.disproves_psd(), || {
            format!("M - 2N at n={n}: scan {}", r.min_value)
        })?;
    }
    Ok(format!(
        "certified min {lowest:.3e}, MO(-0.6) min {:.4}",
        neg.min_value
    ))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("alpha-star reproduction", alpha_reproduction),
        ("order-2 boundary", order_two_boundary),
        ("monotonicity", monotonicity),
        ("anchor values", anchors),
        ("Moler suite", moler_suite),
        ("CP identities", cp_identities),
        ("witness identity", witness_identity),
        ("lambda_min curve", lambda_curve),
        ("oracle equivalence", oracle_equivalence),
        ("PSD probing", psd_probing),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("[PASS] {:>2} {name}: {detail} ({secs:.2}s)", i + 1),
            Err(why) => {
                failed += 1;
                println!("[FAIL] {:>2} {name}: {why} ({secs:.2}s)", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
