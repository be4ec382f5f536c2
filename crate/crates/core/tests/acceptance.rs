//! Acceptance suite. Runs as a plain binary so that every criterion prints a
//! PASS/FAIL line even when the test output is captured.

use std::panic::{self, AssertUnwindSafe};
use std::sync::Arc;
use std::time::{Duration, Instant};

use graph_minimax::estimator::{pinsker_equation_lhs, pinsker_plan, sup_risk_over_ellipsoid};
use graph_minimax::graph::{build_grid, build_path};
use graph_minimax::minimax::{
    fano_certificate, kl_link_bound_check, norm_identity_defect, packing_target, vg_packing, FanoModel,
};
use graph_minimax::rng;
use graph_minimax::sim::{run_experiment, Estimator, ExperimentSpec, Family, RateReport, SpectrumCache};
use graph_minimax::sobolev::{ellipsoid_weights, EllipsoidWeights, SobolevSpec};
use graph_minimax::spectral::{eigendecompose, fit_geometry, path_cosine, path_spectrum_closed_form, Spectrum};
use graph_minimax::{Sigmoid, ShrinkagePlan};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

const SEED: u64 = 1;
const PATH_NS: [usize; 5] = [256, 512, 1024, 2048, 4096];
const GRID_NS: [usize; 5] = [256, 529, 1024, 2025, 4096];

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_s: u64) -> Result<(), String> {
    check(elapsed.as_secs_f64() < limit_s as f64, || {
        format!("runtime {:.1} s exceeds {limit_s} s", elapsed.as_secs_f64())
    })
}

fn e(err: graph_minimax::Error) -> String {
    err.to_string()
}

fn spec(family: Family, n_values: &[usize], estimator: Estimator, sigma: f64) -> ExperimentSpec {
    ExperimentSpec {
        family,
        n_values: n_values.to_vec(),
        beta: 1.0,
        q: 1.0,
        sigma,
        estimator,
        reps: 50,
        seed: SEED,
        fill: 1.0,
    }
}

fn slope_of(r: &RateReport) -> Result<(f64, f64), String> {
    let fit = r.fit.ok_or_else(|| format!("no slope: {:?}", r.degenerate))?;
    Ok((fit.slope, fit.stderr.unwrap_or(f64::NAN)))
}

fn closed_form_spectrum() -> Outcome {
    let t = Instant::now();
    let mut worst_l = 0.0f64;
    let mut worst_v = 0.0f64;
    for n in [16, 64, 256] {
        let s = eigendecompose(&build_path(n).map_err(e)?).map_err(e)?;
        let c = path_spectrum_closed_form(n).map_err(e)?;
        for j in 0..n {
            worst_l = worst_l.max((s.lambda(j) - c.lambda(j)).abs());
            let dot: f64 = s.vector(j).iter().zip(c.vector(j)).map(|(a, b)| a * b).sum();
            let sign = dot.signum();
            for (a, b) in s.vector(j).iter().zip(c.vector(j)) {
                worst_v = worst_v.max((a - sign * b).abs());
            }
        }
    }
    check(worst_l <= 1e-8, || format!("eigenvalue error {worst_l:e}"))?;
    check(worst_v <= 1e-8, || format!("eigenvector error {worst_v:e}"))?;
    within(t.elapsed(), 5)?;
    Ok(format!("max |Δλ| = {worst_l:.1e}, max |Δψ| = {worst_v:.1e}, {:.2} s", t.elapsed().as_secs_f64()))
}

fn normalization_identities() -> Outcome {
    let mut worst = 0.0f64;
    for n in [16, 64, 100, 256, 1000] {
        for j in 0..n {
            let norm: f64 = (1..=n).map(|i| path_cosine(n, i, j).powi(2)).sum::<f64>() / n as f64;
            let target = if j == 0 { 1.0 } else { 0.5 };
            worst = worst.max((norm - target).abs());
        }
    }
    check(worst <= 1e-12, || format!("norm identity off by {worst:e}"))?;

    // the largest entry √2 is attained when n has an odd factor
    let mut path_sup = Vec::new();
    for n in [100, 257, 1000] {
        let s = eigendecompose(&build_path(n).map_err(e)?).map_err(e)?;
        let sup = s.sup_norm_bound();
        check((sup - 2f64.sqrt()).abs() <= 1e-9, || format!("path({n}) sup norm {sup}"))?;
        path_sup.push(sup);
    }

    // grid eigenbasis built from products of path cosines
    for m in [5, 10, 30] {
        let g = build_grid(&[m, m]).map_err(e)?;
        let p = path_spectrum_closed_form(m).map_err(e)?;
        let n = m * m;
        let mut pairs: Vec<(usize, usize)> = (0..m).flat_map(|a| (0..m).map(move |b| (a, b))).collect();
        pairs.sort_by(|x, y| (p.lambda(x.0) + p.lambda(x.1)).total_cmp(&(p.lambda(y.0) + p.lambda(y.1))));
        let lambdas = pairs.iter().map(|&(a, b)| p.lambda(a) + p.lambda(b)).collect();
        let basis = pairs
            .iter()
            .flat_map(|&(a, b)| {
                let (va, vb) = (p.vector(a), p.vector(b));
                (0..n).map(move |k| va[k / m] * vb[k % m])
            })
            .collect();
        let s = Spectrum::from_parts(lambdas, basis).map_err(e)?;
        let res = s.max_residual(&g).map_err(e)?;
        check(res < 1e-10, || format!("grid {m}x{m} product basis residual {res:e}"))?;
        let (off, diag) = s.orthonormality_defect();
        check(off < 1e-12 && diag < 1e-12, || format!("grid {m}x{m} basis not orthonormal"))?;
        let sup = s.sup_norm_bound();
        check((sup - 2.0).abs() <= 1e-9, || format!("grid {m}x{m} sup norm {sup}"))?;
    }
    Ok(format!("norm error {worst:.1e}; path sup norms {path_sup:?}; grid sup norm 2"))
}

fn geometry_fit(cache: &SpectrumCache) -> Outcome {
    let t = Instant::now();
    let path = cache.get(&Family::Path, 2048).map_err(e)?.fit_geometry(5, 0.5).map_err(e)?;
    check((0.95..=1.05).contains(&path.r_hat), || format!("path(2048) r_hat = {}", path.r_hat))?;
    let grid = cache.get(&Family::Grid(2), 1024).map_err(e)?.fit_geometry(5, 0.5).map_err(e)?;
    check((1.8..=2.2).contains(&grid.r_hat), || format!("grid 32x32 r_hat = {}", grid.r_hat))?;
    let mut worst = 0.0f64;
    for r in [1.0, 1.4, 2.0, 3.0] {
        for n in [200, 1000] {
            let lambdas: Vec<f64> =
                (0..n).map(|i| if i == 0 { 0.0 } else { 2.5 * (i as f64 / n as f64).powf(2.0 / r) }).collect();
            let fit = fit_geometry(&lambdas, 5, 0.5).map_err(e)?;
            worst = worst.max((fit.r_hat - r).abs());
        }
    }
    check(worst <= 1e-9, || format!("synthetic power law error {worst:e}"))?;
    within(t.elapsed(), 30)?;
    Ok(format!(
        "path(2048) r_hat = {:.4}, grid 32x32 r_hat = {:.4}, synthetic error {worst:.1e}, {:.1} s",
        path.r_hat,
        grid.r_hat,
        t.elapsed().as_secs_f64()
    ))
}

fn regression_rate(cache: &SpectrumCache) -> Outcome {
    let t = Instant::now();
    let path = run_experiment(&spec(Family::Path, &PATH_NS, Estimator::Pinsker, 1.0), cache).map_err(e)?;
    let grid = run_experiment(&spec(Family::Grid(2), &GRID_NS, Estimator::Pinsker, 1.0), cache).map_err(e)?;
    let (ps, pse) = slope_of(&path)?;
    let (gs, gse) = slope_of(&grid)?;
    let detail = format!(
        "path slope {ps:.4} (se {pse:.3}) vs -2/3; grid slope {gs:.4} (se {gse:.3}) vs -1/2; {:.1} s",
        t.elapsed().as_secs_f64()
    );
    check((ps + 2.0 / 3.0).abs() <= 0.12, || format!("path slope out of tolerance: {detail}"))?;
    check((gs + 0.5).abs() <= 0.12, || format!("grid slope out of tolerance: {detail}"))?;
    within(t.elapsed(), 600)?;
    Ok(detail)
}

fn classification_rate(cache: &SpectrumCache) -> Outcome {
    let t = Instant::now();
    let r = run_experiment(&spec(Family::Path, &PATH_NS, Estimator::ClassificationDirect, 0.5), cache).map_err(e)?;
    check(r.warnings.is_empty(), || format!("unexpected warnings {:?}", r.warnings))?;
    let (s, se) = slope_of(&r)?;
    let detail = format!("slope {s:.4} (se {se:.3}) vs -2/3; {:.1} s", t.elapsed().as_secs_f64());
    check((s + 2.0 / 3.0).abs() <= 0.15, || format!("out of tolerance: {detail}"))?;
    within(t.elapsed(), 600)?;
    Ok(detail)
}

fn linear_minimax_oracle() -> Outcome {
    let mut rng = rng::seeded(SEED);
    let mut worst_gap = 0.0f64;
    let mut worst_identity = 0.0f64;
    for _ in 0..20 {
        let mut a = vec![1.0];
        for _ in 0..2 {
            let last = *a.last().unwrap();
            a.push(last + rng.random_range(0.0..3.0));
        }
        let w = EllipsoidWeights::new(a, rng.random_range(0.1..2.0)).map_err(e)?;
        let plan = pinsker_plan(&w, rng.random_range(0.05..1.0), 3).map_err(e)?;
        let sup = sup_risk_over_ellipsoid(&plan.weights, &w, plan.epsilon).map_err(e)?;
        worst_identity = worst_identity.max((sup - plan.risk).abs());
        let mut grid_min = f64::INFINITY;
        for i in 0..=100 {
            for j in 0..=100 {
                for k in 0..=100 {
                    let l = [i as f64 / 100.0, j as f64 / 100.0, k as f64 / 100.0];
                    grid_min = grid_min.min(sup_risk_over_ellipsoid(&l, &w, plan.epsilon).map_err(e)?);
                }
            }
        }
        check(grid_min >= sup - 1e-12, || format!("grid point beats the Pinsker plan: {grid_min} < {sup}"))?;
        worst_gap = worst_gap.max(sup - grid_min);
    }
    check(worst_gap <= 1e-3, || format!("gap to grid minimum {worst_gap:e}"))?;
    check(worst_identity <= 1e-9, || format!("sup risk differs from S by {worst_identity:e}"))?;
    Ok(format!("max gap to grid minimum {worst_gap:.2e}, |sup risk - S| <= {worst_identity:.1e}"))
}

fn pinsker_consistency(cache: &SpectrumCache) -> Outcome {
    let sob = SobolevSpec::new(1.0, 1.0, 1.0).map_err(e)?;
    let mut worst_eq = 0.0f64;
    let mut worst_sat = 0.0f64;
    let check_plan = |w: &EllipsoidWeights, plan: &ShrinkagePlan, eq: &mut f64, sat: &mut f64| -> Result<(), String> {
        let r = w.radius_sq();
        *eq = eq.max((pinsker_equation_lhs(w, plan.epsilon, plan.x) - r).abs() / r);
        let v2 = plan.prior_variances(w).map_err(e)?;
        let s: f64 = v2.iter().zip(w.a()).map(|(v, a)| v * a * a).sum();
        *sat = sat.max((s - r).abs() / r);
        Ok(())
    };
    let mut xs = Vec::new();
    let mut ss = Vec::new();
    for n in [512, 1024, 2048, 4096] {
        let s = cache.get(&Family::Path, n).map_err(e)?;
        let w = ellipsoid_weights(&s, &sob);
        let plan = pinsker_plan(&w, 1.0, n).map_err(e)?;
        check_plan(&w, &plan, &mut worst_eq, &mut worst_sat)?;
        let nf = n as f64;
        xs.push(plan.x * nf.powf(1.0 / 3.0));
        ss.push(plan.risk * nf.powf(2.0 / 3.0));
    }
    let grid_sob = SobolevSpec::new(1.0, 1.0, 2.0).map_err(e)?;
    for n in GRID_NS {
        let s = cache.get(&Family::Grid(2), n).map_err(e)?;
        let w = ellipsoid_weights(&s, &grid_sob);
        let plan = pinsker_plan(&w, 1.0, n).map_err(e)?;
        check_plan(&w, &plan, &mut worst_eq, &mut worst_sat)?;
    }
    check(worst_eq <= 1e-8, || format!("Pinsker equation relative error {worst_eq:e}"))?;
    check(worst_sat <= 1e-8, || format!("prior saturation relative error {worst_sat:e}"))?;
    let drift = |v: &[f64]| {
        let (lo, hi) = v.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
        hi / lo
    };
    let (dx, ds) = (drift(&xs), drift(&ss));
    check(dx <= 2.0, || format!("x n^(1/3) drifts by a factor {dx}"))?;
    check(ds <= 2.0, || format!("S n^(2/3) drifts by a factor {ds}"))?;
    Ok(format!(
        "equation error {worst_eq:.1e}, saturation error {worst_sat:.1e}, drift of x n^(1/3) {dx:.3}, of S n^(2/3) {ds:.3}"
    ))
}

fn fano(cache: &SpectrumCache) -> Outcome {
    let t = Instant::now();
    let sob = SobolevSpec::new(1.0, 1.0, 1.0).map_err(e)?;
    let model = FanoModel::Classification;
    let mut scaled = Vec::new();
    let mut summary = String::new();
    for n in [1024, 4096] {
        let s = cache.get(&Family::Path, n).map_err(e)?;
        let c = fano_certificate(&s, &sob, &model, SEED).map_err(e)?;
        let pack = vg_packing(c.dim, SEED).map_err(e)?;
        let defect = norm_identity_defect(&s, &sob, c.delta, &pack).map_err(e)?;
        check(defect <= 1e-10, || format!("n = {n}: norm identity off by {defect:e}"))?;
        scaled.push(c.separation_min * (n as f64).powf(1.0 / 3.0));
        if n == 4096 {
            check(c.valid, || format!("certificate not valid: {c:?}"))?;
            check(c.m >= packing_target(c.dim), || format!("M = {} below the target", c.m))?;
            check(c.min_hamming >= c.dim.div_ceil(8), || format!("min disagreement {}", c.min_hamming))?;
            check(c.alpha <= 0.5, || format!("alpha = {}", c.alpha))?;
            c.verify(&s, &sob, &model).map_err(e)?;
            summary = format!(
                "n = 4096: N = {}, M = {}, d_min = {}, alpha = {:.4}, Fano bound = {:.4}, identity defect {defect:.1e}",
                c.dim, c.m, c.min_hamming, c.alpha, c.fano_bound
            );
        }
    }
    let ratio = scaled[0].max(scaled[1]) / scaled[0].min(scaled[1]);
    check(ratio <= 2.0, || format!("separation n^(1/3) ratio {ratio}"))?;
    within(t.elapsed(), 120)?;
    Ok(format!("{summary}; separation ratio {ratio:.3}; {:.1} s", t.elapsed().as_secs_f64()))
}

fn link_kl_bound() -> Outcome {
    let mut rng = rng::seeded(SEED);
    let mut violations = 0;
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let v1: Vec<f64> = (0..100).map(|_| StandardNormal.sample(&mut rng)).collect();
        let v2: Vec<f64> = (0..100).map(|_| StandardNormal.sample(&mut rng)).collect();
        let c = kl_link_bound_check(&v1, &v2, &Sigmoid).map_err(e)?;
        // the bound must use c = 1/4
        let direct: f64 = 0.25 * v1.iter().zip(&v2).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        check((c.bound - direct).abs() <= 1e-12 * direct, || "bound does not use c = 1/4".into())?;
        if !c.holds {
            violations += 1;
        }
        worst = worst.max(c.kl / c.bound);
    }
    check(violations == 0, || format!("{violations} violations"))?;
    Ok(format!("0 violations in 1000 pairs, max kl/bound = {worst:.3}"))
}

fn determinism(cache: &SpectrumCache) -> Outcome {
    let t = Instant::now();
    let fresh = SpectrumCache::new();
    let mut compared = 0;
    for (family, ns, est, sigma) in [
        (Family::Path, &PATH_NS, Estimator::Pinsker, 1.0),
        (Family::Path, &PATH_NS, Estimator::ClassificationDirect, 0.5),
        (Family::Grid(2), &GRID_NS, Estimator::Pinsker, 1.0),
    ] {
        let sp = spec(family, ns, est, sigma);
        let a = run_experiment(&sp, cache).map_err(e)?;
        let b = run_experiment(&sp, &fresh).map_err(e)?;
        check(a.results_csv().map_err(e)? == b.results_csv().map_err(e)?, || "results CSV differs".into())?;
        check(a.aggregate_csv().map_err(e)? == b.aggregate_csv().map_err(e)?, || "aggregate CSV differs".into())?;
        compared += 2;
    }
    for n in PATH_NS {
        let a = cache.get(&Family::Path, n).map_err(e)?;
        let b = fresh.get(&Family::Path, n).map_err(e)?;
        check(!Arc::ptr_eq(&a, &b), || "spectra were not recomputed".into())?;
        check(a.eigenvalues_csv() == b.eigenvalues_csv(), || format!("spectrum CSV differs at n = {n}"))?;
        compared += 1;
    }
    let sob = SobolevSpec::new(1.0, 1.0, 1.0).map_err(e)?;
    let a = fano_certificate(&*cache.get(&Family::Path, 4096).map_err(e)?, &sob, &FanoModel::Classification, SEED)
        .map_err(e)?;
    let b = fano_certificate(&*fresh.get(&Family::Path, 4096).map_err(e)?, &sob, &FanoModel::Classification, SEED)
        .map_err(e)?;
    check(a.to_csv() == b.to_csv(), || "certificate CSV differs".into())?;
    compared += 1;
    Ok(format!("{compared} CSVs bit-identical across independent reruns, {:.1} s", t.elapsed().as_secs_f64()))
}

fn main() {
    let cache = SpectrumCache::new();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("closed-form path spectrum", Box::new(closed_form_spectrum)),
        ("normalisation identities", Box::new(normalization_identities)),
        ("geometry fit", Box::new(|| geometry_fit(&cache))),
        ("regression rate", Box::new(|| regression_rate(&cache))),
        ("classification rate", Box::new(|| classification_rate(&cache))),
        ("linear minimax oracle", Box::new(linear_minimax_oracle)),
        ("Pinsker equation consistency", Box::new(|| pinsker_consistency(&cache))),
        ("Fano certificate", Box::new(|| fano(&cache))),
        ("link KL bound", Box::new(link_kl_bound)),
        ("determinism", Box::new(|| determinism(&cache))),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let outcome = match panic::catch_unwind(AssertUnwindSafe(f)) {
            Ok(o) => o,
            Err(p) => Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into())),
        };
        match outcome {
            Ok(detail) => println!("acceptance {:>2} PASS {name}: {detail}", k + 1),
            Err(why) => {
                failed += 1;
                println!("acceptance {:>2} FAIL {name}: {why}", k + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
