//! Seeded Monte Carlo experiments that recover the rate `n^{-2β/(2β+r)}`.
//!
//! Each replicate draws a function on the shell of the Sobolev ball, simulates
//! observations, applies an estimator and records `‖f̂ − f‖²_n`. Replicate
//! seeds are derived from `(master seed, n, rep)`, so results do not depend on
//! thread scheduling.

use std::collections::HashMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::{Arc, Mutex};

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimator::{
    estimate_classification, pinsker_plan, projection_cutoff, shrink, sup_risk_over_ellipsoid, ClassificationMode,
    LinkFunction, ShrinkagePlan, Sigmoid,
};
use crate::format::sig;
use crate::graph::{build_grid, build_path, build_small_world, build_torus, Graph, GraphSpec};
use crate::rng::{self, derive_seed};
use crate::sobolev::{ellipsoid_weights, sample_ball_coeffs, EllipsoidWeights, SobolevSpec};
use crate::spectral::{eigendecompose, ols, Spectrum, DEFAULT_I0, DEFAULT_KAPPA};

/// Mean risks at or below this are treated as zero.
pub const ZERO_RISK_TOL: f64 = 1e-12;

pub const RESULTS_CSV_HEADER: [&str; 10] = ["family", "n", "beta", "Q", "sigma", "r_used", "estimator", "rep", "seed", "risk"];
pub const AGGREGATE_CSV_HEADER: [&str; 7] = ["family", "estimator", "beta", "r_used", "slope", "stderr", "theory_slope"];

/// Graph family swept over `n`.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Path,
    /// `d`-dimensional square grid; every `n` must be a perfect `d`-th power.
    Grid(usize),
    /// `d`-dimensional square torus; every `n` must be a perfect `d`-th power.
    Torus(usize),
    SmallWorld { k: usize, p: f64, seed: u64 },
    /// A fixed graph; only its own vertex count is a valid `n`.
    EdgeList(PathBuf),
}

impl Family {
    pub fn build(&self, n: usize) -> Result<Graph> {
        match self {
            Family::Path => build_path(n),
            Family::Grid(d) => build_grid(&vec![side(n, *d)?; *d]),
            Family::Torus(d) => build_torus(&vec![side(n, *d)?; *d]),
            Family::SmallWorld { k, p, seed } => Ok(build_small_world(n, *k, *p, *seed)?.graph),
            Family::EdgeList(path) => {
                let g = GraphSpec::File(path.clone()).build()?;
                if g.n() != n {
                    return Err(Error::InvalidParameter(format!(
                        "edge list {} has {} vertices, not {n}",
                        path.display(),
                        g.n()
                    )));
                }
                Ok(g)
            }
        }
    }

    /// Geometry exponent of the synthetic families; `None` means it is fitted
    /// from the spectrum.
    pub fn known_r(&self) -> Option<f64> {
        match self {
            Family::Path => Some(1.0),
            Family::Grid(d) | Family::Torus(d) => Some(*d as f64),
            _ => None,
        }
    }
}

fn side(n: usize, d: usize) -> Result<usize> {
    let m = (n as f64).powf(1.0 / d as f64).round() as usize;
    if m < 2 || m.checked_pow(d as u32) != Some(n) {
        return Err(Error::InvalidParameter(format!("n = {n} is not the {d}-th power of a side length >= 2")));
    }
    Ok(m)
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Path => write!(f, "path"),
            Family::Grid(d) => write!(f, "grid:{d}"),
            Family::Torus(d) => write!(f, "torus:{d}"),
            Family::SmallWorld { k, p, seed } => write!(f, "ws:{k},{p},{seed}"),
            Family::EdgeList(p) => write!(f, "file:{}", p.display()),
        }
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Family> {
        let bad = || Error::InvalidParameter(format!("unrecognised family {s:?}"));
        let dim = |v: &str| -> Result<usize> {
            match v.parse::<usize>() {
                Ok(d) if d >= 1 => Ok(d),
                _ => Err(bad()),
            }
        };
        if s == "path" {
            return Ok(Family::Path);
        }
        let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
        match kind {
            "grid" => Ok(Family::Grid(dim(rest)?)),
            "torus" => Ok(Family::Torus(dim(rest)?)),
            "ws" => {
                let parts: Vec<&str> = rest.split(',').collect();
                if parts.len() != 3 {
                    return Err(bad());
                }
                Ok(Family::SmallWorld {
                    k: parts[0].trim().parse().map_err(|_| bad())?,
                    p: parts[1].trim().parse().map_err(|_| bad())?,
                    seed: parts[2].trim().parse().map_err(|_| bad())?,
                })
            }
            "file" if !rest.is_empty() => Ok(Family::EdgeList(PathBuf::from(rest))),
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimator {
    Pinsker,
    Projection,
    ClassificationDirect,
    ClassificationLink,
}

impl Estimator {
    pub fn is_classification(self) -> bool {
        matches!(self, Estimator::ClassificationDirect | Estimator::ClassificationLink)
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Estimator::Pinsker => "pinsker",
            Estimator::Projection => "projection",
            Estimator::ClassificationDirect => "classification-direct",
            Estimator::ClassificationLink => "classification-link",
        })
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Estimator> {
        match s {
            "pinsker" => Ok(Estimator::Pinsker),
            "projection" => Ok(Estimator::Projection),
            "classification-direct" => Ok(Estimator::ClassificationDirect),
            "classification-link" => Ok(Estimator::ClassificationLink),
            _ => Err(Error::InvalidParameter(format!(
                "unknown estimator {s:?} (expected pinsker, projection, classification-direct or classification-link)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub family: Family,
    pub n_values: Vec<usize>,
    pub beta: f64,
    pub q: f64,
    /// Noise level for regression; the plan's noise level for classification.
    pub sigma: f64,
    pub estimator: Estimator,
    pub reps: usize,
    pub seed: u64,
    /// Fraction of `Q²` on which true functions are drawn; `0` gives `f = 0`.
    pub fill: f64,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_values.is_empty() {
            return Err(Error::InvalidParameter("n list is empty".into()));
        }
        if self.n_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("n list must be strictly increasing".into()));
        }
        if self.reps == 0 {
            return Err(Error::InvalidParameter("reps must be at least 1".into()));
        }
        if !(self.fill >= 0.0 && self.fill <= 1.0) {
            return Err(Error::InvalidParameter(format!("fill must lie in [0, 1], got {}", self.fill)));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!("sigma must be non-negative, got {}", self.sigma)));
        }
        if self.estimator.is_classification() && self.sigma == 0.0 {
            return Err(Error::InvalidParameter("classification needs a positive plan sigma".into()));
        }
        SobolevSpec::new(self.beta, self.q, 1.0)?;
        Ok(())
    }
}

/// Shares eigendecompositions between experiments keyed by family and `n`.
#[derive(Debug, Default)]
pub struct SpectrumCache {
    slots: Mutex<HashMap<(String, usize), Arc<Mutex<Option<Arc<Spectrum>>>>>>,
}

impl SpectrumCache {
    pub fn new() -> SpectrumCache {
        SpectrumCache::default()
    }

    pub fn get(&self, family: &Family, n: usize) -> Result<Arc<Spectrum>> {
        let slot = {
            let mut map = self.slots.lock().unwrap_or_else(|e| e.into_inner());
            map.entry((family.to_string(), n)).or_default().clone()
        };
        let mut guard = slot.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(s) = guard.as_ref() {
            return Ok(s.clone());
        }
        let s = Arc::new(eigendecompose(&family.build(n)?)?);
        *guard = Some(s.clone());
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateRow {
    pub n: usize,
    pub rep: usize,
    pub seed: u64,
    pub r_used: f64,
    pub risk: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SizeSummary {
    pub n: usize,
    pub r_used: f64,
    pub mean_risk: f64,
    /// Standard error of the mean; zero with a single replicate.
    pub stderr: f64,
    /// Exact worst case over the ellipsoid for the linear regression plans.
    pub sup_risk: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    /// `None` when the fit passes through every point (two sizes).
    pub stderr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub spec: ExperimentSpec,
    pub rows: Vec<ReplicateRow>,
    pub sizes: Vec<SizeSummary>,
    pub fit: Option<RateFit>,
    pub r_used: f64,
    pub theory_slope: f64,
    /// Set when the slope is undefined, e.g. `"degenerate: zero risk"`.
    pub degenerate: Option<String>,
    pub warnings: Vec<String>,
}

impl RateReport {
    pub fn results_csv(&self) -> Result<String> {
        let s = &self.spec;
        let mut w = csv::Writer::from_writer(Vec::new());
        write_csv(&mut w, RESULTS_CSV_HEADER)?;
        for row in &self.rows {
            write_csv(
                &mut w,
                [
                    s.family.to_string(),
                    row.n.to_string(),
                    sig(s.beta),
                    sig(s.q),
                    sig(s.sigma),
                    sig(row.r_used),
                    s.estimator.to_string(),
                    row.rep.to_string(),
                    row.seed.to_string(),
                    sig(row.risk),
                ],
            )?;
        }
        finish_csv(w)
    }

    pub fn aggregate_csv(&self) -> Result<String> {
        let na = || "NA".to_string();
        let mut w = csv::Writer::from_writer(Vec::new());
        write_csv(&mut w, AGGREGATE_CSV_HEADER)?;
        write_csv(
            &mut w,
            [
                self.spec.family.to_string(),
                self.spec.estimator.to_string(),
                sig(self.spec.beta),
                sig(self.r_used),
                self.fit.map_or_else(na, |f| sig(f.slope)),
                self.fit.and_then(|f| f.stderr).map_or_else(na, sig),
                sig(self.theory_slope),
            ],
        )?;
        finish_csv(w)
    }
}

fn write_csv<I, T>(w: &mut csv::Writer<Vec<u8>>, record: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: AsRef<[u8]>,
{
    w.write_record(record).map_err(|e| Error::InternalInconsistency(format!("csv encoding failed: {e}")))
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::InternalInconsistency(format!("csv encoding failed: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::InternalInconsistency(format!("csv is not utf-8: {e}")))
}

/// OLS slope of `log(mean risk)` on `log n`, with its standard error.
pub fn fit_rate(ns: &[usize], mean_risks: &[f64]) -> Result<RateFit> {
    Error::check_len(ns.len(), mean_risks.len())?;
    let mut distinct = ns.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::DegenerateFit("need at least two distinct sample sizes".into()));
    }
    if let Some(r) = mean_risks.iter().find(|&&r| !(r > 0.0)) {
        return Err(Error::DegenerateFit(format!("mean risk {r} is not positive")));
    }
    let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = mean_risks.iter().map(|r| r.ln()).collect();
    let line = ols(&xs, &ys);
    let k = xs.len();
    let stderr = if k > 2 {
        let mx = xs.iter().sum::<f64>() / k as f64;
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        Some((line.rss / (k - 2) as f64 / sxx).sqrt())
    } else {
        None
    };
    Ok(RateFit { slope: line.slope, stderr })
}

pub fn run_regression_experiment(spec: &ExperimentSpec, cache: &SpectrumCache) -> Result<RateReport> {
    if spec.estimator.is_classification() {
        return Err(Error::InvalidParameter(format!("{} is not a regression estimator", spec.estimator)));
    }
    run(spec, cache)
}

pub fn run_classification_experiment(spec: &ExperimentSpec, cache: &SpectrumCache) -> Result<RateReport> {
    if !spec.estimator.is_classification() {
        return Err(Error::InvalidParameter(format!("{} is not a classification estimator", spec.estimator)));
    }
    run(spec, cache)
}

/// Dispatches on the estimator.
pub fn run_experiment(spec: &ExperimentSpec, cache: &SpectrumCache) -> Result<RateReport> {
    run(spec, cache)
}

fn run(spec: &ExperimentSpec, cache: &SpectrumCache) -> Result<RateReport> {
    spec.validate()?;
    let mut rows = Vec::with_capacity(spec.n_values.len() * spec.reps);
    let mut sizes = Vec::with_capacity(spec.n_values.len());
    let mut warnings = Vec::new();

    for &n in &spec.n_values {
        let at = |e: Error| e.context(format!("n = {n}"));
        let s = cache.get(&spec.family, n).map_err(at)?;
        let r_used = match spec.family.known_r() {
            Some(r) => r,
            None => s.fit_geometry(DEFAULT_I0, DEFAULT_KAPPA).map_err(at)?.r_hat.max(1.0),
        };
        let sob = SobolevSpec::new(spec.beta, spec.q, r_used).map_err(at)?;
        if spec.estimator.is_classification() && spec.beta < r_used / 2.0 {
            warnings.push(format!(
                "n = {n}: beta = {} is below r/2 = {}, outside the regime of the classification rate",
                spec.beta,
                r_used / 2.0
            ));
        }
        let w = ellipsoid_weights(&s, &sob);
        let plan = match spec.estimator {
            Estimator::Projection => None,
            _ if spec.sigma == 0.0 => None,
            _ => Some(pinsker_plan(&w, spec.sigma, n).map_err(at)?),
        };
        let weights: Vec<f64> = match (&plan, spec.estimator) {
            (Some(p), _) => p.weights.clone(),
            (None, Estimator::Projection) => {
                let m = projection_cutoff(n, &sob);
                (0..n).map(|j| if j < m { 1.0 } else { 0.0 }).collect()
            }
            // zero noise: the plan degenerates to the identity
            (None, _) => vec![1.0; n],
        };
        let sup_risk = if spec.estimator.is_classification() {
            None
        } else {
            Some(sup_risk_over_ellipsoid(&weights, &w, spec.sigma / (n as f64).sqrt()).map_err(at)?)
        };

        let results: Vec<Result<ReplicateRow>> = (0..spec.reps)
            .into_par_iter()
            .map(|rep| {
                let seed = derive_seed(spec.seed, &[n as u64, rep as u64]);
                let risk = replicate(spec, &s, &w, &weights, plan.as_ref(), seed)
                    .map_err(|e| e.context(format!("n = {n}, rep = {rep}")))?;
                Ok(ReplicateRow { n, rep, seed, r_used, risk })
            })
            .collect();
        let batch = results.into_iter().collect::<Result<Vec<_>>>()?;

        let k = batch.len() as f64;
        let mean_risk = batch.iter().map(|r| r.risk).sum::<f64>() / k;
        let stderr = if batch.len() > 1 {
            (batch.iter().map(|r| (r.risk - mean_risk).powi(2)).sum::<f64>() / (k - 1.0) / k).sqrt()
        } else {
            0.0
        };
        sizes.push(SizeSummary { n, r_used, mean_risk, stderr, sup_risk });
        rows.extend(batch);
    }

    let r_used = sizes.iter().map(|s| s.r_used).sum::<f64>() / sizes.len() as f64;
    let theory_slope = -2.0 * spec.beta / (2.0 * spec.beta + r_used);
    let (fit, degenerate) = if sizes.iter().any(|s| s.mean_risk <= ZERO_RISK_TOL) {
        (None, Some("degenerate: zero risk".to_string()))
    } else if sizes.len() < 2 {
        (None, Some("degenerate: single sample size".to_string()))
    } else {
        let ns: Vec<usize> = sizes.iter().map(|s| s.n).collect();
        let means: Vec<f64> = sizes.iter().map(|s| s.mean_risk).collect();
        (Some(fit_rate(&ns, &means)?), None)
    };
    Ok(RateReport { spec: spec.clone(), rows, sizes, fit, r_used, theory_slope, degenerate, warnings })
}

/// Truth and observations of one replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct Draw {
    /// `f` for regression, `ρ = Ψ(g)` for classification.
    pub truth: Vec<f64>,
    pub y: Vec<f64>,
}

/// Draws the truth from the shell `fill · Q²` of the ball with weights `w`
/// and simulates observations, exactly as the harness does for `seed`.
pub fn draw_replicate(spec: &ExperimentSpec, s: &Spectrum, w: &EllipsoidWeights, seed: u64) -> Result<Draw> {
    let n = s.n();
    let coeffs = if spec.fill == 0.0 { vec![0.0; n] } else { sample_ball_coeffs(w, spec.fill, seed)? };
    let g = s.gft_inverse(&coeffs)?;
    let mut rng = rng::seeded(derive_seed(seed, &[1]));
    if spec.estimator.is_classification() {
        let link = Sigmoid;
        let rho: Vec<f64> = g.iter().map(|&t| link.psi(t)).collect();
        let y = rho.iter().map(|&p| if rng.random::<f64>() < p { 1.0 } else { 0.0 }).collect();
        Ok(Draw { truth: rho, y })
    } else {
        let y = g
            .iter()
            .map(|v| {
                let z: f64 = StandardNormal.sample(&mut rng);
                v + spec.sigma * z
            })
            .collect();
        Ok(Draw { truth: g, y })
    }
}

/// `‖a − b‖²_n`
pub fn empirical_risk(a: &[f64], b: &[f64]) -> Result<f64> {
    Error::check_len(a.len(), b.len())?;
    Ok(a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64)
}

fn replicate(
    spec: &ExperimentSpec,
    s: &Spectrum,
    w: &EllipsoidWeights,
    weights: &[f64],
    plan: Option<&ShrinkagePlan>,
    seed: u64,
) -> Result<f64> {
    let d = draw_replicate(spec, s, w, seed)?;
    let estimate = match spec.estimator {
        Estimator::ClassificationDirect | Estimator::ClassificationLink => {
            let mode = if spec.estimator == Estimator::ClassificationLink {
                ClassificationMode::Link
            } else {
                ClassificationMode::Direct
            };
            let plan = plan.ok_or_else(|| Error::InvalidParameter("classification needs a Pinsker plan".into()))?;
            estimate_classification(s, plan, &d.y, mode)?
        }
        _ => shrink(s, weights, &d.y)?,
    };
    empirical_risk(&d.truth, &estimate)
}
