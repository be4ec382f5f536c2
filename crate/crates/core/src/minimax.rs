//! Lower-bound constructions.
//!
//! The classification lower bound uses Fano's method on a family of
//! alternatives `f_θ = δ N^{−(2β+r)/(2r)} Σ_{j<N} θ_j ψ_j` indexed by a
//! Varshamov–Gilbert packing of the hypercube `{−1, +1}^N`, together with the
//! base point `f_0 = 0`. The regression lower bound uses the Gaussian prior
//! on the Pinsker ellipsoid instead; [`worst_case_prior_sample`] draws from it.

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::estimator::{LinkFunction, ShrinkagePlan, Sigmoid};
use crate::format::sig;
use crate::rng;
use crate::sobolev::{sobolev_form, EllipsoidWeights, SobolevSpec};
use crate::spectral::Spectrum;

/// Smallest hypercube dimension accepted by [`vg_packing`].
pub const MIN_PACKING_DIM: usize = 8;
/// Upper limit on the packing size; the greedy search is quadratic in it.
pub const MAX_PACKING_SIZE: usize = 1 << 12;
/// Target value of `α` used by [`calibrate_delta`].
pub const ALPHA_TARGET: f64 = 0.5;

/// Relative safety margin applied to the closed-form Sobolev limit on `δ` so
/// that the recomputed form stays below `Q²` after rounding.
const SOBOLEV_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PackingSet {
    dim: usize,
    thetas: Vec<Vec<i8>>,
    min_hamming: usize,
}

impl PackingSet {
    /// Hypercube dimension `N`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of selected vertices `M`.
    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty()
    }

    pub fn thetas(&self) -> &[Vec<i8>] {
        &self.thetas
    }

    pub fn min_hamming(&self) -> usize {
        self.min_hamming
    }
}

/// Number of coordinates at which `a` and `b` disagree.
pub fn hamming(a: &[i8], b: &[i8]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

/// Randomised greedy Varshamov–Gilbert packing.
///
/// Accepts uniform `±1` candidates at Hamming distance `≥ ⌈N/8⌉` from every
/// accepted vector, until `max(2, ⌊2^{N/8}⌋)` (capped at
/// [`MAX_PACKING_SIZE`]) are found or `1000` times that many candidates have
/// been drawn.
pub fn vg_packing(dim: usize, seed: u64) -> Result<PackingSet> {
    if dim < MIN_PACKING_DIM {
        return Err(Error::InvalidSize(format!(
            "n too small for packing: hypercube dimension {dim} < {MIN_PACKING_DIM}"
        )));
    }
    let threshold = dim.div_ceil(8);
    let target = packing_target(dim);
    let mut rng = rng::seeded(seed);
    let mut thetas: Vec<Vec<i8>> = Vec::with_capacity(target);
    let mut attempts = 0usize;
    while thetas.len() < target && attempts < 1000 * target {
        attempts += 1;
        let cand: Vec<i8> = (0..dim).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
        if thetas.iter().all(|t| hamming(t, &cand) >= threshold) {
            thetas.push(cand);
        }
    }
    if thetas.len() < 2 {
        return Err(Error::PackingFailed(format!(
            "only {} vector(s) accepted after {attempts} attempts (N = {dim})",
            thetas.len()
        )));
    }
    let mut min_hamming = usize::MAX;
    for i in 0..thetas.len() {
        for j in i + 1..thetas.len() {
            min_hamming = min_hamming.min(hamming(&thetas[i], &thetas[j]));
        }
    }
    Ok(PackingSet { dim, thetas, min_hamming })
}

/// `max(2, ⌊2^{N/8}⌋)`, capped at [`MAX_PACKING_SIZE`].
pub fn packing_target(dim: usize) -> usize {
    let t = (dim as f64 / 8.0).exp2().floor();
    if t >= MAX_PACKING_SIZE as f64 {
        MAX_PACKING_SIZE
    } else {
        (t as usize).max(2)
    }
}

/// `N = ⌈n^{r/(2β+r)}⌉`, clamped to `n`.
pub fn fano_dimension(n: usize, spec: &SobolevSpec) -> usize {
    let e = spec.r() / (2.0 * spec.beta() + spec.r());
    // guard against ⌈8.000000000001⌉ = 9 from pow round-off
    let m = ((n as f64).powf(e) - 1e-9).ceil() as usize;
    m.clamp(1, n)
}

/// Coefficient amplitude `δ N^{−(2β+r)/(2r)}` of the alternatives.
pub fn bump_scale(delta: f64, dim: usize, spec: &SobolevSpec) -> f64 {
    let (b, r) = (spec.beta(), spec.r());
    delta * (dim as f64).powf(-(2.0 * b + r) / (2.0 * r))
}

/// Eigen-coefficients of `f_θ`.
pub fn alternative_coeffs(n: usize, spec: &SobolevSpec, delta: f64, theta: &[i8]) -> Result<Vec<f64>> {
    if theta.len() > n {
        return Err(Error::InvalidSize(format!(
            "hypercube dimension {} exceeds the number of vertices {n}",
            theta.len()
        )));
    }
    let t = bump_scale(delta, theta.len(), spec);
    let mut c = vec![0.0; n];
    for (cj, &th) in c.iter_mut().zip(theta) {
        *cj = t * th as f64;
    }
    Ok(c)
}

/// Vertex-domain alternatives: the zero base point first, then one signal per
/// packing vector.
pub fn hard_alternatives(s: &Spectrum, spec: &SobolevSpec, delta: f64, pack: &PackingSet) -> Result<Vec<Vec<f64>>> {
    if pack.dim() > s.n() {
        return Err(Error::InvalidSize(format!(
            "hypercube dimension {} exceeds the number of vertices {}",
            pack.dim(),
            s.n()
        )));
    }
    let mut out = Vec::with_capacity(pack.len() + 1);
    out.push(vec![0.0; s.n()]);
    for theta in pack.thetas() {
        out.push(s.gft_inverse(&alternative_coeffs(s.n(), spec, delta, theta)?)?);
    }
    Ok(out)
}

/// Largest `δ` keeping every `f_θ` in the ball:
/// `Q N^{(2β+r)/(2r)} / √(Σ_{j<N} (1 + n^{2β/r} λ_j^β))`.
pub fn delta_sobolev_limit(s: &Spectrum, spec: &SobolevSpec, dim: usize) -> Result<f64> {
    if dim == 0 || dim > s.n() {
        return Err(Error::InvalidSize(format!("hypercube dimension {dim} outside 1..={}", s.n())));
    }
    let total: f64 = s.lambdas()[..dim].iter().map(|&l| spec.weight_sq(s.n(), l)).sum();
    let (b, r) = (spec.beta(), spec.r());
    Ok(spec.q() * (dim as f64).powf((2.0 * b + r) / (2.0 * r)) / total.sqrt())
}

/// Observation model of a Fano certificate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FanoModel {
    /// Binary labels with `ρ = Ψ(f)` and the sigmoid link.
    Classification,
    /// Gaussian noise with standard deviation `sigma`.
    Regression { sigma: f64 },
}

impl FanoModel {
    /// `K(P_f, P_0)` against the base point `f = 0`.
    pub fn kl_to_base(&self, f: &[f64]) -> Result<f64> {
        match *self {
            FanoModel::Classification => {
                let link = Sigmoid;
                let rho: Vec<f64> = f.iter().map(|&t| link.psi(t)).collect();
                bernoulli_kl(&rho, &vec![link.psi(0.0); f.len()])
            }
            FanoModel::Regression { sigma } => {
                if !(sigma > 0.0) {
                    return Err(Error::InvalidParameter(format!("sigma must be positive, got {sigma}")));
                }
                Ok(f.iter().map(|v| v * v).sum::<f64>() / (2.0 * sigma * sigma))
            }
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            FanoModel::Classification => "clf",
            FanoModel::Regression { .. } => "reg",
        }
    }
}

/// `Σ_i ρ₁ log(ρ₁/ρ₂) + (1 − ρ₁) log((1 − ρ₁)/(1 − ρ₂))`.
pub fn bernoulli_kl(rho1: &[f64], rho2: &[f64]) -> Result<f64> {
    Error::check_len(rho1.len(), rho2.len())?;
    let mut total = 0.0;
    for (i, (&p, &q)) in rho1.iter().zip(rho2).enumerate() {
        if !(p > 0.0 && p < 1.0 && q > 0.0 && q < 1.0) {
            return Err(Error::Domain(format!("probabilities at vertex {i} ({p}, {q}) are not in (0, 1)")));
        }
        total += p * (p / q).ln() + (1.0 - p) * ((1.0 - p) / (1.0 - q)).ln();
    }
    Ok(total.max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBound {
    pub kl: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Checks `K(P_{Ψ(v1)}, P_{Ψ(v2)}) ≤ n c ‖v1 − v2‖²_n` with
/// `c = sup|Ψ′/(Ψ(1 − Ψ))| · sup|Ψ′|`.
pub fn kl_link_bound_check(v1: &[f64], v2: &[f64], link: &impl LinkFunction) -> Result<LinkBound> {
    Error::check_len(v1.len(), v2.len())?;
    let p1: Vec<f64> = v1.iter().map(|&t| link.psi(t)).collect();
    let p2: Vec<f64> = v2.iter().map(|&t| link.psi(t)).collect();
    let kl = bernoulli_kl(&p1, &p2)?;
    // n ‖v1 − v2‖²_n is the plain sum of squares
    let bound = link.kl_constant() * v1.iter().zip(v2).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
    Ok(LinkBound { kl, bound, holds: kl <= bound + 1e-12 })
}

/// `(1/(M+1)) Σ_{j=1}^{M} K(P_j, P_0)`; `alts[0]` is the base point.
pub fn kl_budget(model: &FanoModel, alts: &[Vec<f64>]) -> Result<f64> {
    let mut total = 0.0;
    for f in &alts[1..] {
        total += model.kl_to_base(f)?;
    }
    Ok(total / alts.len() as f64)
}

/// Largest `δ` that keeps the alternatives in the ball and gives
/// `α ≤ 1/2`, with `α` computed exactly on the packing.
pub fn calibrate_delta(s: &Spectrum, spec: &SobolevSpec, pack: &PackingSet, model: &FanoModel) -> Result<f64> {
    let delta_a = delta_sobolev_limit(s, spec, pack.dim())? * (1.0 - SOBOLEV_MARGIN);
    let log_m = (pack.len() as f64).ln();
    let alpha = |delta: f64| -> Result<f64> {
        let coeffs = pack
            .thetas()
            .iter()
            .map(|t| alternative_coeffs(s.n(), spec, delta, t))
            .collect::<Result<Vec<_>>>()?;
        let mut alts = vec![vec![0.0; s.n()]];
        for c in &coeffs {
            alts.push(s.gft_inverse(c)?);
        }
        Ok(kl_budget(model, &alts)? / log_m)
    };
    if alpha(delta_a)? <= ALPHA_TARGET {
        return Ok(delta_a);
    }
    // α is increasing in δ: KL to the base point grows with the amplitude.
    let (mut lo, mut hi) = (0.0, delta_a);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 1e-14 * hi {
            break;
        }
        if alpha(mid)? <= ALPHA_TARGET {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if lo <= 0.0 {
        return Err(Error::Numeric("δ calibration collapsed to zero".into()));
    }
    Ok(lo)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FanoCertificate {
    pub n: usize,
    pub beta: f64,
    pub r: f64,
    pub q: f64,
    /// Hypercube dimension `N`.
    pub dim: usize,
    /// Number of alternatives `M`, excluding the base point.
    pub m: usize,
    pub min_hamming: usize,
    pub delta: f64,
    /// Smallest `‖f_i − f_j‖_n` over all pairs, base point included.
    pub separation_min: f64,
    pub sobolev_max: f64,
    pub kl_budget: f64,
    pub alpha: f64,
    /// `(log(M+1) − log 2)/log M − α`.
    pub fano_bound: f64,
    pub valid: bool,
    pub seed: u64,
}

pub const CERTIFICATE_CSV_HEADER: &str = "n,beta,r,Q,N,M,delta,separation_min,sobolev_max,kl_budget,alpha,fano_bound,valid,seed";

impl FanoCertificate {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.n,
            sig(self.beta),
            sig(self.r),
            sig(self.q),
            self.dim,
            self.m,
            sig(self.delta),
            sig(self.separation_min),
            sig(self.sobolev_max),
            sig(self.kl_budget),
            sig(self.alpha),
            sig(self.fano_bound),
            self.valid,
            self.seed
        )
    }

    pub fn to_csv(&self) -> String {
        format!("{CERTIFICATE_CSV_HEADER}\n{}\n", self.csv_row())
    }

    /// Rebuilds the certificate from its recorded seed and checks that every
    /// field matches and that `valid` agrees with its defining predicates.
    pub fn verify(&self, s: &Spectrum, spec: &SobolevSpec, model: &FanoModel) -> Result<()> {
        let again = fano_certificate(s, spec, model, self.seed)?;
        if &again != self {
            return Err(Error::InternalInconsistency(format!(
                "certificate does not reproduce from seed {}",
                self.seed
            )));
        }
        let valid = self.sobolev_max <= self.q * self.q && self.alpha < 1.0 && self.separation_min > 0.0;
        if valid != self.valid {
            return Err(Error::InternalInconsistency("certificate validity flag is inconsistent".into()));
        }
        Ok(())
    }
}

/// Packing, calibration and alternatives for the Fano bound, with every
/// quantity recomputed from the vertex-domain signals.
pub fn fano_certificate(s: &Spectrum, spec: &SobolevSpec, model: &FanoModel, seed: u64) -> Result<FanoCertificate> {
    let n = s.n();
    let dim = fano_dimension(n, spec);
    let pack = vg_packing(dim, seed)?;
    let delta = calibrate_delta(s, spec, &pack, model)?;
    let alts = hard_alternatives(s, spec, delta, &pack)?;

    let mut separation_min = f64::INFINITY;
    for i in 0..alts.len() {
        for j in i + 1..alts.len() {
            separation_min = separation_min.min(norm_n(&alts[i], &alts[j]));
        }
    }
    let mut sobolev_max = 0.0f64;
    for f in &alts[1..] {
        sobolev_max = sobolev_max.max(sobolev_form(s, spec, f)?);
    }
    let kl_budget = kl_budget(model, &alts)?;
    let m = pack.len();
    let log_m = (m as f64).ln();
    let alpha = kl_budget / log_m;
    let fano_bound = (((m + 1) as f64).ln() - 2f64.ln()) / log_m - alpha;
    let valid = sobolev_max <= spec.radius_sq() && alpha < 1.0 && separation_min > 0.0;
    Ok(FanoCertificate {
        n,
        beta: spec.beta(),
        r: spec.r(),
        q: spec.q(),
        dim,
        m,
        min_hamming: pack.min_hamming(),
        delta,
        separation_min,
        sobolev_max,
        kl_budget,
        alpha,
        fano_bound,
        valid,
        seed,
    })
}

/// Largest deviation from `‖f_θ − f_θ′‖²_n = 4 t² d_H(θ, θ′)` over all pairs
/// of alternatives, where `t` is the bump scale.
pub fn norm_identity_defect(s: &Spectrum, spec: &SobolevSpec, delta: f64, pack: &PackingSet) -> Result<f64> {
    let alts = hard_alternatives(s, spec, delta, pack)?;
    let t = bump_scale(delta, pack.dim(), spec);
    let mut worst = 0.0f64;
    for i in 0..pack.len() {
        for j in i + 1..pack.len() {
            let d = hamming(&pack.thetas()[i], &pack.thetas()[j]) as f64;
            let got = norm_n(&alts[i + 1], &alts[j + 1]).powi(2);
            worst = worst.max((got - 4.0 * t * t * d).abs());
        }
    }
    Ok(worst)
}

fn norm_n(a: &[f64], b: &[f64]) -> f64 {
    (a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64).sqrt()
}

/// One draw of eigen-coefficients from the Gaussian prior with variances
/// `(1 − δ) v_j²` for `j < N` and zero beyond.
pub fn worst_case_prior_sample(
    plan: &ShrinkagePlan,
    w: &EllipsoidWeights,
    delta_prior: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    let sd = prior_sd(plan, w, delta_prior)?;
    let mut rng = rng::seeded(seed);
    Ok(draw_prior(&sd, &mut rng))
}

fn prior_sd(plan: &ShrinkagePlan, w: &EllipsoidWeights, delta_prior: f64) -> Result<Vec<f64>> {
    if !(delta_prior > 0.0 && delta_prior < 1.0) {
        return Err(Error::InvalidParameter(format!("prior shrink fraction must be in (0, 1), got {delta_prior}")));
    }
    let v2 = plan.prior_variances(w)?;
    Ok(v2.iter().map(|v| ((1.0 - delta_prior) * v).sqrt()).collect())
}

fn draw_prior(sd: &[f64], rng: &mut rng::Rng) -> Vec<f64> {
    sd.iter()
        .map(|&s| {
            if s > 0.0 {
                let g: f64 = StandardNormal.sample(rng);
                s * g
            } else {
                0.0
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorRisk {
    pub mean: f64,
    /// Mean of `Σ a_j² f_j²` over the draws; its expectation is `(1 − δ) R`.
    pub mean_form: f64,
    pub stderr: f64,
    /// `(1 − δ) S`
    pub lower: f64,
    /// `S`
    pub upper: f64,
}

/// Monte Carlo Bayes risk of the plan under the Gaussian prior, simulated in
/// the sequence model `Z_j = f_j + ε ζ_j`.
pub fn prior_bayes_risk(
    plan: &ShrinkagePlan,
    w: &EllipsoidWeights,
    delta_prior: f64,
    draws: usize,
    seed: u64,
) -> Result<PriorRisk> {
    if draws < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 draws, got {draws}")));
    }
    let sd = prior_sd(plan, w, delta_prior)?;
    let mut rng = rng::seeded(seed);
    let mut losses = Vec::with_capacity(draws);
    let mut form = 0.0;
    for _ in 0..draws {
        let f = draw_prior(&sd, &mut rng);
        form += w.form(&f)?;
        let mut loss = 0.0;
        for (fj, lj) in f.iter().zip(&plan.weights) {
            let g: f64 = StandardNormal.sample(&mut rng);
            let z = fj + plan.epsilon * g;
            loss += (lj * z - fj).powi(2);
        }
        losses.push(loss);
    }
    let k = draws as f64;
    let mean = losses.iter().sum::<f64>() / k;
    let var = losses.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / (k - 1.0);
    Ok(PriorRisk {
        mean,
        mean_form: form / k,
        stderr: (var / k).sqrt(),
        lower: (1.0 - delta_prior) * plan.risk,
        upper: plan.risk,
    })
}
