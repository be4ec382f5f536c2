//! Upper-bound estimators.
//!
//! In the eigenbasis the regression model becomes the sequence model
//! `Z_j = f_j + ε ζ_j` with `ε = σ/√n`. A linear estimator multiplies each
//! `Z_j` by a weight `l_j`; its risk is
//! `R(l, f) = Σ_j (1 − l_j)² f_j² + ε² l_j²`.
//!
//! Pinsker's weights `l′_j = (1 − x a_j)₊` minimise the worst case of that
//! risk over the ellipsoid `Σ a_j² f_j² ≤ R`, where `x` solves
//! `(ε²/x) Σ_j a_j (1 − x a_j)₊ = R`. The worst-case risk is
//! `S = ε² Σ_j l′_j`.

use crate::error::{Error, Result};
use crate::sobolev::{EllipsoidWeights, SobolevSpec};
use crate::spectral::Spectrum;

/// Clipping margin keeping estimated probabilities inside `[η, 1 − η]`.
pub const CLIP_ETA: f64 = 1e-3;

const EQUATION_TOL: f64 = 1e-8;
const BISECTION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct ShrinkagePlan {
    /// Number of strictly positive weights; `l′_j = 0` for `j ≥ cutoff`.
    pub cutoff: usize,
    /// Root of the Pinsker equation.
    pub x: f64,
    pub weights: Vec<f64>,
    /// Linear minimax risk `S = ε² Σ l′_j`.
    pub risk: f64,
    pub epsilon: f64,
}

impl ShrinkagePlan {
    /// Variances `v_j² = ε² (1 − x a_j)₊ / (x a_j)` of the least favourable
    /// Gaussian prior. They saturate the ellipsoid: `Σ a_j² v_j² = R`.
    pub fn prior_variances(&self, w: &EllipsoidWeights) -> Result<Vec<f64>> {
        Error::check_len(self.weights.len(), w.len())?;
        let eps2 = self.epsilon * self.epsilon;
        Ok(w.a()
            .iter()
            .map(|&a| eps2 * (1.0 - self.x * a).max(0.0) / (self.x * a))
            .collect())
    }

    /// Applies the weights in the eigenbasis of `s`.
    pub fn apply(&self, s: &Spectrum, y: &[f64]) -> Result<Vec<f64>> {
        shrink(s, &self.weights, y)
    }
}

/// Number of positive Pinsker weights: the largest `m ≤ n` with
/// `ε² Σ_{j<m} a_j (a_{m−1} − a_j) < R`.
///
/// The left side is non-decreasing in `m`, so the scan stops at the first
/// failure. With prefix sums `P₁ = Σ a_j`, `P₂ = Σ a_j²` each candidate costs
/// `ε² (a_{m−1} P₁ − P₂)`.
pub fn cutoff_n(w: &EllipsoidWeights, epsilon: f64) -> usize {
    let eps2 = epsilon * epsilon;
    let r = w.radius_sq();
    let (mut p1, mut p2) = (0.0, 0.0);
    let mut cutoff = 0;
    for (m, &a) in w.a().iter().enumerate() {
        p1 += a;
        p2 += a * a;
        // m + 1 terms, largest weight a
        let lhs = eps2 * (a * p1 - p2);
        if m > 0 && lhs >= r {
            break;
        }
        cutoff = m + 1;
    }
    cutoff
}

/// `(ε²/x) Σ_j a_j (1 − x a_j)₊`, strictly decreasing in `x` on `(0, 1/a_0)`.
pub fn pinsker_equation_lhs(w: &EllipsoidWeights, epsilon: f64, x: f64) -> f64 {
    let s: f64 = w.a().iter().map(|&a| a * (1.0 - x * a).max(0.0)).sum();
    epsilon * epsilon * s / x
}

/// Closed-form root `x = ε² Σ_{j<N} a_j / (R + ε² Σ_{j<N} a_j²)`, verified
/// against the defining equation and against a bisection solve.
pub fn solve_x(w: &EllipsoidWeights, epsilon: f64, cutoff: usize) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!("noise level must be positive, got {epsilon}")));
    }
    if cutoff == 0 || cutoff > w.len() {
        return Err(Error::InvalidParameter(format!("cutoff {cutoff} outside 1..={}", w.len())));
    }
    let eps2 = epsilon * epsilon;
    let head = &w.a()[..cutoff];
    let p1: f64 = head.iter().sum();
    let p2: f64 = head.iter().map(|a| a * a).sum();
    let x = eps2 * p1 / (w.radius_sq() + eps2 * p2);

    let r = w.radius_sq();
    let lhs = pinsker_equation_lhs(w, epsilon, x);
    if (lhs - r).abs() > EQUATION_TOL * r {
        return Err(Error::InternalInconsistency(format!(
            "x = {x} gives {lhs} on the Pinsker equation, expected {r} (cutoff {cutoff})"
        )));
    }
    let xb = bisect_x(w, epsilon);
    if (xb - x).abs() > BISECTION_TOL * x {
        return Err(Error::InternalInconsistency(format!(
            "closed-form x = {x} disagrees with bisection x = {xb}"
        )));
    }
    Ok(x)
}

/// Root of the Pinsker equation by bisection on `(0, 1/a_0)`.
pub fn bisect_x(w: &EllipsoidWeights, epsilon: f64) -> f64 {
    let r = w.radius_sq();
    let (mut lo, mut hi) = (0.0, 1.0 / w.a()[0]);
    for _ in 0..4096 {
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            break;
        }
        if pinsker_equation_lhs(w, epsilon, mid) > r {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Pinsker plan for noise level `σ` and sample size `n` (`ε = σ/√n`).
pub fn pinsker_plan(w: &EllipsoidWeights, sigma: f64, n: usize) -> Result<ShrinkagePlan> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!("sigma must be positive, got {sigma}")));
    }
    if n == 0 {
        return Err(Error::InvalidSize("sample size must be positive".into()));
    }
    let epsilon = sigma / (n as f64).sqrt();
    let cutoff = cutoff_n(w, epsilon);
    let x = solve_x(w, epsilon, cutoff)?;
    let weights: Vec<f64> = w.a().iter().map(|&a| (1.0 - x * a).max(0.0)).collect();
    if weights[..cutoff].iter().any(|&l| l <= 0.0) || weights[cutoff..].iter().any(|&l| l != 0.0) {
        return Err(Error::InternalInconsistency(format!(
            "Pinsker weights do not have support {{0, …, {}}}",
            cutoff - 1
        )));
    }
    let risk = epsilon * epsilon * weights.iter().sum::<f64>();
    Ok(ShrinkagePlan { cutoff, x, weights, risk, epsilon })
}

/// `f̂ = Σ_j l_j <y, ψ_j>_n ψ_j`.
pub fn shrink(s: &Spectrum, weights: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    Error::check_len(s.n(), weights.len())?;
    let mut z = s.gft_forward(y)?;
    for (zj, l) in z.iter_mut().zip(weights) {
        *zj *= l;
    }
    s.gft_inverse(&z)
}

pub fn estimate_regression(s: &Spectrum, plan: &ShrinkagePlan, y: &[f64]) -> Result<Vec<f64>> {
    plan.apply(s, y)
}

/// `R(l, f) = Σ (1 − l_j)² f_j² + ε² l_j²`.
pub fn linear_risk(l: &[f64], f_coeffs: &[f64], epsilon: f64) -> Result<f64> {
    Error::check_len(l.len(), f_coeffs.len())?;
    let eps2 = epsilon * epsilon;
    Ok(l.iter().zip(f_coeffs).map(|(&lj, &fj)| (1.0 - lj).powi(2) * fj * fj + eps2 * lj * lj).sum())
}

/// `sup_{f ∈ B} R(l, f) = R · max_j (1 − l_j)²/a_j² + ε² Σ l_j²`; the bias
/// term is a linear functional of `(f_j²)` over a simplex-like set, so the
/// supremum puts all mass on one coordinate.
pub fn sup_risk_over_ellipsoid(l: &[f64], w: &EllipsoidWeights, epsilon: f64) -> Result<f64> {
    Error::check_len(w.len(), l.len())?;
    let bias = l.iter().zip(w.a()).fold(0.0f64, |m, (&lj, &a)| m.max((1.0 - lj).powi(2) / (a * a)));
    let var: f64 = l.iter().map(|lj| lj * lj).sum();
    Ok(w.radius_sq() * bias + epsilon * epsilon * var)
}

/// Keeps the first `m` eigen-coefficients of `y`.
pub fn projection_estimate(s: &Spectrum, y: &[f64], m: usize) -> Result<Vec<f64>> {
    if m == 0 || m > s.n() {
        return Err(Error::InvalidParameter(format!("projection cutoff {m} outside 1..={}", s.n())));
    }
    let weights: Vec<f64> = (0..s.n()).map(|j| if j < m { 1.0 } else { 0.0 }).collect();
    shrink(s, &weights, y)
}

/// Rate-optimal projection cutoff `round(n^{r/(2β+r)})`, clamped to `1..=n`.
pub fn projection_cutoff(n: usize, spec: &SobolevSpec) -> usize {
    let m = (n as f64).powf(spec.r() / (2.0 * spec.beta() + spec.r())).round() as usize;
    m.clamp(1, n)
}

/// A differentiable, strictly increasing link `Ψ: ℝ → (0, 1)`.
pub trait LinkFunction {
    fn psi(&self, t: f64) -> f64;
    fn psi_inv(&self, p: f64) -> Result<f64>;
    fn psi_prime(&self, t: f64) -> f64;
    /// `sup_t |Ψ′(t)|`.
    fn sup_psi_prime(&self) -> f64;
    /// `sup_t |Ψ′(t) / (Ψ(t)(1 − Ψ(t)))|`.
    fn sup_ratio(&self) -> f64;

    /// Constant of the KL bound `K(P_{Ψ(v1)}, P_{Ψ(v2)}) ≤ c Σ (v1 − v2)²`.
    fn kl_constant(&self) -> f64 {
        self.sup_ratio() * self.sup_psi_prime()
    }
}

/// Logistic link `Ψ(t) = 1/(1 + e^{−t})`; here `Ψ′ = Ψ(1 − Ψ)`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Sigmoid;

pub fn sigmoid_link() -> Sigmoid {
    Sigmoid
}

impl LinkFunction for Sigmoid {
    fn psi(&self, t: f64) -> f64 {
        if t >= 0.0 {
            1.0 / (1.0 + (-t).exp())
        } else {
            let e = t.exp();
            e / (1.0 + e)
        }
    }

    fn psi_inv(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Domain(format!("inverse link needs p in (0, 1), got {p}")));
        }
        Ok((p / (1.0 - p)).ln())
    }

    fn psi_prime(&self, t: f64) -> f64 {
        self.psi(t) * self.psi(-t)
    }

    fn sup_psi_prime(&self) -> f64 {
        0.25
    }

    fn sup_ratio(&self) -> f64 {
        1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClassificationMode {
    /// Shrink the labels directly and clip.
    #[default]
    Direct,
    /// Shrink, clip, map through `Ψ⁻¹`, shrink again, map back through `Ψ`.
    Link,
}

/// Estimates `ρ(i) = P(Y_i = 1)` from binary labels. Output lies in
/// `[η, 1 − η]` with `η` = [`CLIP_ETA`].
pub fn estimate_classification(
    s: &Spectrum,
    plan: &ShrinkagePlan,
    y: &[f64],
    mode: ClassificationMode,
) -> Result<Vec<f64>> {
    if let Some((i, v)) = y.iter().enumerate().find(|(_, &v)| v != 0.0 && v != 1.0) {
        return Err(Error::Domain(format!("label {v} at vertex {i} is not 0 or 1")));
    }
    let clip = |v: f64| v.clamp(CLIP_ETA, 1.0 - CLIP_ETA);
    let first: Vec<f64> = plan.apply(s, y)?.into_iter().map(clip).collect();
    match mode {
        ClassificationMode::Direct => Ok(first),
        ClassificationMode::Link => {
            let link = Sigmoid;
            let logits = first.iter().map(|&p| link.psi_inv(p)).collect::<Result<Vec<_>>>()?;
            Ok(plan.apply(s, &logits)?.into_iter().map(|t| clip(link.psi(t))).collect())
        }
    }
}
