//! The Laplacian–Sobolev ball
//! `H^β(Q) = { f : <f, (I + (n^{2/r} L)^β) f>_n ≤ Q² }`
//! and its description as an ellipsoid on eigen-coefficients,
//! `Σ_j a_j² c_j² ≤ R` with `a_j² = 1 + n^{2β/r} λ_j^β` and `R = Q²`.

use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::rng;
use crate::spectral::Spectrum;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SobolevSpec {
    beta: f64,
    q: f64,
    r: f64,
}

impl SobolevSpec {
    pub fn new(beta: f64, q: f64, r: f64) -> Result<SobolevSpec> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidParameter(format!("beta must be positive, got {beta}")));
        }
        if !(q > 0.0 && q.is_finite()) {
            return Err(Error::InvalidParameter(format!("Q must be positive, got {q}")));
        }
        if !(r >= 1.0 && r.is_finite()) {
            return Err(Error::InvalidParameter(format!("r must be >= 1, got {r}")));
        }
        Ok(SobolevSpec { beta, q, r })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    /// Ellipsoid radius `R = Q²`.
    pub fn radius_sq(&self) -> f64 {
        self.q * self.q
    }

    /// `1 + n^{2β/r} λ^β`, the squared ellipsoid weight of an eigenvalue.
    pub fn weight_sq(&self, n: usize, lambda: f64) -> f64 {
        1.0 + (n as f64).powf(2.0 * self.beta / self.r) * lambda.max(0.0).powf(self.beta)
    }

    /// Rate exponent `−2β/(2β+r)` of the minimax risk.
    pub fn theory_slope(&self) -> f64 {
        -2.0 * self.beta / (2.0 * self.beta + self.r)
    }
}

/// Semi-axes of the coefficient ellipsoid `{c : Σ a_j² c_j² ≤ R}`.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipsoidWeights {
    a: Vec<f64>,
    radius_sq: f64,
}

impl EllipsoidWeights {
    /// Requires a positive, non-decreasing `a` and `R > 0`.
    pub fn new(a: Vec<f64>, radius_sq: f64) -> Result<EllipsoidWeights> {
        if a.is_empty() {
            return Err(Error::InvalidSize("ellipsoid needs at least one weight".into()));
        }
        if a.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidParameter("ellipsoid weights must be positive and finite".into()));
        }
        if a.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidParameter("ellipsoid weights must be non-decreasing".into()));
        }
        if !(radius_sq > 0.0 && radius_sq.is_finite()) {
            return Err(Error::InvalidParameter(format!("radius must be positive, got {radius_sq}")));
        }
        Ok(EllipsoidWeights { a, radius_sq })
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    /// `R`, reported as Q-squared.
    pub fn radius_sq(&self) -> f64 {
        self.radius_sq
    }

    /// `Σ_j a_j² c_j²`.
    pub fn form(&self, coeffs: &[f64]) -> Result<f64> {
        Error::check_len(self.a.len(), coeffs.len())?;
        Ok(self.a.iter().zip(coeffs).map(|(a, c)| (a * c).powi(2)).sum())
    }
}

/// `<f, (I + (n^{2/r} L)^β) f>_n`, evaluated in the eigenbasis.
pub fn sobolev_form(s: &Spectrum, spec: &SobolevSpec, f: &[f64]) -> Result<f64> {
    let c = s.gft_forward(f)?;
    let n = s.n();
    Ok(s.lambdas().iter().zip(&c).map(|(&l, &cj)| spec.weight_sq(n, l) * cj * cj).sum())
}

/// `f ∈ H^β(Q)`.
pub fn in_ball(s: &Spectrum, spec: &SobolevSpec, f: &[f64]) -> Result<bool> {
    Ok(sobolev_form(s, spec, f)? <= spec.radius_sq())
}

pub fn ellipsoid_weights(s: &Spectrum, spec: &SobolevSpec) -> EllipsoidWeights {
    let n = s.n();
    let a = s.lambdas().iter().map(|&l| spec.weight_sq(n, l).sqrt()).collect();
    EllipsoidWeights { a, radius_sq: spec.radius_sq() }
}

/// Random function on the shell `Σ a_j² c_j² = fill · Q²`.
///
/// Coefficients are `c_j = √fill · Q · g_j / (a_j ‖g‖₂)` for i.i.d. standard
/// normal `g`, so energy is spread over every eigenvector in proportion to
/// `1/a_j`.
pub fn sample_ball(s: &Spectrum, spec: &SobolevSpec, fill: f64, seed: u64) -> Result<Vec<f64>> {
    let c = sample_ball_coeffs(&ellipsoid_weights(s, spec), fill, seed)?;
    s.gft_inverse(&c)
}

pub fn sample_ball_coeffs(w: &EllipsoidWeights, fill: f64, seed: u64) -> Result<Vec<f64>> {
    if !(fill > 0.0 && fill <= 1.0) {
        return Err(Error::InvalidParameter(format!("fill must lie in (0, 1], got {fill}")));
    }
    let mut rng = rng::seeded(seed);
    let g: Vec<f64> = (0..w.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
    let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    let scale = (fill * w.radius_sq()).sqrt() / norm;
    Ok(g.iter().zip(w.a()).map(|(gj, aj)| scale * gj / aj).collect())
}
