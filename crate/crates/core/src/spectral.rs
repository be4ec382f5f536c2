//! Laplacian spectra under the normalised inner product
//! `<f, g>_n = (1/n) Σ_i f(i) g(i)`.
//!
//! Eigenvectors are stored scaled so that `<ψ_j, ψ_j>_n = 1`, i.e. with
//! Euclidean norm `√n`. Within an eigenspace of multiplicity > 1 the basis is
//! whatever the solver returns; only projectors are meaningful there.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::evd::{self, ComputeEigenvectors};
use faer::diag::Diag;
use faer::{Mat, Par};

use crate::error::{Error, Result};
use crate::graph::{Graph, DEFAULT_DENSE_CAP};

/// Threshold used by the sign convention.
const SIGN_EPS: f64 = 1e-12;
/// Tolerance on `|λ_0|` after the solve.
const NULL_EIGENVALUE_TOL: f64 = 1e-9;
/// Largest accepted `‖Lψ_j − λ_jψ_j‖₂ / max(1, λ_j)` for the stored vectors.
const RESIDUAL_TOL: f64 = 1e-8;

/// Default lower index of the geometry fit.
pub const DEFAULT_I0: usize = 5;
/// Default upper fraction of the geometry fit.
pub const DEFAULT_KAPPA: f64 = 0.5;

#[derive(Debug, Clone)]
pub struct Spectrum {
    n: usize,
    lambdas: Vec<f64>,
    /// Column-major `n × n`; column `j` is `ψ_j`.
    basis: Vec<f64>,
}

impl Spectrum {
    /// Assembles a spectrum from eigenvalues and column-major eigenvectors
    /// that are already normalised under `<·,·>_n`. Only shapes and ordering
    /// are checked.
    pub fn from_parts(lambdas: Vec<f64>, basis: Vec<f64>) -> Result<Spectrum> {
        let n = lambdas.len();
        if n < 2 {
            return Err(Error::InvalidSize(format!("spectrum needs n >= 2, got {n}")));
        }
        Error::check_len(n * n, basis.len())?;
        if lambdas.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidParameter("eigenvalues must be non-decreasing".into()));
        }
        Ok(Spectrum { n, lambdas, basis })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn lambda(&self, j: usize) -> f64 {
        self.lambdas[j]
    }

    /// `ψ_j` as a length-`n` slice.
    pub fn vector(&self, j: usize) -> &[f64] {
        &self.basis[j * self.n..(j + 1) * self.n]
    }

    /// Coefficients `c_j = <f, ψ_j>_n`.
    pub fn gft_forward(&self, f: &[f64]) -> Result<Vec<f64>> {
        Error::check_len(self.n, f.len())?;
        let scale = 1.0 / self.n as f64;
        Ok((0..self.n).map(|j| dot(self.vector(j), f) * scale).collect())
    }

    /// Signal `Σ_j c_j ψ_j`.
    pub fn gft_inverse(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        Error::check_len(self.n, coeffs.len())?;
        let mut out = vec![0.0; self.n];
        for (j, &c) in coeffs.iter().enumerate() {
            if c != 0.0 {
                for (o, &v) in out.iter_mut().zip(self.vector(j)) {
                    *o += c * v;
                }
            }
        }
        Ok(out)
    }

    /// Largest `|ψ_j(i)|` over all vertices and eigenvectors.
    pub fn sup_norm_bound(&self) -> f64 {
        self.basis.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// `max_{i≠j} |<ψ_i, ψ_j>_n|` and `max_j |<ψ_j, ψ_j>_n − 1|`.
    /// Quadratic in `n`; meant for tests and diagnostics.
    pub fn orthonormality_defect(&self) -> (f64, f64) {
        let scale = 1.0 / self.n as f64;
        let mut off = 0.0f64;
        let mut diag = 0.0f64;
        for i in 0..self.n {
            for j in i..self.n {
                let g = dot(self.vector(i), self.vector(j)) * scale;
                if i == j {
                    diag = diag.max((g - 1.0).abs());
                } else {
                    off = off.max(g.abs());
                }
            }
        }
        (off, diag)
    }

    /// `max_j ‖Lψ_j − λ_jψ_j‖₂ / max(1, λ_j)` against the given graph.
    pub fn max_residual(&self, g: &Graph) -> Result<f64> {
        Error::check_len(self.n, g.n())?;
        let mut worst = 0.0f64;
        for j in 0..self.n {
            let psi = self.vector(j);
            let lpsi = g.laplacian_apply(psi)?;
            let lam = self.lambdas[j];
            let r = lpsi.iter().zip(psi).map(|(a, b)| (a - lam * b).powi(2)).sum::<f64>().sqrt();
            worst = worst.max(r / lam.max(1.0));
        }
        Ok(worst)
    }

    /// `P = Σ_{j ∈ idx} ψ_j ψ_jᵀ / n`, the orthogonal projector onto the span
    /// (row-major `n × n`).
    pub fn projector(&self, idx: impl IntoIterator<Item = usize>) -> Vec<f64> {
        let n = self.n;
        let mut p = vec![0.0; n * n];
        let scale = 1.0 / n as f64;
        for j in idx {
            let v = self.vector(j);
            for a in 0..n {
                let va = v[a] * scale;
                for b in 0..n {
                    p[a * n + b] += va * v[b];
                }
            }
        }
        p
    }

    /// Geometry-exponent fit over `i ∈ {i0, …, ⌊κn⌋}`.
    pub fn fit_geometry(&self, i0: usize, kappa: f64) -> Result<GeometryFit> {
        fit_geometry(&self.lambdas, i0, kappa)
    }

    /// Eigenvalues as `j,lambda` CSV text.
    pub fn eigenvalues_csv(&self) -> String {
        let mut out = String::from("j,lambda\n");
        for (j, &l) in self.lambdas.iter().enumerate() {
            out.push_str(&format!("{j},{}\n", crate::format::sig(l)));
        }
        out
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    // four accumulators so the loop vectorises without reassociation flags
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for k in 0..chunks {
        for (lane, s) in acc.iter_mut().enumerate() {
            *s += a[4 * k + lane] * b[4 * k + lane];
        }
    }
    let mut tail = 0.0;
    for i in 4 * chunks..a.len() {
        tail += a[i] * b[i];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Full dense eigendecomposition of the graph Laplacian.
pub fn eigendecompose(g: &Graph) -> Result<Spectrum> {
    eigendecompose_with_cap(g, DEFAULT_DENSE_CAP)
}

pub fn eigendecompose_with_cap(g: &Graph, cap: usize) -> Result<Spectrum> {
    let n = g.n();
    let l = g.laplacian_with_cap(cap)?;

    // Sequential on purpose: the output must be bit-reproducible.
    let par = Par::Seq;
    let mut s = Diag::<f64>::zeros(n);
    let mut u = Mat::<f64>::zeros(n, n);
    let mut mem = MemBuffer::new(evd::self_adjoint_evd_scratch::<f64>(
        n,
        ComputeEigenvectors::Yes,
        par,
        Default::default(),
    ));
    evd::self_adjoint_evd(
        l.as_ref(),
        s.as_mut(),
        Some(u.as_mut()),
        par,
        MemStack::new(&mut mem),
        Default::default(),
    )
    .map_err(|e| Error::Numeric(format!("symmetric eigensolver did not converge: {e:?}")))?;
    drop(l);
    let s = s.column_vector();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| s[a].total_cmp(&s[b]));

    let root_n = (n as f64).sqrt();
    let mut lambdas = Vec::with_capacity(n);
    let mut basis = Vec::with_capacity(n * n);
    for &k in &order {
        lambdas.push(s[k]);
        let col = u.col(k);
        let flip = (0..n).map(|i| col[i]).find(|v| v.abs() > SIGN_EPS).is_some_and(|v| v < 0.0);
        let factor = if flip { -root_n } else { root_n };
        basis.extend((0..n).map(|i| col[i] * factor));
    }
    drop(u);

    if lambdas[0].abs() > NULL_EIGENVALUE_TOL {
        return Err(Error::Numeric(format!("smallest eigenvalue {} is not zero", lambdas[0])));
    }
    if lambdas[1] <= NULL_EIGENVALUE_TOL {
        return Err(Error::Numeric(format!(
            "second eigenvalue {} is not positive although the graph is connected",
            lambdas[1]
        )));
    }
    // Connectivity is known, so the null eigenvalue is exactly zero; tiny
    // negative round-off elsewhere would poison fractional powers.
    lambdas[0] = 0.0;
    for l in &mut lambdas {
        *l = l.max(0.0);
    }

    let spectrum = Spectrum { n, lambdas, basis };
    let residual = spectrum.max_residual(g)?;
    if !(residual < RESIDUAL_TOL) {
        return Err(Error::Numeric(format!(
            "eigenpair residual {residual:.3e} exceeds {RESIDUAL_TOL:.0e}"
        )));
    }
    Ok(spectrum)
}

/// Closed-form spectrum of the path graph: `λ_j = 4 sin²(πj/2n)` and
/// `ψ_j(i) = c_j cos(πj(2i−1)/2n)` for 1-based `i`, with `c_0 = 1` and
/// `c_j = √2` otherwise.
pub fn path_spectrum_closed_form(n: usize) -> Result<Spectrum> {
    if n < 2 {
        return Err(Error::InvalidSize(format!("path needs n >= 2, got {n}")));
    }
    let nf = n as f64;
    let pi = std::f64::consts::PI;
    let lambdas = (0..n).map(|j| 4.0 * (pi * j as f64 / (2.0 * nf)).sin().powi(2)).collect();
    let mut basis = Vec::with_capacity(n * n);
    for j in 0..n {
        let c = if j == 0 { 1.0 } else { std::f64::consts::SQRT_2 };
        basis.extend((1..=n).map(|i| c * path_cosine(n, i, j)));
    }
    Spectrum::from_parts(lambdas, basis)
}

/// Unnormalised path eigenvector `cos(πij/n − πj/2n)` at 1-based vertex `i`.
pub fn path_cosine(n: usize, i: usize, j: usize) -> f64 {
    let pi = std::f64::consts::PI;
    (pi * (j * (2 * i - 1)) as f64 / (2.0 * n as f64)).cos()
}

/// Least-squares fit of `log λ_i = slope · log(i/n) + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometryFit {
    pub r_hat: f64,
    pub slope: f64,
    pub i0: usize,
    pub kappa: f64,
    pub c1_hat: f64,
    pub c2_hat: f64,
    pub rss: f64,
}

/// Fits the growth law `λ_i ≍ (i/n)^{2/r}` on `i ∈ {i0, …, ⌊κn⌋}` by OLS in
/// log–log coordinates. `c1_hat`/`c2_hat` are the tightest envelope
/// constants over the range for the fitted exponent.
pub fn fit_geometry(lambdas: &[f64], i0: usize, kappa: f64) -> Result<GeometryFit> {
    let n = lambdas.len();
    if i0 < 1 {
        return Err(Error::InvalidRange("i0 must be >= 1".into()));
    }
    if !(kappa > 0.0 && kappa <= 1.0) {
        return Err(Error::InvalidRange(format!("kappa must lie in (0, 1], got {kappa}")));
    }
    let hi = ((kappa * n as f64).floor() as usize).min(n - 1);
    if hi <= i0 {
        return Err(Error::InvalidRange(format!(
            "range {{{i0}, …, {hi}}} has fewer than two points (n = {n}, kappa = {kappa})"
        )));
    }
    let nf = n as f64;
    let mut xs = Vec::with_capacity(hi - i0 + 1);
    let mut ys = Vec::with_capacity(hi - i0 + 1);
    for i in i0..=hi {
        if !(lambdas[i] > 0.0) {
            return Err(Error::InvalidRange(format!("λ_{i} = {} is not positive", lambdas[i])));
        }
        xs.push((i as f64 / nf).ln());
        ys.push(lambdas[i].ln());
    }
    let line = ols(&xs, &ys);
    if !(line.slope > 0.0) {
        return Err(Error::DegenerateFit(format!("fitted slope {} is not positive", line.slope)));
    }
    let ratios = (i0..=hi).map(|i| lambdas[i] / (i as f64 / nf).powf(line.slope));
    let (c1_hat, c2_hat) = ratios.fold((f64::INFINITY, 0.0f64), |(lo, hi), r| (lo.min(r), hi.max(r)));
    Ok(GeometryFit {
        r_hat: 2.0 / line.slope,
        slope: line.slope,
        i0,
        kappa,
        c1_hat,
        c2_hat,
        rss: line.rss,
    })
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Line {
    pub slope: f64,
    pub rss: f64,
}

pub(crate) fn ols(xs: &[f64], ys: &[f64]) -> Line {
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    Line { slope, rss }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_grid, build_path, build_small_world, build_torus};
    use crate::rng;
    use rand_distr::{Distribution, StandardNormal};

    fn sorted(mut v: Vec<f64>) -> Vec<f64> {
        v.sort_by(f64::total_cmp);
        v
    }

    fn assert_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{x} vs {y}");
        }
    }

    #[test]
    fn path_two_by_hand() {
        let s = eigendecompose(&build_path(2).unwrap()).unwrap();
        assert_close(s.lambdas(), &[0.0, 2.0], 1e-12);
        assert_close(s.vector(0), &[1.0, 1.0], 1e-12);
        assert_close(s.vector(1), &[1.0, -1.0], 1e-12);
    }

    #[test]
    fn triangle_and_cycle_spectra() {
        let tri = eigendecompose(&build_torus(&[3]).unwrap()).unwrap();
        assert_close(tri.lambdas(), &[0.0, 3.0, 3.0], 1e-12);
        let c4 = eigendecompose(&build_torus(&[4]).unwrap()).unwrap();
        assert_close(c4.lambdas(), &[0.0, 2.0, 2.0, 4.0], 1e-12);
        let pi = std::f64::consts::PI;
        let c9 = eigendecompose(&build_torus(&[9]).unwrap()).unwrap();
        let expect = sorted((0..9).map(|j| 2.0 - 2.0 * (2.0 * pi * j as f64 / 9.0).cos()).collect());
        assert_close(c9.lambdas(), &expect, 1e-10);
    }

    #[test]
    fn closed_form_vectors_are_eigenvectors() {
        // The cosine formula is an independent oracle: check L ψ = λ ψ directly.
        for n in [5, 16, 64] {
            let g = build_path(n).unwrap();
            let s = path_spectrum_closed_form(n).unwrap();
            assert!(s.max_residual(&g).unwrap() < 1e-10);
        }
    }

    #[test]
    fn closed_form_normalisation() {
        for n in [3, 16, 64, 257] {
            let s = path_spectrum_closed_form(n).unwrap();
            assert!(s.vector(0).iter().all(|&v| v == 1.0));
            assert_eq!(s.lambda(0), 0.0);
            for j in 1..n {
                let raw: f64 = (1..=n).map(|i| path_cosine(n, i, j).powi(2)).sum::<f64>() / n as f64;
                assert!((raw - 0.5).abs() < 1e-12, "n={n} j={j} {raw}");
            }
            let (off, diag) = s.orthonormality_defect();
            assert!(off < 1e-12 && diag < 1e-12);
        }
        // attained when n has an odd factor; for n = 2^k the largest entry
        // is √2 cos(π/2n)
        for n in [3, 6, 100, 257] {
            let s = path_spectrum_closed_form(n).unwrap();
            assert!((s.sup_norm_bound() - 2f64.sqrt()).abs() < 1e-12, "n={n}");
        }
        for n in [16, 64, 256] {
            let s = path_spectrum_closed_form(n).unwrap();
            let top = 2f64.sqrt() * (std::f64::consts::PI / (2 * n) as f64).cos();
            assert!((s.sup_norm_bound() - top).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn eigendecompose_path_matches_closed_form() {
        for n in [16, 64, 256] {
            let g = build_path(n).unwrap();
            let s = eigendecompose(&g).unwrap();
            let c = path_spectrum_closed_form(n).unwrap();
            assert_close(s.lambdas(), c.lambdas(), 1e-8);
            // path spectra are simple, so vectors agree up to sign
            for j in 0..n {
                let d = dot(s.vector(j), c.vector(j)) / n as f64;
                assert!((d.abs() - 1.0).abs() < 1e-8, "n={n} j={j}");
            }
            assert!((s.sup_norm_bound() - c.sup_norm_bound()).abs() < 1e-8);
        }
    }

    #[test]
    fn spectrum_invariants_on_assorted_graphs() {
        let graphs = vec![
            build_path(33).unwrap(),
            build_grid(&[6, 7]).unwrap(),
            build_grid(&[3, 4, 5]).unwrap(),
            build_torus(&[5, 6]).unwrap(),
            build_small_world(80, 4, 0.2, 9).unwrap().graph,
        ];
        for g in graphs {
            let s = eigendecompose(&g).unwrap();
            assert_eq!(s.lambda(0), 0.0);
            assert!(s.lambda(1) > 0.0);
            assert!(s.lambdas().windows(2).all(|w| w[0] <= w[1]));
            let (off, diag) = s.orthonormality_defect();
            assert!(off < 1e-9 && diag < 1e-9, "{off} {diag}");
            assert!(s.max_residual(&g).unwrap() < 1e-8);
            for j in 0..s.n() {
                let first = s.vector(j).iter().find(|v| v.abs() > SIGN_EPS).unwrap();
                assert!(*first > 0.0);
            }
            assert!(s.sup_norm_bound() >= 1.0 - 1e-12);
        }
    }

    #[test]
    fn grid_spectrum_is_pairwise_sums() {
        let s = eigendecompose(&build_grid(&[8, 8]).unwrap()).unwrap();
        let p = path_spectrum_closed_form(8).unwrap();
        let sums = sorted(p.lambdas().iter().flat_map(|a| p.lambdas().iter().map(move |b| a + b)).collect());
        assert_close(s.lambdas(), &sums, 1e-8);
    }

    #[test]
    fn torus_spectrum_is_pairwise_sums() {
        let s = eigendecompose(&build_torus(&[4, 4]).unwrap()).unwrap();
        let c4 = [0.0, 2.0, 2.0, 4.0];
        let sums = sorted(c4.iter().flat_map(|a| c4.iter().map(move |b| a + b)).collect());
        assert_close(s.lambdas(), &sums, 1e-10);
    }

    #[test]
    fn grid_eigenspaces_match_kronecker_products() {
        // Degenerate eigenvalues: compare projectors, not vectors.
        let m = 5;
        let s = eigendecompose(&build_grid(&[m, m]).unwrap()).unwrap();
        let p = path_spectrum_closed_form(m).unwrap();
        let n = m * m;
        let mut kron: Vec<(f64, Vec<f64>)> = Vec::new();
        for a in 0..m {
            for b in 0..m {
                let v: Vec<f64> = (0..n).map(|k| p.vector(a)[k / m] * p.vector(b)[k % m]).collect();
                kron.push((p.lambda(a) + p.lambda(b), v));
            }
        }
        kron.sort_by(|x, y| x.0.total_cmp(&y.0));
        let kron_spec = Spectrum::from_parts(
            kron.iter().map(|k| k.0).collect(),
            kron.iter().flat_map(|k| k.1.clone()).collect(),
        )
        .unwrap();
        let mut j = 0;
        while j < n {
            let mut k = j + 1;
            while k < n && (s.lambda(k) - s.lambda(j)).abs() < 1e-8 {
                k += 1;
            }
            let a = s.projector(j..k);
            let b = kron_spec.projector(j..k);
            let diff = a.iter().zip(&b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
            assert!(diff < 1e-8, "eigenspace {j}..{k}: {diff}");
            j = k;
        }
        assert!((kron_spec.sup_norm_bound() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn gft_identities() {
        let g = build_path(40).unwrap();
        let s = eigendecompose(&g).unwrap();
        let e3 = s.gft_forward(s.vector(3)).unwrap();
        for (j, c) in e3.iter().enumerate() {
            assert!((c - if j == 3 { 1.0 } else { 0.0 }).abs() < 1e-12);
        }
        let constant = s.gft_forward(&vec![2.5; 40]).unwrap();
        assert!((constant[0] - 2.5).abs() < 1e-12);
        assert!(constant[1..].iter().all(|c| c.abs() < 1e-12));

        assert!(s.gft_inverse(&vec![0.0; 40]).unwrap().iter().all(|&v| v == 0.0));
        let mut e0 = vec![0.0; 40];
        e0[0] = 1.0;
        assert!(s.gft_inverse(&e0).unwrap().iter().all(|v| (v - 1.0).abs() < 1e-12));

        assert!(matches!(s.gft_forward(&[1.0; 3]), Err(Error::LengthMismatch { .. })));
        assert!(matches!(s.gft_inverse(&[1.0; 41]), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn parseval_and_round_trip() {
        let g = build_grid(&[7, 9]).unwrap();
        let s = eigendecompose(&g).unwrap();
        let mut rng = rng::seeded(5);
        let mut worst = 0.0f64;
        for _ in 0..100 {
            let f: Vec<f64> = (0..s.n()).map(|_| StandardNormal.sample(&mut rng)).collect();
            let c = s.gft_forward(&f).unwrap();
            let norm_n = f.iter().map(|v| v * v).sum::<f64>() / s.n() as f64;
            let coeff_sq: f64 = c.iter().map(|v| v * v).sum();
            assert!((norm_n - coeff_sq).abs() < 1e-10);
            let back = s.gft_inverse(&c).unwrap();
            worst = worst.max(back.iter().zip(&f).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())));
        }
        assert!(worst < 1e-9);
    }

    #[test]
    fn fit_recovers_exact_power_law() {
        let n = 1000;
        for r in [1.0, 1.4, 3.0] {
            let lambdas: Vec<f64> = (0..n).map(|i| (i as f64 / n as f64).powf(2.0 / r)).collect();
            let fit = fit_geometry(&lambdas, DEFAULT_I0, DEFAULT_KAPPA).unwrap();
            assert!((fit.r_hat - r).abs() < 1e-9, "{r} {}", fit.r_hat);
            assert!(fit.rss < 1e-20);
            assert!((fit.c1_hat - 1.0).abs() < 1e-9 && (fit.c2_hat - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn fit_errors() {
        let lambdas: Vec<f64> = (0..20).map(|i| i as f64).collect();
        assert!(matches!(fit_geometry(&lambdas, 0, 0.5), Err(Error::InvalidRange(_))));
        assert!(matches!(fit_geometry(&lambdas, 10, 0.5), Err(Error::InvalidRange(_))));
        assert!(matches!(fit_geometry(&lambdas, 2, 0.0), Err(Error::InvalidRange(_))));
        let flat: Vec<f64> = (0..20).map(|i| if i == 0 { 0.0 } else { 1.0 / i as f64 }).collect();
        assert!(matches!(fit_geometry(&flat, 2, 0.9), Err(Error::DegenerateFit(_))));
    }

    #[test]
    fn fit_on_path_is_close_to_one() {
        let s = path_spectrum_closed_form(512).unwrap();
        let fit = s.fit_geometry(DEFAULT_I0, DEFAULT_KAPPA).unwrap();
        assert!((fit.r_hat - 1.0).abs() < 0.05, "{fit:?}");
        assert!(fit.c1_hat <= fit.c2_hat);
    }

    #[test]
    fn dense_cap_propagates() {
        let g = build_path(20).unwrap();
        assert!(matches!(eigendecompose_with_cap(&g, 10), Err(Error::DenseCapExceeded { .. })));
    }

    #[test]
    fn csv_export() {
        let s = path_spectrum_closed_form(4).unwrap();
        let csv = s.eigenvalues_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "j,lambda");
        assert_eq!(lines[1], "0,0");
        assert_eq!(lines[2], "1,0.585786437627");
        assert_eq!(lines[3], "2,2");
        assert_eq!(lines[4], "3,3.41421356237");
    }
}
