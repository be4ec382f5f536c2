//! Minimax estimation of smooth functions on large graphs.
//!
//! The crate is organised bottom-up:
//!
//! - [`graph`]: simple connected undirected graphs (paths, grids, tori,
//!   Watts–Strogatz small worlds, edge lists) and their combinatorial
//!   Laplacians.
//! - [`spectral`]: dense eigendecomposition under the normalised inner
//!   product `<f, g>_n = (1/n) Σ f(i) g(i)`, closed-form path spectra, the
//!   graph Fourier transform and the geometry-exponent fit.
//! - [`sobolev`]: the Laplacian–Sobolev ball `H^β(Q)` and its ellipsoid
//!   weights in the eigenbasis.
//! - [`estimator`]: Pinsker's linear minimax shrinkage, projection
//!   estimators, and the link-function classification estimator.
//! - [`minimax`]: the lower-bound constructions: Varshamov–Gilbert packings,
//!   hard alternatives, Bernoulli KL and Fano certificates, the worst-case
//!   Gaussian prior.
//! - [`sim`]: seeded Monte Carlo experiments recovering the rate
//!   `n^{-2β/(2β+r)}` and CSV reporting.

pub mod error;
pub mod estimator;
pub mod format;
pub mod graph;
pub mod minimax;
pub mod rng;
pub mod sim;
pub mod sobolev;
pub mod spectral;

pub use error::{Error, ErrorKind, Result};
pub use estimator::{
    ClassificationMode, LinkFunction, ShrinkagePlan, Sigmoid, CLIP_ETA,
};
pub use graph::{Graph, GraphSpec, SmallWorld, DEFAULT_DENSE_CAP};
pub use minimax::{FanoCertificate, FanoModel, PackingSet};
pub use sim::{Estimator, ExperimentSpec, Family, RateReport, SpectrumCache};
pub use sobolev::{EllipsoidWeights, SobolevSpec};
pub use spectral::{GeometryFit, Spectrum};
