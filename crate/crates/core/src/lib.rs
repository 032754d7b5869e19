//! Executable laboratory for mean central limit theorems of stationary
//! sequences.
//!
//! The crate simulates stationary Markov observables (doubling map, random
//! walk on the circle, finite chains, i.i.d. laws), computes the minimal L¹
//! (Wasserstein-1) distance between normalized partial sums and their
//! Gaussian limit exactly from samples and finite laws, evaluates explicit
//! rate bounds through closed-form transfer operators, and checks covariance
//! and mixing inequalities against enumeration oracles.
//!
//! Scalar-agnostic building blocks (Gaussian special functions, quadrature,
//! trigonometric polynomials, W1 distances, rate fitting) are generic over
//! [`Real`]; the concrete aliases below fix them to `f64`.

pub mod bounds;
pub mod coefficients;
pub mod error;
pub mod harness;
pub mod numerics;
pub mod processes;
pub mod real;
pub mod wasserstein;

pub use error::{Error, Result};
pub use real::Real;

/// Trigonometric polynomial observable with `f64` coefficients.
pub type Fourier = processes::FourierFn<f64>;
/// Sorted empirical sample of `f64` values.
pub type Sample = wasserstein::EmpiricalSample<f64>;
/// Finite discrete law on `f64` atoms.
pub type Pmf = wasserstein::FinitePmf<f64>;
/// Quadrature tolerance in `f64`.
pub type Tol = numerics::Tolerance<f64>;

pub use bounds::{BoundReport, MomentSummary, ThreeMomentDist};
pub use processes::{IidLaw, PathEnsemble, ProcessSpec};

/// Library version recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
