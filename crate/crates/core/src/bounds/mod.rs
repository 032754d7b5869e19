//! Explicit W1 rate bounds and their ingredients: moment summaries,
//! conditional-variance norms, the nonadapted correction, third-order
//! coefficients and the three-moment comparison law.

pub(crate) mod backend;
mod evaluator;
mod rate;
mod report;
mod three_moment;

pub use evaluator::{DPrime, Evaluator, MomentSummary};
pub use rate::{rate_fit, RateFit};
pub use report::{write_bounds_csv, BoundReport, NamedTerm, Theorem};
pub use three_moment::{three_moment, zolotarev, ThreeMomentDist};

use crate::error::Result;
use crate::processes::{FourierFn, ProcessSpec};

type F = FourierFn<f64>;

pub fn moments(spec: &ProcessSpec, f: &F) -> Result<MomentSummary> {
    Evaluator::new(spec, f)?.moments()
}

/// `(‖U_m‖₁, ‖X₀U_m‖₁)` with `U_m = Σ_{k=1}^m K^k(X₀²) − m E X₀²`.
pub fn u_norms(spec: &ProcessSpec, f: &F, m: usize) -> Result<(f64, f64)> {
    Evaluator::new(spec, f)?.u_norms(m)
}

pub fn thm21_bound(spec: &ProcessSpec, f: &F, n: u64) -> Result<BoundReport> {
    Evaluator::new(spec, f)?.thm21_bound(n)
}

/// `(‖W_m‖₁, ‖X₀W_m‖₁)` for the general (non-martingale) bound.
pub fn w_norms(spec: &ProcessSpec, f: &F, m: usize) -> Result<(f64, f64)> {
    Evaluator::new(spec, f)?.w_norms(m)
}

pub fn dprime(spec: &ProcessSpec, f: &F, n: u64) -> Result<DPrime> {
    Evaluator::new(spec, f)?.dprime(n)
}

pub fn thm22_bound(spec: &ProcessSpec, f: &F, n: u64) -> Result<BoundReport> {
    Evaluator::new(spec, f)?.thm22_bound(n)
}

pub fn thm23_terms(spec: &ProcessSpec, f: &F, m: usize) -> Result<(f64, f64)> {
    Evaluator::new(spec, f)?.thm23_terms(m)
}

pub fn thm23_bound(spec: &ProcessSpec, f: &F, n: u64, theorem: Theorem) -> Result<BoundReport> {
    Evaluator::new(spec, f)?.thm23_bound(n, theorem)
}

pub fn jan_norm(spec: &ProcessSpec, f: &F, l: usize) -> Result<f64> {
    Evaluator::new(spec, f)?.jan_norm(l)
}

pub fn b_l(spec: &ProcessSpec, f: &F, l: usize) -> Result<f64> {
    Evaluator::new(spec, f)?.b_l(l)
}
