//! Stationary process definitions, exact Markov transfer operators on
//! trigonometric observables, path simulation and long-run variances.

mod fourier;
mod simulate;
mod spec;
mod transfer;

pub use fourier::{FourierFn, Truncated, DEFAULT_PRODUCT_CAP};
pub use simulate::{simulate, state_path, step_from, PathEnsemble};
pub use spec::{check_irrational, CircleWalk, FiniteChain, IidLaw, ProcessSpec};
pub use transfer::{is_martingale, long_run_variance, resolvent_tail, transfer, LongRunVariance};
