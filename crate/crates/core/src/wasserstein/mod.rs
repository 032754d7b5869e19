//! Exact Wasserstein-1 and Kolmogorov distances between empirical samples or
//! finite laws and centered Gaussian laws.

mod distance;
mod sample;

pub use distance::{
    ks_sample_gauss, w1_pmf_gauss, w1_sample_gauss, w1_sample_gauss_with, w1_sample_sample, GaussQuantileTable,
};
pub use sample::{rademacher_sum_law, EmpiricalSample, FinitePmf};
