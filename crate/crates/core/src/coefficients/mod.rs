//! Dependence and mixing coefficients, mixing-integral diagnostics, the
//! covariance inequality oracle for finite joint laws, and Diophantine sums
//! for the circle walk.

mod alpha;
mod appendix;
mod diophantine;
mod quantile;
mod theta;

pub use alpha::alpha_exact;
pub use appendix::{
    corollary_check, covariance_bound_check, dispersion_check, random_joint, random_monotone_diff, CorollaryReport,
    CovarianceReport, DispersionReport, JointPmf, MonotoneDiff,
};
pub use diophantine::{diophantine_envelope, frac_part_sum, kernel_decay_sum, EnvelopeReport, KernelDecay};
pub use quantile::{
    alpha_inverse, lower_inverse, mixing_integral, quantile_from_sample, tail_quantile, trend_verdict, AlphaSeq,
    MixingReport, QuantileSeq, Trend, Verdict,
};
pub use theta::{theta_coeff, ThetaReport};

/// `∫_lo^hi g` for a step function `g` whose jumps lie in `breaks`; `g` is
/// evaluated at interval midpoints only.
pub(crate) fn step_integral<G: Fn(f64) -> f64>(breaks: &[f64], lo: f64, hi: f64, g: G) -> f64 {
    if !(hi > lo) {
        return 0.0;
    }
    let mut pts: Vec<f64> = breaks.iter().copied().filter(|&b| b > lo && b < hi).collect();
    pts.push(lo);
    pts.push(hi);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts.windows(2)
        .map(|w| {
            let v = g(0.5 * (w[0] + w[1]));
            if v == 0.0 { 0.0 } else { (w[1] - w[0]) * v }
        })
        .sum()
}
