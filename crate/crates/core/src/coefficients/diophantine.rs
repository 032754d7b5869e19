use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::processes::CircleWalk;

/// `Σ_{k ∈ [2^N, 2^{N+1})} d(ka, ℤ)^{-p}`.
pub fn frac_part_sum(walk: &CircleWalk, n: u32, p: i32) -> Result<f64> {
    if n > 20 || p < 2 {
        return Err(Error::Domain("frac_part_sum needs N ≤ 20 and p ≥ 2".into()));
    }
    let mut sum = 0.0;
    for k in (1i64 << n)..(1i64 << (n + 1)) {
        let d = walk.dist_to_int(k);
        if d < 1e-14 {
            return Err(Error::Precision(format!("d(ka, Z) = {d:e} at k = {k} needs extended precision")));
        }
        sum += d.powi(-p);
    }
    Ok(sum)
}

/// Growth envelope `S_N ≤ 2 C^p 2^{p(N+2)(1+η)}` with `C` fitted on the first
/// block of `N` and verified on the rest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeReport {
    pub p: i32,
    pub eta: f64,
    pub c_fit: f64,
    pub fit_range: (u32, u32),
    pub sums: Vec<f64>,
    /// `log₂(S_N)/(N+2)` per `N`.
    pub growth: Vec<f64>,
    pub envelope: Vec<f64>,
    pub holds: bool,
}

pub fn diophantine_envelope(walk: &CircleWalk, p: i32, eta: f64, n_fit: u32, n_max: u32) -> Result<EnvelopeReport> {
    if n_fit > n_max {
        return Err(Error::Domain("fit range must end before the check range".into()));
    }
    let sums: Vec<f64> = (0..=n_max).map(|n| frac_part_sum(walk, n, p)).collect::<Result<_>>()?;
    let base = |n: u32| 2f64.powf(p as f64 * (n as f64 + 2.0) * (1.0 + eta));
    let c_fit = (0..=n_fit)
        .map(|n| (sums[n as usize] / (2.0 * base(n))).powf(1.0 / p as f64))
        .fold(0.0, f64::max);
    let envelope: Vec<f64> = (0..=n_max).map(|n| 2.0 * c_fit.powi(p) * base(n)).collect();
    let growth = sums.iter().enumerate().map(|(n, s)| s.log2() / (n as f64 + 2.0)).collect();
    let holds = sums.iter().zip(&envelope).all(|(s, e)| *s <= *e);
    Ok(EnvelopeReport { p, eta, c_fit, fit_range: (0, n_fit), sums, growth, envelope, holds })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelDecay {
    pub value: f64,
    pub tail_bound: f64,
}

/// `2 Σ_{k=1}^{kmax} |cos 2πka|ⁿ k^{-s}` with the tail bound `2 kmax^{1−s}/(s−1)`.
pub fn kernel_decay_sum(walk: &CircleWalk, s: f64, n: u32, kmax: usize) -> Result<KernelDecay> {
    if !(s > 1.0) || kmax == 0 {
        return Err(Error::Domain("kernel_decay_sum needs s > 1 and kmax ≥ 1".into()));
    }
    let tail_bound = 2.0 * (kmax as f64).powf(1.0 - s) / (s - 1.0);
    if tail_bound > 1e-12 {
        return Err(Error::Precondition(format!("kmax = {kmax} leaves a tail bound of {tail_bound:e}")));
    }
    // sum small terms first
    let value = 2.0
        * (1..=kmax)
            .rev()
            .map(|k| walk.cos_k(k as i64).abs().powi(n as i32) * (k as f64).powf(-s))
            .sum::<f64>();
    Ok(KernelDecay { value, tail_bound })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_term() {
        let w = CircleWalk::sqrt2_minus_1();
        let v = frac_part_sum(&w, 0, 2).unwrap();
        let a = std::f64::consts::SQRT_2 - 1.0;
        assert!((v - 1.0 / (a * a)).abs() < 1e-12);
        assert!(frac_part_sum(&w, 3, 4).unwrap() >= frac_part_sum(&w, 3, 2).unwrap());
    }

    #[test]
    fn zeta_at_zero_steps() {
        let w = CircleWalk::sqrt2_minus_1();
        let v = kernel_decay_sum(&w, 5.0, 0, 2000).unwrap();
        // 2ζ(5)
        assert!((v.value - 2.0 * 1.0369277551433699).abs() < 1e-12);
        assert!(kernel_decay_sum(&w, 5.0, 0, 10).is_err());
    }

    #[test]
    fn decay_is_monotone() {
        let w = CircleWalk::sqrt2_minus_1();
        let mut last = f64::INFINITY;
        for n in 0..50 {
            let v = kernel_decay_sum(&w, 8.0, n, 100).unwrap().value;
            assert!(v <= last);
            last = v;
        }
    }
}
