use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::real::Real;

/// Least-squares fit of `log d = slope · log n + intercept`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit<T> {
    pub slope: T,
    pub intercept: T,
    pub r2: T,
}

pub fn rate_fit<T: Real>(points: &[(T, T)]) -> Result<RateFit<T>> {
    if points.len() < 3 {
        return domain("rate fit needs at least three points");
    }
    if points.iter().any(|(n, d)| !(*n > T::zero()) || !(*d > T::zero())) {
        return domain("rate fit needs positive n and d");
    }
    let k = T::from_usize(points.len()).unwrap();
    let xs: Vec<T> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<T> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().copied().sum::<T>() / k;
    let my = ys.iter().copied().sum::<T>() / k;
    let sxx: T = xs.iter().map(|x| (*x - mx) * (*x - mx)).sum();
    if !(sxx > T::zero()) {
        return domain("rate fit needs distinct n");
    }
    let sxy: T = xs.iter().zip(&ys).map(|(x, y)| (*x - mx) * (*y - my)).sum();
    let syy: T = ys.iter().map(|y| (*y - my) * (*y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy > T::zero() { sxy * sxy / (sxx * syy) } else { T::one() };
    Ok(RateFit { slope, intercept, r2 })
}
