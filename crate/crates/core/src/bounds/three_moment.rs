use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::numerics::RandomStream;
use crate::real::Real;

/// Law of `Z + B` with `Z ~ N(0, β₂/2)` and `B` on `{m, m′}`, matching the
/// prescribed second moment `β₂` and third moment `β₃`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThreeMomentDist<T> {
    pub beta2: T,
    pub beta3: T,
    /// Upper atom of `B`.
    pub m: T,
    /// Lower atom, `−β₂/(2m)`.
    pub m_prime: T,
    /// `P(B = m)`.
    pub t: T,
}

pub fn three_moment<T: Real>(beta2: T, beta3: T) -> Result<ThreeMomentDist<T>> {
    if !(beta2 > T::zero()) || !beta2.is_finite() || !beta3.is_finite() {
        return domain("three-moment law needs beta2 > 0 and finite beta3");
    }
    let two = T::lit(2.0);
    let half_cube = beta2 * beta2 * beta2 / two;
    let r = (beta3 * beta3 + half_cube).sqrt();
    let m = if beta3 >= T::zero() {
        (beta3 + r) / beta2
    } else {
        // (β₃ + r)/β₂ rewritten to avoid cancellation
        beta2 * beta2 / (two * (r - beta3))
    };
    let m_prime = -beta2 / (two * m);
    let t = beta2 / (two * m * m + beta2);
    Ok(ThreeMomentDist { beta2, beta3, m, m_prime, t })
}

impl<T: Real> ThreeMomentDist<T> {
    /// `(E G, E G², E G³)` from the closed form.
    pub fn moments(&self) -> (T, T, T) {
        let half = self.beta2 / T::lit(2.0);
        let (m, mp, t) = (self.m, self.m_prime, self.t);
        // 1 − t without cancellation when t is close to one
        let s = T::lit(2.0) * m * m / (T::lit(2.0) * m * m + self.beta2);
        let m1 = t * m + s * mp;
        let m2 = half + t * m * m + s * mp * mp;
        let m3 = t * m * m * m + s * mp * mp * mp + T::lit(3.0) * half * m1;
        (m1, m2, m3)
    }
}

impl ThreeMomentDist<f64> {
    pub fn sample(&self, stream: &mut RandomStream) -> f64 {
        let z: f64 = StandardNormal.sample(stream);
        let b = if stream.uniform() < self.t { self.m } else { self.m_prime };
        z * (self.beta2 / 2.0).sqrt() + b
    }
}

/// Zolotarev-type ideal-metric bound `E|X|³ / (2 var)` for the W1 distance of
/// a single standardized summand.
pub fn zolotarev(abs3: f64, var: f64) -> Result<f64> {
    if !(var > 0.0) || !(abs3 >= 0.0) {
        return domain("zolotarev bound needs var > 0 and abs3 >= 0");
    }
    Ok(abs3 / (2.0 * var))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::substream;

    #[test]
    fn unit_example() {
        let d = three_moment(1.0, 1.0).unwrap();
        assert!((d.m - (1.0 + 1.5f64.sqrt())).abs() < 1e-15);
        assert!((d.m - 2.22474).abs() < 1e-5);
        assert!((d.t - 0.09175).abs() < 1e-5);
        let (m1, m2, m3) = d.moments();
        assert!(m1.abs() < 1e-15 && (m2 - 1.0).abs() < 1e-14 && (m3 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn negative_skew_is_stable() {
        let d = three_moment(1.0f64, -1e9).unwrap();
        let (m1, m2, m3) = d.moments();
        assert!(m1.abs() < 1e-9 && (m2 - 1.0).abs() < 1e-9);
        assert!((m3 / -1e9 - 1.0).abs() < 1e-9);
        assert!(d.m > 0.0);
    }

    #[test]
    fn works_in_f32() {
        let d = three_moment(2.0f32, 0.5).unwrap();
        let (_, m2, m3) = d.moments();
        assert!((m2 - 2.0).abs() < 1e-5 && (m3 - 0.5).abs() < 1e-5);
    }

    #[test]
    fn sampler_moments() {
        let d = three_moment(1.0, 1.0).unwrap();
        let mut s = substream(7, 0);
        let n = 400_000;
        let xs: Vec<f64> = (0..n).map(|_| d.sample(&mut s)).collect();
        let m2 = xs.iter().map(|x| x * x).sum::<f64>() / n as f64;
        let m3 = xs.iter().map(|x| x * x * x).sum::<f64>() / n as f64;
        assert!((m2 - 1.0).abs() < 0.02, "{m2}");
        assert!((m3 - 1.0).abs() < 0.1, "{m3}");
    }

    #[test]
    fn rejects_bad_input() {
        assert!(three_moment(0.0, 1.0).is_err());
        assert!(three_moment(1.0, f64::NAN).is_err());
        assert!(zolotarev(1.0, 0.0).is_err());
        assert_eq!(zolotarev(1.0, 1.0).unwrap(), 0.5);
    }
}
