use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::numerics::{integrate_pieces, Tolerance};
use crate::real::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GaussianKind {
    Pdf,
    Cdf,
    Quantile,
    CdfAntideriv,
}

/// Standard normal function selected by `kind`. Only the quantile can fail.
pub fn gaussian<T: Real>(kind: GaussianKind, x: T) -> Result<T> {
    match kind {
        GaussianKind::Pdf => Ok(pdf(x)),
        GaussianKind::Cdf => Ok(cdf(x)),
        GaussianKind::Quantile => quantile(x),
        GaussianKind::CdfAntideriv => Ok(cdf_antideriv(x)),
    }
}

#[inline]
pub fn pdf<T: Real>(x: T) -> T {
    let inv_sqrt_2pi = T::lit(0.398_942_280_401_432_7);
    inv_sqrt_2pi * (-(x * x) / T::lit(2.0)).exp()
}

#[inline]
pub fn cdf<T: Real>(x: T) -> T {
    T::lit(0.5) * (-x * T::FRAC_1_SQRT_2()).erfc()
}

/// Upper tail `1 - cdf(x)` without cancellation.
#[inline]
pub fn survival<T: Real>(x: T) -> T {
    T::lit(0.5) * (x * T::FRAC_1_SQRT_2()).erfc()
}

/// `x Φ(x) + φ(x)`, the antiderivative of the standard normal cdf that
/// vanishes at minus infinity.
#[inline]
pub fn cdf_antideriv<T: Real>(x: T) -> T {
    x * cdf(x) + pdf(x)
}

const ACKLAM_A: [f64; 6] = [
    -3.969_683_028_665_376e1,
    2.209_460_984_245_205e2,
    -2.759_285_104_469_687e2,
    1.383_577_518_672_69e2,
    -3.066_479_806_614_716e1,
    2.506_628_277_459_239,
];
const ACKLAM_B: [f64; 5] = [
    -5.447_609_879_822_406e1,
    1.615_858_368_580_409e2,
    -1.556_989_798_598_866e2,
    6.680_131_188_771_972e1,
    -1.328_068_155_288_572e1,
];
const ACKLAM_C: [f64; 6] = [
    -7.784_894_002_430_293e-3,
    -3.223_964_580_411_365e-1,
    -2.400_758_277_161_838,
    -2.549_732_539_343_734,
    4.374_664_141_464_968,
    2.938_163_982_698_783,
];
const ACKLAM_D: [f64; 4] = [
    7.784_695_709_041_462e-3,
    3.224_671_290_700_398e-1,
    2.445_134_137_142_996,
    3.754_408_661_907_416,
];

fn acklam_tail<T: Real>(p: T) -> T {
    let c = ACKLAM_C.map(T::lit);
    let d = ACKLAM_D.map(T::lit);
    let q = (T::lit(-2.0) * p.ln()).sqrt();
    (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5])
        / ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + T::one())
}

fn acklam<T: Real>(p: T) -> T {
    let low = T::lit(0.02425);
    if p < low {
        acklam_tail(p)
    } else if p <= T::one() - low {
        let a = ACKLAM_A.map(T::lit);
        let b = ACKLAM_B.map(T::lit);
        let q = p - T::lit(0.5);
        let r = q * q;
        (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q
            / (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + T::one())
    } else {
        -acklam_tail(T::one() - p)
    }
}

/// Standard normal quantile: rational initial guess refined by two Halley
/// steps. The residual is formed against the lower tail for `p < 1/2` and
/// against the upper tail otherwise, so both tails keep full relative
/// accuracy.
pub fn quantile<T: Real>(p: T) -> Result<T> {
    if !(p > T::zero() && p < T::one()) {
        return domain(format!("normal quantile needs 0 < p < 1, got {p}"));
    }
    let half = T::lit(0.5);
    if p == half {
        return Ok(T::zero());
    }
    let sqrt_2pi = T::lit(2.506_628_274_631_000_5);
    let upper = p > half;
    let tail = if upper { T::one() - p } else { p };
    let mut x = acklam(p);
    for _ in 0..2 {
        let e = if upper { survival(x) - tail } else { cdf(x) - tail };
        let e = if upper { -e } else { e };
        let u = e * sqrt_2pi * (x * x * half).exp();
        if !u.is_finite() {
            break;
        }
        x = x - u / (T::one() + x * u * half);
    }
    Ok(x)
}

/// L¹ norm of the `i`-th derivative of the standard normal density, by
/// quadrature over `[-12, 12]` split at the zeros of the derivative.
pub fn phi_deriv_l1(i: u32) -> Result<f64> {
    let tol = Tolerance::new(1e-13, 1e-13, 60)?;
    let s3 = 3f64.sqrt();
    match i {
        1 => integrate_pieces(|x: f64| (x * pdf(x)).abs(), &[-12.0, 0.0, 12.0], &tol),
        2 => integrate_pieces(
            |x: f64| ((x * x - 1.0) * pdf(x)).abs(),
            &[-12.0, -1.0, 1.0, 12.0],
            &tol,
        ),
        3 => integrate_pieces(
            |x: f64| ((3.0 * x - x * x * x) * pdf(x)).abs(),
            &[-12.0, -s3, 0.0, s3, 12.0],
            &tol,
        ),
        _ => domain(format!("derivative order must be 1, 2 or 3, got {i}")),
    }
    .map(|q| q.value)
}
