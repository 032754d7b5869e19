use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::processes::{FourierFn, IidLaw, ProcessSpec};

type F = FourierFn<f64>;

/// Centering tolerance for observables handed to series operations.
pub(crate) const CENTER_TOL: f64 = 1e-12;

fn fourier_only(spec: &ProcessSpec) -> Result<()> {
    if let ProcessSpec::FiniteChain(_) = spec {
        return Err(Error::Unsupported(
            "finite chains use state-value vectors, not Fourier observables".into(),
        ));
    }
    Ok(())
}

/// `K^m f`.
pub fn transfer(spec: &ProcessSpec, f: &F, m: usize) -> Result<F> {
    fourier_only(spec)?;
    if m == 0 {
        return Ok(f.clone());
    }
    Ok(match spec {
        ProcessSpec::DoublingMap => {
            let k = f.max_freq();
            let stride = if m >= usize::BITS as usize { usize::MAX } else { 1usize << m };
            let top = k / stride;
            let cos = (1..=top).map(|j| f.coeff(j * stride).0).collect();
            let sin = (1..=top).map(|j| f.coeff(j * stride).1).collect();
            F::new(f.constant, cos, sin)
        }
        ProcessSpec::CircleWalk(w) => {
            let exp = i32::try_from(m).unwrap_or(i32::MAX);
            let factor: Vec<f64> = (1..=f.max_freq()).map(|k| w.cos_k(k as i64).powi(exp)).collect();
            F::new(
                f.constant,
                f.cos.iter().zip(&factor).map(|(a, c)| a * c).collect(),
                f.sin.iter().zip(&factor).map(|(b, c)| b * c).collect(),
            )
        }
        ProcessSpec::Iid(law) => F::constant_fn(law.mean(f)),
        ProcessSpec::FiniteChain(_) => unreachable!(),
    })
}

fn require_centered(spec: &ProcessSpec, f: &F) -> Result<()> {
    let mean = match spec {
        ProcessSpec::Iid(law) => law.mean(f),
        _ => f.constant,
    };
    if mean.abs() > CENTER_TOL {
        return Err(Error::Precondition(format!("observable must be centered, mean is {mean}")));
    }
    Ok(())
}

/// `Σ_{l≥m} K^l f` in closed form.
pub fn resolvent_tail(spec: &ProcessSpec, f: &F, m: usize) -> Result<F> {
    fourier_only(spec)?;
    require_centered(spec, f)?;
    match spec {
        ProcessSpec::DoublingMap => {
            let mut acc = F::zero();
            let mut l = m;
            loop {
                let g = transfer(spec, f, l)?;
                if g.max_freq() == 0 {
                    break;
                }
                acc = acc.add(&g);
                l += 1;
            }
            // the constant part is zero by centering; keep it exact
            acc.constant = 0.0;
            Ok(acc)
        }
        ProcessSpec::CircleWalk(w) => {
            let mut cos = Vec::with_capacity(f.max_freq());
            let mut sin = Vec::with_capacity(f.max_freq());
            let exp = i32::try_from(m).unwrap_or(i32::MAX);
            for k in 1..=f.max_freq() {
                let (a, b) = f.coeff(k);
                if a == 0.0 && b == 0.0 {
                    cos.push(0.0);
                    sin.push(0.0);
                    continue;
                }
                let c = w.cos_k(k as i64);
                if 1.0 - c <= 1e-15 {
                    return Err(Error::Divergence(format!("resonant frequency {k}: cos(2πka) = 1")));
                }
                let factor = c.powi(exp) / (1.0 - c);
                cos.push(a * factor);
                sin.push(b * factor);
            }
            Ok(F::new(0.0, cos, sin))
        }
        ProcessSpec::Iid(_) => Ok(if m == 0 { f.clone() } else { F::zero() }),
        ProcessSpec::FiniteChain(_) => unreachable!(),
    }
}

/// Long-run variance together with the autocovariances `λ(f·Kⁿf)`, `n ≥ 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LongRunVariance {
    pub sigma2: f64,
    pub var0: f64,
    pub covariances: Vec<f64>,
}

const COV_TRUNCATION: usize = 10_000;

pub fn long_run_variance(spec: &ProcessSpec, f: &F) -> Result<LongRunVariance> {
    let out = match spec {
        ProcessSpec::FiniteChain(chain) => {
            let (sigma2, covariances) = chain.long_run_variance()?;
            let var0 = chain.expect(&chain.values.iter().map(|v| v * v).collect::<Vec<_>>());
            LongRunVariance { sigma2, var0, covariances }
        }
        ProcessSpec::Iid(law) => {
            require_centered(spec, f)?;
            let var0 = match law {
                IidLaw::Lebesgue => f.inner(f),
                _ => law.moments().map(|(m, m2, ..)| m2 - m * m).unwrap_or(0.0),
            };
            LongRunVariance { sigma2: var0, var0, covariances: Vec::new() }
        }
        ProcessSpec::DoublingMap => {
            require_centered(spec, f)?;
            let var0 = f.inner(f);
            let mut covariances = Vec::new();
            let mut n = 1;
            loop {
                let g = transfer(spec, f, n)?;
                if g.max_freq() == 0 {
                    break;
                }
                covariances.push(f.inner(&g));
                n += 1;
            }
            let sigma2 = var0 + 2.0 * covariances.iter().sum::<f64>();
            LongRunVariance { sigma2, var0, covariances }
        }
        ProcessSpec::CircleWalk(w) => {
            require_centered(spec, f)?;
            let var0 = f.inner(f);
            let mut sigma2 = 0.0;
            let mut weights = Vec::new();
            let mut max_c: f64 = 0.0;
            for k in 1..=f.max_freq() {
                let (a, b) = f.coeff(k);
                let e = 0.5 * (a * a + b * b);
                if e == 0.0 {
                    continue;
                }
                let c = w.cos_k(k as i64);
                if 1.0 - c <= 1e-15 {
                    return Err(Error::Divergence(format!("resonant frequency {k}: cot² series is infinite")));
                }
                let t = (std::f64::consts::PI * w.frac_mult(k as i64)).tan();
                sigma2 += e / (t * t);
                weights.push((c, e));
                max_c = max_c.max(c.abs());
            }
            let mut covariances = Vec::new();
            let mut pow: Vec<f64> = weights.iter().map(|&(c, _)| c).collect();
            for _ in 0..COV_TRUNCATION {
                let cov: f64 = pow.iter().zip(&weights).map(|(p, (_, e))| p * e).sum();
                covariances.push(cov);
                if pow.iter().all(|p| p.abs() < 1e-17) {
                    break;
                }
                for (p, (c, _)) in pow.iter_mut().zip(&weights) {
                    *p *= c;
                }
            }
            LongRunVariance { sigma2, var0, covariances }
        }
    };
    if !(out.sigma2 > 1e-12) {
        return Err(Error::DegenerateVariance(out.sigma2));
    }
    Ok(out)
}

/// True iff `Kf` vanishes, i.e. `f(ξ_i)` is a martingale difference sequence.
pub fn is_martingale(spec: &ProcessSpec, f: &F) -> bool {
    match spec {
        ProcessSpec::FiniteChain(chain) => chain.is_martingale(),
        _ => match transfer(spec, f, 1) {
            Ok(g) => g.coeff_l1_max() < 1e-14,
            Err(_) => false,
        },
    }
}

impl FourierFn<f64> {
    fn coeff_l1_max(&self) -> f64 {
        self.cos
            .iter()
            .chain(&self.sin)
            .map(|c| c.abs())
            .fold(self.constant.abs(), f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::processes::CircleWalk;
    use std::f64::consts::PI;

    fn close(f: &F, g: &F, tol: f64) -> bool {
        f.sub(g).coeff_l1() <= tol
    }

    /// `½(f(x/2) + f((x+1)/2))` evaluated pointwise.
    fn two_point(f: &F, x: f64) -> f64 {
        0.5 * (f.eval(x / 2.0) + f.eval((x + 1.0) / 2.0))
    }

    #[test]
    fn doubling_rule() {
        let d = ProcessSpec::DoublingMap;
        assert!(close(&transfer(&d, &F::cosine(2, 1.0), 1).unwrap(), &F::cosine(1, 1.0), 0.0));
        assert!(close(&transfer(&d, &F::cosine(1, 1.0), 1).unwrap(), &F::zero(), 0.0));
        let f = F::new(0.0, vec![0.3, -1.0, 0.0, 0.25, 0.1, 0.7], vec![0.0, 0.4, 0.2, -0.6]);
        let kf = transfer(&d, &f, 1).unwrap();
        for i in 0..40 {
            let x = (i as f64 + 0.37) / 40.0;
            assert!((kf.eval(x) - two_point(&f, x)).abs() < 1e-13);
        }
        let semigroup = transfer(&d, &transfer(&d, &f, 1).unwrap(), 1).unwrap();
        assert_eq!(semigroup, transfer(&d, &f, 2).unwrap());
    }

    #[test]
    fn circle_rule() {
        let w = CircleWalk::sqrt2_minus_1();
        let s = ProcessSpec::CircleWalk(w);
        let c = (2.0 * PI * w.a).cos();
        let g = transfer(&s, &F::sine(1, 1.0), 1).unwrap();
        assert!(close(&g, &F::sine(1, c), 1e-15));
        let f = F::new(0.0, vec![0.2, 0.0, -0.5], vec![1.0]);
        let kf = transfer(&s, &f, 1).unwrap();
        for i in 0..20 {
            let x = i as f64 / 20.0;
            let direct = 0.5 * (f.eval(x + w.a) + f.eval(x - w.a));
            assert!((kf.eval(x) - direct).abs() < 1e-13);
        }
    }

    #[test]
    fn iid_and_chain() {
        let s = ProcessSpec::Iid(IidLaw::Lebesgue);
        let f = F::new(0.3, vec![1.0], vec![]);
        assert_eq!(transfer(&s, &f, 2).unwrap(), F::constant_fn(0.3));
        let c = ProcessSpec::FiniteChain(
            crate::processes::FiniteChain::new(vec![vec![0.5, 0.5], vec![0.5, 0.5]], vec![1.0, -1.0]).unwrap(),
        );
        assert!(matches!(transfer(&c, &f, 1), Err(Error::Unsupported(_))));
        assert!(is_martingale(&c, &f));
    }

    #[test]
    fn resolvent_examples() {
        let d = ProcessSpec::DoublingMap;
        assert_eq!(resolvent_tail(&d, &F::cosine(1, 1.0), 1).unwrap(), F::zero());
        assert_eq!(resolvent_tail(&d, &F::cosine(2, 1.0), 1).unwrap(), F::cosine(1, 1.0));
        let w = CircleWalk::sqrt2_minus_1();
        let s = ProcessSpec::CircleWalk(w);
        let c = (2.0 * PI * w.a).cos();
        // geometric series summed term by term
        let mut oracle = 0.0;
        let mut p = c;
        while p.abs() > 1e-18 {
            oracle += p;
            p *= c;
        }
        let g = resolvent_tail(&s, &F::cosine(1, 1.0), 1).unwrap();
        assert!((g.coeff(1).0 - oracle).abs() < 1e-12);
        assert!((g.coeff(1).0 - c / (1.0 - c)).abs() < 1e-14);
        assert!(matches!(resolvent_tail(&d, &F::constant_fn(1.0), 1), Err(Error::Precondition(_))));
    }

    #[test]
    fn variance_examples() {
        let d = ProcessSpec::DoublingMap;
        assert!((long_run_variance(&d, &F::cosine(1, 1.0)).unwrap().sigma2 - 0.5).abs() < 1e-15);
        // cos 2πx + cos 4πx: λ(f²) = 1, Kf = cos 2πx, λ(f·Kf) = ½
        let r = long_run_variance(&d, &F::new(0.0, vec![1.0, 1.0], vec![])).unwrap();
        assert!((r.sigma2 - (1.0 + 2.0 * 0.5)).abs() < 1e-15);
        let w = CircleWalk::sqrt2_minus_1();
        let s = ProcessSpec::CircleWalk(w);
        let t = (PI * w.a).tan();
        let r = long_run_variance(&s, &F::cosine(1, 1.0)).unwrap();
        assert!((r.sigma2 - 0.5 / (t * t)).abs() < 1e-14);
        let iid = ProcessSpec::Iid(IidLaw::Gaussian { variance: 2.5 });
        assert_eq!(long_run_variance(&iid, &F::zero()).unwrap().sigma2, 2.5);
        assert!(matches!(long_run_variance(&d, &F::zero()), Err(Error::DegenerateVariance(_))));
    }

    #[test]
    fn martingale_flags() {
        let d = ProcessSpec::DoublingMap;
        assert!(is_martingale(&d, &F::cosine(1, 1.0)));
        assert!(is_martingale(&d, &F::new(0.0, vec![1.0, 0.0, -0.4], vec![0.3])));
        assert!(!is_martingale(&d, &F::cosine(2, 1.0)));
        let s = ProcessSpec::CircleWalk(CircleWalk::sqrt2_minus_1());
        assert!(!is_martingale(&s, &F::cosine(1, 1.0)));
    }
}
