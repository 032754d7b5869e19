use crate::error::{domain, Result};
use crate::numerics::{cdf, cdf_antideriv, pdf, quantile};
use crate::real::Real;
use crate::wasserstein::{EmpiricalSample, FinitePmf};

/// `φ(q(i/m))` for `i = 0..=m`, the standard-Gaussian antiderivative of the
/// quantile function at slab boundaries (up to sign). Reusable across
/// samples of the same size, e.g. bootstrap resamples.
#[derive(Debug, Clone)]
pub struct GaussQuantileTable<T> {
    phi_q: Vec<T>,
}

impl<T: Real> GaussQuantileTable<T> {
    pub fn new(m: usize) -> Result<Self> {
        let mf = T::from_usize(m).unwrap();
        let mut phi_q = Vec::with_capacity(m + 1);
        phi_q.push(T::zero());
        for i in 1..m {
            phi_q.push(pdf(quantile(T::from_usize(i).unwrap() / mf)?));
        }
        if m > 0 {
            phi_q.push(T::zero());
        }
        Ok(Self { phi_q })
    }

    pub fn size(&self) -> usize {
        self.phi_q.len().saturating_sub(1)
    }
}

/// `∫₀¹ |F̂⁻¹(u) − σ q(u)| du`, exact slab by slab.
pub fn w1_sample_gauss<T: Real>(s: &EmpiricalSample<T>, sigma: T) -> Result<T> {
    let table = GaussQuantileTable::new(s.len())?;
    w1_sample_gauss_with(&table, s, sigma)
}

pub fn w1_sample_gauss_with<T: Real>(table: &GaussQuantileTable<T>, s: &EmpiricalSample<T>, sigma: T) -> Result<T> {
    if !(sigma > T::zero()) || !sigma.is_finite() {
        return domain("sigma must be positive");
    }
    let m = s.len();
    if table.size() != m {
        return domain("quantile table size does not match the sample");
    }
    let mf = T::from_usize(m).unwrap();
    let x = s.values();
    // G(u) = ∫ σ q = −σ φ(q(u))
    let g = |i: usize| -sigma * table.phi_q[i];
    let mut total = T::zero();
    let mut lo = 0;
    while lo < m {
        let v = x[lo];
        let mut hi = lo + 1;
        while hi < m && x[hi] == v {
            hi += 1;
        }
        let l = T::from_usize(lo).unwrap() / mf;
        let h = T::from_usize(hi).unwrap() / mf;
        let z = v / sigma;
        let c = cdf(z);
        let (gl, gh) = (g(lo), g(hi));
        let piece = if c <= l {
            (gh - gl) - v * (h - l)
        } else if c >= h {
            v * (h - l) - (gh - gl)
        } else {
            let gc = -sigma * pdf(z);
            v * (c - l) - (gc - gl) + (gh - gc) - v * (h - c)
        };
        total = total + piece.max(T::zero());
        lo = hi;
    }
    Ok(total)
}

/// `∫ |F_p(x) − Φ(x/σ)| dx` in closed form between consecutive atoms.
pub fn w1_pmf_gauss<T: Real>(p: &FinitePmf<T>, sigma: T) -> Result<T> {
    if !(sigma > T::zero()) || !sigma.is_finite() {
        return domain("sigma must be positive");
    }
    let a = &p.atoms;
    let k = a.len();
    let half = T::lit(0.5);
    // upper tails t_j = P(X > a_j), accumulated from the right
    let mut tail = vec![T::zero(); k];
    for j in (0..k - 1).rev() {
        tail[j] = tail[j + 1] + p.probs[j + 1];
    }
    let big_i = |x: T| cdf_antideriv(x / sigma);
    let mut total = sigma * big_i(a[0]) + sigma * big_i(-a[k - 1]);
    let mut c = T::zero();
    for j in 0..k - 1 {
        c = c + p.probs[j];
        let (l, r) = (a[j], a[j + 1]);
        let t = tail[j];
        let piece = if c <= half {
            // |c − Φ| on [l, r], ∫Φ = σ(I(r/σ) − I(l/σ))
            let area = |u: T, v: T| sigma * (big_i(v) - big_i(u));
            let xs = if c <= T::zero() { T::neg_infinity() } else { sigma * quantile(c)? };
            split(l, r, xs, c, area, false)
        } else {
            // |t − S| on [l, r], ∫S = σ(I(−l/σ) − I(−r/σ))
            let area = |u: T, v: T| sigma * (big_i(-u) - big_i(-v));
            let xs = if t <= T::zero() { T::infinity() } else { -sigma * quantile(t)? };
            split(l, r, xs, t, area, true)
        };
        total = total + piece;
    }
    Ok(total)
}

/// `∫_l^r |level − G(x)|` for a monotone `G` with `G(xs) = level`; `area(u, v)`
/// is `∫_u^v G`. `decreasing` flips the side on which `G` exceeds the level.
fn split<T: Real, A: Fn(T, T) -> T>(l: T, r: T, xs: T, level: T, area: A, decreasing: bool) -> T {
    let below = |u: T, v: T| level * (v - u) - area(u, v);
    let above = |u: T, v: T| area(u, v) - level * (v - u);
    let (first, second): (&dyn Fn(T, T) -> T, &dyn Fn(T, T) -> T) =
        if decreasing { (&above, &below) } else { (&below, &above) };
    let out = if xs <= l {
        second(l, r)
    } else if xs >= r {
        first(l, r)
    } else {
        first(l, xs) + second(xs, r)
    };
    out.max(T::zero())
}

/// Quantile-coupling W1 between two empirical laws.
pub fn w1_sample_sample<T: Real>(s1: &EmpiricalSample<T>, s2: &EmpiricalSample<T>) -> T {
    let (x, y) = (s1.values(), s2.values());
    let (m, k) = (x.len(), y.len());
    if m == k {
        let sum: T = x.iter().zip(y).map(|(&a, &b)| (a - b).abs()).sum();
        return sum / T::from_usize(m).unwrap();
    }
    // breakpoints i/m = i·k/(mk) and j/k = j·m/(mk)
    let (mu, ku) = (m as u128, k as u128);
    let denom = T::from_u128(mu * ku).unwrap();
    let (mut i, mut j) = (0usize, 0usize);
    let mut pos: u128 = 0;
    let mut total = T::zero();
    while i < m && j < k {
        let end_i = (i as u128 + 1) * ku;
        let end_j = (j as u128 + 1) * mu;
        let end = end_i.min(end_j);
        let w = T::from_u128(end - pos).unwrap();
        total = total + w * (x[i] - y[j]).abs();
        pos = end;
        if end == end_i {
            i += 1;
        }
        if end == end_j {
            j += 1;
        }
    }
    total / denom
}

/// `sup_x |F̂(x) − Φ(x/σ)|`.
pub fn ks_sample_gauss<T: Real>(s: &EmpiricalSample<T>, sigma: T) -> Result<T> {
    if !(sigma > T::zero()) || !sigma.is_finite() {
        return domain("sigma must be positive");
    }
    let mf = T::from_usize(s.len()).unwrap();
    let mut best = T::zero();
    for (i, &x) in s.values().iter().enumerate() {
        let f = cdf(x / sigma);
        let lo = T::from_usize(i).unwrap() / mf;
        let hi = T::from_usize(i + 1).unwrap() / mf;
        best = best.max((hi - f).abs()).max((lo - f).abs());
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{integrate_pieces, Tolerance};

    const MAD: f64 = 0.7978845608028654;

    fn dual_quadrature(s: &EmpiricalSample<f64>, sigma: f64) -> f64 {
        let mut breaks = vec![s.min() - 10.0 * sigma];
        breaks.extend(s.values().iter().copied());
        breaks.push(s.max() + 10.0 * sigma);
        breaks.dedup();
        let tol = Tolerance::new(1e-12, 1e-12, 50).unwrap();
        integrate_pieces(|x| (s.cdf(x) - cdf(x / sigma)).abs(), &breaks, &tol).unwrap().value
    }

    #[test]
    fn point_mass_gives_mean_abs_deviation() {
        let s = EmpiricalSample::new(vec![0.0]).unwrap();
        assert!((w1_sample_gauss(&s, 1.0).unwrap() - MAD).abs() < 1e-14);
        assert!((w1_pmf_gauss(&FinitePmf::point_mass(0.0), 1.0).unwrap() - MAD).abs() < 1e-14);
        assert!(w1_sample_gauss(&s, 0.0).is_err());
        assert!(w1_pmf_gauss(&FinitePmf::point_mass(0.0), -1.0).is_err());
    }

    #[test]
    fn rademacher_sample_against_quadrature() {
        let s = EmpiricalSample::new(vec![-1.0, 1.0]).unwrap();
        let v = w1_sample_gauss(&s, 1.0).unwrap();
        assert!((v - dual_quadrature(&s, 1.0)).abs() < 1e-10);
        let p = FinitePmf::new(vec![-1.0, 1.0], vec![0.5, 0.5]).unwrap();
        assert!((w1_pmf_gauss(&p, 1.0).unwrap() - v).abs() < 1e-13);
        assert!(w1_sample_gauss(&s, 100.0).unwrap() > w1_sample_gauss(&s, 10.0).unwrap());
    }

    #[test]
    fn two_step_law_against_quadrature() {
        let r = std::f64::consts::SQRT_2;
        let p = FinitePmf::new(vec![-r, 0.0, r], vec![0.25, 0.5, 0.25]).unwrap();
        let tol = Tolerance::new(1e-13, 1e-13, 50).unwrap();
        let oracle = integrate_pieces(|x| (p.cdf(x) - cdf(x)).abs(), &[-12.0, -r, 0.0, r, 12.0], &tol)
            .unwrap()
            .value;
        let v = w1_pmf_gauss(&p, 1.0).unwrap();
        assert!((v - oracle).abs() < 1e-8, "{v} vs {oracle}");
        let flipped = FinitePmf::new(p.atoms.iter().map(|a| -a).collect(), p.probs.clone()).unwrap();
        assert!((w1_pmf_gauss(&flipped, 1.0).unwrap() - v).abs() < 1e-15);
    }

    #[test]
    fn ties_match_pmf_form() {
        let s = EmpiricalSample::new(vec![-1.0f64, -1.0, -1.0, 0.5, 2.0, 2.0]).unwrap();
        let p = FinitePmf::new(vec![-1.0, 0.5, 2.0], vec![0.5, 1.0 / 6.0, 1.0 / 3.0]).unwrap();
        let a = w1_sample_gauss(&s, 0.8).unwrap();
        let b = w1_pmf_gauss(&p, 0.8).unwrap();
        assert!((a - b).abs() < 1e-13);
        assert!((a - dual_quadrature(&s, 0.8)).abs() < 1e-9);
    }

    #[test]
    fn sample_sample_examples() {
        let a = EmpiricalSample::new(vec![0.0f64]).unwrap();
        let b = EmpiricalSample::new(vec![1.0]).unwrap();
        assert_eq!(w1_sample_sample(&a, &b), 1.0);
        let c = EmpiricalSample::new(vec![0.0f64, 0.0]).unwrap();
        let d = EmpiricalSample::new(vec![0.0, 2.0]).unwrap();
        assert_eq!(w1_sample_sample(&c, &d), 1.0);
        assert_eq!(w1_sample_sample(&d, &d), 0.0);
        // unequal sizes: {0,1,2} vs {0,2}: u-pieces 1/3,1/6,1/6,1/3 with gaps 0,1,0... explicit
        let e = EmpiricalSample::new(vec![0.0, 1.0, 2.0]).unwrap();
        // (0,1/3]: 0-0, (1/3,1/2]: 1-0, (1/2,2/3]: 1-2, (2/3,1]: 2-2
        assert!((w1_sample_sample(&e, &d) - (1.0 / 6.0 + 1.0 / 6.0)).abs() < 1e-15);
        // same law at different sizes
        assert_eq!(w1_sample_sample(&c, &a), 0.0);
    }

    #[test]
    fn ks_examples() {
        let s = EmpiricalSample::new(vec![0.0]).unwrap();
        assert_eq!(ks_sample_gauss(&s, 1.0).unwrap(), 0.5);
        let m = 50;
        let q: Vec<f64> = (0..m).map(|i| 2.0 * quantile((i as f64 + 0.5) / m as f64).unwrap()).collect();
        let s = EmpiricalSample::new(q).unwrap();
        assert!((ks_sample_gauss(&s, 2.0).unwrap() - 0.5 / m as f64).abs() < 1e-12);
    }

    #[test]
    fn f32_path() {
        let s = EmpiricalSample::new(vec![0.0f32]).unwrap();
        assert!((w1_sample_gauss(&s, 1.0f32).unwrap() - MAD as f32).abs() < 1e-5);
        let p = FinitePmf::new(vec![-1.0f32, 1.0], vec![0.5, 0.5]).unwrap();
        let d = w1_pmf_gauss(&p, 1.0f32).unwrap() as f64;
        let e = w1_pmf_gauss(&FinitePmf::new(vec![-1.0, 1.0], vec![0.5, 0.5]).unwrap(), 1.0).unwrap();
        assert!((d - e).abs() < 1e-5);
    }
}
