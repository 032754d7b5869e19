use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::backend::{with_backend, Backend, Engine};
use super::report::{BoundReport, NamedTerm, Theorem};
use crate::error::{Error, Result};
use crate::numerics::Tolerance;
use crate::processes::{FourierFn, ProcessSpec};

/// Marginal and long-run moments of the observed sequence.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentSummary {
    /// Long-run variance σ².
    pub sigma2: f64,
    /// Marginal variance `E X₀²`.
    pub var0: f64,
    /// `E|X₀|³`.
    pub abs3: f64,
    /// `E|X₀|³ / σ²`.
    pub lambda: f64,
    /// Largest `|X₀|` seen on the evaluation grid.
    pub linf: f64,
    /// Certified upper bound for `‖X₀‖∞`.
    pub linf_upper: f64,
}

/// Per-`m` breakdown of the nonadapted correction D′.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DPrime {
    pub total: f64,
    pub resolvent_part: Vec<f64>,
    pub conditional_part: Vec<f64>,
}

/// Evaluates bound ingredients for one process and observable.
pub struct Evaluator {
    engine: Engine,
    tol: Tolerance<f64>,
}

fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

impl Evaluator {
    pub fn new(spec: &ProcessSpec, f: &FourierFn<f64>) -> Result<Self> {
        Ok(Self { engine: Engine::new(spec, f)?, tol: Tolerance::default() })
    }

    pub fn with_tolerance(mut self, tol: Tolerance<f64>) -> Self {
        self.tol = tol;
        self
    }

    /// ℓ¹ mass dropped by capped Fourier products so far.
    pub fn truncation_l1(&self) -> f64 {
        with_backend!(&self.engine, b => b.dropped())
    }

    pub fn moments(&self) -> Result<MomentSummary> {
        with_backend!(&self.engine, b => moments_in(b, &self.tol))
    }

    pub fn u_norms(&self, m: usize) -> Result<(f64, f64)> {
        with_backend!(&self.engine, b => {
            require_mds(b)?;
            let var0 = b.mean(&b.mul(&b.x0(), &b.x0()));
            let u = u_seq(b, m, var0)?.pop().unwrap();
            pair_norms(b, &u, &self.tol)
        })
    }

    pub fn w_norms(&self, m: usize) -> Result<(f64, f64)> {
        with_backend!(&self.engine, b => {
            let sigma2 = b.long_run_variance()?;
            let w = w_seq(b, m, sigma2)?.pop().unwrap();
            pair_norms(b, &w, &self.tol)
        })
    }

    pub fn thm21_bound(&self, n: u64) -> Result<BoundReport> {
        if n == 0 {
            return Err(Error::Domain("n must be at least 1".into()));
        }
        with_backend!(&self.engine, b => {
            require_mds(b)?;
            let mo = moments_in(b, &self.tol)?;
            let cutoff = isqrt(2 * n) as usize;
            let u = u_seq(b, cutoff, mo.var0)?;
            let per_m = series_terms(b, &u, mo.sigma2, &self.tol)?;
            Ok(assemble(Theorem::T21, n, &mo, per_m, None, b.dropped()))
        })
    }

    pub fn dprime(&self, n: u64) -> Result<DPrime> {
        with_backend!(&self.engine, b => dprime_in(b, n, &self.tol))
    }

    pub fn thm22_bound(&self, n: u64) -> Result<BoundReport> {
        if n == 0 {
            return Err(Error::Domain("n must be at least 1".into()));
        }
        with_backend!(&self.engine, b => {
            let mo = moments_in(b, &self.tol)?;
            let cutoff = isqrt(2 * n) as usize;
            let w = w_seq(b, cutoff, mo.sigma2)?;
            let per_m = series_terms(b, &w, mo.sigma2, &self.tol)?;
            let d = dprime_in(b, n, &self.tol)?;
            Ok(assemble(Theorem::T22, n, &mo, per_m, Some(d), b.dropped()))
        })
    }

    /// `(‖E₀(S_m²) − mσ²‖₁, ‖E₀(J_m)‖₁)`.
    pub fn thm23_terms(&self, m: usize) -> Result<(f64, f64)> {
        with_backend!(&self.engine, b => {
            let sigma2 = b.long_run_variance()?;
            let (d, j) = thm23_seq(b, m, sigma2)?;
            let dn = b.abs_pow_mean(d.last().unwrap(), 1.0, &self.tol)?;
            let jn = b.abs_pow_mean(j.last().unwrap(), 1.0, &self.tol)?;
            Ok((dn, jn))
        })
    }

    /// Explicit part of the bounded-variable bound: the series
    /// `Σ_{m ≤ √(2n)} (2 + L)/(mσ) ‖E₀(S_m²) − mσ²‖₁` with `L = ‖X₀‖∞/σ`.
    /// The unspecified constant term is not included. Diagnostics carry the
    /// partial sum `Σ_{m ≤ √(2n)} ‖E₀(J_m)‖₁` and, for the polynomial-decay
    /// variant, the fitted decay exponent of `‖E₀(J_m)‖₁`.
    pub fn thm23_bound(&self, n: u64, theorem: Theorem) -> Result<BoundReport> {
        if n == 0 {
            return Err(Error::Domain("n must be at least 1".into()));
        }
        if !matches!(theorem, Theorem::T23a | Theorem::T23b) {
            return Err(Error::Domain("thm23_bound takes T23a or T23b".into()));
        }
        with_backend!(&self.engine, b => {
            let mo = moments_in(b, &self.tol)?;
            if !mo.linf_upper.is_finite() {
                return Err(Error::Precondition("observable must be bounded".into()));
            }
            let cutoff = isqrt(2 * n) as usize;
            let (d, j) = thm23_seq(b, cutoff, mo.sigma2)?;
            let sigma = mo.sigma2.sqrt();
            let big_l = mo.linf_upper / sigma;
            let tol = &self.tol;
            let per_m: Vec<f64> = (1..=cutoff)
                .into_par_iter()
                .map(|m| Ok((2.0 + big_l) / (m as f64 * sigma) * b.abs_pow_mean(&d[m], 1.0, tol)?))
                .collect::<Result<_>>()?;
            let jn: Vec<f64> = (0..=cutoff)
                .into_par_iter()
                .map(|m| b.abs_pow_mean(&j[m], 1.0, tol))
                .collect::<Result<_>>()?;
            let series: f64 = per_m.iter().sum();
            let mut r = BoundReport {
                theorem,
                n,
                total: series,
                terms: vec![NamedTerm::new("series", series)],
                per_m,
                m_cutoff: cutoff,
                dprime: None,
                diagnostics: Default::default(),
                truncation_l1: b.dropped(),
            };
            r.diagnostics.insert("big_l".into(), big_l);
            r.diagnostics.insert("resolvent_partial_sum".into(), jn.iter().sum());
            if theorem == Theorem::T23b {
                let pts: Vec<(f64, f64)> =
                    jn.iter().enumerate().skip(1).filter(|(_, v)| **v > 0.0).map(|(m, v)| (m as f64, *v)).collect();
                if let Ok(fit) = super::rate::rate_fit(&pts) {
                    r.diagnostics.insert("resolvent_decay_exponent".into(), -fit.slope);
                }
            }
            Ok(r)
        })
    }

    /// `(E|K^l(X₀²) − E X₀²|^{3/2})^{2/3}`.
    pub fn jan_norm(&self, l: usize) -> Result<f64> {
        with_backend!(&self.engine, b => {
            require_mds(b)?;
            let x2 = b.mul(&b.x0(), &b.x0());
            let var0 = b.mean(&x2);
            let d = b.add(&b.transfer(&x2, l)?, &b.constant(-var0));
            Ok(b.abs_pow_mean(&d, 1.5, &self.tol)?.powf(2.0 / 3.0))
        })
    }

    /// Third-order Edgeworth coefficient `b(l)` built from the stationary
    /// third moments up to lag `l`.
    pub fn b_l(&self, l: usize) -> Result<f64> {
        with_backend!(&self.engine, b => b_l_in(b, l))
    }
}

fn require_mds<B: Backend>(b: &B) -> Result<()> {
    if b.is_martingale() {
        Ok(())
    } else {
        Err(Error::Precondition("observable is not a martingale difference".into()))
    }
}

fn moments_in<B: Backend>(b: &B, tol: &Tolerance<f64>) -> Result<MomentSummary> {
    let x = b.x0();
    let sigma2 = b.long_run_variance()?;
    let var0 = b.mean(&b.mul(&x, &x));
    let abs3 = b.abs_pow_mean(&x, 3.0, tol)?;
    let (linf, linf_upper) = b.linf();
    Ok(MomentSummary { sigma2, var0, abs3, lambda: abs3 / sigma2, linf, linf_upper })
}

/// `U_1..U_m` with `U_k = Σ_{i=1}^k K^i(X₀²) − k·var0`; index 0 is zero.
fn u_seq<B: Backend>(b: &B, m: usize, var0: f64) -> Result<Vec<B::Obs>> {
    let x = b.x0();
    let z = b.add(&b.mul(&x, &x), &b.constant(-var0));
    partial_transfers(b, &z, m)
}

/// `W_1..W_m` with `W_k = Σ_{i=1}^k K^i(X₀² + 2X₀g − σ²)`, `g = Σ_{l≥1} K^l X₀`.
fn w_seq<B: Backend>(b: &B, m: usize, sigma2: f64) -> Result<Vec<B::Obs>> {
    let x = b.x0();
    let g = b.resolvent_tail(&x, 1)?;
    let z = b.add(&b.add(&b.mul(&x, &x), &b.scale(&b.mul(&x, &g), 2.0)), &b.constant(-sigma2));
    partial_transfers(b, &z, m)
}

fn partial_transfers<B: Backend>(b: &B, z: &B::Obs, m: usize) -> Result<Vec<B::Obs>> {
    let mut out = Vec::with_capacity(m + 1);
    let mut acc = b.constant(0.0);
    let mut k = z.clone();
    out.push(acc.clone());
    for _ in 0..m {
        k = b.transfer(&k, 1)?;
        acc = b.add(&acc, &k);
        out.push(acc.clone());
    }
    Ok(out)
}

fn pair_norms<B: Backend>(b: &B, u: &B::Obs, tol: &Tolerance<f64>) -> Result<(f64, f64)> {
    Ok((b.abs_pow_mean(u, 1.0, tol)?, b.l1_product(&b.x0(), u, tol)?))
}

/// `(‖X₀V_m‖₁ + 2σ‖V_m‖₁)/(mσ²)` for `m = 1..`, evaluated independently per `m`
/// with repeated iterates reused.
fn series_terms<B: Backend>(b: &B, v: &[B::Obs], sigma2: f64, tol: &Tolerance<f64>) -> Result<Vec<f64>> {
    let sigma = sigma2.sqrt();
    let norms = unique_norms(b, &v[1..], |o| pair_norms(b, o, tol))?;
    Ok(norms
        .iter()
        .enumerate()
        .map(|(i, (l1, xl1))| (xl1 + 2.0 * sigma * l1) / ((i + 1) as f64 * sigma2))
        .collect())
}

/// Evaluates `eval` in parallel on runs of distinct consecutive entries.
fn unique_norms<B, R, E>(_b: &B, v: &[B::Obs], eval: E) -> Result<Vec<R>>
where
    B: Backend,
    R: Clone + Send,
    E: Fn(&B::Obs) -> Result<R> + Sync,
{
    let mut heads = Vec::new();
    for i in 0..v.len() {
        if i == 0 || v[i] != v[i - 1] {
            heads.push(i);
        }
    }
    let vals: Vec<R> = heads.par_iter().map(|&i| eval(&v[i])).collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(v.len());
    let mut h = 0;
    for i in 0..v.len() {
        if h + 1 < heads.len() && heads[h + 1] == i {
            h += 1;
        }
        out.push(vals[h].clone());
    }
    Ok(out)
}

fn dprime_in<B: Backend>(b: &B, n: u64, tol: &Tolerance<f64>) -> Result<DPrime> {
    if n == 0 {
        return Err(Error::Domain("n must be at least 1".into()));
    }
    let sigma2 = b.long_run_variance()?;
    let sigma = sigma2.sqrt();
    let n = n as usize;
    let x = b.x0();
    let weight = b.add(&b.constant(1.0), &b.scale(&b.mul(&x, &x), 1.0 / sigma2));

    let mut tails = Vec::with_capacity(n);
    let mut t = b.resolvent_tail(&x, 1)?;
    for _ in 0..n {
        tails.push(t.clone());
        t = b.transfer(&t, 1)?;
    }
    let e0 = partial_transfers(b, &x, n)?;

    let r1 = unique_norms(b, &tails, |o| b.l1_product(&x, o, tol))?;
    let r2 = unique_norms(b, &e0[1..], |o| b.l1_product(&weight, o, tol))?;
    let resolvent_part: Vec<f64> = r1.iter().enumerate().map(|(i, v)| v / (sigma * ((i + 1) as f64).sqrt())).collect();
    let conditional_part: Vec<f64> = r2.iter().enumerate().map(|(i, v)| v / (2.0 * (i + 1) as f64)).collect();
    let total = resolvent_part.iter().sum::<f64>() + conditional_part.iter().sum::<f64>();
    Ok(DPrime { total, resolvent_part, conditional_part })
}

/// `E₀(S_m²) − mσ²` and `E₀(J_m) = K^m g` for `m = 0..=mmax`.
fn thm23_seq<B: Backend>(b: &B, mmax: usize, sigma2: f64) -> Result<(Vec<B::Obs>, Vec<B::Obs>)> {
    let x = b.x0();
    let x2 = b.mul(&x, &x);
    // e0[d] = Σ_{k=1}^d K^k X₀
    let e0 = partial_transfers(b, &x, mmax)?;
    let mut d = Vec::with_capacity(mmax + 1);
    for m in 0..=mmax {
        // Σ_k K^k(X₀²) + 2 Σ_{k=1}^{m-1} K^k(X₀ · e0[m-k])
        let mut acc = b.constant(-(m as f64) * sigma2);
        for k in 1..=m {
            let mut inner = x2.clone();
            if k < m {
                inner = b.add(&inner, &b.scale(&b.mul(&x, &e0[m - k]), 2.0));
            }
            acc = b.add(&acc, &b.transfer(&inner, k)?);
        }
        d.push(acc);
    }
    let g = b.resolvent_tail(&x, 1)?;
    let mut j = Vec::with_capacity(mmax + 1);
    for m in 0..=mmax {
        j.push(b.transfer(&g, m)?);
    }
    Ok((d, j))
}

fn b_l_in<B: Backend>(b: &B, l: usize) -> Result<f64> {
    let x = b.x0();
    let x2 = b.mul(&x, &x);
    let mut s = b.mean(&b.mul(&x, &x2));
    for i in 1..=l {
        let a = b.mean(&b.mul(&x, &b.transfer(&x2, i)?));
        let c = b.mean(&b.mul(&x2, &b.transfer(&x, i)?));
        s += 3.0 * (a + c);
        for j in 1..i {
            let inner = b.mul(&x, &b.transfer(&x, i - j)?);
            s += 6.0 * b.mean(&b.mul(&x, &b.transfer(&inner, j)?));
        }
    }
    Ok(s)
}

fn assemble(
    theorem: Theorem,
    n: u64,
    mo: &MomentSummary,
    per_m: Vec<f64>,
    dprime: Option<DPrime>,
    dropped: f64,
) -> BoundReport {
    let sigma = mo.sigma2.sqrt();
    let series: f64 = per_m.iter().sum();
    let mut terms = vec![
        NamedTerm::new("constant", 13.0 * sigma / 6.0),
        NamedTerm::new("log", mo.lambda / 6.0 * (1.0 + 2.0 * n as f64).ln()),
        NamedTerm::new("series", series),
    ];
    if let Some(d) = &dprime {
        terms.push(NamedTerm::new("dprime", d.total));
    }
    let total = terms.iter().map(|t| t.value).sum();
    let mut diagnostics = std::collections::BTreeMap::new();
    diagnostics.insert("lambda".to_string(), mo.lambda);
    diagnostics.insert("sigma2".to_string(), mo.sigma2);
    BoundReport { theorem, n, total, terms, m_cutoff: per_m.len(), per_m, dprime, diagnostics, truncation_l1: dropped }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::processes::{CircleWalk, FiniteChain, IidLaw};
    use std::f64::consts::PI;

    fn cos1() -> FourierFn<f64> {
        FourierFn::cosine(1, 1.0)
    }

    #[test]
    fn doubling_moments() {
        let e = Evaluator::new(&ProcessSpec::DoublingMap, &cos1()).unwrap();
        let m = e.moments().unwrap();
        assert!((m.var0 - 0.5).abs() < 1e-15);
        assert!((m.sigma2 - 0.5).abs() < 1e-15);
        assert!((m.abs3 - 4.0 / (3.0 * PI)).abs() < 1e-10);
        assert!((m.lambda - 8.0 / (3.0 * PI)).abs() < 1e-10);
        assert!((m.linf - 1.0).abs() < 1e-12 && m.linf_upper >= 1.0);
    }

    #[test]
    fn doubling_u_norms() {
        let e = Evaluator::new(&ProcessSpec::DoublingMap, &cos1()).unwrap();
        let (u, fu) = e.u_norms(1).unwrap();
        assert!((u - 1.0 / PI).abs() < 1e-10, "{u}");
        assert!((fu - 0.25).abs() < 1e-10, "{fu}");
        assert_eq!(e.u_norms(5).unwrap(), e.u_norms(1).unwrap());
    }

    #[test]
    fn rademacher_moments_and_bound() {
        let spec = ProcessSpec::Iid(IidLaw::Rademacher);
        let e = Evaluator::new(&spec, &cos1()).unwrap();
        let m = e.moments().unwrap();
        assert_eq!((m.sigma2, m.abs3, m.lambda), (1.0, 1.0, 1.0));
        assert_eq!(e.u_norms(3).unwrap(), (0.0, 0.0));
        let r = e.thm21_bound(100).unwrap();
        let want = 13.0 / 6.0 + (201f64).ln() / 6.0;
        assert!((r.total - want).abs() < 1e-12);
        assert_eq!(r.m_cutoff, 14);
        assert_eq!(e.jan_norm(2).unwrap(), 0.0);
        assert_eq!(e.b_l(4).unwrap(), 0.0);
    }

    #[test]
    fn gaussian_law_handled() {
        let spec = ProcessSpec::Iid(IidLaw::Gaussian { variance: 4.0 });
        let e = Evaluator::new(&spec, &cos1()).unwrap();
        let m = e.moments().unwrap();
        assert!((m.abs3 - 8.0 * 2.0 * (2.0 / PI).sqrt()).abs() < 1e-8);
        assert_eq!(e.w_norms(3).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn non_mds_rejected() {
        let e = Evaluator::new(&ProcessSpec::DoublingMap, &FourierFn::cosine(2, 1.0)).unwrap();
        assert!(matches!(e.u_norms(1), Err(Error::Precondition(_))));
        assert!(matches!(e.thm21_bound(10), Err(Error::Precondition(_))));
        assert!(matches!(e.jan_norm(1), Err(Error::Precondition(_))));
    }

    #[test]
    fn report_invariants() {
        let e = Evaluator::new(&ProcessSpec::DoublingMap, &cos1()).unwrap();
        let r = e.thm21_bound(4096).unwrap();
        assert_eq!(r.m_cutoff, 90);
        assert_eq!(r.per_m.len(), 90);
        let s: f64 = r.terms.iter().map(|t| t.value).sum();
        assert_eq!(r.total, s);
        // U_m = U_1 so the m-th term is c/m
        assert!((r.per_m[9] * 10.0 - r.per_m[0]).abs() < 1e-12);
    }

    #[test]
    fn w_equals_u_for_mds() {
        let e = Evaluator::new(&ProcessSpec::DoublingMap, &cos1()).unwrap();
        for m in 1..4 {
            let (a, b) = e.u_norms(m).unwrap();
            let (c, d) = e.w_norms(m).unwrap();
            assert!((a - c).abs() < 1e-12 && (b - d).abs() < 1e-12);
        }
        let d = e.dprime(50).unwrap();
        assert_eq!(d.total, 0.0);
    }

    #[test]
    fn b_l_doubling() {
        let e = Evaluator::new(&ProcessSpec::DoublingMap, &cos1()).unwrap();
        assert!((e.b_l(0).unwrap()).abs() < 1e-15);
        for l in 1..5 {
            assert!((e.b_l(l).unwrap() - 0.75).abs() < 1e-14);
        }
    }

    #[test]
    fn b_l_stabilises_for_doubling() {
        // increments vanish once 2^(l+1) > K(K+1), K the top frequency
        let f = FourierFn::new(0.0, vec![0.3, -0.2, 0.5], vec![0.1, 0.0, -0.4]);
        let e = Evaluator::new(&ProcessSpec::DoublingMap, &f).unwrap();
        let b3 = e.b_l(3).unwrap();
        for l in 4..7 {
            assert_eq!(e.b_l(l).unwrap(), b3);
        }
        // 2^l > K alone is not enough: E(X₀X₂X₃) = −0.0055 moves b(3)
        let b2 = e.b_l(2).unwrap();
        assert!((b3 - b2 + 0.033).abs() < 1e-14);
    }

    #[test]
    fn circle_walk_bound_finite() {
        let spec = ProcessSpec::CircleWalk(CircleWalk::sqrt2_minus_1());
        let e = Evaluator::new(&spec, &cos1()).unwrap();
        let r = e.thm22_bound(64).unwrap();
        assert!(r.total.is_finite() && r.total > 0.0);
        let d = r.dprime.as_ref().unwrap();
        assert_eq!(d.resolvent_part.len(), 64);
        let (a, _) = e.thm23_terms(3).unwrap();
        assert!(a.is_finite());
    }

    #[test]
    fn thm23_iid_lebesgue_is_zero_drift() {
        let spec = ProcessSpec::Iid(IidLaw::Lebesgue);
        let e = Evaluator::new(&spec, &cos1()).unwrap();
        let (d, j) = e.thm23_terms(4).unwrap();
        assert!(j < 1e-15);
        assert!(d < 1e-9);
    }

    #[test]
    fn thm23_uses_sup_norm() {
        let e = Evaluator::new(&ProcessSpec::DoublingMap, &cos1()).unwrap();
        let r = e.thm23_bound(8, Theorem::T23a).unwrap();
        assert_eq!(r.m_cutoff, 4);
        // L = √2, σ = 1/√2, ‖E₀(S_m²) − mσ²‖₁ = 1/π for every m
        let l = r.diagnostics["big_l"];
        assert!((l - 2f64.sqrt()).abs() < 1e-9);
        let want: f64 = (1..=4).map(|m| (2.0 + l) / (m as f64 / 2f64.sqrt()) / PI).sum();
        assert!((r.total - want).abs() < 1e-9);
        assert_eq!(r.diagnostics["resolvent_partial_sum"], 0.0);
        assert!(e.thm23_bound(8, Theorem::T21).is_err());
        let g = Evaluator::new(&ProcessSpec::Iid(IidLaw::Gaussian { variance: 1.0 }), &cos1()).unwrap();
        assert!(matches!(g.thm23_bound(8, Theorem::T23a), Err(Error::Precondition(_))));
    }

    #[test]
    fn chain_terms() {
        // two-state symmetric chain on ±1 with flip probability 0.3
        let c = FiniteChain::new(vec![vec![0.7, 0.3], vec![0.3, 0.7]], vec![-1.0, 1.0]).unwrap();
        let e = Evaluator::new(&ProcessSpec::FiniteChain(c), &cos1()).unwrap();
        let m = e.moments().unwrap();
        // correlation 0.4 per step: σ² = (1 + 0.4)/(1 − 0.4)
        assert!((m.sigma2 - 1.4 / 0.6).abs() < 1e-10);
        let (_, j) = e.thm23_terms(2).unwrap();
        // K²g with g = 0.4/0.6·x
        assert!((j - 0.16 * 0.4 / 0.6).abs() < 1e-10);
        assert!(e.thm22_bound(16).unwrap().total.is_finite());
    }
}
