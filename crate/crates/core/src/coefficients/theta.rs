use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{integrate_unit, Tolerance};
use crate::processes::{transfer, FiniteChain, FourierFn, IidLaw, ProcessSpec, DEFAULT_PRODUCT_CAP};

type F = FourierFn<f64>;

/// Windowed lower bound of `θ_{i,j}(p)` with its maximizing index tuple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaReport {
    pub i: usize,
    pub j: usize,
    pub gap: usize,
    pub window: usize,
    pub value: f64,
    /// Maximizing `(k₁, …, k_j)` with `k₁ = 0` (or `k_i = 0` reference when `i = 0`).
    pub argmax: Vec<usize>,
    /// ℓ¹ mass dropped by capped products, summed over the search.
    pub dropped_l1: f64,
}

/// Nondecreasing gap vectors `d` of length `len` with entries ≥ 0, the first
/// at least `first_min`, and total at most `first_min + window`.
fn gap_vectors(len: usize, first_min: usize, window: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(len);
    fn rec(len: usize, first_min: usize, budget: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == len {
            out.push(cur.clone());
            return;
        }
        let lo = if cur.is_empty() { first_min } else { 0 };
        let used: usize = cur.iter().sum();
        for d in lo..=budget.saturating_sub(used) {
            if used + d > budget {
                break;
            }
            cur.push(d);
            rec(len, first_min, budget, cur, out);
            cur.pop();
        }
    }
    rec(len, first_min, first_min + window, &mut cur, &mut out);
    out
}

/// `θ_{i,j}(p)` maximized over `0 = k₁ ≤ … ≤ k_i ≤ window` and
/// `k_i + p ≤ k_{i+1} ≤ … ≤ k_j ≤ k_i + p + window`.
pub fn theta_coeff(spec: &ProcessSpec, f: &F, i: usize, j: usize, gap: usize, window: usize) -> Result<ThetaReport> {
    if i >= j || j > 4 {
        return Err(Error::Domain(format!("theta needs 0 ≤ i < j ≤ 4, got ({i}, {j})")));
    }
    spec.validate()?;
    let past = if i == 0 { vec![Vec::new()] } else { gap_vectors(i - 1, 0, window) };
    let future = gap_vectors(j - i, gap, window);
    let tuples: Vec<(usize, usize)> = (0..past.len()).flat_map(|a| (0..future.len()).map(move |b| (a, b))).collect();
    let evals: Vec<Result<(f64, f64)>> = tuples
        .par_iter()
        .map(|&(a, b)| theta_term(spec, f, i, &past[a], &future[b]))
        .collect();
    let mut best = -1.0;
    let mut argmax = Vec::new();
    let mut dropped = 0.0;
    for (&(a, b), r) in tuples.iter().zip(evals) {
        let (v, d) = r?;
        dropped += d;
        if v > best {
            best = v;
            let mut ks = vec![0usize];
            if i == 0 {
                ks.clear();
            }
            for &g in &past[a] {
                ks.push(ks.last().unwrap() + g);
            }
            let base = ks.last().copied().unwrap_or(0);
            let mut k = base;
            for &g in &future[b] {
                k += g;
                ks.push(k);
            }
            argmax = ks;
        }
    }
    Ok(ThetaReport { i, j, gap, window, value: best.max(0.0), argmax, dropped_l1: dropped })
}

fn theta_term(spec: &ProcessSpec, f: &F, i: usize, past: &[usize], future: &[usize]) -> Result<(f64, f64)> {
    match spec {
        ProcessSpec::FiniteChain(chain) => Ok((chain_term(chain, i, past, future), 0.0)),
        ProcessSpec::Iid(law) if !law.uses_observable() => iid_law_term(law, i, past, future),
        _ => fourier_term(spec, f, i, past, future),
    }
}

/// Conditional expectation of the centered future product given the state
/// at time `k_i`, as a Fourier observable.
fn future_fn(spec: &ProcessSpec, f: &F, future: &[usize]) -> Result<(F, f64)> {
    let mut dropped = 0.0;
    let mut h = f.clone();
    for &g in future[1..].iter().rev() {
        let t = f.product(&transfer(spec, &h, g)?, DEFAULT_PRODUCT_CAP);
        dropped += t.dropped_l1;
        h = t.value;
    }
    h = transfer(spec, &h, future[0])?;
    let mean = h.constant;
    Ok((h.add_constant(-mean), dropped))
}

/// Reversed one-step kernel applied `d` times to a pointwise function.
fn reverse_apply<'a>(
    spec: &'a ProcessSpec,
    d: usize,
    g: Box<dyn Fn(f64) -> f64 + Sync + Send + 'a>,
) -> Result<Box<dyn Fn(f64) -> f64 + Sync + Send + 'a>> {
    if d == 0 {
        return Ok(g);
    }
    Ok(match spec {
        // the past of the doubling chain is deterministic: ξ_{k-1} = 2ξ_k mod 1
        ProcessSpec::DoublingMap => {
            let s = 2f64.powi(d as i32);
            Box::new(move |x| g((x * s).fract()))
        }
        // the circle walk is reversible with symmetric steps
        ProcessSpec::CircleWalk(w) => {
            let w = *w;
            let weights: Vec<f64> = (0..=d)
                .map(|r| {
                    let lc = ln_choose(d, r) - d as f64 * std::f64::consts::LN_2;
                    lc.exp()
                })
                .collect();
            Box::new(move |x| {
                (0..=d)
                    .map(|r| weights[r] * g((x + w.frac_mult(2 * r as i64 - d as i64)).fract()))
                    .sum()
            })
        }
        ProcessSpec::Iid(_) => {
            let tol = Tolerance::new(1e-12, 1e-10, 40)?;
            let c = integrate_unit(|x| g(x), &tol)?.value;
            Box::new(move |_| c)
        }
        ProcessSpec::FiniteChain(_) => unreachable!(),
    })
}

fn ln_choose(n: usize, k: usize) -> f64 {
    (1..=k).map(|t| ((n - k + t) as f64).ln() - (t as f64).ln()).sum()
}

fn fourier_term(spec: &ProcessSpec, f: &F, i: usize, past: &[usize], future: &[usize]) -> Result<(f64, f64)> {
    let (c, dropped) = future_fn(spec, f, future)?;
    if c.coeff_l1() < 1e-15 {
        return Ok((0.0, dropped));
    }
    let tol = Tolerance::new(1e-11, 1e-9, 48)?;
    if i == 0 {
        return Ok((integrate_unit(|x| c.eval(x).abs(), &tol)?.value, dropped));
    }
    let mut w: Box<dyn Fn(f64) -> f64 + Sync + Send> = Box::new(|_| 1.0);
    for &d in past {
        let inner = w;
        let g: Box<dyn Fn(f64) -> f64 + Sync + Send> = Box::new(move |y| f.eval(y).abs() * inner(y));
        w = reverse_apply(spec, d, g)?;
    }
    let v = integrate_unit(|x| (f.eval(x) * c.eval(x)).abs() * w(x), &tol)?.value;
    Ok((v, dropped))
}

fn chain_term(chain: &FiniteChain, i: usize, past: &[usize], future: &[usize]) -> f64 {
    let v = &chain.values;
    let mut h = v.clone();
    for &g in future[1..].iter().rev() {
        let t = chain.apply_pow(&h, g);
        h = v.iter().zip(&t).map(|(a, b)| a * b).collect();
    }
    h = chain.apply_pow(&h, future[0]);
    let mean = chain.expect(&h);
    let c: Vec<f64> = h.iter().map(|x| x - mean).collect();
    let rev = chain.reversed();
    let n = chain.n_states();
    let mut w = vec![1.0; n];
    if i > 0 {
        for &d in past {
            let mut g: Vec<f64> = v.iter().zip(&w).map(|(a, b)| a.abs() * b).collect();
            for _ in 0..d {
                g = rev.iter().map(|row| row.iter().zip(&g).map(|(p, x)| p * x).sum()).collect();
            }
            w = g;
        }
    }
    let lead: Vec<f64> = if i == 0 { vec![1.0; n] } else { v.iter().map(|x| x.abs()).collect() };
    (0..n).map(|s| chain.stationary[s] * (lead[s] * c[s]).abs() * w[s]).sum()
}

/// Explicit i.i.d. laws: the future given the present is independent unless
/// it shares the present index.
fn iid_law_term(law: &IidLaw, i: usize, past: &[usize], future: &[usize]) -> Result<(f64, f64)> {
    if future[0] >= 1 {
        return Ok((0.0, 0.0));
    }
    let pmf = match law {
        IidLaw::Rademacher => crate::wasserstein::FinitePmf::new(vec![-1.0, 1.0], vec![0.5, 0.5])?,
        IidLaw::Discrete { pmf } => pmf.clone(),
        _ => return Err(Error::Unsupported("theta with gap 0 needs a discrete marginal law".into())),
    };
    let n = pmf.atoms.len();
    let rows = vec![pmf.probs.clone(); n];
    let chain = FiniteChain::with_stationary(rows, pmf.probs.clone(), pmf.atoms.clone())?;
    Ok((chain_term(&chain, i, past, future), 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::processes::CircleWalk;
    use std::f64::consts::PI;

    #[test]
    fn gap_enumeration() {
        assert_eq!(gap_vectors(1, 2, 1), vec![vec![2], vec![3]]);
        assert_eq!(gap_vectors(2, 1, 1).len(), 3);
        assert_eq!(gap_vectors(0, 0, 3), vec![Vec::<usize>::new()]);
    }

    #[test]
    fn doubling_examples() {
        let d = ProcessSpec::DoublingMap;
        let r = theta_coeff(&d, &F::cosine(1, 1.0), 0, 1, 1, 4).unwrap();
        assert_eq!(r.value, 0.0);
        let r = theta_coeff(&d, &F::cosine(2, 1.0), 0, 1, 1, 4).unwrap();
        assert!((r.value - 2.0 / PI).abs() < 1e-9);
        assert_eq!(r.argmax, vec![1]);
    }

    #[test]
    fn iid_vanishes() {
        let s = ProcessSpec::Iid(IidLaw::Rademacher);
        for (i, j) in [(0, 1), (1, 2), (1, 3), (2, 4)] {
            assert_eq!(theta_coeff(&s, &F::zero(), i, j, 1, 2).unwrap().value, 0.0);
        }
        let s = ProcessSpec::Iid(IidLaw::Lebesgue);
        assert_eq!(theta_coeff(&s, &F::cosine(1, 1.0), 1, 2, 1, 2).unwrap().value, 0.0);
    }

    #[test]
    fn window_monotone_and_past_weighting() {
        let d = ProcessSpec::DoublingMap;
        let f = F::new(0.0, vec![0.0, 1.0, 0.0, 0.5], vec![0.3]);
        let mut last = 0.0;
        for w in 0..4 {
            let v = theta_coeff(&d, &f, 1, 2, 1, w).unwrap().value;
            assert!(v >= last);
            last = v;
        }
        // i = 1, j = 2, p = 1, window 0: ‖f · K f‖₁ against a Riemann sum
        let kf = transfer(&d, &f, 1).unwrap();
        let m = 200_000;
        let riemann: f64 = (0..m).map(|t| {
            let x = (t as f64 + 0.5) / m as f64;
            (f.eval(x) * kf.eval(x)).abs()
        }).sum::<f64>() / m as f64;
        let v = theta_coeff(&d, &f, 1, 2, 1, 0).unwrap().value;
        assert!((v - riemann).abs() < 1e-8);
    }

    #[test]
    fn circle_past_weight_against_riemann() {
        // i = 2, j = 3, window 1 includes k = (0, 1, 2): E|X₀ X₁ c(ξ₁)|
        let w = CircleWalk::sqrt2_minus_1();
        let s = ProcessSpec::CircleWalk(w);
        let f = F::cosine(1, 1.0);
        let r = theta_coeff(&s, &f, 2, 3, 1, 1).unwrap();
        let ks = &r.argmax;
        assert_eq!(ks.len(), 3);
        // recompute the selected term on a grid over (ξ_{k_2}) with the past averaged over ±a steps
        let c = {
            let g = transfer(&s, &f, ks[2] - ks[1]).unwrap();
            g.add_constant(-g.constant)
        };
        let d = ks[1] - ks[0];
        let m = 100_000;
        let mut acc = 0.0;
        for t in 0..m {
            let x = (t as f64 + 0.5) / m as f64;
            let past = if d == 0 {
                f.eval(x).abs()
            } else {
                0.5 * (f.eval(x + w.a).abs() + f.eval(x - w.a).abs())
            };
            acc += (f.eval(x) * c.eval(x)).abs() * past;
        }
        assert!((r.value - acc / m as f64).abs() < 1e-8, "{} vs {}", r.value, acc / m as f64);
    }

    #[test]
    fn chain_iid_rows_vanish() {
        let c = FiniteChain::new(vec![vec![0.3, 0.7], vec![0.3, 0.7]], vec![0.7, -0.3]).unwrap();
        let s = ProcessSpec::FiniteChain(c);
        assert!(theta_coeff(&s, &F::zero(), 1, 3, 1, 2).unwrap().value < 1e-15);
        assert!(theta_coeff(&s, &F::zero(), 0, 2, 2, 2).unwrap().value < 1e-15);
    }
}
