use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::processes::{FiniteChain, ProcessSpec};

/// Branch count limit: the conditional law of `ξ_i` given `ξ₀` has `2^i` atoms.
const MAX_DOUBLING_INDEX: usize = 14;
const MAX_WORK: f64 = 4e9;

/// Lower bound of `α(M₀, (ξ_{i₁}, …, ξ_{i_l}))` maximized over thresholds.
///
/// For the doubling chain, `ξ_{i_l}` given `ξ₀ = y` is uniform on the points
/// `(y + m)/2^{i_l}` and earlier coordinates follow deterministically by
/// doubling, so the conditional expectation is a step function of `y` with one
/// jump per coordinate and integrates exactly. Thresholds range over the
/// dyadic grid of mesh `2^-grid` joined with the branch midpoints
/// `(m + ½)/2^{i_j}` when `i_j ≤ grid`. For finite chains `ξ` is the state
/// index and the search is exhaustive.
pub fn alpha_exact(spec: &ProcessSpec, indices: &[usize], grid: u32) -> Result<f64> {
    if indices.is_empty() || indices.len() > 3 {
        return Err(Error::Domain("alpha_exact takes one to three indices".into()));
    }
    if indices.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain("indices must be strictly increasing".into()));
    }
    let value = match spec {
        ProcessSpec::DoublingMap => doubling(indices, grid)?,
        ProcessSpec::FiniteChain(chain) => chain_alpha(chain, indices)?,
        _ => return Err(Error::Unsupported("alpha_exact supports the doubling map and finite chains".into())),
    };
    if value > 1.0 + 1e-12 {
        log::warn!("alpha estimate {value} exceeds 1, clipped");
    }
    Ok(value.min(1.0))
}

fn doubling(indices: &[usize], grid: u32) -> Result<f64> {
    let top = *indices.last().unwrap();
    if top > MAX_DOUBLING_INDEX || grid > 16 {
        return Err(Error::Resource(format!(
            "doubling-map alpha limited to indices ≤ {MAX_DOUBLING_INDEX} and grid ≤ 16"
        )));
    }
    let candidates: Vec<Vec<f64>> = indices
        .iter()
        .map(|&i| {
            let g = 1usize << grid;
            let mut c: Vec<f64> = (1..g).map(|k| k as f64 / g as f64).collect();
            if i as u32 <= grid {
                let b = 1usize << i;
                c.extend((0..b).map(|m| (m as f64 + 0.5) / b as f64));
            }
            c.sort_by(f64::total_cmp);
            c.dedup();
            c
        })
        .collect();
    let combos: f64 = candidates.iter().map(|c| c.len() as f64).product();
    let work = combos * (1u64 << top) as f64 * (indices.len() + 1) as f64 * indices.len() as f64;
    if work > MAX_WORK {
        return Err(Error::Resource(format!("threshold search needs ~{work:.1e} operations")));
    }
    let tuples = cartesian(&candidates);
    let vals: Vec<f64> = tuples.par_iter().map(|x| doubling_norm(indices, x)).collect();
    Ok(vals.into_iter().fold(0.0, f64::max))
}

fn cartesian(c: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new()];
    for list in c {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                list.iter().map(move |&x| {
                    let mut p = prefix.clone();
                    p.push(x);
                    p
                })
            })
            .collect();
    }
    out
}

/// `‖E(∏ g_{x_j}(ξ_{i_j}) | ξ₀) − E ∏ g‖₁` for thresholds `x`.
fn doubling_norm(indices: &[usize], x: &[f64]) -> f64 {
    let top = *indices.last().unwrap();
    let branches = 1u64 << top;
    // jumps in y at frac(2^{i_j} x_j)
    let mut cuts: Vec<f64> = indices
        .iter()
        .zip(x)
        .map(|(&i, &xj)| (xj * (1u64 << i) as f64).fract())
        .filter(|&b| b > 0.0)
        .collect();
    cuts.push(0.0);
    cuts.push(1.0);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut pieces = Vec::with_capacity(cuts.len());
    for w in cuts.windows(2) {
        let y = 0.5 * (w[0] + w[1]);
        let mut acc = 0.0;
        for m in 0..branches {
            let z = (y + m as f64) / branches as f64;
            let mut prod = 1.0;
            for (&i, &xj) in indices.iter().zip(x) {
                // ξ_{i_j} = 2^{top - i_j} z mod 1
                let s = (z * (1u64 << (top - i)) as f64).fract();
                let ind = if s <= xj { 1.0 } else { 0.0 };
                prod *= ind - xj;
            }
            acc += prod;
        }
        pieces.push((w[1] - w[0], acc / branches as f64));
    }
    let mean: f64 = pieces.iter().map(|(l, v)| l * v).sum();
    pieces.iter().map(|(l, v)| l * (v - mean).abs()).sum()
}

fn chain_alpha(chain: &FiniteChain, indices: &[usize]) -> Result<f64> {
    let n = chain.n_states();
    let l = indices.len();
    let thresholds = n.saturating_sub(1);
    let combos = (thresholds as f64).powi(l as i32);
    let work = combos * (n * n) as f64 * (*indices.last().unwrap() + 1) as f64;
    if work > MAX_WORK {
        return Err(Error::Resource(format!("chain threshold search needs ~{work:.1e} operations")));
    }
    if thresholds == 0 {
        return Ok(0.0);
    }
    // marginal cdf of the state index under π
    let cdf: Vec<f64> = chain
        .stationary
        .iter()
        .scan(0.0, |c, p| {
            *c += p;
            Some(*c)
        })
        .collect();
    let lists: Vec<Vec<f64>> = (0..l).map(|_| (0..thresholds).map(|t| t as f64).collect()).collect();
    let tuples = cartesian(&lists);
    let vals: Vec<f64> = tuples
        .par_iter()
        .map(|x| {
            // backward nesting: h = g_l; h = g_{l-1} · P^{Δ} h; …; h = P^{i_1} h
            let g = |j: usize, s: usize| {
                let t = x[j] as usize;
                (if s <= t { 1.0 } else { 0.0 }) - cdf[t]
            };
            let mut h: Vec<f64> = (0..n).map(|s| g(l - 1, s)).collect();
            for j in (0..l - 1).rev() {
                let moved = chain.apply_pow(&h, indices[j + 1] - indices[j]);
                h = (0..n).map(|s| g(j, s) * moved[s]).collect();
            }
            h = chain.apply_pow(&h, indices[0]);
            let mean = chain.expect(&h);
            (0..n).map(|s| chain.stationary[s] * (h[s] - mean).abs()).sum::<f64>()
        })
        .collect();
    Ok(vals.into_iter().fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_index_is_one_quarter() {
        let v = alpha_exact(&ProcessSpec::DoublingMap, &[1], 6).unwrap();
        assert!((v - 0.25).abs() < 1e-15);
    }

    #[test]
    fn single_index_closed_form() {
        // maximum 2^{-n-1}, attained where frac(2^n x) = ½
        for n in 1..=8 {
            let v = alpha_exact(&ProcessSpec::DoublingMap, &[n], 10).unwrap();
            assert!((v - 2f64.powi(-(n as i32) - 1)).abs() < 1e-14, "n={n} v={v}");
        }
    }

    #[test]
    fn pairs_respect_the_bound() {
        for n in 1..=4 {
            for d in [1, 2] {
                let v = alpha_exact(&ProcessSpec::DoublingMap, &[n, n + d], 4).unwrap();
                assert!(v <= 2f64.powi(-(n as i32)) + 1e-12, "({n},{}) {v}", n + d);
            }
        }
    }

    #[test]
    fn chain_examples() {
        let iid = FiniteChain::new(vec![vec![0.4, 0.6], vec![0.4, 0.6]], vec![0.6, -0.4]).unwrap();
        assert!(alpha_exact(&ProcessSpec::FiniteChain(iid), &[1], 0).unwrap() < 1e-15);
        let sticky = FiniteChain::new(vec![vec![0.9, 0.1], vec![0.1, 0.9]], vec![1.0, -1.0]).unwrap();
        // g = 1_{s=0} − ½; E(g(ξ₁)|ξ₀) = ±0.4, norm 0.4
        let v = alpha_exact(&ProcessSpec::FiniteChain(sticky), &[1], 0).unwrap();
        assert!((v - 0.4).abs() < 1e-14);
    }

    #[test]
    fn limits() {
        assert!(matches!(alpha_exact(&ProcessSpec::DoublingMap, &[15], 4), Err(Error::Resource(_))));
        assert!(alpha_exact(&ProcessSpec::DoublingMap, &[2, 1], 4).is_err());
    }
}
