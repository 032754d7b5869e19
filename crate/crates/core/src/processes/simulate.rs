use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{substream, RandomStream};
use crate::processes::{long_run_variance, FourierFn, IidLaw, ProcessSpec};

/// Replicated partial sums `S_c` at a list of checkpoints `c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathEnsemble {
    pub n: usize,
    pub reps: usize,
    pub checkpoints: Vec<usize>,
    /// Row-major `reps × checkpoints.len()`.
    pub partial_sums: Vec<f64>,
    pub sigma_ref: f64,
    pub seed: u64,
}

impl PathEnsemble {
    pub fn row(&self, r: usize) -> &[f64] {
        let c = self.checkpoints.len();
        &self.partial_sums[r * c..(r + 1) * c]
    }

    /// All replicate values of `S_n` at checkpoint index `j`.
    pub fn column(&self, j: usize) -> Vec<f64> {
        let c = self.checkpoints.len();
        (0..self.reps).map(|r| self.partial_sums[r * c + j]).collect()
    }

    /// Values at checkpoint `n`, if recorded.
    pub fn at(&self, n: usize) -> Option<Vec<f64>> {
        self.checkpoints.iter().position(|&c| c == n).map(|j| self.column(j))
    }
}

struct Bits {
    word: u64,
    left: u32,
}

impl Bits {
    fn new() -> Self {
        Self { word: 0, left: 0 }
    }

    #[inline]
    fn next(&mut self, rng: &mut RandomStream) -> u64 {
        if self.left == 0 {
            self.word = rng.next_u64();
            self.left = 64;
        }
        let b = self.word & 1;
        self.word >>= 1;
        self.left -= 1;
        b
    }
}

const TWO_M53: f64 = 1.0 / (1u64 << 53) as f64;

fn cumulative(p: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    p.iter()
        .map(|x| {
            acc += x;
            acc
        })
        .collect()
}

fn categorical(cum: &[f64], u: f64) -> usize {
    let target = u * cum.last().copied().unwrap_or(1.0);
    cum.partition_point(|&c| c <= target).min(cum.len() - 1)
}

type Step<'a> = Box<dyn FnMut(&mut RandomStream) -> f64 + 'a>;

/// Draws `ξ₀` from the invariant law (or takes `start`) and returns it with a
/// one-step sampler. States are points of `[0, 1)` for interval maps, state
/// indices for chains, and the drawn value itself for i.i.d. laws.
fn walker<'a>(spec: &'a ProcessSpec, start: Option<f64>, rng: &mut RandomStream) -> (f64, Step<'a>) {
    match spec {
        ProcessSpec::DoublingMap => {
            let mut w = match start {
                Some(x) => (x.rem_euclid(1.0) * 18446744073709551616.0) as u64,
                None => rng.next_u64(),
            };
            let mut bits = Bits::new();
            let x0 = (w >> 11) as f64 * TWO_M53;
            let step = move |rng: &mut RandomStream| {
                w = (w >> 1) | (bits.next(rng) << 63);
                (w >> 11) as f64 * TWO_M53
            };
            (x0, Box::new(step))
        }
        ProcessSpec::CircleWalk(cw) => {
            let x0 = start.map(|x| x.rem_euclid(1.0)).unwrap_or_else(|| rng.uniform());
            let mut j: i64 = 0;
            let mut bits = Bits::new();
            let cw = *cw;
            let step = move |rng: &mut RandomStream| {
                j += if bits.next(rng) == 1 { 1 } else { -1 };
                let s = x0 + cw.frac_mult(j);
                if s >= 1.0 { s - 1.0 } else { s }
            };
            (x0, Box::new(step))
        }
        ProcessSpec::FiniteChain(chain) => {
            let rows: Vec<Vec<f64>> = chain.transition.iter().map(|r| cumulative(r)).collect();
            let mut state = match start {
                Some(s) => (s as usize).min(chain.n_states() - 1),
                None => categorical(&cumulative(&chain.stationary), rng.uniform()),
            };
            let x0 = state as f64;
            let step = move |rng: &mut RandomStream| {
                state = categorical(&rows[state], rng.uniform());
                state as f64
            };
            (x0, Box::new(step))
        }
        ProcessSpec::Iid(law) => {
            let mut draw = iid_sampler(law);
            let x0 = start.unwrap_or_else(|| draw(rng));
            (x0, draw)
        }
    }
}

fn iid_sampler(law: &IidLaw) -> Step<'_> {
    match law {
        IidLaw::Lebesgue => Box::new(|rng: &mut RandomStream| rng.uniform()),
        IidLaw::Rademacher => {
            let mut bits = Bits::new();
            Box::new(move |rng: &mut RandomStream| if bits.next(rng) == 1 { 1.0 } else { -1.0 })
        }
        IidLaw::Gaussian { variance } => {
            let sd = variance.sqrt();
            Box::new(move |rng: &mut RandomStream| sd * rng.sample::<f64, _>(StandardNormal))
        }
        IidLaw::Discrete { pmf } => {
            let cum = cumulative(&pmf.probs);
            Box::new(move |rng: &mut RandomStream| pmf.atoms[categorical(&cum, rng.uniform())])
        }
    }
}

/// Maps a state to the observation `X = f(ξ)`.
fn observer<'a>(spec: &'a ProcessSpec, f: &'a FourierFn<f64>) -> Box<dyn Fn(f64) -> f64 + Sync + 'a> {
    match spec {
        ProcessSpec::FiniteChain(chain) => Box::new(move |s| chain.values[s as usize]),
        ProcessSpec::Iid(law) if !law.uses_observable() => Box::new(|s| s),
        _ => Box::new(move |x| f.eval(x)),
    }
}

/// States `ξ₀, …, ξ_steps` of one path drawn from `stream`.
pub fn state_path(spec: &ProcessSpec, steps: usize, stream: &mut RandomStream) -> Result<Vec<f64>> {
    spec.validate()?;
    let (x0, mut step) = walker(spec, None, stream);
    let mut out = Vec::with_capacity(steps + 1);
    out.push(x0);
    for _ in 0..steps {
        out.push(step(stream));
    }
    Ok(out)
}

/// One kernel step from the state `x`.
pub fn step_from(spec: &ProcessSpec, x: f64, stream: &mut RandomStream) -> Result<f64> {
    spec.validate()?;
    let (_, mut step) = walker(spec, Some(x), stream);
    Ok(step(stream))
}

/// Simulates `reps` independent stationary paths of `S_n = X₁ + ⋯ + X_n`.
/// Row `r` is driven by `substream(seed, r)`; an empty checkpoint list records
/// only `S_n`.
pub fn simulate(
    spec: &ProcessSpec,
    f: &FourierFn<f64>,
    n: usize,
    reps: usize,
    checkpoints: &[usize],
    seed: u64,
) -> Result<PathEnsemble> {
    spec.validate()?;
    if n == 0 || reps == 0 {
        return Err(Error::Domain("simulation needs n ≥ 1 and reps ≥ 1".into()));
    }
    let checkpoints: Vec<usize> = if checkpoints.is_empty() { vec![n] } else { checkpoints.to_vec() };
    if checkpoints.windows(2).any(|w| w[0] >= w[1]) || checkpoints[0] == 0 || *checkpoints.last().unwrap() > n {
        return Err(Error::Domain("checkpoints must be strictly increasing within [1, n]".into()));
    }
    if !f.is_finite() {
        return Err(Error::Domain("observable has non-finite coefficients".into()));
    }
    let sigma_ref = long_run_variance(spec, f)?.sigma2.sqrt();
    let observe = observer(spec, f);
    let rows: Vec<Vec<f64>> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = substream(seed, r as u64);
            let (_, mut step) = walker(spec, None, &mut rng);
            let mut out = Vec::with_capacity(checkpoints.len());
            let mut next = 0;
            let mut s = 0.0;
            for i in 1..=n {
                s += observe(step(&mut rng));
                if checkpoints[next] == i {
                    out.push(s);
                    next += 1;
                    if next == checkpoints.len() {
                        break;
                    }
                }
            }
            out
        })
        .collect();
    log::debug!("simulated {reps} paths of length {n} for {}", spec.name());
    Ok(PathEnsemble {
        n,
        reps,
        checkpoints,
        partial_sums: rows.concat(),
        sigma_ref,
        seed,
    })
}
