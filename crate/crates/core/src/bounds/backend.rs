use std::sync::Mutex;

use crate::error::{Error, Result};
use crate::numerics::{integrate, integrate_unit, Tolerance};
use crate::processes::{self, FiniteChain, FourierFn, IidLaw, ProcessSpec, DEFAULT_PRODUCT_CAP};
use crate::wasserstein::FinitePmf;

type F = FourierFn<f64>;

/// Exact arithmetic on functions of the current state: observables, their
/// products, transfer-operator images and stationary expectations.
pub(crate) trait Backend: Sync {
    type Obs: Clone + Send + Sync + PartialEq;

    fn x0(&self) -> Self::Obs;
    fn constant(&self, c: f64) -> Self::Obs;
    fn add(&self, a: &Self::Obs, b: &Self::Obs) -> Self::Obs;
    fn scale(&self, a: &Self::Obs, c: f64) -> Self::Obs;
    fn mul(&self, a: &Self::Obs, b: &Self::Obs) -> Self::Obs;
    fn transfer(&self, a: &Self::Obs, m: usize) -> Result<Self::Obs>;
    /// `Σ_{l≥m} K^l a` for centered `a`.
    fn resolvent_tail(&self, a: &Self::Obs, m: usize) -> Result<Self::Obs>;
    fn mean(&self, a: &Self::Obs) -> f64;
    /// `E|a|^p` under the invariant law.
    fn abs_pow_mean(&self, a: &Self::Obs, p: f64, tol: &Tolerance<f64>) -> Result<f64>;
    /// `E|a·b|`, evaluated without expanding the product where possible.
    fn l1_product(&self, a: &Self::Obs, b: &Self::Obs, tol: &Tolerance<f64>) -> Result<f64> {
        self.abs_pow_mean(&self.mul(a, b), 1.0, tol)
    }
    fn is_zero(&self, a: &Self::Obs) -> bool;
    fn is_martingale(&self) -> bool;
    fn long_run_variance(&self) -> Result<f64>;
    /// `(grid maximum, certified upper bound)` of `|X₀|`.
    fn linf(&self) -> (f64, f64);
    /// ℓ¹ mass dropped by capped products so far.
    fn dropped(&self) -> f64 {
        0.0
    }
}

pub(crate) struct FourierEngine {
    pub spec: ProcessSpec,
    pub f: F,
    pub dropped: Mutex<f64>,
}

impl Backend for FourierEngine {
    type Obs = F;

    fn x0(&self) -> F {
        self.f.clone()
    }
    fn constant(&self, c: f64) -> F {
        F::constant_fn(c)
    }
    fn add(&self, a: &F, b: &F) -> F {
        a.add(b)
    }
    fn scale(&self, a: &F, c: f64) -> F {
        a.scale(c)
    }
    fn mul(&self, a: &F, b: &F) -> F {
        let t = a.product(b, DEFAULT_PRODUCT_CAP);
        if t.dropped_l1 > 0.0 {
            *self.dropped.lock().unwrap() += t.dropped_l1;
            log::warn!("product truncated at frequency {DEFAULT_PRODUCT_CAP}, dropped l1 mass {:e}", t.dropped_l1);
        }
        t.value
    }
    fn transfer(&self, a: &F, m: usize) -> Result<F> {
        processes::transfer(&self.spec, a, m)
    }
    fn resolvent_tail(&self, a: &F, m: usize) -> Result<F> {
        let mut a = a.clone();
        if a.constant.abs() <= 1e-12 {
            a.constant = 0.0;
        }
        processes::resolvent_tail(&self.spec, &a, m)
    }
    fn mean(&self, a: &F) -> f64 {
        a.constant
    }
    fn abs_pow_mean(&self, a: &F, p: f64, tol: &Tolerance<f64>) -> Result<f64> {
        if self.is_zero(a) {
            return Ok(0.0);
        }
        if a.max_freq() == 0 {
            return Ok(a.constant.abs().powf(p));
        }
        Ok(integrate_unit(|x| a.eval(x).abs().powf(p), tol)?.value)
    }
    fn l1_product(&self, a: &F, b: &F, tol: &Tolerance<f64>) -> Result<f64> {
        if self.is_zero(a) || self.is_zero(b) {
            return Ok(0.0);
        }
        Ok(integrate_unit(|x| (a.eval(x) * b.eval(x)).abs(), tol)?.value)
    }
    fn is_zero(&self, a: &F) -> bool {
        a.coeff_l1() == 0.0
    }
    fn is_martingale(&self) -> bool {
        processes::is_martingale(&self.spec, &self.f)
    }
    fn long_run_variance(&self) -> Result<f64> {
        Ok(processes::long_run_variance(&self.spec, &self.f)?.sigma2)
    }
    fn linf(&self) -> (f64, f64) {
        let n = (64 * self.f.max_freq()).max(4096);
        let grid = (0..n).map(|i| self.f.eval(i as f64 / n as f64).abs()).fold(0.0, f64::max);
        // |f| moves by at most sup|f'|·h/2 between a point and its nearest node
        let cert = grid + self.f.derivative_bound() / (2.0 * n as f64);
        (grid, cert.min(self.f.coeff_l1()))
    }
    fn dropped(&self) -> f64 {
        *self.dropped.lock().unwrap()
    }
}

pub(crate) struct ChainEngine {
    pub chain: FiniteChain,
}

impl Backend for ChainEngine {
    type Obs = Vec<f64>;

    fn x0(&self) -> Vec<f64> {
        self.chain.values.clone()
    }
    fn constant(&self, c: f64) -> Vec<f64> {
        vec![c; self.chain.n_states()]
    }
    fn add(&self, a: &Vec<f64>, b: &Vec<f64>) -> Vec<f64> {
        a.iter().zip(b).map(|(x, y)| x + y).collect()
    }
    fn scale(&self, a: &Vec<f64>, c: f64) -> Vec<f64> {
        a.iter().map(|x| x * c).collect()
    }
    fn mul(&self, a: &Vec<f64>, b: &Vec<f64>) -> Vec<f64> {
        a.iter().zip(b).map(|(x, y)| x * y).collect()
    }
    fn transfer(&self, a: &Vec<f64>, m: usize) -> Result<Vec<f64>> {
        Ok(self.chain.apply_pow(a, m))
    }
    fn resolvent_tail(&self, a: &Vec<f64>, m: usize) -> Result<Vec<f64>> {
        if self.chain.expect(a).abs() > 1e-12 {
            return Err(Error::Precondition("resolvent needs a centered state function".into()));
        }
        let mut w = self.chain.apply_pow(a, m);
        let mut acc = vec![0.0; w.len()];
        for _ in 0..1_000_000 {
            let size = w.iter().map(|x| x.abs()).fold(0.0, f64::max);
            let scale = acc.iter().map(|x: &f64| x.abs()).fold(1e-300, f64::max);
            if size <= 1e-17 * scale || size == 0.0 {
                return Ok(acc);
            }
            for (s, x) in acc.iter_mut().zip(&w) {
                *s += x;
            }
            w = self.chain.apply(&w);
        }
        Err(Error::Divergence("chain resolvent series does not converge".into()))
    }
    fn mean(&self, a: &Vec<f64>) -> f64 {
        self.chain.expect(a)
    }
    fn abs_pow_mean(&self, a: &Vec<f64>, p: f64, _tol: &Tolerance<f64>) -> Result<f64> {
        Ok(self.chain.stationary.iter().zip(a).map(|(q, x)| q * x.abs().powf(p)).sum())
    }
    fn is_zero(&self, a: &Vec<f64>) -> bool {
        a.iter().all(|x| *x == 0.0)
    }
    fn is_martingale(&self) -> bool {
        self.chain.is_martingale()
    }
    fn long_run_variance(&self) -> Result<f64> {
        let (s, _) = self.chain.long_run_variance()?;
        if !(s > 1e-12) {
            return Err(Error::DegenerateVariance(s));
        }
        Ok(s)
    }
    fn linf(&self) -> (f64, f64) {
        let v = self
            .chain
            .values
            .iter()
            .zip(&self.chain.stationary)
            .filter(|(_, p)| **p > 0.0)
            .map(|(x, _)| x.abs())
            .fold(0.0, f64::max);
        (v, v)
    }
}

/// Explicit i.i.d. marginal law; observables are polynomials in `X₀`.
pub(crate) enum PolyEngine {
    Discrete(FinitePmf<f64>),
    Gaussian { variance: f64 },
}

impl PolyEngine {
    pub fn from_law(law: &IidLaw) -> Result<Self> {
        Ok(match law {
            IidLaw::Rademacher => Self::Discrete(FinitePmf::new(vec![-1.0, 1.0], vec![0.5, 0.5])?),
            IidLaw::Discrete { pmf } => Self::Discrete(pmf.clone()),
            IidLaw::Gaussian { variance } => Self::Gaussian { variance: *variance },
            IidLaw::Lebesgue => return Err(Error::Unsupported("lebesgue law uses the Fourier engine".into())),
        })
    }

    fn eval(c: &[f64], x: f64) -> f64 {
        c.iter().rev().fold(0.0, |acc, a| acc * x + a)
    }

    fn raw_moment(&self, k: usize) -> f64 {
        match self {
            Self::Discrete(p) => p.atoms.iter().zip(&p.probs).map(|(a, q)| q * a.powi(k as i32)).sum(),
            Self::Gaussian { variance } => {
                if k % 2 == 1 {
                    0.0
                } else {
                    let dfact: f64 = (1..k).step_by(2).map(|j| j as f64).product();
                    dfact * variance.powi(k as i32 / 2)
                }
            }
        }
    }
}

impl Backend for PolyEngine {
    type Obs = Vec<f64>;

    fn x0(&self) -> Vec<f64> {
        vec![0.0, 1.0]
    }
    fn constant(&self, c: f64) -> Vec<f64> {
        vec![c]
    }
    fn add(&self, a: &Vec<f64>, b: &Vec<f64>) -> Vec<f64> {
        let n = a.len().max(b.len());
        (0..n).map(|i| a.get(i).unwrap_or(&0.0) + b.get(i).unwrap_or(&0.0)).collect()
    }
    fn scale(&self, a: &Vec<f64>, c: f64) -> Vec<f64> {
        a.iter().map(|x| x * c).collect()
    }
    fn mul(&self, a: &Vec<f64>, b: &Vec<f64>) -> Vec<f64> {
        let mut out = vec![0.0; a.len() + b.len() - 1];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                out[i + j] += x * y;
            }
        }
        out
    }
    fn transfer(&self, a: &Vec<f64>, m: usize) -> Result<Vec<f64>> {
        Ok(if m == 0 { a.clone() } else { vec![self.mean(a)] })
    }
    fn resolvent_tail(&self, a: &Vec<f64>, m: usize) -> Result<Vec<f64>> {
        if self.mean(a).abs() > 1e-12 {
            return Err(Error::Precondition("resolvent needs a centered observable".into()));
        }
        Ok(if m == 0 { a.clone() } else { vec![0.0] })
    }
    fn mean(&self, a: &Vec<f64>) -> f64 {
        a.iter().enumerate().map(|(k, c)| if *c == 0.0 { 0.0 } else { c * self.raw_moment(k) }).sum()
    }
    fn abs_pow_mean(&self, a: &Vec<f64>, p: f64, tol: &Tolerance<f64>) -> Result<f64> {
        if self.is_zero(a) {
            return Ok(0.0);
        }
        match self {
            Self::Discrete(pmf) => {
                Ok(pmf.atoms.iter().zip(&pmf.probs).map(|(x, q)| q * Self::eval(a, *x).abs().powf(p)).sum())
            }
            Self::Gaussian { variance } => {
                let s = variance.sqrt();
                let g = |x: f64| Self::eval(a, x).abs().powf(p) * crate::numerics::pdf(x / s) / s;
                Ok(integrate(g, -16.0 * s, 16.0 * s, tol)?.value)
            }
        }
    }
    fn is_zero(&self, a: &Vec<f64>) -> bool {
        a.iter().all(|x| *x == 0.0)
    }
    fn is_martingale(&self) -> bool {
        self.raw_moment(1).abs() < 1e-14
    }
    fn long_run_variance(&self) -> Result<f64> {
        let v = self.raw_moment(2) - self.raw_moment(1).powi(2);
        if self.raw_moment(1).abs() > 1e-12 {
            return Err(Error::Precondition("i.i.d. law must be centered".into()));
        }
        if !(v > 1e-12) {
            return Err(Error::DegenerateVariance(v));
        }
        Ok(v)
    }
    fn linf(&self) -> (f64, f64) {
        match self {
            Self::Discrete(p) => {
                let v = p.atoms.iter().zip(&p.probs).filter(|(_, q)| **q > 0.0).map(|(x, _)| x.abs()).fold(0.0, f64::max);
                (v, v)
            }
            Self::Gaussian { .. } => (f64::INFINITY, f64::INFINITY),
        }
    }
}

pub(crate) enum Engine {
    Fourier(FourierEngine),
    Chain(ChainEngine),
    Poly(PolyEngine),
}

impl Engine {
    pub fn new(spec: &ProcessSpec, f: &F) -> Result<Self> {
        spec.validate()?;
        Ok(match spec {
            ProcessSpec::FiniteChain(c) => Engine::Chain(ChainEngine { chain: c.clone() }),
            ProcessSpec::Iid(law) if !law.uses_observable() => Engine::Poly(PolyEngine::from_law(law)?),
            _ => {
                if !f.is_finite() {
                    return Err(Error::Domain("observable has non-finite coefficients".into()));
                }
                Engine::Fourier(FourierEngine { spec: spec.clone(), f: f.clone(), dropped: Mutex::new(0.0) })
            }
        })
    }
}

macro_rules! with_backend {
    ($engine:expr, $b:ident => $body:expr) => {
        match $engine {
            $crate::bounds::backend::Engine::Fourier($b) => $body,
            $crate::bounds::backend::Engine::Chain($b) => $body,
            $crate::bounds::backend::Engine::Poly($b) => $body,
        }
    };
}
pub(crate) use with_backend;
