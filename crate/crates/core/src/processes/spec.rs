use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::processes::FourierFn;
use crate::wasserstein::FinitePmf;

/// Stationary process family driving `X_i = f(ξ_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProcessSpec {
    /// `ξ_{i+1} = (ξ_i + B)/2`, `B` a fair bit; kernel `Kf(x) = ½(f(x/2) + f((x+1)/2))`.
    DoublingMap,
    /// `ξ_{i+1} = ξ_i ± a mod 1` with a fair sign.
    CircleWalk(CircleWalk),
    FiniteChain(FiniteChain),
    Iid(IidLaw),
}

impl ProcessSpec {
    pub fn circle_walk(a: f64) -> Result<Self> {
        Ok(Self::CircleWalk(CircleWalk::new(a, 0.0)?))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::DoublingMap => "doubling_map",
            Self::CircleWalk(_) => "circle_walk",
            Self::FiniteChain(_) => "finite_chain",
            Self::Iid(_) => "iid",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::DoublingMap => Ok(()),
            Self::CircleWalk(w) => CircleWalk::new(w.a, w.a_lo).map(|_| ()),
            Self::FiniteChain(c) => c.check(),
            Self::Iid(law) => law.check(),
        }
    }

    /// True when the invariant law is Lebesgue and observables are Fourier series.
    pub fn is_interval_map(&self) -> bool {
        matches!(self, Self::DoublingMap | Self::CircleWalk(_))
    }
}

/// Rotation step `a`, stored as an unevaluated sum `a + a_lo`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CircleWalkRepr")]
pub struct CircleWalk {
    pub a: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub a_lo: f64,
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

#[derive(Deserialize)]
struct CircleWalkRepr {
    a: f64,
    #[serde(default)]
    a_lo: f64,
}

impl TryFrom<CircleWalkRepr> for CircleWalk {
    type Error = Error;
    fn try_from(r: CircleWalkRepr) -> Result<Self> {
        CircleWalk::new(r.a, r.a_lo)
    }
}

impl CircleWalk {
    pub fn new(a: f64, a_lo: f64) -> Result<Self> {
        if !(a > 0.0 && a < 1.0) || !a_lo.is_finite() || a_lo.abs() > 1e-15 {
            return Err(Error::Domain(format!("circle walk step must lie in (0, 1), got {a}")));
        }
        check_irrational(a)?;
        Ok(Self { a, a_lo })
    }

    /// `a = √2 − 1` carried to about 32 significant digits.
    pub fn sqrt2_minus_1() -> Self {
        let s = std::f64::consts::SQRT_2;
        let r = s.mul_add(s, -2.0);
        Self { a: s - 1.0, a_lo: -r / (2.0 * s) }
    }

    /// `{k a}` computed with an exact product of `k` and the leading part.
    pub fn frac_mult(&self, k: i64) -> f64 {
        let kf = k as f64;
        let p = kf * self.a;
        let e = kf.mul_add(self.a, -p);
        let r = p - p.floor();
        let s = r + (e + kf * self.a_lo);
        let s = s - s.floor();
        if s >= 1.0 { 0.0 } else { s }
    }

    /// Distance from `k a` to the nearest integer.
    pub fn dist_to_int(&self, k: i64) -> f64 {
        let s = self.frac_mult(k);
        s.min(1.0 - s)
    }

    /// `cos(2π k a)`.
    pub fn cos_k(&self, k: i64) -> f64 {
        (2.0 * std::f64::consts::PI * self.frac_mult(k)).cos()
    }
}

/// Rejects `a` when a continued-fraction convergent with denominator at most
/// 10⁶ matches it to 1e-15.
pub fn check_irrational(a: f64) -> Result<()> {
    let (mut h1, mut h2) = (1.0f64, 0.0f64);
    let (mut k1, mut k2) = (0.0f64, 1.0f64);
    let mut x = a;
    for _ in 0..64 {
        let q = x.floor();
        let h = q * h1 + h2;
        let k = q * k1 + k2;
        if k > 1e6 {
            return Ok(());
        }
        if (a - h / k).abs() <= 1e-15 {
            return Err(Error::Domain(format!("{a} is numerically rational ({h}/{k})")));
        }
        let r = x - q;
        if r <= 0.0 {
            return Err(Error::Domain(format!("{a} is numerically rational ({h}/{k})")));
        }
        x = 1.0 / r;
        (h2, h1, k2, k1) = (h1, h, k1, k);
    }
    Ok(())
}

/// Finite-state stationary Markov chain with a real observable on states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FiniteChainRepr")]
pub struct FiniteChain {
    pub transition: Vec<Vec<f64>>,
    pub stationary: Vec<f64>,
    pub values: Vec<f64>,
}

#[derive(Deserialize)]
struct FiniteChainRepr {
    transition: Vec<Vec<f64>>,
    #[serde(default)]
    stationary: Option<Vec<f64>>,
    values: Vec<f64>,
}

impl TryFrom<FiniteChainRepr> for FiniteChain {
    type Error = Error;
    fn try_from(r: FiniteChainRepr) -> Result<Self> {
        match r.stationary {
            Some(pi) => FiniteChain::with_stationary(r.transition, pi, r.values),
            None => FiniteChain::new(r.transition, r.values),
        }
    }
}

const CHAIN_TOL: f64 = 1e-12;

impl FiniteChain {
    /// Builds the chain and solves for its stationary law.
    pub fn new(transition: Vec<Vec<f64>>, values: Vec<f64>) -> Result<Self> {
        check_stochastic(&transition, values.len())?;
        let stationary = stationary_law(&transition)?;
        let chain = Self { transition, stationary, values };
        chain.check()?;
        Ok(chain)
    }

    pub fn with_stationary(transition: Vec<Vec<f64>>, stationary: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let chain = Self { transition, stationary, values };
        chain.check()?;
        Ok(chain)
    }

    pub fn n_states(&self) -> usize {
        self.values.len()
    }

    pub(crate) fn check(&self) -> Result<()> {
        let n = self.values.len();
        check_stochastic(&self.transition, n)?;
        if self.stationary.len() != n {
            return Err(Error::Domain("stationary vector has wrong length".into()));
        }
        if self.stationary.iter().any(|&p| !(p >= 0.0)) {
            return Err(Error::Domain("stationary vector must be nonnegative".into()));
        }
        if (self.stationary.iter().sum::<f64>() - 1.0).abs() > CHAIN_TOL {
            return Err(Error::Domain("stationary vector must sum to 1".into()));
        }
        for j in 0..n {
            let pj: f64 = (0..n).map(|i| self.stationary[i] * self.transition[i][j]).sum();
            if (pj - self.stationary[j]).abs() > CHAIN_TOL {
                return Err(Error::Domain(format!("pi·P differs from pi at state {j}")));
            }
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("state values must be finite".into()));
        }
        Ok(())
    }

    /// `(P v)(i) = Σ_j P_ij v_j`, the one-step conditional expectation.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.transition
            .iter()
            .map(|row| row.iter().zip(v).map(|(p, x)| p * x).sum())
            .collect()
    }

    pub fn apply_pow(&self, v: &[f64], m: usize) -> Vec<f64> {
        let mut out = v.to_vec();
        for _ in 0..m {
            out = self.apply(&out);
        }
        out
    }

    /// Reversed kernel `P*_{ij} = π_j P_{ji} / π_i`; conditional law of the past.
    pub fn reversed(&self) -> Vec<Vec<f64>> {
        let n = self.n_states();
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        if self.stationary[i] > 0.0 {
                            self.stationary[j] * self.transition[j][i] / self.stationary[i]
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect()
    }

    pub fn expect(&self, v: &[f64]) -> f64 {
        self.stationary.iter().zip(v).map(|(p, x)| p * x).sum()
    }

    pub fn mean(&self) -> f64 {
        self.expect(&self.values)
    }

    pub fn is_martingale(&self) -> bool {
        self.apply(&self.values).iter().all(|x| x.abs() < 1e-14)
    }

    /// `σ² = π(v²) + 2 Σ_{n≥1} π(v · Pⁿ v)` and the covariance sequence.
    pub fn long_run_variance(&self) -> Result<(f64, Vec<f64>)> {
        if self.mean().abs() > 1e-12 {
            return Err(Error::Precondition("chain observable must have stationary mean 0".into()));
        }
        let v = &self.values;
        let var0: f64 = self.stationary.iter().zip(v).map(|(p, x)| p * x * x).sum();
        let mut cov = Vec::new();
        let mut w = v.clone();
        let mut total = var0;
        for _ in 0..100_000 {
            w = self.apply(&w);
            let c: f64 = self.stationary.iter().zip(v).zip(&w).map(|((p, a), b)| p * a * b).sum();
            cov.push(c);
            total += 2.0 * c;
            if w.iter().all(|x| x.abs() < 1e-16) {
                return Ok((total, cov));
            }
        }
        if w.iter().map(|x| x.abs()).fold(0.0, f64::max) > 1e-10 {
            return Err(Error::Divergence("covariance series of the chain does not decay".into()));
        }
        Ok((total, cov))
    }
}

fn check_stochastic(p: &[Vec<f64>], n: usize) -> Result<()> {
    if n == 0 || p.len() != n || p.iter().any(|r| r.len() != n) {
        return Err(Error::Domain("transition matrix must be square and match the value map".into()));
    }
    for (i, row) in p.iter().enumerate() {
        if row.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(Error::Domain(format!("row {i} has a negative or non-finite entry")));
        }
        if (row.iter().sum::<f64>() - 1.0).abs() > CHAIN_TOL {
            return Err(Error::Domain(format!("row {i} does not sum to 1")));
        }
    }
    Ok(())
}

/// Solves `π(P − I) = 0`, `Σπ = 1` by Gaussian elimination.
fn stationary_law(p: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = p.len();
    // rows of the system: equations j = 0..n-1 are Σ_i π_i (P_ij − δ_ij) = 0, last replaced by normalization
    let mut a: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut row: Vec<f64> = (0..n).map(|i| p[i][j] - if i == j { 1.0 } else { 0.0 }).collect();
            row.push(0.0);
            row
        })
        .collect();
    a[n - 1] = vec![1.0; n + 1];
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .unwrap();
        if a[piv][col].abs() < 1e-14 {
            return Err(Error::Domain("chain has no unique stationary law".into()));
        }
        a.swap(col, piv);
        for r in 0..n {
            if r != col {
                let factor = a[r][col] / a[col][col];
                if factor != 0.0 {
                    for c in col..=n {
                        a[r][c] -= factor * a[col][c];
                    }
                }
            }
        }
    }
    Ok((0..n).map(|i| (a[i][n] / a[i][i]).max(0.0)).collect())
}

/// Marginal law of an i.i.d. sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum IidLaw {
    /// `X = f(U)`, `U` uniform on `[0, 1)`.
    Lebesgue,
    Rademacher,
    Gaussian { variance: f64 },
    Discrete { pmf: FinitePmf<f64> },
}

impl IidLaw {
    pub(crate) fn check(&self) -> Result<()> {
        match self {
            Self::Gaussian { variance } if !(*variance > 0.0) || !variance.is_finite() => {
                Err(Error::Domain("gaussian variance must be positive".into()))
            }
            _ => Ok(()),
        }
    }

    /// True when the observable, not the law, carries the values.
    pub fn uses_observable(&self) -> bool {
        matches!(self, Self::Lebesgue)
    }

    /// `(E X, E X², E|X|³, ‖X‖_∞)` for laws with their own values.
    pub fn moments(&self) -> Option<(f64, f64, f64, f64)> {
        match self {
            Self::Lebesgue => None,
            Self::Rademacher => Some((0.0, 1.0, 1.0, 1.0)),
            Self::Gaussian { variance } => {
                let s = variance.sqrt();
                Some((0.0, *variance, (8.0 / std::f64::consts::PI).sqrt() * s * s * s, f64::INFINITY))
            }
            Self::Discrete { pmf } => {
                let it = || pmf.atoms.iter().zip(&pmf.probs);
                let mean = it().map(|(x, p)| x * p).sum();
                let m2 = it().map(|(x, p)| x * x * p).sum();
                let m3 = it().map(|(x, p)| (x * x * x).abs() * p).sum();
                let linf = it().filter(|(_, p)| **p > 0.0).map(|(x, _)| x.abs()).fold(0.0, f64::max);
                Some((mean, m2, m3, linf))
            }
        }
    }

    /// Mean of `X₀` given the observable `f` used by the Lebesgue law.
    pub fn mean(&self, f: &FourierFn<f64>) -> f64 {
        match self.moments() {
            Some((m, ..)) => m,
            None => f.constant,
        }
    }
}
