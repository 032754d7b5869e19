use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{integrate, Tolerance};
use crate::wasserstein::{EmpiricalSample, FinitePmf};

use super::step_integral;

/// Nonincreasing function `u ↦ Q(u)` on `(0, 1)`.
#[derive(Clone)]
pub struct QuantileSeq {
    kind: Kind,
}

#[derive(Clone)]
enum Kind {
    /// `Q(u) = values[i]` on `[breaks[i-1], breaks[i])`.
    Step { breaks: Vec<f64>, values: Vec<f64> },
    Closed(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for QuantileSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            Kind::Step { breaks, values } => f
                .debug_struct("QuantileSeq")
                .field("breaks", breaks)
                .field("values", values)
                .finish(),
            Kind::Closed(_) => f.write_str("QuantileSeq(<closed form>)"),
        }
    }
}

impl QuantileSeq {
    pub fn constant(c: f64) -> Self {
        Self { kind: Kind::Step { breaks: Vec::new(), values: vec![c] } }
    }

    pub fn step(breaks: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.len() != breaks.len() + 1 {
            return Err(Error::Domain("step quantile needs one more value than breakpoints".into()));
        }
        if breaks.windows(2).any(|w| w[0] >= w[1]) || breaks.iter().any(|&b| !(b > 0.0 && b < 1.0)) {
            return Err(Error::Domain("breakpoints must increase strictly inside (0, 1)".into()));
        }
        if values.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::Domain("quantile values must be nonincreasing".into()));
        }
        Ok(Self { kind: Kind::Step { breaks, values } })
    }

    /// Closed-form `Q`, integrated by quadrature.
    pub fn closed<F: Fn(f64) -> f64 + Send + Sync + 'static>(q: F) -> Self {
        Self { kind: Kind::Closed(Arc::new(q)) }
    }

    /// `Q_X` of a finite law: `Q(u) = a_j` on `[P(X > a_j), P(X > a_{j-1}))`.
    pub fn from_pmf(p: &FinitePmf<f64>) -> Self {
        let k = p.atoms.len();
        let mut tail = vec![0.0; k];
        for j in (0..k - 1).rev() {
            tail[j] = tail[j + 1] + p.probs[j + 1];
        }
        // walk u upwards: largest atom first
        let mut breaks = Vec::new();
        let mut values = vec![p.atoms[k - 1]];
        for j in (0..k - 1).rev() {
            if p.probs[j + 1] <= 0.0 {
                *values.last_mut().unwrap() = p.atoms[j];
                continue;
            }
            let b = tail[j];
            if b >= 1.0 {
                break;
            }
            breaks.push(b);
            values.push(p.atoms[j]);
        }
        Self { kind: Kind::Step { breaks, values } }
    }

    /// `Q_{|X|}`.
    pub fn abs_of_pmf(p: &FinitePmf<f64>) -> Self {
        let abs = FinitePmf::new(p.atoms.iter().map(|a| a.abs()).collect(), p.probs.clone())
            .expect("valid pmf stays valid under |·|");
        Self::from_pmf(&abs)
    }

    pub fn eval(&self, u: f64) -> f64 {
        match &self.kind {
            Kind::Step { breaks, values } => values[breaks.partition_point(|&b| b <= u)],
            Kind::Closed(q) => q(u),
        }
    }

    pub fn breakpoints(&self) -> &[f64] {
        match &self.kind {
            Kind::Step { breaks, .. } => breaks,
            Kind::Closed(_) => &[],
        }
    }

    pub fn is_step(&self) -> bool {
        matches!(self.kind, Kind::Step { .. })
    }

    /// `∫_lo^hi Q(u)^p du`.
    pub fn integral_pow(&self, p: i32, lo: f64, hi: f64) -> Result<f64> {
        if !(hi > lo) {
            return Ok(0.0);
        }
        match &self.kind {
            Kind::Step { breaks, .. } => Ok(step_integral(breaks, lo, hi, |u| self.eval(u).powi(p))),
            Kind::Closed(q) => {
                let tol = Tolerance::new(1e-13, 1e-11, 50)?;
                Ok(integrate(|u| q(u).powi(p), lo, hi, &tol)?.value)
            }
        }
    }
}

/// `Q(u) = x_(m − ⌊um⌋)`, the tail quantile of the empirical law.
pub fn quantile_from_sample(s: &EmpiricalSample<f64>) -> QuantileSeq {
    let x = s.values();
    let m = x.len();
    let breaks = (1..m).map(|i| i as f64 / m as f64).collect();
    let values = (0..m).map(|i| x[m - 1 - i]).collect();
    QuantileSeq { kind: Kind::Step { breaks, values } }
}

/// `F⁻¹(u) = inf{x : F(x) ≥ u}`.
pub fn lower_inverse(p: &FinitePmf<f64>, u: f64) -> f64 {
    let mut c = 0.0;
    for (a, q) in p.atoms.iter().zip(&p.probs) {
        c += q;
        if c >= u {
            return *a;
        }
    }
    *p.atoms.last().unwrap()
}

/// `Q(u) = inf{x : P(X > x) ≤ u}`.
pub fn tail_quantile(p: &FinitePmf<f64>, u: f64) -> f64 {
    let k = p.atoms.len();
    let mut tail = 0.0;
    // scan from the top: P(X > a_j) = Σ_{i>j} p_i
    for j in (0..k).rev() {
        if tail > u {
            return p.atoms[j + 1];
        }
        tail += p.probs[j];
    }
    if tail > u { p.atoms[0] } else { p.atoms[0] }
}

/// Nonincreasing tabulation `α(0), α(1), …` in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct AlphaSeq {
    values: Vec<f64>,
}

impl TryFrom<Vec<f64>> for AlphaSeq {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        AlphaSeq::new(v)
    }
}

impl From<AlphaSeq> for Vec<f64> {
    fn from(a: AlphaSeq) -> Self {
        a.values
    }
}

impl AlphaSeq {
    /// Values above 1 are clipped with a warning; values must not increase.
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        for v in values.iter_mut() {
            if !(*v >= 0.0) {
                return Err(Error::Domain(format!("alpha value {v} is negative or NaN")));
            }
            if *v > 1.0 {
                log::warn!("alpha value {v} exceeds 1, clipped");
                *v = 1.0;
            }
        }
        if values.windows(2).any(|w| w[1] > w[0] * (1.0 + 1e-12) + 1e-15) {
            return Err(Error::Domain("alpha sequence must be nonincreasing".into()));
        }
        Ok(Self { values })
    }

    /// `α(k) = r^k`.
    pub fn geometric(r: f64, len: usize) -> Result<Self> {
        Self::new((0..len).map(|k| r.powi(k as i32)).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `α(k)`, zero beyond the tabulation.
    pub fn get(&self, k: usize) -> f64 {
        self.values.get(k).copied().unwrap_or(0.0)
    }
}

/// `α⁻¹(u) = #{i : u < α(i)}`.
pub fn alpha_inverse(a: &AlphaSeq, u: f64) -> usize {
    a.values.partition_point(|&v| u < v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Converging,
    Inconclusive,
    Diverging,
}

/// Convergence trend of a nonnegative series from its last decade of terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trend {
    pub verdict: Verdict,
    /// Fitted `γ` in `term(k) ≈ c·k^{-γ}` over `k ∈ [K/10, K]`.
    pub exponent: Option<f64>,
    /// `S(K) / S(⌊K/10⌋)`.
    pub last_decade_ratio: f64,
}

/// Terms are indexed from `k = 1`.
pub fn trend_verdict(terms: &[f64]) -> Trend {
    let n = terms.len();
    let mut partial = 0.0;
    let mut s_decade = 0.0;
    let start = (n / 10).max(1);
    for (i, t) in terms.iter().enumerate() {
        partial += t;
        if i + 1 == start {
            s_decade = partial;
        }
    }
    let last_decade_ratio = if s_decade > 0.0 {
        partial / s_decade
    } else if partial == 0.0 {
        1.0
    } else {
        f64::INFINITY
    };
    let tail = &terms[start.min(n)..];
    if n == 0 || tail.iter().all(|&t| t.abs() == 0.0) {
        return Trend { verdict: Verdict::Converging, exponent: None, last_decade_ratio };
    }
    let pts: Vec<(f64, f64)> = tail
        .iter()
        .enumerate()
        .filter(|(_, t)| t.abs() > 0.0)
        .map(|(i, t)| (((start + i + 1) as f64).ln(), t.abs().ln()))
        .collect();
    if pts.len() < 3 {
        return Trend { verdict: Verdict::Inconclusive, exponent: None, last_decade_ratio };
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let gamma = -sxy / sxx;
    let verdict = if gamma > 1.1 {
        Verdict::Converging
    } else if gamma < 0.9 {
        Verdict::Diverging
    } else {
        Verdict::Inconclusive
    };
    Trend { verdict, exponent: Some(gamma), last_decade_ratio }
}

/// Partial sums of `Σ_k k^b ∫₀^{α(k)} Q^p` and the quantile-weighted form
/// `∫₀¹ (α⁻¹)^{b+1} Q^p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingReport {
    pub power: i32,
    pub weight: u32,
    pub kmax: usize,
    /// `Σ_{k=1}^{kmax} k^b ∫₀^{α(k)} Q^p`.
    pub series: f64,
    pub terms: Vec<f64>,
    pub trend: Trend,
    /// `Σ_{i=0}^{kmax} (i+1)^{b+1} ∫_{α(i+1)}^{α(i)} Q^p`, i.e. `∫(α⁻¹)^{b+1}Q^p` with `α⁻¹` capped at `kmax + 1`.
    pub integral_form: f64,
    /// The same integral regrouped as `Σ_{i=0}^{kmax} ((i+1)^{b+1} − i^{b+1}) ∫₀^{α(i)} Q^p`.
    pub rearranged_form: f64,
}

pub fn mixing_integral(a: &AlphaSeq, q: &QuantileSeq, power: i32, weight: u32, kmax: usize) -> Result<MixingReport> {
    if power < 1 || kmax < 1 {
        return Err(Error::Domain("mixing integral needs p ≥ 1 and kmax ≥ 1".into()));
    }
    let b = weight as i32;
    let mut terms = Vec::with_capacity(kmax);
    for k in 1..=kmax {
        let ak = a.get(k);
        let t = if ak > 0.0 { (k as f64).powi(b) * q.integral_pow(power, 0.0, ak)? } else { 0.0 };
        terms.push(t);
    }
    let series = terms.iter().sum();
    let mut integral_form = 0.0;
    let mut rearranged_form = 0.0;
    for i in 0..=kmax {
        let (hi, lo) = (a.get(i), if i == kmax { 0.0 } else { a.get(i + 1) });
        let w = ((i + 1) as f64).powi(b + 1);
        integral_form += w * q.integral_pow(power, lo, hi)?;
        let dw = w - (i as f64).powi(b + 1);
        rearranged_form += dw * q.integral_pow(power, 0.0, a.get(i))?;
    }
    let trend = trend_verdict(&terms);
    Ok(MixingReport { power, weight, kmax, series, terms, trend, integral_form, rearranged_form })
}
