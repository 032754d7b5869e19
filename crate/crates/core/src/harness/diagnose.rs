use serde::{Deserialize, Serialize};

use crate::bounds::Evaluator;
use crate::coefficients::{
    alpha_exact, mixing_integral, quantile_from_sample, theta_coeff, trend_verdict, AlphaSeq, MixingReport,
    QuantileSeq, Trend,
};
use crate::error::Result;
use crate::numerics::quantile;
use crate::processes::{is_martingale, FourierFn, IidLaw, ProcessSpec};
use crate::wasserstein::{EmpiricalSample, FinitePmf};

/// Terms of a nonnegative series indexed from 1, their sum and trend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesColumn {
    pub label: String,
    pub terms: Vec<f64>,
    pub partial_sum: f64,
    pub trend: Trend,
}

impl SeriesColumn {
    fn new(label: String, terms: Vec<f64>) -> Self {
        let trend = trend_verdict(&terms);
        Self { label, partial_sum: terms.iter().sum(), terms, trend }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub process: String,
    pub kmax: usize,
    /// `j·θ_{p,q}(j)` for the index pairs `0 ≤ p < q ≤ (3 + p) ∧ 4`.
    pub theta: Vec<SeriesColumn>,
    /// `‖E₀(X_l²) − E X₀²‖_{3/2}` for martingale differences.
    pub jan: Option<SeriesColumn>,
    /// Exact single-index mixing coefficients where they can be computed.
    pub alpha_exact: Vec<(usize, f64)>,
    /// `Σ k^b ∫₀^{α(k)} Q³_{|X₀|}` for `b = 0, 1`.
    pub mixing: Vec<MixingReport>,
    pub notes: Vec<String>,
}

/// Pairs `(p, q)` with `0 ≤ p < q ≤ (3 + p) ∧ 4`.
pub fn theta_pairs() -> Vec<(usize, usize)> {
    (0..4).flat_map(|p| (p + 1..=(3 + p).min(4)).map(move |q| (p, q))).collect()
}

fn abs_quantile(spec: &ProcessSpec, f: &FourierFn<f64>) -> Result<QuantileSeq> {
    Ok(match spec {
        ProcessSpec::Iid(IidLaw::Rademacher) => QuantileSeq::constant(1.0),
        ProcessSpec::Iid(IidLaw::Discrete { pmf }) => QuantileSeq::abs_of_pmf(pmf),
        ProcessSpec::Iid(IidLaw::Gaussian { variance }) => {
            let s = variance.sqrt();
            QuantileSeq::closed(move |u| s * quantile(1.0 - u / 2.0).unwrap_or(f64::INFINITY))
        }
        ProcessSpec::FiniteChain(c) => {
            QuantileSeq::abs_of_pmf(&FinitePmf::new(c.values.clone(), c.stationary.clone())?)
        }
        _ => {
            // invariant law is Lebesgue: |f| on a fine midpoint grid
            let m = 1 << 16;
            let v: Vec<f64> = (0..m).map(|i| f.eval((i as f64 + 0.5) / m as f64).abs()).collect();
            quantile_from_sample(&EmpiricalSample::new(v)?)
        }
    })
}

/// Tabulates dependence and mixing conditions up to lag `kmax` and reports a
/// convergence verdict for each series. `window` bounds the index search of
/// the θ coefficients.
pub fn diagnose_conditions(
    spec: &ProcessSpec,
    f: &FourierFn<f64>,
    kmax: usize,
    alpha: Option<&AlphaSeq>,
    window: usize,
) -> Result<DiagnosticsReport> {
    spec.validate()?;
    let mut notes = Vec::new();
    let mut theta = Vec::new();
    for (p, q) in theta_pairs() {
        let mut terms = Vec::with_capacity(kmax);
        for j in 1..=kmax {
            terms.push(j as f64 * theta_coeff(spec, f, p, q, j, window)?.value);
        }
        theta.push(SeriesColumn::new(format!("j*theta_{p},{q}(j)"), terms));
    }

    let mds = match spec {
        ProcessSpec::Iid(law) if !law.uses_observable() => true,
        _ => is_martingale(spec, f),
    };
    let jan = if mds {
        let ev = Evaluator::new(spec, f)?;
        let terms = (1..=kmax).map(|l| ev.jan_norm(l)).collect::<Result<Vec<_>>>()?;
        Some(SeriesColumn::new("jan_norm(l)".into(), terms))
    } else {
        notes.push("jan norms skipped: observable is not a martingale difference".into());
        None
    };

    let mut alpha_tab = Vec::new();
    let table = match (alpha, spec) {
        (Some(a), _) => Some(a.clone()),
        (None, ProcessSpec::DoublingMap) => {
            for n in 1..=kmax.min(8) {
                alpha_tab.push((n, alpha_exact(spec, &[n], 12)?));
            }
            notes.push("mixing sums use the certified tabulation alpha(n) = 2^-n".into());
            Some(AlphaSeq::geometric(0.5, kmax + 1)?)
        }
        _ => {
            notes.push("mixing sums skipped: no alpha tabulation".into());
            None
        }
    };
    let mut mixing = Vec::new();
    if let Some(a) = table {
        let q = abs_quantile(spec, f)?;
        for b in [0, 1] {
            mixing.push(mixing_integral(&a, &q, 3, b, kmax)?);
        }
    }
    Ok(DiagnosticsReport { process: spec.name().into(), kmax, theta, jan, alpha_exact: alpha_tab, mixing, notes })
}
