use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::RandomStream;
use crate::wasserstein::FinitePmf;

use super::quantile::{lower_inverse, tail_quantile};
use super::step_integral;

const MAX_DIM: usize = 4;
const MAX_SUPPORT: usize = 64;

/// Finite law on `ℝᵏ`, `k ≤ 4`, at most 64 support points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "JointRepr")]
pub struct JointPmf {
    pub points: Vec<Vec<f64>>,
    pub probs: Vec<f64>,
}

#[derive(Deserialize)]
struct JointRepr {
    points: Vec<Vec<f64>>,
    probs: Vec<f64>,
}

impl TryFrom<JointRepr> for JointPmf {
    type Error = Error;
    fn try_from(r: JointRepr) -> Result<Self> {
        JointPmf::new(r.points, r.probs)
    }
}

impl JointPmf {
    pub fn new(points: Vec<Vec<f64>>, probs: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.len() != probs.len() || points.len() > MAX_SUPPORT {
            return Err(Error::Domain(format!("joint law needs 1..={MAX_SUPPORT} points with matching probs")));
        }
        let k = points[0].len();
        if k == 0 || k > MAX_DIM || points.iter().any(|p| p.len() != k) {
            return Err(Error::Domain(format!("joint law dimension must be 1..={MAX_DIM} and uniform")));
        }
        if points.iter().flatten().any(|x| !x.is_finite()) || probs.iter().any(|p| !(*p >= 0.0)) {
            return Err(Error::Domain("points must be finite and probs nonnegative".into()));
        }
        if (probs.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::Domain("joint probs must sum to 1".into()));
        }
        Ok(Self { points, probs })
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    /// Marginal law of coordinate `i`.
    pub fn marginal(&self, i: usize) -> FinitePmf<f64> {
        FinitePmf::new(self.points.iter().map(|p| p[i]).collect(), self.probs.clone())
            .expect("marginal of a valid joint law")
    }

    fn expect<G: Fn(&[f64]) -> f64>(&self, g: G) -> f64 {
        self.points.iter().zip(&self.probs).map(|(x, p)| p * g(x)).sum()
    }

    /// Law of `(f_1(X_1), …, f_k(X_k))`.
    pub fn map<G: Fn(usize, f64) -> f64>(&self, g: G) -> Result<Self> {
        let points = self
            .points
            .iter()
            .map(|x| x.iter().enumerate().map(|(i, &v)| g(i, v)).collect())
            .collect();
        Self::new(points, self.probs.clone())
    }
}

/// Midpoints between consecutive distinct atoms; the tail-indicator
/// functionals are constant between atoms and degenerate outside them.
fn midpoints(p: &FinitePmf<f64>) -> Vec<f64> {
    p.atoms.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
}

fn cartesian(lists: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new()];
    for l in lists {
        out = out
            .into_iter()
            .flat_map(|pre| {
                l.iter().map(move |&x| {
                    let mut p = pre.clone();
                    p.push(x);
                    p
                })
            })
            .collect();
    }
    out
}

/// `sup_x |E ∏ (1_{X_i > x_i} − P(X_i > x_i))|`, exact on atom midpoints.
fn alpha_unconditional(j: &JointPmf, coords: &[usize]) -> f64 {
    let margs: Vec<FinitePmf<f64>> = coords.iter().map(|&i| j.marginal(i)).collect();
    let lists: Vec<Vec<f64>> = margs.iter().map(midpoints).collect();
    if lists.iter().any(|l| l.is_empty()) {
        return 0.0;
    }
    let mut best: f64 = 0.0;
    for x in cartesian(&lists) {
        let tails: Vec<f64> = margs.iter().zip(&x).map(|(m, &t)| 1.0 - m.cdf(t)).collect();
        let v = j.expect(|pt| {
            coords
                .iter()
                .zip(&x)
                .zip(&tails)
                .map(|((&i, &t), &q)| (if pt[i] > t { 1.0 } else { 0.0 }) - q)
                .product()
        });
        best = best.max(v.abs());
    }
    best
}

/// `α(σ(X_c), (X_i)_{i≠c}) = sup_x ‖E(∏ g_{x_i}(X_i) | X_c) − E ∏ g‖₁` with
/// `g_x(t) = 1_{t ≤ x} − P(X ≤ x)`.
fn alpha_conditional(j: &JointPmf, c: usize) -> f64 {
    let others: Vec<usize> = (0..j.dim()).filter(|&i| i != c).collect();
    let margs: Vec<FinitePmf<f64>> = others.iter().map(|&i| j.marginal(i)).collect();
    let lists: Vec<Vec<f64>> = margs.iter().map(midpoints).collect();
    if others.is_empty() || lists.iter().any(|l| l.is_empty()) {
        return 0.0;
    }
    let cond = j.marginal(c);
    let mut best: f64 = 0.0;
    for x in cartesian(&lists) {
        let cdfs: Vec<f64> = margs.iter().zip(&x).map(|(m, &t)| m.cdf(t)).collect();
        let g = |pt: &[f64]| -> f64 {
            others
                .iter()
                .zip(&x)
                .zip(&cdfs)
                .map(|((&i, &t), &q)| (if pt[i] <= t { 1.0 } else { 0.0 }) - q)
                .product()
        };
        let mean = j.expect(g);
        let mut norm = 0.0;
        for (&a, &pa) in cond.atoms.iter().zip(&cond.probs) {
            if pa <= 0.0 {
                continue;
            }
            let mut num = 0.0;
            for (pt, &p) in j.points.iter().zip(&j.probs) {
                if pt[c] == a {
                    num += p * g(pt);
                }
            }
            norm += pa * (num / pa - mean).abs();
        }
        best = best.max(norm);
    }
    best
}

/// `D(u) = (F⁻¹(1−u) − F⁻¹(u))₊`.
fn dispersion(p: &FinitePmf<f64>, u: f64) -> f64 {
    (lower_inverse(p, 1.0 - u) - lower_inverse(p, u)).max(0.0)
}

/// Jumps of `u ↦ F⁻¹(u)` and `u ↦ F⁻¹(1 − u)`.
fn dispersion_breaks(p: &FinitePmf<f64>) -> Vec<f64> {
    let mut c = 0.0;
    let mut out = Vec::new();
    for q in &p.probs {
        c += q;
        out.push(c);
        out.push(1.0 - c);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceReport {
    pub lhs: f64,
    /// The tail-indicator coefficient over all coordinates.
    pub alpha: f64,
    /// Conditional coefficient of the remaining coordinates given the marked one.
    pub alpha_conditional: Option<f64>,
    /// `2∫₀^{α/2} ∏ D_i` with the coefficient actually used.
    pub rhs: f64,
    pub holds: bool,
    /// `α ≤ α(M, ·)` when a conditioning coordinate is marked.
    pub alpha_ordering_holds: Option<bool>,
}

/// Covariance inequality for a finite joint law; with `conditioning = Some(c)`
/// the bound uses the conditional coefficient given `X_c`.
pub fn covariance_bound_check(j: &JointPmf, conditioning: Option<usize>) -> Result<CovarianceReport> {
    let k = j.dim();
    if let Some(c) = conditioning {
        if c >= k {
            return Err(Error::Domain(format!("conditioning coordinate {c} out of range")));
        }
    }
    let margs: Vec<FinitePmf<f64>> = (0..k).map(|i| j.marginal(i)).collect();
    let means: Vec<f64> = margs.iter().map(|m| m.mean()).collect();
    let lhs = j.expect(|pt| pt.iter().zip(&means).map(|(x, m)| x - m).product()).abs();
    let coords: Vec<usize> = (0..k).collect();
    let alpha = alpha_unconditional(j, &coords);
    let alpha_cond = conditioning.map(|c| alpha_conditional(j, c));
    let used = alpha_cond.unwrap_or(alpha);
    let breaks: Vec<f64> = margs.iter().flat_map(dispersion_breaks).collect();
    let rhs = 2.0 * step_integral(&breaks, 0.0, (used / 2.0).min(0.5), |u| {
        margs.iter().map(|m| dispersion(m, u)).product()
    });
    Ok(CovarianceReport {
        lhs,
        alpha,
        alpha_conditional: alpha_cond,
        rhs,
        holds: lhs <= rhs + 1e-12,
        alpha_ordering_holds: alpha_cond.map(|ac| alpha <= ac + 1e-12),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionReport {
    pub holds: bool,
    pub zero_is_median: bool,
    /// `D = Q₊ + Q₋` wherever checked, when 0 is a median.
    pub equality_holds: Option<bool>,
    pub points_checked: usize,
}

/// `0 ≤ D(u) ≤ Q_{X₊}(u) + Q_{X₋}(u) ≤ 2Q_{|X|}(u)` for almost every `u < ½`,
/// checked off the jump set of every function involved.
pub fn dispersion_check(marginal: &FinitePmf<f64>) -> DispersionReport {
    let p = marginal;
    let plus = FinitePmf::new(p.atoms.iter().map(|a| a.max(0.0)).collect(), p.probs.clone()).unwrap();
    let minus = FinitePmf::new(p.atoms.iter().map(|a| (-a).max(0.0)).collect(), p.probs.clone()).unwrap();
    let abs = FinitePmf::new(p.atoms.iter().map(|a| a.abs()).collect(), p.probs.clone()).unwrap();
    let mut breaks: Vec<f64> = dispersion_breaks(p);
    for q in [&plus, &minus, &abs] {
        breaks.extend(dispersion_breaks(q));
    }
    breaks.extend((1..200).map(|i| i as f64 / 400.0));
    breaks.push(0.0);
    breaks.push(0.5);
    breaks.retain(|&b| (0.0..=0.5).contains(&b));
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let p_le0 = p.cdf(0.0);
    let p_ge0: f64 = p.atoms.iter().zip(&p.probs).filter(|(a, _)| **a >= 0.0).map(|(_, q)| q).sum();
    let zero_is_median = p_le0 >= 0.5 && p_ge0 >= 0.5;
    let mut holds = true;
    let mut equal = true;
    let mut count = 0;
    for w in breaks.windows(2) {
        if w[1] - w[0] < 1e-14 {
            continue;
        }
        let u = 0.5 * (w[0] + w[1]);
        count += 1;
        let d = dispersion(p, u);
        let s = tail_quantile(&plus, u) + tail_quantile(&minus, u);
        let a2 = 2.0 * tail_quantile(&abs, u);
        if !(d >= -1e-12 && d <= s + 1e-12 && s <= a2 + 1e-12) {
            holds = false;
        }
        if (d - s).abs() > 1e-12 {
            equal = false;
        }
    }
    DispersionReport {
        holds,
        zero_is_median,
        equality_holds: zero_is_median.then_some(equal),
        points_checked: count,
    }
}

/// `f = f⁽¹⁾ − f⁽²⁾` on the sorted atoms of one coordinate, each part nondecreasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneDiff {
    pub atoms: Vec<f64>,
    pub up: Vec<f64>,
    pub down: Vec<f64>,
}

impl MonotoneDiff {
    pub fn new(atoms: Vec<f64>, up: Vec<f64>, down: Vec<f64>) -> Result<Self> {
        let n = atoms.len();
        if up.len() != n || down.len() != n || atoms.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Domain("monotone parts must be tabulated on strictly increasing atoms".into()));
        }
        if up.windows(2).any(|w| w[1] < w[0]) || down.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Domain("both parts must be nondecreasing".into()));
        }
        Ok(Self { atoms, up, down })
    }

    fn index(&self, x: f64) -> usize {
        self.atoms.partition_point(|&a| a < x).min(self.atoms.len() - 1)
    }

    pub fn part(&self, which: usize, x: f64) -> f64 {
        let i = self.index(x);
        if which == 0 { self.up[i] } else { self.down[i] }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let i = self.index(x);
        self.up[i] - self.down[i]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorollaryReport {
    pub lhs: f64,
    pub alpha: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Monotone-difference version of the covariance inequality:
/// `|E ∏(f_i(X_i) − E f_i(X_i))| ≤ 2^{k+1} Σ_{j ∈ {1,2}^k} ∫₀^{α/2} ∏ Q_i^{(j_i)}`.
pub fn corollary_check(j: &JointPmf, fs: &[MonotoneDiff]) -> Result<CorollaryReport> {
    let k = j.dim();
    if fs.len() != k {
        return Err(Error::Domain("one transform per coordinate is required".into()));
    }
    let mapped = j.map(|i, x| fs[i].eval(x))?;
    let means: Vec<f64> = (0..k).map(|i| mapped.marginal(i).mean()).collect();
    let lhs = mapped.expect(|pt| pt.iter().zip(&means).map(|(x, m)| x - m).product()).abs();
    let coords: Vec<usize> = (0..k).collect();
    let alpha = alpha_unconditional(j, &coords);
    // Q_{|f_i^{(r)}(X_i)|}
    let parts: Vec<[FinitePmf<f64>; 2]> = (0..k)
        .map(|i| {
            let m = j.marginal(i);
            let mk = |r: usize| {
                FinitePmf::new(m.atoms.iter().map(|&x| fs[i].part(r, x).abs()).collect(), m.probs.clone()).unwrap()
            };
            [mk(0), mk(1)]
        })
        .collect();
    let mut breaks = Vec::new();
    for pr in &parts {
        for q in pr {
            let mut c = 0.0;
            for p in q.probs.iter().rev() {
                c += p;
                breaks.push(c);
            }
        }
    }
    let mut rhs = 0.0;
    for mask in 0..(1usize << k) {
        rhs += step_integral(&breaks, 0.0, alpha / 2.0, |u| {
            (0..k).map(|i| tail_quantile(&parts[i][(mask >> i) & 1], u)).product()
        });
    }
    rhs *= 2f64.powi(k as i32 + 1);
    Ok(CorollaryReport { lhs, alpha, rhs, holds: lhs <= rhs + 1e-12 })
}

/// Random joint law on `k` coordinates with at most `max_atoms` values per
/// coordinate and a random dependence structure.
pub fn random_joint(rng: &mut RandomStream, k: usize, max_atoms: usize) -> JointPmf {
    let grids: Vec<Vec<f64>> = (0..k)
        .map(|_| {
            let n = rng.random_range(1..=max_atoms);
            let mut v: Vec<f64> = (0..n).map(|_| (rng.random_range(-8i32..=8) as f64) * 0.5).collect();
            v.sort_by(f64::total_cmp);
            v.dedup();
            v
        })
        .collect();
    let support = rng.random_range(1..=(MAX_SUPPORT / 4).max(1));
    let mut points = Vec::with_capacity(support);
    let mut probs = Vec::with_capacity(support);
    let shared: Vec<usize> = (0..support).map(|_| rng.random_range(0..max_atoms)).collect();
    for s in 0..support {
        // mix a shared index (dependence) with independent picks
        let pt = grids
            .iter()
            .map(|g| {
                let idx = if rng.random_bool(0.6) { shared[s] % g.len() } else { rng.random_range(0..g.len()) };
                g[idx]
            })
            .collect();
        points.push(pt);
        probs.push(rng.random_range(0.05..1.0));
    }
    let total: f64 = probs.iter().sum();
    let mut probs: Vec<f64> = probs.iter().map(|p| p / total).collect();
    let fix = 1.0 - probs.iter().sum::<f64>();
    probs[0] += fix;
    JointPmf::new(points, probs).expect("generated joint law is valid")
}

/// Random nondecreasing pair `(f⁽¹⁾, f⁽²⁾)` on the atoms of coordinate `i`.
pub fn random_monotone_diff(rng: &mut RandomStream, j: &JointPmf, i: usize) -> MonotoneDiff {
    let atoms = j.marginal(i).atoms;
    let mut walk = |start: f64| {
        let mut v = start;
        atoms
            .iter()
            .map(|_| {
                v += rng.random_range(0.0..2.0) * if rng.random_bool(0.3) { 0.0 } else { 1.0 };
                v
            })
            .collect::<Vec<f64>>()
    };
    let up = walk(-2.0);
    let down = walk(-1.0);
    MonotoneDiff::new(atoms, up, down).expect("generated parts are monotone")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::substream;

    fn rademacher_pair() -> JointPmf {
        JointPmf::new(vec![vec![-1.0, -1.0], vec![1.0, 1.0]], vec![0.5, 0.5]).unwrap()
    }

    #[test]
    fn identical_rademacher_equality() {
        let r = covariance_bound_check(&rademacher_pair(), None).unwrap();
        assert_eq!(r.lhs, 1.0);
        assert_eq!(r.alpha, 0.25);
        assert_eq!(r.rhs, 1.0);
        assert!(r.holds);
    }

    #[test]
    fn independent_coordinates() {
        let pts = vec![vec![-1.0, 0.0], vec![-1.0, 2.0], vec![1.0, 0.0], vec![1.0, 2.0]];
        let j = JointPmf::new(pts, vec![0.25; 4]).unwrap();
        let r = covariance_bound_check(&j, None).unwrap();
        assert_eq!((r.lhs, r.alpha, r.rhs), (0.0, 0.0, 0.0));
        let r = covariance_bound_check(&j, Some(0)).unwrap();
        assert_eq!(r.alpha_conditional, Some(0.0));
    }

    #[test]
    fn triple_rademacher() {
        let j = JointPmf::new(vec![vec![-1.0; 3], vec![1.0; 3]], vec![0.5, 0.5]).unwrap();
        let r = covariance_bound_check(&j, None).unwrap();
        assert_eq!(r.lhs, 0.0);
        assert!(r.holds);
    }

    #[test]
    fn conditional_form_dominates() {
        let mut rng = substream(77, 0);
        for _ in 0..200 {
            let k = rng.random_range(2..=3);
            let j = random_joint(&mut rng, k, 4);
            let r = covariance_bound_check(&j, Some(0)).unwrap();
            assert!(r.holds, "{j:?} {r:?}");
            assert_eq!(r.alpha_ordering_holds, Some(true), "{j:?} {r:?}");
        }
    }

    #[test]
    fn dispersion_examples() {
        let r = dispersion_check(&FinitePmf::new(vec![-1.0, 1.0], vec![0.5, 0.5]).unwrap());
        assert!(r.holds && r.zero_is_median);
        assert_eq!(r.equality_holds, Some(true));
        assert!(dispersion_check(&FinitePmf::point_mass(0.0)).holds);
        let p = FinitePmf::new(vec![-0.5, 0.25, 3.0], vec![0.3, 0.3, 0.4]).unwrap();
        let shifted = FinitePmf::new(p.atoms.iter().map(|a| a + 1.7).collect(), p.probs.clone()).unwrap();
        for i in 1..50 {
            let u = i as f64 / 100.0 + 1e-3;
            assert!((dispersion(&p, u) - dispersion(&shifted, u)).abs() < 1e-12);
        }
    }

    #[test]
    fn corollary_on_random_instances() {
        let mut rng = substream(78, 0);
        for _ in 0..200 {
            let k = rng.random_range(2..=3);
            let j = random_joint(&mut rng, k, 4);
            let fs: Vec<MonotoneDiff> = (0..k).map(|i| random_monotone_diff(&mut rng, &j, i)).collect();
            let r = corollary_check(&j, &fs).unwrap();
            assert!(r.holds, "{r:?}");
        }
    }

    #[test]
    fn joint_json() {
        let j: JointPmf = serde_json::from_str(r#"{"points":[[1,1],[-1,-1]],"probs":[0.5,0.5]}"#).unwrap();
        assert_eq!(j.dim(), 2);
        assert!(serde_json::from_str::<JointPmf>(r#"{"points":[[1,1],[-1]],"probs":[0.5,0.5]}"#).is_err());
    }
}
