use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coefficients::{
    corollary_check, covariance_bound_check, dispersion_check, random_joint, random_monotone_diff, CovarianceReport,
    JointPmf, MonotoneDiff,
};
use crate::error::{Error, Result};
use crate::numerics::substream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppendixReport {
    pub count: usize,
    pub seed: u64,
    pub covariance_passed: usize,
    pub conditional_passed: usize,
    pub dispersion_passed: usize,
    pub corollary_passed: usize,
    /// Independent coordinates: the covariance side is zero.
    pub independent_passed: usize,
    /// Two identical Rademacher coordinates, where the bound is attained.
    pub equality_case: CovarianceReport,
    pub failures: Vec<String>,
}

impl AppendixReport {
    pub fn all_passed(&self) -> bool {
        let c = self.count;
        self.failures.is_empty()
            && [self.covariance_passed, self.conditional_passed, self.dispersion_passed, self.corollary_passed]
                .iter()
                .all(|&p| p == c)
            && self.independent_passed == c
            && self.equality_case.lhs == self.equality_case.rhs
    }
}

#[derive(Default)]
struct Tally {
    cov: bool,
    cond: bool,
    disp: bool,
    cor: bool,
    indep: bool,
    failures: Vec<String>,
}

fn one(seed: u64, i: usize) -> Result<Tally> {
    let mut rng = substream(seed, i as u64);
    let k = rng.random_range(2..=3);
    let j = random_joint(&mut rng, k, 4);
    let mut t = Tally::default();
    let cov = covariance_bound_check(&j, None)?;
    t.cov = cov.holds;
    let cond = covariance_bound_check(&j, Some(0))?;
    t.cond = cond.holds && cond.alpha_ordering_holds == Some(true);
    t.disp = (0..k).all(|c| dispersion_check(&j.marginal(c)).holds);
    let fs: Vec<MonotoneDiff> = (0..k).map(|c| random_monotone_diff(&mut rng, &j, c)).collect();
    t.cor = corollary_check(&j, &fs)?.holds;
    // product of the first two marginals
    let (a, b) = (j.marginal(0), j.marginal(1));
    let mut pts = Vec::new();
    let mut probs = Vec::new();
    for (x, p) in a.atoms.iter().zip(&a.probs) {
        for (y, q) in b.atoms.iter().zip(&b.probs) {
            pts.push(vec![*x, *y]);
            probs.push(p * q);
        }
    }
    let s: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= s);
    let ind = covariance_bound_check(&JointPmf::new(pts, probs)?, None)?;
    t.indep = ind.holds && ind.lhs.abs() <= 1e-12;
    for (ok, name) in [(t.cov, "covariance"), (t.cond, "conditional"), (t.disp, "dispersion"), (t.cor, "corollary"), (t.indep, "independent")] {
        if !ok {
            t.failures.push(format!("instance {i}: {name} check failed for {j:?}"));
        }
    }
    Ok(t)
}

/// Fuzzes the covariance, dispersion and monotone-difference inequalities on
/// `count` random finite joint laws with two or three coordinates.
pub fn check_appendix(count: usize, seed: u64) -> Result<AppendixReport> {
    if count == 0 {
        return Err(Error::Domain("count must be at least 1".into()));
    }
    let tallies: Vec<Tally> = (0..count).into_par_iter().map(|i| one(seed, i)).collect::<Result<_>>()?;
    let rademacher = JointPmf::new(vec![vec![-1.0, -1.0], vec![1.0, 1.0]], vec![0.5, 0.5])?;
    let equality_case = covariance_bound_check(&rademacher, None)?;
    log::info!("equality case: lhs = {}, rhs = {}", equality_case.lhs, equality_case.rhs);
    let n = |f: fn(&Tally) -> bool| tallies.iter().filter(|t| f(t)).count();
    Ok(AppendixReport {
        count,
        seed,
        covariance_passed: n(|t| t.cov),
        conditional_passed: n(|t| t.cond),
        dispersion_passed: n(|t| t.disp),
        corollary_passed: n(|t| t.cor),
        independent_passed: n(|t| t.indep),
        equality_case,
        failures: tallies.into_iter().flat_map(|t| t.failures).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_fuzz_passes() {
        let r = check_appendix(50, 3).unwrap();
        assert!(r.all_passed(), "{:?}", r.failures);
        assert_eq!((r.equality_case.lhs, r.equality_case.rhs), (1.0, 1.0));
        assert!(check_appendix(0, 3).is_err());
    }
}
