use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::coefficients::AlphaSeq;
use crate::error::{Error, Result};
use crate::numerics::Tolerance;
use crate::processes::{FourierFn, IidLaw, ProcessSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    EmpiricalD1,
    Ks,
    Thm21,
    Thm22,
    Thm23Terms,
    RateFit,
    Zolotarev,
}

fn default_bootstrap() -> usize {
    100
}

fn default_kmax() -> usize {
    20
}

/// One experiment: a process, an observable, the sample sizes to visit and
/// what to compute at each of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub process: ProcessSpec,
    #[serde(default = "FourierFn::zero")]
    pub observable: FourierFn<f64>,
    pub n_grid: Vec<usize>,
    pub reps: usize,
    pub seed: u64,
    pub targets: BTreeSet<Target>,
    #[serde(default)]
    pub tolerance: Tolerance<f64>,
    /// Path prefix for `<prefix>.csv` and `<prefix>.manifest.json`.
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Use the exact law of `S_n` instead of simulation (Rademacher only).
    #[serde(default)]
    pub exact: bool,
    /// Bootstrap resamples for Monte Carlo standard errors.
    #[serde(default = "default_bootstrap")]
    pub bootstrap: usize,
    /// Mixing-coefficient tabulation for `diagnose`.
    #[serde(default)]
    pub alpha: Option<AlphaSeq>,
    /// Largest lag tabulated by `diagnose`.
    #[serde(default = "default_kmax")]
    pub kmax: usize,
}

impl ExperimentConfig {
    pub fn new(process: ProcessSpec, observable: FourierFn<f64>, n_grid: Vec<usize>, reps: usize, seed: u64) -> Self {
        Self {
            process,
            observable,
            n_grid,
            reps,
            seed,
            targets: BTreeSet::new(),
            tolerance: Tolerance::default(),
            output: None,
            exact: false,
            bootstrap: default_bootstrap(),
            alpha: None,
            kmax: default_kmax(),
        }
    }

    pub fn with_targets(mut self, t: &[Target]) -> Self {
        self.targets = t.iter().copied().collect();
        self
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(s)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn empirical(&self) -> bool {
        self.targets.contains(&Target::EmpiricalD1) || self.targets.contains(&Target::Ks)
    }

    pub fn validate(&self) -> Result<()> {
        self.process.validate()?;
        if !self.observable.is_finite() {
            return Err(Error::Domain("observable has non-finite coefficients".into()));
        }
        if self.n_grid.is_empty() || self.n_grid[0] == 0 || self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Domain("n_grid must be nonempty, positive and strictly increasing".into()));
        }
        if self.targets.is_empty() {
            return Err(Error::Domain("at least one target is required".into()));
        }
        if self.exact {
            if !matches!(self.process, ProcessSpec::Iid(IidLaw::Rademacher)) {
                return Err(Error::Domain("exact mode is available for the Rademacher law only".into()));
            }
        } else if self.empirical() && self.reps < 100 {
            return Err(Error::Domain(format!("empirical targets need reps ≥ 100, got {}", self.reps)));
        }
        if self.empirical() && !self.exact && self.bootstrap < 2 {
            return Err(Error::Domain("bootstrap needs at least two resamples".into()));
        }
        Tolerance::new(self.tolerance.abs_tol, self.tolerance.rel_tol, self.tolerance.max_depth)?;
        if self.kmax == 0 {
            return Err(Error::Domain("kmax must be at least 1".into()));
        }
        Ok(())
    }
}
