use std::fmt;
use std::str::FromStr;

use super::config::{ExperimentConfig, Target};
use crate::error::{Error, Result};
use crate::processes::{CircleWalk, FourierFn, IidLaw, ProcessSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Doubling map with the martingale-difference observable `cos 2πx`.
    MdsDoubling,
    /// Random walk on the circle with step `√2 − 1`, observable `cos 2πx`.
    CircleWalk,
    /// Rademacher sums through their exact binomial law.
    IidRademacherExact,
    /// Doubling map with the nonadapted observable `cos 4πx`.
    DoublingNonadapted,
}

impl Preset {
    pub const ALL: [Preset; 4] =
        [Preset::MdsDoubling, Preset::CircleWalk, Preset::IidRademacherExact, Preset::DoublingNonadapted];

    pub fn name(self) -> &'static str {
        match self {
            Preset::MdsDoubling => "mds-doubling",
            Preset::CircleWalk => "circle-walk",
            Preset::IidRademacherExact => "iid-rademacher-exact",
            Preset::DoublingNonadapted => "doubling-nonadapted",
        }
    }

    fn default_n_max(self) -> usize {
        match self {
            Preset::IidRademacherExact => 1 << 12,
            _ => 1 << 14,
        }
    }

    /// Preset configuration; `None` keeps the default grid end, replicate
    /// count and seed.
    pub fn config(self, n_max: Option<usize>, reps: Option<usize>, seed: Option<u64>) -> Result<ExperimentConfig> {
        let n_max = n_max.unwrap_or(self.default_n_max());
        let step = if self == Preset::IidRademacherExact { 1 } else { 2 };
        let grid: Vec<usize> = (6..63).step_by(step).map(|k| 1usize << k).take_while(|&n| n <= n_max).collect();
        if grid.is_empty() {
            return Err(Error::Domain(format!("preset {} needs n_max ≥ 64", self.name())));
        }
        let reps = reps.unwrap_or(20_000);
        let seed = seed.unwrap_or(20_240_917);
        use Target::*;
        let cfg = match self {
            Preset::MdsDoubling => {
                ExperimentConfig::new(ProcessSpec::DoublingMap, FourierFn::cosine(1, 1.0), grid, reps, seed)
                    .with_targets(&[EmpiricalD1, Ks, Thm21, Thm22, RateFit, Zolotarev])
            }
            Preset::CircleWalk => ExperimentConfig::new(
                ProcessSpec::CircleWalk(CircleWalk::sqrt2_minus_1()),
                FourierFn::cosine(1, 1.0),
                grid,
                reps,
                seed,
            )
            .with_targets(&[EmpiricalD1, Ks, Thm22, Thm23Terms, RateFit]),
            Preset::IidRademacherExact => {
                let mut c = ExperimentConfig::new(ProcessSpec::Iid(IidLaw::Rademacher), FourierFn::zero(), grid, reps, seed)
                    .with_targets(&[EmpiricalD1, Ks, Thm21, RateFit, Zolotarev]);
                c.exact = true;
                c
            }
            Preset::DoublingNonadapted => {
                ExperimentConfig::new(ProcessSpec::DoublingMap, FourierFn::cosine(2, 1.0), grid, reps, seed)
                    .with_targets(&[EmpiricalD1, Ks, Thm22, Thm23Terms, RateFit])
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Domain(format!("unknown preset {s:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for p in Preset::ALL {
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
            assert!(p.config(None, None, None).is_ok());
        }
        assert!("nope".parse::<Preset>().is_err());
    }

    #[test]
    fn grids() {
        let c = Preset::MdsDoubling.config(None, None, None).unwrap();
        assert_eq!(c.n_grid, vec![64, 256, 1024, 4096, 16384]);
        let c = Preset::IidRademacherExact.config(None, None, None).unwrap();
        assert_eq!(c.n_grid, vec![64, 128, 256, 512, 1024, 2048, 4096]);
        assert!(Preset::CircleWalk.config(Some(32), None, None).is_err());
    }
}
