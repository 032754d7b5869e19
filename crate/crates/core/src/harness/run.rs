use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, RngCore};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Target};
use crate::bounds::{rate_fit, zolotarev, BoundReport, Evaluator, MomentSummary, RateFit, Theorem};
use crate::error::{Error, Result};
use crate::numerics::{cdf, substream};
use crate::processes::{long_run_variance, simulate, ProcessSpec};
use crate::wasserstein::{
    ks_sample_gauss, rademacher_sum_law, w1_pmf_gauss, w1_sample_gauss_with, EmpiricalSample, FinitePmf,
    GaussQuantileTable,
};

pub const SCHEMA_VERSION: u32 = 1;

/// Per-`n` results. `d1_normalized` is `d₁(S_n/√n, σY)`; the bounds govern
/// `d1_unnormalized = d₁(S_n, σ√n Y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub process: String,
    pub observable: String,
    pub seed: u64,
    pub n: usize,
    pub reps: usize,
    pub d1_normalized: Option<f64>,
    pub d1_unnormalized: Option<f64>,
    /// Bootstrap standard error of `d1_normalized`.
    pub d1_se: Option<f64>,
    pub ks: Option<f64>,
    /// Sample variance of `S_n/√n`.
    pub var_normalized: Option<f64>,
    pub var_se: Option<f64>,
    pub bound_t21: Option<f64>,
    pub bound_t22: Option<f64>,
    pub thm23_series: Option<f64>,
    pub thm23_resolvent: Option<f64>,
    pub zolotarev: Option<f64>,
    pub slope: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTime {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedLog {
    pub base: u64,
    /// Seed driving the replicate substreams at each `n`.
    pub per_n: Vec<(usize, u64)>,
    pub bootstrap: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub stage: String,
    pub message: String,
    pub exit_code: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub schema_version: u32,
    pub library_version: String,
    pub config: ExperimentConfig,
    pub sigma2: Option<f64>,
    pub moments: Option<MomentSummary>,
    pub rows: Vec<ResultRow>,
    pub rate_fit: Option<RateFit<f64>>,
    pub bounds: Vec<BoundReport>,
    pub seeds: SeedLog,
    pub stages: Vec<StageTime>,
    pub notes: Vec<String>,
    pub failure: Option<Failure>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    /// Manifest with wall times zeroed, for reproducibility comparisons.
    pub fn without_timing(&self) -> Self {
        let mut m = self.clone();
        for s in &mut m.stages {
            s.seconds = 0.0;
        }
        m
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes `<prefix>.csv` and `<prefix>.manifest.json`.
    pub fn write_outputs(&self, prefix: &Path) -> Result<(PathBuf, PathBuf)> {
        let csv_path = with_suffix(prefix, ".csv");
        let json_path = with_suffix(prefix, ".manifest.json");
        if let Some(dir) = prefix.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        self.write_csv(std::fs::File::create(&csv_path)?)?;
        std::fs::write(&json_path, serde_json::to_string_pretty(self)?)?;
        Ok((csv_path, json_path))
    }
}

pub(crate) fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Seed for the replicate substreams at sample size `n`.
pub fn seed_for_n(base: u64, n: usize) -> u64 {
    substream(base, (1u64 << 40) + n as u64).next_u64()
}

pub fn bootstrap_seed(base: u64) -> u64 {
    substream(base, 1u64 << 41).next_u64()
}

/// Empirical summary of one sample of `S_n/√n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleStats {
    pub d1: f64,
    pub d1_se: f64,
    pub var: f64,
    pub var_se: f64,
    pub ks: f64,
}

fn variance(x: &[f64]) -> f64 {
    let m = x.iter().sum::<f64>() / x.len() as f64;
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() - 1) as f64
}

fn std_dev(x: &[f64]) -> f64 {
    variance(x).sqrt()
}

/// W1 distance to `N(0, σ²)`, KS distance and sample variance, with standard
/// errors from `resamples` bootstrap draws on `substream(boot_seed, b)`.
pub fn sample_stats(values: &[f64], sigma: f64, resamples: usize, boot_seed: u64) -> Result<SampleStats> {
    let s = EmpiricalSample::new(values.to_vec())?;
    let table = GaussQuantileTable::new(values.len())?;
    let d1 = w1_sample_gauss_with(&table, &s, sigma)?;
    let ks = ks_sample_gauss(&s, sigma)?;
    let var = variance(values);
    let boot: Vec<(f64, f64)> = (0..resamples)
        .into_par_iter()
        .map(|b| {
            let mut rng = substream(boot_seed, b as u64);
            let draw: Vec<f64> = (0..values.len()).map(|_| values[rng.random_range(0..values.len())]).collect();
            let v = variance(&draw);
            let d = w1_sample_gauss_with(&table, &EmpiricalSample::new(draw)?, sigma)?;
            Ok((d, v))
        })
        .collect::<Result<_>>()?;
    let ds: Vec<f64> = boot.iter().map(|b| b.0).collect();
    let vs: Vec<f64> = boot.iter().map(|b| b.1).collect();
    Ok(SampleStats { d1, d1_se: std_dev(&ds), var, var_se: std_dev(&vs), ks })
}

/// Sup distance between a finite law and `N(0, σ²)`, checked on both sides
/// of every atom.
pub fn ks_pmf_gauss(p: &FinitePmf<f64>, sigma: f64) -> f64 {
    let mut c = 0.0;
    let mut best: f64 = 0.0;
    for (a, q) in p.atoms.iter().zip(&p.probs) {
        let g = cdf(a / sigma);
        best = best.max((c - g).abs());
        c += q;
        best = best.max((c - g).abs());
    }
    best
}

struct Runner {
    manifest: RunManifest,
}

impl Runner {
    fn stage<T>(&mut self, name: &str, f: impl FnOnce(&mut RunManifest) -> Result<T>) -> Option<T> {
        if self.manifest.failure.is_some() {
            return None;
        }
        let t0 = Instant::now();
        let out = f(&mut self.manifest);
        self.manifest.stages.push(StageTime { stage: name.into(), seconds: t0.elapsed().as_secs_f64() });
        match out {
            Ok(v) => Some(v),
            Err(e) => {
                log::error!("stage {name} failed: {e}");
                self.manifest.failure =
                    Some(Failure { stage: name.into(), message: e.to_string(), exit_code: e.exit_code() });
                None
            }
        }
    }
}

fn observable_label(cfg: &ExperimentConfig) -> String {
    match &cfg.process {
        ProcessSpec::Iid(law) if !law.uses_observable() => "x".into(),
        ProcessSpec::FiniteChain(_) => "values".into(),
        _ => serde_json::to_string(&cfg.observable).unwrap_or_default(),
    }
}

/// Runs an experiment. Invalid configurations are returned as errors; a
/// failure inside a stage is recorded in the manifest and stops later stages.
pub fn run(cfg: &ExperimentConfig) -> Result<RunManifest> {
    cfg.validate()?;
    let boot = bootstrap_seed(cfg.seed);
    let per_n: Vec<(usize, u64)> = cfg.n_grid.iter().map(|&n| (n, seed_for_n(cfg.seed, n))).collect();
    let label = observable_label(cfg);
    let rows = cfg
        .n_grid
        .iter()
        .zip(&per_n)
        .map(|(&n, &(_, seed))| ResultRow {
            process: cfg.process.name().to_string(),
            observable: label.clone(),
            seed,
            n,
            reps: if cfg.exact { 0 } else { cfg.reps },
            d1_normalized: None,
            d1_unnormalized: None,
            d1_se: None,
            ks: None,
            var_normalized: None,
            var_se: None,
            bound_t21: None,
            bound_t22: None,
            thm23_series: None,
            thm23_resolvent: None,
            zolotarev: None,
            slope: None,
        })
        .collect();
    let mut r = Runner {
        manifest: RunManifest {
            schema_version: SCHEMA_VERSION,
            library_version: crate::VERSION.to_string(),
            config: cfg.clone(),
            sigma2: None,
            moments: None,
            rows,
            rate_fit: None,
            bounds: Vec::new(),
            seeds: SeedLog { base: cfg.seed, per_n, bootstrap: boot },
            stages: Vec::new(),
            notes: Vec::new(),
            failure: None,
        },
    };

    let sigma2 = r.stage("variance", |m| {
        let s2 = long_run_variance(&cfg.process, &cfg.observable)?.sigma2;
        m.sigma2 = Some(s2);
        Ok(s2)
    });
    let Some(sigma2) = sigma2 else { return Ok(r.manifest) };
    let sigma = sigma2.sqrt();

    if cfg.empirical() {
        r.stage("empirical", |m| {
            for row in m.rows.iter_mut() {
                let n = row.n;
                let rn = (n as f64).sqrt();
                if cfg.exact {
                    let law = rademacher_sum_law(n, 1.0 / rn)?;
                    row.d1_normalized = Some(w1_pmf_gauss(&law, sigma)?);
                    row.d1_unnormalized = Some(w1_pmf_gauss(&rademacher_sum_law(n, 1.0)?, sigma * rn)?);
                    row.d1_se = Some(0.0);
                    row.ks = Some(ks_pmf_gauss(&law, sigma));
                    row.var_normalized = Some(law.abs_moment(2.0));
                    row.var_se = Some(0.0);
                } else {
                    let ens = simulate(&cfg.process, &cfg.observable, n, cfg.reps, &[], row.seed)?;
                    let vals: Vec<f64> = ens.partial_sums.iter().map(|s| s / rn).collect();
                    let st = sample_stats(&vals, sigma, cfg.bootstrap, boot)?;
                    row.d1_normalized = Some(st.d1);
                    let raw = EmpiricalSample::new(ens.partial_sums.clone())?;
                    let table = GaussQuantileTable::new(raw.len())?;
                    row.d1_unnormalized = Some(w1_sample_gauss_with(&table, &raw, sigma * rn)?);
                    row.d1_se = Some(st.d1_se);
                    row.ks = Some(st.ks);
                    row.var_normalized = Some(st.var);
                    row.var_se = Some(st.var_se);
                }
                log::info!("n = {n}: d1 = {:?}", row.d1_normalized);
            }
            Ok(())
        });
    }

    let wants_bounds = [Target::Thm21, Target::Thm22, Target::Thm23Terms, Target::Zolotarev]
        .iter()
        .any(|t| cfg.targets.contains(t));
    if wants_bounds {
        r.stage("bounds", |m| {
            let ev = Evaluator::new(&cfg.process, &cfg.observable)?.with_tolerance(cfg.tolerance);
            let mo = ev.moments()?;
            m.moments = Some(mo);
            let z = if cfg.targets.contains(&Target::Zolotarev) { Some(zolotarev(mo.abs3, mo.var0)?) } else { None };
            let mds = crate::processes::is_martingale(&cfg.process, &cfg.observable)
                || matches!(&cfg.process, ProcessSpec::Iid(l) if !l.uses_observable());
            if cfg.targets.contains(&Target::Thm21) && !mds {
                m.notes.push("thm21 skipped: observable is not a martingale difference".into());
            }
            for i in 0..m.rows.len() {
                let n = m.rows[i].n as u64;
                m.rows[i].zolotarev = z;
                if cfg.targets.contains(&Target::Thm21) && mds {
                    let b = ev.thm21_bound(n)?;
                    m.rows[i].bound_t21 = Some(b.total);
                    m.bounds.push(b);
                }
                if cfg.targets.contains(&Target::Thm22) {
                    let b = ev.thm22_bound(n)?;
                    m.rows[i].bound_t22 = Some(b.total);
                    m.bounds.push(b);
                }
                if cfg.targets.contains(&Target::Thm23Terms) {
                    match ev.thm23_bound(n, Theorem::T23a) {
                        Ok(b) => {
                            m.rows[i].thm23_series = Some(b.total);
                            m.rows[i].thm23_resolvent = b.diagnostics.get("resolvent_partial_sum").copied();
                            m.bounds.push(b);
                        }
                        Err(Error::Precondition(msg)) => {
                            if i == 0 {
                                m.notes.push(format!("thm23 skipped: {msg}"));
                            }
                        }
                        Err(e) => return Err(e),
                    }
                }
            }
            if ev.truncation_l1() > 0.0 {
                m.notes.push(format!("fourier products truncated, dropped l1 mass {:e}", ev.truncation_l1()));
            }
            Ok(())
        });
    }

    if cfg.targets.contains(&Target::RateFit) {
        r.stage("rate_fit", |m| {
            let pts: Vec<(f64, f64)> =
                m.rows.iter().filter_map(|row| row.d1_normalized.map(|d| (row.n as f64, d))).collect();
            if pts.len() < 3 {
                m.notes.push("rate fit skipped: fewer than three empirical points".into());
                return Ok(());
            }
            let fit = rate_fit(&pts)?;
            for row in &mut m.rows {
                row.slope = Some(fit.slope);
            }
            m.rate_fit = Some(fit);
            Ok(())
        });
    }

    let manifest = r.manifest;
    if let Some(prefix) = &cfg.output {
        manifest.write_outputs(prefix)?;
    }
    Ok(manifest)
}
