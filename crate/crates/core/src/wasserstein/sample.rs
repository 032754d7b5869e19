use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;

/// Sorted, finite, nonempty sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalSample<T> {
    values: Vec<T>,
}

impl<T: Real> EmpiricalSample<T> {
    pub fn new(mut values: Vec<T>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Domain("empty sample".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("sample contains non-finite values".into()));
        }
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(Self { values })
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn min(&self) -> T {
        self.values[0]
    }

    pub fn max(&self) -> T {
        self.values[self.values.len() - 1]
    }

    pub fn mean(&self) -> T {
        self.values.iter().copied().sum::<T>() / T::from_usize(self.len()).unwrap()
    }

    /// Sample multiplied by `c > 0`.
    pub fn scaled(&self, c: T) -> Result<Self> {
        if !(c > T::zero()) {
            return Err(Error::Domain("scale must be positive".into()));
        }
        Ok(Self { values: self.values.iter().map(|&v| v * c).collect() })
    }

    /// Empirical distribution function `#{x_i ≤ x} / m`.
    pub fn cdf(&self, x: T) -> T {
        let k = self.values.partition_point(|&v| v <= x);
        T::from_usize(k).unwrap() / T::from_usize(self.len()).unwrap()
    }
}

impl EmpiricalSample<f64> {
    /// Reads one value per line; a leading non-numeric line is taken as a header.
    pub fn from_csv<P: AsRef<Path>>(path: P) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_path(path)?;
        let mut values = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let Some(field) = rec.get(0).filter(|s| !s.is_empty()) else { continue };
            match field.parse::<f64>() {
                Ok(v) => values.push(v),
                Err(_) if line == 0 => continue,
                Err(_) => return Err(Error::Schema(format!("line {}: not a number: {field:?}", line + 1))),
            }
        }
        Self::new(values)
    }

    pub fn to_csv<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for v in &self.values {
            w.write_record([format!("{v:?}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Finite discrete law with strictly increasing atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PmfRepr<T>", bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct FinitePmf<T> {
    pub atoms: Vec<T>,
    pub probs: Vec<T>,
}

#[derive(Deserialize)]
struct PmfRepr<T> {
    atoms: Vec<T>,
    probs: Vec<T>,
}

impl<T: Real> TryFrom<PmfRepr<T>> for FinitePmf<T> {
    type Error = Error;
    fn try_from(r: PmfRepr<T>) -> Result<Self> {
        FinitePmf::new(r.atoms, r.probs)
    }
}

impl<T: Real> FinitePmf<T> {
    /// Sorts atoms, merges repeated ones and checks the probabilities.
    pub fn new(atoms: Vec<T>, probs: Vec<T>) -> Result<Self> {
        if atoms.is_empty() || atoms.len() != probs.len() {
            return Err(Error::Domain("atoms and probs must be nonempty and of equal length".into()));
        }
        if atoms.iter().any(|a| !a.is_finite()) || probs.iter().any(|p| !(*p >= T::zero()) || !p.is_finite()) {
            return Err(Error::Domain("atoms must be finite and probs nonnegative".into()));
        }
        let total: T = probs.iter().copied().sum();
        let tol = T::lit(1e-12).max(T::epsilon() * T::lit(64.0));
        if (total - T::one()).abs() > tol {
            return Err(Error::Domain(format!("probs sum to {}, not 1", total.to_f64_lossy())));
        }
        let mut pairs: Vec<(T, T)> = atoms.into_iter().zip(probs).collect();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut out_a: Vec<T> = Vec::with_capacity(pairs.len());
        let mut out_p: Vec<T> = Vec::with_capacity(pairs.len());
        for (a, p) in pairs {
            if out_a.last() == Some(&a) {
                let last = out_p.last_mut().unwrap();
                *last = *last + p;
            } else {
                out_a.push(a);
                out_p.push(p);
            }
        }
        Ok(Self { atoms: out_a, probs: out_p })
    }

    pub fn point_mass(x: T) -> Self {
        Self { atoms: vec![x], probs: vec![T::one()] }
    }

    /// Law of `c·X`.
    pub fn scaled(&self, c: T) -> Result<Self> {
        Self::new(self.atoms.iter().map(|&a| a * c).collect(), self.probs.clone())
    }

    pub fn mean(&self) -> T {
        self.atoms.iter().zip(&self.probs).map(|(&a, &p)| a * p).sum()
    }

    /// `E|X|^r`.
    pub fn abs_moment(&self, r: T) -> T {
        self.atoms.iter().zip(&self.probs).map(|(&a, &p)| a.abs().powf(r) * p).sum()
    }

    pub fn cdf(&self, x: T) -> T {
        let k = self.atoms.partition_point(|&a| a <= x);
        self.probs[..k].iter().copied().sum()
    }
}

/// Exact law of `scale · (ε₁ + ⋯ + ε_n)` for i.i.d. Rademacher signs.
pub fn rademacher_sum_law(n: usize, scale: f64) -> Result<FinitePmf<f64>> {
    if n == 0 {
        return Ok(FinitePmf::point_mass(0.0));
    }
    // log C(n, k) by the multiplicative recurrence, then normalize
    let mut logc = vec![0.0f64; n + 1];
    for k in 1..=n {
        logc[k] = logc[k - 1] + ((n - k + 1) as f64).ln() - (k as f64).ln();
    }
    let ln2n = n as f64 * std::f64::consts::LN_2;
    let probs: Vec<f64> = logc.iter().map(|l| (l - ln2n).exp()).collect();
    let total: f64 = probs.iter().sum();
    let probs: Vec<f64> = probs.iter().map(|p| p / total).collect();
    let atoms = (0..=n).map(|k| scale * (2.0 * k as f64 - n as f64)).collect();
    FinitePmf::new(atoms, probs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_sorted_and_validated() {
        let s = EmpiricalSample::new(vec![3.0, -1.0, 2.0]).unwrap();
        assert_eq!(s.values(), &[-1.0, 2.0, 3.0]);
        assert!(EmpiricalSample::<f64>::new(vec![]).is_err());
        assert!(EmpiricalSample::new(vec![1.0, f64::NAN]).is_err());
        assert_eq!(s.cdf(2.0), 2.0 / 3.0);
    }

    #[test]
    fn pmf_merges_and_validates() {
        let p = FinitePmf::new(vec![1.0, 0.0, 1.0], vec![0.25, 0.5, 0.25]).unwrap();
        assert_eq!(p.atoms, vec![0.0, 1.0]);
        assert_eq!(p.probs, vec![0.5, 0.5]);
        assert!(FinitePmf::new(vec![0.0, 1.0], vec![0.5, 0.6]).is_err());
        assert!(FinitePmf::new(vec![0.0], vec![-1.0]).is_err());
        let j: FinitePmf<f64> = serde_json::from_str(r#"{"atoms":[1,-1],"probs":[0.5,0.5]}"#).unwrap();
        assert_eq!(j.atoms, vec![-1.0, 1.0]);
        assert!(serde_json::from_str::<FinitePmf<f64>>(r#"{"atoms":[1],"probs":[0.5]}"#).is_err());
    }

    #[test]
    fn binomial_law() {
        let p = rademacher_sum_law(4, 0.5).unwrap();
        assert_eq!(p.atoms, vec![-2.0, -1.0, 0.0, 1.0, 2.0]);
        let expect = [1.0, 4.0, 6.0, 4.0, 1.0];
        for (q, e) in p.probs.iter().zip(expect) {
            assert!((q - e / 16.0).abs() < 1e-15);
        }
        let big = rademacher_sum_law(4096, 1.0 / 64.0).unwrap();
        assert!(big.mean().abs() < 1e-12);
        assert!((big.abs_moment(2.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        let s = EmpiricalSample::new(vec![0.1, -2.5, 1e-300, 7.0]).unwrap();
        s.to_csv(&path).unwrap();
        assert_eq!(EmpiricalSample::from_csv(&path).unwrap(), s);
        std::fs::write(&path, "value\n1.5\n-2\n").unwrap();
        assert_eq!(EmpiricalSample::from_csv(&path).unwrap().values(), &[-2.0, 1.5]);
        std::fs::write(&path, "1\nx\n").unwrap();
        assert!(EmpiricalSample::from_csv(&path).is_err());
    }
}
