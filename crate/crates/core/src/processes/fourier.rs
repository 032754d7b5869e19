use serde::{Deserialize, Serialize};

use crate::real::Real;

/// Default frequency cap for [`FourierFn::product`].
pub const DEFAULT_PRODUCT_CAP: usize = 4096;

/// Real trigonometric polynomial on `[0, 1)`:
/// `constant + Σ_k (cos[k-1] cos 2πkx + sin[k-1] sin 2πkx)`.
///
/// The complex coefficient at frequency `k > 0` is `(a_k - i b_k) / 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "FourierRepr<T>", bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct FourierFn<T> {
    pub constant: T,
    pub cos: Vec<T>,
    pub sin: Vec<T>,
}

#[derive(Deserialize)]
struct FourierRepr<T> {
    #[serde(default)]
    constant: Option<T>,
    #[serde(default)]
    cos: Vec<T>,
    #[serde(default)]
    sin: Vec<T>,
}

impl<T: Real> From<FourierRepr<T>> for FourierFn<T> {
    fn from(r: FourierRepr<T>) -> Self {
        FourierFn::new(r.constant.unwrap_or_else(T::zero), r.cos, r.sin)
    }
}

/// Result of a capped product: the retained polynomial and the ℓ¹ mass of
/// the coefficients that were cut off.
#[derive(Debug, Clone, PartialEq)]
pub struct Truncated<T> {
    pub value: FourierFn<T>,
    pub dropped_l1: T,
}

impl<T: Real> FourierFn<T> {
    /// Pads the shorter coefficient list with zeros and strips trailing zero
    /// frequencies.
    pub fn new(constant: T, mut cos: Vec<T>, mut sin: Vec<T>) -> Self {
        let k = cos.len().max(sin.len());
        cos.resize(k, T::zero());
        sin.resize(k, T::zero());
        let mut f = Self { constant, cos, sin };
        f.trim();
        f
    }

    pub fn zero() -> Self {
        Self { constant: T::zero(), cos: Vec::new(), sin: Vec::new() }
    }

    pub fn constant_fn(c: T) -> Self {
        Self { constant: c, cos: Vec::new(), sin: Vec::new() }
    }

    /// `amp · cos 2πkx`.
    pub fn cosine(k: usize, amp: T) -> Self {
        Self::single(k, amp, true)
    }

    /// `amp · sin 2πkx`.
    pub fn sine(k: usize, amp: T) -> Self {
        Self::single(k, amp, false)
    }

    fn single(k: usize, amp: T, is_cos: bool) -> Self {
        if k == 0 {
            return if is_cos { Self::constant_fn(amp) } else { Self::zero() };
        }
        let mut cos = vec![T::zero(); k];
        let mut sin = vec![T::zero(); k];
        if is_cos {
            cos[k - 1] = amp;
        } else {
            sin[k - 1] = amp;
        }
        Self::new(T::zero(), cos, sin)
    }

    fn trim(&mut self) {
        while let (Some(c), Some(s)) = (self.cos.last(), self.sin.last()) {
            if c.is_zero() && s.is_zero() {
                self.cos.pop();
                self.sin.pop();
            } else {
                break;
            }
        }
    }

    pub fn max_freq(&self) -> usize {
        self.cos.len()
    }

    /// Coefficients `(a_k, b_k)` at frequency `k ≥ 1`, zero beyond the support.
    #[inline]
    pub fn coeff(&self, k: usize) -> (T, T) {
        if k == 0 || k > self.cos.len() {
            (T::zero(), T::zero())
        } else {
            (self.cos[k - 1], self.sin[k - 1])
        }
    }

    /// Mean under Lebesgue measure.
    pub fn mean(&self) -> T {
        self.constant
    }

    pub fn is_centered(&self, tol: T) -> bool {
        self.constant.abs() <= tol
    }

    pub fn is_finite(&self) -> bool {
        self.constant.is_finite() && self.cos.iter().chain(&self.sin).all(|c| c.is_finite())
    }

    pub fn eval(&self, x: T) -> T {
        let mut acc = self.constant;
        if self.cos.is_empty() {
            return acc;
        }
        let theta = T::lit(2.0) * T::PI() * x;
        let (s1, c1) = theta.sin_cos();
        let (mut ck, mut sk) = (c1, s1);
        for k in 0..self.cos.len() {
            acc = acc + self.cos[k] * ck + self.sin[k] * sk;
            let next_c = ck * c1 - sk * s1;
            let next_s = sk * c1 + ck * s1;
            ck = next_c;
            sk = next_s;
        }
        acc
    }

    pub fn scale(&self, c: T) -> Self {
        Self::new(
            self.constant * c,
            self.cos.iter().map(|&a| a * c).collect(),
            self.sin.iter().map(|&b| b * c).collect(),
        )
    }

    pub fn add(&self, other: &Self) -> Self {
        let k = self.max_freq().max(other.max_freq());
        let mut cos = vec![T::zero(); k];
        let mut sin = vec![T::zero(); k];
        for j in 1..=k {
            let (a1, b1) = self.coeff(j);
            let (a2, b2) = other.coeff(j);
            cos[j - 1] = a1 + a2;
            sin[j - 1] = b1 + b2;
        }
        Self::new(self.constant + other.constant, cos, sin)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-T::one()))
    }

    pub fn add_constant(&self, c: T) -> Self {
        let mut out = self.clone();
        out.constant = out.constant + c;
        out
    }

    /// Sum of absolute coefficient values; bounds the sup norm.
    pub fn coeff_l1(&self) -> T {
        self.constant.abs() + self.cos.iter().chain(&self.sin).map(|c| c.abs()).sum::<T>()
    }

    /// Upper bound on `sup |f'|`.
    pub fn derivative_bound(&self) -> T {
        let two_pi = T::lit(2.0) * T::PI();
        (1..=self.max_freq())
            .map(|k| {
                let (a, b) = self.coeff(k);
                two_pi * T::from_usize(k).unwrap() * (a.abs() + b.abs())
            })
            .sum()
    }

    /// `∫₀¹ f g` by Parseval.
    pub fn inner(&self, other: &Self) -> T {
        let k = self.max_freq().min(other.max_freq());
        let half = T::lit(0.5);
        let mut acc = self.constant * other.constant;
        for j in 1..=k {
            let (a1, b1) = self.coeff(j);
            let (a2, b2) = other.coeff(j);
            acc = acc + half * (a1 * a2 + b1 * b2);
        }
        acc
    }

    /// Pointwise product, keeping frequencies up to `cap`.
    pub fn product(&self, other: &Self, cap: usize) -> Truncated<T> {
        let k1 = self.max_freq();
        let k2 = other.max_freq();
        let kk = k1 + k2;
        // index 0 holds the constant as a cos(0) coefficient
        let mut cos = vec![T::zero(); kk + 1];
        let mut sin = vec![T::zero(); kk + 1];
        let half = T::lit(0.5);
        let ca = |j: usize| if j == 0 { self.constant } else { self.cos[j - 1] };
        let sa = |j: usize| if j == 0 { T::zero() } else { self.sin[j - 1] };
        let cb = |j: usize| if j == 0 { other.constant } else { other.cos[j - 1] };
        let sb = |j: usize| if j == 0 { T::zero() } else { other.sin[j - 1] };
        for j in 0..=k1 {
            let (aj, bj) = (ca(j), sa(j));
            if aj.is_zero() && bj.is_zero() {
                continue;
            }
            for k in 0..=k2 {
                let (ak, bk) = (cb(k), sb(k));
                if ak.is_zero() && bk.is_zero() {
                    continue;
                }
                let sum = j + k;
                let (diff, flip) = if j >= k { (j - k, T::one()) } else { (k - j, -T::one()) };
                // cos j cos k
                let cc = half * aj * ak;
                cos[sum] = cos[sum] + cc;
                cos[diff] = cos[diff] + cc;
                // sin j sin k
                let ss = half * bj * bk;
                cos[diff] = cos[diff] + ss;
                cos[sum] = cos[sum] - ss;
                // cos j sin k = ½ sin(j+k) − ½ sin(j−k)
                let cs = half * aj * bk;
                sin[sum] = sin[sum] + cs;
                sin[diff] = sin[diff] - flip * cs;
                // sin j cos k = ½ sin(j+k) + ½ sin(j−k)
                let sc = half * bj * ak;
                sin[sum] = sin[sum] + sc;
                sin[diff] = sin[diff] + flip * sc;
            }
        }
        let constant = cos[0];
        let keep = kk.min(cap);
        let dropped_l1 = (keep + 1..=kk).map(|m| cos[m].abs() + sin[m].abs()).sum();
        let value = Self::new(constant, cos[1..=keep].to_vec(), sin[1..=keep].to_vec());
        Truncated { value, dropped_l1 }
    }

    /// Uncapped product.
    pub fn mul(&self, other: &Self) -> Self {
        self.product(other, usize::MAX).value
    }
}
