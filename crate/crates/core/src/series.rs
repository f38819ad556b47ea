// SPDX-License-Identifier: MIT OR Apache-2.0

//! Observed series, CUSUM processes and the Cramér–von Mises /
//! Anderson–Darling functionals evaluated exactly over the step path.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{compensated_sum, partial_sums, CompensatedSum, Real};

/// Smallest accepted series length.
pub const MIN_LEN: usize = 4;

/// A finite real-valued sequence `X_1..X_N` with `N >= 4`.
#[derive(Clone, Debug, PartialEq)]
pub struct Series<T> {
    values: Vec<T>,
}

impl<T: Real> Series<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if values.len() < MIN_LEN {
            return Err(Error::TooShort {
                n: values.len(),
                min: MIN_LEN,
            });
        }
        if let Some(index) = values.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { values })
    }

    pub fn from_slice(values: &[T]) -> Result<Self> {
        Self::new(values.to_vec())
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    // A valid series is never empty; kept for clippy's len_without_is_empty.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> T {
        compensated_sum(&self.values) / T::from_count(self.len())
    }

    /// Deviations `X_i - X̄_N`.
    pub fn centered(&self) -> Vec<T> {
        let mean = self.mean();
        self.values.iter().map(|&x| x - mean).collect()
    }

    /// Applies `f` elementwise and revalidates.
    pub fn map(&self, f: impl Fn(T) -> T) -> Result<Self> {
        Self::new(self.values.iter().map(|&x| f(x)).collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CusumVariant {
    /// `Z_N(t)`, stored at `t = k/N`, `k = 0..N`.
    Standard,
    /// `Z̃_N(u)` with index `⌊(N+1)u⌋`, stored at `u = j/(N+1)`, `j = 0..N+1`.
    TiedDown,
}

/// Piecewise-constant CUSUM path.
///
/// For [`CusumVariant::Standard`] the path takes value `z[k]` on
/// `[k/N, (k+1)/N)`; for [`CusumVariant::TiedDown`] it takes value `z[j]` on
/// `[j/(N+1), (j+1)/(N+1))`.
#[derive(Clone, Debug, PartialEq)]
pub struct CusumProcess<T> {
    z: Vec<T>,
    n: usize,
    variant: CusumVariant,
}

impl<T: Real> CusumProcess<T> {
    pub fn values(&self) -> &[T] {
        &self.z
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn variant(&self) -> CusumVariant {
        self.variant
    }

    /// Evaluates the step path at `t ∈ [0, 1]`.
    pub fn at(&self, t: T) -> T {
        let cells = match self.variant {
            CusumVariant::Standard => self.n,
            CusumVariant::TiedDown => self.n + 1,
        };
        let idx = (t * T::from_count(cells))
            .floor()
            .to_usize()
            .unwrap_or(0)
            .min(self.z.len() - 1);
        self.z[idx]
    }
}

/// Centered partial sums `D_k = Σ_{ℓ≤k}(X_ℓ - X̄)` corrected so that the
/// closing value is exactly zero: `D_k - (k/N) D_N`.
fn bridged_partial_sums<T: Real>(s: &Series<T>) -> Vec<T> {
    let n = T::from_count(s.len());
    let d = partial_sums(&s.centered());
    let closing = d[s.len()];
    d.iter()
        .enumerate()
        .map(|(k, &dk)| dk - T::from_count(k) / n * closing)
        .collect()
}

/// `Z_N(k/N) = N^{-1/2}(Σ_{ℓ≤k} X_ℓ - (k/N) Σ_{ℓ≤N} X_ℓ)` for `k = 0..N`.
pub fn cusum_process<T: Real>(s: &Series<T>) -> CusumProcess<T> {
    let scale = T::from_count(s.len()).sqrt().recip();
    let z = bridged_partial_sums(s)
        .into_iter()
        .map(|v| v * scale)
        .collect();
    CusumProcess {
        z,
        n: s.len(),
        variant: CusumVariant::Standard,
    }
}

/// `Z̃_N(u)` at `u = j/(N+1)`, `j = 0..N+1`.
///
/// `⌊(N+1)u⌋ = j` on the j-th cell, so the first `N+1` values coincide with
/// the standard path; the cell `[N/(N+1), 1)` uses the full-sample sum and is
/// zero, as is the closing value at `u = 1`.
pub fn cusum_tied<T: Real>(s: &Series<T>) -> CusumProcess<T> {
    let mut z = cusum_process(s).z;
    z.push(T::zero());
    CusumProcess {
        z,
        n: s.len(),
        variant: CusumVariant::TiedDown,
    }
}

/// `∫₀¹ Z_N²(t) dt = (1/N) Σ_{k=0}^{N-1} z[k]²`.
pub fn cm_statistic<T: Real>(c: &CusumProcess<T>) -> Result<T> {
    if c.variant != CusumVariant::Standard {
        return Err(Error::VariantMismatch {
            operation: "cm_statistic",
        });
    }
    let mut acc = CompensatedSum::new();
    for &z in &c.z[..c.n] {
        acc.add(z * z);
    }
    Ok(acc.value() / T::from_count(c.n))
}

/// `ln(b/(1-b)) - ln(a/(1-a))`, the integral of `1/(t(1-t))` over `[a, b]`.
fn logit_increment<T: Real>(a: T, b: T) -> T {
    ((b * (T::one() - a)) / (a * (T::one() - b))).ln()
}

/// Anderson–Darling functional `∫ Z²(t)/(t(1-t)) dt`.
///
/// The standard variant integrates over `[1/N, 1-1/N]`; the tied-down variant
/// over `(0, 1)`, where its vanishing end cells remove the singularities.
pub fn ad_statistic<T: Real>(c: &CusumProcess<T>) -> T {
    let (cells, first, last) = match c.variant {
        // cells k = 1..=N-2 of width 1/N cover [1/N, 1-1/N]
        CusumVariant::Standard => (c.n, 1, c.n - 2),
        // cells j = 0 and j = N are identically zero
        CusumVariant::TiedDown => (c.n + 1, 1, c.n - 1),
    };
    let width = T::from_count(cells);
    let mut acc = CompensatedSum::new();
    for k in first..=last {
        let z = c.z[k];
        if z == T::zero() {
            continue;
        }
        let a = T::from_count(k) / width;
        let b = T::from_count(k + 1) / width;
        acc.add(z * z * logit_increment(a, b));
    }
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: &[f64]) -> Series<f64> {
        Series::from_slice(v).unwrap()
    }

    #[test]
    fn rejects_short_and_non_finite() {
        assert_eq!(
            Series::from_slice(&[1.0_f64, 2.0, 3.0]),
            Err(Error::TooShort { n: 3, min: 4 })
        );
        assert_eq!(
            Series::from_slice(&[1.0, f64::NAN, 3.0, 4.0]),
            Err(Error::NonFinite { index: 1 })
        );
        assert!(Series::from_slice(&[1.0, 2.0, f64::INFINITY, 4.0]).is_err());
    }

    #[test]
    fn constant_series_has_zero_cusum() {
        let c = cusum_process(&s(&[2.5; 4]));
        assert!(c.values().iter().all(|&z| z == 0.0));
        assert_eq!(cm_statistic(&c).unwrap(), 0.0);
        assert_eq!(ad_statistic(&c), 0.0);
        assert!(cusum_tied(&s(&[2.5; 4])).values().iter().all(|&z| z == 0.0));
    }

    #[test]
    fn step_series_cusum_values() {
        let c = cusum_process(&s(&[0.0, 0.0, 1.0, 1.0]));
        let expected = [0.0, -0.25, -0.5, -0.25, 0.0];
        for (z, e) in c.values().iter().zip(expected) {
            assert!((z - e).abs() < 1e-15, "{z} vs {e}");
        }
    }

    #[test]
    fn step_series_statistics() {
        let c = cusum_process(&s(&[0.0, 0.0, 1.0, 1.0]));
        assert!((cm_statistic(&c).unwrap() - 0.09375).abs() < 1e-15);
        let ad = ad_statistic(&c);
        assert!((ad - 0.3125 * 3.0_f64.ln()).abs() < 1e-14, "{ad}");
    }

    #[test]
    fn tied_variant_matches_standard_on_shared_indices() {
        let x = s(&[0.0, 0.0, 1.0, 1.0]);
        let std = cusum_process(&x);
        let tied = cusum_tied(&x);
        assert_eq!(tied.values().len(), 6);
        assert_eq!(&tied.values()[..5], std.values());
        assert_eq!(tied.values()[5], 0.0);
        // u in [N/(N+1), 1) uses the full-sample partial sum
        assert_eq!(tied.at(0.85), 0.0);
        assert_eq!(tied.at(0.25), std.values()[1]);
    }

    #[test]
    fn tied_ad_integrates_over_unit_interval() {
        let tied = cusum_tied(&s(&[0.0, 0.0, 1.0, 1.0]));
        // cells j=1..3 of width 1/5
        let l = |t: f64| (t / (1.0 - t)).ln();
        let expected =
            0.0625 * (l(0.4) - l(0.2)) + 0.25 * (l(0.6) - l(0.4)) + 0.0625 * (l(0.8) - l(0.6));
        assert!((ad_statistic(&tied) - expected).abs() < 1e-14);
    }

    #[test]
    fn cm_rejects_tied_variant() {
        let tied = cusum_tied(&s(&[0.0, 1.0, 0.0, 1.0]));
        assert!(matches!(
            cm_statistic(&tied),
            Err(Error::VariantMismatch { .. })
        ));
    }

    #[test]
    fn doubling_scales_statistics_by_four() {
        let x = s(&[0.3, -1.2, 2.0, 0.7, -0.4, 1.1]);
        let x2 = x.map(|v| 2.0 * v).unwrap();
        let c1 = cusum_process(&x);
        let c2 = cusum_process(&x2);
        assert_eq!(4.0 * cm_statistic(&c1).unwrap(), cm_statistic(&c2).unwrap());
        assert_eq!(4.0 * ad_statistic(&c1), ad_statistic(&c2));
    }

    #[test]
    fn endpoints_vanish_for_long_gaussian_like_series() {
        // deterministic pseudo-noise
        let v: Vec<f64> = (0..1000)
            .map(|i| ((i * 7919) % 1013) as f64 / 101.3 - 5.0)
            .collect();
        let c = cusum_process(&s(&v));
        assert_eq!(c.values()[0], 0.0);
        assert_eq!(c.values()[1000], 0.0);
        assert!(c.values().iter().all(|z| z.is_finite()));
    }

    #[test]
    fn f32_path_agrees_with_f64() {
        let v = [0.0_f32, 0.0, 1.0, 1.0];
        let c = cusum_process(&Series::from_slice(&v).unwrap());
        assert!((cm_statistic(&c).unwrap() - 0.09375).abs() < 1e-6);
        assert!((ad_statistic(&c) - 0.343_316).abs() < 1e-5);
    }
}
