// SPDX-License-Identifier: MIT OR Apache-2.0

//! Nyström approximation of the eigenvalues of covariance operators.

use serde::{Deserialize, Serialize};

use crate::eigen::symmetric_eigenvalues;
use crate::error::{Error, Result};
use crate::kernel_cov::CovKernel;
use crate::scalar::Real;

/// Where a set of weights came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectrumSource {
    Theoretical,
    EmpiricalUncorrelated,
    EmpiricalCorrelated,
    #[serde(rename = "classical-cm")]
    ClassicalCm,
    #[serde(rename = "classical-ad")]
    ClassicalAd,
    #[serde(rename = "vs")]
    Vs,
}

impl SpectrumSource {
    pub fn name(self) -> &'static str {
        match self {
            Self::Theoretical => "theoretical",
            Self::EmpiricalUncorrelated => "empirical-uncorrelated",
            Self::EmpiricalCorrelated => "empirical-correlated",
            Self::ClassicalCm => "classical-cm",
            Self::ClassicalAd => "classical-ad",
            Self::Vs => "vs",
        }
    }
}

/// How many leading eigenvalues to keep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Truncation {
    Fixed(usize),
    /// Smallest `m` whose leading weights reach `fraction` of the positive
    /// mass, capped at `cap`.
    Mass {
        fraction: f64,
        cap: usize,
    },
}

impl Default for Truncation {
    fn default() -> Self {
        Self::Mass {
            fraction: 0.999,
            cap: 100,
        }
    }
}

impl Truncation {
    /// Number of terms to keep from descending non-negative `weights`.
    pub fn terms<T: Real>(&self, weights: &[T]) -> Result<usize> {
        let g = weights.len();
        if g == 0 {
            return Err(Error::EmptySpectrum);
        }
        match *self {
            Self::Fixed(m) => {
                if m == 0 || m > g {
                    return Err(Error::invalid(format!("need 1 <= m <= {g}, got {m}")));
                }
                Ok(m)
            }
            Self::Mass { fraction, cap } => {
                if !(fraction > 0.0 && fraction <= 1.0) || cap == 0 {
                    return Err(Error::invalid(
                        "mass truncation needs fraction in (0,1], cap >= 1",
                    ));
                }
                let total: f64 = weights.iter().map(|w| w.as_f64()).sum();
                if total <= 0.0 {
                    return Ok(1);
                }
                let mut acc = 0.0;
                for (i, w) in weights.iter().enumerate() {
                    acc += w.as_f64();
                    if acc >= fraction * total || i + 1 == cap {
                        return Ok(i + 1);
                    }
                }
                Ok(g.min(cap))
            }
        }
    }
}

/// Descending non-negative weights of a weighted-χ² limit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrum<T> {
    weights: Vec<T>,
    source: SpectrumSource,
    ad_weighted: bool,
    /// Total magnitude of the negative eigenvalues set to zero.
    clipped_mass: T,
    /// Degrees of freedom of each χ² term in the limit.
    dof: u32,
}

impl<T: Real> Spectrum<T> {
    /// Validated constructor for closed-form spectra.
    pub fn from_weights(weights: Vec<T>, source: SpectrumSource, dof: u32) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::EmptySpectrum);
        }
        if weights.iter().any(|&w| !(w >= T::zero()) || !w.is_finite()) {
            return Err(Error::invalid(
                "spectrum weights must be finite and non-negative",
            ));
        }
        if weights.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::invalid("spectrum weights must be descending"));
        }
        Ok(Self {
            weights,
            source,
            ad_weighted: matches!(source, SpectrumSource::ClassicalAd),
            clipped_mass: T::zero(),
            dof,
        })
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn m(&self) -> usize {
        self.weights.len()
    }

    pub fn source(&self) -> SpectrumSource {
        self.source
    }

    pub fn is_ad_weighted(&self) -> bool {
        self.ad_weighted
    }

    pub fn clipped_mass(&self) -> T {
        self.clipped_mass
    }

    pub fn dof(&self) -> u32 {
        self.dof
    }

    pub fn is_zero(&self) -> bool {
        self.weights.iter().all(|&w| w == T::zero())
    }

    pub fn total(&self) -> T {
        self.weights.iter().copied().sum()
    }
}

/// All `G` eigenvalues of `M/G`, descending, without clipping.
pub fn all_eigenvalues<T: Real>(k: &CovKernel<T>) -> Result<Vec<T>> {
    let g = k.size();
    let inv = T::from_count(g).recip();
    let scaled: Vec<T> = k.values().iter().map(|&v| v * inv).collect();
    symmetric_eigenvalues(&scaled, g)
}

/// Leading eigenvalues of the integral operator with kernel `k`, negatives
/// clipped to zero.
pub fn eigenvalues<T: Real>(
    k: &CovKernel<T>,
    truncation: Truncation,
    source: SpectrumSource,
) -> Result<Spectrum<T>> {
    let all = all_eigenvalues(k)?;
    let clipped_mass: T = all.iter().filter(|&&v| v < T::zero()).map(|&v| -v).sum();
    let positive: Vec<T> = all.into_iter().map(|v| v.max(T::zero())).collect();
    let m = truncation.terms(&positive)?;
    Ok(Spectrum {
        weights: positive[..m].to_vec(),
        source,
        ad_weighted: k.is_weighted(),
        clipped_mass,
        dof: 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel_cov::{ad_weight_kernel, theoretical_kernel, VarianceProfile};
    use std::f64::consts::PI;

    fn bridge(g: usize) -> CovKernel<f64> {
        theoretical_kernel(&VarianceProfile::homoskedastic(1.0).unwrap(), g).unwrap()
    }

    #[test]
    fn bridge_spectrum() {
        let sp = eigenvalues(
            &bridge(400),
            Truncation::Fixed(5),
            SpectrumSource::Theoretical,
        )
        .unwrap();
        for (i, &w) in sp.weights().iter().enumerate() {
            let k = (i + 1) as f64;
            let exact = 1.0 / (k * k * PI * PI);
            assert!(((w - exact) / exact).abs() < 1e-3, "{i}: {w}");
        }
    }

    #[test]
    fn ad_bridge_spectrum() {
        let d = ad_weight_kernel(&bridge(400)).unwrap();
        let sp = eigenvalues(&d, Truncation::Fixed(3), SpectrumSource::Theoretical).unwrap();
        assert!(sp.is_ad_weighted());
        for (i, &w) in sp.weights().iter().enumerate() {
            let k = (i + 1) as f64;
            let exact = 1.0 / (k * (k + 1.0));
            assert!(((w - exact) / exact).abs() < 1e-2, "{i}: {w}");
        }
    }

    #[test]
    fn zero_kernel_has_zero_spectrum() {
        let k = bridge(32).scaled(0.0);
        let sp = eigenvalues(&k, Truncation::default(), SpectrumSource::Theoretical).unwrap();
        assert!(sp.is_zero());
        assert_eq!(sp.m(), 1);
    }

    #[test]
    fn mass_rule_and_cap() {
        let w = [0.5, 0.3, 0.15, 0.05];
        let t = Truncation::Mass {
            fraction: 0.9,
            cap: 10,
        };
        assert_eq!(t.terms(&w).unwrap(), 3);
        let t = Truncation::Mass {
            fraction: 0.999,
            cap: 2,
        };
        assert_eq!(t.terms(&w).unwrap(), 2);
        assert!(Truncation::Fixed(0).terms(&w).is_err());
        assert!(Truncation::Fixed(5).terms(&w).is_err());
    }

    #[test]
    fn from_weights_validation() {
        assert!(Spectrum::<f64>::from_weights(vec![], SpectrumSource::Vs, 2).is_err());
        assert!(Spectrum::from_weights(vec![0.1, 0.2], SpectrumSource::Vs, 2).is_err());
        assert!(Spectrum::from_weights(vec![0.2, -0.1], SpectrumSource::Vs, 2).is_err());
    }

    #[test]
    fn source_names_match_serde() {
        for s in [
            SpectrumSource::Theoretical,
            SpectrumSource::EmpiricalUncorrelated,
            SpectrumSource::EmpiricalCorrelated,
            SpectrumSource::ClassicalCm,
            SpectrumSource::ClassicalAd,
            SpectrumSource::Vs,
        ] {
            assert_eq!(
                serde_json::to_string(&s).unwrap(),
                format!("\"{}\"", s.name())
            );
        }
    }
}
