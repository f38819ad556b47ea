// SPDX-License-Identifier: MIT OR Apache-2.0

//! Monte Carlo draws from weighted-χ² laws, critical values and P-values.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectrum::{Spectrum, SpectrumSource};

/// Smallest accepted number of replications.
pub const MIN_REPLICATIONS: usize = 1000;

/// Replications per independent RNG stream.
const BLOCK: usize = 1024;

/// Levels at which reports carry critical values.
pub const REPORT_LEVELS: [f64; 3] = [0.10, 0.05, 0.01];

/// Sorted draws of `Σ w_i Q_i`, `Q_i` iid χ²(dof).
#[derive(Clone, Debug, PartialEq)]
pub struct LimitSample<T> {
    draws: Vec<T>,
    seed: u64,
    dof: u32,
}

impl<T: Real> LimitSample<T> {
    pub fn draws(&self) -> &[T] {
        &self.draws
    }

    pub fn replications(&self) -> usize {
        self.draws.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn dof(&self) -> u32 {
        self.dof
    }

    pub fn mean(&self) -> f64 {
        self.draws.iter().map(|d| d.as_f64()).sum::<f64>() / self.draws.len() as f64
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.draws
            .iter()
            .map(|d| (d.as_f64() - m).powi(2))
            .sum::<f64>()
            / (self.draws.len() - 1) as f64
    }
}

#[inline]
fn chisq_draw(rng: &mut ChaCha8Rng, dof: u32) -> f64 {
    match dof {
        1 => {
            let z: f64 = rng.sample(StandardNormal);
            z * z
        }
        // 1 - U lies in (0, 1]
        _ => -2.0 * (1.0 - rng.random::<f64>()).ln(),
    }
}

/// `r` draws of `Σ w_i Q_i`. Block `b` of 1024 replications uses the ChaCha8
/// stream `b` under `seed`, so the output does not depend on the thread count.
pub fn sample_weighted_chisq<T: Real>(
    sp: &Spectrum<T>,
    r: usize,
    dof: u32,
    seed: u64,
) -> Result<LimitSample<T>> {
    if r < MIN_REPLICATIONS {
        return Err(Error::invalid(format!(
            "need at least {MIN_REPLICATIONS} replications, got {r}"
        )));
    }
    if !matches!(dof, 1 | 2) {
        return Err(Error::invalid(format!("dof must be 1 or 2, got {dof}")));
    }
    if sp.m() == 0 {
        return Err(Error::EmptySpectrum);
    }
    let weights = sp.weights();
    let blocks = r.div_ceil(BLOCK);
    let mut draws: Vec<T> = (0..blocks)
        .into_par_iter()
        .flat_map_iter(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let len = BLOCK.min(r - b * BLOCK);
            (0..len)
                .map(|_| {
                    let mut acc = T::zero();
                    for &w in weights {
                        acc += w * T::lit(chisq_draw(&mut rng, dof));
                    }
                    acc
                })
                .collect::<Vec<_>>()
        })
        .collect();
    draws.sort_by(|a, b| a.partial_cmp(b).expect("finite draws"));
    Ok(LimitSample { draws, seed, dof })
}

/// `draws[⌈(1-α)R⌉ - 1]`.
pub fn critical_value<T: Real>(ls: &LimitSample<T>, alpha: f64) -> Result<T> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!(
            "alpha must lie in (0,1), got {alpha}"
        )));
    }
    let r = ls.replications();
    // guard against (1-α)R landing a hair above an integer
    let k = (((1.0 - alpha) * r as f64) - 1e-9).ceil() as usize;
    Ok(ls.draws[k.clamp(1, r) - 1])
}

/// `#{draws > observed} / R`.
pub fn p_value<T: Real>(ls: &LimitSample<T>, observed: T) -> f64 {
    exceedances(ls, observed) as f64 / ls.replications() as f64
}

/// `(1 + #{draws > observed}) / (R + 1)`.
pub fn p_value_corrected<T: Real>(ls: &LimitSample<T>, observed: T) -> f64 {
    (1 + exceedances(ls, observed)) as f64 / (ls.replications() + 1) as f64
}

fn exceedances<T: Real>(ls: &LimitSample<T>, observed: T) -> usize {
    ls.replications() - ls.draws.partition_point(|&d| d <= observed)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Functional {
    Cm,
    Ad,
}

/// Bridge spectrum `1/(k²π²)` (CM) or Anderson–Darling spectrum
/// `1/(k(k+1))` (AD), `k = 1..=m`.
pub fn classical_limit_spectrum<T: Real>(f: Functional, m: usize) -> Result<Spectrum<T>> {
    if m == 0 {
        return Err(Error::invalid("need at least one term"));
    }
    let pi2 = T::PI() * T::PI();
    let (weights, source) = match f {
        Functional::Cm => (
            (1..=m)
                .map(|k| {
                    let k = T::from_count(k);
                    (k * k * pi2).recip()
                })
                .collect(),
            SpectrumSource::ClassicalCm,
        ),
        Functional::Ad => (
            (1..=m)
                .map(|k| {
                    let k = T::from_count(k);
                    (k * (k + T::one())).recip()
                })
                .collect(),
            SpectrumSource::ClassicalAd,
        ),
    };
    Spectrum::from_weights(weights, source, 1)
}

/// `1/(4π²k²)`, `k = 1..=m`, each multiplying a χ²(2) term.
pub fn vs_limit_spectrum<T: Real>(m: usize) -> Result<Spectrum<T>> {
    if m == 0 {
        return Err(Error::invalid("need at least one term"));
    }
    let c = T::lit(4.0) * T::PI() * T::PI();
    let weights = (1..=m)
        .map(|k| {
            let k = T::from_count(k);
            (c * k * k).recip()
        })
        .collect();
    Spectrum::from_weights(weights, SpectrumSource::Vs, 2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> Spectrum<f64> {
        Spectrum::from_weights(vec![1.0], SpectrumSource::Theoretical, 1).unwrap()
    }

    #[test]
    fn chi_square_one_moments() {
        let ls = sample_weighted_chisq(&unit(), 100_000, 1, 7).unwrap();
        assert!((ls.mean() - 1.0).abs() < 0.05);
        assert!((ls.variance() - 2.0).abs() < 0.1);
        assert!(ls.draws().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn chi_square_two_mean() {
        let ls = sample_weighted_chisq(&unit(), 100_000, 2, 7).unwrap();
        assert!((ls.mean() - 2.0).abs() < 0.05);
        assert!(ls.draws()[0] >= 0.0);
    }

    #[test]
    fn cm_and_vs_means() {
        let cm = classical_limit_spectrum::<f64>(Functional::Cm, 200).unwrap();
        let ls = sample_weighted_chisq(&cm, 100_000, 1, 11).unwrap();
        assert!((ls.mean() / (1.0 / 6.0) - 1.0).abs() < 0.02);
        let vs = vs_limit_spectrum::<f64>(200).unwrap();
        let ls = sample_weighted_chisq(&vs, 100_000, 2, 11).unwrap();
        assert!((ls.mean() * 12.0 - 1.0).abs() < 0.02);
    }

    #[test]
    fn deterministic_given_seed() {
        let cm = classical_limit_spectrum::<f64>(Functional::Cm, 20).unwrap();
        let a = sample_weighted_chisq(&cm, 3000, 1, 5).unwrap();
        let b = sample_weighted_chisq(&cm, 3000, 1, 5).unwrap();
        let c = sample_weighted_chisq(&cm, 3000, 1, 6).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.draws(), c.draws());
    }

    #[test]
    fn argument_validation() {
        assert!(sample_weighted_chisq(&unit(), 999, 1, 0).is_err());
        assert!(sample_weighted_chisq(&unit(), 1000, 3, 0).is_err());
        let ls = sample_weighted_chisq(&unit(), 1000, 1, 0).unwrap();
        assert!(critical_value(&ls, 0.0).is_err());
        assert!(critical_value(&ls, 1.0).is_err());
        assert!(classical_limit_spectrum::<f64>(Functional::Ad, 0).is_err());
        assert!(vs_limit_spectrum::<f64>(0).is_err());
    }

    #[test]
    fn quantile_and_p_value_conventions() {
        let ls = sample_weighted_chisq(&unit(), 10_000, 1, 3).unwrap();
        assert_eq!(p_value(&ls, 0.0), 1.0);
        let max = *ls.draws().last().unwrap();
        assert_eq!(p_value(&ls, max + 1.0), 0.0);
        let cv = critical_value(&ls, 0.05).unwrap();
        assert_eq!(cv, ls.draws()[9499]);
        assert!(p_value(&ls, cv) <= 0.05);
        let near_one = critical_value(&ls, 1.0 - 1e-9).unwrap();
        assert_eq!(near_one, ls.draws()[0]);
        assert!(p_value_corrected(&ls, max + 1.0) > 0.0);
    }

    #[test]
    fn closed_form_spectra() {
        let cm = classical_limit_spectrum::<f64>(Functional::Cm, 2).unwrap();
        assert!((cm.weights()[0] - 0.101321).abs() < 1e-6);
        assert!((cm.weights()[1] - 0.025330).abs() < 1e-6);
        let ad = classical_limit_spectrum::<f64>(Functional::Ad, 3).unwrap();
        assert_eq!(ad.weights()[0], 0.5);
        assert!((ad.weights()[1] - 1.0 / 6.0).abs() < 1e-15);
        assert!((ad.weights()[2] - 1.0 / 12.0).abs() < 1e-15);
        assert_eq!(
            classical_limit_spectrum::<f64>(Functional::Cm, 1)
                .unwrap()
                .m(),
            1
        );
        let vs = vs_limit_spectrum::<f64>(5).unwrap();
        assert!((vs.weights()[0] - 0.025330).abs() < 1e-6);
        assert!(vs.weights().windows(2).all(|w| w[0] > w[1]));
        assert_eq!(vs.dof(), 2);
    }
}
