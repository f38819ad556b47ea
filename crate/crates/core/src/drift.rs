// SPDX-License-Identifier: MIT OR Apache-2.0

//! Mean specifications and the limiting CUSUM drift `d(t)` they induce.
//!
//! With `M(t) = ∫₀ᵗ μ(u) du` for the limiting mean function `μ`, the drift is
//! `d(t) = M(t) - t M(1)`; the single-change, multiple-change and
//! trend-after-change cases each give `M` in closed form or by quadrature.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quad::adaptive_simpson;
use crate::scalar::Real;

pub type MeanFn<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

#[derive(Clone)]
pub enum MeanSpec<T> {
    Constant(T),
    /// `μ̃₁` up to `⌊Nθ⌋`, `μ̃₂` after.
    SingleChange {
        theta: T,
        before: T,
        after: T,
    },
    /// Levels `μ̃_1..μ̃_{m+1}` separated by breakpoints `θ_1 < .. < θ_m`.
    MultiChange {
        breakpoints: Vec<T>,
        levels: Vec<T>,
    },
    /// `μ̃₁` up to `⌊Nθ⌋`, then `d̃(i/N)`.
    TrendAfter {
        theta: T,
        before: T,
        trend: MeanFn<T>,
    },
}

impl<T: Real> fmt::Debug for MeanSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeanSpec::Constant(m) => write!(f, "Constant({m})"),
            MeanSpec::SingleChange {
                theta,
                before,
                after,
            } => write!(f, "SingleChange(θ={theta}, {before} -> {after})"),
            MeanSpec::MultiChange {
                breakpoints,
                levels,
            } => write!(f, "MultiChange({breakpoints:?}, {levels:?})"),
            MeanSpec::TrendAfter { theta, before, .. } => {
                write!(f, "TrendAfter(θ={theta}, before={before}, <fn>)")
            }
        }
    }
}

fn check_theta<T: Real>(theta: T) -> Result<()> {
    if theta > T::zero() && theta < T::one() {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "change fraction must lie in (0,1), got {theta}"
        )))
    }
}

impl<T: Real> MeanSpec<T> {
    pub fn single_change(theta: T, before: T, after: T) -> Result<Self> {
        check_theta(theta)?;
        Ok(MeanSpec::SingleChange {
            theta,
            before,
            after,
        })
    }

    pub fn multi_change(breakpoints: Vec<T>, levels: Vec<T>) -> Result<Self> {
        if levels.len() != breakpoints.len() + 1 {
            return Err(Error::invalid(format!(
                "{} breakpoints need {} levels, got {}",
                breakpoints.len(),
                breakpoints.len() + 1,
                levels.len()
            )));
        }
        for &b in &breakpoints {
            check_theta(b)?;
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("breakpoints must be strictly increasing"));
        }
        Ok(MeanSpec::MultiChange {
            breakpoints,
            levels,
        })
    }

    pub fn trend_after(theta: T, before: T, trend: MeanFn<T>) -> Result<Self> {
        check_theta(theta)?;
        Ok(MeanSpec::TrendAfter {
            theta,
            before,
            trend,
        })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            MeanSpec::Constant(_) => Ok(()),
            MeanSpec::SingleChange { theta, .. } | MeanSpec::TrendAfter { theta, .. } => {
                check_theta(*theta)
            }
            MeanSpec::MultiChange {
                breakpoints,
                levels,
            } => Self::multi_change(breakpoints.clone(), levels.clone()).map(|_| ()),
        }
    }

    /// `μ_i` for observation `i ∈ 1..=n`.
    pub fn mean_at(&self, i: usize, n: usize) -> T {
        let cut = |theta: T| (T::from_count(n) * theta).floor().to_usize().unwrap_or(0);
        match self {
            MeanSpec::Constant(m) => *m,
            MeanSpec::SingleChange {
                theta,
                before,
                after,
            } => {
                if i <= cut(*theta) {
                    *before
                } else {
                    *after
                }
            }
            MeanSpec::MultiChange {
                breakpoints,
                levels,
            } => {
                let seg = breakpoints.iter().take_while(|&&b| i > cut(b)).count();
                levels[seg]
            }
            MeanSpec::TrendAfter {
                theta,
                before,
                trend,
            } => {
                if i <= cut(*theta) {
                    *before
                } else {
                    trend(T::from_count(i) / T::from_count(n))
                }
            }
        }
    }

    /// Mean path `μ_1..μ_n`.
    pub fn means(&self, n: usize) -> Vec<T> {
        (1..=n).map(|i| self.mean_at(i, n)).collect()
    }

    /// `M(t) = ∫₀ᵗ μ(u) du` of the limiting mean function.
    fn cumulative(&self, t: T) -> Result<T> {
        match self {
            MeanSpec::Constant(m) => Ok(*m * t),
            MeanSpec::SingleChange {
                theta,
                before,
                after,
            } => Ok(if t <= *theta {
                *before * t
            } else {
                *before * *theta + *after * (t - *theta)
            }),
            MeanSpec::MultiChange {
                breakpoints,
                levels,
            } => {
                let mut acc = T::zero();
                let mut lo = T::zero();
                for (k, &level) in levels.iter().enumerate() {
                    let hi = breakpoints.get(k).copied().unwrap_or(T::one());
                    if t <= hi {
                        return Ok(acc + level * (t - lo));
                    }
                    acc += level * (hi - lo);
                    lo = hi;
                }
                Ok(acc)
            }
            MeanSpec::TrendAfter {
                theta,
                before,
                trend,
            } => {
                if t <= *theta {
                    Ok(*before * t)
                } else {
                    let f = |u: T| trend(u);
                    let tail = adaptive_simpson(&f, *theta, t, T::lit(1e-12))?;
                    Ok(*before * *theta + tail)
                }
            }
        }
    }
}

/// Limiting drift `d(t) = M(t) - t M(1)` of the scaled CUSUM mean path.
pub fn drift_profile<T: Real>(m: &MeanSpec<T>, grid: &[T]) -> Result<Vec<T>> {
    m.validate()?;
    if let Some(bad) = grid.iter().find(|&&t| !(t >= T::zero() && t <= T::one())) {
        return Err(Error::invalid(format!("grid point {bad} outside [0,1]")));
    }
    let total = m.cumulative(T::one())?;
    grid.iter()
        .map(|&t| Ok(m.cumulative(t)? - t * total))
        .collect()
}
