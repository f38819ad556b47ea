// SPDX-License-Identifier: MIT OR Apache-2.0

//! Data-generating processes for the simulation study: GARCH(1,1) and AR(1)
//! noise, deterministic variance profiles and mean shifts.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Mutex, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::drift::MeanSpec;
use crate::error::{Error, Result};
use crate::series::Series;

/// Discarded start-up draws of the recursive generators.
pub const BURN_IN: usize = 1000;

/// Length of the pre-run that estimates `E|R₀|` and `E R₀²`.
pub const CENTERING_DRAWS: usize = 1_000_000;

/// Seed of the centering pre-run.
pub const CENTERING_SEED: u64 = 0x00C0_FFEE;

fn check_garch(omega: f64, alpha: f64, beta: f64) -> Result<()> {
    if !(omega > 0.0 && alpha >= 0.0 && beta >= 0.0 && alpha + beta < 1.0) {
        return Err(Error::invalid(format!(
            "GARCH needs omega > 0, alpha, beta >= 0 and alpha + beta < 1, \
             got ({omega}, {alpha}, {beta})"
        )));
    }
    Ok(())
}

fn garch_values(n: usize, omega: f64, alpha: f64, beta: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sigma2 = omega / (1.0 - alpha - beta);
    let mut r2 = sigma2;
    let mut out = Vec::with_capacity(n);
    for i in 0..BURN_IN + n {
        sigma2 = omega + alpha * r2 + beta * sigma2;
        let eps: f64 = rng.sample(StandardNormal);
        let r = sigma2.sqrt() * eps;
        r2 = r * r;
        if i >= BURN_IN {
            out.push(r);
        }
    }
    out
}

/// `R_i = σ_i ε_i`, `σ_i² = ω + α R²_{i-1} + β σ²_{i-1}`.
pub fn gen_garch(n: usize, omega: f64, alpha: f64, beta: f64, seed: u64) -> Result<Series<f64>> {
    check_garch(omega, alpha, beta)?;
    Series::new(garch_values(n, omega, alpha, beta, seed))
}

/// `Y_i = ρ Y_{i-1} + ε_i` started from the stationary law.
pub fn gen_ar1(n: usize, rho: f64, seed: u64) -> Result<Series<f64>> {
    if !(rho.abs() < 1.0) {
        return Err(Error::invalid(format!("AR(1) needs |rho| < 1, got {rho}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z: f64 = rng.sample(StandardNormal);
    let mut y = z / (1.0 - rho * rho).sqrt();
    let mut out = Vec::with_capacity(n);
    for i in 0..BURN_IN + n {
        let eps: f64 = rng.sample(StandardNormal);
        y = rho * y + eps;
        if i >= BURN_IN {
            out.push(y);
        }
    }
    Series::new(out)
}

fn gen_gaussian(n: usize, seed: u64) -> Result<Series<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Series::new((0..n).map(|_| rng.sample(StandardNormal)).collect())
}

/// `(E|R₀|, E R₀²)` of a stationary GARCH(1,1), estimated once per parameter
/// triple.
pub fn garch_centering(omega: f64, alpha: f64, beta: f64) -> Result<(f64, f64)> {
    check_garch(omega, alpha, beta)?;
    type Cache = Mutex<HashMap<[u64; 3], (f64, f64)>>;
    static CACHE: OnceLock<Cache> = OnceLock::new();
    let key = [omega.to_bits(), alpha.to_bits(), beta.to_bits()];
    let cache = CACHE.get_or_init(Default::default);
    if let Some(&c) = cache.lock().expect("centering cache").get(&key) {
        return Ok(c);
    }
    let draws = garch_values(CENTERING_DRAWS, omega, alpha, beta, CENTERING_SEED);
    let n = draws.len() as f64;
    let abs = draws.iter().map(|r| r.abs()).sum::<f64>() / n;
    let sq = draws.iter().map(|r| r * r).sum::<f64>() / n;
    cache
        .lock()
        .expect("centering cache")
        .insert(key, (abs, sq));
    Ok((abs, sq))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Base {
    Gaussian,
    Ar1 { rho: f64 },
    Garch { omega: f64, alpha: f64, beta: f64 },
}

impl Base {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Base::Gaussian => Ok(()),
            Base::Ar1 { rho } if rho.abs() < 1.0 => Ok(()),
            Base::Ar1 { rho } => Err(Error::invalid(format!("AR(1) needs |rho| < 1, got {rho}"))),
            Base::Garch { omega, alpha, beta } => check_garch(omega, alpha, beta),
        }
    }

    pub fn generate(&self, n: usize, seed: u64) -> Result<Series<f64>> {
        match *self {
            Base::Gaussian => gen_gaussian(n, seed),
            Base::Ar1 { rho } => gen_ar1(n, rho, seed),
            Base::Garch { omega, alpha, beta } => gen_garch(n, omega, alpha, beta, seed),
        }
    }

    /// `(E|e₀|, E e₀²)` of the stationary law.
    pub fn centering(&self) -> Result<(f64, f64)> {
        let abs_normal = (2.0 / std::f64::consts::PI).sqrt();
        match *self {
            Base::Gaussian => Ok((abs_normal, 1.0)),
            Base::Ar1 { rho } => {
                self.validate()?;
                let var = 1.0 / (1.0 - rho * rho);
                Ok((abs_normal * var.sqrt(), var))
            }
            Base::Garch { omega, alpha, beta } => garch_centering(omega, alpha, beta),
        }
    }
}

/// Error transform `e_i` applied to the base draws `R_i`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    /// `R_i`.
    #[default]
    Level,
    /// `|R_i| - E|R₀|`.
    Abs,
    /// `R_i² - E R₀²`.
    Square,
}

/// Deterministic scale `a_i` multiplying the errors.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    #[default]
    None,
    /// `i / (2N)`.
    A1,
    /// `0.25` up to `0.5N`, `0.5` after.
    A2,
    /// `1` up to `0.5N`, `4` after.
    A3,
    /// `1` up to `0.5N`, `0.25` after.
    A4,
    /// `sin(πi/N)`.
    Sin,
}

impl Profile {
    /// `a_i` for `i = 1..=n`.
    pub fn multiplier(self, i: usize, n: usize) -> f64 {
        let late = 2 * i > n;
        match self {
            Profile::None => 1.0,
            Profile::A1 => i as f64 / (2 * n) as f64,
            Profile::A2 => {
                if late {
                    0.5
                } else {
                    0.25
                }
            }
            Profile::A3 => {
                if late {
                    4.0
                } else {
                    1.0
                }
            }
            Profile::A4 => {
                if late {
                    0.25
                } else {
                    1.0
                }
            }
            Profile::Sin => (std::f64::consts::PI * i as f64 / n as f64).sin(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Profile::None => "none",
            Profile::A1 => "a1",
            Profile::A2 => "a2",
            Profile::A3 => "a3",
            Profile::A4 => "a4",
            Profile::Sin => "sin",
        }
    }
}

/// Serializable subset of [`MeanSpec`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeanShape {
    Constant {
        level: f64,
    },
    SingleChange {
        theta: f64,
        before: f64,
        after: f64,
    },
    MultiChange {
        breakpoints: Vec<f64>,
        levels: Vec<f64>,
    },
}

impl Default for MeanShape {
    fn default() -> Self {
        MeanShape::Constant { level: 0.0 }
    }
}

impl MeanShape {
    pub fn to_spec(&self) -> Result<MeanSpec<f64>> {
        match self {
            MeanShape::Constant { level } => Ok(MeanSpec::Constant(*level)),
            MeanShape::SingleChange {
                theta,
                before,
                after,
            } => MeanSpec::single_change(*theta, *before, *after),
            MeanShape::MultiChange {
                breakpoints,
                levels,
            } => MeanSpec::multi_change(breakpoints.clone(), levels.clone()),
        }
    }

    fn is_zero(&self) -> bool {
        matches!(self, MeanShape::Constant { level } if *level == 0.0)
    }
}

/// `X_i = μ_i + a_i e_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DgpSpec {
    pub base: Base,
    #[serde(default)]
    pub transform: Transform,
    #[serde(default)]
    pub profile: Profile,
    #[serde(default)]
    pub mean: MeanShape,
    pub n: usize,
}

impl DgpSpec {
    pub fn new(base: Base, n: usize) -> Self {
        Self {
            base,
            transform: Transform::Level,
            profile: Profile::None,
            mean: MeanShape::default(),
            n,
        }
    }

    pub fn with_transform(mut self, t: Transform) -> Self {
        self.transform = t;
        self
    }

    pub fn with_profile(mut self, p: Profile) -> Self {
        self.profile = p;
        self
    }

    pub fn with_mean(mut self, m: MeanShape) -> Self {
        self.mean = m;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        self.mean.to_spec()?;
        if self.n < crate::series::MIN_LEN {
            return Err(Error::TooShort {
                n: self.n,
                min: crate::series::MIN_LEN,
            });
        }
        Ok(())
    }

    pub fn generate(&self, seed: u64) -> Result<Series<f64>> {
        let base = self.base.generate(self.n, seed)?;
        apply_profile(&base, self)
    }

    /// Short description, e.g. `a1*(garch(1e-6,0.2,0.5)^2-E)`.
    pub fn label(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for DgpSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let base = match self.base {
            Base::Gaussian => "iid".to_string(),
            Base::Ar1 { rho } => format!("ar1({rho})"),
            Base::Garch { omega, alpha, beta } => format!("garch({omega:e},{alpha},{beta})"),
        };
        let err = match self.transform {
            Transform::Level => base,
            Transform::Abs => format!("(|{base}|-E)"),
            Transform::Square => format!("({base}^2-E)"),
        };
        let scaled = match self.profile {
            Profile::None => err,
            p => format!("{}*{err}", p.name()),
        };
        match &self.mean {
            m if m.is_zero() => f.write_str(&scaled),
            MeanShape::Constant { level } => write!(f, "{level}+{scaled}"),
            MeanShape::SingleChange {
                theta,
                before,
                after,
            } => write!(f, "mu[{before}->{after}@{theta}]+{scaled}"),
            MeanShape::MultiChange {
                breakpoints,
                levels,
            } => {
                write!(f, "mu[{levels:?}@{breakpoints:?}]+{scaled}")
            }
        }
    }
}

/// `X_i = μ_i + a_i e_i` from base draws `R_i`.
pub fn apply_profile(base: &Series<f64>, spec: &DgpSpec) -> Result<Series<f64>> {
    let n = base.len();
    let mean = spec.mean.to_spec()?;
    let shift = match spec.transform {
        Transform::Level => 0.0,
        Transform::Abs => spec.base.centering()?.0,
        Transform::Square => spec.base.centering()?.1,
    };
    let values = base
        .values()
        .iter()
        .enumerate()
        .map(|(idx, &r)| {
            let e = match spec.transform {
                Transform::Level => r,
                Transform::Abs => r.abs() - shift,
                Transform::Square => r * r - shift,
            };
            mean.mean_at(idx + 1, n) + spec.profile.multiplier(idx + 1, n) * e
        })
        .collect();
    Series::new(values)
}
