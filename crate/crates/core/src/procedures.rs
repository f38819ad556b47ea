// SPDX-License-Identifier: MIT OR Apache-2.0

//! The ten CUSUM test procedures and their reports.
//!
//! Names combine the variance treatment (`S`tandard, `H`eteroskedastic), the
//! dependence treatment (`U`ncorrelated, `C`orrelated) and the functional
//! (`CM`, `AD`); `VSU`/`VSC` are the variance-ratio type tests.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel_cov::{
    ad_weight_kernel, default_grid, empirical_kernel_correlated, empirical_kernel_uncorrelated,
    CovKernel,
};
use crate::lrv::{floor_lrv, lrv_path, sample_variance, LrvConfig};
use crate::montecarlo::{
    classical_limit_spectrum, critical_value, p_value, p_value_corrected, sample_weighted_chisq,
    vs_limit_spectrum, Functional, REPORT_LEVELS,
};
use crate::scalar::{partial_sums, CompensatedSum, Real};
use crate::series::{ad_statistic, cm_statistic, cusum_process, Series};
use crate::spectrum::{eigenvalues, Spectrum, SpectrumSource, Truncation};

/// Version of the [`TestReport`] layout.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MethodId {
    Sucm,
    Sccm,
    Hucm,
    Hccm,
    Suad,
    Scad,
    Huad,
    Hcad,
    Vsu,
    Vsc,
}

/// How a method normalizes the statistic or builds its limit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    /// Divide by a variance, compare with a fixed limit.
    Standard,
    /// Raw statistic, limit from the estimated covariance kernel.
    Heteroskedastic,
    VarianceRatio,
}

impl MethodId {
    pub const ALL: [MethodId; 10] = [
        Self::Sucm,
        Self::Sccm,
        Self::Hucm,
        Self::Hccm,
        Self::Suad,
        Self::Scad,
        Self::Huad,
        Self::Hcad,
        Self::Vsu,
        Self::Vsc,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Sucm => "SUCM",
            Self::Sccm => "SCCM",
            Self::Hucm => "HUCM",
            Self::Hccm => "HCCM",
            Self::Suad => "SUAD",
            Self::Scad => "SCAD",
            Self::Huad => "HUAD",
            Self::Hcad => "HCAD",
            Self::Vsu => "VSU",
            Self::Vsc => "VSC",
        }
    }

    pub fn family(self) -> Family {
        match self {
            Self::Sucm | Self::Sccm | Self::Suad | Self::Scad => Family::Standard,
            Self::Hucm | Self::Hccm | Self::Huad | Self::Hcad => Family::Heteroskedastic,
            Self::Vsu | Self::Vsc => Family::VarianceRatio,
        }
    }

    /// Whether serial correlation is accounted for.
    pub fn correlated(self) -> bool {
        matches!(
            self,
            Self::Sccm | Self::Hccm | Self::Scad | Self::Hcad | Self::Vsc
        )
    }

    /// `None` for the variance-ratio tests.
    pub fn functional(self) -> Option<Functional> {
        match self {
            Self::Sucm | Self::Sccm | Self::Hucm | Self::Hccm => Some(Functional::Cm),
            Self::Suad | Self::Scad | Self::Huad | Self::Hcad => Some(Functional::Ad),
            Self::Vsu | Self::Vsc => None,
        }
    }
}

impl fmt::Display for MethodId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MethodId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::invalid(format!("unknown method {s:?}")))
    }
}

impl Serialize for MethodId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for MethodId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Knobs shared by all methods. `None` fields resolve from `N`.
#[derive(Clone, Debug, PartialEq)]
pub struct TestConfig<T> {
    pub grid: Option<usize>,
    pub truncation: Truncation,
    pub lrv: Option<LrvConfig<T>>,
    pub replications: usize,
    /// Terms of the closed-form classical and VS limits.
    pub classical_terms: usize,
    pub pvalue_correction: bool,
}

impl<T: Real> Default for TestConfig<T> {
    fn default() -> Self {
        Self {
            grid: None,
            truncation: Truncation::default(),
            lrv: None,
            replications: 10_000,
            classical_terms: 200,
            pvalue_correction: false,
        }
    }
}

impl<T: Real> TestConfig<T> {
    pub fn grid_for(&self, n: usize) -> usize {
        self.grid.unwrap_or_else(|| default_grid(n))
    }

    pub fn lrv_for(&self, n: usize) -> LrvConfig<T> {
        self.lrv
            .clone()
            .unwrap_or_else(|| LrvConfig::default_for(n))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalValue {
    pub alpha: f64,
    pub value: f64,
}

/// Fully resolved configuration of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub grid: usize,
    pub truncation: Truncation,
    pub kernel: String,
    pub bandwidth: f64,
    pub replications: usize,
    pub classical_terms: usize,
    pub pvalue_correction: bool,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub method: MethodId,
    pub n: usize,
    pub statistic: f64,
    pub p_value: f64,
    pub critical_values: Vec<CriticalValue>,
    pub spectrum_source: SpectrumSource,
    pub spectrum_terms: usize,
    pub config: ConfigEcho,
    pub warnings: Vec<String>,
}

impl TestReport {
    pub fn critical_value(&self, alpha: f64) -> Option<f64> {
        self.critical_values
            .iter()
            .find(|c| c.alpha == alpha)
            .map(|c| c.value)
    }

    pub fn rejects(&self, level: f64) -> bool {
        self.p_value < level
    }
}

/// `(1/(σ̂²N²)) Σ_{k=1}^N (S'_k - S̄')²` with `S'_k = Σ_{i≤k}(X_i - X̄)`.
pub fn vs_statistic<T: Real>(s: &Series<T>, divisor: T) -> Result<T> {
    if !(divisor > T::zero()) {
        return Err(Error::invalid(format!(
            "divisor must be positive, got {divisor}"
        )));
    }
    let sums = partial_sums(&s.centered());
    let tail = &sums[1..];
    let n = T::from_count(s.len());
    let mut mean = CompensatedSum::new();
    for &v in tail {
        mean.add(v);
    }
    let mean = mean.value() / n;
    let mut ss = CompensatedSum::new();
    for &v in tail {
        ss.add((v - mean) * (v - mean));
    }
    Ok(ss.value() / (divisor * n * n))
}

fn lrv_note<T: Real>(cfg: &LrvConfig<T>) -> String {
    format!(
        "long-run variance uses the {} HAC estimator with h = {} in place of a spectral density estimator",
        cfg.kernel().name(),
        cfg.bandwidth()
    )
}

/// Per-series quantities shared across methods, computed on first use.
pub struct Prepared<'a, T: Real> {
    s: &'a Series<T>,
    cfg: &'a TestConfig<T>,
    lrv_cfg: LrvConfig<T>,
    grid: usize,
    variance: T,
    long_run: Option<(T, bool)>,
    uncorrelated: Option<CovKernel<T>>,
    correlated: Option<(CovKernel<T>, usize)>,
    spectra: Vec<(SpectrumSource, bool, Spectrum<T>)>,
}

impl<'a, T: Real> Prepared<'a, T> {
    pub fn new(s: &'a Series<T>, cfg: &'a TestConfig<T>) -> Result<Self> {
        let variance = sample_variance(s);
        let scale = s.values().iter().fold(T::zero(), |m, &x| m.max(x.abs()));
        // a constant series can leave rounding residue in the centered values
        let tiny = T::lit(16.0) * T::epsilon() * scale;
        if !(variance > tiny * tiny) {
            return Err(Error::Degenerate(
                "sample variance is zero (constant series)".into(),
            ));
        }
        let grid = cfg.grid_for(s.len());
        if grid == 0 {
            return Err(Error::invalid("grid size must be positive"));
        }
        Ok(Self {
            s,
            cfg,
            lrv_cfg: cfg.lrv_for(s.len()),
            grid,
            variance,
            long_run: None,
            uncorrelated: None,
            correlated: None,
            spectra: Vec::new(),
        })
    }

    pub fn variance(&self) -> T {
        self.variance
    }

    /// Full-sample HAC estimate, floored, and whether the floor applied.
    pub fn long_run_variance(&mut self) -> (T, bool) {
        let v = self.variance;
        let s = self.s;
        let cfg = &self.lrv_cfg;
        *self.long_run.get_or_insert_with(|| {
            let path = lrv_path(s, cfg);
            floor_lrv(path[s.len()], v)
        })
    }

    fn spectrum(&mut self, correlated: bool, ad: bool) -> Result<(Spectrum<T>, Vec<String>)> {
        let source = if correlated {
            SpectrumSource::EmpiricalCorrelated
        } else {
            SpectrumSource::EmpiricalUncorrelated
        };
        let mut warnings = Vec::new();
        let floored = if correlated {
            if self.correlated.is_none() {
                self.correlated = Some(empirical_kernel_correlated(
                    self.s,
                    &self.lrv_cfg,
                    self.grid,
                )?);
            }
            self.correlated.as_ref().map_or(0, |c| c.1)
        } else {
            if self.uncorrelated.is_none() {
                self.uncorrelated = Some(empirical_kernel_uncorrelated(self.s, self.grid)?);
            }
            0
        };
        if floored > 0 {
            warnings.push(format!(
                "{floored} non-positive partial HAC values floored at {:e} times the sample variance",
                crate::lrv::LRV_FLOOR_FACTOR
            ));
        }
        if let Some((_, _, sp)) = self
            .spectra
            .iter()
            .find(|(src, w, _)| *src == source && *w == ad)
        {
            return Ok((sp.clone(), warnings));
        }
        let kernel = if correlated {
            &self.correlated.as_ref().expect("built above").0
        } else {
            self.uncorrelated.as_ref().expect("built above")
        };
        let sp = if ad {
            eigenvalues(&ad_weight_kernel(kernel)?, self.cfg.truncation, source)?
        } else {
            eigenvalues(kernel, self.cfg.truncation, source)?
        };
        self.spectra.push((source, ad, sp.clone()));
        Ok((sp, warnings))
    }

    /// Runs one method with Monte Carlo seed `seed`.
    pub fn run(&mut self, method: MethodId, seed: u64) -> Result<TestReport> {
        let mut warnings = Vec::new();
        let cusum = cusum_process(self.s);
        let raw = match method.functional() {
            Some(Functional::Cm) => Some(cm_statistic(&cusum)?),
            Some(Functional::Ad) => Some(ad_statistic(&cusum)),
            None => None,
        };
        let divisor = if method.correlated() && method.family() != Family::Heteroskedastic {
            let (v, floored) = self.long_run_variance();
            warnings.push(lrv_note(&self.lrv_cfg));
            if floored {
                warnings.push("non-positive long-run variance estimate floored".into());
            }
            v
        } else {
            self.variance
        };
        let (statistic, spectrum) = match method.family() {
            Family::Standard => {
                let f = method
                    .functional()
                    .expect("standard methods have a functional");
                (
                    raw.expect("functional computed") / divisor,
                    classical_limit_spectrum(f, self.cfg.classical_terms)?,
                )
            }
            Family::Heteroskedastic => {
                let ad = method.functional() == Some(Functional::Ad);
                let (sp, w) = self.spectrum(method.correlated(), ad)?;
                warnings.extend(w);
                if method.correlated() {
                    warnings.push(lrv_note(&self.lrv_cfg));
                }
                (raw.expect("functional computed"), sp)
            }
            Family::VarianceRatio => (
                vs_statistic(self.s, divisor)?,
                vs_limit_spectrum(self.cfg.classical_terms)?,
            ),
        };
        if spectrum.is_zero() {
            return Err(Error::Degenerate(
                "estimated limit spectrum is identically zero".into(),
            ));
        }
        let clipped = spectrum.clipped_mass().as_f64();
        let total = spectrum.total().as_f64();
        if clipped > 1e-10 * total {
            warnings.push(format!(
                "negative eigenvalues clipped (mass {clipped:e}, {:.3e} of the retained mass)",
                clipped / total
            ));
        }
        let ls = sample_weighted_chisq(&spectrum, self.cfg.replications, spectrum.dof(), seed)?;
        let p = if self.cfg.pvalue_correction {
            p_value_corrected(&ls, statistic)
        } else {
            p_value(&ls, statistic)
        };
        let critical_values = REPORT_LEVELS
            .iter()
            .map(|&alpha| {
                Ok(CriticalValue {
                    alpha,
                    value: critical_value(&ls, alpha)?.as_f64(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(TestReport {
            schema_version: SCHEMA_VERSION,
            label: None,
            method,
            n: self.s.len(),
            statistic: statistic.as_f64(),
            p_value: p,
            critical_values,
            spectrum_source: spectrum.source(),
            spectrum_terms: spectrum.m(),
            config: ConfigEcho {
                grid: self.grid,
                truncation: self.cfg.truncation,
                kernel: self.lrv_cfg.kernel().name().to_string(),
                bandwidth: self.lrv_cfg.bandwidth().as_f64(),
                replications: self.cfg.replications,
                classical_terms: self.cfg.classical_terms,
                pvalue_correction: self.cfg.pvalue_correction,
                seed,
            },
            warnings,
        })
    }
}

/// Runs one method on one series.
pub fn run_test<T: Real>(
    s: &Series<T>,
    method: MethodId,
    cfg: &TestConfig<T>,
    seed: u64,
) -> Result<TestReport> {
    Prepared::new(s, cfg)?.run(method, seed)
}

/// Runs several methods on one series, sharing kernels and spectra.
pub fn run_tests<T: Real>(
    s: &Series<T>,
    methods: &[MethodId],
    cfg: &TestConfig<T>,
    seed: u64,
) -> Result<Vec<TestReport>> {
    let mut prep = Prepared::new(s, cfg)?;
    methods.iter().map(|&m| prep.run(m, seed)).collect()
}
