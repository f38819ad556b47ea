// SPDX-License-Identifier: MIT OR Apache-2.0

//! Rejection-rate estimation over replicated data sets.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dgp::DgpSpec;
use crate::error::{Error, Result};
use crate::procedures::{MethodId, Prepared, TestConfig};
use crate::series::Series;

/// Smallest accepted number of replications.
pub const MIN_REPS: usize = 100;

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Data and Monte Carlo seeds of replication `rep`.
pub fn replication_seeds(seed: u64, rep: usize) -> (u64, u64) {
    let base = mix(seed ^ mix(rep as u64));
    (mix(base ^ 1), mix(base ^ 2))
}

/// Seed of grid cell `index` under the top-level `seed`.
pub fn cell_seed(seed: u64, index: usize) -> u64 {
    mix(seed.wrapping_add(mix(0xCE11 ^ index as u64)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub method: MethodId,
    pub rate: f64,
    /// Binomial standard error `(r(1-r)/valid)^{1/2}`.
    pub mc_stderr: f64,
    pub rejections: usize,
    /// Replications that produced a report.
    pub valid: usize,
    /// Replications rejected as degenerate input.
    pub degenerate: usize,
}

/// Rejection rates at `level` of several methods evaluated on the same
/// replicated series drawn from `generate(data_seed)`.
pub fn rejection_rates_with<G>(
    generate: G,
    methods: &[MethodId],
    level: f64,
    reps: usize,
    seed: u64,
    cfg: &TestConfig<f64>,
) -> Result<Vec<RateEstimate>>
where
    G: Fn(u64) -> Result<Series<f64>> + Sync,
{
    if reps < MIN_REPS {
        return Err(Error::invalid(format!(
            "need at least {MIN_REPS} replications, got {reps}"
        )));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::invalid(format!(
            "level must lie in (0,1), got {level}"
        )));
    }
    if methods.is_empty() {
        return Err(Error::invalid("no methods requested"));
    }
    // per replication: Some(reject flags) or None when degenerate
    let outcomes: Vec<Option<Vec<bool>>> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let (data_seed, mc_seed) = replication_seeds(seed, rep);
            let s = generate(data_seed)?;
            let mut prep = match Prepared::new(&s, cfg) {
                Ok(p) => p,
                Err(e) if e.is_degenerate() => return Ok(None),
                Err(e) => return Err(e),
            };
            let mut flags = Vec::with_capacity(methods.len());
            for &m in methods {
                match prep.run(m, mc_seed) {
                    Ok(r) => flags.push(r.rejects(level)),
                    Err(e) if e.is_degenerate() => return Ok(None),
                    Err(e) => return Err(e),
                }
            }
            Ok(Some(flags))
        })
        .collect::<Result<_>>()?;
    let degenerate = outcomes.iter().filter(|o| o.is_none()).count();
    let valid = reps - degenerate;
    Ok(methods
        .iter()
        .enumerate()
        .map(|(j, &method)| {
            let rejections = outcomes.iter().flatten().filter(|f| f[j]).count();
            let rate = if valid > 0 {
                rejections as f64 / valid as f64
            } else {
                f64::NAN
            };
            RateEstimate {
                method,
                rate,
                mc_stderr: (rate * (1.0 - rate) / valid as f64).sqrt(),
                rejections,
                valid,
                degenerate,
            }
        })
        .collect())
}

pub fn rejection_rates(
    spec: &DgpSpec,
    methods: &[MethodId],
    level: f64,
    reps: usize,
    seed: u64,
    cfg: &TestConfig<f64>,
) -> Result<Vec<RateEstimate>> {
    spec.validate()?;
    rejection_rates_with(|s| spec.generate(s), methods, level, reps, seed, cfg)
}

pub fn rejection_rate(
    spec: &DgpSpec,
    method: MethodId,
    level: f64,
    reps: usize,
    seed: u64,
    cfg: &TestConfig<f64>,
) -> Result<RateEstimate> {
    Ok(rejection_rates(spec, &[method], level, reps, seed, cfg)?.remove(0))
}

/// One entry of a simulation grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridCell {
    pub dgp: DgpSpec,
    pub methods: Vec<MethodId>,
    #[serde(default = "default_level")]
    pub level: f64,
    pub reps: usize,
}

fn default_level() -> f64 {
    0.05
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default)]
    pub seed: Option<u64>,
    /// Monte Carlo draws per P-value.
    #[serde(default)]
    pub replications: Option<usize>,
    #[serde(default, rename = "cell")]
    pub cells: Vec<GridCell>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub dgp: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub method: MethodId,
    pub level: f64,
    pub reps: usize,
    pub rate: f64,
    pub mc_stderr: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct GridOutput {
    pub rows: Vec<GridRow>,
    /// Skipped cells and degenerate replications, with cell indices.
    pub warnings: Vec<String>,
}

fn check_cell(cell: &GridCell) -> Result<()> {
    cell.dgp.validate()?;
    if cell.methods.is_empty() {
        return Err(Error::invalid("no methods"));
    }
    if cell.reps < MIN_REPS {
        return Err(Error::invalid(format!("reps must be at least {MIN_REPS}")));
    }
    if !(cell.level > 0.0 && cell.level < 1.0) {
        return Err(Error::invalid("level must lie in (0,1)"));
    }
    Ok(())
}

/// Runs every valid cell; invalid cells are skipped with a warning. Fails if
/// the grid is empty or no cell is valid.
pub fn run_grid(grid: &GridConfig, seed: u64, cfg: &TestConfig<f64>) -> Result<GridOutput> {
    if grid.cells.is_empty() {
        return Err(Error::invalid("empty grid"));
    }
    let mut out = GridOutput::default();
    let mut ran = 0;
    for (index, cell) in grid.cells.iter().enumerate() {
        if let Err(e) = check_cell(cell) {
            out.warnings.push(format!("cell {index}: skipped: {e}"));
            continue;
        }
        let cs = cell_seed(seed, index);
        let rates = rejection_rates(&cell.dgp, &cell.methods, cell.level, cell.reps, cs, cfg)?;
        ran += 1;
        if let Some(r) = rates.first().filter(|r| r.degenerate > 0) {
            out.warnings.push(format!(
                "cell {index}: {} degenerate replications excluded",
                r.degenerate
            ));
        }
        out.rows.extend(rates.into_iter().map(|r| GridRow {
            dgp: cell.dgp.label(),
            n: cell.dgp.n,
            method: r.method,
            level: cell.level,
            reps: cell.reps,
            rate: r.rate,
            mc_stderr: r.mc_stderr,
            seed: cs,
        }));
    }
    if ran == 0 {
        return Err(Error::invalid("no valid grid cells"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dgp::Base;

    fn quick() -> TestConfig<f64> {
        TestConfig {
            replications: 1000,
            classical_terms: 50,
            ..TestConfig::default()
        }
    }

    #[test]
    fn seeds_are_distinct() {
        let (a, b) = replication_seeds(1, 0);
        let (c, _) = replication_seeds(1, 1);
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_ne!(cell_seed(1, 0), cell_seed(1, 1));
    }

    #[test]
    fn argument_checks() {
        let spec = DgpSpec::new(Base::Gaussian, 32);
        assert!(rejection_rate(&spec, MethodId::Sucm, 0.05, 99, 0, &quick()).is_err());
        assert!(rejection_rate(&spec, MethodId::Sucm, 1.5, 100, 0, &quick()).is_err());
    }

    #[test]
    fn deterministic_rates() {
        let spec = DgpSpec::new(Base::Gaussian, 64);
        let a = rejection_rates(
            &spec,
            &[MethodId::Sucm, MethodId::Vsu],
            0.05,
            100,
            3,
            &quick(),
        );
        let b = rejection_rates(
            &spec,
            &[MethodId::Sucm, MethodId::Vsu],
            0.05,
            100,
            3,
            &quick(),
        );
        assert_eq!(a.unwrap(), b.unwrap());
    }

    #[test]
    fn degenerate_replications_counted() {
        let gen = |seed: u64| {
            if seed.is_multiple_of(2) {
                Series::new(vec![1.0; 16])
            } else {
                Series::new((0..16).map(|i| (i % 3) as f64).collect())
            }
        };
        let r = rejection_rates_with(gen, &[MethodId::Sucm], 0.05, 100, 5, &quick()).unwrap();
        assert!(r[0].degenerate > 0);
        assert_eq!(r[0].valid + r[0].degenerate, 100);
    }

    #[test]
    fn grid_validation() {
        let empty = GridConfig {
            seed: None,
            replications: None,
            cells: vec![],
        };
        assert!(run_grid(&empty, 0, &quick()).is_err());
        let bad = GridCell {
            dgp: DgpSpec::new(Base::Ar1 { rho: 1.5 }, 64),
            methods: vec![MethodId::Sucm],
            level: 0.05,
            reps: 100,
        };
        let good = GridCell {
            dgp: DgpSpec::new(Base::Gaussian, 64),
            ..bad.clone()
        };
        let grid = GridConfig {
            seed: None,
            replications: None,
            cells: vec![bad, good],
        };
        let out = run_grid(&grid, 0, &quick()).unwrap();
        assert_eq!(out.rows.len(), 1);
        assert!(out.warnings[0].starts_with("cell 0"));
    }
}
