// SPDX-License-Identifier: MIT OR Apache-2.0

//! Covariance kernels of the CUSUM limit on the midpoint grid
//! `t_j = (j - ½)/G`.
//!
//! Every kernel here has the bridge form
//! `K(t,s) = c(t∧s) - t c(s) - s c(t) + ts c(1)` for some clock `c`: the
//! integrated variance `b` (theoretical), the partial variance `H_N`
//! (uncorrelated errors) or the partial HAC path `ĝ_N` (correlated errors).

use std::io::{self, Write};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::lrv::{floor_lrv, lrv_path, sample_variance, variance_path, LrvConfig};
use crate::quad::adaptive_simpson;
use crate::scalar::Real;
use crate::series::Series;

/// Smallest grid accepted by [`theoretical_kernel`].
pub const MIN_THEORETICAL_GRID: usize = 16;

/// Default grid size `min(N, 256)`.
pub fn default_grid(n: usize) -> usize {
    n.min(256)
}

/// Midpoint grid `(j - ½)/G`, `j = 1..=G`.
pub fn midpoint_grid<T: Real>(g: usize) -> Vec<T> {
    let two_g = T::from_count(2 * g);
    (1..=g).map(|j| T::from_count(2 * j - 1) / two_g).collect()
}

/// `⌊N t_j⌋` for the midpoint grid, computed in integers.
fn midpoint_indices(n: usize, g: usize) -> Vec<usize> {
    (1..=g).map(|j| n * (2 * j - 1) / (2 * g)).collect()
}

/// Dense symmetric kernel matrix on the midpoint grid.
#[derive(Clone, Debug, PartialEq)]
pub struct CovKernel<T> {
    grid: Vec<T>,
    values: Vec<T>,
    weighted: bool,
}

impl<T: Real> CovKernel<T> {
    /// Fills the upper triangle with `f(j, k)` and mirrors it.
    fn from_symmetric_fn(g: usize, f: impl Fn(usize, usize) -> T) -> Self {
        let mut values = vec![T::zero(); g * g];
        for j in 0..g {
            for k in j..g {
                let v = f(j, k);
                values[j * g + k] = v;
                values[k * g + j] = v;
            }
        }
        Self {
            grid: midpoint_grid(g),
            values,
            weighted: false,
        }
    }

    fn from_clock(clock_at_grid: &[T], clock_at_one: T) -> Self {
        let grid = midpoint_grid::<T>(clock_at_grid.len());
        Self::from_symmetric_fn(clock_at_grid.len(), |j, k| {
            // t_j ≤ t_k for j ≤ k
            let (t, s) = (grid[j], grid[k]);
            clock_at_grid[j] - t * clock_at_grid[k] - s * clock_at_grid[j] + t * s * clock_at_one
        })
    }

    pub fn size(&self) -> usize {
        self.grid.len()
    }

    pub fn grid(&self) -> &[T] {
        &self.grid
    }

    /// Row-major `G × G` values.
    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn get(&self, j: usize, k: usize) -> T {
        self.values[j * self.size() + k]
    }

    pub fn is_weighted(&self) -> bool {
        self.weighted
    }

    /// Entrywise `c · K`.
    pub fn scaled(&self, c: T) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| v * c).collect(),
            weighted: self.weighted,
        }
    }

    /// Discretized `(∫∫ K²(t,s) dt ds)^{1/2}` under the midpoint rule.
    pub fn l2_norm(&self) -> T {
        let g = T::from_count(self.size());
        (self.values.iter().map(|&v| v * v).sum::<T>()).sqrt() / g
    }

    /// Discretized L² distance to another kernel on the same grid.
    pub fn l2_distance(&self, other: &Self) -> Result<T> {
        if self.size() != other.size() {
            return Err(Error::invalid("kernels live on different grids"));
        }
        let g = T::from_count(self.size());
        let ss: T = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum();
        Ok(ss.sqrt() / g)
    }

    /// Largest `|K(t,s) - K(s,t)|`.
    pub fn asymmetry(&self) -> T {
        let g = self.size();
        let mut worst = T::zero();
        for j in 0..g {
            for k in 0..j {
                worst = worst.max((self.get(j, k) - self.get(k, j)).abs());
            }
        }
        worst
    }

    /// CSV dump: a header line `G,<G>` then one row per grid point.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let g = self.size();
        writeln!(w, "G,{g}")?;
        for j in 0..g {
            let row: Vec<String> = (0..g).map(|k| format!("{:e}", self.get(j, k))).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

pub type ProfileFn<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

/// Variance profile `a(·)` and scale `σ` of heteroskedastic errors
/// `u_i = a(i/N) e_i`; the limit clock is `b(t) = σ² ∫₀ᵗ a²(u) du`.
#[derive(Clone)]
pub struct VarianceProfile<T> {
    a: ProfileFn<T>,
    sigma: T,
    jumps: Vec<T>,
}

impl<T: Real> std::fmt::Debug for VarianceProfile<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VarianceProfile")
            .field("sigma", &self.sigma)
            .field("jumps", &self.jumps)
            .finish_non_exhaustive()
    }
}

impl<T: Real> VarianceProfile<T> {
    /// `a` continuous on `(0,1)` except at the listed jump locations.
    pub fn new(a: ProfileFn<T>, sigma: T, mut jumps: Vec<T>) -> Result<Self> {
        if !(sigma > T::zero()) {
            return Err(Error::invalid(format!(
                "sigma must be positive, got {sigma}"
            )));
        }
        if jumps.iter().any(|&x| !(x > T::zero() && x < T::one())) {
            return Err(Error::invalid("jump locations must lie in (0,1)"));
        }
        jumps.sort_by(|a, b| a.partial_cmp(b).expect("finite jumps"));
        jumps.dedup();
        Ok(Self { a, sigma, jumps })
    }

    /// `a ≡ 1`.
    pub fn homoskedastic(sigma: T) -> Result<Self> {
        Self::new(Arc::new(|_| T::one()), sigma, Vec::new())
    }

    /// `a = levels[ℓ]` between consecutive `breaks` (right-continuous).
    pub fn piecewise_constant(breaks: Vec<T>, levels: Vec<T>, sigma: T) -> Result<Self> {
        if levels.len() != breaks.len() + 1 {
            return Err(Error::invalid(
                "piecewise profile needs one more level than breaks",
            ));
        }
        if breaks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("profile breaks must increase"));
        }
        let b = breaks.clone();
        let a: ProfileFn<T> = Arc::new(move |t| levels[b.partition_point(|&x| x < t)]);
        Self::new(a, sigma, breaks)
    }

    pub fn sigma(&self) -> T {
        self.sigma
    }

    pub fn a(&self, t: T) -> T {
        (self.a)(t)
    }

    /// `σ² ∫_lo^hi a²`, split at jumps so each piece is smooth.
    fn clock_increment(&self, lo: T, hi: T) -> Result<T> {
        let f = |u: T| {
            let v = (self.a)(u);
            v * v
        };
        let mut cuts = vec![lo];
        cuts.extend(self.jumps.iter().copied().filter(|&j| j > lo && j < hi));
        cuts.push(hi);
        let tol = T::lit(1e-13).max(T::epsilon() * T::lit(8.0));
        let mut acc = T::zero();
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            // one-sided values at the piece ends
            let delta = (b - a) * T::epsilon().sqrt();
            let piece = |u: T| f(u.max(a + delta).min(b - delta));
            acc += adaptive_simpson(&piece, a, b, tol)?;
        }
        Ok(self.sigma * self.sigma * acc)
    }

    /// `b(t)`.
    pub fn clock(&self, t: T) -> Result<T> {
        self.clock_increment(T::zero(), t)
    }

    /// `C(t,s) = b(t∧s) - t b(s) - s b(t) + ts b(1)` at arbitrary points.
    pub fn covariance(&self, t: T, s: T) -> Result<T> {
        let (bt, bs, b1) = (self.clock(t)?, self.clock(s)?, self.clock(T::one())?);
        Ok(self.clock(t.min(s))? - t * bs - s * bt + t * s * b1)
    }
}

/// `C(t,s)` of the limiting process on a `G`-point midpoint grid.
pub fn theoretical_kernel<T: Real>(p: &VarianceProfile<T>, g: usize) -> Result<CovKernel<T>> {
    if g < MIN_THEORETICAL_GRID {
        return Err(Error::invalid(format!(
            "theoretical kernel needs G >= {MIN_THEORETICAL_GRID}, got {g}"
        )));
    }
    let grid = midpoint_grid::<T>(g);
    let mut clock = Vec::with_capacity(g);
    let mut acc = T::zero();
    let mut prev = T::zero();
    for &t in &grid {
        acc += p.clock_increment(prev, t)?;
        clock.push(acc);
        prev = t;
    }
    let at_one = acc + p.clock_increment(prev, T::one())?;
    Ok(CovKernel::from_clock(&clock, at_one))
}

/// A step clock `c(k/N)`, `k = 0..N`, read at `u` as `c(⌊Nu⌋/N)`.
#[derive(Clone, Debug, PartialEq)]
pub struct StepClock<T> {
    values: Vec<T>,
}

impl<T: Real> StepClock<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::invalid("step clock needs at least two values"));
        }
        Ok(Self { values })
    }

    /// Partial variance path `H_N`.
    pub fn partial_variance(s: &Series<T>) -> Self {
        Self {
            values: variance_path(s),
        }
    }

    /// Partial HAC path `ĝ_N` with non-positive values (other than at `k = 0`)
    /// floored. Returns the clock and the number of floored entries.
    pub fn partial_lrv(s: &Series<T>, cfg: &LrvConfig<T>) -> (Self, usize) {
        let var = sample_variance(s);
        let mut floored = 0;
        let mut values = lrv_path(s, cfg);
        for v in values.iter_mut().skip(1) {
            let (fv, hit) = floor_lrv(*v, var);
            *v = fv;
            floored += usize::from(hit);
        }
        (Self { values }, floored)
    }

    pub fn n(&self) -> usize {
        self.values.len() - 1
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn at(&self, u: T) -> T {
        let k = (T::from_count(self.n()) * u)
            .floor()
            .to_usize()
            .unwrap_or(0);
        self.values[k.min(self.n())]
    }

    /// Bridge covariance of this clock at arbitrary `(t, s)`.
    pub fn covariance(&self, t: T, s: T) -> T {
        self.at(t.min(s)) - t * self.at(s) - s * self.at(t) + s * t * self.at(T::one())
    }

    /// Kernel on the `G`-point midpoint grid, read exactly at `⌊N t_j⌋`.
    pub fn kernel(&self, g: usize) -> Result<CovKernel<T>> {
        if g == 0 {
            return Err(Error::invalid("grid size must be positive"));
        }
        let at_grid: Vec<T> = midpoint_indices(self.n(), g)
            .into_iter()
            .map(|k| self.values[k])
            .collect();
        Ok(CovKernel::from_clock(&at_grid, self.values[self.n()]))
    }
}

/// `Ĉ_N` built from `H_N`.
pub fn empirical_kernel_uncorrelated<T: Real>(s: &Series<T>, g: usize) -> Result<CovKernel<T>> {
    StepClock::partial_variance(s).kernel(g)
}

/// `C̃_N` built from the partial HAC path. Also returns the number of
/// floored HAC values.
pub fn empirical_kernel_correlated<T: Real>(
    s: &Series<T>,
    cfg: &LrvConfig<T>,
    g: usize,
) -> Result<(CovKernel<T>, usize)> {
    let (clock, floored) = StepClock::partial_lrv(s, cfg);
    Ok((clock.kernel(g)?, floored))
}

/// `D(t,s) = K(t,s) / (t(1-t)s(1-s))^{1/2}`.
pub fn ad_weight_kernel<T: Real>(k: &CovKernel<T>) -> Result<CovKernel<T>> {
    if k.weighted {
        return Err(Error::invalid(
            "kernel is already Anderson-Darling weighted",
        ));
    }
    if k.grid.iter().any(|&t| !(t > T::zero() && t < T::one())) {
        return Err(Error::invalid("grid touches an endpoint of [0,1]"));
    }
    let root: Vec<T> = k
        .grid
        .iter()
        .map(|&t| (t * (T::one() - t)).sqrt())
        .collect();
    let g = k.size();
    let mut out = CovKernel::from_symmetric_fn(g, |j, l| k.get(j, l) / (root[j] * root[l]));
    out.grid = k.grid.clone();
    out.weighted = true;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn homoskedastic_kernel_is_brownian_bridge() {
        let p = VarianceProfile::<f64>::homoskedastic(1.0).unwrap();
        assert!((p.covariance(0.5, 0.5).unwrap() - 0.25).abs() < 1e-14);
        let k = theoretical_kernel(&p, 64).unwrap();
        let t = k.grid().to_vec();
        for j in 0..64 {
            for l in 0..64 {
                let exact = t[j].min(t[l]) - t[j] * t[l];
                assert!((k.get(j, l) - exact).abs() < 1e-10);
            }
        }
        assert_eq!(k.asymmetry(), 0.0);
    }

    #[test]
    fn piecewise_profile_clock_and_covariance() {
        let p = VarianceProfile::<f64>::piecewise_constant(vec![0.5], vec![1.0, 2.0], 1.0).unwrap();
        assert!((p.clock(1.0).unwrap() - 2.5).abs() < 1e-12);
        assert!((p.clock(0.5).unwrap() - 0.5).abs() < 1e-12);
        assert!((p.covariance(0.5, 0.5).unwrap() - 0.625).abs() < 1e-12);
    }

    #[test]
    fn theoretical_kernel_diagonal_vanishes_at_edges() {
        let p = VarianceProfile::<f64>::homoskedastic(1.0).unwrap();
        let small = theoretical_kernel(&p, 16).unwrap();
        let large = theoretical_kernel(&p, 256).unwrap();
        assert!(large.get(0, 0) < small.get(0, 0));
        assert!(large.get(255, 255) < small.get(15, 15));
        assert!(large.get(0, 0) < 1.0 / 256.0);
    }

    #[test]
    fn small_theoretical_grid_rejected() {
        let p = VarianceProfile::<f64>::homoskedastic(1.0).unwrap();
        assert!(theoretical_kernel(&p, 8).is_err());
    }

    #[test]
    fn uncorrelated_kernel_hand_values() {
        let s = Series::from_slice(&[0.0, 0.0, 1.0, 1.0]).unwrap();
        let clock = StepClock::partial_variance(&s);
        for k in 0..=4 {
            assert_eq!(clock.values()[k], k as f64 / 16.0);
        }
        assert!((clock.covariance(0.5, 0.5) - 0.0625).abs() < 1e-15);
        for &t in &[0.0, 0.3, 0.9] {
            assert_eq!(clock.covariance(t, 0.0), 0.0);
            assert_eq!(clock.covariance(0.0, t), 0.0);
        }
    }

    #[test]
    fn constant_series_kernels_vanish() {
        let s = Series::from_slice(&[4.0; 12]).unwrap();
        let k = empirical_kernel_uncorrelated(&s, 12).unwrap();
        assert!(k.values().iter().all(|&v| v == 0.0));
        let cfg = LrvConfig::bartlett(2.0).unwrap();
        let (k, _) = empirical_kernel_correlated(&s, &cfg, 12).unwrap();
        assert!(k.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn correlated_with_unit_bandwidth_equals_uncorrelated() {
        let v: Vec<f64> = (0..300)
            .map(|i| ((i * 131) % 97) as f64 / 9.7 - 5.0)
            .collect();
        let s = Series::new(v).unwrap();
        let cfg = LrvConfig::bartlett(1.0).unwrap();
        let (kc, floored) = empirical_kernel_correlated(&s, &cfg, 64).unwrap();
        assert_eq!(floored, 0);
        assert_eq!(kc, empirical_kernel_uncorrelated(&s, 64).unwrap());
    }

    #[test]
    fn ad_weighting_of_bridge_has_unit_diagonal() {
        let p = VarianceProfile::<f64>::homoskedastic(1.0).unwrap();
        let d = ad_weight_kernel(&theoretical_kernel(&p, 32).unwrap()).unwrap();
        assert!(d.is_weighted());
        for j in 0..32 {
            assert!((d.get(j, j) - 1.0).abs() < 1e-10);
        }
        assert!(ad_weight_kernel(&d).is_err());
    }

    #[test]
    fn ad_weighting_preserves_zero_and_symmetry() {
        let s = Series::from_slice(&[2.0; 8]).unwrap();
        let z = empirical_kernel_uncorrelated(&s, 8).unwrap();
        assert!(ad_weight_kernel(&z)
            .unwrap()
            .values()
            .iter()
            .all(|&v| v == 0.0));
        let p = VarianceProfile::piecewise_constant(vec![0.5], vec![1.0, 2.0], 1.0).unwrap();
        let d = ad_weight_kernel(&theoretical_kernel(&p, 40).unwrap()).unwrap();
        assert_eq!(d.asymmetry(), 0.0);
    }

    #[test]
    fn midpoint_indices_floor_exactly() {
        // N t_j = 4 (2j-1) / 8 = j - 1/2
        assert_eq!(midpoint_indices(4, 4), vec![0, 1, 2, 3]);
        assert_eq!(midpoint_indices(10, 4), vec![1, 3, 6, 8]);
    }

    #[test]
    fn csv_dump_has_header_and_rows() {
        let s = Series::from_slice(&[0.0, 0.0, 1.0, 1.0]).unwrap();
        let k = empirical_kernel_uncorrelated(&s, 4).unwrap();
        let mut buf = Vec::new();
        k.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "G,4");
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[1].split(',').count(), 4);
    }
}
