// SPDX-License-Identifier: MIT OR Apache-2.0

//! Partial-sample autocovariances and the kernel long-run-variance estimator
//! `ĝ_{N,k} = Σ_{|ℓ|<k} K(ℓ/h) γ̂_{N;k,ℓ}`.
//!
//! All autocovariances are centered at the full-sample mean and divided by
//! `N`, not by the partial length `k`, so `k ↦ ĝ_{N,k}` behaves like a
//! cumulative variance clock.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{CompensatedSum, Real};
use crate::series::Series;

/// Relative floor applied to non-positive HAC values, as a multiple of the
/// sample variance.
pub const LRV_FLOOR_FACTOR: f64 = 1e-12;

/// Piecewise-linear kernel given by nodes `(u, K(u))` for `u ≥ 0`, extended
/// evenly; zero beyond the last node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelTable<T> {
    nodes: Vec<(T, T)>,
}

impl<T: Real> KernelTable<T> {
    /// Validates `K(0) = 1`, `K ≥ 0`, strictly increasing abscissae and a zero
    /// final node (continuity, hence Lipschitz, at the support edge).
    pub fn new(nodes: Vec<(T, T)>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::invalid("kernel table needs at least two nodes"));
        }
        if nodes[0] != (T::zero(), T::one()) {
            return Err(Error::invalid("kernel table must start at (0, 1)"));
        }
        if nodes.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::invalid("kernel table abscissae must increase"));
        }
        if nodes
            .iter()
            .any(|&(u, k)| !u.is_finite() || !k.is_finite() || k < T::zero())
        {
            return Err(Error::invalid(
                "kernel table values must be finite and non-negative",
            ));
        }
        if nodes[nodes.len() - 1].1 != T::zero() {
            return Err(Error::invalid("kernel table must vanish at its last node"));
        }
        Ok(Self { nodes })
    }

    pub fn support(&self) -> T {
        self.nodes[self.nodes.len() - 1].0
    }

    fn eval(&self, u: T) -> T {
        let u = u.abs();
        if u >= self.support() {
            return T::zero();
        }
        let i = self.nodes.partition_point(|&(x, _)| x <= u);
        let (x0, y0) = self.nodes[i - 1];
        let (x1, y1) = self.nodes[i];
        y0 + (y1 - y0) * (u - x0) / (x1 - x0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind<T> {
    /// `max(0, 1 - |u|)`.
    Bartlett,
    /// Parzen kernel, support `[-1, 1]`.
    Parzen,
    Custom(KernelTable<T>),
}

impl<T: Real> KernelKind<T> {
    pub fn name(&self) -> &'static str {
        match self {
            KernelKind::Bartlett => "bartlett",
            KernelKind::Parzen => "parzen",
            KernelKind::Custom(_) => "custom",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LrvConfig<T> {
    kernel: KernelKind<T>,
    bandwidth: T,
}

impl<T: Real> LrvConfig<T> {
    pub fn new(kernel: KernelKind<T>, bandwidth: T) -> Result<Self> {
        if !(bandwidth >= T::one()) || !bandwidth.is_finite() {
            return Err(Error::invalid(format!(
                "bandwidth must be >= 1, got {bandwidth}"
            )));
        }
        Ok(Self { kernel, bandwidth })
    }

    pub fn bartlett(bandwidth: T) -> Result<Self> {
        Self::new(KernelKind::Bartlett, bandwidth)
    }

    /// Bartlett kernel with `h = ⌊N^{1/3}⌋`.
    pub fn default_for(n: usize) -> Self {
        Self {
            kernel: KernelKind::Bartlett,
            bandwidth: default_bandwidth(n),
        }
    }

    pub fn kernel(&self) -> &KernelKind<T> {
        &self.kernel
    }

    pub fn bandwidth(&self) -> T {
        self.bandwidth
    }

    /// Support `c` of the kernel.
    pub fn support(&self) -> T {
        match &self.kernel {
            KernelKind::Bartlett | KernelKind::Parzen => T::one(),
            KernelKind::Custom(t) => t.support(),
        }
    }

    /// Largest lag with a possibly non-zero weight, `⌈c·h⌉`.
    pub fn max_lag(&self) -> usize {
        (self.support() * self.bandwidth)
            .ceil()
            .to_usize()
            .unwrap_or(usize::MAX)
    }
}

/// `⌊N^{1/3}⌋`, at least 1.
pub fn default_bandwidth<T: Real>(n: usize) -> T {
    let h = T::from_count(n).cbrt().floor();
    // cbrt of a perfect cube can land one ulp low
    let h = if (h + T::one()).powi(3) <= T::from_count(n) {
        h + T::one()
    } else {
        h
    };
    h.max(T::one())
}

/// Kernel weight `K(u)`.
pub fn kernel_weight<T: Real>(cfg: &LrvConfig<T>, u: T) -> T {
    let a = u.abs();
    match &cfg.kernel {
        KernelKind::Bartlett => (T::one() - a).max(T::zero()),
        KernelKind::Parzen => {
            let half = T::lit(0.5);
            if a <= half {
                T::one() - T::lit(6.0) * a * a + T::lit(6.0) * a * a * a
            } else if a <= T::one() {
                T::lit(2.0) * (T::one() - a).powi(3)
            } else {
                T::zero()
            }
        }
        KernelKind::Custom(table) => table.eval(a),
    }
}

/// `γ̂_{N;k,ℓ}` for `1 ≤ k ≤ N`, `|ℓ| < k`.
pub fn autocov_partial<T: Real>(s: &Series<T>, k: usize, lag: isize) -> Result<T> {
    let n = s.len();
    if k == 0 || k > n {
        return Err(Error::invalid(format!(
            "partial length {k} outside 1..={n}"
        )));
    }
    if lag.unsigned_abs() >= k {
        return Err(Error::invalid(format!(
            "lag {lag} must satisfy |lag| < {k}"
        )));
    }
    let d = s.centered();
    let mut acc = CompensatedSum::new();
    if lag >= 0 {
        let l = lag as usize;
        // i = 1..=k-ℓ, pairs (i, i+ℓ)
        for i in 0..k - l {
            acc.add(d[i] * d[i + l]);
        }
    } else {
        let l = lag.unsigned_abs();
        // i = -ℓ+1..=k, pairs (i, i+ℓ) = (i, i-|ℓ|)
        for i in l..k {
            acc.add(d[i] * d[i - l]);
        }
    }
    Ok(acc.value() / T::from_count(n))
}

/// `ĝ_{N,k}` by direct summation over lags `|ℓ| ≤ min(k-1, ⌈c·h⌉)`.
///
/// Returned unfloored; see [`floor_lrv`].
pub fn lrv_partial<T: Real>(s: &Series<T>, k: usize, cfg: &LrvConfig<T>) -> Result<T> {
    let n = s.len();
    if k == 0 || k > n {
        return Err(Error::invalid(format!(
            "partial length {k} outside 1..={n}"
        )));
    }
    let max_lag = (k - 1).min(cfg.max_lag()) as isize;
    let mut acc = CompensatedSum::new();
    for lag in -max_lag..=max_lag {
        let w = kernel_weight(cfg, T::from_count(lag.unsigned_abs()) / cfg.bandwidth);
        if w != T::zero() {
            acc.add(w * autocov_partial(s, k, lag)?);
        }
    }
    Ok(acc.value())
}

/// The whole path `[ĝ_{N,0} = 0, ĝ_{N,1}, .., ĝ_{N,N}]` in `O(N·h)`.
///
/// Going from `k-1` to `k` adds, for each lag `ℓ ≤ k-1`, the single product
/// `d_{k-ℓ} d_k` to both `γ̂_{k,ℓ}` and `γ̂_{k,-ℓ}`.
pub fn lrv_path<T: Real>(s: &Series<T>, cfg: &LrvConfig<T>) -> Vec<T> {
    let d = s.centered();
    let max_lag = cfg.max_lag();
    let weights: Vec<T> = (1..=max_lag.min(d.len()))
        .map(|l| kernel_weight(cfg, T::from_count(l) / cfg.bandwidth))
        .collect();
    let two = T::lit(2.0);
    let n = T::from_count(d.len());
    let mut out = Vec::with_capacity(d.len() + 1);
    out.push(T::zero());
    let mut acc = CompensatedSum::new();
    for k in 0..d.len() {
        let mut cross = T::zero();
        for (l, &w) in weights.iter().enumerate().take(k) {
            cross += w * d[k - l - 1];
        }
        acc.add(d[k] * d[k] + two * cross * d[k]);
        out.push(acc.value() / n);
    }
    out
}

/// `H_N(k/N) = (1/N) Σ_{i≤k} (X_i - X̄)²` for `k = 0..N`.
pub fn variance_path<T: Real>(s: &Series<T>) -> Vec<T> {
    let d = s.centered();
    let n = T::from_count(d.len());
    let mut out = Vec::with_capacity(d.len() + 1);
    out.push(T::zero());
    let mut acc = CompensatedSum::new();
    for &x in &d {
        acc.add(x * x);
        out.push(acc.value() / n);
    }
    out
}

/// `(1/N) Σ (X_i - X̄)²`.
pub fn sample_variance<T: Real>(s: &Series<T>) -> T {
    variance_path(s)[s.len()]
}

/// Replaces a non-positive HAC value by `LRV_FLOOR_FACTOR · variance`.
/// Returns the value and whether the floor was applied.
pub fn floor_lrv<T: Real>(value: T, variance: T) -> (T, bool) {
    if value > T::zero() {
        (value, false)
    } else {
        (T::lit(LRV_FLOOR_FACTOR) * variance, true)
    }
}
