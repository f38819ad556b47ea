// SPDX-License-Identifier: MIT OR Apache-2.0

//! Eigenvalues of dense real symmetric matrices: Householder reduction to
//! tridiagonal form followed by the implicit QL iteration.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// QL sweeps allowed per eigenvalue.
pub const MAX_QL_ITERATIONS: usize = 60;

/// All eigenvalues of the symmetric `n × n` row-major matrix `a`, in
/// descending order. Only the lower triangle is read.
pub fn symmetric_eigenvalues<T: Real>(a: &[T], n: usize) -> Result<Vec<T>> {
    if a.len() != n * n {
        return Err(Error::invalid(format!(
            "matrix has {} entries, expected {n}x{n}",
            a.len()
        )));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut work = a.to_vec();
    let (mut d, mut e) = tridiagonalize(&mut work, n);
    tridiagonal_ql(&mut d, &mut e)?;
    d.sort_by(|x, y| y.partial_cmp(x).expect("finite eigenvalues"));
    Ok(d)
}

/// Householder reduction. Returns the diagonal `d` and the subdiagonal `e`
/// with `e[i]` coupling rows `i-1` and `i` (`e[0] = 0`).
fn tridiagonalize<T: Real>(a: &mut [T], n: usize) -> (Vec<T>, Vec<T>) {
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n];
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = T::zero();
        if l > 0 {
            let scale: T = (0..=l).map(|k| a[i * n + k].abs()).sum();
            if scale == T::zero() {
                e[i] = a[i * n + l];
            } else {
                for k in 0..=l {
                    a[i * n + k] /= scale;
                    h += a[i * n + k] * a[i * n + k];
                }
                let f = a[i * n + l];
                let g = if f >= T::zero() { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                a[i * n + l] = f - g;
                let mut f = T::zero();
                for j in 0..=l {
                    let mut g = T::zero();
                    for k in 0..=j {
                        g += a[j * n + k] * a[i * n + k];
                    }
                    for k in j + 1..=l {
                        g += a[k * n + j] * a[i * n + k];
                    }
                    e[j] = g / h;
                    f += e[j] * a[i * n + j];
                }
                let hh = f / (h + h);
                for j in 0..=l {
                    let f = a[i * n + j];
                    let g = e[j] - hh * f;
                    e[j] = g;
                    for k in 0..=j {
                        let delta = f * e[k] + g * a[i * n + k];
                        a[j * n + k] -= delta;
                    }
                }
            }
        } else {
            e[i] = a[i * n + l];
        }
        d[i] = h;
    }
    for (i, di) in d.iter_mut().enumerate() {
        *di = a[i * n + i];
    }
    e[0] = T::zero();
    (d, e)
}

/// Implicit QL with Wilkinson-type shifts on a tridiagonal matrix; the
/// eigenvalues overwrite `d`.
fn tridiagonal_ql<T: Real>(d: &mut [T], e: &mut [T]) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = T::zero();
    let two = T::lit(2.0);
    for l in 0..n {
        let mut iterations = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= T::epsilon() * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iterations += 1;
            if iterations > MAX_QL_ITERATIONS {
                return Err(Error::EigenNonConvergence {
                    iterations: MAX_QL_ITERATIONS,
                });
            }
            let mut g = (d[l + 1] - d[l]) / (two * e[l]);
            let mut r = g.hypot(T::one());
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (T::one(), T::one(), T::zero());
            let mut underflow = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == T::zero() {
                    d[i + 1] -= p;
                    e[m] = T::zero();
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + two * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = T::zero();
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_matrix() {
        let a = [3.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 2.0];
        assert_eq!(symmetric_eigenvalues(&a, 3).unwrap(), vec![3.0, 2.0, -1.0]);
    }

    #[test]
    fn two_by_two() {
        let a = [2.0_f64, 1.0, 1.0, 2.0];
        let ev = symmetric_eigenvalues(&a, 2).unwrap();
        assert!((ev[0] - 3.0).abs() < 1e-14 && (ev[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn second_difference_matrix() {
        // eigenvalues 2 - 2 cos(kπ/(n+1))
        let n = 40;
        let mut a = vec![0.0_f64; n * n];
        for i in 0..n {
            a[i * n + i] = 2.0;
            if i + 1 < n {
                a[i * n + i + 1] = -1.0;
                a[(i + 1) * n + i] = -1.0;
            }
        }
        let ev = symmetric_eigenvalues(&a, n).unwrap();
        for (idx, v) in ev.iter().enumerate() {
            let k = (n - idx) as f64;
            let exact = 2.0 - 2.0 * (k * std::f64::consts::PI / (n as f64 + 1.0)).cos();
            assert!((v - exact).abs() < 1e-12, "{v} vs {exact}");
        }
    }

    #[test]
    fn f32_matrix() {
        let a = [4.0_f32, 1.0, 1.0, 3.0];
        let ev = symmetric_eigenvalues(&a, 2).unwrap();
        let disc = 5.0_f32.sqrt();
        assert!((ev[0] - (7.0 + disc) / 2.0).abs() < 1e-5);
        assert!((ev[1] - (7.0 - disc) / 2.0).abs() < 1e-5);
    }

    #[test]
    fn zero_and_empty() {
        assert_eq!(
            symmetric_eigenvalues(&[0.0_f64; 9], 3).unwrap(),
            vec![0.0; 3]
        );
        assert!(symmetric_eigenvalues::<f64>(&[], 0).unwrap().is_empty());
        assert!(symmetric_eigenvalues(&[1.0_f64; 5], 2).is_err());
    }
}
