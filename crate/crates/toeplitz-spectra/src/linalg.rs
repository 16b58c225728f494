//! Shared dense linear algebra helpers: eigendecompositions, ranks,
//! log-polar determinants and polynomial root finding.

use ndarray::prelude::*;
use ndarray_linalg::{Determinant, Eig, Inverse, Solve, SVD};
use num_complex::Complex64;

use crate::error::{Result, SpectraError};

pub type C64 = Complex64;
pub type CMat = Array2<C64>;
pub type CVec = Array1<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Tiny denominator guard used in relative errors, per the determinant checks.
pub const EPS_DENOM: f64 = 1e-300;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(n: usize) -> CMat {
    Array2::eye(n)
}

/// Frobenius norm.
pub fn fro_norm(a: &CMat) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn vec_norm(v: &CVec) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Relative discrepancy |a - b| / (|a| + |b| + eps).
pub fn rel_err(a: C64, b: C64) -> f64 {
    (a - b).norm() / (a.norm() + b.norm() + EPS_DENOM)
}

/// Rebuilds the matrix in contiguous row-major storage. Slicing can leave
/// zero strides on unit axes, which the LAPACK wrappers refuse.
fn contiguous(a: &CMat) -> CMat {
    Array2::from_shape_vec((a.nrows(), a.ncols()), a.iter().cloned().collect())
        .expect("shape matches element count")
}

/// Eigenvalues and right eigenvectors of a general complex matrix.
pub fn eig(a: &CMat) -> Result<(CVec, CMat)> {
    contiguous(a)
        .eig()
        .map_err(|e| SpectraError::EigensolverFailure(e.to_string()))
}

/// Eigenvalues only.
pub fn eigvals(a: &CMat) -> Result<CVec> {
    Ok(eig(a)?.0)
}

pub fn inverse(a: &CMat) -> Result<CMat> {
    contiguous(a)
        .inv()
        .map_err(|e| SpectraError::EigensolverFailure(format!("inverse failed: {e}")))
}

pub fn solve(a: &CMat, b: &CVec) -> Result<CVec> {
    contiguous(a)
        .solve(b)
        .map_err(|e| SpectraError::EigensolverFailure(format!("solve failed: {e}")))
}

/// Singular values, descending.
pub fn singular_values(a: &CMat) -> Result<Vec<f64>> {
    let (_, s, _) = contiguous(a)
        .svd(false, false)
        .map_err(|e| SpectraError::EigensolverFailure(format!("svd failed: {e}")))?;
    Ok(s.to_vec())
}

/// Reciprocal condition number sigma_min / sigma_max from singular values.
pub fn rcond(a: &CMat) -> Result<f64> {
    let s = singular_values(a)?;
    let max = s.first().copied().unwrap_or(0.0);
    let min = s.last().copied().unwrap_or(0.0);
    if max == 0.0 {
        Ok(0.0)
    } else {
        Ok(min / max)
    }
}

/// Rank with singular values below `tol * sigma_max` treated as zero.
pub fn rank_with_tol(a: &CMat, tol: f64) -> Result<usize> {
    let s = singular_values(a)?;
    let max = s.first().copied().unwrap_or(0.0);
    if max == 0.0 {
        return Ok(0);
    }
    Ok(s.iter().filter(|&&x| x > tol * max).count())
}

/// Orthonormal basis of the column span (columns of the returned matrix).
pub fn orthonormal_columns(a: &CMat) -> Result<CMat> {
    let (u, s, _) = contiguous(a)
        .svd(true, false)
        .map_err(|e| SpectraError::EigensolverFailure(format!("svd failed: {e}")))?;
    let u = u.expect("requested U");
    let max = s.iter().cloned().fold(0.0, f64::max);
    let k = s.iter().filter(|&&x| x > 1e-12 * max.max(1e-300)).count();
    Ok(u.slice(s![.., ..k]).to_owned())
}

/// Left singular vectors and singular values.
pub fn svd_u(a: &CMat) -> Result<(CMat, Vec<f64>)> {
    let (u, s, _) = contiguous(a)
        .svd(true, false)
        .map_err(|e| SpectraError::EigensolverFailure(format!("svd failed: {e}")))?;
    Ok((u.expect("requested U"), s.to_vec()))
}

/// dim(span A  ∩  span B) counted as the rank deficiency of the stacked basis.
pub fn intersection_dim(a: &CMat, b: &CMat, tol: f64) -> Result<usize> {
    let ua = orthonormal_columns(a)?;
    let ub = orthonormal_columns(b)?;
    let ka = ua.ncols();
    let kb = ub.ncols();
    if ka == 0 || kb == 0 {
        return Ok(0);
    }
    let mut stacked = Array2::zeros((ua.nrows(), ka + kb));
    stacked.slice_mut(s![.., ..ka]).assign(&ua);
    stacked.slice_mut(s![.., ka..]).assign(&ub);
    let r = rank_with_tol(&stacked, tol)?;
    Ok(ka + kb - r)
}

/// Complex number carried as log-magnitude and unit phase, so powers and
/// products of determinant-sized quantities never overflow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogComplex {
    /// ln |x|; -inf encodes zero.
    pub ln_abs: f64,
    /// x / |x|, or 1 for zero.
    pub phase: C64,
}

impl LogComplex {
    pub fn zero() -> Self {
        LogComplex {
            ln_abs: f64::NEG_INFINITY,
            phase: ONE,
        }
    }

    pub fn one() -> Self {
        LogComplex {
            ln_abs: 0.0,
            phase: ONE,
        }
    }

    pub fn from_complex(x: C64) -> Self {
        let n = x.norm();
        if n == 0.0 {
            LogComplex::zero()
        } else {
            LogComplex {
                ln_abs: n.ln(),
                phase: x / n,
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.ln_abs == f64::NEG_INFINITY
    }

    /// The complex value; overflows to infinity outside the f64 range.
    pub fn value(&self) -> C64 {
        if self.is_zero() {
            ZERO
        } else {
            self.phase * self.ln_abs.exp()
        }
    }

    pub fn mul(&self, other: &LogComplex) -> LogComplex {
        if self.is_zero() || other.is_zero() {
            return LogComplex::zero();
        }
        let phase = self.phase * other.phase;
        let n = phase.norm();
        LogComplex {
            ln_abs: self.ln_abs + other.ln_abs,
            phase: if n > 0.0 { phase / n } else { ONE },
        }
    }

    pub fn div(&self, other: &LogComplex) -> LogComplex {
        self.mul(&LogComplex {
            ln_abs: -other.ln_abs,
            phase: other.phase.conj(),
        })
    }

    pub fn powi(&self, n: i64) -> LogComplex {
        if self.is_zero() {
            return if n == 0 {
                LogComplex::one()
            } else {
                LogComplex::zero()
            };
        }
        let arg = self.phase.arg() * n as f64;
        LogComplex {
            ln_abs: self.ln_abs * n as f64,
            phase: C64::from_polar(1.0, arg),
        }
    }

    pub fn scale_ln(&self, dln: f64) -> LogComplex {
        LogComplex {
            ln_abs: self.ln_abs + dln,
            phase: self.phase,
        }
    }

    pub fn neg(&self) -> LogComplex {
        LogComplex {
            ln_abs: self.ln_abs,
            phase: -self.phase,
        }
    }
}

/// Fixed-order compensated sum of log-polar terms. The common magnitude is
/// factored out so that cancellation happens on O(1) numbers.
pub fn logsum(terms: &[LogComplex]) -> LogComplex {
    let max_ln = terms
        .iter()
        .map(|t| t.ln_abs)
        .fold(f64::NEG_INFINITY, f64::max);
    if max_ln == f64::NEG_INFINITY {
        return LogComplex::zero();
    }
    let mut sum = KahanSum::new();
    for t in terms {
        if t.is_zero() {
            continue;
        }
        sum.add(t.phase * (t.ln_abs - max_ln).exp());
    }
    LogComplex::from_complex(sum.value()).scale_ln(max_ln)
}

/// Kahan compensated accumulator over complex terms.
#[derive(Debug, Clone, Copy)]
pub struct KahanSum {
    s: C64,
    comp: C64,
}

impl KahanSum {
    pub fn new() -> Self {
        KahanSum { s: ZERO, comp: ZERO }
    }

    pub fn add(&mut self, x: C64) {
        let y = x - self.comp;
        let t = self.s + y;
        self.comp = (t - self.s) - y;
        self.s = t;
    }

    pub fn value(&self) -> C64 {
        self.s
    }
}

impl Default for KahanSum {
    fn default() -> Self {
        Self::new()
    }
}

/// Determinant of a dense complex matrix in log-polar form (LU with pivoting).
pub fn det_log(a: &CMat) -> Result<LogComplex> {
    let (sign, ln) = contiguous(a)
        .sln_det()
        .map_err(|e| SpectraError::EigensolverFailure(format!("determinant failed: {e}")))?;
    if sign.norm() == 0.0 || ln == f64::NEG_INFINITY {
        return Ok(LogComplex::zero());
    }
    Ok(LogComplex {
        ln_abs: ln,
        phase: sign / sign.norm(),
    })
}

pub fn det(a: &CMat) -> Result<C64> {
    contiguous(a)
        .det()
        .map_err(|e| SpectraError::EigensolverFailure(format!("determinant failed: {e}")))
}

/// Determinant of a banded matrix with `kl` sub- and `ku` super-diagonals,
/// by banded LU with partial pivoting (fill-in widens the band to kl+ku).
/// The matrix is handed over dense; only the band is read.
pub fn banded_det_log(a: &CMat, kl: usize, ku: usize) -> LogComplex {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    if n == 0 {
        return LogComplex::one();
    }
    // band storage: row index within column, LAPACK-style with room for fill-in
    let width = kl + kl + ku + 1;
    let mut band = Array2::<C64>::zeros((width, n));
    for j in 0..n {
        let lo = j.saturating_sub(ku);
        let hi = (j + kl + 1).min(n);
        for i in lo..hi {
            band[[i + kl + ku - j, j]] = a[[i, j]];
        }
    }
    let mut res = LogComplex::one();
    let mut sign_flips = 0usize;
    for k in 0..n {
        // partial pivot among rows k..=k+kl of column k
        let reach = kl.min(n - 1 - k);
        let mut piv = 0usize;
        let mut piv_mag = band[[kl + ku, k]].norm();
        for r in 1..=reach {
            let m = band[[kl + ku + r, k]].norm();
            if m > piv_mag {
                piv_mag = m;
                piv = r;
            }
        }
        if piv_mag == 0.0 {
            return LogComplex::zero();
        }
        if piv != 0 {
            sign_flips += 1;
            // swap rows k and k+piv over columns k..min(n, k+kl+ku+1)
            let jmax = (k + kl + ku + 1).min(n);
            for j in k..jmax {
                let a_idx = k + kl + ku - j;
                let b_idx = k + piv + kl + ku - j;
                let tmp = band[[a_idx, j]];
                band[[a_idx, j]] = band[[b_idx, j]];
                band[[b_idx, j]] = tmp;
            }
        }
        let pivot = band[[kl + ku, k]];
        res = res.mul(&LogComplex::from_complex(pivot));
        let jmax = (k + kl + ku + 1).min(n);
        for r in 1..=reach {
            let factor = band[[kl + ku + r, k]] / pivot;
            if factor.norm() == 0.0 {
                continue;
            }
            for j in (k + 1)..jmax {
                let up = band[[k + kl + ku - j, j]];
                band[[k + r + kl + ku - j, j]] = band[[k + r + kl + ku - j, j]] - factor * up;
            }
            band[[kl + ku + r, k]] = factor;
        }
    }
    if sign_flips % 2 == 1 {
        res = res.neg();
    }
    res
}

/// Coefficients (ascending) of the polynomial `f` of degree at most `deg`,
/// recovered by sampling on a circle of radius `radius` and inverse DFT.
pub fn poly_coeffs_from_samples<F: Fn(C64) -> C64>(f: F, deg: usize, radius: f64) -> Vec<C64> {
    let m = deg + 1;
    let samples: Vec<C64> = (0..m)
        .map(|k| {
            let z = C64::from_polar(radius, 2.0 * std::f64::consts::PI * k as f64 / m as f64);
            f(z)
        })
        .collect();
    // c_j = (1/m) sum_k f(z_k) z_k^{-j}
    (0..m)
        .map(|j| {
            let mut acc = KahanSum::new();
            for (k, s) in samples.iter().enumerate() {
                let w = C64::from_polar(
                    radius.powi(-(j as i32)),
                    -2.0 * std::f64::consts::PI * (j * k % m) as f64 / m as f64,
                );
                acc.add(s * w);
            }
            acc.value() / m as f64
        })
        .collect()
}

/// Horner evaluation of an ascending-coefficient polynomial.
pub fn poly_eval(coeffs: &[C64], z: C64) -> C64 {
    let mut acc = ZERO;
    for &c in coeffs.iter().rev() {
        acc = acc * z + c;
    }
    acc
}

pub fn poly_derivative(coeffs: &[C64]) -> Vec<C64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, &c)| c * k as f64)
        .collect()
}

/// Drops trailing coefficients below `tol` times the largest magnitude.
pub fn poly_trim(coeffs: &[C64], tol: f64) -> Vec<C64> {
    let max = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return vec![];
    }
    let mut end = coeffs.len();
    while end > 0 && coeffs[end - 1].norm() <= tol * max {
        end -= 1;
    }
    coeffs[..end].to_vec()
}

/// Roots of a polynomial via companion-matrix eigenvalues, polished by a few
/// Newton steps. Trailing near-zero leading coefficients are trimmed first.
pub fn poly_roots(coeffs: &[C64]) -> Result<Vec<C64>> {
    let trimmed = poly_trim(coeffs, 1e-13);
    if trimmed.len() <= 1 {
        return Ok(vec![]);
    }
    let deg = trimmed.len() - 1;
    let lead = trimmed[deg];
    let mut comp = Array2::<C64>::zeros((deg, deg));
    for i in 1..deg {
        comp[[i, i - 1]] = ONE;
    }
    for i in 0..deg {
        comp[[i, deg - 1]] = -trimmed[i] / lead;
    }
    let roots = eigvals(&comp)?;
    let deriv = poly_derivative(&trimmed);
    let polished = roots
        .iter()
        .map(|&z0| {
            let mut z = z0;
            for _ in 0..8 {
                let p = poly_eval(&trimmed, z);
                let dp = poly_eval(&deriv, z);
                if dp.norm() == 0.0 {
                    break;
                }
                let step = p / dp;
                z -= step;
                if step.norm() <= 1e-15 * (1.0 + z.norm()) {
                    break;
                }
            }
            z
        })
        .collect();
    Ok(polished)
}

/// Greedy matching distance between two complex multisets: the largest
/// pairing distance after repeatedly matching nearest remaining pairs.
pub fn multiset_match_distance(a: &[C64], b: &[C64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut remaining: Vec<C64> = b.to_vec();
    let mut worst: f64 = 0.0;
    for &x in a {
        let (idx, d) = remaining
            .iter()
            .enumerate()
            .map(|(i, &y)| (i, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .expect("nonempty");
        worst = worst.max(d);
        remaining.swap_remove(idx);
    }
    worst
}
