//! Riesz projections of the transfer matrix and the moment matrices
//! Q^(j)_r(E), by eigendecomposition and by contour quadrature.

use ndarray::prelude::*;

use crate::error::{Result, SpectraError};
use crate::linalg::{inverse, solve, C64, CMat, CVec, ONE, ZERO};
use crate::model::{BlockSymbol, SymbolVariant};
use crate::transfer::{transfer_eigendata, transfer_matrix, TransferEigenData, TransferVariant};

/// Starting number of trapezoid nodes on a contour.
pub const QUAD_NODES_START: usize = 64;
/// Node-doubling cap.
pub const QUAD_NODES_MAX: usize = 4096;
/// Relative change between doublings accepted as converged.
pub const QUAD_REL_TOL: f64 = 1e-10;
/// An eigenvalue within this relative distance of the contour is "on" it.
pub const CONTOUR_SEPARATION: f64 = 1e-9;
/// Singular values below this multiple of the largest count as kernel.
pub const KERNEL_RANK_TOL: f64 = 1e-8;

/// How the spectral subset is selected.
#[derive(Debug, Clone, PartialEq)]
pub enum RieszSelector {
    /// All eigenvalues with |z| < r.
    Radius(f64),
    /// Eigenvalues at the given positions (0-based) of the modulus-sorted list.
    Index(Vec<usize>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RieszMethod {
    Eigen,
    Contour,
}

/// A Riesz projection of the transfer matrix.
#[derive(Debug, Clone)]
pub struct RieszData {
    pub energy: C64,
    pub selector: RieszSelector,
    pub projector: CMat,
    pub rank: usize,
    pub method: RieszMethod,
}

impl RieszData {
    /// The (2,1) block, which is the moment Q^(1) over the matching contour.
    pub fn q1_block(&self) -> CMat {
        let l = self.projector.nrows() / 2;
        self.projector.slice(s![l.., ..l]).to_owned()
    }

    /// The (1,1) block T Q^(0).
    pub fn upper_left(&self) -> CMat {
        let l = self.projector.nrows() / 2;
        self.projector.slice(s![..l, ..l]).to_owned()
    }

    /// The (2,2) block 1 - Q^(2) R (contour enclosing the origin).
    pub fn lower_right(&self) -> CMat {
        let l = self.projector.nrows() / 2;
        self.projector.slice(s![l.., l..]).to_owned()
    }
}

/// Riesz projection with the requested selector and method.
pub fn riesz_projection(
    h: &BlockSymbol,
    e: C64,
    selector: RieszSelector,
    method: RieszMethod,
) -> Result<RieszData> {
    let data = transfer_eigendata(h, e)?;
    match (&selector, method) {
        (RieszSelector::Radius(r), RieszMethod::Eigen) => {
            check_circle(&data, *r)?;
            let inside: Vec<usize> = data
                .eigenvalues
                .iter()
                .enumerate()
                .filter(|(_, z)| z.norm() < *r)
                .map(|(i, _)| i)
                .collect();
            let p = eigen_projection(&data, &inside)?;
            Ok(RieszData {
                energy: e,
                rank: inside.len(),
                selector,
                projector: p,
                method,
            })
        }
        (RieszSelector::Radius(r), RieszMethod::Contour) => {
            check_circle(&data, *r)?;
            let rank = data.eigenvalues.iter().filter(|z| z.norm() < *r).count();
            let t = transfer_matrix(h, e, TransferVariant::Plain)?;
            let p = contour_projection(&t, *r)?;
            Ok(RieszData {
                energy: e,
                selector,
                projector: p,
                rank,
                method,
            })
        }
        (RieszSelector::Index(indices), RieszMethod::Eigen) => {
            check_nondegenerate(&data)?;
            let p = eigen_projection(&data, indices)?;
            Ok(RieszData {
                energy: e,
                rank: indices.len(),
                selector,
                projector: p,
                method,
            })
        }
        (RieszSelector::Index(indices), RieszMethod::Contour) => {
            check_nondegenerate(&data)?;
            // only a modulus-separated prefix admits a circular contour
            let k = indices.len();
            let mut sorted = indices.clone();
            sorted.sort_unstable();
            let is_prefix = sorted.iter().enumerate().all(|(i, &v)| i == v);
            if !is_prefix || k == 0 || k == data.eigenvalues.len() {
                return Err(SpectraError::IndexSetNotRadial);
            }
            let lo = data.eigenvalues[k - 1].norm();
            let hi = data.eigenvalues[k].norm();
            if hi - lo <= CONTOUR_SEPARATION * hi {
                return Err(SpectraError::IndexSetNotRadial);
            }
            let r = (lo * hi).sqrt();
            let t = transfer_matrix(h, e, TransferVariant::Plain)?;
            let p = contour_projection(&t, r)?;
            Ok(RieszData {
                energy: e,
                selector,
                projector: p,
                rank: k,
                method,
            })
        }
    }
}

/// Eigen-method projection onto the span of the selected sorted eigenvectors.
pub fn riesz_by_index(h: &BlockSymbol, e: C64, indices: &[usize]) -> Result<RieszData> {
    riesz_projection(h, e, RieszSelector::Index(indices.to_vec()), RieszMethod::Eigen)
}

fn check_circle(data: &TransferEigenData, r: f64) -> Result<()> {
    if !(r > 0.0) {
        return Err(SpectraError::NonPositiveScale(r));
    }
    for z in &data.eigenvalues {
        if (z.norm() - r).abs() < CONTOUR_SEPARATION * r {
            return Err(SpectraError::EigenvalueOnContour {
                radius: r,
                modulus: z.norm(),
            });
        }
    }
    Ok(())
}

fn check_nondegenerate(data: &TransferEigenData) -> Result<()> {
    if data.degenerate {
        return Err(SpectraError::DegenerateEnergy {
            re: data.energy.re,
            im: data.energy.im,
            gap: data.min_pair_gap,
        });
    }
    Ok(())
}

fn eigen_projection(data: &TransferEigenData, indices: &[usize]) -> Result<CMat> {
    let n = data.eigenvalues.len();
    let mut indicator = Array2::from_elem((n, n), ZERO);
    for &i in indices {
        assert!(i < n, "index out of range");
        indicator[[i, i]] = ONE;
    }
    let m_inv = inverse(&data.basis)?;
    Ok(data.basis.dot(&indicator).dot(&m_inv))
}

/// Trapezoid quadrature of (z - T)^{-1} over |z| = r with node doubling.
fn contour_projection(t: &CMat, r: f64) -> Result<CMat> {
    let n = t.nrows();
    let eye = Array2::<C64>::eye(n);
    let eval = |m: usize| -> Result<CMat> {
        let mut acc = Array2::from_elem((n, n), ZERO);
        let mut comp = Array2::from_elem((n, n), ZERO);
        for k in 0..m {
            let z = C64::from_polar(r, 2.0 * std::f64::consts::PI * k as f64 / m as f64);
            let resolvent = inverse(&(&eye.mapv(|x| x * z) - t))?;
            // Kahan update, fixed node order
            let term = resolvent.mapv(|x| x * z / m as f64);
            for i in 0..n {
                for j in 0..n {
                    let y = term[[i, j]] - comp[[i, j]];
                    let s = acc[[i, j]] + y;
                    comp[[i, j]] = (s - acc[[i, j]]) - y;
                    acc[[i, j]] = s;
                }
            }
        }
        Ok(acc)
    };
    let mut m = QUAD_NODES_START;
    let mut prev = eval(m)?;
    while m < QUAD_NODES_MAX {
        m *= 2;
        let cur = eval(m)?;
        let change = crate::linalg::fro_norm(&(&cur - &prev));
        let scale = 1.0 + crate::linalg::fro_norm(&cur);
        if change < QUAD_REL_TOL * scale {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(SpectraError::QuadratureNotConverged {
        nodes: m,
        change: f64::NAN,
    })
}

/// Moment matrix Q^(j)_r(E), the contour integral of (H(z) - E)^{-1} dz /
/// (2 pi i z^j) over |z| = r, by trapezoid quadrature with node doubling.
pub fn q_moment(h: &BlockSymbol, e: C64, r: f64, j: i32) -> Result<CMat> {
    let data = transfer_eigendata(h, e)?;
    check_circle(&data, r)?;
    q_moment_unchecked(h, e, r, j)
}

pub(crate) fn q_moment_unchecked(h: &BlockSymbol, e: C64, r: f64, j: i32) -> Result<CMat> {
    let l = h.block_size();
    let eval = |m: usize| -> Result<CMat> {
        let mut acc = Array2::from_elem((l, l), ZERO);
        let mut comp = Array2::from_elem((l, l), ZERO);
        for k in 0..m {
            let z = C64::from_polar(r, 2.0 * std::f64::consts::PI * k as f64 / m as f64);
            let mut sym = h.at(z, SymbolVariant::Plain)?;
            for i in 0..l {
                sym[[i, i]] -= e;
            }
            let resolvent = inverse(&sym)?;
            let w = z.powi(1 - j) / m as f64;
            for a in 0..l {
                for b in 0..l {
                    let y = resolvent[[a, b]] * w - comp[[a, b]];
                    let s = acc[[a, b]] + y;
                    comp[[a, b]] = (s - acc[[a, b]]) - y;
                    acc[[a, b]] = s;
                }
            }
        }
        Ok(acc)
    };
    let mut m = QUAD_NODES_START;
    let mut prev = eval(m)?;
    while m < QUAD_NODES_MAX {
        m *= 2;
        let cur = eval(m)?;
        let change = crate::linalg::fro_norm(&(&cur - &prev));
        let scale = 1.0 + crate::linalg::fro_norm(&cur);
        if change < QUAD_REL_TOL * scale {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(SpectraError::QuadratureNotConverged {
        nodes: m,
        change: f64::NAN,
    })
}

/// Q^(j) moments read off a Riesz projection through the block identity
/// linking the projector to the symbol-resolvent integrals (contour enclosing
/// the origin alongside the selected eigenvalues).
pub fn q_from_projection(h: &BlockSymbol, riesz: &RieszData, j: i32) -> Result<CMat> {
    let l = h.block_size();
    match j {
        0 => Ok(inverse(h.t())?.dot(&riesz.upper_left())),
        1 => Ok(riesz.q1_block()),
        2 => {
            let eye = Array2::<C64>::eye(l);
            Ok((&eye - &riesz.lower_right()).dot(&inverse(h.r())?))
        }
        _ => unreachable!("only moments j = 0, 1, 2 arise"),
    }
}

/// Dimension of Ker Q^(1)_r(E) by the singular-value gap criterion. A
/// moment matrix that vanishes to quadrature accuracy has full kernel.
pub fn q1_kernel_dim(h: &BlockSymbol, e: C64, r: f64) -> Result<usize> {
    let q1 = q_moment(h, e, r, 1)?;
    let l = q1.nrows();
    let sv = crate::linalg::singular_values(&q1)?;
    let top = sv.first().copied().unwrap_or(0.0);
    if top <= 1e-10 {
        return Ok(l);
    }
    let rank = sv.iter().filter(|&&x| x > KERNEL_RANK_TOL * top).count();
    Ok(l - rank)
}

/// Quadrature convergence trace: Frobenius change after each node doubling,
/// used to assert the spectral accuracy of the trapezoid rule on circles.
pub fn q_moment_convergence_trace(
    h: &BlockSymbol,
    e: C64,
    r: f64,
    j: i32,
    doublings: usize,
) -> Result<Vec<f64>> {
    let l = h.block_size();
    let eval = |m: usize| -> Result<CMat> {
        let mut acc = Array2::from_elem((l, l), ZERO);
        for k in 0..m {
            let z = C64::from_polar(r, 2.0 * std::f64::consts::PI * k as f64 / m as f64);
            let mut sym = h.at(z, SymbolVariant::Plain)?;
            for i in 0..l {
                sym[[i, i]] -= e;
            }
            let resolvent = inverse(&sym)?;
            acc = acc + resolvent.mapv(|x| x * z.powi(1 - j) / m as f64);
        }
        Ok(acc)
    };
    let mut changes = Vec::new();
    let mut m = 8;
    let mut prev = eval(m)?;
    for _ in 0..doublings {
        m *= 2;
        let cur = eval(m)?;
        changes.push(crate::linalg::fro_norm(&(&cur - &prev)));
        prev = cur;
    }
    Ok(changes)
}

/// Solves (z - T^E) x = b for quadrature-style consumers.
#[allow(dead_code)]
pub(crate) fn resolvent_apply(t: &CMat, z: C64, b: &CVec) -> Result<CVec> {
    let n = t.nrows();
    let mut m = t.mapv(|x| -x);
    for i in 0..n {
        m[[i, i]] += z;
    }
    solve(&m, b)
}
