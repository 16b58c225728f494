//! Winding numbers of det(H(sz) - E) by eigenvalue counting and by the
//! discretized log-derivative contour integral, and the kernel dimensions of
//! the half-line restrictions through subspace intersections.

use ndarray::prelude::*;

use crate::error::{Result, SpectraError};
use crate::linalg::{det, intersection_dim, C64, CMat, ZERO};
use crate::model::{BlockSymbol, SymbolVariant};
use crate::projections::{CONTOUR_SEPARATION, KERNEL_RANK_TOL};
use crate::transfer::transfer_eigendata;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindingMethod {
    /// -L plus the number of transfer eigenvalues inside the circle.
    Count,
    /// Discretized contour integral of the log-derivative, phase-unwrapped.
    Integral,
}

/// Winding number of z -> det(H(sz) - E) on the unit circle.
pub fn winding(h: &BlockSymbol, e: C64, s: f64, method: WindingMethod) -> Result<i64> {
    match method {
        WindingMethod::Count => winding_count(h, e, s),
        WindingMethod::Integral => winding_integral(h, e, s).map(|(w, _)| w),
    }
}

pub fn winding_count(h: &BlockSymbol, e: C64, s: f64) -> Result<i64> {
    if !(s > 0.0) {
        return Err(SpectraError::NonPositiveScale(s));
    }
    let data = transfer_eigendata(h, e)?;
    for z in &data.eigenvalues {
        if (z.norm() - s).abs() < CONTOUR_SEPARATION * s {
            return Err(SpectraError::EigenvalueOnCircle {
                radius: s,
                modulus: z.norm(),
            });
        }
    }
    let l = h.block_size() as i64;
    let inside = data.eigenvalues.iter().filter(|z| z.norm() < s).count() as i64;
    Ok(inside - l)
}

/// The integral method: accumulated argument of det(H(s e^{i theta}) - E)
/// over the circle, with node doubling until the phase increments are safely
/// below pi, returning the integer and its rounding defect.
pub fn winding_integral(h: &BlockSymbol, e: C64, s: f64) -> Result<(i64, f64)> {
    if !(s > 0.0) {
        return Err(SpectraError::NonPositiveScale(s));
    }
    let l = h.block_size();
    let det_at = |theta: f64| -> Result<C64> {
        let z = C64::from_polar(s, theta);
        let mut sym = h.at(z, SymbolVariant::Plain)?;
        for i in 0..l {
            sym[[i, i]] -= e;
        }
        det(&sym)
    };
    let mut m = 256usize;
    loop {
        let values: Result<Vec<C64>> = (0..m)
            .map(|k| det_at(2.0 * std::f64::consts::PI * k as f64 / m as f64))
            .collect();
        let values = values?;
        let floor = values.iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min);
        let scale = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if floor <= 1e-14 * scale {
            return Err(SpectraError::EigenvalueOnCircle {
                radius: s,
                modulus: s,
            });
        }
        let mut total = 0.0f64;
        let mut safe = true;
        for k in 0..m {
            let ratio = values[(k + 1) % m] / values[k];
            let d = ratio.arg();
            if d.abs() > std::f64::consts::FRAC_PI_2 {
                safe = false;
                break;
            }
            total += d;
        }
        if safe {
            let w = total / (2.0 * std::f64::consts::PI);
            let rounded = w.round();
            let defect = (w - rounded).abs();
            if defect < 0.1 {
                return Ok((rounded as i64, defect));
            }
        }
        if m >= 1 << 17 {
            return Err(SpectraError::QuadratureNotConverged {
                nodes: m,
                change: f64::NAN,
            });
        }
        m *= 2;
    }
}

/// Geometric multiplicities of E as an eigenvalue of the scaled right and
/// left half-line restrictions, via the dimension of the intersections of
/// the contracting eigenspaces with the Dirichlet boundary plane.
pub fn halfline_kernel_dims(h: &BlockSymbol, e: C64, s: f64) -> Result<(usize, usize)> {
    if !(s > 0.0) {
        return Err(SpectraError::NonPositiveScale(s));
    }
    let l = h.block_size();
    let data = transfer_eigendata(h, e)?;
    for z in &data.eigenvalues {
        if (z.norm() - s).abs() < CONTOUR_SEPARATION * s {
            return Err(SpectraError::EigenvalueOnCircle {
                radius: s,
                modulus: z.norm(),
            });
        }
    }
    let dirichlet = {
        let mut d = Array2::from_elem((2 * l, l), ZERO);
        for i in 0..l {
            d[[i, i]] = C64::new(1.0, 0.0);
        }
        d
    };
    let span_below = |data: &crate::transfer::TransferEigenData, radius: f64| -> CMat {
        let cols: Vec<usize> = data
            .eigenvalues
            .iter()
            .enumerate()
            .filter(|(_, z)| z.norm() < radius)
            .map(|(i, _)| i)
            .collect();
        let mut m = Array2::from_elem((2 * l, cols.len()), ZERO);
        for (j, &i) in cols.iter().enumerate() {
            m.column_mut(j).assign(&data.basis.column(i));
        }
        m
    };
    let right_basis = span_below(&data, s);
    let dim_right = if right_basis.ncols() == 0 {
        0
    } else {
        intersection_dim(&right_basis, &dirichlet, KERNEL_RANK_TOL)?
    };
    let tilde_data = transfer_eigendata(&h.tilde(), e)?;
    let left_basis = span_below(&tilde_data, 1.0 / s);
    let dim_left = if left_basis.ncols() == 0 {
        0
    } else {
        intersection_dim(&left_basis, &dirichlet, KERNEL_RANK_TOL)?
    };
    Ok((dim_right, dim_left))
}
