//! Winding invariants of the two off-diagonal legs of a chiral symbol and
//! the scaling-parameter search certifying a zero-energy outlier.

use serde::Serialize;

use crate::error::{Result, SpectraError};
use crate::linalg::{poly_roots, C64};
use crate::model::BlockSymbol;
use crate::transfer::{matrix_quadratic_det_coeffs, transfer_eigendata};

/// Relative clearance required between the scaling parameter and any root
/// modulus.
const BREAKPOINT_TOL: f64 = 1e-9;
/// The middle gap at E = 0 below which 0 counts as on the equal-modulus set.
const ZERO_GAP_TOL: f64 = 1e-6;

/// Winding numbers (W_+, W_-) of z -> det((sz)^{-1} R_pm + V_pm + (sz) T_pm)
/// counted from the roots of det(z H_pm(z)) inside the circle of radius s.
pub fn chiral_windings(h: &BlockSymbol, s: f64) -> Result<(i64, i64)> {
    if !(s > 0.0) {
        return Err(SpectraError::NonPositiveScale(s));
    }
    let pair = h.chiral_split()?;
    let half = pair.plus.block_size() as i64;
    let mut windings = [0i64; 2];
    for (slot, leg) in [&pair.plus, &pair.minus].iter().enumerate() {
        let roots = leg_roots(leg)?;
        for z in &roots {
            if (z.norm() - s).abs() <= BREAKPOINT_TOL * s {
                return Err(SpectraError::BreakpointHit {
                    scale: s,
                    modulus: z.norm(),
                });
            }
        }
        let inside = roots.iter().filter(|z| z.norm() < s).count() as i64;
        windings[slot] = inside - half;
    }
    Ok((windings[0], windings[1]))
}

fn leg_roots(leg: &BlockSymbol) -> Result<Vec<C64>> {
    let coeffs = matrix_quadratic_det_coeffs(leg.r(), leg.v(), leg.t());
    poly_roots(&coeffs)
}

/// Sorted moduli of the roots of det(z H_+(z)) and det(z H_-(z)); windings
/// are constant between consecutive values.
pub fn winding_breakpoints(h: &BlockSymbol) -> Result<Vec<f64>> {
    let pair = h.chiral_split()?;
    let mut moduli: Vec<f64> = leg_roots(&pair.plus)?
        .iter()
        .chain(leg_roots(&pair.minus)?.iter())
        .map(|z| z.norm())
        .collect();
    moduli.sort_by(f64::total_cmp);
    moduli.dedup_by(|a, b| (*a - *b).abs() <= BREAKPOINT_TOL * a.max(*b));
    Ok(moduli)
}

/// A successful zero-outlier certificate: opposite nonzero leg windings at
/// the found scaling parameter.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ZeroModeCertificate {
    pub scale: f64,
    pub w_plus: i64,
    pub w_minus: i64,
    /// Breakpoint interval the scale was drawn from.
    pub bracket: [f64; 2],
}

/// Scans the breakpoint intervals of the leg windings for a scale with
/// W_+(s) = -W_-(s) != 0. Returns None when no interval qualifies.
pub fn zero_mode_certificate(h: &BlockSymbol) -> Result<Option<ZeroModeCertificate>> {
    let zero = C64::new(0.0, 0.0);
    let gap = transfer_eigendata(h, zero)?.middle_gap;
    if gap < ZERO_GAP_TOL {
        return Err(SpectraError::ZeroOnLambda { gap });
    }
    let breaks = winding_breakpoints(h)?;
    let mut candidates: Vec<(f64, [f64; 2])> = Vec::new();
    if let Some(&first) = breaks.first() {
        candidates.push((first / 2.0, [0.0, first]));
    }
    for w in breaks.windows(2) {
        candidates.push(((w[0] * w[1]).sqrt(), [w[0], w[1]]));
    }
    if let Some(&last) = breaks.last() {
        candidates.push((last * 2.0, [last, f64::INFINITY]));
    }
    for (s, bracket) in candidates {
        let (w_plus, w_minus) = match chiral_windings(h, s) {
            Ok(w) => w,
            Err(SpectraError::BreakpointHit { .. }) => continue,
            Err(e) => return Err(e),
        };
        if w_plus == -w_minus && w_plus != 0 {
            return Ok(Some(ZeroModeCertificate {
                scale: s,
                w_plus,
                w_minus,
                bracket,
            }));
        }
    }
    Ok(None)
}
