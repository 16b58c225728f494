//! Numerical screening of the standing hypotheses: coefficient
//! invertibility, finiteness of the degeneracy set, strict modulus
//! separation along the equal-modulus arcs, and non-vanishing of the
//! prefix minors near them.

use serde::Serialize;

use crate::error::SpectraError;
use crate::linalg::{eigvals, C64};
use crate::model::{BlockSymbol, INVERTIBILITY_RCOND};
use crate::spectra::sets::{lambda_interior_detected, lambda_scan, LambdaCloud, LAMBDA_RAW_TOL};
use crate::transfer::{discriminant_roots, transfer_eigendata};
use crate::widom::q_of_prefix;
use crate::Rect;

/// Strict-separation margin for the flanking moduli along the arcs.
const SEPARATION_MARGIN: f64 = 1e-3;
/// |q| below this is treated as an exact zero of the prefix minor.
const Q_ZERO_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Serialize)]
pub struct HypothesisReport {
    /// Invertibility of the off-diagonal coefficients.
    pub a_pass: bool,
    pub rcond_r: f64,
    pub rcond_t: f64,
    /// Degeneracy set finite (discriminant not identically zero).
    pub b_pass: bool,
    /// Number of degeneracy points found in the window, when computable.
    pub f_count: Option<usize>,
    /// Strict modulus separation at sampled arc points, no 2D interior.
    pub c_pass: bool,
    pub c_fraction: f64,
    pub c_samples: usize,
    pub interior_detected: bool,
    /// Prefix minors q_{I0}, q_{I1} not locally zero near the arcs.
    pub d_pass: bool,
    pub d_samples: usize,
    pub d_locally_zero_i0: usize,
    pub d_locally_zero_i1: usize,
    pub q_i0_median: f64,
    pub q_i1_median: f64,
    /// Sufficient empty-interior condition: the moduli of the eigenvalues of
    /// T are pairwise distinct, and likewise for R.
    pub distinct_coefficient_moduli: bool,
}

pub fn hypothesis_report(h: &BlockSymbol, window: &Rect) -> HypothesisReport {
    let (rcond_r, rcond_t) = h.coefficient_rconds();
    let a_pass = rcond_r >= INVERTIBILITY_RCOND && rcond_t >= INVERTIBILITY_RCOND;

    let (b_pass, f_count) = match discriminant_roots(h, window) {
        Ok(points) => (true, Some(points.len())),
        Err(SpectraError::IdenticallyZeroDiscriminant) => (false, None),
        Err(_) => (false, None),
    };

    let resolution = window.width().max(window.height()) / 240.0;
    let cloud = lambda_scan(h, window, resolution, LAMBDA_RAW_TOL);
    let interior_detected = lambda_interior_detected(&cloud);

    let (c_fraction, c_samples) = separation_fraction(h, &cloud);
    let c_pass = !interior_detected && (c_samples == 0 || c_fraction >= 0.9);

    let d = prefix_minor_screen(h, &cloud);
    let d_pass = d.locally_zero_i0 == 0 && d.locally_zero_i1 == 0;

    HypothesisReport {
        a_pass,
        rcond_r,
        rcond_t,
        b_pass,
        f_count,
        c_pass,
        c_fraction,
        c_samples,
        interior_detected,
        d_pass,
        d_samples: d.samples,
        d_locally_zero_i0: d.locally_zero_i0,
        d_locally_zero_i1: d.locally_zero_i1,
        q_i0_median: d.q_i0_median,
        q_i1_median: d.q_i1_median,
        distinct_coefficient_moduli: distinct_moduli(h),
    }
}

/// Fraction of sampled refined arc points with
/// |z_{L-1}| < |z_L| = |z_{L+1}| < |z_{L+2}|, strict up to the margin.
fn separation_fraction(h: &BlockSymbol, cloud: &LambdaCloud) -> (f64, usize) {
    let l = h.block_size();
    let samples: Vec<C64> = stride_sample(&cloud.points, 200)
        .iter()
        .map(|p| p.energy)
        .collect();
    if samples.is_empty() {
        return (0.0, 0);
    }
    let mut good = 0usize;
    for &e in &samples {
        let Ok(data) = transfer_eigendata(h, e) else {
            continue;
        };
        // sorted moduli: 0-based positions L-2, L-1, L, L+1 flank the middle
        let m: Vec<f64> = data.eigenvalues.iter().map(|z| z.norm()).collect();
        let middle_equal = data.middle_gap <= 10.0 * cloud.tol;
        let below_ok = l < 2 || (m[l - 1] - m[l - 2]) > SEPARATION_MARGIN * m[l - 1];
        let above_ok = l < 2 || (m[l + 1] - m[l]) > SEPARATION_MARGIN * m[l + 1];
        if middle_equal && below_ok && above_ok {
            good += 1;
        }
    }
    (good as f64 / samples.len() as f64, samples.len())
}

struct MinorScreen {
    samples: usize,
    locally_zero_i0: usize,
    locally_zero_i1: usize,
    q_i0_median: f64,
    q_i1_median: f64,
}

/// Evaluates |q_{I0}| and |q_{I1}| at four perturbed copies of sampled cloud
/// points; a sample where all four vanish marks the minor locally zero.
fn prefix_minor_screen(h: &BlockSymbol, cloud: &LambdaCloud) -> MinorScreen {
    let samples = stride_sample(&cloud.points, 24);
    let delta = 2.0 * cloud.resolution;
    let offsets = [
        C64::new(delta, 0.0),
        C64::new(-delta, 0.0),
        C64::new(0.0, delta),
        C64::new(0.0, -delta),
    ];
    let mut locally_zero_i0 = 0usize;
    let mut locally_zero_i1 = 0usize;
    let mut all_i0: Vec<f64> = Vec::new();
    let mut all_i1: Vec<f64> = Vec::new();
    for p in &samples {
        let mut q0s = Vec::with_capacity(4);
        let mut q1s = Vec::with_capacity(4);
        for off in offsets {
            let e = p.energy + off;
            if let Ok(q) = q_of_prefix(h, e) {
                q0s.push(q.norm());
            }
            if let Ok(q) = q_of_second_set(h, e) {
                q1s.push(q.norm());
            }
        }
        if !q0s.is_empty() && q0s.iter().all(|&v| v < Q_ZERO_TOL) {
            locally_zero_i0 += 1;
        }
        if !q1s.is_empty() && q1s.iter().all(|&v| v < Q_ZERO_TOL) {
            locally_zero_i1 += 1;
        }
        all_i0.extend(q0s);
        all_i1.extend(q1s);
    }
    MinorScreen {
        samples: samples.len(),
        locally_zero_i0,
        locally_zero_i1,
        q_i0_median: median(&mut all_i0),
        q_i1_median: median(&mut all_i1),
    }
}

/// q for the swapped set I1 = {1, .., L-1, L+1}.
fn q_of_second_set(h: &BlockSymbol, e: C64) -> crate::error::Result<C64> {
    let l = h.block_size();
    let indices: Vec<usize> = (0..l - 1).chain(std::iter::once(l)).collect();
    let data = transfer_eigendata(h, e)?;
    let m_inv = crate::linalg::inverse(&data.basis)?;
    let mut indicator = ndarray::Array2::from_elem((2 * l, 2 * l), crate::linalg::ZERO);
    for &i in &indices {
        indicator[[i, i]] = crate::linalg::ONE;
    }
    let p = data.basis.dot(&indicator).dot(&m_inv);
    crate::linalg::det(&p.slice(ndarray::s![l.., ..l]).to_owned())
}

fn stride_sample<T: Clone>(items: &[T], cap: usize) -> Vec<T> {
    if items.len() <= cap {
        return items.to_vec();
    }
    let stride = items.len() as f64 / cap as f64;
    (0..cap)
        .map(|k| items[(k as f64 * stride) as usize].clone())
        .collect()
}

fn median(values: &mut Vec<f64>) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_by(f64::total_cmp);
    values[values.len() / 2]
}

fn distinct_moduli(h: &BlockSymbol) -> bool {
    for m in [h.r(), h.t()] {
        let Ok(vals) = eigvals(m) else {
            return false;
        };
        let mut moduli: Vec<f64> = vals.iter().map(|z| z.norm()).collect();
        moduli.sort_by(f64::total_cmp);
        for w in moduli.windows(2) {
            if (w[1] - w[0]).abs() <= 1e-9 * w[1].max(w[0]) {
                return false;
            }
        }
    }
    true
}
