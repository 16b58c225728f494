//! Spectral outliers: zeros of q_{I0} off the equal-modulus set, located by
//! argument-principle counting over grid cells and Newton refinement, with
//! boundary-side classification from the half-line kernel dimensions.

use rayon::prelude::*;
use serde::Serialize;

use crate::linalg::C64;
use crate::model::BlockSymbol;
use crate::spectra::sets::LambdaCloud;
use crate::spectra::winding::halfline_kernel_dims;
use crate::transfer::transfer_eigendata;
use crate::widom::q_of_prefix;
use crate::Rect;

/// Cells are this multiple of the scan resolution wide.
pub const CELL_FACTOR: f64 = 4.0;
/// Maximum cell subdivision depth near the equal-modulus set.
pub const MAX_SUBDIVISION: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
    Both,
}

#[derive(Debug, Clone)]
pub struct GammaPoint {
    pub energy: C64,
    /// Argument-principle winding of the enclosing cell.
    pub multiplicity: usize,
    pub side: Side,
    /// |q_{I0}| at the refined zero.
    pub q_residual: f64,
    /// (right, left) half-line kernel dimensions at the separating radius.
    pub kernel_dims: (usize, usize),
}

#[derive(Debug, Clone, Default)]
pub struct GammaSearch {
    pub points: Vec<GammaPoint>,
    pub warnings: Vec<String>,
}

/// Scans the region for zeros of q_{I0} outside the masked equal-modulus
/// cloud. Cells touching the cloud are subdivided and, when still blocked at
/// full depth, skipped with a warning.
pub fn gamma_find(h: &BlockSymbol, region: &Rect, cloud: &LambdaCloud) -> GammaSearch {
    let res = cloud.resolution;
    let cell = CELL_FACTOR * res;
    let mut obstacles: Vec<C64> = cloud.points.iter().map(|p| p.energy).collect();
    obstacles.extend(cloud.f_points.iter().map(|f| f.energy));
    let grid = ObstacleGrid::build(&obstacles, res);

    // anchor cells off any symmetric alignment so zeros avoid cell edges
    let offset = cell * (std::f64::consts::SQRT_2 - 1.0) / 2.0;
    let nx = (region.width() / cell).ceil() as usize;
    let ny = (region.height() / cell).ceil() as usize;

    let cells: Vec<Rect> = (0..nx * ny)
        .map(|idx| {
            let i = idx % nx;
            let j = idx / nx;
            let re0 = region.re_min + offset + i as f64 * cell;
            let im0 = region.im_min + offset + j as f64 * cell;
            Rect {
                re_min: re0,
                re_max: re0 + cell,
                im_min: im0,
                im_max: im0 + cell,
            }
        })
        .collect();

    let results: Vec<(Vec<GammaPoint>, Vec<String>)> = cells
        .par_iter()
        .map(|rect| {
            let mut pts = Vec::new();
            let mut warns = Vec::new();
            process_cell(h, rect, &grid, res, 0, &mut pts, &mut warns);
            (pts, warns)
        })
        .collect();

    let mut points: Vec<GammaPoint> = Vec::new();
    let mut warnings: Vec<String> = Vec::new();
    for (pts, warns) in results {
        points.extend(pts);
        warnings.extend(warns);
    }
    // dedupe refinements that converged to the same zero from adjacent cells
    points.sort_by(|a, b| {
        (a.energy.re, a.energy.im)
            .partial_cmp(&(b.energy.re, b.energy.im))
            .unwrap()
    });
    let mut unique: Vec<GammaPoint> = Vec::new();
    for p in points {
        if let Some(prev) = unique
            .iter_mut()
            .find(|q| (q.energy - p.energy).norm() <= res * 0.5)
        {
            prev.multiplicity = prev.multiplicity.max(p.multiplicity);
        } else {
            unique.push(p);
        }
    }
    warnings.sort();
    warnings.dedup();
    GammaSearch {
        points: unique,
        warnings,
    }
}

struct ObstacleGrid {
    cells: std::collections::HashMap<(i64, i64), Vec<C64>>,
    step: f64,
}

impl ObstacleGrid {
    fn build(points: &[C64], step: f64) -> Self {
        let mut cells: std::collections::HashMap<(i64, i64), Vec<C64>> = Default::default();
        for &p in points {
            let key = ((p.re / step).floor() as i64, (p.im / step).floor() as i64);
            cells.entry(key).or_default().push(p);
        }
        ObstacleGrid { cells, step }
    }

    /// Distance from the rectangle (as a set) to the nearest obstacle.
    fn clearance(&self, rect: &Rect) -> f64 {
        let pad = 2.0 * self.step;
        let lo_i = ((rect.re_min - pad) / self.step).floor() as i64;
        let hi_i = ((rect.re_max + pad) / self.step).floor() as i64;
        let lo_j = ((rect.im_min - pad) / self.step).floor() as i64;
        let hi_j = ((rect.im_max + pad) / self.step).floor() as i64;
        let mut best = f64::INFINITY;
        for i in lo_i..=hi_i {
            for j in lo_j..=hi_j {
                if let Some(pts) = self.cells.get(&(i, j)) {
                    for p in pts {
                        let dre = (rect.re_min - p.re).max(p.re - rect.re_max).max(0.0);
                        let dim = (rect.im_min - p.im).max(p.im - rect.im_max).max(0.0);
                        best = best.min((dre * dre + dim * dim).sqrt());
                    }
                }
            }
        }
        best
    }
}

fn process_cell(
    h: &BlockSymbol,
    rect: &Rect,
    grid: &ObstacleGrid,
    res: f64,
    depth: usize,
    points: &mut Vec<GammaPoint>,
    warnings: &mut Vec<String>,
) {
    if grid.clearance(rect) <= res {
        if depth < MAX_SUBDIVISION {
            for sub in subdivide(rect) {
                process_cell(h, &sub, grid, res, depth + 1, points, warnings);
            }
        } else {
            warnings.push(format!(
                "cell [{:.4},{:.4}]x[{:.4},{:.4}] touches the equal-modulus set; skipped",
                rect.re_min, rect.re_max, rect.im_min, rect.im_max
            ));
        }
        return;
    }
    match boundary_winding(h, rect) {
        BoundaryWinding::Clean(0) => {}
        BoundaryWinding::Clean(w) => {
            let mult = w.unsigned_abs() as usize;
            match refine_zero(h, rect, mult) {
                Some((energy, q_residual)) => {
                    let (side, kernel_dims) = classify_side(h, energy);
                    points.push(GammaPoint {
                        energy,
                        multiplicity: mult,
                        side,
                        q_residual,
                        kernel_dims,
                    });
                }
                None => {
                    if depth < MAX_SUBDIVISION {
                        for sub in subdivide(rect) {
                            process_cell(h, &sub, grid, res, depth + 1, points, warnings);
                        }
                    } else {
                        warnings.push(format!(
                            "refinement did not converge in cell [{:.4},{:.4}]x[{:.4},{:.4}]",
                            rect.re_min, rect.re_max, rect.im_min, rect.im_max
                        ));
                    }
                }
            }
        }
        BoundaryWinding::ZeroOnBoundary => {
            if depth < MAX_SUBDIVISION {
                for sub in subdivide(rect) {
                    process_cell(h, &sub, grid, res, depth + 1, points, warnings);
                }
            } else {
                warnings.push(format!(
                    "q vanishes on the boundary of cell [{:.4},{:.4}]x[{:.4},{:.4}]; skipped",
                    rect.re_min, rect.re_max, rect.im_min, rect.im_max
                ));
            }
        }
        BoundaryWinding::NotHolomorphic => {
            warnings.push(format!(
                "argument principle unreliable in cell [{:.4},{:.4}]x[{:.4},{:.4}]; skipped",
                rect.re_min, rect.re_max, rect.im_min, rect.im_max
            ));
        }
    }
}

fn subdivide(rect: &Rect) -> [Rect; 4] {
    let rm = 0.5 * (rect.re_min + rect.re_max);
    let im = 0.5 * (rect.im_min + rect.im_max);
    [
        Rect { re_min: rect.re_min, re_max: rm, im_min: rect.im_min, im_max: im },
        Rect { re_min: rm, re_max: rect.re_max, im_min: rect.im_min, im_max: im },
        Rect { re_min: rect.re_min, re_max: rm, im_min: im, im_max: rect.im_max },
        Rect { re_min: rm, re_max: rect.re_max, im_min: im, im_max: rect.im_max },
    ]
}

enum BoundaryWinding {
    Clean(i64),
    ZeroOnBoundary,
    NotHolomorphic,
}

/// Winding of q_{I0} along the cell boundary by phase unwrapping, with
/// sample doubling until the increments are trustworthy.
fn boundary_winding(h: &BlockSymbol, rect: &Rect) -> BoundaryWinding {
    let mut per_edge = 8usize;
    loop {
        let samples = boundary_samples(rect, per_edge);
        let values: Vec<C64> = match samples
            .iter()
            .map(|&e| q_of_prefix(h, e))
            .collect::<crate::error::Result<Vec<C64>>>()
        {
            Ok(v) => v,
            Err(_) => return BoundaryWinding::NotHolomorphic,
        };
        let scale = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return BoundaryWinding::ZeroOnBoundary;
        }
        if values.iter().any(|v| v.norm() < 1e-9 * scale) {
            return BoundaryWinding::ZeroOnBoundary;
        }
        let n = values.len();
        let mut total = 0.0f64;
        let mut safe = true;
        for k in 0..n {
            let d = (values[(k + 1) % n] / values[k]).arg();
            if d.abs() > std::f64::consts::FRAC_PI_2 {
                safe = false;
                break;
            }
            total += d;
        }
        if safe {
            let w = total / (2.0 * std::f64::consts::PI);
            let rounded = w.round();
            if (w - rounded).abs() < 0.1 {
                return BoundaryWinding::Clean(rounded as i64);
            }
        }
        if per_edge >= 256 {
            return BoundaryWinding::NotHolomorphic;
        }
        per_edge *= 2;
    }
}

fn boundary_samples(rect: &Rect, per_edge: usize) -> Vec<C64> {
    let mut out = Vec::with_capacity(4 * per_edge);
    for k in 0..per_edge {
        let t = k as f64 / per_edge as f64;
        out.push(C64::new(rect.re_min + t * rect.width(), rect.im_min));
    }
    for k in 0..per_edge {
        let t = k as f64 / per_edge as f64;
        out.push(C64::new(rect.re_max, rect.im_min + t * rect.height()));
    }
    for k in 0..per_edge {
        let t = k as f64 / per_edge as f64;
        out.push(C64::new(rect.re_max - t * rect.width(), rect.im_max));
    }
    for k in 0..per_edge {
        let t = k as f64 / per_edge as f64;
        out.push(C64::new(rect.re_min, rect.im_max - t * rect.height()));
    }
    out
}

/// Newton iteration (multiplicity-weighted) from the cell center, with a
/// numerically differentiated q_{I0}.
fn refine_zero(h: &BlockSymbol, rect: &Rect, multiplicity: usize) -> Option<(C64, f64)> {
    let mut e = C64::new(
        0.5 * (rect.re_min + rect.re_max),
        0.5 * (rect.im_min + rect.im_max),
    );
    let step = 1e-3 * rect.width();
    let boundary_scale: f64 = {
        let vals: Vec<f64> = boundary_samples(rect, 8)
            .iter()
            .filter_map(|&z| q_of_prefix(h, z).ok().map(|q| q.norm()))
            .collect();
        if vals.is_empty() {
            return None;
        }
        let mut sorted = vals.clone();
        sorted.sort_by(f64::total_cmp);
        sorted[sorted.len() / 2]
    };
    let target = 1e-10 * (1.0 + boundary_scale);
    let reach = rect.padded(rect.width());
    for _ in 0..60 {
        let q = q_of_prefix(h, e).ok()?;
        if q.norm() <= target {
            return Some((e, q.norm()));
        }
        let qp = q_of_prefix(h, e + C64::new(step, 0.0)).ok()?;
        let qm = q_of_prefix(h, e - C64::new(step, 0.0)).ok()?;
        let dq = (qp - qm) / (2.0 * step);
        if dq.norm() == 0.0 {
            return None;
        }
        e -= (multiplicity as f64) * q / dq;
        if !reach.contains(e) {
            return None;
        }
    }
    let q = q_of_prefix(h, e).ok()?;
    if q.norm() <= target * 10.0 {
        Some((e, q.norm()))
    } else {
        None
    }
}

fn classify_side(h: &BlockSymbol, e: C64) -> (Side, (usize, usize)) {
    let dims = transfer_eigendata(h, e)
        .ok()
        .map(|d| d.separating_radius())
        .and_then(|s| halfline_kernel_dims(h, e, s).ok())
        .unwrap_or((0, 0));
    let side = match dims {
        (r, l) if r > 0 && l > 0 => Side::Both,
        (r, _) if r > 0 => Side::Right,
        (_, l) if l > 0 => Side::Left,
        _ => Side::Both,
    };
    (side, dims)
}
