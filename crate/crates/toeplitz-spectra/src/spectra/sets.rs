//! The periodic spectrum curve, the equal-modulus set Lambda located by grid
//! scan with golden-section sharpening, and the generalized Brillouin zone.

use rayon::prelude::*;

use crate::linalg::{eigvals, C64};
use crate::model::{BlockSymbol, SymbolVariant};
use crate::transfer::{discriminant_roots, transfer_eigendata, FPoint};
use crate::Rect;

/// Raw grid acceptance threshold for the relative middle gap.
pub const LAMBDA_RAW_TOL: f64 = 0.02;
/// Target gap after golden-section refinement.
pub const LAMBDA_REFINED_TOL: f64 = 1e-4;

/// One momentum fiber of the periodic spectrum.
#[derive(Debug, Clone)]
pub struct SigmaSample {
    pub k: f64,
    /// The L symbol eigenvalues, ordered by continuation from the previous
    /// fiber.
    pub fiber: Vec<C64>,
}

/// Symbol eigenvalues over a uniform K-grid of [-pi, pi); fibers are matched
/// to the previous one by nearest-neighbor continuation.
pub fn sigma_samples(h: &BlockSymbol, s: f64, k_count: usize) -> Vec<SigmaSample> {
    assert!(k_count >= 2, "need at least two momentum nodes");
    assert!(s > 0.0, "scaling must be positive");
    let mut out: Vec<SigmaSample> = Vec::with_capacity(k_count);
    for j in 0..k_count {
        let k = -std::f64::consts::PI + 2.0 * std::f64::consts::PI * j as f64 / k_count as f64;
        let z = C64::from_polar(s, k);
        let sym = h.at(z, SymbolVariant::Plain).expect("nonzero argument");
        let vals = eigvals(&sym).expect("symbol eigenvalues");
        let mut fiber: Vec<C64> = vals.to_vec();
        match out.last() {
            None => fiber.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap()),
            Some(prev) => {
                let mut matched = vec![C64::new(0.0, 0.0); fiber.len()];
                let mut used = vec![false; fiber.len()];
                for (slot, anchor) in prev.fiber.iter().enumerate() {
                    let (best, _) = fiber
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| !used[*i])
                        .map(|(i, z)| (i, (z - anchor).norm()))
                        .min_by(|a, b| a.1.total_cmp(&b.1))
                        .expect("fiber nonempty");
                    used[best] = true;
                    matched[slot] = fiber[best];
                }
                fiber = matched;
            }
        }
        out.push(SigmaSample { k, fiber });
    }
    out
}

/// A refined point of the equal-modulus set.
#[derive(Debug, Clone)]
pub struct LambdaPoint {
    pub energy: C64,
    pub middle_gap: f64,
    /// Grid point the refinement started from.
    pub raw_energy: C64,
    /// Nearest degeneracy point and its distance, when F was computable.
    pub nearest_f: Option<(C64, f64)>,
}

/// The scanned point cloud with its grid metadata.
#[derive(Debug, Clone)]
pub struct LambdaCloud {
    pub points: Vec<LambdaPoint>,
    pub f_points: Vec<FPoint>,
    pub window: Rect,
    pub resolution: f64,
    pub tol: f64,
    /// Raw marked grid points whose gap is at machine scale; a 2D-spread
    /// subset signals an equal-modulus region with interior.
    pub machine_zero_raw: Vec<C64>,
}

pub fn middle_gap_at(h: &BlockSymbol, e: C64) -> f64 {
    transfer_eigendata(h, e)
        .map(|d| d.middle_gap)
        .unwrap_or(f64::INFINITY)
}

/// Marks grid points with relative middle gap below `tol` and sharpens each
/// marked point by a golden-section line search along the steeper direction.
pub fn lambda_scan(h: &BlockSymbol, window: &Rect, resolution: f64, tol: f64) -> LambdaCloud {
    assert!(resolution > 0.0, "resolution must be positive");
    let nx = (window.width() / resolution).round() as usize + 1;
    let ny = (window.height() / resolution).round() as usize + 1;
    let gaps: Vec<f64> = (0..nx * ny)
        .into_par_iter()
        .map(|idx| {
            let i = idx % nx;
            let j = idx / nx;
            let e = C64::new(
                window.re_min + i as f64 * resolution,
                window.im_min + j as f64 * resolution,
            );
            middle_gap_at(h, e)
        })
        .collect();
    let gap_at = |i: i64, j: i64| -> f64 {
        if i < 0 || j < 0 || i >= nx as i64 || j >= ny as i64 {
            f64::INFINITY
        } else {
            gaps[j as usize * nx + i as usize]
        }
    };

    let f_points = discriminant_roots(h, &window.padded(2.0 * resolution)).unwrap_or_default();

    let marked: Vec<(usize, usize)> = (0..nx * ny)
        .filter(|&idx| gaps[idx] <= tol)
        .map(|idx| (idx % nx, idx / nx))
        .collect();

    let mut machine_zero_raw = Vec::new();
    for &(i, j) in &marked {
        if gaps[j * nx + i] <= 1e-9 {
            machine_zero_raw.push(C64::new(
                window.re_min + i as f64 * resolution,
                window.im_min + j as f64 * resolution,
            ));
        }
    }

    let points: Vec<LambdaPoint> = marked
        .par_iter()
        .map(|&(i, j)| {
            let e0 = C64::new(
                window.re_min + i as f64 * resolution,
                window.im_min + j as f64 * resolution,
            );
            let d_re = (gap_at(i as i64 + 1, j as i64) - gap_at(i as i64 - 1, j as i64)).abs();
            let d_im = (gap_at(i as i64, j as i64 + 1) - gap_at(i as i64, j as i64 - 1)).abs();
            let dir = if d_re >= d_im {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 1.0)
            };
            let (energy, middle_gap) = golden_section_gap(h, e0, dir, resolution);
            let nearest_f = f_points
                .iter()
                .map(|f| (f.energy, (f.energy - energy).norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1));
            LambdaPoint {
                energy,
                middle_gap,
                raw_energy: e0,
                nearest_f,
            }
        })
        .collect();

    LambdaCloud {
        points,
        f_points,
        window: *window,
        resolution,
        tol,
        machine_zero_raw,
    }
}

/// Golden-section minimization of the middle gap on [e0 - res*dir, e0 + res*dir].
fn golden_section_gap(h: &BlockSymbol, e0: C64, dir: C64, res: f64) -> (C64, f64) {
    const PHI: f64 = 0.618_033_988_749_894_9;
    let mut a = -res;
    let mut b = res;
    let f = |t: f64| middle_gap_at(h, e0 + dir * t);
    let mut x1 = b - PHI * (b - a);
    let mut x2 = a + PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..48 {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + PHI * (b - a);
            f2 = f(x2);
        }
        if f1.min(f2) <= 0.0 {
            break;
        }
    }
    let (t, g) = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    let g0 = middle_gap_at(h, e0);
    if g0 <= g {
        (e0, g0)
    } else {
        (e0 + dir * t, g)
    }
}

/// Interior evidence: machine-zero raw grid points spreading in both plane
/// directions. Line-shaped zero sets (hermitian bands on the real axis) do
/// not trigger this.
pub fn lambda_interior_detected(cloud: &LambdaCloud) -> bool {
    let pts = &cloud.machine_zero_raw;
    if pts.len() < 20 {
        return false;
    }
    let re_min = pts.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
    let re_max = pts.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    let im_min = pts.iter().map(|z| z.im).fold(f64::INFINITY, f64::min);
    let im_max = pts.iter().map(|z| z.im).fold(f64::NEG_INFINITY, f64::max);
    let spread = 3.0 * cloud.resolution;
    if re_max - re_min <= spread || im_max - im_min <= spread {
        return false;
    }
    // rule out a slanted line: distinct im values per re column
    let mut columns: std::collections::BTreeMap<i64, Vec<f64>> = Default::default();
    for z in pts {
        let col = (z.re / cloud.resolution).round() as i64;
        columns.entry(col).or_default().push(z.im);
    }
    let wide_columns = columns
        .values()
        .filter(|ims| {
            let lo = ims.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = ims.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            hi - lo > spread
        })
        .count();
    wide_columns >= 3
}

/// One energy of the equal-modulus set mapped to its middle transfer
/// eigenvalues.
#[derive(Debug, Clone)]
pub struct BrillouinPoint {
    pub energy: C64,
    pub lower: C64,
    pub upper: C64,
}

/// The generalized Brillouin zone: the two middle transfer eigenvalues over
/// the equal-modulus set. Hermitian input lands on the unit circle.
pub fn brillouin(h: &BlockSymbol, lambda: &[LambdaPoint]) -> Vec<BrillouinPoint> {
    assert!(!lambda.is_empty(), "need a nonempty lambda cloud");
    let l = h.block_size();
    lambda
        .par_iter()
        .filter_map(|p| {
            let data = transfer_eigendata(h, p.energy).ok()?;
            Some(BrillouinPoint {
                energy: p.energy,
                lower: data.eigenvalues[l - 1],
                upper: data.eigenvalues[l],
            })
        })
        .collect()
}

/// Point-cloud summary of all spectral sets of one operator.
#[derive(Debug, Clone)]
pub struct SpectralSets {
    pub sigma: Vec<SigmaSample>,
    pub lambda: LambdaCloud,
    pub gamma: super::outliers::GammaSearch,
}

impl SpectralSets {
    pub fn compute(h: &BlockSymbol, window: &Rect, resolution: f64) -> SpectralSets {
        let sigma = sigma_samples(h, 1.0, 512);
        let lambda = lambda_scan(h, window, resolution, LAMBDA_RAW_TOL);
        let gamma = super::outliers::gamma_find(h, window, &lambda);
        SpectralSets {
            sigma,
            lambda,
            gamma,
        }
    }
}

/// Largest distance from any point of `from` to the cloud `to`.
pub fn one_sided_distance(from: &[C64], to: &[C64]) -> f64 {
    from.iter()
        .map(|a| {
            to.iter()
                .map(|b| (a - b).norm())
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}
