//! Transfer matrices, their eigendata and the degeneracy set F located as
//! roots of the resultant of the characteristic polynomial and its
//! z-derivative.

use ndarray::prelude::*;

use crate::error::{Result, SpectraError};
use crate::linalg::{
    c, eig, inverse, poly_coeffs_from_samples, poly_derivative, poly_eval, poly_roots, C64, CMat,
    KahanSum, ZERO,
};
use crate::model::BlockSymbol;
use crate::Rect;

/// Relative tolerance grouping eigenvalue moduli before the phase tie-break.
pub const MODULUS_TIE_TOL: f64 = 1e-12;

/// `min_pair_gap` below this multiple of the largest modulus raises the
/// `degenerate` flag.
pub const DEGENERACY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransferVariant {
    Plain,
    Tilde,
    Hat,
    Inverse,
}

/// The 2Lx2L transfer matrix at complex energy E.
pub fn transfer_matrix(h: &BlockSymbol, e: C64, variant: TransferVariant) -> Result<CMat> {
    let l = h.block_size();
    let e_minus_v = |v: &CMat| -> CMat {
        let mut m = v.mapv(|x| -x);
        for i in 0..l {
            m[[i, i]] += e;
        }
        m
    };
    let adj = |m: &CMat| -> CMat { m.t().mapv(|x| x.conj()) };
    match variant {
        TransferVariant::Plain => {
            let t_inv = inverse(h.t())?;
            Ok(assemble(
                &e_minus_v(h.v()).dot(&t_inv),
                &h.r().mapv(|x| -x),
                &t_inv,
                &Array2::from_elem((l, l), ZERO),
            ))
        }
        TransferVariant::Tilde => {
            let r_inv = inverse(h.r())?;
            Ok(assemble(
                &e_minus_v(h.v()).dot(&r_inv),
                &h.t().mapv(|x| -x),
                &r_inv,
                &Array2::from_elem((l, l), ZERO),
            ))
        }
        TransferVariant::Hat => {
            let r_adj_inv = inverse(&adj(h.r()))?;
            Ok(assemble(
                &e_minus_v(&adj(h.v())).dot(&r_adj_inv),
                &adj(h.t()).mapv(|x| -x),
                &r_adj_inv,
                &Array2::from_elem((l, l), ZERO),
            ))
        }
        TransferVariant::Inverse => {
            let r_inv = inverse(h.r())?;
            Ok(assemble(
                &Array2::from_elem((l, l), ZERO),
                h.t(),
                &r_inv.mapv(|x| -x),
                &r_inv.dot(&e_minus_v(h.v())),
            ))
        }
    }
}

fn assemble(a: &CMat, b: &CMat, c_blk: &CMat, d: &CMat) -> CMat {
    let l = a.nrows();
    let mut m = Array2::from_elem((2 * l, 2 * l), ZERO);
    m.slice_mut(s![..l, ..l]).assign(a);
    m.slice_mut(s![..l, l..]).assign(b);
    m.slice_mut(s![l.., ..l]).assign(c_blk);
    m.slice_mut(s![l.., l..]).assign(d);
    m
}

/// Eigenvalues of the transfer matrix sorted by modulus (phase breaks ties),
/// the matching eigenvector basis and the gap diagnostics.
#[derive(Debug, Clone)]
pub struct TransferEigenData {
    pub energy: C64,
    /// z_1, ..., z_2L with |z_l| <= |z_{l+1}|.
    pub eigenvalues: Vec<C64>,
    /// Columns are eigenvectors ordered to match `eigenvalues`.
    pub basis: CMat,
    /// Relative gap between the middle two moduli.
    pub middle_gap: f64,
    /// Smallest pairwise distance between eigenvalues.
    pub min_pair_gap: f64,
    pub degenerate: bool,
}

impl TransferEigenData {
    pub fn block_size(&self) -> usize {
        self.eigenvalues.len() / 2
    }

    /// Moduli of the middle pair (z_L, z_{L+1}).
    pub fn middle_moduli(&self) -> (f64, f64) {
        let l = self.block_size();
        (self.eigenvalues[l - 1].norm(), self.eigenvalues[l].norm())
    }

    /// Geometric mean of the middle moduli, the default separating radius.
    pub fn separating_radius(&self) -> f64 {
        let (a, b) = self.middle_moduli();
        (a * b).sqrt()
    }

    pub fn max_modulus(&self) -> f64 {
        self.eigenvalues.last().map(|z| z.norm()).unwrap_or(0.0)
    }

    /// Smallest distance from the circle of radius `r` to any eigenvalue.
    pub fn circle_clearance(&self, r: f64) -> f64 {
        self.eigenvalues
            .iter()
            .map(|z| (z.norm() - r).abs())
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn transfer_eigendata(h: &BlockSymbol, e: C64) -> Result<TransferEigenData> {
    let t = transfer_matrix(h, e, TransferVariant::Plain)?;
    let (vals, vecs) = eig(&t)?;
    let two_l = vals.len();
    let l = two_l / 2;
    let mut order: Vec<usize> = (0..two_l).collect();
    order.sort_by(|&a, &b| vals[a].norm().total_cmp(&vals[b].norm()));
    // group near-equal moduli, order each group by principal argument
    let mut i = 0;
    while i < two_l {
        let mut j = i + 1;
        while j < two_l {
            let prev = vals[order[j - 1]].norm();
            let cur = vals[order[j]].norm();
            if cur - prev <= MODULUS_TIE_TOL * cur.max(prev) {
                j += 1;
            } else {
                break;
            }
        }
        if j - i > 1 {
            order[i..j].sort_by(|&a, &b| vals[a].arg().total_cmp(&vals[b].arg()));
        }
        i = j;
    }
    let eigenvalues: Vec<C64> = order.iter().map(|&k| vals[k]).collect();
    let mut basis = Array2::from_elem((two_l, two_l), ZERO);
    for (col, &k) in order.iter().enumerate() {
        basis.column_mut(col).assign(&vecs.column(k));
    }
    // the phase tie-break can put the smaller modulus second; clamp at zero
    let lo = eigenvalues[l - 1].norm();
    let hi = eigenvalues[l].norm();
    let middle_gap = ((hi - lo) / hi.max(1e-300)).max(0.0);
    let mut min_pair_gap = f64::INFINITY;
    for a in 0..two_l {
        for b in (a + 1)..two_l {
            min_pair_gap = min_pair_gap.min((eigenvalues[a] - eigenvalues[b]).norm());
        }
    }
    let max_mod = eigenvalues[two_l - 1].norm();
    Ok(TransferEigenData {
        energy: e,
        eigenvalues,
        basis,
        middle_gap,
        min_pair_gap,
        degenerate: min_pair_gap < DEGENERACY_TOL * max_mod,
    })
}

/// Ascending coefficients of d(z, E) = det_L(R + z(V - E) + z^2 T), the
/// degree-2L polynomial whose roots are the transfer eigenvalues.
pub fn z_polynomial(h: &BlockSymbol, e: C64) -> Vec<C64> {
    let l = h.block_size();
    let f = |z: C64| -> C64 {
        let mut m = h.r() + &h.v().mapv(|x| x * z) + &h.t().mapv(|x| x * z * z);
        for i in 0..l {
            m[[i, i]] -= e * z;
        }
        crate::linalg::det(&m).expect("small dense determinant")
    };
    poly_coeffs_from_samples(f, 2 * l, 1.0)
}

/// A located point of the degeneracy set F.
#[derive(Debug, Clone, Copy)]
pub struct FPoint {
    pub energy: C64,
    /// Normalized residual of the resultant polynomial after Newton.
    pub residual: f64,
    /// Smallest transfer-eigenvalue pair distance at the point.
    pub pair_gap: f64,
}

/// Roots inside `region` of the resultant r_E = Res_z(p_E, p_E'), where
/// p_E(z) = det_L(z(H(z) - E)). The resultant is a polynomial in E of degree
/// at most L(4L-1); it is sampled on a circle enclosing the region and
/// interpolated, and its roots come from the companion matrix, polished by
/// Newton and verified against the actual eigenvalue gaps.
pub fn discriminant_roots(h: &BlockSymbol, region: &Rect) -> Result<Vec<FPoint>> {
    let l = h.block_size();
    let deg = l * (4 * l - 1);
    // sampling radius: interpolation is exact for the degree bound at any
    // radius, and a tight circle keeps the roundoff floor low near the roots
    let radius = 1.0 + h.norm_bound();

    let sylvester_det = |e: C64| -> C64 {
        let p = z_polynomial(h, e);
        let dp = poly_derivative(&p);
        resultant_det(&p, &dp)
    };

    // The resultant vanishes identically exactly when every energy carries a
    // degenerate transfer eigenvalue, so probe the pair gaps at scattered
    // sample energies instead of thresholding the badly scaled determinant.
    let golden = 0.618_033_988_749_894_9;
    let mut all_degenerate = true;
    for k in 0..12 {
        let e = C64::from_polar(
            radius * (0.3 + 0.05 * k as f64),
            2.0 * std::f64::consts::PI * golden * k as f64 + 0.37,
        );
        let data = transfer_eigendata(h, e)?;
        if data.min_pair_gap > 1e-10 * data.max_modulus().max(1e-300) {
            all_degenerate = false;
            break;
        }
    }
    if all_degenerate {
        return Err(SpectraError::IdenticallyZeroDiscriminant);
    }

    let coeffs = poly_coeffs_from_samples(sylvester_det, deg, radius);
    let raw_roots = poly_roots(&coeffs)?;

    // The companion roots land within the interpolation noise basin of each
    // resultant zero; the zeros are often multiple (several branch pairs can
    // collide at one energy), which smears them into clusters and makes
    // polynomial Newton unreliable. Cluster centroids average that smear out,
    // and every candidate is sharpened on the exact pair-gap functional,
    // which behaves like sqrt(|E - E*|) and localizes the point precisely.
    let mut candidates: Vec<C64> = raw_roots.clone();
    candidates.extend(cluster_centroids(&raw_roots, 0.02 * (1.0 + radius.sqrt())));
    let mut points: Vec<FPoint> = Vec::new();
    let search = region.padded(0.02 * (1.0 + radius));
    for &root in &candidates {
        let e = root;
        if !search.contains(e) {
            continue;
        }
        let coarse = relative_pair_gap(h, e)?;
        if coarse > 0.25 {
            continue;
        }
        let refined = minimize_pair_gap(h, e, 0.05 * (1.0 + e.norm()))?;
        if !region.contains(refined) {
            continue;
        }
        let pair_gap = relative_pair_gap(h, refined)?;
        // eigensolvers resolve a Jordan pair only to sqrt(machine epsilon),
        // so the acceptance threshold sits well above that floor
        if pair_gap > 1e-5 {
            continue;
        }
        let local_scale: f64 = coeffs
            .iter()
            .enumerate()
            .map(|(j, cf)| cf.norm() * refined.norm().max(1.0).powi(j as i32))
            .sum::<f64>()
            .max(1e-300);
        let residual = poly_eval(&coeffs, refined).norm() / local_scale;
        points.push(FPoint {
            energy: refined,
            residual,
            pair_gap,
        });
    }
    // dedupe nearby copies of the same root
    points.sort_by(|a, b| {
        (a.energy.re, a.energy.im)
            .partial_cmp(&(b.energy.re, b.energy.im))
            .unwrap()
    });
    let mut unique: Vec<FPoint> = Vec::new();
    for p in points {
        let dup = unique
            .iter()
            .any(|q| (q.energy - p.energy).norm() <= 1e-6 * (1.0 + p.energy.norm()));
        if !dup {
            unique.push(p);
        }
    }
    Ok(unique)
}

/// Greedy single-linkage clusters of nearby roots, reported as centroids.
fn cluster_centroids(roots: &[C64], radius: f64) -> Vec<C64> {
    let mut assigned = vec![false; roots.len()];
    let mut centroids = Vec::new();
    for i in 0..roots.len() {
        if assigned[i] {
            continue;
        }
        let mut members = vec![i];
        assigned[i] = true;
        let mut frontier = vec![i];
        while let Some(k) = frontier.pop() {
            for j in 0..roots.len() {
                if !assigned[j] && (roots[j] - roots[k]).norm() <= radius {
                    assigned[j] = true;
                    members.push(j);
                    frontier.push(j);
                }
            }
        }
        if members.len() > 1 {
            let sum: C64 = members.iter().map(|&k| roots[k]).sum();
            centroids.push(sum / members.len() as f64);
        }
    }
    centroids
}

fn relative_pair_gap(h: &BlockSymbol, e: C64) -> Result<f64> {
    let data = transfer_eigendata(h, e)?;
    Ok(data.min_pair_gap / data.max_modulus().max(1e-300))
}

/// Coordinate-wise golden-section descent on the pair-gap functional. The
/// gap grows like sqrt(|E - E*|) away from a collision, so the bracket is
/// re-tightened from the achieved gap after every sweep.
fn minimize_pair_gap(h: &BlockSymbol, start: C64, width: f64) -> Result<C64> {
    const PHI: f64 = 0.618_033_988_749_894_9;
    let mut e = start;
    let mut w = width;
    for _ in 0..14 {
        let before = e;
        for dir in [C64::new(1.0, 0.0), C64::new(0.0, 1.0)] {
            let f = |t: f64| -> f64 {
                relative_pair_gap(h, e + dir * t).unwrap_or(f64::INFINITY)
            };
            let mut a = -w;
            let mut b = w;
            let mut x1 = b - PHI * (b - a);
            let mut x2 = a + PHI * (b - a);
            let mut f1 = f(x1);
            let mut f2 = f(x2);
            for _ in 0..56 {
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
            }
            let best = if f1 <= f2 { x1 } else { x2 };
            if f(best) < f(0.0) {
                e += dir * best;
            }
        }
        let g = relative_pair_gap(h, e)?;
        if g < 1e-9 {
            break;
        }
        // shrink the bracket, but never below the scale of the last move
        let moved = (e - before).norm();
        w = (w * 0.25).max(4.0 * moved).min(w);
        if w < 1e-15 {
            break;
        }
    }
    Ok(e)
}

/// Resultant of two polynomials as the determinant of their Sylvester matrix.
fn resultant_det(p: &[C64], q: &[C64]) -> C64 {
    let n = p.len() - 1;
    let m = q.len() - 1;
    if n == 0 || m == 0 {
        // degenerate cases are not hit for valid symbols (leading coeffs nonzero)
        return if n == 0 {
            p[0].powu(m as u32)
        } else {
            q[0].powu(n as u32)
        };
    }
    let size = n + m;
    let mut s_mat = Array2::from_elem((size, size), ZERO);
    for row in 0..m {
        for (k, &cf) in p.iter().enumerate() {
            s_mat[[row, row + n - k]] = cf;
        }
    }
    for row in 0..n {
        for (k, &cf) in q.iter().enumerate() {
            s_mat[[m + row, row + m - k]] = cf;
        }
    }
    crate::linalg::det(&s_mat).expect("sylvester determinant")
}

/// Winding-free count of roots of `det(z H(z))`-type quadratic matrix
/// polynomials: ascending coefficients of det_L(A + z B + z^2 C).
pub fn matrix_quadratic_det_coeffs(a: &CMat, b: &CMat, c_m: &CMat) -> Vec<C64> {
    let l = a.nrows();
    let f = |z: C64| -> C64 {
        let m = a + &b.mapv(|x| x * z) + &c_m.mapv(|x| x * z * z);
        crate::linalg::det(&m).expect("small dense determinant")
    };
    poly_coeffs_from_samples(f, 2 * l, 1.0)
}

/// Closed-form check value: product of all transfer eigenvalues must equal
/// det(R)/det(T).
pub fn eigenvalue_product_target(h: &BlockSymbol) -> Result<C64> {
    Ok(crate::linalg::det(h.r())? / crate::linalg::det(h.t())?)
}

/// Sum of |coeff| * max(1, |z|)^k, a scale for polynomial residuals.
pub fn poly_residual_scale(coeffs: &[C64], z: C64) -> f64 {
    let zm = z.norm().max(1.0);
    let mut acc = KahanSum::new();
    let mut pw = 1.0;
    for cf in coeffs {
        acc.add(c(cf.norm() * pw, 0.0));
        pw *= zm;
    }
    acc.value().re.max(1e-300)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{fro_norm, identity, multiset_match_distance, rel_err, ONE};
    use crate::model::scalar_symbol;

    fn laplacian() -> BlockSymbol {
        scalar_symbol(ONE, ZERO, ONE).unwrap()
    }

    fn hatano_nelson() -> BlockSymbol {
        scalar_symbol(c(2.5, 0.0), c(-0.1, 0.2), c(0.5, 1.0)).unwrap()
    }

    fn random_symbol(l: usize, seed: u64) -> BlockSymbol {
        // tiny deterministic LCG, enough for structural identity tests
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
        let mut next = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        loop {
            let mut mats = Vec::new();
            for _ in 0..3 {
                let mut m = Array2::from_elem((l, l), ZERO);
                for i in 0..l {
                    for j in 0..l {
                        m[[i, j]] = c(next(), next());
                    }
                }
                mats.push(m);
            }
            let v = mats.pop().unwrap();
            let t = mats.pop().unwrap();
            let r = mats.pop().unwrap();
            if let Ok(h) = BlockSymbol::new(l, r, v, t) {
                return h;
            }
        }
    }

    #[test]
    fn laplacian_transfer_at_zero() {
        let t = transfer_matrix(&laplacian(), ZERO, TransferVariant::Plain).unwrap();
        let expect = array![[ZERO, -ONE], [ONE, ZERO]];
        assert!(fro_norm(&(&t - &expect)) < 1e-15);
    }

    #[test]
    fn plain_times_inverse_is_identity() {
        let h = random_symbol(2, 7);
        let e = c(0.4, -0.9);
        let t = transfer_matrix(&h, e, TransferVariant::Plain).unwrap();
        let ti = transfer_matrix(&h, e, TransferVariant::Inverse).unwrap();
        let prod = t.dot(&ti);
        assert!(fro_norm(&(&prod - &identity(4))) < 1e-12);
    }

    #[test]
    fn transfer_det_is_detr_over_dett() {
        let h = random_symbol(3, 21);
        let e = c(-0.3, 0.8);
        let t = transfer_matrix(&h, e, TransferVariant::Plain).unwrap();
        let dt = crate::linalg::det(&t).unwrap();
        let target = eigenvalue_product_target(&h).unwrap();
        assert!(rel_err(dt, target) < 1e-10);
    }

    #[test]
    fn eigendata_hatano_nelson_at_v() {
        // E = V collapses the quadratic to z^2 = -R/T: equal moduli
        let h = hatano_nelson();
        let data = transfer_eigendata(&h, c(-0.1, 0.2)).unwrap();
        let target = (-h.r()[[0, 0]] / h.t()[[0, 0]]).sqrt();
        assert!(data.middle_gap < 1e-12);
        let got: Vec<C64> = data.eigenvalues.clone();
        assert!(multiset_match_distance(&got, &[target, -target]) < 1e-12);
    }

    #[test]
    fn eigendata_laplacian_at_five() {
        let data = transfer_eigendata(&laplacian(), c(5.0, 0.0)).unwrap();
        let s21 = 21f64.sqrt();
        assert!((data.eigenvalues[0] - c((5.0 - s21) / 2.0, 0.0)).norm() < 1e-12);
        assert!((data.eigenvalues[1] - c((5.0 + s21) / 2.0, 0.0)).norm() < 1e-12);
        assert!(data.middle_gap > 0.5);
        assert!(!data.degenerate);
    }

    #[test]
    fn eigendata_invariants_hold() {
        let h = random_symbol(2, 33);
        let e = c(0.7, 0.25);
        let data = transfer_eigendata(&h, e).unwrap();
        // product of eigenvalues
        let prod = data.eigenvalues.iter().product::<C64>();
        assert!(rel_err(prod, eigenvalue_product_target(&h).unwrap()) < 1e-8);
        // each eigenvalue solves det(H(z) - E) = 0
        let coeffs = z_polynomial(&h, e);
        for &z in &data.eigenvalues {
            let resid = poly_eval(&coeffs, z).norm();
            assert!(resid <= 1e-8 * poly_residual_scale(&coeffs, z));
        }
        // the basis diagonalizes the transfer matrix
        let t = transfer_matrix(&h, e, TransferVariant::Plain).unwrap();
        let m_inv = inverse(&data.basis).unwrap();
        let d = m_inv.dot(&t).dot(&data.basis);
        let mut diag = Array2::from_elem(d.dim(), ZERO);
        for (i, &z) in data.eigenvalues.iter().enumerate() {
            diag[[i, i]] = z;
        }
        assert!(fro_norm(&(&d - &diag)) <= 1e-8 * fro_norm(&t));
    }

    #[test]
    fn tilde_eigenvalues_are_reversed_reciprocals() {
        let h = random_symbol(2, 55);
        let e = c(-0.2, 0.45);
        let plain = transfer_eigendata(&h, e).unwrap();
        let tilde = transfer_eigendata(&h.tilde(), e).unwrap();
        let expect: Vec<C64> = plain.eigenvalues.iter().rev().map(|z| 1.0 / z).collect();
        assert!(multiset_match_distance(&tilde.eigenvalues, &expect) < 1e-8);
    }

    #[test]
    fn discriminant_roots_laplacian() {
        let region = Rect::new(-3.0, 3.0, -1.0, 1.0);
        let mut points = discriminant_roots(&laplacian(), &region).unwrap();
        points.sort_by(|a, b| a.energy.re.total_cmp(&b.energy.re));
        assert_eq!(points.len(), 2);
        assert!((points[0].energy - c(-2.0, 0.0)).norm() < 1e-8);
        assert!((points[1].energy - c(2.0, 0.0)).norm() < 1e-8);
    }

    #[test]
    fn discriminant_roots_hatano_nelson() {
        // F = { V + 2 sqrt(RT), V - 2 sqrt(RT) }
        let h = hatano_nelson();
        let v = h.v()[[0, 0]];
        let rt = (h.r()[[0, 0]] * h.t()[[0, 0]]).sqrt();
        let region = Rect::new(-6.0, 6.0, -6.0, 6.0);
        let points = discriminant_roots(&h, &region).unwrap();
        assert_eq!(points.len(), 2);
        for target in [v + 2.0 * rt, v - 2.0 * rt] {
            assert!(
                points.iter().any(|p| (p.energy - target).norm() < 1e-7),
                "missing F point {target}"
            );
        }
    }

    #[test]
    fn three_summand_model_has_finite_f() {
        // direct sum of three scalar models whose eigenvalue branches are
        // z', -z', 2z': collisions happen on a finite set only
        let r_val = c(0.8, 0.3);
        let t_val = c(0.5, -0.4);
        let mk_diag = |a: C64, b: C64, d: C64| {
            let mut m = Array2::from_elem((3, 3), ZERO);
            m[[0, 0]] = a;
            m[[1, 1]] = b;
            m[[2, 2]] = d;
            m
        };
        let h = BlockSymbol::new(
            3,
            mk_diag(r_val, -r_val, 2.0 * r_val),
            Array2::from_elem((3, 3), ZERO),
            mk_diag(t_val, -t_val, 0.5 * t_val),
        )
        .unwrap();
        let region = Rect::new(-4.0, 4.0, -4.0, 4.0);
        let points = discriminant_roots(&h, &region).unwrap();
        // per-summand degeneracies sit at +/- 2 sqrt(rt)
        let rt = (r_val * t_val).sqrt();
        for target in [2.0 * rt, -2.0 * rt] {
            assert!(
                points.iter().any(|p| (p.energy - target).norm() < 1e-6),
                "missing per-summand F point {target}; got {points:?}"
            );
        }
        // cross-summand collision at E = 0 (z and -z branches)
        assert!(points.iter().any(|p| p.energy.norm() < 1e-6));
    }
}
