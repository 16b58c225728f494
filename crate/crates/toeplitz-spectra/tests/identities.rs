//! Structural identities of the transfer matrix, the Riesz projections and
//! the moment matrices, checked on seeded random instances.

use ndarray::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use toeplitz_spectra::linalg::{
    det, fro_norm, identity, inverse, multiset_match_distance, poly_eval, rel_err, C64, CMat, ONE,
    ZERO,
};
use toeplitz_spectra::model::SymbolVariant;
use toeplitz_spectra::projections::{
    q_moment, riesz_projection, RieszMethod, RieszSelector,
};
use toeplitz_spectra::spectra::{halfline_kernel_dims, winding, WindingMethod};
use toeplitz_spectra::transfer::{
    transfer_eigendata, transfer_matrix, z_polynomial, TransferVariant,
};
use toeplitz_spectra::widom::{random_symbol, sample_energy};
use toeplitz_spectra::BlockSymbol;

fn instance(rng: &mut ChaCha8Rng) -> (BlockSymbol, C64) {
    let l = rng.gen_range(1..=3usize);
    let h = random_symbol(rng, l);
    let e = sample_energy(rng, &h);
    (h, e)
}

fn adjoint(m: &CMat) -> CMat {
    m.t().mapv(|x| x.conj())
}

#[test]
fn symplectic_type_relation() {
    // the hat transfer matrix at the conjugate energy is the I-inverse
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for _ in 0..50 {
        let (h, e) = instance(&mut rng);
        let l = h.block_size();
        let t = transfer_matrix(&h, e, TransferVariant::Plain).unwrap();
        let hat = transfer_matrix(&h, e.conj(), TransferVariant::Hat).unwrap();
        let mut i_mat = Array2::from_elem((2 * l, 2 * l), ZERO);
        for k in 0..l {
            i_mat[[k, l + k]] = -ONE;
            i_mat[[l + k, k]] = ONE;
        }
        let lhs = adjoint(&hat).dot(&i_mat).dot(&t);
        let defect = fro_norm(&(&lhs - &i_mat)) / fro_norm(&t);
        assert!(defect <= 1e-10, "defect {defect}");
    }
}

#[test]
fn conjugation_identity() {
    // [[0, R], [T^-1, 0]] conjugates the flipped transfer matrix into the
    // inverse of the plain one
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    for _ in 0..50 {
        let (h, e) = instance(&mut rng);
        let l = h.block_size();
        let tilde = transfer_matrix(&h, e, TransferVariant::Tilde).unwrap();
        let inv = transfer_matrix(&h, e, TransferVariant::Inverse).unwrap();
        let mut j = Array2::from_elem((2 * l, 2 * l), ZERO);
        j.slice_mut(s![..l, l..]).assign(h.r());
        j.slice_mut(s![l.., ..l]).assign(&inverse(h.t()).unwrap());
        let lhs = inverse(&j).unwrap().dot(&tilde).dot(&j);
        let defect = fro_norm(&(&lhs - &inv)) / (1.0 + fro_norm(&inv));
        assert!(defect <= 1e-10, "defect {defect}");
    }
}

#[test]
fn characteristic_identity_at_random_arguments() {
    // det(T^E - z) = z^L det(T)^-1 det(H(z) - E) at 20 random z per instance
    let mut rng = ChaCha8Rng::seed_from_u64(107);
    for _ in 0..50 {
        let (h, e) = instance(&mut rng);
        let l = h.block_size();
        let t = transfer_matrix(&h, e, TransferVariant::Plain).unwrap();
        let det_t = det(h.t()).unwrap();
        for _ in 0..20 {
            let z = C64::from_polar(
                rng.gen_range(0.2..2.5f64),
                rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
            );
            let mut shifted = t.clone();
            for i in 0..2 * l {
                shifted[[i, i]] -= z;
            }
            let lhs = det(&shifted).unwrap();
            let mut sym = h.at(z, SymbolVariant::Plain).unwrap();
            for i in 0..l {
                sym[[i, i]] -= e;
            }
            let rhs = z.powi(l as i32) / det_t * det(&sym).unwrap();
            assert!(rel_err(lhs, rhs) <= 1e-8, "z = {z}: {lhs} vs {rhs}");
        }
    }
}

#[test]
fn spectrum_inversion() {
    // flipped eigenvalues are the reversed reciprocals
    let mut rng = ChaCha8Rng::seed_from_u64(109);
    for _ in 0..50 {
        let (h, e) = instance(&mut rng);
        let plain = transfer_eigendata(&h, e).unwrap();
        let tilde = transfer_eigendata(&h.tilde(), e).unwrap();
        let expect: Vec<C64> = plain.eigenvalues.iter().rev().map(|z| 1.0 / z).collect();
        let scale = 1.0 + expect.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let dist = multiset_match_distance(&tilde.eigenvalues, &expect);
        assert!(dist <= 1e-7 * scale, "distance {dist}");
    }
}

#[test]
fn moment_inversion_identity() {
    // flipped moments at radius r are the (2-j)-moments at radius 1/r
    let mut rng = ChaCha8Rng::seed_from_u64(113);
    for _ in 0..50 {
        let (h, e) = instance(&mut rng);
        let data = transfer_eigendata(&h, e).unwrap();
        let r = 1.0 / data.separating_radius();
        for j in 0..=2 {
            let tilde = q_moment(&h.tilde(), e, r, j).unwrap();
            let plain = q_moment(&h, e, 1.0 / r, 2 - j).unwrap();
            let defect = fro_norm(&(&tilde - &plain)) / (1.0 + fro_norm(&plain));
            assert!(defect <= 1e-7, "j = {j}, defect {defect}");
        }
    }
}

#[test]
fn complement_conjugation_of_projections() {
    // 1 - R_r equals the conjugated flipped projection at the inverse radius
    let mut rng = ChaCha8Rng::seed_from_u64(127);
    for _ in 0..50 {
        let (h, e) = instance(&mut rng);
        let l = h.block_size();
        let data = transfer_eigendata(&h, e).unwrap();
        let r = data.separating_radius();
        let p = riesz_projection(&h, e, RieszSelector::Radius(r), RieszMethod::Eigen)
            .unwrap()
            .projector;
        let p_tilde = riesz_projection(
            &h.tilde(),
            e,
            RieszSelector::Radius(1.0 / r),
            RieszMethod::Eigen,
        )
        .unwrap()
        .projector;
        let mut j = Array2::from_elem((2 * l, 2 * l), ZERO);
        j.slice_mut(s![..l, l..]).assign(h.t());
        j.slice_mut(s![l.., ..l]).assign(&inverse(h.r()).unwrap());
        let rhs = j.dot(&p_tilde).dot(&inverse(&j).unwrap());
        let lhs = &identity(2 * l) - &p;
        let defect = fro_norm(&(&lhs - &rhs)) / (1.0 + fro_norm(&rhs));
        assert!(defect <= 1e-7, "defect {defect}");
    }
}

#[test]
fn projection_idempotency_and_commutation() {
    let mut rng = ChaCha8Rng::seed_from_u64(131);
    for _ in 0..50 {
        let (h, e) = instance(&mut rng);
        let data = transfer_eigendata(&h, e).unwrap();
        let r = data.separating_radius();
        let p = riesz_projection(&h, e, RieszSelector::Radius(r), RieszMethod::Eigen)
            .unwrap()
            .projector;
        let t = transfer_matrix(&h, e, TransferVariant::Plain).unwrap();
        let idem = fro_norm(&(&p.dot(&p) - &p)) / (1.0 + fro_norm(&p).powi(2));
        let comm = fro_norm(&(&p.dot(&t) - &t.dot(&p))) / fro_norm(&t);
        assert!(idem <= 1e-7, "idempotency defect {idem}");
        assert!(comm <= 1e-7, "commutation defect {comm}");
    }
}

#[test]
fn winding_methods_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(137);
    let mut checked = 0;
    while checked < 100 {
        let (h, e) = instance(&mut rng);
        let data = transfer_eigendata(&h, e).unwrap();
        let lo = data.eigenvalues.first().unwrap().norm();
        let hi = data.max_modulus();
        let s = (lo * 0.5) * ((hi * 2.0) / (lo * 0.5)).powf(rng.gen_range(0.0..1.0f64));
        if data.circle_clearance(s) < 1e-3 * s {
            continue;
        }
        let count = winding(&h, e, s, WindingMethod::Count).unwrap();
        let integral = winding(&h, e, s, WindingMethod::Integral).unwrap();
        assert_eq!(count, integral, "scale {s}");
        checked += 1;
    }
}

#[test]
fn kernel_dimension_identity() {
    // dim Ker Q^(1)_s equals the sum of the half-line kernel dimensions
    let mut rng = ChaCha8Rng::seed_from_u64(139);
    for _ in 0..50 {
        let (h, e) = instance(&mut rng);
        let data = transfer_eigendata(&h, e).unwrap();
        let s = data.separating_radius();
        let (dr, dl) = halfline_kernel_dims(&h, e, s).unwrap();
        let q_dim = toeplitz_spectra::projections::q1_kernel_dim(&h, e, s).unwrap();
        assert_eq!(dr + dl, q_dim);
    }
}

#[test]
fn eigenvalues_solve_the_characteristic_polynomial() {
    let mut rng = ChaCha8Rng::seed_from_u64(149);
    for _ in 0..20 {
        let (h, e) = instance(&mut rng);
        let coeffs = z_polynomial(&h, e);
        let data = transfer_eigendata(&h, e).unwrap();
        for &z in &data.eigenvalues {
            let scale: f64 = coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| c.norm() * z.norm().max(1.0).powi(k as i32))
                .sum();
            let resid = poly_eval(&coeffs, z).norm();
            assert!(resid <= 1e-8 * scale.max(1e-300));
        }
    }
}
