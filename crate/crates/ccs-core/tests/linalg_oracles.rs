//! Oracle-backed checks for the dense linear algebra layer: the truncated
//! SVD against an independent Jacobi eigen route, closed-form
//! pseudo-inverses, CUR identity behavior, and incoherence recomputation.

mod common;

use ccs_core::linalg::{
    cur_reconstruct, incoherence, pseudo_inverse, truncated_svd, CURFactors,
};
use ccs_core::matrix::DenseMatrix;
use common::{gaussian, gaussian_lowrank, rng, singular_values_by_gram};
use rand::Rng;

#[test]
fn truncated_svd_error_matches_eigen_oracle_tail() {
    let mut rng = rng(101);
    for trial in 0..10 {
        let a = gaussian(6, 6, &mut rng);
        let sv = singular_values_by_gram(&a);
        let f = truncated_svd(&a, 3).unwrap();
        let err = f.reconstruct().sub(&a).frobenius_norm();
        let tail = (sv[3] * sv[3] + sv[4] * sv[4] + sv[5] * sv[5]).sqrt();
        assert!(
            (err - tail).abs() <= 1e-8 * (1.0 + tail),
            "trial {trial}: error {err} vs oracle tail {tail}"
        );
    }
}

#[test]
fn truncated_svd_singular_values_match_eigen_oracle() {
    let mut rng = rng(102);
    for (rows, cols) in [(8, 5), (5, 8), (7, 7)] {
        let a = gaussian(rows, cols, &mut rng);
        let k = rows.min(cols);
        let f = truncated_svd(&a, k).unwrap();
        let oracle = singular_values_by_gram(&a);
        for (s, o) in f.singular_values().iter().zip(oracle.iter()) {
            assert!((s - o).abs() <= 1e-9 * (1.0 + o), "{s} vs {o}");
        }
    }
}

#[test]
fn eckart_young_beats_random_rank_r_matrices() {
    let mut rng = rng(103);
    let a = gaussian(9, 9, &mut rng);
    let r = 3;
    let best = truncated_svd(&a, r).unwrap().reconstruct();
    let best_err = best.sub(&a).frobenius_norm();
    for _ in 0..100 {
        let candidate = gaussian_lowrank(9, 9, r, &mut rng);
        // scale the candidate toward a in Frobenius inner product, which
        // only helps it
        let num: f64 = candidate
            .data()
            .iter()
            .zip(a.data())
            .map(|(c, x)| c * x)
            .sum();
        let den = candidate.frobenius_norm().powi(2).max(f64::MIN_POSITIVE);
        let scaled = candidate.scaled(num / den);
        assert!(best_err <= scaled.sub(&a).frobenius_norm() + 1e-12);
    }
}

#[test]
fn pseudo_inverse_rank1_closed_form() {
    let mut rng = rng(104);
    for _ in 0..10 {
        let u = gaussian(5, 1, &mut rng);
        let v = gaussian(4, 1, &mut rng);
        let a = u.matmul_tr(&v);
        let p = pseudo_inverse(&a, 0.0).unwrap();
        let scale = u.frobenius_norm().powi(2) * v.frobenius_norm().powi(2);
        let expect = v.matmul_tr(&u).scaled(1.0 / scale);
        assert!(p.sub(&expect).max_abs() <= 1e-10 * expect.max_abs().max(1.0));
    }
}

#[test]
fn pseudo_inverse_satisfies_moore_penrose_identities_across_ranks() {
    let mut rng = rng(105);
    for r in 0..=4 {
        let a = if r == 0 {
            DenseMatrix::zeros(6, 4)
        } else {
            gaussian_lowrank(6, 4, r, &mut rng)
        };
        let p = pseudo_inverse(&a, 0.0).unwrap();
        let ap = a.matmul(&p);
        let pa = p.matmul(&a);
        let scale_a = a.max_abs().max(f64::MIN_POSITIVE);
        let scale_p = p.max_abs().max(f64::MIN_POSITIVE);
        assert!(ap.matmul(&a).sub(&a).max_abs() <= 1e-8 * scale_a);
        assert!(pa.matmul(&p).sub(&p).max_abs() <= 1e-8 * scale_p);
        assert!(ap.sub(&ap.transpose()).max_abs() <= 1e-8 * ap.max_abs().max(1e-30));
        assert!(pa.sub(&pa.transpose()).max_abs() <= 1e-8 * pa.max_abs().max(1e-30));
    }
}

#[test]
fn cur_identity_exact_when_core_has_full_rank() {
    let mut rng = rng(106);
    let x = gaussian_lowrank(20, 20, 3, &mut rng);
    // draw index sets until the core is verifiably full rank by the oracle
    loop {
        let mut rows = rand::seq::index::sample(&mut rng, 20, 6).into_vec();
        rows.sort_unstable();
        let mut cols = rand::seq::index::sample(&mut rng, 20, 6).into_vec();
        cols.sort_unstable();
        let core = x.submatrix(&rows, &cols);
        let sv = singular_values_by_gram(&core);
        if sv[2] <= 1e-8 * sv[0] {
            continue;
        }
        let f = CURFactors::from_matrix(&x, &rows, &cols).unwrap();
        let recon = cur_reconstruct(&f).unwrap();
        let rel = recon.sub(&x).frobenius_norm() / x.frobenius_norm();
        assert!(rel <= 1e-10, "relative error {rel}");
        break;
    }
}

#[test]
fn cur_identity_fails_when_core_rank_is_deficient() {
    // rank-2 block structure whose core sees only one block
    let mut x = DenseMatrix::zeros(8, 8);
    for i in 0..4 {
        for j in 0..4 {
            x.set(i, j, 1.0);
            x.set(i + 4, j + 4, 2.0);
        }
    }
    let f = CURFactors::from_matrix(&x, &[0, 1], &[0, 1]).unwrap();
    let recon = cur_reconstruct(&f).unwrap();
    let rel = recon.sub(&x).frobenius_norm() / x.frobenius_norm();
    assert!(rel >= 0.1, "relative error {rel} unexpectedly small");
}

#[test]
fn incoherence_matches_bruteforce_recomputation() {
    let mut rng = rng(107);
    let x = gaussian_lowrank(100, 100, 5, &mut rng);
    let f = truncated_svd(&x, 5).unwrap();
    let (mu1, mu2) = incoherence(&f);
    let brute = |m: &DenseMatrix| {
        let mut best: f64 = 0.0;
        for i in 0..m.rows() {
            let norm_sq: f64 = m.row(i).iter().map(|v| v * v).sum();
            best = best.max(norm_sq);
        }
        100.0 * best / 5.0
    };
    assert!((mu1 - brute(f.left())).abs() <= 1e-10 * mu1);
    assert!((mu2 - brute(f.right())).abs() <= 1e-10 * mu2);
    assert!((1.0..=20.0).contains(&mu1));
    assert!((1.0..=20.0).contains(&mu2));
}

#[test]
fn incoherence_is_scale_invariant() {
    let mut rng = rng(108);
    let x = gaussian_lowrank(30, 30, 4, &mut rng);
    let (mu1, mu2) = incoherence(&truncated_svd(&x, 4).unwrap());
    for scale in [1e-6, 0.5, 3.0, 2.5e4, -7.0] {
        let (a, b) = incoherence(&truncated_svd(&x.scaled(scale), 4).unwrap());
        assert!((a - mu1).abs() <= 1e-8 * mu1, "scale {scale}");
        assert!((b - mu2).abs() <= 1e-8 * mu2, "scale {scale}");
    }
}

#[test]
fn cur_exactness_consistency_with_reconstruction_error() {
    let mut rng = rng(109);
    for trial in 0..40 {
        let n = 10 + rng.gen_range(0..15);
        let r = 1 + rng.gen_range(0..3);
        let x = gaussian_lowrank(n, n, r, &mut rng);
        let k = (r + 2).min(n);
        let mut rows = rand::seq::index::sample(&mut rng, n, k).into_vec();
        rows.sort_unstable();
        let mut cols = rand::seq::index::sample(&mut rng, n, k).into_vec();
        cols.sort_unstable();
        let report = ccs_core::bounds::cur_exactness_check(&x, &rows, &cols, r).unwrap();
        if report.holds {
            assert!(
                report.relative_error <= 1e-8,
                "trial {trial}: holds but error {}",
                report.relative_error
            );
        } else {
            assert!(report.core_rank < r);
        }
    }
}
