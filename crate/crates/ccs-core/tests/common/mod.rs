//! Shared test oracles, deliberately independent of the library's SVD
//! path: a cyclic Jacobi eigensolver for symmetric matrices and a dense
//! reference implementation of the completion iteration that materializes
//! the full iterate.

#![allow(dead_code)]

use ccs_core::icurc::IcurcConfig;
use ccs_core::linalg::{pseudo_inverse, truncated_svd};
use ccs_core::matrix::DenseMatrix;
use ccs_core::sampling::CrossSample;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rows: usize, cols: usize, rng: &mut impl Rng) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

pub fn gaussian_lowrank(rows: usize, cols: usize, r: usize, rng: &mut impl Rng) -> DenseMatrix {
    gaussian(rows, r, rng).matmul_tr(&gaussian(cols, r, rng))
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues in nonincreasing order with matching eigenvector
/// columns.
pub fn jacobi_symmetric_eigen(a: &DenseMatrix) -> (Vec<f64>, DenseMatrix) {
    assert_eq!(a.rows(), a.cols(), "jacobi needs a square symmetric input");
    let n = a.rows();
    let mut m = a.clone();
    let mut v = DenseMatrix::identity(n);

    let off_norm = |m: &DenseMatrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m.get(i, j) * m.get(i, j);
                }
            }
        }
        s.sqrt()
    };

    let scale = a.max_abs().max(1.0);
    for _sweep in 0..100 {
        if off_norm(&m) <= 1e-14 * scale * n as f64 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m.get(p, q);
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let app = m.get(p, p);
                let aqq = m.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // rotate rows/columns p and q
                for k in 0..n {
                    let mkp = m.get(k, p);
                    let mkq = m.get(k, q);
                    m.set(k, p, c * mkp - s * mkq);
                    m.set(k, q, s * mkp + c * mkq);
                }
                for k in 0..n {
                    let mpk = m.get(p, k);
                    let mqk = m.get(q, k);
                    m.set(p, k, c * mpk - s * mqk);
                    m.set(q, k, s * mpk + c * mqk);
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        m.get(j, j)
            .partial_cmp(&m.get(i, i))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values: Vec<f64> = order.iter().map(|&i| m.get(i, i)).collect();
    let vectors = v.select_cols(&order);
    (values, vectors)
}

/// Singular values of `a` through the independent eigen route on the Gram
/// matrix, nonincreasing.
pub fn singular_values_by_gram(a: &DenseMatrix) -> Vec<f64> {
    let gram = if a.rows() >= a.cols() {
        a.tr_matmul(a)
    } else {
        a.matmul_tr(a)
    };
    let (values, _) = jacobi_symmetric_eigen(&gram);
    values.into_iter().map(|l| l.max(0.0).sqrt()).collect()
}

/// Dense reference step of the completion iteration: materializes the full
/// iterate, slices it directly, and rebuilds the next full iterate through
/// the CUR identity. Mirrors the library's update semantics entry for
/// entry.
pub fn dense_reference_step(
    cs: &CrossSample,
    x_k: &DenseMatrix,
    rank: usize,
    steps: (f64, f64, f64),
) -> DenseMatrix {
    let rows = cs.row_indices();
    let cols = cs.col_indices();
    let (eta_rows, eta_cols, eta_core) = steps;
    let in_rows = |i: usize| rows.binary_search(&i).is_ok();
    let in_cols = |j: usize| cols.binary_search(&j).is_ok();
    let row_local = |i: usize| rows.binary_search(&i).unwrap();
    let col_local = |j: usize| cols.binary_search(&j).unwrap();

    let mut rows_next = x_k.select_rows(rows);
    for e in cs.omega_rows().entries() {
        if !in_cols(e.col) {
            let cur = x_k.get(e.row, e.col);
            rows_next.set(row_local(e.row), e.col, cur + eta_rows * (e.value - cur));
        }
    }
    let mut cols_next = x_k.select_cols(cols);
    for e in cs.omega_cols().entries() {
        if !in_rows(e.row) {
            let cur = x_k.get(e.row, e.col);
            cols_next.set(e.row, col_local(e.col), cur + eta_cols * (e.value - cur));
        }
    }
    let mut core_pre = x_k.submatrix(rows, cols);
    for e in cs.omega_rows().entries() {
        if in_cols(e.col) {
            let (li, lj) = (row_local(e.row), col_local(e.col));
            let cur = core_pre.get(li, lj);
            core_pre.set(li, lj, cur + eta_core * (e.value - x_k.get(e.row, e.col)));
        }
    }
    for e in cs.omega_cols().entries() {
        if in_rows(e.row) {
            let (li, lj) = (row_local(e.row), col_local(e.col));
            let cur = core_pre.get(li, lj);
            core_pre.set(li, lj, cur + eta_core * (e.value - x_k.get(e.row, e.col)));
        }
    }
    let core = truncated_svd(&core_pre, rank)
        .expect("reference truncation")
        .reconstruct();
    rows_next.set_cols(cols, &core);
    cols_next.set_rows(rows, &core);

    let core_pinv = pseudo_inverse(&core, 0.0).expect("reference pseudo-inverse");
    cols_next.matmul(&core_pinv.matmul(&rows_next))
}

/// Residual of a dense iterate on the observed entries, multiplicity
/// weighted, by direct summation.
pub fn dense_reference_residual(cs: &CrossSample, x_k: &DenseMatrix) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for e in cs
        .omega_rows()
        .entries()
        .iter()
        .chain(cs.omega_cols().entries())
    {
        let w = e.multiplicity as f64;
        let d = e.value - x_k.get(e.row, e.col);
        num += w * d * d;
        den += w * e.value * e.value;
    }
    num / den
}

pub fn default_config(rank: usize) -> IcurcConfig {
    IcurcConfig::new(rank)
}
