//! Synthetic problem generators.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

/// Random rank-`r` matrix `A Bᵀ` with standard Gaussian factor entries.
pub fn synth_lowrank<R: Rng>(n: usize, r: usize, rng: &mut R) -> Result<DenseMatrix> {
    synth_lowrank_rect(n, n, r, rng)
}

/// Rectangular variant of [`synth_lowrank`].
pub fn synth_lowrank_rect<R: Rng>(
    rows: usize,
    cols: usize,
    r: usize,
    rng: &mut R,
) -> Result<DenseMatrix> {
    if r == 0 || r > rows.min(cols) {
        return Err(Error::InvalidParameter(format!(
            "rank {r} out of range for {rows}x{cols}"
        )));
    }
    let a = DenseMatrix::from_fn(rows, r, |_, _| StandardNormal.sample(rng));
    let b = DenseMatrix::from_fn(cols, r, |_, _| StandardNormal.sample(rng));
    Ok(a.matmul_tr(&b))
}

/// Smooth synthetic grayscale test image on `[0, 1]`: a superposition of
/// separable low-frequency modes with geometrically decaying weights, so
/// the spectrum decays fast but is not exactly low-rank.
pub fn synth_image(rows: usize, cols: usize, modes: usize) -> DenseMatrix {
    let raw = DenseMatrix::from_fn(rows, cols, |i, j| {
        let x = i as f64 / rows as f64;
        let y = j as f64 / cols as f64;
        let mut acc = 0.0;
        for k in 0..modes {
            let w = 0.55f64.powi(k as i32);
            let fx = (std::f64::consts::PI * (k as f64 + 1.0) * x).sin();
            let fy = (std::f64::consts::PI * (k as f64 + 1.3) * y + 0.4 * k as f64).cos();
            acc += w * fx * fy;
        }
        acc
    });
    let lo = raw.data().iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = raw.data().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = (hi - lo).max(f64::MIN_POSITIVE);
    DenseMatrix::from_fn(rows, cols, |i, j| (raw.get(i, j) - lo) / span)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{numerical_rank, svd_thin};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn lowrank_has_exact_numerical_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let x = synth_lowrank(50, 3, &mut rng).unwrap();
        let (_, s, _) = svd_thin(&x).unwrap();
        assert_eq!(numerical_rank(&s, 50, 50), 3);
    }

    #[test]
    fn lowrank_full_rank_case() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let x = synth_lowrank(12, 12, &mut rng).unwrap();
        let (_, s, _) = svd_thin(&x).unwrap();
        assert_eq!(numerical_rank(&s, 12, 12), 12);
    }

    #[test]
    fn lowrank_replay_is_deterministic() {
        let a = synth_lowrank(20, 2, &mut ChaCha8Rng::seed_from_u64(77)).unwrap();
        let b = synth_lowrank(20, 2, &mut ChaCha8Rng::seed_from_u64(77)).unwrap();
        assert_eq!(a.data(), b.data());
    }

    #[test]
    fn lowrank_rejects_bad_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(synth_lowrank(5, 0, &mut rng).is_err());
        assert!(synth_lowrank(5, 6, &mut rng).is_err());
    }

    #[test]
    fn image_is_unit_range_with_decaying_spectrum() {
        let img = synth_image(64, 48, 12);
        assert!(img.data().iter().all(|&v| (0.0..=1.0).contains(&v)));
        let (_, s, _) = svd_thin(&img).unwrap();
        // fast spectral decay: tail far below the head
        assert!(s[10] < 0.1 * s[0]);
    }
}
