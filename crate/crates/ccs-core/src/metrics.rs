//! Evaluation functionals: relative reconstruction error, SNR, rating
//! hit-rate and NMAE, and the link-prediction precision/AUC statistics.

use std::collections::HashSet;

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::CURFactors;
use crate::matrix::DenseMatrix;

/// Row block size used when streaming a CUR reconstruction against a dense
/// reference, keeping peak memory at `O(block * cols)`.
const ERROR_BLOCK_ROWS: usize = 256;

/// Rating scale with its granularity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatingScale {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl RatingScale {
    pub fn new(min: f64, max: f64, step: f64) -> Result<Self> {
        if !(max > min) || !(step > 0.0) || !min.is_finite() || !max.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "invalid rating scale [{min}, {max}] step {step}"
            )));
        }
        Ok(Self { min, max, step })
    }

    /// Rounds half-up to the nearest step on the scale grid, then clips to
    /// the scale bounds.
    pub fn round_clip(&self, value: f64) -> f64 {
        let k = ((value - self.min) / self.step + 0.5).floor();
        let max_k = ((self.max - self.min) / self.step).round();
        let k = k.clamp(0.0, max_k);
        self.min + k * self.step
    }
}

/// One prediction against its observed value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredPair {
    pub predicted: f64,
    pub actual: f64,
}

/// Relative Frobenius error of the CUR reconstruction against dense ground
/// truth, streamed in row blocks so no full reconstruction is allocated.
/// A zero ground truth yields zero for a zero estimate and infinity
/// otherwise.
pub fn relative_error(x: &DenseMatrix, f: &CURFactors) -> Result<f64> {
    if f.ambient_rows() != x.rows() || f.ambient_cols() != x.cols() {
        return Err(Error::Dimension(format!(
            "factors over {}x{} vs ground truth {}x{}",
            f.ambient_rows(),
            f.ambient_cols(),
            x.rows(),
            x.cols()
        )));
    }
    let pinv_rows = f.core_pinv().matmul(f.rows_sub());
    let mut err_sq = 0.0;
    let mut block_start = 0usize;
    while block_start < x.rows() {
        let block_end = (block_start + ERROR_BLOCK_ROWS).min(x.rows());
        let block: Vec<usize> = (block_start..block_end).collect();
        let recon_block = f.cols_sub().select_rows(&block).matmul(&pinv_rows);
        for (local, i) in (block_start..block_end).enumerate() {
            let truth = x.row(i);
            let est = recon_block.row(local);
            for (t, e) in truth.iter().zip(est.iter()) {
                let d = t - e;
                err_sq += d * d;
            }
        }
        block_start = block_end;
    }
    let norm = x.frobenius_norm();
    if norm == 0.0 {
        return Ok(if err_sq == 0.0 { 0.0 } else { f64::INFINITY });
    }
    Ok(err_sq.sqrt() / norm)
}

/// Signal-to-noise ratio in decibels, `20 log10(||x|| / ||x_hat - x||)`.
/// Identical inputs give positive infinity.
pub fn snr_db(x: &DenseMatrix, x_hat: &DenseMatrix) -> Result<f64> {
    if (x.rows(), x.cols()) != (x_hat.rows(), x_hat.cols()) {
        return Err(Error::Dimension("snr operands".into()));
    }
    let noise = x_hat.sub(x).frobenius_norm();
    if noise == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(20.0 * (x.frobenius_norm() / noise).log10())
}

/// Fraction of predictions that land on the actual rating after rounding
/// to the scale grid and clipping.
pub fn hit_rate(pairs: &[ScoredPair], scale: &RatingScale) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::EmptyInput("hit_rate needs at least one pair".into()));
    }
    let tol = scale.step * 1e-6;
    let hits = pairs
        .iter()
        .filter(|p| (scale.round_clip(p.predicted) - p.actual).abs() <= tol)
        .count();
    Ok(hits as f64 / pairs.len() as f64)
}

/// Mean absolute error of the raw predictions, normalized by the rating
/// range.
pub fn nmae(pairs: &[ScoredPair], scale: &RatingScale) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::EmptyInput("nmae needs at least one pair".into()));
    }
    let total: f64 = pairs.iter().map(|p| (p.predicted - p.actual).abs()).sum();
    Ok(total / (pairs.len() as f64 * (scale.max - scale.min)))
}

/// Fraction of the top-`l` scored positions that belong to the test set.
/// Ties at the boundary break by position for determinism.
pub fn precision_at_l(
    scores: &[((usize, usize), f64)],
    test_set: &HashSet<(usize, usize)>,
    l: usize,
) -> Result<f64> {
    if l == 0 {
        return Err(Error::InvalidParameter("top-list size must be positive".into()));
    }
    if l > scores.len() {
        return Err(Error::InvalidParameter(format!(
            "top-list size {} exceeds the {} scored candidates",
            l,
            scores.len()
        )));
    }
    let mut ranked: Vec<&((usize, usize), f64)> = scores.iter().collect();
    ranked.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.0.cmp(&b.0))
    });
    let hits = ranked[..l].iter().filter(|(pos, _)| test_set.contains(pos)).count();
    Ok(hits as f64 / l as f64)
}

/// Sampled pairwise ranking statistic: draws `comparisons` independent
/// (missing, nonexistent) score pairs and returns
/// `(wins + 0.5 ties) / comparisons`.
pub fn auc_sampled<R: Rng>(
    missing: &[f64],
    nonexistent: &[f64],
    comparisons: usize,
    rng: &mut R,
) -> Result<f64> {
    if missing.is_empty() || nonexistent.is_empty() {
        return Err(Error::EmptyInput("auc needs both score lists nonempty".into()));
    }
    if comparisons == 0 {
        return Err(Error::InvalidParameter("need at least one comparison".into()));
    }
    let mut wins = 0usize;
    let mut ties = 0usize;
    for _ in 0..comparisons {
        let m = missing[rng.gen_range(0..missing.len())];
        let n = nonexistent[rng.gen_range(0..nonexistent.len())];
        if m > n {
            wins += 1;
        } else if m == n {
            ties += 1;
        }
    }
    Ok((wins as f64 + 0.5 * ties as f64) / comparisons as f64)
}

/// Exact pairwise ranking statistic over all `|missing| * |nonexistent|`
/// pairs.
pub fn auc_exact(missing: &[f64], nonexistent: &[f64]) -> Result<f64> {
    if missing.is_empty() || nonexistent.is_empty() {
        return Err(Error::EmptyInput("auc needs both score lists nonempty".into()));
    }
    let mut score = 0.0;
    for &m in missing {
        for &n in nonexistent {
            if m > n {
                score += 1.0;
            } else if m == n {
                score += 0.5;
            }
        }
    }
    Ok(score / (missing.len() as f64 * nonexistent.len() as f64))
}

/// Serializes named metric values as CSV rows `metric,value`.
pub fn metrics_csv(values: &[(&str, f64)]) -> String {
    let mut out = String::from("metric,value\n");
    for (name, value) in values {
        out.push_str(&format!("{name},{value}\n"));
    }
    out
}
