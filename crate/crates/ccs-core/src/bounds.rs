//! Sample-complexity calculators and empirical verifiers for the
//! guarantees behind cross-concentrated sampling: how many uniformly
//! drawn row/column indices make the core full-rank, how many entry
//! samples suffice for unique recovery, and how incoherence and
//! conditioning transfer to uniformly sampled row submatrices.
//!
//! Logarithms are natural throughout.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{condition_number, cur_reconstruct, incoherence, numerical_rank, svd_thin, truncated_svd, CURFactors};
use crate::matrix::DenseMatrix;

/// Relative slack used when checking analytic inequalities empirically,
/// so exact-equality cases are not rejected by rounding noise.
const INEQUALITY_SLACK: f64 = 1.0 + 1e-9;

/// Index-sampling requirement for a full-rank core: row/column counts and
/// the failure probability bound `4r / n²`.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexCountBound {
    pub rows: usize,
    pub cols: usize,
    pub failure_probability: f64,
}

/// How many uniformly-with-replacement drawn rows and columns guarantee
/// that the intersection submatrix inherits the full rank, with failure
/// probability at most `4r / n²`.
pub fn index_sampling_requirement(n: f64, r: usize, mu1: f64, mu2: f64) -> IndexCountBound {
    let log_n = n.ln();
    IndexCountBound {
        rows: (10.0 * mu1 * r as f64 * log_n).ceil() as usize,
        cols: (10.0 * mu2 * r as f64 * log_n).ceil() as usize,
        failure_probability: 4.0 * r as f64 / (n * n),
    }
}

/// Sufficient sample sizes for unique recovery from a cross-concentrated
/// sample, with the accompanying success-probability lower bound.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub required_rows: usize,
    pub required_cols: usize,
    pub required_omega_rows: usize,
    pub required_omega_cols: usize,
    pub success_probability_lower_bound: f64,
    /// The probability expression was nonpositive before clamping; the
    /// bound is uninformative at this problem size.
    pub vacuous: bool,
    pub n: f64,
    pub r: usize,
    pub mu1: f64,
    pub mu2: f64,
    pub kappa: f64,
    pub beta: f64,
}

impl BoundReport {
    /// Flat `key=value` text block.
    pub fn to_kv_text(&self) -> String {
        format!(
            "n={}\nr={}\nmu1={}\nmu2={}\nkappa={}\nbeta={}\n\
             required_rows={}\nrequired_cols={}\n\
             required_omega_rows={}\nrequired_omega_cols={}\n\
             success_probability_lower_bound={}\nvacuous={}\n",
            self.n,
            self.r,
            self.mu1,
            self.mu2,
            self.kappa,
            self.beta,
            self.required_rows,
            self.required_cols,
            self.required_omega_rows,
            self.required_omega_cols,
            self.success_probability_lower_bound,
            self.vacuous
        )
    }
}

/// Evaluates the sufficient index and entry sample sizes
/// `|I|, |J| >= 512 β κ² r² μ1 μ2 log²(n)` and
/// `|Ω| >= 128 β κ² r² μ1 μ2 (n + |I|) log²(2n)`, plus the success
/// probability lower bound, clamped to `[0, 1]`.
pub fn recovery_sample_bounds(
    n: f64,
    r: usize,
    mu1: f64,
    mu2: f64,
    kappa: f64,
    beta: f64,
) -> Result<BoundReport> {
    if beta <= 1.0 {
        return Err(Error::InvalidParameter(format!("beta {beta} must exceed 1")));
    }
    if n <= 1.0 || r == 0 || mu1 <= 0.0 || mu2 <= 0.0 || kappa < 1.0 {
        return Err(Error::InvalidParameter(
            "need n > 1, r >= 1, mu > 0, kappa >= 1".into(),
        ));
    }
    let rf = r as f64;
    let log_n = n.ln();
    let log_2n = (2.0 * n).ln();
    let shared = kappa * kappa * rf * rf * mu1 * mu2;
    let index_bound = (512.0 * beta * shared * log_n * log_n).ceil() as usize;
    let omega = |index_count: usize| {
        (128.0 * beta * shared * (n + index_count as f64) * log_2n * log_2n).ceil() as usize
    };
    let required_rows = index_bound;
    let required_cols = index_bound;

    let mut probability = 1.0
        - 2.0 * rf / n.powf(0.4 * rf * log_n)
        - 2.0 / n.powf(2.0 * beta.sqrt() - 2.0);
    for mu in [mu1, mu2] {
        probability -=
            6.0 * log_n / (n + mu * rf * rf * log_n * log_n).powf(2.0 * beta - 2.0);
    }
    let vacuous = probability <= 0.0;

    Ok(BoundReport {
        required_rows,
        required_cols,
        required_omega_rows: omega(required_rows),
        required_omega_cols: omega(required_cols),
        success_probability_lower_bound: probability.clamp(0.0, 1.0),
        vacuous,
        n,
        r,
        mu1,
        mu2,
        kappa,
        beta,
    })
}

/// Empirical report on how incoherence and conditioning transfer from a
/// matrix to uniformly sampled (without replacement) row submatrices.
#[derive(Debug, Clone)]
pub struct RowTransferReport {
    pub trials: usize,
    /// Fraction of trials where all three transfer inequalities held.
    pub satisfied_fraction: f64,
    pub row_incoherence_fraction: f64,
    pub col_incoherence_fraction: f64,
    pub condition_fraction: f64,
    /// Whether `row_count >= mu1 r² log²(n)`, the hypothesis under which
    /// the transfer bounds are stated. Reported, not enforced.
    pub hypothesis_met: bool,
}

/// Samples `row_count` rows without replacement `trials` times and checks
/// the transfer inequalities `mu1(R) <= 4 κ² mu1`, `mu2(R) <= mu2`,
/// `κ(R) <= 2 sqrt(mu1 r) κ` against the parent matrix's parameters.
pub fn verify_row_transfer<R: Rng>(
    x: &DenseMatrix,
    r: usize,
    trials: usize,
    row_count: usize,
    rng: &mut R,
) -> Result<RowTransferReport> {
    if row_count == 0 || row_count > x.rows() {
        return Err(Error::InvalidParameter(format!(
            "row_count {} outside 1..={}",
            row_count,
            x.rows()
        )));
    }
    if trials == 0 {
        return Err(Error::InvalidParameter("need at least one trial".into()));
    }
    let parent = truncated_svd(x, r)?;
    let (mu1, mu2) = incoherence(&parent);
    let kappa = condition_number(&parent)?;
    let n = x.rows() as f64;
    let hypothesis_met = row_count as f64 >= mu1 * (r * r) as f64 * n.ln().powi(2);

    let mut ok_all = 0usize;
    let mut ok_mu1 = 0usize;
    let mut ok_mu2 = 0usize;
    let mut ok_kappa = 0usize;
    for _ in 0..trials {
        let mut picked = rand::seq::index::sample(rng, x.rows(), row_count).into_vec();
        picked.sort_unstable();
        let sub = x.select_rows(&picked);
        let factors = truncated_svd(&sub, r)?;
        let (mu1_sub, mu2_sub) = incoherence(&factors);
        let cond_ok = match condition_number(&factors) {
            Ok(kappa_sub) => kappa_sub <= 2.0 * (mu1 * r as f64).sqrt() * kappa * INEQUALITY_SLACK,
            Err(_) => false,
        };
        let mu1_ok = mu1_sub <= 4.0 * kappa * kappa * mu1 * INEQUALITY_SLACK;
        let mu2_ok = mu2_sub <= mu2 * INEQUALITY_SLACK;
        ok_mu1 += mu1_ok as usize;
        ok_mu2 += mu2_ok as usize;
        ok_kappa += cond_ok as usize;
        ok_all += (mu1_ok && mu2_ok && cond_ok) as usize;
    }
    let frac = |k: usize| k as f64 / trials as f64;
    Ok(RowTransferReport {
        trials,
        satisfied_fraction: frac(ok_all),
        row_incoherence_fraction: frac(ok_mu1),
        col_incoherence_fraction: frac(ok_mu2),
        condition_fraction: frac(ok_kappa),
        hypothesis_met,
    })
}

/// Result of checking whether the CUR identity holds for given index sets.
#[derive(Debug, Clone)]
pub struct CurExactness {
    /// Numerical rank of the core equals the target rank.
    pub holds: bool,
    pub core_rank: usize,
    pub relative_error: f64,
}

/// The CUR identity holds exactly when the core carries the full target
/// rank; reports the core's numerical rank and the achieved relative
/// reconstruction error.
pub fn cur_exactness_check(
    x: &DenseMatrix,
    row_indices: &[usize],
    col_indices: &[usize],
    r: usize,
) -> Result<CurExactness> {
    let core = x.submatrix(row_indices, col_indices);
    let (_, s, _) = svd_thin(&core)?;
    let core_rank = numerical_rank(&s, core.rows(), core.cols());
    let factors = CURFactors::from_matrix(x, row_indices, col_indices)?;
    let recon = cur_reconstruct(&factors)?;
    let norm = x.frobenius_norm();
    let relative_error = if norm == 0.0 {
        0.0
    } else {
        recon.sub(x).frobenius_norm() / norm
    };
    Ok(CurExactness {
        holds: core_rank == r,
        core_rank,
        relative_error,
    })
}
