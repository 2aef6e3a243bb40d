//! Dense linear-algebra primitives: truncated SVD, Moore–Penrose
//! pseudo-inverse, CUR reconstruction, incoherence and condition numbers.
//!
//! The SVD kernel is delegated to `faer`; everything public here is
//! contracted on accuracy, not on the factorization algorithm.

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

/// Orthonormality slack tolerated when validating factor matrices.
const ORTHONORMALITY_TOL: f64 = 1e-10;

/// Entrywise slack tolerated when validating that the CUR core equals the
/// corresponding slices of the row/column submatrices.
const CUR_CONSISTENCY_TOL: f64 = 1e-12;

/// Relative slack for the four Moore–Penrose identities of a cached
/// pseudo-inverse.
const PSEUDO_INVERSE_TOL: f64 = 1e-8;

/// Compact SVD triple of a rank-`r` object: `left * diag(s) * rightᵀ`.
#[derive(Debug, Clone)]
pub struct LowRankFactors {
    left: DenseMatrix,
    singular_values: Vec<f64>,
    right: DenseMatrix,
    rank: usize,
}

impl LowRankFactors {
    /// Validates orthonormal columns and a nonincreasing, nonnegative
    /// singular spectrum.
    pub fn new(left: DenseMatrix, singular_values: Vec<f64>, right: DenseMatrix) -> Result<Self> {
        let rank = singular_values.len();
        if rank == 0 {
            return Err(Error::EmptyInput("zero-rank factors".into()));
        }
        if left.cols() != rank || right.cols() != rank {
            return Err(Error::Dimension(format!(
                "factor widths ({}, {}) do not match rank {}",
                left.cols(),
                right.cols(),
                rank
            )));
        }
        for w in singular_values.windows(2) {
            if w[1] > w[0] {
                return Err(Error::InvalidParameter(
                    "singular values must be nonincreasing".into(),
                ));
            }
        }
        if singular_values.last().copied().unwrap_or(0.0) < 0.0 {
            return Err(Error::InvalidParameter(
                "singular values must be nonnegative".into(),
            ));
        }
        for (name, m) in [("left", &left), ("right", &right)] {
            let gram = m.tr_matmul(m);
            let dev = gram.sub(&DenseMatrix::identity(rank)).max_abs();
            if dev > ORTHONORMALITY_TOL {
                return Err(Error::InvalidParameter(format!(
                    "{name} factor columns deviate from orthonormality by {dev:.3e}"
                )));
            }
        }
        Ok(Self {
            left,
            singular_values,
            right,
            rank,
        })
    }

    pub fn left(&self) -> &DenseMatrix {
        &self.left
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    pub fn right(&self) -> &DenseMatrix {
        &self.right
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Materializes `left * diag(s) * rightᵀ`.
    pub fn reconstruct(&self) -> DenseMatrix {
        let mut scaled = self.left.clone();
        for i in 0..scaled.rows() {
            let row = scaled.row_mut(i);
            for (k, s) in self.singular_values.iter().enumerate() {
                row[k] *= s;
            }
        }
        scaled.matmul_tr(&self.right)
    }
}

/// Raw thin SVD `a = u * diag(s) * vᵀ` with `s` nonincreasing.
pub(crate) fn svd_thin(a: &DenseMatrix) -> Result<(DenseMatrix, Vec<f64>, DenseMatrix)> {
    let (m, n) = (a.rows(), a.cols());
    let k = m.min(n);
    let fm = faer::Mat::from_fn(m, n, |i, j| a.get(i, j));
    let svd = fm
        .thin_svd()
        .map_err(|e| Error::SvdFailure(format!("{e:?} on {m}x{n} input")))?;
    let fu = svd.U();
    let fs = svd.S();
    let fv = svd.V();

    // faer returns a nonincreasing spectrum; order defensively anyway so the
    // contract does not depend on backend internals.
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| fs[j].partial_cmp(&fs[i]).unwrap_or(std::cmp::Ordering::Equal));

    let u = DenseMatrix::from_fn(m, k, |i, j| fu[(i, order[j])]);
    let v = DenseMatrix::from_fn(n, k, |i, j| fv[(i, order[j])]);
    let s: Vec<f64> = order.iter().map(|&i| fs[i].max(0.0)).collect();
    Ok((u, s, v))
}

/// Default numerical-rank cutoff: `max(rows, cols) * eps * sigma_max`.
pub fn default_rank_tolerance(rows: usize, cols: usize, sigma_max: f64) -> f64 {
    rows.max(cols) as f64 * f64::EPSILON * sigma_max
}

/// Number of singular values above the default cutoff.
pub fn numerical_rank(singular_values: &[f64], rows: usize, cols: usize) -> usize {
    let sigma_max = singular_values.first().copied().unwrap_or(0.0);
    let tol = default_rank_tolerance(rows, cols, sigma_max);
    singular_values.iter().filter(|&&s| s > tol).count()
}

/// Best rank-`r` approximation factors of `a` (optimal in Frobenius norm).
/// If `rank(a) < r` the trailing singular values are zero.
pub fn truncated_svd(a: &DenseMatrix, r: usize) -> Result<LowRankFactors> {
    if !a.is_finite() {
        return Err(Error::NonFinite("truncated_svd input".into()));
    }
    if r == 0 || r > a.rows().min(a.cols()) {
        return Err(Error::Dimension(format!(
            "rank {} out of range for {}x{} input",
            r,
            a.rows(),
            a.cols()
        )));
    }
    let (u, s, v) = svd_thin(a)?;
    let left = u.select_cols(&(0..r).collect::<Vec<_>>());
    let right = v.select_cols(&(0..r).collect::<Vec<_>>());
    LowRankFactors::new(left, s[..r].to_vec(), right)
}

/// Moore–Penrose pseudo-inverse. Singular values at or below the effective
/// tolerance are treated as zero; `rank_tol == 0` selects the default
/// `max(rows, cols) * eps * sigma_max` cutoff.
pub fn pseudo_inverse(a: &DenseMatrix, rank_tol: f64) -> Result<DenseMatrix> {
    if !a.is_finite() {
        return Err(Error::NonFinite("pseudo_inverse input".into()));
    }
    if rank_tol < 0.0 {
        return Err(Error::InvalidParameter(
            "rank tolerance must be nonnegative".into(),
        ));
    }
    let (u, s, v) = svd_thin(a)?;
    let sigma_max = s.first().copied().unwrap_or(0.0);
    let tol = if rank_tol > 0.0 {
        rank_tol
    } else {
        default_rank_tolerance(a.rows(), a.cols(), sigma_max)
    };
    // a† = v * diag(1/s) * uᵀ with small singular values zeroed
    let mut v_scaled = v;
    for i in 0..v_scaled.rows() {
        let row = v_scaled.row_mut(i);
        for (k, &sv) in s.iter().enumerate() {
            row[k] *= if sv > tol { 1.0 / sv } else { 0.0 };
        }
    }
    Ok(v_scaled.matmul_tr(&u))
}

/// CUR decomposition state: column submatrix, core, row submatrix, the
/// cached core pseudo-inverse, and the defining index sets.
#[derive(Debug, Clone)]
pub struct CURFactors {
    cols_sub: DenseMatrix,
    core: DenseMatrix,
    rows_sub: DenseMatrix,
    core_pinv: DenseMatrix,
    row_indices: Vec<usize>,
    col_indices: Vec<usize>,
}

impl CURFactors {
    /// Builds and validates CUR factors; the core pseudo-inverse is computed
    /// here and cached.
    pub fn new(
        cols_sub: DenseMatrix,
        core: DenseMatrix,
        rows_sub: DenseMatrix,
        row_indices: Vec<usize>,
        col_indices: Vec<usize>,
    ) -> Result<Self> {
        let core_pinv = pseudo_inverse(&core, 0.0)?;
        Self::with_pinv(cols_sub, core, rows_sub, core_pinv, row_indices, col_indices)
    }

    /// As [`CURFactors::new`] but takes a precomputed pseudo-inverse.
    pub fn with_pinv(
        cols_sub: DenseMatrix,
        core: DenseMatrix,
        rows_sub: DenseMatrix,
        core_pinv: DenseMatrix,
        row_indices: Vec<usize>,
        col_indices: Vec<usize>,
    ) -> Result<Self> {
        if cols_sub.cols() != col_indices.len()
            || rows_sub.rows() != row_indices.len()
            || core.rows() != row_indices.len()
            || core.cols() != col_indices.len()
        {
            return Err(Error::Dimension(format!(
                "inconsistent CUR shapes: C {}x{}, U {}x{}, R {}x{}, |I|={}, |J|={}",
                cols_sub.rows(),
                cols_sub.cols(),
                core.rows(),
                core.cols(),
                rows_sub.rows(),
                rows_sub.cols(),
                row_indices.len(),
                col_indices.len()
            )));
        }
        if core_pinv.rows() != core.cols() || core_pinv.cols() != core.rows() {
            return Err(Error::Dimension("core pseudo-inverse shape".into()));
        }
        if row_indices.iter().any(|&i| i >= cols_sub.rows())
            || col_indices.iter().any(|&j| j >= rows_sub.cols())
        {
            return Err(Error::IndexOutOfRange("CUR index sets".into()));
        }
        let scale = core.max_abs().max(1.0);
        let c_slice = cols_sub.select_rows(&row_indices);
        let r_slice = rows_sub.select_cols(&col_indices);
        for (name, slice) in [("column", &c_slice), ("row", &r_slice)] {
            let dev = slice.sub(&core).max_abs();
            if dev > CUR_CONSISTENCY_TOL * scale {
                return Err(Error::InvalidParameter(format!(
                    "{name} submatrix disagrees with core by {dev:.3e}"
                )));
            }
        }
        verify_pseudo_inverse(&core, &core_pinv)?;
        Ok(Self {
            cols_sub,
            core,
            rows_sub,
            core_pinv,
            row_indices,
            col_indices,
        })
    }

    /// Slices `x` at `(I, J)` to form the factors directly.
    pub fn from_matrix(x: &DenseMatrix, row_indices: &[usize], col_indices: &[usize]) -> Result<Self> {
        if row_indices.iter().any(|&i| i >= x.rows()) || col_indices.iter().any(|&j| j >= x.cols()) {
            return Err(Error::IndexOutOfRange("CUR index sets".into()));
        }
        let cols_sub = x.select_cols(col_indices);
        let rows_sub = x.select_rows(row_indices);
        let core = x.submatrix(row_indices, col_indices);
        Self::new(
            cols_sub,
            core,
            rows_sub,
            row_indices.to_vec(),
            col_indices.to_vec(),
        )
    }

    /// All-zero factors on the given ambient shape; the completion solvers
    /// start from this state.
    pub fn zeros(
        ambient_rows: usize,
        ambient_cols: usize,
        row_indices: Vec<usize>,
        col_indices: Vec<usize>,
    ) -> Self {
        Self {
            cols_sub: DenseMatrix::zeros(ambient_rows, col_indices.len()),
            core: DenseMatrix::zeros(row_indices.len(), col_indices.len()),
            rows_sub: DenseMatrix::zeros(row_indices.len(), ambient_cols),
            core_pinv: DenseMatrix::zeros(col_indices.len(), row_indices.len()),
            row_indices,
            col_indices,
        }
    }

    pub fn cols_sub(&self) -> &DenseMatrix {
        &self.cols_sub
    }

    pub fn core(&self) -> &DenseMatrix {
        &self.core
    }

    pub fn rows_sub(&self) -> &DenseMatrix {
        &self.rows_sub
    }

    pub fn core_pinv(&self) -> &DenseMatrix {
        &self.core_pinv
    }

    pub fn row_indices(&self) -> &[usize] {
        &self.row_indices
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn ambient_rows(&self) -> usize {
        self.cols_sub.rows()
    }

    pub fn ambient_cols(&self) -> usize {
        self.rows_sub.cols()
    }
}

fn verify_pseudo_inverse(a: &DenseMatrix, pinv: &DenseMatrix) -> Result<()> {
    let scale_a = a.max_abs();
    let scale_p = pinv.max_abs();
    if scale_a == 0.0 {
        if scale_p != 0.0 {
            return Err(Error::InvalidParameter(
                "pseudo-inverse of the zero matrix must be zero".into(),
            ));
        }
        return Ok(());
    }
    let ap = a.matmul(pinv);
    let pa = pinv.matmul(a);
    let checks = [
        (ap.matmul(a).sub(a).max_abs(), scale_a),        // A A† A = A
        (pa.matmul(pinv).sub(pinv).max_abs(), scale_p),  // A† A A† = A†
        (ap.sub(&ap.transpose()).max_abs(), ap.max_abs().max(1.0)), // (A A†)ᵀ = A A†
        (pa.sub(&pa.transpose()).max_abs(), pa.max_abs().max(1.0)), // (A† A)ᵀ = A† A
    ];
    for (i, &(dev, scale)) in checks.iter().enumerate() {
        if dev > PSEUDO_INVERSE_TOL * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::InvalidParameter(format!(
                "Moore-Penrose identity {} violated: relative deviation {:.3e}",
                i + 1,
                dev / scale
            )));
        }
    }
    Ok(())
}

/// Materializes `C * U† * R`.
pub fn cur_reconstruct(f: &CURFactors) -> Result<DenseMatrix> {
    if f.core_pinv.cols() != f.core.rows() || f.rows_sub.rows() != f.core.rows() {
        return Err(Error::Dimension("CUR factor shapes".into()));
    }
    let pinv_rows = f.core_pinv.matmul(&f.rows_sub);
    Ok(f.cols_sub.matmul(&pinv_rows))
}

/// Incoherence parameters `(mu_row, mu_col)` of the factor matrices:
/// `mu_row = (rows / rank) * max_i ||left_i||²` and symmetrically for the
/// right factor.
pub fn incoherence(f: &LowRankFactors) -> (f64, f64) {
    let mu = |m: &DenseMatrix| {
        let max_sq = (0..m.rows())
            .map(|i| m.row(i).iter().map(|v| v * v).sum::<f64>())
            .fold(0.0f64, f64::max);
        m.rows() as f64 / f.rank() as f64 * max_sq
    };
    (mu(&f.left), mu(&f.right))
}

/// Ratio of the largest to the `r`-th singular value.
pub fn condition_number(f: &LowRankFactors) -> Result<f64> {
    let smallest = *f.singular_values().last().expect("nonempty spectrum");
    if smallest <= 0.0 {
        return Err(Error::RankDeficient(format!(
            "singular value {} of {} is zero",
            f.rank(),
            f.rank()
        )));
    }
    Ok(f.singular_values()[0] / smallest)
}
