//! Uniform-sampling baseline solver (singular value projection) and the
//! two-step completion route: complete the row and column submatrices
//! independently with the sub-solver, then assemble through the CUR
//! identity.

use crate::error::{Error, Result};
use crate::icurc::StepSize;
use crate::linalg::{numerical_rank, pseudo_inverse, svd_thin, truncated_svd};
use crate::matrix::DenseMatrix;
use crate::sampling::{CrossSample, ObservationMultiset};

const DIVERGENCE_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubSolverKind {
    Svp,
}

/// Configuration for the sub-solver used on uniform observation sets.
#[derive(Debug, Clone)]
pub struct SubSolverSpec {
    pub kind: SubSolverKind,
    pub rank: usize,
    pub eps: f64,
    pub max_iter: usize,
    pub step: StepSize,
}

impl SubSolverSpec {
    pub fn svp(rank: usize) -> Self {
        // The observed residual is a squared-scale statistic and the
        // two-step assembly amplifies submatrix error through the core
        // pseudo-inverse, so the sub-solver default runs much tighter
        // than the cross-concentrated solver's stop.
        Self {
            kind: SubSolverKind::Svp,
            rank,
            eps: 1e-10,
            max_iter: 5000,
            step: StepSize::Auto,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.rank == 0 {
            return Err(Error::InvalidParameter("target rank must be positive".into()));
        }
        if !(self.eps > 0.0) {
            return Err(Error::InvalidParameter("eps must be positive".into()));
        }
        if let StepSize::Fixed(v) = self.step {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("step size {v} must be positive")));
            }
        }
        Ok(())
    }
}

/// Diagnostics of one SVP run.
#[derive(Debug, Clone)]
pub struct SvpTrace {
    pub residuals: Vec<f64>,
    pub converged: bool,
    pub diverged: bool,
    /// Whether the observed residual was nonincreasing over the whole run.
    pub monotone: bool,
}

impl SvpTrace {
    pub fn iterations(&self) -> usize {
        self.residuals.len().saturating_sub(1)
    }
}

/// Hard-thresholded gradient descent on the observed entries: a gradient
/// step on the observed residual followed by rank-r truncation. The "auto"
/// step is the inverse observation rate.
pub fn svp_solve(omega: &ObservationMultiset, spec: &SubSolverSpec) -> Result<(DenseMatrix, SvpTrace)> {
    spec.validate()?;
    if omega.is_empty() {
        return Err(Error::EmptyInput("svp needs at least one observation".into()));
    }
    let (m, n) = (omega.ambient_rows(), omega.ambient_cols());
    if spec.rank > m.min(n) {
        return Err(Error::Dimension(format!(
            "rank {} exceeds min dimension of {}x{}",
            spec.rank, m, n
        )));
    }
    let step = match spec.step {
        StepSize::Fixed(v) => v,
        StepSize::Auto => (m * n) as f64 / omega.total_draws() as f64,
    };
    let denom = omega.weighted_self_inner();
    let mut x = DenseMatrix::zeros(m, n);
    let mut residuals = Vec::new();
    let mut converged = false;
    let mut diverged = false;

    if denom == 0.0 {
        return Ok((
            x,
            SvpTrace {
                residuals: vec![0.0],
                converged: true,
                diverged: false,
                monotone: true,
            },
        ));
    }

    loop {
        let mut num = 0.0;
        for e in omega.entries() {
            let d = e.value - x.get(e.row, e.col);
            num += e.multiplicity as f64 * d * d;
        }
        let e_k = num / denom;
        residuals.push(e_k);
        if e_k <= spec.eps {
            converged = true;
            break;
        }
        if !e_k.is_finite() || e_k > DIVERGENCE_LIMIT {
            diverged = true;
            break;
        }
        if residuals.len() > spec.max_iter {
            break;
        }
        // Each distinct observed position contributes once to the gradient;
        // repeat draws only affect rates and the residual weighting. See
        // the matching note on the cross-concentrated solver.
        for e in omega.entries() {
            let cur = x.get(e.row, e.col);
            x.set(e.row, e.col, cur + step * (e.value - cur));
        }
        x = truncated_svd(&x, spec.rank)?.reconstruct();
    }

    let monotone = residuals.windows(2).all(|w| w[1] <= w[0] + 1e-15);
    Ok((
        x,
        SvpTrace {
            residuals,
            converged,
            diverged,
            monotone,
        },
    ))
}

/// Output of two-step completion.
#[derive(Debug, Clone)]
pub struct TscResult {
    pub estimate: DenseMatrix,
    /// Numerical rank of the assembled core submatrix; below the target
    /// rank the CUR identity cannot hold.
    pub core_rank: usize,
    pub row_trace: SvpTrace,
    pub col_trace: SvpTrace,
}

fn restrict_rows(omega: &ObservationMultiset, rows: &[usize], ambient_cols: usize) -> ObservationMultiset {
    let mut local = vec![usize::MAX; omega.ambient_rows()];
    for (li, &i) in rows.iter().enumerate() {
        local[i] = li;
    }
    let entries = omega
        .entries()
        .iter()
        .map(|e| {
            let mut out = *e;
            out.row = local[e.row];
            out
        })
        .collect();
    ObservationMultiset::new(rows.len(), ambient_cols, entries)
        .expect("row-restricted multiset stays valid")
}

fn restrict_cols(omega: &ObservationMultiset, cols: &[usize], ambient_rows: usize) -> ObservationMultiset {
    let mut local = vec![usize::MAX; omega.ambient_cols()];
    for (lj, &j) in cols.iter().enumerate() {
        local[j] = lj;
    }
    let entries = omega
        .entries()
        .iter()
        .map(|e| {
            let mut out = *e;
            out.col = local[e.col];
            out
        })
        .collect();
    ObservationMultiset::new(ambient_rows, cols.len(), entries)
        .expect("column-restricted multiset stays valid")
}

/// Two-step completion: complete the row and column submatrices as two
/// independent uniform-observation problems, take the core from the
/// completed column submatrix, and assemble the full estimate through the
/// core pseudo-inverse.
pub fn tsc_solve(cs: &CrossSample, spec: &SubSolverSpec) -> Result<TscResult> {
    spec.validate()?;
    if cs.row_indices().len() < spec.rank || cs.col_indices().len() < spec.rank {
        return Err(Error::InvalidParameter(format!(
            "rank {} recovery needs at least that many selected rows and columns (got {} and {})",
            spec.rank,
            cs.row_indices().len(),
            cs.col_indices().len()
        )));
    }
    let rows_problem = restrict_rows(cs.omega_rows(), cs.row_indices(), cs.ambient_cols());
    let cols_problem = restrict_cols(cs.omega_cols(), cs.col_indices(), cs.ambient_rows());

    let (rows_out, cols_out) = rayon::join(
        || svp_solve(&rows_problem, spec),
        || svp_solve(&cols_problem, spec),
    );
    let (rows_hat, row_trace) = rows_out?;
    let (cols_hat, col_trace) = cols_out?;

    let core = cols_hat.select_rows(cs.row_indices());
    let (_, s, _) = svd_thin(&core)?;
    let core_rank = numerical_rank(&s, core.rows(), core.cols());
    let core_pinv = pseudo_inverse(&core, 0.0)?;
    let estimate = cols_hat.matmul(&core_pinv.matmul(&rows_hat));
    Ok(TscResult {
        estimate,
        core_rank,
        row_trace,
        col_trace,
    })
}
