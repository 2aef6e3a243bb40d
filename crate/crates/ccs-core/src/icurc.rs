//! Iterative CUR completion for cross-concentrated samples.
//!
//! The solver runs projected gradient descent on the three blocks of the
//! cross — the row submatrix outside the selected columns, the column
//! submatrix outside the selected rows, and the intersection core, which is
//! re-projected to rank `r` by truncated SVD each iteration. The implied
//! full iterate is never materialized: every slice of it the updates need
//! is reconstructed from the current factors, so one iteration costs
//! `O(n * r * (|I| + |J|))` flops and `O(n * (|I| + |J|))` memory.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::linalg::{self, CURFactors, truncated_svd};
use crate::matrix::DenseMatrix;
use crate::sampling::CrossSample;

/// Residuals beyond this are treated as divergence and stop the iteration.
const DIVERGENCE_LIMIT: f64 = 1e12;

/// Step size selection for one block update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSize {
    /// Reciprocal of the relevant observation rate.
    Auto,
    Fixed(f64),
}

/// Solver configuration.
#[derive(Debug, Clone)]
pub struct IcurcConfig {
    pub rank: usize,
    pub step_rows: StepSize,
    pub step_cols: StepSize,
    pub step_core: StepSize,
    /// Target precision for the observed-entry residual.
    pub eps: f64,
    pub max_iter: usize,
    /// Record per-iteration wall time in the trace.
    pub record_timing: bool,
}

impl IcurcConfig {
    pub fn new(rank: usize) -> Self {
        Self {
            rank,
            step_rows: StepSize::Auto,
            step_cols: StepSize::Auto,
            step_core: StepSize::Auto,
            eps: 1e-5,
            max_iter: 1000,
            record_timing: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.rank == 0 {
            return Err(Error::InvalidParameter("target rank must be positive".into()));
        }
        if !(self.eps > 0.0) {
            return Err(Error::InvalidParameter("eps must be positive".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter must be positive".into()));
        }
        for s in [self.step_rows, self.step_cols, self.step_core] {
            if let StepSize::Fixed(v) = s {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::InvalidParameter(format!("step size {v} must be positive")));
                }
            }
        }
        Ok(())
    }
}

/// Convergence diagnostics for one solve.
#[derive(Debug, Clone)]
pub struct IcurcTrace {
    /// Observed-entry residual per iteration, starting at iteration zero;
    /// length is always `iterations + 1`.
    pub residuals: Vec<f64>,
    pub converged: bool,
    /// The residual blew up past the divergence limit.
    pub diverged: bool,
    pub per_iter_seconds: Option<Vec<f64>>,
    /// No draw landed on the intersection submatrix, so its update had no
    /// gradient signal.
    pub core_unobserved: bool,
}

impl IcurcTrace {
    pub fn iterations(&self) -> usize {
        self.residuals.len().saturating_sub(1)
    }

    /// Serializes as CSV lines `iter,e_k,seconds` (seconds empty when the
    /// run was not timed).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iter,e_k,seconds\n");
        for (k, e) in self.residuals.iter().enumerate() {
            let secs = self
                .per_iter_seconds
                .as_ref()
                .and_then(|t| if k == 0 { Some(0.0) } else { t.get(k - 1).copied() })
                .map(|s| s.to_string())
                .unwrap_or_default();
            out.push_str(&format!("{k},{e},{secs}\n"));
        }
        out
    }
}

/// Recommended step sizes `(1/p1, 1/p2, 1/(p1 + p2))` from the observation
/// rates of the two cross multisets.
pub fn default_step_sizes(cs: &CrossSample) -> Result<(f64, f64, f64)> {
    if cs.omega_rows().is_empty() || cs.omega_cols().is_empty() {
        return Err(Error::EmptyInput("cross multiset has zero draws".into()));
    }
    let p1 = cs.rate_rows();
    let p2 = cs.rate_cols();
    Ok((1.0 / p1, 1.0 / p2, 1.0 / (p1 + p2)))
}

/// Observation lists rewritten in submatrix-local coordinates, fixed for
/// the whole solve.
///
/// Residual inner products weight entries by their draw multiplicity.
/// Gradient updates do not: each distinct observed position contributes
/// once per cross side (so intersection cells observed by both sides carry
/// weight two). Multiplying the gradient by per-cell repeat counts makes
/// the per-entry update factor `eta * m` exceed the stable range whenever
/// sampling is dense enough for repeats, and the iteration diverges; the
/// recommended `1/p` steps are calibrated for unit-weight contributions.
struct LocalObservations {
    /// Row-side entries: (local row, global col, value, multiplicity).
    rows_all: Vec<(usize, usize, f64, f64)>,
    /// Column-side entries: (global row, local col, value, multiplicity).
    cols_all: Vec<(usize, usize, f64, f64)>,
    /// Row-side positions outside the selected columns.
    rows_outer: Vec<(usize, usize, f64)>,
    /// Column-side positions outside the selected rows.
    cols_outer: Vec<(usize, usize, f64)>,
    /// Intersection positions (local row, local col, value, source count).
    core: Vec<(usize, usize, f64, f64)>,
    /// Multiplicity-weighted inner product of observed data with itself.
    denom: f64,
}

impl LocalObservations {
    fn build(cs: &CrossSample) -> Self {
        let row_local = local_map(cs.row_indices(), cs.ambient_rows());
        let col_local = local_map(cs.col_indices(), cs.ambient_cols());

        let mut rows_all = Vec::with_capacity(cs.omega_rows().len());
        let mut cols_all = Vec::with_capacity(cs.omega_cols().len());
        let mut rows_outer = Vec::new();
        let mut cols_outer = Vec::new();
        let mut core: std::collections::BTreeMap<(usize, usize), (f64, f64)> =
            std::collections::BTreeMap::new();
        let mut denom = 0.0;

        for e in cs.omega_rows().entries() {
            let li = row_local[e.row].expect("row-side entry within selected rows");
            let w = e.multiplicity as f64;
            rows_all.push((li, e.col, e.value, w));
            denom += w * e.value * e.value;
            match col_local[e.col] {
                Some(lj) => {
                    let slot = core.entry((li, lj)).or_insert((e.value, 0.0));
                    slot.1 += 1.0;
                }
                None => rows_outer.push((li, e.col, e.value)),
            }
        }
        for e in cs.omega_cols().entries() {
            let lj = col_local[e.col].expect("column-side entry within selected columns");
            let w = e.multiplicity as f64;
            cols_all.push((e.row, lj, e.value, w));
            denom += w * e.value * e.value;
            match row_local[e.row] {
                Some(li) => {
                    let slot = core.entry((li, lj)).or_insert((e.value, 0.0));
                    slot.1 += 1.0;
                }
                None => cols_outer.push((e.row, lj, e.value)),
            }
        }

        let core = core
            .into_iter()
            .map(|((li, lj), (v, w))| (li, lj, v, w))
            .collect();
        Self {
            rows_all,
            cols_all,
            rows_outer,
            cols_outer,
            core,
            denom,
        }
    }
}

fn local_map(indices: &[usize], ambient: usize) -> Vec<Option<usize>> {
    let mut map = vec![None; ambient];
    for (local, &global) in indices.iter().enumerate() {
        map[global] = Some(local);
    }
    map
}

/// Factor state carried across iterations: the core, the full row and
/// column submatrices, and the thresholded SVD of the core used to project
/// onto its column/row spaces and to apply its pseudo-inverse.
struct FactorState {
    core: DenseMatrix,
    rows_sub: DenseMatrix,
    cols_sub: DenseMatrix,
    core_left: DenseMatrix,
    core_right: DenseMatrix,
    core_sinv: Vec<f64>,
}

impl FactorState {
    fn zeros(ambient_rows: usize, ambient_cols: usize, i_len: usize, j_len: usize) -> Self {
        Self {
            core: DenseMatrix::zeros(i_len, j_len),
            rows_sub: DenseMatrix::zeros(i_len, ambient_cols),
            cols_sub: DenseMatrix::zeros(ambient_rows, j_len),
            core_left: DenseMatrix::zeros(i_len, 0),
            core_right: DenseMatrix::zeros(j_len, 0),
            core_sinv: Vec::new(),
        }
    }

    fn from_factors(f: &CURFactors) -> Result<Self> {
        let (left, right, sinv) = thresholded_core_svd(f.core())?;
        Ok(Self {
            core: f.core().clone(),
            rows_sub: f.rows_sub().clone(),
            cols_sub: f.cols_sub().clone(),
            core_left: left,
            core_right: right,
            core_sinv: sinv,
        })
    }

    /// Rows of the implied iterate at the selected row indices:
    /// project the row submatrix onto the core's column space.
    fn row_slice(&self) -> DenseMatrix {
        if self.core_sinv.is_empty() {
            return DenseMatrix::zeros(self.rows_sub.rows(), self.rows_sub.cols());
        }
        let inner = self.core_left.tr_matmul(&self.rows_sub);
        self.core_left.matmul(&inner)
    }

    /// Columns of the implied iterate at the selected column indices.
    fn col_slice(&self) -> DenseMatrix {
        if self.core_sinv.is_empty() {
            return DenseMatrix::zeros(self.cols_sub.rows(), self.cols_sub.cols());
        }
        let inner = self.cols_sub.matmul(&self.core_right);
        inner.matmul_tr(&self.core_right)
    }

    fn core_pinv(&self) -> DenseMatrix {
        if self.core_sinv.is_empty() {
            return DenseMatrix::zeros(self.core.cols(), self.core.rows());
        }
        let mut scaled = self.core_right.clone();
        for i in 0..scaled.rows() {
            let row = scaled.row_mut(i);
            for (k, s) in self.core_sinv.iter().enumerate() {
                row[k] *= s;
            }
        }
        scaled.matmul_tr(&self.core_left)
    }

    fn into_cur_factors(self, row_indices: &[usize], col_indices: &[usize]) -> Result<CURFactors> {
        let pinv = self.core_pinv();
        CURFactors::with_pinv(
            self.cols_sub,
            self.core,
            self.rows_sub,
            pinv,
            row_indices.to_vec(),
            col_indices.to_vec(),
        )
    }
}

fn thresholded_core_svd(core: &DenseMatrix) -> Result<(DenseMatrix, DenseMatrix, Vec<f64>)> {
    let (u, s, v) = linalg::svd_thin(core)?;
    let tol = linalg::default_rank_tolerance(core.rows(), core.cols(), s.first().copied().unwrap_or(0.0));
    let kept: Vec<usize> = (0..s.len()).filter(|&k| s[k] > tol).collect();
    let left = u.select_cols(&kept);
    let right = v.select_cols(&kept);
    let sinv = kept.iter().map(|&k| 1.0 / s[k]).collect();
    Ok((left, right, sinv))
}

fn residual_from_slices(
    obs: &LocalObservations,
    row_slice: &DenseMatrix,
    col_slice: &DenseMatrix,
) -> f64 {
    let mut num = 0.0;
    for &(li, j, v, w) in &obs.rows_all {
        let d = v - row_slice.get(li, j);
        num += w * d * d;
    }
    for &(i, lj, v, w) in &obs.cols_all {
        let d = v - col_slice.get(i, lj);
        num += w * d * d;
    }
    num / obs.denom
}

/// One projected-gradient iteration given the current iterate's slices.
fn iterate(
    state: &FactorState,
    obs: &LocalObservations,
    row_slice: DenseMatrix,
    col_slice: DenseMatrix,
    steps: (f64, f64, f64),
    rank: usize,
    row_indices: &[usize],
    col_indices: &[usize],
) -> Result<FactorState> {
    let (eta_rows, eta_cols, eta_core) = steps;

    // Gradient step on the row submatrix outside the selected columns.
    let mut rows_next = row_slice;
    for &(li, j, v) in &obs.rows_outer {
        let cur = rows_next.get(li, j);
        rows_next.set(li, j, cur + eta_rows * (v - cur));
    }

    // Gradient step on the column submatrix outside the selected rows.
    let mut cols_next = col_slice;
    for &(i, lj, v) in &obs.cols_outer {
        let cur = cols_next.get(i, lj);
        cols_next.set(i, lj, cur + eta_cols * (v - cur));
    }

    // Gradient step on the core, then rank-r projection.
    let mut core_pre = state.core.clone();
    for &(li, lj, v, w) in &obs.core {
        let cur = core_pre.get(li, lj);
        core_pre.set(li, lj, cur + eta_core * w * (v - cur));
    }
    if !core_pre.is_finite() {
        return Err(Error::NonFinite("core update overflowed".into()));
    }
    let projected = truncated_svd(&core_pre, rank)?;
    let core_next = projected.reconstruct();

    // Both submatrices agree with the new core on the intersection.
    rows_next.set_cols(col_indices, &core_next);
    cols_next.set_rows(row_indices, &core_next);

    let tol = linalg::default_rank_tolerance(
        core_next.rows(),
        core_next.cols(),
        projected.singular_values()[0],
    );
    let kept: Vec<usize> = (0..rank)
        .filter(|&k| projected.singular_values()[k] > tol)
        .collect();
    let core_left = projected.left().select_cols(&kept);
    let core_right = projected.right().select_cols(&kept);
    let core_sinv = kept
        .iter()
        .map(|&k| 1.0 / projected.singular_values()[k])
        .collect();

    Ok(FactorState {
        core: core_next,
        rows_sub: rows_next,
        cols_sub: cols_next,
        core_left,
        core_right,
        core_sinv,
    })
}

fn resolve_steps(cs: &CrossSample, config: &IcurcConfig) -> Result<(f64, f64, f64)> {
    let needs_auto = matches!(config.step_rows, StepSize::Auto)
        || matches!(config.step_cols, StepSize::Auto)
        || matches!(config.step_core, StepSize::Auto);
    let auto = if needs_auto {
        default_step_sizes(cs)?
    } else {
        (0.0, 0.0, 0.0)
    };
    let pick = |s: StepSize, a: f64| match s {
        StepSize::Auto => a,
        StepSize::Fixed(v) => v,
    };
    Ok((
        pick(config.step_rows, auto.0),
        pick(config.step_cols, auto.1),
        pick(config.step_core, auto.2),
    ))
}

fn check_preconditions(cs: &CrossSample, config: &IcurcConfig) -> Result<()> {
    config.validate()?;
    if cs.row_indices().len() < config.rank || cs.col_indices().len() < config.rank {
        return Err(Error::InvalidParameter(format!(
            "rank {} recovery needs at least that many selected rows and columns (got {} and {})",
            config.rank,
            cs.row_indices().len(),
            cs.col_indices().len()
        )));
    }
    Ok(())
}

/// Observed-entry relative residual of the iterate implied by `factors`,
/// evaluated without materializing the full matrix. Returns zero when all
/// observed values are zero.
pub fn residual(cs: &CrossSample, factors: &CURFactors) -> Result<f64> {
    let obs = LocalObservations::build(cs);
    if obs.denom == 0.0 {
        return Ok(0.0);
    }
    let state = FactorState::from_factors(factors)?;
    Ok(residual_from_slices(&obs, &state.row_slice(), &state.col_slice()))
}

/// One solver step applied to an explicit factor state.
pub fn step(cs: &CrossSample, state: &CURFactors, config: &IcurcConfig) -> Result<CURFactors> {
    check_preconditions(cs, config)?;
    let obs = LocalObservations::build(cs);
    let steps = resolve_steps(cs, config)?;
    let fs = FactorState::from_factors(state)?;
    let (row_slice, col_slice) = (fs.row_slice(), fs.col_slice());
    let next = iterate(
        &fs,
        &obs,
        row_slice,
        col_slice,
        steps,
        config.rank,
        cs.row_indices(),
        cs.col_indices(),
    )?;
    next.into_cur_factors(cs.row_indices(), cs.col_indices())
}

/// Runs iterative CUR completion from the zero iterate until the observed
/// residual reaches `eps`, the iteration cap is hit, or the residual
/// diverges. Non-convergence is reported through the trace, not an error.
pub fn solve(cs: &CrossSample, config: &IcurcConfig) -> Result<(CURFactors, IcurcTrace)> {
    check_preconditions(cs, config)?;
    let obs = LocalObservations::build(cs);
    let core_unobserved = obs.core.is_empty();

    // All observed values zero: the zero factors are a consistent
    // completion, converge immediately.
    if obs.denom == 0.0 {
        let factors = CURFactors::zeros(
            cs.ambient_rows(),
            cs.ambient_cols(),
            cs.row_indices().to_vec(),
            cs.col_indices().to_vec(),
        );
        let trace = IcurcTrace {
            residuals: vec![0.0],
            converged: true,
            diverged: false,
            per_iter_seconds: config.record_timing.then(Vec::new),
            core_unobserved,
        };
        return Ok((factors, trace));
    }

    let steps = resolve_steps(cs, config)?;
    let mut state = FactorState::zeros(
        cs.ambient_rows(),
        cs.ambient_cols(),
        cs.row_indices().len(),
        cs.col_indices().len(),
    );

    let mut residuals = Vec::with_capacity(config.max_iter + 1);
    let mut timings = config.record_timing.then(Vec::new);
    let mut converged = false;
    let mut diverged = false;

    loop {
        let row_slice = state.row_slice();
        let col_slice = state.col_slice();
        let e = residual_from_slices(&obs, &row_slice, &col_slice);
        residuals.push(e);
        if e <= config.eps {
            converged = true;
            break;
        }
        if !e.is_finite() || e > DIVERGENCE_LIMIT {
            diverged = true;
            break;
        }
        if residuals.len() > config.max_iter {
            break;
        }
        let started = Instant::now();
        state = iterate(
            &state,
            &obs,
            row_slice,
            col_slice,
            steps,
            config.rank,
            cs.row_indices(),
            cs.col_indices(),
        )?;
        if let Some(t) = timings.as_mut() {
            t.push(started.elapsed().as_secs_f64());
        }
    }

    let factors = state.into_cur_factors(cs.row_indices(), cs.col_indices())?;
    let trace = IcurcTrace {
        residuals,
        converged,
        diverged,
        per_iter_seconds: timings,
        core_unobserved,
    };
    Ok((factors, trace))
}

/// Evaluates `(C U† R)[i, j]` for each requested position from the cached
/// factors, in `O(r (|I| + |J|))` per entry, without materializing the
/// reconstruction.
pub fn evaluate_entries(f: &CURFactors, positions: &[(usize, usize)]) -> Result<Vec<f64>> {
    for &(i, j) in positions {
        if i >= f.ambient_rows() || j >= f.ambient_cols() {
            return Err(Error::IndexOutOfRange(format!(
                "position ({}, {}) outside {}x{}",
                i,
                j,
                f.ambient_rows(),
                f.ambient_cols()
            )));
        }
    }
    let (left, right, sinv) = thresholded_core_svd(f.core())?;
    let rho = sinv.len();
    let mut out = Vec::with_capacity(positions.len());
    let mut col_proj = vec![0.0; rho];
    let mut row_proj = vec![0.0; rho];
    for &(i, j) in positions {
        let c_row = f.cols_sub().row(i);
        for t in 0..rho {
            let mut acc = 0.0;
            for (k, cv) in c_row.iter().enumerate() {
                acc += cv * right.get(k, t);
            }
            col_proj[t] = acc;
        }
        for t in 0..rho {
            let mut acc = 0.0;
            for s in 0..left.rows() {
                acc += left.get(s, t) * f.rows_sub().get(s, j);
            }
            row_proj[t] = acc;
        }
        let val: f64 = (0..rho)
            .map(|t| col_proj[t] * sinv[t] * row_proj[t])
            .sum();
        out.push(val);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::cur_reconstruct;
    use crate::sampling::{ccs_sample_with_indices, IndexSample, Observation, ObservationMultiset};
    use rand::SeedableRng;

    /// Cross sample whose union covers each cross cell exactly once: the
    /// row side owns all of `I x [n]`, the column side owns the rest.
    fn disjoint_full_cross(x: &DenseMatrix, rows: Vec<usize>, cols: Vec<usize>) -> CrossSample {
        let mut row_entries = Vec::new();
        for &i in &rows {
            for j in 0..x.cols() {
                row_entries.push(Observation { row: i, col: j, value: x.get(i, j), multiplicity: 1 });
            }
        }
        let mut col_entries = Vec::new();
        for i in 0..x.rows() {
            if rows.contains(&i) {
                continue;
            }
            for &j in &cols {
                col_entries.push(Observation { row: i, col: j, value: x.get(i, j), multiplicity: 1 });
            }
        }
        let omega_rows = ObservationMultiset::new(x.rows(), x.cols(), row_entries).unwrap();
        let omega_cols = ObservationMultiset::new(x.rows(), x.cols(), col_entries).unwrap();
        let rd = rows.len();
        let cd = cols.len();
        CrossSample::new(rows, cols, rd, cd, omega_rows, omega_cols).unwrap()
    }

    /// Cross sample covering each cell of both submatrices exactly once;
    /// intersection cells carry multiplicity one on each side.
    fn doubled_full_cross(x: &DenseMatrix, rows: Vec<usize>, cols: Vec<usize>) -> CrossSample {
        let mut row_entries = Vec::new();
        for &i in &rows {
            for j in 0..x.cols() {
                row_entries.push(Observation { row: i, col: j, value: x.get(i, j), multiplicity: 1 });
            }
        }
        let mut col_entries = Vec::new();
        for i in 0..x.rows() {
            for &j in &cols {
                col_entries.push(Observation { row: i, col: j, value: x.get(i, j), multiplicity: 1 });
            }
        }
        let omega_rows = ObservationMultiset::new(x.rows(), x.cols(), row_entries).unwrap();
        let omega_cols = ObservationMultiset::new(x.rows(), x.cols(), col_entries).unwrap();
        let rd = rows.len();
        let cd = cols.len();
        CrossSample::new(rows, cols, rd, cd, omega_rows, omega_cols).unwrap()
    }

    fn rank2_matrix(n: usize) -> DenseMatrix {
        let a = DenseMatrix::from_fn(n, 2, |i, k| ((i + 1) as f64).powi(k as i32 + 1) / n as f64);
        let b = DenseMatrix::from_fn(n, 2, |j, k| ((j as f64) * 0.3 + 1.0) * (k as f64 + 0.5));
        a.matmul_tr(&b)
    }

    #[test]
    fn default_steps_match_rates() {
        let x = DenseMatrix::from_fn(8, 8, |i, j| (i + j) as f64 + 1.0);
        let cs = doubled_full_cross(&x, vec![0, 1, 2], vec![4, 5]);
        // p1 = p2 = 1 under full coverage of both submatrices
        let (er, ec, eu) = default_step_sizes(&cs).unwrap();
        assert!((er - 1.0).abs() < 1e-15);
        assert!((ec - 1.0).abs() < 1e-15);
        assert!((eu - 0.5).abs() < 1e-15);
    }

    #[test]
    fn default_steps_direct_arithmetic() {
        // p1 = 0.5, p2 = 0.25 -> (2, 4, 4/3)
        let x = DenseMatrix::from_fn(4, 4, |i, j| (i * 4 + j) as f64 + 1.0);
        let rows = IndexSample { indices: vec![0, 1], draws: 2 };
        let cols = IndexSample { indices: vec![2], draws: 1 };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        // draws: 0.5 * 4 * 2 = 4 on the row side, 0.25 * 4 * 1 = 1 on the column side
        let cs = ccs_sample_with_indices(&x, rows, cols, 4, 1, &mut rng).unwrap();
        let (er, ec, eu) = default_step_sizes(&cs).unwrap();
        assert!((er - 2.0).abs() < 1e-12);
        assert!((ec - 4.0).abs() < 1e-12);
        assert!((eu - 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn residual_is_one_at_zero_and_zero_at_truth() {
        let x = rank2_matrix(10);
        let cs = disjoint_full_cross(&x, vec![1, 4, 7], vec![0, 5, 9]);
        let zero = CURFactors::zeros(10, 10, vec![1, 4, 7], vec![0, 5, 9]);
        assert!((residual(&cs, &zero).unwrap() - 1.0).abs() < 1e-12);

        let exact = CURFactors::from_matrix(&x, &[1, 4, 7], &[0, 5, 9]).unwrap();
        assert!(residual(&cs, &exact).unwrap() < 1e-18);
    }

    #[test]
    fn one_step_exact_under_disjoint_full_observation_and_unit_steps() {
        let x = rank2_matrix(9);
        let rows = vec![0, 3, 6];
        let cols = vec![2, 5, 8];
        let cs = disjoint_full_cross(&x, rows.clone(), cols.clone());
        let mut config = IcurcConfig::new(2);
        config.step_rows = StepSize::Fixed(1.0);
        config.step_cols = StepSize::Fixed(1.0);
        config.step_core = StepSize::Fixed(1.0);
        let zero = CURFactors::zeros(9, 9, rows.clone(), cols.clone());
        let one = step(&cs, &zero, &config).unwrap();

        // After one unit step from zero the factors hold the true slices.
        assert!(one.core().sub(&x.submatrix(&rows, &cols)).max_abs() < 1e-10);
        assert!(one.rows_sub().sub(&x.select_rows(&rows)).max_abs() < 1e-10);
        assert!(one.cols_sub().sub(&x.select_cols(&cols)).max_abs() < 1e-10);
        assert!(residual(&cs, &one).unwrap() < 1e-20);
    }

    #[test]
    fn zero_rate_update_is_fixed_point_on_core() {
        // With all step sizes zero the iterate's core must stay identical.
        let x = rank2_matrix(8);
        let rows = vec![0, 2, 5];
        let cols = vec![1, 4, 7];
        let cs = disjoint_full_cross(&x, rows.clone(), cols.clone());
        let start = CURFactors::from_matrix(&x, &rows, &cols).unwrap();
        let mut config = IcurcConfig::new(2);
        config.step_rows = StepSize::Fixed(1e-300);
        config.step_cols = StepSize::Fixed(1e-300);
        config.step_core = StepSize::Fixed(1e-300);
        let next = step(&cs, &start, &config).unwrap();
        assert!(next.core().sub(start.core()).max_abs() < 1e-9);
    }

    #[test]
    fn solve_fully_observed_rank1_converges_first_iteration() {
        let n = 12;
        let u: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * i as f64).collect();
        let v: Vec<f64> = (0..n).map(|j| 2.0 - 0.07 * j as f64).collect();
        let x = DenseMatrix::from_fn(n, n, |i, j| u[i] * v[j]);
        let cs = doubled_full_cross(&x, vec![0, 4], vec![3, 9]);
        let (factors, trace) = solve(&cs, &IcurcConfig::new(1)).unwrap();
        assert!(trace.converged);
        assert_eq!(trace.iterations(), 1);
        assert!(trace.residuals[1] <= 1e-12);
        let recon = cur_reconstruct(&factors).unwrap();
        assert!(recon.sub(&x).frobenius_norm() / x.frobenius_norm() < 1e-10);
    }

    #[test]
    fn solve_zero_data_converges_immediately() {
        let x = DenseMatrix::zeros(6, 6);
        let cs = doubled_full_cross(&x, vec![0, 1], vec![2, 3]);
        let (factors, trace) = solve(&cs, &IcurcConfig::new(1)).unwrap();
        assert!(trace.converged);
        assert_eq!(trace.iterations(), 0);
        assert_eq!(trace.residuals, vec![0.0]);
        assert_eq!(factors.core().max_abs(), 0.0);
    }

    #[test]
    fn solve_rejects_undersized_index_sets() {
        let x = rank2_matrix(8);
        let cs = disjoint_full_cross(&x, vec![0], vec![1, 2]);
        let err = solve(&cs, &IcurcConfig::new(2)).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter(_)));
    }

    #[test]
    fn trace_invariants_hold() {
        let x = rank2_matrix(10);
        let cs = disjoint_full_cross(&x, vec![0, 3, 6], vec![1, 5, 8]);
        let mut config = IcurcConfig::new(2);
        config.record_timing = true;
        let (_, trace) = solve(&cs, &config).unwrap();
        assert_eq!(trace.residuals.len(), trace.iterations() + 1);
        assert_eq!(
            trace.per_iter_seconds.as_ref().unwrap().len(),
            trace.iterations()
        );
        if trace.converged {
            assert!(*trace.residuals.last().unwrap() <= config.eps);
        }
        let csv = trace.to_csv();
        assert!(csv.starts_with("iter,e_k,seconds\n"));
        assert_eq!(csv.lines().count(), trace.residuals.len() + 1);
    }

    #[test]
    fn evaluate_entries_matches_dense_reconstruction() {
        let x = rank2_matrix(9);
        let f = CURFactors::from_matrix(&x, &[0, 4, 8], &[1, 3, 7]).unwrap();
        let dense = cur_reconstruct(&f).unwrap();
        let positions: Vec<(usize, usize)> =
            (0..9).flat_map(|i| (0..9).map(move |j| (i, j))).collect();
        let values = evaluate_entries(&f, &positions).unwrap();
        for (idx, &(i, j)) in positions.iter().enumerate() {
            assert!((values[idx] - dense.get(i, j)).abs() < 1e-12);
        }

        let ones = DenseMatrix::from_fn(4, 4, |_, _| 1.0);
        let f = CURFactors::from_matrix(&ones, &[2], &[1]).unwrap();
        assert!((evaluate_entries(&f, &[(0, 0)]).unwrap()[0] - 1.0).abs() < 1e-12);

        assert!(evaluate_entries(&f, &[(9, 0)]).is_err());
    }
}
