//! Observation index multisets and the cross-concentrated sampler.
//!
//! Sampling is with replacement throughout, so observation sets are
//! multisets: repeated draws of the same cell aggregate into an explicit
//! multiplicity which downstream inner products and gradients weight by.

use std::collections::BTreeMap;

use rand::Rng;

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

/// One observed cell with its repeat count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub row: usize,
    pub col: usize,
    pub value: f64,
    pub multiplicity: usize,
}

/// A multiset of observed cells over an ambient matrix shape. Entries are
/// unique in `(row, col)` and kept sorted; multiplicity carries repeats.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationMultiset {
    entries: Vec<Observation>,
    ambient_rows: usize,
    ambient_cols: usize,
}

impl ObservationMultiset {
    pub fn new(ambient_rows: usize, ambient_cols: usize, mut entries: Vec<Observation>) -> Result<Self> {
        entries.sort_by_key(|e| (e.row, e.col));
        for pair in entries.windows(2) {
            if (pair[0].row, pair[0].col) == (pair[1].row, pair[1].col) {
                return Err(Error::InvalidParameter(format!(
                    "duplicate entry at ({}, {})",
                    pair[0].row, pair[0].col
                )));
            }
        }
        for e in &entries {
            if e.row >= ambient_rows || e.col >= ambient_cols {
                return Err(Error::IndexOutOfRange(format!(
                    "entry ({}, {}) outside {}x{}",
                    e.row, e.col, ambient_rows, ambient_cols
                )));
            }
            if e.multiplicity == 0 {
                return Err(Error::InvalidParameter(format!(
                    "zero multiplicity at ({}, {})",
                    e.row, e.col
                )));
            }
            if !e.value.is_finite() {
                return Err(Error::NonFinite(format!(
                    "observation at ({}, {})",
                    e.row, e.col
                )));
            }
        }
        Ok(Self {
            entries,
            ambient_rows,
            ambient_cols,
        })
    }

    /// Aggregates raw positional draws into a multiset, reading values
    /// from `x`.
    pub fn from_draws(
        x: &DenseMatrix,
        draws: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let mut counts: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for (i, j) in draws {
            if i >= x.rows() || j >= x.cols() {
                return Err(Error::IndexOutOfRange(format!(
                    "draw ({}, {}) outside {}x{}",
                    i,
                    j,
                    x.rows(),
                    x.cols()
                )));
            }
            *counts.entry((i, j)).or_insert(0) += 1;
        }
        let entries = counts
            .into_iter()
            .map(|((row, col), multiplicity)| Observation {
                row,
                col,
                value: x.get(row, col),
                multiplicity,
            })
            .collect();
        Self::new(x.rows(), x.cols(), entries)
    }

    pub fn entries(&self) -> &[Observation] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ambient_rows(&self) -> usize {
        self.ambient_rows
    }

    pub fn ambient_cols(&self) -> usize {
        self.ambient_cols
    }

    /// Total number of raw draws, i.e. the sum of multiplicities.
    pub fn total_draws(&self) -> usize {
        self.entries.iter().map(|e| e.multiplicity).sum()
    }

    /// `Σ multiplicity * value²`, the multiset-weighted inner product of the
    /// observed values with themselves.
    pub fn weighted_self_inner(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.multiplicity as f64 * e.value * e.value)
            .sum()
    }
}

/// `Σ multiplicity * value * y[row, col]`: the Frobenius inner product of
/// the sampling-operator image held in `omega` with a dense matrix.
pub fn observed_inner_product(omega: &ObservationMultiset, y: &DenseMatrix) -> Result<f64> {
    if omega.ambient_rows() != y.rows() || omega.ambient_cols() != y.cols() {
        return Err(Error::Dimension(format!(
            "multiset over {}x{} vs matrix {}x{}",
            omega.ambient_rows(),
            omega.ambient_cols(),
            y.rows(),
            y.cols()
        )));
    }
    Ok(omega
        .entries()
        .iter()
        .map(|e| e.multiplicity as f64 * e.value * y.get(e.row, e.col))
        .sum())
}

/// Applies the sampling operator to `y`: same index and multiplicity
/// structure, values read from `y`.
pub fn apply_sampling_operator(
    omega: &ObservationMultiset,
    y: &DenseMatrix,
) -> Result<ObservationMultiset> {
    if omega.ambient_rows() != y.rows() || omega.ambient_cols() != y.cols() {
        return Err(Error::Dimension(format!(
            "multiset over {}x{} vs matrix {}x{}",
            omega.ambient_rows(),
            omega.ambient_cols(),
            y.rows(),
            y.cols()
        )));
    }
    let entries = omega
        .entries()
        .iter()
        .map(|e| Observation {
            row: e.row,
            col: e.col,
            value: y.get(e.row, e.col),
            multiplicity: e.multiplicity,
        })
        .collect();
    ObservationMultiset::new(y.rows(), y.cols(), entries)
}

/// Distinct sorted indices produced by `draws` uniform draws with
/// replacement.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexSample {
    pub indices: Vec<usize>,
    pub draws: usize,
}

/// Draws `m` indices uniformly with replacement from `[0, n)` and returns
/// the deduplicated sorted set together with the raw draw count.
pub fn sample_indices<R: Rng>(n: usize, m: usize, rng: &mut R) -> Result<IndexSample> {
    if m == 0 {
        return Err(Error::InvalidParameter("zero index draws".into()));
    }
    // Sanity bound: drawing far beyond n log n with replacement only wastes
    // draws without growing the distinct set.
    let cap = n as f64 * (n as f64).ln().max(1.0);
    if m as f64 > cap {
        return Err(Error::InvalidParameter(format!(
            "{m} draws exceeds the n log n sanity bound {cap:.1} for n = {n}"
        )));
    }
    let mut indices: Vec<usize> = (0..m).map(|_| rng.gen_range(0..n)).collect();
    indices.sort_unstable();
    indices.dedup();
    Ok(IndexSample { indices, draws: m })
}

/// The cross-concentrated sample: selected row/column index sets and the
/// two observation multisets concentrated on them.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossSample {
    row_indices: Vec<usize>,
    col_indices: Vec<usize>,
    row_index_draws: usize,
    col_index_draws: usize,
    omega_rows: ObservationMultiset,
    omega_cols: ObservationMultiset,
}

impl CrossSample {
    pub fn new(
        row_indices: Vec<usize>,
        col_indices: Vec<usize>,
        row_index_draws: usize,
        col_index_draws: usize,
        omega_rows: ObservationMultiset,
        omega_cols: ObservationMultiset,
    ) -> Result<Self> {
        if omega_rows.ambient_rows() != omega_cols.ambient_rows()
            || omega_rows.ambient_cols() != omega_cols.ambient_cols()
        {
            return Err(Error::Dimension("ambient shapes disagree".into()));
        }
        let (m, n) = (omega_rows.ambient_rows(), omega_rows.ambient_cols());
        if row_indices.windows(2).any(|w| w[0] >= w[1]) || col_indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(
                "index sets must be sorted and distinct".into(),
            ));
        }
        if row_indices.iter().any(|&i| i >= m) || col_indices.iter().any(|&j| j >= n) {
            return Err(Error::IndexOutOfRange("cross index sets".into()));
        }
        if omega_rows.is_empty() || omega_cols.is_empty() {
            return Err(Error::EmptyInput(
                "both cross multisets need at least one draw".into(),
            ));
        }
        if row_index_draws < row_indices.len() || col_index_draws < col_indices.len() {
            return Err(Error::InvalidParameter(
                "raw index draw counts below distinct set sizes".into(),
            ));
        }
        for e in omega_rows.entries() {
            if row_indices.binary_search(&e.row).is_err() {
                return Err(Error::InvalidParameter(format!(
                    "row-side entry ({}, {}) outside selected rows",
                    e.row, e.col
                )));
            }
        }
        for e in omega_cols.entries() {
            if col_indices.binary_search(&e.col).is_err() {
                return Err(Error::InvalidParameter(format!(
                    "column-side entry ({}, {}) outside selected columns",
                    e.row, e.col
                )));
            }
        }
        Ok(Self {
            row_indices,
            col_indices,
            row_index_draws,
            col_index_draws,
            omega_rows,
            omega_cols,
        })
    }

    pub fn row_indices(&self) -> &[usize] {
        &self.row_indices
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn row_index_draws(&self) -> usize {
        self.row_index_draws
    }

    pub fn col_index_draws(&self) -> usize {
        self.col_index_draws
    }

    pub fn omega_rows(&self) -> &ObservationMultiset {
        &self.omega_rows
    }

    pub fn omega_cols(&self) -> &ObservationMultiset {
        &self.omega_cols
    }

    pub fn ambient_rows(&self) -> usize {
        self.omega_rows.ambient_rows()
    }

    pub fn ambient_cols(&self) -> usize {
        self.omega_rows.ambient_cols()
    }

    /// Observation rate on the row submatrix: draws / (cols * |I|).
    pub fn rate_rows(&self) -> f64 {
        self.omega_rows.total_draws() as f64
            / (self.ambient_cols() as f64 * self.row_indices.len() as f64)
    }

    /// Observation rate on the column submatrix: draws / (rows * |J|).
    pub fn rate_cols(&self) -> f64 {
        self.omega_cols.total_draws() as f64
            / (self.ambient_rows() as f64 * self.col_indices.len() as f64)
    }
}

/// Overall observation rate on the full matrix: total draws over cells.
pub fn overall_rate(cs: &CrossSample) -> f64 {
    (cs.omega_rows().total_draws() + cs.omega_cols().total_draws()) as f64
        / (cs.ambient_rows() as f64 * cs.ambient_cols() as f64)
}

/// Cross-concentrated sampling with explicit index sets and draw budgets:
/// `entry_draws_rows` positions uniform over `I x [cols]` and
/// `entry_draws_cols` positions uniform over `[rows] x J`.
pub fn ccs_sample_with_indices<R: Rng>(
    x: &DenseMatrix,
    rows: IndexSample,
    cols: IndexSample,
    entry_draws_rows: usize,
    entry_draws_cols: usize,
    rng: &mut R,
) -> Result<CrossSample> {
    if rows.indices.is_empty() || cols.indices.is_empty() {
        return Err(Error::EmptyInput("empty index set".into()));
    }
    if entry_draws_rows == 0 || entry_draws_cols == 0 {
        return Err(Error::InvalidParameter(
            "entry draw budgets must be positive".into(),
        ));
    }
    let row_set = &rows.indices;
    let col_set = &cols.indices;
    let omega_rows = ObservationMultiset::from_draws(
        x,
        (0..entry_draws_rows).map(|_| {
            let i = row_set[rng.gen_range(0..row_set.len())];
            let j = rng.gen_range(0..x.cols());
            (i, j)
        }),
    )?;
    let omega_cols = ObservationMultiset::from_draws(
        x,
        (0..entry_draws_cols).map(|_| {
            let i = rng.gen_range(0..x.rows());
            let j = col_set[rng.gen_range(0..col_set.len())];
            (i, j)
        }),
    )?;
    CrossSample::new(
        rows.indices,
        cols.indices,
        rows.draws,
        cols.draws,
        omega_rows,
        omega_cols,
    )
}

/// The full cross-concentrated sampling procedure: select row and column
/// index sets by uniform draws with replacement, then observe
/// `round(p * cols * |I|)` positions on the row submatrix and
/// `round(p * rows * |J|)` on the column submatrix.
pub fn ccs_sample<R: Rng>(
    x: &DenseMatrix,
    row_draws: usize,
    col_draws: usize,
    p: f64,
    rng: &mut R,
) -> Result<CrossSample> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "submatrix observation rate {p} outside (0, 1]"
        )));
    }
    let rows = sample_indices(x.rows(), row_draws, rng)?;
    let cols = sample_indices(x.cols(), col_draws, rng)?;
    let entry_draws_rows = (p * x.cols() as f64 * rows.indices.len() as f64).round() as usize;
    let entry_draws_cols = (p * x.rows() as f64 * cols.indices.len() as f64).round() as usize;
    ccs_sample_with_indices(x, rows, cols, entry_draws_rows, entry_draws_cols, rng)
}

/// Observations inherited on the intersection submatrix: entries of
/// `omega_rows + omega_cols` restricted to `I x J`, multiplicities summed
/// across the two sources.
pub fn core_observations(cs: &CrossSample) -> ObservationMultiset {
    let mut merged: BTreeMap<(usize, usize), Observation> = BTreeMap::new();
    let mut absorb = |e: &Observation| {
        merged
            .entry((e.row, e.col))
            .and_modify(|acc| acc.multiplicity += e.multiplicity)
            .or_insert(*e);
    };
    for e in cs.omega_rows().entries() {
        if cs.col_indices().binary_search(&e.col).is_ok() {
            absorb(e);
        }
    }
    for e in cs.omega_cols().entries() {
        if cs.row_indices().binary_search(&e.row).is_ok() {
            absorb(e);
        }
    }
    ObservationMultiset::new(
        cs.ambient_rows(),
        cs.ambient_cols(),
        merged.into_values().collect(),
    )
    .expect("restriction of valid multisets stays valid")
}

/// Uniform sampling with replacement over the full matrix.
pub fn uniform_sample<R: Rng>(
    x: &DenseMatrix,
    draws: usize,
    rng: &mut R,
) -> Result<ObservationMultiset> {
    if draws == 0 {
        return Err(Error::InvalidParameter("zero draws".into()));
    }
    ObservationMultiset::from_draws(
        x,
        (0..draws).map(|_| (rng.gen_range(0..x.rows()), rng.gen_range(0..x.cols()))),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn sample_indices_range_and_dedup() {
        let s = sample_indices(5, 5, &mut rng(1)).unwrap();
        assert!(s.indices.iter().all(|&i| i < 5));
        assert!(s.indices.len() <= 5);
        assert!(s.indices.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(s.draws, 5);

        let s = sample_indices(1, 1, &mut rng(2)).unwrap();
        assert_eq!(s.indices, vec![0]);
    }

    #[test]
    fn sample_indices_guards() {
        assert!(sample_indices(10, 0, &mut rng(0)).is_err());
        // 10 * ln(10) ~ 23.0, so 24 draws trips the guard
        assert!(sample_indices(10, 24, &mut rng(0)).is_err());
        assert!(sample_indices(10, 23, &mut rng(0)).is_ok());
    }

    #[test]
    fn sample_indices_replay_is_deterministic() {
        let a = sample_indices(1000, 200, &mut rng(42)).unwrap();
        let b = sample_indices(1000, 200, &mut rng(42)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn forced_single_cross_draw_counts() {
        // 4x4 matrix, I = {0}, J = {0}, p = 1: four draws on each side.
        let x = DenseMatrix::from_fn(4, 4, |i, j| (i + j) as f64);
        let rows = IndexSample { indices: vec![0], draws: 1 };
        let cols = IndexSample { indices: vec![0], draws: 1 };
        let cs = ccs_sample_with_indices(&x, rows, cols, 4, 4, &mut rng(3)).unwrap();
        assert_eq!(cs.omega_rows().total_draws(), 4);
        assert_eq!(cs.omega_cols().total_draws(), 4);
        assert!((overall_rate(&cs) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ccs_sample_respects_cross_restriction() {
        let x = DenseMatrix::from_fn(20, 20, |i, j| (i * 20 + j) as f64);
        let cs = ccs_sample(&x, 6, 8, 0.7, &mut rng(7)).unwrap();
        for e in cs.omega_rows().entries() {
            assert!(cs.row_indices().contains(&e.row));
            assert_eq!(e.value, x.get(e.row, e.col));
        }
        for e in cs.omega_cols().entries() {
            assert!(cs.col_indices().contains(&e.col));
        }
    }

    #[test]
    fn ccs_sample_is_deterministic_for_fixed_seed() {
        let x = DenseMatrix::from_fn(30, 30, |i, j| ((i * 31 + j * 17) % 13) as f64);
        let a = ccs_sample(&x, 10, 10, 0.4, &mut rng(11)).unwrap();
        let b = ccs_sample(&x, 10, 10, 0.4, &mut rng(11)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn core_observations_sums_multiplicities() {
        let x = DenseMatrix::from_fn(3, 3, |i, j| (i * 3 + j) as f64 + 1.0);
        let or = ObservationMultiset::new(
            3,
            3,
            vec![Observation { row: 1, col: 1, value: x.get(1, 1), multiplicity: 1 }],
        )
        .unwrap();
        let oc = ObservationMultiset::new(
            3,
            3,
            vec![Observation { row: 1, col: 1, value: x.get(1, 1), multiplicity: 1 }],
        )
        .unwrap();
        let cs = CrossSample::new(vec![1], vec![1], 1, 1, or, oc).unwrap();
        let core = core_observations(&cs);
        assert_eq!(core.len(), 1);
        assert_eq!(core.entries()[0].multiplicity, 2);
        assert_eq!(core.total_draws(), 2);
    }

    #[test]
    fn core_observations_restriction_only() {
        // Row-side entries all land outside J, so the core inherits only
        // from the column side.
        let x = DenseMatrix::from_fn(4, 4, |i, j| (i + 2 * j) as f64);
        let or = ObservationMultiset::new(
            4,
            4,
            vec![
                Observation { row: 0, col: 1, value: x.get(0, 1), multiplicity: 2 },
                Observation { row: 0, col: 3, value: x.get(0, 3), multiplicity: 1 },
            ],
        )
        .unwrap();
        let oc = ObservationMultiset::new(
            4,
            4,
            vec![
                Observation { row: 0, col: 2, value: x.get(0, 2), multiplicity: 1 },
                Observation { row: 3, col: 2, value: x.get(3, 2), multiplicity: 1 },
            ],
        )
        .unwrap();
        let cs = CrossSample::new(vec![0], vec![2], 1, 1, or, oc).unwrap();
        let core = core_observations(&cs);
        assert_eq!(core.len(), 1);
        assert_eq!((core.entries()[0].row, core.entries()[0].col), (0, 2));
        assert_eq!(core.total_draws(), 1);
    }

    #[test]
    fn core_total_draws_matches_bruteforce() {
        let x = DenseMatrix::from_fn(15, 15, |i, j| ((i + j) % 7) as f64);
        let cs = ccs_sample(&x, 6, 6, 0.8, &mut rng(23)).unwrap();
        let brute: usize = cs
            .omega_rows()
            .entries()
            .iter()
            .filter(|e| cs.col_indices().binary_search(&e.col).is_ok())
            .map(|e| e.multiplicity)
            .chain(
                cs.omega_cols()
                    .entries()
                    .iter()
                    .filter(|e| cs.row_indices().binary_search(&e.row).is_ok())
                    .map(|e| e.multiplicity),
            )
            .sum();
        assert_eq!(core_observations(&cs).total_draws(), brute);

        // Multiset consistency: row draws + col draws = core draws + draws
        // outside the intersection.
        let outside: usize = cs
            .omega_rows()
            .entries()
            .iter()
            .filter(|e| cs.col_indices().binary_search(&e.col).is_err())
            .map(|e| e.multiplicity)
            .chain(
                cs.omega_cols()
                    .entries()
                    .iter()
                    .filter(|e| cs.row_indices().binary_search(&e.row).is_err())
                    .map(|e| e.multiplicity),
            )
            .sum();
        assert_eq!(
            cs.omega_rows().total_draws() + cs.omega_cols().total_draws(),
            core_observations(&cs).total_draws() + outside
        );
    }

    #[test]
    fn sampling_operator_full_coverage_inner_product() {
        let y = DenseMatrix::from_fn(3, 4, |i, j| (i as f64 - 1.0) * (j as f64 + 0.5));
        let all = ObservationMultiset::from_draws(
            &y,
            (0..3).flat_map(|i| (0..4).map(move |j| (i, j))),
        )
        .unwrap();
        let p_y = apply_sampling_operator(&all, &y).unwrap();
        let ip = observed_inner_product(&p_y, &y).unwrap();
        let fro2 = y.frobenius_norm().powi(2);
        assert!((ip - fro2).abs() < 1e-12);
    }

    #[test]
    fn sampling_operator_weights_repeats() {
        let mut y = DenseMatrix::zeros(2, 2);
        y.set(0, 0, 3.0);
        let omega = ObservationMultiset::new(
            2,
            2,
            vec![Observation { row: 0, col: 0, value: 3.0, multiplicity: 2 }],
        )
        .unwrap();
        let p_y = apply_sampling_operator(&omega, &y).unwrap();
        assert!((observed_inner_product(&p_y, &y).unwrap() - 18.0).abs() < 1e-15);
    }

    #[test]
    fn uniform_sample_edges() {
        let x = DenseMatrix::from_fn(5, 5, |i, j| (i * 5 + j) as f64);
        let one = uniform_sample(&x, 1, &mut rng(5)).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one.entries()[0].multiplicity, 1);

        let a = uniform_sample(&x, 40, &mut rng(9)).unwrap();
        let b = uniform_sample(&x, 40, &mut rng(9)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.total_draws(), 40);
    }

    #[test]
    fn overall_rate_minimal_sample() {
        let x = DenseMatrix::from_fn(10, 10, |i, j| (i + j) as f64 + 1.0);
        let rows = IndexSample { indices: vec![3], draws: 1 };
        let cols = IndexSample { indices: vec![7], draws: 1 };
        let cs = ccs_sample_with_indices(&x, rows, cols, 1, 1, &mut rng(1)).unwrap();
        assert!((overall_rate(&cs) - 0.02).abs() < 1e-15);
    }
}
