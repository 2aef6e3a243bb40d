//! Experiment drivers: synthetic phase transitions over sampling
//! parameters and problem size, image recovery, rating prediction, link
//! prediction, and convergence traces. Every driver is seeded and emits
//! deterministic result rows; trials and grid cells run in parallel with
//! independent generators.

use std::collections::HashSet;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::icurc::{self, IcurcConfig};
use crate::io::{GrayImage, RatingTriplets, ResultRow};
use crate::linalg::{cur_reconstruct, truncated_svd};
use crate::matrix::DenseMatrix;
use crate::metrics::{self, RatingScale, ScoredPair};
use crate::sampling::{
    ccs_sample, ccs_sample_with_indices, overall_rate, CrossSample, IndexSample,
    ObservationMultiset,
};
use crate::synth::synth_lowrank;

fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Draws exactly `count` distinct sorted indices from `[0, n)`.
fn exact_indices<R: Rng>(n: usize, count: usize, rng: &mut R) -> Result<IndexSample> {
    if count == 0 || count > n {
        return Err(Error::InvalidParameter(format!(
            "index count {count} outside 1..={n}"
        )));
    }
    let mut indices = rand::seq::index::sample(rng, n, count).into_vec();
    indices.sort_unstable();
    Ok(IndexSample {
        indices,
        draws: count,
    })
}

/// Concentrated submatrix width `ceil(c * r * ln²(n))`, clamped to `[r, n]`.
pub fn concentration_width(n: usize, rank: usize, c: f64) -> usize {
    let log_n = (n as f64).ln();
    let raw = (c * rank as f64 * log_n * log_n).ceil() as usize;
    raw.clamp(rank, n)
}

// ---------------------------------------------------------------------------
// phase transition over (delta, p)

#[derive(Debug, Clone)]
pub struct PhaseConfig {
    pub n: usize,
    pub rank: usize,
    pub deltas: Vec<f64>,
    pub ps: Vec<f64>,
    pub trials: usize,
    /// Ground-truth relative error below which a trial counts as solved.
    pub success_threshold: f64,
    pub base_seed: u64,
    pub eps: f64,
    pub max_iter: usize,
    /// Record wall time in result rows; disable for byte-identical reruns.
    pub timing: bool,
    /// Additionally emit `success_binary` rows thresholded at this
    /// fraction.
    pub binarize: Option<f64>,
}

impl PhaseConfig {
    pub fn new(n: usize, rank: usize) -> Self {
        let grid: Vec<f64> = (1..=9).map(|k| k as f64 / 10.0).collect();
        Self {
            n,
            rank,
            deltas: grid.clone(),
            ps: grid,
            trials: 20,
            success_threshold: 1e-2,
            base_seed: 0,
            // squared-scale observed residual: 1e-10 is a 1e-5 relative
            // error on observed entries
            eps: 1e-10,
            max_iter: 500,
            timing: true,
            binarize: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.deltas.is_empty() || self.ps.is_empty() {
            return Err(Error::InvalidParameter("empty parameter grid".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidParameter("need at least one trial".into()));
        }
        if !(self.success_threshold > 0.0) {
            return Err(Error::InvalidParameter("success threshold must be positive".into()));
        }
        if self.deltas.iter().chain(self.ps.iter()).any(|&v| !(v > 0.0 && v <= 1.0)) {
            return Err(Error::InvalidParameter("delta and p must lie in (0, 1]".into()));
        }
        if self.rank == 0 || self.n < self.rank {
            return Err(Error::InvalidParameter("rank must lie in 1..=n".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct PhaseCell {
    pub delta: f64,
    pub p: f64,
    pub success_fraction: f64,
    pub mean_alpha: f64,
    pub seconds: f64,
}

fn solve_and_judge(
    x: &DenseMatrix,
    cs: &CrossSample,
    rank: usize,
    eps: f64,
    max_iter: usize,
    threshold: f64,
) -> bool {
    let mut config = IcurcConfig::new(rank);
    config.eps = eps;
    config.max_iter = max_iter;
    match icurc::solve(cs, &config) {
        Ok((factors, _)) => match metrics::relative_error(x, &factors) {
            Ok(err) => err <= threshold,
            Err(_) => false,
        },
        Err(_) => false,
    }
}

/// One trial of the (delta, p) protocol; shared generator stream so the
/// ground truth for a given trial index is identical across grid cells.
fn phase_trial(cfg: &PhaseConfig, delta: f64, p: f64, trial: usize) -> (bool, f64) {
    let mut rng = seeded(cfg.base_seed + trial as u64);
    let x = synth_lowrank(cfg.n, cfg.rank, &mut rng).expect("validated rank");
    let index_draws = ((delta * cfg.n as f64).round() as usize).max(1);
    let cs = match ccs_sample(&x, index_draws, index_draws, p, &mut rng) {
        Ok(cs) => cs,
        Err(_) => return (false, 0.0),
    };
    let alpha = overall_rate(&cs);
    let success = solve_and_judge(&x, &cs, cfg.rank, cfg.eps, cfg.max_iter, cfg.success_threshold);
    (success, alpha)
}

/// Runs the (delta, p) phase-transition grid; cells execute in parallel.
pub fn run_phase_transition(cfg: &PhaseConfig) -> Result<Vec<PhaseCell>> {
    cfg.validate()?;
    let cells: Vec<(f64, f64)> = cfg
        .deltas
        .iter()
        .flat_map(|&d| cfg.ps.iter().map(move |&p| (d, p)))
        .collect();
    let out: Vec<PhaseCell> = cells
        .par_iter()
        .map(|&(delta, p)| {
            let started = Instant::now();
            let mut successes = 0usize;
            let mut alpha_sum = 0.0;
            for trial in 0..cfg.trials {
                let (ok, alpha) = phase_trial(cfg, delta, p, trial);
                successes += ok as usize;
                alpha_sum += alpha;
            }
            PhaseCell {
                delta,
                p,
                success_fraction: successes as f64 / cfg.trials as f64,
                mean_alpha: alpha_sum / cfg.trials as f64,
                seconds: if cfg.timing {
                    started.elapsed().as_secs_f64()
                } else {
                    0.0
                },
            }
        })
        .collect();
    Ok(out)
}

pub fn phase_rows(cfg: &PhaseConfig, cells: &[PhaseCell]) -> Vec<ResultRow> {
    let mut rows = Vec::new();
    for c in cells {
        rows.push(ResultRow {
            experiment: "phase".into(),
            dataset: "synthetic".into(),
            alpha: c.mean_alpha,
            delta: c.delta,
            p: c.p,
            rank: cfg.rank,
            seed: cfg.base_seed,
            metric: "success_rate".into(),
            value: c.success_fraction,
            seconds: c.seconds,
        });
        if let Some(threshold) = cfg.binarize {
            rows.push(ResultRow {
                experiment: "phase".into(),
                dataset: "synthetic".into(),
                alpha: c.mean_alpha,
                delta: c.delta,
                p: c.p,
                rank: cfg.rank,
                seed: cfg.base_seed,
                metric: "success_binary".into(),
                value: (c.success_fraction >= threshold) as u8 as f64,
                seconds: c.seconds,
            });
        }
    }
    rows
}

// ---------------------------------------------------------------------------
// phase transition over (n, s) with concentration width c r ln²(n)

#[derive(Debug, Clone)]
pub struct SizeGridConfig {
    pub ns: Vec<usize>,
    /// Total entry draw budgets, split evenly between the two submatrices.
    pub sample_counts: Vec<usize>,
    pub rank: usize,
    pub c: f64,
    pub trials: usize,
    pub success_threshold: f64,
    pub base_seed: u64,
    pub eps: f64,
    pub max_iter: usize,
    pub timing: bool,
}

impl SizeGridConfig {
    pub fn new(rank: usize, c: f64) -> Self {
        Self {
            ns: vec![500],
            sample_counts: vec![20_000, 40_000, 80_000],
            rank,
            c,
            trials: 20,
            success_threshold: 1e-2,
            base_seed: 0,
            eps: 1e-10,
            max_iter: 500,
            timing: true,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.ns.is_empty() || self.sample_counts.is_empty() {
            return Err(Error::InvalidParameter("empty parameter grid".into()));
        }
        if self.trials == 0 || self.rank == 0 || !(self.c > 0.0) {
            return Err(Error::InvalidParameter("trials, rank and c must be positive".into()));
        }
        if self.sample_counts.iter().any(|&s| s < 2) {
            return Err(Error::InvalidParameter("sample budgets must be at least 2".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SizeCell {
    pub n: usize,
    pub samples: usize,
    pub width: usize,
    pub success_fraction: f64,
    pub mean_alpha: f64,
    pub seconds: f64,
}

fn size_trial(cfg: &SizeGridConfig, n: usize, samples: usize, trial: usize) -> (bool, f64) {
    let mut rng = seeded(cfg.base_seed + trial as u64);
    let x = match synth_lowrank(n, cfg.rank, &mut rng) {
        Ok(x) => x,
        Err(_) => return (false, 0.0),
    };
    let width = concentration_width(n, cfg.rank, cfg.c);
    let rows = match exact_indices(n, width, &mut rng) {
        Ok(v) => v,
        Err(_) => return (false, 0.0),
    };
    let cols = match exact_indices(n, width, &mut rng) {
        Ok(v) => v,
        Err(_) => return (false, 0.0),
    };
    let half = samples / 2;
    let cs = match ccs_sample_with_indices(&x, rows, cols, half, samples - half, &mut rng) {
        Ok(cs) => cs,
        Err(_) => return (false, 0.0),
    };
    let alpha = overall_rate(&cs);
    let success = solve_and_judge(&x, &cs, cfg.rank, cfg.eps, cfg.max_iter, cfg.success_threshold);
    (success, alpha)
}

/// Runs the (n, total samples) grid with submatrix width `c r ln²(n)`.
pub fn run_size_phase_transition(cfg: &SizeGridConfig) -> Result<Vec<SizeCell>> {
    cfg.validate()?;
    let cells: Vec<(usize, usize)> = cfg
        .ns
        .iter()
        .flat_map(|&n| cfg.sample_counts.iter().map(move |&s| (n, s)))
        .collect();
    let out: Vec<SizeCell> = cells
        .par_iter()
        .map(|&(n, samples)| {
            let started = Instant::now();
            let mut successes = 0usize;
            let mut alpha_sum = 0.0;
            for trial in 0..cfg.trials {
                let (ok, alpha) = size_trial(cfg, n, samples, trial);
                successes += ok as usize;
                alpha_sum += alpha;
            }
            SizeCell {
                n,
                samples,
                width: concentration_width(n, cfg.rank, cfg.c),
                success_fraction: successes as f64 / cfg.trials as f64,
                mean_alpha: alpha_sum / cfg.trials as f64,
                seconds: if cfg.timing {
                    started.elapsed().as_secs_f64()
                } else {
                    0.0
                },
            }
        })
        .collect();
    Ok(out)
}

pub fn size_rows(cfg: &SizeGridConfig, cells: &[SizeCell]) -> Vec<ResultRow> {
    cells
        .iter()
        .map(|c| ResultRow {
            experiment: "phase_size".into(),
            dataset: "synthetic".into(),
            alpha: c.mean_alpha,
            delta: c.width as f64 / c.n as f64,
            p: cfg.c,
            rank: cfg.rank,
            seed: cfg.base_seed,
            metric: format!("success_rate_n{}_s{}", c.n, c.samples),
            value: c.success_fraction,
            seconds: c.seconds,
        })
        .collect()
}

// ---------------------------------------------------------------------------
// convergence trace

#[derive(Debug, Clone)]
pub struct ConvergenceConfig {
    pub n: usize,
    pub rank: usize,
    pub c: f64,
    pub alpha: f64,
    pub trials: usize,
    pub base_seed: u64,
    /// Ground-truth relative error at which a trace stops.
    pub eps: f64,
    pub max_iter: usize,
}

impl ConvergenceConfig {
    pub fn new(n: usize, rank: usize) -> Self {
        Self {
            n,
            rank,
            c: 0.5,
            alpha: 0.05,
            trials: 10,
            base_seed: 0,
            eps: 1e-5,
            max_iter: 500,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConvergenceOutcome {
    /// Ground-truth relative error per iteration, one trace per seed.
    pub ground_truth: Vec<Vec<f64>>,
    /// Observed-entry residual per iteration, one trace per seed.
    pub observed: Vec<Vec<f64>>,
    /// Mean and standard deviation of the ground-truth error across the
    /// seeds still running at each iteration.
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl ConvergenceOutcome {
    /// CSV `iter,mean,std`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iter,mean,std\n");
        for (k, (m, s)) in self.mean.iter().zip(self.std.iter()).enumerate() {
            out.push_str(&format!("{k},{m},{s}\n"));
        }
        out
    }
}

/// Traces ground-truth error against iterations on the scaled synthetic
/// setting: width `c r ln²(n)` submatrices, `alpha n²` total draws.
pub fn run_convergence_trace(cfg: &ConvergenceConfig) -> Result<ConvergenceOutcome> {
    if cfg.trials == 0 {
        return Err(Error::InvalidParameter("need at least one trial".into()));
    }
    if !(cfg.alpha > 0.0 && cfg.alpha <= 1.0) {
        return Err(Error::InvalidParameter("alpha must lie in (0, 1]".into()));
    }
    let traces: Vec<Result<(Vec<f64>, Vec<f64>)>> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = seeded(cfg.base_seed + trial as u64);
            let x = synth_lowrank(cfg.n, cfg.rank, &mut rng)?;
            let width = concentration_width(cfg.n, cfg.rank, cfg.c);
            let rows = exact_indices(cfg.n, width, &mut rng)?;
            let cols = exact_indices(cfg.n, width, &mut rng)?;
            let samples = (cfg.alpha * (cfg.n * cfg.n) as f64).round() as usize;
            let half = samples / 2;
            let cs = ccs_sample_with_indices(&x, rows, cols, half, samples - half, &mut rng)?;

            let mut config = IcurcConfig::new(cfg.rank);
            config.eps = f64::MIN_POSITIVE; // stopping handled on ground truth below
            config.max_iter = 1;

            let mut factors = crate::linalg::CURFactors::zeros(
                cfg.n,
                cfg.n,
                cs.row_indices().to_vec(),
                cs.col_indices().to_vec(),
            );
            let mut truth_trace = vec![metrics::relative_error(&x, &factors)?];
            let mut observed_trace = vec![icurc::residual(&cs, &factors)?];
            for _ in 0..cfg.max_iter {
                if *truth_trace.last().unwrap() <= cfg.eps {
                    break;
                }
                factors = icurc::step(&cs, &factors, &config)?;
                truth_trace.push(metrics::relative_error(&x, &factors)?);
                observed_trace.push(icurc::residual(&cs, &factors)?);
            }
            Ok((truth_trace, observed_trace))
        })
        .collect();

    let mut ground_truth = Vec::with_capacity(cfg.trials);
    let mut observed = Vec::with_capacity(cfg.trials);
    for t in traces {
        let (g, o) = t?;
        ground_truth.push(g);
        observed.push(o);
    }

    let longest = ground_truth.iter().map(Vec::len).max().unwrap_or(0);
    let mut mean = Vec::with_capacity(longest);
    let mut std = Vec::with_capacity(longest);
    for k in 0..longest {
        let values: Vec<f64> = ground_truth
            .iter()
            .filter_map(|tr| tr.get(k).copied())
            .collect();
        let m = values.iter().sum::<f64>() / values.len() as f64;
        let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64;
        mean.push(m);
        std.push(var.sqrt());
    }
    Ok(ConvergenceOutcome {
        ground_truth,
        observed,
        mean,
        std,
    })
}

// ---------------------------------------------------------------------------
// image recovery

#[derive(Debug, Clone)]
pub struct ImageConfig {
    pub rank: usize,
    pub delta: f64,
    pub alpha: f64,
    pub trials: usize,
    pub base_seed: u64,
    pub eps: f64,
    pub max_iter: usize,
    pub timing: bool,
}

impl ImageConfig {
    pub fn new(rank: usize) -> Self {
        Self {
            rank,
            delta: 0.1,
            alpha: 0.12,
            trials: 10,
            base_seed: 0,
            eps: 1e-10,
            max_iter: 500,
            timing: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ImageOutcome {
    pub per_trial_snr_db: Vec<f64>,
    pub mean_snr_db: f64,
    pub mean_seconds: f64,
    /// SNR of the best rank-r truncation of the image, the unreachable
    /// ceiling for any rank-r reconstruction.
    pub oracle_snr_db: f64,
    pub rows: Vec<ResultRow>,
}

/// Cross-samples the image, completes it, and reports SNR against the
/// original, averaged over seeded trials. Fails if any reconstruction
/// reports SNR above the rank-r truncation ceiling, which a rank-r
/// estimate cannot legitimately exceed.
pub fn run_image_experiment(cfg: &ImageConfig, image: &GrayImage) -> Result<ImageOutcome> {
    if cfg.trials == 0 {
        return Err(Error::InvalidParameter("need at least one trial".into()));
    }
    if !(cfg.delta > 0.0 && cfg.delta <= 1.0) || !(cfg.alpha > 0.0 && cfg.alpha <= 1.0) {
        return Err(Error::InvalidParameter("delta and alpha must lie in (0, 1]".into()));
    }
    let x = image.to_matrix();
    let (m, n) = (x.rows(), x.cols());
    let row_count = ((cfg.delta * m as f64).round() as usize).clamp(cfg.rank, m);
    let col_count = ((cfg.delta * n as f64).round() as usize).clamp(cfg.rank, n);
    let budget = (cfg.alpha * (m * n) as f64 / 2.0).floor() as usize;
    if budget > row_count * n || budget > m * col_count {
        return Err(Error::InvalidParameter(format!(
            "draw budget {budget} exceeds cross capacity ({} row cells, {} column cells)",
            row_count * n,
            m * col_count
        )));
    }
    if budget == 0 {
        return Err(Error::InvalidParameter("alpha too small: zero draws".into()));
    }

    let oracle = truncated_svd(&x, cfg.rank)?.reconstruct();
    let oracle_snr_db = metrics::snr_db(&x, &oracle)?;

    let trials: Vec<Result<(f64, f64)>> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = seeded(cfg.base_seed + trial as u64);
            let rows = exact_indices(m, row_count, &mut rng)?;
            let cols = exact_indices(n, col_count, &mut rng)?;
            let cs = ccs_sample_with_indices(&x, rows, cols, budget, budget, &mut rng)?;
            let mut config = IcurcConfig::new(cfg.rank);
            config.eps = cfg.eps;
            config.max_iter = cfg.max_iter;
            let started = Instant::now();
            let (factors, _) = icurc::solve(&cs, &config)?;
            let seconds = started.elapsed().as_secs_f64();
            let recon = cur_reconstruct(&factors)?;
            let snr = metrics::snr_db(&x, &recon)?;
            Ok((snr, seconds))
        })
        .collect();

    let mut per_trial_snr_db = Vec::with_capacity(cfg.trials);
    let mut rows_out = Vec::new();
    let mut snr_sum = 0.0;
    let mut sec_sum = 0.0;
    for (trial, t) in trials.into_iter().enumerate() {
        let (snr, seconds) = t?;
        if snr > oracle_snr_db + 0.1 {
            return Err(Error::InvalidParameter(format!(
                "trial {trial} SNR {snr:.3} dB exceeds the rank-{} truncation ceiling {:.3} dB",
                cfg.rank, oracle_snr_db
            )));
        }
        per_trial_snr_db.push(snr);
        snr_sum += snr;
        sec_sum += seconds;
        rows_out.push(ResultRow {
            experiment: "image".into(),
            dataset: "image".into(),
            alpha: cfg.alpha,
            delta: cfg.delta,
            p: 0.0,
            rank: cfg.rank,
            seed: cfg.base_seed + trial as u64,
            metric: "snr_db".into(),
            value: snr,
            seconds: if cfg.timing { seconds } else { 0.0 },
        });
    }
    let mean_snr_db = snr_sum / cfg.trials as f64;
    let mean_seconds = if cfg.timing {
        sec_sum / cfg.trials as f64
    } else {
        0.0
    };
    rows_out.push(ResultRow {
        experiment: "image".into(),
        dataset: "image".into(),
        alpha: cfg.alpha,
        delta: cfg.delta,
        p: 0.0,
        rank: cfg.rank,
        seed: cfg.base_seed,
        metric: "mean_snr_db".into(),
        value: mean_snr_db,
        seconds: mean_seconds,
    });
    Ok(ImageOutcome {
        per_trial_snr_db,
        mean_snr_db,
        mean_seconds,
        oracle_snr_db,
        rows: rows_out,
    })
}

// ---------------------------------------------------------------------------
// rating prediction

#[derive(Debug, Clone)]
pub struct RecsysConfig {
    pub rank: usize,
    pub delta: f64,
    pub alpha: f64,
    pub trials: usize,
    pub base_seed: u64,
    pub eps: f64,
    pub max_iter: usize,
    pub scale: RatingScale,
    pub timing: bool,
}

impl RecsysConfig {
    pub fn new(rank: usize, scale: RatingScale) -> Self {
        Self {
            rank,
            delta: 0.3,
            alpha: 0.1,
            trials: 10,
            base_seed: 0,
            eps: 1e-10,
            max_iter: 500,
            scale,
            timing: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RecsysOutcome {
    pub per_trial: Vec<(f64, f64)>,
    pub mean_hit_rate: f64,
    pub mean_nmae: f64,
    pub rows: Vec<ResultRow>,
}

/// Builds the cross-restricted training multisets: `budget` distinct picks
/// from the observed cells inside the row cross and the same from the
/// column cross. An entry picked on both sides contributes to both
/// multisets, consistent with draw multiplicity elsewhere.
fn cross_restricted_training<R: Rng>(
    x: &DenseMatrix,
    observed: &[(usize, usize)],
    rows: &IndexSample,
    cols: &IndexSample,
    budget_rows: usize,
    budget_cols: usize,
    rng: &mut R,
) -> Result<(ObservationMultiset, ObservationMultiset)> {
    let row_set: HashSet<usize> = rows.indices.iter().copied().collect();
    let col_set: HashSet<usize> = cols.indices.iter().copied().collect();
    let in_rows: Vec<(usize, usize)> = observed
        .iter()
        .copied()
        .filter(|&(i, _)| row_set.contains(&i))
        .collect();
    let in_cols: Vec<(usize, usize)> = observed
        .iter()
        .copied()
        .filter(|&(_, j)| col_set.contains(&j))
        .collect();
    if budget_rows > in_rows.len() || budget_cols > in_cols.len() {
        return Err(Error::Shortfall(format!(
            "budget {budget_rows}+{budget_cols} draws vs {} row-cross and {} column-cross observed cells",
            in_rows.len(),
            in_cols.len()
        )));
    }
    if budget_rows == 0 || budget_cols == 0 {
        return Err(Error::InvalidParameter("alpha too small: zero training picks".into()));
    }
    let pick = |pool: &[(usize, usize)], count: usize, rng: &mut R| -> Vec<(usize, usize)> {
        rand::seq::index::sample(rng, pool.len(), count)
            .into_iter()
            .map(|k| pool[k])
            .collect()
    };
    let omega_rows = ObservationMultiset::from_draws(x, pick(&in_rows, budget_rows, rng))?;
    let omega_cols = ObservationMultiset::from_draws(x, pick(&in_cols, budget_cols, rng))?;
    Ok((omega_rows, omega_cols))
}

/// Cross-validated rating prediction: train on cross-restricted observed
/// entries, test on the held-out remainder, report hit-rate and NMAE.
pub fn run_recsys_experiment(
    cfg: &RecsysConfig,
    triplets: &RatingTriplets,
) -> Result<RecsysOutcome> {
    if cfg.trials == 0 {
        return Err(Error::InvalidParameter("need at least one trial".into()));
    }
    triplets.check_scale(&cfg.scale)?;
    let (x, observed) = triplets.to_item_user_matrix();
    let (m, n) = (x.rows(), x.cols());
    if m < cfg.rank || n < cfg.rank {
        return Err(Error::InvalidParameter("matrix smaller than target rank".into()));
    }
    let row_count = ((cfg.delta * m as f64).round() as usize).clamp(cfg.rank, m);
    let col_count = ((cfg.delta * n as f64).round() as usize).clamp(cfg.rank, n);
    let budget_total = (cfg.alpha * (m * n) as f64).round() as usize;
    let budget_rows = budget_total / 2;
    let budget_cols = budget_total - budget_rows;

    let trials: Vec<Result<(f64, f64, f64)>> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = seeded(cfg.base_seed + trial as u64);
            let rows = exact_indices(m, row_count, &mut rng)?;
            let cols = exact_indices(n, col_count, &mut rng)?;
            let (omega_rows, omega_cols) = cross_restricted_training(
                &x,
                &observed,
                &rows,
                &cols,
                budget_rows,
                budget_cols,
                &mut rng,
            )?;
            let trained: HashSet<(usize, usize)> = omega_rows
                .entries()
                .iter()
                .chain(omega_cols.entries().iter())
                .map(|e| (e.row, e.col))
                .collect();
            let test: Vec<(usize, usize)> = observed
                .iter()
                .copied()
                .filter(|pos| !trained.contains(pos))
                .collect();
            if test.is_empty() {
                return Err(Error::InvalidParameter(
                    "training picks cover every observed entry; empty test split".into(),
                ));
            }
            let cs = CrossSample::new(
                rows.indices.clone(),
                cols.indices.clone(),
                rows.draws,
                cols.draws,
                omega_rows,
                omega_cols,
            )?;
            let mut config = IcurcConfig::new(cfg.rank);
            config.eps = cfg.eps;
            config.max_iter = cfg.max_iter;
            let started = Instant::now();
            let (factors, _) = icurc::solve(&cs, &config)?;
            let seconds = started.elapsed().as_secs_f64();
            let predicted = icurc::evaluate_entries(&factors, &test)?;
            let pairs: Vec<ScoredPair> = test
                .iter()
                .zip(predicted.iter())
                .map(|(&(i, j), &pred)| ScoredPair {
                    predicted: pred,
                    actual: x.get(i, j),
                })
                .collect();
            let hr = metrics::hit_rate(&pairs, &cfg.scale)?;
            let nm = metrics::nmae(&pairs, &cfg.scale)?;
            Ok((hr, nm, seconds))
        })
        .collect();

    let mut per_trial = Vec::with_capacity(cfg.trials);
    let mut rows_out = Vec::new();
    let (mut hr_sum, mut nm_sum) = (0.0, 0.0);
    for (trial, t) in trials.into_iter().enumerate() {
        let (hr, nm, seconds) = t?;
        per_trial.push((hr, nm));
        hr_sum += hr;
        nm_sum += nm;
        for (metric, value) in [("hit_rate", hr), ("nmae", nm)] {
            rows_out.push(ResultRow {
                experiment: "recsys".into(),
                dataset: "ratings".into(),
                alpha: cfg.alpha,
                delta: cfg.delta,
                p: 0.0,
                rank: cfg.rank,
                seed: cfg.base_seed + trial as u64,
                metric: metric.into(),
                value,
                seconds: if cfg.timing { seconds } else { 0.0 },
            });
        }
    }
    Ok(RecsysOutcome {
        mean_hit_rate: hr_sum / cfg.trials as f64,
        mean_nmae: nm_sum / cfg.trials as f64,
        per_trial,
        rows: rows_out,
    })
}

// ---------------------------------------------------------------------------
// link prediction

#[derive(Debug, Clone)]
pub struct LinkPredConfig {
    pub rank: usize,
    pub delta: f64,
    pub alpha: f64,
    pub trials: usize,
    pub base_seed: u64,
    pub eps: f64,
    pub max_iter: usize,
    /// Fraction of existing links held out for testing.
    pub test_fraction: f64,
    /// Sampled comparisons for the ranking statistic.
    pub auc_comparisons: usize,
    pub timing: bool,
}

impl LinkPredConfig {
    pub fn new(rank: usize) -> Self {
        Self {
            rank,
            delta: 0.3,
            alpha: 0.1,
            trials: 10,
            base_seed: 0,
            eps: 1e-10,
            max_iter: 500,
            test_fraction: 0.1,
            auc_comparisons: 5000,
            timing: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LinkPredOutcome {
    pub per_trial: Vec<(f64, f64)>,
    pub mean_precision: f64,
    pub mean_auc: f64,
    pub rows: Vec<ResultRow>,
}

/// Splits links into train/test, cross-samples the training adjacency
/// cells, completes, and scores every unknown pair; reports top-L
/// precision (L = held-out link count) and the sampled ranking statistic.
pub fn run_linkpred_experiment(
    cfg: &LinkPredConfig,
    edges: &crate::io::EdgeList,
) -> Result<LinkPredOutcome> {
    if cfg.trials == 0 {
        return Err(Error::InvalidParameter("need at least one trial".into()));
    }
    if !(cfg.test_fraction > 0.0 && cfg.test_fraction < 1.0) {
        return Err(Error::InvalidParameter("test fraction must lie in (0, 1)".into()));
    }
    let n = edges.node_count;
    if n < cfg.rank {
        return Err(Error::InvalidParameter("graph smaller than target rank".into()));
    }
    if edges.edges.len() < 2 {
        return Err(Error::InvalidParameter("need at least two links to split".into()));
    }
    let adjacency = edges.adjacency();
    let row_count = ((cfg.delta * n as f64).round() as usize).clamp(cfg.rank, n);
    let col_count = row_count;
    let budget_total = (cfg.alpha * (n * n) as f64).round() as usize;
    let budget_rows = budget_total / 2;
    let budget_cols = budget_total - budget_rows;

    let trials: Vec<Result<(f64, f64, f64)>> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = seeded(cfg.base_seed + trial as u64);
            let mut links = edges.edges.clone();
            links.shuffle(&mut rng);
            let test_count = ((cfg.test_fraction * links.len() as f64).ceil() as usize)
                .clamp(1, links.len() - 1);
            let (test_links, train_links) = links.split_at(test_count);
            let train_set: HashSet<(usize, usize)> = train_links.iter().copied().collect();

            // training cells: both orientations of every training link
            let mut train_cells: Vec<(usize, usize)> = Vec::with_capacity(2 * train_links.len());
            for &(i, j) in train_links {
                train_cells.push((i, j));
                if !edges.directed && i != j {
                    train_cells.push((j, i));
                }
            }
            train_cells.sort_unstable();

            let rows = exact_indices(n, row_count, &mut rng)?;
            let cols = exact_indices(n, col_count, &mut rng)?;
            let (omega_rows, omega_cols) = cross_restricted_training(
                &adjacency,
                &train_cells,
                &rows,
                &cols,
                budget_rows,
                budget_cols,
                &mut rng,
            )?;
            let cs = CrossSample::new(
                rows.indices.clone(),
                cols.indices.clone(),
                rows.draws,
                cols.draws,
                omega_rows,
                omega_cols,
            )?;
            let mut config = IcurcConfig::new(cfg.rank);
            config.eps = cfg.eps;
            config.max_iter = cfg.max_iter;
            let started = Instant::now();
            let (factors, _) = icurc::solve(&cs, &config)?;
            let seconds = started.elapsed().as_secs_f64();

            // candidates: all unordered pairs that are not training links
            let mut candidate_pairs: Vec<(usize, usize)> = Vec::new();
            for i in 0..n {
                for j in (i + 1)..n {
                    if !train_set.contains(&(i, j)) {
                        candidate_pairs.push((i, j));
                    }
                }
            }
            let mut positions = Vec::with_capacity(2 * candidate_pairs.len());
            for &(i, j) in &candidate_pairs {
                positions.push((i, j));
                positions.push((j, i));
            }
            let values = icurc::evaluate_entries(&factors, &positions)?;
            let scored: Vec<((usize, usize), f64)> = candidate_pairs
                .iter()
                .enumerate()
                .map(|(k, &pair)| (pair, 0.5 * (values[2 * k] + values[2 * k + 1])))
                .collect();

            let test_set: HashSet<(usize, usize)> = test_links.iter().copied().collect();
            let precision = metrics::precision_at_l(&scored, &test_set, test_set.len())?;
            let mut missing = Vec::with_capacity(test_set.len());
            let mut nonexistent = Vec::with_capacity(scored.len());
            for &(pair, score) in &scored {
                if test_set.contains(&pair) {
                    missing.push(score);
                } else {
                    nonexistent.push(score);
                }
            }
            let auc = metrics::auc_sampled(&missing, &nonexistent, cfg.auc_comparisons, &mut rng)?;
            Ok((precision, auc, seconds))
        })
        .collect();

    let mut per_trial = Vec::with_capacity(cfg.trials);
    let mut rows_out = Vec::new();
    let (mut prec_sum, mut auc_sum) = (0.0, 0.0);
    for (trial, t) in trials.into_iter().enumerate() {
        let (precision, auc, seconds) = t?;
        per_trial.push((precision, auc));
        prec_sum += precision;
        auc_sum += auc;
        for (metric, value) in [("precision", precision), ("auc", auc)] {
            rows_out.push(ResultRow {
                experiment: "linkpred".into(),
                dataset: "graph".into(),
                alpha: cfg.alpha,
                delta: cfg.delta,
                p: 0.0,
                rank: cfg.rank,
                seed: cfg.base_seed + trial as u64,
                metric: metric.into(),
                value,
                seconds: if cfg.timing { seconds } else { 0.0 },
            });
        }
    }
    Ok(LinkPredOutcome {
        mean_precision: prec_sum / cfg.trials as f64,
        mean_auc: auc_sum / cfg.trials as f64,
        per_trial,
        rows: rows_out,
    })
}
