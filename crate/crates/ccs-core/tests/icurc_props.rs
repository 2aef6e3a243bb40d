//! Solver identities against the dense reference implementation and the
//! structural invariants of the iteration.

mod common;

use ccs_core::icurc::{self, IcurcConfig, StepSize};
use ccs_core::linalg::{cur_reconstruct, CURFactors};
use ccs_core::matrix::DenseMatrix;
use ccs_core::sampling::{ccs_sample, ccs_sample_with_indices, IndexSample};
use common::{
    dense_reference_residual, dense_reference_step, gaussian_lowrank, rng,
    singular_values_by_gram,
};

#[test]
fn factor_iteration_matches_dense_reference_for_twenty_steps() {
    for seed in 0..5 {
        let mut generator = rng(300 + seed);
        let n = 30;
        let r = 2;
        let x = gaussian_lowrank(n, n, r, &mut generator);
        let cs = ccs_sample(&x, 12, 12, 0.6, &mut generator).unwrap();
        let steps = icurc::default_step_sizes(&cs).unwrap();

        let mut config = IcurcConfig::new(r);
        config.step_rows = StepSize::Fixed(steps.0);
        config.step_cols = StepSize::Fixed(steps.1);
        config.step_core = StepSize::Fixed(steps.2);

        let mut factors = CURFactors::zeros(
            n,
            n,
            cs.row_indices().to_vec(),
            cs.col_indices().to_vec(),
        );
        let mut dense = DenseMatrix::zeros(n, n);
        for k in 0..20 {
            factors = icurc::step(&cs, &factors, &config).unwrap();
            dense = dense_reference_step(&cs, &dense, r, steps);
            let implied = cur_reconstruct(&factors).unwrap();
            let dev = implied.sub(&dense).max_abs();
            let scale = dense.max_abs().max(1.0);
            assert!(
                dev <= 1e-9 * scale,
                "seed {seed} iterate {k}: deviation {dev:.3e}"
            );
            // residuals agree too
            let e_factor = icurc::residual(&cs, &factors).unwrap();
            let e_dense = dense_reference_residual(&cs, &dense);
            assert!((e_factor - e_dense).abs() <= 1e-9 * (1.0 + e_dense));
        }
    }
}

#[test]
fn every_iterate_has_rank_at_most_target() {
    let mut generator = rng(310);
    let n = 24;
    let r = 3;
    let x = gaussian_lowrank(n, n, r, &mut generator);
    let cs = ccs_sample(&x, 10, 10, 0.7, &mut generator).unwrap();
    let mut config = IcurcConfig::new(r);
    config.eps = 1e-12;
    let mut factors = CURFactors::zeros(n, n, cs.row_indices().to_vec(), cs.col_indices().to_vec());
    for _ in 0..8 {
        factors = icurc::step(&cs, &factors, &config).unwrap();
        let implied = cur_reconstruct(&factors).unwrap();
        let sv = singular_values_by_gram(&implied);
        assert!(
            sv[r] <= 1e-8 * sv[0].max(f64::MIN_POSITIVE),
            "rank overflow: sigma_{} = {} vs sigma_1 = {}",
            r + 1,
            sv[r],
            sv[0]
        );
    }
}

#[test]
fn factor_consistency_after_each_step() {
    let mut generator = rng(311);
    let n = 20;
    let x = gaussian_lowrank(n, n, 2, &mut generator);
    let cs = ccs_sample(&x, 8, 8, 0.5, &mut generator).unwrap();
    let config = IcurcConfig::new(2);
    let mut factors = CURFactors::zeros(n, n, cs.row_indices().to_vec(), cs.col_indices().to_vec());
    for _ in 0..6 {
        factors = icurc::step(&cs, &factors, &config).unwrap();
        let from_rows = factors.rows_sub().select_cols(factors.col_indices());
        let from_cols = factors.cols_sub().select_rows(factors.row_indices());
        assert_eq!(from_rows.data(), factors.core().data());
        assert_eq!(from_cols.data(), factors.core().data());
    }
}

#[test]
fn solve_reaches_ground_truth_on_adequately_sampled_instances() {
    let mut wins = 0;
    let trials = 20;
    for seed in 0..trials {
        let mut generator = rng(320 + seed);
        let n = 100;
        let r = 2;
        let x = gaussian_lowrank(n, n, r, &mut generator);
        let mut rows = rand::seq::index::sample(&mut generator, n, 30).into_vec();
        rows.sort_unstable();
        let mut cols = rand::seq::index::sample(&mut generator, n, 30).into_vec();
        cols.sort_unstable();
        let draws = (0.5 * n as f64 * 30.0).round() as usize;
        let cs = ccs_sample_with_indices(
            &x,
            IndexSample { indices: rows, draws: 30 },
            IndexSample { indices: cols, draws: 30 },
            draws,
            draws,
            &mut generator,
        )
        .unwrap();
        let mut config = IcurcConfig::new(r);
        config.eps = 1e-10;
        let (factors, trace) = icurc::solve(&cs, &config).unwrap();
        let err = ccs_core::metrics::relative_error(&x, &factors).unwrap();
        if trace.converged && err <= 1e-2 {
            wins += 1;
        }
    }
    assert!(wins >= 18, "only {wins}/{trials} instances solved");
}

#[test]
fn empirical_linear_convergence_at_reduced_scale() {
    // Concentrated sampling with ample draws: the residual ratio settles
    // below one after the burn-in.
    let mut ratios = Vec::new();
    for seed in 0..3 {
        let mut generator = rng(330 + seed);
        let n = 300;
        let r = 5;
        let x = gaussian_lowrank(n, n, r, &mut generator);
        let width = ccs_core::experiments::concentration_width(n, r, 0.5);
        let mut rows = rand::seq::index::sample(&mut generator, n, width).into_vec();
        rows.sort_unstable();
        let mut cols = rand::seq::index::sample(&mut generator, n, width).into_vec();
        cols.sort_unstable();
        let samples = (0.15 * (n * n) as f64) as usize;
        let cs = ccs_sample_with_indices(
            &x,
            IndexSample { indices: rows, draws: width },
            IndexSample { indices: cols, draws: width },
            samples / 2,
            samples - samples / 2,
            &mut generator,
        )
        .unwrap();
        let mut config = IcurcConfig::new(r);
        config.eps = 1e-10;
        let (_, trace) = icurc::solve(&cs, &config).unwrap();
        assert!(trace.converged, "seed {seed} did not converge");
        let e = &trace.residuals;
        for k in 5..e.len() - 1 {
            if e[k] > 0.0 && e[k + 1] > 0.0 {
                ratios.push(e[k + 1] / e[k]);
            }
        }
    }
    let geo_mean = (ratios.iter().map(|r| r.ln()).sum::<f64>() / ratios.len() as f64).exp();
    assert!(geo_mean < 0.95, "geometric mean ratio {geo_mean}");
}

#[test]
fn core_unobserved_is_flagged_and_survivable() {
    // Cross observations that never land on the intersection: the core
    // update has no signal, which the trace reports.
    let n = 10;
    let x = DenseMatrix::from_fn(n, n, |i, j| ((i + 1) * (j + 1)) as f64);
    let rows = vec![0usize];
    let cols = vec![1usize];
    let mut row_entries = Vec::new();
    for j in 2..n {
        row_entries.push(ccs_core::sampling::Observation {
            row: 0,
            col: j,
            value: x.get(0, j),
            multiplicity: 1,
        });
    }
    let mut col_entries = Vec::new();
    for i in 2..n {
        col_entries.push(ccs_core::sampling::Observation {
            row: i,
            col: 1,
            value: x.get(i, 1),
            multiplicity: 1,
        });
    }
    let cs = ccs_core::sampling::CrossSample::new(
        rows,
        cols,
        1,
        1,
        ccs_core::sampling::ObservationMultiset::new(n, n, row_entries).unwrap(),
        ccs_core::sampling::ObservationMultiset::new(n, n, col_entries).unwrap(),
    )
    .unwrap();
    let mut config = IcurcConfig::new(1);
    config.max_iter = 5;
    let (_, trace) = icurc::solve(&cs, &config).unwrap();
    assert!(trace.core_unobserved);
}
