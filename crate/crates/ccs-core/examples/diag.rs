use ccs_core::icurc::{self, IcurcConfig};
use ccs_core::sampling::{ccs_sample_with_indices, IndexSample, overall_rate};
use ccs_core::synth::synth_lowrank;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    for seed in 0..3u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(330 + seed);
        let n = 300;
        let r = 5;
        let x = synth_lowrank(n, r, &mut rng).unwrap();
        let width = ccs_core::experiments::concentration_width(n, r, 0.5);
        let mut rows = rand::seq::index::sample(&mut rng, n, width).into_vec();
        rows.sort_unstable();
        let mut cols = rand::seq::index::sample(&mut rng, n, width).into_vec();
        cols.sort_unstable();
        let samples = (0.15 * (n * n) as f64) as usize;
        let cs = ccs_sample_with_indices(
            &x,
            IndexSample { indices: rows, draws: width },
            IndexSample { indices: cols, draws: width },
            samples / 2, samples - samples / 2, &mut rng,
        ).unwrap();
        let mut config = IcurcConfig::new(r);
        config.eps = 1e-10;
        let (_, trace) = icurc::solve(&cs, &config).unwrap();
        let e = &trace.residuals;
        println!("seed {seed}: width={width} p1={:.3} alpha={:.3} conv={} div={} iters={} last_e={:.2e}",
            cs.rate_rows(), overall_rate(&cs), trace.converged, trace.diverged, trace.iterations(), e.last().unwrap());
        let show: Vec<String> = e.iter().take(12).map(|v| format!("{v:.2e}")).collect();
        println!("  head: {}", show.join(" "));
    }
}
