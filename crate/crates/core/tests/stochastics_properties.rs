use proptest::prelude::*;
use slq_core::stochastics::{coarsen, sample_ensemble, sample_path, SeedSpec, TimeGrid};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn coarsening_telescopes(seed in any::<u64>(), index in 0u64..1000, k in 0u32..6, extra in 0u32..4) {
        let factor = 1usize << k;
        let grid = TimeGrid::new(1.5, factor << extra).unwrap();
        let path = sample_path(grid, SeedSpec::new(seed, index));
        let coarse = coarsen(&path, factor).unwrap();
        prop_assert_eq!(coarse.grid.steps, grid.steps / factor);
        prop_assert!((coarse.terminal_value() - path.terminal_value()).abs() < 1e-12);
        let mut sum = 0.0;
        for n in 1..=coarse.grid.steps {
            sum += coarse.dw(n);
            let fine_sum: f64 = path.increments[..n * factor].iter().sum();
            prop_assert!((sum - fine_sum).abs() < 1e-12);
        }
    }

    #[test]
    fn paths_depend_only_on_seed_and_index(seed in any::<u64>(), index in any::<u64>()) {
        let grid = TimeGrid::new(1.0, 32).unwrap();
        prop_assert_eq!(
            sample_path(grid, SeedSpec::new(seed, index)),
            sample_path(grid, SeedSpec::new(seed, index))
        );
    }
}

#[test]
fn ensemble_is_independent_of_worker_count() {
    let grid = TimeGrid::new(1.0, 64).unwrap();
    let with = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| sample_ensemble(grid, 99, 5, 300))
    };
    let one = with(1);
    assert_eq!(one, with(4));
    assert_eq!(one[7], sample_path(grid, SeedSpec::new(99, 12)));
}
