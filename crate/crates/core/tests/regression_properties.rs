mod common;

use common::draws;
use proptest::prelude::*;
use slq_core::regression::{build_partition, fit, fit_vector, SampleSet};

fn points(stream: u64, m: usize, d: usize) -> Vec<Vec<f64>> {
    draws(stream, m * d, 1.0).chunks_exact(d).map(|c| c.to_vec()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn power_of_two_cells_are_balanced(k in 0u32..6, per in 1usize..20, d in 1usize..4, stream in 0u64..1000) {
        let cells = 1usize << k;
        let xs = points(stream, cells * per, d);
        let part = build_partition(&xs, cells).unwrap();
        prop_assert_eq!(part.n_cells(), cells);
        let mut counts = vec![0usize; cells];
        for x in &xs {
            counts[part.locate(x)] += 1;
        }
        prop_assert!(counts.iter().all(|&c| c == per), "{:?}", counts);
    }

    #[test]
    fn every_query_has_one_cell(cells in 1usize..40, d in 1usize..4, stream in 0u64..1000) {
        let xs = points(stream, 400, d);
        let part = build_partition(&xs, cells).unwrap();
        for q in points(stream + 10_000, 500, d) {
            prop_assert_eq!(part.claim_count(&q), 1);
            prop_assert!(part.locate(&q) < part.n_cells());
        }
    }

    #[test]
    fn constant_regressand_is_exact(c in -5.0f64..5.0, cells in 1usize..32, stream in 0u64..1000) {
        let xs = points(stream, 320, 2);
        let set = SampleSet::new(xs.clone(), vec![c; 320]).unwrap();
        let est = fit(&build_partition(&xs, cells).unwrap(), &set).unwrap();
        for q in points(stream + 1, 100, 2) {
            prop_assert_eq!(est.predict(&q), c);
        }
    }
}

/// Responses independent of the regressors: every cell mean is within
/// `4σ/√(M/R)` of the true mean.
#[test]
fn independent_response_recovers_its_mean() {
    let (m, cells, sigma) = (4096, 16, 0.5);
    for (level, theta) in [0.0, 1.5, -2.0].into_iter().enumerate() {
        let xs = points(50 + level as u64, m, 3);
        let noise = draws(90 + level as u64, m, sigma * 3f64.sqrt());
        let ys: Vec<Vec<f64>> = noise.iter().map(|e| vec![theta + e, 2.0 * theta - e]).collect();
        let part = build_partition(&xs, cells).unwrap();
        let est = fit_vector(&part, &xs, &ys).unwrap();
        let bound = 4.0 * sigma / ((m / cells) as f64).sqrt();
        for mean in est.cell_means.iter().flatten() {
            assert!((mean[0] - theta).abs() <= bound, "{mean:?}");
            assert!((mean[1] - 2.0 * theta).abs() <= bound, "{mean:?}");
        }
    }
}
