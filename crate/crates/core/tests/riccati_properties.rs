mod common;

use proptest::prelude::*;
use slq_core::fem::FemSpace;
use slq_core::riccati::{brute_force_lq_value, solve_riccati, DenseStorage, RiccatiScheme};
use slq_core::stochastics::TimeGrid;

fn scheme() -> impl Strategy<Value = RiccatiScheme> {
    prop_oneof![Just(RiccatiScheme::V1), Just(RiccatiScheme::V2)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn iterates_are_symmetric_and_psd(
        scheme in scheme(),
        n in 2usize..20,
        steps in 1usize..40,
        beta in -1.5f64..1.5,
        alpha in 0.0f64..5.0,
    ) {
        let space = FemSpace::assemble(0.0, 1.0, n).unwrap();
        let grid = TimeGrid::new(1.0, steps).unwrap();
        let ric = solve_riccati(&space, grid, beta, alpha, scheme, DenseStorage::Always).unwrap();
        for (d, p) in ric.diagonal.iter().zip(ric.dense.as_ref().unwrap()) {
            prop_assert!(d.entries.iter().all(|e| *e >= 0.0));
            prop_assert!((p - p.transpose()).amax() <= 1e-12 * (1.0 + p.amax()));
            let eig = ((p + p.transpose()) * 0.5).symmetric_eigenvalues();
            prop_assert!(eig.min() >= -1e-12 * (1.0 + p.amax()));
        }
        prop_assert!(ric.representation_gap().unwrap() <= 1e-10);
    }

    /// Larger eigenvalues damp faster, so their modes are cheaper.
    #[test]
    fn entries_do_not_increase_with_eigenvalue(
        scheme in scheme(),
        n in 2usize..40,
        steps in 1usize..64,
        beta in -1.0f64..1.0,
        alpha in 0.0f64..5.0,
    ) {
        let space = FemSpace::assemble(0.0, 1.0, n).unwrap();
        let grid = TimeGrid::new(1.0, steps).unwrap();
        let ric = solve_riccati(&space, grid, beta, alpha, scheme, DenseStorage::Never).unwrap();
        for p in &ric.diagonal {
            prop_assert!(p.entries.windows(2).all(|w| w[1] <= w[0] + 1e-14));
        }
    }

    #[test]
    fn value_function_identity(
        scheme in scheme(),
        dim in 1usize..4,
        steps in 2usize..5,
        beta in -1.0f64..1.0,
        alpha in 0.0f64..3.0,
        z in prop::collection::vec(-1.0f64..1.0, 3),
        start_frac in 0.0f64..1.0,
    ) {
        let space = FemSpace::assemble(0.0, 1.0, dim + 1).unwrap();
        let grid = TimeGrid::new(1.0, steps).unwrap();
        let ric = solve_riccati(&space, grid, beta, alpha, scheme, DenseStorage::Never).unwrap();
        let l = ((start_frac * steps as f64) as usize).min(steps - 1);
        let z = slq_core::fem::FemFunction::from_coeffs(z[..dim].to_vec());
        let brute = brute_force_lq_value(&space, grid, beta, alpha, l, &z, scheme).unwrap();
        let value = ric.diagonal[l].quadratic_form(&z);
        prop_assert!((brute - value).abs() <= 1e-8 * value.abs().max(1e-300));
    }
}

/// `max_n ‖P_n‖` does not grow as the step is halved.
#[test]
fn uniformly_bounded_under_refinement() {
    let mut violations = Vec::new();
    for scheme in [RiccatiScheme::V1, RiccatiScheme::V2] {
        for n in [4, 8, 16] {
            for beta in [0.0, 0.5, 1.0] {
                for alpha in [0.0, 0.5, 1.0, 4.0] {
                    let space = FemSpace::assemble(0.0, 1.0, n).unwrap();
                    let norms: Vec<f64> = [16, 32, 64, 128, 256, 512]
                        .iter()
                        .map(|&steps| {
                            let grid = TimeGrid::new(1.0, steps).unwrap();
                            solve_riccati(&space, grid, beta, alpha, scheme, DenseStorage::Never)
                                .unwrap()
                                .max_norm()
                        })
                        .collect();
                    if norms.windows(2).any(|w| w[1] > w[0] + 1e-6) {
                        violations.push(format!("{scheme} n={n} beta={beta} alpha={alpha}: {norms:?}"));
                    }
                }
            }
        }
    }
    assert!(violations.is_empty(), "{}", violations.join("\n"));
}
