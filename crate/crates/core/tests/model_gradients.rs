mod common;

use common::{analytic_gradient, gradient_case, max_relative_error, numeric_gradient};
use setgrl_core::model::Aggr;

#[test]
fn analytic_matches_finite_differences() {
    for aggr in [Aggr::Mean, Aggr::Attention] {
        for seed in 0..8 {
            let (params, batch) = gradient_case(seed, aggr);
            let a = analytic_gradient(&params, &batch);
            let n = numeric_gradient(&params, &batch, 1e-5);
            let err = max_relative_error(&a, &n, 1e-7);
            assert!(err <= 1e-4, "{aggr:?} seed {seed}: relative error {err}");
        }
    }
}
