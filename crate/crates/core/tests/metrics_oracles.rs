mod common;

use common::{pairwise_auc, sorted_rank_metrics};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use setgrl_core::metrics::{auc, hits_at, mrr, RankedQueryScores};

fn random_cases(rng: &mut ChaCha8Rng, count: usize) -> Vec<(f64, Vec<f64>)> {
    (0..count)
        .map(|_| {
            let levels = rng.random_range(2..20) as f64;
            let count = rng.random_range(1..30);
            let mut draw = || (rng.random_range(0.0..1.0f64) * levels).floor() / levels;
            let pos = draw();
            let negs = (0..count).map(|_| draw()).collect();
            (pos, negs)
        })
        .collect()
}

#[test]
fn ranking_metrics_match_sort_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        let cases = random_cases(&mut rng, 100);
        let batch: Vec<RankedQueryScores> = cases
            .iter()
            .map(|(p, n)| RankedQueryScores::new(*p, n.clone()))
            .collect();
        for p in [1, 3, 10] {
            let (oracle_mrr, oracle_hits) = sorted_rank_metrics(&cases, p);
            assert_eq!(mrr(&batch).unwrap(), oracle_mrr);
            assert_eq!(hits_at(&batch, p).unwrap(), oracle_hits);
        }
    }
}

#[test]
fn auc_matches_pairwise_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..200 {
        let len = rng.random_range(2..300);
        let scores: Vec<f64> = (0..len).map(|_| rng.random_range(0..25) as f64).collect();
        let mut labels: Vec<bool> = (0..len).map(|_| rng.random_bool(0.3)).collect();
        labels[0] = true;
        labels[1] = false;
        let got = auc(&scores, &labels).unwrap();
        assert!((got - pairwise_auc(&scores, &labels)).abs() <= 1e-12);
    }
}

#[test]
fn hand_cases() {
    let best = [RankedQueryScores::new(5.0, vec![1.0, 2.0, 3.0])];
    assert_eq!(mrr(&best).unwrap(), 1.0);
    assert_eq!(hits_at(&best, 1).unwrap(), 1.0);
    assert_eq!(
        auc(&[0.3; 6], &[true, false, true, false, false, true]).unwrap(),
        0.5
    );
}
