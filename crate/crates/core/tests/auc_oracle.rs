mod common;

use common::{pair_count_auc, rng};
use madlab::eval::{auc, ScoredSet};
use proptest::prelude::*;
use rand::Rng;

#[test]
fn equals_pair_counting_on_random_sets() {
    let mut r = rng(11);
    let mut tested = 0;
    while tested < 1000 {
        let n = r.random_range(2..=50);
        // A coarse grid produces plenty of ties.
        let grid = r.random_range(2..=20);
        let scores: Vec<f64> = (0..n).map(|_| r.random_range(0..grid) as f64 / grid as f64).collect();
        let positive: Vec<bool> = (0..n).map(|_| r.random_bool(0.4)).collect();
        if positive.iter().all(|&p| p) || !positive.iter().any(|&p| p) {
            continue;
        }
        let got = auc(ScoredSet { scores: &scores, positive: &positive }).unwrap();
        assert_eq!(got, pair_count_auc(&scores, &positive), "{scores:?} {positive:?}");
        tested += 1;
    }
}

#[test]
fn spec_examples() {
    let s = [0.1, 0.4, 0.35, 0.8];
    let p = [false, false, true, true];
    assert_eq!(auc(ScoredSet { scores: &s, positive: &p }).unwrap(), 0.75);
    let flat = [0.3; 6];
    let p = [true, false, true, false, false, true];
    assert_eq!(auc(ScoredSet { scores: &flat, positive: &p }).unwrap(), 0.5);
}

fn scored_set() -> impl Strategy<Value = (Vec<f64>, Vec<bool>)> {
    (2usize..40).prop_flat_map(|n| {
        (
            prop::collection::vec(-100.0f64..100.0, n),
            prop::collection::vec(any::<bool>(), n),
        )
    })
    .prop_filter("both classes", |(_, p)| p.iter().any(|&x| x) && !p.iter().all(|&x| x))
}

proptest! {
    #[test]
    fn invariant_under_increasing_transforms((scores, positive) in scored_set()) {
        let base = auc(ScoredSet { scores: &scores, positive: &positive }).unwrap();
        let shifted: Vec<f64> = scores.iter().map(|s| (s / 50.0).exp() * 3.0 + 1.0).collect();
        let t = auc(ScoredSet { scores: &shifted, positive: &positive }).unwrap();
        prop_assert_eq!(base, t);
    }

    #[test]
    fn flipping_classes_complements((scores, positive) in scored_set()) {
        let a = auc(ScoredSet { scores: &scores, positive: &positive }).unwrap();
        let flipped: Vec<bool> = positive.iter().map(|p| !p).collect();
        let b = auc(ScoredSet { scores: &scores, positive: &flipped }).unwrap();
        prop_assert!((a + b - 1.0).abs() < 1e-12);
    }
}
