mod common;

use common::{derivative_agrees, gradient_suite, rng, FD_STEP};
use madlab::data::Label;
use madlab::losses::{mad_loss, MadBatch};
use madlab::numcore::Matrix;
use madlab::spheres::CenterSet;
use rand::Rng;

#[test]
fn finite_difference_suite() {
    let report = gradient_suite(40);
    println!("{} instances, {} skipped near ties or kinks", report.instances, report.skipped_ties);
    assert!(report.instances >= 100, "only {} instances checked", report.instances);
    assert!(
        report.failures.is_empty(),
        "{} of {} derivatives disagree:\n{}",
        report.failures.len(),
        report.derivatives,
        report.failures.join("\n")
    );
}

#[test]
fn mad_center_gradients_match_finite_differences() {
    let mut checked = 0;
    for seed in 0..40u64 {
        let mut r = rng(seed);
        let d = r.random_range(1..=6);
        let batch = r.random_range(1..=8);
        let mut c: Vec<f64> = (0..3 * d).map(|_| r.random_range(-2.0..2.0)).collect();
        let z = Matrix::from_vec(batch, d, (0..batch * d).map(|_| r.random_range(-2.0..2.0)).collect()).unwrap();
        let labels: Vec<Label> = (0..batch)
            .map(|_| [Label::Unlabeled, Label::KnownNormal, Label::KnownAbnormal][r.random_range(0..3)])
            .collect();
        let centers = Matrix::from_vec(3, d, c.clone()).unwrap();
        if z.iter_rows().any(|row| common::assignment_margin(row, &centers) < common::TIE_MARGIN) {
            continue;
        }
        let eval = |c: &[f64]| {
            let set = CenterSet::new(Matrix::from_vec(3, d, c.to_vec()).unwrap(), 0.05).unwrap();
            mad_loss(
                MadBatch {
                    embeddings: &z,
                    labels: &labels,
                    eta: 1.0,
                    n_total: 6,
                    m_total: 2,
                    eps_d: 1e-6,
                },
                &set,
            )
            .unwrap()
        };
        let analytic = eval(&c).center_gradients.into_vec();
        for (i, &a) in analytic.iter().enumerate() {
            let orig = c[i];
            c[i] = orig + FD_STEP;
            let up = eval(&c).loss;
            c[i] = orig - FD_STEP;
            let down = eval(&c).loss;
            c[i] = orig;
            let numeric = (up - down) / (2.0 * FD_STEP);
            assert!(derivative_agrees(a, numeric), "seed {seed} coord {i}: {a} vs {numeric}");
        }
        checked += 1;
    }
    assert!(checked >= 20);
}
