//! Oracles shared by the integration tests and the acceptance runner.
#![allow(dead_code)]

use madlab::data::Label;
use madlab::losses::{info_nce_loss, mad_loss, ContrastiveBatch, MadBatch};
use madlab::numcore::{squared_distance, Activation, GradientTape, LayerSpec, Matrix, Mlp};
use madlab::spheres::CenterSet;
use madlab::trainer::ExperimentConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FD_STEP: f64 = 1e-5;
pub const FD_REL_TOL: f64 = 1e-4;
pub const FD_ABS_FLOOR: f64 = 1e-7;
pub const TIE_MARGIN: f64 = 1e-3;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Analytic and numeric derivative agree within the relative tolerance, or
/// both are within the absolute floor.
pub fn derivative_agrees(analytic: f64, numeric: f64) -> bool {
    let diff = (analytic - numeric).abs();
    diff <= FD_ABS_FLOOR || diff / analytic.abs().max(numeric.abs()) < FD_REL_TOL
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Matrix {
    let data = (0..rows * cols).map(|_| rng.random_range(-scale..scale)).collect();
    Matrix::from_vec(rows, cols, data).unwrap()
}

/// Central difference of `f` with respect to `values[i]`, restoring the value afterwards.
fn central_difference(values: &mut [f64], i: usize, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
    let orig = values[i];
    values[i] = orig + FD_STEP;
    let up = f(values);
    values[i] = orig - FD_STEP;
    let down = f(values);
    values[i] = orig;
    (up - down) / (2.0 * FD_STEP)
}

#[derive(Debug, Default)]
pub struct GradientReport {
    pub instances: usize,
    pub skipped_ties: usize,
    pub derivatives: usize,
    pub failures: Vec<String>,
}

impl GradientReport {
    fn check(&mut self, what: &str, analytic: f64, numeric: f64) {
        self.derivatives += 1;
        if !derivative_agrees(analytic, numeric) {
            self.failures
                .push(format!("{what}: analytic {analytic:e}, numeric {numeric:e}"));
        }
    }
}

/// Smallest |pre-activation| over all ReLU units, recomputed by hand.
/// Inputs this close to a kink are excluded like assignment ties.
pub fn min_relu_preactivation(net: &Mlp, x: &Matrix) -> f64 {
    let mut min = f64::INFINITY;
    let mut h: Vec<Vec<f64>> = x.iter_rows().map(<[f64]>::to_vec).collect();
    for layer in net.layers() {
        let w = layer.weights();
        let relu = layer.spec().activation == Activation::ReLU;
        h = h
            .iter()
            .map(|row| {
                (0..w.rows())
                    .map(|o| {
                        let a = layer.bias()[o] + w.row(o).iter().zip(row).map(|(p, q)| p * q).sum::<f64>();
                        if relu {
                            min = min.min(a.abs());
                            a.max(0.0)
                        } else {
                            a
                        }
                    })
                    .collect()
            })
            .collect();
    }
    min
}

/// Random MLP (1–3 layers, widths ≤ 16, batch ≤ 8) under the scalar loss
/// `Σ out ⊙ G`. Checks every parameter and every input coordinate.
pub fn check_mlp_instance(seed: u64, report: &mut GradientReport) {
    let mut r = rng(seed);
    let depth = r.random_range(1..=3);
    let mut dims = vec![r.random_range(1..=16)];
    for _ in 0..depth {
        dims.push(r.random_range(1..=16));
    }
    let acts = [Activation::ReLU, Activation::Identity];
    let specs: Vec<LayerSpec> = dims
        .windows(2)
        .map(|w| LayerSpec::new(w[0], w[1], acts[r.random_range(0..2)]).unwrap())
        .collect();
    let mut net = Mlp::init(&specs, &mut r).unwrap();
    // Zero biases put dead-ReLU rows exactly on the next layer's kink, where
    // no derivative exists; random biases keep instances at generic points.
    for (k, block) in net.params_mut().into_iter().enumerate() {
        if k % 2 == 1 {
            block.iter_mut().for_each(|b| *b = r.random_range(-0.5..0.5));
        }
    }
    let batch = r.random_range(1..=8);
    let mut x = random_matrix(&mut r, batch, dims[0], 2.0);
    let g = random_matrix(&mut r, batch, *dims.last().unwrap(), 1.0);
    if min_relu_preactivation(&net, &x) < TIE_MARGIN {
        report.skipped_ties += 1;
        return;
    }
    let loss = |net: &Mlp, x: &Matrix| -> f64 {
        let out = net.forward(x, None).unwrap();
        out.as_slice().iter().zip(g.as_slice()).map(|(a, b)| a * b).sum()
    };

    let mut tape = GradientTape::new();
    net.forward(&x, Some(&mut tape)).unwrap();
    let back = net.backward(&tape, &g).unwrap();
    report.instances += 1;

    let analytic: Vec<Vec<f64>> = back.params.slices().iter().map(|s| s.to_vec()).collect();
    for (block, grads) in analytic.iter().enumerate() {
        for (i, &a) in grads.iter().enumerate() {
            let numeric = {
                let orig = net.params_mut()[block][i];
                net.params_mut()[block][i] = orig + FD_STEP;
                let up = loss(&net, &x);
                net.params_mut()[block][i] = orig - FD_STEP;
                let down = loss(&net, &x);
                net.params_mut()[block][i] = orig;
                (up - down) / (2.0 * FD_STEP)
            };
            report.check(&format!("mlp seed {seed} block {block} param {i}"), a, numeric);
        }
    }
    let input_grad = back.input.as_slice().to_vec();
    let (rows, cols) = x.shape();
    for (i, &a) in input_grad.iter().enumerate() {
        let numeric = central_difference(x.as_mut_slice(), i, |v| {
            loss(&net, &Matrix::from_vec(rows, cols, v.to_vec()).unwrap())
        });
        report.check(&format!("mlp seed {seed} input {i}"), a, numeric);
    }
}

/// Random contrastive batch (2–8 rows, d ≤ 16).
pub fn check_info_nce_instance(seed: u64, report: &mut GradientReport) {
    let mut r = rng(seed);
    let pairs = r.random_range(1..=4);
    let d = r.random_range(2..=16);
    let temperature = r.random_range(0.1..1.0);
    let mut z = random_matrix(&mut r, 2 * pairs, d, 1.0);
    let out = info_nce_loss(ContrastiveBatch {
        embeddings: &z,
        temperature,
    })
    .unwrap();
    report.instances += 1;
    let analytic = out.gradients.as_slice().to_vec();
    for (i, &a) in analytic.iter().enumerate() {
        let numeric = central_difference(z.as_mut_slice(), i, |v| {
            let m = Matrix::from_vec(2 * pairs, d, v.to_vec()).unwrap();
            info_nce_loss(ContrastiveBatch {
                embeddings: &m,
                temperature,
            })
            .unwrap()
            .loss
        });
        report.check(&format!("info_nce seed {seed} coord {i}"), a, numeric);
    }
}

/// Gap between the two smallest squared distances from `z` to the centers.
pub fn assignment_margin(z: &[f64], centers: &Matrix) -> f64 {
    let mut d: Vec<f64> = centers.iter_rows().map(|c| squared_distance(z, c)).collect();
    d.sort_by(f64::total_cmp);
    if d.len() < 2 {
        f64::INFINITY
    } else {
        d[1] - d[0]
    }
}

/// Random MAD batch against 3 centers (d ≤ 8, batch ≤ 8) with mixed labels.
/// Instances with a row within the tie margin are skipped.
pub fn check_mad_instance(seed: u64, report: &mut GradientReport) {
    let mut r = rng(seed);
    let d = r.random_range(1..=8);
    let batch = r.random_range(1..=8);
    let centers = random_matrix(&mut r, 3, d, 2.0);
    let mut z = random_matrix(&mut r, batch, d, 2.0);
    if z.iter_rows().any(|row| assignment_margin(row, &centers) < TIE_MARGIN) {
        report.skipped_ties += 1;
        return;
    }
    let labels: Vec<Label> = (0..batch)
        .map(|_| [Label::Unlabeled, Label::KnownNormal, Label::KnownAbnormal][r.random_range(0..3)])
        .collect();
    let eta = r.random_range(0.1..2.0);
    let set = CenterSet::new(centers, 0.05).unwrap();
    let eval = |m: &Matrix| {
        mad_loss(
            MadBatch {
                embeddings: m,
                labels: &labels,
                eta,
                n_total: 10,
                m_total: 5,
                eps_d: 1e-6,
            },
            &set,
        )
        .unwrap()
    };
    let out = eval(&z);
    report.instances += 1;
    let analytic = out.gradients.as_slice().to_vec();
    for (i, &a) in analytic.iter().enumerate() {
        let numeric = central_difference(z.as_mut_slice(), i, |v| {
            eval(&Matrix::from_vec(batch, d, v.to_vec()).unwrap()).loss
        });
        report.check(&format!("mad seed {seed} coord {i}"), a, numeric);
    }
}

/// The full finite-difference suite: `per_kind` instances of each of the
/// three gradient sources.
pub fn gradient_suite(per_kind: u64) -> GradientReport {
    let mut report = GradientReport::default();
    for s in 0..per_kind {
        check_mlp_instance(1_000 + s, &mut report);
        check_info_nce_instance(2_000 + s, &mut report);
    }
    // MAD instances may be skipped near ties; draw until `per_kind` are checked.
    let mut s = 0;
    let target = report.instances + per_kind as usize;
    while report.instances < target {
        check_mad_instance(3_000 + s, &mut report);
        s += 1;
    }
    report
}

/// AUC by exhaustive pair counting: wins plus half of ties over all
/// positive/negative pairs.
pub fn pair_count_auc(scores: &[f64], positive: &[bool]) -> f64 {
    let (mut wins, mut ties, mut pairs) = (0u64, 0u64, 0u64);
    for (i, &si) in scores.iter().enumerate() {
        if !positive[i] {
            continue;
        }
        for (j, &sj) in scores.iter().enumerate() {
            if positive[j] {
                continue;
            }
            pairs += 1;
            if si > sj {
                wins += 1;
            } else if si == sj {
                ties += 1;
            }
        }
    }
    (wins as f64 + 0.5 * ties as f64) / pairs as f64
}

/// Two-sided p-value of Student's t from statrs.
pub fn statrs_two_sided_p(t: f64, df: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, StudentsT};
    let dist = StudentsT::new(0.0, 1.0, df).unwrap();
    2.0 * dist.cdf(-t.abs())
}

/// A configuration small enough for fast end-to-end tests.
pub fn small_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    for kv in [
        "data.n_train=240",
        "data.n_val=120",
        "data.n_test=120",
        "pretrain.epochs=3",
        "pretrain.milestones=2",
        "finetune.epochs=4",
        "finetune.n_s=10",
        "replicates=2",
        "eval.knn_k=10",
    ] {
        cfg.apply_override(kv).unwrap();
    }
    cfg.validate().unwrap();
    cfg
}
